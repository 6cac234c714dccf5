//! Plain CSV artifacts written by the commands: the GA trajectory and
//! `name,value` parameter files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ga::GenerationRecord;
use crate::param_space::{Chromosome, ParameterSpace};

pub const TRAJECTORY_HEADER: [&str; 5] = ["generation", "best", "mean", "evaluations", "cache_hits"];
pub const PARAMS_HEADER: [&str; 2] = ["name", "value"];

/// One row of `trajectory.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub evaluations: usize,
    pub cache_hits: usize,
}

impl From<&GenerationRecord> for TrajectoryRow {
    fn from(r: &GenerationRecord) -> Self {
        Self {
            generation: r.generation,
            best: r.best_fitness,
            mean: r.mean_fitness,
            evaluations: r.evaluations,
            cache_hits: r.cache_hits,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str], origin: &Path) -> Result<()> {
    if reader.headers()?.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(origin, format!("header must be `{}`", expected.join(","))));
    }
    Ok(())
}

pub fn write_trajectory<W: Write>(records: &[GenerationRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for r in records.iter().map(TrajectoryRow::from) {
        out.write_record([
            r.generation.to_string(),
            r.best.to_string(),
            r.mean.to_string(),
            r.evaluations.to_string(),
            r.cache_hits.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_trajectory(records: &[GenerationRecord], path: &Path) -> Result<()> {
    write_trajectory(records, create(path)?)
}

pub fn read_trajectory<R: Read>(r: R, origin: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut reader = csv::Reader::from_reader(r);
    check_header(&mut reader, &TRAJECTORY_HEADER, origin)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |e: &dyn std::fmt::Display| Error::parse(origin, format!("row {}: {e}", i + 2));
        let int = |j: usize| record[j].trim().parse::<usize>().map_err(|e| bad(&e));
        let real = |j: usize| record[j].trim().parse::<f64>().map_err(|e| bad(&e));
        rows.push(TrajectoryRow {
            generation: int(0)?,
            best: real(1)?,
            mean: real(2)?,
            evaluations: int(3)?,
            cache_hits: int(4)?,
        });
    }
    Ok(rows)
}

pub fn load_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    read_trajectory(open(path)?, path)
}

pub fn write_params<W: Write>(space: &ParameterSpace, c: &Chromosome, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PARAMS_HEADER)?;
    for (name, v) in space.names().zip(c.values()) {
        out.write_record([name.to_string(), v.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_params(space: &ParameterSpace, c: &Chromosome, path: &Path) -> Result<()> {
    write_params(space, c, create(path)?)
}

/// A parameter file resolved against a space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub chromosome: Chromosome,
    /// Parameters absent from the file, filled with their range midpoint.
    pub defaulted: Vec<String>,
}

/// Reads a `name,value` file. Unknown or repeated names are errors; absent
/// parameters take their range midpoint and are listed in `defaulted`.
pub fn read_params<R: Read>(space: &ParameterSpace, r: R, origin: &Path) -> Result<ParamsFile> {
    let mut reader = csv::Reader::from_reader(r);
    check_header(&mut reader, &PARAMS_HEADER, origin)?;
    let mut values: Vec<Option<f64>> = vec![None; space.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let name = record[0].trim();
        let slot = space
            .index_of(name)
            .ok_or_else(|| Error::parse(origin, format!("row {line}: unknown parameter `{name}`")))?;
        if values[slot].is_some() {
            return Err(Error::parse(origin, format!("row {line}: `{name}` given twice")));
        }
        let v = record[1].trim().parse::<f64>().map_err(|e| Error::parse(origin, format!("row {line}: {e}")))?;
        values[slot] = Some(v);
    }
    let midpoints = space.midpoints();
    let defaulted = space.names().zip(&values).filter(|(_, v)| v.is_none()).map(|(n, _)| n.to_string()).collect();
    let chromosome = Chromosome::new(values.iter().enumerate().map(|(i, v)| v.unwrap_or(midpoints[i])).collect());
    space.ensure_valid(&chromosome).map_err(|e| Error::parse(origin, e.to_string()))?;
    Ok(ParamsFile { chromosome, defaulted })
}

pub fn load_params(space: &ParameterSpace, path: &Path) -> Result<ParamsFile> {
    read_params(space, open(path)?, path)
}
