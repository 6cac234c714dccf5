use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitness::Objective;
use crate::param_space::{Chromosome, ParameterSpace};

pub const FITNESS_COLUMN: &str = "fitness";

/// Rows of `(chromosome, fitness)`, every chromosome valid over `space`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    space: ParameterSpace,
    rows: Vec<(Chromosome, f64)>,
}

impl SampleMatrix {
    pub fn new(space: ParameterSpace, rows: Vec<(Chromosome, f64)>) -> Result<Self> {
        for (c, f) in &rows {
            space.ensure_valid(c)?;
            if !f.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite fitness {f} in sample matrix")));
            }
        }
        Ok(Self { space, rows })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn rows(&self) -> &[(Chromosome, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, gene: usize) -> Vec<f64> {
        self.rows.iter().map(|(c, _)| c[gene]).collect()
    }

    pub fn fitness(&self) -> Vec<f64> {
        self.rows.iter().map(|(_, f)| *f).collect()
    }

    /// Header: parameter names in space order, then `fitness`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.space.names().chain([FITNESS_COLUMN]))?;
        for (c, f) in &self.rows {
            out.write_record(c.values().iter().chain([f]).map(|v| v.to_string()))?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(space: ParameterSpace, r: R, origin: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let expected: Vec<&str> = space.names().chain([FITNESS_COLUMN]).collect();
        let header = reader.headers()?.clone();
        if header.iter().ne(expected.iter().copied()) {
            return Err(Error::parse(origin, format!("header must be `{}`", expected.join(","))));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let values = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(origin, format!("row {}: {e}", i + 2)))?;
            let (fitness, genes) = values.split_last().expect("header checked");
            rows.push((Chromosome::new(genes.to_vec()), *fitness));
        }
        Self::new(space, rows).map_err(|e| Error::parse(origin, e.to_string()))
    }

    pub fn load(space: ParameterSpace, path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(space, file, path)
    }
}

/// Draws `n` chromosomes uniformly from a generator seeded with `seed`, then
/// scores them in parallel. Row order follows draw order, so the matrix is
/// the same for every thread count.
pub fn run_sampling(space: &ParameterSpace, objective: &impl Objective, n: usize, seed: u64) -> Result<SampleMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sampling needs at least 2 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Chromosome> = (0..n).map(|_| space.sample_uniform(&mut rng)).collect();
    let scores = draws.par_iter().map(|c| objective.evaluate(c).map(|v| v.f)).collect::<Result<Vec<_>>>()?;
    SampleMatrix::new(space.clone(), draws.into_iter().zip(scores).collect())
}
