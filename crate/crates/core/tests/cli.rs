use std::path::{Path, PathBuf};
use std::process::Command as Process;

use microcal::cli::{
    execute, load_params, load_trajectory, Command, ExperimentConfig, RunManifest, PARAMS_HEADER, TRAJECTORY_HEADER,
};
use microcal::ga::GaConfig;
use microcal::microsim::SimConfig;
use microcal::param_space::ParameterSpace;
use microcal::stats::{load_analysis_csv, SampleMatrix, ANALYSIS_HEADER};
use microcal::IndicatorSeries;
use tempfile::TempDir;

const REFERENCE_PARAMS: &str = "name,value
ageMinHavingChild,19
ageMaxHavingChild,41
nbChild,2
probabilityToMakeCouple,0.0289
nbJoinTrials,19
splittingProba,0.124
probToAcceptNewResidence,0.0608
resSatisfactMargin,0
probLookingRegionalJobs,0.0575
jobVacancyRate,0.021
";

struct Fixture {
    dir: TempDir,
    config: PathBuf,
    observed: PathBuf,
}

fn run(m: &RunManifest) -> microcal::Result<microcal::cli::Outcome> {
    execute(m, &mut std::io::sink())
}

/// Tiny config (pop 8, 5 generations, 1 municipality) plus observed data
/// simulated at the reference parameters.
fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let mut sim = SimConfig::tiny(1, 150);
    sim.steps = 4;
    let cfg = ExperimentConfig {
        sim,
        ga: GaConfig {
            population_size: 8,
            max_generations: 5,
            plateau_generations: 5,
            repetitions: 2,
            ..GaConfig::default()
        },
        space: Vec::new(),
    };
    let config = dir.path().join("config.json");
    cfg.save(&config).unwrap();
    let params = dir.path().join("reference.csv");
    std::fs::write(&params, REFERENCE_PARAMS).unwrap();

    let mut m = RunManifest::new(Command::Simulate, dir.path().join("obs"));
    m.config_path = Some(config.clone());
    m.params_path = Some(params);
    m.repetitions = Some(3);
    m.threads = Some(1);
    run(&m).unwrap();
    let observed = dir.path().join("obs/mean.csv");
    Fixture { dir, config, observed }
}

impl Fixture {
    fn manifest(&self, command: Command, out: &str) -> RunManifest {
        let mut m = RunManifest::new(command, self.dir.path().join(out));
        m.config_path = Some(self.config.clone());
        m.observed_path = Some(self.observed.clone());
        m.threads = Some(2);
        m
    }
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn calibrate_smoke_and_determinism() {
    let fx = fixture();
    let mut m = fx.manifest(Command::Calibrate, "a");
    m.master_seed = Some(11);
    run(&m).unwrap();
    let out = fx.dir.path().join("a");
    assert_eq!(header(&out.join("trajectory.csv")), TRAJECTORY_HEADER.join(","));
    assert_eq!(header(&out.join("best_params.csv")), PARAMS_HEADER.join(","));
    let trajectory = load_trajectory(&out.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory.len(), 5);
    assert!(trajectory.windows(2).all(|w| w[1].best <= w[0].best));
    let best = load_params(&ParameterSpace::default_space(), &out.join("best_params.csv")).unwrap();
    assert!(best.defaulted.is_empty());
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    for field in ["stop_reason: max_generations", "generations: 5", "cache_hits", "wall_seconds"] {
        assert!(summary.contains(field), "{field} missing from summary");
    }

    let mut again = fx.manifest(Command::Calibrate, "b");
    again.master_seed = Some(11);
    again.threads = Some(1);
    run(&again).unwrap();
    assert_eq!(
        std::fs::read(out.join("trajectory.csv")).unwrap(),
        std::fs::read(fx.dir.path().join("b/trajectory.csv")).unwrap()
    );
}

#[test]
fn missing_observed_file_is_named() {
    let fx = fixture();
    let mut m = fx.manifest(Command::Calibrate, "x");
    m.observed_path = Some(fx.dir.path().join("nope.csv"));
    let err = run(&m).unwrap_err().to_string();
    assert!(err.contains("nope.csv"), "{err}");
}

#[test]
fn simulate_mean_is_entrywise_mean_of_repetitions() {
    let fx = fixture();
    let obs = fx.dir.path().join("obs");
    let reps: Vec<IndicatorSeries> =
        (0..3).map(|i| IndicatorSeries::load(&obs.join(format!("rep_{i:03}.csv"))).unwrap()).collect();
    let mean = IndicatorSeries::load(&obs.join("mean.csv")).unwrap();
    assert_eq!(mean.len(), reps[0].len());
    for (key, v) in mean.iter() {
        let want = reps.iter().map(|r| r.get(key).unwrap()).sum::<f64>() / 3.0;
        assert!((v - want).abs() <= 1e-12 * want.abs().max(1.0), "{key:?}");
    }
    assert!(!obs.join("rep_003.csv").exists());
}

#[test]
fn simulate_rejects_zero_repetitions_and_writes_snapshots() {
    let fx = fixture();
    let mut m = fx.manifest(Command::Simulate, "sim");
    m.params_path = Some(fx.dir.path().join("reference.csv"));
    m.repetitions = Some(0);
    assert!(run(&m).unwrap_err().to_string().contains("repetitions"));

    m.repetitions = Some(2);
    m.snapshot = true;
    let outcome = run(&m).unwrap();
    assert!(outcome.summary.contains("fitness:"));
    let snapshot = std::fs::read_to_string(fx.dir.path().join("sim/world_001.jsonl")).unwrap();
    for line in snapshot.lines() {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
}

#[test]
fn sensitivity_structure_and_idempotent_analysis() {
    let fx = fixture();
    let mut m = fx.manifest(Command::Sensitivity, "sens");
    m.samples = Some(50);
    m.repetitions = Some(1);
    run(&m).unwrap();
    let out = fx.dir.path().join("sens");
    assert_eq!(header(&out.join("analysis.csv")), ANALYSIS_HEADER.join(","));
    let rows = load_analysis_csv(&out.join("analysis.csv")).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0].term, "intercept");
    let samples = SampleMatrix::load(ParameterSpace::default_space(), &out.join("samples.csv")).unwrap();
    assert_eq!(samples.len(), 50);
    assert!(std::fs::read_to_string(out.join("analysis.txt")).unwrap().contains("R^2"));

    let first = std::fs::read(out.join("analysis.csv")).unwrap();
    let mut a = fx.manifest(Command::Analyze, "sens");
    a.observed_path = None;
    run(&a).unwrap();
    assert_eq!(first, std::fs::read(out.join("analysis.csv")).unwrap());

    let mut elsewhere = fx.manifest(Command::Analyze, "re");
    elsewhere.samples_path = Some(out.join("samples.csv"));
    run(&elsewhere).unwrap();
    assert_eq!(first, std::fs::read(fx.dir.path().join("re/analysis.csv")).unwrap());
}

#[test]
fn sensitivity_needs_two_samples() {
    let fx = fixture();
    let mut m = fx.manifest(Command::Sensitivity, "one");
    m.samples = Some(1);
    assert!(run(&m).unwrap_err().to_string().contains("at least 2"));
}

#[test]
fn config_rejects_unknown_fields() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"ga": {"population": 3}}"#).unwrap();
    let err = ExperimentConfig::load(&p).unwrap_err().to_string();
    assert!(err.contains("c.json") && err.contains("population"), "{err}");
}

#[test]
fn config_round_trips_and_overrides_space() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"space": [{"name": "jobVacancyRate", "lower": 0.0, "upper": 0.1, "kind": "real"}]}"#)
        .unwrap();
    let cfg = ExperimentConfig::load(&p).unwrap();
    let space = cfg.parameter_space().unwrap();
    assert_eq!(space.params()[10].upper, 0.1);
    cfg.save(&p).unwrap();
    assert_eq!(ExperimentConfig::load(&p).unwrap(), cfg);
}

#[test]
fn selfcheck_smoke_reports_stop_reason() {
    let dir = TempDir::new().unwrap();
    let mut m = RunManifest::new(Command::Selfcheck, dir.path());
    m.plateau = Some(5);
    m.max_generations = Some(5);
    m.repetitions = Some(1);
    m.threads = Some(1);
    let first = run(&m).unwrap();
    assert!(first.summary.contains("stop_reason: "));
    assert!(first.summary.contains("jobVacancyRate"));
    let again = run(&m).unwrap();
    assert_eq!(first.summary, again.summary);
}

#[test]
fn binary_exit_codes() {
    let fx = fixture();
    let bin = env!("CARGO_BIN_EXE_microcal");
    let missing = Process::new(bin)
        .args(["calibrate", "--observed", "missing_obs.csv", "--out"])
        .arg(fx.dir.path().join("bin"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing_obs.csv"));

    let zero = Process::new(bin)
        .args(["simulate", "--repetitions", "0", "--params"])
        .arg(fx.dir.path().join("reference.csv"))
        .arg("--out")
        .arg(fx.dir.path().join("bin"))
        .output()
        .unwrap();
    assert!(!zero.status.success());

    let ok = Process::new(bin)
        .args(["calibrate", "--seed", "3", "--threads", "1", "--config"])
        .arg(&fx.config)
        .arg("--observed")
        .arg(&fx.observed)
        .arg("--out")
        .arg(fx.dir.path().join("bin"))
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(fx.dir.path().join("bin/trajectory.csv").exists());
}
