//! Uniform sampling of the parameter space against a synthetic target,
//! followed by the correlation table and the regression meta-model.

use microcal::cli::synthetic_observed;
use microcal::fitness::SimulationObjective;
use microcal::microsim::SimConfig;
use microcal::stats::{run_sampling, Analysis};
use microcal::ParameterSpace;

fn main() -> microcal::Result<()> {
    let space = ParameterSpace::default_space();
    let sim = SimConfig::tiny(1, 300);
    let mut target = space.midpoints();
    target.values_mut()[microcal::param_space::JOB_VACANCY_RATE] = 0.02;
    let observed = synthetic_observed(&sim, &target, 5)?;

    let objective = SimulationObjective::new(&sim, &observed, 2);
    let samples = run_sampling(&space, &objective, 200, 7)?;
    let analysis = Analysis::compute(&samples)?;
    print!("{}", analysis.to_text());
    if let Some((name, c)) = analysis.correlations.strongest() {
        println!("\nstrongest driver: {name} (r = {:.3})", c.pearson_r);
    }
    Ok(())
}
