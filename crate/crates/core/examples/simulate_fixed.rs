//! Runs the micro-simulation at a fixed parameter set, averages repetitions,
//! and prints a few indicator values.

use microcal::fitness::{Indicator, SimulationObjective};
use microcal::microsim::SimConfig;
use microcal::{IndicatorSeries, ParameterSpace};

fn main() -> microcal::Result<()> {
    let space = ParameterSpace::default_space();
    let mut values = space.midpoints().values().to_vec();
    for (name, v) in [
        ("ageMinHavingChild", 19.0),
        ("ageMaxHavingChild", 41.0),
        ("nbChild", 2.0),
        ("probabilityToMakeCouple", 0.0289),
        ("nbJoinTrials", 19.0),
        ("splittingProba", 0.124),
        ("probToAcceptNewResidence", 0.0608),
        ("resSatisfactMargin", 0.0),
        ("probLookingRegionalJobs", 0.0575),
        ("jobVacancyRate", 0.021),
    ] {
        values[space.index_of(name).expect("known parameter")] = v;
    }
    let params = microcal::Chromosome::new(values);
    space.ensure_valid(&params)?;

    let cfg = SimConfig::tiny(2, 500);
    let mean = SimulationObjective::new(&cfg, &IndicatorSeries::new(), 10).averaged_series(&params)?;
    println!("{} indicator entries", mean.len());
    for (key, v) in mean.iter().filter(|(k, _)| k.indicator == Indicator::BirthsDeaths && k.geo_id == 0) {
        let what = if key.subkey == 0 { "births" } else { "deaths" };
        println!("{} municipality 0 {what}: {v:.1}", key.year);
    }
    mean.write_csv(std::io::stdout().lock())?;
    Ok(())
}
