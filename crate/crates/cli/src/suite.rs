//! The bundled regression scenarios run by `verify-suite`.

use crate::report::SuiteReport;
use crate::scenario::Scenario;
use crate::tasks::{run_scenario, RunOptions};
use crate::CliError;

pub const SCENARIOS: &[(&str, &str)] = &[
    ("spaces", include_str!("../scenarios/spaces.toml")),
    ("fitzpatrick", include_str!("../scenarios/fitzpatrick.toml")),
    ("conjugation", include_str!("../scenarios/conjugation.toml")),
    ("decomposition", include_str!("../scenarios/decomposition.toml")),
    ("operators", include_str!("../scenarios/operators.toml")),
    ("minnorm", include_str!("../scenarios/minnorm.toml")),
    ("antihilbert", include_str!("../scenarios/antihilbert.toml")),
    ("negative-controls", include_str!("../scenarios/negative_controls.toml")),
];

pub fn parse_all() -> Result<Vec<(&'static str, Scenario)>, CliError> {
    SCENARIOS
        .iter()
        .map(|(name, text)| {
            Scenario::parse(text).map(|s| (*name, s)).map_err(|e| match e {
                CliError::Parse(m) => CliError::Parse(format!("bundled {name}: {m}")),
                other => other,
            })
        })
        .collect()
}

pub fn verify_suite(opts: &RunOptions) -> Result<SuiteReport, CliError> {
    let reports = parse_all()?
        .iter()
        .map(|(name, sc)| run_scenario(sc, name, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SuiteReport::new(opts.seed.unwrap_or(0), reports))
}
