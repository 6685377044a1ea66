//! Experiment suites orchestrating the library operations.

pub mod identities;
pub mod convergence;
pub mod evolution;
pub mod gauge_flow;
pub mod inequalities;

use anyhow::{bail, Result};

use crate::config::RunConfig;
use crate::report::SuiteOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Identities,
    Convergence,
    Evolution,
    GaugeFlow,
    Inequalities,
}

impl std::str::FromStr for SuiteKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identities" => SuiteKind::Identities,
            "convergence" => SuiteKind::Convergence,
            "evolution" => SuiteKind::Evolution,
            "gauge_flow" => SuiteKind::GaugeFlow,
            "inequalities" => SuiteKind::Inequalities,
            other => bail!("unknown suite {other} (expected identities|convergence|evolution|gauge_flow|inequalities)"),
        })
    }
}

pub fn run_suite(cfg: &RunConfig, kind: SuiteKind) -> Result<SuiteOutcome> {
    match kind {
        SuiteKind::Identities => identities::run(cfg),
        SuiteKind::Convergence => convergence::run(cfg),
        SuiteKind::Evolution => evolution::run(cfg),
        SuiteKind::GaugeFlow => gauge_flow::run(cfg),
        SuiteKind::Inequalities => inequalities::run(cfg),
    }
}
