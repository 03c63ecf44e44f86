//! Experiment runner behind the `pshlab` binary. Every command resolves its
//! configuration, runs deterministically for a fixed seed and returns a [`Report`].

mod counter;
mod envelope_runs;
mod pipeline;
mod report;
mod sampling;

pub use report::{num, take, take_list, Band, Report, ReportRow, Table};

use crate::config::Config;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterStage {
    Build,
    Verify,
    Falsify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lipschitz,
    ConeFraction,
    Envelope,
    Regularize,
    LemmaCheck,
    Counterexample(CounterStage),
    Q2Demo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lipschitz => "lipschitz",
            Command::ConeFraction => "cone-fraction",
            Command::Envelope => "envelope",
            Command::Regularize => "regularize",
            Command::LemmaCheck => "lemma-check",
            Command::Counterexample(CounterStage::Build) => "counterexample-build",
            Command::Counterexample(CounterStage::Verify) => "counterexample-verify",
            Command::Counterexample(CounterStage::Falsify) => "counterexample-falsify",
            Command::Q2Demo => "q2-demo",
        }
    }

    pub fn known_keys(self) -> &'static [&'static str] {
        match self {
            Command::Lipschitz => sampling::LIPSCHITZ_KEYS,
            Command::ConeFraction => sampling::CONE_KEYS,
            Command::Envelope => envelope_runs::ENVELOPE_KEYS,
            Command::Q2Demo => envelope_runs::Q2_KEYS,
            Command::Regularize => pipeline::REGULARIZE_KEYS,
            Command::LemmaCheck => pipeline::LEMMA_KEYS,
            Command::Counterexample(_) => counter::COUNTER_KEYS,
        }
    }
}

/// Runs `command` on `cfg`. Unknown keys are rejected before any work is done.
pub fn run(command: Command, cfg: &Config) -> Result<Report> {
    cfg.check_keys(command.known_keys())?;
    let cfg = cfg.clone();
    match command {
        Command::Lipschitz => sampling::lipschitz(cfg),
        Command::ConeFraction => sampling::cone_fraction(cfg),
        Command::Envelope => envelope_runs::envelope(cfg),
        Command::Q2Demo => envelope_runs::q2_demo(cfg),
        Command::Regularize => pipeline::regularize(cfg),
        Command::LemmaCheck => pipeline::lemma_check(cfg),
        Command::Counterexample(stage) => counter::counterexample(stage, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn unknown_keys_are_named() {
        let cfg = Config::parse("samples = 10\nwidth = 3\n").unwrap();
        match run(Command::ConeFraction, &cfg) {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "width"),
            other => panic!("{other:?}"),
        }
    }
}
