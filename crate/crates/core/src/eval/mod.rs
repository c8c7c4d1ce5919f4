//! StereoSet-, SEAT- and CrowS-style bias metrics over a frozen encoder.

mod bench;
mod crows;
mod report;
mod seat;
mod stereoset;
mod suites;

use std::fmt;
use std::str::FromStr;

pub use bench::{load_crows, load_seat, load_stereoset, BLANK};
pub use crows::{crows_from_plls, crows_score, pseudo_log_likelihood, CrowsPair};
pub use report::{compare_table, EvalReport, Metric, MetricRow};
pub use seat::{effect_size, seat_effect_size, seat_scores, SeatResult, SeatSummary, SeatTest};
pub use stereoset::{candidate_score, icat, scores_from_candidates, stereoset_scores, StereoInstance, StereoScores};
pub use suites::{build_synthetic_suites, Suites};

use crate::error::{Error, Result};
use crate::model::EncoderParams;

/// Demographic label of the pooled rows in every report.
pub const OVERALL: &str = "overall";

/// Environment variable capping evaluation threads.
pub const THREADS_ENV: &str = "DROBIAS_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Stereoset,
    Seat,
    Crows,
    All,
}

impl Suite {
    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Stereoset => "stereoset",
            Suite::Seat => "seat",
            Suite::Crows => "crows",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stereoset" => Ok(Suite::Stereoset),
            "seat" => Ok(Suite::Seat),
            "crows" => Ok(Suite::Crows),
            "all" => Ok(Suite::All),
            _ => Err(Error::Config(format!(
                "unknown suite `{s}`; expected stereoset, seat, crows or all"
            ))),
        }
    }
}

/// Runs the requested metric families and collects them in one report.
pub fn evaluate(params: &EncoderParams, suites: &Suites, which: Suite, mut report: EvalReport) -> Result<EvalReport> {
    if which.includes(Suite::Stereoset) {
        report.suite_sizes.insert("stereoset".into(), suites.stereoset.len());
        report.add_stereoset(&stereoset_scores(params, &suites.stereoset)?);
    }
    if which.includes(Suite::Seat) {
        report.suite_sizes.insert("seat".into(), suites.seat.len());
        report.add_seat(&seat_scores(params, &suites.seat)?);
    }
    if which.includes(Suite::Crows) {
        report.suite_sizes.insert("crows".into(), suites.crows.len());
        report.add_crows(&crows_score(params, &suites.crows)?);
    }
    Ok(report)
}

/// Runs `f` on a pool sized by `DROBIAS_THREADS`, or the global pool when
/// the variable is unset.
pub fn with_eval_pool<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            if n == 0 {
                return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}
