use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SeatSummary, StereoScores, OVERALL};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Lms,
    Ss,
    Icat,
    Seat,
    SeatDegenerate,
    Crows,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Lms,
        Metric::Ss,
        Metric::Icat,
        Metric::Seat,
        Metric::SeatDegenerate,
        Metric::Crows,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Lms => "lms",
            Metric::Ss => "ss",
            Metric::Icat => "icat",
            Metric::Seat => "seat",
            Metric::SeatDegenerate => "seat_degenerate",
            Metric::Crows => "crows",
        }
    }

    /// Best attainable value, or `None` for bookkeeping counts.
    pub fn ideal(self) -> Option<f64> {
        match self {
            Metric::Lms | Metric::Icat => Some(100.0),
            Metric::Ss | Metric::Crows => Some(50.0),
            Metric::Seat => Some(0.0),
            Metric::SeatDegenerate => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub demographic: String,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint: String,
    pub seed: u64,
    pub suite_sizes: BTreeMap<String, usize>,
    pub rows: Vec<MetricRow>,
}

impl EvalReport {
    pub fn new(checkpoint: impl Into<String>, seed: u64) -> Self {
        Self {
            checkpoint: checkpoint.into(),
            seed,
            ..Self::default()
        }
    }

    fn push(&mut self, demographic: &str, metric: Metric, value: f64) {
        self.rows.push(MetricRow {
            demographic: demographic.to_string(),
            metric,
            value,
        });
    }

    pub fn add_stereoset(&mut self, scores: &BTreeMap<String, StereoScores>) {
        for (d, s) in scores {
            self.push(d, Metric::Lms, s.lms);
            self.push(d, Metric::Ss, s.ss);
            self.push(d, Metric::Icat, s.icat);
        }
    }

    pub fn add_seat(&mut self, scores: &BTreeMap<String, SeatSummary>) {
        for (d, s) in scores {
            self.push(d, Metric::Seat, s.mean_abs_effect);
            self.push(d, Metric::SeatDegenerate, s.degenerate as f64);
        }
    }

    pub fn add_crows(&mut self, scores: &BTreeMap<String, f64>) {
        for (d, s) in scores {
            self.push(d, Metric::Crows, *s);
        }
    }

    pub fn value(&self, demographic: &str, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.demographic == demographic && r.metric == metric)
            .map(|r| r.value)
    }

    /// Values for the `overall` rows.
    pub fn overall(&self) -> BTreeMap<Metric, f64> {
        self.rows
            .iter()
            .filter(|r| r.demographic == OVERALL)
            .map(|r| (r.metric, r.value))
            .collect()
    }

    pub fn demographics(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.demographic.as_str()) {
                out.push(&r.demographic);
            }
        }
        out.sort_by_key(|d| (*d == OVERALL, *d));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("demographic,metric,value\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.demographic, r.metric, r.value);
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let metrics: Vec<Metric> = Metric::ALL
            .into_iter()
            .filter(|m| self.rows.iter().any(|r| r.metric == *m))
            .collect();
        let mut s = format!("# Bias evaluation: {}\n\nseed: {}\n", self.checkpoint, self.seed);
        for (suite, n) in &self.suite_sizes {
            let _ = writeln!(s, "{suite}: {n} items");
        }
        s.push('\n');
        s.push_str("| demographic |");
        for m in &metrics {
            let _ = write!(s, " {m} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(metrics.len()));
        s.push('\n');
        for d in self.demographics() {
            let _ = write!(s, "| {d} |");
            for m in &metrics {
                match self.value(d, *m) {
                    Some(v) => {
                        let _ = write!(s, " {v:.2} |");
                    }
                    None => s.push_str(" n/a |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Markdown table with one row per entry; in each column every value
/// closest to the metric's ideal is bolded.
pub fn compare_table(entries: &[(String, BTreeMap<Metric, f64>)]) -> String {
    let metrics: Vec<Metric> = Metric::ALL
        .into_iter()
        .filter(|m| m.ideal().is_some() && entries.iter().any(|(_, v)| v.contains_key(m)))
        .collect();
    let best: BTreeMap<Metric, f64> = metrics
        .iter()
        .filter_map(|m| {
            let ideal = m.ideal()?;
            entries
                .iter()
                .filter_map(|(_, v)| v.get(m))
                .map(|v| (v - ideal).abs())
                .min_by(f64::total_cmp)
                .map(|d| (*m, d))
        })
        .collect();
    let mut s = String::from("| checkpoint |");
    for m in &metrics {
        let _ = write!(s, " {m} |");
    }
    s.push_str("\n|---|");
    s.push_str(&"---:|".repeat(metrics.len()));
    s.push('\n');
    for (name, values) in entries {
        let _ = write!(s, "| {name} |");
        for m in &metrics {
            match values.get(m) {
                Some(v) => {
                    let dist = (v - m.ideal().expect("filtered")).abs();
                    if dist == best[m] {
                        let _ = write!(s, " **{v:.2}** |");
                    } else {
                        let _ = write!(s, " {v:.2} |");
                    }
                }
                None => s.push_str(" n/a |"),
            }
        }
        s.push('\n');
    }
    s
}
