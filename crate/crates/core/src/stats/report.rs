use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of one diagnostic, with everything needed to re-derive the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistics: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    /// Null-baseline values the thresholds were derived from.
    pub calibration: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub sample_size: usize,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
    /// Keys of the statistic and threshold shown in the aggregate table.
    pub primary: Option<(String, String)>,
}

impl TestReport {
    pub fn new(name: &str, sample_size: usize) -> Self {
        TestReport {
            name: name.to_owned(),
            statistics: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            calibration: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            sample_size,
            seed: None,
            notes: Vec::new(),
            primary: None,
        }
    }

    pub fn stat(&mut self, key: &str, value: f64) -> &mut Self {
        self.statistics.insert(key.to_owned(), value);
        self
    }

    pub fn threshold(&mut self, key: &str, value: f64) -> &mut Self {
        self.thresholds.insert(key.to_owned(), value);
        self
    }

    pub fn calibrate(&mut self, key: &str, value: f64) -> &mut Self {
        self.calibration.insert(key.to_owned(), value);
        self
    }

    pub fn primary(&mut self, stat: &str, threshold: &str) -> &mut Self {
        self.primary = Some((stat.to_owned(), threshold.to_owned()));
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn finish(&mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self.clone()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn primary_values(&self) -> (Option<f64>, Option<f64>) {
        match &self.primary {
            Some((s, t)) => (self.statistics.get(s).copied(), self.thresholds.get(t).copied()),
            None => (None, None),
        }
    }
}

#[derive(Serialize)]
struct AggregateRow<'a> {
    name: &'a str,
    statistic: Option<f64>,
    threshold: Option<f64>,
    verdict: &'a str,
    seed: Option<u64>,
}

/// One row per report: name, statistic, threshold, verdict, seed.
pub fn write_aggregate_csv<W: Write>(reports: &[TestReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let (statistic, threshold) = r.primary_values();
        w.serialize(AggregateRow {
            name: &r.name,
            statistic,
            threshold,
            verdict: r.verdict.as_str(),
            seed: r.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}
