//! Structured check reports shared by all verifiers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A single sampled configuration, typically the worst offender.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_direction: Option<Vec<f64>>,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

/// `(x, y)` series for external plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<[f64; 2]>,
}

impl Series {
    pub fn new(name: &str, x_label: &str, y_label: &str) -> Self {
        Series {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.x_label, self.y_label);
        for [x, y] in &self.points {
            let _ = writeln!(s, "{x:.17e},{y:.17e}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case", deny_unknown_fields)]
pub enum Verdict {
    Pass,
    Fail,
    /// A trapped-submanifold audit whose hypotheses hold and whose strict
    /// subharmonicity certificate succeeded.
    Obstructed,
    /// Not applicable: the listed hypotheses fail. Not a failure of the run.
    HypothesisFailed { failed: Vec<String> },
}

/// Outcome of one verifier run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub schema_version: u32,
    pub check_id: String,
    pub chart: String,
    pub k: Option<f64>,
    pub q: Vec<f64>,
    pub n_samples: usize,
    pub min_margin: Option<f64>,
    pub max_margin: Option<f64>,
    pub tolerance: f64,
    pub worst_sample: Option<SampleRecord>,
    pub pass: bool,
    pub verdict: Verdict,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub series: Vec<Series>,
}

impl CheckReport {
    pub fn new(check_id: &str, chart: &str, k: Option<f64>, q: Vec<f64>, tolerance: f64) -> Self {
        CheckReport {
            schema_version: SCHEMA_VERSION,
            check_id: check_id.into(),
            chart: chart.into(),
            k,
            q,
            n_samples: 0,
            min_margin: None,
            max_margin: None,
            tolerance,
            worst_sample: None,
            pass: false,
            verdict: Verdict::Fail,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            series: Vec::new(),
        }
    }

    /// Folds a margin into the running extremes; NaN counts as `-inf`.
    pub fn record(&mut self, margin: f64, sample: impl FnOnce() -> SampleRecord) {
        self.n_samples += 1;
        let m = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        let finite = if m.is_finite() { m } else { -f64::MAX };
        if self.min_margin.map_or(true, |cur| finite < cur) {
            self.min_margin = Some(finite);
            self.worst_sample = Some(sample());
        }
        if self.max_margin.map_or(true, |cur| finite > cur) {
            self.max_margin = Some(finite);
        }
    }

    /// Sets `pass` from `min_margin >= -tolerance` (false when empty).
    pub fn finish_by_margin(&mut self) {
        self.pass = self.min_margin.is_some_and(|m| m >= -self.tolerance);
        self.verdict = if self.pass { Verdict::Pass } else { Verdict::Fail };
    }

    pub fn set_verdict(&mut self, verdict: Verdict) {
        self.pass = matches!(verdict, Verdict::Pass | Verdict::Obstructed);
        self.verdict = verdict;
    }

    pub fn diag(&mut self, key: &str, value: f64) {
        let v = if value.is_finite() { value } else { f64::MAX.copysign(value) };
        self.diagnostics.insert(key.into(), v);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Whether the run as a whole should count this report as a failure.
    pub fn is_failure(&self) -> bool {
        matches!(self.verdict, Verdict::Fail)
    }
}
