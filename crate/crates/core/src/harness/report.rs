use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::Moments;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON has no infinities or NaN; those are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub mod float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(transparent)]
    struct Wrapped(#[serde(with = "self")] f64);

    pub mod vec {
        use super::Wrapped;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|&x| Wrapped(x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }

    }

    pub mod option {
        use super::Wrapped;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(Wrapped).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// One point of a plot-ready curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub series: String,
    #[serde(with = "float")]
    pub x: f64,
    #[serde(with = "float")]
    pub estimate: f64,
    #[serde(with = "float")]
    pub ci_lo: f64,
    #[serde(with = "float")]
    pub ci_hi: f64,
    /// NaN when the series has no reference curve.
    #[serde(with = "float")]
    pub bound: f64,
}

/// A check with the number it was decided on. `margin >= 0` iff it passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    #[serde(with = "float")]
    pub value: f64,
    #[serde(with = "float")]
    pub limit: f64,
    #[serde(with = "float")]
    pub margin: f64,
    pub detail: String,
}

impl Verdict {
    /// Passes iff `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        let margin = limit - value;
        Self { name: name.into(), pass: margin >= 0.0, value, limit, margin, detail: detail.into() }
    }

    /// Passes iff `value > limit`.
    pub fn above(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        let margin = value - limit;
        Self { name: name.into(), pass: margin > 0.0, value, limit, margin, detail: detail.into() }
    }

    /// Passes iff `lo <= value <= hi`; `limit` records the nearer end.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64, detail: impl Into<String>) -> Self {
        let (margin, limit) = if value - lo < hi - value { (value - lo, lo) } else { (hi - value, hi) };
        Self { name: name.into(), pass: margin >= 0.0, value, limit, margin, detail: detail.into() }
    }
}

/// Ratio of a truncation level to the typical grid increment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    #[serde(with = "float")]
    pub c: f64,
    pub n: usize,
    #[serde(with = "float")]
    pub increment_scale: f64,
    #[serde(with = "float")]
    pub ratio: f64,
    #[serde(with = "float")]
    pub required: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub index: usize,
    /// `None` when the replicate came from a path file.
    pub seed: Option<u64>,
    /// `TV^c` at each configured level, in config order.
    #[serde(with = "float::vec")]
    pub tv: Vec<f64>,
    #[serde(with = "float::option")]
    pub qv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMoments {
    pub name: String,
    /// NaN for series that do not depend on the level.
    #[serde(with = "float")]
    pub c: f64,
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub threads: usize,
    #[serde(with = "float")]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub software_version: String,
    pub config: ExperimentConfig,
    /// `"generated"` or `"paths"`.
    pub source: String,
    pub seed_scheme: String,
    pub grid: Vec<GridCheck>,
    pub replicates: Vec<ReplicateSummary>,
    pub moments: Vec<NamedMoments>,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    pub flagged: bool,
    pub pass: bool,
    /// Wall time and worker count; excluded from [`ExperimentReport::canonical_json`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON")
    }

    /// JSON without run-dependent fields; equal for equal configs.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.run = None;
        serde_json::to_string(&c).expect("reports serialize to JSON")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    pub fn series(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.series.as_str()) {
                names.push(&r.series);
            }
        }
        names
    }

    /// `x,estimate,ci_lo,ci_hi,bound` for one series; NaN cells are left empty.
    pub fn csv(&self, series: &str) -> String {
        let mut out = String::from("x,estimate,ci_lo,ci_hi,bound\n");
        for r in self.rows.iter().filter(|r| r.series == series) {
            let cells: Vec<String> = [r.x, r.estimate, r.ci_lo, r.ci_hi, r.bound]
                .iter()
                .map(|v| if v.is_nan() { String::new() } else { format!("{v:?}") })
                .collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    /// Writes one CSV per series. A single series goes to `path`; several go to
    /// `stem.<series>.ext` beside it. Returns the files written.
    pub fn write_csv(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let series = self.series();
        let mut written = Vec::new();
        for s in &series {
            let target = if series.len() == 1 {
                path.to_path_buf()
            } else {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
                path.with_file_name(format!("{stem}.{s}.{ext}"))
            };
            std::fs::write(&target, self.csv(s))?;
            written.push(target);
        }
        Ok(written)
    }

    /// One line per verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            writeln!(
                out,
                "{} {}: value {:e}, limit {:e}, margin {:e}{}",
                if v.pass { "PASS" } else { "FAIL" },
                v.name,
                v.value,
                v.limit,
                v.margin,
                if v.detail.is_empty() { String::new() } else { format!(" ({})", v.detail) }
            )
            .unwrap();
        }
        for w in &self.warnings {
            writeln!(out, "warning: {w}").unwrap();
        }
        out
    }
}
