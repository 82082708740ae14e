//! Sampled paths on a uniform time grid, and their CSV representation.
//!
//! The CSV layout is a header `t,value` (or `t,value,qv` when a quadratic
//! variation track is present) followed by one row per grid point, every
//! number printed with 17 significant digits so that values round-trip
//! exactly.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// How values between grid points are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    /// Right-continuous step function holding each value until the next grid point.
    CadlagStep,
    /// Linear interpolation between grid points.
    #[default]
    PiecewiseLinear,
}

impl std::str::FromStr for Interpretation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cadlag-step" => Ok(Self::CadlagStep),
            "piecewise-linear" => Ok(Self::PiecewiseLinear),
            other => Err(invalid(format!(
                "unknown interpretation {other:?} (expected cadlag-step or piecewise-linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    interpretation: Interpretation,
    qv: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl SampledPath {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, interpretation: Interpretation) -> Result<Self> {
        let path = Self {
            t0,
            dt,
            values,
            interpretation,
            qv: None,
            warnings: Vec::new(),
        };
        path.validate()?;
        Ok(path)
    }

    /// Path on `[0, n*dt]` with piecewise-linear interpretation; convenient in tests.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(0.0, 1.0, values, Interpretation::PiecewiseLinear)
    }

    pub fn with_qv(mut self, qv: Vec<f64>) -> Result<Self> {
        self.qv = Some(qv);
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn push_warning(&mut self, w: String) {
        self.warnings.push(w);
    }

    fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(invalid(format!("t0 must be finite and >= 0, got {}", self.t0)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be finite and > 0, got {}", self.dt)));
        }
        if self.values.is_empty() {
            return Err(invalid("path must contain at least one point"));
        }
        if let Some(index) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(qv) = &self.qv {
            if qv.len() != self.values.len() {
                return Err(invalid(format!(
                    "qv track has {} points, path has {}",
                    qv.len(),
                    self.values.len()
                )));
            }
            if qv[0] != 0.0 {
                return Err(invalid("qv track must start at 0"));
            }
            if let Some(index) = qv.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            if let Some(i) = qv.windows(2).position(|w| w[1] < w[0]) {
                return Err(invalid(format!("qv track decreases at grid index {}", i + 1)));
            }
        }
        Ok(())
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    pub fn set_interpretation(&mut self, interpretation: Interpretation) {
        self.interpretation = interpretation;
    }

    pub fn qv(&self) -> Option<&[f64]> {
        self.qv.as_deref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Number of grid points (`n + 1`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a valid path has at least one point.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of grid intervals `n`.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    /// Length of the time window, `n * dt`.
    pub fn horizon(&self) -> f64 {
        self.intervals() as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Quadratic variation accumulated over the whole window, if tracked.
    pub fn final_qv(&self) -> Option<f64> {
        self.qv.as_ref().map(|q| q[q.len() - 1])
    }

    /// Sub-path on grid indices `start..=end`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.len() {
            return Err(invalid(format!(
                "window {start}..={end} out of range for {} points",
                self.len()
            )));
        }
        let qv = self.qv.as_ref().map(|q| {
            let base = q[start];
            q[start..=end].iter().map(|v| v - base).collect()
        });
        Ok(Self {
            t0: self.time(start),
            dt: self.dt,
            values: self.values[start..=end].to_vec(),
            interpretation: self.interpretation,
            qv,
            warnings: Vec::new(),
        })
    }

    /// Same grid, values replaced (qv track dropped).
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.t0,
            self.dt,
            self.values.iter().map(|&v| f(v)).collect(),
            self.interpretation,
        )
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            t0: self.t0,
            dt: self.dt,
            values,
            interpretation: self.interpretation,
            qv: None,
            warnings: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 48 + 16);
        s.push_str(if self.qv.is_some() { "t,value,qv\n" } else { "t,value\n" });
        for (i, v) in self.values.iter().enumerate() {
            let _ = write!(s, "{:.16e},{:.16e}", self.time(i), v);
            if let Some(q) = &self.qv {
                let _ = write!(s, ",{:.16e}", q[i]);
            }
            s.push('\n');
        }
        s
    }

    /// Parses the CSV layout written by [`SampledPath::write_csv`].
    ///
    /// The time column must form a uniform grid; `dt` is recovered from the
    /// first and last rows and every row is checked against it.
    pub fn read_csv<R: Read>(input: R, interpretation: Interpretation) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let csv_err = |e: csv::Error| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    Error::Csv { line, msg: format!("expected {expected_len} fields, got {len}") }
                }
                kind => Error::Csv { line, msg: format!("{kind:?}") },
            }
        };
        let header = rdr.headers().map_err(csv_err)?.clone();
        let header_line = header.position().map_or(1, |p| p.line() as usize);
        let has_qv = match header.iter().collect::<Vec<_>>().as_slice() {
            [] | [""] => return Err(Error::Csv { line: 1, msg: "empty input".into() }),
            ["t", "value"] => false,
            ["t", "value", "qv"] => true,
            _ => {
                let got = header.iter().collect::<Vec<_>>().join(",");
                return Err(Error::Csv {
                    line: header_line,
                    msg: format!("expected header `t,value` or `t,value,qv`, got {got:?}"),
                });
            }
        };
        let mut times = Vec::new();
        let mut lines = Vec::new();
        let mut values = Vec::new();
        let mut qv = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(header_line + 1, |p| p.line() as usize);
            let parse = |s: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| Error::Csv { line, msg: format!("not a number: {s:?}") })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Csv { line, msg: format!("non-finite number: {s:?}") })
                }
            };
            times.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
            if has_qv {
                qv.push(parse(&record[2])?);
            }
            lines.push(line);
        }
        if values.is_empty() {
            return Err(Error::Csv { line: header_line, msg: "no data rows".into() });
        }
        let t0 = times[0];
        let n = times.len() - 1;
        let dt = if n == 0 { 1.0 } else { (times[n] - t0) / n as f64 };
        if n > 0 {
            if !(dt > 0.0) {
                return Err(Error::Csv { line: lines[0], msg: "time column must be increasing".into() });
            }
            for (i, &t) in times.iter().enumerate() {
                let expected = t0 + i as f64 * dt;
                if (t - expected).abs() > 1e-9 * (expected.abs() + dt) {
                    return Err(Error::Csv {
                        line: lines[i],
                        msg: format!("time {t} is off the uniform grid (expected {expected})"),
                    });
                }
            }
        }
        let path = Self::new(t0, dt, values, interpretation)
            .map_err(|e| Error::Csv { line: header_line, msg: e.to_string() })?;
        if has_qv {
            path.with_qv(qv).map_err(|e| Error::Csv { line: header_line, msg: e.to_string() })
        } else {
            Ok(path)
        }
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes(), Interpretation::PiecewiseLinear)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_paths() {
        assert!(SampledPath::from_values(vec![]).is_err());
        assert!(matches!(
            SampledPath::from_values(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(SampledPath::new(0.0, 0.0, vec![1.0], Interpretation::CadlagStep).is_err());
        let p = SampledPath::from_values(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(p.clone().with_qv(vec![0.0, 2.0, 1.0]).is_err());
        assert!(p.clone().with_qv(vec![0.5, 1.0, 2.0]).is_err());
        assert!(p.with_qv(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let values = vec![0.0, 0.1, -1.0 / 3.0, 2.0f64.sqrt(), 1e-300];
        let path = SampledPath::new(0.5, 1e-5, values, Interpretation::PiecewiseLinear)
            .unwrap()
            .with_qv(vec![0.0, 1e-5, 2e-5, 3e-5, 4e-5])
            .unwrap();
        let back = SampledPath::parse_csv(&path.to_csv_string()).unwrap();
        assert_eq!(back.values(), path.values());
        assert_eq!(back.qv(), path.qv());
        assert_eq!(back.t0(), path.t0());
        assert!((back.dt() - path.dt()).abs() < 1e-10 * path.dt());
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = SampledPath::parse_csv("t,value\n0,1\n1,x\n").unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
        let err = SampledPath::parse_csv("time,value\n0,1\n").unwrap_err();
        assert!(matches!(err, Error::Csv { line: 1, .. }));
        let err = SampledPath::parse_csv("t,value\n0,1\n1,1\n3,1\n").unwrap_err();
        assert!(matches!(err, Error::Csv { .. }));
        assert!(SampledPath::parse_csv("t,value\n0,inf\n").is_err());
        assert!(SampledPath::parse_csv("").is_err());
    }

    #[test]
    fn window_rebases_qv() {
        let p = SampledPath::from_values(vec![0.0, 1.0, 3.0, 2.0])
            .unwrap()
            .with_qv(vec![0.0, 1.0, 5.0, 6.0])
            .unwrap();
        let w = p.window(1, 3).unwrap();
        assert_eq!(w.values(), &[1.0, 3.0, 2.0]);
        assert_eq!(w.qv().unwrap(), &[0.0, 4.0, 5.0]);
        assert_eq!(w.t0(), 1.0);
    }
}
