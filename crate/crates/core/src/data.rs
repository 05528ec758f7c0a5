//! Interval-censored observations and their CSV representation.
//!
//! The CSV layout is `u,v,marker,status`. Left-censored rows carry only `u`
//! (the first assessment), right-censored rows carry only `v` (the last
//! assessment); the unused column is left blank, or may repeat the used value.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensorStatus {
    /// Event at or before the first assessment `u`.
    Left,
    /// Event in `(u, v]`.
    Interval,
    /// Event after the last assessment `v`.
    Right,
}

impl CensorStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CensorStatus::Left => "left",
            CensorStatus::Interval => "interval",
            CensorStatus::Right => "right",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "left" => Some(CensorStatus::Left),
            "interval" => Some(CensorStatus::Interval),
            "right" => Some(CensorStatus::Right),
            _ => None,
        }
    }
}

/// One subject. For left rows `v == u`, for right rows `u == v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IntervalObservation<T = f64> {
    u: T,
    v: T,
    marker: T,
    status: CensorStatus,
}

impl<T: Scalar> IntervalObservation<T> {
    pub fn left(u: T, marker: T) -> Result<Self> {
        if !(u.is_finite() && u > T::zero()) {
            return Err(Error::Data(format!(
                "left-censored time must be positive, got {u}"
            )));
        }
        Self::checked_marker(marker)?;
        Ok(Self {
            u,
            v: u,
            marker,
            status: CensorStatus::Left,
        })
    }

    pub fn interval(u: T, v: T, marker: T) -> Result<Self> {
        if !(u.is_finite() && v.is_finite() && u > T::zero() && u < v) {
            return Err(Error::Data(format!(
                "interval-censored row needs 0 < u < v, got u = {u}, v = {v}"
            )));
        }
        Self::checked_marker(marker)?;
        Ok(Self {
            u,
            v,
            marker,
            status: CensorStatus::Interval,
        })
    }

    pub fn right(v: T, marker: T) -> Result<Self> {
        if !(v.is_finite() && v > T::zero()) {
            return Err(Error::Data(format!(
                "right-censored time must be positive, got {v}"
            )));
        }
        Self::checked_marker(marker)?;
        Ok(Self {
            u: v,
            v,
            marker,
            status: CensorStatus::Right,
        })
    }

    fn checked_marker(marker: T) -> Result<()> {
        if marker.is_finite() && marker >= T::zero() {
            Ok(())
        } else {
            Err(Error::Data(format!(
                "marker must be finite and nonnegative, got {marker}"
            )))
        }
    }

    pub fn u(&self) -> T {
        self.u
    }

    pub fn v(&self) -> T {
        self.v
    }

    pub fn marker(&self) -> T {
        self.marker
    }

    pub fn status(&self) -> CensorStatus {
        self.status
    }

    /// Representative time used only to place the time-axis knots:
    /// `u` for left, the midpoint for interval and `v` for right censoring.
    pub fn knot_anchor(&self) -> T {
        match self.status {
            CensorStatus::Left => self.u,
            CensorStatus::Interval => (self.u + self.v) / T::lit(2.0),
            CensorStatus::Right => self.v,
        }
    }

    /// Largest time the observation refers to.
    pub fn max_time(&self) -> T {
        self.v
    }

    pub fn cast<U: Scalar>(&self) -> IntervalObservation<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        IntervalObservation {
            u: c(self.u),
            v: c(self.v),
            marker: c(self.marker),
            status: self.status,
        }
    }
}

/// A nonempty set of observations together with the time domain `[0, tau_t]`
/// and marker domain `[0, tau_m]` that the spline bases are built on.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    observations: Vec<IntervalObservation<T>>,
    tau_t: T,
    tau_m: T,
}

impl<T: Scalar> Dataset<T> {
    /// Domain bounds default to the observed maxima.
    pub fn new(observations: Vec<IntervalObservation<T>>) -> Result<Self> {
        Self::with_bounds(observations, None, None)
    }

    pub fn with_bounds(
        observations: Vec<IntervalObservation<T>>,
        tau_t: Option<T>,
        tau_m: Option<T>,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Data("no observations".into()));
        }
        let max_t = observations
            .iter()
            .map(|o| o.max_time())
            .fold(T::zero(), T::max);
        let max_m = observations
            .iter()
            .map(|o| o.marker)
            .fold(T::zero(), T::max);
        let tau_t = tau_t.unwrap_or(max_t);
        let tau_m = tau_m.unwrap_or(max_m);
        if !(tau_t.is_finite() && tau_t >= max_t) {
            return Err(Error::Data(format!(
                "time bound {tau_t} is below the largest observed time {max_t}"
            )));
        }
        if !(tau_m.is_finite() && tau_m >= max_m) {
            return Err(Error::Data(format!(
                "marker bound {tau_m} is below the largest observed marker {max_m}"
            )));
        }
        if tau_m <= T::zero() {
            return Err(Error::Data(
                "all markers are zero; the marker domain is empty".into(),
            ));
        }
        Ok(Self {
            observations,
            tau_t,
            tau_m,
        })
    }

    pub fn observations(&self) -> &[IntervalObservation<T>] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn tau_t(&self) -> T {
        self.tau_t
    }

    pub fn tau_m(&self) -> T {
        self.tau_m
    }

    pub fn anchors(&self) -> Vec<T> {
        self.observations.iter().map(|o| o.knot_anchor()).collect()
    }

    pub fn markers(&self) -> Vec<T> {
        self.observations.iter().map(|o| o.marker).collect()
    }

    pub fn count(&self, status: CensorStatus) -> usize {
        self.observations
            .iter()
            .filter(|o| o.status == status)
            .count()
    }

    /// Subset (with repetition) on the same domain, e.g. a bootstrap resample.
    pub fn resample(&self, indices: &[usize]) -> Self {
        Self {
            observations: indices.iter().map(|&i| self.observations[i]).collect(),
            tau_t: self.tau_t,
            tau_m: self.tau_m,
        }
    }

    /// Copy without observation `skip`, on the same domain. `None` when that
    /// would leave the dataset empty.
    pub fn leave_one_out(&self, skip: usize) -> Option<Self> {
        if self.observations.len() < 2 {
            return None;
        }
        let observations = self
            .observations
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, o)| *o)
            .collect();
        Some(Self {
            observations,
            tau_t: self.tau_t,
            tau_m: self.tau_m,
        })
    }

    /// Applies `f` to every marker and resets the marker bound to `tau_m`.
    pub fn map_markers(&self, tau_m: T, f: impl Fn(T) -> T) -> Result<Self> {
        let observations = self
            .observations
            .iter()
            .map(|o| {
                let marker = f(o.marker);
                IntervalObservation::<T>::checked_marker(marker)?;
                Ok(IntervalObservation { marker, ..*o })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_bounds(observations, Some(self.tau_t), Some(tau_m))
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            observations: self.observations.iter().map(|o| o.cast()).collect(),
            tau_t: U::lit(self.tau_t.to_f64_lossy()),
            tau_m: U::lit(self.tau_m.to_f64_lossy()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    pub tau_t: Option<f64>,
    pub tau_m: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: Dataset<f64>,
    /// Rows skipped because the marker field was blank.
    pub missing_marker_rows: usize,
}

pub fn read_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<CsvLoad> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_from(file, options)
}

pub fn read_csv_from<R: Read>(reader: R, options: &CsvOptions) -> Result<CsvLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);

    let header_err = |message: String| Error::Csv { line: 1, message };
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(header_err(e.to_string())),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Data("no observations".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                header_err(format!(
                    "missing column `{name}` (expected header u,v,marker,status)"
                ))
            })
    };
    let (iu, iv, im, is) = (
        column("u")?,
        column("v")?,
        column("marker")?,
        column("status")?,
    );

    let mut observations = Vec::new();
    let mut missing_marker_rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Csv { line, message };
        let number = |idx: usize, name: &str| -> Result<Option<f64>> {
            let field = record.get(idx).unwrap_or("");
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| fail(format!("`{name}` is not a finite number: {field:?}")))
        };

        let status_token = record.get(is).unwrap_or("");
        let status = CensorStatus::parse(status_token).ok_or_else(|| {
            fail(format!(
                "unknown status {status_token:?} (expected left, interval or right)"
            ))
        })?;
        let u = number(iu, "u")?;
        let v = number(iv, "v")?;
        let Some(marker) = number(im, "marker")? else {
            missing_marker_rows += 1;
            continue;
        };
        for t in [u, v].into_iter().flatten() {
            if t < 0.0 {
                return Err(fail(format!("negative time {t}")));
            }
        }

        let obs = match status {
            CensorStatus::Left => match (u, v) {
                (Some(u), None) => IntervalObservation::left(u, marker),
                (Some(u), Some(v)) if v == u => IntervalObservation::left(u, marker),
                _ => Err(Error::Data(
                    "left-censored rows carry only `u` (leave `v` blank or equal to `u`)".into(),
                )),
            },
            CensorStatus::Right => match (u, v) {
                (None, Some(v)) => IntervalObservation::right(v, marker),
                (Some(u), Some(v)) if u == v => IntervalObservation::right(v, marker),
                _ => Err(Error::Data(
                    "right-censored rows carry only `v` (leave `u` blank or equal to `v`)".into(),
                )),
            },
            CensorStatus::Interval => match (u, v) {
                (Some(u), Some(v)) => IntervalObservation::interval(u, v, marker),
                _ => Err(Error::Data(
                    "interval-censored rows need both `u` and `v`".into(),
                )),
            },
        };
        observations.push(obs.map_err(|e| fail(e.to_string()))?);
    }

    if observations.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    let dataset = Dataset::with_bounds(observations, options.tau_t, options.tau_m)?;
    Ok(CsvLoad {
        dataset,
        missing_marker_rows,
    })
}

pub fn write_csv<W: Write>(dataset: &Dataset<f64>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(["u", "v", "marker", "status"])
        .map_err(io)?;
    for o in dataset.observations() {
        let (u, v) = match o.status {
            CensorStatus::Left => (o.u.to_string(), String::new()),
            CensorStatus::Interval => (o.u.to_string(), o.v.to_string()),
            CensorStatus::Right => (String::new(), o.v.to_string()),
        };
        wtr.write_record([u, v, o.marker.to_string(), o.status.as_str().to_string()])
            .map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(dataset: &Dataset<f64>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(dataset, std::io::BufWriter::new(file))
}
