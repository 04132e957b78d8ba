//! Point clouds and weighted empirical measures.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite list of points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointCloud<T> {
    /// Builds a cloud from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("points must have dimension >= 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate in point {}", bad / dim)));
        }
        Ok(Self { dim, coords })
    }

    /// Builds a cloud from rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("point list"))?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(dim, coords)
    }

    /// One-dimensional cloud from scalars.
    pub fn from_scalars(values: &[T]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn iter(&self) -> std::slice::ChunksExact<'_, T> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Returns a copy with every point shifted by `offset`.
    pub fn translated(&self, offset: &[T]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: offset.len(),
            });
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(&x, &o)| x + o))
            .collect();
        Ok(Self { dim: self.dim, coords })
    }
}

/// A weighted empirical measure `sum_i w_i delta_{x_i}`.
///
/// Weights are non-negative and sum to one. Zero weights are allowed and
/// make the corresponding point inert.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    points: PointCloud<T>,
    weights: Vec<T>,
}

impl<T: Scalar> SampleSet<T> {
    /// Uniform weights `1/n`.
    pub fn uniform(points: PointCloud<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        let w = T::one() / T::from_count(points.len());
        let weights = vec![w; points.len()];
        Ok(Self { points, weights })
    }

    pub fn weighted(points: PointCloud<T>, weights: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        if weights.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::invalid(format!("weight {i} is negative or non-finite")));
        }
        let total: T = weights.iter().copied().sum();
        let slack = T::tol(1e-12) * T::from_count(weights.len().max(1));
        if (total - T::one()).abs() > slack {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { points, weights })
    }

    /// Rescales arbitrary non-negative weights to sum to one.
    pub fn normalized(points: PointCloud<T>, weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::invalid("weights must have a positive finite sum"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::weighted(points, weights)
    }

    /// Uniform sample set from rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Self::uniform(PointCloud::from_rows(rows)?)
    }

    /// Uniform one-dimensional sample set.
    pub fn from_scalars(values: &[T]) -> Result<Self> {
        Self::uniform(PointCloud::from_scalars(values)?)
    }

    /// The mixture `alpha * a + (1 - alpha) * b`, represented exactly by
    /// concatenating the supports.
    pub fn mixture(a: &Self, alpha: T, b: &Self) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::invalid(format!("mixture weight {alpha} outside [0, 1]")));
        }
        let mut coords = a.points.coords.clone();
        coords.extend_from_slice(&b.points.coords);
        let beta = T::one() - alpha;
        let weights = a
            .weights
            .iter()
            .map(|&w| alpha * w)
            .chain(b.weights.iter().map(|&w| beta * w))
            .collect();
        Self::weighted(PointCloud::from_flat(a.dim(), coords)?, weights)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointCloud<T> {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Iterates over `(weight, point)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (T, &[T])> + '_ {
        self.weights.iter().copied().zip(self.points.iter())
    }

    /// True when every weight equals `1/n` up to rounding.
    pub fn is_uniform(&self) -> bool {
        let target = T::one() / T::from_count(self.len());
        self.weights.iter().all(|&w| (w - target).abs() <= T::tol(1e-12))
    }

    /// Weighted coordinate mean.
    pub fn mean(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.dim()];
        for (w, p) in self.iter() {
            for (a, &x) in acc.iter_mut().zip(p) {
                *a = *a + w * x;
            }
        }
        acc
    }
}

impl SampleSet<f64> {
    /// Reads a sample set from CSV or JSON, chosen by file extension.
    ///
    /// CSV: one point per row. A header row is optional; when present and
    /// its last column is named `weight`, that column holds (unnormalised)
    /// point weights. JSON: either an array of arrays, or an object
    /// `{"points": [[..], ..], "weights": [..]}`.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let name = path.display().to_string();
        if is_json {
            parse_json(&text, &name)
        } else {
            parse_csv(&text, &name)
        }
    }
}

fn parse_err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses CSV sample text; `source` names the input in error messages.
pub fn parse_csv(text: &str, source: &str) -> Result<SampleSet<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weighted = false;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(source, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push(values),
            Err(_) if i == 0 => {
                // header row
                weighted = record
                    .iter()
                    .next_back()
                    .is_some_and(|f| f.eq_ignore_ascii_case("weight"));
            }
            Err(e) => return Err(parse_err(source, format!("line {line}: {e}"))),
        }
    }
    if rows.is_empty() {
        return Err(parse_err(source, "no data rows"));
    }
    let width = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(parse_err(
            source,
            format!(
                "row {} has {} columns, expected {width} (mixed dimensions)",
                i + 1,
                r.len()
            ),
        ));
    }
    if weighted {
        if width < 2 {
            return Err(parse_err(source, "weight column without coordinates"));
        }
        let weights = rows.iter().map(|r| r[width - 1]).collect();
        let coords = rows.iter().flat_map(|r| r[..width - 1].iter().copied()).collect();
        SampleSet::normalized(PointCloud::from_flat(width - 1, coords)?, weights)
    } else {
        SampleSet::from_rows(&rows)
    }
}

/// Parses JSON sample text (array of arrays, or `{points, weights}`).
pub fn parse_json(text: &str, source: &str) -> Result<SampleSet<f64>> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Doc {
        Rows(Vec<Vec<f64>>),
        Weighted { points: Vec<Vec<f64>>, weights: Vec<f64> },
    }
    let doc: Doc = serde_json::from_str(text).map_err(|e| parse_err(source, e.to_string()))?;
    let map_dims = |e: Error| match e {
        Error::DimensionMismatch { expected, got } => {
            parse_err(source, format!("mixed dimensions: expected {expected}, got {got}"))
        }
        other => other,
    };
    match doc {
        Doc::Rows(rows) => SampleSet::from_rows(&rows).map_err(map_dims),
        Doc::Weighted { points, weights } => {
            let cloud = PointCloud::from_rows(&points).map_err(map_dims)?;
            SampleSet::normalized(cloud, weights)
        }
    }
}
