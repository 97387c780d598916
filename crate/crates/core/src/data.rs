//! Labeled datasets: ingestion, class partitioning, priors and feature scaling.
//!
//! Class ids are zero-based inside the library (`0..n_classes`). The external
//! id reported in label maps and JSON output is `index + 1`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Dense row-major matrix of `n` points in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::LengthMismatch {
                what: "point buffer",
                expected: n * d,
                found: data.len(),
            });
        }
        Ok(Self { n, d, data })
    }

    /// Builds a matrix from row slices; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::LengthMismatch {
                    what: "row",
                    expected: d,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            n: rows.len(),
            d,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies the given columns, in the given order, into a new matrix.
    pub fn select_columns(&self, columns: &[usize]) -> Points {
        let mut data = Vec::with_capacity(self.n * columns.len());
        for r in self.rows() {
            data.extend(columns.iter().map(|&j| r[j]));
        }
        Points {
            n: self.n,
            d: columns.len(),
            data,
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Points {
        let mut data = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Points {
            n: rows.len(),
            d: self.d,
            data,
        }
    }
}

/// Selects the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Digits select by 0-based index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(s) => write!(f, "{s:?}"),
            LabelColumn::Index(i) => write!(f, "#{i}"),
        }
    }
}

/// Points with class labels in `0..n_classes`, every class nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Points,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Option<Vec<String>>,
    label_names: Vec<String>,
}

impl LabeledDataset {
    /// Validates and wraps points and zero-based labels. Class names default
    /// to the external ids `"1".."λ"`.
    pub fn new(points: Points, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let names = (1..=n_classes).map(|i| i.to_string()).collect();
        Self::with_names(points, labels, n_classes, None, names)
    }

    pub fn with_names(
        points: Points,
        labels: Vec<usize>,
        n_classes: usize,
        feature_names: Option<Vec<String>>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("dataset", "no points"));
        }
        if points.dim() == 0 {
            return Err(Error::invalid("dataset", "zero features"));
        }
        if labels.len() != points.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                expected: points.len(),
                found: labels.len(),
            });
        }
        if label_names.len() != n_classes {
            return Err(Error::LengthMismatch {
                what: "label names",
                expected: n_classes,
                found: label_names.len(),
            });
        }
        if let Some(names) = &feature_names {
            if names.len() != points.dim() {
                return Err(Error::LengthMismatch {
                    what: "feature names",
                    expected: points.dim(),
                    found: names.len(),
                });
            }
        }
        let mut seen = vec![false; n_classes];
        for &l in &labels {
            if l >= n_classes {
                return Err(Error::invalid(
                    "labels",
                    format!("label {} outside 1..={n_classes}", l + 1),
                ));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(
                "labels",
                format!("class {} has no points", missing + 1),
            ));
        }
        for (i, r) in points.rows().enumerate() {
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: feature_names
                        .as_ref()
                        .map_or_else(|| j.to_string(), |n| n[j].clone()),
                });
            }
        }
        Ok(Self {
            points,
            labels,
            n_classes,
            feature_names,
            label_names,
        })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Original label text per class index.
    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// `{original_label: id}` with ids starting at 1.
    pub fn label_map(&self) -> BTreeMap<String, usize> {
        self.label_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i + 1))
            .collect()
    }

    /// Restricts the dataset to a subset of feature columns.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("features", "empty selection"));
        }
        if let Some(&j) = columns.iter().find(|&&j| j >= self.dim()) {
            return Err(Error::invalid(
                "features",
                format!("column {j} out of range for d={}", self.dim()),
            ));
        }
        Ok(Self {
            points: self.points.select_columns(columns),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            feature_names: self
                .feature_names
                .as_ref()
                .map(|n| columns.iter().map(|&j| n[j].clone()).collect()),
            label_names: self.label_names.clone(),
        })
    }

    fn with_points(&self, points: Points) -> Self {
        Self {
            points,
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

/// Orders label strings numerically when they all parse as numbers,
/// lexicographically otherwise.
fn sort_labels(labels: &mut [String]) {
    let numeric: Option<Vec<f64>> = labels.iter().map(|s| s.trim().parse().ok()).collect();
    match numeric {
        Some(_) => labels.sort_by(|a, b| {
            let (x, y): (f64, f64) = (a.trim().parse().unwrap(), b.trim().parse().unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        }),
        None => labels.sort(),
    }
}

/// Reads a headed CSV file. The label column may hold arbitrary text; every
/// other column must parse as a finite real.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label)
}

/// [`load_csv`] over any reader.
pub fn read_csv(reader: impl std::io::Read, label: &LabelColumn) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label {
        LabelColumn::Name(n) => header.iter().position(|h| h == n),
        LabelColumn::Index(i) => (*i < header.len()).then_some(*i),
    }
    .ok_or_else(|| Error::MissingLabelColumn(label.to_string()))?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(Error::invalid("csv", "no feature columns"));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for &j in &feature_cols {
            let cell = &rec[j];
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: row + 1,
                column: header[j].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: header[j].clone(),
                });
            }
            values.push(v);
        }
        raw_labels.push(rec[label_idx].to_string());
    }
    if raw_labels.is_empty() {
        return Err(Error::invalid("csv", "no data rows"));
    }

    let mut distinct = raw_labels.clone();
    sort_labels(&mut distinct);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewClasses(distinct.len()));
    }
    let ids: BTreeMap<&str, usize> = distinct
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let labels = raw_labels.iter().map(|s| ids[s.as_str()]).collect();
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    let points = Points::new(raw_labels.len(), feature_cols.len(), values)?;
    LabeledDataset::with_names(points, labels, distinct.len(), Some(names), distinct)
}

/// Writes a dataset in the format [`load_csv`] reads, label column last and
/// named `label`.
pub fn write_csv(ds: &LabeledDataset, writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match ds.feature_names() {
        Some(n) => n.to_vec(),
        None => (1..=ds.dim()).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".into());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(ds.dim() + 1);
    for (r, &l) in ds.points().rows().zip(ds.labels()) {
        rec.clear();
        rec.extend(r.iter().map(|v| format!("{v:?}")));
        rec.push(ds.label_names()[l].clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })?;
    Ok(())
}

/// Per-class point sets, rows kept in their original order.
#[derive(Debug, Clone)]
pub struct ClassPartition {
    classes: Vec<Points>,
}

impl ClassPartition {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, c: usize) -> &Points {
        &self.classes[c]
    }

    pub fn classes(&self) -> &[Points] {
        &self.classes
    }

    pub fn counts(&self) -> Vec<usize> {
        self.classes.iter().map(Points::len).collect()
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(Points::len).sum()
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    /// Builds a partition directly from per-class point sets.
    pub fn from_classes(classes: Vec<Points>) -> Result<Self> {
        let Some(first) = classes.first() else {
            return Err(Error::invalid("partition", "no classes"));
        };
        let d = first.dim();
        if d == 0 {
            return Err(Error::invalid("partition", "zero features"));
        }
        for (c, p) in classes.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::invalid(
                    "partition",
                    format!("class {} has no points", c + 1),
                ));
            }
            if p.dim() != d {
                return Err(Error::LengthMismatch {
                    what: "class dimension",
                    expected: d,
                    found: p.dim(),
                });
            }
        }
        Ok(Self { classes })
    }

    /// The same partition with classes `a` and `b` exchanged.
    pub fn swapped(&self, a: usize, b: usize) -> Self {
        let mut classes = self.classes.clone();
        classes.swap(a, b);
        Self { classes }
    }
}

pub fn partition_by_class(ds: &LabeledDataset) -> ClassPartition {
    let mut rows = vec![Vec::new(); ds.n_classes()];
    for (i, &l) in ds.labels().iter().enumerate() {
        rows[l].push(i);
    }
    ClassPartition {
        classes: rows.iter().map(|r| ds.points().select_rows(r)).collect(),
    }
}

/// Class relative frequencies `N_i / N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PriorEstimate(Vec<f64>);

impl PriorEstimate {
    /// Validates an explicit prior vector: positive entries summing to one.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::invalid("priors", "entries must be positive"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("priors", format!("sum to {s}, not 1")));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, c: usize) -> f64 {
        self.0[c]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::MAX, f64::min)
    }
}

pub fn estimate_priors(part: &ClassPartition) -> PriorEstimate {
    let n = part.total() as f64;
    PriorEstimate(part.counts().iter().map(|&c| c as f64 / n).collect())
}

/// Per-feature affine map `x -> (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardizationParams {
    pub fn apply(&self, p: &Points) -> Points {
        let d = p.dim();
        let data = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &v)| (v - self.mean[k % d]) / self.scale[k % d])
            .collect();
        Points { n: p.len(), d, data }
    }

    pub fn invert(&self, p: &Points) -> Points {
        let d = p.dim();
        let data = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &v)| v * self.scale[k % d] + self.mean[k % d])
            .collect();
        Points { n: p.len(), d, data }
    }
}

/// Centers every feature and scales it to unit sample standard deviation
/// (divisor `N - 1`). Zero-variance features are only centered.
pub fn standardize(ds: &LabeledDataset) -> Result<(LabeledDataset, StandardizationParams)> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::invalid("dataset", "standardization needs N >= 2"));
    }
    let d = ds.dim();
    let mut mean = vec![0.0; d];
    for r in ds.points().rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut ss = vec![0.0; d];
    for r in ds.points().rows() {
        for ((s, v), m) in ss.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = ss
        .iter()
        .map(|s| {
            let sd = (s / (n - 1) as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let params = StandardizationParams { mean, scale };
    Ok((ds.with_points(params.apply(ds.points())), params))
}
