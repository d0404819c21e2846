//! Dataset ingestion and preprocessing: CSV tabular data, image matrices,
//! min-max scaling, PCA reduction, bilinear resizing, seeded splits, and a
//! synthetic blob generator for desk-scale runs.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("row {row}, column {column}: invalid number `{value}`")]
    InvalidNumber { row: usize, column: String, value: String },
    #[error("{0}")]
    InvalidShape(String),
    #[error("component count {k} out of range for {n_features} feature(s)")]
    KOutOfRange { k: usize, n_features: usize },
    #[error("test_size {test_size} must be smaller than the {rows} available row(s)")]
    TestSizeTooLarge { test_size: usize, rows: usize },
    #[error("operation requires an image dataset")]
    NotImage,
}

/// Whether samples are flat feature vectors or row-major images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Tabular,
    Image { height: usize, width: usize },
}

/// A labeled dataset: rows are samples, columns are real-valued features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub kind: FeatureKind,
}

impl Dataset {
    pub fn new(
        samples: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
        kind: FeatureKind,
    ) -> Result<Self, DataError> {
        if samples.len() != labels.len() {
            return Err(DataError::InvalidShape(format!(
                "{} sample(s) but {} label(s)",
                samples.len(),
                labels.len()
            )));
        }
        let width = samples.first().map(|r| r.len()).unwrap_or(0);
        if samples.iter().any(|r| r.len() != width) {
            return Err(DataError::InvalidShape("ragged sample rows".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(DataError::InvalidShape(format!(
                "label {bad} out of range for {n_classes} class(es)"
            )));
        }
        if let FeatureKind::Image { height, width: w } = kind {
            if width != height * w {
                return Err(DataError::InvalidShape(format!(
                    "image kind {height}x{w} but rows have {width} feature(s)"
                )));
            }
        }
        Ok(Dataset { samples, labels, n_classes, kind })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.samples.first().map(|r| r.len()).unwrap_or(0)
    }
}

/// Load a headered CSV file. The named label column is re-indexed densely in
/// order of first appearance; all other columns must be numeric features.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;

    let mut samples = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len().saturating_sub(1));
        for (col, field) in record.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(field.to_string());
            } else {
                let value: f64 = field.trim().parse().map_err(|_| DataError::InvalidNumber {
                    row: row_no + 2,
                    column: headers.get(col).unwrap_or("?").to_string(),
                    value: field.to_string(),
                })?;
                row.push(value);
            }
        }
        samples.push(row);
    }

    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for raw in &raw_labels {
        if !index.contains_key(raw) {
            index.insert(raw.clone(), order.len());
            order.push(raw.clone());
        }
    }
    let labels: Vec<usize> = raw_labels.iter().map(|r| index[r]).collect();
    let n_classes = order.len();
    Dataset::new(samples, labels, n_classes, FeatureKind::Tabular)
}

/// Per-feature min-max scaling into `[lo, hi]`. Constant features map to the
/// range midpoint.
pub fn scale_features(dataset: &Dataset, lo: f64, hi: f64) -> Dataset {
    let d = dataset.n_features();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in &dataset.samples {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let mid = (lo + hi) / 2.0;
    let samples = dataset
        .samples
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if maxs[j] > mins[j] {
                        lo + (v - mins[j]) / (maxs[j] - mins[j]) * (hi - lo)
                    } else {
                        mid
                    }
                })
                .collect()
        })
        .collect();
    Dataset { samples, ..dataset.clone() }
}

/// Fitted principal-component basis.
#[derive(Debug, Clone)]
pub struct Pca {
    /// k rows, each one orthonormal component of length n_features.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues for the kept components, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Sum of all covariance eigenvalues (total variance).
    pub total_variance: f64,
    pub mean: Vec<f64>,
}

impl Pca {
    /// Fit on the rows of `samples`, keeping the top `k` components.
    /// Eigen-decomposition of the sample covariance uses cyclic Jacobi
    /// rotations, which converge quadratically for symmetric matrices.
    #[allow(clippy::needless_range_loop)]
    pub fn fit(samples: &[Vec<f64>], k: usize) -> Result<Pca, DataError> {
        let n = samples.len();
        let d = samples.first().map(|r| r.len()).unwrap_or(0);
        if k == 0 || k > d {
            return Err(DataError::KOutOfRange { k, n_features: d });
        }
        let mut mean = vec![0.0; d];
        for row in samples {
            for (j, &v) in row.iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let denom = (n.saturating_sub(1)).max(1) as f64;
        let mut cov = vec![vec![0.0; d]; d];
        for row in samples {
            let centered: Vec<f64> = row.iter().zip(&mean).map(|(v, m)| v - m).collect();
            for i in 0..d {
                for j in i..d {
                    cov[i][j] += centered[i] * centered[j] / denom;
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                cov[i][j] = cov[j][i];
            }
        }
        let (eigenvalues, vectors) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let total_variance: f64 = eigenvalues.iter().sum();
        let components: Vec<Vec<f64>> = order[..k]
            .iter()
            .map(|&c| (0..d).map(|r| vectors[r][c]).collect())
            .collect();
        let eigenvalues: Vec<f64> = order[..k].iter().map(|&c| eigenvalues[c]).collect();
        Ok(Pca { components, eigenvalues, total_variance, mean })
    }

    /// Project one sample onto the fitted components.
    pub fn transform(&self, sample: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|comp| {
                comp.iter()
                    .zip(sample.iter().zip(&self.mean))
                    .map(|(c, (v, m))| c * (v - m))
                    .sum()
            })
            .collect()
    }

    /// Fraction of total variance captured by the kept components.
    pub fn explained_variance_ratio(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 1.0;
        }
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvector matrix with eigenvectors as columns).
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (app, aqq) = (a[p][p], a[q][q]);
                for i in 0..n {
                    if i != p && i != q {
                        let (aip, aiq) = (a[i][p], a[i][q]);
                        a[i][p] = c * aip - s * aiq;
                        a[p][i] = a[i][p];
                        a[i][q] = s * aip + c * aiq;
                        a[q][i] = a[i][q];
                    }
                }
                a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vip, viq) = (row[p], row[q]);
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

/// Project the dataset onto its top-k principal components. The result is
/// tabular regardless of the input kind.
pub fn pca_reduce(dataset: &Dataset, k: usize) -> Result<(Dataset, Pca), DataError> {
    let pca = Pca::fit(&dataset.samples, k)?;
    let samples: Vec<Vec<f64>> = dataset.samples.iter().map(|s| pca.transform(s)).collect();
    let reduced = Dataset {
        samples,
        labels: dataset.labels.clone(),
        n_classes: dataset.n_classes,
        kind: FeatureKind::Tabular,
    };
    Ok((reduced, pca))
}

/// Bilinear resize of one row-major image.
pub fn resize_image(
    pixels: &[f64],
    height: usize,
    width: usize,
    target_h: usize,
    target_w: usize,
) -> Vec<f64> {
    assert_eq!(pixels.len(), height * width, "pixel count must match dimensions");
    let mut out = Vec::with_capacity(target_h * target_w);
    for r in 0..target_h {
        let src_y = ((r as f64 + 0.5) * height as f64 / target_h as f64 - 0.5)
            .clamp(0.0, (height - 1) as f64);
        let y0 = src_y.floor() as usize;
        let y1 = (y0 + 1).min(height - 1);
        let fy = src_y - y0 as f64;
        for c in 0..target_w {
            let src_x = ((c as f64 + 0.5) * width as f64 / target_w as f64 - 0.5)
                .clamp(0.0, (width - 1) as f64);
            let x0 = src_x.floor() as usize;
            let x1 = (x0 + 1).min(width - 1);
            let fx = src_x - x0 as f64;
            let top = pixels[y0 * width + x0] * (1.0 - fx) + pixels[y0 * width + x1] * fx;
            let bottom = pixels[y1 * width + x0] * (1.0 - fx) + pixels[y1 * width + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Resize every image in an image dataset.
pub fn resize_dataset(dataset: &Dataset, target_h: usize, target_w: usize) -> Result<Dataset, DataError> {
    let FeatureKind::Image { height, width } = dataset.kind else {
        return Err(DataError::NotImage);
    };
    let samples = dataset
        .samples
        .iter()
        .map(|s| resize_image(s, height, width, target_h, target_w))
        .collect();
    Dataset::new(
        samples,
        dataset.labels.clone(),
        dataset.n_classes,
        FeatureKind::Image { height: target_h, width: target_w },
    )
}

/// Seeded shuffle split into (train, test); `test` gets exactly `test_size`
/// rows.
pub fn split(dataset: &Dataset, test_size: usize, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if test_size >= dataset.len() {
        return Err(DataError::TestSizeTooLarge { test_size, rows: dataset.len() });
    }
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let pick = |idx: &[usize]| -> Dataset {
        Dataset {
            samples: idx.iter().map(|&i| dataset.samples[i].clone()).collect(),
            labels: idx.iter().map(|&i| dataset.labels[i]).collect(),
            n_classes: dataset.n_classes,
            kind: dataset.kind,
        }
    };
    Ok((pick(&indices[test_size..]), pick(&indices[..test_size])))
}

/// Synthetic isotropic Gaussian blobs with unit variance around seeded
/// random centers kept at least `separation` apart. Deterministic in the
/// seed.
pub fn synth_blobs(
    n_per_class: usize,
    n_features: usize,
    n_classes: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    assert!(n_per_class >= 1 && n_features >= 1 && n_classes >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(n_classes);
    let mut side = separation * 2.0 * n_classes as f64;
    while centers.len() < n_classes {
        let mut placed = false;
        for _ in 0..1000 {
            let candidate: Vec<f64> = (0..n_features).map(|_| rng.gen::<f64>() * side).collect();
            let ok = centers.iter().all(|c| {
                let d2: f64 = c.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() >= separation
            });
            if ok {
                centers.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            side *= 2.0;
        }
    }
    let mut samples = Vec::with_capacity(n_per_class * n_classes);
    let mut labels = Vec::with_capacity(n_per_class * n_classes);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            let row: Vec<f64> = center
                .iter()
                .map(|&c| c + rng.sample::<f64, _>(StandardNormal))
                .collect();
            samples.push(row);
            labels.push(class);
        }
    }
    Dataset { samples, labels, n_classes, kind: FeatureKind::Tabular }
}
