//! Linear soft-margin SVM trained by SMO, with stratified k-fold
//! cross-validation and single-feature baselines.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::features::FeatureVector;
use crate::mesh::{mean_curvature_feature, surface_area, MeshError, TriMesh};

/// Seed of the fold assignment unless one is given explicitly.
pub const DEFAULT_FOLD_SEED: u64 = 0x5EED_F01D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("{rows} rows cannot be split into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("training data holds a single class")]
    SingleClass,
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("expected two class labels, found {0:?}")]
    NotBinary(Vec<String>),
    #[error("regularization must be positive, got {0}")]
    BadC(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Rows with binary labels 0 / 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    /// Label text of class 0 and class 1.
    pub classes: [String; 2],
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self, ClassifyError> {
        let d = x.first().map_or(0, |r| r.len());
        for r in &x {
            if r.len() != d {
                return Err(ClassifyError::DimensionMismatch(d, r.len()));
            }
        }
        if x.len() != y.len() {
            return Err(ClassifyError::DimensionMismatch(x.len(), y.len()));
        }
        Ok(Dataset { x, y, classes: ["0".into(), "1".into()] })
    }

    /// Classes are the two distinct labels in sorted order.
    pub fn from_features(rows: &[FeatureVector]) -> Result<Self, ClassifyError> {
        let mut names: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
        names.sort();
        names.dedup();
        if names.len() > 2 {
            return Err(ClassifyError::NotBinary(names));
        }
        let y = rows.iter().map(|r| u8::from(names.len() == 2 && r.label == names[1])).collect();
        let mut data = Dataset::new(rows.iter().map(|r| r.features.clone()).collect(), y)?;
        if names.len() == 2 {
            data.classes = [names[0].clone(), names[1].clone()];
        }
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, |r| r.len())
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            classes: self.classes.clone(),
        }
    }
}

/// Per-feature mean and standard deviation; constant features get scale 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, |r| r.len());
        let n = x.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 1e-12 * mean[j].abs().max(1e-300) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.std)).map(|(x, (m, s))| (x - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub scaler: Standardizer,
    /// Primal minus dual objective at the returned solution.
    pub duality_gap: f64,
    pub iterations: usize,
}

impl SvmModel {
    /// Decision value of an already standardized row.
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.w.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn predict_standardized(&self, z: &[f64]) -> u8 {
        u8::from(self.decision_standardized(z) >= 0.0)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.decision_standardized(&self.scaler.apply(row))
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        self.predict_standardized(&self.scaler.apply(row))
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data.x.iter().zip(&data.y).filter(|(r, &y)| self.predict(r) == y).count();
        hits as f64 / data.len() as f64
    }
}

const KKT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 1_000_000;

/// Fits `min 1/2 |w|^2 + C sum hinge` on standardized rows. The dual is
/// solved by SMO with maximal-violating-pair selection; the bias is the
/// average over free multipliers, or the midpoint of the feasible interval
/// when none are free.
pub fn train(data: &Dataset, c: f64) -> Result<SvmModel, ClassifyError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ClassifyError::BadC(c));
    }
    let d = data.dim();
    if d == 0 {
        return Err(ClassifyError::DimensionMismatch(0, 0));
    }
    if data.y.iter().all(|&y| y == data.y[0]) {
        return Err(ClassifyError::SingleClass);
    }
    let scaler = Standardizer::fit(&data.x);
    let z: Vec<Vec<f64>> = data.x.iter().map(|r| scaler.apply(r)).collect();
    let y: Vec<f64> = data.y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
    let n = z.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dot(&z[i], &z[j])).collect()).collect();

    let mut alpha = vec![0.0; n];
    // Gradient of 1/2 a'Qa - sum a.
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    let (mut m_up, mut m_low);
    loop {
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        m_up = f64::NEG_INFINITY;
        m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > m_up {
                m_up = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < m_low {
                m_low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_up - m_low < KKT_TOL || iterations >= MAX_ITER {
            break;
        }
        iterations += 1;
        // Move along y_i e_i - y_j e_j, which keeps sum y a fixed.
        let curvature = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(1e-12);
        let mut step = (m_up - m_low) / curvature;
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        let (di, dj) = (y[i] * step, -y[j] * step);
        alpha[i] = (alpha[i] + di).clamp(0.0, c);
        alpha[j] = (alpha[j] + dj).clamp(0.0, c);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[t][i] * di + y[j] * k[t][j] * dj);
        }
    }

    let free: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0 && alpha[t] < c).collect();
    let b = if free.is_empty() {
        0.5 * (m_up + m_low)
    } else {
        free.iter().map(|&t| -y[t] * grad[t]).sum::<f64>() / free.len() as f64
    };
    let b = if b.is_finite() { b } else { 0.0 };
    let mut w = vec![0.0; d];
    for t in 0..n {
        for q in 0..d {
            w[q] += alpha[t] * y[t] * z[t][q];
        }
    }
    let ww = dot(&w, &w);
    let hinge: f64 = (0..n).map(|t| (1.0 - y[t] * (dot(&w, &z[t]) + b)).max(0.0)).sum();
    let primal = 0.5 * ww + c * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * ww;
    Ok(SvmModel { w, b, c, scaler, duality_gap: primal - dual, iterations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Stratified fold of every row: each class is shuffled with the seed and
/// dealt round-robin, continuing the count from one class to the next.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Mean test accuracy over `k` stratified folds, standardization refit on
/// every training split.
pub fn cross_validate(data: &Dataset, k: usize, c: f64, seed: u64) -> Result<CvResult, ClassifyError> {
    if k < 2 || k > data.len() {
        return Err(ClassifyError::TooFewRows { rows: data.len(), folds: k });
    }
    let fold = stratified_folds(&data.y, k, seed);
    let mut fold_accuracies = Vec::with_capacity(k);
    for f in 0..k {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold[i] != f).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| fold[i] == f).collect();
        let model = train(&data.subset(&train_idx), c)?;
        fold_accuracies.push(model.accuracy(&data.subset(&test_idx)));
    }
    let accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvResult { accuracy, fold_accuracies })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Area,
    MeanCurvature,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Area => "area",
            Baseline::MeanCurvature => "mean_curvature",
        }
    }
}

/// One scalar per mesh.
pub fn baseline_features(meshes: &[&TriMesh], kind: Baseline) -> Result<Vec<f64>, ClassifyError> {
    meshes
        .iter()
        .map(|m| match kind {
            Baseline::Area => Ok(surface_area(m)),
            Baseline::MeanCurvature => Ok(mean_curvature_feature(m)?),
        })
        .collect()
}

/// `method,accuracy` table.
pub fn results_csv(results: &[(String, f64)]) -> String {
    let mut s = String::from("method,accuracy\n");
    for (m, a) in results {
        s.push_str(&format!("{m},{a:.4}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_line() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { -1.0 } else { 1.0 }]).collect();
        let y = (0..20).map(|i| u8::from(i >= 10)).collect();
        let data = Dataset::new(x, y).unwrap();
        let m = train(&data, 1.0).unwrap();
        assert_eq!(m.accuracy(&data), 1.0);
        // Threshold in raw units: w (x - mean)/std + b = 0 with mean 0, std 1.
        assert!((-m.b / m.w[0]).abs() < 1e-6);
        assert!(m.duality_gap.abs() < 1e-6);
    }

    #[test]
    fn identical_rows_predict_majority() {
        let x = vec![vec![2.0, 5.0]; 10];
        let y = vec![1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
        let data = Dataset::new(x, y).unwrap();
        let m = train(&data, 1.0).unwrap();
        assert!((m.accuracy(&data) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        let data = Dataset::new(vec![vec![1.0]; 4], vec![1; 4]).unwrap();
        assert_eq!(train(&data, 1.0), Err(ClassifyError::SingleClass));
        let data = Dataset::new(vec![vec![1.0], vec![2.0]], vec![0, 1]).unwrap();
        assert_eq!(cross_validate(&data, 3, 1.0, 1), Err(ClassifyError::TooFewRows { rows: 2, folds: 3 }));
        assert!(matches!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1]), Err(ClassifyError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn folds_are_balanced() {
        let y: Vec<u8> = (0..60).map(|i| u8::from(i % 2 == 0)).collect();
        let f = stratified_folds(&y, 10, DEFAULT_FOLD_SEED);
        for k in 0..10 {
            let ones = (0..60).filter(|&i| f[i] == k && y[i] == 1).count();
            let zeros = (0..60).filter(|&i| f[i] == k && y[i] == 0).count();
            assert_eq!((ones, zeros), (3, 3));
        }
    }
}
