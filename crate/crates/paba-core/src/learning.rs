//! Block-coordinate learning engine over decomposable objectives.
//!
//! The objective is (1/M) sum_m phi(theta; x_m, y_m) + sum_i psi(theta_i)
//! with a smooth convex loss phi (least squares or logistic) and a
//! coordinate-separable regularizer psi (l2, l1, or none). Model parameters
//! are split into contiguous blocks, one per worker group; each worker
//! computes its block's partial gradient over its own data subset plus its
//! share of the smooth regularizer. Summing a group's worker gradients
//! reproduces the full-batch block gradient exactly, which is why one
//! distributed round equals one centralized (proximal) gradient step no
//! matter how parameters or data are split.

use std::io::BufRead;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sample: sparse features as (index, value) pairs plus a label.
/// Logistic labels must be -1 or +1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<(usize, f64)>,
    pub label: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub dimension: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, dimension: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        for (m, s) in samples.iter().enumerate() {
            if !s.label.is_finite() {
                return Err(Error::invalid(format!("sample {m} has a non-finite label")));
            }
            for &(idx, v) in &s.features {
                if idx >= dimension {
                    return Err(Error::invalid(format!(
                        "sample {m} has feature index {idx} outside dimension {dimension}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::invalid(format!("sample {m} has a non-finite feature")));
                }
            }
        }
        Ok(Dataset { samples, dimension })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Reads the common sparse text format: one sample per line,
    /// `label index:value index:value ...` with 1-based indices.
    pub fn from_libsvm(reader: impl BufRead, dimension: Option<usize>) -> Result<Dataset> {
        let mut samples = Vec::new();
        let mut max_dim = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let label: f64 = parts
                .next()
                .unwrap()
                .parse()
                .map_err(|e| Error::invalid(format!("line {}: bad label: {e}", lineno + 1)))?;
            let mut features = Vec::new();
            for tok in parts {
                let (idx, val) = tok.split_once(':').ok_or_else(|| {
                    Error::invalid(format!("line {}: expected index:value, got {tok}", lineno + 1))
                })?;
                let idx: usize = idx.parse().map_err(|e| {
                    Error::invalid(format!("line {}: bad feature index: {e}", lineno + 1))
                })?;
                if idx == 0 {
                    return Err(Error::invalid(format!(
                        "line {}: feature indices are 1-based",
                        lineno + 1
                    )));
                }
                let val: f64 = val.parse().map_err(|e| {
                    Error::invalid(format!("line {}: bad feature value: {e}", lineno + 1))
                })?;
                max_dim = max_dim.max(idx);
                features.push((idx - 1, val));
            }
            samples.push(Sample { features, label });
        }
        Dataset::new(samples, dimension.unwrap_or(max_dim))
    }

    pub fn from_libsvm_path(path: impl AsRef<Path>, dimension: Option<usize>) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::from_libsvm(std::io::BufReader::new(file), dimension)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    LeastSquares,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegKind {
    None,
    L1,
    L2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningTask {
    pub loss_kind: LossKind,
    pub reg_kind: RegKind,
    pub reg_weight: f64,
    /// Constant per-round step size.
    pub step_size: f64,
}

impl LearningTask {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return Err(Error::invalid("reg_weight must be finite and non-negative"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step_size must be finite and positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelState {
    pub theta: Vec<f64>,
    pub round: u64,
}

impl ModelState {
    pub fn zeros(dimension: usize) -> Self {
        ModelState { theta: vec![0.0; dimension], round: 0 }
    }
}

fn dot(theta: &[f64], features: &[(usize, f64)]) -> f64 {
    features.iter().map(|&(i, v)| theta[i] * v).sum()
}

/// Per-sample loss derivative with respect to the score theta'x.
fn score_grad(loss: LossKind, score: f64, label: f64) -> f64 {
    match loss {
        LossKind::LeastSquares => score - label,
        // d/ds ln(1 + exp(-y s)) = -y / (1 + exp(y s))
        LossKind::Logistic => -label / (1.0 + (label * score).exp()),
    }
}

fn sample_loss(loss: LossKind, score: f64, label: f64) -> f64 {
    match loss {
        LossKind::LeastSquares => 0.5 * (score - label) * (score - label),
        // ln(1 + exp(z)) computed stably for z = -y s.
        LossKind::Logistic => {
            let z = -label * score;
            z.max(0.0) + (-z.abs()).exp().ln_1p()
        }
    }
}

/// Full objective: mean loss plus the separable regularizer.
pub fn objective(task: &LearningTask, theta: &[f64], dataset: &Dataset) -> Result<f64> {
    task.validate()?;
    if theta.len() != dataset.dimension {
        return Err(Error::invalid(format!(
            "model dimension {} does not match dataset dimension {}",
            theta.len(),
            dataset.dimension
        )));
    }
    let m = dataset.len() as f64;
    let loss: f64 = dataset
        .samples
        .iter()
        .map(|s| sample_loss(task.loss_kind, dot(theta, &s.features), s.label))
        .sum();
    let reg: f64 = match task.reg_kind {
        RegKind::None => 0.0,
        RegKind::L1 => task.reg_weight * theta.iter().map(|t| t.abs()).sum::<f64>(),
        RegKind::L2 => task.reg_weight * theta.iter().map(|t| t * t).sum::<f64>(),
    };
    Ok(loss / m + reg)
}

/// One worker's gradient for the coordinates in `block`, computed over its
/// own `subset` of the data. Loss terms carry the global 1/M weight and the
/// smooth regularizer is shared evenly by the `group_size` workers updating
/// this block, so summing a group's outputs gives the full-batch block
/// gradient. The l1 regularizer is handled by the proximal update instead
/// and contributes nothing here.
pub fn block_gradient(
    task: &LearningTask,
    theta: &[f64],
    dataset: &Dataset,
    subset: &[usize],
    block: Range<usize>,
    group_size: usize,
    ) -> Result<Vec<f64>> {
    task.validate()?;
    if block.end > theta.len() || block.start > block.end {
        return Err(Error::invalid(format!(
            "block {}..{} outside model dimension {}",
            block.start,
            block.end,
            theta.len()
        )));
    }
    if group_size == 0 {
        return Err(Error::invalid("group_size must be positive"));
    }
    let m = dataset.len() as f64;
    let mut grad = vec![0.0; block.len()];
    for &s in subset {
        let sample = dataset
            .samples
            .get(s)
            .ok_or_else(|| Error::invalid(format!("subset references missing sample {s}")))?;
        let coef = score_grad(task.loss_kind, dot(theta, &sample.features), sample.label) / m;
        for &(idx, v) in &sample.features {
            if idx >= block.start && idx < block.end {
                grad[idx - block.start] += coef * v;
            }
        }
    }
    if task.reg_kind == RegKind::L2 {
        let share = group_size as f64;
        for (g, &t) in grad.iter_mut().zip(&theta[block.clone()]) {
            *g += 2.0 * task.reg_weight * t / share;
        }
    }
    Ok(grad)
}

/// Soft-thresholding: the proximal operator of `threshold * |.|`.
pub fn prox_l1(y: &[f64], threshold: f64) -> Result<Vec<f64>> {
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::invalid("threshold must be finite and non-negative"));
    }
    Ok(y.iter()
        .map(|&v| {
            if v > threshold {
                v - threshold
            } else if v < -threshold {
                v + threshold
            } else {
                0.0
            }
        })
        .collect())
}

/// One full-batch (proximal) gradient descent step.
pub fn centralized_step(
    task: &LearningTask,
    state: &ModelState,
    dataset: &Dataset,
) -> Result<ModelState> {
    let dim = state.theta.len();
    let all: Vec<usize> = (0..dataset.len()).collect();
    let grad = block_gradient(task, &state.theta, dataset, &all, 0..dim, 1)?;
    let eta = task.step_size;
    let moved: Vec<f64> =
        state.theta.iter().zip(&grad).map(|(&t, &g)| t - eta * g).collect();
    let theta = match task.reg_kind {
        RegKind::L1 => prox_l1(&moved, eta * task.reg_weight)?,
        _ => moved,
    };
    Ok(ModelState { theta, round: state.round + 1 })
}

/// One communication round: every group's workers compute their block
/// gradients over their data subsets, the sums update the blocks, and the
/// proximal step (if any) runs at the server. The result is identical to
/// [`centralized_step`] for every valid partition and split.
pub fn distributed_round(
    task: &LearningTask,
    state: &ModelState,
    dataset: &Dataset,
    partition: &[Range<usize>],
    splits: &[Vec<Vec<usize>>],
) -> Result<ModelState> {
    task.validate()?;
    let dim = state.theta.len();
    if partition.len() != splits.len() {
        return Err(Error::invalid("one data split per parameter block is required"));
    }
    // Blocks must tile the coordinates exactly, in order.
    let mut cursor = 0usize;
    for r in partition {
        if r.start != cursor || r.end < r.start {
            return Err(Error::invalid(format!(
                "blocks must tile the model contiguously; found {}..{} at offset {cursor}",
                r.start, r.end
            )));
        }
        cursor = r.end;
    }
    if cursor != dim {
        return Err(Error::invalid(format!(
            "blocks cover {cursor} of {dim} coordinates"
        )));
    }
    // Every group's workers must jointly hold the whole dataset exactly once.
    for (k, group) in splits.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::invalid(format!("group {k} has no workers")));
        }
        let mut seen: Vec<usize> = group.iter().flatten().copied().collect();
        seen.sort_unstable();
        if seen.len() != dataset.len() || seen.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::invalid(format!(
                "group {k}'s subsets do not partition the dataset"
            )));
        }
    }

    let eta = task.step_size;
    let mut moved = state.theta.clone();
    for (block, group) in partition.iter().zip(splits) {
        let mut block_grad = vec![0.0; block.len()];
        for subset in group {
            let g = block_gradient(task, &state.theta, dataset, subset, block.clone(), group.len())?;
            for (acc, v) in block_grad.iter_mut().zip(g) {
                *acc += v;
            }
        }
        for (j, g) in block_grad.iter().enumerate() {
            moved[block.start + j] -= eta * g;
        }
    }
    let theta = match task.reg_kind {
        RegKind::L1 => prox_l1(&moved, eta * task.reg_weight)?,
        _ => moved,
    };
    Ok(ModelState { theta, round: state.round + 1 })
}

/// Conservative constant step: the inverse of a power-iteration bound on the
/// loss curvature plus the l2 term.
pub fn default_step_size(task: &LearningTask, dataset: &Dataset) -> f64 {
    let m = dataset.len() as f64;
    let dim = dataset.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(0x9E3779B97F4A7C15);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter_mut().for_each(|x| *x /= norm);
    let mut lambda = 0.0_f64;
    for _ in 0..60 {
        // w = X' (X v) without materializing the Gram matrix.
        let mut w = vec![0.0; dim];
        for s in &dataset.samples {
            let score = dot(&v, &s.features);
            for &(i, x) in &s.features {
                w[i] += score * x;
            }
        }
        lambda = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lambda <= 1e-30 {
            break;
        }
        v = w.into_iter().map(|x| x / lambda).collect();
    }
    let smooth = match task.loss_kind {
        LossKind::LeastSquares => lambda / m,
        LossKind::Logistic => lambda / (4.0 * m),
    };
    let reg = if task.reg_kind == RegKind::L2 { 2.0 * task.reg_weight } else { 0.0 };
    1.0 / (smooth + reg).max(1e-12)
}

/// Synthetic sparse classification data: labels come from a random linear
/// separator with margin noise, so both losses make progress on it.
pub fn synthetic_dataset(
    dimension: usize,
    samples: usize,
    nnz_per_sample: usize,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let separator: Vec<f64> = (0..dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nnz = nnz_per_sample.min(dimension).max(1);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let idx = rand::seq::index::sample(&mut rng, dimension, nnz);
        let features: Vec<(usize, f64)> = {
            let mut f: Vec<(usize, f64)> =
                idx.iter().map(|i| (i, rng.gen_range(-1.0..1.0))).collect();
            f.sort_unstable_by_key(|&(i, _)| i);
            f
        };
        let margin: f64 = features.iter().map(|&(i, v)| separator[i] * v).sum();
        let noise = rng.gen_range(-0.1..0.1);
        let label = if margin + noise >= 0.0 { 1.0 } else { -1.0 };
        out.push(Sample { features, label });
    }
    Dataset { samples: out, dimension }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn dense(values: &[f64]) -> Vec<(usize, f64)> {
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect()
    }

    fn ls_task(reg: RegKind, w: f64) -> LearningTask {
        LearningTask {
            loss_kind: LossKind::LeastSquares,
            reg_kind: reg,
            reg_weight: w,
            step_size: 0.1,
        }
    }

    #[test]
    fn objective_anchors() {
        // Zero model on zero labels is zero loss.
        let data = Dataset::new(
            vec![Sample { features: dense(&[1.0, 0.0]), label: 0.0 }],
            2,
        )
        .unwrap();
        let task = ls_task(RegKind::None, 0.0);
        assert_eq!(objective(&task, &[0.0, 0.0], &data).unwrap(), 0.0);

        // The l2 term adds w * theta^2.
        let task = ls_task(RegKind::L2, 0.5);
        let with_reg = objective(&task, &[1.0, 0.0], &data).unwrap();
        let without = objective(&ls_task(RegKind::None, 0.0), &[1.0, 0.0], &data).unwrap();
        assert_relative_eq!(with_reg - without, 0.5);

        // Logistic loss at zero is ln 2 per sample regardless of labels.
        let data = Dataset::new(
            vec![
                Sample { features: dense(&[1.0]), label: 1.0 },
                Sample { features: dense(&[-2.0]), label: -1.0 },
            ],
            1,
        )
        .unwrap();
        let task = LearningTask {
            loss_kind: LossKind::Logistic,
            reg_kind: RegKind::None,
            reg_weight: 0.0,
            step_size: 0.1,
        };
        assert_relative_eq!(objective(&task, &[0.0], &data).unwrap(), 2.0_f64.ln());
    }

    #[test]
    fn block_gradient_hand_value() {
        // phi = (theta'x - y)^2 / 2 at x = e1, y = 0, theta = e1 -> d/dtheta1 = 1.
        let data =
            Dataset::new(vec![Sample { features: dense(&[1.0, 0.0]), label: 0.0 }], 2).unwrap();
        let task = ls_task(RegKind::None, 0.0);
        let g = block_gradient(&task, &[1.0, 0.0], &data, &[0], 0..2, 1).unwrap();
        assert_relative_eq!(g[0], 1.0);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn subset_gradients_sum_to_full_batch() {
        let data = synthetic_dataset(40, 30, 8, 11);
        let task = LearningTask {
            loss_kind: LossKind::Logistic,
            reg_kind: RegKind::L2,
            reg_weight: 0.3,
            step_size: 0.1,
        };
        let theta: Vec<f64> = (0..40).map(|i| ((i * 7 % 13) as f64 - 6.0) / 10.0).collect();
        let all: Vec<usize> = (0..30).collect();
        let full = block_gradient(&task, &theta, &data, &all, 5..25, 1).unwrap();
        let half_a = block_gradient(&task, &theta, &data, &all[..17], 5..25, 2).unwrap();
        let half_b = block_gradient(&task, &theta, &data, &all[17..], 5..25, 2).unwrap();
        for ((f, a), b) in full.iter().zip(&half_a).zip(&half_b) {
            assert_abs_diff_eq!(*f, a + b, epsilon = 1e-12);
        }
    }

    #[test]
    fn l2_share_splits_evenly() {
        let data =
            Dataset::new(vec![Sample { features: dense(&[0.0, 0.0]), label: 0.0 }], 2).unwrap();
        let task = ls_task(RegKind::L2, 0.5);
        let theta = [2.0, -1.0];
        let alone = block_gradient(&task, &theta, &data, &[], 0..2, 1).unwrap();
        let shared = block_gradient(&task, &theta, &data, &[], 0..2, 2).unwrap();
        for (a, s) in alone.iter().zip(&shared) {
            assert_relative_eq!(*a, 2.0 * s);
        }
        // psi' = 2 w theta.
        assert_relative_eq!(alone[0], 2.0 * 0.5 * 2.0);
    }

    #[test]
    fn prox_anchors() {
        assert_eq!(prox_l1(&[0.5], 1.0).unwrap(), vec![0.0]);
        assert_eq!(prox_l1(&[2.0], 1.0).unwrap(), vec![1.0]);
        assert_eq!(prox_l1(&[-2.0], 1.0).unwrap(), vec![-1.0]);
        let y = [0.3, -4.0, 7.0];
        assert_eq!(prox_l1(&y, 0.0).unwrap(), y.to_vec());
    }

    #[test]
    fn centralized_quadratic_reaches_the_minimizer() {
        // Single sample x = e1, label 3: loss (theta - 3)^2/2, exact step 1.
        let data =
            Dataset::new(vec![Sample { features: dense(&[1.0]), label: 3.0 }], 1).unwrap();
        let mut task = ls_task(RegKind::None, 0.0);
        task.step_size = 1.0;
        let state = ModelState::zeros(1);
        let next = centralized_step(&task, &state, &data).unwrap();
        assert_relative_eq!(next.theta[0], 3.0);
        // Zero gradient leaves the state unchanged.
        let again = centralized_step(&task, &next, &data).unwrap();
        assert_relative_eq!(again.theta[0], 3.0);
    }

    #[test]
    fn distributed_equals_centralized() {
        let data = synthetic_dataset(24, 20, 6, 5);
        for reg in [RegKind::None, RegKind::L2, RegKind::L1] {
            let task = LearningTask {
                loss_kind: LossKind::Logistic,
                reg_kind: reg,
                reg_weight: 0.05,
                step_size: 0.2,
            };
            let mut state = ModelState::zeros(24);
            let partition = vec![0..10, 10..17, 17..24];
            let splits = vec![
                vec![(0..7).collect(), (7..20).collect()],
                vec![(0..20).collect()],
                vec![(0..5).collect(), (5..11).collect(), (11..20).collect()],
            ];
            for _ in 0..5 {
                let dist = distributed_round(&task, &state, &data, &partition, &splits).unwrap();
                let cent = centralized_step(&task, &state, &data).unwrap();
                for (d, c) in dist.theta.iter().zip(&cent.theta) {
                    assert_abs_diff_eq!(*d, *c, epsilon = 1e-12);
                }
                state = dist;
            }
        }
    }

    #[test]
    fn distributed_round_validates_structure() {
        let data = synthetic_dataset(10, 8, 3, 1);
        let task = ls_task(RegKind::None, 0.0);
        let state = ModelState::zeros(10);
        // Gap in the partition.
        let err = distributed_round(&task, &state, &data, &[0..4, 5..10], &[
            vec![(0..8).collect()],
            vec![(0..8).collect()],
        ]);
        assert!(err.is_err());
        // A split that drops a sample.
        let whole = std::slice::from_ref(&(0..10));
        let err = distributed_round(&task, &state, &data, whole, &[vec![(0..7).collect()]]);
        assert!(err.is_err());
    }

    #[test]
    fn libsvm_round_trip() {
        let text = "+1 1:0.5 3:-2.0\n-1 2:1.0\n";
        let data = Dataset::from_libsvm(text.as_bytes(), None).unwrap();
        assert_eq!(data.dimension, 3);
        assert_eq!(data.samples[0].features, vec![(0, 0.5), (2, -2.0)]);
        assert_eq!(data.samples[1].label, -1.0);
        assert!(Dataset::from_libsvm("1 0:1.0\n".as_bytes(), None).is_err());
        assert!(Dataset::from_libsvm("1 x\n".as_bytes(), None).is_err());
    }

    #[test]
    fn default_step_decreases_the_objective() {
        let data = synthetic_dataset(30, 40, 6, 9);
        let mut task = LearningTask {
            loss_kind: LossKind::Logistic,
            reg_kind: RegKind::L2,
            reg_weight: 0.01,
            step_size: 1.0,
        };
        task.step_size = default_step_size(&task, &data);
        let mut state = ModelState::zeros(30);
        let mut prev = objective(&task, &state.theta, &data).unwrap();
        for _ in 0..20 {
            state = centralized_step(&task, &state, &data).unwrap();
            let obj = objective(&task, &state.theta, &data).unwrap();
            assert!(obj <= prev + 1e-12, "objective must not increase: {obj} > {prev}");
            prev = obj;
        }
    }
}
