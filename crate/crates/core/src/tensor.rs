//! Dense f64 kernels: matrix-vector products, activations, softmax with
//! cross-entropy, max pooling with argmax provenance, initialization and a
//! central-difference gradient checker.
//!
//! Every reduction runs in a fixed index order so results are bit-identical
//! across runs and thread counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Glorot-style uniform initialization in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let r = (6.0 / (rows + cols) as f64).sqrt();
        Matrix::uniform(rows, cols, r, rng)
    }

    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, r: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-r..=r)).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `out += self · x`
    pub fn mul_vec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += dot(row, x);
        }
    }

    /// `out += selfᵀ · y`
    pub fn tmul_vec_acc(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            if yi != 0.0 {
                axpy(yi, row, out);
            }
        }
    }

    /// `self += alpha · a bᵀ`
    pub fn add_outer(&mut self, alpha: f64, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (&ai, row) in a.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            let s = alpha * ai;
            if s != 0.0 {
                axpy(s, b, row);
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha · x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Checked `W·x + b`.
pub fn affine(w: &Matrix, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::Shape(format!(
            "affine: W is {}x{}, x has {}, b has {}",
            w.rows(),
            w.cols(),
            x.len(),
            b.len()
        )));
    }
    let mut out = b.to_vec();
    w.mul_vec_acc(x, &mut out);
    Ok(out)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax probabilities and `-ln p[target]`.
///
/// The loss is computed from the log-sum-exp so it stays finite when
/// `p[target]` underflows.
pub fn softmax_xent(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    assert!(target < logits.len(), "target {target} out of range");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    let probs = logits.iter().map(|&l| (l - log_z).exp()).collect();
    (log_z - logits[target], probs)
}

/// Per-dimension maximum over a sequence, with the time step that attained it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolResult {
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
}

/// Max pooling over time. Ties go to the earliest step. An empty sequence
/// pools to the zero vector of `dim` with no argmax entries.
pub fn max_pool(sequence: &[Vec<f64>], dim: usize) -> PoolResult {
    let Some(first) = sequence.first() else {
        return PoolResult {
            values: vec![0.0; dim],
            argmax: Vec::new(),
        };
    };
    debug_assert_eq!(first.len(), dim);
    let mut values = first.clone();
    let mut argmax = vec![0; dim];
    for (t, step) in sequence.iter().enumerate().skip(1) {
        for d in 0..dim {
            if step[d] > values[d] {
                values[d] = step[d];
                argmax[d] = t;
            }
        }
    }
    PoolResult { values, argmax }
}

/// A parameter container addressable as a flat vector.
pub trait FlatParams {
    fn flat_len(&self) -> usize;
    fn flat_get(&self, i: usize) -> f64;
    fn flat_set(&mut self, i: usize, v: f64);

    /// Contiguous segments of the flat index space, used to spread checked
    /// coordinates across tensors of very different sizes.
    #[allow(clippy::single_range_in_vec_init)]
    fn segments(&self) -> Vec<std::ops::Range<usize>> {
        vec![0..self.flat_len()]
    }
}

impl FlatParams for Vec<f64> {
    fn flat_len(&self) -> usize {
        self.len()
    }

    fn flat_get(&self, i: usize) -> f64 {
        self[i]
    }

    fn flat_set(&mut self, i: usize, v: f64) {
        self[i] = v;
    }
}

/// One evaluation of a checked function.
///
/// `terms` sum to the function value; differences are taken per term so a
/// large term does not swamp the rounding of a small one. `regime`
/// identifies the piecewise-smooth region (ReLU masks, pooling argmaxes).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub terms: Vec<f64>,
    pub regime: u64,
}

impl Evaluation {
    pub fn smooth(value: f64) -> Self {
        Evaluation {
            terms: vec![value],
            regime: 0,
        }
    }

    pub fn value(&self) -> f64 {
        self.terms.iter().sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Coordinates redrawn because a perturbation crossed a kink.
    pub resampled: usize,
    pub worst_index: Option<usize>,
}

/// Compare `analytic` against central differences at `samples` random
/// coordinates. A coordinate whose ±epsilon perturbation changes the
/// regime is redrawn; after `20 * samples` redraws the check stops early.
pub fn grad_check<P, F, R>(
    params: &mut P,
    analytic: &[f64],
    mut f: F,
    epsilon: f64,
    samples: usize,
    rng: &mut R,
) -> Result<GradCheckReport>
where
    P: FlatParams,
    F: FnMut(&P) -> Result<Evaluation>,
    R: Rng + ?Sized,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if analytic.len() != params.flat_len() {
        return Err(Error::Shape(format!(
            "analytic gradient has {} entries, parameters have {}",
            analytic.len(),
            params.flat_len()
        )));
    }
    let segments: Vec<_> = params.segments().into_iter().filter(|s| !s.is_empty()).collect();
    if segments.is_empty() {
        return Err(Error::Config("no parameters to check".into()));
    }
    let base = f(params)?;
    check_finite(&base)?;

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        resampled: 0,
        worst_index: None,
    };
    let max_redraws = 20 * samples.max(1);
    while report.checked < samples && report.resampled < max_redraws {
        let seg = &segments[rng.gen_range(0..segments.len())];
        let i = rng.gen_range(seg.clone());
        let original = params.flat_get(i);

        params.flat_set(i, original + epsilon);
        let plus = f(params);
        params.flat_set(i, original - epsilon);
        let minus = f(params);
        params.flat_set(i, original);
        let (plus, minus) = (plus?, minus?);
        check_finite(&plus)?;
        check_finite(&minus)?;

        if plus.regime != base.regime || minus.regime != base.regime {
            report.resampled += 1;
            continue;
        }
        let diff: f64 = plus
            .terms
            .iter()
            .zip(&minus.terms)
            .map(|(p, m)| p - m)
            .sum();
        let numeric = diff / (2.0 * epsilon);
        let ga = analytic[i];
        if !ga.is_finite() {
            return Err(Error::Numerical(format!("analytic gradient at {i} is {ga}")));
        }
        let rel = (ga - numeric).abs() / ga.abs().max(numeric.abs()).max(1e-8);
        if rel > report.max_relative_error || report.worst_index.is_none() {
            report.max_relative_error = report.max_relative_error.max(rel);
            report.worst_index = Some(i);
        }
        report.checked += 1;
    }
    Ok(report)
}

fn check_finite(e: &Evaluation) -> Result<()> {
    if e.terms.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite function value {:?}", e.terms)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_affine(w: &Matrix, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.rows()];
        for i in 0..w.rows() {
            let mut acc = 0.0;
            for j in 0..w.cols() {
                acc += w.get(i, j) * x[j];
            }
            out[i] = acc + b[i];
        }
        out
    }

    #[test]
    fn affine_identity_and_zero_weight() {
        let y = affine(&Matrix::identity(2), &[3.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(y, vec![3.0, -1.0]);
        let y = affine(&Matrix::zeros(2, 3), &[7.0, 8.0, 9.0], &[1.0, 2.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
    }

    #[test]
    fn affine_rejects_shape_mismatch() {
        assert!(matches!(
            affine(&Matrix::zeros(2, 3), &[1.0, 2.0], &[0.0, 0.0]),
            Err(Error::Shape(_))
        ));
        assert!(affine(&Matrix::zeros(2, 2), &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn affine_matches_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (r, c) = (rng.gen_range(1..12), rng.gen_range(1..12));
            let w = Matrix::uniform(r, c, 2.0, &mut rng);
            let x: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = affine(&w, &x, &b).unwrap();
            for (g, e) in got.iter().zip(naive_affine(&w, &x, &b)) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_product_and_outer_update() {
        let w = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = vec![0.0; 3];
        w.tmul_vec_acc(&[1.0, -1.0], &mut out);
        assert_eq!(out, vec![-3.0, -3.0, -3.0]);
        let mut m = Matrix::zeros(2, 2);
        m.add_outer(2.0, &[1.0, 3.0], &[1.0, -1.0]);
        assert_eq!(m.as_slice(), &[2.0, -2.0, 6.0, -6.0]);
    }

    #[test]
    fn relu_definition_and_saturation() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(relu(&[-3.0, -0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn softmax_uniform_over_19() {
        let (loss, probs) = softmax_xent(&[0.7; 19], 4);
        assert!((loss - 19f64.ln()).abs() < 1e-12);
        for p in probs {
            assert!((p - 1.0 / 19.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_xent_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut logits: Vec<f64> = (0..19).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let target = rng.gen_range(0..19);
            let (_, probs) = softmax_xent(&logits, target);
            let eps = 1e-6;
            for k in 0..19 {
                let orig = logits[k];
                logits[k] = orig + eps;
                let plus = softmax_xent(&logits, target).0;
                logits[k] = orig - eps;
                let minus = softmax_xent(&logits, target).0;
                logits[k] = orig;
                let numeric = (plus - minus) / (2.0 * eps);
                let analytic = probs[k] - if k == target { 1.0 } else { 0.0 };
                assert!((numeric - analytic).abs() < 1e-8, "{numeric} vs {analytic}");
            }
        }
    }

    #[test]
    fn max_pool_cases() {
        let p = max_pool(&[vec![1.0, 5.0], vec![3.0, 2.0]], 2);
        assert_eq!(p.values, vec![3.0, 5.0]);
        assert_eq!(p.argmax, vec![1, 0]);

        let p = max_pool(&[vec![-1.0, 4.0, 0.0]], 3);
        assert_eq!(p.values, vec![-1.0, 4.0, 0.0]);
        assert_eq!(p.argmax, vec![0, 0, 0]);

        let p = max_pool(&[], 4);
        assert_eq!(p.values, vec![0.0; 4]);
        assert!(p.argmax.is_empty());
    }

    #[test]
    fn max_pool_ties_go_to_earliest_step() {
        let p = max_pool(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 2.0]], 2);
        assert_eq!(p.argmax, vec![0, 2]);
    }

    #[test]
    fn quadratic_gradient_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut theta: Vec<f64> = (0..50).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let analytic = theta.clone();
        let report = grad_check(
            &mut theta,
            &analytic,
            |p: &Vec<f64>| Ok(Evaluation::smooth(0.5 * dot(p, p))),
            1e-5,
            50,
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.checked, 50);
        assert!(report.max_relative_error < 1e-9, "{report:?}");
    }

    #[test]
    fn kinks_are_resampled() {
        // |x| with x_0 sitting inside the epsilon window around 0.
        let mut theta = vec![1e-7, 1.0, -2.0];
        let analytic = vec![1.0, 1.0, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = grad_check(
            &mut theta,
            &analytic,
            |p: &Vec<f64>| {
                let regime = p.iter().fold(0u64, |acc, &v| acc * 2 + (v > 0.0) as u64);
                Ok(Evaluation {
                    terms: vec![p.iter().map(|v| v.abs()).sum()],
                    regime,
                })
            },
            1e-5,
            30,
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.checked, 30);
        assert!(report.resampled > 0);
        assert!(report.max_relative_error < 1e-9);
    }

    #[test]
    fn grad_check_rejects_non_finite_values() {
        let mut theta = vec![1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = grad_check(
            &mut theta,
            &[0.0],
            |_: &Vec<f64>| Ok(Evaluation::smooth(f64::NAN)),
            1e-5,
            1,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    proptest! {
        #[test]
        fn relu_is_idempotent(x in proptest::collection::vec(-10.0f64..10.0, 0..32)) {
            prop_assert_eq!(relu(&relu(&x)), relu(&x));
        }

        #[test]
        fn softmax_is_a_distribution_and_shift_invariant(
            x in proptest::collection::vec(-20.0f64..20.0, 1..25),
            c in -50.0f64..50.0,
        ) {
            let (loss, p) = softmax_xent(&x, 0);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v > 0.0 && v < 1.0 || x.len() == 1));
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let (loss2, p2) = softmax_xent(&shifted, 0);
            prop_assert!((loss - loss2).abs() < 1e-9);
            for (a, b) in p.iter().zip(&p2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn pool_values_come_from_argmax_steps(
            seq in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..10)
        ) {
            let p = max_pool(&seq, 4);
            for d in 0..4 {
                prop_assert_eq!(p.values[d], seq[p.argmax[d]][d]);
                prop_assert!(seq.iter().all(|s| s[d] <= p.values[d]));
            }
        }
    }
}
