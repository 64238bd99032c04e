//! Edge-level randomized response.
//!
//! Each edge indicator is kept with probability `e^alpha / (1 + e^alpha)`
//! and flipped otherwise, independently across edges and time. On a
//! symmetric network the upper triangle including the diagonal is privatized
//! and mirrored, so each edge is privatized exactly once.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netgen::{Domain, NetworkSequence, ProbMatrix};
use crate::scalar::{from_f64, Scalar};
use crate::seed::SeedSpace;

/// Randomized response parameters derived from the privacy budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRrParams {
    pub alpha: f64,
    /// Flip probability `q = 1 / (1 + e^alpha)`, in `(0, 1/2]`.
    pub flip_prob: f64,
}

impl EdgeRrParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "privacy budget {alpha} must be a finite nonnegative real"
            )));
        }
        Ok(EdgeRrParams {
            alpha,
            flip_prob: 1.0 / (1.0 + alpha.exp()),
        })
    }

    /// Probability of keeping the input bit, `1 - q`.
    pub fn keep_prob(&self) -> f64 {
        1.0 - self.flip_prob
    }
}

/// Entrywise closure of a mean matrix under randomized response:
/// `q * theta := q (1 - theta) + (1 - q) theta = q + (1 - 2q) theta`.
pub fn rr_closure<S: Scalar>(theta: &ProbMatrix<S>, alpha: f64) -> Result<ProbMatrix<S>> {
    let params = EdgeRrParams::new(alpha)?;
    let q = from_f64::<S>(params.flip_prob);
    let one_minus_2q = from_f64::<S>(1.0 - 2.0 * params.flip_prob);
    let mapped = theta.values().mapv(|p| q + one_minus_2q * p);
    ProbMatrix::new(mapped, theta.is_symmetric())
}

/// Privatizes one symmetric binary frame in place semantics (returns a new
/// frame). `rng` must be the frame's dedicated stream.
pub(crate) fn rr_privatize_frame<S: Scalar>(
    frame: &Array2<S>,
    params: &EdgeRrParams,
    rng: &mut ChaCha8Rng,
) -> Array2<S> {
    let n = frame.nrows();
    let keep = params.keep_prob();
    let mut out = Array2::<S>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let x = frame[(i, j)];
            let v = if rng.random_bool(keep) { x } else { S::one() - x };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Applies randomized response to a symmetric binary sequence.
pub fn rr_privatize<S: Scalar>(
    seq: &NetworkSequence<S>,
    alpha: f64,
    seed: u64,
) -> Result<NetworkSequence<S>> {
    let params = EdgeRrParams::new(alpha)?;
    if seq.domain() != Domain::Binary01 {
        return Err(Error::InvalidParameter(
            "randomized response requires a binary {0, 1} sequence".into(),
        ));
    }
    if !seq.is_symmetric() {
        return Err(Error::InvalidParameter(
            "randomized response requires a symmetric sequence".into(),
        ));
    }
    let space = SeedSpace::new(seed);
    let frames = (1..=seq.horizon())
        .map(|t| {
            let mut rng = space.stream("ldp/rr/frame", &[t as u64]);
            rr_privatize_frame(seq.frame(t), &params, &mut rng)
        })
        .collect();
    Ok(NetworkSequence::from_parts(frames, Domain::Binary01, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{sample_sequence, Dependence, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn ones_seq(n: usize, horizon: usize) -> NetworkSequence<f64> {
        let frames = vec![Array2::from_elem((n, n), 1.0); horizon];
        NetworkSequence::new(frames, Domain::Binary01, true).unwrap()
    }

    fn upper_mean(seq: &NetworkSequence<f64>) -> (f64, u64) {
        let n = seq.n1();
        let mut sum = 0.0;
        let mut count = 0u64;
        for t in 1..=seq.horizon() {
            let f = seq.frame(t);
            for i in 0..n {
                for j in i..n {
                    sum += f[(i, j)];
                    count += 1;
                }
            }
        }
        (sum / count as f64, count)
    }

    #[test]
    fn params_reject_negative_budget() {
        assert!(EdgeRrParams::new(-0.1).is_err());
        assert!(EdgeRrParams::new(f64::NAN).is_err());
        assert_abs_diff_eq!(EdgeRrParams::new(0.0).unwrap().flip_prob, 0.5);
    }

    #[test]
    fn closure_examples() {
        let half = ProbMatrix::constant(3, 3, 0.5_f64, true).unwrap();
        let out = rr_closure(&half, 0.73).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 0.5, epsilon = 1e-15);

        let zero = ProbMatrix::constant(2, 2, 0.0_f64, true).unwrap();
        let out = rr_closure(&zero, 3.0_f64.ln()).unwrap();
        assert_abs_diff_eq!(out.get(1, 1), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn closed_sparsity_stays_above_floor() {
        // q + (1 - 2q) rho >= 1 / (1 + e) whenever alpha <= 1.
        let floor = 1.0 / (1.0 + 1.0_f64.exp());
        for &alpha in &[0.1, 0.5, 1.0] {
            for &rho in &[0.0, 0.05, 0.4, 1.0] {
                let th = ProbMatrix::constant(1, 1, rho, false).unwrap();
                let out = rr_closure(&th, alpha).unwrap();
                assert!(out.get(0, 0) >= floor - 1e-12);
            }
        }
    }

    #[test]
    fn zero_budget_is_a_fair_coin() {
        let seq = ones_seq(40, 50);
        let out = rr_privatize(&seq, 0.0, 21).unwrap();
        let (mean, count) = upper_mean(&out);
        let band = 4.0 * (0.25 / count as f64).sqrt();
        assert!((mean - 0.5).abs() <= band, "mean {mean} not near 1/2");
    }

    #[test]
    fn output_mean_matches_closure() {
        // Bernoulli(0.1) input, alpha = 1: output mean q + (1 - 2q) * 0.1.
        let spec = ModelSpec::<f64> {
            horizon: 80,
            n1: 50,
            n2: 50,
            symmetric: true,
            dependence: Dependence::Independent,
            change_points: vec![],
            segment_thetas: vec![ProbMatrix::constant(50, 50, 0.1, true).unwrap()],
        };
        let raw = sample_sequence(&spec, 4).unwrap();
        let out = rr_privatize(&raw, 1.0, 5).unwrap();
        let q = 1.0 / (1.0 + 1.0_f64.exp());
        let p = q + (1.0 - 2.0 * q) * 0.1;
        let (mean, count) = upper_mean(&out);
        let band = 4.0 * (p * (1.0 - p) / count as f64).sqrt();
        assert!((mean - p).abs() <= band, "mean {mean} vs {p} +/- {band}");
    }

    #[test]
    fn output_stays_symmetric_binary() {
        let spec = ModelSpec::<f64> {
            horizon: 5,
            n1: 8,
            n2: 8,
            symmetric: true,
            dependence: Dependence::Independent,
            change_points: vec![],
            segment_thetas: vec![ProbMatrix::constant(8, 8, 0.3, true).unwrap()],
        };
        let raw = sample_sequence(&spec, 1).unwrap();
        let out = rr_privatize(&raw, 0.5, 2).unwrap();
        assert!(out.is_symmetric());
        for t in 1..=5 {
            let f = out.frame(t);
            for i in 0..8 {
                for j in 0..8 {
                    assert_eq!(f[(i, j)], f[(j, i)]);
                    assert!(f[(i, j)] == 0.0 || f[(i, j)] == 1.0);
                }
            }
        }
    }

    #[test]
    fn rejects_wrong_inputs() {
        let bip = NetworkSequence::new(
            vec![Array2::from_elem((2, 3), 1.0_f64)],
            Domain::Binary01,
            false,
        )
        .unwrap();
        assert!(rr_privatize(&bip, 1.0, 0).is_err());

        let seq = ones_seq(3, 2);
        assert!(rr_privatize(&seq, -1.0, 0).is_err());
    }
}
