//! Row-level privatization of bipartite binary networks.
//!
//! Each biadjacency row `A_i(t) in {0, 1}^d` is mapped to a vector in
//! `{-B, +B}^d` in two stages: first an intermediate sign vector with
//! `P(sign_j = +1) = (1 + A_ij) / 2` independently per coordinate, then a
//! uniform draw from the signed hypercube halfspace agreeing (with
//! probability `e^alpha / (1 + e^alpha)`) or disagreeing with the signs.
//!
//! The halfspace draw is exact rather than by rejection: the number of
//! agreeing coordinates is drawn from the binomial-coefficient categorical
//! restricted to the halfspace (weights kept in log space), and the agreeing
//! set is then placed uniformly, for `O(d)` work per row.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netgen::{Domain, NetworkSequence};
use crate::scalar::{from_f64, Scalar};
use crate::seed::SeedSpace;

/// Derived constants of the row mechanism for dimension `d` and budget
/// `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMechParams {
    pub alpha: f64,
    /// Row dimension `d` (number of columns `n2`).
    pub dim: usize,
    /// Normalizing constant `C_d` making the output unbiased.
    pub norm_const: f64,
    /// Output magnitude `B = C_d (e^alpha + 1) / (e^alpha - 1)`.
    pub magnitude: f64,
    /// Probability of sampling from the agreeing halfspace,
    /// `e^alpha / (1 + e^alpha)`.
    pub agree_prob: f64,
}

/// `ln C(d, k)` for `k = 0..=d`, by the multiplicative recurrence.
pub(crate) fn ln_binom_row(d: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(d + 1);
    row.push(0.0);
    for k in 1..=d {
        let prev = row[k - 1];
        row.push(prev + ((d - k + 1) as f64).ln() - (k as f64).ln());
    }
    row
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Computes the mechanism constants; `C_d` is evaluated in log space.
pub fn node_constants(d: usize, alpha: f64) -> Result<NodeMechParams> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "row dimension d must be at least 1".into(),
        ));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "privacy budget {alpha} must be positive and finite"
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let ln_norm = if d % 2 == 1 {
        // C^{-1} = C(d-1, (d-1)/2) / 2^{d-1}
        let row = ln_binom_row(d - 1);
        (d - 1) as f64 * ln2 - row[(d - 1) / 2]
    } else {
        // C^{-1} = C(d-1, d/2) / (2^{d-1} + C(d, d/2) / 2)
        let row_d = ln_binom_row(d);
        let row_d1 = ln_binom_row(d - 1);
        log_sum_exp((d - 1) as f64 * ln2, row_d[d / 2] - ln2) - row_d1[d / 2]
    };
    let norm_const = ln_norm.exp();
    let ea = alpha.exp();
    Ok(NodeMechParams {
        alpha,
        dim: d,
        norm_const,
        magnitude: norm_const * (ea + 1.0) / (ea - 1.0),
        agree_prob: ea / (1.0 + ea),
    })
}

/// Index of the smallest agreement count inside the `>= 0` halfspace.
pub(crate) fn upper_min(d: usize) -> usize {
    d.div_ceil(2)
}

/// Index of the largest agreement count inside the `<= 0` halfspace.
pub(crate) fn lower_max(d: usize) -> usize {
    d / 2
}

/// Exact halfspace sampler for one mechanism instance.
pub(crate) struct NodeSampler {
    pub(crate) params: NodeMechParams,
    /// Cumulative distribution of the agreement count `k` over
    /// `upper_min(d)..=d`.
    up_cdf: Vec<f64>,
    /// Cumulative distribution of the agreement count `k` over
    /// `0..=lower_max(d)`.
    dn_cdf: Vec<f64>,
}

fn cdf_from_log_weights(lw: &[f64]) -> Vec<f64> {
    let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = w
        .iter()
        .map(|&x| {
            acc += x / total;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

pub(crate) struct RowScratch {
    signs: Vec<i8>,
    order: Vec<usize>,
    agree: Vec<bool>,
}

impl RowScratch {
    pub(crate) fn new(d: usize) -> Self {
        RowScratch {
            signs: vec![0; d],
            order: (0..d).collect(),
            agree: vec![false; d],
        }
    }
}

impl NodeSampler {
    pub(crate) fn new(params: NodeMechParams) -> Self {
        let d = params.dim;
        let row = ln_binom_row(d);
        let up_cdf = cdf_from_log_weights(&row[upper_min(d)..=d]);
        let dn_cdf = cdf_from_log_weights(&row[0..=lower_max(d)]);
        NodeSampler {
            params,
            up_cdf,
            dn_cdf,
        }
    }

    fn sample_count(&self, rng: &mut ChaCha8Rng, upper: bool) -> usize {
        let (cdf, offset) = if upper {
            (&self.up_cdf, upper_min(self.params.dim))
        } else {
            (&self.dn_cdf, 0)
        };
        let u: f64 = rng.random();
        offset + cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }

    /// Privatizes one binary row into `out` (entries `+/- magnitude`).
    pub(crate) fn privatize_row<S: Scalar>(
        &self,
        rng: &mut ChaCha8Rng,
        input: &[S],
        out: &mut [S],
        scratch: &mut RowScratch,
    ) -> Result<()> {
        let d = self.params.dim;
        debug_assert_eq!(input.len(), d);
        for (j, &x) in input.iter().enumerate() {
            scratch.signs[j] = if x == S::one() {
                1
            } else if x == S::zero() {
                if rng.random::<bool>() {
                    1
                } else {
                    -1
                }
            } else {
                return Err(Error::InvalidParameter(format!(
                    "non-binary entry {x} in row input"
                )));
            };
        }
        let upper = rng.random_bool(self.params.agree_prob);
        let k = self.sample_count(rng, upper);
        // Uniform k-subset of coordinates agrees with the sign vector.
        for (j, o) in scratch.order.iter_mut().enumerate() {
            *o = j;
        }
        scratch.agree.fill(false);
        for i in 0..k {
            let j = rng.random_range(i..d);
            scratch.order.swap(i, j);
            scratch.agree[scratch.order[i]] = true;
        }
        let b = from_f64::<S>(self.params.magnitude);
        for j in 0..d {
            let sign = i32::from(scratch.signs[j]) * if scratch.agree[j] { 1 } else { -1 };
            out[j] = if sign > 0 { b } else { -b };
        }
        Ok(())
    }
}

/// Privatizes every row of every snapshot of a bipartite binary sequence.
///
/// The output lives in `{-B, +B}^{n1 x n2}` per snapshot and is unbiased for
/// the input means. Rows and times are independent; each frame uses its own
/// derived stream.
pub fn node_privatize<S: Scalar>(
    seq: &NetworkSequence<S>,
    alpha: f64,
    seed: u64,
) -> Result<NetworkSequence<S>> {
    if seq.domain() != Domain::Binary01 {
        return Err(Error::InvalidParameter(
            "node mechanism requires a binary {0, 1} sequence".into(),
        ));
    }
    if seq.is_symmetric() {
        return Err(Error::InvalidParameter(
            "node mechanism applies to bipartite sequences (symmetric input given)".into(),
        ));
    }
    let params = node_constants(seq.n2(), alpha)?;
    let sampler = NodeSampler::new(params);
    let space = SeedSpace::new(seed);
    let mut scratch = RowScratch::new(seq.n2());
    let mut frames = Vec::with_capacity(seq.horizon());
    for t in 1..=seq.horizon() {
        let mut rng = space.stream("ldp/node/frame", &[t as u64]);
        frames.push(node_privatize_frame(
            seq.frame(t),
            &sampler,
            &mut rng,
            &mut scratch,
        )?);
    }
    Ok(NetworkSequence::from_parts(
        frames,
        Domain::PlusMinus {
            magnitude: params.magnitude,
        },
        false,
    ))
}

pub(crate) fn node_privatize_frame<S: Scalar>(
    frame: &Array2<S>,
    sampler: &NodeSampler,
    rng: &mut ChaCha8Rng,
    scratch: &mut RowScratch,
) -> Result<Array2<S>> {
    let (n1, d) = frame.dim();
    let mut out = Array2::<S>::zeros((n1, d));
    for i in 0..n1 {
        let row = frame.row(i);
        let input = row.as_slice().expect("standard layout");
        let mut out_row = out.row_mut(i);
        let dest = out_row.as_slice_mut().expect("standard layout");
        sampler.privatize_row(rng, input, dest, scratch)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Exact `C_d` through 128-bit integer binomials, for cross-checking the
    /// log-space evaluation.
    fn norm_const_exact(d: usize) -> f64 {
        fn binom(n: u128, k: u128) -> u128 {
            let k = k.min(n - k);
            let mut acc: u128 = 1;
            for i in 0..k {
                acc = acc * (n - i) / (i + 1);
            }
            acc
        }
        if d % 2 == 1 {
            let p: u128 = 1 << (d - 1);
            p as f64 / binom((d - 1) as u128, ((d - 1) / 2) as u128) as f64
        } else {
            let p: u128 = 1 << (d - 1);
            let num = 2 * p + binom(d as u128, (d / 2) as u128);
            num as f64 / (2 * binom((d - 1) as u128, (d / 2) as u128)) as f64
        }
    }

    #[test]
    fn constants_small_dimensions() {
        let p = node_constants(1, 1.0).unwrap();
        assert_abs_diff_eq!(p.norm_const, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.magnitude, 2.16395, epsilon = 1e-5);

        let p = node_constants(2, 1.0).unwrap();
        assert_abs_diff_eq!(p.norm_const, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.magnitude, 6.49186, epsilon = 1e-5);

        let p = node_constants(3, 1.0).unwrap();
        assert_abs_diff_eq!(p.norm_const, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn log_space_matches_exact_rational() {
        for d in 1..=20 {
            let p = node_constants(d, 0.7).unwrap();
            let exact = norm_const_exact(d);
            assert_abs_diff_eq!(p.norm_const, exact, epsilon = 1e-11 * exact);
        }
    }

    #[test]
    fn magnitude_exceeds_one_for_small_budgets() {
        for d in 1..=20 {
            for &alpha in &[0.1, 0.5, 1.0] {
                let p = node_constants(d, alpha).unwrap();
                assert!(p.magnitude > 1.0, "B = {} at d={d}, alpha={alpha}", p.magnitude);
            }
        }
    }

    #[test]
    fn constants_reject_bad_inputs() {
        assert!(node_constants(0, 1.0).is_err());
        assert!(node_constants(3, 0.0).is_err());
        assert!(node_constants(3, -1.0).is_err());
        assert!(node_constants(3, f64::INFINITY).is_err());
    }

    fn constant_rows_seq(n1: usize, d: usize, horizon: usize, v: &[f64]) -> NetworkSequence<f64> {
        let frame = Array2::from_shape_fn((n1, d), |(_, j)| v[j]);
        NetworkSequence::new(vec![frame; horizon], Domain::Binary01, false).unwrap()
    }

    #[test]
    fn outputs_live_on_the_signed_cube() {
        let seq = constant_rows_seq(5, 4, 3, &[1.0, 0.0, 1.0, 0.0]);
        let out = node_privatize(&seq, 0.8, 17).unwrap();
        let b = match out.domain() {
            Domain::PlusMinus { magnitude } => magnitude,
            other => panic!("unexpected domain {other:?}"),
        };
        assert_abs_diff_eq!(b, node_constants(4, 0.8).unwrap().magnitude);
        for t in 1..=3 {
            for &z in out.frame(t).iter() {
                assert!(z == b || z == -b);
            }
        }
    }

    #[test]
    fn scalar_channel_keeps_sign_with_agree_prob() {
        // d = 1, input 1: the intermediate sign is +1 surely, so
        // P(Z = +B) = e^alpha / (1 + e^alpha).
        let alpha = 1.0;
        let seq = constant_rows_seq(1000, 1, 1000, &[1.0]);
        let out = node_privatize(&seq, alpha, 3).unwrap();
        let n = 1_000_000f64;
        let mut plus = 0u64;
        for t in 1..=1000 {
            for &z in out.frame(t).iter() {
                if z > 0.0 {
                    plus += 1;
                }
            }
        }
        let pi = alpha.exp() / (1.0 + alpha.exp());
        let freq = plus as f64 / n;
        let band = 4.0 * (pi * (1.0 - pi) / n).sqrt();
        assert!((freq - pi).abs() <= band, "freq {freq} vs {pi} +/- {band}");
    }

    #[test]
    fn rejects_wrong_inputs() {
        let sym = NetworkSequence::new(
            vec![Array2::from_elem((3, 3), 0.0_f64)],
            Domain::Binary01,
            true,
        )
        .unwrap();
        assert!(node_privatize(&sym, 1.0, 0).is_err());

        let real = NetworkSequence::new(
            vec![Array2::from_elem((2, 3), 0.5_f64)],
            Domain::Real,
            false,
        )
        .unwrap();
        assert!(node_privatize(&real, 1.0, 0).is_err());
    }
}
