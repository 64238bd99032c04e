//! Exact enumeration oracle for the node mechanism.
//!
//! [`channel_exact`] marginalizes the two-stage row sampler in closed form
//! for every binary input and every signed-cube output, giving the exact
//! channel `P(Z = z | V = v)`. [`moments_exact`] and [`privacy_ratio`] are
//! built on top and back the privacy, unbiasedness, and covariance checks.
//! Unlike the sampler, the oracle also accepts general inputs with
//! `|v_j| <= 1`.
//!
//! Cost grows as `3^d * 2^d` for the full table (intermediate sign vectors
//! are enumerated only over coordinates where `v_j = 0`), so the dimension
//! is capped at 12.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::ldp::node::{lower_max, node_constants, upper_min};

/// Hard cap on the exactly enumerable dimension.
pub const MAX_EXACT_DIM: usize = 12;

/// Which privatization channel a ratio query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    EdgeRr,
    Node,
}

/// Exact conditional law of the node mechanism on binary inputs.
///
/// Inputs `v` and outputs `z` are bitmasks over `d` coordinates: bit `j` of
/// `v` is the binary input entry, bit `j` of `z` set means `+B` (clear means
/// `-B`).
#[derive(Debug, Clone)]
pub struct ChannelTable {
    pub d: usize,
    pub alpha: f64,
    /// Output magnitude `B`.
    pub magnitude: f64,
    pmf: Vec<Vec<f64>>,
}

impl ChannelTable {
    /// `P(Z = z | V = v)`.
    pub fn prob(&self, v_mask: usize, z_mask: usize) -> f64 {
        self.pmf[v_mask][z_mask]
    }

    /// Conditional distribution over all `2^d` outputs given `v`.
    pub fn conditional(&self, v_mask: usize) -> &[f64] {
        &self.pmf[v_mask]
    }

    pub fn num_outcomes(&self) -> usize {
        1 << self.d
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "row dimension d must be at least 1".into(),
        ));
    }
    if d > MAX_EXACT_DIM {
        return Err(Error::InvalidParameter(format!(
            "d = {d} exceeds the exact enumeration limit of {MAX_EXACT_DIM} \
             (the table has 4^d entries)"
        )));
    }
    Ok(())
}

/// Number of cube points in each closed halfspace, as exact small integers.
fn halfspace_counts(d: usize) -> (f64, f64) {
    let mut binom = vec![0u64; d + 1];
    binom[0] = 1;
    for k in 1..=d {
        binom[k] = binom[k - 1] * (d - k + 1) as u64 / k as u64;
    }
    let up: u64 = (upper_min(d)..=d).map(|k| binom[k]).sum();
    let dn: u64 = (0..=lower_max(d)).map(|k| binom[k]).sum();
    (up as f64, dn as f64)
}

/// `P(Z = z | signs)` accumulated into `out` with weight `w`.
fn accumulate_given_signs(
    out: &mut [f64],
    w: f64,
    signs_mask: usize,
    d: usize,
    agree_prob: f64,
    m_up: f64,
    m_dn: f64,
) {
    for (z_mask, slot) in out.iter_mut().enumerate() {
        let agreements = d - (z_mask ^ signs_mask).count_ones() as usize;
        let mut p = 0.0;
        if 2 * agreements >= d {
            p += agree_prob / m_up;
        }
        if 2 * agreements <= d {
            p += (1.0 - agree_prob) / m_dn;
        }
        *slot += w * p;
    }
}

/// Exact conditional law `P(Z = z | V = v)` for a fixed raw vector with
/// `|v_j| <= 1`, indexed by output bitmask.
pub fn channel_conditional(d: usize, alpha: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_dim(d)?;
    if v.len() != d {
        return Err(Error::InvalidParameter(format!(
            "input vector has length {}, expected {d}",
            v.len()
        )));
    }
    if v.iter().any(|&x| !((-1.0..=1.0).contains(&x))) {
        return Err(Error::InvalidParameter(
            "input vector entries must lie in [-1, 1]".into(),
        ));
    }
    let params = node_constants(d, alpha)?;
    let (m_up, m_dn) = halfspace_counts(d);
    let mut out = vec![0.0; 1 << d];
    for signs_mask in 0..(1usize << d) {
        let mut w = 1.0;
        for (j, &vj) in v.iter().enumerate() {
            let s = if signs_mask >> j & 1 == 1 { 1.0 } else { -1.0 };
            w *= (1.0 + s * vj) / 2.0;
            if w == 0.0 {
                break;
            }
        }
        if w > 0.0 {
            accumulate_given_signs(&mut out, w, signs_mask, d, params.agree_prob, m_up, m_dn);
        }
    }
    Ok(out)
}

/// Builds the exact channel table over all binary inputs.
pub fn channel_exact(d: usize, alpha: f64) -> Result<ChannelTable> {
    check_dim(d)?;
    let params = node_constants(d, alpha)?;
    let (m_up, m_dn) = halfspace_counts(d);
    let full = (1usize << d) - 1;
    let mut pmf = Vec::with_capacity(1 << d);
    for v_mask in 0..(1usize << d) {
        let free = full & !v_mask;
        let w = 0.5f64.powi(free.count_ones() as i32);
        let mut row = vec![0.0; 1 << d];
        // Coordinates with v_j = 1 have sign +1 surely; the rest are fair
        // and are enumerated as subsets of `free`.
        let mut sub = free;
        loop {
            accumulate_given_signs(
                &mut row,
                w,
                v_mask | sub,
                d,
                params.agree_prob,
                m_up,
                m_dn,
            );
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "channel row for v = {v_mask:#b} sums to {total}, expected 1"
            )));
        }
        pmf.push(row);
    }
    Ok(ChannelTable {
        d,
        alpha,
        magnitude: params.magnitude,
        pmf,
    })
}

/// Worst-case channel likelihood ratio of a mechanism.
///
/// For randomized response the ratio is the analytic `e^alpha` (`d` is
/// ignored). For the node mechanism it is the enumerated
/// `max_{v, v', z} P(z | v) / P(z | v')` over binary inputs, which is
/// bounded by `e^alpha`.
pub fn privacy_ratio(mechanism: Mechanism, d: usize, alpha: f64) -> Result<f64> {
    match mechanism {
        Mechanism::EdgeRr => {
            if !(alpha >= 0.0) || !alpha.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "privacy budget {alpha} must be a finite nonnegative real"
                )));
            }
            Ok(alpha.exp())
        }
        Mechanism::Node => {
            let table = channel_exact(d, alpha)?;
            let mut worst = 0.0f64;
            for z in 0..table.num_outcomes() {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for v in 0..table.num_outcomes() {
                    let p = table.prob(v, z);
                    lo = lo.min(p);
                    hi = hi.max(p);
                }
                worst = worst.max(hi / lo);
            }
            Ok(worst)
        }
    }
}

/// Exact mean vector and covariance matrix of the privatized output for a
/// fixed raw vector `v` with `|v_j| <= 1`.
pub fn moments_exact(d: usize, alpha: f64, v: &[f64]) -> Result<(Vec<f64>, Array2<f64>)> {
    let dist = channel_conditional(d, alpha, v)?;
    let b = node_constants(d, alpha)?.magnitude;
    let mut mean = vec![0.0; d];
    let mut second = Array2::<f64>::zeros((d, d));
    for (z_mask, &p) in dist.iter().enumerate() {
        for i in 0..d {
            let zi = if z_mask >> i & 1 == 1 { b } else { -b };
            mean[i] += p * zi;
            for j in 0..d {
                let zj = if z_mask >> j & 1 == 1 { b } else { -b };
                second[(i, j)] += p * zi * zj;
            }
        }
    }
    let mut cov = second;
    for i in 0..d {
        for j in 0..d {
            cov[(i, j)] -= mean[i] * mean[j];
        }
    }
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::node::ln_binom_row;
    use crate::ldp::rr::EdgeRrParams;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_channel_is_explicit() {
        let t = channel_exact(1, 1.0).unwrap();
        let pi = 1.0f64.exp() / (1.0 + 1.0f64.exp());
        // v = 1: sign forced to +1, so P(+B) = pi.
        assert_abs_diff_eq!(t.prob(1, 1), pi, epsilon = 1e-14);
        assert_abs_diff_eq!(t.prob(1, 0), 1.0 - pi, epsilon = 1e-14);
        // v = 0: fair sign, output is a fair coin.
        assert_abs_diff_eq!(t.prob(0, 1), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(t.prob(0, 0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rows_are_distributions() {
        for d in 1..=6 {
            let t = channel_exact(d, 0.8).unwrap();
            for v in 0..t.num_outcomes() {
                let total: f64 = t.conditional(v).iter().sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                assert!(t.conditional(v).iter().all(|&p| p > 0.0));
            }
        }
    }

    #[test]
    fn boundary_outputs_draw_from_both_halfspaces() {
        // d = 2, v = (1, 1): signs are (+1, +1); outputs with one agreement
        // sit on the boundary and receive mass from both branches, 1/3 total.
        let t = channel_exact(2, 1.0).unwrap();
        let pi = 1.0f64.exp() / (1.0 + 1.0f64.exp());
        assert_abs_diff_eq!(t.prob(0b11, 0b01), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.prob(0b11, 0b10), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.prob(0b11, 0b11), pi / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.prob(0b11, 0b00), (1.0 - pi) / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn halfspace_count_matches_closed_form() {
        for d in [2usize, 4, 6, 8] {
            let (up, dn) = halfspace_counts(d);
            let row = ln_binom_row(d);
            let central = row[d / 2].exp().round();
            let expect = 2f64.powi(d as i32 - 1) + central / 2.0;
            assert_abs_diff_eq!(up, expect, epsilon = 1e-9);
            assert_abs_diff_eq!(dn, expect, epsilon = 1e-9);
        }
        for d in [1usize, 3, 5, 7] {
            let (up, dn) = halfspace_counts(d);
            assert_abs_diff_eq!(up, 2f64.powi(d as i32 - 1), epsilon = 1e-9);
            assert_abs_diff_eq!(dn, 2f64.powi(d as i32 - 1), epsilon = 1e-9);
        }
    }

    #[test]
    fn edge_ratio_is_analytic() {
        for &alpha in &[0.0, 0.5, 1.0] {
            let r = privacy_ratio(Mechanism::EdgeRr, 1, alpha).unwrap();
            assert_eq!(r, alpha.exp());
            // The unsimplified route (1 - q) / q agrees to float precision.
            let p = EdgeRrParams::new(alpha).unwrap();
            let direct = (1.0 - p.flip_prob) / p.flip_prob;
            assert_abs_diff_eq!(direct, r, epsilon = 1e-12 * r);
        }
    }

    #[test]
    fn node_ratio_scalar_case() {
        // Binary inputs do not reach the cube corners, so the worst ratio at
        // d = 1 is (1 + e^alpha) / 2 < e^alpha.
        let r = privacy_ratio(Mechanism::Node, 1, 1.0).unwrap();
        let expect = (1.0 + 1.0f64.exp()) / 2.0;
        assert_abs_diff_eq!(r, expect, epsilon = 1e-12);
        assert!(r <= 1.0f64.exp() + 1e-9);
    }

    #[test]
    fn extreme_inputs_attain_the_budget() {
        // Over the full ball, v = +1 versus v = -1 attains e^alpha exactly.
        for &alpha in &[0.5, 1.0] {
            let plus = channel_conditional(1, alpha, &[1.0]).unwrap();
            let minus = channel_conditional(1, alpha, &[-1.0]).unwrap();
            let ratio = plus[1] / minus[1];
            assert_abs_diff_eq!(ratio, alpha.exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unbiasedness_on_binary_inputs() {
        for d in [1usize, 2, 3, 5] {
            for v_mask in 0..(1usize << d) {
                let v: Vec<f64> = (0..d).map(|j| (v_mask >> j & 1) as f64).collect();
                let (mean, _) = moments_exact(d, 1.0, &v).unwrap();
                for j in 0..d {
                    assert_abs_diff_eq!(mean[j], v[j], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn covariance_matches_closed_forms() {
        // Odd d: Cov(Z_i, Z_j) = -v_i v_j for deterministic inputs.
        for &d in &[3usize, 5] {
            let v: Vec<f64> = (0..d).map(|j| (j % 2) as f64).collect();
            let (_, cov) = moments_exact(d, 0.9, &v).unwrap();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert_abs_diff_eq!(cov[(i, j)], -v[i] * v[j], epsilon = 1e-10);
                    }
                }
            }
        }
        // Even d, all-ones input: Cov(Z_i, Z_j) = -1 - 2 B^2 C(d-2, d/2-1) / (d M).
        for &d in &[2usize, 4, 6] {
            let v = vec![1.0; d];
            let b = node_constants(d, 1.0).unwrap().magnitude;
            let (m_up, _) = halfspace_counts(d);
            let row = ln_binom_row(d - 2);
            let coef = 2.0 * b * b * row[d / 2 - 1].exp() / (d as f64 * m_up);
            let (_, cov) = moments_exact(d, 1.0, &v).unwrap();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert_abs_diff_eq!(cov[(i, j)], -1.0 - coef, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn variance_identity() {
        for d in 1..=6 {
            let v: Vec<f64> = (0..d).map(|j| ((j + 1) % 2) as f64).collect();
            let b = node_constants(d, 0.6).unwrap().magnitude;
            let (_, cov) = moments_exact(d, 0.6, &v).unwrap();
            for i in 0..d {
                assert_abs_diff_eq!(cov[(i, i)], b * b - v[i] * v[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn table_and_general_oracle_agree_on_binary_inputs() {
        for d in 1..=4 {
            let t = channel_exact(d, 0.7).unwrap();
            for v_mask in 0..(1usize << d) {
                let v: Vec<f64> = (0..d).map(|j| (v_mask >> j & 1) as f64).collect();
                let cond = channel_conditional(d, 0.7, &v).unwrap();
                for z in 0..(1usize << d) {
                    assert_abs_diff_eq!(cond[z], t.prob(v_mask, z), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let err = channel_exact(13, 1.0).unwrap_err();
        assert!(err.to_string().contains("exceeds the exact enumeration limit"));
        assert!(channel_exact(0, 1.0).is_err());
        assert!(channel_conditional(2, 1.0, &[0.5, 2.0]).is_err());
        assert!(channel_conditional(2, 1.0, &[0.5]).is_err());
    }
}
