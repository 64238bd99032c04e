//! Brute-force oracles used by the integration suites.
//!
//! Everything here is computed directly from the CUSUM definition on raw
//! frames, independently of the library's prefix-sum and streaming paths.

use ndarray::Array2;
use privnet::netgen::NetworkSequence;

/// CUSUM matrix at split `t` of window `(s, e)`, by direct summation.
pub fn brute_cusum(frames: &[Array2<f64>], s: usize, t: usize, e: usize) -> Array2<f64> {
    let (sf, tf, ef) = (s as f64, t as f64, e as f64);
    let left = ((ef - tf) / ((ef - sf) * (tf - sf))).sqrt();
    let right = ((tf - sf) / ((ef - sf) * (ef - tf))).sqrt();
    let dim = frames[0].dim();
    let mut acc = Array2::<f64>::zeros(dim);
    for frame in frames.iter().take(t).skip(s) {
        acc += frame;
    }
    let mut out = acc.mapv(|x| left * x);
    let mut acc2 = Array2::<f64>::zeros(dim);
    for frame in frames.iter().take(e).skip(t) {
        acc2 += frame;
    }
    out -= &acc2.mapv(|x| right * x);
    out
}

/// Frobenius inner product of the two CUSUM matrices.
pub fn brute_inner(
    u: &NetworkSequence<f64>,
    v: &NetworkSequence<f64>,
    s: usize,
    t: usize,
    e: usize,
) -> f64 {
    let cu = brute_cusum(u.frames(), s, t, e);
    let cv = brute_cusum(v.frames(), s, t, e);
    cu.iter().zip(cv.iter()).map(|(a, b)| a * b).sum()
}

/// Exhaustive scan over `t = s+1, ..., e-1`; smallest maximizer on ties.
pub fn brute_scan(
    u: &NetworkSequence<f64>,
    v: &NetworkSequence<f64>,
    s: usize,
    e: usize,
) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for t in (s + 1)..e {
        let val = brute_inner(u, v, s, t, e);
        if val > best.1 {
            best = (t, val);
        }
    }
    best
}

/// Reference recursive binary segmentation built on [`brute_scan`].
pub fn brute_bs(
    u: &NetworkSequence<f64>,
    v: &NetworkSequence<f64>,
    s: usize,
    e: usize,
    tau: f64,
    out: &mut Vec<usize>,
) {
    if e <= s || e - s < 2 {
        return;
    }
    let (b, score) = brute_scan(u, v, s, e);
    if score > tau {
        out.push(b);
        brute_bs(u, v, s, b, tau, out);
        brute_bs(u, v, b + 1, e, tau, out);
    }
}
