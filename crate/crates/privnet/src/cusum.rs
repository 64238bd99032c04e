//! Matrix CUSUM statistics over a time window and the inner-product scan.
//!
//! For a sequence `X_1, ..., X_T` and integers `0 <= s < t < e <= T`, the
//! CUSUM matrix is
//!
//! ```text
//! sqrt((e-t) / ((e-s)(t-s))) * sum_{i=s+1..t} X_i
//!   - sqrt((t-s) / ((e-s)(e-t))) * sum_{i=t+1..e} X_i
//! ```
//!
//! [`scan_argmax`] maximizes the Frobenius inner product of the CUSUM
//! matrices of two sequences over `t = s+1, ..., e-1`, maintaining running
//! window sums so a full scan costs `O((e-s) * n1 * n2)`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::netgen::NetworkSequence;
use crate::scalar::{from_f64, Scalar};

/// CUSUM matrix together with the `(s, t, e)` window that produced it.
#[derive(Debug, Clone)]
pub struct CusumMatrix<S: Scalar> {
    pub matrix: Array2<S>,
    pub window: (usize, usize, usize),
}

fn check_window(horizon: usize, s: usize, t: usize, e: usize) -> Result<()> {
    if !(s < t && t < e && e <= horizon) {
        return Err(Error::InvalidWindow(format!(
            "require 0 <= s < t < e <= T, got s={s}, t={t}, e={e}, T={horizon}"
        )));
    }
    Ok(())
}

fn check_same_shape<S: Scalar>(u: &NetworkSequence<S>, v: &NetworkSequence<S>) -> Result<()> {
    if u.horizon() != v.horizon() || u.n1() != v.n1() || u.n2() != v.n2() {
        return Err(Error::ShapeMismatch(format!(
            "sequences differ: {}x{}x{} vs {}x{}x{}",
            u.horizon(),
            u.n1(),
            u.n2(),
            v.horizon(),
            v.n1(),
            v.n2()
        )));
    }
    Ok(())
}

/// CUSUM weights at split `t` of window `(s, e)`.
#[inline]
fn weights(s: usize, t: usize, e: usize) -> (f64, f64) {
    let (s, t, e) = (s as f64, t as f64, e as f64);
    let left = ((e - t) / ((e - s) * (t - s))).sqrt();
    let right = ((t - s) / ((e - s) * (e - t))).sqrt();
    (left, right)
}

/// CUSUM matrix of `seq` at split `t` of window `(s, e)`.
pub fn cusum_at<S: Scalar>(
    seq: &NetworkSequence<S>,
    s: usize,
    t: usize,
    e: usize,
) -> Result<CusumMatrix<S>> {
    check_window(seq.horizon(), s, t, e)?;
    let (left, right) = weights(s, t, e);
    let (l, r) = (from_f64::<S>(left), from_f64::<S>(right));
    let mut before = Array2::<S>::zeros((seq.n1(), seq.n2()));
    for i in (s + 1)..=t {
        before += seq.frame(i);
    }
    let mut after = Array2::<S>::zeros((seq.n1(), seq.n2()));
    for i in (t + 1)..=e {
        after += seq.frame(i);
    }
    let matrix = Array2::from_shape_fn((seq.n1(), seq.n2()), |ix| {
        l * before[ix] - r * after[ix]
    });
    Ok(CusumMatrix {
        matrix,
        window: (s, t, e),
    })
}

/// Frobenius inner product of the CUSUM matrices of two sequences.
pub fn cusum_inner<S: Scalar>(
    u: &NetworkSequence<S>,
    v: &NetworkSequence<S>,
    s: usize,
    t: usize,
    e: usize,
) -> Result<S> {
    check_same_shape(u, v)?;
    let cu = cusum_at(u, s, t, e)?;
    let cv = cusum_at(v, s, t, e)?;
    let mut acc = S::zero();
    for (&a, &b) in cu.matrix.iter().zip(cv.matrix.iter()) {
        acc += a * b;
    }
    Ok(acc)
}

/// Maximizes the CUSUM inner product over `t = s+1, ..., e-1`.
///
/// Returns the maximizing split (smallest `t` on ties) and the maximum
/// value. Requires `e - s >= 2` so the scan range is nonempty.
pub fn scan_argmax<S: Scalar>(
    u: &NetworkSequence<S>,
    v: &NetworkSequence<S>,
    s: usize,
    e: usize,
) -> Result<(usize, S)> {
    check_same_shape(u, v)?;
    if e > u.horizon() || s >= e {
        return Err(Error::InvalidWindow(format!(
            "require 0 <= s < e <= T, got s={s}, e={e}, T={}",
            u.horizon()
        )));
    }
    if e - s < 2 {
        return Err(Error::InvalidWindow(format!(
            "scan range (s, e) = ({s}, {e}) admits no split"
        )));
    }

    let cells = u.n1() * u.n2();
    let mut u_run = vec![S::zero(); cells];
    let mut v_run = vec![S::zero(); cells];
    let mut u_tot = vec![S::zero(); cells];
    let mut v_tot = vec![S::zero(); cells];
    for i in (s + 1)..=e {
        let fu = u.frame(i).as_slice().expect("standard layout");
        let fv = v.frame(i).as_slice().expect("standard layout");
        for k in 0..cells {
            u_tot[k] += fu[k];
            v_tot[k] += fv[k];
        }
    }

    let mut best_t = 0usize;
    let mut best = S::neg_infinity();
    for t in (s + 1)..e {
        let fu = u.frame(t).as_slice().expect("standard layout");
        let fv = v.frame(t).as_slice().expect("standard layout");
        for k in 0..cells {
            u_run[k] += fu[k];
            v_run[k] += fv[k];
        }
        // left * run - right * (tot - run) = (left + right) * run - right * tot
        let (left, right) = weights(s, t, e);
        let lr = from_f64::<S>(left + right);
        let r = from_f64::<S>(right);
        let mut acc = S::zero();
        for k in 0..cells {
            let a = lr * u_run[k] - r * u_tot[k];
            let b = lr * v_run[k] - r * v_tot[k];
            acc += a * b;
        }
        if acc > best {
            best = acc;
            best_t = t;
        }
    }
    Ok((best_t, best))
}
