//! Dynamic (bipartite) inhomogeneous Bernoulli network models with change
//! points: specification, validation, sampling, and worst-case instances.
//!
//! Time runs over `t = 1, ..., T`. A change point `eta` is the last index of
//! its segment: the mean matrix satisfies `Theta(t) = Theta_k` for
//! `eta_k < t <= eta_{k+1}` with the conventions `eta_0 = 0` and
//! `eta_{K+1} = T`. The minimal spacing is the smallest segment length
//! `min_k (eta_k - eta_{k-1})`.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_f64, to_f64, Scalar};
use crate::seed::SeedSpace;

/// How entries within one row of a bipartite network depend on each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    /// All entries independent.
    Independent,
    /// One Bernoulli draw per row, copied across the row. Requires every
    /// row of each segment mean matrix to be constant.
    IdenticalRows,
}

/// Entrywise mean matrix of a network snapshot, with all entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix<S: Scalar> {
    values: Array2<S>,
    symmetric: bool,
}

impl<S: Scalar> ProbMatrix<S> {
    pub fn new(values: Array2<S>, symmetric: bool) -> Result<Self> {
        for &v in values.iter() {
            if !(v >= S::zero() && v <= S::one()) {
                return Err(Error::InvalidSpec(format!(
                    "probability entry {v} outside [0, 1]"
                )));
            }
        }
        if symmetric {
            let (r, c) = values.dim();
            if r != c {
                return Err(Error::InvalidSpec(format!(
                    "symmetric probability matrix must be square, got {r}x{c}"
                )));
            }
            for i in 0..r {
                for j in (i + 1)..c {
                    if values[(i, j)] != values[(j, i)] {
                        return Err(Error::InvalidSpec(format!(
                            "symmetric probability matrix differs at ({i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(ProbMatrix { values, symmetric })
    }

    /// Constant matrix with every entry equal to `p`.
    pub fn constant(rows: usize, cols: usize, p: S, symmetric: bool) -> Result<Self> {
        Self::new(Array2::from_elem((rows, cols), p), symmetric)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[(i, j)]
    }

    /// Largest entry, as `f64`.
    pub fn max_entry(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(to_f64(v)))
    }

    /// Frobenius distance to another matrix of the same shape.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.values.dim(), other.values.dim());
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| {
                let d = to_f64(a) - to_f64(b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn row_is_constant(&self, i: usize) -> bool {
        let first = self.values[(i, 0)];
        (0..self.cols()).all(|j| self.values[(i, j)] == first)
    }
}

/// Full generative description of a dynamic network model.
#[derive(Debug, Clone)]
pub struct ModelSpec<S: Scalar> {
    /// Number of time steps `T`.
    pub horizon: usize,
    pub n1: usize,
    pub n2: usize,
    /// Symmetric adjacency matrices (undirected network) versus a bipartite
    /// biadjacency matrix.
    pub symmetric: bool,
    pub dependence: Dependence,
    /// Strictly increasing change points in `{2, ..., T}`; each is the last
    /// time index of its segment.
    pub change_points: Vec<usize>,
    /// One mean matrix per segment (`K + 1` entries).
    pub segment_thetas: Vec<ProbMatrix<S>>,
}

/// Summary parameters computed from a validated [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Minimal spacing between consecutive change points (boundaries
    /// included). Equals `T` when there is no change point.
    pub min_spacing: usize,
    /// Largest entrywise mean across all segments.
    pub sparsity: f64,
    /// Minimal Frobenius distance between consecutive segment means;
    /// `+inf` when there is no change point.
    pub jump: f64,
    /// `jump / (sqrt(n1 * n2) * sparsity)`; `+inf` when there is no change
    /// point.
    pub normalized_jump: f64,
}

/// Entry domain of a [`NetworkSequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Entries in `{0, 1}`.
    Binary01,
    /// Entries in `{-magnitude, +magnitude}`.
    PlusMinus { magnitude: f64 },
    /// Unconstrained real entries (population mean sequences).
    Real,
}

/// Time-ordered sequence of network matrices sharing one shape and domain.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSequence<S: Scalar> {
    frames: Vec<Array2<S>>,
    domain: Domain,
    symmetric: bool,
}

impl<S: Scalar> NetworkSequence<S> {
    pub fn new(frames: Vec<Array2<S>>, domain: Domain, symmetric: bool) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidParameter(
                "network sequence must contain at least one frame".into(),
            ));
        }
        let dim = frames[0].dim();
        for (k, f) in frames.iter().enumerate() {
            if f.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "frame {} has shape {:?}, expected {:?}",
                    k + 1,
                    f.dim(),
                    dim
                )));
            }
            match domain {
                Domain::Binary01 => {
                    if f.iter().any(|&v| v != S::zero() && v != S::one()) {
                        return Err(Error::InvalidParameter(format!(
                            "frame {} has an entry outside {{0, 1}}",
                            k + 1
                        )));
                    }
                }
                Domain::PlusMinus { magnitude } => {
                    let b = from_f64::<S>(magnitude);
                    if f.iter().any(|&v| v != b && v != -b) {
                        return Err(Error::InvalidParameter(format!(
                            "frame {} has an entry outside {{-{magnitude}, +{magnitude}}}",
                            k + 1
                        )));
                    }
                }
                Domain::Real => {}
            }
            if symmetric {
                let (r, c) = dim;
                if r != c {
                    return Err(Error::ShapeMismatch(
                        "symmetric sequence must have square frames".into(),
                    ));
                }
                for i in 0..r {
                    for j in (i + 1)..c {
                        if f[(i, j)] != f[(j, i)] {
                            return Err(Error::InvalidParameter(format!(
                                "frame {} is not symmetric at ({i},{j})",
                                k + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(NetworkSequence {
            frames,
            domain,
            symmetric,
        })
    }

    /// Internal constructor for frames produced under the stated invariants.
    pub(crate) fn from_parts(frames: Vec<Array2<S>>, domain: Domain, symmetric: bool) -> Self {
        NetworkSequence {
            frames,
            domain,
            symmetric,
        }
    }

    /// Number of time steps `T`.
    pub fn horizon(&self) -> usize {
        self.frames.len()
    }

    pub fn n1(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn n2(&self) -> usize {
        self.frames[0].ncols()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Frame at time `t` (1-based).
    pub fn frame(&self, t: usize) -> &Array2<S> {
        &self.frames[t - 1]
    }

    /// All frames; index `k` holds time `k + 1`.
    pub fn frames(&self) -> &[Array2<S>] {
        &self.frames
    }
}

impl<S: Scalar> ModelSpec<S> {
    /// Segment mean matrix in effect at time `t` (1-based).
    pub fn theta_at(&self, t: usize) -> &ProbMatrix<S> {
        let seg = self.change_points.iter().filter(|&&eta| eta < t).count();
        &self.segment_thetas[seg]
    }
}

/// Checks structural invariants and computes the model parameters.
pub fn validate_spec<S: Scalar>(spec: &ModelSpec<S>) -> Result<ModelParams> {
    let t = spec.horizon;
    if t == 0 {
        return Err(Error::InvalidSpec("horizon must be at least 1".into()));
    }
    if spec.n1 == 0 || spec.n2 == 0 {
        return Err(Error::InvalidSpec("node counts must be positive".into()));
    }
    if spec.symmetric && spec.n1 != spec.n2 {
        return Err(Error::InvalidSpec(
            "symmetric model requires n1 == n2".into(),
        ));
    }
    if spec.symmetric && spec.dependence == Dependence::IdenticalRows {
        return Err(Error::InvalidSpec(
            "identical_rows dependence is only valid for bipartite models".into(),
        ));
    }
    let k = spec.change_points.len();
    if spec.segment_thetas.len() != k + 1 {
        return Err(Error::InvalidSpec(format!(
            "{} change points require {} segment matrices, got {}",
            k,
            k + 1,
            spec.segment_thetas.len()
        )));
    }
    for w in spec.change_points.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidSpec(
                "change points must be strictly increasing".into(),
            ));
        }
    }
    for &eta in &spec.change_points {
        if eta < 2 || eta > t {
            return Err(Error::InvalidSpec(format!(
                "change point {eta} outside {{2, ..., {t}}}"
            )));
        }
    }
    for (idx, th) in spec.segment_thetas.iter().enumerate() {
        if th.rows() != spec.n1 || th.cols() != spec.n2 {
            return Err(Error::InvalidSpec(format!(
                "segment {idx} mean matrix is {}x{}, expected {}x{}",
                th.rows(),
                th.cols(),
                spec.n1,
                spec.n2
            )));
        }
        if spec.symmetric && !th.is_symmetric() {
            return Err(Error::InvalidSpec(format!(
                "segment {idx} mean matrix must be symmetric"
            )));
        }
        if spec.dependence == Dependence::IdenticalRows {
            for i in 0..th.rows() {
                if !th.row_is_constant(i) {
                    return Err(Error::InvalidSpec(format!(
                        "identical_rows requires constant rows; segment {idx} row {i} varies"
                    )));
                }
            }
        }
    }

    let mut jump = f64::INFINITY;
    for (idx, pair) in spec.segment_thetas.windows(2).enumerate() {
        let d = pair[0].frobenius_distance(&pair[1]);
        if d == 0.0 {
            return Err(Error::InvalidSpec(format!(
                "segments {idx} and {} have equal mean matrices",
                idx + 1
            )));
        }
        jump = jump.min(d);
    }

    // Boundary conventions eta_0 = 0 and eta_{K+1} = T.
    let mut min_spacing = usize::MAX;
    let mut prev = 0usize;
    for &eta in spec.change_points.iter().chain(std::iter::once(&t)) {
        min_spacing = min_spacing.min(eta - prev);
        prev = eta;
    }

    let sparsity = spec
        .segment_thetas
        .iter()
        .fold(0.0_f64, |acc, th| acc.max(th.max_entry()));

    let normalized_jump = if k == 0 {
        f64::INFINITY
    } else {
        jump / (((spec.n1 * spec.n2) as f64).sqrt() * sparsity)
    };

    Ok(ModelParams {
        min_spacing,
        sparsity,
        jump,
        normalized_jump,
    })
}

/// Samples one snapshot at time `t` using the stream derived from `space`.
pub(crate) fn sample_frame<S: Scalar>(
    spec: &ModelSpec<S>,
    t: usize,
    space: &SeedSpace,
) -> Array2<S> {
    let theta = spec.theta_at(t);
    let mut rng = space.stream("netgen/frame", &[t as u64]);
    let (n1, n2) = (spec.n1, spec.n2);
    let mut m = Array2::<S>::zeros((n1, n2));
    match (spec.symmetric, spec.dependence) {
        (true, _) => {
            // Upper triangle including the diagonal, mirrored below.
            for i in 0..n1 {
                for j in i..n2 {
                    let v = if rng.random_bool(to_f64(theta.get(i, j))) {
                        S::one()
                    } else {
                        S::zero()
                    };
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        (false, Dependence::Independent) => {
            for i in 0..n1 {
                for j in 0..n2 {
                    if rng.random_bool(to_f64(theta.get(i, j))) {
                        m[(i, j)] = S::one();
                    }
                }
            }
        }
        (false, Dependence::IdenticalRows) => {
            for i in 0..n1 {
                let v = if rng.random_bool(to_f64(theta.get(i, 0))) {
                    S::one()
                } else {
                    S::zero()
                };
                for j in 0..n2 {
                    m[(i, j)] = v;
                }
            }
        }
    }
    m
}

/// Draws a binary network sequence from the model.
///
/// Entries are independent Bernoulli draws with the segment means, except in
/// `identical_rows` mode where one draw per row is copied across the row.
/// Each frame uses its own derived stream, so frames are independent and the
/// result does not depend on sampling order.
pub fn sample_sequence<S: Scalar>(spec: &ModelSpec<S>, seed: u64) -> Result<NetworkSequence<S>> {
    validate_spec(spec)?;
    let space = SeedSpace::new(seed);
    let frames = (1..=spec.horizon)
        .map(|t| sample_frame(spec, t, &space))
        .collect();
    Ok(NetworkSequence::from_parts(
        frames,
        Domain::Binary01,
        spec.symmetric,
    ))
}

/// The sequence of population means `Theta(t)`, useful as a noiseless input
/// to the CUSUM and detection routines.
pub fn population_sequence<S: Scalar>(spec: &ModelSpec<S>) -> Result<NetworkSequence<S>> {
    validate_spec(spec)?;
    let frames = (1..=spec.horizon)
        .map(|t| spec.theta_at(t).values().clone())
        .collect();
    Ok(NetworkSequence::from_parts(
        frames,
        Domain::Real,
        spec.symmetric,
    ))
}

/// Which lower-bound construction [`worst_case_instance`] builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCase {
    /// Symmetric rank-one perturbation `rho/2 + (jump/n) v v^T`.
    Edge,
    /// Bipartite identical-rows instance with row means
    /// `rho/2 + jump/sqrt(n1 n2) * v_i`.
    Node,
}

/// Hardest-instance generator with the sign vector `v` drawn from `seed`.
///
/// The pre-change segment carries the perturbation over `t = 1, ..., spacing`
/// and the flat matrix `rho/2` takes over afterwards, so the single change
/// point sits at `spacing`. The squared jump is pinned to
/// `n / (68 (e^alpha - 1)^2 spacing)` for the edge construction and
/// `sqrt(n1) n2 / (20 (e^alpha - 1)^2 spacing)` for the node construction.
#[allow(clippy::too_many_arguments)]
pub fn worst_case_instance<S: Scalar>(
    kind: WorstCase,
    n1: usize,
    n2: usize,
    spacing: usize,
    horizon: usize,
    rho: f64,
    alpha: f64,
    seed: u64,
) -> Result<ModelSpec<S>> {
    let dim = match kind {
        WorstCase::Edge => {
            if n1 != n2 {
                return Err(Error::InvalidParameter(
                    "edge worst case requires n1 == n2".into(),
                ));
            }
            n1
        }
        WorstCase::Node => n1,
    };
    let mut rng = SeedSpace::new(seed).stream("netgen/worst-case-direction", &[]);
    let v: Vec<i8> = (0..dim)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    worst_case_instance_with_direction(kind, &v, n1, n2, spacing, horizon, rho, alpha)
}

/// As [`worst_case_instance`] with an explicit sign vector `v` (entries
/// `+1`/`-1`; length `n` for the edge kind, `n1` for the node kind).
#[allow(clippy::too_many_arguments)]
pub fn worst_case_instance_with_direction<S: Scalar>(
    kind: WorstCase,
    v: &[i8],
    n1: usize,
    n2: usize,
    spacing: usize,
    horizon: usize,
    rho: f64,
    alpha: f64,
) -> Result<ModelSpec<S>> {
    if !(0.0..=1.0).contains(&rho) || rho == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sparsity {rho} outside (0, 1]"
        )));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "privacy budget {alpha} must be positive and finite"
        )));
    }
    if spacing < 2 || spacing > horizon {
        return Err(Error::InvalidParameter(format!(
            "spacing {spacing} must lie in {{2, ..., {horizon}}}"
        )));
    }
    if v.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidParameter(
            "direction vector entries must be +1 or -1".into(),
        ));
    }
    let em1 = alpha.exp_m1();
    let base = rho / 2.0;
    let flat = ProbMatrix::constant(n1, n2, from_f64::<S>(base), kind == WorstCase::Edge)?;

    let (bump, dependence, symmetric) = match kind {
        WorstCase::Edge => {
            let n = n1;
            if v.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "direction vector length {} != n = {n}",
                    v.len()
                )));
            }
            let jump = (n as f64 / (68.0 * em1 * em1 * spacing as f64)).sqrt();
            // Entry range [rho/2 - jump/n, rho/2 + jump/n] within [0, 1]
            // exactly when jump/n < rho/2, i.e. normalized_jump^2 <= 1/4.
            if jump / n as f64 >= base {
                return Err(Error::InvalidParameter(format!(
                    "edge construction infeasible: jump/n = {} >= rho/2 = {base} \
                     (normalized jump squared exceeds 1/4)",
                    jump / n as f64
                )));
            }
            let mut m = Array2::<S>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    let p = base + jump / n as f64 * f64::from(v[i]) * f64::from(v[j]);
                    m[(i, j)] = from_f64(p);
                }
            }
            (
                ProbMatrix::new(m, true)?,
                Dependence::Independent,
                true,
            )
        }
        WorstCase::Node => {
            if v.len() != n1 {
                return Err(Error::InvalidParameter(format!(
                    "direction vector length {} != n1 = {n1}",
                    v.len()
                )));
            }
            let jump =
                ((n1 as f64).sqrt() * n2 as f64 / (20.0 * em1 * em1 * spacing as f64)).sqrt();
            let scale = jump / ((n1 * n2) as f64).sqrt();
            if scale >= base {
                return Err(Error::InvalidParameter(format!(
                    "node construction infeasible: jump/sqrt(n1 n2) = {scale} >= rho/2 = {base} \
                     (normalized jump squared exceeds 1/4)"
                )));
            }
            let mut m = Array2::<S>::zeros((n1, n2));
            for i in 0..n1 {
                let p = base + scale * f64::from(v[i]);
                for j in 0..n2 {
                    m[(i, j)] = from_f64(p);
                }
            }
            (
                ProbMatrix::new(m, false)?,
                Dependence::IdenticalRows,
                false,
            )
        }
    };

    let spec = ModelSpec {
        horizon,
        n1,
        n2,
        symmetric,
        dependence,
        change_points: vec![spacing],
        segment_thetas: vec![bump, flat],
    };
    validate_spec(&spec)?;
    Ok(spec)
}
