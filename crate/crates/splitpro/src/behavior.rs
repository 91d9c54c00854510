//! Finite-window behaviors of linear time-invariant systems.
//!
//! The behavior restricted to a window of length `L` is the subspace of
//! `R^(q*L)` traced out by all trajectories the system can produce over `L`
//! steps. Two routes lead to an orthonormal basis of that subspace:
//!
//! * [`ss_basis`] simulates a state-space model `(A, B, C, D)` from every
//!   unit initial state and unit input impulse, spanning the window image
//!   directly; and
//! * [`hankel_basis`] orthonormalizes the column space of a depth-`L` Hankel
//!   matrix built from one recorded trajectory, which spans the same subspace
//!   whenever the data passes the generalized persistency-of-excitation rank
//!   test ([`persistency_check`]).
//!
//! Both produce a [`BasisRep`] with `m*L + n` orthonormal columns, where `m`
//! is the input count and `n` the state order.

use crate::linalg;
use crate::trajectory::{Partition, Trajectory};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// State-space model `x+ = A x + B u`, `y = C x + D u` together with the
/// partition mapping `(u, y)` stacks to signal samples `w`.
///
/// Observability of `(A, C)` is checked at construction; the order reported
/// by [`invariants_of`] is the state dimension, so unobservable realizations
/// would misreport every derived quantity.
#[derive(Debug, Clone)]
pub struct StateSpaceRep {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    partition: Partition,
}

impl StateSpaceRep {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        partition: Partition,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D {}x{} does not match p = {}, m = {}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if partition.m() != b.ncols() || partition.p() != c.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "partition (m = {}, p = {}) does not match B/C (m = {}, p = {})",
                partition.m(),
                partition.p(),
                b.ncols(),
                c.nrows()
            )));
        }
        let rep = Self {
            a,
            b,
            c,
            d,
            partition,
        };
        // Observability doubles as the existence check for the lag.
        rep.lag()?;
        Ok(rep)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// State order `n`.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Signal dimension `q = m + p`.
    pub fn q(&self) -> usize {
        self.partition.q()
    }

    /// Observability index: the smallest `k` with
    /// `rank [C; CA; ...; CA^(k-1)] = n`.
    pub fn lag(&self) -> Result<usize> {
        let n = self.order();
        let p = self.c.nrows();
        let mut stacked = DMatrix::zeros(p * n, n);
        let mut block = self.c.clone();
        for k in 0..n {
            stacked.view_mut((p * k, 0), (p, n)).copy_from(&block);
            let filled = stacked.view((0, 0), (p * (k + 1), n)).into_owned();
            if linalg::numerical_rank(&filled, linalg::RANK_REL_TOL) == n {
                return Ok(k + 1);
            }
            block = &block * &self.a;
        }
        Err(Error::NotObservable)
    }

    /// One simulation step: returns `(w, x_next)` for the given state and
    /// input sample.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if x.len() != self.order() || u.len() != self.b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "state/input lengths ({}, {}) != ({}, {})",
                x.len(),
                u.len(),
                self.order(),
                self.b.ncols()
            )));
        }
        let y = &self.c * x + &self.d * u;
        let w = self.partition.merge(u, &y)?;
        let x_next = &self.a * x + &self.b * u;
        Ok((w, x_next))
    }
}

/// Recorded-data representation: one trajectory plus the window depth of the
/// Hankel matrix built from it.
#[derive(Debug, Clone)]
pub struct HankelRep {
    data: Trajectory,
    depth: usize,
}

impl HankelRep {
    pub fn new(data: Trajectory, depth: usize) -> Result<Self> {
        if depth == 0 || depth > data.t_len() {
            return Err(Error::DepthOutOfRange(format!(
                "depth {depth} outside [1, {}]",
                data.t_len()
            )));
        }
        Ok(Self { data, depth })
    }

    pub fn data(&self) -> &Trajectory {
        &self.data
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

/// Orthonormal basis of a behavior over a window of `horizon` samples.
#[derive(Debug, Clone)]
pub struct BasisRep {
    basis: DMatrix<f64>,
    horizon: usize,
}

impl BasisRep {
    /// Wraps an orthonormal basis whose row count is `q * horizon`.
    pub fn new(basis: DMatrix<f64>, horizon: usize) -> Result<Self> {
        if horizon == 0 || !basis.nrows().is_multiple_of(horizon) || basis.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "basis rows {} not a positive multiple of horizon {horizon}",
                basis.nrows()
            )));
        }
        if basis.ncols() > basis.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "basis has more columns ({}) than ambient dimensions ({})",
                basis.ncols(),
                basis.nrows()
            )));
        }
        if !linalg::is_orthonormal(&basis, 1e-8) {
            return Err(Error::DimensionMismatch(
                "basis columns are not orthonormal".into(),
            ));
        }
        Ok(Self { basis, horizon })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Signal dimension per sample.
    pub fn q(&self) -> usize {
        self.basis.nrows() / self.horizon
    }

    /// Subspace dimension `r`.
    pub fn r(&self) -> usize {
        self.basis.ncols()
    }

    /// Ambient dimension `q * horizon`.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }
}

/// Integer invariants of a behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerInvariants {
    /// Input count.
    pub m: usize,
    /// Output count.
    pub p: usize,
    /// State order.
    pub n: usize,
    /// Lag (observability index).
    pub lag: usize,
}

/// Invariants of a state-space representation.
pub fn invariants_of(rep: &StateSpaceRep) -> Result<IntegerInvariants> {
    Ok(IntegerInvariants {
        m: rep.partition().m(),
        p: rep.partition().p(),
        n: rep.order(),
        lag: rep.lag()?,
    })
}

/// Dimension of the behavior restricted to a window of `horizon >= lag`
/// samples: `m * horizon + n`. Degenerates consistently for `m = 0`
/// (autonomous systems).
pub fn behavior_dim(m: usize, n: usize, horizon: usize) -> usize {
    m * horizon + n
}

/// Hankel matrix of window depth `depth`: column `j` stacks samples
/// `j+1 ..= j+depth` of `w`, giving a `q*depth x (T - depth + 1)` matrix.
pub fn hankel(w: &Trajectory, depth: usize) -> Result<DMatrix<f64>> {
    let t_len = w.t_len();
    if depth == 0 || depth > t_len {
        return Err(Error::DepthOutOfRange(format!(
            "depth {depth} outside [1, {t_len}]"
        )));
    }
    let q = w.q();
    let cols = t_len - depth + 1;
    let flat = w.data();
    Ok(DMatrix::from_fn(q * depth, cols, |i, j| flat[j * q + i]))
}

/// Generalized persistency-of-excitation test: the depth-`depth` Hankel
/// matrix of `w` must have numerical rank exactly `m * depth + n`, where
/// singular values below `rel_tol * sigma_max` count as zero.
///
/// Returns an error when the matrix has fewer than `m * depth + n` columns,
/// since the rank condition could then never hold for any data.
pub fn persistency_check(
    w: &Trajectory,
    depth: usize,
    m: usize,
    n: usize,
    rel_tol: f64,
) -> Result<bool> {
    let h = hankel(w, depth)?;
    let needed = behavior_dim(m, n, depth);
    if h.ncols() < needed {
        return Err(Error::InsufficientData(format!(
            "{} Hankel columns < m*depth + n = {}",
            h.ncols(),
            needed
        )));
    }
    Ok(linalg::numerical_rank(&h, rel_tol) == needed)
}

/// Orthonormal basis of the window-`horizon` behavior of a state-space
/// model, built by simulating all unit initial states and unit input
/// impulses and orthonormalizing the resulting trajectory matrix.
pub fn ss_basis(rep: &StateSpaceRep, horizon: usize) -> Result<BasisRep> {
    let lag = rep.lag()?;
    if horizon < lag {
        return Err(Error::HorizonTooShort(format!(
            "horizon {horizon} < lag {lag}"
        )));
    }
    let n = rep.order();
    let m = rep.partition().m();
    let q = rep.q();
    let ncols = n + m * horizon;
    let mut gen = DMatrix::zeros(q * horizon, ncols);
    for col in 0..ncols {
        let mut x = DVector::zeros(n);
        if col < n {
            x[col] = 1.0;
        }
        let mut u_all = DMatrix::zeros(m, horizon);
        if col >= n {
            let k = col - n;
            u_all[(k % m, k / m)] = 1.0;
        }
        for t in 0..horizon {
            let (w, x_next) = rep.step(&x, &u_all.column(t).into_owned())?;
            gen.view_mut((q * t, col), (q, 1)).copy_from(&w);
            x = x_next;
        }
    }
    let basis = linalg::orthonormal_col_basis(&gen, linalg::RANK_REL_TOL);
    debug_assert_eq!(basis.ncols(), behavior_dim(m, n, horizon));
    BasisRep::new(basis, horizon)
}

/// Orthonormal basis of the window-`depth` behavior spanned by the columns
/// of a Hankel matrix of recorded data. Fails unless the data passes
/// [`persistency_check`] for the claimed input count `m` and order `n`.
pub fn hankel_basis(rep: &HankelRep, m: usize, n: usize, rel_tol: f64) -> Result<BasisRep> {
    if !persistency_check(rep.data(), rep.depth(), m, n, rel_tol)? {
        return Err(Error::NotPersistentlyExciting(format!(
            "Hankel rank != m*depth + n = {}",
            behavior_dim(m, n, rep.depth())
        )));
    }
    let h = hankel(rep.data(), rep.depth())?;
    let basis = linalg::orthonormal_col_basis(&h, rel_tol);
    BasisRep::new(basis, rep.depth())
}

/// Largest principal angle (radians) between two window bases of matching
/// shape. Zero means both describe the same restricted behavior, whichever
/// representations they came from.
pub fn basis_angle(a: &BasisRep, b: &BasisRep) -> Result<f64> {
    if a.q() != b.q() || a.horizon() != b.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "{} variables over {} steps vs {} over {}",
            a.q(),
            a.horizon(),
            b.q(),
            b.horizon()
        )));
    }
    Ok(linalg::max_principal_angle(a.basis(), b.basis()))
}

/// Simulates `rep` for `t_len` steps from the zero state, driving every
/// input channel with i.i.d. uniform samples from `input_range`. The draw
/// order is fixed (channel-major within each step), so a seed fully
/// determines the trajectory.
pub fn collect_data(
    rep: &StateSpaceRep,
    t_len: usize,
    seed: u64,
    input_range: (f64, f64),
) -> Result<Trajectory> {
    if t_len == 0 {
        return Err(Error::DimensionMismatch("t_len = 0".into()));
    }
    // NaN bounds fail this comparison too, which is what we want.
    if input_range.0.partial_cmp(&input_range.1) != Some(std::cmp::Ordering::Less) {
        return Err(Error::DimensionMismatch(format!(
            "empty input range [{}, {}]",
            input_range.0, input_range.1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(input_range.0, input_range.1);
    let m = rep.partition().m();
    let q = rep.q();
    let mut out = Trajectory::zeros(q, t_len)?;
    let mut x = DVector::zeros(rep.order());
    for t in 1..=t_len {
        let u = DVector::from_fn(m, |_, _| dist.sample(&mut rng));
        let (w, x_next) = rep.step(&x, &u)?;
        out.sample_mut(t).copy_from_slice(w.as_slice());
        x = x_next;
    }
    Ok(out)
}
