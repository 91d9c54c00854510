//! Shared helpers for the integration suites: seeded random systems and
//! independent oracles (SVD rank, principal angles, finite differences,
//! exhaustive nearest-point search) that deliberately do not reuse the
//! library's own numerics for the quantities under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitpro::behavior::{ss_basis, StateSpaceRep};
use splitpro::lqt::{LqtProblem, ProblemBehavior};
use splitpro::trajectory::{Partition, Trajectory};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.gen_range(-1.0..1.0))
}

/// Seeded random observable system with up to 6 states, 2 inputs and
/// 2 outputs. The state matrix is rescaled to spectral radius 0.9 so
/// simulated data stays bounded; unobservable draws are rejected.
pub fn random_observable_system(seed: u64) -> StateSpaceRep {
    let mut rng = rng(seed ^ 0x517c_c1b7_2722_0a95);
    loop {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=2);
        let p = rng.gen_range(1..=2);
        let mut a = uniform_matrix(&mut rng, n, n);
        let radius = a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if radius > 1e-12 {
            a *= 0.9 / radius;
        }
        let b = uniform_matrix(&mut rng, n, m);
        let c = uniform_matrix(&mut rng, p, n);
        let d = uniform_matrix(&mut rng, p, m);
        let partition = Partition::identity(m + p, m).unwrap();
        if let Ok(rep) = StateSpaceRep::new(a, b, c, d, partition) {
            return rep;
        }
    }
}

/// Drives `rep` from state `x0` with the given input samples.
pub fn simulate(rep: &StateSpaceRep, x0: &DVector<f64>, inputs: &[DVector<f64>]) -> Trajectory {
    let q = rep.q();
    let mut out = Trajectory::zeros(q, inputs.len()).unwrap();
    let mut x = x0.clone();
    for (t, u) in inputs.iter().enumerate() {
        let (w, x_next) = rep.step(&x, u).unwrap();
        out.sample_mut(t + 1).copy_from_slice(w.as_slice());
        x = x_next;
    }
    out
}

/// Rank through singular values only — independent of the library's own
/// rank decisions.
pub fn svd_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    // Catches the all-zero matrix and NaN contamination alike.
    if max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Sine of the largest principal angle between two orthonormal column
/// spans, from both one-sided residuals.
pub fn sin_angle(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> f64 {
    let side = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let r = y - x * (x.transpose() * y);
        if r.ncols() == 0 {
            0.0
        } else {
            r.clone().svd(false, false).singular_values.max()
        }
    };
    side(b1, b2).max(side(b2, b1))
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    x: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut hi = x.clone();
        hi[i] += h;
        let mut lo = x.clone();
        lo[i] -= h;
        (f(&hi) - f(&lo)) / (2.0 * h)
    })
}

/// Nearest point to `w` subject to `eq_a x = eq_b` and `in_a x <= in_b`,
/// found by enumerating every active set of the inequalities and solving
/// the resulting equality-constrained candidates by least squares. A
/// candidate counts when it is feasible with nonnegative multipliers; the
/// closest one wins. Exponential in the inequality count — strictly an
/// oracle for small instances.
pub fn qp_nearest_point(
    w: &DVector<f64>,
    eq_a: &DMatrix<f64>,
    eq_b: &DVector<f64>,
    in_a: &DMatrix<f64>,
    in_b: &DVector<f64>,
) -> DVector<f64> {
    let dim = w.len();
    let rows = in_a.nrows();
    assert!(rows <= 16, "oracle is exponential in inequality rows");
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << rows) {
        let active: Vec<usize> = (0..rows).filter(|i| mask & (1 << i) != 0).collect();
        // More active rows than dimensions is necessarily degenerate, and
        // any such minimizer also shows up under one of its subsets.
        if active.len() > dim {
            continue;
        }
        let extra = eq_a.nrows() + active.len();
        let size = dim + extra;
        let mut kkt = DMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        for i in 0..dim {
            kkt[(i, i)] = 1.0;
            rhs[i] = w[i];
        }
        for r in 0..eq_a.nrows() {
            for c in 0..dim {
                kkt[(dim + r, c)] = eq_a[(r, c)];
                kkt[(c, dim + r)] = eq_a[(r, c)];
            }
            rhs[dim + r] = eq_b[r];
        }
        for (k, &r) in active.iter().enumerate() {
            let at = dim + eq_a.nrows() + k;
            for c in 0..dim {
                kkt[(at, c)] = in_a[(r, c)];
                kkt[(c, at)] = in_a[(r, c)];
            }
            rhs[at] = in_b[r];
        }
        let Some(sol) = kkt.svd(true, true).solve(&rhs, 1e-12).ok() else {
            continue;
        };
        let x = sol.rows(0, dim).into_owned();
        if eq_a.nrows() > 0 && (eq_a * &x - eq_b).amax() > 1e-8 {
            continue;
        }
        if rows > 0 {
            let slack = in_b - in_a * &x;
            if slack.min() < -1e-8 {
                continue;
            }
        }
        let mu = sol.rows(dim + eq_a.nrows(), active.len());
        if !active.is_empty() && mu.min() < -1e-8 {
            continue;
        }
        let dist = (&x - w).norm();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.expect("no feasible candidate — oracle instance is infeasible")
        .1
}

/// Random feasible tracking instance on `sys`: the prefix is a genuinely
/// simulated window (so it lies in the behavior by construction), the
/// reference is uniform in [-1, 1] and the weight is the identity.
pub fn tracking_instance(sys: &StateSpaceRep, t_f: usize, seed: u64) -> LqtProblem {
    let mut rng = rng(seed ^ 0x2545_f491_4f6c_dd1d);
    let q = sys.q();
    let t_ini = sys.lag().unwrap();
    let basis = ss_basis(sys, t_ini + t_f).unwrap();
    let x0 = uniform_vector(&mut rng, sys.order());
    let inputs: Vec<DVector<f64>> = (0..t_ini)
        .map(|_| uniform_vector(&mut rng, sys.partition().m()))
        .collect();
    let w_ini = simulate(sys, &x0, &inputs);
    let w_ref = Trajectory::new(uniform_vector(&mut rng, q * t_f), q).unwrap();
    LqtProblem::new(
        ProblemBehavior::Basis(basis),
        w_ini,
        w_ref,
        DMatrix::identity(q, q),
    )
    .unwrap()
}
