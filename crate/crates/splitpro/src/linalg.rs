//! Rank-revealing linear-algebra helpers shared across the crate.
//!
//! Numerical rank is always decided relative to the largest singular value
//! (or pivot magnitude): a direction counts toward the rank when its
//! singular value exceeds `rel_tol * sigma_max`. Every routine here returns
//! matrices with orthonormal columns so downstream projections can use
//! `B * (B' * w)` without normal equations.

use nalgebra::{DMatrix, DVector};

/// Default relative cutoff for rank decisions.
pub(crate) const RANK_REL_TOL: f64 = 1e-10;

/// Numerical rank of `m` with singular values below `rel_tol * sigma_max`
/// treated as zero. The zero matrix has rank 0.
pub(crate) fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the column space of `m` (left singular vectors of the
/// directions above the rank cutoff). Returns a `nrows x rank` matrix; rank 0
/// yields zero columns.
pub(crate) fn orthonormal_col_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = if smax <= 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > rel_tol * smax).count()
    };
    u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the null space `{ x : m x = 0 }`.
///
/// Uses a column-pivoted QR of `m`: with `m P = Q [R11 R12; 0 0]` and
/// `rank = dim R11`, the columns of `P [-R11^{-1} R12; I]` span the null
/// space; a final thin QR re-orthonormalizes them. This avoids the full-size
/// SVD that would otherwise be needed to recover the trailing right singular
/// vectors of a wide matrix.
pub(crate) fn null_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let ncols = m.ncols();
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag_max = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .fold(0.0_f64, f64::max);
    let rank = if diag_max <= 0.0 {
        0
    } else {
        (0..r.nrows().min(r.ncols()))
            .take_while(|&i| r[(i, i)].abs() > rel_tol * diag_max)
            .count()
    };
    let nullity = ncols - rank;
    if nullity == 0 {
        return DMatrix::zeros(ncols, 0);
    }
    if rank == 0 {
        return DMatrix::identity(ncols, ncols);
    }
    // Solve R11 * X = R12 by back-substitution, then undo the column pivots.
    let r11 = r.view((0, 0), (rank, rank));
    let r12 = r.view((0, rank), (rank, nullity));
    let mut x = r12.into_owned();
    r11.solve_upper_triangular_mut(&mut x);
    let mut basis = DMatrix::zeros(ncols, nullity);
    basis.view_mut((0, 0), (rank, nullity)).copy_from(&(-x));
    basis
        .view_mut((rank, 0), (nullity, nullity))
        .copy_from(&DMatrix::identity(nullity, nullity));
    // Rows are currently in pivoted order; permute them back.
    qr.p().inv_permute_rows(&mut basis);
    let qr2 = basis.qr();
    qr2.q()
}

/// Sine of the largest principal angle between the column spans of two
/// orthonormal bases, computed from both one-sided residuals so subspaces of
/// different dimension report a gap of about 1.
///
/// The sine-based form stays accurate for angles far below the `acos`
/// resolution limit near 1.
pub fn subspace_gap(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> f64 {
    let gap_one_sided = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> f64 {
        // || (I - a a') b ||_2 = sin(largest principal angle)
        let resid = b - a * (a.transpose() * b);
        if resid.ncols() == 0 {
            0.0
        } else {
            resid.singular_values().max()
        }
    };
    gap_one_sided(b1, b2).max(gap_one_sided(b2, b1))
}

/// Largest principal angle (radians) between two orthonormal column spans.
pub fn max_principal_angle(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> f64 {
    subspace_gap(b1, b2).clamp(0.0, 1.0).asin()
}

/// Checks `b' b == I` within `tol` entrywise. For matrices above roughly a
/// million entries the full Gram product is replaced by a seeded probe of
/// `b' (b x) - x` on a handful of deterministic vectors, which bounds the
/// same defect at a fraction of the cost.
pub(crate) fn is_orthonormal(b: &DMatrix<f64>, tol: f64) -> bool {
    let (nr, nc) = b.shape();
    if nc == 0 {
        return true;
    }
    if nr * nc <= 1_000_000 {
        let gram = b.transpose() * b;
        let mut defect = 0.0_f64;
        for i in 0..nc {
            for j in 0..nc {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        defect <= tol
    } else {
        let mut state = 0x243f_6a88_85a3_08d3_u64;
        for _ in 0..4 {
            let x = DVector::from_fn(nc, |_, _| {
                // xorshift: cheap deterministic probe entries in [-1, 1]
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            });
            let defect = (b.transpose() * (b * &x) - &x).amax();
            if defect > tol * (nc as f64).sqrt() * x.amax() {
                return false;
            }
        }
        true
    }
}

/// Largest eigenvalue magnitude of a symmetric matrix.
pub(crate) fn spectral_radius_sym(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

/// Infinity operator norm (largest absolute row sum).
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Checks that a weight matrix is square, symmetric, and positive definite.
pub(crate) fn validate_weight(phi: &DMatrix<f64>) -> crate::Result<()> {
    if phi.nrows() != phi.ncols() {
        return Err(crate::Error::DimensionMismatch(format!(
            "{}x{} weight matrix is not square",
            phi.nrows(),
            phi.ncols()
        )));
    }
    let scale = 1.0 + phi.amax();
    if (phi - phi.transpose()).amax() > 1e-10 * scale {
        return Err(crate::Error::NotPositiveDefinite);
    }
    if phi.clone().cholesky().is_none() {
        return Err(crate::Error::NotPositiveDefinite);
    }
    Ok(())
}

/// Minimum-norm least-squares solution of `a x = b` via thin SVD, together
/// with the residual infinity-norm `||a x - b||_inf`.
pub(crate) fn least_squares_min_norm(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rel_tol: f64,
) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, rel_tol * svd.singular_values.max())
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let residual = (a * &x - b).amax();
    (x, residual)
}
