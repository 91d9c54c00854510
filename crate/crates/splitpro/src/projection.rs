//! Euclidean projections onto the constraint sets used by the solvers.
//!
//! [`Projector`] enumerates the set kinds: behavior subspaces, the affine
//! slice of a behavior with a pinned prefix, boxes and half-spaces for
//! input constraints, products of independent blocks (one block per
//! subsystem), and interconnection couplings that force designated
//! coordinates to agree.
//!
//! Intersections are handled iteratively: [`von_neumann`] alternates between
//! two sets, [`cyclic`] sweeps any number of them, and [`dykstra`] adds the
//! correction terms that make the limit the exact nearest point for general
//! convex sets. For affine sets plain sweeps already converge to the exact
//! projection, which is why the distributed solver defaults to them when
//! every set is affine.

use crate::behavior::BasisRep;
use crate::linalg;
use crate::trajectory::Trajectory;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// One block of a product projector: a projector applied to the listed
/// global coordinates (in the order given).
#[derive(Debug, Clone)]
pub struct ProductPart {
    pub projector: Projector,
    pub indices: Vec<usize>,
}

/// Euclidean projection onto a closed convex set.
#[derive(Debug, Clone)]
pub enum Projector {
    /// Linear subspace spanned by orthonormal columns: `P w = B (B' w)`.
    Subspace { basis: DMatrix<f64> },
    /// Affine set fixing the leading coordinates to a prefix trajectory.
    PrefixFix { prefix: DVector<f64>, dim: usize },
    /// Per-coordinate bounds; entries may be infinite.
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// Half-space `{ w : normal' w <= offset }`.
    Halfspace { normal: DVector<f64>, offset: f64 },
    /// Behavior slice `{ B g : prefix of B g = w_ini }`, stored as an anchor
    /// point plus an orthonormal basis of the parallel subspace.
    AffineBehavior {
        anchor: DVector<f64>,
        parallel: DMatrix<f64>,
    },
    /// Independent blocks over disjoint coordinate sets that together cover
    /// the ambient space.
    Product { parts: Vec<ProductPart>, dim: usize },
    /// Coordinate classes forced to a common value (replaced by the class
    /// mean); classes may share no coordinate.
    Coupling {
        classes: Vec<Vec<usize>>,
        dim: usize,
    },
}

impl Projector {
    /// Subspace projector from an orthonormal basis.
    pub fn subspace(basis: DMatrix<f64>) -> Result<Self> {
        if !linalg::is_orthonormal(&basis, 1e-8) {
            return Err(Error::DimensionMismatch(
                "subspace basis columns are not orthonormal".into(),
            ));
        }
        Ok(Projector::Subspace { basis })
    }

    /// Subspace projector for a behavior basis.
    pub fn behavior(basis: &BasisRep) -> Self {
        Projector::Subspace {
            basis: basis.basis().clone(),
        }
    }

    /// Affine set pinning the first `prefix.len()` coordinates.
    pub fn prefix_fix(prefix: DVector<f64>, dim: usize) -> Result<Self> {
        if prefix.len() > dim {
            return Err(Error::DimensionMismatch(format!(
                "prefix length {} exceeds ambient dimension {dim}",
                prefix.len()
            )));
        }
        Ok(Projector::PrefixFix { prefix, dim })
    }

    /// Box with per-coordinate bounds (`-inf`/`inf` leave a side open).
    pub fn bounds(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(format!(
                "bound lengths {} != {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::Infeasible("box has lo > hi".into()));
        }
        Ok(Projector::Box { lo, hi })
    }

    /// Half-space `normal' w <= offset`.
    pub fn halfspace(normal: DVector<f64>, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::DimensionMismatch("half-space normal is zero".into()));
        }
        Ok(Projector::Halfspace { normal, offset })
    }

    /// Affine slice of a behavior: all window trajectories whose first
    /// `w_ini.t_len()` samples equal `w_ini`. Fails with
    /// [`Error::InfeasiblePrefix`] when `w_ini` is not itself a trajectory
    /// the behavior can produce.
    pub fn affine_behavior(basis: &BasisRep, w_ini: &Trajectory) -> Result<Self> {
        if w_ini.q() != basis.q() {
            return Err(Error::DimensionMismatch(format!(
                "prefix q = {} != behavior q = {}",
                w_ini.q(),
                basis.q()
            )));
        }
        if w_ini.t_len() > basis.horizon() {
            return Err(Error::DimensionMismatch(format!(
                "prefix length {} exceeds horizon {}",
                w_ini.t_len(),
                basis.horizon()
            )));
        }
        let prefix_len = w_ini.q() * w_ini.t_len();
        let e = basis.basis().rows(0, prefix_len).into_owned();
        let (g0, resid) = linalg::least_squares_min_norm(&e, w_ini.data(), linalg::RANK_REL_TOL);
        if resid > 1e-8 * (1.0 + w_ini.data().amax()) {
            return Err(Error::InfeasiblePrefix(format!(
                "prefix completion residual {resid:.3e}"
            )));
        }
        let null = linalg::null_space_basis(&e, linalg::RANK_REL_TOL);
        Ok(Projector::AffineBehavior {
            anchor: basis.basis() * g0,
            parallel: basis.basis() * null,
        })
    }

    /// Product of blocks over disjoint index sets covering `0..dim`.
    pub fn product(parts: Vec<ProductPart>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for part in &parts {
            if part.indices.len() != part.projector.dim() {
                return Err(Error::LayoutMismatch(format!(
                    "block lists {} coordinates for a {}-dimensional projector",
                    part.indices.len(),
                    part.projector.dim()
                )));
            }
            for &i in &part.indices {
                if i >= dim {
                    return Err(Error::LayoutMismatch(format!(
                        "coordinate {i} outside 0..{dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::LayoutMismatch(format!(
                        "coordinate {i} claimed by two blocks"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::LayoutMismatch(format!(
                "coordinate {i} not covered by any block"
            )));
        }
        Ok(Projector::Product { parts, dim })
    }

    /// Coupling constraints given as coordinate pairs to equalize. Pairs
    /// sharing a coordinate merge into one class, so the projection stays
    /// the exact nearest point even when one output feeds several inputs.
    pub fn coupling(pairs: &[(usize, usize)], dim: usize) -> Result<Self> {
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(a, b) in pairs {
            if a >= dim || b >= dim {
                return Err(Error::LayoutMismatch(format!(
                    "coupled coordinate ({a}, {b}) outside 0..{dim}"
                )));
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..dim {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let classes: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
        Ok(Projector::Coupling { classes, dim })
    }

    /// Ambient dimension the projector acts on.
    pub fn dim(&self) -> usize {
        match self {
            Projector::Subspace { basis } => basis.nrows(),
            Projector::PrefixFix { dim, .. } => *dim,
            Projector::Box { lo, .. } => lo.len(),
            Projector::Halfspace { normal, .. } => normal.len(),
            Projector::AffineBehavior { anchor, .. } => anchor.len(),
            Projector::Product { dim, .. } => *dim,
            Projector::Coupling { dim, .. } => *dim,
        }
    }

    /// Whether the set is an affine subspace, in which case plain
    /// alternating sweeps already compute exact intersections.
    pub fn is_affine(&self) -> bool {
        match self {
            Projector::Subspace { .. }
            | Projector::PrefixFix { .. }
            | Projector::AffineBehavior { .. }
            | Projector::Coupling { .. } => true,
            Projector::Box { .. } | Projector::Halfspace { .. } => false,
            Projector::Product { parts, .. } => parts.iter().all(|p| p.projector.is_affine()),
        }
    }

    /// Euclidean projection of `w` onto the set.
    pub fn project(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} != projector dimension {}",
                w.len(),
                self.dim()
            )));
        }
        Ok(match self {
            Projector::Subspace { basis } => basis * (basis.transpose() * w),
            Projector::PrefixFix { prefix, .. } => {
                let mut out = w.clone();
                out.rows_mut(0, prefix.len()).copy_from(prefix);
                out
            }
            Projector::Box { lo, hi } => DVector::from_fn(w.len(), |i, _| w[i].clamp(lo[i], hi[i])),
            Projector::Halfspace { normal, offset } => {
                let excess = normal.dot(w) - offset;
                if excess > 0.0 {
                    w - normal * (excess / normal.norm_squared())
                } else {
                    w.clone()
                }
            }
            Projector::AffineBehavior { anchor, parallel } => {
                let shifted = w - anchor;
                anchor + parallel * (parallel.transpose() * shifted)
            }
            Projector::Product { parts, dim } => {
                let mut out = DVector::zeros(*dim);
                for part in parts {
                    let local = DVector::from_fn(part.indices.len(), |i, _| w[part.indices[i]]);
                    let proj = part.projector.project(&local)?;
                    for (i, &gi) in part.indices.iter().enumerate() {
                        out[gi] = proj[i];
                    }
                }
                out
            }
            Projector::Coupling { classes, .. } => {
                let mut out = w.clone();
                for class in classes {
                    let mean = class.iter().map(|&i| w[i]).sum::<f64>() / class.len() as f64;
                    for &i in class {
                        out[i] = mean;
                    }
                }
                out
            }
        })
    }
}

/// Replaces the leading samples of a window vector with a prefix trajectory.
pub fn prefix_projection(w: &DVector<f64>, w_ini: &Trajectory) -> Result<DVector<f64>> {
    let prefix_len = w_ini.q() * w_ini.t_len();
    if prefix_len > w.len() {
        return Err(Error::DimensionMismatch(format!(
            "prefix length {prefix_len} exceeds vector length {}",
            w.len()
        )));
    }
    let mut out = w.clone();
    out.rows_mut(0, prefix_len).copy_from(w_ini.data());
    Ok(out)
}

/// Projects `w` onto the behavior slice with pinned prefix `w_ini`.
/// Convenience wrapper that builds [`Projector::affine_behavior`] once and
/// applies it; solvers that project repeatedly should keep the projector.
pub fn affine_behavior_project(
    basis: &BasisRep,
    w_ini: &Trajectory,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    Projector::affine_behavior(basis, w_ini)?.project(w)
}

/// Outcome of an alternating-projection run.
#[derive(Debug, Clone)]
pub struct ApResult {
    /// Final iterate.
    pub w: DVector<f64>,
    /// Completed sweeps.
    pub iterations: usize,
    /// Feasibility gap of the last sweep: how far the iterate moved between
    /// the sets it visited. Stays bounded away from zero when the
    /// intersection is empty.
    pub gap: f64,
}

/// Alternating projections between two sets: `w <- P2(P1(w))` until both the
/// iterate change and the feasibility gap fall below `tol`, or `max_iters`
/// sweeps elapse. For affine sets with nonempty intersection the limit is
/// the exact projection of `w0` onto the intersection.
pub fn von_neumann(
    c1: &Projector,
    c2: &Projector,
    w0: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<ApResult> {
    if c1.dim() != c2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "set dimensions {} != {}",
            c1.dim(),
            c2.dim()
        )));
    }
    let mut w = w0.clone();
    let mut gap = f64::INFINITY;
    for k in 1..=max_iters {
        let a = c1.project(&w)?;
        let b = c2.project(&a)?;
        gap = (&a - &b).amax();
        let residual = (&b - &w).amax();
        w = b;
        if residual <= tol && gap <= tol {
            return Ok(ApResult {
                w,
                iterations: k,
                gap,
            });
        }
    }
    Ok(ApResult {
        w,
        iterations: max_iters,
        gap,
    })
}

/// Plain cyclic projection sweeps over any number of sets. Converges to a
/// point of the intersection for general convex sets, and to the exact
/// projection of `w0` when all sets are affine; use [`dykstra`] when a
/// non-affine set needs the exact nearest point.
pub fn cyclic(
    sets: &[Projector],
    w0: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<ApResult> {
    check_set_dims(sets, w0)?;
    let mut w = w0.clone();
    let mut gap = f64::INFINITY;
    for k in 1..=max_iters {
        let mut x = w.clone();
        gap = 0.0_f64;
        for set in sets {
            let next = set.project(&x)?;
            gap = gap.max((&next - &x).amax());
            x = next;
        }
        let residual = (&x - &w).amax();
        w = x;
        if residual <= tol && gap <= tol {
            return Ok(ApResult {
                w,
                iterations: k,
                gap,
            });
        }
    }
    Ok(ApResult {
        w,
        iterations: max_iters,
        gap,
    })
}

/// Dykstra's algorithm: cyclic sweeps with per-set correction terms, whose
/// limit is the exact Euclidean projection of `w0` onto the intersection of
/// general closed convex sets. A single set reduces to one plain projection.
pub fn dykstra(
    sets: &[Projector],
    w0: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<ApResult> {
    check_set_dims(sets, w0)?;
    let mut x = w0.clone();
    let mut corrections = vec![DVector::zeros(w0.len()); sets.len()];
    let mut gap = f64::INFINITY;
    for k in 1..=max_iters {
        let x_prev = x.clone();
        // The iterate can sit still for many sweeps while correction mass
        // transfers between sets (the displacement just cancels within the
        // cycle), so stopping needs *both* the iterate and the corrections
        // to stabilize.
        let mut correction_shift = 0.0_f64;
        for (set, p) in sets.iter().zip(corrections.iter_mut()) {
            let shifted = &x + &*p;
            let y = set.project(&shifted)?;
            let updated = shifted - &y;
            correction_shift = correction_shift.max((&updated - &*p).amax());
            *p = updated;
            x = y;
        }
        let residual = (&x - &x_prev).amax().max(correction_shift);
        if residual <= tol {
            // Candidate stop: confirm feasibility before declaring victory.
            gap = feasibility_gap(sets, &x)?;
            if gap <= tol {
                return Ok(ApResult {
                    w: x,
                    iterations: k,
                    gap,
                });
            }
        }
        if k == max_iters {
            gap = feasibility_gap(sets, &x)?;
        }
    }
    Ok(ApResult {
        w: x,
        iterations: max_iters,
        gap,
    })
}

/// Largest per-set projection displacement, `max_i ||P_i(x) - x||_inf`.
pub fn feasibility_gap(sets: &[Projector], x: &DVector<f64>) -> Result<f64> {
    let mut gap = 0.0_f64;
    for set in sets {
        gap = gap.max((set.project(x)? - x).amax());
    }
    Ok(gap)
}

fn check_set_dims(sets: &[Projector], w0: &DVector<f64>) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::DimensionMismatch("empty set list".into()));
    }
    for set in sets {
        if set.dim() != w0.len() {
            return Err(Error::DimensionMismatch(format!(
                "set dimension {} != vector length {}",
                set.dim(),
                w0.len()
            )));
        }
    }
    Ok(())
}
