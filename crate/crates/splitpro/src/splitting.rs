//! Iterative solvers for the tracking problem.
//!
//! All three solvers iterate on the stacked window vector. The smooth part
//! is the suffix tracking cost (its gradient is [`grad_h`]); the constraints
//! enter through projections:
//!
//! * [`fb_solve`] — gradient step followed by projection onto the affine
//!   slice of the behavior with the prefix pinned.
//! * [`dy_solve`] — three-operator splitting that separates the prefix pin
//!   from the behavior subspace, evaluating the gradient at the shadow
//!   point between the two projections.
//! * [`split_pro_solve`] — same outer iteration, but the behavior
//!   projection is replaced by a fixed number of alternating-projection
//!   sweeps over factor sets, so no participant ever assembles the full
//!   intersection.
//!
//! Every step size below `1/rho(Phi)` keeps the iteration stable; the
//! default is half that bound. The guard can be switched off to observe the
//! divergence it prevents.

use crate::linalg;
use crate::lqt::LqtProblem;
use crate::projection::{cyclic, dykstra, prefix_projection, Projector};
use crate::trajectory::Trajectory;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// How the inner alternating projections of [`split_pro_solve`] run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMode {
    /// Plain sweeps for at most two affine sets, corrected sweeps otherwise.
    #[default]
    Auto,
    /// Plain alternating-projection sweeps.
    VonNeumann,
    /// Sweeps with Dykstra's correction terms.
    Dykstra,
}

/// Tuning knobs shared by the iterative solvers.
#[derive(Debug, Clone)]
pub struct SplitConfig {
    /// Step size; `None` picks half the stability bound [`step_size_bound`].
    pub alpha: Option<f64>,
    /// Stop once consecutive iterates differ by at most this (sup norm).
    pub tol: f64,
    pub max_outer: usize,
    /// Alternating-projection sweeps per outer iteration.
    pub inner_j: usize,
    pub inner_mode: InnerMode,
    /// Keep every iterate for after-the-fact diagnostics such as
    /// [`fejer_check`].
    pub record_iterates: bool,
    /// Reject step sizes outside the stability interval. Disable only to
    /// demonstrate what happens beyond the bound.
    pub guard_step_size: bool,
    /// Check that the measured prefix is consistent with the behavior
    /// before iterating. Costs one dense decomposition; skip it in loops
    /// where the prefix is feasible by construction.
    pub check_prefix: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            tol: 1e-9,
            max_outer: 50_000,
            inner_j: 5,
            inner_mode: InnerMode::Auto,
            record_iterates: false,
            guard_step_size: true,
            check_prefix: true,
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final stacked window iterate.
    pub w: DVector<f64>,
    pub iterations: usize,
    /// Whether the residual dropped below tolerance within the budget.
    pub converged: bool,
    /// Sup-norm distance between consecutive iterates, one per iteration.
    pub residual_history: Vec<f64>,
    /// Tracking cost of each new iterate's suffix.
    pub cost_history: Vec<f64>,
    /// Feasibility gap left by the inner sweeps, one entry per outer
    /// iteration; empty for solvers without inner sweeps.
    pub inner_gap_history: Vec<f64>,
    iterates: Option<Vec<DVector<f64>>>,
}

impl SolveReport {
    fn start(cfg: &SplitConfig, w1: &DVector<f64>) -> Self {
        Self {
            w: w1.clone(),
            iterations: 0,
            converged: false,
            residual_history: Vec::new(),
            cost_history: Vec::new(),
            inner_gap_history: Vec::new(),
            iterates: cfg.record_iterates.then(|| vec![w1.clone()]),
        }
    }

    fn record(&mut self, w: &DVector<f64>, residual: f64, cost: f64, gap: Option<f64>) {
        self.iterations += 1;
        self.residual_history.push(residual);
        self.cost_history.push(cost);
        if let Some(g) = gap {
            self.inner_gap_history.push(g);
        }
        if let Some(all) = &mut self.iterates {
            all.push(w.clone());
        }
    }

    /// Recorded iterates (first entry is the start), when requested.
    pub fn iterates(&self) -> Option<&[DVector<f64>]> {
        self.iterates.as_deref()
    }
}

/// Counts steps at which the recorded iterates moved measurably farther
/// (in the Euclidean norm) from `anchor`. A convergent splitting run with
/// an admissible step size never does; counting these violations is the
/// cheapest way to catch an unstable configuration in the act.
pub fn fejer_check(report: &SolveReport, anchor: &DVector<f64>) -> Result<usize> {
    let iterates = report.iterates.as_ref().ok_or(Error::IteratesNotRecorded)?;
    let first = iterates.first().ok_or(Error::IteratesNotRecorded)?;
    if anchor.len() != first.len() {
        return Err(Error::DimensionMismatch(format!(
            "anchor of length {}, iterates of length {}",
            anchor.len(),
            first.len()
        )));
    }
    let mut violations = 0;
    let mut prev = (first - anchor).norm();
    for w in &iterates[1..] {
        let dist = (w - anchor).norm();
        if dist > prev + 1e-12 * (1.0 + prev) {
            violations += 1;
        }
        prev = dist;
    }
    Ok(violations)
}

/// Largest admissible step size, `1/rho(Phi)`.
pub fn step_size_bound(phi: &DMatrix<f64>) -> Result<f64> {
    linalg::validate_weight(phi)?;
    Ok(1.0 / linalg::spectral_radius_sym(phi))
}

/// Gradient of the suffix tracking cost as a function of the whole window:
/// zero on the prefix, `2 Phi (w_t - ref_t)` on every suffix block.
pub fn grad_h(
    w: &DVector<f64>,
    phi: &DMatrix<f64>,
    w_ref: &Trajectory,
    t_ini: usize,
) -> Result<DVector<f64>> {
    let q = w_ref.q();
    let prefix = q * t_ini;
    if phi.nrows() != q || phi.ncols() != q {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} weight for {q} variables",
            phi.nrows(),
            phi.ncols()
        )));
    }
    if w.len() != prefix + q * w_ref.t_len() {
        return Err(Error::DimensionMismatch(format!(
            "window of length {}, expected {}",
            w.len(),
            prefix + q * w_ref.t_len()
        )));
    }
    let mut g = DVector::zeros(w.len());
    for t in 0..w_ref.t_len() {
        let d = w.rows(prefix + t * q, q) - w_ref.sample(t + 1);
        g.rows_mut(prefix + t * q, q).copy_from(&(2.0 * phi * d));
    }
    Ok(g)
}

fn resolve_alpha(problem: &LqtProblem, cfg: &SplitConfig) -> Result<f64> {
    let bound = step_size_bound(problem.phi())?;
    let alpha = cfg.alpha.unwrap_or(0.5 * bound);
    if cfg.guard_step_size && !(alpha > 0.0 && alpha < bound) {
        return Err(Error::StepSizeTooLarge(format!(
            "alpha = {alpha:.6e} outside the stability interval (0, {bound:.6e})"
        )));
    }
    if alpha <= 0.0 {
        return Err(Error::StepSizeTooLarge(format!(
            "alpha = {alpha:.6e} must be positive"
        )));
    }
    Ok(alpha)
}

fn start_iterate(problem: &LqtProblem, w1: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    match w1 {
        Some(w) => {
            if w.len() != problem.ambient_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "start iterate of length {}, window has {}",
                    w.len(),
                    problem.ambient_dim()
                )));
            }
            Ok(w.clone())
        }
        None => Ok(problem.default_start()),
    }
}

/// Least-squares residual of reproducing the prefix from the basis.
fn prefix_residual(problem: &LqtProblem) -> Result<f64> {
    let basis = problem.basis()?;
    let e = basis
        .basis()
        .rows(0, problem.q() * problem.t_ini())
        .into_owned();
    let (_, res) = linalg::least_squares_min_norm(&e, problem.w_ini().data(), linalg::RANK_REL_TOL);
    Ok(res)
}

fn guard_prefix(problem: &LqtProblem) -> Result<()> {
    let res = prefix_residual(problem)?;
    if res > 1e-8 * (1.0 + problem.w_ini().data().amax()) {
        return Err(Error::InfeasiblePrefix(format!(
            "prefix residual {res:.3e}"
        )));
    }
    Ok(())
}

/// Projected-gradient iteration: each step descends along the tracking
/// gradient and projects back onto the affine slice of the behavior whose
/// prefix equals the measurement.
pub fn fb_solve(
    problem: &LqtProblem,
    cfg: &SplitConfig,
    w1: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    let alpha = resolve_alpha(problem, cfg)?;
    let basis = problem.basis()?;
    // Building the affine projector already verifies prefix feasibility.
    let slice = Projector::affine_behavior(basis, problem.w_ini())?;
    let mut w = start_iterate(problem, w1)?;
    let mut report = SolveReport::start(cfg, &w);
    for _ in 0..cfg.max_outer {
        let g = grad_h(&w, problem.phi(), problem.w_ref(), problem.t_ini())?;
        let next = slice.project(&(&w - g * alpha))?;
        let residual = (&next - &w).amax();
        w = next;
        report.record(&w, residual, problem.suffix_cost(&w), None);
        if residual <= cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.w = w;
    Ok(report)
}

/// Three-operator splitting: pin the prefix (first projection), take the
/// gradient at that shadow point, project the reflected step onto the
/// behavior subspace, and move the outer iterate by the difference.
pub fn dy_solve(
    problem: &LqtProblem,
    cfg: &SplitConfig,
    w1: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    let alpha = resolve_alpha(problem, cfg)?;
    let basis = problem.basis()?;
    if cfg.check_prefix {
        guard_prefix(problem)?;
    }
    let behavior = Projector::behavior(basis);
    let mut w = start_iterate(problem, w1)?;
    let mut report = SolveReport::start(cfg, &w);
    for _ in 0..cfg.max_outer {
        let z = prefix_projection(&w, problem.w_ini())?;
        let g = grad_h(&z, problem.phi(), problem.w_ref(), problem.t_ini())?;
        let v = behavior.project(&(&z * 2.0 - &w - g * alpha))?;
        let next = &w + &v - &z;
        let residual = (&next - &w).amax();
        w = next;
        report.record(&w, residual, problem.suffix_cost(&w), None);
        if residual <= cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.w = w;
    Ok(report)
}

/// Distributed variant of [`dy_solve`]: the behavior projection is replaced
/// by `inner_j` alternating-projection sweeps over `sets` (plus any extra
/// sets on the problem), so the intersection is never assembled. With a
/// single affine set and exact sweeps it reproduces [`dy_solve`] step for
/// step; with finitely many sweeps the fixed point is biased by whatever
/// gap the sweeps leave, which shrinks as `inner_j` grows.
///
/// The result of each outer iteration lies exactly in the last set of the
/// list, so order the sets accordingly (e.g. hard actuator bounds last).
pub fn split_pro_solve(
    problem: &LqtProblem,
    cfg: &SplitConfig,
    sets: &[Projector],
    w1: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    let alpha = resolve_alpha(problem, cfg)?;
    let all: Vec<Projector> = sets.iter().chain(problem.extra_sets()).cloned().collect();
    if all.is_empty() {
        return Err(Error::DimensionMismatch(
            "no constraint sets for the inner sweeps".into(),
        ));
    }
    for s in &all {
        if s.dim() != problem.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "constraint set over {} coordinates, window has {}",
                s.dim(),
                problem.ambient_dim()
            )));
        }
    }
    if cfg.inner_j == 0 {
        return Err(Error::SolverFailed(
            "at least one inner sweep is required".into(),
        ));
    }
    let corrected = match cfg.inner_mode {
        InnerMode::VonNeumann => false,
        InnerMode::Dykstra => true,
        InnerMode::Auto => !(all.len() <= 2 && all.iter().all(|s| s.is_affine())),
    };
    let mut w = start_iterate(problem, w1)?;
    let mut report = SolveReport::start(cfg, &w);
    for _ in 0..cfg.max_outer {
        let z = prefix_projection(&w, problem.w_ini())?;
        let g = grad_h(&z, problem.phi(), problem.w_ref(), problem.t_ini())?;
        let reflected = &z * 2.0 - &w - g * alpha;
        // Zero tolerance: the sweep count is the budget, not a target.
        let inner = if corrected {
            dykstra(&all, &reflected, cfg.inner_j, 0.0)?
        } else {
            cyclic(&all, &reflected, cfg.inner_j, 0.0)?
        };
        let next = &w + &inner.w - &z;
        let residual = (&next - &w).amax();
        w = next;
        report.record(&w, residual, problem.suffix_cost(&w), Some(inner.gap));
        if residual <= cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.w = w;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{ss_basis, StateSpaceRep};
    use crate::lqt::{oracle_solve, LqtProblem, ProblemBehavior};
    use crate::trajectory::Partition;

    fn double_integrator_problem() -> LqtProblem {
        let rep = StateSpaceRep::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
            Partition::identity(2, 1).unwrap(),
        )
        .unwrap();
        let basis = ss_basis(&rep, 9).unwrap();
        let w_ini = Trajectory::new(DVector::from_column_slice(&[0.0, 1.0, 0.0, 2.0]), 2).unwrap();
        let w_ref = Trajectory::constant(2, 7, 0.4).unwrap();
        LqtProblem::new(
            ProblemBehavior::Basis(basis),
            w_ini,
            w_ref,
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let problem = double_integrator_problem();
        let n = problem.ambient_dim();
        let mut state = 99u64;
        let w = DVector::from_fn(n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        });
        let g = grad_h(&w, problem.phi(), problem.w_ref(), problem.t_ini()).unwrap();
        let eps = 1e-6;
        for i in 0..n {
            let mut hi = w.clone();
            let mut lo = w.clone();
            hi[i] += eps;
            lo[i] -= eps;
            let fd = (problem.suffix_cost(&hi) - problem.suffix_cost(&lo)) / (2.0 * eps);
            assert!(
                (fd - g[i]).abs() <= 1e-6 * (1.0 + fd.abs()),
                "coordinate {i}: finite difference {fd}, gradient {}",
                g[i]
            );
        }
    }

    /// Start with a zeroed suffix: the default start (prefix continued by
    /// the reference) has zero tracking gradient, so the very first
    /// projection already lands on the optimum and step-size effects never
    /// show up.
    fn zero_suffix_start(problem: &LqtProblem) -> DVector<f64> {
        let mut w = DVector::zeros(problem.ambient_dim());
        w.rows_mut(0, 4).copy_from(problem.w_ini().data());
        w
    }

    #[test]
    fn step_size_guard_rejects_and_bypass_diverges() {
        let problem = double_integrator_problem();
        let bound = step_size_bound(problem.phi()).unwrap();
        assert!((bound - 1.0).abs() < 1e-12);
        let mut cfg = SplitConfig {
            alpha: Some(1.5 * bound),
            ..SplitConfig::default()
        };
        assert!(matches!(
            fb_solve(&problem, &cfg, None),
            Err(Error::StepSizeTooLarge(_))
        ));
        // With the guard off the iteration must visibly run away from the
        // optimum.
        cfg.guard_step_size = false;
        cfg.record_iterates = true;
        cfg.max_outer = 60;
        let w1 = zero_suffix_start(&problem);
        let report = fb_solve(&problem, &cfg, Some(&w1)).unwrap();
        let star = oracle_solve(&problem).unwrap();
        let mut anchor = problem.w_ini().data().clone().insert_rows(4, 14, 0.0);
        anchor.rows_mut(4, 14).copy_from(star.data());
        let violations = fejer_check(&report, &anchor).unwrap();
        assert!(violations > 0, "expected divergence, got none");
        assert!(!report.converged);
    }

    #[test]
    fn forward_backward_matches_oracle_and_never_regresses() {
        let problem = double_integrator_problem();
        let cfg = SplitConfig {
            record_iterates: true,
            ..SplitConfig::default()
        };
        let w1 = zero_suffix_start(&problem);
        let report = fb_solve(&problem, &cfg, Some(&w1)).unwrap();
        assert!(report.converged, "no convergence in {}", report.iterations);
        let star = oracle_solve(&problem).unwrap();
        let got = problem.suffix_trajectory(&report.w).unwrap();
        assert!(
            (got.data() - star.data()).amax() < 1e-7,
            "distance to the direct solution {}",
            (got.data() - star.data()).amax()
        );
        for pair in report.cost_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "cost increased from {} to {}",
                pair[0],
                pair[1]
            );
        }
        let mut anchor = problem.w_ini().data().clone().insert_rows(4, 14, 0.0);
        anchor.rows_mut(4, 14).copy_from(star.data());
        assert_eq!(fejer_check(&report, &anchor).unwrap(), 0);
    }

    #[test]
    fn three_operator_solver_agrees_with_direct_solution() {
        let problem = double_integrator_problem();
        let report = dy_solve(&problem, &SplitConfig::default(), None).unwrap();
        assert!(report.converged);
        let star = oracle_solve(&problem).unwrap();
        let got = problem.suffix_trajectory(&report.w).unwrap();
        assert!(
            (got.data() - star.data()).amax() < 1e-6,
            "distance to the direct solution {}",
            (got.data() - star.data()).amax()
        );
    }

    #[test]
    fn single_set_sweeps_reproduce_the_monolithic_solver() {
        let problem = double_integrator_problem();
        let sets = vec![Projector::behavior(problem.basis().unwrap())];
        let cfg = SplitConfig::default();
        let a = dy_solve(&problem, &cfg, None).unwrap();
        let b = split_pro_solve(&problem, &cfg, &sets, None).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert!(
            (&a.w - &b.w).amax() < 1e-12,
            "iterations diverged by {}",
            (&a.w - &b.w).amax()
        );
        // One affine set leaves no feasibility gap.
        assert!(b.inner_gap_history.iter().all(|&g| g < 1e-12));
    }

    #[test]
    fn fejer_check_requires_recorded_iterates() {
        let problem = double_integrator_problem();
        let report = fb_solve(&problem, &SplitConfig::default(), None).unwrap();
        let anchor = DVector::zeros(problem.ambient_dim());
        assert!(matches!(
            fejer_check(&report, &anchor),
            Err(Error::IteratesNotRecorded)
        ));
    }

    #[test]
    fn bad_start_iterate_and_missing_basis_are_rejected() {
        let problem = double_integrator_problem();
        let short = DVector::zeros(3);
        assert!(fb_solve(&problem, &SplitConfig::default(), Some(&short)).is_err());
        let sets_problem = LqtProblem::new(
            ProblemBehavior::Sets(vec![Projector::behavior(problem.basis().unwrap())]),
            problem.w_ini().clone(),
            problem.w_ref().clone(),
            problem.phi().clone(),
        )
        .unwrap();
        assert!(matches!(
            dy_solve(&sets_problem, &SplitConfig::default(), None),
            Err(Error::BasisRequired)
        ));
    }
}
