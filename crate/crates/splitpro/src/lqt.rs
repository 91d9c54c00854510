//! Finite-horizon linear-quadratic tracking and its reference solvers.
//!
//! A tracking problem pins the most recent `T_ini` measured samples of a
//! system as a window prefix and asks for the `T_f` samples that follow:
//! the suffix must minimize a quadratic distance to a reference while the
//! whole window remains a trajectory of the behavior. The behavior enters
//! either as one orthonormal basis of the window slice, or as a list of
//! constraint sets whose intersection is only reachable by alternating
//! projections.
//!
//! Two direct solvers act as ground truth for the iterative ones in
//! [`crate::splitting`]: a dense saddle-point solve for the equality-only
//! problem, and a null-space active-set method when box constraints on
//! selected coordinates are added. [`mpc_run`] closes the loop: it re-solves
//! the problem each step on a simulated plant and records what actually
//! happened.

use crate::behavior::BasisRep;
use crate::linalg;
use crate::network::Network;
use crate::projection::Projector;
use crate::splitting::{self, SplitConfig};
use crate::trajectory::Trajectory;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// How the behavior is made available to a solver.
#[derive(Debug, Clone)]
pub enum ProblemBehavior {
    /// One orthonormal basis of the window slice of the behavior.
    Basis(BasisRep),
    /// Constraint sets whose intersection is the window slice; used by the
    /// distributed solver, which never forms the intersection explicitly.
    Sets(Vec<Projector>),
}

/// A finite-horizon tracking problem over one window.
#[derive(Debug, Clone)]
pub struct LqtProblem {
    behavior: ProblemBehavior,
    w_ini: Trajectory,
    w_ref: Trajectory,
    phi: DMatrix<f64>,
    extra_sets: Vec<Projector>,
}

impl LqtProblem {
    /// Validates dimensions and the weight matrix (symmetric positive
    /// definite) and assembles the problem.
    pub fn new(
        behavior: ProblemBehavior,
        w_ini: Trajectory,
        w_ref: Trajectory,
        phi: DMatrix<f64>,
    ) -> Result<Self> {
        let q = w_ini.q();
        if w_ref.q() != q {
            return Err(Error::DimensionMismatch(format!(
                "prefix has {q} variables, reference has {}",
                w_ref.q()
            )));
        }
        linalg::validate_weight(&phi)?;
        if phi.nrows() != q {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} weight for {q} variables",
                phi.nrows(),
                phi.ncols()
            )));
        }
        let dim = q * (w_ini.t_len() + w_ref.t_len());
        match &behavior {
            ProblemBehavior::Basis(b) => {
                if b.q() != q || b.ambient_dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "basis spans {} coordinates, window has {dim}",
                        b.ambient_dim()
                    )));
                }
            }
            ProblemBehavior::Sets(sets) => {
                if sets.is_empty() {
                    return Err(Error::DimensionMismatch(
                        "behavior given as an empty set list".into(),
                    ));
                }
                for s in sets {
                    if s.dim() != dim {
                        return Err(Error::DimensionMismatch(format!(
                            "constraint set over {} coordinates, window has {dim}",
                            s.dim()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            behavior,
            w_ini,
            w_ref,
            phi,
            extra_sets: Vec::new(),
        })
    }

    /// Adds constraint sets (beyond the behavior itself) that every solver
    /// aware of them must respect, e.g. actuator bounds.
    pub fn with_extra_sets(mut self, sets: Vec<Projector>) -> Result<Self> {
        let dim = self.ambient_dim();
        for s in &sets {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "extra set over {} coordinates, window has {dim}",
                    s.dim()
                )));
            }
        }
        self.extra_sets = sets;
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.w_ini.q()
    }

    pub fn t_ini(&self) -> usize {
        self.w_ini.t_len()
    }

    pub fn t_f(&self) -> usize {
        self.w_ref.t_len()
    }

    pub fn horizon(&self) -> usize {
        self.t_ini() + self.t_f()
    }

    /// Length of the stacked window vector.
    pub fn ambient_dim(&self) -> usize {
        self.q() * self.horizon()
    }

    pub fn w_ini(&self) -> &Trajectory {
        &self.w_ini
    }

    pub fn w_ref(&self) -> &Trajectory {
        &self.w_ref
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn behavior(&self) -> &ProblemBehavior {
        &self.behavior
    }

    pub fn extra_sets(&self) -> &[Projector] {
        &self.extra_sets
    }

    /// The behavior basis, for solvers that need the monolithic form.
    pub fn basis(&self) -> Result<&BasisRep> {
        match &self.behavior {
            ProblemBehavior::Basis(b) => Ok(b),
            ProblemBehavior::Sets(_) => Err(Error::BasisRequired),
        }
    }

    /// Default first iterate: measured prefix continued by the reference.
    pub(crate) fn default_start(&self) -> DVector<f64> {
        let q = self.q();
        let mut w = DVector::zeros(self.ambient_dim());
        w.rows_mut(0, q * self.t_ini()).copy_from(self.w_ini.data());
        w.rows_mut(q * self.t_ini(), q * self.t_f())
            .copy_from(self.w_ref.data());
        w
    }

    /// Tracking cost of the suffix blocks of a stacked window vector.
    pub(crate) fn suffix_cost(&self, w: &DVector<f64>) -> f64 {
        let q = self.q();
        let prefix = q * self.t_ini();
        let mut total = 0.0;
        for t in 0..self.t_f() {
            let d = w.rows(prefix + t * q, q) - self.w_ref.sample(t + 1);
            total += (&self.phi * &d).dot(&d);
        }
        total
    }

    /// Extracts the suffix of a stacked window vector as a trajectory.
    pub fn suffix_trajectory(&self, w: &DVector<f64>) -> Result<Trajectory> {
        let q = self.q();
        if w.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "window vector of length {}, expected {}",
                w.len(),
                self.ambient_dim()
            )));
        }
        Trajectory::new(w.rows(q * self.t_ini(), q * self.t_f()).into_owned(), q)
    }
}

/// Weighted squared tracking error `sum_t (w_t - ref_t)' Phi (w_t - ref_t)`.
pub fn cost_eval(w_f: &Trajectory, w_ref: &Trajectory, phi: &DMatrix<f64>) -> Result<f64> {
    if w_f.q() != w_ref.q() || w_f.t_len() != w_ref.t_len() {
        return Err(Error::DimensionMismatch(format!(
            "comparing {}x{} against {}x{} trajectories",
            w_f.q(),
            w_f.t_len(),
            w_ref.q(),
            w_ref.t_len()
        )));
    }
    linalg::validate_weight(phi)?;
    if phi.nrows() != w_f.q() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} weight for {} variables",
            phi.nrows(),
            phi.ncols(),
            w_f.q()
        )));
    }
    let mut total = 0.0;
    for t in 1..=w_f.t_len() {
        let d = w_f.sample(t) - w_ref.sample(t);
        total += (phi * &d).dot(&d);
    }
    Ok(total)
}

/// Applies the step-block-diagonal weight `I (x) phi` to stacked rows.
fn weight_rows(phi: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let q = phi.nrows();
    debug_assert_eq!(m.nrows() % q, 0);
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for t in 0..m.nrows() / q {
        let block = phi * m.rows(t * q, q);
        out.rows_mut(t * q, q).copy_from(&block);
    }
    out
}

/// Direct solution of the equality-constrained problem through its dense
/// saddle-point (stationarity plus prefix-matching) system, solved in the
/// coefficient space of the behavior basis. Serves as ground truth for the
/// iterative solvers; cost grows with the cube of the basis rank.
pub fn oracle_solve(problem: &LqtProblem) -> Result<Trajectory> {
    let basis = problem.basis()?;
    let q = problem.q();
    let prefix = q * problem.t_ini();
    let r = basis.r();
    let b = basis.basis();
    let e = b.rows(0, prefix).into_owned();
    let f = b.rows(prefix, q * problem.t_f()).into_owned();
    let w_ini = problem.w_ini().data();
    // A targeted feasibility check first, so an incompatible prefix is not
    // reported as a singular system.
    let (_, prefix_res) = linalg::least_squares_min_norm(&e, w_ini, linalg::RANK_REL_TOL);
    if prefix_res > 1e-8 * (1.0 + w_ini.amax()) {
        return Err(Error::InfeasiblePrefix(format!(
            "prefix residual {prefix_res:.3e}"
        )));
    }
    let wf = weight_rows(problem.phi(), &f);
    let dim = r + prefix;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (r, r))
        .copy_from(&(2.0 * f.transpose() * &wf));
    kkt.view_mut((0, r), (r, prefix)).copy_from(&e.transpose());
    kkt.view_mut((r, 0), (prefix, r)).copy_from(&e);
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, r)
        .copy_from(&(2.0 * wf.transpose() * problem.w_ref().data()));
    rhs.rows_mut(r, prefix).copy_from(w_ini);
    let (sol, res) = linalg::least_squares_min_norm(&kkt, &rhs, linalg::RANK_REL_TOL);
    // Backward-error normalization, so scaling the problem cannot turn a
    // well-posed solve into a spurious singularity report.
    let denom = linalg::inf_norm(&kkt) * sol.amax() + rhs.amax() + 1.0;
    if res > 1e-9 * denom {
        return Err(Error::SingularKkt(format!(
            "saddle-point backward error {:.3e}",
            res / denom
        )));
    }
    let g = sol.rows(0, r).into_owned();
    problem.suffix_trajectory(&(b * g))
}

/// Direct solution with box constraints from [`LqtProblem::extra_sets`]:
/// eliminates the prefix equalities through a null-space basis, then runs a
/// primal active-set loop on the reduced strictly convex quadratic. Only
/// box sets are supported; anything else is rejected.
pub fn constrained_oracle_solve(problem: &LqtProblem) -> Result<Trajectory> {
    let basis = problem.basis()?;
    let q = problem.q();
    let prefix = q * problem.t_ini();
    let b = basis.basis();
    let e = b.rows(0, prefix).into_owned();
    let f = b.rows(prefix, q * problem.t_f()).into_owned();
    let w_ini = problem.w_ini().data();
    let (g_p, prefix_res) = linalg::least_squares_min_norm(&e, w_ini, linalg::RANK_REL_TOL);
    if prefix_res > 1e-8 * (1.0 + w_ini.amax()) {
        return Err(Error::InfeasiblePrefix(format!(
            "prefix residual {prefix_res:.3e}"
        )));
    }
    let z = linalg::null_space_basis(&e, linalg::RANK_REL_TOL);
    let k = z.ncols();
    // Reduced objective 1/2 v' h v + c' v over prefix-preserving moves.
    let fz = &f * &z;
    let wfz = weight_rows(problem.phi(), &fz);
    let h = 2.0 * fz.transpose() * &wfz;
    let c = 2.0 * wfz.transpose() * (&f * &g_p - problem.w_ref().data());
    // Box rows become inequalities a' v <= bound. Rows the null space cannot
    // move are feasibility facts, not constraints.
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    for set in problem.extra_sets() {
        let (lo, hi) = match set {
            Projector::Box { lo, hi } => (lo, hi),
            _ => {
                return Err(Error::SolverFailed(
                    "the direct constrained solver supports box sets only".into(),
                ))
            }
        };
        for idx in 0..problem.ambient_dim() {
            if lo[idx] == f64::NEG_INFINITY && hi[idx] == f64::INFINITY {
                continue;
            }
            let row = b.row(idx);
            let s0 = (row * &g_p)[0];
            let a = (row * &z).transpose();
            let movable = a.amax() > 1e-12;
            if hi[idx] < f64::INFINITY {
                if movable {
                    rows.push(a.clone());
                    offsets.push(hi[idx] - s0);
                } else if s0 > hi[idx] + 1e-9 {
                    return Err(Error::Infeasible(format!(
                        "coordinate {idx} is pinned at {s0:.6} above its upper bound {}",
                        hi[idx]
                    )));
                }
            }
            if lo[idx] > f64::NEG_INFINITY {
                if movable {
                    rows.push(-&a);
                    offsets.push(s0 - lo[idx]);
                } else if s0 < lo[idx] - 1e-9 {
                    return Err(Error::Infeasible(format!(
                        "coordinate {idx} is pinned at {s0:.6} below its lower bound {}",
                        lo[idx]
                    )));
                }
            }
        }
    }
    if k == 0 {
        // The prefix determines the whole window.
        return problem.suffix_trajectory(&(b * &g_p));
    }
    let chol = h.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let scale = 1.0 + offsets.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut active: Vec<usize> = Vec::new();
    let mut v;
    for _ in 0..(50 + 10 * rows.len()) {
        let mu;
        if active.is_empty() {
            v = chol.solve(&(-&c));
            mu = DVector::zeros(0);
        } else {
            let na = active.len();
            let mut kkt = DMatrix::zeros(k + na, k + na);
            kkt.view_mut((0, 0), (k, k)).copy_from(&h);
            for (j, &ri) in active.iter().enumerate() {
                for i in 0..k {
                    kkt[(i, k + j)] = rows[ri][i];
                    kkt[(k + j, i)] = rows[ri][i];
                }
            }
            let mut rhs = DVector::zeros(k + na);
            rhs.rows_mut(0, k).copy_from(&(-&c));
            for (j, &ri) in active.iter().enumerate() {
                rhs[k + j] = offsets[ri];
            }
            let (sol, res) = linalg::least_squares_min_norm(&kkt, &rhs, linalg::RANK_REL_TOL);
            let denom = linalg::inf_norm(&kkt) * sol.amax() + rhs.amax() + 1.0;
            if res > 1e-8 * denom {
                return Err(Error::SingularKkt(format!(
                    "active-set saddle-point backward error {:.3e}",
                    res / denom
                )));
            }
            v = sol.rows(0, k).into_owned();
            mu = sol.rows(k, na).into_owned();
        }
        // Grow the working set while any constraint is violated.
        let mut worst = None;
        let mut worst_gap = 1e-10 * scale;
        for (ri, (a, off)) in rows.iter().zip(&offsets).enumerate() {
            if active.contains(&ri) {
                continue;
            }
            let gap = a.dot(&v) - off;
            if gap > worst_gap {
                worst_gap = gap;
                worst = Some(ri);
            }
        }
        if let Some(ri) = worst {
            active.push(ri);
            continue;
        }
        // Feasible: release the most binding wrong-signed multiplier.
        if let Some((j, _)) = mu
            .iter()
            .enumerate()
            .filter(|&(_, &m)| m < -1e-10)
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            active.remove(j);
            continue;
        }
        for (a, off) in rows.iter().zip(&offsets) {
            if a.dot(&v) - off > 1e-9 * scale {
                return Err(Error::SolverFailed(
                    "bound violated at the active-set optimum".into(),
                ));
            }
        }
        return problem.suffix_trajectory(&(b * (&g_p + &z * &v)));
    }
    Err(Error::SolverFailed(
        "active-set loop exceeded its iteration budget".into(),
    ))
}

/// Which solver closes the loop in [`mpc_run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Controller {
    /// Direct solver: saddle-point, or active-set when bounds are present.
    Oracle,
    ForwardBackward,
    DavisYin,
    /// Three-operator splitting with inner alternating projections; the
    /// only iterative controller that honors input bounds.
    SplitPro,
}

/// Additive state offset injected into one subsystem at one step.
#[derive(Debug, Clone, Copy)]
pub struct Disturbance {
    /// 0-based simulation step at which the offset is applied.
    pub time: usize,
    pub subsystem: usize,
    /// State coordinate within the subsystem (0 = position, 1 = velocity).
    pub state_coord: usize,
    pub magnitude: f64,
}

/// Closed-loop tracking scenario over a network.
#[derive(Debug, Clone)]
pub struct MpcScenario {
    pub t_sim: usize,
    /// Constant reference for every exogenous input coordinate.
    pub u_ref: f64,
    /// Constant reference for outputs and coupling inputs alike, keeping
    /// the reference consistent across the interconnection.
    pub y_ref: f64,
    /// Weight on every input coordinate, coupling inputs included.
    pub phi_input: f64,
    pub phi_output: f64,
    /// Box on the exogenous input coordinates over the whole window.
    pub input_bounds: Option<(f64, f64)>,
    pub disturbance: Option<Disturbance>,
    /// Tuning for the iterative controllers.
    pub split: SplitConfig,
}

/// Closed-loop record of one [`mpc_run`].
#[derive(Debug, Clone)]
pub struct MpcRun {
    /// Measured global samples, one per simulation step.
    pub measured: Trajectory,
    /// Stage cost of each measured sample against the reference.
    pub step_costs: Vec<f64>,
    pub total_cost: f64,
}

/// Receding-horizon simulation: at every step the controller solves the
/// tracking problem on the window basis of the interconnected behavior
/// (built once), applies the first planned exogenous inputs, and the
/// ground-truth coupled plant — disturbances included — produces the next
/// measurement. History starts at rest, which is itself a valid trajectory.
///
/// A disturbance makes the measured history leave the behavior: no model
/// trajectory contains a state jump. Each step therefore fits the closest
/// representable prefix (least squares against the basis prefix rows)
/// before solving; the discrepancy fades as the jump slides out of the
/// window, which is exactly the receding-horizon recovery one wants.
pub fn mpc_run(net: &Network, controller: Controller, scenario: &MpcScenario) -> Result<MpcRun> {
    let layout = net.layout();
    let q = layout.q_total();
    let (t_ini, t_f) = (net.t_ini(), net.t_f());
    let horizon = t_ini + t_f;
    if scenario.t_sim == 0 {
        return Err(Error::DimensionMismatch("t_sim = 0".into()));
    }
    if let Some(d) = &scenario.disturbance {
        if d.subsystem >= net.nu() || d.state_coord >= 2 {
            return Err(Error::DimensionMismatch(format!(
                "disturbance targets subsystem {} coordinate {}",
                d.subsystem, d.state_coord
            )));
        }
    }
    // Per-sample weight and reference over the stacked signal.
    let mut phi_diag = DVector::zeros(q);
    let mut ref_sample = DVector::zeros(q);
    for i in 0..net.nu() {
        let q_i = layout.sub_q(i);
        for local in 0..q_i {
            let g = layout.global_index(i, local, 0);
            if local == q_i - 1 {
                phi_diag[g] = scenario.phi_output;
                ref_sample[g] = scenario.y_ref;
            } else {
                phi_diag[g] = scenario.phi_input;
                // Coupling inputs mirror the neighbor output reference.
                ref_sample[g] = if local == 0 {
                    scenario.u_ref
                } else {
                    scenario.y_ref
                };
            }
        }
    }
    let phi = DMatrix::from_diagonal(&phi_diag);
    let mut ref_data = DVector::zeros(q * t_f);
    for t in 0..t_f {
        ref_data.rows_mut(t * q, q).copy_from(&ref_sample);
    }
    let w_ref = Trajectory::new(ref_data, q)?;
    let bases = crate::network::subsystem_bases(net)?;
    let central = crate::network::interconnected_basis(net, &bases)?;
    let box_set = match scenario.input_bounds {
        Some((lo, hi)) => {
            let dim = q * horizon;
            let mut lo_v = DVector::from_element(dim, f64::NEG_INFINITY);
            let mut hi_v = DVector::from_element(dim, f64::INFINITY);
            // Only the suffix inputs are decisions; the prefix is pinned to
            // the measured history, and bounding it as well would make a
            // reconciled post-disturbance prefix spuriously infeasible.
            for idx in layout.own_input_indices(horizon) {
                if idx >= q * t_ini {
                    lo_v[idx] = lo;
                    hi_v[idx] = hi;
                }
            }
            Some(Projector::bounds(lo_v, hi_v)?)
        }
        None => None,
    };
    let prefix_rows = central.basis().rows(0, q * t_ini).into_owned();
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(q); t_ini];
    let mut states = vec![DVector::zeros(2); net.nu()];
    let mut measured = Trajectory::zeros(q, scenario.t_sim)?;
    let mut step_costs = Vec::with_capacity(scenario.t_sim);
    for step in 0..scenario.t_sim {
        if let Some(d) = &scenario.disturbance {
            if d.time == step {
                states[d.subsystem][d.state_coord] += d.magnitude;
            }
        }
        let mut ini_data = DVector::zeros(q * t_ini);
        let tail = history.len() - t_ini;
        for (j, sample) in history[tail..].iter().enumerate() {
            ini_data.rows_mut(j * q, q).copy_from(sample);
        }
        // Closest representable prefix (see above).
        let (coeff, _) =
            linalg::least_squares_min_norm(&prefix_rows, &ini_data, linalg::RANK_REL_TOL);
        let w_ini = Trajectory::new(&prefix_rows * coeff, q)?;
        let problem = LqtProblem::new(
            ProblemBehavior::Basis(central.clone()),
            w_ini,
            w_ref.clone(),
            phi.clone(),
        )?;
        let plan = match (controller, &box_set) {
            (Controller::Oracle, Some(bx)) => {
                constrained_oracle_solve(&problem.clone().with_extra_sets(vec![bx.clone()])?)?
            }
            (Controller::Oracle, None) => oracle_solve(&problem)?,
            (Controller::ForwardBackward, None) => {
                let report = splitting::fb_solve(&problem, &scenario.split, None)?;
                problem.suffix_trajectory(&report.w)?
            }
            (Controller::DavisYin, None) => {
                let report = splitting::dy_solve(&problem, &scenario.split, None)?;
                problem.suffix_trajectory(&report.w)?
            }
            (Controller::SplitPro, _) => {
                // The box comes last so the returned plan satisfies it
                // exactly, not just to solver tolerance.
                let mut sets = vec![Projector::behavior(&central)];
                if let Some(bx) = &box_set {
                    sets.push(bx.clone());
                }
                let report = splitting::split_pro_solve(&problem, &scenario.split, &sets, None)?;
                problem.suffix_trajectory(&report.w)?
            }
            _ => {
                return Err(Error::SolverFailed(
                    "input bounds require the direct or split-projection controller".into(),
                ))
            }
        };
        let own_u = DVector::from_fn(net.nu(), |i, _| {
            plan.sample(1)[layout.own_input_index(i, 0)]
        });
        let (sample, next) = net.plant_step(&states, &own_u)?;
        states = next;
        measured
            .sample_mut(step + 1)
            .copy_from_slice(sample.as_slice());
        let d = &sample - &ref_sample;
        step_costs.push(phi_diag.component_mul(&d).dot(&d));
        history.push(sample);
    }
    let total_cost = step_costs.iter().sum();
    Ok(MpcRun {
        measured,
        step_costs,
        total_cost,
    })
}
