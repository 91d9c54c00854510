//! C ABI for the behavioral tracking solvers.
//!
//! Everything crosses the boundary through three opaque handles — behavior,
//! problem, solution — plus flat `double` buffers. Every fallible call
//! returns a [`SplitproStatus`]; on failure, a thread-local message with the
//! details is available through [`splitpro_last_error_message`]. Handles own
//! their data: a problem clones what it needs from the behavior, so the two
//! can be freed in any order, and no function stores the pointers it is
//! given beyond the duration of the call.
//!
//! Matrices are passed row-major, trajectories time-major (all `q` signal
//! values of the first sample, then the second, and so on). The build script
//! regenerates the C header at `include/splitpro.h` from this file.

use std::cell::RefCell;
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{DMatrix, DVector};
use splitpro::behavior::{hankel_basis, ss_basis, BasisRep, HankelRep, StateSpaceRep};
use splitpro::lqt::{self, LqtProblem, ProblemBehavior};
use splitpro::projection::Projector;
use splitpro::splitting::{dy_solve, fb_solve, SplitConfig};
use splitpro::trajectory::{Partition, Trajectory};
use splitpro::Error;

/// Numerical-rank cutoff used when a caller passes a non-positive tolerance
/// to [`splitpro_behavior_from_data`]; matches the library-internal default.
const DEFAULT_RANK_REL_TOL: f64 = 1e-10;

/// Result of every fallible call. `Ok` is zero; anything else leaves an
/// explanation readable through [`splitpro_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitproStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Dimensions, lengths, or parameter values do not fit together.
    InvalidArgument = 2,
    /// The state-space pair (A, C) is not observable.
    NotObservable = 3,
    /// Recorded data is too short or not rich enough to span the behavior.
    DataNotRich = 4,
    /// The constraints (prefix included) admit no solution.
    Infeasible = 5,
    /// A matrix factorization or weight-matrix check failed.
    Numeric = 6,
    /// Step size outside the stability interval of the iteration.
    StepSize = 7,
    /// The iteration budget ran out before the tolerance was met.
    NotConverged = 8,
    /// A panic was caught at the boundary; library state is still valid.
    Panicked = 9,
}

/// Solver selection for [`splitpro_solve`]; passed as a plain `int` so an
/// out-of-range value can be rejected instead of being undefined behavior.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitproSolver {
    /// Projected-gradient iteration on the prefix-pinned behavior slice.
    ForwardBackward = 0,
    /// Three-operator splitting; the default choice.
    ThreeOperator = 1,
    /// Direct saddle-point solution, no iteration.
    Direct = 2,
}

/// Orthonormal basis of one behavior's window slice (opaque).
pub struct SplitproBehavior {
    basis: BasisRep,
}

/// One finite-horizon tracking problem (opaque).
pub struct SplitproProblem {
    problem: LqtProblem,
}

/// Solution suffix plus solve diagnostics (opaque).
pub struct SplitproSolution {
    suffix: Trajectory,
    iterations: usize,
    converged: bool,
    cost: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| msg.clone_into(&mut e.borrow_mut()));
}

fn fail(err: Error) -> SplitproStatus {
    let status = match &err {
        Error::NotObservable => SplitproStatus::NotObservable,
        Error::NotPersistentlyExciting(_) | Error::InsufficientData(_) => {
            SplitproStatus::DataNotRich
        }
        Error::InfeasiblePrefix(_) | Error::Infeasible(_) => SplitproStatus::Infeasible,
        Error::NotPositiveDefinite | Error::SingularKkt(_) | Error::SolverFailed(_) => {
            SplitproStatus::Numeric
        }
        Error::StepSizeTooLarge(_) => SplitproStatus::StepSize,
        _ => SplitproStatus::InvalidArgument,
    };
    set_error(&err.to_string());
    status
}

fn null_arg(name: &str) -> SplitproStatus {
    set_error(&format!("`{name}` must not be null"));
    SplitproStatus::NullArgument
}

fn invalid(msg: String) -> SplitproStatus {
    set_error(&msg);
    SplitproStatus::InvalidArgument
}

/// Catches panics so they never unwind into the caller's frame.
fn guard(f: impl FnOnce() -> SplitproStatus) -> SplitproStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at the boundary");
            SplitproStatus::Panicked
        }
    }
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> SplitproStatus {
    *out = Box::into_raw(Box::new(value));
    SplitproStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn splitpro_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the current thread's most recent error message into `buf` (always
/// NUL-terminated, truncated to `cap` bytes) and returns the full message
/// length in bytes, excluding the terminator. Call with a null `buf` or zero
/// `cap` to query the length alone. The message is only meaningful after a
/// call on the same thread returned a non-`Ok` status.
///
/// # Safety
///
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn splitpro_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a behavior from a discrete-time state-space model
/// `x+ = A x + B u`, `y = C x + D u` by spanning every input/output window
/// of `horizon` samples. The signal stacks inputs before outputs, so
/// `q = m + p`. Fails if `(A, C)` is not observable or the horizon is
/// shorter than the model's lag.
///
/// # Safety
///
/// `a`, `b`, `c`, `d` must point to row-major arrays of `n*n`, `n*m`,
/// `p*n`, and `p*m` doubles respectively, and `out` to a writable pointer
/// slot. On `Ok` the caller owns the handle written to `out` and must
/// release it with [`splitpro_behavior_free`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_from_state_space(
    n: usize,
    m: usize,
    p: usize,
    a: *const f64,
    b: *const f64,
    c: *const f64,
    d: *const f64,
    horizon: usize,
    out: *mut *mut SplitproBehavior,
) -> SplitproStatus {
    guard(|| {
        if out.is_null() {
            return null_arg("out");
        }
        for (ptr, name) in [(a, "a"), (b, "b"), (c, "c"), (d, "d")] {
            if ptr.is_null() {
                return null_arg(name);
            }
        }
        let a = DMatrix::from_row_slice(n, n, std::slice::from_raw_parts(a, n * n));
        let b = DMatrix::from_row_slice(n, m, std::slice::from_raw_parts(b, n * m));
        let c = DMatrix::from_row_slice(p, n, std::slice::from_raw_parts(c, p * n));
        let d = DMatrix::from_row_slice(p, m, std::slice::from_raw_parts(d, p * m));
        let partition = match Partition::identity(m + p, m) {
            Ok(part) => part,
            Err(e) => return fail(e),
        };
        let rep = match StateSpaceRep::new(a, b, c, d, partition) {
            Ok(rep) => rep,
            Err(e) => return fail(e),
        };
        match ss_basis(&rep, horizon) {
            Ok(basis) => write_handle(out, SplitproBehavior { basis }),
            Err(e) => fail(e),
        }
    })
}

/// Builds a behavior from recorded data alone: `samples` holds `t_len`
/// consecutive signal samples of dimension `q`, time-major. The window span
/// is taken from the depth-`horizon` Hankel matrix of the record, which must
/// have rank `m*horizon + n` (`m` inputs, state order `n`) — i.e. the data
/// must be long and rich enough to excite the whole behavior. A
/// non-positive `rank_rel_tol` selects the default cutoff.
///
/// # Safety
///
/// `samples` must point to `q*t_len` doubles and `out` to a writable
/// pointer slot. On `Ok` the caller owns the handle written to `out`.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_from_data(
    q: usize,
    m: usize,
    n: usize,
    samples: *const f64,
    t_len: usize,
    horizon: usize,
    rank_rel_tol: f64,
    out: *mut *mut SplitproBehavior,
) -> SplitproStatus {
    guard(|| {
        if out.is_null() {
            return null_arg("out");
        }
        if samples.is_null() {
            return null_arg("samples");
        }
        let data = std::slice::from_raw_parts(samples, q * t_len);
        let traj = match Trajectory::new(DVector::from_column_slice(data), q) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let rep = match HankelRep::new(traj, horizon) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let tol = if rank_rel_tol > 0.0 {
            rank_rel_tol
        } else {
            DEFAULT_RANK_REL_TOL
        };
        match hankel_basis(&rep, m, n, tol) {
            Ok(basis) => write_handle(out, SplitproBehavior { basis }),
            Err(e) => fail(e),
        }
    })
}

/// Length of the stacked window vector the behavior lives in (`q*horizon`);
/// zero for a null handle.
///
/// # Safety
///
/// `behavior` must be null or a live handle from a constructor.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_dim(behavior: *const SplitproBehavior) -> usize {
    behavior.as_ref().map_or(0, |b| b.basis.ambient_dim())
}

/// Dimension of the behavior's window slice as a subspace (the basis rank);
/// zero for a null handle.
///
/// # Safety
///
/// `behavior` must be null or a live handle from a constructor.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_rank(behavior: *const SplitproBehavior) -> usize {
    behavior.as_ref().map_or(0, |b| b.basis.basis().ncols())
}

/// Signal dimension `q`; zero for a null handle.
///
/// # Safety
///
/// `behavior` must be null or a live handle from a constructor.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_signal_dim(behavior: *const SplitproBehavior) -> usize {
    behavior.as_ref().map_or(0, |b| b.basis.q())
}

/// Window length in samples; zero for a null handle.
///
/// # Safety
///
/// `behavior` must be null or a live handle from a constructor.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_horizon(behavior: *const SplitproBehavior) -> usize {
    behavior.as_ref().map_or(0, |b| b.basis.horizon())
}

/// Orthogonally projects a stacked window vector onto the behavior. `len`
/// must equal [`splitpro_behavior_dim`]. `point` and `result` may alias.
///
/// # Safety
///
/// `behavior` must be a live handle; `point` and `result` must each point
/// to `len` doubles, `result` writable.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_project(
    behavior: *const SplitproBehavior,
    point: *const f64,
    len: usize,
    result: *mut f64,
) -> SplitproStatus {
    guard(|| {
        let Some(handle) = behavior.as_ref() else {
            return null_arg("behavior");
        };
        if point.is_null() {
            return null_arg("point");
        }
        if result.is_null() {
            return null_arg("result");
        }
        if len != handle.basis.ambient_dim() {
            return invalid(format!(
                "point of length {len}, behavior window has {}",
                handle.basis.ambient_dim()
            ));
        }
        let w = DVector::from_column_slice(std::slice::from_raw_parts(point, len));
        match Projector::behavior(&handle.basis).project(&w) {
            Ok(projected) => {
                std::slice::from_raw_parts_mut(result, len).copy_from_slice(projected.as_slice());
                SplitproStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a behavior handle; a null pointer is ignored.
///
/// # Safety
///
/// `behavior` must be null or an unreleased handle from a constructor.
#[no_mangle]
pub unsafe extern "C" fn splitpro_behavior_free(behavior: *mut SplitproBehavior) {
    if !behavior.is_null() {
        drop(Box::from_raw(behavior));
    }
}

/// Assembles a tracking problem over one window: the first `t_ini` samples
/// are pinned to the measured prefix `w_ini`, the remaining `t_f` samples
/// chase `w_ref` under the per-sample weight `phi` (symmetric positive
/// definite, `q*q` row-major). The behavior's horizon must equal
/// `t_ini + t_f`. The problem copies everything it needs, so the behavior
/// handle may be freed afterwards.
///
/// # Safety
///
/// `behavior` must be a live handle; `w_ini`, `w_ref`, and `phi` must point
/// to `q*t_ini`, `q*t_f`, and `q*q` doubles; `out` must be a writable
/// pointer slot. On `Ok` the caller owns the handle written to `out`.
#[no_mangle]
pub unsafe extern "C" fn splitpro_problem_new(
    behavior: *const SplitproBehavior,
    w_ini: *const f64,
    t_ini: usize,
    w_ref: *const f64,
    t_f: usize,
    phi: *const f64,
    out: *mut *mut SplitproProblem,
) -> SplitproStatus {
    guard(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let Some(handle) = behavior.as_ref() else {
            return null_arg("behavior");
        };
        if w_ini.is_null() {
            return null_arg("w_ini");
        }
        if w_ref.is_null() {
            return null_arg("w_ref");
        }
        if phi.is_null() {
            return null_arg("phi");
        }
        let q = handle.basis.q();
        let build = || -> Result<LqtProblem, Error> {
            let ini = Trajectory::new(
                DVector::from_column_slice(std::slice::from_raw_parts(w_ini, q * t_ini)),
                q,
            )?;
            let reference = Trajectory::new(
                DVector::from_column_slice(std::slice::from_raw_parts(w_ref, q * t_f)),
                q,
            )?;
            let weight = DMatrix::from_row_slice(q, q, std::slice::from_raw_parts(phi, q * q));
            LqtProblem::new(
                ProblemBehavior::Basis(handle.basis.clone()),
                ini,
                reference,
                weight,
            )
        };
        match build() {
            Ok(problem) => write_handle(out, SplitproProblem { problem }),
            Err(e) => fail(e),
        }
    })
}

/// Releases a problem handle; a null pointer is ignored.
///
/// # Safety
///
/// `problem` must be null or an unreleased handle from
/// [`splitpro_problem_new`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_problem_free(problem: *mut SplitproProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves a tracking problem. `solver` takes a [`SplitproSolver`] value;
/// non-positive `alpha`, `tol`, or `max_iterations` select the defaults
/// (half the stability bound, `1e-9`, and `50000`). On `Ok` the solution
/// handle carries the suffix trajectory plus diagnostics; if the iteration
/// budget runs out first, the call returns `NotConverged` and writes
/// nothing.
///
/// # Safety
///
/// `problem` must be a live handle and `out` a writable pointer slot. On
/// `Ok` the caller owns the handle written to `out` and must release it
/// with [`splitpro_solution_free`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solve(
    problem: *const SplitproProblem,
    solver: c_int,
    alpha: f64,
    tol: f64,
    max_iterations: usize,
    out: *mut *mut SplitproSolution,
) -> SplitproStatus {
    guard(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let Some(handle) = problem.as_ref() else {
            return null_arg("problem");
        };
        let cfg = SplitConfig {
            alpha: (alpha > 0.0).then_some(alpha),
            tol: if tol > 0.0 { tol } else { 1e-9 },
            max_outer: if max_iterations > 0 {
                max_iterations
            } else {
                50_000
            },
            ..SplitConfig::default()
        };
        let solved: Result<(Trajectory, usize, bool), Error> = (|| match solver {
            s if s == SplitproSolver::Direct as c_int => {
                Ok((lqt::oracle_solve(&handle.problem)?, 0, true))
            }
            s if s == SplitproSolver::ForwardBackward as c_int
                || s == SplitproSolver::ThreeOperator as c_int =>
            {
                let report = if s == SplitproSolver::ForwardBackward as c_int {
                    fb_solve(&handle.problem, &cfg, None)?
                } else {
                    dy_solve(&handle.problem, &cfg, None)?
                };
                if !report.converged {
                    return Err(Error::SolverFailed(format!(
                        "no convergence within {} iterations (last residual {:.3e})",
                        report.iterations,
                        report.residual_history.last().copied().unwrap_or(f64::NAN)
                    )));
                }
                Ok((
                    handle.problem.suffix_trajectory(&report.w)?,
                    report.iterations,
                    true,
                ))
            }
            other => Err(Error::DimensionMismatch(format!(
                "unknown solver id {other}"
            ))),
        })();
        match solved {
            Ok((suffix, iterations, converged)) => {
                let cost =
                    match lqt::cost_eval(&suffix, handle.problem.w_ref(), handle.problem.phi()) {
                        Ok(c) => c,
                        Err(e) => return fail(e),
                    };
                write_handle(
                    out,
                    SplitproSolution {
                        suffix,
                        iterations,
                        converged,
                        cost,
                    },
                )
            }
            Err(Error::SolverFailed(msg)) if msg.starts_with("no convergence") => {
                set_error(&msg);
                SplitproStatus::NotConverged
            }
            Err(e) => fail(e),
        }
    })
}

/// Signal dimension of the solution suffix; zero for a null handle.
///
/// # Safety
///
/// `solution` must be null or a live handle from [`splitpro_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_q(solution: *const SplitproSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.suffix.q())
}

/// Number of samples in the solution suffix; zero for a null handle.
///
/// # Safety
///
/// `solution` must be null or a live handle from [`splitpro_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_t_len(solution: *const SplitproSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.suffix.t_len())
}

/// Iterations the solver spent (zero for the direct solver); zero for a
/// null handle.
///
/// # Safety
///
/// `solution` must be null or a live handle from [`splitpro_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_iterations(solution: *const SplitproSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.iterations)
}

/// Whether the residual met the tolerance; false for a null handle.
///
/// # Safety
///
/// `solution` must be null or a live handle from [`splitpro_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_converged(solution: *const SplitproSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.converged)
}

/// Weighted tracking cost of the suffix against the reference; NaN for a
/// null handle.
///
/// # Safety
///
/// `solution` must be null or a live handle from [`splitpro_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_cost(solution: *const SplitproSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.cost)
}

/// Copies the solution suffix, time-major, into `buf`. `len` must equal
/// `q * t_len` as reported by the accessors.
///
/// # Safety
///
/// `solution` must be a live handle and `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_copy(
    solution: *const SplitproSolution,
    buf: *mut f64,
    len: usize,
) -> SplitproStatus {
    guard(|| {
        let Some(handle) = solution.as_ref() else {
            return null_arg("solution");
        };
        if buf.is_null() {
            return null_arg("buf");
        }
        let data = handle.suffix.data();
        if len != data.len() {
            return invalid(format!("buffer of length {len}, suffix has {}", data.len()));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(data.as_slice());
        SplitproStatus::Ok
    })
}

/// Releases a solution handle; a null pointer is ignored.
///
/// # Safety
///
/// `solution` must be null or an unreleased handle from [`splitpro_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitpro_solution_free(solution: *mut SplitproSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::ffi::CStr;
    use std::ptr;

    /// Scalar mass on a damper: observable, lag 1, q = 2.
    const A: [f64; 1] = [0.8];
    const B: [f64; 1] = [1.0];
    const C: [f64; 1] = [1.0];
    const D: [f64; 1] = [0.0];
    const PHI: [f64; 4] = [1.0, 0.0, 0.0, 1.0];

    fn scalar_behavior(horizon: usize) -> *mut SplitproBehavior {
        let mut handle = ptr::null_mut();
        let status = unsafe {
            splitpro_behavior_from_state_space(
                1,
                1,
                1,
                A.as_ptr(),
                B.as_ptr(),
                C.as_ptr(),
                D.as_ptr(),
                horizon,
                &mut handle,
            )
        };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        handle
    }

    fn last_error() -> String {
        let mut buf = [0 as c_char; 512];
        unsafe {
            splitpro_last_error_message(buf.as_mut_ptr(), buf.len());
            CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
        }
    }

    fn solve(problem: *const SplitproProblem, solver: SplitproSolver) -> (Vec<f64>, usize, f64) {
        let mut sol = ptr::null_mut();
        let status = unsafe { splitpro_solve(problem, solver as c_int, 0.0, 1e-11, 0, &mut sol) };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        let len = unsafe { splitpro_solution_q(sol) * splitpro_solution_t_len(sol) };
        let mut data = vec![0.0; len];
        let status = unsafe { splitpro_solution_copy(sol, data.as_mut_ptr(), len) };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        assert!(unsafe { splitpro_solution_converged(sol) });
        let iters = unsafe { splitpro_solution_iterations(sol) };
        let cost = unsafe { splitpro_solution_cost(sol) };
        unsafe { splitpro_solution_free(sol) };
        (data, iters, cost)
    }

    #[test]
    fn iterative_solvers_match_the_direct_solution_through_the_abi() {
        let behavior = scalar_behavior(6);
        assert_eq!(unsafe { splitpro_behavior_signal_dim(behavior) }, 2);
        assert_eq!(unsafe { splitpro_behavior_dim(behavior) }, 12);
        assert_eq!(unsafe { splitpro_behavior_horizon(behavior) }, 6);
        // One free input per step plus one initial state.
        assert_eq!(unsafe { splitpro_behavior_rank(behavior) }, 7);

        let w_ini = [0.0, 0.0];
        let w_ref = [0.25; 10];
        let mut problem = ptr::null_mut();
        let status = unsafe {
            splitpro_problem_new(
                behavior,
                w_ini.as_ptr(),
                1,
                w_ref.as_ptr(),
                5,
                PHI.as_ptr(),
                &mut problem,
            )
        };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        unsafe { splitpro_behavior_free(behavior) };

        let (direct, direct_iters, direct_cost) = solve(problem, SplitproSolver::Direct);
        assert_eq!(direct_iters, 0);
        for solver in [
            SplitproSolver::ForwardBackward,
            SplitproSolver::ThreeOperator,
        ] {
            let (suffix, iters, cost) = solve(problem, solver);
            assert!(iters > 0);
            let gap = suffix
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            assert!(
                gap <= 1e-6,
                "{solver:?} is {gap:.3e} from the direct solution"
            );
            assert!((cost - direct_cost).abs() <= 1e-6 * (1.0 + direct_cost));
        }
        unsafe { splitpro_problem_free(problem) };
    }

    #[test]
    fn data_built_behavior_projects_like_the_model_built_one() {
        let horizon = 6;
        let model = scalar_behavior(horizon);

        // Record a trajectory of the same system under rich inputs.
        let rep = StateSpaceRep::new(
            DMatrix::from_row_slice(1, 1, &A),
            DMatrix::from_row_slice(1, 1, &B),
            DMatrix::from_row_slice(1, 1, &C),
            DMatrix::from_row_slice(1, 1, &D),
            Partition::identity(2, 1).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t_len = 60;
        let mut record = Vec::with_capacity(2 * t_len);
        let mut x = DVector::zeros(1);
        for _ in 0..t_len {
            let u = DVector::from_element(1, rng.gen_range(-1.0..1.0));
            let (w, x_next) = rep.step(&x, &u).unwrap();
            record.extend_from_slice(w.as_slice());
            x = x_next;
        }
        let mut data = ptr::null_mut();
        let status = unsafe {
            splitpro_behavior_from_data(2, 1, 1, record.as_ptr(), t_len, horizon, 0.0, &mut data)
        };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        assert_eq!(unsafe { splitpro_behavior_rank(data) }, unsafe {
            splitpro_behavior_rank(model)
        },);

        let dim = unsafe { splitpro_behavior_dim(model) };
        let point: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut through_model = vec![0.0; dim];
        let mut through_data = vec![0.0; dim];
        unsafe {
            assert_eq!(
                splitpro_behavior_project(model, point.as_ptr(), dim, through_model.as_mut_ptr()),
                SplitproStatus::Ok
            );
            assert_eq!(
                splitpro_behavior_project(data, point.as_ptr(), dim, through_data.as_mut_ptr()),
                SplitproStatus::Ok
            );
            splitpro_behavior_free(model);
            splitpro_behavior_free(data);
        }
        let gap = through_model
            .iter()
            .zip(&through_data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(gap <= 1e-8, "projections differ by {gap:.3e}");
    }

    #[test]
    fn failures_come_back_as_status_codes_with_messages() {
        // Null arguments.
        let mut handle = ptr::null_mut();
        let status = unsafe {
            splitpro_behavior_from_state_space(
                1,
                1,
                1,
                ptr::null(),
                B.as_ptr(),
                C.as_ptr(),
                D.as_ptr(),
                6,
                &mut handle,
            )
        };
        assert_eq!(status, SplitproStatus::NullArgument);
        assert!(last_error().contains("`a`"), "{}", last_error());

        // An unobservable pair: two identical states, one measured.
        let a2 = [1.0, 0.0, 0.0, 1.0];
        let b2 = [1.0, 1.0];
        let c2 = [1.0, 0.0];
        let status = unsafe {
            splitpro_behavior_from_state_space(
                2,
                1,
                1,
                a2.as_ptr(),
                b2.as_ptr(),
                c2.as_ptr(),
                D.as_ptr(),
                6,
                &mut handle,
            )
        };
        assert_eq!(status, SplitproStatus::NotObservable);

        // A constant record spans a line, not the behavior.
        let flat = [0.3; 80];
        let status =
            unsafe { splitpro_behavior_from_data(2, 1, 1, flat.as_ptr(), 40, 6, 0.0, &mut handle) };
        assert_eq!(status, SplitproStatus::DataNotRich);

        let behavior = scalar_behavior(6);

        // Wrong projection length.
        let small = [0.0; 4];
        let mut out_buf = [0.0; 4];
        let status =
            unsafe { splitpro_behavior_project(behavior, small.as_ptr(), 4, out_buf.as_mut_ptr()) };
        assert_eq!(status, SplitproStatus::InvalidArgument);
        assert!(last_error().contains("length 4"), "{}", last_error());

        // A zero weight matrix is not positive definite.
        let w_ini = [0.0, 0.0];
        let w_ref = [0.25; 10];
        let zero_phi = [0.0; 4];
        let mut problem = ptr::null_mut();
        let status = unsafe {
            splitpro_problem_new(
                behavior,
                w_ini.as_ptr(),
                1,
                w_ref.as_ptr(),
                5,
                zero_phi.as_ptr(),
                &mut problem,
            )
        };
        assert_eq!(status, SplitproStatus::Numeric);

        let status = unsafe {
            splitpro_problem_new(
                behavior,
                w_ini.as_ptr(),
                1,
                w_ref.as_ptr(),
                5,
                PHI.as_ptr(),
                &mut problem,
            )
        };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        unsafe { splitpro_behavior_free(behavior) };

        // Unknown solver id and an exhausted iteration budget.
        let mut sol = ptr::null_mut();
        let status = unsafe { splitpro_solve(problem, 7, 0.0, 0.0, 0, &mut sol) };
        assert_eq!(status, SplitproStatus::InvalidArgument);
        assert!(last_error().contains('7'), "{}", last_error());
        let status = unsafe {
            splitpro_solve(
                problem,
                SplitproSolver::ThreeOperator as c_int,
                0.0,
                1e-13,
                2,
                &mut sol,
            )
        };
        assert_eq!(status, SplitproStatus::NotConverged);
        assert!(sol.is_null());

        // Short buffers truncate but stay NUL-terminated and report the
        // full length.
        let (data, _, _) = {
            let r = solve(problem, SplitproSolver::Direct);
            unsafe { splitpro_problem_free(problem) };
            r
        };
        assert_eq!(data.len(), 10);
        let full = unsafe { splitpro_last_error_message(ptr::null_mut(), 0) };
        let mut tiny = [0 as c_char; 8];
        let reported = unsafe { splitpro_last_error_message(tiny.as_mut_ptr(), tiny.len()) };
        assert_eq!(reported, full);
        assert_eq!(tiny[7], 0);
        assert_eq!(last_error().is_empty(), full == 0);
    }

    #[test]
    fn solution_copy_rejects_wrong_lengths_and_frees_tolerate_null() {
        let behavior = scalar_behavior(6);
        let w_ini = [0.0, 0.0];
        let w_ref = [0.25; 10];
        let mut problem = ptr::null_mut();
        let status = unsafe {
            splitpro_problem_new(
                behavior,
                w_ini.as_ptr(),
                1,
                w_ref.as_ptr(),
                5,
                PHI.as_ptr(),
                &mut problem,
            )
        };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        let mut sol = ptr::null_mut();
        let status = unsafe {
            splitpro_solve(
                problem,
                SplitproSolver::Direct as c_int,
                0.0,
                0.0,
                0,
                &mut sol,
            )
        };
        assert_eq!(status, SplitproStatus::Ok, "{}", last_error());
        let mut buf = [0.0; 3];
        let status = unsafe { splitpro_solution_copy(sol, buf.as_mut_ptr(), 3) };
        assert_eq!(status, SplitproStatus::InvalidArgument);
        unsafe {
            splitpro_solution_free(sol);
            splitpro_problem_free(problem);
            splitpro_behavior_free(behavior);
            // Null-tolerant teardown.
            splitpro_solution_free(ptr::null_mut());
            splitpro_problem_free(ptr::null_mut());
            splitpro_behavior_free(ptr::null_mut());
        }
        assert!(unsafe { splitpro_solution_cost(ptr::null()) }.is_nan());
        assert_eq!(unsafe { splitpro_behavior_dim(ptr::null()) }, 0);
    }

    #[test]
    fn version_string_and_generated_header_exist() {
        let version = unsafe { CStr::from_ptr(splitpro_version()) };
        assert!(version.to_str().unwrap().contains('.'));

        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/splitpro.h");
        let text = std::fs::read_to_string(header).expect("build script writes the header");
        for needle in [
            "SPLITPRO_H",
            "splitpro_solve",
            "SplitproStatus",
            "SplitproSolver",
            "splitpro_behavior_from_data",
        ] {
            assert!(text.contains(needle), "header lacks `{needle}`");
        }
    }
}
