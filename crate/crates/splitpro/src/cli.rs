//! Front end behind the `splitpro` binary: flat key=value experiment
//! configs, the three experiment drivers, and CSV export of every artifact.
//!
//! Everything here is thin plumbing over the library — parse a config,
//! build the network and problem, call a solver, format rows. Determinism
//! is part of the contract: identical config and seed produce byte-identical
//! CSVs, with the sole exception of the benchmark's wall-clock columns,
//! which no seed can pin down.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::lqt::{self, Controller, Disturbance, LqtProblem, MpcRun, MpcScenario, ProblemBehavior};
use crate::network::{
    build_network, interconnected_basis, network_projectors, subsystem_bases, subsystem_basis,
    Network, NetworkConfig, Topology,
};
use crate::splitting::{self, InnerMode, SolveReport, SplitConfig};
use crate::trajectory::Trajectory;
use crate::{Error, Result};

/// Parsed flat `key=value` configuration file.
///
/// Lines are trimmed, everything from a `#` on is a comment, and keys are
/// unique. Values keep their verbatim text together with the line they came
/// from, so the typed accessors can point at the offending line when a
/// value does not parse.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("expected key=value, got `{body}`"),
                });
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::ConfigParse {
                    line,
                    msg: "empty key".into(),
                });
            }
            let value = value.trim().to_string();
            if let Some((first, _)) = entries.insert(key.clone(), (line, value)) {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?)
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    /// Line on which `key` was set, for error reporting.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.raw(key).map(|(line, _)| *line)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.raw(key).map(|(_, value)| value.as_str())
    }

    /// Typed accessor; a present but unparsable value reports its line.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, text)) => text.parse().map(Some).map_err(|e| Error::ConfigParse {
                line: *line,
                msg: format!("key `{key}`: cannot parse `{text}`: {e}"),
            }),
        }
    }

    /// Rejects keys outside `allowed`, pointing at the offending line —
    /// a typo in an experiment config should fail loudly, not silently
    /// fall back to a default.
    pub fn ensure_only(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::ConfigParse {
                    line: *line,
                    msg: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }
}

/// Keys understood by [`network_from_config`].
pub const NETWORK_KEYS: &[&str] = &[
    "topology",
    "nu",
    "seed",
    "gray_box",
    "t_ini",
    "t_f",
    "dt",
    "data_len",
    "mass_lo",
    "mass_hi",
    "damping_lo",
    "damping_hi",
    "stiffness_lo",
    "stiffness_hi",
    "output_gain_lo",
    "output_gain_hi",
];

/// Solver selection and tuning keys understood by [`split_config_from`].
pub const SOLVER_KEYS: &[&str] = &[
    "solver",
    "alpha",
    "tol",
    "max_outer",
    "inner_j",
    "inner_mode",
    "record_iterates",
];

/// Tracking-objective keys shared by the solve and closed-loop drivers.
pub const OBJECTIVE_KEYS: &[&str] = &["u_ref", "y_ref", "phi_input", "phi_output"];

/// Extra keys understood by [`run_mpc`].
pub const MPC_KEYS: &[&str] = &[
    "t_sim",
    "bound_lo",
    "bound_hi",
    "disturbance_time",
    "disturbance_subsystem",
    "disturbance_coord",
    "disturbance_magnitude",
];

/// Seed override from the `SPLITPRO_SEED` environment variable, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var("SPLITPRO_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| Error::ConfigParse {
                line: 0,
                msg: format!("SPLITPRO_SEED `{text}`: {e}"),
            }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::ConfigParse {
            line: 0,
            msg: format!("SPLITPRO_SEED: {e}"),
        }),
    }
}

/// Reads the network description out of a parsed config, filling
/// unspecified keys with the experiment defaults and honoring the
/// `SPLITPRO_SEED` override.
pub fn network_from_config(cfg: &ConfigMap) -> Result<NetworkConfig> {
    let topology = cfg.get("topology")?.unwrap_or(Topology::Chain);
    let nu = cfg.get("nu")?.unwrap_or(2);
    let seed = cfg.get("seed")?.unwrap_or(1);
    let mut net = NetworkConfig::new(topology, nu, seed);
    if let Some(v) = cfg.get("gray_box")? {
        net.gray_box = v;
    }
    if let Some(v) = cfg.get("t_ini")? {
        net.t_ini = v;
    }
    if let Some(v) = cfg.get("t_f")? {
        net.t_f = v;
    }
    if let Some(v) = cfg.get("dt")? {
        net.dt = v;
    }
    if let Some(v) = cfg.get("data_len")? {
        net.data_len = Some(v);
    }
    if let Some(v) = cfg.get("mass_lo")? {
        net.ranges.mass.0 = v;
    }
    if let Some(v) = cfg.get("mass_hi")? {
        net.ranges.mass.1 = v;
    }
    if let Some(v) = cfg.get("damping_lo")? {
        net.ranges.damping.0 = v;
    }
    if let Some(v) = cfg.get("damping_hi")? {
        net.ranges.damping.1 = v;
    }
    if let Some(v) = cfg.get("stiffness_lo")? {
        net.ranges.stiffness.0 = v;
    }
    if let Some(v) = cfg.get("stiffness_hi")? {
        net.ranges.stiffness.1 = v;
    }
    if let Some(v) = cfg.get("output_gain_lo")? {
        net.ranges.output_gain.0 = v;
    }
    if let Some(v) = cfg.get("output_gain_hi")? {
        net.ranges.output_gain.1 = v;
    }
    if let Some(v) = env_seed()? {
        net.seed = v;
    }
    Ok(net)
}

/// Solver tuning out of a parsed config; unspecified keys keep the library
/// defaults.
pub fn split_config_from(cfg: &ConfigMap) -> Result<SplitConfig> {
    let mut split = SplitConfig::default();
    if let Some(v) = cfg.get("alpha")? {
        split.alpha = Some(v);
    }
    if let Some(v) = cfg.get("tol")? {
        split.tol = v;
    }
    if let Some(v) = cfg.get("max_outer")? {
        split.max_outer = v;
    }
    if let Some(v) = cfg.get("inner_j")? {
        split.inner_j = v;
    }
    if let Some(text) = cfg.get_str("inner_mode") {
        split.inner_mode = match text {
            "auto" => InnerMode::Auto,
            "von_neumann" => InnerMode::VonNeumann,
            "dykstra" => InnerMode::Dykstra,
            other => {
                return Err(Error::ConfigParse {
                    line: cfg.line_of("inner_mode").unwrap_or(0),
                    msg: format!("inner_mode `{other}` (expected auto, von_neumann, or dykstra)"),
                })
            }
        };
    }
    if let Some(v) = cfg.get("record_iterates")? {
        split.record_iterates = v;
    }
    Ok(split)
}

fn pathed(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| pathed(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| pathed(path, e))
}

/// Writes samples as `t,w1,...,wq` rows with `\n` line endings. Floats use
/// the shortest round-trip decimal form, so equal values mean equal bytes.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = String::from("t");
    for j in 1..=traj.q() {
        let _ = write!(out, ",w{j}");
    }
    out.push('\n');
    for t in 1..=traj.t_len() {
        let _ = write!(out, "{t}");
        for v in traj.sample(t).iter() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Reads any artifact CSV back as named numeric columns.
pub fn read_columns_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::ConfigParse {
            line: 1,
            msg: "empty CSV".into(),
        });
    };
    let names: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::ConfigParse {
                line: idx + 1,
                msg: format!("expected {} fields, got {}", names.len(), fields.len()),
            });
        }
        for (column, field) in columns.iter_mut().zip(&fields) {
            column.push(field.parse().map_err(|e| Error::ConfigParse {
                line: idx + 1,
                msg: format!("`{field}`: {e}"),
            })?);
        }
    }
    Ok((names, columns))
}

/// Inverse of [`write_trajectory_csv`].
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let (names, columns) = read_columns_csv(path)?;
    if names.first().map(String::as_str) != Some("t") || names.len() < 2 {
        return Err(Error::ConfigParse {
            line: 1,
            msg: "expected header t,w1,...".into(),
        });
    }
    for (j, name) in names[1..].iter().enumerate() {
        if *name != format!("w{}", j + 1) {
            return Err(Error::ConfigParse {
                line: 1,
                msg: format!("unexpected column `{name}`"),
            });
        }
    }
    let q = names.len() - 1;
    let t_len = columns[1].len();
    if t_len == 0 {
        return Err(Error::ConfigParse {
            line: 2,
            msg: "no samples".into(),
        });
    }
    let mut data = DVector::zeros(q * t_len);
    for t in 0..t_len {
        for j in 0..q {
            data[t * q + j] = columns[j + 1][t];
        }
    }
    Trajectory::new(data, q)
}

/// Per-iteration `k,residual,cost` trace of an iterative solve.
pub fn write_trace_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut out = String::from("k,residual,cost\n");
    for k in 0..report.iterations {
        let _ = writeln!(
            out,
            "{},{},{}",
            k + 1,
            report.residual_history[k],
            report.cost_history[k]
        );
    }
    write_file(path, &out)
}

/// Where [`run_solve`] puts the trace relative to the solution file.
pub fn trace_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}_trace.csv"))
}

/// Constant references and diagonal weights for one network window.
struct ObjectiveSpec {
    u_ref: f64,
    y_ref: f64,
    phi_input: f64,
    phi_output: f64,
}

fn objective_spec(cfg: &ConfigMap) -> Result<ObjectiveSpec> {
    Ok(ObjectiveSpec {
        u_ref: cfg.get("u_ref")?.unwrap_or(0.25),
        y_ref: cfg.get("y_ref")?.unwrap_or(0.25),
        phi_input: cfg.get("phi_input")?.unwrap_or(0.1),
        phi_output: cfg.get("phi_output")?.unwrap_or(10.0),
    })
}

/// Weight matrix and reference suffix for constant-reference tracking.
/// Coupling inputs copy a neighbor's output, so they carry the output
/// reference with the input weight — the same convention the closed-loop
/// driver uses internally.
fn objective(net: &Network, spec: &ObjectiveSpec) -> Result<(DMatrix<f64>, Trajectory)> {
    let layout = net.layout();
    let q = layout.q_total();
    let mut phi_diag = DVector::zeros(q);
    let mut ref_sample = DVector::zeros(q);
    for i in 0..net.nu() {
        let q_i = layout.sub_q(i);
        for local in 0..q_i {
            let g = layout.global_index(i, local, 0);
            if local == q_i - 1 {
                phi_diag[g] = spec.phi_output;
                ref_sample[g] = spec.y_ref;
            } else {
                phi_diag[g] = spec.phi_input;
                ref_sample[g] = if local == 0 { spec.u_ref } else { spec.y_ref };
            }
        }
    }
    let mut ref_data = DVector::zeros(q * net.t_f());
    for t in 0..net.t_f() {
        ref_data.rows_mut(t * q, q).copy_from(&ref_sample);
    }
    Ok((
        DMatrix::from_diagonal(&phi_diag),
        Trajectory::new(ref_data, q)?,
    ))
}

/// What [`run_solve`] produced, for callers that want more than the files.
#[derive(Debug)]
pub struct SolveArtifacts {
    /// The planned suffix trajectory, as written to the solution CSV.
    pub solution: Trajectory,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Where the iteration trace went, when recording was on.
    pub trace: Option<PathBuf>,
}

/// Solves one tracking window (rest history, constant references) on the
/// configured network and writes the planned suffix as `t,w1,...,wq`. With
/// iterate recording on — config key or the `--record-iterates` flag — a
/// `k,residual,cost` trace lands next to the solution as `<stem>_trace.csv`.
pub fn run_solve(cfg: &ConfigMap, out: &Path, record_iterates: bool) -> Result<SolveArtifacts> {
    let mut allowed = Vec::new();
    allowed.extend_from_slice(NETWORK_KEYS);
    allowed.extend_from_slice(SOLVER_KEYS);
    allowed.extend_from_slice(OBJECTIVE_KEYS);
    cfg.ensure_only(&allowed)?;
    let net = build_network(&network_from_config(cfg)?)?;
    let (phi, w_ref) = objective(&net, &objective_spec(cfg)?)?;
    let w_ini = Trajectory::zeros(net.layout().q_total(), net.t_ini())?;
    let bases = subsystem_bases(&net)?;
    let central = interconnected_basis(&net, &bases)?;
    let problem = LqtProblem::new(ProblemBehavior::Basis(central), w_ini, w_ref, phi)?;
    let mut split = split_config_from(cfg)?;
    split.record_iterates |= record_iterates;
    let solver = cfg.get_str("solver").unwrap_or("dy");
    let report = match solver {
        "fb" => Some(splitting::fb_solve(&problem, &split, None)?),
        "dy" => Some(splitting::dy_solve(&problem, &split, None)?),
        "split_pro" => {
            let (c1, c2) = network_projectors(&net, &bases)?;
            Some(splitting::split_pro_solve(
                &problem,
                &split,
                &[c1, c2],
                None,
            )?)
        }
        "oracle" => None,
        other => {
            return Err(Error::ConfigParse {
                line: cfg.line_of("solver").unwrap_or(0),
                msg: format!("solver `{other}` (expected fb, dy, split_pro, or oracle)"),
            })
        }
    };
    let (solution, iterations, converged) = match &report {
        Some(r) => (problem.suffix_trajectory(&r.w)?, r.iterations, r.converged),
        None => (lqt::oracle_solve(&problem)?, 0, true),
    };
    let cost = lqt::cost_eval(&solution, problem.w_ref(), problem.phi())?;
    write_trajectory_csv(out, &solution)?;
    let trace = if split.record_iterates {
        let path = trace_path(out);
        match &report {
            Some(r) => write_trace_csv(&path, r)?,
            // A direct solve has no iterations to trace.
            None => write_file(&path, "k,residual,cost\n")?,
        }
        Some(path)
    } else {
        None
    };
    Ok(SolveArtifacts {
        solution,
        cost,
        iterations,
        converged,
        trace,
    })
}

/// One row of the scaling benchmark.
#[derive(Debug, Clone, Copy)]
pub struct BenchRow {
    pub units: usize,
    pub centralized_mean: f64,
    pub centralized_var: f64,
    pub distributed_mean: f64,
    pub distributed_var: f64,
}

fn mean_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn bench_one(topology: Topology, nu: usize, repeats: usize, seed: u64) -> Result<BenchRow> {
    // Mixed-representation network with the benchmark horizon defaults
    // (prefix 2ν+1, suffix 5).
    let net = build_network(&NetworkConfig::new(topology, nu, seed))?;
    // Identity weight keeps the literal step size 0.1 well inside the
    // stability interval, whose bound is then 1.
    let spec = ObjectiveSpec {
        u_ref: 0.25,
        y_ref: 0.25,
        phi_input: 1.0,
        phi_output: 1.0,
    };
    let (phi, w_ref) = objective(&net, &spec)?;
    let w_ini = Trajectory::zeros(net.layout().q_total(), net.t_ini())?;
    // The rest prefix is feasible by construction; skip the per-solve
    // check so the timer sees only the algorithms under comparison.
    let monolithic_cfg = SplitConfig {
        alpha: Some(0.1),
        tol: 1e-6,
        check_prefix: false,
        ..SplitConfig::default()
    };
    let distributed_cfg = SplitConfig {
        inner_j: 5,
        ..monolithic_cfg.clone()
    };
    let mut monolithic_times = Vec::with_capacity(repeats);
    let mut distributed_times = Vec::with_capacity(repeats);
    for rep in 0..=repeats {
        // (a) Monolithic: charged with building every local basis plus the
        // intersection basis, since that construction is what stops scaling.
        let start = Instant::now();
        let bases = subsystem_bases(&net)?;
        let central = interconnected_basis(&net, &bases)?;
        let problem = LqtProblem::new(
            ProblemBehavior::Basis(central),
            w_ini.clone(),
            w_ref.clone(),
            phi.clone(),
        )?;
        let report = splitting::dy_solve(&problem, &monolithic_cfg, None)?;
        let elapsed = start.elapsed().as_secs_f64();
        if !report.converged {
            return Err(Error::SolverFailed(format!(
                "monolithic solve stalled after {} iterations",
                report.iterations
            )));
        }
        if rep > 0 {
            monolithic_times.push(elapsed);
        }

        // (b) Distributed: agents build their bases independently, so only
        // the slowest one is charged, plus the shared sweep iteration.
        let mut worst_local = 0.0f64;
        let mut bases = Vec::with_capacity(nu);
        for i in 0..net.nu() {
            let start = Instant::now();
            bases.push(subsystem_basis(&net, i)?);
            worst_local = worst_local.max(start.elapsed().as_secs_f64());
        }
        let start = Instant::now();
        let (c1, c2) = network_projectors(&net, &bases)?;
        let problem = LqtProblem::new(
            ProblemBehavior::Sets(vec![c1.clone(), c2.clone()]),
            w_ini.clone(),
            w_ref.clone(),
            phi.clone(),
        )?;
        let report = splitting::split_pro_solve(&problem, &distributed_cfg, &[c1, c2], None)?;
        let elapsed = worst_local + start.elapsed().as_secs_f64();
        if !report.converged {
            return Err(Error::SolverFailed(format!(
                "distributed solve stalled after {} iterations",
                report.iterations
            )));
        }
        if rep > 0 {
            distributed_times.push(elapsed);
        }
    }
    let (centralized_mean, centralized_var) = mean_var(&monolithic_times);
    let (distributed_mean, distributed_var) = mean_var(&distributed_times);
    Ok(BenchRow {
        units: nu,
        centralized_mean,
        centralized_var,
        distributed_mean,
        distributed_var,
    })
}

/// Times the monolithic solve against the distributed one on growing
/// networks and writes one row per size. Each size runs `repeats` timed
/// rounds after one discarded warm-up; rounds run sequentially so the
/// timers never interfere.
pub fn run_bench(
    topology: Topology,
    nu_list: &[usize],
    repeats: usize,
    seed: u64,
    out: &Path,
) -> Result<Vec<BenchRow>> {
    if nu_list.is_empty() {
        return Err(Error::DimensionMismatch(
            "empty list of network sizes".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::DimensionMismatch("repeats = 0".into()));
    }
    let seed = env_seed()?.unwrap_or(seed);
    let mut rows = Vec::with_capacity(nu_list.len());
    for &nu in nu_list {
        let row = bench_one(topology, nu, repeats, seed)
            .map_err(|e| Error::SolverFailed(format!("benchmark at {nu} subsystems: {e}")))?;
        rows.push(row);
    }
    let mut text = String::from(
        "units,centralized_lqr_mean,centralized_lqr_var,distributed_worst_mean,distributed_worst_var\n",
    );
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            r.units, r.centralized_mean, r.centralized_var, r.distributed_mean, r.distributed_var
        );
    }
    write_file(out, &text)?;
    Ok(rows)
}

/// Both closed-loop runs behind the comparison CSV.
#[derive(Debug)]
pub struct MpcArtifacts {
    /// Closed loop under the direct active-set controller (method 1).
    pub oracle: MpcRun,
    /// Closed loop under the distributed splitting controller (method 2).
    pub split: MpcRun,
    pub scenario: MpcScenario,
}

/// Runs the input-constrained receding-horizon comparison twice over the
/// same network, references, and disturbance — once with the direct
/// active-set controller, once with the splitting controller — and writes
/// one row per step (`time,u_ref,u_method_1,u_method_2,y_ref,y_method_1,
/// y_method_2`) tracking the first subsystem's exogenous input and output.
///
/// Defaults reproduce the bundled two-subsystem chain experiment:
/// references 0.25, input weight 0.1, output weight 10, bounds ±0.5, and a
/// 0.5 kick on the first subsystem's position at step 50 of 100.
pub fn run_mpc(cfg: &ConfigMap, out: &Path) -> Result<MpcArtifacts> {
    let mut allowed = Vec::new();
    allowed.extend_from_slice(NETWORK_KEYS);
    allowed.extend_from_slice(OBJECTIVE_KEYS);
    allowed.extend_from_slice(MPC_KEYS);
    // Solver tuning applies to the splitting controller; the solver
    // selection key does not, since both controllers are fixed here.
    allowed.extend_from_slice(&["alpha", "tol", "max_outer", "inner_j", "inner_mode"]);
    cfg.ensure_only(&allowed)?;
    let net = build_network(&network_from_config(cfg)?)?;
    let spec = objective_spec(cfg)?;
    // Unless overridden, the step size stays the library default of half
    // the stability bound — the closed-loop weights put the literal 0.1
    // exactly on the bound, which the guard (rightly) rejects.
    let mut split = split_config_from(cfg)?;
    if cfg.get_str("inner_mode").is_none() {
        // Plain sweeps suffice here: the bounds come last in the sweep
        // order, so every plan ends exactly inside the box no matter how
        // the sweeps are corrected, and the remaining behavior mismatch is
        // what the outer iteration corrects anyway.
        split.inner_mode = InnerMode::VonNeumann;
    }
    let bounds = (
        cfg.get("bound_lo")?.unwrap_or(-0.5),
        cfg.get("bound_hi")?.unwrap_or(0.5),
    );
    let magnitude = cfg.get("disturbance_magnitude")?.unwrap_or(0.5);
    let disturbance = (magnitude != 0.0).then_some(Disturbance {
        time: cfg.get("disturbance_time")?.unwrap_or(50),
        subsystem: cfg.get("disturbance_subsystem")?.unwrap_or(0),
        state_coord: cfg.get("disturbance_coord")?.unwrap_or(0),
        magnitude,
    });
    let scenario = MpcScenario {
        t_sim: cfg.get("t_sim")?.unwrap_or(100),
        u_ref: spec.u_ref,
        y_ref: spec.y_ref,
        phi_input: spec.phi_input,
        phi_output: spec.phi_output,
        input_bounds: Some(bounds),
        disturbance,
        split,
    };
    let oracle = lqt::mpc_run(&net, Controller::Oracle, &scenario)?;
    let split_run = lqt::mpc_run(&net, Controller::SplitPro, &scenario)?;
    let u_idx = net.layout().own_input_index(0, 0);
    let y_idx = net.layout().output_index(0, 0);
    let mut text = String::from("time,u_ref,u_method_1,u_method_2,y_ref,y_method_1,y_method_2\n");
    for step in 0..scenario.t_sim {
        let o = oracle.measured.sample(step + 1);
        let s = split_run.measured.sample(step + 1);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            step, scenario.u_ref, o[u_idx], s[u_idx], scenario.y_ref, o[y_idx], s[y_idx]
        );
    }
    write_file(out, &text)?;
    Ok(MpcArtifacts {
        oracle,
        split: split_run,
        scenario,
    })
}
