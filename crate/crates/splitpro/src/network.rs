//! Networks of coupled second-order subsystems for the benchmark experiments.
//!
//! Each subsystem is a mass with local damping and stiffness, discretized
//! with step `dt`. Its inputs are one exogenous force plus one coupling force
//! per neighbor; its output is a scaled position. An undirected edge `{i, j}`
//! creates two directed couplings `u_(i<-j) = y_j` and `u_(j<-i) = y_i`, so
//! the interconnected behavior is the intersection of
//!
//! * `C1`: the product of the per-subsystem behaviors (block-diagonal over
//!   the network layout), and
//! * `C2`: the coupling subspace forcing every coupling input to equal the
//!   matching neighbor output at every time step.
//!
//! A "gray box" network alternates between model knowledge and recorded
//! data: subsystems at even 1-based positions keep their state-space model,
//! the others are represented only through a Hankel matrix of collected
//! input/output data.

use crate::behavior::{
    collect_data, hankel_basis, persistency_check, ss_basis, BasisRep, HankelRep, StateSpaceRep,
};
use crate::linalg;
use crate::projection::{ProductPart, Projector};
use crate::trajectory::{Partition, Trajectory};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Interconnection pattern of the benchmark networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Chain,
    Ring,
    Lattice,
}

impl std::str::FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            "lattice" => Ok(Topology::Lattice),
            other => Err(Error::ConfigParse {
                line: 0,
                msg: format!("unknown topology `{other}`"),
            }),
        }
    }
}

/// Physical parameters of one subsystem.
#[derive(Debug, Clone, Copy)]
pub struct SubsystemParams {
    pub mass: f64,
    pub damping: f64,
    /// Local spring stiffness entering the state recursion.
    pub stiffness: f64,
    /// Readout gain mapping position to the measured output.
    pub output_gain: f64,
}

/// Sampling intervals for [`sample_params`]; every draw is uniform.
#[derive(Debug, Clone, Copy)]
pub struct ParamRanges {
    pub mass: (f64, f64),
    pub damping: (f64, f64),
    pub stiffness: (f64, f64),
    pub output_gain: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        let r = (0.5, 2.0);
        Self {
            mass: r,
            damping: r,
            stiffness: r,
            output_gain: r,
        }
    }
}

/// Draws one parameter set; the draw order (mass, damping, stiffness,
/// output gain) is fixed so a seed determines the result.
pub fn sample_params(seed: u64, ranges: &ParamRanges) -> Result<SubsystemParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| -> Result<f64> {
        // NaN bounds fail this comparison too, which is what we want.
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::DimensionMismatch(format!(
                "empty parameter range [{lo}, {hi}]"
            )));
        }
        Ok(Uniform::new_inclusive(lo, hi).sample(&mut rng))
    };
    Ok(SubsystemParams {
        mass: draw(ranges.mass.0, ranges.mass.1)?,
        damping: draw(ranges.damping.0, ranges.damping.1)?,
        stiffness: draw(ranges.stiffness.0, ranges.stiffness.1)?,
        output_gain: draw(ranges.output_gain.0, ranges.output_gain.1)?,
    })
}

/// Discretized subsystem with `1 + n_neighbors` force inputs and one
/// position output. Local signal layout: own input first, then one coupling
/// input per neighbor (ascending neighbor index), output last.
pub fn subsystem_ss(
    params: &SubsystemParams,
    n_neighbors: usize,
    dt: f64,
) -> Result<StateSpaceRep> {
    if params.mass <= 0.0 || dt <= 0.0 {
        return Err(Error::DimensionMismatch(format!(
            "mass {} and dt {dt} must be positive",
            params.mass
        )));
    }
    let m_inputs = 1 + n_neighbors;
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[
            1.0,
            dt,
            -params.stiffness / params.mass * dt,
            1.0 - params.damping / params.mass * dt,
        ],
    );
    // Every force enters the velocity equation with unit gain.
    let mut b = DMatrix::zeros(2, m_inputs);
    for j in 0..m_inputs {
        b[(1, j)] = 1.0;
    }
    let c = DMatrix::from_row_slice(1, 2, &[params.output_gain / params.mass * dt, 0.0]);
    let d = DMatrix::zeros(1, m_inputs);
    StateSpaceRep::new(a, b, c, d, Partition::identity(m_inputs + 1, m_inputs)?)
}

/// Undirected edge list (0-based, `i < j`) of a topology over `nu` nodes.
/// The lattice fills a grid with `ceil(sqrt(nu))` columns row-major.
pub fn topology_edges(topology: Topology, nu: usize) -> Result<Vec<(usize, usize)>> {
    if nu == 0 {
        return Err(Error::DimensionMismatch("network with zero nodes".into()));
    }
    match topology {
        Topology::Chain => Ok((0..nu.saturating_sub(1)).map(|i| (i, i + 1)).collect()),
        Topology::Ring => {
            if nu < 3 {
                return Err(Error::DimensionMismatch(format!(
                    "ring needs at least 3 nodes, got {nu}"
                )));
            }
            let mut edges: Vec<(usize, usize)> = (0..nu - 1).map(|i| (i, i + 1)).collect();
            edges.push((0, nu - 1));
            edges.sort_unstable();
            Ok(edges)
        }
        Topology::Lattice => {
            let cols = (nu as f64).sqrt().ceil() as usize;
            let mut edges = Vec::new();
            for id in 0..nu {
                let (r, c) = (id / cols, id % cols);
                if c + 1 < cols && id + 1 < nu {
                    edges.push((id, id + 1));
                }
                let down = (r + 1) * cols + c;
                if down < nu {
                    edges.push((id, down));
                }
            }
            edges.sort_unstable();
            Ok(edges)
        }
    }
}

/// One directed coupling `u_(to<-from) = y_from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    pub to: usize,
    pub from: usize,
    /// Local coordinate of the coupling input within subsystem `to`.
    pub input_pos: usize,
}

/// Coordinate map of the stacked network signal. One global sample stacks
/// the subsystem blocks in index order; a window of `L` samples stacks `L`
/// such blocks time-major, matching [`Trajectory`] layout.
#[derive(Debug, Clone)]
pub struct NetworkLayout {
    sub_q: Vec<usize>,
    sub_offset: Vec<usize>,
    q_total: usize,
    couplings: Vec<Coupling>,
}

impl NetworkLayout {
    /// Builds the layout from an undirected edge list.
    pub fn new(nu: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nu];
        for &(a, b) in edges {
            if a >= nu || b >= nu || a == b {
                return Err(Error::LayoutMismatch(format!(
                    "edge ({a}, {b}) invalid for {nu} nodes"
                )));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let sub_q: Vec<usize> = neighbors.iter().map(|l| l.len() + 2).collect();
        let mut sub_offset = vec![0usize; nu];
        for i in 1..nu {
            sub_offset[i] = sub_offset[i - 1] + sub_q[i - 1];
        }
        let q_total = sub_offset[nu - 1] + sub_q[nu - 1];
        let mut couplings = Vec::new();
        for (to, list) in neighbors.iter().enumerate() {
            for (rank, &from) in list.iter().enumerate() {
                couplings.push(Coupling {
                    to,
                    from,
                    input_pos: 1 + rank,
                });
            }
        }
        Ok(Self {
            sub_q,
            sub_offset,
            q_total,
            couplings,
        })
    }

    pub fn nu(&self) -> usize {
        self.sub_q.len()
    }

    /// Stacked signal dimension of one global sample.
    pub fn q_total(&self) -> usize {
        self.q_total
    }

    pub fn sub_q(&self, sub: usize) -> usize {
        self.sub_q[sub]
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Global coordinate of a subsystem-local coordinate at 0-based `step`.
    pub fn global_index(&self, sub: usize, local: usize, step: usize) -> usize {
        debug_assert!(local < self.sub_q[sub]);
        step * self.q_total + self.sub_offset[sub] + local
    }

    /// Global coordinate of the exogenous input of `sub` at `step`.
    pub fn own_input_index(&self, sub: usize, step: usize) -> usize {
        self.global_index(sub, 0, step)
    }

    /// Global coordinate of the output of `sub` at `step`.
    pub fn output_index(&self, sub: usize, step: usize) -> usize {
        self.global_index(sub, self.sub_q[sub] - 1, step)
    }

    /// Coupled coordinate pairs `(coupling input, neighbor output)` over a
    /// window of `horizon` samples.
    pub fn coupling_pairs(&self, horizon: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.couplings.len() * horizon);
        for step in 0..horizon {
            for c in &self.couplings {
                pairs.push((
                    self.global_index(c.to, c.input_pos, step),
                    self.output_index(c.from, step),
                ));
            }
        }
        pairs
    }

    /// Global coordinates of all exogenous inputs over a window.
    pub fn own_input_indices(&self, horizon: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.nu() * horizon);
        for step in 0..horizon {
            for sub in 0..self.nu() {
                idx.push(self.own_input_index(sub, step));
            }
        }
        idx
    }

    /// Index list of one subsystem's block over a window, ordered to match
    /// the subsystem's local time-major trajectory layout.
    pub fn block_indices(&self, sub: usize, horizon: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.sub_q[sub] * horizon);
        for step in 0..horizon {
            for local in 0..self.sub_q[sub] {
                idx.push(self.global_index(sub, local, step));
            }
        }
        idx
    }
}

/// Which representation the controller side holds for a subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepMode {
    StateSpace,
    Hankel,
}

/// Generation recipe for [`build_network`].
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub nu: usize,
    pub seed: u64,
    /// Alternate model/data representations across subsystems; `false`
    /// keeps state-space models everywhere.
    pub gray_box: bool,
    pub t_ini: usize,
    pub t_f: usize,
    pub ranges: ParamRanges,
    pub dt: f64,
    /// Length of each recorded data trajectory; default
    /// `nu * (t_ini + t_f) + 200`.
    pub data_len: Option<usize>,
}

impl NetworkConfig {
    pub fn new(topology: Topology, nu: usize, seed: u64) -> Self {
        Self {
            topology,
            nu,
            seed,
            gray_box: true,
            t_ini: 2 * nu + 1,
            t_f: 5,
            ranges: ParamRanges::default(),
            dt: 0.1,
            data_len: None,
        }
    }
}

/// A generated benchmark network: ground-truth plants for simulation, plus
/// the representation (model or data) each subsystem exposes to the solver.
#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    edges: Vec<(usize, usize)>,
    layout: NetworkLayout,
    params: Vec<SubsystemParams>,
    plants: Vec<StateSpaceRep>,
    data: Vec<Trajectory>,
    modes: Vec<RepMode>,
}

/// splitmix64 step used to derive independent per-subsystem seeds.
fn derived_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates a network: samples parameters, builds the plants, and records
/// one persistently exciting data trajectory per subsystem (inputs uniform
/// in `[-1, 1]`, re-drawn with a fresh derived seed up to five times if the
/// excitation rank test fails).
pub fn build_network(config: &NetworkConfig) -> Result<Network> {
    let edges = topology_edges(config.topology, config.nu)?;
    let layout = NetworkLayout::new(config.nu, &edges)?;
    let horizon = config.t_ini + config.t_f;
    let data_len = config.data_len.unwrap_or(config.nu * horizon + 200);
    let mut params = Vec::with_capacity(config.nu);
    let mut plants = Vec::with_capacity(config.nu);
    let mut data = Vec::with_capacity(config.nu);
    let mut modes = Vec::with_capacity(config.nu);
    for i in 0..config.nu {
        let p = sample_params(derived_seed(config.seed, 8 * i as u64), &config.ranges)?;
        let plant = subsystem_ss(&p, layout.sub_q(i) - 2, config.dt)?;
        let m = plant.partition().m();
        let mut recorded = None;
        for attempt in 0..5u64 {
            let seed = derived_seed(config.seed, 8 * i as u64 + 1 + attempt);
            let w = collect_data(&plant, data_len, seed, (-1.0, 1.0))?;
            if persistency_check(&w, horizon, m, plant.order(), linalg::RANK_REL_TOL)? {
                recorded = Some(w);
                break;
            }
        }
        let w = recorded.ok_or_else(|| {
            Error::NotPersistentlyExciting(format!(
                "subsystem {i} data failed the rank test after 5 draws"
            ))
        })?;
        // 1-based even positions keep the model; the rest expose data only.
        let mode = if config.gray_box && (i + 1) % 2 == 1 {
            RepMode::Hankel
        } else {
            RepMode::StateSpace
        };
        params.push(p);
        plants.push(plant);
        data.push(w);
        modes.push(mode);
    }
    Ok(Network {
        config: config.clone(),
        edges,
        layout,
        params,
        plants,
        data,
        modes,
    })
}

impl Network {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn nu(&self) -> usize {
        self.config.nu
    }

    pub fn t_ini(&self) -> usize {
        self.config.t_ini
    }

    pub fn t_f(&self) -> usize {
        self.config.t_f
    }

    pub fn horizon(&self) -> usize {
        self.config.t_ini + self.config.t_f
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn params(&self) -> &[SubsystemParams] {
        &self.params
    }

    pub fn plants(&self) -> &[StateSpaceRep] {
        &self.plants
    }

    pub fn modes(&self) -> &[RepMode] {
        &self.modes
    }

    pub fn recorded_data(&self) -> &[Trajectory] {
        &self.data
    }

    /// Same network with different representation modes (the recorded data
    /// and plants are unchanged, so results stay seed-reproducible).
    pub fn with_rep_modes(&self, modes: Vec<RepMode>) -> Result<Network> {
        if modes.len() != self.nu() {
            return Err(Error::DimensionMismatch(format!(
                "{} modes for {} subsystems",
                modes.len(),
                self.nu()
            )));
        }
        let mut out = self.clone();
        out.modes = modes;
        Ok(out)
    }

    /// Ambient dimension of the stacked window trajectory.
    pub fn ambient_dim(&self) -> usize {
        self.layout.q_total() * self.horizon()
    }

    /// Advances the interconnected plant one step: closes every coupling
    /// `u_(i<-j) = y_j`, returns the measured global sample and next states.
    pub fn plant_step(
        &self,
        states: &[DVector<f64>],
        own_inputs: &DVector<f64>,
    ) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
        if states.len() != self.nu() || own_inputs.len() != self.nu() {
            return Err(Error::DimensionMismatch(format!(
                "{} states / {} inputs for {} subsystems",
                states.len(),
                own_inputs.len(),
                self.nu()
            )));
        }
        let outputs: Vec<f64> = (0..self.nu())
            .map(|i| (self.plants[i].c() * &states[i])[0])
            .collect();
        let mut sample = DVector::zeros(self.layout.q_total());
        let mut next = Vec::with_capacity(self.nu());
        for i in 0..self.nu() {
            let q_i = self.layout.sub_q(i);
            let mut u = DVector::zeros(q_i - 1);
            u[0] = own_inputs[i];
            for c in self.layout.couplings().iter().filter(|c| c.to == i) {
                u[c.input_pos] = outputs[c.from];
            }
            let (w, x_next) = self.plants[i].step(&states[i], &u)?;
            for local in 0..q_i {
                sample[self.layout.global_index(i, local, 0)] = w[local];
            }
            next.push(x_next);
        }
        Ok((sample, next))
    }

    /// Simulates the interconnected plant from rest for `t_len` steps with
    /// seeded uniform exogenous inputs, yielding a trajectory that lies in
    /// the interconnected behavior by construction.
    pub fn simulate_coupled(
        &self,
        t_len: usize,
        seed: u64,
        input_range: (f64, f64),
    ) -> Result<Trajectory> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(input_range.0, input_range.1);
        let mut states = vec![DVector::zeros(2); self.nu()];
        let mut out = Trajectory::zeros(self.layout.q_total(), t_len)?;
        for t in 1..=t_len {
            let u = DVector::from_fn(self.nu(), |_, _| dist.sample(&mut rng));
            let (sample, next) = self.plant_step(&states, &u)?;
            out.sample_mut(t).copy_from_slice(sample.as_slice());
            states = next;
        }
        Ok(out)
    }
}

/// Window basis of one subsystem, honoring its representation mode. Split
/// out from [`subsystem_bases`] so callers can account for each agent's
/// local work separately.
pub fn subsystem_basis(net: &Network, sub: usize) -> Result<BasisRep> {
    if sub >= net.nu() {
        return Err(Error::RangeOutOfBounds(format!(
            "subsystem {sub} of {}",
            net.nu()
        )));
    }
    let horizon = net.horizon();
    match net.modes()[sub] {
        RepMode::StateSpace => ss_basis(&net.plants()[sub], horizon),
        RepMode::Hankel => {
            let rep = HankelRep::new(net.recorded_data()[sub].clone(), horizon)?;
            let m = net.plants()[sub].partition().m();
            hankel_basis(&rep, m, net.plants()[sub].order(), linalg::RANK_REL_TOL)
        }
    }
}

/// Builds the per-subsystem window bases according to each subsystem's
/// representation mode.
pub fn subsystem_bases(net: &Network) -> Result<Vec<BasisRep>> {
    (0..net.nu()).map(|i| subsystem_basis(net, i)).collect()
}

/// The two projector factors of the interconnected behavior: the product of
/// per-subsystem behavior projectors and the coupling projector.
pub fn network_projectors(net: &Network, bases: &[BasisRep]) -> Result<(Projector, Projector)> {
    if bases.len() != net.nu() {
        return Err(Error::DimensionMismatch(format!(
            "{} bases for {} subsystems",
            bases.len(),
            net.nu()
        )));
    }
    let horizon = net.horizon();
    let dim = net.ambient_dim();
    let parts = (0..net.nu())
        .map(|i| {
            Ok(ProductPart {
                projector: Projector::behavior(&bases[i]),
                indices: net.layout().block_indices(i, horizon),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c1 = Projector::product(parts, dim)?;
    let c2 = Projector::coupling(&net.layout().coupling_pairs(horizon), dim)?;
    Ok((c1, c2))
}

/// Orthonormal basis of the interconnected behavior `C1 ∩ C2`, assembled by
/// restricting the block-diagonal behavior basis to the null space of the
/// coupling constraints.
pub fn interconnected_basis(net: &Network, bases: &[BasisRep]) -> Result<BasisRep> {
    if bases.len() != net.nu() {
        return Err(Error::DimensionMismatch(format!(
            "{} bases for {} subsystems",
            bases.len(),
            net.nu()
        )));
    }
    let horizon = net.horizon();
    let layout = net.layout();
    let r_total: usize = bases.iter().map(|b| b.r()).sum();
    let mut col_offset = vec![0usize; net.nu()];
    for i in 1..net.nu() {
        col_offset[i] = col_offset[i - 1] + bases[i - 1].r();
    }
    // Coupling constraints expressed in the coefficient space of the
    // block-diagonal basis: one row per coupling and step, formed from the
    // two basis rows the constraint ties together.
    let n_rows = layout.couplings().len() * horizon;
    let mut m = DMatrix::zeros(n_rows, r_total);
    let mut row = 0;
    for step in 0..horizon {
        for c in layout.couplings() {
            let b_to = bases[c.to].basis();
            let b_from = bases[c.from].basis();
            let q_to = layout.sub_q(c.to);
            let q_from = layout.sub_q(c.from);
            m.view_mut((row, col_offset[c.to]), (1, bases[c.to].r()))
                .copy_from(&b_to.row(step * q_to + c.input_pos));
            let mut out_row = b_from.row(step * q_from + (q_from - 1)).into_owned();
            out_row.neg_mut();
            m.view_mut((row, col_offset[c.from]), (1, bases[c.from].r()))
                .copy_from(&out_row);
            row += 1;
        }
    }
    let null = linalg::null_space_basis(&m, linalg::RANK_REL_TOL);
    // Map coefficients back to the ambient space block by block; rows of
    // each block product scatter into the time-major global layout.
    let mut basis = DMatrix::zeros(net.ambient_dim(), null.ncols());
    for i in 0..net.nu() {
        let block = bases[i].basis() * null.rows(col_offset[i], bases[i].r());
        let q_i = layout.sub_q(i);
        for step in 0..horizon {
            for local in 0..q_i {
                let g = layout.global_index(i, local, step);
                basis.row_mut(g).copy_from(&block.row(step * q_i + local));
            }
        }
    }
    BasisRep::new(basis, horizon)
}
