//! Time integration of the two-phase model with an energy audit, and the
//! one-dimensional surrogate used to extract an effective diffusivity.
//!
//! Stepping is done in temperature form: with `Û = C·T` and `A = M·C⁻¹`,
//! implicit Euler reads `(C − dt·M)·T⁺ = C·T + dt·B·u`.

mod solver;
pub mod surrogate;

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phassembly::StateSpaceModel;
use crate::primal::Facet;
use crate::sparse::SparseMatrix;

pub use solver::pcg;
pub use surrogate::{analytic_1d, analytic_1d_with_bound, fit_diffusivity, ProbeHeight, Surrogate1d, SurrogateFit};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    ImplicitEuler,
    Trapezoidal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    #[default]
    Solid,
    Fluid,
}

/// A uniform temperature or one value per inner node [K].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Field {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Field::Uniform(v) => Ok(vec![*v; n]),
            Field::PerNode(v) if v.len() == n => Ok(v.clone()),
            Field::PerNode(v) => Err(Error::InvalidConfig(format!(
                "{what} has {} values, model has {n} inner nodes",
                v.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialTemperatures {
    pub solid: Field,
    pub fluid: Field,
}

impl InitialTemperatures {
    pub fn uniform(t: f64) -> Self {
        InitialTemperatures {
            solid: Field::Uniform(t),
            fluid: Field::Uniform(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletPoint {
    /// Switch-on time [s].
    pub t: f64,
    /// Solid temperature [K].
    pub solid: f64,
    /// Fluid temperature [K]; equal to the solid value when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSchedule {
    pub facet: Facet,
    pub schedule: Vec<DirichletPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxPoint {
    pub t: f64,
    /// Heat flux density into the domain [W/mm²].
    pub flux: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannSchedule {
    pub facet: Facet,
    pub schedule: Vec<FluxPoint>,
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_order() -> usize {
    200
}

/// Slab surrogate to fit after the run. Probe heights are measured from the
/// bottom of the domain, whose height is the slab length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub t_bottom: f64,
    pub t_top: f64,
    pub t_initial: f64,
    #[serde(default = "default_order")]
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// [s]
    pub dt: f64,
    /// [s]
    pub horizon: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_tolerance")]
    pub solver_tolerance: f64,
    pub initial: InitialTemperatures,
    #[serde(default)]
    pub dirichlet: Vec<DirichletSchedule>,
    #[serde(default)]
    pub neumann: Vec<NeumannSchedule>,
    /// Node ids to record.
    #[serde(default)]
    pub probes: Vec<String>,
    #[serde(default)]
    pub probe_phase: Phase,
    /// Keep a full temperature frame every this many steps (0 keeps none).
    #[serde(default)]
    pub frame_every: usize,
    /// Surrogate fit over the probe series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitRequest>,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, initial: f64) -> Self {
        SimConfig {
            dt,
            horizon,
            integrator: Integrator::ImplicitEuler,
            solver_tolerance: default_tolerance(),
            initial: InitialTemperatures::uniform(initial),
            dirichlet: Vec::new(),
            neumann: Vec::new(),
            probes: Vec::new(),
            probe_phase: Phase::Solid,
            frame_every: 0,
            fit: None,
        }
    }

    pub fn with_dirichlet(mut self, facet: Facet, points: &[(f64, f64)]) -> Self {
        self.dirichlet.push(DirichletSchedule {
            facet,
            schedule: points
                .iter()
                .map(|&(t, solid)| DirichletPoint { t, solid, fluid: None })
                .collect(),
        });
        self
    }

    pub fn with_neumann(mut self, facet: Facet, points: &[(f64, f64)]) -> Self {
        self.neumann.push(NeumannSchedule {
            facet,
            schedule: points.iter().map(|&(t, flux)| FluxPoint { t, flux }).collect(),
        });
        self
    }

    pub fn with_probes<S: AsRef<str>>(mut self, probes: &[S]) -> Self {
        self.probes = probes.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return bad(format!("horizon {} shorter than dt {}", self.horizon, self.dt));
        }
        if !(self.solver_tolerance > 0.0 && self.solver_tolerance < 1.0) {
            return bad(format!("solver tolerance {} outside (0, 1)", self.solver_tolerance));
        }
        for d in &self.dirichlet {
            check_times(d.schedule.iter().map(|p| p.t), d.facet)?;
            for p in &d.schedule {
                if !(p.solid.is_finite() && p.fluid.unwrap_or(p.solid).is_finite()) {
                    return bad(format!("non-finite Dirichlet value on {}", d.facet));
                }
            }
        }
        for n in &self.neumann {
            check_times(n.schedule.iter().map(|p| p.t), n.facet)?;
            if n.schedule.iter().any(|p| !p.flux.is_finite()) {
                return bad(format!("non-finite flux on {}", n.facet));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "simulation config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            e => e,
        })
    }
}

fn check_times(times: impl Iterator<Item = f64>, facet: Facet) -> Result<()> {
    let times: Vec<f64> = times.collect();
    if times.is_empty() {
        return Err(Error::InvalidConfig(format!("empty schedule on {facet}")));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!("schedule times on {facet} must increase")));
    }
    Ok(())
}

/// Piecewise-constant lookup: the last point switched on at or before `t`,
/// or the first point before the schedule starts.
fn lookup<P, T>(points: &[P], t: f64, time: impl Fn(&P) -> f64, value: impl Fn(&P) -> T) -> T {
    let idx = points.iter().rposition(|p| time(p) <= t).unwrap_or(0);
    value(&points[idx])
}

/// Boundary inputs resolved against a model's layout.
#[derive(Clone, Debug)]
pub struct InputSchedule {
    /// Per border node: index into the config's Dirichlet list.
    node_source: Vec<usize>,
    /// Per border edge: index into the config's Neumann list.
    edge_source: Vec<Option<usize>>,
    area_solid: Vec<f64>,
    area_fluid: Vec<f64>,
    dirichlet: Vec<DirichletSchedule>,
    neumann: Vec<NeumannSchedule>,
}

impl InputSchedule {
    pub fn new(model: &StateSpaceModel, cfg: &SimConfig) -> Result<Self> {
        let layout = &model.layout;
        let mut node_source = Vec::with_capacity(layout.border_nodes.len());
        for node in &layout.border_nodes {
            let src = cfg
                .dirichlet
                .iter()
                .position(|d| node.facets.contains(&d.facet))
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("Dirichlet node {} has no temperature schedule", node.id))
                })?;
            node_source.push(src);
        }
        let edge_source = layout
            .border_edges
            .iter()
            .map(|e| e.facet.and_then(|f| cfg.neumann.iter().position(|n| n.facet == f)))
            .collect();
        Ok(InputSchedule {
            node_source,
            edge_source,
            area_solid: layout.border_edges.iter().map(|e| e.area_solid).collect(),
            area_fluid: layout.border_edges.iter().map(|e| e.area_fluid).collect(),
            dirichlet: cfg.dirichlet.clone(),
            neumann: cfg.neumann.clone(),
        })
    }

    /// `u(t) = [Tˢ_b; Tᶠ_b; Φ̂ˢ_b; Φ̂ᶠ_b]`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let (nb, mb) = (self.node_source.len(), self.edge_source.len());
        let mut u = vec![0.0; 2 * nb + 2 * mb];
        for (k, &src) in self.node_source.iter().enumerate() {
            let (s, f) = lookup(&self.dirichlet[src].schedule, t, |p| p.t, |p| (p.solid, p.fluid.unwrap_or(p.solid)));
            u[k] = s;
            u[nb + k] = f;
        }
        for (e, src) in self.edge_source.iter().enumerate() {
            if let Some(src) = *src {
                let q = lookup(&self.neumann[src].schedule, t, |p| p.t, |p| p.flux);
                u[2 * nb + e] = q * self.area_solid[e];
                u[2 * nb + mb + e] = q * self.area_fluid[e];
            }
        }
        u
    }

    /// Every Dirichlet temperature any schedule can impose.
    pub fn dirichlet_values(&self) -> Vec<f64> {
        let mut used: Vec<usize> = self.node_source.clone();
        used.sort_unstable();
        used.dedup();
        used.iter()
            .flat_map(|&i| {
                self.dirichlet[i]
                    .schedule
                    .iter()
                    .flat_map(|p| [p.solid, p.fluid.unwrap_or(p.solid)])
            })
            .collect()
    }
}

/// Caches the step matrices for a fixed `dt` and method.
pub struct Stepper<'a> {
    model: &'a StateSpaceModel,
    method: Integrator,
    dt: f64,
    lhs: SparseMatrix<f64>,
    /// `C + dt/2·M` for the trapezoidal rule.
    explicit: Option<SparseMatrix<f64>>,
    tol: f64,
    max_iter: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a StateSpaceModel, dt: f64, method: Integrator, tol: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let c = SparseMatrix::from_diagonal(&model.capacity);
        let theta = match method {
            Integrator::ImplicitEuler => 1.0,
            Integrator::Trapezoidal => 0.5,
        };
        let m_scaled = model.conductance.map(|v| -theta * dt * v);
        let lhs = c.add(&m_scaled)?;
        let explicit = match method {
            Integrator::ImplicitEuler => None,
            Integrator::Trapezoidal => Some(c.add(&model.conductance.map(|v| 0.5 * dt * v))?),
        };
        Ok(Stepper {
            model,
            method,
            dt,
            lhs,
            explicit,
            tol,
            max_iter: 20 * model.state_dim() + 1000,
        })
    }

    /// Advances temperatures over one step with inputs `u0` at the start
    /// and `u1` at the end of the step.
    pub fn advance(&self, t: &[f64], u0: &[f64], u1: &[f64]) -> Result<Vec<f64>> {
        let model = self.model;
        let (mut rhs, bu) = match self.method {
            Integrator::ImplicitEuler => (model.energies(t), model.b.mul_vec(u1)),
            Integrator::Trapezoidal => {
                let avg: Vec<f64> = u0.iter().zip(u1).map(|(a, b)| 0.5 * (a + b)).collect();
                (self.explicit.as_ref().unwrap().mul_vec(t), model.b.mul_vec(&avg))
            }
        };
        for (r, b) in rhs.iter_mut().zip(bu) {
            *r += self.dt * b;
        }
        let mut next = t.to_vec();
        pcg(&self.lhs, &rhs, &mut next, self.tol, self.max_iter)?;
        Ok(next)
    }

    /// Energy delivered through the boundary over the step [J].
    pub fn boundary_energy(&self, t0: &[f64], t1: &[f64], u0: &[f64], u1: &[f64]) -> f64 {
        let model = self.model;
        match self.method {
            Integrator::ImplicitEuler => self.dt * model.boundary_power(t1, u1),
            Integrator::Trapezoidal => {
                let avg: Vec<f64> = u0.iter().zip(u1).map(|(a, b)| 0.5 * (a + b)).collect();
                0.5 * self.dt * (model.boundary_power(t0, &avg) + model.boundary_power(t1, &avg))
            }
        }
    }
}

/// One step in state (energy) coordinates with a constant input.
pub fn step(model: &StateSpaceModel, x: &[f64], u: &[f64], dt: f64, method: Integrator, tol: f64) -> Result<Vec<f64>> {
    let stepper = Stepper::new(model, dt, method, tol)?;
    let t = stepper.advance(&model.temperatures(x), u, u)?;
    Ok(model.energies(&t))
}

/// Steady state `A·x + B·u = 0`, returned as temperatures.
pub fn steady_state(model: &StateSpaceModel, u: &[f64], tol: f64) -> Result<Vec<f64>> {
    let k = model.conductance.neg();
    let rhs = model.b.mul_vec(u);
    let mut t = vec![0.0; model.state_dim()];
    pcg(&k, &rhs, &mut t, tol, 50 * model.state_dim() + 1000)?;
    Ok(t)
}

/// Temperatures of all layout nodes at one instant: inner nodes first,
/// then Dirichlet nodes [K].
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub solid: Vec<f64>,
    pub fluid: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimulationTrace {
    pub probes: Vec<String>,
    /// [s]
    pub time: Vec<f64>,
    /// One series per probe [K].
    pub probe_series: Vec<Vec<f64>>,
    /// Σ Ûˢ [J]
    pub energy_solid: Vec<f64>,
    /// Σ Ûᶠ [J]
    pub energy_fluid: Vec<f64>,
    /// Cumulative boundary energy [J].
    pub boundary_energy: Vec<f64>,
    /// Per-step `ΔE − ∫P dt` [J].
    pub audit_residual: Vec<f64>,
    pub frames: Vec<Frame>,
    /// Temperatures `[Tˢ_i; Tᶠ_i]` at the horizon.
    pub final_temperatures: Vec<f64>,
}

impl SimulationTrace {
    pub fn total_energy(&self, k: usize) -> f64 {
        self.energy_solid[k] + self.energy_fluid[k]
    }

    pub fn probe(&self, id: &str) -> Option<&[f64]> {
        self.probes.iter().position(|p| p == id).map(|k| self.probe_series[k].as_slice())
    }

    pub fn max_audit_residual(&self) -> f64 {
        self.audit_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend(self.probes.iter().cloned());
        header.extend(["E_solid", "E_fluid", "E_boundary_cum", "audit_residual"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.time.len() {
            let mut row = vec![self.time[k]];
            row.extend(self.probe_series.iter().map(|s| s[k]));
            row.extend([
                self.energy_solid[k],
                self.energy_fluid[k],
                self.boundary_energy[k],
                self.audit_residual[k],
            ]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

enum ProbeSource {
    Inner(usize),
    Border(usize),
}

fn resolve_probes(model: &StateSpaceModel, cfg: &SimConfig) -> Result<Vec<ProbeSource>> {
    let layout = &model.layout;
    cfg.probes
        .iter()
        .map(|id| {
            if let Some(k) = layout.inner_nodes.iter().position(|n| &n.id == id) {
                Ok(ProbeSource::Inner(k))
            } else if let Some(k) = layout.border_nodes.iter().position(|n| &n.id == id) {
                Ok(ProbeSource::Border(k))
            } else {
                Err(Error::InvalidConfig(format!("probe '{id}' is not a model node")))
            }
        })
        .collect()
}

/// Runs the configured simulation, calling `observe(t, temperatures, u)`
/// at every recorded instant including `t = 0`.
pub fn run_observed(
    model: &StateSpaceModel,
    cfg: &SimConfig,
    mut observe: impl FnMut(f64, &[f64], &[f64]),
) -> Result<SimulationTrace> {
    cfg.validate()?;
    let n = model.n_inner();
    let nb = model.n_border_nodes();
    let inputs = InputSchedule::new(model, cfg)?;
    let probes = resolve_probes(model, cfg)?;
    let mut temps = cfg.initial.solid.expand(n, "initial solid temperature")?;
    temps.extend(cfg.initial.fluid.expand(n, "initial fluid temperature")?);
    let stepper = Stepper::new(model, cfg.dt, cfg.integrator, cfg.solver_tolerance)?;

    let mut trace = SimulationTrace {
        probes: cfg.probes.clone(),
        probe_series: vec![Vec::new(); probes.len()],
        ..Default::default()
    };
    let offset = match cfg.probe_phase {
        Phase::Solid => 0,
        Phase::Fluid => 1,
    };
    let record = |trace: &mut SimulationTrace, t: f64, temps: &[f64], u: &[f64], cum: f64, audit: f64, k: usize| {
        trace.time.push(t);
        for (series, src) in trace.probe_series.iter_mut().zip(&probes) {
            series.push(match *src {
                ProbeSource::Inner(i) => temps[offset * n + i],
                ProbeSource::Border(i) => u[offset * nb + i],
            });
        }
        let e = model.energies(temps);
        trace.energy_solid.push(e[..n].iter().sum());
        trace.energy_fluid.push(e[n..].iter().sum());
        trace.boundary_energy.push(cum);
        trace.audit_residual.push(audit);
        if cfg.frame_every > 0 && k.is_multiple_of(cfg.frame_every) {
            let mut solid = temps[..n].to_vec();
            solid.extend(&u[..nb]);
            let mut fluid = temps[n..].to_vec();
            fluid.extend(&u[nb..2 * nb]);
            trace.frames.push(Frame { t, solid, fluid });
        }
    };

    let mut u_prev = inputs.at(0.0);
    let mut cum = 0.0;
    observe(0.0, &temps, &u_prev);
    record(&mut trace, 0.0, &temps, &u_prev, cum, 0.0, 0);
    let steps = cfg.steps();
    for k in 1..=steps {
        let t = k as f64 * cfg.dt;
        let u = inputs.at(t);
        let next = stepper.advance(&temps, &u_prev, &u)?;
        let delta: f64 = model.energies(&next).iter().sum::<f64>() - model.energies(&temps).iter().sum::<f64>();
        let delivered = stepper.boundary_energy(&temps, &next, &u_prev, &u);
        cum += delivered;
        temps = next;
        observe(t, &temps, &u);
        record(&mut trace, t, &temps, &u, cum, delta - delivered, k);
        u_prev = u;
    }
    trace.final_temperatures = temps;
    Ok(trace)
}

pub fn run(model: &StateSpaceModel, cfg: &SimConfig) -> Result<SimulationTrace> {
    run_observed(model, cfg, |_, _, _| {})
}

/// Fits the surrogate requested in `cfg` to the probe series of `trace`.
pub fn fit_trace(model: &StateSpaceModel, cfg: &SimConfig, trace: &SimulationTrace) -> Result<Option<SurrogateFit>> {
    let Some(req) = &cfg.fit else { return Ok(None) };
    let domain = model
        .layout
        .domain
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("model has no domain for the surrogate fit".into()))?;
    let nodes = model.layout.inner_nodes.iter().chain(&model.layout.border_nodes);
    let mut probes = Vec::with_capacity(cfg.probes.len());
    for id in &cfg.probes {
        let node = nodes
            .clone()
            .find(|n| &n.id == id)
            .ok_or_else(|| Error::InvalidConfig(format!("probe '{id}' is not a model node")))?;
        probes.push(ProbeHeight {
            id: id.clone(),
            z: node.position[2] - domain.min[2],
        });
    }
    let slab = Surrogate1d {
        length: domain.max[2] - domain.min[2],
        t_bottom: req.t_bottom,
        t_top: req.t_top,
        t_initial: req.t_initial,
        order: req.order,
    };
    fit_diffusivity(trace, &probes, &slab).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phassembly::{assemble_interconnection, close_state_space, ConstitutiveClosure};
    use crate::primal::IncidenceBlocks;

    fn single_node(cs: f64, cf: f64, h: f64) -> StateSpaceModel {
        let blocks = IncidenceBlocks {
            d1_ii: SparseMatrix::zeros(0, 1),
            d1_ib: SparseMatrix::zeros(0, 0),
            d1_bi: SparseMatrix::zeros(0, 1),
            inner_nodes: vec![0],
            border_nodes: vec![],
            inner_edges: vec![],
            border_edges: vec![],
        };
        let ic = assemble_interconnection(&blocks).unwrap();
        let cc = ConstitutiveClosure {
            cap_s: vec![cs],
            cap_f: vec![cf],
            cond_s: vec![],
            cond_f: vec![],
            h: vec![h],
        };
        close_state_space(&ic, &cc).unwrap()
    }

    /// Inner node between two Dirichlet nodes, solid conduction only.
    fn chain() -> StateSpaceModel {
        let blocks = IncidenceBlocks {
            d1_ii: SparseMatrix::from_triplets(2, 1, [(0, 0, 1), (1, 0, -1)]),
            d1_ib: SparseMatrix::from_triplets(2, 2, [(0, 0, -1), (1, 1, 1)]),
            d1_bi: SparseMatrix::zeros(0, 1),
            inner_nodes: vec![0],
            border_nodes: vec![1, 2],
            inner_edges: vec![0, 1],
            border_edges: vec![],
        };
        let ic = assemble_interconnection(&blocks).unwrap();
        let cc = ConstitutiveClosure {
            cap_s: vec![0.1, 0.0, 0.0],
            cap_f: vec![0.001, 0.0, 0.0],
            cond_s: vec![0.02, 0.02],
            cond_f: vec![1e-5, 1e-5],
            h: vec![1e-3, 0.0, 0.0],
        };
        let mut m = close_state_space(&ic, &cc).unwrap();
        m.layout.border_nodes[0].facets = vec![Facet::ZMin];
        m.layout.border_nodes[1].facets = vec![Facet::ZMax];
        m
    }

    #[test]
    fn zero_matrix_step_is_explicit_update() {
        let model = single_node(2.0, 3.0, 0.0);
        let x = step(&model, &[600.0, 900.0], &[], 0.5, Integrator::ImplicitEuler, 1e-14).unwrap();
        assert!((x[0] - 600.0).abs() < 1e-9 && (x[1] - 900.0).abs() < 1e-9);
    }

    #[test]
    fn relaxation_matches_exponential() {
        let (cs, cf, h) = (0.05, 0.002, 1e-3);
        let model = single_node(cs, cf, h);
        let rate = h * (1.0 / cs + 1.0 / cf);
        let tau = 1.0 / rate;
        let mut cfg = SimConfig::new(tau / 100.0, tau, 300.0);
        cfg.integrator = Integrator::Trapezoidal;
        cfg.initial.solid = Field::Uniform(310.0);
        let trace = run(&model, &cfg).unwrap();
        let t = &trace.final_temperatures;
        let mean = (cs * 310.0 + cf * 300.0) / (cs + cf);
        let diff0 = 10.0;
        let expected = diff0 * (-1.0f64).exp();
        assert!(((t[0] - t[1]) - expected).abs() < 1e-4 * expected);
        assert!((cs * t[0] + cf * t[1] - (cs + cf) * mean).abs() < 1e-10);
        assert!(trace.max_audit_residual() < 1e-10);
    }

    #[test]
    fn chain_reaches_mean_of_ends() {
        let model = chain();
        let cfg = SimConfig::new(1.0, 200.0, 300.0)
            .with_dirichlet(Facet::ZMin, &[(0.0, 300.0)])
            .with_dirichlet(Facet::ZMax, &[(0.0, 400.0)])
            .with_probes(&["n0", "n2"]);
        let trace = run(&model, &cfg).unwrap();
        assert!((trace.final_temperatures[0] - 350.0).abs() < 1e-6);
        assert_eq!(trace.probe("n2").unwrap()[0], 400.0);
        let ss = steady_state(&model, &InputSchedule::new(&model, &cfg).unwrap().at(0.0), 1e-14).unwrap();
        assert!((ss[0] - 350.0).abs() < 1e-9 && (ss[1] - 350.0).abs() < 1e-9);
        // Energy enters until the steady state is reached.
        assert!(trace.boundary_energy.last().unwrap() > &0.0);
        let rel = trace.max_audit_residual() / trace.total_energy(0);
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn constant_run_stays_constant() {
        let model = chain();
        let cfg = SimConfig::new(0.5, 5.0, 320.0)
            .with_dirichlet(Facet::ZMin, &[(0.0, 320.0)])
            .with_dirichlet(Facet::ZMax, &[(0.0, 320.0)])
            .with_probes(&["n0"]);
        let trace = run(&model, &cfg).unwrap();
        assert!(trace.probe("n0").unwrap().iter().all(|&t| (t - 320.0).abs() < 1e-9));
    }

    #[test]
    fn config_errors() {
        let model = chain();
        let cfg = SimConfig::new(1.0, 2.0, 300.0).with_dirichlet(Facet::ZMin, &[(0.0, 300.0)]);
        assert!(matches!(run(&model, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = SimConfig::new(0.0, 2.0, 300.0);
        assert!(cfg.validate().is_err());
        let cfg = SimConfig::new(1.0, 0.5, 300.0);
        assert!(cfg.validate().is_err());
        let cfg = SimConfig::new(1.0, 2.0, 300.0)
            .with_dirichlet(Facet::ZMin, &[(0.0, 300.0)])
            .with_dirichlet(Facet::ZMax, &[(0.0, 300.0)])
            .with_probes(&["nope"]);
        assert!(matches!(run(&model, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn schedule_lookup_is_piecewise_constant() {
        let pts = [(0.0, 1.0), (2.0, 5.0)];
        let f = |t| lookup(&pts, t, |p| p.0, |p| p.1);
        assert_eq!((f(-1.0), f(0.0), f(1.99), f(2.0), f(9.0)), (1.0, 1.0, 1.0, 5.0, 5.0));
    }

    #[test]
    fn config_json_shapes() {
        let cfg = SimConfig::from_json_str(
            r#"{"dt": 0.1, "horizon": 1, "integrator": "trapezoidal",
                "initial": {"solid": 300, "fluid": [300, 301]},
                "dirichlet": [{"facet": "z_max", "schedule": [{"t": 0, "solid": 400, "fluid": 390}]}],
                "neumann": [{"facet": "x_min", "schedule": [{"t": 0, "flux": 0.0}]}],
                "probes": ["n1"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.integrator, Integrator::Trapezoidal);
        assert_eq!(cfg.initial.fluid, Field::PerNode(vec![300.0, 301.0]));
        assert_eq!(cfg.steps(), 10);
        assert!(SimConfig::from_json_str(r#"{"dt": 0.1}"#).is_err());
    }

    #[test]
    fn csv_layout() {
        let model = chain();
        let cfg = SimConfig::new(1.0, 2.0, 300.0)
            .with_dirichlet(Facet::ZMin, &[(0.0, 300.0)])
            .with_dirichlet(Facet::ZMax, &[(0.0, 400.0)])
            .with_probes(&["n0"]);
        let csv = run(&model, &cfg).unwrap().to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,n0,E_solid,E_fluid,E_boundary_cum,audit_residual");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0,3.0000000000000000e2,"));
    }
}
