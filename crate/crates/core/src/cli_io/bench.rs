//! Named presets and the benchmark drivers that compare them against the
//! closed-form references or check their qualitative signatures.

use crate::analytic::{crack_diffusion, crack_diffusion_td, sneddon_opening, Consolidation, SeriesOptions};
use crate::discretization::Edge;
use crate::error::{Error, Result};
use crate::flow::FlowMaterial;
use crate::solid::{Kinematics, PlaneMode};
use crate::solvers::{AdrOptions, Simulation, StepRecord};

use super::config::{
    CouplingSection, CrackSegment, DisplacementBc, GridSection, Injection, LoadingSection, OutputSection, PressureBc,
    Scenario, ScenarioConfig, SolidSection, TimeSection, Traction,
};
use super::output::ComparisonRow;
use super::run::ConsolidationRun;

pub const BENCH_NAMES: [&str; 4] = ["consolidation", "crack-diffusion", "sneddon", "fluid-driven"];

/// One pass/fail verdict inside a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub name: String,
    pub rows: Vec<ComparisonRow>,
    pub checks: Vec<Check>,
    /// Time series of the main run, for benchmarks without an oracle.
    pub records: Vec<StepRecord>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { label: label.into(), passed, detail: detail.into() });
    }
}

fn grid(extent_x: f64, extent_y: f64, spacing: f64) -> GridSection {
    GridSection {
        extent_x,
        extent_y,
        spacing,
        m_ratio: 3.0,
        thickness: 1.0,
        partial_boundary_volumes: false,
        influence: crate::discretization::Influence::Gaussian,
    }
}

fn time(dt: f64, theta: f64, steps: usize) -> TimeSection {
    TimeSection { dt, theta, steps, flow_substeps: 1, fixed_stress: false, extrapolate: true }
}

fn edge_pressure(edge: Edge, value: f64) -> PressureBc {
    PressureBc { edge: Some(edge), at: None, value }
}

fn edge_fixed(edge: Edge, x: Option<f64>, y: Option<f64>) -> DisplacementBc {
    DisplacementBc { edge: Some(edge), at: None, x, y }
}

const EDGES: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

pub const CONSOLIDATION_LOAD: f64 = 1e4;
pub const CONSOLIDATION_HEIGHT: f64 = 10.0;

/// Drained, loaded top; fixed base; rollers on the sides.
pub fn consolidation_preset() -> ScenarioConfig {
    ScenarioConfig {
        scenario: Scenario::Consolidation,
        grid: grid(2.0, CONSOLIDATION_HEIGHT, 0.05),
        solid: SolidSection {
            youngs_modulus: 1e8,
            poisson_ratio: 0.0,
            density: 2000.0,
            fracture_energy: 1.0,
            mode: PlaneMode::PlaneStrain,
            kinematics: Kinematics::Linearized,
        },
        flow: FlowMaterial {
            biot_alpha: 0.5,
            porosity: 0.2,
            permeability: 1e-12,
            viscosity: 1e-3,
            fluid_bulk: 2.2e9,
            solid_bulk: None,
            storage: Some(1.0 / 6.06e9),
            fluid_density: 1000.0,
        },
        coupling: CouplingSection::default(),
        time: time(1.0, 1.0, 100),
        adr: AdrOptions::default(),
        loading: None,
        output: OutputSection { every: 1, snapshot_every: 0, monitor: Some([1.0, 0.0]) },
        cracks: vec![],
        injections: vec![],
        pressure_bcs: vec![edge_pressure(Edge::Top, 0.0)],
        displacement_bcs: vec![
            edge_fixed(Edge::Bottom, Some(0.0), Some(0.0)),
            edge_fixed(Edge::Left, Some(0.0), None),
            edge_fixed(Edge::Right, Some(0.0), None),
        ],
        tractions: vec![Traction { edge: Edge::Top, value: [0.0, -CONSOLIDATION_LOAD] }],
    }
}

pub const DIFFUSION_LENGTH: f64 = 0.1;
pub const DIFFUSION_PRESSURE: f64 = 9.5e6;
pub const DIFFUSION_APERTURE: f64 = 3e-5;

/// Square sample split by a crack along its mid-height, pressurized
/// suddenly at the left end; the solid stays frozen.
pub fn crack_diffusion_preset(spacing: f64) -> ScenarioConfig {
    let l = DIFFUSION_LENGTH;
    ScenarioConfig {
        scenario: Scenario::CrackDiffusion,
        grid: grid(l, l, spacing),
        solid: SolidSection {
            youngs_modulus: 1e10,
            poisson_ratio: 0.2,
            density: 2500.0,
            fracture_energy: 100.0,
            mode: PlaneMode::PlaneStrain,
            kinematics: Kinematics::Geometric,
        },
        flow: FlowMaterial {
            biot_alpha: 1.0,
            porosity: 2e-5,
            permeability: 0.0,
            viscosity: 1e-3,
            fluid_bulk: 2.2e9,
            solid_bulk: None,
            storage: None,
            fluid_density: 1000.0,
        },
        coupling: CouplingSection { fixed_aperture: Some(DIFFUSION_APERTURE), ..CouplingSection::default() },
        time: time(2e-8, 0.5, 1515),
        adr: AdrOptions::default(),
        loading: None,
        output: OutputSection { every: 1, snapshot_every: 0, monitor: Some([0.0, l / 2.0]) },
        cracks: vec![CrackSegment { start: [0.0, l / 2.0], end: [l, l / 2.0] }],
        injections: vec![],
        pressure_bcs: vec![edge_pressure(Edge::Left, DIFFUSION_PRESSURE)],
        displacement_bcs: vec![],
        tractions: vec![],
    }
}

pub const SNEDDON_HALF_LENGTH: f64 = 0.05;
pub const SNEDDON_FINAL_PRESSURE: f64 = 60.5e6;
pub const SNEDDON_RAMP_STEPS: usize = 2200;
pub const SNEDDON_REFERENCE_INITIATION: f64 = 59.235e6;

/// Clamped unit plate with a short centred crack whose faces carry a
/// pressure ramp.
pub fn pressure_driven_preset(spacing: f64) -> ScenarioConfig {
    let lc = SNEDDON_HALF_LENGTH;
    ScenarioConfig {
        scenario: Scenario::PressureDriven,
        grid: grid(1.0, 1.0, spacing),
        solid: SolidSection {
            youngs_modulus: 210e9,
            poisson_ratio: 0.3,
            density: 1000.0,
            fracture_energy: 2700.0,
            mode: PlaneMode::PlaneStrain,
            kinematics: Kinematics::Geometric,
        },
        flow: FlowMaterial {
            biot_alpha: 1.0,
            porosity: 0.002,
            permeability: 1e-15,
            viscosity: 1e-3,
            fluid_bulk: 1e8,
            solid_bulk: None,
            storage: None,
            fluid_density: 1000.0,
        },
        coupling: CouplingSection::default(),
        time: time(1.0, 1.0, SNEDDON_RAMP_STEPS),
        adr: AdrOptions::default(),
        loading: Some(LoadingSection { final_pressure: SNEDDON_FINAL_PRESSURE, ramp_steps: SNEDDON_RAMP_STEPS }),
        output: OutputSection { every: 1, snapshot_every: 0, monitor: Some([0.5, 0.5]) },
        cracks: vec![CrackSegment { start: [0.5 - lc, 0.5], end: [0.5 + lc, 0.5] }],
        injections: vec![],
        pressure_bcs: vec![],
        displacement_bcs: EDGES.iter().map(|&e| edge_fixed(e, Some(0.0), Some(0.0))).collect(),
        tractions: vec![],
    }
}

pub const FLUID_RATES: [f64; 4] = [1e-3, 2e-3, 4e-3, 6e-3];

/// Injection at the centre of a horizontal crack in a unit square with
/// drained edges. The edges are otherwise free; two corner pins remove
/// the rigid-body modes.
pub fn fluid_driven_preset(spacing: f64, rate: f64) -> ScenarioConfig {
    ScenarioConfig {
        scenario: Scenario::FluidDriven,
        grid: grid(1.0, 1.0, spacing),
        solid: SolidSection {
            youngs_modulus: 1e8,
            poisson_ratio: 0.2,
            density: 1000.0,
            fracture_energy: 100.0,
            mode: PlaneMode::PlaneStrain,
            kinematics: Kinematics::Geometric,
        },
        flow: FlowMaterial {
            biot_alpha: 1.0,
            porosity: 0.4,
            permeability: 1e-12,
            viscosity: 1e-3,
            fluid_bulk: 1e8,
            solid_bulk: None,
            storage: None,
            fluid_density: 1000.0,
        },
        coupling: CouplingSection::default(),
        time: TimeSection { fixed_stress: true, ..time(1e-3, 1.0, 400) },
        adr: AdrOptions::default(),
        loading: None,
        output: OutputSection::default(),
        cracks: vec![CrackSegment { start: [0.375, 0.5], end: [0.625, 0.5] }],
        injections: vec![Injection { at: [0.5, 0.5], rate }],
        pressure_bcs: EDGES.iter().map(|&e| edge_pressure(e, 0.0)).collect(),
        displacement_bcs: vec![
            DisplacementBc { edge: None, at: Some([0.0, 0.0]), x: Some(0.0), y: Some(0.0) },
            DisplacementBc { edge: None, at: Some([1.0, 0.0]), x: None, y: Some(0.0) },
        ],
        tractions: vec![],
    }
}

/// Preset by benchmark or scenario name, at its default resolution.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "consolidation" => Ok(consolidation_preset()),
        "crack-diffusion" => Ok(crack_diffusion_preset(0.005)),
        "sneddon" | "pressure-driven" => Ok(pressure_driven_preset(0.005)),
        "fluid-driven" => Ok(fluid_driven_preset(0.025, FLUID_RATES[0])),
        other => Err(Error::Config(format!("unknown preset {other:?}; known: {}", BENCH_NAMES.join(", ")))),
    }
}

pub fn run_benchmark(name: &str) -> Result<BenchReport> {
    match name {
        "consolidation" => consolidation_bench(),
        "crack-diffusion" => crack_diffusion_bench(),
        "sneddon" | "pressure-driven" => sneddon_bench(),
        "fluid-driven" => fluid_driven_bench(),
        other => Err(Error::Config(format!("unknown benchmark {other:?}; known: {}", BENCH_NAMES.join(", ")))),
    }
}

fn relative_l2(pairs: &[(f64, f64)]) -> f64 {
    let err: f64 = pairs.iter().map(|(n, a)| (n - a) * (n - a)).sum();
    let norm: f64 = pairs.iter().map(|(_, a)| a * a).sum();
    (err / norm).sqrt()
}

pub const CONSOLIDATION_TIMES: [f64; 5] = [20.0, 40.0, 60.0, 80.0, 100.0];
pub const CONSOLIDATION_TOLERANCE: f64 = 0.05;

/// Pressure and settlement along the central column against the series
/// solution, normalized by the undrained pressure and the final settlement.
pub fn consolidation_bench() -> Result<BenchReport> {
    let cfg = consolidation_preset();
    let mut run = ConsolidationRun::new(&cfg)?;
    let oracle = Consolidation {
        length: CONSOLIDATION_HEIGHT,
        load: CONSOLIDATION_LOAD,
        compliance: 1.0 / cfg.solid.youngs_modulus,
        alpha: cfg.flow.biot_alpha,
        storage: cfg.flow.storage(),
        permeability: cfg.flow.permeability,
        viscosity: cfg.flow.viscosity,
    };
    let opts = SeriesOptions::default();
    let p_scale = oracle.loading_efficiency() * CONSOLIDATION_LOAD;
    let u_scale = oracle.displacement(0.0, f64::INFINITY, opts);
    let mut report = BenchReport { name: "consolidation".into(), ..Default::default() };
    let g = run.grid.clone();
    let column: Vec<usize> = (0..=g.ny).map(|iy| g.id(g.nx / 2, iy)).collect();
    for &t_target in &CONSOLIDATION_TIMES {
        while run.state.t < t_target - 1e-9 * t_target {
            run.advance()?;
        }
        let t = run.state.t;
        let (mut pp, mut uu) = (Vec::new(), Vec::new());
        for &a in &column {
            let x = CONSOLIDATION_HEIGHT - g.positions[a].y;
            let p = (run.state.p[a] / p_scale, oracle.pressure(x, t, opts) / p_scale);
            let u = (-run.state.u[2 * a + 1] / u_scale, oracle.displacement(x, t, opts) / u_scale);
            for (series, (num, ana)) in [("pressure", p), ("settlement", u)] {
                report.rows.push(ComparisonRow {
                    series: format!("{series} t={t}"),
                    location: x / CONSOLIDATION_HEIGHT,
                    numeric: num,
                    analytic: ana,
                    rel_error: (num - ana).abs(),
                });
            }
            pp.push(p);
            uu.push(u);
        }
        let (ep, eu) = (relative_l2(&pp), relative_l2(&uu));
        report.check(format!("pressure t={t}"), ep <= CONSOLIDATION_TOLERANCE, format!("relative L2 {ep:.4}"));
        report.check(format!("settlement t={t}"), eu <= CONSOLIDATION_TOLERANCE, format!("relative L2 {eu:.4}"));
    }
    Ok(report)
}

pub const DIFFUSION_TIMES: [f64; 4] = [0.1, 0.2, 0.3, 0.5];
pub const DIFFUSION_TOLERANCE: f64 = 0.05;

/// Worst pointwise relative difference along both crack faces at each
/// dimensionless time, with the rows of the comparison.
pub fn crack_diffusion_errors(spacing: f64) -> Result<(Vec<f64>, Vec<ComparisonRow>)> {
    let cfg = crack_diffusion_preset(spacing);
    let mut sim = Simulation::new(cfg.hf_setup()?)?;
    let (l, mu) = (DIFFUSION_LENGTH, cfg.flow.viscosity);
    let td_rate = crack_diffusion_td(1.0, cfg.flow.fluid_bulk, DIFFUSION_APERTURE, mu, l);
    let g = sim.setup.grid.clone();
    let upper = ((l / 2.0) / spacing).round() as usize;
    let opts = SeriesOptions::default();
    let mut worst = Vec::new();
    let mut rows = Vec::new();
    for &td in &DIFFUSION_TIMES {
        let target = (td / td_rate / cfg.time.dt).round() as usize;
        while sim.step < target {
            sim.advance()?;
        }
        let td_actual = crack_diffusion_td(sim.time, cfg.flow.fluid_bulk, DIFFUSION_APERTURE, mu, l);
        let mut w: f64 = 0.0;
        for row in [upper, upper - 1] {
            for ix in 0..=g.nx {
                let a = g.id(ix, row);
                let zeta = (l - g.positions[a].x) / l;
                let ana = crack_diffusion(zeta, td_actual, opts);
                let num = sim.p[a] / DIFFUSION_PRESSURE;
                let rel = (num - ana).abs() / ana.abs();
                w = w.max(rel);
                rows.push(ComparisonRow { series: format!("dx={spacing} Td={td} row={row}"), location: zeta, numeric: num, analytic: ana, rel_error: rel });
            }
        }
        worst.push(w);
    }
    Ok((worst, rows))
}

pub fn crack_diffusion_bench() -> Result<BenchReport> {
    let (fine, rows) = crack_diffusion_errors(0.005)?;
    let (coarse, coarse_rows) = crack_diffusion_errors(0.01)?;
    let mut report = BenchReport { name: "crack-diffusion".into(), rows, ..Default::default() };
    report.rows.extend(coarse_rows);
    for (k, &td) in DIFFUSION_TIMES.iter().enumerate() {
        report.check(
            format!("Td={td} fine within tolerance"),
            fine[k] <= DIFFUSION_TOLERANCE,
            format!("max relative difference {:.4}", fine[k]),
        );
        report.check(
            format!("Td={td} refinement"),
            fine[k] < coarse[k],
            format!("fine {:.4} vs coarse {:.4}", fine[k], coarse[k]),
        );
    }
    Ok(report)
}

pub const SNEDDON_PROBE_PRESSURE: f64 = 1e6;
pub const SNEDDON_TOLERANCE: f64 = 0.10;
pub const INITIATION_TOLERANCE: f64 = 0.05;

/// Relative L2 error of the half-opening over nodes strictly inside the
/// crack, under a fixed face pressure.
pub fn sneddon_profile(spacing: f64) -> Result<(f64, Vec<ComparisonRow>)> {
    let mut cfg = pressure_driven_preset(spacing);
    cfg.loading = Some(LoadingSection { final_pressure: SNEDDON_PROBE_PRESSURE, ramp_steps: 1 });
    let mut sim = Simulation::new(cfg.hf_setup()?)?;
    let rec = sim.advance()?;
    if rec.new_breaks > 0 {
        return Err(Error::Config("probe pressure already breaks bonds".into()));
    }
    let g = &sim.setup.grid;
    let lc = SNEDDON_HALF_LENGTH;
    let iy = (0.5 / spacing).round() as usize;
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for ix in 0..=g.nx {
        let x = g.positions[g.id(ix, iy)].x - 0.5;
        if x.abs() >= lc * (1.0 - 1e-9) {
            continue;
        }
        let half = 0.5 * (sim.u[g.id(ix, iy)].y - sim.u[g.id(ix, iy - 1)].y);
        let ana = sneddon_opening(x, SNEDDON_PROBE_PRESSURE, lc, cfg.solid.youngs_modulus, cfg.solid.poisson_ratio);
        pairs.push((half, ana));
        rows.push(ComparisonRow { series: format!("dx={spacing}"), location: x, numeric: half, analytic: ana, rel_error: (half - ana).abs() / ana });
    }
    Ok((relative_l2(&pairs), rows))
}

/// Ramp level at the first step that breaks a bond, if any.
pub fn sneddon_initiation(spacing: f64) -> Result<Option<f64>> {
    let cfg = pressure_driven_preset(spacing);
    let mut sim = Simulation::new(cfg.hf_setup()?)?;
    for _ in 0..SNEDDON_RAMP_STEPS {
        let rec = sim.advance()?;
        if rec.new_breaks > 0 {
            return Ok(Some(SNEDDON_FINAL_PRESSURE * rec.step as f64 / SNEDDON_RAMP_STEPS as f64));
        }
    }
    Ok(None)
}

pub fn sneddon_bench() -> Result<BenchReport> {
    let (fine, rows) = sneddon_profile(0.005)?;
    let (coarse, coarse_rows) = sneddon_profile(0.01)?;
    let mut report = BenchReport { name: "sneddon".into(), rows, ..Default::default() };
    report.rows.extend(coarse_rows);
    report.check("fine profile", fine <= SNEDDON_TOLERANCE, format!("relative L2 {fine:.4}"));
    report.check("refinement", fine < coarse, format!("fine {fine:.4} vs coarse {coarse:.4}"));
    let init = sneddon_initiation(0.01)?;
    let (ok, detail) = match init {
        Some(p) => {
            let rel = (p - SNEDDON_REFERENCE_INITIATION).abs() / SNEDDON_REFERENCE_INITIATION;
            (rel <= INITIATION_TOLERANCE, format!("{:.3} MPa, {:.1}% from {:.3} MPa", p / 1e6, 100.0 * rel, SNEDDON_REFERENCE_INITIATION / 1e6))
        }
        None => (false, "no bond broke during the ramp".to_string()),
    };
    report.check("initiation pressure", ok, detail);
    Ok(report)
}

/// Index of the first record with new breakage.
pub fn onset_step(records: &[StepRecord]) -> Option<usize> {
    records.iter().position(|r| r.new_breaks > 0)
}

/// Peak pressure before onset and whether it is followed, within ten
/// steps, by a fall to half of it. Returns `(peak index, passed)`.
pub fn spike_then_drop(pressure: &[f64], onset: usize) -> (usize, bool) {
    let head = &pressure[..onset.min(pressure.len())];
    let Some((k, &peak)) = head.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return (0, false);
    };
    let window = &pressure[k + 1..(k + 11).min(pressure.len())];
    (k, peak > 0.0 && window.iter().any(|&p| p <= 0.5 * peak))
}

/// Indices of local maxima that the trace later falls below by at least
/// `drop` (relative) before exceeding them again.
pub fn prominent_maxima(pressure: &[f64], drop: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for k in 1..pressure.len().saturating_sub(1) {
        let p = pressure[k];
        if !(p > pressure[k - 1] && p >= pressure[k + 1]) {
            continue;
        }
        for &q in &pressure[k + 1..] {
            if q > p {
                break;
            }
            if q <= (1.0 - drop) * p {
                out.push(k);
                break;
            }
        }
    }
    out
}

/// Longest run of equal values strictly between two increases.
pub fn longest_inner_plateau(length: &[f64]) -> usize {
    let rises: Vec<usize> = (1..length.len()).filter(|&k| length[k] > length[k - 1]).collect();
    rises.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
}

pub const OSCILLATION_DROP: f64 = 0.01;

/// Qualitative checks on the injection runs. The first rate runs the
/// preset's full step count; the others stop at their first break.
pub fn fluid_driven_bench() -> Result<BenchReport> {
    let mut report = BenchReport { name: "fluid-driven".into(), ..Default::default() };
    let cfg = fluid_driven_preset(0.025, FLUID_RATES[0]);
    let mut sim = Simulation::new(cfg.hf_setup()?)?;
    let records = sim.run(cfg.time.steps, |_, _| Ok(()))?;
    let p: Vec<f64> = records.iter().map(|r| r.monitor_pressure).collect();
    let len: Vec<f64> = records.iter().map(|r| r.crack_length).collect();
    let onset = onset_step(&records);
    let (peak, spiked) = spike_then_drop(&p, onset.unwrap_or(p.len()));
    report.check("spike then drop", spiked && onset.is_some(), format!("peak {:.4e} Pa at step {}", p.get(peak).copied().unwrap_or(0.0), peak + 1));
    let maxima: Vec<usize> = match onset {
        Some(o) => prominent_maxima(&p, OSCILLATION_DROP).into_iter().filter(|&k| k > o).collect(),
        None => vec![],
    };
    report.check("oscillation after onset", maxima.len() >= 3, format!("{} local maxima", maxima.len()));
    let monotone = len.windows(2).all(|w| w[1] >= w[0]);
    let plateau = longest_inner_plateau(&len);
    report.check(
        "stepwise growth",
        monotone && plateau >= 5,
        format!("non-decreasing: {monotone}, longest plateau {plateau} steps"),
    );
    let mut init = vec![onset.map(|o| p[o])];
    report.records = records;
    for &q in &FLUID_RATES[1..] {
        let cfg = fluid_driven_preset(0.025, q);
        let mut sim = Simulation::new(cfg.hf_setup()?)?;
        let mut found = None;
        for _ in 0..cfg.time.steps {
            let rec = sim.advance()?;
            if rec.new_breaks > 0 {
                found = Some(rec.monitor_pressure);
                break;
            }
        }
        init.push(found);
    }
    let increasing = init.iter().all(Option::is_some) && init.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = init.iter().map(|v| v.map_or("none".into(), |p| format!("{p:.4e}"))).collect();
    report.check("initiation rises with rate", increasing, format!("[{}] Pa", shown.join(", ")));
    Ok(report)
}
