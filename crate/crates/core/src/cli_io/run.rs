//! Runs a configured scenario and writes its outputs.

use std::path::{Path, PathBuf};

use crate::coupling::assemble_qpd;
use crate::discretization::{build_bonds, build_fluid_mesh, build_grid, NodeGrid, Vec2};
use crate::error::{Error, Result};
use crate::flow::{assemble, ElementProps};
use crate::solid::{Kinematics, SolidModel};
use crate::solvers::{assemble_kpd, ConsolidationScheme, ConsolidationState, Simulation, StepRecord};

use super::config::{Scenario, ScenarioConfig};
use super::output::{write_timeseries, Snapshot};

/// Linear consolidation of an uncracked body, solved monolithically.
#[derive(Debug)]
pub struct ConsolidationRun {
    pub grid: NodeGrid,
    scheme: ConsolidationScheme,
    force: Vec<f64>,
    source: Vec<f64>,
    pub state: ConsolidationState,
    pub monitor: usize,
    pub step: usize,
}

impl ConsolidationRun {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let gc = cfg.grid.grid_config();
        let grid = build_grid(&gc)?;
        let bonds = build_bonds(&grid, gc.horizon(), cfg.grid.influence)?;
        let model = SolidModel::new(cfg.solid.material(), cfg.solid.mode, Kinematics::Linearized);
        let k = assemble_kpd(&grid, &bonds, &model)?;
        let n = grid.node_count();
        let zero = vec![Vec2::zeros(); n];
        let alpha = vec![cfg.flow.biot_alpha; n];
        let c = assemble_qpd(&bonds, &zero, &alpha, cfg.solid.mode, Kinematics::Linearized)?;
        let mesh = build_fluid_mesh(&grid);
        let props = vec![ElementProps::uniform(&cfg.flow); mesh.element_count()];
        let mats = assemble(&mesh, &grid.positions, &props, Vec2::zeros())?;
        let bcs = cfg.flow_bcs(&grid)?;
        let fixed_u = cfg.displacement_constraints(&grid)?;
        let scheme =
            ConsolidationScheme::new(&k, &c, &mats.q, &mats.s, &mats.h, cfg.time.theta, cfg.time.dt, &fixed_u, &bcs.dirichlet)?;
        let force = cfg.external_forces(&grid).iter().flat_map(|f| [f.x, f.y]).collect();
        let mut source = bcs.source_vector(n, grid.thickness)?;
        for (s, g) in source.iter_mut().zip(&mats.gravity) {
            *s += g;
        }
        let mut state = ConsolidationState { u: vec![0.0; 2 * n], p: vec![0.0; n], t: 0.0 };
        for (d, v) in fixed_u.iter() {
            state.u[d] = v;
        }
        for (a, v) in bcs.dirichlet.iter() {
            state.p[a] = v;
        }
        Ok(Self { monitor: cfg.monitor_node(&grid)?, grid, scheme, force, source, state, step: 0 })
    }

    pub fn advance(&mut self) -> Result<StepRecord> {
        let step = self.step + 1;
        self.state = self
            .scheme
            .step(&self.state, &self.force, &self.source)
            .map_err(|e| Error::Step { step, source: Box::new(e) })?;
        self.step = step;
        Ok(StepRecord {
            step,
            time: self.state.t,
            monitor_pressure: self.state.p[self.monitor],
            crack_length: 0.0,
            cmod: 0.0,
            broken_bonds: 0,
            new_breaks: 0,
            adr_iterations: 0,
        })
    }

    pub fn displacements(&self) -> Vec<Vec2> {
        self.state.u.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect()
    }
}

/// Either driver behind one interface.
#[derive(Debug)]
pub enum Runner {
    Consolidation(Box<ConsolidationRun>),
    Staggered(Box<Simulation>),
}

impl Runner {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.scenario {
            Scenario::Consolidation => Runner::Consolidation(Box::new(ConsolidationRun::new(cfg)?)),
            _ => Runner::Staggered(Box::new(Simulation::new(cfg.hf_setup()?)?)),
        })
    }

    pub fn advance(&mut self) -> Result<StepRecord> {
        match self {
            Runner::Consolidation(r) => r.advance(),
            Runner::Staggered(s) => s.advance(),
        }
    }

    pub fn step(&self) -> usize {
        match self {
            Runner::Consolidation(r) => r.step,
            Runner::Staggered(s) => s.step,
        }
    }

    /// Writes the current fields to `path`.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        match self {
            Runner::Consolidation(r) => {
                let zeros = vec![0.0; r.grid.node_count()];
                let u = r.displacements();
                Snapshot { grid: &r.grid, time: r.state.t, u: &u, p: &r.state.p, damage: &zeros, aperture: &zeros }.write(path)
            }
            Runner::Staggered(s) => Snapshot {
                grid: &s.setup.grid,
                time: s.time,
                u: &s.u,
                p: &s.p,
                damage: &s.damage,
                aperture: &s.aperture,
            }
            .write(path),
        }
    }
}

/// Command-line overrides on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub snapshot_every: Option<usize>,
}

impl RunOptions {
    pub fn apply(&self, cfg: &ScenarioConfig) -> Result<ScenarioConfig> {
        let mut cfg = cfg.clone();
        if let Some(s) = self.steps {
            cfg.time.steps = s;
        }
        if let Some(dt) = self.dt {
            cfg.time.dt = dt;
        }
        if let Some(k) = self.snapshot_every {
            cfg.output.snapshot_every = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs `cfg` with `opts` applied. Writes the resolved config, the time
/// series (`timeseries.csv`) and periodic snapshots into the output
/// directory. A failing step still leaves the rows recorded so far plus a
/// `failure.vtk` dump of the last state.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<StepRecord>> {
    let cfg = opts.apply(cfg)?;
    let dir = &opts.out_dir;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    let mut runner = Runner::new(&cfg)?;
    let mut rows = Vec::new();
    let snap_every = cfg.output.snapshot_every;
    if snap_every > 0 {
        runner.write_snapshot(&dir.join(format!("snapshot_{:06}.vtk", 0)))?;
    }
    for _ in 0..cfg.time.steps {
        match runner.advance() {
            Ok(rec) => {
                if rec.step % cfg.output.every == 0 {
                    rows.push(rec);
                }
                if snap_every > 0 && rec.step % snap_every == 0 {
                    runner.write_snapshot(&dir.join(format!("snapshot_{:06}.vtk", rec.step)))?;
                }
            }
            Err(e) => {
                write_timeseries(&rows, &dir.join("timeseries.csv"))?;
                runner.write_snapshot(&dir.join("failure.vtk"))?;
                return Err(e);
            }
        }
    }
    write_timeseries(&rows, &dir.join("timeseries.csv"))?;
    Ok(rows)
}
