//! TOML scenario files.
//!
//! One table per concern plus arrays of tables for cracks, injections and
//! boundary conditions. Unknown keys are rejected everywhere. A complete
//! fluid-driven file looks like
//!
//! ```toml
//! scenario = "fluid-driven"
//!
//! [grid]
//! extent_x = 1.0
//! extent_y = 1.0
//! spacing = 0.025
//!
//! [solid]
//! youngs_modulus = 1e8
//! poisson_ratio = 0.2
//! density = 1000.0
//! fracture_energy = 100.0
//!
//! [flow]
//! biot_alpha = 1.0
//! porosity = 0.4
//! permeability = 1e-12
//! viscosity = 1e-3
//! fluid_bulk = 1e8
//!
//! [time]
//! dt = 1e-3
//! theta = 1.0
//! steps = 500
//! fixed_stress = true
//!
//! [[crack]]
//! start = [0.375, 0.5]
//! end = [0.625, 0.5]
//!
//! [[injection]]
//! at = [0.5, 0.5]
//! rate = 1e-3
//!
//! [[pressure_bc]]
//! edge = "left"
//! value = 0.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::DomainThresholds;
use crate::discretization::{
    apply_initial_crack, build_bonds, build_fluid_mesh, build_grid, Edge, GridConfig, Influence, NodeGrid, Vec2,
};
use crate::error::{Error, Result};
use crate::flow::{FlowBcs, FlowMaterial};
use crate::linalg::Constraints;
use crate::solid::{Kinematics, PlaneMode, SolidMaterial};
use crate::solvers::{AdrOptions, CrackFaceRamp, HfSetup, Loading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Monolithic small-strain consolidation without fracture.
    Consolidation,
    /// Flow through a frozen, pre-cracked solid.
    CrackDiffusion,
    /// Ramped pressure on the crack faces, no flow solve.
    PressureDriven,
    /// Injection with the full staggered loop.
    FluidDriven,
}

fn default_m_ratio() -> f64 {
    3.0
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub extent_x: f64,
    pub extent_y: f64,
    pub spacing: f64,
    #[serde(default = "default_m_ratio")]
    pub m_ratio: f64,
    #[serde(default = "one")]
    pub thickness: f64,
    #[serde(default)]
    pub partial_boundary_volumes: bool,
    #[serde(default = "default_influence")]
    pub influence: Influence,
}

fn default_influence() -> Influence {
    Influence::Gaussian
}

impl GridSection {
    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            extent_x: self.extent_x,
            extent_y: self.extent_y,
            spacing: self.spacing,
            m_ratio: self.m_ratio,
            thickness: self.thickness,
            partial_boundary_volumes: self.partial_boundary_volumes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidSection {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub fracture_energy: f64,
    #[serde(default)]
    pub mode: PlaneMode,
    #[serde(default)]
    pub kinematics: Kinematics,
}

impl SolidSection {
    pub fn material(&self) -> SolidMaterial {
        SolidMaterial {
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
            density: self.density,
            fracture_energy: self.fracture_energy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Bonds longer than this count toward no aperture; the horizon if
    /// omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_radius: Option<f64>,
    /// Uniform aperture that replaces the measured one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_aperture: Option<f64>,
}

fn default_c1() -> f64 {
    DomainThresholds::default().c1
}

fn default_c2() -> f64 {
    DomainThresholds::default().c2
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self { c1: default_c1(), c2: default_c2(), aperture_radius: None, fixed_aperture: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    #[serde(default = "one")]
    pub theta: f64,
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub flow_substeps: usize,
    #[serde(default)]
    pub fixed_stress: bool,
    #[serde(default = "yes")]
    pub extrapolate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingSection {
    pub final_pressure: f64,
    pub ramp_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Time-series row every this many steps.
    #[serde(default = "one_usize")]
    pub every: usize,
    /// Field snapshot every this many steps; zero disables them.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Point whose pressure is recorded. Defaults to the first injection,
    /// else the domain centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<[f64; 2]>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { every: 1, snapshot_every: 0, monitor: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackSegment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub at: [f64; 2],
    /// Volumetric rate per unit thickness, m^2/s.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureBc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[f64; 2]>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementBc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

/// Uniform traction in Pa on an edge, lumped to `value * spacing *
/// thickness` per edge node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traction {
    pub edge: Edge,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid: GridSection,
    pub solid: SolidSection,
    pub flow: FlowMaterial,
    #[serde(default)]
    pub coupling: CouplingSection,
    pub time: TimeSection,
    #[serde(default)]
    pub adr: AdrOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<LoadingSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, rename = "crack", skip_serializing_if = "Vec::is_empty")]
    pub cracks: Vec<CrackSegment>,
    #[serde(default, rename = "injection", skip_serializing_if = "Vec::is_empty")]
    pub injections: Vec<Injection>,
    #[serde(default, rename = "pressure_bc", skip_serializing_if = "Vec::is_empty")]
    pub pressure_bcs: Vec<PressureBc>,
    #[serde(default, rename = "displacement_bc", skip_serializing_if = "Vec::is_empty")]
    pub displacement_bcs: Vec<DisplacementBc>,
    #[serde(default, rename = "traction", skip_serializing_if = "Vec::is_empty")]
    pub tractions: Vec<Traction>,
}

fn v2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn inside(grid: &NodeGrid, p: Vec2) -> bool {
    let tol = 1e-9 * grid.spacing;
    let (ex, ey) = grid.extent();
    p.x >= -tol && p.y >= -tol && p.x <= ex + tol && p.y <= ey + tol && p.x.is_finite() && p.y.is_finite()
}

/// Node at `point`, which must lie within half a spacing of it.
pub fn snap_to_node(grid: &NodeGrid, point: [f64; 2], what: &str) -> Result<usize> {
    let p = v2(point);
    let a = grid.nearest_node(p);
    if !((grid.positions[a] - p).norm() <= 0.5 * grid.spacing * (1.0 + 1e-9)) {
        return Err(Error::Config(format!("{what} at ({}, {}) is not within half a spacing of a node", point[0], point[1])));
    }
    Ok(a)
}

/// Nodes addressed by a boundary condition: every node of `edge`, or the
/// node at `at`.
fn target_nodes(grid: &NodeGrid, edge: Option<Edge>, at: Option<[f64; 2]>, what: &str) -> Result<Vec<usize>> {
    match (edge, at) {
        (Some(e), None) => Ok(grid.edge_nodes(e)),
        (None, Some(p)) => Ok(vec![snap_to_node(grid, p, what)?]),
        _ => Err(Error::Config(format!("{what} needs exactly one of `edge` or `at`"))),
    }
}

impl PressureBc {
    pub fn nodes(&self, grid: &NodeGrid) -> Result<Vec<usize>> {
        target_nodes(grid, self.edge, self.at, "pressure_bc")
    }
}

impl DisplacementBc {
    pub fn nodes(&self, grid: &NodeGrid) -> Result<Vec<usize>> {
        target_nodes(grid, self.edge, self.at, "displacement_bc")
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Checks everything that can be checked without building operators.
    pub fn validate(&self) -> Result<()> {
        let grid = build_grid(&self.grid.grid_config())?;
        self.solid.material().validate()?;
        self.flow.validate()?;
        DomainThresholds { c1: self.coupling.c1, c2: self.coupling.c2 }.validate()?;
        let t = &self.time;
        if !(0.5..=1.0).contains(&t.theta) {
            return Err(Error::Config(format!("theta must lie in [0.5, 1] for unconditional stability, got {}", t.theta)));
        }
        if !(t.dt > 0.0) || !t.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", t.dt)));
        }
        if t.flow_substeps == 0 || self.output.every == 0 {
            return Err(Error::Config("flow_substeps and output.every must be at least 1".into()));
        }
        if let Some(r) = self.coupling.aperture_radius {
            if !(r > 0.0) {
                return Err(Error::Config(format!("aperture_radius must be positive, got {r}")));
            }
        }
        if self.coupling.fixed_aperture.is_some_and(|a| !(a >= 0.0)) {
            return Err(Error::Config("fixed_aperture must be non-negative".into()));
        }
        for c in &self.cracks {
            for p in [c.start, c.end] {
                if !inside(&grid, v2(p)) {
                    return Err(Error::Config(format!("crack end ({}, {}) lies outside the domain", p[0], p[1])));
                }
            }
        }
        for inj in &self.injections {
            snap_to_node(&grid, inj.at, "injection")?;
            if !inj.rate.is_finite() {
                return Err(Error::Config("injection rate must be finite".into()));
            }
        }
        for bc in &self.pressure_bcs {
            bc.nodes(&grid)?;
        }
        for bc in &self.displacement_bcs {
            bc.nodes(&grid)?;
            if bc.x.is_none() && bc.y.is_none() {
                return Err(Error::Config("displacement_bc prescribes neither x nor y".into()));
            }
        }
        if let Some(m) = self.output.monitor {
            snap_to_node(&grid, m, "monitor")?;
        }
        match (self.scenario, &self.loading) {
            (Scenario::PressureDriven, None) => {
                return Err(Error::Config("pressure-driven scenario needs a [loading] table".into()));
            }
            (Scenario::PressureDriven, Some(l)) if l.ramp_steps == 0 => {
                return Err(Error::Config("loading.ramp_steps must be at least 1".into()));
            }
            (Scenario::Consolidation, _) if !self.cracks.is_empty() => {
                return Err(Error::Config("consolidation does not support initial cracks".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn monitor_node(&self, grid: &NodeGrid) -> Result<usize> {
        match (self.output.monitor, self.injections.first()) {
            (Some(m), _) => snap_to_node(grid, m, "monitor"),
            (None, Some(inj)) => snap_to_node(grid, inj.at, "injection"),
            (None, None) => {
                let (ex, ey) = grid.extent();
                Ok(grid.nearest_node(Vec2::new(ex / 2.0, ey / 2.0)))
            }
        }
    }

    pub fn flow_bcs(&self, grid: &NodeGrid) -> Result<FlowBcs> {
        let mut bcs = FlowBcs::default();
        for bc in &self.pressure_bcs {
            for a in bc.nodes(grid)? {
                bcs.dirichlet.insert(a, bc.value)?;
            }
        }
        for inj in &self.injections {
            bcs.sources.push((snap_to_node(grid, inj.at, "injection")?, inj.rate));
        }
        Ok(bcs)
    }

    /// Prescribed displacement components, keyed `2 * node + axis`.
    pub fn displacement_constraints(&self, grid: &NodeGrid) -> Result<Constraints> {
        let mut fixed = Constraints::new();
        for bc in &self.displacement_bcs {
            for a in bc.nodes(grid)? {
                if let Some(v) = bc.x {
                    fixed.insert(2 * a, v)?;
                }
                if let Some(v) = bc.y {
                    fixed.insert(2 * a + 1, v)?;
                }
            }
        }
        Ok(fixed)
    }

    /// Nodal forces in N from the edge tractions.
    pub fn external_forces(&self, grid: &NodeGrid) -> Vec<Vec2> {
        let mut f = vec![Vec2::zeros(); grid.node_count()];
        let scale = grid.spacing * grid.thickness;
        for t in &self.tractions {
            for a in grid.edge_nodes(t.edge) {
                f[a] += v2(t.value) * scale;
            }
        }
        f
    }

    /// Builds the staggered-loop input. Fails for consolidation, which
    /// has its own monolithic driver.
    pub fn hf_setup(&self) -> Result<HfSetup> {
        let loading = match self.scenario {
            Scenario::Consolidation => {
                return Err(Error::Config("consolidation runs through the monolithic scheme".into()));
            }
            Scenario::CrackDiffusion => Loading::FlowOnly,
            Scenario::FluidDriven => Loading::Hydraulic,
            Scenario::PressureDriven => {
                let l = self.loading.ok_or_else(|| Error::Config("missing [loading]".into()))?;
                Loading::CrackFacePressure(CrackFaceRamp { final_pressure: l.final_pressure, ramp_steps: l.ramp_steps })
            }
        };
        let gc = self.grid.grid_config();
        let grid = build_grid(&gc)?;
        let mut bonds = build_bonds(&grid, gc.horizon(), self.grid.influence)?;
        let segments: Vec<(Vec2, Vec2)> = self.cracks.iter().map(|c| (v2(c.start), v2(c.end))).collect();
        apply_initial_crack(&grid, &mut bonds, &segments)?;
        Ok(HfSetup {
            mesh: build_fluid_mesh(&grid),
            solid: self.solid.material(),
            mode: self.solid.mode,
            kinematics: self.solid.kinematics,
            reservoir: self.flow,
            thresholds: DomainThresholds { c1: self.coupling.c1, c2: self.coupling.c2 },
            gravity: Vec2::zeros(),
            flow_bcs: self.flow_bcs(&grid)?,
            fixed_u: self.displacement_constraints(&grid)?,
            external: self.external_forces(&grid),
            loading,
            fixed_aperture: self.coupling.fixed_aperture,
            aperture_radius: self.coupling.aperture_radius.unwrap_or(gc.horizon()),
            theta: self.time.theta,
            dt: self.time.dt,
            flow_substeps: self.time.flow_substeps,
            fixed_stress: self.time.fixed_stress,
            extrapolate: self.time.extrapolate,
            adr: self.adr,
            monitor: self.monitor_node(&grid)?,
            bonds,
            grid,
        })
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_toml_str(&text)
}
