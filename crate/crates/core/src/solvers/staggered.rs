use crate::coupling::{apertures, element_properties, nodal_properties, DomainThresholds, NodalProps};
use crate::discretization::{BondTable, FluidMesh, NodeGrid, Vec2};
use crate::error::{Error, Result};
use crate::flow::{assemble, FlowBcs, FlowMaterial};
use crate::linalg::Constraints;
use crate::solid::{critical_stretch, damage, Kinematics, PlaneMode, SolidMaterial, SolidModel};

use super::adr::{adr_solve, fictitious_mass, AdrOptions, MechanicalLoad};
use super::flow_step::FlowStepper;
use super::stiffness::assemble_kpd;

/// Pressure on crack faces ramped linearly to `final_pressure`
/// over `ramp_steps` steps and held afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackFaceRamp {
    pub final_pressure: f64,
    pub ramp_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loading {
    /// Flow step, then mechanical relaxation, every step.
    Hydraulic,
    /// No flow solve: every node with a broken bond carries the ramp
    /// pressure.
    CrackFacePressure(CrackFaceRamp),
    /// Flow through a frozen solid; no relaxation and no failure.
    FlowOnly,
}

/// Drained bulk modulus in the dimension of the model.
fn drained_bulk(m: &SolidMaterial, mode: PlaneMode) -> f64 {
    match mode {
        PlaneMode::PlaneStrain => m.bulk_modulus() + m.shear_modulus() / 3.0,
        PlaneMode::ThreeD => m.bulk_modulus(),
    }
}

/// Everything the staggered loop needs, already discretized.
#[derive(Debug, Clone)]
pub struct HfSetup {
    pub grid: NodeGrid,
    /// Bond families with any initial cracks already applied.
    pub bonds: BondTable,
    pub mesh: FluidMesh,
    pub solid: SolidMaterial,
    pub mode: PlaneMode,
    pub kinematics: Kinematics,
    pub reservoir: FlowMaterial,
    pub thresholds: DomainThresholds,
    pub gravity: Vec2,
    pub flow_bcs: FlowBcs,
    /// Prescribed displacement components, `2 * node + axis`.
    pub fixed_u: Constraints,
    /// Applied nodal forces (N).
    pub external: Vec<Vec2>,
    pub loading: Loading,
    /// Replaces the computed aperture everywhere when set.
    pub fixed_aperture: Option<f64>,
    /// Bonds longer than this are ignored when measuring apertures.
    pub aperture_radius: f64,
    pub theta: f64,
    pub dt: f64,
    /// Flow steps per mechanical step.
    pub flow_substeps: usize,
    /// Adds `alpha^2 / K_dr` to the storage of the flow step, the
    /// fixed-stress split. Without it the sequential update is only stable
    /// while `alpha^2 / (s M)` stays below about one.
    pub fixed_stress: bool,
    /// Warm-start relaxation from a linear extrapolation of the last two
    /// displacement fields.
    pub extrapolate: bool,
    pub adr: AdrOptions,
    /// Node whose pressure and opening are recorded.
    pub monitor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub monitor_pressure: f64,
    pub crack_length: f64,
    pub cmod: f64,
    pub broken_bonds: usize,
    pub new_breaks: usize,
    pub adr_iterations: usize,
}

#[derive(Debug)]
pub struct Simulation {
    pub setup: HfSetup,
    pub model: SolidModel,
    pub critical_stretch: f64,
    mass: Vec<f64>,
    pub u: Vec<Vec2>,
    pub u_prev: Vec<Vec2>,
    pub p: Vec<f64>,
    pub damage: Vec<f64>,
    pub aperture: Vec<f64>,
    pub props: Vec<NodalProps>,
    solid_alpha: Vec<f64>,
    stepper: Option<FlowStepper>,
    pub step: usize,
    pub time: f64,
}

impl Simulation {
    pub fn new(setup: HfSetup) -> Result<Self> {
        setup.solid.validate()?;
        setup.reservoir.validate()?;
        setup.thresholds.validate()?;
        if !(0.5..=1.0).contains(&setup.theta) {
            return Err(Error::Config(format!("theta must lie in [0.5, 1], got {}", setup.theta)));
        }
        if setup.flow_substeps == 0 {
            return Err(Error::Config("flow_substeps must be at least 1".into()));
        }
        let n = setup.grid.node_count();
        if setup.external.len() != n || setup.monitor >= n {
            return Err(Error::Dimension("external forces or monitor node do not match the grid".into()));
        }
        let model = SolidModel::new(setup.solid, setup.mode, setup.kinematics);
        let critical = critical_stretch(&setup.solid, setup.bonds.horizon, setup.mode)?;
        let mass = match setup.loading {
            Loading::FlowOnly => Vec::new(),
            _ => fictitious_mass(&assemble_kpd(&setup.grid, &setup.bonds, &model)?, setup.adr.mass_safety),
        };
        let mut p = vec![0.0; n];
        for (a, v) in setup.flow_bcs.dirichlet.iter() {
            p[a] = v;
        }
        let mut u = vec![Vec2::zeros(); n];
        for (d, v) in setup.fixed_u.iter() {
            u[d / 2][d % 2] = v;
        }
        let mut sim = Self {
            model,
            critical_stretch: critical,
            mass,
            u_prev: u.clone(),
            u,
            p,
            damage: Vec::new(),
            aperture: Vec::new(),
            props: Vec::new(),
            solid_alpha: Vec::new(),
            stepper: None,
            step: 0,
            time: 0.0,
            setup,
        };
        sim.refresh_properties()?;
        Ok(sim)
    }

    /// Damage, apertures and blended properties from the current state.
    /// Drops the cached flow factorization when anything changed.
    fn refresh_properties(&mut self) -> Result<()> {
        let s = &self.setup;
        self.damage = damage(&s.bonds);
        self.aperture = match s.fixed_aperture {
            Some(a) => vec![a; s.grid.node_count()],
            None => apertures(&s.bonds, &self.u, self.critical_stretch, s.aperture_radius, s.kinematics)?,
        };
        let props = nodal_properties(&self.damage, &self.aperture, &s.reservoir, s.solid.density, &s.thresholds)?;
        if props != self.props {
            self.props = props;
            self.solid_alpha = self.props.iter().map(|p| p.solid_alpha).collect();
            self.stepper = None;
        }
        Ok(())
    }

    fn flow_stepper(&mut self) -> Result<&FlowStepper> {
        if self.stepper.is_none() {
            let s = &self.setup;
            let mut elem = element_properties(&s.mesh, &self.props, s.reservoir.viscosity, s.reservoir.fluid_density);
            if s.fixed_stress && s.loading == Loading::Hydraulic {
                let k_dr = drained_bulk(&s.solid, s.mode);
                elem.iter_mut().for_each(|e| e.storage += e.coupling_alpha * e.coupling_alpha / k_dr);
            }
            let mats = assemble(&s.mesh, &s.grid.positions, &elem, s.gravity)?;
            let dt = s.dt / s.flow_substeps as f64;
            self.stepper = Some(FlowStepper::new(&mats, &s.flow_bcs, s.theta, dt, s.grid.thickness)?);
        }
        Ok(self.stepper.as_ref().expect("just built"))
    }

    /// Nodal fracture indicator, for loads that act on the fracture domain.
    pub fn fracture_indicator(&self) -> Vec<f64> {
        self.props.iter().map(|p| p.chi_f).collect()
    }

    fn pressure_update(&mut self) -> Result<()> {
        match self.setup.loading {
            Loading::CrackFacePressure(ramp) => {
                let level = ramp.final_pressure * ((self.step + 1) as f64 / ramp.ramp_steps.max(1) as f64).min(1.0);
                self.p = self.damage.iter().map(|&d| if d > 0.0 { level } else { 0.0 }).collect();
            }
            Loading::Hydraulic | Loading::FlowOnly => {
                let k = self.setup.flow_substeps;
                let du: Vec<f64> = match self.setup.loading {
                    Loading::FlowOnly => Vec::new(),
                    _ => self.u.iter().zip(&self.u_prev).flat_map(|(a, b)| [(a.x - b.x) / k as f64, (a.y - b.y) / k as f64]).collect(),
                };
                let mut p = std::mem::take(&mut self.p);
                for _ in 0..k {
                    p = self.flow_stepper()?.step(&p, &du)?;
                }
                self.p = p;
            }
        }
        Ok(())
    }

    fn relax(&mut self) -> Result<usize> {
        let mut guess = self.u.clone();
        if self.setup.extrapolate && self.step > 0 {
            for (g, (a, b)) in guess.iter_mut().zip(self.u.iter().zip(&self.u_prev)) {
                *g = 2.0 * a - b;
            }
        }
        let load = MechanicalLoad {
            pressure: &self.p,
            alpha: &self.solid_alpha,
            external: &self.setup.external,
            fixed: &self.setup.fixed_u,
        };
        let mut mass = self.mass.clone();
        let mut attempt = 0;
        loop {
            let mut trial = guess.clone();
            match adr_solve(&mut self.model, &self.setup.bonds, load, &mass, &mut trial, &self.setup.adr) {
                Ok(report) => {
                    self.u_prev = std::mem::replace(&mut self.u, trial);
                    return Ok(report.iterations);
                }
                // A stiffer tangent than the probed one: retry with more mass.
                Err(Error::AdrDiverged { .. }) if attempt < 3 => {
                    attempt += 1;
                    mass.iter_mut().for_each(|m| *m *= 2.0);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Advances one step: pressure, relaxation, failure, properties.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let step = self.step;
        let wrap = |e: Error| Error::Step { step: step + 1, source: Box::new(e) };
        self.pressure_update().map_err(wrap)?;
        let (iterations, new_breaks) = match self.setup.loading {
            Loading::FlowOnly => (0, 0),
            _ => {
                let it = self.relax().map_err(wrap)?;
                let broken = self.model.update_failure(&mut self.setup.bonds, &self.u, self.critical_stretch).map_err(wrap)?;
                (it, broken)
            }
        };
        self.refresh_properties().map_err(wrap)?;
        self.step += 1;
        self.time += self.setup.dt;
        Ok(self.record(iterations, new_breaks))
    }

    /// Estimated crack length: fracture-domain nodes line both faces, so
    /// their count times the spacing over two.
    pub fn crack_length(&self) -> f64 {
        let c2 = self.setup.thresholds.c2;
        let count = self.damage.iter().filter(|&&d| d >= c2).count();
        count as f64 * self.setup.grid.spacing / 2.0
    }

    /// Largest opening across broken bonds at the monitor node.
    pub fn cmod(&self) -> f64 {
        let b = &self.setup.bonds;
        let i = self.setup.monitor;
        b.range(i)
            .filter(|&k| !b.intact[k])
            .map(|k| {
                let bond = &b.bonds[k];
                (self.u[bond.j] - self.u[i]).dot(&bond.xi) / bond.length
            })
            .fold(0.0, f64::max)
    }

    fn record(&self, adr_iterations: usize, new_breaks: usize) -> StepRecord {
        let monitor_pressure = self.p[self.setup.monitor];
        StepRecord {
            step: self.step,
            time: self.time,
            monitor_pressure,
            crack_length: self.crack_length(),
            cmod: self.cmod(),
            broken_bonds: self.setup.bonds.broken_count(),
            new_breaks,
            adr_iterations,
        }
    }

    /// Runs `steps` steps, handing each record to `observe`.
    pub fn run(&mut self, steps: usize, mut observe: impl FnMut(&Self, &StepRecord) -> Result<()>) -> Result<Vec<StepRecord>> {
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let rec = self.advance()?;
            observe(self, &rec)?;
            out.push(rec);
        }
        Ok(out)
    }
}
