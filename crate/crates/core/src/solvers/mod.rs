//! Time integration and nonlinear solution: the theta-scheme flow step, the
//! monolithic consolidation scheme, the probed peridynamic stiffness,
//! adaptive dynamic relaxation, and the staggered hydraulic-fracture loop.

mod adr;
mod consolidation;
mod flow_step;
mod staggered;
mod stiffness;

pub use adr::{adr_solve, fictitious_mass, AdrOptions, AdrReport, MechanicalLoad};
pub use consolidation::{ConsolidationScheme, ConsolidationState};
pub use flow_step::{flow_step, FlowStepper};
pub use staggered::{CrackFaceRamp, HfSetup, Loading, Simulation, StepRecord};
pub use stiffness::{assemble_kpd, node_dofs};
