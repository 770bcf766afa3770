//! Desk-scale toolkit for a multi-modal legged robot.
//!
//! * [`world`] and [`planner`]: grid maps with terrain and obstacles, an exact
//!   branch-and-bound planner over displacement and mode sequences, a plan
//!   validator and an energy-per-visited-cell evaluator.
//! * [`admittance`], [`governor`] and [`sim`]: per-axis admittance control,
//!   a reference governor backed by a sampled admissible set, and a compliant
//!   contact plant to exercise them.

pub mod admittance;
pub mod error;
pub mod governor;
pub mod planner;
pub mod sim;
pub mod world;

pub use admittance::{AdmittanceGains, AxisReference, AxisState};
pub use error::{GovernorError, MapError, PlanError, SimError};
pub use governor::{AxisBounds, MoasIndex, MoasSample};
pub use planner::{EnergyModel, Plan, PlanConfig, Solution};
pub use sim::{ContactModel, Scenario, Trace};
pub use world::{Cell, Displacement, GridMap, Mode};
