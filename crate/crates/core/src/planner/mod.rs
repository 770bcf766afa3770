//! Multi-modal grid planner: encoding, exact search, validation and energy
//! evaluation.

mod brute;
mod config;
mod encode;
mod energy;
mod plan;
mod score;
mod solve;
mod validate;

pub use brute::{brute_force_solve, enumeration_size, ENUMERATION_GUARD};
pub use config::{ModeTable, PlanConfig};
pub use encode::{
    displacement_rank, encode, may_stand, step_set, stride_magnitudes, terrain_gate, ModeMask, Move,
    ProblemInstance,
};
pub use energy::{
    evc, evc_sweep, min_feasible_horizon, sweep_csv, EnergyModel, EvcReport, EvcRow, SweepConfig, SweepRow,
};
pub use plan::{one_hot, single_mode, ModeEntry, ModeVector, Plan, PlanFile, VisitedGrid};
pub use score::{Score, Weights};
pub use solve::solve;
pub use validate::{validate_plan, ConstraintFamily, ValidationReport, Violation};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Proven global optimum.
    Optimal,
    /// Best plan found within the budget.
    Incumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub root_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub seconds: f64,
}

/// A solved plan together with its objective and search statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub plan: Plan,
    pub score: Score,
    pub objective: f64,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

/// Exact objective of a plan.
pub fn objective_score(plan: &Plan, config: &PlanConfig, goal: crate::world::Cell) -> Score {
    let w = Weights::from_config(config);
    let modes: i128 = plan
        .modes
        .iter()
        .flat_map(|v| crate::world::Mode::ALL.into_iter().filter(move |m| v[m.index()]))
        .map(|m| w.penalty(m))
        .sum();
    let travel: i128 = plan.displacements.iter().map(|d| w.dist * i128::from(d.l1())).sum();
    let penalty = modes + travel;
    w.score(plan.visited.count(), plan.final_position().dist2(goal), penalty)
}

/// `W_exp * sum V - W_goal * |x_T - goal|^2 - sum_t sum_k P_k m_k(t)`, less
/// `w_dist` per cell travelled when that weight is set.
pub fn objective_value(plan: &Plan, config: &PlanConfig, goal: crate::world::Cell) -> f64 {
    objective_score(plan, config, goal).to_f64()
}
