//! Exact objective arithmetic.
//!
//! Weights are quantized to integer multiples of 1e-9 so objective values of
//! different plans compare exactly. Decimal weights with at most nine
//! fractional digits are represented without error.

use std::fmt;

use super::config::PlanConfig;
use crate::world::{Displacement, Mode};

const SCALE: f64 = 1.0e9;

/// Objective value in units of 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(pub i128);

impl Score {
    pub const MIN: Score = Score(i128::MIN);

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

fn quantize(w: f64) -> i128 {
    (w * SCALE).round() as i128
}

/// Quantized objective weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weights {
    pub exp: i128,
    pub goal: i128,
    pub penalty: [i128; 3],
    /// Per cell of L1 travel.
    pub dist: i128,
}

impl Weights {
    pub fn from_config(config: &PlanConfig) -> Self {
        let p = &config.mode_penalties;
        Self {
            exp: quantize(config.w_exp),
            goal: quantize(config.w_goal),
            penalty: [quantize(p.biped), quantize(p.crawl), quantize(p.roll)],
            dist: quantize(config.w_dist),
        }
    }

    pub fn penalty(&self, mode: Mode) -> i128 {
        self.penalty[mode.index()]
    }

    /// Mode penalty plus travel cost of one step.
    pub fn step_cost(&self, mode: Mode, d: Displacement) -> i128 {
        self.penalty(mode) + self.dist * i128::from(d.l1())
    }

    /// `W_exp * visited - W_goal * goal_dist2 - penalty_sum`.
    pub fn score(&self, visited: usize, goal_dist2: i64, penalty_sum: i128) -> Score {
        Score(self.exp * visited as i128 - self.goal * i128::from(goal_dist2) - penalty_sum)
    }
}
