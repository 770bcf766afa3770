use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::world::Mode;

/// One value per locomotion mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTable<T> {
    pub biped: T,
    pub crawl: T,
    pub roll: T,
}

impl<T> ModeTable<T> {
    pub fn at(&self, mode: Mode) -> &T {
        match mode {
            Mode::Biped => &self.biped,
            Mode::Crawl => &self.crawl,
            Mode::Roll => &self.roll,
        }
    }
}

impl<T: Copy> ModeTable<T> {
    pub fn uniform(v: T) -> Self {
        Self { biped: v, crawl: v, roll: v }
    }

    pub fn get(&self, mode: Mode) -> T {
        match mode {
            Mode::Biped => self.biped,
            Mode::Crawl => self.crawl,
            Mode::Roll => self.roll,
        }
    }

    pub fn set(&mut self, mode: Mode, v: T) {
        match mode {
            Mode::Biped => self.biped = v,
            Mode::Crawl => self.crawl = v,
            Mode::Roll => self.roll = v,
        }
    }

    pub fn map<U>(&self, f: impl Fn(Mode, T) -> U) -> ModeTable<U> {
        ModeTable {
            biped: f(Mode::Biped, self.biped),
            crawl: f(Mode::Crawl, self.crawl),
            roll: f(Mode::Roll, self.roll),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

fn default_budget() -> u64 {
    50_000_000
}

/// Planner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    /// Number of steps `T`.
    pub horizon: u32,
    pub w_exp: f64,
    pub w_goal: f64,
    pub mode_penalties: ModeTable<f64>,
    pub big_m: f64,
    pub epsilon: f64,
    /// Cost per cell of travel. Zero leaves the objective as exploration,
    /// goal distance and mode penalties; a small value breaks ties between
    /// equally scored plans in favour of shorter strides.
    #[serde(default)]
    pub w_dist: f64,
    /// Biped and crawl may hold position for a step.
    #[serde(default = "default_true")]
    pub allow_stand: bool,
    /// Modes the planner may use at all.
    #[serde(default = "default_modes")]
    pub allowed_modes: Vec<Mode>,
    /// Branch-and-bound node budget.
    #[serde(default = "default_budget")]
    pub node_budget: u64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            w_exp: 1.0,
            w_goal: 1.0,
            mode_penalties: ModeTable { biped: 0.5, crawl: 0.1, roll: 1.0 },
            big_m: 1.0e4,
            epsilon: 1.0e-3,
            w_dist: 0.0,
            allow_stand: true,
            allowed_modes: default_modes(),
            node_budget: default_budget(),
        }
    }
}

impl PlanConfig {
    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        self
    }

    /// Restricts planning to a single locomotion mode.
    pub fn single_mode(mut self, mode: Mode) -> Self {
        self.allowed_modes = vec![mode];
        self
    }

    pub fn mode_allowed(&self, mode: Mode) -> bool {
        self.allowed_modes.contains(&mode)
    }

    pub fn validate(&self, n_grid: u32) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::InvalidConfig(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.w_exp) || !finite_nonneg(self.w_goal) || !finite_nonneg(self.w_dist) {
            return bad("objective weights must be finite and nonnegative".into());
        }
        for m in Mode::ALL {
            if !finite_nonneg(self.mode_penalties.get(m)) {
                return bad(format!("{m} penalty must be finite and nonnegative"));
            }
        }
        if !finite_nonneg(self.epsilon) {
            return bad("epsilon must be nonnegative".into());
        }
        let n2 = f64::from(n_grid) * f64::from(n_grid);
        if !(self.big_m.is_finite() && self.big_m > n2) {
            return bad(format!("big_m {} must exceed n_grid^2 = {n2}", self.big_m));
        }
        if self.allowed_modes.is_empty() {
            return bad("at least one mode must be allowed".into());
        }
        if self.node_budget == 0 {
            return bad("node budget must be positive".into());
        }
        Ok(())
    }
}
