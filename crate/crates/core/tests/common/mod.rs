#![allow(dead_code)]

pub mod mutate;
pub mod oracle;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stride_core::planner::{encode, solve, ModeTable};
use stride_core::world::{RectObstacle, TerrainRegion};
use stride_core::{Cell, GridMap, Mode, PlanConfig, PlanError, Solution};

pub fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn random_cell(rng: &mut ChaCha8Rng, n: i32) -> Cell {
    Cell::new(rng.gen_range(0..n), rng.gen_range(0..n))
}

/// Random `n × n` map with up to two terrain disks and up to two small
/// obstacles that avoid start and goal.
pub fn random_map(rng: &mut ChaCha8Rng, n: u32) -> GridMap {
    let ni = n as i32;
    let start = random_cell(rng, ni);
    let goal = random_cell(rng, ni);
    let terrains = (0..rng.gen_range(0..=2))
        .map(|_| TerrainRegion {
            center: [rng.gen_range(0.0..ni as f64 - 1.0), rng.gen_range(0.0..ni as f64 - 1.0)],
            radius: rng.gen_range(0.5..2.0),
            required_mode: Mode::ALL[rng.gen_range(0..3)],
        })
        .collect();
    let mut obstacles = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let x = rng.gen_range(0..ni);
        let y = rng.gen_range(0..ni);
        let o = RectObstacle {
            x_min: x,
            x_max: (x + rng.gen_range(0..2)).min(ni - 1),
            y_min: y,
            y_max: (y + rng.gen_range(0..2)).min(ni - 1),
        };
        if !o.contains(start) && !o.contains(goal) {
            obstacles.push(o);
        }
    }
    GridMap::new(n, start, goal, terrains, obstacles).expect("generated map is valid")
}

/// Random objective weights on top of the defaults.
pub fn random_config(rng: &mut ChaCha8Rng, horizon: u32) -> PlanConfig {
    PlanConfig {
        w_exp: rng.gen_range(0.0..2.0),
        w_goal: rng.gen_range(0.0..2.0),
        mode_penalties: ModeTable {
            biped: rng.gen_range(0.0..1.5),
            crawl: rng.gen_range(0.0..1.5),
            roll: rng.gen_range(0.0..1.5),
        },
        ..PlanConfig::default().with_horizon(horizon)
    }
}

/// Solves `map` under `config`, keeping a budget-limited incumbent.
pub fn solve_map(map: &GridMap, config: &PlanConfig) -> Option<Solution> {
    let inst = encode(map, config).ok()?;
    match solve(&inst) {
        Ok(sol) => Some(sol),
        Err(PlanError::BudgetExceeded { incumbent, .. }) => incumbent.map(|b| *b),
        Err(_) => None,
    }
}
