//! Shared inputs for the criterion benches.

use std::path::PathBuf;

use stride_core::{Cell, GridMap, PlanConfig, Scenario};

/// Open square map with start and goal in opposite corners.
pub fn open_map(n: u32) -> GridMap {
    let far = n as i32 - 1;
    GridMap::empty(n, Cell { x: 0, y: 0 }, Cell { x: far, y: far }).expect("valid open map")
}

pub fn config(horizon: u32) -> PlanConfig {
    PlanConfig::default().with_horizon(horizon)
}

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn fixture_map(name: &str) -> GridMap {
    stride_core::world::load_map(&fixture(name)).expect("fixture map parses")
}

pub fn pull_scenario() -> Scenario {
    Scenario::from_json(&fixture("pull_scenario.json")).expect("fixture scenario parses")
}
