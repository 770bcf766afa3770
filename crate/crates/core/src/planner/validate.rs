//! Independent plan checker. Every constraint family is recomputed from the
//! raw map geometry; nothing is reused from the search encoding except the
//! step-set definition itself.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::PlanConfig;
use super::encode::step_set;
use super::plan::Plan;
use crate::world::{cell_contains, Cell, GridMap, Mode};

/// Constraint families checked by [`validate_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    /// Sequence lengths and matrix dimensions.
    Shape,
    /// Positions inside the grid.
    Bounds,
    /// Visited-cell linking.
    Visited,
    /// `x(t+1) = x(t) + d(t)`.
    Propagation,
    /// Per-mode step sets, plus the stand rule.
    StepSet,
    /// Exactly one active mode.
    OneHot,
    /// Terrain mode gating.
    Terrain,
    /// Obstacle exclusion.
    Obstacle,
    /// Mode outside the configured allowed set.
    ModeRestriction,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 9] = [
        Self::Shape,
        Self::Bounds,
        Self::Visited,
        Self::Propagation,
        Self::StepSet,
        Self::OneHot,
        Self::Terrain,
        Self::Obstacle,
        Self::ModeRestriction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shape => "shape",
            Self::Bounds => "bounds",
            Self::Visited => "visited",
            Self::Propagation => "propagation",
            Self::StepSet => "step_set",
            Self::OneHot => "one_hot",
            Self::Terrain => "terrain",
            Self::Obstacle => "obstacle",
            Self::ModeRestriction => "mode_restriction",
        }
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    /// Constraint id within the family, e.g. `"biped_step"` or `"stand"`.
    pub constraint: String,
    pub t: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn families(&self) -> std::collections::BTreeSet<ConstraintFamily> {
        self.violations.iter().map(|v| v.family).collect()
    }

    /// Violation count per family, with every family present.
    pub fn family_counts(&self) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> =
            ConstraintFamily::ALL.iter().map(|f| (f.name().to_string(), 0)).collect();
        for v in &self.violations {
            *out.get_mut(v.family.name()).expect("all families present") += 1;
        }
        out
    }

    fn push(&mut self, family: ConstraintFamily, constraint: &str, t: Option<usize>, detail: String) {
        self.violations.push(Violation { family, constraint: constraint.to_string(), t, detail });
    }
}

fn in_grid(n: u32, p: Cell) -> bool {
    let n = n as i32;
    (0..n).contains(&p.x) && (0..n).contains(&p.y)
}

/// Checks `plan` against every constraint family and lists all violations.
pub fn validate_plan(plan: &Plan, map: &GridMap, config: &PlanConfig) -> ValidationReport {
    use ConstraintFamily::*;
    let mut r = ValidationReport::default();
    let steps = plan.displacements.len();

    if steps != config.horizon as usize {
        r.push(Shape, "horizon", None, format!("{steps} steps, horizon is {}", config.horizon));
    }
    if plan.positions.len() != steps + 1 {
        r.push(Shape, "positions", None, format!("{} positions for {steps} steps", plan.positions.len()));
    }
    if plan.modes.len() != steps {
        r.push(Shape, "modes", None, format!("{} mode vectors for {steps} steps", plan.modes.len()));
    }
    if plan.visited.n_grid != map.n_grid || plan.visited.cells.len() != map.cell_count() {
        r.push(Shape, "visited_dims", None, "visited matrix dimensions differ from the map".into());
    }
    if plan.positions.first() != Some(&map.start) {
        r.push(Propagation, "start", Some(0), "plan does not begin at the start cell".into());
    }

    for (t, &p) in plan.positions.iter().enumerate() {
        if !in_grid(map.n_grid, p) {
            r.push(Bounds, "bounds", Some(t), format!("x({t}) = {p} outside grid"));
        }
        for (k, o) in map.obstacles.iter().enumerate() {
            if o.contains(p) {
                r.push(Obstacle, "obstacle", Some(t), format!("x({t}) = {p} inside obstacle {k}"));
            }
        }
    }

    for t in 0..steps {
        let d = plan.displacements[t];
        if let (Some(&a), Some(&b)) = (plan.positions.get(t), plan.positions.get(t + 1)) {
            if a.offset(d) != b {
                r.push(Propagation, "propagation", Some(t), format!("{a} + {d:?} != {b}"));
            }
        }
        let Some(mv) = plan.modes.get(t) else { continue };
        let active: Vec<Mode> = Mode::ALL.into_iter().filter(|m| mv[m.index()]).collect();
        if active.len() != 1 {
            r.push(OneHot, "one_hot", Some(t), format!("{} active modes", active.len()));
        }
        for &m in &active {
            let row = match m {
                Mode::Biped => "biped_step",
                Mode::Crawl => "crawl_step",
                Mode::Roll => "roll_step",
            };
            if !step_set(m, true).contains(&d) {
                r.push(StepSet, row, Some(t), format!("{d:?} not a {m} step"));
            } else if d.is_zero() && !config.allow_stand {
                r.push(StepSet, "stand", Some(t), format!("{m} holds position with standing disabled"));
            }
            if !config.mode_allowed(m) {
                r.push(ModeRestriction, "allowed_modes", Some(t), format!("{m} not allowed"));
            }
        }
        if let Some(&p) = plan.positions.get(t) {
            for (k, region) in map.terrains.iter().enumerate() {
                let r2 = region.radius * region.radius;
                let d2 = region.dist2(p);
                if cell_contains(region, p) {
                    if !mv[region.required_mode.index()] {
                        r.push(
                            Terrain,
                            "terrain_mode",
                            Some(t),
                            format!("x({t}) = {p} in region {k} requires {}", region.required_mode),
                        );
                    }
                } else if d2 < r2 + config.epsilon {
                    r.push(Terrain, "terrain_band", Some(t), format!("x({t}) = {p} in epsilon band of region {k}"));
                }
            }
        }
    }

    if plan.visited.n_grid == map.n_grid && plan.visited.cells.len() == map.cell_count() {
        for p in map.cells() {
            let occupied = plan.positions.contains(&p);
            let marked = plan.visited.get(p);
            if occupied != marked {
                r.push(
                    Visited,
                    if marked { "visited_spurious" } else { "visited_missing" },
                    None,
                    format!("V{p} = {marked} but occupied = {occupied}"),
                );
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::encode::Move;
    use crate::world::{Displacement, RectObstacle, TerrainRegion};

    fn map5() -> GridMap {
        GridMap::empty(5, Cell::new(0, 0), Cell::new(4, 4)).unwrap()
    }

    fn crawl_plan(map: &GridMap) -> (Plan, PlanConfig) {
        let moves = [
            Move { d: Displacement::new(1, 0), mode: Mode::Crawl },
            Move { d: Displacement::new(0, 2), mode: Mode::Crawl },
            Move { d: Displacement::new(1, 0), mode: Mode::Crawl },
        ];
        (Plan::from_moves(map, &moves), PlanConfig::default().with_horizon(3))
    }

    #[test]
    fn clean_plan_has_no_violations() {
        let map = map5();
        let (plan, cfg) = crawl_plan(&map);
        assert!(validate_plan(&plan, &map, &cfg).is_ok());
    }

    #[test]
    fn biped_double_stride_violates_step_set() {
        let map = map5();
        let moves = [Move { d: Displacement::new(2, 0), mode: Mode::Biped }];
        let plan = Plan::from_moves(&map, &moves);
        let rep = validate_plan(&plan, &map, &PlanConfig::default().with_horizon(1));
        assert_eq!(rep.families().into_iter().collect::<Vec<_>>(), vec![ConstraintFamily::StepSet]);
        assert_eq!(rep.violations[0].constraint, "biped_step");
    }

    #[test]
    fn stepping_into_obstacle_is_flagged() {
        let mut map = map5();
        let (plan, cfg) = crawl_plan(&map);
        map.obstacles.push(RectObstacle { x_min: 1, x_max: 1, y_min: 0, y_max: 0 });
        let rep = validate_plan(&plan, &map, &cfg);
        assert_eq!(rep.families().into_iter().collect::<Vec<_>>(), vec![ConstraintFamily::Obstacle]);
    }

    #[test]
    fn terrain_gate_and_stand_rule() {
        let mut map = map5();
        map.terrains.push(TerrainRegion { center: [0.0, 0.0], radius: 0.5, required_mode: Mode::Biped });
        let (plan, cfg) = crawl_plan(&map);
        let rep = validate_plan(&plan, &map, &cfg);
        assert_eq!(rep.families().into_iter().collect::<Vec<_>>(), vec![ConstraintFamily::Terrain]);

        let map = map5();
        let plan = Plan::from_moves(&map, &[Move { d: Displacement::ZERO, mode: Mode::Crawl }]);
        let mut cfg = PlanConfig::default().with_horizon(1);
        assert!(validate_plan(&plan, &map, &cfg).is_ok());
        cfg.allow_stand = false;
        let rep = validate_plan(&plan, &map, &cfg);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].constraint, "stand");
    }

    #[test]
    fn broken_one_hot_and_visited() {
        let map = map5();
        let (mut plan, cfg) = crawl_plan(&map);
        plan.modes[1] = [false; 3];
        plan.visited.set(Cell::new(4, 4), true);
        let fams = validate_plan(&plan, &map, &cfg).families();
        assert_eq!(
            fams.into_iter().collect::<Vec<_>>(),
            vec![ConstraintFamily::Visited, ConstraintFamily::OneHot]
        );
    }

    #[test]
    fn wrong_horizon_is_a_shape_violation() {
        let map = map5();
        let (plan, _) = crawl_plan(&map);
        let rep = validate_plan(&plan, &map, &PlanConfig::default().with_horizon(4));
        assert_eq!(rep.families().into_iter().collect::<Vec<_>>(), vec![ConstraintFamily::Shape]);
    }
}
