//! Fault injection for the plan validator. Each mutation targets exactly one
//! constraint family and leaves every other family satisfied.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stride_core::planner::{one_hot, step_set, terrain_gate, ConstraintFamily, Plan, VisitedGrid};
use stride_core::world::{cell_contains, RectObstacle, TerrainRegion};
use stride_core::{Displacement, GridMap, Mode, PlanConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Propagation,
    StepSet,
    OneHot,
    ZeroHot,
    Terrain,
    Obstacle,
    Bounds,
    Visited,
    ModeRestriction,
    Shape,
}

pub const KINDS: [Kind; 10] = [
    Kind::Propagation,
    Kind::StepSet,
    Kind::OneHot,
    Kind::ZeroHot,
    Kind::Terrain,
    Kind::Obstacle,
    Kind::Bounds,
    Kind::Visited,
    Kind::ModeRestriction,
    Kind::Shape,
];

impl Kind {
    pub fn family(self) -> ConstraintFamily {
        match self {
            Kind::Propagation => ConstraintFamily::Propagation,
            Kind::StepSet => ConstraintFamily::StepSet,
            Kind::OneHot | Kind::ZeroHot => ConstraintFamily::OneHot,
            Kind::Terrain => ConstraintFamily::Terrain,
            Kind::Obstacle => ConstraintFamily::Obstacle,
            Kind::Bounds => ConstraintFamily::Bounds,
            Kind::Visited => ConstraintFamily::Visited,
            Kind::ModeRestriction => ConstraintFamily::ModeRestriction,
            Kind::Shape => ConstraintFamily::Shape,
        }
    }
}

/// A mutated `(plan, map, config)` triple and the families it violates.
pub struct Mutant {
    pub plan: Plan,
    pub map: GridMap,
    pub config: PlanConfig,
    pub expected: BTreeSet<ConstraintFamily>,
}

fn mode_of(plan: &Plan, t: usize) -> Mode {
    let v = plan.modes[t];
    Mode::ALL.into_iter().find(|m| v[m.index()]).expect("base plans are one-hot")
}

fn in_any_region(map: &GridMap, t: usize, plan: &Plan) -> bool {
    map.terrains.iter().any(|r| cell_contains(r, plan.positions[t]))
}

/// Applies one mutation of `kind`, or returns `None` when the base plan
/// offers no site for it.
pub fn mutate(rng: &mut ChaCha8Rng, plan: &Plan, map: &GridMap, config: &PlanConfig, kind: Kind) -> Option<Mutant> {
    let horizon = plan.displacements.len();
    let mut plan = plan.clone();
    let mut map = map.clone();
    let mut config = config.clone();
    let mut steps: Vec<usize> = (0..horizon).collect();
    steps.shuffle(rng);
    match kind {
        Kind::Propagation => {
            // another displacement of the same mode, positions untouched
            let t = steps[0];
            let m = mode_of(&plan, t);
            let d = plan.displacements[t];
            let others: Vec<Displacement> = step_set(m, config.allow_stand).into_iter().filter(|&o| o != d).collect();
            plan.displacements[t] = *others.choose(rng)?;
        }
        Kind::StepSet => {
            let (t, m) = steps.iter().find_map(|&t| {
                if in_any_region(&map, t, &plan) {
                    return None;
                }
                let d = plan.displacements[t];
                let lacking: Vec<Mode> = Mode::ALL.into_iter().filter(|m| !step_set(*m, true).contains(&d)).collect();
                lacking.choose(rng).map(|&m| (t, m))
            })?;
            plan.modes[t] = one_hot(m);
        }
        Kind::OneHot => {
            let (t, m) = steps.iter().find_map(|&t| {
                let cur = mode_of(&plan, t);
                let d = plan.displacements[t];
                let extra: Vec<Mode> = Mode::ALL
                    .into_iter()
                    .filter(|&m| m != cur && step_set(m, config.allow_stand).contains(&d))
                    .collect();
                extra.choose(rng).map(|&m| (t, m))
            })?;
            plan.modes[t][m.index()] = true;
        }
        Kind::ZeroHot => {
            let t = *steps.iter().find(|&&t| !in_any_region(&map, t, &plan))?;
            plan.modes[t] = [false; 3];
        }
        Kind::Terrain => {
            let t = steps[0];
            let p = plan.positions[t];
            let cur = mode_of(&plan, t);
            let other = *Mode::ALL.iter().filter(|&&m| m != cur).collect::<Vec<_>>().choose(rng)?;
            let region = TerrainRegion { center: [f64::from(p.x), f64::from(p.y)], radius: 0.5, required_mode: *other };
            // the new disk must not close or gate any other occupied cell
            let disturbs_others = plan.positions[..horizon].iter().any(|&q| {
                q != p && terrain_gate(std::slice::from_ref(&region), config.epsilon, q) != terrain_gate(&[], 0.0, q)
            });
            if disturbs_others {
                return None;
            }
            map.terrains.push(region);
        }
        Kind::Obstacle => {
            let t = *steps.iter().find(|&&t| {
                let p = plan.positions[t + 1];
                p != map.start && p != map.goal
            })?;
            let p = plan.positions[t + 1];
            map.obstacles.push(RectObstacle { x_min: p.x, x_max: p.x, y_min: p.y, y_max: p.y });
        }
        Kind::Bounds => {
            let t = horizon - 1;
            let m = mode_of(&plan, t);
            let from = plan.positions[t];
            let exits: Vec<Displacement> =
                step_set(m, config.allow_stand).into_iter().filter(|&d| !map.in_bounds(from.offset(d))).collect();
            let d = *exits.choose(rng)?;
            plan.displacements[t] = d;
            plan.positions[t + 1] = from.offset(d);
            plan.visited = VisitedGrid::from_positions(map.n_grid, &plan.positions);
        }
        Kind::Visited => {
            let cells: Vec<_> = map.cells().collect();
            let p = *cells.choose(rng)?;
            let v = plan.visited.get(p);
            plan.visited.set(p, !v);
        }
        Kind::ModeRestriction => {
            let used: BTreeSet<Mode> = (0..horizon).map(|t| mode_of(&plan, t)).collect();
            let drop = *used.iter().collect::<Vec<_>>().choose(rng)?;
            config.allowed_modes.retain(|m| m != drop);
            if config.allowed_modes.is_empty() {
                return None;
            }
        }
        Kind::Shape => {
            plan.modes.pop();
        }
    }
    let expected = [kind.family()].into_iter().collect();
    Some(Mutant { plan, map, config, expected })
}

/// One or two mutations from distinct families; a visited-bit flip is the
/// only second mutation, applied last so it cannot be undone.
pub fn random_mutant(rng: &mut ChaCha8Rng, plan: &Plan, map: &GridMap, config: &PlanConfig) -> Option<Mutant> {
    let kind = *KINDS.choose(rng).expect("nonempty");
    let mut m = mutate(rng, plan, map, config, kind)?;
    if kind != Kind::Visited && kind != Kind::Shape && rng.gen_bool(0.25) {
        let second = mutate(rng, &m.plan, &m.map, &m.config, Kind::Visited)?;
        m.plan = second.plan;
        m.expected.insert(ConstraintFamily::Visited);
    }
    Some(m)
}
