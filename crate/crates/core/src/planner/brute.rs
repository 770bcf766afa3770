//! Exhaustive enumeration oracle.
//!
//! Walks every displacement sequence with its own feasibility checks against
//! the raw map, and keeps the lexicographically first optimum under the
//! `(step, displacement, mode)` order.

use rayon::prelude::*;

use super::encode::{displacement_rank, step_set, Move, ProblemInstance};
use super::plan::Plan;
use super::score::{Score, Weights};
use super::{Solution, SolveStats, SolveStatus};
use crate::error::PlanError;
use crate::world::{cell_contains, Cell, GridMap};

/// Largest enumeration the oracle accepts.
pub const ENUMERATION_GUARD: f64 = 1.0e8;

/// Upper estimate of the number of displacement sequences: the largest count
/// of in-grid displacements from any cell, raised to the horizon.
pub fn enumeration_size(inst: &ProblemInstance) -> f64 {
    let union = inst.displacement_union();
    let widest = inst
        .map
        .cells()
        .map(|p| union.iter().filter(|&&d| inst.map.in_bounds(p.offset(d))).count())
        .max()
        .unwrap_or(0);
    (widest as f64).powi(inst.config.horizon as i32)
}

/// Best legal mode for one displacement out of one cell.
#[derive(Clone, Copy)]
struct Edge {
    mv: Move,
    to: usize,
    penalty: i128,
}

struct Oracle<'a> {
    map: &'a GridMap,
    w: Weights,
    horizon: usize,
    /// Outgoing edges per linear cell, in displacement order.
    edges: Vec<Vec<Edge>>,
}

fn legal(map: &GridMap, allow_stand: bool, epsilon: f64, from: Cell, mv: Move) -> bool {
    if !allow_stand && mv.d.is_zero() {
        return false;
    }
    for region in &map.terrains {
        if cell_contains(region, from) {
            if region.required_mode != mv.mode {
                return false;
            }
        } else if region.dist2(from) < region.radius * region.radius + epsilon {
            return false;
        }
    }
    let to = from.offset(mv.d);
    map.in_bounds(to) && !map.blocked(to)
}

/// Walk state: visit multiplicities let the distinct count be maintained
/// incrementally.
struct Walk {
    counts: Vec<u32>,
    distinct: usize,
    penalty: i128,
    path: Vec<Move>,
}

impl Walk {
    fn enter(&mut self, cell: usize) {
        self.counts[cell] += 1;
        if self.counts[cell] == 1 {
            self.distinct += 1;
        }
    }

    fn leave(&mut self, cell: usize) {
        self.counts[cell] -= 1;
        if self.counts[cell] == 0 {
            self.distinct -= 1;
        }
    }
}

impl Oracle<'_> {
    fn dfs(&self, here: usize, walk: &mut Walk, best: &mut Option<(Score, Vec<Move>)>, leaves: &mut u64) {
        if walk.path.len() == self.horizon {
            *leaves += 1;
            let last = self.map.cell_at(here);
            let sc = self.w.score(walk.distinct, last.dist2(self.map.goal), walk.penalty);
            if best.as_ref().map_or(true, |(b, _)| sc > *b) {
                *best = Some((sc, walk.path.clone()));
            }
            return;
        }
        for e in &self.edges[here] {
            walk.enter(e.to);
            walk.penalty += e.penalty;
            walk.path.push(e.mv);
            self.dfs(e.to, walk, best, leaves);
            walk.path.pop();
            walk.penalty -= e.penalty;
            walk.leave(e.to);
        }
    }
}

/// Exhaustive search for a global optimum.
pub fn brute_force_solve(inst: &ProblemInstance) -> Result<Solution, PlanError> {
    let size = enumeration_size(inst);
    if size > ENUMERATION_GUARD {
        return Err(PlanError::BudgetExceeded { incumbent: None, gap: f64::INFINITY });
    }
    let started = std::time::Instant::now();
    let config = &inst.config;
    let map = &inst.map;
    let w = Weights::from_config(config);
    let mut displacements: Vec<_> = config
        .allowed_modes
        .iter()
        .flat_map(|&mode| step_set(mode, true))
        .collect();
    displacements.sort_by_key(|&d| displacement_rank(d));
    displacements.dedup();
    // the mode only enters the objective through its penalty, so the best
    // sequence uses the cheapest legal mode at every step
    let edges = map
        .cells()
        .map(|p| {
            displacements
                .iter()
                .filter_map(|&d| {
                    let mut modes: Vec<_> = config
                        .allowed_modes
                        .iter()
                        .copied()
                        .filter(|&mode| step_set(mode, true).contains(&d))
                        .filter(|&mode| legal(map, config.allow_stand, config.epsilon, p, Move { d, mode }))
                        .collect();
                    modes.sort_by_key(|&m| (w.penalty(m), m.index()));
                    modes.first().map(|&mode| Edge { mv: Move { d, mode }, to: map.linear(p.offset(d)), penalty: w.step_cost(mode, d) })
                })
                .collect()
        })
        .collect();
    let oracle = Oracle { map, w, horizon: config.horizon as usize, edges };

    let start = map.linear(map.start);
    let per_first: Vec<(Option<(Score, Vec<Move>)>, u64)> = oracle.edges[start]
        .par_iter()
        .map(|e| {
            let mut walk = Walk { counts: vec![0; map.cell_count()], distinct: 0, penalty: e.penalty, path: vec![e.mv] };
            walk.enter(start);
            walk.enter(e.to);
            let mut best = None;
            let mut leaves = 0;
            oracle.dfs(e.to, &mut walk, &mut best, &mut leaves);
            (best, leaves)
        })
        .collect();

    let leaves: u64 = per_first.iter().map(|(_, n)| n).sum();
    let mut best: Option<(Score, Vec<Move>)> = None;
    for (cand, _) in per_first {
        if let Some((sc, path)) = cand {
            if best.as_ref().map_or(true, |(b, _)| sc > *b) {
                best = Some((sc, path));
            }
        }
    }
    let (score, path) = best.ok_or(PlanError::Infeasible)?;
    Ok(Solution {
        plan: Plan::from_moves(&inst.map, &path),
        score,
        objective: score.to_f64(),
        status: SolveStatus::Optimal,
        stats: SolveStats {
            nodes: leaves,
            root_bound: score.to_f64(),
            upper_bound: score.to_f64(),
            gap: 0.0,
            seconds: started.elapsed().as_secs_f64(),
        },
    })
}
