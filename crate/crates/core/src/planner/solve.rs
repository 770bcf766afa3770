//! Depth-first branch and bound over per-step `(displacement, mode)` choices.
//!
//! Children are explored in order of decreasing upper bound, ties in
//! canonical move order. The bound is admissible:
//!
//! * exploration: every remaining step adds at most one unvisited free cell;
//! * goal and penalties: a dynamic program over `(steps left, cell)` with the
//!   real move rules but no visited set;
//! * a joint version of the same program that credits each moving step with
//!   one new cell.
//!
//! The bound is the smaller of the two combinations.
//!
//! Two search states with the same time, position and visited set have the
//! same future, so a transposition table keyed on those prunes the costlier
//! arrival.

use std::collections::HashMap;

use super::encode::{displacement_rank, Move, ProblemInstance};
use super::plan::Plan;
use super::score::{Score, Weights};
use super::{Solution, SolveStats, SolveStatus};
use crate::error::PlanError;
use crate::world::{Cell, Displacement, Mode};

const TRANSPOSITION_LIMIT: usize = 1 << 22;

/// Sentinel for cells with no legal completion.
const UNREACHABLE: i128 = i128::MAX / 4;

/// Per-cell relaxations of the remaining-step objective, ignoring the
/// visited set. `least[k][c]`: least `penalty + W_goal dist2` over `k` legal
/// steps from `c`. `joint[k][c]`: greatest `W_exp (moving steps) - penalty -
/// W_goal dist2`, counting every moving step as reaching a new cell.
struct Relaxation {
    least: Vec<Vec<i128>>,
    joint: Vec<Vec<i128>>,
}

fn relax(inst: &ProblemInstance, w: &Weights, options: &[(Displacement, Vec<Mode>)]) -> Relaxation {
    let map = &inst.map;
    let n = map.cell_count();
    let base: Vec<i128> = map.cells().map(|p| w.goal * i128::from(p.dist2(map.goal))).collect();
    // cheapest legal move per (cell, displacement)
    let edges: Vec<Vec<(usize, i128, bool)>> = map
        .cells()
        .map(|p| {
            let gate = inst.departure[map.linear(p)];
            options
                .iter()
                .filter_map(|(d, modes)| {
                    let q = p.offset(*d);
                    let mode = modes.iter().find(|m| gate.contains(**m))?;
                    inst.is_free(q).then(|| (map.linear(q), w.step_cost(*mode, *d), !d.is_zero()))
                })
                .collect()
        })
        .collect();
    let mut least = vec![base.clone()];
    let mut joint = vec![base.iter().map(|b| -b).collect::<Vec<_>>()];
    for k in 1..=inst.config.horizon as usize {
        let (pl, pj) = (&least[k - 1], &joint[k - 1]);
        let mut l = vec![UNREACHABLE; n];
        let mut j = vec![-UNREACHABLE; n];
        for (c, out) in edges.iter().enumerate() {
            for &(q, pen, moving) in out {
                if pl[q] < UNREACHABLE {
                    l[c] = l[c].min(pen + pl[q]);
                    let gain = if moving { w.exp } else { 0 };
                    j[c] = j[c].max(gain - pen + pj[q]);
                }
            }
        }
        least.push(l);
        joint.push(j);
    }
    Relaxation { least, joint }
}

struct Frame {
    children: Vec<(Score, Move)>,
    next: usize,
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    w: Weights,
    n_free: usize,
    horizon: u32,
    relax: Relaxation,
    /// Displacement union with the modes that contain each, cheapest first.
    options: Vec<(Displacement, Vec<Mode>)>,
    zobrist: Vec<(u64, u64)>,
    occupancy: Vec<u16>,
    visited_count: usize,
    hash: (u64, u64),
    penalty: i128,
    pos: Cell,
    path: Vec<Move>,
    seen: HashMap<(u32, u32, u64, u64), i128>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<'a> Search<'a> {
    fn new(inst: &'a ProblemInstance) -> Self {
        let map = &inst.map;
        let w = Weights::from_config(&inst.config);
        let horizon = inst.config.horizon;
        let n_free = inst.blocked.iter().filter(|b| !**b).count();
        let options = inst
            .displacement_union()
            .into_iter()
            .map(|d| {
                let mut modes: Vec<Mode> = inst
                    .config
                    .allowed_modes
                    .iter()
                    .copied()
                    .filter(|&m| inst.step_sets.at(m).contains(&d))
                    .collect();
                modes.sort_by_key(|&m| (w.penalty(m), m.index()));
                modes.dedup();
                (d, modes)
            })
            .collect::<Vec<_>>();
        let relax = relax(inst, &w, &options);
        let zobrist = (0..map.cell_count() as u64)
            .map(|i| (splitmix(2 * i + 1), splitmix(2 * i + 0x5555_0000_0000)))
            .collect();
        let mut s = Self {
            inst,
            w,
            n_free,
            horizon,
            relax,
            options,
            zobrist,
            occupancy: vec![0; map.cell_count()],
            visited_count: 0,
            hash: (0, 0),
            penalty: 0,
            pos: map.start,
            path: Vec::with_capacity(horizon as usize),
            seen: HashMap::new(),
        };
        s.occupy(map.start);
        s
    }

    fn occupy(&mut self, p: Cell) {
        let i = self.inst.map.linear(p);
        if self.occupancy[i] == 0 {
            self.visited_count += 1;
            self.hash.0 ^= self.zobrist[i].0;
            self.hash.1 ^= self.zobrist[i].1;
        }
        self.occupancy[i] += 1;
    }

    fn vacate(&mut self, p: Cell) {
        let i = self.inst.map.linear(p);
        self.occupancy[i] -= 1;
        if self.occupancy[i] == 0 {
            self.visited_count -= 1;
            self.hash.0 ^= self.zobrist[i].0;
            self.hash.1 ^= self.zobrist[i].1;
        }
    }

    fn apply(&mut self, mv: Move) {
        self.pos = self.pos.offset(mv.d);
        self.occupy(self.pos);
        self.penalty += self.w.step_cost(mv.mode, mv.d);
        self.path.push(mv);
    }

    fn undo(&mut self) {
        let mv = self.path.pop().expect("undo on empty path");
        self.vacate(self.pos);
        self.penalty -= self.w.step_cost(mv.mode, mv.d);
        self.pos = Cell::new(self.pos.x - mv.d.dx, self.pos.y - mv.d.dy);
    }

    fn t(&self) -> u32 {
        self.path.len() as u32
    }

    /// Upper bound on any completion of the current node.
    fn bound_here(&self) -> Score {
        let k = self.horizon - self.t();
        let extra = (k as usize).min(self.n_free - self.visited_count);
        let cell = self.inst.map.linear(self.pos);
        let least = self.relax.least[k as usize][cell];
        if least >= UNREACHABLE {
            return Score::MIN;
        }
        let here = self.w.exp * self.visited_count as i128 - self.penalty;
        let split = here + self.w.exp * extra as i128 - least;
        let joint = here + self.relax.joint[k as usize][cell];
        Score(split.min(joint))
    }

    fn leaf_score(&self) -> Score {
        self.w.score(self.visited_count, self.pos.dist2(self.inst.map.goal), self.penalty)
    }

    /// Children of the current node with bounds above `floor`, best first.
    fn children(&mut self, floor: Option<Score>) -> Vec<(Score, Move)> {
        let gate = self.inst.departure[self.inst.map.linear(self.pos)];
        let mut out = Vec::new();
        for idx in 0..self.options.len() {
            let d = self.options[idx].0;
            let Some(&mode) = self.options[idx].1.iter().find(|m| gate.contains(**m)) else {
                continue;
            };
            if !self.inst.is_free(self.pos.offset(d)) {
                continue;
            }
            let mv = Move { d, mode };
            self.apply(mv);
            let b = self.bound_here();
            self.undo();
            if b > Score::MIN && floor.map_or(true, |f| b > f) {
                out.push((b, mv));
            }
        }
        out.sort_by(|a, b| b.0.cmp(&a.0).then(displacement_rank(a.1.d).cmp(&displacement_rank(b.1.d))));
        out
    }

    /// Returns false if an equal-or-better arrival at this state was seen.
    fn admit(&mut self) -> bool {
        let key = (self.t(), self.inst.map.linear(self.pos) as u32, self.hash.0, self.hash.1);
        match self.seen.get_mut(&key) {
            Some(best) if *best <= self.penalty => false,
            Some(best) => {
                *best = self.penalty;
                true
            }
            None => {
                if self.seen.len() < TRANSPOSITION_LIMIT {
                    self.seen.insert(key, self.penalty);
                }
                true
            }
        }
    }
}

/// Solves the instance with branch and bound.
pub fn solve(inst: &ProblemInstance) -> Result<Solution, PlanError> {
    let started = std::time::Instant::now();
    let mut s = Search::new(inst);
    let budget = inst.config.node_budget;
    let root_bound = s.bound_here();

    let mut incumbent: Option<(Score, Vec<Move>)> = None;
    let mut nodes: u64 = 1;
    let mut exhausted = false;
    let mut stack = vec![Frame { children: s.children(None), next: 0 }];

    while let Some(frame) = stack.last_mut() {
        let floor = incumbent.as_ref().map(|(sc, _)| *sc);
        if frame.next >= frame.children.len() || floor.is_some_and(|f| frame.children[frame.next].0 <= f) {
            stack.pop();
            if !s.path.is_empty() {
                s.undo();
            }
            continue;
        }
        if nodes >= budget {
            exhausted = true;
            break;
        }
        let (_, mv) = frame.children[frame.next];
        frame.next += 1;
        nodes += 1;
        s.apply(mv);
        if s.t() == s.horizon {
            let sc = s.leaf_score();
            if floor.map_or(true, |f| sc > f) {
                incumbent = Some((sc, s.path.clone()));
            }
            s.undo();
            continue;
        }
        if !s.admit() {
            s.undo();
            continue;
        }
        let children = s.children(floor);
        if children.is_empty() {
            s.undo();
        } else {
            stack.push(Frame { children, next: 0 });
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    let inc_score = incumbent.as_ref().map(|(sc, _)| *sc);
    let open_bound = if exhausted {
        stack
            .iter()
            .filter_map(|f| f.children.get(f.next).map(|c| c.0))
            .max()
    } else {
        None
    };
    let upper = match (inc_score, open_bound) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => root_bound,
    };
    let gap = match inc_score {
        Some(sc) if upper > sc => {
            let denom = sc.to_f64().abs().max(1e-9);
            (upper.to_f64() - sc.to_f64()) / denom
        }
        Some(_) => 0.0,
        None => f64::INFINITY,
    };
    let stats = SolveStats { nodes, root_bound: root_bound.to_f64(), upper_bound: upper.to_f64(), gap, seconds: elapsed };

    let make = |sc: Score, moves: &[Move], status| Solution {
        plan: Plan::from_moves(&inst.map, moves),
        score: sc,
        objective: sc.to_f64(),
        status,
        stats: stats.clone(),
    };
    match (incumbent, exhausted) {
        (Some((sc, moves)), false) => Ok(make(sc, &moves, SolveStatus::Optimal)),
        (None, false) => Err(PlanError::Infeasible),
        (Some((sc, moves)), true) if gap == 0.0 => Ok(make(sc, &moves, SolveStatus::Optimal)),
        (inc, true) => Err(PlanError::BudgetExceeded {
            incumbent: inc.map(|(sc, moves)| Box::new(make(sc, &moves, SolveStatus::Incumbent))),
            gap,
        }),
    }
}

