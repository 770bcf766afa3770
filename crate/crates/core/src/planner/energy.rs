//! Energy per visited cell (EVC) and single-mode sweeps.

use serde::{Deserialize, Serialize};

use super::config::{ModeTable, PlanConfig};
use super::encode::{encode, step_set, terrain_gate};
use super::plan::{single_mode, Plan};
use super::solve::solve;
use crate::error::PlanError;
use crate::world::{GridMap, Mode};

/// Per-mode locomotion energy (J/m) and top speed (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub energy_per_m: ModeTable<f64>,
    pub max_velocity: ModeTable<f64>,
}

impl Default for EnergyModel {
    /// Biped and crawl per-meter energies and all three top speeds are the
    /// hardware figures. The rolling figure is a calibrated default that puts
    /// single-mode rolling between crawling and walking on the benchmark map.
    fn default() -> Self {
        Self {
            energy_per_m: ModeTable { biped: 104.0, crawl: 65.0, roll: 28.0 },
            max_velocity: ModeTable { biped: 0.1, crawl: 0.4, roll: 0.7 },
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), String> {
        for m in Mode::ALL {
            let (e, v) = (self.energy_per_m.get(m), self.max_velocity.get(m));
            if !(e.is_finite() && e > 0.0 && v.is_finite() && v > 0.0) {
                return Err(format!("{m}: energy and velocity must be positive"));
            }
        }
        Ok(())
    }
}

/// One row of an EVC report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvcRow {
    /// Mode name, or `total`.
    pub mode: String,
    pub distance_m: f64,
    pub duration_s: f64,
    pub energy_j: f64,
    pub cells_visited: usize,
    pub evc_j_per_cell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvcReport {
    /// Rows for modes used by the plan, in mode order.
    pub per_mode: Vec<EvcRow>,
    pub total: EvcRow,
}

impl EvcReport {
    pub fn evc(&self) -> f64 {
        self.total.evc_j_per_cell
    }

    /// CSV with a header row; the last row is the plan total.
    ///
    /// Per-mode rows credit each newly visited cell to the mode of the step
    /// that reached it, and report that mode's share of the total EVC
    /// (mode energy over all visited cells), so mode rows sum to the total.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,distance_m,duration_s,energy_J,cells_visited,evc_J_per_cell\n");
        for r in self.per_mode.iter().chain(std::iter::once(&self.total)) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.mode, r.distance_m, r.duration_s, r.energy_j, r.cells_visited, r.evc_j_per_cell
            ));
        }
        out
    }
}

/// Energy per visited cell of a plan.
pub fn evc(plan: &Plan, map: &GridMap, energy: &EnergyModel) -> EvcReport {
    let visited_total = plan.visited.count().max(1);
    let mut distance = ModeTable::uniform(0.0);
    let mut credited = ModeTable::uniform(0usize);
    let mut used = [false; 3];
    let mut seen = vec![plan.positions[0]];
    for (t, d) in plan.displacements.iter().enumerate() {
        let Some(mode) = plan.modes.get(t).and_then(single_mode) else { continue };
        used[mode.index()] = true;
        distance.set(mode, distance.get(mode) + f64::from(d.l1()) * map.cell_size_m);
        if let Some(&to) = plan.positions.get(t + 1) {
            if !seen.contains(&to) {
                seen.push(to);
                credited.set(mode, credited.get(mode) + 1);
            }
        }
    }
    let row = |mode: Mode| {
        let dist = distance.get(mode);
        let e = energy.energy_per_m.get(mode) * dist;
        EvcRow {
            mode: mode.name().to_string(),
            distance_m: dist,
            duration_s: dist / energy.max_velocity.get(mode),
            energy_j: e,
            cells_visited: credited.get(mode),
            evc_j_per_cell: e / visited_total as f64,
        }
    };
    let per_mode: Vec<EvcRow> = Mode::ALL.into_iter().filter(|m| used[m.index()]).map(row).collect();
    let total_energy: f64 = per_mode.iter().map(|r| r.energy_j).sum();
    let total = EvcRow {
        mode: "total".into(),
        distance_m: per_mode.iter().map(|r| r.distance_m).sum(),
        duration_s: per_mode.iter().map(|r| r.duration_s).sum(),
        energy_j: total_energy,
        cells_visited: plan.visited.count(),
        evc_j_per_cell: total_energy / visited_total as f64,
    };
    EvcReport { per_mode, total }
}

/// Smallest horizon at which some plan restricted to `mode` can end on the
/// goal, searching up to `cap` steps. Respects obstacles, bounds, terrain
/// gating and the stand rule.
pub fn min_feasible_horizon(map: &GridMap, config: &PlanConfig, mode: Mode, cap: u32) -> Option<u32> {
    let steps = step_set(mode, config.allow_stand);
    let n = map.cell_count();
    let gate_open: Vec<bool> = map
        .cells()
        .map(|p| terrain_gate(&map.terrains, config.epsilon, p).contains(mode))
        .collect();
    let mut layer = vec![false; n];
    layer[map.linear(map.start)] = true;
    let mut history: Vec<Vec<bool>> = vec![layer.clone()];
    for t in 1..=cap {
        let mut next = vec![false; n];
        for (i, _) in layer.iter().enumerate().filter(|(i, on)| **on && gate_open[*i]) {
            let p = map.cell_at(i);
            for &d in &steps {
                let q = p.offset(d);
                if map.in_bounds(q) && !map.blocked(q) {
                    next[map.linear(q)] = true;
                }
            }
        }
        if next[map.linear(map.goal)] {
            return Some(t);
        }
        // the layer sequence is eventually periodic; a repeat means never
        if next.iter().all(|v| !v) || history.contains(&next) {
            return None;
        }
        history.push(next.clone());
        layer = next;
    }
    None
}

/// Result of sweeping one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: Mode,
    pub min_feasible_t: Option<u32>,
    /// Horizon of the selected plan.
    pub horizon: Option<u32>,
    pub report: Option<EvcReport>,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.report.is_some()
    }

    pub fn evc(&self) -> Option<f64> {
        self.report.as_ref().map(EvcReport::evc)
    }
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Extra horizons tried beyond the minimum feasible one.
    pub extra_steps: u32,
    /// Largest horizon considered when searching for feasibility.
    pub horizon_cap: u32,
    /// Travel weight planned with, so that among equally scored plans the
    /// one with shorter strides is kept.
    pub distance_weight: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { extra_steps: 20, horizon_cap: 200, distance_weight: 1.0e-3 }
    }
}

/// Single-mode sweep: for each mode, the minimum feasible horizon, then the
/// goal-reaching plan of least EVC over horizons `T_min ..= T_min + extra`.
pub fn evc_sweep(
    map: &GridMap,
    base: &PlanConfig,
    energy: &EnergyModel,
    sweep: &SweepConfig,
) -> Result<Vec<SweepRow>, PlanError> {
    let mut rows = Vec::new();
    for mode in Mode::ALL {
        let mut config = base.clone().single_mode(mode);
        config.w_dist = sweep.distance_weight;
        let t_min = min_feasible_horizon(map, &config, mode, sweep.horizon_cap);
        let mut best: Option<(u32, EvcReport)> = None;
        if let Some(t_min) = t_min {
            for horizon in t_min..=t_min + sweep.extra_steps {
                let inst = match encode(map, &config.clone().with_horizon(horizon)) {
                    Ok(inst) => inst,
                    Err(PlanError::InfeasibleEncoding(_)) => break,
                    Err(e) => return Err(e),
                };
                let sol = match solve(&inst) {
                    Ok(sol) => sol,
                    Err(PlanError::BudgetExceeded { incumbent: Some(sol), .. }) => *sol,
                    Err(PlanError::Infeasible) | Err(PlanError::BudgetExceeded { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if sol.plan.final_position() != map.goal {
                    continue;
                }
                let report = evc(&sol.plan, map, energy);
                if best.as_ref().map_or(true, |(_, b)| report.evc() < b.evc()) {
                    best = Some((horizon, report));
                }
            }
        }
        rows.push(SweepRow {
            mode,
            min_feasible_t: t_min,
            horizon: best.as_ref().map(|b| b.0),
            report: best.map(|b| b.1),
        });
    }
    Ok(rows)
}

/// CSV rendering of a sweep.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "mode,status,min_feasible_T,T,distance_m,duration_s,energy_J,cells_visited,evc_J_per_cell\n",
    );
    for r in rows {
        let fmt_opt = |v: Option<u32>| v.map_or(String::new(), |v| v.to_string());
        match &r.report {
            Some(rep) => out.push_str(&format!(
                "{},feasible,{},{},{},{},{},{},{}\n",
                r.mode,
                fmt_opt(r.min_feasible_t),
                fmt_opt(r.horizon),
                rep.total.distance_m,
                rep.total.duration_s,
                rep.total.energy_j,
                rep.total.cells_visited,
                rep.total.evc_j_per_cell
            )),
            None => out.push_str(&format!("{},infeasible,{},,,,,,\n", r.mode, fmt_opt(r.min_feasible_t))),
        }
    }
    out
}
