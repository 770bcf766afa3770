use serde::{Deserialize, Serialize};

use super::encode::Move;
use super::validate::ValidationReport;
use crate::error::PlanError;
use crate::world::{Cell, Displacement, GridMap, Mode};

/// Mode indicator vector `[m_1, m_2, m_3]` for one step.
pub type ModeVector = [bool; 3];

pub fn one_hot(mode: Mode) -> ModeVector {
    let mut v = [false; 3];
    v[mode.index()] = true;
    v
}

/// The active mode when exactly one indicator is set.
pub fn single_mode(v: &ModeVector) -> Option<Mode> {
    let mut active = v.iter().enumerate().filter(|(_, on)| **on);
    match (active.next(), active.next()) {
        (Some((i, _)), None) => Mode::from_index(i),
        _ => None,
    }
}

/// `n × n` visited-cell indicator matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitedGrid {
    pub n_grid: u32,
    pub cells: Vec<bool>,
}

impl VisitedGrid {
    pub fn new(n_grid: u32) -> Self {
        Self { n_grid, cells: vec![false; (n_grid as usize).pow(2)] }
    }

    /// Marks every in-grid cell of `positions`.
    pub fn from_positions(n_grid: u32, positions: &[Cell]) -> Self {
        let mut grid = Self::new(n_grid);
        for &p in positions {
            grid.set(p, true);
        }
        grid
    }

    fn index(&self, p: Cell) -> Option<usize> {
        let n = self.n_grid as i32;
        ((0..n).contains(&p.x) && (0..n).contains(&p.y))
            .then(|| p.x as usize * self.n_grid as usize + p.y as usize)
    }

    pub fn get(&self, p: Cell) -> bool {
        self.index(p).is_some_and(|i| self.cells[i])
    }

    pub fn set(&mut self, p: Cell, value: bool) {
        if let Some(i) = self.index(p) {
            self.cells[i] = value;
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|v| **v).count()
    }

    pub fn visited_cells(&self) -> Vec<Cell> {
        let n = self.n_grid as usize;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| Cell::new((i / n) as i32, (i % n) as i32))
            .collect()
    }
}

/// A time-indexed plan: `T + 1` positions, `T` displacements and mode vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub positions: Vec<Cell>,
    pub displacements: Vec<Displacement>,
    pub modes: Vec<ModeVector>,
    pub visited: VisitedGrid,
}

impl Plan {
    /// Rolls `moves` forward from `map.start`.
    pub fn from_moves(map: &GridMap, moves: &[Move]) -> Self {
        let mut positions = Vec::with_capacity(moves.len() + 1);
        positions.push(map.start);
        let mut p = map.start;
        for mv in moves {
            p = p.offset(mv.d);
            positions.push(p);
        }
        let visited = VisitedGrid::from_positions(map.n_grid, &positions);
        Self {
            positions,
            displacements: moves.iter().map(|m| m.d).collect(),
            modes: moves.iter().map(|m| one_hot(m.mode)).collect(),
            visited,
        }
    }

    pub fn horizon(&self) -> usize {
        self.displacements.len()
    }

    pub fn final_position(&self) -> Cell {
        *self.positions.last().expect("plan has at least one position")
    }

    /// Modes per step, `None` where the indicator vector is not one-hot.
    pub fn mode_sequence(&self) -> Vec<Option<Mode>> {
        self.modes.iter().map(single_mode).collect()
    }

    pub fn moves(&self) -> Option<Vec<Move>> {
        self.displacements
            .iter()
            .zip(&self.modes)
            .map(|(&d, v)| single_mode(v).map(|mode| Move { d, mode }))
            .collect()
    }
}

/// A step's mode as written in a plan file: a name, or a list of names when
/// the indicator vector is not one-hot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeEntry {
    One(Mode),
    Many(Vec<Mode>),
}

impl ModeEntry {
    fn from_vector(v: &ModeVector) -> Self {
        match single_mode(v) {
            Some(m) => ModeEntry::One(m),
            None => ModeEntry::Many(
                Mode::ALL.into_iter().filter(|m| v[m.index()]).collect(),
            ),
        }
    }

    fn to_vector(&self) -> ModeVector {
        match self {
            ModeEntry::One(m) => one_hot(*m),
            ModeEntry::Many(ms) => {
                let mut v = [false; 3];
                for m in ms {
                    v[m.index()] = true;
                }
                v
            }
        }
    }
}

/// Serialized plan, with objective and per-family validation status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub n_grid: u32,
    pub positions: Vec<Cell>,
    pub displacements: Vec<Displacement>,
    pub modes: Vec<ModeEntry>,
    /// Mode slot numbers 1..=3 per step (0 when not one-hot).
    pub mode_labels: Vec<u8>,
    pub visited: Vec<Cell>,
    pub objective: f64,
    /// Family name to violation count.
    pub validation: std::collections::BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_seconds: Option<f64>,
}

impl PlanFile {
    pub fn new(plan: &Plan, objective: f64, report: &ValidationReport) -> Self {
        Self {
            n_grid: plan.visited.n_grid,
            positions: plan.positions.clone(),
            displacements: plan.displacements.clone(),
            modes: plan.modes.iter().map(ModeEntry::from_vector).collect(),
            mode_labels: plan
                .modes
                .iter()
                .map(|v| single_mode(v).map_or(0, |m| m as u8))
                .collect(),
            visited: plan.visited.visited_cells(),
            objective,
            validation: report.family_counts(),
            optimality_gap: None,
            solve_seconds: None,
        }
    }

    pub fn to_plan(&self) -> Result<Plan, PlanError> {
        if self.modes.len() != self.displacements.len() {
            return Err(PlanError::Document(format!(
                "{} modes for {} displacements",
                self.modes.len(),
                self.displacements.len()
            )));
        }
        let mut visited = VisitedGrid::new(self.n_grid);
        for &c in &self.visited {
            if !(0..self.n_grid as i32).contains(&c.x) || !(0..self.n_grid as i32).contains(&c.y) {
                return Err(PlanError::Document(format!("visited cell {c} outside grid")));
            }
            visited.set(c, true);
        }
        Ok(Plan {
            positions: self.positions.clone(),
            displacements: self.displacements.clone(),
            modes: self.modes.iter().map(ModeEntry::to_vector).collect(),
            visited,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, PlanError> {
        Ok(serde_json::from_str(s)?)
    }
}
