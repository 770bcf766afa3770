//! Planning world: a square grid with circular terrain regions that gate the
//! locomotion mode and rectangular obstacles that may never be occupied.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::MapError;

/// Integer grid cell `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, d: Displacement) -> Self {
        Self::new(self.x + d.dx, self.y + d.dy)
    }

    /// Squared Euclidean distance in grid units.
    pub fn dist2(self, other: Cell) -> i64 {
        let dx = i64::from(self.x - other.x);
        let dy = i64::from(self.y - other.y);
        dx * dx + dy * dy
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Per-step integer displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Displacement {
    pub dx: i32,
    pub dy: i32,
}

impl Displacement {
    pub const ZERO: Self = Self { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    pub fn l1(self) -> i32 {
        self.dx.abs() + self.dy.abs()
    }

    pub fn is_zero(self) -> bool {
        self.dx == 0 && self.dy == 0
    }
}

impl From<[i32; 2]> for Displacement {
    fn from(v: [i32; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Displacement> for [i32; 2] {
    fn from(d: Displacement) -> Self {
        [d.dx, d.dy]
    }
}

/// Locomotion mode. Discriminants match the one-hot slot numbering 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Biped = 1,
    Crawl = 2,
    Roll = 3,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Biped, Mode::Crawl, Mode::Roll];

    /// Zero-based slot in one-hot vectors and per-mode arrays.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Biped => "biped",
            Mode::Crawl => "crawl",
            Mode::Roll => "roll",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "biped" | "1" => Ok(Mode::Biped),
            "crawl" | "2" => Ok(Mode::Crawl),
            "roll" | "3" => Ok(Mode::Roll),
            other => Err(format!("unknown mode `{other}` (expected biped, crawl or roll)")),
        }
    }
}

/// Circle in grid units inside which a specific mode is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainRegion {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(rename = "mode")]
    pub required_mode: Mode,
}

impl TerrainRegion {
    pub fn dist2(&self, p: Cell) -> f64 {
        let dx = f64::from(p.x) - self.center[0];
        let dy = f64::from(p.y) - self.center[1];
        dx * dx + dy * dy
    }
}

/// Closed-disk membership of a cell in a terrain region.
pub fn cell_contains(region: &TerrainRegion, p: Cell) -> bool {
    region.dist2(p) <= region.radius * region.radius
}

/// Axis-aligned rectangle with inclusive integer bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectObstacle {
    pub x_min: i32,
    pub x_max: i32,
    pub y_min: i32,
    pub y_max: i32,
}

impl RectObstacle {
    pub fn contains(&self, p: Cell) -> bool {
        self.x_min <= p.x && p.x <= self.x_max && self.y_min <= p.y && p.y <= self.y_max
    }
}

fn default_cell_size() -> f64 {
    0.5
}

/// Square planning grid. Construct through [`GridMap::new`] or [`load_map`]
/// so the invariants hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub n_grid: u32,
    #[serde(default = "default_cell_size")]
    pub cell_size_m: f64,
    pub start: Cell,
    pub goal: Cell,
    #[serde(default)]
    pub terrains: Vec<TerrainRegion>,
    #[serde(default)]
    pub obstacles: Vec<RectObstacle>,
}

impl GridMap {
    pub fn new(
        n_grid: u32,
        start: Cell,
        goal: Cell,
        terrains: Vec<TerrainRegion>,
        obstacles: Vec<RectObstacle>,
    ) -> Result<Self, MapError> {
        let map = Self {
            n_grid,
            cell_size_m: default_cell_size(),
            start,
            goal,
            terrains,
            obstacles,
        };
        map.validate()?;
        Ok(map)
    }

    /// An empty `n × n` map.
    pub fn empty(n_grid: u32, start: Cell, goal: Cell) -> Result<Self, MapError> {
        Self::new(n_grid, start, goal, Vec::new(), Vec::new())
    }

    pub fn in_bounds(&self, p: Cell) -> bool {
        let n = self.n_grid as i32;
        (0..n).contains(&p.x) && (0..n).contains(&p.y)
    }

    pub fn blocked(&self, p: Cell) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Number of cells on the grid.
    pub fn cell_count(&self) -> usize {
        (self.n_grid as usize) * (self.n_grid as usize)
    }

    /// Row-major linear index of an in-bounds cell.
    pub fn linear(&self, p: Cell) -> usize {
        p.x as usize * self.n_grid as usize + p.y as usize
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        let n = self.n_grid as usize;
        Cell::new((idx / n) as i32, (idx % n) as i32)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(move |i| self.cell_at(i))
    }

    /// Checks every map invariant.
    pub fn validate(&self) -> Result<(), MapError> {
        let invalid = |msg: String| Err(MapError::Invalid(msg));
        if self.n_grid == 0 {
            return invalid("n_grid must be positive".into());
        }
        if !(self.cell_size_m.is_finite() && self.cell_size_m > 0.0) {
            return invalid(format!("cell_size_m must be positive, got {}", self.cell_size_m));
        }
        for (name, p) in [("start", self.start), ("goal", self.goal)] {
            if !self.in_bounds(p) {
                return invalid(format!("{name} {p} outside {0}x{0} grid", self.n_grid));
            }
        }
        for (i, t) in self.terrains.iter().enumerate() {
            if !(t.radius.is_finite() && t.radius > 0.0) {
                return invalid(format!("terrain {i}: radius must be positive, got {}", t.radius));
            }
            if !t.center.iter().all(|c| c.is_finite()) {
                return invalid(format!("terrain {i}: non-finite center"));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.x_min > o.x_max || o.y_min > o.y_max {
                return invalid(format!("obstacle {i}: inverted bounds {o:?}"));
            }
            for (name, p) in [("start", self.start), ("goal", self.goal)] {
                if o.contains(p) {
                    return invalid(format!("{name} {p} lies inside obstacle {i}"));
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON map document.
pub fn load_map(document: &str) -> Result<GridMap, MapError> {
    let map: GridMap = serde_json::from_str(document)?;
    map.validate()?;
    Ok(map)
}

/// Serializes a map to its JSON document form.
pub fn save_map(map: &GridMap) -> String {
    serde_json::to_string_pretty(map).expect("map serialization is infallible")
}
