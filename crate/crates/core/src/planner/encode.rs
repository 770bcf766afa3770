//! Turns a map and configuration into a search problem: per-mode step sets,
//! per-cell departure gates from terrain, and blocked cells from obstacles.

use super::config::{ModeTable, PlanConfig};
use crate::error::PlanError;
use crate::world::{Cell, Displacement, GridMap, Mode, TerrainRegion};

/// Axis directions in canonical order: +x, -x, +y, -y.
const DIRECTIONS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Stride magnitudes available to each mode.
pub fn stride_magnitudes(mode: Mode) -> &'static [i32] {
    match mode {
        Mode::Biped => &[1],
        Mode::Crawl => &[1, 2],
        Mode::Roll => &[3],
    }
}

/// Whether a mode may hold position under the stand rule.
pub fn may_stand(mode: Mode) -> bool {
    matches!(mode, Mode::Biped | Mode::Crawl)
}

/// Canonical ordering key of a displacement: stride length, then direction.
pub fn displacement_rank(d: Displacement) -> (i32, usize) {
    let dir = DIRECTIONS
        .iter()
        .position(|&(sx, sy)| d.dx.signum() == sx && d.dy.signum() == sy)
        .unwrap_or(0);
    (d.l1(), dir)
}

/// Axis-aligned step set of a mode, in canonical order.
pub fn step_set(mode: Mode, allow_stand: bool) -> Vec<Displacement> {
    let mut out = Vec::new();
    if allow_stand && may_stand(mode) {
        out.push(Displacement::ZERO);
    }
    for &mag in stride_magnitudes(mode) {
        for (sx, sy) in DIRECTIONS {
            out.push(Displacement::new(sx * mag, sy * mag));
        }
    }
    out
}

/// A joint `(displacement, mode)` choice for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub d: Displacement,
    pub mode: Mode,
}

impl Move {
    /// Lexicographic key used for tie-breaking.
    pub fn rank(&self) -> ((i32, usize), usize) {
        (displacement_rank(self.d), self.mode.index())
    }
}

/// Bit set over modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModeMask(pub u8);

impl ModeMask {
    pub const ALL: ModeMask = ModeMask(0b111);
    pub const NONE: ModeMask = ModeMask(0);

    pub fn of(mode: Mode) -> Self {
        ModeMask(1 << mode.index())
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 & (1 << mode.index()) != 0
    }

    pub fn and(self, other: ModeMask) -> ModeMask {
        ModeMask(self.0 & other.0)
    }

    pub fn modes(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

/// Terrain gate for leaving `p`: the modes the terrain regions covering `p`
/// leave open. A cell in the `(r^2, r^2 + epsilon)` band of any region is
/// closed to every mode.
pub fn terrain_gate(terrains: &[TerrainRegion], epsilon: f64, p: Cell) -> ModeMask {
    let mut mask = ModeMask::ALL;
    for region in terrains {
        let d2 = region.dist2(p);
        let r2 = region.radius * region.radius;
        if d2 <= r2 {
            mask = mask.and(ModeMask::of(region.required_mode));
        } else if d2 < r2 + epsilon {
            return ModeMask::NONE;
        }
    }
    mask
}

/// Fully encoded planning problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub map: GridMap,
    pub config: PlanConfig,
    pub step_sets: ModeTable<Vec<Displacement>>,
    /// Modes permitted when departing each cell (terrain gate intersected with
    /// the configured mode restriction), row-major.
    pub departure: Vec<ModeMask>,
    /// Obstacle occupancy, row-major.
    pub blocked: Vec<bool>,
}

impl ProblemInstance {
    pub fn n_grid(&self) -> u32 {
        self.map.n_grid
    }

    pub fn horizon(&self) -> u32 {
        self.config.horizon
    }

    pub fn is_free(&self, p: Cell) -> bool {
        self.map.in_bounds(p) && !self.blocked[self.map.linear(p)]
    }

    /// Distinct displacements across the allowed modes, in canonical order.
    pub fn displacement_union(&self) -> Vec<Displacement> {
        let mut all: Vec<Displacement> = self
            .config
            .allowed_modes
            .iter()
            .flat_map(|&m| self.step_sets.at(m).iter().copied())
            .collect();
        all.sort_by_key(|&d| displacement_rank(d));
        all.dedup();
        all
    }

    /// Legal moves out of `p`, in canonical order.
    pub fn moves_from(&self, p: Cell) -> impl Iterator<Item = Move> + '_ {
        let gate = self.departure[self.map.linear(p)];
        let mut moves: Vec<Move> = gate
            .modes()
            .flat_map(|mode| self.step_sets.at(mode).iter().map(move |&d| Move { d, mode }))
            .filter(move |mv| self.is_free(p.offset(mv.d)))
            .collect();
        moves.sort_by_key(Move::rank);
        moves.into_iter()
    }
}

/// Builds the search problem for `map` under `config`.
pub fn encode(map: &GridMap, config: &PlanConfig) -> Result<ProblemInstance, PlanError> {
    map.validate()
        .map_err(|e| PlanError::InvalidConfig(e.to_string()))?;
    config.validate(map.n_grid)?;

    let allowed = config
        .allowed_modes
        .iter()
        .fold(ModeMask::NONE, |acc, &m| ModeMask(acc.0 | ModeMask::of(m).0));
    let step_sets = ModeTable {
        biped: step_set(Mode::Biped, config.allow_stand),
        crawl: step_set(Mode::Crawl, config.allow_stand),
        roll: step_set(Mode::Roll, config.allow_stand),
    };
    let departure = map
        .cells()
        .map(|p| terrain_gate(&map.terrains, config.epsilon, p).and(allowed))
        .collect();
    let blocked = map.cells().map(|p| map.blocked(p)).collect();
    let instance = ProblemInstance {
        map: map.clone(),
        config: config.clone(),
        step_sets,
        departure,
        blocked,
    };
    if instance.moves_from(map.start).next().is_none() {
        return Err(PlanError::InfeasibleEncoding(format!(
            "no legal move out of start {}",
            map.start
        )));
    }
    Ok(instance)
}
