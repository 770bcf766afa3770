//! Reference governor backed by a sampled maximal output admissible set.
//!
//! The admissible set is built offline: every point of a 5-D grid over
//! `(x, v, x_ref, w, w_ref)` is rolled out through the governed admittance
//! loop for a finite horizon, and points whose trajectory respects the
//! position, velocity and wrench bounds are kept. Online, a query that falls
//! outside the set has its references replaced by those of the closest
//! admissible sample while its state is kept.

mod kdtree;
mod moas;

pub use kdtree::{dist2, linear_nearest, Hit, KdTree};
pub use moas::{
    build_moas, fingerprint, is_admissible, rollout, BuildSummary, MoasArtifact, MoasIndex, RolloutOutcome,
    SampleGrid, DEFAULT_SAMPLE_BUDGET,
};

use serde::{Deserialize, Serialize};

use crate::admittance::{AxisReference, DEFAULT_DT};
use crate::error::GovernorError;

/// Symmetric per-axis bounds and rollout settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBounds {
    pub x_max: f64,
    pub v_max: f64,
    pub w_max: f64,
    /// Integrator reset threshold on the admittance acceleration.
    pub accel_max: f64,
    /// Rollout length `H` in steps.
    pub horizon_steps: u32,
    pub dt: f64,
}

impl AxisBounds {
    pub fn validate(&self) -> Result<(), GovernorError> {
        let vals = [self.x_max, self.v_max, self.w_max, self.accel_max, self.dt];
        if !vals.iter().all(|v| v.is_finite() && *v > 0.0) || self.horizon_steps == 0 {
            return Err(GovernorError::InvalidParameters(format!("bounds must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Per-dimension scales for `(x, v, x_ref, w, w_ref)`.
    pub fn scales(&self) -> [f64; 5] {
        [self.x_max, self.v_max, self.x_max, self.w_max, self.w_max]
    }

    pub fn with_horizon(mut self, steps: u32) -> Self {
        self.horizon_steps = steps;
        self
    }
}

impl Default for AxisBounds {
    fn default() -> Self {
        Self { x_max: 0.1, v_max: 0.2, w_max: 20.0, accel_max: 5.0, horizon_steps: 300, dt: DEFAULT_DT }
    }
}

/// How the wrench evolves inside an offline rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RolloutWrench {
    /// The sampled wrench persists unchanged.
    #[default]
    Constant,
    /// Unilateral spring at `wall_position`; the part of the sampled wrench
    /// not explained by the spring persists as a disturbance.
    Spring { wall_position: f64, k_env: f64 },
}

impl RolloutWrench {
    pub(crate) fn spring_force(&self, x: f64) -> f64 {
        match *self {
            RolloutWrench::Constant => 0.0,
            RolloutWrench::Spring { wall_position, k_env } => k_env * (x - wall_position).max(0.0),
        }
    }
}

/// One `(x, v, x_ref, w, w_ref)` point for a single axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MoasSample {
    pub x: f64,
    pub v: f64,
    pub x_ref: f64,
    pub w: f64,
    pub w_ref: f64,
}

impl MoasSample {
    pub fn to_array(&self) -> [f64; 5] {
        [self.x, self.v, self.x_ref, self.w, self.w_ref]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { x: a[0], v: a[1], x_ref: a[2], w: a[3], w_ref: a[4] }
    }

    pub fn reference(&self) -> AxisReference {
        AxisReference { x_ref: self.x_ref, w_ref: self.w_ref }
    }

    pub fn with_reference(&self, r: AxisReference) -> Self {
        Self { x_ref: r.x_ref, w_ref: r.w_ref, ..*self }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Membership test applied by [`Governor::govern`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Membership {
    /// Inside when the nearest stored sample is within this normalized
    /// distance.
    Tolerance { tol: f64 },
    /// Inside when a rollout from the query itself is admissible. Outside
    /// queries take the references of the first of the `candidates` nearest
    /// samples that are admissible from the query's own state.
    Exact { candidates: usize },
}

/// Result of governing one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernOutcome {
    pub reference: AxisReference,
    pub modified: bool,
    /// For exact membership, whether the applied references were confirmed
    /// admissible from the query state.
    pub verified: bool,
    /// Normalized distance from the query to the sample whose references
    /// were used, or to the nearest sample when unmodified.
    pub distance: f64,
}

/// Tolerance-membership governor step: returns the query's references when
/// its nearest admissible sample is within `tol`, otherwise the nearest
/// sample's references.
pub fn govern(index: &MoasIndex, query: &MoasSample, tol: f64) -> Result<GovernOutcome, GovernorError> {
    let (hit, sample) = index.nearest_hit(query)?;
    let distance = hit.dist2.sqrt();
    if distance <= tol {
        Ok(GovernOutcome { reference: query.reference(), modified: false, verified: false, distance })
    } else {
        Ok(GovernOutcome { reference: sample.reference(), modified: true, verified: false, distance })
    }
}

/// A governor bound to an admissible-set index.
#[derive(Debug, Clone)]
pub struct Governor {
    pub index: MoasIndex,
    pub membership: Membership,
}

impl Governor {
    pub fn new(index: MoasIndex, membership: Membership) -> Self {
        Self { index, membership }
    }

    /// Governor with the index's default tolerance membership.
    pub fn with_default_tolerance(index: MoasIndex) -> Self {
        let tol = index.default_tolerance();
        Self { index, membership: Membership::Tolerance { tol } }
    }

    pub fn govern(&self, query: &MoasSample) -> Result<GovernOutcome, GovernorError> {
        self.govern_with_fallback(query, None)
    }

    /// As [`Governor::govern`]; in exact mode, when none of the nearest
    /// candidates is admissible from the query state, `previous` is tried
    /// before falling back to the unverified nearest sample.
    pub fn govern_with_fallback(
        &self,
        query: &MoasSample,
        previous: Option<AxisReference>,
    ) -> Result<GovernOutcome, GovernorError> {
        match self.membership {
            Membership::Tolerance { tol } => govern(&self.index, query, tol),
            Membership::Exact { candidates } => self.govern_exact(query, candidates.max(1), previous),
        }
    }

    fn govern_exact(
        &self,
        query: &MoasSample,
        candidates: usize,
        previous: Option<AxisReference>,
    ) -> Result<GovernOutcome, GovernorError> {
        let idx = &self.index;
        if idx.is_empty() {
            return Err(GovernorError::EmptyIndex);
        }
        if idx.admissible(query) {
            let distance = idx.nearest_hit(query)?.0.dist2.sqrt();
            return Ok(GovernOutcome { reference: query.reference(), modified: false, verified: true, distance });
        }
        let hits = idx.k_nearest(query, candidates);
        for hit in &hits {
            let r = idx.samples()[hit.index].reference();
            if idx.admissible(&query.with_reference(r)) {
                return Ok(GovernOutcome { reference: r, modified: true, verified: true, distance: hit.dist2.sqrt() });
            }
        }
        if let Some(r) = previous {
            let q = query.with_reference(r);
            if idx.admissible(&q) {
                let distance = idx.nearest_hit(&q)?.0.dist2.sqrt();
                return Ok(GovernOutcome { reference: r, modified: true, verified: true, distance });
            }
        }
        let hit = hits[0];
        Ok(GovernOutcome {
            reference: idx.samples()[hit.index].reference(),
            modified: true,
            verified: false,
            distance: hit.dist2.sqrt(),
        })
    }
}
