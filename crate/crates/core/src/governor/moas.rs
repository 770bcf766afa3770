use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kdtree::{Hit, KdTree};
use super::{AxisBounds, MoasSample, RolloutWrench};
use crate::admittance::{governed_control, integrate_axis, AdmittanceGains, AxisState};
use crate::error::GovernorError;

/// Default cap on grid points per build.
pub const DEFAULT_SAMPLE_BUDGET: u64 = 5_000_000;

/// Outcome of one finite-horizon rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOutcome {
    /// First step at which a bound was exceeded.
    pub first_violation: Option<u32>,
    pub final_state: AxisState,
}

/// Rolls the governed loop forward `H` steps from `sample` with zero
/// integrators, checking `|x| <= x_max`, `|v| <= v_max`, `|w| <= w_max` at
/// every step `0..=H`.
pub fn rollout(
    sample: &MoasSample,
    gains: &AdmittanceGains,
    bounds: &AxisBounds,
    env: &RolloutWrench,
) -> RolloutOutcome {
    let reference = sample.reference();
    let offset = sample.w - env.spring_force(sample.x);
    let mut s = AxisState { x: sample.x, v: sample.v, w: sample.w, z_x: 0.0, z_f: 0.0 };
    for t in 0..=bounds.horizon_steps {
        if s.x.abs() > bounds.x_max || s.v.abs() > bounds.v_max || s.w.abs() > bounds.w_max || !s.x.is_finite() {
            return RolloutOutcome { first_violation: Some(t), final_state: s };
        }
        if t == bounds.horizon_steps {
            break;
        }
        let out = governed_control(&s, &reference, gains, bounds.accel_max, bounds.dt);
        let mut next = integrate_axis(&s, out.u, bounds.dt);
        next.z_x = out.z_x;
        next.z_f = out.z_f;
        next.w = offset + env.spring_force(next.x);
        s = next;
    }
    RolloutOutcome { first_violation: None, final_state: s }
}

/// Whether a rollout from `sample` never leaves the bounds.
pub fn is_admissible(sample: &MoasSample, gains: &AdmittanceGains, bounds: &AxisBounds, env: &RolloutWrench) -> bool {
    rollout(sample, gains, bounds, env).first_violation.is_none()
}

/// Per-dimension sample values for `(x, v, x_ref, w, w_ref)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub axes: [Vec<f64>; 5],
}

fn linspace(half_width: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect(),
    }
}

impl SampleGrid {
    /// Uniform grid over the bound box with `counts[i]` points per dimension.
    pub fn uniform(bounds: &AxisBounds, counts: [usize; 5]) -> Self {
        let s = bounds.scales();
        Self { axes: std::array::from_fn(|i| linspace(s[i], counts[i])) }
    }

    /// Default 11 points per dimension.
    pub fn default_for(bounds: &AxisBounds) -> Self {
        Self::uniform(bounds, [11; 5])
    }

    /// The same grid with values outside `bounds`' box dropped.
    pub fn restricted_to(&self, bounds: &AxisBounds) -> Self {
        let s = bounds.scales();
        Self {
            axes: std::array::from_fn(|i| self.axes[i].iter().copied().filter(|v| v.abs() <= s[i]).collect()),
        }
    }

    pub fn len(&self) -> u64 {
        self.axes.iter().map(|a| a.len() as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point number `i` in row-major order (last dimension fastest).
    pub fn point(&self, mut i: u64) -> MoasSample {
        let mut a = [0.0; 5];
        for d in (0..5).rev() {
            let n = self.axes[d].len() as u64;
            a[d] = self.axes[d][(i % n) as usize];
            i /= n;
        }
        MoasSample::from_array(a)
    }

    /// Normalized half-diagonal of one grid cell.
    pub fn half_cell_diagonal(&self, bounds: &AxisBounds) -> f64 {
        let s = bounds.scales();
        (0..5)
            .map(|d| {
                let a = &self.axes[d];
                if a.len() < 2 {
                    0.0
                } else {
                    let span = a[a.len() - 1] - a[0];
                    let h = span / (a.len() - 1) as f64 / s[d] / 2.0;
                    h * h
                }
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// SHA-256 over the canonical JSON of everything that determines the set.
pub fn fingerprint(gains: &AdmittanceGains, bounds: &AxisBounds, env: &RolloutWrench, grid: &SampleGrid) -> String {
    let doc = serde_json::json!({ "gains": gains, "bounds": bounds, "env": env, "grid": grid });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

/// Searchable admissible set for one axis.
#[derive(Debug, Clone)]
pub struct MoasIndex {
    samples: Vec<MoasSample>,
    tree: KdTree<5>,
    pub gains: AdmittanceGains,
    pub bounds: AxisBounds,
    pub env: RolloutWrench,
    pub grid: SampleGrid,
}

impl MoasIndex {
    /// Indexes `samples` as given; does not re-check admissibility.
    pub fn from_samples(
        samples: Vec<MoasSample>,
        gains: AdmittanceGains,
        bounds: AxisBounds,
        env: RolloutWrench,
        grid: SampleGrid,
    ) -> Self {
        let scales = bounds.scales();
        let pts = samples
            .iter()
            .map(|s| {
                let a = s.to_array();
                std::array::from_fn(|i| a[i] / scales[i])
            })
            .collect();
        Self { tree: KdTree::new(pts), samples, gains, bounds, env, grid }
    }

    pub fn samples(&self) -> &[MoasSample] {
        &self.samples
    }

    /// Normalized coordinates of the stored samples, in insertion order.
    pub fn normalized_points(&self) -> &[[f64; 5]] {
        self.tree.points()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn normalize(&self, q: &MoasSample) -> [f64; 5] {
        let a = q.to_array();
        let s = self.bounds.scales();
        std::array::from_fn(|i| a[i] / s[i])
    }

    pub fn nearest_hit(&self, query: &MoasSample) -> Result<(Hit, MoasSample), GovernorError> {
        let hit = self.tree.nearest(&self.normalize(query)).ok_or(GovernorError::EmptyIndex)?;
        Ok((hit, self.samples[hit.index]))
    }

    /// Closest stored sample under the normalized metric; ties go to the
    /// earliest stored sample.
    pub fn nearest(&self, query: &MoasSample) -> Result<MoasSample, GovernorError> {
        self.nearest_hit(query).map(|(_, s)| s)
    }

    pub fn k_nearest(&self, query: &MoasSample, k: usize) -> Vec<Hit> {
        self.tree.k_nearest(&self.normalize(query), k)
    }

    /// Rollout check under this index's gains, bounds and wrench model.
    pub fn admissible(&self, q: &MoasSample) -> bool {
        is_admissible(q, &self.gains, &self.bounds, &self.env)
    }

    pub fn default_tolerance(&self) -> f64 {
        self.grid.half_cell_diagonal(&self.bounds)
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.gains, &self.bounds, &self.env, &self.grid)
    }

    pub fn to_artifact(&self) -> MoasArtifact {
        MoasArtifact {
            fingerprint: self.fingerprint(),
            gains: self.gains,
            bounds: self.bounds,
            env: self.env,
            grid: self.grid.clone(),
            samples: self.samples.iter().map(MoasSample::to_array).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub sampled: u64,
    pub retained: u64,
    pub retained_fraction: f64,
}

/// Builds the admissible set over `grid`. Rollouts run in parallel; the
/// retained samples keep grid order regardless of worker count.
pub fn build_moas(
    gains: &AdmittanceGains,
    bounds: &AxisBounds,
    env: &RolloutWrench,
    grid: &SampleGrid,
    budget: u64,
) -> Result<(MoasIndex, BuildSummary), GovernorError> {
    gains.validate().map_err(GovernorError::InvalidParameters)?;
    bounds.validate()?;
    let total = grid.len();
    if total > budget {
        return Err(GovernorError::Budget { requested: total, budget });
    }
    let retained: Vec<MoasSample> = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let s = grid.point(i);
            is_admissible(&s, gains, bounds, env).then_some(s)
        })
        .collect();
    if retained.is_empty() {
        return Err(GovernorError::EmptySet);
    }
    let summary = BuildSummary {
        sampled: total,
        retained: retained.len() as u64,
        retained_fraction: retained.len() as f64 / total as f64,
    };
    Ok((MoasIndex::from_samples(retained, *gains, *bounds, *env, grid.clone()), summary))
}

/// On-disk form of an admissible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoasArtifact {
    pub fingerprint: String,
    pub gains: AdmittanceGains,
    pub bounds: AxisBounds,
    pub env: RolloutWrench,
    pub grid: SampleGrid,
    pub samples: Vec<[f64; 5]>,
}

impl MoasArtifact {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("artifact serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, GovernorError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Rebuilds the index, checking the stored fingerprint against its own
    /// contents and, when given, against the configuration the caller
    /// expects.
    pub fn into_index(
        self,
        expected: Option<(&AdmittanceGains, &AxisBounds, &RolloutWrench)>,
    ) -> Result<MoasIndex, GovernorError> {
        let own = fingerprint(&self.gains, &self.bounds, &self.env, &self.grid);
        if own != self.fingerprint {
            return Err(GovernorError::FingerprintMismatch { expected: own, found: self.fingerprint });
        }
        if let Some((g, b, e)) = expected {
            let want = fingerprint(g, b, e, &self.grid);
            if want != self.fingerprint {
                return Err(GovernorError::FingerprintMismatch { expected: want, found: self.fingerprint });
            }
        }
        if self.samples.is_empty() {
            return Err(GovernorError::EmptyIndex);
        }
        let samples = self.samples.into_iter().map(MoasSample::from_array).collect();
        Ok(MoasIndex::from_samples(samples, self.gains, self.bounds, self.env, self.grid))
    }
}
