//! Single-axis fingertip plant under the admittance loop, with a unilateral
//! spring contact and a scheduled disturbance wrench.
//!
//! The plant is a double integrator that executes the commanded
//! acceleration exactly.

use serde::{Deserialize, Serialize};

use crate::admittance::{governed_control, integrate_axis, AdmittanceGains, AxisReference, AxisState};
use crate::error::SimError;
use crate::governor::{AxisBounds, Governor, Membership, MoasIndex, MoasSample, RolloutWrench};

/// Default contact stiffness, N/m.
pub const DEFAULT_K_ENV: f64 = 2000.0;

/// One breakpoint of a piecewise-constant schedule: `value` holds from `t`
/// until the next breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint<T> {
    pub t: f64,
    #[serde(flatten)]
    pub value: T,
}

/// Value of a piecewise-constant schedule at `t`, or `None` before the first
/// breakpoint.
fn lookup<T: Copy>(schedule: &[Breakpoint<T>], t: f64) -> Option<T> {
    let k = schedule.partition_point(|b| b.t <= t);
    (k > 0).then(|| schedule[k - 1].value)
}

fn check_times<T>(schedule: &[Breakpoint<T>], what: &str) -> Result<(), SimError> {
    if schedule.iter().any(|b| !b.t.is_finite()) {
        return Err(SimError::InvalidScenario(format!("{what}: non-finite time")));
    }
    if schedule.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(SimError::InvalidScenario(format!("{what}: times must be strictly increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    pub wall_position: f64,
    pub k_env: f64,
    #[serde(default)]
    pub disturbance: Vec<Breakpoint<Wrench>>,
}

impl Default for ContactModel {
    fn default() -> Self {
        Self { wall_position: 1.0, k_env: DEFAULT_K_ENV, disturbance: Vec::new() }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.k_env >= 0.0 && self.k_env.is_finite()) {
            return Err(SimError::InvalidScenario(format!("k_env must be nonnegative, got {}", self.k_env)));
        }
        if self.wall_position.is_nan() {
            return Err(SimError::InvalidScenario("wall_position is NaN".into()));
        }
        check_times(&self.disturbance, "disturbance")
    }

    /// Scheduled disturbance at `t`; zero before the first breakpoint.
    pub fn disturbance_at(&self, t: f64) -> f64 {
        lookup(&self.disturbance, t).map_or(0.0, |d| d.w)
    }

    /// The spring part of this contact as an offline rollout model.
    pub fn rollout_wrench(&self) -> RolloutWrench {
        if self.wall_position.is_finite() && self.k_env > 0.0 {
            RolloutWrench::Spring { wall_position: self.wall_position, k_env: self.k_env }
        } else {
            RolloutWrench::Constant
        }
    }
}

/// `k_env * max(0, x - wall) + disturbance(t)`
pub fn measured_wrench(contact: &ContactModel, x: f64, t: f64) -> f64 {
    let pen = x - contact.wall_position;
    let spring = if pen > 0.0 { contact.k_env * pen } else { 0.0 };
    spring + contact.disturbance_at(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialState {
    pub x: f64,
    pub v: f64,
}

/// How the governor is engaged for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct GovernorSetting {
    pub enabled: bool,
    /// Membership test; the index's default tolerance when absent.
    #[serde(default)]
    pub membership: Option<Membership>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub gains: AdmittanceGains,
    pub bounds: AxisBounds,
    pub contact: ContactModel,
    /// Piecewise-constant `(x_ref, w_ref)`; zero before the first breakpoint.
    pub references: Vec<Breakpoint<AxisReference>>,
    pub duration: f64,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub governor: GovernorSetting,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let sc: Self = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimError::InvalidScenario(format!("duration must be positive, got {}", self.duration)));
        }
        self.gains.validate().map_err(SimError::InvalidScenario)?;
        self.bounds.validate()?;
        self.contact.validate()?;
        check_times(&self.references, "references")?;
        if self.references.iter().any(|b| !(b.value.x_ref.is_finite() && b.value.w_ref.is_finite())) {
            return Err(SimError::InvalidScenario("references must be finite".into()));
        }
        Ok(())
    }

    pub fn reference_at(&self, t: f64) -> AxisReference {
        lookup(&self.references, t).unwrap_or_default()
    }

    /// Number of integration steps; the trace has one more record.
    pub fn steps(&self) -> usize {
        (self.duration / self.bounds.dt).round() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.bounds.dt
    }

    /// Rollout wrench model matching this scenario's contact.
    pub fn rollout_wrench(&self) -> RolloutWrench {
        self.contact.rollout_wrench()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub w_meas: f64,
    pub x_ref_applied: f64,
    pub w_ref_applied: f64,
    pub u: f64,
    pub governor_modified: bool,
    pub viol_x: bool,
    pub viol_v: bool,
    pub viol_w: bool,
}

/// Bound constants for plotting next to a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub x_max: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> Result<String, SimError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(TRACE_COLUMNS)?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(s: &str) -> Result<Self, SimError> {
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != TRACE_COLUMNS {
            return Err(SimError::InvalidScenario(format!("unexpected trace header {header:?}")));
        }
        let records = r.deserialize().collect::<Result<Vec<TraceRecord>, _>>()?;
        Ok(Self { records })
    }

    pub fn modified_steps(&self) -> usize {
        self.records.iter().filter(|r| r.governor_modified).count()
    }
}

pub const TRACE_COLUMNS: [&str; 11] = [
    "t",
    "x",
    "v",
    "w_meas",
    "x_ref_applied",
    "w_ref_applied",
    "u",
    "governor_modified",
    "viol_x",
    "viol_v",
    "viol_w",
];

pub fn sidecar(bounds: &AxisBounds) -> TraceSidecar {
    TraceSidecar { x_max: bounds.x_max, v_max: bounds.v_max, w_max: bounds.w_max, dt: bounds.dt }
}

/// Simulates `scenario`. A governor must be supplied iff the scenario enables
/// one; its membership is overridden by the scenario's when given.
pub fn run_scenario(scenario: &Scenario, index: Option<&MoasIndex>) -> Result<Trace, SimError> {
    scenario.validate()?;
    let governor = match (scenario.governor.enabled, index) {
        (false, _) => None,
        (true, None) => return Err(SimError::InvalidScenario("governor enabled but no index supplied".into())),
        (true, Some(idx)) => {
            if idx.is_empty() {
                return Err(crate::error::GovernorError::EmptyIndex.into());
            }
            let membership = scenario
                .governor
                .membership
                .unwrap_or(Membership::Tolerance { tol: idx.default_tolerance() });
            Some(Governor::new(idx.clone(), membership))
        }
    };
    let b = &scenario.bounds;
    let n = scenario.steps();
    let mut records = Vec::with_capacity(n + 1);
    let x0 = scenario.initial.x;
    let mut s = AxisState { x: x0, v: scenario.initial.v, w: measured_wrench(&scenario.contact, x0, 0.0), z_x: 0.0, z_f: 0.0 };
    let mut previous: Option<AxisReference> = None;
    for k in 0..=n {
        let t = scenario.time(k);
        let scheduled = scenario.reference_at(t);
        let (applied, modified) = match &governor {
            None => (scheduled, false),
            Some(g) => {
                let q = MoasSample { x: s.x, v: s.v, x_ref: scheduled.x_ref, w: s.w, w_ref: scheduled.w_ref };
                let out = g.govern_with_fallback(&q, previous)?;
                (out.reference, out.modified)
            }
        };
        previous = Some(applied);
        let ctl = governed_control(&s, &applied, &scenario.gains, b.accel_max, b.dt);
        records.push(TraceRecord {
            t,
            x: s.x,
            v: s.v,
            w_meas: s.w,
            x_ref_applied: applied.x_ref,
            w_ref_applied: applied.w_ref,
            u: ctl.u,
            governor_modified: modified,
            viol_x: s.x.abs() > b.x_max,
            viol_v: s.v.abs() > b.v_max,
            viol_w: s.w.abs() > b.w_max,
        });
        if k < n {
            let mut next = integrate_axis(&s, ctl.u, b.dt);
            next.z_x = ctl.z_x;
            next.z_f = ctl.z_f;
            next.w = measured_wrench(&scenario.contact, next.x, scenario.time(k + 1));
            s = next;
        }
    }
    Ok(Trace { records })
}

/// Violations recomputed from the raw trace values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub first_x: Option<f64>,
    pub first_v: Option<f64>,
    pub first_w: Option<f64>,
    pub count_x: usize,
    pub count_v: usize,
    pub count_w: usize,
    /// Steps with at least one violated bound.
    pub steps_violating: usize,
    /// Whether the recorded flags equal the recomputed ones on every step.
    pub flags_consistent: bool,
}

impl ViolationReport {
    pub fn total(&self) -> usize {
        self.count_x + self.count_v + self.count_w
    }

    pub fn is_clean(&self) -> bool {
        self.total() == 0
    }
}

pub fn check_trace(trace: &Trace, bounds: &AxisBounds) -> ViolationReport {
    let mut rep = ViolationReport { flags_consistent: true, ..Default::default() };
    for r in &trace.records {
        let vx = r.x.abs() > bounds.x_max;
        let vv = r.v.abs() > bounds.v_max;
        let vw = r.w_meas.abs() > bounds.w_max;
        for (hit, first, count) in [
            (vx, &mut rep.first_x, &mut rep.count_x),
            (vv, &mut rep.first_v, &mut rep.count_v),
            (vw, &mut rep.first_w, &mut rep.count_w),
        ] {
            if hit {
                *count += 1;
                first.get_or_insert(r.t);
            }
        }
        if vx || vv || vw {
            rep.steps_violating += 1;
        }
        if (vx, vv, vw) != (r.viol_x, r.viol_v, r.viol_w) {
            rep.flags_consistent = false;
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contact(k_env: f64) -> ContactModel {
        ContactModel { wall_position: 0.0, k_env, disturbance: Vec::new() }
    }

    #[test]
    fn wrench_model() {
        assert_eq!(measured_wrench(&contact(1000.0), -0.5, 0.0), 0.0);
        assert!((measured_wrench(&contact(1000.0), 0.01, 0.0) - 10.0).abs() < 1e-12);
        let c = ContactModel {
            disturbance: vec![Breakpoint { t: 1.0, value: Wrench { w: 2.0 } }, Breakpoint { t: 2.0, value: Wrench { w: -1.0 } }],
            ..contact(0.0)
        };
        for x in [-1.0, 0.0, 3.0] {
            assert_eq!(measured_wrench(&c, x, 0.5), 0.0);
            assert_eq!(measured_wrench(&c, x, 1.0), 2.0);
            assert_eq!(measured_wrench(&c, x, 7.0), -1.0);
        }
    }

    #[test]
    fn schedule_validation() {
        let mut c = contact(1.0);
        c.disturbance = vec![Breakpoint { t: 1.0, value: Wrench { w: 0.0 } }, Breakpoint { t: 1.0, value: Wrench { w: 1.0 } }];
        assert!(c.validate().is_err());
        assert!(contact(-1.0).validate().is_err());
    }

    fn quiet() -> Scenario {
        Scenario {
            gains: AdmittanceGains { m_d: 1.0, d_d: 8.0, k_d: 16.0, k_f: -0.002, k_ix: 0.5, k_if: 0.0 },
            bounds: AxisBounds::default(),
            contact: ContactModel::default(),
            references: vec![],
            duration: 1.0,
            initial: InitialState::default(),
            governor: GovernorSetting::default(),
        }
    }

    #[test]
    fn equilibrium_trace_is_clean_and_sized() {
        let sc = quiet();
        let tr = run_scenario(&sc, None).unwrap();
        assert_eq!(tr.len(), 301);
        assert!(tr.records.iter().all(|r| r.x == 0.0 && r.v == 0.0 && !r.viol_x && !r.viol_v && !r.viol_w));
        let rep = check_trace(&tr, &sc.bounds);
        assert!(rep.is_clean() && rep.flags_consistent);
    }

    #[test]
    fn constructed_velocity_violation() {
        let b = AxisBounds::default();
        let mut tr = Trace { records: vec![] };
        for k in 0..5 {
            tr.records.push(TraceRecord {
                t: k as f64,
                x: 0.0,
                v: if k == 3 { b.v_max + 0.01 } else { 0.0 },
                w_meas: 0.0,
                x_ref_applied: 0.0,
                w_ref_applied: 0.0,
                u: 0.0,
                governor_modified: false,
                viol_x: false,
                viol_v: false,
                viol_w: false,
            });
        }
        let rep = check_trace(&tr, &b);
        assert_eq!((rep.count_v, rep.total(), rep.first_v), (1, 1, Some(3.0)));
        assert!(!rep.flags_consistent);
    }

    #[test]
    fn csv_round_trip() {
        let mut sc = quiet();
        sc.references = vec![Breakpoint { t: 0.1, value: AxisReference { x_ref: 0.05, w_ref: 0.3 } }];
        let tr = run_scenario(&sc, None).unwrap();
        let csv = tr.to_csv().unwrap();
        assert!(csv.starts_with(&TRACE_COLUMNS.join(",")));
        assert_eq!(Trace::from_csv(&csv).unwrap(), tr);
    }

    #[test]
    fn enabled_governor_needs_an_index() {
        let mut sc = quiet();
        sc.governor.enabled = true;
        assert!(run_scenario(&sc, None).is_err());
    }

    #[test]
    fn scenario_json_round_trip() {
        let mut sc = quiet();
        sc.governor = GovernorSetting { enabled: true, membership: Some(Membership::Exact { candidates: 16 }) };
        sc.contact.wall_position = 0.05;
        assert_eq!(Scenario::from_json(&sc.to_json()).unwrap(), sc);
    }
}
