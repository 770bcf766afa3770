//! Per-axis admittance law with integral augmentation and anti-windup.
//!
//! Axes are decoupled: every gain matrix is diagonal, so one axis is a scalar
//! second-order system driven by position and wrench errors.

use serde::{Deserialize, Serialize};

/// Admittance loop rate.
pub const DEFAULT_DT: f64 = 1.0 / 300.0;

/// Diagonal gains for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceGains {
    /// Desired mass, kg.
    pub m_d: f64,
    /// Damping, N s/m.
    pub d_d: f64,
    /// Stiffness, N/m.
    pub k_d: f64,
    /// Wrench sensitivity.
    pub k_f: f64,
    /// Position integral gain.
    pub k_ix: f64,
    /// Wrench integral gain.
    pub k_if: f64,
}

impl AdmittanceGains {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.m_d, self.d_d, self.k_d, self.k_f, self.k_ix, self.k_if];
        if !all.iter().all(|v| v.is_finite()) {
            return Err("gains must be finite".into());
        }
        if self.m_d <= 0.0 {
            return Err(format!("m_d must be positive, got {}", self.m_d));
        }
        if self.d_d < 0.0 || self.k_d < 0.0 || self.k_ix < 0.0 || self.k_if < 0.0 {
            return Err("damping, stiffness and integral gains must be nonnegative".into());
        }
        Ok(())
    }
}

/// State of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisState {
    pub x: f64,
    pub v: f64,
    /// Measured wrench component.
    pub w: f64,
    /// Position error integral.
    pub z_x: f64,
    /// Wrench error integral.
    pub z_f: f64,
}

impl AxisState {
    pub fn at_rest(x: f64, w: f64) -> Self {
        Self { x, v: 0.0, w, z_x: 0.0, z_f: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisReference {
    pub x_ref: f64,
    pub w_ref: f64,
}

/// `m_d^-1 (-d_d v - k_d (x - x_ref) + k_f (w - w_ref))`
pub fn admittance_accel(state: &AxisState, reference: &AxisReference, gains: &AdmittanceGains) -> f64 {
    (-gains.d_d * state.v - gains.k_d * (state.x - reference.x_ref)
        + gains.k_f * (state.w - reference.w_ref))
        / gains.m_d
}

/// Output of one governed control evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Commanded acceleration.
    pub u: f64,
    /// Admittance acceleration before integral terms.
    pub accel: f64,
    /// Whether the integrators were reset this call.
    pub reset: bool,
    /// Integrators to carry into the next call.
    pub z_x: f64,
    pub z_f: f64,
}

/// Integral-augmented control `u = a - k_ix z_x - k_if z_f`, where `a` is the
/// admittance acceleration. Integrators reset to zero when `|a| > accel_max`;
/// the returned integrators then accumulate this step's errors over `dt`.
pub fn governed_control(
    state: &AxisState,
    reference: &AxisReference,
    gains: &AdmittanceGains,
    accel_max: f64,
    dt: f64,
) -> ControlOutput {
    let accel = admittance_accel(state, reference, gains);
    let reset = accel.abs() > accel_max;
    let (z_x, z_f) = if reset { (0.0, 0.0) } else { (state.z_x, state.z_f) };
    let u = accel - gains.k_ix * z_x - gains.k_if * z_f;
    ControlOutput {
        u,
        accel,
        reset,
        z_x: z_x + (state.x - reference.x_ref) * dt,
        z_f: z_f + (state.w - reference.w_ref) * dt,
    }
}

/// Explicit Euler step: position advances with the pre-update velocity.
pub fn integrate_axis(state: &AxisState, u: f64, dt: f64) -> AxisState {
    AxisState { x: state.x + state.v * dt, v: state.v + u * dt, ..*state }
}
