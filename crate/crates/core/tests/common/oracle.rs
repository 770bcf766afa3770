//! Second implementations of the control loop, written directly from the
//! closed-loop equations, for cross-checking the library.

use stride_core::governor::RolloutWrench;
use stride_core::{AdmittanceGains, AxisBounds, MoasSample};

/// One axis of the loop: `(x, v, w, z_x, z_f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopState {
    pub x: f64,
    pub v: f64,
    pub w: f64,
    pub zx: f64,
    pub zf: f64,
}

fn contact_force(env: &RolloutWrench, x: f64) -> f64 {
    match *env {
        RolloutWrench::Constant => 0.0,
        RolloutWrench::Spring { wall_position, k_env } => {
            if x > wall_position {
                k_env * (x - wall_position)
            } else {
                0.0
            }
        }
    }
}

/// One control-and-integrate step with fixed references.
pub fn step(s: LoopState, x_ref: f64, w_ref: f64, g: &AdmittanceGains, accel_max: f64, dt: f64) -> (LoopState, f64) {
    let ex = s.x - x_ref;
    let ew = s.w - w_ref;
    let a = (g.k_f * ew - g.d_d * s.v - g.k_d * ex) / g.m_d;
    let (zx, zf) = if a.abs() > accel_max { (0.0, 0.0) } else { (s.zx, s.zf) };
    let u = a - g.k_ix * zx - g.k_if * zf;
    let next = LoopState { x: s.x + dt * s.v, v: s.v + dt * u, w: s.w, zx: zx + dt * ex, zf: zf + dt * ew };
    (next, u)
}

/// Trajectory of `H + 1` states of an offline rollout.
pub fn trajectory(sample: &MoasSample, g: &AdmittanceGains, b: &AxisBounds, env: &RolloutWrench) -> Vec<LoopState> {
    let persistent = sample.w - contact_force(env, sample.x);
    let mut s = LoopState { x: sample.x, v: sample.v, w: sample.w, zx: 0.0, zf: 0.0 };
    let mut out = vec![s];
    for _ in 0..b.horizon_steps {
        let (mut n, _) = step(s, sample.x_ref, sample.w_ref, g, b.accel_max, b.dt);
        n.w = persistent + contact_force(env, n.x);
        out.push(n);
        s = n;
    }
    out
}

fn inside(s: &LoopState, b: &AxisBounds) -> bool {
    s.x.is_finite() && s.x.abs() <= b.x_max && s.v.abs() <= b.v_max && s.w.abs() <= b.w_max
}

/// Admissibility by the oracle rollout.
pub fn admissible(sample: &MoasSample, g: &AdmittanceGains, b: &AxisBounds, env: &RolloutWrench) -> bool {
    trajectory(sample, g, b, env).iter().all(|s| inside(s, b))
}

/// Free closed loop under a constant wrench for `steps` steps; returns the
/// final position.
pub fn settle(g: &AdmittanceGains, x_ref: f64, w_ref: f64, w: f64, dt: f64, steps: usize) -> f64 {
    let mut s = LoopState { x: 0.0, v: 0.0, w, zx: 0.0, zf: 0.0 };
    for _ in 0..steps {
        s = step(s, x_ref, w_ref, g, f64::INFINITY, dt).0;
    }
    s.x
}
