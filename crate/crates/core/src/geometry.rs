//! Continuous robot states, dynamics models and motion primitives.
//!
//! Two vehicles are supported: a planar car `(x, y, θ)` driven at constant
//! forward speed with bounded yaw rate, and a UAV `(x, y, z, θ, v_xy)` with
//! bounded planar acceleration, climb rate and yaw rate. Propagation is closed
//! form for both.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Which vehicle a state, model or table belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Car3,
    Uav5,
}

impl ModelKind {
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::Car3 => 3,
            ModelKind::Uav5 => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            3 => Some(ModelKind::Car3),
            5 => Some(ModelKind::Uav5),
            _ => None,
        }
    }

    /// Number of position dimensions the heuristic and collision checker use.
    pub fn position_dims(self) -> usize {
        match self {
            ModelKind::Car3 => 2,
            ModelKind::Uav5 => 3,
        }
    }
}

/// A continuous state. Headings are kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum State {
    Car3 { x: f64, y: f64, theta: f64 },
    Uav5 { x: f64, y: f64, z: f64, theta: f64, v: f64 },
}

impl State {
    pub fn car(x: f64, y: f64, theta: f64) -> Self {
        State::Car3 {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn uav(x: f64, y: f64, z: f64, theta: f64, v: f64) -> Self {
        State::Uav5 {
            x,
            y,
            z,
            theta: wrap_angle(theta),
            v,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            State::Car3 { .. } => ModelKind::Car3,
            State::Uav5 { .. } => ModelKind::Uav5,
        }
    }

    /// Position padded to three components (`z = 0` for the car).
    pub fn position(&self) -> [f64; 3] {
        match *self {
            State::Car3 { x, y, .. } => [x, y, 0.0],
            State::Uav5 { x, y, z, .. } => [x, y, z],
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            State::Car3 { theta, .. } | State::Uav5 { theta, .. } => theta,
        }
    }

    pub fn speed(&self) -> Option<f64> {
        match *self {
            State::Car3 { .. } => None,
            State::Uav5 { v, .. } => Some(v),
        }
    }

    /// Bit pattern of every component, used for exact-identity lookups.
    pub fn bits(&self) -> [u64; 5] {
        match *self {
            State::Car3 { x, y, theta } => [x.to_bits(), y.to_bits(), theta.to_bits(), 0, 0],
            State::Uav5 { x, y, z, theta, v } => [
                x.to_bits(),
                y.to_bits(),
                z.to_bits(),
                theta.to_bits(),
                v.to_bits(),
            ],
        }
    }

    pub fn position_distance(&self, other: &State) -> f64 {
        let a = self.position();
        let b = other.position();
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }
}

/// Wraps an angle into `[0, 2π)` using floor-mod.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta - TAU * (theta / TAU).floor();
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Unsigned angular difference in `[0, π]`.
pub fn angdiff(a: f64, b: f64) -> f64 {
    // |a - b| keeps the result bitwise symmetric in its arguments
    let d = wrap_angle((a - b).abs());
    d.min(TAU - d)
}

/// Signed angular difference `b - a` in `(-π, π]`.
pub fn signed_angdiff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(b - a);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Per-dimension weights of the state metric. Position weight applies to
/// every position axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub position: f64,
    pub heading: f64,
    pub speed: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            position: 1.0,
            heading: 1.0,
            speed: 1.0,
        }
    }
}

impl MetricWeights {
    pub fn position_only() -> Self {
        Self {
            position: 1.0,
            heading: 0.0,
            speed: 0.0,
        }
    }
}

/// Weighted euclidean distance between two states of the same kind.
pub fn distance(a: &State, b: &State, w: &MetricWeights) -> Result<f64, GeometryError> {
    if a.kind() != b.kind() {
        return Err(GeometryError::KindMismatch {
            left: a.kind(),
            right: b.kind(),
        });
    }
    Ok(metric(a, b, w))
}

/// Same as [`distance`] without the kind check; mismatched kinds are infinitely far.
pub(crate) fn metric(a: &State, b: &State, w: &MetricWeights) -> f64 {
    match (*a, *b) {
        (
            State::Car3 { x, y, theta },
            State::Car3 {
                x: x2,
                y: y2,
                theta: t2,
            },
        ) => {
            let dx = w.position * (x - x2);
            let dy = w.position * (y - y2);
            let dt = w.heading * angdiff(theta, t2);
            (dx * dx + dy * dy + dt * dt).sqrt()
        }
        (
            State::Uav5 { x, y, z, theta, v },
            State::Uav5 {
                x: x2,
                y: y2,
                z: z2,
                theta: t2,
                v: v2,
            },
        ) => {
            let dx = w.position * (x - x2);
            let dy = w.position * (y - y2);
            let dz = w.position * (z - z2);
            let dt = w.heading * angdiff(theta, t2);
            let dv = w.speed * (v - v2);
            (dx * dx + dy * dy + dz * dz + dt * dt + dv * dv).sqrt()
        }
        _ => f64::INFINITY,
    }
}

/// Configuration of `s2` relative to `s`.
///
/// Car: `[Δx, Δy, Δθ]` with the offset expressed in the body frame of `s`.
/// UAV: `[Δx, Δy, Δz, Δθ, v(s), v(s2)]`; speeds stay absolute because the
/// reachable set depends on them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelConfig {
    pub kind: ModelKind,
    values: [f64; 6],
}

impl RelConfig {
    pub fn car(dx: f64, dy: f64, dtheta: f64) -> Self {
        Self {
            kind: ModelKind::Car3,
            values: [dx, dy, dtheta, 0.0, 0.0, 0.0],
        }
    }

    pub fn uav(dx: f64, dy: f64, dz: f64, dtheta: f64, v_from: f64, v_to: f64) -> Self {
        Self {
            kind: ModelKind::Uav5,
            values: [dx, dy, dz, dtheta, v_from, v_to],
        }
    }

    pub fn dims(&self) -> usize {
        match self.kind {
            ModelKind::Car3 => 3,
            ModelKind::Uav5 => 6,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.dims()]
    }

    /// Body-frame position offset, padded with `z = 0` for the car.
    pub fn offset(&self) -> [f64; 3] {
        match self.kind {
            ModelKind::Car3 => [self.values[0], self.values[1], 0.0],
            ModelKind::Uav5 => [self.values[0], self.values[1], self.values[2]],
        }
    }

    pub fn dtheta(&self) -> f64 {
        match self.kind {
            ModelKind::Car3 => self.values[2],
            ModelKind::Uav5 => self.values[3],
        }
    }

    pub fn speeds(&self) -> Option<(f64, f64)> {
        match self.kind {
            ModelKind::Car3 => None,
            ModelKind::Uav5 => Some((self.values[4], self.values[5])),
        }
    }
}

pub fn relative_config(s: &State, s2: &State) -> Result<RelConfig, GeometryError> {
    if s.kind() != s2.kind() {
        return Err(GeometryError::KindMismatch {
            left: s.kind(),
            right: s2.kind(),
        });
    }
    let (sin, cos) = s.theta().sin_cos();
    Ok(relative_config_with(s, s2, sin, cos))
}

/// Relative configuration with the heading trigonometry of `s` precomputed.
pub(crate) fn relative_config_with(s: &State, s2: &State, sin: f64, cos: f64) -> RelConfig {
    let p = s.position();
    let q = s2.position();
    let wx = q[0] - p[0];
    let wy = q[1] - p[1];
    let bx = cos * wx + sin * wy;
    let by = -sin * wx + cos * wy;
    let dtheta = signed_angdiff(s.theta(), s2.theta());
    match (*s, *s2) {
        (State::Uav5 { v, .. }, State::Uav5 { v: v2, .. }) => {
            RelConfig::uav(bx, by, q[2] - p[2], dtheta, v, v2)
        }
        _ => RelConfig::car(bx, by, dtheta),
    }
}

/// Inverse of [`relative_config`]: places `rel` in the frame of `origin`.
/// For the UAV the resulting speed is `rel`'s second speed.
pub fn compose(origin: &State, rel: &RelConfig) -> Result<State, GeometryError> {
    if origin.kind() != rel.kind {
        return Err(GeometryError::KindMismatch {
            left: origin.kind(),
            right: rel.kind,
        });
    }
    let (sin, cos) = origin.theta().sin_cos();
    let p = origin.position();
    let o = rel.offset();
    let x = p[0] + cos * o[0] - sin * o[1];
    let y = p[1] + sin * o[0] + cos * o[1];
    let theta = origin.theta() + rel.dtheta();
    Ok(match rel.speeds() {
        None => State::car(x, y, theta),
        Some((_, v_to)) => State::uav(x, y, p[2] + o[2], theta, v_to),
    })
}

/// A control held constant for the duration of a primitive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControlInput {
    Car { omega: f64 },
    Uav { accel: f64, climb: f64, omega: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub control: ControlInput,
    pub duration: f64,
    /// Poses at every sub-step after the source; the last one is the endpoint.
    pub samples: Vec<State>,
    pub cost: f64,
}

impl MotionPrimitive {
    pub fn endpoint(&self) -> &State {
        self.samples.last().expect("primitive without samples")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarParams {
    pub speed: f64,
    pub omega_max: f64,
}

impl CarParams {
    /// Unit forward speed with a minimum turning radius of three cells.
    pub fn for_cell_size(cell_size: f64) -> Self {
        let speed = 1.0;
        Self {
            speed,
            omega_max: speed / (3.0 * cell_size),
        }
    }
}

impl Default for CarParams {
    fn default() -> Self {
        Self::for_cell_size(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UavParams {
    pub v_min: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub vz_max: f64,
    pub omega_max: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            v_min: 0.5,
            v_max: 3.0,
            a_max: 1.0,
            vz_max: 0.5,
            omega_max: PI / 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dynamics {
    Car(CarParams),
    Uav(UavParams),
}

const BOUND_SLACK: f64 = 1e-12;

/// Vehicle dynamics together with its motion-primitive control set.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsModel {
    dynamics: Dynamics,
    control_set: Vec<ControlInput>,
    primitive_duration: f64,
    substep: f64,
}

impl DynamicsModel {
    /// Car with the five yaw rates `{-ω, -ω/2, 0, ω/2, ω}`.
    pub fn car(params: CarParams, primitive_duration: f64, substep: f64) -> Self {
        let w = params.omega_max;
        let control_set = [-w, -w / 2.0, 0.0, w / 2.0, w]
            .into_iter()
            .map(|omega| ControlInput::Car { omega })
            .collect();
        Self {
            dynamics: Dynamics::Car(params),
            control_set,
            primitive_duration,
            substep,
        }
    }

    /// UAV with the 3×3×3 grid over acceleration, climb rate and yaw rate.
    pub fn uav(params: UavParams, primitive_duration: f64, substep: f64) -> Self {
        let mut control_set = Vec::with_capacity(27);
        for accel in [-params.a_max, 0.0, params.a_max] {
            for climb in [-params.vz_max, 0.0, params.vz_max] {
                for omega in [-params.omega_max, 0.0, params.omega_max] {
                    control_set.push(ControlInput::Uav {
                        accel,
                        climb,
                        omega,
                    });
                }
            }
        }
        Self {
            dynamics: Dynamics::Uav(params),
            control_set,
            primitive_duration,
            substep,
        }
    }

    pub fn default_car() -> Self {
        Self::car(CarParams::default(), 1.0, 0.1)
    }

    pub fn default_uav() -> Self {
        Self::uav(UavParams::default(), 1.0, 0.1)
    }

    pub fn from_dynamics(dynamics: Dynamics, primitive_duration: f64, substep: f64) -> Self {
        match dynamics {
            Dynamics::Car(p) => Self::car(p, primitive_duration, substep),
            Dynamics::Uav(p) => Self::uav(p, primitive_duration, substep),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.dynamics {
            Dynamics::Car(_) => ModelKind::Car3,
            Dynamics::Uav(_) => ModelKind::Uav5,
        }
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn branching(&self) -> usize {
        self.control_set.len()
    }

    pub fn control_set(&self) -> &[ControlInput] {
        &self.control_set
    }

    pub fn primitive_duration(&self) -> f64 {
        self.primitive_duration
    }

    pub fn substep(&self) -> f64 {
        self.substep
    }

    /// Upper bound on the horizontal distance covered by one primitive.
    pub fn max_step_length(&self) -> f64 {
        match self.dynamics {
            Dynamics::Car(p) => p.speed * self.primitive_duration,
            Dynamics::Uav(p) => p.v_max * self.primitive_duration,
        }
    }

    /// Upper bound on the vertical distance covered by one primitive.
    pub fn max_climb(&self) -> f64 {
        match self.dynamics {
            Dynamics::Car(_) => 0.0,
            Dynamics::Uav(p) => p.vz_max * self.primitive_duration,
        }
    }

    /// Speed bounds for the UAV, `None` for the car.
    pub fn speed_bounds(&self) -> Option<(f64, f64)> {
        match self.dynamics {
            Dynamics::Car(_) => None,
            Dynamics::Uav(p) => Some((p.v_min, p.v_max)),
        }
    }

    /// Checks that `s` is of this model's kind and within its speed bounds.
    pub fn check_state(&self, s: &State) -> Result<(), GeometryError> {
        if s.kind() != self.kind() {
            return Err(GeometryError::KindMismatch {
                left: self.kind(),
                right: s.kind(),
            });
        }
        if let (Dynamics::Uav(p), Some(v)) = (self.dynamics, s.speed()) {
            if v < p.v_min - BOUND_SLACK || v > p.v_max + BOUND_SLACK {
                return Err(GeometryError::InvalidState(format!(
                    "speed {v} outside [{}, {}]",
                    p.v_min, p.v_max
                )));
            }
        }
        Ok(())
    }

    fn check_control(&self, u: &ControlInput) -> Result<(), GeometryError> {
        match (self.dynamics, *u) {
            (Dynamics::Car(p), ControlInput::Car { omega }) => {
                if omega.abs() > p.omega_max + BOUND_SLACK || !omega.is_finite() {
                    return Err(GeometryError::InvalidControl(format!(
                        "yaw rate {omega} exceeds {}",
                        p.omega_max
                    )));
                }
            }
            (
                Dynamics::Uav(p),
                ControlInput::Uav {
                    accel,
                    climb,
                    omega,
                },
            ) => {
                if accel.abs() > p.a_max + BOUND_SLACK
                    || climb.abs() > p.vz_max + BOUND_SLACK
                    || omega.abs() > p.omega_max + BOUND_SLACK
                {
                    return Err(GeometryError::InvalidControl(format!(
                        "control {u:?} outside bounds"
                    )));
                }
            }
            _ => {
                return Err(GeometryError::InvalidControl(
                    "control does not match the model kind".into(),
                ))
            }
        }
        Ok(())
    }

    /// Integrates `u` from `s` for `dt` seconds.
    pub fn propagate(&self, s: &State, u: &ControlInput, dt: f64) -> Result<State, GeometryError> {
        if !(dt > 0.0) {
            return Err(GeometryError::InvalidDuration(dt));
        }
        self.check_control(u)?;
        if s.kind() != self.kind() {
            return Err(GeometryError::KindMismatch {
                left: self.kind(),
                right: s.kind(),
            });
        }
        Ok(self.propagate_unchecked(s, u, dt))
    }

    pub(crate) fn propagate_unchecked(&self, s: &State, u: &ControlInput, dt: f64) -> State {
        match (self.dynamics, *s, *u) {
            (Dynamics::Car(p), State::Car3 { x, y, theta }, ControlInput::Car { omega }) => {
                let (dx, dy) = planar_segment(theta, p.speed, 0.0, omega, dt);
                State::car(x + dx, y + dy, theta + omega * dt)
            }
            (
                Dynamics::Uav(p),
                State::Uav5 { x, y, z, theta, v },
                ControlInput::Uav {
                    accel,
                    climb,
                    omega,
                },
            ) => {
                let v0 = v.clamp(p.v_min, p.v_max);
                // Time until the speed saturates, after which it stays constant.
                let t_sat = if accel > 0.0 {
                    (p.v_max - v0) / accel
                } else if accel < 0.0 {
                    (p.v_min - v0) / accel
                } else {
                    f64::INFINITY
                };
                let t1 = t_sat.clamp(0.0, dt);
                let (dx1, dy1) = planar_segment(theta, v0, accel, omega, t1);
                let v1 = (v0 + accel * t1).clamp(p.v_min, p.v_max);
                let theta1 = theta + omega * t1;
                let (dx2, dy2) = planar_segment(theta1, v1, 0.0, omega, dt - t1);
                State::uav(
                    x + dx1 + dx2,
                    y + dy1 + dy2,
                    z + climb * dt,
                    theta + omega * dt,
                    v1,
                )
            }
            _ => *s,
        }
    }

    /// Builds the primitive for `u` applied at `s`, sampled every sub-step.
    pub fn primitive(&self, s: &State, u: &ControlInput) -> MotionPrimitive {
        let duration = self.primitive_duration;
        let steps = ((duration / self.substep) - 1e-9).ceil().max(1.0) as usize;
        let mut samples = Vec::with_capacity(steps);
        let mut cost = 0.0;
        let mut prev = *s;
        for k in 1..=steps {
            let t = if k == steps {
                duration
            } else {
                k as f64 * self.substep
            };
            let next = self.propagate_unchecked(s, u, t);
            cost += prev.position_distance(&next);
            samples.push(next);
            prev = next;
        }
        MotionPrimitive {
            control: *u,
            duration,
            samples,
            cost,
        }
    }

    /// All primitives out of `s`, one per control, without collision checking.
    pub fn successors(&self, s: &State) -> Vec<(State, MotionPrimitive)> {
        self.control_set
            .iter()
            .map(|u| {
                let prim = self.primitive(s, u);
                (*prim.endpoint(), prim)
            })
            .collect()
    }

    /// Endpoints only, in control-set order.
    pub fn successor_endpoints<'a>(&'a self, s: &'a State) -> impl Iterator<Item = State> + 'a {
        self.control_set
            .iter()
            .map(move |u| self.propagate_unchecked(s, u, self.primitive_duration))
    }
}

/// Planar displacement over `tau` seconds starting at heading `theta` with
/// speed `v + accel·t` and yaw rate `omega`.
fn planar_segment(theta: f64, v: f64, accel: f64, omega: f64, tau: f64) -> (f64, f64) {
    if tau <= 0.0 {
        return (0.0, 0.0);
    }
    if omega.abs() < 1e-9 {
        let dist = v * tau + 0.5 * accel * tau * tau;
        let (s, c) = theta.sin_cos();
        return (dist * c, dist * s);
    }
    let (s0, c0) = theta.sin_cos();
    let (s1, c1) = (theta + omega * tau).sin_cos();
    let v1 = v + accel * tau;
    let w2 = omega * omega;
    let dx = (v1 * s1 - v * s0) / omega + accel * (c1 - c0) / w2;
    let dy = (-v1 * c1 + v * c0) / omega + accel * (s1 - s0) / w2;
    (dx, dy)
}
