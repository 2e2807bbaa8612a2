//! Tracking controllers closed around the error dynamics, driven by noisy
//! measurements and an optional switching-fault schedule.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::attitude::dynamics::{error_dynamics, quat_rate, xi, ReferenceProfile, TrackingError};
use crate::attitude::family::QuatFamily;
use crate::error::{Error, Result};
use crate::hybrid::{ArcSample, Clock, HybridArc, HybridState, HybridSystem};
use crate::manifold::{quat_to_rot, UnitQuaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k1: f64,
    pub k2: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self { k1: 4.0, k2: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    CsHybrid,
    NonCsHybrid,
    CsContinuous,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::CsHybrid,
        ControllerKind::NonCsHybrid,
        ControllerKind::CsContinuous,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::CsHybrid => "cs-hybrid",
            ControllerKind::NonCsHybrid => "noncs-hybrid",
            ControllerKind::CsContinuous => "cs-continuous",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown controller {s:?} (expected cs-hybrid, noncs-hybrid or cs-continuous)"
                ))
            })
    }
}

/// Held measurement corruption per integration step: `Q_m = Q ⊙ Q_n` and
/// `ω_m = ω + n_ω`. Empty tables mean exact measurements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementNoise {
    pub attitude: Vec<UnitQuaternion>,
    pub gyro: Vec<Vector3<f64>>,
}

impl MeasurementNoise {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn at(&self, step: usize) -> (UnitQuaternion, Vector3<f64>) {
        let qn = self
            .attitude
            .get(step)
            .or(self.attitude.last())
            .copied()
            .unwrap_or(UnitQuaternion::IDENTITY);
        let wn = self
            .gyro
            .get(step)
            .or(self.gyro.last())
            .copied()
            .unwrap_or_else(Vector3::zeros);
        (qn, wn)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Synergistic { family: Box<QuatFamily>, switching: bool },
    Sign { delta: f64 },
}

/// Error state `(Q_d, Q̃, ω̃)` with the logic variable `q`; `ω_d` is an
/// explicit function of time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingState {
    pub q_d: UnitQuaternion,
    pub q_tilde: UnitQuaternion,
    pub w_tilde: Vector3<f64>,
    pub q: i32,
}

impl TrackingState {
    /// Forms the error state from plant and reference states.
    pub fn from_plant(
        quat: &UnitQuaternion,
        omega: &Vector3<f64>,
        q_d: &UnitQuaternion,
        omega_d: &Vector3<f64>,
        q: i32,
    ) -> Self {
        let e = TrackingError::from_states(quat, omega, q_d, omega_d);
        Self {
            q_d: *q_d,
            q_tilde: e.q_tilde,
            w_tilde: e.w_tilde,
            q,
        }
    }

    /// Rotation angle `2 acos|η̃|`.
    pub fn angle(&self) -> f64 {
        self.q_tilde.rotation_angle()
    }
}

fn raw(v: Vector4<f64>) -> UnitQuaternion {
    UnitQuaternion {
        eta: v[0],
        eps: Vector3::new(v[1], v[2], v[3]),
    }
}

impl HybridState for TrackingState {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        Self {
            q_d: raw(self.q_d.to_vector4() + d.q_d.to_vector4() * h),
            q_tilde: raw(self.q_tilde.to_vector4() + d.q_tilde.to_vector4() * h),
            w_tilde: self.w_tilde + d.w_tilde * h,
            q: self.q,
        }
    }

    fn components(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.q_d.to_vector4().iter().copied().collect();
        c.extend(self.q_tilde.to_vector4().iter());
        c.extend(self.w_tilde.iter());
        c.push(self.q as f64);
        c
    }

    fn component_names(&self) -> Vec<String> {
        [
            "qd_eta", "qd_e1", "qd_e2", "qd_e3", "qt_eta", "qt_e1", "qt_e2", "qt_e3", "wt1", "wt2", "wt3", "q",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }
}

/// What the controller sees at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub q_tilde: UnitQuaternion,
    pub w_tilde: Vector3<f64>,
    pub w_bar_d: Vector3<f64>,
    pub omega_d: Vector3<f64>,
    pub omega_d_dot: Vector3<f64>,
}

/// Closed-loop tracking system for one of the three controllers.
#[derive(Clone)]
pub struct TrackingSystem {
    kind: ControllerKind,
    law: Law,
    j: Matrix3<f64>,
    j_inv: Matrix3<f64>,
    gains: Gains,
    profile: Arc<dyn ReferenceProfile>,
    noise: Arc<MeasurementNoise>,
    /// Open time intervals during which jumps cannot fire.
    faults: Vec<(f64, f64)>,
}

/// Plant, reference and measurement settings shared by all controllers.
#[derive(Clone)]
pub struct TrackingSetup {
    pub inertia: Matrix3<f64>,
    pub gains: Gains,
    pub profile: Arc<dyn ReferenceProfile>,
    pub noise: Arc<MeasurementNoise>,
    pub faults: Vec<(f64, f64)>,
}

fn build(setup: &TrackingSetup, kind: ControllerKind, law: Law) -> Result<TrackingSystem> {
    if !(setup.gains.k1 > 0.0 && setup.gains.k2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gains must be positive (k1 = {}, k2 = {})",
            setup.gains.k1, setup.gains.k2
        )));
    }
    let j = setup.inertia;
    let sym = (j - j.transpose()).amax();
    let j_inv = j
        .try_inverse()
        .filter(|_| sym <= 1e-12 && j.symmetric_eigenvalues().min() > 0.0)
        .ok_or_else(|| Error::InvalidArgument("inertia must be symmetric positive definite".into()))?;
    Ok(TrackingSystem {
        kind,
        law,
        j,
        j_inv,
        gains: setup.gains,
        profile: setup.profile.clone(),
        noise: setup.noise.clone(),
        faults: setup.faults.clone(),
    })
}

/// `τ = Ξ - k₁ κ₂(Q̃, q) - k₂ ω̃`, jumping to the smallest minimizer of
/// `U(Q̃, ·)` when `μ_U(Q̃, q) > δ(q)`.
pub fn cs_hybrid_controller(setup: &TrackingSetup, family: QuatFamily) -> Result<TrackingSystem> {
    build(
        setup,
        ControllerKind::CsHybrid,
        Law::Synergistic {
            family: Box::new(family),
            switching: true,
        },
    )
}

/// `τ = Ξ - k₁ q ε̃ - k₂ ω̃` with `q ∈ {-1, 1}`, flipping `q` when `q η̃ < -δ`.
pub fn noncs_hybrid_controller(setup: &TrackingSetup, delta: f64) -> Result<TrackingSystem> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "switching threshold must lie in (0, 1), got {delta}"
        )));
    }
    build(setup, ControllerKind::NonCsHybrid, Law::Sign { delta })
}

/// The synergistic feedback for a fixed `q`, with no jumps.
pub fn cs_continuous_controller(setup: &TrackingSetup, family: QuatFamily) -> Result<TrackingSystem> {
    build(
        setup,
        ControllerKind::CsContinuous,
        Law::Synergistic {
            family: Box::new(family),
            switching: false,
        },
    )
}

impl TrackingSystem {
    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn gains(&self) -> Gains {
        self.gains
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.j
    }

    pub fn quat_family(&self) -> Option<&QuatFamily> {
        match &self.law {
            Law::Synergistic { family, .. } => Some(family),
            Law::Sign { .. } => None,
        }
    }

    /// Whether `q` belongs to the controller's index set.
    pub fn valid_index(&self, q: i32) -> bool {
        match &self.law {
            Law::Synergistic { family, .. } => q >= 1 && q as usize <= family.len(),
            Law::Sign { .. } => q == 1 || q == -1,
        }
    }

    pub fn switching_frozen(&self, t: f64) -> bool {
        self.faults.iter().any(|&(a, b)| t > a && t < b)
    }

    pub fn measure(&self, clock: Clock, x: &TrackingState) -> Measurement {
        let (qn, wn) = self.noise.at(clock.step);
        let omega_d = self.profile.omega(clock.t);
        let omega_d_dot = self.profile.omega_dot(clock.t);
        let omega = x.w_tilde + quat_to_rot(&x.q_tilde).transpose() * omega_d;
        let q_tilde = x.q_tilde * qn;
        let w_bar_d = quat_to_rot(&q_tilde).transpose() * omega_d;
        Measurement {
            q_tilde,
            w_tilde: omega + wn - w_bar_d,
            w_bar_d,
            omega_d,
            omega_d_dot,
        }
    }

    /// Attitude feedback term (`κ₂` or `q ε̃`) at the measured error.
    fn attitude_feedback(&self, m: &Measurement, q: i32) -> Vector3<f64> {
        match &self.law {
            Law::Synergistic { family, .. } => family.kappa(&m.q_tilde, q as usize),
            Law::Sign { .. } => m.q_tilde.eps * q as f64,
        }
    }

    pub fn torque(&self, clock: Clock, x: &TrackingState) -> Vector3<f64> {
        let m = self.measure(clock, x);
        xi(&self.j, &m.q_tilde, &m.w_bar_d, &m.omega_d_dot)
            - self.attitude_feedback(&m, x.q) * self.gains.k1
            - m.w_tilde * self.gains.k2
    }

    /// Attitude potential of the controller at `(Q̃, q)`.
    pub fn potential(&self, quat: &UnitQuaternion, q: i32) -> f64 {
        match &self.law {
            Law::Synergistic { family, .. } => family.eval(quat, q as usize),
            Law::Sign { .. } => 2.0 * (1.0 - q as f64 * quat.eta),
        }
    }

    /// Gap of the current index to the best index at `Q̃`.
    pub fn gap(&self, quat: &UnitQuaternion, q: i32) -> f64 {
        match &self.law {
            Law::Synergistic { family, .. } => family.synergy_gap(quat, q as usize),
            Law::Sign { .. } => (-4.0 * q as f64 * quat.eta).max(0.0),
        }
    }

    /// `V = k₁ U(Q̃, q) + ½ ω̃ᵀ J ω̃` at the true state.
    pub fn lyapunov(&self, x: &TrackingState) -> f64 {
        self.gains.k1 * self.potential(&x.q_tilde, x.q) + 0.5 * x.w_tilde.dot(&(self.j * x.w_tilde))
    }

    /// Threshold on the gap at index `q`, scaled to the gap used by [`Self::gap`].
    pub fn delta(&self, q: i32) -> f64 {
        match &self.law {
            Law::Synergistic { family, .. } => family.delta(q as usize),
            Law::Sign { delta } => 4.0 * delta,
        }
    }

    /// Adds the columns `eta_tilde, angle, omega_err_norm, q, U, mu_U, V, tau_norm`.
    pub fn add_monitors(&self, arc: &mut HybridArc<TrackingState>) {
        let clock = |s: &ArcSample<TrackingState>| Clock { t: s.t, step: s.step };
        arc.add_monitor("eta_tilde", |s| s.state.q_tilde.eta);
        arc.add_monitor("angle", |s| s.state.angle());
        arc.add_monitor("omega_err_norm", |s| s.state.w_tilde.norm());
        arc.add_monitor("q", |s| s.state.q as f64);
        arc.add_monitor("U", |s| self.potential(&s.state.q_tilde, s.state.q));
        arc.add_monitor("mu_U", |s| self.gap(&s.state.q_tilde, s.state.q));
        arc.add_monitor("V", |s| self.lyapunov(&s.state));
        arc.add_monitor("tau_norm", |s| self.torque(clock(s), &s.state).norm());
    }
}

impl HybridSystem for TrackingSystem {
    type State = TrackingState;

    fn flow(&self, clock: Clock, x: &TrackingState) -> TrackingState {
        let tau = self.torque(clock, x);
        let omega_d = self.profile.omega(clock.t);
        let err = TrackingError {
            q_tilde: x.q_tilde,
            w_tilde: x.w_tilde,
            w_bar_d: quat_to_rot(&x.q_tilde).transpose() * omega_d,
        };
        let (dq, dw) = error_dynamics(&err, &self.j, &self.j_inv, &tau, &self.profile.omega_dot(clock.t));
        TrackingState {
            q_d: raw(quat_rate(&x.q_d, &omega_d)),
            q_tilde: raw(dq),
            w_tilde: dw,
            q: x.q,
        }
    }

    fn in_jump_set(&self, clock: Clock, x: &TrackingState) -> bool {
        if self.switching_frozen(clock.t) {
            return false;
        }
        match &self.law {
            Law::Synergistic { switching: false, .. } => false,
            Law::Synergistic { family, .. } => {
                let m = self.measure(clock, x);
                let q = x.q as usize;
                family.synergy_gap(&m.q_tilde, q) > family.delta(q)
            }
            Law::Sign { delta } => {
                let m = self.measure(clock, x);
                (x.q as f64) * m.q_tilde.eta < -delta
            }
        }
    }

    fn jump(&self, clock: Clock, x: &TrackingState) -> TrackingState {
        let q = match &self.law {
            Law::Synergistic { family, .. } => family.argmin_index(&self.measure(clock, x).q_tilde) as i32,
            Law::Sign { .. } => -x.q,
        };
        TrackingState { q, ..*x }
    }

    fn project(&self, x: TrackingState) -> Result<TrackingState> {
        Ok(TrackingState {
            q_d: UnitQuaternion::from_vector4(&x.q_d.to_vector4())?,
            q_tilde: UnitQuaternion::from_vector4(&x.q_tilde.to_vector4())?,
            ..x
        })
    }

    fn zeno_cap(&self) -> usize {
        match &self.law {
            Law::Synergistic { family, .. } => family.len(),
            Law::Sign { .. } => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attitude::dynamics::{rigid_body_accel, rk4_quat, BenchmarkProfile, StillProfile};
    use crate::hybrid::simulate;
    use crate::manifold::DEFAULT_GROUP_TOL;

    fn family() -> QuatFamily {
        QuatFamily::new(
            Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0)),
            0.5,
            0.9,
            DEFAULT_GROUP_TOL,
        )
        .unwrap()
    }

    fn setup(profile: Arc<dyn ReferenceProfile>) -> TrackingSetup {
        TrackingSetup {
            inertia: Matrix3::from_diagonal(&Vector3::new(0.5, 0.7, 0.3)),
            gains: Gains::default(),
            profile,
            noise: Arc::new(MeasurementNoise::none()),
            faults: Vec::new(),
        }
    }

    fn at_rest(q: i32) -> TrackingState {
        TrackingState {
            q_d: UnitQuaternion::IDENTITY,
            q_tilde: UnitQuaternion::IDENTITY,
            w_tilde: Vector3::zeros(),
            q,
        }
    }

    #[test]
    fn pure_feedforward_on_desired_set() {
        let sys = cs_hybrid_controller(&setup(Arc::new(BenchmarkProfile)), family()).unwrap();
        let clock = Clock { t: 0.0, step: 0 };
        let x = at_rest(1);
        let m = sys.measure(clock, &x);
        let ff = xi(sys.inertia(), &m.q_tilde, &m.w_bar_d, &m.omega_d_dot);
        assert_eq!(sys.torque(clock, &x), ff);
        assert!(!sys.in_jump_set(clock, &x));
    }

    #[test]
    fn desired_set_is_invariant() {
        let s = setup(Arc::new(BenchmarkProfile));
        for sys in [
            cs_hybrid_controller(&s, family()).unwrap(),
            cs_continuous_controller(&s, family()).unwrap(),
            noncs_hybrid_controller(&s, 0.1).unwrap(),
        ] {
            let arc = simulate(&sys, at_rest(1), 30.0, 1e-3).unwrap();
            assert_eq!(arc.jump_count(), 0);
            for smp in &arc.samples {
                assert!(smp.state.angle() < 1e-6 && smp.state.w_tilde.norm() < 1e-6);
            }
        }
    }

    #[test]
    fn noncs_switching_predicate() {
        let sys = noncs_hybrid_controller(&setup(Arc::new(StillProfile)), 0.1).unwrap();
        let clock = Clock { t: 0.0, step: 0 };
        let mut x = at_rest(1);
        x.q_tilde = UnitQuaternion::new(-0.2, Vector3::new((1.0f64 - 0.04).sqrt(), 0.0, 0.0)).unwrap();
        assert!(sys.in_jump_set(clock, &x));
        assert_eq!(sys.jump(clock, &x).q, -1);
        x.q_tilde = UnitQuaternion::new(0.9, Vector3::new((1.0f64 - 0.81).sqrt(), 0.0, 0.0)).unwrap();
        assert!(!sys.in_jump_set(clock, &x));
        assert!(noncs_hybrid_controller(&setup(Arc::new(StillProfile)), 1.0).is_err());
    }

    #[test]
    fn faults_freeze_switching() {
        let mut s = setup(Arc::new(StillProfile));
        s.faults = vec![(4.0, 10.0)];
        let sys = noncs_hybrid_controller(&s, 0.1).unwrap();
        let mut x = at_rest(1);
        x.q_tilde = -UnitQuaternion::IDENTITY;
        assert!(sys.in_jump_set(Clock { t: 4.0, step: 4000 }, &x));
        assert!(!sys.in_jump_set(Clock { t: 4.5, step: 4500 }, &x));
        assert!(sys.in_jump_set(Clock { t: 10.0, step: 10000 }, &x));
    }

    /// Integrates the plant and reference separately under an open-loop
    /// torque and compares the resulting errors with the error dynamics.
    #[test]
    fn error_dynamics_match_plant_and_reference() {
        let j = Matrix3::from_diagonal(&Vector3::new(0.5, 0.7, 0.3));
        let j_inv = j.try_inverse().unwrap();
        let profile = BenchmarkProfile;
        let torque = |t: f64| Vector3::new(0.3 * (1.3 * t).sin(), -0.2 * t.cos(), 0.1);
        let dt = 1e-3;
        let q0 = UnitQuaternion::normalize(&Vector4::new(0.2346, 0.9721, 0.0, 0.0)).unwrap();
        let w0 = Vector3::new(0.4, -0.3, 0.8);

        // path 1: plant and reference separately
        let (mut quat, mut omega, mut qd) = (q0, w0, UnitQuaternion::IDENTITY);
        // path 2: error dynamics directly
        let mut e = TrackingError::from_states(&q0, &w0, &qd, &profile.omega(0.0));
        for step in 0..5000 {
            let t = step as f64 * dt;
            let qv = quat.to_vector4();
            let d = |s: f64, qv: &Vector4<f64>, w: &Vector3<f64>| {
                (quat_rate(&raw(*qv), w), rigid_body_accel(&j, &j_inv, w, &torque(s)))
            };
            let (a1, b1) = d(t, &qv, &omega);
            let (a2, b2) = d(t + dt / 2.0, &(qv + a1 * dt / 2.0), &(omega + b1 * dt / 2.0));
            let (a3, b3) = d(t + dt / 2.0, &(qv + a2 * dt / 2.0), &(omega + b2 * dt / 2.0));
            let (a4, b4) = d(t + dt, &(qv + a3 * dt), &(omega + b3 * dt));
            quat = UnitQuaternion::from_vector4(&(qv + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * dt / 6.0)).unwrap();
            omega += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * dt / 6.0;
            qd = rk4_quat(&qd, |s| profile.omega(s), t, dt).unwrap();

            let g = |s: f64, qv: &Vector4<f64>, w: &Vector3<f64>| {
                let q = raw(*qv);
                let err = TrackingError {
                    q_tilde: q,
                    w_tilde: *w,
                    w_bar_d: quat_to_rot(&q).transpose() * profile.omega(s),
                };
                error_dynamics(&err, &j, &j_inv, &torque(s), &profile.omega_dot(s))
            };
            let ev = e.q_tilde.to_vector4();
            let (a1, b1) = g(t, &ev, &e.w_tilde);
            let (a2, b2) = g(t + dt / 2.0, &(ev + a1 * dt / 2.0), &(e.w_tilde + b1 * dt / 2.0));
            let (a3, b3) = g(t + dt / 2.0, &(ev + a2 * dt / 2.0), &(e.w_tilde + b2 * dt / 2.0));
            let (a4, b4) = g(t + dt, &(ev + a3 * dt), &(e.w_tilde + b3 * dt));
            e.q_tilde = UnitQuaternion::from_vector4(&(ev + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * dt / 6.0)).unwrap();
            e.w_tilde += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * dt / 6.0;
        }
        let direct = TrackingError::from_states(&quat, &omega, &qd, &profile.omega(5.0));
        assert!((direct.q_tilde.to_vector4() - e.q_tilde.to_vector4()).amax() < 1e-6);
        assert!((direct.w_tilde - e.w_tilde).amax() < 1e-6);
    }
}
