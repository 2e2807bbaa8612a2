//! Fixed-step executor for hybrid systems given by a flow map, a jump map and
//! a jump-set predicate.
//!
//! At every step boundary the state is first passed through the system's
//! sample-and-hold update, then jumps are applied while the state lies in the
//! jump set, and only then one RK4 step of the flow is taken and projected
//! back onto the manifold.

pub mod arc;

pub use arc::{ArcSample, HybridArc};

use nalgebra::DVector;

use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 30.0;

/// State of a hybrid system; flow derivatives use the same type, with the
/// discrete components ignored by [`HybridState::axpy`].
pub trait HybridState: Clone {
    /// `self + h · d` on the continuous components.
    fn axpy(&self, h: f64, d: &Self) -> Self;
    fn components(&self) -> Vec<f64>;
    fn component_names(&self) -> Vec<String>;
}

impl HybridState for f64 {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        self + h * d
    }

    fn components(&self) -> Vec<f64> {
        vec![*self]
    }

    fn component_names(&self) -> Vec<String> {
        vec!["x".into()]
    }
}

impl HybridState for DVector<f64> {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        self + d * h
    }

    fn components(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    fn component_names(&self) -> Vec<String> {
        (0..self.len()).map(|i| format!("x{i}")).collect()
    }
}

/// Position on the integration grid. Within an RK4 step `t` is the stage
/// time while `step` stays the index of the step being taken, so
/// piecewise-constant inputs can be looked up by `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub t: f64,
    pub step: usize,
}

pub trait HybridSystem {
    type State: HybridState;

    fn flow(&self, clock: Clock, x: &Self::State) -> Self::State;

    fn in_jump_set(&self, clock: Clock, x: &Self::State) -> bool;

    fn jump(&self, clock: Clock, x: &Self::State) -> Self::State;

    /// Retraction onto the state manifold; errors on excessive drift.
    fn project(&self, x: Self::State) -> Result<Self::State> {
        Ok(x)
    }

    /// Largest number of consecutive jumps tolerated at one time instant.
    fn zeno_cap(&self) -> usize;

    /// Refreshes held inputs stored in the state at a step boundary.
    fn sample_and_hold(&self, _clock: Clock, x: &Self::State) -> Self::State {
        x.clone()
    }
}

/// Simulates `sys` from `x0` over `[0, horizon]` with step `dt`.
pub fn simulate<H: HybridSystem>(sys: &H, x0: H::State, horizon: f64, dt: f64) -> Result<HybridArc<H::State>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    let steps = (horizon / dt).round() as usize;
    let mut arc = HybridArc::new(dt);
    let mut x = project(sys, x0, 0.0)?;
    let mut j = 0;
    arc.samples.push(ArcSample {
        t: 0.0,
        j,
        step: 0,
        state: x.clone(),
    });
    let mut step = 0;
    loop {
        let clock = Clock {
            t: step as f64 * dt,
            step,
        };
        x = sys.sample_and_hold(clock, &x);
        arc.samples.last_mut().expect("nonempty").state = x.clone();

        let mut consecutive = 0;
        while sys.in_jump_set(clock, &x) {
            if consecutive == sys.zeno_cap() {
                return Err(Error::ZenoCap {
                    cap: sys.zeno_cap(),
                    t: clock.t,
                });
            }
            x = project(sys, sys.jump(clock, &x), clock.t)?;
            j += 1;
            consecutive += 1;
            arc.samples.push(ArcSample {
                t: clock.t,
                j,
                step,
                state: x.clone(),
            });
        }
        if step == steps {
            break;
        }
        x = project(sys, rk4_step(sys, clock, &x, dt), clock.t + dt)?;
        step += 1;
        arc.samples.push(ArcSample {
            t: step as f64 * dt,
            j,
            step,
            state: x.clone(),
        });
    }
    Ok(arc)
}

fn project<H: HybridSystem>(sys: &H, x: H::State, t: f64) -> Result<H::State> {
    sys.project(x).map_err(|e| match e {
        Error::NormDrift(drift) => Error::ProjectionDrift { drift, t },
        other => other,
    })
}

/// One classical Runge–Kutta step of the flow.
pub fn rk4_step<H: HybridSystem>(sys: &H, clock: Clock, x: &H::State, dt: f64) -> H::State {
    let half = Clock {
        t: clock.t + 0.5 * dt,
        step: clock.step,
    };
    let end = Clock {
        t: clock.t + dt,
        step: clock.step,
    };
    let k1 = sys.flow(clock, x);
    let k2 = sys.flow(half, &x.axpy(0.5 * dt, &k1));
    let k3 = sys.flow(half, &x.axpy(0.5 * dt, &k2));
    let k4 = sys.flow(end, &x.axpy(dt, &k3));
    x.axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4)
}
