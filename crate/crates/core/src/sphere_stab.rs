//! Closed loops on the sphere: the gradient feedback of the basic potential,
//! the synergistic hybrid feedback over a warped family, and the disturbance
//! processes used to probe both.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hybrid::{simulate, Clock, HybridArc, HybridState, HybridSystem};
use crate::manifold::{distance_to_antipodes, project_tangent, retract};
use crate::synergy::SynergisticFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    /// Random offsets drawn uniformly from the closed ball of radius `magnitude`.
    Measurement,
    /// Offsets that pull the measurement onto the nearest undesired critical
    /// point of the basic potential, clipped to `magnitude`.
    Adversarial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    pub magnitude: f64,
    /// Hold time of each disturbance value, in seconds.
    pub update_period: f64,
    pub seed: u64,
}

impl DisturbanceSpec {
    /// Hold period of ten default steps.
    pub fn new(kind: DisturbanceKind, magnitude: f64, seed: u64) -> Self {
        Self {
            kind,
            magnitude,
            update_period: 10.0 * crate::hybrid::DEFAULT_DT,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereLoopConfig {
    pub family: SynergisticFamily,
    pub c0: f64,
    pub c1: f64,
    pub q0: usize,
    pub disturbance: Option<DisturbanceSpec>,
}

impl SphereLoopConfig {
    pub fn new(family: SynergisticFamily) -> Self {
        Self {
            family,
            c0: 1.0,
            c1: 1.0,
            q0: 1,
            disturbance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gains must be positive (c0 = {}, c1 = {})",
                self.c0, self.c1
            )));
        }
        self.family.check_index(self.q0)?;
        if let Some(d) = &self.disturbance {
            if !(d.magnitude >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "disturbance magnitude must be nonnegative, got {}",
                    d.magnitude
                )));
            }
            if !(d.update_period > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "disturbance update period must be positive, got {}",
                    d.update_period
                )));
            }
        }
        Ok(())
    }
}

/// Point on the sphere, logic index, and the currently held measurement offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereState {
    pub x: DVector<f64>,
    pub q: usize,
    pub noise: DVector<f64>,
}

impl SphereState {
    pub fn new(x: DVector<f64>, q: usize) -> Self {
        let noise = DVector::zeros(x.len());
        Self { x, q, noise }
    }

    pub fn measured(&self) -> DVector<f64> {
        &self.x + &self.noise
    }
}

impl HybridState for SphereState {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        Self {
            x: &self.x + &d.x * h,
            q: self.q,
            noise: self.noise.clone(),
        }
    }

    fn components(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.x.iter().copied().collect();
        c.push(self.q as f64);
        c.extend(self.noise.iter());
        c
    }

    fn component_names(&self) -> Vec<String> {
        let n = self.x.len();
        let mut c: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        c.push("q".into());
        c.extend((0..n).map(|i| format!("n{i}")));
        c
    }
}

/// Held disturbance value for the hold period containing `step`.
fn held_disturbance(
    family: &SynergisticFamily,
    spec: &DisturbanceSpec,
    dt: f64,
    step: usize,
    x: &DVector<f64>,
    current: &DVector<f64>,
) -> DVector<f64> {
    let period = ((spec.update_period / dt).round() as usize).max(1);
    if !step.is_multiple_of(period) {
        return current.clone();
    }
    match spec.kind {
        DisturbanceKind::Measurement => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((step / period) as u64);
            ball_sample(&mut rng, x.len(), spec.magnitude)
        }
        DisturbanceKind::Adversarial => adversarial_offset(family, x, spec.magnitude),
    }
}

/// Uniform sample from the closed ball of radius `rho` in ℝ^dim.
pub fn ball_sample<R: Rng + ?Sized>(rng: &mut R, dim: usize, rho: f64) -> DVector<f64> {
    let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = g.norm();
    if norm < 1e-12 || rho == 0.0 {
        return DVector::zeros(dim);
    }
    let radius = rho * rng.random::<f64>().powf(1.0 / dim as f64);
    g * (radius / norm)
}

/// Nearest point of the union of unit spheres of the nonzero eigenspaces of
/// `M`, i.e. the nearest undesired critical point of the basic potential.
pub fn nearest_undesired_critical(family: &SynergisticFamily, x: &DVector<f64>) -> DVector<f64> {
    let spectrum = family.basic().spectrum();
    let null = spectrum.group_of(0);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for (g, members) in spectrum.groups().iter().enumerate() {
        if g == null {
            continue;
        }
        let mut p = DVector::zeros(x.len());
        for &i in members {
            let v = spectrum.eigenvector(i);
            p += v * v.dot(x);
        }
        let norm = p.norm();
        let c = if norm > 1e-12 {
            p / norm
        } else {
            spectrum.eigenvector(members[0]).clone()
        };
        let d = (x - &c).norm();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, c));
        }
    }
    best.expect("basic potential has a nonzero eigenvalue").1
}

/// `-(x - c)` clipped to length `alpha`, with `c` the nearest undesired
/// critical point.
pub fn adversarial_offset(family: &SynergisticFamily, x: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let c = nearest_undesired_critical(family, x);
    let mut n = c - x;
    let norm = n.norm();
    if norm > alpha {
        n *= alpha / norm;
    }
    n
}

/// `ẋ = -2 c₀ Π(x) Π(x_m) M x_m` with `x_m = x + n`.
#[derive(Debug, Clone)]
pub struct ContinuousLoop {
    cfg: SphereLoopConfig,
    dt: f64,
}

/// `ẋ = -c₁ Π(x) Π(x_m) ∇U(x_m, q)`, jumping to the smallest minimizing
/// index when `μ_U(x_m, q) > δ(q)`.
#[derive(Debug, Clone)]
pub struct HybridLoop {
    cfg: SphereLoopConfig,
    dt: f64,
}

/// Builds the gradient loop of the basic potential; `dt` fixes the
/// disturbance hold grid.
pub fn continuous_loop(cfg: &SphereLoopConfig, dt: f64) -> Result<ContinuousLoop> {
    cfg.validate()?;
    Ok(ContinuousLoop { cfg: cfg.clone(), dt })
}

pub fn hybrid_loop(cfg: &SphereLoopConfig, dt: f64) -> Result<HybridLoop> {
    cfg.validate()?;
    Ok(HybridLoop { cfg: cfg.clone(), dt })
}

fn hold(cfg: &SphereLoopConfig, dt: f64, clock: Clock, s: &SphereState) -> SphereState {
    match &cfg.disturbance {
        None => s.clone(),
        Some(spec) => SphereState {
            noise: held_disturbance(&cfg.family, spec, dt, clock.step, &s.x, &s.noise),
            ..s.clone()
        },
    }
}

fn project_state(s: SphereState) -> Result<SphereState> {
    Ok(SphereState { x: retract(s.x)?, ..s })
}

impl HybridSystem for ContinuousLoop {
    type State = SphereState;

    fn flow(&self, _: Clock, s: &SphereState) -> SphereState {
        let xm = s.measured();
        let basic = self.cfg.family.basic();
        let kappa = project_tangent(&xm, &basic.gradient(&xm)) * (-self.cfg.c0);
        SphereState {
            x: project_tangent(&s.x, &kappa),
            q: s.q,
            noise: DVector::zeros(s.x.len()),
        }
    }

    fn in_jump_set(&self, _: Clock, _: &SphereState) -> bool {
        false
    }

    fn jump(&self, _: Clock, s: &SphereState) -> SphereState {
        s.clone()
    }

    fn project(&self, s: SphereState) -> Result<SphereState> {
        project_state(s)
    }

    fn zeno_cap(&self) -> usize {
        self.cfg.family.len()
    }

    fn sample_and_hold(&self, clock: Clock, s: &SphereState) -> SphereState {
        hold(&self.cfg, self.dt, clock, s)
    }
}

impl HybridSystem for HybridLoop {
    type State = SphereState;

    fn flow(&self, _: Clock, s: &SphereState) -> SphereState {
        let xm = s.measured();
        let kappa = self.cfg.family.tangent_grad(&xm, s.q) * (-self.cfg.c1);
        SphereState {
            x: project_tangent(&s.x, &kappa),
            q: s.q,
            noise: DVector::zeros(s.x.len()),
        }
    }

    fn in_jump_set(&self, _: Clock, s: &SphereState) -> bool {
        let f = &self.cfg.family;
        f.synergy_gap(&s.measured(), s.q) > f.delta(s.q)
    }

    fn jump(&self, _: Clock, s: &SphereState) -> SphereState {
        SphereState {
            q: self.cfg.family.argmin_index(&s.measured()),
            ..s.clone()
        }
    }

    fn project(&self, s: SphereState) -> Result<SphereState> {
        project_state(s)
    }

    fn zeno_cap(&self) -> usize {
        self.cfg.family.len()
    }

    fn sample_and_hold(&self, clock: Clock, s: &SphereState) -> SphereState {
        hold(&self.cfg, self.dt, clock, s)
    }
}

/// Adds `U`, `mu_U` and `dist` (distance to `{r, -r}`) columns, all at the
/// true state.
pub fn add_sphere_monitors(arc: &mut HybridArc<SphereState>, family: &SynergisticFamily) {
    let r = family.basic().reference().as_vector().clone();
    arc.add_monitor("U", |s| family.eval(&s.state.x, s.state.q));
    arc.add_monitor("mu_U", |s| family.synergy_gap(&s.state.x, s.state.q));
    arc.add_monitor("dist", |s| distance_to_antipodes(&s.state.x, &r));
}

pub fn run_continuous(
    cfg: &SphereLoopConfig,
    x0: DVector<f64>,
    horizon: f64,
    dt: f64,
) -> Result<HybridArc<SphereState>> {
    let sys = continuous_loop(cfg, dt)?;
    let mut arc = simulate(&sys, SphereState::new(x0, cfg.q0), horizon, dt)?;
    add_sphere_monitors(&mut arc, &cfg.family);
    Ok(arc)
}

pub fn run_hybrid(cfg: &SphereLoopConfig, x0: DVector<f64>, horizon: f64, dt: f64) -> Result<HybridArc<SphereState>> {
    let sys = hybrid_loop(cfg, dt)?;
    let mut arc = simulate(&sys, SphereState::new(x0, cfg.q0), horizon, dt)?;
    add_sphere_monitors(&mut arc, &cfg.family);
    Ok(arc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub jumps: usize,
    pub final_distance: f64,
    /// Largest distance to `{r, -r}` over the last fifth of the horizon.
    pub tail_distance: f64,
}

/// Runs the hybrid loop under measurement disturbances of each magnitude.
pub fn robustness_sweep(
    cfg: &SphereLoopConfig,
    x0: &DVector<f64>,
    rhos: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    rhos.iter()
        .map(|&rho| {
            let mut c = cfg.clone();
            c.disturbance = Some(DisturbanceSpec::new(DisturbanceKind::Measurement, rho, seed));
            let arc = run_hybrid(&c, x0.clone(), horizon, dt)?;
            let dist = arc.monitor("dist").expect("monitor added");
            let tail_start = arc.samples.iter().position(|s| s.t >= 0.8 * horizon).unwrap_or(0);
            Ok(SweepRow {
                rho,
                jumps: arc.jump_count(),
                final_distance: *dist.last().expect("nonempty"),
                tail_distance: dist[tail_start..].iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{UnitVector, DEFAULT_GROUP_TOL};
    use crate::synergy::BasicPotential;
    use nalgebra::DMatrix;

    fn family() -> SynergisticFamily {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 1.0, 2.0]));
        SynergisticFamily::new(BasicPotential::new(m, DEFAULT_GROUP_TOL).unwrap(), 0.5, 0.9).unwrap()
    }

    fn axis(i: usize) -> DVector<f64> {
        UnitVector::axis(4, i).into_inner()
    }

    #[test]
    fn equilibria_of_gradient_loop() {
        let cfg = SphereLoopConfig::new(family());
        for x0 in [axis(0), axis(1), axis(3)] {
            let arc = run_continuous(&cfg, x0.clone(), 2.0, 1e-2).unwrap();
            assert!((&arc.last().state.x - &x0).amax() < 1e-15);
        }
    }

    #[test]
    fn gradient_loop_converges_from_generic_point() {
        let cfg = SphereLoopConfig::new(family());
        let x0 = UnitVector::normalize(DVector::from_column_slice(&[0.3, 0.5, -0.4, 0.7]))
            .unwrap()
            .into_inner();
        let arc = run_continuous(&cfg, x0, 30.0, 1e-3).unwrap();
        assert!(*arc.monitor("dist").unwrap().last().unwrap() < 1e-3);
        for s in &arc.samples {
            assert!((s.state.x.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hybrid_loop_at_reference_does_nothing() {
        let cfg = SphereLoopConfig {
            q0: 4,
            ..SphereLoopConfig::new(family())
        };
        let arc = run_hybrid(&cfg, axis(0), 1.0, 1e-2).unwrap();
        assert_eq!(arc.jump_count(), 0);
        assert!(arc.samples.iter().all(|s| s.state.x == axis(0)));
    }

    #[test]
    fn hybrid_loop_escapes_critical_point() {
        let f = family();
        // (e4, q = 1) is a plain critical point of member 1
        assert!(f.tangent_grad(&axis(3), 1).norm() < 1e-12);
        let cfg = SphereLoopConfig::new(f.clone());
        let arc = run_hybrid(&cfg, axis(3), 30.0, 1e-3).unwrap();
        arc.check_time_domain().unwrap();
        assert_eq!(arc.jump_count(), 1);
        assert!(arc.is_jump(1));
        assert!(*arc.monitor("dist").unwrap().last().unwrap() < 1e-2);

        let u = arc.monitor("U").unwrap();
        for i in 1..arc.len() {
            if arc.is_jump(i) {
                let q = arc.samples[i - 1].state.q;
                assert!(u[i - 1] - u[i] > f.delta(q));
            } else {
                assert!(u[i] <= u[i - 1] + 1e-6);
            }
        }
    }

    #[test]
    fn adversarial_offset_points_at_critical_set() {
        let f = family();
        let x = UnitVector::normalize(DVector::from_column_slice(&[0.03, 1.0, 0.0, 0.02]))
            .unwrap()
            .into_inner();
        let n = adversarial_offset(&f, &x, 1.0);
        assert!((&x + &n - axis(1)).amax() < 1e-15);
        let n = adversarial_offset(&f, &x, 0.01);
        assert!((n.norm() - 0.01).abs() < 1e-15);
        assert_eq!(adversarial_offset(&f, &x, 0.0), DVector::zeros(4));
    }

    #[test]
    fn ball_samples_stay_in_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert!(ball_sample(&mut rng, 4, 0.05).norm() <= 0.05 + 1e-15);
        }
    }
}
