use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::attitude::{
    cs_continuous_controller, cs_hybrid_controller, noncs_hybrid_controller, BenchmarkProfile, ControllerKind, Gains,
    QuatFamily, ReferenceProfile, StillProfile, TrackingSetup, TrackingState, TrackingSystem,
};
use crate::error::{Error, Result};
use crate::hybrid::{simulate, HybridArc};

use super::config::{ProfileKind, ScenarioConfig};
use super::noise::noise_table;

pub const CSV_HEADER: &str = "t,j,eta_tilde,angle,omega_err_norm,q,U,mu_U,V,tau_norm";

/// Allowed increase of `V` over one flow step.
pub const FLOW_INCREASE_TOL: f64 = 1e-6;

/// Angle below which the unwinding indicator starts watching.
pub const SETTLED_ANGLE: f64 = 0.2;

pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub system: TrackingSystem,
    pub arc: HybridArc<TrackingState>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub controller: ControllerKind,
    pub jumps: usize,
    pub first_jump: Option<(f64, i32)>,
    /// First time the rotation angle drops below 0.1 rad.
    pub time_to_01: Option<f64>,
    pub max_angle: f64,
    /// First time the angle drops below [`SETTLED_ANGLE`].
    pub settle_time: Option<f64>,
    /// Largest angle after [`Self::settle_time`].
    pub max_angle_after_settle: Option<f64>,
    pub final_angle: f64,
    pub final_omega_err: f64,
    pub final_q: i32,
    /// Flow steps along which `V` rose by more than [`FLOW_INCREASE_TOL`].
    pub flow_violations: usize,
    pub max_flow_increase: f64,
    /// Smallest `V(before) - V(after) - k₁ δ(q_before)` over all jumps.
    pub min_jump_margin: Option<f64>,
    /// Largest `| |Q| - 1 |` over `Q̃` and `Q_d` at every sample.
    pub max_norm_drift: f64,
}

impl Metrics {
    /// Whether the angle exceeded π/2 after first being below [`SETTLED_ANGLE`].
    pub fn unwinding(&self) -> bool {
        self.max_angle_after_settle
            .is_some_and(|a| a > std::f64::consts::FRAC_PI_2)
    }

    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.6}"));
        vec![
            ("controller", self.controller.as_str().to_string()),
            ("jumps", self.jumps.to_string()),
            ("first_jump_t", opt(self.first_jump.map(|j| j.0))),
            (
                "first_jump_q",
                self.first_jump.map_or("none".to_string(), |j| j.1.to_string()),
            ),
            ("time_to_0.1", opt(self.time_to_01)),
            ("max_angle", format!("{:.6}", self.max_angle)),
            ("settle_time", opt(self.settle_time)),
            ("max_angle_after_settle", opt(self.max_angle_after_settle)),
            ("unwinding", self.unwinding().to_string()),
            ("final_angle", format!("{:.6e}", self.final_angle)),
            ("final_omega_err", format!("{:.6e}", self.final_omega_err)),
            ("final_q", self.final_q.to_string()),
            ("flow_violations", self.flow_violations.to_string()),
            ("max_flow_increase", format!("{:.3e}", self.max_flow_increase)),
            (
                "min_jump_margin",
                self.min_jump_margin.map_or("none".to_string(), |x| format!("{x:.6e}")),
            ),
            ("max_norm_drift", format!("{:.3e}", self.max_norm_drift)),
        ]
    }

    pub fn to_text(&self) -> String {
        self.rows().iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }
}

pub fn tracking_family(cfg: &ScenarioConfig) -> Result<QuatFamily> {
    let f = &cfg.family;
    QuatFamily::new(f.a_matrix(), f.k, f.delta_fraction, f.group_tol)
}

pub fn profile(kind: ProfileKind) -> Arc<dyn ReferenceProfile> {
    match kind {
        ProfileKind::Benchmark => Arc::new(BenchmarkProfile),
        ProfileKind::Still => Arc::new(StillProfile),
    }
}

pub fn build_system(cfg: &ScenarioConfig) -> Result<TrackingSystem> {
    cfg.validate()?;
    let setup = TrackingSetup {
        inertia: cfg.inertia(),
        gains: Gains {
            k1: cfg.gains.k1,
            k2: cfg.gains.k2,
        },
        profile: profile(cfg.reference.profile),
        noise: Arc::new(noise_table(&cfg.noise, cfg.seed, cfg.steps(), cfg.integration.dt)),
        faults: cfg.faults.windows.iter().map(|w| (w[0], w[1])).collect(),
    };
    match cfg.controller_kind()? {
        ControllerKind::CsHybrid => cs_hybrid_controller(&setup, tracking_family(cfg)?),
        ControllerKind::CsContinuous => cs_continuous_controller(&setup, tracking_family(cfg)?),
        ControllerKind::NonCsHybrid => noncs_hybrid_controller(&setup, cfg.noncs.delta),
    }
}

pub fn initial_state(cfg: &ScenarioConfig, system: &TrackingSystem) -> Result<TrackingState> {
    let q = match system.kind() {
        ControllerKind::NonCsHybrid => cfg.initial.q_noncs,
        _ => cfg.initial.q,
    };
    if !system.valid_index(q) {
        return Err(Error::InvalidIndex {
            q: q.max(0) as usize,
            max: system.quat_family().map_or(1, |f| f.len()),
        });
    }
    let omega_d = profile(cfg.reference.profile).omega(0.0);
    Ok(TrackingState::from_plant(
        &cfg.initial_quaternion()?,
        &Vector3::from(cfg.initial.omega),
        &cfg.reference_quaternion()?,
        &omega_d,
        q,
    ))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let system = build_system(cfg)?;
    let x0 = initial_state(cfg, &system)?;
    let mut arc = simulate(&system, x0, cfg.integration.horizon, cfg.integration.dt)?;
    system.add_monitors(&mut arc);
    let metrics = metrics(&system, &arc);
    Ok(ScenarioRun {
        config: cfg.clone(),
        system,
        arc,
        metrics,
    })
}

/// Runs `cfg` once per controller kind, in parallel.
pub fn run_all_controllers(cfg: &ScenarioConfig) -> Vec<(ControllerKind, Result<ScenarioRun>)> {
    ControllerKind::ALL
        .par_iter()
        .map(|&kind| {
            let mut c = cfg.clone();
            c.controller = kind.as_str().to_string();
            (kind, run_scenario(&c))
        })
        .collect()
}

pub fn metrics(system: &TrackingSystem, arc: &HybridArc<TrackingState>) -> Metrics {
    let col = |name| arc.monitor(name).expect("monitors attached");
    let angle = col("angle");
    let v = col("V");
    let s = &arc.samples;

    let first_below = |thr: f64| (0..s.len()).find(|&i| angle[i] < thr);
    let settle = first_below(SETTLED_ANGLE);

    let mut flow_violations = 0;
    let mut max_flow_increase = f64::NEG_INFINITY;
    let mut min_jump_margin: Option<f64> = None;
    for i in 1..s.len() {
        let dv = v[i] - v[i - 1];
        if arc.is_jump(i) {
            let margin = -dv - system.gains().k1 * system.delta(s[i - 1].state.q);
            min_jump_margin = Some(min_jump_margin.map_or(margin, |m| m.min(margin)));
        } else {
            max_flow_increase = max_flow_increase.max(dv);
            if dv > FLOW_INCREASE_TOL {
                flow_violations += 1;
            }
        }
    }
    let first_jump = arc.jump_indices().first().map(|&i| (s[i].t, s[i].state.q));
    let last = arc.last();
    Metrics {
        controller: system.kind(),
        jumps: arc.jump_count(),
        first_jump,
        time_to_01: first_below(0.1).map(|i| s[i].t),
        max_angle: angle.iter().copied().fold(0.0, f64::max),
        settle_time: settle.map(|i| s[i].t),
        max_angle_after_settle: settle.map(|i| angle[i..].iter().copied().fold(0.0, f64::max)),
        final_angle: last.state.angle(),
        final_omega_err: last.state.w_tilde.norm(),
        final_q: last.state.q,
        flow_violations,
        max_flow_increase,
        min_jump_margin,
        max_norm_drift: s
            .iter()
            .map(|x| {
                (x.state.q_tilde.norm() - 1.0)
                    .abs()
                    .max((x.state.q_d.norm() - 1.0).abs())
            })
            .fold(0.0, f64::max),
    }
}

/// Monitor columns in [`CSV_HEADER`] order; `j` and `q` are integers.
pub fn scenario_csv(arc: &HybridArc<TrackingState>) -> String {
    let names = [
        "eta_tilde",
        "angle",
        "omega_err_norm",
        "q",
        "U",
        "mu_U",
        "V",
        "tau_norm",
    ];
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|n| arc.monitor(n).expect("monitors attached"))
        .collect();
    let mut out = String::with_capacity(arc.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, s) in arc.samples.iter().enumerate() {
        let _ = write!(out, "{:.16e},{}", s.t, s.j);
        for (n, c) in names.iter().zip(&cols) {
            if *n == "q" {
                let _ = write!(out, ",{}", s.state.q);
            } else {
                let _ = write!(out, ",{:.16e}", c[i]);
            }
        }
        out.push('\n');
    }
    out
}

/// Side-by-side metrics of several runs over one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    pub rows: Vec<(String, Vec<String>)>,
    /// Largest difference of the flow-sample angle traces from the first run.
    pub max_angle_difference: Vec<f64>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = format!("metric,{}\n", self.names.join(","));
        for (k, vals) in &self.rows {
            let _ = writeln!(out, "{k},{}", vals.join(","));
        }
        let diffs: Vec<String> = self.max_angle_difference.iter().map(|d| format!("{d:.6e}")).collect();
        let _ = writeln!(out, "max_angle_difference,{}", diffs.join(","));
        out
    }
}

fn flow_angles(run: &ScenarioRun) -> Vec<(f64, f64)> {
    let angle = run.arc.monitor("angle").expect("monitors attached");
    // the last sample at each grid time, after any jumps
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(run.arc.len());
    for (s, a) in run.arc.samples.iter().zip(angle) {
        match out.last_mut() {
            Some(last) if last.0 == s.t => last.1 = *a,
            _ => out.push((s.t, *a)),
        }
    }
    out
}

pub fn compare_runs(runs: &[(String, &ScenarioRun)]) -> Result<Comparison> {
    let Some((_, first)) = runs.first() else {
        return Err(Error::InvalidArgument("nothing to compare".into()));
    };
    let reference = flow_angles(first);
    let mut diffs = Vec::with_capacity(runs.len());
    for (name, run) in runs {
        let trace = flow_angles(run);
        if run.arc.dt != first.arc.dt
            || trace.len() != reference.len()
            || trace.iter().zip(&reference).any(|(a, b)| a.0 != b.0)
        {
            return Err(Error::GridMismatch(format!(
                "run {name} does not share the time grid of {}",
                runs[0].0
            )));
        }
        diffs.push(
            trace
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a.1 - b.1).abs())
                .fold(0.0, f64::max),
        );
    }
    let per_run: Vec<Vec<(&'static str, String)>> = runs.iter().map(|(_, r)| r.metrics.rows()).collect();
    let rows = per_run[0]
        .iter()
        .enumerate()
        .map(|(i, (k, _))| (k.to_string(), per_run.iter().map(|r| r[i].1.clone()).collect()))
        .collect();
    Ok(Comparison {
        names: runs.iter().map(|(n, _)| n.clone()).collect(),
        rows,
        max_angle_difference: diffs,
    })
}
