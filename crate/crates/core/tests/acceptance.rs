//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synergy_core::attitude::{ControllerKind, QuatFamily};
use synergy_core::manifold::inequalities::inequality_suite;
use synergy_core::manifold::{UnitQuaternion, DEFAULT_GROUP_TOL};
use synergy_core::scenario::{run_scenario, scenario_csv, ScenarioConfig, ScenarioId, ScenarioRun};
use synergy_core::sphere_stab::{run_continuous, run_hybrid, DisturbanceKind, DisturbanceSpec, SphereLoopConfig};
use synergy_core::synergy::{
    certify_family, critical_points, random_family, BasicPotential, CriticalKind, SynergisticFamily,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sphere_family() -> SynergisticFamily {
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 1.0, 2.0]));
    SynergisticFamily::new(BasicPotential::new(m, DEFAULT_GROUP_TOL).unwrap(), 0.5, 0.9).unwrap()
}

fn quat_family() -> QuatFamily {
    QuatFamily::new(
        Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0)),
        0.5,
        0.9,
        DEFAULT_GROUP_TOL,
    )
    .unwrap()
}

fn run(id: ScenarioId, kind: ControllerKind, noise: bool) -> ScenarioRun {
    let mut cfg = ScenarioConfig::preset(id);
    cfg.controller = kind.as_str().into();
    cfg.noise.enabled = noise;
    run_scenario(&cfg).expect("scenario runs")
}

fn state_at(run: &ScenarioRun, t: f64) -> (f64, f64) {
    let s = run
        .arc
        .samples
        .iter()
        .rev()
        .find(|s| s.t <= t + 1e-9)
        .expect("sample before t");
    (s.state.angle(), s.state.w_tilde.norm())
}

fn gap_thresholds() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_synergy"))
        .arg("gap")
        .output()
        .expect("cli runs");
    let elapsed = start.elapsed().as_secs_f64();
    let text = String::from_utf8_lossy(&out.stdout);
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let q: usize = cols[0].parse().unwrap();
        let delta: f64 = cols[7].parse().unwrap();
        let expect = if q == 3 || q == 6 { 0.0275 } else { 0.0465 };
        worst = worst.max((delta - expect).abs());
        rows += 1;
    }
    outcome(
        out.status.success() && rows == 6 && worst <= 5e-4 && elapsed < 1.0,
        format!("6 indices, worst |δ - expected| = {worst:.2e}, {elapsed:.3} s"),
    )
}

fn certification() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut families = vec![quat_family().family().clone()];
    for i in 0..20 {
        let n = [2, 3][i % 2];
        let k = [0.2, 0.5, 0.7][i % 3];
        families.push(random_family(&mut rng, n, k, i % 4 == 3).unwrap());
    }
    let mut all_valid = true;
    let mut worst = f64::INFINITY;
    let mut points = 0;
    for f in &families {
        all_valid &= certify_family(f, 2000, 5).unwrap().valid;
        // direct check of the gap at every undesired critical point
        for cp in critical_points(f).unwrap() {
            if cp.kind == CriticalKind::Desired {
                continue;
            }
            let margin = f.synergy_gap(cp.point.as_vector(), cp.q) - f.delta_bar(cp.q);
            worst = worst.min(margin);
            points += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        all_valid && worst >= -1e-6 && elapsed < 60.0,
        format!("21 families, {points} undesired critical points, min μ - δ̄ = {worst:.2e}, {elapsed:.2} s"),
    )
}

fn gradients() -> Outcome {
    let f = quat_family();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let quat = UnitQuaternion::random(&mut rng);
        let q = rng.random_range(1..=f.len());
        let closed = f.grad(&quat, q);
        let chain = f.grad_chain_rule(&quat, q);
        // central differences of the closed form extended off the sphere
        let base = quat.to_vector4();
        let fd = Vector4::from_fn(|i, _| {
            let mut e = Vector4::zeros();
            e[i] = h;
            let at = |v: Vector4<f64>| {
                f.eval(
                    &UnitQuaternion {
                        eta: v[0],
                        eps: Vector3::new(v[1], v[2], v[3]),
                    },
                    q,
                )
            };
            (at(base + e) - at(base - e)) / (2.0 * h)
        });
        let scale = closed.norm().max(1e-3);
        worst = worst
            .max((closed - chain).norm() / scale)
            .max((closed - fd).norm() / scale)
            .max((chain - fd).norm() / scale);
    }
    outcome(
        worst <= 1e-5,
        format!("1000 quaternions, worst relative error {worst:.2e}"),
    )
}

fn lyapunov() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for id in [ScenarioId::A, ScenarioId::B] {
        let r = run(id, ControllerKind::CsHybrid, false);
        let m = &r.metrics;
        let jumps_ok = m.min_jump_margin.is_none_or(|x| x > 0.0);
        pass &= m.flow_violations == 0 && jumps_ok;
        detail.push(format!(
            "{id:?}: max flow increase {:.2e}, {} jumps, min drop - k1 δ = {}",
            m.max_flow_increase,
            m.jumps,
            m.min_jump_margin.map_or("n/a".into(), |x| format!("{x:.2e}"))
        ));
    }
    outcome(pass, detail.join("; "))
}

fn scenario_a() -> Outcome {
    let cs = run(ScenarioId::A, ControllerKind::CsHybrid, true);
    let cont = run(ScenarioId::A, ControllerKind::CsContinuous, true);
    let (angle, werr) = state_at(&cs, 15.0);
    let first = cs.metrics.first_jump;
    let (t_cs, t_cont) = (cs.metrics.time_to_01, cont.metrics.time_to_01);
    let slower = match (t_cs, t_cont) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => true,
        _ => false,
    };
    outcome(
        angle < 0.05 && werr < 0.05 && cs.metrics.jumps >= 1 && first.map(|j| j.1) == Some(4) && slower,
        format!(
            "t=15 angle {angle:.2e}, |ω̃| {werr:.2e}; first jump {first:?}; time to 0.1 rad: cs-hybrid {t_cs:?}, cs-continuous {t_cont:?}"
        ),
    )
}

fn scenario_c() -> Outcome {
    let noncs = run(ScenarioId::C, ControllerKind::NonCsHybrid, true);
    let cs = run(ScenarioId::C, ControllerKind::CsHybrid, true);
    let after = cs.metrics.max_angle_after_settle;
    outcome(
        noncs.metrics.unwinding() && after.is_some_and(|a| a < 0.5) && cs.metrics.final_angle < 0.05,
        format!(
            "noncs max angle after settling {:?}; cs max angle after settling {:?}, final {:.2e}",
            noncs.metrics.max_angle_after_settle, after, cs.metrics.final_angle
        ),
    )
}

fn sphere_witnesses() -> Outcome {
    let f = sphere_family();
    let x0 = DVector::from_column_slice(&[0.03, 1.0, 0.0, 0.02]).normalize();
    let mut adv = SphereLoopConfig::new(f.clone());
    adv.disturbance = Some(DisturbanceSpec::new(DisturbanceKind::Adversarial, 0.05, 1));
    let cont = run_continuous(&adv, x0.clone(), 30.0, 1e-3).unwrap();
    let min_dist = cont
        .monitor("dist")
        .unwrap()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut meas = SphereLoopConfig::new(f);
    meas.disturbance = Some(DisturbanceSpec::new(DisturbanceKind::Measurement, 1e-2, 1));
    let hyb = run_hybrid(&meas, x0, 30.0, 1e-3).unwrap();
    let final_dist = *hyb.monitor("dist").unwrap().last().unwrap();
    outcome(
        min_dist > 0.5 && final_dist < 0.05,
        format!("continuous min distance {min_dist:.3}, hybrid final distance {final_dist:.2e}"),
    )
}

fn hygiene() -> Outcome {
    let mut drift: f64 = 0.0;
    for id in [ScenarioId::A, ScenarioId::B, ScenarioId::C] {
        for kind in ControllerKind::ALL {
            drift = drift.max(run(id, kind, true).metrics.max_norm_drift);
        }
    }
    let f = sphere_family();
    let x0 = DVector::from_column_slice(&[0.03, 1.0, 0.0, 0.02]).normalize();
    let mut cfg = SphereLoopConfig::new(f);
    cfg.disturbance = Some(DisturbanceSpec::new(DisturbanceKind::Measurement, 1e-2, 1));
    for arc in [
        run_hybrid(&cfg, x0.clone(), 30.0, 1e-3).unwrap(),
        run_continuous(&cfg, x0, 30.0, 1e-3).unwrap(),
    ] {
        for s in &arc.samples {
            drift = drift.max((s.state.x.norm() - 1.0).abs());
        }
    }

    let csv = || scenario_csv(&run(ScenarioId::C, ControllerKind::CsHybrid, true).arc);
    let identical = csv() == csv();
    let dir = std::env::temp_dir().join(format!("synergy-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cli = |name: &str| {
        let path = dir.join(name);
        let ok = Command::new(env!("CARGO_BIN_EXE_synergy"))
            .args([
                "track",
                "--scenario",
                "B",
                "--controller",
                "noncs-hybrid",
                "--seed",
                "7",
                "--out",
            ])
            .arg(&path)
            .output()
            .expect("cli runs")
            .status
            .success();
        assert!(ok);
        std::fs::read(path).unwrap()
    };
    let cli_identical = cli("a.csv") == cli("b.csv");
    let _ = std::fs::remove_dir_all(&dir);

    let ineq = inequality_suite(&mut ChaCha8Rng::seed_from_u64(80), 10_000);
    outcome(
        drift <= 1e-9 && identical && cli_identical && ineq.passed(),
        format!(
            "max norm drift {drift:.2e}; identical CSV {identical}/{cli_identical}; inequalities {} of {} cases failed",
            ineq.max_projection_failures + ineq.shifted_axis_failures,
            ineq.cases
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("gap thresholds", gap_thresholds),
        ("certification", certification),
        ("gradient checks", gradients),
        ("lyapunov discipline", lyapunov),
        ("scenario A", scenario_a),
        ("scenario C", scenario_c),
        ("sphere witnesses", sphere_witnesses),
        ("numerical hygiene", hygiene),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
