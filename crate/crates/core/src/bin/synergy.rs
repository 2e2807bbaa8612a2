use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector, Matrix3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use synergy_core::attitude::{ControllerKind, QuatFamily};
use synergy_core::manifold::inequalities::inequality_suite;
use synergy_core::manifold::DEFAULT_GROUP_TOL;
use synergy_core::scenario::{
    compare_runs, run_all_controllers, run_scenario, scenario_csv, tracking_family, ScenarioConfig, ScenarioId,
};
use synergy_core::sphere_stab::{
    robustness_sweep, run_continuous, run_hybrid, DisturbanceKind, DisturbanceSpec, SphereLoopConfig,
};
use synergy_core::synergy::{certify_family, random_family, BasicPotential, SynergisticFamily};
use synergy_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "synergy",
    version,
    about = "Synergistic hybrid feedback on spheres and quaternions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (CSV or report)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the warp angle floor and gap thresholds of a quaternion family
    Gap {
        #[command(flatten)]
        common: Common,
        /// Diagonal of A, comma separated; overrides the configured A
        #[arg(long, value_delimiter = ',')]
        a: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<f64>,
    },
    /// Certify the configured family and random families, and run the inequality suite
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of random families
        #[arg(long, default_value_t = 20)]
        random: usize,
        /// Random points per index
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Cases of the projection inequality suite
        #[arg(long, default_value_t = 10_000)]
        cases: usize,
    },
    /// Closed loops on the sphere
    Sphere {
        #[command(flatten)]
        common: Common,
        /// Eigenvalues of M (the first must be 0), comma separated
        #[arg(long, value_delimiter = ',', default_value = "0,1,1,2")]
        spectrum: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        k: f64,
        #[arg(long, value_enum, default_value_t = SphereMode::Hybrid)]
        mode: SphereMode,
        /// Initial point, normalized
        #[arg(long, value_delimiter = ',', default_value = "0.03,1,0,0.02")]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        q0: usize,
        #[arg(long, value_enum, default_value_t = DisturbanceArg::None)]
        disturbance: DisturbanceArg,
        #[arg(long, default_value_t = 0.01)]
        magnitude: f64,
        /// Report the hybrid loop under measurement disturbances of these sizes
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
    },
    /// Attitude tracking run
    Track {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<ScenarioId>,
        #[arg(long)]
        controller: Option<ControllerKind>,
    },
    /// Run all three controllers on one scenario and tabulate the metrics
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<ScenarioId>,
    },
    /// Print a full configuration with defaults
    PrintConfig {
        #[arg(long, default_value = "A")]
        scenario: ScenarioId,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SphereMode {
    Continuous,
    Hybrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum DisturbanceArg {
    None,
    Measurement,
    Adversarial,
}

fn load(common: &Common, scenario: Option<ScenarioId>) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ScenarioConfig::preset(scenario.unwrap_or(ScenarioId::A)),
    };
    if let (Some(id), Some(_)) = (scenario, &common.config) {
        let preset = ScenarioConfig::preset(id);
        cfg.scenario = id;
        cfg.initial = preset.initial;
        cfg.faults = preset.faults;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = common.dt {
        cfg.integration.dt = dt;
    }
    if let Some(h) = common.horizon {
        cfg.integration.horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gap(common: &Common, a: Option<Vec<f64>>, k: Option<f64>) -> Result<bool> {
    let cfg = load(common, None)?;
    let a = match a {
        Some(d) if d.len() == 3 => Matrix3::from_diagonal(&nalgebra::Vector3::from_column_slice(&d)),
        Some(d) => return Err(Error::InvalidArgument(format!("--a needs 3 entries, got {}", d.len()))),
        None => cfg.family.a_matrix(),
    };
    let family = QuatFamily::new(
        a,
        k.unwrap_or(cfg.family.k),
        cfg.family.delta_fraction,
        cfg.family.group_tol,
    )?;
    let mut text = String::from("q,lambda_q,multiplicity,theta,delta1,delta2,delta_bar,delta\n");
    for b in family.family().bounds() {
        text.push_str(&format!(
            "{},{},{},{:.8},{},{:.8},{:.8},{:.8}\n",
            b.q,
            b.lambda_q,
            b.multiplicity,
            b.angle_floor,
            b.delta1.map_or("none".to_string(), |d| format!("{d:.8}")),
            b.delta2,
            b.delta_bar,
            family.delta(b.q),
        ));
    }
    emit(common.out.as_deref(), &text)?;
    Ok(true)
}

fn verify(common: &Common, random: usize, samples: usize, cases: usize) -> Result<bool> {
    let cfg = load(common, None)?;
    let seed = cfg.seed;
    let main = tracking_family(&cfg)?.family().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ks = [0.2, 0.5, 0.7];
    let mut families: Vec<(String, SynergisticFamily)> = vec![("configured".into(), main)];
    for i in 0..random {
        let n = 2 + i % 2;
        let k = ks[i % ks.len()];
        families.push((
            format!("random{i}_n{n}_k{k}"),
            random_family(&mut rng, n, k, i % 4 == 3)?,
        ));
    }
    let certs: Vec<(String, Result<_>)> = families
        .par_iter()
        .map(|(name, f)| (name.clone(), certify_family(f, samples, seed)))
        .collect();
    let mut ok = true;
    let mut report = String::new();
    for (name, cert) in certs {
        let cert = cert?;
        ok &= cert.valid;
        println!(
            "{name}: {} (gap margin {:.3e}, det margin {:.3e})",
            if cert.valid { "PASS" } else { "FAIL" },
            cert.gap_margin,
            cert.det_margin
        );
        report.push_str(&format!("# {name}\n{}\n", cert.to_text()));
    }
    let ineq = inequality_suite(&mut rng, cases);
    ok &= ineq.passed();
    println!(
        "inequalities: {} ({} cases, worst margin {:.3e})",
        if ineq.passed() { "PASS" } else { "FAIL" },
        ineq.cases,
        ineq.worst_margin
    );
    if let Some(path) = &common.out {
        std::fs::write(path, report)?;
    }
    Ok(ok)
}

#[allow(clippy::too_many_arguments)]
fn sphere(
    common: &Common,
    spectrum: &[f64],
    k: f64,
    mode: SphereMode,
    x0: &[f64],
    q0: usize,
    disturbance: DisturbanceArg,
    magnitude: f64,
    sweep: Option<Vec<f64>>,
) -> Result<bool> {
    if x0.len() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.len(),
            got: x0.len(),
        });
    }
    let seed = common.seed.unwrap_or(1);
    let dt = common.dt.unwrap_or(synergy_core::hybrid::DEFAULT_DT);
    let horizon = common.horizon.unwrap_or(synergy_core::hybrid::DEFAULT_HORIZON);
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
    let family = SynergisticFamily::new(BasicPotential::new(m, DEFAULT_GROUP_TOL)?, k, 0.9)?;
    let x0 = DVector::from_column_slice(x0);
    let norm = x0.norm();
    if norm < 1e-12 {
        return Err(Error::ZeroVector);
    }
    let x0 = x0 / norm;
    let mut cfg = SphereLoopConfig::new(family);
    cfg.q0 = q0;
    cfg.disturbance = match disturbance {
        DisturbanceArg::None => None,
        DisturbanceArg::Measurement => Some(DisturbanceSpec::new(DisturbanceKind::Measurement, magnitude, seed)),
        DisturbanceArg::Adversarial => Some(DisturbanceSpec::new(DisturbanceKind::Adversarial, magnitude, seed)),
    };
    if let Some(rhos) = sweep {
        let mut text = String::from("rho,jumps,final_distance,tail_distance\n");
        for row in robustness_sweep(&cfg, &x0, &rhos, horizon, dt, seed)? {
            text.push_str(&format!(
                "{},{},{:.6e},{:.6e}\n",
                row.rho, row.jumps, row.final_distance, row.tail_distance
            ));
        }
        emit(common.out.as_deref(), &text)?;
        return Ok(true);
    }
    let arc = match mode {
        SphereMode::Continuous => run_continuous(&cfg, x0, horizon, dt)?,
        SphereMode::Hybrid => run_hybrid(&cfg, x0, horizon, dt)?,
    };
    let dist = arc.monitor("dist").expect("monitor added");
    eprintln!(
        "jumps: {}\nfinal_distance: {:.6e}\nmin_distance: {:.6e}",
        arc.jump_count(),
        dist.last().expect("nonempty"),
        dist.iter().copied().fold(f64::INFINITY, f64::min)
    );
    emit(common.out.as_deref(), &arc.to_csv())?;
    Ok(true)
}

fn track(common: &Common, scenario: Option<ScenarioId>, controller: Option<ControllerKind>) -> Result<bool> {
    let mut cfg = load(common, scenario)?;
    if let Some(c) = controller {
        cfg.controller = c.as_str().into();
    }
    let run = run_scenario(&cfg)?;
    eprint!("{}", run.metrics.to_text());
    emit(common.out.as_deref(), &scenario_csv(&run.arc))?;
    Ok(true)
}

fn compare(common: &Common, scenario: Option<ScenarioId>) -> Result<bool> {
    let cfg = load(common, scenario)?;
    let runs = run_all_controllers(&cfg)
        .into_iter()
        .map(|(k, r)| r.map(|r| (k.as_str().to_string(), r)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(String, &_)> = runs.iter().map(|(n, r)| (n.clone(), r)).collect();
    emit(common.out.as_deref(), &compare_runs(&refs)?.to_csv())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gap { common, a, k } => gap(&common, a, k),
        Command::Verify {
            common,
            random,
            samples,
            cases,
        } => verify(&common, random, samples, cases),
        Command::Sphere {
            common,
            spectrum,
            k,
            mode,
            x0,
            q0,
            disturbance,
            magnitude,
            sweep,
        } => sphere(&common, &spectrum, k, mode, &x0, q0, disturbance, magnitude, sweep),
        Command::Track {
            common,
            scenario,
            controller,
        } => track(&common, scenario, controller),
        Command::Compare { common, scenario } => compare(&common, scenario),
        Command::PrintConfig { scenario } => {
            print!("{}", ScenarioConfig::preset(scenario).to_toml());
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
