use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::attitude::ControllerKind;
use crate::error::{Error, Result};
use crate::manifold::UnitQuaternion;

/// Largest norm error of a configured quaternion that is silently normalized.
pub const QUATERNION_INPUT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioId {
    A,
    B,
    C,
    #[serde(rename = "custom")]
    Custom,
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ScenarioId::A),
            "B" | "b" => Ok(ScenarioId::B),
            "C" | "c" => Ok(ScenarioId::C),
            "custom" => Ok(ScenarioId::Custom),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scenario {s:?} (expected A, B or C)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Diagonal of the inertia matrix, kg·m².
    pub inertia: [f64; 3],
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            inertia: [0.5, 0.7, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainConfig {
    pub k1: f64,
    pub k2: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self { k1: 4.0, k2: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Rows of the symmetric positive definite weight `A`.
    pub a: [[f64; 3]; 3],
    pub k: f64,
    pub delta_fraction: f64,
    pub group_tol: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            a: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]],
            k: 0.5,
            delta_fraction: 0.9,
            group_tol: crate::manifold::DEFAULT_GROUP_TOL,
        }
    }
}

impl FamilyConfig {
    pub fn a_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.a[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonCsConfig {
    pub delta: f64,
}

impl Default for NonCsConfig {
    fn default() -> Self {
        Self { delta: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `ω_d(t) = [t e^{-t/2}, 0.6 sin 0.4t, 0.6 sin 0.7t]`.
    Benchmark,
    /// `ω_d ≡ 0`.
    Still,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub profile: ProfileKind,
    /// `Q_d(0)` as `[η, ε₁, ε₂, ε₃]`.
    pub quaternion: [f64; 4],
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            profile: ProfileKind::Benchmark,
            quaternion: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// `Q(0)` as `[η, ε₁, ε₂, ε₃]`.
    pub quaternion: [f64; 4],
    /// `ω(0)` in rad/s.
    pub omega: [f64; 3],
    /// Initial index of the synergistic controllers.
    pub q: i32,
    /// Initial index of the sign-switching controller.
    pub q_noncs: i32,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            quaternion: [0.2346, 0.9721, 0.0, 0.0],
            omega: [0.0, 0.0, 0.0],
            q: 1,
            q_noncs: -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Variance of the noise rotation angle, rad².
    pub alpha_var: f64,
    /// Per-axis variance of the gyro noise, (rad/s)².
    pub gyro_var: f64,
    /// Whether the attitude measurement is multiplied by the square wave.
    pub flip: bool,
    /// Period of the square wave, s.
    pub flip_period: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha_var: 0.01,
            gyro_var: 0.01,
            flip: true,
            flip_period: 5.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    /// Open intervals `(a, b)` in seconds during which jumps are disabled.
    pub windows: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub horizon: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: crate::hybrid::DEFAULT_DT,
            horizon: crate::hybrid::DEFAULT_HORIZON,
        }
    }
}

/// Everything needed to reproduce one tracking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub controller: String,
    pub seed: u64,
    pub plant: PlantConfig,
    pub gains: GainConfig,
    pub family: FamilyConfig,
    pub noncs: NonCsConfig,
    pub reference: ReferenceConfig,
    pub initial: InitialConfig,
    pub noise: NoiseConfig,
    pub faults: FaultConfig,
    pub integration: IntegrationConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(ScenarioId::A)
    }
}

impl ScenarioConfig {
    /// Benchmark initial conditions: A from rest, B with `ω(0) = (2, 3, 4)`,
    /// C from rest with switching faults on `(4, 10)` and `(19, 25)`.
    pub fn preset(id: ScenarioId) -> Self {
        let mut cfg = Self {
            scenario: id,
            controller: ControllerKind::CsHybrid.as_str().to_string(),
            seed: 1,
            plant: PlantConfig::default(),
            gains: GainConfig::default(),
            family: FamilyConfig::default(),
            noncs: NonCsConfig::default(),
            reference: ReferenceConfig::default(),
            initial: InitialConfig::default(),
            noise: NoiseConfig::default(),
            faults: FaultConfig::default(),
            integration: IntegrationConfig::default(),
        };
        match id {
            ScenarioId::B => cfg.initial.omega = [2.0, 3.0, 4.0],
            ScenarioId::C => cfg.faults.windows = vec![[4.0, 10.0], [19.0, 25.0]],
            ScenarioId::A | ScenarioId::Custom => {}
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn controller_kind(&self) -> Result<ControllerKind> {
        self.controller.parse()
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.plant.inertia))
    }

    pub fn initial_quaternion(&self) -> Result<UnitQuaternion> {
        config_quaternion(&self.initial.quaternion, "initial.quaternion")
    }

    pub fn reference_quaternion(&self) -> Result<UnitQuaternion> {
        config_quaternion(&self.reference.quaternion, "reference.quaternion")
    }

    pub fn steps(&self) -> usize {
        (self.integration.horizon / self.integration.dt).round() as usize
    }

    /// All violated constraints, each prefixed with its field path.
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                out.push(msg);
            }
        };
        check(
            self.controller_kind().is_ok(),
            format!("controller: unknown kind {:?}", self.controller),
        );
        let i = self.plant.inertia;
        check(
            i.iter().all(|v| *v > 0.0 && v.is_finite()),
            format!("plant.inertia: entries must be positive, got {i:?}"),
        );
        check(
            self.gains.k1 > 0.0,
            format!("gains.k1: must be positive, got {}", self.gains.k1),
        );
        check(
            self.gains.k2 > 0.0,
            format!("gains.k2: must be positive, got {}", self.gains.k2),
        );
        let a = self.family.a_matrix();
        check(
            (a - a.transpose()).amax() <= 1e-12,
            "family.a: must be symmetric".to_string(),
        );
        check(
            self.family.k > 0.0 && self.family.k < std::f64::consts::FRAC_PI_4,
            format!("family.k: must lie in (0, pi/4), got {}", self.family.k),
        );
        check(
            self.family.delta_fraction > 0.0 && self.family.delta_fraction < 1.0,
            format!(
                "family.delta_fraction: must lie in (0, 1), got {}",
                self.family.delta_fraction
            ),
        );
        check(
            self.family.group_tol > 0.0,
            format!("family.group_tol: must be positive, got {}", self.family.group_tol),
        );
        check(
            self.noncs.delta > 0.0 && self.noncs.delta < 1.0,
            format!("noncs.delta: must lie in (0, 1), got {}", self.noncs.delta),
        );
        for r in [self.reference_quaternion(), self.initial_quaternion()] {
            match r {
                Err(Error::Config(msgs)) => out.extend(msgs),
                Err(e) => out.push(e.to_string()),
                Ok(_) => {}
            }
        }
        let mut check = |ok: bool, msg: String| {
            if !ok {
                out.push(msg);
            }
        };
        check(
            self.initial.omega.iter().all(|v| v.is_finite()),
            "initial.omega: entries must be finite".to_string(),
        );
        check(
            (1..=6).contains(&self.initial.q),
            format!("initial.q: must lie in 1..=6, got {}", self.initial.q),
        );
        check(
            self.initial.q_noncs == 1 || self.initial.q_noncs == -1,
            format!("initial.q_noncs: must be 1 or -1, got {}", self.initial.q_noncs),
        );
        check(
            self.noise.alpha_var >= 0.0,
            format!("noise.alpha_var: must be nonnegative, got {}", self.noise.alpha_var),
        );
        check(
            self.noise.gyro_var >= 0.0,
            format!("noise.gyro_var: must be nonnegative, got {}", self.noise.gyro_var),
        );
        check(
            self.noise.flip_period > 0.0,
            format!("noise.flip_period: must be positive, got {}", self.noise.flip_period),
        );
        check(
            self.integration.dt > 0.0 && self.integration.dt.is_finite(),
            format!("integration.dt: must be positive, got {}", self.integration.dt),
        );
        check(
            self.integration.horizon > 0.0 && self.integration.horizon.is_finite(),
            format!(
                "integration.horizon: must be positive, got {}",
                self.integration.horizon
            ),
        );
        let mut windows = self.faults.windows.clone();
        windows.sort_by(|x, y| x[0].total_cmp(&y[0]));
        for (n, w) in self.faults.windows.iter().enumerate() {
            check(
                w[0] < w[1] && w[0] >= 0.0 && w[1] <= self.integration.horizon,
                format!("faults.windows[{n}]: must satisfy 0 <= a < b <= horizon, got {w:?}"),
            );
        }
        for pair in windows.windows(2) {
            check(
                pair[0][1] <= pair[1][0],
                format!("faults.windows: {:?} and {:?} overlap", pair[0], pair[1]),
            );
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

fn config_quaternion(v: &[f64; 4], path: &str) -> Result<UnitQuaternion> {
    let raw = Vector4::from(*v);
    let drift = (raw.norm() - 1.0).abs();
    if !(drift <= QUATERNION_INPUT_TOL) {
        return Err(Error::Config(vec![format!(
            "{path}: norm {} is not within {QUATERNION_INPUT_TOL} of 1",
            raw.norm()
        )]));
    }
    UnitQuaternion::normalize(&raw)
}
