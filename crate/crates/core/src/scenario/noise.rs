//! Sampled-and-held measurement noise.
//!
//! Three ChaCha8 substreams are drawn from one seed: stream 0 for the rotation
//! angle `n_α`, stream 1 for the axis `n_v`, stream 2 for the gyro noise `n_ω`.
//! Each integration step consumes one draw per channel, in step order.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attitude::MeasurementNoise;
use crate::manifold::UnitQuaternion;

use super::config::NoiseConfig;

pub const ALPHA_STREAM: u64 = 0;
pub const AXIS_STREAM: u64 = 1;
pub const GYRO_STREAM: u64 = 2;

/// Axes shorter than this are redrawn.
pub const AXIS_DEGENERACY: f64 = 1e-12;

/// `+1` on `[0, P/2)`, `-1` on `[P/2, P)`, repeating.
pub fn square_wave(t: f64, period: f64) -> f64 {
    if (t / period).rem_euclid(1.0) < 0.5 {
        1.0
    } else {
        -1.0
    }
}

pub struct NoiseStreams {
    alpha: ChaCha8Rng,
    axis: ChaCha8Rng,
    gyro: ChaCha8Rng,
}

impl NoiseStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            rng
        };
        Self {
            alpha: stream(ALPHA_STREAM),
            axis: stream(AXIS_STREAM),
            gyro: stream(GYRO_STREAM),
        }
    }

    pub fn alpha(&mut self, var: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.alpha);
        z * var.sqrt()
    }

    pub fn axis(&mut self) -> Vector3<f64> {
        loop {
            let v = Vector3::from_fn(|_, _| StandardNormal.sample(&mut self.axis));
            let n: f64 = v.norm();
            if n >= AXIS_DEGENERACY {
                return v / n;
            }
        }
    }

    pub fn gyro(&mut self, var: f64) -> Vector3<f64> {
        let s = var.sqrt();
        Vector3::from_fn(|_, _| {
            let z: f64 = StandardNormal.sample(&mut self.gyro);
            z * s
        })
    }
}

/// `Q_n = X_s(t) [cos(n_α/2), sin(n_α/2) n_v/|n_v|]` and `n_ω`.
pub fn sample_noise(model: &NoiseConfig, t: f64, streams: &mut NoiseStreams) -> (UnitQuaternion, Vector3<f64>) {
    let alpha = streams.alpha(model.alpha_var);
    let axis = streams.axis();
    let sign = if model.flip {
        square_wave(t, model.flip_period)
    } else {
        1.0
    };
    let (s, c) = (0.5 * alpha).sin_cos();
    let qn = UnitQuaternion {
        eta: sign * c,
        eps: axis * (sign * s),
    };
    (qn, streams.gyro(model.gyro_var))
}

/// Noise held over each of the `steps + 1` grid points `t = i·dt`.
pub fn noise_table(model: &NoiseConfig, seed: u64, steps: usize, dt: f64) -> MeasurementNoise {
    if !model.enabled {
        return MeasurementNoise::none();
    }
    let mut streams = NoiseStreams::new(seed);
    let (attitude, gyro) = (0..=steps)
        .map(|i| sample_noise(model, i as f64 * dt, &mut streams))
        .unzip();
    MeasurementNoise { attitude, gyro }
}
