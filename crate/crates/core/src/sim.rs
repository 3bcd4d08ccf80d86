//! Synthetic signals and systems: Fourier-series inputs, a forced
//! second-order plant, the Van der Pol oscillator, observation noise and the
//! tri-modal Gaussian regression target.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::ops::Range;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::rng::RngSeed;

/// A uniformly sampled multichannel signal. Row `k` is the sample at
/// `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData {
    t0: f64,
    dt: f64,
    values: DMatrix<f64>,
}

impl TrajectoryData {
    pub fn new(t0: f64, dt: f64, values: DMatrix<f64>) -> Result<Self> {
        ensure_positive("dt", dt)?;
        if !t0.is_finite() {
            return Err(Error::NonFinite("trajectory start time"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory values"));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn from_channel(t0: f64, dt: f64, samples: &[f64]) -> Result<Self> {
        Self::new(t0, dt, DMatrix::from_column_slice(samples.len(), 1, samples))
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.column(c).iter().copied().collect()
    }

    pub fn select_channel(&self, c: usize) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            values: self.values.columns(c, 1).into_owned(),
        }
    }

    /// Rows in `range`, re-anchored so sample 0 is the first selected row.
    pub fn slice(&self, range: Range<usize>) -> Self {
        let len = range.end - range.start;
        Self {
            t0: self.time(range.start),
            dt: self.dt,
            values: self.values.rows(range.start, len).into_owned(),
        }
    }

    /// Writes `time,ch0,ch1,...` with 17 significant digits and LF endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.channels()).map(|c| format!("ch{c}")).collect();
        writeln!(out, "time,{}", header.join(","))?;
        for k in 0..self.len() {
            write!(out, "{}", fmt_f64(self.time(k)))?;
            for c in 0..self.channels() {
                write!(out, ",{}", fmt_f64(self.values[(k, c)]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits, the precision needed for an
/// exact `f64` round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierInputSpec {
    pub harmonics: usize,
    pub omega0: f64,
    pub phases: Vec<f64>,
    pub amplitude_scale: f64,
}

impl FourierInputSpec {
    /// `harmonics` unit-amplitude sines scaled by `1/√harmonics`, with phases
    /// drawn uniformly from `[0, 2π)`.
    pub fn with_random_phases(harmonics: usize, omega0: f64, seed: RngSeed) -> Result<Self> {
        let mut rng = seed.rng();
        let dist = Uniform::new(0.0, 2.0 * PI).expect("valid phase range");
        let phases = (0..harmonics).map(|_| dist.sample(&mut rng)).collect();
        let spec = Self {
            harmonics,
            omega0,
            phases,
            amplitude_scale: 1.0 / (harmonics as f64).sqrt(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.harmonics == 0 {
            return Err(Error::InvalidParameter {
                name: "harmonics",
                reason: "at least one harmonic is required".into(),
            });
        }
        ensure_positive("omega0", self.omega0)?;
        if self.phases.len() != self.harmonics {
            return Err(Error::DimensionMismatch {
                context: "Fourier phases",
                expected: self.harmonics,
                actual: self.phases.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.phases
            .iter()
            .enumerate()
            .map(|(i, phase)| ((i + 1) as f64 * self.omega0 * t + phase).sin())
            .sum::<f64>()
            * self.amplitude_scale
    }
}

/// Samples the Fourier series at `t = k * dt`, `k = 0..m`.
pub fn fourier_input(spec: &FourierInputSpec, m: usize, dt: f64) -> Result<TrajectoryData> {
    spec.validate()?;
    let samples: Vec<f64> = (0..m).map(|k| spec.value(k as f64 * dt)).collect();
    TrajectoryData::from_channel(0.0, dt, &samples)
}

fn rk4_step<const N: usize>(
    state: [f64; N],
    h: f64,
    f: impl Fn(&[f64; N]) -> [f64; N],
) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += s * b[i];
        }
        out
    };
    let k1 = f(&state);
    let k2 = f(&add(&state, &k1, 0.5 * h));
    let k3 = f(&add(&state, &k2, 0.5 * h));
    let k4 = f(&add(&state, &k3, h));
    let mut out = state;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// `ÿ + damping ẏ + stiffness y = gain u` from rest, integrated with RK4 on
/// the grid of `u`. The input is held constant over each step.
pub fn simulate_forced_second_order(
    u: &TrajectoryData,
    damping: f64,
    stiffness: f64,
    gain: f64,
) -> Result<TrajectoryData> {
    if u.channels() != 1 {
        return Err(Error::DimensionMismatch {
            context: "second-order system input channels",
            expected: 1,
            actual: u.channels(),
        });
    }
    let mut state = [0.0, 0.0];
    let mut y = Vec::with_capacity(u.len());
    for k in 0..u.len() {
        y.push(state[0]);
        let uk = u.values()[(k, 0)];
        state = rk4_step(state, u.dt(), |s| {
            [s[1], gain * uk - damping * s[1] - stiffness * s[0]]
        });
    }
    TrajectoryData::from_channel(u.t0(), u.dt(), &y)
}

/// Van der Pol oscillator `ẋ = v, v̇ = μ(1 - x²)v - x` sampled at `m` points
/// spaced `dt` apart, starting from `x0 = (x, v)`.
pub fn simulate_van_der_pol(mu: f64, x0: [f64; 2], m: usize, dt: f64) -> Result<TrajectoryData> {
    ensure_positive("dt", dt)?;
    let mut state = x0;
    let mut values = DMatrix::zeros(m, 2);
    for k in 0..m {
        values[(k, 0)] = state[0];
        values[(k, 1)] = state[1];
        state = rk4_step(state, dt, |s| [s[1], mu * (1.0 - s[0] * s[0]) * s[1] - s[0]]);
    }
    TrajectoryData::new(0.0, dt, values)
}

/// Adds i.i.d. `N(0, std²)` noise to every entry.
pub fn add_noise(traj: &TrajectoryData, std: f64, seed: RngSeed) -> Result<TrajectoryData> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "std",
            reason: format!("must be nonnegative, got {std}"),
        });
    }
    if std == 0.0 {
        return Ok(traj.clone());
    }
    let mut rng = seed.rng();
    let mut values = traj.values().clone();
    // Column-major order: channel by channel.
    for v in values.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += std * z;
    }
    TrajectoryData::new(traj.t0(), traj.dt(), values)
}

/// Sum of three isotropic Gaussian densities with covariance `20 I` centred at
/// `-15·1`, `15·1` and `0`, on the box `[-30, 30]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimodalSpec {
    pub dim: usize,
}

impl TrimodalSpec {
    pub const CENTER_OFFSET: f64 = 15.0;
    pub const COVARIANCE_SCALE: f64 = 20.0;
    pub const HALF_WIDTH: f64 = 30.0;

    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(Self { dim })
    }

    pub fn centers(&self) -> [Vec<f64>; 3] {
        [
            vec![-Self::CENTER_OFFSET; self.dim],
            vec![Self::CENTER_OFFSET; self.dim],
            vec![0.0; self.dim],
        ]
    }
}

pub fn trimodal_gaussian(spec: &TrimodalSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            context: "tri-modal target input",
            expected: spec.dim,
            actual: x.len(),
        });
    }
    let var = TrimodalSpec::COVARIANCE_SCALE;
    let norm = (2.0 * PI * var).powf(-(spec.dim as f64) / 2.0);
    let density = spec
        .centers()
        .iter()
        .map(|c| {
            let sq: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            (-0.5 * sq / var).exp()
        })
        .sum::<f64>();
    Ok(norm * density)
}

/// `m` points drawn uniformly from `[-30, 30]^dim`, one per row.
pub fn sample_domain(spec: &TrimodalSpec, m: usize, seed: RngSeed) -> DMatrix<f64> {
    let h = TrimodalSpec::HALF_WIDTH;
    let dist = Uniform::new_inclusive(-h, h).expect("valid domain");
    let mut rng = seed.rng();
    // Filled row by row so that prefixes of a larger sample agree.
    let mut out = DMatrix::zeros(m, spec.dim);
    for i in 0..m {
        for j in 0..spec.dim {
            out[(i, j)] = dist.sample(&mut rng);
        }
    }
    out
}
