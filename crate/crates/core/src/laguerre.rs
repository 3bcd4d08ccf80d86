//! Laguerre functions and the stable LTI filter bank that realizes them.
//!
//! The continuous-time state `w(t)` of a single channel of order `p` obeys
//! `dw/dt = A w + B u` with
//!
//! ```text
//! A = -λ I - 2λ S,   B = √(2λ) (1, …, 1)ᵀ
//! ```
//!
//! where `S` is the strictly lower-triangular matrix of ones. With the state
//! ordered as `(l_0, …, l_{p-1})` the impulse response `e^{At} B` is exactly the
//! vector of rescaled Laguerre functions `l_m(t) = √(2λ) e^{-λt} L_m(2λt)`.
//!
//! Sampled inputs are filtered with an exact zero-order-hold discretization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::sim::TrajectoryData;

/// Relative tolerance used when comparing a signal's sample period to a filter's.
const DT_REL_TOL: f64 = 1e-9;

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre_polynomial(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Values `L_0(x), …, L_{count-1}(x)` in one pass.
fn laguerre_polynomials(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(1.0);
    if count == 1 {
        return out;
    }
    out.push(1.0 - x);
    for k in 1..count - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Rescaled Laguerre function `l_n(t) = √(2λ) e^{-λt} L_n(2λt)`.
///
/// The family `{l_n}` is orthonormal on `[0, ∞)`.
pub fn rescaled_laguerre(n: usize, lambda: f64, t: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be nonnegative, got {t}"),
        });
    }
    Ok((2.0 * lambda).sqrt() * (-lambda * t).exp() * laguerre_polynomial(n, 2.0 * lambda * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaguerreConfig {
    /// Number of Laguerre functions `p`.
    pub order: usize,
    /// Forgetting factor `λ`, in 1/time.
    pub lambda: f64,
}

impl LaguerreConfig {
    pub fn new(order: usize, lambda: f64) -> Result<Self> {
        let config = Self { order, lambda };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidParameter {
                name: "order",
                reason: "Laguerre order must be at least 1".into(),
            });
        }
        ensure_positive("lambda", self.lambda)
    }

    /// Continuous-time realization `(A, B)` of the Laguerre impulse response.
    pub fn state_matrices(&self) -> LaguerreStateMatrices {
        let p = self.order;
        let lambda = self.lambda;
        let a = DMatrix::from_fn(p, p, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => -lambda,
            std::cmp::Ordering::Greater => -2.0 * lambda,
            std::cmp::Ordering::Less => 0.0,
        });
        let b = DVector::from_element(p, (2.0 * lambda).sqrt());
        LaguerreStateMatrices { a, b, lambda }
    }
}

/// State and input matrices of one Laguerre channel.
///
/// `a` is lower triangular Toeplitz with `-λ` on the diagonal and `-2λ`
/// strictly below it.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreStateMatrices {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    lambda: f64,
}

impl LaguerreStateMatrices {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Exact zero-order-hold discretization with sample period `dt`.
    ///
    /// `A` is lower triangular Toeplitz with symbol `-λ(1+z)/(1-z)`, so
    /// `e^{A dt}` is too, and its first column is
    /// `e^{-λ dt} L_n^{(-1)}(2λ dt)` from the generating function of the
    /// associated Laguerre polynomials, `L_n^{(-1)} = L_n - L_{n-1}`.
    /// The input vector is `A^{-1}(e^{A dt} - I) B`, solved by forward
    /// substitution.
    pub fn discretize(&self, dt: f64) -> Result<DiscreteFilter> {
        ensure_positive("dt", dt)?;
        let p = self.order();
        let lambda = self.lambda;
        let x = 2.0 * lambda * dt;
        let decay = (-lambda * dt).exp();

        let poly = laguerre_polynomials(p, x);
        let first_col: Vec<f64> = (0..p)
            .map(|n| {
                let assoc = if n == 0 { 1.0 } else { poly[n] - poly[n - 1] };
                decay * assoc
            })
            .collect();
        let phi = DMatrix::from_fn(p, p, |i, j| if i >= j { first_col[i - j] } else { 0.0 });

        let mut rhs = &phi * &self.b - &self.b;
        let solved = self
            .a
            .solve_lower_triangular_mut(&mut rhs);
        debug_assert!(solved, "Laguerre state matrix has nonzero diagonal");
        Ok(DiscreteFilter {
            phi,
            gamma: rhs,
            dt,
        })
    }
}

/// Discrete-time update `x_{k+1} = Φ x_k + Γ u_k` for a zero-order-held input.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFilter {
    pub phi: DMatrix<f64>,
    pub gamma: DVector<f64>,
    pub dt: f64,
}

impl DiscreteFilter {
    pub fn order(&self) -> usize {
        self.gamma.len()
    }

    /// Advances `state` by one sample period with input `u` held constant.
    ///
    /// `phi` is lower triangular, so the update runs in place from the
    /// bottom row up.
    pub fn step(&self, state: &mut [f64], u: f64) {
        let p = self.order();
        debug_assert_eq!(state.len(), p);
        for i in (0..p).rev() {
            let mut acc = self.gamma[i] * u;
            for j in 0..=i {
                acc += self.phi[(i, j)] * state[j];
            }
            state[i] = acc;
        }
    }
}

/// One Laguerre filter per input channel, run side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreBank {
    channels: Vec<(LaguerreConfig, DiscreteFilter)>,
    total_order: usize,
    dt: f64,
}

impl LaguerreBank {
    pub fn new(configs: &[LaguerreConfig], dt: f64) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "bank",
                reason: "at least one channel is required".into(),
            });
        }
        ensure_positive("dt", dt)?;
        let mut channels = Vec::with_capacity(configs.len());
        for config in configs {
            config.validate()?;
            let filter = config.state_matrices().discretize(dt)?;
            channels.push((*config, filter));
        }
        let total_order = configs.iter().map(|c| c.order).sum();
        Ok(Self {
            channels,
            total_order,
            dt,
        })
    }

    pub fn channels(&self) -> &[(LaguerreConfig, DiscreteFilter)] {
        &self.channels
    }

    pub fn input_dim(&self) -> usize {
        self.channels.len()
    }

    pub fn total_order(&self) -> usize {
        self.total_order
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn zero_state(&self) -> Vec<f64> {
        vec![0.0; self.total_order]
    }

    /// Advances the concatenated state of all channels by one sample.
    pub fn step(&self, state: &mut [f64], input: &[f64]) {
        debug_assert_eq!(state.len(), self.total_order);
        debug_assert_eq!(input.len(), self.channels.len());
        let mut offset = 0;
        for ((_, filter), &u) in self.channels.iter().zip(input) {
            let p = filter.order();
            filter.step(&mut state[offset..offset + p], u);
            offset += p;
        }
    }

    pub(crate) fn check_signal(&self, u: &TrajectoryData) -> Result<()> {
        if u.channels() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "Laguerre bank input channels",
                expected: self.input_dim(),
                actual: u.channels(),
            });
        }
        if (u.dt() - self.dt).abs() > DT_REL_TOL * self.dt {
            return Err(Error::SamplePeriodMismatch {
                expected: self.dt,
                actual: u.dt(),
            });
        }
        Ok(())
    }

    /// Filters `u` from a zero initial state.
    ///
    /// Row `k` of the result is the concatenated state after `k` held input
    /// samples, so row 0 is all zeros and row `k` depends on `u_0, …, u_{k-1}`.
    pub fn filter_signal(&self, u: &TrajectoryData) -> Result<DMatrix<f64>> {
        self.check_signal(u)?;
        let m = u.len();
        let mut out = DMatrix::zeros(m, self.total_order);
        let mut state = self.zero_state();
        let mut input = vec![0.0; self.input_dim()];
        for k in 0..m {
            for (j, s) in state.iter().enumerate() {
                out[(k, j)] = *s;
            }
            for (c, v) in input.iter_mut().enumerate() {
                *v = u.values()[(k, c)];
            }
            self.step(&mut state, &input);
        }
        Ok(out)
    }
}
