//! Random-feature maps `x ↦ σ(W x + b)`.
//!
//! Each map is a finite discretization of a Barron integral representation:
//! a fixed list of hidden units `(W_i, b_i)` with a scalar activation. Only
//! the linear readout on top of the features is ever estimated.
//!
//! * [`FeatureMap::atomic`] wraps user-supplied hidden units (a two-layer
//!   network with frozen first layer).
//! * [`FeatureMap::sample_rff`] draws random Fourier features:
//!   `W_i ~ N(0, l⁻² I)`, `b_i ~ U[0, 2π]`, `σ = cos`.
//! * [`FeatureMap::sample_elm`] draws extreme-learning-machine units:
//!   `W_i ~ N(0, d⁻¹ I)`, `b_i ~ N(0, 1)`.
//!
//! Features are returned as a samples × features matrix. No `√(2/K)` factor
//! is applied to RFF features; the readout weights absorb the scale.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Cosine,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Cosine => z.cos(),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Cosine => "cosine",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cos" | "cosine" => Ok(Activation::Cosine),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::InvalidParameter {
                name: "activation",
                reason: format!("unknown activation `{other}`"),
            }),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Atomic,
    Rff,
    Elm,
    /// Features equal the inputs. Test-only; lets the composite model be
    /// checked against plain linear regression.
    #[doc(hidden)]
    PassThrough,
}

/// Hidden units of a random-feature model together with how they were drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    kind: FeatureKind,
    weights: DMatrix<f64>,
    biases: DVector<f64>,
    activation: Activation,
    seed: Option<RngSeed>,
    lengthscale: Option<f64>,
}

/// Serializable summary of a feature map. The hidden units themselves are
/// re-derivable from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapDescriptor {
    pub kind: FeatureKind,
    pub feature_count: usize,
    pub input_dim: usize,
    pub activation: Activation,
    pub seed: Option<RngSeed>,
    pub lengthscale: Option<f64>,
}

fn check_dims(k: usize, d: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "feature_count",
            reason: "at least one feature is required".into(),
        });
    }
    if d == 0 {
        return Err(Error::InvalidParameter {
            name: "input_dim",
            reason: "input dimension must be at least 1".into(),
        });
    }
    Ok(())
}

/// `k × d` matrix of `scale · N(0, 1)` draws, filled row by row.
fn gaussian_rows(rng: &mut impl Rng, k: usize, d: usize, scale: f64) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(k, d);
    for i in 0..k {
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            w[(i, j)] = scale * z;
        }
    }
    w
}

impl FeatureMap {
    /// Wraps given hidden units: `weights` is `K × d`, `biases` has length `K`.
    pub fn atomic(
        weights: DMatrix<f64>,
        biases: DVector<f64>,
        activation: Activation,
    ) -> Result<Self> {
        check_dims(weights.nrows(), weights.ncols())?;
        if biases.len() != weights.nrows() {
            return Err(Error::DimensionMismatch {
                context: "atomic feature biases",
                expected: weights.nrows(),
                actual: biases.len(),
            });
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map parameters"));
        }
        Ok(Self {
            kind: FeatureKind::Atomic,
            weights,
            biases,
            activation,
            seed: None,
            lengthscale: None,
        })
    }

    pub fn sample_rff(k: usize, d: usize, lengthscale: f64, seed: RngSeed) -> Result<Self> {
        check_dims(k, d)?;
        ensure_positive("lengthscale", lengthscale)?;
        let mut rng = seed.rng();
        let weights = gaussian_rows(&mut rng, k, d, 1.0 / lengthscale);
        let phase = Uniform::new_inclusive(0.0, 2.0 * PI).expect("valid phase range");
        let biases = DVector::from_iterator(k, (0..k).map(|_| rng.sample(phase)));
        Ok(Self {
            kind: FeatureKind::Rff,
            weights,
            biases,
            activation: Activation::Cosine,
            seed: Some(seed),
            lengthscale: Some(lengthscale),
        })
    }

    pub fn sample_elm(k: usize, d: usize, activation: Activation, seed: RngSeed) -> Result<Self> {
        check_dims(k, d)?;
        let mut rng = seed.rng();
        let weights = gaussian_rows(&mut rng, k, d, 1.0 / (d as f64).sqrt());
        let biases = DVector::from_iterator(
            k,
            (0..k).map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z
            }),
        );
        Ok(Self {
            kind: FeatureKind::Elm,
            weights,
            biases,
            activation,
            seed: Some(seed),
            lengthscale: None,
        })
    }

    #[doc(hidden)]
    pub fn pass_through(d: usize) -> Result<Self> {
        check_dims(d, d)?;
        Ok(Self {
            kind: FeatureKind::PassThrough,
            weights: DMatrix::identity(d, d),
            biases: DVector::zeros(d),
            activation: Activation::Tanh,
            seed: None,
            lengthscale: None,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &DVector<f64> {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn feature_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn seed(&self) -> Option<RngSeed> {
        self.seed
    }

    pub fn lengthscale(&self) -> Option<f64> {
        self.lengthscale
    }

    pub fn descriptor(&self) -> FeatureMapDescriptor {
        FeatureMapDescriptor {
            kind: self.kind,
            feature_count: self.feature_count(),
            input_dim: self.input_dim(),
            activation: self.activation,
            seed: self.seed,
            lengthscale: self.lengthscale,
        }
    }

    /// Feature matrix `Φ` with `Φ[j, i] = σ(W_i · x_j + b_i)` for the rows
    /// `x_j` of `x`.
    pub fn evaluate(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "feature map input",
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        if self.kind == FeatureKind::PassThrough {
            return Ok(x.clone());
        }
        let mut phi = x * self.weights.transpose();
        let act = self.activation;
        for (i, mut col) in phi.column_iter_mut().enumerate() {
            let b = self.biases[i];
            for v in col.iter_mut() {
                *v = act.apply(*v + b);
            }
        }
        Ok(phi)
    }

    /// Features of a single point.
    pub fn evaluate_point(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "feature map input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if self.kind == FeatureKind::PassThrough {
            return Ok(DVector::from_column_slice(x));
        }
        let k = self.feature_count();
        let d = self.input_dim();
        let out = DVector::from_iterator(
            k,
            (0..k).map(|i| {
                let mut z = self.biases[i];
                for j in 0..d {
                    z += self.weights[(i, j)] * x[j];
                }
                self.activation.apply(z)
            }),
        );
        Ok(out)
    }
}
