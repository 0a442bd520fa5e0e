//! Centered disorder laws, block convolutions and the Wasserstein-1 distance.
//!
//! A [`DisorderLaw`] is a named one-dimensional centered law with analytic
//! variance, quantile function and (where finite) moment generating function.
//! Sampling is inverse-CDF throughout: one uniform per draw, so every sample
//! is a deterministic function of `(seed, stream)`.
//!
//! [`block_convolve`] realizes the law of `h_1 + ... + h_L` by summing draws;
//! [`w1_distance`] estimates the Wasserstein-1 distance between two empirical
//! samples by sorted-order pairing, which is the exact optimal coupling for
//! equal-size one-dimensional empirical measures.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float; // f64 math methods in no_std builds

use crate::math::standard_normal_quantile;
use crate::rng::StreamRng;
use crate::{Error, Result};

/// Extra tail decay of the two-sided Pareto law beyond its advertised
/// moment order: the tail index is `p + PARETO_TAIL_MARGIN`, so the p-th
/// absolute moment is finite while the `(p + margin)`-th is not.
pub const PARETO_TAIL_MARGIN: f64 = 0.25;

/// A centered disorder law with positive variance.
///
/// Serialized form is `{"kind": ..., "variance": ..., "p": ...}` with the
/// `p` field present only for `centered_pareto`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisorderLaw {
    /// Centered Gaussian with the given variance.
    Gaussian { variance: f64 },
    /// Two-point law at plus/minus sqrt(variance).
    Rademacher { variance: f64 },
    /// Uniform on a centered interval with the given variance.
    Uniform { variance: f64 },
    /// Difference of two i.i.d. exponentials (a centered Laplace law);
    /// has finite exponential moments in a neighbourhood of zero.
    CenteredExponentialDiff { variance: f64 },
    /// Symmetrized two-sided Pareto with tail index `p + 1/4`, scaled to the
    /// given variance: the p-th moment is finite, higher ones soon are not.
    CenteredPareto { variance: f64, p: f64 },
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::InvalidParameter {
            field: "variance",
            message: "must be finite and > 0 (the law may not be a point mass at 0)",
        });
    }
    Ok(())
}

impl DisorderLaw {
    pub fn gaussian(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(DisorderLaw::Gaussian { variance })
    }

    pub fn rademacher(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(DisorderLaw::Rademacher { variance })
    }

    pub fn uniform(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(DisorderLaw::Uniform { variance })
    }

    pub fn exponential_diff(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(DisorderLaw::CenteredExponentialDiff { variance })
    }

    pub fn pareto(variance: f64, p: f64) -> Result<Self> {
        check_variance(variance)?;
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::InvalidParameter {
                field: "p",
                message: "must be finite and >= 2",
            });
        }
        Ok(DisorderLaw::CenteredPareto { variance, p })
    }

    /// Re-checks the construction invariants (useful after deserializing).
    pub fn validate(&self) -> Result<()> {
        match *self {
            DisorderLaw::CenteredPareto { variance, p } => {
                Self::pareto(variance, p).map(|_| ())
            }
            DisorderLaw::Gaussian { variance }
            | DisorderLaw::Rademacher { variance }
            | DisorderLaw::Uniform { variance }
            | DisorderLaw::CenteredExponentialDiff { variance } => check_variance(variance),
        }
    }

    /// Analytic variance.
    pub fn variance(&self) -> f64 {
        match *self {
            DisorderLaw::Gaussian { variance }
            | DisorderLaw::Rademacher { variance }
            | DisorderLaw::Uniform { variance }
            | DisorderLaw::CenteredExponentialDiff { variance }
            | DisorderLaw::CenteredPareto { variance, .. } => variance,
        }
    }

    /// Standard deviation.
    pub fn vartheta(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Largest moment order guaranteed finite by construction
    /// (`f64::INFINITY` for the light-tailed laws).
    pub fn moment_order(&self) -> f64 {
        match *self {
            DisorderLaw::CenteredPareto { p, .. } => p,
            _ => f64::INFINITY,
        }
    }

    /// Whether the moment generating function is finite near zero.
    pub fn has_exponential_moments(&self) -> bool {
        !matches!(self, DisorderLaw::CenteredPareto { .. })
    }

    /// Whether the q-th absolute moment is finite.
    pub fn abs_moment_is_finite(&self, q: f64) -> bool {
        match *self {
            DisorderLaw::CenteredPareto { p, .. } => q < p + PARETO_TAIL_MARGIN,
            _ => true,
        }
    }

    /// Quantile function (generalized inverse CDF) for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u < 1.0);
        match *self {
            DisorderLaw::Gaussian { variance } => variance.sqrt() * standard_normal_quantile(u),
            DisorderLaw::Rademacher { variance } => {
                let v = variance.sqrt();
                if u < 0.5 {
                    -v
                } else {
                    v
                }
            }
            DisorderLaw::Uniform { variance } => {
                let half_width = (3.0 * variance).sqrt();
                half_width * (2.0 * u - 1.0)
            }
            DisorderLaw::CenteredExponentialDiff { variance } => {
                let scale = (variance / 2.0).sqrt();
                if u < 0.5 {
                    scale * (2.0 * u).ln()
                } else {
                    -scale * (2.0 * (1.0 - u)).ln()
                }
            }
            DisorderLaw::CenteredPareto { variance, p } => {
                let alpha = p + PARETO_TAIL_MARGIN;
                let xm = (variance * (alpha - 2.0) / alpha).sqrt();
                if u < 0.5 {
                    -xm * (2.0 * u).powf(-1.0 / alpha)
                } else {
                    xm * (2.0 * (1.0 - u)).powf(-1.0 / alpha)
                }
            }
        }
    }

    /// Moment generating function `E[exp(t h)]`, `None` where infinite.
    pub fn mgf(&self, t: f64) -> Option<f64> {
        match *self {
            DisorderLaw::Gaussian { variance } => Some((0.5 * variance * t * t).exp()),
            DisorderLaw::Rademacher { variance } => Some((variance.sqrt() * t).cosh()),
            DisorderLaw::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                if t == 0.0 {
                    Some(1.0)
                } else {
                    Some((a * t).sinh() / (a * t))
                }
            }
            DisorderLaw::CenteredExponentialDiff { variance } => {
                let scale2 = variance / 2.0;
                let y = scale2 * t * t;
                if y < 1.0 {
                    Some(1.0 / (1.0 - y))
                } else {
                    None
                }
            }
            DisorderLaw::CenteredPareto { .. } => {
                if t == 0.0 {
                    Some(1.0)
                } else {
                    None
                }
            }
        }
    }

    /// Largest `c'` such that `mgf(t) <= exp(variance * t^2)` for all
    /// `0 < t <= c'`, probed from the analytic MGF; `None` when the law has
    /// no exponential moments.
    pub fn exp_moment_c_prime(&self) -> Option<f64> {
        let variance = self.variance();
        match *self {
            DisorderLaw::Gaussian { .. }
            | DisorderLaw::Rademacher { .. }
            | DisorderLaw::Uniform { .. } => Some(f64::INFINITY),
            DisorderLaw::CenteredExponentialDiff { .. } => {
                // Boundary where -ln(1 - v t^2/2) = v t^2: bisect on
                // s = v t^2 / 2 in (0, 1), condition -ln(1-s) <= 2s.
                let mut lo = 0.0f64;
                let mut hi = 1.0 - 1e-12;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if -(1.0 - mid).ln() <= 2.0 * mid {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some((2.0 * lo / variance).sqrt())
            }
            DisorderLaw::CenteredPareto { .. } => None,
        }
    }
}

/// Draws one external-field value per call; the abstraction lets the chain
/// estimators run on plain laws, block-convolved laws, or reference fields.
pub trait FieldSampler {
    fn sample_field(&self, rng: &mut StreamRng) -> f64;
}

impl FieldSampler for DisorderLaw {
    #[inline]
    fn sample_field(&self, rng: &mut StreamRng) -> f64 {
        self.quantile(rng.uniform_open())
    }
}

/// The law of a sum of `block_len` independent draws from `law`.
#[derive(Debug, Clone, Copy)]
pub struct BlockLaw {
    pub law: DisorderLaw,
    pub block_len: usize,
}

impl BlockLaw {
    pub fn new(law: DisorderLaw, block_len: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::InvalidParameter {
                field: "block_len",
                message: "must be >= 1",
            });
        }
        Ok(BlockLaw { law, block_len })
    }
}

impl FieldSampler for BlockLaw {
    #[inline]
    fn sample_field(&self, rng: &mut StreamRng) -> f64 {
        let mut sum = 0.0;
        for _ in 0..self.block_len {
            sum += self.law.sample_field(rng);
        }
        sum
    }
}

/// A sorted i.i.d. sample together with its provenance.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    /// Values sorted ascending.
    pub values: Vec<f64>,
    pub law: DisorderLaw,
    /// Convolution order: 1 for plain samples, `L` for block sums.
    pub block_len: usize,
    pub seed: u64,
}

impl EmpiricalSample {
    /// Wraps explicit values (sorting them); mainly for tests and oracles.
    pub fn from_values(mut values: Vec<f64>, law: DisorderLaw) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("sample values"));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalSample {
            values,
            law,
            block_len: 1,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (self.len() - 1) as f64
    }
}

/// `n` i.i.d. draws from `law`, sorted; deterministic given `seed`.
pub fn sample(law: DisorderLaw, n: usize, seed: u64) -> Result<EmpiricalSample> {
    block_convolve(law, 1, n, seed)
}

/// `n` draws of sums of `block_len` independent draws from `law`, sorted.
///
/// With `block_len = 1` this is identical to [`sample`], drawing the same
/// values from the same stream.
pub fn block_convolve(
    law: DisorderLaw,
    block_len: usize,
    n: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    if n == 0 {
        return Err(Error::Empty("requested sample size"));
    }
    let block = BlockLaw::new(law, block_len)?;
    let mut rng = StreamRng::new(seed, 0);
    let mut values: Vec<f64> = (0..n).map(|_| block.sample_field(&mut rng)).collect();
    values.sort_unstable_by(f64::total_cmp);
    Ok(EmpiricalSample {
        values,
        law,
        block_len,
        seed,
    })
}

fn w1_sorted(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n
}

/// Wasserstein-1 distance between two equal-size empirical samples via the
/// sorted-order (quantile) coupling, which is optimal in one dimension.
///
/// Errors on a length mismatch; see [`w1_distance_resampled`] for that case.
pub fn w1_distance(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(w1_sorted(&a.values, &b.values))
}

/// Wasserstein-1 distance for samples of unequal size: the larger sample is
/// bootstrap-resampled (with replacement, deterministically from `seed`)
/// down to the smaller size before sorted pairing.
pub fn w1_distance_resampled(a: &EmpiricalSample, b: &EmpiricalSample, seed: u64) -> f64 {
    if a.len() == b.len() {
        return w1_sorted(&a.values, &b.values);
    }
    let (small, large) = if a.len() < b.len() { (a, b) } else { (b, a) };
    let mut rng = StreamRng::new(seed, 0);
    let m = small.len();
    let mut resampled: Vec<f64> = (0..m)
        .map(|_| large.values[(rng.next_u64() % large.len() as u64) as usize])
        .collect();
    resampled.sort_unstable_by(f64::total_cmp);
    w1_sorted(&small.values, &resampled)
}

/// One point of a Wasserstein-CLT curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct W1Point {
    pub block_len: usize,
    /// Estimated `W1(law^{*L}, N(0, L * variance))`.
    pub w1: f64,
}

/// Estimates `W1` between the L-fold convolution of `law` and the centered
/// Gaussian of matching variance, for each `L` in `l_grid`.
///
/// Returns the raw curve; growth/boundedness assertions live downstream.
pub fn w1_clt_curve(
    law: DisorderLaw,
    l_grid: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<W1Point>> {
    if l_grid.is_empty() {
        return Err(Error::Empty("l_grid"));
    }
    let mut out = Vec::with_capacity(l_grid.len());
    for (i, &l) in l_grid.iter().enumerate() {
        let conv = block_convolve(law, l, n, seed.wrapping_add(2 * i as u64))?;
        let gauss = DisorderLaw::gaussian(l as f64 * law.variance())?;
        let reference = sample(gauss, n, seed.wrapping_add(2 * i as u64 + 1))?;
        out.push(W1Point {
            block_len: l,
            w1: w1_distance(&conv, &reference)?,
        });
    }
    Ok(out)
}
