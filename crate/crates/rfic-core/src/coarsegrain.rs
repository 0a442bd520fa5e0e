//! Block statistics, deterministic block inequalities and coupling schedules.
//!
//! Coarse-graining restricts spin flips to multiples of a block length `L`,
//! replacing the disorder by its `L`-fold convolution. The error of doing so
//! is controlled by the maximal absolute windowed partial sum `H_L` of the
//! fields inside a block, computed here in `O(L)` from prefix sums. The
//! deterministic inequalities relate the exact block partition function to
//! single-configuration and entropy-counting bounds; the schedules pick the
//! block length `L_J` and threshold `M_J` as functions of the coupling for
//! each disorder-moment regime.

use alloc::vec::Vec;

use serde::Serialize;

#[allow(unused_imports)]
use num_traits::Float; // f64 math methods in no_std builds

use crate::chain::{log_partition, ChainParams, Spin};
use crate::disorder::{DisorderLaw, FieldSampler};
use crate::math::{mean_and_se, MeanSe};
use crate::rng::StreamRng;
use crate::{Error, Result};

use core::f64::consts::LN_2;

/// Relative log-scale tolerance for the deterministic inequalities: both
/// sides are exactly computable, only rounding separates them.
pub const BOUND_TOLERANCE: f64 = 1e-10;

/// Summary statistics of one disorder block.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockStats {
    pub len: usize,
    /// Sum of the fields in the block.
    pub block_sum: f64,
    /// `max |sum_{i=n..m} h_i|` over all windows `1 <= n <= m <= len`.
    pub window_sup: f64,
    /// Sum of absolute field values.
    pub abs_sum: f64,
}

/// Computes [`BlockStats`] in one pass: the windowed maximum equals
/// `max_k S_k - min_k S_k` over prefix sums `S_0 = 0, ..., S_len`.
pub fn block_stats(h: &[f64]) -> Result<BlockStats> {
    if h.is_empty() {
        return Err(Error::Empty("block"));
    }
    let mut prefix = 0.0;
    let mut max = 0.0f64;
    let mut min = 0.0f64;
    let mut abs_sum = 0.0;
    for &v in h {
        prefix += v;
        max = max.max(prefix);
        min = min.min(prefix);
        abs_sum += v.abs();
    }
    Ok(BlockStats {
        len: h.len(),
        block_sum: prefix,
        window_sup: max - min,
        abs_sum,
    })
}

/// Coarse field sequence: sums over consecutive blocks of `block_len`.
/// The length must be a multiple of `block_len`.
pub fn block_sums(h: &[f64], block_len: usize) -> Result<Vec<f64>> {
    if block_len == 0 {
        return Err(Error::InvalidParameter {
            field: "block_len",
            message: "must be >= 1",
        });
    }
    if h.is_empty() {
        return Err(Error::Empty("field sequence"));
    }
    if !h.len().is_multiple_of(block_len) {
        return Err(Error::InvalidParameter {
            field: "block_len",
            message: "must divide the sequence length",
        });
    }
    Ok(h.chunks_exact(block_len)
        .map(|c| c.iter().sum())
        .collect())
}

/// Which deterministic block inequality a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockInequality {
    /// `Z >= exp(-2J 1{a!=b} + b h^L)`: keep only the configuration that
    /// flips (at most once) straight to `b`.
    LowerSingleConfig,
    /// Entropy-counting upper bound paying `4 L (H_L - M)_+` plus a jump
    /// cost `L exp(2(M-J))`, with the flip discount softened by
    /// `M + log(L)/2`.
    UpperWindowSup,
    /// Refined upper bound: the windowed-sup penalty is replaced by
    /// `(L log 2 + 2 sum |h_n|) 1{H_L > M}`.
    UpperIndicatorAbsSum,
}

/// One side-by-side evaluation of an inequality `lhs <= rhs` on the log
/// scale, with `slack = rhs - lhs`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockBoundReport {
    pub inequality: BlockInequality,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

fn report(inequality: BlockInequality, lhs: f64, rhs: f64) -> BlockBoundReport {
    let slack = rhs - lhs;
    BlockBoundReport {
        inequality,
        lhs,
        rhs,
        slack,
        pass: slack >= -BOUND_TOLERANCE * rhs.abs(),
    }
}

/// Checks the three deterministic block inequalities on one realization,
/// with the exact `log Z` computed by the transfer-matrix product.
pub fn verify_block_bounds(
    h: &[f64],
    j: f64,
    m: f64,
    a: Spin,
    b: Spin,
) -> Result<Vec<BlockBoundReport>> {
    if m < 0.0 {
        return Err(Error::InvalidParameter {
            field: "m",
            message: "must be >= 0",
        });
    }
    let params = ChainParams::new(j, (a, b))?;
    let log_z = log_partition(h, &params)?;
    let stats = block_stats(h)?;
    let l = stats.len as f64;
    let flip = if a != b { 1.0 } else { 0.0 };
    let excess = (stats.window_sup - m).max(0.0);
    let exceeded = stats.window_sup > m;

    let lower = -2.0 * j * flip + b.value() * stats.block_sum;

    let soft_flip = -2.0 * (j - m - 0.5 * l.ln()) * flip + b.value() * stats.block_sum;
    let upper_sup = soft_flip + l * (4.0 * excess + (2.0 * (m - j)).exp());
    let upper_ind = soft_flip
        + if exceeded {
            l * LN_2 + 2.0 * stats.abs_sum
        } else {
            0.0
        }
        + l * (2.0 * (m - j)).exp();

    Ok(alloc::vec![
        report(BlockInequality::LowerSingleConfig, lower, log_z),
        report(BlockInequality::UpperWindowSup, log_z, upper_sup),
        report(BlockInequality::UpperIndicatorAbsSum, log_z, upper_ind),
    ])
}

/// Monte Carlo estimates of the block tail functionals at threshold `m`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailExpectationReport {
    /// `E[(H_L - m)_+]`.
    pub excess: MeanSe,
    /// `P[H_L > m]`.
    pub exceed_prob: MeanSe,
    /// `E[(log 2 + (2/L) sum |h_n|) 1{H_L > m}]`.
    pub indicator_abs: MeanSe,
    pub block_len: usize,
    pub threshold: f64,
    pub draws: usize,
    pub seed: u64,
}

pub fn tail_expectation(
    law: DisorderLaw,
    block_len: usize,
    m: f64,
    draws: usize,
    seed: u64,
) -> Result<TailExpectationReport> {
    if draws == 0 {
        return Err(Error::Empty("draws"));
    }
    if block_len == 0 {
        return Err(Error::InvalidParameter {
            field: "block_len",
            message: "must be >= 1",
        });
    }
    let mut rng = StreamRng::new(seed, 0);
    let mut block = alloc::vec![0.0f64; block_len];
    let mut excess = Vec::with_capacity(draws);
    let mut exceed = Vec::with_capacity(draws);
    let mut indicator_abs = Vec::with_capacity(draws);
    for _ in 0..draws {
        for slot in block.iter_mut() {
            *slot = law.sample_field(&mut rng);
        }
        let stats = block_stats(&block)?;
        excess.push((stats.window_sup - m).max(0.0));
        if stats.window_sup > m {
            exceed.push(1.0);
            indicator_abs.push(LN_2 + 2.0 * stats.abs_sum / block_len as f64);
        } else {
            exceed.push(0.0);
            indicator_abs.push(0.0);
        }
    }
    Ok(TailExpectationReport {
        excess: mean_and_se(&excess),
        exceed_prob: mean_and_se(&exceed),
        indicator_abs: mean_and_se(&indicator_abs),
        block_len,
        threshold: m,
        draws,
        seed,
    })
}

/// Closed-form tail bound `(4 v L^3 / m) exp(-m^2 / (4 v L))` on
/// `E[(H_L - m)_+]`, valid for laws with exponential moments when
/// `m <= c L`, with `c = 2 v c'` and `c'` the probed range on which the MGF
/// is dominated by `exp(v t^2)` (`v` the variance). Returns `None` when the
/// guard fails.
pub fn exp_tail_bound(law: &DisorderLaw, block_len: usize, m: f64) -> Option<f64> {
    if m <= 0.0 {
        return None;
    }
    let c_prime = law.exp_moment_c_prime()?;
    let v = law.variance();
    let guard = 2.0 * v * c_prime * block_len as f64;
    if m > guard {
        return None;
    }
    let l = block_len as f64;
    Some(4.0 * v * l * l * l / m * (-m * m / (4.0 * v * l)).exp())
}

/// Disorder-moment regime selecting a schedule family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "regime", content = "p")]
pub enum MomentRegime {
    /// Finite exponential moments near zero.
    ExpMoments,
    /// Finite p-th moment only, `p >= 2`.
    Poly(f64),
}

impl MomentRegime {
    pub fn for_law(law: &DisorderLaw) -> MomentRegime {
        if law.has_exponential_moments() {
            MomentRegime::ExpMoments
        } else {
            MomentRegime::Poly(law.moment_order())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
enum ScheduleForm {
    /// `L = J^{4/3} / (log J)^{1/3}`, `M = 6 vartheta J^{2/3} (log J)^{1/3}`.
    ExpMoments,
    /// `L = J^eta`, `M = J^{2 - eta}` with `eta = 4p / (3p + 2)`.
    PolyHigh { p: f64 },
    /// `L = J^{2 eta / (p-1)}`, `M = J^{2 - eta}` with
    /// `eta = 2p(p-1) / (p^2 + p - 1)`.
    PolyLowUpper { p: f64 },
    /// `L = J^{4/p} / (log J)^{1/p}`,
    /// `M = 6 vartheta J^{2/p} (log J)^{(p-1)/(2p)}`.
    PolyLowLower { p: f64 },
}

/// A coupling-dependent choice of block length and threshold, together with
/// the convergence exponent it certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub regime: MomentRegime,
    /// Exponent of the error term `J^{-eta}` this schedule yields.
    pub eta: f64,
    vartheta: f64,
    form: ScheduleForm,
}

fn check_regime(regime: MomentRegime, vartheta: f64) -> Result<()> {
    if !(vartheta.is_finite() && vartheta > 0.0) {
        return Err(Error::InvalidParameter {
            field: "vartheta",
            message: "must be finite and > 0",
        });
    }
    if let MomentRegime::Poly(p) = regime {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::InvalidParameter {
                field: "p",
                message: "must be finite and >= 2",
            });
        }
    }
    Ok(())
}

/// Exponent `4p / (3p + 2)` of the polynomial-moment upper bound for
/// `p >= 3`.
pub fn eta_poly_high(p: f64) -> f64 {
    4.0 * p / (3.0 * p + 2.0)
}

/// Exponent `2p(p-1) / (p^2 + p - 1)` of the polynomial-moment upper bound
/// for `2 <= p < 3`.
pub fn eta_poly_low(p: f64) -> f64 {
    2.0 * p * (p - 1.0) / (p * p + p - 1.0)
}

/// The upper-bound exponent for a given moment order.
pub fn eta_for(p: f64) -> f64 {
    if p >= 3.0 {
        eta_poly_high(p)
    } else {
        eta_poly_low(p)
    }
}

/// Canonical (upper-bound) schedule for a regime.
pub fn schedule_for(regime: MomentRegime, vartheta: f64) -> Result<Schedule> {
    check_regime(regime, vartheta)?;
    let (form, eta) = match regime {
        MomentRegime::ExpMoments => (ScheduleForm::ExpMoments, 4.0 / 3.0),
        MomentRegime::Poly(p) if p >= 3.0 => (ScheduleForm::PolyHigh { p }, eta_poly_high(p)),
        MomentRegime::Poly(p) => (ScheduleForm::PolyLowUpper { p }, eta_poly_low(p)),
    };
    Ok(Schedule {
        regime,
        eta,
        vartheta,
        form,
    })
}

/// Schedule serving the lower comparison of the coarse-graining chain: it
/// matches the exponential-moment choice for `p >= 3` and uses the slower
/// block growth for `p < 3`.
pub fn lower_bound_schedule(regime: MomentRegime, vartheta: f64) -> Result<Schedule> {
    check_regime(regime, vartheta)?;
    let (form, eta) = match regime {
        MomentRegime::ExpMoments => (ScheduleForm::ExpMoments, 4.0 / 3.0),
        MomentRegime::Poly(p) if p >= 3.0 => (ScheduleForm::ExpMoments, 4.0 / 3.0),
        MomentRegime::Poly(p) => (
            ScheduleForm::PolyLowLower { p },
            2.0 * (p - 1.0) / p,
        ),
    };
    Ok(Schedule {
        regime,
        eta,
        vartheta,
        form,
    })
}

impl Schedule {
    /// Block length at coupling `j` (`j > 1` required), at least 1.
    pub fn block_len(&self, j: f64) -> usize {
        assert!(j > 1.0, "schedules are defined for J > 1");
        let raw = match self.form {
            ScheduleForm::ExpMoments => j.powf(4.0 / 3.0) / j.ln().powf(1.0 / 3.0),
            ScheduleForm::PolyHigh { p } => j.powf(eta_poly_high(p)),
            ScheduleForm::PolyLowUpper { p } => j.powf(2.0 * eta_poly_low(p) / (p - 1.0)),
            ScheduleForm::PolyLowLower { p } => j.powf(4.0 / p) / j.ln().powf(1.0 / p),
        };
        (raw.floor() as usize).max(1)
    }

    /// Threshold `M` at coupling `j` (`j > 1` required).
    pub fn threshold(&self, j: f64) -> f64 {
        assert!(j > 1.0, "schedules are defined for J > 1");
        match self.form {
            ScheduleForm::ExpMoments => {
                6.0 * self.vartheta * j.powf(2.0 / 3.0) * j.ln().powf(1.0 / 3.0)
            }
            ScheduleForm::PolyHigh { p } => j.powf(2.0 - eta_poly_high(p)),
            ScheduleForm::PolyLowUpper { p } => j.powf(2.0 - eta_poly_low(p)),
            ScheduleForm::PolyLowLower { p } => {
                6.0 * self.vartheta
                    * j.powf(2.0 / p)
                    * j.ln().powf((p - 1.0) / (2.0 * p))
            }
        }
    }
}
