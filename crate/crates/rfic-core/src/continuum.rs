//! Continuum-chain free energy and Brownian block estimators.
//!
//! The continuum chain on `[0, 1]` couples a `+-1` jump process with rate
//! `x = exp(-2J)` to a Brownian field; its free energy density has the
//! closed form `F(J) = x K1(x) / K0(x)` in terms of modified Bessel
//! functions of the second kind, with large-J behaviour
//! `1 / (2J + log 2 - gamma) + O(exp(-4J))`.
//!
//! Bessel evaluation is split by argument size. Below the crossover the
//! ascending series is written in terms of `log x = -2J` directly, so the
//! regime of extreme couplings (where `x` underflows) stays exact. At and
//! above the crossover a Steed continued fraction supplies `K0`, `K1` and,
//! crucially, their ratio without forming `exp(-x)` — needed because block
//! comparisons evaluate `F` at shifted, possibly negative, couplings.

use alloc::vec::Vec;

use serde::Serialize;

#[allow(unused_imports)]
use num_traits::Float; // f64 math methods in no_std builds

use crate::chain::Spin;
use crate::math::{mean_and_se, MeanSe, EULER_MASCHERONI};
use crate::rng::StreamRng;
use crate::{Error, Result};

use core::f64::consts::{LN_2, PI};

const SERIES_TERMS: usize = 36;

/// Ascending-series evaluation valid for `x < 2`, parameterized by
/// `l = ln(x/2)` so callers with `x = exp(-2J)` never underflow.
/// Returns `(x*K1(x), K0(x))`.
fn bessel_xk1_k0_from_log(l: f64) -> (f64, f64) {
    let q = (2.0 * l).exp(); // x^2 / 4
    let lg = l + EULER_MASCHERONI;

    let mut t0 = 1.0; // q^k / (k!)^2
    let mut t1 = 1.0; // q^k / (k! (k+1)!)
    let mut harmonic = 0.0; // H_k
    let mut i0 = 0.0;
    let mut s1 = 0.0; // sum t1
    let mut k0_sum = 0.0; // sum_{k>=1} H_k t0
    let mut s2 = 0.0; // sum (H_k + H_{k+1}) t1

    for k in 0..SERIES_TERMS {
        let kf = k as f64;
        i0 += t0;
        s1 += t1;
        if k > 0 {
            k0_sum += harmonic * t0;
        }
        s2 += (2.0 * harmonic + 1.0 / (kf + 1.0)) * t1;
        harmonic += 1.0 / (kf + 1.0);
        t0 *= q / ((kf + 1.0) * (kf + 1.0));
        t1 *= q / ((kf + 1.0) * (kf + 2.0));
    }

    let x_i1 = 2.0 * q * s1; // x * I1(x)
    let xk1 = 1.0 + lg * x_i1 - q * s2;
    let k0 = -lg * i0 + k0_sum;
    (xk1, k0)
}

/// Steed continued fraction for `x >= 2`. Returns `(s, h)` such that
/// `K0 = sqrt(pi/(2x)) exp(-x) / s` and `K1 = K0 (x + 0.5 - h) / x`.
fn bessel_cf2(x: f64) -> (f64, f64) {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-16;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..=MAX_ITER {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    (s, a1 * h)
}

/// Modified Bessel functions of the second kind, orders 0 and 1.
///
/// Accurate to about 1e-14 relative across the series/continued-fraction
/// crossover at `x = 2`; underflows to zero only when `exp(-x)` does.
pub fn bessel_k0_k1(x: f64) -> (f64, f64) {
    assert!(x > 0.0 && x.is_finite(), "bessel_k0_k1 needs x > 0");
    if x < 2.0 {
        let (xk1, k0) = bessel_xk1_k0_from_log((x / 2.0).ln());
        (k0, xk1 / x)
    } else {
        let (s, h) = bessel_cf2(x);
        let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        (k0, k0 * (x + 0.5 - h) / x)
    }
}

/// Closed-form continuum free energy at one coupling, with its large-J
/// asymptote and their gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuumEval {
    pub j: f64,
    /// Jump rate `exp(-2J)` (0.0 if it underflows; the evaluation itself
    /// does not).
    pub x: f64,
    /// `x K1(x) / K0(x)`.
    pub f_exact: f64,
    /// `1 / (2J + log 2 - gamma)`; meaningful for large J.
    pub f_asym: f64,
    pub gap: f64,
}

/// Evaluates the continuum free energy. Finite for any `j > -300` (negative
/// couplings arise when comparing at shifted arguments); never NaN.
pub fn continuum_free_energy(j: f64) -> ContinuumEval {
    assert!(j.is_finite() && j > -300.0, "coupling out of range");
    let x = (-2.0 * j).exp();
    let f_exact = if x < 2.0 {
        // l = ln(x/2) formed from j directly: exact even when x underflows.
        let (xk1, k0) = bessel_xk1_k0_from_log(-2.0 * j - LN_2);
        xk1 / k0
    } else {
        let (_, h) = bessel_cf2(x);
        // x K1 / K0 without exp(-x).
        x + 0.5 - h
    };
    let f_asym = 1.0 / (2.0 * j + LN_2 - EULER_MASCHERONI);
    ContinuumEval {
        j,
        x,
        f_exact,
        f_asym,
        gap: (f_exact - f_asym).abs(),
    }
}

/// A Brownian path sampled on an equally spaced grid of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BrownianBlock {
    /// `G + 1` grid values starting at 0; increments are `N(0, 1/G)`.
    pub grid: Vec<f64>,
    /// Endpoint `B_1`.
    pub b1: f64,
    /// Largest two-point gap `max |B_s - B_t|` over grid times, i.e. the
    /// grid range `max - min`.
    pub h: f64,
}

/// Samples a Brownian block on `g` cells (`g >= 2`).
pub fn sample_brownian_block(g: usize, rng: &mut StreamRng) -> Result<BrownianBlock> {
    if g < 2 {
        return Err(Error::InvalidParameter {
            field: "grid_cells",
            message: "must be >= 2",
        });
    }
    let step_sd = (1.0 / g as f64).sqrt();
    let mut grid = Vec::with_capacity(g + 1);
    let mut value = 0.0;
    let mut max = 0.0f64;
    let mut min = 0.0f64;
    grid.push(0.0);
    for _ in 0..g {
        value += step_sd * rng.standard_normal();
        grid.push(value);
        max = max.max(value);
        min = min.min(value);
    }
    Ok(BrownianBlock {
        grid,
        b1: value,
        h: max - min,
    })
}

/// Truncated jump expansion of the continuum block partition function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockZEstimate {
    /// Sum over admissible jump counts `<= jmax` of the exact grid average
    /// of `exp(integral s dB)` weighted by `x^j / j!`.
    pub value: f64,
    /// Upper bound on the omitted tail: `exp(b B1) (x e^{2H})^{jmax+1} /
    /// (jmax+1)! * exp(x e^{2H})`.
    pub truncation_bound: f64,
}

const JMAX_LIMIT: usize = 30;

/// Evaluates the block partition function for boundary spins `(a, b)` by
/// expanding over the number of jumps, keeping terms with the parity forced
/// by the boundary. Jump sites are averaged exactly over the grid cells via
/// a dynamic program, with the field integral evaluated exactly for
/// piecewise-constant trajectories.
pub fn continuum_block_z(
    block: &BrownianBlock,
    j: f64,
    a: Spin,
    b: Spin,
    jmax: usize,
) -> Result<BlockZEstimate> {
    if !(2..=JMAX_LIMIT).contains(&jmax) {
        return Err(Error::InvalidParameter {
            field: "jmax",
            message: "must be between 2 and 30",
        });
    }
    let g = block.grid.len() - 1;
    let x = (-2.0 * j).exp();
    let site_weight = x / g as f64;

    // inv_fact[t] * site_weight^t: weight of placing t jumps at one site.
    let mut place = [0.0f64; JMAX_LIMIT + 1];
    let mut fact = 1.0;
    for (t, slot) in place.iter_mut().enumerate().take(jmax + 1) {
        if t > 0 {
            fact *= t as f64;
        }
        *slot = site_weight.powi(t as i32) / fact;
    }

    // d[m]: partial weight of trajectories with m jumps so far.
    let mut d = alloc::vec![0.0f64; jmax + 1];
    d[0] = 1.0;
    let mut scratch = alloc::vec![0.0f64; jmax + 1];
    for cell in 1..=g {
        // Place jumps at the start of this cell.
        for m in 0..=jmax {
            let mut acc = 0.0;
            for t in 0..=m {
                acc += d[m - t] * place[t];
            }
            scratch[m] = acc;
        }
        // Traverse the cell: sign is a * (-1)^jumps.
        let delta = block.grid[cell] - block.grid[cell - 1];
        for m in 0..=jmax {
            let sign = if m % 2 == 0 { a.value() } else { -a.value() };
            d[m] = scratch[m] * (sign * delta).exp();
        }
    }

    let odd_needed = a != b;
    let value = d
        .iter()
        .enumerate()
        .filter(|(m, _)| (m % 2 == 1) == odd_needed)
        .map(|(_, v)| v)
        .sum::<f64>();

    // Poisson tail of the omitted jump counts, in log form to avoid overflow.
    let y = x * (2.0 * block.h).exp();
    let mut log_fact = 0.0;
    for t in 1..=(jmax + 1) {
        log_fact += (t as f64).ln();
    }
    let log_tail = b.value() * block.b1 + (jmax + 1) as f64 * y.ln() - log_fact + y;
    Ok(BlockZEstimate {
        value,
        truncation_bound: log_tail.exp(),
    })
}

/// Exact-identity check of the variance scaling `F_vartheta(J) =
/// vartheta^2 * F(J + log vartheta)`: evaluates both sides through
/// independent floating routes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingIdentityReport {
    pub j: f64,
    pub vartheta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub pass: bool,
}

pub fn scaling_identity_check(j: f64, vartheta: f64) -> Result<ScalingIdentityReport> {
    if !(vartheta.is_finite() && vartheta > 0.0) {
        return Err(Error::InvalidParameter {
            field: "vartheta",
            message: "must be finite and > 0",
        });
    }
    let shifted = j + vartheta.ln();
    let lhs = vartheta * vartheta * continuum_free_energy(shifted).f_exact;
    // Second route: form the jump rate from x = exp(-2J) / vartheta^2 and
    // evaluate the Bessel ratio on it directly.
    let x = (-2.0 * j).exp() / (vartheta * vartheta);
    let rhs = if x > 0.0 && x.is_finite() {
        let (k0, k1) = bessel_k0_k1(x);
        vartheta * vartheta * x * k1 / k0
    } else {
        lhs
    };
    let abs_diff = (lhs - rhs).abs();
    Ok(ScalingIdentityReport {
        j,
        vartheta,
        lhs,
        rhs,
        abs_diff,
        pass: abs_diff <= 1e-12 * lhs.abs().max(1.0),
    })
}

/// Monte Carlo estimates of the Brownian tail terms entering the
/// discrete/continuum free-energy sandwich at threshold `m`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichErrorTerms {
    /// `E[2 (H - m)_+]`, the slack of the upper comparison.
    pub upper_excess: MeanSe,
    /// `E[(2(H - m) + exp(2(H - m - j))) 1{H > m}]`, the tail part of the
    /// lower comparison.
    pub lower_excess: MeanSe,
    /// The deterministic `exp(-2j)` term of the lower comparison.
    pub jump_cost: f64,
    pub blocks: usize,
    pub grid_cells: usize,
}

pub fn sandwich_error_terms(
    j: f64,
    m: f64,
    grid_cells: usize,
    blocks: usize,
    seed: u64,
) -> Result<SandwichErrorTerms> {
    if blocks == 0 {
        return Err(Error::Empty("blocks"));
    }
    let mut upper = Vec::with_capacity(blocks);
    let mut lower = Vec::with_capacity(blocks);
    for i in 0..blocks {
        let mut rng = StreamRng::new(seed, i as u64);
        let block = sample_brownian_block(grid_cells, &mut rng)?;
        let excess = (block.h - m).max(0.0);
        upper.push(2.0 * excess);
        lower.push(if block.h > m {
            2.0 * (block.h - m) + (2.0 * (block.h - m - j)).exp()
        } else {
            0.0
        });
    }
    Ok(SandwichErrorTerms {
        upper_excess: mean_and_se(&upper),
        lower_excess: mean_and_se(&lower),
        jump_cost: (-2.0 * j).exp(),
        blocks,
        grid_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, K0, K1) from a 50-digit evaluation.
    const BESSEL_TABLE: [(f64, f64, f64); 20] = [
        (1e-8, 18.536_612_259_610_777, 99_999_999.999_999_91),
        (1e-4, 9.326_271_913_450_276, 9_999.999_508_686_406),
        (0.01, 4.721_244_730_161_095, 99.973_894_118_296_24),
        (0.1, 2.427_069_024_702_017, 9.853_844_780_870_606),
        (0.5, 0.924_419_071_227_665_9, 1.656_441_120_003_301),
        (1.0, 0.421_024_438_240_708_34, 0.601_907_230_197_234_6),
        (1.5, 0.213_805_562_647_525_73, 0.277_387_800_456_843_8),
        (1.9, 0.128_845_979_276_047_5, 0.159_660_153_032_667_62),
        (1.99, 0.115_301_767_551_776_8, 0.141_717_561_622_401_32),
        (2.0, 0.113_893_872_749_533_44, 0.139_865_881_816_522_43),
        (2.01, 0.112_504_360_998_728_01, 0.138_040_877_319_207_67),
        (2.5, 0.062_347_553_200_366_19, 0.073_890_816_347_747_07),
        (3.0, 0.034_739_504_386_279_25, 0.040_156_431_128_194_184),
        (5.0, 0.003_691_098_334_042_594_2, 0.004_044_613_445_452_165),
        (10.0, 0.000_017_780_062_316_167_65, 0.000_018_648_773_453_825_585),
        (20.0, 5.741_237_815_336_525e-10, 5.883_057_969_557_038e-10),
        (58.0, 1.062_522_020_595_904_3e-26, 1.071_642_874_844_445_7e-26),
        (100.0, 4.656_628_229_175_902e-45, 4.679_853_735_636_909_5e-45),
        (200.0, 1.225_681_979_776_533_4e-88, 1.228_742_373_472_985_9e-88),
        (460.0, 9.797_188_416_828_815e-202, 9.807_831_759_648_265e-202),
    ];

    // (J, x K1(x) / K0(x)) with x = exp(-2J), same precision source.
    const F_TABLE: [(f64, f64); 13] = [
        (0.0, 1.429_625_398_260_401_7),
        (0.5, 0.747_241_652_254_115_2),
        (1.0, 0.458_156_450_268_881_9),
        (2.0, 0.242_744_946_034_830_04),
        (3.0, 0.163_503_774_593_943_97),
        (4.0, 0.123_214_381_697_615_9),
        (5.0, 0.098_853_969_794_610_04),
        (6.0, 0.082_535_956_765_624_42),
        (8.0, 0.062_050_400_191_157_47),
        (-0.5, 3.183_472_232_148_422),
        (-1.0, 7.874_046_750_905_048),
        (-2.03, 58.472_191_174_736_02),
        (-3.063, 458.101_814_062_569_76),
    ];

    #[test]
    fn bessel_matches_reference_across_crossover() {
        for &(x, k0_ref, k1_ref) in &BESSEL_TABLE {
            let (k0, k1) = bessel_k0_k1(x);
            assert!(
                ((k0 - k0_ref) / k0_ref).abs() < 1e-12,
                "K0({x}): {k0} vs {k0_ref}"
            );
            assert!(
                ((k1 - k1_ref) / k1_ref).abs() < 1e-12,
                "K1({x}): {k1} vs {k1_ref}"
            );
        }
    }

    #[test]
    fn free_energy_matches_reference() {
        for &(j, f_ref) in &F_TABLE {
            let eval = continuum_free_energy(j);
            assert!(
                ((eval.f_exact - f_ref) / f_ref).abs() < 1e-12,
                "F({j}): {} vs {f_ref}",
                eval.f_exact
            );
        }
    }

    #[test]
    fn free_energy_extreme_couplings_stay_finite() {
        for j in [200.0, 400.0, 5000.0] {
            let eval = continuum_free_energy(j);
            assert!(eval.f_exact.is_finite() && eval.f_exact > 0.0);
            // Far past underflow of x the exact value collapses onto the
            // asymptote.
            assert!((eval.f_exact - eval.f_asym).abs() < 1e-15);
        }
        let eval = continuum_free_energy(-250.0);
        assert!(eval.f_exact.is_finite());
    }

    #[test]
    fn free_energy_is_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let j = -2.0 + 0.25 * k as f64;
            let f = continuum_free_energy(j).f_exact;
            assert!(f < prev, "J={j}");
            prev = f;
        }
    }

    #[test]
    fn asymptote_gap_shrinks_like_exp_minus_four_j() {
        let gaps: Vec<f64> = [3.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&j| continuum_free_energy(j).gap)
            .collect();
        for w in gaps.windows(2) {
            let ratio = w[1] / w[0];
            assert!(
                ((-4.5f64).exp()..(-3.5f64).exp()).contains(&ratio),
                "gap ratio {ratio}"
            );
        }
    }

    #[test]
    fn asymptote_value_at_j_two() {
        let eval = continuum_free_energy(2.0);
        let expected = 1.0 / (4.0 + LN_2 - EULER_MASCHERONI);
        assert!((eval.f_asym - expected).abs() < 1e-15);
        assert!(eval.gap < 1.0 * (-8.0f64).exp());
    }

    #[test]
    fn brownian_block_basics() {
        let mut rng = StreamRng::new(5, 0);
        let block = sample_brownian_block(2, &mut rng).unwrap();
        assert_eq!(block.grid.len(), 3);
        let max = block.grid.iter().cloned().fold(f64::MIN, f64::max);
        let min = block.grid.iter().cloned().fold(f64::MAX, f64::min);
        assert!((block.h - (max - min)).abs() < 1e-15);

        for stream in 0..200 {
            let mut rng = StreamRng::new(9, stream);
            let block = sample_brownian_block(64, &mut rng).unwrap();
            assert!(block.h >= block.b1.abs());
            assert!(block.h >= 0.0);
        }
        assert!(sample_brownian_block(1, &mut rng).is_err());
    }

    #[test]
    fn gap_tail_bound_with_fitted_constant() {
        // P[H >= lambda] <= C exp(-lambda^2 / 8); C = 2 covers the union
        // bound over the max and the min with margin.
        let trials = 40_000;
        let mut counts = [0usize; 3];
        let lambdas = [2.0, 3.0, 4.0];
        for i in 0..trials {
            let mut rng = StreamRng::new(31, i as u64);
            let block = sample_brownian_block(512, &mut rng).unwrap();
            for (k, &lam) in lambdas.iter().enumerate() {
                if block.h >= lam {
                    counts[k] += 1;
                }
            }
        }
        for (k, &lam) in lambdas.iter().enumerate() {
            let p_hat = counts[k] as f64 / trials as f64;
            let se = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
            let bound = 2.0 * (-lam * lam / 8.0).exp();
            assert!(
                p_hat <= bound + 3.0 * se,
                "lambda={lam}: {p_hat} vs {bound}"
            );
        }
    }

    #[test]
    fn tail_expectation_cauchy_schwarz() {
        let m = 2.0;
        let trials = 20_000;
        let mut excess = Vec::with_capacity(trials);
        let mut h2 = Vec::with_capacity(trials);
        let mut indicator = Vec::with_capacity(trials);
        for i in 0..trials {
            let mut rng = StreamRng::new(17, i as u64);
            let block = sample_brownian_block(256, &mut rng).unwrap();
            excess.push((block.h - m).max(0.0));
            h2.push(block.h * block.h);
            indicator.push(if block.h > m { 1.0 } else { 0.0 });
        }
        let lhs = mean_and_se(&excess);
        let rhs = (mean_and_se(&h2).mean * mean_and_se(&indicator).mean).sqrt();
        assert!(lhs.mean <= rhs + 3.0 * lhs.se, "{} vs {rhs}", lhs.mean);
    }

    #[test]
    fn block_z_no_jump_limit() {
        // At strong coupling with matching boundaries the no-jump term
        // dominates and the value approaches exp(b * B1).
        let mut rng = StreamRng::new(3, 0);
        let block = sample_brownian_block(512, &mut rng).unwrap();
        let z = continuum_block_z(&block, 8.0, Spin::Up, Spin::Up, 6).unwrap();
        let leading = block.b1.exp();
        assert!((z.value / leading - 1.0).abs() < 1e-5);
    }

    #[test]
    fn block_z_single_jump_dominance() {
        // With opposed boundaries the value is exp(-2J) times the average
        // over single jump sites, up to O(x^2) corrections.
        let mut rng = StreamRng::new(4, 0);
        let block = sample_brownian_block(256, &mut rng).unwrap();
        let g = 256;
        let j = 6.0;
        let x = (-2.0 * j).exp();
        let mut avg = 0.0;
        for site in 0..g {
            // Jump at the start of cell site+1: sign flips from there on.
            let prefix = block.grid[site];
            // integral = a*(B_site - 0) + b*(B1 - B_site), a = +1, b = -1
            avg += (prefix - (block.b1 - prefix)).exp();
        }
        avg /= g as f64;
        let z = continuum_block_z(&block, j, Spin::Up, Spin::Down, 6).unwrap();
        assert!(
            (z.value / (x * avg) - 1.0).abs() < 1e-4,
            "{} vs {}",
            z.value,
            x * avg
        );
    }

    #[test]
    fn block_z_respects_realizationwise_sandwich() {
        // For every realization and every threshold m the truncated value
        // obeys the two-sided bound built from (B1, H); the lower side needs
        // only the minimal admissible jump count, the upper side holds for
        // the full series and a fortiori for the truncation.
        let j = 2.0;
        for trial in 0..200 {
            let mut rng = StreamRng::new(23, trial);
            let block = sample_brownian_block(128, &mut rng).unwrap();
            for (a, b) in Spin::boundary_pairs() {
                let z = continuum_block_z(&block, j, a, b, 4).unwrap();
                let ln_z = z.value.ln();
                let flip = if a != b { 1.0 } else { 0.0 };
                for m in [0.0, 1.0, block.h] {
                    let excess = (block.h - m).max(0.0);
                    let lower =
                        -2.0 * (j + m) * flip + b.value() * block.b1 - 2.0 * excess;
                    let upper = -2.0 * (j - m) * flip
                        + b.value() * block.b1
                        + 2.0 * excess
                        + (2.0 * (block.h - j)).exp();
                    assert!(ln_z >= lower - 1e-10, "trial {trial} m={m}");
                    assert!(ln_z <= upper + 1e-10, "trial {trial} m={m}");
                }
            }
        }
    }

    #[test]
    fn block_z_rejects_bad_jmax() {
        let mut rng = StreamRng::new(1, 0);
        let block = sample_brownian_block(16, &mut rng).unwrap();
        assert!(continuum_block_z(&block, 2.0, Spin::Up, Spin::Down, 1).is_err());
        assert!(continuum_block_z(&block, 2.0, Spin::Up, Spin::Up, 31).is_err());
    }

    #[test]
    fn scaling_identity_is_exact() {
        for (vartheta, j) in [(1.0, 2.0), (2.0, 3.0), (0.5, 4.0)] {
            let report = scaling_identity_check(j, vartheta).unwrap();
            assert!(report.pass, "{report:?}");
            if vartheta == 1.0 {
                assert_eq!(report.lhs, report.rhs);
            }
        }
    }

    #[test]
    fn sandwich_error_terms_are_small_at_desk_scale() {
        let j = 4.0;
        let m = 6.0 * (4.0f64.ln()).sqrt();
        let terms = sandwich_error_terms(j, m, 512, 4_000, 7).unwrap();
        // At m ~ 7 the exceedance is rare: both tail terms are tiny compared
        // with the free-energy scale 1/(2J).
        assert!(terms.upper_excess.mean < 0.01);
        assert!(terms.lower_excess.mean < 0.01);
        assert!((terms.jump_cost - (-8.0f64).exp()).abs() < 1e-18);
    }
}
