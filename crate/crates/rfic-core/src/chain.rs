//! Exact partition functions and free-energy estimation for the chain.
//!
//! The partition function with boundary spins `(a, b)` factors through a
//! left-to-right product of positive 2x2 transfer matrices, one per site:
//! `Z = (M(h_1) ... M(h_N))[a][b]` with `M(h)[c][b'] = exp(-2J 1{c != b'} +
//! b' h)`. Entries span `exp(+-(2J + |h|))` per step, so the running row
//! vector is kept in log scale and renormalized after every step: the
//! subtracted maxima accumulate in `lognorm` and the vector itself stays at
//! `max = 0`.
//!
//! First and second derivatives in the coupling are propagated analytically
//! alongside the product (the derivative of a matrix entry is `-2` times the
//! entry on flip transitions), stored as entrywise ratios to the vector so
//! they stay bounded for any field magnitude. Finite differences appear only
//! as a test oracle.

use serde::Serialize;

#[allow(unused_imports)]
use num_traits::Float; // f64 math methods in no_std builds

use alloc::vec::Vec;

use crate::disorder::FieldSampler;
use crate::math::{logaddexp, mean_and_se};
use crate::rng::StreamRng;
use crate::{Error, Result};

/// A spin value, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    #[inline]
    fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    /// All four boundary pairs `(a, b)`.
    pub fn boundary_pairs() -> [(Spin, Spin); 4] {
        [
            (Spin::Up, Spin::Up),
            (Spin::Up, Spin::Down),
            (Spin::Down, Spin::Up),
            (Spin::Down, Spin::Down),
        ]
    }
}

/// Coupling strength and boundary condition of a finite chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainParams {
    /// Spin-spin interaction `J >= 0`.
    pub coupling: f64,
    /// Boundary spins `(a, b)`: the chain is pinned to `a` on the left and
    /// `b` on the right.
    pub boundary: (Spin, Spin),
}

impl ChainParams {
    pub fn new(coupling: f64, boundary: (Spin, Spin)) -> Result<Self> {
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(Error::InvalidParameter {
                field: "coupling",
                message: "must be finite and >= 0",
            });
        }
        Ok(ChainParams { coupling, boundary })
    }

    /// Default boundary `(+1, +1)`.
    pub fn ferromagnetic(coupling: f64) -> Result<Self> {
        Self::new(coupling, (Spin::Up, Spin::Up))
    }
}

/// One-site transfer matrix; entry `[c][b]` is the Boltzmann weight of the
/// step from spin `c` to spin `b` under field `h`.
pub fn step_matrix(h: f64, params: &ChainParams) -> [[f64; 2]; 2] {
    let j2 = (-2.0 * params.coupling).exp();
    [
        [h.exp(), j2 * (-h).exp()],
        [j2 * h.exp(), (-h).exp()],
    ]
}

#[derive(Debug, Clone, Copy)]
struct DerivRatios {
    /// Entrywise `dV/dJ / V`, i.e. the first log-derivative of each entry.
    d1: [f64; 2],
    /// Entrywise `d2V/dJ2 / V`.
    d2: [f64; 2],
}

/// Running log-scale row vector of the transfer-matrix product.
#[derive(Debug, Clone)]
pub struct LogChainState {
    /// Log of the renormalized row vector, indexed by current spin;
    /// `max(logvec) == 0` after every step.
    logvec: [f64; 2],
    /// Accumulated sum of subtracted maxima.
    lognorm: f64,
    steps: usize,
    deriv: Option<DerivRatios>,
}

/// `1 / (1 + exp(z))` without overflow.
#[inline]
fn logistic_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

impl LogChainState {
    /// Fresh state pinned to the left boundary spin.
    pub fn new(start: Spin, with_derivatives: bool) -> Self {
        let mut logvec = [f64::NEG_INFINITY; 2];
        logvec[start.index()] = 0.0;
        LogChainState {
            logvec,
            lognorm: 0.0,
            steps: 0,
            deriv: with_derivatives.then_some(DerivRatios {
                d1: [0.0; 2],
                d2: [0.0; 2],
            }),
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Absorbs one site with field `h` at coupling `j`.
    pub fn step(&mut self, h: f64, j: f64) {
        let two_j = 2.0 * j;
        let [lp, lm] = self.logvec;
        let new_lp = h + logaddexp(lp, lm - two_j);
        let new_lm = -h + logaddexp(lm, lp - two_j);

        if let Some(d) = self.deriv.as_mut() {
            // Weight of the flipped predecessor inside each new entry.
            let t_p = logistic_neg(lp - lm + two_j);
            let t_m = logistic_neg(lm - lp + two_j);
            let [r1p, r1m] = d.d1;
            let [r2p, r2m] = d.d2;
            d.d1 = [
                (1.0 - t_p) * r1p + t_p * (r1m - 2.0),
                (1.0 - t_m) * r1m + t_m * (r1p - 2.0),
            ];
            d.d2 = [
                (1.0 - t_p) * r2p + t_p * (r2m - 4.0 * r1m + 4.0),
                (1.0 - t_m) * r2m + t_m * (r2p - 4.0 * r1p + 4.0),
            ];
        }

        let m = new_lp.max(new_lm);
        self.logvec = [new_lp - m, new_lm - m];
        self.lognorm += m;
        self.steps += 1;
    }

    /// `log Z` for the given right boundary spin.
    pub fn log_partition(&self, end: Spin) -> f64 {
        self.lognorm + self.logvec[end.index()]
    }

    /// `d(log Z)/dJ`; `None` when derivative tracking is off.
    pub fn dlog_partition(&self, end: Spin) -> Option<f64> {
        self.deriv.as_ref().map(|d| d.d1[end.index()])
    }

    /// `d2(log Z)/dJ2`; `None` when derivative tracking is off.
    pub fn d2log_partition(&self, end: Spin) -> Option<f64> {
        self.deriv.as_ref().map(|d| {
            let r1 = d.d1[end.index()];
            d.d2[end.index()] - r1 * r1
        })
    }
}

/// `log Z` of the chain over the sites of `h` (a sub-range of a longer
/// field sequence is just a subslice).
pub fn log_partition(h: &[f64], params: &ChainParams) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::Empty("field sequence"));
    }
    let (a, b) = params.boundary;
    let mut state = LogChainState::new(a, false);
    for &field in h {
        state.step(field, params.coupling);
    }
    Ok(state.log_partition(b))
}

/// Mean and variance of the spin-flip density under the Gibbs measure of a
/// fixed field realization, obtained from the analytic `J`-derivatives:
/// the mean is `-1/2 d/dJ ((1/N) log Z)` and the variance is
/// `1/(4N) d2/dJ2 ((1/N) log Z)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlipDensityReport {
    /// Expected fraction of sites with a spin flip, in `[0, 1]`.
    pub mean_density: f64,
    /// Gibbs variance of the flip density, `>= 0`.
    pub variance_density: f64,
    pub chain_length: usize,
}

fn flip_report(state: &LogChainState, end: Spin) -> FlipDensityReport {
    let n = state.steps() as f64;
    let d1 = state.dlog_partition(end).expect("derivatives enabled");
    let d2 = state.d2log_partition(end).expect("derivatives enabled");
    FlipDensityReport {
        // Clamps guard against rounding at the exact boundary values.
        mean_density: (-d1 / (2.0 * n)).clamp(0.0, 1.0),
        variance_density: (d2 / (4.0 * n * n)).max(0.0),
        chain_length: state.steps(),
    }
}

/// Exact flip-density observables for an explicit field sequence.
pub fn flip_observables(h: &[f64], params: &ChainParams) -> Result<FlipDensityReport> {
    if h.is_empty() {
        return Err(Error::Empty("field sequence"));
    }
    let (a, b) = params.boundary;
    let mut state = LogChainState::new(a, true);
    for &field in h {
        state.step(field, params.coupling);
    }
    Ok(flip_report(&state, b))
}

/// The all-zero reference field; gives the closed-form free energy
/// `log(1 + exp(-2J))` in the large-N limit.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField;

impl FieldSampler for ZeroField {
    #[inline]
    fn sample_field(&self, _rng: &mut StreamRng) -> f64 {
        0.0
    }
}

/// Per-replica outcome of one streamed chain.
#[derive(Debug, Clone, Copy)]
pub struct ReplicaStats {
    /// `(1/N) log Z`.
    pub log_density: f64,
    pub flips: Option<FlipDensityReport>,
}

/// Streams one chain of length `chain_length` from `(seed, stream)` and
/// returns its per-site log partition function (and flip observables when
/// requested). Fields are drawn on the fly; nothing is materialized.
pub fn run_replica<S: FieldSampler>(
    source: &S,
    params: &ChainParams,
    chain_length: usize,
    seed: u64,
    stream: u64,
    with_derivatives: bool,
) -> ReplicaStats {
    let (a, b) = params.boundary;
    let mut rng = StreamRng::new(seed, stream);
    let mut state = LogChainState::new(a, with_derivatives);
    for _ in 0..chain_length {
        let h = source.sample_field(&mut rng);
        state.step(h, params.coupling);
    }
    ReplicaStats {
        log_density: state.log_partition(b) / chain_length as f64,
        flips: with_derivatives.then(|| flip_report(&state, b)),
    }
}

/// A replica-averaged free-energy estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FreeEnergyEstimate {
    /// Per-site free energy.
    pub value: f64,
    /// Standard error over replicas.
    pub stderr: f64,
    pub chain_length: usize,
    pub replicas: usize,
    pub seed: u64,
}

fn check_replica_args(chain_length: usize, replicas: usize) -> Result<()> {
    if chain_length == 0 {
        return Err(Error::InvalidParameter {
            field: "chain_length",
            message: "must be >= 1",
        });
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter {
            field: "replicas",
            message: "must be >= 1",
        });
    }
    Ok(())
}

/// Estimates the free energy density for `source` at the given coupling
/// by averaging `(1/N) log Z` over independent replicas (replica `r` uses
/// stream `r`). Deterministic given `(seed, chain_length, replicas)`.
pub fn free_energy<S: FieldSampler>(
    source: &S,
    params: &ChainParams,
    chain_length: usize,
    replicas: usize,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    check_replica_args(chain_length, replicas)?;
    let values: Vec<f64> = (0..replicas)
        .map(|r| run_replica(source, params, chain_length, seed, r as u64, false).log_density)
        .collect();
    let stats = mean_and_se(&values);
    Ok(FreeEnergyEstimate {
        value: stats.mean,
        stderr: stats.se,
        chain_length,
        replicas,
        seed,
    })
}

/// A replica-averaged estimate of the limiting spin-flip density
/// (the `N -> infinity` value `-F'(J)/2`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlipDensityEstimate {
    pub mean_density: f64,
    /// Standard error of the replica means.
    pub stderr: f64,
    /// Replica average of the per-chain Gibbs variance of the density.
    pub mean_gibbs_variance: f64,
    pub chain_length: usize,
    pub replicas: usize,
    pub seed: u64,
}

/// Estimates the limiting flip density on long chains via derivative
/// propagation; uses the same streams as [`free_energy`].
pub fn flip_density_limit<S: FieldSampler>(
    source: &S,
    params: &ChainParams,
    chain_length: usize,
    replicas: usize,
    seed: u64,
) -> Result<FlipDensityEstimate> {
    check_replica_args(chain_length, replicas)?;
    let reports: Vec<FlipDensityReport> = (0..replicas)
        .map(|r| {
            run_replica(source, params, chain_length, seed, r as u64, true)
                .flips
                .expect("derivatives enabled")
        })
        .collect();
    let means: Vec<f64> = reports.iter().map(|r| r.mean_density).collect();
    let stats = mean_and_se(&means);
    let mean_gibbs_variance =
        reports.iter().map(|r| r.variance_density).sum::<f64>() / replicas as f64;
    Ok(FlipDensityEstimate {
        mean_density: stats.mean,
        stderr: stats.se,
        mean_gibbs_variance,
        chain_length,
        replicas,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::DisorderLaw;

    fn params(j: f64, a: Spin, b: Spin) -> ChainParams {
        ChainParams::new(j, (a, b)).unwrap()
    }

    #[test]
    fn step_matrix_field_free() {
        let p = params(0.0, Spin::Up, Spin::Up);
        let m = step_matrix(0.0, &p);
        assert_eq!(m, [[1.0, 1.0], [1.0, 1.0]]);

        let p = params(1.25, Spin::Up, Spin::Up);
        let m = step_matrix(0.0, &p);
        let off = (-2.5f64).exp();
        assert_eq!(m[0][0], 1.0);
        assert_eq!(m[1][1], 1.0);
        assert!((m[0][1] - off).abs() < 1e-16);
        assert!((m[1][0] - off).abs() < 1e-16);
    }

    #[test]
    fn single_site_matches_matrix_entry() {
        let h = 0.73;
        for (a, b) in Spin::boundary_pairs() {
            let p = params(0.9, a, b);
            let m = step_matrix(h, &p);
            let flip = if a != b { 1.0 } else { 0.0 };
            let direct = (-2.0 * p.coupling * flip + b.value() * h).exp();
            assert!((m[a.index()][b.index()] - direct).abs() < 1e-15);
            let lz = log_partition(&[h], &p).unwrap();
            assert!((lz - direct.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_free_sites_count_configurations() {
        let p = params(0.0, Spin::Up, Spin::Up);
        let lz = log_partition(&[0.0, 0.0], &p).unwrap();
        assert!((lz - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let p = params(1.0, Spin::Up, Spin::Up);
        assert!(matches!(log_partition(&[], &p), Err(Error::Empty(_))));
    }

    #[test]
    fn zero_field_free_energy_hits_top_eigenvalue() {
        // The field-free transfer matrix has top eigenvalue 1 + exp(-2J).
        for j in [0.0, 1.0, 3.0] {
            let p = ChainParams::ferromagnetic(j).unwrap();
            let est = free_energy(&ZeroField, &p, 100_000, 1, 0).unwrap();
            let exact = (-2.0 * j).exp().ln_1p();
            assert!(
                (est.value - exact).abs() < 1e-4,
                "J={j}: {} vs {exact}",
                est.value
            );
        }
    }

    #[test]
    fn gaussian_j_zero_matches_closed_form() {
        // At J = 0 the product telescopes: F = E[log(2 cosh h)].
        let law = DisorderLaw::gaussian(1.0).unwrap();
        let p = ChainParams::ferromagnetic(0.0).unwrap();
        let est = free_energy(&law, &p, 200_000, 8, 3).unwrap();
        // E[log(2 cosh Z)] for standard normal Z, via fine quadrature.
        let quad: f64 = {
            let n = 20_000;
            (0..n)
                .map(|k| {
                    let u = (k as f64 + 0.5) / n as f64;
                    let z = crate::math::standard_normal_quantile(u);
                    (2.0 * z.cosh()).ln()
                })
                .sum::<f64>()
                / n as f64
        };
        assert!(
            (est.value - quad).abs() < 4.0 * est.stderr.max(1e-3),
            "{} vs {quad}",
            est.value
        );
    }

    #[test]
    fn boundary_choice_shifts_log_z_by_at_most_crossing_cost() {
        let law = DisorderLaw::gaussian(1.0).unwrap();
        let n = 100_000;
        let j = 2.0;
        let mut values = Vec::new();
        for (a, b) in Spin::boundary_pairs() {
            let p = params(j, a, b);
            values.push(run_replica(&law, &p, n, 11, 0, false).log_density);
        }
        let spread = values.iter().cloned().fold(f64::MIN, f64::max)
            - values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 8.0 * j / n as f64 + 1e-12, "spread {spread}");
    }

    #[test]
    fn log_partition_is_nonincreasing_and_convex_in_j() {
        let law = DisorderLaw::uniform(1.0).unwrap();
        let mut rng = StreamRng::new(5, 0);
        let h: Vec<f64> = (0..200).map(|_| law.sample_field(&mut rng)).collect();
        let step = 0.25;
        let grid: Vec<f64> = (0..25).map(|k| k as f64 * step).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&j| {
                log_partition(&h, &params(j, Spin::Up, Spin::Down)).unwrap() / h.len() as f64
            })
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for w in vals.windows(3) {
            let second = w[2] - 2.0 * w[1] + w[0];
            assert!(second >= -1e-9, "second difference {second}");
        }
    }

    #[test]
    fn free_energy_is_nonnegative_within_tolerance() {
        let law = DisorderLaw::exponential_diff(1.0).unwrap();
        for j in [0.5, 2.0, 5.0] {
            let p = ChainParams::ferromagnetic(j).unwrap();
            let est = free_energy(&law, &p, 50_000, 8, 9).unwrap();
            assert!(est.value >= -3.0 * est.stderr);
        }
    }

    #[test]
    fn single_site_flip_densities_are_exact() {
        for h in [-1.3, 0.0, 2.4] {
            for j in [0.0, 1.7] {
                let same = flip_observables(&[h], &params(j, Spin::Up, Spin::Up)).unwrap();
                assert_eq!(same.mean_density, 0.0);
                assert_eq!(same.variance_density, 0.0);
                let diff = flip_observables(&[h], &params(j, Spin::Up, Spin::Down)).unwrap();
                assert_eq!(diff.mean_density, 1.0);
                assert_eq!(diff.variance_density, 0.0);
            }
        }
    }

    #[test]
    fn flip_density_matches_finite_differences() {
        let law = DisorderLaw::gaussian(1.0).unwrap();
        let mut rng = StreamRng::new(77, 0);
        for trial in 0..100 {
            let n = 10;
            let h: Vec<f64> = (0..n).map(|_| law.sample_field(&mut rng)).collect();
            let j = 0.3 + 0.03 * trial as f64;
            let (a, b) = Spin::boundary_pairs()[trial % 4];
            let report = flip_observables(&h, &params(j, a, b)).unwrap();

            let f = |jj: f64| log_partition(&h, &params(jj, a, b)).unwrap() / n as f64;
            let d1 = 1e-5;
            let fd_mean = -0.5 * (f(j + d1) - f(j - d1)) / (2.0 * d1);
            assert!(
                (report.mean_density - fd_mean).abs() <= 1e-5 * fd_mean.abs().max(1e-8),
                "trial {trial}: {} vs {fd_mean}",
                report.mean_density
            );

            // Wider step for the second difference: the quotient amplifies
            // rounding in log Z by 1/d^2.
            let d2 = 1e-3;
            let fd_var = (f(j + d2) - 2.0 * f(j) + f(j - d2)) / (d2 * d2) / (4.0 * n as f64);
            assert!(
                (report.variance_density - fd_var).abs() <= 1e-5 * fd_var.abs().max(1e-8),
                "trial {trial}: {} vs {fd_var}",
                report.variance_density
            );
        }
    }

    #[test]
    fn zero_field_flip_density_limit() {
        for j in [0.5, 1.0, 2.0] {
            let p = ChainParams::ferromagnetic(j).unwrap();
            let est = flip_density_limit(&ZeroField, &p, 100_000, 1, 0).unwrap();
            let exact = (-2.0 * j).exp() / (1.0 + (-2.0 * j).exp());
            assert!(
                (est.mean_density - exact).abs() < 1e-4,
                "J={j}: {} vs {exact}",
                est.mean_density
            );
        }
    }

    #[test]
    fn opposed_boundaries_force_one_flip_at_strong_coupling() {
        let n = 20;
        let law = DisorderLaw::uniform(1.0).unwrap();
        let mut rng = StreamRng::new(2, 0);
        let h: Vec<f64> = (0..n).map(|_| law.sample_field(&mut rng)).collect();
        let report = flip_observables(&h, &params(50.0, Spin::Up, Spin::Down)).unwrap();
        assert!(report.mean_density >= 1.0 / n as f64 - 1e-12);
        assert!((report.mean_density - 1.0 / n as f64).abs() < 1e-6);
    }

    #[test]
    fn state_is_renormalized_after_every_step() {
        let law = DisorderLaw::pareto(1.0, 2.5).unwrap();
        let mut rng = StreamRng::new(8, 0);
        let mut state = LogChainState::new(Spin::Up, true);
        for _ in 0..2000 {
            state.step(law.sample_field(&mut rng), 7.0);
            let max = state.logvec[0].max(state.logvec[1]);
            assert_eq!(max, 0.0);
            assert!(state.lognorm.is_finite());
        }
    }

    #[test]
    fn heavy_tailed_fields_do_not_overflow() {
        // Pareto fields can reach hundreds; the log-domain update and the
        // ratio-form derivatives must stay finite.
        let law = DisorderLaw::pareto(1.0, 2.5).unwrap();
        let p = params(6.0, Spin::Up, Spin::Down);
        let stats = run_replica(&law, &p, 50_000, 123, 0, true);
        assert!(stats.log_density.is_finite());
        let flips = stats.flips.unwrap();
        assert!(flips.mean_density.is_finite() && flips.variance_density.is_finite());
        assert!((0.0..=1.0).contains(&flips.mean_density));
        assert!(flips.variance_density >= 0.0);
    }
}
