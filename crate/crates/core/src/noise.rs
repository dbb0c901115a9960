//! Noise samplers (Laplace, two-sided geometric, binomial, clipped Laplace
//! tail) and the analytic error scales `gamma` and `Gamma` used to calibrate
//! the noisy density threshold.
//!
//! Every sampler takes the RNG as an explicit argument; there is no hidden
//! global state, so experiments are reproducible from a seed.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Draws from the Laplace distribution with the given scale
/// (density `exp(-|z|/scale) / (2*scale)`).
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "laplace scale must be positive and finite, got {scale}"
        )));
    }
    let u = rng.random::<f64>() - 0.5;
    // inverse CDF; the max guards ln(0) at u = -0.5
    let t = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    Ok(-scale * u.signum() * t.ln())
}

/// Draws a two-sided geometric integer with mass
/// `(e^a - 1)/(e^a + 1) * e^{-a|z|}` where `a = eps_over_delta`.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, eps_over_delta: f64) -> Result<i64> {
    if !(eps_over_delta > 0.0 && eps_over_delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "geometric parameter must be positive and finite, got {eps_over_delta}"
        )));
    }
    // difference of two one-sided geometrics with success probability 1 - e^{-a}
    let ln_q = -eps_over_delta;
    let one_sided = |rng: &mut R| -> i64 {
        let u: f64 = rng.random();
        if u == 0.0 {
            return 0;
        }
        ((1.0 - u).ln() / ln_q).floor() as i64
    };
    let g1 = one_sided(rng);
    let g2 = one_sided(rng);
    Ok(g1 - g2)
}

/// Exact binomial draw; inversion for small `n*p`, BTPE-class rejection
/// otherwise. Never a normal approximation.
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "binomial probability must lie in [0,1], got {p}"
        )));
    }
    let dist = Binomial::new(n, p)
        .map_err(|e| Error::InvalidParameter(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Draws from the upper tail of `Lap(1/eps)` clipped to `[theta, inf)`,
/// i.e. the law with density `Pr[Lap(1/eps) = z] / p` for `z >= theta`,
/// where `p = exp(-eps*theta)/2`. Inverse transform: for `Z' ~ U[0,1)`,
/// `theta - ln(1 - Z')/eps`, which is exactly `theta` at `Z' = 0`.
pub fn sample_clipped_laplace<R: Rng + ?Sized>(rng: &mut R, eps: f64, theta: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be non-negative, got {theta}"
        )));
    }
    let z: f64 = rng.random();
    Ok(theta - (1.0 - z).ln() / eps)
}

/// High-probability sup-norm error of the dense Laplace histogram:
/// `gamma = ln(|X| / beta) / eps`.
pub fn gamma_laplace(eps: f64, universe_size: f64, beta: f64) -> f64 {
    (universe_size / beta).ln() / eps
}

/// Which concentration bound backs the neighborhood-sum slack `Gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BigGammaKind {
    /// Laplace-sum concentration with a union bound over all cells.
    Laplace,
    /// Two-sided-geometric concentration with a union bound over all cells.
    Geometric,
    /// Gaussian-sum bound for approximate DP; needs the failure mass `delta`.
    Gaussian { delta: f64 },
    /// The loose bound `kappa * gamma`.
    NaiveKappaGamma,
    /// High-pass-filter histogram: per-cell error grows by `theta`, so
    /// `Gamma = kappa * theta + Gamma_Laplace`.
    LinearHist { theta: f64 },
}

/// Scale factor bounding the deviation of a `kappa`-cell noisy sum,
/// simultaneously over a universe of `universe_size` cells except with
/// probability `beta`.
pub fn big_gamma(
    kind: BigGammaKind,
    kappa: usize,
    eps: f64,
    universe_size: f64,
    beta: f64,
) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::InvalidParameter("kappa must be >= 1".into()));
    }
    if !(eps > 0.0) || !(universe_size >= 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need eps > 0, universe_size >= 1, beta in (0,1); got {eps}, {universe_size}, {beta}"
        )));
    }
    let k = kappa as f64;
    let ln_term = (2.0 * universe_size / beta).ln();
    let laplace = 2.0 * std::f64::consts::SQRT_2 / eps * (k * ln_term).sqrt().max(ln_term);
    let value = match kind {
        BigGammaKind::Laplace => laplace,
        BigGammaKind::Geometric => {
            let e = eps.exp();
            if k >= e * ln_term {
                4.0 * e.sqrt() / (e - 1.0) * (k * ln_term).sqrt()
            } else {
                4.0 * e / (e - 1.0) * k.sqrt() * ln_term
            }
        }
        BigGammaKind::Gaussian { delta } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian bound needs delta in (0,1), got {delta}"
                )));
            }
            2.0 / eps * (k * (1.25 / delta).ln() * ln_term).sqrt()
        }
        BigGammaKind::NaiveKappaGamma => k * gamma_laplace(eps, universe_size, beta),
        BigGammaKind::LinearHist { theta } => {
            if !(theta >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "linear-histogram bound needs theta >= 0, got {theta}"
                )));
            }
            k * theta + laplace
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// RNG returning a fixed u64 forever; `random::<f64>()` maps 0 to 0.0.
    struct ConstRng(u64);
    impl rand::RngCore for ConstRng {
        fn next_u32(&mut self) -> u32 {
            self.0 as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            for b in dst {
                *b = 0;
            }
        }
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(sample_laplace(&mut rng, 0.0).is_err());
        assert!(sample_laplace(&mut rng, -1.0).is_err());
    }

    #[test]
    fn laplace_empirical_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let n = 1_000_000;
        let scale = 1.5;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut near_zero = 0u32;
        for _ in 0..n {
            let z = sample_laplace(&mut rng, scale).unwrap();
            sum += z;
            sum_sq += z * z;
            if z.abs() < 0.05 * scale {
                near_zero += 1;
            }
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01 * scale, "mean {mean}");
        let expected_var = 2.0 * scale * scale;
        assert!(
            (var - expected_var).abs() < 0.03 * expected_var,
            "variance {var} vs {expected_var}"
        );
        // density at 0 is 1/(2*scale): mass of [-0.05s, 0.05s] is ~0.1s/(2s)
        let mass = near_zero as f64 / n as f64;
        assert!((mass - 0.05).abs() < 0.003, "near-zero mass {mass}");
    }

    fn geometric_mass(a: f64, z: i64) -> f64 {
        (a.exp() - 1.0) / (a.exp() + 1.0) * (-a * z.abs() as f64).exp()
    }

    #[test]
    fn geometric_mass_at_zero_for_ln2() {
        // a = ln 2: (2-1)/(2+1) = 1/3
        let a = 2.0f64.ln();
        assert!((geometric_mass(a, 0) - 1.0 / 3.0).abs() < 1e-15);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 200_000;
        let zeros = (0..n)
            .filter(|_| sample_geometric(&mut rng, a).unwrap() == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.005, "freq {freq}");
    }

    #[test]
    fn geometric_total_mass_sums_to_one() {
        let total: f64 = (-50..=50).map(|z| geometric_mass(1.0, z)).sum();
        assert!((total - 1.0).abs() < 1e-15, "total {total}");
    }

    #[test]
    fn geometric_empirical_mean_is_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 500_000;
        let sum: i64 = (0..n)
            .map(|_| sample_geometric(&mut rng, 0.7).unwrap())
            .sum();
        let mean = sum as f64 / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn binomial_degenerate_probabilities() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        assert_eq!(sample_binomial(&mut rng, 1000, 0.0).unwrap(), 0);
        assert_eq!(sample_binomial(&mut rng, 1000, 1.0).unwrap(), 1000);
        assert!(sample_binomial(&mut rng, 10, 1.5).is_err());
        assert!(sample_binomial(&mut rng, 10, -0.1).is_err());
    }

    #[test]
    fn binomial_poisson_limit_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let trials = 10_000;
        let sum: u64 = (0..trials)
            .map(|_| sample_binomial(&mut rng, 1_000_000, 1e-6).unwrap())
            .sum();
        let mean = sum as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn clipped_laplace_at_zero_uniform_is_exactly_theta() {
        let mut rng = ConstRng(0);
        let theta = 2.75;
        let draw = sample_clipped_laplace(&mut rng, 1.3, theta).unwrap();
        assert_eq!(draw, theta);
    }

    #[test]
    fn clipped_laplace_support_is_above_theta() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let (eps, theta) = (0.8, 1.7);
        for _ in 0..1_000_000 {
            assert!(sample_clipped_laplace(&mut rng, eps, theta).unwrap() >= theta);
        }
    }

    #[test]
    fn clipped_laplace_matches_analytic_cdf() {
        // KS test against CDF(z) = 1 - exp(-eps (z - theta)) for z >= theta,
        // which equals 1 - e^{-eps z}/(2p) with p = e^{-eps theta}/2.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let (eps, theta) = (1.0, 1.0);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_clipped_laplace(&mut rng, eps, theta).unwrap())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d_stat: f64 = 0.0;
        for (i, z) in draws.iter().enumerate() {
            let cdf = 1.0 - (-eps * (z - theta)).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d_stat = d_stat.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        // Kolmogorov critical value at significance 0.01
        let crit = 1.6276 / (n as f64).sqrt();
        assert!(d_stat < crit, "KS statistic {d_stat} >= {crit}");
    }

    #[test]
    fn laplace_matches_analytic_cdf() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let scale = 2.0;
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_laplace(&mut rng, scale).unwrap())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |z: f64| {
            if z < 0.0 {
                0.5 * (z / scale).exp()
            } else {
                1.0 - 0.5 * (-z / scale).exp()
            }
        };
        let mut d_stat: f64 = 0.0;
        for (i, z) in draws.iter().enumerate() {
            let c = cdf(*z);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d_stat = d_stat.max((c - lo).abs()).max((hi - c).abs());
        }
        let crit = 1.6276 / (n as f64).sqrt();
        assert!(d_stat < crit, "KS statistic {d_stat} >= {crit}");
    }

    /// Chi-square goodness of fit of empirical counts against expected
    /// probabilities; buckets with tiny expectation must be pre-merged.
    fn chi_square_stat(observed: &[u64], expected: &[f64], n: u64) -> (f64, usize) {
        let mut stat = 0.0;
        let mut df = 0usize;
        for (&o, &p) in observed.iter().zip(expected) {
            let e = p * n as f64;
            stat += (o as f64 - e) * (o as f64 - e) / e;
            df += 1;
        }
        (stat, df.saturating_sub(1))
    }

    #[test]
    fn geometric_goodness_of_fit() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let a = 0.8;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let n = 100_000u64;
        let cut = 8i64; // |z| > cut collapsed into two tail buckets
        let mut counts = vec![0u64; (2 * cut + 3) as usize];
        for _ in 0..n {
            let z = sample_geometric(&mut rng, a).unwrap();
            let idx = if z < -cut {
                0
            } else if z > cut {
                counts.len() - 1
            } else {
                (z + cut + 1) as usize
            };
            counts[idx] += 1;
        }
        let mut expected = vec![0.0; counts.len()];
        for z in -cut..=cut {
            expected[(z + cut + 1) as usize] = geometric_mass(a, z);
        }
        let tail: f64 = (cut + 1..cut + 200).map(|z| geometric_mass(a, z)).sum();
        expected[0] = tail;
        *expected.last_mut().unwrap() = tail;
        let (stat, df) = chi_square_stat(&counts, &expected, n);
        let crit = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi-square {stat} >= {crit} (df {df})");
    }

    #[test]
    fn binomial_goodness_of_fit() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let (m, p) = (50u64, 0.3f64);
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let n = 100_000u64;
        // exact pmf by recurrence
        let mut pmf = vec![0.0f64; (m + 1) as usize];
        pmf[0] = (1.0 - p).powi(m as i32);
        for k in 1..=m as usize {
            pmf[k] = pmf[k - 1] * ((m as usize - k + 1) as f64 / k as f64) * (p / (1.0 - p));
        }
        // merge buckets with expected count < 10 into the ends
        let lo = pmf
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .position(|c| c * n as f64 >= 10.0)
            .unwrap();
        let hi = (0..pmf.len())
            .rev()
            .scan(0.0, |acc, k| {
                *acc += pmf[k];
                Some((k, *acc))
            })
            .find(|&(_, c)| c * n as f64 >= 10.0)
            .unwrap()
            .0;
        let mut counts = vec![0u64; hi - lo + 1];
        for _ in 0..n {
            let z = sample_binomial(&mut rng, m, p).unwrap() as usize;
            counts[z.clamp(lo, hi) - lo] += 1;
        }
        let mut expected = vec![0.0; hi - lo + 1];
        for k in 0..pmf.len() {
            expected[k.clamp(lo, hi) - lo] += pmf[k];
        }
        let (stat, df) = chi_square_stat(&counts, &expected, n);
        let crit = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi-square {stat} >= {crit} (df {df})");
    }

    #[test]
    fn same_seed_gives_identical_sequences() {
        let draws = |seed: u64| -> Vec<f64> {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            for _ in 0..100 {
                out.push(sample_laplace(&mut rng, 1.0).unwrap());
                out.push(sample_geometric(&mut rng, 1.0).unwrap() as f64);
                out.push(sample_binomial(&mut rng, 100, 0.25).unwrap() as f64);
                out.push(sample_clipped_laplace(&mut rng, 1.0, 0.5).unwrap());
            }
            out
        };
        assert_eq!(draws(1234), draws(1234));
        assert_ne!(draws(1234), draws(1235));
    }

    #[test]
    fn gamma_laplace_values() {
        // ln(3000) with eps=1, |X|=1000, beta=1/3
        let g = gamma_laplace(1.0, 1000.0, 1.0 / 3.0);
        assert!((g - 3000.0f64.ln()).abs() < 1e-12);
        assert!((g - 8.006).abs() < 1e-3);
        // 1/eps scaling
        assert!((gamma_laplace(2.0, 1000.0, 1.0 / 3.0) - g / 2.0).abs() < 1e-12);
        // beta -> 1 with |X| = 1
        assert_eq!(gamma_laplace(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn big_gamma_matches_quoted_calibration() {
        // eps=1, beta=1/3, kappa=21, |X|=1000
        let lap = big_gamma(BigGammaKind::Laplace, 21, 1.0, 1000.0, 1.0 / 3.0).unwrap();
        assert!((lap - 38.2).abs() < 0.1, "Gamma_Lap {lap}");
        let geom = big_gamma(BigGammaKind::Geometric, 21, 1.0, 1000.0, 1.0 / 3.0).unwrap();
        assert!((geom - 252.0).abs() < 1.0, "Gamma_Geom {geom}");
    }

    #[test]
    fn big_gamma_naive_with_kappa_one_equals_gamma() {
        let g = big_gamma(BigGammaKind::NaiveKappaGamma, 1, 1.3, 512.0, 0.2).unwrap();
        assert_eq!(g, gamma_laplace(1.3, 512.0, 0.2));
    }

    #[test]
    fn big_gamma_linear_hist_with_zero_theta_equals_laplace() {
        let a = big_gamma(BigGammaKind::LinearHist { theta: 0.0 }, 21, 1.0, 1000.0, 0.1).unwrap();
        let b = big_gamma(BigGammaKind::Laplace, 21, 1.0, 1000.0, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn big_gamma_gaussian_requires_delta() {
        assert!(big_gamma(BigGammaKind::Gaussian { delta: 0.0 }, 21, 1.0, 1000.0, 0.1).is_err());
        assert!(big_gamma(BigGammaKind::Gaussian { delta: 1e-5 }, 21, 1.0, 1000.0, 0.1).is_ok());
    }

    #[test]
    fn laplace_sum_concentration() {
        // Sums of kappa=21 Laplace(1) draws exceed the universe-free bound
        // (universe_size = 1) in fewer than beta of trials.
        for beta in [1.0 / 3.0, 0.05] {
            let bound = big_gamma(BigGammaKind::Laplace, 21, 1.0, 1.0, beta).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(12);
            let trials = 100_000;
            let mut exceed = 0u32;
            for _ in 0..trials {
                let s: f64 = (0..21)
                    .map(|_| sample_laplace(&mut rng, 1.0).unwrap())
                    .sum();
                if s.abs() > bound {
                    exceed += 1;
                }
            }
            let frac = exceed as f64 / trials as f64;
            assert!(frac < beta, "exceedance {frac} >= {beta}");
        }
    }
}
