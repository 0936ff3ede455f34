use rand::Rng;

use super::trial_rng;
use crate::error::{Error, Result};

/// One exponential draw with the given rate (inverse-CDF method).
pub(crate) fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    // gen() is in [0, 1), so 1 - u is in (0, 1] and the log is finite
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

/// Event times of a homogeneous Poisson process on `[0, horizon]`, in
/// increasing order. Time units are whatever `rate` is expressed in.
pub fn sample_arrivals<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::negative("arrival rate", rate));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::negative("horizon", horizon));
    }
    let mut out = Vec::new();
    if rate == 0.0 {
        return Ok(out);
    }
    let mut t = exponential(rng, rate);
    while t <= horizon {
        out.push(t);
        t += exponential(rng, rate);
    }
    Ok(out)
}

/// [`sample_arrivals`] with a fresh generator derived from `seed`.
pub fn sample_arrivals_seeded(rate: f64, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    sample_arrivals(rate, horizon, &mut trial_rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_empty() {
        assert!(sample_arrivals_seeded(0.0, 1e9, 1).unwrap().is_empty());
        assert!(sample_arrivals_seeded(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn deterministic_and_sorted() {
        let a = sample_arrivals_seeded(3.0, 100.0, 9).unwrap();
        assert_eq!(a, sample_arrivals_seeded(3.0, 100.0, 9).unwrap());
        assert_ne!(a, sample_arrivals_seeded(3.0, 100.0, 10).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&t| (0.0..=100.0).contains(&t)));
    }

    #[test]
    fn counts_have_poisson_moments() {
        // 8 per minute for an hour, 10k trials
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                sample_arrivals(8.0, 60.0, &mut trial_rng(77, i))
                    .unwrap()
                    .len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // se of the mean is sqrt(480/1e4) ~ 0.22
        assert!((mean - 480.0).abs() < 1.0, "mean {mean}");
        assert!((var / 480.0 - 1.0).abs() < 0.06, "var {var}");
    }

    #[test]
    fn inter_arrivals_pass_ks_test() {
        let rate = 2.5;
        let times = sample_arrivals_seeded(rate, 2000.0, 3).unwrap();
        let mut gaps: Vec<f64> = std::iter::once(times[0])
            .chain(times.windows(2).map(|w| w[1] - w[0]))
            .collect();
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len() as f64;
        let d = gaps
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = 1.0 - (-rate * x).exp();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic critical value at alpha = 0.01
        assert!(d < 1.628 / n.sqrt(), "D = {d}");
    }
}
