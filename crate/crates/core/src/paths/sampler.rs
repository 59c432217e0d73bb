use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{uniform_times, PathError, SampledPath};

/// Source of canonical continuous paths for Monte-Carlo checks.
///
/// `stream` selects an independent substream of `seed`, so path `i` of a batch
/// is reproducible regardless of how the batch is split across workers.
pub trait PathSampler: Send + Sync {
    fn sample(&self, seed: u64, stream: u64) -> SampledPath;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_grid(n: usize, horizon: f64) -> Result<(), PathError> {
    if n < 2 {
        return Err(PathError::InvalidParameter(format!("grid size must be at least 2, got {n}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PathError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// Geometric Brownian motion `dS = μ S dt + σ S dW`, `S_0 = 1`, sampled
/// exactly on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmSampler {
    mu: f64,
    sigma: f64,
    n: usize,
    horizon: f64,
}

impl GbmSampler {
    pub fn new(mu: f64, sigma: f64, n: usize, horizon: f64) -> Result<Self, PathError> {
        check_grid(n, horizon)?;
        if !(sigma >= 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(PathError::InvalidParameter("need finite mu and sigma >= 0".into()));
        }
        Ok(Self { mu, sigma, n, horizon })
    }
}

impl PathSampler for GbmSampler {
    fn sample(&self, seed: u64, stream: u64) -> SampledPath {
        let mut rng = rng_for(seed, stream);
        let times = uniform_times(self.horizon, self.n);
        let mut values = Vec::with_capacity(self.n);
        let mut log_s = 0.0;
        values.push(1.0);
        for w in times.windows(2) {
            let dt = w[1] - w[0];
            let z: f64 = StandardNormal.sample(&mut rng);
            log_s += (self.mu - 0.5 * self.sigma * self.sigma) * dt + self.sigma * dt.sqrt() * z;
            values.push(log_s.exp());
        }
        SampledPath::new(times, values).expect("sampler produces valid paths")
    }
}

/// One GBM path; see [`GbmSampler`].
pub fn sample_gbm(
    mu: f64,
    sigma: f64,
    n: usize,
    horizon: f64,
    seed: u64,
) -> Result<SampledPath, PathError> {
    Ok(GbmSampler::new(mu, sigma, n, horizon)?.sample(seed, 0))
}

/// `S_t = exp(σ B^H_t)` for fractional Brownian motion `B^H`, via the Cholesky
/// factor of its covariance on the grid (computed once per sampler).
///
/// No drift correction is applied, so for `H = 1/2` this is `sample_gbm` with
/// `μ = σ²/2`.
#[derive(Debug, Clone)]
pub struct ExpFbmSampler {
    sigma: f64,
    times: Vec<f64>,
    factor: DMatrix<f64>,
}

pub const MAX_FBM_GRID: usize = 4096;

impl ExpFbmSampler {
    pub fn new(hurst: f64, sigma: f64, n: usize, horizon: f64) -> Result<Self, PathError> {
        check_grid(n, horizon)?;
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(PathError::InvalidParameter(format!("hurst must lie in (0, 1), got {hurst}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(PathError::InvalidParameter("sigma must be finite and >= 0".into()));
        }
        if n > MAX_FBM_GRID {
            return Err(PathError::InvalidParameter(format!(
                "fBm grid size {n} exceeds {MAX_FBM_GRID}"
            )));
        }
        let times = uniform_times(horizon, n);
        let m = n - 1;
        let h2 = 2.0 * hurst;
        let cov = DMatrix::from_fn(m, m, |i, j| {
            let s = times[i + 1];
            let t = times[j + 1];
            0.5 * (s.powf(h2) + t.powf(h2) - (s - t).abs().powf(h2))
        });
        let factor = cov
            .cholesky()
            .ok_or(PathError::FactorizationFailure { size: m })?
            .unpack();
        Ok(Self { sigma, times, factor })
    }
}

impl PathSampler for ExpFbmSampler {
    fn sample(&self, seed: u64, stream: u64) -> SampledPath {
        let mut rng = rng_for(seed, stream);
        let m = self.factor.nrows();
        let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let b = &self.factor * z;
        let values = std::iter::once(1.0)
            .chain(b.iter().map(|x| (self.sigma * x).exp()))
            .collect();
        SampledPath::new(self.times.clone(), values).expect("sampler produces valid paths")
    }
}

/// One exp-fBm path; see [`ExpFbmSampler`].
pub fn sample_exp_fbm(
    hurst: f64,
    sigma: f64,
    n: usize,
    horizon: f64,
    seed: u64,
) -> Result<SampledPath, PathError> {
    Ok(ExpFbmSampler::new(hurst, sigma, n, horizon)?.sample(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::PricePath;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn gbm_is_deterministic() {
        let a = sample_gbm(0.0, 0.2, 50, 1.0, 7).unwrap();
        let b = sample_gbm(0.0, 0.2, 50, 1.0, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_gbm(0.0, 0.2, 50, 1.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_vol_is_constant() {
        let p = sample_gbm(0.0, 0.0, 20, 1.0, 1).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gbm_log_moments() {
        let s = GbmSampler::new(0.0, 0.2, 2, 1.0).unwrap();
        let n = 100_000;
        let logs: Vec<f64> = (0..n).map(|i| s.sample(11, i).terminal().ln()).collect();
        let (mean, var) = mean_var(&logs);
        let se_mean = (0.04f64 / n as f64).sqrt();
        let se_var = 0.04 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((mean + 0.02).abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var - 0.04).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn fbm_terminal_variance() {
        let s = ExpFbmSampler::new(0.8, 1.0, 11, 1.0).unwrap();
        let n = 100_000;
        let logs: Vec<f64> = (0..n).map(|i| s.sample(3, i).terminal().ln()).collect();
        let (mean, var) = mean_var(&logs);
        assert!(mean.abs() < 3.0 * (1.0 / n as f64).sqrt());
        assert!((var - 1.0).abs() < 3.0 * (2.0 / (n as f64 - 1.0)).sqrt(), "var {var}");
    }

    #[test]
    fn fbm_half_covariance() {
        let sigma = 0.5;
        let s = ExpFbmSampler::new(0.5, sigma, 11, 1.0).unwrap();
        let n = 100_000u64;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let p = s.sample(5, i);
                (p.values()[3].ln(), p.values()[7].ln())
            })
            .collect();
        let nf = n as f64;
        let ma = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
        let mb = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
        let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / (nf - 1.0);
        let expected = 0.3 * sigma * sigma;
        // Var of the product of jointly normal pair: σ_a²σ_b² + cov².
        let se = ((0.3 * 0.7 * sigma.powi(4) + expected * expected) / nf).sqrt();
        assert!((cov - expected).abs() < 3.0 * se, "cov {cov}");
    }

    #[test]
    fn fbm_rejects_large_grid() {
        assert!(ExpFbmSampler::new(0.7, 1.0, MAX_FBM_GRID + 1, 1.0).is_err());
    }
}
