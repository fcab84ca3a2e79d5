//! Bias, variance and MSE of R@1,θ and AxIoU@1 when the observed top-1 IoU
//! is the true IoU plus Gaussian noise, `r̂ ~ N(r, γ²)`.
//!
//! Here R@1,θ uses the non-strict `r̂ ≥ θ`. Under continuous noise the
//! difference from the strict form has probability zero. `r̂` is never
//! clipped to `[0, 1]`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Standard normal CDF.
///
/// Hart's double precision rational approximation (as popularised by
/// G. West); absolute error is around 1e-15.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs();
    let tail = if z > 37.0 {
        0.0
    } else {
        let e = (-0.5 * z * z).exp();
        if z < 7.071_067_811_865_47 {
            let mut num = 3.526_249_659_989_11e-2 * z + 0.700_383_064_443_688;
            num = num * z + 6.373_962_203_531_65;
            num = num * z + 33.912_866_078_383;
            num = num * z + 112.079_291_497_871;
            num = num * z + 221.213_596_169_931;
            num = num * z + 220.206_867_912_376;
            let mut den = 8.838_834_764_831_84e-2 * z + 1.755_667_163_182_64;
            den = den * z + 16.064_177_579_207;
            den = den * z + 86.780_732_202_946_1;
            den = den * z + 296.564_248_779_674;
            den = den * z + 637.333_633_378_831;
            den = den * z + 793.826_512_519_948;
            den = den * z + 440.413_735_824_752;
            e * num / den
        } else {
            let mut cf = z + 0.65;
            cf = z + 4.0 / cf;
            cf = z + 3.0 / cf;
            cf = z + 2.0 / cf;
            cf = z + 1.0 / cf;
            e / cf / 2.506_628_274_631
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTheoryPoint {
    /// `recall@1:<theta>` or `axiou@1`.
    pub measure: String,
    pub r: f64,
    /// `None` for AxIoU@1, which does not depend on a threshold.
    pub theta: Option<f64>,
    pub gamma: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// Closed form for R@1,θ: with `p = P(r̂ ≥ θ)`, bias `p - 1{r ≥ θ}` and
/// variance `p (1 - p)`.
pub fn recall1_theory(r: f64, theta: f64, gamma: f64) -> Result<NoiseTheoryPoint> {
    check_gamma(gamma)?;
    let p = normal_cdf((r - theta) / gamma);
    let truth = if r >= theta { 1.0 } else { 0.0 };
    let bias = p - truth;
    let variance = p * (1.0 - p);
    Ok(NoiseTheoryPoint {
        measure: format!("recall@1:{theta}"),
        r,
        theta: Some(theta),
        gamma,
        bias,
        variance,
        mse: bias * bias + variance,
    })
}

/// Closed form for AxIoU@1: unbiased, variance `γ²`.
pub fn axiou1_theory(r: f64, gamma: f64) -> Result<NoiseTheoryPoint> {
    check_gamma(gamma)?;
    Ok(NoiseTheoryPoint {
        measure: "axiou@1".into(),
        r,
        theta: None,
        gamma,
        bias: 0.0,
        variance: gamma * gamma,
        mse: gamma * gamma,
    })
}

/// Every (θ, γ) combination for R@1,θ, followed by one AxIoU@1 row per γ.
pub fn theory_sweep(r: f64, thetas: &[f64], gammas: &[f64]) -> Result<Vec<NoiseTheoryPoint>> {
    if thetas.is_empty() || gammas.is_empty() {
        return Err(Error::InvalidParameter("theta and gamma grids must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(gammas.len() * (thetas.len() + 1));
    for &gamma in gammas {
        for &theta in thetas {
            rows.push(recall1_theory(r, theta, gamma)?);
        }
    }
    for &gamma in gammas {
        rows.push(axiou1_theory(r, gamma)?);
    }
    Ok(rows)
}

/// Sample estimates from simulating `r̂ = r + N(0, γ²)` directly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedError {
    pub samples: usize,
    /// Mean of (observed measure - true measure).
    pub bias: f64,
    /// Unbiased sample variance of the observed measure.
    pub variance: f64,
}

const SIMULATION_CHUNK: usize = 1 << 16;

fn simulate<F>(r: f64, gamma: f64, samples: usize, seed: u64, truth: f64, measure: F) -> Result<SimulatedError>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_gamma(gamma)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("simulation needs at least two samples".into()));
    }
    let chunks = samples.div_ceil(SIMULATION_CHUNK);
    // (count, mean, M2) per chunk, merged in chunk order.
    let partial: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, &[c as u64]);
            let n = SIMULATION_CHUNK.min(samples - c * SIMULATION_CHUNK);
            let (mut count, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let eps: f64 = StandardNormal.sample(&mut rng);
                let v = measure(r + gamma * eps);
                count += 1.0;
                let d = v - mean;
                mean += d / count;
                m2 += d * (v - mean);
            }
            (count, mean, m2)
        })
        .collect();
    let (mut count, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for (nb, mb, m2b) in partial {
        let total = count + nb;
        let d = mb - mean;
        mean += d * nb / total;
        m2 += m2b + d * d * count * nb / total;
        count = total;
    }
    Ok(SimulatedError {
        samples,
        bias: mean - truth,
        variance: m2 / (count - 1.0),
    })
}

/// Monte-Carlo estimate for R@1,θ under the Gaussian IoU noise model.
pub fn simulate_recall1(r: f64, theta: f64, gamma: f64, samples: usize, seed: u64) -> Result<SimulatedError> {
    let truth = if r >= theta { 1.0 } else { 0.0 };
    simulate(r, gamma, samples, seed, truth, |obs| if obs >= theta { 1.0 } else { 0.0 })
}

/// Monte-Carlo estimate for AxIoU@1 under the Gaussian IoU noise model.
pub fn simulate_axiou1(r: f64, gamma: f64, samples: usize, seed: u64) -> Result<SimulatedError> {
    simulate(r, gamma, samples, seed, r, |obs| obs)
}
