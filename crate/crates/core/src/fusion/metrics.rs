use rand::Rng;

use super::trial::{trial_rng, TrialRecord};
use crate::error::{Error, Result};

/// Range-error variances of raw radar, communication location and the fused
/// track, plus the resulting improvement ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionMetrics {
    pub dr_rad: f64,
    pub dr_com: f64,
    pub dr_ekf: f64,
    pub rho_s: f64,
}

/// `(dr_rad - dr_ekf) / dr_rad`.
pub fn sensing_improvement_ratio(dr_rad: f64, dr_ekf: f64) -> Result<f64> {
    if !(dr_rad.is_finite() && dr_rad > 0.0) {
        return Err(Error::Domain(format!(
            "radar error variance must be > 0, got {dr_rad}"
        )));
    }
    if !(dr_ekf.is_finite() && dr_ekf >= 0.0) {
        return Err(Error::Domain(format!(
            "fused error variance must be >= 0, got {dr_ekf}"
        )));
    }
    Ok((dr_rad - dr_ekf) / dr_rad)
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn errors_at(records: &[TrialRecord], k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if records.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 trials, got {}",
            records.len()
        )));
    }
    records
        .iter()
        .map(|r| {
            r.step(k)
                .map(|s| (s.radar_range_error, s.fused_range_error))
                .ok_or_else(|| Error::Domain(format!("step {k} outside the trial record")))
        })
        .collect::<Result<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip())
}

/// Across-trial range-error variances at step `k`.
///
/// `dr_rad` is zero only for noiseless runs; in that case `rho_s` is reported
/// as NaN rather than failing the whole aggregation.
pub fn estimate_error_variances(
    records: &[TrialRecord],
    k: usize,
    dr_com: f64,
) -> Result<FusionMetrics> {
    let (radar, fused) = errors_at(records, k)?;
    let dr_rad = sample_variance(&radar);
    let dr_ekf = sample_variance(&fused);
    let rho_s = if dr_rad > 0.0 {
        sensing_improvement_ratio(dr_rad, dr_ekf)?
    } else {
        f64::NAN
    };
    Ok(FusionMetrics {
        dr_rad,
        dr_com,
        dr_ekf,
        rho_s,
    })
}

/// Percentile-bootstrap confidence interval for `rho_s` at step `k`,
/// resampling whole trials.
pub fn rho_confidence_interval(
    records: &[TrialRecord],
    k: usize,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let (radar, fused) = errors_at(records, k)?;
    let n = radar.len();
    let mut rng = trial_rng(seed, u64::MAX);
    let mut rhos = Vec::with_capacity(resamples);
    let mut rad = vec![0.0; n];
    let mut ekf = vec![0.0; n];
    for _ in 0..resamples {
        for i in 0..n {
            let j = rng.random_range(0..n);
            rad[i] = radar[j];
            ekf[i] = fused[j];
        }
        let vr = sample_variance(&rad);
        if vr > 0.0 {
            rhos.push(1.0 - sample_variance(&ekf) / vr);
        }
    }
    if rhos.is_empty() {
        return Err(Error::Domain("bootstrap produced no finite ratios".into()));
    }
    rhos.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| rhos[((q * (rhos.len() - 1) as f64).round() as usize).min(rhos.len() - 1)];
    Ok((pick(tail), pick(1.0 - tail)))
}
