use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One bar of an ACF/PACF plot with its ±1.96/√n band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramPoint {
    pub lag: usize,
    pub value: f64,
    pub conf_limit: f64,
}

fn autocorrelations(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag || n < 2 {
        return Err(Error::SeriesTooShort {
            needed: max_lag.max(1),
            got: n,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || dev.iter().all(|&d| d == 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok((0..=max_lag)
        .map(|k| {
            dev[..n - k]
                .iter()
                .zip(&dev[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect())
}

fn points(values: Vec<f64>, n: usize) -> Vec<CorrelogramPoint> {
    let conf_limit = 1.96 / (n as f64).sqrt();
    values
        .into_iter()
        .enumerate()
        .map(|(lag, value)| CorrelogramPoint {
            lag,
            value,
            conf_limit,
        })
        .collect()
}

/// Sample autocorrelations for lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<CorrelogramPoint>> {
    Ok(points(autocorrelations(series, max_lag)?, series.len()))
}

/// Partial autocorrelations for lags `0..=max_lag` (lag 0 is 1 by convention),
/// from the Durbin-Levinson recursion on the sample autocorrelations.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<CorrelogramPoint>> {
    let r = autocorrelations(series, max_lag)?;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for k in 1..=max_lag {
        let num = r[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, p)| p * r[k - 1 - j])
                .sum::<f64>();
        if !(v > 0.0) {
            return Err(Error::NumericalBreakdown { lag: k });
        }
        let kk = num / v;
        let next: Vec<f64> = phi
            .iter()
            .enumerate()
            .map(|(j, p)| p - kk * phi[k - 2 - j])
            .chain(std::iter::once(kk))
            .collect();
        phi = next;
        v *= 1.0 - kk * kk;
        out.push(kk);
    }
    Ok(points(out, series.len()))
}
