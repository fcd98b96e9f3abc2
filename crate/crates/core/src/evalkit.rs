//! Forecast accuracy metrics and the Diebold-Mariano comparison test with
//! the Harvey small-sample correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numkit::{derive_seed, Rng};
use crate::par::Exec;

fn errors(actual: &[f64], predicted: &[f64]) -> Result<Vec<f64>> {
    if actual.len() != predicted.len() {
        return Err(Error::dims(format!(
            "{} actual values, {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(actual.iter().zip(predicted).map(|(a, p)| a - p).collect())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let e = errors(actual, predicted)?;
    Ok((e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt())
}

/// Mean absolute deviation of the forecast errors.
pub fn mad(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let e = errors(actual, predicted)?;
    Ok(e.iter().map(|v| v.abs()).sum::<f64>() / e.len() as f64)
}

/// `1 − SS_res / SS_tot`, centered on the mean of `actual` itself. Can be negative.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let e = errors(actual, predicted)?;
    if actual.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: actual.len(),
        });
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantActuals);
    }
    let ss_res: f64 = e.iter().map(|v| v * v).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// `1 − (1 − R²)(n − 1)/(n − k − 1)`.
pub fn adjusted_r_squared(r2: f64, n: usize, k: usize) -> Result<f64> {
    if n <= k + 1 {
        return Err(Error::DegenerateDof { n, k });
    }
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - k - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationScore {
    pub r2_in: f64,
    pub r2_out: f64,
    pub ratio: f64,
}

/// Out-of-sample R² divided by in-sample R².
pub fn generalization(r2_in: f64, r2_out: f64) -> Result<GeneralizationScore> {
    if r2_in == 0.0 {
        return Err(Error::ZeroInSampleR2);
    }
    Ok(GeneralizationScore {
        r2_in,
        r2_out,
        ratio: r2_out / r2_in,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    InSample,
    OutOfSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sample_kind: SampleKind,
    pub n: usize,
    pub k: usize,
    pub rmse: f64,
    pub mad: f64,
    pub r2: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adjusted_r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_seconds: Option<f64>,
}

impl EvalReport {
    /// Training-fit report; includes adjusted R² for `k` regressors.
    pub fn in_sample(actual: &[f64], predicted: &[f64], k: usize) -> Result<Self> {
        let r2 = r_squared(actual, predicted)?;
        Ok(Self {
            sample_kind: SampleKind::InSample,
            n: actual.len(),
            k,
            rmse: rmse(actual, predicted)?,
            mad: mad(actual, predicted)?,
            r2,
            adjusted_r2: Some(adjusted_r_squared(r2, actual.len(), k)?),
            runtime_seconds: None,
        })
    }

    pub fn out_of_sample(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        Ok(Self {
            sample_kind: SampleKind::OutOfSample,
            n: actual.len(),
            k: 0,
            rmse: rmse(actual, predicted)?,
            mad: mad(actual, predicted)?,
            r2: r_squared(actual, predicted)?,
            adjusted_r2: None,
            runtime_seconds: None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::fmt::to_json_17(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Harvey-adjusted statistic.
    pub statistic: f64,
    /// Two-sided, from Student's t with `n − 1` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub h: usize,
}

impl DmResult {
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::fmt::to_json_17(self)?)
    }
}

/// Diebold-Mariano test on squared-error loss.
///
/// With `d_t = a_t² − b_t²`, the long-run variance is
/// `(γ₀ + 2 Σ_{j<h} γⱼ) / n` with autocovariances on divisor `n`, and the
/// statistic is scaled by `√((n + 1 − 2h + h(h − 1)/n) / n)`.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64], h: usize) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::LengthMismatch {
            a: errors_a.len(),
            b: errors_b.len(),
        });
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    dm_test_differential(&d, h)
}

/// [`dm_test`] on a precomputed loss differential series.
pub fn dm_test_differential(d: &[f64], h: usize) -> Result<DmResult> {
    let n = d.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    if h < 1 || h >= n {
        return Err(Error::InvalidParameter(format!(
            "horizon h = {h} must be in 1..{n}"
        )));
    }
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateLossDifferential);
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let autocov = |lag: usize| -> f64 {
        d[lag..]
            .iter()
            .zip(d)
            .map(|(x, y)| (x - mean) * (y - mean))
            .sum::<f64>()
            / nf
    };
    let long_run = (autocov(0) + 2.0 * (1..h).map(autocov).sum::<f64>()) / nf;
    if !(long_run > 0.0) {
        return Err(Error::DegenerateLossDifferential);
    }
    let dm = mean / long_run.sqrt();
    let hf = h as f64;
    let harvey = ((nf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / nf) / nf).sqrt();
    let statistic = dm * harvey;
    let p_value = (2.0 * t_distribution_sf(statistic.abs(), n - 1)).min(1.0);
    Ok(DmResult {
        statistic,
        p_value,
        n,
        h,
    })
}

/// One-sided survival function `P(T > t)` of Student's t with `dof` degrees
/// of freedom.
pub fn t_distribution_sf(t: f64, dof: usize) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof.max(1) as f64).expect("positive degrees of freedom");
    dist.sf(t)
}

/// Fraction of `trials` white-noise experiments in which the DM test rejects
/// at level `alpha`. Each trial draws two independent standard normal error
/// series of length `n` from its own derived seed, so the result does not
/// depend on execution order.
pub fn dm_rejection_rate(
    trials: usize,
    n: usize,
    h: usize,
    alpha: f64,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    let outcomes = exec.map_indexed(trials, |i| -> Result<bool> {
        let mut rng = Rng::new(derive_seed(seed, i as u64));
        let a: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        Ok(dm_test(&a, &b, h)?.rejects_at(alpha))
    });
    let mut rejections = 0usize;
    for o in outcomes {
        rejections += o? as usize;
    }
    Ok(rejections as f64 / trials.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[3.0, -3.0], &[0.0, 0.0]).unwrap(), 3.0);
        assert!((rmse(&[1.0, 2.0, 2.0], &[0.0; 3]).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(rmse(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(
            rmse(&[1.0], &[]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&[4.0], &[4.0]).unwrap(), 0.0);
        assert_eq!(mad(&[1.0, -3.0], &[0.0, 0.0]).unwrap(), 2.0);
        assert!((mad(&[1.0, 2.0, 2.0], &[0.0; 3]).unwrap() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn r_squared_examples() {
        assert_eq!(r_squared(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&[0.0, 2.0], &[5.0, 5.0]).unwrap(), -16.0);
        assert!(matches!(
            r_squared(&[3.0, 3.0], &[1.0, 2.0]),
            Err(Error::ConstantActuals)
        ));
    }

    #[test]
    fn adjusted_examples() {
        assert_eq!(adjusted_r_squared(1.0, 20, 5).unwrap(), 1.0);
        assert!((adjusted_r_squared(0.42, 20, 0).unwrap() - 0.42).abs() < 1e-15);
        assert!((adjusted_r_squared(0.5, 10, 2).unwrap() - 0.357142857).abs() < 1e-9);
        assert!(matches!(
            adjusted_r_squared(0.5, 3, 2),
            Err(Error::DegenerateDof { .. })
        ));
    }

    #[test]
    fn generalization_examples() {
        assert_eq!(generalization(0.8, 0.8).unwrap().ratio, 1.0);
        assert_eq!(generalization(0.8, 0.6).unwrap().ratio, 0.6 / 0.8);
        assert!((generalization(0.8, 0.6).unwrap().ratio - 0.75).abs() < 1e-15);
        assert!((generalization(0.5, -0.1).unwrap().ratio + 0.2).abs() < 1e-15);
        assert!(matches!(
            generalization(0.0, 0.3),
            Err(Error::ZeroInSampleR2)
        ));
    }

    #[test]
    fn dm_identical_forecasts() {
        let e = [0.3, -1.0, 2.0, 0.5, 0.1];
        assert!(matches!(
            dm_test(&e, &e, 1),
            Err(Error::DegenerateLossDifferential)
        ));
    }

    #[test]
    fn dm_symmetric_differential() {
        let r = dm_test(&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0], 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn dm_hand_case() {
        // d = [1,1,1,2,2,2]: d̄ = 1.5, γ₀ = 0.25, V = 1/24, DM = 1.5√24,
        // Harvey factor √(5/6) → DM* = 1.5√20; p from t₅
        let a = [1.0, 1.0, 1.0, 1.5, 1.5, 1.5];
        let b = [0.0, 0.0, 0.0, 0.5, 0.5, 0.5];
        let r = dm_test(&a, &b, 1).unwrap();
        assert!((r.statistic - 6.708203932499369).abs() < 1e-10);
        assert!((r.p_value - 0.0011144375415074205).abs() < 1e-10);
        assert_eq!((r.n, r.h), (6, 1));
    }

    #[test]
    fn dm_errors() {
        assert!(matches!(
            dm_test(&[1.0; 5], &[1.0; 4], 1),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            dm_test(&[1.0; 3], &[0.0; 3], 1),
            Err(Error::TooShort { .. })
        ));
        // constant non-zero differential has zero variance
        assert!(matches!(
            dm_test(&[2.0; 6], &[1.0; 6], 1),
            Err(Error::DegenerateLossDifferential)
        ));
    }

    #[test]
    fn dm_longer_horizon_uses_autocovariances() {
        let a = [1.0, 1.2, 1.5, 1.7, 2.2, 2.0, 1.4, 1.1];
        let b = [0.5; 8];
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * x - y * y).collect();
        let n = 8.0;
        let m = d.iter().sum::<f64>() / n;
        let g = |k: usize| (k..8).map(|t| (d[t] - m) * (d[t - k] - m)).sum::<f64>() / n;
        let v = (g(0) + 2.0 * g(1)) / n;
        let expected = m / v.sqrt() * ((n + 1.0 - 4.0 + 2.0 / n) / n).sqrt();
        assert!((dm_test(&a, &b, 2).unwrap().statistic - expected).abs() < 1e-12);
    }

    /// Closed-form Student's t CDF for integer degrees of freedom.
    fn t_cdf_closed_form(t: f64, dof: usize) -> f64 {
        let th = (t / (dof as f64).sqrt()).atan();
        let (s, c) = th.sin_cos();
        let series = |start: usize, first: f64| {
            let mut term = first;
            let mut sum = first;
            let mut k = start;
            while k + 2 < dof {
                term *= c * c * (k + 1) as f64 / (k + 2) as f64;
                sum += term;
                k += 2;
            }
            sum
        };
        let a = if dof % 2 == 1 {
            let tail = if dof > 1 { c * series(1, 1.0) } else { 0.0 };
            2.0 / std::f64::consts::PI * (th + s * tail)
        } else {
            s * series(0, 1.0)
        };
        0.5 + 0.5 * a
    }

    #[test]
    fn t_sf_against_closed_form_and_tables() {
        assert_eq!(t_distribution_sf(0.0, 7), 0.5);
        assert_eq!(t_distribution_sf(f64::INFINITY, 3), 0.0);
        assert!(t_distribution_sf(1e6, 3) < 1e-15);
        assert!((t_distribution_sf(2.015, 5) - 0.050003086163403127).abs() < 1e-10);
        assert!((t_distribution_sf(1.0, 1) - 0.25).abs() < 1e-12);
        for dof in 1..=12 {
            for &t in &[-3.0, -0.7, 0.25, 1.0, 2.0, 4.5] {
                let oracle = 1.0 - t_cdf_closed_form(t, dof);
                assert!(
                    (t_distribution_sf(t, dof) - oracle).abs() < 1e-10,
                    "t={t}, dof={dof}"
                );
            }
        }
    }

    #[test]
    fn report_json_uses_17_digits() {
        let r = EvalReport::in_sample(&[1.0, 2.0, 4.0, 3.0], &[1.1, 1.9, 3.5, 3.2], 1).unwrap();
        let text = r.to_json().unwrap();
        assert!(text.contains("\"adjusted_r2\""));
        assert!(!text.contains("runtime_seconds"));
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let o = EvalReport::out_of_sample(&[1.0, 2.0], &[1.0, 2.5]).unwrap();
        assert!(o.adjusted_r2.is_none());
    }
}
