//! ARIMA(p, d, q) with drift, estimated by conditional sum of squares.
//!
//! The differenced series `x` follows
//! `x_t − μ = Σ φᵢ (x_{t−i} − μ) + e_t + Σ θⱼ e_{t−j}`,
//! where `μ` is the drift. Residuals before index `p` are taken as zero and
//! excluded from the sum of squares. Forecasts iterate the recursion with
//! future innovations set to zero and then undo the differencing.

mod correlogram;
mod diff;
mod roots;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use correlogram::{acf, pacf, CorrelogramPoint};
pub use diff::{difference, undifference};
pub use roots::{min_root_modulus, polynomial_roots, RootReport, ROOT_FLAG_MODULUS};

use crate::error::{Error, Result};
use crate::numkit::{least_squares, mean, nelder_mead, Matrix, SimplexOptimizerConfig};

/// Returned by [`css`] in place of overflowing or non-finite sums, steering
/// the optimizer away from explosive parameter regions.
pub const CSS_LARGE_VALUE: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    /// Orders swept by the benchmark grid.
    pub const CANONICAL_GRID: [ArimaOrder; 6] = [
        ArimaOrder::new(1, 1, 2),
        ArimaOrder::new(2, 1, 1),
        ArimaOrder::new(2, 1, 3),
        ArimaOrder::new(1, 2, 2),
        ArimaOrder::new(2, 2, 3),
        ArimaOrder::new(2, 2, 5),
    ];

    pub fn validate(&self) -> Result<()> {
        if self.d > 2 {
            return Err(Error::InvalidParameter(format!(
                "differencing order {} exceeds 2",
                self.d
            )));
        }
        Ok(())
    }

    /// Minimum differenced length needed for initialization.
    fn min_diffed_len(&self) -> usize {
        3 * (self.p + self.q) + 20
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// Residuals `e_t` for `t = p..n` of the differenced series.
pub fn css_residuals(series: &[f64], phi: &[f64], theta: &[f64], drift: f64) -> Vec<f64> {
    let p = phi.len();
    let q = theta.len();
    let n = series.len();
    if n <= p {
        return Vec::new();
    }
    let mut e = vec![0.0; n];
    for t in p..n {
        let mut v = series[t] - drift;
        for (i, ph) in phi.iter().enumerate() {
            v -= ph * (series[t - 1 - i] - drift);
        }
        for (j, th) in theta.iter().enumerate().take(t.min(q)) {
            v -= th * e[t - 1 - j];
        }
        e[t] = v;
    }
    e.split_off(p)
}

/// Conditional sum of squares `Σ_{t≥p} e_t²`.
pub fn css(series: &[f64], phi: &[f64], theta: &[f64], drift: f64) -> f64 {
    let s: f64 = css_residuals(series, phi, theta, drift)
        .iter()
        .map(|e| e * e)
        .sum();
    if s.is_finite() && s < CSS_LARGE_VALUE {
        s
    } else {
        CSS_LARGE_VALUE
    }
}

/// Starting values `(φ, θ, μ)` for CSS minimization.
///
/// The drift starts at the sample mean. With `q > 0`, a long AR of order
/// `min(20, n/4)` is fitted by least squares to estimate innovations, then
/// the centered series is regressed on its own `p` lags and `q` lagged
/// innovation estimates.
pub fn hannan_rissanen_init(
    series: &[f64],
    order: ArimaOrder,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (p, q) = (order.p, order.q);
    let n = series.len();
    let needed = order.min_diffed_len();
    if n <= needed {
        return Err(Error::SeriesTooShort { needed, got: n });
    }
    let mu = mean(series);
    if p + q == 0 {
        return Ok((Vec::new(), Vec::new(), mu));
    }
    let c: Vec<f64> = series.iter().map(|x| x - mu).collect();

    let innovations = if q > 0 {
        let m = (n / 4).clamp(1, 20);
        let a = lag_regression(&c, m, &[], 0, m)?;
        let mut e = vec![0.0; n];
        for t in m..n {
            e[t] = c[t] - (0..m).map(|i| a[i] * c[t - 1 - i]).sum::<f64>();
        }
        Some((e, m))
    } else {
        None
    };

    let coeffs = match &innovations {
        Some((e, m)) => lag_regression(&c, p, e, q, (m + q).max(p))?,
        None => lag_regression(&c, p, &[], 0, p)?,
    };
    Ok((coeffs[..p].to_vec(), coeffs[p..].to_vec(), mu))
}

/// Least squares of `c_t` on `c_{t−1..t−p}` and `e_{t−1..t−q}` over `t = start..n`.
fn lag_regression(c: &[f64], p: usize, e: &[f64], q: usize, start: usize) -> Result<Vec<f64>> {
    let n = c.len();
    let rows = n.saturating_sub(start);
    if rows <= p + q {
        return Err(Error::SeriesTooShort {
            needed: start + p + q,
            got: n,
        });
    }
    let mut data = Vec::with_capacity(rows * (p + q));
    for t in start..n {
        data.extend((1..=p).map(|i| c[t - i]));
        data.extend((1..=q).map(|j| e[t - j]));
    }
    let x = Matrix::new(rows, p + q, data)?;
    least_squares(&x, &c[start..])
}

/// Final observations needed to forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaAnchors {
    /// Last `d + p` raw observations, oldest first.
    pub last_values: Vec<f64>,
    /// Last `q` residuals, oldest first.
    pub last_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub drift: f64,
    pub css: f64,
    pub anchors: ArimaAnchors,
    /// One-step residuals on the differenced scale, `n − d − p` of them.
    pub residuals: Vec<f64>,
    pub roots: RootReport,
    /// Always `"css"`: conditional sum of squares, not exact likelihood.
    pub estimation: String,
}

/// Optimizer settings for [`arima_fit_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArimaFitOptions {
    pub max_evals: usize,
    /// Convergence threshold on the simplex CSS spread, relative to the CSS at
    /// the starting point.
    pub relative_tol: f64,
    pub initial_step: f64,
}

impl Default for ArimaFitOptions {
    fn default() -> Self {
        Self {
            max_evals: 6000,
            relative_tol: 1e-12,
            initial_step: 0.1,
        }
    }
}

pub fn arima_fit(raw_series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    arima_fit_with(raw_series, order, &ArimaFitOptions::default())
}

pub fn arima_fit_with(
    raw_series: &[f64],
    order: ArimaOrder,
    opts: &ArimaFitOptions,
) -> Result<ArimaModel> {
    order.validate()?;
    let needed = order.d + order.min_diffed_len();
    if raw_series.len() <= needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: raw_series.len(),
        });
    }
    if raw_series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "series contains non-finite values".into(),
        ));
    }
    let (p, q) = (order.p, order.q);
    let x = difference(raw_series, order.d)?;

    let mu = mean(&x);
    let white_noise: Vec<f64> = std::iter::repeat_n(0.0, p + q)
        .chain(std::iter::once(mu))
        .collect();
    let pack = |phi: &[f64], theta: &[f64], drift: f64| -> Vec<f64> {
        phi.iter()
            .chain(theta)
            .copied()
            .chain(std::iter::once(drift))
            .collect()
    };
    let params_css = |v: &[f64]| css(&x, &v[..p], &v[p..p + q], v[p + q]);
    // Hannan-Rissanen can land on a non-invertible MA part whose CSS explodes;
    // exactly collinear lags (e.g. a noiseless trend) make it singular.
    // Either way the white-noise start competes with it.
    let start = match hannan_rissanen_init(&x, order) {
        Ok((phi0, theta0, mu0)) => {
            let hr = pack(&phi0, &theta0, mu0);
            if params_css(&hr) < params_css(&white_noise) {
                hr
            } else {
                white_noise
            }
        }
        Err(Error::SingularSystem) => white_noise,
        Err(e) => return Err(e),
    };

    // parameters are optimized in units of their natural scale so one
    // simplex step size suits both coefficients and the drift
    let sd = {
        let v = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / x.len() as f64;
        if v > 0.0 {
            v.sqrt()
        } else {
            1.0
        }
    };
    let scales: Vec<f64> = std::iter::repeat_n(1.0, p + q)
        .chain(std::iter::once(sd))
        .collect();
    let unpack = |origin: &[f64], u: &[f64]| -> Vec<f64> {
        origin
            .iter()
            .zip(&scales)
            .zip(u)
            .map(|((s, k), v)| s + k * v)
            .collect()
    };

    let css0 = params_css(&start);
    if !(css0 < CSS_LARGE_VALUE) {
        return Err(Error::OptimizerFailed);
    }
    let cfg = SimplexOptimizerConfig {
        max_evals: opts.max_evals,
        convergence_tol: (opts.relative_tol * css0).max(f64::MIN_POSITIVE),
        initial_step: opts.initial_step,
    };
    // a fresh simplex around the previous optimum escapes collapsed simplices
    let mut best_v = start;
    let mut best_f = css0;
    for _ in 0..4 {
        let origin = best_v.clone();
        let run = nelder_mead(
            |u| params_css(&unpack(&origin, u)),
            &vec![0.0; p + q + 1],
            &cfg,
        )
        .map_err(|_| Error::OptimizerFailed)?;
        let improved = best_f - run.f_best > opts.relative_tol.max(1e-10) * best_f.abs();
        if run.f_best < best_f {
            best_v = unpack(&origin, &run.x_best);
            best_f = run.f_best;
        }
        if !improved {
            break;
        }
    }
    if !(best_f < CSS_LARGE_VALUE) {
        return Err(Error::OptimizerFailed);
    }
    let v = best_v;
    let (phi, theta, drift) = (v[..p].to_vec(), v[p..p + q].to_vec(), v[p + q]);
    let residuals = css_residuals(&x, &phi, &theta, drift);
    let css_value = residuals.iter().map(|e| e * e).sum();

    let n = raw_series.len();
    Ok(ArimaModel {
        order,
        roots: RootReport::new(&phi, &theta),
        anchors: ArimaAnchors {
            last_values: raw_series[n - (order.d + p)..].to_vec(),
            last_residuals: residuals[residuals.len() - q..].to_vec(),
        },
        phi,
        theta,
        drift,
        css: css_value,
        residuals,
        estimation: "css".into(),
    })
}

impl ArimaModel {
    /// Iterated forecast on the raw scale for `horizon` steps past the end of
    /// the training series.
    pub fn forecast(&self, horizon: usize) -> Result<Vec<f64>> {
        let (p, d, q) = (self.order.p, self.order.d, self.order.q);
        let tail_diffs = difference(&self.anchors.last_values, d)?;
        if tail_diffs.len() != p || self.anchors.last_residuals.len() != q {
            return Err(Error::dims("model anchors do not match its order"));
        }
        let mut w = tail_diffs;
        let mut e = self.anchors.last_residuals.clone();
        let mut diffs = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let mut next = self.drift;
            for (i, ph) in self.phi.iter().enumerate() {
                next += ph * (w[w.len() - 1 - i] - self.drift);
            }
            for (j, th) in self.theta.iter().enumerate() {
                next += th * e[e.len() - 1 - j];
            }
            w.push(next);
            e.push(0.0);
            diffs.push(next);
        }
        undifference(&diffs, &self.anchors.last_values, d)
    }

    /// One-step in-sample predictions on the raw scale for
    /// `raw_series[d + p..]`, i.e. observation minus residual.
    pub fn fitted(&self, raw_series: &[f64]) -> Result<Vec<f64>> {
        let offset = self.order.d + self.order.p;
        if raw_series.len() != offset + self.residuals.len() {
            return Err(Error::dims(format!(
                "series of length {} does not match a fit with {} residuals",
                raw_series.len(),
                self.residuals.len()
            )));
        }
        Ok(raw_series[offset..]
            .iter()
            .zip(&self.residuals)
            .map(|(y, e)| y - e)
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.order.validate()?;
        if m.phi.len() != m.order.p
            || m.theta.len() != m.order.q
            || m.anchors.last_values.len() != m.order.d + m.order.p
            || m.anchors.last_residuals.len() != m.order.q
        {
            return Err(Error::dims(
                "ARIMA model coefficients do not match its order",
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn arima_forecast(model: &ArimaModel, horizon: usize) -> Result<Vec<f64>> {
    model.forecast(horizon)
}

/// Simulates `n` points of a zero-mean ARMA process driven by standard normal
/// innovations after discarding `burn_in` points.
pub fn simulate_arma(
    phi: &[f64],
    theta: &[f64],
    n: usize,
    burn_in: usize,
    rng: &mut crate::numkit::Rng,
) -> Vec<f64> {
    let total = n + burn_in;
    let mut x = vec![0.0; total];
    let mut e = vec![0.0; total];
    for t in 0..total {
        e[t] = rng.next_normal();
        let mut v = e[t];
        for (i, ph) in phi.iter().enumerate() {
            if t > i {
                v += ph * x[t - 1 - i];
            }
        }
        for (j, th) in theta.iter().enumerate() {
            if t > j {
                v += th * e[t - 1 - j];
            }
        }
        x[t] = v;
    }
    x.split_off(burn_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;

    fn model(
        order: ArimaOrder,
        phi: Vec<f64>,
        theta: Vec<f64>,
        drift: f64,
        last_values: Vec<f64>,
    ) -> ArimaModel {
        let q = theta.len();
        ArimaModel {
            order,
            roots: RootReport::new(&phi, &theta),
            phi,
            theta,
            drift,
            css: 0.0,
            anchors: ArimaAnchors {
                last_values,
                last_residuals: vec![0.0; q],
            },
            residuals: Vec::new(),
            estimation: "css".into(),
        }
    }

    #[test]
    fn css_examples() {
        let s = [1.0, 4.0, 2.0, 8.0, 5.0];
        let m = mean(&s);
        let centered: f64 = s.iter().map(|x| (x - m).powi(2)).sum();
        assert!((css(&s, &[], &[], m) - centered).abs() < 1e-12);

        // x_t = 0.5 x_{t-1} with drift 0: residuals x_t − 0.5 x_{t−1} for t ≥ 1
        // 4 − 0.5, 2 − 2, 8 − 1, 5 − 4 → 3.5² + 0 + 7² + 1² = 62.25
        assert!((css(&s, &[0.5], &[], 0.0) - 62.25).abs() < 1e-12);

        // exact ARMA(1,1) recursion with zero innovations after the start
        let mut x = vec![2.0];
        for _ in 0..20 {
            x.push(1.0 + 0.6 * (x.last().unwrap() - 1.0));
        }
        assert!(css(&x, &[0.6], &[0.3], 1.0) < 1e-24);
    }

    #[test]
    fn css_saturates() {
        let s = [1e200, -1e200, 1e200, -1e200];
        assert_eq!(css(&s, &[], &[], 0.0), CSS_LARGE_VALUE);
    }

    #[test]
    fn hr_degenerate_and_short() {
        let mut rng = Rng::new(1);
        let s: Vec<f64> = (0..50).map(|_| rng.next_normal() + 3.0).collect();
        let (phi, theta, mu) = hannan_rissanen_init(&s, ArimaOrder::new(0, 0, 0)).unwrap();
        assert!(phi.is_empty() && theta.is_empty());
        assert_eq!(mu, mean(&s));
        assert!(matches!(
            hannan_rissanen_init(&s[..25], ArimaOrder::new(1, 0, 1)),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn hr_recovers_ar1() {
        let mut rng = Rng::new(2024);
        let s = simulate_arma(&[0.7], &[], 5000, 200, &mut rng);
        let (phi, _, _) = hannan_rissanen_init(&s, ArimaOrder::new(1, 0, 0)).unwrap();
        assert!((phi[0] - 0.7).abs() < 0.15, "{phi:?}");
    }

    #[test]
    fn hr_white_noise_arma11() {
        let mut rng = Rng::new(77);
        let s = simulate_arma(&[], &[], 5000, 0, &mut rng);
        let (phi, theta, _) = hannan_rissanen_init(&s, ArimaOrder::new(1, 0, 1)).unwrap();
        assert!(
            phi[0].abs() < 0.2 && theta[0].abs() < 0.2,
            "{phi:?} {theta:?}"
        );
    }

    #[test]
    fn random_walk_with_drift_forecast() {
        let m = model(ArimaOrder::new(0, 1, 0), vec![], vec![], 0.5, vec![10.0]);
        assert_eq!(m.forecast(4).unwrap(), vec![10.5, 11.0, 11.5, 12.0]);
    }

    #[test]
    fn ar1_forecast_halves() {
        let m = model(ArimaOrder::new(1, 0, 0), vec![0.5], vec![], 0.0, vec![8.0]);
        assert_eq!(m.forecast(3).unwrap(), vec![4.0, 2.0, 1.0]);
    }

    #[test]
    fn ma_memory_runs_out() {
        let mut m = model(
            ArimaOrder::new(0, 0, 2),
            vec![],
            vec![0.4, -0.3],
            1.5,
            vec![],
        );
        m.anchors.last_residuals = vec![2.0, -1.0];
        let f = m.forecast(5).unwrap();
        assert!((f[0] - (1.5 - 0.4 - 0.3 * 2.0)).abs() < 1e-15);
        assert!((f[1] - (1.5 + -0.3 * -1.0)).abs() < 1e-15);
        assert!(f[2..].iter().all(|&v| v == 1.5));
    }

    #[test]
    fn zero_model_forecast_is_flat() {
        let m = model(
            ArimaOrder::new(2, 2, 1),
            vec![0.0, 0.0],
            vec![0.0],
            0.0,
            vec![3.0, 5.0, 7.0, 7.0],
        );
        assert_eq!(m.forecast(5).unwrap(), vec![7.0; 5]);
    }

    #[test]
    fn linear_trend_fit() {
        let s: Vec<f64> = (0..60).map(|t| 3.0 + 0.25 * t as f64).collect();
        let m = arima_fit(&s, ArimaOrder::new(0, 1, 0)).unwrap();
        assert!((m.drift - 0.25).abs() < 1e-8);
        assert!(m.residuals.iter().all(|e| e.abs() < 1e-8));
        assert_eq!(m.residuals.len(), 59);
    }

    #[test]
    fn fit_invariants() {
        let mut rng = Rng::new(5);
        let mut raw = vec![50.0];
        for v in simulate_arma(&[0.4], &[0.3], 300, 50, &mut rng) {
            raw.push(raw.last().unwrap() + 0.1 + v);
        }
        let order = ArimaOrder::new(1, 1, 1);
        let m = arima_fit(&raw, order).unwrap();
        assert_eq!(m.residuals.len(), raw.len() - 1 - 1);
        let ss: f64 = m.residuals.iter().map(|e| e * e).sum();
        assert!((ss - m.css).abs() <= 1e-9 * m.css);
        let x = difference(&raw, 1).unwrap();
        let (phi0, theta0, mu0) = hannan_rissanen_init(&x, order).unwrap();
        assert!(m.css <= css(&x, &phi0, &theta0, mu0));
        assert_eq!(m, arima_fit(&raw, order).unwrap());
        assert_eq!(m.fitted(&raw).unwrap().len(), raw.len() - 2);
        assert_eq!(m.forecast(16).unwrap().len(), 16);
        let back = ArimaModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn fit_rejects_short_series() {
        let s: Vec<f64> = (0..30).map(|t| t as f64).collect();
        assert!(matches!(
            arima_fit(&s, ArimaOrder::new(2, 1, 1)),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(arima_fit(&s, ArimaOrder::new(0, 3, 0)).is_err());
    }
}
