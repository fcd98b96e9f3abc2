//! L2-regularized least squares without an intercept, solved in closed form
//! through a Cholesky factorization of `XᵀX + λI`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{dot, Cholesky, Matrix};

/// Regularization values swept by the benchmark grid.
pub const CANONICAL_LAMBDAS: [f64; 6] = [0.0, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    pub beta: Vec<f64>,
}

fn check_xy(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::dims(format!(
            "{} design rows, {} targets",
            x.rows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Solves `(XᵀX + λI) β = Xᵀy`.
pub fn ridge_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<RidgeModel> {
    check_xy(x, y)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let mut a = x.gram();
    for i in 0..a.rows() {
        a.set(i, i, a.get(i, i) + lambda);
    }
    let rhs = x.t_matvec(y)?;
    let beta = match Cholesky::factor(&a) {
        Ok(chol) => chol.solve_vec(&rhs).map_err(|_| Error::SingularSystem)?,
        Err(Error::NotPositiveDefinite { .. }) => return Err(Error::SingularSystem),
        Err(e) => return Err(e),
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(RidgeModel { lambda, beta })
}

pub fn ridge_predict(model: &RidgeModel, x: &Matrix) -> Result<Vec<f64>> {
    x.matvec(&model.beta)
}

/// `Σ (yᵢ − βᵀxᵢ)² + λ Σ βⱼ²`.
pub fn ridge_objective(x: &Matrix, y: &[f64], beta: &[f64], lambda: f64) -> Result<f64> {
    check_xy(x, y)?;
    let fitted = x.matvec(beta)?;
    let rss: f64 = fitted.iter().zip(y).map(|(f, t)| (t - f) * (t - f)).sum();
    Ok(rss + lambda * dot(beta, beta))
}

/// Analytic gradient `2Xᵀ(Xβ − y) + 2λβ` of [`ridge_objective`].
pub fn ridge_objective_gradient(
    x: &Matrix,
    y: &[f64],
    beta: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_xy(x, y)?;
    let resid: Vec<f64> = x.matvec(beta)?.iter().zip(y).map(|(f, t)| f - t).collect();
    let xt_r = x.t_matvec(&resid)?;
    Ok(xt_r
        .iter()
        .zip(beta)
        .map(|(g, b)| 2.0 * g + 2.0 * lambda * b)
        .collect())
}

impl RidgeModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        ridge_predict(self, x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.beta.iter().any(|b| !b.is_finite()) || !(m.lambda >= 0.0) {
            return Err(Error::InvalidParameter(
                "ridge model has invalid coefficients".into(),
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
