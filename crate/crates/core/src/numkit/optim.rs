use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptimizerConfig {
    pub max_evals: usize,
    /// Stop once `max f - min f` over the simplex falls below this.
    pub convergence_tol: f64,
    pub initial_step: f64,
}

impl Default for SimplexOptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            convergence_tol: 1e-12,
            initial_step: 0.1,
        }
    }
}

impl SimplexOptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals < 1 {
            return Err(Error::InvalidParameter(
                "max_evals must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_tol must be positive".into(),
            ));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return Err(Error::InvalidParameter(
                "initial_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// The starting simplex is `x0` plus `initial_step` along each axis.
/// Non-finite objective values away from `x0` are treated as `+inf`.
pub fn nelder_mead<F>(
    mut objective: F,
    x0: &[f64],
    cfg: &SimplexOptimizerConfig,
) -> Result<SimplexResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    let f0 = objective(x0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut evals = 1;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if n == 0 {
        return Ok(SimplexResult {
            x_best: Vec::new(),
            f_best: f0,
            evals,
            converged: true,
        });
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        if evals >= cfg.max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += cfg.initial_step;
        let f = eval(&x, &mut evals);
        simplex.push((x, f));
    }
    if simplex.len() < n + 1 {
        return Ok(best_of(simplex, evals, false));
    }

    let mut converged = false;
    loop {
        // stable sort keeps ties in insertion order, so runs are deterministic
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread < cfg.convergence_tol || (simplex[0].1 == simplex[n].1) {
            converged = true;
            break;
        }
        if evals >= cfg.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }
        let worst = simplex[n].0.clone();
        let f_worst = simplex[n].1;
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evals >= cfg.max_evals {
                break;
            }
            let x: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            let f = eval(&x, &mut evals);
            *vertex = (x, f);
        }
    }
    Ok(best_of(simplex, evals, converged))
}

fn best_of(simplex: Vec<(Vec<f64>, f64)>, evals: usize, converged: bool) -> SimplexResult {
    let (x_best, f_best) = simplex
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("simplex holds at least the starting point");
    SimplexResult {
        x_best,
        f_best,
        evals,
        converged,
    }
}

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_gradient<F>(mut objective: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(
            "finite-difference step must be positive".into(),
        ));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let fp = objective(&probe);
        probe[i] = x[i] - step;
        let fm = objective(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        grad.push((fp - fm) / (2.0 * step));
    }
    Ok(grad)
}
