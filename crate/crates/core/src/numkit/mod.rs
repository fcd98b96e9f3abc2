//! Numerical substrate: dense matrices, Cholesky solves, the splitmix64
//! generator, Nelder-Mead, and finite differences. Everything is `f64`.

mod matrix;
mod optim;
mod rng;

pub use matrix::{cholesky_solve, dot, matmul, Cholesky, Matrix};
pub use optim::{finite_diff_gradient, nelder_mead, SimplexOptimizerConfig, SimplexResult};
pub use rng::{derive_seed, rng_next_uniform, Rng};

/// Least-squares solution of `x · b ≈ y` through the normal equations.
pub(crate) fn least_squares(x: &Matrix, y: &[f64]) -> crate::Result<Vec<f64>> {
    let xty = x.t_matvec(y)?;
    Cholesky::factor(&x.gram())
        .map_err(|_| crate::Error::SingularSystem)?
        .solve_vec(&xty)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
