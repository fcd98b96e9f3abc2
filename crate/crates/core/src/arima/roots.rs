use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Roots on or inside this modulus are flagged.
pub const ROOT_FLAG_MODULUS: f64 = 1.001;

/// Smallest characteristic-root moduli of the AR and MA polynomials.
/// Reported only; estimation never constrains them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    /// Of `1 − φ₁z − … − φₚzᵖ`; `None` when the polynomial is constant.
    pub ar_min_modulus: Option<f64>,
    /// Of `1 + θ₁z + … + θ_q z^q`.
    pub ma_min_modulus: Option<f64>,
    pub stationary: bool,
    pub invertible: bool,
}

impl RootReport {
    pub fn new(phi: &[f64], theta: &[f64]) -> Self {
        let ar: Vec<f64> = std::iter::once(1.0).chain(phi.iter().map(|p| -p)).collect();
        let ma: Vec<f64> = std::iter::once(1.0).chain(theta.iter().copied()).collect();
        let ar_min_modulus = min_root_modulus(&ar);
        let ma_min_modulus = min_root_modulus(&ma);
        Self {
            ar_min_modulus,
            ma_min_modulus,
            stationary: ar_min_modulus.is_none_or(|m| m > ROOT_FLAG_MODULUS),
            invertible: ma_min_modulus.is_none_or(|m| m > ROOT_FLAG_MODULUS),
        }
    }
}

/// Smallest root modulus of `c₀ + c₁z + … + c_m z^m` (ascending coefficients).
pub fn min_root_modulus(coeffs: &[f64]) -> Option<f64> {
    let roots = polynomial_roots(coeffs);
    roots.iter().map(|r| r.norm()).reduce(f64::min)
}

/// Durand-Kerner iteration on the monic form of the polynomial.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = match coeffs.iter().rposition(|&c| c != 0.0) {
        Some(d) if d > 0 => d,
        _ => return Vec::new(),
    };
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs[..=degree].iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };

    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..1000 {
        let mut delta = 0.0_f64;
        for i in 0..degree {
            let zi = roots[i];
            let denom = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, &zj)| acc * (zi - zj));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(zi) / denom;
            roots[i] = zi - step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 {
            break;
        }
    }
    roots
}
