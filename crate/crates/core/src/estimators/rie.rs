//! Rotation-invariant eigenvalue cleaning.
//!
//! Each estimator keeps the eigenvectors of its input and replaces the
//! eigenvalues `λ_k` by a function of `λ_k`, the aspect ratio `q = p/n` and
//! the resolvent trace `g(z) = (1/p) Σ_j 1/(z − λ_j) = −G(z)` of the input
//! spectrum evaluated at `λ_k − iη`, where `G` is the Stieltjes transform
//! below. The offset is `η = scale · (tr/p) · p^{−1/2}`.

use num_complex::Complex64;

use crate::matrix::{CovarianceMatrix, Spectrum};

const XI_FLOOR: f64 = 1e-12;
const STEIN_DENOMINATOR_FLOOR: f64 = 1e-8;

/// `G(z) = (1/p) Σ_k 1/(λ_k − z)`.
pub fn stieltjes(spectrum: &Spectrum, z: Complex64) -> Complex64 {
    let p = spectrum.dim() as f64;
    spectrum
        .eigenvalues
        .iter()
        .map(|&l| (Complex64::new(l, 0.0) - z).inv())
        .sum::<Complex64>()
        / p
}

/// Imaginary offset used to evaluate `G` below the real axis.
pub fn rie_eta(spectrum: &Spectrum, eta_scale: f64) -> f64 {
    let p = spectrum.dim() as f64;
    let mean = spectrum.eigenvalues.iter().sum::<f64>() / p;
    eta_scale * mean / p.sqrt()
}

/// `g(λ_k − iη)` for every eigenvalue.
fn transforms(spectrum: &Spectrum, eta_scale: f64) -> Vec<Complex64> {
    let eta = rie_eta(spectrum, eta_scale);
    spectrum
        .eigenvalues
        .iter()
        .map(|&l| -stieltjes(spectrum, Complex64::new(l, -eta)))
        .collect()
}

fn floor_of(spectrum: &Spectrum) -> f64 {
    XI_FLOOR * spectrum.max().max(0.0)
}

/// `ξ_k = λ_k / |1 − q + q λ_k g(λ_k − iη)|²`.
pub fn lp_eigenvalues(spectrum: &Spectrum, q: f64, eta_scale: f64) -> Vec<f64> {
    let floor = floor_of(spectrum);
    spectrum
        .eigenvalues
        .iter()
        .zip(transforms(spectrum, eta_scale))
        .map(|(&l, g)| {
            let den = (Complex64::new(1.0 - q, 0.0) + g * (q * l)).norm_sqr();
            (l.max(0.0) / den).max(floor)
        })
        .collect()
}

/// `ξ_k = λ_k / (1 − q + 2 q λ_k Re g(λ_k − iη))`.
pub fn stein_eigenvalues(spectrum: &Spectrum, q: f64, eta_scale: f64) -> Vec<f64> {
    let floor = floor_of(spectrum);
    spectrum
        .eigenvalues
        .iter()
        .zip(transforms(spectrum, eta_scale))
        .map(|(&l, g)| {
            let mut den = 1.0 - q + 2.0 * q * l * g.re;
            if den.abs() < STEIN_DENOMINATOR_FLOOR {
                den = STEIN_DENOMINATOR_FLOOR.copysign(den);
            }
            (l.max(0.0) / den).max(floor)
        })
        .collect()
}

/// Geometric mean of the LP and Stein eigenvalues.
pub fn symstein_eigenvalues(spectrum: &Spectrum, q: f64, eta_scale: f64) -> Vec<f64> {
    lp_eigenvalues(spectrum, q, eta_scale)
        .into_iter()
        .zip(stein_eigenvalues(spectrum, q, eta_scale))
        .map(|(a, b)| (a * b).sqrt())
        .collect()
}

fn rebuild(input: &CovarianceMatrix, values: Vec<f64>, name: &str) -> CovarianceMatrix {
    CovarianceMatrix::from_spectrum(input.spectrum(), &values).with_origin(name)
}

pub fn estimate_lp(input: &CovarianceMatrix, q: f64, eta_scale: f64) -> CovarianceMatrix {
    rebuild(input, lp_eigenvalues(input.spectrum(), q, eta_scale), "lp")
}

pub fn estimate_stein(input: &CovarianceMatrix, q: f64, eta_scale: f64) -> CovarianceMatrix {
    rebuild(input, stein_eigenvalues(input.spectrum(), q, eta_scale), "stein")
}

pub fn estimate_symstein(input: &CovarianceMatrix, q: f64, eta_scale: f64) -> CovarianceMatrix {
    rebuild(input, symstein_eigenvalues(input.spectrum(), q, eta_scale), "symstein")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn spectrum_of(values: &[f64]) -> Spectrum {
        Spectrum {
            eigenvalues: values.to_vec(),
            eigenvectors: DMatrix::identity(values.len(), values.len()),
        }
    }

    #[test]
    fn stieltjes_single_atom() {
        let s = spectrum_of(&[1.0, 1.0, 1.0]);
        let g = stieltjes(&s, Complex64::new(1.0, -1.0));
        assert!((g - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn stieltjes_two_atoms() {
        let s = spectrum_of(&[2.0, 0.0]);
        let g = stieltjes(&s, Complex64::new(0.0, -1.0));
        assert!((g - Complex64::new(0.2, -0.6)).norm() < 1e-15);
    }

    #[test]
    fn symstein_is_geometric_mean() {
        let s = spectrum_of(&[4.0, 2.5, 1.0, 0.3]);
        let lp = lp_eigenvalues(&s, 0.5, 1.0);
        let st = stein_eigenvalues(&s, 0.5, 1.0);
        let ss = symstein_eigenvalues(&s, 0.5, 1.0);
        for k in 0..4 {
            assert!((ss[k] * ss[k] - lp[k] * st[k]).abs() <= 1e-14 * lp[k] * st[k]);
        }
    }

    #[test]
    fn zero_q_is_identity_map() {
        let s = spectrum_of(&[4.0, 2.5, 1.0]);
        assert_eq!(lp_eigenvalues(&s, 0.0, 1.0), s.eigenvalues);
        assert_eq!(stein_eigenvalues(&s, 0.0, 1.0), s.eigenvalues);
    }

    #[test]
    fn outputs_are_floored_positive() {
        let s = spectrum_of(&[3.0, 1.0, 0.0, 0.0]);
        for v in lp_eigenvalues(&s, 2.0, 1.0)
            .into_iter()
            .chain(stein_eigenvalues(&s, 2.0, 1.0))
        {
            assert!(v >= 3.0 * XI_FLOOR);
        }
    }

    #[test]
    fn keeps_eigenvectors() {
        let c = CovarianceMatrix::from_rows(&[&[2.0, 0.5, 0.1], &[0.5, 1.0, 0.2], &[0.1, 0.2, 0.7]])
            .unwrap();
        let xi = estimate_stein(&c, 0.4, 1.0);
        let comm = xi.matrix() * c.matrix() - c.matrix() * xi.matrix();
        assert!(comm.amax() < 1e-8);
    }
}
