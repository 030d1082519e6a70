//! Roots of exact polynomials with inclusion radii.
//!
//! Each square-free factor is solved by Aberth–Ehrlich iteration in `f64`.
//! Around every approximation `z_i` the disk of radius
//! `n |p(z_i)| / |a_n ∏_{j≠i} (z_i − z_j)|` contains a root, and if the disks
//! are pairwise disjoint each one contains exactly one. Horner rounding error
//! is added to `|p(z_i)|` before the radius is formed.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::polyrat::{rational_to_f64, Poly};

/// A root approximation and the radius of a disk known to contain a root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedRoot {
    pub value: Complex64,
    pub radius: f64,
}

const MAX_ITER: usize = 500;

/// All roots of `p` with multiplicity, via Yun's square-free factorization.
pub fn certified_roots(p: &Poly) -> Vec<CertifiedRoot> {
    let mut out = Vec::new();
    for (k, factor) in p.squarefree_factors().iter().enumerate() {
        if factor.degree().finite().unwrap_or(0) < 1 {
            continue;
        }
        let roots = simple_roots(factor);
        for _ in 0..=k {
            out.extend_from_slice(&roots);
        }
    }
    out.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    out
}

fn coefficients(p: &Poly) -> Vec<f64> {
    let pp = p.primitive_part();
    let lc = pp.leading_coeff();
    pp.coeffs()
        .iter()
        .map(|c| rational_to_f64(&(c / &lc)))
        .collect()
}

fn horner(a: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    let r = z.norm();
    for &c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
        mag = mag * r + c.abs();
    }
    (p, dp, mag)
}

/// Roots of a square-free polynomial.
fn simple_roots(p: &Poly) -> Vec<CertifiedRoot> {
    let a = coefficients(p);
    let n = a.len() - 1;
    if n == 1 {
        return vec![CertifiedRoot {
            value: Complex64::new(-a[0], 0.0),
            radius: 4.0 * f64::EPSILON * a[0].abs(),
        }];
    }
    // initial points on a circle of the Cauchy radius, rotated off the real axis
    let rho = 1.0 + a[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = core::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(rho, theta)
        })
        .collect();
    for _ in 0..MAX_ITER {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (pv, dpv, _) = horner(&a, z[i]);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dpv;
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    let gamma = 2.0 * (n as f64 + 1.0) * f64::EPSILON;
    (0..n)
        .map(|i| {
            let (pv, _, mag) = horner(&a, z[i]);
            let prod: Complex64 = (0..n).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            let radius = n as f64 * (pv.norm() + gamma * mag) / prod.norm();
            let value = if z[i].im.abs() <= radius {
                Complex64::new(z[i].re, 0.0)
            } else {
                z[i]
            };
            CertifiedRoot {
                value,
                radius: radius + (value - z[i]).norm(),
            }
        })
        .collect()
}
