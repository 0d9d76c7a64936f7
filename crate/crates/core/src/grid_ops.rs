//! Finite-difference operators on the pixel grid.
//!
//! `grad` uses forward differences that vanish at the far boundary
//! (homogeneous Neumann). `grad_rot` is the same construction along the two
//! diagonals, with the `1/sqrt(2)` length factor folded in. `div` and
//! `div_rot` are the exact negative adjoints of the two gradients, so
//! `<div p, w> = -<p, grad w>` holds to rounding error on every grid size.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::field::{ScalarField, VectorField};

pub(crate) fn grad_into(h: usize, w: usize, u: &[f64], gx: &mut [f64], gy: &mut [f64]) {
    for i in 0..h {
        let row = i * w;
        for j in 0..w {
            let k = row + j;
            gx[k] = if i + 1 < h { u[k + w] - u[k] } else { 0.0 };
            gy[k] = if j + 1 < w { u[k + 1] - u[k] } else { 0.0 };
        }
    }
}

pub(crate) fn grad_rot_into(h: usize, w: usize, u: &[f64], gxy: &mut [f64], gyx: &mut [f64]) {
    for i in 0..h {
        let row = i * w;
        for j in 0..w {
            let k = row + j;
            gxy[k] = if i + 1 < h && j + 1 < w {
                (u[k + w + 1] - u[k]) * FRAC_1_SQRT_2
            } else {
                0.0
            };
            gyx[k] = if i >= 1 && j + 1 < w {
                (u[k - w + 1] - u[k]) * FRAC_1_SQRT_2
            } else {
                0.0
            };
        }
    }
}

pub(crate) fn div_into(h: usize, w: usize, px: &[f64], py: &[f64], out: &mut [f64]) {
    for i in 0..h {
        let row = i * w;
        for j in 0..w {
            let k = row + j;
            let mut d = 0.0;
            if i + 1 < h {
                d += px[k];
            }
            if i >= 1 {
                d -= px[k - w];
            }
            if j + 1 < w {
                d += py[k];
            }
            if j >= 1 {
                d -= py[k - 1];
            }
            out[k] = d;
        }
    }
}

pub(crate) fn div_rot_into(h: usize, w: usize, pxy: &[f64], pyx: &[f64], out: &mut [f64]) {
    for i in 0..h {
        let row = i * w;
        for j in 0..w {
            let k = row + j;
            let mut d = 0.0;
            // transpose of (i,j) -> (i+1,j+1)
            if i + 1 < h && j + 1 < w {
                d += pxy[k];
            }
            if i >= 1 && j >= 1 {
                d -= pxy[k - w - 1];
            }
            // transpose of (i,j) -> (i-1,j+1)
            if i >= 1 && j + 1 < w {
                d += pyx[k];
            }
            if i + 1 < h && j >= 1 {
                d -= pyx[k + w - 1];
            }
            out[k] = d * FRAC_1_SQRT_2;
        }
    }
}

/// Axis-aligned forward-difference gradient `(grad_x u, grad_y u)`.
pub fn grad(u: &ScalarField) -> VectorField {
    let (h, w) = u.dims();
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    grad_into(h, w, u.values(), &mut gx, &mut gy);
    VectorField::from_raw(h, w, gx, gy)
}

/// Diagonal gradient `(grad_xy u, grad_yx u)`: differences towards `(i+1, j+1)`
/// and `(i-1, j+1)`, each divided by `sqrt(2)`.
pub fn grad_rot(u: &ScalarField) -> VectorField {
    let (h, w) = u.dims();
    let mut gxy = vec![0.0; h * w];
    let mut gyx = vec![0.0; h * w];
    grad_rot_into(h, w, u.values(), &mut gxy, &mut gyx);
    VectorField::from_raw(h, w, gxy, gyx)
}

/// Negative adjoint of [`grad`].
pub fn div(p: &VectorField) -> ScalarField {
    let (h, w) = p.dims();
    let mut out = vec![0.0; h * w];
    div_into(h, w, p.comp_x(), p.comp_y(), &mut out);
    ScalarField::from_raw(h, w, out)
}

/// Negative adjoint of [`grad_rot`].
pub fn div_rot(p: &VectorField) -> ScalarField {
    let (h, w) = p.dims();
    let mut out = vec![0.0; h * w];
    div_rot_into(h, w, p.comp_x(), p.comp_y(), &mut out);
    ScalarField::from_raw(h, w, out)
}

/// Result of [`operator_norm_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the estimate settled.
    pub converged: bool,
}

const NORM_MAX_ITER: usize = 20_000;
const NORM_REL_TOL: f64 = 1e-12;

/// Power-iteration estimate of the largest eigenvalue of
/// `-(div grad + div_rot grad_rot) / 2`, the operator whose norm governs the
/// admissible step of the dual projection iteration (with unit weights).
/// The conservative bound used by the solver is 8.
pub fn operator_norm_estimate(height: usize, width: usize) -> NormEstimate {
    let n = height * width;
    if n <= 1 {
        return NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    // deterministic start with components on every eigenvector in practice
    let mut v: Vec<f64> = (0..n)
        .map(|k| ((k as f64 + 1.0) * 1.618_033_988_75).sin() + 0.5 * ((k % 2) as f64 - 0.5))
        .collect();
    normalize(&mut v);

    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    let mut estimate = 0.0;
    for it in 1..=NORM_MAX_ITER {
        grad_into(height, width, &v, &mut gx, &mut gy);
        div_into(height, width, &gx, &gy, &mut d1);
        grad_rot_into(height, width, &v, &mut gx, &mut gy);
        div_rot_into(height, width, &gx, &gy, &mut d2);
        for k in 0..n {
            d1[k] = -0.5 * (d1[k] + d2[k]);
        }
        let next: f64 = v.iter().zip(&d1).map(|(a, b)| a * b).sum();
        let norm = d1.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return NormEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        v.iter_mut().zip(&d1).for_each(|(a, b)| *a = b / norm);
        if it > 1 && (next - estimate).abs() <= NORM_REL_TOL * next.abs() {
            return NormEstimate {
                value: next,
                iterations: it,
                converged: true,
            };
        }
        estimate = next;
    }
    NormEstimate {
        value: estimate,
        iterations: NORM_MAX_ITER,
        converged: false,
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
