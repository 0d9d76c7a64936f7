//! Weighted total variations and the discrete binary shape energy.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Result, ShapeError};
use crate::field::{ensure_same_dims, BinaryMask, ScalarField, WeightField};
use crate::grid_ops::{grad, grad_rot};

/// Lower constant relating the anisotropic and Euclidean perimeters, `(1 + sqrt 2) / 2`.
pub const PERIMETER_C1: f64 = (1.0 + SQRT_2) / 2.0;
/// Upper constant, `1 / sqrt(2 - sqrt 2)`.
pub const PERIMETER_C2: f64 = 1.306_562_964_876_376_4;

/// `1/2 sum g (|grad_x u| + |grad_y u|) + 1/2 sum g (|grad_xy u| + |grad_yx u|)`.
///
/// The diagonal differences already carry their `1/sqrt 2` factor, so this
/// is the pi/4-symmetrised weighted Manhattan total variation. On a binary
/// mask it is the weighted anisotropic perimeter of the shape.
pub fn tv_weighted_aniso(u: &ScalarField, g: &WeightField) -> Result<f64> {
    ensure_same_dims(g.dims(), u.dims())?;
    let a = grad(u);
    let d = grad_rot(u);
    let gv = g.values();
    let mut sum = 0.0;
    #[allow(clippy::needless_range_loop)]
    for k in 0..gv.len() {
        sum += gv[k]
            * (a.comp_x()[k].abs() + a.comp_y()[k].abs() + d.comp_x()[k].abs() + d.comp_y()[k].abs());
    }
    Ok(0.5 * sum)
}

/// Axis-aligned weighted Manhattan total variation, `sum g (|grad_x u| + |grad_y u|)`.
pub fn tv_manhattan(u: &ScalarField, g: &WeightField) -> Result<f64> {
    ensure_same_dims(g.dims(), u.dims())?;
    let a = grad(u);
    Ok(g.values()
        .iter()
        .enumerate()
        .map(|(k, w)| w * (a.comp_x()[k].abs() + a.comp_y()[k].abs()))
        .sum())
}

/// Weighted isotropic discrete TV `sum g |grad u|_2`.
///
/// Diagnostic reference only: it does not decompose over level sets, so
/// thresholding its ROF solution carries no optimality guarantee.
pub fn tv_isotropic(u: &ScalarField, g: &WeightField) -> Result<f64> {
    ensure_same_dims(g.dims(), u.dims())?;
    let a = grad(u);
    Ok(g.values()
        .iter()
        .enumerate()
        .map(|(k, w)| w * a.comp_x()[k].hypot(a.comp_y()[k]))
        .sum())
}

/// `sum (alpha - f) theta + TV(theta)`, the binary energy minimized by both solvers.
pub fn shape_energy(
    theta: &BinaryMask,
    f: &ScalarField,
    g: &WeightField,
    alpha: f64,
) -> Result<f64> {
    ensure_same_dims(f.dims(), theta.dims())?;
    ensure_same_dims(f.dims(), g.dims())?;
    let data: f64 = theta
        .bits()
        .iter()
        .zip(f.values())
        .filter(|(&b, _)| b)
        .map(|(_, fv)| alpha - fv)
        .sum();
    Ok(data + tv_weighted_aniso(&theta.to_field(), g)?)
}

/// Mask of the upper level set `{u > t}`.
pub(crate) fn upper_level_set(u: &ScalarField, t: f64) -> BinaryMask {
    BinaryMask::new(u.height(), u.width(), u.values().iter().map(|&v| v > t).collect())
        .expect("dimensions come from a valid field")
}

/// One threshold halfway between each pair of consecutive distinct values of `u`.
pub fn midpoint_levels(u: &ScalarField) -> Vec<f64> {
    u.distinct_values()
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect()
}

/// Evaluates both sides of the coarea identity for a finitely-valued field.
///
/// Returns `(lhs, rhs)` where `lhs` is the direct total variation and `rhs`
/// sums, over consecutive distinct values `v_k < v_{k+1}`, the gap times the
/// variation of the indicator `{u > t_k}` for a level `t_k` taken from
/// `levels` inside `(v_k, v_{k+1})`.
pub fn coarea_check(u: &ScalarField, g: &WeightField, levels: &[f64]) -> Result<(f64, f64)> {
    let lhs = tv_weighted_aniso(u, g)?;
    let values = u.distinct_values();
    if values.len() <= 1 {
        return Ok((lhs, 0.0));
    }
    if levels.is_empty() {
        return Err(ShapeError::EmptyLevels);
    }
    let mut rhs = 0.0;
    for pair in values.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let t = levels
            .iter()
            .copied()
            .find(|&t| t > lo && t < hi)
            .ok_or_else(|| {
                ShapeError::InvalidParameter(format!("no level strictly between {lo} and {hi}"))
            })?;
        rhs += (hi - lo) * tv_weighted_aniso(&upper_level_set(u, t).to_field(), g)?;
    }
    Ok((lhs, rhs))
}

/// `1/2 (|nu|_1 + |R_{pi/4} nu|_1)` for the unit normal at angle `t`.
pub fn anisotropic_length_factor(t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    let rx = FRAC_1_SQRT_2 * (c - s);
    let ry = FRAC_1_SQRT_2 * (c + s);
    0.5 * (c.abs() + s.abs() + rx.abs() + ry.abs())
}

/// Min and max of [`anisotropic_length_factor`] over `samples` equally spaced
/// angles in `[0, 2 pi)`. These bracket the ratio between the anisotropic and
/// the Euclidean weighted perimeters.
pub fn perimeter_ratio_bounds(samples: usize) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(ShapeError::InvalidParameter(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let step = 2.0 * PI / samples as f64;
    Ok((0..samples)
        .map(|k| anisotropic_length_factor(k as f64 * step))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        }))
}
