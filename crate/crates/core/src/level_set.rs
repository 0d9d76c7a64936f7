//! Level sets of a regularized field.
//!
//! Thresholding the ROF solution of `f` at `alpha` yields a global minimizer
//! of the binary energy `TV(theta) + sum (alpha - f) theta`, so one solve
//! serves every `alpha`.

use crate::error::{Result, ShapeError};
use crate::field::{ensure_same_dims, BinaryMask, ScalarField};

/// Distance below which an `alpha` is considered to sit on a level of `u`.
pub const LEVEL_TIE_TOLERANCE: f64 = 1e-3;

/// `u > s` when `strict`, otherwise `u >= s`.
pub fn threshold(u: &ScalarField, s: f64, strict: bool) -> BinaryMask {
    let bits = u
        .values()
        .iter()
        .map(|&v| if strict { v > s } else { v >= s })
        .collect();
    BinaryMask::new(u.height(), u.width(), bits).expect("dimensions come from a valid field")
}

/// True when some value of `u` lies within `tol` of `alpha`. At such levels
/// the minimizer of the binary energy may not be unique.
pub fn is_near_level(u: &ScalarField, alpha: f64, tol: f64) -> bool {
    u.values().iter().any(|v| (v - alpha).abs() <= tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMask {
    pub alpha: f64,
    pub mask: BinaryMask,
    /// `alpha` is within [`LEVEL_TIE_TOLERANCE`] of a value of `u`.
    pub near_level: bool,
}

/// Thresholds `u` once per `alpha`. Masks are nested: a larger `alpha`
/// never adds pixels.
pub fn alpha_sweep(u: &ScalarField, alphas: &[f64], strict: bool) -> Vec<SweepMask> {
    alphas
        .iter()
        .map(|&alpha| SweepMask {
            alpha,
            mask: threshold(u, alpha, strict),
            near_level: is_near_level(u, alpha, LEVEL_TIE_TOLERANCE),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMatch {
    pub level: f64,
    pub mask: BinaryMask,
    /// Symmetric-difference pixel count between `mask` and the target.
    pub distance: usize,
}

/// Finds the candidate `s` whose strict level set `{u > s}` differs from
/// `target` in the fewest pixels. Ties go to the smaller `s`.
pub fn closest_level_set(
    u: &ScalarField,
    target: &BinaryMask,
    candidates: &[f64],
) -> Result<LevelMatch> {
    ensure_same_dims(u.dims(), target.dims())?;
    if candidates.is_empty() {
        return Err(ShapeError::EmptyCandidates);
    }
    // Pixels by decreasing value; prefix[k] = sum over the top k of (1 - 2 t),
    // the change in distance from the empty mask when they switch on.
    let mut order: Vec<(f64, bool)> = u
        .values()
        .iter()
        .copied()
        .zip(target.bits().iter().copied())
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut prefix = Vec::with_capacity(order.len() + 1);
    prefix.push(0i64);
    for &(_, t) in &order {
        prefix.push(prefix.last().unwrap() + if t { -1 } else { 1 });
    }
    let base = target.count() as i64;

    let mut best: Option<(f64, i64)> = None;
    for &s in candidates {
        let above = order.partition_point(|&(v, _)| v > s);
        let d = base + prefix[above];
        let better = match best {
            None => true,
            Some((bs, bd)) => d < bd || (d == bd && s < bs),
        };
        if better {
            best = Some((s, d));
        }
    }
    let (level, distance) = best.expect("candidates is non-empty");
    Ok(LevelMatch {
        level,
        mask: threshold(u, level, true),
        distance: distance as usize,
    })
}

/// Thresholds that enumerate every distinct strict level set of `u`: one
/// below the minimum, the midpoints between consecutive distinct values,
/// and one above the maximum.
pub fn level_candidates(u: &ScalarField) -> Vec<f64> {
    let values = u.distinct_values();
    let lo = values[0];
    let hi = values[values.len() - 1];
    let pad = 1.0f64.max(hi - lo);
    let mut out = Vec::with_capacity(values.len() + 1);
    out.push(lo - pad);
    out.extend(values.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(hi + pad);
    out
}
