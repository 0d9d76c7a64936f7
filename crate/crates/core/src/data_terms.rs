//! Data fields `f` and weights `g` built from imagery.

use std::path::Path;

use crate::error::{Result, ShapeError};
use crate::field::{ensure_same_dims, ScalarField, WeightField};
use crate::grid_ops::grad;
use crate::io::read_pfm_file;

/// `g = lambda / (1 + |grad I|^2) + mu`, valued in `[mu, lambda + mu]`.
///
/// The gradient is taken on `image` exactly as given, so the caller picks
/// the intensity scale.
pub fn edge_weight(image: &ScalarField, lambda: f64, mu: f64) -> Result<WeightField> {
    if !(lambda.is_finite() && mu.is_finite() && lambda >= 0.0 && mu >= 0.0) {
        return Err(ShapeError::InvalidParameter(format!(
            "lambda and mu must be finite and nonnegative, got {lambda} and {mu}"
        )));
    }
    if lambda + mu <= 0.0 {
        return Err(ShapeError::InvalidParameter(
            "lambda and mu cannot both be zero".into(),
        ));
    }
    let d = grad(image);
    let values = d
        .comp_x()
        .iter()
        .zip(d.comp_y())
        .map(|(x, y)| lambda / (1.0 + x * x + y * y) + mu)
        .collect();
    WeightField::new(ScalarField::new(image.height(), image.width(), values)?)
}

/// Per-pixel temporal median; even frame counts take the lower median.
pub fn median_background(frames: &[ScalarField]) -> Result<ScalarField> {
    let first = frames.first().ok_or(ShapeError::EmptyFrames)?;
    for f in &frames[1..] {
        ensure_same_dims(first.dims(), f.dims())?;
    }
    let mut column = vec![0.0; frames.len()];
    let mid = (frames.len() - 1) / 2;
    let values = (0..first.len())
        .map(|k| {
            for (c, f) in column.iter_mut().zip(frames) {
                *c = f.values()[k];
            }
            *column.select_nth_unstable_by(mid, f64::total_cmp).1
        })
        .collect();
    ScalarField::new(first.height(), first.width(), values)
}

/// `|B - I|` per pixel.
pub fn background_difference(frame: &ScalarField, background: &ScalarField) -> Result<ScalarField> {
    frame.zip_with(background, |i, b| (b - i).abs())
}

/// Accepts a precomputed flow-magnitude field, rejecting negative entries.
pub fn flow_norm(field: ScalarField) -> Result<ScalarField> {
    if let Some((index, &value)) = field.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(ShapeError::NegativeValue { index, value });
    }
    Ok(field)
}

/// Reads a flow-magnitude field from a PFM file.
pub fn load_flow_norm(path: impl AsRef<Path>) -> Result<ScalarField> {
    flow_norm(read_pfm_file(path)?)
}
