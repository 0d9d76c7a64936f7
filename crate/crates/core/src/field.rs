//! Grid-valued data: scalar fields, two-component vector fields, strictly
//! positive weights and binary masks.
//!
//! All fields are stored row-major. Index `i` is the row and `j` the column;
//! the "x" component of a gradient differences along `i`, the "y" component
//! along `j`.

use crate::error::{Result, ShapeError};

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(ShapeError::EmptyGrid { height, width });
    }
    Ok(())
}

fn check_values(height: usize, width: usize, values: &[f64]) -> Result<()> {
    check_dims(height, width)?;
    if values.len() != height * width {
        return Err(ShapeError::LengthMismatch {
            expected: height * width,
            found: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(ShapeError::NonFinite { index });
    }
    Ok(())
}

/// Real-valued function on an `height x width` pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        check_values(height, width, &values)?;
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, 0.0)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self::new(height, width, values)
    }

    /// Builds a field from values already known to be finite and correctly
    /// sized. Only used by operators whose outputs are finite by construction.
    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Pointwise map; fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(
            self.height,
            self.width,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination of two fields of equal dimensions.
    pub fn zip_with(
        &self,
        other: &ScalarField,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<ScalarField> {
        ensure_same_dims(self.dims(), other.dims())?;
        ScalarField::new(
            self.height,
            self.width,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Sorted distinct values of the field.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(ShapeError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Two scalar components per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    height: usize,
    width: usize,
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
}

impl VectorField {
    pub fn new(height: usize, width: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_values(height, width, &x)?;
        check_values(height, width, &y)?;
        Ok(Self {
            height,
            width,
            x,
            y,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self::from_raw(
            height,
            width,
            vec![0.0; height * width],
            vec![0.0; height * width],
        ))
    }

    pub(crate) fn from_raw(height: usize, width: usize, x: Vec<f64>, y: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), height * width);
        debug_assert_eq!(y.len(), height * width);
        Self {
            height,
            width,
            x,
            y,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn comp_x(&self) -> &[f64] {
        &self.x
    }

    pub fn comp_y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        let k = i * self.width + j;
        (self.x[k], self.y[k])
    }

    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        ensure_same_dims(self.dims(), other.dims())?;
        let dx: f64 = self.x.iter().zip(&other.x).map(|(a, b)| a * b).sum();
        let dy: f64 = self.y.iter().zip(&other.y).map(|(a, b)| a * b).sum();
        Ok(dx + dy)
    }

    pub fn norm(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Multiplies both components by a per-pixel weight.
    pub fn scaled_by(&self, weight: &ScalarField) -> Result<VectorField> {
        ensure_same_dims(self.dims(), weight.dims())?;
        let w = weight.values();
        Ok(Self::from_raw(
            self.height,
            self.width,
            self.x.iter().zip(w).map(|(a, b)| a * b).collect(),
            self.y.iter().zip(w).map(|(a, b)| a * b).collect(),
        ))
    }
}

/// Strictly positive weight field with its maximum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    field: ScalarField,
    max: f64,
}

impl WeightField {
    pub fn new(field: ScalarField) -> Result<Self> {
        if let Some((index, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, &v)| v <= 0.0)
        {
            return Err(ShapeError::NonPositiveWeight { index, value });
        }
        let max = field.max();
        Ok(Self { field, max })
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(ScalarField::filled(height, width, value)?)
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn dims(&self) -> (usize, usize) {
        self.field.dims()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.field.get(i, j)
    }
}

/// Binary shape indicator: `true` inside the shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(height, width)?;
        if bits.len() != height * width {
            return Err(ShapeError::LengthMismatch {
                expected: height * width,
                found: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Mask whose pixel `k` (row-major) is set iff bit `k` of `code` is set.
    pub fn from_code(height: usize, width: usize, code: u64) -> Result<Self> {
        let n = height * width;
        if n > 64 {
            return Err(ShapeError::InvalidParameter(format!(
                "cannot encode {n} pixels in a 64-bit code"
            )));
        }
        Self::new(height, width, (0..n).map(|k| code >> k & 1 == 1).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.width + j]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Number of pixels where the two masks differ.
    pub fn symmetric_difference(&self, other: &BinaryMask) -> Result<usize> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// The mask as a 0/1 scalar field.
    pub fn to_field(&self) -> ScalarField {
        ScalarField::from_raw(
            self.height,
            self.width,
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            ScalarField::new(0, 3, vec![]),
            Err(ShapeError::EmptyGrid { .. })
        ));
        assert!(matches!(
            ScalarField::new(2, 2, vec![0.0; 3]),
            Err(ShapeError::LengthMismatch { .. })
        ));
        assert!(matches!(
            ScalarField::new(1, 2, vec![0.0, f64::NAN]),
            Err(ShapeError::NonFinite { index: 1 })
        ));
        assert!(VectorField::new(1, 1, vec![f64::INFINITY], vec![0.0]).is_err());
    }

    #[test]
    fn weight_field_requires_positive_entries() {
        let f = ScalarField::new(1, 3, vec![1.0, 0.0, 2.0]).unwrap();
        assert!(matches!(
            WeightField::new(f),
            Err(ShapeError::NonPositiveWeight { index: 1, .. })
        ));
        let g = WeightField::new(ScalarField::new(1, 3, vec![1.0, 4.0, 2.0]).unwrap()).unwrap();
        assert_eq!(g.max(), 4.0);
    }

    #[test]
    fn mask_code_and_set_relations() {
        let a = BinaryMask::from_code(2, 2, 0b0101).unwrap();
        assert_eq!(a.bits(), &[true, false, true, false]);
        let b = BinaryMask::from_code(2, 2, 0b0111).unwrap();
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(a.symmetric_difference(&b).unwrap(), 1);
        assert_eq!(b.count(), 3);
    }
}
