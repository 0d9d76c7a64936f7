//! A-contrario motion detection on a regularized field.
//!
//! Each pixel gets the mean `E_x` of the normalized field over a square
//! window. Under the no-motion hypothesis the window samples are treated as
//! independent with common mean `mu`, estimated by the image-wide mean of
//! `E_x`. Hoeffding's inequality bounds the tail `P[mean >= E_x]` by
//! `exp(-n H(E_x, mu))`, and a pixel is declared meaningful when
//! `N_tot` times that bound is at most `epsilon`, i.e. when
//! `H(E_x, mu) >= ln(N_tot / epsilon) / n`.
//!
//! The window samples of a TV-regularized field are not independent, so the
//! false-alarm guarantee is heuristic on such inputs.

use crate::error::{Result, ShapeError};
use crate::field::{BinaryMask, ScalarField};
use crate::level_set::{closest_level_set, level_candidates, LevelMatch};

/// Binary relative entropy `x ln(x/y) + (1-x) ln((1-x)/(1-y))`, for `x, y` in `(0, 1)`.
pub fn hoeffding_h(x: f64, y: f64) -> Result<f64> {
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if !inside(x) || !inside(y) {
        return Err(ShapeError::InvalidParameter(format!(
            "Hoeffding arguments must lie in (0, 1), got ({x}, {y})"
        )));
    }
    Ok(entropy_term(x, y))
}

fn entropy_term(x: f64, y: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    // x ln x -> 0 as x -> 0 or 1; the x = 1 end is used for saturated windows
    let a = if x > 0.0 { x * (x / y).ln() } else { 0.0 };
    let b = if x < 1.0 { (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln() } else { 0.0 };
    (a + b).max(0.0)
}

/// `ln(n_total / epsilon) / window`: the smallest `H(E_x, mu)` that is meaningful.
pub fn rejection_threshold(window: usize, n_total: usize, epsilon: f64) -> f64 {
    (n_total as f64 / epsilon).ln() / window as f64
}

/// Maps field values into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PsiMode {
    /// `t / max(field)`.
    #[default]
    MaxNormalized,
    /// `min(t / scale, 1)` for a fixed positive scale.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    /// Window half-width; the window is `(2 radius + 1)^2` pixels.
    pub radius: usize,
    pub epsilon: f64,
    pub psi: PsiMode,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            radius: 3,
            epsilon: 1.0,
            psi: PsiMode::MaxNormalized,
        }
    }
}

impl DetectionParams {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ShapeError::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let PsiMode::Fixed(s) = self.psi {
            if !(s.is_finite() && s > 0.0) {
                return Err(ShapeError::InvalidParameter(format!(
                    "psi scale must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub mask: BinaryMask,
    /// Window means `E_x`.
    pub stats: ScalarField,
    /// Pixel count of each (border-clipped) window, row-major.
    pub window_counts: Vec<usize>,
    /// Image-wide mean of `E_x`.
    pub mu_hat: f64,
}

/// Inclusive summed-area table with a zero guard row and column.
fn integral(h: usize, w: usize, v: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut s = vec![0.0; (h + 1) * (w + 1)];
    for i in 0..h {
        let mut row = 0.0;
        for j in 0..w {
            row += v(i * w + j);
            s[(i + 1) * (w + 1) + j + 1] = s[i * (w + 1) + j + 1] + row;
        }
    }
    s
}

/// Sum over the window clipped to the grid, and the clipped pixel count.
fn window_sum(s: &[f64], h: usize, w: usize, i: usize, j: usize, r: usize) -> (f64, usize) {
    let (i0, i1) = (i.saturating_sub(r), (i + r + 1).min(h));
    let (j0, j1) = (j.saturating_sub(r), (j + r + 1).min(w));
    let stride = w + 1;
    let sum = s[i1 * stride + j1] - s[i0 * stride + j1] - s[i1 * stride + j0] + s[i0 * stride + j0];
    (sum, (i1 - i0) * (j1 - j0))
}

fn psi_normalize(field: &ScalarField, psi: PsiMode) -> Result<Vec<f64>> {
    if let Some((index, &value)) = field.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(ShapeError::NegativeValue { index, value });
    }
    let scale = match psi {
        PsiMode::MaxNormalized => {
            let m = field.max();
            if m <= 0.0 {
                return Err(ShapeError::Degenerate(
                    "field is identically zero; cannot normalize".into(),
                ));
            }
            m
        }
        PsiMode::Fixed(s) => s,
    };
    Ok(field.values().iter().map(|v| (v / scale).min(1.0)).collect())
}

/// Window means `E_x` of the psi-normalized field, with window counts.
pub fn window_means(field: &ScalarField, params: &DetectionParams) -> Result<(ScalarField, Vec<usize>)> {
    params.validate()?;
    let psi = psi_normalize(field, params.psi)?;
    let (h, w) = field.dims();
    let s = integral(h, w, |k| psi[k]);
    let mut means = Vec::with_capacity(h * w);
    let mut counts = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let (sum, n) = window_sum(&s, h, w, i, j, params.radius);
            // window sums of values in [0, 1] can drift past 1 by rounding
            means.push((sum / n as f64).clamp(0.0, 1.0));
            counts.push(n);
        }
    }
    Ok((ScalarField::new(h, w, means)?, counts))
}

/// The decision rule with `mu` supplied by the caller: pixel `x` is
/// meaningful when `E_x > mu` and `H(E_x, mu) >= ln(N_tot / epsilon) / n_x`,
/// where `n_x` is the pixel count of its (clipped) window. A saturated
/// window (`E_x = 1`) is scored with the limit `H(1, mu) = -ln mu`.
pub fn decide(stats: &ScalarField, counts: &[usize], mu: f64, epsilon: f64) -> BinaryMask {
    let n_total = stats.len();
    let bits = stats
        .values()
        .iter()
        .zip(counts)
        .map(|(&e, &n)| {
            mu > 0.0
                && mu < 1.0
                && e > mu
                && entropy_term(e, mu) >= rejection_threshold(n, n_total, epsilon)
        })
        .collect();
    BinaryMask::new(stats.height(), stats.width(), bits).expect("dimensions from a valid field")
}

/// Runs the detector on a nonnegative field.
pub fn detect(field: &ScalarField, params: &DetectionParams) -> Result<Detection> {
    let (stats, window_counts) = window_means(field, params)?;
    let mu_hat = stats.sum() / stats.len() as f64;
    let mask = decide(&stats, &window_counts, mu_hat, params.epsilon);
    Ok(Detection {
        mask,
        stats,
        window_counts,
        mu_hat,
    })
}

/// Morphological erosion by a `(2 radius + 1)^2` square. Pixels outside the
/// grid count as background, so the border erodes too.
pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (h, w) = mask.dims();
    let bits = mask.bits();
    let s = integral(h, w, |k| if bits[k] { 1.0 } else { 0.0 });
    let full = (2 * radius + 1) * (2 * radius + 1);
    let out = (0..h * w)
        .map(|k| {
            let (sum, n) = window_sum(&s, h, w, k / w, k % w, radius);
            n == full && sum as usize == full
        })
        .collect();
    BinaryMask::new(h, w, out).expect("same dimensions")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectAndMatch {
    /// Detection eroded by half the window radius.
    pub detection: BinaryMask,
    pub mu_hat: f64,
    /// Level set of `u` closest to the eroded detection.
    pub matched: LevelMatch,
}

/// Detect on `field`, erode by `radius / 2`, then pick the level set of `u`
/// closest to the eroded mask among all its distinct strict level sets.
pub fn detect_and_match(
    field: &ScalarField,
    u: &ScalarField,
    params: &DetectionParams,
) -> Result<DetectAndMatch> {
    crate::field::ensure_same_dims(field.dims(), u.dims())?;
    let det = detect(field, params)?;
    let detection = erode(&det.mask, params.radius / 2);
    let matched = closest_level_set(u, &detection, &level_candidates(u))?;
    Ok(DetectAndMatch {
        detection,
        mu_hat: det.mu_hat,
        matched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hoeffding_values() {
        assert_eq!(hoeffding_h(0.5, 0.5).unwrap(), 0.0);
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert_abs_diff_eq!(hoeffding_h(0.9, 0.5).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(hoeffding_h(0.9, 0.5).unwrap(), 0.368064, epsilon = 1e-6);
        for bad in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (-0.1, 0.5)] {
            assert!(hoeffding_h(bad.0, bad.1).is_err());
        }
    }

    #[test]
    fn hoeffding_increases_above_y() {
        for &y in &[0.1, 0.3, 0.5, 0.8] {
            let xs: Vec<f64> = (1..100).map(|k| y + (1.0 - y) * k as f64 / 100.0).collect();
            for pair in xs.windows(2) {
                assert!(hoeffding_h(pair[1], y).unwrap() > hoeffding_h(pair[0], y).unwrap());
            }
        }
    }

    #[test]
    fn saturated_limit_is_continuous() {
        let mu: f64 = 0.3;
        assert_abs_diff_eq!(entropy_term(1.0, mu), -mu.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(entropy_term(1.0 - 1e-12, mu), -mu.ln(), epsilon = 1e-9);
    }

    #[test]
    fn threshold_value() {
        let t = rejection_threshold(49, 65536, 1.0);
        assert_abs_diff_eq!(t, 16.0 * 2f64.ln() / 49.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t, 0.226334, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_and_negative_fields() {
        let p = DetectionParams::default();
        assert!(matches!(
            detect(&ScalarField::zeros(5, 5).unwrap(), &p),
            Err(ShapeError::Degenerate(_))
        ));
        assert!(detect(&ScalarField::filled(5, 5, -1.0).unwrap(), &p).is_err());
        let bad = DetectionParams { epsilon: 0.0, ..p };
        assert!(detect(&ScalarField::filled(5, 5, 1.0).unwrap(), &bad).is_err());
    }

    #[test]
    fn constant_field_detects_nothing() {
        let d = detect(&ScalarField::filled(12, 12, 4.0).unwrap(), &DetectionParams::default()).unwrap();
        assert_eq!(d.mask.count(), 0);
    }

    #[test]
    fn window_means_clip_at_borders() {
        let f = ScalarField::from_fn(4, 4, |i, j| if (i, j) == (0, 0) { 1.0 } else { 0.0 }).unwrap();
        let p = DetectionParams { radius: 1, ..Default::default() };
        let (m, c) = window_means(&f, &p).unwrap();
        assert_eq!(c[0], 4);
        assert_eq!(c[5], 9);
        assert_abs_diff_eq!(m.get(0, 0), 0.25);
        assert_abs_diff_eq!(m.get(1, 1), 1.0 / 9.0);
        assert_eq!(m.get(3, 3), 0.0);
    }

    #[test]
    fn bright_square_is_detected() {
        let f = ScalarField::from_fn(48, 48, |i, j| {
            if (16..32).contains(&i) && (16..32).contains(&j) { 1.0 } else { 0.05 }
        })
        .unwrap();
        let d = detect(&f, &DetectionParams::default()).unwrap();
        assert!(d.mask.get(24, 24));
        assert!(!d.mask.get(2, 2));
    }

    #[test]
    fn erosion_examples() {
        let full = BinaryMask::filled(5, 6, true).unwrap();
        assert_eq!(erode(&full, 0), full);
        let e = erode(&full, 1);
        for i in 0..5 {
            for j in 0..6 {
                assert_eq!(e.get(i, j), i > 0 && i < 4 && j > 0 && j < 5);
            }
        }
    }

    #[test]
    fn erosion_matches_window_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for r in 0..3usize {
            let m = BinaryMask::new(9, 11, (0..99).map(|_| rng.gen_bool(0.8)).collect()).unwrap();
            let e = erode(&m, r);
            for i in 0..9isize {
                for j in 0..11isize {
                    let mut all = true;
                    for di in -(r as isize)..=r as isize {
                        for dj in -(r as isize)..=r as isize {
                            let (a, b) = (i + di, j + dj);
                            all &= a >= 0 && b >= 0 && a < 9 && b < 11 && m.get(a as usize, b as usize);
                        }
                    }
                    assert_eq!(e.get(i as usize, j as usize), all);
                }
            }
            assert!(e.is_subset_of(&m));
        }
    }

    #[test]
    fn plateau_is_recovered_as_level_set() {
        let u = ScalarField::from_fn(40, 40, |i, j| {
            if (12..28).contains(&i) && (10..26).contains(&j) { 2.0 } else { 0.2 }
        })
        .unwrap();
        let r = detect_and_match(&u, &u, &DetectionParams::default()).unwrap();
        let plateau = crate::level_set::threshold(&u, 1.0, true);
        assert_eq!(r.matched.mask, plateau);
        assert!(r.matched.level > 0.2 && r.matched.level < 2.0);
    }

    #[test]
    fn empty_detection_matches_empty_level() {
        let u = ScalarField::from_fn(10, 10, |i, j| (i * 10 + j) as f64).unwrap();
        let flat = ScalarField::filled(10, 10, 3.0).unwrap();
        let r = detect_and_match(&flat, &u, &DetectionParams::default()).unwrap();
        assert_eq!(r.detection.count(), 0);
        assert_eq!(r.matched.distance, 0);
        assert_eq!(r.matched.mask.count(), 0);
        assert!(r.matched.level > u.max());
    }

    proptest! {
        #[test]
        fn decision_monotone_in_stats(seed in any::<u64>(), bump in 0.0f64..0.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats = ScalarField::from_fn(8, 8, |_, _| rng.gen_range(0.0..0.7)).unwrap();
            let counts = vec![9usize; 64];
            let raised = stats.map(|v| (v + bump).min(0.999)).unwrap();
            let mu = 0.35;
            let a = decide(&stats, &counts, mu, 1.0);
            let b = decide(&raised, &counts, mu, 1.0);
            prop_assert!(a.is_subset_of(&b));
        }

        #[test]
        fn erosion_is_subset(seed in any::<u64>(), r in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = BinaryMask::new(10, 10, (0..100).map(|_| rng.gen_bool(0.7)).collect()).unwrap();
            prop_assert!(erode(&m, r).is_subset_of(&m));
        }
    }
}
