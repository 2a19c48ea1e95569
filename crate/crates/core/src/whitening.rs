//! Whitening operators applied to each image before correlation.
//!
//! * [`orientation_operator`]: unit gradient direction per pixel.
//! * [`phase_operator`]: keeps the Fourier phase, discards the magnitude.
//! * [`normalized_operator`]: local standardization in a sliding window.
//!
//! Featureless pixels (zero gradient, zero window variance) map to zero so
//! they carry no weight in the correlation.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::spectral::{dft2, idft2, periodic_smooth_decompose};

/// Fraction of the image's value range below which a gradient or a window
/// deviation counts as zero.
pub const FLAT_EPSILON: f64 = 1e-8;

/// Per-pixel 2-vectors. Produced by [`orientation_operator`] with every vector
/// of length 1 or exactly 0; focusing relaxes that to `‖v‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    data: Vec<[f64; 2]>,
}

impl GradientField {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 2]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Assembles a field from its x and y channel images.
    pub fn from_channels(x: &Image, y: &Image) -> Result<Self> {
        crate::error::ensure_same_dims(x.dims(), y.dims())?;
        let data = x.data().iter().zip(y.data()).map(|(&a, &b)| [a, b]).collect();
        Self::new(x.width(), x.height(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[[f64; 2]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.data[y * self.width + x]
    }

    /// Channel 0 (x components) or 1 (y components) as an image.
    pub fn channel(&self, c: usize) -> Image {
        assert!(c < 2, "gradient fields have two channels");
        Image::from_raw(self.width, self.height, self.data.iter().map(|v| v[c]).collect())
    }

    pub fn roll(&self, dx: i64, dy: i64) -> GradientField {
        let (x, y) = (self.channel(0).roll(dx, dy), self.channel(1).roll(dx, dy));
        GradientField::from_channels(&x, &y).expect("same dims")
    }
}

/// `∇f / ‖∇f‖` per pixel, central differences inside and one-sided at the borders.
pub fn orientation_operator(img: &Image) -> Result<GradientField> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let (lo, hi) = img.range();
    let eps = FLAT_EPSILON * (hi - lo);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = match x {
                0 => img.get(1, y) - img.get(0, y),
                _ if x == w - 1 => img.get(x, y) - img.get(x - 1, y),
                _ => 0.5 * (img.get(x + 1, y) - img.get(x - 1, y)),
            };
            let gy = match y {
                0 => img.get(x, 1) - img.get(x, 0),
                _ if y == h - 1 => img.get(x, y) - img.get(x, y - 1),
                _ => 0.5 * (img.get(x, y + 1) - img.get(x, y - 1)),
            };
            let norm = gx.hypot(gy);
            if eps > 0.0 && norm >= eps {
                data.push([gx / norm, gy / norm]);
            } else {
                data.push([0.0, 0.0]);
            }
        }
    }
    GradientField::new(w, h, data)
}

/// Border handling applied before the phase operator's Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderTreatment {
    /// Use the periodic component of the periodic-plus-smooth decomposition.
    #[default]
    PeriodicSmooth,
    /// Transform the image as is (exactly shift-equivariant under circular shifts).
    Circular,
}

/// Phase-only whitening with the default periodic-smooth border treatment.
pub fn phase_operator(img: &Image) -> Image {
    phase_operator_with(img, BorderTreatment::PeriodicSmooth)
}

/// Spatial image whose spectrum is `F(f) / |F(f)|`, zero where `|F(f)|` vanishes.
///
/// The result has unit energy when no bin vanishes: `Σ p² = (1/N) Σ |P|² = 1`.
pub fn phase_operator_with(img: &Image, border: BorderTreatment) -> Image {
    let source = match border {
        BorderTreatment::PeriodicSmooth => periodic_smooth_decompose(img).0,
        BorderTreatment::Circular => img.clone(),
    };
    let mut spec = dft2(&source);
    let peak = spec.data().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let cutoff = 1e-10 * peak;
    for c in spec.data_mut() {
        let mag = c.norm();
        *c = if mag > cutoff && mag > 0.0 {
            *c / mag
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    idft2(&spec).expect("unit-modulus spectrum of a real image stays conjugate symmetric")
}

/// `(f - m(f, x, n)) / σ(f, x, n)` over an `n x n` window centred at each pixel,
/// truncated at the image borders.
pub fn normalized_operator(img: &Image, n: usize) -> Result<Image> {
    let (w, h) = img.dims();
    if n < 3 || n % 2 == 0 || n > w.min(h) {
        return Err(Error::invalid(format!(
            "window side must be odd and in [3, {}], got {n}",
            w.min(h)
        )));
    }
    let (lo, hi) = img.range();
    let eps = FLAT_EPSILON * (hi - lo);
    // Integral images of the mean-centred values keep the variance well conditioned.
    let mean = img.mean();
    let (iw, ih) = (w + 1, h + 1);
    let mut s1 = vec![0.0; iw * ih];
    let mut s2 = vec![0.0; iw * ih];
    for y in 0..h {
        let (mut r1, mut r2) = (0.0, 0.0);
        for x in 0..w {
            let v = img.get(x, y) - mean;
            r1 += v;
            r2 += v * v;
            s1[(y + 1) * iw + x + 1] = s1[y * iw + x + 1] + r1;
            s2[(y + 1) * iw + x + 1] = s2[y * iw + x + 1] + r2;
        }
    }
    let box_sum = |s: &[f64], x0: usize, y0: usize, x1: usize, y1: usize| {
        s[y1 * iw + x1] - s[y0 * iw + x1] - s[y1 * iw + x0] + s[y0 * iw + x0]
    };
    let r = n / 2;
    Ok(Image::from_fn(w, h, |x, y| {
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let count = ((x1 - x0) * (y1 - y0)) as f64;
        let m = box_sum(&s1, x0, y0, x1, y1) / count;
        let var = (box_sum(&s2, x0, y0, x1, y1) / count - m * m).max(0.0);
        let sigma = var.sqrt();
        if eps > 0.0 && sigma >= eps {
            (img.get(x, y) - mean - m) / sigma
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{cross_correlate, cross_correlate_fields};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random::<f64>())
    }

    fn random_unit_field(w: usize, h: usize, seed: u64) -> GradientField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h)
            .map(|_| {
                let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                [a.cos(), a.sin()]
            })
            .collect();
        GradientField::new(w, h, data).unwrap()
    }

    #[test]
    fn constant_image_gives_zero_field() {
        let f = orientation_operator(&Image::filled(6, 5, 0.3)).unwrap();
        assert!(f.data().iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn ramp_gives_unit_x() {
        let f = orientation_operator(&Image::from_fn(8, 6, |x, _| x as f64 * 0.1)).unwrap();
        for y in 0..6 {
            for x in 0..8 {
                let v = f.get(x, y);
                assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_small_rejected() {
        assert!(matches!(
            orientation_operator(&Image::zeros(2, 8)),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn orientation_matches_naive_oracle() {
        let img = random_image(8, 8, 9);
        let field = orientation_operator(&img).unwrap();
        let (lo, hi) = img.range();
        for y in 0..8usize {
            for x in 0..8usize {
                let at = |x: usize, y: usize| img.get(x, y);
                let gx = if x == 0 {
                    at(1, y) - at(0, y)
                } else if x == 7 {
                    at(7, y) - at(6, y)
                } else {
                    (at(x + 1, y) - at(x - 1, y)) / 2.0
                };
                let gy = if y == 0 {
                    at(x, 1) - at(x, 0)
                } else if y == 7 {
                    at(x, 7) - at(x, 6)
                } else {
                    (at(x, y + 1) - at(x, y - 1)) / 2.0
                };
                let n = (gx * gx + gy * gy).sqrt();
                let expect = if n >= 1e-8 * (hi - lo) { [gx / n, gy / n] } else { [0.0, 0.0] };
                let got = field.get(x, y);
                assert!((got[0] - expect[0]).abs() < 1e-15 && (got[1] - expect[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orientation_norms_are_zero_or_one() {
        let mut img = random_image(20, 20, 2);
        for x in 0..20 {
            for y in 0..6 {
                img.set(x, y, 0.5);
            }
        }
        let field = orientation_operator(&img).unwrap();
        let mut zeros = 0;
        for v in field.data() {
            let n = v[0].hypot(v[1]);
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
            zeros += (n == 0.0) as usize;
        }
        assert!(zeros > 0);
    }

    #[test]
    fn orientation_is_shift_equivariant_inside() {
        let img = random_image(24, 20, 4);
        let (dx, dy) = (3i64, -2i64);
        let a = orientation_operator(&img.roll(dx, dy)).unwrap();
        let b = orientation_operator(&img).unwrap().roll(dx, dy);
        // Rows/columns touching either the frame border or the wrap seam are exempt.
        for y in 2..17usize {
            for x in 5..22usize {
                assert_eq!(a.get(x, y), b.get(x, y), "at {x},{y}");
            }
        }
    }

    #[test]
    fn phase_impulse_fixed_point() {
        let imp = Image::impulse(9, 8, 0, 0);
        let out = phase_operator_with(&imp, BorderTreatment::Circular);
        for (a, b) in out.data().iter().zip(imp.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_commutes_with_circular_shift() {
        let img = random_image(16, 12, 6);
        let a = phase_operator_with(&img.roll(4, -5), BorderTreatment::Circular);
        let b = phase_operator_with(&img, BorderTreatment::Circular).roll(4, -5);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_self_correlation_is_delta() {
        let img = random_image(32, 32, 12);
        let p = phase_operator(&img);
        let s = cross_correlate(&p, &p).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-9);
        let off = s.data()[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(off < 0.2, "off-peak max {off}");
    }

    #[test]
    fn phase_output_has_flat_spectrum() {
        for border in [BorderTreatment::PeriodicSmooth, BorderTreatment::Circular] {
            let p = phase_operator_with(&random_image(15, 10, 3), border);
            for c in dft2(&p).data() {
                let m = c.norm();
                assert!(m < 1e-8 || (m - 1.0).abs() < 1e-8, "{m}");
            }
        }
    }

    #[test]
    fn phase_of_constant_is_dc_only() {
        let p = phase_operator(&Image::filled(8, 8, 0.4));
        for v in p.data() {
            assert!((v - 1.0 / 64.0).abs() < 1e-12);
        }
    }

    /// Sample autocorrelation at lag `(lag, 0)`, normalised by lag 0.
    fn autocorr(img: &Image, lag: usize) -> f64 {
        let m = img.mean();
        let (w, h) = img.dims();
        let (mut num, mut den) = (0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let a = img.get(x, y) - m;
                den += a * a;
                if x + lag < w {
                    num += a * (img.get(x + lag, y) - m);
                }
            }
        }
        num / den
    }

    #[test]
    fn whitening_decorrelates_smooth_texture() {
        // A smoothed noise texture is strongly autocorrelated; its phase image is not.
        let raw = random_image(64, 64, 77);
        let smooth = Image::from_fn(64, 64, |x, y| {
            let mut acc = 0.0;
            for dy in 0..4 {
                for dx in 0..4 {
                    acc += raw.get((x + dx) % 64, (y + dy) % 64);
                }
            }
            acc / 16.0
        });
        assert!(autocorr(&smooth, 1) > 0.5);
        assert!(autocorr(&phase_operator(&smooth), 1).abs() < 0.1);
    }

    fn window_stats(img: &Image, x: usize, y: usize, n: usize) -> (f64, f64) {
        let r = n / 2;
        let mut vals = Vec::new();
        for yy in y.saturating_sub(r)..(y + r + 1).min(img.height()) {
            for xx in x.saturating_sub(r)..(x + r + 1).min(img.width()) {
                vals.push(img.get(xx, yy));
            }
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / vals.len() as f64;
        (m, v.sqrt())
    }

    #[test]
    fn normalized_constant_is_zero() {
        let out = normalized_operator(&Image::filled(7, 7, 0.9), 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalized_checkerboard_matches_oracle() {
        let img = Image::from_fn(9, 9, |x, y| ((x + y) % 2) as f64);
        let out = normalized_operator(&img, 3).unwrap();
        for y in 0..9 {
            for x in 0..9 {
                let (m, s) = window_stats(&img, x, y, 3);
                let expect = if s >= 1e-8 { (img.get(x, y) - m) / s } else { 0.0 };
                assert!((out.get(x, y) - expect).abs() < 1e-12, "at {x},{y}");
            }
        }
    }

    #[test]
    fn normalized_output_is_standardized() {
        // Each output pixel is the z-score of its own window; averaging those
        // z-scores over an interior window stays close to 0 with spread near 1.
        let img = random_image(40, 40, 31);
        let out = normalized_operator(&img, 5).unwrap();
        let (mut sum, mut sq, mut count) = (0.0, 0.0, 0.0);
        for y in 2..38 {
            for x in 2..38 {
                let v = out.get(x, y);
                sum += v;
                sq += v * v;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let std = (sq / count - mean * mean).sqrt();
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((std - 1.0).abs() < 0.1, "std {std}");
    }

    #[test]
    fn normalized_rejects_bad_window() {
        let img = random_image(10, 10, 1);
        for n in [1, 2, 4, 11] {
            assert!(normalized_operator(&img, n).is_err(), "n = {n}");
        }
    }

    #[test]
    fn field_correlation_degenerate_channel() {
        let a = random_image(8, 8, 1);
        let b = random_image(8, 8, 2);
        let z = Image::zeros(8, 8);
        let fa = GradientField::from_channels(&a, &z).unwrap();
        let fb = GradientField::from_channels(&b, &z).unwrap();
        let s = cross_correlate_fields(&fa, &fb).unwrap();
        let t = cross_correlate(&a, &b).unwrap();
        for (x, y) in s.data().iter().zip(t.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn field_self_match_peak_is_pixel_count() {
        let f = GradientField::new(12, 10, vec![[0.6, 0.8]; 120]).unwrap();
        let s = cross_correlate_fields(&f, &f).unwrap();
        assert!((s.get(0, 0) - 120.0).abs() < 1e-9);
    }

    #[test]
    fn field_correlation_matches_scalar_product_oracle() {
        let a = random_unit_field(8, 8, 5);
        let b = random_unit_field(8, 8, 6);
        let fast = cross_correlate_fields(&a, &b).unwrap();
        for sy in 0..8i64 {
            for sx in 0..8i64 {
                let mut acc = 0.0;
                for y in 0..8i64 {
                    for x in 0..8i64 {
                        let u = a.get((x - sx).rem_euclid(8) as usize, (y - sy).rem_euclid(8) as usize);
                        let v = b.get(x as usize, y as usize);
                        acc += u[0] * v[0] + u[1] * v[1];
                    }
                }
                let got = fast.get(sx as usize, sy as usize);
                assert!((got - acc).abs() <= 1e-8 * acc.abs().max(1.0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn phase_shift_equivariance(dx in -8i64..8, dy in -8i64..8, seed in 0u64..1000) {
            let img = random_image(12, 10, seed);
            let a = phase_operator_with(&img.roll(dx, dy), BorderTreatment::Circular);
            let b = phase_operator_with(&img, BorderTreatment::Circular).roll(dx, dy);
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
