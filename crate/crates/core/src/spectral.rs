//! 2D DFT, periodic-plus-smooth border treatment, and FFT cross-correlation.
//!
//! Forward transforms are unnormalized, `F(k) = Σ_x f(x) e^{-2πi k·x / n}`;
//! the inverse carries the `1/N` factor. Correlation surfaces are circular and
//! indexed by shift: element `(sx mod W, sy mod H)` holds `S(s)`, so index
//! `(0, 0)` is zero shift. [`signed_shift`] maps an index back to
//! `[-W/2, W/2) x [-H/2, H/2)`.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{ensure_same_dims, Error, Result};
use crate::image::Image;
use crate::whitening::GradientField;

/// Imaginary residue (relative to the largest real magnitude) tolerated by [`idft2`].
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// Complex grid produced by [`dft2`], same shape as the originating image.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
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

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, kx: usize, ky: usize) -> Complex64 {
        self.data[ky * self.width + kx]
    }
}

fn fft2_in_place(data: &mut [Complex64], width: usize, height: usize, direction: FftDirection) {
    if width == 0 || height == 0 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(width, direction);
    row_fft.process(data);

    let col_fft = planner.plan_fft(height, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    let mut scratch = vec![Complex64::new(0.0, 0.0); col_fft.get_inplace_scratch_len()];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * width + x];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for (y, c) in column.iter().enumerate() {
            data[y * width + x] = *c;
        }
    }
}

pub fn dft2(img: &Image) -> Spectrum {
    let mut data: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut data, img.width(), img.height(), FftDirection::Forward);
    Spectrum {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Inverse DFT keeping the complex result.
pub fn idft2_complex(spec: &Spectrum) -> Vec<Complex64> {
    let mut data = spec.data.clone();
    fft2_in_place(&mut data, spec.width, spec.height, FftDirection::Inverse);
    let scale = 1.0 / (spec.width * spec.height) as f64;
    for v in &mut data {
        *v *= scale;
    }
    data
}

/// Inverse DFT of a spectrum that must describe a real image.
///
/// Fails with [`Error::ImaginaryResidue`] when the largest imaginary component
/// exceeds [`IMAGINARY_TOLERANCE`] times the largest real magnitude (or 1).
pub fn idft2(spec: &Spectrum) -> Result<Image> {
    let data = idft2_complex(spec);
    let re_max = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    let im_max = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if !(im_max <= IMAGINARY_TOLERANCE * re_max.max(1.0)) {
        return Err(Error::ImaginaryResidue { residue: im_max });
    }
    Image::new(spec.width, spec.height, data.into_iter().map(|c| c.re).collect())
}

/// Periodic-plus-smooth decomposition of `img`: `img = periodic + smooth`.
///
/// `smooth` is the zero-mean solution of the discrete Poisson problem whose
/// source is the wrap-around boundary jump of `img`; removing it leaves a
/// `periodic` component whose opposite borders match.
pub fn periodic_smooth_decompose(img: &Image) -> (Image, Image) {
    let (w, h) = img.dims();
    let mut boundary = vec![0.0; w * h];
    for x in 0..w {
        let jump = img.get(x, h - 1) - img.get(x, 0);
        boundary[x] += jump;
        boundary[(h - 1) * w + x] -= jump;
    }
    for y in 0..h {
        let jump = img.get(w - 1, y) - img.get(0, y);
        boundary[y * w] += jump;
        boundary[y * w + w - 1] -= jump;
    }
    let mut spec = dft2(&Image::from_raw(w, h, boundary));
    let two_pi = 2.0 * std::f64::consts::PI;
    for ky in 0..h {
        let cy = (two_pi * ky as f64 / h as f64).cos();
        for kx in 0..w {
            let idx = ky * w + kx;
            if kx == 0 && ky == 0 {
                spec.data[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let cx = (two_pi * kx as f64 / w as f64).cos();
            let denom = 2.0 * cx + 2.0 * cy - 4.0;
            spec.data[idx] /= denom;
        }
    }
    let smooth: Vec<f64> = idft2_complex(&spec).into_iter().map(|c| c.re).collect();
    let periodic: Vec<f64> = img.data().iter().zip(&smooth).map(|(u, s)| u - s).collect();
    (Image::from_raw(w, h, periodic), Image::from_raw(w, h, smooth))
}

/// Maps a surface index to a signed shift in `[-n/2, n/2)`.
#[inline]
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Signed shift of surface element `(ix, iy)`.
#[inline]
pub fn signed_shift(ix: usize, iy: usize, width: usize, height: usize) -> (i64, i64) {
    (signed_index(ix, width), signed_index(iy, height))
}

/// Surface element holding shift `s`.
#[inline]
pub fn shift_index(sx: i64, sy: i64, width: usize, height: usize) -> (usize, usize) {
    (
        sx.rem_euclid(width as i64) as usize,
        sy.rem_euclid(height as i64) as usize,
    )
}

fn correlate_spectra(a: &Spectrum, b: &Spectrum) -> Vec<Complex64> {
    a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).collect()
}

fn real_part(w: usize, h: usize, data: Vec<Complex64>) -> Image {
    Image::from_raw(w, h, data.into_iter().map(|c| c.re).collect())
}

/// Circular cross-correlation `S0(s) = Σ_x a(x - s) b(x)`.
pub fn cross_correlate(a: &Image, b: &Image) -> Result<Image> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    let (fa, fb) = rayon::join(|| dft2(a), || dft2(b));
    let prod = Spectrum {
        width: w,
        height: h,
        data: correlate_spectra(&fa, &fb),
    };
    Ok(real_part(w, h, idft2_complex(&prod)))
}

/// Zero-padded (linear) cross-correlation: both inputs are embedded in a
/// `2W x 2H` zero canvas before correlating, so no shift wraps into another.
/// The result is `2W x 2H` with the same index convention as [`cross_correlate`].
pub fn cross_correlate_linear(a: &Image, b: &Image) -> Result<Image> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    let pad = |img: &Image| {
        let mut out = Image::zeros(2 * w, 2 * h);
        for y in 0..h {
            for x in 0..w {
                out.data_mut()[y * 2 * w + x] = img.get(x, y);
            }
        }
        out
    };
    cross_correlate(&pad(a), &pad(b))
}

/// Sum of per-channel circular cross-correlations: `S(s) = Σ_x a(x - s) · b(x)`.
pub fn cross_correlate_fields(a: &GradientField, b: &GradientField) -> Result<Image> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    let (sx, sy) = rayon::join(
        || cross_correlate(&a.channel(0), &b.channel(0)),
        || cross_correlate(&a.channel(1), &b.channel(1)),
    );
    let (sx, sy) = (sx?, sy?);
    Ok(Image::from_raw(
        w,
        h,
        sx.data().iter().zip(sy.data()).map(|(p, q)| p + q).collect(),
    ))
}
