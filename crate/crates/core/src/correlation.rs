//! Matching surfaces and their peak-to-deviation ratio.
//!
//! Every method returns a [`MatchingSurface`] whose peak is the best match,
//! so dissimilarity surfaces are stored negated.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_same_dims, Error, Result};
use crate::focusing::{focus_field, focus_image, FocusConfig};
use crate::image::Image;
use crate::spectral::{cross_correlate, cross_correlate_fields, signed_shift};
use crate::whitening::{orientation_operator, phase_operator};

/// Pixel cap for the direct sum-of-absolute-differences surface.
pub const SAD_MAX_PIXELS: usize = 64 * 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    CrossCorrelation,
    Ssd,
    Sad,
    Orientation,
    Phase,
    FocusedOrientation,
    FocusedPhase,
}

impl Method {
    /// The four methods compared in SNR series, unfocused first.
    pub const SERIES: [Method; 4] = [
        Method::Orientation,
        Method::Phase,
        Method::FocusedOrientation,
        Method::FocusedPhase,
    ];

    pub const FOCUSED: [Method; 2] = [Method::FocusedOrientation, Method::FocusedPhase];

    pub fn name(self) -> &'static str {
        match self {
            Method::CrossCorrelation => "s0",
            Method::Ssd => "ssd",
            Method::Sad => "sad",
            Method::Orientation => "orientation",
            Method::Phase => "phase",
            Method::FocusedOrientation => "focused_orientation",
            Method::FocusedPhase => "focused_phase",
        }
    }

    pub fn is_focused(self) -> bool {
        matches!(self, Method::FocusedOrientation | Method::FocusedPhase)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::CrossCorrelation,
            Method::Ssd,
            Method::Sad,
            Method::Orientation,
            Method::Phase,
            Method::FocusedOrientation,
            Method::FocusedPhase,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Which inputs the focusing blur is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FocusTarget {
    /// Only the first image, `corr(F f₁, g₁)`.
    #[default]
    First,
    Both,
}

/// Shift-indexed similarity surface with its peak and spread.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingSurface {
    pub surface: Image,
    pub peak_shift: (i64, i64),
    pub peak_value: f64,
    pub stdev: f64,
    pub method: Method,
}

impl MatchingSurface {
    /// Wraps a shift-indexed surface (index `(0, 0)` = zero shift).
    ///
    /// Ties on the peak value go to the smallest `‖s‖`, then to the smallest
    /// `(sx, sy)` lexicographically.
    pub fn from_surface(surface: Image, method: Method) -> Self {
        let (w, h) = surface.dims();
        let data = surface.data();
        let mut best = (f64::NEG_INFINITY, (0i64, 0i64));
        for (i, &v) in data.iter().enumerate() {
            let s = signed_shift(i % w, i / w, w, h);
            let better = v > best.0
                || (v == best.0 && {
                    let (n, m) = (s.0 * s.0 + s.1 * s.1, best.1 .0.pow(2) + best.1 .1.pow(2));
                    n < m || (n == m && s < best.1)
                });
            if better {
                best = (v, s);
            }
        }
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            peak_shift: best.1,
            peak_value: best.0,
            stdev: var.sqrt(),
            surface,
            method,
        }
    }

    pub fn snr(&self) -> Result<f64> {
        snr(self)
    }

    pub fn value_at(&self, sx: i64, sy: i64) -> f64 {
        let (w, h) = self.surface.dims();
        let (ix, iy) = crate::spectral::shift_index(sx, sy, w, h);
        self.surface.get(ix, iy)
    }
}

/// `max(S) / stdev(S)`, with the deviation taken over every surface value.
pub fn snr(s: &MatchingSurface) -> Result<f64> {
    let scale = s
        .surface
        .data()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(s.stdev > 1e-12 * scale) || s.stdev == 0.0 {
        return Err(Error::ConstantSurface);
    }
    Ok(s.peak_value / s.stdev)
}

pub fn surface_s0(f: &Image, g: &Image) -> Result<MatchingSurface> {
    Ok(MatchingSurface::from_surface(cross_correlate(f, g)?, Method::CrossCorrelation))
}

/// Circular SSD via `Σf² + Σg² − 2·S0`, stored negated.
pub fn surface_ssd(f: &Image, g: &Image) -> Result<MatchingSurface> {
    let s0 = cross_correlate(f, g)?;
    let konst: f64 = f.data().iter().chain(g.data()).map(|v| v * v).sum();
    let neg = s0.map(|v| 2.0 * v - konst);
    Ok(MatchingSurface::from_surface(neg, Method::Ssd))
}

/// Direct circular sum of absolute differences, stored negated. Capped at
/// [`SAD_MAX_PIXELS`] since the cost is quadratic in the pixel count.
pub fn surface_sad(f: &Image, g: &Image) -> Result<MatchingSurface> {
    ensure_same_dims(f.dims(), g.dims())?;
    let (w, h) = f.dims();
    if w * h > SAD_MAX_PIXELS {
        return Err(Error::TooLarge {
            pixels: w * h,
            cap: SAD_MAX_PIXELS,
        });
    }
    let surface = Image::from_fn(w, h, |sx, sy| {
        let mut acc = 0.0;
        for y in 0..h {
            let fy = (y + h - sy) % h;
            for x in 0..w {
                let fx = (x + w - sx) % w;
                acc += (f.get(fx, fy) - g.get(x, y)).abs();
            }
        }
        -acc
    });
    Ok(MatchingSurface::from_surface(surface, Method::Sad))
}

pub fn surface_orientation(f: &Image, g: &Image) -> Result<MatchingSurface> {
    ensure_same_dims(f.dims(), g.dims())?;
    let (a, b) = rayon::join(|| orientation_operator(f), || orientation_operator(g));
    let s = cross_correlate_fields(&a?, &b?)?;
    Ok(MatchingSurface::from_surface(s, Method::Orientation))
}

pub fn surface_phase(f: &Image, g: &Image) -> Result<MatchingSurface> {
    ensure_same_dims(f.dims(), g.dims())?;
    let (a, b) = rayon::join(|| phase_operator(f), || phase_operator(g));
    Ok(MatchingSurface::from_surface(cross_correlate(&a, &b)?, Method::Phase))
}

pub fn surface_focused_orientation(
    f: &Image,
    g: &Image,
    cfg: &FocusConfig,
) -> Result<MatchingSurface> {
    surface_focused_orientation_with(f, g, cfg, FocusTarget::First)
}

pub fn surface_focused_orientation_with(
    f: &Image,
    g: &Image,
    cfg: &FocusConfig,
    target: FocusTarget,
) -> Result<MatchingSurface> {
    ensure_same_dims(f.dims(), g.dims())?;
    let (a, b) = rayon::join(
        || orientation_operator(f).and_then(|o| focus_field(&o, cfg)),
        || {
            orientation_operator(g).and_then(|o| match target {
                FocusTarget::First => Ok(o),
                FocusTarget::Both => focus_field(&o, cfg),
            })
        },
    );
    let s = cross_correlate_fields(&a?, &b?)?;
    Ok(MatchingSurface::from_surface(s, Method::FocusedOrientation))
}

pub fn surface_focused_phase(f: &Image, g: &Image, cfg: &FocusConfig) -> Result<MatchingSurface> {
    surface_focused_phase_with(f, g, cfg, FocusTarget::First)
}

pub fn surface_focused_phase_with(
    f: &Image,
    g: &Image,
    cfg: &FocusConfig,
    target: FocusTarget,
) -> Result<MatchingSurface> {
    ensure_same_dims(f.dims(), g.dims())?;
    let (a, b) = rayon::join(
        || focus_image(&phase_operator(f), cfg),
        || {
            let p = phase_operator(g);
            match target {
                FocusTarget::First => Ok(p),
                FocusTarget::Both => focus_image(&p, cfg),
            }
        },
    );
    Ok(MatchingSurface::from_surface(cross_correlate(&a?, &b?)?, Method::FocusedPhase))
}

/// Runs `method` on the pair. Focused methods use `cfg`; the rest ignore it.
pub fn surface(method: Method, f: &Image, g: &Image, cfg: &FocusConfig) -> Result<MatchingSurface> {
    match method {
        Method::CrossCorrelation => surface_s0(f, g),
        Method::Ssd => surface_ssd(f, g),
        Method::Sad => surface_sad(f, g),
        Method::Orientation => surface_orientation(f, g),
        Method::Phase => surface_phase(f, g),
        Method::FocusedOrientation => surface_focused_orientation(f, g, cfg),
        Method::FocusedPhase => surface_focused_phase(f, g, cfg),
    }
}
