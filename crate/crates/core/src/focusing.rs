//! Spatially varying Gaussian blur ("focusing").
//!
//! Each output pixel `x` is the input blurred with a Gaussian of standard
//! deviation `σ(x) = min(ε·‖x − p*‖, σ_max)`: sharp at the focus point `p*`,
//! progressively smoother away from it. The continuous operator is realized
//! with a stack of global blurs at `levels` uniformly spaced σ values in
//! `[0, σ_max]`, linearly interpolated per pixel between the two levels that
//! bracket `σ(x)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::whitening::GradientField;

/// Blur growth rate used when nothing else is specified.
pub const DEFAULT_EPSILON: f64 = 0.06;
pub const DEFAULT_LEVELS: usize = 16;
/// Gaussian kernels are truncated at this many standard deviations.
pub const TRUNCATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FocusConfig {
    pub epsilon: f64,
    /// Focus point `p*` in pixels; `None` means the image centre.
    pub focus: Option<[f64; 2]>,
    pub levels: usize,
    /// Cap on σ in pixels; `None` means `ε · diagonal / 2`.
    pub sigma_max: Option<f64>,
}

impl Default for FocusConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            focus: None,
            levels: DEFAULT_LEVELS,
            sigma_max: None,
        }
    }
}

impl FocusConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.levels < 2 {
            return Err(Error::invalid(format!("levels must be >= 2, got {}", self.levels)));
        }
        if let Some(s) = self.sigma_max {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("sigma_max must be > 0, got {s}")));
            }
        }
        Ok(())
    }

    /// Fills in the image-dependent defaults for a `width x height` image.
    pub fn resolve(&self, width: usize, height: usize) -> Result<ResolvedFocus> {
        self.validate()?;
        let focus = self
            .focus
            .unwrap_or([(width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0]);
        if !(focus[0] >= 0.0
            && focus[1] >= 0.0
            && focus[0] <= width as f64 - 1.0
            && focus[1] <= height as f64 - 1.0)
        {
            return Err(Error::invalid(format!(
                "focus {focus:?} outside {width}x{height} image"
            )));
        }
        let diagonal = ((width * width + height * height) as f64).sqrt();
        let sigma_max = self.sigma_max.unwrap_or(self.epsilon * diagonal / 2.0);
        Ok(ResolvedFocus {
            epsilon: self.epsilon,
            focus,
            levels: self.levels,
            sigma_max,
        })
    }
}

/// A [`FocusConfig`] with all defaults bound to a concrete image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedFocus {
    pub epsilon: f64,
    pub focus: [f64; 2],
    pub levels: usize,
    pub sigma_max: f64,
}

impl ResolvedFocus {
    pub fn sigma_at(&self, x: f64, y: f64) -> f64 {
        sigma_at([x, y], self)
    }

    fn level_spacing(&self) -> f64 {
        self.sigma_max / (self.levels - 1) as f64
    }
}

/// `min(ε · ‖x − p*‖, σ_max)`.
pub fn sigma_at(pos: [f64; 2], cfg: &ResolvedFocus) -> f64 {
    if cfg.epsilon == 0.0 {
        return 0.0;
    }
    let d = (pos[0] - cfg.focus[0]).hypot(pos[1] - cfg.focus[1]);
    (cfg.epsilon * d).min(cfg.sigma_max)
}

/// Normalized 1D Gaussian taps for `[-r, r]`, `r = ceil(4σ)`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (TRUNCATION * sigma).ceil() as usize;
    let inv = -0.5 / (sigma * sigma);
    (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (d * d * inv).exp()
        })
        .collect()
}

/// Global Gaussian blur, separable, truncated at 4σ and renormalized over the
/// in-bounds part of the kernel (so constants are preserved up to the borders).
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let (w, h) = img.dims();
    let taps = gaussian_taps(sigma);
    let r = taps.len() / 2;
    let src = img.data();

    // Horizontal pass.
    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let line = &src[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let (mut acc, mut norm) = (0.0, 0.0);
            for (xx, v) in line.iter().enumerate().take(hi + 1).skip(lo) {
                let t = taps[xx + r - x];
                acc += t * v;
                norm += t;
            }
            *out = acc / norm;
        }
    });

    // Vertical pass, one output row at a time.
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        let mut norm = 0.0;
        for yy in lo..=hi {
            let t = taps[yy + r - y];
            norm += t;
            let line = &tmp[yy * w..(yy + 1) * w];
            for (o, v) in row.iter_mut().zip(line) {
                *o += t * v;
            }
        }
        let inv = 1.0 / norm;
        for o in row.iter_mut() {
            *o *= inv;
        }
    });
    Image::from_raw(w, h, out)
}

/// Per-pixel blur stack lookup shared by images and fields.
struct BlurPlan {
    spacing: f64,
    /// Highest level index any pixel needs.
    top: usize,
    /// Per pixel: (lower level, weight of the upper level); `None` = σ is zero.
    lookup: Vec<Option<(usize, f64)>>,
}

impl BlurPlan {
    fn new(width: usize, height: usize, cfg: &ResolvedFocus) -> Self {
        let spacing = cfg.level_spacing();
        let mut top = 0;
        let mut lookup = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let sigma = cfg.sigma_at(x as f64, y as f64);
                if sigma <= 0.0 {
                    lookup.push(None);
                    continue;
                }
                let t = sigma / spacing;
                let k = (t.floor() as usize).min(cfg.levels - 2);
                let frac = (t - k as f64).clamp(0.0, 1.0);
                top = top.max(if frac > 0.0 { k + 1 } else { k });
                lookup.push(Some((k, frac)));
            }
        }
        Self {
            spacing,
            top,
            lookup,
        }
    }

    fn apply(&self, img: &Image) -> Image {
        let stack: Vec<Image> = (0..=self.top)
            .into_par_iter()
            .map(|k| gaussian_blur(img, k as f64 * self.spacing))
            .collect();
        let data = self
            .lookup
            .iter()
            .enumerate()
            .map(|(i, entry)| match *entry {
                None => img.data()[i],
                Some((k, frac)) => {
                    let lo = stack[k].data()[i];
                    if frac == 0.0 {
                        lo
                    } else {
                        (1.0 - frac) * lo + frac * stack[k + 1].data()[i]
                    }
                }
            })
            .collect();
        Image::from_raw(img.width(), img.height(), data)
    }
}

/// Focuses a scalar image. `ε = 0` returns the input unchanged.
pub fn focus_image(img: &Image, cfg: &FocusConfig) -> Result<Image> {
    let resolved = cfg.resolve(img.width(), img.height())?;
    if resolved.epsilon == 0.0 {
        return Ok(img.clone());
    }
    Ok(BlurPlan::new(img.width(), img.height(), &resolved).apply(img))
}

/// Focuses each channel of a vector field independently. Vectors are not
/// re-normalized, so disagreeing orientations shorten after blurring.
pub fn focus_field(field: &GradientField, cfg: &FocusConfig) -> Result<GradientField> {
    let (w, h) = field.dims();
    let resolved = cfg.resolve(w, h)?;
    if resolved.epsilon == 0.0 {
        return Ok(field.clone());
    }
    let plan = BlurPlan::new(w, h, &resolved);
    let (x, y) = rayon::join(|| plan.apply(&field.channel(0)), || plan.apply(&field.channel(1)));
    GradientField::from_channels(&x, &y)
}
