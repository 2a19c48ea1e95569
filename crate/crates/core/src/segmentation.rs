//! Sea/ship separation: align the second frame by the detected shift, compare
//! gradient orientations pixel by pixel, threshold and clean up.

use crate::error::{ensure_same_dims, Error, Result};
use crate::image::{BinaryMask, Image, Rect};
use crate::whitening::orientation_operator;

/// `g` shifted back by the detected displacement, `g(x + s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedImage {
    pub image: Image,
    pub shift: (i64, i64),
    /// Pixels that did not wrap around the border during the shift.
    pub valid: Rect,
}

/// Pixels `x` for which `x + shift` stays inside a `width x height` frame.
pub fn valid_region(width: usize, height: usize, shift: (i64, i64)) -> Rect {
    let span = |n: usize, s: i64| {
        let lo = (-s).max(0) as usize;
        let hi = (n as i64 - s).min(n as i64) as usize;
        (lo, hi)
    };
    let (x0, x1) = span(width, shift.0);
    let (y0, y1) = span(height, shift.1);
    Rect::new(x0, y0, x1 - x0, y1 - y0)
}

/// Circularly shifts `g` so that `out(x) = g(x + shift)`.
///
/// Each shift component must be at most half the image extent, which covers
/// every peak position a matching surface can report.
pub fn align(g: &Image, shift: (i64, i64)) -> Result<AlignedImage> {
    let (w, h) = g.dims();
    if 2 * shift.0.unsigned_abs() as usize > w || 2 * shift.1.unsigned_abs() as usize > h {
        return Err(Error::invalid(format!(
            "shift {shift:?} too large for a {w}x{h} image"
        )));
    }
    Ok(AlignedImage {
        image: g.roll(-shift.0, -shift.1),
        shift,
        valid: valid_region(w, h, shift),
    })
}

/// Per-pixel cosine between the gradient orientations of two images.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchabilityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    /// Region where the comparison is meaningful (outside it, `g` wrapped).
    valid: Rect,
}

impl MatchabilityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>, valid: Rect) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "matchability value {} at index {index} outside [-1, 1]",
                data[index]
            )));
        }
        if valid.right() > width || valid.bottom() > height {
            return Err(Error::OutOfBounds {
                region: valid,
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            data,
            valid,
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn valid(&self) -> Rect {
        self.valid
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn to_image(&self) -> Image {
        Image::from_fn(self.width, self.height, |x, y| self.get(x, y))
    }

    /// Mean over the pixels selected by `mask`, or `None` if it is empty.
    pub fn mean_over(&self, mask: &BinaryMask) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for (i, &v) in self.data.iter().enumerate() {
            if mask.get(i % self.width, i / self.width) {
                sum += v;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// Scalar product of the unit gradient fields of `f` and `g_aligned`; zero
/// where either gradient vanishes.
pub fn matchability(f: &Image, g_aligned: &Image) -> Result<MatchabilityMap> {
    ensure_same_dims(f.dims(), g_aligned.dims())?;
    let (w, h) = f.dims();
    let (a, b) = rayon::join(|| orientation_operator(f), || orientation_operator(g_aligned));
    let (a, b) = (a?, b?);
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p[0] * q[0] + p[1] * q[1]).clamp(-1.0, 1.0))
        .collect();
    Ok(MatchabilityMap {
        width: w,
        height: h,
        data,
        valid: Rect::new(0, 0, w, h),
    })
}

/// [`matchability`] against an aligned image, carrying over its valid region.
pub fn matchability_aligned(f: &Image, g: &AlignedImage) -> Result<MatchabilityMap> {
    let mut map = matchability(f, &g.image)?;
    map.valid = g.valid;
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SegmentConfig {
    /// Pixels whose orientation cosine exceeds this are kept.
    pub cos_threshold: f64,
    /// 3x3 opening before the closing, removing isolated sea pixels.
    pub opening: bool,
    /// 3x3 closing, filling pinholes in the ship region.
    pub closing: bool,
    /// Connected components smaller than this fraction of the frame are dropped.
    pub min_component_fraction: f64,
    /// Clear pixels outside the map's valid region.
    pub exclude_band: bool,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            cos_threshold: 0.4,
            opening: true,
            closing: true,
            min_component_fraction: 0.002,
            exclude_band: true,
        }
    }
}

impl SegmentConfig {
    /// Thresholding only, every cleanup stage disabled.
    pub fn raw(cos_threshold: f64) -> Self {
        Self {
            cos_threshold,
            opening: false,
            closing: false,
            min_component_fraction: 0.0,
            exclude_band: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cos_threshold > -1.0 && self.cos_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "cos_threshold must lie in (-1, 1), got {}",
                self.cos_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.min_component_fraction) {
            return Err(Error::invalid(format!(
                "min_component_fraction must lie in [0, 1], got {}",
                self.min_component_fraction
            )));
        }
        Ok(())
    }
}

/// `map > cos_threshold`, without cleanup.
pub fn threshold(map: &MatchabilityMap, cos_threshold: f64) -> BinaryMask {
    BinaryMask::from_fn(map.width, map.height, |x, y| map.get(x, y) > cos_threshold)
}

/// Thresholds `map` and applies the enabled cleanup stages in order:
/// opening, closing, small-component removal, border-band exclusion.
pub fn segment(map: &MatchabilityMap, cfg: &SegmentConfig) -> Result<BinaryMask> {
    cfg.validate()?;
    let mut mask = threshold(map, cfg.cos_threshold);
    if cfg.opening {
        mask = dilate(&erode(&mask));
    }
    if cfg.closing {
        mask = erode(&dilate(&mask));
    }
    if cfg.min_component_fraction > 0.0 {
        let min_area = (cfg.min_component_fraction * (mask.width() * mask.height()) as f64).ceil() as usize;
        mask = remove_small_components(&mask, min_area);
    }
    if cfg.exclude_band {
        let v = map.valid;
        mask = BinaryMask::from_fn(map.width, map.height, |x, y| {
            mask.get(x, y) && x >= v.x && x < v.right() && y >= v.y && y < v.bottom()
        });
    }
    Ok(mask)
}

/// 3x3 min filter; pixels outside the frame count as set.
pub fn erode(mask: &BinaryMask) -> BinaryMask {
    window3(mask, true, |all, _| all)
}

/// 3x3 max filter; pixels outside the frame count as unset.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    window3(mask, false, |_, any| any)
}

fn window3(mask: &BinaryMask, outside: bool, pick: impl Fn(bool, bool) -> bool) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        let (mut all, mut any) = (true, false);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                let v = if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                    outside
                } else {
                    mask.get(xx as usize, yy as usize)
                };
                all &= v;
                any |= v;
            }
        }
        pick(all, any)
    })
}

/// 8-connected component labels (`0` = background, components from `1`)
/// and the area of each component.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut areas = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if labels[start] != 0 || !mask.get(start % w, start / w) {
            continue;
        }
        let label = areas.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (xx, yy) = (x + dx, y + dy);
                    if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                        continue;
                    }
                    let j = yy as usize * w + xx as usize;
                    if labels[j] == 0 && mask.get(xx as usize, yy as usize) {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

pub fn remove_small_components(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    let (labels, areas) = label_components(mask);
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        let l = labels[y * w + x];
        l != 0 && areas[l as usize - 1] >= min_area
    })
}
