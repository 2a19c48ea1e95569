//! Luminance images, rectangles, binary masks and 2D affine transforms.
//!
//! Pixel `(x, y)` lives at `data[y * width + x]`. Pixel centers sit on integer
//! coordinates, which is also the coordinate system used by
//! [`AffineTransform`] and [`affine_warp`].

use crate::error::{Error, Result};

/// Real-valued luminance grid. Values are nominally in `[0, 1]` and always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image without the finiteness scan. Callers guarantee the invariants.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_raw(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_raw(width, height, data)
    }

    /// Unit impulse at `(x, y)`.
    pub fn impulse(width: usize, height: usize, x: usize, y: usize) -> Self {
        let mut img = Self::zeros(width, height);
        img.data[y * width + x] = 1.0;
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        assert!(value.is_finite(), "non-finite pixel value");
        self.data[y * self.width + x] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `(min, max)` over all pixels.
    pub fn range(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Circular shift: `out(x) = self(x - shift)`.
    pub fn roll(&self, dx: i64, dy: i64) -> Image {
        let (w, h) = (self.width as i64, self.height as i64);
        Image::from_fn(self.width, self.height, |x, y| {
            let sx = (x as i64 - dx).rem_euclid(w) as usize;
            let sy = (y as i64 - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }

    pub fn crop(&self, region: Rect) -> Result<Image> {
        crop(self, region)
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    /// The left third of a `width x height` frame (the boatless reference strip).
    pub fn left_third(width: usize, height: usize) -> Self {
        Self::new(0, 0, width / 3, height)
    }

    pub fn right(&self) -> usize {
        self.x + self.width
    }

    pub fn bottom(&self) -> usize {
        self.y + self.height
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }
}

/// Sub-image over `region`. The region must be non-empty and inside the image.
pub fn crop(img: &Image, region: Rect) -> Result<Image> {
    if region.width == 0
        || region.height == 0
        || region.right() > img.width
        || region.bottom() > img.height
    {
        return Err(Error::OutOfBounds {
            region,
            width: img.width,
            height: img.height,
        });
    }
    let mut data = Vec::with_capacity(region.width * region.height);
    for y in region.y..region.bottom() {
        let row = y * img.width;
        data.extend_from_slice(&img.data[row + region.x..row + region.right()]);
    }
    Ok(Image::from_raw(region.width, region.height, data))
}

/// Boolean grid, typically a segmentation aligned with an [`Image`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
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

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Intersection over union. Two empty masks give 1.
    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        crate::error::ensure_same_dims(self.dims(), other.dims())?;
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.data.iter().zip(&other.data) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        Ok(if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        })
    }

    /// 0/1 image, handy for export and for region statistics.
    pub fn to_image(&self) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }
}

/// `p -> linear * p + translation` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineTransform {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub const fn identity() -> Self {
        Self {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    pub const fn new(linear: [[f64; 2]; 2], translation: [f64; 2]) -> Self {
        Self {
            linear,
            translation,
        }
    }

    pub const fn linear(linear: [[f64; 2]; 2]) -> Self {
        Self::new(linear, [0.0, 0.0])
    }

    pub const fn translation(dx: f64, dy: f64) -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]], [dx, dy])
    }

    /// Counter-clockwise rotation (in the x-right, y-down pixel frame this turns +x toward +y).
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::linear([[c, -s], [s, c]])
    }

    /// Rotation by `theta` that keeps `center` fixed.
    pub fn rotation_about(theta: f64, center: [f64; 2]) -> Self {
        Self::translation(center[0], center[1])
            .then_after(&Self::rotation(theta))
            .then_after(&Self::translation(-center[0], -center[1]))
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Self::linear([[sx, 0.0], [0.0, sy]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.linear;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + self.translation[0],
            m[1][0] * p[0] + m[1][1] * p[1] + self.translation[1],
        ]
    }

    /// Composition `self ∘ inner`: apply `inner` first, then `self`.
    pub fn then_after(&self, inner: &AffineTransform) -> AffineTransform {
        let a = &self.linear;
        let b = &inner.linear;
        let linear = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        let t = self.apply(inner.translation);
        AffineTransform::new(linear, t)
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.det();
        let scale = self
            .linear
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !det.is_finite() || det.abs() <= 1e-12 * scale * scale.max(1.0) {
            return Err(Error::SingularTransform);
        }
        let m = &self.linear;
        let inv = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ];
        let lin = AffineTransform::linear(inv);
        let t = lin.apply(self.translation);
        Ok(AffineTransform::new(inv, [-t[0], -t[1]]))
    }
}

/// Spectral (operator 2-) norm of `linear - I`.
///
/// For a 2x2 matrix `[[a, b], [c, d]]` the largest singular value is
/// `(hypot(a + d, b - c) + hypot(a - d, b + c)) / 2`.
pub fn distortion_norm(t: &AffineTransform) -> f64 {
    let (a, b) = (t.linear[0][0] - 1.0, t.linear[0][1]);
    let (c, d) = (t.linear[1][0], t.linear[1][1] - 1.0);
    ((a + d).hypot(b - c) + (a - d).hypot(b + c)) / 2.0
}

/// Bilinear sample at a real-valued position; `None` outside `[0, w-1] x [0, h-1]`.
#[inline]
pub(crate) fn sample_bilinear(img: &Image, x: f64, y: f64) -> Option<f64> {
    const SLACK: f64 = 1e-9;
    let (w, h) = (img.width as f64, img.height as f64);
    if !(x >= -SLACK && y >= -SLACK && x <= w - 1.0 + SLACK && y <= h - 1.0 + SLACK) {
        return None;
    }
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let top = if fx == 0.0 {
        img.get(x0, y0)
    } else {
        img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx
    };
    if fy == 0.0 {
        return Some(top);
    }
    let bottom = if fx == 0.0 {
        img.get(x0, y1)
    } else {
        img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx
    };
    Some(top * (1.0 - fy) + bottom * fy)
}

/// `output(x) = input(t⁻¹(x))` with bilinear interpolation; samples that fall
/// outside the input take `fill`.
pub fn affine_warp(img: &Image, t: &AffineTransform, fill: f64) -> Result<Image> {
    let inv = t.inverse()?;
    Ok(Image::from_fn(img.width, img.height, |x, y| {
        let p = inv.apply([x as f64, y as f64]);
        sample_bilinear(img, p[0], p[1]).unwrap_or(fill)
    }))
}
