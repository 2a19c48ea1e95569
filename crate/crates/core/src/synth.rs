//! Synthetic maritime scenes with ground truth.
//!
//! The sea is Gaussian noise smoothed to a chosen correlation length and
//! refreshed between frames: `sea_k = m·sea_{k-1} + sqrt(1 - m²)·fresh_k`,
//! renormalized, where `m` is the sea memory (0 = independent every frame).
//! The boat is a fixed textured patch drawn at a per-frame pose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focusing::gaussian_blur;
use crate::image::{sample_bilinear, AffineTransform, BinaryMask, Image};

/// Mean sea luminance.
pub const SEA_LEVEL: f64 = 0.45;
/// Standard deviation of the sea luminance.
pub const SEA_AMPLITUDE: f64 = 0.08;
/// Mean boat luminance.
pub const BOAT_LEVEL: f64 = 0.5;

/// The distortion measured on the hardest frame of the reference footage.
pub const REFERENCE_DISTORTION: [[f64; 2]; 2] = [[0.92, -0.20], [0.08, 0.87]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoatSpec {
    pub texture_seed: u64,
    /// Hull length along the local x axis, pixels.
    pub length: f64,
    /// Hull width along the local y axis, pixels.
    pub beam: f64,
    /// Texture amplitude in units of the sea amplitude.
    pub contrast: f64,
}

impl Default for BoatSpec {
    fn default() -> Self {
        Self {
            texture_seed: 7,
            length: 140.0,
            beam: 56.0,
            contrast: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Standard deviation (pixels) of the kernel smoothing the sea noise.
    pub sea_corr_length: f64,
    /// Per-frame retention of the sea texture, in `[0, 1]`.
    pub sea_memory: f64,
    pub boat: Option<BoatSpec>,
    /// Per-frame boat pose: boat-local coordinates (origin at the hull centre)
    /// to frame pixels. Boatless scenes still use its length as the frame count.
    pub poses: Vec<AffineTransform>,
    pub fps: f64,
}

impl Default for SceneSpec {
    /// Thirteen frames at 1 fps. The boat rocks gently and deforms along a
    /// quadratic ramp that reaches the reference distortion at t = 12 s.
    fn default() -> Self {
        let (width, height) = (256, 256);
        let center = [(width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0];
        let poses = (0..13)
            .map(|k| {
                let t = k as f64;
                let frac = (t / 12.0).powi(2);
                let drift = AffineTransform::linear([
                    [1.0 + frac * (REFERENCE_DISTORTION[0][0] - 1.0), frac * REFERENCE_DISTORTION[0][1]],
                    [frac * REFERENCE_DISTORTION[1][0], 1.0 + frac * (REFERENCE_DISTORTION[1][1] - 1.0)],
                ]);
                let rock = AffineTransform::rotation(0.01 * (2.0 * std::f64::consts::PI * t / 2.4).sin());
                AffineTransform::translation(center[0] + 0.75 * t, center[1] + 0.5 * t)
                    .then_after(&drift)
                    .then_after(&rock)
            })
            .collect();
        Self {
            width,
            height,
            seed: 1,
            sea_corr_length: 1.0,
            sea_memory: 0.0,
            boat: Some(BoatSpec::default()),
            poses,
            fps: 1.0,
        }
    }
}

impl SceneSpec {
    /// Two frames `dt` seconds apart. The boat sits at the frame centre in the
    /// first frame; in the second it is rotated by `rotation` radians about its
    /// centre and moved by `shift` pixels.
    pub fn pair(width: usize, height: usize, seed: u64, shift: (f64, f64), rotation: f64, dt: f64) -> Self {
        let center = [(width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0];
        let first = AffineTransform::translation(center[0], center[1]);
        let second = AffineTransform::translation(center[0] + shift.0, center[1] + shift.1)
            .then_after(&AffineTransform::rotation(rotation));
        Self {
            width,
            height,
            seed,
            sea_corr_length: 1.0,
            sea_memory: 0.0,
            boat: Some(BoatSpec {
                texture_seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xB0A7,
                ..BoatSpec::default()
            }),
            poses: vec![first, second],
            fps: 1.0 / dt,
        }
    }

    /// The same scene without a boat.
    pub fn without_boat(mut self) -> Self {
        self.boat = None;
        self
    }

    /// Boat centred in the frame with the given boat-local pose sequence
    /// (e.g. from [`rocking_poses`]).
    pub fn centered_with_poses(width: usize, height: usize, seed: u64, linear: &[AffineTransform], fps: f64) -> Self {
        let center = [(width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0];
        let poses = linear
            .iter()
            .map(|p| AffineTransform::translation(center[0], center[1]).then_after(p))
            .collect();
        Self {
            width,
            height,
            seed,
            sea_corr_length: 1.0,
            sea_memory: 0.0,
            boat: Some(BoatSpec {
                texture_seed: seed ^ 0x5EED,
                ..BoatSpec::default()
            }),
            poses,
            fps,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.poses.len()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        (0..self.poses.len()).map(|k| k as f64 / self.fps).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidScene(format!(
                "frame {}x{} smaller than 8x8",
                self.width, self.height
            )));
        }
        if !(0.0..=1.0).contains(&self.sea_memory) {
            return Err(Error::InvalidScene(format!(
                "sea_memory {} outside [0, 1]",
                self.sea_memory
            )));
        }
        if !(self.sea_corr_length >= 0.0 && self.sea_corr_length.is_finite()) {
            return Err(Error::InvalidScene("sea_corr_length must be >= 0".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidScene("fps must be > 0".into()));
        }
        if self.poses.is_empty() {
            return Err(Error::InvalidScene("at least one pose is required".into()));
        }
        if let Some(boat) = &self.boat {
            if !(boat.length > 0.0 && boat.beam > 0.0 && boat.contrast >= 0.0) {
                return Err(Error::InvalidScene("boat dimensions must be positive".into()));
            }
            let (a, b) = (boat.length / 2.0, boat.beam / 2.0);
            for (k, pose) in self.poses.iter().enumerate() {
                pose.inverse()
                    .map_err(|_| Error::InvalidScene(format!("pose {k} is singular")))?;
                for corner in [[-a, -b], [a, -b], [-a, b], [a, b]] {
                    let p = pose.apply(corner);
                    if p[0] < 0.0
                        || p[1] < 0.0
                        || p[0] > self.width as f64 - 1.0
                        || p[1] > self.height as f64 - 1.0
                    {
                        return Err(Error::InvalidScene(format!(
                            "boat leaves the {}x{} frame at pose {k}",
                            self.width, self.height
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-frame ground truth, relative to frame 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub timestamps: Vec<f64>,
    /// Boat pixels per frame (empty masks for boatless scenes).
    pub masks: Vec<BinaryMask>,
    /// Boat-centre displacement since frame 0, pixels.
    pub shifts: Vec<(f64, f64)>,
    /// Linear distortion since frame 0.
    pub distortions: Vec<AffineTransform>,
}

impl GroundTruth {
    pub fn distortion_norms(&self) -> Vec<f64> {
        self.distortions.iter().map(crate::image::distortion_norm).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub frames: Vec<Image>,
    pub truth: GroundTruth,
    /// The sea layer of every frame before the boat was drawn.
    pub sea: Vec<Image>,
}

impl Scene {
    pub fn timestamps(&self) -> &[f64] {
        &self.truth.timestamps
    }
}

/// Textured hull in boat-local coordinates.
#[derive(Debug, Clone)]
pub struct BoatModel {
    half_length: f64,
    half_beam: f64,
    texture: Image,
    origin: [f64; 2],
}

const HULL_EXPONENT: f64 = 2.5;

impl BoatModel {
    pub fn new(spec: &BoatSpec) -> Self {
        let (a, b) = (spec.length / 2.0, spec.beam / 2.0);
        let pad = 4.0;
        let w = (2.0 * (a + pad)).ceil() as usize + 1;
        let h = (2.0 * (b + pad)).ceil() as usize + 1;
        let origin = [(w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
        // Fine-grained deck clutter: many small edges, no large flat features.
        let z = standardized(&gaussian_blur(&normal_field(w, h, &mut rng), 0.8));
        let amp = spec.contrast * SEA_AMPLITUDE;
        let texture = z.map(|t| BOAT_LEVEL + amp * t);
        Self {
            half_length: a,
            half_beam: b,
            texture,
            origin,
        }
    }

    /// True for boat-local points inside the hull outline.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        (u / self.half_length).abs().powf(HULL_EXPONENT) + (v / self.half_beam).abs().powf(HULL_EXPONENT) <= 1.0
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        sample_bilinear(&self.texture, u + self.origin[0], v + self.origin[1]).unwrap_or(BOAT_LEVEL)
    }
}

fn normal_field(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
    Image::from_fn(w, h, |_, _| StandardNormal.sample(rng))
}

fn standardized(img: &Image) -> Image {
    let m = img.mean();
    let var = img.data().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / img.len() as f64;
    let s = var.sqrt();
    if s == 0.0 {
        img.map(|v| v - m)
    } else {
        img.map(|v| (v - m) / s)
    }
}

/// Draws the boat over a sea layer. Returns the frame and the boat mask.
pub fn render_frame(sea: &Image, boat: Option<&BoatModel>, pose: &AffineTransform) -> Result<(Image, BinaryMask)> {
    let (w, h) = sea.dims();
    let Some(boat) = boat else {
        return Ok((sea.clone(), BinaryMask::empty(w, h)));
    };
    let inv = pose.inverse()?;
    let mut frame = sea.clone();
    let mut mask = BinaryMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = inv.apply([x as f64, y as f64]);
            if boat.contains(p[0], p[1]) {
                frame.set(x, y, boat.value(p[0], p[1]));
                mask.set(x, y, true);
            }
        }
    }
    Ok((frame, mask))
}

/// Renders every frame of `spec`. Deterministic in `spec` (including the seed).
pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut fresh = || {
        let noise = normal_field(w, h, &mut rng);
        standardized(&gaussian_blur(&noise, spec.sea_corr_length))
    };
    let boat = spec.boat.as_ref().map(BoatModel::new);
    let m = spec.sea_memory;
    let keep_new = (1.0 - m * m).max(0.0).sqrt();

    let mut sea_field = fresh();
    let mut frames = Vec::with_capacity(spec.poses.len());
    let mut seas = Vec::with_capacity(spec.poses.len());
    let mut masks = Vec::with_capacity(spec.poses.len());
    for (k, pose) in spec.poses.iter().enumerate() {
        if k > 0 && m < 1.0 {
            let new = fresh();
            let mixed = Image::from_raw(
                w,
                h,
                sea_field
                    .data()
                    .iter()
                    .zip(new.data())
                    .map(|(a, b)| m * a + keep_new * b)
                    .collect(),
            );
            sea_field = standardized(&mixed);
        }
        let sea = sea_field.map(|z| SEA_LEVEL + SEA_AMPLITUDE * z);
        let (frame, mask) = render_frame(&sea, boat.as_ref(), pose)?;
        frames.push(frame);
        seas.push(sea);
        masks.push(mask);
    }

    let base = spec.poses[0];
    let base_inv = AffineTransform::linear(base.linear).inverse()?;
    let truth = GroundTruth {
        timestamps: spec.timestamps(),
        masks,
        shifts: spec
            .poses
            .iter()
            .map(|p| (p.translation[0] - base.translation[0], p.translation[1] - base.translation[1]))
            .collect(),
        distortions: spec
            .poses
            .iter()
            .map(|p| AffineTransform::linear(p.linear).then_after(&base_inv))
            .collect(),
    };
    Ok(Scene {
        frames,
        truth,
        sea: seas,
    })
}

/// Boat-local rotations `θ(t) = amplitude · sin(2πt / period)` sampled at
/// `fps` from `t = 0` to `duration` inclusive.
pub fn rocking_poses(amplitude: f64, period: f64, fps: f64, duration: f64) -> Result<Vec<AffineTransform>> {
    if !(amplitude >= 0.0 && period > 0.0 && fps > 0.0 && duration > 0.0) {
        return Err(Error::invalid("rocking parameters must be positive"));
    }
    let count = (duration * fps + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| rocking_angle(amplitude, period, k as f64 / fps))
        .map(AffineTransform::rotation)
        .collect())
}

pub fn rocking_angle(amplitude: f64, period: f64, t: f64) -> f64 {
    amplitude * (2.0 * std::f64::consts::PI * t / period).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::distortion_norm;

    fn small_pair(seed: u64) -> SceneSpec {
        let mut spec = SceneSpec::pair(128, 96, seed, (5.0, -3.0), 0.05, 2.0);
        spec.boat.as_mut().unwrap().length = 50.0;
        spec.boat.as_mut().unwrap().beam = 20.0;
        spec
    }

    fn correlation(a: &Image, b: &Image) -> f64 {
        let (ma, mb) = (a.mean(), b.mean());
        let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
        for (x, y) in a.data().iter().zip(b.data()) {
            num += (x - ma) * (y - mb);
            da += (x - ma) * (x - ma);
            db += (y - mb) * (y - mb);
        }
        num / (da * db).sqrt()
    }

    #[test]
    fn frozen_sea_identity_poses_repeat() {
        let mut spec = small_pair(3);
        spec.sea_memory = 1.0;
        spec.poses = vec![spec.poses[0]; 4];
        let scene = generate(&spec).unwrap();
        for f in &scene.frames[1..] {
            assert_eq!(f, &scene.frames[0]);
        }
    }

    #[test]
    fn memoryless_sea_decorrelates() {
        let mut spec = small_pair(4).without_boat();
        spec.poses = vec![AffineTransform::identity(); 3];
        let scene = generate(&spec).unwrap();
        for k in 1..3 {
            let r = correlation(&scene.frames[k - 1], &scene.frames[k]);
            assert!(r.abs() < 0.05, "frame {k}: r = {r}");
        }
    }

    fn field_autocorrelation(field: &crate::whitening::GradientField, dx: usize, dy: usize) -> f64 {
        let (w, h) = field.dims();
        let (mut num, mut den) = (0.0, 0.0);
        for y in 0..h - dy {
            for x in 0..w - dx {
                let (a, b) = (field.get(x, y), field.get(x + dx, y + dy));
                num += a[0] * b[0] + a[1] * b[1];
                den += a[0] * a[0] + a[1] * a[1];
            }
        }
        num / den
    }

    #[test]
    fn sea_orientation_is_white_beyond_four_correlation_lengths() {
        for corr in [1.0, 3.0] {
            let spec = SceneSpec {
                width: 128,
                height: 128,
                sea_corr_length: corr,
                poses: vec![AffineTransform::identity()],
                ..SceneSpec::default()
            }
            .without_boat();
            let scene = generate(&spec).unwrap();
            let field = crate::whitening::orientation_operator(&scene.frames[0]).unwrap();
            // Gradients of a smoothed field keep a negative side lobe out to a few
            // correlation lengths; whiteness is checked past it.
            let first = (4.0 * corr).floor() as usize + 1;
            for lag in first..first + 6 {
                for (dx, dy) in [(lag, 0), (0, lag), (lag, lag)] {
                    let r = field_autocorrelation(&field, dx, dy);
                    assert!(r.abs() < 0.1, "corr {corr}, lag ({dx}, {dy}): {r}");
                }
            }
        }
    }

    #[test]
    fn default_scene_ends_at_reference_distortion() {
        let spec = SceneSpec::default();
        assert_eq!(spec.frame_count(), 13);
        assert_eq!(spec.timestamps().last().copied(), Some(12.0));
        let scene = generate(&spec).unwrap();
        let norms = scene.truth.distortion_norms();
        assert_eq!(norms[0], 0.0);
        assert!((norms[12] - 0.24).abs() < 0.005, "{}", norms[12]);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate(&small_pair(9)).unwrap();
        let b = generate(&small_pair(9)).unwrap();
        assert_eq!(a.frames, b.frames);
        let c = generate(&small_pair(10)).unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn frames_recomposite_from_truth() {
        let spec = small_pair(5);
        let scene = generate(&spec).unwrap();
        let boat = BoatModel::new(spec.boat.as_ref().unwrap());
        for k in 0..scene.frames.len() {
            let (frame, mask) = render_frame(&scene.sea[k], Some(&boat), &spec.poses[k]).unwrap();
            assert_eq!(frame, scene.frames[k]);
            assert_eq!(mask, scene.truth.masks[k]);
            for (i, &inside) in mask.data().iter().enumerate() {
                if !inside {
                    assert_eq!(frame.data()[i], scene.sea[k].data()[i]);
                }
            }
        }
    }

    #[test]
    fn truth_records_shift_and_rotation() {
        let scene = generate(&small_pair(6)).unwrap();
        assert_eq!(scene.truth.shifts[1], (5.0, -3.0));
        let d = distortion_norm(&scene.truth.distortions[1]);
        assert!((d - 2.0 * (0.025f64).sin()).abs() < 1e-12);
        assert_eq!(scene.truth.timestamps, vec![0.0, 2.0]);
    }

    #[test]
    fn oversized_boat_is_rejected() {
        let mut spec = small_pair(1);
        spec.boat.as_mut().unwrap().length = 400.0;
        assert!(matches!(generate(&spec), Err(Error::InvalidScene(_))));
        let mut spec = small_pair(1);
        spec.sea_memory = 1.5;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn rocking_schedule() {
        let flat = rocking_poses(0.0, 3.0, 4.0, 6.0).unwrap();
        assert_eq!(flat.len(), 25);
        assert!(flat.iter().all(|p| *p == AffineTransform::rotation(0.0)));

        let rock = rocking_poses(0.1, 3.0, 4.0, 6.0).unwrap();
        let angles: Vec<f64> = rock.iter().map(|p| p.linear[1][0].atan2(p.linear[0][0])).collect();
        let max = angles.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        assert!((max - 0.1).abs() < 1e-3, "{max}");
        assert!(angles[6].abs() < 1e-12); // t = 1.5 s, half a period
        assert!((rocking_angle(0.1, 3.0, 0.75) - 0.1).abs() < 1e-12);
        assert!(rocking_poses(0.1, 0.0, 1.0, 1.0).is_err());
    }
}
