//! Ship-presence decisions from pairs and sequences of frames.
//!
//! A pair `(f, g)` taken `dt` seconds apart is matched with both focused
//! methods. The sea decorrelates after `t_sea` seconds, so past that delay a
//! matching-surface SNR above `snr_sea` can only come from something whose
//! appearance persisted: a ship.

use rayon::prelude::*;

use crate::correlation::{surface, Method};
use crate::error::{ensure_same_dims, Error, Result};
use crate::focusing::FocusConfig;
use crate::image::{crop, Image, Rect};

/// Margin applied to `√(2 ln N)` when deciding whether a boatless series has
/// settled to the noise floor.
pub const SEA_BOUND_MARGIN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectionConfig {
    pub snr_sea: f64,
    /// Seconds after which the sea no longer correlates with frame 0.
    pub t_sea: f64,
    /// End of the reliable detection window, seconds.
    pub t_max: f64,
    pub focus: FocusConfig,
    /// Number of consecutive pairs that must exceed `snr_sea` before a
    /// sequence is declared to contain a ship.
    pub consecutive: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            snr_sea: 7.0,
            t_sea: 1.0,
            t_max: 3.0,
            focus: FocusConfig::default(),
            consecutive: 1,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_sea > 0.0 && self.t_sea < self.t_max && self.t_max.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < t_sea < t_max, got t_sea = {}, t_max = {}",
                self.t_sea, self.t_max
            )));
        }
        if !(self.snr_sea > 1.0 && self.snr_sea.is_finite()) {
            return Err(Error::invalid(format!("snr_sea must be > 1, got {}", self.snr_sea)));
        }
        if self.consecutive == 0 {
            return Err(Error::invalid("consecutive must be >= 1"));
        }
        self.focus.validate()
    }
}

/// One method's outcome on a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub snr: f64,
    pub shift: (i64, i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionVerdict {
    /// `best_snr > snr_sea` and `dt > t_sea`.
    pub present: bool,
    /// Set when `dt > t_max`: the decision is outside the reliable window.
    pub low_confidence: bool,
    pub best_method: Method,
    pub best_snr: f64,
    pub peak_shift: (i64, i64),
    pub per_method: Vec<MethodResult>,
    pub dt: f64,
}

impl DetectionVerdict {
    fn decide(per_method: Vec<MethodResult>, dt: f64, cfg: &DetectionConfig) -> Self {
        let best = per_method
            .iter()
            .copied()
            .reduce(|a, b| if b.snr > a.snr { b } else { a })
            .expect("at least one method");
        Self {
            present: best.snr > cfg.snr_sea && dt > cfg.t_sea,
            low_confidence: dt > cfg.t_max,
            best_method: best.method,
            best_snr: best.snr,
            peak_shift: best.shift,
            per_method,
            dt,
        }
    }
}

fn run_method(method: Method, f: &Image, g: &Image, focus: &FocusConfig) -> Result<MethodResult> {
    let s = surface(method, f, g, focus)?;
    Ok(MethodResult {
        method,
        snr: s.snr()?,
        shift: s.peak_shift,
    })
}

/// Decides whether `f` (at `t = 0`) and `g` (at `t = dt`) share a ship.
/// Both focused methods run; the larger SNR decides.
pub fn detect(f: &Image, g: &Image, dt: f64, cfg: &DetectionConfig) -> Result<DetectionVerdict> {
    ensure_same_dims(f.dims(), g.dims())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    cfg.validate()?;
    let (a, b) = rayon::join(
        || run_method(Method::FocusedOrientation, f, g, &cfg.focus),
        || run_method(Method::FocusedPhase, f, g, &cfg.focus),
    );
    Ok(DetectionVerdict::decide(vec![a?, b?], dt, cfg))
}

/// Verdicts for every later frame against frame 0, plus the sequence decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceVerdict {
    pub verdicts: Vec<DetectionVerdict>,
    /// True when at least `consecutive` adjacent verdicts are present.
    pub present: bool,
}

pub fn detect_sequence(frames: &[Image], timestamps: &[f64], cfg: &DetectionConfig) -> Result<SequenceVerdict> {
    check_sequence(frames, timestamps)?;
    cfg.validate()?;
    let verdicts = frames[1..]
        .par_iter()
        .zip(&timestamps[1..])
        .map(|(g, t)| detect(&frames[0], g, t - timestamps[0], cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut run = 0;
    let mut present = false;
    for v in &verdicts {
        run = if v.present { run + 1 } else { 0 };
        present |= run >= cfg.consecutive;
    }
    Ok(SequenceVerdict { verdicts, present })
}

fn check_sequence(frames: &[Image], timestamps: &[f64]) -> Result<()> {
    if frames.len() < 2 {
        return Err(Error::InsufficientFrames {
            need: 2,
            got: frames.len(),
        });
    }
    if timestamps.len() != frames.len() {
        return Err(Error::invalid(format!(
            "{} timestamps for {} frames",
            timestamps.len(),
            frames.len()
        )));
    }
    if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("timestamps must be strictly increasing"));
    }
    for f in &frames[1..] {
        ensure_same_dims(frames[0].dims(), f.dims())?;
    }
    Ok(())
}

/// Where a series was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Full,
    Crop(Rect),
}

impl Region {
    pub fn tag(&self) -> &'static str {
        match self {
            Region::Full => "full",
            Region::Crop(_) => "crop",
        }
    }
}

/// SNR of frames `1..` against frame 0, one row per method.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSeries {
    /// Delay of each compared frame after frame 0, seconds.
    pub timestamps: Vec<f64>,
    pub methods: Vec<Method>,
    /// `values[m][k]`: SNR of method `m` at `timestamps[k]`.
    pub values: Vec<Vec<f64>>,
    pub region: Region,
    /// Number of elements in each matching surface.
    pub surface_pixels: usize,
}

impl SnrSeries {
    pub fn get(&self, method: Method) -> Option<&[f64]> {
        self.methods
            .iter()
            .position(|&m| m == method)
            .map(|i| self.values[i].as_slice())
    }

    /// Largest value over all methods at each timestamp.
    pub fn envelope(&self) -> Vec<f64> {
        (0..self.timestamps.len())
            .map(|k| self.values.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }
}

/// Computes the four-method SNR series, optionally on a crop of every frame.
pub fn snr_series(
    frames: &[Image],
    timestamps: &[f64],
    cfg: &DetectionConfig,
    region: Option<Rect>,
) -> Result<SnrSeries> {
    snr_series_with(frames, timestamps, &cfg.focus, region, &Method::SERIES)
}

pub fn snr_series_with(
    frames: &[Image],
    timestamps: &[f64],
    focus: &FocusConfig,
    region: Option<Rect>,
    methods: &[Method],
) -> Result<SnrSeries> {
    check_sequence(frames, timestamps)?;
    focus.validate()?;
    let view = |img: &Image| match region {
        Some(r) => crop(img, r),
        None => Ok(img.clone()),
    };
    let reference = view(&frames[0])?;
    let per_frame = frames[1..]
        .par_iter()
        .map(|g| {
            let g = view(g)?;
            methods
                .iter()
                .map(|&m| surface(m, &reference, &g, focus)?.snr())
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values = (0..methods.len())
        .map(|m| per_frame.iter().map(|row| row[m]).collect())
        .collect();
    Ok(SnrSeries {
        timestamps: timestamps[1..].iter().map(|t| t - timestamps[0]).collect(),
        methods: methods.to_vec(),
        values,
        region: region.map_or(Region::Full, Region::Crop),
        surface_pixels: reference.len(),
    })
}

/// Sea bounds read off a boatless series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub t_sea: f64,
    pub snr_sea: f64,
}

/// Expected SNR ceiling of a surface of `n` independent values.
pub fn noise_bound(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

/// Estimates `t_sea` and `snr_sea` from a series measured on sea only.
///
/// `t_sea` is the first timestamp from which every method stays below
/// [`SEA_BOUND_MARGIN`]`·√(2 ln N)` for the rest of the series; `snr_sea` is
/// the larger of the highest SNR seen from then on and `⌈√(2 ln N)⌉`.
pub fn estimate_thresholds(boatless: &SnrSeries) -> Result<Thresholds> {
    let bound = noise_bound(boatless.surface_pixels);
    let limit = SEA_BOUND_MARGIN * bound;
    let envelope = boatless.envelope();
    let stable_from = envelope
        .iter()
        .rposition(|&v| !(v < limit))
        .map_or(0, |k| k + 1);
    if stable_from == envelope.len() {
        return Err(Error::NoDecorrelation(format!(
            "SNR never settles below {limit:.3}"
        )));
    }
    if envelope.len() - stable_from < 2 {
        return Err(Error::NoDecorrelation(format!(
            "only {} sample(s) after the sea settles; need at least 2",
            envelope.len() - stable_from
        )));
    }
    let observed = envelope[stable_from..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Thresholds {
        t_sea: boatless.timestamps[stable_from],
        snr_sea: observed.max(bound.ceil()),
    })
}
