//! Command-line front end: `detect`, `compare`, `segment`, `thresholds` and `synth`.
//!
//! Exit codes: 0 success (including a negative detection), 1 usage error,
//! 2 input error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::correlation::{surface, Method};
use crate::detection::{
    detect, detect_sequence, estimate_thresholds, noise_bound, snr_series, DetectionConfig, DetectionVerdict,
};
use crate::error::{Error, Result};
use crate::focusing::FocusConfig;
use crate::image::{Image, Rect};
use crate::io;
use crate::segmentation::{align, matchability_aligned, segment, threshold, SegmentConfig};
use crate::synth::{generate, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InsufficientFrames { .. } | Error::InvalidParameter(_) => EXIT_USAGE,
        Error::ImaginaryResidue { .. } | Error::ConstantSurface | Error::SingularTransform => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "focorr", version, about = "Ship detection and segmentation with focused correlation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide ship presence for each frame against the first one.
    Detect(DetectArgs),
    /// Four-method SNR series and matching-surface heat maps.
    Compare(CompareArgs),
    /// Matchability map and ship mask for a pair.
    Segment(SegmentArgs),
    /// Estimate t_sea and snr_sea from a sea-only sequence.
    Thresholds(ThresholdArgs),
    /// Write a synthetic scene with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FrameArgs {
    /// Frame files (PNG or PGM), first frame first.
    pub frames: Vec<PathBuf>,
    /// Manifest of `path<TAB>seconds` lines, used instead of positional frames.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Frame rate used when timestamps are neither in a manifest nor in file names.
    #[arg(long, default_value_t = 1.0)]
    pub fps: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FocusArgs {
    #[arg(long, default_value_t = crate::focusing::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Focus point x in pixels (default: image centre).
    #[arg(long, requires = "focus_y")]
    pub focus_x: Option<f64>,
    #[arg(long, requires = "focus_x")]
    pub focus_y: Option<f64>,
    #[arg(long, default_value_t = crate::focusing::DEFAULT_LEVELS)]
    pub levels: usize,
}

impl FocusArgs {
    pub fn config(&self) -> FocusConfig {
        FocusConfig {
            epsilon: self.epsilon,
            focus: self.focus_x.zip(self.focus_y).map(|(x, y)| [x, y]),
            levels: self.levels,
            sigma_max: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DecisionArgs {
    #[command(flatten)]
    pub focus: FocusArgs,
    #[arg(long, default_value_t = 7.0)]
    pub snr_sea: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_sea: f64,
    #[arg(long, default_value_t = 3.0)]
    pub t_max: f64,
    /// Consecutive exceeding pairs required for a sequence-level detection.
    #[arg(long, default_value_t = 1)]
    pub consecutive: usize,
}

impl DecisionArgs {
    pub fn config(&self) -> DetectionConfig {
        DetectionConfig {
            snr_sea: self.snr_sea,
            t_sea: self.t_sea,
            t_max: self.t_max,
            focus: self.focus.config(),
            consecutive: self.consecutive,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub frames: FrameArgs,
    #[command(flatten)]
    pub decision: DecisionArgs,
    #[arg(long, default_value = "focorr_out")]
    pub out: PathBuf,
    /// Also write both focused matching surfaces of every pair.
    #[arg(long)]
    pub export_surfaces: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub frames: FrameArgs,
    #[command(flatten)]
    pub focus: FocusArgs,
    /// Extra boatless region: `left-third` or `x,y,width,height`.
    #[arg(long)]
    pub crop: Option<String>,
    #[arg(long, default_value = "focorr_out")]
    pub out: PathBuf,
    /// Skip the per-frame surface heat maps.
    #[arg(long)]
    pub no_surfaces: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub frames: FrameArgs,
    #[command(flatten)]
    pub decision: DecisionArgs,
    /// Delay between the two frames in seconds (overrides derived timestamps).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    pub cos_threshold: f64,
    /// Segment even when no ship is detected.
    #[arg(long)]
    pub force: bool,
    /// Ground-truth sidecar; `truth.txt` next to the first frame is used when present.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub no_opening: bool,
    #[arg(long)]
    pub no_closing: bool,
    /// Smallest kept component as a fraction of the frame area.
    #[arg(long, default_value_t = SegmentConfig::default().min_component_fraction)]
    pub min_component: f64,
    /// Keep pixels in the band that wrapped around during alignment.
    #[arg(long)]
    pub keep_band: bool,
    #[arg(long, default_value = "focorr_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub frames: FrameArgs,
    #[command(flatten)]
    pub focus: FocusArgs,
    /// Sea-only region: `left-third` or `x,y,width,height` (default: whole frame).
    #[arg(long)]
    pub crop: Option<String>,
    #[arg(long, default_value = "focorr_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameFormat {
    Pgm,
    Png,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scene description as JSON; the built-in 13-frame scene otherwise.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop the boat from the scene.
    #[arg(long)]
    pub no_boat: bool,
    #[arg(long, value_enum, default_value_t = FrameFormat::Pgm)]
    pub format: FrameFormat,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Segment(a) => cmd_segment(a),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Frames with timestamps, in input order.
pub struct Sequence {
    pub paths: Vec<PathBuf>,
    pub frames: Vec<Image>,
    pub timestamps: Vec<f64>,
}

/// Resolves frame paths and timestamps: manifest first, then `_t<seconds>`
/// in every file name, then `index / fps`.
pub fn load_sequence(args: &FrameArgs) -> Result<Sequence> {
    let (paths, timestamps) = match &args.manifest {
        Some(m) => {
            if !args.frames.is_empty() {
                return Err(Error::invalid("give either frame paths or --manifest, not both"));
            }
            let entries = io::read_manifest(m)?;
            (
                entries.iter().map(|e| e.path.clone()).collect(),
                entries.iter().map(|e| e.time).collect(),
            )
        }
        None => {
            let from_names: Option<Vec<f64>> = args
                .frames
                .iter()
                .map(|p| io::timestamp_from_file_name(p))
                .collect();
            let times = match from_names {
                Some(t) => t,
                None => {
                    if !(args.fps > 0.0 && args.fps.is_finite()) {
                        return Err(Error::invalid(format!("fps must be > 0, got {}", args.fps)));
                    }
                    (0..args.frames.len()).map(|k| k as f64 / args.fps).collect()
                }
            };
            (args.frames.clone(), times)
        }
    };
    if paths.len() < 2 {
        return Err(Error::InsufficientFrames {
            need: 2,
            got: paths.len(),
        });
    }
    let frames = paths.iter().map(io::load_image).collect::<Result<Vec<_>>>()?;
    Ok(Sequence {
        paths,
        frames,
        timestamps,
    })
}

/// Parses `left-third` or `x,y,width,height`.
pub fn parse_crop(spec: &str, width: usize, height: usize) -> Result<Rect> {
    if spec == "left-third" {
        return Ok(Rect::left_third(width, height));
    }
    let parts: Vec<usize> = spec
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid(format!("bad crop {spec:?}; use left-third or x,y,width,height")))?;
    match parts[..] {
        [x, y, w, h] => Ok(Rect::new(x, y, w, h)),
        _ => Err(Error::invalid(format!("bad crop {spec:?}; use left-third or x,y,width,height"))),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn describe(v: &DetectionVerdict) -> String {
    let methods: Vec<String> = v
        .per_method
        .iter()
        .map(|r| format!("{}={:.3}", r.method, r.snr))
        .collect();
    format!(
        "dt={} present={} best={} snr={:.3} shift=({},{}){} [{}]",
        v.dt,
        v.present,
        v.best_method,
        v.best_snr,
        v.peak_shift.0,
        v.peak_shift.1,
        if v.low_confidence { " low-confidence" } else { "" },
        methods.join(" ")
    )
}

fn export_surface(dir: &Path, stem: &str, s: &Image) -> Result<()> {
    let centred = io::fft_shift(s);
    io::write_heatmap_pgm(&centred, dir.join(format!("{stem}.pgm")))?;
    io::write_grid_csv(&centred, dir.join(format!("{stem}.csv")))
}

pub fn cmd_detect(a: &DetectArgs) -> Result<()> {
    let cfg = a.decision.config();
    cfg.validate()?;
    let seq = load_sequence(&a.frames)?;
    ensure_dir(&a.out)?;
    let result = detect_sequence(&seq.frames, &seq.timestamps, &cfg)?;
    for v in &result.verdicts {
        println!("{}", describe(v));
    }
    println!("sequence present={}", result.present);
    io::write_verdict_csv(&result.verdicts, a.out.join("verdicts.csv"))?;
    if a.export_surfaces {
        let dir = a.out.join("surfaces");
        ensure_dir(&dir)?;
        for (k, g) in seq.frames.iter().enumerate().skip(1) {
            for m in Method::FOCUSED {
                let s = surface(m, &seq.frames[0], g, &cfg.focus)?;
                export_surface(&dir, &format!("{m}_{k:03}"), &s.surface)?;
            }
        }
    }
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let focus = a.focus.config();
    focus.validate()?;
    let seq = load_sequence(&a.frames)?;
    let (w, h) = seq.frames[0].dims();
    let crop = a.crop.as_deref().map(|c| parse_crop(c, w, h)).transpose()?;
    ensure_dir(&a.out)?;
    let cfg = DetectionConfig {
        focus,
        ..DetectionConfig::default()
    };
    let full = snr_series(&seq.frames, &seq.timestamps, &cfg, None)?;
    let mut all = vec![full];
    if let Some(r) = crop {
        all.push(snr_series(&seq.frames, &seq.timestamps, &cfg, Some(r))?);
    }
    for s in &all {
        for (m, values) in s.methods.iter().zip(&s.values) {
            let text: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
            println!("{:<5} {:<20} {}", s.region.tag(), m.name(), text.join(" "));
        }
    }
    io::write_snr_series_csv(&all.iter().collect::<Vec<_>>(), a.out.join("snr_series.csv"))?;
    if !a.no_surfaces {
        let dir = a.out.join("surfaces");
        ensure_dir(&dir)?;
        let jobs: Vec<(usize, Method)> = (1..seq.frames.len())
            .flat_map(|k| Method::SERIES.into_iter().map(move |m| (k, m)))
            .collect();
        jobs.par_iter().try_for_each(|&(k, m)| {
            let s = surface(m, &seq.frames[0], &seq.frames[k], &focus)?;
            export_surface(&dir, &format!("{m}_{k:03}"), &s.surface)
        })?;
    }
    Ok(())
}

pub fn cmd_segment(a: &SegmentArgs) -> Result<()> {
    let cfg = a.decision.config();
    cfg.validate()?;
    let seg_cfg = SegmentConfig {
        cos_threshold: a.cos_threshold,
        opening: !a.no_opening,
        closing: !a.no_closing,
        min_component_fraction: a.min_component,
        exclude_band: !a.keep_band,
    };
    seg_cfg.validate()?;
    let seq = load_sequence(&a.frames)?;
    if seq.frames.len() != 2 {
        return Err(Error::invalid(format!("segment takes exactly 2 frames, got {}", seq.frames.len())));
    }
    let (f, g) = (&seq.frames[0], &seq.frames[1]);
    let dt = a.dt.unwrap_or(seq.timestamps[1] - seq.timestamps[0]);
    let verdict = detect(f, g, dt, &cfg)?;
    println!("{}", describe(&verdict));
    if !verdict.present && !a.force {
        return Err(Error::NotDetected {
            best_snr: verdict.best_snr,
            dt,
        });
    }
    ensure_dir(&a.out)?;
    let aligned = align(g, verdict.peak_shift)?;
    let map = matchability_aligned(f, &aligned)?;
    let mask = segment(&map, &seg_cfg)?;
    let raw = threshold(&map, seg_cfg.cos_threshold);
    let map_img = map.to_image();
    io::write_pgm(&map_img.map(|v| (v + 1.0) / 2.0), a.out.join("matchability.pgm"), false)?;
    io::write_grid_csv(&map_img, a.out.join("matchability.csv"))?;
    io::write_mask_png(&mask, a.out.join("mask.png"))?;
    io::write_mask_png(&raw, a.out.join("mask_raw.png"))?;
    io::write_composite(a.out.join("composite.png"), f, &aligned.image, &map, &mask)?;
    println!("mask pixels={} raw pixels={}", mask.count(), raw.count());

    let sidecar = a.truth.clone().or_else(|| {
        let p = seq.paths[0].parent().unwrap_or(Path::new("")).join("truth.txt");
        p.exists().then_some(p)
    });
    if let Some(sidecar) = sidecar {
        let records = io::read_truth(&sidecar)?;
        let name = seq.paths[0].file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let rec = records.iter().find(|r| r.frame == name).ok_or_else(|| Error::Parse {
            what: "ground-truth sidecar",
            path: sidecar.clone(),
            line: 0,
            reason: format!("no entry for frame {name}"),
        })?;
        let truth = io::load_mask(sidecar.parent().unwrap_or(Path::new("")).join(&rec.mask))?;
        println!("iou={:.4}", mask.iou(&truth)?);
    }
    Ok(())
}

pub fn cmd_thresholds(a: &ThresholdArgs) -> Result<()> {
    let focus = a.focus.config();
    focus.validate()?;
    let seq = load_sequence(&a.frames)?;
    let (w, h) = seq.frames[0].dims();
    let crop = a.crop.as_deref().map(|c| parse_crop(c, w, h)).transpose()?;
    let cfg = DetectionConfig {
        focus,
        ..DetectionConfig::default()
    };
    let series = snr_series(&seq.frames, &seq.timestamps, &cfg, crop)?;
    ensure_dir(&a.out)?;
    io::write_snr_series_csv(&[&series], a.out.join("sea_snr_series.csv"))?;
    let t = estimate_thresholds(&series)?;
    println!(
        "t_sea={} snr_sea={:.3} noise_bound={:.3}",
        t.t_sea,
        t.snr_sea,
        noise_bound(series.surface_pixels)
    );
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<SceneSpec>(&text).map_err(|e| Error::Parse {
                what: "scene spec",
                path: p.clone(),
                line: e.line(),
                reason: e.to_string(),
            })?
        }
        None => SceneSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if a.no_boat {
        spec.boat = None;
    }
    let scene = generate(&spec)?;
    ensure_dir(&a.out)?;
    ensure_dir(&a.out.join("masks"))?;
    let ext = match a.format {
        FrameFormat::Pgm => "pgm",
        FrameFormat::Png => "png",
    };
    let mut manifest = Vec::new();
    let mut records = Vec::new();
    for (k, frame) in scene.frames.iter().enumerate() {
        let t = scene.truth.timestamps[k];
        let name = io::frame_file_name(k, t, ext);
        io::save_image(frame, a.out.join(&name))?;
        let mask = format!("masks/mask_{k:03}.png");
        io::write_mask_png(&scene.truth.masks[k], a.out.join(&mask))?;
        manifest.push((name.clone(), t));
        records.push(io::TruthRecord {
            frame: name,
            index: k,
            time: t,
            shift: scene.truth.shifts[k],
            distortion: scene.truth.distortions[k].linear,
            mask,
        });
    }
    io::write_manifest(a.out.join("manifest.tsv"), &manifest)?;
    io::write_truth(a.out.join("truth.txt"), &records)?;
    let json = serde_json::to_string_pretty(&spec).expect("scene spec serializes");
    fs::write(a.out.join("spec.json"), json + "\n").map_err(|e| Error::io(a.out.join("spec.json"), e))?;
    println!("wrote {} frames to {}", scene.frames.len(), a.out.display());
    Ok(())
}
