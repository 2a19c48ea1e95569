//! Reading and writing rasters, CSV tables, manifests and ground-truth sidecars.
//!
//! Color inputs are reduced to luminance with the ITU-R BT.601 weights
//! `Y = 0.299 R + 0.587 G + 0.114 B`. Grayscale inputs are only rescaled to
//! `[0, 1]`. Written rasters are 8-bit; values are clamped to `[0, 1]` first.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, GrayImage, ImageEncoder, ImageError, ImageFormat, ImageReader};

use crate::detection::{DetectionVerdict, SnrSeries};
use crate::error::{Error, Result};
use crate::image::{AffineTransform, BinaryMask, Image};
use crate::segmentation::MatchabilityMap;

pub const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Loads a PNG or PGM file as a luminance image in `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let unreadable = |reason: String| Error::Unreadable {
        path: path.to_path_buf(),
        reason,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| unreadable(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
        });
    }
    let decoded = reader.decode().map_err(|e| match e {
        ImageError::Unsupported(_) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
        },
        other => unreadable(other.to_string()),
    })?;
    Ok(to_luminance(&decoded))
}

fn to_luminance(img: &DynamicImage) -> Image {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = if img.color().has_color() {
        img.to_rgb32f()
            .pixels()
            .map(|p| {
                let y = LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2];
                (y as f64).clamp(0.0, 1.0)
            })
            .collect()
    } else {
        match img {
            DynamicImage::ImageLuma8(g) => g.pixels().map(|p| p[0] as f64 / 255.0).collect(),
            DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p[0] as f64 / 255.0).collect(),
            DynamicImage::ImageLuma16(g) => g.pixels().map(|p| p[0] as f64 / 65535.0).collect(),
            DynamicImage::ImageLumaA16(g) => g.pixels().map(|p| p[0] as f64 / 65535.0).collect(),
            other => other.to_luma32f().pixels().map(|p| (p[0] as f64).clamp(0.0, 1.0)).collect(),
        }
    };
    Image::new(w, h, data).expect("decoded pixels are finite")
}

fn quantize(img: &Image) -> Vec<u8> {
    img.data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn encode_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(source) => Error::io(path, source),
        other => Error::io(path, std::io::Error::other(other.to_string())),
    }
}

/// Writes an 8-bit PGM, binary (`P5`) or plain (`P2`).
pub fn write_pgm(img: &Image, path: impl AsRef<Path>, ascii: bool) -> Result<()> {
    let path = path.as_ref();
    let encoding = if ascii { SampleEncoding::Ascii } else { SampleEncoding::Binary };
    let mut out = create(path)?;
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(encoding))
        .write_image(&quantize(img), img.width() as u32, img.height() as u32, ExtendedColorType::L8)
        .map_err(|e| encode_error(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = GrayImage::from_raw(img.width() as u32, img.height() as u32, quantize(img))
        .expect("buffer matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| encode_error(path, e))
}

/// Writes `img` as PNG or binary PGM depending on the file extension.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("png") => write_png(img, path),
        Some("pgm") => write_pgm(img, path, false),
        _ => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
        }),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase)
}

/// Writes a mask as a PNG with values 0 and 255.
pub fn write_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_png(&mask.to_image(), path)
}

/// Reads a mask written by [`write_mask_png`] (any pixel above one half is set).
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_image(path)?;
    Ok(BinaryMask::from_fn(img.width(), img.height(), |x, y| img.get(x, y) > 0.5))
}

/// Min-max rescaling to `[0, 1]`; a constant image maps to zeros.
pub fn normalize(img: &Image) -> Image {
    let (lo, hi) = img.range();
    if hi > lo {
        img.map(|v| (v - lo) / (hi - lo))
    } else {
        img.map(|_| 0.0)
    }
}

/// Moves zero shift from index `(0, 0)` to the centre `(W/2, H/2)`.
pub fn fft_shift(surface: &Image) -> Image {
    surface.roll((surface.width() / 2) as i64, (surface.height() / 2) as i64)
}

/// Writes a normalized 8-bit PGM heat map.
pub fn write_heatmap_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&normalize(img), path, false)
}

/// Writes one CSV row per image row, values in shortest round-trip form.
pub fn write_grid_csv(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let mut text = String::with_capacity(img.len() * 8);
    for y in 0..img.height() {
        for x in 0..img.width() {
            if x > 0 {
                text.push(',');
            }
            write!(text, "{}", img.get(x, y)).unwrap();
        }
        text.push('\n');
    }
    write_text(path.as_ref(), &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub const SNR_CSV_HEADER: &str = "timestamp,method,region,snr";
pub const VERDICT_CSV_HEADER: &str = "dt,method,snr,shift_x,shift_y,present";

/// SNR series as CSV (`timestamp,method,region,snr`), one block per series
/// and method.
pub fn snr_series_csv(series: &[&SnrSeries]) -> String {
    let mut text = format!("{SNR_CSV_HEADER}\n");
    for s in series {
        for (m, values) in s.methods.iter().zip(&s.values) {
            for (t, v) in s.timestamps.iter().zip(values) {
                writeln!(text, "{t},{m},{},{v}", s.region.tag()).unwrap();
            }
        }
    }
    text
}

pub fn write_snr_series_csv(series: &[&SnrSeries], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &snr_series_csv(series))
}

/// Verdicts as CSV (`dt,method,snr,shift_x,shift_y,present`), one row per
/// method; `present` repeats the pair's decision.
pub fn verdict_csv(verdicts: &[DetectionVerdict]) -> String {
    let mut text = format!("{VERDICT_CSV_HEADER}\n");
    for v in verdicts {
        for r in &v.per_method {
            writeln!(
                text,
                "{},{},{},{},{},{}",
                v.dt, r.method, r.snr, r.shift.0, r.shift.1, v.present
            )
            .unwrap();
        }
    }
    text
}

pub fn write_verdict_csv(verdicts: &[DetectionVerdict], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &verdict_csv(verdicts))
}

/// One frame listed in a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEntry {
    pub path: PathBuf,
    pub time: f64,
}

/// Reads `path<TAB>seconds` lines. Relative paths resolve against the
/// manifest's directory; blank lines and `#` comments are skipped.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<FrameEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let text = read_text(path)?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let parse_err = |reason: &str| Error::Parse {
            what: "manifest",
            path: path.to_path_buf(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let (file, secs) = line.rsplit_once('\t').ok_or_else(|| parse_err("expected path<TAB>seconds"))?;
        let time: f64 = secs
            .trim()
            .parse()
            .map_err(|_| parse_err("timestamp is not a number"))?;
        if !time.is_finite() {
            return Err(parse_err("timestamp is not finite"));
        }
        entries.push(FrameEntry {
            path: base.join(file.trim()),
            time,
        });
    }
    Ok(entries)
}

/// Writes a manifest with paths relative to its own directory.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[(String, f64)]) -> Result<()> {
    let mut text = String::new();
    for (file, t) in entries {
        writeln!(text, "{file}\t{t}").unwrap();
    }
    write_text(path.as_ref(), &text)
}

/// Frame file name used by scene directories, e.g. `frame_003_t1.500.pgm`.
pub fn frame_file_name(index: usize, time: f64, ext: &str) -> String {
    format!("frame_{index:03}_t{time:.3}.{ext}")
}

/// Reads the timestamp encoded as `_t<seconds>` just before the extension.
pub fn timestamp_from_file_name(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    let (_, t) = stem.rsplit_once("_t")?;
    t.parse().ok().filter(|v: &f64| v.is_finite())
}

/// One line of a ground-truth sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub frame: String,
    pub index: usize,
    pub time: f64,
    pub shift: (f64, f64),
    pub distortion: [[f64; 2]; 2],
    /// Mask file, relative to the sidecar's directory.
    pub mask: String,
}

pub const TRUTH_HEADER: &str = "# frame index time shift_x shift_y c00 c01 c10 c11 mask";

pub fn write_truth(path: impl AsRef<Path>, records: &[TruthRecord]) -> Result<()> {
    let mut text = format!("{TRUTH_HEADER}\n");
    for r in records {
        let c = r.distortion;
        writeln!(
            text,
            "{} {} {} {} {} {} {} {} {} {}",
            r.frame, r.index, r.time, r.shift.0, r.shift.1, c[0][0], c[0][1], c[1][0], c[1][1], r.mask
        )
        .unwrap();
    }
    write_text(path.as_ref(), &text)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<TruthRecord>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            what: "ground-truth sidecar",
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(parse_err(format!("expected 10 fields, found {}", fields.len())));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("field {} is not a number: {}", k + 1, fields[k])))
        };
        records.push(TruthRecord {
            frame: fields[0].to_string(),
            index: fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad frame index {}", fields[1])))?,
            time: num(2)?,
            shift: (num(3)?, num(4)?),
            distortion: [[num(5)?, num(6)?], [num(7)?, num(8)?]],
            mask: fields[9].to_string(),
        });
    }
    Ok(records)
}

impl TruthRecord {
    pub fn transform(&self) -> AffineTransform {
        AffineTransform::linear(self.distortion)
    }
}

/// Width of the white gutter between composite panels.
pub const COMPOSITE_GUTTER: usize = 4;

/// Two-by-two panel image: `f` and `g` on top, the matchability map (with
/// `-1` black and `1` white) and the mask below.
pub fn composite(f: &Image, g: &Image, map: &MatchabilityMap, mask: &BinaryMask) -> Image {
    let (w, h) = f.dims();
    let gap = COMPOSITE_GUTTER;
    let mut out = Image::filled(2 * w + gap, 2 * h + gap, 1.0);
    let map_img = map.to_image().map(|v| (v + 1.0) / 2.0);
    let mask_img = mask.to_image();
    let panels = [(f, 0, 0), (g, w + gap, 0), (&map_img, 0, h + gap), (&mask_img, w + gap, h + gap)];
    for (panel, ox, oy) in panels {
        for y in 0..panel.height().min(h) {
            for x in 0..panel.width().min(w) {
                out.set(ox + x, oy + y, panel.get(x, y).clamp(0.0, 1.0));
            }
        }
    }
    out
}

pub fn write_composite(
    path: impl AsRef<Path>,
    f: &Image,
    g: &Image,
    map: &MatchabilityMap,
    mask: &BinaryMask,
) -> Result<()> {
    write_png(&composite(f, g, map, mask), path)
}
