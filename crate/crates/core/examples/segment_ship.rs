//! Detects a ship in a generated scene, segments it from the matchability
//! map and writes the composite figure.
//!
//! ```bash
//! cargo run --release --example segment_ship -- /tmp/segment
//! ```

use std::path::PathBuf;

use focorr::detection::{detect, DetectionConfig};
use focorr::image::BinaryMask;
use focorr::io::{write_composite, write_mask_png};
use focorr::segmentation::{align, matchability_aligned, segment, SegmentConfig};
use focorr::synth::{generate, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "segment_out".into()));
    std::fs::create_dir_all(&out)?;

    let scene = generate(&SceneSpec::default())?;
    let (f, g) = (&scene.frames[0], &scene.frames[2]);
    let verdict = detect(f, g, scene.timestamps()[2], &DetectionConfig::default())?;
    println!("present={} shift={:?}", verdict.present, verdict.peak_shift);

    let aligned = align(g, verdict.peak_shift)?;
    let map = matchability_aligned(f, &aligned)?;
    let mask = segment(&map, &SegmentConfig::default())?;
    let truth = &scene.truth.masks[0];
    println!("mask pixels={} truth pixels={} iou={:.3}", mask.count(), truth.count(), mask.iou(truth)?);
    let sea = BinaryMask::from_fn(map.width(), map.height(), |x, y| !truth.get(x, y));
    if let (Some(boat), Some(sea)) = (map.mean_over(truth), map.mean_over(&sea)) {
        println!("mean matchability: boat={boat:.3} sea={sea:.3}");
    }

    write_mask_png(&mask, out.join("mask.png"))?;
    write_composite(out.join("composite.png"), f, &aligned.image, &map, &mask)?;
    println!("wrote {}", out.display());
    Ok(())
}
