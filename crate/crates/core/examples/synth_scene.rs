//! Writes a synthetic sequence with its manifest and ground truth, ready to
//! feed to the `focorr` binary.
//!
//! ```bash
//! cargo run --release --example synth_scene -- /tmp/scene
//! cargo run --release --bin focorr -- detect --manifest /tmp/scene/manifest.tsv
//! ```

use std::path::PathBuf;

use focorr::image::distortion_norm;
use focorr::io::{frame_file_name, save_image, write_manifest};
use focorr::synth::{generate, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scene_out".into()));
    std::fs::create_dir_all(&out)?;

    let scene = generate(&SceneSpec::default())?;
    let mut entries = Vec::new();
    for (k, (frame, t)) in scene.frames.iter().zip(scene.timestamps()).enumerate() {
        let name = frame_file_name(k, *t, "png");
        save_image(frame, out.join(&name))?;
        println!(
            "{name} shift=({:.2}, {:.2}) distortion={:.3}",
            scene.truth.shifts[k].0,
            scene.truth.shifts[k].1,
            distortion_norm(&scene.truth.distortions[k])
        );
        entries.push((name, *t));
    }
    write_manifest(out.join("manifest.tsv"), &entries)?;
    println!("wrote {} frames to {}", entries.len(), out.display());
    Ok(())
}
