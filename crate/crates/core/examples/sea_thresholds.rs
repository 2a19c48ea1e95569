//! Calibrates `t_sea` and `snr_sea` from a boatless sequence and checks
//! them against the noise bound of the surface size.
//!
//! ```bash
//! cargo run --release --example sea_thresholds
//! ```

use focorr::detection::{estimate_thresholds, noise_bound, snr_series, DetectionConfig};
use focorr::synth::{generate, SceneSpec};

fn main() -> focorr::error::Result<()> {
    let spec = SceneSpec {
        sea_memory: 0.6,
        ..SceneSpec::default()
    }
    .without_boat();
    let scene = generate(&spec)?;
    let series = snr_series(&scene.frames, scene.timestamps(), &DetectionConfig::default(), None)?;

    for (t, v) in series.timestamps.iter().zip(series.envelope()) {
        println!("t={t:>5.1} max_snr={v:>6.2}");
    }
    let th = estimate_thresholds(&series)?;
    println!(
        "t_sea={} snr_sea={:.2} noise_bound={:.2}",
        th.t_sea,
        th.snr_sea,
        noise_bound(series.surface_pixels)
    );
    Ok(())
}
