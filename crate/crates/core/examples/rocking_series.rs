//! SNR over time for a boat rocking in place, against the rocking angle.
//! The unfocused methods dip whenever the boat swings away from its first
//! pose; the focused ones stay above the sea threshold.
//!
//! ```bash
//! cargo run --release --example rocking_series
//! ```

use focorr::correlation::Method;
use focorr::detection::{snr_series, DetectionConfig};
use focorr::synth::{generate, rocking_angle, rocking_poses, SceneSpec};

fn main() -> focorr::error::Result<()> {
    let (amplitude, period, fps) = (5f64.to_radians(), 4.0, 4.0);
    let poses = rocking_poses(amplitude, period, fps, 8.0)?;
    let scene = generate(&SceneSpec::centered_with_poses(256, 256, 3, &poses, fps))?;
    let cfg = DetectionConfig::default();
    let series = snr_series(&scene.frames, scene.timestamps(), &cfg, None)?;

    print!("{:>6} {:>7}", "t", "angle");
    for m in Method::SERIES {
        print!(" {:>20}", m.name());
    }
    println!();
    for (k, t) in series.timestamps.iter().enumerate() {
        print!("{t:>6.2} {:>7.2}", rocking_angle(amplitude, period, *t).to_degrees());
        for row in &series.values {
            print!(" {:>20.2}", row[k]);
        }
        println!();
    }
    Ok(())
}
