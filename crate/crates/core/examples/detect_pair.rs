//! Runs the detector on two image files, or on a generated pair when no
//! paths are given.
//!
//! ```bash
//! cargo run --release --example detect_pair
//! cargo run --release --example detect_pair -- a.png b.png 2.0
//! ```

use focorr::detection::{detect, DetectionConfig};
use focorr::io::load_image;
use focorr::synth::{generate, SceneSpec};

fn main() -> focorr::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (f, g, dt) = match args.as_slice() {
        [a, b, rest @ ..] => {
            let dt = rest.first().and_then(|s| s.parse().ok()).unwrap_or(2.0);
            (load_image(a)?, load_image(b)?, dt)
        }
        _ => {
            let mut scene = generate(&SceneSpec::pair(256, 256, 3, (10.0, -5.0), 3f64.to_radians(), 2.0))?;
            let g = scene.frames.pop().unwrap();
            (scene.frames.pop().unwrap(), g, 2.0)
        }
    };

    let v = detect(&f, &g, dt, &DetectionConfig::default())?;
    for r in &v.per_method {
        println!("{:<20} snr={:>6.2} shift={:?}", r.method.name(), r.snr, r.shift);
    }
    println!(
        "present={} low_confidence={} best={} shift={:?}",
        v.present,
        v.low_confidence,
        v.best_method.name(),
        v.peak_shift
    );
    Ok(())
}
