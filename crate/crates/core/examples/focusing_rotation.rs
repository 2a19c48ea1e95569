//! Shows how the focusing strength `ε` trades peak sharpness for rotation
//! tolerance, and writes the focused first frame for inspection.
//!
//! ```bash
//! cargo run --release --example focusing_rotation -- /tmp/focused.png
//! ```

use focorr::correlation::surface_focused_phase;
use focorr::focusing::{focus_image, FocusConfig};
use focorr::io::{normalize, save_image};
use focorr::synth::{generate, SceneSpec};

fn main() -> focorr::error::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "focused.png".into());
    let scene = generate(&SceneSpec::pair(256, 256, 5, (4.0, -3.0), 5f64.to_radians(), 2.0))?;
    let (f, g) = (&scene.frames[0], &scene.frames[1]);

    for epsilon in [0.0, 0.02, 0.04, 0.06, 0.1, 0.15] {
        let s = surface_focused_phase(f, g, &FocusConfig::with_epsilon(epsilon))?;
        println!("epsilon={epsilon:<5} snr={:>6.2} peak={:?}", s.snr()?, s.peak_shift);
    }

    let focused = focus_image(f, &FocusConfig::default())?;
    save_image(&normalize(&focused), &out)?;
    println!("wrote {out}");
    Ok(())
}
