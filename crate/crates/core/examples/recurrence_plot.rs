//! Distance (recurrence) plot of a synthetic accelerometer window, written
//! as a greyscale PGM image.
//!
//! `cargo run --release --example recurrence_plot [out.pgm]`

use wgad::data::{recurrence_series, synthetic_har, Activity};

fn main() -> wgad::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "recurrence.pgm".into());
    let windows = synthetic_har(1, 3);
    let walk = windows
        .iter()
        .find(|w| w.activity == Activity::Walking)
        .expect("one window per activity");
    let series: Vec<f64> = (0..walk.values.rows())
        .map(|t| walk.values.get(t, 0))
        .collect();
    let r = recurrence_series(&series)?;
    let max = r.data().iter().cloned().fold(0.0_f64, f64::max).max(1e-12);
    let t = r.rows();
    let mut pgm = format!("P2\n{t} {t}\n255\n").into_bytes();
    for i in 0..t {
        let line: Vec<String> = r
            .row(i)
            .iter()
            .map(|v| ((v / max) * 255.0).round().to_string())
            .collect();
        pgm.extend(line.join(" ").bytes());
        pgm.push(b'\n');
    }
    std::fs::write(&out, pgm)?;
    println!(
        "{t}x{t} plot of channel 0 ({}) written to {out}; max distance {max:.3}",
        walk.activity.name()
    );
    Ok(())
}
