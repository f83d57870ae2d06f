//! How often INT8 normalization lands on ±128 when computed in low precision.

use fmtlab::empirics::{stability_experiment, PrecisionKind};

fn main() -> fmtlab::Result<()> {
    for p in [PrecisionKind::Bf16, PrecisionKind::Fp16, PrecisionKind::Fp32] {
        let r = stability_experiment(1024, p, 0)?;
        println!(
            "{:<5} |code| = 128 in {:>7.4}% of elements ({} positive, {} negative)",
            p.name(),
            100.0 * r.ratio,
            r.count_pos_128,
            r.count_neg_128
        );
    }
    Ok(())
}
