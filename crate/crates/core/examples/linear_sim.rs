//! Forward and backward GEMMs of a linear layer with quantized operands.

use fmtlab::empirics::CorpusSpec;
use fmtlab::quant::{linear_layer_sim, LinearSimConfig, RotationSpec};

fn main() -> fmtlab::Result<()> {
    let gen = |r, c, i| CorpusSpec::new(3, r, c, 0).tensor(i);
    let (x, w, dy) = (gen(64, 256, 0)?, gen(256, 128, 1)?, gen(64, 128, 2)?);
    let spec = fmtlab::lookup_format("NVINT4")?;

    for cfg in [
        LinearSimConfig::default(),
        LinearSimConfig::default().with_rotation(RotationSpec::new(16, 3)),
    ] {
        let r = linear_layer_sim(&x, &w, &dy, &spec, &cfg)?;
        println!("rotation: {}", cfg.rotation.is_some());
        for s in &r.sites {
            println!(
                "  ({}) {:<4} axis {}  QSNR {:6.2} dB  model {:6.2} dB  kappa {:.2}",
                s.number, s.operand, s.axis, s.qsnr_db, s.predicted_qsnr_db, s.mean_kappa
            );
        }
        println!(
            "  Y {:.2} dB, dX {:.2} dB, dW {:.2} dB",
            r.y_qsnr_db, r.dx_qsnr_db, r.dw_qsnr_db
        );
    }
    Ok(())
}
