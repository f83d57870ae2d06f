//! Block Hadamard rotation on data with one large outlier per block.

use fmtlab::empirics::{mean_block_kappa, CorpusSpec};
use fmtlab::quant::{Quantizer, RotationSpec};

fn main() -> fmtlab::Result<()> {
    let t = CorpusSpec::new(1, 64, 4096, 1).with_outliers(32, 12.0).tensor(0)?;
    let rot = RotationSpec::new(32, 7);

    println!(
        "mean block kappa: {:.3} plain, {:.3} rotated",
        mean_block_kappa(&t, -1, 32, None)?,
        mean_block_kappa(&t, -1, 32, Some(&rot))?
    );

    for name in ["MXINT4", "MXFP4", "MXINT8", "MXFP8"] {
        let spec = fmtlab::lookup_format(name)?;
        let plain = Quantizer::new(&spec)?.quantize(&t, -1)?.qsnr_db;
        let rotated = Quantizer::new(&spec)?
            .with_rotation(Some(&rot))?
            .quantize(&t, -1)?
            .qsnr_db;
        println!("{name:<7} {plain:>7.2} dB -> {rotated:>7.2} dB");
    }
    Ok(())
}
