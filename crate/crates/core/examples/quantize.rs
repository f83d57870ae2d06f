//! Quantizes one Gaussian tensor with every registered format.

use fmtlab::empirics::CorpusSpec;
use fmtlab::formats::standard_formats;
use fmtlab::quant::Quantizer;

fn main() -> fmtlab::Result<()> {
    let t = CorpusSpec::new(1, 64, 4096, 42).tensor(0)?;
    println!("{:<7} {:>9} {:>8}", "format", "QSNR dB", "mean rho");
    for spec in standard_formats() {
        let r = Quantizer::new(spec)?.quantize(&t, -1)?;
        let rho = r.mean_rho().map_or("-".to_string(), |r| format!("{r:.3}"));
        println!("{:<7} {:>9.2} {:>8}", spec.name, r.qsnr_db, rho);
    }
    Ok(())
}
