//! Measured QSNR of each INT/FP pair over a small seeded corpus.

use fmtlab::empirics::{mc_qsnr_scatter, CorpusSpec};
use fmtlab::theory::standard_pairs;

fn main() -> fmtlab::Result<()> {
    let corpus = CorpusSpec::new(32, 16, 1024, 0);
    for pair in standard_pairs() {
        let r = mc_qsnr_scatter(&pair, &corpus, None)?;
        println!(
            "{:<14} INT {:6.2} dB  FP {:6.2} dB  INT wins {:>5.1}%",
            pair.label(),
            r.mean_qsnr_int,
            r.mean_qsnr_fp,
            100.0 * r.win_rate
        );
    }
    Ok(())
}
