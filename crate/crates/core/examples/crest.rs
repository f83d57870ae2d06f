//! Crest-factor statistics for several block sizes, with and without outliers.

use fmtlab::empirics::{crest_factor_stats, CorpusSpec, PER_CHANNEL};

fn main() -> fmtlab::Result<()> {
    let clean = CorpusSpec::new(1, 64, 4096, 0).tensor(0)?;
    let spiky = CorpusSpec::new(1, 64, 4096, 0).with_outliers(128, 30.0).tensor(0)?;
    println!("{:>6} {:>14} {:>14}", "block", "median clean", "median spiky");
    for g in [16, 32, 64, 128, PER_CHANNEL] {
        let a = crest_factor_stats(&clean, -1, g, None)?;
        let b = crest_factor_stats(&spiky, -1, g, None)?;
        println!("{g:>6} {:>14.3} {:>14.3}", a.median, b.median);
    }
    Ok(())
}
