//! Closed-form QSNR curves and the crest factor where INT overtakes FP.

use fmtlab::theory::{crossover, qsnr_curve, standard_pairs, GaussianQsnrModel};

fn main() -> fmtlab::Result<()> {
    for pair in standard_pairs() {
        let r = crossover(&pair, 1.5, None)?;
        match r.kappa_star {
            Some(k) => println!("{:<14} kappa* = {k:.3}", pair.label()),
            None => println!("{:<14} no crossing in {:?}", pair.label(), r.bracket),
        }
    }

    println!("\nkappa  format  QSNR");
    for row in qsnr_curve(&standard_pairs()[3..], &[1.0, 2.0, 3.0, 4.0], 1.5) {
        println!("{:>5}  {:<6} {:6.2}", row.kappa, row.format, row.qsnr_db);
    }

    let p = GaussianQsnrModel::new(&fmtlab::lookup_format("MXFP8")?, 3.0, None, false)?.evaluate();
    println!("\n{}", serde_json::to_string_pretty(&p).expect("serializable"));
    Ok(())
}
