//! Fits cell factors so that chosen cost ratios hit target values.

use fmtlab::hwcost::{calibrate_cells, CellFactors, RatioTarget};

fn main() -> fmtlab::Result<()> {
    let targets: Vec<RatioTarget> = serde_json::from_str(
        r#"[
            {"numerator": "MXINT8", "denominator": "MXFP8", "metric": "area", "target": 0.79},
            {"numerator": "MXINT8", "denominator": "MXFP8", "metric": "energy", "target": 0.63},
            {"numerator": "NVINT4", "denominator": "NVFP4", "metric": "area", "target": 0.80},
            {"numerator": "mixed:int_reuse_2", "denominator": "mixed:fp_reuse", "metric": "area", "target": 0.85}
        ]"#,
    )
    .expect("valid targets");
    let r = calibrate_cells(&targets, &CellFactors::default(), 3000)?;
    for f in &r.ratios {
        println!(
            "{} / {} {:?}: target {:.3}, start {:.3}, fitted {:.3}",
            String::from(f.numerator.clone()),
            String::from(f.denominator.clone()),
            f.metric,
            f.target,
            f.initial,
            f.achieved
        );
    }
    println!("rms log error {:.4}", r.rms_log_error);
    println!("{}", serde_json::to_string_pretty(&r.cells).expect("serializable"));
    Ok(())
}
