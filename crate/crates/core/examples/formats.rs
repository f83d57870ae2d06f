//! Lists the registered formats and prints the E2M1 element grid.

use fmtlab::formats::{build_codebook, standard_formats, FpLayout};

fn main() -> fmtlab::Result<()> {
    for f in standard_formats() {
        let s = f.summary();
        let second = s.scale_2.as_deref().unwrap_or("-");
        println!(
            "{:<7} {:<5} block {:>2}  max {:>6}  scales {} / {}",
            s.name, s.element_name, f.block_size, s.max_value, s.scale_1, second
        );
    }

    let e2m1 = build_codebook(&FpLayout::e2m1())?;
    println!("\nE2M1 values: {:?}", e2m1.values());
    for x in [0.25, 0.75, 1.25, 2.5, 5.0, 9.0] {
        println!("  nearest({x}) = {}", e2m1.nearest(x));
    }
    Ok(())
}
