//! Gate-level area and energy of single-format MAC arrays.

use fmtlab::hwcost::{format_cost, CellFactors, Gate};

fn main() -> fmtlab::Result<()> {
    let cells = CellFactors::default();
    for name in [
        "MXINT8", "MXFP8", "MXINT6", "MXFP6", "MXINT4", "MXFP4", "NVINT4", "NVFP4",
    ] {
        let r = format_cost(&fmtlab::lookup_format(name)?, &cells)?;
        println!(
            "{name:<7} area {:>9.1} energy {:>9.1} per lane {:>7.1}",
            r.area_total, r.energy_total, r.area_per_lane
        );
    }

    let cheap_fa = cells.clone().set(Gate::Fa, 0.6, 0.6);
    let r = format_cost(&fmtlab::lookup_format("MXFP8")?, &cheap_fa)?;
    println!("\nMXFP8 with a cheaper full adder: area {:.1}", r.area_total);
    for b in &r.breakdown {
        println!("  {:?}: {:.1}", b.block, b.area);
    }
    Ok(())
}
