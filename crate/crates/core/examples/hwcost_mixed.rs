//! Arrays that serve both 8-bit and 4-bit formats, with and without unit reuse.

use fmtlab::hwcost::{mixed_format_cost, CellFactors, MixedScheme};

fn main() -> fmtlab::Result<()> {
    let cells = CellFactors::default();
    println!(
        "{:<12} {:>8} {:>9} {:>9} {:>9}",
        "scheme", "area", "E 8-bit", "E 4-bit", "E mean"
    );
    for s in MixedScheme::ALL {
        let r = mixed_format_cost(s, &cells, 32)?;
        println!(
            "{:<12} {:>8.1} {:>9.1} {:>9.1} {:>9.1}",
            s.name(),
            r.area_total(),
            r.energy_8bit,
            r.energy_4bit,
            r.energy
        );
    }
    Ok(())
}
