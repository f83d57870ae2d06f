//! Writes a tensor in each storage type and reads it back.

use fmtlab::io::{read_tensor_with_dtype, write_tensor, Dtype};
use fmtlab::Tensor;

fn main() -> fmtlab::Result<()> {
    let t = Tensor::from_fn(vec![2, 4], |i| 1.0 / (i as f64 + 3.0))?;
    let dir = std::env::temp_dir();
    for dt in [Dtype::F32, Dtype::F16, Dtype::Bf16] {
        let p = dir.join(format!("fmtlab_example_{dt:?}.ftnsr"));
        write_tensor(&t, &p, dt)?;
        let (back, got) = read_tensor_with_dtype(&p)?;
        println!("{got:?}: {:?}", back.data());
        let _ = std::fs::remove_file(p);
    }
    Ok(())
}
