//! Randomized Hadamard rotations applied block-wise along the reduction axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub dim: usize,
    pub seed: u64,
}

impl RotationSpec {
    pub fn new(dim: usize, seed: u64) -> Self {
        RotationSpec { dim, seed }
    }
}

/// `R = H · D / sqrt(dim)` with `H` the Sylvester Hadamard matrix and `D` a
/// seeded diagonal of random signs.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    signs: Vec<f64>,
    norm: f64,
}

impl Rotation {
    pub fn new(spec: &RotationSpec) -> Result<Self> {
        check_dim(spec.dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let signs = (0..spec.dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Ok(Rotation {
            signs,
            norm: 1.0 / (spec.dim as f64).sqrt(),
        })
    }

    /// Rotation with an explicit sign diagonal.
    pub fn with_signs(signs: Vec<f64>) -> Result<Self> {
        check_dim(signs.len())?;
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::config("rotation signs must be +1 or -1"));
        }
        let norm = 1.0 / (signs.len() as f64).sqrt();
        Ok(Rotation { signs, norm })
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    /// Dense `R`, row-major.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| sylvester_entry(i, j) * self.signs[j] * self.norm)
                    .collect()
            })
            .collect()
    }

    /// `v ← Rᵀ v`, i.e. the row-vector product `vᵀ R` used for `X·R` and `Rᵀ·W`.
    pub fn rotate(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        fwht(v);
        for (x, s) in v.iter_mut().zip(&self.signs) {
            *x *= s * self.norm;
        }
    }

    /// `v ← R v`, the inverse of [`Rotation::rotate`].
    pub fn unrotate(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        for (x, s) in v.iter_mut().zip(&self.signs) {
            *x *= s;
        }
        fwht(v);
        for x in v.iter_mut() {
            *x *= self.norm;
        }
    }

    /// Rotates every consecutive `dim`-sized chunk of `line`.
    pub fn rotate_blocks(&self, line: &mut [f64]) {
        for chunk in line.chunks_exact_mut(self.dim()) {
            self.rotate(chunk);
        }
    }

    pub fn unrotate_blocks(&self, line: &mut [f64]) {
        for chunk in line.chunks_exact_mut(self.dim()) {
            self.unrotate(chunk);
        }
    }
}

/// Dense rotation matrix for `spec`.
pub fn hadamard_matrix(spec: &RotationSpec) -> Result<Vec<Vec<f64>>> {
    Ok(Rotation::new(spec)?.matrix())
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::config(format!(
            "rotation dimension must be a power of two, got {dim}"
        )));
    }
    Ok(())
}

fn sylvester_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// In-place unnormalized Walsh-Hadamard transform (Sylvester ordering).
fn fwht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_case() {
        let r = Rotation::with_signs(vec![1.0, 1.0]).unwrap();
        let m = r.matrix();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(m, vec![vec![s, s], vec![s, -s]]);
        let mut v = [1.0, 1.0];
        r.rotate(&mut v);
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn orthonormal_32() {
        let m = hadamard_matrix(&RotationSpec::new(32, 7)).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let dot: f64 = (0..32).map(|k| m[k][i] * m[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-6, "RᵀR[{i}][{j}] = {dot}");
            }
        }
    }

    #[test]
    fn fast_path_matches_dense_matrix() {
        let r = Rotation::new(&RotationSpec::new(16, 3)).unwrap();
        let m = r.matrix();
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut fast = v.clone();
        r.rotate(&mut fast);
        for j in 0..16 {
            let dense: f64 = (0..16).map(|i| v[i] * m[i][j]).sum();
            assert!((fast[j] - dense).abs() < 1e-12);
        }
        r.unrotate(&mut fast);
        for (a, b) in fast.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(matches!(
            Rotation::new(&RotationSpec::new(24, 0)),
            Err(Error::Config(_))
        ));
        assert!(Rotation::new(&RotationSpec::new(0, 0)).is_err());
    }

    #[test]
    fn seeded_signs_are_deterministic() {
        let a = Rotation::new(&RotationSpec::new(32, 11)).unwrap();
        let b = Rotation::new(&RotationSpec::new(32, 11)).unwrap();
        let c = Rotation::new(&RotationSpec::new(32, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn preserves_block_rms() {
        let r = Rotation::new(&RotationSpec::new(32, 5)).unwrap();
        let v: Vec<f64> = (0..32).map(|i| if i == 4 { 10.0 } else { (i as f64).cos() }).collect();
        let mut w = v.clone();
        r.rotate(&mut w);
        let e0: f64 = v.iter().map(|x| x * x).sum();
        let e1: f64 = w.iter().map(|x| x * x).sum();
        assert!(((e1 - e0) / e0).abs() < 1e-6);
    }
}
