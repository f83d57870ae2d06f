use serde::Serialize;

use crate::error::{Error, Result};

/// Dense row-major tensor of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::shape("tensors need at least one dimension"));
        }
        if shape.contains(&0) {
            return Err(Error::shape(format!("dimensions must be positive, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} holds {n} elements but {} values were given",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite value {} at flat index {i}", data[i])));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::new(shape, (0..n).map(&mut f).collect())
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    /// Builds a tensor that shares `self`'s shape; used for outputs of
    /// elementwise maps where finiteness is already guaranteed.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Tensor {
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Resolves a possibly negative axis index.
    pub fn resolve_axis(&self, axis: isize) -> Result<usize> {
        let rank = self.rank() as isize;
        let a = if axis < 0 { axis + rank } else { axis };
        if (0..rank).contains(&a) {
            Ok(a as usize)
        } else {
            Err(Error::config(format!(
                "axis {axis} is out of range for a rank-{rank} tensor"
            )))
        }
    }

    /// `(outer, len, inner)` such that flat index = `(o * len + i) * inner + j`.
    pub(crate) fn axis_geometry(&self, axis: usize) -> (usize, usize, usize) {
        let outer = self.shape[..axis].iter().product();
        let inner = self.shape[axis + 1..].iter().product();
        (outer, self.shape[axis], inner)
    }

    /// Every 1-D line along `axis`, gathered into contiguous buffers in
    /// (outer, inner) order.
    pub fn lines(&self, axis: usize) -> Vec<Vec<f64>> {
        let (outer, len, inner) = self.axis_geometry(axis);
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for j in 0..inner {
                let base = o * len * inner + j;
                out.push((0..len).map(|i| self.data[base + i * inner]).collect());
            }
        }
        out
    }

    /// Inverse of [`Tensor::lines`].
    pub(crate) fn reassemble_lines(&self, axis: usize, lines: &[Vec<f64>]) -> Self {
        let (outer, len, inner) = self.axis_geometry(axis);
        let mut data = vec![0.0; self.data.len()];
        for o in 0..outer {
            for j in 0..inner {
                let line = &lines[o * inner + j];
                let base = o * len * inner + j;
                for (i, v) in line.iter().enumerate() {
                    data[base + i * inner] = *v;
                }
            }
        }
        self.with_data(data)
    }

    /// Transpose of a rank-2 tensor.
    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        let mut data = vec![0.0; self.data.len()];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Tensor {
            shape: vec![c, r],
            data,
        })
    }

    pub fn matmul(&self, rhs: &Tensor) -> Result<Self> {
        let (m, k) = self.dims2()?;
        let (k2, n) = rhs.dims2()?;
        if k != k2 {
            return Err(Error::shape(format!(
                "cannot multiply {:?} by {:?}",
                self.shape, rhs.shape
            )));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b = &rhs.data[p * n..(p + 1) * n];
                for (o, bv) in row.iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        Ok(Tensor {
            shape: vec![m, n],
            data: out,
        })
    }

    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(Error::shape(format!("expected a matrix, got shape {:?}", self.shape))),
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}
