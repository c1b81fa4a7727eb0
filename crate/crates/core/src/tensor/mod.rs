//! Dense row-major tensors, the handful of kernels the model needs, and a
//! small reverse-mode tape over them.
//!
//! Everything is generic over [`Real`] so the same kernels run in `f32` for
//! training and inference and in `f64` for finite-difference gradient checks.

mod adam;
mod gradcheck;
pub mod ops;
mod tape;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

use crate::error::{Error, Result};

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, TieSkip};
pub use tape::{GradTape, Gradients, Var};

/// Scalar element type.
pub trait Real:
    Float + Default + Debug + AddAssign + SubAssign + MulAssign + Sum + Send + Sync + 'static
{
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Shape-tagged row-major array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        check_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim("tensor", "data length", expected, data.len()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        debug_assert!(shape.iter().all(|&s| s >= 1), "zero-sized axis in {shape:?}");
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); len],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let len: usize = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..len).map(&mut f).collect(),
        }
    }

    pub fn vector(data: Vec<T>) -> Self {
        Self {
            shape: vec![data.len().max(1)],
            data: if data.is_empty() { vec![T::zero()] } else { data },
        }
    }

    pub fn scalar(v: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::dim("from_rows", "columns", cols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::new(vec![rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
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

    /// Size of the leading axis.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Size of the trailing axis.
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap()
    }

    /// Product of all axes but the first.
    pub fn row_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let w = self.row_len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let w = self.row_len();
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn scalar_value(&self) -> T {
        self.data[0]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        check_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::dim("reshape", "element count", self.data.len(), expected));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::lit(x.to_f64())).collect(),
        }
    }

    /// Keeps only the leading-axis entries whose index is not in `remove`.
    pub(crate) fn drop_rows(&self, remove: &[bool]) -> Self {
        let w = self.row_len();
        let mut data = Vec::with_capacity(self.data.len());
        for (i, chunk) in self.data.chunks(w).enumerate() {
            if !remove[i] {
                data.extend_from_slice(chunk);
            }
        }
        let mut shape = self.shape.clone();
        shape[0] = data.len() / w;
        Self { shape, data }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::Config("tensor shape must have at least one axis".into()));
    }
    if let Some(pos) = shape.iter().position(|&s| s == 0) {
        return Err(Error::Config(format!("tensor axis {pos} has size 0")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_data_length() {
        assert!(matches!(
            Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_zero_axis() {
        assert!(matches!(Tensor::<f32>::new(vec![2, 0], vec![]), Err(Error::Config(_))));
    }

    #[test]
    fn drop_rows_keeps_order() {
        let t = Tensor::<f32>::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let kept = t.drop_rows(&[false, true, false]);
        assert_eq!(kept.shape(), &[2, 2]);
        assert_eq!(kept.data(), &[1.0, 2.0, 5.0, 6.0]);
    }
}
