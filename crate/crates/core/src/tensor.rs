//! Dense row-major matrices, vectors, and the elementwise activations.
//!
//! Public operations check shapes and return [`Error::Shape`] on mismatch.
//! The `*_acc` kernels used on the training hot path only `debug_assert!`
//! their shapes; callers validate once at the API boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![T::zero(); len],
        }
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        if self.len() != other.len() {
            return Err(Error::shape(
                "dot",
                format!("[{}]", self.len()),
                format!("[{}]", other.len()),
            ));
        }
        Ok(dot(&self.data, &other.data))
    }

    /// `a·self + b·other`
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::shape(
                "axpby",
                format!("[{}]", self.len()),
                format!("[{}]", other.len()),
            ));
        }
        Ok(Self::from_vec(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> std::ops::Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T: Scalar> From<Vec<T>> for Vector<T> {
    fn from(data: Vec<T>) -> Self {
        Self::from_vec(data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::from_vec",
                format!("{rows}x{cols}"),
                format!("data of length {}", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("row 0 of length {cols}"),
                    format!("row {i} of length {}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matvec(&self, v: &Vector<T>) -> Result<Vector<T>> {
        if self.cols != v.len() {
            return Err(Error::shape(
                "matvec",
                self.shape_str(),
                format!("[{}]", v.len()),
            ));
        }
        let mut out = vec![T::zero(); self.rows];
        self.matvec_acc(v.as_slice(), &mut out);
        Ok(Vector::from_vec(out))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape("matmul", self.shape_str(), other.shape_str()));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                axpy(self.get(r, k), other.row(k), out_row);
            }
        }
        Ok(out)
    }

    /// Largest absolute entry of `MᵀM − I` (or `MMᵀ − I` when the matrix is
    /// wide), i.e. the deviation of the smaller Gram matrix from identity.
    pub fn gram_deviation(&self) -> T {
        let gram = if self.rows >= self.cols {
            self.transpose().matmul(self)
        } else {
            self.matmul(&self.transpose())
        }
        .expect("transpose shapes always chain");
        let n = gram.rows;
        let mut worst = T::zero();
        for r in 0..n {
            for c in 0..n {
                let target = if r == c { T::one() } else { T::zero() };
                worst = worst.max((gram.get(r, c) - target).abs());
            }
        }
        worst
    }

    /// `out += M·x`
    #[inline]
    pub(crate) fn matvec_acc(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            *o = *o + dot(row, x);
        }
    }

    /// `out += Mᵀ·y`
    #[inline]
    pub(crate) fn matvec_t_acc(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (&yr, row) in y.iter().zip(self.data.chunks_exact(self.cols.max(1))) {
            if yr != T::zero() {
                axpy(yr, row, out);
            }
        }
    }

    /// `M += a·bᵀ`
    #[inline]
    pub(crate) fn add_outer(&mut self, a: &[T], b: &[T]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (&ar, row) in a.iter().zip(self.data.chunks_exact_mut(self.cols.max(1))) {
            if ar != T::zero() {
                axpy(ar, b, row);
            }
        }
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] = acc[0] + x[0] * y[0];
        acc[1] = acc[1] + x[1] * y[1];
        acc[2] = acc[2] + x[2] * y[2];
        acc[3] = acc[3] + x[3] * y[3];
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a·x`
#[inline]
pub(crate) fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

/// A sequence of equal-width feature vectors, stored contiguously by time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Sequence<T> {
    pub fn from_flat(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::shape(
                "Sequence::from_flat",
                format!("width {dim}"),
                format!("data of length {}", data.len()),
            ));
        }
        Ok(Self { dim, data })
    }

    /// One-dimensional sequence, e.g. a raw void-fraction signal.
    pub fn from_scalars<I: IntoIterator<Item = f64>>(values: I) -> Self {
        Self {
            dim: 1,
            data: values.into_iter().map(T::of).collect(),
        }
    }

    pub fn from_vectors(steps: &[Vector<T>]) -> Result<Self> {
        let dim = steps.first().ok_or(Error::Empty("sequence"))?.len();
        let mut data = Vec::with_capacity(dim * steps.len());
        for (t, v) in steps.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::shape(
                    "Sequence::from_vectors",
                    format!("step 0 of width {dim}"),
                    format!("step {t} of width {}", v.len()),
                ));
            }
            data.extend_from_slice(v.as_slice());
        }
        Self::from_flat(dim, data)
    }

    pub(crate) fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn step(&self, t: usize) -> &[T] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub(crate) fn step_mut(&mut self, t: usize) -> &mut [T] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn last(&self) -> Option<&[T]> {
        (!self.is_empty()).then(|| self.step(self.len() - 1))
    }

    pub fn to_vectors(&self) -> Vec<Vector<T>> {
        self.data
            .chunks_exact(self.dim)
            .map(|s| Vector::from_vec(s.to_vec()))
            .collect()
    }
}

/// Logistic sigmoid, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub fn tanh<T: Scalar>(x: T) -> T {
    x.tanh()
}

#[inline]
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

pub fn softmax<T: Scalar>(logits: &Vector<T>) -> Result<Vector<T>> {
    if logits.is_empty() {
        return Err(Error::Empty("softmax input"));
    }
    Ok(Vector::from_vec(softmax_slice(logits.as_slice())))
}

pub(crate) fn softmax_slice<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
