use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`; rows are batch samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks equally sized rows. An empty slice yields a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has length {}, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn row_vector(values: &[f64]) -> Self {
        Self { rows: 1, cols: values.len(), data: values.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a zero-width matrix still has `rows` empty rows.
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "cannot concatenate {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix { rows: self.rows, cols, data })
    }

    /// Columns `[start, end)` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Matrix {
        let cols = end - start;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..end]);
        }
        Matrix { rows: self.rows, cols, data }
    }
}

/// `out = x · wᵀ + bias`, with `x: (b, in)`, `w: (out, in)` row-major.
pub(crate) fn affine(x: &Matrix, w: &[f64], bias: &[f64], out_dim: usize) -> Matrix {
    let (b, n_in) = (x.rows, x.cols);
    let mut out = Matrix::zeros(b, out_dim);
    for r in 0..b {
        out.row_mut(r).copy_from_slice(bias);
    }
    if b > 0 && n_in > 0 && out_dim > 0 {
        // SAFETY: pointers come from slices whose lengths match the stated
        // dimensions and strides.
        unsafe {
            matrixmultiply::dgemm(
                b,
                n_in,
                out_dim,
                1.0,
                x.data.as_ptr(),
                n_in as isize,
                1,
                w.as_ptr(),
                1,
                n_in as isize,
                1.0,
                out.data.as_mut_ptr(),
                out_dim as isize,
                1,
            );
        }
    }
    out
}

/// Accumulates `dw += gᵀ · x` where `g: (b, out)`, `x: (b, in)`, `dw: (out, in)`.
pub(crate) fn accumulate_weight_grad(g: &Matrix, x: &Matrix, dw: &mut [f64]) {
    let (b, n_out, n_in) = (g.rows, g.cols, x.cols);
    if b == 0 || n_out == 0 || n_in == 0 {
        return;
    }
    // SAFETY: see `affine`.
    unsafe {
        matrixmultiply::dgemm(
            n_out,
            b,
            n_in,
            1.0,
            g.data.as_ptr(),
            1,
            n_out as isize,
            x.data.as_ptr(),
            n_in as isize,
            1,
            1.0,
            dw.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
}

/// `g · w` with `g: (b, out)` and `w: (out, in)`, giving `(b, in)`.
pub(crate) fn input_grad(g: &Matrix, w: &[f64], n_in: usize) -> Matrix {
    let (b, n_out) = (g.rows, g.cols);
    let mut out = Matrix::zeros(b, n_in);
    if b == 0 || n_out == 0 || n_in == 0 {
        return out;
    }
    // SAFETY: see `affine`.
    unsafe {
        matrixmultiply::dgemm(
            b,
            n_out,
            n_in,
            1.0,
            g.data.as_ptr(),
            n_out as isize,
            1,
            w.as_ptr(),
            n_in as isize,
            1,
            0.0,
            out.data.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
    out
}
