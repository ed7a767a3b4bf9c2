use rand::Rng;

use crate::error::{Error, Result};
use crate::expand::NormalizedAdjacency;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Sparse-dense product `Ā · X`.
pub fn spmm<T: Scalar>(a: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.n() != x.rows() {
        return Err(Error::dims("spmm", a.n(), x.rows()));
    }
    let (row_ptr, cols, vals) = a.raw();
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for u in 0..a.n() {
        let out_row = out.row_mut(u);
        for idx in row_ptr[u]..row_ptr[u + 1] {
            let w = vals[idx];
            for (o, &xv) in out_row.iter_mut().zip(x.row(cols[idx])) {
                *o += w * xv;
            }
        }
    }
    Ok(out)
}

pub fn relu<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| v.max(T::zero()))
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

pub fn log_softmax_rows<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    out
}

/// Glorot/Xavier uniform initialisation in `±sqrt(6/(rows+cols))`.
pub fn glorot_init<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-limit..limit)))
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// `1/(1−rate)`.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut R,
) -> Result<DenseMatrix<T>> {
    check_rate(rate)?;
    let keep = T::lit(1.0 / (1.0 - rate));
    Ok(DenseMatrix::from_fn(rows, cols, |_, _| {
        if rate > 0.0 && rng.random::<f64>() < rate {
            T::zero()
        } else {
            keep
        }
    }))
}

/// Applies inverted dropout when `training` is set; identity otherwise.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(
    x: &DenseMatrix<T>,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<DenseMatrix<T>> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask = dropout_mask(x.rows(), x.cols(), rate, rng)?;
    x.hadamard(&mask)
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {rate} not in [0, 1)")));
    }
    Ok(())
}
