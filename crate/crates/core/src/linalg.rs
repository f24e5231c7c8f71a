//! Dense complex matrix helpers on top of nalgebra.
//!
//! Spinor blocks are at most 4x4 and lattice operators at most 256x256, so
//! everything is stored as `DMatrix<Complex64>` (column-major).

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(n: usize) -> Mat {
    Mat::zeros(n, n)
}

pub fn from_rows(n: usize, rows: &[C64]) -> Mat {
    assert_eq!(rows.len(), n * n);
    Mat::from_row_slice(n, n, rows)
}

pub fn diag(entries: &[C64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(entries))
}

/// Largest absolute entry.
pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn fro_norm(a: &Mat) -> f64 {
    libm::sqrt(a.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let h = a.adjoint() * a;
    let (vals, _) = hermitian_eigen(&h);
    libm::sqrt(vals.last().copied().unwrap_or(0.0).max(0.0))
}

/// `‖A − A†‖` in the max-entry norm.
pub fn hermiticity_defect(a: &Mat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// `‖U†U − 1‖` in the max-entry norm.
pub fn unitarity_defect(u: &Mat) -> f64 {
    max_abs(&(u.adjoint() * u - eye(u.nrows())))
}

/// Eigen-decomposition of the Hermitian part of `a`, ascending eigenvalues.
/// Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.nrows();
    let h = (a + a.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Spectral projector of a Hermitian matrix onto eigenvalues selected by `keep`.
pub fn spectral_projector(vals: &[f64], vecs: &Mat, keep: impl Fn(f64) -> bool) -> Mat {
    let n = vecs.nrows();
    let mut p = Mat::zeros(n, n);
    for (j, &v) in vals.iter().enumerate() {
        if keep(v) {
            let col = vecs.column(j);
            p += &col * col.adjoint();
        }
    }
    p
}

pub fn inverse(a: &Mat) -> Option<Mat> {
    a.clone().try_inverse()
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Generators met in this crate are `-i h H` with `‖h H‖` of order 0.1, where
/// a degree-14 series on the scaled matrix is exact to rounding.
pub fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.l1_norm()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale(scale);
    let mut term = eye(n);
    let mut sum = eye(n);
    for k in 1..=14 {
        term = &term * &x;
        term.scale_mut(1.0 / k as f64);
        sum += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(−i h A)` for a Hermitian 2×2 `A = a₀ + a⃗·σ⃗`, in closed form.
pub fn expm_hermitian2(h: f64, a: &Mat) -> Mat {
    let a0 = 0.5 * (a[(0, 0)].re + a[(1, 1)].re);
    let az = 0.5 * (a[(0, 0)].re - a[(1, 1)].re);
    let off = 0.5 * (a[(0, 1)] + a[(1, 0)].conj());
    let norm = libm::sqrt(az * az + off.norm_sqr());
    let (cs, sn) = (libm::cos(h * norm), libm::sin(h * norm));
    let sinc = if norm * h.abs() < 1e-8 { h } else { sn / norm };
    let p = C64::new(libm::cos(h * a0), -libm::sin(h * a0));
    let mi = C64::new(0.0, -sinc);
    Mat::from_row_slice(
        2,
        2,
        &[p * (cs + mi * az), p * mi * off, p * mi * off.conj(), p * (cs - mi * az)],
    )
}

/// Commutator `[a, b] = ab − ba`.
pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn trace(a: &Mat) -> C64 {
    a.trace()
}
