//! Dense complex linear algebra shared by the rest of the crate.

mod eig;
mod expm;
mod matrix;

pub use eig::{eig_hermitian, NrcClass, SpectralDecomp, DEFAULT_EPS_DEG, DEFAULT_EPS_RES};
pub use expm::{expm, expm_i_hermitian};
pub(crate) use expm::scale_columns;
pub use matrix::{hs_inner, kron, kron_all, partial_trace, ComplexMatrix, C64, I, ONE, ZERO};

use rand::Rng;
use rand_distr::StandardNormal;

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// GUE-like Hermitian matrix with unit-scale entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = random_matrix(rng, d, d);
    (&g + &g.adjoint()).scale_re(0.5)
}

/// Haar-random unitary: Gram-Schmidt on a complex Gaussian matrix, which
/// is QR with a positive diagonal in R.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let mut q = random_matrix(rng, d, d);
    orthonormalize_columns(&mut q);
    q
}

/// Modified Gram-Schmidt over columns, in place. Returns the number of
/// columns that survived (columns below 1e-12 in norm after projection are
/// zeroed).
pub(crate) fn orthonormalize_columns(q: &mut ComplexMatrix) -> usize {
    let (rows, cols) = (q.rows(), q.cols());
    let mut kept = 0;
    for c in 0..cols {
        let mut v = q.column(c);
        for prev in 0..c {
            let u = q.column(prev);
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for r in 0..rows {
                v[r] -= proj * u[r];
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|z| *z /= norm);
            kept += 1;
        } else {
            v.iter_mut().for_each(|z| *z = ZERO);
        }
        q.set_column(c, &v);
    }
    kept
}

/// Re-orthonormalises a nearly unitary matrix (polar-like cleanup by
/// Gram-Schmidt).
pub fn reunitarize(u: &ComplexMatrix) -> ComplexMatrix {
    let mut q = u.clone();
    orthonormalize_columns(&mut q);
    q
}
