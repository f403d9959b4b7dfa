use super::matrix::{ComplexMatrix, C64};
use crate::error::{dim_mismatch, Error, Result};

// Degree-13 Pade coefficients and the matching scaling threshold.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a [13/13] Pade
/// approximant.
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(dim_mismatch("square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    if m.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("expm of non-finite matrix".into()));
    }
    let n = m.rows();
    let norm = m.one_norm();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale_re(0.5f64.powi(squarings));

    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = &PADE13;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> ComplexMatrix {
        let mut acc = a6.scale_re(c6);
        acc += &a4.scale_re(c4);
        acc += &a2.scale_re(c2);
        acc += &id.scale_re(c0);
        acc
    };

    let mut u_inner = a6.matmul(&lin(b[13], b[11], b[9], 0.0));
    u_inner += &lin(b[7], b[5], b[3], b[1]);
    let u = a.matmul(&u_inner);
    let mut v = a6.matmul(&lin(b[12], b[10], b[8], 0.0));
    v += &lin(b[6], b[4], b[2], b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// exp(i t h) for Hermitian `h`, computed from its eigendecomposition.
pub fn expm_i_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    h.ensure_hermitian()?;
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let w = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&e| C64::from_polar(1.0, t * e))
        .collect();
    Ok(scale_columns(&w, &phases).matmul(&w.adjoint()))
}

pub(crate) fn scale_columns(w: &ComplexMatrix, s: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(w.rows(), w.cols(), |r, c| w[(r, c)] * s[c])
}

fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = a.to_nalgebra().lu();
    let x = lu
        .solve(&b.to_nalgebra())
        .ok_or_else(|| Error::NumericalConsistency("singular Pade denominator".into()))?;
    Ok(ComplexMatrix::from_nalgebra(&x))
}
