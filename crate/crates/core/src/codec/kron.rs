//! Literal vertex-domain filtering with dense Kronecker products.
//!
//! These build `nk × nD` operators explicitly and exist to cross-check the
//! spectral fast path on small instances; cost grows as `O(n²kD)` in memory.

use nalgebra::{DMatrix, DVector};

/// `Sˡ` by repeated multiplication, with `S⁰ = I`.
pub fn matrix_power(s: &DMatrix<f64>, power: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(s.nrows(), s.ncols());
    for _ in 0..power {
        out = &out * s;
    }
    out
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// `y = Σₗ (Sˡ ⊗ I_k)(I_n ⊗ Cₗ) vec(X̄)`, returned as the `k × n` matrix
/// whose column `i` is `yᵢ`.
pub fn kron_reduce(
    s: &DMatrix<f64>,
    reducing: &[DMatrix<f64>],
    xbar: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = s.nrows();
    let k = reducing[0].nrows();
    let x = vec_of(xbar);
    let eye_n = DMatrix::<f64>::identity(n, n);
    let eye_k = DMatrix::<f64>::identity(k, k);
    let mut y = DVector::zeros(n * k);
    for (l, c) in reducing.iter().enumerate() {
        let shift = matrix_power(s, l).kronecker(&eye_k);
        let local = eye_n.kronecker(c);
        y += shift * (local * &x);
    }
    DMatrix::from_column_slice(k, n, y.as_slice())
}

/// `x̂ = Σₘ (Sᵐ ⊗ I_D)(I_n ⊗ Bₘ) vec(Y)`, returned as `D × n` (centered).
pub fn kron_reconstruct(
    s: &DMatrix<f64>,
    taps: &[DMatrix<f64>],
    codes: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = s.nrows();
    let d = taps[0].nrows();
    let y = vec_of(codes);
    let eye_n = DMatrix::<f64>::identity(n, n);
    let eye_d = DMatrix::<f64>::identity(d, d);
    let mut x = DVector::zeros(n * d);
    for (m, b) in taps.iter().enumerate() {
        let shift = matrix_power(s, m).kronecker(&eye_d);
        let local = eye_n.kronecker(b);
        x += shift * (local * &y);
    }
    DMatrix::from_column_slice(d, n, x.as_slice())
}
