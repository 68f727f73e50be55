//! Dense complex matrix helpers shared by the physics modules.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Residual below which a Gram–Schmidt candidate is considered parallel to
/// the span built so far.
pub const PARALLEL_RESIDUAL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

/// `U ρ U†`.
pub fn conjugate_by(u: &CMatrix, rho: &CMatrix) -> CMatrix {
    u.dot(rho).dot(&dagger(u))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vector_norm(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn inner(a: ArrayView1<C64>, b: ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `|a⟩⟨b|`.
pub fn outer(a: ArrayView1<C64>, b: ArrayView1<C64>) -> CMatrix {
    let n = a.len();
    let m = b.len();
    Array2::from_shape_fn((n, m), |(i, j)| a[i] * b[j].conj())
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(dagger(u).dot(u) - identity(n)))
}

/// Phase-gauged operator overlap `|tr(A†B)| / N`; equals 1 exactly when the
/// two unitaries agree up to a global phase.
pub fn phase_fidelity(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows() as f64;
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc.norm() / n
}

/// Orthonormalizes `v` against the columns `basis[.., 0..count]` (two passes
/// of modified Gram–Schmidt). Returns the residual norm before normalization.
fn orthogonalize_into(basis: &CMatrix, count: usize, v: &mut CVector) -> f64 {
    for _ in 0..2 {
        for k in 0..count {
            let col = basis.column(k);
            let proj = inner(col, v.view());
            v.zip_mut_with(&col, |x, b| *x -= proj * b);
        }
    }
    vector_norm(v.view())
}

/// Completes the normalized `seed` to an orthonormal basis (returned as the
/// columns of a unitary matrix, column 0 = seed) by Gram–Schmidt over the
/// canonical basis vectors in index order, skipping candidates whose residual
/// falls below [`PARALLEL_RESIDUAL`].
pub fn complete_basis(seed: ArrayView1<C64>) -> CMatrix {
    let n = seed.len();
    let mut basis = CMatrix::zeros((n, n));
    let norm = vector_norm(seed);
    basis.column_mut(0).assign(&seed.mapv(|z| z / norm));
    let mut count = 1;
    for k in 0..n {
        if count == n {
            break;
        }
        let mut v = CVector::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        let residual = orthogonalize_into(&basis, count, &mut v);
        if residual < PARALLEL_RESIDUAL {
            continue;
        }
        v.mapv_inplace(|z| z / residual);
        basis.column_mut(count).assign(&v);
        count += 1;
    }
    basis
}

/// Haar-like random unitary: Gram–Schmidt on the columns of a complex
/// Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let raw = Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mut q = CMatrix::zeros((n, n));
        let mut ok = true;
        for k in 0..n {
            let mut v = raw.column(k).to_owned();
            let residual = orthogonalize_into(&q, k, &mut v);
            if residual < PARALLEL_RESIDUAL {
                ok = false;
                break;
            }
            v.mapv_inplace(|z| z / residual);
            q.column_mut(k).assign(&v);
        }
        if ok {
            return q;
        }
    }
}

/// Random normalized state vector.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v: CVector = Array1::from_shape_fn(n, |_| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = vector_norm(v.view());
    v.mapv(|z| z / norm)
}

/// `Σ_k |M_kj|²` for each column `j`.
pub fn column_norms_sqr(m: &CMatrix) -> Array1<f64> {
    m.map(|z| z.norm_sqr()).sum_axis(Axis(0))
}
