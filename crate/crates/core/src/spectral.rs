//! Spectra of cell Hamiltonians.
//!
//! Two independent routes are provided: a cyclic complex Jacobi solver for
//! any dense Hermitian matrix ([`eigh`]) and the discrete-Fourier closed form
//! for circulant generators ([`circulant_spectrum`]). [`krylov_reduce`] maps
//! the dynamics of a given initial state onto its Krylov subspace.

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::graphs::{circulant_first_row, Hamiltonian, HERMITIAN_TOL};
use crate::linalg::{
    dagger, hermiticity_defect, inner, max_abs, vector_norm, CMatrix, CVector, C64,
};

/// Relative width of a degeneracy group.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this
/// fraction of `‖H‖_F`.
pub const JACOBI_OFF_RTOL: f64 = 1e-12;

/// Default Gram–Schmidt residual terminating a Krylov reduction.
pub const KRYLOV_TOL: f64 = 1e-10;

/// Ascending eigenvalues with matching eigenvector columns and their
/// partition into degeneracy groups.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Array1<f64>,
    eigenvectors: CMatrix,
    groups: Vec<Range<usize>>,
    degeneracy_tol: f64,
}

impl Spectrum {
    /// Sorts the pairs ascending (stable in the given order) and groups
    /// eigenvalues closer than `DEGENERACY_RTOL · max|E|`.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Self {
        let n = eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        let values = Array1::from_iter(order.iter().map(|&k| eigenvalues[k]));
        let mut vectors = CMatrix::zeros((eigenvectors.nrows(), n));
        for (dst, &src) in order.iter().enumerate() {
            vectors.column_mut(dst).assign(&eigenvectors.column(src));
        }
        let scale = values.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let degeneracy_tol = (DEGENERACY_RTOL * scale).max(1e-14);
        let groups = group_sorted(&values, degeneracy_tol);
        Self {
            eigenvalues: values,
            eigenvectors: vectors,
            groups,
            degeneracy_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    /// Column `k` is the eigenvector of eigenvalue `k`.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).to_owned()
    }

    /// Contiguous index ranges of (numerically) equal eigenvalues.
    pub fn degeneracy_groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    /// Index of the degeneracy group containing eigenvalue `k`.
    pub fn group_of(&self, k: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&k))
            .expect("index inside spectrum")
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn top_energy(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `E_max − E_min`.
    pub fn bandwidth(&self) -> f64 {
        self.top_energy() - self.ground_energy()
    }

    /// `max |E|`, the spectral norm of the generator.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.apply_function(|e| C64::new(e, 0.0))
    }

    /// `V diag(f(E)) V†`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
            let w = f(self.eigenvalues[k]);
            col.mapv_inplace(|z| z * w);
        }
        scaled.dot(&dagger(v))
    }

    /// `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.apply_function(|e| C64::from_polar(1.0, -e * t))
    }

    /// `V† M V`: the matrix expressed in the eigenbasis.
    pub fn to_energy_basis(&self, m: &CMatrix) -> CMatrix {
        dagger(&self.eigenvectors).dot(m).dot(&self.eigenvectors)
    }

    /// `V M V†`.
    pub fn from_energy_basis(&self, m: &CMatrix) -> CMatrix {
        self.eigenvectors.dot(m).dot(&dagger(&self.eigenvectors))
    }

    /// Orthogonal projector onto degeneracy group `g`.
    pub fn group_projector(&self, g: usize) -> CMatrix {
        let range = self.groups[g].clone();
        let v = self.eigenvectors.slice(ndarray::s![.., range]).to_owned();
        v.dot(&dagger(&v))
    }
}

fn group_sorted(values: &Array1<f64>, tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > tol {
            groups.push(start..k);
            start = k;
        }
    }
    groups
}

/// Dense eigendecomposition of a cell Hamiltonian.
pub fn eigh(h: &Hamiltonian) -> Result<Spectrum> {
    eigh_matrix(h.matrix())
}

/// Cyclic complex Jacobi eigensolver for a dense Hermitian matrix.
///
/// Deterministic: rotations follow a fixed row-major sweep order. At most
/// `100·N²` rotations are attempted.
pub fn eigh_matrix(m: &CMatrix) -> Result<Spectrum> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let defect = hermiticity_defect(m);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }

    // row-major working copies; symmetrized so the rotations act on an
    // exactly Hermitian matrix
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        a[i * n + i] = C64::new(m[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            let z = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
            a[i * n + j] = z;
            a[j * n + i] = z.conj();
        }
    }
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = C64::new(1.0, 0.0);
    }
    let norm_f = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = JACOBI_OFF_RTOL * norm_f;
    // entries this small cannot lift the off-diagonal norm above threshold
    let skip = 0.1 * threshold / n as f64;
    let cap = 100 * n * n;
    let mut rotations = 0usize;

    loop {
        if off_diagonal_norm(&a, n) <= threshold {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= skip {
                    continue;
                }
                if rotations >= cap {
                    return Err(Error::NoConvergence(cap));
                }
                rotate(&mut a, &mut v, n, p, q, apq, r);
                rotations += 1;
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    let values: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let vectors = Array2::from_shape_vec((n, n), v).expect("square buffer");
    Ok(Spectrum::from_parts(values, vectors))
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation annihilating `a[p,q]` (row-major `n×n`).
///
/// The 2×2 block is first made real by the phase `e^{−iφ}` on column `q`
/// (`a[p,q] = r e^{iφ}`), then a real symmetric Jacobi rotation is applied.
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize, apq: C64, r: f64) {
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let phase = apq / r;
    let zeta = (aqq - app) / (2.0 * r);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;

    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] restricted to (p, q)
    let g_pp = C64::new(cs, 0.0);
    let g_pq = C64::new(sn, 0.0);
    let g_qp = phase.conj() * -sn;
    let g_qq = phase.conj() * cs;

    // A ← A G (columns p, q)
    for row in a.chunks_exact_mut(n) {
        let akp = row[p];
        let akq = row[q];
        row[p] = akp * g_pp + akq * g_qp;
        row[q] = akp * g_pq + akq * g_qq;
    }
    // A ← G† A (rows p, q)
    let (lo, hi) = a.split_at_mut(q * n);
    let row_p = &mut lo[p * n..(p + 1) * n];
    let row_q = &mut hi[..n];
    for k in 0..n {
        let apk = row_p[k];
        let aqk = row_q[k];
        row_p[k] = g_pp.conj() * apk + g_qp.conj() * aqk;
        row_q[k] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[p * n + q] = C64::new(0.0, 0.0);
    a[q * n + p] = C64::new(0.0, 0.0);
    a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
    a[q * n + q] = C64::new(a[q * n + q].re, 0.0);

    // V ← V G
    for row in v.chunks_exact_mut(n) {
        let vkp = row[p];
        let vkq = row[q];
        row[p] = vkp * g_pp + vkq * g_qp;
        row[q] = vkp * g_pq + vkq * g_qq;
    }
}

/// Closed-form spectrum of the Hermitian circulant with first row `q`:
/// `E_l = Σ_m q_m ω^{ml}` with eigenvector components `ω^{ml}/√N`,
/// `ω = e^{2πi/N}`. Degenerate eigenvalues keep circulant-index order.
pub fn circulant_spectrum(first_row: &[C64]) -> Result<Spectrum> {
    let n = first_row.len();
    if n == 0 {
        return Err(Error::InvalidFirstRow("empty first row".into()));
    }
    let scale = first_row
        .iter()
        .fold(0.0f64, |a, z| a.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    let tol = HERMITIAN_TOL * scale;
    if first_row[0].im.abs() > tol {
        return Err(Error::InvalidFirstRow(format!(
            "diagonal entry {} is not real",
            first_row[0]
        )));
    }
    for j in 1..n {
        if (first_row[n - j] - first_row[j].conj()).norm() > tol {
            return Err(Error::InvalidFirstRow(format!(
                "q_{} is not the conjugate of q_{j}",
                n - j
            )));
        }
    }

    let omega = |k: usize| C64::from_polar(1.0, 2.0 * PI * ((k % n) as f64) / n as f64);
    let norm = 1.0 / (n as f64).sqrt();
    let mut values = Vec::with_capacity(n);
    for l in 0..n {
        let e: C64 = (0..n).map(|m| first_row[m] * omega(m * l)).sum();
        if e.im.abs() > 1e-12 * scale.max(1.0) * n as f64 {
            return Err(Error::InvalidFirstRow(format!(
                "eigenvalue {l} has imaginary part {}",
                e.im
            )));
        }
        values.push(e.re);
    }
    let vectors = Array2::from_shape_fn((n, n), |(m, l)| omega(m * l) * norm);
    Ok(Spectrum::from_parts(values, vectors))
}

/// Closed form when `h` is circulant, dense solver otherwise.
pub fn spectrum_of(h: &Hamiltonian) -> Result<Spectrum> {
    match circulant_first_row(h.matrix()) {
        Some(row) => circulant_spectrum(row.as_slice().expect("contiguous row")),
        None => eigh(h),
    }
}

/// Eigenphases in `(−π, π]` and eigenvectors (columns) of a unitary matrix.
///
/// The Hermitian part `(U + U†)/2` is diagonalized first; inside each
/// cluster of equal `cos θ` the anti-Hermitian part separates `±θ`.
pub fn unitary_eigen(u: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = u.nrows();
    let ud = dagger(u);
    let herm = (u + &ud).mapv(|z| z * 0.5);
    let anti = (u - &ud).mapv(|z| z * C64::new(0.0, -0.5));
    let first = eigh_matrix(&herm)?;
    let values = first.eigenvalues();
    let vecs = first.eigenvectors();

    let mut out = CMatrix::zeros((n, n));
    let mut start = 0;
    for k in 1..=n {
        if k < n && values[k] - values[k - 1] <= 1e-6 {
            continue;
        }
        let block = vecs.slice(ndarray::s![.., start..k]).to_owned();
        if k - start == 1 {
            out.column_mut(start).assign(&block.column(0));
        } else {
            let projected = dagger(&block).dot(&anti).dot(&block);
            let inner_spec = eigh_matrix(&projected)?;
            let rotated = block.dot(inner_spec.eigenvectors());
            for (i, col) in rotated.columns().into_iter().enumerate() {
                out.column_mut(start + i).assign(&col);
            }
        }
        start = k;
    }

    let mut phases = Vec::with_capacity(n);
    for col in out.columns() {
        let z = inner(col, u.dot(&col).view());
        let mut theta = z.arg();
        if theta <= -PI + 1e-12 {
            theta = PI;
        }
        phases.push(theta);
    }
    Ok((phases, out))
}

/// Krylov basis of an initial state and the tridiagonal generator on it.
#[derive(Debug, Clone)]
pub struct KrylovReduction {
    reduced_h: Array2<f64>,
    basis: CMatrix,
}

impl KrylovReduction {
    /// `⟨e_j|H|e_k⟩`, real tridiagonal.
    pub fn reduced_h(&self) -> &Array2<f64> {
        &self.reduced_h
    }

    /// Orthonormal basis vectors as columns; column 0 is the initial state.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_vector(&self, k: usize) -> CVector {
        self.basis.column(k).to_owned()
    }

    pub fn m(&self) -> usize {
        self.reduced_h.nrows()
    }

    pub fn reduced_h_complex(&self) -> CMatrix {
        self.reduced_h.mapv(|x| C64::new(x, 0.0))
    }

    /// `e^{−iHt}|ψ0⟩` computed in the reduced space and mapped back.
    pub fn propagate(&self, t: f64) -> Result<CVector> {
        let spec = eigh_matrix(&self.reduced_h_complex())?;
        let u = spec.propagator(t);
        Ok(self.basis.dot(&u.column(0)))
    }
}

/// Lanczos reduction of `h` on the Krylov space of `psi0`.
///
/// New directions are taken as `−w/‖w‖`, so couplings between consecutive
/// basis states come out non-positive (tight-binding sign of `H = −A`).
pub fn krylov_reduce(h: &Hamiltonian, psi0: &CVector, tol: f64) -> Result<KrylovReduction> {
    let hm = h.matrix();
    let n = hm.nrows();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi0.len(),
        });
    }
    let norm = vector_norm(psi0.view());
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!(
            "initial state has norm {norm}"
        )));
    }
    let mut basis: Vec<CVector> = vec![psi0.clone()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let k = basis.len() - 1;
        let mut w = hm.dot(&basis[k]);
        alpha.push(inner(basis[k].view(), w.view()).re);
        for _ in 0..2 {
            for b in &basis {
                let proj = inner(b.view(), w.view());
                w.zip_mut_with(b, |x, y| *x -= proj * y);
            }
        }
        let residual = vector_norm(w.view());
        if residual < tol || basis.len() == n {
            break;
        }
        beta.push(-residual);
        basis.push(w.mapv(|z| -z / residual));
    }
    let m = basis.len();
    let mut reduced = Array2::zeros((m, m));
    for k in 0..m {
        reduced[[k, k]] = alpha[k];
        if k + 1 < m {
            reduced[[k, k + 1]] = beta[k];
            reduced[[k + 1, k]] = beta[k];
        }
    }
    let mut bm = CMatrix::zeros((n, m));
    for (k, b) in basis.iter().enumerate() {
        bm.column_mut(k).assign(b);
    }
    Ok(KrylovReduction {
        reduced_h: reduced,
        basis: bm,
    })
}
