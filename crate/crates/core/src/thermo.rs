//! States, energies and ergotropy.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::graphs::{Hamiltonian, Topology, TopologySpec};
use crate::linalg::{
    conjugate_by, dagger, hermiticity_defect, inner, outer, trace, vector_norm, CMatrix, CVector,
    C64,
};
use crate::spectral::{eigh_matrix, spectrum_of, Spectrum};

pub const PURE_NORM_TOL: f64 = 1e-12;
pub const MIXED_HERMITIAN_TOL: f64 = 1e-10;
pub const MIXED_TRACE_TOL: f64 = 1e-10;
/// Density eigenvalues in `[−NEGATIVE_CLAMP, 0)` are rounding noise.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// Cell state in the site basis.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Mixed(CMatrix),
}

impl QuantumState {
    /// Validated pure state.
    pub fn pure(psi: CVector) -> Result<Self> {
        let norm = vector_norm(psi.view());
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::InvalidState(format!("pure state has norm {norm}")));
        }
        Ok(Self::Pure(psi))
    }

    /// Normalizes `psi` first.
    pub fn pure_normalized(psi: CVector) -> Result<Self> {
        let norm = vector_norm(psi.view());
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self::Pure(psi.mapv(|z| z / norm)))
    }

    /// Validated density matrix.
    pub fn mixed(rho: CMatrix) -> Result<Self> {
        let state = Self::Mixed(rho);
        state.validate()?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&CVector> {
        match self {
            Self::Pure(v) => Some(v),
            Self::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match self {
            Self::Pure(v) => outer(v.view(), v.view()),
            Self::Mixed(m) => m.clone(),
        }
    }

    /// Same state, always in density-matrix form.
    pub fn to_mixed(&self) -> Self {
        Self::Mixed(self.density_matrix())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Pure(v) => {
                let norm = vector_norm(v.view());
                if (norm - 1.0).abs() > PURE_NORM_TOL {
                    return Err(Error::InvalidState(format!("pure state has norm {norm}")));
                }
            }
            Self::Mixed(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: m.nrows(),
                        got: m.ncols(),
                    });
                }
                let defect = hermiticity_defect(m);
                if defect > MIXED_HERMITIAN_TOL {
                    return Err(Error::NotHermitian(defect));
                }
                let tr = trace(m);
                if (tr.re - 1.0).abs() > MIXED_TRACE_TOL || tr.im.abs() > MIXED_TRACE_TOL {
                    return Err(Error::InvalidState(format!("trace {tr}")));
                }
                density_eigenvalues(m)?;
            }
        }
        Ok(())
    }

    /// `Uψ` or `UρU†`.
    pub fn transformed(&self, u: &CMatrix) -> Self {
        match self {
            Self::Pure(v) => Self::Pure(u.dot(v)),
            Self::Mixed(m) => Self::Mixed(conjugate_by(u, m)),
        }
    }

    /// Smallest eigenvalue of the density matrix (0 for pure states).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        match self {
            Self::Pure(_) => Ok(0.0),
            Self::Mixed(m) => {
                let spec = eigh_matrix(m)?;
                Ok(spec.eigenvalue(0))
            }
        }
    }
}

/// Inverse temperature; `f64::INFINITY` is the zero-temperature limit and is
/// treated symbolically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSpec {
    pub beta: f64,
}

impl ThermalSpec {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be ≥ 0, got {beta}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn zero_temperature() -> Self {
        Self {
            beta: f64::INFINITY,
        }
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta == f64::INFINITY
    }
}

fn check_dim(state: &QuantumState, n: usize) -> Result<()> {
    if state.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.dim(),
        });
    }
    Ok(())
}

/// Site-localized state `|x_m⟩`.
pub fn localized_state(n: usize, m: usize) -> Result<QuantumState> {
    if m >= n {
        return Err(Error::IndexOutOfRange { index: m, n });
    }
    let mut v = CVector::zeros(n);
    v[m] = C64::new(1.0, 0.0);
    Ok(QuantumState::Pure(v))
}

/// Eigenvector `l` of the spectrum (ascending order).
pub fn eigen_state(spectrum: &Spectrum, l: usize) -> Result<QuantumState> {
    if l >= spectrum.dim() {
        return Err(Error::IndexOutOfRange {
            index: l,
            n: spectrum.dim(),
        });
    }
    QuantumState::pure_normalized(spectrum.eigenvector(l))
}

/// Equal superposition of the rim sites `1..n` of a wheel (hub amplitude 0).
pub fn uniform_rim_state(n: usize) -> Result<QuantumState> {
    if n < 2 {
        return Err(Error::TooSmall {
            kind: "wheel rim",
            min: 2,
            n,
        });
    }
    let a = 1.0 / ((n - 1) as f64).sqrt();
    let mut v = CVector::from_elem(n, C64::new(a, 0.0));
    v[0] = C64::new(0.0, 0.0);
    Ok(QuantumState::Pure(v))
}

/// `Tr[Hρ]`.
pub fn energy(state: &QuantumState, h: &Hamiltonian) -> Result<f64> {
    energy_of_matrix(state, h.matrix())
}

pub(crate) fn energy_of_matrix(state: &QuantumState, h: &CMatrix) -> Result<f64> {
    check_dim(state, h.nrows())?;
    let e = match state {
        QuantumState::Pure(v) => inner(v.view(), h.dot(v).view()),
        QuantumState::Mixed(m) => {
            let mut acc = C64::new(0.0, 0.0);
            for ((i, j), hij) in h.indexed_iter() {
                acc += hij * m[[j, i]];
            }
            acc
        }
    };
    let scale = h.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    if e.im.abs() > 1e-10 * scale {
        return Err(Error::NotHermitian(e.im.abs()));
    }
    Ok(e.re)
}

/// Density eigenvalues in descending order with their eigenvectors (columns
/// in the same order). Tiny negative eigenvalues are clamped and the
/// populations renormalized.
pub fn density_eigen(rho: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let spec = eigh_matrix(rho)?;
    let n = spec.dim();
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros((n, n));
    for (dst, k) in (0..n).rev().enumerate() {
        let r = spec.eigenvalue(k);
        if r < -NEGATIVE_CLAMP {
            return Err(Error::PositivityViolation(r));
        }
        values.push(r.max(0.0));
        vectors
            .column_mut(dst)
            .assign(&spec.eigenvectors().column(k));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("density matrix has zero trace".into()));
    }
    for r in values.iter_mut() {
        *r /= total;
    }
    Ok((values, vectors))
}

/// Descending, clamped and renormalized density eigenvalues.
pub fn density_eigenvalues(rho: &CMatrix) -> Result<Vec<f64>> {
    Ok(density_eigen(rho)?.0)
}

fn clamp_result(w: f64) -> Result<f64> {
    if w < -NEGATIVE_CLAMP {
        return Err(Error::InvalidState(format!("negative ergotropy {w}")));
    }
    Ok(w.max(0.0))
}

/// Maximal work extractable by a unitary.
pub fn ergotropy(state: &QuantumState, h: &Hamiltonian) -> Result<f64> {
    let spec = spectrum_of(h)?;
    ergotropy_with(state, h, &spec)
}

/// [`ergotropy`] with a precomputed spectrum of `h`.
pub fn ergotropy_with(state: &QuantumState, h: &Hamiltonian, spectrum: &Spectrum) -> Result<f64> {
    ergotropy_of_matrix(state, h.matrix(), spectrum)
}

pub(crate) fn ergotropy_of_matrix(
    state: &QuantumState,
    h: &CMatrix,
    spectrum: &Spectrum,
) -> Result<f64> {
    let e = energy_of_matrix(state, h)?;
    let passive = match state {
        QuantumState::Pure(_) => spectrum.ground_energy(),
        QuantumState::Mixed(m) => passive_energy(&density_eigenvalues(m)?, spectrum),
    };
    clamp_result(e - passive)
}

/// `Σ_k r↓_k E↑_k`.
pub fn passive_energy(populations_desc: &[f64], spectrum: &Spectrum) -> f64 {
    populations_desc
        .iter()
        .zip(spectrum.eigenvalues().iter())
        .map(|(r, e)| r * e)
        .sum()
}

/// Overlap form `Σ_jk r_j E_k (|⟨η_j|φ_k⟩|² − δ_jk)`, with `r_j` descending
/// and `E_k` ascending. Independent of [`ergotropy`]; used for cross-checks.
pub fn ergotropy_overlap_form(state: &QuantumState, h: &Hamiltonian) -> Result<f64> {
    check_dim(state, h.dim())?;
    let spec = spectrum_of(h)?;
    let (r, eta) = density_eigen(&state.density_matrix())?;
    let phi = spec.eigenvectors();
    let overlaps = dagger(&eta).dot(phi);
    let mut w = 0.0;
    for j in 0..r.len() {
        for k in 0..r.len() {
            let delta = if j == k { 1.0 } else { 0.0 };
            w += r[j] * spec.eigenvalue(k) * (overlaps[[j, k]].norm_sqr() - delta);
        }
    }
    clamp_result(w)
}

/// `Σ_k r↓_k |φ_k⟩⟨φ_k|`: the unitarily reachable state of least energy.
pub fn passive_state(state: &QuantumState, h: &Hamiltonian) -> Result<QuantumState> {
    check_dim(state, h.dim())?;
    let spec = spectrum_of(h)?;
    let r = density_eigenvalues(&state.density_matrix())?;
    Ok(QuantumState::Mixed(diagonal_in_basis(&spec, &r)))
}

/// `V diag(p) V†`.
pub fn diagonal_in_basis(spectrum: &Spectrum, populations: &[f64]) -> CMatrix {
    let v = spectrum.eigenvectors();
    let mut scaled = v.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|z| z * populations[k]);
    }
    scaled.dot(&dagger(v))
}

/// Gibbs weights `e^{−β(E_l − E_min)}/Z` in eigenvalue order. At `β = ∞`
/// the ground group is populated uniformly.
pub fn thermal_populations(spectrum: &Spectrum, thermal: ThermalSpec) -> Array1<f64> {
    let n = spectrum.dim();
    let e0 = spectrum.ground_energy();
    let mut p = if thermal.is_zero_temperature() {
        let ground = spectrum.degeneracy_groups()[0].clone();
        Array1::from_shape_fn(n, |l| if ground.contains(&l) { 1.0 } else { 0.0 })
    } else if thermal.beta == 0.0 {
        Array1::from_elem(n, 1.0)
    } else {
        spectrum
            .eigenvalues()
            .mapv(|e| (-thermal.beta * (e - e0)).exp())
    };
    let z = p.sum();
    p.mapv_inplace(|x| x / z);
    p
}

/// Thermal weights paired in reverse: level `l` carries the weight of level
/// `N−1−l`. At `β = ∞` this is the limit of the finite-β pairing, a uniform
/// mixture over the mirror image of the ground group.
pub fn inverse_thermal_populations(spectrum: &Spectrum, thermal: ThermalSpec) -> Array1<f64> {
    let p = thermal_populations(spectrum, thermal);
    let n = p.len();
    Array1::from_shape_fn(n, |l| p[n - 1 - l])
}

pub fn thermal_state(h: &Hamiltonian, thermal: ThermalSpec) -> Result<QuantumState> {
    let spec = spectrum_of(h)?;
    Ok(thermal_state_in(&spec, thermal))
}

pub fn thermal_state_in(spectrum: &Spectrum, thermal: ThermalSpec) -> QuantumState {
    let p = thermal_populations(spectrum, thermal);
    QuantumState::Mixed(diagonal_in_basis(
        spectrum,
        p.as_slice().expect("contiguous"),
    ))
}

pub fn inverse_thermal_state(h: &Hamiltonian, thermal: ThermalSpec) -> Result<QuantumState> {
    let spec = spectrum_of(h)?;
    Ok(inverse_thermal_state_in(&spec, thermal))
}

pub fn inverse_thermal_state_in(spectrum: &Spectrum, thermal: ThermalSpec) -> QuantumState {
    let p = inverse_thermal_populations(spectrum, thermal);
    QuantumState::Mixed(diagonal_in_basis(
        spectrum,
        p.as_slice().expect("contiguous"),
    ))
}

/// Cells with a closed-form inverse-thermal ergotropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormKind {
    Ring3,
    Ring4,
    Complete { n: usize },
}

impl ClosedFormKind {
    pub fn from_topology(spec: &TopologySpec) -> Result<Self> {
        match spec.kind {
            Topology::Ring { n: 3 } => Ok(Self::Ring3),
            Topology::Ring { n: 4 } => Ok(Self::Ring4),
            Topology::Complete { n } if n >= 2 => Ok(Self::Complete { n }),
            _ => Err(Error::Unsupported(format!(
                "no closed-form thermal ergotropy for {spec}"
            ))),
        }
    }

    pub fn topology(&self) -> TopologySpec {
        match *self {
            Self::Ring3 => TopologySpec::ring(3),
            Self::Ring4 => TopologySpec::ring(4),
            Self::Complete { n } => TopologySpec::complete(n),
        }
    }
}

/// Ergotropy of the inverse thermal state in closed form (written with
/// decaying exponentials so that large `β` does not overflow).
pub fn thermal_inverse_ergotropy_closed_form(
    kind: ClosedFormKind,
    thermal: ThermalSpec,
    coupling_j: f64,
) -> f64 {
    let j = coupling_j;
    let b = thermal.beta;
    match kind {
        ClosedFormKind::Ring3 => {
            if thermal.is_zero_temperature() {
                return 3.0 * j;
            }
            let x = (-3.0 * b * j).exp();
            3.0 * j * (1.0 - x) / (1.0 + 2.0 * x)
        }
        ClosedFormKind::Ring4 => 4.0 * j * (b * j).tanh(),
        ClosedFormKind::Complete { n } => {
            let nf = n as f64;
            if thermal.is_zero_temperature() {
                return nf * j;
            }
            let x = (-b * nf * j).exp();
            j * nf * (1.0 - x) / (1.0 + (nf - 1.0) * x)
        }
    }
}

/// `Δ = E_max − E_min`.
pub fn bandwidth(spectrum: &Spectrum) -> f64 {
    spectrum.bandwidth()
}

/// Ergotropy of `m_cells` identical, uncorrelated cells operated in parallel.
pub fn battery_ergotropy(m_cells: usize, w_cell: f64) -> Result<f64> {
    if m_cells == 0 {
        return Err(Error::InvalidParameter(
            "a battery needs at least one cell".into(),
        ));
    }
    Ok(m_cells as f64 * w_cell)
}

/// `E(ρ) − E(UρU†)`.
pub fn extracted_work(state: &QuantumState, u: &CMatrix, h: &CMatrix) -> Result<f64> {
    Ok(energy_of_matrix(state, h)? - energy_of_matrix(&state.transformed(u), h)?)
}
