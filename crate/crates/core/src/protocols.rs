//! Discharge unitaries and the potentials that generate them.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::graphs::{Hamiltonian, TopologySpec};
use crate::linalg::{
    complete_basis, dagger, hermiticity_defect, outer, phase_fidelity, unitarity_defect,
    vector_norm, CMatrix, CVector, C64,
};
use crate::spectral::{eigh_matrix, unitary_eigen, Spectrum};
use crate::thermo::{density_eigen, QuantumState};

/// Tolerance on `U†U = I` for every synthesized unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Optimized on the actual (noisy) state.
    Erg,
    /// Optimized on the noise-free evolved state.
    Free,
    /// Optimized on the initial state.
    Zero,
    Permutation,
    PureProjector,
    MixedOptimal,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Erg => "erg",
            Self::Free => "free",
            Self::Zero => "zero",
            Self::Permutation => "permutation",
            Self::PureProjector => "pure-projector",
            Self::MixedOptimal => "mixed-optimal",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct DischargeUnitary {
    pub matrix: CMatrix,
    pub strategy: Strategy,
    pub built_for: String,
}

impl DischargeUnitary {
    fn checked(matrix: CMatrix, strategy: Strategy, built_for: String) -> Result<Self> {
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "{strategy} unitary off by {defect:.3e}"
            )));
        }
        Ok(Self {
            matrix,
            strategy,
            built_for,
        })
    }

    pub fn relabel(mut self, strategy: Strategy, built_for: impl Into<String>) -> Self {
        self.strategy = strategy;
        self.built_for = built_for.into();
        self
    }

    /// `E(ρ) − E(UρU†)` for the cell generator `h`.
    pub fn work_on(&self, state: &QuantumState, h: &Hamiltonian) -> Result<f64> {
        crate::thermo::extracted_work(state, &self.matrix, h.matrix())
    }
}

/// `Φ Ψ†`: maps the `l`-th vector of `Ψ` onto eigenvector `φ_l`.
fn map_onto_eigenbasis(source: &CMatrix, spectrum: &Spectrum) -> CMatrix {
    spectrum.eigenvectors().dot(&dagger(source))
}

/// `U = |φ_0⟩⟨ψ_0| + Σ_{l≥1} |φ_l⟩⟨ψ_l|`, the `ψ_l` completing `ψ_0` by
/// Gram–Schmidt over the site basis.
pub fn pure_discharge_unitary(psi0: &CVector, spectrum: &Spectrum) -> Result<DischargeUnitary> {
    if psi0.len() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            got: psi0.len(),
        });
    }
    let norm = vector_norm(psi0.view());
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("pure state has norm {norm}")));
    }
    let basis = complete_basis(psi0.view());
    DischargeUnitary::checked(
        map_onto_eigenbasis(&basis, spectrum),
        Strategy::PureProjector,
        "pure state".into(),
    )
}

/// `U = S D†`: density eigenvectors (descending population) onto energy
/// eigenvectors (ascending energy).
pub fn mixed_optimal_unitary(rho: &QuantumState, spectrum: &Spectrum) -> Result<DischargeUnitary> {
    if rho.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            got: rho.dim(),
        });
    }
    let (_, d) = density_eigen(&rho.density_matrix())?;
    DischargeUnitary::checked(
        map_onto_eigenbasis(&d, spectrum),
        Strategy::MixedOptimal,
        "density matrix".into(),
    )
}

/// Optimal unitary for either representation of a state.
pub fn optimal_unitary(state: &QuantumState, spectrum: &Spectrum) -> Result<DischargeUnitary> {
    match state {
        QuantumState::Pure(psi) => pure_discharge_unitary(psi, spectrum),
        QuantumState::Mixed(_) => mixed_optimal_unitary(state, spectrum),
    }
}

/// `Σ_l |φ_l⟩⟨φ_{N−1−l}|`: reverses the energy ladder.
pub fn permutation_unitary(spectrum: &Spectrum) -> Result<DischargeUnitary> {
    let n = spectrum.dim();
    let v = spectrum.eigenvectors();
    let mut reversed = CMatrix::zeros((n, n));
    for l in 0..n {
        reversed.column_mut(l).assign(&v.column(n - 1 - l));
    }
    DischargeUnitary::checked(
        map_onto_eigenbasis(&reversed, spectrum),
        Strategy::Permutation,
        "eigenbasis reversal".into(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialFlavor {
    SpinChain,
    Antidiagonal,
    MatrixLog,
    LocalizedSearch,
}

/// Generator switched on during `(0, t_star)`.
#[derive(Debug, Clone)]
pub struct PiecewisePotentialPlan {
    pub h_middle: CMatrix,
    pub t_star: f64,
    pub flavor: PotentialFlavor,
}

impl PiecewisePotentialPlan {
    /// `exp(−i h_middle t)`.
    pub fn evolution(&self, t: f64) -> Result<CMatrix> {
        Ok(eigh_matrix(&self.h_middle)?.propagator(t))
    }

    /// `exp(−i h_middle t_star)`.
    pub fn unitary(&self) -> Result<CMatrix> {
        self.evolution(self.t_star)
    }

    /// Phase-gauged fidelity of the realized unitary with `target`.
    pub fn fidelity(&self, target: &CMatrix) -> Result<f64> {
        Ok(phase_fidelity(&self.unitary()?, target))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {x}"
        )));
    }
    Ok(())
}

/// `H = (i/t*) log U` on the principal branch.
pub fn matrix_log_potential(u: &CMatrix, t_star: f64) -> Result<PiecewisePotentialPlan> {
    check_positive("t_star", t_star)?;
    let defect = unitarity_defect(u);
    if defect > UNITARITY_TOL {
        return Err(Error::InvalidParameter(format!(
            "matrix log needs a unitary, defect {defect:.3e}"
        )));
    }
    let (phases, w) = unitary_eigen(u)?;
    let mut scaled = w.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let f = -phases[k] / t_star;
        col.mapv_inplace(|z| z * f);
    }
    let mut h = scaled.dot(&dagger(&w));
    symmetrize(&mut h);
    Ok(PiecewisePotentialPlan {
        h_middle: h,
        t_star,
        flavor: PotentialFlavor::MatrixLog,
    })
}

fn symmetrize(h: &mut CMatrix) {
    let n = h.nrows();
    for i in 0..n {
        h[[i, i]] = C64::new(h[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            let z = (h[[i, j]] + h[[j, i]].conj()) * 0.5;
            h[[i, j]] = z;
            h[[j, i]] = z.conj();
        }
    }
}

/// Spin-chain couplings `(ξ/2)√(l(N−l))` between `φ_{l−1}` and `φ_l`,
/// `l = 1..N−1`, switched on for `t* = π/ξ`.
pub fn spin_chain_protocol(spectrum: &Spectrum, xi: f64) -> Result<PiecewisePotentialPlan> {
    check_positive("xi", xi)?;
    let n = spectrum.dim();
    let mut h = CMatrix::zeros((n, n));
    for l in 1..n {
        let k = 0.5 * xi * ((l * (n - l)) as f64).sqrt();
        let term = outer(
            spectrum.eigenvectors().column(l - 1),
            spectrum.eigenvectors().column(l),
        );
        h = h + term.mapv(|z| z * k) + dagger(&term).mapv(|z| z * k);
    }
    Ok(PiecewisePotentialPlan {
        h_middle: h,
        t_star: PI / xi,
        flavor: PotentialFlavor::SpinChain,
    })
}

/// `χ · Σ_l |φ_l⟩⟨φ_{N−1−l}|` switched on for `t* = π/(2χ)`.
pub fn antidiagonal_protocol(spectrum: &Spectrum, chi: f64) -> Result<PiecewisePotentialPlan> {
    check_positive("chi", chi)?;
    let perm = permutation_unitary(spectrum)?.matrix;
    let mut h = perm.mapv(|z| z * chi);
    symmetrize(&mut h);
    Ok(PiecewisePotentialPlan {
        h_middle: h,
        t_star: PI / (2.0 * chi),
        flavor: PotentialFlavor::Antidiagonal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Complete,
    Wheel,
}

/// Result of the localized-potential discharge.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub plan: PiecewisePotentialPlan,
    /// Best fidelity with the uniform superposition over `t ∈ (0, 20/J]`.
    pub fidelity: f64,
    /// Same quantity in the two-dimensional Krylov model.
    pub reduced_fidelity: f64,
    pub reduced_t_star: f64,
    /// `π/(2Ω)` with `Ω` the Rabi frequency of the reduced model.
    pub rabi_estimate: f64,
}

pub const SEARCH_WINDOW: f64 = 20.0;
const SEARCH_SAMPLES: usize = 20_000;

/// Fidelity `|⟨u|e^{−iHt}|ψ0⟩|²` as a function of `t`, evaluated through the
/// spectral decomposition of `h`.
struct Overlap {
    energies: Vec<f64>,
    weights: Vec<C64>,
}

impl Overlap {
    fn new(h: &CMatrix, psi0: &CVector, target: &CVector) -> Result<Self> {
        let spec = eigh_matrix(h)?;
        let v = spec.eigenvectors();
        let c0 = dagger(v).dot(psi0);
        let ct = dagger(v).dot(target);
        let weights = ct
            .iter()
            .zip(c0.iter())
            .map(|(a, b)| a.conj() * b)
            .collect();
        Ok(Self {
            energies: spec.eigenvalues().to_vec(),
            weights,
        })
    }

    fn at(&self, t: f64) -> f64 {
        let amp: C64 = self
            .energies
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| w * C64::from_polar(1.0, -e * t))
            .sum();
        amp.norm_sqr()
    }

    /// Grid maximum on `(0, t_max]` refined by golden-section search.
    fn maximize(&self, t_max: f64) -> (f64, f64) {
        let step = t_max / SEARCH_SAMPLES as f64;
        let mut best = (step, self.at(step));
        for k in 2..=SEARCH_SAMPLES {
            let t = step * k as f64;
            let f = self.at(t);
            if f > best.1 {
                best = (t, f);
            }
        }
        let lo = (best.0 - step).max(0.0);
        let hi = (best.0 + step).min(t_max);
        let (t, f) = golden_max(|t| self.at(t), lo, hi, 1e-12);
        if f > best.1 {
            (t, f)
        } else {
            best
        }
    }
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Discharge of `|x_0⟩` by the potential `V = −v|x_0⟩⟨x_0|` (`v = NJ` on the
/// complete cell, `4J` on the wheel, where `x_0` is the hub).
pub fn localized_search_discharge(
    kind: SearchKind,
    n: usize,
    coupling_j: f64,
) -> Result<SearchOutcome> {
    if n < 4 {
        return Err(Error::TooSmall {
            kind: "localized search",
            min: 4,
            n,
        });
    }
    let (spec, depth) = match kind {
        SearchKind::Complete => (TopologySpec::complete(n), n as f64),
        SearchKind::Wheel => (TopologySpec::wheel(n), 4.0),
    };
    let cell = spec.with_coupling(coupling_j).build()?;
    let j = coupling_j;
    let mut psi0 = CVector::zeros(n);
    psi0[0] = C64::new(1.0, 0.0);
    let mut potential = CMatrix::zeros((n, n));
    potential[[0, 0]] = C64::new(-depth * j, 0.0);
    let total = cell.matrix() + &potential;
    let uniform = CVector::from_elem(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
    let t_max = SEARCH_WINDOW / j;

    let (t_star, fidelity) = Overlap::new(&total, &psi0, &uniform)?.maximize(t_max);

    // the Krylov pair {|x_0⟩, |s⟩}
    let k = crate::spectral::krylov_reduce(&cell, &psi0, crate::spectral::KRYLOV_TOL)?;
    let mut reduced = k.reduced_h_complex();
    reduced[[0, 0]] -= C64::new(depth * j, 0.0);
    let mut e0 = CVector::zeros(k.m());
    e0[0] = C64::new(1.0, 0.0);
    let target_reduced = dagger(k.basis()).dot(&uniform);
    let (reduced_t_star, reduced_fidelity) =
        Overlap::new(&reduced, &e0, &target_reduced)?.maximize(t_max);
    let rabi_estimate = if k.m() == 2 {
        let detuning = 0.5 * (reduced[[0, 0]].re - reduced[[1, 1]].re);
        let omega = (detuning * detuning + reduced[[0, 1]].norm_sqr()).sqrt();
        PI / (2.0 * omega)
    } else {
        f64::NAN
    };

    Ok(SearchOutcome {
        plan: PiecewisePotentialPlan {
            h_middle: total,
            t_star,
            flavor: PotentialFlavor::LocalizedSearch,
        },
        fidelity,
        reduced_fidelity,
        reduced_t_star,
        rabi_estimate,
    })
}

/// The three noisy-cell discharge unitaries.
#[derive(Debug, Clone)]
pub struct StrategyUnitaries {
    pub erg: DischargeUnitary,
    pub free: DischargeUnitary,
    pub zero: DischargeUnitary,
}

impl StrategyUnitaries {
    pub fn get(&self, s: Strategy) -> Option<&DischargeUnitary> {
        match s {
            Strategy::Erg => Some(&self.erg),
            Strategy::Free => Some(&self.free),
            Strategy::Zero => Some(&self.zero),
            _ => None,
        }
    }
}

/// `U_erg` optimized on `ρ(t)`, `U_free` on the noiseless `ρ_free(t)` and
/// `U_0` on the initial state.
pub fn strategy_unitaries(
    rho_t: &QuantumState,
    rho_free_t: &QuantumState,
    rho_0: &QuantumState,
    spectrum: &Spectrum,
) -> Result<StrategyUnitaries> {
    Ok(StrategyUnitaries {
        erg: optimal_unitary(rho_t, spectrum)?.relabel(Strategy::Erg, "rho(t)"),
        free: optimal_unitary(rho_free_t, spectrum)?.relabel(Strategy::Free, "rho_free(t)"),
        zero: optimal_unitary(rho_0, spectrum)?.relabel(Strategy::Zero, "rho(0)"),
    })
}

/// Largest deviation from Hermiticity of a plan generator.
pub fn plan_hermiticity(plan: &PiecewisePotentialPlan) -> f64 {
    hermiticity_defect(&plan.h_middle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs, random_unitary};
    use crate::spectral::spectrum_of;
    use crate::thermo::{
        eigen_state, energy, ergotropy, inverse_thermal_state_in, localized_state,
        thermal_state_in, ThermalSpec,
    };
    use rand::SeedableRng;

    fn spectrum(spec: TopologySpec) -> (Hamiltonian, Spectrum) {
        let h = spec.build().unwrap();
        let s = spectrum_of(&h).unwrap();
        (h, s)
    }

    #[test]
    fn top_eigenstate_of_ring4_discharges_fully() {
        let (h, s) = spectrum(TopologySpec::ring(4));
        let top = eigen_state(&s, 3).unwrap();
        let u = pure_discharge_unitary(top.as_pure().unwrap(), &s).unwrap();
        let after = top.transformed(&u.matrix);
        assert!((energy(&after, &h).unwrap() + 2.0).abs() < 1e-10);
        assert!((u.work_on(&top, &h).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn ground_state_gives_no_work() {
        let (h, s) = spectrum(TopologySpec::wheel(6));
        let g = eigen_state(&s, 0).unwrap();
        let u = pure_discharge_unitary(g.as_pure().unwrap(), &s).unwrap();
        assert!(u.work_on(&g, &h).unwrap().abs() < 1e-10);
    }

    #[test]
    fn localized_complete_uses_site_ladder() {
        let (h, s) = spectrum(TopologySpec::complete(5));
        let x = localized_state(5, 0).unwrap();
        let u = pure_discharge_unitary(x.as_pure().unwrap(), &s).unwrap();
        assert!(max_abs(&(&u.matrix - s.eigenvectors())) < 1e-14);
        assert!((u.work_on(&x, &h).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn mixed_optimal_reaches_passive_state() {
        let (h, s) = spectrum(TopologySpec::ring(3));
        let rho = inverse_thermal_state_in(&s, ThermalSpec::new(1.0).unwrap());
        let u = mixed_optimal_unitary(&rho, &s).unwrap();
        let w = u.work_on(&rho, &h).unwrap();
        assert!((w - ergotropy(&rho, &h).unwrap()).abs() < 1e-9);
        let passive = crate::thermo::passive_state(&rho, &h).unwrap();
        let reached = rho.transformed(&u.matrix);
        assert!(max_abs(&(reached.density_matrix() - passive.density_matrix())) < 1e-9);
    }

    #[test]
    fn mixed_optimal_on_top_projector_gives_bandwidth() {
        let (h, s) = spectrum(TopologySpec::wheel(9));
        let top = eigen_state(&s, 8).unwrap().to_mixed();
        let u = mixed_optimal_unitary(&top, &s).unwrap();
        assert!((u.work_on(&top, &h).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn permutation_is_involution_and_inverts_thermal() {
        let (h, s) = spectrum(TopologySpec::wheel(9));
        let p = permutation_unitary(&s).unwrap();
        assert!(max_abs(&(p.matrix.dot(&p.matrix) - identity(9))) < 1e-10);
        let top = eigen_state(&s, 8).unwrap();
        assert!((p.work_on(&top, &h).unwrap() - 6.0).abs() < 1e-10);

        let beta = ThermalSpec::new(0.8).unwrap();
        let th = thermal_state_in(&s, beta);
        let inv = inverse_thermal_state_in(&s, beta);
        let mapped = s.to_energy_basis(&th.transformed(&p.matrix).density_matrix());
        assert!(max_abs(&(mapped - s.to_energy_basis(&inv.density_matrix()))) < 1e-10);
    }

    #[test]
    fn matrix_log_of_identity_is_zero() {
        let plan = matrix_log_potential(&identity(4), 1.0).unwrap();
        assert!(max_abs(&plan.h_middle) < 1e-14);
    }

    #[test]
    fn matrix_log_round_trip_with_minus_one() {
        let (_, s) = spectrum(TopologySpec::ring(3));
        let p = permutation_unitary(&s).unwrap().matrix;
        let plan = matrix_log_potential(&p, 1.0).unwrap();
        assert!(max_abs(&(plan.unitary().unwrap() - &p)) < 1e-9);
        assert!(plan_hermiticity(&plan) < 1e-12);
    }

    #[test]
    fn matrix_log_round_trip_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        for n in 2..9 {
            for _ in 0..10 {
                let u = random_unitary(n, &mut rng);
                let plan = matrix_log_potential(&u, 0.7).unwrap();
                assert!(max_abs(&(plan.unitary().unwrap() - &u)) < 1e-9);
            }
        }
    }

    #[test]
    fn spin_chain_and_antidiagonal_reverse_ladder() {
        for n in [2, 3, 4, 7, 12] {
            let spec = if n >= 3 {
                TopologySpec::ring(n)
            } else {
                TopologySpec::complete(2)
            };
            let (_, s) = spectrum(spec);
            let target = permutation_unitary(&s).unwrap().matrix;
            let sc = spin_chain_protocol(&s, 1.0).unwrap();
            let ad = antidiagonal_protocol(&s, 1.0).unwrap();
            assert!((sc.fidelity(&target).unwrap() - 1.0).abs() < 1e-9);
            assert!((ad.fidelity(&target).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_xi_halves_time() {
        let (_, s) = spectrum(TopologySpec::ring(5));
        let a = spin_chain_protocol(&s, 1.0).unwrap();
        let b = spin_chain_protocol(&s, 2.0).unwrap();
        assert!((a.t_star - 2.0 * b.t_star).abs() < 1e-15);
        assert!(max_abs(&(a.unitary().unwrap() - b.unitary().unwrap())) < 1e-10);
    }

    #[test]
    fn antidiagonal_quarter_period_is_balanced() {
        let (_, s) = spectrum(TopologySpec::complete(4));
        let plan = antidiagonal_protocol(&s, 1.0).unwrap();
        let u = plan.evolution(PI / 4.0).unwrap();
        let perm = permutation_unitary(&s).unwrap().matrix;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = identity(4).mapv(|z| z * h) - perm.mapv(|z| z * C64::new(0.0, h));
        assert!(max_abs(&(u - expected)) < 1e-10);
    }

    #[test]
    fn localized_search_small_and_large() {
        let small = localized_search_discharge(SearchKind::Complete, 4, 1.0).unwrap();
        assert!(small.fidelity > 0.0 && small.fidelity <= 1.0 + 1e-12);
        let c64 = localized_search_discharge(SearchKind::Complete, 64, 1.0).unwrap();
        assert!(c64.fidelity >= 0.98);
        assert!((c64.fidelity - c64.reduced_fidelity).abs() < 1e-8);
        let w64 = localized_search_discharge(SearchKind::Wheel, 64, 1.0).unwrap();
        assert!(w64.fidelity >= 0.9);
        assert!(localized_search_discharge(SearchKind::Wheel, 3, 1.0).is_err());
    }

    #[test]
    fn strategies_coincide_at_time_zero() {
        let (h, s) = spectrum(TopologySpec::ring(5));
        let x = localized_state(5, 1).unwrap();
        let su = strategy_unitaries(&x.to_mixed(), &x, &x, &s).unwrap();
        let w: Vec<f64> = [Strategy::Erg, Strategy::Free, Strategy::Zero]
            .iter()
            .map(|st| su.get(*st).unwrap().work_on(&x, &h).unwrap())
            .collect();
        assert!((w[0] - w[1]).abs() < 1e-10 && (w[1] - w[2]).abs() < 1e-10);
    }

    #[test]
    fn non_unitary_log_input_rejected() {
        let m = identity(3).mapv(|z| z * 2.0);
        assert!(matrix_log_potential(&m, 1.0).is_err());
        assert!(matrix_log_potential(&identity(3), 0.0).is_err());
    }
}
