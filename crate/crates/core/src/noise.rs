//! Open-system evolution of a cell and work-extraction trajectories.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graphs::Hamiltonian;
use crate::linalg::{commutator, trace, CMatrix, C64};
use crate::protocols::{optimal_unitary, Strategy};
use crate::spectral::{eigh_matrix, spectrum_of, Spectrum};
use crate::thermo::{energy_of_matrix, ergotropy_of_matrix, extracted_work, QuantumState};

pub const DEFAULT_DT: f64 = 1e-3;
/// Upper bound on `dt · (‖H‖ + rate)`.
pub const STEP_GUARD: f64 = 0.1;
pub const TRACE_DRIFT_TOL: f64 = 1e-9;
pub const MIN_EIGENVALUE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Decay of energy-basis coherences, `−(γ/2)[H,[H,ρ]]`.
    PureDephasing { gamma: f64 },
    /// Site-basis dephasing, jumps `|k⟩⟨k|` at rate `γ`.
    HakenStrobl { gamma: f64 },
    /// Stochastic quantum walk mixing weight `p ∈ [0, 1]`.
    StochasticQw { p: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PureDephasing { gamma } | Self::HakenStrobl { gamma } => {
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gamma must be ≥ 0, got {gamma}"
                    )));
                }
            }
            Self::StochasticQw { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "p must lie in [0, 1], got {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PureDephasing { .. } => "dephasing",
            Self::HakenStrobl { .. } => "haken-strobl",
            Self::StochasticQw { .. } => "qsw",
        }
    }

    /// Scale of the dissipative part, used by the step guard.
    fn rate(&self, h: &CMatrix, h_norm: f64) -> f64 {
        match *self {
            Self::PureDephasing { gamma } => 2.0 * gamma * h_norm * h_norm,
            Self::HakenStrobl { gamma } => gamma,
            Self::StochasticQw { p } => {
                let col = crate::linalg::column_norms_sqr(h);
                p * col.iter().fold(0.0f64, |a, x| a.max(*x))
            }
        }
    }
}

/// Precomputed generator `dρ/dt = L(ρ)`.
struct Lindbladian {
    h: CMatrix,
    model: NoiseModel,
    /// `|H_kj|²` (stochastic walk only).
    weights: Array2<f64>,
    /// `Σ_k |H_kj|²` (stochastic walk only).
    col: Vec<f64>,
}

impl Lindbladian {
    fn new(h: &CMatrix, model: NoiseModel) -> Self {
        let (weights, col) = match model {
            NoiseModel::StochasticQw { .. } => (
                h.mapv(|z| z.norm_sqr()),
                crate::linalg::column_norms_sqr(h).to_vec(),
            ),
            _ => (Array2::zeros((0, 0)), Vec::new()),
        };
        Self {
            h: h.clone(),
            model,
            weights,
            col,
        }
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let minus_i = C64::new(0.0, -1.0);
        let comm = commutator(&self.h, rho);
        match self.model {
            NoiseModel::HakenStrobl { gamma } => {
                let mut out = comm.mapv(|z| z * minus_i);
                let n = rho.nrows();
                for a in 0..n {
                    for b in 0..n {
                        if a != b {
                            out[[a, b]] -= rho[[a, b]] * gamma;
                        }
                    }
                }
                out
            }
            NoiseModel::PureDephasing { gamma } => {
                let double = commutator(&self.h, &comm);
                comm.mapv(|z| z * minus_i) - double.mapv(|z| z * (0.5 * gamma))
            }
            NoiseModel::StochasticQw { p } => {
                let n = rho.nrows();
                let mut out = comm.mapv(|z| z * minus_i * (1.0 - p));
                for a in 0..n {
                    for b in 0..n {
                        out[[a, b]] -= rho[[a, b]] * (0.5 * p * (self.col[a] + self.col[b]));
                    }
                    let gain: f64 = (0..n).map(|j| self.weights[[a, j]] * rho[[j, j]].re).sum();
                    out[[a, a]] += C64::new(p * gain, 0.0);
                }
                out
            }
        }
    }
}

/// Right-hand side of the master equation for `model`.
pub fn lindblad_rhs(rho: &CMatrix, h: &Hamiltonian, model: NoiseModel) -> Result<CMatrix> {
    if rho.dim() != h.matrix().dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: rho.nrows(),
        });
    }
    model.validate()?;
    Ok(Lindbladian::new(h.matrix(), model).apply(rho))
}

/// Exact solution of pure dephasing in the energy basis:
/// `ρ_μν(t) = ρ_μν(0) e^{−i(E_μ−E_ν)t − (γ/2)(E_μ−E_ν)²t}`, with coherences
/// inside a degeneracy group left untouched.
pub fn dephasing_evolve(
    rho0: &QuantumState,
    spectrum: &Spectrum,
    gamma: f64,
    t: f64,
) -> Result<QuantumState> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time must be ≥ 0, got {t}"
        )));
    }
    NoiseModel::PureDephasing { gamma }.validate()?;
    Ok(energy_basis_map(rho0, spectrum, |d| {
        if d == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar((-0.5 * gamma * d * d * t).exp(), -d * t)
        }
    }))
}

/// `t → ∞` limit of pure dephasing (`γ > 0`): block diagonal over the
/// degeneracy groups.
pub fn dephasing_limit(rho0: &QuantumState, spectrum: &Spectrum) -> QuantumState {
    energy_basis_map(rho0, spectrum, |d| {
        if d == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Multiplies energy-basis entry `(μ, ν)` by `f(E_μ − E_ν)`, where the
/// difference is exactly 0 inside a degeneracy group.
fn energy_basis_map(
    rho0: &QuantumState,
    spectrum: &Spectrum,
    f: impl Fn(f64) -> C64,
) -> QuantumState {
    let mut r = spectrum.to_energy_basis(&rho0.density_matrix());
    let n = spectrum.dim();
    let group: Vec<usize> = (0..n).map(|k| spectrum.group_of(k)).collect();
    for mu in 0..n {
        for nu in 0..n {
            let d = if group[mu] == group[nu] {
                0.0
            } else {
                spectrum.eigenvalue(mu) - spectrum.eigenvalue(nu)
            };
            r[[mu, nu]] *= f(d);
        }
    }
    QuantumState::Mixed(spectrum.from_energy_basis(&r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub retain_states: bool,
    /// Use the closed form for pure dephasing instead of integrating.
    pub analytic_dephasing: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            retain_states: false,
            analytic_dephasing: true,
        }
    }
}

/// Sampled evolution with per-time diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Present only when retention was requested.
    pub states: Option<Vec<CMatrix>>,
    pub energy: Vec<f64>,
    pub work_by_strategy: BTreeMap<Strategy, Vec<f64>>,
    pub ergotropy: Vec<f64>,
    pub trace_drift: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
}

fn check_grid(t_grid: &[f64], dt: f64) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if t_grid[0] < 0.0 || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "time grid must be finite and ≥ 0".into(),
        ));
    }
    for w in t_grid.windows(2) {
        let spacing = w[1] - w[0];
        if spacing <= 0.0 {
            return Err(Error::InvalidParameter(
                "time grid must be strictly ascending".into(),
            ));
        }
        if dt > spacing * (1.0 + 1e-12) {
            return Err(Error::StepGuard(format!(
                "dt = {dt} exceeds grid spacing {spacing}"
            )));
        }
    }
    Ok(())
}

/// Density matrices on `t_grid`, by the closed form (pure dephasing, when
/// enabled) or fixed-step RK4 with steps no longer than `dt`.
fn propagate(
    rho0: &QuantumState,
    h: &Hamiltonian,
    spectrum: &Spectrum,
    model: NoiseModel,
    t_grid: &[f64],
    opts: EvolveOptions,
    mut visit: impl FnMut(usize, &CMatrix) -> Result<()>,
) -> Result<()> {
    model.validate()?;
    check_grid(t_grid, opts.dt)?;
    if rho0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: rho0.dim(),
        });
    }
    if let (NoiseModel::PureDephasing { gamma }, true) = (model, opts.analytic_dephasing) {
        for (k, &t) in t_grid.iter().enumerate() {
            let rho = dephasing_evolve(rho0, spectrum, gamma, t)?.density_matrix();
            visit(k, &rho)?;
        }
        return Ok(());
    }

    let h_norm = spectrum.spectral_norm();
    let guard = opts.dt * (h_norm + model.rate(h.matrix(), h_norm));
    if guard > STEP_GUARD {
        return Err(Error::StepGuard(format!(
            "dt·(‖H‖ + rate) = {guard:.4} exceeds {STEP_GUARD}"
        )));
    }
    let lindblad = Lindbladian::new(h.matrix(), model);
    let mut rho = rho0.density_matrix();
    let mut now = 0.0;
    for (k, &t) in t_grid.iter().enumerate() {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / opts.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let step = span / steps as f64;
            for _ in 0..steps {
                rho = rk4_step(&lindblad, &rho, step);
            }
            now = t;
        }
        visit(k, &rho)?;
    }
    Ok(())
}

fn rk4_step(l: &Lindbladian, rho: &CMatrix, h: f64) -> CMatrix {
    let k1 = l.apply(rho);
    let k2 = l.apply(&(rho + &k1.mapv(|z| z * (0.5 * h))));
    let k3 = l.apply(&(rho + &k2.mapv(|z| z * (0.5 * h))));
    let k4 = l.apply(&(rho + &k3.mapv(|z| z * h)));
    let sum = k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4;
    rho + &sum.mapv(|z| z * (h / 6.0))
}

/// Trace drift and smallest eigenvalue of a propagated state, failing when
/// either exceeds its tolerance.
fn diagnose(rho: &CMatrix) -> Result<(f64, f64)> {
    let drift = (trace(rho) - C64::new(1.0, 0.0)).norm();
    if drift > TRACE_DRIFT_TOL {
        return Err(Error::TraceDrift(drift));
    }
    let min = eigh_matrix(rho)?.eigenvalue(0);
    if min < -MIN_EIGENVALUE_TOL {
        return Err(Error::PositivityViolation(min));
    }
    Ok((drift, min))
}

/// Evolves `rho0` and records energy and ergotropy on `t_grid`.
pub fn evolve(
    rho0: &QuantumState,
    h: &Hamiltonian,
    model: NoiseModel,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    work_trajectory(h, rho0, model, &[], t_grid, opts)
}

/// Evolves `rho0`, and at every sampled time applies each requested
/// strategy's unitary to `ρ(t)`: `work = E(ρ(t)) − E(U ρ(t) U†)`.
pub fn work_trajectory(
    h: &Hamiltonian,
    rho0: &QuantumState,
    model: NoiseModel,
    strategies: &[Strategy],
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    for s in strategies {
        if !matches!(s, Strategy::Erg | Strategy::Free | Strategy::Zero) {
            return Err(Error::InvalidParameter(format!(
                "{s} is not a noisy-cell strategy"
            )));
        }
    }
    let spectrum = spectrum_of(h)?;
    let zero = if strategies.contains(&Strategy::Zero) {
        Some(optimal_unitary(rho0, &spectrum)?.matrix)
    } else {
        None
    };
    let mut traj = Trajectory {
        times: t_grid.to_vec(),
        states: opts.retain_states.then(Vec::new),
        ..Default::default()
    };
    for s in strategies {
        traj.work_by_strategy
            .insert(*s, Vec::with_capacity(t_grid.len()));
    }
    let hm = h.matrix();
    propagate(rho0, h, &spectrum, model, t_grid, opts, |k, rho| {
        let (drift, min) = diagnose(rho)?;
        let state = QuantumState::Mixed(rho.clone());
        traj.trace_drift.push(drift);
        traj.min_eigenvalue.push(min);
        traj.energy.push(energy_of_matrix(&state, hm)?);
        traj.ergotropy
            .push(ergotropy_of_matrix(&state, hm, &spectrum)?);
        for s in strategies {
            let u = match s {
                Strategy::Erg => optimal_unitary(&state, &spectrum)?.matrix,
                Strategy::Free => {
                    let free = rho0.transformed(&spectrum.propagator(t_grid[k]));
                    optimal_unitary(&free, &spectrum)?.matrix
                }
                _ => zero.clone().expect("zero strategy prepared"),
            };
            let w = extracted_work(&state, &u, hm)?;
            traj.work_by_strategy.get_mut(s).expect("inserted").push(w);
        }
        if let Some(states) = traj.states.as_mut() {
            states.push(rho.clone());
        }
        Ok(())
    })?;
    Ok(traj)
}

/// `n` evenly spaced times on `[0, t_max]` (`n ≥ 2`), or `[0]` for `n = 1`.
pub fn uniform_grid(t_max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..samples)
            .map(|k| t_max * k as f64 / (samples - 1) as f64)
            .collect(),
    }
}
