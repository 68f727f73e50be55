//! The experiment commands. Each returns a [`Report`]; nothing here touches
//! stdout or the filesystem except reading an edge list.

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qcell_core::chirality::{
    chiral_complete_family_table, chiral_complete_max_closed_form, chiral_ring_bandwidth_numeric,
    chiral_ring_max, phase_grid, ChiralScanResult, SCAN_POINTS,
};
use qcell_core::graphs::load_edge_list;
use qcell_core::linalg::random_unitary;
use qcell_core::noise::{uniform_grid, work_trajectory, EvolveOptions, NoiseModel};
use qcell_core::protocols::Strategy;
use qcell_core::thermo::{
    eigen_state, ergotropy_with, extracted_work, inverse_thermal_state_in, localized_state,
    thermal_inverse_ergotropy_closed_form, thermal_state_in, ClosedFormKind, ThermalSpec,
};
use qcell_core::{eigh, spectrum_of, Hamiltonian, QuantumState, Spectrum, TopologySpec};

use crate::config::{enum_name, NoiseArg, Settings, StateArg, StrategyArg, TopologyArg};
use crate::output::{Cell, Report, Table};

pub const NOISE_SAMPLES: usize = 101;
pub const PROBE_SAMPLES: usize = 1000;

/// Runs `f` on a pool of `settings.jobs` workers.
fn with_pool<T: Send>(settings: &Settings, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(f))
}

pub fn topology_spec(settings: &Settings, n: usize) -> Result<TopologySpec> {
    let spec = match settings.topology {
        TopologyArg::Ring => TopologySpec::ring(n),
        TopologyArg::Complete => TopologySpec::complete(n),
        TopologyArg::Wheel => TopologySpec::wheel(n),
        TopologyArg::ChiralRing => TopologySpec::chiral_ring(n, settings.gamma_phase),
        TopologyArg::ChiralComplete => {
            TopologySpec::chiral_complete(chiral_complete_family_table(n, settings.gamma_phase))
        }
        TopologyArg::Custom => {
            let path = settings
                .edge_list
                .as_ref()
                .context("--topology custom needs --edge-list")?;
            TopologySpec::custom(load_edge_list(path)?)
        }
    };
    let spec = spec.with_coupling(settings.coupling_j);
    spec.validate()?;
    Ok(spec)
}

fn hamiltonian(settings: &Settings) -> Result<Hamiltonian> {
    Ok(topology_spec(settings, settings.n)?.build()?)
}

fn first_beta(settings: &Settings) -> Result<ThermalSpec> {
    Ok(ThermalSpec::new(settings.betas[0])?)
}

pub fn initial_state(settings: &Settings, spectrum: &Spectrum) -> Result<QuantumState> {
    let n = spectrum.dim();
    Ok(match settings.state {
        StateArg::Localized => localized_state(n, settings.site)?,
        StateArg::TopEigenstate => eigen_state(spectrum, n - 1)?,
        StateArg::Thermal => thermal_state_in(spectrum, first_beta(settings)?),
        StateArg::InverseThermal => inverse_thermal_state_in(spectrum, first_beta(settings)?),
    })
}

pub fn spectrum(settings: &Settings) -> Result<Report> {
    let h = hamiltonian(settings)?;
    let s = spectrum_of(&h)?;
    let mut table = Table::new(&["l", "E_l", "degeneracy_group"]);
    for l in 0..s.dim() {
        table.push(vec![
            Cell::from(l),
            Cell::from(s.eigenvalue(l)),
            Cell::from(s.group_of(l)),
        ]);
    }
    let mut report = Report::new("spectrum", table);
    report.grid.push(("n", Cell::from(h.dim())));
    Ok(report)
}

fn scaling_row(settings: &Settings, n: usize) -> Result<Option<Vec<Cell>>> {
    let spec = match topology_spec(settings, n) {
        Ok(spec) => spec,
        Err(_) => return Ok(None),
    };
    let h = spec.build()?;
    let s = spectrum_of(&h)?;
    if settings.site >= n {
        return Ok(None);
    }
    let w_loc = ergotropy_with(&localized_state(n, settings.site)?, &h, &s)?;
    Ok(Some(vec![
        Cell::from(n),
        Cell::from(spec.kind_name()),
        Cell::from(s.bandwidth()),
        Cell::from(w_loc),
    ]))
}

/// Bandwidth and localized ergotropy over `n_min..=n_max`; sizes the
/// topology does not admit are skipped.
pub fn scaling(settings: &Settings) -> Result<Report> {
    if settings.topology == TopologyArg::Custom {
        bail!("scaling needs a size-parametrized topology");
    }
    let sizes: Vec<usize> = (settings.n_min..=settings.n_max).collect();
    let rows = with_pool(settings, || {
        sizes
            .par_iter()
            .map(|&n| scaling_row(settings, n))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut table = Table::new(&["n", "topology", "W_max", "W_localized"]);
    for row in rows.into_iter().flatten() {
        table.push(row);
    }
    let mut report = Report::new("scaling", table);
    report.grid.push(("n_min", Cell::from(settings.n_min)));
    report.grid.push(("n_max", Cell::from(settings.n_max)));
    Ok(report)
}

/// Inverse-thermal ergotropy per β, generic against closed form.
pub fn thermal(settings: &Settings) -> Result<Report> {
    let spec = topology_spec(settings, settings.n)?;
    let kind = ClosedFormKind::from_topology(&spec)
        .context("thermal closed forms exist for ring 3, ring 4 and complete cells")?;
    let h = spec.build()?;
    let s = spectrum_of(&h)?;
    let rows = with_pool(settings, || {
        settings
            .betas
            .par_iter()
            .map(|&beta| -> Result<Vec<Cell>> {
                let thermal = ThermalSpec::new(beta)?;
                let generic = ergotropy_with(&inverse_thermal_state_in(&s, thermal), &h, &s)?;
                let closed = thermal_inverse_ergotropy_closed_form(kind, thermal, h.coupling_j());
                Ok(vec![
                    Cell::from(beta),
                    Cell::from(generic),
                    Cell::from(closed),
                    Cell::from((generic - closed).abs()),
                ])
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut table = Table::new(&["beta", "W_generic", "W_closed_form", "abs_diff"]);
    for row in rows {
        table.push(row);
    }
    Ok(Report::new("thermal", table))
}

pub fn noise_model(settings: &Settings) -> NoiseModel {
    match settings.noise {
        NoiseArg::Dephasing => NoiseModel::PureDephasing {
            gamma: settings.gamma,
        },
        NoiseArg::HakenStrobl => NoiseModel::HakenStrobl {
            gamma: settings.gamma,
        },
        NoiseArg::Qsw => NoiseModel::StochasticQw { p: settings.p },
    }
}

pub fn strategies(arg: StrategyArg) -> Vec<Strategy> {
    match arg {
        StrategyArg::Erg => vec![Strategy::Erg],
        StrategyArg::Free => vec![Strategy::Free],
        StrategyArg::Zero => vec![Strategy::Zero],
        StrategyArg::All => vec![Strategy::Erg, Strategy::Free, Strategy::Zero],
    }
}

/// Long table of work per strategy on a uniform time grid.
pub fn noise_trajectory(settings: &Settings) -> Result<Report> {
    let h = hamiltonian(settings)?;
    let s = spectrum_of(&h)?;
    let rho0 = initial_state(settings, &s)?;
    let samples = settings.samples.unwrap_or(NOISE_SAMPLES);
    let grid = uniform_grid(settings.t_max, samples);
    let chosen = strategies(settings.strategy);
    let opts = EvolveOptions {
        dt: settings.dt,
        ..Default::default()
    };
    let traj = work_trajectory(&h, &rho0, noise_model(settings), &chosen, &grid, opts)?;
    let mut table = Table::new(&["t", "strategy", "work", "ergotropy"]);
    for (k, &t) in traj.times.iter().enumerate() {
        for strategy in &chosen {
            table.push(vec![
                Cell::from(t),
                Cell::from(strategy.name()),
                Cell::from(traj.work_by_strategy[strategy][k]),
                Cell::from(traj.ergotropy[k]),
            ]);
        }
    }
    let mut report = Report::new("noise-trajectory", table);
    report.grid.push(("t_max", Cell::from(settings.t_max)));
    report.grid.push(("samples", Cell::from(samples)));
    report.grid.push(("dt", Cell::from(settings.dt)));
    report
        .grid
        .push(("noise", Cell::from(enum_name(&settings.noise))));
    Ok(report)
}

/// Bandwidth over the phase grid with the refined maximum and its closed
/// form. Rings sweep the uniform chiral phase; complete cells sweep the
/// family `θ_m(γ) = γ − πm/N`.
pub fn chiral_sweep(settings: &Settings) -> Result<Report> {
    let n = settings.n;
    let j = settings.coupling_j;
    let ring = match settings.topology {
        TopologyArg::Ring | TopologyArg::ChiralRing => true,
        TopologyArg::Complete | TopologyArg::ChiralComplete => false,
        _ => bail!("chiral-sweep supports ring and complete cells"),
    };
    let bandwidth = move |g: f64| -> qcell_core::Result<f64> {
        if ring {
            chiral_ring_bandwidth_numeric(n, g, j)
        } else {
            let spec =
                TopologySpec::chiral_complete(chiral_complete_family_table(n, g)).with_coupling(j);
            Ok(eigh(&spec.build()?)?.bandwidth())
        }
    };
    let closed = if ring {
        chiral_ring_max(n, j)?.0
    } else {
        topology_spec(settings, n)?;
        chiral_complete_max_closed_form(n, j)
    };
    let grid = phase_grid(settings.samples.unwrap_or(SCAN_POINTS));
    let values = with_pool(settings, || {
        grid.par_iter()
            .map(|&g| bandwidth(g))
            .collect::<qcell_core::Result<Vec<_>>>()
    })??;
    let scan = ChiralScanResult::refine(grid, values, bandwidth)?;

    let mut table = Table::new(&["gamma", "bandwidth"]);
    for (g, b) in scan.gamma_grid.iter().zip(&scan.bandwidth) {
        table.push(vec![Cell::from(*g), Cell::from(*b)]);
    }
    let mut summary = Table::new(&["argmax_gamma", "max_bandwidth", "closed_form", "diff"]);
    summary.push(vec![
        Cell::from(scan.argmax_gamma),
        Cell::from(scan.max_bandwidth),
        Cell::from(closed),
        Cell::from((scan.max_bandwidth - closed).abs()),
    ]);
    let mut report = Report::new("chiral-sweep", table);
    report.summary = Some(summary);
    report
        .grid
        .push(("points", Cell::from(scan.gamma_grid.len())));
    Ok(report)
}

/// Work extracted by seeded Haar-random unitaries, checked against the
/// ergotropy of the configured state.
pub fn probe(settings: &Settings) -> Result<Report> {
    let h = hamiltonian(settings)?;
    let s = spectrum_of(&h)?;
    let state = initial_state(settings, &s)?;
    let w_max = ergotropy_with(&state, &h, &s)?;
    let count = settings.samples.unwrap_or(PROBE_SAMPLES);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let unitaries: Vec<_> = (0..count)
        .map(|_| random_unitary(h.dim(), &mut rng))
        .collect();
    let works = with_pool(settings, || {
        unitaries
            .par_iter()
            .map(|u| extracted_work(&state, u, h.matrix()))
            .collect::<qcell_core::Result<Vec<_>>>()
    })??;

    let mut table = Table::new(&["probe", "work", "excess"]);
    let mut max_work = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for (k, &w) in works.iter().enumerate() {
        max_work = max_work.max(w);
        if w > w_max + 1e-9 {
            violations += 1;
        }
        table.push(vec![Cell::from(k), Cell::from(w), Cell::from(w - w_max)]);
    }
    let mut summary = Table::new(&["probes", "max_work", "ergotropy", "violations"]);
    summary.push(vec![
        Cell::from(count),
        Cell::from(max_work),
        Cell::from(w_max),
        Cell::from(violations),
    ]);
    let mut report = Report::new("probe", table);
    report.summary = Some(summary);
    report.grid.push(("seed", Cell::Int(settings.seed as i64)));
    Ok(report)
}
