//! Chiral phases as a bandwidth (maximal ergotropy) resource.
//!
//! A chiral ring carries `−J e^{iγ}` on every forward hop and has energies
//! `E_l(γ) = −2J cos(γ + 2πl/N)`. Chiral complete cells are kept circulant:
//! hop `(a, b)` carries `−J e^{iθ_{(b−a) mod N}}` with `θ_{N−m} = −θ_m`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graphs::{Topology, TopologySpec};
use crate::protocols::golden_max;
use crate::spectral::eigh;
use crate::thermo::{ergotropy, localized_state};

/// Coarse grid size of a γ scan over `[0, 2π)`.
pub const SCAN_POINTS: usize = 720;
/// Final bracket width of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-10;

fn check_ring(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::TooSmall {
            kind: "chiral-ring",
            min: 3,
            n,
        });
    }
    Ok(())
}

/// `−2J cos(γ + 2πl/N)` for `l = 0..N`, ascending.
pub fn chiral_ring_energies(n: usize, gamma: f64, coupling_j: f64) -> Result<Vec<f64>> {
    check_ring(n)?;
    let mut e: Vec<f64> = (0..n)
        .map(|l| -2.0 * coupling_j * (gamma + 2.0 * PI * l as f64 / n as f64).cos())
        .collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Closed-form bandwidth of the chiral ring.
pub fn chiral_ring_bandwidth(n: usize, gamma: f64, coupling_j: f64) -> Result<f64> {
    let e = chiral_ring_energies(n, gamma, coupling_j)?;
    Ok(e[n - 1] - e[0])
}

/// Bandwidth of the constructed chiral ring from the dense eigensolver.
pub fn chiral_ring_bandwidth_numeric(n: usize, gamma: f64, coupling_j: f64) -> Result<f64> {
    let h = TopologySpec::chiral_ring(n, gamma)
        .with_coupling(coupling_j)
        .build()?;
    Ok(eigh(&h)?.bandwidth())
}

/// `(max_γ Δ(γ), argmax)`: `4J sin(π(N−1)/2N)` at `γ = π/2N` for odd `N`,
/// `4J` at `γ = 0` for even `N`.
pub fn chiral_ring_max(n: usize, coupling_j: f64) -> Result<(f64, f64)> {
    check_ring(n)?;
    let nf = n as f64;
    if n % 2 == 1 {
        Ok((
            4.0 * coupling_j * (PI * (nf - 1.0) / (2.0 * nf)).sin(),
            PI / (2.0 * nf),
        ))
    } else {
        Ok((4.0 * coupling_j, 0.0))
    }
}

/// Bandwidth sampled over a phase grid, with the refined maximum.
#[derive(Debug, Clone)]
pub struct ChiralScanResult {
    pub gamma_grid: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub argmax_gamma: f64,
    pub max_bandwidth: f64,
}

impl ChiralScanResult {
    /// Locates the best grid point (first on ties) and refines it by
    /// golden-section search on the neighbouring interval.
    pub fn refine(
        gamma_grid: Vec<f64>,
        bandwidth: Vec<f64>,
        f: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        if gamma_grid.is_empty() || gamma_grid.len() != bandwidth.len() {
            return Err(Error::InvalidParameter(
                "scan grid and values must match".into(),
            ));
        }
        let mut best = 0;
        let tie = 1e-12 * bandwidth.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        for k in 1..bandwidth.len() {
            if bandwidth[k] > bandwidth[best] + tie {
                best = k;
            }
        }
        let step = if gamma_grid.len() > 1 {
            gamma_grid[1] - gamma_grid[0]
        } else {
            0.0
        };
        let centre = gamma_grid[best];
        let mut argmax = centre;
        let mut max = bandwidth[best];
        if step > 0.0 {
            let failure = std::cell::Cell::new(None);
            let eval = |g: f64| match f(g) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NEG_INFINITY
                }
            };
            let (g, v) = golden_max(eval, centre - step, centre + step, REFINE_TOL);
            if let Some(e) = failure.take() {
                return Err(e);
            }
            if v > max + tie {
                argmax = g.rem_euclid(2.0 * PI);
                max = v;
            }
        }
        Ok(Self {
            gamma_grid,
            bandwidth,
            argmax_gamma: argmax,
            max_bandwidth: max,
        })
    }
}

/// `points` phases `2πk/points`, `k = 0..points`.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 2.0 * PI * k as f64 / points as f64)
        .collect()
}

/// Numerical γ scan of the chiral ring bandwidth (dense eigensolver).
pub fn chiral_ring_scan(n: usize, coupling_j: f64, points: usize) -> Result<ChiralScanResult> {
    check_ring(n)?;
    let grid = phase_grid(points);
    let bw = grid
        .iter()
        .map(|&g| chiral_ring_bandwidth_numeric(n, g, coupling_j))
        .collect::<Result<Vec<_>>>()?;
    ChiralScanResult::refine(grid, bw, |g| {
        chiral_ring_bandwidth_numeric(n, g, coupling_j)
    })
}

/// Circulant phases `θ_m = π/2 − πm(μ+ν)/N` with `μ = ν + 1`, `θ_{N−m} = −θ_m`
/// and, for even `N`, `θ_{N/2} = νπ`. Returns the table `γ_{a,b} = θ_{(b−a) mod N}`.
pub fn chiral_complete_phase_table(n: usize, nu: u32) -> Array2<f64> {
    let mu = nu + 1;
    let s = (mu + nu) as f64;
    chiral_complete_table_from(n, |m| PI / 2.0 - PI * m as f64 * s / n as f64, nu)
}

/// One-parameter family `θ_m(γ) = γ − πm/N` (with `θ_{N/2} = 0`); `γ = π/2`
/// recovers the optimal table for `ν = 0`.
pub fn chiral_complete_family_table(n: usize, gamma: f64) -> Array2<f64> {
    chiral_complete_table_from(n, |m| gamma - PI * m as f64 / n as f64, 0)
}

fn chiral_complete_table_from(n: usize, theta: impl Fn(usize) -> f64, nu: u32) -> Array2<f64> {
    let mut th = vec![0.0; n];
    for m in 1..n {
        if 2 * m < n {
            th[m] = theta(m);
            th[n - m] = -th[m];
        } else if 2 * m == n {
            th[m] = if nu.is_multiple_of(2) { 0.0 } else { PI };
        }
    }
    Array2::from_shape_fn(
        (n, n),
        |(a, b)| if a == b { 0.0 } else { th[(b + n - a) % n] },
    )
}

/// Closed-form maximal bandwidth of the chiral complete cell:
/// `2J csc(π/2N) sin((N−1)π/2N)` (odd `N`), `2J cot(π/2N)` (even `N`).
pub fn chiral_complete_max_closed_form(n: usize, coupling_j: f64) -> f64 {
    let x = PI / (2.0 * n as f64);
    if n % 2 == 1 {
        2.0 * coupling_j / x.sin() * ((n as f64 - 1.0) * x).sin()
    } else {
        2.0 * coupling_j / x.tan()
    }
}

/// Closed-form maximum and a phase table (`ν = 0`) realizing it.
pub fn chiral_complete_max(n: usize, coupling_j: f64) -> Result<(f64, Array2<f64>)> {
    if n < 3 {
        return Err(Error::TooSmall {
            kind: "chiral-complete",
            min: 3,
            n,
        });
    }
    Ok((
        chiral_complete_max_closed_form(n, coupling_j),
        chiral_complete_phase_table(n, 0),
    ))
}

/// Localized-state ergotropy of a chiral cell next to its plain counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub w_localized_chiral: f64,
    pub w_localized_plain: f64,
    pub holds: bool,
}

pub const INVARIANCE_TOL: f64 = 1e-9;

/// Compares `W(|x_0⟩)` on a chiral cell and on the same graph without
/// phases. Reports the values and whether they agree within
/// [`INVARIANCE_TOL`]; agreement is not assumed.
pub fn localized_ergotropy_chiral_invariance(spec: &TopologySpec) -> Result<InvarianceReport> {
    if !matches!(
        spec.kind,
        Topology::ChiralRing { .. } | Topology::ChiralComplete { .. }
    ) {
        return Err(Error::Unsupported(format!(
            "{} is not a chiral cell",
            spec.kind_name()
        )));
    }
    let plain = spec
        .plain_counterpart()
        .expect("chiral cells have a plain counterpart");
    let n = spec.n();
    let x = localized_state(n, 0)?;
    let w_chiral = ergotropy(&x, &spec.build()?)?;
    let w_plain = ergotropy(&x, &plain.build()?)?;
    Ok(InvarianceReport {
        w_localized_chiral: w_chiral,
        w_localized_plain: w_plain,
        holds: (w_chiral - w_plain).abs() <= INVARIANCE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_examples() {
        assert!((chiral_ring_bandwidth(4, 0.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
        let b = chiral_ring_bandwidth(3, PI / 6.0, 1.0).unwrap();
        assert!((b - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!((chiral_ring_bandwidth(3, 0.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(chiral_ring_bandwidth(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_matches_dense_solver() {
        for n in 3..12 {
            for k in 0..17 {
                let g = 0.37 * k as f64;
                let a = chiral_ring_bandwidth(n, g, 1.3).unwrap();
                let b = chiral_ring_bandwidth_numeric(n, g, 1.3).unwrap();
                assert!((a - b).abs() < 1e-9, "n={n} γ={g}");
            }
        }
    }

    #[test]
    fn ring_maxima() {
        let (m3, g3) = chiral_ring_max(3, 1.0).unwrap();
        assert!((m3 - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!((chiral_ring_bandwidth(3, g3, 1.0).unwrap() - m3).abs() < 1e-12);
        let (m5, _) = chiral_ring_max(5, 1.0).unwrap();
        assert!((m5 - 4.0 * (2.0 * PI / 5.0).sin()).abs() < 1e-12);
        assert_eq!(chiral_ring_max(6, 1.0).unwrap(), (4.0, 0.0));
    }

    #[test]
    fn scan_finds_closed_form() {
        for n in [3, 4, 7] {
            let scan = chiral_ring_scan(n, 1.0, SCAN_POINTS).unwrap();
            let (m, _) = chiral_ring_max(n, 1.0).unwrap();
            assert!((scan.max_bandwidth - m).abs() < 1e-8);
            assert_eq!(scan.gamma_grid.len(), SCAN_POINTS);
        }
    }

    #[test]
    fn complete_tables_realize_closed_form() {
        for n in 3..10 {
            for nu in [0, 1] {
                let table = chiral_complete_phase_table(n, nu);
                let h = TopologySpec::chiral_complete(table).build().unwrap();
                let bw = eigh(&h).unwrap().bandwidth();
                assert!(
                    (bw - chiral_complete_max_closed_form(n, 1.0)).abs() < 1e-8,
                    "n={n} ν={nu}"
                );
            }
        }
        assert!((chiral_complete_max_closed_form(3, 1.0) - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(
            (chiral_complete_max_closed_form(4, 1.0) - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12
        );
    }

    #[test]
    fn family_table_is_valid_and_hits_optimum() {
        for n in 3..9 {
            let table = chiral_complete_family_table(n, PI / 2.0);
            let h = TopologySpec::chiral_complete(table).build().unwrap();
            let bw = eigh(&h).unwrap().bandwidth();
            assert!((bw - chiral_complete_max_closed_form(n, 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn invariance_report() {
        let trivial =
            localized_ergotropy_chiral_invariance(&TopologySpec::chiral_ring(5, 0.0)).unwrap();
        assert!(trivial.holds);
        let (_, g) = chiral_ring_max(5, 1.0).unwrap();
        let r = localized_ergotropy_chiral_invariance(&TopologySpec::chiral_ring(5, g)).unwrap();
        assert!((r.w_localized_plain - 2.0).abs() < 1e-10);
        assert!((r.w_localized_chiral - 2.0 * (PI / 10.0).cos()).abs() < 1e-10);
        assert!(!r.holds);
        assert!(localized_ergotropy_chiral_invariance(&TopologySpec::ring(5)).is_err());
    }
}
