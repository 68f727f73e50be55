//! Values checked against independent analytic oracles.

use std::f64::consts::PI;

use qcell_core::chirality::{
    chiral_complete_max, chiral_ring_energies, chiral_ring_max,
    localized_ergotropy_chiral_invariance, phase_grid,
};
use qcell_core::linalg::{c, inner, CVector};
use qcell_core::noise::dephasing_limit;
use qcell_core::protocols::{localized_search_discharge, mixed_optimal_unitary, SearchKind};
use qcell_core::spectral::KRYLOV_TOL;
use qcell_core::thermo::{
    eigen_state, ergotropy, inverse_thermal_state_in, localized_state,
    thermal_inverse_ergotropy_closed_form, ClosedFormKind, ThermalSpec,
};
use qcell_core::{eigh, krylov_reduce, spectrum_of, TopologySpec};

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn assert_multiset(a: &[f64], b: &[f64], tol: f64, what: &str) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{what}: {x} vs {y}");
    }
}

#[test]
fn ring_spectrum_is_cosine_band() {
    for n in 3..=32 {
        let j = 1.7;
        let h = TopologySpec::ring(n).with_coupling(j).build().unwrap();
        let oracle = sorted(
            (0..n)
                .map(|l| -2.0 * j * (2.0 * PI * l as f64 / n as f64).cos())
                .collect(),
        );
        let dense = eigh(&h).unwrap();
        assert_multiset(
            dense.eigenvalues().as_slice().unwrap(),
            &oracle,
            1e-9,
            "ring",
        );
    }
}

#[test]
fn wheel_spectrum_is_rim_band_plus_hub_pair() {
    for n in 4..=32 {
        let h = TopologySpec::wheel(n).build().unwrap();
        let rim = n - 1;
        let mut oracle: Vec<f64> = (1..rim)
            .map(|k| -2.0 * (2.0 * PI * k as f64 / rim as f64).cos())
            .collect();
        let root = (n as f64).sqrt();
        oracle.push(-1.0 - root);
        oracle.push(-1.0 + root);
        let dense = eigh(&h).unwrap();
        assert_multiset(
            dense.eigenvalues().as_slice().unwrap(),
            &sorted(oracle),
            1e-9,
            "wheel",
        );
    }
}

#[test]
fn complete_spectrum() {
    let s = eigh(&TopologySpec::complete(3).build().unwrap()).unwrap();
    assert_multiset(
        s.eigenvalues().as_slice().unwrap(),
        &[-2.0, 1.0, 1.0],
        1e-12,
        "K3",
    );
    let s = eigh(&TopologySpec::wheel(9).build().unwrap()).unwrap();
    assert!((s.ground_energy() + 4.0).abs() < 1e-12 && (s.top_energy() - 2.0).abs() < 1e-12);
}

#[test]
fn odd_ring_bandwidth_uses_pi_over_n_shift() {
    let s = eigh(&TopologySpec::ring(7).build().unwrap()).unwrap();
    let oracle = 2.0 * (1.0 + (PI / 7.0).cos());
    assert!((s.bandwidth() - oracle).abs() < 1e-12);
    assert!((oracle - 3.8019).abs() < 1e-4);
}

fn site(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = c(1.0, 0.0);
    v
}

#[test]
fn krylov_pairs_for_hub_and_complete_starts() {
    for n in [4usize, 5, 9, 16, 33] {
        for (spec, diag) in [
            (TopologySpec::wheel(n), 2.0),
            (TopologySpec::complete(n), n as f64 - 2.0),
        ] {
            let j = 0.8;
            let h = spec.clone().with_coupling(j).build().unwrap();
            let k = krylov_reduce(&h, &site(n, 0), KRYLOV_TOL).unwrap();
            assert_eq!(k.m(), 2, "{spec}");
            let r = k.reduced_h();
            let off = ((n - 1) as f64).sqrt();
            let expected = [[0.0, -j * off], [-j * off, -j * diag]];
            for a in 0..2 {
                for b in 0..2 {
                    assert!(
                        (r[[a, b]] - expected[a][b]).abs() < 1e-10,
                        "{spec} ({a},{b})"
                    );
                }
            }
            let s = k.basis_vector(1);
            let amp = 1.0 / off;
            assert!(s[0].norm() < 1e-12);
            for x in 1..n {
                assert!((s[x] - c(amp, 0.0)).norm() < 1e-12, "{spec}: uniform rim");
            }
        }
    }
}

#[test]
fn krylov_dynamics_match_full_space() {
    let cases = [
        (TopologySpec::wheel(12), 0usize),
        (TopologySpec::complete(9), 0),
        (TopologySpec::ring(10), 3),
        (TopologySpec::chiral_ring(7, 0.3), 2),
    ];
    for (spec, start) in cases {
        let h = spec.build().unwrap();
        let n = h.dim();
        let psi0 = site(n, start);
        let k = krylov_reduce(&h, &psi0, KRYLOV_TOL).unwrap();
        let full = eigh(&h).unwrap();
        for step in 0..=100 {
            let t = 0.1 * step as f64;
            let reduced = k.propagate(t).unwrap();
            let exact = full.propagator(t).dot(&psi0);
            for x in 0..n {
                assert!((reduced[x] - exact[x]).norm() < 1e-8, "{spec} t={t}");
            }
        }
    }
}

#[test]
fn krylov_from_eigenvector_is_one_dimensional() {
    let h = TopologySpec::wheel(8).build().unwrap();
    let s = eigh(&h).unwrap();
    let k = krylov_reduce(&h, &s.eigenvector(0), KRYLOV_TOL).unwrap();
    assert_eq!(k.m(), 1);
}

#[test]
fn thermal_examples() {
    let e = std::f64::consts::E;
    let ring3 = TopologySpec::ring(3).build().unwrap();
    let s = spectrum_of(&ring3).unwrap();
    let w = ergotropy(
        &inverse_thermal_state_in(&s, ThermalSpec::new(1.0).unwrap()),
        &ring3,
    )
    .unwrap();
    let oracle = 3.0 * (e * e - 1.0 / e) / (2.0 / e + e * e);
    assert!((w - oracle).abs() < 1e-12);
    let u = mixed_optimal_unitary(
        &inverse_thermal_state_in(&s, ThermalSpec::new(1.0).unwrap()),
        &s,
    )
    .unwrap();
    let rho = inverse_thermal_state_in(&s, ThermalSpec::new(1.0).unwrap());
    assert!((u.work_on(&rho, &ring3).unwrap() - oracle).abs() < 1e-9);

    let w4 = thermal_inverse_ergotropy_closed_form(
        ClosedFormKind::Ring4,
        ThermalSpec::new(1.0).unwrap(),
        1.0,
    );
    assert!((w4 - 4.0 * 2f64.sinh() / (1.0 + 2f64.cosh())).abs() < 1e-13);
    let w0 = thermal_inverse_ergotropy_closed_form(
        ClosedFormKind::Complete { n: 7 },
        ThermalSpec::new(0.0).unwrap(),
        1.0,
    );
    assert_eq!(w0, 0.0);
}

#[test]
fn dephased_ring3_keeps_one_coupling_unit() {
    let j = 1.4;
    let h = TopologySpec::ring(3).with_coupling(j).build().unwrap();
    let s = spectrum_of(&h).unwrap();
    let lim = dephasing_limit(&localized_state(3, 0).unwrap(), &s);
    assert!((ergotropy(&lim, &h).unwrap() - j).abs() < 1e-12);
}

#[test]
fn ground_of_ring3_is_uniform() {
    let s = spectrum_of(&TopologySpec::ring(3).build().unwrap()).unwrap();
    let g = eigen_state(&s, 0).unwrap();
    let u = CVector::from_elem(3, c(1.0 / 3f64.sqrt(), 0.0));
    assert!((inner(g.as_pure().unwrap().view(), u.view()).norm() - 1.0).abs() < 1e-14);
}

#[test]
fn chiral_ring_energies_match_dense_solver_on_full_grid() {
    std::thread::scope(|scope| {
        for n in 3..=32 {
            scope.spawn(move || {
                for g in phase_grid(720) {
                    let h = TopologySpec::chiral_ring(n, g).build().unwrap();
                    let dense = eigh(&h).unwrap();
                    let closed = chiral_ring_energies(n, g, 1.0).unwrap();
                    let what = format!("chiral ring n={n} γ={g}");
                    assert_multiset(
                        dense.eigenvalues().as_slice().unwrap(),
                        &closed,
                        1e-9,
                        &what,
                    );
                }
            });
        }
    });
}

#[test]
fn chiral_maxima_examples() {
    let (m3, _) = chiral_ring_max(3, 1.0).unwrap();
    assert!((m3 - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    let (m5, _) = chiral_ring_max(5, 1.0).unwrap();
    assert!((m5 - 3.8042).abs() < 1e-4);
    for n in (3..=31).step_by(2) {
        let (m, _) = chiral_ring_max(n, 1.0).unwrap();
        let plain = eigh(&TopologySpec::ring(n).build().unwrap())
            .unwrap()
            .bandwidth();
        assert!(m > plain && m < 4.0, "n = {n}");
    }
    let (c3, _) = chiral_complete_max(3, 1.0).unwrap();
    assert!((c3 - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    let (c4, _) = chiral_complete_max(4, 1.0).unwrap();
    assert!((c4 - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
    for n in 3..=32 {
        let (m, table) = chiral_complete_max(n, 1.0).unwrap();
        let bw = eigh(&TopologySpec::chiral_complete(table).build().unwrap())
            .unwrap()
            .bandwidth();
        assert!((bw - m).abs() < 1e-8);
        assert!(m >= n as f64 - 1e-9, "n = {n}");
    }
}

#[test]
fn localized_ergotropy_under_chiral_phases() {
    // equal at phases that are multiples of 2π/N, different at the optima
    let n = 5;
    let r = localized_ergotropy_chiral_invariance(&TopologySpec::chiral_ring(n, 2.0 * PI / 5.0))
        .unwrap();
    assert!(r.holds);
    let (_, table) = chiral_complete_max(4, 1.0).unwrap();
    let r = localized_ergotropy_chiral_invariance(&TopologySpec::chiral_complete(table)).unwrap();
    assert!((r.w_localized_plain - 3.0).abs() < 1e-10);
    assert!((r.w_localized_chiral - (1.0 + 2f64.sqrt())).abs() < 1e-10);
    assert!(!r.holds);
}

#[test]
fn localized_search_fidelities() {
    let c = localized_search_discharge(SearchKind::Complete, 64, 1.0).unwrap();
    assert!(c.fidelity >= 0.98);
    let w = localized_search_discharge(SearchKind::Wheel, 64, 1.0).unwrap();
    assert!(w.fidelity >= 0.9);
    assert!((w.fidelity - w.reduced_fidelity).abs() < 1e-8);
    let small = localized_search_discharge(SearchKind::Complete, 4, 1.0).unwrap();
    assert!(small.plan.t_star > 0.0 && small.plan.t_star <= 20.0);
}
