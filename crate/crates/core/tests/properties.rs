//! Randomised invariants of the forward model.

use std::path::PathBuf;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use hwlwa::components::ControlState;
use hwlwa::dispersion::{antenna_two_port, power_budget, transverse_root};
use hwlwa::io::load_config;
use hwlwa::steering::{dispersion_sweep, Antenna};
use hwlwa::twoport::{line_abcd, shunt_abcd};

const PF: f64 = 1e-12;

fn antenna() -> &'static Antenna {
    static ANT: OnceLock<Antenna> = OnceLock::new();
    ANT.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/nominal.toml");
        load_config(&path).expect("shipped config").antenna
    })
}

fn state_strategy() -> impl Strategy<Value = ControlState> {
    (
        prop::collection::vec(0.2f64..=1.0, 12),
        prop::collection::vec(any::<bool>(), 12),
    )
        .prop_map(|(c, d)| {
            let mut s = ControlState::uniform(6, 0.6 * PF);
            for (i, c) in c.iter().enumerate() {
                s.set_capacitance(i, c * PF);
            }
            for (i, cell) in s.cells.iter_mut().enumerate() {
                cell.diode_left = d[2 * i];
                cell.diode_right = d[2 * i + 1];
            }
            s
        })
}

#[test]
fn nominal_peak_converges_from_eight_sub_samples() {
    let mut a = antenna().clone();
    let s = ControlState::uniform(6, 0.6 * PF);
    a.opts.aperture.sub_samples_per_cell = 8;
    let coarse = a.forward(&s, 31e9).unwrap();
    a.opts.aperture.sub_samples_per_cell = 16;
    let fine = a.forward(&s, 31e9).unwrap();
    assert!((coarse.theta_peak - fine.theta_peak).abs() < 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_sums_to_one(s in state_strategy(), f in 28e9f64..34e9) {
        let a = antenna();
        let b = power_budget(&a.geom, &s, &a.specs, &a.cal, f).unwrap();
        prop_assert!((b.total() - 1.0).abs() <= 1e-9);
        for p in [b.p_reflected, b.p_through, b.p_radiated, b.p_dissipated] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn two_port_is_reciprocal(s in state_strategy(), f in 28e9f64..34e9) {
        let a = antenna();
        let m = antenna_two_port(&a.geom, &s, &a.specs, &a.cal, f).unwrap();
        prop_assert!((m.s12 - m.s21).norm() <= 1e-9);
        prop_assert!(m.s11.norm_sqr() + m.s21.norm_sqr() <= 1.0 + 1e-9);
    }

    #[test]
    fn reciprocal_cell_has_unit_determinant(
        z0 in 20.0f64..100.0,
        beta in 100.0f64..2000.0,
        alpha in 0.0f64..50.0,
        g in 0.0f64..0.01,
        b in -0.1f64..0.1,
    ) {
        let half = line_abcd(z0, Complex64::new(alpha, beta), 2.5e-3);
        let cell = half.then(&shunt_abcd(Complex64::new(g, b))).then(&half);
        let t = cell.repeat(6);
        let scale = (t.a * t.d).norm() + (t.b * t.c).norm();
        prop_assert!((t.determinant() - 1.0).norm() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn transverse_root_falls_with_loading(chi in 0.0f64..5e4, extra in 1.0f64..1e4) {
        let w = 2.5e-3;
        prop_assert!(transverse_root(w, chi + extra).unwrap() < transverse_root(w, chi).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn theta_rises_with_capacitance(c in 0.2f64..0.95, dc in 0.02f64..0.2) {
        let a = antenna();
        let c2 = (c + dc).min(1.0);
        let t1 = a.forward(&ControlState::uniform(6, c * PF), 31e9).unwrap().theta_peak;
        let t2 = a.forward(&ControlState::uniform(6, c2 * PF), 31e9).unwrap().theta_peak;
        prop_assert!(t2 > t1, "theta({c}) = {t1}, theta({c2}) = {t2}");
    }

    #[test]
    fn phi_rises_with_asymmetry(c in 0.2f64..=1.0, k in -6i32..6) {
        let a = antenna();
        let p1 = a.forward(&ControlState::canonical(6, c * PF, k), 31e9).unwrap().phi_peak;
        let p2 = a.forward(&ControlState::canonical(6, c * PF, k + 1), 31e9).unwrap().phi_peak;
        prop_assert!(p2 >= p1 - 1e-9, "phi({k}) = {p1}, phi({}) = {p2}", k + 1);
    }

    #[test]
    fn mirrored_state_mirrors_beam(s in state_strategy(), f in 28e9f64..34e9) {
        let a = antenna();
        let b1 = a.forward(&s, f).unwrap();
        let b2 = a.forward(&s.mirrored(), f).unwrap();
        prop_assert!((b1.phi_peak + b2.phi_peak).abs() <= 1e-6);
        prop_assert!((b1.theta_peak - b2.theta_peak).abs() <= 1e-6);
        prop_assert!((b1.realized_gain_dbi - b2.realized_gain_dbi).abs() <= 1e-9);
    }

    #[test]
    fn beam_scans_with_frequency(c in 0.2f64..0.8, f in 28e9f64..33.5e9) {
        let a = antenna();
        let s = ControlState::uniform(6, c * PF);
        let rows = dispersion_sweep(a, &s, &[f, f + 0.5e9]).unwrap();
        let (t1, t2) = (rows[0].theta_nm1, rows[1].theta_nm1);
        if t1.is_finite() && t2.is_finite() {
            prop_assert!(t2 > t1, "theta_-1({f}) = {t1}, theta_-1({}) = {t2}", f + 0.5e9);
        }
    }

    #[test]
    fn peak_converges_in_sub_samples(k in -6i32..=6, f in 28e9f64..34e9) {
        let a = antenna();
        let s = ControlState::canonical(6, 0.6 * PF, k);
        let coarse = a.forward(&s, f).unwrap();
        let mut fine = a.clone();
        fine.opts.aperture.sub_samples_per_cell *= 2;
        let fine = fine.forward(&s, f).unwrap();
        prop_assert!((coarse.theta_peak - fine.theta_peak).abs() < 0.2);
        prop_assert!((coarse.phi_peak - fine.phi_peak).abs() < 0.2);
    }
}
