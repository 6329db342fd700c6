use approx::assert_relative_eq;
use photocount::fisher::{fisher_analytic_rabi, fisher_per_photon, fisher_per_photon_with, scan, FisherOptions, ScanSpec};
use photocount::{AtomParams, Theta};

#[test]
fn numeric_information_recovers_the_closed_form() {
    for omega in [1.0, 2.0, 5.0, 10.0] {
        let p = AtomParams::resonant(omega).unwrap();
        let exact = fisher_analytic_rabi(&p).unwrap();
        let f = fisher_per_photon(&p, Theta::Omega, None).unwrap();
        assert_relative_eq!(f.f_per_photon, exact.per_photon, max_relative = 1e-3);
        assert_relative_eq!(f.f_per_time, 4.0, max_relative = 1e-3);
        assert_relative_eq!(f.diagnostics.f_half_step, f.f_per_photon, max_relative = 1e-2);
    }
}

#[test]
fn density_and_amplitude_forms_agree_without_nodes() {
    for (omega, delta, eta) in [(5.0, 0.0, 0.5), (2.0, 1.0, 0.3), (3.0, 2.0, 0.8)] {
        let p = AtomParams::new(omega, delta, 1.0, eta).unwrap();
        for theta in [Theta::Omega, Theta::Delta] {
            let f = fisher_per_photon(&p, theta, None).unwrap();
            assert_relative_eq!(f.diagnostics.f_density_form, f.f_per_photon, max_relative = 5e-3);
        }
    }
}

#[test]
fn detuning_information_is_even() {
    for omega in [2.0, 5.0] {
        for delta in [0.5, 1.0, 3.0, 7.0] {
            let plus = fisher_per_photon(&AtomParams::new(omega, delta, 1.0, 1.0).unwrap(), Theta::Delta, None).unwrap();
            let minus = fisher_per_photon(&AtomParams::new(omega, -delta, 1.0, 1.0).unwrap(), Theta::Delta, None).unwrap();
            assert_relative_eq!(plus.f_per_photon, minus.f_per_photon, max_relative = 1e-6);
        }
    }
}

#[test]
fn scaled_uncertainty_grows_as_efficiency_drops() {
    let spec = ScanSpec {
        base: AtomParams::resonant(2.0).unwrap(),
        theta: Theta::Omega,
        omegas: vec![1.0, 4.0],
        deltas: vec![0.0],
        etas: vec![0.1, 0.4, 0.7, 1.0],
        options: FisherOptions::default(),
    };
    let table = scan(&spec);
    assert_eq!(table.rows.len(), 8);
    assert_eq!(table.diagnostics.failed_rows, 0);
    assert!(table.diagnostics.eta_monotonicity_violations.is_empty());
}

#[test]
fn explicit_step_is_respected() {
    let p = AtomParams::resonant(2.0).unwrap();
    let opts = FisherOptions { h: Some(1e-5), ..FisherOptions::default() };
    let f = fisher_per_photon_with(&p, Theta::Omega, &opts).unwrap();
    assert_eq!(f.diagnostics.h, 1e-5);
    assert_relative_eq!(f.f_per_photon, 9.0, max_relative = 1e-3);
}
