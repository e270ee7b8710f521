use critsense::fisher::{qfi_matrix, DerivativeMethod, Parameters};
use critsense::free_fermion::{ground_energy, qfi_transverse, DEFAULT_STEP};
use critsense::global_metric::{g_multi, ExactEngine, QuadratureOptions, SensingRegion, WeightMatrix};
use critsense::lattice::{ground_state, ControlField, FieldPoint, Hamiltonian, ProbeConfig, SolverMethod};
use critsense::Error;

fn chain(length: usize) -> ProbeConfig {
    ProbeConfig::new(length, 1.0, ControlField::default()).unwrap()
}

#[test]
fn free_fermion_matches_exact_diagonalization() {
    for length in [8, 10] {
        for hz in [0.5, 1.0, 1.5] {
            let ed = qfi_matrix(
                &chain(length),
                &FieldPoint::transverse(hz),
                Parameters::Transverse,
                DerivativeMethod::Perturbation,
            )
            .unwrap()
            .matrix
            .get(0, 0);
            let ff = qfi_transverse(hz, 1.0, length, DEFAULT_STEP).unwrap().qfi_extrapolated;
            let rel = (ff - ed).abs() / ed;
            assert!(rel <= 1e-3, "L={length} hz={hz}: ED {ed} FF {ff} rel {rel:.2e}");
        }
    }
}

#[test]
fn free_fermion_energy_matches_spectrum() {
    for hz in [0.3, 1.0, 2.0] {
        let h = Hamiltonian::new(&chain(8), &FieldPoint::transverse(hz)).unwrap();
        let e = ground_state(&h, SolverMethod::Dense).unwrap().ground_energy();
        let ff = ground_energy(hz, 1.0, 8).unwrap();
        assert!((e - ff).abs() < 1e-9 * e.abs(), "hz={hz}: {e} vs {ff}");
    }
}

#[test]
fn derivative_paths_agree() {
    let c = chain(8).with_control(ControlField::new(1.39, -0.39));
    let h = FieldPoint::new(0.05, -0.03);
    let pt = qfi_matrix(&c, &h, Parameters::Skew, DerivativeMethod::Perturbation).unwrap().matrix;
    let lr = qfi_matrix(&c, &h, Parameters::Skew, DerivativeMethod::LinearResponse).unwrap().matrix;
    let fd = qfi_matrix(&c, &h, Parameters::Skew, DerivativeMethod::FiniteDifference { step: 1e-4 }).unwrap().matrix;
    assert!(lr.difference(&pt).max_abs() <= 1e-8 * pt.max_abs());
    assert!(fd.difference(&pt).max_abs() <= 1e-5 * pt.max_abs());
}

#[test]
fn finite_difference_tracks_perturbation_at_ten_sites() {
    let c = chain(10);
    for h in [FieldPoint::new(0.3, 0.8), FieldPoint::new(1.2, 0.4)] {
        let pt = qfi_matrix(&c, &h, Parameters::Skew, DerivativeMethod::Perturbation).unwrap().matrix;
        let fd =
            qfi_matrix(&c, &h, Parameters::Skew, DerivativeMethod::FiniteDifference { step: 1e-4 }).unwrap().matrix;
        assert!(fd.difference(&pt).max_abs() <= 1e-5 * pt.max_abs(), "{h:?}");
    }
}

#[test]
fn operating_point_information_is_usable() {
    let c = chain(10).with_control(ControlField::new(1.39, -0.39));
    let q = qfi_matrix(&c, &FieldPoint::new(0.0, 0.0), Parameters::Skew, DerivativeMethod::auto(10)).unwrap();
    assert!(q.matrix.is_psd(1e-12));
    let t = q.matrix.trace_inverse().unwrap();
    assert!(t.is_finite() && t > 0.0);
    assert!(q.gap > 0.0);
}

#[test]
fn zero_control_is_refused_as_degenerate() {
    // with no field the two Néel states are exactly degenerate
    let region = SensingRegion::rectangle([0.0, 0.0], [0.02, 0.02]).unwrap();
    let opts = QuadratureOptions { initial_nodes: 2, max_nodes: 8, rel_tol: 1e-3 };
    let engine = |b: ControlField| ExactEngine::new(chain(10).with_control(b), Parameters::Skew);
    let err = g_multi(&engine(ControlField::default()), &region, &WeightMatrix::identity(2), &opts).unwrap_err();
    assert!(matches!(err, Error::NodeFailure { .. }), "{err}");
    if let Error::NodeFailure { source, .. } = err {
        assert!(matches!(*source, Error::DegenerateGround { .. } | Error::SingularInformation { .. }), "{source}");
    }
    // a control field near the critical endpoint does work
    let near = g_multi(&engine(ControlField::new(1.97, 0.05)), &region, &WeightMatrix::identity(2), &opts).unwrap();
    let far = g_multi(&engine(ControlField::new(0.5, 1.5)), &region, &WeightMatrix::identity(2), &opts).unwrap();
    assert!(near.value < far.value);
}
