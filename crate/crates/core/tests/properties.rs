use proptest::prelude::*;

use iontomo::hilbert::{HilbertDims, Level};
use iontomo::linalg::{max_abs, CMatrix, C64};
use iontomo::protocol::{coherence_sampled, prepare_initial, Protocol, ProtocolSettings};
use iontomo::pulses::{compile_pulse, PulseSpec};
use iontomo::hilbert::Mode;
use iontomo::states;
use iontomo::tomography::project_physical;

fn level() -> impl Strategy<Value = Level> {
    prop_oneof![Just(Level::Minus), Just(Level::Plus), Just(Level::Xi)]
}

fn level_pair() -> impl Strategy<Value = (Level, Level)> {
    (level(), level()).prop_filter("distinct levels", |(a, b)| a != b)
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::X), Just(Mode::Z)]
}

fn pulse() -> impl Strategy<Value = PulseSpec> {
    let angle = -4.0..4.0f64;
    let phase = 0.0..std::f64::consts::TAU;
    prop_oneof![
        (level_pair(), angle.clone(), phase.clone()).prop_map(|(l, a, p)| PulseSpec::carrier(l, a, p)),
        (mode(), level_pair(), angle.clone(), phase.clone()).prop_map(|(m, l, a, p)| PulseSpec::jc(m, l, a, p)),
        (mode(), level_pair(), angle.clone(), phase).prop_map(|(m, l, a, p)| PulseSpec::ajc(m, l, a, p)),
        (prop_oneof![Just(Level::Minus), Just(Level::Plus)], angle.clone())
            .prop_map(|(l, a)| PulseSpec::erot(l, a)),
        angle.prop_map(PulseSpec::vrot),
    ]
}

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0..1.0f64, 2 * n * n).prop_map(move |v| {
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn index_is_a_bijection(dx in 2usize..7, dz in 2usize..7) {
        let d = HilbertDims::new(dx, dz).unwrap();
        for idx in 0..d.dim() {
            let (l, nx, nz) = d.decompose(idx);
            prop_assert_eq!(d.index(l, nx, nz), idx);
        }
    }

    #[test]
    fn pulses_are_unitary(p in pulse(), d in 3usize..6) {
        let dims = HilbertDims::new(d, d).unwrap();
        let u = compile_pulse(&p, dims).unwrap();
        prop_assert!(u.unitarity_error() <= 1e-10);
    }

    #[test]
    fn projection_is_physical_and_idempotent(m in hermitian(4)) {
        let shifted = &m + CMatrix::identity(4, 4) * C64::new(1.0, 0.0);
        let rho = project_physical(&shifted).unwrap();
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(rho.eigenvalues().iter().all(|e| *e >= -1e-12));
        let again = project_physical(rho.matrix()).unwrap();
        prop_assert!(max_abs(&(again.matrix() - rho.matrix())) < 1e-10);
    }

    #[test]
    fn dephasing_keeps_states_physical(re in -1.0..1.0f64, im in -1.0..1.0f64, lambda in 0.0..3.0f64) {
        let phi = states::coherent(C64::new(re, im), 12, 1e-3).unwrap();
        let out = states::dephase(&phi, lambda).unwrap();
        let rho = out.to_density_operator().unwrap();
        prop_assert!(rho.eigenvalues().iter().all(|e| *e >= -1e-12));
        for m in 0..12 {
            prop_assert!((out.element(m, m) - phi.element(m, m)).norm() < 1e-14);
            for n in 0..12 {
                prop_assert!(out.element(m, n).norm() <= phi.element(m, n).norm() + 1e-14);
            }
        }
    }

    #[test]
    fn exact_readout_matches_matrix_element(re in -0.8..0.8f64, im in -0.8..0.8f64, m in 0usize..3, n in 0usize..3) {
        let dims = HilbertDims::new(7, 7).unwrap();
        let phi = states::coherent(C64::new(re, im), 7, 1e-2).unwrap();
        let protocol = Protocol::new(ProtocolSettings::exact(dims)).unwrap();
        let value = protocol.measure_element(&phi, m, n).unwrap().value;
        prop_assert!((value - phi.element(m, n)).norm() < 1e-10);
    }
}

#[test]
fn sampled_mean_is_unbiased() {
    let dims = HilbertDims::new(5, 5).unwrap();
    let phi = states::coherent(C64::new(0.4, -0.3), 5, 1e-2).unwrap();
    let protocol = Protocol::new(ProtocolSettings::exact(dims)).unwrap();
    let rho0 = prepare_initial(&phi, dims).unwrap();
    let rho = protocol.transformed_state(&rho0, 1, 0).unwrap();
    let exact = protocol.measure_prepared(&rho0, 1, 0).unwrap().value;

    let draws: Vec<C64> = (0..64)
        .map(|seed| coherence_sampled(&rho, 1, 0, 2_000, seed).unwrap().value)
        .collect();
    let mean = draws.iter().sum::<C64>() / C64::new(64.0, 0.0);
    for part in [|z: C64| z.re, |z: C64| z.im] {
        let xs: Vec<f64> = draws.iter().map(|z| part(*z)).collect();
        let mu = xs.iter().sum::<f64>() / 64.0;
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 63.0;
        let sem = (var / 64.0).sqrt();
        assert!((part(mean) - part(exact)).abs() <= 3.0 * sem, "mean {mean} exact {exact}");
    }
}
