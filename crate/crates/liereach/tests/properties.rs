//! Property tests: algebraic laws of the coefficient ring, invariances of
//! the closure computation, agreement between the two backends, and
//! determinism of everything that claims to be deterministic.

use std::sync::Arc;

use liereach::algebra::LieAlgebraSpec;
use liereach::cases::{
    bundled_systems, effective_mass_matrix, effective_mass_system, free_particle_2d,
    modulated_qubit, qubit_two_controls, MassProfile,
};
use liereach::exppoly::{ExpPoly, SymbolValues};
use liereach::propagate::reachable_sample;
use liereach::specfile::{
    canonical_json, load_spec, report_to_value, spec_to_value, steering_to_value, write_json,
};
use liereach::steering::steer;
use liereach::system::{
    check_sufficiency, AnalysisOptions, SystemBackend, SystemSpec, Verdict,
};
use liereach::tdop::TDOperator;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A random ring element with small-integer coefficients and rates, so all
/// formal identities below cancel exactly in floating point.
fn random_poly(rng: &mut ChaCha12Rng, with_symbols: bool) -> ExpPoly {
    let n_terms = rng.gen_range(1..=3);
    let mut p = ExpPoly::zero();
    for _ in 0..n_terms {
        let coeff = c(
            rng.gen_range(-4i32..=4) as f64,
            rng.gen_range(-4i32..=4) as f64,
        );
        let power = rng.gen_range(0..=3u32);
        let rate = c(
            rng.gen_range(-2i32..=2) as f64,
            rng.gen_range(-2i32..=2) as f64,
        );
        let mut term = ExpPoly::term(coeff, power, rate);
        if with_symbols && rng.gen_bool(0.4) {
            term = term.mul(&ExpPoly::symbol(rng.gen_range(0..=1)));
        }
        p = p.add(&term);
    }
    p
}

#[test]
fn ring_laws_hold_exactly_on_random_elements() {
    for trial in 0..200u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(0x51A7 ^ trial);
        let a = random_poly(&mut rng, true);
        let b = random_poly(&mut rng, true);
        let d = random_poly(&mut rng, true);

        // Commutativity, associativity, distributivity: exact because every
        // intermediate coefficient is a small complex integer.
        assert!(
            a.mul(&b).sub(&b.mul(&a)).is_zero(),
            "trial {trial}: multiplication must commute"
        );
        assert!(
            a.mul(&b).mul(&d).sub(&a.mul(&b.mul(&d))).is_zero(),
            "trial {trial}: multiplication must associate"
        );
        assert!(
            a.mul(&b.add(&d))
                .sub(&a.mul(&b).add(&a.mul(&d)))
                .is_zero(),
            "trial {trial}: multiplication must distribute over addition"
        );

        // The Leibniz rule as a formal identity, symbols included: the
        // derivative bumps each symbol order through the chain rule.
        assert!(
            a.mul(&b)
                .deriv()
                .sub(&a.deriv().mul(&b).add(&a.mul(&b.deriv())))
                .is_zero(),
            "trial {trial}: (ab)' must equal a'b + ab'"
        );
        assert!(
            a.add(&b).deriv().sub(&a.deriv().add(&b.deriv())).is_zero(),
            "trial {trial}: derivation must be additive"
        );
    }
}

#[test]
fn symbolic_derivatives_match_finite_differences() {
    // Symbol-free elements are honest functions of t, so the formal
    // derivative must agree with a central difference.
    let sym = SymbolValues::default();
    for trial in 0..200u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(0xD1FF ^ trial);
        let a = random_poly(&mut rng, false);
        let b = random_poly(&mut rng, false);
        let t = rng.gen_range(-1.0..1.0);

        let prod = a.mul(&b);
        let direct = prod.eval(t, &sym).unwrap();
        let split = a.eval(t, &sym).unwrap() * b.eval(t, &sym).unwrap();
        assert!(
            (direct - split).norm() <= 1e-12 * (1.0 + direct.norm()),
            "trial {trial}: product evaluation mismatch {direct} vs {split}"
        );

        let h = 1e-5;
        let fd = (a.eval(t + h, &sym).unwrap() - a.eval(t - h, &sym).unwrap()) / c(2.0 * h, 0.0);
        let exact = a.deriv().eval(t, &sym).unwrap();
        let d3 = a.deriv_n(3).eval(t, &sym).unwrap().norm();
        let tol = h * h * (d3 + 1.0) + 1e-9 * (1.0 + exact.norm());
        assert!(
            (exact - fd).norm() <= tol,
            "trial {trial}: derivative {exact} vs finite difference {fd} (tol {tol:.3e})"
        );
    }
}

fn dims_of(report: &liereach::system::ControllabilityReport) -> Vec<(usize, Option<usize>, usize)> {
    report
        .samples
        .iter()
        .map(|s| (s.dim_b, s.dim_c, s.dim_a))
        .collect()
}

#[test]
fn closure_dimensions_ignore_generator_scaling_and_mixing() {
    let opts = AnalysisOptions::default();

    // Matrix backend: rescale both qubit controls, then replace one with a
    // mix of the two. The spans, and therefore all dimensions, are
    // unchanged.
    let base = qubit_two_controls();
    let reference = check_sufficiency(&base, &opts).unwrap();
    let minus_i_sx = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0)]);
    let minus_i_sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);

    let mut scaled = base.clone();
    scaled.controls = vec![
        TDOperator::constant_matrix("x-drive", minus_i_sx.map(|z| z * c(-3.5, 0.0))),
        TDOperator::constant_matrix("y-drive", minus_i_sy.map(|z| z * c(0.25, 0.0))),
    ];
    let scaled_report = check_sufficiency(&scaled, &opts).unwrap();
    assert_eq!(scaled_report.verdict, reference.verdict);
    assert_eq!(dims_of(&scaled_report), dims_of(&reference));
    assert_eq!(scaled_report.m, reference.m);

    let mut mixed = base.clone();
    mixed.controls = vec![
        TDOperator::constant_matrix("x-drive", minus_i_sx.clone()),
        TDOperator::constant_matrix("xy-mix", &minus_i_sy + minus_i_sx.map(|z| z * c(2.0, 0.0))),
    ];
    let mixed_report = check_sufficiency(&mixed, &opts).unwrap();
    assert_eq!(mixed_report.verdict, reference.verdict);
    assert_eq!(dims_of(&mixed_report), dims_of(&reference));

    // Structure backend: same invariances on the nine-dimensional planar
    // system.
    let base = free_particle_2d();
    let reference = check_sufficiency(&base, &opts).unwrap();

    let mut scaled = base.clone();
    scaled.controls = base
        .controls
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let coords: Vec<ExpPoly> = op
                .coords()
                .unwrap()
                .iter()
                .map(|e| e.scale_real(1.0 + i as f64))
                .collect();
            TDOperator::structure(format!("scaled-{i}"), coords)
        })
        .collect();
    let scaled_report = check_sufficiency(&scaled, &opts).unwrap();
    assert_eq!(scaled_report.verdict, reference.verdict);
    assert_eq!(dims_of(&scaled_report), dims_of(&reference));

    let mut mixed = base.clone();
    let mix_coords: Vec<ExpPoly> = base.controls[1]
        .coords()
        .unwrap()
        .iter()
        .zip(base.controls[0].coords().unwrap())
        .map(|(x, y)| x.add(&y.scale_real(3.0)))
        .collect();
    mixed.controls[1] = TDOperator::structure("mixed", mix_coords);
    let mixed_report = check_sufficiency(&mixed, &opts).unwrap();
    assert_eq!(mixed_report.verdict, reference.verdict);
    assert_eq!(dims_of(&mixed_report), dims_of(&reference));
}

#[test]
fn matrix_and_structure_backends_agree() {
    let opts = AnalysisOptions::default();

    // The decaying-mass system has an exact six-level matrix realization of
    // its two-dimensional solvable algebra: every dimension and the verdict
    // must coincide.
    let profile = MassProfile::Concrete { rate: -0.4 };
    let structural = effective_mass_system(1.7, 0.9, profile).unwrap();
    let concrete = effective_mass_matrix(1.7, 0.9, profile).unwrap();
    let a = check_sufficiency(&structural, &opts).unwrap();
    let b = check_sufficiency(&concrete, &opts).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.m, b.m);
    assert_eq!(dims_of(&a), dims_of(&b));

    // A rotation-algebra mirror of the two-control qubit: name the spans
    // abstractly instead of writing 2x2 matrices, and the analysis reaches
    // the same dimensions and verdict.
    let alg = Arc::new(
        LieAlgebraSpec::from_sparse(
            vec!["X".into(), "Y".into(), "Z".into()],
            &[(0, 1, 2, 2.0), (1, 2, 0, 2.0), (2, 0, 1, 2.0)],
        )
        .unwrap(),
    );
    let zero = ExpPoly::zero();
    let mirror = SystemSpec {
        name: "qubit-xy-structure".into(),
        dim: 3,
        backend: SystemBackend::Structure(alg),
        drift: TDOperator::structure(
            "precession",
            vec![zero.clone(), zero.clone(), ExpPoly::real_constant(0.5)],
        ),
        controls: vec![
            TDOperator::structure("x-drive", vec![ExpPoly::one(), zero.clone(), zero.clone()]),
            TDOperator::structure("y-drive", vec![zero.clone(), ExpPoly::one(), zero.clone()]),
        ],
        initial_state: None,
        t0: 0.0,
        sample_times: vec![0.0],
        declared_orbit_dim: None,
        quantum: true,
        symbols: SymbolValues::default(),
    };
    let concrete = check_sufficiency(&qubit_two_controls(), &opts).unwrap();
    let abstracted = check_sufficiency(&mirror, &opts).unwrap();
    assert_eq!(abstracted.verdict, concrete.verdict);
    assert_eq!(abstracted.m, concrete.m);
    assert_eq!(dims_of(&abstracted), dims_of(&concrete));
    assert_eq!(abstracted.verdict, Verdict::StronglyControllable);
}

#[test]
fn reports_and_steering_results_serialize_deterministically() {
    let opts = AnalysisOptions::default();
    let sys = modulated_qubit(1.3);
    let once = canonical_json(&report_to_value(&check_sufficiency(&sys, &opts).unwrap()));
    let twice = canonical_json(&report_to_value(&check_sufficiency(&sys, &opts).unwrap()));
    assert_eq!(once, twice, "identical analyses must print identical bytes");

    let sys = qubit_two_controls();
    let target = DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let first = steer(&sys, &target, std::f64::consts::PI, 6, 2_000, 11).unwrap();
    let second = steer(&sys, &target, std::f64::consts::PI, 6, 2_000, 11).unwrap();
    assert_eq!(
        canonical_json(&steering_to_value(&first)),
        canonical_json(&steering_to_value(&second)),
        "same seed and budget must reproduce the same schedule bytes"
    );
}

#[test]
fn saved_specs_reload_and_reanalyze_identically() {
    let dir = tempfile::tempdir().unwrap();
    let opts = AnalysisOptions::default();
    for case in bundled_systems() {
        let value = spec_to_value(&case.system).unwrap();
        let path = dir.path().join(format!("{}.json", case.slug));
        write_json(&path, &value).unwrap();
        let loaded = load_spec(&path).unwrap();

        // Writing the reloaded system produces the same bytes: the format
        // is a fixed point of save/load.
        assert_eq!(
            canonical_json(&spec_to_value(&loaded).unwrap()),
            canonical_json(&value),
            "{}: save/load must be idempotent",
            case.slug
        );

        let original = check_sufficiency(&case.system, &opts).unwrap();
        let reloaded = check_sufficiency(&loaded, &opts).unwrap();
        assert_eq!(reloaded.verdict, original.verdict, "{}", case.slug);
        assert_eq!(reloaded.m, original.m, "{}", case.slug);
        assert_eq!(dims_of(&reloaded), dims_of(&original), "{}", case.slug);
    }
}

#[test]
fn random_schedules_reach_both_poles_reproducibly() {
    let sys = qubit_two_controls();
    let cloud = reachable_sample(&sys, 3.0, 400, 6, 2.0, 42).unwrap();
    assert_eq!(cloud.len(), 400);
    let polar = |psi: &DVector<Complex64>| psi[0].norm_sqr() - psi[1].norm_sqr();
    let lo = cloud.iter().map(|s| polar(&s.endpoint)).fold(f64::INFINITY, f64::min);
    let hi = cloud
        .iter()
        .map(|s| polar(&s.endpoint))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        lo < -0.8 && hi > 0.8,
        "a controllable qubit's random endpoints should spread across both poles, got [{lo:.3}, {hi:.3}]"
    );

    // Bit-for-bit reproducibility, independent of the rayon thread count in
    // use for this process.
    let again = reachable_sample(&sys, 3.0, 400, 6, 2.0, 42).unwrap();
    for (x, y) in cloud.iter().zip(&again) {
        assert_eq!(x.endpoint, y.endpoint);
        assert_eq!(x.schedule, y.schedule);
    }
}

#[test]
fn caps_surface_as_flags_and_an_inconclusive_verdict() {
    // Exhausting the jet depth is not evidence either way: the verdict must
    // say so rather than guess.
    let report = check_sufficiency(
        &modulated_qubit(1.3),
        &AnalysisOptions {
            jet_order: 0,
            ..AnalysisOptions::default()
        },
    )
    .unwrap();
    assert_eq!(report.verdict, Verdict::Inconclusive);
    assert!(
        report.flags.iter().any(|f| f == "jet-exhausted"),
        "flags were {:?}",
        report.flags
    );

    // A dimension cap cuts the closure off early; the truncation is
    // reported and the verdict stays inconclusive.
    let report = check_sufficiency(
        &free_particle_2d(),
        &AnalysisOptions {
            max_dim: 4,
            ..AnalysisOptions::default()
        },
    )
    .unwrap();
    assert_eq!(report.verdict, Verdict::Inconclusive);
    assert!(
        report.flags.iter().any(|f| f == "truncated"),
        "flags were {:?}",
        report.flags
    );
}
