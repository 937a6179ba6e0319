//! Bundled case studies.
//!
//! Each constructor returns a ready-to-analyze [`SystemSpec`] together with
//! the outcome the analysis is expected to reach, so the same objects drive
//! the `demo` subcommand, the runnable examples, and the test suite.
//!
//! The four demo tokens map to:
//!
//! * `example1` — a parametrically pumped oscillator in the rotating frame,
//!   written over the three-dimensional non-compact algebra spanned by the
//!   occupation generator and the two pump quadratures. The control span
//!   already closes, so the verdict is strongly controllable with exact
//!   symbolic certificates. A finite matrix truncation of the same system
//!   is available for propagation studies.
//! * `example2` — a free particle in two dimensions with four controls
//!   inside a nine-dimensional algebra (dilation, two quadratic generators,
//!   momenta, boosts, rotation, center). The closure recovers all nine
//!   directions from the five operators.
//! * `example3` — a particle whose mass profile `a(t)` is left as a formal
//!   symbol; the two-dimensional solvable algebra
//!   [E0, E1] = −b·E1 makes the drift recursion collapse after one
//!   generation for *every* admissible profile at once.
//! * `drift2d` — a three-state homogenized integrator whose control
//!   algebra is strictly smaller than its reachable directions: the
//!   sufficiency condition fails even though the system is perfectly
//!   steerable, which is exactly why a failed condition is reported as
//!   `conditionFailed` and never as "uncontrollable".

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::exppoly::{ExpPoly, SymbolValues};
use crate::system::{SystemBackend, SystemSpec, Verdict};
use crate::tdop::TDOperator;

/// A bundled system plus the outcome its analysis is expected to produce.
#[derive(Clone, Debug)]
pub struct CaseStudy {
    /// Stable identifier (doubles as the demo token where applicable).
    pub slug: &'static str,
    /// One-line description of what the case demonstrates.
    pub blurb: &'static str,
    /// The system itself.
    pub system: SystemSpec,
    /// Verdict the sufficiency check should reach.
    pub expected_verdict: Verdict,
    /// Expected reachable-dimension count m.
    pub expected_m: usize,
    /// Expected dimension of the drift-extended span at the first sample,
    /// when it is known in closed form.
    pub expected_dim_c: Option<usize>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real structure constants of the pump algebra: with basis
/// (occupation, in-phase quadrature, out-of-phase quadrature),
/// `[e0,e1] = −e2`, `[e0,e2] = e1`, `[e1,e2] = e0`.
pub fn pump_algebra() -> Arc<LieAlgebraSpec> {
    Arc::new(
        LieAlgebraSpec::from_sparse(
            vec!["K0".into(), "K1".into(), "K2".into()],
            &[(0, 1, 2, -1.0), (0, 2, 1, 1.0), (1, 2, 0, 1.0)],
        )
        .expect("pump algebra constants are consistent"),
    )
}

/// Lowest-weight ladder matrices (K₀, K₊, K₋) truncated to `cutoff` levels:
/// K₀ = diag(k+m), K₊ raises with weight √((m+1)(m+2k)), K₋ = K₊ᵀ.
/// The commutation relations hold exactly away from the truncation edge.
pub fn ladder_matrices(
    cutoff: usize,
    k: f64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut k0 = DMatrix::zeros(cutoff, cutoff);
    let mut kp = DMatrix::zeros(cutoff, cutoff);
    for m in 0..cutoff {
        k0[(m, m)] = c(k + m as f64, 0.0);
        if m + 1 < cutoff {
            let w = ((m as f64 + 1.0) * (m as f64 + 2.0 * k)).sqrt();
            kp[(m + 1, m)] = c(w, 0.0);
        }
    }
    let km = kp.transpose();
    (k0, kp, km)
}

/// Pumped oscillator in the rotating frame over the exact pump algebra.
///
/// The drift vanishes in this frame; the controls are the occupation
/// generator and the pump, whose quadratures rotate at twice the pump
/// frequency. `k` is the lowest weight of the representation the matrix
/// truncation would use (the oscillator splits into k = 1/4 and k = 3/4
/// sectors); it does not enter the structure constants.
pub fn parametric_oscillator(omega: f64) -> Result<SystemSpec> {
    if !(omega.is_finite() && omega != 0.0) {
        return Err(Error::InvalidSpec {
            path: "omega".into(),
            detail: format!("pump frequency must be finite and nonzero, got {omega}"),
        });
    }
    let alg = pump_algebra();
    let zero = ExpPoly::zero();
    let frequency = TDOperator::structure(
        "frequency",
        vec![ExpPoly::one(), zero.clone(), zero.clone()],
    );
    let pump = TDOperator::structure(
        "pump",
        vec![
            zero.clone(),
            ExpPoly::cosine(2.0 * omega),
            ExpPoly::sine(2.0 * omega).scale_real(-1.0),
        ],
    );
    Ok(SystemSpec {
        name: "parametric-oscillator".into(),
        dim: 3,
        backend: SystemBackend::Structure(alg),
        drift: TDOperator::zero("drift", crate::tdop::Backend::Structure, 3),
        controls: vec![frequency, pump],
        initial_state: None,
        t0: 0.0,
        sample_times: vec![0.0, 0.4, 1.1],
        declared_orbit_dim: None,
        quantum: true,
        symbols: SymbolValues::default(),
    })
}

/// Matrix truncation of the pumped oscillator: the same two controls
/// realized on `cutoff` ladder levels of the lowest-weight-`k`
/// representation. Useful for propagation and steering experiments; the
/// truncation edge breaks the exact algebra, so closure dimensions are
/// those of the truncated matrices, not of the ideal algebra.
pub fn parametric_oscillator_matrix(cutoff: usize, k: f64, omega: f64) -> Result<SystemSpec> {
    if cutoff < 2 {
        return Err(Error::InvalidSpec {
            path: "cutoff".into(),
            detail: "at least two ladder levels are required".into(),
        });
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidSpec {
            path: "k".into(),
            detail: format!("lowest weight must be positive, got {k}"),
        });
    }
    if !(omega.is_finite() && omega != 0.0) {
        return Err(Error::InvalidSpec {
            path: "omega".into(),
            detail: format!("pump frequency must be finite and nonzero, got {omega}"),
        });
    }
    let (k0, kp, km) = ladder_matrices(cutoff, k);
    let mi = c(0.0, -1.0);
    let e0 = k0.map(|z| z * mi);
    let e1 = (&kp + &km).map(|z| z * mi * c(0.5, 0.0));
    let e2 = (&kp - &km).map(|z| z * c(0.5, 0.0));
    let mut psi0 = DVector::zeros(cutoff);
    psi0[0] = c(1.0, 0.0);
    Ok(SystemSpec {
        name: "parametric-oscillator-matrix".into(),
        dim: cutoff,
        backend: SystemBackend::Matrix,
        drift: TDOperator::zero("drift", crate::tdop::Backend::Matrix, cutoff),
        controls: vec![
            TDOperator::constant_matrix("frequency", e0),
            TDOperator::matrix_terms(
                "pump",
                vec![
                    (ExpPoly::cosine(2.0 * omega), e1),
                    (ExpPoly::sine(2.0 * omega).scale_real(-1.0), e2),
                ],
            ),
        ],
        initial_state: Some(psi0),
        t0: 0.0,
        sample_times: vec![0.0, 0.4, 1.1],
        declared_orbit_dim: None,
        quantum: true,
        symbols: SymbolValues::default(),
    })
}

/// The nine-dimensional symmetry algebra of the planar free particle:
/// dilation L1, the two quadratic generators L2 (kinetic − confining) and
/// L3 (−kinetic − confining), momenta P1, P2, boosts B1, B2, rotation J,
/// and the center E with [Pj, Bj] = E/2.
pub fn planar_symmetry_algebra() -> Arc<LieAlgebraSpec> {
    let names: Vec<String> = ["L1", "L2", "L3", "P1", "P2", "B1", "B2", "J", "E"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (l1, l2, l3, p1, p2, b1, b2, j, e) = (0, 1, 2, 3, 4, 5, 6, 7, 8);
    let entries = [
        (l1, l2, l3, -2.0),
        (l1, l3, l2, -2.0),
        (l2, l3, l1, 2.0),
        (l1, p1, p1, -1.0),
        (l1, p2, p2, -1.0),
        (l1, b1, b1, 1.0),
        (l1, b2, b2, 1.0),
        (l2, p1, b1, -1.0),
        (l2, p2, b2, -1.0),
        (l2, b1, p1, -1.0),
        (l2, b2, p2, -1.0),
        (l3, p1, b1, 1.0),
        (l3, p2, b2, 1.0),
        (l3, b1, p1, -1.0),
        (l3, b2, p2, -1.0),
        (p1, j, p2, 1.0),
        (p2, j, p1, -1.0),
        (b1, j, b2, 1.0),
        (b2, j, b1, -1.0),
        (p1, b1, e, 0.5),
        (p2, b2, e, 0.5),
    ];
    Arc::new(
        LieAlgebraSpec::from_sparse(names, &entries)
            .expect("planar symmetry constants satisfy the Jacobi identity"),
    )
}

/// Free particle in the plane: kinetic drift L2 and controls
/// {L1, L3, P1, J}. Bracketing the controls recovers the drift and then
/// every remaining direction, so the closure fills all nine dimensions.
pub fn free_particle_2d() -> SystemSpec {
    let alg = planar_symmetry_algebra();
    let n = alg.dim();
    let unit = |i: usize, name: &str| {
        let mut coords = vec![ExpPoly::zero(); n];
        coords[i] = ExpPoly::one();
        TDOperator::structure(name, coords)
    };
    SystemSpec {
        name: "free-particle-2d".into(),
        dim: n,
        backend: SystemBackend::Structure(alg),
        drift: unit(1, "kinetic"),
        controls: vec![
            unit(0, "dilation"),
            unit(2, "confining"),
            unit(3, "momentum-x"),
            unit(7, "rotation"),
        ],
        initial_state: None,
        t0: 0.0,
        sample_times: vec![0.0],
        declared_orbit_dim: None,
        quantum: true,
        symbols: SymbolValues::default(),
    }
}

/// How the mass profile a(t) of [`effective_mass_system`] is represented.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MassProfile {
    /// Keep a(t) as a formal symbol: one analysis certifies the whole
    /// family of admissible profiles at once.
    Formal,
    /// Instantiate a(t) = e^{rate·t}, a concrete never-vanishing profile.
    Concrete { rate: f64 },
}

fn mass_coordinate(profile: MassProfile, c_amp: f64) -> Result<ExpPoly> {
    let a = match profile {
        MassProfile::Formal => ExpPoly::symbol(0),
        MassProfile::Concrete { rate } => {
            if !rate.is_finite() {
                return Err(Error::InvalidSpec {
                    path: "profile.rate".into(),
                    detail: format!("rate must be finite, got {rate}"),
                });
            }
            ExpPoly::term(c(1.0, 0.0), 0, c(rate, 0.0))
        }
    };
    Ok(a.scale_real(c_amp))
}

/// Particle with a time-dependent effective mass over the solvable algebra
/// [E0, E1] = −b·E1: drift E0, control c·a(t)·E1. The drift image of the
/// control is (b·a + a′)·E1, which never leaves the control line, so the
/// drift-extended span stays one-dimensional and the declared orbit
/// dimension is 1.
pub fn effective_mass_system(b: f64, c_amp: f64, profile: MassProfile) -> Result<SystemSpec> {
    if !(b.is_finite() && b != 0.0) {
        return Err(Error::InvalidSpec {
            path: "b".into(),
            detail: format!("decay constant must be finite and nonzero, got {b}"),
        });
    }
    if !(c_amp.is_finite() && c_amp != 0.0) {
        return Err(Error::InvalidSpec {
            path: "c".into(),
            detail: format!("control coefficient must be finite and nonzero, got {c_amp}"),
        });
    }
    let alg = Arc::new(LieAlgebraSpec::from_sparse(
        vec!["E0".into(), "E1".into()],
        &[(0, 1, 1, -b)],
    )?);
    let drift = TDOperator::structure("scaling", vec![ExpPoly::one(), ExpPoly::zero()]);
    let mass = TDOperator::structure(
        "mass-control",
        vec![ExpPoly::zero(), mass_coordinate(profile, c_amp)?],
    );
    Ok(SystemSpec {
        name: "effective-mass".into(),
        dim: 2,
        backend: SystemBackend::Structure(alg),
        drift,
        controls: vec![mass],
        initial_state: None,
        t0: 0.0,
        sample_times: vec![0.0, 0.7],
        declared_orbit_dim: Some(1),
        quantum: true,
        symbols: SymbolValues::default(),
    })
}

/// Matrix realization of the effective-mass system on six monomial levels:
/// the drift is b·diag(j + 1/2) and the control lowers degree by one with
/// weight −j, so [drift, lowering] = −b·lowering exactly, mirroring the
/// structure constants. The drift is Hermitian rather than skew-Hermitian,
/// so the state does not evolve unitarily and `quantum` is false.
pub fn effective_mass_matrix(b: f64, c_amp: f64, profile: MassProfile) -> Result<SystemSpec> {
    if !(b.is_finite() && b != 0.0) {
        return Err(Error::InvalidSpec {
            path: "b".into(),
            detail: format!("decay constant must be finite and nonzero, got {b}"),
        });
    }
    if !(c_amp.is_finite() && c_amp != 0.0) {
        return Err(Error::InvalidSpec {
            path: "c".into(),
            detail: format!("control coefficient must be finite and nonzero, got {c_amp}"),
        });
    }
    let n = 6usize;
    let mut h0 = DMatrix::zeros(n, n);
    let mut lowering = DMatrix::zeros(n, n);
    for j in 0..n {
        h0[(j, j)] = c(b * (j as f64 + 0.5), 0.0);
        if j >= 1 {
            lowering[(j - 1, j)] = c(-(j as f64), 0.0);
        }
    }
    let mut psi0 = DVector::zeros(n);
    psi0[1] = c(1.0, 0.0);
    Ok(SystemSpec {
        name: "effective-mass-matrix".into(),
        dim: n,
        backend: SystemBackend::Matrix,
        drift: TDOperator::constant_matrix("scaling", h0),
        controls: vec![TDOperator::matrix_terms(
            "mass-control",
            vec![(mass_coordinate(profile, c_amp)?, lowering)],
        )],
        initial_state: Some(psi0),
        t0: 0.0,
        sample_times: vec![0.0, 0.7],
        declared_orbit_dim: Some(1),
        quantum: false,
        symbols: SymbolValues::default(),
    })
}

/// Homogenized planar integrator: on states (x, v, 1) the drift feeds the
/// top coordinate and the control feeds the middle one, and the two
/// generators commute. The control span through the state is only
/// one-dimensional while two directions are reachable, so the sufficiency
/// condition fails — a deliberate reminder that `conditionFailed` does not
/// mean uncontrollable.
pub fn drift_2d() -> SystemSpec {
    let mut e13 = DMatrix::zeros(3, 3);
    e13[(0, 2)] = c(1.0, 0.0);
    let mut e23 = DMatrix::zeros(3, 3);
    e23[(1, 2)] = c(1.0, 0.0);
    SystemSpec {
        name: "drift-2d".into(),
        dim: 3,
        backend: SystemBackend::Matrix,
        drift: TDOperator::constant_matrix("drift", e13),
        controls: vec![TDOperator::constant_matrix("push", e23)],
        initial_state: Some(DVector::from_vec(vec![
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ])),
        t0: 0.0,
        sample_times: vec![0.0],
        declared_orbit_dim: None,
        quantum: false,
        symbols: SymbolValues::default(),
    }
}

fn minus_i_sigma(which: char) -> DMatrix<Complex64> {
    let m = match which {
        'x' => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        'y' => DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        ),
        'z' => DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ),
        _ => unreachable!("axis is one of x, y, z"),
    };
    m.map(|z| z * c(0.0, -1.0))
}

fn qubit_base(name: &str, controls: Vec<TDOperator>) -> SystemSpec {
    SystemSpec {
        name: name.into(),
        dim: 2,
        backend: SystemBackend::Matrix,
        drift: TDOperator::matrix_terms(
            "precession",
            vec![(ExpPoly::real_constant(0.5), minus_i_sigma('z'))],
        ),
        controls,
        initial_state: Some(DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])),
        t0: 0.0,
        sample_times: vec![0.0],
        declared_orbit_dim: None,
        quantum: true,
        symbols: SymbolValues::default(),
    }
}

/// Qubit with a single transverse control: the control span is a line, yet
/// its drift-extended span fills all three directions. The bracket of span
/// and extended span leaves the span, so the ideal condition fails — the
/// classic boundary case where the sufficiency test cannot conclude
/// controllability from the control span alone.
pub fn qubit_boundary() -> SystemSpec {
    qubit_base(
        "qubit-boundary",
        vec![TDOperator::constant_matrix("x-drive", minus_i_sigma('x'))],
    )
}

/// Qubit with two transverse controls: the control span closes to the full
/// rotation algebra and the check succeeds.
pub fn qubit_two_controls() -> SystemSpec {
    qubit_base(
        "qubit-xy",
        vec![
            TDOperator::constant_matrix("x-drive", minus_i_sigma('x')),
            TDOperator::constant_matrix("y-drive", minus_i_sigma('y')),
        ],
    )
}

/// Qubit driven through a cosine envelope: a genuinely time-dependent
/// single control whose drift-extended span still fills all three
/// directions (the envelope derivative supplies the missing quadrature),
/// while the ideal condition fails just as in the static boundary case.
pub fn modulated_qubit(omega: f64) -> SystemSpec {
    let mut sys = qubit_base(
        "qubit-modulated",
        vec![TDOperator::matrix_terms(
            "envelope-drive",
            vec![(ExpPoly::cosine(omega), minus_i_sigma('x'))],
        )],
    );
    sys.sample_times = vec![0.0, 0.5, 1.3];
    sys
}

/// Every bundled system with its expected analysis outcome.
pub fn bundled_systems() -> Vec<CaseStudy> {
    vec![
        CaseStudy {
            slug: "example1",
            blurb: "pumped oscillator in the rotating frame (exact algebra)",
            system: parametric_oscillator(1.0).expect("bundled parameters are valid"),
            expected_verdict: Verdict::StronglyControllable,
            expected_m: 3,
            expected_dim_c: Some(3),
        },
        CaseStudy {
            slug: "example2",
            blurb: "planar free particle with four controls in a nine-dimensional algebra",
            system: free_particle_2d(),
            expected_verdict: Verdict::StronglyControllable,
            expected_m: 9,
            expected_dim_c: Some(9),
        },
        CaseStudy {
            slug: "example3",
            blurb: "formal time-dependent effective mass over a solvable algebra",
            system: effective_mass_system(1.0, 1.0, MassProfile::Formal)
                .expect("bundled parameters are valid"),
            expected_verdict: Verdict::StronglyControllable,
            expected_m: 1,
            expected_dim_c: Some(1),
        },
        CaseStudy {
            slug: "effective-mass-matrix",
            blurb: "six-level matrix realization of the effective-mass system",
            system: effective_mass_matrix(1.0, 1.0, MassProfile::Formal)
                .expect("bundled parameters are valid"),
            expected_verdict: Verdict::StronglyControllable,
            expected_m: 1,
            expected_dim_c: Some(1),
        },
        CaseStudy {
            slug: "drift2d",
            blurb: "homogenized integrator whose condition fails despite steerability",
            system: drift_2d(),
            expected_verdict: Verdict::ConditionFailed,
            expected_m: 2,
            expected_dim_c: Some(1),
        },
        CaseStudy {
            slug: "qubit-boundary",
            blurb: "qubit with one transverse control: ideal condition fails",
            system: qubit_boundary(),
            expected_verdict: Verdict::ConditionFailed,
            expected_m: 3,
            expected_dim_c: Some(3),
        },
        CaseStudy {
            slug: "qubit-xy",
            blurb: "qubit with two transverse controls: fully controllable",
            system: qubit_two_controls(),
            expected_verdict: Verdict::StronglyControllable,
            expected_m: 3,
            expected_dim_c: Some(3),
        },
        CaseStudy {
            slug: "qubit-modulated",
            blurb: "cosine-modulated single drive: time dependence fills the span",
            system: modulated_qubit(1.3),
            expected_verdict: Verdict::ConditionFailed,
            expected_m: 3,
            expected_dim_c: Some(3),
        },
    ]
}

/// Resolves a demo token to its case study.
pub fn demo_case(token: &str) -> Option<CaseStudy> {
    let slug = match token {
        "example1" | "example2" | "example3" | "drift2d" => token,
        _ => return None,
    };
    bundled_systems().into_iter().find(|c| c.slug == slug)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{check_sufficiency, AnalysisOptions};

    #[test]
    fn ladder_relations_hold_away_from_the_edge() {
        let cutoff = 12;
        let k = 0.25;
        let (k0, kp, km) = ladder_matrices(cutoff, k);
        let comm = &kp * &km - &km * &kp;
        for m in 0..cutoff - 2 {
            let want = -2.0 * (k + m as f64);
            assert!(
                (comm[(m, m)].re - want).abs() < 1e-12,
                "diagonal entry {m}: {} vs {want}",
                comm[(m, m)].re
            );
        }
        // [K0, K±] = ±K± holds everywhere in the truncation.
        let up = &k0 * &kp - &kp * &k0;
        assert!((&up - &kp).map(|z| z.norm()).max() < 1e-12);
        let dn = &k0 * &km - &km * &k0;
        assert!((&dn + &km).map(|z| z.norm()).max() < 1e-12);
    }

    #[test]
    fn bundled_systems_validate_and_match_expectations() {
        for case in bundled_systems() {
            case.system.validate().unwrap();
            let report = check_sufficiency(&case.system, &AnalysisOptions::default()).unwrap();
            assert_eq!(
                report.verdict, case.expected_verdict,
                "verdict for {}",
                case.slug
            );
            assert_eq!(report.m, case.expected_m, "m for {}", case.slug);
            if let Some(dc) = case.expected_dim_c {
                assert_eq!(
                    report.samples[0].dim_c,
                    Some(dc),
                    "dim of drift-extended span for {}",
                    case.slug
                );
            }
        }
    }

    #[test]
    fn demo_tokens_resolve() {
        for token in ["example1", "example2", "example3", "drift2d"] {
            assert!(demo_case(token).is_some(), "token {token}");
        }
        assert!(demo_case("example4").is_none());
    }

    #[test]
    fn effective_mass_matrix_mirrors_the_structure_constants() {
        let sys = effective_mass_matrix(1.7, 1.0, MassProfile::Formal).unwrap();
        let h0 = sys.drift.evaluate(0.0).unwrap().matrix;
        let h1 = sys.controls[0].evaluate(0.0).unwrap().matrix;
        let comm = &h0 * &h1 - &h1 * &h0;
        let want = h1.map(|z| z * Complex64::new(-1.7, 0.0));
        assert!((&comm - &want).map(|z| z.norm()).max() < 1e-12);
    }
}
