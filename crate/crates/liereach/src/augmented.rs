//! Time augmentation: the trick that turns a time-dependent system into a
//! time-independent one on an extended state.
//!
//! The augmented state is η = (τ, ψ) with τ tracking t + t₀. The drift
//! field advances both components, W₀ = (1, H₀(τ)ψ); each control field
//! moves only the state, W_l = (0, H_l(τ)ψ). Brackets of such fields close
//! over the same shape: with F, G operator families,
//!
//! ```text
//! [(a, Fψ), (b, Gψ)] = (0, (a·G′ − b·F′ − [F, G])ψ)
//! ```
//!
//! so the commutator of the drift field with a control field reproduces
//! exactly the drift-recursion step of the base analysis — the augmented
//! hierarchy is an independent route to the same spans, which the checks
//! exploit as a consistency oracle.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::closure::ClosureOptions;
use crate::error::{Error, Result};
use crate::linalg::{realified_rank, realify_vector, SpanTracker};
use crate::system::{SystemBackend, SystemSpec};
use crate::tdop::{jet_bracket, jet_of_with_symbols, jet_shift, OperatorJet};

/// A system wrapped for augmented-time analysis and propagation.
#[derive(Clone, Debug)]
pub struct AugmentedSystem {
    base: SystemSpec,
}

/// Wraps a matrix-backend system. Structure-backend systems have no state
/// space to augment, so they are rejected.
pub fn augment(sys: &SystemSpec) -> Result<AugmentedSystem> {
    match sys.backend {
        SystemBackend::Matrix => {
            sys.validate()?;
            sys.state()?;
            Ok(AugmentedSystem { base: sys.clone() })
        }
        SystemBackend::Structure(_) => Err(Error::Unsupported(
            "time augmentation needs the matrix backend",
        )),
    }
}

impl AugmentedSystem {
    /// The wrapped system.
    pub fn base(&self) -> &SystemSpec {
        &self.base
    }

    /// Initial augmented point η = (t₀, ψ₀).
    pub fn initial_point(&self) -> (f64, DVector<Complex64>) {
        (
            self.base.t0,
            self.base
                .initial_state
                .clone()
                .expect("validated at construction"),
        )
    }

    /// The drift field W₀ = (1, H₀(τ)ψ) as jets of the given order,
    /// anchored at τ = anchor.
    pub fn drift_field(&self, anchor: f64, jet_order: usize) -> Result<AugmentedField> {
        Ok(AugmentedField {
            lead: 1.0,
            jet: jet_of_with_symbols(&self.base.drift, anchor, jet_order, &self.base.symbols)?,
        })
    }

    /// The control field W_l = (0, H_l(τ)ψ).
    pub fn control_field(&self, l: usize, anchor: f64, jet_order: usize) -> Result<AugmentedField> {
        let op = self.base.controls.get(l).ok_or(Error::DimensionMismatch {
            left: l,
            right: self.base.r(),
            context: "control index vs control count",
        })?;
        Ok(AugmentedField {
            lead: 0.0,
            jet: jet_of_with_symbols(op, anchor, jet_order, &self.base.symbols)?,
        })
    }
}

/// A vector field on the augmented state: lead·∂_τ plus the operator family
/// F(τ) acting on ψ, carried as a jet at the anchor.
#[derive(Clone, Debug)]
pub struct AugmentedField {
    /// Speed of the time component (1 for the drift field, 0 for controls
    /// and for every bracket).
    pub lead: f64,
    /// Jet of the operator family F at the anchor.
    pub jet: OperatorJet,
}

impl AugmentedField {
    /// Bracket by the augmented-field formula
    /// `[(a,F),(b,G)] = (0, a·G′ − b·F′ − [F,G])`.
    ///
    /// A bracket with a nonzero lead consumes one jet order (the derivative
    /// term); brackets among pure-control fields keep their order.
    pub fn bracket(&self, other: &AugmentedField) -> Result<AugmentedField> {
        let mut acc = jet_bracket(&self.jet, &other.jet)?.neg();
        if self.lead != 0.0 {
            acc = acc.add(&jet_shift(&other.jet)?.scale(self.lead))?;
        }
        if other.lead != 0.0 {
            acc = acc.add(&jet_shift(&self.jet)?.scale(-other.lead))?;
        }
        Ok(AugmentedField { lead: 0.0, jet: acc })
    }

    /// Realified value of the field at the anchor, lead component first:
    /// [a ; re/im of F(anchor)]. Used for rank admission so the augmented
    /// closure never conflates the time direction with state directions.
    pub fn anchor_vec(&self) -> DVector<f64> {
        let m = self.jet.value();
        let flat = DVector::from_iterator(m.len(), m.iter().cloned());
        let r = realify_vector(&flat);
        let mut out = DVector::zeros(1 + r.len());
        out[0] = self.lead;
        out.rows_mut(1, r.len()).copy_from(&r);
        out
    }

    /// F(anchor)·ψ — the state component of the field at a point.
    pub fn state_component(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        self.jet.value() * psi
    }
}

/// An anchored basis of an augmented-field algebra.
#[derive(Clone, Debug)]
pub struct AugmentedChain {
    /// Anchor time the jets are taken at.
    pub anchor: f64,
    /// Basis fields, ℝ-independent as (lead, operator-value) pairs.
    pub fields: Vec<AugmentedField>,
    /// Bracket words explaining each field.
    pub provenance: Vec<String>,
    /// A cap cut the closure off before stabilization.
    pub truncated: bool,
    /// Jets ran out of orders before stabilization.
    pub exhausted: bool,
}

/// Which augmented algebra to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugmentedRole {
    /// Closure of the control fields alone.
    Controls,
    /// Control fields extended by repeated bracketing with the drift field
    /// (the drift field itself is not a member).
    DriftExtended,
    /// Closure of drift and control fields together.
    Full,
}

/// Builds the requested augmented-field algebra at the given anchor.
///
/// Admission mirrors the base closure: a field enters iff its
/// (lead, value) vector gains real rank at the anchor. Jet exhaustion is
/// reported, not fatal, so callers can mark results inconclusive.
pub fn augmented_chain(
    aug: &AugmentedSystem,
    role: AugmentedRole,
    anchor: f64,
    jet_order: usize,
    opts: &ClosureOptions,
) -> Result<AugmentedChain> {
    let w0 = aug.drift_field(anchor, jet_order)?;
    let mut fields: Vec<AugmentedField> = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut tracker = SpanTracker::new(opts.tol);
    let mut truncated = false;
    let mut exhausted = false;

    let admit = |fields: &mut Vec<AugmentedField>,
                     words: &mut Vec<String>,
                     tracker: &mut SpanTracker,
                     truncated: &mut bool,
                     f: AugmentedField,
                     w: String|
     -> bool {
        let v = f.anchor_vec();
        if fields.len() >= opts.max_dim {
            if tracker.would_admit(&v) {
                *truncated = true;
            }
            return false;
        }
        if tracker.try_add(&v) {
            fields.push(f);
            words.push(w);
            true
        } else {
            false
        }
    };

    if role == AugmentedRole::Full {
        admit(
            &mut fields,
            &mut words,
            &mut tracker,
            &mut truncated,
            w0.clone(),
            "W0".to_string(),
        );
    }
    for l in 0..aug.base().r() {
        let f = aug.control_field(l, anchor, jet_order)?;
        let w = format!("W[{}]", aug.base().controls[l].name);
        admit(&mut fields, &mut words, &mut tracker, &mut truncated, f, w);
    }

    // Drift extension: repeatedly bracket the frontier with W₀, then close
    // under mutual brackets, until nothing gains rank.
    let mut frontier: Vec<usize> = (0..fields.len()).collect();
    let mut sweeps = 0usize;
    while !frontier.is_empty() {
        sweeps += 1;
        if sweeps > opts.max_depth {
            truncated = true;
            break;
        }
        let mut next: Vec<usize> = Vec::new();
        // The drift-extended chain applies W₀ externally (it is not a
        // member); the full algebra brackets it as a member in the mutual
        // sweep below, and the control algebra never sees it.
        if role == AugmentedRole::DriftExtended {
            for &idx in &frontier {
                let stepped = match w0.bracket(&fields[idx]) {
                    Ok(f) => f,
                    Err(Error::JetExhausted) => {
                        exhausted = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let w = format!("[W0,{}]", words[idx]);
                if admit(
                    &mut fields,
                    &mut words,
                    &mut tracker,
                    &mut truncated,
                    stepped,
                    w,
                ) {
                    next.push(fields.len() - 1);
                }
            }
            if exhausted {
                break;
            }
        }
        // Mutual brackets of new fields against everything admitted.
        let frontier_min = frontier.iter().copied().min().unwrap_or(0);
        let upto = fields.len();
        for j in frontier_min..upto {
            for i in 0..j {
                if !(frontier.contains(&j) || next.contains(&j) || frontier.contains(&i) || next.contains(&i)) {
                    continue;
                }
                let br = match fields[i].bracket(&fields[j]) {
                    Ok(f) => f,
                    Err(Error::JetExhausted) => {
                        exhausted = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let w = format!("[{},{}]", words[i], words[j]);
                if admit(&mut fields, &mut words, &mut tracker, &mut truncated, br, w) {
                    next.push(fields.len() - 1);
                }
            }
            if exhausted {
                break;
            }
        }
        if exhausted {
            break;
        }
        frontier = next;
    }

    Ok(AugmentedChain {
        anchor,
        fields,
        provenance: words,
        truncated,
        exhausted,
    })
}

/// Rank of the state components {F(anchor)·ψ} over ℝ — the number of
/// independent state directions the augmented fields reach at the point.
/// Fields with a nonzero lead (the drift field inside Â) are excluded:
/// their state component is tied to the time direction, not free.
pub fn state_orbit_rank(
    chain: &AugmentedChain,
    psi: &DVector<Complex64>,
    tol: f64,
) -> usize {
    let vecs: Vec<DVector<Complex64>> = chain
        .fields
        .iter()
        .filter(|f| f.lead == 0.0)
        .map(|f| f.state_component(psi))
        .collect();
    realified_rank(&vecs, tol)
}

/// The augmented generator as one (dim+1)×(dim+1) matrix block acting on
/// (τ-offset, ψ) is never formed: τ advances affinely, not linearly. This
/// helper instead evaluates the state-block generator H₀(τ) + Σ u_l·H_l(τ)
/// for propagation of the augmented state.
pub fn state_generator(
    aug: &AugmentedSystem,
    tau: f64,
    amplitudes: &[f64],
) -> Result<DMatrix<Complex64>> {
    aug.base().hamiltonian_at(tau, amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::ClosureOptions;
    use crate::exppoly::{ExpPoly, SymbolValues};
    use crate::system::{check_sufficiency, AnalysisOptions};
    use crate::tdop::TDOperator;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mi_pauli(which: char) -> DMatrix<Complex64> {
        let m = match which {
            'x' => DMatrix::from_row_slice(
                2,
                2,
                &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            ),
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
            _ => unreachable!(),
        };
        m.map(|z| z * c(0.0, -1.0))
    }

    fn qubit(omega: f64) -> SystemSpec {
        SystemSpec {
            name: "qubit".into(),
            dim: 2,
            backend: SystemBackend::Matrix,
            drift: TDOperator::matrix_terms(
                "precession",
                vec![(ExpPoly::real_constant(0.5 * omega), mi_pauli('z'))],
            ),
            controls: vec![TDOperator::constant_matrix("x-drive", mi_pauli('x'))],
            initial_state: Some(DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])),
            t0: 0.0,
            sample_times: vec![0.0],
            declared_orbit_dim: None,
            quantum: true,
            symbols: SymbolValues::default(),
        }
    }

    fn modulated_qubit(omega: f64) -> SystemSpec {
        let mut sys = qubit(omega);
        sys.name = "modulated-qubit".into();
        sys.controls = vec![TDOperator::matrix_terms(
            "rotating-drive",
            vec![
                (
                    ExpPoly::cosine(omega).scale_real(1.0),
                    mi_pauli('x'),
                ),
                (ExpPoly::sine(omega), mi_pauli('y')),
            ],
        )];
        sys
    }

    #[test]
    fn structure_systems_cannot_be_augmented() {
        let alg = std::sync::Arc::new(crate::algebra::fixtures::su11_real());
        let sys = SystemSpec {
            name: "abstract".into(),
            dim: 3,
            backend: SystemBackend::Structure(alg),
            drift: TDOperator::structure(
                "drift",
                vec![ExpPoly::one(), ExpPoly::zero(), ExpPoly::zero()],
            ),
            controls: vec![TDOperator::structure(
                "ctrl",
                vec![ExpPoly::zero(), ExpPoly::one(), ExpPoly::zero()],
            )],
            initial_state: None,
            t0: 0.0,
            sample_times: vec![0.0],
            declared_orbit_dim: None,
            quantum: true,
            symbols: SymbolValues::default(),
        };
        assert!(matches!(
            augment(&sys),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn drift_field_bracket_reproduces_drift_recursion_step() {
        // [W₀, W_l] = (0, H_l′ − [H₀, H_l]): for the rotating drive the
        // state part must equal the base drift-step −[H₀,H₁] + H₁′.
        let sys = modulated_qubit(1.3);
        let aug = augment(&sys).unwrap();
        let w0 = aug.drift_field(0.4, 6).unwrap();
        let w1 = aug.control_field(0, 0.4, 6).unwrap();
        let br = w0.bracket(&w1).unwrap();
        assert_eq!(br.lead, 0.0);

        let h0 = jet_of_with_symbols(&sys.drift, 0.4, 6, &sys.symbols).unwrap();
        let h1 = jet_of_with_symbols(&sys.controls[0], 0.4, 6, &sys.symbols).unwrap();
        let base_step = jet_bracket(&h0, &h1)
            .unwrap()
            .neg()
            .add(&jet_shift(&h1).unwrap())
            .unwrap();
        let diff = br.jet.add(&base_step.neg()).unwrap();
        assert!(diff.max_abs() < 1e-13);
    }

    #[test]
    fn augmented_state_rank_matches_base_drift_extended_rank() {
        // The drift-extended augmented chain's state components must reach
        // exactly as many directions as dim C(t₀)ψ from the base analysis.
        for sys in [qubit(1.0), modulated_qubit(0.7)] {
            let aug = augment(&sys).unwrap();
            let chain = augmented_chain(
                &aug,
                AugmentedRole::DriftExtended,
                sys.t0,
                8,
                &ClosureOptions::default(),
            )
            .unwrap();
            assert!(!chain.exhausted);
            let psi = sys.initial_state.clone().unwrap();
            let rank = state_orbit_rank(&chain, &psi, 1e-9);

            let report = check_sufficiency(&sys, &AnalysisOptions::default()).unwrap();
            assert_eq!(Some(rank), report.samples[0].orbit_c);
        }
    }

    #[test]
    fn hierarchy_of_augmented_algebras() {
        let sys = modulated_qubit(1.0);
        let aug = augment(&sys).unwrap();
        let opts = ClosureOptions::default();
        let b = augmented_chain(&aug, AugmentedRole::Controls, 0.0, 8, &opts).unwrap();
        let c = augmented_chain(&aug, AugmentedRole::DriftExtended, 0.0, 8, &opts).unwrap();
        let a = augmented_chain(&aug, AugmentedRole::Full, 0.0, 8, &opts).unwrap();
        assert!(b.fields.len() <= c.fields.len());
        assert!(c.fields.len() <= a.fields.len());
        // The full algebra contains the drift field itself (lead 1).
        assert!(a.fields.iter().any(|f| f.lead == 1.0));
        assert!(c.fields.iter().all(|f| f.lead == 0.0));
    }
}
