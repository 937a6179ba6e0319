//! Bracket closures and the drift-extended generating recursion.
//!
//! A [`ClosureBasis`] is an anchored basis of a Lie algebra of operators:
//! elements are admitted exactly when they gain real rank at the anchor
//! time, so the basis is ℝ-linearly independent there by construction and
//! every admission is explained by a provenance word over the generator
//! labels.
//!
//! The same sweep algorithm runs over two element representations:
//! matrix-backend operator jets (brackets by the Leibniz rule, the drift
//! step consumes one derivative order) and structure-backend exp-poly
//! coordinate vectors (brackets through structure constants, the drift step
//! differentiates exactly and never runs out).

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::exppoly::{ExpPoly, SymbolValues};
use crate::linalg::{lstsq, realify_vector, SpanTracker};
use crate::tdop::{
    jet_bracket, jet_of_with_symbols, jet_shift, OperatorJet, TDBody, TDOperator,
};

/// Which algebra of the analysis hierarchy a basis represents. The letters
/// are the labels used in reports: B is the span of the controls, C extends
/// B by the drift-and-derivative recursion, A is generated by drift and
/// controls together; the hatted variants are their counterparts for the
/// time-augmented system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    B,
    C,
    A,
    BHat,
    CHat,
    AHat,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::B => "B",
            Role::C => "C",
            Role::A => "A",
            Role::BHat => "B^",
            Role::CHat => "C^",
            Role::AHat => "A^",
        };
        f.write_str(s)
    }
}

/// One element of a closure basis, in either backend representation.
#[derive(Clone, Debug)]
pub enum ClosureElement {
    /// Matrix backend: a truncated derivative stack at the anchor.
    Jet(OperatorJet),
    /// Structure backend: exact exp-poly coordinates over an algebra basis.
    Coords {
        coords: Vec<ExpPoly>,
        alg: Arc<LieAlgebraSpec>,
        anchor: f64,
        sym: SymbolValues,
    },
}

impl ClosureElement {
    /// Anchor time of the element.
    pub fn anchor(&self) -> f64 {
        match self {
            ClosureElement::Jet(j) => j.anchor(),
            ClosureElement::Coords { anchor, .. } => *anchor,
        }
    }

    /// Underlying jet, when the element is matrix-backed.
    pub fn as_jet(&self) -> Option<&OperatorJet> {
        match self {
            ClosureElement::Jet(j) => Some(j),
            _ => None,
        }
    }

    /// Underlying coordinates, when the element is structure-backed.
    pub fn as_coords(&self) -> Option<&[ExpPoly]> {
        match self {
            ClosureElement::Coords { coords, .. } => Some(coords),
            _ => None,
        }
    }

    /// Lie bracket of two elements in the same representation.
    pub fn bracket(&self, other: &ClosureElement) -> Result<ClosureElement> {
        match (self, other) {
            (ClosureElement::Jet(x), ClosureElement::Jet(y)) => {
                Ok(ClosureElement::Jet(jet_bracket(x, y)?))
            }
            (
                ClosureElement::Coords {
                    coords: a,
                    alg,
                    anchor,
                    sym,
                },
                ClosureElement::Coords {
                    coords: b,
                    alg: alg2,
                    anchor: anchor2,
                    ..
                },
            ) => {
                if !Arc::ptr_eq(alg, alg2) && alg.dim() != alg2.dim() {
                    return Err(Error::BackendMismatch(
                        "bracket operands live over different structure algebras",
                    ));
                }
                if anchor != anchor2 {
                    return Err(Error::AnchorMismatch {
                        left: *anchor,
                        right: *anchor2,
                    });
                }
                Ok(ClosureElement::Coords {
                    coords: alg.bracket_exppoly(a, b)?,
                    alg: alg.clone(),
                    anchor: *anchor,
                    sym: sym.clone(),
                })
            }
            _ => Err(Error::BackendMismatch(
                "bracket operands mix matrix and structure representations",
            )),
        }
    }

    /// One step of the drift recursion: e ↦ −[H₀, e] + ∂e/∂t.
    ///
    /// With `autonomous` set the derivative term is dropped (all operators
    /// constant), so no jet order is consumed. Otherwise matrix-backed
    /// elements lose one order per step and an order-0 element fails with
    /// the jet-exhaustion error.
    pub fn drift_step(&self, h0: &ClosureElement, autonomous: bool) -> Result<ClosureElement> {
        match (self, h0) {
            (ClosureElement::Jet(e), ClosureElement::Jet(h)) => {
                let br = jet_bracket(h, e)?.neg();
                if autonomous {
                    Ok(ClosureElement::Jet(br))
                } else {
                    let sh = jet_shift(e)?;
                    Ok(ClosureElement::Jet(br.add(&sh)?))
                }
            }
            (
                ClosureElement::Coords {
                    coords: e,
                    alg,
                    anchor,
                    sym,
                },
                ClosureElement::Coords { coords: h, .. },
            ) => {
                let mut out = alg.bracket_exppoly(h, e)?;
                for (k, slot) in out.iter_mut().enumerate() {
                    let mut v = slot.neg();
                    if !autonomous {
                        v = v.add(&e[k].deriv());
                    }
                    *slot = v;
                }
                Ok(ClosureElement::Coords {
                    coords: out,
                    alg: alg.clone(),
                    anchor: *anchor,
                    sym: sym.clone(),
                })
            }
            _ => Err(Error::BackendMismatch(
                "drift step mixes matrix and structure representations",
            )),
        }
    }

    /// Realified value of the element at its anchor, the vector rank
    /// admission works on.
    pub fn anchor_vec(&self) -> Result<DVector<f64>> {
        match self {
            ClosureElement::Jet(j) => {
                let m = j.value();
                let flat = DVector::from_iterator(m.len(), m.iter().cloned());
                Ok(realify_vector(&flat))
            }
            ClosureElement::Coords {
                coords,
                anchor,
                sym,
                ..
            } => {
                let mut v = DVector::<Complex64>::zeros(coords.len());
                for (k, f) in coords.iter().enumerate() {
                    v[k] = f.eval(*anchor, sym)?;
                }
                Ok(realify_vector(&v))
            }
        }
    }

    /// x − Σ λ_i·b_i over the element's own representation, used to test
    /// whether a membership relation holds identically in t rather than
    /// merely at the anchor.
    pub fn sub_combination(
        &self,
        basis: &[ClosureElement],
        lambda: &[f64],
    ) -> Result<ClosureElement> {
        match self {
            ClosureElement::Coords {
                coords,
                alg,
                anchor,
                sym,
            } => {
                let mut out = coords.clone();
                for (b, &l) in basis.iter().zip(lambda) {
                    let Some(bc) = b.as_coords() else {
                        return Err(Error::BackendMismatch(
                            "combination mixes matrix and structure representations",
                        ));
                    };
                    if l == 0.0 {
                        continue;
                    }
                    for (k, slot) in out.iter_mut().enumerate() {
                        *slot = slot.sub(&bc[k].scale_real(l));
                    }
                }
                Ok(ClosureElement::Coords {
                    coords: out,
                    alg: alg.clone(),
                    anchor: *anchor,
                    sym: sym.clone(),
                })
            }
            ClosureElement::Jet(x) => {
                let mut acc = x.clone();
                for (b, &l) in basis.iter().zip(lambda) {
                    let Some(bj) = b.as_jet() else {
                        return Err(Error::BackendMismatch(
                            "combination mixes matrix and structure representations",
                        ));
                    };
                    if l == 0.0 {
                        continue;
                    }
                    acc = acc.add(&bj.scale(-l))?;
                }
                Ok(ClosureElement::Jet(acc))
            }
        }
    }

    /// Whether the element is provably the zero function of t.
    ///
    /// Structure-backed elements carry exact exp-poly coordinates, so the
    /// question is decidable: Some(true/false) by comparing the largest
    /// coefficient against `tol_abs`. Jets only know finitely many
    /// derivatives at one time, which cannot certify vanishing for all t,
    /// so matrix-backed elements answer None.
    pub fn symbolic_zero(&self, tol_abs: f64) -> Option<bool> {
        match self {
            ClosureElement::Coords { coords, .. } => Some(
                coords
                    .iter()
                    .map(|f| f.max_abs_coeff())
                    .fold(0.0, f64::max)
                    <= tol_abs,
            ),
            ClosureElement::Jet(_) => None,
        }
    }

    /// Largest coefficient/entry magnitude, for relative thresholds.
    pub fn magnitude(&self) -> f64 {
        match self {
            ClosureElement::Coords { coords, .. } => coords
                .iter()
                .map(|f| f.max_abs_coeff())
                .fold(0.0, f64::max),
            ClosureElement::Jet(j) => j.max_abs(),
        }
    }
}

/// Builds a closure element for one operator at one anchor time.
///
/// Matrix operators expand into a jet of the requested order; structure
/// operators need the algebra they are coordinates over.
pub fn element_from_operator(
    op: &TDOperator,
    anchor: f64,
    jet_order: usize,
    sym: &SymbolValues,
    alg: Option<&Arc<LieAlgebraSpec>>,
) -> Result<ClosureElement> {
    match &op.body {
        TDBody::Matrix(_) => Ok(ClosureElement::Jet(jet_of_with_symbols(
            op, anchor, jet_order, sym,
        )?)),
        TDBody::Structure(coords) => {
            let Some(alg) = alg else {
                return Err(Error::BackendMismatch(
                    "structure operator needs its algebra to become a closure element",
                ));
            };
            if coords.len() != alg.dim() {
                return Err(Error::DimensionMismatch {
                    left: coords.len(),
                    right: alg.dim(),
                    context: "structure operator coordinates vs algebra dimension",
                });
            }
            Ok(ClosureElement::Coords {
                coords: coords.clone(),
                alg: alg.clone(),
                anchor,
                sym: sym.clone(),
            })
        }
    }
}

/// Caps and tolerances for closure runs.
#[derive(Clone, Copy, Debug)]
pub struct ClosureOptions {
    /// Hard cap on basis size; hitting it while a candidate still gains
    /// rank sets the truncated flag.
    pub max_dim: usize,
    /// Maximum number of bracket sweeps.
    pub max_depth: usize,
    /// Relative tolerance for rank-gain admission.
    pub tol: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            max_dim: 256,
            max_depth: 16,
            tol: 1e-9,
        }
    }
}

/// An anchored basis of a bracket-closed operator family.
#[derive(Clone, Debug)]
pub struct ClosureBasis {
    /// Which algebra of the hierarchy this basis represents.
    pub role: Role,
    /// Anchor time all elements share.
    pub anchor: f64,
    /// Basis elements, ℝ-linearly independent at the anchor.
    pub elements: Vec<ClosureElement>,
    /// One bracket word per element explaining how it arose.
    pub provenance: Vec<String>,
    /// Set when a size or depth cap cut the closure off early; never
    /// silently dropped.
    pub truncated: bool,
}

impl ClosureBasis {
    /// Number of basis elements.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }
}

struct Work {
    elems: Vec<ClosureElement>,
    words: Vec<String>,
    tracker: SpanTracker,
    max_dim: usize,
    truncated: bool,
}

impl Work {
    fn try_admit(&mut self, e: ClosureElement, word: String) -> Result<bool> {
        let v = e.anchor_vec()?;
        if self.elems.len() >= self.max_dim {
            if self.tracker.would_admit(&v) {
                self.truncated = true;
            }
            return Ok(false);
        }
        if self.tracker.try_add(&v) {
            self.elems.push(e);
            self.words.push(word);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Bracket sweeps starting with the frontier at `from`; returns indices
    /// admitted. Stops on a stable sweep; hitting `max_depth` with the last
    /// sweep still admitting sets the truncated flag.
    fn sweep_close(&mut self, from: usize, max_depth: usize) -> Result<Vec<usize>> {
        let mut admitted = Vec::new();
        let mut frontier_start = from;
        for depth in 1..=max_depth {
            let sweep_base = self.elems.len();
            if frontier_start >= sweep_base {
                break;
            }
            for j in frontier_start..sweep_base {
                for i in 0..j {
                    if self.truncated && self.elems.len() >= self.max_dim {
                        return Ok(admitted);
                    }
                    let cand = self.elems[i].bracket(&self.elems[j])?;
                    let word = format!("[{},{}]", self.words[i], self.words[j]);
                    if self.try_admit(cand, word)? {
                        admitted.push(self.elems.len() - 1);
                    }
                }
            }
            let grew = self.elems.len() > sweep_base;
            frontier_start = sweep_base;
            if !grew {
                return Ok(admitted);
            }
            if depth == max_depth {
                // Last allowed sweep still produced elements: later sweeps
                // might have produced more, so the result is a truncation.
                self.truncated = true;
            }
        }
        Ok(admitted)
    }
}

fn seed_work(
    generators: Vec<(ClosureElement, String)>,
    opts: &ClosureOptions,
) -> Result<(Work, f64)> {
    let mut anchor = 0.0;
    for (k, (e, _)) in generators.iter().enumerate() {
        if k == 0 {
            anchor = e.anchor();
        } else if e.anchor() != anchor {
            return Err(Error::AnchorMismatch {
                left: anchor,
                right: e.anchor(),
            });
        }
    }
    let mut work = Work {
        elems: Vec::new(),
        words: Vec::new(),
        tracker: SpanTracker::new(opts.tol),
        max_dim: opts.max_dim.max(1),
        truncated: false,
    };
    for (e, w) in generators {
        work.try_admit(e, w)?;
    }
    Ok((work, anchor))
}

/// Closes a generator set under brackets, admitting new elements only on
/// real rank gain at the shared anchor.
pub fn closure(
    generators: Vec<(ClosureElement, String)>,
    role: Role,
    opts: &ClosureOptions,
) -> Result<ClosureBasis> {
    let (mut work, anchor) = seed_work(generators, opts)?;
    work.sweep_close(0, opts.max_depth)?;
    Ok(ClosureBasis {
        role,
        anchor,
        elements: work.elems,
        provenance: work.words,
        truncated: work.truncated,
    })
}

/// Closure of structure-backend operators over an explicit algebra.
pub fn structure_closure(
    alg: &Arc<LieAlgebraSpec>,
    generators: &[TDOperator],
    anchor: f64,
    sym: &SymbolValues,
    role: Role,
    opts: &ClosureOptions,
) -> Result<ClosureBasis> {
    let gens = generators
        .iter()
        .map(|op| {
            element_from_operator(op, anchor, 0, sym, Some(alg)).map(|e| (e, op.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    closure(gens, role, opts)
}

/// Outcome of the drift-extension recursion.
#[derive(Clone, Debug)]
pub struct GeneratedChain {
    /// The extended basis (role C or its augmented counterpart).
    pub basis: ClosureBasis,
    /// Number of drift-step generations applied before stopping.
    pub generations: usize,
    /// Matrix backend ran out of jet orders before the span stabilized.
    pub exhausted: bool,
    /// Generation cap was reached before the span stabilized.
    pub capped: bool,
}

/// Extends a control-span basis by the drift recursion: each generation
/// maps the previous one through e ↦ −[H₀, e] + ∂e/∂t, re-closes under
/// brackets, and repeats until no element gains rank at the anchor.
///
/// `max_generations` bounds the recursion; running out of jet orders before
/// stabilization is reported (not an error) so callers can return an
/// inconclusive verdict instead of a wrong one.
pub fn generate_c(
    h0: &ClosureElement,
    b_basis: &ClosureBasis,
    max_generations: usize,
    autonomous: bool,
    opts: &ClosureOptions,
) -> Result<GeneratedChain> {
    let gens: Vec<(ClosureElement, String)> = b_basis
        .elements
        .iter()
        .cloned()
        .zip(b_basis.provenance.iter().cloned())
        .collect();
    let (mut work, anchor) = seed_work(gens, opts)?;
    work.truncated |= b_basis.truncated;
    if work.elems.len() != b_basis.dim() {
        // The seed basis was independent at its own anchor, so it must
        // re-admit wholesale; anything else is an internal inconsistency.
        return Err(Error::InvalidAlgebra(
            "control-span basis failed to re-admit when seeding the drift recursion".into(),
        ));
    }

    let mut frontier: Vec<usize> = (0..work.elems.len()).collect();
    let mut generations = 0usize;
    let mut exhausted = false;
    let mut capped = false;

    while !frontier.is_empty() {
        if generations == max_generations {
            capped = true;
            break;
        }
        generations += 1;
        let mut next = Vec::new();
        let before = work.elems.len();
        for &idx in &frontier {
            let stepped = match work.elems[idx].drift_step(h0, autonomous) {
                Ok(e) => e,
                Err(Error::JetExhausted) => {
                    exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let word = format!("D[{}]", work.words[idx]);
            if work.try_admit(stepped, word)? {
                next.push(work.elems.len() - 1);
            }
        }
        if exhausted {
            break;
        }
        if work.elems.len() > before {
            let reclosed = work.sweep_close(before, opts.max_depth)?;
            next.extend(reclosed);
        }
        frontier = next;
    }
    // Jets running dry only matters when the span had not already
    // stabilized; a clean stop in the same pass is still clean.
    Ok(GeneratedChain {
        basis: ClosureBasis {
            role: Role::C,
            anchor,
            elements: work.elems,
            provenance: work.words,
            truncated: work.truncated,
        },
        generations,
        exhausted,
        capped,
    })
}

/// How close an element is to the span of a basis.
#[derive(Clone, Debug)]
pub struct Membership {
    /// Least-squares residual at the anchor, normalized by ‖x‖ (zero input
    /// gives zero residual).
    pub residual: f64,
    /// residual ≤ tol, the caller's anchored membership test.
    pub within: bool,
    /// Some(true) when the defect x − Σλ·b is the identically-zero
    /// function of t (structure backend only; matrix jets answer None).
    pub symbolically_zero: Option<bool>,
}

/// Absolute coefficient threshold under which an exp-poly defect counts as
/// identically zero (scaled by the element's magnitude).
pub const SYMBOLIC_ZERO_TOL: f64 = 1e-12;

/// Tests whether x lies in the anchored span of a basis, and — where the
/// representation allows it — whether the relation holds for all t.
pub fn membership(x: &ClosureElement, basis: &ClosureBasis, tol: f64) -> Result<Membership> {
    let vx = x.anchor_vec()?;
    let xnorm = vx.norm();
    let vecs = basis
        .elements
        .iter()
        .map(|e| e.anchor_vec())
        .collect::<Result<Vec<_>>>()?;
    let (lambda, raw_residual) = lstsq(&vecs, &vx);
    let residual = if xnorm == 0.0 {
        0.0
    } else {
        raw_residual / xnorm
    };
    let symbolically_zero = match x {
        ClosureElement::Coords { .. } => {
            let defect = x.sub_combination(&basis.elements, &lambda)?;
            let scale = x.magnitude().max(1.0);
            defect.symbolic_zero(SYMBOLIC_ZERO_TOL * scale)
        }
        ClosureElement::Jet(_) => None,
    };
    Ok(Membership {
        residual,
        within: residual <= tol,
        symbolically_zero,
    })
}
