//! Control-system declarations and the controllability checks.
//!
//! A [`SystemSpec`] is the bilinear system i.e. state equation
//! ∂ψ/∂t = (H₀(t) + Σ_l u_l(t)·H_l(t))·ψ, in either backend. The checks
//! build the algebra hierarchy at every requested sample time — each sample
//! is re-anchored and analyzed independently, so samples can run
//! concurrently — and combine the per-sample facts into a single verdict:
//!
//! * `stronglyControllable` — at every sample the drift-extended span moves
//!   the state in all m directions and brackets of controls against that
//!   span stay inside the control span, with no truncation anywhere;
//! * `conditionFailed` — some cleanly-computed sample violates one of those
//!   conditions (this is *not* a proof of uncontrollability, and nothing in
//!   the crate ever claims one);
//! * `inconclusive` — a cap or jet exhaustion prevented a trustworthy
//!   answer.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::LieAlgebraSpec;
use crate::closure::{
    closure, element_from_operator, generate_c, membership, ClosureBasis, ClosureElement,
    ClosureOptions, Role,
};
use crate::error::{Error, Result};
use crate::exppoly::SymbolValues;
use crate::linalg::realified_rank;
use crate::tdop::{Backend, TDOperator};
use crate::threads;

/// Unit-norm tolerance for quantum initial states.
pub const STATE_NORM_TOL: f64 = 1e-12;

/// Backend of a system: concrete matrices or an abstract structure algebra.
#[derive(Clone, Debug)]
pub enum SystemBackend {
    Matrix,
    Structure(Arc<LieAlgebraSpec>),
}

impl SystemBackend {
    /// Operator-level backend tag.
    pub fn tag(&self) -> Backend {
        match self {
            SystemBackend::Matrix => Backend::Matrix,
            SystemBackend::Structure(_) => Backend::Structure,
        }
    }

    /// The structure algebra, when present.
    pub fn algebra(&self) -> Option<&Arc<LieAlgebraSpec>> {
        match self {
            SystemBackend::Structure(a) => Some(a),
            SystemBackend::Matrix => None,
        }
    }
}

/// A bilinear control system.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    /// Short label used in reports and error messages.
    pub name: String,
    /// State dimension (matrix backend) or algebra dimension (structure).
    pub dim: usize,
    /// Representation backend.
    pub backend: SystemBackend,
    /// Drift operator H₀(t) (may be identically zero).
    pub drift: TDOperator,
    /// Control operators H₁(t) … H_r(t), r ≥ 1.
    pub controls: Vec<TDOperator>,
    /// Initial state ψ₀. Required for the matrix backend; the structure
    /// backend has no state space, so it may be absent.
    pub initial_state: Option<DVector<Complex64>>,
    /// Reference time the system starts at.
    pub t0: f64,
    /// Times the checks are anchored at (non-empty, finite).
    pub sample_times: Vec<f64>,
    /// Externally known orbit dimension m; when absent, m defaults to the
    /// full-system orbit dimension at the first sample.
    pub declared_orbit_dim: Option<usize>,
    /// Whether the state evolves unitarily (skew-Hermitian generators,
    /// unit-norm states). Non-quantum systems skip those invariants.
    pub quantum: bool,
    /// Sample values for formal coefficient symbols.
    pub symbols: SymbolValues,
}

impl SystemSpec {
    /// Validates structural consistency; called by every check and by the
    /// file loader.
    pub fn validate(&self) -> Result<()> {
        if self.controls.is_empty() {
            return Err(Error::InvalidSpec {
                path: "controls".into(),
                detail: "at least one control operator is required".into(),
            });
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidSpec {
                path: "sample_times".into(),
                detail: "at least one sample time is required".into(),
            });
        }
        if !self.t0.is_finite() || self.sample_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSpec {
                path: "sample_times".into(),
                detail: "times must be finite".into(),
            });
        }
        let tag = self.backend.tag();
        for op in self.operators() {
            if op.backend() != tag {
                return Err(Error::BackendMismatch(
                    "every operator must live in the system's backend",
                ));
            }
            if op.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    left: op.dim(),
                    right: self.dim,
                    context: "operator dimension vs system dimension",
                });
            }
        }
        if let Some(alg) = self.backend.algebra() {
            if alg.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    left: alg.dim(),
                    right: self.dim,
                    context: "structure algebra dimension vs system dimension",
                });
            }
        }
        match (&self.backend, &self.initial_state) {
            (SystemBackend::Matrix, None) => {
                return Err(Error::InvalidSpec {
                    path: "initial_state".into(),
                    detail: "matrix-backend systems need an initial state".into(),
                });
            }
            (_, Some(psi)) => {
                if psi.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        left: psi.len(),
                        right: self.dim,
                        context: "initial state length vs system dimension",
                    });
                }
                let n = psi.norm();
                if self.quantum && (n - 1.0).abs() > STATE_NORM_TOL {
                    return Err(Error::NotUnitNorm {
                        norm: n,
                        tol: STATE_NORM_TOL,
                    });
                }
                if !self.quantum && n == 0.0 {
                    return Err(Error::InvalidSpec {
                        path: "initial_state".into(),
                        detail: "initial state must be nonzero".into(),
                    });
                }
            }
            (SystemBackend::Structure(_), None) => {}
        }
        Ok(())
    }

    /// Number of controls r.
    pub fn r(&self) -> usize {
        self.controls.len()
    }

    /// Drift followed by the controls.
    pub fn operators(&self) -> impl Iterator<Item = &TDOperator> {
        std::iter::once(&self.drift).chain(self.controls.iter())
    }

    /// True when drift and all controls are constant in t.
    pub fn is_time_independent(&self) -> bool {
        self.operators().all(|op| op.is_time_independent())
    }

    /// The generator H₀(t) + Σ_l u_l·H_l(t) as a matrix (matrix backend).
    pub fn hamiltonian_at(&self, t: f64, amplitudes: &[f64]) -> Result<DMatrix<Complex64>> {
        if amplitudes.len() != self.r() {
            return Err(Error::DimensionMismatch {
                left: amplitudes.len(),
                right: self.r(),
                context: "amplitude count vs control count",
            });
        }
        let mut h = self.drift.evaluate_with_symbols(t, &self.symbols)?.matrix;
        for (u, op) in amplitudes.iter().zip(&self.controls) {
            if *u != 0.0 {
                let m = op.evaluate_with_symbols(t, &self.symbols)?.matrix;
                h += m.map(|z| z * Complex64::new(*u, 0.0));
            }
        }
        Ok(h)
    }

    /// Initial state, or an error naming the field.
    pub fn state(&self) -> Result<&DVector<Complex64>> {
        self.initial_state.as_ref().ok_or_else(|| Error::InvalidSpec {
            path: "initial_state".into(),
            detail: "this operation needs an initial state".into(),
        })
    }
}

/// Which check produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// Full sufficiency analysis: drift-extended span plus ideal condition.
    Sufficiency,
    /// Specialization for constant operators: pure bracket chains, no jets.
    SufficiencyTimeInvariant,
    /// Control-span-only criterion: the control algebra alone moves the
    /// state in all m directions.
    ControlSpan,
}

impl CheckKind {
    /// Stable label used in report files.
    pub fn label(&self) -> &'static str {
        match self {
            CheckKind::Sufficiency => "sufficiency",
            CheckKind::SufficiencyTimeInvariant => "sufficiency-time-invariant",
            CheckKind::ControlSpan => "control-span",
        }
    }
}

/// Outcome of a check. There is deliberately no "uncontrollable" variant:
/// the analysis proves sufficiency or reports that the sufficient
/// conditions did not hold, nothing stronger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    StronglyControllable,
    ConditionFailed,
    Inconclusive,
}

impl Verdict {
    /// Stable label used in report files and exit-code mapping.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::StronglyControllable => "stronglyControllable",
            Verdict::ConditionFailed => "conditionFailed",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// How the ideal condition was certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerificationMode {
    /// Every ideal defect was shown identically zero as a function of t
    /// (structure backend with exact coordinates).
    Symbolic,
    /// Conditions were checked numerically at the sample anchors.
    Sampled,
}

impl VerificationMode {
    /// Stable label used in report files.
    pub fn label(&self) -> &'static str {
        match self {
            VerificationMode::Symbolic => "symbolic",
            VerificationMode::Sampled => "sampled",
        }
    }
}

/// Tunable knobs of the checks, echoed verbatim into reports.
#[derive(Clone, Copy, Debug)]
pub struct AnalysisOptions {
    /// Derivative orders carried by matrix-backend jets.
    pub jet_order: usize,
    /// Rank/membership tolerance.
    pub tol: f64,
    /// Bracket sweep cap per closure.
    pub max_depth: usize,
    /// Basis size cap per closure.
    pub max_dim: usize,
    /// Drift-recursion generation cap.
    pub max_generations: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            jet_order: 8,
            tol: 1e-9,
            max_depth: 16,
            max_dim: 256,
            max_generations: 16,
        }
    }
}

impl AnalysisOptions {
    fn closure_opts(&self) -> ClosureOptions {
        ClosureOptions {
            max_dim: self.max_dim,
            max_depth: self.max_depth,
            tol: self.tol,
        }
    }
}

/// Everything the analysis established at one sample time.
#[derive(Clone, Debug)]
pub struct SampleAnalysis {
    /// The anchor time.
    pub t: f64,
    /// Basis size of the control span B(t).
    pub dim_b: usize,
    /// Basis size of the drift-extended span C(t); absent for the
    /// control-span check, which never builds C.
    pub dim_c: Option<usize>,
    /// Basis size of the full system algebra A(t).
    pub dim_a: usize,
    /// Rank of B(t)·ψ₀ (matrix backend; the structure backend reports the
    /// basis size as a surrogate).
    pub orbit_b: usize,
    /// Rank of C(t)·ψ₀, when C was built.
    pub orbit_c: Option<usize>,
    /// Rank of A(t)·ψ₀.
    pub orbit_a: usize,
    /// Worst normalized residual of [B, C] against B at this anchor.
    pub ideal_residual: Option<f64>,
    /// All ideal defects were certified identically zero in t.
    pub symbolic: bool,
    /// Caps or exhaustion encountered at this sample (sorted).
    pub flags: Vec<String>,
    /// Bracket words explaining each basis element, keyed by role label.
    pub provenance: BTreeMap<String, Vec<String>>,
}

/// Result of a controllability check over all sample times.
#[derive(Clone, Debug)]
pub struct ControllabilityReport {
    /// System label echo.
    pub system: String,
    /// Which check ran.
    pub check: CheckKind,
    /// Combined verdict.
    pub verdict: Verdict,
    /// Orbit dimension the conditions were tested against.
    pub m: usize,
    /// Whether m was declared externally or measured at the first sample.
    pub m_declared: bool,
    /// How the conditions were certified.
    pub verification_mode: VerificationMode,
    /// Structure backend has no state, so orbit columns repeat the basis
    /// sizes; this flag says so.
    pub orbit_surrogate: bool,
    /// Per-sample details, in sample order.
    pub samples: Vec<SampleAnalysis>,
    /// Union of per-sample flags (sorted, deduplicated).
    pub flags: Vec<String>,
    /// Option echo.
    pub options: AnalysisOptions,
}

/// Rank of {X·ψ : X in the basis} over ℝ — the number of independent
/// directions the family moves ψ in. Matrix backend only.
pub fn orbit_dimension(
    basis: &ClosureBasis,
    psi: &DVector<Complex64>,
    tol: f64,
) -> Result<usize> {
    let mut vecs = Vec::with_capacity(basis.dim());
    for e in &basis.elements {
        match e {
            ClosureElement::Jet(j) => {
                if j.dim() != psi.len() {
                    return Err(Error::DimensionMismatch {
                        left: j.dim(),
                        right: psi.len(),
                        context: "basis element dimension vs state length",
                    });
                }
                vecs.push(j.value() * psi);
            }
            ClosureElement::Coords { .. } => {
                return Err(Error::Unsupported(
                    "orbit dimension needs matrix-backend elements",
                ));
            }
        }
    }
    Ok(realified_rank(&vecs, tol))
}

fn analyze_sample(
    sys: &SystemSpec,
    t: f64,
    opts: &AnalysisOptions,
    kind: CheckKind,
) -> Result<SampleAnalysis> {
    let autonomous = kind == CheckKind::SufficiencyTimeInvariant;
    let jet_order = if autonomous { 0 } else { opts.jet_order };
    let alg = sys.backend.algebra();
    let copts = opts.closure_opts();
    let surrogate = matches!(sys.backend, SystemBackend::Structure(_));

    let elem = |op: &TDOperator| -> Result<ClosureElement> {
        element_from_operator(op, t, jet_order, &sys.symbols, alg)
    };

    let mut flags = BTreeSet::new();

    // B(t): the algebra generated by the controls alone.
    let b_gens = sys
        .controls
        .iter()
        .map(|op| elem(op).map(|e| (e, op.name.clone())))
        .collect::<Result<Vec<_>>>()?;
    let b_basis = closure(b_gens, Role::B, &copts)?;
    if b_basis.truncated {
        flags.insert("truncated".to_string());
    }

    // A(t): generated by drift and controls together.
    let mut a_gens = Vec::with_capacity(1 + sys.r());
    if !sys.drift.is_zero() {
        a_gens.push((elem(&sys.drift)?, sys.drift.name.clone()));
    }
    for (e, w) in b_basis
        .elements
        .iter()
        .take(sys.r())
        .cloned()
        .zip(b_basis.provenance.iter().take(sys.r()).cloned())
    {
        a_gens.push((e, w));
    }
    // Some controls may have been dropped as dependent when seeding B; use
    // the original operators so A sees every generator.
    if b_basis.dim() < sys.r() {
        a_gens.truncate(if sys.drift.is_zero() { 0 } else { 1 });
        for op in &sys.controls {
            a_gens.push((elem(op)?, op.name.clone()));
        }
    }
    let a_basis = closure(a_gens, Role::A, &copts)?;
    if a_basis.truncated {
        flags.insert("truncated".to_string());
    }

    // C(t): B extended by the drift recursion (skipped by control-span).
    let c_basis = if kind == CheckKind::ControlSpan {
        None
    } else {
        let h0 = elem(&sys.drift)?;
        let chain = generate_c(&h0, &b_basis, opts.max_generations, autonomous, &copts)?;
        if chain.exhausted {
            flags.insert("jet-exhausted".to_string());
        }
        if chain.capped {
            flags.insert("generation-cap".to_string());
        }
        if chain.basis.truncated {
            flags.insert("truncated".to_string());
        }
        Some(chain.basis)
    };

    // Ideal condition: [B, C](t) ⊂ B(t).
    let (ideal_residual, symbolic) = if let Some(c) = &c_basis {
        let mut worst = 0.0f64;
        let mut all_symbolic = true;
        for bx in &b_basis.elements {
            for cx in &c.elements {
                let br = bx.bracket(cx)?;
                let mem = membership(&br, &b_basis, opts.tol)?;
                worst = worst.max(mem.residual);
                match mem.symbolically_zero {
                    Some(true) => {}
                    _ => all_symbolic = false,
                }
            }
        }
        (Some(worst), all_symbolic)
    } else {
        (None, false)
    };

    // Orbit ranks at ψ₀ (or surrogate basis sizes for structure).
    let (orbit_b, orbit_c, orbit_a) = if surrogate {
        (b_basis.dim(), c_basis.as_ref().map(|c| c.dim()), a_basis.dim())
    } else {
        let psi = sys.state()?;
        (
            orbit_dimension(&b_basis, psi, opts.tol)?,
            match &c_basis {
                Some(c) => Some(orbit_dimension(c, psi, opts.tol)?),
                None => None,
            },
            orbit_dimension(&a_basis, psi, opts.tol)?,
        )
    };

    let mut provenance = BTreeMap::new();
    provenance.insert("B".to_string(), b_basis.provenance.clone());
    provenance.insert("A".to_string(), a_basis.provenance.clone());
    if let Some(c) = &c_basis {
        provenance.insert("C".to_string(), c.provenance.clone());
    }

    Ok(SampleAnalysis {
        t,
        dim_b: b_basis.dim(),
        dim_c: c_basis.as_ref().map(|c| c.dim()),
        dim_a: a_basis.dim(),
        orbit_b,
        orbit_c,
        orbit_a,
        ideal_residual,
        symbolic,
        flags: flags.into_iter().collect(),
        provenance,
    })
}

/// Runs the requested check over every sample time and combines the
/// per-sample outcomes into one verdict. The named wrappers below are
/// usually more convenient.
pub fn run_check(
    sys: &SystemSpec,
    opts: &AnalysisOptions,
    kind: CheckKind,
) -> Result<ControllabilityReport> {
    sys.validate()?;
    if kind == CheckKind::SufficiencyTimeInvariant && !sys.is_time_independent() {
        return Err(Error::Unsupported(
            "the time-invariant check requires constant drift and controls",
        ));
    }

    // Samples are re-anchored independently, so they can run concurrently;
    // collection preserves input order, keeping reports deterministic.
    let samples: Vec<SampleAnalysis> = threads::pool().install(|| {
        sys.sample_times
            .par_iter()
            .map(|&t| analyze_sample(sys, t, opts, kind))
            .collect::<Result<Vec<_>>>()
    })?;

    let m_declared = sys.declared_orbit_dim.is_some();
    let m = sys
        .declared_orbit_dim
        .unwrap_or_else(|| samples[0].orbit_a);

    let mut clean_failure = false;
    let mut any_flags = false;
    for s in &samples {
        let cond = match kind {
            CheckKind::ControlSpan => s.orbit_b == m,
            _ => {
                s.orbit_c == Some(m)
                    && s.ideal_residual.is_some_and(|r| r <= opts.tol)
            }
        };
        if !s.flags.is_empty() {
            any_flags = true;
        } else if !cond {
            clean_failure = true;
        }
    }
    let verdict = if clean_failure {
        Verdict::ConditionFailed
    } else if any_flags {
        Verdict::Inconclusive
    } else {
        Verdict::StronglyControllable
    };

    let verification_mode = if kind != CheckKind::ControlSpan && samples.iter().all(|s| s.symbolic)
    {
        VerificationMode::Symbolic
    } else {
        VerificationMode::Sampled
    };

    let flags: Vec<String> = samples
        .iter()
        .flat_map(|s| s.flags.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    Ok(ControllabilityReport {
        system: sys.name.clone(),
        check: kind,
        verdict,
        m,
        m_declared,
        verification_mode,
        orbit_surrogate: matches!(sys.backend, SystemBackend::Structure(_)),
        samples,
        flags,
        options: *opts,
    })
}

/// Full sufficiency analysis: at every sample time, builds B, C and A,
/// tests dim C(t)·ψ = m and the ideal condition `[B, C](t) ⊂ B(t)`, and
/// combines the outcomes into one verdict.
pub fn check_sufficiency(
    sys: &SystemSpec,
    opts: &AnalysisOptions,
) -> Result<ControllabilityReport> {
    run_check(sys, opts, CheckKind::Sufficiency)
}

/// The same analysis specialized to constant operators: brackets only, no
/// derivative bookkeeping, so it can never exhaust jets. Errors when any
/// operator actually depends on t.
pub fn check_sufficiency_time_invariant(
    sys: &SystemSpec,
    opts: &AnalysisOptions,
) -> Result<ControllabilityReport> {
    run_check(sys, opts, CheckKind::SufficiencyTimeInvariant)
}

/// Control-span criterion: the verdict comes from dim B(t)·ψ = m alone
/// (when the control algebra already moves the state everywhere, the drift
/// recursion is not needed).
pub fn check_control_span(
    sys: &SystemSpec,
    opts: &AnalysisOptions,
) -> Result<ControllabilityReport> {
    run_check(sys, opts, CheckKind::ControlSpan)
}
