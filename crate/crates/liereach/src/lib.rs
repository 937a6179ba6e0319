//! Controllability analysis for bilinear systems whose generators may
//! depend analytically on time.
//!
//! The state obeys ψ̇ = (H₀(t) + Σₗ uₗ(t)·Hₗ(t))·ψ with piecewise-constant
//! controls uₗ. Whether every direction is reachable is decided by three
//! nested operator families evaluated at each sample time:
//!
//! * **B(t)** — the bracket closure of the control operators,
//! * **C(t)** — B extended by the drift recursion e ↦ −[H₀, e] + ė,
//! * **A(t)** — the closure of drift and controls together.
//!
//! The sufficiency check succeeds when C moves the state in as many
//! independent directions as the system has, and the bracket of B with C
//! stays inside B. A failed condition is reported as `conditionFailed`,
//! never as "uncontrollable": the criterion is one-sided. Caps and
//! truncations degrade the verdict to `inconclusive` instead of silently
//! weakening it.
//!
//! Two interchangeable backends share the closure engine:
//!
//! * the **matrix** backend carries truncated derivative jets of explicit
//!   complex matrices and certifies conditions at the sampled anchors;
//! * the **structure** backend works in exact real structure constants
//!   with exponential-polynomial coordinates, so brackets and time
//!   derivatives are symbolic and ideal defects can be certified
//!   identically zero in t.
//!
//! Beyond analysis, the crate integrates schedules with an exactly
//! unitary midpoint-exponential stepper ([`propagate`]), mirrors the
//! trajectory through the clock-carrying augmented system
//! ([`augmented`]), demonstrates the pulse-limit construction behind the
//! control-span argument ([`steering::pulse_limit_convergence`]), and
//! searches for steering schedules with a deterministic multi-start
//! optimizer ([`steer`]). Everything randomized draws from per-index
//! seeded streams, and the rayon pool respects the `LIEREACH_THREADS`
//! environment variable, so results are reproducible across machines and
//! thread counts.

pub mod algebra;
pub mod augmented;
pub mod cases;
pub mod cli;
pub mod closure;
pub mod error;
pub mod exppoly;
pub mod linalg;
pub mod propagate;
pub mod specfile;
pub mod steering;
pub mod system;
pub mod tdop;
pub mod threads;

pub use algebra::LieAlgebraSpec;
pub use augmented::{augment, augmented_chain, state_orbit_rank, AugmentedRole, AugmentedSystem};
pub use closure::{closure, generate_c, membership, ClosureBasis, ClosureElement, ClosureOptions, Role};
pub use error::{Error, Result};
pub use exppoly::{ExpPoly, SymbolValues};
pub use propagate::{
    default_dt_max, propagate, propagate_augmented, propagate_endpoint, reachable_sample,
    ControlSchedule, ReachSample, Segment, Trajectory,
};
pub use steering::{
    fidelity, overlap, pulse_limit_convergence, steer, PulseLimitPoint, SteeringResult,
    SwitchingWord, WordArc, STEERING_GOAL,
};
pub use system::{
    check_control_span, check_sufficiency, check_sufficiency_time_invariant, run_check,
    AnalysisOptions, CheckKind, ControllabilityReport, SampleAnalysis, SystemBackend, SystemSpec,
    Verdict, VerificationMode,
};
pub use tdop::{Backend, OperatorJet, TDOperator};
