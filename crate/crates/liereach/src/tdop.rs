//! Time-dependent operators H(t) = Σ_k f_k(t)·X_k and their jets.
//!
//! Two backends share this representation:
//!
//! * **matrix** — each X_k is a concrete complex matrix; the operator can be
//!   evaluated at a time, differentiated exactly (the f_k are exp-polys), and
//!   expanded into an [`OperatorJet`] for the bracket-and-derivative
//!   recursion of the sufficiency analysis.
//! * **structure** — the operator is a vector of exp-poly coordinates over an
//!   abstract Lie-algebra basis; brackets are taken through structure
//!   constants and stay exact.

use crate::error::{Error, Result};
use crate::exppoly::{ExpPoly, SymbolValues};
use crate::linalg::{all_finite, commutator, skew_defect};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Which representation a [`TDOperator`] lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Concrete complex matrices.
    Matrix,
    /// Coordinates over an abstract structure-constant algebra.
    Structure,
}

/// Body of a time-dependent operator.
#[derive(Clone, Debug)]
pub enum TDBody {
    /// Σ f_k(t)·X_k with concrete matrices X_k.
    Matrix(Vec<(ExpPoly, DMatrix<Complex64>)>),
    /// Coordinates (f_1(t), …, f_n(t)) over an algebra basis.
    Structure(Vec<ExpPoly>),
}

/// A named, time-dependent operator.
#[derive(Clone, Debug)]
pub struct TDOperator {
    /// Label used in provenance words and error messages.
    pub name: String,
    /// Representation body.
    pub body: TDBody,
}

/// Result of evaluating a matrix-backend operator: the caller always gets
/// the matrix, together with the skew-Hermiticity defect max|M + M†|ᵢⱼ so
/// validity can be judged against the caller's tolerance.
#[derive(Clone, Debug)]
pub struct EvaluatedOperator {
    /// Σ f_k(t)·X_k at the requested time.
    pub matrix: DMatrix<Complex64>,
    /// max entry magnitude of M + M†; 0 for exactly skew-Hermitian results.
    pub skew_defect: f64,
}

impl TDOperator {
    /// A constant matrix operator (coefficient identically 1).
    pub fn constant_matrix(name: impl Into<String>, m: DMatrix<Complex64>) -> Self {
        TDOperator {
            name: name.into(),
            body: TDBody::Matrix(vec![(ExpPoly::one(), m)]),
        }
    }

    /// A matrix operator from explicit (coefficient, matrix) terms.
    pub fn matrix_terms(
        name: impl Into<String>,
        terms: Vec<(ExpPoly, DMatrix<Complex64>)>,
    ) -> Self {
        TDOperator {
            name: name.into(),
            body: TDBody::Matrix(terms),
        }
    }

    /// A structure-backend operator from coordinate functions.
    pub fn structure(name: impl Into<String>, coords: Vec<ExpPoly>) -> Self {
        TDOperator {
            name: name.into(),
            body: TDBody::Structure(coords),
        }
    }

    /// The identically-zero operator in the given backend and dimension.
    pub fn zero(name: impl Into<String>, backend: Backend, dim: usize) -> Self {
        match backend {
            Backend::Matrix => TDOperator {
                name: name.into(),
                body: TDBody::Matrix(vec![(
                    ExpPoly::zero(),
                    DMatrix::<Complex64>::zeros(dim, dim),
                )]),
            },
            Backend::Structure => TDOperator {
                name: name.into(),
                body: TDBody::Structure(vec![ExpPoly::zero(); dim]),
            },
        }
    }

    /// Backend tag of this operator.
    pub fn backend(&self) -> Backend {
        match self.body {
            TDBody::Matrix(_) => Backend::Matrix,
            TDBody::Structure(_) => Backend::Structure,
        }
    }

    /// Hilbert-space dimension (matrix) or algebra dimension (structure).
    pub fn dim(&self) -> usize {
        match &self.body {
            TDBody::Matrix(terms) => terms.first().map_or(0, |(_, m)| m.nrows()),
            TDBody::Structure(coords) => coords.len(),
        }
    }

    /// True when every coefficient is a constant exp-poly (no t dependence
    /// and no formal symbols).
    pub fn is_time_independent(&self) -> bool {
        let consts = |f: &ExpPoly| f.as_constant().is_some();
        match &self.body {
            TDBody::Matrix(terms) => terms.iter().all(|(f, _)| consts(f)),
            TDBody::Structure(coords) => coords.iter().all(consts),
        }
    }

    /// True when the operator is identically zero.
    pub fn is_zero(&self) -> bool {
        match &self.body {
            TDBody::Matrix(terms) => terms
                .iter()
                .all(|(f, m)| f.is_zero() || m.iter().all(|z| z.norm_sqr() == 0.0)),
            TDBody::Structure(coords) => coords.iter().all(|f| f.is_zero()),
        }
    }

    /// Exact time derivative (coefficient-wise d/dt).
    pub fn deriv(&self) -> TDOperator {
        let body = match &self.body {
            TDBody::Matrix(terms) => TDBody::Matrix(
                terms
                    .iter()
                    .map(|(f, m)| (f.deriv(), m.clone()))
                    .collect(),
            ),
            TDBody::Structure(coords) => {
                TDBody::Structure(coords.iter().map(|f| f.deriv()).collect())
            }
        };
        TDOperator {
            name: format!("∂({})", self.name),
            body,
        }
    }

    /// Structure-backend coordinates (None for matrix backend).
    pub fn coords(&self) -> Option<&[ExpPoly]> {
        match &self.body {
            TDBody::Structure(c) => Some(c),
            TDBody::Matrix(_) => None,
        }
    }

    /// Evaluates a matrix-backend operator at time t.
    pub fn evaluate(&self, t: f64) -> Result<EvaluatedOperator> {
        self.evaluate_with_symbols(t, &SymbolValues::default())
    }

    /// Evaluates a matrix-backend operator at time t under a formal-symbol
    /// sample table.
    pub fn evaluate_with_symbols(&self, t: f64, sym: &SymbolValues) -> Result<EvaluatedOperator> {
        let TDBody::Matrix(terms) = &self.body else {
            return Err(Error::Unsupported(
                "evaluate needs the matrix backend; structure operators evaluate to coordinates",
            ));
        };
        let dim = self.dim();
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for (f, x) in terms {
            let c = f.eval(t, sym)?;
            if c.norm_sqr() != 0.0 {
                acc += x.map(|z| z * c);
            }
        }
        if !all_finite(&acc) {
            return Err(Error::Range {
                t,
                detail: format!("operator `{}` evaluated to non-finite entries", self.name),
            });
        }
        let defect = skew_defect(&acc);
        Ok(EvaluatedOperator {
            matrix: acc,
            skew_defect: defect,
        })
    }

    /// Evaluates structure-backend coordinates at time t.
    pub fn evaluate_coords(&self, t: f64, sym: &SymbolValues) -> Result<DVector<Complex64>> {
        let TDBody::Structure(coords) = &self.body else {
            return Err(Error::Unsupported(
                "evaluate_coords needs the structure backend",
            ));
        };
        let mut v = DVector::<Complex64>::zeros(coords.len());
        for (k, f) in coords.iter().enumerate() {
            v[k] = f.eval(t, sym)?;
        }
        Ok(v)
    }
}

/// Truncated Taylor data (H(t₀), H′(t₀), …, H⁽ᴺ⁾(t₀)) of a matrix-backend
/// operator at an anchor time. Jets carry the exact derivative information
/// the sufficiency recursion needs; each application of [`jet_shift`]
/// consumes one order.
#[derive(Clone, Debug)]
pub struct OperatorJet {
    anchor: f64,
    coeffs: Vec<DMatrix<Complex64>>,
}

impl OperatorJet {
    /// Builds a jet from explicit coefficients (all square, equal dims).
    pub fn new(anchor: f64, coeffs: Vec<DMatrix<Complex64>>) -> Self {
        assert!(!coeffs.is_empty(), "a jet has at least its order-0 part");
        let d = coeffs[0].nrows();
        assert!(
            coeffs.iter().all(|c| c.nrows() == d && c.ncols() == d),
            "jet coefficients must share one square dimension"
        );
        OperatorJet { anchor, coeffs }
    }

    /// Order N (number of derivatives available).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Anchor time t₀.
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// k-th coefficient H⁽ᵏ⁾(t₀).
    pub fn coeff(&self, k: usize) -> &DMatrix<Complex64> {
        &self.coeffs[k]
    }

    /// Order-0 part H(t₀).
    pub fn value(&self) -> &DMatrix<Complex64> {
        &self.coeffs[0]
    }

    /// Jet truncated to a lower order.
    pub fn truncated(&self, order: usize) -> OperatorJet {
        assert!(order <= self.order());
        OperatorJet {
            anchor: self.anchor,
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    /// Coefficient-wise sum (orders truncated to the smaller operand).
    pub fn add(&self, other: &OperatorJet) -> Result<OperatorJet> {
        check_compat(self, other)?;
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|k| &self.coeffs[k] + &other.coeffs[k])
            .collect();
        Ok(OperatorJet {
            anchor: self.anchor,
            coeffs,
        })
    }

    /// Coefficient-wise negation.
    pub fn neg(&self) -> OperatorJet {
        OperatorJet {
            anchor: self.anchor,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// Real scalar multiple.
    pub fn scale(&self, s: f64) -> OperatorJet {
        let c = Complex64::new(s, 0.0);
        OperatorJet {
            anchor: self.anchor,
            coeffs: self.coeffs.iter().map(|m| m.map(|z| z * c)).collect(),
        }
    }

    /// Largest entry magnitude across all coefficients.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(crate::linalg::max_abs)
            .fold(0.0, f64::max)
    }
}

fn check_compat(x: &OperatorJet, y: &OperatorJet) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
            context: "jet operands",
        });
    }
    if x.anchor != y.anchor {
        return Err(Error::AnchorMismatch {
            left: x.anchor,
            right: y.anchor,
        });
    }
    Ok(())
}

/// Expands a matrix-backend operator into its jet at t₀, computing each
/// coefficient exactly via repeated exp-poly differentiation.
pub fn jet_of(op: &TDOperator, t0: f64, order: usize) -> Result<OperatorJet> {
    jet_of_with_symbols(op, t0, order, &SymbolValues::default())
}

/// [`jet_of`] with an explicit formal-symbol sample table.
pub fn jet_of_with_symbols(
    op: &TDOperator,
    t0: f64,
    order: usize,
    sym: &SymbolValues,
) -> Result<OperatorJet> {
    let TDBody::Matrix(terms) = &op.body else {
        return Err(Error::Unsupported("jet_of needs the matrix backend"));
    };
    let dim = op.dim();
    let mut coeffs = vec![DMatrix::<Complex64>::zeros(dim, dim); order + 1];
    for (f, x) in terms {
        let mut fk = f.clone();
        for coeff in coeffs.iter_mut() {
            let c = fk.eval(t0, sym)?;
            if c.norm_sqr() != 0.0 {
                *coeff += x.map(|z| z * c);
            }
            fk = fk.deriv();
        }
    }
    Ok(OperatorJet::new(t0, coeffs))
}

/// Bracket of jets by the Leibniz rule:
/// the k-th coefficient is Σ_{j≤k} C(k,j)·[x_j, y_{k−j}].
/// Output order is min(order(x), order(y)).
pub fn jet_bracket(x: &OperatorJet, y: &OperatorJet) -> Result<OperatorJet> {
    check_compat(x, y)?;
    let order = x.order().min(y.order());
    let dim = x.dim();
    let mut coeffs = Vec::with_capacity(order + 1);
    // Pascal row for binomial coefficients, grown incrementally.
    let mut binom: Vec<f64> = vec![1.0];
    for k in 0..=order {
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for (j, &bj) in binom.iter().enumerate().take(k + 1) {
            let b = Complex64::new(bj, 0.0);
            acc += commutator(&x.coeffs[j], &y.coeffs[k - j]).map(|z| z * b);
        }
        coeffs.push(acc);
        // binom row k -> k+1
        let mut next = vec![1.0; k + 2];
        for j in 1..=k {
            next[j] = binom[j - 1] + binom[j];
        }
        binom = next;
    }
    Ok(OperatorJet {
        anchor: x.anchor,
        coeffs,
    })
}

/// Shift: (H, H′, …, H⁽ᴺ⁾) ↦ (H′, …, H⁽ᴺ⁾), the jet of ∂H/∂t.
/// An order-0 jet has no derivative left; the error signals "inconclusive at
/// this jet depth" upstream, never a controllability verdict.
pub fn jet_shift(x: &OperatorJet) -> Result<OperatorJet> {
    if x.order() == 0 {
        return Err(Error::JetExhausted);
    }
    Ok(OperatorJet {
        anchor: x.anchor,
        coeffs: x.coeffs[1..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_x() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn sigma_y() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    fn sigma_z() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    #[test]
    fn evaluate_constant_and_its_jet() {
        let x = TDOperator::constant_matrix("X", sigma_x().map(|z| z * c(0.0, 1.0)));
        let ev = x.evaluate(3.7).unwrap();
        assert!(ev.skew_defect < 1e-15);
        assert_eq!(ev.matrix[(0, 1)], c(0.0, 1.0));
        let j = jet_of(&x, 3.7, 3).unwrap();
        assert_eq!(j.order(), 3);
        assert!(crate::linalg::max_abs(j.coeff(1)) == 0.0);
        assert!(crate::linalg::max_abs(j.coeff(3)) == 0.0);
    }

    #[test]
    fn jet_of_exponential_coefficient() {
        // e^{λt}·X at t₀ = 0 has jet (X, λX, λ²X).
        let lam = c(0.0, 2.0);
        let op = TDOperator::matrix_terms(
            "E",
            vec![(ExpPoly::term(c(1.0, 0.0), 0, lam), sigma_x())],
        );
        let j = jet_of(&op, 0.0, 2).unwrap();
        for k in 0..=2usize {
            let expect = sigma_x().map(|z| z * lam.powu(k as u32));
            assert!((j.coeff(k) - expect).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        // Order-consistency of jet_of against central finite differences of
        // evaluate, on a smooth two-term operator.
        let op = TDOperator::matrix_terms(
            "S",
            vec![
                (ExpPoly::term(c(0.0, -0.5), 0, c(0.0, -2.0)), sigma_x()),
                (ExpPoly::term(c(0.0, -0.5), 0, c(0.0, 2.0)), sigma_y()),
            ],
        );
        let t0 = 0.3;
        let j = jet_of(&op, t0, 2).unwrap();
        let h = 1e-5;
        let at = |t: f64| op.evaluate(t).unwrap().matrix;
        let fd1 = (at(t0 + h) - at(t0 - h)).map(|z| z / c(2.0 * h, 0.0));
        let fd2 = (at(t0 + h) + at(t0 - h) - at(t0).map(|z| z * c(2.0, 0.0)))
            .map(|z| z / c(h * h, 0.0));
        assert!((fd1 - j.coeff(1)).iter().all(|z| z.norm() < 1e-8));
        assert!((fd2 - j.coeff(2)).iter().all(|z| z.norm() < 1e-4));
    }

    #[test]
    fn jet_bracket_of_constants_is_commutator() {
        let i = c(0.0, 1.0);
        let jx = OperatorJet::new(0.0, vec![sigma_x().map(|z| z * i)]);
        let jy = OperatorJet::new(0.0, vec![sigma_y().map(|z| z * i)]);
        let jb = jet_bracket(&jx, &jy).unwrap();
        // [iσ_x, iσ_y] = −[σ_x,σ_y] = −2iσ_z.
        let expect = sigma_z().map(|z| z * c(0.0, -2.0));
        assert!((jb.value() - expect).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn jet_bracket_self_is_zero_every_order() {
        let op = TDOperator::matrix_terms(
            "S",
            vec![(ExpPoly::term(c(1.0, 0.0), 1, c(0.0, 1.5)), sigma_z())],
        );
        let j = jet_of(&op, 0.7, 4).unwrap();
        let jb = jet_bracket(&j, &j).unwrap();
        for k in 0..=4usize {
            assert!(crate::linalg::max_abs(jb.coeff(k)) < 1e-20);
        }
    }

    #[test]
    fn jet_shift_definition_and_exhaustion() {
        let a = sigma_x();
        let b = sigma_y();
        let z = sigma_z();
        let j = OperatorJet::new(0.0, vec![a, b.clone(), z.clone()]);
        let s = jet_shift(&j).unwrap();
        assert_eq!(s.order(), 1);
        assert!((s.coeff(0) - b).iter().all(|x| x.norm() == 0.0));
        assert!((s.coeff(1) - z).iter().all(|x| x.norm() == 0.0));
        let s2 = jet_shift(&s).unwrap();
        assert!(matches!(jet_shift(&s2), Err(Error::JetExhausted)));
    }

    #[test]
    fn derivative_closes_representation() {
        let op = TDOperator::matrix_terms(
            "S",
            vec![(ExpPoly::term(c(1.0, 0.0), 2, c(0.3, 1.0)), sigma_x())],
        );
        let d = op.deriv();
        // d/dt(t²e^{λt}) = λt²e^{λt} + 2te^{λt}: evaluate both at a point.
        let t = 0.9;
        let lam = c(0.3, 1.0);
        let scalar = lam * t * t * (lam * t).exp() + 2.0 * t * (lam * t).exp();
        let got = d.evaluate(t).unwrap().matrix;
        let expect = sigma_x().map(|z| z * scalar);
        assert!((got - expect).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn structure_coords_evaluate() {
        let op = TDOperator::structure(
            "pump",
            vec![ExpPoly::cosine(2.0), ExpPoly::sine(2.0).neg()],
        );
        let v = op
            .evaluate_coords(0.5, &SymbolValues::default())
            .unwrap();
        assert!((v[0].re - (1.0f64).cos()).abs() < 1e-14);
        assert!((v[1].re + (1.0f64).sin()).abs() < 1e-14);
        assert!(v[0].im.abs() < 1e-15 && v[1].im.abs() < 1e-15);
    }
}
