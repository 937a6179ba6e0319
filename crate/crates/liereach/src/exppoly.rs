//! Exp-poly scalar functions: finite sums Σ c·tᵖ·e^{λt}, optionally carrying
//! powers of one formal symbol a(t) and its derivatives a⁽ᵏ⁾(t).
//!
//! This is the smallest coefficient ring that is closed under multiplication
//! and d/dt and still covers every coefficient appearing in the bundled
//! systems (constants, polynomials, rotating phases e^{±2iωt}, and a generic
//! nonvanishing scalar factor a(t) treated formally). Keeping the ring exact
//! lets the derivative recursion behind the sufficiency checks run without
//! finite-difference noise.
//!
//! Normal form: no two terms share the same (power, rate, symbol) key and
//! exactly-zero coefficients are dropped. All operations return normal forms.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

/// Conservative guard on Re(λt): beyond this the exponential is treated as a
/// range error even though f64 can represent slightly larger magnitudes —
/// polynomial factors and coefficients need headroom before they overflow.
const EXP_ARG_MAX: f64 = 690.0;

/// Powers of formal-symbol derivatives making up one monomial factor:
/// sorted, deduplicated `(derivative order, exponent)` pairs with exponent ≥ 1,
/// denoting Π (a⁽ᵏ⁾)^e. An empty list means no formal factor.
pub type SymbolPowers = Vec<(u32, u32)>;

/// One normal-form term c·tᵖ·e^{λt}·Π(a⁽ᵏ⁾)^e.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    /// Complex coefficient c.
    pub coeff: Complex64,
    /// Polynomial power p.
    pub power: u32,
    /// Exponential rate λ.
    pub rate: Complex64,
    /// Formal-symbol factor (empty when absent).
    pub symbol: SymbolPowers,
}

/// Sample values assigned to the formal symbol and its derivatives when an
/// exp-poly must be evaluated numerically. The default represents a generic
/// nonvanishing positive scalar: a = 1 and every derivative 0. Rank and
/// dimension decisions are unaffected by the particular nonzero choice, which
/// is why a fixed representative value suffices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymbolValues {
    values: BTreeMap<u32, Complex64>,
}

impl SymbolValues {
    /// Assigns a value to a⁽ᵒʳᵈᵉʳ⁾.
    pub fn set(&mut self, order: u32, value: Complex64) {
        self.values.insert(order, value);
    }

    /// Value of a⁽ᵒʳᵈᵉʳ⁾ under this table (default: a = 1, derivatives 0).
    pub fn get(&self, order: u32) -> Complex64 {
        self.values.get(&order).copied().unwrap_or(if order == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        })
    }

    /// Iterates over explicitly assigned values.
    pub fn iter(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    /// True when no value was explicitly assigned.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Total order on term keys (power, rate, symbol) so terms can be merged and
/// kept sorted deterministically; -0.0 rates compare equal to 0.0.
fn term_cmp(a: &Term, b: &Term) -> std::cmp::Ordering {
    let norm = |x: f64| if x == 0.0 { 0.0f64 } else { x };
    a.power
        .cmp(&b.power)
        .then_with(|| norm(a.rate.re).total_cmp(&norm(b.rate.re)))
        .then_with(|| norm(a.rate.im).total_cmp(&norm(b.rate.im)))
        .then_with(|| a.symbol.cmp(&b.symbol))
}

/// Exp-poly scalar function in normal form.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExpPoly {
    terms: Vec<Term>,
}

impl ExpPoly {
    /// The zero function (empty normal form).
    pub fn zero() -> Self {
        ExpPoly { terms: Vec::new() }
    }

    /// The constant function 1.
    pub fn one() -> Self {
        ExpPoly::constant(Complex64::new(1.0, 0.0))
    }

    /// A constant function c.
    pub fn constant(c: Complex64) -> Self {
        ExpPoly::from_terms(vec![Term {
            coeff: c,
            power: 0,
            rate: Complex64::new(0.0, 0.0),
            symbol: Vec::new(),
        }])
    }

    /// A real constant function.
    pub fn real_constant(c: f64) -> Self {
        ExpPoly::constant(Complex64::new(c, 0.0))
    }

    /// The single term c·tᵖ·e^{λt}.
    pub fn term(coeff: Complex64, power: u32, rate: Complex64) -> Self {
        ExpPoly::from_terms(vec![Term {
            coeff,
            power,
            rate,
            symbol: Vec::new(),
        }])
    }

    /// The formal symbol derivative a⁽ᵒʳᵈᵉʳ⁾(t) as a standalone function.
    pub fn symbol(order: u32) -> Self {
        ExpPoly::from_terms(vec![Term {
            coeff: Complex64::new(1.0, 0.0),
            power: 0,
            rate: Complex64::new(0.0, 0.0),
            symbol: vec![(order, 1)],
        }])
    }

    /// cos(wt) as the exact exponential pair (e^{iwt} + e^{−iwt})/2.
    pub fn cosine(w: f64) -> Self {
        let half = Complex64::new(0.5, 0.0);
        ExpPoly::term(half, 0, Complex64::new(0.0, w))
            .add(&ExpPoly::term(half, 0, Complex64::new(0.0, -w)))
    }

    /// sin(wt) as the exact exponential pair (e^{iwt} − e^{−iwt})/2i.
    pub fn sine(w: f64) -> Self {
        let c = Complex64::new(0.0, -0.5); // 1/(2i)
        ExpPoly::term(c, 0, Complex64::new(0.0, w))
            .add(&ExpPoly::term(-c, 0, Complex64::new(0.0, -w)))
    }

    /// Builds a normal form from arbitrary terms (merges keys, drops zeros).
    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        let mut sorted = terms;
        sorted.sort_by(term_cmp);
        for t in sorted {
            debug_assert!(t.symbol.windows(2).all(|w| w[0].0 < w[1].0));
            match merged.last_mut() {
                Some(last) if term_cmp(last, &t) == std::cmp::Ordering::Equal => {
                    last.coeff += t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff.re != 0.0 || t.coeff.im != 0.0);
        // Re-normalize any -0.0 rates that survived into stored terms.
        for t in &mut merged {
            if t.rate.re == 0.0 {
                t.rate.re = 0.0;
            }
            if t.rate.im == 0.0 {
                t.rate.im = 0.0;
            }
        }
        ExpPoly { terms: merged }
    }

    /// Read-only view of the normal-form terms.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// True iff this is the zero function (normal form is empty).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns Some(c) iff the function is the constant c (including 0).
    pub fn as_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => {
                let t = &self.terms[0];
                (t.power == 0 && t.rate.norm_sqr() == 0.0 && t.symbol.is_empty())
                    .then_some(t.coeff)
            }
            _ => None,
        }
    }

    /// True when no term carries a formal-symbol factor.
    pub fn is_symbol_free(&self) -> bool {
        self.terms.iter().all(|t| t.symbol.is_empty())
    }

    /// Largest coefficient magnitude (0 for the zero function). Used by
    /// "identically zero up to numerical tolerance" residual tests.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    /// Sum.
    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut v = self.terms.clone();
        v.extend(other.terms.iter().cloned());
        ExpPoly::from_terms(v)
    }

    /// Difference.
    pub fn sub(&self, other: &ExpPoly) -> ExpPoly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Negation.
    pub fn neg(&self) -> ExpPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> ExpPoly {
        ExpPoly::from_terms(
            self.terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    ..t.clone()
                })
                .collect(),
        )
    }

    /// Real scalar multiple.
    pub fn scale_real(&self, c: f64) -> ExpPoly {
        self.scale(Complex64::new(c, 0.0))
    }
}

/// Merges two symbol factors (multiset union, powers added per order).
fn symbol_mul(a: &SymbolPowers, b: &SymbolPowers) -> SymbolPowers {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    for &(k, e) in a.iter().chain(b.iter()) {
        *map.entry(k).or_insert(0) += e;
    }
    map.into_iter().collect()
}

/// Product of two exp-polys; powers add, rates add, symbol factors merge.
/// Commutative and associative; the result is in normal form.
pub fn exppoly_mul(a: &ExpPoly, b: &ExpPoly) -> ExpPoly {
    let mut out = Vec::with_capacity(a.terms.len() * b.terms.len());
    for ta in &a.terms {
        for tb in &b.terms {
            out.push(Term {
                coeff: ta.coeff * tb.coeff,
                power: ta.power + tb.power,
                rate: ta.rate + tb.rate,
                symbol: symbol_mul(&ta.symbol, &tb.symbol),
            });
        }
    }
    ExpPoly::from_terms(out)
}

/// Exact derivative d/dt. Each term (c, p, λ, S) maps to
/// (cλ, p, λ, S) + (cp, p−1, λ, S) + the product-rule expansion over the
/// symbol factor, where d/dt a⁽ᵏ⁾ = a⁽ᵏ⁺¹⁾.
pub fn exppoly_deriv(a: &ExpPoly) -> ExpPoly {
    let mut out = Vec::new();
    for t in &a.terms {
        if t.rate.re != 0.0 || t.rate.im != 0.0 {
            out.push(Term {
                coeff: t.coeff * t.rate,
                ..t.clone()
            });
        }
        if t.power > 0 {
            out.push(Term {
                coeff: t.coeff * t.power as f64,
                power: t.power - 1,
                rate: t.rate,
                symbol: t.symbol.clone(),
            });
        }
        for (i, &(k, e)) in t.symbol.iter().enumerate() {
            // e·(a⁽ᵏ⁾)^{e−1}·a⁽ᵏ⁺¹⁾ · (other factors unchanged)
            let mut sym: SymbolPowers = Vec::with_capacity(t.symbol.len() + 1);
            for (j, &(k2, e2)) in t.symbol.iter().enumerate() {
                if i == j {
                    if e2 > 1 {
                        sym.push((k2, e2 - 1));
                    }
                } else {
                    sym.push((k2, e2));
                }
            }
            sym = symbol_mul(&sym, &vec![(k + 1, 1)]);
            out.push(Term {
                coeff: t.coeff * e as f64,
                power: t.power,
                rate: t.rate,
                symbol: sym,
            });
        }
    }
    ExpPoly::from_terms(out)
}

impl ExpPoly {
    /// Derivative (method form of [`exppoly_deriv`]).
    pub fn deriv(&self) -> ExpPoly {
        exppoly_deriv(self)
    }

    /// k-th derivative.
    pub fn deriv_n(&self, k: u32) -> ExpPoly {
        let mut cur = self.clone();
        for _ in 0..k {
            cur = cur.deriv();
        }
        cur
    }

    /// Product (method form of [`exppoly_mul`]).
    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        exppoly_mul(self, other)
    }

    /// Evaluates at time t with the given formal-symbol sample values.
    ///
    /// Fails with a range error when an exponential argument exceeds the
    /// overflow guard or the result is non-finite.
    pub fn eval(&self, t: f64, sym: &SymbolValues) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let arg = term.rate.re * t;
            if arg > EXP_ARG_MAX {
                return Err(Error::Range {
                    t,
                    detail: format!(
                        "exponential argument Re(λ)·t = {arg:.3e} exceeds the overflow guard"
                    ),
                });
            }
            let expo = (term.rate * t).exp();
            let poly = t.powi(term.power as i32);
            let mut val = term.coeff * expo * poly;
            for &(k, e) in &term.symbol {
                val *= sym.get(k).powu(e);
            }
            acc += val;
        }
        if !acc.re.is_finite() || !acc.im.is_finite() {
            return Err(Error::Range {
                t,
                detail: "non-finite exp-poly value".to_string(),
            });
        }
        Ok(acc)
    }

    /// Evaluates with the default symbol table (a = 1, derivatives 0).
    pub fn eval_default(&self, t: f64) -> Result<Complex64> {
        self.eval(t, &SymbolValues::default())
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", t.coeff.re, t.coeff.im)?;
            if t.power > 0 {
                write!(f, "·t^{}", t.power)?;
            }
            if t.rate.re != 0.0 || t.rate.im != 0.0 {
                write!(f, "·e^(({:.6}{:+.6}i)t)", t.rate.re, t.rate.im)?;
            }
            for &(k, e) in &t.symbol {
                if k == 0 {
                    write!(f, "·a")?;
                } else {
                    write!(f, "·a^({k})")?;
                }
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mul_identity() {
        let p = ExpPoly::term(c(2.0, -1.0), 3, c(0.0, 0.5));
        assert_eq!(exppoly_mul(&ExpPoly::one(), &p), p);
    }

    #[test]
    fn rates_cancel_to_constant() {
        let w = 0.7;
        let a = ExpPoly::term(c(1.0, 0.0), 0, c(0.0, 2.0 * w));
        let b = ExpPoly::term(c(1.0, 0.0), 0, c(0.0, -2.0 * w));
        let prod = exppoly_mul(&a, &b);
        assert_eq!(prod.as_constant(), Some(c(1.0, 0.0)));
    }

    #[test]
    fn square_of_t_exp() {
        // (t·e^{λt})² = t²·e^{2λt}, coefficient exact.
        let lam = c(0.3, -0.2);
        let a = ExpPoly::term(c(1.0, 0.0), 1, lam);
        let sq = exppoly_mul(&a, &a);
        assert_eq!(sq.terms().len(), 1);
        let t = &sq.terms()[0];
        assert_eq!(t.power, 2);
        assert_eq!(t.rate, lam + lam);
        assert_eq!(t.coeff, c(1.0, 0.0));
    }

    #[test]
    fn deriv_rules() {
        assert!(ExpPoly::one().deriv().is_zero());

        let w = 1.3;
        let e = ExpPoly::term(c(1.0, 0.0), 0, c(0.0, 2.0 * w));
        let de = e.deriv();
        assert_eq!(de.terms().len(), 1);
        assert_eq!(de.terms()[0].coeff, c(0.0, 2.0 * w));

        let t2 = ExpPoly::term(c(1.0, 0.0), 2, c(0.0, 0.0));
        let dt2 = t2.deriv();
        assert_eq!(dt2.terms().len(), 1);
        assert_eq!(dt2.terms()[0].power, 1);
        assert_eq!(dt2.terms()[0].coeff, c(2.0, 0.0));
    }

    #[test]
    fn product_rule_exact_on_mixed_terms() {
        let a = ExpPoly::term(c(1.5, 0.5), 2, c(0.1, -0.4));
        let b = ExpPoly::term(c(-0.25, 1.0), 1, c(-0.2, 0.3))
            .add(&ExpPoly::real_constant(2.0));
        let lhs = exppoly_deriv(&exppoly_mul(&a, &b));
        let rhs = exppoly_mul(&exppoly_deriv(&a), &b)
            .add(&exppoly_mul(&a, &exppoly_deriv(&b)));
        let diff = lhs.sub(&rhs);
        assert!(
            diff.max_abs_coeff() <= 1e-15 * lhs.max_abs_coeff().max(1.0),
            "product rule defect {diff}"
        );
    }

    #[test]
    fn trig_pythagoras_collapses_exactly() {
        let w = 2.0;
        let c2 = exppoly_mul(&ExpPoly::cosine(w), &ExpPoly::cosine(w));
        let s2 = exppoly_mul(&ExpPoly::sine(w), &ExpPoly::sine(w));
        let sum = c2.add(&s2);
        assert_eq!(sum.as_constant(), Some(c(1.0, 0.0)));
    }

    #[test]
    fn symbol_derivative_chain() {
        // d/dt a = a′; d/dt a² = 2·a·a′.
        let a = ExpPoly::symbol(0);
        let da = a.deriv();
        assert_eq!(da, ExpPoly::symbol(1));

        let a2 = exppoly_mul(&a, &a);
        let da2 = a2.deriv();
        assert_eq!(da2.terms().len(), 1);
        assert_eq!(da2.terms()[0].coeff, c(2.0, 0.0));
        assert_eq!(da2.terms()[0].symbol, vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn symbol_times_poly_derivative() {
        // (a·t)′ = a + a′·t.
        let at = exppoly_mul(&ExpPoly::symbol(0), &ExpPoly::term(c(1.0, 0.0), 1, c(0.0, 0.0)));
        let d = at.deriv();
        let expected = ExpPoly::symbol(0).add(&exppoly_mul(
            &ExpPoly::symbol(1),
            &ExpPoly::term(c(1.0, 0.0), 1, c(0.0, 0.0)),
        ));
        assert_eq!(d, expected);
    }

    #[test]
    fn eval_default_symbols() {
        // a(t) evaluates to 1, a′(t) to 0 under the default table.
        let f = ExpPoly::symbol(0)
            .scale_real(3.0)
            .add(&ExpPoly::symbol(1).scale_real(5.0));
        assert_eq!(f.eval_default(0.4).unwrap(), c(3.0, 0.0));
    }

    #[test]
    fn eval_matches_closed_form() {
        let f = ExpPoly::term(c(2.0, 0.0), 1, c(0.0, 3.0));
        let t = 0.8;
        let expect = 2.0 * t * (Complex64::new(0.0, 3.0 * t)).exp();
        let got = f.eval_default(t).unwrap();
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn overflow_guard_triggers() {
        let f = ExpPoly::term(c(1.0, 0.0), 0, c(1.0, 0.0));
        assert!(matches!(f.eval_default(700.0), Err(Error::Range { .. })));
        // Decay is benign.
        assert!(f.eval_default(-700.0).unwrap().norm() < 1e-200);
    }

    #[test]
    fn normal_form_merges_and_drops() {
        let t1 = Term {
            coeff: c(1.0, 0.0),
            power: 1,
            rate: c(0.0, 2.0),
            symbol: vec![],
        };
        let t2 = Term {
            coeff: c(-1.0, 0.0),
            power: 1,
            rate: c(0.0, 2.0),
            symbol: vec![],
        };
        assert!(ExpPoly::from_terms(vec![t1, t2]).is_zero());
    }
}
