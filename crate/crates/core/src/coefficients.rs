//! Exact coefficient arithmetic: multivariate Laurent polynomials in the
//! label variables `q_i^{1/2}` with arbitrary-precision integer coefficients.
//!
//! Exponents are stored as integer powers of `q_i^{1/2}`, so `q_i` itself is
//! the exponent vector with a `2` in slot `i`. Rationals appear only at
//! evaluation time.

use crate::error::{HkError, Result};
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// Ordered list of label variable names, one per conjugacy class of simple
/// affine reflections. The order is fixed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVars {
    names: Vec<String>,
}

impl LabelVars {
    pub fn new(names: Vec<String>) -> Self {
        for (i, n) in names.iter().enumerate() {
            assert!(
                !names[..i].contains(n),
                "label variable names must be distinct"
            );
        }
        LabelVars { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

pub type Exponents = Vec<i32>;

/// Laurent polynomial in the variables `q_i^{1/2}` over the integers.
/// No zero coefficients are stored and terms are kept sorted, so structural
/// equality is mathematical equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LaurentPoly {
    nvars: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        LaurentPoly::constant(nvars, BigInt::one())
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut p = LaurentPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn int(nvars: usize, c: i64) -> Self {
        LaurentPoly::constant(nvars, BigInt::from(c))
    }

    /// A single term `c * prod_i (q_i^{1/2})^{e_i}`.
    pub fn monomial(nvars: usize, expo: Exponents, c: BigInt) -> Self {
        assert_eq!(expo.len(), nvars);
        let mut p = LaurentPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(expo, c);
        }
        p
    }

    /// `q_i^{1/2}` raised to the power `e`.
    pub fn half_power(nvars: usize, i: usize, e: i32) -> Self {
        let mut expo = vec![0; nvars];
        expo[i] = e;
        LaurentPoly::monomial(nvars, expo, BigInt::one())
    }

    /// `eta_i = q_i^{1/2} - q_i^{-1/2}`.
    pub fn eta(nvars: usize, i: usize) -> Self {
        let a = LaurentPoly::half_power(nvars, i, 1);
        let b = LaurentPoly::half_power(nvars, i, -1);
        a.sub(&b)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .all(|(e, c)| e.iter().all(|&x| x == 0) && c.is_one())
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigInt)> {
        self.terms.iter()
    }

    /// Spread between the largest and smallest exponent of `q_i^{1/2}`.
    pub fn exponent_width(&self, i: usize) -> i32 {
        let mut lo = i32::MAX;
        let mut hi = i32::MIN;
        for e in self.terms.keys() {
            lo = lo.min(e[i]);
            hi = hi.max(e[i]);
        }
        if lo > hi {
            0
        } else {
            hi - lo
        }
    }

    fn check_compat(&self, other: &LaurentPoly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(HkError::IncompatibleVariables(format!(
                "{} vs {} label variables",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        self.try_add(other).expect("incompatible label variables")
    }

    pub fn try_add(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_compat(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    /// In-place addition; avoids rebuilding the term map.
    pub fn add_assign(&mut self, other: &LaurentPoly) {
        assert_eq!(self.nvars, other.nvars, "incompatible label variables");
        for (e, c) in &other.terms {
            let entry = self.terms.entry(e.clone()).or_insert_with(BigInt::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(e);
            }
        }
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        self.try_mul(other).expect("incompatible label variables")
    }

    pub fn try_mul(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_compat(other)?;
        let mut terms: BTreeMap<Exponents, BigInt> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let entry = terms.entry(e.clone()).or_insert_with(BigInt::zero);
                *entry += c1 * c2;
                if entry.is_zero() {
                    terms.remove(&e);
                }
            }
        }
        Ok(LaurentPoly { nvars: self.nvars, terms })
    }

    pub fn scale(&self, c: &BigInt) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero(self.nvars);
        }
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> LaurentPoly {
        let mut acc = LaurentPoly::one(self.nvars);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact evaluation; `a` assigns a positive rational to every `q_i^{1/2}`.
    pub fn eval_exact(&self, a: &LabelAssignment) -> Result<BigRational> {
        let vals = a.exact_values()?;
        if vals.len() != self.nvars {
            return Err(HkError::UnboundLabel(format!(
                "assignment covers {} variables, polynomial has {}",
                vals.len(),
                self.nvars
            )));
        }
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = BigRational::from(c.clone());
            for (i, &k) in e.iter().enumerate() {
                t *= pow_rat(&vals[i], k);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating-point evaluation at `q_i^{1/2} = vals[i]`.
    pub fn eval_f64(&self, a: &LabelAssignment) -> Result<f64> {
        let vals = a.float_values();
        if vals.len() != self.nvars {
            return Err(HkError::UnboundLabel(format!(
                "assignment covers {} variables, polynomial has {}",
                vals.len(),
                self.nvars
            )));
        }
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (i, &k) in e.iter().enumerate() {
                t *= vals[i].powi(k);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Render with variables named by `vars`; `q_i` powers shown as halves
    /// when the exponent of `q_i^{1/2}` is odd.
    pub fn render(&self, vars: &LabelVars) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (e, c) in self.terms.iter().rev() {
            let mut piece = String::new();
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if !piece.is_empty() {
                    piece.push('*');
                }
                let name = &vars.names()[i];
                if k == 2 {
                    piece.push_str(name);
                } else if k % 2 == 0 {
                    piece.push_str(&format!("{}^{}", name, k / 2));
                } else {
                    piece.push_str(&format!("{}^({}/2)", name, k));
                }
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let abs = c.abs();
            let coeff = if abs.is_one() && !piece.is_empty() {
                String::new()
            } else {
                abs.to_string()
            };
            if out.is_empty() {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(&format!(" {} ", sign));
            }
            if coeff.is_empty() {
                out.push_str(&piece);
            } else if piece.is_empty() {
                out.push_str(&coeff);
            } else {
                out.push_str(&format!("{}*{}", coeff, piece));
            }
        }
        out
    }

    /// Deterministic JSON form: a list of `{exponents, coeff}` in term order.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Term<'a> {
            exponents: &'a [i32],
            coeff: String,
        }
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(e, c)| Term { exponents: e, coeff: c.to_string() })
            .collect();
        serde_json::to_value(terms).unwrap()
    }
}

fn pow_rat(v: &BigRational, k: i32) -> BigRational {
    if k == 0 {
        return BigRational::one();
    }
    let mut acc = BigRational::one();
    let base = if k > 0 { v.clone() } else { v.recip() };
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

/// Values for the label variables: positive rationals for exact work or
/// doubles for numeric-only paths. Values are assigned to `q_i^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelAssignment {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl LabelAssignment {
    /// Assignment for `q_i^{1/2}`; all values must be strictly positive.
    pub fn exact(vals: Vec<BigRational>) -> Result<Self> {
        for v in &vals {
            if !v.is_positive() {
                return Err(HkError::Invalid(
                    "label values must be strictly positive".into(),
                ));
            }
        }
        Ok(LabelAssignment::Exact(vals))
    }

    pub fn float(vals: Vec<f64>) -> Result<Self> {
        for v in &vals {
            if !(*v > 0.0) {
                return Err(HkError::Invalid(
                    "label values must be strictly positive".into(),
                ));
            }
        }
        Ok(LabelAssignment::Float(vals))
    }

    /// Assignment given as values of `q_i`; exact when the square root is
    /// rational, otherwise a float assignment.
    pub fn from_q_values(vals: &[BigRational]) -> Result<Self> {
        let mut sqrts = Vec::with_capacity(vals.len());
        for v in vals {
            if !v.is_positive() {
                return Err(HkError::Invalid(
                    "label values must be strictly positive".into(),
                ));
            }
            match rational_sqrt(v) {
                Some(s) => sqrts.push(s),
                None => {
                    let f: Vec<f64> = vals
                        .iter()
                        .map(|v| v.to_f64().expect("label value out of f64 range").sqrt())
                        .collect();
                    return LabelAssignment::float(f);
                }
            }
        }
        Ok(LabelAssignment::Exact(sqrts))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, LabelAssignment::Exact(_))
    }

    pub fn len(&self) -> usize {
        match self {
            LabelAssignment::Exact(v) => v.len(),
            LabelAssignment::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn exact_values(&self) -> Result<&[BigRational]> {
        match self {
            LabelAssignment::Exact(v) => Ok(v),
            LabelAssignment::Float(_) => Err(HkError::Invalid(
                "exact evaluation requested with a float assignment".into(),
            )),
        }
    }

    pub fn float_values(&self) -> Vec<f64> {
        match self {
            LabelAssignment::Exact(v) => {
                v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
            }
            LabelAssignment::Float(v) => v.clone(),
        }
    }
}

/// Exact square root of a positive rational, when it exists.
pub fn rational_sqrt(v: &BigRational) -> Option<BigRational> {
    let n = v.numer().sqrt();
    let d = v.denom().sqrt();
    if &(&n * &n) == v.numer() && &(&d * &d) == v.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intmat::{rat, rat_int};

    fn q(e: i32) -> LaurentPoly {
        LaurentPoly::half_power(1, 0, e)
    }

    #[test]
    fn difference_of_squares() {
        // (q^{1/2} - q^{-1/2}) (q^{1/2} + q^{-1/2}) = q - q^{-1}
        let a = q(1).sub(&q(-1));
        let b = q(1).add(&q(-1));
        assert_eq!(a.mul(&b), q(2).sub(&q(-2)));
    }

    #[test]
    fn zero_annihilates() {
        let p = q(3).add(&LaurentPoly::int(1, 7));
        assert!(LaurentPoly::zero(1).mul(&p).is_zero());
    }

    #[test]
    fn eta_squared() {
        // eta^2 = q - 2 + q^{-1}
        let eta = LaurentPoly::eta(1, 0);
        let expect = q(2).add(&LaurentPoly::int(1, -2)).add(&q(-2));
        assert_eq!(eta.mul(&eta), expect);
    }

    #[test]
    fn eval_examples() {
        // p = q - 2 + q^{-1} at q = 4 gives 9/4
        let p = q(2).add(&LaurentPoly::int(1, -2)).add(&q(-2));
        let a = LabelAssignment::exact(vec![rat_int(2)]).unwrap(); // q^{1/2} = 2
        assert_eq!(p.eval_exact(&a).unwrap(), rat(9, 4));
        // eta at q = 1 is 0
        let one = LabelAssignment::exact(vec![rat_int(1)]).unwrap();
        assert_eq!(LaurentPoly::eta(1, 0).eval_exact(&one).unwrap(), rat_int(0));
        // 1 + q at q = 1 is 2
        let p = LaurentPoly::one(1).add(&q(2));
        assert_eq!(p.eval_exact(&one).unwrap(), rat_int(2));
    }

    #[test]
    fn mismatched_vars_error() {
        let p = LaurentPoly::one(1);
        let r = LaurentPoly::one(2);
        assert!(matches!(
            p.try_add(&r),
            Err(HkError::IncompatibleVariables(_))
        ));
        assert!(matches!(
            p.try_mul(&r),
            Err(HkError::IncompatibleVariables(_))
        ));
    }

    #[test]
    fn unbound_label_error() {
        let p = LaurentPoly::one(2);
        let a = LabelAssignment::exact(vec![rat_int(2)]).unwrap();
        assert!(matches!(p.eval_exact(&a), Err(HkError::UnboundLabel(_))));
    }

    #[test]
    fn sqrt_detection() {
        assert_eq!(rational_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(rational_sqrt(&rat_int(2)), None);
        let a = LabelAssignment::from_q_values(&[rat_int(4)]).unwrap();
        assert!(a.is_exact());
        let b = LabelAssignment::from_q_values(&[rat_int(2)]).unwrap();
        assert!(!b.is_exact());
    }
}
