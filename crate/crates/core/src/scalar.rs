//! Exact coefficients: arbitrary-precision rationals and sparse polynomials
//! in a declared list of commuting parameters.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

/// Errors from scalar construction, parsing, and evaluation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("parameter sets differ: [{left}] vs [{right}]")]
    ParamMismatch { left: String, right: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{0}` has no binding")]
    MissingParam(String),
    #[error("scalar parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("scalar `{0}` is not rational; bind its parameters first")]
    NotRational(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("invalid parameter name `{0}`")]
    BadParamName(String),
}

/// Ordered list of parameter names shared by a family of scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSet(Arc<Vec<String>>);

impl ParamSet {
    /// The empty set: scalars over it are plain rationals.
    pub fn empty() -> Self {
        ParamSet(Arc::new(Vec::new()))
    }

    /// Declares parameters; names must be unique identifiers.
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self, ScalarError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if !is_ident(n) {
                return Err(ScalarError::BadParamName(n.clone()));
            }
            if !seen.insert(n.clone()) {
                return Err(ScalarError::DuplicateParam(n.clone()));
            }
        }
        Ok(ParamSet(Arc::new(names)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    fn join(&self) -> String {
        self.0.join(", ")
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Picks the common parameter set of two scalars; rationals coerce to anything.
fn unify(a: &ParamSet, b: &ParamSet) -> Result<ParamSet, ScalarError> {
    if a == b || b.is_empty() {
        Ok(a.clone())
    } else if a.is_empty() {
        Ok(b.clone())
    } else {
        Err(ScalarError::ParamMismatch { left: a.join(), right: b.join() })
    }
}

/// Exact scalar: a polynomial with rational coefficients in the declared
/// parameters. An empty parameter set makes it a plain rational.
#[derive(Debug, Clone)]
pub struct Scalar {
    params: ParamSet,
    // exponent vector (len == params.len()) -> nonzero coefficient
    terms: BTreeMap<Vec<u16>, Rational>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { params: ParamSet::empty(), terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(r: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(Vec::new(), r);
        }
        Scalar { params: ParamSet::empty(), terms }
    }

    /// Rational n/d; panics if d == 0.
    pub fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Scalar::rational(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// The parameter `name` as a scalar over `params`.
    pub fn var(params: &ParamSet, name: &str) -> Result<Self, ScalarError> {
        let i = params
            .index_of(name)
            .ok_or_else(|| ScalarError::UnknownParam(name.to_string()))?;
        let mut exp = vec![0u16; params.len()];
        exp[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exp, Rational::one());
        Ok(Scalar { params: params.clone(), terms })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the value if no parameter occurs, regardless of declaration.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            let (exp, c) = self.terms.iter().next().unwrap();
            if exp.iter().all(|&e| e == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    /// As `as_rational` but an error naming the scalar when parameters remain.
    pub fn to_rational(&self) -> Result<Rational, ScalarError> {
        self.as_rational().ok_or_else(|| ScalarError::NotRational(self.to_string()))
    }

    fn insert_term(terms: &mut BTreeMap<Vec<u16>, Rational>, exp: Vec<u16>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn lift_exp(exp: &[u16], from: &ParamSet, to: &ParamSet) -> Vec<u16> {
        if from == to {
            exp.to_vec()
        } else {
            // only rationals coerce, so the source exponent vector is empty
            debug_assert!(exp.is_empty());
            vec![0; to.len()]
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        let params = unify(&self.params, &other.params)?;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            Self::insert_term(&mut terms, Self::lift_exp(e, &self.params, &params), c.clone());
        }
        for (e, c) in &other.terms {
            Self::insert_term(&mut terms, Self::lift_exp(e, &other.params, &params), c.clone());
        }
        Ok(Scalar { params, terms })
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        let params = unify(&self.params, &other.params)?;
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            let ea = Self::lift_exp(ea, &self.params, &params);
            for (eb, cb) in &other.terms {
                let eb = Self::lift_exp(eb, &other.params, &params);
                let exp: Vec<u16> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
                Self::insert_term(&mut terms, exp, ca * cb);
            }
        }
        Ok(Scalar { params, terms })
    }

    pub fn neg(&self) -> Scalar {
        Scalar {
            params: self.params.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, r: &Rational) -> Scalar {
        if r.is_zero() {
            return Scalar { params: self.params.clone(), terms: BTreeMap::new() };
        }
        Scalar {
            params: self.params.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * r)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = acc.checked_mul(self).expect("same params");
        }
        acc
    }

    /// Evaluates with every occurring parameter bound.
    pub fn eval(&self, bindings: &BTreeMap<String, Rational>) -> Result<Rational, ScalarError> {
        let mut acc = Rational::zero();
        for (exp, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in exp.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = &self.params.names()[i];
                let v = bindings
                    .get(name)
                    .ok_or_else(|| ScalarError::MissingParam(name.clone()))?;
                for _ in 0..e {
                    t *= v;
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Replaces mapped parameters by scalars over the same parameter set;
    /// unmapped parameters stay.
    pub fn substitute(&self, map: &BTreeMap<String, Scalar>) -> Result<Scalar, ScalarError> {
        for (name, v) in map {
            if self.params.index_of(name).is_none() {
                return Err(ScalarError::UnknownParam(name.clone()));
            }
            unify(&self.params, &v.params)?;
        }
        let mut acc = Scalar { params: self.params.clone(), terms: BTreeMap::new() };
        for (exp, c) in &self.terms {
            let mut t = Scalar::rational(c.clone());
            for (i, &e) in exp.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = &self.params.names()[i];
                let factor = match map.get(name) {
                    Some(v) => v.clone(),
                    None => Scalar::var(&self.params, name)?,
                };
                t = t.checked_mul(&factor.pow(e as u32))?;
            }
            acc = acc.checked_add(&t)?;
        }
        Ok(acc)
    }

    /// Binds every parameter, producing a plain rational scalar.
    pub fn instantiate(&self, bindings: &BTreeMap<String, Rational>) -> Result<Scalar, ScalarError> {
        Ok(Scalar::rational(self.eval(bindings)?))
    }

    // named-exponent view used for equality across parameter declarations
    fn named_terms(&self) -> BTreeMap<Vec<(&str, u16)>, &Rational> {
        self.terms
            .iter()
            .map(|(exp, c)| {
                let key: Vec<(&str, u16)> = exp
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (self.params.names()[i].as_str(), e))
                    .collect();
                (key, c)
            })
            .collect()
    }

    /// Parses the scalar grammar over declared parameters.
    ///
    /// expr := ['-'] term (('+'|'-') term)*; term := factor ('*' factor)*;
    /// factor := atom ('^' uint)?; atom := uint ('/' uint)? | ident | '(' expr ')'.
    pub fn parse(params: &ParamSet, input: &str) -> Result<Scalar, ScalarError> {
        let mut p = Parser { s: input.as_bytes(), pos: 0, params };
        p.skip_ws();
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(v)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.named_terms() == other.named_terms()
    }
}

impl Eq for Scalar {}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (exp, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            let vars: Vec<String> = exp
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    let name = &self.params.names()[j];
                    if e == 1 {
                        name.clone()
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                self.$checked(rhs).expect("scalar parameter sets differ")
            }
        }
        impl std::ops::$trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

scalar_binop!(Add, add, checked_add);
scalar_binop!(Sub, sub, checked_sub);
scalar_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(self)
    }
}

impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(&self)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    params: &'a ParamSet,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ScalarError {
        ScalarError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Scalar, ScalarError> {
        self.skip_ws();
        let negate = self.eat(b'-');
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let t = self.term()?;
                acc = acc.checked_add(&t)?;
            } else if self.eat(b'-') {
                let t = self.term()?;
                acc = acc.checked_sub(&t)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let t = self.factor()?;
                acc = acc.checked_mul(&t)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Scalar, ScalarError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let e = self.uint()?;
            let e: u32 = e
                .try_into()
                .map_err(|_| self.err("exponent too large"))?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Scalar, ScalarError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.bigint()?;
                self.skip_ws();
                if self.eat(b'/') {
                    self.skip_ws();
                    match self.peek() {
                        Some(c) if c.is_ascii_digit() => {}
                        _ => return Err(self.err("`/` is only valid in rational literals")),
                    }
                    let den = self.bigint()?;
                    if den.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    Ok(Scalar::rational(Rational::new(num, den)))
                } else {
                    Ok(Scalar::rational(Rational::from_integer(num)))
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                let v = Scalar::var(self.params, name)?;
                self.skip_ws();
                if self.peek() == Some(b'/') {
                    return Err(self.err("`/` is only valid in rational literals"));
                }
                Ok(v)
            }
            _ => Err(self.err("expected number, parameter, or `(`")),
        }
    }

    fn bigint(&mut self) -> Result<BigInt, ScalarError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        text.parse::<BigInt>().map_err(|_| self.err("bad integer"))
    }

    fn uint(&mut self) -> Result<u64, ScalarError> {
        let v = self.bigint()?;
        v.try_into().map_err(|_| self.err("expected small nonnegative integer"))
    }
}
