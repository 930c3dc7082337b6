//! Sparse cochains on a graded space, the circle product and graded bracket
//! of coderivations, and exact linear maps acting on them.

use crate::gspace::{GradedSpace, Monomial, Normalized, Parity, SpaceError};
use crate::scalar::{Rational, Scalar, ScalarError};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Errors from cochain and linear-map operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CochainError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("cochains live on different spaces")]
    SpaceMismatch,
    #[error("cochain mixes parities: term ({monomial} -> {target}) is {found}, cochain is {expected}")]
    MixedParity { monomial: String, target: String, found: Parity, expected: Parity },
    #[error("zero-degree cochain terms are not supported")]
    ZeroDegree,
    #[error("target index {0} out of range")]
    BadTarget(usize),
    #[error("operation needs a homogeneous cochain of degree {expected}, found degrees {found:?}")]
    NotHomogeneous { expected: usize, found: Vec<usize> },
    #[error("operation needs an odd cochain")]
    NeedsOdd,
    #[error("linear map must preserve parity: entry ({row},{col}) links {row_parity} to {col_parity}")]
    ParityBreakingMap { row: usize, col: usize, row_parity: Parity, col_parity: Parity },
    #[error("matrix must be {dim}x{dim}")]
    BadMatrixShape { dim: usize },
    #[error("determinant `{0}` is not a nonzero rational; use the cleared variant")]
    NonRationalDeterminant(String),
}

/// Sparse map S(V) -> V stored as (monomial, target index) -> coefficient.
///
/// Nonzero cochains are homogeneous in parity; the zero cochain carries none.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    space: Arc<GradedSpace>,
    parity: Option<Parity>,
    terms: BTreeMap<(Monomial, usize), Scalar>,
}

impl Cochain {
    pub fn zero(space: &Arc<GradedSpace>) -> Self {
        Cochain { space: space.clone(), parity: None, terms: BTreeMap::new() }
    }

    /// Single term sending the (normalized) word to `coeff` times basis vector
    /// `target`.
    pub fn term(
        space: &Arc<GradedSpace>,
        word: &[usize],
        target: usize,
        coeff: Scalar,
    ) -> Result<Self, CochainError> {
        if word.is_empty() {
            return Err(CochainError::ZeroDegree);
        }
        if target >= space.dim() {
            return Err(CochainError::BadTarget(target));
        }
        let mut out = Cochain::zero(space);
        let (sign, monomial) = match space.normalize_word(word)? {
            Normalized::Zero => return Ok(out),
            Normalized::Term { sign, monomial } => (sign, monomial),
        };
        let coeff = if sign < 0 { coeff.neg() } else { coeff };
        if coeff.is_zero() {
            return Ok(out);
        }
        out.parity = Some(space.monomial_parity(&monomial).combine(space.parity(target)));
        out.terms.insert((monomial, target), coeff);
        Ok(out)
    }

    /// Sums a list of (word, target, coeff) terms.
    pub fn from_terms<I>(space: &Arc<GradedSpace>, terms: I) -> Result<Self, CochainError>
    where
        I: IntoIterator<Item = (Vec<usize>, usize, Scalar)>,
    {
        let mut acc = Cochain::zero(space);
        for (word, target, coeff) in terms {
            acc = acc.add(&Cochain::term(space, &word, target, coeff)?)?;
        }
        Ok(acc)
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Deterministic term iteration: monomials in colex order, then target.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, usize, &Scalar)> {
        self.terms.iter().map(|((m, t), c)| (m, *t, c))
    }

    pub fn coeff(&self, monomial: &Monomial, target: usize) -> Scalar {
        self.terms
            .get(&(monomial.clone(), target))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    /// Degrees of monomials present.
    pub fn degrees(&self) -> BTreeSet<usize> {
        self.terms.keys().map(|(m, _)| m.degree()).collect()
    }

    /// Requires one single degree and returns it.
    pub fn homogeneous_degree(&self, expected: usize) -> Result<usize, CochainError> {
        let found: Vec<usize> = self.degrees().into_iter().collect();
        if found.iter().all(|&d| d == expected) {
            Ok(expected)
        } else {
            Err(CochainError::NotHomogeneous { expected, found })
        }
    }

    fn same_space(&self, other: &Cochain) -> Result<(), CochainError> {
        if Arc::ptr_eq(&self.space, &other.space) || self.space == other.space {
            Ok(())
        } else {
            Err(CochainError::SpaceMismatch)
        }
    }

    fn unify_parity(&self, other: &Cochain) -> Result<Option<Parity>, CochainError> {
        match (self.parity, other.parity) {
            (None, p) | (p, None) => Ok(p),
            (Some(a), Some(b)) if a == b => Ok(Some(a)),
            (Some(a), Some(_)) => {
                let ((m, t), _) = other.terms.iter().next().unwrap();
                Err(CochainError::MixedParity {
                    monomial: m.to_string(),
                    target: other.space.name(*t).to_string(),
                    found: other.parity.unwrap(),
                    expected: a,
                })
            }
        }
    }

    fn fix_parity(&mut self) {
        if self.terms.is_empty() {
            self.parity = None;
        }
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain, CochainError> {
        self.same_space(other)?;
        let parity = self.unify_parity(other)?;
        let mut out = Cochain { space: self.space.clone(), parity, terms: self.terms.clone() };
        for (key, c) in &other.terms {
            match out.terms.entry(key.clone()) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(c.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    let sum = o.get().checked_add(c)?;
                    if sum.is_zero() {
                        o.remove();
                    } else {
                        *o.get_mut() = sum;
                    }
                }
            }
        }
        out.fix_parity();
        Ok(out)
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain, CochainError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Cochain {
        Cochain {
            space: self.space.clone(),
            parity: self.parity,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Result<Cochain, CochainError> {
        if s.is_zero() {
            return Ok(Cochain::zero(&self.space));
        }
        let mut out = Cochain { space: self.space.clone(), parity: self.parity, terms: BTreeMap::new() };
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), c.checked_mul(s)?);
        }
        Ok(out)
    }

    pub fn scale_rational(&self, r: &Rational) -> Cochain {
        self.scale(&Scalar::rational(r.clone())).expect("rational scaling cannot fail")
    }

    /// Keeps the terms satisfying the predicate.
    pub fn filter_terms(&self, mut pred: impl FnMut(&Monomial, usize) -> bool) -> Cochain {
        let mut out = Cochain {
            space: self.space.clone(),
            parity: self.parity,
            terms: self
                .terms
                .iter()
                .filter(|((m, t), _)| pred(m, *t))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        };
        out.fix_parity();
        out
    }

    /// Terms whose monomial has the given degree.
    pub fn component_of_degree(&self, degree: usize) -> Cochain {
        self.filter_terms(|m, _| m.degree() == degree)
    }

    /// Evaluates on a word: the output vector as target -> coefficient.
    pub fn apply(&self, word: &[usize]) -> Result<BTreeMap<usize, Scalar>, CochainError> {
        let (sign, monomial) = match self.space.normalize_word(word)? {
            Normalized::Zero => return Ok(BTreeMap::new()),
            Normalized::Term { sign, monomial } => (sign, monomial),
        };
        let mut out = BTreeMap::new();
        for ((m, t), c) in &self.terms {
            if *m == monomial {
                let v = if sign < 0 { c.neg() } else { c.clone() };
                out.insert(*t, v);
            }
        }
        Ok(out)
    }

    /// Circle product of coderivations: plugs `inner` into one argument slot
    /// of `self` in every multiplicity-weighted way.
    pub fn circle(&self, inner: &Cochain) -> Result<Cochain, CochainError> {
        self.same_space(inner)?;
        let parity = match (self.parity, inner.parity) {
            (Some(a), Some(b)) => Some(a.combine(b)),
            _ => return Ok(Cochain::zero(&self.space)),
        };
        let mut out = Cochain { space: self.space.clone(), parity, terms: BTreeMap::new() };
        for ((b_mon, b_target), c_outer) in &self.terms {
            for ((a_mon, a_target), c_inner) in &inner.terms {
                let u = *a_target;
                if b_mon.multiplicity(u) == 0 {
                    continue;
                }
                // R = outer monomial with one copy of the plugged slot removed
                let mut rest: Vec<usize> = b_mon.indices().to_vec();
                let pos = rest.iter().position(|&i| i == u).unwrap();
                rest.remove(pos);

                // merged input monomial, with the unshuffle sign
                let mut merged_word: Vec<usize> = a_mon.indices().to_vec();
                merged_word.extend_from_slice(&rest);
                let (s1, merged) = match self.space.normalize_word(&merged_word)? {
                    Normalized::Zero => continue,
                    Normalized::Term { sign, monomial } => (sign, monomial),
                };

                // sign of presenting (inner output, rest) to the outer cochain
                let mut plug_word = vec![u];
                plug_word.extend_from_slice(&rest);
                let s2 = match self.space.normalize_word(&plug_word)? {
                    Normalized::Zero => unreachable!("outer monomial has no odd repeat"),
                    Normalized::Term { sign, monomial } => {
                        debug_assert_eq!(&monomial, b_mon);
                        sign
                    }
                };

                // shuffles reproducing this split, counted per repeated index
                let mut mult = Rational::one();
                let mut seen = BTreeSet::new();
                for &g in a_mon.indices() {
                    if seen.insert(g) {
                        mult *= Rational::from_integer(
                            binomial(merged.multiplicity(g), a_mon.multiplicity(g)).into(),
                        );
                    }
                }

                let mut contrib = c_outer.checked_mul(c_inner)?.scale(&mult);
                if s1 * s2 < 0 {
                    contrib = contrib.neg();
                }
                let key = (merged, *b_target);
                match out.terms.entry(key) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        if !contrib.is_zero() {
                            v.insert(contrib);
                        }
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        let sum = o.get().checked_add(&contrib)?;
                        if sum.is_zero() {
                            o.remove();
                        } else {
                            *o.get_mut() = sum;
                        }
                    }
                }
            }
        }
        out.fix_parity();
        Ok(out)
    }

    /// Graded bracket [self, other] = self∘other - (-1)^{|self||other|} other∘self.
    pub fn bracket(&self, other: &Cochain) -> Result<Cochain, CochainError> {
        let fwd = self.circle(other)?;
        let bwd = other.circle(self)?;
        let sign_flip = match (self.parity, other.parity) {
            (Some(Parity::Odd), Some(Parity::Odd)) => false,
            (Some(_), Some(_)) => true,
            _ => return Ok(Cochain::zero(&self.space)),
        };
        if sign_flip {
            fwd.sub(&bwd)
        } else {
            fwd.add(&bwd)
        }
    }

    /// The obstruction [self, self]; zero exactly for codifferentials.
    pub fn codifferential_obstruction(&self) -> Result<Cochain, CochainError> {
        if self.parity == Some(Parity::Even) {
            return Err(CochainError::NeedsOdd);
        }
        self.bracket(self)
    }

    /// Whether [self, self] = 0 as a polynomial identity.
    pub fn is_codifferential(&self) -> Result<bool, CochainError> {
        Ok(self.codifferential_obstruction()?.is_zero())
    }

    // output of self on the two-letter word (i, j)
    fn eval_pair(&self, i: usize, j: usize) -> Result<BTreeMap<usize, Scalar>, CochainError> {
        self.apply(&[i, j])
    }

    /// Independent graded Jacobi check for a degree-2 odd cochain, evaluated
    /// on every ordered basis triple through pair normalization alone.
    pub fn jacobi_check(&self) -> Result<JacobiCheck, CochainError> {
        if self.parity == Some(Parity::Even) {
            return Err(CochainError::NeedsOdd);
        }
        self.homogeneous_degree(2)?;
        let dim = self.space.dim();
        let p = |i: usize| self.space.parity(i);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let mut acc: BTreeMap<usize, Scalar> = BTreeMap::new();
                    // d(d(a,b), c) + s_bc d(d(a,c), b) + s_a(bc) d(d(b,c), a)
                    let pieces: [(usize, usize, usize, i8); 3] = [
                        (a, b, c, 1),
                        (a, c, b, p(b).swap_sign(p(c))),
                        (b, c, a, {
                            let s1 = p(a).swap_sign(p(b));
                            let s2 = p(a).swap_sign(p(c));
                            s1 * s2
                        }),
                    ];
                    for (x, y, z, sign) in pieces {
                        for (k, inner_c) in self.eval_pair(x, y)? {
                            for (t, outer_c) in self.eval_pair(k, z)? {
                                let mut v = inner_c.checked_mul(&outer_c)?;
                                if sign < 0 {
                                    v = v.neg();
                                }
                                let entry = acc.entry(t).or_insert_with(Scalar::zero);
                                *entry = entry.checked_add(&v)?;
                            }
                        }
                    }
                    for (t, v) in acc {
                        if !v.is_zero() {
                            return Ok(JacobiCheck {
                                holds: false,
                                witness: Some(JacobiWitness { triple: (a, b, c), target: t, residual: v }),
                            });
                        }
                    }
                }
            }
        }
        Ok(JacobiCheck { holds: true, witness: None })
    }

    /// Binds all parameters in every coefficient.
    pub fn instantiate(
        &self,
        bindings: &BTreeMap<String, Rational>,
    ) -> Result<Cochain, CochainError> {
        let mut out = Cochain { space: self.space.clone(), parity: self.parity, terms: BTreeMap::new() };
        for (k, c) in &self.terms {
            let v = c.instantiate(bindings)?;
            if !v.is_zero() {
                out.terms.insert(k.clone(), v);
            }
        }
        out.fix_parity();
        Ok(out)
    }

    /// Applies a parameter substitution to every coefficient.
    pub fn substitute(&self, map: &BTreeMap<String, Scalar>) -> Result<Cochain, CochainError> {
        let mut out = Cochain { space: self.space.clone(), parity: self.parity, terms: BTreeMap::new() };
        for (k, c) in &self.terms {
            let v = c.substitute(map)?;
            if !v.is_zero() {
                out.terms.insert(k.clone(), v);
            }
        }
        out.fix_parity();
        Ok(out)
    }

    /// True when every coefficient is a plain rational.
    pub fn is_instantiated(&self) -> bool {
        self.terms.values().all(|c| c.as_rational().is_some())
    }

    /// Matrix of the degree-`n` component: columns over the monomial basis in
    /// colex order, rows over basis targets.
    pub fn as_matrix(&self, degree: usize) -> MatrixView {
        let cols = self.space.monomial_basis(degree);
        let dim = self.space.dim();
        let entries: Vec<Vec<Scalar>> = (0..dim)
            .map(|t| cols.iter().map(|m| self.coeff(m, t)).collect())
            .collect();
        MatrixView { cols, entries }
    }

    /// Rebuilds a degree-`n` component from a matrix in `as_matrix` layout.
    pub fn from_matrix(
        space: &Arc<GradedSpace>,
        degree: usize,
        entries: &[Vec<Scalar>],
    ) -> Result<Cochain, CochainError> {
        let cols = space.monomial_basis(degree);
        if entries.len() != space.dim() || entries.iter().any(|r| r.len() != cols.len()) {
            return Err(CochainError::BadMatrixShape { dim: space.dim() });
        }
        let mut acc = Cochain::zero(space);
        for (t, row) in entries.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc.add(&Cochain::term(space, cols[j].indices(), t, c.clone())?)?;
                }
            }
        }
        Ok(acc)
    }
}

/// Degree-component matrix: `entries[target][col]` over colex monomial columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixView {
    pub cols: Vec<Monomial>,
    pub entries: Vec<Vec<Scalar>>,
}

/// Result of the Jacobi evaluation with a failing triple when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiCheck {
    pub holds: bool,
    pub witness: Option<JacobiWitness>,
}

/// A basis triple and output component where the Jacobi sum fails to vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiWitness {
    pub triple: (usize, usize, usize),
    pub target: usize,
    pub residual: Scalar,
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k.min(n - k) {
        num *= (n - i) as u64;
        den *= (i + 1) as u64;
    }
    num / den
}

impl fmt::Display for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((m, t), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let names: Vec<&str> = m.indices().iter().map(|&j| self.space.name(j)).collect();
            let coeff = c.to_string();
            if coeff == "1" {
                write!(f, "[{} -> {}]", names.join("*"), self.space.name(*t))?;
            } else if coeff.contains(' ') || coeff.contains('-') {
                write!(f, "({}) [{} -> {}]", coeff, names.join("*"), self.space.name(*t))?;
            } else {
                write!(f, "{} [{} -> {}]", coeff, names.join("*"), self.space.name(*t))?;
            }
        }
        Ok(())
    }
}

/// Parity-preserving linear endomorphism with exact entries; column `j` holds
/// the coefficients of the image of basis vector `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    space: Arc<GradedSpace>,
    // entries[i][j]: coefficient of v_i in f(v_j)
    entries: Vec<Vec<Scalar>>,
}

impl LinearMap {
    pub fn identity(space: &Arc<GradedSpace>) -> Self {
        let dim = space.dim();
        let entries = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { Scalar::one() } else { Scalar::zero() })
                    .collect()
            })
            .collect();
        LinearMap { space: space.clone(), entries }
    }

    pub fn from_entries(
        space: &Arc<GradedSpace>,
        entries: Vec<Vec<Scalar>>,
    ) -> Result<Self, CochainError> {
        let dim = space.dim();
        if entries.len() != dim || entries.iter().any(|r| r.len() != dim) {
            return Err(CochainError::BadMatrixShape { dim });
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() && space.parity(i) != space.parity(j) {
                    return Err(CochainError::ParityBreakingMap {
                        row: i,
                        col: j,
                        row_parity: space.parity(i),
                        col_parity: space.parity(j),
                    });
                }
            }
        }
        Ok(LinearMap { space: space.clone(), entries })
    }

    /// Builds 1 + beta from an even degree-1 cochain.
    pub fn one_plus(beta: &Cochain) -> Result<Self, CochainError> {
        if beta.parity == Some(Parity::Odd) {
            return Err(CochainError::ParityBreakingMap {
                row: 0,
                col: 0,
                row_parity: Parity::Odd,
                col_parity: Parity::Even,
            });
        }
        if !beta.is_zero() {
            beta.homogeneous_degree(1)?;
        }
        let mut map = LinearMap::identity(&beta.space);
        for ((m, t), c) in &beta.terms {
            let j = m.indices()[0];
            map.entries[*t][j] = map.entries[*t][j].checked_add(c)?;
        }
        LinearMap::from_entries(&beta.space, map.entries)
    }

    /// Block-diagonal map for a split space: `module` acts on module indices,
    /// `complement` on the rest, each given in the order of those indices.
    pub fn block_diagonal(
        space: &Arc<GradedSpace>,
        module_block: &[Vec<Scalar>],
        complement_block: &[Vec<Scalar>],
    ) -> Result<Self, CochainError> {
        let module = space.module().ok_or(SpaceError::NoSplit)?.clone();
        let m_idx: Vec<usize> = module.iter().copied().collect();
        let w_idx: Vec<usize> = (0..space.dim()).filter(|i| !module.contains(i)).collect();
        if module_block.len() != m_idx.len()
            || module_block.iter().any(|r| r.len() != m_idx.len())
            || complement_block.len() != w_idx.len()
            || complement_block.iter().any(|r| r.len() != w_idx.len())
        {
            return Err(CochainError::BadMatrixShape { dim: space.dim() });
        }
        let dim = space.dim();
        let mut entries = vec![vec![Scalar::zero(); dim]; dim];
        for (a, &i) in m_idx.iter().enumerate() {
            for (b, &j) in m_idx.iter().enumerate() {
                entries[i][j] = module_block[a][b].clone();
            }
        }
        for (a, &i) in w_idx.iter().enumerate() {
            for (b, &j) in w_idx.iter().enumerate() {
                entries[i][j] = complement_block[a][b].clone();
            }
        }
        LinearMap::from_entries(space, entries)
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn entries(&self) -> &[Vec<Scalar>] {
        &self.entries
    }

    /// Matrix product self ∘ other.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap, CochainError> {
        if self.space != other.space {
            return Err(CochainError::SpaceMismatch);
        }
        let dim = self.space.dim();
        let mut entries = vec![vec![Scalar::zero(); dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Scalar::zero();
                for k in 0..dim {
                    acc = acc.checked_add(&self.entries[i][k].checked_mul(&other.entries[k][j])?)?;
                }
                entries[i][j] = acc;
            }
        }
        Ok(LinearMap { space: self.space.clone(), entries })
    }

    /// Determinant by memoized Laplace expansion; exact over parameters.
    pub fn det(&self) -> Scalar {
        let dim = self.space.dim();
        let full: u64 = (1 << dim) - 1;
        let mut memo: HashMap<u64, Scalar> = HashMap::new();
        self.det_rec(0, full, &mut memo)
    }

    fn det_rec(&self, row: usize, colmask: u64, memo: &mut HashMap<u64, Scalar>) -> Scalar {
        if colmask == 0 {
            return Scalar::one();
        }
        if let Some(v) = memo.get(&colmask) {
            return v.clone();
        }
        let mut acc = Scalar::zero();
        let mut sign_pos = true;
        for j in 0..self.space.dim() {
            if colmask & (1 << j) == 0 {
                continue;
            }
            let e = &self.entries[row][j];
            if !e.is_zero() {
                let sub = self.det_rec(row + 1, colmask & !(1 << j), memo);
                let t = e.checked_mul(&sub).expect("same params");
                acc = if sign_pos {
                    acc.checked_add(&t).expect("same params")
                } else {
                    acc.checked_sub(&t).expect("same params")
                };
            }
            sign_pos = !sign_pos;
        }
        memo.insert(colmask, acc.clone());
        acc
    }

    /// Adjugate matrix: adj * self = det * identity.
    pub fn adjugate(&self) -> LinearMap {
        let dim = self.space.dim();
        let mut entries = vec![vec![Scalar::zero(); dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                // cofactor of (j, i), transposed
                let minor = self.minor(j, i);
                entries[i][j] = if (i + j) % 2 == 0 { minor } else { minor.neg() };
            }
        }
        LinearMap { space: self.space.clone(), entries }
    }

    fn minor(&self, del_row: usize, del_col: usize) -> Scalar {
        let dim = self.space.dim();
        if dim == 1 {
            return Scalar::one();
        }
        let rows: Vec<usize> = (0..dim).filter(|&r| r != del_row).collect();
        let cols: Vec<usize> = (0..dim).filter(|&c| c != del_col).collect();
        det_of(&rows, &cols, &self.entries)
    }

    /// Exact inverse; requires a nonzero rational determinant.
    pub fn inverse_exact(&self) -> Result<LinearMap, CochainError> {
        let det = self.det();
        let r = det
            .as_rational()
            .filter(|r| !r.is_zero())
            .ok_or_else(|| CochainError::NonRationalDeterminant(det.to_string()))?;
        let inv = r.recip();
        let adj = self.adjugate();
        let entries = adj
            .entries
            .iter()
            .map(|row| row.iter().map(|c| c.scale(&inv)).collect())
            .collect();
        Ok(LinearMap { space: self.space.clone(), entries })
    }

    /// Image of a basis vector as (index, coefficient) pairs.
    pub fn apply_index(&self, j: usize) -> Vec<(usize, Scalar)> {
        (0..self.space.dim())
            .filter(|&i| !self.entries[i][j].is_zero())
            .map(|i| (i, self.entries[i][j].clone()))
            .collect()
    }

    /// Symmetric-power action on a monomial: expands the product of images.
    pub fn apply_monomial(&self, m: &Monomial) -> Result<Vec<(Monomial, Scalar)>, CochainError> {
        let mut acc: BTreeMap<Monomial, Scalar> = BTreeMap::new();
        let images: Vec<Vec<(usize, Scalar)>> =
            m.indices().iter().map(|&j| self.apply_index(j)).collect();
        let mut word = Vec::with_capacity(m.degree());
        self.expand(&images, 0, &mut word, &Scalar::one(), &mut acc)?;
        Ok(acc.into_iter().filter(|(_, c)| !c.is_zero()).collect())
    }

    fn expand(
        &self,
        images: &[Vec<(usize, Scalar)>],
        depth: usize,
        word: &mut Vec<usize>,
        coeff: &Scalar,
        acc: &mut BTreeMap<Monomial, Scalar>,
    ) -> Result<(), CochainError> {
        if depth == images.len() {
            if let Normalized::Term { sign, monomial } = self.space.normalize_word(word)? {
                let v = if sign < 0 { coeff.neg() } else { coeff.clone() };
                let entry = acc.entry(monomial).or_insert_with(Scalar::zero);
                *entry = entry.checked_add(&v)?;
            }
            return Ok(());
        }
        for (i, c) in &images[depth] {
            word.push(*i);
            let next = coeff.checked_mul(c)?;
            self.expand(images, depth + 1, word, &next, acc)?;
            word.pop();
        }
        Ok(())
    }
}

fn det_of(rows: &[usize], cols: &[usize], entries: &[Vec<Scalar>]) -> Scalar {
    if rows.is_empty() {
        return Scalar::one();
    }
    let r = rows[0];
    let mut acc = Scalar::zero();
    for (pos, &c) in cols.iter().enumerate() {
        let e = &entries[r][c];
        if e.is_zero() {
            continue;
        }
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let sub = det_of(&rows[1..], &sub_cols, entries);
        let t = e.checked_mul(&sub).expect("same params");
        acc = if pos % 2 == 0 {
            acc.checked_add(&t).expect("same params")
        } else {
            acc.checked_sub(&t).expect("same params")
        };
    }
    acc
}

/// (f ∘ c): post-composes a cochain with a linear map on targets.
pub fn map_then(f: &LinearMap, c: &Cochain) -> Result<Cochain, CochainError> {
    if f.space != c.space {
        return Err(CochainError::SpaceMismatch);
    }
    let mut acc = Cochain::zero(&c.space);
    for ((m, t), coeff) in &c.terms {
        for (i, e) in f.apply_index(*t) {
            let term = Cochain::term(&c.space, m.indices(), i, coeff.checked_mul(&e)?)?;
            acc = acc.add(&term)?;
        }
    }
    Ok(acc)
}

/// (c ∘ S(f)): pre-composes with the symmetric-power action of a linear map.
pub fn then_symmetric(c: &Cochain, f: &LinearMap) -> Result<Cochain, CochainError> {
    if f.space != c.space {
        return Err(CochainError::SpaceMismatch);
    }
    let mut acc = Cochain::zero(&c.space);
    for degree in c.degrees() {
        let component = c.component_of_degree(degree);
        for m in c.space.monomial_basis(degree) {
            for (m_img, coeff) in f.apply_monomial(&m)? {
                for ((cm, t), cc) in &component.terms {
                    if *cm == m_img {
                        let term =
                            Cochain::term(&c.space, m.indices(), *t, coeff.checked_mul(cc)?)?;
                        acc = acc.add(&term)?;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Pullback g*(d) = g^{-1} ∘ d ∘ S(g); requires a rational determinant.
pub fn pullback(d: &Cochain, g: &LinearMap) -> Result<Cochain, CochainError> {
    let g_inv = g.inverse_exact()?;
    let inner = then_symmetric(d, g)?;
    map_then(&g_inv, &inner)
}

/// Denominator-cleared pullback: returns (adj(g) ∘ d ∘ S(g), det(g)), whose
/// quotient is g*(d). Works for symbolic g.
pub fn pullback_cleared(d: &Cochain, g: &LinearMap) -> Result<(Cochain, Scalar), CochainError> {
    let det = g.det();
    let adj = g.adjugate();
    let inner = then_symmetric(d, g)?;
    Ok((map_then(&adj, &inner)?, det))
}
