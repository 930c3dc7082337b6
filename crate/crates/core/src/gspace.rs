//! Z2-graded vector spaces with named basis, optional module/complement split,
//! and the symmetric-monomial combinatorics built on them.

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Errors from graded-space construction and monomial handling.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("basis must be nonempty")]
    EmptyBasis,
    #[error("duplicate basis name `{0}`")]
    DuplicateName(String),
    #[error("basis index {0} out of range")]
    BadIndex(usize),
    #[error("space has no module/complement split")]
    NoSplit,
    #[error("bad module split: {0}")]
    BadModule(String),
    #[error("parity count {parities} does not match basis size {basis}")]
    ParityCount { parities: usize, basis: usize },
}

/// Z2 degree of a basis vector or a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn combine(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Koszul sign picked up when two elements of these parities swap.
    pub fn swap_sign(self, other: Parity) -> i8 {
        if self == Parity::Odd && other == Parity::Odd {
            -1
        } else {
            1
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

/// Finite-dimensional Z2-graded space with an optional distinguished
/// submodule spanned by a subset of the basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSpace {
    names: Vec<String>,
    parities: Vec<Parity>,
    module: Option<BTreeSet<usize>>,
}

impl GradedSpace {
    pub fn new(names: Vec<String>, parities: Vec<Parity>) -> Result<Self, SpaceError> {
        if names.is_empty() {
            return Err(SpaceError::EmptyBasis);
        }
        if names.len() != parities.len() {
            return Err(SpaceError::ParityCount { parities: parities.len(), basis: names.len() });
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(SpaceError::DuplicateName(n.clone()));
            }
        }
        Ok(GradedSpace { names, parities, module: None })
    }

    /// As `new`, with basis indices `module` spanning the distinguished ideal.
    pub fn with_module(
        names: Vec<String>,
        parities: Vec<Parity>,
        module: &[usize],
    ) -> Result<Self, SpaceError> {
        let mut space = GradedSpace::new(names, parities)?;
        let set: BTreeSet<usize> = module.iter().copied().collect();
        for &i in &set {
            if i >= space.dim() {
                return Err(SpaceError::BadIndex(i));
            }
        }
        if set.is_empty() {
            return Err(SpaceError::BadModule("module part is empty".into()));
        }
        if set.len() == space.dim() {
            return Err(SpaceError::BadModule("module part is the whole space".into()));
        }
        space.module = Some(set);
        Ok(space)
    }

    /// Purely odd space with basis v1..vn.
    pub fn purely_odd(n: usize) -> Self {
        let names = (1..=n).map(|i| format!("v{i}")).collect();
        GradedSpace::new(names, vec![Parity::Odd; n]).expect("nonempty")
    }

    /// Purely odd space where the first `module_dim` vectors span the module.
    pub fn purely_odd_split(module_dim: usize, n: usize) -> Self {
        let names = (1..=n).map(|i| format!("v{i}")).collect::<Vec<_>>();
        let module: Vec<usize> = (0..module_dim).collect();
        GradedSpace::with_module(names, vec![Parity::Odd; n], &module).expect("valid split")
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn parity(&self, i: usize) -> Parity {
        self.parities[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn module(&self) -> Option<&BTreeSet<usize>> {
        self.module.as_ref()
    }

    pub fn is_module_index(&self, i: usize) -> Result<bool, SpaceError> {
        let m = self.module.as_ref().ok_or(SpaceError::NoSplit)?;
        Ok(m.contains(&i))
    }

    /// Even and odd dimensions, conventionally written "p|q".
    pub fn super_dims(&self) -> (usize, usize) {
        let even = self.parities.iter().filter(|p| **p == Parity::Even).count();
        (even, self.dim() - even)
    }

    /// Style warnings that do not affect computation.
    pub fn lints(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen_odd = false;
        for (i, p) in self.parities.iter().enumerate() {
            match p {
                Parity::Odd => seen_odd = true,
                Parity::Even if seen_odd => {
                    out.push(format!(
                        "even basis vector `{}` listed after an odd one; even-first ordering is conventional",
                        self.names[i]
                    ));
                    break;
                }
                Parity::Even => {}
            }
        }
        out
    }

    /// Sorts a word of basis indices into a monomial, tracking the Koszul sign.
    pub fn normalize_word(&self, word: &[usize]) -> Result<Normalized, SpaceError> {
        for &i in word {
            if i >= self.dim() {
                return Err(SpaceError::BadIndex(i));
            }
        }
        let mut v = word.to_vec();
        let mut sign = 1i8;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                sign *= self.parities[v[j - 1]].swap_sign(self.parities[v[j]]);
                v.swap(j - 1, j);
                j -= 1;
            }
        }
        for w in v.windows(2) {
            if w[0] == w[1] && self.parities[w[0]] == Parity::Odd {
                return Ok(Normalized::Zero);
            }
        }
        Ok(Normalized::Term { sign, monomial: Monomial(v) })
    }

    /// Parity of a monomial: sum of its factors' parities.
    pub fn monomial_parity(&self, m: &Monomial) -> Parity {
        m.0.iter().fold(Parity::Even, |acc, &i| acc.combine(self.parities[i]))
    }

    /// Module/complement factor counts of a monomial; requires a split.
    pub fn bidegree(&self, m: &Monomial) -> Result<(usize, usize), SpaceError> {
        let module = self.module.as_ref().ok_or(SpaceError::NoSplit)?;
        let k = m.0.iter().filter(|i| module.contains(i)).count();
        Ok((k, m.degree() - k))
    }

    /// Ordered basis of the degree-`n` symmetric power, colex order.
    pub fn monomial_basis(&self, degree: usize) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(degree);
        self.gen_monomials(degree, 0, &mut word, &mut out);
        out.sort();
        out
    }

    fn gen_monomials(&self, left: usize, from: usize, word: &mut Vec<usize>, out: &mut Vec<Monomial>) {
        if left == 0 {
            out.push(Monomial(word.clone()));
            return;
        }
        for i in from..self.dim() {
            if self.parities[i] == Parity::Odd && word.last() == Some(&i) {
                continue;
            }
            word.push(i);
            self.gen_monomials(left - 1, i, word, out);
            word.pop();
        }
    }
}

/// A word normalized into the monomial basis: zero, or a signed monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Zero,
    Term { sign: i8, monomial: Monomial },
}

/// Sorted symmetric monomial in basis indices; even indices may repeat.
///
/// Ordered by degree first, then colexicographically (rightmost index most
/// significant), so e.g. (1,2) < (1,3) < (2,3) < (1,4).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    /// Wraps an already-sorted index word.
    pub fn new_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] <= w[1]), "indices must be sorted");
        Monomial(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    /// Multiplicity of basis index `i` in the monomial.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.0.iter().filter(|&&j| j == i).count()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

/// All (l, r)-shuffles of positions 0..l+r as (first block, second block),
/// ordered lexicographically by the first block.
pub fn shuffles(l: usize, r: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = l + r;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..l).collect();
    loop {
        let rest: Vec<usize> = (0..n).filter(|i| !pick.contains(i)).collect();
        out.push((pick.clone(), rest));
        // advance to next lex combination
        let mut i = l;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] != i + n - l {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        pick[i] += 1;
        for j in i + 1..l {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn odd3() -> GradedSpace {
        GradedSpace::purely_odd(3)
    }

    #[test]
    fn normalize_signs() {
        let s = odd3();
        // two odd vectors swap with a sign
        let n = s.normalize_word(&[1, 0]).unwrap();
        assert_eq!(
            n,
            Normalized::Term { sign: -1, monomial: Monomial::new_sorted(vec![0, 1]) }
        );
        // odd squares vanish
        assert_eq!(s.normalize_word(&[2, 2]).unwrap(), Normalized::Zero);
        // 3-cycle of odds: (2,1,0) -> sorted in 3 transpositions
        let n = s.normalize_word(&[2, 1, 0]).unwrap();
        assert_eq!(
            n,
            Normalized::Term { sign: -1, monomial: Monomial::new_sorted(vec![0, 1, 2]) }
        );
    }

    #[test]
    fn even_factors_commute_and_square() {
        let s = GradedSpace::new(
            vec!["v1".into(), "v2".into()],
            vec![Parity::Even, Parity::Odd],
        )
        .unwrap();
        let n = s.normalize_word(&[1, 0]).unwrap();
        assert_eq!(
            n,
            Normalized::Term { sign: 1, monomial: Monomial::new_sorted(vec![0, 1]) }
        );
        let n = s.normalize_word(&[0, 0]).unwrap();
        assert_eq!(
            n,
            Normalized::Term { sign: 1, monomial: Monomial::new_sorted(vec![0, 0]) }
        );
        assert_eq!(s.monomial_basis(2).len(), 2);
    }

    #[test]
    fn colex_order_of_pairs() {
        let s = GradedSpace::purely_odd(4);
        let basis = s.monomial_basis(2);
        let expected: Vec<Vec<usize>> = vec![
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
            vec![0, 3],
            vec![1, 3],
            vec![2, 3],
        ];
        let got: Vec<Vec<usize>> = basis.iter().map(|m| m.indices().to_vec()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn basis_dimensions() {
        // purely odd: dim S^k = C(n, k)
        let s = GradedSpace::purely_odd(5);
        assert_eq!(s.monomial_basis(2).len(), 10);
        assert_eq!(s.monomial_basis(3).len(), 10);
        assert_eq!(s.monomial_basis(5).len(), 1);
        assert_eq!(s.monomial_basis(6).len(), 0);
    }

    #[test]
    fn bidegree_counts_module_factors() {
        let s = GradedSpace::purely_odd_split(1, 3);
        let m = Monomial::new_sorted(vec![0, 1, 2]);
        assert_eq!(s.bidegree(&m).unwrap(), (1, 2));
        let w = Monomial::new_sorted(vec![1, 2]);
        assert_eq!(s.bidegree(&w).unwrap(), (0, 2));
        assert!(GradedSpace::purely_odd(3).bidegree(&w).is_err());
    }

    #[test]
    fn shuffle_counts() {
        assert_eq!(shuffles(3, 2).len(), 10);
        assert_eq!(shuffles(1, 4).len(), 5);
        assert_eq!(shuffles(2, 2).len(), 6);
        assert_eq!(shuffles(0, 3).len(), 1);
        // lex order on the first block
        let sh = shuffles(2, 1);
        let firsts: Vec<Vec<usize>> = sh.iter().map(|(a, _)| a.clone()).collect();
        assert_eq!(firsts, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn lints_flag_even_after_odd() {
        let s = GradedSpace::new(
            vec!["v1".into(), "v2".into()],
            vec![Parity::Odd, Parity::Even],
        )
        .unwrap();
        assert_eq!(s.lints().len(), 1);
        assert!(GradedSpace::purely_odd(2).lints().is_empty());
    }

    #[test]
    fn split_validation() {
        assert!(GradedSpace::with_module(
            vec!["v1".into(), "v2".into()],
            vec![Parity::Odd, Parity::Odd],
            &[0, 1],
        )
        .is_err());
        assert!(GradedSpace::with_module(
            vec!["v1".into(), "v2".into()],
            vec![Parity::Odd, Parity::Odd],
            &[5],
        )
        .is_err());
    }
}
