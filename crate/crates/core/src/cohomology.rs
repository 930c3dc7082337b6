//! Slice complexes of coderivations and their cohomology: exact rational
//! linear algebra, bidegree slice bases, and the single, restricted, double,
//! and triple cohomologies used to classify extensions and deformations.

use crate::cochain::{Cochain, CochainError};
use crate::gspace::{GradedSpace, Monomial, Parity, SpaceError};
use crate::scalar::Rational;
use crate::scalar::Scalar;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

/// Errors from slice and cohomology computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohomologyError {
    #[error(transparent)]
    Cochain(#[from] CochainError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("coefficient `{0}` is parametric; instantiate parameters before linear algebra")]
    NeedsInstantiation(String),
    #[error("term ({0}) lies outside the slice")]
    SliceMismatch(String),
    #[error("slices overlap at ({0})")]
    OverlappingSlices(String),
    #[error("complex is not well formed: {0}")]
    InvalidComplex(String),
    #[error("cochain is not a cocycle for this complex: {0}")]
    NotACocycle(String),
    #[error("no solution at stage `{0}`; the class is obstructed")]
    NotSolvable(String),
    #[error("cochain does not represent a class in this space")]
    ClassOutsideSpace,
}

pub(crate) mod linalg {
    //! Exact rational matrices in reduced row echelon form, subspaces as row
    //! spaces, and quotients with deterministic representatives.

    use super::Rational;
    use num_traits::{One, Zero};

    #[derive(Debug, Clone, PartialEq)]
    pub struct QMatrix {
        pub rows: usize,
        pub cols: usize,
        pub data: Vec<Vec<Rational>>,
    }

    impl QMatrix {
        pub fn zero(rows: usize, cols: usize) -> Self {
            QMatrix { rows, cols, data: vec![vec![Rational::zero(); cols]; rows] }
        }

        pub fn from_rows(cols: usize, data: Vec<Vec<Rational>>) -> Self {
            assert!(data.iter().all(|r| r.len() == cols), "ragged matrix");
            QMatrix { rows: data.len(), cols, data }
        }

        /// In-place reduced row echelon form; returns pivot columns in order.
        pub fn rref(&mut self) -> Vec<usize> {
            let mut pivots = Vec::new();
            let mut r = 0;
            for c in 0..self.cols {
                if r == self.rows {
                    break;
                }
                let Some(p) = (r..self.rows).find(|&i| !self.data[i][c].is_zero()) else {
                    continue;
                };
                self.data.swap(r, p);
                let inv = self.data[r][c].clone().recip();
                for j in c..self.cols {
                    let v = &self.data[r][j] * &inv;
                    self.data[r][j] = v;
                }
                for i in 0..self.rows {
                    if i != r && !self.data[i][c].is_zero() {
                        let f = self.data[i][c].clone();
                        for j in c..self.cols {
                            let v = &self.data[i][j] - &(&f * &self.data[r][j]);
                            self.data[i][j] = v;
                        }
                    }
                }
                pivots.push(c);
                r += 1;
            }
            pivots
        }

        /// Basis of the null space, one vector per free column.
        pub fn kernel(&self) -> Vec<Vec<Rational>> {
            let mut m = self.clone();
            let pivots = m.rref();
            let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
            let mut basis = Vec::new();
            for f in 0..self.cols {
                if pivot_set.contains(&f) {
                    continue;
                }
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -m.data[i][f].clone();
                }
                basis.push(v);
            }
            basis
        }

        /// One solution of self * x = b with free variables at zero.
        pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
            assert_eq!(b.len(), self.rows);
            let mut aug = QMatrix::zero(self.rows, self.cols + 1);
            for i in 0..self.rows {
                aug.data[i][..self.cols].clone_from_slice(&self.data[i]);
                aug.data[i][self.cols] = b[i].clone();
            }
            let pivots = aug.rref();
            if pivots.contains(&self.cols) {
                return None;
            }
            let mut x = vec![Rational::zero(); self.cols];
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = aug.data[i][self.cols].clone();
            }
            Some(x)
        }
    }

    /// Row space held in reduced row echelon form.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Subspace {
        pub ambient: usize,
        pub rows: Vec<Vec<Rational>>,
        pub pivots: Vec<usize>,
    }

    impl Subspace {
        pub fn zero(ambient: usize) -> Self {
            Subspace { ambient, rows: Vec::new(), pivots: Vec::new() }
        }

        pub fn from_spanning(ambient: usize, vecs: Vec<Vec<Rational>>) -> Self {
            let mut m = QMatrix::from_rows(ambient, vecs);
            let pivots = m.rref();
            let rows = m.data.into_iter().take(pivots.len()).collect();
            Subspace { ambient, rows, pivots }
        }

        pub fn dim(&self) -> usize {
            self.rows.len()
        }

        /// v minus its projection onto the row space; zero iff contained.
        pub fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
            let mut out = v.to_vec();
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                if out[p].is_zero() {
                    continue;
                }
                let f = out[p].clone();
                for j in 0..self.ambient {
                    let val = &out[j] - &(&f * &row[j]);
                    out[j] = val;
                }
            }
            out
        }

        pub fn contains(&self, v: &[Rational]) -> bool {
            self.reduce(v).iter().all(|x| x.is_zero())
        }

        /// Coordinates in the echelon basis when v lies in the space.
        pub fn coords(&self, v: &[Rational]) -> Option<Vec<Rational>> {
            let mut rest = v.to_vec();
            let mut out = Vec::with_capacity(self.rows.len());
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                let c = rest[p].clone();
                for j in 0..self.ambient {
                    let val = &rest[j] - &(&c * &row[j]);
                    rest[j] = val;
                }
                out.push(c);
            }
            if rest.iter().all(|x| x.is_zero()) {
                Some(out)
            } else {
                None
            }
        }

        pub fn sum(&self, other: &Subspace) -> Subspace {
            assert_eq!(self.ambient, other.ambient);
            let mut vecs = self.rows.clone();
            vecs.extend(other.rows.iter().cloned());
            Subspace::from_spanning(self.ambient, vecs)
        }

        pub fn intersect(&self, other: &Subspace) -> Subspace {
            assert_eq!(self.ambient, other.ambient);
            // combinations of self's basis that other also contains
            let residuals: Vec<Vec<Rational>> =
                self.rows.iter().map(|r| other.reduce(r)).collect();
            if self.rows.is_empty() {
                return Subspace::zero(self.ambient);
            }
            // columns indexed by self basis, rows by ambient coordinates
            let mut m = QMatrix::zero(self.ambient, self.rows.len());
            for (j, res) in residuals.iter().enumerate() {
                for i in 0..self.ambient {
                    m.data[i][j] = res[i].clone();
                }
            }
            let vecs: Vec<Vec<Rational>> = m
                .kernel()
                .into_iter()
                .map(|combo| {
                    let mut v = vec![Rational::zero(); self.ambient];
                    for (j, c) in combo.iter().enumerate() {
                        if !c.is_zero() {
                            for i in 0..self.ambient {
                                let val = &v[i] + &(c * &self.rows[j][i]);
                                v[i] = val;
                            }
                        }
                    }
                    v
                })
                .collect();
            Subspace::from_spanning(self.ambient, vecs)
        }
    }

    /// total / denom with echelon representatives for each class.
    #[derive(Debug, Clone)]
    pub struct Quotient {
        pub total: Subspace,
        pub denom: Subspace,
        pub reps: Subspace,
    }

    impl Quotient {
        /// Requires denom inside total; reports the first violating vector.
        pub fn new(total: Subspace, denom: Subspace) -> Result<Self, Vec<Rational>> {
            for r in &denom.rows {
                if !total.contains(r) {
                    return Err(r.clone());
                }
            }
            let reduced: Vec<Vec<Rational>> =
                total.rows.iter().map(|r| denom.reduce(r)).collect();
            let reps = Subspace::from_spanning(total.ambient, reduced);
            Ok(Quotient { total, denom, reps })
        }

        pub fn dim(&self) -> usize {
            self.reps.dim()
        }

        /// Class coordinates of a vector in the total space.
        pub fn project(&self, v: &[Rational]) -> Option<Vec<Rational>> {
            if !self.total.contains(v) {
                return None;
            }
            let reduced = self.denom.reduce(v);
            self.reps.coords(&reduced)
        }
    }
}

use linalg::{QMatrix, Quotient, Subspace};

/// A graded piece of the cochain complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SliceSpec {
    /// Hom(S^n W, W): n complement factors, complement target.
    WTarget(usize),
    /// Hom(S^k M · S^l W, M): k module factors, l complement factors.
    MTarget(usize, usize),
    /// Every monomial of the degree, every target; no split needed.
    Full(usize),
}

impl std::fmt::Display for SliceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SliceSpec::WTarget(n) => write!(f, "C^{n}"),
            SliceSpec::MTarget(k, l) => write!(f, "C^({k},{l})"),
            SliceSpec::Full(n) => write!(f, "Hom(S^{n}V, V)"),
        }
    }
}

/// Ordered basis of a union of slices: (monomial, target) pairs, monomials in
/// colex order within each slice.
#[derive(Debug, Clone)]
pub struct SliceBasis {
    space: Arc<GradedSpace>,
    specs: Vec<SliceSpec>,
    items: Vec<(Monomial, usize)>,
    index: BTreeMap<(Monomial, usize), usize>,
}

impl SliceBasis {
    pub fn new(
        space: &Arc<GradedSpace>,
        specs: &[SliceSpec],
        parity: Option<Parity>,
    ) -> Result<Self, CohomologyError> {
        let mut items = Vec::new();
        let mut index = BTreeMap::new();
        for spec in specs {
            for item in Self::spec_items(space, *spec)? {
                if let Some(p) = parity {
                    let term_parity =
                        space.monomial_parity(&item.0).combine(space.parity(item.1));
                    if term_parity != p {
                        continue;
                    }
                }
                if index.insert(item.clone(), items.len()).is_some() {
                    return Err(CohomologyError::OverlappingSlices(format!(
                        "{} -> {}",
                        item.0,
                        space.name(item.1)
                    )));
                }
                items.push(item);
            }
        }
        Ok(SliceBasis { space: space.clone(), specs: specs.to_vec(), items, index })
    }

    fn spec_items(
        space: &Arc<GradedSpace>,
        spec: SliceSpec,
    ) -> Result<Vec<(Monomial, usize)>, CohomologyError> {
        let mut out = Vec::new();
        match spec {
            SliceSpec::Full(n) => {
                if n == 0 {
                    return Ok(out);
                }
                for m in space.monomial_basis(n) {
                    for t in 0..space.dim() {
                        out.push((m.clone(), t));
                    }
                }
            }
            SliceSpec::WTarget(n) => {
                if n == 0 {
                    return Ok(out);
                }
                space.module().ok_or(SpaceError::NoSplit)?;
                for m in space.monomial_basis(n) {
                    if space.bidegree(&m)? != (0, n) {
                        continue;
                    }
                    for t in 0..space.dim() {
                        if !space.is_module_index(t)? {
                            out.push((m.clone(), t));
                        }
                    }
                }
            }
            SliceSpec::MTarget(k, l) => {
                if k + l == 0 {
                    return Ok(out);
                }
                space.module().ok_or(SpaceError::NoSplit)?;
                for m in space.monomial_basis(k + l) {
                    if space.bidegree(&m)? != (k, l) {
                        continue;
                    }
                    for t in 0..space.dim() {
                        if space.is_module_index(t)? {
                            out.push((m.clone(), t));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Builds a basis from explicit keys (used for collected operator images).
    pub(crate) fn from_keys(space: &Arc<GradedSpace>, keys: BTreeSet<(Monomial, usize)>) -> Self {
        let items: Vec<(Monomial, usize)> = keys.into_iter().collect();
        let index = items.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        SliceBasis { space: space.clone(), specs: Vec::new(), items, index }
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn specs(&self) -> &[SliceSpec] {
        &self.specs
    }

    pub fn dim(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[(Monomial, usize)] {
        &self.items
    }

    pub fn contains_key(&self, m: &Monomial, t: usize) -> bool {
        self.index.contains_key(&(m.clone(), t))
    }

    /// Basis cochain for one coordinate.
    pub fn unit(&self, i: usize) -> Cochain {
        let (m, t) = &self.items[i];
        Cochain::term(&self.space, m.indices(), *t, Scalar::one()).expect("basis item is valid")
    }

    /// Coordinates of a cochain supported inside the slice.
    pub fn vector_of(&self, c: &Cochain) -> Result<Vec<Rational>, CohomologyError> {
        let mut v = vec![Rational::zero(); self.items.len()];
        for (m, t, coeff) in c.terms() {
            let Some(&i) = self.index.get(&(m.clone(), t)) else {
                return Err(CohomologyError::SliceMismatch(format!(
                    "{} -> {}",
                    m,
                    self.space.name(t)
                )));
            };
            let r = coeff
                .as_rational()
                .ok_or_else(|| CohomologyError::NeedsInstantiation(coeff.to_string()))?;
            v[i] = r;
        }
        Ok(v)
    }

    /// Cochain with the given coordinates.
    pub fn cochain_of(&self, v: &[Rational]) -> Cochain {
        let mut acc = Cochain::zero(&self.space);
        for (i, c) in v.iter().enumerate() {
            if !c.is_zero() {
                let (m, t) = &self.items[i];
                let term = Cochain::term(&self.space, m.indices(), *t, Scalar::rational(c.clone()))
                    .expect("basis item is valid");
                acc = acc.add(&term).expect("same slice parity");
            }
        }
        acc
    }

    /// The part of a cochain lying in this slice.
    pub fn restrict(&self, c: &Cochain) -> Cochain {
        c.filter_terms(|m, t| self.contains_key(m, t))
    }
}

type OpRef<'a> = &'a dyn Fn(&Cochain) -> Result<Cochain, CochainError>;

pub(crate) fn op_outputs(op: OpRef, domain: &SliceBasis) -> Result<Vec<Cochain>, CohomologyError> {
    (0..domain.dim()).map(|i| Ok(op(&domain.unit(i))?)).collect()
}

pub(crate) fn collected_keys(outputs: &[Cochain]) -> BTreeSet<(Monomial, usize)> {
    let mut keys = BTreeSet::new();
    for c in outputs {
        for (m, t, _) in c.terms() {
            keys.insert((m.clone(), t));
        }
    }
    keys
}

/// Matrix of precomputed outputs in codomain coordinates; strict.
pub(crate) fn matrix_into(outputs: &[Cochain], codomain: &SliceBasis) -> Result<QMatrix, CohomologyError> {
    let mut m = QMatrix::zero(codomain.dim(), outputs.len());
    for (j, out) in outputs.iter().enumerate() {
        let v = codomain.vector_of(out)?;
        for (i, x) in v.into_iter().enumerate() {
            m.data[i][j] = x;
        }
    }
    Ok(m)
}

/// Kernel of an operator on a slice, as a subspace in domain coordinates.
pub(crate) fn kernel_of(op: OpRef, domain: &SliceBasis) -> Result<Subspace, CohomologyError> {
    let outputs = op_outputs(op, domain)?;
    let codomain = SliceBasis::from_keys(&domain.space, collected_keys(&outputs));
    let m = matrix_into(&outputs, &codomain)?;
    Ok(Subspace::from_spanning(domain.dim(), m.kernel()))
}

/// Image of an operator inside a fixed codomain slice; errors on leakage.
pub(crate) fn image_into(
    op: OpRef,
    domain: &SliceBasis,
    codomain: &SliceBasis,
) -> Result<Subspace, CohomologyError> {
    let outputs = op_outputs(op, domain)?;
    let vecs: Vec<Vec<Rational>> = outputs
        .iter()
        .map(|c| codomain.vector_of(c))
        .collect::<Result<_, _>>()?;
    Ok(Subspace::from_spanning(codomain.dim(), vecs))
}

/// A cohomology space: cocycles modulo boundaries inside an ambient slice,
/// with deterministic cochain representatives.
#[derive(Debug, Clone)]
pub struct CohomologySpace {
    slice: SliceBasis,
    quotient: Quotient,
    reps: Vec<Cochain>,
}

impl CohomologySpace {
    pub(crate) fn build(
        slice: SliceBasis,
        total: Subspace,
        denom: Subspace,
    ) -> Result<Self, CohomologyError> {
        let quotient = Quotient::new(total, denom).map_err(|bad| {
            CohomologyError::InvalidComplex(format!(
                "boundary {} escapes the cocycle space",
                slice.cochain_of(&bad)
            ))
        })?;
        let reps = quotient.reps.rows.iter().map(|r| slice.cochain_of(r)).collect();
        Ok(CohomologySpace { slice, quotient, reps })
    }

    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    pub fn slice(&self) -> &SliceBasis {
        &self.slice
    }

    pub fn representatives(&self) -> &[Cochain] {
        &self.reps
    }

    /// Dimension of the cocycle space before taking the quotient.
    pub fn cocycle_dim(&self) -> usize {
        self.quotient.total.dim()
    }

    /// Dimension of the boundary space.
    pub fn boundary_dim(&self) -> usize {
        self.quotient.denom.dim()
    }

    /// Class coordinates of a cocycle in the representative basis.
    pub fn class_coords(&self, c: &Cochain) -> Result<Vec<Rational>, CohomologyError> {
        let v = self.slice.vector_of(c)?;
        self.quotient.project(&v).ok_or(CohomologyError::ClassOutsideSpace)
    }

    pub fn class_is_zero(&self, c: &Cochain) -> Result<bool, CohomologyError> {
        Ok(self.class_coords(c)?.iter().all(|x| x.is_zero()))
    }
}

/// H at `middle` for the differential `op`: kernel of `op` on the middle
/// slices modulo the image of the source slices. Sources must map entirely
/// into the middle slices.
pub fn slice_cohomology(
    op: OpRef,
    source: &[SliceSpec],
    middle: &[SliceSpec],
    parity: Option<Parity>,
    space: &Arc<GradedSpace>,
) -> Result<CohomologySpace, CohomologyError> {
    let mid = SliceBasis::new(space, middle, parity)?;
    let total = kernel_of(op, &mid)?;
    let denom = if source.is_empty() {
        Subspace::zero(mid.dim())
    } else {
        let src = SliceBasis::new(space, source, parity)?;
        image_into(op, &src, &mid)?
    };
    CohomologySpace::build(mid, total, denom)
}

/// H_mu at the (k,l) module slice: ker D_mu / im D_mu with D_mu = [mu, .].
pub fn mu_cohomology(mu: &Cochain, k: usize, l: usize) -> Result<CohomologySpace, CohomologyError> {
    let space = mu.space().clone();
    let op = |x: &Cochain| mu.bracket(x);
    let source: Vec<SliceSpec> = if k >= 1 { vec![SliceSpec::MTarget(k - 1, l)] } else { vec![] };
    slice_cohomology(&op, &source, &[SliceSpec::MTarget(k, l)], None, &space)
}

/// Row cohomology of D_{delta+lambda}. On module slices the differential is
/// strict; on complement slices only the complement-target component acts.
pub fn dl_cohomology(dl: &Cochain, spec: SliceSpec) -> Result<CohomologySpace, CohomologyError> {
    let space = dl.space().clone();
    match spec {
        SliceSpec::MTarget(k, l) => {
            let op = |x: &Cochain| dl.bracket(x);
            let source: Vec<SliceSpec> =
                if l >= 1 { vec![SliceSpec::MTarget(k, l - 1)] } else { vec![] };
            slice_cohomology(&op, &source, &[spec], None, &space)
        }
        SliceSpec::WTarget(n) => {
            let module = space.module().cloned().ok_or(SpaceError::NoSplit)?;
            let op = move |x: &Cochain| {
                Ok(dl.bracket(x)?.filter_terms(|_, t| !module.contains(&t)))
            };
            let source: Vec<SliceSpec> =
                if n >= 2 { vec![SliceSpec::WTarget(n - 1)] } else { vec![] };
            slice_cohomology(&op, &source, &[spec], None, &space)
        }
        SliceSpec::Full(_) => Err(CohomologyError::InvalidComplex(
            "row cohomology needs a module or complement slice".into(),
        )),
    }
}

/// H_mu of the subcomplex ker(ad_{dl}) at the (k,l) slice; hosts e.g. the
/// quadratic obstruction class.
pub fn restricted_cohomology(
    mu: &Cochain,
    dl: &Cochain,
    k: usize,
    l: usize,
) -> Result<CohomologySpace, CohomologyError> {
    let space = mu.space().clone();
    let op_dl = |x: &Cochain| dl.bracket(x);
    let op_mu = |x: &Cochain| mu.bracket(x);
    let mid = SliceBasis::new(&space, &[SliceSpec::MTarget(k, l)], None)?;
    let k_mid = kernel_of(&op_dl, &mid)?;
    let z_mu = kernel_of(&op_mu, &mid)?;
    let total = k_mid.intersect(&z_mu);
    let denom = if k >= 1 {
        let src = SliceBasis::new(&space, &[SliceSpec::MTarget(k - 1, l)], None)?;
        let k_src = kernel_of(&op_dl, &src)?;
        let vecs: Vec<Vec<Rational>> = k_src
            .rows
            .iter()
            .map(|r| {
                let x = src.cochain_of(r);
                mid.vector_of(&op_mu(&x)?)
            })
            .collect::<Result<_, CohomologyError>>()?;
        Subspace::from_spanning(mid.dim(), vecs)
    } else {
        Subspace::zero(mid.dim())
    };
    CohomologySpace::build(mid, total, denom)
}

/// How boundaries are sourced in the double complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageMode {
    /// Sources are mu-cocycles whose off-slice bracket components vanish
    /// exactly: the deformation complex with mu and dl frozen.
    Strict,
    /// Sources are arbitrary; off-slice components only need to vanish modulo
    /// mu-boundaries: the classifier complex where restricted equivalences may
    /// move the data within its class.
    Extended,
}

// slices reachable from (k,l)-sources under ad_{dl}, grouped by key
fn slice_of_key(
    space: &GradedSpace,
    m: &Monomial,
    t: usize,
) -> Result<SliceSpec, CohomologyError> {
    if space.module().is_none() {
        return Ok(SliceSpec::Full(m.degree()));
    }
    let (k, l) = space.bidegree(m)?;
    if space.is_module_index(t)? {
        Ok(SliceSpec::MTarget(k, l))
    } else {
        if k != 0 {
            return Err(CohomologyError::InvalidComplex(format!(
                "module factors feed a complement target at {} -> {}",
                m,
                space.name(t)
            )));
        }
        Ok(SliceSpec::WTarget(l))
    }
}

/// The double cohomology H_{mu,dl} at the (k,l) module slice.
///
/// Numerator: mu-cocycles z with [dl, z] a mu-boundary. Denominator:
/// mu-boundaries plus classes [dl, x] for sources x subject to `mode`.
pub fn double_cohomology(
    mu: &Cochain,
    dl: &Cochain,
    k: usize,
    l: usize,
    mode: ImageMode,
) -> Result<CohomologySpace, CohomologyError> {
    let space = mu.space().clone();
    let op_dl = |x: &Cochain| dl.bracket(x);
    let op_mu = |x: &Cochain| mu.bracket(x);
    let mid = SliceBasis::new(&space, &[SliceSpec::MTarget(k, l)], None)?;

    let z_mu = kernel_of(&op_mu, &mid)?;
    let b_mu = if k >= 1 {
        let below = SliceBasis::new(&space, &[SliceSpec::MTarget(k - 1, l)], None)?;
        image_into(&op_mu, &below, &mid)?
    } else {
        Subspace::zero(mid.dim())
    };

    // numerator: z in Z_mu with [dl, z] in B_mu of the (k, l+1) slice
    let up = SliceBasis::new(&space, &[SliceSpec::MTarget(k, l + 1)], None)?;
    let b_mu_up = if k >= 1 {
        let below_up = SliceBasis::new(&space, &[SliceSpec::MTarget(k - 1, l + 1)], None)?;
        image_into(&op_mu, &below_up, &up)?
    } else {
        Subspace::zero(up.dim())
    };
    let dl_outputs = op_outputs(&op_dl, &mid)?;
    let mut constraint = QMatrix::zero(up.dim(), mid.dim());
    for (j, out) in dl_outputs.iter().enumerate() {
        let col = b_mu_up.reduce(&up.vector_of(out)?);
        for i in 0..up.dim() {
            constraint.data[i][j] = col[i].clone();
        }
    }
    let zd = Subspace::from_spanning(mid.dim(), constraint.kernel());
    let total = zd.intersect(&z_mu);

    // image from the slices below under dl
    let mut src_specs: Vec<SliceSpec> = Vec::new();
    if l >= 1 {
        src_specs.push(SliceSpec::MTarget(k, l - 1));
        if k == 1 {
            src_specs.push(SliceSpec::WTarget(l));
        }
    }
    let image = if src_specs.is_empty() {
        Subspace::zero(mid.dim())
    } else {
        let src = SliceBasis::new(&space, &src_specs, None)?;
        let outputs = op_outputs(&op_dl, &src)?;
        bracket_image(&space, mu, &mid, &src, &outputs, mode)?
    };

    let denom = b_mu.sum(&image);
    CohomologySpace::build(mid, total, denom)
}

/// Span of target-slice components of `outputs` over sources satisfying the
/// mode's constraints; vectors land in `mid` coordinates.
fn bracket_image(
    space: &Arc<GradedSpace>,
    mu: &Cochain,
    mid: &SliceBasis,
    src: &SliceBasis,
    outputs: &[Cochain],
    mode: ImageMode,
) -> Result<Subspace, CohomologyError> {
    let op_mu = |x: &Cochain| mu.bracket(x);

    // group off-slice output components by their slice
    let mut off_slices: BTreeSet<SliceSpec> = BTreeSet::new();
    for out in outputs {
        for (m, t, _) in out.terms() {
            if !mid.contains_key(m, t) {
                off_slices.insert(slice_of_key(space, m, t)?);
            }
        }
    }

    let mut blocks: Vec<QMatrix> = Vec::new();

    // off-slice components must vanish (Strict) or be mu-boundaries (Extended)
    for spec in off_slices {
        let basis = SliceBasis::new(space, &[spec], None)?;
        let allow = match (mode, spec) {
            (ImageMode::Extended, SliceSpec::MTarget(ko, lo)) if ko >= 1 => {
                let below = SliceBasis::new(space, &[SliceSpec::MTarget(ko - 1, lo)], None)?;
                image_into(&op_mu, &below, &basis)?
            }
            _ => Subspace::zero(basis.dim()),
        };
        let mut block = QMatrix::zero(basis.dim(), src.dim());
        for j in 0..src.dim() {
            let comp = basis.restrict(&outputs[j]);
            let reduced = allow.reduce(&basis.vector_of(&comp)?);
            for i in 0..basis.dim() {
                block.data[i][j] = reduced[i].clone();
            }
        }
        blocks.push(block);
    }

    // Strict: sources themselves must be mu-cocycles
    if mode == ImageMode::Strict {
        let mu_outputs = op_outputs(&op_mu, src)?;
        let cod = SliceBasis::from_keys(space, collected_keys(&mu_outputs));
        let mut block = QMatrix::zero(cod.dim(), src.dim());
        for j in 0..src.dim() {
            let v = cod.vector_of(&mu_outputs[j])?;
            for i in 0..cod.dim() {
                block.data[i][j] = v[i].clone();
            }
        }
        blocks.push(block);
    }

    // both modes: the target-slice component must be a mu-cocycle
    {
        let mid_comps: Vec<Cochain> = outputs.iter().map(|o| mid.restrict(o)).collect();
        let mu_of: Vec<Cochain> =
            mid_comps.iter().map(|c| op_mu(c)).collect::<Result<_, _>>()?;
        let cod = SliceBasis::from_keys(space, collected_keys(&mu_of));
        let mut block = QMatrix::zero(cod.dim(), src.dim());
        for j in 0..src.dim() {
            let v = cod.vector_of(&mu_of[j])?;
            for i in 0..cod.dim() {
                block.data[i][j] = v[i].clone();
            }
        }
        blocks.push(block);
    }

    let constraints = stack(blocks, src.dim());
    let sources = constraints.kernel();

    let vecs: Vec<Vec<Rational>> = sources
        .iter()
        .map(|x| {
            let mut acc = vec![Rational::zero(); mid.dim()];
            for (j, c) in x.iter().enumerate() {
                if !c.is_zero() {
                    let comp = mid.vector_of(&mid.restrict(&outputs[j]))?;
                    for i in 0..mid.dim() {
                        let v = &acc[i] + &(c * &comp[i]);
                        acc[i] = v;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_, CohomologyError>>()?;
    Ok(Subspace::from_spanning(mid.dim(), vecs))
}

pub(crate) fn stack(blocks: Vec<QMatrix>, cols: usize) -> QMatrix {
    let rows = blocks.iter().map(|b| b.rows).sum();
    let mut out = QMatrix::zero(rows, cols);
    let mut r = 0;
    for b in blocks {
        for row in b.data {
            out.data[r] = row;
            r += 1;
        }
    }
    out
}

// distinct slices carrying the support of a cochain
fn support_slices(space: &Arc<GradedSpace>, c: &Cochain) -> Result<BTreeSet<SliceSpec>, CohomologyError> {
    let mut out = BTreeSet::new();
    for (m, t, _) in c.terms() {
        out.insert(slice_of_key(space, m, t)?);
    }
    Ok(out)
}

/// Result of one application of the third-stage differential.
#[derive(Debug, Clone)]
pub struct TripleDifferential {
    /// The representing cocycle [psi, phi] - [dl, beta].
    pub value: Cochain,
    /// The correction solving [dl, phi] = [mu, beta].
    pub beta: Cochain,
    /// The strict double cohomology the value lands in.
    pub target: CohomologySpace,
    pub class_coords: Vec<Rational>,
    pub class_is_zero: bool,
}

/// Applies the third-stage differential to a double-cohomology cocycle:
/// solves [dl, phi] = [mu, beta], then classifies [psi, phi] - [dl, beta]
/// in the strict double cohomology at `target` = (k, l).
pub fn triple_differential(
    mu: &Cochain,
    dl: &Cochain,
    psi: &Cochain,
    phi: &Cochain,
    target: (usize, usize),
) -> Result<TripleDifferential, CohomologyError> {
    let mu_phi = mu.bracket(phi)?;
    if !mu_phi.is_zero() {
        return Err(CohomologyError::NotACocycle(format!(
            "[mu, phi] = {mu_phi} is nonzero"
        )));
    }
    let rhs = dl.bracket(phi)?;
    let beta = solve_mu_preimage(mu, &rhs)?;
    let value = psi.bracket(phi)?.sub(&dl.bracket(&beta)?)?;
    let h = double_cohomology(mu, dl, target.0, target.1, ImageMode::Strict)?;
    let class_coords = if value.is_zero() {
        vec![Rational::zero(); h.dim()]
    } else {
        h.class_coords(&value)?
    };
    let class_is_zero = class_coords.iter().all(|x| x.is_zero());
    Ok(TripleDifferential { value, beta, target: h, class_coords, class_is_zero })
}

/// Solves [mu, beta] = rhs for beta over the module slices one step below
/// rhs; errors when rhs has unreachable components.
pub fn solve_mu_preimage(mu: &Cochain, rhs: &Cochain) -> Result<Cochain, CohomologyError> {
    let space = mu.space().clone();
    if rhs.is_zero() {
        return Ok(Cochain::zero(&space));
    }
    let mut beta_specs: BTreeSet<SliceSpec> = BTreeSet::new();
    for spec in support_slices(&space, rhs)? {
        if let SliceSpec::MTarget(ko, lo) = spec {
            if ko >= 1 {
                beta_specs.insert(SliceSpec::MTarget(ko - 1, lo));
            }
        }
    }
    let specs: Vec<SliceSpec> = beta_specs.into_iter().collect();
    let dom = SliceBasis::new(&space, &specs, None)?;
    let op_mu = |x: &Cochain| mu.bracket(x);
    let outputs = op_outputs(&op_mu, &dom)?;
    let mut keys = collected_keys(&outputs);
    for (m, t, _) in rhs.terms() {
        keys.insert((m.clone(), t));
    }
    let cod = SliceBasis::from_keys(&space, keys);
    let m = matrix_into(&outputs, &cod)?;
    let b = cod.vector_of(rhs)?;
    let x = m
        .solve(&b)
        .ok_or_else(|| CohomologyError::NotSolvable("[mu, beta] = [dl, phi]".into()))?;
    Ok(dom.cochain_of(&x))
}

/// Third-stage cohomology at the (k,l) slice: kernel of the psi-differential
/// on strict double classes modulo its image from the slices above.
#[derive(Debug, Clone)]
pub struct TripleCohomology {
    pub middle: CohomologySpace,
    quotient: Quotient,
    reps: Vec<Cochain>,
}

impl TripleCohomology {
    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    pub fn representatives(&self) -> &[Cochain] {
        &self.reps
    }

    /// Class coordinates of a cocycle through both quotient stages.
    pub fn class_coords(&self, c: &Cochain) -> Result<Vec<Rational>, CohomologyError> {
        let mid_coords = self.middle.class_coords(c)?;
        self.quotient.project(&mid_coords).ok_or(CohomologyError::ClassOutsideSpace)
    }

    pub fn class_is_zero(&self, c: &Cochain) -> Result<bool, CohomologyError> {
        Ok(self.class_coords(c)?.iter().all(|x| x.is_zero()))
    }
}

/// Computes the triple cohomology H_{mu, dl, psi} at the (k,l) module slice.
pub fn triple_cohomology(
    mu: &Cochain,
    dl: &Cochain,
    psi: &Cochain,
    k: usize,
    l: usize,
) -> Result<TripleCohomology, CohomologyError> {
    let space = mu.space().clone();
    let middle = double_cohomology(mu, dl, k, l, ImageMode::Strict)?;
    let n = middle.dim();

    // kernel of D_psi: classes whose image at (k-1, l+2) vanishes
    let kernel = if k == 0 || n == 0 {
        full_space(n)
    } else {
        let target = (k - 1, l + 2);
        let mut cols: Vec<Vec<Rational>> = Vec::new();
        let mut target_dim = 0;
        for rep in middle.representatives() {
            let d = triple_differential(mu, dl, psi, rep, target)?;
            target_dim = d.class_coords.len();
            cols.push(d.class_coords);
        }
        let mut m = QMatrix::zero(target_dim, n);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..target_dim {
                m.data[i][j] = col[i].clone();
            }
        }
        Subspace::from_spanning(n, m.kernel())
    };

    // image of D_psi from the slices above
    let mut src_specs: Vec<SliceSpec> = Vec::new();
    if l >= 2 {
        src_specs.push(SliceSpec::MTarget(k + 1, l - 2));
        if k == 0 {
            src_specs.push(SliceSpec::WTarget(l - 1));
        }
    }
    let image = if src_specs.is_empty() {
        Subspace::zero(n)
    } else {
        let src = SliceBasis::new(&space, &src_specs, None)?;
        triple_image(mu, dl, psi, &middle, &src)?
    };

    let quotient = Quotient::new(kernel, image).map_err(|_| {
        CohomologyError::InvalidComplex("psi-image escapes the psi-kernel".into())
    })?;
    let reps: Vec<Cochain> = quotient
        .reps
        .rows
        .iter()
        .map(|class_vec| {
            let mut acc = Cochain::zero(&space);
            for (i, c) in class_vec.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc.add(&middle.representatives()[i].scale_rational(c)).expect("same slice");
                }
            }
            acc
        })
        .collect();
    Ok(TripleCohomology { middle, quotient, reps })
}

fn full_space(n: usize) -> Subspace {
    use num_traits::One;
    let rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::one();
            v
        })
        .collect();
    Subspace::from_spanning(n, rows)
}

// span of D_psi classes from sources x with [mu,x]=0 and [dl,x]=[mu,beta]
fn triple_image(
    mu: &Cochain,
    dl: &Cochain,
    psi: &Cochain,
    middle: &CohomologySpace,
    src: &SliceBasis,
) -> Result<Subspace, CohomologyError> {
    let space = mu.space().clone();
    let n = middle.dim();
    let op_mu = |x: &Cochain| mu.bracket(x);
    let op_dl = |x: &Cochain| dl.bracket(x);

    let dl_out = op_outputs(&op_dl, src)?;
    let mut beta_specs: BTreeSet<SliceSpec> = BTreeSet::new();
    for out in &dl_out {
        for spec in support_slices(&space, out)? {
            if let SliceSpec::MTarget(ko, lo) = spec {
                if ko >= 1 {
                    beta_specs.insert(SliceSpec::MTarget(ko - 1, lo));
                }
            }
        }
    }
    let beta_dom = SliceBasis::new(&space, &beta_specs.into_iter().collect::<Vec<_>>(), None)?;
    let mu_out = op_outputs(&op_mu, &beta_dom)?;

    let mut keys = collected_keys(&dl_out);
    keys.extend(collected_keys(&mu_out));
    let cod = SliceBasis::from_keys(&space, keys);

    // [dl, x] - [mu, beta] = 0 over (x, beta)
    let cols = src.dim() + beta_dom.dim();
    let mut eq = QMatrix::zero(cod.dim(), cols);
    for (j, out) in dl_out.iter().enumerate() {
        let v = cod.vector_of(out)?;
        for i in 0..cod.dim() {
            eq.data[i][j] = v[i].clone();
        }
    }
    for (j, out) in mu_out.iter().enumerate() {
        let v = cod.vector_of(out)?;
        for i in 0..cod.dim() {
            eq.data[i][src.dim() + j] = -v[i].clone();
        }
    }

    // [mu, x] = 0
    let mu_src_out = op_outputs(&op_mu, src)?;
    let cod2 = SliceBasis::from_keys(&space, collected_keys(&mu_src_out));
    let mut cocycle = QMatrix::zero(cod2.dim(), cols);
    for (j, out) in mu_src_out.iter().enumerate() {
        let v = cod2.vector_of(out)?;
        for i in 0..cod2.dim() {
            cocycle.data[i][j] = v[i].clone();
        }
    }

    let system = stack(vec![eq, cocycle], cols);
    let solutions = system.kernel();

    let mut class_vecs: Vec<Vec<Rational>> = Vec::new();
    for sol in solutions {
        let x = src.cochain_of(&sol[..src.dim()]);
        let beta = beta_dom.cochain_of(&sol[src.dim()..]);
        let value = psi.bracket(&x)?.sub(&dl.bracket(&beta)?)?;
        let coords = if value.is_zero() {
            vec![Rational::zero(); n]
        } else {
            middle.class_coords(&value)?
        };
        class_vecs.push(coords);
    }
    Ok(Subspace::from_spanning(n, class_vecs))
}

/// Cohomology of a restricted total complex at its middle level: deformation
/// directions in `domain` killed by [d, .], modulo gauges from `gauge` whose
/// brackets avoid the `frozen` slices.
pub fn relative_cohomology(
    d: &Cochain,
    domain: &[SliceSpec],
    gauge: &[SliceSpec],
    frozen: &[SliceSpec],
    parity: Option<Parity>,
) -> Result<CohomologySpace, CohomologyError> {
    let space = d.space().clone();
    let op = |x: &Cochain| d.bracket(x);
    let dom = SliceBasis::new(&space, domain, parity)?;
    let total = kernel_of(&op, &dom)?;

    let gauge_basis = SliceBasis::new(&space, gauge, parity)?;
    let frozen_basis = SliceBasis::new(&space, frozen, parity)?;
    let outputs = op_outputs(&op, &gauge_basis)?;
    let mut block = QMatrix::zero(frozen_basis.dim(), gauge_basis.dim());
    for (j, out) in outputs.iter().enumerate() {
        let v = frozen_basis.vector_of(&frozen_basis.restrict(out))?;
        for i in 0..frozen_basis.dim() {
            block.data[i][j] = v[i].clone();
        }
    }
    let admissible = block.kernel();

    let vecs: Vec<Vec<Rational>> = admissible
        .iter()
        .map(|y| {
            let g = gauge_basis.cochain_of(y);
            let out = op(&g)?;
            let kept = out.filter_terms(|m, t| !frozen_basis.contains_key(m, t));
            dom.vector_of(&kept)
        })
        .collect::<Result<_, CohomologyError>>()?;
    let denom = Subspace::from_spanning(dom.dim(), vecs);
    CohomologySpace::build(dom, total, denom)
}
