//! Extension data: component validation, residual checks, equivalences,
//! and conjugation by invertible maps.

use std::sync::Arc;

use thiserror::Error;

use crate::cochain::{pullback, pullback_cleared, Cochain, CochainError, LinearMap};
use crate::gspace::{GradedSpace, Parity};
use crate::scalar::{Rational, Scalar};

/// Errors from assembling or transforming extension data.
#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error(transparent)]
    Cochain(#[from] CochainError),
    #[error(transparent)]
    Space(#[from] crate::gspace::SpaceError),
    #[error(transparent)]
    Scalar(#[from] crate::scalar::ScalarError),
    #[error(transparent)]
    Cohomology(#[from] crate::cohomology::CohomologyError),
    #[error("space has no module split")]
    NoSplit,
    #[error("component is not quadratic: found degree {0}")]
    NotQuadratic(usize),
    #[error("term [{monomial} -> {target}] does not fit the {expected} component")]
    WrongSlice {
        monomial: String,
        target: String,
        expected: &'static str,
    },
    #[error("module factors feed a complement target: term [{monomial} -> {target}]")]
    NotAnIdeal { monomial: String, target: String },
    #[error("combined coderivation must be odd")]
    NotOdd,
    #[error("correction must be an even degree-1 map from the complement into the module")]
    BadCorrection,
    #[error("conjugating map must preserve the module")]
    NotModulePreserving,
}

/// Quadratic coderivation split along the module: structure map on the
/// complement, bracket on the module, action, and twisting cocycle.
#[derive(Debug, Clone)]
pub struct ExtensionData {
    space: Arc<GradedSpace>,
    delta: Cochain,
    mu: Cochain,
    lambda: Cochain,
    psi: Cochain,
}

/// Residuals whose joint vanishing makes the data an extension.
#[derive(Debug, Clone)]
pub struct ExtensionReport {
    /// delta circle delta: the structure map squares to zero.
    pub delta_obstruction: Cochain,
    /// mu circle mu: the module bracket squares to zero.
    pub mu_obstruction: Cochain,
    /// [delta, lambda] + 1/2 [lambda, lambda] + [mu, psi]: the action is flat
    /// up to the inner correction by the twist.
    pub flatness_residual: Cochain,
    /// [mu, lambda]: the action is by derivations of the module bracket.
    pub equivariance_residual: Cochain,
    /// [delta + lambda, psi]: the twist is a cocycle for the twisted
    /// differential.
    pub cocycle_residual: Cochain,
}

impl ExtensionReport {
    /// True when every residual vanishes identically.
    pub fn holds(&self) -> bool {
        self.delta_obstruction.is_zero()
            && self.mu_obstruction.is_zero()
            && self.flatness_residual.is_zero()
            && self.equivariance_residual.is_zero()
            && self.cocycle_residual.is_zero()
    }

    /// Labeled residuals in a fixed order, for reporting.
    pub fn items(&self) -> [(&'static str, &Cochain); 5] {
        [
            ("delta_obstruction", &self.delta_obstruction),
            ("mu_obstruction", &self.mu_obstruction),
            ("flatness_residual", &self.flatness_residual),
            ("equivariance_residual", &self.equivariance_residual),
            ("cocycle_residual", &self.cocycle_residual),
        ]
    }
}

/// Outcome of looking for a correction that clears the twist.
#[derive(Debug, Clone)]
pub enum SplitAttempt {
    /// The correction clears the twist; the extension splits.
    Split(Cochain),
    /// No correction clears the twist linearly.
    NoLinearSolution,
    /// A linear candidate exists but fails the quadratic check.
    Inconclusive(Cochain),
}

fn expect_quadratic(c: &Cochain) -> Result<(), ExtensionError> {
    if c.is_zero() {
        return Ok(());
    }
    let degrees = c.degrees();
    if degrees.len() != 1 || !degrees.contains(&2) {
        return Err(ExtensionError::NotQuadratic(
            degrees.into_iter().next().unwrap_or(0),
        ));
    }
    Ok(())
}

fn check_slice(
    space: &GradedSpace,
    c: &Cochain,
    factors: usize,
    module_target: bool,
    expected: &'static str,
) -> Result<(), ExtensionError> {
    for (m, t, _) in c.terms() {
        let (k, _) = space.bidegree(m)?;
        let target_in_module = space.is_module_index(t)?;
        if k != factors || target_in_module != module_target {
            return Err(ExtensionError::WrongSlice {
                monomial: m.to_string(),
                target: space.name(t).to_string(),
                expected,
            });
        }
    }
    Ok(())
}

impl ExtensionData {
    /// Validates the four components against their slices.
    pub fn new(
        space: &Arc<GradedSpace>,
        delta: Cochain,
        mu: Cochain,
        lambda: Cochain,
        psi: Cochain,
    ) -> Result<Self, ExtensionError> {
        if space.module().is_none() {
            return Err(ExtensionError::NoSplit);
        }
        for c in [&delta, &mu, &lambda, &psi] {
            expect_quadratic(c)?;
        }
        check_slice(space, &delta, 0, false, "structure")?;
        check_slice(space, &mu, 2, true, "module bracket")?;
        check_slice(space, &lambda, 1, true, "action")?;
        check_slice(space, &psi, 0, true, "twist")?;
        let data = ExtensionData {
            space: space.clone(),
            delta,
            mu,
            lambda,
            psi,
        };
        let combined = data.combined()?;
        if !combined.is_zero() && combined.parity() != Some(Parity::Odd) {
            return Err(ExtensionError::NotOdd);
        }
        Ok(data)
    }

    /// Splits a quadratic coderivation along the module; a complement target
    /// fed by module factors is reported as the ideal violation it is.
    pub fn split(space: &Arc<GradedSpace>, d: &Cochain) -> Result<Self, ExtensionError> {
        if space.module().is_none() {
            return Err(ExtensionError::NoSplit);
        }
        expect_quadratic(d)?;
        let mut delta = Cochain::zero(space);
        let mut mu = Cochain::zero(space);
        let mut lambda = Cochain::zero(space);
        let mut psi = Cochain::zero(space);
        for (m, t, c) in d.terms() {
            let (k, _) = space.bidegree(m)?;
            let piece = Cochain::term(space, m.indices(), t, c.clone())?;
            let bucket = if space.is_module_index(t)? {
                match k {
                    0 => &mut psi,
                    1 => &mut lambda,
                    _ => &mut mu,
                }
            } else {
                if k > 0 {
                    return Err(ExtensionError::NotAnIdeal {
                        monomial: m.to_string(),
                        target: space.name(t).to_string(),
                    });
                }
                &mut delta
            };
            *bucket = bucket.add(&piece)?;
        }
        ExtensionData::new(space, delta, mu, lambda, psi)
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn delta(&self) -> &Cochain {
        &self.delta
    }

    pub fn mu(&self) -> &Cochain {
        &self.mu
    }

    pub fn lambda(&self) -> &Cochain {
        &self.lambda
    }

    pub fn psi(&self) -> &Cochain {
        &self.psi
    }

    /// The total coderivation delta + mu + lambda + psi.
    pub fn combined(&self) -> Result<Cochain, ExtensionError> {
        Ok(self
            .delta
            .add(&self.mu)?
            .add(&self.lambda)?
            .add(&self.psi)?)
    }

    /// The twisted differential delta + lambda.
    pub fn twisted(&self) -> Result<Cochain, ExtensionError> {
        Ok(self.delta.add(&self.lambda)?)
    }

    /// Computes all five residuals.
    pub fn verify(&self) -> Result<ExtensionReport, ExtensionError> {
        let half = Rational::new(1.into(), 2.into());
        let dl = self.twisted()?;
        let flatness = self
            .delta
            .bracket(&self.lambda)?
            .add(&self.lambda.bracket(&self.lambda)?.scale_rational(&half))?
            .add(&self.mu.bracket(&self.psi)?)?;
        Ok(ExtensionReport {
            delta_obstruction: self.delta.circle(&self.delta)?,
            mu_obstruction: self.mu.circle(&self.mu)?,
            flatness_residual: flatness,
            equivariance_residual: self.mu.bracket(&self.lambda)?,
            cocycle_residual: dl.bracket(&self.psi)?,
        })
    }

    /// True when the data defines an extension.
    pub fn is_extension(&self) -> Result<bool, ExtensionError> {
        Ok(self.verify()?.holds())
    }

    fn expect_correction(&self, beta: &Cochain) -> Result<(), ExtensionError> {
        if beta.is_zero() {
            return Ok(());
        }
        if beta.parity() == Some(Parity::Odd) {
            return Err(ExtensionError::BadCorrection);
        }
        for (m, t, _) in beta.terms() {
            let ok = m.degree() == 1
                && !self.space.is_module_index(m.indices()[0])?
                && self.space.is_module_index(t)?;
            if !ok {
                return Err(ExtensionError::BadCorrection);
            }
        }
        Ok(())
    }

    /// Acts by the equivalence 1 + beta (so that the closed formulas agree
    /// with conjugating the total coderivation): the structure map and module
    /// bracket are fixed, the action and twist change by
    ///   lambda' = lambda + [mu, beta]
    ///   psi'    = psi + [delta + lambda, beta] + 1/2 [[mu, beta], beta]
    pub fn apply_correction(&self, beta: &Cochain) -> Result<ExtensionData, ExtensionError> {
        self.expect_correction(beta)?;
        let half = Rational::new(1.into(), 2.into());
        let mu_beta = self.mu.bracket(beta)?;
        let lambda = self.lambda.add(&mu_beta)?;
        let psi = self
            .psi
            .add(&self.twisted()?.bracket(beta)?)?
            .add(&mu_beta.bracket(beta)?.scale_rational(&half))?;
        ExtensionData::new(&self.space, self.delta.clone(), self.mu.clone(), lambda, psi)
    }

    /// Conjugates the total coderivation by an invertible even map and splits
    /// the result; the map must send the module into itself.
    pub fn pullback_by(&self, g: &LinearMap) -> Result<ExtensionData, ExtensionError> {
        self.check_module_preserving(g)?;
        let d = pullback(&self.combined()?, g)?;
        ExtensionData::split(&self.space, &d)
    }

    /// Denominator-free conjugation: returns the split of adj(g) . d . S(g)
    /// together with the factored determinant.
    pub fn pullback_cleared_by(
        &self,
        g: &LinearMap,
    ) -> Result<(ExtensionData, Scalar), ExtensionError> {
        self.check_module_preserving(g)?;
        let (d, det) = pullback_cleared(&self.combined()?, g)?;
        Ok((ExtensionData::split(&self.space, &d)?, det))
    }

    fn check_module_preserving(&self, g: &LinearMap) -> Result<(), ExtensionError> {
        let entries = g.entries();
        for (i, row) in entries.iter().enumerate() {
            if self.space.is_module_index(i)? {
                continue;
            }
            for (j, e) in row.iter().enumerate() {
                if self.space.is_module_index(j)? && !e.is_zero() {
                    return Err(ExtensionError::NotModulePreserving);
                }
            }
        }
        Ok(())
    }

    /// Factors a module-preserving map as (block diagonal) following
    /// (identity plus shear); the shear is returned as a correction cochain.
    pub fn factor_shear(&self, g: &LinearMap) -> Result<(LinearMap, Cochain), ExtensionError> {
        self.check_module_preserving(g)?;
        let entries = g.entries();
        let dim = self.space.dim();
        let mut block = vec![vec![Scalar::zero(); dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                if self.space.is_module_index(i)? == self.space.is_module_index(j)? {
                    block[i][j] = entries[i][j].clone();
                }
            }
        }
        let h = LinearMap::from_entries(&self.space, block)?;
        // beta = h^{-1} restricted to the module, applied to the mixed part
        let h_inv = h.inverse_exact()?;
        let mut beta_terms: Vec<(Vec<usize>, usize, Scalar)> = Vec::new();
        for j in 0..dim {
            if self.space.is_module_index(j)? {
                continue;
            }
            for i in 0..dim {
                if !self.space.is_module_index(i)? || entries[i][j].is_zero() {
                    continue;
                }
                for (t, c) in h_inv.apply_index(i) {
                    let coeff = c.checked_mul(&entries[i][j])?;
                    if !coeff.is_zero() {
                        beta_terms.push((vec![j], t, coeff));
                    }
                }
            }
        }
        let beta = Cochain::from_terms(&self.space, beta_terms)?;
        Ok((h, beta))
    }

    /// Conjugates by a module-preserving map through its factorization:
    /// pull back by the block part, then apply the shear as a correction.
    pub fn pullback_factored(&self, g: &LinearMap) -> Result<ExtensionData, ExtensionError> {
        let (h, beta) = self.factor_shear(g)?;
        self.pullback_by(&h)?.apply_correction(&beta)
    }

    /// Searches for a correction clearing the twist: solves the linear part
    /// of psi = [delta + lambda, beta] - 1/2 [[mu, beta], beta] over the
    /// correction slice, then verifies the candidate exactly.
    pub fn split_correction(&self) -> Result<SplitAttempt, ExtensionError> {
        use crate::cohomology::{collected_keys, matrix_into, op_outputs, SliceBasis, SliceSpec};
        if self.psi.is_zero() {
            return Ok(SplitAttempt::Split(Cochain::zero(&self.space)));
        }
        let dl = self.twisted()?;
        let dom = SliceBasis::new(&self.space, &[SliceSpec::MTarget(0, 1)], None)?;
        let op = |x: &Cochain| dl.bracket(x);
        let outputs = op_outputs(&op, &dom)?;
        let mut keys = collected_keys(&outputs);
        for (m, t, _) in self.psi.terms() {
            keys.insert((m.clone(), t));
        }
        let cod = SliceBasis::from_keys(&self.space, keys);
        let matrix = matrix_into(&outputs, &cod)?;
        let rhs = cod.vector_of(&self.psi.neg())?;
        let Some(x) = matrix.solve(&rhs) else {
            return Ok(SplitAttempt::NoLinearSolution);
        };
        let beta = dom.cochain_of(&x);
        let candidate = self.apply_correction(&beta)?;
        if candidate.psi().is_zero() {
            Ok(SplitAttempt::Split(beta))
        } else {
            Ok(SplitAttempt::Inconclusive(beta))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn five_dim() -> Arc<GradedSpace> {
        Arc::new(GradedSpace::purely_odd_split(3, 5))
    }

    // mu = (v2 v3 -> v1) + (v2 v3 -> v2), delta = (v4 v5 -> v4),
    // lambda = (v1 v5 -> v1) + (v2 v5 -> v2) + a16 (v3 v4 -> v1) + a19 (v3 v5 -> v1)
    fn five_dim_extension(a16: i64, a19: i64) -> ExtensionData {
        let space = five_dim();
        let mu = Cochain::from_terms(
            &space,
            vec![(vec![1, 2], 0, q(1)), (vec![1, 2], 1, q(1))],
        )
        .unwrap();
        let delta = Cochain::term(&space, &[3, 4], 3, q(1)).unwrap();
        let lambda = Cochain::from_terms(
            &space,
            vec![
                (vec![0, 4], 0, q(1)),
                (vec![1, 4], 1, q(1)),
                (vec![2, 3], 0, q(a16)),
                (vec![2, 4], 0, q(a19)),
            ],
        )
        .unwrap();
        ExtensionData::new(&space, delta, mu, lambda, Cochain::zero(&space)).unwrap()
    }

    #[test]
    fn five_dim_data_verifies() {
        let ext = five_dim_extension(1, 2);
        let report = ext.verify().unwrap();
        assert!(report.holds(), "residuals: {:?}", report.items());
    }

    #[test]
    fn residuals_reassemble_the_square() {
        let ext = five_dim_extension(3, -1);
        let d = ext.combined().unwrap();
        let direct = d.circle(&d).unwrap();
        let report = ext.verify().unwrap();
        let reassembled = report
            .delta_obstruction
            .add(&report.mu_obstruction)
            .unwrap()
            .add(&report.flatness_residual)
            .unwrap()
            .add(&report.equivariance_residual)
            .unwrap()
            .add(&report.cocycle_residual)
            .unwrap();
        assert_eq!(direct, reassembled);
    }

    #[test]
    fn broken_equivariance_is_witnessed() {
        let space = five_dim();
        let ext = five_dim_extension(0, 0);
        // adding (v3 v4 -> v3) makes the action fail equivariance
        let bad_lambda = ext
            .lambda()
            .add(&Cochain::term(&space, &[2, 3], 2, q(1)).unwrap())
            .unwrap();
        let bad = ExtensionData::new(
            &space,
            ext.delta().clone(),
            ext.mu().clone(),
            bad_lambda,
            Cochain::zero(&space),
        )
        .unwrap();
        let report = bad.verify().unwrap();
        assert!(!report.holds());
        assert!(!report.equivariance_residual.is_zero());
    }

    #[test]
    fn split_rejects_ideal_violations() {
        let space = five_dim();
        // (v1 v4 -> v5) sends a module factor to the complement
        let d = Cochain::term(&space, &[0, 3], 4, q(1)).unwrap();
        assert!(matches!(
            ExtensionData::split(&space, &d),
            Err(ExtensionError::NotAnIdeal { .. })
        ));
    }

    #[test]
    fn correction_matches_conjugation() {
        let space = five_dim();
        let ext = five_dim_extension(1, 0);
        let beta = Cochain::from_terms(
            &space,
            vec![(vec![3], 0, q(2)), (vec![4], 1, q(-1)), (vec![4], 2, q(3))],
        )
        .unwrap();
        let by_formula = ext.apply_correction(&beta).unwrap();
        let g = LinearMap::one_plus(&beta).unwrap();
        let by_conjugation = ext.pullback_by(&g).unwrap();
        assert_eq!(
            by_formula.combined().unwrap(),
            by_conjugation.combined().unwrap()
        );
    }

    #[test]
    fn quadratic_correction_term_pinned() {
        let space = five_dim();
        let ext = five_dim_extension(0, 0);
        // beta chosen so [[mu, beta], beta] is nonzero
        let beta = Cochain::from_terms(&space, vec![(vec![3], 1, q(1)), (vec![4], 2, q(1))])
            .unwrap();
        let mu_beta = ext.mu().bracket(&beta).unwrap();
        assert!(!mu_beta.bracket(&beta).unwrap().is_zero());
        let by_formula = ext.apply_correction(&beta).unwrap();
        let g = LinearMap::one_plus(&beta).unwrap();
        let by_conjugation = ext.pullback_by(&g).unwrap();
        assert_eq!(
            by_formula.combined().unwrap(),
            by_conjugation.combined().unwrap()
        );
    }

    #[test]
    fn factored_pullback_matches_direct() {
        let space = five_dim();
        let ext = five_dim_extension(2, 1);
        // block part scales v1 and v4, shear part sends v4, v5 into the module
        let mut entries = vec![vec![Scalar::zero(); 5]; 5];
        for i in 0..5 {
            entries[i][i] = q(1);
        }
        entries[0][0] = q(2);
        entries[3][3] = q(3);
        entries[0][3] = q(5);
        entries[1][4] = q(-2);
        entries[2][4] = q(1);
        let g = LinearMap::from_entries(&space, entries).unwrap();
        let direct = ext.pullback_by(&g).unwrap();
        let factored = ext.pullback_factored(&g).unwrap();
        assert_eq!(direct.combined().unwrap(), factored.combined().unwrap());
    }

    #[test]
    fn module_mixing_into_complement_is_rejected() {
        let space = five_dim();
        let ext = five_dim_extension(0, 0);
        let mut entries = vec![vec![Scalar::zero(); 5]; 5];
        for i in 0..5 {
            entries[i][i] = q(1);
        }
        // v1 (module) leaks into v4 (complement)
        entries[3][0] = q(1);
        let g = LinearMap::from_entries(&space, entries).unwrap();
        assert!(matches!(
            ext.pullback_by(&g),
            Err(ExtensionError::NotModulePreserving)
        ));
    }

    #[test]
    fn splitting_twist_found_and_cleared() {
        let space = five_dim();
        let ext = five_dim_extension(1, 0);
        // manufacture a split extension in disguise
        let beta = Cochain::from_terms(&space, vec![(vec![3], 1, q(1)), (vec![4], 0, q(2))])
            .unwrap();
        let disguised = ext.apply_correction(&beta).unwrap();
        match disguised.split_correction().unwrap() {
            SplitAttempt::Split(found) => {
                let back = disguised.apply_correction(&found).unwrap();
                assert!(back.psi().is_zero());
            }
            other => panic!("expected a splitting correction, got {other:?}"),
        }
    }
}
