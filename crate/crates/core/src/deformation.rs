//! First-order deformations: residual checks for a varying action and twist,
//! completion of an action direction to a deformation, and the class spaces
//! counting inequivalent deformations of extensions and module structures.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::cochain::{Cochain, CochainError};
use crate::cohomology::linalg::{QMatrix, Subspace};
use crate::cohomology::{
    collected_keys, double_cohomology, image_into, kernel_of, matrix_into, mu_cohomology,
    op_outputs, restricted_cohomology, stack, triple_cohomology, triple_differential,
    CohomologyError, CohomologySpace, ImageMode, SliceBasis, SliceSpec, TripleCohomology,
};
use crate::extension::{ExtensionData, ExtensionError};
use crate::gspace::{GradedSpace, Parity};
use crate::scalar::Rational;

/// Errors from validating or classifying deformation data.
#[derive(Debug, Error)]
pub enum DeformationError {
    #[error(transparent)]
    Cochain(#[from] CochainError),
    #[error(transparent)]
    Space(#[from] crate::gspace::SpaceError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error("term [{monomial} -> {target}] does not fit the {role} slice")]
    WrongSlice {
        monomial: String,
        target: String,
        role: &'static str,
    },
    #[error("base data is not an extension: {0} is nonzero")]
    NotAnExtension(&'static str),
    #[error("{0} is not a bracket cocycle")]
    NotMuCocycle(&'static str),
    #[error("{0} is not a codifferential")]
    NotCodifferential(&'static str),
    #[error("classifier needs a vanishing twist")]
    TwistPresent,
    #[error("{0} must be odd")]
    NotOdd(&'static str),
    #[error("{0} must be even")]
    NotEven(&'static str),
    #[error("gauge generator moves the frozen {0}")]
    GaugeMoves(&'static str),
}

// every term must carry k module and l complement factors on the stated side
fn expect_slice(
    space: &GradedSpace,
    c: &Cochain,
    k: usize,
    l: usize,
    module_target: bool,
    role: &'static str,
) -> Result<(), DeformationError> {
    for (m, t, _) in c.terms() {
        let (km, lm) = space.bidegree(m)?;
        if km != k || lm != l || space.is_module_index(t)? != module_target {
            return Err(DeformationError::WrongSlice {
                monomial: m.to_string(),
                target: space.name(t).to_string(),
                role,
            });
        }
    }
    Ok(())
}

fn expect_odd(c: &Cochain, role: &'static str) -> Result<(), DeformationError> {
    if !c.is_zero() && c.parity() != Some(Parity::Odd) {
        return Err(DeformationError::NotOdd(role));
    }
    Ok(())
}

fn expect_even(c: &Cochain, role: &'static str) -> Result<(), DeformationError> {
    if !c.is_zero() && c.parity() != Some(Parity::Even) {
        return Err(DeformationError::NotEven(role));
    }
    Ok(())
}

fn ensure_extension(ext: &ExtensionData) -> Result<(), DeformationError> {
    let report = ext.verify()?;
    for (name, residual) in report.items() {
        if !residual.is_zero() {
            return Err(DeformationError::NotAnExtension(name));
        }
    }
    Ok(())
}

fn expect_codifferential(c: &Cochain, role: &'static str) -> Result<(), DeformationError> {
    if !c.is_codifferential()? {
        return Err(DeformationError::NotCodifferential(role));
    }
    Ok(())
}

// rational combination of representatives
fn combine(
    space: &Arc<GradedSpace>,
    reps: &[Cochain],
    weights: &[Rational],
) -> Result<Cochain, DeformationError> {
    let mut acc = Cochain::zero(space);
    for (rep, w) in reps.iter().zip(weights) {
        if !w.is_zero() {
            acc = acc.add(&rep.scale_rational(w))?;
        }
    }
    Ok(acc)
}

// one x in the slice with [a, x] = rhs and [b, x] = 0
fn solve_bracket_pair(
    space: &Arc<GradedSpace>,
    a: &Cochain,
    rhs: &Cochain,
    b: &Cochain,
    spec: SliceSpec,
    stage: &str,
) -> Result<Cochain, DeformationError> {
    let dom = SliceBasis::new(space, &[spec], None)?;
    let op_a = |x: &Cochain| a.bracket(x);
    let op_b = |x: &Cochain| b.bracket(x);
    let a_out = op_outputs(&op_a, &dom)?;
    let b_out = op_outputs(&op_b, &dom)?;
    let mut keys = collected_keys(&a_out);
    for (m, t, _) in rhs.terms() {
        keys.insert((m.clone(), t));
    }
    let cod_a = SliceBasis::from_keys(space, keys);
    let cod_b = SliceBasis::from_keys(space, collected_keys(&b_out));
    let mut target = cod_a.vector_of(rhs)?;
    target.extend(std::iter::repeat(Rational::zero()).take(cod_b.dim()));
    let system = stack(
        vec![matrix_into(&a_out, &cod_a)?, matrix_into(&b_out, &cod_b)?],
        dom.dim(),
    );
    let x = system
        .solve(&target)
        .ok_or_else(|| CohomologyError::NotSolvable(stage.to_string()))?;
    Ok(dom.cochain_of(&x))
}

/// Residuals of the four first-order conditions on a direction (eta, zeta)
/// deforming the action and twist of an extension.
#[derive(Debug, Clone)]
pub struct DeformationCheck {
    /// [delta+lambda, eta] + [mu, zeta].
    pub flatness_residual: Cochain,
    /// [delta+lambda, zeta] + [psi, eta].
    pub cocycle_residual: Cochain,
    /// [mu, eta].
    pub equivariance_residual: Cochain,
    /// [psi, zeta]; vanishes identically on the twist slice.
    pub twist_residual: Cochain,
}

impl DeformationCheck {
    /// True when every residual vanishes.
    pub fn holds(&self) -> bool {
        self.items().iter().all(|(_, c)| c.is_zero())
    }

    /// Labeled residuals in a fixed order.
    pub fn items(&self) -> [(&'static str, &Cochain); 4] {
        [
            ("flatness_residual", &self.flatness_residual),
            ("cocycle_residual", &self.cocycle_residual),
            ("equivariance_residual", &self.equivariance_residual),
            ("twist_residual", &self.twist_residual),
        ]
    }
}

/// Computes the first-order residuals for d + t(eta + zeta) with t^2 = 0.
pub fn check_infinitesimal_deformation(
    ext: &ExtensionData,
    eta: &Cochain,
    zeta: &Cochain,
) -> Result<DeformationCheck, DeformationError> {
    let space = ext.space();
    expect_slice(space, eta, 1, 1, true, "action direction")?;
    expect_slice(space, zeta, 0, 2, true, "twist direction")?;
    expect_odd(eta, "action direction")?;
    expect_odd(zeta, "twist direction")?;
    let dl = ext.twisted()?;
    Ok(DeformationCheck {
        flatness_residual: dl.bracket(eta)?.add(&ext.mu().bracket(zeta)?)?,
        cocycle_residual: dl.bracket(zeta)?.add(&ext.psi().bracket(eta)?)?,
        equivariance_residual: ext.mu().bracket(eta)?,
        twist_residual: ext.psi().bracket(zeta)?,
    })
}

/// Stage of the three-step membership test that obstructed the completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaStage {
    /// [mu, eta] is nonzero.
    MuCocycle,
    /// [delta+lambda, eta] has no bracket preimage.
    MuPreimage,
    /// The twist differential of the class is nonzero.
    TwistClass,
}

impl fmt::Display for ZetaStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ZetaStage::MuCocycle => "mu-cocycle",
            ZetaStage::MuPreimage => "mu-preimage",
            ZetaStage::TwistClass => "twist-class",
        };
        f.write_str(name)
    }
}

/// Outcome of completing an action direction to a deformation.
#[derive(Debug, Clone)]
pub enum ZetaOutcome {
    /// A twist direction making (eta, zeta) a deformation.
    Zeta(Cochain),
    /// The failing stage with its residual and class coordinates.
    Obstructed {
        stage: ZetaStage,
        residual: Cochain,
        class_coords: Vec<Rational>,
    },
}

/// Completes an action direction to a deformation (eta, zeta) when the
/// three-step membership test passes, reporting the failing stage otherwise.
pub fn construct_zeta(
    ext: &ExtensionData,
    eta: &Cochain,
) -> Result<ZetaOutcome, DeformationError> {
    let space = ext.space();
    ensure_extension(ext)?;
    expect_slice(space, eta, 1, 1, true, "action direction")?;
    expect_odd(eta, "action direction")?;
    let mu = ext.mu();
    let dl = ext.twisted()?;
    let equivariance = mu.bracket(eta)?;
    if !equivariance.is_zero() {
        return Ok(ZetaOutcome::Obstructed {
            stage: ZetaStage::MuCocycle,
            residual: equivariance,
            class_coords: Vec::new(),
        });
    }
    let step = match triple_differential(mu, &dl, ext.psi(), eta, (0, 3)) {
        Ok(step) => step,
        Err(CohomologyError::NotSolvable(_)) => {
            return Ok(ZetaOutcome::Obstructed {
                stage: ZetaStage::MuPreimage,
                residual: dl.bracket(eta)?,
                class_coords: Vec::new(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    if !step.class_is_zero {
        return Ok(ZetaOutcome::Obstructed {
            stage: ZetaStage::TwistClass,
            residual: step.value,
            class_coords: step.class_coords,
        });
    }
    let alpha = solve_bracket_pair(
        space,
        &dl,
        &step.value,
        mu,
        SliceSpec::MTarget(0, 2),
        "twist completion",
    )?;
    let zeta = step.beta.add(&alpha)?.neg();
    if !check_infinitesimal_deformation(ext, eta, &zeta)?.holds() {
        return Err(CohomologyError::InvalidComplex(
            "constructed zeta fails the residual check".into(),
        )
        .into());
    }
    Ok(ZetaOutcome::Zeta(zeta))
}

/// A named space of classes with cochain representatives.
#[derive(Debug, Clone)]
pub struct ClassSpace {
    /// What the classes parametrize.
    pub name: &'static str,
    pub dim: usize,
    pub representatives: Vec<Cochain>,
}

impl ClassSpace {
    fn from_cohomology(name: &'static str, h: &CohomologySpace) -> Self {
        ClassSpace {
            name,
            dim: h.dim(),
            representatives: h.representatives().to_vec(),
        }
    }

    fn from_triple(name: &'static str, h: &TripleCohomology) -> Self {
        ClassSpace {
            name,
            dim: h.dim(),
            representatives: h.representatives().to_vec(),
        }
    }
}

/// Classifier output: solvability, obstruction residuals, class spaces,
/// class coordinates of the given data, and witness cochains.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    /// False when an obstruction class is nonzero.
    pub solvable: bool,
    pub obstructions: Vec<(&'static str, Cochain)>,
    pub spaces: Vec<ClassSpace>,
    pub classes: Vec<(&'static str, Vec<Rational>)>,
    pub witnesses: Vec<(&'static str, Cochain)>,
}

impl ClassificationReport {
    /// Total dimension over the reported class spaces.
    pub fn deformation_parameters(&self) -> usize {
        self.spaces.iter().map(|s| s.dim).sum()
    }

    /// The named class space, when reported.
    pub fn space(&self, name: &str) -> Option<&ClassSpace> {
        self.spaces.iter().find(|s| s.name == name)
    }
}

/// Counts the inequivalent first-order deformations of an extension that
/// vary the action and twist: eta classes on the action slice and twist
/// classes on the twist slice, both in the triple cohomology.
pub fn classify_deformations(
    ext: &ExtensionData,
) -> Result<ClassificationReport, DeformationError> {
    ensure_extension(ext)?;
    let dl = ext.twisted()?;
    let action = triple_cohomology(ext.mu(), &dl, ext.psi(), 1, 1)?;
    let twist = triple_cohomology(ext.mu(), &dl, ext.psi(), 0, 2)?;
    Ok(ClassificationReport {
        solvable: true,
        obstructions: Vec::new(),
        spaces: vec![
            ClassSpace::from_triple("action classes", &action),
            ClassSpace::from_triple("twist classes", &twist),
        ],
        classes: Vec::new(),
        witnesses: Vec::new(),
    })
}

/// Classifies the infinitesimal extensions of a structure map by a bracket:
/// action classes whose structure shift dies in the restricted cohomology,
/// together with the twist classes the split case admits.
pub fn classify_infinitesimal_extensions(
    delta: &Cochain,
    mu: &Cochain,
) -> Result<ClassificationReport, DeformationError> {
    let space = delta.space().clone();
    expect_slice(&space, delta, 0, 2, false, "structure map")?;
    expect_slice(&space, mu, 2, 0, true, "bracket")?;
    expect_codifferential(delta, "structure map")?;
    expect_codifferential(mu, "bracket")?;

    let h11 = mu_cohomology(mu, 1, 1)?;
    let host = restricted_cohomology(mu, delta, 1, 2)?;
    let mut condition = QMatrix::zero(host.dim(), h11.dim());
    for (j, rep) in h11.representatives().iter().enumerate() {
        let shifted = delta.bracket(rep)?;
        let coords = if shifted.is_zero() {
            vec![Rational::zero(); host.dim()]
        } else {
            host.class_coords(&shifted)?
        };
        for (i, value) in coords.into_iter().enumerate() {
            condition.data[i][j] = value;
        }
    }
    let admissible: Vec<Cochain> = condition
        .kernel()
        .iter()
        .map(|w| combine(&space, h11.representatives(), w))
        .collect::<Result<_, _>>()?;
    let twist = double_cohomology(mu, delta, 0, 2, ImageMode::Strict)?;
    Ok(ClassificationReport {
        solvable: true,
        obstructions: Vec::new(),
        spaces: vec![
            ClassSpace {
                name: "admissible action classes",
                dim: admissible.len(),
                representatives: admissible,
            },
            ClassSpace::from_cohomology("twist classes", &twist),
        ],
        classes: Vec::new(),
        witnesses: Vec::new(),
    })
}

/// Decides whether an action extends the pair (delta, mu) to a full
/// extension, producing a twist witness and the space of inequivalent
/// twists when it does, the quadratic obstruction when it does not.
pub fn classify_extension_moduli(
    delta: &Cochain,
    mu: &Cochain,
    lambda: &Cochain,
) -> Result<ClassificationReport, DeformationError> {
    let space = delta.space().clone();
    expect_slice(&space, delta, 0, 2, false, "structure map")?;
    expect_slice(&space, mu, 2, 0, true, "bracket")?;
    expect_slice(&space, lambda, 1, 1, true, "action")?;
    expect_codifferential(delta, "structure map")?;
    expect_codifferential(mu, "bracket")?;
    if !mu.bracket(lambda)?.is_zero() {
        return Err(DeformationError::NotMuCocycle("the action"));
    }

    let dl = delta.add(lambda)?;
    let half = Rational::new(1.into(), 2.into());
    let quadratic = delta
        .bracket(lambda)?
        .add(&lambda.bracket(lambda)?.scale_rational(&half))?;
    let host = restricted_cohomology(mu, &dl, 1, 2)?;
    let obstruction_coords = if quadratic.is_zero() {
        vec![Rational::zero(); host.dim()]
    } else {
        host.class_coords(&quadratic)?
    };
    let solvable = obstruction_coords.iter().all(|x| x.is_zero());

    let h11 = mu_cohomology(mu, 1, 1)?;
    let mut report = ClassificationReport {
        solvable,
        obstructions: Vec::new(),
        spaces: vec![ClassSpace::from_cohomology("action classes", &h11)],
        classes: vec![
            ("action class", h11.class_coords(lambda)?),
            ("obstruction class", obstruction_coords),
        ],
        witnesses: Vec::new(),
    };
    if solvable {
        let x = solve_bracket_pair(
            &space,
            mu,
            &quadratic,
            &dl,
            SliceSpec::MTarget(0, 2),
            "twist witness",
        )?;
        report.witnesses.push(("twist", x.neg()));
        let twist = double_cohomology(mu, &dl, 0, 2, ImageMode::Extended)?;
        report
            .spaces
            .push(ClassSpace::from_cohomology("twist classes", &twist));
    } else {
        report.obstructions.push(("quadratic obstruction", quadratic));
    }
    Ok(report)
}

fn module_problem(ext: &ExtensionData) -> Result<(), DeformationError> {
    ensure_extension(ext)?;
    if !ext.psi().is_zero() {
        return Err(DeformationError::TwistPresent);
    }
    Ok(())
}

/// Action classes shared by both module-deformation scenarios: strict
/// cocycles on the action slice modulo shifts by gauges fixing the
/// structure map and the bracket.
pub fn module_action_space(ext: &ExtensionData) -> Result<CohomologySpace, DeformationError> {
    let space = ext.space();
    let mu = ext.mu();
    let delta = ext.delta();
    let dl = ext.twisted()?;
    let op_mu = |x: &Cochain| mu.bracket(x);
    let op_dl = |x: &Cochain| dl.bracket(x);
    let op_delta = |x: &Cochain| delta.bracket(x);

    let mid = SliceBasis::new(space, &[SliceSpec::MTarget(1, 1)], None)?;
    let total = kernel_of(&op_mu, &mid)?.intersect(&kernel_of(&op_dl, &mid)?);

    let mut shifts: Vec<Vec<Rational>> = Vec::new();
    let alpha_basis = SliceBasis::new(space, &[SliceSpec::MTarget(1, 0)], None)?;
    for row in &kernel_of(&op_mu, &alpha_basis)?.rows {
        let g = alpha_basis.cochain_of(row);
        shifts.push(mid.vector_of(&dl.bracket(&g)?)?);
    }
    let gamma_basis = SliceBasis::new(space, &[SliceSpec::WTarget(1)], None)?;
    for row in &kernel_of(&op_delta, &gamma_basis)?.rows {
        let g = gamma_basis.cochain_of(row);
        shifts.push(mid.vector_of(&dl.bracket(&g)?)?);
    }
    let denom = Subspace::from_spanning(mid.dim(), shifts);
    Ok(CohomologySpace::build(mid, total, denom)?)
}

// leading directions completed by some action direction, modulo the gauge
// shifts that may move the leading slice
fn leading_space(
    ext: &ExtensionData,
    head_spec: SliceSpec,
    gauge_spec: SliceSpec,
    gauge_of: &Cochain,
) -> Result<CohomologySpace, DeformationError> {
    let space = ext.space();
    let d = ext.combined()?;
    let op_d = |x: &Cochain| d.bracket(x);
    let head = SliceBasis::new(space, &[head_spec], None)?;
    // the joint basis lists the leading slice first
    let joint = SliceBasis::new(space, &[head_spec, SliceSpec::MTarget(1, 1)], None)?;
    let solutions = kernel_of(&op_d, &joint)?;
    let projected: Vec<Vec<Rational>> = solutions
        .rows
        .iter()
        .map(|r| r[..head.dim()].to_vec())
        .collect();
    let admissible = Subspace::from_spanning(head.dim(), projected);
    let gauge_basis = SliceBasis::new(space, &[gauge_spec], None)?;
    let op_g = |x: &Cochain| gauge_of.bracket(x);
    let boundaries = image_into(&op_g, &gauge_basis, &head)?;
    Ok(CohomologySpace::build(head, admissible, boundaries)?)
}

/// Classifies the first-order deformations of a module that vary the
/// structure map and the action while the bracket stays fixed.
pub fn classify_rep_deformations_scenario1(
    ext: &ExtensionData,
) -> Result<ClassificationReport, DeformationError> {
    module_problem(ext)?;
    let structure = leading_space(
        ext,
        SliceSpec::WTarget(2),
        SliceSpec::WTarget(1),
        ext.delta(),
    )?;
    let action = module_action_space(ext)?;
    Ok(ClassificationReport {
        solvable: true,
        obstructions: Vec::new(),
        spaces: vec![
            ClassSpace::from_cohomology("structure classes", &structure),
            ClassSpace::from_cohomology("action classes", &action),
        ],
        classes: Vec::new(),
        witnesses: Vec::new(),
    })
}

/// Classifies the first-order deformations of a module that vary the
/// bracket and the action while the structure map stays fixed.
pub fn classify_rep_deformations_scenario2(
    ext: &ExtensionData,
) -> Result<ClassificationReport, DeformationError> {
    module_problem(ext)?;
    let bracket = leading_space(
        ext,
        SliceSpec::MTarget(2, 0),
        SliceSpec::MTarget(1, 0),
        ext.mu(),
    )?;
    let action = module_action_space(ext)?;
    Ok(ClassificationReport {
        solvable: true,
        obstructions: Vec::new(),
        spaces: vec![
            ClassSpace::from_cohomology("bracket classes", &bracket),
            ClassSpace::from_cohomology("action classes", &action),
        ],
        classes: Vec::new(),
        witnesses: Vec::new(),
    })
}

/// Applies the infinitesimal equivalence generated by alpha + beta + gamma
/// to a direction (eta, zeta); the generator must fix the structure map and
/// the bracket.
pub fn deformation_equivalence(
    ext: &ExtensionData,
    eta: &Cochain,
    zeta: &Cochain,
    alpha: &Cochain,
    beta: &Cochain,
    gamma: &Cochain,
) -> Result<(Cochain, Cochain), DeformationError> {
    let space = ext.space();
    expect_slice(space, eta, 1, 1, true, "action direction")?;
    expect_slice(space, zeta, 0, 2, true, "twist direction")?;
    expect_odd(eta, "action direction")?;
    expect_odd(zeta, "twist direction")?;
    expect_slice(space, alpha, 1, 0, true, "module gauge")?;
    expect_slice(space, beta, 0, 1, true, "mixing gauge")?;
    expect_slice(space, gamma, 0, 1, false, "complement gauge")?;
    expect_even(alpha, "module gauge")?;
    expect_even(beta, "mixing gauge")?;
    expect_even(gamma, "complement gauge")?;
    let g = alpha.add(gamma)?;
    if !ext.delta().bracket(&g)?.is_zero() {
        return Err(DeformationError::GaugeMoves("structure map"));
    }
    if !ext.mu().bracket(&g)?.is_zero() {
        return Err(DeformationError::GaugeMoves("bracket"));
    }
    let dl = ext.twisted()?;
    let eta_shift = dl.bracket(&g)?.add(&ext.mu().bracket(beta)?)?;
    let zeta_shift = ext.psi().bracket(&g)?.add(&dl.bracket(beta)?)?;
    Ok((eta.add(&eta_shift)?, zeta.add(&zeta_shift)?))
}

/// The components a first-order variation moves.
#[derive(Debug, Clone)]
pub enum Variation {
    /// eta deforms the action, zeta the twist; structure map and bracket
    /// stay fixed.
    Twist { eta: Cochain, zeta: Cochain },
    /// delta1 deforms the structure map, lambda1 the action, on a module
    /// with vanishing twist.
    Structure { delta1: Cochain, lambda1: Cochain },
    /// mu1 deforms the bracket, lambda1 the action, on a module with
    /// vanishing twist.
    Bracket { mu1: Cochain, lambda1: Cochain },
}

/// An extension together with one first-order variation of its components.
#[derive(Debug, Clone)]
pub struct DeformationProblem {
    ext: ExtensionData,
    variation: Variation,
}

impl DeformationProblem {
    /// Validates the variation against its slices and the frozen components.
    pub fn new(ext: ExtensionData, variation: Variation) -> Result<Self, DeformationError> {
        let space = ext.space();
        match &variation {
            Variation::Twist { eta, zeta } => {
                expect_slice(space, eta, 1, 1, true, "action direction")?;
                expect_slice(space, zeta, 0, 2, true, "twist direction")?;
                expect_odd(eta, "action direction")?;
                expect_odd(zeta, "twist direction")?;
            }
            Variation::Structure { delta1, lambda1 } => {
                if !ext.psi().is_zero() {
                    return Err(DeformationError::TwistPresent);
                }
                expect_slice(space, delta1, 0, 2, false, "structure direction")?;
                expect_slice(space, lambda1, 1, 1, true, "action direction")?;
                expect_odd(delta1, "structure direction")?;
                expect_odd(lambda1, "action direction")?;
            }
            Variation::Bracket { mu1, lambda1 } => {
                if !ext.psi().is_zero() {
                    return Err(DeformationError::TwistPresent);
                }
                expect_slice(space, mu1, 2, 0, true, "bracket direction")?;
                expect_slice(space, lambda1, 1, 1, true, "action direction")?;
                expect_odd(mu1, "bracket direction")?;
                expect_odd(lambda1, "action direction")?;
            }
        }
        Ok(DeformationProblem { ext, variation })
    }

    pub fn ext(&self) -> &ExtensionData {
        &self.ext
    }

    pub fn variation(&self) -> &Variation {
        &self.variation
    }

    /// Labeled residuals of this variation's first-order conditions.
    pub fn residuals(&self) -> Result<Vec<(&'static str, Cochain)>, DeformationError> {
        let dl = self.ext.twisted()?;
        match &self.variation {
            Variation::Twist { eta, zeta } => {
                let check = check_infinitesimal_deformation(&self.ext, eta, zeta)?;
                Ok(check
                    .items()
                    .into_iter()
                    .map(|(name, c)| (name, c.clone()))
                    .collect())
            }
            Variation::Structure { delta1, lambda1 } => Ok(vec![
                ("structure_residual", self.ext.delta().bracket(delta1)?),
                (
                    "action_residual",
                    self.ext
                        .lambda()
                        .bracket(delta1)?
                        .add(&dl.bracket(lambda1)?)?,
                ),
                ("equivariance_residual", self.ext.mu().bracket(lambda1)?),
            ]),
            Variation::Bracket { mu1, lambda1 } => Ok(vec![
                ("bracket_residual", self.ext.mu().bracket(mu1)?),
                (
                    "equivariance_residual",
                    dl.bracket(mu1)?.add(&self.ext.mu().bracket(lambda1)?)?,
                ),
                ("action_residual", dl.bracket(lambda1)?),
            ]),
        }
    }

    /// True when every first-order condition holds.
    pub fn holds(&self) -> Result<bool, DeformationError> {
        Ok(self.residuals()?.iter().all(|(_, c)| c.is_zero()))
    }

    /// Runs the classifier for this variation's scenario.
    pub fn classify(&self) -> Result<ClassificationReport, DeformationError> {
        match &self.variation {
            Variation::Twist { .. } => classify_deformations(&self.ext),
            Variation::Structure { .. } => classify_rep_deformations_scenario1(&self.ext),
            Variation::Bracket { .. } => classify_rep_deformations_scenario2(&self.ext),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::cohomology::relative_cohomology;
    use crate::gspace::Monomial;
    use crate::scalar::{ParamSet, Scalar};

    fn q(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn key(word: &[usize]) -> Monomial {
        Monomial::new_sorted(word.to_vec())
    }

    fn three_dim() -> Arc<GradedSpace> {
        Arc::new(
            GradedSpace::with_module(
                vec!["v1".into(), "v2".into(), "v3".into()],
                vec![Parity::Odd; 3],
                &[2],
            )
            .unwrap(),
        )
    }

    // structure v1 v2 -> v1, action b (v2 v3 -> v3), twist z (v1 v2 -> v3)
    fn three_dim_extension(b: i64, z: i64) -> ExtensionData {
        let space = three_dim();
        let delta = Cochain::term(&space, &[0, 1], 0, q(1)).unwrap();
        let lambda = Cochain::term(&space, &[1, 2], 2, q(b)).unwrap();
        let psi = Cochain::term(&space, &[0, 1], 2, q(z)).unwrap();
        ExtensionData::new(&space, delta, Cochain::zero(&space), lambda, psi).unwrap()
    }

    fn five_dim() -> Arc<GradedSpace> {
        Arc::new(GradedSpace::purely_odd_split(3, 5))
    }

    // the 3|2 module fixture: central bracket, structure v4 v5 -> v4, and
    // the reduced action with two free entries
    fn five_dim_extension(a16: i64, a19: i64) -> ExtensionData {
        let space = five_dim();
        let delta = Cochain::term(&space, &[3, 4], 3, q(1)).unwrap();
        let mu = Cochain::from_terms(
            &space,
            vec![(vec![1, 2], 0, q(1)), (vec![1, 2], 1, q(1))],
        )
        .unwrap();
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

    // one even module generator under three odd complement generators, with
    // a bare twist v2 v3 -> v1
    fn twisted_abelian() -> ExtensionData {
        let space = Arc::new(GradedSpace::purely_odd_split(1, 4));
        let psi = Cochain::term(&space, &[1, 2], 0, q(1)).unwrap();
        let zero = Cochain::zero(&space);
        ExtensionData::new(&space, zero.clone(), zero.clone(), zero, psi).unwrap()
    }

    // two module generators with a bracket pairing them into the first, one
    // complement generator acting trivially
    fn bounded_module_extension() -> ExtensionData {
        let space = Arc::new(GradedSpace::purely_odd_split(2, 3));
        let mu = Cochain::term(&space, &[0, 1], 0, q(1)).unwrap();
        let zero = Cochain::zero(&space);
        ExtensionData::new(&space, zero.clone(), mu, zero.clone(), zero).unwrap()
    }

    #[test]
    fn residuals_follow_the_action_line() {
        let space = three_dim();
        let params = ParamSet::new(vec!["r", "s"]).unwrap();
        let r = Scalar::var(&params, "r").unwrap();
        let s = Scalar::var(&params, "s").unwrap();
        let eta = Cochain::from_terms(
            &space,
            vec![(vec![0, 2], 2, r.clone()), (vec![1, 2], 2, s)],
        )
        .unwrap();
        let zeta = Cochain::zero(&space);
        let expected = Cochain::term(&space, &[0, 1, 2], 2, r).unwrap();
        for b in [2, -1] {
            let ext = three_dim_extension(b, 0);
            let check = check_infinitesimal_deformation(&ext, &eta, &zeta).unwrap();
            // the flatness residual keeps only the r line, independent of b
            assert!(
                check.flatness_residual == expected
                    || check.flatness_residual == expected.neg()
            );
            assert!(check.cocycle_residual.is_zero());
            assert!(check.equivariance_residual.is_zero());
            assert!(check.twist_residual.is_zero());
            assert!(!check.holds());

            let bindings: BTreeMap<String, Rational> = [
                ("r".to_string(), Rational::zero()),
                ("s".to_string(), Rational::from_integer(1.into())),
            ]
            .into();
            let surviving = eta.instantiate(&bindings).unwrap();
            let check = check_infinitesimal_deformation(&ext, &surviving, &zeta).unwrap();
            assert!(check.holds());
        }
    }

    #[test]
    fn twist_residual_vanishes_identically() {
        let ext = twisted_abelian();
        let space = ext.space();
        for word in [[1, 2], [1, 3], [2, 3]] {
            let zeta = Cochain::term(space, &word, 0, q(1)).unwrap();
            let check =
                check_infinitesimal_deformation(&ext, &Cochain::zero(space), &zeta).unwrap();
            assert!(check.twist_residual.is_zero());
        }
        let ext = three_dim_extension(-1, 1);
        let zeta = Cochain::term(ext.space(), &[0, 1], 2, q(1)).unwrap();
        let check =
            check_infinitesimal_deformation(&ext, &Cochain::zero(ext.space()), &zeta).unwrap();
        assert!(check.twist_residual.is_zero());
    }

    #[test]
    fn zeta_construction_succeeds_on_the_surviving_line() {
        let ext = three_dim_extension(-1, 1);
        let space = ext.space();
        let eta = Cochain::term(space, &[1, 2], 2, q(1)).unwrap();
        match construct_zeta(&ext, &eta).unwrap() {
            ZetaOutcome::Zeta(zeta) => {
                let check = check_infinitesimal_deformation(&ext, &eta, &zeta).unwrap();
                assert!(check.holds());
            }
            ZetaOutcome::Obstructed { stage, .. } => panic!("obstructed at {stage}"),
        }
        match construct_zeta(&ext, &Cochain::zero(space)).unwrap() {
            ZetaOutcome::Zeta(zeta) => assert!(zeta.is_zero()),
            ZetaOutcome::Obstructed { stage, .. } => panic!("obstructed at {stage}"),
        }
    }

    #[test]
    fn zeta_construction_reports_the_failing_stage() {
        // the structure shift of the complement line has no bracket preimage
        let ext = three_dim_extension(-1, 1);
        let eta = Cochain::term(ext.space(), &[0, 2], 2, q(1)).unwrap();
        match construct_zeta(&ext, &eta).unwrap() {
            ZetaOutcome::Obstructed {
                stage,
                residual,
                class_coords,
            } => {
                assert_eq!(stage, ZetaStage::MuPreimage);
                assert_eq!(residual, ext.twisted().unwrap().bracket(&eta).unwrap());
                assert!(!residual.is_zero());
                assert!(class_coords.is_empty());
            }
            ZetaOutcome::Zeta(_) => panic!("expected an obstruction"),
        }

        // pairing the second module generator is not equivariant
        let ext = bounded_module_extension();
        let eta = Cochain::term(ext.space(), &[1, 2], 1, q(1)).unwrap();
        match construct_zeta(&ext, &eta).unwrap() {
            ZetaOutcome::Obstructed {
                stage, residual, ..
            } => {
                assert_eq!(stage, ZetaStage::MuCocycle);
                assert_eq!(residual, ext.mu().bracket(&eta).unwrap());
                assert!(!residual.is_zero());
            }
            ZetaOutcome::Zeta(_) => panic!("expected an obstruction"),
        }

        // the twist differential of the module-complement pairing is a
        // nonzero class
        let ext = twisted_abelian();
        let eta = Cochain::term(ext.space(), &[0, 3], 0, q(1)).unwrap();
        match construct_zeta(&ext, &eta).unwrap() {
            ZetaOutcome::Obstructed {
                stage,
                residual,
                class_coords,
            } => {
                assert_eq!(stage, ZetaStage::TwistClass);
                assert_eq!(residual, ext.psi().bracket(&eta).unwrap());
                assert!(!residual.is_zero());
                assert!(class_coords.iter().any(|x| !x.is_zero()));
            }
            ZetaOutcome::Zeta(_) => panic!("expected an obstruction"),
        }
    }

    #[test]
    fn deformation_counts_follow_the_twist() {
        for (b, z, action_dim, twist_dim) in [(2, 0, 1, 0), (-1, 0, 1, 1), (-1, 1, 1, 0)] {
            let ext = three_dim_extension(b, z);
            let report = classify_deformations(&ext).unwrap();
            let action = report.space("action classes").unwrap();
            let twist = report.space("twist classes").unwrap();
            assert_eq!(action.dim, action_dim, "action classes at b={b}, z={z}");
            assert_eq!(twist.dim, twist_dim, "twist classes at b={b}, z={z}");
            assert_eq!(report.deformation_parameters(), action_dim + twist_dim);
            // the surviving action direction pairs the second complement
            // generator with the module line
            let rep = &action.representatives[0];
            assert!(rep.coeff(&key(&[0, 2]), 2).is_zero());
            assert!(!rep.coeff(&key(&[1, 2]), 2).is_zero());
        }
    }

    #[test]
    fn zeta_construction_completes_every_action_class() {
        for (b, z) in [(2, 0), (-1, 0), (-1, 1)] {
            let ext = three_dim_extension(b, z);
            let report = classify_deformations(&ext).unwrap();
            let action = report.space("action classes").unwrap();
            assert_eq!(action.dim, 1);
            for rep in &action.representatives {
                match construct_zeta(&ext, rep).unwrap() {
                    ZetaOutcome::Zeta(zeta) => {
                        let check = check_infinitesimal_deformation(&ext, rep, &zeta).unwrap();
                        assert!(check.holds());
                    }
                    ZetaOutcome::Obstructed { stage, .. } => panic!("obstructed at {stage}"),
                }
            }
        }
    }

    #[test]
    fn admissible_lines_for_infinitesimal_extensions() {
        let space = three_dim();
        let delta = Cochain::term(&space, &[0, 1], 0, q(1)).unwrap();
        let zero = Cochain::zero(&space);
        let report = classify_infinitesimal_extensions(&delta, &zero).unwrap();
        let admissible = report.space("admissible action classes").unwrap();
        assert_eq!(admissible.dim, 1);
        // the structure shift kills the component pairing the first
        // complement generator
        let rep = &admissible.representatives[0];
        assert!(rep.coeff(&key(&[0, 2]), 2).is_zero());
        assert!(!rep.coeff(&key(&[1, 2]), 2).is_zero());
        assert_eq!(report.space("twist classes").unwrap().dim, 0);

        let report = classify_infinitesimal_extensions(&zero, &zero).unwrap();
        assert_eq!(report.space("admissible action classes").unwrap().dim, 2);
        assert_eq!(report.space("twist classes").unwrap().dim, 1);
    }

    #[test]
    fn moduli_solvability_and_twist_jump() {
        let space = three_dim();
        let delta = Cochain::term(&space, &[0, 1], 0, q(1)).unwrap();
        let zero = Cochain::zero(&space);
        for (b, twist_dim) in [(2, 0), (-1, 1)] {
            let lambda = Cochain::term(&space, &[1, 2], 2, q(b)).unwrap();
            let report = classify_extension_moduli(&delta, &zero, &lambda).unwrap();
            assert!(report.solvable);
            assert_eq!(
                report.space("twist classes").unwrap().dim,
                twist_dim,
                "twist classes at b={b}"
            );
            let (_, witness) = report
                .witnesses
                .iter()
                .find(|(name, _)| *name == "twist")
                .unwrap();
            let ext = ExtensionData::new(
                &space,
                delta.clone(),
                zero.clone(),
                lambda.clone(),
                witness.clone(),
            )
            .unwrap();
            assert!(ext.is_extension().unwrap());
        }

        // pairing the first complement generator obstructs quadratically
        let lambda = Cochain::term(&space, &[0, 2], 2, q(1)).unwrap();
        let report = classify_extension_moduli(&delta, &zero, &lambda).unwrap();
        assert!(!report.solvable);
        assert!(report.space("twist classes").is_none());
        assert!(report.witnesses.is_empty());
        let (_, residual) = &report.obstructions[0];
        assert!(!residual.is_zero());
        let (_, coords) = report
            .classes
            .iter()
            .find(|(name, _)| *name == "obstruction class")
            .unwrap();
        assert!(coords.iter().any(|x| !x.is_zero()));
    }

    #[test]
    fn moduli_match_infinitesimal_extensions_when_flat() {
        let space = three_dim();
        let delta = Cochain::term(&space, &[0, 1], 0, q(1)).unwrap();
        let zero = Cochain::zero(&space);
        let report = classify_infinitesimal_extensions(&delta, &zero).unwrap();
        let admissible = report.space("admissible action classes").unwrap();

        // solvability of the quadratic problem agrees with admissibility on
        // each action line
        let h11 = mu_cohomology(&zero, 1, 1).unwrap();
        for rep in h11.representatives() {
            let inline = admissible
                .representatives
                .iter()
                .any(|a| a == rep || *a == rep.neg());
            let moduli = classify_extension_moduli(&delta, &zero, rep).unwrap();
            assert_eq!(moduli.solvable, inline);
        }

        // with a vanishing action both classifiers report the same twists
        let moduli = classify_extension_moduli(&delta, &zero, &zero).unwrap();
        assert_eq!(
            moduli.space("twist classes").unwrap().dim,
            report.space("twist classes").unwrap().dim
        );
    }

    #[test]
    fn bounded_actions_leave_no_classes() {
        let ext = bounded_module_extension();
        let zero = Cochain::zero(ext.space());
        let report = classify_infinitesimal_extensions(&zero, ext.mu()).unwrap();
        assert_eq!(report.space("admissible action classes").unwrap().dim, 0);
        assert_eq!(report.space("twist classes").unwrap().dim, 0);
        let report = classify_extension_moduli(&zero, ext.mu(), &zero).unwrap();
        assert!(report.solvable);
        assert_eq!(report.space("action classes").unwrap().dim, 0);
        assert_eq!(report.space("twist classes").unwrap().dim, 0);
    }

    #[test]
    fn five_dim_twist_certificate() {
        let space = five_dim();
        let probe = Cochain::term(&space, &[3, 4], 0, q(1)).unwrap();
        for a19 in [0, 1, 2] {
            let ext = five_dim_extension(0, a19);
            let report =
                classify_extension_moduli(ext.delta(), ext.mu(), ext.lambda()).unwrap();
            assert!(report.solvable);
            assert_eq!(report.space("twist classes").unwrap().dim, 1);
            let h = double_cohomology(
                ext.mu(),
                &ext.twisted().unwrap(),
                0,
                2,
                ImageMode::Extended,
            )
            .unwrap();
            assert!(!h.class_is_zero(&probe).unwrap(), "a19={a19}");
            // the nonzero class is realized by a verified extension
            let twisted = ExtensionData::new(
                &space,
                ext.delta().clone(),
                ext.mu().clone(),
                ext.lambda().clone(),
                probe.clone(),
            )
            .unwrap();
            assert!(twisted.is_extension().unwrap());
        }
        let ext = five_dim_extension(1, 0);
        let report = classify_extension_moduli(ext.delta(), ext.mu(), ext.lambda()).unwrap();
        assert!(report.solvable);
        assert_eq!(report.space("twist classes").unwrap().dim, 0);
        let h = double_cohomology(
            ext.mu(),
            &ext.twisted().unwrap(),
            0,
            2,
            ImageMode::Extended,
        )
        .unwrap();
        assert!(h.class_is_zero(&probe).unwrap());
    }

    #[test]
    fn moduli_rejects_non_cocycle_actions() {
        let space = five_dim();
        let ext = five_dim_extension(0, 0);
        let lambda = Cochain::term(&space, &[0, 3], 0, q(1)).unwrap();
        assert!(matches!(
            classify_extension_moduli(ext.delta(), ext.mu(), &lambda),
            Err(DeformationError::NotMuCocycle(_))
        ));
    }

    #[test]
    fn classifiers_reject_non_codifferentials() {
        let space = Arc::new(GradedSpace::purely_odd_split(1, 4));
        let bad = Cochain::from_terms(
            &space,
            vec![(vec![1, 2], 1, q(1)), (vec![2, 3], 2, q(1))],
        )
        .unwrap();
        let zero = Cochain::zero(&space);
        assert!(matches!(
            classify_infinitesimal_extensions(&bad, &zero),
            Err(DeformationError::NotCodifferential(_))
        ));
    }

    // delta pairing the first two complement generators into the first, on
    // one module generator with everything else zero
    fn four_dim_structure_extension() -> ExtensionData {
        let space = Arc::new(GradedSpace::purely_odd_split(1, 4));
        let delta = Cochain::term(&space, &[1, 2], 1, q(1)).unwrap();
        let zero = Cochain::zero(&space);
        ExtensionData::new(&space, delta, zero.clone(), zero.clone(), zero).unwrap()
    }

    #[test]
    fn scenario_classifiers_match_the_total_complex() {
        let fixtures = [
            three_dim_extension(2, 0),
            bounded_module_extension(),
            five_dim_extension(1, 0),
            four_dim_structure_extension(),
        ];
        for ext in &fixtures {
            let d = ext.combined().unwrap();
            let s1 = classify_rep_deformations_scenario1(ext).unwrap();
            let oracle = relative_cohomology(
                &d,
                &[SliceSpec::WTarget(2), SliceSpec::MTarget(1, 1)],
                &[SliceSpec::WTarget(1), SliceSpec::MTarget(1, 0)],
                &[SliceSpec::MTarget(2, 0)],
                None,
            )
            .unwrap();
            assert_eq!(s1.deformation_parameters(), oracle.dim());

            let s2 = classify_rep_deformations_scenario2(ext).unwrap();
            let oracle = relative_cohomology(
                &d,
                &[SliceSpec::MTarget(2, 0), SliceSpec::MTarget(1, 1)],
                &[SliceSpec::WTarget(1), SliceSpec::MTarget(1, 0)],
                &[SliceSpec::WTarget(2)],
                None,
            )
            .unwrap();
            assert_eq!(s2.deformation_parameters(), oracle.dim());
        }
    }

    #[test]
    fn scenario_classifiers_refuse_twisted_bases() {
        let ext = three_dim_extension(-1, 1);
        assert!(matches!(
            classify_rep_deformations_scenario1(&ext),
            Err(DeformationError::TwistPresent)
        ));
        assert!(matches!(
            classify_rep_deformations_scenario2(&ext),
            Err(DeformationError::TwistPresent)
        ));
    }

    #[test]
    fn structure_classes_are_gauge_stable() {
        // on the module line every structure cocycle bounds
        let ext = three_dim_extension(2, 0);
        let report = classify_rep_deformations_scenario1(&ext).unwrap();
        let structure = report.space("structure classes").unwrap();
        assert_eq!(structure.dim, 0);

        // one structure class survives; shifting a representative by a
        // gauge boundary leaves its coordinates fixed
        let ext = four_dim_structure_extension();
        let space = ext.space();
        let h = leading_space(
            &ext,
            SliceSpec::WTarget(2),
            SliceSpec::WTarget(1),
            ext.delta(),
        )
        .unwrap();
        assert_eq!(h.dim(), 1);
        let gamma = Cochain::term(space, &[1], 2, q(1)).unwrap();
        let boundary = ext.delta().bracket(&gamma).unwrap();
        assert!(!boundary.is_zero());
        assert!(h.class_is_zero(&boundary).unwrap());
        for rep in h.representatives() {
            let shifted = rep.add(&boundary).unwrap();
            assert_eq!(
                h.class_coords(&shifted).unwrap(),
                h.class_coords(rep).unwrap()
            );
        }
    }

    #[test]
    fn equivalence_shifts_preserve_classes() {
        let ext = five_dim_extension(1, 0);
        let space = ext.space();
        let zero = Cochain::zero(space);
        let alpha = Cochain::term(space, &[2], 0, q(1)).unwrap();
        let beta = Cochain::term(space, &[3], 1, q(1)).unwrap();
        let gamma = Cochain::term(space, &[3], 3, q(1)).unwrap();

        let dl = ext.twisted().unwrap();
        let h = triple_cohomology(ext.mu(), &dl, ext.psi(), 1, 1).unwrap();
        let report = classify_deformations(&ext).unwrap();
        for rep in &report.space("action classes").unwrap().representatives {
            let (shifted, _) =
                deformation_equivalence(&ext, rep, &zero, &alpha, &beta, &gamma).unwrap();
            assert_eq!(
                h.class_coords(&shifted).unwrap(),
                h.class_coords(rep).unwrap()
            );
        }

        // the zero direction moves to a nonzero representative of the zero
        // class
        let (eta, _) =
            deformation_equivalence(&ext, &zero, &zero, &alpha, &beta, &gamma).unwrap();
        assert!(!eta.is_zero());
        assert!(h.class_is_zero(&eta).unwrap());

        // a gauge fixing eta shifts zeta inside its class
        let t = triple_cohomology(ext.mu(), &dl, ext.psi(), 0, 2).unwrap();
        for word in [[3], [4]] {
            let mixing = Cochain::term(space, &word, 0, q(1)).unwrap();
            assert!(ext.mu().bracket(&mixing).unwrap().is_zero());
            let (eta, zeta) =
                deformation_equivalence(&ext, &zero, &zero, &zero, &mixing, &zero).unwrap();
            assert!(eta.is_zero());
            if !zeta.is_zero() {
                assert!(t.class_is_zero(&zeta).unwrap());
            }
        }

        // generators moving the frozen components are rejected
        let moving = Cochain::term(space, &[3], 4, q(1)).unwrap();
        assert!(matches!(
            deformation_equivalence(&ext, &zero, &zero, &zero, &zero, &moving),
            Err(DeformationError::GaugeMoves(_))
        ));
    }

    #[test]
    fn problem_validation_and_residuals() {
        let ext = three_dim_extension(2, 0);
        let space = ext.space();
        let zero = Cochain::zero(space);

        // a twist-slice cochain cannot stand in for an action direction
        let misplaced = Cochain::term(space, &[0, 1], 2, q(1)).unwrap();
        assert!(matches!(
            DeformationProblem::new(
                ext.clone(),
                Variation::Twist {
                    eta: misplaced,
                    zeta: zero.clone()
                }
            ),
            Err(DeformationError::WrongSlice { .. })
        ));

        // module variations need a vanishing twist
        let twisted = three_dim_extension(-1, 1);
        assert!(matches!(
            DeformationProblem::new(
                twisted,
                Variation::Structure {
                    delta1: Cochain::zero(space),
                    lambda1: Cochain::zero(space)
                }
            ),
            Err(DeformationError::TwistPresent)
        ));

        // an even direction is rejected on a mixed-parity space
        let mixed = Arc::new(
            GradedSpace::with_module(
                vec!["v1".into(), "v2".into(), "v3".into()],
                vec![Parity::Even, Parity::Odd, Parity::Odd],
                &[2],
            )
            .unwrap(),
        );
        let zero_mixed = Cochain::zero(&mixed);
        let flat = ExtensionData::new(
            &mixed,
            zero_mixed.clone(),
            zero_mixed.clone(),
            zero_mixed.clone(),
            zero_mixed.clone(),
        )
        .unwrap();
        let even_direction = Cochain::term(&mixed, &[0, 2], 2, q(1)).unwrap();
        assert!(matches!(
            DeformationProblem::new(
                flat,
                Variation::Twist {
                    eta: even_direction,
                    zeta: zero_mixed
                }
            ),
            Err(DeformationError::NotOdd(_))
        ));

        // zero variations satisfy every condition
        let problem = DeformationProblem::new(
            ext.clone(),
            Variation::Structure {
                delta1: zero.clone(),
                lambda1: zero.clone(),
            },
        )
        .unwrap();
        assert!(problem.holds().unwrap());
        let labels: Vec<&str> = problem
            .residuals()
            .unwrap()
            .into_iter()
            .map(|(name, _)| name)
            .collect();
        assert_eq!(
            labels,
            vec!["structure_residual", "action_residual", "equivariance_residual"]
        );

        // a non-equivariant action direction shows up in the bracket
        // scenario's residuals
        let bounded = bounded_module_extension();
        let lambda1 = Cochain::term(bounded.space(), &[1, 2], 1, q(1)).unwrap();
        let problem = DeformationProblem::new(
            bounded.clone(),
            Variation::Bracket {
                mu1: Cochain::zero(bounded.space()),
                lambda1,
            },
        )
        .unwrap();
        assert!(!problem.holds().unwrap());
        let residuals = problem.residuals().unwrap();
        let (_, equivariance) = residuals
            .iter()
            .find(|(name, _)| *name == "equivariance_residual")
            .unwrap();
        assert!(!equivariance.is_zero());

        // classification dispatches to the matching scenario
        let problem = DeformationProblem::new(
            ext.clone(),
            Variation::Twist {
                eta: zero.clone(),
                zeta: zero.clone(),
            },
        )
        .unwrap();
        let direct = classify_deformations(&ext).unwrap();
        assert_eq!(
            problem.classify().unwrap().deformation_parameters(),
            direct.deformation_parameters()
        );
    }
}
