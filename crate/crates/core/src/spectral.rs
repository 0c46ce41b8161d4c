//! Linearizations of the traveling-wave ODE system at the origin and at the
//! coexistence point, eigenvalue computations, multiplicity classification
//! and the tail asymptotic-expansion templates.
//!
//! The first-order wave system in `(phi, phi', psi, psi')` has linearization
//! `A1` at `(u*, 0, v*, 0)` and the block-diagonal `A2` at the origin. At the
//! coexistence point the spectrum splits into two negative and two positive
//! real eigenvalues for every admissible speed; at the origin all four
//! eigenvalues are real positive with closed forms
//! `lambda_{3,4} = (c +- sqrt(c^2-4))/2`,
//! `lambda_{5,6} = (c +- sqrt(c^2-4rd))/(2d)`.

use nalgebra::{Complex, Matrix4, Vector4};
use serde::Serialize;

use crate::error::{LvError, Result};
use crate::model::ModelParams;

/// Relative tolerance for eigenvalue-coincidence decisions.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Minimal admissible wave speed `2 max(1, sqrt(r d))`.
pub fn c_min(model: &ModelParams) -> f64 {
    2.0 * f64::max(1.0, (model.r * model.d).sqrt())
}

/// Model parameters plus a wave speed `c >= c_min`.
#[derive(Debug, Clone, Copy)]
pub struct WaveParams {
    pub model: ModelParams,
    pub c: f64,
}

impl WaveParams {
    pub fn new(model: ModelParams, c: f64) -> Result<Self> {
        let cm = c_min(&model);
        if c < cm - 1e-12 {
            return Err(LvError::SubminimalSpeed { c, c_min: cm });
        }
        Ok(WaveParams { model, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasePoint {
    CoexistencePoint,
    OriginPoint,
}

#[derive(Debug, Clone)]
pub struct LinearizationMatrix {
    pub entries: Matrix4<f64>,
    pub base_point: BasePoint,
}

/// Linearization of the first-order wave system at one of the two relevant
/// equilibria.
pub fn linearize(wave: &WaveParams, at: BasePoint) -> Result<LinearizationMatrix> {
    let ModelParams { k1, r, d, .. } = wave.model;
    let c = wave.c;
    let entries = match at {
        BasePoint::OriginPoint => Matrix4::new(
            0.0,
            1.0,
            0.0,
            0.0,
            -1.0,
            c,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            1.0,
            0.0,
            0.0,
            -r / d,
            c / d,
        ),
        BasePoint::CoexistencePoint => {
            let (us, vs) = wave.model.coexistence()?;
            let k2 = wave.model.k2;
            Matrix4::new(
                0.0,
                1.0,
                0.0,
                0.0,
                us,
                c,
                k1 * us,
                0.0,
                0.0,
                0.0,
                0.0,
                1.0,
                r / d * k2 * vs,
                0.0,
                r / d * vs,
                c / d,
            )
        }
    };
    Ok(LinearizationMatrix {
        entries,
        base_point: at,
    })
}

/// Closed-form origin eigenvalues `(lambda3, lambda4, lambda5, lambda6)`
/// with `lambda3 >= lambda4 > 0`, `lambda5 >= lambda6 > 0`.
pub fn origin_eigenvalues(wave: &WaveParams) -> Result<(f64, f64, f64, f64)> {
    let c = wave.c;
    let ModelParams { r, d, .. } = wave.model;
    let tol = 1e-12;
    let disc1 = c * c - 4.0;
    let disc2 = c * c - 4.0 * r * d;
    if disc1 < -tol * (1.0 + c * c) || disc2 < -tol * (1.0 + c * c) {
        return Err(LvError::SubminimalSpeed {
            c,
            c_min: c_min(&wave.model),
        });
    }
    let s1 = disc1.max(0.0).sqrt();
    let s2 = disc2.max(0.0).sqrt();
    Ok((
        (c + s1) / 2.0,
        (c - s1) / 2.0,
        (c + s2) / (2.0 * d),
        (c - s2) / (2.0 * d),
    ))
}

/// Roots of a monic quartic via the companion-matrix eigenproblem.
pub fn quartic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<Complex<f64>> {
    let companion = Matrix4::new(
        0.0, 0.0, 0.0, -a0, //
        1.0, 0.0, 0.0, -a1, //
        0.0, 1.0, 0.0, -a2, //
        0.0, 0.0, 1.0, -a3,
    );
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Coefficients `(a3, a2, a1, a0)` of the monic coexistence characteristic
/// quartic `lambda^4 + a3 lambda^3 + a2 lambda^2 + a1 lambda + a0`.
pub fn coexistence_quartic(wave: &WaveParams) -> Result<(f64, f64, f64, f64)> {
    let (us, vs) = wave.model.coexistence()?;
    let ModelParams { k1, k2, r, d } = wave.model;
    let c = wave.c;
    Ok((
        -(c + c / d),
        c * c / d - us - r / d * vs,
        c * r / d * vs + c / d * us,
        r / d * (1.0 - k1 * k2) * us * vs,
    ))
}

/// Spectrum fragment at the coexistence point: the two negative eigenvalues
/// `lambda1 > lambda2`, their psi/phi eigenvector ratios `tau1 < 0 < tau2`,
/// the two positive eigenvalues, and the comparison value `mu2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoexistenceSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub positive: (f64, f64),
    pub mu2: f64,
}

/// Truncate an imaginary part certified small; reject otherwise.
fn certify_real(z: Complex<f64>, context: &str) -> Result<f64> {
    if z.im.abs() <= COINCIDENCE_TOL * (1.0 + z.re.abs()) {
        Ok(z.re)
    } else {
        Err(LvError::SignSplitViolation(format!(
            "{context}: complex root {z} beyond tolerance"
        )))
    }
}

/// Solve the coexistence quartic and certify the 2+2 real sign split.
pub fn coexistence_eigenvalues(wave: &WaveParams) -> Result<CoexistenceSpectrum> {
    if !wave.model.is_weak_competition() {
        return Err(LvError::DegenerateRegime(
            "coexistence spectrum requires weak competition".into(),
        ));
    }
    let (a3, a2, a1, a0) = coexistence_quartic(wave)?;
    let mut roots = Vec::with_capacity(4);
    for z in quartic_roots(a3, a2, a1, a0) {
        roots.push(certify_real(z, "coexistence quartic")?);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let neg: Vec<f64> = roots.iter().copied().filter(|&x| x < 0.0).collect();
    let pos: Vec<f64> = roots.iter().copied().filter(|&x| x > 0.0).collect();
    if neg.len() != 2 || pos.len() != 2 {
        return Err(LvError::SignSplitViolation(format!(
            "expected 2 negative + 2 positive roots, got {roots:?}"
        )));
    }
    let (us, _vs) = wave.model.coexistence()?;
    let c = wave.c;
    let k1 = wave.model.k1;
    let tau = |l: f64| (l * l - c * l - us) / (k1 * us);
    let (lambda2, lambda1) = (neg[0], neg[1]);
    let mu2 = (c - (c * c + 4.0 * us).sqrt()) / 2.0;
    Ok(CoexistenceSpectrum {
        lambda1,
        lambda2,
        tau1: tau(lambda1),
        tau2: tau(lambda2),
        positive: (pos[0], pos[1]),
        mu2,
    })
}

/// One step of the determinant/sign-split homotopy of the coexistence
/// linearization.
#[derive(Debug, Clone, Serialize)]
pub struct HomotopyStep {
    pub rho: f64,
    pub det: f64,
    pub roots: [f64; 4],
    pub negative_count: usize,
    pub positive_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyReport {
    pub steps: Vec<HomotopyStep>,
    /// Closed-form roots `mu1..mu4` at `rho = 0`.
    pub mu: [f64; 4],
    /// Worst absolute mismatch between the rho=0 roots and the mu values.
    pub mu_mismatch: f64,
}

/// Verify that the sign split persists along the homotopy `Lambda(rho)` that
/// decouples the coexistence linearization at `rho = 0`.
pub fn homotopy_check(wave: &WaveParams, rho_steps: usize) -> Result<HomotopyReport> {
    if !wave.model.is_weak_competition() {
        return Err(LvError::DegenerateRegime(
            "homotopy check requires weak competition".into(),
        ));
    }
    let (us, vs) = wave.model.coexistence()?;
    let ModelParams { k1, k2, r, d } = wave.model;
    let c = wave.c;
    let (a3, a2, a1, _) = coexistence_quartic(wave)?;
    let n = rho_steps.max(2);
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let rho = i as f64 / (n - 1) as f64;
        let det = r / d * us * vs * (1.0 - rho * k1 * k2);
        if det <= 0.0 {
            return Err(LvError::HomotopyBreak {
                rho,
                what: format!("det(Lambda(rho)) = {det} not positive"),
            });
        }
        let mut roots = [0.0; 4];
        for (slot, z) in roots.iter_mut().zip(quartic_roots(a3, a2, a1, det)) {
            // along the homotopy roots may collide (double roots carry a
            // sqrt(eps) conditioning penalty), so the realness tolerance is
            // looser than the simple-root one
            if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
                return Err(LvError::HomotopyBreak {
                    rho,
                    what: format!("complex root {z}"),
                });
            }
            *slot = z.re;
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let negative_count = roots.iter().filter(|&&x| x < 0.0).count();
        let positive_count = roots.iter().filter(|&&x| x > 0.0).count();
        if negative_count != 2 || positive_count != 2 {
            return Err(LvError::HomotopyBreak {
                rho,
                what: format!("sign split lost: roots {roots:?}"),
            });
        }
        steps.push(HomotopyStep {
            rho,
            det,
            roots,
            negative_count,
            positive_count,
        });
    }

    let mut mu = [
        (c + (c * c + 4.0 * us).sqrt()) / 2.0,
        (c - (c * c + 4.0 * us).sqrt()) / 2.0,
        (c + (c * c + 4.0 * d * r * vs).sqrt()) / (2.0 * d),
        (c - (c * c + 4.0 * d * r * vs).sqrt()) / (2.0 * d),
    ];
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mu_mismatch = steps[0]
        .roots
        .iter()
        .zip(mu.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if mu_mismatch > 1e-6 {
        return Err(LvError::HomotopyBreak {
            rho: 0.0,
            what: format!("rho=0 roots disagree with mu closed forms by {mu_mismatch}"),
        });
    }
    Ok(HomotopyReport {
        steps,
        mu,
        mu_mismatch,
    })
}

/// Multiplicity case of the origin spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// All four origin eigenvalues simple.
    Simple4,
    /// Exactly one coincidence: which pair.
    Lemma2_4Case1, // lambda3 = lambda4
    Lemma2_4Case2, // lambda5 = lambda6
    Lemma2_4Case3, // lambda3 = lambda5
    Lemma2_4Case4, // lambda3 = lambda6
    Lemma2_4Case5, // lambda4 = lambda5
    Lemma2_4Case6, // lambda4 = lambda6
    /// Two distinct double roots.
    Lemma2_5Case1, // lambda3 = lambda4, lambda5 = lambda6
    Lemma2_5Case2, // lambda3 = lambda5, lambda4 = lambda6
    /// Triple roots.
    Lemma2_6Case1, // lambda3 = lambda4 = lambda5 > lambda6
    Lemma2_6Case2, // lambda5 > lambda6 = lambda3 = lambda4
    Lemma2_6Case3, // lambda5 = lambda6 = lambda3 > lambda4
    Lemma2_6Case4, // lambda3 > lambda4 = lambda5 = lambda6
    /// All four coincide (c = 2, r = d = 1).
    Quadruple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    PlusInfinity,
    MinusInfinity,
}

/// Sign constraint on an expansion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignConstraint {
    /// Coefficient strictly positive (beta of the plus-infinity expansion).
    Positive,
    /// Coefficient non-negative (the slower-mode coefficient).
    NonNegative,
    /// Strictly positive whenever the companion coefficient vanishes.
    PositiveIfOtherZero,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TemplateTerm {
    pub rate: f64,
    pub polynomial_degree: u8,
    pub sign: SignConstraint,
}

/// Tail expansion template: the admissible `xi^deg e^{rate xi}` terms of each
/// component, plus the plus-infinity coupling constraint.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticTemplate {
    pub side: Side,
    pub terms_phi: Vec<TemplateTerm>,
    pub terms_psi: Vec<TemplateTerm>,
    /// At plus infinity both components share rate lambda2 and the psi
    /// coefficient equals tau2 times the phi coefficient.
    pub coupling_tau2: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub base_point: BasePoint,
    /// `(value, algebraic multiplicity)`, sorted ascending by value.
    pub eigenvalues: Vec<(f64, usize)>,
    pub stable_dim: usize,
    pub unstable_dim: usize,
    pub eigvectors: Vec<[f64; 4]>,
    pub generalized_chains: Vec<Vec<[f64; 4]>>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub case_tag: CaseTag,
    pub template: AsymptoticTemplate,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= COINCIDENCE_TOL * (1.0 + a.abs().max(b.abs()))
}

fn pred(a: f64, b: f64) -> bool {
    // parameter predicates share the eigenvalue tolerance, relative form
    (a - b).abs() <= COINCIDENCE_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Classify the origin multiplicity case and emit the expansion template
/// with the generalized-eigenvector chains.
///
/// Exact parameter predicates (`c = 2`, `c = 2 sqrt(rd)`, `d = 2 - r`,
/// `d = r/(2r-1)`, `d = r = 1`) take precedence; numerical eigenvalue
/// coincidence is the fallback for the cross cases. A numerical coincidence
/// that contradicts a parameter predicate is reported, not guessed.
pub fn classify_minus_infinity(wave: &WaveParams) -> Result<SpectralReport> {
    let (l3, l4, l5, l6) = origin_eigenvalues(wave)?;
    let ModelParams { r, d, .. } = wave.model;
    let c = wave.c;

    // predicate-decided coincidences within each quadratic factor
    let p34 = pred(c, 2.0);
    let p56 = pred(c, 2.0 * (r * d).sqrt());
    if near(l3, l4) != p34 {
        return Err(LvError::AmbiguousMultiplicity(format!(
            "lambda3/lambda4 coincidence ({}) contradicts predicate c=2 ({p34})",
            near(l3, l4)
        )));
    }
    if near(l5, l6) != p56 {
        return Err(LvError::AmbiguousMultiplicity(format!(
            "lambda5/lambda6 coincidence ({}) contradicts predicate c=2 sqrt(rd) ({p56})",
            near(l5, l6)
        )));
    }
    // cross coincidences: closed-form predicates where available, numerical
    // fallback otherwise
    let e35 = if p34 {
        pred(d, 2.0 - r) && d > 1.0 || (p56 && pred(d, 1.0) && pred(r, 1.0))
    } else {
        near(l3, l5)
    };
    let e36 = if p34 && !p56 {
        pred(d, 2.0 - r) && d < 1.0
    } else {
        near(l3, l6) && !near(l3, l5) || (p34 && p56 && near(l3, l6))
    };
    let e45 = near(l4, l5);
    let e46 = if p56 && !p34 {
        pred(d, r / (2.0 * r - 1.0)) && d > 1.0
    } else {
        near(l4, l6)
    };

    let quadruple = p34 && p56 && pred(d, 1.0) && pred(r, 1.0);

    let tag = if quadruple {
        CaseTag::Quadruple
    } else if p34 && e35 {
        CaseTag::Lemma2_6Case1
    } else if p34 && e36 {
        CaseTag::Lemma2_6Case2
    } else if p56 && e35 {
        CaseTag::Lemma2_6Case3
    } else if p56 && e46 && near(l4, l5) {
        CaseTag::Lemma2_6Case4
    } else if p34 && p56 {
        CaseTag::Lemma2_5Case1
    } else if e35 && e46 {
        CaseTag::Lemma2_5Case2
    } else if p34 {
        CaseTag::Lemma2_4Case1
    } else if p56 {
        CaseTag::Lemma2_4Case2
    } else if e35 {
        CaseTag::Lemma2_4Case3
    } else if e36 {
        CaseTag::Lemma2_4Case4
    } else if e45 {
        CaseTag::Lemma2_4Case5
    } else if e46 {
        CaseTag::Lemma2_4Case6
    } else {
        CaseTag::Simple4
    };

    // consistency: the tag's implied coincidence pattern must match the
    // numerically observed one
    let observed = [near(l3, l4), near(l5, l6), near(l3, l5), near(l3, l6), near(l4, l5), near(l4, l6)];
    let implied = implied_pattern(tag);
    if observed != implied {
        return Err(LvError::AmbiguousMultiplicity(format!(
            "tag {tag:?} implies pattern {implied:?} but closed forms give {observed:?}"
        )));
    }

    let template = minus_infinity_template(tag, l3, l4, l5, l6);

    // eigenvalue list with multiplicities
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for l in [l3, l4, l5, l6] {
        if let Some(g) = groups.iter_mut().find(|(v, _)| near(*v, l)) {
            g.1 += 1;
        } else {
            groups.push((l, 1));
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let matrix = linearize(wave, BasePoint::OriginPoint)?;
    let mut chains = Vec::new();
    for &(l, m) in &groups {
        chains.extend(generalized_eigenvector_chains(&matrix, l, m)?);
    }
    let eigvectors: Vec<[f64; 4]> = chains.iter().map(|ch| ch[0]).collect();

    Ok(SpectralReport {
        base_point: BasePoint::OriginPoint,
        eigenvalues: groups,
        stable_dim: 0,
        unstable_dim: 4,
        eigvectors,
        generalized_chains: chains,
        tau1: None,
        tau2: None,
        case_tag: tag,
        template,
    })
}

fn implied_pattern(tag: CaseTag) -> [bool; 6] {
    // [34, 56, 35, 36, 45, 46]
    use CaseTag::*;
    match tag {
        Simple4 => [false; 6],
        Lemma2_4Case1 => [true, false, false, false, false, false],
        Lemma2_4Case2 => [false, true, false, false, false, false],
        Lemma2_4Case3 => [false, false, true, false, false, false],
        Lemma2_4Case4 => [false, false, false, true, false, false],
        Lemma2_4Case5 => [false, false, false, false, true, false],
        Lemma2_4Case6 => [false, false, false, false, false, true],
        Lemma2_5Case1 => [true, true, false, false, false, false],
        Lemma2_5Case2 => [false, false, true, false, false, true],
        Lemma2_6Case1 => [true, false, true, false, true, false],
        Lemma2_6Case2 => [true, false, false, true, false, true],
        Lemma2_6Case3 => [false, true, true, true, false, false],
        Lemma2_6Case4 => [false, true, false, false, true, true],
        Quadruple => [true; 6],
    }
}

fn minus_infinity_template(tag: CaseTag, l3: f64, l4: f64, l5: f64, l6: f64) -> AsymptoticTemplate {
    use CaseTag::*;
    use SignConstraint::{NonNegative, PositiveIfOtherZero};
    let t = |rate: f64, deg: u8, sign: SignConstraint| TemplateTerm {
        rate,
        polynomial_degree: deg,
        sign,
    };
    // first listed term carries the alpha/gamma constraint, second the
    // beta/sigma one
    let lead = PositiveIfOtherZero;
    let (phi, psi) = match tag {
        Simple4 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l5, 0, lead), t(l6, 0, NonNegative)],
        ),
        Lemma2_4Case1 => (
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
            vec![t(l5, 0, lead), t(l6, 0, NonNegative)],
        ),
        Lemma2_4Case2 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l5, 0, lead), t(l5, 1, NonNegative)],
        ),
        Lemma2_4Case3 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l3, 0, lead), t(l6, 0, NonNegative)],
        ),
        Lemma2_4Case4 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l5, 0, lead), t(l3, 0, NonNegative)],
        ),
        Lemma2_4Case5 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l4, 0, lead), t(l6, 0, NonNegative)],
        ),
        Lemma2_4Case6 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l5, 0, lead), t(l4, 0, NonNegative)],
        ),
        Lemma2_5Case1 => (
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
            vec![t(l5, 0, lead), t(l5, 1, NonNegative)],
        ),
        Lemma2_5Case2 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
        ),
        Lemma2_6Case1 => (
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
            vec![t(l3, 0, lead), t(l6, 0, NonNegative)],
        ),
        Lemma2_6Case2 => (
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
            vec![t(l5, 0, lead), t(l3, 0, NonNegative)],
        ),
        Lemma2_6Case3 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
        ),
        Lemma2_6Case4 => (
            vec![t(l3, 0, lead), t(l4, 0, NonNegative)],
            vec![t(l4, 0, lead), t(l4, 1, NonNegative)],
        ),
        Quadruple => (
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
            vec![t(l3, 0, lead), t(l3, 1, NonNegative)],
        ),
    };
    AsymptoticTemplate {
        side: Side::MinusInfinity,
        terms_phi: phi,
        terms_psi: psi,
        coupling_tau2: None,
    }
}

/// Plus-infinity template: a single rate `lambda2` with the tau2 coupling.
pub fn plus_infinity_template(spec: &CoexistenceSpectrum) -> AsymptoticTemplate {
    AsymptoticTemplate {
        side: Side::PlusInfinity,
        terms_phi: vec![TemplateTerm {
            rate: spec.lambda2,
            polynomial_degree: 0,
            sign: SignConstraint::Positive,
        }],
        terms_psi: vec![TemplateTerm {
            rate: spec.lambda2,
            polynomial_degree: 0,
            sign: SignConstraint::Positive,
        }],
        coupling_tau2: Some(spec.tau2),
    }
}

/// Full spectral report at the coexistence point.
pub fn coexistence_report(wave: &WaveParams) -> Result<SpectralReport> {
    let spec = coexistence_eigenvalues(wave)?;
    let eigvec = |l: f64| {
        let (us, _) = wave.model.coexistence().unwrap();
        let tau = (l * l - wave.c * l - us) / (wave.model.k1 * us);
        [1.0, l, tau, tau * l]
    };
    let mut eigenvalues = vec![
        (spec.lambda2, 1),
        (spec.lambda1, 1),
        (spec.positive.0, 1),
        (spec.positive.1, 1),
    ];
    eigenvalues.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eigvectors = vec![
        eigvec(spec.lambda2),
        eigvec(spec.lambda1),
        eigvec(spec.positive.0),
        eigvec(spec.positive.1),
    ];
    let chains = eigvectors.iter().map(|v| vec![*v]).collect();
    Ok(SpectralReport {
        base_point: BasePoint::CoexistencePoint,
        eigenvalues,
        stable_dim: 2,
        unstable_dim: 2,
        eigvectors,
        generalized_chains: chains,
        tau1: Some(spec.tau1),
        tau2: Some(spec.tau2),
        case_tag: CaseTag::Simple4,
        template: plus_infinity_template(&spec),
    })
}

// ---------------------------------------------------------------------------
// small dense linear algebra for the 4x4 Jordan structure

/// Nullspace basis of a 4x4 matrix via elimination with partial pivoting.
pub(crate) fn nullspace4(m: &Matrix4<f64>, tol: f64) -> Vec<Vector4<f64>> {
    let mut a = *m;
    let scale = a.amax().max(1.0);
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..4 {
        if row >= 4 {
            break;
        }
        // partial pivot
        let (mut best, mut best_val) = (row, a[(row, col)].abs());
        for r2 in row + 1..4 {
            if a[(r2, col)].abs() > best_val {
                best = r2;
                best_val = a[(r2, col)].abs();
            }
        }
        if best_val <= tol * scale {
            continue; // free column
        }
        a.swap_rows(row, best);
        let piv = a[(row, col)];
        for c2 in 0..4 {
            a[(row, c2)] /= piv;
        }
        for r2 in 0..4 {
            if r2 != row {
                let f = a[(r2, col)];
                if f != 0.0 {
                    for c2 in 0..4 {
                        a[(r2, c2)] -= f * a[(row, c2)];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let mut basis = Vec::new();
    for col in 0..4 {
        if pivot_cols.contains(&col) {
            continue;
        }
        let mut v = Vector4::zeros();
        v[col] = 1.0;
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -a[(r, col)];
        }
        basis.push(v);
    }
    basis
}

fn rank_of(vectors: &[Vector4<f64>], tol: f64) -> usize {
    // elimination on a 4 x n column set
    let mut cols: Vec<Vector4<f64>> = vectors.to_vec();
    let mut rank = 0usize;
    for row in 0..4 {
        let Some(p) = (rank..cols.len()).max_by(|&i, &j| {
            cols[i][row]
                .abs()
                .partial_cmp(&cols[j][row].abs())
                .unwrap()
        }) else {
            break;
        };
        if cols[p][row].abs() <= tol {
            continue;
        }
        cols.swap(rank, p);
        let pivot = cols[rank][row];
        for j in rank + 1..cols.len() {
            let f = cols[j][row] / pivot;
            let lead = cols[rank];
            for k in 0..4 {
                cols[j][k] -= f * lead[k];
            }
        }
        rank += 1;
        if rank == cols.len() {
            break;
        }
    }
    rank
}

/// Jordan chains of `matrix` at eigenvalue `lambda`.
///
/// Each returned chain is listed head-first: `chain[0]` is a genuine
/// eigenvector and `(M - lambda I) chain[k] = chain[k-1]`.
pub fn generalized_eigenvector_chains(
    matrix: &LinearizationMatrix,
    lambda: f64,
    algebraic_multiplicity: usize,
) -> Result<Vec<Vec<[f64; 4]>>> {
    let tol = 1e-9 * (1.0 + lambda.abs());
    let b = matrix.entries - Matrix4::identity() * lambda;
    let n1 = nullspace4(&b, tol);
    if n1.is_empty() {
        // report the smallest achievable |B v| over unit coordinate vectors
        let residual = (0..4)
            .map(|i| {
                let mut e = Vector4::zeros();
                e[i] = 1.0;
                (b * e).norm()
            })
            .fold(f64::INFINITY, f64::min);
        return Err(LvError::NotAnEigenvalue { lambda, residual });
    }
    let m = algebraic_multiplicity.clamp(1, 4);

    // nullspaces of increasing powers until the generalized eigenspace is
    // exhausted
    let mut power = b;
    let mut spaces = vec![n1];
    while spaces.last().unwrap().len() < m && spaces.len() < 4 {
        power *= b;
        spaces.push(nullspace4(&power, tol));
    }
    let p = spaces.len();

    // build chains from the top level down
    let mut tops: Vec<(usize, Vector4<f64>)> = Vec::new(); // (length, top vector)
    for k in (1..=p).rev() {
        let mut span: Vec<Vector4<f64>> = if k >= 2 {
            spaces[k - 2].clone()
        } else {
            Vec::new()
        };
        // members of longer chains at this height
        for &(len, top) in &tops {
            if len >= k {
                let mut v = top;
                for _ in 0..(len - k) {
                    v = b * v;
                }
                span.push(v);
            }
        }
        let mut current_rank = rank_of(&span, tol);
        for cand in &spaces[k - 1] {
            let mut trial = span.clone();
            trial.push(*cand);
            let r = rank_of(&trial, tol);
            if r > current_rank {
                span = trial;
                current_rank = r;
                tops.push((k, *cand));
            }
        }
    }

    let mut chains = Vec::new();
    for (len, top) in tops {
        let mut members = Vec::with_capacity(len);
        let mut v = top;
        members.push(v);
        for _ in 1..len {
            v = b * v;
            members.push(v);
        }
        members.reverse(); // eigenvector first
        // normalize so the eigenvector's largest entry is +1
        let head = members[0];
        let (mut idx, mut mag) = (0usize, 0.0f64);
        for i in 0..4 {
            if head[i].abs() > mag {
                mag = head[i].abs();
                idx = i;
            }
        }
        let s = 1.0 / head[idx];
        let chain: Vec<[f64; 4]> = members
            .iter()
            .map(|v| {
                let w = v * s;
                [w[0], w[1], w[2], w[3]]
            })
            .collect();
        chains.push(chain);
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()));
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(k1: f64, k2: f64, r: f64, d: f64, c: f64) -> WaveParams {
        WaveParams::new(ModelParams::new(k1, k2, r, d).unwrap(), c).unwrap()
    }

    #[test]
    fn c_min_values() {
        assert_eq!(c_min(&ModelParams::new(0.5, 0.5, 1.0, 1.0).unwrap()), 2.0);
        assert_eq!(c_min(&ModelParams::new(0.5, 0.5, 4.0, 1.0).unwrap()), 4.0);
        assert_eq!(c_min(&ModelParams::new(0.5, 0.5, 0.25, 1.0).unwrap()), 2.0);
    }

    #[test]
    fn origin_matrix_entries() {
        let w = wave(0.5, 0.5, 1.0, 1.0, 2.0);
        let m = linearize(&w, BasePoint::OriginPoint).unwrap().entries;
        let expect = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 2.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 2.0,
        );
        assert_eq!(m, expect);
    }

    #[test]
    fn coexistence_matrix_entries() {
        let w = wave(0.5, 0.5, 2.0, 1.5, 4.0);
        let (us, vs) = w.model.coexistence().unwrap();
        let m = linearize(&w, BasePoint::CoexistencePoint).unwrap().entries;
        assert_eq!(m[(1, 0)], us);
        assert_eq!(m[(1, 2)], 0.5 * us);
        assert_eq!(m[(3, 0)], 2.0 / 1.5 * 0.5 * vs);
        assert_eq!(m[(3, 2)], 2.0 / 1.5 * vs);
        assert_eq!(m[(3, 3)], 4.0 / 1.5);
        // quartic coefficients agree with det(lambda I - A1) at sample points
        let (a3, a2, a1, a0) = coexistence_quartic(&w).unwrap();
        for lambda in [-1.3, 0.2, 0.9, 3.7] {
            let p = lambda * lambda * lambda * lambda
                + a3 * lambda * lambda * lambda
                + a2 * lambda * lambda
                + a1 * lambda
                + a0;
            let det = (Matrix4::identity() * lambda - m).determinant();
            assert!((p - det).abs() < 1e-10 * (1.0 + det.abs()), "{p} vs {det}");
        }
    }

    #[test]
    fn origin_eigenvalue_closed_forms() {
        let w = wave(0.5, 0.5, 1.0, 1.0, 2.5);
        let (l3, l4, l5, l6) = origin_eigenvalues(&w).unwrap();
        assert!((l3 - 2.0).abs() < 1e-14);
        assert!((l4 - 0.5).abs() < 1e-14);
        assert!((l5 - 2.0).abs() < 1e-14);
        assert!((l6 - 0.5).abs() < 1e-14);

        let w = wave(0.5, 0.5, 1.0, 1.0, 2.0);
        let (l3, l4, l5, l6) = origin_eigenvalues(&w).unwrap();
        for l in [l3, l4, l5, l6] {
            assert!((l - 1.0).abs() < 1e-14);
        }

        let w = wave(0.5, 0.5, 0.5, 1.5, 2.0);
        let (l3, l4, l5, l6) = origin_eigenvalues(&w).unwrap();
        assert!((l3 - 1.0).abs() < 1e-12);
        assert!((l4 - 1.0).abs() < 1e-12);
        assert!((l5 - 1.0).abs() < 1e-12);
        assert!((l6 - 1.0 / 3.0).abs() < 1e-12);

        // subminimal speed rejected
        assert!(origin_eigenvalues(&WaveParams {
            model: ModelParams::new(0.5, 0.5, 1.0, 1.0).unwrap(),
            c: 1.5
        })
        .is_err());
    }

    #[test]
    fn vieta_identities() {
        for &(r, d, c) in &[(1.0, 1.0, 2.0), (0.7, 1.3, 2.4), (2.0, 2.0, 6.0)] {
            let w = wave(0.5, 0.5, r, d, c);
            let (l3, l4, l5, l6) = origin_eigenvalues(&w).unwrap();
            assert!((l3 * l4 - 1.0).abs() < 1e-12);
            assert!((l3 + l4 - c).abs() < 1e-12);
            assert!((l5 * l6 - r / d).abs() < 1e-12 * (1.0 + r / d));
            assert!((l5 + l6 - c / d).abs() < 1e-12 * (1.0 + c / d));
        }
    }

    #[test]
    fn coexistence_split_and_tau_signs() {
        let w = wave(0.5, 0.5, 1.0, 1.0, 2.0);
        let s = coexistence_eigenvalues(&w).unwrap();
        assert!(s.lambda2 < s.lambda1 && s.lambda1 < 0.0);
        assert!(s.positive.0 > 0.0 && s.positive.1 > 0.0);
        assert!(s.tau1 < 0.0 && s.tau2 > 0.0);
        assert!(s.lambda2 < s.mu2 && s.mu2 < s.lambda1);
        // quartic residual at each root below 1e-10
        let (a3, a2, a1, a0) = coexistence_quartic(&w).unwrap();
        for l in [s.lambda1, s.lambda2, s.positive.0, s.positive.1] {
            let res = l * l * l * l + a3 * l * l * l + a2 * l * l + a1 * l + a0;
            assert!(res.abs() < 1e-10, "residual {res} at {l}");
        }
    }

    #[test]
    fn homotopy_holds() {
        let w = wave(0.5, 0.5, 1.0, 1.0, 2.0);
        let rep = homotopy_check(&w, 11).unwrap();
        assert_eq!(rep.steps.len(), 11);
        assert!(rep.mu_mismatch < 1e-6);
        for s in &rep.steps {
            assert!(s.det > 0.0);
            assert_eq!((s.negative_count, s.positive_count), (2, 2));
        }
        // d(1) closed form
        let (us, vs) = w.model.coexistence().unwrap();
        let d1 = w.model.r / w.model.d * (1.0 - w.model.k1 * w.model.k2) * us * vs;
        assert!((rep.steps.last().unwrap().det - d1).abs() < 1e-14);
    }

    #[test]
    fn classifier_cases() {
        // quadruple: c=2, r=d=1
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 1.0, 1.0, 2.0)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Quadruple);
        assert_eq!(rep.eigenvalues, vec![(1.0, 4)]);
        assert_eq!(rep.template.terms_phi[1].polynomial_degree, 1);

        // c = 2 with d = 2 - r > 1: triple lambda3=lambda4=lambda5
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 0.5, 1.5, 2.0)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_6Case1);

        // c = 2 with d = 2 - r < 1: triple lambda3=lambda4=lambda6
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 1.5, 0.5, 2.0)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_6Case2);

        // r=d=1, c>2: both quadratics coincide
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 1.0, 1.0, 2.5)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_5Case2);
        // degree-0 terms only in this case
        assert!(rep
            .template
            .terms_phi
            .iter()
            .chain(rep.template.terms_psi.iter())
            .all(|t| t.polynomial_degree == 0));

        // generic simple case
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 0.7, 1.1, 3.0)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Simple4);

        // c = 2, d != 2-r: plain double root on the phi factor
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 0.4, 1.2, 2.0)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_4Case1);

        // c = 2 sqrt(rd) with d = r/(2r-1) < 1: triple lambda5=lambda6=lambda3
        let r = 2.0;
        let d = r / (2.0 * r - 1.0);
        let rep = classify_minus_infinity(&wave(0.5, 0.5, r, d, 2.0 * (r * d).sqrt())).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_6Case3);

        // c = 2 sqrt(rd) with d = r/(2r-1) > 1: triple lambda5=lambda6=lambda4
        let r = 0.75;
        let d = r / (2.0 * r - 1.0);
        let rep = classify_minus_infinity(&wave(0.5, 0.5, r, d, 2.0 * (r * d).sqrt())).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_6Case4);

        // c = 2 sqrt(rd), d != r/(2r-1): double root on the psi factor only
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 1.2, 1.3, 2.0 * 1.56f64.sqrt())).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Lemma2_4Case2);
    }

    #[test]
    fn remark_predicates_on_samples() {
        // c=2, d != 2-r implies lambda3=lambda4 distinct from both
        for &(r, d) in &[(0.4, 1.2), (0.9, 0.8), (1.1, 0.7)] {
            let w = wave(0.5, 0.5, r, d, 2.0);
            let (l3, _l4, l5, l6) = origin_eigenvalues(&w).unwrap();
            assert!(!near(l3, l5) && !near(l3, l6), "r={r}, d={d}");
        }
        // c=2 sqrt(rd), d != r/(2r-1) implies lambda5=lambda6
        // distinct from lambda3, lambda4
        for &(r, d) in &[(1.2, 1.3), (2.0, 0.9), (1.5, 1.5)] {
            let w = wave(0.5, 0.5, r, d, 2.0 * (r * d).sqrt());
            let (l3, l4, l5, _l6) = origin_eigenvalues(&w).unwrap();
            assert!(!near(l5, l3) && !near(l5, l4), "r={r}, d={d}");
        }
    }

    #[test]
    fn jordan_chains_quadruple_case() {
        let w = wave(0.5, 0.5, 1.0, 1.0, 2.0);
        let m = linearize(&w, BasePoint::OriginPoint).unwrap();
        // (B41)^2 = 0 exactly
        let b = m.entries - Matrix4::identity();
        assert_eq!(b * b, Matrix4::zeros());
        let chains = generalized_eigenvector_chains(&m, 1.0, 4).unwrap();
        let total: usize = chains.iter().map(|c| c.len()).sum();
        assert_eq!(total, 4);
        assert!(chains.iter().all(|c| c.len() <= 2));
        verify_chains(&m, 1.0, &chains);
    }

    #[test]
    fn jordan_chain_b21_case() {
        // c=2, generic r, d: double eigenvalue 1 on the phi block
        let w = wave(0.5, 0.5, 0.4, 1.2, 2.0);
        let m = linearize(&w, BasePoint::OriginPoint).unwrap();
        let chains = generalized_eigenvector_chains(&m, 1.0, 2).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].len(), 2);
        // eigenvector proportional to (1,1,0,0)
        let head = chains[0][0];
        assert!((head[0] - head[1]).abs() < 1e-12);
        assert!(head[2].abs() < 1e-12 && head[3].abs() < 1e-12);
        verify_chains(&m, 1.0, &chains);
    }

    #[test]
    fn not_an_eigenvalue() {
        let w = wave(0.5, 0.5, 1.0, 1.0, 2.5);
        let m = linearize(&w, BasePoint::OriginPoint).unwrap();
        assert!(matches!(
            generalized_eigenvector_chains(&m, 1.31, 1),
            Err(LvError::NotAnEigenvalue { .. })
        ));
    }

    fn verify_chains(m: &LinearizationMatrix, lambda: f64, chains: &[Vec<[f64; 4]>]) {
        let b = m.entries - Matrix4::identity() * lambda;
        for ch in chains {
            for (k, v) in ch.iter().enumerate() {
                let v = Vector4::new(v[0], v[1], v[2], v[3]);
                let bv = b * v;
                let target = if k == 0 {
                    Vector4::zeros()
                } else {
                    let p = ch[k - 1];
                    Vector4::new(p[0], p[1], p[2], p[3])
                };
                assert!((bv - target).amax() < 1e-10, "chain recurrence failed");
            }
        }
    }

    #[test]
    fn report_serializes_sorted() {
        let rep = classify_minus_infinity(&wave(0.5, 0.5, 0.7, 1.1, 3.0)).unwrap();
        let vals: Vec<f64> = rep.eigenvalues.iter().map(|e| e.0).collect();
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vals, sorted);
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("eigenvalues"));
    }
}
