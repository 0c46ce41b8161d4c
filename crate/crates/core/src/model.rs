//! System parameters, regime classification, equilibria, reaction terms and
//! the residual operators used by every downstream module.
//!
//! The underlying system is
//! ```text
//!   u_t = u_xx + u (1 - u - k1 v)
//!   v_t = d v_xx + r v (1 - v - k2 u)
//! ```
//! with positive constants `k1`, `k2`, `r`, `d`. The weak-competition regime
//! is `0 < k1, k2 < 1`, where the coexistence state
//! `(u*, v*) = ((1-k1)/(1-k1 k2), (1-k2)/(1-k1 k2))` attracts the
//! diffusion-free dynamics and satisfies `u* + k1 v* = k2 u* + v* = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{LvError, Result};

/// Tolerance used for the algebraic equilibrium identities.
pub const IDENTITY_TOL: f64 = 1e-14;

/// The four positive constants defining the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k1: f64,
    pub k2: f64,
    pub r: f64,
    pub d: f64,
}

impl ModelParams {
    pub fn new(k1: f64, k2: f64, r: f64, d: f64) -> Result<Self> {
        let p = ModelParams { k1, k2, r, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("r", self.r),
            ("d", self.d),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LvError::Config(format!(
                    "parameter {name} must be a positive finite number, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Weak-competition predicate `0 < k1 < 1 && 0 < k2 < 1`.
    pub fn is_weak_competition(&self) -> bool {
        self.k1 > 0.0 && self.k1 < 1.0 && self.k2 > 0.0 && self.k2 < 1.0
    }

    /// Coexistence equilibrium `(u*, v*)`.
    pub fn coexistence(&self) -> Result<(f64, f64)> {
        let denom = 1.0 - self.k1 * self.k2;
        if denom == 0.0 {
            return Err(LvError::DegenerateRegime(
                "k1*k2 = 1: coexistence point undefined".into(),
            ));
        }
        Ok(((1.0 - self.k1) / denom, (1.0 - self.k2) / denom))
    }
}

/// Tag for one of the four constant states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Origin,
    UOnly,
    VOnly,
    Coexistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub u: f64,
    pub v: f64,
    pub kind: EquilibriumKind,
}

/// Long-time behavior of the diffusion-free competition dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeCase {
    /// `0 < k1 < 1 < k2`: u survives.
    CaseI,
    /// `0 < k2 < 1 < k1`: v survives.
    CaseII,
    /// `k1, k2 > 1`: bistable, outcome depends on initial data.
    CaseIII,
    /// `0 < k1, k2 < 1`: weak competition, coexistence.
    CaseIvWeak,
}

impl RegimeCase {
    pub fn description(&self) -> &'static str {
        match self {
            RegimeCase::CaseI => "0<k1<1<k2: u survives",
            RegimeCase::CaseII => "0<k2<1<k1: v survives",
            RegimeCase::CaseIII => "k1,k2>1: strong competition, bistable",
            RegimeCase::CaseIvWeak => "0<k1,k2<1: weak competition, coexistence",
        }
    }
}

/// Classify the competition regime from `(k1, k2)`.
///
/// Boundary values `k1 = 1` or `k2 = 1` are rejected: the four cases are
/// strict inequalities. The outcome never depends on `r` or `d`.
pub fn classify_regime(params: &ModelParams) -> Result<RegimeCase> {
    params.validate()?;
    if params.k1 == 1.0 || params.k2 == 1.0 {
        return Err(LvError::DegenerateRegime(format!(
            "boundary regime k1={}, k2={} is not classified",
            params.k1, params.k2
        )));
    }
    Ok(match (params.k1 < 1.0, params.k2 < 1.0) {
        (true, true) => RegimeCase::CaseIvWeak,
        (true, false) => RegimeCase::CaseI,
        (false, true) => RegimeCase::CaseII,
        (false, false) => RegimeCase::CaseIII,
    })
}

/// The four equilibria of the system.
pub fn equilibria(params: &ModelParams) -> Result<Vec<Equilibrium>> {
    params.validate()?;
    let (us, vs) = params.coexistence()?;
    Ok(vec![
        Equilibrium {
            u: 0.0,
            v: 0.0,
            kind: EquilibriumKind::Origin,
        },
        Equilibrium {
            u: 1.0,
            v: 0.0,
            kind: EquilibriumKind::UOnly,
        },
        Equilibrium {
            u: 0.0,
            v: 1.0,
            kind: EquilibriumKind::VOnly,
        },
        Equilibrium {
            u: us,
            v: vs,
            kind: EquilibriumKind::Coexistence,
        },
    ])
}

/// Reaction terms `(u (1-u-k1 v), r v (1-v-k2 u))`.
#[inline]
pub fn reaction(params: &ModelParams, u: f64, v: f64) -> (f64, f64) {
    (
        u * (1.0 - u - params.k1 * v),
        params.r * v * (1.0 - v - params.k2 * u),
    )
}

/// Time/space derivative bundle supplied by the caller at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldDerivatives {
    pub u_t: f64,
    pub u_xx: f64,
    pub v_t: f64,
    pub v_xx: f64,
}

/// Residual operators
/// `F3 = u_t - u_xx - u(1-u-k1 v)` and `F4 = v_t - d v_xx - r v(1-v-k2 u)`.
#[inline]
pub fn residual_operators(
    params: &ModelParams,
    u: f64,
    v: f64,
    derivs: &FieldDerivatives,
) -> (f64, f64) {
    let (f, g) = reaction(params, u, v);
    (
        derivs.u_t - derivs.u_xx - f,
        derivs.v_t - params.d * derivs.v_xx - g,
    )
}

/// Outcome of the structural-assumption lattice check.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub samples_per_axis: usize,
    /// Eigenvalues of the coexistence stability matrix of assumption (d).
    pub stability_eigenvalues: (f64, f64),
    pub violations: Vec<AssumptionViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionViolation {
    pub u: f64,
    pub v: f64,
    pub what: String,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The 2x2 stability matrix of assumption (d) at the coexistence state,
/// built from the per-capita rates `f = 1-u-k1 v`, `g = r(1-v-k2 u)`.
pub fn stability_matrix(params: &ModelParams) -> Result<[[f64; 2]; 2]> {
    let (us, vs) = params.coexistence()?;
    Ok([
        [-us, -params.k1 * us],
        [-params.r * params.k2 * vs, -params.r * vs],
    ])
}

/// Checks the structural assumptions (a)-(d) on the per-capita reaction
/// rates over a lattice in the open box `(0,u*) x (0,v*)`.
///
/// The Lotka-Volterra weak-competition rates satisfy these globally, so any
/// reported violation signals a caller bug (non-weak parameters) or a broken
/// lattice.
pub fn check_tf80_assumptions(params: &ModelParams, samples: usize) -> Result<AssumptionReport> {
    params.validate()?;
    if !params.is_weak_competition() {
        return Err(LvError::DegenerateRegime(
            "assumption check requires weak competition".into(),
        ));
    }
    let (us, vs) = params.coexistence()?;
    let n = samples.max(2);
    let mut violations = Vec::new();

    // per-capita rates and partials
    let f = |u: f64, v: f64| 1.0 - u - params.k1 * v;
    let g = |u: f64, v: f64| params.r * (1.0 - v - params.k2 * u);

    // (a): positive zero at (u*, v*)
    let fz = f(us, vs).abs();
    let gz = g(us, vs).abs();
    if fz > 1e-12 || gz > 1e-12 {
        violations.push(AssumptionViolation {
            u: us,
            v: vs,
            what: format!("(a): f,g do not vanish at coexistence (|f|={fz}, |g|={gz})"),
        });
    }

    let f00 = f(0.0, 0.0);
    let g00 = g(0.0, 0.0);
    for i in 1..n {
        for j in 1..n {
            let u = us * i as f64 / n as f64;
            let v = vs * j as f64 / n as f64;
            let (fv, gv) = (f(u, v), g(u, v));
            if !(fv > 0.0 && fv < f00) {
                violations.push(AssumptionViolation {
                    u,
                    v,
                    what: format!("(b): f={fv} outside (0, f(0,0)={f00})"),
                });
            }
            if !(gv > 0.0 && gv < g00) {
                violations.push(AssumptionViolation {
                    u,
                    v,
                    what: format!("(b): g={gv} outside (0, g(0,0)={g00})"),
                });
            }
            // (c): f_u < 0, f_v <= 0, g_u <= 0, g_v < 0, constant for LV terms
            let (fu, fv_) = (-1.0, -params.k1);
            let (gu, gv_) = (-params.r * params.k2, -params.r);
            if !(fu < 0.0 && fv_ <= 0.0 && gu <= 0.0 && gv_ < 0.0) {
                violations.push(AssumptionViolation {
                    u,
                    v,
                    what: "(c): partial-derivative sign condition failed".into(),
                });
            }
        }
    }

    // (d): both eigenvalues of the coexistence stability matrix real negative
    let m = stability_matrix(params)?;
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    let eigs = if disc >= 0.0 {
        let s = disc.sqrt();
        ((tr - s) / 2.0, (tr + s) / 2.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    if disc < 0.0 || eigs.0 >= 0.0 || eigs.1 >= 0.0 {
        violations.push(AssumptionViolation {
            u: us,
            v: vs,
            what: format!("(d): stability eigenvalues not real negative ({eigs:?})"),
        });
    }

    let report = AssumptionReport {
        samples_per_axis: n,
        stability_eigenvalues: eigs,
        violations,
    };
    if let Some(v) = report.violations.first() {
        return Err(LvError::AssumptionViolated {
            u: v.u,
            v: v.v,
            what: v.what.clone(),
        });
    }
    Ok(report)
}
