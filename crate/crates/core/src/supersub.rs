//! Coupled super-/sub-solution pairs for the competitive (quasi-monotone
//! decreasing) comparison principle, and the verification of their coupled
//! differential inequalities
//!
//! ```text
//!   F3(ubar, vlow) >= 0,   F3(ulow, vbar) <= 0,
//!   F4(vbar, ulow) >= 0,   F4(vlow, ubar) <= 0,
//! ```
//!
//! where `F3(u, v) = u_t - u_xx - u(1-u-k1 v)` and
//! `F4(v, u) = v_t - d v_xx - r v(1-v-k2 u)`.
//!
//! Two families are built: the front family combines a system front, its
//! reflection and a diffusion-free orbit through `max`/`min`, and the scalar
//! family combines two single-species fronts. On each smooth branch the
//! residuals are evaluated analytically by substituting the branch's own ODE,
//! which collapses them to closed forms with manifest signs; branch-tie
//! ridges, where the `max`/`min` is not differentiable, are skipped and
//! counted (the comparison principle only needs the inequalities almost
//! everywhere).

use serde::Serialize;

use crate::error::{LvError, Result};
use crate::front::{FrontKind, FrontProfile, ScalarEq, ScalarEquation};
use crate::model::ModelParams;
use crate::odefree::DiffusionFreeOrbit;

/// Largest boundary/extrapolation deviation tolerated when building a pair.
const TAIL_TOL: f64 = 1e-6;

/// Branch activation flags `(i, j, m)`, each 0 or 1, not all zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Selector {
    pub i: u8,
    pub j: u8,
    pub m: u8,
}

impl Selector {
    pub fn new(i: u8, j: u8, m: u8) -> Result<Self> {
        if i > 1 || j > 1 || m > 1 {
            return Err(LvError::Config(format!(
                "selector entries must be 0 or 1, got ({i},{j},{m})"
            )));
        }
        if i == 0 && j == 0 && m == 0 {
            return Err(LvError::SelectorAllZero);
        }
        Ok(Selector { i, j, m })
    }

    /// The seven admissible selectors, in lexicographic order.
    pub fn all() -> [Selector; 7] {
        [
            Selector { i: 0, j: 0, m: 1 },
            Selector { i: 0, j: 1, m: 0 },
            Selector { i: 0, j: 1, m: 1 },
            Selector { i: 1, j: 0, m: 0 },
            Selector { i: 1, j: 0, m: 1 },
            Selector { i: 1, j: 1, m: 0 },
            Selector { i: 1, j: 1, m: 1 },
        ]
    }

    pub fn label(&self) -> String {
        format!("{}{}{}", self.i, self.j, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    FrontFamily,
    ScalarKPPFamily,
}

/// A smooth branch of one of the `max`/`min` components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    /// Front evaluated at `x + ct`.
    FrontPlus,
    /// Reflected front, evaluated at `-x + ct`.
    FrontMinus,
    /// Diffusion-free orbit at `t`.
    Orbit,
}

/// A coupled super-/sub-solution pair with pointwise evaluators.
#[derive(Debug, Clone)]
pub struct SuperSubPair {
    pub family: Family,
    /// Branch selector; `None` for the scalar family.
    pub selector: Option<Selector>,
    pub model: ModelParams,
    /// `(x_range, t_range)` on which evaluations are trusted.
    pub domain: ((f64, f64), (f64, f64)),
    /// Max-norm residual of the underlying fronts; inequality slack scales
    /// with this.
    pub residual_norm: f64,
    front_u: FrontProfile,
    front_v: Option<FrontProfile>,
    orbit: Option<DiffusionFreeOrbit>,
}

fn boundary_deviation(front: &FrontProfile) -> f64 {
    let n = front.xi.len();
    let ((l0, l1), (r0, r1)) = front.limits;
    (front.phi[0] - l0)
        .abs()
        .max((front.psi[0] - l1).abs())
        .max((front.phi[n - 1] - r0).abs())
        .max((front.psi[n - 1] - r1).abs())
}

/// Build the first family: `ubar = 1`, `vlow = 0`,
/// `ulow = max{chi_i phi(x+ct), chi_j phi(-x+ct), chi_m p1(t)}` and
/// `vbar = min` of the analogous `psi`/`q1` branches.
pub fn build_front_family(
    front: &FrontProfile,
    orbit: &DiffusionFreeOrbit,
    selector: Selector,
) -> Result<SuperSubPair> {
    Selector::new(selector.i, selector.j, selector.m)?;
    if front.kind != FrontKind::SystemFront {
        return Err(LvError::Config(
            "front family needs a system front connecting (0,0) to (u*,v*)".into(),
        ));
    }
    if front.model != orbit.model {
        return Err(LvError::Config(
            "front and orbit must come from the same model".into(),
        ));
    }
    let dev = boundary_deviation(front);
    if dev > TAIL_TOL {
        return Err(LvError::DomainExceeded(format!(
            "front boundary deviation {dev:.3e} exceeds the tail tolerance {TAIL_TOL:.0e}"
        )));
    }
    let (us, vs) = front.model.coexistence()?;
    let n = orbit.t_grid.len();
    let orbit_dev = orbit.p1[0]
        .abs()
        .max(orbit.q1[0].abs())
        .max((orbit.p1[n - 1] - us).abs())
        .max((orbit.q1[n - 1] - vs).abs());
    if selector.m == 1 && orbit_dev > TAIL_TOL {
        return Err(LvError::DomainExceeded(format!(
            "orbit endpoint deviation {orbit_dev:.3e} exceeds the tail tolerance {TAIL_TOL:.0e}"
        )));
    }
    let t_range = if selector.m == 1 {
        (orbit.t_grid[0], orbit.t_grid[n - 1])
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Ok(SuperSubPair {
        family: Family::FrontFamily,
        selector: Some(selector),
        model: front.model,
        domain: ((f64::NEG_INFINITY, f64::INFINITY), t_range),
        residual_norm: front.residual_norm,
        front_u: front.clone(),
        front_v: None,
        orbit: Some(orbit.clone()),
    })
}

/// Build the second family from two scalar KPP fronts: `ubar = vbar = 1`,
/// `ulow = max{phi(x+s1 t), phi(-x+s1 t)}`,
/// `vlow = max{psi(x+s2 t), psi(-x+s2 t)}`.
pub fn build_scalar_family(front_u: &FrontProfile, front_v: &FrontProfile) -> Result<SuperSubPair> {
    if front_u.kind != FrontKind::ScalarU || front_v.kind != FrontKind::ScalarV {
        return Err(LvError::Config(
            "scalar family needs one ScalarU and one ScalarV front".into(),
        ));
    }
    if front_u.model != front_v.model {
        return Err(LvError::Config(
            "scalar fronts must come from the same model".into(),
        ));
    }
    for (front, which) in [(front_u, ScalarEq::UEq), (front_v, ScalarEq::VEq)] {
        // re-validates the minimal speed
        ScalarEquation::from_model(&front.model, which, front.c)?;
        let dev = boundary_deviation(front);
        if dev > TAIL_TOL {
            return Err(LvError::DomainExceeded(format!(
                "scalar front boundary deviation {dev:.3e} exceeds the tail tolerance {TAIL_TOL:.0e}"
            )));
        }
    }
    Ok(SuperSubPair {
        family: Family::ScalarKPPFamily,
        selector: None,
        model: front_u.model,
        domain: (
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        ),
        residual_norm: front_u.residual_norm.max(front_v.residual_norm),
        front_u: front_u.clone(),
        front_v: Some(front_v.clone()),
        orbit: None,
    })
}

impl SuperSubPair {
    /// Active branches of the sub-`u` component, as `(value, branch)`.
    fn branches_u(&self, x: f64, t: f64) -> Vec<(f64, Branch)> {
        let mut out = Vec::with_capacity(3);
        match self.family {
            Family::FrontFamily => {
                let s = self.selector.expect("front family has a selector");
                let c = self.front_u.c;
                if s.i == 1 {
                    out.push((self.front_u.eval_phi(x + c * t), Branch::FrontPlus));
                }
                if s.j == 1 {
                    out.push((self.front_u.eval_phi(-x + c * t), Branch::FrontMinus));
                }
                if s.m == 1 {
                    let orbit = self.orbit.as_ref().expect("front family has an orbit");
                    out.push((orbit.eval(t).0, Branch::Orbit));
                }
            }
            Family::ScalarKPPFamily => {
                let s1 = self.front_u.c;
                out.push((self.front_u.eval_phi(x + s1 * t), Branch::FrontPlus));
                out.push((self.front_u.eval_phi(-x + s1 * t), Branch::FrontMinus));
            }
        }
        out
    }

    /// Active branches of the second sub/super component: `vbar` for the
    /// front family (`min`), `vlow` for the scalar family (`max`).
    fn branches_v(&self, x: f64, t: f64) -> Vec<(f64, Branch)> {
        let mut out = Vec::with_capacity(3);
        match self.family {
            Family::FrontFamily => {
                let s = self.selector.expect("front family has a selector");
                let c = self.front_u.c;
                if s.i == 1 {
                    out.push((self.front_u.eval_psi(x + c * t), Branch::FrontPlus));
                }
                if s.j == 1 {
                    out.push((self.front_u.eval_psi(-x + c * t), Branch::FrontMinus));
                }
                if s.m == 1 {
                    let orbit = self.orbit.as_ref().expect("front family has an orbit");
                    out.push((orbit.eval(t).1, Branch::Orbit));
                }
            }
            Family::ScalarKPPFamily => {
                let fv = self.front_v.as_ref().expect("scalar family has front_v");
                let s2 = fv.c;
                out.push((fv.eval_psi(x + s2 * t), Branch::FrontPlus));
                out.push((fv.eval_psi(-x + s2 * t), Branch::FrontMinus));
            }
        }
        out
    }

    pub fn super_u(&self, _x: f64, _t: f64) -> f64 {
        1.0
    }

    pub fn sub_u(&self, x: f64, t: f64) -> f64 {
        self.branches_u(x, t)
            .into_iter()
            .fold(f64::NEG_INFINITY, |m, (v, _)| m.max(v))
    }

    pub fn super_v(&self, x: f64, t: f64) -> f64 {
        match self.family {
            Family::FrontFamily => self
                .branches_v(x, t)
                .into_iter()
                .fold(f64::INFINITY, |m, (v, _)| m.min(v)),
            Family::ScalarKPPFamily => 1.0,
        }
    }

    pub fn sub_v(&self, x: f64, t: f64) -> f64 {
        match self.family {
            Family::FrontFamily => 0.0,
            Family::ScalarKPPFamily => self
                .branches_v(x, t)
                .into_iter()
                .fold(f64::NEG_INFINITY, |m, (v, _)| m.max(v)),
        }
    }
}

/// Uniform space-time lattice for the inequality verification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lattice {
    pub x: (f64, f64),
    pub nx: usize,
    pub t: (f64, f64),
    pub nt: usize,
}

impl Lattice {
    pub fn new(x: (f64, f64), nx: usize, t: (f64, f64), nt: usize) -> Result<Self> {
        if !(x.1 > x.0) || !(t.1 > t.0) || nx < 2 || nt < 2 {
            return Err(LvError::Config(format!(
                "lattice needs increasing ranges and at least 2 points per axis, got x={x:?} ({nx}), t={t:?} ({nt})"
            )));
        }
        Ok(Lattice { x, nx, t, nt })
    }
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice {
            x: (-20.0, 20.0),
            nx: 201,
            t: (-5.0, 5.0),
            nt: 201,
        }
    }
}

/// Outcome of a lattice verification of the coupled inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCertificate {
    pub family: Family,
    pub selector: Option<Selector>,
    pub lattice: Lattice,
    pub ridge_margin: f64,
    pub slack: f64,
    /// Most positive sub-`u` residual (must stay `<= slack`).
    pub worst_sub_u: f64,
    /// Most positive sub-`v` residual.
    pub worst_sub_v: f64,
    /// Most negative super-`u` residual (must stay `>= -slack`).
    pub worst_super_u: f64,
    /// Most negative super-`v` residual.
    pub worst_super_v: f64,
    pub ridge_points_skipped: usize,
    pub lattice_points: usize,
    pub pass: bool,
}

/// Largest and second-largest entries (`min` handled by negation upstream).
fn max_with_margin(vals: &[(f64, Branch)]) -> (f64, Branch, f64) {
    let mut best = (f64::NEG_INFINITY, Branch::FrontPlus);
    let mut second = f64::NEG_INFINITY;
    for &(v, b) in vals {
        if v > best.0 {
            second = best.0;
            best = (v, b);
        } else if v > second {
            second = v;
        }
    }
    (best.0, best.1, best.0 - second)
}

/// Verify the four coupled inequalities on a lattice.
///
/// At each lattice point the active branch of every `max`/`min` component is
/// identified; when the winning margin is below `ridge_margin` the point is
/// skipped and counted. On a unique branch the residual is the analytic
/// closed form obtained by substituting the branch's ODE, so the checks do
/// not rely on finite-differencing the non-smooth evaluators. The allowed
/// slack is `10 x` the residual norm of the underlying fronts.
pub fn verify_inequalities(
    pair: &SuperSubPair,
    lattice: Lattice,
    ridge_margin: f64,
) -> Result<InequalityCertificate> {
    let ((xd0, xd1), (td0, td1)) = pair.domain;
    if lattice.x.0 < xd0 || lattice.x.1 > xd1 || lattice.t.0 < td0 || lattice.t.1 > td1 {
        return Err(LvError::DomainExceeded(format!(
            "lattice {:?} x {:?} outside the pair domain",
            lattice.x, lattice.t
        )));
    }
    let ModelParams { k1, k2, r, .. } = pair.model;
    let slack = 10.0 * pair.residual_norm;
    let hx = (lattice.x.1 - lattice.x.0) / (lattice.nx - 1) as f64;
    let ht = (lattice.t.1 - lattice.t.0) / (lattice.nt - 1) as f64;

    let mut worst_sub_u = f64::NEG_INFINITY;
    let mut worst_sub_v = f64::NEG_INFINITY;
    let mut worst_super_u = f64::INFINITY;
    let mut worst_super_v = f64::INFINITY;
    let mut skipped = 0usize;
    let mut worst_point: Option<(f64, f64, f64, &'static str)> = None;

    for it in 0..lattice.nt {
        let t = lattice.t.0 + it as f64 * ht;
        for ix in 0..lattice.nx {
            let x = lattice.x.0 + ix as f64 * hx;
            let bu = pair.branches_u(x, t);
            let bv = pair.branches_v(x, t);
            let (u_val, u_branch, u_margin) = max_with_margin(&bu);
            // the front family takes a min over the v branches
            let (v_val, v_branch, v_margin) = match pair.family {
                Family::FrontFamily => {
                    let neg: Vec<(f64, Branch)> = bv.iter().map(|&(v, b)| (-v, b)).collect();
                    let (v, b, m) = max_with_margin(&neg);
                    (-v, b, m)
                }
                Family::ScalarKPPFamily => max_with_margin(&bv),
            };
            if u_margin < ridge_margin || v_margin < ridge_margin {
                skipped += 1;
                continue;
            }

            // partner value of the front branch with the same argument
            let c = pair.front_u.c;
            let psi_at = |b: Branch| -> f64 {
                match b {
                    Branch::FrontPlus => pair.front_u.eval_psi(x + c * t),
                    Branch::FrontMinus => pair.front_u.eval_psi(-x + c * t),
                    Branch::Orbit => pair.orbit.as_ref().unwrap().eval(t).1,
                }
            };
            let phi_at = |b: Branch| -> f64 {
                match b {
                    Branch::FrontPlus => pair.front_u.eval_phi(x + c * t),
                    Branch::FrontMinus => pair.front_u.eval_phi(-x + c * t),
                    Branch::Orbit => pair.orbit.as_ref().unwrap().eval(t).0,
                }
            };

            let (rsu, rsv, rpu, rpv) = match pair.family {
                Family::FrontFamily => {
                    // F3(ulow, vbar) = k1 ulow (vbar - psi_partner) <= 0
                    let rsu = k1 * u_val * (v_val - psi_at(u_branch));
                    // F4(vbar, ulow) = r k2 vbar (ulow - phi_partner) >= 0
                    let rpv = r * k2 * v_val * (u_val - phi_at(v_branch));
                    // F3(1, 0) = 0 and F4(0, 1) = 0 exactly
                    (rsu, 0.0, 0.0, rpv)
                }
                Family::ScalarKPPFamily => {
                    // each scalar front solves its own shifted logistic wave
                    // equation, so the sub residuals vanish identically;
                    // F3(1, vlow) = k1 vlow >= 0, F4(1, ulow) = r k2 ulow
                    (0.0, 0.0, k1 * v_val, r * k2 * u_val)
                }
            };

            if rsu > worst_sub_u {
                worst_sub_u = rsu;
                if rsu > slack {
                    worst_point = Some((x, t, rsu, "sub-u"));
                }
            }
            if rsv > worst_sub_v {
                worst_sub_v = rsv;
                if rsv > slack {
                    worst_point = Some((x, t, rsv, "sub-v"));
                }
            }
            if rpu < worst_super_u {
                worst_super_u = rpu;
                if rpu < -slack {
                    worst_point = Some((x, t, rpu, "super-u"));
                }
            }
            if rpv < worst_super_v {
                worst_super_v = rpv;
                if rpv < -slack {
                    worst_point = Some((x, t, rpv, "super-v"));
                }
            }
        }
    }

    if let Some((x, t, residual, which)) = worst_point {
        return Err(LvError::InequalityViolated {
            x,
            t,
            residual,
            which: which.into(),
        });
    }
    let pass = worst_sub_u <= slack
        && worst_sub_v <= slack
        && worst_super_u >= -slack
        && worst_super_v >= -slack;
    Ok(InequalityCertificate {
        family: pair.family,
        selector: pair.selector,
        lattice,
        ridge_margin,
        slack,
        worst_sub_u,
        worst_sub_v,
        worst_super_u,
        worst_super_v,
        ridge_points_skipped: skipped,
        lattice_points: lattice.nx * lattice.nt,
        pass,
    })
}
