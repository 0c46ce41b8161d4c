//! Traveling-front profiles: the system front connecting the origin to the
//! coexistence state and the scalar KPP fronts, computed by Newton
//! collocation on a truncated interval, plus tail-rate fits and the tail
//! constants used by the super-/sub-solution construction.
//!
//! Boundary treatment: every direction at the origin is unstable for
//! admissible speeds, so left boundary conditions are vacuous and their row
//! slots go to a phase condition (pinning the translation mode) and, for the
//! system front, an extra right-boundary projection selecting the profile
//! that approaches coexistence at the pure fast-stable rate. The remaining
//! right conditions express that the deviation from the limit state is
//! orthogonal to the left eigenvectors of the unwanted modes of the
//! linearization. The exact phase normalization `phi(0) = limit/2` is
//! applied as a grid shift after convergence.

use serde::Serialize;

use crate::error::{LvError, Result};
use crate::linalg::{fd_weights, BandedMatrix};
use crate::model::ModelParams;
use crate::spectral::{
    self, coexistence_eigenvalues, linearize, nullspace4, origin_eigenvalues, BasePoint, Side,
    WaveParams,
};

/// Uniform collocation grid on `[-l, l]` with `n` nodes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub l: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { l: 60.0, n: 2001 }
    }
}

/// Target spacing used by the automatic grid sizing.
const AUTO_H: f64 = 0.02;

/// Discrete slopes above `-MONOTONE_ROUNDOFF` still count as monotone.
const MONOTONE_ROUNDOFF: f64 = 1e-12;

impl GridSpec {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l > 0.0) || n < 9 {
            return Err(LvError::Config(format!(
                "grid needs l > 0 and n >= 9, got l={l}, n={n}"
            )));
        }
        Ok(GridSpec { l, n })
    }

    fn from_rate(rate: f64, boundary_tol: f64) -> Result<Self> {
        if !(rate > 0.0) || !(boundary_tol > 0.0 && boundary_tol < 1.0) {
            return Err(LvError::Config(format!(
                "grid sizing needs positive decay rate and tol in (0,1), got {rate}, {boundary_tol}"
            )));
        }
        let l = 1.2 * (1.0 / boundary_tol).ln() / rate;
        let n = ((2.0 * l / AUTO_H).round() as usize + 1).max(9);
        GridSpec::new(l, n)
    }

    /// Half-length chosen so the slowest tail reaches `boundary_tol` at the
    /// ends, spacing near the default target.
    pub fn auto(wave: &WaveParams, boundary_tol: f64) -> Result<Self> {
        let (_, l4, _, l6) = origin_eigenvalues(wave)?;
        let spec = coexistence_eigenvalues(wave)?;
        let rate = l4.min(l6).min(-spec.lambda2);
        Self::from_rate(rate, boundary_tol)
    }

    /// Grid sizing for a scalar KPP front with limit `a` and speed `s`.
    pub fn auto_scalar(eq: &ScalarEquation, boundary_tol: f64) -> Result<Self> {
        let left = eq.slow_left_rate()?;
        let right = -eq.mu_minus();
        Self::from_rate(left.min(right), boundary_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrontKind {
    SystemFront,
    ScalarU,
    ScalarV,
}

/// Which scalar equation of the second super-/sub-solution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalarEq {
    UEq,
    VEq,
}

/// Normalized scalar front problem `diff * w'' - s w' + rate * w (a - w) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarEquation {
    pub diff: f64,
    pub rate: f64,
    pub a: f64,
    pub s: f64,
}

impl ScalarEquation {
    pub fn from_model(model: &ModelParams, which: ScalarEq, s: f64) -> Result<Self> {
        if !model.is_weak_competition() {
            return Err(LvError::DegenerateRegime(
                "scalar fronts require weak competition".into(),
            ));
        }
        let eq = match which {
            ScalarEq::UEq => ScalarEquation {
                diff: 1.0,
                rate: 1.0,
                a: 1.0 - model.k1,
                s,
            },
            ScalarEq::VEq => ScalarEquation {
                diff: model.d,
                rate: model.r,
                a: 1.0 - model.k2,
                s,
            },
        };
        let s_min = eq.s_min();
        if s < s_min - 1e-12 {
            return Err(LvError::SubminimalSpeed { c: s, c_min: s_min });
        }
        Ok(eq)
    }

    pub fn s_min(&self) -> f64 {
        2.0 * (self.diff * self.rate * self.a).sqrt()
    }

    /// Negative decay rate at the `w = a` end.
    pub fn mu_minus(&self) -> f64 {
        (self.s - (self.s * self.s + 4.0 * self.diff * self.rate * self.a).sqrt())
            / (2.0 * self.diff)
    }

    /// Slower positive growth rate at the `w = 0` end.
    pub fn slow_left_rate(&self) -> Result<f64> {
        let disc = self.s * self.s - 4.0 * self.diff * self.rate * self.a;
        if disc < -1e-12 * (1.0 + self.s * self.s) {
            return Err(LvError::SubminimalSpeed {
                c: self.s,
                c_min: self.s_min(),
            });
        }
        Ok((self.s - disc.max(0.0).sqrt()) / (2.0 * self.diff))
    }
}

/// A converged front profile on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct FrontProfile {
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub c: f64,
    pub kind: FrontKind,
    /// Max-norm collocation residual of the solver's own discretization.
    pub residual_norm: f64,
    /// Max-norm residual of an independent midpoint discretization.
    pub midpoint_residual: f64,
    /// `((phi, psi) at -infinity, (phi, psi) at +infinity)`.
    pub limits: ((f64, f64), (f64, f64)),
    pub model: ModelParams,
}

impl FrontProfile {
    #[inline]
    pub fn h(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }

    fn eval_component(&self, vals: &[f64], ders: &[f64], limits: (f64, f64), x: f64) -> (f64, f64) {
        let n = vals.len();
        let h = self.h();
        let (x0, xn) = (self.xi[0], self.xi[n - 1]);
        if x < x0 {
            // exponential tail anchored one node in (node 0 may be an exact
            // zero from the Dirichlet condition)
            let dist = vals[1] - limits.0;
            let der = ders[1];
            if dist.abs() < 1e-300 || der / dist <= 0.0 {
                return (vals[1], 0.0);
            }
            let mu = der / dist;
            let e = (mu * (x - self.xi[1])).exp();
            return (limits.0 + dist * e, dist * mu * e);
        }
        if x > xn {
            let dist = limits.1 - vals[n - 1];
            let der = ders[n - 1];
            if dist.abs() < 1e-300 || der / dist <= 0.0 {
                return (vals[n - 1], 0.0);
            }
            let mu = der / dist;
            let e = (-mu * (x - xn)).exp();
            return (limits.1 - dist * e, dist * mu * e);
        }
        let mut i = ((x - x0) / h).floor() as usize;
        if i >= n - 1 {
            i = n - 2;
        }
        let t = (x - self.xi[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * vals[i] + h10 * h * ders[i] + h01 * vals[i + 1] + h11 * h * ders[i + 1];
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let d = d00 * vals[i] + d10 * ders[i] + d01 * vals[i + 1] + d11 * ders[i + 1];
        (v, d)
    }

    pub fn eval_phi(&self, x: f64) -> f64 {
        self.eval_component(&self.phi, &self.dphi, (self.limits.0 .0, self.limits.1 .0), x)
            .0
    }

    pub fn eval_psi(&self, x: f64) -> f64 {
        self.eval_component(&self.psi, &self.dpsi, (self.limits.0 .1, self.limits.1 .1), x)
            .0
    }

    pub fn eval_dphi(&self, x: f64) -> f64 {
        self.eval_component(&self.phi, &self.dphi, (self.limits.0 .0, self.limits.1 .0), x)
            .1
    }

    pub fn eval_dpsi(&self, x: f64) -> f64 {
        self.eval_component(&self.psi, &self.dpsi, (self.limits.0 .1, self.limits.1 .1), x)
            .1
    }

    /// CSV export with the scalar metadata in comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# c = {}\n", self.c));
        out.push_str(&format!("# kind = {:?}\n", self.kind));
        out.push_str(&format!("# residual_norm = {}\n", self.residual_norm));
        out.push_str(&format!(
            "# midpoint_residual = {}\n",
            self.midpoint_residual
        ));
        out.push_str("xi,phi,psi,dphi,dpsi\n");
        for i in 0..self.xi.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.xi[i], self.phi[i], self.psi[i], self.dphi[i], self.dpsi[i]
            ));
        }
        out
    }
}

/// Spatial reflection `xi -> -xi`: an exact bitwise involution on the stored
/// arrays. The reflected profile travels with the opposite speed and has
/// strictly negative slopes.
pub fn reflect(front: &FrontProfile) -> FrontProfile {
    let flip = |v: &[f64]| -> Vec<f64> { v.iter().rev().copied().collect() };
    let flip_neg = |v: &[f64]| -> Vec<f64> { v.iter().rev().map(|x| -x).collect() };
    FrontProfile {
        xi: flip_neg(&front.xi),
        phi: flip(&front.phi),
        psi: flip(&front.psi),
        dphi: flip_neg(&front.dphi),
        dpsi: flip_neg(&front.dpsi),
        c: -front.c,
        kind: front.kind,
        residual_norm: front.residual_norm,
        midpoint_residual: front.midpoint_residual,
        limits: (front.limits.1, front.limits.0),
        model: front.model,
    }
}

// ---------------------------------------------------------------------------
// Newton collocation

struct Stencils {
    w5_1: [f64; 5],
    w5_2: [f64; 5],
    w3_1: [f64; 3],
    w3_2: [f64; 3],
    /// one-sided first derivative at the last node over the last 5 nodes
    w5_end: [f64; 5],
}

fn stencils(h: f64) -> Stencils {
    let scale = |w: Vec<f64>, p: i32| -> Vec<f64> { w.iter().map(|x| x / h.powi(p)).collect() };
    let to5 = |v: Vec<f64>| -> [f64; 5] { [v[0], v[1], v[2], v[3], v[4]] };
    let to3 = |v: Vec<f64>| -> [f64; 3] { [v[0], v[1], v[2]] };
    let c5: Vec<f64> = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
    let c3: Vec<f64> = vec![-1.0, 0.0, 1.0];
    let e5: Vec<f64> = vec![-4.0, -3.0, -2.0, -1.0, 0.0];
    Stencils {
        w5_1: to5(scale(fd_weights(&c5, 1), 1)),
        w5_2: to5(scale(fd_weights(&c5, 2), 2)),
        w3_1: to3(scale(fd_weights(&c3, 1), 1)),
        w3_2: to3(scale(fd_weights(&c3, 2), 2)),
        w5_end: to5(scale(fd_weights(&e5, 1), 1)),
    }
}

fn newton_solve<FRes, FJac>(
    mut z: Vec<f64>,
    kl: usize,
    ku: usize,
    residual: FRes,
    jacobian: FJac,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)>
where
    FRes: Fn(&[f64]) -> Vec<f64>,
    FJac: Fn(&[f64], &mut BandedMatrix),
{
    let n = z.len();
    let mut f = residual(&z);
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut fnorm = norm(&f);
    for _ in 0..max_iter {
        if fnorm < tol {
            return Ok((z, fnorm));
        }
        let mut jac = BandedMatrix::zeros(n, kl, ku);
        jacobian(&z, &mut jac);
        let ipiv = jac.lu_factor()?;
        let mut step: Vec<f64> = f.iter().map(|x| -x).collect();
        jac.lu_solve(&ipiv, &mut step);
        // damped acceptance
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a + lambda * s).collect();
            let ft = residual(&trial);
            let fn_t = norm(&ft);
            if fn_t < (1.0 - 0.25 * lambda) * fnorm || lambda < 1e-4 {
                z = trial;
                f = ft;
                fnorm = fn_t;
                break;
            }
            lambda *= 0.5;
        }
    }
    if fnorm < tol {
        Ok((z, fnorm))
    } else {
        Err(LvError::NoConvergence { residual: fnorm })
    }
}

/// Left eigenvectors of `m` for eigenvalue `lambda` (rows `w` with
/// `w m = lambda w`).
fn left_eigenvector(m: &nalgebra::Matrix4<f64>, lambda: f64) -> Result<[f64; 4]> {
    let bt = m.transpose() - nalgebra::Matrix4::identity() * lambda;
    let ns = nullspace4(&bt, 1e-9 * (1.0 + lambda.abs()));
    let v = ns.first().ok_or(LvError::NotAnEigenvalue {
        lambda,
        residual: f64::NAN,
    })?;
    Ok([v[0], v[1], v[2], v[3]])
}

fn derivatives_on_grid(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    let mut d = vec![0.0; n];
    let w_c = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
    let w_0 = fd_weights(&[0.0, 1.0, 2.0, 3.0, 4.0], 1);
    let w_1 = fd_weights(&[-1.0, 0.0, 1.0, 2.0, 3.0], 1);
    let w_m2 = fd_weights(&[-3.0, -2.0, -1.0, 0.0, 1.0], 1);
    let w_m1 = fd_weights(&[-4.0, -3.0, -2.0, -1.0, 0.0], 1);
    let apply = |i0: usize, w: &[f64]| -> f64 {
        w.iter()
            .enumerate()
            .map(|(j, &wj)| wj * vals[i0 + j])
            .sum::<f64>()
            / h
    };
    for i in 0..n {
        d[i] = if i == 0 {
            apply(0, &w_0)
        } else if i == 1 {
            apply(0, &w_1)
        } else if i == n - 2 {
            apply(n - 5, &w_m2)
        } else if i == n - 1 {
            apply(n - 5, &w_m1)
        } else {
            apply(i - 2, &w_c)
        };
    }
    d
}

/// Max residual of the wave ODEs evaluated at grid-cell midpoints with
/// 6-point stencils — a discretization independent of the solver's.
fn midpoint_residual_system(
    xi: &[f64],
    phi: &[f64],
    psi: &[f64],
    wave: &WaveParams,
) -> f64 {
    let h = xi[1] - xi[0];
    let offs = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5];
    let w0 = fd_weights(&offs, 0);
    let w1 = fd_weights(&offs, 1);
    let w2 = fd_weights(&offs, 2);
    let ModelParams { k1, k2, r, d } = wave.model;
    let c = wave.c;
    let n = xi.len();
    let mut worst = 0.0f64;
    for i in 3..n - 3 {
        // midpoint between nodes i-1 and i, using nodes i-3..=i+2
        let mut pu = [0.0; 3];
        let mut pv = [0.0; 3];
        for j in 0..6 {
            let (u, v) = (phi[i - 3 + j], psi[i - 3 + j]);
            pu[0] += w0[j] * u;
            pu[1] += w1[j] * u;
            pu[2] += w2[j] * u;
            pv[0] += w0[j] * v;
            pv[1] += w1[j] * v;
            pv[2] += w2[j] * v;
        }
        pu[1] /= h;
        pu[2] /= h * h;
        pv[1] /= h;
        pv[2] /= h * h;
        let ru = pu[2] - c * pu[1] + pu[0] * (1.0 - pu[0] - k1 * pv[0]);
        let rv = d * pv[2] - c * pv[1] + r * pv[0] * (1.0 - pv[0] - k2 * pu[0]);
        worst = worst.max(ru.abs()).max(rv.abs());
    }
    worst
}

fn midpoint_residual_scalar(xi: &[f64], w: &[f64], eq: &ScalarEquation) -> f64 {
    let h = xi[1] - xi[0];
    let offs = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5];
    let w0 = fd_weights(&offs, 0);
    let w1 = fd_weights(&offs, 1);
    let w2 = fd_weights(&offs, 2);
    let n = xi.len();
    let mut worst = 0.0f64;
    for i in 3..n - 3 {
        let mut p = [0.0; 3];
        for j in 0..6 {
            p[0] += w0[j] * w[i - 3 + j];
            p[1] += w1[j] * w[i - 3 + j];
            p[2] += w2[j] * w[i - 3 + j];
        }
        p[1] /= h;
        p[2] /= h * h;
        let r = eq.diff * p[2] - eq.s * p[1] + eq.rate * p[0] * (eq.a - p[0]);
        worst = worst.max(r.abs());
    }
    worst
}

/// Shift the grid so the interpolated `phi` crosses `target` at `xi = 0`.
fn phase_shift(xi: &mut [f64], phi: &[f64], dphi: &[f64], target: f64) {
    let n = xi.len();
    let mut k = None;
    for i in 0..n - 1 {
        if (phi[i] - target) * (phi[i + 1] - target) <= 0.0 && phi[i] != phi[i + 1] {
            k = Some(i);
            break;
        }
    }
    let Some(i) = k else { return };
    // Newton on the Hermite cubic in the bracketing cell
    let h = xi[1] - xi[0];
    let mut t = (target - phi[i]) / (phi[i + 1] - phi[i]);
    for _ in 0..40 {
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * phi[i]
            + (t3 - 2.0 * t2 + t) * h * dphi[i]
            + (-2.0 * t3 + 3.0 * t2) * phi[i + 1]
            + (t3 - t2) * h * dphi[i + 1];
        let dv = (6.0 * t2 - 6.0 * t) * phi[i]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * dphi[i]
            + (-6.0 * t2 + 6.0 * t) * phi[i + 1]
            + (3.0 * t2 - 2.0 * t) * h * dphi[i + 1];
        if dv == 0.0 {
            break;
        }
        let step = (v - target) / dv;
        t -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let shift = xi[i] + t.clamp(0.0, 1.0) * h;
    for x in xi.iter_mut() {
        *x -= shift;
    }
}

/// Interval ladder for domain continuation: short intervals converge from a
/// crude guess, longer ones reuse the previous profile with its exponential
/// tails as the guess.
fn continuation_lengths(l: f64) -> Vec<f64> {
    let mut stages = vec![l];
    while *stages.last().unwrap() > 16.0 {
        let next = stages.last().unwrap() / 2.0;
        stages.push(next);
    }
    stages.reverse();
    stages
}

fn stage_grid(l: f64, h: f64) -> Vec<f64> {
    let n = ((2.0 * l / h).round() as usize + 1).max(9);
    let hh = 2.0 * l / (n - 1) as f64;
    (0..n).map(|i| -l + i as f64 * hh).collect()
}

/// Index of the node closest to `xi = 0`, where the phase is pinned.
fn center_node(xi: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xi.iter().enumerate() {
        if x.abs() < xi[best].abs() {
            best = i;
        }
    }
    best.clamp(2, xi.len() - 3)
}

/// One Newton solve of the coupled collocation system on a fixed grid.
///
/// The translation freedom of the front makes a purely boundary-pinned
/// formulation effectively singular once the boundary values drop below
/// roundoff (Newton steps blow up along the translation mode and the line
/// search stalls), so the translation is pinned by the phase condition
/// `phi(0) = u*/2` instead. Every origin eigenvalue points away from the
/// left boundary, so both left Dirichlet conditions are superfluous and
/// their row slots are reused. The freed slots pay for the phase row plus a
/// third right-boundary projection: besides killing the two unstable modes
/// of A1, the deviation is also made orthogonal to the slow stable mode
/// lambda1. Without that row the problem is genuinely underdetermined — the
/// connections form a one-parameter family beyond translation whose tangent
/// decays like e^{lambda1 xi}, and Newton creeps along it; the front sought
/// here is the member approaching coexistence at the pure lambda2 rate. To
/// keep the matrix banded, the collocation rows for nodes `1..=i0` sit two
/// slots below their natural position, those for later nodes one slot, and
/// the phase row occupies slot `2*i0`.
fn system_newton(wave: &WaveParams, xi: &[f64], z0: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let (us, vs) = wave.model.coexistence()?;
    let ModelParams { k1, k2, r, d } = wave.model;
    let c = wave.c;
    let n = xi.len();
    let h = xi[1] - xi[0];
    let st = stencils(h);
    let i0 = center_node(xi);
    let row_u = move |i: usize| -> usize { if i <= i0 { 2 * i - 2 } else { 2 * i - 1 } };
    let row_v = move |i: usize| -> usize { if i <= i0 { 2 * i - 1 } else { 2 * i } };

    // right projections: deviation from (u*,0,v*,0) orthogonal to the left
    // eigenvectors of the unstable eigenvalues of A1 and of lambda1
    let a1 = linearize(wave, BasePoint::CoexistencePoint)?;
    let spec = coexistence_eigenvalues(wave)?;
    let w_a = left_eigenvector(&a1.entries, spec.positive.0)?;
    let w_b = left_eigenvector(&a1.entries, spec.positive.1)?;
    let w_s = left_eigenvector(&a1.entries, spec.lambda1)?;

    let residual = |z: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; 2 * n];
        f[2 * i0] = z[2 * i0] - us / 2.0;
        for i in 1..n - 1 {
            let (u, v) = (z[2 * i], z[2 * i + 1]);
            let (d2u, d1u, d2v, d1v) = if i >= 2 && i <= n - 3 {
                let mut acc = [0.0f64; 4];
                for j in 0..5 {
                    let (uu, vv) = (z[2 * (i - 2 + j)], z[2 * (i - 2 + j) + 1]);
                    acc[0] += st.w5_2[j] * uu;
                    acc[1] += st.w5_1[j] * uu;
                    acc[2] += st.w5_2[j] * vv;
                    acc[3] += st.w5_1[j] * vv;
                }
                (acc[0], acc[1], acc[2], acc[3])
            } else {
                let mut acc = [0.0f64; 4];
                for j in 0..3 {
                    let (uu, vv) = (z[2 * (i - 1 + j)], z[2 * (i - 1 + j) + 1]);
                    acc[0] += st.w3_2[j] * uu;
                    acc[1] += st.w3_1[j] * uu;
                    acc[2] += st.w3_2[j] * vv;
                    acc[3] += st.w3_1[j] * vv;
                }
                (acc[0], acc[1], acc[2], acc[3])
            };
            f[row_u(i)] = d2u - c * d1u + u * (1.0 - u - k1 * v);
            f[row_v(i)] = d * d2v - c * d1v + r * v * (1.0 - v - k2 * u);
        }
        // boundary deviation vector (phi-u*, phi', psi-v*, psi')
        let mut du = 0.0;
        let mut dv = 0.0;
        for j in 0..5 {
            du += st.w5_end[j] * z[2 * (n - 5 + j)];
            dv += st.w5_end[j] * z[2 * (n - 5 + j) + 1];
        }
        let y = [z[2 * (n - 1)] - us, du, z[2 * (n - 1) + 1] - vs, dv];
        f[2 * n - 3] = w_a.iter().zip(&y).map(|(a, b)| a * b).sum();
        f[2 * n - 2] = w_b.iter().zip(&y).map(|(a, b)| a * b).sum();
        f[2 * n - 1] = w_s.iter().zip(&y).map(|(a, b)| a * b).sum();
        f
    };

    let jacobian = |z: &[f64], jac: &mut BandedMatrix| {
        jac.set(2 * i0, 2 * i0, 1.0);
        for i in 1..n - 1 {
            let (u, v) = (z[2 * i], z[2 * i + 1]);
            let ru = row_u(i);
            let rv = row_v(i);
            if i >= 2 && i <= n - 3 {
                for j in 0..5 {
                    let col = i - 2 + j;
                    jac.add(ru, 2 * col, st.w5_2[j] - c * st.w5_1[j]);
                    jac.add(rv, 2 * col + 1, d * st.w5_2[j] - c * st.w5_1[j]);
                }
            } else {
                for j in 0..3 {
                    let col = i - 1 + j;
                    jac.add(ru, 2 * col, st.w3_2[j] - c * st.w3_1[j]);
                    jac.add(rv, 2 * col + 1, d * st.w3_2[j] - c * st.w3_1[j]);
                }
            }
            jac.add(ru, 2 * i, 1.0 - 2.0 * u - k1 * v);
            jac.add(ru, 2 * i + 1, -k1 * u);
            jac.add(rv, 2 * i + 1, r * (1.0 - 2.0 * v - k2 * u));
            jac.add(rv, 2 * i, -r * k2 * v);
        }
        for (row, w) in [(2 * n - 3, &w_a), (2 * n - 2, &w_b), (2 * n - 1, &w_s)] {
            for j in 0..5 {
                let col = n - 5 + j;
                jac.add(row, 2 * col, w[1] * st.w5_end[j]);
                jac.add(row, 2 * col + 1, w[3] * st.w5_end[j]);
            }
            jac.add(row, 2 * (n - 1), w[0]);
            jac.add(row, 2 * (n - 1) + 1, w[2]);
        }
    };

    newton_solve(z0, 9, 7, residual, jacobian, 1e-10, 80)
}

/// Assemble a throwaway profile for guess transfer between continuation
/// stages.
fn stage_profile(
    xi: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    c: f64,
    kind: FrontKind,
    limits: ((f64, f64), (f64, f64)),
    model: ModelParams,
) -> FrontProfile {
    let h = xi[1] - xi[0];
    FrontProfile {
        dphi: derivatives_on_grid(&phi, h),
        dpsi: derivatives_on_grid(&psi, h),
        xi,
        phi,
        psi,
        c,
        kind,
        residual_norm: 0.0,
        midpoint_residual: 0.0,
        limits,
        model,
    }
}

/// Solve the coupled system front connecting `(0, 0)` to `(u*, v*)`.
pub fn solve_system_front(wave: &WaveParams, grid: GridSpec) -> Result<FrontProfile> {
    if !wave.model.is_weak_competition() {
        return Err(LvError::DegenerateRegime(
            "system front requires weak competition".into(),
        ));
    }
    let cm = spectral::c_min(&wave.model);
    if wave.c < cm - 1e-12 {
        return Err(LvError::SubminimalSpeed {
            c: wave.c,
            c_min: cm,
        });
    }
    let (us, vs) = wave.model.coexistence()?;
    let ModelParams { k1, k2, r, d } = wave.model;
    let c = wave.c;
    let h = 2.0 * grid.l / (grid.n - 1) as f64;
    let xi: Vec<f64> = (0..grid.n).map(|i| -grid.l + i as f64 * h).collect();
    let limits = ((0.0, 0.0), (us, vs));

    let monotone = |z: &[f64]| -> f64 {
        let n = z.len() / 2;
        let phi: Vec<f64> = (0..n).map(|i| z[2 * i]).collect();
        let psi: Vec<f64> = (0..n).map(|i| z[2 * i + 1]).collect();
        let du = derivatives_on_grid(&phi, h);
        let dv = derivatives_on_grid(&psi, h);
        du[1..]
            .iter()
            .chain(dv[1..].iter())
            .fold(f64::INFINITY, |m, &x| m.min(x))
    };
    let solve_monotone = |wave_t: &WaveParams, xi: &[f64], z0: Vec<f64>| -> Result<Vec<f64>> {
        let (zt, _) = system_newton(wave_t, xi, z0)?;
        let worst_slope = monotone(&zt);
        // tolerate roundoff-scale negative slopes deep in the flat tails,
        // where the finite differences sit below double-precision noise
        if worst_slope <= -MONOTONE_ROUNDOFF {
            return Err(LvError::MonotonicityLost { worst_slope });
        }
        Ok(zt)
    };

    // Stage 1: short domain, where Newton's basin is wide. The identities
    // u* + k1 v* = 1 and k2 u* + v* = 1 make (phi, psi) = (u* W, v* W) an
    // exact front whenever r = d = 1, with W the classic single-species front
    // W'' - c W' + W(1 - W) = 0. That scaled profile seeds a homotopy
    // (r, d) = (r_target^t, d_target^t), t: 0 -> 1; along this path
    // sqrt(r d)^t stays between 1 and its target value, so the speed c stays
    // admissible at every step. A crude interface guess is not safe here:
    // Newton then creeps along a soft translation-like valley, or escapes to
    // a non-monotone connection in which phi overshoots towards the exclusion
    // state (1, 0).
    let l0 = grid.l.min(16.0);
    let xi0 = stage_grid(l0, h);
    let grid0 = GridSpec::new(-xi0[0], xi0.len())?;
    let weq = ScalarEquation {
        diff: 1.0,
        rate: 1.0,
        a: 1.0,
        s: c,
    };
    let (wvals, _, _, _, _) = solve_scalar_equation(&weq, grid0)?;
    let mut z: Vec<f64> = Vec::with_capacity(2 * xi0.len());
    for w in &wvals {
        z.push(us * w);
        z.push(vs * w);
    }

    let mut t = 0.0f64;
    let mut dt = 1.0f64;
    loop {
        let t_next = (t + dt).min(1.0);
        let model_t = ModelParams::new(k1, k2, r.powf(t_next), d.powf(t_next))?;
        let wave_t = WaveParams::new(model_t, c)?;
        match solve_monotone(&wave_t, &xi0, z.clone()) {
            Ok(zt) => {
                z = zt;
                t = t_next;
                if t >= 1.0 {
                    break;
                }
                dt = (2.0 * dt).min(1.0 - t);
            }
            Err(e) => {
                dt /= 2.0;
                if dt < 1.0 / 64.0 {
                    return Err(LvError::HomotopyBreak {
                        rho: t,
                        what: format!("front homotopy in (r, d) stalled: {e}"),
                    });
                }
            }
        }
    }

    // Stage 2: grow the domain towards the requested grid, re-solving from
    // the previous profile extended by its exponential tails. Each transfer
    // is accurate enough that Newton only performs a linear cleanup, which
    // stays reliable on long domains.
    let mut xi_cur = xi0;
    while xi_cur.len() < grid.n {
        let l_cur = -xi_cur[0];
        let next_l = (2.0 * l_cur).min(grid.l);
        let xi_next = if next_l >= grid.l {
            xi.clone()
        } else {
            stage_grid(next_l, h)
        };
        let n_cur = xi_cur.len();
        let phi: Vec<f64> = (0..n_cur).map(|i| z[2 * i]).collect();
        let psi: Vec<f64> = (0..n_cur).map(|i| z[2 * i + 1]).collect();
        let p = stage_profile(xi_cur, phi, psi, c, FrontKind::SystemFront, limits, wave.model);
        let mut z0 = Vec::with_capacity(2 * xi_next.len());
        for &x in &xi_next {
            z0.push(p.eval_phi(x).clamp(0.0, us));
            z0.push(p.eval_psi(x).clamp(0.0, vs));
        }
        z = solve_monotone(wave, &xi_next, z0)?;
        xi_cur = xi_next;
    }

    let phi: Vec<f64> = (0..grid.n).map(|i| z[2 * i]).collect();
    let psi: Vec<f64> = (0..grid.n).map(|i| z[2 * i + 1]).collect();
    let mut f = stage_profile(xi, phi, psi, c, FrontKind::SystemFront, limits, wave.model);
    f.residual_norm = node_residual_system(&f.xi, &f.phi, &f.psi, wave);
    f.midpoint_residual = midpoint_residual_system(&f.xi, &f.phi, &f.psi, wave);
    phase_shift(&mut f.xi, &f.phi, &f.dphi, us / 2.0);
    Ok(f)
}

/// Solve a scalar KPP front connecting `0` to `1 - k1` (resp. `1 - k2`).
pub fn solve_scalar_front(
    model: &ModelParams,
    which: ScalarEq,
    s: f64,
    grid: GridSpec,
) -> Result<FrontProfile> {
    let eq = ScalarEquation::from_model(model, which, s)?;
    let w = solve_scalar_equation(&eq, grid)?;
    let n = grid.n;
    let zeros = vec![0.0; n];
    let (phi, psi, dphi, dpsi, limits) = match which {
        ScalarEq::UEq => (
            w.0.clone(),
            zeros.clone(),
            w.1.clone(),
            zeros,
            ((0.0, 0.0), (eq.a, 0.0)),
        ),
        ScalarEq::VEq => (
            zeros.clone(),
            w.0.clone(),
            zeros,
            w.1.clone(),
            ((0.0, 0.0), (0.0, eq.a)),
        ),
    };
    Ok(FrontProfile {
        xi: w.2,
        phi,
        psi,
        dphi,
        dpsi,
        c: s,
        kind: match which {
            ScalarEq::UEq => FrontKind::ScalarU,
            ScalarEq::VEq => FrontKind::ScalarV,
        },
        residual_norm: w.3,
        midpoint_residual: w.4,
        limits,
        model: *model,
    })
}

fn scalar_newton(eq: &ScalarEquation, xi: &[f64], z0: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let n = xi.len();
    let h = xi[1] - xi[0];
    let st = stencils(h);
    let mu = eq.mu_minus();
    let (diff, s, rate, a) = (eq.diff, eq.s, eq.rate, eq.a);
    let i0 = center_node(xi);

    // The origin eigenvalue points away from the left boundary, so no left
    // condition is needed there; the freed row slot takes the phase condition
    // `w(0) = a/2` that pins the translation mode. To keep the matrix banded
    // the collocation rows for nodes 1..=i0 are shifted up by one: node i sits
    // in row i-1 for i <= i0, the phase row occupies row i0, and nodes above
    // i0 keep their natural row.
    let row_of = move |i: usize| -> usize { if i <= i0 { i - 1 } else { i } };

    let residual = |z: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; n];
        f[i0] = z[i0] - a / 2.0;
        for i in 1..n - 1 {
            let (d2, d1) = if i >= 2 && i <= n - 3 {
                let mut acc = [0.0f64; 2];
                for j in 0..5 {
                    acc[0] += st.w5_2[j] * z[i - 2 + j];
                    acc[1] += st.w5_1[j] * z[i - 2 + j];
                }
                (acc[0], acc[1])
            } else {
                let mut acc = [0.0f64; 2];
                for j in 0..3 {
                    acc[0] += st.w3_2[j] * z[i - 1 + j];
                    acc[1] += st.w3_1[j] * z[i - 1 + j];
                }
                (acc[0], acc[1])
            };
            f[row_of(i)] = diff * d2 - s * d1 + rate * z[i] * (a - z[i]);
        }
        let mut der = 0.0;
        for j in 0..5 {
            der += st.w5_end[j] * z[n - 5 + j];
        }
        f[n - 1] = der - mu * (z[n - 1] - a);
        f
    };
    let jacobian = |z: &[f64], jac: &mut BandedMatrix| {
        jac.set(i0, i0, 1.0);
        for i in 1..n - 1 {
            let row = row_of(i);
            if i >= 2 && i <= n - 3 {
                for j in 0..5 {
                    jac.add(row, i - 2 + j, diff * st.w5_2[j] - s * st.w5_1[j]);
                }
            } else {
                for j in 0..3 {
                    jac.add(row, i - 1 + j, diff * st.w3_2[j] - s * st.w3_1[j]);
                }
            }
            jac.add(row, i, rate * (a - 2.0 * z[i]));
        }
        for j in 0..5 {
            jac.add(n - 1, n - 5 + j, st.w5_end[j]);
        }
        jac.add(n - 1, n - 1, -mu);
    };

    newton_solve(z0, 4, 3, residual, jacobian, 1e-10, 80)
}

/// Collocation residual of the full ODE system at every interior node,
/// including the one replaced by the phase row during the solve.
fn node_residual_system(xi: &[f64], phi: &[f64], psi: &[f64], wave: &WaveParams) -> f64 {
    let n = xi.len();
    let h = xi[1] - xi[0];
    let st = stencils(h);
    let ModelParams { k1, k2, r, d } = wave.model;
    let c = wave.c;
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let (d2u, d1u, d2v, d1v) = if i >= 2 && i <= n - 3 {
            let mut acc = [0.0f64; 4];
            for j in 0..5 {
                acc[0] += st.w5_2[j] * phi[i - 2 + j];
                acc[1] += st.w5_1[j] * phi[i - 2 + j];
                acc[2] += st.w5_2[j] * psi[i - 2 + j];
                acc[3] += st.w5_1[j] * psi[i - 2 + j];
            }
            (acc[0], acc[1], acc[2], acc[3])
        } else {
            let mut acc = [0.0f64; 4];
            for j in 0..3 {
                acc[0] += st.w3_2[j] * phi[i - 1 + j];
                acc[1] += st.w3_1[j] * phi[i - 1 + j];
                acc[2] += st.w3_2[j] * psi[i - 1 + j];
                acc[3] += st.w3_1[j] * psi[i - 1 + j];
            }
            (acc[0], acc[1], acc[2], acc[3])
        };
        let ru = d2u - c * d1u + phi[i] * (1.0 - phi[i] - k1 * psi[i]);
        let rv = d * d2v - c * d1v + r * psi[i] * (1.0 - psi[i] - k2 * phi[i]);
        worst = worst.max(ru.abs()).max(rv.abs());
    }
    worst
}

fn node_residual_scalar(xi: &[f64], w: &[f64], eq: &ScalarEquation) -> f64 {
    let n = xi.len();
    let h = xi[1] - xi[0];
    let st = stencils(h);
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let (d2, d1) = if i >= 2 && i <= n - 3 {
            let mut acc = [0.0f64; 2];
            for j in 0..5 {
                acc[0] += st.w5_2[j] * w[i - 2 + j];
                acc[1] += st.w5_1[j] * w[i - 2 + j];
            }
            (acc[0], acc[1])
        } else {
            let mut acc = [0.0f64; 2];
            for j in 0..3 {
                acc[0] += st.w3_2[j] * w[i - 1 + j];
                acc[1] += st.w3_1[j] * w[i - 1 + j];
            }
            (acc[0], acc[1])
        };
        let res = eq.diff * d2 - eq.s * d1 + eq.rate * w[i] * (eq.a - w[i]);
        worst = worst.max(res.abs());
    }
    worst
}

/// Core scalar Newton collocation with domain continuation; returns
/// `(values, derivatives, xi, residual, midpoint residual)`.
pub fn solve_scalar_equation(
    eq: &ScalarEquation,
    grid: GridSpec,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
    let h = 2.0 * grid.l / (grid.n - 1) as f64;
    let stages = continuation_lengths(grid.l);
    let a = eq.a;
    let steep_base = eq.slow_left_rate()?.clamp(0.05, 2.0);

    let mut last_err = None;
    'steepness: for steep in [steep_base, 1.0, 2.0 * steep_base] {
        let mut prev: Option<FrontProfile> = None;
        for (k, &ls) in stages.iter().enumerate() {
            let xi = if k + 1 == stages.len() {
                (0..grid.n).map(|i| -grid.l + i as f64 * h).collect()
            } else {
                stage_grid(ls, h)
            };
            let n = xi.len();
            let z0: Vec<f64> = match &prev {
                None => xi
                    .iter()
                    .map(|&x| a / (1.0 + (-steep * x).exp()))
                    .collect(),
                Some(p) => xi.iter().map(|&x| p.eval_phi(x).clamp(0.0, a)).collect(),
            };
            match scalar_newton(eq, &xi, z0) {
                Ok((z, fnorm)) => {
                    let mut p = stage_profile(
                        xi,
                        z,
                        vec![0.0; n],
                        eq.s,
                        FrontKind::ScalarU,
                        ((0.0, 0.0), (a, 0.0)),
                        ModelParams {
                            k1: 0.5,
                            k2: 0.5,
                            r: 1.0,
                            d: 1.0,
                        },
                    );
                    p.residual_norm = fnorm;
                    prev = Some(p);
                }
                Err(e) => {
                    last_err = Some(e);
                    continue 'steepness;
                }
            }
        }
        let f = prev.expect("at least one continuation stage");
        let worst_slope = f.dphi[1..].iter().fold(f64::INFINITY, |m, &x| m.min(x));
        if worst_slope <= -MONOTONE_ROUNDOFF {
            last_err = Some(LvError::MonotonicityLost { worst_slope });
            continue 'steepness;
        }
        let res = node_residual_scalar(&f.xi, &f.phi, eq);
        let mid = midpoint_residual_scalar(&f.xi, &f.phi, eq);
        let mut xi_s = f.xi.clone();
        phase_shift(&mut xi_s, &f.phi, &f.dphi, a / 2.0);
        return Ok((f.phi, f.dphi, xi_s, res, mid));
    }
    Err(last_err.unwrap_or(LvError::NoConvergence { residual: f64::NAN }))
}

// ---------------------------------------------------------------------------
// tail analysis

/// Log-linear tail fit of one or both components.
#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub side: Side,
    pub fitted_rate: f64,
    /// Second-component rate, when the profile has two active components.
    pub fitted_rate_psi: Option<f64>,
    pub predicted_rate: f64,
    pub relative_error: f64,
    /// Distance-to-limit bounds actually used.
    pub window: (f64, f64),
    pub secular_detected: bool,
    /// psi-amplitude over phi-amplitude at +infinity (shared-rate coupling).
    pub amplitude_ratio: Option<f64>,
    pub r_squared: f64,
    pub points: usize,
}

/// Default fit window: distance-to-limit in `[1e-6, 1e-3]` of the limit
/// scale.
pub fn default_window(limit_scale: f64) -> (f64, f64) {
    (1e-6 * limit_scale, 1e-3 * limit_scale)
}

fn linreg(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse = syy - b * sxy;
    (a, b, sse.max(0.0), syy)
}

struct ComponentFit {
    rate: f64,
    intercept: f64,
    r2: f64,
    secular: bool,
    points: usize,
}

fn fit_component(
    xi: &[f64],
    vals: &[f64],
    limit: f64,
    side: Side,
    window: (f64, f64),
) -> Result<ComponentFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&x, &v) in xi.iter().zip(vals) {
        let dist = (limit - v).abs();
        if dist >= window.0 && dist <= window.1 {
            // keep only the correct side of the profile
            let ok = match side {
                Side::PlusInfinity => x > 0.0,
                Side::MinusInfinity => x < 0.0,
            };
            if ok {
                xs.push(x);
                ys.push(dist.ln());
            }
        }
    }
    if xs.len() < 8 {
        return Err(LvError::WindowTooNarrow(xs.len()));
    }
    let (a_plain, b_plain, sse_plain, sst) = linreg(&xs, &ys);
    // secular alternative: dist ~ |xi| e^{rate xi}
    let can_secular = xs.iter().all(|&x| x.abs() > 1.0);
    let mut secular = false;
    let (mut a, mut b, mut sse) = (a_plain, b_plain, sse_plain);
    if can_secular {
        let ys2: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| y - x.abs().ln())
            .collect();
        let (a2, b2, sse2, _) = linreg(&xs, &ys2);
        if sse2 < 0.5 * sse_plain {
            secular = true;
            a = a2;
            b = b2;
            sse = sse2;
        }
    }
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    if r2 < 0.999 {
        return Err(LvError::PoorFit { r2 });
    }
    Ok(ComponentFit {
        rate: b,
        intercept: a,
        r2,
        secular,
        points: xs.len(),
    })
}

fn nearest(cands: &[f64], x: f64) -> f64 {
    *cands
        .iter()
        .min_by(|a, b| {
            (*a - x).abs().partial_cmp(&(*b - x).abs()).unwrap()
        })
        .unwrap()
}

/// Fit the tail decay rate(s) of a front on one side and compare them with
/// the spectral predictions.
pub fn fit_tail_rate(front: &FrontProfile, side: Side, window: (f64, f64)) -> Result<TailFit> {
    match front.kind {
        FrontKind::SystemFront => {
            let wave = WaveParams::new(front.model, front.c)?;
            let (us, vs) = front.model.coexistence()?;
            let fit_u = fit_component(
                &front.xi,
                &front.phi,
                if side == Side::PlusInfinity { us } else { 0.0 },
                side,
                window,
            )?;
            let fit_v = fit_component(
                &front.xi,
                &front.psi,
                if side == Side::PlusInfinity { vs } else { 0.0 },
                side,
                window,
            )?;
            match side {
                Side::PlusInfinity => {
                    let spec = coexistence_eigenvalues(&wave)?;
                    let predicted = spec.lambda2;
                    let rel = ((fit_u.rate - predicted) / predicted)
                        .abs()
                        .max(((fit_v.rate - predicted) / predicted).abs());
                    Ok(TailFit {
                        side,
                        fitted_rate: fit_u.rate,
                        fitted_rate_psi: Some(fit_v.rate),
                        predicted_rate: predicted,
                        relative_error: rel,
                        window,
                        secular_detected: fit_u.secular || fit_v.secular,
                        amplitude_ratio: Some((fit_v.intercept - fit_u.intercept).exp()),
                        r_squared: fit_u.r2.min(fit_v.r2),
                        points: fit_u.points.min(fit_v.points),
                    })
                }
                Side::MinusInfinity => {
                    let (l3, l4, l5, l6) = origin_eigenvalues(&wave)?;
                    let pu = nearest(&[l3, l4], fit_u.rate);
                    let pv = nearest(&[l5, l6], fit_v.rate);
                    let rel = ((fit_u.rate - pu) / pu)
                        .abs()
                        .max(((fit_v.rate - pv) / pv).abs());
                    Ok(TailFit {
                        side,
                        fitted_rate: fit_u.rate,
                        fitted_rate_psi: Some(fit_v.rate),
                        predicted_rate: pu,
                        relative_error: rel,
                        window,
                        secular_detected: fit_u.secular || fit_v.secular,
                        amplitude_ratio: None,
                        r_squared: fit_u.r2.min(fit_v.r2),
                        points: fit_u.points.min(fit_v.points),
                    })
                }
            }
        }
        FrontKind::ScalarU | FrontKind::ScalarV => {
            let (vals, eq) = match front.kind {
                FrontKind::ScalarU => (
                    &front.phi,
                    ScalarEquation::from_model(&front.model, ScalarEq::UEq, front.c)?,
                ),
                _ => (
                    &front.psi,
                    ScalarEquation::from_model(&front.model, ScalarEq::VEq, front.c)?,
                ),
            };
            let limit = if side == Side::PlusInfinity { eq.a } else { 0.0 };
            let fit = fit_component(&front.xi, vals, limit, side, window)?;
            let predicted = match side {
                Side::PlusInfinity => eq.mu_minus(),
                Side::MinusInfinity => {
                    let slow = eq.slow_left_rate()?;
                    let fast = eq.s / eq.diff - slow;
                    nearest(&[slow, fast], fit.rate)
                }
            };
            Ok(TailFit {
                side,
                fitted_rate: fit.rate,
                fitted_rate_psi: None,
                predicted_rate: predicted,
                relative_error: ((fit.rate - predicted) / predicted).abs(),
                window,
                secular_detected: fit.secular,
                amplitude_ratio: None,
                r_squared: fit.r2,
                points: fit.points,
            })
        }
    }
}

/// The eight tail constants of the front-tail estimates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailConstants {
    pub m1: f64,
    pub m1_bar: f64,
    pub m2: f64,
    pub m2_bar: f64,
    pub kappa: f64,
    pub m3: f64,
    pub m3_bar: f64,
    pub m4: f64,
}

/// Scan a converged system front for the tail constants and certify the
/// inequalities at every usable grid point.
pub fn estimate_tail_constants(front: &FrontProfile) -> Result<TailConstants> {
    if front.kind != FrontKind::SystemFront {
        return Err(LvError::Config(
            "tail constants are defined for the system front".into(),
        ));
    }
    let wave = WaveParams::new(front.model, front.c)?;
    let (us, vs) = front.model.coexistence()?;
    let lambda2 = coexistence_eigenvalues(&wave)?.lambda2;
    let n = front.xi.len();

    // left side: skip the exact-zero Dirichlet node
    let mut m1 = f64::NEG_INFINITY;
    let mut m1_bar = f64::INFINITY;
    for i in 1..n {
        let x = front.xi[i];
        if x > 0.0 {
            break;
        }
        for (v, dv) in [(front.phi[i], front.dphi[i]), (front.psi[i], front.dpsi[i])] {
            if !(v > 0.0 && dv > 0.0) {
                return Err(LvError::BoundViolated {
                    xi: x,
                    what: format!("value/slope not positive on the left tail ({v}, {dv})"),
                });
            }
            let ratio = v / dv;
            m1 = m1.max(ratio);
            m1_bar = m1_bar.min(ratio);
        }
    }
    // envelope rate: local logarithmic derivative at the far-left anchor
    let kappa = (front.dphi[1] / front.phi[1]).min(front.dpsi[1] / front.psi[1]);
    if !(kappa > 0.0) {
        return Err(LvError::BoundViolated {
            xi: front.xi[1],
            what: format!("left envelope rate not positive ({kappa})"),
        });
    }
    let mut m2 = f64::NEG_INFINITY;
    let mut m2_bar = f64::INFINITY;
    for i in 1..n {
        let x = front.xi[i];
        if x > 0.0 {
            break;
        }
        let e = (-kappa * x).exp();
        for v in [front.phi[i], front.psi[i]] {
            m2 = m2.max(v * e);
            m2_bar = m2_bar.min(v * e);
        }
    }

    // right side
    let mut m3 = f64::NEG_INFINITY;
    let mut m3_bar = f64::INFINITY;
    let mut m4 = f64::NEG_INFINITY;
    for i in 0..n {
        let x = front.xi[i];
        if x < 0.0 {
            continue;
        }
        let denom = (us - front.phi[i]).max(vs - front.psi[i]);
        if !(denom > 0.0) {
            return Err(LvError::BoundViolated {
                xi: x,
                what: format!("distance to the limit not positive ({denom})"),
            });
        }
        for dv in [front.dphi[i], front.dpsi[i]] {
            let ratio = dv / denom;
            m3 = m3.max(ratio);
            m3_bar = m3_bar.min(ratio);
        }
        m4 = m4.max(denom * (-lambda2 * x).exp());
    }

    let consts = TailConstants {
        m1,
        m1_bar,
        m2,
        m2_bar,
        kappa,
        m3,
        m3_bar,
        m4,
    };
    certify_tail_constants(front, &consts, us, vs, lambda2)?;
    Ok(consts)
}

fn certify_tail_constants(
    front: &FrontProfile,
    k: &TailConstants,
    us: f64,
    vs: f64,
    lambda2: f64,
) -> Result<()> {
    let slack = 1.0 + 1e-12;
    for i in 1..front.xi.len() {
        let x = front.xi[i];
        if x <= 0.0 {
            for (v, dv) in [(front.phi[i], front.dphi[i]), (front.psi[i], front.dpsi[i])] {
                let ratio = v / dv;
                if ratio > k.m1 * slack || ratio < k.m1_bar / slack {
                    return Err(LvError::BoundViolated {
                        xi: x,
                        what: format!("value/slope ratio {ratio} escapes [{}, {}]", k.m1_bar, k.m1),
                    });
                }
                let env = (k.kappa * x).exp();
                if v > k.m2 * env * slack || v < k.m2_bar * env / slack {
                    return Err(LvError::BoundViolated {
                        xi: x,
                        what: format!("left envelope failed for value {v}"),
                    });
                }
            }
        } else {
            let denom = (us - front.phi[i]).max(vs - front.psi[i]);
            for dv in [front.dphi[i], front.dpsi[i]] {
                let ratio = dv / denom;
                if ratio > k.m3 * slack || ratio < k.m3_bar / slack {
                    return Err(LvError::BoundViolated {
                        xi: x,
                        what: format!("slope/distance ratio {ratio} escapes [{}, {}]", k.m3_bar, k.m3),
                    });
                }
            }
            if denom > k.m4 * (lambda2 * x).exp() * slack {
                return Err(LvError::BoundViolated {
                    xi: x,
                    what: format!("right envelope failed for distance {denom}"),
                });
            }
        }
    }
    Ok(())
}
