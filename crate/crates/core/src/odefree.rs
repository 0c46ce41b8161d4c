//! Diffusion-free dynamics
//!
//! ```text
//!   p1' = p1 (1 - p1 - k1 q1)
//!   q1' = r q1 (1 - q1 - k2 p1)
//! ```
//!
//! with initial data `0 < theta1 < u*`, `0 < theta2 < v*` at `t = 0`. Every
//! box orbit connects `(0, 0)` at `t = -inf` to `(u*, v*)` at `t = +inf`,
//! and while it stays inside the box the identities `u* + k1 v* = 1` and
//! `k2 u* + v* = 1` give `p1' >= p1 (u* - p1)` and `q1' >= r q1 (v* - q1)`,
//! so the orbit dominates the logistic through the same initial data for
//! `t >= 0` and is dominated by it for `t <= 0`.
//!
//! The box is *not* forward invariant, however: on the edge `p1 = u*` the
//! flow points outward (`p1' = u* k1 (v* - q1) > 0`), and the slow stable
//! eigenvector at the coexistence node always has components of opposite
//! signs (Perron's theorem applied to the negated stability matrix gives the
//! *strong* direction the positive eigenvector), so a generic box orbit
//! transiently overshoots one component and approaches coexistence from
//! outside the box. The orbits that stay boxed and componentwise increasing
//! for all time — the ones the sandwich construction needs — are exactly the
//! strong-stable-manifold connecting orbit, a one-parameter curve of initial
//! data computed by [`monotone_connecting_data`].

use serde::Serialize;

use crate::error::{LvError, Result};
use crate::model::{reaction, ModelParams};

/// Default uniform output spacing of the stored grid.
const GRID_SPACING: f64 = 0.01;

/// One orbit of the diffusion-free system with dense output.
///
/// Values and exact ODE derivatives are stored on a uniform grid spanning
/// `[-T, T]`; [`DiffusionFreeOrbit::eval`] interpolates with cubic Hermite
/// segments between nodes (derivatives are exact, so the interpolant is
/// locally fourth-order accurate).
#[derive(Debug, Clone, Serialize)]
pub struct DiffusionFreeOrbit {
    pub model: ModelParams,
    pub theta1: f64,
    pub theta2: f64,
    pub t_grid: Vec<f64>,
    pub p1: Vec<f64>,
    pub q1: Vec<f64>,
    /// Exact ODE derivatives at the grid nodes.
    pub dp1: Vec<f64>,
    pub dq1: Vec<f64>,
    /// `theta1 / (u* - theta1)`.
    pub beta_hat1: f64,
    /// `theta2 / (u* - theta2)` — the constant as displayed in the source
    /// derivation. Its envelope does not pass through `theta2` at `t = 0`
    /// unless `u* = v*`; see [`certify_logistic_envelope`].
    pub beta_hat2: f64,
    /// `theta2 / (v* - theta2)` — the constant consistent with the
    /// `v*`-logistic; this is the one the certification uses.
    pub beta_hat2_corrected: f64,
    /// Local integration tolerance the orbit was computed with.
    pub tol: f64,
}

impl DiffusionFreeOrbit {
    /// Interpolated `(p1, q1)` at an arbitrary time; clamps to the stored
    /// horizon (the orbit is exponentially close to its limits there).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.t_grid.len();
        let (t0, t1) = (self.t_grid[0], self.t_grid[n - 1]);
        if t <= t0 {
            return (self.p1[0], self.q1[0]);
        }
        if t >= t1 {
            return (self.p1[n - 1], self.q1[n - 1]);
        }
        let h = self.t_grid[1] - self.t_grid[0];
        let i = (((t - t0) / h) as usize).min(n - 2);
        let s = (t - self.t_grid[i]) / h;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| -> f64 {
            let s2 = s * s;
            let s3 = s2 * s;
            y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + y1 * (3.0 * s2 - 2.0 * s3)
                + h * (d0 * (s3 - 2.0 * s2 + s) + d1 * (s3 - s2))
        };
        (
            hermite(self.p1[i], self.p1[i + 1], self.dp1[i], self.dp1[i + 1]),
            hermite(self.q1[i], self.q1[i + 1], self.dq1[i], self.dq1[i + 1]),
        )
    }

    /// The certified logistic lower envelopes at time `t`:
    /// `u*`-logistic with rate `u*` through `theta1` for `p1`, and
    /// `v*`-logistic with rate `r v*` through `theta2` for `q1`.
    pub fn lower_envelope(&self, t: f64) -> (f64, f64) {
        let (us, vs) = self.model.coexistence().expect("validated at solve time");
        (
            logistic(us, us * t, self.beta_hat1),
            logistic(vs, self.model.r * vs * t, self.beta_hat2_corrected),
        )
    }

    /// The `q1` envelope evaluated with the displayed constant `beta_hat2`
    /// and displayed rate `v*`, kept for comparison reporting.
    pub fn lower_envelope_printed_q(&self, t: f64) -> f64 {
        let (_, vs) = self.model.coexistence().expect("validated at solve time");
        logistic(vs, vs * t, self.beta_hat2)
    }

    /// `C` such that `max(p1(-T), q1(-T)) = C e^{-min(u*, r v*) T}`; the
    /// envelopes force the backward tail to decay at least this fast.
    pub fn backward_decay_constant(&self) -> f64 {
        let (us, vs) = self.model.coexistence().expect("validated at solve time");
        let rate = us.min(self.model.r * vs);
        let t_back = self.t_grid[0];
        self.p1[0].max(self.q1[0]) * (-rate * t_back).exp()
    }

    /// CSV export: `t, p1, q1, lower_env_p, lower_env_q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p1,q1,lower_env_p,lower_env_q\n");
        for (i, &t) in self.t_grid.iter().enumerate() {
            let (ep, eq) = self.lower_envelope(t);
            out.push_str(&format!(
                "{t:.6},{:.12e},{:.12e},{ep:.12e},{eq:.12e}\n",
                self.p1[i], self.q1[i]
            ));
        }
        out
    }
}

/// Stable logistic `cap * b e^x / (1 + b e^x)` evaluated without overflow on
/// either side.
fn logistic(cap: f64, x: f64, b: f64) -> f64 {
    if x >= 0.0 {
        cap / (1.0 + (-x).exp() / b)
    } else {
        let w = b * x.exp();
        cap * w / (1.0 + w)
    }
}

/// Solve the diffusion-free system on `[-t_horizon, t_horizon]` by an
/// adaptive Dormand-Prince 5(4) pair, forward and backward from `t = 0`,
/// with output forced at the uniform grid nodes.
pub fn solve_diffusion_free(
    model: &ModelParams,
    theta1: f64,
    theta2: f64,
    t_horizon: f64,
    tol: f64,
) -> Result<DiffusionFreeOrbit> {
    if !model.is_weak_competition() {
        return Err(LvError::DegenerateRegime(
            "diffusion-free sandwich requires weak competition".into(),
        ));
    }
    let (us, vs) = model.coexistence()?;
    if !(theta1 > 0.0 && theta1 < us && theta2 > 0.0 && theta2 < vs) {
        return Err(LvError::InitialDataOutOfBox { theta1, theta2 });
    }
    if !(t_horizon > 0.0 && t_horizon.is_finite()) || !(tol > 0.0 && tol < 1e-2) {
        return Err(LvError::Config(format!(
            "horizon {t_horizon} and tolerance {tol} must be positive (tol < 1e-2)"
        )));
    }

    let half = (t_horizon / GRID_SPACING).ceil() as usize;
    let h = t_horizon / half as f64;
    let n = 2 * half + 1;
    let t_grid: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * h).collect();

    let mut p1 = vec![0.0; n];
    let mut q1 = vec![0.0; n];
    p1[half] = theta1;
    q1[half] = theta2;

    // forward sweep, then backward sweep (time reversed)
    let mut y = [theta1, theta2];
    for i in half + 1..n {
        y = integrate_node(model, y, t_grid[i - 1], t_grid[i], tol, 1.0)?;
        p1[i] = y[0];
        q1[i] = y[1];
    }
    y = [theta1, theta2];
    for i in (0..half).rev() {
        y = integrate_node(model, y, -t_grid[i + 1], -t_grid[i], tol, -1.0)?;
        p1[i] = y[0];
        q1[i] = y[1];
    }

    let (dp1, dq1): (Vec<f64>, Vec<f64>) = p1
        .iter()
        .zip(&q1)
        .map(|(&p, &q)| reaction(model, p, q))
        .unzip();

    Ok(DiffusionFreeOrbit {
        model: *model,
        theta1,
        theta2,
        t_grid,
        p1,
        q1,
        dp1,
        dq1,
        beta_hat1: theta1 / (us - theta1),
        beta_hat2: theta2 / (us - theta2),
        beta_hat2_corrected: theta2 / (vs - theta2),
        tol,
    })
}

/// Advance one grid interval `[ta, tb]` (in integration time; `dir = -1`
/// integrates the time-reversed field) with adaptive Dormand-Prince 5(4).
fn integrate_node(
    model: &ModelParams,
    mut y: [f64; 2],
    ta: f64,
    tb: f64,
    tol: f64,
    dir: f64,
) -> Result<[f64; 2]> {
    // Dormand-Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // 5th-order weights equal the last A row (FSAL); 4th-order embedded:
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let f = |y: [f64; 2], t: f64| -> Result<[f64; 2]> {
        if !y[0].is_finite() || !y[1].is_finite() || y[0].abs() > 10.0 || y[1].abs() > 10.0 {
            return Err(LvError::Blowup { t: dir * t });
        }
        let (fp, fq) = reaction(model, y[0], y[1]);
        Ok([dir * fp, dir * fq])
    };

    let mut t = ta;
    let mut hstep = (tb - ta).min(0.02);
    let mut k0 = f(y, t)?;
    while t < tb - 1e-14 {
        hstep = hstep.min(tb - t);
        let mut k = [[0.0f64; 2]; 7];
        k[0] = k0;
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                ys[0] += hstep * A[s][j] * kj[0];
                ys[1] += hstep * A[s][j] * kj[1];
            }
            k[s + 1] = f(ys, t + hstep)?;
        }
        // k[6] is the stage at the 5th-order solution (FSAL)
        let y5 = {
            let mut ys = y;
            for (j, aj) in A[5].iter().enumerate() {
                ys[0] += hstep * aj * k[j][0];
                ys[1] += hstep * aj * k[j][1];
            }
            ys
        };
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut e = 0.0;
            for (j, b4) in B4.iter().enumerate() {
                let b5 = if j < 6 { A[5][j] } else { 0.0 };
                e += (b5 - b4) * k[j][c];
            }
            err = err.max((hstep * e).abs());
        }
        // error-per-unit-step control keeps the global error near tol
        let accept = err <= 0.2 * tol * hstep;
        if accept {
            t += hstep;
            y = y5;
            k0 = k[6];
        }
        let scale = if err > 0.0 {
            0.9 * (0.2 * tol * hstep / err).powf(0.2)
        } else {
            4.0
        };
        hstep *= scale.clamp(0.2, 4.0);
        if hstep < 1e-12 {
            return Err(LvError::Blowup { t: dir * t });
        }
    }
    Ok(y)
}

/// Which component first escapes the coexistence box going forward.
enum Overshoot {
    P,
    Q,
    Neither,
}

/// Forward-integrate and classify which side of the monotone connecting
/// curve the data lies on. `tol_over` is the escape threshold.
fn overshoot_side(
    model: &ModelParams,
    theta1: f64,
    theta2: f64,
    tol_over: f64,
) -> Result<Overshoot> {
    let (us, vs) = model.coexistence()?;
    let mut y = [theta1, theta2];
    let mut t = 0.0;
    while t < 300.0 {
        y = integrate_node(model, y, t, t + 1.0, 1e-9, 1.0)?;
        t += 1.0;
        if y[0] > us + tol_over {
            return Ok(Overshoot::P);
        }
        if y[1] > vs + tol_over {
            return Ok(Overshoot::Q);
        }
        // once the orbit is this close to the node, any future overshoot is
        // below the threshold
        if (us - y[0]).abs() + (vs - y[1]).abs() < 0.01 * tol_over {
            break;
        }
    }
    Ok(Overshoot::Neither)
}

/// The unique `theta2` for a given `theta1` such that the orbit through
/// `(theta1, theta2)` stays inside the box and is componentwise increasing
/// for all time: the strong-stable-manifold connecting orbit of the
/// coexistence node. Too small a `theta2` lets `p1` overshoot `u*`, too
/// large a one lets `q1` overshoot `v*`; bisection on that dichotomy
/// converges to the curve.
pub fn monotone_connecting_data(model: &ModelParams, theta1: f64) -> Result<f64> {
    if !model.is_weak_competition() {
        return Err(LvError::DegenerateRegime(
            "monotone connecting orbit requires weak competition".into(),
        ));
    }
    let (us, vs) = model.coexistence()?;
    if !(theta1 > 0.0 && theta1 < us) {
        return Err(LvError::InitialDataOutOfBox {
            theta1,
            theta2: f64::NAN,
        });
    }
    let tol_over = 5e-9;
    let (mut lo, mut hi) = (0.0, vs);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        match overshoot_side(model, theta1, mid, tol_over)? {
            Overshoot::P => lo = mid,
            Overshoot::Q => hi = mid,
            Overshoot::Neither => return Ok(mid),
        }
        if hi - lo < 1e-14 * vs {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Result of the logistic-sandwich certification.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Worst signed margin of the certified `p1` comparison
    /// (`p1 - env` for `t >= 0`, `env - p1` for `t < 0`).
    pub worst_margin_p: f64,
    pub worst_t_p: f64,
    /// Worst signed margin of the certified `q1` comparison.
    pub worst_margin_q: f64,
    pub worst_t_q: f64,
    /// Grid nodes with `t >= 0` where the *displayed* `q1` envelope
    /// (constant `beta_hat2`, rate `v*`) exceeds the orbit. Nonzero counts
    /// document that the displayed constant is not a valid lower bound.
    pub printed_beta2_violations: usize,
    /// Slack used for the sign checks.
    pub slack: f64,
    /// `C` of the backward bound `max(p1, q1)(-T) <= C e^{-min(u*, r v*) T}`.
    pub backward_constant: f64,
}

/// Certify the logistic sandwich along the orbit.
///
/// The comparison-principle direction flips at `t = 0` where the orbit and
/// the envelope coincide: inside the box `p1' >= p1 (u* - p1)`, so the orbit
/// dominates the logistic for `t >= 0` and is dominated by it for `t <= 0`
/// (and symmetrically for `q1` with rate `r v*`). Both checks are performed
/// with slack proportional to the integration tolerance; bound checks
/// `0 <= p1 <= u*`, `0 <= q1 <= v*` are included. The bounds genuinely hold
/// only for box-confined orbits (initial data on the curve of
/// [`monotone_connecting_data`]); generic box data overshoots and is
/// faithfully reported as `EnvelopeViolated`.
pub fn certify_logistic_envelope(orbit: &DiffusionFreeOrbit) -> Result<EnvelopeReport> {
    let (us, vs) = orbit.model.coexistence()?;
    let slack = 1e3 * orbit.tol;
    let mut worst_p = (f64::INFINITY, 0.0f64);
    let mut worst_q = (f64::INFINITY, 0.0f64);
    let mut printed = 0usize;
    for (i, &t) in orbit.t_grid.iter().enumerate() {
        let (p, q) = (orbit.p1[i], orbit.q1[i]);
        for (val, cap, name) in [(p, us, "p1"), (q, vs, "q1")] {
            if val < -slack || val > cap + slack {
                return Err(LvError::EnvelopeViolated {
                    t,
                    margin: val.min(cap - val),
                });
            }
            let _ = name;
        }
        let (ep, eq) = orbit.lower_envelope(t);
        let (mp, mq) = if t >= 0.0 {
            (p - ep, q - eq)
        } else {
            (ep - p, eq - q)
        };
        if mp < worst_p.0 {
            worst_p = (mp, t);
        }
        if mq < worst_q.0 {
            worst_q = (mq, t);
        }
        if t >= 0.0 && orbit.lower_envelope_printed_q(t) > q + slack {
            printed += 1;
        }
    }
    for (m, t) in [worst_p, worst_q] {
        if m < -slack {
            return Err(LvError::EnvelopeViolated { t, margin: m });
        }
    }
    Ok(EnvelopeReport {
        worst_margin_p: worst_p.0,
        worst_t_p: worst_p.1,
        worst_margin_q: worst_q.0,
        worst_t_q: worst_q.1,
        printed_beta2_violations: printed,
        slack,
        backward_constant: orbit.backward_decay_constant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit(k1: f64, k2: f64, r: f64, th1: f64, th2: f64) -> DiffusionFreeOrbit {
        let model = ModelParams::new(k1, k2, r, 1.0).unwrap();
        solve_diffusion_free(&model, th1, th2, 40.0, 1e-10).unwrap()
    }

    /// Orbit through the monotone connecting curve at abscissa `th1`.
    fn curve_orbit(k1: f64, k2: f64, r: f64, th1: f64) -> DiffusionFreeOrbit {
        let model = ModelParams::new(k1, k2, r, 1.0).unwrap();
        let th2 = monotone_connecting_data(&model, th1).unwrap();
        solve_diffusion_free(&model, th1, th2, 40.0, 1e-10).unwrap()
    }

    #[test]
    fn beta_constants() {
        // theta1 = u*/2 gives beta_hat1 = 1 exactly
        let model = ModelParams::new(0.5, 0.5, 1.0, 1.0).unwrap();
        let (us, vs) = model.coexistence().unwrap();
        let o = solve_diffusion_free(&model, us / 2.0, vs / 4.0, 10.0, 1e-10).unwrap();
        assert!((o.beta_hat1 - 1.0).abs() < 1e-14);
        // the corrected envelope passes through theta at t = 0
        let (ep, eq) = o.lower_envelope(0.0);
        assert!((ep - o.theta1).abs() < 1e-14);
        assert!((eq - o.theta2).abs() < 1e-14);
    }

    #[test]
    fn initial_data_box_enforced() {
        let model = ModelParams::new(0.5, 0.5, 1.0, 1.0).unwrap();
        let err = solve_diffusion_free(&model, 0.9, 0.1, 10.0, 1e-10).unwrap_err();
        assert!(matches!(err, LvError::InitialDataOutOfBox { .. }), "{err}");
        assert!(solve_diffusion_free(&model, 0.1, 0.0, 10.0, 1e-10).is_err());
        let strong = ModelParams::new(1.5, 0.5, 1.0, 1.0).unwrap();
        assert!(solve_diffusion_free(&strong, 0.1, 0.1, 10.0, 1e-10).is_err());
    }

    #[test]
    fn monotone_and_boxed_on_connecting_curve() {
        let o = curve_orbit(0.4, 0.6, 1.3, 0.3);
        let (us, vs) = o.model.coexistence().unwrap();
        let slack = 1e-8;
        for i in 0..o.t_grid.len() {
            assert!(o.dp1[i] > -slack && o.dq1[i] > -slack, "node {i}");
            assert!(o.p1[i] > 0.0 && o.p1[i] < us + slack);
            assert!(o.q1[i] > 0.0 && o.q1[i] < vs + slack);
        }
        // limits approached at both ends
        let n = o.t_grid.len();
        assert!((o.p1[n - 1] - us).abs() < 1e-8);
        assert!((o.q1[n - 1] - vs).abs() < 1e-8);
        assert!(o.p1[0] < 1e-6 && o.q1[0] < 1e-6);
    }

    #[test]
    fn generic_box_data_overshoots() {
        // off the connecting curve the orbit leaves the box: q1 transiently
        // exceeds v* and the monotonicity and envelope claims fail
        let o = orbit(0.4, 0.6, 1.3, 0.3, 0.2);
        let (_, vs) = o.model.coexistence().unwrap();
        let max_q = o.q1.iter().cloned().fold(0.0f64, f64::max);
        assert!(max_q > vs + 1e-3, "max q = {max_q}, vs = {vs}");
        assert!(o.dq1.iter().any(|&d| d < -1e-4));
        assert!(matches!(
            certify_logistic_envelope(&o),
            Err(LvError::EnvelopeViolated { .. })
        ));
    }

    #[test]
    fn symmetric_parameters_give_equal_components() {
        // k1 = k2, r = 1, theta1 = theta2: the system is u <-> v symmetric
        let o = orbit(0.5, 0.5, 1.0, 0.25, 0.25);
        for i in 0..o.t_grid.len() {
            assert!((o.p1[i] - o.q1[i]).abs() < 1e-10, "node {i}");
        }
    }

    #[test]
    fn envelope_certifies_random_draws() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rnd = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        // draws of (theta1, theta2) in the open box, restricted to the
        // monotone connecting curve where the sandwich bounds hold
        for case in 0..100 {
            let (k1, k2) = (0.05 + 0.9 * rnd(), 0.05 + 0.9 * rnd());
            let r = 0.3 + 2.0 * rnd();
            let model = ModelParams::new(k1, k2, r, 1.0).unwrap();
            let (us, vs) = model.coexistence().unwrap();
            let th1 = us * (0.05 + 0.9 * rnd());
            let th2 = monotone_connecting_data(&model, th1).unwrap();
            assert!(th2 > 0.0 && th2 < vs);
            let o = solve_diffusion_free(&model, th1, th2, 40.0, 1e-10).unwrap();
            let rep = certify_logistic_envelope(&o)
                .unwrap_or_else(|e| panic!("case {case} ({k1:.3},{k2:.3},{r:.3}): {e}"));
            assert!(rep.worst_margin_p >= -rep.slack);
            assert!(rep.worst_margin_q >= -rep.slack);
        }
    }

    #[test]
    fn time_translation_consistency() {
        let o = orbit(0.5, 0.5, 1.3, 0.3, 0.25);
        let s = 3.7;
        let (ps, qs) = o.eval(s);
        let model = o.model;
        let shifted = solve_diffusion_free(&model, ps, qs, 20.0, 1e-10).unwrap();
        for &t in &[-8.0, -3.0, -1.0, 0.0, 0.5, 2.0, 7.5, 15.0] {
            let (a, b) = shifted.eval(t);
            let (c, d) = o.eval(t + s);
            assert!((a - c).abs() < 1e-9, "p at t={t}: {a} vs {c}");
            assert!((b - d).abs() < 1e-9, "q at t={t}: {b} vs {d}");
        }
    }

    #[test]
    fn backward_limit_constant() {
        let o = orbit(0.5, 0.5, 0.8, 0.3, 0.3);
        let (us, vs) = o.model.coexistence().unwrap();
        let rate = us.min(o.model.r * vs);
        let c = o.backward_decay_constant();
        assert!(c.is_finite() && c > 0.0);
        let t0 = o.t_grid[0];
        assert!(o.p1[0].max(o.q1[0]) <= c * (rate * t0).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn printed_constant_flagged_when_inconsistent() {
        // u* < v* makes the displayed beta_hat2 envelope start above theta2,
        // so it must be flagged as violating near t = 0
        let model = ModelParams::new(0.6, 0.3, 1.0, 1.0).unwrap();
        let (us, _) = model.coexistence().unwrap();
        let th1 = us / 2.0;
        let th2 = monotone_connecting_data(&model, th1).unwrap();
        let o = solve_diffusion_free(&model, th1, th2, 40.0, 1e-10).unwrap();
        assert!(th2 < us, "need theta2 < u* for a positive displayed constant");
        let rep = certify_logistic_envelope(&o).unwrap();
        assert!(rep.printed_beta2_violations > 0);
        // symmetric parameters: displayed and corrected constants coincide
        let o = orbit(0.5, 0.5, 1.0, 0.25, 0.25);
        assert!((o.beta_hat2 - o.beta_hat2_corrected).abs() < 1e-14);
    }

    #[test]
    fn csv_shape() {
        let model = ModelParams::new(0.5, 0.5, 1.0, 1.0).unwrap();
        let o = solve_diffusion_free(&model, 0.3, 0.3, 1.0, 1e-8).unwrap();
        let csv = o.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,p1,q1,lower_env_p,lower_env_q");
        assert_eq!(csv.lines().count(), o.t_grid.len() + 1);
        assert!(lines.next().unwrap().starts_with("-1.000000,"));
    }
}
