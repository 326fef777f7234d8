//! Numeric Stokes matrices, independent of every closed form.
//!
//! Either system is written as one linear ODE dF/dz = (B0 + B1/z) F with
//! B0 = diag(0·Id, c·Id). Canonical solutions are seeded by optimally
//! truncated formal series on the central rays of their sectors, continued
//! inward by adaptive Dormand–Prince integration on the universal cover, and
//! compared at a common point near the origin.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::classical::ClassicalSystem;
use crate::error::{Error, Result};
use crate::formal::{self, FormalSeries};
use crate::linalg::{self, CMat};
use crate::quantum::QuantumSystem;
use crate::specfun::RayPoint;

type C = Complex64;

const TWO_PI_I: C = C::new(0.0, 2.0 * PI);
/// Largest vectorized dimension accepted.
pub const MAX_BIG_DIM: usize = 200;

#[derive(Debug, Clone)]
pub struct BigSystem {
    pub dim: usize,
    /// B0 = diag(0·Id_na, c·Id).
    pub na: usize,
    pub c: C,
    pub b0: CMat,
    pub b1: CMat,
    /// Block-diagonal part of B1: the formal-monodromy exponent Λ.
    pub delta: CMat,
    pub sign_conventions: &'static str,
}

impl BigSystem {
    pub fn new(na: usize, c: C, b1: CMat, sign_conventions: &'static str) -> Self {
        let dim = b1.nrows();
        let b0 = CMat::from_fn(dim, dim, |i, j| if i == j && i >= na { c } else { C::new(0.0, 0.0) });
        let delta = formal::block_diagonal(&b1, na);
        BigSystem { dim, na, c, b0, b1, delta, sign_conventions }
    }

    fn rhs(&self, z: C, dz: C, y: &CMat) -> CMat {
        let mut out = &self.b1 * y / z;
        for i in self.na..self.dim {
            for j in 0..self.dim {
                out[(i, j)] += self.c * y[(i, j)];
            }
        }
        out * dz
    }
}

/// B0 = iEₙ, B1 = −A/2πi; Λ = −δ_{n-1}(A)/2πi.
pub fn vectorize_classical(sys: &ClassicalSystem) -> BigSystem {
    BigSystem::new(sys.n - 1, C::new(0.0, 1.0), &sys.a / (-TWO_PI_I), "classical: F_{-1} e^{-delta/2} S+ = F_0, Lambda = -delta(A)/2pi i")
}

/// B0 = h·i·(Id⊗E_nn), B1 = h·T̂/2πi with block (k,l) = ρ(e_kl); index k·d + p.
pub fn vectorize_quantum(sys: &QuantumSystem) -> Result<BigSystem> {
    let (n, d) = (sys.n(), sys.dim());
    if n * d > MAX_BIG_DIM {
        return Err(Error::TooLarge(format!("vectorized dimension {} exceeds {MAX_BIG_DIM}", n * d)));
    }
    let t = sys.t_matrix();
    Ok(BigSystem::new((n - 1) * d, C::new(0.0, sys.h), t * (sys.h / TWO_PI_I), "quantum: F_{h,-1} e^{h delta(T)/2} S_h+ = F_{h,0}, Lambda = h delta(T)/2pi i"))
}

#[derive(Debug, Clone)]
pub struct AnchorSolution {
    pub at: RayPoint,
    pub value: CMat,
    pub err_est: f64,
    pub sector: i32,
    pub order: usize,
}

/// z^Λ on the cover.
fn zpow(lambda: &CMat, z: RayPoint) -> Result<CMat> {
    linalg::expm(&(lambda * z.ln()))
}

/// Canonical solution Fᵢ at (R, iπ), the central ray of Sectᵢ.
pub fn anchor(sys: &BigSystem, series: &FormalSeries, sector: i32, r: f64) -> Result<AnchorSolution> {
    if sys.c.norm() == 0.0 {
        return Err(Error::NoGap);
    }
    let at = RayPoint::new(r, sector as f64 * PI)?;
    let mags: Vec<f64> = series.h.iter().enumerate().map(|(m, h)| linalg::max_abs(h) * r.powi(-(m as i32))).collect();
    // optimal truncation: stop before the smallest term
    let (mut stop, mut err) = (mags.len(), 0.0);
    if mags.len() > 1 {
        let (i, e) = mags.iter().enumerate().skip(1).fold((1, f64::INFINITY), |acc, (i, e)| if *e < acc.1 { (i, *e) } else { acc });
        stop = i;
        err = e;
    }
    let zinv = 1.0 / at.project();
    let mut sum = linalg::zeros(sys.dim, sys.dim);
    let mut w = C::new(1.0, 0.0);
    for h in &series.h[..stop] {
        sum += h * w;
        w *= zinv;
    }
    let ez = at.project();
    let expo = CMat::from_fn(sys.dim, sys.dim, |i, j| if i == j { (sys.b0[(i, i)] * ez).exp() } else { C::new(0.0, 0.0) });
    let value = sum * zpow(&series.lambda, at)? * expo;
    Ok(AnchorSolution { at, value, err_est: err, sector, order: stop - 1 })
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const CNODES: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// 5th-order weights minus 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate one piece of the path, linear in (r, θ) from `p` to `q`.
fn integrate_piece(sys: &BigSystem, y0: &CMat, p: RayPoint, q: RayPoint, tol: f64) -> Result<(CMat, usize)> {
    let (dr, dt) = (q.r - p.r, q.theta - p.theta);
    if dr == 0.0 && dt == 0.0 {
        return Ok((y0.clone(), 0));
    }
    let point = |s: f64| -> (C, C) {
        let r = p.r + dr * s;
        let t = p.theta + dt * s;
        let e = C::from_polar(1.0, t);
        (e * r, (C::new(dr, 0.0) + C::new(0.0, r * dt)) * e)
    };
    let f = |s: f64, y: &CMat| -> CMat {
        let (z, dz) = point(s);
        sys.rhs(z, dz, y)
    };
    let mut s = 0.0;
    let mut y = y0.clone();
    let mut k1 = f(0.0, &y);
    // initial step from the local rate
    let rate = linalg::max_abs(&k1) / linalg::max_abs(&y).max(1e-300);
    let mut h = (0.01 / rate.max(1e-3)).min(0.1);
    let mut steps = 0;
    let mut rejected_in_row = 0;
    while s < 1.0 {
        if s + h > 1.0 {
            h = 1.0 - s;
        }
        let mut k: Vec<CMat> = Vec::with_capacity(7);
        k.push(k1.clone());
        for stage in 0..6 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    yi += kj * C::new(h * a, 0.0);
                }
            }
            if stage == 5 {
                // FSAL: the last stage is the 5th-order solution itself
                let k7 = f(s + h, &yi);
                k.push(k7);
                let mut err = linalg::zeros(sys.dim, sys.dim);
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        err += kj * C::new(h * E[j], 0.0);
                    }
                }
                let scale = linalg::max_abs(&y).max(linalg::max_abs(&yi)).max(1e-300);
                let en = linalg::max_abs(&err) / (tol * scale);
                if en <= 1.0 {
                    s += h;
                    y = yi;
                    k1 = k.pop().unwrap_or_else(|| unreachable!());
                    steps += 1;
                    rejected_in_row = 0;
                } else {
                    rejected_in_row += 1;
                }
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                h *= if rejected_in_row > 0 { fac.min(1.0) } else { fac };
                if h < 1e-14 {
                    return Err(Error::StepUnderflow { s });
                }
                break;
            }
            let ki = f(s + CNODES[stage + 1] * h, &yi);
            k.push(ki);
        }
    }
    Ok((y, steps))
}

/// Continue a solution along a piecewise path of radial moves and arcs.
pub fn propagate(sys: &BigSystem, value: &CMat, path: &[RayPoint], tol: f64) -> Result<CMat> {
    let mut y = value.clone();
    for w in path.windows(2) {
        if w[0].r.min(w[1].r) < 0.5 && w[0].r != w[1].r {
            return Err(Error::InvalidParams("path comes too close to the origin".into()));
        }
        y = integrate_piece(sys, &y, w[0], w[1], tol)?.0;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NumericConfig {
    /// Anchor radius R.
    pub radius: f64,
    /// Factor for the second, robustness run.
    pub radius_factor: f64,
    /// Radius of the matching arc.
    pub match_radius: f64,
    /// Argument of the S₊ matching point.
    pub match_theta: f64,
    pub ode_tol: f64,
    pub max_order: usize,
}

impl NumericConfig {
    /// Defaults: R·|c| = 25, ode_tol = 1e-11, at most 40 formal terms.
    pub fn auto(sys: &BigSystem) -> Self {
        NumericConfig {
            radius: 25.0 / sys.c.norm(),
            radius_factor: 1.4,
            match_radius: 1.0,
            match_theta: -PI / 2.0,
            ode_tol: 1e-11,
            max_order: 40,
        }
    }
}

/// S₊ and S₋ from one anchor radius.
#[derive(Debug, Clone)]
pub struct NumericPair {
    pub s_plus: CMat,
    pub s_minus: CMat,
    pub anchor_err: f64,
    pub truncation_order: usize,
}

/// One numeric extraction at the configured radius and matching ray.
pub fn numeric_pair(sys: &BigSystem, series: &FormalSeries, cfg: &NumericConfig) -> Result<NumericPair> {
    if !(cfg.ode_tol >= 1e-12) {
        return Err(Error::InvalidParams(format!("ode_tol {} below 1e-12", cfg.ode_tol)));
    }
    if cfg.radius * sys.c.norm() < 15.0 {
        return Err(Error::InvalidParams(format!("anchor radius {} too small for gap {}", cfg.radius, sys.c.norm())));
    }
    let r = cfg.radius;
    let r0 = cfg.match_radius;
    let tol = cfg.ode_tol;
    let (a0, am1) = rayon::join(|| anchor(sys, series, 0, r), || anchor(sys, series, -1, r));
    let (a0, am1) = (a0?, am1?);
    let pt = |r: f64, t: f64| RayPoint { r, theta: t };
    // S₊ on S(−π, 0); S₋ on S(0, π) against F₋₁ continued once around.
    let (zero, minus) = rayon::join(
        || {
            let inner = propagate(sys, &a0.value, &[pt(r, 0.0), pt(r0, 0.0)], tol)?;
            let (p, m) = rayon::join(
                || propagate(sys, &inner, &[pt(r0, 0.0), pt(r0, cfg.match_theta)], tol),
                || propagate(sys, &inner, &[pt(r0, 0.0), pt(r0, PI / 2.0)], tol),
            );
            Ok::<_, Error>((p?, m?))
        },
        || {
            let inner = propagate(sys, &am1.value, &[pt(r, -PI), pt(r0, -PI)], tol)?;
            let (p, m) = rayon::join(
                || propagate(sys, &inner, &[pt(r0, -PI), pt(r0, cfg.match_theta)], tol),
                || propagate(sys, &inner, &[pt(r0, -PI), pt(r0, -1.5 * PI)], tol),
            );
            Ok::<_, Error>((p?, m?))
        },
    );
    let ((f0p, f0m), (fmp, fmm)) = (zero?, minus?);
    let pi_i = C::new(0.0, PI);
    let e_minus = linalg::expm(&(&series.lambda * -pi_i))?;
    let e_plus = linalg::expm(&(&series.lambda * pi_i))?;
    // F₋₁·e^{πiΛ}·S₊ = F₀ ;  F₀·S₋·e^{−πiΛ} = F₋₁(z e^{−2πi})
    let s_plus = e_minus * linalg::solve(&fmp, &f0p)?;
    let s_minus = linalg::solve(&f0m, &fmm)? * e_plus;
    Ok(NumericPair {
        s_plus,
        s_minus,
        anchor_err: a0.err_est.max(am1.err_est),
        truncation_order: a0.order.min(am1.order),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericStokesReport {
    #[serde(skip)]
    pub s_plus: CMat,
    #[serde(skip)]
    pub s_minus: CMat,
    pub anchor_radius: f64,
    pub truncation_order: usize,
    pub ode_tol: f64,
    /// max |S(R) − S(factor·R)| over both Stokes matrices.
    pub disc_err: f64,
    pub anchor_err: f64,
}

/// Numeric S₊/S₋ with the radius-robustness check applied.
pub fn numeric_stokes(sys: &BigSystem, cfg: &NumericConfig) -> Result<NumericStokesReport> {
    let series = formal::formal_series(&sys.b1, sys.na, sys.c, cfg.max_order)?;
    let far = NumericConfig { radius: cfg.radius * cfg.radius_factor, ..*cfg };
    let (near, wide) = rayon::join(|| numeric_pair(sys, &series, cfg), || numeric_pair(sys, &series, &far));
    let (near, wide) = (near?, wide?);
    let disc = linalg::max_abs(&(&near.s_plus - &wide.s_plus)).max(linalg::max_abs(&(&near.s_minus - &wide.s_minus)));
    if !(disc <= 10.0 * cfg.ode_tol) {
        return Err(Error::Consistency(format!(
            "numeric Stokes matrices at R = {} and R = {} differ by {disc:e} > 10·ode_tol",
            cfg.radius, far.radius
        )));
    }
    Ok(NumericStokesReport {
        s_plus: near.s_plus,
        s_minus: near.s_minus,
        anchor_radius: cfg.radius,
        truncation_order: near.truncation_order,
        ode_tol: cfg.ode_tol,
        disc_err: disc,
        anchor_err: near.anchor_err,
    })
}

/// Largest entry of `m` outside the upper block triangle for the split `na`.
pub fn lower_block_norm(m: &CMat, na: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in na..m.nrows() {
        for j in 0..na {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

/// Largest entry of `m` outside the lower block triangle for the split `na`.
pub fn upper_block_norm(m: &CMat, na: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..na {
        for j in na..m.ncols() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}
