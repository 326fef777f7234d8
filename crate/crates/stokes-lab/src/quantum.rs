//! The quantum confluent hypergeometric system dF/dz = h(iEₙ + T/(2πi z))F
//! with T = (e_ij) acting on Cⁿ ⊗ L(λ).
//!
//! Operators are realized as N×N complex matrices, N = n·dim L(λ), with
//! block (k, l) holding the L(λ)-operator in position (k, l) and index
//! k·d + p for pattern p of the GT basis. All functions of diagonal
//! operators (Γ, powers, exponentials) act entrywise on GT eigenvalues.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::classical::{gamma_checked, Basis, CANCELLATION_BUDGET};
use crate::error::{Error, Result};
use crate::formal;
use crate::gtrep::{self, diag_real, HighestWeight, Rep, DEGENERACY_TOL};
use crate::linalg::{self, CMat};
use crate::specfun::{self, PfqParams, RayPoint};
use crate::verify::{self, BigSystem, MAX_BIG_DIM};

type C = Complex64;

const TWO_PI_I: C = C::new(0.0, 2.0 * PI);
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Debug, Clone)]
pub struct QuantumSystem {
    pub weight: HighestWeight,
    pub h: f64,
    pub rep: Rep,
}

impl QuantumSystem {
    pub fn n(&self) -> usize {
        self.weight.n()
    }

    /// dim L(λ).
    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    /// T̂ with block (k, l) = ρ(e_{k+1,l+1}).
    pub fn t_matrix(&self) -> CMat {
        gtrep::t_block(&self.rep, self.n()).m
    }

    /// Id ⊗ E_nn.
    pub fn e_n(&self) -> CMat {
        e_n(self.n(), self.dim())
    }

    /// δ_{n-1}(T): T with the (k, n) and (n, k) blocks removed, k < n.
    pub fn delta(&self) -> CMat {
        formal::block_diagonal(&self.t_matrix(), (self.n() - 1) * self.dim())
    }

    /// h/2πi.
    pub fn c(&self) -> C {
        self.h / TWO_PI_I
    }
}

fn e_n(n: usize, d: usize) -> CMat {
    CMat::from_fn(n * d, n * d, |i, j| if i == j && i >= (n - 1) * d { ONE } else { ZERO })
}

pub fn build_quantum(w: &HighestWeight, h: f64) -> Result<QuantumSystem> {
    if !h.is_finite() {
        return Err(Error::Config(format!("h = {h} is not finite")));
    }
    if h == 0.0 {
        return Err(Error::ZeroH);
    }
    if w.n() < 2 {
        return Err(Error::Dimension(format!("need n ≥ 2, got {}", w.n())));
    }
    let rep = Rep::new(w)?;
    if w.n() * rep.dim() > MAX_BIG_DIM {
        return Err(Error::TooLarge(format!("n·dim = {} exceeds {MAX_BIG_DIM}", w.n() * rep.dim())));
    }
    Ok(QuantumSystem { weight: w.clone(), h, rep })
}

/// H₁..H_M of the formal solution at ∞.
pub fn quantum_formal_coeffs(sys: &QuantumSystem, m_max: usize) -> Result<Vec<CMat>> {
    let big = verify::vectorize_quantum(sys)?;
    let s = formal::formal_series(&big.b1, big.na, big.c, m_max)?;
    Ok(s.h.into_iter().skip(1).collect())
}

/// Largest relative residual of the H_m recursion for m < M.
pub fn formal_residual(sys: &QuantumSystem, m_max: usize) -> Result<f64> {
    let big = verify::vectorize_quantum(sys)?;
    let s = formal::formal_series(&big.b1, big.na, big.c, m_max)?;
    Ok((0..m_max).map(|m| s.residual(&big.b1, m)).fold(0.0, f64::max))
}

/// The partially diagonalized system T_{n-1} and its building blocks.
#[derive(Debug, Clone)]
pub struct QuantumDiagonalized {
    pub n: usize,
    pub d: usize,
    pub h: f64,
    /// l_{n-1,i}(Λ) per pattern, i = 1..n−1.
    pub ell: Vec<Vec<f64>>,
    /// ℓ^{(n)}_j, constant on L(λ).
    pub ell_top: Vec<f64>,
    pub alpha: Vec<CMat>,
    pub beta: Vec<CMat>,
    pub e_nn: Vec<f64>,
    /// ℓ^{(n-1)}_n = e_nn − (n − 1).
    pub ell_n: Vec<f64>,
    pub tn1: CMat,
    /// Block-diagonal with scalar blocks ℓ^{(n)}_j + n − 1.
    pub tn: CMat,
    alpha_live: Vec<Vec<bool>>,
    /// Patterns where every αₖ vanishing is forced by the top row (its residue
    /// Πᵢ(ℓₖ − ℓ^{(n)}ᵢ) is zero) rather than by interlacing with row n−2.
    residue_consistent: Vec<bool>,
}

impl QuantumDiagonalized {
    fn c(&self) -> C {
        self.h / TWO_PI_I
    }

    /// Columns j·d + p on which the series solution is a genuine solution.
    ///
    /// Two kinds of column are left out: those where a prefactor pole
    /// 1/(ℓ^{(n)}_j − ℓᵢ) meets an αᵢ annihilating ξ_p (a 0·∞ limit the series
    /// does not describe), and patterns where some αₖ is killed by interlacing
    /// with row n−2 while its residue is nonzero (outside L(λ)₀ proper).
    pub fn regular_columns(&self) -> Vec<usize> {
        let (n, d) = (self.n, self.d);
        (0..n)
            .flat_map(|j| (0..d).map(move |p| (j, p)))
            .filter(|&(_, p)| self.residue_consistent[p])
            .filter(|&(j, p)| (0..n - 1).all(|i| (self.ell_top[j] - self.ell[i][p]).abs() >= DEGENERACY_TOL))
            .map(|(j, p)| j * d + p)
            .collect()
    }

    /// δ_{n-1}(T_{n-1}) = diag(ℓᵢ + n − 2, e_nn).
    pub fn delta(&self) -> CMat {
        let (n, d) = (self.n, self.d);
        let mut v = Vec::with_capacity(n * d);
        for i in 0..n - 1 {
            v.extend(self.ell[i].iter().map(|x| C::new(x + (n - 2) as f64, 0.0)));
        }
        v.extend(self.e_nn.iter().map(|x| C::new(*x, 0.0)));
        linalg::diag(&v)
    }

    /// Y_h = diag(α₁, …, α_{n−1}, Id).
    pub fn y(&self) -> CMat {
        let (n, d) = (self.n, self.d);
        let mut y = linalg::zeros(n * d, n * d);
        for i in 0..n - 1 {
            y.view_mut((i * d, i * d), (d, d)).copy_from(&self.alpha[i]);
        }
        y.view_mut(((n - 1) * d, (n - 1) * d), (d, d)).copy_from(&linalg::eye(d));
        y
    }

    /// Does α_i (0-based, i < n−1) act nontrivially on pattern p? Always true for the last row.
    fn live(&self, i: usize, p: usize) -> bool {
        i + 1 == self.n || self.alpha_live[i][p]
    }

    /// BigSystem of dF/dz = h(iEₙ + T_{n-1}/(2πi z))F.
    pub fn big_system(&self) -> BigSystem {
        BigSystem::new((self.n - 1) * self.d, C::new(0.0, self.h), &self.tn1 * self.c(), "quantum diagonalized: Lambda = h delta(T_{n-1})/2pi i")
    }
}

fn set_block(m: &mut CMat, d: usize, a: usize, b: usize, x: &CMat) {
    m.view_mut((a * d, b * d), (d, d)).copy_from(x);
}

fn block(m: &CMat, d: usize, a: usize, b: usize) -> CMat {
    m.view((a * d, b * d), (d, d)).into_owned()
}

pub fn quantum_diagonalize(sys: &QuantumSystem) -> Result<QuantumDiagonalized> {
    let (n, d, rep) = (sys.n(), sys.dim(), &sys.rep);
    let ell: Vec<Vec<f64>> = (1..n).map(|i| rep.ell_values(n - 1, i)).collect();
    let ell_top: Vec<f64> = (1..=n).map(|j| (sys.weight.lambda[j - 1] - j as i64 + 1) as f64).collect();
    let mut alpha = Vec::with_capacity(n - 1);
    let mut beta = Vec::with_capacity(n - 1);
    for k in 1..n {
        let (a, b) = gtrep::alpha_beta(rep, k)?;
        alpha.push(a);
        beta.push(b);
    }
    let e_nn: Vec<f64> = rep.e(n, n).diagonal().iter().map(|x| x.re).collect();
    let ell_n: Vec<f64> = e_nn.iter().map(|x| x - (n - 1) as f64).collect();
    let mut tn1 = linalg::zeros(n * d, n * d);
    for i in 0..n - 1 {
        let shifted: Vec<f64> = ell[i].iter().map(|x| x + (n - 2) as f64).collect();
        set_block(&mut tn1, d, i, i, &diag_real(&shifted));
        set_block(&mut tn1, d, i, n - 1, &alpha[i]);
        set_block(&mut tn1, d, n - 1, i, &beta[i]);
    }
    set_block(&mut tn1, d, n - 1, n - 1, rep.e(n, n));
    let tn_diag: Vec<C> = (0..n).flat_map(|j| std::iter::repeat(C::new(ell_top[j] + (n - 1) as f64, 0.0)).take(d)).collect();
    let alpha_live: Vec<Vec<bool>> = alpha
        .iter()
        .map(|a| (0..d).map(|p| a.column(p).iter().any(|x| x.norm() > 0.0)).collect())
        .collect();
    let residue_consistent = (0..d)
        .map(|p| {
            (0..n - 1).all(|k| alpha_live[k][p] || ell_top.iter().map(|t| ell[k][p] - t).product::<f64>().abs() < DEGENERACY_TOL)
        })
        .collect();
    Ok(QuantumDiagonalized {
        n,
        d,
        h: sys.h,
        ell,
        ell_top,
        alpha,
        beta,
        e_nn,
        ell_n,
        tn1,
        tn: linalg::diag(&tn_diag),
        alpha_live,
        residue_consistent,
    })
}

/// |ℓ^{(n-1)}_n − (Σℓ^{(n)} − Σℓ^{(n-1)})| over the basis.
pub fn ell_n_residual(q: &QuantumDiagonalized) -> f64 {
    let top: f64 = q.ell_top.iter().sum();
    (0..q.d)
        .map(|p| (q.ell_n[p] - (top - q.ell.iter().map(|l| l[p]).sum::<f64>())).abs())
        .fold(0.0, f64::max)
}

/// diag(P_h, 1)·T_{n-1} = T·diag(P_h, 1) with P_h = 𝒫·D^{−1/2}, on L(λ)₀ columns.
pub fn conjugation_matrix(sys: &QuantumSystem) -> Result<CMat> {
    let (n, d) = (sys.n(), sys.dim());
    let pq = gtrep::pq_matrices(&sys.rep)?;
    let mut scale = linalg::zeros((n - 1) * d, (n - 1) * d);
    for (i, dm) in pq.d.iter().enumerate() {
        let inv: Vec<C> = dm
            .diagonal()
            .iter()
            .map(|x| if x.norm() < DEGENERACY_TOL { ZERO } else { 1.0 / x.sqrt() })
            .collect();
        set_block(&mut scale, d, i, i, &linalg::diag(&inv));
    }
    let p = pq.p.m * scale;
    let mut out = linalg::eye(n * d);
    out.view_mut((0, 0), ((n - 1) * d, (n - 1) * d)).copy_from(&p);
    Ok(out)
}

/// Column indices k·d + p of the big space with p ∈ L(λ)₀.
fn l0_columns(sys: &QuantumSystem) -> Vec<usize> {
    let (n, d) = (sys.n(), sys.dim());
    let l0: Vec<usize> = (0..d).filter(|&p| sys.rep.basis.patterns[p].in_l0()).collect();
    (0..n).flat_map(|k| l0.iter().map(move |p| k * d + p)).collect()
}

fn max_abs_columns(m: &CMat, cols: &[usize]) -> f64 {
    cols.iter().flat_map(|&c| m.column(c).iter().map(|x| x.norm()).collect::<Vec<_>>()).fold(0.0, f64::max)
}

pub fn diagonalization_residual(sys: &QuantumSystem, q: &QuantumDiagonalized) -> Result<f64> {
    let p = conjugation_matrix(sys)?;
    let r = &p * &q.tn1 - sys.t_matrix() * &p;
    Ok(max_abs_columns(&r, &l0_columns(sys)))
}

/// Hypergeometric parameters of block (i, j) at pattern p, 0-based;
/// i = n−1 is the last row. Returns the pFp parameters and α_{ij,n}.
fn q_params(q: &QuantumDiagonalized, i: usize, j: usize, p: usize) -> (PfqParams, Vec<C>, Vec<C>, C) {
    let n = q.n;
    let c = q.c();
    let mu = q.ell_top[j];
    let a: Vec<C> = (0..n - 1).map(|l| c * (mu - q.ell[l][p]) + if l == i { 0.0 } else { 1.0 }).collect();
    let b: Vec<C> = (0..n).map(|l| 1.0 + c * (mu - q.ell_top[l])).collect();
    let sb: C = b.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, x)| x).sum();
    let a_last = sb - a.iter().sum::<C>();
    let den = b.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, x)| *x).collect();
    (PfqParams { num: a.clone(), den }, a, b, a_last)
}

/// 1/(ℓ^{(n)}_j − ℓᵢ) for rows i < n−1, 1 for the last row.
fn prefactor(q: &QuantumDiagonalized, i: usize, j: usize, p: usize) -> Result<C> {
    if i + 1 == q.n {
        return Ok(ONE);
    }
    let gap = q.ell_top[j] - q.ell[i][p];
    if gap.abs() < DEGENERACY_TOL {
        return Err(Error::DegeneratePattern(format!("l_(n,{}) = l_(n-1,{}) on pattern {p}", j + 1, i + 1)));
    }
    Ok(C::new(1.0 / gap, 0.0))
}

#[derive(Debug, Clone)]
pub struct QSeriesValue {
    pub f: CMat,
    pub df: CMat,
    pub err_est: f64,
    pub cancellation: f64,
}

/// F_h(z) = Y_h·H_h(z)·z^{(h/2πi)Tₙ} and its derivative.
pub fn q_series_solution(q: &QuantumDiagonalized, z: RayPoint, tol: f64) -> Result<QSeriesValue> {
    let (n, d) = (q.n, q.d);
    let arg = C::new(0.0, q.h) * z.project();
    let mut hm = linalg::zeros(n * d, n * d);
    let mut dh = linalg::zeros(n * d, n * d);
    let (mut err, mut worst) = (0.0_f64, 1.0_f64);
    for i in 0..n {
        for j in 0..n {
            for p in (0..d).filter(|&p| q.live(i, p)) {
                let (params, ..) = q_params(q, i, j, p);
                let pre = prefactor(q, i, j, p)?;
                let v = specfun::pfq(&params, arg, tol)?;
                let (k, shifted) = params.shifted();
                let dv = specfun::pfq(&shifted, arg, tol)?;
                let ratio = v.cancellation().max(dv.cancellation());
                if ratio > CANCELLATION_BUDGET {
                    return Err(Error::Cancellation { ratio });
                }
                worst = worst.max(ratio);
                err = err.max(ratio * f64::EPSILON + tol);
                hm[(i * d + p, j * d + p)] = pre * v.value;
                dh[(i * d + p, j * d + p)] = pre * C::new(0.0, q.h) * k * dv.value;
            }
        }
    }
    let expo: Vec<C> = q.tn.diagonal().iter().map(|t| q.c() * t).collect();
    let zpow = linalg::diag(&expo.iter().map(|e| specfun::cpow(z, *e)).collect::<Vec<_>>());
    let y = q.y();
    let f = &y * &hm * &zpow;
    let df = &y * (&dh * &zpow + &hm * &zpow * linalg::diag(&expo) / z.project());
    Ok(QSeriesValue { f, df, err_est: err, cancellation: worst })
}

/// Relative residual of F' = h(iEₙ + T_{n-1}/(2πi z))F at z, on the regular columns.
pub fn q_ode_residual(q: &QuantumDiagonalized, z: RayPoint, tol: f64) -> Result<f64> {
    let s = q_series_solution(q, z, tol)?;
    let rhs = (e_n(q.n, q.d) * C::new(0.0, q.h) + &q.tn1 * (q.c() / z.project())) * &s.f;
    let cols = q.regular_columns();
    let scale = max_abs_columns(&s.df, &cols).max(max_abs_columns(&rhs, &cols)).max(1e-300);
    Ok(max_abs_columns(&(&s.df - &rhs), &cols) / scale)
}

/// Taylor coefficients L_{h,0}..L_{h,M} of Y_h·H_h(z).
pub fn q_series_coeffs(q: &QuantumDiagonalized, m_max: usize) -> Result<Vec<CMat>> {
    let (n, d) = (q.n, q.d);
    let mut terms = linalg::zeros(n * d, n * d);
    let mut params = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for p in (0..d).filter(|&p| q.live(i, p)) {
                terms[(i * d + p, j * d + p)] = prefactor(q, i, j, p)?;
                params.push((i * d + p, j * d + p, q_params(q, i, j, p).0));
            }
        }
    }
    let y = q.y();
    let mut out = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        out.push(&y * &terms);
        let mf = m as f64;
        for (r, c, pp) in &params {
            let mut f = C::new(0.0, q.h) / (mf + 1.0);
            for a in &pp.num {
                f *= a + mf;
            }
            for b in &pp.den {
                f /= b + mf;
            }
            terms[(*r, *c)] *= f;
        }
    }
    Ok(out)
}

/// Largest relative residual of L₀Tₙ = T_{n-1}L₀ and
/// mLₘ + cLₘTₙ = hiEₙL_{m−1} + cT_{n-1}Lₘ for m ≤ M, on the regular columns.
pub fn qrecur_residual(q: &QuantumDiagonalized, m_max: usize) -> Result<f64> {
    let l = q_series_coeffs(q, m_max)?;
    let c = q.c();
    let en = e_n(q.n, q.d) * C::new(0.0, q.h);
    let cols = q.regular_columns();
    let rel = |r: CMat, s: f64| max_abs_columns(&r, &cols) / s.max(1e-300);
    let mut worst = rel(&l[0] * &q.tn - &q.tn1 * &l[0], max_abs_columns(&l[0], &cols).max(1.0));
    for m in 1..=m_max {
        let r = &l[m] * C::new(m as f64, 0.0) + &l[m] * &q.tn * c - &en * &l[m - 1] - &q.tn1 * &l[m] * c;
        let scale = max_abs_columns(&l[m], &cols).max(max_abs_columns(&l[m - 1], &cols));
        worst = worst.max(rel(r, scale));
    }
    Ok(worst)
}

/// Base h·e^{iθ} as a point on the cover; negative h moves the argument by π.
fn phase(h: f64, theta: f64) -> RayPoint {
    let off = if h < 0.0 { PI } else { 0.0 };
    RayPoint { r: h.abs(), theta: theta + off }
}

/// U_{h,0} and U_{h,−1}: F_h = F_{h,0}·Y_h·U_{h,0} on Sect₀, F_h = F_{h,−1}·Y_h·U_{h,−1} on Sect₋₁.
pub fn q_transition(q: &QuantumDiagonalized) -> Result<(CMat, CMat)> {
    let (n, d, h) = (q.n, q.d, q.h);
    let mut u0 = linalg::zeros(n * d, n * d);
    let mut um1 = linalg::zeros(n * d, n * d);
    let (down, wrap, up) = (phase(h, -PI / 2.0), phase(h, 1.5 * PI), phase(h, PI / 2.0));
    for k in 0..n {
        for j in 0..n {
            for p in (0..d).filter(|&p| q.live(k, p)) {
                let (_, a, b, a_last) = q_params(q, k, j, p);
                let (r, c) = (k * d + p, j * d + p);
                let mut g = ONE;
                for (l, bl) in b.iter().enumerate() {
                    if l != j {
                        g *= gamma_checked(*bl, &[k + 1, j + 1, l + 1])?;
                    }
                }
                if k + 1 == n {
                    for al in &a {
                        g *= specfun::rgamma(*al);
                    }
                    let v = g * specfun::cpow(up, -a_last);
                    u0[(r, c)] = v;
                    um1[(r, c)] = v;
                    continue;
                }
                let ak = a[k];
                for (l, al) in a.iter().enumerate() {
                    if l != k {
                        g *= specfun::rgamma(*al);
                        g *= gamma_checked(al - ak, &[k + 1, j + 1, l + 1])?;
                    }
                }
                for (l, bl) in b.iter().enumerate() {
                    if l != j {
                        g *= specfun::rgamma(bl - ak);
                    }
                }
                g *= prefactor(q, k, j, p)?;
                u0[(r, c)] = g * specfun::cpow(down, -ak);
                um1[(r, c)] = g * specfun::cpow(wrap, -ak);
            }
        }
    }
    Ok((u0, um1))
}

#[derive(Debug, Clone)]
pub struct QuantumStokes {
    pub s_plus: CMat,
    pub b_plus: Vec<CMat>,
    pub basis: Basis,
}

/// φᵢ(Λ): the diagonal Γ-ratio with branch factors that multiplies h·αᵢ in b_{h+}.
fn phi(q: &QuantumDiagonalized, i: usize) -> Result<Vec<C>> {
    let (n, h, c) = (q.n, q.h, q.c());
    let (down, up) = (phase(h, -PI / 2.0), phase(h, PI / 2.0));
    (0..q.d)
        .map(|p| {
            let x = q.ell[i][p];
            let mut v = specfun::cpow(down, c * (x + (n - 2) as f64)) / specfun::cpow(up, c * (q.e_nn[p] + 1.0));
            for l in (0..n - 1).filter(|&l| l != i) {
                v *= gamma_checked(1.0 + c * (x - 1.0 - q.ell[l][p]), &[i + 1, l + 1])?;
            }
            for lt in &q.ell_top {
                v *= specfun::rgamma(1.0 + c * (x - 1.0 - lt));
            }
            Ok(v)
        })
        .collect()
}

/// S_{h+}(Eₙ, T_{n-1}).
pub fn q_stokes_diag(q: &QuantumDiagonalized) -> Result<QuantumStokes> {
    let (n, d, h) = (q.n, q.d, q.h);
    let mut s = linalg::zeros(n * d, n * d);
    let mut b = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let ex: Vec<C> = q.ell[j].iter().map(|x| C::new(-h * (x + (n - 2) as f64) / 2.0, 0.0).exp()).collect();
        set_block(&mut s, d, j, j, &linalg::diag(&ex));
        let bj = linalg::diag(&phi(q, j)?) * &q.alpha[j] * C::new(-h, 0.0);
        set_block(&mut s, d, j, n - 1, &bj);
        b.push(bj);
    }
    let ex: Vec<C> = q.e_nn.iter().map(|x| C::new(-h * x / 2.0, 0.0).exp()).collect();
    set_block(&mut s, d, n - 1, n - 1, &linalg::diag(&ex));
    Ok(QuantumStokes { s_plus: s, b_plus: b, basis: Basis::Diagonalized })
}

/// Relative residual of e^{−hδ(T_{n-1})/2}·Y_h·U_{h,−1} = S_{h+}·Y_h·U_{h,0}.
pub fn q_stokes_identity_residual(q: &QuantumDiagonalized) -> Result<f64> {
    let (u0, um1) = q_transition(q)?;
    let s = q_stokes_diag(q)?.s_plus;
    let y = q.y();
    let half = linalg::diag(&q.delta().diagonal().iter().map(|x| (x * -q.h / 2.0).exp()).collect::<Vec<_>>());
    let lhs = half * &y * um1;
    let rhs = s * y * u0;
    Ok(linalg::max_abs(&(&lhs - &rhs)) / linalg::max_abs(&lhs).max(1e-300))
}

/// S_{h+}(Eₙ, T) of the original system.
pub fn q_stokes_original(sys: &QuantumSystem) -> Result<QuantumStokes> {
    let q = quantum_diagonalize(sys)?;
    q_stokes_original_from(sys, &q)
}

pub fn q_stokes_original_from(sys: &QuantumSystem, q: &QuantumDiagonalized) -> Result<QuantumStokes> {
    let (n, d, h) = (q.n, q.d, q.h);
    let k = n - 1;
    let upper = gtrep::t_block(&sys.rep, k).m;
    let mut s = linalg::zeros(n * d, n * d);
    s.view_mut((0, 0), (k * d, k * d)).copy_from(&linalg::expm(&(upper * C::new(-h / 2.0, 0.0)))?);
    let ex: Vec<C> = q.e_nn.iter().map(|x| C::new(-h * x / 2.0, 0.0).exp()).collect();
    set_block(&mut s, d, k, k, &linalg::diag(&ex));
    let prs: Vec<gtrep::OperatorMatrix> = (1..n).map(|i| gtrep::projector(&sys.rep, i)).collect::<Result<_>>()?;
    let phis: Vec<CMat> = (0..k).map(|i| phi(q, i).map(|v| linalg::diag(&v))).collect::<Result<_>>()?;
    let mut b = Vec::with_capacity(k);
    for row in 0..k {
        let mut acc = linalg::zeros(d, d);
        for (i, pr) in prs.iter().enumerate() {
            for j in 0..k {
                acc += &phis[i] * pr.block(row, j) * sys.rep.e(j + 1, n);
            }
        }
        let bk = acc * C::new(-h, 0.0);
        set_block(&mut s, d, row, k, &bk);
        b.push(bk);
    }
    Ok(QuantumStokes { s_plus: s, b_plus: b, basis: Basis::Original })
}

/// S_{h+}(Eₙ,T)·diag(P_h,1) − diag(P_h,1)·S_{h+}(Eₙ,T_{n-1}) on L(λ)₀ columns.
pub fn q_conjugation_residual(sys: &QuantumSystem) -> Result<f64> {
    let q = quantum_diagonalize(sys)?;
    let orig = q_stokes_original_from(sys, &q)?.s_plus;
    let diag = q_stokes_diag(&q)?.s_plus;
    let p = conjugation_matrix(sys)?;
    let r = &orig * &p - &p * diag;
    Ok(max_abs_columns(&r, &l0_columns(sys)))
}

/// Rₖ(Λ) = Π_l(ℓₖ − ℓ^{(n)}_l)/Π_{l≠k}(ℓₖ − ℓ_l).
fn r_k(q: &QuantumDiagonalized, k: usize, p: usize) -> f64 {
    let lk = q.ell[k][p];
    q.ell_top.iter().map(|l| lk - l).product::<f64>() / (0..q.n - 1).filter(|&l| l != k).map(|l| lk - q.ell[l][p]).product::<f64>()
}

/// Residuals of the K_{h,1} closed forms against the formal series of the
/// T_{n-1} system: (K_{ik}αₖ, K_{nk}αₖ, K_{in}), compared on columns where αₖ acts.
pub fn k1_residuals(q: &QuantumDiagonalized) -> Result<(f64, f64, f64)> {
    let (n, d) = (q.n, q.d);
    let big = q.big_system();
    let s = formal::formal_series(&big.b1, big.na, big.c, 1)?;
    let k1 = &s.h[1];
    let c = q.c();
    let two_pi = 2.0 * PI;
    let (mut r1, mut r2, mut rn) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..n - 1 {
        let want = &q.alpha[i] * C::new(-1.0 / two_pi, 0.0);
        rn = rn.max(linalg::max_abs(&(block(k1, d, i, n - 1) - want)));
    }
    for kk in 0..n - 1 {
        let live: Vec<usize> = (0..d).filter(|&p| q.alpha_live[kk][p]).collect();
        let got = block(k1, d, n - 1, kk) * &q.alpha[kk];
        for &p in &live {
            let want = C::new(-r_k(q, kk, p) / two_pi, 0.0);
            for r in 0..d {
                let w = if r == p { want } else { ZERO };
                r2 = r2.max((got[(r, p)] - w).norm());
            }
        }
        for i in (0..n - 1).filter(|&i| i != kk) {
            let got = block(k1, d, i, kk) * &q.alpha[kk];
            let scal: Vec<C> = (0..d)
                .map(|p| c * r_k(q, kk, p) / (two_pi * (1.0 + c * (q.ell[i][p] - q.ell[kk][p]))))
                .collect();
            let want = &q.alpha[i] * linalg::diag(&scal);
            for &p in &live {
                for r in 0..d {
                    r1 = r1.max((got[(r, p)] - want[(r, p)]).norm());
                }
            }
        }
    }
    Ok((r1, r2, rn))
}

/// Residual of the operator identity relating the ℓ-resolvent to α, β, at m = 1..M, all j.
///
/// Left side Π_i(m + cℓ^{(n)}_j − cℓ^{(n)}_i)/Π_i(m + cℓ^{(n)}_j − cℓᵢ) is diagonal;
/// the right side m + cℓ^{(n)}_j − cℓ^{(n-1)}_n − Σₖ cβₖ(m + cℓ^{(n)}_j − c(ℓₖ − 1))⁻¹cαₖ.
pub fn resolvent_identity_residual(sys: &QuantumSystem, q: &QuantumDiagonalized, m_max: usize) -> f64 {
    let (n, d) = (q.n, q.d);
    let c = q.c();
    let cols: Vec<usize> = (0..d).filter(|&p| sys.rep.basis.patterns[p].in_l0()).collect();
    let mut worst = 0.0_f64;
    for m in 1..=m_max {
        let mf = m as f64;
        for j in 0..n {
            let x = mf + c * q.ell_top[j];
            let lhs: Vec<C> = (0..d)
                .map(|p| {
                    q.ell_top.iter().map(|l| x - c * l).product::<C>() / (0..n - 1).map(|i| x - c * q.ell[i][p]).product::<C>()
                })
                .collect();
            let mut rhs = linalg::diag(&q.ell_n.iter().map(|e| x - c * e).collect::<Vec<_>>());
            for k in 0..n - 1 {
                let res: Vec<C> = q.ell[k].iter().map(|l| 1.0 / (x - c * (l - 1.0))).collect();
                rhs -= &q.beta[k] * linalg::diag(&res) * &q.alpha[k] * (c * c);
            }
            let r = rhs - linalg::diag(&lhs);
            for &p in &cols {
                worst = worst.max(r.column(p).iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
    }
    worst
}

/// Basis-ordering metadata emitted next to every rendered operator matrix.
#[derive(Debug, Clone, Serialize)]
pub struct BasisOrdering {
    pub weight: Vec<i64>,
    pub dim: usize,
    pub blocks: usize,
    /// "index = k*dim + p": block k, GT pattern p.
    pub index: &'static str,
    pub patterns: Vec<Vec<Vec<i64>>>,
}

pub fn basis_ordering(sys: &QuantumSystem) -> BasisOrdering {
    BasisOrdering {
        weight: sys.weight.lambda.clone(),
        dim: sys.dim(),
        blocks: sys.n(),
        index: "k*dim + p",
        patterns: sys.rep.basis.patterns.iter().map(|p| p.rows.clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(l: &[i64], h: f64) -> QuantumSystem {
        build_quantum(&HighestWeight::new(l.to_vec()).unwrap(), h).unwrap()
    }

    const WEIGHTS: [&[i64]; 4] = [&[1, 0], &[1, 0, 0], &[1, 1, 0], &[2, 1, 0]];

    #[test]
    fn build_guards() {
        let w = HighestWeight::new(vec![1, 0]).unwrap();
        assert!(matches!(build_quantum(&w, 0.0), Err(Error::ZeroH)));
        assert!(matches!(build_quantum(&w, f64::NAN), Err(Error::Config(_))));
        let big = HighestWeight::new(vec![7, 3, 0]).unwrap();
        assert!(matches!(build_quantum(&big, 1.0), Err(Error::TooLarge(_))));
        assert!(matches!(build_quantum(&HighestWeight::new(vec![2]).unwrap(), 1.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn t_blocks_are_generators() {
        let s = sys(&[1, 0], 1.0);
        let t = s.t_matrix();
        for k in 0..2 {
            for l in 0..2 {
                assert_eq!(block(&t, 2, k, l), s.rep.e(k + 1, l + 1).clone());
            }
        }
        let delta = s.delta();
        assert_eq!(linalg::max_abs(&block(&delta, 2, 0, 1)), 0.0);
        assert_eq!(linalg::max_abs(&block(&delta, 2, 1, 0)), 0.0);
        assert_eq!(block(&delta, 2, 1, 1), s.rep.e(2, 2).clone());
    }

    #[test]
    fn trivial_weight() {
        let s = sys(&[0, 0, 0], 0.8);
        for h in quantum_formal_coeffs(&s, 4).unwrap() {
            assert_eq!(linalg::max_abs(&h), 0.0);
        }
        let st = q_stokes_original(&s).unwrap();
        assert!(linalg::max_abs(&(st.s_plus - linalg::eye(3))) < 1e-15);
        // the diagonalized form keeps e^{−h(ℓᵢ+n−2)/2} ≠ 1 but has no off-diagonal part
        let q = quantum_diagonalize(&s).unwrap();
        let d = q_stokes_diag(&q).unwrap().s_plus;
        assert!(linalg::max_abs(&(&d - linalg::diag(&d.diagonal().iter().copied().collect::<Vec<_>>()))) == 0.0);
    }

    #[test]
    fn n2_diagonal_form() {
        let s = sys(&[1, 0], 1.0);
        let q = quantum_diagonalize(&s).unwrap();
        assert!(linalg::max_abs(&(&q.tn1 - s.t_matrix())) < 1e-15);
    }

    #[test]
    fn formal_residuals() {
        for w in WEIGHTS {
            for h in [0.7, 1.0, -0.6] {
                let r = formal_residual(&sys(w, h), 8).unwrap();
                assert!(r < 1e-10, "{w:?} h={h}: {r:e}");
            }
        }
    }

    #[test]
    fn diagonalized_invariants() {
        for w in WEIGHTS {
            let s = sys(w, 0.7);
            let q = quantum_diagonalize(&s).unwrap();
            assert!(ell_n_residual(&q) < 1e-12);
            assert!(diagonalization_residual(&s, &q).unwrap() < 1e-9, "{w:?}");
            assert!(resolvent_identity_residual(&s, &q, 4) < 1e-9, "{w:?}");
        }
    }

    #[test]
    fn recursion_and_ode() {
        for w in WEIGHTS {
            for h in [0.7, 1.0] {
                let q = quantum_diagonalize(&sys(w, h)).unwrap();
                assert!(q.regular_columns().len() >= q.d, "{w:?}: too few regular columns");
                let r = qrecur_residual(&q, 10).unwrap();
                assert!(r < 1e-10, "{w:?} h={h}: qrecur {r:e}");
                for k in 0..10 {
                    let z = RayPoint::new(0.4 + 0.35 * k as f64, -2.5 + 0.6 * k as f64).unwrap();
                    let r = q_ode_residual(&q, z, 1e-15).unwrap();
                    assert!(r < 1e-8, "{w:?} h={h} z={z:?}: {r:e}");
                }
            }
        }
    }

    #[test]
    fn transition_rows_and_phases() {
        let q = quantum_diagonalize(&sys(&[2, 1, 0], 0.7)).unwrap();
        let (u0, um1) = q_transition(&q).unwrap();
        let (n, d) = (q.n, q.d);
        for c in 0..n * d {
            for r in (n - 1) * d..n * d {
                assert_eq!(u0[(r, c)], um1[(r, c)]);
            }
        }
        for i in 0..n - 1 {
            for j in 0..n {
                for p in 0..d {
                    let (r, c) = (i * d + p, j * d + p);
                    if u0[(r, c)] == ZERO {
                        continue;
                    }
                    let (_, a, ..) = q_params(&q, i, j, p);
                    let want = u0[(r, c)] * (-TWO_PI_I * a[i]).exp();
                    assert!((um1[(r, c)] - want).norm() < 1e-12 * want.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn stokes_identity() {
        for w in WEIGHTS {
            for h in [0.7, 1.0] {
                let q = quantum_diagonalize(&sys(w, h)).unwrap();
                let r = q_stokes_identity_residual(&q).unwrap();
                assert!(r < 1e-8, "{w:?} h={h}: {r:e}");
            }
        }
    }

    #[test]
    fn structure_of_closed_forms() {
        for w in WEIGHTS {
            let s = sys(w, 1.0);
            let st = q_stokes_original(&s).unwrap();
            let na = (s.n() - 1) * s.dim();
            assert_eq!(verify::lower_block_norm(&st.s_plus, na), 0.0);
            let upper = gtrep::t_block(&s.rep, s.n() - 1).m;
            let e = linalg::expm(&(upper * C::new(-0.5, 0.0))).unwrap();
            assert!(linalg::max_abs(&(st.s_plus.view((0, 0), (na, na)).into_owned() - e)) < 1e-12);
        }
    }

    #[test]
    fn conjugation_path() {
        for w in WEIGHTS {
            for h in [0.7, 1.0] {
                let r = q_conjugation_residual(&sys(w, h)).unwrap();
                assert!(r < 1e-8, "{w:?} h={h}: {r:e}");
            }
        }
    }

    #[test]
    fn k1_closed_forms() {
        for w in WEIGHTS {
            let q = quantum_diagonalize(&sys(w, 0.7)).unwrap();
            let (r1, r2, rn) = k1_residuals(&q).unwrap();
            assert!(r1 < 1e-8 && r2 < 1e-8 && rn < 1e-8, "{w:?}: {r1:e} {r2:e} {rn:e}");
        }
    }
}
