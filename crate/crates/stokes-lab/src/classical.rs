//! The classical confluent hypergeometric system dF/dz = (iEₙ − A/(2πi z)) F.
//!
//! Spectral data of the nested principal submatrices, the diagonalization of
//! the upper-left block, the ₙ₋₁Fₙ₋₁ series solution at z = 0, the transition
//! matrices to the canonical solutions at ∞, and closed-form S₊.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formal;
use crate::linalg::{self, CMat};
use crate::specfun::{self, PfqParams, RayPoint};

type C = Complex64;

const TWO_PI_I: C = C::new(0.0, 2.0 * PI);

/// (λᵢ − λⱼ)/2πi within this distance of a nonzero integer is resonant.
pub const NONRESONANCE_TOL: f64 = 1e-9;
/// Γ arguments closer than this to a pole are rejected.
pub const GAMMA_POLE_GUARD: f64 = 1e-9;
/// Minimum spacing of λ^{(n-1)} accepted by the projector formula.
pub const EIGEN_GAP_FLOOR: f64 = 1e-6;
/// Relative floor for |Dᵢ|.
pub const DEGENERATE_TOL: f64 = 1e-10;
/// Threshold behind the booleans of [`GenericityReport`].
pub const GENERIC_TOL: f64 = 1e-8;
/// Largest max-term/|sum| ratio accepted from a series evaluation.
pub const CANCELLATION_BUDGET: f64 = 1e7;

#[derive(Debug, Clone)]
pub struct ClassicalSystem {
    pub n: usize,
    pub a: CMat,
    /// `lambda[k]`: eigenvalues of the upper-left (k+1)×(k+1) block, sorted.
    pub lambda: Vec<Vec<C>>,
}

impl ClassicalSystem {
    pub fn a_nn(&self) -> C {
        self.a[(self.n - 1, self.n - 1)]
    }

    /// Upper-left (n−1)×(n−1) block.
    pub fn upper_block(&self) -> CMat {
        self.a.view((0, 0), (self.n - 1, self.n - 1)).into_owned()
    }

    /// Last column above the diagonal, (a_{1n}, …, a_{n−1,n}).
    pub fn last_column(&self) -> Vec<C> {
        (0..self.n - 1).map(|j| self.a[(j, self.n - 1)]).collect()
    }
}

/// Validate and compute the nested spectra.
pub fn build_system(a: &CMat) -> Result<ClassicalSystem> {
    let n = a.nrows();
    if a.ncols() != n || !(2..=8).contains(&n) {
        return Err(Error::Dimension(format!("classical system needs a square n×n matrix with 2 ≤ n ≤ 8, got {}×{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidParams("matrix has non-finite entries".into()));
    }
    let lambda = (1..=n)
        .map(|k| linalg::eigenvalues(&a.view((0, 0), (k, k)).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    let top = &lambda[n - 1];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let x = (top[i] - top[j]) / TWO_PI_I;
            let k = x.re.round();
            if k >= 1.0 && (x - k).norm() < NONRESONANCE_TOL {
                return Err(Error::Resonant(format!("(λ{} − λ{})/2πi = {x} is within {NONRESONANCE_TOL:e} of {k}", i + 1, j + 1)));
            }
        }
    }
    Ok(ClassicalSystem { n, a: a.clone(), lambda })
}

/// Seeded random matrix with real and imaginary parts uniform in [−b, b].
pub fn seeded_matrix(seed: u64, n: usize, b: f64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(n, n, |_, _| C::new(rng.gen_range(-b..=b), rng.gen_range(-b..=b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenericityReport {
    /// λ^{(n-1)} pairwise distinct.
    pub distinct_n_minus_1: bool,
    /// λ^{(n-1)} disjoint from λ^{(n-2)}.
    pub separated_levels: bool,
    pub min_gap: f64,
}

pub fn genericity(sys: &ClassicalSystem) -> GenericityReport {
    let n = sys.n;
    let l1 = &sys.lambda[n - 2];
    let mut g1 = f64::INFINITY;
    for i in 0..l1.len() {
        for j in i + 1..l1.len() {
            g1 = g1.min((l1[i] - l1[j]).norm());
        }
    }
    let mut g2 = f64::INFINITY;
    if n >= 3 {
        for x in l1 {
            for y in &sys.lambda[n - 3] {
                g2 = g2.min((x - y).norm());
            }
        }
    }
    GenericityReport { distinct_n_minus_1: g1 > GENERIC_TOL, separated_levels: g2 > GENERIC_TOL, min_gap: g1.min(g2) }
}

fn submatrix_det(m: &CMat, rows: &[usize], cols: &[usize]) -> C {
    if rows.is_empty() {
        return C::new(1.0, 0.0);
    }
    let s = CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
    // square by construction
    s.lu().determinant()
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 { 1.0 } else { -1.0 }
}

/// Data of A_{n-1} = diag(P⁻¹,1)·A·diag(P,1).
#[derive(Debug, Clone)]
pub struct DiagonalizedSystem {
    pub n: usize,
    /// λ^{(n-1)}₁..λ^{(n-1)}_{n−1}, in the order used throughout.
    pub lam: Vec<C>,
    /// λ^{(n)}, length n.
    pub lam_top: Vec<C>,
    /// λ^{(n-2)}, length n−2.
    pub lam_below: Vec<C>,
    pub a_col: Vec<C>,
    pub b_row: Vec<C>,
    /// a_{nn}, also written λ^{(n-1)}_n.
    pub a_nn: C,
    pub p_cal: CMat,
    pub q_cal: CMat,
    pub p: CMat,
    pub q: CMat,
    pub d: Vec<C>,
}

impl DiagonalizedSystem {
    /// The assembled arrow matrix A_{n-1}.
    pub fn arrow(&self) -> CMat {
        let n = self.n;
        let mut m = linalg::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i)] = self.lam[i];
            m[(i, n - 1)] = self.a_col[i];
            m[(n - 1, i)] = self.b_row[i];
        }
        m[(n - 1, n - 1)] = self.a_nn;
        m
    }

    /// Y = diag(a₁, …, a_{n−1}, 1).
    pub fn y(&self) -> CMat {
        let mut v = self.a_col.clone();
        v.push(C::new(1.0, 0.0));
        linalg::diag(&v)
    }

    /// diag(P, 1).
    pub fn p_ext(&self) -> CMat {
        extend(&self.p)
    }

    /// diag(Q, 1) = diag(P, 1)⁻¹.
    pub fn q_ext(&self) -> CMat {
        extend(&self.q)
    }

    /// δ_{n-1}(A_{n-1}) = diag(λ^{(n-1)}, a_nn).
    pub fn delta(&self) -> CMat {
        let mut v = self.lam.clone();
        v.push(self.a_nn);
        linalg::diag(&v)
    }
}

fn extend(m: &CMat) -> CMat {
    let k = m.nrows();
    let mut out = linalg::eye(k + 1);
    out.view_mut((0, 0), (k, k)).copy_from(m);
    out
}

/// Diagonalize with the sorted λ^{(n-1)} order.
pub fn diagonalize(sys: &ClassicalSystem) -> Result<DiagonalizedSystem> {
    diagonalize_with_order(sys, &sys.lambda[sys.n - 2])
}

/// Diagonalize using a caller-chosen ordering of λ^{(n-1)}.
pub fn diagonalize_with_order(sys: &ClassicalSystem, lam: &[C]) -> Result<DiagonalizedSystem> {
    let n = sys.n;
    if lam.len() != n - 1 {
        return Err(Error::Dimension(format!("expected {} eigenvalues, got {}", n - 1, lam.len())));
    }
    let a = &sys.a;
    let lam_top = sys.lambda[n - 1].clone();
    let lam_below = if n >= 3 { sys.lambda[n - 3].clone() } else { Vec::new() };
    let a_nn = sys.a_nn();
    if n == 2 {
        let one = linalg::eye(1);
        return Ok(DiagonalizedSystem {
            n,
            lam: lam.to_vec(),
            lam_top,
            lam_below,
            a_col: vec![a[(0, 1)]],
            b_row: vec![a[(1, 0)]],
            a_nn,
            p_cal: one.clone(),
            q_cal: one.clone(),
            p: one.clone(),
            q: one,
            d: vec![C::new(1.0, 0.0)],
        });
    }
    let report = genericity(sys);
    if !report.distinct_n_minus_1 || !report.separated_levels {
        return Err(Error::Degenerate(format!("nested eigenvalues collide (min gap {:e})", report.min_gap)));
    }
    let k = n - 1;
    let scale = linalg::norm_inf(a).max(1.0).powi(2 * n as i32 - 4);
    let d: Vec<C> = (0..k)
        .map(|i| {
            let p1: C = (0..k).filter(|&l| l != i).map(|l| lam[l] - lam[i]).product();
            let p2: C = lam_below.iter().map(|l| l - lam[i]).product();
            p1 * p2
        })
        .collect();
    if let Some((i, di)) = d.iter().enumerate().find(|(_, di)| di.norm() < DEGENERATE_TOL * scale) {
        return Err(Error::Degenerate(format!("|D_{}| = {:e} below floor", i + 1, di.norm())));
    }
    let top_rows: Vec<usize> = (0..n - 2).collect();
    let mut p_cal = linalg::zeros(k, k);
    let mut q_cal = linalg::zeros(k, k);
    let mut a_col = Vec::with_capacity(k);
    let mut b_row = Vec::with_capacity(k);
    let mut with_last = top_rows.clone();
    with_last.push(n - 1);
    let first_k: Vec<usize> = (0..k).collect();
    let root: Vec<C> = d.iter().map(|x| x.sqrt()).collect();
    for i in 0..k {
        let shifted = a - linalg::eye(n) * lam[i];
        for j in 0..k {
            let others: Vec<usize> = (0..k).filter(|&x| x != j).collect();
            p_cal[(j, i)] = submatrix_det(&shifted, &top_rows, &others) * sign(i + j);
            q_cal[(i, j)] = submatrix_det(&shifted, &others, &top_rows) * sign(i + j);
        }
        let s = sign(i + n);
        a_col.push(submatrix_det(&shifted, &first_k, &with_last) * s / root[i]);
        b_row.push(submatrix_det(&shifted, &with_last, &first_k) * s / root[i]);
    }
    let inv_root: Vec<C> = root.iter().map(|r| 1.0 / r).collect();
    let p = &p_cal * linalg::diag(&inv_root);
    let q = linalg::diag(&inv_root) * &q_cal;
    Ok(DiagonalizedSystem { n, lam: lam.to_vec(), lam_top, lam_below, a_col, b_row, a_nn, p_cal, q_cal, p, q, d })
}

/// Hypergeometric parameters of the series solution, 0-based: `i` in 0..n
/// (i = n−1 is the last row), `j` in 0..n, `l` in 0..n−1 for `a` and 0..n for `b`.
#[derive(Debug, Clone)]
pub struct HypergeomTable {
    pub a_params: Vec<Vec<Vec<C>>>,
    pub b_params: Vec<Vec<Vec<C>>>,
    /// a_{ij,n} = Σ_{l≠j} b_{ij,l} − Σ_l a_{ij,l}.
    pub a_last: Vec<Vec<C>>,
}

impl HypergeomTable {
    pub fn new(d: &DiagonalizedSystem) -> Self {
        let n = d.n;
        let mut a_params = vec![vec![Vec::new(); n]; n];
        let mut b_params = vec![vec![Vec::new(); n]; n];
        let mut a_last = vec![vec![C::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mu = d.lam_top[j];
                let a: Vec<C> = (0..n - 1)
                    .map(|l| {
                        let base = (d.lam[l] - mu) / TWO_PI_I;
                        if l == i { base } else { base + 1.0 }
                    })
                    .collect();
                let b: Vec<C> = (0..n).map(|l| 1.0 + (d.lam_top[l] - mu) / TWO_PI_I).collect();
                let sb: C = b.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, x)| x).sum();
                a_last[i][j] = sb - a.iter().sum::<C>();
                a_params[i][j] = a;
                b_params[i][j] = b;
            }
        }
        HypergeomTable { a_params, b_params, a_last }
    }

    /// (a_{ij,·}; b_{ij,l≠j}) as pFq parameters.
    pub fn params(&self, i: usize, j: usize) -> PfqParams {
        let den = self.b_params[i][j].iter().enumerate().filter(|(l, _)| *l != j).map(|(_, x)| *x).collect();
        PfqParams { num: self.a_params[i][j].clone(), den }
    }
}

/// F(z), F'(z) and the accumulated error estimate of a series evaluation.
#[derive(Debug, Clone)]
pub struct SeriesValue {
    pub f: CMat,
    pub df: CMat,
    pub err_est: f64,
    /// Worst max-term/|sum| ratio seen.
    pub cancellation: f64,
}

/// Row prefactor of H: 1/(λ^{(n)}_j − λ^{(n-1)}_i) for i ≤ n−1, 1 for the last row.
fn row_prefactor(d: &DiagonalizedSystem, i: usize, j: usize) -> C {
    if i + 1 == d.n { C::new(1.0, 0.0) } else { 1.0 / (d.lam_top[j] - d.lam[i]) }
}

/// F(z; Eₙ, A_{n-1}) = Y·H(z)·z^{−Aₙ/2πi} near z = 0.
pub fn series_solution(d: &DiagonalizedSystem, z: RayPoint, tol: f64) -> Result<SeriesValue> {
    let n = d.n;
    let table = HypergeomTable::new(d);
    let iz = C::new(0.0, 1.0) * z.project();
    let mut h = linalg::zeros(n, n);
    let mut dh = linalg::zeros(n, n);
    let mut err = 0.0_f64;
    let mut worst = 1.0_f64;
    for i in 0..n {
        for j in 0..n {
            let params = table.params(i, j);
            let pre = row_prefactor(d, i, j);
            let v = specfun::pfq(&params, iz, tol)?;
            let (k, shifted) = params.shifted();
            let dv = specfun::pfq(&shifted, iz, tol)?;
            let ratio = v.cancellation().max(dv.cancellation());
            if ratio > CANCELLATION_BUDGET {
                return Err(Error::Cancellation { ratio });
            }
            worst = worst.max(ratio);
            err = err.max(ratio * f64::EPSILON + tol);
            h[(i, j)] = pre * v.value;
            dh[(i, j)] = pre * C::new(0.0, 1.0) * k * dv.value;
        }
    }
    let expo: Vec<C> = d.lam_top.iter().map(|l| -l / TWO_PI_I).collect();
    let zpow = linalg::diag(&expo.iter().map(|e| specfun::cpow(z, *e)).collect::<Vec<_>>());
    let y = d.y();
    let zinv = 1.0 / z.project();
    let f = &y * &h * &zpow;
    // d/dz z^{−Λ} = z^{−Λ}·(−Λ/z)
    let df = &y * (&dh * &zpow + &h * &zpow * linalg::diag(&expo) * zinv);
    Ok(SeriesValue { f, df, err_est: err, cancellation: worst })
}

/// Taylor coefficients L₀..L_M of Y·H(z) = Σ Lₘ zᵐ.
pub fn series_coeffs(d: &DiagonalizedSystem, m_max: usize) -> Vec<CMat> {
    let n = d.n;
    let table = HypergeomTable::new(d);
    let y = d.y();
    let mut out = Vec::with_capacity(m_max + 1);
    let mut terms: Vec<Vec<C>> = (0..n).map(|i| (0..n).map(|j| row_prefactor(d, i, j)).collect()).collect();
    for m in 0..=m_max {
        let l = CMat::from_fn(n, n, |i, j| terms[i][j]);
        out.push(&y * l);
        let mf = m as f64;
        for i in 0..n {
            for j in 0..n {
                let p = table.params(i, j);
                let mut r = C::new(0.0, 1.0) / (mf + 1.0);
                for a in &p.num {
                    r *= a + mf;
                }
                for b in &p.den {
                    r /= b + mf;
                }
                terms[i][j] *= r;
            }
        }
    }
    out
}

/// Formal coefficients h₁..h_M at ∞ of the original system.
pub fn formal_coeffs(sys: &ClassicalSystem, m_max: usize) -> Result<Vec<CMat>> {
    let big = crate::verify::vectorize_classical(sys);
    let s = formal::formal_series(&big.b1, big.na, big.c, m_max)?;
    Ok(s.h.into_iter().skip(1).collect())
}

pub(crate) fn gamma_checked(z: C, index: &[usize]) -> Result<C> {
    let k = z.re.round();
    if k <= 0.0 && (z - k).norm() < GAMMA_POLE_GUARD {
        return Err(Error::GammaPole { index: index.to_vec(), arg: format!("{z}") });
    }
    specfun::gamma(z).map_err(|_| Error::GammaPole { index: index.to_vec(), arg: format!("{z}") })
}

/// U₀ and U₋₁ relating the series solution to the canonical solutions.
pub fn transition_matrices(d: &DiagonalizedSystem) -> Result<(CMat, CMat)> {
    let n = d.n;
    let t = HypergeomTable::new(d);
    let mut u0 = linalg::zeros(n, n);
    let mut um1 = linalg::zeros(n, n);
    let down = RayPoint { r: 1.0, theta: -PI / 2.0 };
    let wrap = RayPoint { r: 1.0, theta: 1.5 * PI };
    let up = RayPoint { r: 1.0, theta: PI / 2.0 };
    for j in 0..n {
        for k in 0..n {
            let a = &t.a_params[k][j];
            let b = &t.b_params[k][j];
            let mut g = C::new(1.0, 0.0);
            for (l, bl) in b.iter().enumerate() {
                if l != j {
                    g *= gamma_checked(*bl, &[k + 1, j + 1, l + 1])?;
                }
            }
            if k + 1 == n {
                for al in a {
                    g *= specfun::rgamma(*al);
                }
                // e^{−πi a_{nj,n}/2}
                let v = g * specfun::cpow(up, -t.a_last[k][j]);
                u0[(k, j)] = v;
                um1[(k, j)] = v;
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
            g /= d.lam_top[j] - d.lam[k];
            u0[(k, j)] = g * specfun::cpow(down, -ak);
            um1[(k, j)] = g * specfun::cpow(wrap, -ak);
        }
    }
    Ok((u0, um1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Original,
    Diagonalized,
}

#[derive(Debug, Clone)]
pub struct StokesClosedForm {
    pub s_plus: CMat,
    pub b_plus: Vec<C>,
    pub basis: Basis,
}

/// Γ-product coefficient multiplying aⱼ in (b₊^{(n)})ⱼ, including e^{(λⱼ+aₙₙ)/4}.
fn b_plus_coefficient(d: &DiagonalizedSystem, j: usize) -> Result<C> {
    let lj = d.lam[j];
    let mut c = ((lj + d.a_nn) / 4.0).exp();
    for (l, ll) in d.lam.iter().enumerate() {
        c *= gamma_checked(1.0 + (ll - lj) / TWO_PI_I, &[j + 1, l + 1])?;
    }
    for ll in &d.lam_top {
        c *= specfun::rgamma(1.0 + (ll - lj) / TWO_PI_I);
    }
    Ok(c)
}

/// S₊(Eₙ, A_{n-1}) of the diagonalized system.
pub fn stokes_plus_diag(d: &DiagonalizedSystem) -> Result<StokesClosedForm> {
    let n = d.n;
    let mut s = linalg::zeros(n, n);
    let mut b = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        s[(j, j)] = (d.lam[j] / 2.0).exp();
        let bj = b_plus_coefficient(d, j)? * d.a_col[j];
        s[(j, n - 1)] = bj;
        b.push(bj);
    }
    s[(n - 1, n - 1)] = (d.a_nn / 2.0).exp();
    Ok(StokesClosedForm { s_plus: s, b_plus: b, basis: Basis::Diagonalized })
}

/// Residual of e^{δ/2}·Y·U₋₁ = S₊·Y·U₀, relative to the larger side.
pub fn stokes_identity_residual(d: &DiagonalizedSystem) -> Result<f64> {
    let (u0, um1) = transition_matrices(d)?;
    let s = stokes_plus_diag(d)?.s_plus;
    let y = d.y();
    let half = linalg::expm(&(d.delta() / C::new(2.0, 0.0)))?;
    let lhs = half * &y * um1;
    let rhs = s * y * u0;
    Ok(linalg::max_abs(&(&lhs - &rhs)) / linalg::max_abs(&lhs).max(1e-300))
}

/// Spectral projectors prᵢ of A^{(n-1)} for the given eigenvalue order.
pub fn projectors(block: &CMat, lam: &[C]) -> Result<Vec<CMat>> {
    let k = block.nrows();
    for i in 0..lam.len() {
        for l in i + 1..lam.len() {
            if (lam[i] - lam[l]).norm() < EIGEN_GAP_FLOOR {
                return Err(Error::Degenerate(format!("eigenvalues λ{} and λ{} of the upper block are {:e} apart", i + 1, l + 1, (lam[i] - lam[l]).norm())));
            }
        }
    }
    Ok((0..lam.len())
        .map(|i| {
            let mut pr = linalg::eye(k);
            for (l, ll) in lam.iter().enumerate() {
                if l != i {
                    pr = pr * (block - linalg::eye(k) * *ll) / (lam[i] - ll);
                }
            }
            pr
        })
        .collect())
}

/// S₊(Eₙ, A) by the projector formula, plus the conjugation path for comparison.
#[derive(Debug, Clone)]
pub struct StokesOriginal {
    pub closed: StokesClosedForm,
    /// diag(P,1)·S₊(Eₙ,A_{n-1})·diag(P⁻¹,1).
    pub conjugated: CMat,
    pub projectors: Vec<CMat>,
}

pub fn stokes_plus_original(sys: &ClassicalSystem) -> Result<StokesOriginal> {
    stokes_plus_original_with_order(sys, &sys.lambda[sys.n - 2])
}

pub fn stokes_plus_original_with_order(sys: &ClassicalSystem, lam: &[C]) -> Result<StokesOriginal> {
    let n = sys.n;
    let block = sys.upper_block();
    let col = sys.last_column();
    let mut s = linalg::zeros(n, n);
    s.view_mut((0, 0), (n - 1, n - 1)).copy_from(&linalg::expm(&(&block / C::new(2.0, 0.0)))?);
    s[(n - 1, n - 1)] = (sys.a_nn() / 2.0).exp();
    if col.iter().all(|a| *a == C::new(0.0, 0.0)) {
        // Every projector term multiplies the zero column: b₊ vanishes even when
        // the upper block is degenerate, so no spectral data is needed.
        let closed = StokesClosedForm { s_plus: s.clone(), b_plus: vec![C::new(0.0, 0.0); n - 1], basis: Basis::Original };
        return Ok(StokesOriginal { closed, conjugated: s, projectors: Vec::new() });
    }
    let pr = projectors(&block, lam)?;
    let d = diagonalize_with_order(sys, lam)?;
    let coeffs = (0..n - 1).map(|i| b_plus_coefficient(&d, i)).collect::<Result<Vec<_>>>()?;
    let mut b = vec![C::new(0.0, 0.0); n - 1];
    for (k, bk) in b.iter_mut().enumerate() {
        for (i, ci) in coeffs.iter().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for (j, aj) in col.iter().enumerate() {
                acc += pr[i][(k, j)] * aj;
            }
            *bk += ci * acc;
        }
        s[(k, n - 1)] = *bk;
    }
    let diag_form = stokes_plus_diag(&d)?;
    let conjugated = d.p_ext() * diag_form.s_plus * d.q_ext();
    Ok(StokesOriginal { closed: StokesClosedForm { s_plus: s, b_plus: b, basis: Basis::Original }, conjugated, projectors: pr })
}
