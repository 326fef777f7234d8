//! Finite-dimensional irreducible 𝔤𝔩ₙ-modules L(λ) in the Gelfand–Tsetlin basis.
//!
//! Everything is realized as dense complex matrices in a fixed basis order
//! (lexicographic on the flattened pattern rows). On top of the generators
//! sit the quantum minors of T(x) = (e_ij) − x·Id, their ℓ-substitutions,
//! the off-diagonal entries α, β of the partially diagonalized T, and the
//! operator-valued spectral projectors Prᵢ of the upper-left block.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

type C = Complex64;

pub const MAX_RANK: usize = 5;
pub const MAX_DIM: usize = 500;
/// Largest minor expanded over all permutations.
pub const MAX_MINOR: usize = 6;
/// Floor on pattern-eigenvalue differences used as denominators.
pub const DEGENERACY_TOL: f64 = 1e-12;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HighestWeight {
    pub lambda: Vec<i64>,
}

impl HighestWeight {
    pub fn new(lambda: Vec<i64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Config("empty highest weight".into()));
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Config(format!("highest weight {lambda:?} is not non-increasing")));
        }
        Ok(HighestWeight { lambda })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Weyl dimension formula Π_{i<j} (λᵢ − λⱼ + j − i)/(j − i).
    pub fn weyl_dimension(&self) -> f64 {
        let l = &self.lambda;
        let mut d = 1.0;
        for i in 0..l.len() {
            for j in i + 1..l.len() {
                d *= (l[i] - l[j] + (j - i) as i64) as f64 / (j - i) as f64;
            }
        }
        d.round()
    }
}

/// rows[k] holds λ^{(k+1)}; the last row is λ itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GTPattern {
    pub rows: Vec<Vec<i64>>,
}

impl GTPattern {
    /// λ^{(m)}_j, 1-based.
    pub fn lambda(&self, m: usize, j: usize) -> i64 {
        self.rows[m - 1][j - 1]
    }

    /// l_{mj} = λ^{(m)}_j − j + 1, 1-based.
    pub fn l(&self, m: usize, j: usize) -> f64 {
        (self.lambda(m, j) - j as i64 + 1) as f64
    }

    /// Λ ± δ_{mj}, without validity checks.
    pub fn shifted(&self, m: usize, j: usize, by: i64) -> GTPattern {
        let mut rows = self.rows.clone();
        rows[m - 1][j - 1] += by;
        GTPattern { rows }
    }

    pub fn is_valid(&self) -> bool {
        (1..self.rows.len()).all(|i| {
            let (lo, hi) = (&self.rows[i - 1], &self.rows[i]);
            (0..lo.len()).all(|j| hi[j] >= lo[j] && lo[j] >= hi[j + 1])
        })
    }

    /// Membership in L(λ)₀: λ^{(n-1)}_j ≠ λ^{(n-2)}_i for all i, j.
    pub fn in_l0(&self) -> bool {
        let n = self.rows.len();
        if n < 3 {
            return true;
        }
        let (a, b) = (&self.rows[n - 2], &self.rows[n - 3]);
        a.iter().all(|x| b.iter().all(|y| x != y))
    }
}

#[derive(Debug, Clone)]
pub struct GTBasis {
    pub weight: HighestWeight,
    pub patterns: Vec<GTPattern>,
    index: HashMap<GTPattern, usize>,
}

impl GTBasis {
    pub fn dim(&self) -> usize {
        self.patterns.len()
    }

    pub fn position(&self, p: &GTPattern) -> Option<usize> {
        self.index.get(p).copied()
    }
}

fn extend_patterns(rows: &mut Vec<Vec<i64>>, out: &mut Vec<GTPattern>) {
    let top = rows[0].clone();
    if top.len() == 1 {
        out.push(GTPattern { rows: rows.clone() });
        return;
    }
    let k = top.len() - 1;
    let mut row = vec![0; k];
    fn fill(j: usize, top: &[i64], row: &mut Vec<i64>, rows: &mut Vec<Vec<i64>>, out: &mut Vec<GTPattern>) {
        if j == row.len() {
            rows.insert(0, row.clone());
            extend_patterns(rows, out);
            rows.remove(0);
            return;
        }
        for v in top[j + 1]..=top[j] {
            row[j] = v;
            fill(j + 1, top, row, rows, out);
        }
    }
    fill(0, &top, &mut row, rows, out);
}

pub fn enumerate_basis(w: &HighestWeight) -> Result<GTBasis> {
    if w.n() > MAX_RANK {
        return Err(Error::TooLarge(format!("rank {} exceeds {MAX_RANK}", w.n())));
    }
    let dim = w.weyl_dimension();
    if dim > MAX_DIM as f64 {
        return Err(Error::TooLarge(format!("dim L(λ) = {dim} exceeds {MAX_DIM}")));
    }
    let mut patterns = Vec::with_capacity(dim as usize);
    extend_patterns(&mut vec![w.lambda.clone()], &mut patterns);
    patterns.sort_by(|a, b| a.rows.concat().cmp(&b.rows.concat()));
    let index = patterns.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
    Ok(GTBasis { weight: w.clone(), patterns, index })
}

fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// L(λ) with all generators e_ij realized.
#[derive(Debug, Clone)]
pub struct Rep {
    pub basis: GTBasis,
    gens: Vec<CMat>,
}

impl Rep {
    pub fn new(w: &HighestWeight) -> Result<Self> {
        let basis = enumerate_basis(w)?;
        let n = w.n();
        let d = basis.dim();
        let mut gens = vec![linalg::zeros(d, d); n * n];
        let at = |i: usize, j: usize| (i - 1) * n + (j - 1);
        for k in 1..=n {
            for (a, p) in basis.patterns.iter().enumerate() {
                let above: i64 = p.rows[k - 1].iter().sum();
                let below: i64 = if k > 1 { p.rows[k - 2].iter().sum() } else { 0 };
                gens[at(k, k)][(a, a)] = C::new((above - below) as f64, 0.0);
            }
        }
        for k in 1..n {
            let (mut up, mut down) = (linalg::zeros(d, d), linalg::zeros(d, d));
            for (a, p) in basis.patterns.iter().enumerate() {
                let l = |m: usize, j: usize| p.l(m, j);
                for j in 1..=k {
                    let lkj = l(k, j);
                    if let Some(b) = basis.position(&p.shifted(k, j, 1)) {
                        let num = -(1..=k + 1).map(|i| lkj - l(k + 1, i)).product::<f64>()
                            * (1..k).map(|i| lkj + 1.0 - l(k - 1, i)).product::<f64>();
                        let den = (1..=k).filter(|&i| i != j).map(|i| (lkj - l(k, i)) * (lkj + 1.0 - l(k, i))).product::<f64>();
                        up[(b, a)] += C::new(num / den, 0.0).sqrt();
                    }
                    if let Some(b) = basis.position(&p.shifted(k, j, -1)) {
                        let num = -(1..k).map(|i| lkj - l(k - 1, i)).product::<f64>()
                            * (1..=k + 1).map(|i| lkj - 1.0 - l(k + 1, i)).product::<f64>();
                        let den = (1..=k).filter(|&i| i != j).map(|i| (lkj - l(k, i)) * (lkj - 1.0 - l(k, i))).product::<f64>();
                        down[(b, a)] += C::new(num / den, 0.0).sqrt();
                    }
                }
            }
            gens[at(k, k + 1)] = up;
            gens[at(k + 1, k)] = down;
        }
        for dist in 2..n {
            for i in 1..=n - dist {
                let j = i + dist;
                gens[at(i, j)] = commutator(&gens[at(i, j - 1)], &gens[at(j - 1, j)]);
                gens[at(j, i)] = commutator(&gens[at(j, j - 1)], &gens[at(j - 1, i)]);
            }
        }
        Ok(Rep { basis, gens })
    }

    pub fn n(&self) -> usize {
        self.basis.weight.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// ρ(e_ij), 1-based.
    pub fn e(&self, i: usize, j: usize) -> &CMat {
        &self.gens[(i - 1) * self.n() + (j - 1)]
    }

    /// Eigenvalues l_{mj}(Λ) over the basis.
    pub fn ell_values(&self, m: usize, j: usize) -> Vec<f64> {
        self.basis.patterns.iter().map(|p| p.l(m, j)).collect()
    }

    /// ℓ^{(m)}_j as a diagonal operator.
    pub fn ell(&self, m: usize, j: usize) -> CMat {
        diag_real(&self.ell_values(m, j))
    }

    pub fn id(&self) -> CMat {
        linalg::eye(self.dim())
    }
}

pub fn diag_real(v: &[f64]) -> CMat {
    linalg::diag(&v.iter().map(|x| C::new(*x, 0.0)).collect::<Vec<_>>())
}

/// ρ(e_ij) for a single generator.
pub fn generator(w: &HighestWeight, i: usize, j: usize) -> Result<CMat> {
    let rep = Rep::new(w)?;
    if !(1..=w.n()).contains(&i) || !(1..=w.n()).contains(&j) {
        return Err(Error::Config(format!("generator index ({i},{j}) out of range")));
    }
    Ok(rep.e(i, j).clone())
}

/// Polynomial in a central indeterminate x with operator coefficients.
#[derive(Debug, Clone)]
pub struct OperatorPolynomial {
    pub coeffs: Vec<CMat>,
}

impl OperatorPolynomial {
    pub fn constant(m: CMat) -> Self {
        OperatorPolynomial { coeffs: vec![m] }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mul(&self, other: &OperatorPolynomial) -> OperatorPolynomial {
        let d = self.dim();
        let mut coeffs = vec![linalg::zeros(d, d); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        OperatorPolynomial { coeffs }
    }

    pub fn add_scaled(&mut self, other: &OperatorPolynomial, s: f64) {
        let d = self.dim();
        while self.coeffs.len() < other.coeffs.len() {
            self.coeffs.push(linalg::zeros(d, d));
        }
        for (i, b) in other.coeffs.iter().enumerate() {
            self.coeffs[i] += b * C::new(s, 0.0);
        }
    }

    pub fn eval(&self, x: C) -> CMat {
        let mut acc = self.coeffs.last().cloned().unwrap_or_else(|| unreachable!());
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> OperatorPolynomial {
        if self.coeffs.len() == 1 {
            return OperatorPolynomial::constant(linalg::zeros(self.dim(), self.dim()));
        }
        OperatorPolynomial {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * C::new(i as f64, 0.0)).collect(),
        }
    }

    /// Largest coefficient difference.
    pub fn distance(&self, other: &OperatorPolynomial) -> f64 {
        let d = self.dim();
        let z = linalg::zeros(d, d);
        (0..self.coeffs.len().max(other.coeffs.len()))
            .map(|i| linalg::max_abs(&(self.coeffs.get(i).unwrap_or(&z) - other.coeffs.get(i).unwrap_or(&z))))
            .fold(0.0, f64::max)
    }
}

/// T_ij(x + offset) = e_ij − (x + offset)·δ_ij as a polynomial in x.
fn t_entry(rep: &Rep, i: usize, j: usize, offset: f64) -> OperatorPolynomial {
    if i == j {
        let id = rep.id();
        OperatorPolynomial { coeffs: vec![rep.e(i, j) - &id * C::new(offset, 0.0), -id] }
    } else {
        OperatorPolynomial::constant(rep.e(i, j).clone())
    }
}

fn permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if rest.is_empty() {
            let mut inv = 0;
            for a in 0..prefix.len() {
                for b in a + 1..prefix.len() {
                    if prefix[a] > prefix[b] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(k, v);
        }
    }
    rec(&mut Vec::new(), &mut (0..m).collect(), &mut out);
    out
}

/// Δ^{rows}_{cols}(T(x + offset)), 1-based indices.
pub fn quantum_minor_shifted(rep: &Rep, rows: &[usize], cols: &[usize], offset: f64) -> Result<OperatorPolynomial> {
    let m = rows.len();
    if m != cols.len() || m > rep.n() {
        return Err(Error::Dimension(format!("minor with {} rows and {} columns", rows.len(), cols.len())));
    }
    if m > MAX_MINOR {
        return Err(Error::TooLarge(format!("minor of size {m} exceeds {MAX_MINOR}")));
    }
    if rows.iter().chain(cols).any(|&i| i == 0 || i > rep.n()) {
        return Err(Error::Config(format!("minor index out of range: {rows:?} / {cols:?}")));
    }
    let d = rep.dim();
    if m == 0 {
        return Ok(OperatorPolynomial::constant(rep.id()));
    }
    let mut total = OperatorPolynomial::constant(linalg::zeros(d, d));
    for (sigma, sign) in permutations(m) {
        let mut prod = t_entry(rep, rows[sigma[0]], cols[0], offset);
        for k in 1..m {
            prod = prod.mul(&t_entry(rep, rows[sigma[k]], cols[k], offset + k as f64));
        }
        total.add_scaled(&prod, sign);
    }
    Ok(total)
}

/// Δ^{rows}_{cols}(T(x)): Σ_σ (−1)^σ T_{a_σ(1) b_1}(x)···T_{a_σ(m) b_m}(x + m − 1).
pub fn quantum_minor(rep: &Rep, rows: &[usize], cols: &[usize]) -> Result<OperatorPolynomial> {
    quantum_minor_shifted(rep, rows, cols, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Σ ℓⁱ rᵢ (left) or Σ rᵢ ℓⁱ (right).
pub fn delta_substitute(p: &OperatorPolynomial, ell_op: &CMat, side: Side) -> CMat {
    let d = p.dim();
    let mut acc = linalg::zeros(d, d);
    let mut pow = linalg::eye(d);
    for r in &p.coeffs {
        acc += match side {
            Side::Left => &pow * r,
            Side::Right => r * &pow,
        };
        pow = &pow * ell_op;
    }
    acc
}

/// Values of (D_{h,n-1})_k = Π_{l≠k}(ℓ_l − ℓ_k)·Π_s(ℓ^{(n-2)}_s − ℓ_k) over the basis.
pub fn d_values(rep: &Rep, k: usize) -> Vec<f64> {
    let n = rep.n();
    rep.basis
        .patterns
        .iter()
        .map(|p| {
            let lk = p.l(n - 1, k);
            (1..n).filter(|&l| l != k).map(|l| p.l(n - 1, l) - lk).product::<f64>()
                * (1..n - 1).map(|s| p.l(n - 2, s) - lk).product::<f64>()
        })
        .collect()
}

/// α^{(n-1)}_k and β^{(n-1)}_k from their explicit shift actions.
pub fn alpha_beta(rep: &Rep, k: usize) -> Result<(CMat, CMat)> {
    let n = rep.n();
    if n < 2 || k == 0 || k >= n {
        return Err(Error::Config(format!("alpha/beta index {k} out of range for n = {n}")));
    }
    let d = rep.dim();
    let (mut alpha, mut beta) = (linalg::zeros(d, d), linalg::zeros(d, d));
    for (a, p) in rep.basis.patterns.iter().enumerate() {
        let lk = p.l(n - 1, k);
        let coefficient = |shift: f64| -> Result<C> {
            let num = -(1..=n).map(|i| lk + shift - p.l(n, i)).product::<f64>();
            let den = (1..n).filter(|&i| i != k).map(|i| lk + shift - p.l(n - 1, i)).product::<f64>();
            if den.abs() < DEGENERACY_TOL {
                return Err(Error::DegeneratePattern(format!("l_(n-1,{k}) collides in pattern {:?}", p.rows)));
            }
            Ok(C::new(num / den, 0.0).sqrt())
        };
        if let Some(b) = rep.basis.position(&p.shifted(n - 1, k, 1)) {
            alpha[(b, a)] = coefficient(0.0)?;
        }
        if let Some(b) = rep.basis.position(&p.shifted(n - 1, k, -1)) {
            beta[(b, a)] = coefficient(-1.0)?;
        }
    }
    Ok((alpha, beta))
}

/// Rows (1..n−2, n−1), columns (1..n−2, n): the minor that builds α.
fn alpha_minor(rep: &Rep) -> Result<OperatorPolynomial> {
    let n = rep.n();
    let mut rows: Vec<usize> = (1..n - 1).collect();
    let mut cols = rows.clone();
    rows.push(n - 1);
    cols.push(n);
    quantum_minor(rep, &rows, &cols)
}

/// Rows (1..n−2, n), columns (1..n−2, n−1): the minor that builds β.
fn beta_minor(rep: &Rep) -> Result<OperatorPolynomial> {
    let n = rep.n();
    let mut rows: Vec<usize> = (1..n - 1).collect();
    let mut cols = rows.clone();
    rows.push(n);
    cols.push(n - 1);
    quantum_minor(rep, &rows, &cols)
}

/// D^{−1/2} (principal branch) with zero on degenerate patterns, plus their mask.
fn inv_sqrt_d(rep: &Rep, k: usize) -> (Vec<C>, Vec<bool>) {
    let dv = d_values(rep, k);
    let degenerate: Vec<bool> = dv.iter().map(|x| x.abs() < DEGENERACY_TOL).collect();
    let vals = dv
        .iter()
        .zip(&degenerate)
        .map(|(x, deg)| if *deg { ZERO } else { 1.0 / C::new(*x, 0.0).sqrt() })
        .collect();
    (vals, degenerate)
}

/// α_k = (−1)^{k+n−1} D_k^{−1/2}·Δ_l(ℓ_k), β_k = (−1)^{k+n−1} Δ_r(ℓ_k)·D_k^{−1/2}.
///
/// On a pattern where D_k vanishes the matching row of Δ_l (column of Δ_r)
/// vanishes as well; that 0/0 is resolved to 0. A nonzero entry there is a
/// [`Error::DegeneratePattern`].
pub fn alpha_beta_minor(rep: &Rep, k: usize) -> Result<(CMat, CMat)> {
    let n = rep.n();
    if n < 2 || k == 0 || k >= n {
        return Err(Error::Config(format!("alpha/beta index {k} out of range for n = {n}")));
    }
    let ell = rep.ell(n - 1, k);
    let dl = delta_substitute(&alpha_minor(rep)?, &ell, Side::Left);
    let dr = delta_substitute(&beta_minor(rep)?, &ell, Side::Right);
    let (w, degenerate) = inv_sqrt_d(rep, k);
    let sign = if (k + n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let d = rep.dim();
    for p in 0..d {
        if degenerate[p] {
            let leak = (0..d).map(|q| dl[(p, q)].norm().max(dr[(q, p)].norm())).fold(0.0, f64::max);
            if leak > 1e-9 {
                return Err(Error::DegeneratePattern(format!(
                    "D_{k} vanishes on pattern {:?} where the minor does not",
                    rep.basis.patterns[p].rows
                )));
            }
        }
    }
    let alpha = CMat::from_fn(d, d, |r, c| w[r] * dl[(r, c)] * sign);
    let beta = CMat::from_fn(d, d, |r, c| dr[(r, c)] * w[c] * sign);
    Ok((alpha, beta))
}

/// k×k block matrix over End(L(λ)), stored densely (block (a,b) at rows a·d..).
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub k: usize,
    pub d: usize,
    pub m: CMat,
}

impl OperatorMatrix {
    pub fn zeros(k: usize, d: usize) -> Self {
        OperatorMatrix { k, d, m: linalg::zeros(k * d, k * d) }
    }

    pub fn from_dense(k: usize, d: usize, m: CMat) -> Self {
        OperatorMatrix { k, d, m }
    }

    /// Block (a, b), 0-based.
    pub fn block(&self, a: usize, b: usize) -> CMat {
        self.m.view((a * self.d, b * self.d), (self.d, self.d)).into_owned()
    }

    pub fn set_block(&mut self, a: usize, b: usize, x: &CMat) {
        self.m.view_mut((a * self.d, b * self.d), (self.d, self.d)).copy_from(x);
    }

    /// diag(D, …, D).
    pub fn block_scalar(k: usize, op: &CMat) -> Self {
        OperatorMatrix { k, d: op.nrows(), m: linalg::kron(&linalg::eye(k), op) }
    }

    pub fn identity(k: usize, d: usize) -> Self {
        OperatorMatrix { k, d, m: linalg::eye(k * d) }
    }
}

/// T^{(m)}: the upper-left m×m block of T = (e_ij).
pub fn t_block(rep: &Rep, m: usize) -> OperatorMatrix {
    let mut t = OperatorMatrix::zeros(m, rep.dim());
    for a in 0..m {
        for b in 0..m {
            t.set_block(a, b, rep.e(a + 1, b + 1));
        }
    }
    t
}

/// Prᵢ = Π_{l≠i} (T^{(n-1)} − (ℓ_l + n − 2))·(ℓ_i − ℓ_l)^{−1}, left to right in l.
pub fn projector(rep: &Rep, i: usize) -> Result<OperatorMatrix> {
    let n = rep.n();
    if n < 2 || i == 0 || i >= n {
        return Err(Error::Config(format!("projector index {i} out of range for n = {n}")));
    }
    let (k, d) = (n - 1, rep.dim());
    let t = t_block(rep, k);
    let li = rep.ell_values(n - 1, i);
    let mut pr = OperatorMatrix::identity(k, d);
    for l in (1..n).filter(|&l| l != i) {
        let ll = rep.ell_values(n - 1, l);
        let shift: Vec<f64> = ll.iter().map(|x| x + (n - 2) as f64).collect();
        let factor = &t.m - OperatorMatrix::block_scalar(k, &diag_real(&shift)).m;
        let mut inv = Vec::with_capacity(d);
        for (a, b) in li.iter().zip(&ll) {
            if (a - b).abs() < DEGENERACY_TOL {
                return Err(Error::DegeneratePattern(format!("l_(n-1,{i}) = l_(n-1,{l})")));
            }
            inv.push(1.0 / (a - b));
        }
        pr.m = pr.m * factor * OperatorMatrix::block_scalar(k, &diag_real(&inv)).m;
    }
    Ok(pr)
}

/// Signed quantum-minor matrices 𝒫, 𝒬 and the diagonal D with 𝒬𝒫 = D.
#[derive(Debug, Clone)]
pub struct PQ {
    pub p: OperatorMatrix,
    pub q: OperatorMatrix,
    pub d: Vec<CMat>,
}

pub fn pq_matrices(rep: &Rep) -> Result<PQ> {
    let n = rep.n();
    if !(2..=4).contains(&n) {
        return Err(Error::Config(format!("P/Q matrices need 2 ≤ n ≤ 4, got {n}")));
    }
    let (k, dim) = (n - 1, rep.dim());
    let base: Vec<usize> = (1..n - 1).collect();
    let without = |r: usize| -> Vec<usize> { (1..n).filter(|&x| x != r).collect() };
    let sign = |a: usize, b: usize| if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
    let mut p = OperatorMatrix::zeros(k, dim);
    let mut q = OperatorMatrix::zeros(k, dim);
    // Entries lie in U(gl_{n-1}), which commutes with ℓ^{(n-1)}: either side works.
    for r in 1..n {
        let pm = quantum_minor(rep, &base, &without(r))?;
        let qm = quantum_minor(rep, &without(r), &base)?;
        for c in 1..n {
            let ell_c = rep.ell(n - 1, c);
            p.set_block(r - 1, c - 1, &(delta_substitute(&pm, &ell_c, Side::Left) * C::new(sign(r, c), 0.0)));
            q.set_block(c - 1, r - 1, &(delta_substitute(&qm, &ell_c, Side::Left) * C::new(sign(r, c), 0.0)));
        }
    }
    let d = (1..n).map(|i| diag_real(&d_values(rep, i))).collect();
    Ok(PQ { p, q, d })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        IdentityCheck { name: name.into(), residual, tol, passed: residual <= tol }
    }
}

const SUITE_TOL: f64 = 1e-9;
const SAMPLE_X: [f64; 5] = [-1.3, -0.4, 0.25, 0.9, 2.2];

/// ‖[e_ij, e_kl] − δ_jk e_il + δ_li e_kj‖ over all quadruples.
pub fn relation_residual(rep: &Rep) -> f64 {
    let n = rep.n();
    let mut worst = 0.0_f64;
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                for l in 1..=n {
                    let mut r = commutator(rep.e(i, j), rep.e(k, l));
                    if j == k {
                        r -= rep.e(i, l);
                    }
                    if l == i {
                        r += rep.e(k, j);
                    }
                    worst = worst.max(linalg::max_abs(&r));
                }
            }
        }
    }
    worst
}

fn central_minor_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    let all: Vec<usize> = (1..=n).collect();
    let c = quantum_minor(rep, &all, &all)?;
    let mut worst = 0.0_f64;
    for coeff in &c.coeffs {
        for i in 1..=n {
            for j in 1..=n {
                worst = worst.max(linalg::max_abs(&commutator(coeff, rep.e(i, j))));
            }
        }
    }
    Ok(worst)
}

/// All four Laplace expansions of the full minor, every expansion index.
fn laplace_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    let a: Vec<usize> = (1..=n).collect();
    let b = a.clone();
    let full = quantum_minor(rep, &a, &b)?;
    let drop = |v: &[usize], i: usize| -> Vec<usize> { v.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, x)| *x).collect() };
    let sign = |x: usize, y: usize| if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
    let m = n;
    let mut worst = 0.0_f64;
    for fixed in 0..m {
        let mut e1 = OperatorPolynomial::constant(linalg::zeros(rep.dim(), rep.dim()));
        let mut e2 = e1.clone();
        let mut e3 = e1.clone();
        let mut e4 = e1.clone();
        for s in 0..m {
            // column expansions along b_j = b[fixed], summing over rows k = s
            let t1 = t_entry(rep, a[s], b[fixed], 0.0);
            let m2 = quantum_minor_shifted(rep, &drop(&a, s), &drop(&b, fixed), 1.0)?;
            e1.add_scaled(&t1.mul(&m2), sign(s, fixed));
            let tm = t_entry(rep, a[s], b[fixed], (m - 1) as f64);
            let m1 = quantum_minor_shifted(rep, &drop(&a, s), &drop(&b, fixed), 0.0)?;
            e2.add_scaled(&m1.mul(&tm), sign(s, fixed));
            // row expansions along a_k = a[fixed], summing over columns j = s
            let tm = t_entry(rep, a[fixed], b[s], (m - 1) as f64);
            let m1 = quantum_minor_shifted(rep, &drop(&a, fixed), &drop(&b, s), 0.0)?;
            e3.add_scaled(&tm.mul(&m1), sign(fixed, s));
            let t1 = t_entry(rep, a[fixed], b[s], 0.0);
            let m2 = quantum_minor_shifted(rep, &drop(&a, fixed), &drop(&b, s), 1.0)?;
            e4.add_scaled(&m2.mul(&t1), sign(fixed, s));
        }
        for e in [&e1, &e2, &e3, &e4] {
            worst = worst.max(full.distance(e));
        }
    }
    Ok(worst)
}

/// Prop.-style commutator [e_ij, Δ^a_b] on gl₃-sized samples.
fn minor_commutator_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    if n < 2 {
        return Ok(0.0);
    }
    let samples: Vec<(Vec<usize>, Vec<usize>)> = vec![
        ((1..n).collect(), (1..n).collect()),
        ((1..n).collect(), (2..=n).collect()),
        (vec![1, n], vec![2, n]),
        (vec![n], vec![1]),
    ];
    let mut worst = 0.0_f64;
    for (a, b) in samples {
        let minor = quantum_minor(rep, &a, &b)?;
        for i in 1..=n {
            for j in 1..=n {
                let mut lhs = OperatorPolynomial {
                    coeffs: minor.coeffs.iter().map(|c| commutator(rep.e(i, j), c)).collect(),
                };
                for r in 0..a.len() {
                    if a[r] == j {
                        let mut a2 = a.clone();
                        a2[r] = i;
                        lhs.add_scaled(&quantum_minor(rep, &a2, &b)?, -1.0);
                    }
                    if b[r] == i {
                        let mut b2 = b.clone();
                        b2[r] = j;
                        lhs.add_scaled(&quantum_minor(rep, &a, &b2)?, 1.0);
                    }
                }
                worst = worst.max(lhs.distance(&OperatorPolynomial::constant(linalg::zeros(rep.dim(), rep.dim()))));
            }
        }
    }
    Ok(worst)
}

/// Δ^{1..m}_{1..m}(T(x))·ξ = Π(ℓ^{(m)}_j − x)·ξ at sample x.
fn eigenvalue_form_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    let mut worst = 0.0_f64;
    for m in 1..=n {
        let idx: Vec<usize> = (1..=m).collect();
        let minor = quantum_minor(rep, &idx, &idx)?;
        for x in SAMPLE_X {
            let lhs = minor.eval(C::new(x, 0.0));
            let vals: Vec<f64> = rep.basis.patterns.iter().map(|p| (1..=m).map(|j| p.l(m, j) - x).product()).collect();
            worst = worst.max(linalg::max_abs(&(lhs - diag_real(&vals))));
        }
    }
    Ok(worst)
}

/// Δ_l / Δ_r of the α/β minors against their closed shift actions.
fn shift_action_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    if n < 2 {
        return Ok(0.0);
    }
    let (am, bm) = (alpha_minor(rep)?, beta_minor(rep)?);
    let mut worst = 0.0_f64;
    for j in 1..n {
        let ell = rep.ell(n - 1, j);
        let dl = delta_substitute(&am, &ell, Side::Left);
        let dr = delta_substitute(&bm, &ell, Side::Right);
        let d = rep.dim();
        let (mut want_l, mut want_r) = (linalg::zeros(d, d), linalg::zeros(d, d));
        let sign = if (1 + n + j) % 2 == 0 { 1.0 } else { -1.0 };
        for (a, p) in rep.basis.patterns.iter().enumerate() {
            let lj = p.l(n - 1, j);
            let others = || (1..n).filter(move |&k| k != j);
            if let Some(b) = rep.basis.position(&p.shifted(n - 1, j, 1)) {
                let num = -(1..=n).map(|i| lj - p.l(n, i)).product::<f64>()
                    * others().map(|k| lj + 1.0 - p.l(n - 1, k)).product::<f64>()
                    * (1..n - 1).map(|s| lj + 1.0 - p.l(n - 2, s)).product::<f64>();
                let den = others().map(|k| lj - p.l(n - 1, k)).product::<f64>();
                want_l[(b, a)] = C::new(num / den, 0.0).sqrt() * sign;
            }
            if let Some(b) = rep.basis.position(&p.shifted(n - 1, j, -1)) {
                let num = -(1..n - 1).map(|s| lj - p.l(n - 2, s)).product::<f64>()
                    * others().map(|k| lj - p.l(n - 1, k)).product::<f64>()
                    * (1..=n).map(|i| lj - 1.0 - p.l(n, i)).product::<f64>();
                let den = others().map(|k| lj - 1.0 - p.l(n - 1, k)).product::<f64>();
                want_r[(b, a)] = C::new(num / den, 0.0).sqrt() * sign;
            }
        }
        worst = worst.max(linalg::max_abs(&(dl - want_l))).max(linalg::max_abs(&(dr - want_r)));
    }
    Ok(worst)
}

/// (T^{(n-1)} − x)* = Σᵢ Π_l(ℓ_l − x)/(ℓᵢ − x)·Prᵢ satisfies (T − x)*·(T − x − n + 2) = Δ^{1..n-1}(T(x)),
/// and at x = ℓ_k the quantum characteristic identity
/// ((T − ℓ_k)*)² = −Δ'(ℓ_k)·(T − ℓ_k)*.
fn characteristic_residual(rep: &Rep, prs: &[OperatorMatrix]) -> Result<f64> {
    let n = rep.n();
    let (k, d) = (n - 1, rep.dim());
    let idx: Vec<usize> = (1..n).collect();
    let minor = quantum_minor(rep, &idx, &idx)?;
    let t = t_block(rep, k);
    let ls: Vec<Vec<f64>> = (1..n).map(|l| rep.ell_values(n - 1, l)).collect();
    let adj_at = |x: &dyn Fn(usize) -> f64| -> CMat {
        let mut acc = linalg::zeros(k * d, k * d);
        for (i, pr) in prs.iter().enumerate() {
            let w: Vec<f64> = (0..d)
                .map(|p| (0..k).filter(|&l| l != i).map(|l| ls[l][p] - x(p)).product())
                .collect();
            acc += OperatorMatrix::block_scalar(k, &diag_real(&w)).m * &pr.m;
        }
        acc
    };
    let mut worst = 0.0_f64;
    for x in SAMPLE_X {
        let adj = adj_at(&|_| x);
        let shifted = &t.m - linalg::eye(k * d) * C::new(x + (n - 2) as f64, 0.0);
        let lhs = adj * shifted;
        let rhs = OperatorMatrix::block_scalar(k, &minor.eval(C::new(x, 0.0))).m;
        worst = worst.max(linalg::max_abs(&(lhs - rhs)));
    }
    let deriv = minor.derivative();
    for kk in 0..k {
        let adj = adj_at(&|p| ls[kk][p]);
        let dprime = delta_substitute(&deriv, &diag_real(&ls[kk]), Side::Left);
        let lhs = &adj * &adj + OperatorMatrix::block_scalar(k, &dprime).m * &adj;
        worst = worst.max(linalg::max_abs(&lhs));
    }
    Ok(worst)
}

fn projector_residuals(rep: &Rep, prs: &[OperatorMatrix]) -> (f64, f64, f64, f64, f64) {
    let n = rep.n();
    let (k, d) = (n - 1, rep.dim());
    let t = t_block(rep, k);
    let id = linalg::eye(k * d);
    let (mut idem, mut ortho, mut eig) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut sum = linalg::zeros(k * d, k * d);
    let mut spectral = linalg::zeros(k * d, k * d);
    for (i, pi) in prs.iter().enumerate() {
        idem = idem.max(linalg::max_abs(&(&pi.m * &pi.m - &pi.m)));
        for (j, pj) in prs.iter().enumerate() {
            if i != j {
                ortho = ortho.max(linalg::max_abs(&(&pi.m * &pj.m)));
            }
        }
        let lam: Vec<f64> = rep.ell_values(n - 1, i + 1).iter().map(|x| x + (n - 2) as f64).collect();
        let scaled = OperatorMatrix::block_scalar(k, &diag_real(&lam)).m * &pi.m;
        eig = eig.max(linalg::max_abs(&(&t.m * &pi.m - &scaled))).max(linalg::max_abs(&(&pi.m * &t.m - &scaled)));
        sum += &pi.m;
        spectral += scaled;
    }
    (idem, ortho, linalg::max_abs(&(sum - id)), linalg::max_abs(&(spectral - &t.m)), eig)
}

/// Largest |α_direct − α_minor|, |β_direct − β_minor| over k.
pub fn alpha_beta_two_path_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    let mut worst = 0.0_f64;
    for k in 1..n {
        let (a, b) = alpha_beta(rep, k)?;
        let (am, bm) = alpha_beta_minor(rep, k)?;
        worst = worst.max(linalg::max_abs(&(a - am))).max(linalg::max_abs(&(b - bm)));
    }
    Ok(worst)
}

/// [ℓ_j, α_i] = δ_ij α_j, [ℓ_j, β_i] = −δ_ij β_j.
pub fn ell_alpha_residual(rep: &Rep) -> Result<f64> {
    let n = rep.n();
    let mut worst = 0.0_f64;
    for i in 1..n {
        let (a, b) = alpha_beta(rep, i)?;
        for j in 1..n {
            let l = rep.ell(n - 1, j);
            let (mut ra, mut rb) = (commutator(&l, &a), commutator(&l, &b));
            if i == j {
                ra -= &a;
                rb += &b;
            }
            worst = worst.max(linalg::max_abs(&ra)).max(linalg::max_abs(&rb));
        }
    }
    Ok(worst)
}

/// 𝒬𝒫 = D, T𝒫 = 𝒫·T_diag, 𝒬T = T_diag·𝒬, and Pr_k = 𝒫_{·k} D_k^{−1} 𝒬_{k·} on vectors where D_k is invertible.
fn pq_residuals(rep: &Rep, prs: &[OperatorMatrix]) -> Result<(f64, f64, f64)> {
    let n = rep.n();
    let (k, d) = (n - 1, rep.dim());
    let pq = pq_matrices(rep)?;
    let mut dm = OperatorMatrix::zeros(k, d);
    let mut tdiag = OperatorMatrix::zeros(k, d);
    for i in 0..k {
        dm.set_block(i, i, &pq.d[i]);
        let lam: Vec<f64> = rep.ell_values(n - 1, i + 1).iter().map(|x| x + (n - 2) as f64).collect();
        tdiag.set_block(i, i, &diag_real(&lam));
    }
    let qpd = linalg::max_abs(&(&pq.q.m * &pq.p.m - &dm.m));
    let t = t_block(rep, k);
    let paap = linalg::max_abs(&(&t.m * &pq.p.m - &pq.p.m * &tdiag.m)).max(linalg::max_abs(&(&pq.q.m * &t.m - &tdiag.m * &pq.q.m)));
    let all_d: Vec<Vec<f64>> = (1..n).map(|i| d_values(rep, i)).collect();
    // Outside L(λ)₀ some D_i is singular somewhere along the column and 𝒫 has no inverse.
    let generic: Vec<bool> = rep.basis.patterns.iter().map(GTPattern::in_l0).collect();
    let mut recon = 0.0_f64;
    for kk in 0..k {
        let dvals = &all_d[kk];
        for a in 0..k {
            for b in 0..k {
                let qb = pq.q.block(kk, b);
                let pa = pq.p.block(a, kk);
                let want = prs[kk].block(a, b);
                for col in (0..d).filter(|&c| generic[c]) {
                    let v = qb.column(col).into_owned();
                    // skip vectors that reach a pattern where D_k is not invertible
                    if (0..d).any(|r| dvals[r].abs() < DEGENERACY_TOL && v[r].norm() > 1e-12) {
                        continue;
                    }
                    let scaled = nalgebra::DVector::from_fn(d, |r, _| if dvals[r].abs() < DEGENERACY_TOL { ZERO } else { v[r] / dvals[r] });
                    let got = &pa * scaled;
                    let diff = (got - want.column(col)).iter().map(|x| x.norm()).fold(0.0, f64::max);
                    recon = recon.max(diff);
                }
            }
        }
    }
    Ok((qpd, paap, recon))
}

/// Every representation identity checked by `rep-check`.
pub fn identity_suite(rep: &Rep) -> Result<Vec<IdentityCheck>> {
    let n = rep.n();
    let mut out = vec![
        IdentityCheck::new("gl_n commutation relations", relation_residual(rep), 1e-10),
        IdentityCheck::new("central minor commutes with e_ij", central_minor_residual(rep)?, 1e-10),
        IdentityCheck::new("Laplace expansions", laplace_residual(rep)?, SUITE_TOL),
        IdentityCheck::new("minor commutator with e_ij", minor_commutator_residual(rep)?, SUITE_TOL),
        IdentityCheck::new("principal minor eigenvalue form", eigenvalue_form_residual(rep)?, 1e-10),
    ];
    if n >= 2 {
        out.push(IdentityCheck::new("shift actions of Delta_l / Delta_r", shift_action_residual(rep)?, SUITE_TOL));
        out.push(IdentityCheck::new("alpha/beta minor path = direct path", alpha_beta_two_path_residual(rep)?, SUITE_TOL));
        out.push(IdentityCheck::new("[ell, alpha] and [ell, beta] relations", ell_alpha_residual(rep)?, 1e-10));
        let prs: Vec<OperatorMatrix> = (1..n).map(|i| projector(rep, i)).collect::<Result<_>>()?;
        let (idem, ortho, sum, spectral, eig) = projector_residuals(rep, &prs);
        out.push(IdentityCheck::new("Pr_i Pr_i = Pr_i", idem, SUITE_TOL));
        out.push(IdentityCheck::new("Pr_i Pr_j = 0", ortho, SUITE_TOL));
        out.push(IdentityCheck::new("sum Pr_i = Id", sum, SUITE_TOL));
        out.push(IdentityCheck::new("T = sum (ell_i + n - 2) Pr_i", spectral, SUITE_TOL));
        out.push(IdentityCheck::new("T Pr_i = Pr_i T = (ell_i + n - 2) Pr_i", eig, SUITE_TOL));
        out.push(IdentityCheck::new("quantum characteristic identity", characteristic_residual(rep, &prs)?, SUITE_TOL));
        if n <= 4 {
            let (qpd, paap, recon) = pq_residuals(rep, &prs)?;
            out.push(IdentityCheck::new("QP = D", qpd, SUITE_TOL));
            out.push(IdentityCheck::new("T P = P T_diag, Q T = T_diag Q", paap, SUITE_TOL));
            out.push(IdentityCheck::new("Pr_k = P_k D_k^-1 Q_k", recon, SUITE_TOL));
        }
    }
    Ok(out)
}
