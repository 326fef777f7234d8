//! Formal solutions at z = ∞ of dF/dz = (B0 + B1/z) F with B0 = diag(0·Id_a, c·Id_b).
//!
//! Both the classical system (c = i) and the vectorized quantum system
//! (c = h·i) have this shape. The formal solution is
//! F̂ = (Σ Hₘ z^{−m}) z^Λ e^{B0 z} where Λ is the block-diagonal part of B1,
//! and the coefficients obey [H_{m+1}, B0] = B1 Hₘ − Hₘ Λ + m Hₘ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

type C = Complex64;

/// Block-diagonal part of `m` for the split `na | rest`.
pub fn block_diagonal(m: &CMat, na: usize) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| if (i < na) == (j < na) { m[(i, j)] } else { C::new(0.0, 0.0) })
}

/// Solver for Λ X − X Λ + k X = R on one diagonal block (Bartels–Stewart on
/// the complex Schur form of Λ).
struct Sylvester {
    q: CMat,
    t: CMat,
}

impl Sylvester {
    fn new(lam: &CMat) -> Self {
        if lam.nrows() == 0 {
            return Sylvester { q: lam.clone(), t: lam.clone() };
        }
        let (q, mut t) = nalgebra::Schur::new(lam.clone()).unpack();
        // Complex Schur is triangular; clear roundoff below the diagonal.
        for j in 0..t.ncols() {
            for i in j + 1..t.nrows() {
                t[(i, j)] = C::new(0.0, 0.0);
            }
        }
        Sylvester { q, t }
    }

    fn solve(&self, k: f64, r: &CMat) -> Result<CMat> {
        let d = self.t.nrows();
        if d == 0 {
            return Ok(r.clone());
        }
        let rp = self.q.adjoint() * r * &self.q;
        let t = &self.t;
        let mut y = linalg::zeros(d, d);
        for j in 0..d {
            // (T + (k − T_jj)) y_j = r'_j + Σ_{i<j} y_i T_ij
            let mut rhs: Vec<C> = (0..d).map(|row| rp[(row, j)]).collect();
            for i in 0..j {
                let tij = t[(i, j)];
                if tij != C::new(0.0, 0.0) {
                    for (row, v) in rhs.iter_mut().enumerate() {
                        *v += y[(row, i)] * tij;
                    }
                }
            }
            let shift = k - t[(j, j)];
            for row in (0..d).rev() {
                let mut acc = rhs[row];
                for col in row + 1..d {
                    acc -= t[(row, col)] * y[(col, j)];
                }
                let piv = t[(row, row)] + shift;
                if piv.norm() < 1e-12 {
                    return Err(Error::Resonant(format!(
                        "residue eigenvalues differ by the integer {k} (pivot {:e})",
                        piv.norm()
                    )));
                }
                y[(row, j)] = acc / piv;
            }
        }
        Ok(&self.q * y * self.q.adjoint())
    }
}

/// Coefficients H₀ = Id, H₁, … of the formal series together with Λ.
#[derive(Debug, Clone)]
pub struct FormalSeries {
    pub na: usize,
    pub c: C,
    pub lambda: CMat,
    pub h: Vec<CMat>,
}

/// Run the recursion up to H_M.
pub fn formal_series(b1: &CMat, na: usize, c: C, m_max: usize) -> Result<FormalSeries> {
    let n = b1.nrows();
    if b1.ncols() != n || na > n {
        return Err(Error::Dimension(format!("formal series: B1 is {}×{}, split {na}", b1.nrows(), b1.ncols())));
    }
    if c.norm() == 0.0 {
        return Err(Error::NoGap);
    }
    let nb = n - na;
    let lambda = block_diagonal(b1, na);
    let off = b1 - &lambda;
    let la = lambda.view((0, 0), (na, na)).into_owned();
    let lb = lambda.view((na, na), (nb, nb)).into_owned();
    let (sa, sb) = (Sylvester::new(&la), Sylvester::new(&lb));
    let mut h = vec![linalg::eye(n)];
    for m in 0..m_max {
        let hm = &h[m];
        let r = b1 * hm - hm * &lambda + hm * C::new(m as f64, 0.0);
        let mut next = linalg::zeros(n, n);
        for i in 0..na {
            for j in na..n {
                next[(i, j)] = r[(i, j)] / c;
                next[(j, i)] = -r[(j, i)] / c;
            }
        }
        let src = &off * &next;
        let k = (m + 1) as f64;
        let xa = sa.solve(k, &(-src.view((0, 0), (na, na)).into_owned()))?;
        let xb = sb.solve(k, &(-src.view((na, na), (nb, nb)).into_owned()))?;
        next.view_mut((0, 0), (na, na)).copy_from(&xa);
        next.view_mut((na, na), (nb, nb)).copy_from(&xb);
        h.push(next);
    }
    Ok(FormalSeries { na, c, lambda, h })
}

impl FormalSeries {
    /// B0 = diag(0, c·Id).
    pub fn b0(&self) -> CMat {
        let n = self.lambda.nrows();
        CMat::from_fn(n, n, |i, j| if i == j && i >= self.na { self.c } else { C::new(0.0, 0.0) })
    }

    /// Max-entry residual of [H_{m+1}, B0] = B1 Hₘ − Hₘ Λ + m Hₘ, for m < len − 1.
    pub fn residual(&self, b1: &CMat, m: usize) -> f64 {
        let b0 = self.b0();
        let (hm, hn) = (&self.h[m], &self.h[m + 1]);
        let lhs = hn * &b0 - &b0 * hn;
        let rhs = b1 * hm - hm * &self.lambda + hm * C::new(m as f64, 0.0);
        let scale = linalg::max_abs(hm).max(linalg::max_abs(hn)).max(1.0);
        linalg::max_abs(&(lhs - rhs)) / scale
    }
}
