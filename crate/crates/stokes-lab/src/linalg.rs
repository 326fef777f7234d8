//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! The wrappers add the contracts the rest of the crate relies on: a
//! deterministic eigenvalue order, an explicit singularity threshold, and an
//! adjugate that stays defined for singular input.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;
pub type CMat = DMatrix<C>;

/// Relative pivot floor for [`solve`].
pub const SINGULAR_TOL: f64 = 1e-13;
const EIG_SWEEPS_PER_DIM: usize = 500;

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(d: &[C]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

/// Row-major construction, mostly for tests and JSON input.
pub fn from_rows(rows: &[Vec<C>]) -> Result<CMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension("ragged or empty matrix".into()));
    }
    Ok(CMat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Max-row-sum norm ‖M‖∞.
pub fn norm_inf(m: &CMat) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn require_square(m: &CMat, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!("{what}: expected a nonempty square matrix, got {}×{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

/// Sort by real part, ties (within 1e-12 relative) broken by imaginary part.
pub fn sort_eigenvalues(v: &mut [C]) {
    let scale = v.iter().map(|x| x.norm()).fold(1.0, f64::max);
    v.sort_by(|a, b| {
        if (a.re - b.re).abs() <= 1e-12 * scale {
            a.im.total_cmp(&b.im)
        } else {
            a.re.total_cmp(&b.re)
        }
    });
}

/// All eigenvalues with multiplicity, in the order of [`sort_eigenvalues`].
pub fn eigenvalues(m: &CMat) -> Result<Vec<C>> {
    let k = require_square(m, "eigenvalues")?;
    if k == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, EIG_SWEEPS_PER_DIM * k).ok_or(Error::Convergence)?;
    let (_, t) = schur.unpack();
    let mut v: Vec<C> = (0..k).map(|i| t[(i, i)]).collect();
    sort_eigenvalues(&mut v);
    Ok(v)
}

/// Solve M X = B by LU with partial pivoting.
pub fn solve(m: &CMat, b: &CMat) -> Result<CMat> {
    let n = require_square(m, "solve")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!("solve: rhs has {} rows, matrix is {n}×{n}", b.nrows())));
    }
    let lu = m.clone().lu();
    let scale = norm_inf(m);
    let u = lu.u();
    let pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if !(pivot >= SINGULAR_TOL * scale) || scale == 0.0 {
        return Err(Error::Singular { pivot });
    }
    lu.solve(b).ok_or(Error::Singular { pivot })
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    solve(m, &eye(m.nrows()))
}

pub fn det(m: &CMat) -> Result<C> {
    require_square(m, "det")?;
    Ok(m.clone().lu().determinant())
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &CMat) -> Result<CMat> {
    require_square(m, "expm")?;
    Ok(m.exp())
}

fn minor(m: &CMat, skip_r: usize, skip_c: usize) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n - 1, n - 1, |i, j| {
        let ii = if i < skip_r { i } else { i + 1 };
        let jj = if j < skip_c { j } else { j + 1 };
        m[(ii, jj)]
    })
}

fn cofactor_adjugate(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 1 {
        return eye(1);
    }
    CMat::from_fn(n, n, |i, j| {
        // adj(M)_{ij} = (−1)^{i+j} det(M with row j and column i removed)
        let d = m_det_small(&minor(m, j, i));
        if (i + j) % 2 == 0 { d } else { -d }
    })
}

/// Laplace expansion; only used for k ≤ 4 where it is cheap and exact-ish.
fn m_det_small(m: &CMat) -> C {
    let n = m.nrows();
    match n {
        0 => C::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => (0..n)
            .map(|j| {
                let d = m[(0, j)] * m_det_small(&minor(m, 0, j));
                if j % 2 == 0 { d } else { -d }
            })
            .sum(),
    }
}

/// Classical adjoint M* with M·M* = det(M)·Id.
///
/// Cofactors for k ≤ 4; det·M⁻¹ above that, falling back to cofactors when
/// M is numerically singular.
pub fn adjugate(m: &CMat) -> Result<CMat> {
    let k = require_square(m, "adjugate")?;
    if k <= 4 {
        return Ok(cofactor_adjugate(m));
    }
    match inverse(m) {
        Ok(inv) => Ok(inv * det(m)?),
        Err(Error::Singular { .. }) => Ok(cofactor_adjugate(m)),
        Err(e) => Err(e),
    }
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn random(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Characteristic polynomial coefficients (monic, highest first) by Faddeev–LeVerrier.
    fn charpoly(m: &CMat) -> Vec<C> {
        let n = m.nrows();
        let mut coeffs = vec![c(1.0, 0.0)];
        let mut mk = zeros(n, n);
        for k in 1..=n {
            mk = m * (&mk + eye(n) * coeffs[k - 1]);
            let ck = -mk.trace() / k as f64;
            coeffs.push(ck);
        }
        coeffs
    }

    /// Durand–Kerner roots of a monic polynomial.
    fn durand_kerner(p: &[C]) -> Vec<C> {
        let n = p.len() - 1;
        let eval = |x: C| p.iter().fold(c(0.0, 0.0), |acc, a| acc * x + a);
        let mut roots: Vec<C> = (0..n).map(|k| c(0.4, 0.9).powu(k as u32)).collect();
        for _ in 0..2000 {
            for i in 0..n {
                let denom: C = (0..n).filter(|&j| j != i).map(|j| roots[i] - roots[j]).product();
                let step = eval(roots[i]) / denom;
                roots[i] -= step;
            }
        }
        sort_eigenvalues(&mut roots);
        roots
    }

    #[test]
    fn eigenvalues_trivial() {
        let v = eigenvalues(&diag(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)])).unwrap();
        assert_eq!(v, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let swap = from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let v = eigenvalues(&swap).unwrap();
        assert!((v[0] - c(-1.0, 0.0)).norm() < 1e-14 && (v[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_match_durand_kerner() {
        for seed in 0..5 {
            let m = random(3, seed);
            let got = eigenvalues(&m).unwrap();
            let want = durand_kerner(&charpoly(&m));
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() < 1e-10 * norm_inf(&m), "seed {seed}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn eigenvalues_similarity_invariant() {
        for seed in 10..20 {
            let m = random(4, seed);
            let s = random(4, seed + 100) + eye(4) * c(2.0, 0.0);
            let conj = inverse(&s).unwrap() * &m * &s;
            let a = eigenvalues(&m).unwrap();
            let b = eigenvalues(&conj).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn solve_contracts() {
        let b = random(3, 7);
        assert!((solve(&eye(3), &b).unwrap() - &b).norm() < 1e-15);
        let x = solve(&diag(&[c(2.0, 0.0), c(4.0, 0.0)]), &eye(2)).unwrap();
        assert!((x - diag(&[c(0.5, 0.0), c(0.25, 0.0)])).norm() < 1e-15);
        let m = random(4, 3);
        let b = random(4, 4);
        let x = solve(&m, &b).unwrap();
        assert!(norm_inf(&(&m * &x - &b)) <= 1e-10 * norm_inf(&m) * norm_inf(&x));
        let sing = from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]).unwrap();
        assert!(matches!(solve(&sing, &eye(2)), Err(Error::Singular { .. })));
    }

    #[test]
    fn expm_examples() {
        assert!((expm(&zeros(3, 3)).unwrap() - eye(3)).norm() < 1e-15);
        let (a, b) = (c(0.3, -1.2), c(-2.0, 0.5));
        let e = expm(&diag(&[a, b])).unwrap();
        assert!((e - diag(&[a.exp(), b.exp()])).norm() < 1e-14);
        let nil = from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let e = expm(&nil).unwrap();
        let want = from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!((e - want).norm() < 1e-15);
    }

    #[test]
    fn expm_inverse_pair() {
        for seed in 0..10 {
            let m = random(5, seed) * c(2.0, 0.0);
            let p = expm(&m).unwrap() * expm(&(-&m)).unwrap();
            assert!(max_abs(&(p - eye(5))) < 1e-9);
        }
    }

    #[test]
    fn adjugate_examples() {
        assert_eq!(adjugate(&eye(2)).unwrap(), eye(2));
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.0), c(3.0, 1.0), c(0.0, -1.0));
        let m = from_rows(&[vec![a, b], vec![cc, d]]).unwrap();
        let want = from_rows(&[vec![d, -b], vec![-cc, a]]).unwrap();
        assert!((adjugate(&m).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn adjugate_identity_seeded() {
        for seed in 0..50u64 {
            let n = 2 + (seed as usize % 5);
            let m = random(n, seed);
            let adj = adjugate(&m).unwrap();
            let d = det(&m).unwrap();
            let r = &m * &adj - eye(n) * d;
            assert!(max_abs(&r) <= 1e-10 * max_abs(&m).powi(n as i32).max(1.0), "n={n} seed={seed}");
        }
        // singular input still has an adjugate
        let sing = from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]).unwrap();
        let adj = adjugate(&sing).unwrap();
        assert!(max_abs(&(&sing * adj)) < 1e-14);
    }

    #[test]
    fn kron_shape() {
        let k = kron(&eye(2), &diag(&[c(1.0, 0.0), c(2.0, 0.0)]));
        assert_eq!(k, diag(&[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]));
    }
}
