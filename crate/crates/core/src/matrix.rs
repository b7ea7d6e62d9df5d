//! Dense small-matrix kernel: products, induced operator norms, spectral
//! radius, matrix exponential, exterior powers.
//!
//! Everything targets the small dimensions switched linear systems live in
//! (d up to ~10); there is no sparsity and no complex arithmetic. All
//! functions are pure.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance for the spectral-norm power iteration.
const NORM_TOL: f64 = 1e-12;
/// Iteration cap for the spectral-norm power iteration.
const NORM_MAX_ITER: usize = 20_000;
/// Relative tolerance between successive Gelfand estimates in `spectral_radius`.
/// Tighter than strictly needed for generic inputs so that stochastic-family
/// brackets close to ~1e-13.
const RADIUS_TOL: f64 = 1e-13;
/// Squaring cap in `spectral_radius`.
const RADIUS_MAX_SQUARINGS: usize = 60;
/// Norms below this declare a numerically nilpotent matrix.
const UNDERFLOW: f64 = 1e-300;
/// Largest max-row-sum norm accepted by `matrix_exponential`. The scaling
/// and squaring core keeps relative error well under 1e-10 up to this cap.
const EXP_NORM_CAP: f64 = 256.0;

/// Which induced operator norm to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Largest singular value (norm induced by the Euclidean vector norm).
    Spectral2,
    /// Maximum absolute row sum (induced by the sup norm).
    MaxRowSum,
    /// Maximum absolute column sum (induced by the 1-norm).
    MaxColSum,
}

/// A norm value together with a convergence flag. Only `Spectral2` is
/// iterative; the other kinds are always exact.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
}

/// Row-major dense square matrix of `f64` entries.
///
/// Construction validates squareness and finiteness, so every `Matrix` in
/// circulation satisfies those invariants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matrix {
    dim: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(Error::BadEntryCount {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEntries);
        }
        Ok(Matrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::BadEntryCount {
                dim,
                expected: dim * dim,
                got: rows.iter().map(Vec::len).sum(),
            });
        }
        Matrix::new(dim, rows.concat())
    }

    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Matrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
    }

    /// Standard matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.entries[k * d..(k + 1) * d];
                let dst = &mut out[i * d..(i + 1) * d];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            dim: d,
            entries: out,
        })
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            entries: self.entries.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Matrix, c: f64) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(Matrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.add_scaled(other, -1.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    fn max_row_sum(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| self.entries[i * d..(i + 1) * d].iter().map(|x| x.abs()).sum())
            .fold(0.0, f64::max)
    }

    fn max_col_sum(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|j| (0..d).map(|i| self.get(i, j).abs()).sum())
            .fold(0.0, f64::max)
    }

    /// Induced operator norm of the requested kind.
    pub fn operator_norm(&self, kind: NormKind) -> f64 {
        self.operator_norm_detailed(kind).value
    }

    /// Like [`operator_norm`](Self::operator_norm) but reports whether the
    /// spectral-norm power iteration converged. Non-convergence still yields
    /// the last (valid lower-bound) estimate.
    pub fn operator_norm_detailed(&self, kind: NormKind) -> NormEstimate {
        match kind {
            NormKind::MaxRowSum => NormEstimate {
                value: self.max_row_sum(),
                converged: true,
            },
            NormKind::MaxColSum => NormEstimate {
                value: self.max_col_sum(),
                converged: true,
            },
            NormKind::Spectral2 => self.spectral_norm(),
        }
    }

    /// Largest singular value via power iteration on `self^T self`.
    fn spectral_norm(&self) -> NormEstimate {
        let d = self.dim;
        if self.entries.iter().all(|&x| x == 0.0) {
            return NormEstimate {
                value: 0.0,
                converged: true,
            };
        }
        // Gram matrix B = self^T self, symmetric positive semidefinite.
        let mut b = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.entries[k * d + i] * self.entries[k * d + j];
                }
                b[i * d + j] = s;
            }
        }
        // Deterministic generic start; restart with a different phase if the
        // iterate lands in the kernel.
        for restart in 0..4 {
            let mut v: Vec<f64> = (0..d)
                .map(|i| 1.5 + (1.234 + (i + restart * 7) as f64).sin())
                .collect();
            let nv = l2(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let mut prev: Option<f64> = None;
            let mut converged = false;
            let mut lambda = 0.0;
            for _ in 0..NORM_MAX_ITER {
                let mut w = vec![0.0; d];
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += b[i * d + j] * v[j];
                    }
                    w[i] = s;
                }
                // Rayleigh quotient with v normalized: lambda = v^T B v.
                lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                let nw = l2(&w);
                if nw < UNDERFLOW {
                    // v is (numerically) in the kernel; restart elsewhere.
                    lambda = 0.0;
                    break;
                }
                w.iter_mut().for_each(|x| *x /= nw);
                v = w;
                if let Some(p) = prev {
                    if (lambda - p).abs() <= NORM_TOL * lambda.abs().max(f64::MIN_POSITIVE) {
                        converged = true;
                        break;
                    }
                }
                prev = Some(lambda);
            }
            if lambda > 0.0 || restart == 3 {
                return NormEstimate {
                    value: lambda.max(0.0).sqrt(),
                    converged,
                };
            }
        }
        NormEstimate {
            value: 0.0,
            converged: false,
        }
    }

    /// Spectral radius via the Gelfand limit, computed by normalized repeated
    /// squaring with log-scale accumulation: the k-th estimate is
    /// `norm(self^(2^k))^(1/2^k)`. Squaring stops once successive estimates
    /// agree to `RADIUS_TOL` relative or after `RADIUS_MAX_SQUARINGS`
    /// squarings. The max-row-sum norm drives the estimates: any induced norm
    /// yields the same limit and this one is exact to evaluate.
    pub fn spectral_radius(&self) -> f64 {
        if self.dim == 1 {
            return self.entries[0].abs();
        }
        let mut b = self.clone();
        let mut log_scale = 0.0_f64; // log of the factor divided out of b
        let mut prev: Option<f64> = None; // previous log-estimate
        for k in 0..=RADIUS_MAX_SQUARINGS {
            let norm = b.max_row_sum();
            if norm < UNDERFLOW {
                // Numerically nilpotent tail: the accumulated log scale is
                // meaningless below this point.
                return 0.0;
            }
            // log estimate = (1/2^k) log norm(self^(2^k))
            let log_est = (log_scale + norm.ln()) / (1u64 << k) as f64;
            if let Some(p) = prev {
                // Absolute difference of log estimates = relative difference
                // of the estimates themselves.
                if (log_est - p).abs() <= RADIUS_TOL {
                    return log_est.exp();
                }
            }
            prev = Some(log_est);
            if k == RADIUS_MAX_SQUARINGS {
                break;
            }
            let c = b.scale(1.0 / norm);
            b = c.matmul(&c).expect("same dimension");
            log_scale = 2.0 * (log_scale + norm.ln());
        }
        prev.expect("at least one estimate").exp()
    }

    /// Matrix exponential by scaling and squaring around a Taylor core.
    /// Relative error stays below ~1e-12 for norms up to the cap.
    pub fn matrix_exponential(&self) -> Result<Matrix> {
        let norm = self.max_row_sum();
        if norm > EXP_NORM_CAP {
            return Err(Error::ExpNormTooLarge {
                norm,
                cap: EXP_NORM_CAP,
            });
        }
        // Scale so the core sees norm <= 0.25.
        let s = if norm <= 0.25 {
            0u32
        } else {
            (norm / 0.25).log2().ceil() as u32
        };
        let a = self.scale(0.5f64.powi(s as i32));
        let mut sum = Matrix::identity(self.dim);
        let mut term = Matrix::identity(self.dim);
        for k in 1..=80u32 {
            term = term.matmul(&a)?.scale(1.0 / k as f64);
            sum = sum.add_scaled(&term, 1.0)?;
            if term.max_row_sum() <= 1e-18 * sum.max_row_sum().max(1.0) {
                break;
            }
        }
        let mut out = sum;
        for _ in 0..s {
            out = out.matmul(&out)?;
        }
        Ok(out)
    }

    /// The compound matrix of order `l`: rows and columns are indexed by the
    /// lexicographically ordered l-subsets of {1..d}; entry (I, J) is the
    /// l-by-l minor of `self` with rows I and columns J. Multiplicative by
    /// the Cauchy-Binet identity.
    pub fn exterior_power(&self, l: usize) -> Result<Matrix> {
        if l < 1 || l > self.dim {
            return Err(Error::ExteriorOrderOutOfRange {
                order: l,
                dim: self.dim,
            });
        }
        if l == 1 {
            return Ok(self.clone());
        }
        let subsets = combinations(self.dim, l);
        let n = subsets.len();
        let mut entries = Vec::with_capacity(n * n);
        let mut minor = vec![0.0; l * l];
        for rows in &subsets {
            for cols in &subsets {
                for (a, &i) in rows.iter().enumerate() {
                    for (b, &j) in cols.iter().enumerate() {
                        minor[a * l + b] = self.get(i, j);
                    }
                }
                entries.push(det_in_place(&mut minor.clone(), l));
            }
        }
        Ok(Matrix { dim: n, entries })
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        det_in_place(&mut self.entries.clone(), self.dim)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[pivot * n + col].abs() {
                pivot = r;
            }
        }
        let p = a[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
            }
            det = -det;
        }
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
        }
    }
    det
}

/// Lexicographically ordered l-subsets of {0..n-1}.
pub(crate) fn combinations(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..l).collect();
    loop {
        out.push(cur.clone());
        // advance to next combination
        let mut i = l;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - l {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..l {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Closed-form spectral radius of a 2x2 matrix (quadratic formula),
    /// independent of the repeated-squaring path.
    fn rho_2x2(m: &Matrix) -> f64 {
        let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        let tr = a + d;
        let det = a * d - b * c;
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            (tr / 2.0 + r).abs().max((tr / 2.0 - r).abs())
        } else {
            det.abs().sqrt()
        }
    }

    /// Deterministic pseudo-random entries in [-1, 1] for oracle tests.
    fn lcg_matrix(dim: usize, seed: &mut u64) -> Matrix {
        Matrix::from_fn(dim, |_, _| {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn matmul_identity_and_hand_product() {
        let m = mat(&[&[3.0, -1.0], &[0.5, 2.0]]);
        let id = Matrix::identity(2);
        assert_eq!(id.matmul(&m).unwrap(), m);
        let a = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let b = mat(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let p = a.matmul(&b).unwrap();
        assert_eq!(p, mat(&[&[2.0, 1.0], &[1.0, 1.0]]));
    }

    #[test]
    fn matmul_rejects_mismatched_dims() {
        let a = Matrix::identity(2);
        let b = Matrix::identity(3);
        assert!(matches!(
            a.matmul(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matmul_associativity_oracle() {
        let mut seed = 0xfeed_1234u64;
        for dim in 1..=6 {
            for _ in 0..20 {
                let a = lcg_matrix(dim, &mut seed);
                let b = lcg_matrix(dim, &mut seed);
                let c = lcg_matrix(dim, &mut seed);
                let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
                let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
                let diff = left.sub(&right).unwrap().max_abs_entry();
                assert!(diff <= 1e-12, "associativity defect {diff} at dim {dim}");
            }
        }
    }

    #[test]
    fn operator_norm_examples() {
        let d = mat(&[&[3.0, 0.0], &[0.0, 4.0]]);
        assert!((d.operator_norm(NormKind::Spectral2) - 4.0).abs() < 1e-11);
        let m = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(m.operator_norm(NormKind::MaxRowSum), 2.0);
        assert_eq!(m.operator_norm(NormKind::MaxColSum), 2.0);
        // Largest singular value of [[1,1],[0,1]] is the golden ratio:
        // eigenvalues of m^T m are (3 +- sqrt 5)/2 and phi^2 = (3 + sqrt 5)/2.
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((m.operator_norm(NormKind::Spectral2) - phi).abs() < 1e-11);
        let est = m.operator_norm_detailed(NormKind::Spectral2);
        assert!(est.converged);
    }

    #[test]
    fn spectral_radius_examples() {
        assert!((mat(&[&[2.0, 0.0], &[0.0, 1.0]]).spectral_radius() - 2.0).abs() < 1e-10);
        assert_eq!(mat(&[&[0.0, 1.0], &[0.0, 0.0]]).spectral_radius(), 0.0);
        assert!((mat(&[&[0.0, -0.5], &[0.5, 0.0]]).spectral_radius() - 0.5).abs() < 1e-10);
        let m = mat(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let expected = (3.0 + 5.0f64.sqrt()) / 2.0;
        assert!((m.spectral_radius() - rho_2x2(&m)).abs() < 1e-10);
        assert!((m.spectral_radius() - expected).abs() < 1e-10);
    }

    #[test]
    fn spectral_radius_matches_closed_form_on_random_2x2() {
        let mut seed = 77u64;
        for _ in 0..200 {
            let m = lcg_matrix(2, &mut seed);
            let rho = m.spectral_radius();
            let oracle = rho_2x2(&m);
            assert!(
                (rho - oracle).abs() <= 1e-8 * oracle.max(1e-12),
                "rho {rho} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn spectral_radius_power_and_cyclic_invariance() {
        let mut seed = 31u64;
        for dim in 1..=4 {
            for _ in 0..20 {
                let m = lcg_matrix(dim, &mut seed);
                let rho = m.spectral_radius();
                let mut p = m.clone();
                for k in 2..=5usize {
                    p = p.matmul(&m).unwrap();
                    let lhs = p.spectral_radius();
                    let rhs = rho.powi(k as i32);
                    assert!(
                        (lhs - rhs).abs() <= 1e-8 * rhs.max(1e-10),
                        "rho(m^{k}) = {lhs} vs {rhs}"
                    );
                }
                let a = lcg_matrix(dim, &mut seed);
                let ab = a.matmul(&m).unwrap().spectral_radius();
                let ba = m.matmul(&a).unwrap().spectral_radius();
                assert!((ab - ba).abs() <= 1e-8 * ab.max(1e-10));
            }
        }
    }

    #[test]
    fn spectral_radius_below_all_norms_and_scales_linearly() {
        let mut seed = 5150u64;
        for dim in 1..=4 {
            for _ in 0..20 {
                let m = lcg_matrix(dim, &mut seed);
                let rho = m.spectral_radius();
                for kind in [NormKind::Spectral2, NormKind::MaxRowSum, NormKind::MaxColSum] {
                    assert!(rho <= m.operator_norm(kind) + 1e-10);
                }
                let c = -1.7;
                let scaled = m.scale(c).spectral_radius();
                assert!((scaled - c.abs() * rho).abs() <= 1e-10 * (c.abs() * rho).max(1e-10));
            }
        }
    }

    #[test]
    fn exponential_examples() {
        let z = Matrix::zeros(3).matrix_exponential().unwrap();
        assert!(z.sub(&Matrix::identity(3)).unwrap().max_abs_entry() < 1e-15);
        let d = mat(&[&[1.0, 0.0], &[0.0, -1.0]]).matrix_exponential().unwrap();
        assert!((d.get(0, 0) - 1.0f64.exp()).abs() < 1e-12);
        assert!((d.get(1, 1) - (-1.0f64).exp()).abs() < 1e-12);
        assert!(d.get(0, 1).abs() < 1e-15);
    }

    #[test]
    fn exponential_inverse_identity() {
        let mut seed = 99u64;
        for _ in 0..30 {
            let mut a = lcg_matrix(3, &mut seed);
            let n = a.operator_norm(NormKind::Spectral2);
            if n > 2.0 {
                a = a.scale(2.0 / n);
            }
            let e = a.matrix_exponential().unwrap();
            let einv = a.scale(-1.0).matrix_exponential().unwrap();
            let prod = e.matmul(&einv).unwrap();
            let defect = prod.sub(&Matrix::identity(3)).unwrap().max_abs_entry();
            assert!(defect < 1e-9, "exp(A)exp(-A) defect {defect}");
        }
    }

    #[test]
    fn exponential_accurate_at_large_diagonal_norm() {
        let m = mat(&[&[50.0, 0.0], &[0.0, -50.0]]).matrix_exponential().unwrap();
        let big = 50.0f64.exp();
        let small = (-50.0f64).exp();
        assert!((m.get(0, 0) - big).abs() <= 1e-10 * big);
        assert!((m.get(1, 1) - small).abs() <= 1e-10 * small);
    }

    #[test]
    fn spectral_radius_survives_extreme_scales() {
        let base = mat(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let rho = (3.0 + 5.0f64.sqrt()) / 2.0;
        for scale in [1e-150, 1e150] {
            let got = base.scale(scale).spectral_radius();
            let want = scale * rho;
            assert!(
                (got - want).abs() <= 1e-10 * want,
                "scale {scale}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn exponential_rejects_huge_norm() {
        let m = Matrix::identity(2).scale(1e4);
        assert!(matches!(
            m.matrix_exponential(),
            Err(Error::ExpNormTooLarge { .. })
        ));
    }

    #[test]
    fn exterior_power_examples() {
        let mut seed = 404u64;
        let m = lcg_matrix(3, &mut seed);
        assert_eq!(m.exterior_power(1).unwrap(), m);
        let top = m.exterior_power(3).unwrap();
        assert_eq!(top.dim(), 1);
        assert!((top.get(0, 0) - m.determinant()).abs() < 1e-12);
        assert!(matches!(
            m.exterior_power(0),
            Err(Error::ExteriorOrderOutOfRange { .. })
        ));
        assert!(matches!(
            m.exterior_power(4),
            Err(Error::ExteriorOrderOutOfRange { .. })
        ));
    }

    #[test]
    fn exterior_power_cauchy_binet() {
        let mut seed = 2024u64;
        for _ in 0..40 {
            let a = lcg_matrix(3, &mut seed);
            let b = lcg_matrix(3, &mut seed);
            let lhs = a.matmul(&b).unwrap().exterior_power(2).unwrap();
            let rhs = a
                .exterior_power(2)
                .unwrap()
                .matmul(&b.exterior_power(2).unwrap())
                .unwrap();
            let diff = lhs.sub(&rhs).unwrap().max_abs_entry();
            assert!(diff <= 1e-10, "Cauchy-Binet defect {diff}");
        }
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(Matrix::new(0, vec![]), Err(Error::ZeroDimension)));
        assert!(matches!(
            Matrix::new(2, vec![1.0; 3]),
            Err(Error::BadEntryCount { .. })
        ));
        assert!(matches!(
            Matrix::new(1, vec![f64::NAN]),
            Err(Error::NonFiniteEntries)
        ));
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }
}
