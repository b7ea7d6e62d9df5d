//! Finite-horizon lower/upper bounds on the constrained joint spectral
//! radius, plus the stability checks built on them.
//!
//! For a family A_1..A_K under constraint matrix 𝔸, the two sides are
//!
//! * lower: beta_n = max over closed length-n words of rho(product)^(1/n)
//! * upper: alpha_n = max over admissible length-n words of norm(product)^(1/n)
//!
//! Products multiply in switching order, last symbol applied leftmost. Every
//! beta_n is a rigorous lower bound and every alpha_n a rigorous upper bound
//! for the same limit, so [sup beta_n, inf alpha_n] is a certified bracket at
//! any horizon. We always report the bracket, never the limit.

use serde::Serialize;

use crate::constraint::{self, Constraint, Word};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, NormKind};
use crate::rng;

/// Norms below this are treated as an exactly zero product.
const UNDERFLOW: f64 = 1e-300;
/// Absolute slack allowed when verifying certificate inequalities.
const CERT_SLACK: f64 = 1e-9;

/// An ordered set of K same-dimension matrices together with a trimmed
/// transition constraint. Construction trims the constraint and drops the
/// matrices of removed symbols; `kept` records the surviving original
/// symbols so callers indexing by pre-trim symbols can translate.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixFamily {
    matrices: Vec<Matrix>,
    constraint: Constraint,
    kept: Vec<usize>,
    original_k: usize,
    dim: usize,
}

impl MatrixFamily {
    pub fn new(matrices: Vec<Matrix>, constraint: Constraint) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidParameter("empty matrix family".into()));
        }
        if matrices.len() != constraint.k() {
            return Err(Error::ConstraintSizeMismatch {
                constraint_k: constraint.k(),
                family_k: matrices.len(),
            });
        }
        let dim = matrices[0].dim();
        if let Some(bad) = matrices.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.dim(),
            });
        }
        let original_k = constraint.k();
        let trimmed = constraint.trim()?;
        let selected = trimmed
            .kept
            .iter()
            .map(|&s| matrices[s - 1].clone())
            .collect();
        Ok(MatrixFamily {
            matrices: selected,
            constraint: trimmed.constraint,
            kept: trimmed.kept,
            original_k,
            dim,
        })
    }

    /// Family over the unconstrained (all transitions admissible) shift.
    pub fn unconstrained(matrices: Vec<Matrix>) -> Result<Self> {
        let k = matrices.len();
        MatrixFamily::new(matrices, Constraint::all_ones(k))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of symbols after trimming.
    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn original_k(&self) -> usize {
        self.original_k
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    /// Matrix of a post-trim symbol (1-based).
    pub fn matrix(&self, symbol: usize) -> &Matrix {
        &self.matrices[symbol - 1]
    }

    /// Matrix of an original (pre-trim) symbol, if it survived trimming.
    pub fn matrix_for_original(&self, symbol: usize) -> Option<&Matrix> {
        self.kept
            .iter()
            .position(|&s| s == symbol)
            .map(|i| &self.matrices[i])
    }

    /// Same constraint, every matrix multiplied by `c`.
    pub fn scaled(&self, c: f64) -> MatrixFamily {
        MatrixFamily {
            matrices: self.matrices.iter().map(|m| m.scale(c)).collect(),
            constraint: self.constraint.clone(),
            kept: self.kept.clone(),
            original_k: self.original_k,
            dim: self.dim,
        }
    }

    /// Entrywise `A_k + delta * direction_k` over the post-trim symbols.
    pub fn perturbed(&self, direction: &[Matrix], delta: f64) -> Result<MatrixFamily> {
        if direction.len() != self.k() {
            return Err(Error::ConstraintSizeMismatch {
                constraint_k: self.k(),
                family_k: direction.len(),
            });
        }
        let matrices = self
            .matrices
            .iter()
            .zip(direction)
            .map(|(a, d)| a.add_scaled(d, delta))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixFamily {
            matrices,
            constraint: self.constraint.clone(),
            kept: self.kept.clone(),
            original_k: self.original_k,
            dim: self.dim,
        })
    }

    /// Family of compound matrices of order `l` under the same constraint.
    /// The top growth rate of the lifted family is the sum of the top `l`
    /// Lyapunov exponents of the original one.
    pub fn exterior_lift(&self, l: usize) -> Result<MatrixFamily> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| m.exterior_power(l))
            .collect::<Result<Vec<_>>>()?;
        let dim = matrices[0].dim();
        Ok(MatrixFamily {
            matrices,
            constraint: self.constraint.clone(),
            kept: self.kept.clone(),
            original_k: self.original_k,
            dim,
        })
    }

    pub fn max_norm(&self, kind: NormKind) -> f64 {
        self.matrices
            .iter()
            .map(|m| m.operator_norm(kind))
            .fold(0.0, f64::max)
    }

    /// Product along `word` in switching order (last symbol leftmost),
    /// normalized per step to avoid overflow. Symbols are post-trim 1-based.
    pub fn word_product(&self, word: &[usize]) -> NormalizedProduct {
        let mut m = self.matrix(word[0]).clone();
        let mut log_scale = 0.0;
        let norm = m.operator_norm(NormKind::MaxRowSum);
        if norm < UNDERFLOW {
            return NormalizedProduct::zero(self.dim);
        }
        log_scale += norm.ln();
        m = m.scale(1.0 / norm);
        for &s in &word[1..] {
            m = self.matrix(s).matmul(&m).expect("equal dims");
            let norm = m.operator_norm(NormKind::MaxRowSum);
            if norm < UNDERFLOW {
                return NormalizedProduct::zero(self.dim);
            }
            log_scale += norm.ln();
            m = m.scale(1.0 / norm);
        }
        NormalizedProduct {
            matrix: m,
            log_scale,
        }
    }
}

/// A matrix product kept in normalized form: the true product equals
/// `exp(log_scale) * matrix` with `matrix` of max-row-sum norm one
/// (or the zero matrix with `log_scale = -inf`).
#[derive(Clone, Debug)]
pub struct NormalizedProduct {
    pub matrix: Matrix,
    pub log_scale: f64,
}

impl NormalizedProduct {
    fn zero(dim: usize) -> Self {
        NormalizedProduct {
            matrix: Matrix::zeros(dim),
            log_scale: f64::NEG_INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY
    }

    pub fn log_norm(&self, kind: NormKind) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.log_scale + self.matrix.operator_norm(kind).ln()
    }

    pub fn log_spectral_radius(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let rho = self.matrix.spectral_radius();
        if rho < UNDERFLOW {
            f64::NEG_INFINITY
        } else {
            self.log_scale + rho.ln()
        }
    }
}

/// beta_n: the max of rho(product)^(1/n) over closed words of length n, or
/// `None` when no length-n word closes. Rotated words share their spectral
/// radius, so only one representative per cyclic class is evaluated.
pub fn lower_bound(f: &MatrixFamily, n: usize) -> Option<f64> {
    assert!(n >= 1);
    let mut best: Option<f64> = None;
    constraint::for_each_periodic_word(f.constraint(), n, true, |w| {
        let val = f.word_product(w).log_spectral_radius() / n as f64;
        best = Some(best.map_or(val, |b: f64| b.max(val)));
    });
    best.map(f64::exp)
}

/// alpha_n: the max of norm(product)^(1/n) over admissible words of length n,
/// computed by depth-first search with branch-and-bound pruning. A prefix is
/// pruned when its norm times the best possible per-letter growth cannot
/// reach the current maximum (sound by submultiplicativity).
pub fn upper_bound(f: &MatrixFamily, n: usize, kind: NormKind) -> f64 {
    upper_bound_impl(f, n, kind, true)
}

/// Pruning disabled; used as a cross-check path (`--oracle-mode`).
pub fn upper_bound_unpruned(f: &MatrixFamily, n: usize, kind: NormKind) -> f64 {
    upper_bound_impl(f, n, kind, false)
}

fn upper_bound_impl(f: &MatrixFamily, n: usize, kind: NormKind, prune: bool) -> f64 {
    assert!(n >= 1);
    let log_max_letter = f.max_norm(kind).ln(); // -inf for the all-zero family
    let mut best = f64::NEG_INFINITY;

    fn dfs(
        f: &MatrixFamily,
        kind: NormKind,
        prune: bool,
        log_max_letter: f64,
        n: usize,
        depth: usize,
        last: usize,
        m: &Matrix,
        log_norm: f64,
        best: &mut f64,
    ) {
        if depth == n {
            if log_norm > *best {
                *best = log_norm;
            }
            return;
        }
        for s in 1..=f.k() {
            if !f.constraint().allows(last, s) {
                continue;
            }
            let prod = f.matrix(s).matmul(m).expect("equal dims");
            let norm = prod.operator_norm(kind);
            if norm < UNDERFLOW {
                // An exactly zero product stays zero under every completion
                // and can never beat any candidate.
                continue;
            }
            let next_log = log_norm + norm.ln();
            let remaining = n - depth - 1;
            let reachable = if remaining == 0 {
                next_log
            } else {
                next_log + remaining as f64 * log_max_letter
            };
            if prune && reachable <= *best {
                continue;
            }
            let normalized = prod.scale(1.0 / norm);
            dfs(
                f,
                kind,
                prune,
                log_max_letter,
                n,
                depth + 1,
                s,
                &normalized,
                next_log,
                best,
            );
        }
    }

    for s in 1..=f.k() {
        let m = f.matrix(s);
        let norm = m.operator_norm(kind);
        if norm < UNDERFLOW {
            continue;
        }
        let log_norm = norm.ln();
        let reachable = if n == 1 {
            log_norm
        } else {
            log_norm + (n - 1) as f64 * log_max_letter
        };
        if prune && reachable <= best {
            continue;
        }
        let normalized = m.scale(1.0 / norm);
        dfs(
            f,
            kind,
            prune,
            log_max_letter,
            n,
            1,
            s,
            &normalized,
            log_norm,
            &mut best,
        );
    }
    if best == f64::NEG_INFINITY {
        // every admissible word has an exactly zero product
        return 0.0;
    }
    (best / n as f64).exp()
}

/// Per-length bounds plus their running aggregates: the certified bracket is
/// `[lower_sup, upper_inf]`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundsTrace {
    pub n_values: Vec<usize>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<f64>,
    pub norm: NormKind,
    pub lower_sup: Option<f64>,
    pub upper_inf: f64,
}

impl BoundsTrace {
    /// Width of the bracket, when a lower bound exists.
    pub fn gap(&self) -> Option<f64> {
        self.lower_sup.map(|l| self.upper_inf - l)
    }
}

/// Fills a [`BoundsTrace`] for n = 1..=max_n.
pub fn estimate_jsr(f: &MatrixFamily, max_n: usize, kind: NormKind) -> BoundsTrace {
    estimate_jsr_impl(f, max_n, kind, true)
}

pub fn estimate_jsr_unpruned(f: &MatrixFamily, max_n: usize, kind: NormKind) -> BoundsTrace {
    estimate_jsr_impl(f, max_n, kind, false)
}

fn estimate_jsr_impl(f: &MatrixFamily, max_n: usize, kind: NormKind, prune: bool) -> BoundsTrace {
    assert!(max_n >= 1);
    let mut trace = BoundsTrace {
        n_values: Vec::with_capacity(max_n),
        lower: Vec::with_capacity(max_n),
        upper: Vec::with_capacity(max_n),
        norm: kind,
        lower_sup: None,
        upper_inf: f64::INFINITY,
    };
    for n in 1..=max_n {
        let lo = lower_bound(f, n);
        let up = upper_bound_impl(f, n, kind, prune);
        trace.n_values.push(n);
        trace.lower.push(lo);
        trace.upper.push(up);
        if let Some(l) = lo {
            trace.lower_sup = Some(trace.lower_sup.map_or(l, |s: f64| s.max(l)));
        }
        trace.upper_inf = trace.upper_inf.min(up);
    }
    trace
}

/// Max over n <= max_n and closed words w of the raw (un-rooted) spectral
/// radius of the word product. A value < 1 certifies complete periodic
/// stability up to the probed horizon; 0 when no closed word exists.
pub fn complete_periodic_stability_margin(f: &MatrixFamily, max_n: usize) -> f64 {
    assert!(max_n >= 1);
    let mut best = f64::NEG_INFINITY;
    let mut any = false;
    for n in 1..=max_n {
        constraint::for_each_periodic_word(f.constraint(), n, true, |w| {
            any = true;
            let v = f.word_product(w).log_spectral_radius();
            if v > best {
                best = v;
            }
        });
    }
    if !any {
        0.0
    } else {
        best.exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationWitness {
    pub word: Word,
    pub n: usize,
    pub scaled_rho: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationCheck {
    pub alpha: f64,
    pub max_n: usize,
    pub holds: bool,
    pub witness: Option<DilationWitness>,
}

/// Verifies `alpha^n * rho(product) < 1` for every closed word of length
/// n <= max_n; reports the first violating word otherwise.
pub fn dilation_check(f: &MatrixFamily, alpha: f64, max_n: usize) -> Result<DilationCheck> {
    if !(alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation factor must be >= 1, got {alpha}"
        )));
    }
    let log_alpha = alpha.ln();
    for n in 1..=max_n {
        let mut witness: Option<DilationWitness> = None;
        constraint::for_each_periodic_word(f.constraint(), n, true, |w| {
            if witness.is_some() {
                return;
            }
            let log_scaled = n as f64 * log_alpha + f.word_product(w).log_spectral_radius();
            if log_scaled >= 0.0 {
                witness = Some(DilationWitness {
                    word: w.to_vec(),
                    n,
                    scaled_rho: log_scaled.exp(),
                });
            }
        });
        if witness.is_some() {
            return Ok(DilationCheck {
                alpha,
                max_n,
                holds: false,
                witness,
            });
        }
    }
    Ok(DilationCheck {
        alpha,
        max_n,
        holds: true,
        witness: None,
    })
}

/// Outcome of the sampled robustness probe. A pass is a necessary condition
/// only: finite sampling cannot certify the universally quantified property,
/// so verdicts are labeled accordingly.
#[derive(Clone, Debug, Serialize)]
pub struct RobustProbeOutcome {
    pub epsilon: f64,
    pub max_n: usize,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
    pub worst_margin: f64,
    pub worst_case: String,
    pub certified: bool,
    pub note: String,
}

/// Probes robust periodic stability: checks the deterministic dilation
/// perturbation `(1 + eps/2) A_k` plus `samples` random perturbations with
/// spectral-norm distance < eps, each through
/// [`complete_periodic_stability_margin`].
pub fn robust_periodic_stability_probe(
    f: &MatrixFamily,
    epsilon: f64,
    max_n: usize,
    samples: usize,
    seed: u64,
) -> Result<RobustProbeOutcome> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation radius must be positive, got {epsilon}"
        )));
    }
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_case = String::new();
    let record = |margin: f64, label: &str, worst: &mut f64, case: &mut String| {
        if margin > *worst {
            *worst = margin;
            *case = label.to_string();
        }
    };

    let dilated = f.scaled(1.0 + epsilon / 2.0);
    let margin = complete_periodic_stability_margin(&dilated, max_n);
    record(margin, "dilation(1+eps/2)", &mut worst_margin, &mut worst_case);

    let mut rng = rng::seeded(seed);
    for i in 0..samples {
        let direction: Vec<Matrix> = (0..f.k())
            .map(|_| {
                let g = Matrix::from_fn(f.dim(), |_, _| rng::uniform_symmetric(&mut rng));
                let norm = g.operator_norm(NormKind::Spectral2);
                let radius = epsilon * rng::uniform(&mut rng); // strictly < eps
                if norm < UNDERFLOW {
                    Matrix::zeros(f.dim())
                } else {
                    g.scale(radius / norm)
                }
            })
            .collect();
        let perturbed = f.perturbed(&direction, 1.0)?;
        let margin = complete_periodic_stability_margin(&perturbed, max_n);
        record(
            margin,
            &format!("sample {i}"),
            &mut worst_margin,
            &mut worst_case,
        );
    }

    Ok(RobustProbeOutcome {
        epsilon,
        max_n,
        samples,
        seed,
        passed: worst_margin < 1.0,
        worst_margin,
        worst_case,
        certified: false,
        note: format!(
            "sampled, not certified: periodic horizon max_n = {max_n}, {samples} random perturbations"
        ),
    })
}

/// A uniform exponential decay certificate: `norm(product) <= c * gamma^m`
/// for every admissible word of length m, valid for all m by block
/// decomposition. `witness_n` is the length at which alpha dropped below 1.
#[derive(Clone, Debug, Serialize)]
pub struct DecayCertificate {
    pub c: f64,
    pub gamma: f64,
    pub witness_n: usize,
}

/// Searches for the smallest n* <= max_n with alpha_{n*} < 1 and assembles
/// the decay certificate from the residual-length norms. Returns `None`
/// when no probed length certifies decay. The certificate inequality is
/// verified exhaustively for all word lengths up to `2 * witness_n`.
pub fn stability_certificate(
    f: &MatrixFamily,
    max_n: usize,
    kind: NormKind,
) -> Option<DecayCertificate> {
    assert!(max_n >= 1);
    let mut alphas = Vec::with_capacity(max_n);
    let mut witness_n = None;
    for n in 1..=max_n {
        let a = upper_bound(f, n, kind);
        alphas.push(a);
        if a < 1.0 {
            witness_n = Some(n);
            break;
        }
    }
    let n_star = witness_n?;
    let gamma = alphas[n_star - 1];
    // Any length m = q n* + r splits into q blocks bounded by gamma^{n*}
    // and one residual word of length r < n*.
    let mut c: f64 = 1.0; // the r = 0 residual
    for r in 1..n_star {
        let m_r = alphas[r - 1].powi(r as i32); // max word norm at length r
        c = c.max(m_r / gamma.powi(r as i32));
    }
    let cert = DecayCertificate {
        c,
        gamma,
        witness_n: n_star,
    };
    // Construction-time exhaustive verification on lengths <= 2 n*.
    for m in 1..=2 * n_star {
        let max_norm = upper_bound(f, m, kind).powi(m as i32);
        assert!(
            max_norm <= cert.c * cert.gamma.powi(m as i32) + CERT_SLACK,
            "decay certificate violated at length {m}: {max_norm} > {} * {}^{m}",
            cert.c,
            cert.gamma
        );
    }
    Some(cert)
}

/// One row of the continuity probe: bracket endpoint shifts at a given
/// perturbation size.
#[derive(Clone, Debug, Serialize)]
pub struct ContinuityRow {
    pub delta: f64,
    pub lower_shift: Option<f64>,
    pub upper_shift: f64,
}

/// Recomputes the bracket for `f + delta * direction` at each delta and
/// reports the absolute endpoint shifts. Both shifts tend to zero with
/// delta: each finite-n bound is a finite max of continuous functions.
pub fn continuity_probe(
    f: &MatrixFamily,
    direction: &[Matrix],
    deltas: &[f64],
    max_n: usize,
    kind: NormKind,
) -> Result<Vec<ContinuityRow>> {
    if deltas.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidParameter(
            "continuity deltas must be nonnegative".into(),
        ));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "continuity deltas must be strictly decreasing".into(),
        ));
    }
    let base = estimate_jsr(f, max_n, kind);
    deltas
        .iter()
        .map(|&delta| {
            let shifted = estimate_jsr(&f.perturbed(direction, delta)?, max_n, kind);
            let lower_shift = match (base.lower_sup, shifted.lower_sup) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            };
            Ok(ContinuityRow {
                delta,
                lower_shift,
                upper_shift: (base.upper_inf - shifted.upper_inf).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn scalar_family(values: &[f64]) -> MatrixFamily {
        MatrixFamily::unconstrained(values.iter().map(|&v| mat(&[&[v]])).collect()).unwrap()
    }

    fn fibonacci_pair() -> MatrixFamily {
        MatrixFamily::unconstrained(vec![
            mat(&[&[1.0, 1.0], &[0.0, 1.0]]),
            mat(&[&[1.0, 0.0], &[1.0, 1.0]]),
        ])
        .unwrap()
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn random_family(k: usize, dim: usize, seed: &mut u64) -> MatrixFamily {
        MatrixFamily::unconstrained(
            (0..k)
                .map(|_| Matrix::from_fn(dim, |_, _| lcg(seed)))
                .collect(),
        )
        .unwrap()
    }

    /// Exhaustive upper bound without pruning or shared code: direct product
    /// and norm over every admissible word.
    fn upper_oracle(f: &MatrixFamily, n: usize, kind: NormKind) -> f64 {
        let mut best = f64::NEG_INFINITY;
        constraint::for_each_word(f.constraint(), n, |w| {
            let mut m = f.matrix(w[0]).clone();
            let mut log = 0.0;
            let nm = m.operator_norm(NormKind::MaxColSum);
            if nm > 0.0 {
                log += nm.ln();
                m = m.scale(1.0 / nm);
            }
            for &s in &w[1..] {
                m = f.matrix(s).matmul(&m).unwrap();
                let nm = m.operator_norm(NormKind::MaxColSum);
                if nm <= 0.0 {
                    log = f64::NEG_INFINITY;
                    break;
                }
                log += nm.ln();
                m = m.scale(1.0 / nm);
            }
            let total = if log == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                log + m.operator_norm(kind).ln()
            };
            if total > best {
                best = total;
            }
        });
        (best / n as f64).exp()
    }

    #[test]
    fn scalar_lower_and_upper() {
        let f = scalar_family(&[0.5]);
        for n in 1..=6 {
            assert!((lower_bound(&f, n).unwrap() - 0.5).abs() < 1e-12);
            assert!((upper_bound(&f, n, NormKind::Spectral2) - 0.5).abs() < 1e-12);
        }
        let t = estimate_jsr(&f, 6, NormKind::Spectral2);
        assert!((t.lower_sup.unwrap() - 0.5).abs() < 1e-12);
        assert!((t.upper_inf - 0.5).abs() < 1e-12);
        assert!(t.gap().unwrap().abs() < 1e-12);
    }

    #[test]
    fn lower_bound_absent_without_cycles() {
        let c = Constraint::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        let f = MatrixFamily::new(
            vec![mat(&[&[0.5]]), mat(&[&[2.0]])],
            c,
        )
        .unwrap();
        assert!(lower_bound(&f, 1).is_none());
        assert!(lower_bound(&f, 2).is_some());
    }

    #[test]
    fn fibonacci_lower_bound_is_golden_ratio() {
        let f = fibonacci_pair();
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        // Oracle: rho(A1 A2) = rho([[2,1],[1,1]]) = (3+sqrt5)/2 = phi^2 by the
        // 2x2 quadratic formula, so beta_2 = phi.
        let b2 = lower_bound(&f, 2).unwrap();
        assert!((b2 - phi).abs() < 1e-9, "beta_2 = {b2}");
    }

    #[test]
    fn upper_bound_matches_exhaustive_oracle() {
        let mut seed = 42u64;
        for _ in 0..12 {
            let f = random_family(2, 2, &mut seed);
            for n in 1..=6 {
                for kind in [NormKind::Spectral2, NormKind::MaxRowSum] {
                    let fast = upper_bound(&f, n, kind);
                    let slow = upper_oracle(&f, n, kind);
                    let unpruned = upper_bound_unpruned(&f, n, kind);
                    assert!(
                        (fast - slow).abs() <= 1e-9 * slow.max(1.0),
                        "pruned {fast} vs oracle {slow} (n = {n})"
                    );
                    assert!((fast - unpruned).abs() <= 1e-12 * slow.max(1.0));
                }
            }
        }
    }

    #[test]
    fn stochastic_family_bracket_is_one_under_max_row_sum() {
        let f = MatrixFamily::unconstrained(vec![
            mat(&[&[0.3, 0.7], &[0.6, 0.4]]),
            mat(&[&[0.5, 0.5], &[0.1, 0.9]]),
        ])
        .unwrap();
        let t = estimate_jsr(&f, 5, NormKind::MaxRowSum);
        assert!((t.lower_sup.unwrap() - 1.0).abs() <= 1e-12);
        assert!((t.upper_inf - 1.0).abs() <= 1e-12);
        assert!(t.gap().unwrap().abs() <= 1e-12);
    }

    #[test]
    fn sandwich_on_random_families() {
        let mut seed = 7u64;
        for _ in 0..15 {
            let f = random_family(2, 2, &mut seed);
            let t = estimate_jsr(&f, 7, NormKind::Spectral2);
            // Every beta_n is below every alpha_m.
            for lo in t.lower.iter().flatten() {
                for up in &t.upper {
                    assert!(lo <= &(up + 1e-9), "sandwich violated: {lo} > {up}");
                }
            }
        }
    }

    #[test]
    fn margin_examples() {
        let f = scalar_family(&[0.5]);
        assert!((complete_periodic_stability_margin(&f, 5) - 0.5).abs() < 1e-12);
        let z = scalar_family(&[0.0]);
        assert_eq!(complete_periodic_stability_margin(&z, 4), 0.0);
    }

    #[test]
    fn margin_of_pure_cycle_is_the_cycle_product() {
        // Cyclic constraint 1 -> 2 -> 3 -> 1; the only closed classes have
        // length divisible by 3 and the product over one loop is gamma.
        let gamma: f64 = 0.37;
        let g = gamma.powf(1.0 / 3.0);
        let c = Constraint::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let f = MatrixFamily::new(
            vec![mat(&[&[g]]), mat(&[&[g]]), mat(&[&[g]])],
            c,
        )
        .unwrap();
        let m = complete_periodic_stability_margin(&f, 3);
        assert!((m - gamma).abs() < 1e-12, "margin {m} vs gamma {gamma}");
    }

    #[test]
    fn dilation_examples() {
        let f = scalar_family(&[0.5]);
        assert!(dilation_check(&f, 1.5, 6).unwrap().holds);
        let bad = dilation_check(&f, 2.5, 6).unwrap();
        assert!(!bad.holds);
        let w = bad.witness.unwrap();
        assert_eq!(w.n, 1);
        assert!((w.scaled_rho - 1.25).abs() < 1e-12);
        assert!(dilation_check(&f, 0.5, 3).is_err());
    }

    #[test]
    fn dilation_agrees_with_scaled_margin() {
        let mut seed = 99u64;
        for _ in 0..10 {
            let f = random_family(2, 2, &mut seed);
            for alpha in [1.0, 1.1, 1.7] {
                let via_check = dilation_check(&f, alpha, 5).unwrap().holds;
                let via_margin = complete_periodic_stability_margin(&f.scaled(alpha), 5) < 1.0;
                assert_eq!(via_check, via_margin, "alpha = {alpha}");
            }
        }
    }

    #[test]
    fn robust_probe_examples() {
        let f = scalar_family(&[0.5]);
        let ok = robust_periodic_stability_probe(&f, 0.4, 5, 16, 11).unwrap();
        assert!(ok.passed);
        assert!(!ok.certified);
        assert!(ok.worst_margin < 0.9 + 1e-12);

        let g = scalar_family(&[0.99]);
        let bad = robust_periodic_stability_probe(&g, 0.1, 5, 4, 11).unwrap();
        assert!(!bad.passed, "dilation witness 1.05*0.99 > 1");
        assert!(bad.worst_margin >= 1.0);
    }

    #[test]
    fn shear_pair_deep_upper_bound_matches_oracle() {
        let f = fibonacci_pair();
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let a12 = upper_bound(&f, 12, NormKind::Spectral2);
        let oracle = upper_oracle(&f, 12, NormKind::Spectral2);
        assert!((a12 - oracle).abs() <= 1e-9 * oracle, "pruned {a12} vs oracle {oracle}");
        let a6 = upper_bound(&f, 6, NormKind::Spectral2);
        assert!(phi <= a12 + 1e-9);
        assert!(a12 <= a6 + 1e-12);
    }

    #[test]
    fn probe_passes_when_letters_stay_contractive_under_perturbation() {
        // If max_k norm(A_k) + eps < 1, every perturbed letter contracts, so
        // every perturbed product does: the probe can never find a witness.
        let mut seed = 12u64;
        for _ in 0..6 {
            let f = random_family(2, 2, &mut seed);
            let scale = 0.7 / f.max_norm(NormKind::Spectral2);
            let f = f.scaled(scale);
            let eps = 0.2; // 0.7 + 0.2 < 1
            let probe = robust_periodic_stability_probe(&f, eps, 6, 10, 5).unwrap();
            assert!(probe.passed, "worst margin {}", probe.worst_margin);
        }
    }

    #[test]
    fn continuity_shift_halves_with_delta() {
        let f = MatrixFamily::unconstrained(vec![
            mat(&[&[0.8, 0.2], &[0.1, 0.6]]),
            mat(&[&[0.5, -0.3], &[0.2, 0.9]]),
        ])
        .unwrap();
        let dir = vec![mat(&[&[1.0, 0.0], &[0.0, 1.0]]), mat(&[&[0.0, 1.0], &[1.0, 0.0]])];
        let deltas = [0.08, 0.04, 0.02, 0.01];
        let rows = continuity_probe(&f, &dir, &deltas, 6, NormKind::Spectral2).unwrap();
        // local Lipschitz behavior: consecutive shifts shrink by roughly the
        // delta ratio for the smallest deltas
        for pair in rows.windows(2).skip(1) {
            let ratio = pair[1].upper_shift / pair[0].upper_shift;
            assert!(
                (0.25..=1.0).contains(&ratio),
                "upper shift ratio {ratio} outside [0.25, 1]"
            );
            let (Some(a), Some(b)) = (pair[0].lower_shift, pair[1].lower_shift) else {
                panic!("missing lower shifts")
            };
            let ratio = b / a;
            assert!(
                (0.25..=1.0).contains(&ratio),
                "lower shift ratio {ratio} outside [0.25, 1]"
            );
        }
    }

    #[test]
    fn certificate_examples() {
        let f = scalar_family(&[0.5]);
        let cert = stability_certificate(&f, 4, NormKind::Spectral2).unwrap();
        assert_eq!(cert.witness_n, 1);
        assert!((cert.gamma - 0.5).abs() < 1e-12);
        assert!((cert.c - 1.0).abs() < 1e-12);
        assert!(stability_certificate(&scalar_family(&[2.0]), 6, NormKind::Spectral2).is_none());
    }

    #[test]
    fn certificate_verified_exhaustively_on_contractive_pairs() {
        let mut seed = 3u64;
        let mut produced = 0;
        while produced < 6 {
            let f = random_family(2, 2, &mut seed);
            // Scale so alpha_4 < 1 while single letters may still expand.
            let a4 = upper_bound(&f, 4, NormKind::Spectral2);
            let f = f.scaled(0.9 / a4);
            let Some(cert) = stability_certificate(&f, 6, NormKind::Spectral2) else {
                continue;
            };
            produced += 1;
            for m in 1..=12usize {
                let worst = upper_bound(&f, m, NormKind::Spectral2).powi(m as i32);
                assert!(
                    worst <= cert.c * cert.gamma.powi(m as i32) + 1e-9,
                    "certificate fails at length {m}"
                );
            }
        }
    }

    #[test]
    fn continuity_probe_examples() {
        let f = scalar_family(&[0.4]);
        let dir = vec![mat(&[&[1.0]])];
        let rows = continuity_probe(&f, &dir, &[0.2, 0.1, 0.05], 4, NormKind::Spectral2).unwrap();
        for row in &rows {
            // scalar bounds are |a + delta| so the shift equals delta exactly
            assert!((row.lower_shift.unwrap() - row.delta).abs() < 1e-12);
            assert!((row.upper_shift - row.delta).abs() < 1e-12);
        }
        let zero = continuity_probe(&f, &dir, &[0.0], 4, NormKind::Spectral2);
        assert!(zero.is_err() || zero.unwrap()[0].upper_shift == 0.0);
    }

    #[test]
    fn trimming_drops_symbols_and_remaps() {
        let c = Constraint::from_rows(&[vec![1, 1], vec![0, 0]]).unwrap();
        let f = MatrixFamily::new(vec![mat(&[&[0.5]]), mat(&[&[3.0]])], c).unwrap();
        assert_eq!(f.k(), 1);
        assert_eq!(f.kept(), &[1]);
        assert_eq!(f.original_k(), 2);
        assert!(f.matrix_for_original(2).is_none());
        assert_eq!(f.matrix_for_original(1).unwrap().get(0, 0), 0.5);
        // the expanding symbol 2 is gone, so the family is stable
        let t = estimate_jsr(&f, 4, NormKind::Spectral2);
        assert!((t.upper_inf - 0.5).abs() < 1e-12);
    }
}
