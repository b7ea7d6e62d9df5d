//! Markov switching machinery: stationary distributions, cylinder measures,
//! sampled switching laws, Lyapunov exponent and spectrum estimation, and
//! the approximation of the exponent by closed switching words found along
//! one sampled trajectory.

use serde::Serialize;

use crate::bounds::MatrixFamily;
use crate::constraint::{Constraint, Word};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, NormKind};
use crate::rng;

/// Row sums must match 1 to this absolute tolerance.
const ROW_SUM_TOL: f64 = 1e-12;
/// Successive L1 tolerance for the stationary power iteration.
const STATIONARY_TOL: f64 = 1e-13;
/// Iteration cap for the stationary power iteration.
const STATIONARY_MAX_ITER: usize = 1_000_000;
/// Stationary entries below this are snapped to exact zero (transient
/// symbols whose mass decays geometrically but never reaches 0 in floats).
const STATIONARY_FLOOR: f64 = 1e-12;
/// Stationary vectors from two different starts agreeing within this are
/// treated as the same fixed point.
const UNIQUENESS_TOL: f64 = 1e-8;
/// Renormalization cadence for long matrix products.
const RENORM_EVERY: usize = 20;
const UNDERFLOW: f64 = 1e-300;

/// Outcome of the stationary-vector power iteration.
#[derive(Clone, Debug, Serialize)]
pub struct StationaryResult {
    pub vector: Vec<f64>,
    /// False when a second iteration from a perturbed start found a
    /// different fixed point (reducible chain).
    pub unique: bool,
    pub converged: bool,
    pub iterations: usize,
}

/// Fixed point of `v -> v P` by power iteration from the uniform vector.
/// Iterates the half-lazy kernel `(v + v P) / 2`, which has exactly the
/// same fixed points as `P` but also converges on periodic chains.
pub fn stationary_distribution(k: usize, transition: &[f64]) -> Result<StationaryResult> {
    validate_stochastic(k, transition)?;
    let uniform = vec![1.0 / k as f64; k];
    let (mut v, converged, iterations) = fixed_point_from(k, transition, uniform);
    // Uniqueness probe: a deterministic non-uniform start.
    let mut alt_start: Vec<f64> = (0..k).map(|i| 1.0 + (i as f64 + 1.0).sin().abs()).collect();
    let s: f64 = alt_start.iter().sum();
    alt_start.iter_mut().for_each(|x| *x /= s);
    let (alt, _, _) = fixed_point_from(k, transition, alt_start);
    let unique = v
        .iter()
        .zip(&alt)
        .all(|(a, b)| (a - b).abs() <= UNIQUENESS_TOL);
    // Snap transient-symbol residue to exact zero and renormalize; the
    // perturbation is at most K * 1e-12, well inside the pP = p tolerance.
    let peak = v.iter().fold(0.0f64, |m, &x| m.max(x));
    for x in v.iter_mut() {
        if *x < STATIONARY_FLOOR * peak.max(1.0) {
            *x = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    Ok(StationaryResult {
        vector: v,
        unique,
        converged,
        iterations,
    })
}

fn fixed_point_from(k: usize, p: &[f64], start: Vec<f64>) -> (Vec<f64>, bool, usize) {
    let mut v = start;
    for it in 0..STATIONARY_MAX_ITER {
        let mut w = vec![0.0; k];
        for i in 0..k {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for j in 0..k {
                w[j] += vi * p[i * k + j];
            }
        }
        let mut diff = 0.0;
        for j in 0..k {
            w[j] = 0.5 * (w[j] + v[j]);
            diff += (w[j] - v[j]).abs();
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        v = w;
        if diff < STATIONARY_TOL {
            return (v, true, it + 1);
        }
    }
    (v, false, STATIONARY_MAX_ITER)
}

fn validate_stochastic(k: usize, transition: &[f64]) -> Result<()> {
    if k == 0 || transition.len() != k * k {
        return Err(Error::NotStochastic(format!(
            "expected {} entries for a {k}-state chain, got {}",
            k * k,
            transition.len()
        )));
    }
    for (idx, &x) in transition.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::NotStochastic(format!(
                "entry ({}, {}) = {x} is not a probability",
                idx / k + 1,
                idx % k + 1
            )));
        }
    }
    for i in 0..k {
        let s: f64 = transition[i * k..(i + 1) * k].iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic(format!(
                "row {} sums to {s}, expected 1",
                i + 1
            )));
        }
    }
    Ok(())
}

/// A time-homogeneous Markov switching model: transition matrix `P`, its
/// stationary row vector, and the distribution of the first symbol.
///
/// The stationary vector satisfies `p P = p`; the initial distribution
/// defaults to it but may be overridden (a deterministic start, say), in
/// which case `initial_is_stationary` records the difference. Cylinder
/// measures always weight by the stationary vector.
#[derive(Clone, Debug, Serialize)]
pub struct MarkovModel {
    k: usize,
    transition: Vec<f64>,
    stationary: Vec<f64>,
    initial: Vec<f64>,
    pub initial_is_stationary: bool,
    pub stationary_unique: bool,
    pub stationary_converged: bool,
}

impl MarkovModel {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::NotStochastic("ragged transition rows".into()));
        }
        let transition = rows.concat();
        let st = stationary_distribution(k, &transition)?;
        Ok(MarkovModel {
            k,
            transition,
            initial: st.vector.clone(),
            stationary: st.vector,
            initial_is_stationary: true,
            stationary_unique: st.unique,
            stationary_converged: st.converged,
        })
    }

    /// Same, but sampling starts from the supplied distribution rather than
    /// the stationary one.
    pub fn with_initial(rows: &[Vec<f64>], initial: Vec<f64>) -> Result<Self> {
        let mut model = MarkovModel::new(rows)?;
        if initial.len() != model.k {
            return Err(Error::NotStochastic(format!(
                "initial distribution has {} entries, chain has {} states",
                initial.len(),
                model.k
            )));
        }
        let s: f64 = initial.iter().sum();
        if initial.iter().any(|&x| !x.is_finite() || x < 0.0) || (s - 1.0).abs() > 1e-10 {
            return Err(Error::NotStochastic(
                "initial distribution must be a probability vector".into(),
            ));
        }
        model.initial_is_stationary = initial
            .iter()
            .zip(&model.stationary)
            .all(|(a, b)| (a - b).abs() <= 1e-10);
        model.initial = initial;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Transition probability, 1-based symbols.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transition[(from - 1) * self.k + (to - 1)]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// The induced {0,1} constraint: a transition is admissible iff its
    /// probability is strictly positive (no epsilon floor).
    pub fn constraint(&self) -> Constraint {
        Constraint::new(
            self.k,
            self.transition.iter().map(|&p| (p > 0.0) as u8).collect(),
        )
        .expect("induced constraint is well formed")
    }

    /// Probability the chain emits the word: stationary weight of the first
    /// symbol times the transition probabilities. Words using a
    /// zero-probability transition get measure exactly 0 with a flag, not an
    /// error.
    pub fn cylinder_measure(&self, word: &[usize]) -> Result<CylinderMeasure> {
        if word.is_empty() {
            return Err(Error::InvalidParameter("empty word".into()));
        }
        for &s in word {
            if s < 1 || s > self.k {
                return Err(Error::SymbolOutOfRange { symbol: s, k: self.k });
            }
        }
        let mut value = self.stationary[word[0] - 1];
        let mut admissible = true;
        for pair in word.windows(2) {
            let p = self.transition(pair[0], pair[1]);
            if p == 0.0 {
                admissible = false;
                value = 0.0;
                break;
            }
            value *= p;
        }
        Ok(CylinderMeasure { value, admissible })
    }

    /// Samples a switching law: first symbol from the initial distribution,
    /// transitions from the rows of `P`. Deterministic under the seed.
    pub fn sample_switching_law(&self, length: usize, seed: u64) -> Word {
        assert!(length >= 1);
        let mut rng = rng::seeded(seed);
        let mut word = Vec::with_capacity(length);
        let first = pick(&self.initial, rng::uniform(&mut rng));
        word.push(first);
        for _ in 1..length {
            let last = *word.last().unwrap();
            let row = &self.transition[(last - 1) * self.k..last * self.k];
            word.push(pick(row, rng::uniform(&mut rng)));
        }
        word
    }
}

/// Inverse-CDF selection; zero-probability entries occupy zero-width
/// intervals and are never selected.
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i + 1;
        }
    }
    // float drift: fall back to the last positive-weight symbol
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .map(|i| i + 1)
        .unwrap_or(weights.len())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CylinderMeasure {
    pub value: f64,
    /// False when the word crosses a zero-probability transition.
    pub admissible: bool,
}

/// Monte-Carlo estimate of the maximal Lyapunov exponent (nats per step).
#[derive(Clone, Debug, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub length: usize,
    pub seed: u64,
    /// True when some trial hit an exactly zero product (estimate -inf).
    pub degenerate: bool,
}

fn check_compatible(f: &MatrixFamily, model: &MarkovModel) -> Result<()> {
    if model.k() != f.original_k() {
        return Err(Error::IncompatibleModel(format!(
            "chain has {} states, family was built over {}",
            model.k(),
            f.original_k()
        )));
    }
    for i in 1..=model.k() {
        for j in 1..=model.k() {
            if model.transition(i, j) > 0.0 {
                match (f.matrix_for_original(i), f.matrix_for_original(j)) {
                    (Some(_), Some(_)) => {}
                    _ => {
                        return Err(Error::IncompatibleModel(format!(
                            "transition {i}->{j} has positive probability but a symbol was trimmed from the family"
                        )))
                    }
                }
            }
        }
        if model.initial()[i - 1] > 0.0 && f.matrix_for_original(i).is_none() {
            return Err(Error::IncompatibleModel(format!(
                "symbol {i} can start the chain but was trimmed from the family"
            )));
        }
    }
    Ok(())
}

/// Averages `(1/n) log norm(A_w(n) ... A_w(1))` over independent sampled
/// switching laws. Products renormalize every [`RENORM_EVERY`] steps with
/// log-scale accumulation. Trials draw deterministic sub-seeds from the
/// master seed.
pub fn max_lyapunov_mc(
    f: &MatrixFamily,
    model: &MarkovModel,
    length: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if length < 1 || trials < 1 {
        return Err(Error::InvalidParameter(
            "length and trials must be at least 1".into(),
        ));
    }
    check_compatible(f, model)?;
    let mut samples = Vec::with_capacity(trials);
    let mut degenerate = false;
    for t in 0..trials {
        let word = model.sample_switching_law(length, rng::sub_seed(seed, t as u64));
        let mut m = Matrix::identity(f.dim());
        let mut log_scale = 0.0f64;
        let mut zero = false;
        for (step, &s) in word.iter().enumerate() {
            let a = f
                .matrix_for_original(s)
                .expect("compatibility checked above");
            m = a.matmul(&m).expect("equal dims");
            if (step + 1) % RENORM_EVERY == 0 {
                let norm = m.operator_norm(NormKind::MaxRowSum);
                if norm < UNDERFLOW {
                    zero = true;
                    break;
                }
                log_scale += norm.ln();
                m = m.scale(1.0 / norm);
            }
        }
        let sample = if zero {
            degenerate = true;
            f64::NEG_INFINITY
        } else {
            let tail = m.operator_norm(NormKind::Spectral2);
            if tail < UNDERFLOW {
                degenerate = true;
                f64::NEG_INFINITY
            } else {
                (log_scale + tail.ln()) / length as f64
            }
        };
        samples.push(sample);
    }
    let estimate = samples.iter().sum::<f64>() / trials as f64;
    let stderr = if trials > 1 && estimate.is_finite() {
        let var = samples
            .iter()
            .map(|x| (x - estimate) * (x - estimate))
            .sum::<f64>()
            / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate,
        stderr,
        trials,
        length,
        seed,
        degenerate,
    })
}

/// The full Lyapunov spectrum estimate: d exponents sorted nonincreasing,
/// with per-exponent standard errors from batch means.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    pub trajectory_length: usize,
    pub trials: usize,
    pub standard_errors: Vec<f64>,
    pub seed: u64,
    /// True when some R diagonal underflowed (singular products); exponents
    /// past the first underflow are reported as -inf.
    pub truncated: bool,
}

/// One-trajectory QR (Benettin) scheme: push an orthonormal frame through
/// the cocycle, accumulate the log diagonal of R at each step. For singular
/// families only the exponents above the first underflow are meaningful.
pub fn lyapunov_spectrum_qr(
    f: &MatrixFamily,
    model: &MarkovModel,
    length: usize,
    seed: u64,
) -> Result<LyapunovSpectrum> {
    if length < 1 {
        return Err(Error::InvalidParameter("length must be at least 1".into()));
    }
    check_compatible(f, model)?;
    let d = f.dim();
    let word = model.sample_switching_law(length, seed);
    let mut q: Vec<Vec<f64>> = (0..d)
        .map(|c| (0..d).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut sums = vec![0.0f64; d];
    let mut dead = vec![false; d];
    let batches = 10.min(length);
    let batch_len = length / batches;
    let mut batch_sums = vec![vec![0.0f64; batches]; d];
    let mut truncated = false;

    for (step, &s) in word.iter().enumerate() {
        let a = f.matrix_for_original(s).expect("compatibility checked");
        // columns after the cocycle step
        let mut cols: Vec<Vec<f64>> = q
            .iter()
            .map(|col| {
                (0..d)
                    .map(|r| (0..d).map(|k| a.get(r, k) * col[k]).sum())
                    .collect()
            })
            .collect();
        // modified Gram-Schmidt; earlier columns never depend on later ones
        for c in 0..d {
            for prev in 0..c {
                let proj: f64 = (0..d).map(|r| cols[prev][r] * cols[c][r]).sum();
                for r in 0..d {
                    cols[c][r] -= proj * cols[prev][r];
                }
            }
            let norm: f64 = cols[c].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < UNDERFLOW {
                // Rank lost at column c: freeze its exponent at -inf and
                // substitute a fresh direction so later columns stay usable.
                truncated = true;
                dead[c] = true;
                let replacement = fresh_direction(&cols[..c], d);
                cols[c] = replacement;
            } else {
                for x in cols[c].iter_mut() {
                    *x /= norm;
                }
                if !dead[c] {
                    let l = norm.ln();
                    sums[c] += l;
                    let b = (step / batch_len.max(1)).min(batches - 1);
                    batch_sums[c][b] += l;
                }
            }
        }
        q = cols;
    }

    let mut pairs: Vec<(f64, f64)> = (0..d)
        .map(|c| {
            if dead[c] {
                (f64::NEG_INFINITY, 0.0)
            } else {
                let exponent = sums[c] / length as f64;
                let stderr = if batches > 1 {
                    let rates: Vec<f64> = (0..batches)
                        .map(|b| {
                            let len = if b == batches - 1 {
                                length - batch_len * (batches - 1)
                            } else {
                                batch_len
                            };
                            batch_sums[c][b] / len.max(1) as f64
                        })
                        .collect();
                    let mean = rates.iter().sum::<f64>() / batches as f64;
                    let var = rates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                        / (batches - 1) as f64;
                    (var / batches as f64).sqrt()
                } else {
                    0.0
                };
                (exponent, stderr)
            }
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovSpectrum {
        exponents: pairs.iter().map(|p| p.0).collect(),
        trajectory_length: length,
        trials: 1,
        standard_errors: pairs.iter().map(|p| p.1).collect(),
        seed,
        truncated,
    })
}

/// A unit vector orthogonal to the given columns (used to re-seed a lost
/// rank direction): the basis vector with the largest residual after
/// orthogonalization. With c < d orthonormal columns some basis vector
/// keeps residual norm at least sqrt((d - c) / d).
fn fresh_direction(cols: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for basis in 0..d {
        let mut v: Vec<f64> = (0..d).map(|r| if r == basis { 1.0 } else { 0.0 }).collect();
        for col in cols {
            let proj: f64 = (0..d).map(|r| col[r] * v[r]).sum();
            for r in 0..d {
                v[r] -= proj * col[r];
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if best.as_ref().map_or(true, |(b, _)| norm > *b) {
            best = Some((norm, v));
        }
    }
    let (norm, mut v) = best.expect("d >= 1");
    if norm > 1e-8 {
        v.iter_mut().for_each(|x| *x /= norm);
        v
    } else {
        (0..d).map(|r| if r == 0 { 1.0 } else { 0.0 }).collect()
    }
}

/// One closed word discovered along the sampled trajectory: the shifted law
/// matched the original on the leading window, so the prefix closes into an
/// admissible cycle.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicReturn {
    pub n: usize,
    /// (1/n) log rho(product over the closed prefix).
    pub exponent: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicApproximation {
    pub returns: Vec<PeriodicReturn>,
    /// (1/N) log norm of the full sampled product, for comparison.
    pub mc_reference: f64,
    pub window: usize,
    pub max_length: usize,
    pub seed: u64,
}

/// Samples one switching law of length `max_length` and closes it at every
/// return time where the shifted law matches the first `window` symbols.
/// Each closed prefix is scored by the n-th root of its product's spectral
/// radius (in logs). An empty `returns` list means no recurrence was found.
pub fn periodic_approximation(
    f: &MatrixFamily,
    model: &MarkovModel,
    seed: u64,
    window: usize,
    max_length: usize,
) -> Result<PeriodicApproximation> {
    if window < 1 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    if max_length <= window {
        return Err(Error::InvalidParameter(
            "max_length must exceed the match window".into(),
        ));
    }
    check_compatible(f, model)?;
    let word = model.sample_switching_law(max_length, seed);
    let mut returns = Vec::new();
    let mut m = Matrix::identity(f.dim());
    let mut log_scale = 0.0f64;
    let mut zero = false;
    for n in 1..=max_length {
        let a = f
            .matrix_for_original(word[n - 1])
            .expect("compatibility checked");
        if !zero {
            m = a.matmul(&m).expect("equal dims");
            let norm = m.operator_norm(NormKind::MaxRowSum);
            if norm < UNDERFLOW {
                zero = true;
            } else {
                log_scale += norm.ln();
                m = m.scale(1.0 / norm);
            }
        }
        if n + window <= max_length && word[n..n + window] == word[..window] {
            // The shift by n matches on the window, so A(w_n, w_1) = 1 and
            // the prefix generates a periodic law.
            let exponent = if zero {
                f64::NEG_INFINITY
            } else {
                let rho = m.spectral_radius();
                if rho < UNDERFLOW {
                    f64::NEG_INFINITY
                } else {
                    (log_scale + rho.ln()) / n as f64
                }
            };
            returns.push(PeriodicReturn { n, exponent });
        }
    }
    let mc_reference = if zero {
        f64::NEG_INFINITY
    } else {
        (log_scale + m.operator_norm(NormKind::Spectral2).ln()) / max_length as f64
    };
    Ok(PeriodicApproximation {
        returns,
        mc_reference,
        window,
        max_length,
        seed,
    })
}
