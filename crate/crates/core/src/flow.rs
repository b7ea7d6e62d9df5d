//! Continuous-time side: fundamental matrix solutions of x' = X(t.w) x
//! along a driving flow, the subdivision-averaged quasi-contraction test on
//! periodic orbits, Liao's perturbation-budget constants, and ergodic
//! stability criteria built on the finite-horizon growth rate xi_T.
//!
//! Generators are built-ins (constant matrix or trigonometric polynomial in
//! the driving angle), which keeps configurations serializable and the
//! uniform generator bound computable by dense sampling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NormKind};

const UNDERFLOW: f64 = 1e-300;
/// Sample count for the a_star bound on built-in generators.
const A_STAR_SAMPLES: usize = 4096;
/// Safety factor applied to the sampled supremum.
const A_STAR_SAFETY: f64 = 1.01;
/// Number of grid intervals used by the decay fit.
const FIT_INTERVALS: usize = 32;

/// How the driving point moves.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Driving {
    /// Rotation on the unit circle: the point is an angle in [0,1) and
    /// `t.w = w + speed * t (mod 1)`. For nonzero speed the whole circle is
    /// one periodic orbit of period `1/|speed|`.
    CircleRotation { speed: f64 },
    /// An explicitly periodic orbit parametrized by phase in [0, period);
    /// `t.w = w + t (mod period)`.
    PeriodicOrbit { period: f64 },
}

/// One angular harmonic of a trigonometric-polynomial generator.
#[derive(Clone, Debug, Serialize)]
pub struct Harmonic {
    pub frequency: u32,
    pub cos_coeff: Matrix,
    pub sin_coeff: Matrix,
}

/// The coefficient map from driving-space points to matrices.
#[derive(Clone, Debug, Serialize)]
pub enum Generator {
    Constant(Matrix),
    /// base + sum_k cos(2 pi f_k theta) C_k + sin(2 pi f_k theta) S_k,
    /// with theta the normalized position on the driving orbit.
    TrigPolynomial { base: Matrix, harmonics: Vec<Harmonic> },
}

/// A random linear ODE descriptor: driving flow, generator, and the
/// uniform bound `a_star >= sup norm(X)` over the driving space.
#[derive(Clone, Debug, Serialize)]
pub struct LinearFlow {
    driving: Driving,
    generator: Generator,
    a_star: f64,
    dim: usize,
}

impl LinearFlow {
    pub fn new(driving: Driving, generator: Generator) -> Result<Self> {
        match driving {
            Driving::CircleRotation { speed } => {
                if !speed.is_finite() {
                    return Err(Error::InvalidParameter("rotation speed must be finite".into()));
                }
            }
            Driving::PeriodicOrbit { period } => {
                if !(period > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "orbit period must be positive, got {period}"
                    )));
                }
            }
        }
        let dim = match &generator {
            Generator::Constant(m) => m.dim(),
            Generator::TrigPolynomial { base, harmonics } => {
                let d = base.dim();
                for h in harmonics {
                    if h.cos_coeff.dim() != d || h.sin_coeff.dim() != d {
                        return Err(Error::DimensionMismatch {
                            left: d,
                            right: h.cos_coeff.dim().max(h.sin_coeff.dim()),
                        });
                    }
                }
                d
            }
        };
        let mut flow = LinearFlow {
            driving,
            generator,
            a_star: 0.0,
            dim,
        };
        let mut sup = 0.0f64;
        for i in 0..A_STAR_SAMPLES {
            let x = flow.generator_at_position(i as f64 / A_STAR_SAMPLES as f64);
            sup = sup.max(x.operator_norm(NormKind::Spectral2));
        }
        flow.a_star = sup * A_STAR_SAFETY;
        Ok(flow)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    pub fn driving(&self) -> &Driving {
        &self.driving
    }

    /// Period of the driving orbit, when one exists.
    pub fn orbit_period(&self) -> Option<f64> {
        match self.driving {
            Driving::CircleRotation { speed } => {
                if speed == 0.0 {
                    None
                } else {
                    Some(1.0 / speed.abs())
                }
            }
            Driving::PeriodicOrbit { period } => Some(period),
        }
    }

    /// Driving point after time `t`.
    pub fn advance(&self, w: f64, t: f64) -> f64 {
        match self.driving {
            Driving::CircleRotation { speed } => (w + speed * t).rem_euclid(1.0),
            Driving::PeriodicOrbit { period } => (w + t).rem_euclid(period),
        }
    }

    fn normalized_position(&self, w: f64) -> f64 {
        match self.driving {
            Driving::CircleRotation { .. } => w.rem_euclid(1.0),
            Driving::PeriodicOrbit { period } => (w.rem_euclid(period)) / period,
        }
    }

    fn generator_at_position(&self, theta: f64) -> Matrix {
        match &self.generator {
            Generator::Constant(m) => m.clone(),
            Generator::TrigPolynomial { base, harmonics } => {
                let mut x = base.clone();
                for h in harmonics {
                    let phase = std::f64::consts::TAU * h.frequency as f64 * theta;
                    x = x
                        .add_scaled(&h.cos_coeff, phase.cos())
                        .and_then(|x| x.add_scaled(&h.sin_coeff, phase.sin()))
                        .expect("dims checked at construction");
                }
                x
            }
        }
    }

    /// Generator evaluated at the driving point `w`.
    pub fn generator_at(&self, w: f64) -> Matrix {
        self.generator_at_position(self.normalized_position(w))
    }

    fn rk4_step(&self, w: f64, s: f64, h: f64, m: &Matrix, trace: &mut f64) -> Matrix {
        let x1 = self.generator_at(self.advance(w, s));
        let xm = self.generator_at(self.advance(w, s + 0.5 * h));
        let x4 = self.generator_at(self.advance(w, s + h));
        let k1 = x1.matmul(m).expect("dims");
        let k2 = xm
            .matmul(&m.add_scaled(&k1, 0.5 * h).expect("dims"))
            .expect("dims");
        let k3 = xm
            .matmul(&m.add_scaled(&k2, 0.5 * h).expect("dims"))
            .expect("dims");
        let k4 = x4
            .matmul(&m.add_scaled(&k3, h).expect("dims"))
            .expect("dims");
        // Simpson quadrature of the trace rides along for the volume check.
        *trace += h / 6.0 * (x1.trace() + 4.0 * xm.trace() + x4.trace());
        let mut out = m.add_scaled(&k1, h / 6.0).expect("dims");
        out = out.add_scaled(&k2, h / 3.0).expect("dims");
        out = out.add_scaled(&k3, h / 3.0).expect("dims");
        out.add_scaled(&k4, h / 6.0).expect("dims")
    }

    fn integrate(&self, w: f64, t: f64, step: f64) -> Result<(Matrix, f64)> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "integration step must be positive, got {step}"
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be nonnegative, got {t}"
            )));
        }
        let mut m = Matrix::identity(self.dim);
        let mut trace = 0.0f64;
        if t == 0.0 {
            return Ok((m, trace));
        }
        let full = (t / step).floor() as u64;
        for i in 0..full {
            m = self.rk4_step(w, i as f64 * step, step, &m, &mut trace);
        }
        let s = full as f64 * step;
        let rem = t - s;
        if rem > 0.0 {
            m = self.rk4_step(w, s, rem, &m, &mut trace);
        }
        Ok((m, trace))
    }

    /// Fundamental matrix solution at time `t` from driving point `w`,
    /// by classical fixed-step fourth-order integration (final partial step
    /// shortened).
    pub fn fundamental_matrix(&self, w: f64, t: f64, step: f64) -> Result<Matrix> {
        Ok(self.integrate(w, t, step)?.0)
    }

    /// Defect of the cocycle identity
    /// `X(t+s, w) = X(t, s.w) X(s, w)` in the spectral norm; vanishes up to
    /// integrator error.
    pub fn cocycle_residual(&self, w: f64, s: f64, t: f64, step: f64) -> Result<f64> {
        let full = self.fundamental_matrix(w, s + t, step)?;
        let first = self.fundamental_matrix(w, s, step)?;
        let second = self.fundamental_matrix(self.advance(w, s), t, step)?;
        let composed = second.matmul(&first)?;
        Ok(full.sub(&composed)?.operator_norm(NormKind::Spectral2))
    }

    /// Relative defect of the volume identity
    /// `det X(t,w) = exp(integral of trace X along the orbit)`,
    /// with the quadrature riding the same step grid as the integrator.
    pub fn liouville_residual(&self, w: f64, t: f64, step: f64) -> Result<f64> {
        let (m, trace_integral) = self.integrate(w, t, step)?;
        let det = m.determinant();
        let expected = trace_integral.exp();
        Ok((det - expected).abs() / expected.abs().max(UNDERFLOW))
    }

    /// Finite-horizon growth rate `xi_T(w) = (1/T) log norm(X(T, w))`.
    pub fn xi(&self, w: f64, t_horizon: f64, step: f64) -> Result<f64> {
        if !(t_horizon > 0.0) {
            return Err(Error::InvalidParameter("xi horizon must be positive".into()));
        }
        let m = self.fundamental_matrix(w, t_horizon, step)?;
        Ok(m.operator_norm(NormKind::Spectral2).max(UNDERFLOW).ln() / t_horizon)
    }

    /// Subdivision-averaged contraction test over one driving period:
    /// computes `(1/period) * sum_k log norm(X(t_k - t_{k-1}, t_{k-1}.w))`
    /// from base point w = 0, compares it to the threshold, and checks that
    /// the full-period spectral radius stays below the product of segment
    /// norms (submultiplicativity).
    pub fn quasi_contraction_test(
        &self,
        subdivision: &[f64],
        beta: f64,
        step: f64,
    ) -> Result<QuasiContractionReport> {
        let period = self.orbit_period().ok_or_else(|| {
            Error::InvalidParameter("driving flow has no periodic orbit".into())
        })?;
        if subdivision.len() < 2 {
            return Err(Error::BadSubdivision(
                "need at least the two endpoints".into(),
            ));
        }
        if subdivision[0].abs() > 1e-12 {
            return Err(Error::BadSubdivision("must start at 0".into()));
        }
        if subdivision.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadSubdivision("must be strictly increasing".into()));
        }
        let last = *subdivision.last().expect("nonempty");
        if (last - period).abs() > 1e-12 * period.max(1.0) {
            return Err(Error::BadSubdivision(format!(
                "must end at the orbit period {period}, got {last}"
            )));
        }
        // Snap the final point onto the period so endpoints are exact.
        let mut points = subdivision.to_vec();
        *points.last_mut().expect("nonempty") = period;

        let mut per_segment_log_norms = Vec::with_capacity(points.len() - 1);
        for pair in points.windows(2) {
            let start = self.advance(0.0, pair[0]);
            let m = self.fundamental_matrix(start, pair[1] - pair[0], step)?;
            per_segment_log_norms.push(m.operator_norm(NormKind::Spectral2).max(UNDERFLOW).ln());
        }
        let average = per_segment_log_norms.iter().sum::<f64>() / period;
        let full = self.fundamental_matrix(0.0, period, step)?;
        let full_period_log_rho_rate = full.spectral_radius().max(UNDERFLOW).ln() / period;
        Ok(QuasiContractionReport {
            period,
            subdivision: points,
            per_segment_log_norms,
            average,
            threshold_beta: beta,
            passes: average <= beta,
            full_period_log_rho_rate,
            submultiplicativity_ok: full_period_log_rho_rate <= average + 1e-8,
        })
    }

    /// Orbit average of `xi_T` over one driving period (the unique invariant
    /// measure of a periodic orbit is uniform in time), by the trapezoid
    /// rule on `samples` equally spaced points.
    pub fn ergodic_average(&self, t_horizon: f64, samples: usize, step: f64) -> Result<f64> {
        let period = self.orbit_period().ok_or_else(|| {
            Error::InvalidParameter("driving flow has no periodic orbit".into())
        })?;
        if samples < 2 {
            return Err(Error::InvalidParameter(
                "trapezoid rule needs at least 2 sample points".into(),
            ));
        }
        let h = period / (samples - 1) as f64;
        let mut integral = 0.0;
        let mut prev = self.xi(self.advance(0.0, 0.0), t_horizon, step)?;
        for i in 1..samples {
            let cur = self.xi(self.advance(0.0, i as f64 * h), t_horizon, step)?;
            integral += 0.5 * h * (prev + cur);
            prev = cur;
        }
        Ok(integral / period)
    }

    /// Least-squares fit of `log norm(X(t, w))` against `t` over a uniform
    /// time grid and all supplied sample points; returns the decay pair
    /// `(C, gamma)` with the bound shifted to dominate every observed point,
    /// or `None` when the fitted slope is nonnegative.
    pub fn uniform_decay_fit(
        &self,
        sample_points: &[f64],
        horizon: f64,
        step: f64,
    ) -> Result<Option<DecayFit>> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if sample_points.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one sample point".into(),
            ));
        }
        let mut ts = Vec::new();
        let mut ys = Vec::new();
        for &w in sample_points {
            for i in 0..=FIT_INTERVALS {
                let t = horizon * i as f64 / FIT_INTERVALS as f64;
                let m = self.fundamental_matrix(w, t, step)?;
                ts.push(t);
                ys.push(m.operator_norm(NormKind::Spectral2).max(UNDERFLOW).ln());
            }
        }
        let n = ts.len() as f64;
        let mean_t = ts.iter().sum::<f64>() / n;
        let mean_y = ys.iter().sum::<f64>() / n;
        let sxx: f64 = ts.iter().map(|t| (t - mean_t) * (t - mean_t)).sum();
        let sxy: f64 = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| (t - mean_t) * (y - mean_y))
            .sum();
        let slope = sxy / sxx;
        if slope >= 0.0 {
            return Ok(None);
        }
        let intercept = mean_y - slope * mean_t;
        let max_residual = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| y - (slope * t + intercept))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Some(DecayFit {
            c: (intercept + max_residual).exp(),
            gamma: slope.exp(),
            slope,
            intercept,
        }))
    }
}

/// Report of one quasi-contraction test.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiContractionReport {
    pub period: f64,
    pub subdivision: Vec<f64>,
    pub per_segment_log_norms: Vec<f64>,
    /// (1/period) * sum of segment log norms.
    pub average: f64,
    pub threshold_beta: f64,
    pub passes: bool,
    /// (1/period) * log rho of the full-period matrix.
    pub full_period_log_rho_rate: f64,
    /// Whether the full-period rate is below the average (+1e-8 slack);
    /// forced by submultiplicativity.
    pub submultiplicativity_ok: bool,
}

/// Fitted uniform decay bound `norm(X(t, w)) <= c * gamma^t` over the
/// observed data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    pub c: f64,
    pub gamma: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// The perturbation-budget constants of Liao's method, derived from the
/// perturbation radius rho and the generator bound a_star:
///
/// ```text
/// lambda  = rho / (4 exp(2 a_star))
/// lambda* = (lambda / 2) exp(-rho / 2)
/// Tbar    = (32 / (lambda rho)) log(32 / lambda*^2)
/// T       = max{ 16 a_star Tbar / rho,
///                2 lambda Tbar + (64 / rho) log(2 / lambda*),
///                Tbar + 2 }
/// ```
///
/// We fix delta = epsilon/2 as the admissible tube radius and
/// rho = min(delta, 1)/4.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LiaoConstants {
    pub epsilon: f64,
    pub delta: f64,
    pub a_star: f64,
    pub rho_pert: f64,
    pub lambda: f64,
    pub lambda_star: f64,
    pub t_bar: f64,
    pub big_t: f64,
}

fn derive_liao(rho: f64, a_star: f64) -> (f64, f64, f64, f64) {
    let lambda = rho / (4.0 * (2.0 * a_star).exp());
    let lambda_star = lambda / 2.0 * (-rho / 2.0).exp();
    let t_bar = 32.0 / (lambda * rho) * (32.0 / (lambda_star * lambda_star)).ln();
    let big_t = (16.0 * a_star * t_bar / rho)
        .max(2.0 * lambda * t_bar + 64.0 / rho * (2.0 / lambda_star).ln())
        .max(t_bar + 2.0);
    (lambda, lambda_star, t_bar, big_t)
}

/// Evaluates the constants for a perturbation radius `epsilon` and generator
/// bound `a_star`.
pub fn liao_constants(epsilon: f64, a_star: f64) -> Result<LiaoConstants> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(a_star >= 0.0) || !a_star.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "a_star must be finite and nonnegative, got {a_star}"
        )));
    }
    let delta = epsilon / 2.0;
    let rho_pert = delta.min(1.0) / 4.0;
    let (lambda, lambda_star, t_bar, big_t) = derive_liao(rho_pert, a_star);
    if !(lambda > 0.0 && lambda_star > 0.0 && t_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "constants degenerate at a_star = {a_star}: exp(2 a_star) exhausts double precision"
        )));
    }
    Ok(LiaoConstants {
        epsilon,
        delta,
        a_star,
        rho_pert,
        lambda,
        lambda_star,
        t_bar,
        big_t,
    })
}

impl LiaoConstants {
    /// Re-derives every dependent field from (rho_pert, a_star) and checks
    /// bit-exact agreement, plus the order relations lambda* < lambda/2 and
    /// T >= Tbar + 2.
    pub fn identities_hold(&self) -> bool {
        let (lambda, lambda_star, t_bar, big_t) = derive_liao(self.rho_pert, self.a_star);
        self.lambda == lambda
            && self.lambda_star == lambda_star
            && self.t_bar == t_bar
            && self.big_t == big_t
            && self.lambda_star < self.lambda / 2.0
            && self.big_t >= self.t_bar + 2.0
            && self.rho_pert == self.delta.min(1.0) / 4.0
            && self.delta == self.epsilon / 2.0
    }
}
