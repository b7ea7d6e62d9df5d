//! Irrational-rotation driving data and the two cocycle constructions built
//! on it: a scaled-shear cocycle whose joint spectral radius is approached
//! but never attained by periodic orbits (spectral-finiteness failure), and
//! a scalar cocycle that contracts over every rational fiber yet stays flat
//! on the limit fiber (periodic stability without uniform stability).
//!
//! The rotation number is supplied as continued-fraction coefficients so
//! convergents are exact integer pairs; the floating evaluation of the
//! number is used only for distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NormKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Keep convergents p/q < omega (even continued-fraction indices).
    Below,
    /// Keep convergents p/q > omega (odd indices).
    Above,
    /// Keep both.
    All,
}

/// A reduced rational approximant p/q with |omega - p/q| < 1/q^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub p: u64,
    pub q: u64,
}

impl Convergent {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Rotation number omega in (0,1) with a stored tail of its convergents.
#[derive(Clone, Debug, Serialize)]
pub struct RotationSystem {
    cf: Vec<u64>,
    omega: f64,
    side: Side,
    convergents: Vec<Convergent>,
}

/// Builds a rotation system from continued-fraction coefficients
/// `[0; a1, a2, ...]`, keeping `count` convergents on the requested side.
/// Convergents with p < 1 or p >= q fall outside (0,1) and are skipped.
pub fn convergents(cf: &[u64], count: usize, side: Side) -> Result<RotationSystem> {
    if cf.len() < 2 || cf[0] != 0 {
        return Err(Error::InvalidParameter(
            "continued fraction must start with 0 and have at least one partial quotient".into(),
        ));
    }
    if cf[1..].iter().any(|&a| a == 0) {
        return Err(Error::InvalidParameter(
            "partial quotients must be positive".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    // Backward evaluation of the full coefficient list; numerically the most
    // accurate way to place omega.
    let mut omega = 0.0f64;
    for &a in cf[1..].iter().rev() {
        omega = 1.0 / (a as f64 + omega);
    }

    let mut kept = Vec::with_capacity(count);
    let (mut p_prev2, mut p_prev) = (1u64, 0u64); // h_{-1}, h_0
    let (mut q_prev2, mut q_prev) = (0u64, 1u64); // k_{-1}, k_0
    for (i, &a) in cf.iter().enumerate().skip(1) {
        let p = a
            .checked_mul(p_prev)
            .and_then(|x| x.checked_add(p_prev2))
            .ok_or(Error::ConvergentOverflow)?;
        let q = a
            .checked_mul(q_prev)
            .and_then(|x| x.checked_add(q_prev2))
            .ok_or(Error::ConvergentOverflow)?;
        p_prev2 = p_prev;
        p_prev = p;
        q_prev2 = q_prev;
        q_prev = q;
        if p < 1 || p >= q {
            continue;
        }
        let is_below = i % 2 == 0; // even-index convergents sit below omega
        let matches = match side {
            Side::Below => is_below,
            Side::Above => !is_below,
            Side::All => true,
        };
        if matches {
            debug_assert_eq!(gcd(p, q), 1, "convergents are reduced");
            debug_assert!(
                (omega - p as f64 / q as f64).abs() < 1.0 / (q as f64 * q as f64),
                "Dirichlet inequality must hold for {p}/{q}"
            );
            kept.push(Convergent { p, q });
            if kept.len() == count {
                return Ok(RotationSystem {
                    cf: cf.to_vec(),
                    omega,
                    side,
                    convergents: kept,
                });
            }
        }
    }
    Err(Error::CoefficientsExhausted {
        produced: kept.len(),
        requested: count,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Distance on the torus R/Z between two angles given as fractional parts.
pub fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Result of one orbit-shadowing check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClosingCheck {
    pub p: u64,
    pub q: u64,
    /// Max torus distance over one rational period between the irrational
    /// orbit and the rational orbit from the same start.
    pub deviation: f64,
    /// The asserted bound, `tolerance_factor / q`.
    pub bound: f64,
    pub passed: bool,
}

impl RotationSystem {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents
    }

    pub fn cf(&self) -> &[u64] {
        &self.cf
    }

    /// Compares the rotation orbit of omega with the orbit of p_n/q_n from
    /// the same initial angle over one rational period; the deviation is
    /// forced under 1/q_n by the Dirichlet inequality (the orbits drift by
    /// at most (q_n - 1) |omega - p_n/q_n| < 1/q_n).
    pub fn closing_check(
        &self,
        index: usize,
        z0: f64,
        tolerance_factor: f64,
    ) -> Result<ClosingCheck> {
        let conv = *self
            .convergents
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("no convergent at index {index}")))?;
        let rational = conv.p as f64 / conv.q as f64;
        let mut a = z0.rem_euclid(1.0);
        let mut b = a;
        let mut deviation = 0.0f64;
        for _ in 0..conv.q {
            deviation = deviation.max(torus_distance(a, b));
            a = (a + self.omega).rem_euclid(1.0);
            b = (b + rational).rem_euclid(1.0);
        }
        let bound = tolerance_factor / conv.q as f64;
        Ok(ClosingCheck {
            p: conv.p,
            q: conv.q,
            deviation,
            bound,
            passed: deviation < bound,
        })
    }
}

/// Value of the cocycle over one rational fiber: the q-th root of the
/// spectral radius of the q-step product, in closed form and re-derived
/// numerically from the actual matrix product.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeriodicFiberValue {
    pub p: u64,
    pub q: u64,
    pub closed_form: f64,
    pub numeric: f64,
}

/// The cocycle `(y / omega) * S` over the compact space of rational fibers
/// accumulating at the omega fiber, with `S` the unit upper-triangular
/// all-ones shear. Its joint spectral radius is 1 (attained in the limit on
/// the omega fiber), while every rational fiber contributes the strictly
/// smaller value p/(q omega): the supremum is never attained periodically.
#[derive(Clone, Debug, Serialize)]
pub struct FinitenessGapCocycle {
    system: RotationSystem,
    dim: usize,
    shear: Matrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperRow {
    pub n: usize,
    /// max over sampled fibers y of (y/omega) * norm(S^n)^(1/n); the omega
    /// fiber dominates, so this equals norm(S^n)^(1/n) >= 1.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberSnapshot {
    pub y: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FinitenessReport {
    pub periodic: Vec<PeriodicFiberValue>,
    pub upper: Vec<UpperRow>,
    /// Per-fiber upper value at the deepest probed n; increases toward the
    /// omega fiber.
    pub fiber_snapshot: Vec<FiberSnapshot>,
    pub sup_periodic: f64,
    pub inf_upper: f64,
    pub gap: f64,
    /// Whether any periodic value reached the upper envelope (within 1e-6);
    /// the construction keeps this false at every finite horizon.
    pub attained: bool,
}

impl FinitenessGapCocycle {
    /// Requires below-side convergents so every periodic fiber value is < 1.
    pub fn new(system: RotationSystem, dim: usize) -> Result<Self> {
        if system.side() != Side::Below {
            return Err(Error::InvalidParameter(
                "shear cocycle needs below-side convergents (rational fibers under omega)".into(),
            ));
        }
        if dim < 1 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let shear = Matrix::from_fn(dim, |i, j| if j >= i { 1.0 } else { 0.0 });
        Ok(FinitenessGapCocycle { system, dim, shear })
    }

    pub fn system(&self) -> &RotationSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Over the fiber p/q the step matrix is constant, so the q-step product
    /// is ((p/q)/omega)^q S^q; since rho(S) = 1 the q-th root of its
    /// spectral radius is exactly p/(q omega).
    pub fn periodic_value(&self, index: usize) -> Result<PeriodicFiberValue> {
        let conv = *self
            .system
            .convergents()
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("no convergent at index {index}")))?;
        let omega = self.system.omega();
        let closed_form = conv.p as f64 / (conv.q as f64 * omega);
        let step = self.shear.scale(conv.value() / omega);
        let mut m = Matrix::identity(self.dim);
        let mut log_scale = 0.0f64;
        for _ in 0..conv.q {
            m = step.matmul(&m).expect("equal dims");
            let norm = m.operator_norm(NormKind::MaxRowSum);
            log_scale += norm.ln();
            m = m.scale(1.0 / norm);
        }
        let numeric = ((log_scale + m.spectral_radius().ln()) / conv.q as f64).exp();
        Ok(PeriodicFiberValue {
            p: conv.p,
            q: conv.q,
            closed_form,
            numeric,
        })
    }

    /// `norm(S^n)^(1/n)` for n = 1..=n_max under the spectral norm; this is
    /// the n-step upper envelope contributed by the omega fiber, always >= 1
    /// and decreasing toward rho(S) = 1.
    pub fn upper_estimates(&self, n_max: usize) -> Vec<UpperRow> {
        let mut rows = Vec::with_capacity(n_max);
        let mut m = Matrix::identity(self.dim);
        let mut log_scale = 0.0f64;
        for n in 1..=n_max {
            m = self.shear.matmul(&m).expect("equal dims");
            let norm = m.operator_norm(NormKind::MaxRowSum);
            log_scale += norm.ln();
            m = m.scale(1.0 / norm);
            let log_spectral = log_scale + m.operator_norm(NormKind::Spectral2).ln();
            rows.push(UpperRow {
                n,
                value: (log_spectral / n as f64).exp(),
            });
        }
        rows
    }

    pub fn finiteness_report(&self, n_max: usize, fiber_samples: usize) -> FinitenessReport {
        let periodic: Vec<PeriodicFiberValue> = (0..self.system.convergents().len())
            .map(|i| self.periodic_value(i).expect("index in range"))
            .collect();
        let upper = self.upper_estimates(n_max);
        let last = upper.last().expect("n_max >= 1");
        let omega = self.system.omega();
        let mut fiber_snapshot: Vec<FiberSnapshot> = self
            .system
            .convergents()
            .iter()
            .take(fiber_samples)
            .map(|c| FiberSnapshot {
                y: c.value(),
                value: (c.value() / omega) * last.value,
            })
            .collect();
        fiber_snapshot.push(FiberSnapshot {
            y: omega,
            value: last.value,
        });
        let sup_periodic = periodic
            .iter()
            .map(|v| v.closed_form)
            .fold(f64::NEG_INFINITY, f64::max);
        let inf_upper = upper.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
        FinitenessReport {
            attained: periodic.iter().any(|v| v.closed_form >= inf_upper - 1e-6),
            gap: inf_upper - sup_periodic,
            sup_periodic,
            inf_upper,
            periodic,
            upper,
            fiber_snapshot,
        }
    }
}

/// The scalar cocycle equal to gamma^(1/q) on the fiber p/q and to 1 on the
/// omega fiber: every rational fiber contracts by exactly gamma per period,
/// yet the omega fiber carries no decay at all.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicDecayCocycle {
    system: RotationSystem,
    gamma: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FiberProduct {
    pub p: u64,
    pub q: u64,
    /// Spectral radius of the q-step product over the fiber; equals gamma
    /// up to one rounding of exp(q log(gamma)/q).
    pub product: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicDecayReport {
    pub gamma: f64,
    pub fiber_products: Vec<FiberProduct>,
    /// Max fiber product = the complete-periodic-stability margin over the
    /// probed orbits.
    pub periodic_margin: f64,
    /// log norm of the n-step product along the omega fiber, n = 1..horizon;
    /// identically zero, so the Lyapunov exponent there is 0.
    pub omega_fiber_log_norms: Vec<f64>,
    pub omega_lyapunov: f64,
    pub verdict: String,
}

impl PeriodicDecayCocycle {
    pub fn new(system: RotationSystem, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0,1), got {gamma}"
            )));
        }
        Ok(PeriodicDecayCocycle { system, gamma })
    }

    pub fn system(&self) -> &RotationSystem {
        &self.system
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn report(&self, omega_horizon: usize) -> PeriodicDecayReport {
        let fiber_products: Vec<FiberProduct> = self
            .system
            .convergents()
            .iter()
            .map(|c| {
                let qf = c.q as f64;
                FiberProduct {
                    p: c.p,
                    q: c.q,
                    product: (qf * self.gamma.ln() / qf).exp(),
                }
            })
            .collect();
        let periodic_margin = fiber_products
            .iter()
            .map(|f| f.product)
            .fold(f64::NEG_INFINITY, f64::max);
        // The omega fiber multiplies 1x1 identity steps; take the norms
        // literally rather than asserting them.
        let one = Matrix::new(1, vec![1.0]).expect("valid");
        let mut m = Matrix::identity(1);
        let mut omega_fiber_log_norms = Vec::with_capacity(omega_horizon);
        for _ in 0..omega_horizon {
            m = one.matmul(&m).expect("equal dims");
            omega_fiber_log_norms.push(m.operator_norm(NormKind::MaxRowSum).ln());
        }
        let omega_lyapunov = omega_fiber_log_norms
            .last()
            .map(|l| l / omega_horizon as f64)
            .unwrap_or(0.0);
        let flat = omega_fiber_log_norms.iter().all(|&l| l == 0.0);
        let verdict = if periodic_margin < 1.0 && flat {
            "completely periodically stable on probed orbits, not uniformly stable".to_string()
        } else if periodic_margin >= 1.0 {
            "periodic instability witnessed".to_string()
        } else {
            "uniform decay not refuted on probed horizon".to_string()
        };
        PeriodicDecayReport {
            gamma: self.gamma,
            fiber_products,
            periodic_margin,
            omega_fiber_log_norms,
            omega_lyapunov,
            verdict,
        }
    }
}
