//! One function per subcommand: builds domain objects from the validated
//! config, runs the requested computations, and assembles results + notes +
//! numeric flags + an optional CSV trace.

use serde::Serialize;
use serde_json::Value;

use jsrbound::bounds::{self, MatrixFamily};
use jsrbound::flow::{self, Driving, Generator, Harmonic, LinearFlow};
use jsrbound::markov::{self, MarkovModel};
use jsrbound::matrix::{Matrix, NormKind};
use jsrbound::rng;
use jsrbound::rotation::{self, FinitenessGapCocycle, PeriodicDecayCocycle};

use crate::config::{
    GeneratorConfig, JsrConfig, MarkovConfig, OdeConfig, RotationConfig, RotationExample,
    DrivingConfig,
};

pub struct CommandOutput {
    pub results: Value,
    pub notes: Vec<String>,
    pub numeric_flags: Vec<String>,
    pub csv: Option<String>,
    pub seed: Option<u64>,
}

/// Configuration or input errors (exit code 2).
pub type CmdResult = Result<CommandOutput, String>;

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix, String> {
    Matrix::from_rows(rows).map_err(|e| e.to_string())
}

fn matrices_from_rows(all: &[Vec<Vec<f64>>]) -> Result<Vec<Matrix>, String> {
    all.iter().map(|r| matrix_from_rows(r)).collect()
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("result types always serialize")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

// ---------------------------------------------------------------- jsr ----

#[derive(Serialize)]
struct TraceRow {
    n: usize,
    lower: Option<f64>,
    upper: f64,
}

#[derive(Serialize)]
struct Bracket {
    lower_sup: Option<f64>,
    upper_inf: f64,
    gap: Option<f64>,
}

#[derive(Serialize)]
struct JsrResults {
    max_n: usize,
    norm: NormKind,
    dim: usize,
    kept_symbols: Vec<usize>,
    bracket: Bracket,
    trace: Vec<TraceRow>,
    complete_periodic_margin: f64,
    certificate: Option<bounds::DecayCertificate>,
    dilation: Option<bounds::DilationCheck>,
    robust_probe: Option<bounds::RobustProbeOutcome>,
    continuity: Option<Vec<bounds::ContinuityRow>>,
}

pub fn cmd_jsr(cfg: &JsrConfig, seed_override: Option<u64>, oracle_mode: bool) -> CmdResult {
    let matrices = matrices_from_rows(&cfg.matrices)?;
    let constraint =
        jsrbound::Constraint::from_rows(&cfg.constraint).map_err(|e| e.to_string())?;
    let family = MatrixFamily::new(matrices, constraint).map_err(|e| e.to_string())?;

    let mut notes = Vec::new();
    let numeric_flags = Vec::new();
    if family.k() < family.original_k() {
        notes.push(format!(
            "constraint trimming kept symbols {:?} of 1..={}",
            family.kept(),
            family.original_k()
        ));
    }
    notes.push(format!(
        "bracket and margin are finite-horizon certificates at max_n = {}; the limit value is only bracketed, never claimed",
        cfg.max_n
    ));

    let trace = if oracle_mode {
        bounds::estimate_jsr_unpruned(&family, cfg.max_n, cfg.norm)
    } else {
        bounds::estimate_jsr(&family, cfg.max_n, cfg.norm)
    };
    let margin = bounds::complete_periodic_stability_margin(&family, cfg.max_n);
    let certificate = if cfg.certificate {
        bounds::stability_certificate(&family, cfg.max_n, cfg.norm)
    } else {
        None
    };
    let dilation = cfg
        .dilation_alpha
        .map(|alpha| bounds::dilation_check(&family, alpha, cfg.max_n))
        .transpose()
        .map_err(|e| e.to_string())?;

    let seed = seed_override.or(cfg.seed);
    let robust_probe = match &cfg.robust {
        Some(r) => {
            let seed = seed.ok_or("robust probe needs a seed")?;
            let out = bounds::robust_periodic_stability_probe(
                &family,
                r.epsilon,
                r.max_n.unwrap_or(cfg.max_n),
                r.samples,
                seed,
            )
            .map_err(|e| e.to_string())?;
            notes.push(format!("robust probe verdict is {}", out.note));
            Some(out)
        }
        None => None,
    };

    let continuity = match &cfg.continuity {
        Some(c) => {
            if c.direction.len() != family.original_k() {
                return Err(format!(
                    "continuity direction has {} matrices, family has {}",
                    c.direction.len(),
                    family.original_k()
                ));
            }
            let all = matrices_from_rows(&c.direction)?;
            let direction: Vec<Matrix> = family
                .kept()
                .iter()
                .map(|&s| all[s - 1].clone())
                .collect();
            Some(
                bounds::continuity_probe(
                    &family,
                    &direction,
                    &c.deltas,
                    c.max_n.unwrap_or(cfg.max_n),
                    cfg.norm,
                )
                .map_err(|e| e.to_string())?,
            )
        }
        None => None,
    };

    let mut csv = String::from("n,lower,upper\n");
    for ((n, lo), up) in trace
        .n_values
        .iter()
        .zip(&trace.lower)
        .zip(&trace.upper)
    {
        csv.push_str(&format!("{n},{},{up}\n", fmt_opt(*lo)));
    }

    let results = JsrResults {
        max_n: cfg.max_n,
        norm: cfg.norm,
        dim: family.dim(),
        kept_symbols: family.kept().to_vec(),
        bracket: Bracket {
            lower_sup: trace.lower_sup,
            upper_inf: trace.upper_inf,
            gap: trace.gap(),
        },
        trace: trace
            .n_values
            .iter()
            .zip(&trace.lower)
            .zip(&trace.upper)
            .map(|((n, lo), up)| TraceRow {
                n: *n,
                lower: *lo,
                upper: *up,
            })
            .collect(),
        complete_periodic_margin: margin,
        certificate,
        dilation,
        robust_probe,
        continuity,
    };

    Ok(CommandOutput {
        results: to_value(&results),
        notes,
        numeric_flags,
        csv: Some(csv),
        seed,
    })
}

// ------------------------------------------------------------- markov ----

#[derive(Serialize)]
struct MarkovResults {
    stationary: Vec<f64>,
    stationary_unique: bool,
    initial_is_stationary: bool,
    kept_symbols: Vec<usize>,
    mc: Option<markov::McEstimate>,
    spectrum: Option<markov::LyapunovSpectrum>,
    periodic: Option<markov::PeriodicApproximation>,
    exterior: Option<ExteriorResults>,
}

#[derive(Serialize)]
struct ExteriorResults {
    order: usize,
    lifted_dim: usize,
    mc: markov::McEstimate,
}

pub fn cmd_markov(cfg: &MarkovConfig, seed_override: Option<u64>) -> CmdResult {
    let seed = seed_override.unwrap_or(cfg.seed);
    let model = match &cfg.initial {
        Some(init) => MarkovModel::with_initial(&cfg.transition, init.clone()),
        None => MarkovModel::new(&cfg.transition),
    }
    .map_err(|e| e.to_string())?;
    let matrices = matrices_from_rows(&cfg.matrices)?;
    let family =
        MatrixFamily::new(matrices, model.constraint()).map_err(|e| e.to_string())?;

    let mut notes = Vec::new();
    let mut numeric_flags = Vec::new();
    if !model.stationary_unique {
        notes.push(
            "stationary vector is not unique (reducible chain); reporting the one reached from the uniform start".into(),
        );
    }
    if !model.stationary_converged {
        numeric_flags.push("stationary power iteration hit its iteration cap".into());
    }
    if !model.initial_is_stationary {
        notes.push("sampling starts from the supplied initial distribution, which is not stationary".into());
    }

    let mc = match &cfg.mc {
        Some(c) => {
            let est = markov::max_lyapunov_mc(&family, &model, c.length, c.trials, seed)
                .map_err(|e| e.to_string())?;
            if est.degenerate {
                numeric_flags.push("Monte-Carlo trial hit an exactly zero product".into());
            }
            Some(est)
        }
        None => None,
    };
    let spectrum = match &cfg.spectrum {
        Some(c) => {
            let s = markov::lyapunov_spectrum_qr(&family, &model, c.length, rng::sub_seed(seed, 1))
                .map_err(|e| e.to_string())?;
            if s.truncated {
                numeric_flags.push("spectrum truncated: singular products".into());
            }
            Some(s)
        }
        None => None,
    };
    let periodic = match &cfg.periodic {
        Some(c) => {
            let p = markov::periodic_approximation(
                &family,
                &model,
                rng::sub_seed(seed, 2),
                c.window,
                c.max_length,
            )
            .map_err(|e| e.to_string())?;
            if p.returns.is_empty() {
                numeric_flags.push(format!(
                    "no window-{} recurrences found within {} steps",
                    c.window, c.max_length
                ));
            }
            Some(p)
        }
        None => None,
    };
    let exterior = match cfg.exterior_order {
        Some(l) => {
            let lifted = family.exterior_lift(l).map_err(|e| e.to_string())?;
            let c = cfg
                .mc
                .as_ref()
                .ok_or("exterior_order needs the mc block for the lifted exponent")?;
            let est =
                markov::max_lyapunov_mc(&lifted, &model, c.length, c.trials, rng::sub_seed(seed, 3))
                    .map_err(|e| e.to_string())?;
            Some(ExteriorResults {
                order: l,
                lifted_dim: lifted.dim(),
                mc: est,
            })
        }
        None => None,
    };

    let results = MarkovResults {
        stationary: model.stationary().to_vec(),
        stationary_unique: model.stationary_unique,
        initial_is_stationary: model.initial_is_stationary,
        kept_symbols: family.kept().to_vec(),
        mc,
        spectrum,
        periodic,
        exterior,
    };
    Ok(CommandOutput {
        results: to_value(&results),
        notes,
        numeric_flags,
        csv: None,
        seed: Some(seed),
    })
}

// ----------------------------------------------------------- rotation ----

#[derive(Serialize)]
struct ClosingRow {
    p: u64,
    q: u64,
    max_deviation: f64,
    bound: f64,
    passed: bool,
}

#[derive(Serialize)]
struct RotationResults {
    omega: f64,
    side: rotation::Side,
    convergents: Vec<rotation::Convergent>,
    closing: Vec<ClosingRow>,
    finiteness_gap: Option<rotation::FinitenessReport>,
    periodic_decay: Option<rotation::PeriodicDecayReport>,
}

pub fn cmd_rotation(cfg: &RotationConfig) -> CmdResult {
    let system =
        rotation::convergents(&cfg.cf, cfg.count, cfg.side).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut numeric_flags = Vec::new();

    let mut closing = Vec::new();
    for idx in 0..system.convergents().len() {
        let mut worst: Option<ClosingRow> = None;
        for a in 0..cfg.closing_angles.max(1) {
            let z0 = a as f64 / cfg.closing_angles.max(1) as f64;
            let check = system
                .closing_check(idx, z0, cfg.closing_tolerance_factor)
                .map_err(|e| e.to_string())?;
            let replace = worst
                .as_ref()
                .map_or(true, |w| check.deviation > w.max_deviation);
            if replace {
                worst = Some(ClosingRow {
                    p: check.p,
                    q: check.q,
                    max_deviation: check.deviation,
                    bound: check.bound,
                    passed: check.passed,
                });
            }
        }
        let row = worst.expect("at least one angle");
        if !row.passed {
            numeric_flags.push(format!(
                "closing deviation {} at q = {} exceeds bound {}",
                row.max_deviation, row.q, row.bound
            ));
        }
        closing.push(row);
    }

    let mut csv = String::from("q,value\n");
    let (finiteness_gap, periodic_decay) = match cfg.example {
        RotationExample::FinitenessGap {
            dim,
            n_max,
            fiber_samples,
        } => {
            let cocycle =
                FinitenessGapCocycle::new(system.clone(), dim).map_err(|e| e.to_string())?;
            let report = cocycle.finiteness_report(n_max, fiber_samples);
            notes.push(format!(
                "periodic fiber values stay below the upper envelope at every probed index (gap {:.3e}); the probed index range is q <= {}",
                report.gap,
                system.convergents().last().map(|c| c.q).unwrap_or(0)
            ));
            for v in &report.periodic {
                csv.push_str(&format!("{},{}\n", v.q, v.closed_form));
            }
            (Some(report), None)
        }
        RotationExample::PeriodicDecay { gamma, horizon } => {
            let cocycle =
                PeriodicDecayCocycle::new(system.clone(), gamma).map_err(|e| e.to_string())?;
            let report = cocycle.report(horizon);
            notes.push(report.verdict.clone());
            for f in &report.fiber_products {
                csv.push_str(&format!("{},{}\n", f.q, f.product));
            }
            (None, Some(report))
        }
    };

    let results = RotationResults {
        omega: system.omega(),
        side: system.side(),
        convergents: system.convergents().to_vec(),
        closing,
        finiteness_gap,
        periodic_decay,
    };
    Ok(CommandOutput {
        results: to_value(&results),
        notes,
        numeric_flags,
        csv: Some(csv),
        seed: None,
    })
}

// ---------------------------------------------------------------- ode ----

#[derive(Serialize)]
struct OdeChecks {
    w: f64,
    s: f64,
    t: f64,
    /// Relative distance to the matrix exponential; only defined for
    /// constant generators.
    expm_relative_error: Option<f64>,
    cocycle_residual: f64,
    liouville_residual: f64,
}

#[derive(Serialize)]
struct OdeResults {
    dim: usize,
    a_star: f64,
    orbit_period: Option<f64>,
    step: f64,
    checks: Option<OdeChecks>,
    quasi_contraction: Option<flow::QuasiContractionReport>,
    liao: Option<flow::LiaoConstants>,
    xi: Option<f64>,
    ergodic_average: Option<f64>,
    decay_fit: Option<flow::DecayFit>,
}

pub fn cmd_ode(cfg: &OdeConfig) -> CmdResult {
    let driving = match cfg.driving {
        DrivingConfig::CircleRotation { speed } => Driving::CircleRotation { speed },
        DrivingConfig::PeriodicOrbit { period } => Driving::PeriodicOrbit { period },
    };
    let (generator, constant_matrix) = match &cfg.generator {
        GeneratorConfig::Constant { matrix } => {
            let m = matrix_from_rows(matrix)?;
            (Generator::Constant(m.clone()), Some(m))
        }
        GeneratorConfig::Trig { base, harmonics } => {
            let base = matrix_from_rows(base)?;
            let harmonics = harmonics
                .iter()
                .map(|h| {
                    Ok(Harmonic {
                        frequency: h.frequency,
                        cos_coeff: matrix_from_rows(&h.cos)?,
                        sin_coeff: matrix_from_rows(&h.sin)?,
                    })
                })
                .collect::<Result<Vec<_>, String>>()?;
            (Generator::TrigPolynomial { base, harmonics }, None)
        }
    };
    let flow = LinearFlow::new(driving, generator).map_err(|e| e.to_string())?;

    let mut notes = Vec::new();
    let mut numeric_flags = Vec::new();

    let checks = match cfg.checks {
        Some(c) => {
            let expm_relative_error = match &constant_matrix {
                Some(x) => {
                    let exact = x
                        .scale(c.t)
                        .matrix_exponential()
                        .map_err(|e| e.to_string())?;
                    let numeric = flow
                        .fundamental_matrix(c.w, c.t, cfg.step)
                        .map_err(|e| e.to_string())?;
                    Some(
                        numeric
                            .sub(&exact)
                            .map_err(|e| e.to_string())?
                            .operator_norm(NormKind::Spectral2)
                            / exact.operator_norm(NormKind::Spectral2),
                    )
                }
                None => {
                    notes.push(
                        "exponential comparison skipped: generator is not constant".into(),
                    );
                    None
                }
            };
            let cocycle_residual = flow
                .cocycle_residual(c.w, c.s, c.t, cfg.step)
                .map_err(|e| e.to_string())?;
            let liouville_residual = flow
                .liouville_residual(c.w, c.t, cfg.step)
                .map_err(|e| e.to_string())?;
            Some(OdeChecks {
                w: c.w,
                s: c.s,
                t: c.t,
                expm_relative_error,
                cocycle_residual,
                liouville_residual,
            })
        }
        None => None,
    };

    let quasi_contraction = match &cfg.quasi_contraction {
        Some(qc) => {
            let report = flow
                .quasi_contraction_test(&qc.subdivision, qc.beta, cfg.step)
                .map_err(|e| e.to_string())?;
            if !report.submultiplicativity_ok {
                numeric_flags.push(
                    "full-period spectral rate exceeded the subdivision average".into(),
                );
            }
            Some(report)
        }
        None => None,
    };

    let liao = match cfg.liao_epsilon {
        Some(eps) => {
            let k = flow::liao_constants(eps, flow.a_star()).map_err(|e| e.to_string())?;
            if !k.identities_hold() {
                numeric_flags.push("perturbation-constant identities failed to re-evaluate".into());
            }
            notes.push(
                "perturbation constants use the convention delta = epsilon / 2".into(),
            );
            Some(k)
        }
        None => None,
    };

    let xi = cfg
        .xi
        .map(|x| flow.xi(x.w, x.t, cfg.step))
        .transpose()
        .map_err(|e| e.to_string())?;
    let ergodic_average = cfg
        .ergodic
        .map(|e| flow.ergodic_average(e.t, e.samples, cfg.step))
        .transpose()
        .map_err(|e| e.to_string())?;
    let decay_fit = match &cfg.decay_fit {
        Some(d) => {
            let fit = flow
                .uniform_decay_fit(&d.points, d.horizon, cfg.step)
                .map_err(|e| e.to_string())?;
            if fit.is_none() {
                notes.push("no uniform decay fit: the fitted slope is nonnegative".into());
            }
            fit
        }
        None => None,
    };

    let csv = match cfg.series {
        Some(series) => {
            let mut out = String::from("t,log_norm\n");
            let n = series.points.max(2);
            for i in 0..n {
                let t = series.horizon * i as f64 / (n - 1) as f64;
                let m = flow
                    .fundamental_matrix(series.w, t, cfg.step)
                    .map_err(|e| e.to_string())?;
                out.push_str(&format!(
                    "{t},{}\n",
                    m.operator_norm(NormKind::Spectral2).max(1e-300).ln()
                ));
            }
            Some(out)
        }
        None => None,
    };

    let results = OdeResults {
        dim: flow.dim(),
        a_star: flow.a_star(),
        orbit_period: flow.orbit_period(),
        step: cfg.step,
        checks,
        quasi_contraction,
        liao,
        xi,
        ergodic_average,
        decay_fit,
    };
    Ok(CommandOutput {
        results: to_value(&results),
        notes,
        numeric_flags,
        csv,
        seed: None,
    })
}
