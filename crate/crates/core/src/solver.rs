//! Damped Newton-Krylov solver for the reduced equation, driven along the
//! continuity family `AB - D² = e^(tF + c_t)`, `t ∈ [0, 1]`.

use std::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Deriv, TorusField};
use crate::krylov::{gmres, GmresSettings};
use crate::reduction::{
    assemble_omega_tilde, diagnostics, is_admissible, reduced_metric, residual, residual_from_metric,
    DensityData, Diagnostics, Potential, DEFAULT_ADMISSIBILITY_DELTA,
};

/// Smallest accepted line-search step, `2^-30`.
pub const MIN_STEP_LENGTH: f64 = 1.0 / (1u64 << 30) as f64;
/// Required relative reduction of the linearized residual.
pub const LINEAR_REL_TOL: f64 = 1e-10;
const GMRES_RESTART: usize = 40;
const GMRES_MAX_ITERS: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub grid_n: usize,
    /// Sup-norm residual target.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub armijo_c: f64,
    pub admissibility_delta: f64,
    pub t_step_initial: f64,
    pub t_step_min: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_n: 128,
            newton_tol: 1e-11,
            max_newton_iters: 50,
            armijo_c: 1e-4,
            admissibility_delta: DEFAULT_ADMISSIBILITY_DELTA,
            t_step_initial: 0.25,
            t_step_min: 1e-4,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if !(self.t_step_min > 0.0 && self.t_step_min <= self.t_step_initial && self.t_step_initial <= 1.0) {
            return bad("need 0 < t_step_min <= t_step_initial <= 1");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.admissibility_delta > 0.0) {
            return bad("admissibility_delta must be positive");
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be at least 1");
        }
        Ok(())
    }
}

/// Per-iteration record of [`newton_step`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step_length: f64,
    pub linear_iterations: usize,
    pub linear_reduction: f64,
    pub residual_before: f64,
    pub residual_after: f64,
    /// Mean of the right-hand side removed before the linear solve.
    pub rhs_mean_defect: f64,
    /// Largest mean removed from a linearized-operator output.
    pub operator_mean_defect: f64,
    pub min_nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDiagnostics {
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub steps: Vec<StepDiagnostics>,
    pub summary: Diagnostics,
}

/// Converged solution at one value of the continuity parameter.
#[derive(Clone, Debug)]
pub struct ContinuityState {
    pub t: f64,
    pub phi: Potential,
    pub c_t: f64,
    /// Continuation step that reached this `t` (0 for a direct solve).
    pub t_step: f64,
    pub diagnostics: StateDiagnostics,
}

impl ContinuityState {
    pub fn density(&self, f: &TorusField) -> DensityData {
        DensityData::new(f.scale(self.t), self.c_t)
    }
}

/// `c_t = -log ∫ e^(tF)`.
pub fn normalize_ct(f: &TorusField, t: f64) -> f64 {
    -f.map(|v| (t * v).exp()).integrate().ln()
}

/// Linearized Monge-Ampère operator at `m`: `δ ↦ B δ_xx + A δ_yy - 2D δ_xy`.
fn linearized(
    m: &crate::reduction::ReducedMetric,
    delta: &TorusField,
    defect: &Cell<f64>,
) -> TorusField {
    let s = delta.spectrum();
    let dxx = s.derivative(Deriv::XX);
    let dyy = s.derivative(Deriv::YY);
    let dxy = s.derivative(Deriv::XY);
    let values: Vec<f64> = (0..delta.grid().len())
        .map(|k| {
            m.b.values()[k] * dxx.values()[k] + m.a.values()[k] * dyy.values()[k]
                - 2.0 * m.d.values()[k] * dxy.values()[k]
        })
        .collect();
    let out = TorusField::from_values(delta.grid(), values).expect("finite operator output");
    let mean = out.integrate();
    defect.set(defect.get().max(mean.abs()));
    out.add_scalar(-mean)
}

/// One damped Newton update of `phi` toward `AB - D² = e^(F + c)`.
pub fn newton_step(
    phi: &Potential,
    d: &DensityData,
    cfg: &SolverConfig,
) -> Result<(Potential, StepDiagnostics)> {
    let m = reduced_metric(phi);
    if !is_admissible(&m, 0.0) {
        return Err(Error::DegenerateMetric { min_nu: m.nu.min() });
    }
    let r = residual_from_metric(&m, d);
    let r_sup = r.sup_abs();
    let rhs = -&r;
    let rhs_mean = rhs.integrate();
    let rhs = rhs.add_scalar(-rhs_mean);

    let mut diag = StepDiagnostics {
        residual_before: r_sup,
        residual_after: r_sup,
        rhs_mean_defect: rhs_mean,
        min_nu: m.nu.min(),
        ..Default::default()
    };
    if rhs.sup_abs() == 0.0 {
        return Ok((phi.clone(), diag));
    }

    let defect = Cell::new(0.0);
    let solve = gmres(
        |v| linearized(&m, v, &defect),
        |v| v.zero_mean().invert_laplacian(),
        &rhs,
        &GmresSettings {
            rel_tol: LINEAR_REL_TOL,
            restart: GMRES_RESTART,
            max_iters: GMRES_MAX_ITERS,
        },
    )?;
    diag.linear_iterations = solve.iterations;
    diag.linear_reduction = solve.reduction;
    diag.operator_mean_defect = defect.get();
    let delta = solve.solution.zero_mean();

    let mut s = 1.0;
    loop {
        let candidate = phi.updated(s, &delta);
        let cm = reduced_metric(&candidate);
        if is_admissible(&cm, cfg.admissibility_delta) {
            let r_new = residual_from_metric(&cm, d).sup_abs();
            if r_new <= (1.0 - cfg.armijo_c * s) * r_sup {
                diag.step_length = s;
                diag.residual_after = r_new;
                diag.min_nu = cm.nu.min();
                return Ok((candidate, diag));
            }
        }
        s *= 0.5;
        if s < MIN_STEP_LENGTH {
            return Err(Error::LineSearchFailed { step: s });
        }
    }
}

/// Newton iteration for the member `t` of the continuity family, started at `phi0`.
pub fn solve_at_t(phi0: &Potential, f: &TorusField, t: f64, cfg: &SolverConfig) -> Result<ContinuityState> {
    let c_t = normalize_ct(f, t);
    let density = DensityData::new(f.scale(t), c_t);
    if !is_admissible(&reduced_metric(phi0), 0.0) {
        return Err(Error::DegenerateMetric {
            min_nu: reduced_metric(phi0).nu.min(),
        });
    }
    let mut phi = phi0.clone();
    let mut history = Vec::new();
    let mut steps = Vec::new();
    loop {
        let r = residual(&phi, &density).sup_abs();
        history.push(r);
        if r <= cfg.newton_tol {
            break;
        }
        if steps.len() >= cfg.max_newton_iters {
            return Err(Error::MaxItersExceeded {
                iterations: steps.len(),
                residual: r,
            });
        }
        let (next, step) = newton_step(&phi, &density, cfg)?;
        debug_assert!(step.min_nu > cfg.admissibility_delta || step.step_length == 0.0);
        phi = next;
        steps.push(step);
    }
    let summary = diagnostics(&phi, &density)?;
    Ok(ContinuityState {
        t,
        phi,
        c_t,
        t_step: 0.0,
        diagnostics: StateDiagnostics {
            newton_iterations: steps.len(),
            residual_history: history,
            steps,
            summary,
        },
    })
}

fn is_recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::LineSearchFailed { .. }
            | Error::MaxItersExceeded { .. }
            | Error::LinearSolveStagnated { .. }
            | Error::DegenerateMetric { .. }
    )
}

/// Marches `t` from 0 to 1, warm-starting each solve from the previous one.
///
/// Steps halve on failure and grow by 1.5 after success. The returned path
/// holds the accepted states with `t > 0`; its last entry has `t = 1`.
pub fn continuity_solve(f: &TorusField, cfg: &SolverConfig) -> Result<Vec<ContinuityState>> {
    continuity_solve_observed(f, cfg, |_| {})
}

/// [`continuity_solve`] calling `on_accept` with each accepted state as it is reached.
pub fn continuity_solve_observed(
    f: &TorusField,
    cfg: &SolverConfig,
    mut on_accept: impl FnMut(&ContinuityState),
) -> Result<Vec<ContinuityState>> {
    cfg.validate()?;
    let zero = Potential::zero(f.grid());
    if f.sup_abs() == 0.0 {
        let mut state = solve_at_t(&zero, f, 1.0, cfg)?;
        state.t_step = 1.0;
        on_accept(&state);
        return Ok(vec![state]);
    }
    let mut last = solve_at_t(&zero, f, 0.0, cfg)?;
    let mut path = Vec::new();
    let mut step = cfg.t_step_initial;
    while last.t < 1.0 {
        let t_next = (last.t + step).min(1.0);
        match solve_at_t(&last.phi, f, t_next, cfg) {
            Ok(mut state) => {
                state.t_step = t_next - last.t;
                on_accept(&state);
                path.push(state.clone());
                last = state;
                step = (step * 1.5).min(1.0);
            }
            Err(e) if is_recoverable(&e) => {
                step *= 0.5;
                if step < cfg.t_step_min {
                    return Err(Error::ContinuationStalled {
                        t: last.t,
                        step,
                        last: Box::new(last),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(path)
}

/// Outcome of [`uniqueness_probe`].
#[derive(Clone, Debug)]
pub struct UniquenessReport {
    /// Largest pairwise sup-distance between converged potentials.
    pub max_potential_distance: f64,
    /// Largest pairwise coefficient-wise distance between the assembled 2-forms.
    pub max_form_distance: f64,
    pub endpoints: Vec<Potential>,
}

/// Low-mode random perturbation with second derivatives bounded by `amp`.
fn random_perturbation(grid: &crate::grid::Grid, seed: u64, amp: f64) -> TorusField {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for k in -3i64..=3 {
        for l in 0i64..=3 {
            if l == 0 && k <= 0 {
                continue;
            }
            terms.push((k as f64, l as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let raw = TorusField::from_fn(grid, |x, y| {
        terms
            .iter()
            .map(|&(k, l, a, b)| {
                let th = 2.0 * PI * (k * x + l * y);
                a * th.cos() + b * th.sin()
            })
            .sum()
    });
    let spec = raw.spectrum();
    let size = [Deriv::XX, Deriv::YY, Deriv::XY]
        .into_iter()
        .map(|d| spec.derivative(d).sup_abs())
        .fold(0.0, f64::max);
    raw.scale(amp / size)
}

/// Re-solves at `t = 1` from `n_starts` perturbations of `endpoint` and
/// measures how far apart the converged solutions are.
pub fn uniqueness_probe_from(
    endpoint: &Potential,
    f: &TorusField,
    cfg: &SolverConfig,
    n_starts: usize,
) -> Result<UniquenessReport> {
    if n_starts < 2 {
        return Err(Error::InvalidConfig("uniqueness probe needs at least 2 starts".into()));
    }
    let grid = f.grid().clone();
    let starts: Vec<Potential> = (0..n_starts)
        .map(|i| {
            let mut amp = 0.05;
            loop {
                let pert = random_perturbation(&grid, cfg.seed.wrapping_add(i as u64), amp);
                let p = endpoint.updated(1.0, &pert);
                if is_admissible(&reduced_metric(&p), cfg.admissibility_delta) {
                    return p;
                }
                amp *= 0.5;
            }
        })
        .collect();

    let results: Vec<Result<ContinuityState>> = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .iter()
            .map(|p| scope.spawn(move || solve_at_t(p, f, 1.0, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("probe worker panicked"))
            .collect()
    });
    let endpoints: Vec<Potential> = results
        .into_iter()
        .map(|r| r.map(|s| s.phi))
        .collect::<Result<_>>()?;

    let forms: Vec<_> = endpoints.iter().map(assemble_omega_tilde).collect();
    let mut max_potential_distance: f64 = 0.0;
    let mut max_form_distance: f64 = 0.0;
    for i in 0..endpoints.len() {
        for j in (i + 1)..endpoints.len() {
            max_potential_distance =
                max_potential_distance.max((endpoints[i].phi() - endpoints[j].phi()).sup_abs());
            max_form_distance = max_form_distance.max(forms[i].sup_distance(&forms[j]));
        }
    }
    Ok(UniquenessReport {
        max_potential_distance,
        max_form_distance,
        endpoints,
    })
}

/// Runs the continuity path, then [`uniqueness_probe_from`] its endpoint.
pub fn uniqueness_probe(f: &TorusField, cfg: &SolverConfig, n_starts: usize) -> Result<UniquenessReport> {
    let path = continuity_solve(f, cfg)?;
    let endpoint = &path.last().expect("continuity path is never empty").phi;
    uniqueness_probe_from(endpoint, f, cfg, n_starts)
}
