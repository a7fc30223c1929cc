//! The `solve`, `verify` and `sweep` subcommands.

use std::fs;
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use ktcy_core::connection::{
    canonical_connection_forms, curvature, exact_report, ricci_flat, ricci_tilde, torsion, ComplexOneForm,
    ComplexTwoForm,
};
use ktcy_core::exact::ExactComplex;
use ktcy_core::field_io::{write_csv, write_ktcy};
use ktcy_core::forms::{cohomology_coeffs, j_two_form, omega, omega1, wedge_top, InvariantTwoForm};
use ktcy_core::reduction::{
    assemble_omega_tilde, key_identity_gap, la_inequality, lemma22_margin, reduced_metric, residual, trace_u, Sym2,
};
use ktcy_core::solver::{continuity_solve_observed, uniqueness_probe_from, ContinuityState};
use ktcy_core::{Error as CoreError, Grid, TorusField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DensitySource, ProblemSpec};
use crate::report::{
    write_report, Check, FinalRecord, PathRecord, SolveReport, Stall, Status, SweepEntry, SweepReport, Timings,
    VerifyReport,
};
use crate::{CliError, ExitStatus};

/// Values at or below this are treated as exact zeros when judging decay.
pub const MACHINE_PRECISION: f64 = 1e-14;
pub const KEY_IDENTITY_TOL: f64 = 1e-8;
pub const LEMMA22_TOL: f64 = 1e-6;
pub const UNIQUENESS_TOL: f64 = 1e-8;
pub const LA_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Ktcy,
    Csv,
    Both,
}

impl DumpFormat {
    fn ktcy(self) -> bool {
        matches!(self, DumpFormat::Ktcy | DumpFormat::Both)
    }

    fn csv(self) -> bool {
        matches!(self, DumpFormat::Csv | DumpFormat::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Lemma22,
    Connection,
    Uniqueness,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Lemma22 => "lemma22",
            Suite::Connection => "connection",
            Suite::Uniqueness => "uniqueness",
            Suite::All => "all",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

fn dump_field(dir: &Path, stem: &str, field: &TorusField, format: DumpFormat) -> Result<(), CliError> {
    if format.ktcy() {
        write_ktcy(dir.join(format!("{stem}.ktcy")), field)?;
    }
    if format.csv() {
        write_csv(dir.join(format!("{stem}.csv")), field)?;
    }
    Ok(())
}

fn dump_two_form(dir: &Path, stem: &str, w: &InvariantTwoForm, format: DumpFormat) -> Result<(), CliError> {
    if format.ktcy() {
        w.export(dir, stem)?;
    }
    if format.csv() {
        for k in 1..=6 {
            write_csv(dir.join(format!("{stem}_e{k}.csv")), w.e(k))?;
        }
    }
    Ok(())
}

fn dump_state(dir: &Path, index: usize, s: &ContinuityState, f: &TorusField, format: DumpFormat) -> Result<(), CliError> {
    let m = reduced_metric(&s.phi);
    let stem = |name: &str| format!("path{index:03}_{name}");
    dump_field(dir, &stem("phi"), s.phi.phi(), format)?;
    dump_field(dir, &stem("u"), &trace_u(&s.phi), format)?;
    dump_field(dir, &stem("nu"), &m.nu, format)?;
    dump_field(dir, &stem("residual"), &residual(&s.phi, &s.density(f)), format)
}

fn secs(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

/// Runs the continuity path and writes `report.json` plus optional dumps.
pub fn run_solve(spec: &ProblemSpec, out_dir: &Path, dump: Option<DumpFormat>) -> Result<ExitStatus, CliError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let f = spec.density_field()?;
    let mut records = Vec::new();
    let mut dump_error = None;
    let result = continuity_solve_observed(&f, &spec.solver, |s| {
        let index = records.len();
        records.push(PathRecord::new(index, s));
        if let (Some(format), None) = (dump, &dump_error) {
            dump_error = dump_state(out_dir, index, s, &f, format).err();
        }
    });
    if let Some(e) = dump_error {
        return Err(e);
    }
    let solve_seconds = secs(start);

    let (status, stall, last, exit) = match result {
        Ok(mut path) => (Status::Converged, None, path.pop().expect("path is never empty"), ExitStatus::Success),
        Err(CoreError::ContinuationStalled { t, step, last }) => {
            (Status::Stalled, Some(Stall { t, step }), *last, ExitStatus::Stalled)
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(format) = dump {
        dump_two_form(out_dir, "omega_tilde", &assemble_omega_tilde(&last.phi), format)?;
        dump_two_form(out_dir, "ricci_tilde", &ricci_tilde(&last.density(&f).f, last.c_t), format)?;
    }
    let report = SolveReport {
        spec_echo: spec.clone(),
        grid_n: spec.grid_n,
        status,
        stall,
        path: records,
        final_state: FinalRecord::new(&last),
        timings: Timings {
            total_seconds: secs(start),
            per_stage_seconds: vec![("continuity".into(), solve_seconds)],
        },
    };
    write_report(out_dir, &report)?;
    Ok(exit)
}

fn connection_checks() -> Vec<Check> {
    let suite = "connection";
    let t = ComplexOneForm::theta;
    let tb = ComplexOneForm::theta_bar;
    let q = ExactComplex::rational;
    let k = ExactComplex::i() * ExactComplex::inv_sqrt2() * q(1, 2);
    let eighth = |w: ComplexTwoForm| w.scale(q(1, 8));

    let conn = canonical_connection_forms();
    let conn_ok = conn.theta[0][0].is_zero()
        && conn.theta[0][1] == t(2).scale(-k)
        && conn.theta[1][0] == tb(2).scale(-k)
        && conn.theta[1][1] == t(1).add(&tb(1)).scale(k);
    let [t1, t2] = torsion();
    let psi = curvature();
    let psi12 = eighth(
        t(1).wedge(&tb(2))
            .scale(q(-1, 1))
            .add(&t(2).wedge(&tb(1)).scale(q(2, 1)))
            .add(&t(1).wedge(&t(2)).scale(q(-2, 1)))
            .add(&tb(1).wedge(&tb(2)).scale(q(-1, 1))),
    );
    let psi21 = eighth(
        t(2).wedge(&tb(1))
            .scale(q(-1, 1))
            .add(&t(1).wedge(&tb(2)).scale(q(2, 1)))
            .add(&tb(1).wedge(&tb(2)).scale(q(2, 1)))
            .add(&t(1).wedge(&t(2))),
    );
    let g = Grid::new(4).expect("valid grid");
    vec![
        Check::exact(suite, "connection_forms", conn_ok && conn.is_skew_hermitian()),
        Check::exact(suite, "torsion_theta1_zero", t1.is_zero()),
        Check::exact(suite, "torsion_theta2", t2 == tb(1).wedge(&tb(2)).scale(-k)),
        Check::exact(suite, "torsion_no_11_part", t1.part_11().is_zero() && t2.part_11().is_zero()),
        Check::exact(suite, "curvature_psi11", psi.psi[0][0] == eighth(t(2).wedge(&tb(2)).scale(q(-1, 1)))),
        Check::exact(suite, "curvature_psi12", psi.psi[0][1] == psi12),
        Check::exact(suite, "curvature_psi21", psi.psi[1][0] == psi21),
        Check::exact(suite, "curvature_psi22", psi.psi[1][1] == eighth(t(2).wedge(&tb(2)))),
        Check::exact(suite, "curvature_skew_hermitian", psi.is_skew_hermitian()),
        Check::exact(suite, "curvature_trace_zero", psi.trace().is_zero()),
        Check::at_most(suite, "ricci_flat", ricci_flat(&g).sup_distance(&InvariantTwoForm::zero(&g)), 0.0),
    ]
}

fn identity_checks(f: &TorusField, end: &ContinuityState) -> Vec<Check> {
    let suite = "identities";
    let d = end.density(f);
    let m = reduced_metric(&end.phi);
    let w = assemble_omega_tilde(&end.phi);
    let (alpha, beta) = cohomology_coeffs(&w);
    let grid = f.grid();
    let ric = ricci_tilde(&d.f, d.c);
    let pairing = [omega(grid), omega1(grid)]
        .iter()
        .map(|o| wedge_top(&ric, o).integrate().abs())
        .fold(0.0, f64::max);
    let key = key_identity_gap(&end.phi).map(|g| g.sup_abs()).unwrap_or(f64::INFINITY);
    vec![
        Check::at_most(suite, "key_identity_sup", key, KEY_IDENTITY_TOL),
        Check::at_most(suite, "integral_nu_minus_1", (m.nu.integrate() - 1.0).abs(), 1e-10),
        Check::at_most(suite, "integral_u_minus_2", (trace_u(&end.phi).integrate() - 2.0).abs(), 1e-12),
        Check::at_most(suite, "integral_residual", residual(&end.phi, &d).integrate().abs(), 1e-10),
        Check::at_most(suite, "alpha_minus_1", (alpha - 1.0).abs(), 1e-10),
        Check::at_most(suite, "beta", beta.abs(), 1e-10),
        Check::at_most(suite, "compatibility_J", j_two_form(&w).sup_distance(&w), 1e-12),
        Check::at_most(
            suite,
            "trace_u_is_pairing_with_omega",
            (&wedge_top(&omega(grid), &w) - &trace_u(&end.phi)).sup_abs(),
            1e-12,
        ),
        Check::at_most(suite, "ricci_tilde_pairings", pairing, 1e-10),
    ]
}

fn lemma22_checks(spec: &ProblemSpec, f: &TorusField, path: &[ContinuityState]) -> Vec<Check> {
    let suite = "lemma22";
    let worst = path
        .iter()
        .map(|s| lemma22_margin(&s.phi, &s.density(f)).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.solver.seed);
    let mut min_value = f64::INFINITY;
    let mut drawn = 0;
    while drawn < LA_SAMPLES {
        let s: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let p = Sym2::new(s[0] * s[0] + s[1] * s[1], s[0] * s[2] + s[1] * s[3], s[2] * s[2] + s[3] * s[3]);
        if !p.is_positive_definite() {
            continue;
        }
        let q = Sym2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if let Ok(v) = la_inequality(p, q) {
            min_value = min_value.min(v);
        }
        drawn += 1;
    }
    vec![
        Check::at_least(suite, "min_margin_along_path", worst, -LEMMA22_TOL),
        Check::at_least(suite, "trace_inequality_min", min_value, 0.0),
    ]
}

/// Runs the named property suite and writes `report.json`.
pub fn run_verify(spec: &ProblemSpec, suite: Suite, starts: usize, out_dir: &Path) -> Result<(ExitStatus, Vec<Check>), CliError> {
    if suite.includes(Suite::Uniqueness) && starts < 2 {
        return Err(CliError::Invalid("--starts must be at least 2".into()));
    }
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let mut stages = Vec::new();
    let mut checks = Vec::new();

    if suite.includes(Suite::Connection) {
        let t0 = Instant::now();
        fs::write(out_dir.join("connection.txt"), exact_report())?;
        checks.extend(connection_checks());
        stages.push(("connection".to_string(), secs(t0)));
    }

    let needs_solution = [Suite::Identities, Suite::Lemma22, Suite::Uniqueness]
        .iter()
        .any(|&s| suite.includes(s));
    if needs_solution {
        let f = spec.density_field()?;
        let t0 = Instant::now();
        let mut path = Vec::new();
        let result = continuity_solve_observed(&f, &spec.solver, |s| path.push(s.clone()));
        stages.push(("continuity".to_string(), secs(t0)));
        match result {
            Ok(_) => {
                checks.push(Check::exact("solve", "continuity_path_reaches_t1", true));
                let end = path.last().expect("path is never empty");
                if suite.includes(Suite::Identities) {
                    checks.extend(identity_checks(&f, end));
                }
                if suite.includes(Suite::Lemma22) {
                    checks.extend(lemma22_checks(spec, &f, &path));
                }
                if suite.includes(Suite::Uniqueness) {
                    let t0 = Instant::now();
                    let report = uniqueness_probe_from(&end.phi, &f, &spec.solver, starts)?;
                    checks.push(Check::at_most(
                        "uniqueness",
                        "max_pairwise_potential_distance",
                        report.max_potential_distance,
                        UNIQUENESS_TOL,
                    ));
                    stages.push(("uniqueness".to_string(), secs(t0)));
                }
            }
            Err(e @ CoreError::ContinuationStalled { .. }) => {
                eprintln!("continuity path failed: {e}");
                checks.push(Check::exact("solve", "continuity_path_reaches_t1", false));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let all_pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        spec_echo: spec.clone(),
        grid_n: spec.grid_n,
        suite: suite.name().into(),
        checks: checks.clone(),
        all_pass,
        timings: Timings {
            total_seconds: secs(start),
            per_stage_seconds: stages,
        },
    };
    write_report(out_dir, &report)?;
    Ok((if all_pass { ExitStatus::Success } else { ExitStatus::CheckFailed }, checks))
}

/// Checks that `resolutions` are valid grid sizes in strictly increasing order.
pub fn validate_resolutions(resolutions: &[usize]) -> Result<(), CliError> {
    if resolutions.is_empty() {
        return Err(CliError::Invalid("--resolutions is empty".into()));
    }
    for &n in resolutions {
        Grid::new(n).map_err(|e| CliError::Invalid(format!("--resolutions: {e}")))?;
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Invalid("--resolutions must be strictly increasing".into()));
    }
    Ok(())
}

/// `true` if each value is below its predecessor, pairs that are both at
/// machine precision excepted.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= MACHINE_PRECISION && w[1] <= MACHINE_PRECISION))
}

/// Solves at every resolution and reports convergence under refinement.
pub fn run_sweep(spec: &ProblemSpec, resolutions: &[usize], out_dir: &Path) -> Result<ExitStatus, CliError> {
    validate_resolutions(resolutions)?;
    if matches!(spec.density, DensitySource::FieldDump { .. }) {
        return Err(CliError::Invalid(
            "sweep needs a preset or Fourier density; a field dump is fixed to one grid".into(),
        ));
    }
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;

    let specs: Vec<ProblemSpec> = resolutions
        .iter()
        .map(|&n| {
            let mut s = spec.clone();
            s.grid_n = n;
            s.solver.grid_n = n;
            s
        })
        .collect();
    let results: Vec<(Result<Vec<ContinuityState>, CoreError>, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|s| {
                scope.spawn(move || {
                    let t0 = Instant::now();
                    let f = s.density_field().expect("preset and Fourier densities sample on any grid");
                    (continuity_solve_observed(&f, &s.solver, |_| {}), secs(t0))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });

    let mut entries = Vec::new();
    let mut stages = Vec::new();
    let mut worst_exit = ExitStatus::Success;
    for (&n, (result, seconds)) in resolutions.iter().zip(results) {
        stages.push((format!("n={n}"), seconds));
        let entry = match result {
            Ok(path) => SweepEntry {
                n,
                status: "converged".into(),
                error: None,
                final_state: Some(FinalRecord::new(path.last().expect("path is never empty"))),
            },
            Err(e) => {
                let (status, last) = match &e {
                    CoreError::ContinuationStalled { last, .. } => {
                        worst_exit = ExitStatus::Stalled;
                        ("stalled", Some(FinalRecord::new(last)))
                    }
                    _ => {
                        if worst_exit != ExitStatus::Stalled {
                            worst_exit = ExitStatus::Invalid;
                        }
                        ("failed", None)
                    }
                };
                SweepEntry {
                    n,
                    status: status.into(),
                    error: Some(e.to_string()),
                    final_state: last,
                }
            }
        };
        entries.push(entry);
    }

    let converged: Vec<&FinalRecord> = entries
        .iter()
        .filter(|e| e.status == "converged")
        .filter_map(|e| e.final_state.as_ref())
        .collect();
    let gaps: Vec<f64> = converged.iter().map(|r| r.diagnostics.key_identity_sup).collect();
    let decreasing = converged.len() == entries.len() && strictly_decreasing(&gaps);
    let sup_u_max_change = converged
        .windows(2)
        .map(|w| (w[1].diagnostics.sup_u - w[0].diagnostics.sup_u).abs())
        .fold(0.0, f64::max);
    let all_pass = worst_exit == ExitStatus::Success && decreasing;
    let report = SweepReport {
        spec_echo: spec.clone(),
        resolutions: entries,
        sup_u_max_change,
        key_identity_strictly_decreasing: decreasing,
        all_pass,
        timings: Timings {
            total_seconds: secs(start),
            per_stage_seconds: stages,
        },
    };
    write_report(out_dir, &report)?;
    if worst_exit != ExitStatus::Success {
        return Ok(worst_exit);
    }
    if !decreasing {
        eprintln!("key_identity_sup is not strictly decreasing: {gaps:?}");
        return Ok(ExitStatus::CheckFailed);
    }
    Ok(ExitStatus::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_predicate() {
        assert!(strictly_decreasing(&[1e-3, 1e-6, 1e-9]));
        assert!(!strictly_decreasing(&[1e-3, 1e-3]));
        assert!(!strictly_decreasing(&[1e-11, 1e-10]));
        assert!(strictly_decreasing(&[0.0, 0.0, 0.0]));
        assert!(strictly_decreasing(&[1e-3]));
    }

    #[test]
    fn resolution_validation() {
        assert!(validate_resolutions(&[32, 64, 128]).is_ok());
        assert!(validate_resolutions(&[]).is_err());
        assert!(validate_resolutions(&[64, 32]).is_err());
        assert!(validate_resolutions(&[33]).is_err());
    }

    #[test]
    fn connection_suite_is_exact() {
        assert!(connection_checks().iter().all(|c| c.pass && c.measured == 0.0));
    }
}
