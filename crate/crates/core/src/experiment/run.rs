use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::config::ExperimentConfig;
use super::report::{Check, DtnRow, SegmentSummary, VerificationReport};
use crate::assembly::{morse_index, BoundaryKind, BoundaryOperator, Model, PathPoint, Segment};
use crate::asymptotics::{compute_boundary_form, dyadic_taus, eigenvalue_expansion_fit, verify_small_tau_morse, BoundaryFormData};
use crate::dtn::{dirichlet_to_neumann, frame_from_map, neumann_to_dirichlet, upsilon_frame};
use crate::error::{MaslovError, Result};
use crate::grid::dirichlet_box_spectrum;
use crate::maslov::{FormRoute, MaslovSolver, SegmentResult};
use crate::symplectic::principal_sines;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    VerifyDirichlet,
    VerifyNeumann,
    VerifyRobinScalar,
    LoopZero,
    DtnDiagnostics,
    Asymptotics,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::VerifyDirichlet,
        Experiment::VerifyNeumann,
        Experiment::VerifyRobinScalar,
        Experiment::LoopZero,
        Experiment::DtnDiagnostics,
        Experiment::Asymptotics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyDirichlet => "verify-dirichlet",
            Experiment::VerifyNeumann => "verify-neumann",
            Experiment::VerifyRobinScalar => "verify-robin-scalar",
            Experiment::LoopZero => "loop-zero",
            Experiment::DtnDiagnostics => "dtn-diagnostics",
            Experiment::Asymptotics => "asymptotics",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::VerifyDirichlet => "Mor(L) = -Mas on [tau,1] = conjugate-point count, Dirichlet-based conditions",
            Experiment::VerifyNeumann => "Mor(L) = -Mas on [tau,1] + Mor(-B) + Mor(Q0 V(0) Q0), Neumann-based conditions",
            Experiment::VerifyRobinScalar => "scalar Robin/Neumann index formula with the sign correction from theta and V(0)",
            Experiment::LoopZero => "Maslov index around the closed path is zero, both methods, every segment",
            Experiment::DtnDiagnostics => "symmetry, inverse relation and frame agreement of the DtN and NtD maps",
            Experiment::Asymptotics => "small-tau Morse decomposition and eigenvalue expansion fit",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = MaslovError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| MaslovError::Config(format!("unknown experiment {s:?}")))
    }
}

fn context<T>(what: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| MaslovError::Context { context: what.to_string(), source: Box::new(e) })
}

struct Timer<'a> {
    report: &'a mut VerificationReport,
}

impl Timer<'_> {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        *self.report.timing.entry(stage.to_string()).or_insert(0.0) += t0.elapsed().as_secs_f64();
        out
    }
}

fn time<T>(report: &mut VerificationReport, stage: &str, f: impl FnOnce() -> T) -> T {
    Timer { report }.time(stage, f)
}

/// Both Maslov methods on the requested segments.
struct Indices {
    cf: Vec<SegmentResult>,
    sf: Vec<SegmentResult>,
}

impl Indices {
    fn cf(&self, seg: Segment) -> i64 {
        self.cf.iter().find(|r| r.segment == seg).map(|r| r.index).expect("segment computed")
    }

    fn sf(&self, seg: Segment) -> i64 {
        self.sf.iter().find(|r| r.segment == seg).map(|r| r.index).expect("segment computed")
    }

    fn crossings(&self) -> impl Iterator<Item = &crate::maslov::CrossingRecord> {
        self.cf.iter().flat_map(|r| r.crossings.iter())
    }
}

fn run_indices(solver: &MaslovSolver<'_>, report: &mut VerificationReport) -> Result<Indices> {
    let mut cf = Vec::new();
    let mut sf = Vec::new();
    for seg in Segment::ALL {
        let a = time(report, "crossing_form", || context(&format!("crossing forms on {}", seg.label()), solver.maslov_index_crossing_form(seg)))?;
        let b = time(report, "spectral_flow", || context(&format!("spectral flow on {}", seg.label()), solver.maslov_index_spectral_flow(seg)))?;
        let trace = time(report, "traces", || solver.mu_min_trace(seg))?;
        report.tables.mu_trace.extend(trace.into_iter().map(|(s, mu)| (seg, s, mu)));
        report.tables.phase_trace.extend(b.phases.iter().cloned().map(|p| (seg, p)));
        report.segments.push(SegmentSummary {
            segment: seg,
            range: a.range,
            crossing_form: Some(a.index),
            spectral_flow: Some(b.index),
            crossings: a.crossings.len(),
        });
        report.crossings.extend(a.crossings.iter().cloned());
        cf.push(a);
        sf.push(b);
    }
    Ok(Indices { cf, sf })
}

/// Per-segment method agreement, closed loop, sign laws, Σ₄ and the crossing-route checks.
fn push_loop_checks(report: &mut VerificationReport, idx: &Indices) {
    for seg in Segment::ALL {
        report.push(Check::integer(format!("{}: crossing-form index == spectral-flow index", seg.label()), idx.cf(seg), idx.sf(seg), ""));
    }
    let total_cf: i64 = Segment::ALL.iter().map(|&s| idx.cf(s)).sum();
    let total_sf: i64 = Segment::ALL.iter().map(|&s| idx.sf(s)).sum();
    report.push(Check::integer("closed loop (crossing forms) == 0", total_cf, 0, ""));
    report.push(Check::integer("closed loop (spectral flow) == 0", total_sf, 0, ""));
    let bad_sigma1 = idx.crossings().filter(|r| r.segment == Segment::Sigma1 && r.n_minus != r.kernel_dim).count();
    let bad_sigma3 = idx.crossings().filter(|r| r.segment == Segment::Sigma3 && r.n_plus != r.kernel_dim).count();
    let sigma4 = idx.crossings().filter(|r| r.segment == Segment::Sigma4).count();
    report.push(Check::integer("sigma1 crossings not negative definite", bad_sigma1 as i64, 0, ""));
    report.push(Check::integer("sigma3 crossings not positive definite", bad_sigma3 as i64, 0, ""));
    report.push(Check::integer("sigma4 crossings", sigma4 as i64, 0, "Lambda chosen so that the Σ₄ pencils are positive"));
    let mismatched = idx.crossings().filter(|r| r.kernel_dim != r.frame_intersection_dim).count();
    report.push(Check::integer("crossings with kernel_dim != frame intersection dim", mismatched as i64, 0, ""));
    let sign = idx.crossings().filter(|r| !r.sign_agrees).count();
    report.push(Check::integer("crossings where form signs disagree with eigenvalue-branch slopes", sign as i64, 0, ""));
}

fn solver_for<'a>(model: &'a Model, cfg: &ExperimentConfig, report: &mut VerificationReport) -> Result<MaslovSolver<'a>> {
    let solver = time(report, "setup", || context("path setup", MaslovSolver::new(model, cfg.path.tau, cfg.lambda_choice(), cfg.solver)))?;
    report.lambda_max = Some(solver.path().lambda_max);
    Ok(solver)
}

fn morse_at(model: &Model, lambda: f64, t: f64, zero_tol_rel: f64) -> Result<(usize, usize)> {
    let pencil = model.pencil(&PathPoint { s: 0.0, lambda, t, segment: Segment::Sigma3 })?;
    let probe = morse_index(&pencil, None)?;
    let scale = probe.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let m = morse_index(&pencil, Some(zero_tol_rel * scale))?;
    Ok((m.count, m.zero_count))
}

/// Constant potentials commute with the grid Laplacian: Dirichlet spectrum μ_kl + eig(V).
fn box_oracle(model: &Model, cfg: &ExperimentConfig) -> Option<usize> {
    if !model.potential.is_constant() || !model.is_pure_dirichlet() {
        return None;
    }
    let v = model.potential.at_origin().symmetric_eigenvalues();
    let mu = dirichlet_box_spectrum(cfg.domain.d, cfg.domain.n).ok()?;
    Some(v.iter().map(|vj| mu.iter().filter(|&&m| m + vj < 0.0).count()).sum())
}

fn verify_dirichlet(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<()> {
    if model.kind() != BoundaryKind::DirichletBased {
        return Err(MaslovError::Config("verify-dirichlet needs a Dirichlet-based boundary condition".into()));
    }
    let solver = solver_for(model, cfg, report)?;
    let idx = run_indices(&solver, report)?;
    let (mor, zeros) = time(report, "morse", || morse_at(model, 0.0, 1.0, cfg.solver.zero_tol_rel))?;
    let mor = mor as i64;
    let sigma2 = idx.cf(Segment::Sigma2);
    report.push(Check::integer("Mor(L) == -Mas(sigma2) [crossing forms]", mor, -sigma2, format!("{zeros} zero eigenvalues at t = 1")));
    report.push(Check::integer("Mor(L) == -Mas(sigma2) [spectral flow]", mor, -idx.sf(Segment::Sigma2), ""));
    report.push(Check::integer("Mor(L) == Mas(sigma3)", mor, idx.cf(Segment::Sigma3), ""));
    report.push(Check::integer("Mas(sigma1) == 0", idx.cf(Segment::Sigma1), 0, ""));
    if model.is_pure_dirichlet() {
        let conj: usize = idx.cf[1].crossings.iter().filter(|r| r.t < 1.0 - 1e-12).map(|r| r.kernel_dim).sum();
        report.push(Check::integer("Mor(L) == sum over t in [tau,1) of dim ker", mor, conj as i64, "conjugate points on the rescaling path"));
        let mut positive = 0;
        for r in &idx.cf[1].crossings {
            let h = context("boundary form on sigma2", solver.crossing_form(r, FormRoute::Hadamard))?;
            positive += h.symmetric_eigenvalues().iter().filter(|&&e| e >= 0.0).count();
        }
        report.push(Check::integer("nonnegative eigenvalues of the boundary-integral sigma2 forms", positive as i64, 0, ""));
    }
    if let Some(expected) = box_oracle(model, cfg) {
        report.push(Check::integer("Mor(L) == box-spectrum count", mor, expected as i64, "separable Dirichlet eigenvalues of the grid Laplacian"));
    }
    push_loop_checks(report, &idx);
    Ok(())
}

fn boundary_form_json(f: &BoundaryFormData) -> serde_json::Value {
    let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>();
    json!({
        "B": rows(&f.b),
        "B_eigenvalues": f.b_eigenvalues,
        "Q0": rows(&f.q0),
        "QVQ_eigenvalues": f.qvq_eigenvalues,
        "volume": f.volume,
        "nondegenerate": f.nondegenerate,
        "morse_minus_B": f.morse_minus_b,
        "morse_QVQ": f.morse_qvq,
    })
}

fn neumann_common(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<(i64, Indices, BoundaryFormData)> {
    if model.kind() != BoundaryKind::NeumannBased {
        return Err(MaslovError::Config(format!("{} needs a Neumann-based boundary condition", report.experiment)));
    }
    let form = context("boundary form", compute_boundary_form(model))?;
    report.details = json!({ "boundary_form": boundary_form_json(&form) });
    let correction = context("second-order form on ker B", form.expected_morse())? as i64;
    let solver = solver_for(model, cfg, report)?;
    let idx = run_indices(&solver, report)?;
    let (mor, zeros) = time(report, "morse", || morse_at(model, 0.0, 1.0, cfg.solver.zero_tol_rel))?;
    let mor = mor as i64;
    let (mor0, _) = time(report, "morse", || morse_at(model, 0.0, cfg.path.tau, cfg.solver.zero_tol_rel))?;
    report.push(Check::integer(
        "Mor(L) == -Mas(sigma2) + Mor(-B) + Mor(QVQ) [crossing forms]",
        mor,
        -idx.cf(Segment::Sigma2) + correction,
        format!("Mor(-B) = {}, Mor(QVQ) = {}, {zeros} zero eigenvalues at t = 1", form.morse_minus_b, form.morse_qvq),
    ));
    report.push(Check::integer("Mor(L) == -Mas(sigma2) + Mor(-B) + Mor(QVQ) [spectral flow]", mor, -idx.sf(Segment::Sigma2) + correction, ""));
    report.push(Check::integer("Mor(L) == Mas(sigma3)", mor, idx.cf(Segment::Sigma3), ""));
    report.push(Check::integer("Mor(L_0(tau)) == -Mas(sigma1)", mor0 as i64, -idx.cf(Segment::Sigma1), ""));
    report.push(Check::integer("Mor(L_0(tau)) == Mor(-B) + Mor(QVQ)", mor0 as i64, correction, "small-tau regime at the configured tau"));
    if form.b.amax() == 0.0 {
        let v0 = model.potential.at_origin().symmetric_eigenvalues();
        let mor_v0 = v0.iter().filter(|&&v| v < 0.0).count() as i64;
        report.push(Check::integer("Theta = 0: Mor(L) == -Mas(sigma2) + Mor(V(0))", mor, -idx.cf(Segment::Sigma2) + mor_v0, ""));
    }
    push_loop_checks(report, &idx);
    Ok((mor, idx, form))
}

fn verify_neumann(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<()> {
    neumann_common(cfg, model, report).map(|_| ())
}

fn verify_robin_scalar(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<()> {
    let theta = match (&model.bc.operator, model.n_sys()) {
        (BoundaryOperator::Uniform(t), 1) if model.kind() == BoundaryKind::NeumannBased => t[(0, 0)],
        _ => return Err(MaslovError::Config("verify-robin-scalar needs N = 1 and a constant Neumann-based theta".into())),
    };
    let v0 = model.potential.at_origin()[(0, 0)];
    if theta == 0.0 && v0 == 0.0 {
        return Err(MaslovError::DegenerateSecondOrderForm(0.0));
    }
    let (mor, idx, _) = neumann_common(cfg, model, report)?;
    // one extra negative direction from the constants when θ > 0, or θ = 0 and V(0) < 0
    let correction = i64::from(theta > 0.0 || (theta == 0.0 && v0 < 0.0));
    report.push(Check::integer(
        "scalar formula: Mor(L) == -Mas(sigma2) + [theta > 0 or (theta = 0 and V(0) < 0)]",
        mor,
        -idx.cf(Segment::Sigma2) + correction,
        format!("theta = {theta}, V(0) = {v0}"),
    ));
    Ok(())
}

fn loop_zero(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<()> {
    let solver = solver_for(model, cfg, report)?;
    let idx = run_indices(&solver, report)?;
    push_loop_checks(report, &idx);
    Ok(())
}

fn dtn_diagnostics(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<()> {
    let solver = solver_for(model, cfg, report)?;
    let path = *solver.path();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    for seg in Segment::ALL {
        let (a, b) = path.range(seg);
        let k = cfg.dtn.samples_per_segment;
        for j in 0..k {
            // one point per cell of a uniform partition, placed at random inside it
            let u: f64 = rng.gen_range(0.05..0.95);
            points.push(path.eval_on(seg, a + (b - a) * (j as f64 + u) / k as f64));
        }
    }
    let tol = cfg.solver.fallback_tol;
    let rows = time(report, "dtn", || {
        points
            .par_iter()
            .map(|p| -> Result<Option<DtnRow>> {
                let n = match dirichlet_to_neumann(model, p, tol) {
                    Ok(n) => n,
                    Err(MaslovError::DirichletSpectrumHit { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let ups = upsilon_frame(model, p, tol)?;
                let (ntd_sym, inverse, angle) = match neumann_to_dirichlet(model, p, tol) {
                    Ok(m) => {
                        let k = n.matrix.nrows();
                        let prod = &n.matrix * (-&m.matrix);
                        let inv = (prod - DMatrix::<f64>::identity(k, k)).amax();
                        let sines = principal_sines(&frame_from_map(model, &n), &frame_from_map(model, &m));
                        (Some(m.symmetry_defect(model)), Some(inv), sines.last().copied())
                    }
                    Err(MaslovError::NeumannSpectrumHit { .. }) => (None, None, None),
                    Err(e) => return Err(e),
                };
                Ok(Some(DtnRow {
                    s: p.s,
                    segment: p.segment,
                    lambda: p.lambda,
                    t: p.t,
                    sigma_min_interior: n.sigma_min,
                    sym_defect: n.symmetry_defect(model),
                    ntd_sym_defect: ntd_sym,
                    inverse_residual: inverse,
                    frame_angle: angle,
                    isotropy: ups.frame.isotropy_defect(),
                }))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<DtnRow> = rows.into_iter().flatten().collect();
    let max = |f: &dyn Fn(&DtnRow) -> Option<f64>| rows.iter().filter_map(f).fold(0.0_f64, f64::max);
    let both = rows.iter().filter(|r| r.inverse_residual.is_some()).count();
    let d = &cfg.dtn;
    report.push(Check::integer("sample points skipped at Dirichlet eigenvalues", (points.len() - rows.len()) as i64, 0, ""));
    report.push(Check::bounded("max DtN M_b-symmetry defect", max(&|r| Some(r.sym_defect)), d.symmetry_tol, ""));
    report.push(Check::bounded("max NtD M_b-symmetry defect", max(&|r| r.ntd_sym_defect), d.symmetry_tol, ""));
    report.push(Check::bounded("max |N(-M) - I|", max(&|r| r.inverse_residual), d.inverse_tol, format!("{both} points with both maps")));
    report.push(Check::bounded("max principal-angle sine between DtN and NtD frames", max(&|r| r.frame_angle), d.angle_tol, ""));
    report.push(Check::bounded("max isotropy defect of the boundary-trace frame", max(&|r| Some(r.isotropy)), d.isotropy_tol, ""));
    report.push(Check::integer("points where both maps exist > 0", i64::from(both > 0), 1, ""));
    report.details = json!({ "samples": rows.len(), "both_maps": both });
    report.tables.dtn = rows;
    Ok(())
}

fn asymptotics(cfg: &ExperimentConfig, model: &Model, report: &mut VerificationReport) -> Result<()> {
    let form = context("boundary form", compute_boundary_form(model))?;
    let a = &cfg.asymptotics;
    let fit_taus = dyadic_taus(a.fit_p[0], a.fit_p[1]);
    let morse_taus = dyadic_taus(a.morse_p[0], a.morse_p[1]);
    let fit = time(report, "fit", || context("expansion fit", eigenvalue_expansion_fit(model, &fit_taus)))?;
    let small = time(report, "small_tau", || context("small-tau Morse", verify_small_tau_morse(model, &morse_taus)))?;
    for (j, br) in fit.branches.iter().enumerate() {
        if br.slope_target != 0.0 {
            report.push(Check::bounded(
                format!("branch {j}: relative slope error"),
                br.slope_rel_error,
                a.tolerance,
                format!("slope {:.10} target {:.10}", br.slope, br.slope_target),
            ));
        } else {
            report.push(Check::bounded(format!("branch {j}: |slope| on ker B"), br.slope_error, a.tolerance, format!("slope {:.3e}", br.slope)));
        }
        if let (Some(target), Some(err)) = (br.curvature_target, br.curvature_rel_error) {
            report.push(Check::bounded(
                format!("branch {j}: relative curvature error"),
                err,
                a.tolerance,
                format!("curvature {:.10} target {:.10}", br.curvature, target),
            ));
        }
    }
    report.push(Check::integer("negative slopes == Mor(-B)", fit.negative_slopes() as i64, form.morse_minus_b as i64, ""));
    let checked: Vec<_> = small.rows.iter().filter(|r| r.checked).collect();
    for r in &checked {
        report.push(Check::integer(
            format!("tau = {}: Mor(L_0(tau)) == Mor(-B) + Mor(QVQ)", r.tau),
            r.morse as i64,
            small.expected as i64,
            format!("group max {:.3e}, gap {:.3e}", r.group_max, r.gap),
        ));
    }
    report.push(Check::integer(
        "checked tau values inside the separated range",
        checked.iter().filter(|r| r.separated).count() as i64,
        checked.len() as i64,
        format!("gap threshold {:?}", small.gap_threshold),
    ));
    if model.potential.is_constant() && form.b.amax() == 0.0 {
        let v = model.potential.at_origin().symmetric_eigenvalues();
        let mut v: Vec<f64> = v.iter().copied().collect();
        v.sort_by(|x, y| x.total_cmp(y));
        let mut err = 0.0_f64;
        for (k, tau) in fit.taus.iter().enumerate() {
            let mut vals: Vec<f64> = fit.branches.iter().map(|b| b.values[k]).collect();
            vals.sort_by(|x, y| x.total_cmp(y));
            for (val, vj) in vals.iter().zip(&v) {
                err = err.max((val - tau * tau * vj).abs());
            }
        }
        report.push(Check::bounded("max |lambda_j(tau) - tau^2 v_j| (Theta = 0, constant V)", err, a.exact_tolerance, ""));
    }
    let rows: Vec<Vec<f64>> = (0..fit.taus.len()).map(|k| fit.branches.iter().map(|b| b.values[k]).collect()).collect();
    report.tables.branches = Some((fit.taus.clone(), rows));
    report.details = json!({
        "boundary_form": boundary_form_json(&form),
        "fit": fit,
        "small_tau": small,
    });
    Ok(())
}

/// Runs a named experiment. Module errors are returned annotated with the stage.
pub fn run_experiment(config: &ExperimentConfig, experiment: Experiment) -> Result<VerificationReport> {
    config.validate()?;
    let mut report = VerificationReport::new(experiment.name(), config);
    let model = time(&mut report, "assembly", || context("model assembly", config.build_model()))?;
    match experiment {
        Experiment::VerifyDirichlet => verify_dirichlet(config, &model, &mut report)?,
        Experiment::VerifyNeumann => verify_neumann(config, &model, &mut report)?,
        Experiment::VerifyRobinScalar => verify_robin_scalar(config, &model, &mut report)?,
        Experiment::LoopZero => loop_zero(config, &model, &mut report)?,
        Experiment::DtnDiagnostics => dtn_diagnostics(config, &model, &mut report)?,
        Experiment::Asymptotics => asymptotics(config, &model, &mut report)?,
    }
    report.finish();
    Ok(report)
}
