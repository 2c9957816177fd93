//! The experiments behind each `experiment = ...` kind.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    BigFibreSection, ExperimentConfig, FunctionalChoice, InvariantChoice, QuasimeasureConfig, QuasistateAuditConfig,
    SetConfig, SpectralContractConfig, TranslatedMode, TranslatedPointsConfig, VerifyDynamicsConfig,
};
use super::report::ReportWriter;
use crate::dynamics::{commutes_with_reeb, conformal_check, group_law_check, is_strict, IsotopyMap, IsotopySpec};
use crate::error::{LabError, Result};
use crate::expr::parse;
use crate::generators::{random_hamiltonian, GeneratorOptions};
use crate::hamiltonian::DynHamiltonian;
use crate::manifold::{ContactModel, ModelKind, Vector};
use crate::quasimeasure::{
    angle_map, arc_cover, big_fibre_experiment, check_quasimeasure_axioms, check_subadditivity, tau, BigFibreConfig,
    MeasureCheck, MeasureStatus, MeasureSuite, TauConfig,
};
use crate::quasistate::{
    audit, AuditConfig, AxiomReport, AxiomStatus, DynQuasiState, HomogenizedMaxIntegral, QuasiStateViolation,
    ReebMean,
};
use crate::sets::ClosedSetSpec;
use crate::spectral::{
    check_contract, homogenize, model_max_integral, violator, CheckStatus, DynInvariant, HomogenizationResult,
    Violation,
};
use crate::translated::{cylinder_example, scan_rows, shift_set, ShiftScan, SolverConfig};

/// Resolved inputs shared by every experiment.
pub struct Context {
    pub config: ExperimentConfig,
    pub model: ContactModel<f64>,
    pub seed: u64,
    pub hamiltonians: BTreeMap<String, DynHamiltonian<f64>>,
}

#[derive(Debug)]
pub struct Outcome {
    /// Every asserted check passed.
    pub passed: bool,
    pub summary: String,
}

pub fn run_experiment(ctx: &Context, out: &mut ReportWriter) -> Result<Outcome> {
    let c = &ctx.config;
    match c.experiment {
        super::config::ExperimentKind::VerifyDynamics => verify_dynamics(ctx, &c.verify_dynamics.clone().unwrap_or_default(), out),
        super::config::ExperimentKind::TranslatedPoints => {
            translated_points(ctx, &c.translated_points.clone().unwrap_or_default(), out)
        }
        super::config::ExperimentKind::SpectralContract => {
            spectral_contract(ctx, &c.spectral_contract.clone().unwrap_or_default(), out)
        }
        super::config::ExperimentKind::QuasistateAudit => {
            quasistate_audit(ctx, &c.quasistate_audit.clone().unwrap_or_default(), out)
        }
        super::config::ExperimentKind::Quasimeasure => quasimeasure(ctx, &c.quasimeasure.clone().unwrap_or_default(), out),
        super::config::ExperimentKind::BigFibre => big_fibre(ctx, &c.big_fibre.clone().unwrap_or_default(), out),
    }
}

fn named(ctx: &Context, name: &str) -> DynHamiltonian<f64> {
    ctx.hamiltonians[name].clone()
}

fn random_field(model: &ContactModel<f64>, strict: bool, autonomous: bool, rng: &mut ChaCha8Rng) -> DynHamiltonian<f64> {
    let opts = GeneratorOptions { time_dependent: !autonomous, ..Default::default() };
    Arc::new(random_hamiltonian(model, strict, &opts, rng))
}

#[derive(Debug, Serialize)]
struct GroupLawRow {
    pair: String,
    t: f64,
    distance: f64,
    kappa_error: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct ConformalRow {
    field: String,
    strict: bool,
    t: f64,
    probes: usize,
    kappa: f64,
    max_relative_error: f64,
    tolerance: f64,
    kappa_deviation: Option<f64>,
    kappa_tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct StrictnessRow {
    field: String,
    generated_strict: bool,
    is_strict: bool,
    max_dh_reeb: f64,
    strict_tolerance: f64,
    commutes: bool,
    max_commutation_defect: f64,
    tolerance: f64,
    agree: bool,
}

#[derive(Debug, Serialize)]
struct CheckSummary {
    rows: usize,
    failures: usize,
    worst: f64,
    tolerance: f64,
    passed: bool,
}

impl CheckSummary {
    fn of(rows: usize, failures: usize, worst: f64, tolerance: f64) -> Self {
        Self { rows, failures, worst, tolerance, passed: failures == 0 }
    }
}

#[derive(Debug, Serialize)]
struct DynamicsSummary {
    model: String,
    seed: u64,
    group_law: CheckSummary,
    conformal: CheckSummary,
    strictness: CheckSummary,
    passed: bool,
}

fn verify_dynamics(ctx: &Context, s: &VerifyDynamicsConfig, out: &mut ReportWriter) -> Result<Outcome> {
    let m = &ctx.model;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut pairs: Vec<(String, DynHamiltonian<f64>, DynHamiltonian<f64>)> = s
        .explicit_pairs
        .iter()
        .map(|[g, h]| (format!("{g}#{h}"), named(ctx, g), named(ctx, h)))
        .collect();
    for i in 0..s.pairs {
        let g = random_field(m, i % 2 == 0, false, &mut rng);
        let h = random_field(m, false, false, &mut rng);
        pairs.push((format!("random-{i}"), g, h));
    }
    let starts = m.sample(pairs.len(), rng.gen());
    let tol = s.distance_tolerance;
    let group: Vec<Vec<GroupLawRow>> = pairs
        .par_iter()
        .zip(starts.par_iter())
        .map(|((name, g, h), x)| {
            let samples = group_law_check(m, g, h, x, &s.times, s.flow_tolerance, s.inner_tolerance)?;
            Ok(samples
                .into_iter()
                .map(|r| GroupLawRow {
                    pair: name.clone(),
                    t: r.t,
                    distance: r.distance,
                    kappa_error: r.kappa_error,
                    tolerance: tol,
                    pass: r.distance <= tol && r.kappa_error <= tol,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let group: Vec<GroupLawRow> = group.into_iter().flatten().collect();

    let n_fields = s.conformal_fields;
    let per_field = s.conformal_probes.checked_div(n_fields).unwrap_or(0);
    let fields: Vec<(String, bool, DynHamiltonian<f64>, Vec<Vector<f64>>)> = (0..n_fields)
        .map(|i| {
            let strict = i % 2 == 0;
            let h = random_field(m, strict, false, &mut rng);
            let extra = usize::from(i < s.conformal_probes - per_field * n_fields);
            let vs = (0..per_field + extra).map(|_| random_direction(m.dim(), &mut rng)).collect();
            (format!("field-{i}"), strict, h, vs)
        })
        .collect();
    let conf_starts = m.sample(fields.len(), rng.gen());
    let t_end = s.times.iter().copied().fold(0.0, f64::max);
    let conformal: Vec<ConformalRow> = fields
        .par_iter()
        .zip(conf_starts.par_iter())
        .map(|((name, strict, h, vs), x)| {
            let c = conformal_check(&IsotopySpec::new(m, h.clone(), s.inner_tolerance), x, t_end, vs, s.fd_step)?;
            let dev = strict.then(|| (c.kappa - 1.0).abs());
            Ok(ConformalRow {
                field: name.clone(),
                strict: *strict,
                t: t_end,
                probes: c.probes,
                kappa: c.kappa,
                max_relative_error: c.max_relative_error,
                tolerance: s.conformal_tolerance,
                kappa_deviation: dev,
                kappa_tolerance: s.kappa_tolerance,
                pass: c.max_relative_error <= s.conformal_tolerance && dev.is_none_or(|d| d <= s.kappa_tolerance),
            })
        })
        .collect::<Result<_>>()?;

    let strict_fields: Vec<(String, bool, DynHamiltonian<f64>, u64)> = (0..s.strictness_fields)
        .map(|i| {
            let strict = i % 2 == 0;
            (format!("field-{i}"), strict, random_field(m, strict, true, &mut rng), rng.gen())
        })
        .collect();
    let shifts = [0.5, 1.3, -2.1];
    let strictness: Vec<StrictnessRow> = strict_fields
        .par_iter()
        .map(|(name, generated, h, seed)| {
            let st = is_strict(m, h.as_ref(), s.strictness_probes, *seed);
            let points = m.sample(4, seed ^ 0xc0);
            let cm = commutes_with_reeb(m, h, &points, &shifts, s.commutation_tolerance, s.inner_tolerance)?;
            Ok(StrictnessRow {
                field: name.clone(),
                generated_strict: *generated,
                is_strict: st.strict,
                max_dh_reeb: st.max_violation,
                strict_tolerance: st.tolerance,
                commutes: cm.commutes,
                max_commutation_defect: cm.max_defect,
                tolerance: s.commutation_tolerance,
                agree: st.strict == cm.commutes,
            })
        })
        .collect::<Result<_>>()?;

    out.csv("group_law", &group)?;
    out.csv("conformal", &conformal)?;
    out.csv("strictness", &strictness)?;
    let worst_g = group.iter().map(|r| r.distance.max(r.kappa_error)).fold(0.0, f64::max);
    let worst_c = conformal.iter().map(|r| r.max_relative_error).fold(0.0, f64::max);
    let worst_s = strictness.iter().filter(|r| !r.is_strict).map(|r| r.max_commutation_defect).fold(f64::INFINITY, f64::min);
    let summary = DynamicsSummary {
        model: m.name().to_string(),
        seed: ctx.seed,
        group_law: CheckSummary::of(group.len(), group.iter().filter(|r| !r.pass).count(), worst_g, tol),
        conformal: CheckSummary::of(
            conformal.len(),
            conformal.iter().filter(|r| !r.pass).count(),
            worst_c,
            s.conformal_tolerance,
        ),
        strictness: CheckSummary::of(
            strictness.len(),
            strictness.iter().filter(|r| !r.agree).count(),
            worst_s,
            s.commutation_tolerance,
        ),
        passed: false,
    };
    let passed = summary.group_law.passed && summary.conformal.passed && summary.strictness.passed;
    let summary = DynamicsSummary { passed, ..summary };
    out.json("summary", &summary)?;
    Ok(Outcome {
        passed,
        summary: format!(
            "group law worst {:.3e} ({} rows), conformal worst {:.3e}, strictness discrepancies {}",
            worst_g,
            group.len(),
            worst_c,
            summary.strictness.failures
        ),
    })
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vector<f64> {
    loop {
        let v: Vector<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 {
            return v.iter().map(|a| a / n).collect();
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| (a * (n - 1 - i) as f64 + b * i as f64) / (n - 1) as f64).collect()
}

#[derive(Debug, Serialize)]
struct ScanReportRow {
    eta: f64,
    n_translated_points: usize,
    max_residual: f64,
    tolerance: f64,
}

#[derive(Debug, Serialize)]
struct FixedPointCsvRow {
    eta: f64,
    fixed_composite: usize,
    fixed_f: usize,
    symmetric_difference: usize,
    solved_composite: usize,
    solved_f: usize,
    cross_mismatches: usize,
    tolerance: f64,
    agree: bool,
}

fn translated_points(ctx: &Context, s: &TranslatedPointsConfig, out: &mut ReportWriter) -> Result<Outcome> {
    let etas = linspace(s.eta_min, s.eta_max, s.eta_count);
    let solver = SolverConfig {
        tolerance: s.solver_tolerance,
        budget: s.budget,
        require_unit_kappa: s.require_unit_kappa,
        ..SolverConfig::default()
    };
    match s.mode {
        TranslatedMode::Scan => {
            let m = &ctx.model;
            let name = s.hamiltonian.as_deref().expect("validated");
            let phi = IsotopyMap::time_one(IsotopySpec::new(m, named(ctx, name), s.flow_tolerance));
            let counts = if s.seed_lattice.is_empty() { vec![6; m.dim()] } else { s.seed_lattice.clone() };
            if counts.len() != m.dim() {
                return Err(LabError::Invalid(format!("seed_lattice needs {} entries", m.dim())));
            }
            let seeds = m.lattice_with(&counts);
            let rows = scan_rows(m, &phi, &etas, &seeds, &solver)?;
            let rows: Vec<ScanReportRow> = rows
                .into_iter()
                .map(|r| ScanReportRow {
                    eta: r.eta,
                    n_translated_points: r.n_translated_points,
                    max_residual: r.max_residual,
                    tolerance: s.solver_tolerance,
                })
                .collect();
            let scan = ShiftScan { eta_min: s.eta_min, eta_max: s.eta_max, eta_seeds: s.eta_count, seeds };
            let shifts = shift_set(m, &phi, &scan, &solver)?;
            out.csv("scan", &rows)?;
            out.json("shift_set", &shifts)?;
            let total: usize = rows.iter().map(|r| r.n_translated_points).sum();
            Ok(Outcome {
                passed: true,
                summary: format!("{total} translated points over {} shifts, {} distinct shifts", rows.len(), shifts.shifts.len()),
            })
        }
        TranslatedMode::Cylinder => {
            let mut ex = cylinder_example(etas);
            ex.flow_tolerance = s.flow_tolerance;
            ex.solver = solver;
            ex.seed = ctx.seed;
            let report = crate::translated::fixed_point_invariance_check(&ex)?;
            let rows: Vec<FixedPointCsvRow> = report
                .rows
                .iter()
                .map(|r| FixedPointCsvRow {
                    eta: r.eta,
                    fixed_composite: r.fixed_composite,
                    fixed_f: r.fixed_f,
                    symmetric_difference: r.symmetric_difference,
                    solved_composite: r.solved_composite,
                    solved_f: r.solved_f,
                    cross_mismatches: r.cross_mismatches,
                    tolerance: ex.fixed_tolerance,
                    agree: r.agree,
                })
                .collect();
            out.csv("fixed_points", &rows)?;
            out.json("fixed_points", &report)?;
            let bad = rows.iter().filter(|r| !r.agree).count();
            Ok(Outcome { passed: report.all_agree, summary: format!("{} shifts, {bad} disagreements", rows.len()) })
        }
    }
}

#[derive(Debug, Serialize)]
struct PropertyRow {
    invariant: String,
    property_id: String,
    n_trials: usize,
    n_failures: usize,
    worst_margin: f64,
    tolerance: f64,
    status: CheckStatus,
}

#[derive(Debug, Serialize)]
struct HomogenizationRow {
    hamiltonian: String,
    k: usize,
    c_over_k: f64,
    ctilde_over_k: f64,
    fekete_running_min: f64,
    tolerance: f64,
}

#[derive(Debug, Serialize)]
struct HomogenizationSummary {
    hamiltonian: String,
    converged: bool,
    result: HomogenizationResult<f64>,
}

#[derive(Debug, Serialize)]
struct ContractSummary {
    model: String,
    reports: Vec<crate::spectral::ContractReport>,
    homogenization: Vec<HomogenizationSummary>,
    passed: bool,
}

fn spectral_contract(ctx: &Context, s: &SpectralContractConfig, out: &mut ReportWriter) -> Result<Outcome> {
    let m = &ctx.model;
    let base = model_max_integral(m, s.lattice);
    let suite = crate::spectral::ContractSuite {
        trials: s.trials,
        seed: ctx.seed,
        tolerance: s.tolerance,
        reeb_shifts: s.reeb_shifts,
        generator: GeneratorOptions::default(),
    };
    let mut reports = Vec::new();
    for choice in &s.invariants {
        let c: DynInvariant<f64> = match choice {
            InvariantChoice::MaxIntegral => Arc::new(base.clone()),
            InvariantChoice::DoubledMax => Arc::new(violator(&base, Violation::DoubledMax)),
            InvariantChoice::OscillationPenalty => Arc::new(violator(&base, Violation::OscillationPenalty)),
            InvariantChoice::TimeWeighted => Arc::new(violator(&base, Violation::TimeWeighted)),
            InvariantChoice::Squared => Arc::new(violator(&base, Violation::Squared)),
        };
        reports.push(check_contract(c.as_ref(), &base, &suite));
    }
    let mut homs = Vec::new();
    for name in &s.homogenize {
        let h = named(ctx, name);
        let r = match homogenize(&base, &base, &h, s.k_max, s.homogenization_tolerance, s.reeb_shifts) {
            Ok(r) => r,
            Err(e) => e.partial,
        };
        homs.push(HomogenizationSummary { hamiltonian: name.clone(), converged: r.converged, result: r });
    }
    let rows: Vec<PropertyRow> = reports
        .iter()
        .flat_map(|r| {
            r.properties.iter().map(move |p| PropertyRow {
                invariant: r.invariant.clone(),
                property_id: p.property_id.clone(),
                n_trials: p.n_trials,
                n_failures: p.n_failures,
                worst_margin: p.worst_margin,
                tolerance: p.tolerance,
                status: p.status,
            })
        })
        .collect();
    out.csv("properties", &rows)?;
    if !homs.is_empty() {
        let hrows: Vec<HomogenizationRow> = homs
            .iter()
            .flat_map(|h| {
                let r = &h.result;
                r.k_sequence.iter().enumerate().map(move |(i, &k)| HomogenizationRow {
                    hamiltonian: h.hamiltonian.clone(),
                    k,
                    c_over_k: r.c_over_k[i],
                    ctilde_over_k: r.ctilde_over_k[i],
                    fekete_running_min: r.fekete_running_min[i],
                    tolerance: r.tolerance,
                })
            })
            .collect();
        out.csv("homogenization", &hrows)?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.invariant.clone()).collect();
    let passed = failed.is_empty() && homs.iter().all(|h| h.converged && h.result.subadditivity_violations.is_empty());
    let summary = ContractSummary { model: m.name().to_string(), reports, homogenization: homs, passed };
    out.json("contract", &summary)?;
    Ok(Outcome {
        passed,
        summary: if failed.is_empty() {
            format!("{} invariants pass the contract", summary.reports.len())
        } else {
            format!("contract violated by {}", failed.join(", "))
        },
    })
}

fn functional(model: &ContactModel<f64>, choice: FunctionalChoice, n: usize) -> DynQuasiState<f64> {
    let v = |violation| Arc::new(crate::quasistate::quasistate_violator(model, n, violation));
    match choice {
        FunctionalChoice::ReebMean => Arc::new(ReebMean::new(model, n)),
        FunctionalChoice::HomogenizedMaxIntegral => Arc::new(HomogenizedMaxIntegral::new(model, n)),
        FunctionalChoice::DoubledMean => v(QuasiStateViolation::DoubledMean),
        FunctionalChoice::SquaredMean => v(QuasiStateViolation::SquaredMean),
        FunctionalChoice::NonMonotone => v(QuasiStateViolation::NonMonotone),
    }
}

/// The mean used to compute set functions: exact on the hat basis in θ.
fn measure_functional(model: &ContactModel<f64>, choice: FunctionalChoice, basis_nodes: usize) -> DynQuasiState<f64> {
    match (choice, model.kind()) {
        (FunctionalChoice::ReebMean, ModelKind::T3UnitCotangent) => {
            Arc::new(ReebMean::with_counts(model, &[2, 2, basis_nodes]))
        }
        (FunctionalChoice::ReebMean, _) => Arc::new(ReebMean::new(model, basis_nodes)),
        (other, _) => functional(model, other, 12),
    }
}

#[derive(Debug, Serialize)]
struct AxiomRow {
    functional: String,
    axiom: &'static str,
    status: AxiomStatus,
    trials: usize,
    gated: usize,
    failures: usize,
    worst_margin: f64,
    tolerance: f64,
    note: String,
}

#[derive(Debug, Serialize)]
struct AuditEntry {
    functional: String,
    provenance: crate::quasistate::Provenance,
    axioms: Vec<AxiomReport>,
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    model: String,
    seed: u64,
    audits: Vec<AuditEntry>,
    passed: bool,
}

fn quasistate_audit(ctx: &Context, s: &QuasistateAuditConfig, out: &mut ReportWriter) -> Result<Outcome> {
    let m = &ctx.model;
    let cfg = AuditConfig {
        trials: s.trials,
        seed: ctx.seed,
        tolerance: s.tolerance,
        lattice: s.lattice,
        conjugacy_trials: s.conjugacy_trials,
        ..AuditConfig::default()
    };
    let mut audits = Vec::new();
    for &choice in &s.functionals {
        let zeta = functional(m, choice, s.lattice);
        let axioms = audit(zeta.as_ref(), m, &cfg, &[])?;
        audits.push(AuditEntry { functional: zeta.name().to_string(), provenance: zeta.provenance(), axioms });
    }
    let rows: Vec<AxiomRow> = audits
        .iter()
        .flat_map(|a| {
            a.axioms.iter().map(move |r| AxiomRow {
                functional: a.functional.clone(),
                axiom: r.axiom_id.id(),
                status: r.status,
                trials: r.trials,
                gated: r.gated,
                failures: r.failures.len(),
                worst_margin: r.worst_margin,
                tolerance: r.tolerance,
                note: r.note.clone().unwrap_or_default(),
            })
        })
        .collect();
    out.csv("axioms", &rows)?;
    let failing: Vec<String> =
        rows.iter().filter(|r| r.status == AxiomStatus::Fail).map(|r| format!("{}:{}", r.functional, r.axiom)).collect();
    let passed = failing.is_empty();
    out.json("audit", &AuditSummary { model: m.name().to_string(), seed: ctx.seed, audits, passed })?;
    Ok(Outcome {
        passed,
        summary: if passed { format!("{} axiom reports, none failing", rows.len()) } else { format!("failing: {}", failing.join(", ")) },
    })
}

fn build_set(model: &ContactModel<f64>, s: &SetConfig) -> Result<ClosedSetSpec<f64>> {
    let mut set = match (&s.band, &s.rho) {
        (Some([a, b]), None) => {
            let axis = match model.kind() {
                ModelKind::T3UnitCotangent => 2,
                ModelKind::S1Circle => 0,
                ModelKind::R3Standard => return Err(LabError::Invalid("bands need an angle coordinate".into())),
            };
            ClosedSetSpec::arc_between(axis, *a, *b)
        }
        (None, Some(src)) => {
            let e = parse(src, model.kind().coordinate_names())?;
            if e.uses_time() {
                return Err(LabError::Invalid(format!("set `{}` depends on t", s.name)));
            }
            ClosedSetSpec::new(s.name.clone(), move |x: &[f64]| e.eval(0.0, x))
        }
        _ => unreachable!("validated"),
    };
    set.label = s.name.clone();
    Ok(set)
}

pub(super) fn build_sets(model: &ContactModel<f64>, sets: &[SetConfig]) -> Result<BTreeMap<String, ClosedSetSpec<f64>>> {
    sets.iter().map(|s| Ok((s.name.clone(), build_set(model, s)?))).collect()
}

#[derive(Debug, Serialize)]
struct TauRow {
    set_name: String,
    tau_upper: f64,
    tau_certified_tight: bool,
    witnesses_used: usize,
    certified: bool,
    epsilon: f64,
    resolution: f64,
    duality_gap: Option<f64>,
    tolerance: f64,
}

#[derive(Debug, Serialize)]
struct MeasureVerdict {
    model: String,
    functional: String,
    tolerance: f64,
    sets: Vec<TauRow>,
    checks: Vec<MeasureCheck>,
    passed: bool,
}

fn tau_config(ctx: &Context, basis_nodes: usize, fibre_nodes: usize) -> TauConfig {
    TauConfig { basis_nodes, fibre_nodes, seed: ctx.seed, ..TauConfig::default() }
}

fn quasimeasure(ctx: &Context, s: &QuasimeasureConfig, out: &mut ReportWriter) -> Result<Outcome> {
    let m = &ctx.model;
    let sets = build_sets(m, &s.sets)?;
    let zeta = measure_functional(m, s.functional, s.basis_nodes);
    let cfg = TauConfig {
        epsilon: s.epsilon,
        max_pivots: s.max_pivots,
        max_evaluations: s.max_evaluations,
        ..tau_config(ctx, s.basis_nodes, s.fibre_nodes)
    };
    let mut listed: Vec<ClosedSetSpec<f64>> = vec![ClosedSetSpec::whole(), ClosedSetSpec::empty()];
    listed[1].label = "empty".into();
    listed.extend(s.sets.iter().map(|c| sets[&c.name].clone()));
    let mut rows = Vec::with_capacity(listed.len());
    for set in &listed {
        let t = tau(zeta.as_ref(), m, set, &cfg)?;
        rows.push(TauRow {
            set_name: set.label.clone(),
            tau_upper: t.value,
            tau_certified_tight: t.tight,
            witnesses_used: 0,
            certified: t.certified,
            epsilon: t.epsilon,
            resolution: t.resolution,
            duality_gap: t.lp.map(|c| c.duality_gap),
            tolerance: s.tolerance,
        });
    }
    let suite = MeasureSuite {
        nested: s.nested.iter().map(|[a, b]| (sets[a].clone(), sets[b].clone())).collect(),
        subadditivity: Vec::new(),
        tolerance: s.tolerance,
    };
    let mut checks = check_quasimeasure_axioms(zeta.as_ref(), m, &suite, &cfg)?;
    for group in &s.unions {
        let pieces: Vec<ClosedSetSpec<f64>> = group.iter().map(|n| sets[n].clone()).collect();
        checks.push(check_subadditivity(zeta.as_ref(), m, &pieces, &cfg, s.tolerance)?);
    }
    out.csv("tau", &rows)?;
    out.csv("checks", &checks)?;
    let passed = checks.iter().all(|c| c.status != MeasureStatus::Fail);
    let inconclusive = checks.iter().filter(|c| c.status == MeasureStatus::Inconclusive).count();
    let verdict = MeasureVerdict {
        model: m.name().to_string(),
        functional: zeta.name().to_string(),
        tolerance: s.tolerance,
        sets: rows,
        checks,
        passed,
    };
    out.json("verdict", &verdict)?;
    Ok(Outcome {
        passed,
        summary: format!("{} sets, {} checks, {inconclusive} inconclusive", verdict.sets.len(), verdict.checks.len()),
    })
}

#[derive(Debug, Serialize)]
struct FibreCsvRow {
    set_name: String,
    tau_upper: f64,
    tau_certified_tight: bool,
    witnesses_used: usize,
    vanishing_bound: Option<f64>,
    tolerance: f64,
}

fn big_fibre(ctx: &Context, s: &BigFibreSection, out: &mut ReportWriter) -> Result<Outcome> {
    let m = &ctx.model;
    let map = angle_map(m)?;
    let cover = arc_cover(s.arcs, s.overlap);
    let zeta = measure_functional(m, s.functional, s.basis_nodes);
    let cfg = BigFibreConfig {
        tau: tau_config(ctx, s.basis_nodes, s.fibre_nodes),
        cover_margin: s.cover_margin,
        cover_samples: s.cover_samples,
        tolerance: s.tolerance,
        ..BigFibreConfig::default()
    };
    let verdict = big_fibre_experiment(zeta.as_ref(), m, &map, &cover, &[], &cfg)?;
    let rows: Vec<FibreCsvRow> = verdict
        .rows
        .iter()
        .map(|r| FibreCsvRow {
            set_name: r.set_name.clone(),
            tau_upper: r.tau_upper,
            tau_certified_tight: r.tau_certified_tight,
            witnesses_used: r.witnesses_used,
            vanishing_bound: r.vanishing_bound,
            tolerance: verdict.lattice_error,
        })
        .collect();
    out.csv("fibres", &rows)?;
    out.json("verdict", &verdict)?;
    let passed = verdict.chain_holds && verdict.candidate_certified;
    Ok(Outcome {
        passed,
        summary: format!(
            "sum of tau = {:.6} (lattice error {:.3e}), candidate {}",
            verdict.sum,
            verdict.lattice_error,
            verdict.candidate.as_deref().unwrap_or("none")
        ),
    })
}
