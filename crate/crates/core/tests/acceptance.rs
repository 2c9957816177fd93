//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use contact_lab::dynamics::{
    commutes_with_reeb, conformal_check, group_law_check, is_strict, IsotopySpec, ReebShift,
};
use contact_lab::generators::{random_hamiltonian, GeneratorOptions};
use contact_lab::hamiltonian::{bump, DynHamiltonian, FnHamiltonian};
use contact_lab::manifold::{ContactModel, ModelKind, Vector};
use contact_lab::quasimeasure::{
    angle_map, arc_cover, big_fibre_experiment, check_quasimeasure_axioms, check_subadditivity, tau, BigFibreConfig,
    MeasureStatus, MeasureSuite, TauConfig,
};
use contact_lab::quasistate::{
    audit, quasistate_violator, AuditConfig, Axiom, AxiomReport, AxiomStatus, QuasiStateViolation, ReebMean,
    VanishingWitness,
};
use contact_lab::sets::{ClosedSetSpec, CoordBox};
use contact_lab::spectral::{check_contract, homogenize, model_max_integral, violator, ContractSuite, Violation};
use contact_lab::translated::{cylinder_example, fixed_point_invariance_check};
use contact_lab::LabError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn models() -> [ContactModel<f64>; 3] {
    [
        ContactModel::<f64>::new(ModelKind::T3UnitCotangent),
        ContactModel::<f64>::new(ModelKind::S1Circle),
        ContactModel::<f64>::new(ModelKind::R3Standard),
    ]
}

fn field(m: &ContactModel<f64>, strict: bool, time_dependent: bool, rng: &mut ChaCha8Rng) -> DynHamiltonian<f64> {
    let opts = GeneratorOptions { time_dependent, ..Default::default() };
    Arc::new(random_hamiltonian(m, strict, &opts, rng))
}

fn group_law() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for m in models() {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let pairs: Vec<_> = (0..50).map(|i| (field(&m, i % 2 == 0, true, &mut rng), field(&m, false, true, &mut rng))).collect();
        let xs = m.sample(50, 102);
        let worst = pairs
            .par_iter()
            .zip(xs.par_iter())
            .map(|((g, h), x)| {
                group_law_check(&m, g, h, x, &[0.25, 0.5, 1.0], 1e-9, 1e-12)
                    .unwrap()
                    .iter()
                    .map(|s| s.distance)
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        let secs = start.elapsed().as_secs_f64();
        ok &= worst <= 1e-5 && secs <= 120.0;
        parts.push(format!("{} max distance {worst:.2e} in {secs:.1}s", m.name()));
    }
    verdict(ok, parts.join("; "))
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vector<f64> {
    loop {
        let v: Vector<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 {
            return v.iter().map(|a| a / n).collect();
        }
    }
}

fn conformal() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for m in models() {
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        let cases: Vec<_> = (0..10)
            .map(|i| {
                let strict = i % 2 == 0;
                let h = field(&m, strict, true, &mut rng);
                let vs: Vec<Vector<f64>> = (0..100).map(|_| unit_vector(m.dim(), &mut rng)).collect();
                (strict, h, vs)
            })
            .collect();
        let xs = m.sample(10, 202);
        let checks: Vec<_> = cases
            .par_iter()
            .zip(xs.par_iter())
            .map(|((strict, h, vs), x)| {
                (*strict, conformal_check(&IsotopySpec::new(&m, h.clone(), 1e-12), x, 1.0, vs, 1e-5).unwrap())
            })
            .collect();
        let probes: usize = checks.iter().map(|(_, c)| c.probes).sum();
        let rel = checks.iter().map(|(_, c)| c.max_relative_error).fold(0.0, f64::max);
        let kappa = checks.iter().filter(|(s, _)| *s).map(|(_, c)| (c.kappa - 1.0).abs()).fold(0.0, f64::max);
        ok &= rel <= 1e-4 && kappa <= 1e-8 && probes == 1000;
        parts.push(format!("{} {probes} probes rel {rel:.2e} strict |kappa-1| {kappa:.1e}", m.name()));
    }
    verdict(ok, parts.join("; "))
}

fn strictness() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for m in models() {
        let mut rng = ChaCha8Rng::seed_from_u64(301);
        let fields: Vec<_> = (0..50).map(|i| (i % 2 == 0, field(&m, i % 2 == 0, false, &mut rng))).collect();
        let points = m.sample(4, 302);
        let discrepancies = fields
            .par_iter()
            .enumerate()
            .filter(|(i, (_, h))| {
                let s = is_strict(&m, h.as_ref(), 64, *i as u64).strict;
                let c = commutes_with_reeb(&m, h, &points, &[0.5, 1.3, -2.1], 1e-6, 1e-12).unwrap().commutes;
                s != c
            })
            .count();
        let strict = fields.iter().filter(|(s, _)| *s).count();
        ok &= discrepancies == 0;
        parts.push(format!("{} {discrepancies} discrepancies ({strict} strict of 50)", m.name()));
    }
    verdict(ok, parts.join("; "))
}

fn cylinder() -> Verdict {
    let etas: Vec<f64> = (0..50).map(|i| (-2.4 * (49 - i) as f64 + 2.5 * i as f64) / 49.0).collect();
    let ex = cylinder_example(etas);
    let report = fixed_point_invariance_check(&ex).unwrap();
    let fixed: usize = report.rows.iter().map(|r| r.solved_f).sum();
    let mut bad_h = ex.clone();
    bad_h.h = FnHamiltonian::autonomous(|x: &[f64]| 0.8 * bump((x[0] * x[0] + x[1] * x[1]) / 0.81) * (1.0 + 0.3 * x[2].sin())).shared();
    let mut wide_h = ex.clone();
    wide_h.h = FnHamiltonian::autonomous(|x: &[f64]| 0.8 * bump((x[0] * x[0] + x[1] * x[1]) / 4.0)).shared();
    let mut weak_f = ex.clone();
    weak_f.f = FnHamiltonian::autonomous(|x: &[f64]| 0.5 * x[1] * bump((x[0] * x[0] + x[1] * x[1]) / 36.0)).shared();
    let rejected: Vec<bool> = [&bad_h, &wide_h, &weak_f]
        .iter()
        .map(|s| matches!(fixed_point_invariance_check(s), Err(LabError::HypothesisViolated { .. })))
        .collect();
    verdict(
        report.all_agree && report.rows.len() == 50 && rejected.iter().all(|&r| r),
        format!(
            "{} shifts agree: {}; {fixed} solved fixed points; violating inputs rejected: {:?}",
            report.rows.len(),
            report.all_agree,
            rejected
        ),
    )
}

fn contract() -> Verdict {
    let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
    let base = model_max_integral(&m, 12);
    let suite = ContractSuite::default();
    let good = check_contract(&base, &base, &suite);
    let asserted = ["1-normalization", "3-stability-upper", "3-stability-lower", "4-triangle-strict", "triangle-general-osc"];
    let good_ok = asserted.iter().all(|id| good.property(id).is_some_and(|p| p.n_failures == 0 && p.n_trials == 100));
    let mut flagged = Vec::new();
    for v in [Violation::DoubledMax, Violation::OscillationPenalty, Violation::TimeWeighted] {
        let r = check_contract(&violator(&base, v), &base, &suite);
        flagged.push((r.invariant.clone(), r.properties.iter().map(|p| p.n_failures).sum::<usize>()));
    }
    verdict(
        good_ok && flagged.iter().all(|(_, n)| *n >= 1),
        format!("max-integral passes 100 trials: {good_ok}; violator failures {flagged:?}"),
    )
}

fn homogenization() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [ContactModel::<f64>::new(ModelKind::T3UnitCotangent), ContactModel::<f64>::new(ModelKind::S1Circle)] {
        let base = model_max_integral(&m, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(601);
        let (mut dev, mut zeta_err, mut monotone, mut osc_gap) = (0.0f64, 0.0f64, true, 0.0f64);
        for i in 0..4 {
            let h = field(&m, i % 2 == 0, false, &mut rng);
            let r = homogenize(&base, &base, &h, 64, 1e-9, 4).unwrap();
            let c1 = r.c_over_k[0];
            dev = dev.max(r.c_over_k.iter().map(|c| (c - c1).abs()).fold(0.0, f64::max));
            // oracle: brute-force maximum over the invariant's own lattice
            let max_h = base.points().iter().map(|p| h.value(0.0, p.as_slice())).fold(f64::NEG_INFINITY, f64::max);
            zeta_err = zeta_err.max((r.zeta_value - max_h).abs());
            monotone &= r.fekete_running_min.windows(2).all(|w| w[1] <= w[0]) && r.k_sequence.len() == 64;
            monotone &= r.subadditivity_violations.is_empty();
            osc_gap = osc_gap.max((r.osc_displayed - r.osc_simplified).abs());
        }
        ok &= dev <= 1e-9 && zeta_err <= 1e-9 && monotone;
        parts.push(format!("{} deviation {dev:.1e} |zeta - max h| {zeta_err:.1e} fekete monotone {monotone} osc gap {osc_gap:.1e}", m.name()));
    }
    verdict(ok, parts.join("; "))
}

fn status(r: &[AxiomReport], a: Axiom) -> AxiomStatus {
    r.iter().find(|x| x.axiom_id == a).expect("one report per axiom").status
}

fn quasistates() -> Verdict {
    let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
    let arc = ClosedSetSpec::arc(0, 1.0, 0.5);
    let witness = VanishingWitness {
        label: "bump on arc".into(),
        f: FnHamiltonian::autonomous(|x: &[f64]| bump((contact_lab::scalar::wrap_diff(x[0] - 1.0) / 0.5).powi(2))).shared(),
        support: arc.clone(),
        displacement: Arc::new(ReebShift { model: s1.clone(), shift: PI }),
        samples: CoordBox::of_model(&s1).sample_in(&s1, &arc, 50, 20, 1),
        gap: 0.1,
    };
    let cfg = AuditConfig::default();
    let r = audit(&ReebMean::new(&s1, 64), &s1, &cfg, &[witness]).unwrap();
    let vanishing = r.iter().find(|x| x.axiom_id == Axiom::Vanishing).unwrap();
    let s1_ok = Axiom::ALL
        .iter()
        .all(|&a| status(&r, a) == if a == Axiom::Vanishing { AxiomStatus::Vacuous } else { AxiomStatus::Pass })
        && vanishing.note.is_some();

    let t3 = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
    let r = audit(&ReebMean::new(&t3, 12), &t3, &cfg, &[]).unwrap();
    let t3_ok = [Axiom::Normalization, Axiom::Stability, Axiom::Homogeneity, Axiom::Triangle]
        .iter()
        .all(|&a| status(&r, a) == AxiomStatus::Pass)
        && r.iter().all(|x| x.status != AxiomStatus::Fail);

    let caught: Vec<(QuasiStateViolation, usize)> = QuasiStateViolation::ALL
        .iter()
        .map(|&v| {
            let r = audit(&quasistate_violator(&t3, 12, v), &t3, &cfg, &[]).unwrap();
            (v, r.iter().filter(|x| x.status == AxiomStatus::Fail).count())
        })
        .collect();
    verdict(
        s1_ok && t3_ok && caught.iter().all(|(_, n)| *n >= 1),
        format!("S1 circle-mean all pass with vacuous vanishing: {s1_ok}; T3 theta-mean: {t3_ok}; failing axioms per violator {caught:?}"),
    )
}

fn band(a: f64, b: f64) -> ClosedSetSpec<f64> {
    ClosedSetSpec::arc_between(2, a, b)
}

fn quasimeasures() -> Verdict {
    let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
    let cfg = TauConfig::default();
    let zeta = ReebMean::with_counts(&m, &[2, 2, cfg.basis_nodes]);
    let whole = tau(&zeta, &m, &ClosedSetSpec::whole(), &cfg).unwrap();
    let empty = tau(&zeta, &m, &ClosedSetSpec::empty(), &cfg).unwrap();
    let quarter = tau(&zeta, &m, &band(0.0, FRAC_PI_2), &cfg).unwrap();
    // oracle: the hat optimum is 1 on the θ-nodes inside the band and 0 elsewhere
    let n = cfg.basis_nodes;
    let nodes_in = (0..n).filter(|&j| (j as f64) * TAU / n as f64 <= FRAC_PI_2 + 1e-12).count();
    let oracle = nodes_in as f64 / n as f64;
    let gap = quarter.lp.map_or(f64::INFINITY, |c| c.duality_gap);
    let band_ok = (quarter.value - 0.25).abs() <= 0.01 && (quarter.value - oracle).abs() <= 1e-12 && quarter.tight && gap <= 1e-8;

    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let nested: Vec<_> = (0..20)
        .map(|_| {
            let a = rng.gen_range(0.0..TAU);
            let w = rng.gen_range(0.1..2.5);
            let extra = rng.gen_range(0.0..2.0);
            (band(a, a + w), band(a - extra * 0.5, a + w + extra * 0.5))
        })
        .collect();
    let suite = MeasureSuite { nested, subadditivity: Vec::new(), tolerance: 1e-9 };
    let checks = check_quasimeasure_axioms(&zeta, &m, &suite, &cfg).unwrap();
    let mono = checks.iter().filter(|c| c.axiom == "monotonicity").collect::<Vec<_>>();
    let mono_ok = mono.len() == 20 && mono.iter().all(|c| c.status == MeasureStatus::Pass);

    let mut worst_tight = 0.0f64;
    for (a, b) in [((0.0, 1.0), (2.0, 3.0)), ((0.5, 1.5), (3.0, 5.0)), ((4.0, 4.2), (5.0, 6.0))] {
        let c = check_subadditivity(&zeta, &m, &[band(a.0, a.1), band(b.0, b.1)], &cfg, 0.01).unwrap();
        worst_tight = worst_tight.max((c.rhs - c.lhs).abs());
    }
    let ok = whole.value == 1.0 && empty.value == 0.0 && band_ok && mono_ok && worst_tight <= 0.01;
    verdict(
        ok,
        format!(
            "tau(M) = {}, tau(empty) = {}, band tau = {:.6} (oracle {oracle:.6}, gap {gap:.1e}); monotone on {} pairs: {mono_ok}; disjoint-band defect {worst_tight:.1e}",
            whole.value,
            empty.value,
            quarter.value,
            mono.len()
        ),
    )
}

fn big_fibre() -> Verdict {
    let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
    let cfg = BigFibreConfig::default();
    let zeta = ReebMean::with_counts(&m, &[2, 2, cfg.tau.basis_nodes]);
    let f = angle_map(&m).unwrap();
    let v = big_fibre_experiment(&zeta, &m, &f, &arc_cover(4, 1e-3), &[], &cfg).unwrap();
    let ok = (v.sum - 1.0).abs() <= 0.04 && v.candidate_certified && v.candidate_tau >= 0.25 - 0.01 && v.chain_holds;
    verdict(
        ok,
        format!(
            "sum {:.6} over {} arcs, tau(M) = {}, candidate {} with tau {:.6}",
            v.sum,
            v.k,
            v.tau_whole,
            v.candidate.as_deref().unwrap_or("none"),
            v.candidate_tau
        ),
    )
}

fn run_cli(config: &Path, out: &Path, workers: &str) -> (i32, Vec<(String, Vec<u8>)>) {
    let status = Command::new(env!("CARGO_BIN_EXE_contact-lab"))
        .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("CONTACT_LAB_WORKERS", workers)
        .output()
        .expect("binary runs");
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    (status.status.code().unwrap_or(-1), files)
}

fn determinism() -> Verdict {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["verify-dynamics-t3", "translated-s1", "audit-s1", "audit-t3-violators", "quasimeasure-t3", "big-fibre-t3"] {
        let cfg = configs.join(format!("{name}.toml"));
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (code_a, files_a) = run_cli(&cfg, a.path(), "1");
        let (code_b, files_b) = run_cli(&cfg, b.path(), "3");
        let same = code_a == code_b && !files_a.is_empty() && files_a == files_b;
        ok &= same;
        parts.push(format!("{name} {} files identical: {same}", files_a.len()));
    }
    verdict(ok, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("group law of the sharp product", group_law),
        ("conformal factor", conformal),
        ("strictness equivalence", strictness),
        ("translated-point invariance on the cylinder", cylinder),
        ("spectral contract", contract),
        ("homogenization", homogenization),
        ("quasi-state audit", quasistates),
        ("quasi-measure", quasimeasures),
        ("big-fibre experiment", big_fibre),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id.ends_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.passed);
        println!(
            "{id} {} ({name}): {} [{:.1}s]",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
