//! Partial contact quasi-state axioms as an executable audit.
//!
//! A functional ζ on autonomous fields is checked against six axioms:
//! normalization, stability on strict pairs, positive homogeneity,
//! invariance under strict conjugation, vanishing on strict functions with
//! displaceable support and subadditivity on Poisson-commuting strict pairs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{conjugate_hamiltonian, is_strict, poisson_bracket, DynMap, IsotopyMap, IsotopySpec};
use crate::error::{LabError, Result};
use crate::generators::{random_hamiltonian, GeneratorOptions};
use crate::hamiltonian::{constant, scaled, sum, DynHamiltonian, Hamiltonian};
use crate::manifold::{ChartPoint, ContactModel, ModelKind, Vector};
use crate::scalar::Real;
use crate::sets::ClosedSetSpec;
use crate::spectral::{homogenize, model_max_integral, MaxIntegral};
use crate::translated::displacement_check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Homogenized,
    Model,
    InjectedViolator,
}

/// A functional on autonomous scalar fields.
pub trait QuasiStateFunctional<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn provenance(&self) -> Provenance;

    fn evaluate(&self, h: &DynHamiltonian<T>) -> Result<T>;

    /// Whether `ζ` is linear in `h`, which turns set-function minimization into an LP.
    fn is_linear(&self) -> bool {
        false
    }
}

pub type DynQuasiState<T> = Arc<dyn QuasiStateFunctional<T>>;

/// Lattice mean of `h`: the circle mean on `S1_CIRCLE` and the θ-mean of the
/// Reeb-invariant reduction on `T3_UNIT_COTANGENT`.
///
/// On the torus the θ-average of fibre means is the mean over the whole
/// lattice, so both are computed the same way.
#[derive(Debug, Clone)]
pub struct ReebMean<T> {
    name: &'static str,
    points: Arc<Vec<ChartPoint<T>>>,
}

impl<T: Real> ReebMean<T> {
    pub fn new(model: &ContactModel<T>, n: usize) -> Self {
        Self::with_counts(model, &vec![n; model.dim()])
    }

    /// Mean over `model.lattice_with(counts)`.
    pub fn with_counts(model: &ContactModel<T>, counts: &[usize]) -> Self {
        let name = match model.kind() {
            ModelKind::S1Circle => "circle-mean",
            ModelKind::T3UnitCotangent => "theta-mean",
            ModelKind::R3Standard => "box-mean",
        };
        Self { name, points: Arc::new(model.lattice_with(counts)) }
    }

    pub fn points(&self) -> &[ChartPoint<T>] {
        &self.points
    }

    fn mean(&self, h: &dyn Hamiltonian<T>) -> T {
        let s: T = self.points.iter().map(|p| h.value(T::zero(), p.as_slice())).sum();
        s / T::from_usize_lossy(self.points.len())
    }

    fn max(&self, h: &dyn Hamiltonian<T>) -> T {
        self.points.iter().map(|p| h.value(T::zero(), p.as_slice())).fold(T::neg_infinity(), T::max)
    }
}

impl<T: Real> QuasiStateFunctional<T> for ReebMean<T> {
    fn name(&self) -> &str {
        self.name
    }

    fn provenance(&self) -> Provenance {
        Provenance::Model
    }

    fn evaluate(&self, h: &DynHamiltonian<T>) -> Result<T> {
        Ok(self.mean(h.as_ref()))
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// `ζ(h) = lim c(kh)/k` for the max-integral invariant.
#[derive(Clone)]
pub struct HomogenizedMaxIntegral<T> {
    pub invariant: MaxIntegral<T>,
    pub k_max: usize,
    pub tolerance: T,
    pub reeb_shifts: usize,
}

impl<T: Real> HomogenizedMaxIntegral<T> {
    pub fn new(model: &ContactModel<T>, n: usize) -> Self {
        Self { invariant: model_max_integral(model, n), k_max: 16, tolerance: T::tol_floor(1e-9), reeb_shifts: 4 }
    }
}

impl<T: Real> QuasiStateFunctional<T> for HomogenizedMaxIntegral<T> {
    fn name(&self) -> &str {
        "homogenized-max-integral"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Homogenized
    }

    fn evaluate(&self, h: &DynHamiltonian<T>) -> Result<T> {
        let r = homogenize(&self.invariant, &self.invariant, h, self.k_max, self.tolerance, self.reeb_shifts)?;
        Ok(r.zeta_value)
    }
}

/// Deliberately broken functionals for audit self-tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiStateViolation {
    /// `2 · mean`: breaks normalization.
    DoubledMean,
    /// `mean · |mean|`: breaks homogeneity.
    SquaredMean,
    /// `3 mean − 2 max`: not monotone, breaks stability.
    NonMonotone,
}

impl QuasiStateViolation {
    pub const ALL: [QuasiStateViolation; 3] =
        [QuasiStateViolation::DoubledMean, QuasiStateViolation::SquaredMean, QuasiStateViolation::NonMonotone];
}

#[derive(Debug, Clone)]
pub struct QuasiStateViolator<T> {
    pub base: ReebMean<T>,
    pub violation: QuasiStateViolation,
}

impl<T: Real> QuasiStateFunctional<T> for QuasiStateViolator<T> {
    fn name(&self) -> &str {
        match self.violation {
            QuasiStateViolation::DoubledMean => "violator-doubled-mean",
            QuasiStateViolation::SquaredMean => "violator-squared-mean",
            QuasiStateViolation::NonMonotone => "violator-non-monotone",
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::InjectedViolator
    }

    fn evaluate(&self, h: &DynHamiltonian<T>) -> Result<T> {
        let m = self.base.mean(h.as_ref());
        Ok(match self.violation {
            QuasiStateViolation::DoubledMean => m + m,
            QuasiStateViolation::SquaredMean => m * m.abs(),
            QuasiStateViolation::NonMonotone => T::lit(3.0) * m - T::lit(2.0) * self.base.max(h.as_ref()),
        })
    }
}

pub fn quasistate_violator<T: Real>(
    model: &ContactModel<T>,
    n: usize,
    violation: QuasiStateViolation,
) -> QuasiStateViolator<T> {
    QuasiStateViolator { base: ReebMean::new(model, n), violation }
}

/// Autonomous field whose values are cached by coordinates, for expensive
/// compositions such as `h ∘ φ` that are evaluated repeatedly on one lattice.
struct Memoized<T> {
    inner: DynHamiltonian<T>,
    cache: Mutex<HashMap<[u64; 4], T>>,
}

impl<T: Real> Hamiltonian<T> for Memoized<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        let mut key = [0u64; 4];
        for (k, v) in key.iter_mut().zip(x) {
            *k = v.as_f64().to_bits();
        }
        if let Some(&v) = self.cache.lock().expect("memo lock").get(&key) {
            return v;
        }
        let v = self.inner.value(t, x);
        self.cache.lock().expect("memo lock").insert(key, v);
        v
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        self.inner.differential(t, x)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

fn memoized<T: Real>(h: DynHamiltonian<T>) -> DynHamiltonian<T> {
    Arc::new(Memoized { inner: h, cache: Mutex::new(HashMap::new()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Normalization,
    Stability,
    Homogeneity,
    Conjugacy,
    Vanishing,
    Triangle,
}

impl Axiom {
    pub const ALL: [Axiom; 6] =
        [Axiom::Normalization, Axiom::Stability, Axiom::Homogeneity, Axiom::Conjugacy, Axiom::Vanishing, Axiom::Triangle];

    pub fn id(self) -> &'static str {
        match self {
            Axiom::Normalization => "normalization",
            Axiom::Stability => "stability",
            Axiom::Homogeneity => "homogeneity",
            Axiom::Conjugacy => "conjugacy",
            Axiom::Vanishing => "vanishing",
            Axiom::Triangle => "triangle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AxiomStatus {
    Pass,
    Fail,
    /// Every admissible input is trivial, so the axiom holds for no informative reason.
    Vacuous,
    NotChecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomFailure {
    pub inputs: String,
    /// `rhs − lhs` of the violated inequality (negative).
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom_id: Axiom,
    pub trials: usize,
    /// Generated inputs discarded because they failed a hypothesis gate.
    pub gated: usize,
    pub failures: Vec<AxiomFailure>,
    pub passed: bool,
    pub status: AxiomStatus,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub note: Option<String>,
}

impl AxiomReport {
    fn from_margins(axiom: Axiom, tolerance: f64, margins: Vec<(String, f64)>, gated: usize) -> Self {
        let trials = margins.len();
        let worst_margin = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        let failures: Vec<AxiomFailure> = margins
            .into_iter()
            .filter(|(_, m)| !(*m >= -tolerance))
            .map(|(inputs, margin)| AxiomFailure { inputs, margin })
            .collect();
        let passed = failures.is_empty();
        let status = if trials == 0 {
            AxiomStatus::NotChecked
        } else if passed {
            AxiomStatus::Pass
        } else {
            AxiomStatus::Fail
        };
        Self { axiom_id: axiom, trials, gated, failures, passed, status, tolerance, worst_margin, note: None }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn vacuous(axiom: Axiom, tolerance: f64, trials: usize, note: impl Into<String>) -> Self {
        Self {
            axiom_id: axiom,
            trials,
            gated: 0,
            failures: Vec::new(),
            passed: true,
            status: AxiomStatus::Vacuous,
            tolerance,
            worst_margin: f64::INFINITY,
            note: Some(note.into()),
        }
    }
}

/// A strict `f` whose support lies in `support`, which `displacement` displaces.
#[derive(Clone)]
pub struct VanishingWitness<T> {
    pub label: String,
    pub f: DynHamiltonian<T>,
    pub support: ClosedSetSpec<T>,
    pub displacement: DynMap<T>,
    pub samples: Vec<ChartPoint<T>>,
    pub gap: T,
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Lattice nodes per axis for `min`/`max` in the stability axiom.
    pub lattice: usize,
    pub generator: GeneratorOptions,
    pub conjugacy_trials: usize,
    pub flow_tolerance: f64,
    pub bracket_probes: usize,
    pub bracket_tolerance: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 0,
            tolerance: 1e-6,
            lattice: 12,
            generator: GeneratorOptions { time_dependent: false, ..Default::default() },
            conjugacy_trials: 3,
            flow_tolerance: 1e-10,
            bracket_probes: 64,
            bracket_tolerance: 1e-8,
        }
    }
}

fn trial_rng(seed: u64, axiom: Axiom, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((axiom as u64 + 1) << 48) ^ trial as u64)
}

fn field<T: Real>(model: &ContactModel<T>, strict: bool, cfg: &AuditConfig, rng: &mut ChaCha8Rng) -> DynHamiltonian<T> {
    Arc::new(random_hamiltonian(model, strict, &cfg.generator, rng))
}

fn extrema<T: Real>(points: &[ChartPoint<T>], h: &dyn Hamiltonian<T>) -> (T, T) {
    points.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
        let v = h.value(T::zero(), p.as_slice());
        (lo.min(v), hi.max(v))
    })
}

/// Largest `|{f, g}|`, `|{f, 1}|` and `|{g, 1}|` over random probes.
pub fn bracket_defect<T: Real>(
    model: &ContactModel<T>,
    f: &dyn Hamiltonian<T>,
    g: &dyn Hamiltonian<T>,
    probes: usize,
    seed: u64,
) -> Result<T> {
    let one = constant(T::one());
    let mut worst = T::zero();
    for p in model.sample(probes, seed) {
        let x = p.as_slice();
        for v in [
            poisson_bracket(model, f, g, T::zero(), x)?,
            poisson_bracket(model, f, one.as_ref(), T::zero(), x)?,
            poisson_bracket(model, g, one.as_ref(), T::zero(), x)?,
        ] {
            if !(v.abs() <= worst) {
                worst = v.abs();
            }
        }
    }
    Ok(worst)
}

fn margin_or_nan<T: Real>(v: Result<T>) -> f64 {
    v.map(|x| x.as_f64()).unwrap_or(f64::NAN)
}

/// Runs every axiom on `zeta`; witnesses drive the vanishing axiom.
pub fn audit<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    cfg: &AuditConfig,
    witnesses: &[VanishingWitness<T>],
) -> Result<Vec<AxiomReport>> {
    let tol = cfg.tolerance;
    let points = model.lattice(cfg.lattice);
    let mut reports = Vec::with_capacity(6);

    let one = constant(T::one());
    let normalization = vec![("h = 1".to_string(), -margin_or_nan(zeta.evaluate(&one).map(|v| (v - T::one()).abs())))];
    reports.push(AxiomReport::from_margins(Axiom::Normalization, tol, normalization, 0));

    let stability: Vec<(String, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, Axiom::Stability, i);
            let f = field(model, true, cfg, &mut rng);
            let g = field(model, true, cfg, &mut rng);
            let diff = sum(vec![f.clone(), scaled(&g, -T::one())]);
            let (lo, hi) = extrema(&points, diff.as_ref());
            let m = match (zeta.evaluate(&f), zeta.evaluate(&g)) {
                (Ok(a), Ok(b)) => ((a - b - lo).min(hi - (a - b))).as_f64(),
                _ => f64::NAN,
            };
            (format!("strict pair {i}"), m)
        })
        .collect();
    reports.push(AxiomReport::from_margins(Axiom::Stability, tol, stability, 0));

    let homogeneity: Vec<(String, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, Axiom::Homogeneity, i);
            let f = field(model, false, cfg, &mut rng);
            let s = T::lit(rng.gen_range(0.1..5.0));
            let m = match (zeta.evaluate(&scaled(&f, s)), zeta.evaluate(&f)) {
                (Ok(a), Ok(b)) => {
                    let scale = T::one().max((s * b).abs());
                    (-(a - s * b).abs() / scale).as_f64()
                }
                _ => f64::NAN,
            };
            (format!("s = {s}, field {i}"), m)
        })
        .collect();
    reports.push(AxiomReport::from_margins(Axiom::Homogeneity, tol, homogeneity, 0));

    let conjugacy: Vec<(String, f64)> = (0..cfg.conjugacy_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, Axiom::Conjugacy, i);
            let h = field(model, false, cfg, &mut rng);
            let k = field(model, true, cfg, &mut rng);
            let phi: DynMap<T> = Arc::new(IsotopyMap::time_one(IsotopySpec::new(model, k, T::lit(cfg.flow_tolerance))));
            let hphi = memoized(conjugate_hamiltonian(&h, phi, model));
            let m = match (zeta.evaluate(&hphi), zeta.evaluate(&h)) {
                (Ok(a), Ok(b)) => (-(a - b).abs()).as_f64(),
                _ => f64::NAN,
            };
            (format!("field {i} under strict time-one map {i}"), m)
        })
        .collect();
    reports.push(
        AxiomReport::from_margins(Axiom::Conjugacy, tol, conjugacy, 0)
            .with_note("strict maps are time-one maps of generated strict isotopies; smooth fields only"),
    );

    reports.push(vanishing(zeta, model, cfg, witnesses, &points)?);

    let mut gated = 0;
    let mut triangle = Vec::new();
    for i in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, Axiom::Triangle, i);
        let f = field(model, true, cfg, &mut rng);
        let g = field(model, true, cfg, &mut rng);
        let defect = bracket_defect(model, f.as_ref(), g.as_ref(), cfg.bracket_probes, rng.gen())?;
        if !(defect.as_f64() <= cfg.bracket_tolerance) {
            gated += 1;
            continue;
        }
        let fg = sum(vec![f.clone(), g.clone()]);
        let m = match (zeta.evaluate(&fg), zeta.evaluate(&f), zeta.evaluate(&g)) {
            (Ok(a), Ok(b), Ok(c)) => (b + c - a).as_f64(),
            _ => f64::NAN,
        };
        triangle.push((format!("commuting strict pair {i}"), m));
    }
    reports.push(
        AxiomReport::from_margins(Axiom::Triangle, tol, triangle, gated)
            .with_note(format!("pairs gated on Poisson brackets <= {:e}", cfg.bracket_tolerance)),
    );
    Ok(reports)
}

fn vanishing<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    cfg: &AuditConfig,
    witnesses: &[VanishingWitness<T>],
    points: &[ChartPoint<T>],
) -> Result<AxiomReport> {
    let tol = cfg.tolerance;
    let mut margins = Vec::new();
    let mut ignored = 0;
    for w in witnesses {
        let rep = displacement_check(w.displacement.as_ref(), &w.support, &w.samples, w.gap)?;
        if !rep.displaces || rep.samples_in_set == 0 {
            return Err(LabError::WitnessInvalid(w.label.clone()));
        }
        let outside = points.iter().filter(|p| !w.support.contains(p.as_slice()));
        if outside.clone().any(|p| !(w.f.value(T::zero(), p.as_slice()).abs() <= T::lit(tol))) {
            return Err(LabError::WitnessInvalid(w.label.clone()));
        }
        if !is_strict(model, w.f.as_ref(), cfg.bracket_probes, cfg.seed).strict {
            ignored += 1;
            continue;
        }
        let (lo, hi) = extrema(points, w.f.as_ref());
        if lo.abs().max(hi.abs()) <= T::lit(tol) {
            ignored += 1;
            continue;
        }
        margins.push((w.label.clone(), -margin_or_nan(zeta.evaluate(&w.f).map(T::abs))));
    }
    if margins.is_empty() {
        if model.kind() == ModelKind::S1Circle {
            return Ok(AxiomReport::vacuous(
                Axiom::Vanishing,
                tol,
                witnesses.len(),
                "strict functions on the circle are constant, so a strict function with displaceable \
                 (proper) support is identically zero",
            ));
        }
        if ignored > 0 {
            return Ok(AxiomReport::vacuous(
                Axiom::Vanishing,
                tol,
                witnesses.len(),
                "every supplied witness is non-strict or identically zero",
            ));
        }
        return Ok(AxiomReport::from_margins(Axiom::Vanishing, tol, margins, 0)
            .with_note("no displacement witnesses supplied"));
    }
    Ok(AxiomReport::from_margins(Axiom::Vanishing, tol, margins, ignored)
        .with_note("witnesses certified by the displacement check"))
}

/// Whether every non-vacuous, checked axiom passed.
pub fn audit_passed(reports: &[AxiomReport]) -> bool {
    reports.iter().all(|r| r.status != AxiomStatus::Fail)
}

/// Trigonometric interpolant in θ, constant along the other coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleInterpolant<T> {
    pub axis: usize,
    pub mean: T,
    /// `(a_k, b_k)` for `a_k cos kθ + b_k sin kθ`, `k = 1, 2, …`.
    pub harmonics: Vec<(T, T)>,
}

impl<T: Real> AngleInterpolant<T> {
    /// Interpolates equispaced samples `values[j]` at `θ_j = 2πj/n`.
    pub fn from_samples(axis: usize, values: &[T]) -> Self {
        let n = values.len();
        let nf = T::from_usize_lossy(n);
        let mean = values.iter().copied().sum::<T>() / nf;
        let kmax = (n.max(1) - 1) / 2;
        let harmonics = (1..=kmax)
            .map(|k| {
                let (mut a, mut b) = (T::zero(), T::zero());
                for (j, &v) in values.iter().enumerate() {
                    let th = T::TAU() * T::from_usize_lossy(k * j % n) / nf;
                    a += v * th.cos();
                    b += v * th.sin();
                }
                let two = T::lit(2.0);
                (two * a / nf, two * b / nf)
            })
            .collect();
        Self { axis, mean, harmonics }
    }
}

impl<T: Real> Hamiltonian<T> for AngleInterpolant<T> {
    fn value(&self, _t: T, x: &[T]) -> T {
        let th = x[self.axis];
        self.harmonics.iter().enumerate().fold(self.mean, |acc, (i, &(a, b))| {
            let (s, c) = (T::from_usize_lossy(i + 1) * th).sin_cos();
            acc + a * c + b * s
        })
    }

    fn differential(&self, _t: T, x: &[T]) -> Vector<T> {
        let th = x[self.axis];
        let mut d: Vector<T> = x.iter().map(|_| T::zero()).collect();
        d[self.axis] = self.harmonics.iter().enumerate().fold(T::zero(), |acc, (i, &(a, b))| {
            let k = T::from_usize_lossy(i + 1);
            let (s, c) = (k * th).sin_cos();
            acc + k * (b * c - a * s)
        });
        d
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

pub struct ReebReduction<T> {
    pub field: DynHamiltonian<T>,
    /// `max |h − reduction|` over the sample lattice.
    pub deviation: T,
}

/// Nodes used by [`reduce_to_reeb_invariant`]: angle nodes and nodes per fibre axis.
pub const REDUCTION_NODES: (usize, usize) = (64, 32);

/// Averages an autonomous `h` over Reeb orbits.
///
/// On the torus a Reeb orbit of irrational slope is dense in its `(q1, q2)`
/// fibre, so its time average is the fibre mean; the fibre means are
/// interpolated in θ. On the circle the result is the constant mean.
pub fn reduce_to_reeb_invariant<T: Real>(model: &ContactModel<T>, h: &dyn Hamiltonian<T>) -> Result<ReebReduction<T>> {
    if !h.is_autonomous() {
        return Err(LabError::Invalid("Reeb reduction needs an autonomous field".into()));
    }
    let (n_theta, n_fibre) = REDUCTION_NODES;
    match model.kind() {
        ModelKind::S1Circle => {
            let pts = model.lattice(n_theta * 4);
            let vals: Vec<T> = pts.iter().map(|p| h.value(T::zero(), p.as_slice())).collect();
            let mean = vals.iter().copied().sum::<T>() / T::from_usize_lossy(vals.len());
            let deviation = vals.iter().fold(T::zero(), |w, &v| w.max((v - mean).abs()));
            Ok(ReebReduction { field: constant(mean), deviation })
        }
        ModelKind::T3UnitCotangent => {
            let pts = model.lattice_with(&[n_fibre, n_fibre, n_theta]);
            let vals: Vec<T> = pts.iter().map(|p| h.value(T::zero(), p.as_slice())).collect();
            // last axis (θ) runs fastest
            let mut means = vec![T::zero(); n_theta];
            for (i, &v) in vals.iter().enumerate() {
                means[i % n_theta] += v;
            }
            let per = T::from_usize_lossy(n_fibre * n_fibre);
            for m in means.iter_mut() {
                *m /= per;
            }
            let interp = AngleInterpolant::from_samples(2, &means);
            let deviation = pts
                .iter()
                .zip(&vals)
                .fold(T::zero(), |w, (p, &v)| w.max((v - interp.value(T::zero(), p.as_slice())).abs()));
            Ok(ReebReduction { field: Arc::new(interp), deviation })
        }
        ModelKind::R3Standard => Err(LabError::Invalid("Reeb reduction is defined on T3 and S1 only".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ReebShift;
    use crate::hamiltonian::{bump, FnHamiltonian};
    use crate::sets::CoordBox;
    use std::f64::consts::PI;

    fn t3() -> ContactModel<f64> {
        ContactModel::new(ModelKind::T3UnitCotangent)
    }

    fn s1() -> ContactModel<f64> {
        ContactModel::new(ModelKind::S1Circle)
    }

    fn status(r: &[AxiomReport], a: Axiom) -> AxiomStatus {
        r.iter().find(|x| x.axiom_id == a).unwrap().status
    }

    fn s1_bump_witness(m: &ContactModel<f64>) -> VanishingWitness<f64> {
        let arc = ClosedSetSpec::arc(0, 1.0, 0.5);
        VanishingWitness {
            label: "bump on arc".into(),
            f: FnHamiltonian::autonomous(|x: &[f64]| bump((crate::scalar::wrap_diff(x[0] - 1.0) / 0.5).powi(2)))
                .shared(),
            support: arc.clone(),
            displacement: Arc::new(ReebShift { model: m.clone(), shift: PI }),
            samples: CoordBox::of_model(m).sample_in(m, &arc, 50, 20, 1),
            gap: 0.1,
        }
    }

    #[test]
    fn circle_mean_passes_with_vacuous_vanishing() {
        let m = s1();
        let zeta = ReebMean::new(&m, 64);
        let zero = VanishingWitness { f: constant(0.0), label: "zero".into(), ..s1_bump_witness(&m) };
        let r = audit(&zeta, &m, &AuditConfig::default(), &[s1_bump_witness(&m), zero]).unwrap();
        for a in Axiom::ALL {
            let want = if a == Axiom::Vanishing { AxiomStatus::Vacuous } else { AxiomStatus::Pass };
            assert_eq!(status(&r, a), want, "{a:?}: {r:?}");
        }
        assert!(audit_passed(&r));
    }

    #[test]
    fn max_on_circle_gets_a_vacuous_vanishing_axiom() {
        let m = s1();
        let zeta = HomogenizedMaxIntegral::new(&m, 64);
        let cfg = AuditConfig { trials: 4, conjugacy_trials: 1, ..Default::default() };
        let r = audit(&zeta, &m, &cfg, &[s1_bump_witness(&m)]).unwrap();
        assert_eq!(status(&r, Axiom::Vanishing), AxiomStatus::Vacuous);
    }

    #[test]
    fn invalid_witness_is_rejected() {
        let m = s1();
        let w = VanishingWitness { displacement: Arc::new(ReebShift { model: m.clone(), shift: 0.1 }), ..s1_bump_witness(&m) };
        let zeta = ReebMean::new(&m, 64);
        assert!(matches!(audit(&zeta, &m, &AuditConfig::default(), &[w]), Err(LabError::WitnessInvalid(_))));
    }

    #[test]
    fn theta_mean_passes_on_the_torus() {
        let m = t3();
        let zeta = ReebMean::new(&m, 12);
        let r = audit(&zeta, &m, &AuditConfig::default(), &[]).unwrap();
        for a in [Axiom::Normalization, Axiom::Stability, Axiom::Homogeneity, Axiom::Conjugacy, Axiom::Triangle] {
            assert_eq!(status(&r, a), AxiomStatus::Pass, "{a:?}: {r:?}");
        }
        assert_eq!(status(&r, Axiom::Vanishing), AxiomStatus::NotChecked);
        assert_eq!(r.iter().find(|x| x.axiom_id == Axiom::Triangle).unwrap().gated, 0);
    }

    #[test]
    fn violators_fail_their_axioms() {
        let m = t3();
        let cfg = AuditConfig { conjugacy_trials: 1, ..Default::default() };
        for (v, a) in [
            (QuasiStateViolation::DoubledMean, Axiom::Normalization),
            (QuasiStateViolation::SquaredMean, Axiom::Homogeneity),
            (QuasiStateViolation::NonMonotone, Axiom::Stability),
        ] {
            let r = audit(&quasistate_violator(&m, 12, v), &m, &cfg, &[]).unwrap();
            assert_eq!(status(&r, a), AxiomStatus::Fail, "{v:?}");
            assert!(!audit_passed(&r));
        }
    }

    #[test]
    fn audit_is_deterministic() {
        let m = t3();
        let zeta = quasistate_violator(&m, 8, QuasiStateViolation::NonMonotone);
        let cfg = AuditConfig { trials: 6, conjugacy_trials: 1, lattice: 8, ..Default::default() };
        let a = serde_json::to_string(&audit(&zeta, &m, &cfg, &[]).unwrap()).unwrap();
        let b = serde_json::to_string(&audit(&zeta, &m, &cfg, &[]).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reduction_of_strict_fields_is_the_identity() {
        let m = t3();
        let h = FnHamiltonian::autonomous(|x: &[f64]| 0.3 + (2.0 * x[2]).sin() - 0.4 * x[2].cos()).shared();
        let r = reduce_to_reeb_invariant(&m, h.as_ref()).unwrap();
        assert!(r.deviation <= 1e-8, "{}", r.deviation);
        assert!((r.field.value(0.0, &[0.0, 0.0, 0.77]) - h.value(0.0, &[0.0, 0.0, 0.77])).abs() < 1e-12);
        let d = r.field.differential(0.0, &[1.0, 2.0, 0.5]);
        assert!((d[2] - (2.0 * (1.0f64).cos() + 0.4 * (0.5f64).sin())).abs() < 1e-10);
    }

    #[test]
    fn reduction_matches_long_orbit_averages() {
        let m = t3();
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin() + 0.5 * (x[1] + x[2]).cos() + x[2].sin()).shared();
        let r = reduce_to_reeb_invariant(&m, h.as_ref()).unwrap();
        assert!((r.deviation - 1.5).abs() < 0.05, "{}", r.deviation);
        // oracle: midpoint quadrature of h along a long Reeb orbit of irrational slope
        for &th in &[1.0f64, 2.0, 4.0] {
            let (len, n) = (4000.0, 400_000);
            let (c, s) = (th.cos(), th.sin());
            let avg: f64 = (0..n)
                .map(|i| {
                    let u = len * (i as f64 + 0.5) / n as f64;
                    h.value(0.0, &[0.3 + u * c, 0.1 + u * s, th])
                })
                .sum::<f64>()
                / n as f64;
            let red = r.field.value(0.0, &[0.0, 0.0, th]);
            assert!((avg - red).abs() < 2e-3, "θ = {th}: orbit {avg} vs reduction {red}");
        }
        let sin_q1 = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        let r = reduce_to_reeb_invariant(&m, sin_q1.as_ref()).unwrap();
        assert!((r.deviation - 1.0).abs() < 1e-12);
        assert!(r.field.value(0.0, &[0.0, 0.0, 1.3]).abs() < 1e-12);
    }

    #[test]
    fn reduction_on_the_circle_is_the_mean() {
        let m = s1();
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        let r = reduce_to_reeb_invariant(&m, h.as_ref()).unwrap();
        assert!(r.field.value(0.0, &[0.4]).abs() < 1e-12 && (r.deviation - 1.0).abs() < 1e-12);
        assert!(reduce_to_reeb_invariant(&ContactModel::new(ModelKind::R3Standard), h.as_ref()).is_err());
    }
}
