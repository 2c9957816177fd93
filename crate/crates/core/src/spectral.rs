//! Spectral-invariant contract, the max-integral model invariant, `c̃` and
//! homogenization.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{concat_product, osc_alpha, OscGrid, OscReport};
use crate::error::LabError;
use crate::generators::{random_hamiltonian, GeneratorOptions};
use crate::hamiltonian::{constant, scaled, DynHamiltonian, Hamiltonian};
use crate::manifold::{ChartPoint, ContactModel};
use crate::scalar::Real;

/// Which contract properties an invariant claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct ContractFlags {
    pub normalization: bool,
    pub spectrality: bool,
    pub stability: bool,
    pub triangle: bool,
    pub descent: bool,
}

/// A real-valued invariant of time-dependent Hamiltonians.
pub trait SpectralInvariant<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, h: &dyn Hamiltonian<T>) -> T;

    fn declared_contract(&self) -> ContractFlags {
        ContractFlags::default()
    }
}

pub type DynInvariant<T> = Arc<dyn SpectralInvariant<T>>;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `c(h) = ∫₀¹ max_M h_t dt`, with the maximum over a lattice and the time
/// integral by composite Gauss–Legendre split at the breakpoints of `h`.
///
/// Every smooth piece gets the same number of nodes, so the quadrature of a
/// concatenation `g • h` reproduces the quadratures of `g` and `h` node by node.
#[derive(Clone)]
pub struct MaxIntegral<T> {
    model: ContactModel<T>,
    lattice: Vec<usize>,
    points: Arc<Vec<ChartPoint<T>>>,
    panels: usize,
    gl: (Vec<T>, Vec<T>),
}

impl<T: Real> fmt::Debug for MaxIntegral<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaxIntegral")
            .field("model", &self.model.name())
            .field("lattice", &self.lattice)
            .field("panels", &self.panels)
            .field("order", &self.gl.0.len())
            .finish()
    }
}

/// The max-integral model on `model` with `n` lattice nodes per axis.
pub fn model_max_integral<T: Real>(model: &ContactModel<T>, n: usize) -> MaxIntegral<T> {
    MaxIntegral::new(model, vec![n; model.dim()], 1, 8)
}

impl<T: Real> MaxIntegral<T> {
    pub fn new(model: &ContactModel<T>, lattice: Vec<usize>, panels: usize, order: usize) -> Self {
        assert!(panels >= 1 && order >= 1);
        let (x, w) = gauss_legendre(order);
        Self {
            points: Arc::new(model.lattice_with(&lattice)),
            model: model.clone(),
            lattice,
            panels,
            gl: (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect()),
        }
    }

    pub fn model(&self) -> &ContactModel<T> {
        &self.model
    }

    pub fn points(&self) -> &[ChartPoint<T>] {
        &self.points
    }

    /// Quadrature nodes `(t, weight)` for `h` (a single node for autonomous `h`).
    pub fn time_nodes(&self, h: &dyn Hamiltonian<T>) -> Vec<(T, T)> {
        if h.is_autonomous() {
            return vec![(T::zero(), T::one())];
        }
        let mut cuts = vec![T::zero()];
        cuts.extend(h.breakpoints());
        cuts.push(T::one());
        let half = T::lit(0.5);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b - a) / T::from_usize_lossy(self.panels);
            for p in 0..self.panels {
                let lo = a + len * T::from_usize_lossy(p);
                for (&x, &wt) in self.gl.0.iter().zip(&self.gl.1) {
                    out.push((lo + len * half * (x + T::one()), wt * len * half));
                }
            }
        }
        out
    }

    pub fn spatial_max(&self, h: &dyn Hamiltonian<T>, t: T) -> T {
        self.points.iter().map(|p| h.value(t, p.as_slice())).fold(T::neg_infinity(), T::max)
    }

    /// `(max, min)` of `h_t` over the lattice.
    pub fn spatial_extrema(&self, h: &dyn Hamiltonian<T>, t: T) -> (T, T) {
        self.points.iter().map(|p| h.value(t, p.as_slice())).fold((T::neg_infinity(), T::infinity()), |(a, b), v| {
            (a.max(v), b.min(v))
        })
    }

    /// Lipschitz error bar of the lattice maximum: `max ‖dh‖ × half lattice diagonal`.
    pub fn lattice_error(&self, h: &dyn Hamiltonian<T>) -> T {
        let spacing = self.model.lattice_spacing(&self.lattice);
        let half_diag = spacing.iter().map(|&s| s * s).sum::<T>().sqrt() * T::lit(0.5);
        let grad = self
            .time_nodes(h)
            .iter()
            .flat_map(|&(t, _)| self.points.iter().map(move |p| (t, p)))
            .map(|(t, p)| h.differential(t, p.as_slice()).iter().map(|&d| d * d).sum::<T>().sqrt())
            .fold(T::zero(), T::max);
        grad * half_diag
    }

    /// Oscillation grid on this lattice and the time nodes of `h`.
    pub fn osc_grid(&self, h: &dyn Hamiltonian<T>, reeb_shifts: usize) -> OscGrid<T> {
        let mut g = OscGrid::uniform(&self.model, reeb_shifts, 1, 1, true);
        g.times = self.time_nodes(h).into_iter().map(|(t, _)| t).collect();
        g.lattice = self.lattice.clone();
        g
    }

    fn integrate(&self, h: &dyn Hamiltonian<T>, f: impl Fn(T, T, T) -> T) -> T {
        self.time_nodes(h)
            .into_iter()
            .map(|(t, w)| {
                let (max, min) = self.spatial_extrema(h, t);
                w * f(t, max, min)
            })
            .sum()
    }
}

impl<T: Real> SpectralInvariant<T> for MaxIntegral<T> {
    fn name(&self) -> &str {
        "max-integral"
    }

    fn evaluate(&self, h: &dyn Hamiltonian<T>) -> T {
        self.integrate(h, |_, max, _| max)
    }

    fn declared_contract(&self) -> ContractFlags {
        ContractFlags { normalization: true, stability: true, triangle: true, ..Default::default() }
    }
}

/// Deliberately broken invariants for checker self-tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Violation {
    /// `2 ∫ max h_t`: breaks normalization.
    DoubledMax,
    /// `∫ (max h_t + (max h_t − min h_t))`: breaks stability.
    OscillationPenalty,
    /// `∫ 2t · max h_t`: breaks the triangle inequality for concatenations.
    TimeWeighted,
    /// `(∫ max h_t) · |∫ max h_t|`: superadditive along `k h`.
    Squared,
}

impl Violation {
    pub const CONTRACT: [Violation; 3] = [Violation::DoubledMax, Violation::OscillationPenalty, Violation::TimeWeighted];
}

#[derive(Clone)]
pub struct Violator<T> {
    pub base: MaxIntegral<T>,
    pub violation: Violation,
}

impl<T: Real> SpectralInvariant<T> for Violator<T> {
    fn name(&self) -> &str {
        match self.violation {
            Violation::DoubledMax => "violator-doubled-max",
            Violation::OscillationPenalty => "violator-oscillation-penalty",
            Violation::TimeWeighted => "violator-time-weighted",
            Violation::Squared => "violator-squared",
        }
    }

    fn evaluate(&self, h: &dyn Hamiltonian<T>) -> T {
        let two = T::lit(2.0);
        match self.violation {
            Violation::DoubledMax => two * self.base.integrate(h, |_, max, _| max),
            Violation::OscillationPenalty => self.base.integrate(h, |_, max, min| max + (max - min)),
            Violation::TimeWeighted if h.is_autonomous() => self.base.evaluate(h),
            Violation::TimeWeighted => self.base.integrate(h, |t, max, _| two * t * max),
            Violation::Squared => {
                let c = self.base.evaluate(h);
                c * c.abs()
            }
        }
    }

    fn declared_contract(&self) -> ContractFlags {
        self.base.declared_contract()
    }
}

pub fn violator<T: Real>(base: &MaxIntegral<T>, violation: Violation) -> Violator<T> {
    Violator { base: base.clone(), violation }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotChecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property_id: String,
    pub n_trials: usize,
    pub n_failures: usize,
    /// Smallest slack `rhs − lhs` (negative means violated).
    pub worst_margin: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractReport {
    pub invariant: String,
    pub model: String,
    pub properties: Vec<PropertyResult>,
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.status != CheckStatus::Fail)
    }

    pub fn property(&self, id: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.property_id == id)
    }
}

#[derive(Debug, Clone)]
pub struct ContractSuite {
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub reeb_shifts: usize,
    pub generator: GeneratorOptions,
}

impl Default for ContractSuite {
    fn default() -> Self {
        Self { trials: 100, seed: 0, tolerance: 1e-6, reeb_shifts: 4, generator: GeneratorOptions::default() }
    }
}

struct Tally {
    id: &'static str,
    margins: Vec<f64>,
}

impl Tally {
    fn new(id: &'static str) -> Self {
        Self { id, margins: Vec::new() }
    }

    fn finish(self, tol: f64) -> PropertyResult {
        let n_failures = self.margins.iter().filter(|&&m| !(m >= -tol)).count();
        PropertyResult {
            property_id: self.id.to_string(),
            n_trials: self.margins.len(),
            n_failures,
            worst_margin: self.margins.iter().copied().fold(f64::INFINITY, f64::min),
            tolerance: tol,
            status: if n_failures == 0 { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }
}

fn not_checked(id: &str, tol: f64) -> PropertyResult {
    PropertyResult {
        property_id: id.to_string(),
        n_trials: 0,
        n_failures: 0,
        worst_margin: f64::INFINITY,
        tolerance: tol,
        status: CheckStatus::NotChecked,
    }
}

/// Extremes of `h − g` over the lattice of `lattice_of` and the time nodes of both.
fn difference_extrema<T: Real>(lattice_of: &MaxIntegral<T>, h: &dyn Hamiltonian<T>, g: &dyn Hamiltonian<T>) -> (T, T) {
    let mut times: Vec<T> = lattice_of.time_nodes(h).into_iter().chain(lattice_of.time_nodes(g)).map(|(t, _)| t).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut max = T::neg_infinity();
    let mut min = T::infinity();
    for &t in &times {
        for p in lattice_of.points() {
            let d = h.value(t, p.as_slice()) - g.value(t, p.as_slice());
            max = max.max(d);
            min = min.min(d);
        }
    }
    (max, min)
}

/// Checks normalization, stability, the strict triangle inequality and the
/// general triangle inequality with oscillation correction on random trials.
///
/// `lattice` supplies the sample lattice for the right-hand sides; it should be
/// the lattice the invariant itself uses.
pub fn check_contract<T: Real>(
    c: &dyn SpectralInvariant<T>,
    lattice: &MaxIntegral<T>,
    suite: &ContractSuite,
) -> ContractReport {
    use rand::Rng;
    let model = lattice.model();
    let tol = suite.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    struct Trial<T> {
        a: T,
        hs: DynHamiltonian<T>,
        gs: DynHamiltonian<T>,
        hg: DynHamiltonian<T>,
        gg: DynHamiltonian<T>,
    }
    let trials: Vec<Trial<T>> = (0..suite.trials)
        .map(|_| Trial {
            a: T::lit(rng.gen_range(-2.0..2.0)),
            hs: Arc::new(random_hamiltonian(model, true, &suite.generator, &mut rng)),
            gs: Arc::new(random_hamiltonian(model, true, &suite.generator, &mut rng)),
            hg: Arc::new(random_hamiltonian(model, false, &suite.generator, &mut rng)),
            gg: Arc::new(random_hamiltonian(model, false, &suite.generator, &mut rng)),
        })
        .collect();
    let margins: Vec<[f64; 5]> = trials
        .par_iter()
        .map(|tr| {
            let norm = -(c.evaluate(constant(tr.a).as_ref()) - tr.a).abs().as_f64();
            let (ch, cg) = (c.evaluate(tr.hs.as_ref()), c.evaluate(tr.gs.as_ref()));
            let (dmax, dmin) = difference_extrema(lattice, tr.hs.as_ref(), tr.gs.as_ref());
            let upper = (dmax - (ch - cg)).as_f64();
            let lower = ((ch - cg) - dmin).as_f64();
            let tri = (ch + cg - c.evaluate(concat_product(&tr.hs, &tr.gs).as_ref())).as_f64();
            let (chg, cgg) = (c.evaluate(tr.hg.as_ref()), c.evaluate(tr.gg.as_ref()));
            let osc_h = osc_alpha(model, tr.hg.as_ref(), &lattice.osc_grid(tr.hg.as_ref(), suite.reeb_shifts)).displayed;
            let osc_g = osc_alpha(model, tr.gg.as_ref(), &lattice.osc_grid(tr.gg.as_ref(), suite.reeb_shifts)).displayed;
            let general =
                (chg + cgg + T::lit(4.0) * osc_h.max(osc_g) - c.evaluate(concat_product(&tr.hg, &tr.gg).as_ref())).as_f64();
            [norm, upper, lower, tri, general]
        })
        .collect();
    let mut tallies = [
        Tally::new("1-normalization"),
        Tally::new("3-stability-upper"),
        Tally::new("3-stability-lower"),
        Tally::new("4-triangle-strict"),
        Tally::new("triangle-general-osc"),
    ];
    for m in &margins {
        for (t, &v) in tallies.iter_mut().zip(m) {
            t.margins.push(v);
        }
    }
    // spectrality and descent have no finite-dimensional check, declared or not
    let mut properties: Vec<PropertyResult> = tallies.into_iter().map(|t| t.finish(tol)).collect();
    properties.insert(1, not_checked("2-spectrality", tol));
    properties.push(not_checked("5-descent", tol));
    ContractReport { invariant: c.name().to_string(), model: model.name().to_string(), properties }
}

/// `c̃(h) = c(h) + 4 osc_α(h)`, with `osc_α` on the invariant's own lattice.
pub fn c_tilde<T: Real>(c: &dyn SpectralInvariant<T>, lattice: &MaxIntegral<T>, h: &dyn Hamiltonian<T>, reeb_shifts: usize) -> T {
    c.evaluate(h) + T::lit(4.0) * osc_of(lattice, h, reeb_shifts).displayed
}

fn osc_of<T: Real>(lattice: &MaxIntegral<T>, h: &dyn Hamiltonian<T>, reeb_shifts: usize) -> OscReport<T> {
    osc_alpha(lattice.model(), h, &lattice.osc_grid(h, reeb_shifts))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogenizationResult<T> {
    pub zeta_value: T,
    pub k_sequence: Vec<usize>,
    pub c_over_k: Vec<T>,
    pub ctilde_over_k: Vec<T>,
    /// Running minimum of `c̃(kh)/k`; its last entry is the Fekete bound.
    pub fekete_running_min: Vec<T>,
    pub fekete_bound: T,
    /// Pairs `(k, l)` with `c̃((k+l)h) > c̃(kh) + c̃(lh) + tolerance`.
    pub subadditivity_violations: Vec<(usize, usize)>,
    /// Smallest observed `c(kh)/k`.
    pub empirical_lower_envelope: T,
    /// Oscillation of `h` as displayed and in its simplified form.
    pub osc_displayed: T,
    pub osc_simplified: T,
    pub tail_variation: T,
    pub converged: bool,
    pub tolerance: T,
}

/// `homogenize` did not converge; the partial data is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NotConverged<T> {
    pub partial: HomogenizationResult<T>,
}

impl<T: Real> fmt::Display for NotConverged<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c(kh)/k did not converge: tail variation {} exceeds {}",
            self.partial.tail_variation, self.partial.tolerance
        )
    }
}

impl<T: Real> std::error::Error for NotConverged<T> {}

impl<T: Real> From<NotConverged<T>> for LabError {
    fn from(e: NotConverged<T>) -> Self {
        LabError::NotConverged { tail_variation: e.partial.tail_variation.as_f64(), tolerance: e.partial.tolerance.as_f64() }
    }
}

/// `ζ(h) = lim c(kh)/k`, estimated from `k = 1..=k_max`.
pub fn homogenize<T: Real>(
    c: &dyn SpectralInvariant<T>,
    lattice: &MaxIntegral<T>,
    h: &DynHamiltonian<T>,
    k_max: usize,
    tol: T,
    reeb_shifts: usize,
) -> Result<HomogenizationResult<T>, NotConverged<T>> {
    assert!(k_max >= 4, "homogenize needs k_max >= 4");
    let osc = osc_of(lattice, h.as_ref(), reeb_shifts);
    let ks: Vec<usize> = (1..=k_max).collect();
    let c_k: Vec<T> = ks.par_iter().map(|&k| c.evaluate(scaled(h, T::from_usize_lossy(k)).as_ref())).collect();
    let ct_k: Vec<T> = c_k.iter().zip(&ks).map(|(&v, &k)| v + T::lit(4.0) * T::from_usize_lossy(k) * osc.displayed).collect();
    let kf = |k: usize| T::from_usize_lossy(k);
    let c_over_k: Vec<T> = c_k.iter().zip(&ks).map(|(&v, &k)| v / kf(k)).collect();
    let ctilde_over_k: Vec<T> = ct_k.iter().zip(&ks).map(|(&v, &k)| v / kf(k)).collect();
    let mut run = T::infinity();
    let fekete_running_min: Vec<T> = ctilde_over_k
        .iter()
        .map(|&v| {
            run = run.min(v);
            run
        })
        .collect();
    let slack = tol.max(T::epsilon());
    let mut subadditivity_violations = Vec::new();
    for k in 1..=k_max {
        for l in k..=k_max - k {
            if ct_k[k + l - 1] > ct_k[k - 1] + ct_k[l - 1] + slack * kf(k + l) {
                subadditivity_violations.push((k, l));
            }
        }
    }
    let tail_start = k_max - (k_max / 4).max(1);
    let tail = &c_over_k[tail_start..];
    let tmax = tail.iter().copied().fold(T::neg_infinity(), T::max);
    let tmin = tail.iter().copied().fold(T::infinity(), T::min);
    let tail_variation = tmax - tmin;
    let result = HomogenizationResult {
        zeta_value: tail.iter().copied().sum::<T>() / T::from_usize_lossy(tail.len()),
        k_sequence: ks,
        fekete_bound: *fekete_running_min.last().expect("k_max >= 4"),
        empirical_lower_envelope: c_over_k.iter().copied().fold(T::infinity(), T::min),
        c_over_k,
        ctilde_over_k,
        fekete_running_min,
        subadditivity_violations,
        osc_displayed: osc.displayed,
        osc_simplified: osc.simplified,
        tail_variation,
        converged: tail_variation <= tol,
        tolerance: tol,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(NotConverged { partial: result })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::FnHamiltonian;
    use crate::manifold::ModelKind;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 15 is the limit for 8 nodes
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i14 - 2.0 / 15.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn max_integral_examples() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let c = model_max_integral(&s1, 64);
        assert_eq!(c.evaluate(constant(0.3).as_ref()), 0.3);
        let sin = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        assert!((c.evaluate(sin.as_ref()) - 1.0).abs() < 1e-15);
        // ∫ max_θ (t sin θ) dt = 1/2 over t ∈ [0, 1]
        let tsin = FnHamiltonian::time_dependent(|t, x: &[f64]| t * x[0].sin()).shared();
        assert!((c.evaluate(tsin.as_ref()) - 0.5).abs() < 1e-14);
        assert!(c.lattice_error(sin.as_ref()) > 0.0 && c.lattice_error(sin.as_ref()) < 0.05);
    }

    #[test]
    fn concatenation_is_additive_for_the_model() {
        let t3 = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let c = model_max_integral(&t3, 8);
        let g = FnHamiltonian::time_dependent(|t, x: &[f64]| (x[2] + 3.0 * t).sin()).shared();
        let h = FnHamiltonian::autonomous(|x: &[f64]| 0.5 * x[2].cos()).shared();
        let gh = concat_product(&g, &h);
        let sum = c.evaluate(g.as_ref()) + c.evaluate(h.as_ref());
        assert!((c.evaluate(gh.as_ref()) - sum).abs() < 1e-13);
        let nested = concat_product(&gh, &g);
        let sum3 = sum + c.evaluate(g.as_ref());
        assert!((c.evaluate(nested.as_ref()) - sum3).abs() < 1e-13);
    }

    #[test]
    fn time_weighted_violator_breaks_concatenation() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let v = violator(&model_max_integral(&s1, 16), Violation::TimeWeighted);
        let (h, g) = (constant(1.0), constant(0.0));
        // c(h•g) − c(h) − c(g) = (max h − max g)/2 for autonomous fields
        let d = v.evaluate(concat_product(&h, &g).as_ref()) - v.evaluate(h.as_ref()) - v.evaluate(g.as_ref());
        assert!((d + 0.5).abs() < 1e-14 || (d - 0.5).abs() < 1e-14, "{d}");
    }

    #[test]
    fn homogenization_of_autonomous_field() {
        let t3 = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let c = model_max_integral(&t3, 8);
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].cos() + 0.3 * x[2].sin()).shared();
        let r = homogenize(&c, &c, &h, 16, 1e-9, 4).unwrap();
        let max = c.spatial_max(h.as_ref(), 0.0);
        assert!(r.c_over_k.iter().all(|v| (v - max).abs() <= 1e-12));
        assert!((r.zeta_value - max).abs() <= 1e-12);
        assert!(r.fekete_running_min.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.subadditivity_violations.is_empty());
        assert!(r.fekete_bound >= r.zeta_value);
    }

    #[test]
    fn squared_violator_does_not_converge() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let base = model_max_integral(&s1, 16);
        let v = violator(&base, Violation::Squared);
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        let err = homogenize(&v, &base, &h, 8, 1e-9, 2).unwrap_err();
        assert_eq!(err.partial.c_over_k.len(), 8);
        assert!(matches!(LabError::from(err), LabError::NotConverged { .. }));
    }

    #[test]
    fn c_tilde_examples() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let c = model_max_integral(&s1, 64);
        assert_eq!(c_tilde(&c, &c, constant(2.0).as_ref(), 4), 2.0);
        let sin = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        assert!((c_tilde(&c, &c, sin.as_ref(), 4) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn contract_self_test_on_circle() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let c = model_max_integral(&s1, 32);
        let suite = ContractSuite { trials: 10, ..Default::default() };
        let good = check_contract(&c, &c, &suite);
        assert!(good.passed(), "{good:?}");
        assert_eq!(good.property("2-spectrality").unwrap().status, CheckStatus::NotChecked);
        let bad = check_contract(&violator(&c, Violation::DoubledMax), &c, &suite);
        assert!(bad.property("1-normalization").unwrap().n_failures > 0);
    }
}
