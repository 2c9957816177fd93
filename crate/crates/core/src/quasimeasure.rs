//! Contact quasi-measures built from a quasi-state by constrained
//! minimization over strict functions, fibre pushforwards along involutive
//! maps, and the big-fibre covering experiment.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use smallvec::{smallvec, SmallVec};

use crate::dynamics::{poisson_bracket, DynMap};
use crate::error::{LabError, Result};
use crate::hamiltonian::{constant, DynHamiltonian, Envelope, Hamiltonian, Mode, TrigSeries};
use crate::lp::{solve, LinearProgram, Relation};
use crate::manifold::{ChartPoint, ContactModel, ModelKind, Vector};
use crate::quasistate::QuasiStateFunctional;
use crate::scalar::{wrap_angle, wrap_diff, Real};
use crate::translated::displacement_check;

pub use crate::sets::ClosedSetSpec;

/// `F = (f_1, …, f_N)` with Poisson-commuting, Reeb-invariant components.
#[derive(Clone)]
pub struct InvolutiveMap<T> {
    pub name: String,
    pub components: Vec<DynHamiltonian<T>>,
    /// `max |{f_j, 1}_α|` over the verification probes.
    pub max_reeb_bracket: T,
    /// `max |{f_i, f_j}_α|` over the verification probes.
    pub max_pair_bracket: T,
}

impl<T: Real> std::fmt::Debug for InvolutiveMap<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InvolutiveMap")
            .field("name", &self.name)
            .field("n", &self.components.len())
            .field("max_reeb_bracket", &self.max_reeb_bracket)
            .field("max_pair_bracket", &self.max_pair_bracket)
            .finish()
    }
}

pub const INVOLUTIVE_TOLERANCE: f64 = 1e-8;

impl<T: Real> InvolutiveMap<T> {
    /// Verifies the brackets at `probes` random points; rejects the map above `1e-8`.
    pub fn new(
        model: &ContactModel<T>,
        name: impl Into<String>,
        components: Vec<DynHamiltonian<T>>,
        probes: usize,
        seed: u64,
    ) -> Result<Self> {
        let name = name.into();
        if components.is_empty() || components.iter().any(|c| !c.is_autonomous()) {
            return Err(LabError::Invalid(format!("map `{name}` needs autonomous components")));
        }
        let one = constant(T::one());
        let (mut reeb, mut pair) = (T::zero(), T::zero());
        for p in model.sample(probes, seed) {
            let x = p.as_slice();
            for (i, f) in components.iter().enumerate() {
                reeb = reeb.max(poisson_bracket(model, f.as_ref(), one.as_ref(), T::zero(), x)?.abs());
                for g in &components[i + 1..] {
                    pair = pair.max(poisson_bracket(model, f.as_ref(), g.as_ref(), T::zero(), x)?.abs());
                }
            }
        }
        let tol = T::tol_floor(INVOLUTIVE_TOLERANCE);
        if !(reeb <= tol && pair <= tol) {
            return Err(LabError::Invalid(format!(
                "map `{name}` is not involutive: |{{f,1}}| = {:e}, |{{f_i,f_j}}| = {:e}",
                reeb.as_f64(),
                pair.as_f64()
            )));
        }
        Ok(Self { name, components, max_reeb_bracket: reeb, max_pair_bracket: pair })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn apply(&self, x: &[T]) -> Vector<T> {
        self.components.iter().map(|f| f.value(T::zero(), x)).collect()
    }

    /// `F⁻¹(X)` for a closed set `X` in the image coordinates.
    pub fn preimage(&self, x: &ClosedSetSpec<T>) -> ClosedSetSpec<T> {
        let comps = self.components.clone();
        let image = x.clone();
        ClosedSetSpec::new(format!("{}^-1({})", self.name, x.label), move |p| {
            let u: Vector<T> = comps.iter().map(|f| f.value(T::zero(), p)).collect();
            image.rho(&u)
        })
    }
}

/// `F = (cos θ, sin θ)` on `T3_UNIT_COTANGENT`.
pub fn angle_map<T: Real>(model: &ContactModel<T>) -> Result<InvolutiveMap<T>> {
    if model.kind() != ModelKind::T3UnitCotangent {
        return Err(LabError::Invalid("the angle map lives on T3_UNIT_COTANGENT".into()));
    }
    let harmonic = |phase: f64| -> DynHamiltonian<T> {
        Arc::new(TrigSeries {
            offset: T::zero(),
            modes: vec![Mode { wave: smallvec![T::zero(), T::zero(), T::one()], omega: T::zero(), phase: T::lit(phase), amp: T::one() }],
            envelope: None::<Envelope<T>>,
        })
    };
    InvolutiveMap::new(model, "angle", vec![harmonic(0.0), harmonic(-std::f64::consts::FRAC_PI_2)], 256, 0)
}

/// Closed arc of the unit circle in the image of [`angle_map`], by angle.
pub fn image_arc<T: Real>(center: T, half_width: T) -> ClosedSetSpec<T> {
    ClosedSetSpec::new(format!("arc({center}±{half_width})"), move |u: &[T]| {
        wrap_diff(u[1].atan2(u[0]) - center).abs() - half_width
    })
}

/// Whether `ρ` is constant along sampled Reeb orbits.
pub fn is_reeb_invariant<T: Real>(model: &ContactModel<T>, set: &ClosedSetSpec<T>, samples: usize, seed: u64) -> bool {
    let shifts = [0.37, 1.1, 2.9, 5.3].map(T::lit);
    model.sample(samples, seed).iter().all(|p| {
        let r = set.rho(p.as_slice());
        shifts.iter().all(|&s| {
            let q = model.reeb_flow(p, s);
            (set.rho(q.as_slice()) - r).abs() <= T::tol_floor(1e-9) * (T::one() + r.abs())
        })
    })
}

/// Piecewise-linear periodic interpolant of nodal values along one angle axis.
#[derive(Debug, Clone, PartialEq)]
pub struct HatField<T> {
    pub axis: usize,
    pub values: Vec<T>,
}

impl<T: Real> HatField<T> {
    fn locate(&self, theta: T) -> (usize, usize, T) {
        let n = self.values.len();
        let u = wrap_angle(theta) * T::from_usize_lossy(n) / T::TAU();
        let fl = u.floor();
        let j = fl.to_usize().unwrap_or(0) % n;
        (j, (j + 1) % n, u - fl)
    }
}

impl<T: Real> Hamiltonian<T> for HatField<T> {
    fn value(&self, _t: T, x: &[T]) -> T {
        let (j, k, f) = self.locate(x[self.axis]);
        self.values[j] * (T::one() - f) + self.values[k] * f
    }

    fn differential(&self, _t: T, x: &[T]) -> Vector<T> {
        let (j, k, _) = self.locate(x[self.axis]);
        let mut d: Vector<T> = x.iter().map(|_| T::zero()).collect();
        d[self.axis] = (self.values[k] - self.values[j]) * T::from_usize_lossy(self.values.len()) / T::TAU();
        d
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Finite basis of strict functions: hats in θ on the torus, constants on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StrictBasis {
    Hats { axis: usize, n: usize },
    Constant,
}

impl StrictBasis {
    fn of(model_kind: ModelKind, n: usize) -> Result<Self> {
        match model_kind {
            ModelKind::T3UnitCotangent => Ok(StrictBasis::Hats { axis: 2, n }),
            ModelKind::S1Circle => Ok(StrictBasis::Constant),
            ModelKind::R3Standard => Err(LabError::Invalid("quasi-measures are computed on T3 and S1".into())),
        }
    }

    fn angle_axis(self) -> Option<usize> {
        match self {
            StrictBasis::Hats { axis, .. } => Some(axis),
            StrictBasis::Constant => None,
        }
    }

    fn dim(self) -> usize {
        match self {
            StrictBasis::Hats { n, .. } => n,
            StrictBasis::Constant => 1,
        }
    }

    fn weights<T: Real>(self, x: &[T]) -> SmallVec<[(usize, T); 2]> {
        match self {
            StrictBasis::Hats { axis, n } => {
                let probe = HatField { axis, values: vec![T::zero(); n] };
                let (j, k, f) = probe.locate(x[axis]);
                let mut w: SmallVec<[(usize, T); 2]> = smallvec![(j, T::one() - f)];
                if f > T::zero() {
                    w.push((k, f));
                }
                w
            }
            StrictBasis::Constant => smallvec![(0, T::one())],
        }
    }

    fn field<T: Real>(self, coeffs: &[T]) -> DynHamiltonian<T> {
        match self {
            StrictBasis::Hats { axis, .. } => Arc::new(HatField { axis, values: coeffs.to_vec() }),
            StrictBasis::Constant => constant(coeffs[0]),
        }
    }

    fn lattice<T: Real>(self, model: &ContactModel<T>, fibre: usize, n: usize) -> Vec<ChartPoint<T>> {
        match self {
            StrictBasis::Hats { .. } => model.lattice_with(&[fibre, fibre, n]),
            StrictBasis::Constant => model.lattice(n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TauConfig {
    /// Hat nodes in θ (also the θ resolution of the set sampling).
    pub basis_nodes: usize,
    /// Lattice nodes along each fibre axis when sampling sets.
    pub fibre_nodes: usize,
    /// Feasibility relaxation `h|_A ≥ 1 − ε` on the penalty path (the LP path uses 0).
    pub epsilon: f64,
    /// ζ evaluations allowed on the pattern-search path.
    pub max_evaluations: usize,
    pub max_pivots: usize,
    /// Random probes used to detect sets missed by the lattice.
    pub probe_samples: usize,
    pub seed: u64,
}

impl Default for TauConfig {
    fn default() -> Self {
        Self {
            basis_nodes: 256,
            fibre_nodes: 4,
            epsilon: 1e-6,
            max_evaluations: 4000,
            max_pivots: 50_000,
            probe_samples: 4096,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpCertificate {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real + Serialize")]
pub struct TauResult<T> {
    pub set_name: String,
    /// Upper bound for `τ(A)`; the exact discrete optimum when `tight`.
    pub value: T,
    /// Nodal values of the minimizing strict field `h*`.
    pub nodal_values: Vec<T>,
    pub iterations: usize,
    /// `0 ≤ h* ≤ 1` and `h*|_A ≥ 1 − ε` hold on the samples within `1e-9`.
    pub certified: bool,
    /// Solved as an LP to optimality with duality gap `≤ 1e-8`.
    pub tight: bool,
    pub epsilon: T,
    pub feasibility_residual: T,
    /// Spacing of the strict basis as a fraction of the period.
    pub resolution: T,
    pub constrained_samples: usize,
    /// Axis of the hat basis, `None` for constants.
    pub angle_axis: Option<usize>,
    pub lp: Option<LpCertificate>,
}

impl<T: Real> TauResult<T> {
    /// The minimizing strict field `h*`.
    pub fn upper_bound_function(&self) -> DynHamiltonian<T> {
        match self.angle_axis {
            Some(axis) => Arc::new(HatField { axis, values: self.nodal_values.clone() }),
            None => constant(self.nodal_values[0]),
        }
    }
}

pub const DUALITY_GAP_TOLERANCE: f64 = 1e-8;
const CERTIFICATE_TOLERANCE: f64 = 1e-9;

struct Constraints<T> {
    /// Sparse rows `Σ w a ≥ 1 − ε` (deduplicated).
    lower: Vec<SmallVec<[(usize, T); 2]>>,
    /// Coefficients forced to zero (support restrictions).
    zero: Vec<usize>,
}

fn sample_set<T: Real>(
    model: &ContactModel<T>,
    basis: StrictBasis,
    set: &ClosedSetSpec<T>,
    outside: Option<&ClosedSetSpec<T>>,
    cfg: &TauConfig,
) -> Result<Constraints<T>> {
    let pts = basis.lattice(model, cfg.fibre_nodes, cfg.basis_nodes);
    let mut seen: HashMap<Vec<(usize, u64)>, ()> = HashMap::new();
    let mut lower = Vec::new();
    for p in pts.iter().filter(|p| set.contains(p.as_slice())) {
        let w = basis.weights(p.as_slice());
        let key: Vec<(usize, u64)> = w.iter().map(|&(j, v)| (j, v.as_f64().to_bits())).collect();
        if seen.insert(key, ()).is_none() {
            lower.push(w);
        }
    }
    if lower.is_empty() && model.sample(cfg.probe_samples, cfg.seed).iter().any(|p| set.contains(p.as_slice())) {
        return Err(LabError::InfeasibleSetSampling(set.label.clone()));
    }
    let mut zero = Vec::new();
    if let Some(u) = outside {
        let mut z = vec![false; basis.dim()];
        for p in pts.iter().filter(|p| !u.contains(p.as_slice())) {
            for (j, w) in basis.weights(p.as_slice()) {
                if w > T::zero() {
                    z[j] = true;
                }
            }
        }
        zero = (0..basis.dim()).filter(|&j| z[j]).collect();
    }
    Ok(Constraints { lower, zero })
}

fn feasibility<T: Real>(c: &Constraints<T>, a: &[T], eps: T) -> T {
    let mut r = a.iter().fold(T::zero(), |w, &v| w.max(-v).max(v - T::one()));
    for row in &c.lower {
        let h: T = row.iter().map(|&(j, w)| w * a[j]).sum();
        r = r.max(T::one() - eps - h);
    }
    for &j in &c.zero {
        r = r.max(a[j].abs());
    }
    r
}

/// Upper bound for `τ(A) = inf{ζ(h) : h strict, 0 ≤ h ≤ 1, h|_A = 1}`.
pub fn tau<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    set: &ClosedSetSpec<T>,
    cfg: &TauConfig,
) -> Result<TauResult<T>> {
    tau_supported(zeta, model, set, None, cfg)
}

/// As [`tau`], restricted to strict functions vanishing outside `support`.
pub fn tau_supported<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    set: &ClosedSetSpec<T>,
    support: Option<&ClosedSetSpec<T>>,
    cfg: &TauConfig,
) -> Result<TauResult<T>> {
    let basis = StrictBasis::of(model.kind(), cfg.basis_nodes)?;
    let cons = sample_set(model, basis, set, support, cfg)?;
    let n = basis.dim();
    let resolution = match basis {
        StrictBasis::Hats { n, .. } => T::one() / T::from_usize_lossy(n),
        StrictBasis::Constant => T::one(),
    };
    if zeta.is_linear() {
        let eps = T::zero();
        let weights: Vec<T> = (0..n)
            .map(|j| {
                let mut e = vec![T::zero(); n];
                e[j] = T::one();
                zeta.evaluate(&basis.field(&e))
            })
            .collect::<Result<_>>()?;
        let mut lp = LinearProgram::new(weights.clone());
        for row in &cons.lower {
            let mut r = vec![T::zero(); n];
            for &(j, w) in row {
                r[j] = w;
            }
            lp.push(r, Relation::Ge, T::one() - eps);
        }
        for j in 0..n {
            let mut r = vec![T::zero(); n];
            r[j] = T::one();
            let rel = if cons.zero.contains(&j) { Relation::Eq } else { Relation::Le };
            let rhs = if rel == Relation::Eq { T::zero() } else { T::one() };
            lp.push(r, rel, rhs);
        }
        let sol = match solve(&lp, cfg.max_pivots) {
            Ok(s) => s,
            Err(LabError::LinearProgram("infeasible")) => {
                return Err(LabError::Invalid(format!("no strict function equals 1 on `{}` inside its support", set.label)))
            }
            Err(LabError::LinearProgram(_)) => return Err(LabError::OptimizerBudget),
            Err(e) => return Err(e),
        };
        let a: Vec<T> = sol.x.iter().map(|&v| v.max(T::zero()).min(T::one())).collect();
        let value = zeta.evaluate(&basis.field(&a))?;
        let residual = feasibility(&cons, &a, eps);
        let cert = LpCertificate {
            primal_objective: sol.objective.as_f64(),
            dual_objective: sol.dual_objective.as_f64(),
            duality_gap: sol.duality_gap.as_f64(),
            primal_infeasibility: sol.primal_infeasibility.as_f64(),
            dual_infeasibility: sol.dual_infeasibility.as_f64(),
            pivots: sol.pivots,
        };
        let certified = residual.as_f64() <= CERTIFICATE_TOLERANCE;
        let tight = certified
            && cert.duality_gap <= DUALITY_GAP_TOLERANCE
            && cert.dual_infeasibility <= CERTIFICATE_TOLERANCE;
        return Ok(TauResult {
            set_name: set.label.clone(),
            value,
            nodal_values: a,
            iterations: sol.pivots,
            certified,
            tight,
            epsilon: eps,
            feasibility_residual: residual,
            resolution,
            constrained_samples: cons.lower.len(),
            angle_axis: basis.angle_axis(),
            lp: Some(cert),
        });
    }
    pattern_search(zeta, basis, &cons, set, resolution, cfg)
}

fn pattern_search<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    basis: StrictBasis,
    cons: &Constraints<T>,
    set: &ClosedSetSpec<T>,
    resolution: T,
    cfg: &TauConfig,
) -> Result<TauResult<T>> {
    let n = basis.dim();
    let eps = T::lit(cfg.epsilon);
    // feasible start: 1 on every coefficient touched by a constrained sample
    let mut a = vec![T::zero(); n];
    for row in &cons.lower {
        for &(j, _) in row {
            a[j] = T::one();
        }
    }
    for &j in &cons.zero {
        a[j] = T::zero();
    }
    if !(feasibility(cons, &a, eps) <= T::lit(CERTIFICATE_TOLERANCE)) {
        return Err(LabError::Invalid(format!("no strict function equals 1 on `{}` inside its support", set.label)));
    }
    let mut evals = 1usize;
    let mut best = zeta.evaluate(&basis.field(&a))?;
    let mut step = T::lit(0.5);
    let min_step = T::lit(1.0 / 1024.0);
    'search: while step >= min_step {
        let mut improved = false;
        for j in 0..n {
            if cons.zero.contains(&j) {
                continue;
            }
            for dir in [-T::one(), T::one()] {
                if evals >= cfg.max_evaluations {
                    break 'search;
                }
                let old = a[j];
                let trial = (old + dir * step).max(T::zero()).min(T::one());
                if trial == old {
                    continue;
                }
                a[j] = trial;
                if feasibility(cons, &a, eps) > T::lit(CERTIFICATE_TOLERANCE) {
                    a[j] = old;
                    continue;
                }
                evals += 1;
                let v = zeta.evaluate(&basis.field(&a))?;
                if v < best {
                    best = v;
                    improved = true;
                    break;
                }
                a[j] = old;
            }
        }
        if !improved {
            step *= T::lit(0.5);
        }
    }
    let residual = feasibility(cons, &a, eps);
    Ok(TauResult {
        set_name: set.label.clone(),
        value: best,
        nodal_values: a,
        iterations: evals,
        certified: residual <= T::lit(CERTIFICATE_TOLERANCE),
        tight: false,
        epsilon: eps,
        feasibility_residual: residual,
        resolution,
        constrained_samples: cons.lower.len(),
        angle_axis: basis.angle_axis(),
        lp: None,
    })
}

/// Fibre minima `μ(x) = min{h(y) : F(y) ≈ x}` over a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Pushforward<T> {
    pub images: Vec<Vector<T>>,
    pub values: Vec<T>,
    /// Image cluster of each lattice point.
    pub cluster_of: Vec<usize>,
    pub tolerance: T,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    lattice_images: Vec<Vector<T>>,
    lattice_values: Vec<T>,
}

fn cell<T: Real>(u: &[T], tol: T) -> Vec<i64> {
    u.iter().map(|&v| (v / tol).floor().to_i64().unwrap_or(i64::MAX)).collect()
}

fn neighbours(c: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &k in c {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| (-1..=1).map(move |d| {
                let mut q = p.clone();
                q.push(k.saturating_add(d));
                q
            }))
            .collect();
    }
    out
}

impl<T: Real> Pushforward<T> {
    /// `μ(x)`: the minimum of `h` over lattice points whose image is within tolerance of `x`.
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        let mut best: Option<T> = None;
        for c in neighbours(&cell(x, self.tolerance)) {
            for &i in self.cells.get(&c).into_iter().flatten() {
                let d = self.lattice_images[i].iter().zip(x).map(|(&a, &b)| (a - b).powi(2)).sum::<T>().sqrt();
                if d <= self.tolerance {
                    let v = self.lattice_values[i];
                    best = Some(best.map_or(v, |b: T| b.min(v)));
                }
            }
        }
        best.ok_or_else(|| LabError::EmptyFibreSample(x.iter().map(|v| v.as_f64()).collect()))
    }
}

/// Pushes `h` forward along `F` by fibre minima over `model.lattice_with(counts)`.
pub fn fibre_pushforward<T: Real>(
    model: &ContactModel<T>,
    h: &dyn Hamiltonian<T>,
    map: &InvolutiveMap<T>,
    counts: &[usize],
    tolerance: T,
) -> Pushforward<T> {
    let pts = model.lattice_with(counts);
    let lattice_images: Vec<Vector<T>> = pts.iter().map(|p| map.apply(p.as_slice())).collect();
    let lattice_values: Vec<T> = pts.iter().map(|p| h.value(T::zero(), p.as_slice())).collect();
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, u) in lattice_images.iter().enumerate() {
        cells.entry(cell(u, tolerance)).or_default().push(i);
    }
    let mut pf = Pushforward {
        images: Vec::new(),
        values: Vec::new(),
        cluster_of: vec![usize::MAX; pts.len()],
        tolerance,
        cells,
        lattice_images,
        lattice_values,
    };
    for i in 0..pts.len() {
        if pf.cluster_of[i] != usize::MAX {
            continue;
        }
        let rep = pf.lattice_images[i].clone();
        let id = pf.images.len();
        for c in neighbours(&cell(&rep, tolerance)) {
            for &k in pf.cells.get(&c).into_iter().flatten() {
                if pf.cluster_of[k] == usize::MAX {
                    let d = pf.lattice_images[k].iter().zip(&rep).map(|(&a, &b)| (a - b).powi(2)).sum::<T>().sqrt();
                    if d <= tolerance {
                        pf.cluster_of[k] = id;
                    }
                }
            }
        }
        let v = pf.evaluate(&rep).expect("representative has itself as preimage");
        pf.images.push(rep);
        pf.values.push(v);
    }
    pf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeasureStatus {
    Pass,
    Fail,
    /// The bounds involved are not tight, so no assertion is made.
    Inconclusive,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureCheck {
    pub axiom: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub tolerance: f64,
    pub status: MeasureStatus,
}

impl MeasureCheck {
    fn new(axiom: &str, instance: String, lhs: f64, rhs: f64, tolerance: f64, tight: bool) -> Self {
        let margin = rhs - lhs;
        let status = if !tight {
            MeasureStatus::Inconclusive
        } else if margin >= -tolerance {
            MeasureStatus::Pass
        } else {
            MeasureStatus::Fail
        };
        Self { axiom: axiom.into(), instance, lhs, rhs, margin, tolerance, status }
    }
}

/// Sets `X_j` in the image of a verified involutive map.
#[derive(Clone)]
pub struct SubadditivityInstance<T> {
    pub map: InvolutiveMap<T>,
    pub pieces: Vec<ClosedSetSpec<T>>,
}

#[derive(Clone, Default)]
pub struct MeasureSuite<T> {
    /// Pairs `(A, B)` with `A ⊂ B`.
    pub nested: Vec<(ClosedSetSpec<T>, ClosedSetSpec<T>)>,
    pub subadditivity: Vec<SubadditivityInstance<T>>,
    pub tolerance: f64,
}

/// Checks normalization, monotonicity and subadditivity over preimages.
pub fn check_quasimeasure_axioms<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    suite: &MeasureSuite<T>,
    cfg: &TauConfig,
) -> Result<Vec<MeasureCheck>> {
    let tol = suite.tolerance;
    let mut out = Vec::new();
    let whole = tau(zeta, model, &ClosedSetSpec::whole(), cfg)?;
    out.push(MeasureCheck::new("normalization", "tau(M) = 1".into(), whole.value.as_f64(), 1.0, tol, whole.tight));
    if let Some(last) = out.last_mut() {
        let dev = (whole.value.as_f64() - 1.0).abs();
        last.margin = -dev;
        if whole.tight {
            last.status = if dev <= tol { MeasureStatus::Pass } else { MeasureStatus::Fail };
        }
    }
    let empty = tau(zeta, model, &ClosedSetSpec::empty(), cfg)?;
    let dev = empty.value.as_f64().abs();
    let mut check = MeasureCheck::new("normalization", "tau(empty) = 0".into(), empty.value.as_f64(), 0.0, tol, empty.tight);
    check.margin = -dev;
    if empty.tight {
        check.status = if dev <= tol { MeasureStatus::Pass } else { MeasureStatus::Fail };
    }
    out.push(check);
    let probes = model.sample(cfg.probe_samples, cfg.seed);
    for (a, b) in &suite.nested {
        if probes.iter().any(|p| a.contains(p.as_slice()) && !b.contains(p.as_slice())) {
            return Err(LabError::Invalid(format!("`{}` is not contained in `{}`", a.label, b.label)));
        }
        let ta = tau(zeta, model, a, cfg)?;
        let tb = tau(zeta, model, b, cfg)?;
        out.push(MeasureCheck::new(
            "monotonicity",
            format!("tau({}) <= tau({})", a.label, b.label),
            ta.value.as_f64(),
            tb.value.as_f64(),
            tol,
            ta.tight && tb.tight,
        ));
    }
    for inst in &suite.subadditivity {
        let pre: Vec<ClosedSetSpec<T>> = inst.pieces.iter().map(|x| inst.map.preimage(x)).collect();
        out.push(check_subadditivity(zeta, model, &pre, cfg, tol)?);
    }
    Ok(out)
}

/// `τ(A_1 ∪ … ∪ A_k) ≤ Σ τ(A_j)`, asserted only when every bound is tight.
pub fn check_subadditivity<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    pieces: &[ClosedSetSpec<T>],
    cfg: &TauConfig,
    tolerance: f64,
) -> Result<MeasureCheck> {
    let Some(first) = pieces.first() else {
        return Err(LabError::Invalid("subadditivity needs at least one set".into()));
    };
    let union = pieces.iter().skip(1).fold(first.clone(), |u, s| u.union(s));
    let tu = tau(zeta, model, &union, cfg)?;
    let parts: Vec<TauResult<T>> = pieces.iter().map(|s| tau(zeta, model, s, cfg)).collect::<Result<_>>()?;
    let rhs: f64 = parts.iter().map(|t| t.value.as_f64()).sum();
    Ok(MeasureCheck::new(
        "subadditivity",
        format!("tau({}) <= sum of parts", union.label),
        tu.value.as_f64(),
        rhs,
        tolerance,
        tu.tight && parts.iter().all(|t| t.tight),
    ))
}

/// A contactomorphism claimed to displace a neighbourhood of a set.
#[derive(Clone)]
pub struct DisplacementWitness<T> {
    pub label: String,
    pub map: DynMap<T>,
    pub samples: Vec<ChartPoint<T>>,
    pub gap: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingReport {
    pub set_name: String,
    pub witness: Option<String>,
    /// `ζ(χ h*)` for the cutoff supported in the displaced neighbourhood.
    pub upper_bound: f64,
    pub tolerance: f64,
    pub status: MeasureStatus,
    pub note: Option<String>,
}

/// `τ(A) ≤ ζ(χ)` for a strict cutoff `χ = 1` on `A` supported in `U = {ρ_A ≤ margin}`.
pub fn check_vanishing<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    set: &ClosedSetSpec<T>,
    witness: Option<&DisplacementWitness<T>>,
    margin: T,
    cfg: &TauConfig,
    tolerance: f64,
) -> Result<VanishingReport> {
    let probes = model.sample(cfg.probe_samples, cfg.seed);
    let hits = probes.iter().filter(|p| set.contains(p.as_slice())).count();
    let report = |bound: f64, status, note: Option<String>| VanishingReport {
        set_name: set.label.clone(),
        witness: witness.map(|w| w.label.clone()),
        upper_bound: bound,
        tolerance,
        status,
        note,
    };
    let u = set.inflate(margin);
    if let Some(w) = witness {
        let rep = displacement_check(w.map.as_ref(), &u, &w.samples, w.gap)?;
        if !rep.displaces {
            return Err(LabError::WitnessInvalid(w.label.clone()));
        }
    }
    if hits == 0 {
        let t = tau(zeta, model, set, cfg)?;
        let status = if t.value.as_f64().abs() <= tolerance { MeasureStatus::Pass } else { MeasureStatus::Fail };
        return Ok(report(t.value.as_f64(), status, Some("empty set".into())));
    }
    let Some(_) = witness else {
        return Ok(report(f64::NAN, MeasureStatus::Inconclusive, Some("no displacement witness supplied".into())));
    };
    if model.kind() == ModelKind::S1Circle {
        return Ok(report(
            1.0,
            MeasureStatus::Vacuous,
            Some("strict functions on the circle are constant; a preimage under a constant map is empty or everything".into()),
        ));
    }
    let t = tau_supported(zeta, model, set, Some(&u), cfg)?;
    let bound = t.value.as_f64();
    let status = if bound <= tolerance { MeasureStatus::Pass } else { MeasureStatus::Fail };
    Ok(report(bound, status, Some("cutoff supported in the inflated set".into())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FibreRow {
    pub set_name: String,
    pub tau_upper: f64,
    pub tau_certified_tight: bool,
    pub witnesses_used: usize,
    pub vanishing_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigFibreVerdict {
    pub model: String,
    pub map: String,
    pub k: usize,
    pub tau_whole: f64,
    pub rows: Vec<FibreRow>,
    pub sum: f64,
    pub lattice_error: f64,
    /// `Σ τ(A_j) ≥ τ(M) − k · lattice_error`.
    pub chain_holds: bool,
    pub candidate: Option<String>,
    pub candidate_tau: f64,
    /// The candidate has `τ ≥ 1/k − lattice_error` with a tight bound.
    pub candidate_certified: bool,
    pub cover_margin: f64,
}

#[derive(Clone)]
pub struct BigFibreConfig<T> {
    pub tau: TauConfig,
    /// Every sampled image point must lie at depth `≥ cover_margin` inside some `X_j`.
    pub cover_margin: T,
    pub cover_samples: usize,
    pub vanishing_margin: T,
    pub tolerance: f64,
}

impl<T: Real> Default for BigFibreConfig<T> {
    fn default() -> Self {
        Self {
            tau: TauConfig::default(),
            cover_margin: T::lit(5e-4),
            cover_samples: 4096,
            vanishing_margin: T::lit(0.05),
            tolerance: 1e-6,
        }
    }
}

/// Computes `τ(F⁻¹(X_j))` over a cover and checks `1 = τ(M) ≤ Σ τ(F⁻¹(X_j))`.
pub fn big_fibre_experiment<T: Real>(
    zeta: &dyn QuasiStateFunctional<T>,
    model: &ContactModel<T>,
    map: &InvolutiveMap<T>,
    cover: &[ClosedSetSpec<T>],
    witnesses: &[Option<DisplacementWitness<T>>],
    cfg: &BigFibreConfig<T>,
) -> Result<BigFibreVerdict> {
    if cover.is_empty() {
        return Err(LabError::Invalid("empty cover".into()));
    }
    let basis = StrictBasis::of(model.kind(), cfg.tau.basis_nodes)?;
    let mut image_pts: Vec<ChartPoint<T>> = basis.lattice(model, cfg.tau.fibre_nodes, cfg.tau.basis_nodes);
    image_pts.extend(model.sample(cfg.cover_samples, cfg.tau.seed ^ 0x5eed));
    for p in &image_pts {
        let u = map.apply(p.as_slice());
        if !cover.iter().any(|x| x.rho(&u) <= -cfg.cover_margin) {
            return Err(LabError::CoverGap(u.iter().map(|v| v.as_f64()).collect()));
        }
    }
    let whole = tau(zeta, model, &ClosedSetSpec::whole(), &cfg.tau)?;
    let k = cover.len();
    let mut rows = Vec::with_capacity(k);
    let mut results = Vec::with_capacity(k);
    for (j, x) in cover.iter().enumerate() {
        let a = map.preimage(x);
        let t = tau(zeta, model, &a, &cfg.tau)?;
        let w = witnesses.get(j).and_then(|w| w.as_ref());
        let vanishing_bound = match w {
            Some(w) => Some(check_vanishing(zeta, model, &a, Some(w), cfg.vanishing_margin, &cfg.tau, cfg.tolerance)?.upper_bound),
            None => None,
        };
        rows.push(FibreRow {
            set_name: a.label.clone(),
            tau_upper: t.value.as_f64(),
            tau_certified_tight: t.tight,
            witnesses_used: usize::from(w.is_some()),
            vanishing_bound,
        });
        results.push(t);
    }
    let sum: f64 = rows.iter().map(|r| r.tau_upper).sum();
    let lattice_error = whole.resolution.as_f64();
    let best = (0..k).max_by(|&a, &b| rows[a].tau_upper.total_cmp(&rows[b].tau_upper)).expect("nonempty cover");
    let candidate_tau = rows[best].tau_upper;
    let candidate_certified = rows[best].tau_certified_tight && candidate_tau >= 1.0 / k as f64 - lattice_error;
    Ok(BigFibreVerdict {
        model: model.name().to_string(),
        map: map.name.clone(),
        k,
        tau_whole: whole.value.as_f64(),
        chain_holds: sum >= whole.value.as_f64() - k as f64 * lattice_error,
        candidate: candidate_certified.then(|| rows[best].set_name.clone()),
        candidate_tau,
        candidate_certified,
        rows,
        sum,
        lattice_error,
        cover_margin: cfg.cover_margin.as_f64(),
    })
}

/// The `k` closed arcs `[2πj/k − overlap, 2π(j+1)/k + overlap]` in the image of [`angle_map`].
pub fn arc_cover<T: Real>(k: usize, overlap: T) -> Vec<ClosedSetSpec<T>> {
    let kf = T::from_usize_lossy(k);
    (0..k)
        .map(|j| {
            let half = T::PI() / kf;
            let center = T::TAU() * (T::from_usize_lossy(j) + T::lit(0.5)) / kf;
            let mut s = image_arc(center, half + overlap);
            s.label = format!("X{}", j + 1);
            s
        })
        .collect()
}
