//! Contact Hamiltonian vector fields, contact isotopies and the algebra of
//! contact Hamiltonians.
//!
//! Sign conventions: `X_h` solves `α(X_h) = −h` and `ι_{X_h} dα = dh − dh(R)·α`,
//! so `L_{X_h} α = −dh(R)·α` and the conformal factor of the isotopy obeys
//! `∂_t κ^t = −(dh_t(R) ∘ φ^t) κ^t` with `κ^0 = 1`. The flow integrates `ln κ`
//! alongside the trajectory.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::hamiltonian::{merge_breakpoints, DynHamiltonian, Hamiltonian};
use crate::linalg::{dot, least_squares};
use crate::manifold::{ChartPoint, ContactModel, Vector};
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::scalar::Real;

/// Solves the stacked system `[α; ι_· dα] v = [−h; dh − dh(R) α]` and returns
/// `(X_h, dh(R))`.
pub(crate) fn field_and_reeb_derivative<T: Real>(
    model: &ContactModel<T>,
    h: &dyn Hamiltonian<T>,
    t: T,
    x: &[T],
) -> Result<(Vector<T>, T)> {
    let n = model.dim();
    let alpha = model.alpha(x);
    let reeb = model.reeb(x);
    let d = model.dalpha(x);
    let dh = h.differential(t, x);
    let dh_reeb = dot(&dh, &reeb);
    let mut a = Vec::with_capacity((n + 1) * n);
    a.extend_from_slice(&alpha);
    // row j of ι_v dα is column j of dα
    for j in 0..n {
        for i in 0..n {
            a.push(d[i * n + j]);
        }
    }
    let mut b = Vec::with_capacity(n + 1);
    b.push(-h.value(t, x));
    for j in 0..n {
        b.push(dh[j] - dh_reeb * alpha[j]);
    }
    let (v, residual) = least_squares(&a, n + 1, n, &b);
    let scale = b.iter().fold(T::one(), |m, &e| m.max(e.abs()));
    let tolerance = T::tol_floor(1e-8) * scale;
    if !(residual <= tolerance) {
        return Err(LabError::ResidualTooLarge { residual: residual.as_f64(), tolerance: tolerance.as_f64() });
    }
    Ok((v.into_iter().collect(), dh_reeb))
}

/// The contact Hamiltonian vector field `X_h` at `(t, x)`.
pub fn hamiltonian_vector_field<T: Real>(
    model: &ContactModel<T>,
    h: &dyn Hamiltonian<T>,
    t: T,
    x: &ChartPoint<T>,
) -> Result<Vector<T>> {
    field_and_reeb_derivative(model, h, t, x.as_slice()).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    /// Runs the time-reversed system: the path `τ ↦ φ^{t1−τ} ∘ (φ^{t1})^{-1}`,
    /// which ends at `(φ^{t1})^{-1}`.
    Inverse,
}

/// A contact isotopy: a Hamiltonian on a model, integrated to a tolerance.
#[derive(Clone)]
pub struct IsotopySpec<T> {
    pub hamiltonian: DynHamiltonian<T>,
    pub model: ContactModel<T>,
    pub tolerance: T,
    pub direction: Direction,
}

impl<T: Real> IsotopySpec<T> {
    pub fn new(model: &ContactModel<T>, hamiltonian: DynHamiltonian<T>, tolerance: T) -> Self {
        assert!(tolerance > T::zero(), "integrator tolerance must be positive");
        Self { hamiltonian, model: model.clone(), tolerance, direction: Direction::Forward }
    }

    pub fn inverse(&self) -> Self {
        let mut s = self.clone();
        s.direction = match self.direction {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        };
        s
    }

    pub fn with_tolerance(&self, tolerance: T) -> Self {
        let mut s = self.clone();
        s.tolerance = tolerance;
        s
    }
}

/// Trajectory of a point under a contact isotopy.
#[derive(Debug, Clone)]
pub struct FlowResult<T> {
    pub times: Vec<T>,
    pub points: Vec<ChartPoint<T>>,
    pub kappa: Vec<T>,
    pub stats: OdeStats,
}

impl<T: Real> FlowResult<T> {
    pub fn endpoint(&self) -> &ChartPoint<T> {
        self.points.last().expect("flow result is never empty")
    }

    pub fn final_kappa(&self) -> T {
        *self.kappa.last().expect("flow result is never empty")
    }

    /// Point and conformal factor at a recorded time (stops are recorded exactly).
    pub fn at(&self, t: T) -> Option<(&ChartPoint<T>, T)> {
        self.times.iter().position(|&s| s == t).map(|i| (&self.points[i], self.kappa[i]))
    }
}

/// Integrates the isotopy from time 0 to `t1`.
pub fn flow<T: Real>(spec: &IsotopySpec<T>, x: &ChartPoint<T>, t1: T) -> Result<FlowResult<T>> {
    flow_with_stops(spec, x, t1, &[])
}

/// Like [`flow`], additionally landing exactly on each time in `stops`.
pub fn flow_with_stops<T: Real>(
    spec: &IsotopySpec<T>,
    x: &ChartPoint<T>,
    t1: T,
    stops: &[T],
) -> Result<FlowResult<T>> {
    let h = &spec.hamiltonian;
    let model = &spec.model;
    let autonomous = h.is_autonomous();
    let (direction, t1) = if t1 < T::zero() {
        if !autonomous {
            return Err(LabError::Invalid("negative flow time requires an autonomous Hamiltonian".into()));
        }
        let flipped = match spec.direction {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        };
        (flipped, -t1)
    } else {
        (spec.direction, t1)
    };
    if !autonomous && t1 > T::one() {
        return Err(LabError::Invalid("time-dependent Hamiltonians live on [0, 1]".into()));
    }
    let n = model.dim();
    let mut y0: Vec<T> = x.coords.to_vec();
    y0.push(T::zero());

    let breakpoints: Vec<T> = match direction {
        Direction::Forward => h.breakpoints(),
        Direction::Inverse => h.breakpoints().into_iter().map(|b| t1 - b).collect(),
    };
    let breakpoints: Vec<T> = breakpoints.into_iter().filter(|&b| b > T::zero() && b < t1).collect();

    let rhs = |tau: T, y: &[T], dy: &mut [T]| -> Result<()> {
        let (t, sign) = match direction {
            Direction::Forward => (tau, T::one()),
            Direction::Inverse => (t1 - tau, -T::one()),
        };
        let (v, dh_reeb) = field_and_reeb_derivative(model, h.as_ref(), t, &y[..n])?;
        for i in 0..n {
            dy[i] = sign * v[i];
        }
        dy[n] = -sign * dh_reeb;
        Ok(())
    };

    let mut times = vec![T::zero()];
    let mut points = vec![x.clone()];
    let mut kappa = vec![T::one()];
    let opts = OdeOptions::with_tolerance(spec.tolerance);
    let (_, stats) = integrate(rhs, T::zero(), &y0, t1, stops, &breakpoints, &opts, |tau, y| {
        if !model.inside_escape_box(&y[..n]) {
            return Err(LabError::DomainEscape {
                t: tau.as_f64(),
                point: y[..n].iter().map(|c| c.as_f64()).collect(),
            });
        }
        times.push(tau);
        points.push(model.point(&y[..n]));
        kappa.push(y[n].exp());
        Ok(())
    })?;
    Ok(FlowResult { times, points, kappa, stats })
}

/// Image of a point under a contactomorphism, with the conformal factor there.
#[derive(Debug, Clone, PartialEq)]
pub struct MapImage<T> {
    pub point: ChartPoint<T>,
    pub kappa: T,
}

/// A contactomorphism evaluated pointwise.
pub trait ContactMap<T: Real>: Send + Sync {
    fn apply(&self, x: &ChartPoint<T>) -> Result<MapImage<T>>;

    /// The same map evaluated with half the integration tolerance, if integrated.
    fn refined(&self) -> Option<DynMap<T>> {
        None
    }
}

pub type DynMap<T> = Arc<dyn ContactMap<T>>;

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl<T: Real> ContactMap<T> for IdentityMap {
    fn apply(&self, x: &ChartPoint<T>) -> Result<MapImage<T>> {
        Ok(MapImage { point: x.clone(), kappa: T::one() })
    }
}

/// `φ_R^s`.
#[derive(Debug, Clone)]
pub struct ReebShift<T> {
    pub model: ContactModel<T>,
    pub shift: T,
}

impl<T: Real> ContactMap<T> for ReebShift<T> {
    fn apply(&self, x: &ChartPoint<T>) -> Result<MapImage<T>> {
        Ok(MapImage { point: self.model.reeb_flow(x, self.shift), kappa: T::one() })
    }
}

/// Endpoint map of a stored isotopy at time `t1` (time-1 map by default).
#[derive(Clone)]
pub struct IsotopyMap<T> {
    pub spec: IsotopySpec<T>,
    pub t1: T,
}

impl<T: Real> IsotopyMap<T> {
    pub fn time_one(spec: IsotopySpec<T>) -> Self {
        Self { spec, t1: T::one() }
    }
}

impl<T: Real> ContactMap<T> for IsotopyMap<T> {
    fn apply(&self, x: &ChartPoint<T>) -> Result<MapImage<T>> {
        let r = flow(&self.spec, x, self.t1)?;
        Ok(MapImage { kappa: r.final_kappa(), point: r.endpoint().clone() })
    }

    fn refined(&self) -> Option<DynMap<T>> {
        let spec = self.spec.with_tolerance(self.spec.tolerance * T::lit(0.5));
        Some(Arc::new(IsotopyMap { spec, t1: self.t1 }))
    }
}

/// Composition `maps[0] ∘ maps[1] ∘ … ∘ maps[k]` (the last map acts first).
#[derive(Clone)]
pub struct Composed<T> {
    pub maps: Vec<DynMap<T>>,
}

impl<T: Real> ContactMap<T> for Composed<T> {
    fn apply(&self, x: &ChartPoint<T>) -> Result<MapImage<T>> {
        let mut img = MapImage { point: x.clone(), kappa: T::one() };
        for m in self.maps.iter().rev() {
            let next = m.apply(&img.point)?;
            img = MapImage { point: next.point, kappa: img.kappa * next.kappa };
        }
        Ok(img)
    }

    fn refined(&self) -> Option<DynMap<T>> {
        let mut any = false;
        let maps = self
            .maps
            .iter()
            .map(|m| match m.refined() {
                Some(r) => {
                    any = true;
                    r
                }
                None => m.clone(),
            })
            .collect();
        any.then(|| Arc::new(Composed { maps }) as DynMap<T>)
    }
}

pub fn compose<T: Real>(maps: Vec<DynMap<T>>) -> DynMap<T> {
    Arc::new(Composed { maps })
}

type CacheKey = (u64, [u64; 4]);

fn cache_key<T: Real>(t: T, x: &[T]) -> CacheKey {
    let mut c = [0u64; 4];
    for (slot, v) in c.iter_mut().zip(x) {
        *slot = v.as_f64().to_bits();
    }
    (t.as_f64().to_bits(), c)
}

/// `(g # h)_t = g_t + (κ_g^t h_t) ∘ (φ_g^t)^{-1}`; generates `φ_g^t ∘ φ_h^t`.
pub struct SharpProduct<T> {
    g: DynHamiltonian<T>,
    h: DynHamiltonian<T>,
    model: ContactModel<T>,
    inner_tolerance: T,
    cache: Option<(RwLock<HashMap<CacheKey, (Vector<T>, T)>>, usize)>,
}

impl<T: Real> SharpProduct<T> {
    /// `(φ_g^t)^{-1}(x)` and `κ_g^t` at that preimage.
    pub fn preimage(&self, t: T, x: &[T]) -> Result<(Vector<T>, T)> {
        if t == T::zero() {
            return Ok((x.iter().copied().collect(), T::one()));
        }
        let key = self.cache.as_ref().map(|_| cache_key(t, x));
        if let (Some((cache, _)), Some(k)) = (&self.cache, &key) {
            if let Some(hit) = cache.read().expect("cache lock").get(k) {
                return Ok(hit.clone());
            }
        }
        let mut spec = IsotopySpec::new(&self.model, self.g.clone(), self.inner_tolerance);
        spec.direction = Direction::Inverse;
        let start = self.model.point(x);
        let r = flow(&spec, &start, t)?;
        // the inverse path ends at (φ^t)^{-1} whose conformal factor is 1/κ_g^t(y)
        let out = (r.endpoint().coords.clone(), T::one() / r.final_kappa());
        if let (Some((cache, cap)), Some(k)) = (&self.cache, key) {
            let mut w = cache.write().expect("cache lock");
            if w.len() < *cap {
                w.insert(k, out.clone());
            }
        }
        Ok(out)
    }
}

impl<T: Real> Hamiltonian<T> for SharpProduct<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        match self.preimage(t, x) {
            Ok((y, kappa)) => self.g.value(t, x) + kappa * self.h.value(t, &y),
            Err(_) => T::nan(),
        }
    }

    fn breakpoints(&self) -> Vec<T> {
        merge_breakpoints(self.g.breakpoints().into_iter().chain(self.h.breakpoints()))
    }
}

/// The Hamiltonian `g # h` (inverse flows integrated at `inner_tolerance`).
pub fn sharp_product<T: Real>(
    g: &DynHamiltonian<T>,
    h: &DynHamiltonian<T>,
    model: &ContactModel<T>,
    inner_tolerance: T,
) -> SharpProduct<T> {
    SharpProduct { g: g.clone(), h: h.clone(), model: model.clone(), inner_tolerance, cache: None }
}

/// [`sharp_product`] with memoized inverse flows (at most `capacity` entries).
pub fn sharp_product_memoized<T: Real>(
    g: &DynHamiltonian<T>,
    h: &DynHamiltonian<T>,
    model: &ContactModel<T>,
    inner_tolerance: T,
    capacity: usize,
) -> SharpProduct<T> {
    let mut s = sharp_product(g, h, model, inner_tolerance);
    s.cache = Some((RwLock::new(HashMap::new()), capacity));
    s
}

/// `(g • h)_t = 2 g_{2t}` on `[0, 1/2]` and `2 h_{2t−1}` on `(1/2, 1]`.
#[derive(Clone)]
pub struct ConcatProduct<T> {
    pub g: DynHamiltonian<T>,
    pub h: DynHamiltonian<T>,
}

impl<T: Real> ConcatProduct<T> {
    fn piece(&self, t: T) -> (&DynHamiltonian<T>, T) {
        let half = T::lit(0.5);
        if t <= half {
            (&self.g, t + t)
        } else {
            (&self.h, t + t - T::one())
        }
    }
}

impl<T: Real> Hamiltonian<T> for ConcatProduct<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        let (f, s) = self.piece(t);
        T::lit(2.0) * f.value(s, x)
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        let (f, s) = self.piece(t);
        f.differential(s, x).into_iter().map(|d| d * T::lit(2.0)).collect()
    }

    fn breakpoints(&self) -> Vec<T> {
        let half = T::lit(0.5);
        merge_breakpoints(
            self.g
                .breakpoints()
                .into_iter()
                .map(|b| b * half)
                .chain(std::iter::once(half))
                .chain(self.h.breakpoints().into_iter().map(|b| half + b * half)),
        )
    }
}

pub fn concat_product<T: Real>(g: &DynHamiltonian<T>, h: &DynHamiltonian<T>) -> DynHamiltonian<T> {
    Arc::new(ConcatProduct { g: g.clone(), h: h.clone() })
}

/// `{g, h}_α = −dg(X_h) − dh(R_α)·h`, evaluated as written.
pub fn poisson_bracket<T: Real>(
    model: &ContactModel<T>,
    g: &dyn Hamiltonian<T>,
    h: &dyn Hamiltonian<T>,
    t: T,
    x: &[T],
) -> Result<T> {
    let (xh, dh_reeb) = field_and_reeb_derivative(model, h, t, x)?;
    let dg = g.differential(t, x);
    Ok(-dot(&dg, &xh) - dh_reeb * h.value(t, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrictnessReport<T> {
    pub strict: bool,
    pub max_violation: T,
    pub tolerance: T,
}

pub const STRICTNESS_TOLERANCE: f64 = 1e-8;

/// Samples `|dh_t(R_α)|` at `probes` random `(t, x)`.
pub fn is_strict<T: Real>(
    model: &ContactModel<T>,
    h: &dyn Hamiltonian<T>,
    probes: usize,
    seed: u64,
) -> StrictnessReport<T> {
    assert!(probes >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = model.sample(probes, rng.gen());
    let mut worst = T::zero();
    for p in &pts {
        let t = if h.is_autonomous() { T::zero() } else { T::lit(rng.gen_range(0.0..1.0)) };
        let dh = h.differential(t, p.as_slice());
        let v = dot(&dh, &model.reeb(p.as_slice())).abs();
        if !(v <= worst) {
            worst = v;
        }
    }
    let tolerance = T::tol_floor(STRICTNESS_TOLERANCE);
    StrictnessReport { strict: worst <= tolerance, max_violation: worst, tolerance }
}

/// Sample lattice for [`osc_alpha`].
#[derive(Debug, Clone)]
pub struct OscGrid<T> {
    pub reeb_shifts: Vec<T>,
    pub times: Vec<T>,
    pub lattice: Vec<usize>,
}

impl<T: Real> OscGrid<T> {
    /// `n_s` shifts over one period `[0, 2π)` (or `[−w, w]` on the box), `n_t`
    /// times in `[0, 1]` (only `t = 0` for autonomous fields), `n_x` nodes per axis.
    pub fn uniform(model: &ContactModel<T>, n_s: usize, n_t: usize, n_x: usize, autonomous: bool) -> Self {
        let reeb_shifts = if model.kind().is_compact() {
            (0..n_s).map(|i| T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n_s)).collect()
        } else {
            let w = model.compact_half_width();
            (0..n_s)
                .map(|i| -w + (w + w) * T::from_usize_lossy(i) / T::from_usize_lossy(n_s.max(2) - 1))
                .collect()
        };
        let times = if autonomous || n_t <= 1 {
            vec![T::zero()]
        } else {
            (0..n_t).map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n_t - 1)).collect()
        };
        Self { reeb_shifts, times, lattice: vec![n_x; model.dim()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscReport<T> {
    /// `max_{s,t} (max_M h_t ∘ φ_R^s − min_M h_t)` over the lattice.
    pub displayed: T,
    /// `max_t (max_M h_t − min_M h_t)` over the lattice.
    pub simplified: T,
}

/// Oscillation of `h` with Reeb shifts, over a sample lattice.
pub fn osc_alpha<T: Real>(model: &ContactModel<T>, h: &dyn Hamiltonian<T>, grid: &OscGrid<T>) -> OscReport<T> {
    let pts = model.lattice_with(&grid.lattice);
    let mut displayed = T::neg_infinity();
    let mut simplified = T::neg_infinity();
    for &t in &grid.times {
        let vals: Vec<T> = pts.iter().map(|p| h.value(t, p.as_slice())).collect();
        let min = vals.iter().copied().fold(T::infinity(), T::min);
        let max = vals.iter().copied().fold(T::neg_infinity(), T::max);
        simplified = simplified.max(max - min);
        for &s in &grid.reeb_shifts {
            let shifted_max = pts
                .iter()
                .map(|p| h.value(t, model.reeb_flow(p, s).as_slice()))
                .fold(T::neg_infinity(), T::max);
            displayed = displayed.max(shifted_max - min);
        }
    }
    OscReport { displayed, simplified }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutationReport<T> {
    pub commutes: bool,
    pub max_defect: T,
    pub tolerance: T,
}

/// Checks `φ_h^1 φ_R^s x = φ_R^s φ_h^1 x` at the given points and shifts.
pub fn commutes_with_reeb<T: Real>(
    model: &ContactModel<T>,
    h: &DynHamiltonian<T>,
    points: &[ChartPoint<T>],
    shifts: &[T],
    tol: T,
    flow_tolerance: T,
) -> Result<CommutationReport<T>> {
    if !h.is_autonomous() {
        return Err(LabError::Invalid("commutation check needs an autonomous Hamiltonian".into()));
    }
    let spec = IsotopySpec::new(model, h.clone(), flow_tolerance);
    let mut worst = T::zero();
    for x in points {
        let hx = flow(&spec, x, T::one())?;
        for &s in shifts {
            let a = flow(&spec, &model.reeb_flow(x, s), T::one())?;
            let b = model.reeb_flow(hx.endpoint(), s);
            worst = worst.max(model.distance(a.endpoint().as_slice(), b.as_slice()));
        }
    }
    Ok(CommutationReport { commutes: worst <= tol, max_defect: worst, tolerance: tol })
}

/// `(t, x) ↦ h_t(φ(x))`.
pub struct Conjugated<T> {
    pub inner: DynHamiltonian<T>,
    pub map: DynMap<T>,
    pub model: ContactModel<T>,
}

impl<T: Real> Hamiltonian<T> for Conjugated<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        match self.map.apply(&self.model.point(x)) {
            Ok(img) => self.inner.value(t, img.point.as_slice()),
            Err(_) => T::nan(),
        }
    }

    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }

    fn breakpoints(&self) -> Vec<T> {
        self.inner.breakpoints()
    }
}

pub fn conjugate_hamiltonian<T: Real>(
    h: &DynHamiltonian<T>,
    map: DynMap<T>,
    model: &ContactModel<T>,
) -> DynHamiltonian<T> {
    Arc::new(Conjugated { inner: h.clone(), map, model: model.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupLawSample<T> {
    pub t: T,
    /// Distance between `φ_{g#h}^t(x)` and `φ_g^t(φ_h^t(x))`.
    pub distance: T,
    /// `|κ_{g#h}^t(x) − κ_h^t(x) κ_g^t(φ_h^t x)|`.
    pub kappa_error: T,
}

/// Compares the flow of `g # h` with the composition of the flows at `times`.
///
/// The product is integrated at `tolerance` with inner inverse flows at
/// `inner_tolerance`; the reference flows use `inner_tolerance`.
pub fn group_law_check<T: Real>(
    model: &ContactModel<T>,
    g: &DynHamiltonian<T>,
    h: &DynHamiltonian<T>,
    x: &ChartPoint<T>,
    times: &[T],
    tolerance: T,
    inner_tolerance: T,
) -> Result<Vec<GroupLawSample<T>>> {
    let t_end = times.iter().copied().fold(T::zero(), T::max);
    let stops: Vec<T> = times.iter().copied().filter(|&t| t < t_end).collect();
    let product: DynHamiltonian<T> = Arc::new(sharp_product(g, h, model, inner_tolerance));
    let joint = flow_with_stops(&IsotopySpec::new(model, product, tolerance), x, t_end, &stops)?;
    times
        .iter()
        .map(|&t| {
            let hx = flow(&IsotopySpec::new(model, h.clone(), inner_tolerance), x, t)?;
            let ghx = flow(&IsotopySpec::new(model, g.clone(), inner_tolerance), hx.endpoint(), t)?;
            let (p, k) = joint.at(t).ok_or_else(|| LabError::Invalid(format!("no flow sample at t = {t}")))?;
            Ok(GroupLawSample {
                t,
                distance: model.distance(p.as_slice(), ghx.endpoint().as_slice()),
                kappa_error: (k - hx.final_kappa() * ghx.final_kappa()).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalCheck<T> {
    pub kappa: T,
    /// `max |α(Dφ v) − κ α(v)| / (κ |α| |v|)` over the probe vectors.
    pub max_relative_error: T,
    pub probes: usize,
}

/// Verifies `(φ_h^t)^*α = κ α` at `x` by central differences of the flow along each of `vectors`.
pub fn conformal_check<T: Real>(
    spec: &IsotopySpec<T>,
    x: &ChartPoint<T>,
    t: T,
    vectors: &[Vector<T>],
    step: T,
) -> Result<ConformalCheck<T>> {
    let model = &spec.model;
    let base = flow(spec, x, t)?;
    let kappa = base.final_kappa();
    let y = base.endpoint();
    let alpha_x = model.alpha(x.as_slice());
    let alpha_y = model.alpha(y.as_slice());
    let alpha_norm = dot(&alpha_x, &alpha_x).sqrt();
    let mut worst = T::zero();
    for v in vectors {
        let shifted = |sign: T| -> Result<ChartPoint<T>> {
            let c: Vector<T> = x.coords.iter().zip(v).map(|(&a, &b)| a + sign * step * b).collect();
            Ok(flow(spec, &model.point(&c), t)?.endpoint().clone())
        };
        let (plus, minus) = (shifted(T::one())?, shifted(-T::one())?);
        let dv: Vector<T> = model
            .difference(plus.as_slice(), minus.as_slice())
            .iter()
            .map(|&d| d / (step + step))
            .collect();
        let vnorm = dot(v, v).sqrt();
        let err = (dot(&alpha_y, &dv) - kappa * dot(&alpha_x, v)).abs() / (kappa * alpha_norm * vnorm);
        if !(err <= worst) {
            worst = err;
        }
    }
    Ok(ConformalCheck { kappa, max_relative_error: worst, probes: vectors.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{constant, FnHamiltonian};
    use crate::manifold::ModelKind;
    use smallvec::smallvec;

    fn r3() -> ContactModel<f64> {
        ContactModel::new(ModelKind::R3Standard)
    }

    #[test]
    fn vector_field_examples_on_r3() {
        let m = r3();
        let p = m.point(&[0.3, -0.7, 1.1]);
        let one = constant(1.0);
        assert_eq!(hamiltonian_vector_field(&m, one.as_ref(), 0.0, &p).unwrap().as_slice(), &[0.0, 0.0, -1.0]);

        let hy = FnHamiltonian::autonomous(|x: &[f64]| x[1]).shared();
        let v = hamiltonian_vector_field(&m, hy.as_ref(), 0.0, &p).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-9 && v[1].abs() < 1e-9 && v[2].abs() < 1e-9, "{v:?}");

        let hx = FnHamiltonian::autonomous(|x: &[f64]| x[0]).shared();
        let v = hamiltonian_vector_field(&m, hx.as_ref(), 0.0, &p).unwrap();
        assert!(v[0].abs() < 1e-9 && (v[1] + 1.0).abs() < 1e-9 && (v[2] + 0.3).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn vector_field_example_on_t3() {
        let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let h = FnHamiltonian::autonomous(|x: &[f64]| (2.0 * x[2]).sin() + 0.5)
            .with_differential(|_, x| smallvec![0.0, 0.0, 2.0 * (2.0 * x[2]).cos()])
            .shared();
        for p in m.sample(20, 4) {
            let th = p.coords[2];
            let (hv, hp) = ((2.0 * th).sin() + 0.5, 2.0 * (2.0 * th).cos());
            let v = hamiltonian_vector_field(&m, h.as_ref(), 0.0, &p).unwrap();
            let expect = [-hv * th.cos() + hp * th.sin(), -hv * th.sin() - hp * th.cos(), 0.0];
            for (a, b) in v.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn broken_model_trips_the_residual_check() {
        // a "differential" whose Reeb component is inconsistent cannot break the system;
        // a NaN value does.
        let m = r3();
        let bad = FnHamiltonian::autonomous(|_: &[f64]| f64::NAN).shared();
        let r = hamiltonian_vector_field(&m, bad.as_ref(), 0.0, &m.point(&[0.0, 0.0, 0.0]));
        assert!(matches!(r, Err(LabError::ResidualTooLarge { .. })));
    }

    #[test]
    fn constant_hamiltonian_is_reversed_reeb_flow() {
        for kind in ModelKind::ALL {
            let m = ContactModel::<f64>::new(kind);
            let spec = IsotopySpec::new(&m, constant(0.8), 1e-11);
            for x in m.sample(5, 9) {
                let r = flow(&spec, &x, 0.7).unwrap();
                let expect = m.reeb_flow(&x, -0.8 * 0.7);
                assert!(m.distance(r.endpoint().as_slice(), expect.as_slice()) < 1e-9);
                assert!(r.kappa.iter().all(|&k| (k - 1.0).abs() < 1e-14));
                assert_eq!(r.times.len(), r.points.len());
            }
        }
    }

    #[test]
    fn translation_flow_on_r3() {
        let m = r3();
        let hy = FnHamiltonian::autonomous(|x: &[f64]| x[1])
            .with_differential(|_, _| smallvec![0.0, 1.0, 0.0])
            .shared();
        let r = flow(&IsotopySpec::new(&m, hy, 1e-10), &m.point(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        assert!(m.distance(r.endpoint().as_slice(), &[1.0, 0.0, 0.0]) < 1e-10);
        assert!((r.final_kappa() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn circle_fixed_point_conformal_factor() {
        let m = ContactModel::<f64>::new(ModelKind::S1Circle);
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin())
            .with_differential(|_, x| smallvec![x[0].cos()])
            .shared();
        let spec = IsotopySpec::new(&m, h, 1e-12);
        for t1 in [0.3, 1.0, 2.5] {
            let r = flow(&spec, &m.point(&[0.0]), t1).unwrap();
            assert!(r.endpoint().coords[0].abs() < 1e-14);
            assert!((r.final_kappa() - (-t1).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_direction_undoes_forward() {
        let m = ContactModel::<f64>::new(ModelKind::S1Circle);
        let h = FnHamiltonian::time_dependent(|t, x: &[f64]| (x[0] + t).sin() + 0.3).shared();
        let spec = IsotopySpec::new(&m, h, 1e-12);
        let x = m.point(&[1.0]);
        let fwd = flow(&spec, &x, 0.9).unwrap();
        let back = flow(&spec.inverse(), fwd.endpoint(), 0.9).unwrap();
        assert!(m.distance(back.endpoint().as_slice(), x.as_slice()) < 1e-9);
        assert!((back.final_kappa() * fwd.final_kappa() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn domain_escape_is_reported() {
        let m = r3().with_boxes(1.0, 1.5);
        let spec = IsotopySpec::new(&m, constant(-3.0), 1e-10);
        let r = flow(&spec, &m.point(&[0.0, 0.0, 0.0]), 1.0);
        assert!(matches!(r, Err(LabError::DomainEscape { .. })));
    }

    #[test]
    fn time_dependent_flow_outside_unit_interval_is_rejected() {
        let m = r3();
        let h = FnHamiltonian::time_dependent(|t, x: &[f64]| t * x[1]).shared();
        let spec = IsotopySpec::new(&m, h, 1e-10);
        assert!(flow(&spec, &m.point(&[0.0, 0.0, 0.0]), 1.5).is_err());
    }

    #[test]
    fn sharp_with_zero_and_constants() {
        let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let h: DynHamiltonian<f64> = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin() * x[2].cos()).shared();
        let zero_sharp = sharp_product(&constant(0.0), &h, &m, 1e-12);
        for p in m.sample(10, 2) {
            assert!((zero_sharp.value(0.6, p.as_slice()) - h.value(0.6, p.as_slice())).abs() < 1e-12);
        }
        let ab = sharp_product(&constant(0.4), &constant(-1.1), &m, 1e-12);
        for p in m.sample(10, 3) {
            assert!((ab.value(0.6, p.as_slice()) + 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn memoized_sharp_product_agrees() {
        let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let g: DynHamiltonian<f64> = FnHamiltonian::autonomous(|x: &[f64]| 0.3 * x[0].cos()).shared();
        let h: DynHamiltonian<f64> = FnHamiltonian::autonomous(|x: &[f64]| x[2].sin()).shared();
        let plain = sharp_product(&g, &h, &m, 1e-12);
        let memo = sharp_product_memoized(&g, &h, &m, 1e-12, 16);
        let p = [0.2, 1.0, 2.0];
        let a = plain.value(0.5, &p);
        assert_eq!(memo.value(0.5, &p), a);
        assert_eq!(memo.value(0.5, &p), a);
    }

    #[test]
    fn concatenation_values_and_breakpoints() {
        let g = constant(1.0);
        let h = constant(-2.0);
        let c = concat_product(&g, &h);
        assert_eq!(c.value(0.25, &[0.0]), 2.0);
        assert_eq!(c.value(0.5, &[0.0]), 2.0);
        assert_eq!(c.value(0.75, &[0.0]), -4.0);
        assert_eq!(c.breakpoints(), vec![0.5]);
        let cc = concat_product(&c, &g);
        assert_eq!(cc.breakpoints(), vec![0.25, 0.5]);
        let z = concat_product(&constant(0.0), &constant(0.0));
        assert_eq!(z.value(0.3, &[1.0]), 0.0);
    }

    #[test]
    fn bracket_examples() {
        let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let one = constant(1.0);
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin() + x[2].cos()).shared();
        for p in m.sample(10, 8) {
            let x = p.as_slice();
            // {h, 1} = dh(R)
            let b = poisson_bracket(&m, h.as_ref(), one.as_ref(), 0.0, x).unwrap();
            let dhr = dot(&h.differential(0.0, x), &m.reeb(x));
            assert!((b - dhr).abs() < 1e-9);
            assert!(poisson_bracket(&m, one.as_ref(), one.as_ref(), 0.0, x).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn strictness_examples() {
        let t3 = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let strict = FnHamiltonian::autonomous(|x: &[f64]| x[2].sin()).shared();
        assert!(is_strict(&t3, strict.as_ref(), 50, 1).strict);
        let m = r3();
        let hz = FnHamiltonian::autonomous(|x: &[f64]| x[2]).shared();
        let rep = is_strict(&m, hz.as_ref(), 20, 1);
        assert!(!rep.strict && (rep.max_violation - 1.0).abs() < 1e-8);
        assert!(is_strict(&m, constant(3.0).as_ref(), 5, 1).strict);
    }

    #[test]
    fn oscillation_examples() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let sin = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        let grid = OscGrid::uniform(&s1, 8, 1, 64, true);
        let o = osc_alpha(&s1, sin.as_ref(), &grid);
        assert!((o.displayed - 2.0).abs() < 1e-12 && (o.simplified - 2.0).abs() < 1e-12);
        assert_eq!(osc_alpha(&s1, constant(4.0).as_ref(), &grid).displayed, 0.0);
    }

    #[test]
    fn commutation_examples() {
        let t3 = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let strict = FnHamiltonian::autonomous(|x: &[f64]| 0.5 * x[2].sin()).shared();
        let pts = t3.sample(4, 5);
        let rep = commutes_with_reeb(&t3, &strict, &pts, &[0.5, 1.7], 1e-6, 1e-11).unwrap();
        assert!(rep.commutes, "{rep:?}");
        assert!(commutes_with_reeb(&t3, &constant(0.0), &pts, &[0.5], 1e-6, 1e-11).unwrap().commutes);
        let m = r3();
        let hz = FnHamiltonian::autonomous(|x: &[f64]| 0.3 * x[2]).shared();
        let pts = m.sample(3, 2);
        assert!(!commutes_with_reeb(&m, &hz, &pts, &[0.5], 1e-6, 1e-11).unwrap().commutes);
    }

    #[test]
    fn conjugation_by_rotation() {
        let s1 = ContactModel::<f64>::new(ModelKind::S1Circle);
        let h = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin()).shared();
        let rot: DynMap<f64> = Arc::new(ReebShift { model: s1.clone(), shift: 0.9 });
        let c = conjugate_hamiltonian(&h, rot, &s1);
        for th in [0.0, 1.0, 4.0] {
            assert!((c.value(0.0, &[th]) - (th + 0.9).sin()).abs() < 1e-14);
        }
        let id = conjugate_hamiltonian(&h, Arc::new(IdentityMap), &s1);
        assert_eq!(id.value(0.0, &[0.4]), 0.4f64.sin());
    }

    #[test]
    fn group_law_and_conformal_checks_on_simple_fields() {
        let m = ContactModel::<f64>::new(ModelKind::S1Circle);
        let g = FnHamiltonian::autonomous(|x: &[f64]| 0.3 * x[0].sin()).shared();
        let h = constant(0.7);
        let rows = group_law_check(&m, &g, &h, &m.point(&[1.0]), &[0.25, 0.5, 1.0], 1e-9, 1e-12).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.distance < 1e-7 && r.kappa_error < 1e-7), "{rows:?}");

        let t3 = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let strict = FnHamiltonian::autonomous(|x: &[f64]| x[2].cos() + 0.2).shared();
        let general = FnHamiltonian::autonomous(|x: &[f64]| x[0].sin() * x[2].cos()).shared();
        let vs: Vec<Vector<f64>> = vec![smallvec![1.0, 0.0, 0.0], smallvec![0.0, 1.0, 0.0], smallvec![0.0, 0.0, 1.0], smallvec![0.3, -0.5, 0.8]];
        let x = t3.point(&[0.4, 1.3, 2.2]);
        let c = conformal_check(&IsotopySpec::new(&t3, strict, 1e-11), &x, 1.0, &vs, 1e-5).unwrap();
        assert!((c.kappa - 1.0).abs() < 1e-8 && c.max_relative_error < 1e-4, "{c:?}");
        let c = conformal_check(&IsotopySpec::new(&t3, general, 1e-11), &x, 1.0, &vs, 1e-5).unwrap();
        assert!((c.kappa - 1.0).abs() > 1e-3 && c.max_relative_error < 1e-4, "{c:?}");
    }
}
