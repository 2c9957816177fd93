//! Translated points `φ(x) = φ_R^η(x)`, shift sets, and the fixed-point
//! comparison for strict Hamiltonians supported in a set displaced by another
//! isotopy.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{compose, is_strict, ContactMap, DynMap, IsotopyMap, IsotopySpec, MapImage};
use crate::error::{Hypothesis, LabError, Result};
use crate::hamiltonian::DynHamiltonian;
use crate::linalg::{norm, solve_square};
use crate::manifold::{ChartPoint, ContactModel, Vector};
use crate::scalar::Real;
use crate::sets::{ClosedSetSpec, CoordBox};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real + Serialize")]
pub struct TranslatedPoint<T> {
    #[serde(serialize_with = "ser_point")]
    pub point: ChartPoint<T>,
    pub shift: T,
    pub residual: T,
    pub kappa_at_point: T,
    pub discriminating_condition_used: bool,
}

fn ser_point<T: Real, S: serde::Serializer>(p: &ChartPoint<T>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.to_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real + Serialize")]
pub struct ShiftSet<T> {
    pub shifts: Vec<T>,
    pub eta_scan_range: [T; 2],
    pub scan_resolution: T,
    /// One certificate per shift, in the same order.
    pub certificates: Vec<TranslatedPoint<T>>,
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub tolerance: T,
    pub max_iterations: usize,
    /// Total map evaluations allowed for one call.
    pub budget: usize,
    pub require_unit_kappa: bool,
    /// Points closer than this are one translated point.
    pub cluster_tolerance: T,
    /// Seeds whose initial residual exceeds this are not refined.
    pub seed_radius: Option<T>,
    pub fd_step: T,
    /// Re-evaluate certified points with a refined map and drop unstable ones.
    pub stability_gate: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::tol_floor(1e-8),
            max_iterations: 60,
            budget: 2_000_000,
            require_unit_kappa: false,
            cluster_tolerance: T::lit(1e-6),
            seed_radius: None,
            fd_step: T::lit(1e-6),
            stability_gate: true,
        }
    }
}

fn defining_residual<T: Real>(
    model: &ContactModel<T>,
    img: &MapImage<T>,
    x: &ChartPoint<T>,
    eta: T,
    unit_kappa: bool,
) -> Vector<T> {
    let q = model.reeb_flow(&img.point, -eta);
    let mut r = model.difference(q.as_slice(), x.as_slice());
    if unit_kappa {
        r.push(img.kappa - T::one());
    }
    r
}

struct LmOutcome<T> {
    u: Vec<T>,
    residual: T,
    converged: bool,
}

/// Levenberg–Marquardt with a central-difference Jacobian.
fn levenberg_marquardt<T: Real>(
    f: &mut dyn FnMut(&[T]) -> Result<Vector<T>>,
    u0: &[T],
    tol: T,
    max_iterations: usize,
    fd_step: T,
) -> Result<LmOutcome<T>> {
    let m = u0.len();
    let mut u = u0.to_vec();
    let mut r = f(&u)?;
    let mut cost = norm(&r);
    let mut lambda = T::lit(1e-3);
    let mut slow = 0;
    for _ in 0..max_iterations {
        if cost <= tol {
            break;
        }
        let nr = r.len();
        let mut jac = vec![T::zero(); nr * m];
        for j in 0..m {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += fd_step;
            um[j] -= fd_step;
            let (rp, rm) = (f(&up)?, f(&um)?);
            for i in 0..nr {
                jac[i * m + j] = (rp[i] - rm[i]) / (fd_step + fd_step);
            }
        }
        let mut a = vec![T::zero(); m * m];
        let mut g = vec![T::zero(); m];
        for i in 0..nr {
            for p in 0..m {
                g[p] += jac[i * m + p] * r[i];
                for q in 0..m {
                    a[p * m + q] += jac[i * m + p] * jac[i * m + q];
                }
            }
        }
        let mut improved = false;
        while lambda < T::lit(1e8) {
            let mut damped = a.clone();
            for p in 0..m {
                damped[p * m + p] += lambda * (a[p * m + p] + T::one());
            }
            let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
            if let Some(step) = solve_square(&damped, m, &neg_g) {
                let trial: Vec<T> = u.iter().zip(&step).map(|(&a, &b)| a + b).collect();
                let rt = match f(&trial) {
                    Ok(rt) => rt,
                    Err(LabError::DomainEscape { .. }) => {
                        lambda *= T::lit(4.0);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let ct = norm(&rt);
                if ct < cost {
                    slow = if ct > T::lit(0.9) * cost { slow + 1 } else { 0 };
                    u = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                    improved = true;
                    break;
                }
            }
            lambda *= T::lit(4.0);
        }
        // stalled, or creeping towards a nonzero local minimum
        if !improved || slow >= 4 {
            break;
        }
    }
    Ok(LmOutcome { u, residual: cost, converged: cost <= tol })
}

fn cluster_points<T: Real>(model: &ContactModel<T>, pts: Vec<TranslatedPoint<T>>, tol: T) -> Vec<TranslatedPoint<T>> {
    let mut out: Vec<TranslatedPoint<T>> = Vec::new();
    for p in pts {
        let dup = out.iter().any(|q| {
            (q.shift - p.shift).abs() <= tol && model.distance(q.point.as_slice(), p.point.as_slice()) <= tol
        });
        if !dup {
            out.push(p);
        }
    }
    out
}

struct Budget {
    used: AtomicUsize,
    limit: usize,
}

impl Budget {
    fn exhausted(&self) -> bool {
        self.used.load(Ordering::Relaxed) > self.limit
    }

    fn charge(&self, n: usize) {
        self.used.fetch_add(n, Ordering::Relaxed);
    }

    fn check(&self) -> Result<()> {
        if self.exhausted() {
            Err(LabError::SolverBudgetExceeded { budget: self.limit })
        } else {
            Ok(())
        }
    }
}

fn stable_under_refinement<T: Real>(
    model: &ContactModel<T>,
    phi: &dyn ContactMap<T>,
    tp: &TranslatedPoint<T>,
    cfg: &SolverConfig<T>,
    budget: &Budget,
) -> Result<bool> {
    if !cfg.stability_gate {
        return Ok(true);
    }
    let Some(fine) = phi.refined() else { return Ok(true) };
    budget.charge(1);
    let img = fine.apply(&tp.point)?;
    let r = norm(&defining_residual(model, &img, &tp.point, tp.shift, cfg.require_unit_kappa));
    Ok((r - tp.residual).abs() <= T::lit(10.0) * cfg.tolerance)
}

/// Translated points of `phi` with shift `eta`, refined from the given seeds.
///
/// The map should be integrated at a tolerance at least ten times finer than
/// `cfg.tolerance`.
pub fn find_translated_points<T: Real>(
    model: &ContactModel<T>,
    phi: &dyn ContactMap<T>,
    eta: T,
    seeds: &[ChartPoint<T>],
    cfg: &SolverConfig<T>,
) -> Result<Vec<TranslatedPoint<T>>> {
    let budget = Budget { used: AtomicUsize::new(0), limit: cfg.budget };
    let found: Vec<Option<TranslatedPoint<T>>> = seeds
        .par_iter()
        .map(|seed| -> Result<Option<TranslatedPoint<T>>> {
            if budget.exhausted() {
                return Ok(None);
            }
            let mut evals = 0usize;
            let mut last: Option<(Vec<T>, MapImage<T>)> = None;
            let mut residual_at = |u: &[T]| -> Result<Vector<T>> {
                let x = model.point(u);
                let img = match &last {
                    Some((k, img)) if k.as_slice() == u => img.clone(),
                    _ => {
                        evals += 1;
                        let img = phi.apply(&x)?;
                        last = Some((u.to_vec(), img.clone()));
                        img
                    }
                };
                Ok(defining_residual(model, &img, &x, eta, cfg.require_unit_kappa))
            };
            let r0 = norm(&residual_at(seed.as_slice())?);
            let out = if cfg.seed_radius.is_some_and(|rad| r0 > rad) {
                None
            } else {
                let lm = levenberg_marquardt(&mut residual_at, seed.as_slice(), cfg.tolerance, cfg.max_iterations, cfg.fd_step)?;
                if lm.converged {
                    let point = model.point(&lm.u);
                    let kappa = phi.apply(&point)?.kappa;
                    evals += 1;
                    Some(TranslatedPoint {
                        point,
                        shift: eta,
                        residual: lm.residual,
                        kappa_at_point: kappa,
                        discriminating_condition_used: cfg.require_unit_kappa,
                    })
                } else {
                    None
                }
            };
            budget.charge(evals);
            match out {
                Some(tp) if stable_under_refinement(model, phi, &tp, cfg, &budget)? => Ok(Some(tp)),
                _ => Ok(None),
            }
        })
        .collect::<Result<_>>()?;
    budget.check()?;
    Ok(cluster_points(model, found.into_iter().flatten().collect(), cfg.cluster_tolerance))
}

#[derive(Debug, Clone)]
pub struct ShiftScan<T> {
    pub eta_min: T,
    pub eta_max: T,
    /// Number of initial shifts `η₀` in the scan range.
    pub eta_seeds: usize,
    pub seeds: Vec<ChartPoint<T>>,
}

/// Scans `[eta_min, eta_max]` for shifts of translated points of `phi`,
/// solving jointly for `(η, x)` from every `(η₀, x₀)` seed pair.
pub fn shift_set<T: Real>(
    model: &ContactModel<T>,
    phi: &dyn ContactMap<T>,
    scan: &ShiftScan<T>,
    cfg: &SolverConfig<T>,
) -> Result<ShiftSet<T>> {
    assert!(scan.eta_max >= scan.eta_min && scan.eta_seeds >= 1);
    let width = scan.eta_max - scan.eta_min;
    let resolution = if scan.eta_seeds > 1 { width / T::from_usize_lossy(scan.eta_seeds - 1) } else { width };
    let etas: Vec<T> = (0..scan.eta_seeds).map(|i| scan.eta_min + resolution * T::from_usize_lossy(i)).collect();
    let pairs: Vec<(T, &ChartPoint<T>)> = etas.iter().flat_map(|&e| scan.seeds.iter().map(move |s| (e, s))).collect();
    let budget = Budget { used: AtomicUsize::new(0), limit: cfg.budget };
    let slack = T::lit(1e-9) * width.max(T::one());
    let found: Vec<Option<TranslatedPoint<T>>> = pairs
        .par_iter()
        .map(|&(eta0, seed)| -> Result<Option<TranslatedPoint<T>>> {
            if budget.exhausted() {
                return Ok(None);
            }
            let mut evals = 0usize;
            let mut last: Option<(Vec<T>, MapImage<T>)> = None;
            // unknowns are (η, x); η first so its Jacobian column reuses the cached image
            let mut residual_at = |u: &[T]| -> Result<Vector<T>> {
                let x = model.point(&u[1..]);
                let img = match &last {
                    Some((k, img)) if k.as_slice() == &u[1..] => img.clone(),
                    _ => {
                        evals += 1;
                        let img = phi.apply(&x)?;
                        last = Some((u[1..].to_vec(), img.clone()));
                        img
                    }
                };
                Ok(defining_residual(model, &img, &x, u[0], cfg.require_unit_kappa))
            };
            let mut u0 = vec![eta0];
            u0.extend_from_slice(seed.as_slice());
            let r0 = norm(&residual_at(&u0)?);
            let out = if cfg.seed_radius.is_some_and(|rad| r0 > rad) {
                None
            } else {
                let lm = levenberg_marquardt(&mut residual_at, &u0, cfg.tolerance, cfg.max_iterations, cfg.fd_step)?;
                let eta = lm.u[0];
                if lm.converged && eta >= scan.eta_min - slack && eta <= scan.eta_max + slack {
                    let point = model.point(&lm.u[1..]);
                    evals += 1;
                    let kappa = phi.apply(&point)?.kappa;
                    Some(TranslatedPoint {
                        point,
                        shift: eta,
                        residual: lm.residual,
                        kappa_at_point: kappa,
                        discriminating_condition_used: cfg.require_unit_kappa,
                    })
                } else {
                    None
                }
            };
            budget.charge(evals);
            match out {
                Some(tp) if stable_under_refinement(model, phi, &tp, cfg, &budget)? => Ok(Some(tp)),
                _ => Ok(None),
            }
        })
        .collect::<Result<_>>()?;
    budget.check()?;

    let mut certified: Vec<TranslatedPoint<T>> = found.into_iter().flatten().collect();
    certified.sort_by(|a, b| a.shift.partial_cmp(&b.shift).unwrap());
    let cluster_tol = T::lit(1e-3) * width.max(T::epsilon());
    let mut shifts = Vec::new();
    let mut certificates: Vec<TranslatedPoint<T>> = Vec::new();
    let mut group_end = T::neg_infinity();
    for tp in certified {
        if tp.shift - group_end <= cluster_tol {
            group_end = tp.shift;
            let best = certificates.last_mut().expect("group has a certificate");
            if tp.residual < best.residual {
                *best = tp.clone();
                *shifts.last_mut().expect("group has a shift") = tp.shift;
            }
        } else {
            group_end = tp.shift;
            shifts.push(tp.shift);
            certificates.push(tp);
        }
    }
    Ok(ShiftSet { shifts, eta_scan_range: [scan.eta_min, scan.eta_max], scan_resolution: resolution, certificates })
}

/// Hausdorff distance between two finite sets of reals (0 for two empty sets).
pub fn hausdorff<T: Real>(a: &[T], b: &[T]) -> T {
    if a.is_empty() && b.is_empty() {
        return T::zero();
    }
    if a.is_empty() || b.is_empty() {
        return T::infinity();
    }
    let one_sided = |p: &[T], q: &[T]| {
        p.iter().map(|&x| q.iter().map(|&y| (x - y).abs()).fold(T::infinity(), T::min)).fold(T::zero(), T::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// One row of a per-shift translated point scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub eta: f64,
    pub n_translated_points: usize,
    pub max_residual: f64,
}

pub fn scan_rows<T: Real>(
    model: &ContactModel<T>,
    phi: &dyn ContactMap<T>,
    etas: &[T],
    seeds: &[ChartPoint<T>],
    cfg: &SolverConfig<T>,
) -> Result<Vec<ScanRow>> {
    etas.iter()
        .map(|&eta| {
            let pts = find_translated_points(model, phi, eta, seeds, cfg)?;
            Ok(ScanRow {
                eta: eta.as_f64(),
                n_translated_points: pts.len(),
                max_residual: pts.iter().map(|p| p.residual.as_f64()).fold(0.0, f64::max),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementReport<T> {
    pub displaces: bool,
    pub samples_in_set: usize,
    /// Smallest `ρ` of an image point (positive means outside the set).
    pub min_image_rho: T,
    pub gap: T,
}

/// Checks `φ(U) ∩ U = ∅` on the samples lying in `U`, with `ρ(φ(x)) ≥ gap`.
pub fn displacement_check<T: Real>(
    phi: &dyn ContactMap<T>,
    u: &ClosedSetSpec<T>,
    samples: &[ChartPoint<T>],
    gap: T,
) -> Result<DisplacementReport<T>> {
    let inside: Vec<&ChartPoint<T>> = samples.iter().filter(|p| u.contains(p.as_slice())).collect();
    let rhos: Vec<T> = inside
        .par_iter()
        .map(|p| phi.apply(p).map(|img| u.rho(img.point.as_slice())))
        .collect::<Result<_>>()?;
    let min_image_rho = rhos.iter().copied().fold(T::infinity(), T::min);
    Ok(DisplacementReport { displaces: min_image_rho >= gap, samples_in_set: inside.len(), min_image_rho, gap })
}

/// Inputs for [`fixed_point_invariance_check`]: a strict `h` supported in `U` and an `f` displacing `U`.
#[derive(Clone)]
pub struct FixedPointComparison<T> {
    pub model: ContactModel<T>,
    pub h: DynHamiltonian<T>,
    pub f: DynHamiltonian<T>,
    pub u: ClosedSetSpec<T>,
    pub region: CoordBox<T>,
    pub lattice: Vec<usize>,
    pub etas: Vec<T>,
    pub flow_tolerance: T,
    pub fixed_tolerance: T,
    pub hypothesis_samples: usize,
    pub displacement_gap: T,
    pub seed: u64,
    pub solver: SolverConfig<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointRow<T> {
    pub eta: T,
    /// Lattice points fixed by `φ_R^{−η} φ_h φ_f` and by `φ_R^{−η} φ_f`.
    pub fixed_composite: usize,
    pub fixed_f: usize,
    pub symmetric_difference: usize,
    pub solved_composite: usize,
    pub solved_f: usize,
    /// Solved fixed points of one map that are not fixed by the other.
    pub cross_mismatches: usize,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport<T> {
    pub hypotheses: Vec<HypothesisCheck>,
    pub rows: Vec<FixedPointRow<T>>,
    pub all_agree: bool,
}

fn hypothesis_checks<T: Real>(s: &FixedPointComparison<T>) -> Result<Vec<HypothesisCheck>> {
    let m = &s.model;
    let n = s.hypothesis_samples.max(1);
    let mut out = Vec::new();

    let strict = is_strict(m, s.h.as_ref(), n, s.seed);
    out.push(HypothesisCheck {
        hypothesis: Hypothesis::StrictHamiltonian,
        passed: strict.strict,
        detail: format!("max |dh(R)| = {:e}", strict.max_violation.as_f64()),
    });

    let outside = ClosedSetSpec::new("outside", {
        let u = s.u.clone();
        move |x: &[T]| -u.rho(x)
    });
    let samples = s.region.sample_in(m, &outside, n, 50, s.seed ^ 0x5eed);
    let times = [T::zero(), T::lit(0.37), T::lit(0.81), T::one()];
    let worst = samples
        .iter()
        .flat_map(|p| times.iter().map(move |&t| s.h.value(t, p.as_slice()).abs()))
        .fold(T::zero(), T::max);
    let passed = !(worst > T::zero()) && !samples.is_empty();
    out.push(HypothesisCheck {
        hypothesis: Hypothesis::SupportInsideSet,
        passed,
        detail: format!("max |h| outside U = {:e} on {} samples", worst.as_f64(), samples.len()),
    });

    let inside = s.region.sample_in(m, &s.u, n, 50, s.seed ^ 0x1e55);
    let shifts = [T::lit(-2.3), T::lit(-0.5), T::lit(0.7), T::lit(3.1)];
    let worst = inside
        .iter()
        .flat_map(|p| shifts.iter().map(move |&r| s.u.rho(m.reeb_flow(p, r).as_slice())))
        .fold(T::neg_infinity(), T::max);
    out.push(HypothesisCheck {
        hypothesis: Hypothesis::ReebInvariantSet,
        passed: worst <= T::tol_floor(1e-12) && !inside.is_empty(),
        detail: format!("max ρ(φ_R^s x) over U = {:e} on {} samples", worst.as_f64(), inside.len()),
    });

    let phi_f = IsotopyMap::time_one(IsotopySpec::new(m, s.f.clone(), s.flow_tolerance));
    let d = displacement_check(&phi_f, &s.u, &inside, s.displacement_gap)?;
    out.push(HypothesisCheck {
        hypothesis: Hypothesis::Displacement,
        passed: d.displaces,
        detail: format!("min ρ(φ_f(x)) = {:e} over {} samples, gap {:e}", d.min_image_rho.as_f64(), d.samples_in_set, d.gap.as_f64()),
    });
    Ok(out)
}

/// Compares the fixed-point sets of `φ_R^{−η} φ_h^1 φ_f^1` and `φ_R^{−η} φ_f^1`
/// for every `η`, after verifying the hypotheses under which they coincide.
pub fn fixed_point_invariance_check<T: Real>(s: &FixedPointComparison<T>) -> Result<FixedPointReport<T>> {
    let hypotheses = hypothesis_checks(s)?;
    if let Some(bad) = hypotheses.iter().find(|c| !c.passed) {
        return Err(LabError::HypothesisViolated { hypothesis: bad.hypothesis, detail: bad.detail.clone() });
    }
    let m = &s.model;
    let phi_f: DynMap<T> = Arc::new(IsotopyMap::time_one(IsotopySpec::new(m, s.f.clone(), s.flow_tolerance)));
    let phi_h: DynMap<T> = Arc::new(IsotopyMap::time_one(IsotopySpec::new(m, s.h.clone(), s.flow_tolerance)));
    let composite = compose(vec![phi_h.clone(), phi_f.clone()]);
    let lattice = s.region.lattice(m, &s.lattice);
    let images: Vec<(ChartPoint<T>, ChartPoint<T>)> = lattice
        .par_iter()
        .map(|x| {
            let a = phi_f.apply(x)?.point;
            let b = phi_h.apply(&a)?.point;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let spacing = s
        .region
        .lo
        .iter()
        .zip(&s.region.hi)
        .zip(&s.lattice)
        .map(|((&a, &b), &n)| if n > 1 { (b - a) / T::from_usize_lossy(n - 1) } else { T::zero() })
        .fold(T::zero(), T::max);
    let mut solver = s.solver.clone();
    solver.seed_radius = Some(solver.seed_radius.unwrap_or(spacing * T::lit(0.5)));

    let mut rows = Vec::with_capacity(s.etas.len());
    for &eta in &s.etas {
        let mut fixed_c = 0;
        let mut fixed_f = 0;
        let mut sym = 0;
        for (x, (a, b)) in lattice.iter().zip(&images) {
            let rf = m.distance(m.reeb_flow(a, -eta).as_slice(), x.as_slice()) <= s.fixed_tolerance;
            let rc = m.distance(m.reeb_flow(b, -eta).as_slice(), x.as_slice()) <= s.fixed_tolerance;
            fixed_f += rf as usize;
            fixed_c += rc as usize;
            sym += (rf != rc) as usize;
        }
        let solved_c = find_translated_points(m, composite.as_ref(), eta, &lattice, &solver)?;
        let solved_f = find_translated_points(m, phi_f.as_ref(), eta, &lattice, &solver)?;
        let fixed_by = |phi: &DynMap<T>, p: &ChartPoint<T>| -> Result<bool> {
            let img = phi.apply(p)?;
            Ok(m.distance(m.reeb_flow(&img.point, -eta).as_slice(), p.as_slice()) <= s.fixed_tolerance)
        };
        let mut mismatches = 0;
        for tp in &solved_c {
            mismatches += (!fixed_by(&phi_f, &tp.point)?) as usize;
        }
        for tp in &solved_f {
            mismatches += (!fixed_by(&composite, &tp.point)?) as usize;
        }
        rows.push(FixedPointRow {
            eta,
            fixed_composite: fixed_c,
            fixed_f,
            symmetric_difference: sym,
            solved_composite: solved_c.len(),
            solved_f: solved_f.len(),
            cross_mismatches: mismatches,
            agree: sym == 0 && mismatches == 0,
        });
    }
    let all_agree = rows.iter().all(|r| r.agree);
    Ok(FixedPointReport { hypotheses, rows, all_agree })
}

/// The cylinder example on `R3_STANDARD`: `U = {x² + y² ≤ 1}`, `h` a radial
/// bump supported in `r ≤ 0.9`, and `f = 3y·χ(r)` translating the core
/// `r ≤ 4.5` by 3 along `x`.
pub fn cylinder_example<T: Real>(etas: Vec<T>) -> FixedPointComparison<T> {
    use crate::hamiltonian::{bump, smooth_step, FnHamiltonian};
    let model = ContactModel::new(crate::manifold::ModelKind::R3Standard).with_boxes(T::lit(7.0), T::lit(1e3));
    let h = FnHamiltonian::autonomous(|x: &[T]| T::lit(0.8) * bump((x[0] * x[0] + x[1] * x[1]) / T::lit(0.81))).shared();
    let f = FnHamiltonian::autonomous(|x: &[T]| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        T::lit(3.0) * x[1] * smooth_step((T::lit(6.0) - r) / T::lit(1.5))
    })
    .shared();
    FixedPointComparison {
        model,
        h,
        f,
        u: ClosedSetSpec::cylinder(T::one()),
        region: CoordBox::new(&[T::lit(-7.0), T::lit(-7.0), T::lit(-2.0)], &[T::lit(7.0), T::lit(7.0), T::lit(2.0)]),
        lattice: vec![15, 15, 3],
        etas,
        flow_tolerance: T::tol_floor(1e-10),
        fixed_tolerance: T::lit(1e-5),
        hypothesis_samples: 400,
        displacement_gap: T::lit(0.5),
        seed: 7,
        solver: SolverConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{IdentityMap, ReebShift};
    use crate::hamiltonian::{constant, FnHamiltonian};
    use crate::manifold::ModelKind;
    use smallvec::smallvec;
    use std::f64::consts::PI;

    fn circle_rotation(c: f64) -> (ContactModel<f64>, IsotopyMap<f64>) {
        let m = ContactModel::new(ModelKind::S1Circle);
        let map = IsotopyMap::time_one(IsotopySpec::new(&m, constant(c), 1e-12));
        (m, map)
    }

    #[test]
    fn constant_on_circle_has_every_point_translated() {
        let (m, phi) = circle_rotation(0.7);
        let seeds = m.lattice(16);
        let pts = find_translated_points(&m, &phi, -0.7, &seeds, &SolverConfig::default()).unwrap();
        assert_eq!(pts.len(), 16);
        assert!(pts.iter().all(|p| p.residual <= 1e-8 && (p.kappa_at_point - 1.0).abs() < 1e-12));
    }

    #[test]
    fn translation_on_r3_has_no_translated_points() {
        let m = ContactModel::<f64>::new(ModelKind::R3Standard);
        let hy = FnHamiltonian::autonomous(|x: &[f64]| x[1]).with_differential(|_, _| smallvec![0.0, 1.0, 0.0]).shared();
        let phi = IsotopyMap::time_one(IsotopySpec::new(&m, hy, 1e-11));
        for eta in [-1.0, 0.0, 0.5] {
            let pts = find_translated_points(&m, &phi, eta, &m.lattice(3), &SolverConfig::default()).unwrap();
            assert!(pts.is_empty());
        }
    }

    #[test]
    fn identity_at_zero_shift_fixes_every_seed() {
        for kind in ModelKind::ALL {
            let m = ContactModel::<f64>::new(kind);
            let seeds = m.lattice(3);
            let cfg = SolverConfig { require_unit_kappa: true, ..Default::default() };
            let pts = find_translated_points(&m, &IdentityMap, 0.0, &seeds, &cfg).unwrap();
            assert_eq!(pts.len(), seeds.len());
            assert!(pts.iter().all(|p| p.kappa_at_point == 1.0 && p.discriminating_condition_used));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let (m, phi) = circle_rotation(0.7);
        let cfg = SolverConfig { budget: 3, ..Default::default() };
        let r = find_translated_points(&m, &phi, 0.2, &m.lattice(8), &cfg);
        assert!(matches!(r, Err(LabError::SolverBudgetExceeded { budget: 3 })));
    }

    #[test]
    fn circle_shift_set() {
        let (m, phi) = circle_rotation(0.7);
        let scan = ShiftScan { eta_min: -2.0 * PI, eta_max: 2.0 * PI, eta_seeds: 25, seeds: m.lattice(4) };
        let s = shift_set(&m, &phi, &scan, &SolverConfig::default()).unwrap();
        let expect = [-0.7, -0.7 + 2.0 * PI];
        assert!(hausdorff(&s.shifts, &expect) < 1e-6, "{:?}", s.shifts);
        assert_eq!(s.certificates.len(), s.shifts.len());
    }

    #[test]
    fn identity_shift_set_is_zero() {
        for kind in ModelKind::ALL {
            let m = ContactModel::<f64>::new(kind);
            let scan = ShiftScan { eta_min: -1.0, eta_max: 1.0, eta_seeds: 5, seeds: m.lattice(2) };
            let s = shift_set(&m, &IdentityMap, &scan, &SolverConfig::default()).unwrap();
            assert_eq!(s.shifts.len(), 1, "{kind}: {:?}", s.shifts);
            assert!(s.shifts[0].abs() < 1e-8);
        }
    }

    #[test]
    fn torus_constant_shift_set() {
        let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let phi = IsotopyMap::time_one(IsotopySpec::new(&m, constant(0.4), 1e-12));
        let scan = ShiftScan { eta_min: -1.5, eta_max: 1.5, eta_seeds: 7, seeds: m.lattice(3) };
        let s = shift_set(&m, &phi, &scan, &SolverConfig::default()).unwrap();
        assert!(hausdorff(&s.shifts, &[-0.4]) < 1e-6, "{:?}", s.shifts);
    }

    #[test]
    fn reeb_conjugation_preserves_shift_set() {
        let m = ContactModel::<f64>::new(ModelKind::S1Circle);
        let h = FnHamiltonian::autonomous(|x: &[f64]| 0.5 + 0.3 * x[0].sin()).shared();
        let phi: DynMap<f64> = Arc::new(IsotopyMap::time_one(IsotopySpec::new(&m, h, 1e-12)));
        let s = 1.1;
        let conj = compose(vec![
            Arc::new(ReebShift { model: m.clone(), shift: s }),
            phi.clone(),
            Arc::new(ReebShift { model: m.clone(), shift: -s }),
        ]);
        // on the circle every shift between the extremes of φ(x) − x is attained;
        // requiring κ = 1 singles out a discrete set
        let scan = ShiftScan { eta_min: -1.0, eta_max: 0.0, eta_seeds: 6, seeds: m.lattice(12) };
        let cfg = SolverConfig { require_unit_kappa: true, ..Default::default() };
        let a = shift_set(&m, phi.as_ref(), &scan, &cfg).unwrap();
        let b = shift_set(&m, conj.as_ref(), &scan, &cfg).unwrap();
        assert!(!a.shifts.is_empty());
        assert!(hausdorff(&a.shifts, &b.shifts) <= 1e-3, "{:?} {:?}", a.shifts, b.shifts);
    }

    #[test]
    fn displacement_examples() {
        let m = ContactModel::<f64>::new(ModelKind::R3Standard);
        let u = ClosedSetSpec::cylinder(1.0);
        let samples = CoordBox::new(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]).sample(&m, 200, 3);
        let zero = IsotopyMap::time_one(IsotopySpec::new(&m, constant(0.0), 1e-10));
        assert!(!displacement_check(&zero, &u, &samples, 0.0).unwrap().displaces);
        let hy = FnHamiltonian::autonomous(|x: &[f64]| 3.0 * x[1]).shared();
        let shift = IsotopyMap::time_one(IsotopySpec::new(&m, hy, 1e-10));
        let d = displacement_check(&shift, &u, &samples, 0.5).unwrap();
        assert!(d.displaces && d.samples_in_set > 100);
        let empty = displacement_check(&zero, &ClosedSetSpec::empty(), &samples, 0.0).unwrap();
        assert!(empty.displaces && empty.samples_in_set == 0);
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff::<f64>(&[], &[]), 0.0);
        assert_eq!(hausdorff(&[1.0], &[]), f64::INFINITY);
        assert_eq!(hausdorff(&[0.0, 1.0], &[0.0]), 1.0);
    }
}
