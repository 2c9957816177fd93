//! Closed sets given as sublevel sets `{ρ ≤ 0}`, and coordinate boxes.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifold::{ChartPoint, ContactModel, Vector};
use crate::scalar::{wrap_diff, Real};

type Rho<T> = dyn Fn(&[T]) -> T + Send + Sync;

/// A closed set `{x : ρ(x) ≤ 0}`.
#[derive(Clone)]
pub struct ClosedSetSpec<T> {
    rho: Arc<Rho<T>>,
    pub label: String,
}

impl<T: Real> fmt::Debug for ClosedSetSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedSetSpec({})", self.label)
    }
}

impl<T: Real> ClosedSetSpec<T> {
    pub fn new(label: impl Into<String>, rho: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { rho: Arc::new(rho), label: label.into() }
    }

    pub fn whole() -> Self {
        Self::new("M", |_| -T::one())
    }

    pub fn empty() -> Self {
        Self::new("∅", |_| T::one())
    }

    pub fn rho(&self, x: &[T]) -> T {
        (self.rho)(x)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.rho(x) <= T::zero()
    }

    pub fn union(&self, other: &Self) -> Self {
        let (a, b) = (self.rho.clone(), other.rho.clone());
        Self { rho: Arc::new(move |x| a(x).min(b(x))), label: format!("({} ∪ {})", self.label, other.label) }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (self.rho.clone(), other.rho.clone());
        Self { rho: Arc::new(move |x| a(x).max(b(x))), label: format!("({} ∩ {})", self.label, other.label) }
    }

    /// `{ρ ≤ margin}`, a closed neighbourhood for positive margins.
    pub fn inflate(&self, margin: T) -> Self {
        let a = self.rho.clone();
        Self { rho: Arc::new(move |x| a(x) - margin), label: format!("{}+{}", self.label, margin) }
    }

    /// Closed arc `{θ : |θ − center| ≤ half_width}` on the circle coordinate `axis`.
    pub fn arc(axis: usize, center: T, half_width: T) -> Self {
        Self::new(format!("arc[{axis}]({center}±{half_width})"), move |x| {
            wrap_diff(x[axis] - center).abs() - half_width
        })
    }

    /// Arc from `a` to `b` (counter-clockwise) on the circle coordinate `axis`.
    pub fn arc_between(axis: usize, a: T, b: T) -> Self {
        let mut len = b - a;
        if len < T::zero() {
            len += T::TAU();
        }
        let half = len * T::lit(0.5);
        let mut s = Self::arc(axis, a + half, half);
        s.label = format!("arc[{axis}][{a}, {b}]");
        s
    }

    /// Solid cylinder `{x² + y² ≤ r²}` on `R3_STANDARD` (ρ is `|(x, y)| − r`).
    pub fn cylinder(radius: T) -> Self {
        Self::new(format!("cylinder({radius})"), move |x| (x[0] * x[0] + x[1] * x[1]).sqrt() - radius)
    }
}

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordBox<T> {
    pub lo: Vector<T>,
    pub hi: Vector<T>,
}

impl<T: Real> CoordBox<T> {
    pub fn new(lo: &[T], hi: &[T]) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(hi).all(|(a, b)| a <= b));
        Self { lo: lo.iter().copied().collect(), hi: hi.iter().copied().collect() }
    }

    /// The model's fundamental domain (its compact box on `R3_STANDARD`).
    pub fn of_model(model: &ContactModel<T>) -> Self {
        let (lo, hi): (Vector<T>, Vector<T>) = (0..model.dim())
            .map(|i| {
                if model.is_periodic(i) {
                    (T::zero(), T::TAU())
                } else {
                    (-model.compact_half_width(), model.compact_half_width())
                }
            })
            .unzip();
        Self { lo, hi }
    }

    /// Tensor lattice including both ends of each axis (periodic axes of the
    /// model exclude the duplicate right end), last axis fastest.
    pub fn lattice(&self, model: &ContactModel<T>, counts: &[usize]) -> Vec<ChartPoint<T>> {
        assert_eq!(counts.len(), self.lo.len());
        let axes: Vec<Vec<T>> = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let (a, b) = (self.lo[i], self.hi[i]);
                let full_period = model.is_periodic(i) && (b - a - T::TAU()).abs() <= T::epsilon() * T::lit(64.0);
                let denom = if full_period || n <= 1 { n } else { n - 1 };
                (0..n).map(|k| a + (b - a) * T::from_usize_lossy(k) / T::from_usize_lossy(denom.max(1))).collect()
            })
            .collect();
        let mut out = Vec::with_capacity(counts.iter().product());
        let mut idx = vec![0usize; counts.len()];
        loop {
            let c: Vector<T> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
            out.push(model.point(&c));
            let mut a = counts.len();
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn sample(&self, model: &ContactModel<T>, n: usize, seed: u64) -> Vec<ChartPoint<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c: Vector<T> = self
                    .lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(&a, &b)| a + (b - a) * T::lit(rng.gen_range(0.0..1.0)))
                    .collect();
                model.point(&c)
            })
            .collect()
    }

    /// Rejection samples of `set` inside the box (at most `n`, from `n * tries_per_sample` draws).
    pub fn sample_in(
        &self,
        model: &ContactModel<T>,
        set: &ClosedSetSpec<T>,
        n: usize,
        tries_per_sample: usize,
        seed: u64,
    ) -> Vec<ChartPoint<T>> {
        self.sample(model, n * tries_per_sample, seed)
            .into_iter()
            .filter(|p| set.contains(p.as_slice()))
            .take(n)
            .collect()
    }
}
