//! Time-dependent scalar fields `h_t(x)` on a chart, used as contact Hamiltonians.

use std::fmt;
use std::sync::Arc;

use crate::manifold::Vector;
use crate::scalar::Real;

/// A contact Hamiltonian `h: [0,1] × M → R` in chart coordinates.
///
/// Implementations that know their differential in closed form should override
/// [`Hamiltonian::differential`]; the default is a fourth-order central
/// difference with step [`Hamiltonian::fd_step`].
pub trait Hamiltonian<T: Real>: Send + Sync {
    fn value(&self, t: T, x: &[T]) -> T;

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        central_difference(|y| self.value(t, y), x, self.fd_step())
    }

    fn fd_step(&self) -> T {
        T::lit(1e-4)
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    /// Interior times in `(0, 1)` where the field is only piecewise smooth in `t`.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }
}

pub type DynHamiltonian<T> = Arc<dyn Hamiltonian<T>>;

/// Fourth-order central difference gradient.
pub fn central_difference<T: Real>(f: impl Fn(&[T]) -> T, x: &[T], step: T) -> Vector<T> {
    let mut y: Vector<T> = x.iter().copied().collect();
    let twelve_h = T::lit(12.0) * step;
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            let mut at = |d: T| {
                y[i] = xi + d;
                f(&y)
            };
            let two = step + step;
            let g = (-at(two) + T::lit(8.0) * at(step) - T::lit(8.0) * at(-step) + at(-two)) / twelve_h;
            y[i] = xi;
            g
        })
        .collect()
}

/// Smooth compactly supported bump of a squared radius: `exp(1 − 1/(1 − u))` for `u < 1`, else 0.
#[inline]
pub fn bump<T: Real>(u: T) -> T {
    if u < T::one() {
        (T::one() - T::one() / (T::one() - u)).exp()
    } else {
        T::zero()
    }
}

#[inline]
pub fn bump_derivative<T: Real>(u: T) -> T {
    if u < T::one() {
        let w = T::one() - u;
        -bump(u) / (w * w)
    } else {
        T::zero()
    }
}

/// Smooth monotone step: 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn smooth_step<T: Real>(u: T) -> T {
    let psi = |v: T| if v > T::zero() { (-T::one() / v).exp() } else { T::zero() };
    let (a, b) = (psi(u), psi(T::one() - u));
    a / (a + b)
}

#[derive(Debug, Clone, Copy)]
pub struct Constant<T>(pub T);

impl<T: Real> Hamiltonian<T> for Constant<T> {
    fn value(&self, _t: T, _x: &[T]) -> T {
        self.0
    }

    fn differential(&self, _t: T, x: &[T]) -> Vector<T> {
        x.iter().map(|_| T::zero()).collect()
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

type ValueFn<T> = dyn Fn(T, &[T]) -> T + Send + Sync;
type DiffFn<T> = dyn Fn(T, &[T]) -> Vector<T> + Send + Sync;

/// Closure-backed Hamiltonian with an optional closed-form differential.
pub struct FnHamiltonian<T> {
    value: Box<ValueFn<T>>,
    differential: Option<Box<DiffFn<T>>>,
    autonomous: bool,
    fd_step: T,
}

impl<T: Real> FnHamiltonian<T> {
    pub fn time_dependent(f: impl Fn(T, &[T]) -> T + Send + Sync + 'static) -> Self {
        Self { value: Box::new(f), differential: None, autonomous: false, fd_step: T::lit(1e-4) }
    }

    pub fn autonomous(f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { value: Box::new(move |_, x| f(x)), differential: None, autonomous: true, fd_step: T::lit(1e-4) }
    }

    pub fn with_differential(mut self, d: impl Fn(T, &[T]) -> Vector<T> + Send + Sync + 'static) -> Self {
        self.differential = Some(Box::new(d));
        self
    }

    pub fn with_fd_step(mut self, step: T) -> Self {
        assert!(step > T::zero());
        self.fd_step = step;
        self
    }

    pub fn shared(self) -> DynHamiltonian<T> {
        Arc::new(self)
    }
}

impl<T: Real> fmt::Debug for FnHamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnHamiltonian")
            .field("closed_form_differential", &self.differential.is_some())
            .field("autonomous", &self.autonomous)
            .finish()
    }
}

impl<T: Real> Hamiltonian<T> for FnHamiltonian<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        (self.value)(t, x)
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        match &self.differential {
            Some(d) => d(t, x),
            None => central_difference(|y| (self.value)(t, y), x, self.fd_step),
        }
    }

    fn fd_step(&self) -> T {
        self.fd_step
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// One Fourier mode `amp · cos(wave·x + omega·t + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T> {
    pub wave: Vector<T>,
    pub omega: T,
    pub phase: T,
    pub amp: T,
}

/// Compactly supported envelope `bump(Σ_{i∈axes} (x_i − c_i)² / r²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T> {
    pub center: Vector<T>,
    pub radius: T,
    pub axes: Vec<usize>,
}

impl<T: Real> Envelope<T> {
    fn squared_radius(&self, x: &[T]) -> T {
        let r2 = self.radius * self.radius;
        self.axes.iter().map(|&i| (x[i] - self.center[i]).powi(2)).sum::<T>() / r2
    }

    pub fn value(&self, x: &[T]) -> T {
        bump(self.squared_radius(x))
    }
}

/// `offset + envelope(x) · Σ modes`, with closed-form differential.
///
/// On periodic models the wave vectors must have integer entries along the
/// periodic axes. This is the workhorse of the random generators.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries<T> {
    pub offset: T,
    pub modes: Vec<Mode<T>>,
    pub envelope: Option<Envelope<T>>,
}

impl<T: Real> TrigSeries<T> {
    fn series(&self, t: T, x: &[T]) -> (T, Vector<T>) {
        let mut v = T::zero();
        let mut d: Vector<T> = x.iter().map(|_| T::zero()).collect();
        for m in &self.modes {
            let arg = m.wave.iter().zip(x).map(|(&k, &c)| k * c).sum::<T>() + m.omega * t + m.phase;
            let (s, c) = arg.sin_cos();
            v += m.amp * c;
            for (di, &k) in d.iter_mut().zip(&m.wave) {
                *di -= m.amp * k * s;
            }
        }
        (v, d)
    }
}

impl<T: Real> Hamiltonian<T> for TrigSeries<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        let (s, _) = self.series(t, x);
        match &self.envelope {
            Some(e) => self.offset + e.value(x) * s,
            None => self.offset + s,
        }
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        let (s, mut d) = self.series(t, x);
        if let Some(e) = &self.envelope {
            let u = e.squared_radius(x);
            let b = bump(u);
            let db = bump_derivative(u);
            let r2 = e.radius * e.radius;
            for di in d.iter_mut() {
                *di *= b;
            }
            for &i in &e.axes {
                d[i] += db * (x[i] - e.center[i]) * T::lit(2.0) / r2 * s;
            }
        }
        d
    }

    fn is_autonomous(&self) -> bool {
        self.modes.iter().all(|m| m.omega == T::zero())
    }
}

/// `factor · h`.
#[derive(Clone)]
pub struct Scaled<T> {
    pub inner: DynHamiltonian<T>,
    pub factor: T,
}

impl<T: Real> Hamiltonian<T> for Scaled<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        self.factor * self.inner.value(t, x)
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        self.inner.differential(t, x).into_iter().map(|d| d * self.factor).collect()
    }

    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }

    fn breakpoints(&self) -> Vec<T> {
        self.inner.breakpoints()
    }
}

/// Pointwise sum of fields.
#[derive(Clone)]
pub struct Sum<T> {
    pub terms: Vec<DynHamiltonian<T>>,
}

impl<T: Real> Hamiltonian<T> for Sum<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        self.terms.iter().map(|h| h.value(t, x)).sum()
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        let mut d: Vector<T> = x.iter().map(|_| T::zero()).collect();
        for h in &self.terms {
            for (a, b) in d.iter_mut().zip(h.differential(t, x)) {
                *a += b;
            }
        }
        d
    }

    fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|h| h.is_autonomous())
    }

    fn breakpoints(&self) -> Vec<T> {
        merge_breakpoints(self.terms.iter().flat_map(|h| h.breakpoints()))
    }
}

/// Pointwise product of two fields.
#[derive(Clone)]
pub struct Product<T> {
    pub left: DynHamiltonian<T>,
    pub right: DynHamiltonian<T>,
}

impl<T: Real> Hamiltonian<T> for Product<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        self.left.value(t, x) * self.right.value(t, x)
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        let (a, b) = (self.left.value(t, x), self.right.value(t, x));
        let (da, db) = (self.left.differential(t, x), self.right.differential(t, x));
        da.iter().zip(&db).map(|(&u, &v)| u * b + a * v).collect()
    }

    fn is_autonomous(&self) -> bool {
        self.left.is_autonomous() && self.right.is_autonomous()
    }

    fn breakpoints(&self) -> Vec<T> {
        merge_breakpoints(self.left.breakpoints().into_iter().chain(self.right.breakpoints()))
    }
}

pub(crate) fn merge_breakpoints<T: Real>(it: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = it.into_iter().filter(|&b| b > T::zero() && b < T::one()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(16.0));
    v
}

pub fn constant<T: Real>(c: T) -> DynHamiltonian<T> {
    Arc::new(Constant(c))
}

pub fn scaled<T: Real>(h: &DynHamiltonian<T>, factor: T) -> DynHamiltonian<T> {
    Arc::new(Scaled { inner: h.clone(), factor })
}

pub fn sum<T: Real>(terms: Vec<DynHamiltonian<T>>) -> DynHamiltonian<T> {
    Arc::new(Sum { terms })
}

pub fn product<T: Real>(left: &DynHamiltonian<T>, right: &DynHamiltonian<T>) -> DynHamiltonian<T> {
    Arc::new(Product { left: left.clone(), right: right.clone() })
}
