//! Chart-based model contact manifolds.
//!
//! Each model is a single global chart with periodic identifications:
//!
//! | model               | coordinates       | contact form              |
//! |---------------------|-------------------|---------------------------|
//! | `R3_STANDARD`       | `(x, y, z)`       | `dz − y dx`               |
//! | `T3_UNIT_COTANGENT` | `(q1, q2, θ)` mod 2π | `cos θ dq1 + sin θ dq2` |
//! | `S1_CIRCLE`         | `θ` mod 2π        | `dθ`                      |
//!
//! `R3_STANDARD` is non-compact. It carries a compact box, over which lattice
//! maxima and samples are taken, and a larger escape box that trajectories
//! must not leave.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{LabError, Result};
use crate::scalar::{wrap_angle, wrap_diff, Real};

/// Small inline vector for chart coordinates and covectors.
pub type Vector<T> = SmallVec<[T; 4]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "R3_STANDARD")]
    R3Standard,
    #[serde(rename = "T3_UNIT_COTANGENT")]
    T3UnitCotangent,
    #[serde(rename = "S1_CIRCLE")]
    S1Circle,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::R3Standard, ModelKind::T3UnitCotangent, ModelKind::S1Circle];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::R3Standard => "R3_STANDARD",
            ModelKind::T3UnitCotangent => "T3_UNIT_COTANGENT",
            ModelKind::S1Circle => "S1_CIRCLE",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ModelKind::R3Standard | ModelKind::T3UnitCotangent => 3,
            ModelKind::S1Circle => 1,
        }
    }

    /// Coordinate names, as used by the expression language.
    pub fn coordinate_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::R3Standard => &["x", "y", "z"],
            ModelKind::T3UnitCotangent => &["q1", "q2", "theta"],
            ModelKind::S1Circle => &["theta"],
        }
    }

    pub fn is_compact(self) -> bool {
        !matches!(self, ModelKind::R3Standard)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::UnknownModel(s.to_string()))
    }
}

/// A point of a model, stored in the canonical fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint<T> {
    pub coords: Vector<T>,
    pub model: ModelKind,
}

impl<T: Real> ChartPoint<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.as_f64()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactModel<T> {
    kind: ModelKind,
    compact_half_width: T,
    escape_half_width: T,
}

/// Builds a model by its identifier.
pub fn build_model<T: Real>(name: &str) -> Result<ContactModel<T>> {
    Ok(ContactModel::new(name.parse()?))
}

impl<T: Real> ContactModel<T> {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, compact_half_width: T::lit(2.0), escape_half_width: T::lit(20.0) }
    }

    /// Overrides the compact and escape boxes (only meaningful on `R3_STANDARD`).
    pub fn with_boxes(mut self, compact_half_width: T, escape_half_width: T) -> Self {
        assert!(compact_half_width > T::zero() && escape_half_width >= compact_half_width);
        self.compact_half_width = compact_half_width;
        self.escape_half_width = escape_half_width;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn compact_half_width(&self) -> T {
        self.compact_half_width
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        !matches!(self.kind, ModelKind::R3Standard) && axis < self.dim()
    }

    pub fn alpha(&self, x: &[T]) -> Vector<T> {
        match self.kind {
            ModelKind::R3Standard => smallvec::smallvec![-x[1], T::zero(), T::one()],
            ModelKind::T3UnitCotangent => smallvec::smallvec![x[2].cos(), x[2].sin(), T::zero()],
            ModelKind::S1Circle => smallvec::smallvec![T::one()],
        }
    }

    /// `dα` as a row-major `dim × dim` matrix with entries `dα(e_i, e_j)`.
    pub fn dalpha(&self, x: &[T]) -> Vec<T> {
        let z = T::zero();
        match self.kind {
            // d(dz − y dx) = dx ∧ dy
            ModelKind::R3Standard => vec![z, T::one(), z, -T::one(), z, z, z, z, z],
            // d(cos θ dq1 + sin θ dq2) = sin θ dq1∧dθ − cos θ dq2∧dθ
            ModelKind::T3UnitCotangent => {
                let (s, c) = x[2].sin_cos();
                vec![z, z, s, z, z, -c, -s, c, z]
            }
            ModelKind::S1Circle => vec![z],
        }
    }

    pub fn reeb(&self, x: &[T]) -> Vector<T> {
        match self.kind {
            ModelKind::R3Standard => smallvec::smallvec![T::zero(), T::zero(), T::one()],
            ModelKind::T3UnitCotangent => {
                let (s, c) = x[2].sin_cos();
                smallvec::smallvec![c, s, T::zero()]
            }
            ModelKind::S1Circle => smallvec::smallvec![T::one()],
        }
    }

    /// The covector `ι_v dα`.
    pub fn contract_dalpha(&self, x: &[T], v: &[T]) -> Vector<T> {
        let d = self.dalpha(x);
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| v[i] * d[i * n + j]).sum()).collect()
    }

    pub fn wrap_in_place(&self, coords: &mut [T]) {
        if self.kind.is_compact() {
            for c in coords.iter_mut() {
                *c = wrap_angle(*c);
            }
        }
    }

    /// Canonicalizes raw chart coordinates into a point of this model.
    pub fn point(&self, coords: &[T]) -> ChartPoint<T> {
        assert_eq!(coords.len(), self.dim(), "coordinate count does not match model dimension");
        let mut c: Vector<T> = coords.iter().copied().collect();
        self.wrap_in_place(&mut c);
        ChartPoint { coords: c, model: self.kind }
    }

    /// Displacement `a − b` in the flat quotient (shortest representative).
    pub fn difference(&self, a: &[T], b: &[T]) -> Vector<T> {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&u, &v))| if self.is_periodic(i) { wrap_diff(u - v) } else { u - v })
            .collect()
    }

    pub fn distance(&self, a: &[T], b: &[T]) -> T {
        self.difference(a, b).iter().map(|&d| d * d).sum::<T>().sqrt()
    }

    /// Closed-form Reeb flow `φ_R^s`.
    pub fn reeb_flow(&self, x: &ChartPoint<T>, s: T) -> ChartPoint<T> {
        let r = self.reeb(&x.coords);
        let moved: Vector<T> = x.coords.iter().zip(&r).map(|(&c, &v)| c + s * v).collect();
        self.point(&moved)
    }

    /// Uniform random points in the fundamental domain (compact box on `R3_STANDARD`).
    pub fn sample(&self, n: usize, seed: u64) -> Vec<ChartPoint<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c: Vector<T> = (0..self.dim()).map(|i| self.sample_axis(i, &mut rng)).collect();
                self.point(&c)
            })
            .collect()
    }

    pub(crate) fn sample_axis<R: Rng>(&self, axis: usize, rng: &mut R) -> T {
        if self.is_periodic(axis) {
            T::lit(rng.gen_range(0.0..std::f64::consts::TAU))
        } else {
            let w = self.compact_half_width.as_f64();
            T::lit(rng.gen_range(-w..w))
        }
    }

    /// Lattice nodes along one axis.
    pub fn axis_nodes(&self, axis: usize, n: usize) -> Vec<T> {
        assert!(n >= 1);
        if self.is_periodic(axis) {
            (0..n).map(|i| T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n)).collect()
        } else if n == 1 {
            vec![T::zero()]
        } else {
            let w = self.compact_half_width;
            let step = (w + w) / T::from_usize_lossy(n - 1);
            (0..n).map(|i| -w + step * T::from_usize_lossy(i)).collect()
        }
    }

    /// Tensor lattice with the given node count per axis, last axis fastest.
    pub fn lattice_with(&self, counts: &[usize]) -> Vec<ChartPoint<T>> {
        assert_eq!(counts.len(), self.dim());
        let axes: Vec<Vec<T>> = counts.iter().enumerate().map(|(i, &n)| self.axis_nodes(i, n)).collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            let c: Vector<T> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
            out.push(self.point(&c));
            for a in (0..counts.len()).rev() {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    pub fn lattice(&self, n: usize) -> Vec<ChartPoint<T>> {
        self.lattice_with(&vec![n; self.dim()])
    }

    /// Largest node spacing of `lattice_with(counts)` along any axis.
    pub fn lattice_spacing(&self, counts: &[usize]) -> Vec<T> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if self.is_periodic(i) {
                    T::TAU() / T::from_usize_lossy(n)
                } else if n <= 1 {
                    self.compact_half_width + self.compact_half_width
                } else {
                    (self.compact_half_width + self.compact_half_width) / T::from_usize_lossy(n - 1)
                }
            })
            .collect()
    }

    /// Whether a raw coordinate vector is inside the escape box (always true on compact models).
    pub fn inside_escape_box(&self, x: &[T]) -> bool {
        if self.kind.is_compact() {
            return x.iter().all(|c| c.is_finite());
        }
        x.iter().all(|c| c.abs() <= self.escape_half_width)
    }
}
