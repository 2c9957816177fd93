//! Random Hamiltonians for property tests and experiments.

use rand::Rng;
use smallvec::smallvec;

use crate::hamiltonian::{Envelope, Mode, TrigSeries};
use crate::manifold::{ContactModel, ModelKind, Vector};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorOptions {
    pub modes: usize,
    pub amplitude: f64,
    pub max_wave: i32,
    pub time_dependent: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { modes: 3, amplitude: 0.5, max_wave: 2, time_dependent: true }
    }
}

/// A random trigonometric Hamiltonian, strict (`dh(R) = 0`) when asked.
///
/// Strict fields depend only on `t` on the circle, only on `θ` on the torus and
/// are `z`-independent bumps on `R3_STANDARD`. Fields on `R3_STANDARD` are
/// supported inside the compact box.
pub fn random_hamiltonian<T: Real, R: Rng>(
    model: &ContactModel<T>,
    strict: bool,
    opts: &GeneratorOptions,
    rng: &mut R,
) -> TrigSeries<T> {
    let kind = model.kind();
    let k = opts.max_wave;
    let wave = |rng: &mut R| -> Vector<T> {
        let mut int = || T::lit(rng.gen_range(-k..=k) as f64);
        match (kind, strict) {
            (ModelKind::S1Circle, true) => smallvec![T::zero()],
            (ModelKind::S1Circle, false) => smallvec![int()],
            (ModelKind::T3UnitCotangent, true) => smallvec![T::zero(), T::zero(), int()],
            (ModelKind::T3UnitCotangent, false) => smallvec![int(), int(), int()],
            (ModelKind::R3Standard, true) => smallvec![int() * T::lit(0.5), int() * T::lit(0.5), T::zero()],
            (ModelKind::R3Standard, false) => {
                smallvec![int() * T::lit(0.5), int() * T::lit(0.5), int() * T::lit(0.5)]
            }
        }
    };
    let a = opts.amplitude;
    let mut modes: Vec<Mode<T>> = (0..opts.modes)
        .map(|_| Mode {
            wave: wave(rng),
            omega: if opts.time_dependent { T::lit(rng.gen_range(-3.0..3.0)) } else { T::zero() },
            phase: T::lit(rng.gen_range(0.0..std::f64::consts::TAU)),
            amp: T::lit(rng.gen_range(-a..a)),
        })
        .collect();
    if !strict {
        // make sure at least one mode actually moves along the Reeb direction
        let forced: Vector<T> = match kind {
            ModelKind::S1Circle => smallvec![T::one()],
            ModelKind::T3UnitCotangent => smallvec![T::one(), T::zero(), T::zero()],
            ModelKind::R3Standard => smallvec![T::zero(), T::zero(), T::lit(0.5)],
        };
        modes.push(Mode {
            wave: forced,
            omega: T::zero(),
            phase: T::lit(rng.gen_range(0.0..std::f64::consts::TAU)),
            amp: T::lit(rng.gen_range(0.5 * a..a)),
        });
    }
    let (offset, envelope) = match kind {
        ModelKind::R3Standard => {
            let axes = if strict { vec![0, 1] } else { vec![0, 1, 2] };
            (T::zero(), Some(Envelope { center: smallvec![T::zero(); 3], radius: T::lit(1.5), axes }))
        }
        _ => (T::lit(rng.gen_range(-a..a)), None),
    };
    TrigSeries { offset, modes, envelope }
}
