//! Adaptive Dormand–Prince 5(4) integration with breakpoint restarts.

use crate::error::{LabError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tolerance(tol: T) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        Self {
            c: C.map(T::lit),
            a: A.map(|row| row.map(T::lit)),
            e: E.map(T::lit),
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 >= t0`.
///
/// The solver restarts at every time in `breakpoints` (the right-hand side may
/// jump there) and lands exactly on every time in `stops`. Stage evaluations
/// never sample a breakpoint from the wrong side. `on_accept(t, y)` is called at
/// every accepted step end, including stops and breakpoints.
pub fn integrate<T, F, C>(
    mut rhs: F,
    t0: T,
    y0: &[T],
    t1: T,
    stops: &[T],
    breakpoints: &[T],
    opts: &OdeOptions<T>,
    mut on_accept: C,
) -> Result<(Vec<T>, OdeStats)>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
    C: FnMut(T, &[T]) -> Result<()>,
{
    assert!(t1 >= t0, "integrate runs forward in time");
    let tab = Tableau::<T>::new();
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats::default();

    // segment ends: (time, is_breakpoint)
    let mut ends: Vec<(T, bool)> = breakpoints
        .iter()
        .filter(|&&b| b > t0 && b < t1)
        .map(|&b| (b, true))
        .chain(stops.iter().filter(|&&s| s > t0 && s < t1).map(|&s| (s, false)))
        .collect();
    ends.push((t1, false));
    ends.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    ends.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 |= a.1;
            true
        } else {
            false
        }
    });

    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    let mut ytmp = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    let span = (t1 - t0).max(T::epsilon());
    let mut h = span * T::lit(0.05);
    let mut t = t0;
    let mut start_is_break = false;
    let order_exp = T::lit(-0.2);

    for &(b, end_is_break) in &ends {
        if b <= t {
            continue;
        }
        let nudge = |s: T| T::lit(4.0) * T::epsilon() * s.abs().max(T::one());
        let lo = if start_is_break { t + nudge(t) } else { t };
        let hi = if end_is_break { b - nudge(b) } else { b };
        let clamp = |s: T| s.max(lo).min(hi);
        let mut fsal = false;
        while t < b {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(LabError::StepFailure { t: t.as_f64(), step: h.as_f64() });
            }
            let mut last = false;
            if t + h >= b || (b - t - h) < T::lit(1e-12) * span {
                h = b - t;
                last = true;
            }
            if !fsal {
                rhs(clamp(t), &y, &mut k[0])?;
                stats.rhs_evals += 1;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..s {
                        acc += h * tab.a[s][j] * k[j][i];
                    }
                    ytmp[i] = acc;
                }
                rhs(clamp(t + tab.c[s] * h), &ytmp, &mut k[s])?;
                stats.rhs_evals += 1;
                if s == 6 {
                    ynew.copy_from_slice(&ytmp);
                }
            }
            let mut err2 = T::zero();
            for i in 0..n {
                let e: T = (0..7).map(|j| tab.e[j] * k[j][i]).sum::<T>() * h;
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err2 += (e / sc).powi(2);
            }
            let err = (err2 / T::from_usize_lossy(n.max(1))).sqrt();
            if !err.is_finite() {
                return Err(LabError::StepFailure { t: t.as_f64(), step: h.as_f64() });
            }
            if err <= T::one() {
                t = if last { b } else { t + h };
                y.copy_from_slice(&ynew);
                stats.accepted += 1;
                k.swap(0, 6);
                fsal = true;
                on_accept(t, &y)?;
                let fac = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(order_exp)).min(T::lit(5.0)).max(T::lit(0.2))
                };
                if !last {
                    h *= fac;
                } else {
                    h = (h * fac).max(span * T::lit(1e-3));
                }
            } else {
                stats.rejected += 1;
                // k[0] still belongs to (t, y)
                fsal = true;
                let fac = (T::lit(0.9) * err.powf(order_exp)).max(T::lit(0.1));
                h *= fac;
                if h < T::lit(1e-14) * t.abs().max(T::one()) {
                    return Err(LabError::StepFailure { t: t.as_f64(), step: h.as_f64() });
                }
            }
        }
        start_is_break = end_is_break;
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_to_tolerance() {
        let opts = OdeOptions::with_tolerance(1e-12);
        let (y, stats) = integrate(
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &[],
            &[],
            &opts,
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10, "{}", y[0] - 2f64.exp());
        assert!(stats.accepted > 5);
    }

    #[test]
    fn harmonic_oscillator_and_stops() {
        let opts = OdeOptions::with_tolerance(1e-11);
        let mut seen = Vec::new();
        let (y, _) = integrate(
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            std::f64::consts::PI,
            &[0.5, 1.0],
            &[],
            &opts,
            |t, y| {
                seen.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert!((y[0] + 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
        let at_half = seen.iter().find(|(t, _)| *t == 0.5).unwrap();
        assert!((at_half.1 - 0.5f64.cos()).abs() < 1e-10);
        assert!(seen.iter().any(|(t, _)| *t == 1.0));
    }

    #[test]
    fn breakpoint_jump_is_integrated_exactly() {
        // y' = 0 on [0, 1/2], y' = 1 on (1/2, 1]; with `t <= 1/2` belonging to the left piece.
        let opts = OdeOptions::with_tolerance(1e-12);
        let (y, _) = integrate(
            |t, _y: &[f64], dy: &mut [f64]| {
                dy[0] = if t <= 0.5 { 0.0 } else { 1.0 };
                Ok(())
            },
            0.0,
            &[0.0],
            1.0,
            &[],
            &[0.5],
            &opts,
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 0.5).abs() < 1e-14, "{}", y[0]);
    }

    #[test]
    fn rhs_errors_propagate() {
        let opts = OdeOptions::with_tolerance(1e-8);
        let r = integrate(
            |t, _: &[f64], _: &mut [f64]| {
                if t > 0.3 {
                    Err(LabError::Invalid("boom".into()))
                } else {
                    Ok(())
                }
            },
            0.0,
            &[0.0],
            1.0,
            &[],
            &[],
            &opts,
            |_, _| Ok(()),
        );
        assert!(r.is_err());
    }
}
