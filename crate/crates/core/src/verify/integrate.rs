//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! Standard DOPRI5 pair: 7 stages, FSAL, PI step-size control, and the free
//! 4th-order interpolant for sampling at requested times.

use crate::error::{Error, Result};
use crate::expansion::Problem;
use crate::Real;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

// 5th-order weights (also the a7j row: FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Error weights b5 - b4.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output coefficients (Hairer, Nørsett, Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integration output: states at the requested sample times.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub rtol: T,
    pub atol: T,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn state_at(&self, i: usize) -> &[T] {
        &self.states[i]
    }
}

struct DenseSegment<T> {
    t: T,
    h: T,
    rcont: [Vec<T>; 5],
}

impl<T: Real> DenseSegment<T> {
    fn eval_into(&self, t: T, out: &mut [T]) {
        let theta = (t - self.t) / self.h;
        let theta1 = T::one() - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + theta1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])));
        }
    }
}

/// Options for [`dopri5`].
pub struct IntegrateOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Abort when the state leaves this ball around a reference trajectory.
    pub guard: Option<Guard<T>>,
    pub max_steps: usize,
}

/// Domain guard: distance from `center(t)` must stay within `radius`.
pub struct Guard<T> {
    pub center: Box<dyn Fn(T) -> Vec<T>>,
    pub radius: T,
}

impl<T: Real> Default for IntegrateOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::of(1e-8),
            atol: T::of(1e-10),
            guard: None,
            max_steps: 100_000_000,
        }
    }
}

/// Integrate `y' = f(t, y)` from `t_span.0` to `t_span.1` (forward), sampling
/// dense output at `sample_times` (strictly increasing, within the span).
pub fn dopri5<T: Real>(
    f: &dyn Fn(T, &[T], &mut [T]),
    t_span: (T, T),
    y0: &[T],
    sample_times: &[T],
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T>> {
    let n = y0.len();
    let (t_start, t_end) = t_span;
    assert!(t_end > t_start, "forward integration only");
    for w in sample_times.windows(2) {
        assert!(w[0] < w[1], "sample times must be strictly increasing");
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        assert!(first >= t_start && last <= t_end, "samples outside the span");
    }

    let mut t = t_start;
    let mut y = y0.to_vec();
    let mut k1 = vec![T::zero(); n];
    f(t, &y, &mut k1);

    let mut h = initial_step(f, t, &y, &k1, opts);
    let mut facold = T::of(1e-4);
    let safe = T::of(0.9);
    let beta = T::of(0.04);
    let expo1 = T::of(0.2) - beta * T::of(0.75);
    let facmin = T::of(0.2);
    let facmax = T::of(10.0);

    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    // Exact hit on a sample at the start.
    while next_sample < sample_times.len() && sample_times[next_sample] <= t {
        times.push(t);
        states.push(y.clone());
        next_sample += 1;
    }

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut k5 = vec![T::zero(); n];
    let mut k6 = vec![T::zero(); n];
    let mut k7 = vec![T::zero(); n];
    let mut ytmp = vec![T::zero(); n];
    let mut y5 = vec![T::zero(); n];

    while t < t_end {
        if accepted + rejected > opts.max_steps {
            return Err(Error::StepSizeUnderflow {
                t: t.to_f64().unwrap_or(f64::NAN),
                h: h.to_f64().unwrap_or(f64::NAN),
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let hmin = T::epsilon() * t.abs().max(T::one()) * T::of(16.0);
        if h < hmin {
            return Err(Error::StepSizeUnderflow {
                t: t.to_f64().unwrap_or(f64::NAN),
                h: h.to_f64().unwrap_or(f64::NAN),
            });
        }

        macro_rules! stage {
            ($k:ident, $c:expr, $($w:expr => $kk:ident),+) => {{
                for i in 0..n {
                    let mut acc = T::zero();
                    $( acc = acc + T::of($w) * $kk[i]; )+
                    ytmp[i] = y[i] + h * acc;
                }
                f(t + T::of($c) * h, &ytmp, &mut $k);
            }};
        }

        stage!(k2, C2, A21 => k1);
        stage!(k3, C3, A31 => k1, A32 => k2);
        stage!(k4, C4, A41 => k1, A42 => k2, A43 => k3);
        stage!(k5, C5, A51 => k1, A52 => k2, A53 => k3, A54 => k4);
        stage!(k6, 1.0, A61 => k1, A62 => k2, A63 => k3, A64 => k4, A65 => k5);
        for i in 0..n {
            y5[i] = y[i]
                + h * (T::of(B1) * k1[i]
                    + T::of(B3) * k3[i]
                    + T::of(B4) * k4[i]
                    + T::of(B5) * k5[i]
                    + T::of(B6) * k6[i]);
        }
        f(t + h, &y5, &mut k7);

        // Scaled RMS error of the embedded 4th-order difference.
        let mut err = T::zero();
        for i in 0..n {
            let e = h
                * (T::of(E1) * k1[i]
                    + T::of(E3) * k3[i]
                    + T::of(E4) * k4[i]
                    + T::of(E5) * k5[i]
                    + T::of(E6) * k6[i]
                    + T::of(E7) * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err + (e / sc) * (e / sc);
        }
        err = (err / T::of(n as f64)).sqrt();

        if err <= T::one() {
            // Accept; fill dense output over [t, t+h].
            if next_sample < sample_times.len() && sample_times[next_sample] <= t + h {
                let seg = dense_segment(&y, &y5, &k1, &k3, &k4, &k5, &k6, &k7, t, h);
                let mut out = vec![T::zero(); n];
                while next_sample < sample_times.len() && sample_times[next_sample] <= t + h {
                    seg.eval_into(sample_times[next_sample], &mut out);
                    times.push(sample_times[next_sample]);
                    states.push(out.clone());
                    next_sample += 1;
                }
            }
            t = t + h;
            std::mem::swap(&mut y, &mut y5);
            std::mem::swap(&mut k1, &mut k7); // FSAL
            accepted += 1;

            if let Some(guard) = &opts.guard {
                let center = (guard.center)(t);
                let mut dist = T::zero();
                for i in 0..n {
                    dist = dist.max((y[i] - center[i]).abs());
                }
                if dist > guard.radius {
                    return Err(Error::LeftDomain {
                        t: t.to_f64().unwrap_or(f64::NAN),
                        distance: dist.to_f64().unwrap_or(f64::NAN),
                        radius: guard.radius.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }

            let fac11 = err.max(T::of(1e-30)).powf(expo1);
            let fac = (fac11 / facold.powf(beta) / safe).max(facmin).min(facmax);
            facold = err.max(T::of(1e-4));
            h = h / fac;
        } else {
            rejected += 1;
            let fac11 = err.powf(expo1);
            h = h / (fac11 / safe).min(T::of(10.0));
        }
    }

    Ok(Trajectory {
        times,
        states,
        rtol: opts.rtol,
        atol: opts.atol,
        steps_accepted: accepted,
        steps_rejected: rejected,
    })
}

#[allow(clippy::too_many_arguments)]
fn dense_segment<T: Real>(
    y: &[T],
    y1: &[T],
    k1: &[T],
    k3: &[T],
    k4: &[T],
    k5: &[T],
    k6: &[T],
    k7: &[T],
    t: T,
    h: T,
) -> DenseSegment<T> {
    let n = y.len();
    let mut rcont = [
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
    ];
    for i in 0..n {
        let ydiff = y1[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * k7[i] - bspl;
        rcont[4][i] = h
            * (T::of(D1) * k1[i]
                + T::of(D3) * k3[i]
                + T::of(D4) * k4[i]
                + T::of(D5) * k5[i]
                + T::of(D6) * k6[i]
                + T::of(D7) * k7[i]);
    }
    DenseSegment { t, h, rcont }
}

/// Step-size guess from the scale of the field at the initial point.
fn initial_step<T: Real>(
    f: &dyn Fn(T, &[T], &mut [T]),
    t: T,
    y: &[T],
    f0: &[T],
    opts: &IntegrateOptions<T>,
) -> T {
    let n = y.len();
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 = d0 + (y[i] / sc) * (y[i] / sc);
        d1 = d1 + (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = (d0 / T::of(n as f64)).sqrt();
    d1 = (d1 / T::of(n as f64)).sqrt();
    let h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
        T::of(1e-6)
    } else {
        T::of(0.01) * (d0 / d1)
    };
    // One Euler probe to estimate the second derivative scale.
    let mut y1 = vec![T::zero(); n];
    for i in 0..n {
        y1[i] = y[i] + h0 * f0[i];
    }
    let mut f1 = vec![T::zero(); n];
    f(t + h0, &y1, &mut f1);
    let mut d2 = T::zero();
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y[i].abs();
        let df = (f1[i] - f0[i]) / sc;
        d2 = d2 + df * df;
    }
    d2 = (d2 / T::of(n as f64)).sqrt() / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= T::of(1e-15) {
        (h0 * T::of(1e-3)).max(T::of(1e-6))
    } else {
        (T::of(0.01) / dmax).powf(T::of(0.2))
    };
    (h0 * T::of(100.0)).min(h1)
}

/// Integrate the quasilinear system itself from `y0` at `t_span.0`.
pub fn integrate<T: Real>(
    problem: &Problem<T>,
    y0: &[T],
    t_span: (T, T),
    sample_times: &[T],
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T>> {
    if y0.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: y0.len(),
        });
    }
    let floor = problem.eps.domain_floor();
    if t_span.0.to_f64().unwrap_or(f64::NAN) <= floor {
        return Err(Error::DomainViolation {
            t: t_span.0.to_f64().unwrap_or(f64::NAN),
            needed: floor,
        });
    }
    let compiled = problem.compile_rhs();
    let rhs = move |t: T, y: &[T], out: &mut [T]| compiled.eval(t, y, out);
    dopri5(&rhs, t_span, y0, sample_times, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn linear_diagonal_system() {
        // y' = diag(-1,-2) y from (1,1): y = (e^{-t}, e^{-2t}).
        let f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = -y[0];
            out[1] = -2.0 * y[1];
        };
        let samples: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let opts = IntegrateOptions {
            rtol: 1e-9,
            atol: 1e-12,
            ..Default::default()
        };
        let traj = dopri5(&f, (0.0, 10.0), &[1.0, 1.0], &samples, &opts).unwrap();
        assert_eq!(traj.times.len(), 10);
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let want = [(-t).exp(), (-2.0 * t).exp()];
            let err = (y[0] - want[0]).abs().max((y[1] - want[1]).abs());
            let scale = want[0].max(want[1]);
            assert!(err / scale < 1e-7, "t={t}: rel err {:e}", err / scale);
        }
    }

    #[test]
    fn zero_field_stays_constant() {
        let f = |_t: f64, _y: &[f64], out: &mut [f64]| {
            out[0] = 0.0;
            out[1] = 0.0;
        };
        let samples = vec![2.5, 7.5];
        let traj = dopri5(
            &f,
            (0.0, 10.0),
            &[3.0, -4.0],
            &samples,
            &IntegrateOptions::default(),
        )
        .unwrap();
        for y in &traj.states {
            assert_eq!(y[0], 3.0);
            assert_eq!(y[1], -4.0);
        }
    }

    #[test]
    fn harmonic_forcing_stays_on_particular_solution() {
        // y' = -y + sin t; particular solution (sin t - cos t)/2.
        let part = |t: f64| (t.sin() - t.cos()) / 2.0;
        let f = |t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = -y[0] + t.sin();
        };
        let samples = geometric(1.0, 50.0, 20);
        let opts = IntegrateOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let traj = dopri5(&f, (0.0, 50.0), &[part(0.0)], &samples, &opts).unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            assert!((y[0] - part(*t)).abs() < 1e-7, "t={t}: {}", y[0] - part(*t));
        }
    }

    #[test]
    fn tolerance_scaling() {
        // Halving rtol should shrink the error roughly proportionally.
        let f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = -y[0];
            out[1] = -2.0 * y[1];
        };
        let err_at = |rtol: f64| {
            let opts = IntegrateOptions {
                rtol,
                atol: 1e-14,
                ..Default::default()
            };
            let traj = dopri5(&f, (0.0, 10.0), &[1.0, 1.0], &[10.0], &opts).unwrap();
            let y = &traj.states[0];
            ((y[0] - (-10.0f64).exp()).abs() / (-10.0f64).exp())
                .max((y[1] - (-20.0f64).exp()).abs() / (-20.0f64).exp())
        };
        let e_coarse = err_at(1e-5);
        let e_fine = err_at(1e-7);
        assert!(
            e_fine < e_coarse / 3.0,
            "coarse {e_coarse:e}, fine {e_fine:e}"
        );
    }

    #[test]
    fn guard_reports_domain_exit() {
        // y' = y explodes away from 0.
        let f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = y[0];
        };
        let opts = IntegrateOptions {
            guard: Some(Guard {
                center: Box::new(|_t| vec![0.0]),
                radius: 10.0,
            }),
            ..Default::default()
        };
        match dopri5(&f, (0.0, 50.0), &[1.0], &[], &opts) {
            Err(Error::LeftDomain { t, .. }) => assert!(t > 2.0 && t < 3.0, "exit at {t}"),
            other => panic!("expected LeftDomain, got {other:?}"),
        }
    }
}
