use serde::Serialize;

use crate::dynsys::{Domain, VectorField, VectorFieldModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl<T> {
    /// Classical RK4 with a fixed step.
    Fixed { h: T },
    /// Dormand–Prince 5(4) with a mixed absolute/relative error test.
    Adaptive { rtol: T, atol: T, h_init: T, h_max: T },
}

impl<T: Real> StepControl<T> {
    pub fn fixed(h: T) -> Self {
        Self::Fixed { h }
    }

    pub fn adaptive(rtol: T) -> Self {
        Self::Adaptive { rtol, atol: rtol * T::lit(1e-3), h_init: T::lit(1e-3), h_max: T::lit(0.1) }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions<T> {
    pub step: StepControl<T>,
    /// Residual `|g|` accepted at a refined boundary crossing.
    pub tol_exit: T,
    pub record_path: bool,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self { step: StepControl::adaptive(T::lit(1e-9)), tol_exit: T::lit(1e-10), record_path: false }
    }
}

/// Outcome of integrating `S^t x0` until it reaches `∂G`.
///
/// When the orbit stays in `G` up to `t_max`, `exit_time` is `+∞` and
/// `exit_point` holds the state at `t_max`.
#[derive(Clone, Debug, Serialize)]
pub struct FlowResult<T> {
    pub exit_time: T,
    pub exit_point: Vec<T>,
    pub path: Option<Vec<(T, Vec<T>)>>,
}

impl<T: Real> FlowResult<T> {
    pub fn exited(&self) -> bool {
        self.exit_time.is_finite()
    }
}

/// Integrate the flow from `x0` and stop at the first crossing of `∂G`,
/// refined by bisection to `|g| <= tol_exit`.
pub fn integrate_flow<T: Real>(
    model: &VectorFieldModel<T>,
    x0: &[T],
    t_max: T,
    opts: &FlowOptions<T>,
) -> Result<FlowResult<T>> {
    let g = model.domain();
    let out = integrate_until(model, x0, t_max, opts, |x| g.g(x), opts.tol_exit, None)?;
    Ok(match out {
        EventOutcome::Event { t, x, path } => FlowResult { exit_time: t, exit_point: x, path },
        EventOutcome::Timeout { x, path } => FlowResult { exit_time: T::infinity(), exit_point: x, path },
        EventOutcome::LeftGuard { .. } => unreachable!("no guard region"),
    })
}

#[derive(Clone, Debug)]
pub enum EventOutcome<T> {
    /// The event function reached zero (from below) at time `t`.
    Event { t: T, x: Vec<T>, path: Option<Vec<(T, Vec<T>)>> },
    /// The orbit left the guard region first.
    LeftGuard { t: T, x: Vec<T> },
    Timeout { x: Vec<T>, path: Option<Vec<(T, Vec<T>)>> },
}

/// Integrate until `event(x) >= 0`. The event must be negative at `x0`.
///
/// If `guard` is given, leaving it (`guard.g >= 0`) before the event ends the
/// integration with [`EventOutcome::LeftGuard`]. Leaving the enclosure `U`
/// is an error.
pub fn integrate_until<T: Real, E: Fn(&[T]) -> T>(
    model: &VectorFieldModel<T>,
    x0: &[T],
    t_max: T,
    opts: &FlowOptions<T>,
    event: E,
    tol_event: T,
    guard: Option<&Domain<T>>,
) -> Result<EventOutcome<T>> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    if event(x0) >= T::zero() || guard.is_some_and(|gd| gd.g(x0) >= T::zero()) {
        return Err(Error::NotInterior);
    }
    let field = model.field().as_ref();
    let mut stepper = Stepper::new(d);
    let mut x = x0.to_vec();
    let mut t = T::zero();
    let mut path = opts.record_path.then(|| vec![(t, x.clone())]);
    let (mut h, adaptive) = match opts.step {
        StepControl::Fixed { h } => (h, None),
        StepControl::Adaptive { rtol, atol, h_init, h_max } => (h_init, Some((rtol, atol, h_max))),
    };
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let mut x_new = vec![T::zero(); d];
    let mut rejections = 0usize;
    while t < t_max {
        let h_try = h.min(t_max - t);
        let err = match adaptive {
            None => {
                stepper.rk4(field, &x, h_try, &mut x_new);
                None
            }
            Some((rtol, atol, _)) => Some(stepper.dopri(field, &x, h_try, &mut x_new, rtol, atol)),
        };
        if let (Some(e), Some((_, _, h_max))) = (err, adaptive) {
            let fac = if e > T::zero() { T::lit(0.9) * e.powf(T::lit(-0.2)) } else { T::lit(5.0) };
            let fac = fac.min(T::lit(5.0)).max(T::lit(0.2));
            if !(e <= T::one()) || !x_new.iter().all(|v| v.is_finite()) {
                h = h_try * fac.min(T::lit(0.5));
                rejections += 1;
                if rejections > 10_000 || h < T::epsilon() * t.max(T::one()) {
                    return Err(Error::StepTooLarge);
                }
                continue;
            }
            h = (h_try * fac).min(h_max);
        }
        if !x_new.iter().all(|v| v.is_finite()) {
            return Err(Error::LeftEnclosure);
        }
        let ev = event(&x_new);
        let left_guard = guard.is_some_and(|gd| gd.g(&x_new) >= T::zero());
        if ev >= T::zero() {
            // The guard can be crossed inside the same step; decide which comes first.
            let (s, xe) = refine(&mut stepper, field, &x, h_try, opts.step, &event, tol_event)?;
            if guard.is_none_or(|gd| gd.g(&xe) < T::zero()) {
                let te = t + s;
                if let Some(p) = path.as_mut() {
                    p.push((te, xe.clone()));
                }
                return Ok(EventOutcome::Event { t: te, x: xe, path });
            }
        }
        if left_guard {
            return Ok(EventOutcome::LeftGuard { t: t + h_try, x: x_new });
        }
        if model.enclosure().g(&x_new) > T::zero() {
            return Err(Error::LeftEnclosure);
        }
        t = t + h_try;
        std::mem::swap(&mut x, &mut x_new);
        if let Some(p) = path.as_mut() {
            p.push((t, x.clone()));
        }
    }
    Ok(EventOutcome::Timeout { x, path })
}

/// Find the sub-step `s ∈ (0, h]` with `|event(step(x, s))| <= tol`.
fn refine<T: Real, E: Fn(&[T]) -> T>(
    stepper: &mut Stepper<T>,
    field: &dyn VectorField<T>,
    x: &[T],
    h: T,
    control: StepControl<T>,
    event: &E,
    tol: T,
) -> Result<(T, Vec<T>)> {
    let mut out = vec![T::zero(); x.len()];
    let eval = |s: T, st: &mut Stepper<T>, out: &mut Vec<T>| -> T {
        match control {
            StepControl::Fixed { .. } => st.rk4(field, x, s, out),
            StepControl::Adaptive { rtol, atol, .. } => {
                st.dopri(field, x, s, out, rtol, atol);
            }
        }
        event(out)
    };
    let (mut lo, mut hi) = (T::zero(), h);
    let mut f_lo = event(x);
    let mut f_hi = eval(hi, stepper, &mut out);
    if !(f_lo < T::zero() && f_hi >= T::zero()) {
        return Err(Error::StepTooLarge);
    }
    if f_hi <= tol {
        return Ok((hi, out));
    }
    // Illinois variant of regula falsi with a bisection safeguard.
    let mut side = 0i8;
    for iter in 0..300 {
        let mut s = if iter % 4 == 3 {
            (lo + hi) / T::lit(2.0)
        } else {
            (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        };
        if !(s > lo && s < hi) {
            s = (lo + hi) / T::lit(2.0);
        }
        let f = eval(s, stepper, &mut out);
        if f.abs() <= tol {
            return Ok((s, out));
        }
        if f < T::zero() {
            lo = s;
            f_lo = f;
            if side == -1 {
                f_hi = f_hi / T::lit(2.0);
            }
            side = -1;
        } else {
            hi = s;
            f_hi = f;
            if side == 1 {
                f_lo = f_lo / T::lit(2.0);
            }
            side = 1;
        }
        if hi - lo <= T::epsilon() * h {
            let f = eval(hi, stepper, &mut out);
            if f.abs() <= tol * T::lit(10.0) {
                return Ok((hi, out));
            }
            break;
        }
    }
    Err(Error::StepTooLarge)
}

/// Scratch space for explicit Runge–Kutta steps.
pub(crate) struct Stepper<T> {
    k: [Vec<T>; 7],
    tmp: Vec<T>,
}

// Dormand–Prince 5(4) tableau.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl<T: Real> Stepper<T> {
    pub(crate) fn new(d: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![T::zero(); d]), tmp: vec![T::zero(); d] }
    }

    pub(crate) fn rk4(&mut self, f: &dyn VectorField<T>, x: &[T], h: T, out: &mut [T]) {
        let half = h / T::lit(2.0);
        let [k1, k2, k3, k4, ..] = &mut self.k;
        let tmp = &mut self.tmp;
        f.eval(x, k1);
        for i in 0..x.len() {
            tmp[i] = x[i] + half * k1[i];
        }
        f.eval(tmp, k2);
        for i in 0..x.len() {
            tmp[i] = x[i] + half * k2[i];
        }
        f.eval(tmp, k3);
        for i in 0..x.len() {
            tmp[i] = x[i] + h * k3[i];
        }
        f.eval(tmp, k4);
        let sixth = h / T::lit(6.0);
        for i in 0..x.len() {
            out[i] = x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// One DP5 step; returns the scaled RMS error estimate.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn dopri(&mut self, f: &dyn VectorField<T>, x: &[T], h: T, out: &mut [T], rtol: T, atol: T) -> T {
        let d = x.len();
        f.eval(x, &mut self.k[0]);
        for s in 1..7 {
            for i in 0..d {
                let mut acc = T::zero();
                for (j, &a) in DP_A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        acc = acc + T::lit(a) * self.k[j][i];
                    }
                }
                self.tmp[i] = x[i] + h * acc;
            }
            let (_, rest) = self.k.split_at_mut(s);
            f.eval(&self.tmp, &mut rest[0]);
        }
        let mut err = T::zero();
        for i in 0..d {
            let mut acc = T::zero();
            let mut e = T::zero();
            for s in 0..7 {
                acc = acc + T::lit(DP_B[s]) * self.k[s][i];
                e = e + T::lit(DP_E[s]) * self.k[s][i];
            }
            out[i] = x[i] + h * acc;
            let sc = atol + rtol * x[i].abs().max(out[i].abs());
            let r = h * e / sc;
            err = err + r * r;
        }
        (err / T::lit(d as f64)).sqrt()
    }
}
