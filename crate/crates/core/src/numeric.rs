//! Small numerical building blocks: bracketed bisection, a classical
//! fourth-order fixed-step integrator, and periodic cubic interpolation.

/// Bisection on `[lo, hi]`, requiring `f(lo)` and `f(hi)` to have opposite
/// signs. Converges the interval below `x_tol` and returns the midpoint.
pub fn bisect<F>(mut lo: f64, mut hi: f64, f: F, x_tol: f64, max_iter: usize) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() < x_tol {
            return Some(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One classical Runge-Kutta step of a two-state system.
pub fn rk4_step2<F>(f: F, t: f64, y: [f64; 2], dt: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, [y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
    let k3 = f(t + 0.5 * dt, [y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
    let k4 = f(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
    [
        y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Catmull-Rom cubic interpolation on a uniform periodic grid.
///
/// `values[k]` is the sample at `x0 + (k + 1) * step`, and the table is
/// periodic with period `n * step` (the layout produced by sampling a
/// half-open interval like (-pi, pi]).
#[derive(Debug, Clone)]
pub struct PeriodicCubic {
    x0: f64,
    step: f64,
    values: Vec<f64>,
}

impl PeriodicCubic {
    pub fn new(x0: f64, step: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 4, "need at least 4 samples");
        assert!(step > 0.0);
        Self { x0, step, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len() as isize;
        let period = self.step * n as f64;
        let u = (x - (self.x0 + self.step)).rem_euclid(period) / self.step;
        let i = u.floor() as isize;
        let s = u - i as f64;
        let at = |k: isize| self.values[(k.rem_euclid(n)) as usize];
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Catmull-Rom basis
        0.5 * ((2.0 * p1)
            + (-p0 + p2) * s
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * s * s * s)
    }
}
