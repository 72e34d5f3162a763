//! Small numerical kernels: an adaptive Dormand–Prince 5(4) integrator,
//! bracketing root finders and Gauss–Legendre quadrature.

/// Adaptive Dormand–Prince 5(4) integrator for autonomous-in-size systems
/// `y′ = f(t, y)` with `N` components.
#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-12,
            atol: 1e-14,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl Dopri5 {
    /// Advances `y` from `t0` to exactly `t1`. `h` holds the step size
    /// suggestion and is updated for the next call.
    pub fn integrate<const N: usize, F>(
        &self,
        f: &F,
        t0: f64,
        y: [f64; N],
        t1: f64,
        h: &mut f64,
    ) -> Option<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut t = t0;
        let mut y = y;
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Some(y);
        }
        let mut step = h.abs().min(span).max(self.h_min);
        let mut k1 = f(t, &y);
        for _ in 0..self.max_steps {
            let remaining = (t1 - t).abs();
            let last = step >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { step } * dir;
            let k2 = f(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
            let k3 = f(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(
                t + C4 * hs,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs),
            );
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            );
            let k6 = f(
                t + hs,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    hs,
                ),
            );
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                hs,
            );
            let t_new = if last { t1 } else { t + hs };
            let k7 = f(t_new, &y_new);
            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                if step <= self.h_min {
                    return None;
                }
                step *= 0.25;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                if !last {
                    *h = step;
                }
                step *= factor;
                if last {
                    return Some(y);
                }
            } else {
                if step <= self.h_min {
                    return None;
                }
                step = (step * factor).max(self.h_min);
            }
        }
        None
    }
}

/// Bisection on a sign change of `f` in `[a, b]`. Returns the midpoint of the
/// final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Integral of `f` over `[a, b]` with a fixed Gauss–Legendre rule.
pub fn gauss_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dopri_harmonic_oscillator() {
        let solver = Dopri5::default();
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut h = 0.1;
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        for _ in 0..100 {
            y = solver.integrate(&f, t, y, t + 0.1, &mut h).unwrap();
            t += 0.1;
        }
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn dopri_backward() {
        let solver = Dopri5::default();
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut h = 0.1;
        let y = solver.integrate(&f, 1.0, [1.0], 0.0, &mut h).unwrap();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn gauss_rules() {
        let rule = gauss_legendre(20);
        let s: f64 = rule.1.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // exact for degree 39
        let v = gauss_integrate(|x| x.powi(38), -1.0, 1.0, &rule);
        assert!((v - 2.0 / 39.0).abs() < 1e-14);
        let v = gauss_integrate(f64::sin, 0.0, std::f64::consts::PI, &rule);
        assert!((v - 2.0).abs() < 1e-14);
        let r5 = gauss_legendre(5);
        assert!((r5.0[2]).abs() < 1e-15);
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 10).is_none());
    }
}
