//! The wavefront profile `w(s) = exp(1 - 1/(1 - s²))` on `]-1, 1[`.

use crate::tolerances::PROFILE_QUAD_TOL;

#[inline]
pub fn w(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

#[inline]
pub fn w_prime(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        -2.0 * s / (q * q) * (1.0 - 1.0 / q).exp()
    }
}

/// `∫ w` over `]-1, 1[`. The integrand is flat to all orders at both ends,
/// so the trapezoid rule converges faster than any power; panels are doubled
/// until successive estimates agree.
pub fn l1_norm() -> f64 {
    let mut n = 16usize;
    let mut prev = trapezoid(n);
    loop {
        n *= 2;
        let next = trapezoid(n);
        if (next - prev).abs() < PROFILE_QUAD_TOL || n > 1 << 20 {
            return next;
        }
        prev = next;
    }
}

fn trapezoid(n: usize) -> f64 {
    let h = 2.0 / n as f64;
    (1..n).map(|k| w(-1.0 + k as f64 * h)).sum::<f64>() * h
}

/// `max |w'|`, by dense sampling refined with golden-section search.
pub fn w_prime_max() -> f64 {
    let samples = 4096;
    let f = |s: f64| w_prime(s).abs();
    let (mut best_s, mut best) = (0.0, 0.0);
    for k in 1..samples {
        let s = k as f64 / samples as f64;
        let v = f(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    let step = 1.0 / samples as f64;
    let (mut a, mut b) = ((best_s - step).max(0.0), (best_s + step).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).max(best)
}
