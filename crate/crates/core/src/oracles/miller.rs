//! Plain double-precision Bessel functions by a different route than the
//! production code: Miller backward recurrence for J, Neumann series or
//! Hankel asymptotics for Y_0 and Y_1, forward recurrence for higher Y.
//! Fast enough to check boundary conditions on large scenes.

use std::f64::consts::{FRAC_2_PI, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const NEUMANN_LIMIT: f64 = 25.0;

/// `J_0..=J_nmax` at `x > 0`, normalized with `J_0 + 2 sum J_2k = 1`.
pub fn j_orders(nmax: usize, x: f64) -> Vec<f64> {
    let top = nmax.max(x as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut sum = 0.0;
    let mut raw = vec![0.0; start + 1];
    raw[start] = cur;
    for m in (1..=start).rev() {
        let prev = 2.0 * m as f64 / x * cur - next;
        next = cur;
        cur = prev;
        raw[m - 1] = cur;
        if cur.abs() > 1e250 {
            // keep the recurrence in range; earlier orders are negligible
            for v in raw[m - 1..].iter_mut() {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
            sum *= 1e-250;
        }
        if (m - 1) % 2 == 0 {
            sum += if m - 1 == 0 { cur } else { 2.0 * cur };
        }
    }
    raw.truncate(nmax + 1);
    raw.iter().map(|v| v / sum).collect()
}

fn neumann_y01(x: f64) -> (f64, f64) {
    let j = j_orders(2 * (x as usize) + 60, x);
    let l = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * l * j[0] - 2.0 * FRAC_2_PI * s0;
    let y1 = FRAC_2_PI * (l * j[1] - j[0] / x) + FRAC_2_PI * s1;
    (y0, y1)
}

/// Hankel's expansion `sqrt(2/(pi x)) (P cos w - Q sin w)` for order `nu`.
fn asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (nu as f64).powi(2);
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kk = k as f64;
        term *= (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let w = x - (0.5 * nu as f64 + 0.25) * PI;
    let a = (FRAC_2_PI / x).sqrt();
    (
        a * (p * w.cos() - q * w.sin()),
        a * (p * w.sin() + q * w.cos()),
    )
}

/// `Y_0..=Y_nmax` at `x > 0`.
pub fn y_orders(nmax: usize, x: f64) -> Vec<f64> {
    let (y0, y1) = if x <= NEUMANN_LIMIT {
        neumann_y01(x)
    } else {
        (asymptotic(0, x).1, asymptotic(1, x).1)
    };
    let mut y = vec![y0, y1];
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y.truncate(nmax + 1);
    y
}

/// `J_0` and `J_1` for large arguments, where the recurrence sum loses a
/// little to cancellation.
fn j01(x: f64) -> Option<(f64, f64)> {
    (x > NEUMANN_LIMIT * 40.0).then(|| (asymptotic(0, x).0, asymptotic(1, x).0))
}

/// `(J_n, Y_n)` for `n = 0..=nmax`.
pub fn jy(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut j = j_orders(nmax.max(1), x);
    if let Some((a, b)) = j01(x) {
        j[0] = a;
        j[1] = b;
    }
    j.truncate(nmax + 1);
    (j, y_orders(nmax, x))
}
