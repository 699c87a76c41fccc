//! Integer-order cylinder functions of real argument.
//!
//! Provides the Bessel functions `J_n`, the Neumann functions `Y_n` and the
//! outgoing Hankel functions `H_n^(1) = J_n + i Y_n` (time convention
//! `exp(-i omega t)`), their derivatives, and whole-sequence evaluators used by
//! the scattering solver.
//!
//! Evaluation strategy, by argument range:
//!
//! * `x < 2`: ascending power series for every order.
//! * `2 <= x < 25`: Steed's method. The continued fraction for `J'/J` is
//!   combined with the complex continued fraction for `H'/H` at order zero and
//!   the Wronskian fixes the normalization.
//! * `x >= 25`: Hankel asymptotic expansions for orders 0 and 1.
//!
//! `Y_n` is then obtained by forward recurrence, which is stable for every
//! argument. For `x >= 2`, `J_n` is recurred forward up to the turning point
//! `n = x` and backward above it, starting at the top order with the `J'/J`
//! continued fraction.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest argument accepted by the Neumann and Hankel functions.
pub const Y_ARG_FLOOR: f64 = 1e-300;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAXIT: usize = 1_000_000;
// Rescaling step for the backward recurrence, an exact power of two.
const RESCALE_EXP: i32 = 600;

/// Signed harmonic order of a cylinder function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CylOrder(i32);

impl CylOrder {
    pub const fn new(n: i32) -> Self {
        CylOrder(n)
    }

    pub const fn get(self) -> i32 {
        self.0
    }

    pub fn magnitude(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    /// `(-1)^n`, the factor relating `C_{-n}` to `C_n`.
    pub fn parity(self) -> f64 {
        if self.0 % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl From<i32> for CylOrder {
    fn from(n: i32) -> Self {
        CylOrder(n)
    }
}

fn check_j_arg(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "Bessel J argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(())
}

fn check_y_arg(x: f64) -> Result<()> {
    if !x.is_finite() || x < Y_ARG_FLOOR {
        return Err(Error::Domain(format!(
            "Neumann/Hankel argument must be finite and >= {Y_ARG_FLOOR:e}, got {x}"
        )));
    }
    Ok(())
}

/// Bessel function of the first kind `J_n(x)`.
pub fn bessel_j(n: impl Into<CylOrder>, x: f64) -> Result<f64> {
    let n = n.into();
    check_j_arg(x)?;
    let seq = j_sequence(n.magnitude(), x);
    Ok(n.parity_for_negative() * seq[n.magnitude()])
}

/// Bessel function of the second kind `Y_n(x)`; `x` must be at least
/// [`Y_ARG_FLOOR`].
pub fn bessel_y(n: impl Into<CylOrder>, x: f64) -> Result<f64> {
    let n = n.into();
    check_y_arg(x)?;
    let seq = y_sequence(n.magnitude(), x);
    Ok(n.parity_for_negative() * seq[n.magnitude()])
}

/// Outgoing Hankel function `H_n^(1)(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(n: impl Into<CylOrder>, x: f64) -> Result<Complex64> {
    let n = n.into();
    check_y_arg(x)?;
    let m = n.magnitude();
    let j = j_sequence(m, x)[m];
    let y = y_sequence(m, x)[m];
    Ok(n.parity_for_negative() * Complex64::new(j, y))
}

/// `J'_n(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`.
pub fn bessel_j_prime(n: impl Into<CylOrder>, x: f64) -> Result<f64> {
    let n = n.into().get();
    Ok(0.5 * (bessel_j(n - 1, x)? - bessel_j(n + 1, x)?))
}

/// `Y'_n(x) = (Y_{n-1}(x) - Y_{n+1}(x)) / 2`.
pub fn bessel_y_prime(n: impl Into<CylOrder>, x: f64) -> Result<f64> {
    let n = n.into().get();
    Ok(0.5 * (bessel_y(n - 1, x)? - bessel_y(n + 1, x)?))
}

/// `H'_n(x) = (H_{n-1}(x) - H_{n+1}(x)) / 2`.
pub fn hankel1_prime(n: impl Into<CylOrder>, x: f64) -> Result<Complex64> {
    let n = n.into().get();
    Ok(0.5 * (hankel1(n - 1, x)? - hankel1(n + 1, x)?))
}

impl CylOrder {
    fn parity_for_negative(self) -> f64 {
        if self.0 < 0 {
            self.parity()
        } else {
            1.0
        }
    }
}

/// `J_0..=J_nmax` and `Y_0..=Y_nmax` at one argument, both accurate to full
/// working precision.
#[derive(Debug, Clone)]
pub struct CylSequence {
    pub j: Vec<f64>,
    pub y: Vec<f64>,
}

impl CylSequence {
    pub fn new(nmax: usize, x: f64) -> Result<Self> {
        check_y_arg(x)?;
        Ok(CylSequence {
            j: j_sequence(nmax, x),
            y: y_sequence(nmax, x),
        })
    }

    pub fn hankel(&self, n: usize) -> Complex64 {
        Complex64::new(self.j[n], self.y[n])
    }
}

/// `H_0^(1)..=H_nmax^(1)` by forward recurrence.
///
/// The real parts lose relative accuracy once `n` exceeds `x` (where
/// `|J_n| << |Y_n|`), but every entry is accurate relative to `|H_n|`. Use
/// [`CylSequence`] when `J_n` itself is needed.
pub fn hankel1_sequence(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    check_y_arg(x)?;
    let mut out = Vec::with_capacity(nmax + 1);
    hankel1_sequence_into(nmax, x, &mut out);
    Ok(out)
}

/// Allocation-free variant of [`hankel1_sequence`] for hot loops. The caller
/// guarantees `x >= Y_ARG_FLOOR`.
pub(crate) fn hankel1_sequence_into(nmax: usize, x: f64, out: &mut Vec<Complex64>) {
    out.clear();
    let b = base_pair(x);
    let h0 = Complex64::new(b.j0, b.y0);
    out.push(h0);
    if nmax == 0 {
        return;
    }
    let h1 = Complex64::new(b.j1, b.y1);
    out.push(h1);
    let (mut prev, mut cur) = (h0, h1);
    let inv = 2.0 / x;
    for k in 1..nmax {
        if !cur.im.is_finite() {
            out.push(Complex64::new(0.0, cur.im));
            continue;
        }
        let next = (k as f64 * inv) * cur - prev;
        prev = cur;
        cur = next;
        out.push(next);
    }
}

#[derive(Debug, Clone, Copy)]
struct BasePair {
    j0: f64,
    j1: f64,
    y0: f64,
    y1: f64,
}

fn base_pair(x: f64) -> BasePair {
    if x < SERIES_LIMIT {
        BasePair {
            j0: j_series(0, x),
            j1: j_series(1, x),
            y0: y_series(0, x),
            y1: y_series(1, x),
        }
    } else if x < ASYMPTOTIC_LIMIT {
        steed(x)
    } else {
        let (j0, y0) = hankel_asymptotic(0, x);
        let (j1, y1) = hankel_asymptotic(1, x);
        BasePair { j0, j1, y0, y1 }
    }
}

/// Ascending series for `J_n`, used for `x < 2` where every term decreases.
fn j_series(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut prefix = 1.0;
    for k in 1..=n {
        prefix *= half / k as f64;
    }
    if prefix == 0.0 {
        return 0.0;
    }
    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * (n + k) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    prefix * sum
}

/// Ascending series for `Y_n` (integer `n`), used for `x < 2` and `n <= 1`.
fn y_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_term = FRAC_2_PI * ((half).ln() + EULER_GAMMA) * j_series(n, x);

    // Finite part: sum_{k<n} (n-k-1)!/k! (x/2)^(2k-n).
    let mut finite = 0.0;
    if n > 0 {
        let mut fact_nk1: f64 = (1..n).map(|v| v as f64).product();
        let mut k_fact = 1.0;
        let mut power = half.powi(-(n as i32));
        for k in 0..n {
            if k > 0 {
                k_fact *= k as f64;
                fact_nk1 /= (n - k) as f64;
                power *= half * half;
            }
            finite += fact_nk1 / k_fact * power;
        }
    }

    // Digamma part: (x/2)^n sum_k (H_k + H_{n+k}) (-x^2/4)^k / (k! (n+k)!).
    let q = -half * half;
    let mut harm_k = 0.0;
    let mut harm_nk: f64 = (1..=n).map(|v| 1.0 / v as f64).sum();
    let mut coef = half.powi(n as i32) / (1..=n).map(|v| v as f64).product::<f64>();
    let mut sum = coef * (harm_k + harm_nk);
    for k in 1..200 {
        coef *= q / (k as f64 * (n + k) as f64);
        harm_k += 1.0 / k as f64;
        harm_nk += 1.0 / (n + k) as f64;
        let term = coef * (harm_k + harm_nk);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    log_term - (finite + sum) / PI
}

/// `J'_nu/J_nu` by the modified Lentz evaluation of the continued fraction,
/// together with the sign of `J_nu` relative to the backward-recurrence seed.
fn cf1(nu: usize, x: f64) -> (f64, f64) {
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let mut isign = 1.0;
    let mut h = (nu as f64 * xi).max(CF_TINY);
    let mut b = xi2 * nu as f64;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..CF_MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b - 1.0 / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    (h, isign)
}

/// Steed's method for `J_0, J_1, Y_0, Y_1` at `x >= 2`.
fn steed(x: f64) -> BasePair {
    let xi = 1.0 / x;
    let w = 2.0 * xi / PI;

    // J'_1/J_1, then one backward step to order zero.
    let (h, isign) = cf1(1, x);
    let j1_seed = isign * 1e-150;
    let j1p_seed = h * j1_seed;
    let mut j0_seed = xi * j1_seed + j1p_seed;
    if j0_seed == 0.0 {
        j0_seed = CF_EPS * 1e-150;
    }
    let j0p_seed = -j1_seed;
    let f = j0p_seed / j0_seed;

    // p + iq = H_0'/H_0 by the complex continued fraction.
    let mut a = 0.25;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..CF_MAXIT {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < CF_TINY {
            dr = CF_TINY;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < CF_TINY {
            cr = CF_TINY;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < CF_EPS {
            break;
        }
    }

    let gam = (p - f) / q;
    let j0 = (w / ((p - f) * gam + q)).sqrt().copysign(j0_seed);
    let y0 = j0 * gam;
    let y0p = y0 * (p + q / gam);
    let j1 = j1_seed * (j0 / j0_seed);
    BasePair {
        j0,
        j1,
        y0,
        y1: -y0p,
    }
}

/// Hankel asymptotic expansion for `(J_n, Y_n)`; accurate to working
/// precision for `n <= 1` and `x >= 25`.
fn hankel_asymptotic(n: usize, x: f64) -> (f64, f64) {
    let mu = 4.0 * (n * n) as f64;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8x / k as f64;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // Terms alternate between Q and P with sign pattern (+Q, -P, -Q, +P, ...).
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    // chi = x - (n/2 + 1/4) pi, reduced without forming x - phase explicitly.
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (cos_chi, sin_chi) = match n % 4 {
        0 => (r * (c + s), r * (s - c)),
        1 => (r * (s - c), -r * (c + s)),
        2 => (-r * (c + s), r * (c - s)),
        _ => (r * (c - s), r * (c + s)),
    };
    let amp = (FRAC_2_PI / x).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

/// `J_0..=J_nmax` at `x >= 0`.
pub(crate) fn j_sequence(nmax: usize, x: f64) -> Vec<f64> {
    if x < SERIES_LIMIT {
        return (0..=nmax).map(|n| j_series(n, x)).collect();
    }
    let b = base_pair(x);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(b.j0);
    if nmax == 0 {
        return out;
    }
    out.push(b.j1);

    // Below the turning point n = x both solutions oscillate with comparable
    // size, so forward recurrence is stable there.
    let turn = (x.floor() as usize).min(nmax);
    let inv = 2.0 / x;
    for k in 1..turn {
        let next = k as f64 * inv * out[k] - out[k - 1];
        out.push(next);
    }
    if turn == nmax {
        return out;
    }

    // Above it, backward recurrence from the top order carrying (J, J'), with
    // exact power-of-two rescaling and a per-entry record of the rescale count.
    let (h, isign) = cf1(nmax, x);
    let xi = 1.0 / x;
    let lo = turn - 1;
    let mut s = vec![0.0; nmax + 1];
    let mut tag = vec![0i32; nmax + 1];
    let mut cur = isign;
    let mut cur_p = h * cur;
    let mut count = 0i32;
    let big = 2f64.powi(RESCALE_EXP);
    let shrink = 2f64.powi(-RESCALE_EXP);
    s[nmax] = cur;
    for l in (lo + 1..=nmax).rev() {
        let lower = l as f64 * xi * cur + cur_p;
        let lower_p = (l - 1) as f64 * xi * lower - cur;
        cur = lower;
        cur_p = lower_p;
        if cur.abs() > big || cur_p.abs() > big {
            cur *= shrink;
            cur_p *= shrink;
            count += 1;
        }
        s[l - 1] = cur;
        tag[l - 1] = count;
    }

    let scaled = |l: usize, v: f64| -> f64 {
        let mut v = v;
        for _ in 0..(count - tag[l]) {
            v *= shrink;
        }
        v
    };
    // Least-squares match on two adjacent orders, so a zero of either one
    // does not spoil the normalization.
    let (a0, a1) = (out[lo], out[turn]);
    let (s0, s1) = (scaled(lo, s[lo]), scaled(turn, s[turn]));
    let m = s0.abs().max(s1.abs());
    let (u0, u1) = (s0 / m, s1 / m);
    let fact = (u0 * a0 + u1 * a1) / (u0 * u0 + u1 * u1) / m;
    for l in turn + 1..=nmax {
        out.push(scaled(l, s[l] * fact));
    }
    out
}

/// `Y_0..=Y_nmax` at `x >= Y_ARG_FLOOR` by forward recurrence. Entries that
/// overflow are reported as infinities of the correct sign.
pub(crate) fn y_sequence(nmax: usize, x: f64) -> Vec<f64> {
    let b = base_pair(x);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(b.y0);
    if nmax == 0 {
        return out;
    }
    out.push(b.y1);
    let inv = 2.0 / x;
    let (mut prev, mut cur) = (b.y0, b.y1);
    for k in 1..nmax {
        let next = if cur.is_finite() {
            k as f64 * inv * cur - prev
        } else {
            cur
        };
        let next = if next.is_finite() {
            next
        } else {
            f64::INFINITY.copysign(cur)
        };
        prev = cur;
        cur = next;
        out.push(next);
    }
    out
}
