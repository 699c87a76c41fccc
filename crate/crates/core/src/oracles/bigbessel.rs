//! Arbitrary-precision reference values for `J_n(x)` and `Y_n(x)`.
//!
//! Shares nothing with [`crate::specfun`]: ascending series with the working
//! precision raised to absorb cancellation for `x < 1000`, and the Hankel
//! asymptotic expansion evaluated in extended precision above that.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
const ASYMPTOTIC_FROM: f64 = 1000.0;

/// Supported grid: `0 <= n <= MAX_ORDER`, `MIN_ARG <= x <= MAX_ARG`.
pub const MAX_ORDER: u32 = 200;
pub const MIN_ARG: f64 = 1e-3;
pub const MAX_ARG: f64 = 1e4;

const EULER_GAMMA_DIGITS: &str = "0.5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495146314472498070824809605040145";

/// High-precision `J_n(x)` and `Y_n(x)`.
#[derive(Debug, Clone)]
pub struct OracleJY {
    pub n: u32,
    pub x: f64,
    pub j: BigFloat,
    pub y: BigFloat,
}

impl OracleJY {
    pub fn j_f64(&self) -> f64 {
        to_f64(&self.j)
    }

    pub fn y_f64(&self) -> f64 {
        to_f64(&self.y)
    }

    /// Decimal rendering with about 30 significant digits.
    pub fn j_text(&self) -> String {
        to_text(&self.j)
    }

    pub fn y_text(&self) -> String {
        to_text(&self.y)
    }
}

fn to_text(v: &BigFloat) -> String {
    let mut c = v.clone();
    c.set_precision(128, RM).expect("precision reduction");
    let mut cc = Consts::new().expect("constant cache");
    let s = c
        .format(Radix::Dec, RM, &mut cc)
        .expect("decimal formatting");
    normalize_text(&s)
}

// astro-float prints exponents without an explicit sign for positive
// powers and may emit `Inf`; map both onto what `f64::from_str` accepts.
fn normalize_text(s: &str) -> String {
    match s {
        "Inf" => "inf".into(),
        "-Inf" => "-inf".into(),
        _ => s.to_string(),
    }
}

/// Correctly rounded (via decimal text) conversion to `f64`; values outside
/// the double range saturate to zero or infinity.
pub fn to_f64(v: &BigFloat) -> f64 {
    to_text(v).parse::<f64>().unwrap_or(f64::NAN)
}

/// Reference `J_n(x)`, `Y_n(x)` for `n <= 200`, `1e-3 <= x <= 1e4`.
pub fn specfun_oracle(n: u32, x: f64) -> Result<OracleJY> {
    if n > MAX_ORDER || !(MIN_ARG..=MAX_ARG).contains(&x) {
        return Err(Error::Unsupported(format!(
            "oracle grid is n <= {MAX_ORDER}, {MIN_ARG} <= x <= {MAX_ARG}; got n={n}, x={x}"
        )));
    }
    let mut cc = Consts::new().map_err(|e| Error::Unsupported(format!("{e:?}")))?;
    let (j, y) = if x < ASYMPTOTIC_FROM {
        series(n, x, &mut cc)
    } else {
        asymptotic(n, x, &mut cc)
    };
    Ok(OracleJY { n, x, j, y })
}

fn prec_for(x: f64) -> usize {
    // The alternating series loses about x*log2(e) bits to cancellation.
    let p = 192 + (1.45 * x).ceil() as usize;
    p.div_ceil(64) * 64
}

fn int(v: u64, p: usize) -> BigFloat {
    BigFloat::from_u64(v, p)
}

fn series(n: u32, x: f64, cc: &mut Consts) -> (BigFloat, BigFloat) {
    let p = prec_for(x);
    let n = n as u64;
    let half = BigFloat::from_f64(x, p).div(&int(2, p), p, RM);
    let q = half.mul(&half, p, RM).neg();

    // n! and (x/2)^n
    let mut n_fact = int(1, p);
    for v in 1..=n {
        n_fact = n_fact.mul(&int(v, p), p, RM);
    }
    let half_n = half.powi(n as usize, p, RM);

    // term_k = (-x^2/4)^k / (k! (n+k)!) ; J = (x/2)^n sum term_k
    // S2 = sum (H_k + H_{n+k}) term_k
    let mut term = int(1, p).div(&n_fact, p, RM);
    let mut h_k = BigFloat::new(p);
    h_k = h_k.sub(&h_k, p, RM); // exact zero at precision p
    let mut h_nk = h_k.clone();
    for v in 1..=n {
        h_nk = h_nk.add(&int(1, p).div(&int(v, p), p, RM), p, RM);
    }
    let mut sum_j = term.clone();
    let mut sum_h = term.mul(&h_k.add(&h_nk, p, RM), p, RM);
    let mut k: u64 = 0;
    loop {
        k += 1;
        term = term
            .mul(&q, p, RM)
            .div(&int(k, p), p, RM)
            .div(&int(n + k, p), p, RM);
        h_k = h_k.add(&int(1, p).div(&int(k, p), p, RM), p, RM);
        h_nk = h_nk.add(&int(1, p).div(&int(n + k, p), p, RM), p, RM);
        sum_j = sum_j.add(&term, p, RM);
        sum_h = sum_h.add(&term.mul(&h_k.add(&h_nk, p, RM), p, RM), p, RM);
        if k as f64 > x && negligible(&term, &sum_j, p) {
            break;
        }
    }
    let j = half_n.mul(&sum_j, p, RM);

    let pi = cc.pi(p, RM);
    let gamma = BigFloat::parse(EULER_GAMMA_DIGITS, Radix::Dec, p, RM, cc);
    let log_part = half
        .ln(p, RM, cc)
        .add(&gamma, p, RM)
        .mul(&j, p, RM)
        .mul(&int(2, p), p, RM);

    // sum_{k<n} (n-k-1)!/k! (x/2)^(2k-n)
    let mut finite = h_k.sub(&h_k, p, RM);
    if n > 0 {
        let inv_half = int(1, p).div(&half, p, RM);
        let mut fact_top = int(1, p); // (n-1)!
        for v in 1..n {
            fact_top = fact_top.mul(&int(v, p), p, RM);
        }
        let mut pw = inv_half.powi(n as usize, p, RM);
        let half_sq = half.mul(&half, p, RM);
        let mut k_fact = int(1, p);
        for k in 0..n {
            if k > 0 {
                k_fact = k_fact.mul(&int(k, p), p, RM);
                fact_top = fact_top.div(&int(n - k, p), p, RM);
                pw = pw.mul(&half_sq, p, RM);
            }
            finite = finite.add(&fact_top.div(&k_fact, p, RM).mul(&pw, p, RM), p, RM);
        }
    }
    let y = log_part
        .sub(&finite, p, RM)
        .sub(&half_n.mul(&sum_h, p, RM), p, RM)
        .div(&pi, p, RM);
    (j, y)
}

fn negligible(term: &BigFloat, sum: &BigFloat, p: usize) -> bool {
    if term.is_zero() {
        return true;
    }
    match (term.exponent(), sum.exponent()) {
        (Some(et), Some(es)) => (et as i64) < es as i64 - p as i64 - 8,
        _ => false,
    }
}

fn asymptotic(n: u32, x: f64, cc: &mut Consts) -> (BigFloat, BigFloat) {
    let p = 384;
    let bx = BigFloat::from_f64(x, p);
    let mu = int(4 * (n as u64) * (n as u64), p);
    let eight_x = bx.mul(&int(8, p), p, RM);

    // a_k / x^k with a_k = prod_{j<=k} (mu - (2j-1)^2) / (k! 8^k)
    let mut p_sum = int(1, p);
    let mut q_sum = p_sum.sub(&p_sum, p, RM);
    let mut a = int(1, p);
    let mut prev_mag: Option<i64> = None;
    for k in 1..100_000u64 {
        let odd = 2 * k - 1;
        let num = mu.sub(&int(odd * odd, p), p, RM);
        a = a
            .mul(&num, p, RM)
            .div(&eight_x, p, RM)
            .div(&int(k, p), p, RM);
        if a.is_zero() {
            break;
        }
        let mag = a.exponent().map(|e| e as i64).unwrap_or(i64::MIN);
        // Stop at the smallest term of the divergent tail.
        if k > n as u64 + 2 {
            if let Some(pm) = prev_mag {
                if mag > pm {
                    break;
                }
            }
        }
        prev_mag = Some(mag);
        match k % 4 {
            1 => q_sum = q_sum.add(&a, p, RM),
            2 => p_sum = p_sum.sub(&a, p, RM),
            3 => q_sum = q_sum.sub(&a, p, RM),
            _ => p_sum = p_sum.add(&a, p, RM),
        }
        if mag < -(p as i64) - 16 {
            break;
        }
    }

    let pi = cc.pi(p, RM);
    // chi = x - (n/2 + 1/4) pi = x - (2n+1) pi / 4
    let shift = pi
        .mul(&int(2 * n as u64 + 1, p), p, RM)
        .div(&int(4, p), p, RM);
    let chi = bx.sub(&shift, p, RM);
    let (s, c) = (chi.sin(p, RM, cc), chi.cos(p, RM, cc));
    let amp = int(2, p).div(&pi.mul(&bx, p, RM), p, RM).sqrt(p, RM);
    let j = amp.mul(
        &p_sum.mul(&c, p, RM).sub(&q_sum.mul(&s, p, RM), p, RM),
        p,
        RM,
    );
    let y = amp.mul(
        &p_sum.mul(&s, p, RM).add(&q_sum.mul(&c, p, RM), p, RM),
        p,
        RM,
    );
    (j, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn unit_argument_matches_reference_digits() {
        let o = specfun_oracle(0, 1.0).unwrap();
        assert!(
            o.j_text().starts_with("7.65197686557966551449717526"),
            "{}",
            o.j_text()
        );
        assert!(
            o.y_text().starts_with("8.82569642156769579829267660"),
            "{}",
            o.y_text()
        );
        let o = specfun_oracle(1, 1.0).unwrap();
        assert!(
            o.j_text().starts_with("4.40050585744933515959682203"),
            "{}",
            o.j_text()
        );
        assert!(
            o.y_text().starts_with("-7.81212821300288716547150000"),
            "{}",
            o.y_text()
        );
    }

    #[test]
    fn wronskian_holds_to_many_digits() {
        let p = 256;
        let mut cc = Consts::new().unwrap();
        for &(n, x) in &[
            (0u32, 0.01),
            (3, 1.7),
            (20, 35.0),
            (7, 999.0),
            (7, 1000.0),
            (150, 4000.0),
        ] {
            let a = specfun_oracle(n, x).unwrap();
            let b = specfun_oracle(n + 1, x).unwrap();
            // J_{n+1} Y_n - J_n Y_{n+1} = 2/(pi x)
            let w = b.j.mul(&a.y, p, RM).sub(&a.j.mul(&b.y, p, RM), p, RM);
            let target = int(2, p).div(&cc.pi(p, RM).mul(&BigFloat::from_f64(x, p), p, RM), p, RM);
            let err = w.sub(&target, p, RM).div(&target, p, RM);
            let e = to_f64(&err).abs();
            assert!(e < 1e-18, "n={n} x={x} err={e}");
        }
    }

    #[test]
    fn series_and_asymptotic_agree_at_crossover() {
        let mut cc = Consts::new().unwrap();
        for &n in &[0u32, 5, 60] {
            let (js, ys) = series(n, 1000.0, &mut cc);
            let (ja, ya) = asymptotic(n, 1000.0, &mut cc);
            assert!(
                rel(to_f64(&js), to_f64(&ja)) < 1e-20 || (to_f64(&js) - to_f64(&ja)).abs() < 1e-22
            );
            assert!(
                rel(to_f64(&ys), to_f64(&ya)) < 1e-20 || (to_f64(&ys) - to_f64(&ya)).abs() < 1e-22
            );
        }
    }

    #[test]
    fn out_of_grid_is_unsupported() {
        assert!(matches!(
            specfun_oracle(201, 1.0),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            specfun_oracle(0, 1e-4),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(specfun_oracle(0, 2e4), Err(Error::Unsupported(_))));
    }
}
