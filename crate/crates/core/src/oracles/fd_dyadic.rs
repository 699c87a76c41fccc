//! Finite-difference dyadic Green's function: applies `I + grad grad / k^2`
//! numerically to its own copy of the scalar kernel.

use num_complex::Complex64;

fn scalar(p: [f64; 3], k: f64) -> Complex64 {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let phase = Complex64::new(0.0, k * r).exp();
    phase / (4.0 * std::f64::consts::PI * r)
}

fn second_diff(sep: [f64; 3], k: f64, i: usize, j: usize, h: f64) -> Complex64 {
    let at = |di: f64, dj: f64| {
        let mut p = sep;
        p[i] += di;
        p[j] += dj;
        scalar(p, k)
    };
    if i == j {
        (at(h, 0.0) - 2.0 * scalar(sep, k) + at(-h, 0.0)) / (h * h)
    } else {
        (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
    }
}

/// Dyadic kernel for separation vector `sep = r_R - r_T`, as a row-major 3x3
/// array. Uses central differences of step `h` and `h/2` combined by one
/// Richardson step, with `h = step_kh / k`.
pub fn fd_dyadic(sep: [f64; 3], k: f64, step_kh: f64) -> [[Complex64; 3]; 3] {
    let h = step_kh / k;
    let g = scalar(sep, k);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let coarse = second_diff(sep, k, i, j, h);
            let fine = second_diff(sep, k, i, j, 0.5 * h);
            let d2 = (4.0 * fine - coarse) / 3.0;
            let delta = if i == j { g } else { Complex64::new(0.0, 0.0) };
            delta + d2 / (k * k)
        })
    })
}
