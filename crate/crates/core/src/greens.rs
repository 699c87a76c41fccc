//! Free-space Green's functions: the 3-D scalar kernel, the 3-D dyadic kernel
//! and the 2-D line-source kernel.

use std::f64::consts::PI;
use std::ops::{Index, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// A point in space, meters. Two-dimensional kernels ignore `z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        Point3 { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dist(&self, o: &Point3) -> f64 {
        (*self - *o).norm()
    }

    /// Distance in the xy plane.
    pub fn dist_xy(&self, o: &Point3) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    /// Polar angle of `self - o` in the xy plane, `atan2(dy, dx)`.
    pub fn angle_from(&self, o: &Point3) -> f64 {
        (self.y - o.y).atan2(self.x - o.x)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// Free-space wavenumber together with the frequency and phase speed it was
/// derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber {
    k: f64,
    frequency: f64,
    c: f64,
}

impl Wavenumber {
    /// Vacuum wavenumber at `frequency_hz`.
    pub fn from_frequency(frequency_hz: f64) -> Result<Self> {
        Self::with_speed(frequency_hz, C0)
    }

    pub fn with_speed(frequency_hz: f64, c: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0 && c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!(
                "frequency and wave speed must be positive and finite, got f={frequency_hz}, c={c}"
            )));
        }
        Ok(Wavenumber {
            k: 2.0 * PI * frequency_hz / c,
            frequency: frequency_hz,
            c,
        })
    }

    /// Wavenumber given directly in rad/m; the frequency is back-computed
    /// assuming vacuum.
    pub fn from_k(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!(
                "wavenumber must be positive and finite, got {k}"
            )));
        }
        Ok(Wavenumber {
            k,
            frequency: k * C0 / (2.0 * PI),
            c: C0,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }
}

/// 3x3 complex dyadic, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicG(pub [[Complex64; 3]; 3]);

impl DyadicG {
    pub fn transpose(&self) -> DyadicG {
        let m = &self.0;
        DyadicG(std::array::from_fn(|i| std::array::from_fn(|j| m[j][i])))
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DyadicG) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
    }
}

impl Index<(usize, usize)> for DyadicG {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

fn check_pair(r: &Point3, s: &Point3, d: f64) -> Result<()> {
    if !r.is_finite() || !s.is_finite() {
        return Err(Error::Domain("point coordinates must be finite".into()));
    }
    if d == 0.0 {
        return Err(Error::Singular(r.as_array()));
    }
    Ok(())
}

/// `exp(ikd) / (4 pi d)` with `d = |rr - rt|`.
pub fn scalar_g3d(rr: &Point3, rt: &Point3, k: &Wavenumber) -> Result<Complex64> {
    let d = rr.dist(rt);
    check_pair(rr, rt, d)?;
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * d), k.k * d))
}

/// `(I + grad grad / k^2) exp(ikd) / (4 pi d)` in closed form:
/// `g [ (1 + i/kd - 1/kd^2) I + (-1 - 3i/kd + 3/kd^2) R R ]` with `R` the unit
/// separation vector.
pub fn dyadic_g3d(rr: &Point3, rt: &Point3, k: &Wavenumber) -> Result<DyadicG> {
    let sep = *rr - *rt;
    let d = sep.norm();
    check_pair(rr, rt, d)?;
    let g = Complex64::from_polar(1.0 / (4.0 * PI * d), k.k * d);
    let u = 1.0 / (k.k * d);
    let a = g * Complex64::new(1.0 - u * u, u);
    let b = g * Complex64::new(-1.0 + 3.0 * u * u, -3.0 * u);
    let r = [sep.x / d, sep.y / d, sep.z / d];
    Ok(DyadicG(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let diag = if i == j { a } else { Complex64::new(0.0, 0.0) };
            diag + b * (r[i] * r[j])
        })
    })))
}

/// 2-D TM line-source field `(i/4) H_0^(1)(k |r - rs|)`, `z` ignored.
pub fn line_source_g2d(r: &Point3, rs: &Point3, k: &Wavenumber) -> Result<Complex64> {
    let d = r.dist_xy(rs);
    check_pair(r, rs, d)?;
    let h = specfun::hankel1(0, k.k * d)?;
    Ok(Complex64::new(0.0, 0.25) * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(v: f64) -> Wavenumber {
        Wavenumber::from_k(v).unwrap()
    }

    #[test]
    fn scalar_magnitude_and_phase() {
        let d = 1.0 / (4.0 * PI);
        let g = scalar_g3d(&Point3::new(d, 0.0, 0.0), &Point3::default(), &k(3.0)).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-15);
        let g = scalar_g3d(
            &Point3::new(0.0, 0.0, 1.0),
            &Point3::default(),
            &k(2.0 * PI),
        )
        .unwrap();
        assert!((g - Complex64::new(1.0 / (4.0 * PI), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn coincident_points_are_singular() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(matches!(
            scalar_g3d(&p, &p, &k(1.0)),
            Err(Error::Singular(_))
        ));
        assert!(matches!(
            dyadic_g3d(&p, &p, &k(1.0)),
            Err(Error::Singular(_))
        ));
        let q = Point3::new(1.0, 2.0, -5.0);
        assert!(matches!(
            line_source_g2d(&p, &q, &k(1.0)),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn wavenumber_from_frequency() {
        let w = Wavenumber::from_frequency(915e6).unwrap();
        assert!((w.k() - 2.0 * PI * 915e6 / C0).abs() < 1e-12);
        assert!((w.wavelength() - C0 / 915e6).abs() < 1e-15);
        assert!(Wavenumber::from_frequency(0.0).is_err());
        assert!(Wavenumber::from_k(f64::NAN).is_err());
    }

    #[test]
    fn trace_is_twice_scalar() {
        // The radial terms cancel in the trace exactly, leaving 2g.
        let a = Point3::new(0.3, -0.2, 0.9);
        let b = Point3::new(-0.1, 0.4, 0.2);
        let w = k(7.0);
        let g = scalar_g3d(&a, &b, &w).unwrap();
        let t = dyadic_g3d(&a, &b, &w).unwrap().trace();
        assert!((t - 2.0 * g).norm() < 1e-14 * g.norm());
    }

    #[test]
    fn far_field_is_transverse_projector() {
        let w = k(1.0);
        let b = Point3::default();
        // The near-field correction is of order 1/(kd), so kd = 1e7 is
        // needed for a 1e-6 match.
        for &kd in &[1e4, 1e7] {
            let a = Point3::new(0.0, 0.0, kd);
            let gd = dyadic_g3d(&a, &b, &w).unwrap();
            let g = scalar_g3d(&a, &b, &w).unwrap();
            let proj = DyadicG(std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    if i == j && i < 2 {
                        g
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }));
            let err = gd.max_abs_diff(&proj) / g.norm();
            assert!(err <= 2.0 / kd * 1.0001, "kd={kd} err={err}");
            assert!((gd[(2, 2)] / g).norm() <= 2.0 / kd * 1.0001);
            let tr = gd.trace() * 4.0 * PI * kd / Complex64::from_polar(1.0, kd);
            assert!((tr - 2.0).norm() < 1e-6);
        }
        let a = Point3::new(0.0, 0.0, 1e7);
        let gd = dyadic_g3d(&a, &b, &w).unwrap();
        let g = scalar_g3d(&a, &b, &w).unwrap();
        assert!((gd[(0, 0)] / g - 1.0).norm() < 1e-6);
        assert!((gd[(2, 2)] / g).norm() < 1e-6);
    }

    #[test]
    fn line_source_reference_values() {
        let w = k(1.0);
        let v = line_source_g2d(&Point3::xy(1.0, 0.0), &Point3::default(), &w).unwrap();
        let expect = Complex64::new(0.0, 0.25)
            * Complex64::new(0.765_197_686_557_966_6, 0.088_256_964_215_676_96);
        assert!((v - expect).norm() < 1e-15);
        for &kd in &[100.0, 300.0, 5000.0] {
            let v = line_source_g2d(&Point3::xy(0.0, kd), &Point3::default(), &w).unwrap();
            let approx = 0.25 * (2.0 / (PI * kd)).sqrt();
            assert!((v.norm() / approx - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn decay_exponents() {
        let w = k(2.0);
        let o = Point3::default();
        let g = |d: f64| {
            scalar_g3d(&Point3::new(d, 0.0, 0.0), &o, &w)
                .unwrap()
                .norm()
        };
        assert!((g(3.0) * 3.0 - g(30.0) * 30.0).abs() < 1e-15);
        let h = |d: f64| line_source_g2d(&Point3::xy(d, 0.0), &o, &w).unwrap().norm();
        let slope = (h(500.0).ln() - h(50.0).ln()) / (500f64.ln() - 50f64.ln());
        assert!((slope + 0.5).abs() < 0.005, "slope {slope}");
    }

    fn laplacian_residual<F: Fn(f64, f64, f64) -> Complex64>(
        f: F,
        p: [f64; 3],
        h: f64,
        k2: f64,
        dims: usize,
    ) -> f64 {
        let c = f(p[0], p[1], p[2]);
        let mut lap = Complex64::new(0.0, 0.0);
        for axis in 0..dims {
            let mut a = p;
            let mut b = p;
            a[axis] += h;
            b[axis] -= h;
            lap += (f(a[0], a[1], a[2]) + f(b[0], b[1], b[2]) - 2.0 * c) / (h * h);
        }
        (lap + k2 * c).norm() / c.norm()
    }

    #[test]
    fn helmholtz_residuals_are_small() {
        let w = k(5.0);
        let s = Point3::new(0.1, -0.2, 0.05);
        let f3 = |x, y, z| scalar_g3d(&Point3::new(x, y, z), &s, &w).unwrap();
        let f2 = |x, y, _z| line_source_g2d(&Point3::xy(x, y), &s, &w).unwrap();
        for p in [[1.0, 0.5, -0.3], [0.4, 0.9, 0.2], [2.0, -1.0, 0.0]] {
            assert!(laplacian_residual(f3, p, 1e-3, 25.0, 3) < 1e-4);
            assert!(laplacian_residual(f2, p, 1e-3, 25.0, 2) < 1e-4);
        }
    }

    fn arb_point() -> impl Strategy<Value = Point3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn kernels_are_reciprocal(a in arb_point(), b in arb_point(), kk in 0.1..50.0f64) {
            prop_assume!(a.dist(&b) > 1e-3 && a.dist_xy(&b) > 1e-3);
            let w = k(kk);
            prop_assert_eq!(scalar_g3d(&a, &b, &w).unwrap(), scalar_g3d(&b, &a, &w).unwrap());
            let g1 = dyadic_g3d(&a, &b, &w).unwrap();
            let g2 = dyadic_g3d(&b, &a, &w).unwrap().transpose();
            prop_assert!(g1.max_abs_diff(&g2) <= 1e-15 * g1.max_abs());
            prop_assert!(g1.max_abs_diff(&g1.transpose()) == 0.0);
            prop_assert_eq!(line_source_g2d(&a, &b, &w).unwrap(), line_source_g2d(&b, &a, &w).unwrap());
        }
    }
}
