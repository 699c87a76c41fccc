//! PEC boundary check. The total field of a solved scene is re-evaluated from
//! the solution's coefficients with independently computed Bessel functions
//! and T-matrix entries; on a perfect conductor it must vanish.

use num_complex::Complex64 as C;

use super::miller;
use crate::error::{Error, Result};
use crate::scatter::{Material, ScatterSolution};

struct Sampled {
    /// `[column][scatterer]` max |total| over the ring.
    total: Vec<Vec<f64>>,
    /// `[column]` max |incident| over every ring in the scene.
    incident: Vec<f64>,
}

fn hankel(nmax: usize, x: f64) -> Vec<C> {
    let (j, y) = miller::jy(nmax.max(1), x);
    j.iter()
        .zip(&y)
        .map(|(a, b)| C::new(*a, *b))
        .take(nmax + 1)
        .collect()
}

fn pec_t(nmax: usize, ka: f64) -> Vec<C> {
    let (j, y) = miller::jy(nmax.max(1), ka);
    (0..=nmax)
        .map(|n| -C::new(j[n], 0.0) / C::new(j[n], y[n]))
        .collect()
}

fn sample(solution: &ScatterSolution, which: &[usize], samples: usize) -> Result<Sampled> {
    if samples == 0 {
        return Err(Error::Domain("need at least one boundary sample".into()));
    }
    let sc = solution.scatterers();
    let k = solution.wavenumber().k();
    let nmax = solution.truncation().n_max();
    let mut t = Vec::with_capacity(sc.len());
    for s in sc {
        t.push(match s.material {
            Material::Pec => pec_t(nmax, k * s.radius),
            Material::Dielectric { .. } => {
                return Err(Error::Unsupported(
                    "boundary residual needs every scatterer to be PEC".into(),
                ))
            }
        });
    }
    let cols = solution.columns();
    let mut total = vec![vec![0.0f64; which.len()]; cols];
    let mut incident = vec![0.0f64; cols];
    for (q, ring) in sc.iter().enumerate() {
        let target = which.iter().position(|w| *w == q);
        for i in 0..samples {
            let ang = i as f64 * std::f64::consts::TAU / samples as f64;
            let (rx, ry) = (
                ring.center.x + ring.radius * ang.cos(),
                ring.center.y + ring.radius * ang.sin(),
            );
            let mut inc = vec![C::new(0.0, 0.0); cols];
            for (si, s) in solution.sources().iter().enumerate() {
                let d = (rx - s.x).hypot(ry - s.y);
                let g = C::new(0.0, 0.25) * hankel(0, k * d)[0];
                for (c, v) in inc.iter_mut().enumerate() {
                    *v += solution.excitations()[(si, c)] * g;
                }
            }
            for (c, v) in inc.iter().enumerate() {
                incident[c] = incident[c].max(v.norm());
            }
            let Some(slot) = target else { continue };
            let mut field = inc;
            for (p, cyl) in sc.iter().enumerate() {
                let (dx, dy) = (rx - cyl.center.x, ry - cyl.center.y);
                let h = hankel(nmax, k * dx.hypot(dy));
                let th = dy.atan2(dx);
                for m in -(nmax as i32)..=nmax as i32 {
                    let a = m.unsigned_abs() as usize;
                    let sign = if m < 0 && a % 2 == 1 { -1.0 } else { 1.0 };
                    let w = t[p][a] * h[a] * sign * C::from_polar(1.0, m as f64 * th);
                    for (c, f) in field.iter_mut().enumerate() {
                        *f += w * solution.coefficient_in(c, p, m);
                    }
                }
            }
            for (c, f) in field.iter().enumerate() {
                total[c][slot] = total[c][slot].max(f.norm());
            }
        }
    }
    Ok(Sampled { total, incident })
}

fn normalized(s: &Sampled, slot: usize) -> f64 {
    s.total
        .iter()
        .zip(&s.incident)
        .map(|(t, inc)| if *inc > 0.0 { t[slot] / inc } else { t[slot] })
        .fold(0.0, f64::max)
}

/// Max |total field| over `samples` equally spaced points on the boundary of
/// scatterer `index`, relative to the largest incident magnitude found on
/// any scatterer boundary of the scene. Multi-column solutions report the
/// worst column.
pub fn boundary_residual(solution: &ScatterSolution, index: usize, samples: usize) -> Result<f64> {
    let sc = solution.scatterers();
    let Some(target) = sc.get(index) else {
        return Err(Error::Domain(format!("scene has no scatterer {index}")));
    };
    if !matches!(target.material, Material::Pec) {
        return Err(Error::Unsupported(format!(
            "scatterer {index} is dielectric; the residual check is PEC-only"
        )));
    }
    Ok(normalized(&sample(solution, &[index], samples)?, 0))
}

/// [`boundary_residual`] for every scatterer.
pub fn boundary_residuals(solution: &ScatterSolution, samples: usize) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..solution.scatterers().len()).collect();
    let s = sample(solution, &all, samples)?;
    Ok((0..all.len()).map(|i| normalized(&s, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{Point3, Wavenumber};
    use crate::scatter::{solve_scene, suggest_truncation, Scatterer, SourceArray, Truncation};

    fn one(radius: f64, n: Option<usize>) -> ScatterSolution {
        let k = Wavenumber::from_frequency(915e6).unwrap();
        let sc = [Scatterer::pec(Point3::xy(0.0, 0.0), radius)];
        let tr = n
            .map(|n| Truncation::new(n).unwrap())
            .unwrap_or_else(|| suggest_truncation(&sc, &k));
        solve_scene(
            &sc,
            &SourceArray::unit(vec![Point3::xy(0.0, -0.6)]).unwrap(),
            &k,
            tr,
        )
        .unwrap()
    }

    #[test]
    fn single_cylinder_residual_shrinks() {
        let n0 = one(0.015, None).truncation().n_max();
        let r0 = boundary_residual(&one(0.015, None), 0, 64).unwrap();
        let r4 = boundary_residual(&one(0.015, Some(n0 + 4)), 0, 64).unwrap();
        assert!(r0 <= 1e-3, "{r0}");
        assert!(r4 < r0, "{r4} {r0}");
    }

    #[test]
    fn vanishing_cylinder_leaves_incident_field() {
        let lam = 299_792_458.0 / 915e6;
        let r = boundary_residual(&one(1e-6 * lam, Some(2)), 0, 16).unwrap();
        // field on a tiny PEC ring is ~0 and the incident field is order one
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn dielectric_is_unsupported() {
        let k = Wavenumber::from_k(10.0).unwrap();
        let sc = [Scatterer::dielectric(Point3::xy(0.0, 0.0), 0.1, 20.0)];
        let sol = solve_scene(
            &sc,
            &SourceArray::unit(vec![Point3::xy(1.0, 0.0)]).unwrap(),
            &k,
            Truncation::new(5).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            boundary_residual(&sol, 0, 8),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            boundary_residual(&sol, 3, 8),
            Err(Error::Domain(_))
        ));
    }
}
