use std::io::Write;
use std::path::Path;

use faer::{c64, Mat};
use rayon::prelude::*;

use super::{translation_row, ScatterSolution};
use crate::error::{Error, Result};
use crate::greens::Point3;
use crate::imageio::GrayImage;
use crate::specfun;

const CHUNK: usize = 256;

/// Total field at `probes` for every excitation column of `solution`, shape
/// `probes.len() x solution.columns()`. Probes must lie outside every
/// cylinder; no check is made here.
pub fn evaluate(solution: &ScatterSolution, probes: &[Point3]) -> Result<Mat<c64>> {
    let amps = solution.scattered_amplitudes();
    let ex = solution.excitations();
    let k = solution.wavenumber().k();
    let nm = solution.truncation().n_max();
    let w = solution.truncation().width();
    let scs = solution.scatterers();
    let tx = solution.sources();
    let ncols = solution.columns();

    let chunks: Vec<Result<Mat<c64>>> = probes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut hseq = Vec::new();
            let mut row = Vec::new();
            let mut radiate = Mat::<c64>::zeros(chunk.len(), amps.nrows());
            let mut direct = Mat::<c64>::zeros(chunk.len(), tx.len());
            for (i, r) in chunk.iter().enumerate() {
                for (p, s) in scs.iter().enumerate() {
                    let kr = k * r.dist_xy(&s.center);
                    if kr < specfun::Y_ARG_FLOOR {
                        return Err(Error::Singular(r.as_array()));
                    }
                    // H_m(k rho) e^{i m theta}
                    translation_row(nm, kr, -r.angle_from(&s.center), &mut hseq, &mut row);
                    for m in 0..w {
                        radiate[(i, p * w + m)] = row[m];
                    }
                }
                for (s, src) in tx.iter().enumerate() {
                    let kd = k * r.dist_xy(src);
                    if kd < specfun::Y_ARG_FLOOR {
                        return Err(Error::Singular(r.as_array()));
                    }
                    direct[(i, s)] = c64::new(0.0, 0.25) * specfun::hankel1(0, kd)?;
                }
            }
            let mut out = &direct * ex;
            if amps.nrows() > 0 {
                out += &radiate * &amps;
            }
            Ok(out)
        })
        .collect();

    let mut total = Mat::<c64>::zeros(probes.len(), ncols);
    for (ci, chunk) in chunks.into_iter().enumerate() {
        let chunk = chunk?;
        for i in 0..chunk.nrows() {
            for c in 0..ncols {
                total[(ci * CHUNK + i, c)] = chunk[(i, c)];
            }
        }
    }
    Ok(total)
}

/// Like [`evaluate`], but probes inside a cylinder are reported through the
/// returned mask and carry the value zero (the field inside a conductor).
pub fn evaluate_masked(
    solution: &ScatterSolution,
    probes: &[Point3],
) -> Result<(Mat<c64>, Vec<bool>)> {
    let mask: Vec<bool> = probes
        .iter()
        .map(|p| solution.scatterers().iter().any(|s| s.contains(p)))
        .collect();
    let outside: Vec<Point3> = probes
        .iter()
        .zip(&mask)
        .filter(|(_, m)| !**m)
        .map(|(p, _)| *p)
        .collect();
    let vals = evaluate(solution, &outside)?;
    let mut out = Mat::<c64>::zeros(probes.len(), solution.columns());
    let mut j = 0;
    for (i, m) in mask.iter().enumerate() {
        if !m {
            for c in 0..solution.columns() {
                out[(i, c)] = vals[(j, c)];
            }
            j += 1;
        }
    }
    Ok((out, mask))
}

/// Dimensions of a rectangular probe grid; probe `ix + iy * nx` sits in
/// column `ix` and row `iy`, with `y` increasing with `iy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
}

/// Complex field samples at a set of probes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub probes: Vec<Point3>,
    pub values: Vec<c64>,
    /// `true` where the probe lies inside a scatterer.
    pub masked: Vec<bool>,
    pub shape: Option<GridShape>,
}

impl FieldMap {
    pub fn new(
        probes: Vec<Point3>,
        values: Vec<c64>,
        masked: Vec<bool>,
        shape: Option<GridShape>,
    ) -> Self {
        FieldMap {
            probes,
            values,
            masked,
            shape,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.masked)
            .filter(|(_, m)| !**m)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }

    /// `|E| / max |E|`, zero at masked probes.
    pub fn normalized_magnitude(&self) -> Vec<f64> {
        let m = self.max_abs();
        self.values
            .iter()
            .zip(&self.masked)
            .map(|(v, masked)| {
                if *masked || m == 0.0 {
                    0.0
                } else {
                    v.norm() / m
                }
            })
            .collect()
    }

    /// Rescales to unit peak magnitude.
    pub fn normalized(&self) -> FieldMap {
        let m = self.max_abs();
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        FieldMap {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// CSV with columns `x,y,re,im,abs_norm`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mag = self.normalized_magnitude();
        let mut s = String::from("x,y,re,im,abs_norm\n");
        for ((p, v), a) in self.probes.iter().zip(&self.values).zip(&mag) {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                p.x, p.y, v.re, v.im, a
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Normalized magnitude as an 8-bit image, top row at the largest `y`.
    pub fn to_image(&self) -> Result<GrayImage> {
        let shape = self.shape.ok_or_else(|| {
            Error::Unsupported("only grid field maps can be rendered as images".into())
        })?;
        let mag = self.normalized_magnitude();
        let mut pixels = Vec::with_capacity(shape.nx * shape.ny);
        for row in 0..shape.ny {
            let iy = shape.ny - 1 - row;
            for ix in 0..shape.nx {
                let v = mag[ix + iy * shape.nx];
                pixels.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        GrayImage::new(shape.nx, shape.ny, pixels)
    }
}
