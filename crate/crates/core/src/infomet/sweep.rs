use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::effective_capacity_of;
use crate::error::{Error, Result};
use crate::greens::{scalar_g3d, Point3, Wavenumber};

/// Which array parameter varies along the x axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Elements per side of both square arrays.
    NumSources,
    /// Side length of both square apertures, meters.
    Aperture,
    /// Separation between the array planes, meters.
    Distance,
}

/// Two identical, coaxial, square planar arrays of `per_side x per_side`
/// isotropic points facing each other across free space.
///
/// `values` are the x-axis points. `series` lists the secondary parameter,
/// one output column each: distances for [`SweepKind::NumSources`] and
/// [`SweepKind::Aperture`], apertures for [`SweepKind::Distance`]. An empty
/// `series` means a single column at the fixed `distance_m` or `aperture_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub frequency_hz: f64,
    #[serde(default = "default_per_side")]
    pub per_side: usize,
    #[serde(default)]
    pub aperture_m: f64,
    #[serde(default)]
    pub distance_m: f64,
    pub values: Vec<f64>,
    #[serde(default)]
    pub series: Vec<f64>,
}

fn default_per_side() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub x_label: String,
    pub series_labels: Vec<String>,
    pub x: Vec<f64>,
    /// `columns[s][i]` is C_eff of series `s` at `x[i]`.
    pub columns: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = self.x_label.clone();
        for l in &self.series_labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for (i, x) in self.x.iter().enumerate() {
            s.push_str(&format!("{x}"));
            for c in &self.columns {
                s.push_str(&format!(",{:.12}", c[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Element positions of a square array centered on the z axis at height
/// `z`: cell centers of a `per_side x per_side` partition of the aperture.
pub fn square_array(per_side: usize, aperture: f64, z: f64) -> Vec<Point3> {
    let pitch = aperture / per_side as f64;
    let coord = |i: usize| -0.5 * aperture + (i as f64 + 0.5) * pitch;
    let mut pts = Vec::with_capacity(per_side * per_side);
    for iy in 0..per_side {
        for ix in 0..per_side {
            pts.push(Point3::new(coord(ix), coord(iy), z));
        }
    }
    pts
}

fn c_eff_for(per_side: usize, aperture: f64, distance: f64, k: &Wavenumber) -> Result<f64> {
    let tx = square_array(per_side, aperture, 0.0);
    let rx = square_array(per_side, aperture, distance);
    let mut h = Mat::<c64>::zeros(rx.len(), tx.len());
    for (i, r) in rx.iter().enumerate() {
        for (j, t) in tx.iter().enumerate() {
            h[(i, j)] = scalar_g3d(r, t, k)?;
        }
    }
    let s = h
        .singular_values()
        .map_err(|e| Error::Conditioning(format!("SVD did not converge: {e:?}")))?;
    effective_capacity_of(&s)
}

fn check(cfg: &SweepConfig) -> Result<()> {
    let bad = |m: String| Err(Error::Config(m));
    if !(cfg.frequency_hz > 0.0 && cfg.frequency_hz.is_finite()) {
        return bad(format!(
            "sweep frequency must be positive, got {}",
            cfg.frequency_hz
        ));
    }
    if cfg.values.is_empty() {
        return bad("sweep needs at least one x value".into());
    }
    let positive = |v: f64| v > 0.0 && v.is_finite();
    match cfg.kind {
        SweepKind::NumSources => {
            if cfg
                .values
                .iter()
                .any(|v| !(*v >= 1.0 && v.fract() == 0.0 && v.is_finite()))
            {
                return bad("source counts per side must be positive integers".into());
            }
        }
        _ => {
            if cfg.values.iter().any(|v| !positive(*v)) {
                return bad("sweep values must be positive".into());
            }
            if cfg.per_side == 0 {
                return bad("per_side must be at least 1".into());
            }
        }
    }
    if cfg.series.iter().any(|v| !positive(*v)) {
        return bad("series values must be positive".into());
    }
    let fixed_ok = match cfg.kind {
        SweepKind::NumSources => {
            positive(cfg.aperture_m) && (!cfg.series.is_empty() || positive(cfg.distance_m))
        }
        SweepKind::Aperture => !cfg.series.is_empty() || positive(cfg.distance_m),
        SweepKind::Distance => !cfg.series.is_empty() || positive(cfg.aperture_m),
    };
    if !fixed_ok {
        return bad("sweep is missing a positive aperture_m or distance_m".into());
    }
    Ok(())
}

/// Effective capacity over a one-parameter family of free-space links.
/// Points are independent and evaluated in parallel; the table order is
/// fixed by the configuration.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    check(cfg)?;
    let k = Wavenumber::from_frequency(cfg.frequency_hz)?;
    let series: Vec<f64> = if !cfg.series.is_empty() {
        cfg.series.clone()
    } else if cfg.kind == SweepKind::Distance {
        vec![cfg.aperture_m]
    } else {
        vec![cfg.distance_m]
    };
    let (x_label, series_name) = match cfg.kind {
        SweepKind::NumSources => ("n_per_side", "distance_m"),
        SweepKind::Aperture => ("aperture_m", "distance_m"),
        SweepKind::Distance => ("distance_m", "aperture_m"),
    };
    let jobs: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|s| (0..cfg.values.len()).map(move |i| (s, i)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(s, i)| {
            let x = cfg.values[i];
            let p = series[s];
            match cfg.kind {
                SweepKind::NumSources => c_eff_for(x as usize, cfg.aperture_m, p, &k),
                SweepKind::Aperture => c_eff_for(cfg.per_side, x, p, &k),
                SweepKind::Distance => c_eff_for(cfg.per_side, p, x, &k),
            }
        })
        .collect();
    let mut columns = vec![vec![0.0; cfg.values.len()]; series.len()];
    for (&(s, i), r) in jobs.iter().zip(results) {
        columns[s][i] = r?;
    }
    Ok(SweepTable {
        x_label: x_label.into(),
        series_labels: series
            .iter()
            .map(|p| format!("c_eff_{series_name}={p}"))
            .collect(),
        x: cfg.values.clone(),
        columns,
    })
}
