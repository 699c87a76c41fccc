//! Declarative scene files (TOML). Units are in the key names.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{Point3, Wavenumber};
use crate::infomet::{SweepConfig, SweepKind};
use crate::link::{LinkScene, Space};
use crate::scatter::{self, GridShape, Material, Scatterer, Truncation};
use crate::txsim::{Budget, Combiner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    FreeSpace3d,
    FreeSpace2d,
    #[default]
    Cylinders,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    X,
    Y,
}

/// A set of points: transmitters, receivers or probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArraySpec {
    /// Explicit `[x, y]` or `[x, y, z]` coordinates.
    Points { positions_m: Vec<Vec<f64>> },
    /// `count` points at `pitch_m` along `axis`, centered on `center_m`.
    Line {
        center_m: [f64; 2],
        pitch_m: f64,
        count: usize,
        #[serde(default)]
        axis: Axis,
    },
    /// Square `per_side x per_side` cell-center layout in the plane `z`.
    Plane {
        center_m: [f64; 3],
        aperture_m: f64,
        per_side: usize,
    },
    /// Rectangular `nx x ny` sampling in the xy plane starting at `origin_m`.
    Grid {
        origin_m: [f64; 2],
        step_m: f64,
        nx: usize,
        ny: usize,
    },
}

impl ArraySpec {
    pub fn expand(&self, what: &str) -> Result<Vec<Point3>> {
        let bad = |m: String| Err(Error::Config(format!("{what}: {m}")));
        let pts = match self {
            ArraySpec::Points { positions_m } => {
                let mut v = Vec::with_capacity(positions_m.len());
                for (i, p) in positions_m.iter().enumerate() {
                    match p.as_slice() {
                        [x, y] => v.push(Point3::xy(*x, *y)),
                        [x, y, z] => v.push(Point3::new(*x, *y, *z)),
                        _ => {
                            return bad(format!(
                                "position {i} needs 2 or 3 coordinates, got {}",
                                p.len()
                            ))
                        }
                    }
                }
                v
            }
            ArraySpec::Line {
                center_m,
                pitch_m,
                count,
                axis,
            } => {
                if *count == 0 || !(*pitch_m > 0.0) {
                    return bad("line needs count >= 1 and pitch_m > 0".into());
                }
                (0..*count)
                    .map(|i| {
                        let off = (i as f64 - 0.5 * (*count as f64 - 1.0)) * pitch_m;
                        match axis {
                            Axis::X => Point3::xy(center_m[0] + off, center_m[1]),
                            Axis::Y => Point3::xy(center_m[0], center_m[1] + off),
                        }
                    })
                    .collect()
            }
            ArraySpec::Plane {
                center_m,
                aperture_m,
                per_side,
            } => {
                if *per_side == 0 || !(*aperture_m > 0.0) {
                    return bad("plane needs per_side >= 1 and aperture_m > 0".into());
                }
                crate::infomet::square_array(*per_side, *aperture_m, center_m[2])
                    .into_iter()
                    .map(|p| Point3::new(p.x + center_m[0], p.y + center_m[1], p.z))
                    .collect()
            }
            ArraySpec::Grid {
                origin_m,
                step_m,
                nx,
                ny,
            } => {
                if *nx == 0 || *ny == 0 || !(*step_m > 0.0) {
                    return bad("grid needs nx, ny >= 1 and step_m > 0".into());
                }
                let mut v = Vec::with_capacity(nx * ny);
                for iy in 0..*ny {
                    for ix in 0..*nx {
                        v.push(Point3::xy(
                            origin_m[0] + ix as f64 * step_m,
                            origin_m[1] + iy as f64 * step_m,
                        ));
                    }
                }
                v
            }
        };
        if let Some(i) = pts.iter().position(|p| !p.is_finite()) {
            return bad(format!("position {i} is not finite"));
        }
        Ok(pts)
    }

    pub fn shape(&self) -> Option<GridShape> {
        match self {
            ArraySpec::Grid { nx, ny, .. } => Some(GridShape { nx: *nx, ny: *ny }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    #[default]
    Pec,
    /// Lossless dielectric of relative permittivity `eps_r`.
    Dielectric { eps_r: f64 },
}

impl MaterialSpec {
    fn material(&self, k: &Wavenumber) -> Result<Material> {
        match self {
            MaterialSpec::Pec => Ok(Material::Pec),
            MaterialSpec::Dielectric { eps_r } => {
                if !(*eps_r > 0.0 && eps_r.is_finite()) {
                    return Err(Error::Config(format!(
                        "eps_r must be positive, got {eps_r}"
                    )));
                }
                Ok(Material::Dielectric {
                    k_inside: k.k() * eps_r.sqrt(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub center_m: [f64; 2],
    pub radius_m: f64,
    #[serde(default)]
    pub material: MaterialSpec,
}

/// `nx x ny` identical cylinders (nx along x) at a common pitch, optionally
/// thinned by removing `remove_count` of them chosen with `remove_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderGridSpec {
    pub nx: usize,
    pub ny: usize,
    pub pitch_m: f64,
    #[serde(default)]
    pub center_m: [f64; 2],
    pub radius_m: f64,
    #[serde(default)]
    pub material: MaterialSpec,
    #[serde(default)]
    pub remove_count: usize,
    #[serde(default)]
    pub remove_seed: u64,
}

impl CylinderGridSpec {
    pub fn centers(&self) -> Result<Vec<[f64; 2]>> {
        let total = self.nx * self.ny;
        if total == 0 || !(self.pitch_m > 0.0) {
            return Err(Error::Config(
                "cylinder grid needs nx, ny >= 1 and pitch_m > 0".into(),
            ));
        }
        if self.remove_count > total {
            return Err(Error::Config(format!(
                "cannot remove {} of {total} grid cylinders",
                self.remove_count
            )));
        }
        let mut keep = vec![true; total];
        let mut rng = ChaCha8Rng::seed_from_u64(self.remove_seed);
        for i in rand::seq::index::sample(&mut rng, total, self.remove_count) {
            keep[i] = false;
        }
        let mut out = Vec::with_capacity(total - self.remove_count);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if keep[iy * self.nx + ix] {
                    out.push([
                        self.center_m[0]
                            + (ix as f64 - 0.5 * (self.nx as f64 - 1.0)) * self.pitch_m,
                        self.center_m[1]
                            + (iy as f64 - 0.5 * (self.ny as f64 - 1.0)) * self.pitch_m,
                    ]);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitSpec {
    pub p0: f64,
    pub noise_std: f64,
    /// Modes shared by the optimized scheme; all positive modes if absent.
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default = "default_budget")]
    pub budget: Budget,
    #[serde(default)]
    pub combiner: Combiner,
}

fn default_budget() -> Budget {
    Budget::Sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub frequency_hz: f64,
    #[serde(default)]
    pub space: SpaceKind,
    #[serde(default)]
    pub seed: u64,
    /// Highest cylindrical order; chosen from the largest `ka` if absent.
    #[serde(default)]
    pub nmax: Option<usize>,
    #[serde(default)]
    pub tx: Option<ArraySpec>,
    #[serde(default)]
    pub rx: Option<ArraySpec>,
    #[serde(default)]
    pub probes: Option<ArraySpec>,
    /// Dense sampling of the receive aperture for crosstalk and energy.
    #[serde(default)]
    pub aperture: Option<ArraySpec>,
    #[serde(default)]
    pub cylinders: Vec<CylinderSpec>,
    #[serde(default)]
    pub cylinder_grid: Option<CylinderGridSpec>,
    #[serde(default)]
    pub transmit: Option<TransmitSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

/// A scenario with every spec expanded and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub k: Wavenumber,
    pub space: SpaceKind,
    pub scatterers: Vec<Scatterer>,
    pub truncation: Truncation,
    pub tx: Vec<Point3>,
    pub rx: Vec<Point3>,
    pub probes: Vec<Point3>,
    pub probe_shape: Option<GridShape>,
    pub aperture: Vec<Point3>,
}

impl Scene {
    pub fn link(&self) -> Result<LinkScene> {
        if self.rx.is_empty() {
            return Err(Error::Config("scenario has no [rx] array".into()));
        }
        Ok(LinkScene {
            k: self.k,
            tx: self.tx.clone(),
            rx: self.rx.clone(),
            space: match self.space {
                SpaceKind::FreeSpace3d => Space::FreeSpace3D,
                SpaceKind::FreeSpace2d => Space::FreeSpace2D,
                SpaceKind::Cylinders => Space::Cylinders {
                    scatterers: self.scatterers.clone(),
                    truncation: self.truncation,
                },
            },
        })
    }
}

impl Scenario {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    pub fn wavenumber(&self) -> Result<Wavenumber> {
        Wavenumber::from_frequency(self.frequency_hz)
            .map_err(|e| Error::Config(format!("frequency_hz: {e}")))
    }

    pub fn scatterers(&self) -> Result<Vec<Scatterer>> {
        let k = self.wavenumber()?;
        let mut out = Vec::new();
        for c in &self.cylinders {
            out.push(Scatterer {
                center: Point3::xy(c.center_m[0], c.center_m[1]),
                radius: c.radius_m,
                material: c.material.material(&k)?,
            });
        }
        if let Some(g) = &self.cylinder_grid {
            let m = g.material.material(&k)?;
            for c in g.centers()? {
                out.push(Scatterer {
                    center: Point3::xy(c[0], c[1]),
                    radius: g.radius_m,
                    material: m,
                });
            }
        }
        if self.space != SpaceKind::Cylinders && !out.is_empty() {
            return Err(Error::Config(
                "free-space scenarios cannot list cylinders".into(),
            ));
        }
        Ok(out)
    }

    /// Expands and validates the geometry. `nmax` overrides the file.
    pub fn build(&self, nmax: Option<usize>) -> Result<Scene> {
        let k = self.wavenumber()?;
        let scatterers = self.scatterers()?;
        let truncation = match nmax.or(self.nmax) {
            Some(n) => Truncation::new(n).map_err(|e| Error::Config(format!("nmax: {e}")))?,
            None => scatter::suggest_truncation(&scatterers, &k),
        };
        let expand = |s: &Option<ArraySpec>, what: &str| match s {
            Some(a) => a.expand(what),
            None => Ok(Vec::new()),
        };
        let tx = expand(&self.tx, "tx")?;
        let rx = expand(&self.rx, "rx")?;
        let probes = expand(&self.probes, "probes")?;
        let aperture = expand(&self.aperture, "aperture")?;
        if self.space != SpaceKind::FreeSpace3d {
            for (what, pts) in [
                ("tx", &tx),
                ("rx", &rx),
                ("probes", &probes),
                ("aperture", &aperture),
            ] {
                if let Some(i) = pts.iter().position(|p| p.z != 0.0) {
                    return Err(Error::Config(format!(
                        "{what} point {i} is off the z = 0 plane of a 2-D scene"
                    )));
                }
            }
        }
        let cfg = |e: Error| match e {
            Error::Geometry(m) => Error::Config(m),
            e => e,
        };
        scatter::validate_scene(&scatterers, &tx, "tx").map_err(cfg)?;
        scatter::validate_scene(&scatterers, &rx, "rx").map_err(cfg)?;
        scatter::validate_scene(&scatterers, &aperture, "aperture").map_err(cfg)?;
        let probe_shape = self.probes.as_ref().and_then(|p| p.shape());
        if probe_shape.is_none() {
            // a probe grid may cross cylinders (those samples are masked);
            // hand-placed probes may not
            scatter::validate_scene(&scatterers, &probes, "probe").map_err(cfg)?;
        }
        Ok(Scene {
            k,
            space: self.space,
            scatterers,
            truncation,
            tx,
            rx,
            probes,
            probe_shape,
            aperture,
        })
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no [sweep] table".into()))?;
        Ok(SweepConfig {
            kind: s.kind,
            frequency_hz: self.frequency_hz,
            per_side: s.per_side,
            aperture_m: s.aperture_m,
            distance_m: s.distance_m,
            values: s.values.clone(),
            series: s.series.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = r#"
name = "demo"
frequency_hz = 915e6
seed = 4

[tx]
kind = "line"
center_m = [0.0, -0.6]
pitch_m = 0.375
count = 3

[probes]
kind = "grid"
origin_m = [-0.495, -0.745]
step_m = 0.01
nx = 100
ny = 150

[cylinder_grid]
nx = 10
ny = 15
pitch_m = 0.06
radius_m = 0.015
remove_count = 60
remove_seed = 7
"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::parse(FIG, Path::new("demo.toml")).unwrap();
        let again = Scenario::parse(&s.to_toml().unwrap(), Path::new("x")).unwrap();
        assert_eq!(s, again);
        let scene = s.build(None).unwrap();
        assert_eq!(scene.scatterers.len(), 90);
        assert_eq!(scene.tx.len(), 3);
        assert!((scene.tx[0].x + 0.375).abs() < 1e-15);
        assert_eq!(scene.probes.len(), 15000);
        assert_eq!(scene.probe_shape, Some(GridShape { nx: 100, ny: 150 }));
        assert_eq!(s.build(Some(9)).unwrap().truncation.n_max(), 9);
        // removal is a pure function of the seed
        assert_eq!(s.build(None).unwrap().scatterers, scene.scatterers);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e =
            Scenario::parse("frequency_hz = 1e9\nbogus = 3\n", Path::new("f.toml")).unwrap_err();
        let m = e.to_string();
        assert!(m.contains("bogus") && m.contains("line 2"), "{m}");
        assert_eq!(e.exit_code(), 2);
        let e = Scenario::parse("frequency_hz = \"fast\"\n", Path::new("f.toml")).unwrap_err();
        assert!(e.to_string().contains("frequency_hz"), "{e}");
    }

    #[test]
    fn geometry_errors_are_config_errors() {
        let text = r#"
frequency_hz = 1e9
[tx]
kind = "points"
positions_m = [[0.0, 0.0]]
[[cylinders]]
center_m = [0.0, 0.01]
radius_m = 0.05
"#;
        let e = Scenario::parse(text, Path::new("t"))
            .unwrap()
            .build(None)
            .unwrap_err();
        assert!(matches!(e, Error::Config(_)), "{e}");
        let probes = r#"
frequency_hz = 1e9
[probes]
kind = "points"
positions_m = [[1.0, 1.0], [0.0, 0.0]]
[[cylinders]]
center_m = [0.0, 0.0]
radius_m = 0.05
"#;
        let e = Scenario::parse(probes, Path::new("t"))
            .unwrap()
            .build(None)
            .unwrap_err();
        assert!(e.to_string().contains("probe 1"), "{e}");
        assert!(Scenario::parse("frequency_hz = -1.0\n", Path::new("t"))
            .unwrap()
            .build(None)
            .is_err());
    }
}
