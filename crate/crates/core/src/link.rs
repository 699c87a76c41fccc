//! A transmit array, a receive array and the space between them.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::greens::{line_source_g2d, scalar_g3d, Point3, Wavenumber};
use crate::infomet::{ChannelMatrix, Provenance};
use crate::scatter::{self, FactoredScene, ScatterSolution, Scatterer, Truncation};

/// Propagation model between the arrays.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    /// Scalar kernel `exp(ikd)/(4 pi d)`.
    FreeSpace3D,
    /// Line-source kernel `(i/4) H_0(k d)` in the xy plane.
    FreeSpace2D,
    /// Line sources among parallel cylinders.
    Cylinders {
        scatterers: Vec<Scatterer>,
        truncation: Truncation,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkScene {
    pub k: Wavenumber,
    pub tx: Vec<Point3>,
    pub rx: Vec<Point3>,
    pub space: Space,
}

impl LinkScene {
    /// Validates the geometry and, for cylinder scenes, factors the
    /// interaction matrix and solves for every transmit element.
    pub fn prepare(&self) -> Result<PreparedLink<'_>> {
        if self.tx.is_empty() || self.rx.is_empty() {
            return Err(Error::Config(
                "a link needs at least one transmitter and one receiver".into(),
            ));
        }
        let solution = match &self.space {
            Space::Cylinders {
                scatterers,
                truncation,
            } => {
                scatter::validate_scene(scatterers, &self.tx, "transmitter")?;
                scatter::validate_scene(scatterers, &self.rx, "receiver")?;
                let scene = FactoredScene::new(scatterers, &self.k, *truncation)?;
                Some(scene.solve_unit_sources(&self.tx)?)
            }
            _ => None,
        };
        Ok(PreparedLink {
            scene: self,
            solution,
        })
    }

    pub fn provenance(&self) -> Provenance {
        match self.space {
            Space::FreeSpace3D => Provenance::FreeSpace3D,
            Space::FreeSpace2D => Provenance::FreeSpace2D,
            Space::Cylinders { .. } => Provenance::Scattered,
        }
    }
}

/// A link ready for field evaluation. Every field is linear in the transmit
/// excitations, so it is enough to know the field of each unit source.
#[derive(Debug)]
pub struct PreparedLink<'a> {
    scene: &'a LinkScene,
    solution: Option<ScatterSolution>,
}

impl PreparedLink<'_> {
    pub fn scene(&self) -> &LinkScene {
        self.scene
    }

    pub fn solution(&self) -> Option<&ScatterSolution> {
        self.solution.as_ref()
    }

    /// Field at each probe for a unit source at each transmitter,
    /// `probes.len() x tx.len()`. Probes inside a cylinder are flagged in the
    /// mask and hold zero.
    pub fn unit_fields(&self, probes: &[Point3]) -> Result<(Mat<c64>, Vec<bool>)> {
        let s = self.scene;
        match (&s.space, &self.solution) {
            (Space::Cylinders { .. }, Some(sol)) => scatter::evaluate_fields_masked(sol, probes),
            (Space::FreeSpace3D, _) => {
                let mut m = Mat::<c64>::zeros(probes.len(), s.tx.len());
                for (i, p) in probes.iter().enumerate() {
                    for (j, t) in s.tx.iter().enumerate() {
                        m[(i, j)] = scalar_g3d(p, t, &s.k)?;
                    }
                }
                Ok((m, vec![false; probes.len()]))
            }
            (Space::FreeSpace2D, _) => {
                let mut m = Mat::<c64>::zeros(probes.len(), s.tx.len());
                for (i, p) in probes.iter().enumerate() {
                    for (j, t) in s.tx.iter().enumerate() {
                        m[(i, j)] = line_source_g2d(p, t, &s.k)?;
                    }
                }
                Ok((m, vec![false; probes.len()]))
            }
            (Space::Cylinders { .. }, None) => unreachable!("cylinder links are always solved"),
        }
    }

    /// Raw (unnormalized) channel from every transmitter to every receiver.
    pub fn channel(&self) -> Result<ChannelMatrix> {
        let (m, mask) = self.unit_fields(&self.scene.rx)?;
        if let Some(i) = mask.iter().position(|v| *v) {
            return Err(Error::Geometry(format!(
                "receiver {i} lies inside a scatterer"
            )));
        }
        ChannelMatrix::raw(m, self.scene.provenance())
    }
}
