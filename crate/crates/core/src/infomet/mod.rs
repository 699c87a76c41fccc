//! Information metrics of a channel matrix: normalization, singular-value
//! mode decomposition, effective capacity, Shannon capacity, crosstalk and
//! per-mode field maps.

mod sweep;

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::greens::{line_source_g2d, scalar_g3d, Point3, Wavenumber};
use crate::link::PreparedLink;
use crate::scatter::{FieldMap, GridShape};

pub use sweep::{square_array, sweep, SweepConfig, SweepKind, SweepTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    Raw,
    /// Entries have been multiplied by `alpha` relative to the raw channel.
    Normalized {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    FreeSpace3D,
    FreeSpace2D,
    Scattered,
}

/// Complex `N_R x N_T` channel: entry `(i, j)` couples transmitter `j` to
/// receiver `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: Mat<c64>,
    normalization: Normalization,
    provenance: Provenance,
}

impl ChannelMatrix {
    pub fn raw(entries: Mat<c64>, provenance: Provenance) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DegenerateChannel(
                "channel matrix has no entries".into(),
            ));
        }
        Ok(ChannelMatrix {
            entries,
            normalization: Normalization::Raw,
            provenance,
        })
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_r(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn frobenius_sq(&self) -> f64 {
        let f = self.entries.norm_l2();
        f * f
    }
}

/// Free-space channel with the 3-D scalar kernel.
pub fn free_space_channel_3d(
    tx: &[Point3],
    rx: &[Point3],
    k: &Wavenumber,
) -> Result<ChannelMatrix> {
    let mut m = Mat::<c64>::zeros(rx.len(), tx.len());
    for (i, r) in rx.iter().enumerate() {
        for (j, t) in tx.iter().enumerate() {
            m[(i, j)] = scalar_g3d(r, t, k)?;
        }
    }
    ChannelMatrix::raw(m, Provenance::FreeSpace3D)
}

/// Free-space channel with the 2-D line-source kernel.
pub fn free_space_channel_2d(
    tx: &[Point3],
    rx: &[Point3],
    k: &Wavenumber,
) -> Result<ChannelMatrix> {
    let mut m = Mat::<c64>::zeros(rx.len(), tx.len());
    for (i, r) in rx.iter().enumerate() {
        for (j, t) in tx.iter().enumerate() {
            m[(i, j)] = line_source_g2d(r, t, k)?;
        }
    }
    ChannelMatrix::raw(m, Provenance::FreeSpace2D)
}

/// Factor that brings `||H||_F^2` to `N_T N_R`.
pub fn normalization_factor(h: &ChannelMatrix) -> Result<f64> {
    let f = h.entries.norm_l2();
    if !f.is_finite() {
        return Err(Error::Domain("channel has non-finite entries".into()));
    }
    if f == 0.0 {
        return Err(Error::DegenerateChannel(
            "channel matrix is identically zero".into(),
        ));
    }
    Ok(((h.n_t() * h.n_r()) as f64).sqrt() / f)
}

/// Unit average sub-channel gain. The recorded `alpha` accumulates across
/// repeated normalization, so it always relates back to the raw channel.
pub fn normalize(h: &ChannelMatrix) -> Result<ChannelMatrix> {
    let a = normalization_factor(h)?;
    let prior = match h.normalization {
        Normalization::Raw => 1.0,
        Normalization::Normalized { alpha } => alpha,
    };
    Ok(ChannelMatrix {
        entries: Mat::<c64>::from_fn(h.n_r(), h.n_t(), |i, j| h.entries[(i, j)] * a),
        normalization: Normalization::Normalized { alpha: prior * a },
        provenance: h.provenance,
    })
}

/// Full SVD `H = U diag(S) V^H` with `sigma_norm = S / sum(S)`.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    pub u: Mat<c64>,
    pub s: Vec<f64>,
    pub v: Mat<c64>,
    pub sigma_norm: Vec<f64>,
}

impl ModeDecomposition {
    /// Number of singular values, `min(N_R, N_T)`.
    pub fn rank_bound(&self) -> usize {
        self.s.len()
    }

    pub fn n_t(&self) -> usize {
        self.v.nrows()
    }

    pub fn n_r(&self) -> usize {
        self.u.nrows()
    }

    /// `U diag(S) V^H`.
    pub fn reconstruct(&self) -> Mat<c64> {
        let r = self.s.len();
        let us = Mat::<c64>::from_fn(self.n_r(), r, |i, j| self.u[(i, j)] * self.s[j]);
        &us * self.v.get(.., ..r).adjoint()
    }
}

/// Rotates column `j` of `m` (and of `partner`, if given) so the
/// largest-magnitude entry of `m`'s column is real and positive.
fn fix_phase(m: &mut Mat<c64>, partner: Option<&mut Mat<c64>>, j: usize) {
    let mut best = 0;
    let mut mag = -1.0;
    for i in 0..m.nrows() {
        let a = m[(i, j)].norm();
        // 1e-12 slack keeps near-ties deterministic across platforms
        if a > mag * (1.0 + 1e-12) {
            mag = a;
            best = i;
        }
    }
    if mag <= 0.0 {
        return;
    }
    let rot = m[(best, j)].conj() / mag;
    for i in 0..m.nrows() {
        m[(i, j)] *= rot;
    }
    if let Some(p) = partner {
        for i in 0..p.nrows() {
            p[(i, j)] *= rot;
        }
    }
}

pub fn decompose(h: &ChannelMatrix) -> Result<ModeDecomposition> {
    decompose_matrix(h.entries())
}

pub fn decompose_matrix(h: MatRef<'_, c64>) -> Result<ModeDecomposition> {
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            let v = h[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Domain(format!(
                    "channel entry ({i}, {j}) is not finite"
                )));
            }
        }
    }
    let svd = h
        .svd()
        .map_err(|e| Error::Conditioning(format!("SVD did not converge: {e:?}")))?;
    let r = h.nrows().min(h.ncols());
    let sd = svd.S().column_vector();
    let mut s: Vec<f64> = (0..r).map(|i| sd[i].re).collect();
    let mut u = svd.U().to_owned();
    let mut v = svd.V().to_owned();

    // Enforce descending order in case the backend does not.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        let (u0, v0, s0) = (u.clone(), v.clone(), s.clone());
        for (dst, &src) in order.iter().enumerate() {
            s[dst] = s0[src];
            for i in 0..u.nrows() {
                u[(i, dst)] = u0[(i, src)];
            }
            for i in 0..v.nrows() {
                v[(i, dst)] = v0[(i, src)];
            }
        }
    }

    for j in 0..r {
        fix_phase(&mut v, Some(&mut u), j);
    }
    for j in r..v.ncols() {
        fix_phase(&mut v, None, j);
    }
    for j in r..u.ncols() {
        fix_phase(&mut u, None, j);
    }

    let total: f64 = s.iter().sum();
    let sigma_norm = if total > 0.0 {
        s.iter().map(|x| x / total).collect()
    } else {
        vec![0.0; r]
    };
    Ok(ModeDecomposition {
        u,
        s,
        v,
        sigma_norm,
    })
}

/// `exp(-sum s' ln s')` over the normalized singular values, `0 ln 0 = 0`.
/// The logarithm base cancels, so the result is base independent.
pub fn effective_capacity(md: &ModeDecomposition) -> Result<f64> {
    effective_capacity_of(&md.s)
}

pub fn effective_capacity_of(sigma: &[f64]) -> Result<f64> {
    let total: f64 = sigma.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateChannel(
            "all singular values are zero".into(),
        ));
    }
    let h: f64 = sigma
        .iter()
        .map(|s| s / total)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(h.exp())
}

/// Modes whose 1-based index does not exceed `round(C_eff)`.
pub fn available_mode_count(md: &ModeDecomposition) -> Result<usize> {
    Ok((effective_capacity(md)?.round() as usize).min(md.rank_bound()))
}

/// `sum log2(1 + snr sigma^2 / N_T)`, bits/s/Hz.
pub fn shannon_capacity(md: &ModeDecomposition, snr: f64, n_t: usize) -> Result<f64> {
    check_snr(snr, n_t)?;
    Ok(md
        .s
        .iter()
        .map(|s| (snr * s * s / n_t as f64).ln_1p() / std::f64::consts::LN_2)
        .sum())
}

/// `log2 det(I + (snr / N_T) H H^H)`, evaluated through an LU factorization.
pub fn shannon_capacity_logdet(h: MatRef<'_, c64>, snr: f64) -> Result<f64> {
    let n_t = h.ncols();
    check_snr(snr, n_t)?;
    let nr = h.nrows();
    let hh = h * h.adjoint();
    let scale = snr / n_t as f64;
    let m = Mat::<c64>::from_fn(nr, nr, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c64::new(id, 0.0) + hh[(i, j)] * scale
    });
    let lu = m.partial_piv_lu();
    let mut log_det = 0.0;
    let factor = lu.U();
    for i in 0..nr {
        log_det += factor[(i, i)].norm().ln();
    }
    Ok(log_det / std::f64::consts::LN_2)
}

fn check_snr(snr: f64, n_t: usize) -> Result<()> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::Domain(format!(
            "SNR must be finite and non-negative, got {snr}"
        )));
    }
    if n_t == 0 {
        return Err(Error::Domain("N_T must be positive".into()));
    }
    Ok(())
}

/// `CT_mn = |<E_m, E_n>| / (||E_m|| ||E_n||)` for mode fields given as the
/// columns of `fields`.
pub fn crosstalk_of_fields(fields: MatRef<'_, c64>) -> Result<Mat<f64>> {
    let m = fields.ncols();
    let norms: Vec<f64> = (0..m).map(|j| fields.col(j).norm_l2()).collect();
    if let Some(index) = norms.iter().position(|n| *n == 0.0) {
        return Err(Error::DegenerateMode { index });
    }
    let gram = fields.adjoint() * fields;
    Ok(Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            (gram[(i, j)].norm() / (norms[i] * norms[j])).min(1.0)
        }
    }))
}

/// Crosstalk between the first `min(N_R, N_T)` transmit modes, observed on
/// the probe line `dense_rx_line`. Mode `m` drives the transmitters with
/// column `m` of `V`.
pub fn crosstalk_matrix(
    md: &ModeDecomposition,
    link: &PreparedLink<'_>,
    dense_rx_line: &[Point3],
) -> Result<Mat<f64>> {
    let fields = mode_fields(md, link, dense_rx_line, md.rank_bound())?.0;
    crosstalk_of_fields(fields.as_ref())
}

/// Field at `probes` for each of the first `count` modes, with the mask of
/// probes that fell inside a scatterer.
pub fn mode_fields(
    md: &ModeDecomposition,
    link: &PreparedLink<'_>,
    probes: &[Point3],
    count: usize,
) -> Result<(Mat<c64>, Vec<bool>)> {
    if md.n_t() != link.scene().tx.len() {
        return Err(Error::Config(format!(
            "decomposition has {} transmit entries but the link has {} transmitters",
            md.n_t(),
            link.scene().tx.len()
        )));
    }
    let count = count.min(md.v.ncols());
    let (unit, mask) = link.unit_fields(probes)?;
    Ok((&unit * md.v.get(.., ..count), mask))
}

/// One field map per transmit mode, each scaled to unit peak magnitude.
pub fn mode_field_maps(
    md: &ModeDecomposition,
    link: &PreparedLink<'_>,
    probes: &[Point3],
    shape: Option<GridShape>,
) -> Result<Vec<FieldMap>> {
    let (fields, mask) = mode_fields(md, link, probes, md.v.ncols())?;
    Ok((0..fields.ncols())
        .map(|m| {
            FieldMap::new(
                probes.to_vec(),
                fields.col(m).iter().copied().collect(),
                mask.clone(),
                shape,
            )
            .normalized()
        })
        .collect())
}

/// Energy `sum |E_m|^2` that each unit-power transmit mode delivers to the
/// sample points `aperture`.
pub fn mode_aperture_energy(
    md: &ModeDecomposition,
    link: &PreparedLink<'_>,
    aperture: &[Point3],
) -> Result<Vec<f64>> {
    let (fields, _) = mode_fields(md, link, aperture, md.v.ncols())?;
    Ok((0..fields.ncols())
        .map(|m| {
            let n = fields.col(m).norm_l2();
            n * n
        })
        .collect())
}
