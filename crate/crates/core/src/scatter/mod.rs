//! Multiple scattering by a cluster of parallel circular cylinders under 2-D
//! TM line-source excitation.
//!
//! Every cylinder `p` radiates outgoing harmonics `H_m(k rho_p) e^{i m theta_p}`
//! with amplitudes `T_m^(p) I_m^(p)`, where `I^(p)` are the coefficients of
//! the regular field exciting it. Translating all other cylinders' outgoing
//! waves onto cylinder `q` with Graf's addition theorem gives the linear
//! system `Z I = V`:
//!
//! * `Z` has `-1` on the diagonal and, for `p != q`, the block entries
//!   `Z[(q,n),(p,m)] = T_m^(p) H_{n-m}(k d_pq) e^{-i(n-m) phi_pq}`;
//! * `V[(q,n)] = -(i/4) sum_s e_s H_n(k d_sq) e^{-i n phi_sq}`.
//!
//! Angles follow `phi_ab = atan2(a_y - b_y, a_x - b_x)`, the polar angle of
//! `a - b`. Time dependence is `exp(-i omega t)`.

mod field;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{Point3, Wavenumber};
use crate::infomet::{ChannelMatrix, Provenance};
use crate::specfun::{self, hankel1_sequence_into, CylOrder};

pub use field::{FieldMap, GridShape};

/// Systems whose estimated 1-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Minimum gap between two cylinder surfaces, meters.
pub const MIN_CLEARANCE: f64 = 1e-9;

static FACTORIZATIONS: AtomicUsize = AtomicUsize::new(0);

/// Number of interaction-matrix factorizations performed by this process.
/// Exposed so callers can check that right-hand sides share one factorization.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Pec,
    /// Lossless dielectric with real interior wavenumber, rad/m.
    Dielectric {
        k_inside: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub center: Point3,
    pub radius: f64,
    pub material: Material,
}

impl Scatterer {
    pub fn pec(center: Point3, radius: f64) -> Self {
        Scatterer {
            center,
            radius,
            material: Material::Pec,
        }
    }

    pub fn dielectric(center: Point3, radius: f64, k_inside: f64) -> Self {
        Scatterer {
            center,
            radius,
            material: Material::Dielectric { k_inside },
        }
    }

    /// True when `p` lies strictly inside the disk.
    pub fn contains(&self, p: &Point3) -> bool {
        p.dist_xy(&self.center) < self.radius
    }
}

/// Line sources and their complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceArray {
    positions: Vec<Point3>,
    excitations: Vec<c64>,
}

impl SourceArray {
    pub fn new(positions: Vec<Point3>, excitations: Vec<c64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Geometry(
                "a source array needs at least one element".into(),
            ));
        }
        if positions.len() != excitations.len() {
            return Err(Error::Geometry(format!(
                "{} source positions but {} excitations",
                positions.len(),
                excitations.len()
            )));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Geometry(format!(
                    "source {i} has non-finite coordinates"
                )));
            }
            for (j, q) in positions[..i].iter().enumerate() {
                if p.dist_xy(q) == 0.0 {
                    return Err(Error::Geometry(format!("sources {j} and {i} coincide")));
                }
            }
        }
        if excitations
            .iter()
            .any(|e| !(e.re.is_finite() && e.im.is_finite()))
        {
            return Err(Error::Domain("source excitations must be finite".into()));
        }
        Ok(SourceArray {
            positions,
            excitations,
        })
    }

    /// Every element driven with amplitude one.
    pub fn unit(positions: Vec<Point3>) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, vec![c64::new(1.0, 0.0); n])
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn excitations(&self) -> &[c64] {
        &self.excitations
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Highest retained harmonic order; orders run over `-n_max..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    n_max: usize,
}

impl Truncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Config("truncation order must be at least 1".into()));
        }
        Ok(Truncation { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Harmonics per cylinder, `2 n_max + 1`.
    pub fn width(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn orders(&self) -> impl Iterator<Item = i32> {
        let n = self.n_max as i32;
        -n..=n
    }
}

/// `N = ceil(x + 4 x^(1/3) + 4)` with `x = max k a`, never below 6.
pub fn suggest_truncation(scatterers: &[Scatterer], k: &Wavenumber) -> Truncation {
    let x = scatterers
        .iter()
        .map(|s| k.k() * s.radius)
        .fold(0.0f64, f64::max);
    let n = (x + 4.0 * x.cbrt() + 4.0).ceil() as usize;
    Truncation { n_max: n.max(6) }
}

/// Single-cylinder T coefficient of order `n`.
///
/// PEC: `-J_n(ka) / H_n(ka)`. Dielectric with interior wavenumber `k_p`
/// (field and normal derivative continuous):
/// `[k_p J'_n(k_p a) J_n(ka) - k J'_n(ka) J_n(k_p a)]
///  / [k H'_n(ka) J_n(k_p a) - k_p J'_n(k_p a) H_n(ka)]`.
pub fn t_coeff(scatterer: &Scatterer, k: &Wavenumber, n: impl Into<CylOrder>) -> Result<c64> {
    let n = n.into();
    let ka = k.k() * scatterer.radius;
    if !(ka > 0.0 && ka.is_finite()) {
        return Err(Error::Domain(format!("k a must be positive, got {ka}")));
    }
    match scatterer.material {
        Material::Pec => Ok(-specfun::bessel_j(n, ka)? / specfun::hankel1(n, ka)?),
        Material::Dielectric { k_inside } => {
            if !(k_inside > 0.0 && k_inside.is_finite()) {
                return Err(Error::Domain(format!(
                    "interior wavenumber must be positive, got {k_inside}"
                )));
            }
            let kpa = k_inside * scatterer.radius;
            let j_out = specfun::bessel_j(n, ka)?;
            let jp_out = specfun::bessel_j_prime(n, ka)?;
            let h_out = specfun::hankel1(n, ka)?;
            let hp_out = specfun::hankel1_prime(n, ka)?;
            let j_in = specfun::bessel_j(n, kpa)?;
            let jp_in = specfun::bessel_j_prime(n, kpa)?;
            let num = k_inside * jp_in * j_out - k.k() * jp_out * j_in;
            let den = k.k() * hp_out * j_in - k_inside * jp_in * h_out;
            Ok(c64::new(num, 0.0) / den)
        }
    }
}

/// Checks radii, pairwise clearance and that none of `points` lies inside
/// or on a cylinder.
pub fn validate_scene(scatterers: &[Scatterer], points: &[Point3], what: &str) -> Result<()> {
    for (i, s) in scatterers.iter().enumerate() {
        if !(s.radius > 0.0 && s.radius.is_finite() && s.center.is_finite()) {
            return Err(Error::Geometry(format!(
                "scatterer {i} needs a positive radius and finite center"
            )));
        }
        if let Material::Dielectric { k_inside } = s.material {
            if !(k_inside > 0.0 && k_inside.is_finite()) {
                return Err(Error::Geometry(format!(
                    "scatterer {i} has a non-positive interior wavenumber"
                )));
            }
        }
        for (j, o) in scatterers[..i].iter().enumerate() {
            let gap = s.center.dist_xy(&o.center) - s.radius - o.radius;
            if gap < MIN_CLEARANCE {
                return Err(Error::Geometry(format!(
                    "scatterers {j} and {i} overlap or touch (gap {gap:e} m)"
                )));
            }
        }
    }
    for (i, p) in points.iter().enumerate() {
        for (j, s) in scatterers.iter().enumerate() {
            if p.dist_xy(&s.center) <= s.radius {
                return Err(Error::Geometry(format!(
                    "{what} {i} lies inside or on scatterer {j}"
                )));
            }
        }
    }
    Ok(())
}

fn t_vector(scatterers: &[Scatterer], k: &Wavenumber, trunc: Truncation) -> Result<Vec<c64>> {
    let mut t = Vec::with_capacity(scatterers.len() * trunc.width());
    for s in scatterers {
        for n in trunc.orders() {
            t.push(t_coeff(s, k, n)?);
        }
    }
    Ok(t)
}

/// `H_nu(kd) e^{-i nu phi}` for `nu = -m..=m`, stored at index `nu + m`.
fn translation_row(m: usize, kd: f64, phi: f64, hseq: &mut Vec<c64>, out: &mut Vec<c64>) {
    hankel1_sequence_into(m, kd, hseq);
    out.clear();
    out.resize(2 * m + 1, c64::new(0.0, 0.0));
    let step = c64::from_polar(1.0, -phi);
    let mut rot = c64::new(1.0, 0.0);
    for nu in 0..=m {
        if nu > 0 {
            rot *= step;
        }
        let h = hseq[nu];
        out[m + nu] = h * rot;
        // H_{-nu} = (-1)^nu H_nu and e^{i nu phi} = conj(rot)
        let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
        out[m - nu] = sign * h * rot.conj();
    }
}

fn build_z(scatterers: &[Scatterer], k: &Wavenumber, trunc: Truncation, t: &[c64]) -> Mat<c64> {
    let w = trunc.width();
    let nm = trunc.n_max();
    let nu = scatterers.len() * w;
    let mut z = Mat::<c64>::zeros(nu, nu);
    let mut hseq = Vec::new();
    let mut row = Vec::new();
    for (q, sq) in scatterers.iter().enumerate() {
        for (p, sp) in scatterers.iter().enumerate() {
            if p == q {
                continue;
            }
            let kd = k.k() * sp.center.dist_xy(&sq.center);
            let phi = sp.center.angle_from(&sq.center);
            translation_row(2 * nm, kd, phi, &mut hseq, &mut row);
            for mi in 0..w {
                let col = p * w + mi;
                let tm = t[col];
                for ni in 0..w {
                    // n - m + 2 nm
                    z[(q * w + ni, col)] = tm * row[ni + 2 * nm - mi];
                }
            }
        }
    }
    for i in 0..nu {
        z[(i, i)] = c64::new(-1.0, 0.0);
    }
    z
}

/// Regular-wave coefficients of a unit line source at each of `tx`, one
/// column per source: `(i/4) H_n(k d_sq) e^{-i n phi_sq}`.
fn incident_coefficients(
    scatterers: &[Scatterer],
    k: &Wavenumber,
    trunc: Truncation,
    tx: &[Point3],
) -> Mat<c64> {
    let w = trunc.width();
    let nm = trunc.n_max();
    let mut a = Mat::<c64>::zeros(scatterers.len() * w, tx.len());
    let mut hseq = Vec::new();
    let mut row = Vec::new();
    let quarter_i = c64::new(0.0, 0.25);
    for (s, src) in tx.iter().enumerate() {
        for (q, sq) in scatterers.iter().enumerate() {
            let kd = k.k() * src.dist_xy(&sq.center);
            let phi = src.angle_from(&sq.center);
            translation_row(nm, kd, phi, &mut hseq, &mut row);
            for ni in 0..w {
                a[(q * w + ni, s)] = quarter_i * row[ni];
            }
        }
    }
    a
}

/// Interaction matrix `Z` and right-hand side `V` for one excitation.
pub fn assemble_system(
    scatterers: &[Scatterer],
    sources: &SourceArray,
    k: &Wavenumber,
    trunc: Truncation,
) -> Result<(Mat<c64>, Mat<c64>)> {
    validate_scene(scatterers, sources.positions(), "source")?;
    let t = t_vector(scatterers, k, trunc)?;
    let z = build_z(scatterers, k, trunc, &t);
    let a = incident_coefficients(scatterers, k, trunc, sources.positions());
    let e = Mat::<c64>::from_fn(sources.len(), 1, |i, _| sources.excitations()[i]);
    let v = -(&a * &e);
    Ok((z, v))
}

/// Hager's estimate of `||A^{-1}||_1` from an LU factorization.
fn inverse_norm1_estimate(lu: &PartialPivLu<c64>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = Mat::<c64>::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
        let xi = Mat::<c64>::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            let m = v.norm();
            if m == 0.0 {
                c64::new(1.0, 0.0)
            } else {
                v / m
            }
        });
        let zv = lu.solve_adjoint(&xi);
        let (mut jmax, mut zmax) = (0, 0.0);
        for i in 0..n {
            let m = zv[(i, 0)].norm();
            if m > zmax {
                zmax = m;
                jmax = i;
            }
        }
        let ztx: f64 = (0..n).map(|i| (zv[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if zmax <= ztx || jmax == last_j {
            break;
        }
        last_j = jmax;
        x = Mat::<c64>::zeros(n, 1);
        x[(jmax, 0)] = c64::new(1.0, 0.0);
    }
    est
}

fn norm1(z: MatRef<'_, c64>) -> f64 {
    (0..z.ncols())
        .map(|j| (0..z.nrows()).map(|i| z[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A scene whose interaction matrix has been assembled and factored once;
/// any number of excitations can then be solved against it.
pub struct FactoredScene {
    scatterers: Arc<[Scatterer]>,
    k: Wavenumber,
    trunc: Truncation,
    t: Arc<[c64]>,
    z: Mat<c64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    lu: PartialPivLu<c64>,
    condition: f64,
}

/// Power-of-two row then column scalings that bring the largest entry of
/// every row and column of `z` to order one. Multipole orders differ in
/// magnitude by many decades, so the unscaled matrix looks far worse
/// conditioned than the problem is.
fn equilibrate(z: &Mat<c64>) -> (Vec<f64>, Vec<f64>) {
    let n = z.nrows();
    let pow2 = |m: f64| {
        if m > 0.0 && m.is_finite() {
            (-m.log2().round()).exp2()
        } else {
            1.0
        }
    };
    let rows: Vec<f64> = (0..n)
        .map(|i| pow2((0..n).map(|j| z[(i, j)].norm()).fold(0.0, f64::max)))
        .collect();
    let cols: Vec<f64> = (0..n)
        .map(|j| {
            pow2(
                (0..n)
                    .map(|i| rows[i] * z[(i, j)].norm())
                    .fold(0.0, f64::max),
            )
        })
        .collect();
    (rows, cols)
}

impl std::fmt::Debug for FactoredScene {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactoredScene")
            .field("scatterers", &self.scatterers.len())
            .field("k", &self.k)
            .field("trunc", &self.trunc)
            .field("condition", &self.condition)
            .finish()
    }
}

impl FactoredScene {
    pub fn new(scatterers: &[Scatterer], k: &Wavenumber, trunc: Truncation) -> Result<Self> {
        validate_scene(scatterers, &[], "point")?;
        let t = t_vector(scatterers, k, trunc)?;
        let z = build_z(scatterers, k, trunc, &t);
        let (row_scale, col_scale) = equilibrate(&z);
        let n = z.nrows();
        let zs = Mat::<c64>::from_fn(n, n, |i, j| z[(i, j)] * (row_scale[i] * col_scale[j]));
        let lu = zs.partial_piv_lu();
        FACTORIZATIONS.fetch_add(1, Ordering::Relaxed);
        let condition = norm1(zs.as_ref()) * inverse_norm1_estimate(&lu, n);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::Conditioning(format!(
                "interaction matrix of size {n} has estimated condition number {condition:e} (limit {MAX_CONDITION:e})"
            )));
        }
        Ok(FactoredScene {
            scatterers: scatterers.into(),
            k: *k,
            trunc,
            t: t.into(),
            z,
            row_scale,
            col_scale,
            lu,
            condition,
        })
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn wavenumber(&self) -> Wavenumber {
        self.k
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// Estimated 1-norm condition number of the equilibrated `Z`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn interaction_matrix(&self) -> MatRef<'_, c64> {
        self.z.as_ref()
    }

    pub fn unknowns(&self) -> usize {
        self.z.nrows()
    }

    /// Solves for several excitations of the element set `tx` at once; column
    /// `c` of `excitations` (shape `tx.len() x ncols`) drives solution column
    /// `c`.
    pub fn solve_columns(
        &self,
        tx: &[Point3],
        excitations: MatRef<'_, c64>,
    ) -> Result<ScatterSolution> {
        if excitations.nrows() != tx.len() {
            return Err(Error::Geometry(format!(
                "{} excitation rows for {} sources",
                excitations.nrows(),
                tx.len()
            )));
        }
        SourceArray::unit(tx.to_vec())?;
        validate_scene(&self.scatterers, tx, "source")?;
        let a = incident_coefficients(&self.scatterers, &self.k, self.trunc, tx);
        let v = -(&a * excitations);
        let coefficients = if self.unknowns() == 0 {
            Mat::<c64>::zeros(0, excitations.ncols())
        } else {
            let rhs =
                Mat::<c64>::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.row_scale[i]);
            let y = self.lu.solve(&rhs);
            Mat::<c64>::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * self.col_scale[i])
        };
        let mut residual: f64 = 0.0;
        if self.unknowns() > 0 {
            let r = &self.z * &coefficients - &v;
            for c in 0..r.ncols() {
                let rn = r.col(c).norm_l2();
                let vn = v.col(c).norm_l2();
                if vn > 0.0 {
                    residual = residual.max(rn / vn);
                }
            }
        }
        Ok(ScatterSolution {
            scatterers: self.scatterers.clone(),
            k: self.k,
            trunc: self.trunc,
            t: self.t.clone(),
            coefficients,
            tx: tx.to_vec(),
            excitations: excitations.to_owned(),
            residual,
        })
    }

    pub fn solve(&self, sources: &SourceArray) -> Result<ScatterSolution> {
        let e = Mat::<c64>::from_fn(sources.len(), 1, |i, _| sources.excitations()[i]);
        self.solve_columns(sources.positions(), e.as_ref())
    }

    /// One unit-amplitude solution column per element of `tx`.
    pub fn solve_unit_sources(&self, tx: &[Point3]) -> Result<ScatterSolution> {
        let e = Mat::<c64>::identity(tx.len(), tx.len());
        self.solve_columns(tx, e.as_ref())
    }
}

/// Exciting-field coefficients `I` (one column per excitation) together with
/// everything needed to evaluate fields.
#[derive(Debug, Clone)]
pub struct ScatterSolution {
    scatterers: Arc<[Scatterer]>,
    k: Wavenumber,
    trunc: Truncation,
    t: Arc<[c64]>,
    coefficients: Mat<c64>,
    tx: Vec<Point3>,
    excitations: Mat<c64>,
    residual: f64,
}

impl ScatterSolution {
    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn wavenumber(&self) -> Wavenumber {
        self.k
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn sources(&self) -> &[Point3] {
        &self.tx
    }

    pub fn excitations(&self) -> MatRef<'_, c64> {
        self.excitations.as_ref()
    }

    pub fn columns(&self) -> usize {
        self.excitations.ncols()
    }

    /// Unknown count, `(2 n_max + 1)` per cylinder.
    pub fn dimension(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Largest `||Z I - V|| / ||V||` over the solved columns.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn index(&self, p: usize, n: i32) -> usize {
        p * self.trunc.width() + (n + self.trunc.n_max() as i32) as usize
    }

    /// `I_n^(p)` for the first excitation column.
    pub fn coefficient(&self, p: usize, n: i32) -> c64 {
        self.coefficients[(self.index(p, n), 0)]
    }

    pub fn coefficient_in(&self, column: usize, p: usize, n: i32) -> c64 {
        self.coefficients[(self.index(p, n), column)]
    }

    pub fn t(&self, p: usize, n: i32) -> c64 {
        self.t[self.index(p, n)]
    }

    pub fn coefficients(&self) -> MatRef<'_, c64> {
        self.coefficients.as_ref()
    }

    /// Outgoing-wave amplitudes `T_n^(p) I_n^(p)`, one column per excitation.
    pub fn scattered_amplitudes(&self) -> Mat<c64> {
        Mat::<c64>::from_fn(
            self.coefficients.nrows(),
            self.coefficients.ncols(),
            |i, j| self.t[i] * self.coefficients[(i, j)],
        )
    }
}

/// Solves a scene for one excitation.
pub fn solve_scene(
    scatterers: &[Scatterer],
    sources: &SourceArray,
    k: &Wavenumber,
    trunc: Truncation,
) -> Result<ScatterSolution> {
    validate_scene(scatterers, sources.positions(), "source")?;
    FactoredScene::new(scatterers, k, trunc)?.solve(sources)
}

/// Total field of the first excitation column at `probes`. Probes inside a
/// cylinder are rejected.
pub fn total_field(solution: &ScatterSolution, probes: &[Point3]) -> Result<FieldMap> {
    for (i, p) in probes.iter().enumerate() {
        for (j, s) in solution.scatterers().iter().enumerate() {
            if s.contains(p) {
                return Err(Error::Geometry(format!(
                    "probe {i} lies inside scatterer {j}"
                )));
            }
        }
    }
    let fields = field::evaluate(solution, probes)?;
    Ok(FieldMap::new(
        probes.to_vec(),
        fields.col(0).iter().copied().collect(),
        vec![false; probes.len()],
        None,
    ))
}

/// Complex-space channel: entry `(i, j)` is the total field at `rx[i]` for a
/// unit source at `tx[j]`. One factorization serves every column.
pub fn channel_matrix_eit(
    scatterers: &[Scatterer],
    tx: &[Point3],
    rx: &[Point3],
    k: &Wavenumber,
    trunc: Truncation,
) -> Result<ChannelMatrix> {
    validate_scene(scatterers, tx, "transmitter")?;
    validate_scene(scatterers, rx, "receiver")?;
    let scene = FactoredScene::new(scatterers, k, trunc)?;
    let sol = scene.solve_unit_sources(tx)?;
    let entries = field::evaluate(&sol, rx)?;
    ChannelMatrix::raw(entries, Provenance::Scattered)
}

pub use field::{evaluate as evaluate_fields, evaluate_masked as evaluate_fields_masked};
