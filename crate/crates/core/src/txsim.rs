//! Mode-weighted BPSK transmission over a decomposed channel.
//!
//! A symbol `s` in {+1, -1} leaves the transmit array as
//! `x = s sqrt(P0) sum_m lambda_m V_m / ||lambda||`, so every symbol carries
//! exactly `P0` and mode `m` is excited in proportion to `lambda_m`. The
//! receiver rotates into the mode basis, `y~ = U^H y`, and decides on the
//! sign of `Re sum_m w_m y~_m`.

use faer::{c64, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::infomet::ModeDecomposition;

/// Bits simulated per independent RNG stream.
pub const BATCH_BITS: usize = 4096;

/// Which power budget the proportional weights are scaled to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// `sum lambda = P0`.
    Sum,
    /// `sum lambda^2 = P0^2`.
    SumOfSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Zero-based mode indices, one per weight.
    pub modes: Vec<usize>,
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub p0: f64,
    pub budget: Budget,
}

fn check_p0(p0: f64) -> Result<()> {
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(Error::Domain(format!(
            "power budget must be positive, got {p0}"
        )));
    }
    Ok(())
}

/// `lambda_m = P0 sigma_m / sum sigma` over the first `mode_count` modes.
pub fn allocate_power(
    md: &ModeDecomposition,
    p0: f64,
    mode_count: usize,
) -> Result<AllocationResult> {
    allocate_power_with(md, p0, mode_count, Budget::Sum)
}

/// Proportional weights `lambda_m ∝ sigma_m` scaled to the chosen budget.
pub fn allocate_power_with(
    md: &ModeDecomposition,
    p0: f64,
    mode_count: usize,
    budget: Budget,
) -> Result<AllocationResult> {
    check_p0(p0)?;
    let positive = md.s.iter().take_while(|s| **s > 0.0).count();
    if mode_count == 0 || mode_count > positive {
        return Err(Error::Domain(format!(
            "mode count {mode_count} must lie in 1..={positive} (modes with positive gain)"
        )));
    }
    let sigma = &md.s[..mode_count];
    let norm = match budget {
        Budget::Sum => sigma.iter().sum::<f64>(),
        Budget::SumOfSquares => sigma.iter().map(|s| s * s).sum::<f64>().sqrt(),
    };
    let lambda: Vec<f64> = sigma.iter().map(|s| p0 * s / norm).collect();
    let mut a = AllocationResult {
        modes: (0..mode_count).collect(),
        lambda,
        objective: 0.0,
        p0,
        budget,
    };
    a.objective = evaluate_objective(md, &a);
    Ok(a)
}

/// All of `P0` on mode `mode` (zero-based).
pub fn single_mode(md: &ModeDecomposition, p0: f64, mode: usize) -> Result<AllocationResult> {
    check_p0(p0)?;
    if mode >= md.rank_bound() {
        return Err(Error::Domain(format!(
            "mode {} does not exist; the channel has {}",
            mode + 1,
            md.rank_bound()
        )));
    }
    let mut a = AllocationResult {
        modes: vec![mode],
        lambda: vec![p0],
        objective: 0.0,
        p0,
        budget: Budget::Sum,
    };
    a.objective = evaluate_objective(md, &a);
    Ok(a)
}

/// `f = sum sigma_m lambda_m`.
pub fn evaluate_objective(md: &ModeDecomposition, allocation: &AllocationResult) -> f64 {
    allocation
        .modes
        .iter()
        .zip(&allocation.lambda)
        .map(|(m, l)| md.s.get(*m).copied().unwrap_or(0.0) * l)
        .sum()
}

/// Unit-symbol transmit vector `sqrt(P0) sum lambda_m V_m / ||lambda||`.
pub fn beam(v: MatRef<'_, c64>, allocation: &AllocationResult) -> Result<Vec<c64>> {
    if let Some(m) = allocation.modes.iter().find(|m| **m >= v.ncols()) {
        return Err(Error::Framing(format!(
            "allocation uses mode {} but only {} transmit modes exist",
            m + 1,
            v.ncols()
        )));
    }
    if allocation.modes.len() != allocation.lambda.len() {
        return Err(Error::Framing(
            "allocation has mismatched mode and weight lists".into(),
        ));
    }
    let norm = allocation.lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Domain("allocation has no weight".into()));
    }
    let scale = allocation.p0.sqrt() / norm;
    let mut x = vec![c64::new(0.0, 0.0); v.nrows()];
    for (m, l) in allocation.modes.iter().zip(&allocation.lambda) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += v[(i, *m)] * (l * scale);
        }
    }
    Ok(x)
}

/// Transmit vector for each bit; bit 0 sends `+beam`, bit 1 sends `-beam`.
pub fn precode(
    bits: &[bool],
    v: MatRef<'_, c64>,
    allocation: &AllocationResult,
) -> Result<Vec<Vec<c64>>> {
    if bits.is_empty() {
        return Ok(Vec::new());
    }
    let b = beam(v, allocation)?;
    Ok(bits
        .iter()
        .map(|bit| {
            let s = if *bit { -1.0 } else { 1.0 };
            b.iter().map(|x| x * s).collect()
        })
        .collect())
}

/// Weighting of the mode-domain samples before the sign decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// Unit weight on every mode: the decision statistic is the received
    /// objective `sum_m sigma_m <V_m|alpha>` plus noise.
    #[default]
    ModeSum,
    /// Weight `sigma_m lambda_m` on the allocated modes only.
    MaximalRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Standard deviation per real dimension at each receive element.
    pub noise_std: f64,
    pub seed: u64,
    #[serde(default)]
    pub combiner: Combiner,
}

impl LinkConfig {
    fn check(&self) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Domain(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Everything the per-symbol loop needs, fixed once per run.
struct Link {
    /// Noiseless received vector for `s = +1`.
    rx_plus: Vec<c64>,
    /// Row `c` such that the statistic is `Re(c . y)`.
    combine: Vec<c64>,
    noise_std: f64,
}

impl Link {
    fn new(
        h: MatRef<'_, c64>,
        md: &ModeDecomposition,
        allocation: &AllocationResult,
        cfg: &LinkConfig,
    ) -> Result<Self> {
        cfg.check()?;
        if h.nrows() != md.n_r() || h.ncols() != md.n_t() {
            return Err(Error::Framing(format!(
                "channel is {}x{} but the decomposition is {}x{}",
                h.nrows(),
                h.ncols(),
                md.n_r(),
                md.n_t()
            )));
        }
        let x = beam(md.v.as_ref(), allocation)?;
        let rx_plus: Vec<c64> = (0..h.nrows())
            .map(|i| (0..h.ncols()).map(|j| h[(i, j)] * x[j]).sum())
            .collect();
        let weights: Vec<(usize, f64)> = match cfg.combiner {
            Combiner::ModeSum => (0..md.rank_bound()).map(|m| (m, 1.0)).collect(),
            Combiner::MaximalRatio => allocation
                .modes
                .iter()
                .zip(&allocation.lambda)
                .map(|(m, l)| (*m, md.s[*m] * l))
                .collect(),
        };
        // c = sum_m w_m u_m^H, so c . y = sum_m w_m y~_m
        let mut combine = vec![c64::new(0.0, 0.0); h.nrows()];
        for (m, w) in weights {
            for (i, ci) in combine.iter_mut().enumerate() {
                *ci += md.u[(i, m)].conj() * w;
            }
        }
        Ok(Link {
            rx_plus,
            combine,
            noise_std: cfg.noise_std,
        })
    }

    /// Detected bit for transmitted `bit`.
    fn detect(&self, bit: bool, rng: &mut ChaCha8Rng) -> bool {
        let s = if bit { -1.0 } else { 1.0 };
        let mut z = 0.0;
        for (c, r) in self.combine.iter().zip(&self.rx_plus) {
            let mut y = r * s;
            if self.noise_std > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                y += c64::new(re, im) * self.noise_std;
            }
            z += (c * y).re;
        }
        z < 0.0
    }
}

fn stream(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Sends `bits` through the link; batch `b` of [`BATCH_BITS`] bits draws its
/// noise from stream `b` of the seeded generator, so results do not depend
/// on the thread count.
pub fn transmit_bits(
    bits: &[bool],
    h: MatRef<'_, c64>,
    md: &ModeDecomposition,
    allocation: &AllocationResult,
    cfg: &LinkConfig,
) -> Result<Vec<bool>> {
    let link = Link::new(h, md, allocation, cfg)?;
    let out: Vec<Vec<bool>> = bits
        .par_chunks(BATCH_BITS)
        .enumerate()
        .map(|(b, chunk)| {
            let mut rng = stream(cfg.seed, b);
            chunk
                .iter()
                .map(|bit| link.detect(*bit, &mut rng))
                .collect()
        })
        .collect();
    Ok(out.concat())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCount {
    pub errors: u64,
    pub bits: u64,
}

impl ErrorCount {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}

/// Monte-Carlo error count over `n_bits` random bits. Bits and noise for
/// batch `b` come from stream `b`.
pub fn bit_error_count(
    n_bits: usize,
    h: MatRef<'_, c64>,
    md: &ModeDecomposition,
    allocation: &AllocationResult,
    cfg: &LinkConfig,
) -> Result<ErrorCount> {
    let link = Link::new(h, md, allocation, cfg)?;
    let batches = n_bits.div_ceil(BATCH_BITS);
    let errors: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(cfg.seed, b);
            let len = BATCH_BITS.min(n_bits - b * BATCH_BITS);
            let mut e = 0;
            for _ in 0..len {
                let bit: bool = rng.random();
                if link.detect(bit, &mut rng) != bit {
                    e += 1;
                }
            }
            e
        })
        .sum();
    Ok(ErrorCount {
        errors,
        bits: n_bits as u64,
    })
}

/// Row-major pixels, most significant bit first.
pub fn image_to_bits(img: &GrayImage) -> Vec<bool> {
    img.pixels()
        .iter()
        .flat_map(|p| (0..8).rev().map(move |b| (p >> b) & 1 == 1))
        .collect()
}

pub fn bits_to_image(bits: &[bool], width: usize, height: usize) -> Result<GrayImage> {
    if bits.len() != width * height * 8 {
        return Err(Error::Framing(format!(
            "{} bits do not frame a {width}x{height} 8-bit image",
            bits.len()
        )));
    }
    let pixels = bits
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, b| (acc << 1) | *b as u8))
        .collect();
    GrayImage::new(width, height, pixels)
}

/// `10 log10(255^2 / MSE)`; infinite for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Framing("PSNR needs images of equal size".into()));
    }
    let n = a.pixels().len().max(1) as f64;
    let mse = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitOutcome {
    pub received: GrayImage,
    pub errors: ErrorCount,
    pub psnr_db: f64,
}

impl TransmitOutcome {
    pub fn ber(&self) -> f64 {
        self.errors.ber()
    }
}

/// Sends an 8-bit image one BPSK symbol per bit and reassembles it.
pub fn transmit_image(
    image: &GrayImage,
    h: MatRef<'_, c64>,
    md: &ModeDecomposition,
    allocation: &AllocationResult,
    cfg: &LinkConfig,
) -> Result<TransmitOutcome> {
    let bits = image_to_bits(image);
    let got = transmit_bits(&bits, h, md, allocation, cfg)?;
    let errors = bits.iter().zip(&got).filter(|(a, b)| a != b).count() as u64;
    let received = bits_to_image(&got, image.width(), image.height())?;
    let psnr_db = psnr(image, &received)?;
    Ok(TransmitOutcome {
        received,
        errors: ErrorCount {
            errors,
            bits: bits.len() as u64,
        },
        psnr_db,
    })
}

/// Decision-statistic signal and noise for one allocation under the
/// configured combiner: `BER = Q(signal / noise)`.
pub fn predicted_snr(
    h: MatRef<'_, c64>,
    md: &ModeDecomposition,
    allocation: &AllocationResult,
    cfg: &LinkConfig,
) -> Result<(f64, f64)> {
    let link = Link::new(h, md, allocation, cfg)?;
    let signal: f64 = link
        .combine
        .iter()
        .zip(&link.rx_plus)
        .map(|(c, r)| (c * r).re)
        .sum();
    let noise = cfg.noise_std
        * link
            .combine
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
    Ok((signal, noise))
}
