use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use emspace::imageio::GrayImage;
use emspace::infomet::{
    available_mode_count, crosstalk_matrix, decompose, effective_capacity, mode_aperture_energy,
    mode_field_maps, normalize, sweep as run_sweep, Normalization,
};
use emspace::oracles::golden;
use emspace::scatter::{evaluate_fields_masked, FactoredScene, FieldMap, SourceArray};
use emspace::scenario::{Scenario, TransmitSpec};
use emspace::txsim::{
    allocate_power_with, single_mode, transmit_image, AllocationResult, Budget, LinkConfig,
};
use emspace::{Error, Result};

pub struct Globals {
    pub scenario: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub nmax: Option<usize>,
}

impl Globals {
    fn scenario(&self) -> Result<Scenario> {
        let p = self
            .scenario
            .as_ref()
            .ok_or_else(|| Error::Config("--scenario <path> is required".into()))?;
        Scenario::load(p)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(&self.out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Optimized,
    /// One-based mode index.
    Mode(usize),
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "optimized" {
            return Ok(Scheme::Optimized);
        }
        match s.strip_prefix("mode-").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(Scheme::Mode(k)),
            _ => Err(format!(
                "expected `optimized` or `mode-K` with K >= 1, got `{s}`"
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Optimized => f.write_str("optimized"),
            Scheme::Mode(k) => write!(f, "mode-{k}"),
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn name_of(sc: &Scenario, g: &Globals) -> String {
    if !sc.name.is_empty() {
        return sc.name.clone();
    }
    g.scenario
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn fieldmap(g: &Globals) -> Result<()> {
    let sc = g.scenario()?;
    let scene = sc.build(g.nmax)?;
    if scene.probes.is_empty() {
        return Err(Error::Config("fieldmap needs a [probes] array".into()));
    }
    let sources = SourceArray::unit(scene.tx.clone())?;
    let start = Instant::now();
    let factored = FactoredScene::new(&scene.scatterers, &scene.k, scene.truncation)?;
    let sol = factored.solve(&sources)?;
    let solve_s = start.elapsed().as_secs_f64();
    let (fields, mask) = evaluate_fields_masked(&sol, &scene.probes)?;
    let total_s = start.elapsed().as_secs_f64();
    let map = FieldMap::new(
        scene.probes.clone(),
        fields.col(0).iter().copied().collect(),
        mask,
        scene.probe_shape,
    );
    let out = g.out_dir()?;
    map.write_csv(&out.join("fieldmap.csv"))?;
    if scene.probe_shape.is_some() {
        map.to_image()?.write_pgm(&out.join("fieldmap.pgm"))?;
    }
    println!(
        "fieldmap {}: {} scatterers, {} unknowns, {} probes, solve {:.4} s, total {:.4} s",
        name_of(&sc, g),
        scene.scatterers.len(),
        factored.unknowns(),
        scene.probes.len(),
        solve_s,
        total_s
    );
    Ok(())
}

pub fn modes(g: &Globals) -> Result<()> {
    let sc = g.scenario()?;
    let scene = sc.build(g.nmax)?;
    let link_scene = scene.link()?;
    let link = link_scene.prepare()?;
    let h = normalize(&link.channel()?)?;
    let md = decompose(&h)?;
    let c_eff = effective_capacity(&md)?;
    let available = available_mode_count(&md)?;
    let out = g.out_dir()?;

    let mut s = String::from("mode,sigma,sigma_norm\n");
    for (i, (a, b)) in md.s.iter().zip(&md.sigma_norm).enumerate() {
        writeln!(s, "{},{a:e},{b:e}", i + 1).unwrap();
    }
    write_text(&out.join("singular_values.csv"), &s)?;

    let alpha = match h.normalization() {
        Normalization::Normalized { alpha } => alpha,
        Normalization::Raw => 1.0,
    };
    let summary = format!(
        "n_t,n_r,alpha,c_eff,available_modes\n{},{},{alpha:e},{c_eff},{available}\n",
        md.n_t(),
        md.n_r()
    );
    write_text(&out.join("summary.csv"), &summary)?;

    if !scene.probes.is_empty() {
        for (m, map) in mode_field_maps(&md, &link, &scene.probes, scene.probe_shape)?
            .iter()
            .enumerate()
        {
            map.write_csv(&out.join(format!("mode_{:02}.csv", m + 1)))?;
            if map.shape.is_some() {
                map.to_image()?
                    .write_pgm(&out.join(format!("mode_{:02}.pgm", m + 1)))?;
            }
        }
    }
    if !scene.aperture.is_empty() {
        let ct = crosstalk_matrix(&md, &link, &scene.aperture)?;
        let mut s = String::from("mode");
        for j in 0..ct.ncols() {
            write!(s, ",mode_{}", j + 1).unwrap();
        }
        s.push('\n');
        for i in 0..ct.nrows() {
            write!(s, "{}", i + 1).unwrap();
            for j in 0..ct.ncols() {
                write!(s, ",{:e}", ct[(i, j)]).unwrap();
            }
            s.push('\n');
        }
        write_text(&out.join("crosstalk.csv"), &s)?;
        let energy = mode_aperture_energy(&md, &link, &scene.aperture)?;
        let peak = energy.iter().cloned().fold(0.0f64, f64::max);
        let mut s = String::from("mode,energy,relative\n");
        for (i, e) in energy.iter().enumerate() {
            writeln!(s, "{},{e:e},{:e}", i + 1, e / peak).unwrap();
        }
        write_text(&out.join("aperture_energy.csv"), &s)?;
    }
    println!(
        "modes {}: {}x{} channel, C_eff {c_eff:.4}, available modes {available}",
        name_of(&sc, g),
        md.n_r(),
        md.n_t()
    );
    Ok(())
}

pub fn sweep(g: &Globals) -> Result<()> {
    let sc = g.scenario()?;
    let cfg = sc.sweep_config()?;
    let start = Instant::now();
    let table = run_sweep(&cfg)?;
    let out = g.out_dir()?;
    write_text(&out.join("sweep.csv"), &table.to_csv())?;
    println!(
        "sweep {}: {} rows, {} series, {:.3} s",
        name_of(&sc, g),
        table.x.len(),
        table.columns.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn allocation(
    md: &emspace::infomet::ModeDecomposition,
    spec: &TransmitSpec,
    scheme: Scheme,
) -> Result<AllocationResult> {
    match scheme {
        Scheme::Optimized => {
            let count = match spec.modes {
                Some(m) => m,
                None => available_mode_count(md)?,
            };
            allocate_power_with(md, spec.p0, count, spec.budget)
        }
        Scheme::Mode(k) => single_mode(md, spec.p0, k - 1),
    }
}

pub fn transmit(
    g: &Globals,
    image: Option<&Path>,
    scheme: Scheme,
    noise_std: Option<f64>,
    p0: Option<f64>,
) -> Result<()> {
    let sc = g.scenario()?;
    let img = match image {
        Some(p) => GrayImage::read_pgm(p)?,
        None => GrayImage::test_pattern(128, 128),
    };
    let mut spec = sc.transmit.clone().unwrap_or(TransmitSpec {
        p0: 1.0,
        noise_std: 0.0,
        modes: None,
        budget: Budget::Sum,
        combiner: Default::default(),
    });
    if let Some(n) = noise_std {
        spec.noise_std = n;
    }
    if let Some(p) = p0 {
        spec.p0 = p;
    }
    let seed = g.seed.unwrap_or(sc.seed);
    let scene = sc.build(g.nmax)?;
    let link_scene = scene.link()?;
    let link = link_scene.prepare()?;
    let h = normalize(&link.channel()?)?;
    let md = decompose(&h)?;
    let alloc = allocation(&md, &spec, scheme)?;
    let cfg = LinkConfig {
        noise_std: spec.noise_std,
        seed,
        combiner: spec.combiner,
    };
    let outcome = transmit_image(&img, h.entries(), &md, &alloc, &cfg)?;
    let out = g.out_dir()?;
    outcome.received.write_pgm(&out.join("received.pgm"))?;
    let modes: Vec<String> = alloc.modes.iter().map(|m| (m + 1).to_string()).collect();
    let metrics = format!(
        "seed,noise_std,p0,scheme,modes,bits,errors,ber,psnr_db\n{seed},{},{},{scheme},{},{},{},{:e},{}\n",
        spec.noise_std,
        spec.p0,
        modes.join(";"),
        outcome.errors.bits,
        outcome.errors.errors,
        outcome.ber(),
        outcome.psnr_db
    );
    write_text(&out.join("metrics.csv"), &metrics)?;
    println!(
        "transmit {}: scheme {scheme}, BER {:.4e}, PSNR {:.2} dB",
        name_of(&sc, g),
        outcome.ber(),
        outcome.psnr_db
    );
    Ok(())
}

pub fn regenerate(root: &Path, scenarios: &Path) -> Result<()> {
    let reports = golden::regenerate(root, scenarios)?;
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    println!(
        "oracle regenerate: wrote {} ({} reports, {} outside tolerance)",
        golden::golden_dir(root).display(),
        reports.len(),
        failed.len()
    );
    for r in failed {
        println!(
            "  outside tolerance: {} {} = {:e} (tol {:e})",
            r.name, r.metric, r.value, r.tolerance
        );
    }
    Ok(())
}
