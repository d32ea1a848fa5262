use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{DecomposerKind, DenoiserKind, RunConfig};
use super::report::{InputDigest, RunReport};
use super::CliError;
use crate::decomposition::{
    decompose, Decomposer, ExternalDecomposer, OracleDecomposer, PassthroughDecomposer,
};
use crate::diffusion::{
    restore_with_observer, AnalyticGaussianDenoiser, Denoiser, ExternalDenoiser,
};
use crate::error::Error;
use crate::haze::{apply_asm, transmission_from_depth, Airlight, TransmissionMap};
use crate::image::{
    load_ppm, load_tensor, psnr, save_ppm, save_tensor, ImageF32, MetricReport, Plane,
};
use crate::jfif::{parse_jpeg, write_jfif, ParsedJpeg};
use crate::jpeg::{loss_map, simulate_jpeg, JpegOptions};
use crate::spectral::{
    annihilation_stats, luma_blocks, verify_inequality, AnnihilationReport, InequalityVerdict,
};
use crate::synth::scene;

type CmdResult = Result<RunReport, CliError>;

/// Accumulates outputs for the report while writing them.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(Error::from)?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn ppm(&mut self, name: &str, img: &ImageF32) -> Result<(), CliError> {
        let p = self.path(name);
        Ok(save_ppm(&img.to_u8(), p)?)
    }

    fn tensor(&mut self, name: &str, img: &ImageF32) -> Result<(), CliError> {
        let p = self.path(name);
        Ok(save_tensor(img, p)?)
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<(), CliError> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(v).map_err(Error::from)?;
        fs::write(p, text).map_err(Error::from)?;
        Ok(())
    }

    fn bytes(&mut self, name: &str, b: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(p, b).map_err(Error::from)?;
        Ok(())
    }
}

fn report(command: &str, cfg: &RunConfig, inputs: &[&Path]) -> Result<RunReport, CliError> {
    Ok(RunReport {
        command: command.to_string(),
        seed: cfg.seed,
        inputs: inputs
            .iter()
            .map(|p| InputDigest::of(p))
            .collect::<Result<_, _>>()?,
        parameters: serde_json::to_value(cfg).map_err(Error::from)?,
        outputs: Vec::new(),
        metrics: Default::default(),
        warnings: Vec::new(),
        wall_time_s: 0.0,
    })
}

fn load_image(path: &Path) -> Result<ImageF32, CliError> {
    Ok(load_ppm(path)?.to_f32())
}

/// Depth rising linearly from 0.05 at the bottom row to 2.0 at the top.
fn default_depth(width: usize, height: usize) -> Plane {
    let data = (0..width * height)
        .map(|i| {
            let y = i / width;
            2.0 - 1.95 * y as f64 / (height - 1).max(1) as f64
        })
        .collect();
    Plane {
        width,
        height,
        data,
    }
}

pub fn cmd_synth(width: usize, height: usize, cfg: &RunConfig, out: &Path) -> CmdResult {
    if width == 0 || height == 0 {
        return Err(CliError::Usage("width and height must be positive".into()));
    }
    let mut rep = report("synth", cfg, &[])?;
    let mut o = Outputs::new(out)?;
    let s = scene(width, height, cfg.seed);
    o.ppm("clear.ppm", &s.clear)?;
    o.tensor("depth.fdgt", &s.depth.to_image())?;
    rep.outputs = o.written;
    Ok(rep)
}

pub fn cmd_degrade(input: &Path, depth: Option<&Path>, cfg: &RunConfig, out: &Path) -> CmdResult {
    let mut rep = report(
        "degrade",
        cfg,
        &[Some(input), depth]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>(),
    )?;
    let clear = load_image(input)?;
    let t = match (cfg.transmission, depth) {
        (Some(t), _) => TransmissionMap::uniform(clear.width, clear.height, t)?,
        (None, Some(p)) => {
            let d = load_tensor(p)?;
            if d.channels != 1 || (d.width, d.height) != (clear.width, clear.height) {
                return Err(Error::DimensionMismatch {
                    left: d.dims(),
                    right: (clear.width, clear.height, 1),
                }
                .into());
            }
            transmission_from_depth(&d.channel(0), cfg.beta)?
        }
        (None, None) => {
            transmission_from_depth(&default_depth(clear.width, clear.height), cfg.beta)?
        }
    };
    let airlight = Airlight(cfg.airlight);
    airlight.validate()?;
    let hazy = apply_asm(&clear, &t, &airlight)?.to_u8();
    let sim = simulate_jpeg(&hazy, JpegOptions::new(cfg.qf))?;
    let jfif =
        write_jfif(&ParsedJpeg::from_coefficients(&sim.coefficients)).map_err(Error::from)?;
    let loss = loss_map(&hazy, &sim.image)?;

    let mut o = Outputs::new(out)?;
    o.ppm("hazy.ppm", &hazy.to_f32())?;
    o.ppm("compressed.ppm", &sim.image.to_f32())?;
    o.bytes("compressed.jpg", &jfif)?;
    o.tensor("transmission.fdgt", &t.plane().to_image())?;
    o.tensor("loss.fdgt", &loss.to_image())?;
    rep.outputs = o.written;
    rep.metric(
        "compressed_vs_clear",
        MetricReport::compute(&sim.image.to_f32(), &clear)?,
    );
    rep.metric("loss_mean", loss.mean());
    rep.metric("transmission_mean", t.plane().mean());
    Ok(rep)
}

#[derive(Debug, Serialize)]
struct Analysis {
    images: Vec<String>,
    reports: Vec<AnnihilationReport>,
    verdicts: Vec<InequalityVerdict>,
}

/// Annihilation statistics for every t; each is checked against the
/// report with the largest t.
pub fn cmd_analyze(corpus: &Path, cfg: &RunConfig, out: &Path) -> CmdResult {
    let mut rep = report("analyze", cfg, &[])?;
    let mut entries: Vec<PathBuf> = fs::read_dir(corpus)
        .map_err(Error::from)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut blocks = Vec::new();
    let mut images = Vec::new();
    for p in entries {
        match load_ppm(&p)
            .map_err(CliError::from)
            .and_then(|img| Ok(luma_blocks(&img)?))
        {
            Ok(b) => {
                blocks.extend(b);
                rep.inputs.push(InputDigest::of(&p)?);
                images.push(p.display().to_string());
            }
            Err(e) => {
                let msg = format!("skipping {}: {e}", p.display());
                eprintln!("warning: {msg}");
                rep.warnings.push(msg);
            }
        }
    }
    if images.is_empty() {
        return Err(Error::Empty("corpus has no readable images").into());
    }
    let reports = cfg
        .t_list
        .iter()
        .map(|&t| annihilation_stats(&blocks, t, cfg.qf))
        .collect::<Result<Vec<_>, _>>()?;
    let clear = reports
        .iter()
        .max_by(|a, b| a.t.total_cmp(&b.t))
        .expect("t_list is validated non-empty");
    let verdicts = if reports.len() == 1 {
        vec![verify_inequality(clear, clear)?]
    } else {
        reports
            .iter()
            .filter(|r| !std::ptr::eq(*r, clear))
            .map(|r| verify_inequality(r, clear))
            .collect::<Result<Vec<_>, _>>()?
    };
    rep.metric("blocks", blocks.len());
    rep.metric("all_pass", verdicts.iter().all(|v| v.pass));
    let mut o = Outputs::new(out)?;
    o.json(
        "analysis.json",
        &Analysis {
            images,
            reports,
            verdicts,
        },
    )?;
    rep.outputs = o.written;
    Ok(rep)
}

pub fn build_decomposer(
    cfg: &RunConfig,
    reference: Option<&ImageF32>,
    workdir: &Path,
) -> Result<Box<dyn Decomposer>, CliError> {
    Ok(match cfg.decomposer.kind {
        DecomposerKind::Passthrough => Box::new(PassthroughDecomposer),
        DecomposerKind::Oracle => Box::new(
            OracleDecomposer::from_optional(reference.cloned())
                .map_err(|_| CliError::Usage("--decomposer oracle requires --reference".into()))?,
        ),
        DecomposerKind::External => {
            let program = cfg.decomposer.program.clone().ok_or_else(|| {
                CliError::Usage("external decomposer needs decomposer.program".into())
            })?;
            fs::create_dir_all(workdir).map_err(Error::from)?;
            Box::new(ExternalDecomposer {
                program,
                args: cfg.decomposer.args.clone(),
                workdir: workdir.to_path_buf(),
            })
        }
    })
}

pub fn build_denoiser(cfg: &RunConfig, workdir: &Path) -> Result<Box<dyn Denoiser>, CliError> {
    Ok(match cfg.denoiser.kind {
        DenoiserKind::Analytic => Box::new(
            AnalyticGaussianDenoiser::new(cfg.denoiser.mu, cfg.denoiser.sigma)
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        DenoiserKind::External => {
            let program = cfg.denoiser.program.clone().ok_or_else(|| {
                CliError::Usage("external denoiser needs denoiser.program".into())
            })?;
            fs::create_dir_all(workdir).map_err(Error::from)?;
            Box::new(ExternalDenoiser {
                program,
                args: cfg.denoiser.args.clone(),
                workdir: workdir.to_path_buf(),
            })
        }
    })
}

pub fn cmd_restore(
    input: &Path,
    reference: Option<&Path>,
    cfg: &RunConfig,
    out: &Path,
) -> CmdResult {
    let mut rep = report(
        "restore",
        cfg,
        &[Some(input), reference]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>(),
    )?;
    let img = load_image(input)?;
    let reference = reference.map(load_image).transpose()?;
    let work = out.join("work");
    let decomposer = build_decomposer(cfg, reference.as_ref(), &work)?;
    let denoiser = build_denoiser(cfg, &work)?;
    let predictor = cfg
        .sampler
        .predictor
        .build(cfg.sampler.kappa, cfg.sampler.max_offset);
    let mut o = Outputs::new(out)?;
    let snapshots = out.join("snapshots");
    let mut snapshot_names = Vec::new();
    let every = cfg.snapshot_every;
    let restored = restore_with_observer(
        &img,
        decomposer.as_ref(),
        denoiser.as_ref(),
        predictor.as_ref(),
        &cfg.sampler,
        &mut |t, j| {
            if let Some(k) = every {
                if t % k == 0 {
                    fs::create_dir_all(&snapshots)?;
                    let name = format!("step_{t:05}.fdgt");
                    save_tensor(j, snapshots.join(&name))?;
                    snapshot_names.push(format!("snapshots/{name}"));
                }
            }
            Ok(())
        },
    )?;
    o.ppm("restored.ppm", &restored.image)?;
    o.ppm("corrected.ppm", &restored.corrected)?;
    o.tensor(
        "transmission.fdgt",
        &restored.transmission.plane().to_image(),
    )?;
    o.written.extend(snapshot_names);
    rep.outputs = o.written;
    rep.metric("airlight", restored.airlight.0);
    rep.metric("patches", restored.grid.len());
    rep.metric("patch_transmission", &restored.patch_transmission);
    if let Some(r) = &reference {
        rep.metric(
            "restored_vs_reference",
            MetricReport::compute(&restored.image, r)?,
        );
    }
    Ok(rep)
}

pub fn cmd_metrics(a: &Path, b: &Path, cfg: &RunConfig) -> CmdResult {
    let mut rep = report("metrics", cfg, &[a, b])?;
    let m = MetricReport::compute(&load_image(a)?, &load_image(b)?)?;
    if let serde_json::Value::Object(map) = serde_json::to_value(m).map_err(Error::from)? {
        rep.metrics.extend(map);
    }
    Ok(rep)
}

#[derive(Debug, Serialize)]
struct QuantDump {
    id: u8,
    zigzag: Vec<u16>,
}

#[derive(Debug, Serialize)]
struct ComponentDump {
    id: u8,
    quant_id: u8,
    blocks_wide: usize,
    blocks_high: usize,
}

#[derive(Debug, Serialize)]
struct JpegDump {
    width: usize,
    height: usize,
    restart_interval: u16,
    huffman_tables: usize,
    quant_tables: Vec<QuantDump>,
    components: Vec<ComponentDump>,
}

/// Tables as JSON; coefficients as a [components, blocks, 64] tensor in
/// natural order.
pub fn cmd_parse_jpeg(file: &Path, cfg: &RunConfig, out: &Path) -> CmdResult {
    let mut rep = report("parse-jpeg", cfg, &[file])?;
    let bytes = fs::read(file).map_err(Error::from)?;
    let parsed = parse_jpeg(&bytes).map_err(Error::from)?;
    let dump = JpegDump {
        width: parsed.frame.width,
        height: parsed.frame.height,
        restart_interval: parsed.restart_interval,
        huffman_tables: parsed.huffman_tables.len(),
        quant_tables: parsed
            .quant_tables
            .iter()
            .map(|(&id, q)| QuantDump {
                id,
                zigzag: q.zigzag().to_vec(),
            })
            .collect(),
        components: parsed
            .frame
            .components
            .iter()
            .zip(&parsed.coeff_blocks)
            .map(|(c, g)| ComponentDump {
                id: c.id,
                quant_id: c.quant_id,
                blocks_wide: g.blocks_wide,
                blocks_high: g.blocks_high,
            })
            .collect(),
    };
    let blocks = parsed.coeff_blocks.first().map_or(0, |g| g.blocks.len());
    let data: Vec<f32> = parsed
        .coeff_blocks
        .iter()
        .flat_map(|g| g.blocks.iter().flat_map(|b| b.0.iter().map(|&v| v as f32)))
        .collect();
    let tensor = crate::image::Tensor::new(vec![parsed.coeff_blocks.len(), blocks, 64], data)?;
    let mut o = Outputs::new(out)?;
    o.json("jpeg.json", &dump)?;
    let p = o.path("coefficients.fdgt");
    tensor.save(p)?;
    rep.outputs = o.written;
    rep.metric("tables", &dump.quant_tables);
    Ok(rep)
}

pub fn cmd_decompose(
    input: &Path,
    reference: Option<&Path>,
    cfg: &RunConfig,
    out: &Path,
) -> CmdResult {
    let mut rep = report(
        "decompose",
        cfg,
        &[Some(input), reference]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>(),
    )?;
    let img = load_image(input)?;
    let reference = reference.map(load_image).transpose()?;
    let decomposer = build_decomposer(cfg, reference.as_ref(), &out.join("work"))?;
    let (spectrum, corrected) = decompose(&img, decomposer.as_ref())?;
    let mut o = Outputs::new(out)?;
    let p = o.path("spectrum.fdgt");
    spectrum.tensor().to_tensor().save(p)?;
    o.json("spectrum.json", &spectrum.tensor().sidecar(Some(cfg.qf)))?;
    o.tensor("corrected.fdgt", &corrected)?;
    o.ppm("corrected.ppm", &corrected)?;
    rep.outputs = o.written;
    rep.metric("spectrum_max_abs_ac", spectrum.tensor().max_abs_ac());
    if let Some(r) = &reference {
        let max_err = corrected
            .data
            .iter()
            .zip(&r.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        rep.metric("corrected_max_abs_error", max_err);
        rep.metric(
            "corrected_psnr",
            psnr(&corrected, r).ok().filter(|v| v.is_finite()),
        );
    }
    Ok(rep)
}
