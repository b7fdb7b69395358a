use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use vnlkit::curriculum::{build_schedule, CurriculumConfig};
use vnlkit::eval::{align, depth_metrics, whdr, AlignMode, DEFAULT_WHDR_TAU};
use vnlkit::io::disparity::{disparity_filter_with, DisparityFilterConfig, DisparityPair, FlowField};
use vnlkit::io::pfm::{grid_to_pfm, normals_from_pfm, read_depth_pfm, read_pfm_file, read_raw_depth, write_pfm_file};
use vnlkit::io::ply::write_ply_file;
use vnlkit::io::{
    read_ordinal_pairs, read_part_scores, write_robustness_csv, write_schedule_jsonl, write_window_table_csv,
    IntrinsicsFile,
};
use vnlkit::losses::{vn_loss, DEFAULT_HEM_FRACTION};
use vnlkit::sphere::{sphere_experiment, NoiseModel, SphereExpConfig};
use vnlkit::surface_normal::{normal_metrics, surface_normals, window_study};
use vnlkit::{back_project, DepthMap, Error, Result, SamplingConstraints};

#[derive(Parser)]
#[command(name = "vnlkit", version, about = "Depth geometry: reconstruction, virtual-normal loss, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Back-project a depth map and write an ASCII PLY point cloud.
    Reconstruct {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Virtual-normal loss between a predicted and a ground-truth depth map.
    Vnl {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 170.0)]
        alpha: f64,
        #[arg(long, default_value_t = 10.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long, default_value_t = DEFAULT_HEM_FRACTION)]
        hem: f64,
        #[arg(long, default_value_t = 20)]
        max_attempt_factor: usize,
        /// Write the gradient with respect to the predicted depth as PFM.
        #[arg(long)]
        grad_out: Option<PathBuf>,
    },
    /// Depth metrics after optional alignment of the prediction.
    EvalDepth {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = AlignArg::Affine)]
        align: AlignArg,
        /// Needed for raw depth files, which carry no dimensions.
        #[arg(long)]
        intrinsics: Option<PathBuf>,
    },
    /// Surface normals from predicted depth scored against a normal map.
    EvalNormals {
        #[arg(long)]
        pred_depth: PathBuf,
        #[arg(long)]
        gt_normals: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Weighted human disagreement rate on ordinal pairs.
    Whdr {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WHDR_TAU)]
        tau: f64,
        #[arg(long)]
        intrinsics: Option<PathBuf>,
    },
    /// Pairwise mean angle between normals recovered with different windows.
    WindowStudy {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        windows: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noise robustness of virtual and surface normals on a sphere.
    SphereExp {
        #[arg(long, value_delimiter = ',', default_value = "0.0002,0.001,0.005,0.01")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50_000)]
        points: usize,
        #[arg(long, default_value_t = 100_000)]
        vn_groups: usize,
        #[arg(long, default_value_t = 100_000)]
        sn_points: usize,
        #[arg(long, default_value_t = 9)]
        knn: usize,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_enum, default_value_t = NoiseArg::Isotropic)]
        noise: NoiseArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-curriculum batch schedule from per-part difficulty scores.
    Curriculum {
        /// One `sample_id,score` CSV per part.
        #[arg(long, value_delimiter = ',', required = true)]
        parts: Vec<PathBuf>,
        /// Pacing fraction, one value for all parts or one per part.
        #[arg(long, value_delimiter = ',', default_value = "0.2")]
        p: Vec<f64>,
        #[arg(long)]
        step_len: usize,
        #[arg(long)]
        batch: usize,
        #[arg(long)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Score files rank hardest first.
        #[arg(long)]
        reverse: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quality filter for left-right and right-left stereo flow.
    FilterDisparity {
        #[arg(long)]
        lr: PathBuf,
        #[arg(long)]
        rl: PathBuf,
        /// Mask PFM, 1 for valid pixels and 0 otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlignArg {
    Affine,
    Scale,
    None,
}

impl From<AlignArg> for AlignMode {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::Affine => AlignMode::Affine,
            AlignArg::Scale => AlignMode::Scale,
            AlignArg::None => AlignMode::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Isotropic,
    Radial,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_intrinsics(path: &Path) -> Result<IntrinsicsFile> {
    IntrinsicsFile::from_json(open(path)?)
}

/// PFM by extension, or raw little-endian f32 sized by the intrinsics file.
fn load_depth(path: &Path, intrinsics: Option<&IntrinsicsFile>) -> Result<DepthMap> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let depth = match ext.as_deref() {
        Some("pfm") => read_depth_pfm(path)?,
        Some("raw") => {
            let f = intrinsics.ok_or_else(|| Error::Config("raw depth needs --intrinsics for its dimensions".into()))?;
            read_raw_depth(path, f.width, f.height)?
        }
        _ => return Err(Error::UnsupportedFormat(format!("{}: expected .pfm or .raw", path.display()))),
    };
    if let Some(f) = intrinsics {
        f.check_dims(&depth)?;
    }
    Ok(depth)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Text artifact to `out`, or to stdout when no path is given. The summary
/// is printed only when the artifact went to a file.
fn emit_text(out: Option<&Path>, summary: Value, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)?;
            w.flush()?;
            print_json(&summary);
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values always serialize"));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Reconstruct { depth, intrinsics, out } => {
            let intr = read_intrinsics(&intrinsics)?;
            let d = load_depth(&depth, Some(&intr))?;
            let cloud = back_project(&d, &intr.camera()?)?;
            write_ply_file(&out, &cloud, None)?;
            print_json(&json!({
                "n_points": cloud.len(),
                "config": { "depth": path_str(&depth), "intrinsics": intr, "out": path_str(&out) },
            }));
        }
        Command::Vnl { pred, gt, intrinsics, samples, seed, alpha, beta, theta, hem, max_attempt_factor, grad_out } => {
            let intr = read_intrinsics(&intrinsics)?;
            let (p, g) = (load_depth(&pred, Some(&intr))?, load_depth(&gt, Some(&intr))?);
            let c = SamplingConstraints { alpha, beta, theta, n_samples: samples, max_attempt_factor, seed };
            let (loss, grad) = vn_loss(&p, &g, &intr.camera()?, &c, hem)?;
            if let Some(path) = &grad_out {
                write_pfm_file(path, &grid_to_pfm(grad.width, grad.height, &grad.grad)?)?;
            }
            print_json(&json!({
                "value": loss.value,
                "n_kept": loss.n_terms,
                "config": {
                    "pred": path_str(&pred),
                    "gt": path_str(&gt),
                    "intrinsics": intr,
                    "sampling": c,
                    "hem": hem,
                    "grad_out": grad_out.as_deref().map(path_str),
                },
            }));
        }
        Command::EvalDepth { pred, gt, align: mode, intrinsics } => {
            let intr = intrinsics.as_deref().map(read_intrinsics).transpose()?;
            let (p, g) = (load_depth(&pred, intr.as_ref())?, load_depth(&gt, intr.as_ref())?);
            let mode = AlignMode::from(mode);
            let al = align(&p, &g, mode)?;
            let metrics = depth_metrics(&al.aligned, &g)?;
            print_json(&json!({
                "metrics": metrics,
                "affine": al.params,
                "n_nonpositive": al.n_nonpositive,
                "config": { "pred": path_str(&pred), "gt": path_str(&gt), "align": mode, "intrinsics": intr },
            }));
        }
        Command::EvalNormals { pred_depth, gt_normals, intrinsics, window } => {
            let intr = read_intrinsics(&intrinsics)?;
            let d = load_depth(&pred_depth, Some(&intr))?;
            let gt = normals_from_pfm(&read_pfm_file(&gt_normals)?)?;
            let pred = surface_normals(&d, &intr.camera()?, window)?;
            let metrics = normal_metrics(&pred, &gt)?;
            print_json(&json!({
                "metrics": metrics,
                "config": {
                    "pred_depth": path_str(&pred_depth),
                    "gt_normals": path_str(&gt_normals),
                    "intrinsics": intr,
                    "window": window,
                },
            }));
        }
        Command::Whdr { pred, pairs, tau, intrinsics } => {
            let intr = intrinsics.as_deref().map(read_intrinsics).transpose()?;
            let d = load_depth(&pred, intr.as_ref())?;
            let ps = read_ordinal_pairs(open(&pairs)?)?;
            let value = whdr(&d, &ps, tau)?;
            print_json(&json!({
                "whdr": value,
                "n_pairs": ps.len(),
                "config": { "pred": path_str(&pred), "pairs": path_str(&pairs), "tau": tau, "intrinsics": intr },
            }));
        }
        Command::WindowStudy { depth, intrinsics, windows, out } => {
            let intr = read_intrinsics(&intrinsics)?;
            let d = load_depth(&depth, Some(&intr))?;
            let table = window_study(&d, &intr.camera()?, &windows)?;
            let summary = json!({
                "out": out.as_deref().map(path_str),
                "config": { "depth": path_str(&depth), "intrinsics": intr, "windows": windows },
            });
            emit_text(out.as_deref(), summary, |w| write_window_table_csv(w, &table))?;
        }
        Command::SphereExp { sigmas, seed, points, vn_groups, sn_points, knn, theta, radius, noise, out } => {
            let defaults = SphereExpConfig::default();
            let cfg = SphereExpConfig {
                n_points: points,
                n_vn_groups: vn_groups,
                n_sn_points: sn_points,
                sigmas,
                knn,
                vn_constraints: SamplingConstraints { theta, n_samples: vn_groups, ..defaults.vn_constraints },
                seed,
                radius,
                noise: match noise {
                    NoiseArg::Isotropic => NoiseModel::Isotropic,
                    NoiseArg::Radial => NoiseModel::Radial,
                },
            };
            let rows = sphere_experiment(&cfg)?;
            let summary = json!({ "out": out.as_deref().map(path_str), "rows": rows, "config": cfg });
            emit_text(out.as_deref(), summary, |w| write_robustness_csv(w, &rows))?;
        }
        Command::Curriculum { parts, p, step_len, batch, iters, seed, reverse, out } => {
            let mut ids = Vec::new();
            let mut data = Vec::new();
            for path in &parts {
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("part");
                let (part_ids, part) = read_part_scores(name, open(path)?)?;
                ids.push(part_ids);
                data.push(if reverse { part.reversed() } else { part });
            }
            let p = match p.as_slice() {
                [single] => vec![*single; parts.len()],
                _ => p,
            };
            let cfg = CurriculumConfig { p, step_length: step_len, batch_per_part: batch, total_iterations: iters, seed };
            let schedule = build_schedule(&data, &cfg)?;
            let summary = json!({
                "out": out.as_deref().map(path_str),
                "n_iterations": schedule.iterations.len(),
                "config": {
                    "parts": parts.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
                    "part_sizes": data.iter().map(|d| d.n_samples()).collect::<Vec<_>>(),
                    "reverse": reverse,
                    "curriculum": cfg,
                },
            });
            emit_text(out.as_deref(), summary, |w| write_schedule_jsonl(w, &schedule, &ids))?;
        }
        Command::FilterDisparity { lr, rl, out } => {
            let pair = DisparityPair {
                left_to_right: FlowField::from_pfm(&read_pfm_file(&lr)?)?,
                right_to_left: FlowField::from_pfm(&read_pfm_file(&rl)?)?,
            };
            let cfg = DisparityFilterConfig::default();
            let res = disparity_filter_with(&pair, &cfg)?;
            if let Some(path) = &out {
                let mask: Vec<f64> = res.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
                write_pfm_file(path, &grid_to_pfm(res.width, res.height, &mask)?)?;
            }
            print_json(&json!({
                "keep": res.keep,
                "valid_fraction": res.valid_fraction,
                "n_valid": res.mask.iter().filter(|&&m| m).count(),
                "n_pixels": res.mask.len(),
                "config": {
                    "lr": path_str(&lr),
                    "rl": path_str(&rl),
                    "out": out.as_deref().map(path_str),
                    "filter": cfg,
                },
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}
