//! `sct`: scarce-view CT pipeline runner.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sct::config::{parse_kv, Resolver};
use sct::container::{export_pgm, load_container, save_image, save_sinogram};
use sct::pipeline::{self, run_evaluate, EvalOptions};
use sct::report::{plot_angular, plot_ratio_sweep, read_csv, write_csv};
use sct::weights::{load_bundle, load_enhance_net, save_bundle, save_enhance_net};
use sct::{Error, Result};
use sct_core::baseline::{bilinear_upsample, linear_interpolate, nearest_upsample};
use sct_core::enhance::{enhance_sinogram, train_enhance, EnhanceNetConfig};
use sct_core::interp::{interpolate_learned, InterpNetConfig, TrainHyper};
use sct_core::projector::{forward_project, ProjectorConfig};
use sct_core::recon::{sart, sirt, ReconConfig};
use sct_core::{Image, ScanGeometry, Sinogram};

#[derive(Parser)]
#[command(name = "sct", version, about = "Scarce-view CT toolkit: phantoms, projection, sinogram up-sampling and iterative reconstruction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate seeded procedural phantoms.
    Phantom(PhantomArgs),
    /// Forward-project an image into a sinogram.
    Project(ProjectArgs),
    /// Keep every R-th acquisition of a sinogram.
    Subsample(SubsampleArgs),
    /// Up-sample a scarce sinogram by a deterministic or learned method.
    Interpolate(InterpolateArgs),
    /// Train the per-offset interpolation networks for one ratio.
    Train(TrainArgs),
    /// Train or apply the patch-based 2D enhancement net.
    Enhance(EnhanceArgs),
    /// Reconstruct an image from a sinogram with SIRT or SART.
    Reconstruct(ReconstructArgs),
    /// Run the full comparison experiment and write metrics + plots.
    Evaluate(EvaluateArgs),
    /// Regenerate plots from an existing metrics CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct PhantomArgs {
    /// Output directory for phantom_<i>.sct files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 512)]
    size: usize,
    /// Also write 8-bit PGM previews.
    #[arg(long)]
    pgm: bool,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long, value_name = "IMG.sct")]
    input: PathBuf,
    #[arg(long, value_name = "SINO.sct")]
    out: PathBuf,
    /// Scan geometry file (`key = value`); "default" uses the built-in scan.
    #[arg(long)]
    geometry: Option<String>,
    /// Dense acquisition count when no geometry file is given.
    #[arg(long)]
    angles: Option<usize>,
    /// Min-max normalize the sinogram after sampling.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct SubsampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ratio: usize,
}

#[derive(Args)]
struct InterpolateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ratio: usize,
    /// linear | nearest | bilinear | learned
    #[arg(long)]
    method: String,
    /// Bundle directory (learned method only).
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Average both input orderings for the midpoint offset.
    #[arg(long)]
    midpoint_avg: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    ratio: usize,
    /// Output bundle directory.
    #[arg(long)]
    out: PathBuf,
    /// Directory of dense *.sct sinograms to train on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of phantoms to generate instead of --data.
    #[arg(long)]
    phantoms: Option<usize>,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 257)]
    angles: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    cap: usize,
    #[arg(long, default_value_t = 4)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f32,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EnhanceArgs {
    /// Train a new net instead of applying one.
    #[arg(long)]
    fit: bool,
    /// Apply/fit input: dense sinogram to enhance (apply mode).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Weight file to apply (apply mode) or write (fit mode).
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fit mode: method producing the inputs (linear|nearest|bilinear|learned).
    #[arg(long, default_value = "linear")]
    method: String,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    ratio: usize,
    #[arg(long, default_value_t = 8)]
    phantoms: usize,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 257)]
    angles: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    cap: usize,
    #[arg(long, default_value_t = 4)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f32,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// sirt | sart
    #[arg(long, default_value = "sirt")]
    algo: String,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    relax: f32,
    /// Clamp negatives after each iteration.
    #[arg(long)]
    nonneg: bool,
    /// Reconstruction grid size (defaults to the detector count).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    geometry: Option<String>,
    /// Also write an 8-bit PGM preview.
    #[arg(long)]
    pgm: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory; defaults to runs/run-<unix time>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file supplying defaults for any flag not given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated up-sampling ratios, e.g. "16" or "16,8".
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train and apply per-method enhancement nets.
    #[arg(long)]
    enhance: bool,
    #[arg(long)]
    midpoint_avg: bool,
    /// Compute image-PSNR rows (SIRT-10 per sample and method).
    #[arg(long)]
    image_metrics: Option<bool>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Phantom(a) => cmd_phantom(a),
        Cmd::Project(a) => cmd_project(a),
        Cmd::Subsample(a) => cmd_subsample(a),
        Cmd::Interpolate(a) => cmd_interpolate(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Enhance(a) => cmd_enhance(a),
        Cmd::Reconstruct(a) => cmd_reconstruct(a),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::Report(a) => cmd_report(a),
    }
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn load_geometry(spec: &str) -> Result<ScanGeometry> {
    if spec == "default" {
        return Ok(ScanGeometry::default_scan());
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kv = parse_kv(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
    let get = |key: &str| -> Result<f64> {
        kv.get(key)
            .ok_or_else(|| Error::Config(format!("{spec}: missing `{key}`")))?
            .parse()
            .map_err(|_| Error::Config(format!("{spec}: bad `{key}`")))
    };
    ScanGeometry::new(
        get("n_angles")? as usize,
        get("angle_start_deg")?,
        get("angle_step_deg")?,
        get("n_detectors")? as usize,
        get("detector_pitch")?,
        get("image_size")? as usize,
    )
    .map_err(Error::Core)
}

fn load_sino(path: &Path) -> Result<Sinogram> {
    load_container(path)?.into_sino(path)
}

fn load_img(path: &Path) -> Result<Image> {
    load_container(path)?.into_img(path)
}

fn cmd_phantom(a: PhantomArgs) -> Result<()> {
    mkdir(&a.out)?;
    for i in 0..a.count {
        let img = pipeline::sample_phantom(a.seed, i, a.size)?;
        let path = a.out.join(format!("phantom_{i:03}.sct"));
        save_image(&path, &img)?;
        if a.pgm {
            export_pgm(a.out.join(format!("phantom_{i:03}.pgm")), &img.data, img.size, img.size)?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_project(a: ProjectArgs) -> Result<()> {
    let img = load_img(&a.input)?;
    let geometry = match &a.geometry {
        Some(spec) => load_geometry(spec)?,
        None => {
            let n = a.angles.unwrap_or(513);
            ScanGeometry::with_angles(n, img.size, img.size)
        }
    };
    let cfg = ProjectorConfig::new(geometry);
    let mut sino = forward_project(&img, &cfg).map_err(Error::Core)?;
    if a.normalize {
        sino = sino.normalize().map_err(Error::Core)?;
    }
    save_sinogram(&a.out, &sino)?;
    println!("wrote {} ({} angles x {} bins)", a.out.display(), sino.n_angles(), sino.n_detectors());
    Ok(())
}

fn cmd_subsample(a: SubsampleArgs) -> Result<()> {
    let sino = load_sino(&a.input)?;
    let scarce = sino.subsample(a.ratio).map_err(Error::Core)?;
    save_sinogram(&a.out, &scarce)?;
    println!("wrote {} ({} of {} angles kept)", a.out.display(), scarce.n_angles(), sino.n_angles());
    Ok(())
}

fn cmd_interpolate(a: InterpolateArgs) -> Result<()> {
    let scarce = load_sino(&a.input)?;
    // Learned inference expects data in the normalized range it was trained
    // on; file-loaded sinograms carry no record, so renormalize.
    let dense = match a.method.as_str() {
        "linear" => linear_interpolate(&scarce, a.ratio).map_err(Error::Core)?,
        "nearest" => nearest_upsample(&scarce, a.ratio).map_err(Error::Core)?,
        "bilinear" => bilinear_upsample(&scarce, a.ratio).map_err(Error::Core)?,
        "learned" => {
            let dir = a.bundle.as_ref().ok_or_else(|| {
                Error::Config("--method learned requires --bundle <dir>".into())
            })?;
            let bundle = load_bundle(dir)?;
            let normalized = scarce.normalize().map_err(Error::Core)?;
            let est = interpolate_learned(&normalized, a.ratio, &bundle, a.midpoint_avg)
                .map_err(Error::Core)?;
            est.denormalize()
        }
        other => return Err(Error::Config(format!("unknown method `{other}`"))),
    };
    save_sinogram(&a.out, &dense)?;
    println!("wrote {} ({} angles)", a.out.display(), dense.n_angles());
    Ok(())
}

fn training_sinos(
    data: &Option<PathBuf>,
    phantoms: Option<usize>,
    seed: u64,
    size: usize,
    angles: usize,
    threads: usize,
) -> Result<Vec<Sinogram>> {
    match data {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "sct"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::Config(format!("{}: no .sct files", dir.display())));
            }
            paths
                .iter()
                .map(|p| Ok(load_sino(p)?.normalize().map_err(Error::Core)?))
                .collect()
        }
        None => {
            let count = phantoms.unwrap_or(8);
            let geometry = ScanGeometry::with_angles(angles, size, size);
            let cfg = ProjectorConfig::new(geometry);
            pipeline::par_map((0..count).collect(), threads, |_, i| {
                let img = pipeline::sample_phantom(seed, i, size)?;
                forward_project(&img, &cfg)
                    .and_then(|s| s.normalize())
                    .map_err(Error::Core)
            })
            .into_iter()
            .collect()
        }
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let threads = a.threads.unwrap_or_else(pipeline::default_threads);
    let dense = training_sinos(&a.data, a.phantoms, a.seed, a.size, a.angles, threads)?;
    let net = InterpNetConfig { depth: a.depth, base_width: a.width, width_cap: a.cap };
    let hyper = TrainHyper { epochs: a.epochs, lr: a.lr, batch: a.batch, seed: a.seed };
    let bundle = pipeline::train_bundle_parallel(&dense, a.ratio, net, &hyper, threads)?;
    save_bundle(&a.out, &bundle)?;
    for (i, curve) in bundle.losses.iter().enumerate() {
        let tail = curve.last().copied().unwrap_or(f32::NAN);
        println!("class k={}: final epoch loss {tail:.6}", i + 1);
    }
    println!("wrote bundle {} ({} networks)", a.out.display(), bundle.nets.len());
    Ok(())
}

fn cmd_enhance(a: EnhanceArgs) -> Result<()> {
    let cfg = EnhanceNetConfig { depth: a.depth, base_width: a.width, width_cap: a.cap };
    if a.fit {
        let dense = training_sinos(&None, Some(a.phantoms), a.seed, a.size, a.angles, pipeline::default_threads())?;
        let bundle = match a.method.as_str() {
            "learned" => Some(load_bundle(a.bundle.as_ref().ok_or_else(|| {
                Error::Config("--method learned requires --bundle".into())
            })?)?),
            _ => None,
        };
        let mut pairs = Vec::new();
        for truth in &dense {
            let scarce = truth.subsample(a.ratio).map_err(Error::Core)?;
            let est = match a.method.as_str() {
                "linear" => linear_interpolate(&scarce, a.ratio),
                "nearest" => nearest_upsample(&scarce, a.ratio),
                "bilinear" => bilinear_upsample(&scarce, a.ratio),
                "learned" => {
                    interpolate_learned(&scarce, a.ratio, bundle.as_ref().unwrap(), false)
                }
                other => return Err(Error::Config(format!("unknown method `{other}`"))),
            }
            .map_err(Error::Core)?;
            pairs.push((est, truth.clone()));
        }
        let hyper = TrainHyper { epochs: a.epochs, lr: a.lr, batch: a.batch, seed: a.seed };
        let (net, losses) = train_enhance(&pairs, cfg, &hyper).map_err(Error::Core)?;
        save_enhance_net(&a.net, &net)?;
        println!("wrote {} (loss curve {losses:?})", a.net.display());
    } else {
        let input = a.input.as_ref().ok_or_else(|| Error::Config("--input required".into()))?;
        let out = a.out.as_ref().ok_or_else(|| Error::Config("--out required".into()))?;
        let net = load_enhance_net(&a.net)?;
        let dense = load_sino(input)?.normalize().map_err(Error::Core)?;
        let enhanced = enhance_sinogram(&dense, &net).map_err(Error::Core)?;
        save_sinogram(out, &enhanced.denormalize())?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<()> {
    let mut sino = load_sino(&a.input)?;
    match &a.geometry {
        Some(spec) => {
            let g = load_geometry(spec)?;
            if g.n_angles != sino.n_angles() || g.n_detectors != sino.n_detectors() {
                return Err(Error::DimensionMismatch {
                    path: a.input.clone(),
                    detail: "geometry file does not match the sinogram".into(),
                });
            }
            sino.geometry = g;
        }
        None => {
            if let Some(size) = a.size {
                sino.geometry.image_size = size;
            }
        }
    }
    let cfg = ProjectorConfig::new(sino.geometry.clone());
    let rc = match a.algo.as_str() {
        "sirt" => ReconConfig {
            iterations: a.iters.unwrap_or(10),
            relaxation: a.relax,
            nonneg_clamp: a.nonneg,
        },
        "sart" => ReconConfig {
            iterations: a.iters.unwrap_or(3),
            relaxation: a.relax,
            nonneg_clamp: a.nonneg,
        },
        other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
    };
    let img = match a.algo.as_str() {
        "sirt" => sirt(&sino, &cfg, &rc),
        _ => sart(&sino, &cfg, &rc),
    }
    .map_err(Error::Core)?;
    save_image(&a.out, &img)?;
    if a.pgm {
        let pgm = a.out.with_extension("pgm");
        export_pgm(&pgm, &img.data, img.size, img.size)?;
    }
    println!("wrote {} ({} iterations of {})", a.out.display(), rc.iterations, a.algo);
    Ok(())
}

fn parse_ratios(spec: &str) -> Result<Vec<usize>> {
    let ratios: std::result::Result<Vec<usize>, _> =
        spec.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let ratios = ratios.map_err(|_| Error::Config(format!("bad ratio list `{spec}`")))?;
    if ratios.is_empty() {
        return Err(Error::Config("empty ratio list".into()));
    }
    Ok(ratios)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut r = Resolver::new(a.config.as_deref())?;
    let ratios = parse_ratios(&r.get("ratio", a.ratio.clone(), "16".to_string())?)?;
    let opts = EvalOptions {
        seed: r.get("seed", a.seed, 0)?,
        train_count: r.get("train", a.train, 40)?,
        test_count: r.get("test", a.test, 5)?,
        size: r.get("size", a.size, 256)?,
        angles: r.get("angles", a.angles, 257)?,
        ratios: ratios.clone(),
        net: InterpNetConfig {
            depth: r.get("depth", a.depth, 4)?,
            base_width: r.get("width", a.width, 8)?,
            width_cap: r.get("cap", a.cap, 128)?,
        },
        epochs: r.get("epochs", a.epochs, 4)?,
        lr: r.get("lr", a.lr, 1e-4)?,
        batch: r.get("batch", a.batch, 16)?,
        midpoint_avg: r.get_flag("midpoint_avg", a.midpoint_avg)?,
        enhance: r.get_flag("enhance", a.enhance)?,
        enhance_net: EnhanceNetConfig::desk(),
        image_metrics: r.get("image_metrics", a.image_metrics, true)?,
        threads: r.get("threads", a.threads, pipeline::default_threads())?,
    };

    let out_dir = a.out.unwrap_or_else(|| {
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        PathBuf::from("runs").join(format!("run-{stamp}"))
    });
    mkdir(&out_dir)?;
    let config_path = out_dir.join("config.txt");
    std::fs::write(&config_path, r.echo()).map_err(|e| Error::io(&config_path, e))?;

    eprintln!(
        "evaluating ratios {ratios:?}: {} train / {} test phantoms, {}x{} grid, {} angles",
        opts.train_count, opts.test_count, opts.size, opts.size, opts.angles
    );
    let outcome = run_evaluate(&opts)?;

    // Run artifacts: bundles, test sinograms, phantom images, display recons.
    let sino_dir = out_dir.join("sinograms");
    let img_dir = out_dir.join("images");
    let plot_dir = out_dir.join("plots");
    mkdir(&sino_dir)?;
    mkdir(&img_dir)?;
    mkdir(&plot_dir)?;
    for (i, truth) in outcome.dense_test.iter().enumerate() {
        save_sinogram(sino_dir.join(format!("truth_{i:02}.sct")), truth)?;
    }
    for (i, img) in outcome.phantoms_test.iter().enumerate() {
        save_image(img_dir.join(format!("phantom_{i:02}.sct")), img)?;
        export_pgm(img_dir.join(format!("phantom_{i:02}.pgm")), &img.data, img.size, img.size)?;
    }
    for run in &outcome.runs {
        save_bundle(out_dir.join(format!("bundle_R{}", run.ratio)), &run.bundle)?;
        for (i, s) in run.scarce.iter().enumerate() {
            save_sinogram(sino_dir.join(format!("scarce_R{}_{i:02}.sct", run.ratio)), s)?;
        }
        for m in &run.methods {
            for (i, est) in m.estimates.iter().enumerate() {
                let name = format!("{}_R{}_{i:02}.sct", m.method, run.ratio);
                save_sinogram(sino_dir.join(name), est)?;
            }
        }
    }
    // Display reconstructions (SART, 3 iterations) of sample 0, first ratio.
    if let Some(run) = outcome.runs.first() {
        let cfg = ProjectorConfig::new(outcome.dense_test[0].geometry.clone());
        let rc = ReconConfig { nonneg_clamp: true, ..ReconConfig::sart_default() };
        for m in &run.methods {
            if m.method == "linear" || m.method == "learned" {
                let img = sart(&m.estimates[0].denormalize(), &cfg, &rc).map_err(Error::Core)?;
                let path = img_dir.join(format!("recon_{}_R{}_00.pgm", m.method, run.ratio));
                export_pgm(&path, &img.data, img.size, img.size)?;
            }
        }
    }

    let csv_path = out_dir.join("metrics.csv");
    write_csv(&csv_path, &outcome.rows)?;
    for &ratio in &ratios {
        plot_angular(plot_dir.join(format!("angular_R{ratio}.pgm")), &outcome.rows, ratio)?;
    }
    if ratios.len() > 1 {
        plot_ratio_sweep(plot_dir.join("sinogram_psnr_vs_ratio.pgm"), &outcome.rows)?;
    }

    for run in &outcome.runs {
        for m in &run.methods {
            let img = m
                .report
                .mean_image_psnr()
                .map(|v| format!(", image {v:.2} dB"))
                .unwrap_or_default();
            println!(
                "R={:2} {:<16} sinogram {:.2} dB{img}",
                run.ratio,
                m.method,
                m.report.mean_sinogram_psnr()
            );
        }
    }
    println!("metrics: {}", csv_path.display());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let rows = read_csv(&a.csv)?;
    mkdir(&a.out)?;
    let mut ratios: Vec<usize> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_unstable();
    ratios.dedup();
    for &ratio in &ratios {
        plot_angular(a.out.join(format!("angular_R{ratio}.pgm")), &rows, ratio)?;
    }
    if ratios.len() > 1 {
        plot_ratio_sweep(a.out.join("sinogram_psnr_vs_ratio.pgm"), &rows)?;
    }
    println!("wrote plots for ratios {ratios:?} into {}", a.out.display());
    Ok(())
}
