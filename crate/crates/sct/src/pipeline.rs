//! The end-to-end evaluation pipeline: seeded phantoms, projection and
//! normalization, per-ratio bundle training, the deterministic baselines,
//! metrics and CSV rows. Training classes, projections and reconstructions
//! fan out over a small thread pool; every job is independent and the
//! results are keyed by index, so the outcome is identical however the jobs
//! are scheduled.

use std::collections::VecDeque;
use std::sync::Mutex;

use sct_core::baseline::{bilinear_upsample, linear_interpolate, nearest_upsample};
use sct_core::enhance::{enhance_sinogram, train_enhance, EnhanceNetConfig};
use sct_core::interp::{
    interpolate_learned, make_training_pairs, number_of_networks, train_class, InterpNetConfig,
    ModelBundle, TrainHyper,
};
use sct_core::metrics::{angular_psnr, image_psnr_with_weights, sinogram_psnr, MetricsReport};
use sct_core::phantom::{generate_phantom, PhantomSpec};
use sct_core::projector::{forward_project, ProjectorConfig};
use sct_core::recon::{ReconConfig, SirtWeights};
use sct_core::rng::{derive_seed, SplitMix64};
use sct_core::{Image, ScanGeometry, Sinogram};

use crate::report::CsvRow;
use crate::{Error, Result};

/// Order-preserving parallel map over independent jobs.
pub fn par_map<T: Send, R: Send>(
    items: Vec<T>,
    threads: usize,
    f: impl Fn(usize, T) -> R + Sync,
) -> Vec<R> {
    let n = items.len();
    if threads <= 1 || n <= 1 {
        return items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let queue: Mutex<VecDeque<(usize, T)>> = Mutex::new(items.into_iter().enumerate().collect());
    let results: Mutex<Vec<(usize, R)>> = Mutex::new(Vec::with_capacity(n));
    std::thread::scope(|s| {
        for _ in 0..threads.min(n) {
            s.spawn(|| loop {
                let job = queue.lock().unwrap().pop_front();
                let Some((i, t)) = job else { break };
                let r = f(i, t);
                results.lock().unwrap().push((i, r));
            });
        }
    });
    let mut v = results.into_inner().unwrap();
    v.sort_by_key(|(i, _)| *i);
    v.into_iter().map(|(_, r)| r).collect()
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    /// Image grid and detector bin count.
    pub size: usize,
    /// Dense acquisition count.
    pub angles: usize,
    pub ratios: Vec<usize>,
    pub net: InterpNetConfig,
    pub epochs: usize,
    pub lr: f32,
    pub batch: usize,
    pub midpoint_avg: bool,
    pub enhance: bool,
    pub enhance_net: EnhanceNetConfig,
    /// Compute image-PSNR rows (SIRT-10 per sample and method).
    pub image_metrics: bool,
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            seed: 0,
            train_count: 40,
            test_count: 5,
            size: 256,
            angles: 257,
            ratios: vec![16],
            net: InterpNetConfig::desk(),
            epochs: 4,
            lr: 1e-4,
            batch: 16,
            midpoint_avg: false,
            enhance: false,
            enhance_net: EnhanceNetConfig::desk(),
            image_metrics: true,
            threads: default_threads(),
        }
    }
}

/// Estimates of one method on the whole test set.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: String,
    pub estimates: Vec<Sinogram>,
    pub report: MetricsReport,
    /// Per-sample angular curves backing the CSV rows.
    pub per_sample_angular: Vec<Vec<(usize, f64)>>,
}

pub struct RatioRun {
    pub ratio: usize,
    pub scarce: Vec<Sinogram>,
    pub methods: Vec<MethodRun>,
    pub bundle: ModelBundle,
}

pub struct EvalOutcome {
    pub phantoms_test: Vec<Image>,
    pub dense_test: Vec<Sinogram>,
    pub runs: Vec<RatioRun>,
    pub rows: Vec<CsvRow>,
}

impl EvalOutcome {
    pub fn report(&self, ratio: usize, method: &str) -> Option<&MetricsReport> {
        self.runs
            .iter()
            .find(|r| r.ratio == ratio)?
            .methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| &m.report)
    }
}

/// Seeded phantom for sample `i` of a run.
pub fn sample_phantom(master_seed: u64, index: usize, size: usize) -> Result<Image> {
    let seed = derive_seed(master_seed, 100 + index as u64);
    let n_ellipses = 3 + SplitMix64::new(derive_seed(master_seed, 200 + index as u64)).below(10);
    generate_phantom(&PhantomSpec::new(seed, n_ellipses, size)).map_err(Error::Core)
}

fn project_normalized(
    phantoms: &[Image],
    cfg: &ProjectorConfig,
    threads: usize,
) -> Result<Vec<Sinogram>> {
    let jobs: Vec<&Image> = phantoms.iter().collect();
    par_map(jobs, threads, |_, img| {
        forward_project(img, cfg).and_then(|s| s.normalize()).map_err(Error::Core)
    })
    .into_iter()
    .collect()
}

/// Trains one bundle with the offset classes fanned out over threads.
pub fn train_bundle_parallel(
    dense: &[Sinogram],
    ratio: usize,
    net: InterpNetConfig,
    hyper: &TrainHyper,
    threads: usize,
) -> Result<ModelBundle> {
    let classes = number_of_networks(ratio).map_err(Error::Core)?;
    let class_ids: Vec<usize> = (1..=classes).collect();
    let trained = par_map(class_ids, threads, |_, class| {
        let samples = make_training_pairs(dense, ratio, class)?;
        train_class(&samples, net, hyper, class)
    });
    let mut nets = Vec::with_capacity(classes);
    let mut losses = Vec::with_capacity(classes);
    for outcome in trained {
        let (n, l) = outcome.map_err(Error::Core)?;
        nets.push(n);
        losses.push(l);
    }
    Ok(ModelBundle { ratio, config: net, hyper: *hyper, nets, losses })
}

fn method_estimates(
    name: &str,
    scarce: &[Sinogram],
    ratio: usize,
    bundle: &ModelBundle,
    midpoint_avg: bool,
) -> Result<Vec<Sinogram>> {
    scarce
        .iter()
        .map(|s| {
            match name {
                "linear" => linear_interpolate(s, ratio),
                "nearest" => nearest_upsample(s, ratio),
                "bilinear" => bilinear_upsample(s, ratio),
                "learned" => interpolate_learned(s, ratio, bundle, midpoint_avg),
                other => unreachable!("unknown method {other}"),
            }
            .map_err(Error::Core)
        })
        .collect()
}

/// Runs the full evaluation experiment.
pub fn run_evaluate(opts: &EvalOptions) -> Result<EvalOutcome> {
    let geometry = ScanGeometry::with_angles(opts.angles, opts.size, opts.size);
    let proj_cfg = ProjectorConfig::new(geometry);
    let total = opts.train_count + opts.test_count;

    let phantoms: Vec<Image> = par_map((0..total).collect(), opts.threads, |_, i| {
        sample_phantom(opts.seed, i, opts.size)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let dense = project_normalized(&phantoms, &proj_cfg, opts.threads)?;

    let (phantoms_train, phantoms_test) = phantoms.split_at(opts.train_count);
    let _ = phantoms_train;
    let (dense_train, dense_test) = dense.split_at(opts.train_count);

    let sirt_weights = if opts.image_metrics {
        Some(SirtWeights::for_config(&proj_cfg).map_err(Error::Core)?)
    } else {
        None
    };

    let mut runs = Vec::new();
    for &ratio in &opts.ratios {
        let hyper = TrainHyper {
            epochs: opts.epochs,
            lr: opts.lr,
            batch: opts.batch,
            seed: derive_seed(opts.seed, 300 + ratio as u64),
        };
        let bundle = train_bundle_parallel(dense_train, ratio, opts.net, &hyper, opts.threads)?;
        let scarce: Vec<Sinogram> = dense_test
            .iter()
            .map(|s| s.subsample(ratio).map_err(Error::Core))
            .collect::<Result<_>>()?;

        let mut named: Vec<(String, Vec<Sinogram>)> = Vec::new();
        for name in ["linear", "nearest", "bilinear", "learned"] {
            named.push((
                name.to_string(),
                method_estimates(name, &scarce, ratio, &bundle, opts.midpoint_avg)?,
            ));
        }

        if opts.enhance {
            // One enhancement net per method, trained on that method's
            // estimates of the training set against the dense truth.
            let base: Vec<(String, Vec<Sinogram>)> = named.clone();
            let scarce_train: Vec<Sinogram> = dense_train
                .iter()
                .map(|s| s.subsample(ratio).map_err(Error::Core))
                .collect::<Result<_>>()?;
            for (mi, (name, test_est)) in base.iter().enumerate() {
                let train_est =
                    method_estimates(name, &scarce_train, ratio, &bundle, opts.midpoint_avg)?;
                let pairs: Vec<(Sinogram, Sinogram)> = train_est
                    .into_iter()
                    .zip(dense_train.iter().cloned())
                    .collect();
                let hyper_e = TrainHyper {
                    epochs: opts.epochs,
                    lr: opts.lr,
                    batch: opts.batch,
                    seed: derive_seed(opts.seed, 400 + (ratio * 10 + mi) as u64),
                };
                let (net, _losses) =
                    train_enhance(&pairs, opts.enhance_net, &hyper_e).map_err(Error::Core)?;
                let enhanced: Vec<Sinogram> = test_est
                    .iter()
                    .map(|s| enhance_sinogram(s, &net).map_err(Error::Core))
                    .collect::<Result<_>>()?;
                named.push((format!("{name}+enhance"), enhanced));
            }
        }

        // Score every method.
        let mut methods = Vec::new();
        for (name, estimates) in named {
            let mut per_sample = Vec::new();
            let mut per_sample_angular = Vec::new();
            for (i, est) in estimates.iter().enumerate() {
                let sino_db = sinogram_psnr(est, &dense_test[i]).map_err(Error::Core)?;
                per_sample.push((i, sino_db, None));
                per_sample_angular.push(angular_psnr(est, &dense_test[i], ratio).map_err(Error::Core)?);
            }
            if let Some(w) = &sirt_weights {
                let jobs: Vec<(usize, Sinogram)> = estimates
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (i, e.denormalize()))
                    .collect();
                let rc = ReconConfig::sirt_default();
                let dbs = par_map(jobs, opts.threads, |_, (i, est)| {
                    image_psnr_with_weights(&est, &phantoms_test[i], &proj_cfg, &rc, w)
                        .map_err(Error::Core)
                });
                for (slot, db) in per_sample.iter_mut().zip(dbs) {
                    slot.2 = Some(db?);
                }
            }
            // Mean angular curve across samples.
            let n_offsets = ratio - 1;
            let mut angular = Vec::with_capacity(n_offsets);
            for oi in 0..n_offsets {
                let k = per_sample_angular[0][oi].0;
                let mean = per_sample_angular.iter().map(|c| c[oi].1).sum::<f64>()
                    / per_sample_angular.len() as f64;
                angular.push((k, mean));
            }
            methods.push(MethodRun {
                method: name.clone(),
                estimates,
                report: MetricsReport { method: name, ratio, per_sample, angular },
                per_sample_angular,
            });
        }
        runs.push(RatioRun { ratio, scarce, methods, bundle });
    }

    let rows = build_rows(&runs);
    Ok(EvalOutcome {
        phantoms_test: phantoms_test.to_vec(),
        dense_test: dense_test.to_vec(),
        runs,
        rows,
    })
}

fn build_rows(runs: &[RatioRun]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for run in runs {
        for m in &run.methods {
            for (i, sino_db, img_db) in &m.report.per_sample {
                rows.push(CsvRow {
                    sample_id: i.to_string(),
                    method: m.method.clone(),
                    ratio: run.ratio,
                    offset: None,
                    sinogram_psnr: *sino_db,
                    image_psnr: *img_db,
                });
                for &(k, db) in &m.per_sample_angular[*i] {
                    rows.push(CsvRow {
                        sample_id: i.to_string(),
                        method: m.method.clone(),
                        ratio: run.ratio,
                        offset: Some(k),
                        sinogram_psnr: db,
                        image_psnr: None,
                    });
                }
            }
            rows.push(CsvRow {
                sample_id: "mean".into(),
                method: m.method.clone(),
                ratio: run.ratio,
                offset: None,
                sinogram_psnr: m.report.mean_sinogram_psnr(),
                image_psnr: m.report.mean_image_psnr(),
            });
            for &(k, db) in &m.report.angular {
                rows.push(CsvRow {
                    sample_id: "mean".into(),
                    method: m.method.clone(),
                    ratio: run.ratio,
                    offset: Some(k),
                    sinogram_psnr: db,
                    image_psnr: None,
                });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let out = par_map((0..100).collect::<Vec<usize>>(), 4, |i, v| {
            assert_eq!(i, v);
            v * 3
        });
        assert_eq!(out, (0..100).map(|v| v * 3).collect::<Vec<_>>());
    }

    #[test]
    fn sample_phantoms_are_seeded() {
        let a = sample_phantom(7, 0, 64).unwrap();
        let b = sample_phantom(7, 0, 64).unwrap();
        let c = sample_phantom(7, 1, 64).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn tiny_evaluation_is_deterministic() {
        let opts = EvalOptions {
            seed: 11,
            train_count: 2,
            test_count: 1,
            size: 64,
            angles: 65,
            ratios: vec![4],
            net: InterpNetConfig { depth: 2, base_width: 4, width_cap: 8 },
            epochs: 1,
            lr: 1e-4,
            batch: 8,
            image_metrics: true,
            ..EvalOptions::default()
        };
        let a = run_evaluate(&opts).unwrap();
        let b = run_evaluate(&opts).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.runs[0].methods.len(), 4);
        // Reference rows survive every method.
        for m in &a.runs[0].methods {
            for (est, scarce) in m.estimates.iter().zip(&a.runs[0].scarce) {
                for r in 0..scarce.n_angles() {
                    assert_eq!(est.row(r * 4), scarce.row(r), "method {}", m.method);
                }
            }
        }
        // Aggregate + angular rows per sample and the mean block, 4 methods.
        assert_eq!(a.rows.len(), 4 * ((1 + 3) + (1 + 3)));
    }
}
