//! Manual probe for the desk-scale experiment; run with
//! `cargo test -p sct-core --test desk_probe -- --ignored --nocapture`.

use std::time::Instant;

use sct_core::baseline::linear_interpolate;
use sct_core::geometry::ScanGeometry;
use sct_core::interp::{make_training_pairs, train_class, InterpNetConfig, TrainHyper};
use sct_core::interp::{interpolate_learned, ModelBundle};
use sct_core::metrics::sinogram_psnr;
use sct_core::phantom::{generate_phantom, PhantomSpec};
use sct_core::projector::{forward_project, ProjectorConfig};
use sct_core::rng::{derive_seed, SplitMix64};
use sct_core::Sinogram;

fn dense_sinos(count: usize, offset: u64, size: usize, angles: usize) -> Vec<Sinogram> {
    let geometry = ScanGeometry::with_angles(angles, size, size);
    let cfg = ProjectorConfig::new(geometry);
    (0..count)
        .map(|i| {
            let seed = derive_seed(42, offset + i as u64);
            let mut pick = SplitMix64::new(seed);
            let n_ell = 3 + pick.below(10);
            let phantom = generate_phantom(&PhantomSpec::new(seed, n_ell, size)).unwrap();
            forward_project(&phantom, &cfg).unwrap().normalize().unwrap()
        })
        .collect()
}

#[test]
#[ignore]
fn probe_capable() {
    // Same data as probe_small but with enough optimization to see whether
    // the architecture can beat linear interpolation at all.
    let (size, angles, ratio) = (128usize, 129usize, 8usize);
    let train = dense_sinos(10, 0, size, angles);
    let test = dense_sinos(3, 1000, size, angles);
    let cfg = InterpNetConfig::desk();
    let hyper = TrainHyper { epochs: 60, lr: 1e-3, batch: 16, seed: 7 };
    let t1 = Instant::now();
    let mut nets = Vec::new();
    let mut losses = Vec::new();
    for class in 1..=ratio / 2 {
        let samples = make_training_pairs(&train, ratio, class).unwrap();
        let (net, curve) = train_class(&samples, cfg, &hyper, class).unwrap();
        println!(
            "class {class}: loss {:?} .. {:?}",
            &curve[..3],
            &curve[curve.len() - 3..]
        );
        nets.push(net);
        losses.push(curve);
    }
    println!("training: {:?}", t1.elapsed());
    let bundle = ModelBundle { ratio, config: cfg, hyper, nets, losses };
    for (i, dense) in test.iter().enumerate() {
        let scarce = dense.subsample(ratio).unwrap();
        let lin = linear_interpolate(&scarce, ratio).unwrap();
        let learned = interpolate_learned(&scarce, ratio, &bundle, false).unwrap();
        println!(
            "sample {i}: linear {:.2} dB, learned {:.2} dB",
            sinogram_psnr(&lin, dense).unwrap(),
            sinogram_psnr(&learned, dense).unwrap()
        );
    }
}

#[test]
#[ignore]
fn probe_small() {
    let (size, angles, ratio) = (128usize, 129usize, 8usize);
    let t0 = Instant::now();
    let train = dense_sinos(10, 0, size, angles);
    let test = dense_sinos(3, 1000, size, angles);
    println!("projection: {:?}", t0.elapsed());

    let cfg = InterpNetConfig::desk();
    let hyper = TrainHyper { epochs: 4, lr: 1e-4, batch: 16, seed: 7 };
    let t1 = Instant::now();
    let mut nets = Vec::new();
    let mut losses = Vec::new();
    for class in 1..=ratio / 2 {
        let samples = make_training_pairs(&train, ratio, class).unwrap();
        let (net, curve) = train_class(&samples, cfg, &hyper, class).unwrap();
        println!("class {class}: {} samples, losses {curve:?}", samples.len());
        nets.push(net);
        losses.push(curve);
    }
    println!("training: {:?}", t1.elapsed());
    let bundle = ModelBundle { ratio, config: cfg, hyper, nets, losses };

    for (i, dense) in test.iter().enumerate() {
        let scarce = dense.subsample(ratio).unwrap();
        let lin = linear_interpolate(&scarce, ratio).unwrap();
        let learned = interpolate_learned(&scarce, ratio, &bundle, false).unwrap();
        println!(
            "sample {i}: linear {:.2} dB, learned {:.2} dB",
            sinogram_psnr(&lin, dense).unwrap(),
            sinogram_psnr(&learned, dense).unwrap()
        );
    }
}
