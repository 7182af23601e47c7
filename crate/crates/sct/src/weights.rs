//! The `WTS1` weight file: a header with one descriptor line per layer,
//! then every layer's weights and bias as little-endian f32, in declaration
//! order.
//!
//! ```text
//! WTS1 <n_layers>\n
//! <kind> <n> <m> <k> <s> <p> <act>\n   (kind: conv|tconv, k: "3" or "3x3")
//! ...
//! <payload>
//! ```
//!
//! A model bundle is a directory: `bundle.meta` (key = value text with the
//! ratio, widths and training metadata) plus one `k<offset>.wts` per offset
//! class.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use sct_core::enhance::{build_enhance_net, EnhanceNet, EnhanceNetConfig};
use sct_core::interp::{build_interp_net, InterpNet, InterpNetConfig, ModelBundle, TrainHyper};
use sct_core::nn::{Activation, ConvKind};

use crate::config::parse_kv;
use crate::{Error, Result};

/// One layer's shape as written in the file header.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDesc {
    pub kind: ConvKind,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    /// 1 for 1D kernels, 2 for `NxN` kernels.
    pub dims: u8,
    pub stride: usize,
    pub padding: usize,
    pub act: Activation,
}

impl LayerDesc {
    fn act_token(act: Activation) -> String {
        match act {
            Activation::None => "none".into(),
            Activation::LeakyRelu(s) => format!("lrelu{s}"),
        }
    }

    fn parse_act(tok: &str) -> Option<Activation> {
        if tok == "none" {
            return Some(Activation::None);
        }
        tok.strip_prefix("lrelu")?.parse::<f64>().ok().map(Activation::LeakyRelu)
    }

    fn line(&self) -> String {
        let kind = match self.kind {
            ConvKind::Forward => "conv",
            ConvKind::Transposed => "tconv",
        };
        let k = if self.dims == 2 {
            format!("{}x{}", self.kernel, self.kernel)
        } else {
            format!("{}", self.kernel)
        };
        format!(
            "{kind} {} {} {k} {} {} {}",
            self.in_ch,
            self.out_ch,
            self.stride,
            self.padding,
            Self::act_token(self.act)
        )
    }

    fn parse(line: &str, path: &Path, layer: usize) -> Result<LayerDesc> {
        let bad = |detail: &str| Error::MalformedHeader {
            path: path.into(),
            detail: format!("layer {layer}: {detail}"),
        };
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 7 {
            return Err(bad("expected 7 tokens"));
        }
        let kind = match t[0] {
            "conv" => ConvKind::Forward,
            "tconv" => ConvKind::Transposed,
            _ => return Err(bad("kind")),
        };
        let in_ch = t[1].parse().map_err(|_| bad("in_ch"))?;
        let out_ch = t[2].parse().map_err(|_| bad("out_ch"))?;
        let (kernel, dims) = match t[3].split_once('x') {
            Some((a, b)) => {
                let ka: usize = a.parse().map_err(|_| bad("kernel"))?;
                let kb: usize = b.parse().map_err(|_| bad("kernel"))?;
                if ka != kb {
                    return Err(bad("only square kernels supported"));
                }
                (ka, 2u8)
            }
            None => (t[3].parse().map_err(|_| bad("kernel"))?, 1u8),
        };
        let stride = t[4].parse().map_err(|_| bad("stride"))?;
        let padding = t[5].parse().map_err(|_| bad("padding"))?;
        let act = Self::parse_act(t[6]).ok_or_else(|| bad("activation"))?;
        Ok(LayerDesc { kind, in_ch, out_ch, kernel, dims, stride, padding, act })
    }

    fn weight_len(&self) -> usize {
        let taps = if self.dims == 2 { self.kernel * self.kernel } else { self.kernel };
        self.in_ch * self.out_ch * taps
    }
}

fn descs_1d(net: &InterpNet<f32>) -> Vec<LayerDesc> {
    net.layers()
        .iter()
        .map(|l| LayerDesc {
            kind: l.kind,
            in_ch: l.in_ch,
            out_ch: l.out_ch,
            kernel: l.kernel,
            dims: 1,
            stride: l.stride,
            padding: l.padding,
            act: l.act,
        })
        .collect()
}

fn descs_2d(net: &EnhanceNet<f32>) -> Vec<LayerDesc> {
    net.layers()
        .iter()
        .map(|l| LayerDesc {
            kind: l.kind,
            in_ch: l.in_ch,
            out_ch: l.out_ch,
            kernel: l.kernel,
            dims: 2,
            stride: l.stride,
            padding: l.padding,
            act: l.act,
        })
        .collect()
}

fn write_weights(
    path: &Path,
    descs: &[LayerDesc],
    params: impl Iterator<Item = (Vec<f32>, Vec<f32>)>,
) -> Result<()> {
    let mut out = format!("WTS1 {}\n", descs.len()).into_bytes();
    for d in descs {
        out.extend_from_slice(d.line().as_bytes());
        out.push(b'\n');
    }
    for (w, b) in params {
        for v in w.iter().chain(b.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a weight file into layer descriptors plus per-layer (weights, bias).
pub fn read_weights(path: impl AsRef<Path>) -> Result<(Vec<LayerDesc>, Vec<(Vec<f32>, Vec<f32>)>)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let header: Vec<&str> = line.split_whitespace().collect();
    if header.len() != 2 || header[0] != "WTS1" {
        return Err(Error::BadMagic { path: path.into() });
    }
    let n_layers: usize = header[1]
        .parse()
        .map_err(|_| Error::MalformedHeader { path: path.into(), detail: "layer count".into() })?;
    let mut descs = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let mut line = String::new();
        reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        descs.push(LayerDesc::parse(line.trim_end(), path, i)?);
    }
    let expected: usize = descs.iter().map(|d| d.weight_len() + d.out_ch).sum();
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::TruncatedPayload { path: path.into(), expected, got: bytes.len() / 4 });
    }
    let mut values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let mut params = Vec::with_capacity(n_layers);
    for d in &descs {
        let w: Vec<f32> = values.by_ref().take(d.weight_len()).collect();
        let b: Vec<f32> = values.by_ref().take(d.out_ch).collect();
        params.push((w, b));
    }
    Ok((descs, params))
}

pub fn save_interp_net(path: impl AsRef<Path>, net: &InterpNet<f32>) -> Result<()> {
    let params = net.layers().into_iter().map(|l| (l.weight.clone(), l.bias.clone()));
    let params: Vec<_> = params.collect();
    write_weights(path.as_ref(), &descs_1d(net), params.into_iter())
}

/// Loads weights into a freshly built net of the given config; every layer
/// line must match the architecture.
pub fn load_interp_net(path: impl AsRef<Path>, config: InterpNetConfig) -> Result<InterpNet<f32>> {
    let path = path.as_ref();
    let (descs, params) = read_weights(path)?;
    let mut net = build_interp_net::<f32>(config).map_err(Error::Core)?;
    let want = descs_1d(&net);
    validate_topology(path, &descs, &want)?;
    for (layer, (w, b)) in net.layers_mut().into_iter().zip(params) {
        layer.weight = w;
        layer.bias = b;
    }
    Ok(net)
}

pub fn save_enhance_net(path: impl AsRef<Path>, net: &EnhanceNet<f32>) -> Result<()> {
    let params: Vec<_> = net
        .layers()
        .into_iter()
        .map(|l| (l.weight.clone(), l.bias.clone()))
        .collect();
    write_weights(path.as_ref(), &descs_2d(net), params.into_iter())
}

pub fn load_enhance_net(path: impl AsRef<Path>) -> Result<EnhanceNet<f32>> {
    let path = path.as_ref();
    let (descs, params) = read_weights(path)?;
    // Recover the width schedule from the header: layers run
    // head(2) + 3*depth down + 3*depth up + tail(2).
    if descs.len() < 10 || (descs.len() - 4) % 6 != 0 {
        return Err(Error::MalformedHeader { path: path.into(), detail: "layer count".into() });
    }
    let depth = (descs.len() - 4) / 6;
    let base_width = descs[0].out_ch;
    let width_cap = descs.iter().map(|d| d.out_ch).max().unwrap();
    let config = EnhanceNetConfig { depth, base_width, width_cap };
    let mut net = build_enhance_net::<f32>(config).map_err(Error::Core)?;
    let want = descs_2d(&net);
    validate_topology(path, &descs, &want)?;
    for (layer, (w, b)) in net.layers_mut().into_iter().zip(params) {
        layer.weight = w;
        layer.bias = b;
    }
    Ok(net)
}

fn validate_topology(path: &Path, got: &[LayerDesc], want: &[LayerDesc]) -> Result<()> {
    if got.len() != want.len() {
        return Err(Error::TopologyMismatch {
            path: path.into(),
            layer: 0,
            detail: format!("{} layers in file, architecture has {}", got.len(), want.len()),
        });
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if g != w {
            return Err(Error::TopologyMismatch {
                path: path.into(),
                layer: i,
                detail: format!("file has `{}`, architecture wants `{}`", g.line(), w.line()),
            });
        }
    }
    Ok(())
}

/// Writes `bundle.meta` plus one `k<offset>.wts` per offset class.
pub fn save_bundle(dir: impl AsRef<Path>, bundle: &ModelBundle) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta_path = dir.join("bundle.meta");
    let mut meta = String::new();
    meta.push_str(&format!("ratio = {}\n", bundle.ratio));
    meta.push_str(&format!("depth = {}\n", bundle.config.depth));
    meta.push_str(&format!("base_width = {}\n", bundle.config.base_width));
    meta.push_str(&format!("width_cap = {}\n", bundle.config.width_cap));
    meta.push_str(&format!("seed = {}\n", bundle.hyper.seed));
    meta.push_str(&format!("epochs = {}\n", bundle.hyper.epochs));
    meta.push_str(&format!("lr = {}\n", bundle.hyper.lr));
    meta.push_str(&format!("batch = {}\n", bundle.hyper.batch));
    for (i, curve) in bundle.losses.iter().enumerate() {
        let vals: Vec<String> = curve.iter().map(|v| format!("{v}")).collect();
        meta.push_str(&format!("loss_k{} = {}\n", i + 1, vals.join(",")));
    }
    let mut file = fs::File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    file.write_all(meta.as_bytes()).map_err(|e| Error::io(&meta_path, e))?;
    for (i, net) in bundle.nets.iter().enumerate() {
        save_interp_net(dir.join(format!("k{}.wts", i + 1)), net)?;
    }
    Ok(())
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<ModelBundle> {
    let dir = dir.as_ref();
    let meta_path = dir.join("bundle.meta");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let kv = parse_kv(&text).map_err(Error::Config)?;
    let get = |key: &str| -> Result<&str> {
        kv.get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Config(format!("{}: missing key `{key}`", meta_path.display())))
    };
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad `{key}`", meta_path.display())))
    };
    let ratio = parse_usize("ratio")?;
    let config = InterpNetConfig {
        depth: parse_usize("depth")?,
        base_width: parse_usize("base_width")?,
        width_cap: parse_usize("width_cap")?,
    };
    let hyper = TrainHyper {
        epochs: parse_usize("epochs")?,
        lr: get("lr")?
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad `lr`", meta_path.display())))?,
        batch: parse_usize("batch")?,
        seed: get("seed")?
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad `seed`", meta_path.display())))?,
    };
    let classes = ratio / 2;
    let mut nets = Vec::with_capacity(classes);
    let mut losses = Vec::with_capacity(classes);
    for k in 1..=classes {
        nets.push(load_interp_net(dir.join(format!("k{k}.wts")), config)?);
        let curve = match kv.get(&format!("loss_k{k}")) {
            Some(s) if !s.is_empty() => s
                .split(',')
                .map(|t| t.trim().parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|_| Error::Config(format!("{}: bad loss_k{k}", meta_path.display())))?,
            _ => Vec::new(),
        };
        losses.push(curve);
    }
    Ok(ModelBundle { ratio, config, hyper, nets, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sct_core::rng::SplitMix64;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sct-weights-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn small_net(seed: u64) -> InterpNet<f32> {
        let cfg = InterpNetConfig { depth: 2, base_width: 4, width_cap: 8 };
        let mut rng = SplitMix64::new(seed);
        build_interp_net::<f32>(cfg).unwrap().init(&mut rng)
    }

    #[test]
    fn interp_net_roundtrip_is_bit_exact() {
        let net = small_net(5);
        let path = tmp("net.wts");
        save_interp_net(&path, &net).unwrap();
        let cfg = InterpNetConfig { depth: 2, base_width: 4, width_cap: 8 };
        let loaded = load_interp_net(&path, cfg).unwrap();
        for (a, b) in net.layers().iter().zip(loaded.layers()) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
        }
        // Second save produces identical bytes.
        let path2 = tmp("net2.wts");
        save_interp_net(&path2, &loaded).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn wrong_architecture_rejected() {
        let net = small_net(5);
        let path = tmp("topo.wts");
        save_interp_net(&path, &net).unwrap();
        let other = InterpNetConfig { depth: 2, base_width: 8, width_cap: 16 };
        assert!(matches!(
            load_interp_net(&path, other),
            Err(Error::TopologyMismatch { .. })
        ));
    }

    #[test]
    fn corrupt_payload_rejected() {
        let net = small_net(5);
        let path = tmp("corrupt.wts");
        save_interp_net(&path, &net).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_weights(&path), Err(Error::TruncatedPayload { .. })));
        fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_weights(&path), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn bundle_roundtrip() {
        let cfg = InterpNetConfig { depth: 2, base_width: 4, width_cap: 8 };
        let bundle = ModelBundle {
            ratio: 4,
            config: cfg,
            hyper: TrainHyper { epochs: 2, lr: 2e-4, batch: 8, seed: 9 },
            nets: vec![small_net(1), small_net(2)],
            losses: vec![vec![0.5, 0.25], vec![0.75, 0.5]],
        };
        let dir = tmp("bundle_dir");
        save_bundle(&dir, &bundle).unwrap();
        assert!(dir.join("bundle.meta").exists());
        assert!(dir.join("k1.wts").exists());
        assert!(dir.join("k2.wts").exists());
        let loaded = load_bundle(&dir).unwrap();
        assert_eq!(loaded.ratio, 4);
        assert_eq!(loaded.config, cfg);
        assert_eq!(loaded.hyper.epochs, 2);
        assert_eq!(loaded.hyper.batch, 8);
        assert_eq!(loaded.hyper.seed, 9);
        assert_eq!(loaded.losses, bundle.losses);
        for (a, b) in bundle.nets.iter().zip(&loaded.nets) {
            for (la, lb) in a.layers().iter().zip(b.layers()) {
                assert_eq!(la.weight, lb.weight);
            }
        }
    }

    #[test]
    fn enhance_net_roundtrip() {
        use sct_core::enhance::EnhanceNetConfig;
        let cfg = EnhanceNetConfig { depth: 2, base_width: 4, width_cap: 16 };
        let mut rng = SplitMix64::new(11);
        let net = build_enhance_net::<f32>(cfg).unwrap().init(&mut rng);
        let path = tmp("enh.wts");
        save_enhance_net(&path, &net).unwrap();
        let loaded = load_enhance_net(&path).unwrap();
        assert_eq!(loaded.config, cfg);
        for (a, b) in net.layers().iter().zip(loaded.layers()) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
        }
    }
}
