//! The seven neural architectures on top of the autodiff graph.
//!
//! Every network ends in the shared fully connected head (256, 128, then
//! the class layer) with ReLU inside; the 128-unit activation is the
//! embedding used by contrastive and triplet pretraining.

use super::spec::{FeatureSet, FeatureShapes, ModelKind, NeuralHyper};
use crate::autodiff::lstm::{bilstm_sequence, lstm_sequence, LstmVars};
use crate::autodiff::{init, Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::features::{spectral_features, statistical_features, FeatureConfig};
use crate::parallel::{default_mode, try_map_indexed};
use crate::preprocess::Segment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One batch of model inputs. Layouts: temporal `[B,S,C]`, statistical
/// `[B,4C]`, spectral `[B,C,K,S]` (image layout for the conv stacks).
#[derive(Debug, Clone)]
pub struct Batch {
    pub ids: Vec<u64>,
    pub labels: Vec<usize>,
    pub temporal: Option<Tensor>,
    pub statistical: Option<Tensor>,
    pub spectral: Option<Tensor>,
}

impl Batch {
    /// Extracts exactly the representations in `needs` from the segments.
    pub fn from_segments(
        segments: &[&Segment],
        needs: FeatureSet,
        config: &FeatureConfig,
    ) -> Result<Batch> {
        let b = segments.len();
        let ids = segments.iter().map(|s| s.id).collect();
        let labels = segments.iter().map(|s| s.label.class_index).collect();
        let (s, c) = segments
            .first()
            .map(|seg| (seg.data.rows(), seg.data.cols()))
            .unwrap_or((0, 0));

        let temporal = needs.temporal.then(|| {
            let mut data = Vec::with_capacity(b * s * c);
            for seg in segments {
                data.extend_from_slice(seg.data.data());
            }
            Tensor::new(vec![b, s, c], data)
        });
        let statistical = needs.statistical.then(|| {
            let mut data = Vec::with_capacity(b * 4 * c);
            for seg in segments {
                data.extend(statistical_features(seg));
            }
            Tensor::new(vec![b, 4 * c], data)
        });
        let spectral = if needs.spectral {
            let k = config.cwt_scales;
            let per_seg = try_map_indexed(b, default_mode(), |i| {
                let sp = spectral_features(segments[i], config)?;
                // [K,S,C] -> [C,K,S]
                let mut img = vec![0.0; c * k * s];
                for ki in 0..k {
                    for t in 0..s {
                        for ch in 0..c {
                            img[(ch * k + ki) * s + t] = sp.get(ki, t, ch);
                        }
                    }
                }
                Ok::<Vec<f64>, Error>(img)
            })?;
            let mut data = Vec::with_capacity(b * c * k * s);
            for img in per_seg {
                data.extend(img);
            }
            Some(Tensor::new(vec![b, c, k, s], data))
        } else {
            None
        };
        Ok(Batch {
            ids,
            labels,
            temporal,
            statistical,
            spectral,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct LinearIdx {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct LstmIdx {
    w: usize,
    u: usize,
    b: usize,
    hidden: usize,
}

#[derive(Debug, Clone, Copy)]
struct ConvIdx {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct NormIdx {
    gain: usize,
    bias: usize,
}

#[derive(Debug, Clone, Copy)]
struct HeadIdx {
    fc1: LinearIdx,
    fc2: LinearIdx,
    fc3: LinearIdx,
}

#[derive(Debug, Clone, Copy)]
struct TransformerLayerIdx {
    wq: LinearIdx,
    wk: LinearIdx,
    wv: LinearIdx,
    wo: LinearIdx,
    ln1: NormIdx,
    ff1: LinearIdx,
    ff2: LinearIdx,
    ln2: NormIdx,
}

#[derive(Debug, Clone, Copy)]
struct ResBlockIdx {
    conv1: ConvIdx,
    conv2: ConvIdx,
    shortcut: ConvIdx,
}

#[derive(Debug, Clone)]
enum Arch {
    Lstm {
        cell: LstmIdx,
        head: HeadIdx,
    },
    BiLstm {
        l1f: LstmIdx,
        l1b: LstmIdx,
        l2f: LstmIdx,
        l2b: LstmIdx,
        head: HeadIdx,
    },
    LstmAttention {
        l1: LstmIdx,
        l2: LstmIdx,
        attn_w: LinearIdx,
        attn_v: usize,
        head: HeadIdx,
    },
    Cnn1d {
        conv1: ConvIdx,
        conv2: ConvIdx,
        head: HeadIdx,
    },
    Transformer {
        proj: LinearIdx,
        pos: usize,
        layers: Vec<TransformerLayerIdx>,
        head: HeadIdx,
    },
    ResNet {
        blocks: Vec<ResBlockIdx>,
        head: HeadIdx,
    },
    MrNet {
        lstm: LstmIdx,
        stat: LinearIdx,
        conv1: ConvIdx,
        conv2: ConvIdx,
        head: HeadIdx,
    },
}

/// Graph handles for one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct NetOutput {
    pub logits: Var,
    /// 128-unit penultimate activation (pre-normalization).
    pub embedding: Var,
}

/// A neural classifier: parameter storage plus the recipe to rebuild its
/// graph for any batch.
#[derive(Debug, Clone)]
pub struct NeuralNet {
    pub kind: ModelKind,
    pub shapes: FeatureShapes,
    pub hyper: NeuralHyper,
    pub num_classes: usize,
    pub params: Vec<Tensor>,
    pub names: Vec<String>,
    arch: Arch,
}

struct ParamBank<'r> {
    rng: &'r mut ChaCha8Rng,
    tensors: Vec<Tensor>,
    names: Vec<String>,
}

impl ParamBank<'_> {
    fn push(&mut self, name: String, t: Tensor) -> usize {
        self.tensors.push(t);
        self.names.push(name);
        self.tensors.len() - 1
    }

    fn linear(&mut self, name: &str, fan_in: usize, out: usize) -> LinearIdx {
        let w = init::uniform(self.rng, vec![fan_in, out], fan_in);
        let w = self.push(format!("{name}.w"), w);
        let b = self.push(format!("{name}.b"), init::zeros(vec![out]));
        LinearIdx { w, b }
    }

    fn lstm(&mut self, name: &str, input: usize, hidden: usize) -> LstmIdx {
        let (w, u, b) = init::lstm(self.rng, input, hidden);
        let w = self.push(format!("{name}.w"), w);
        let u = self.push(format!("{name}.u"), u);
        let b = self.push(format!("{name}.b"), b);
        LstmIdx { w, u, b, hidden }
    }

    fn conv1d(&mut self, name: &str, cin: usize, cout: usize, k: usize) -> ConvIdx {
        let w = init::uniform(self.rng, vec![cout, cin, k], cin * k);
        let w = self.push(format!("{name}.w"), w);
        let b = self.push(format!("{name}.b"), init::zeros(vec![cout]));
        ConvIdx { w, b }
    }

    fn conv2d(&mut self, name: &str, cin: usize, cout: usize, k: usize) -> ConvIdx {
        let w = init::uniform(self.rng, vec![cout, cin, k, k], cin * k * k);
        let w = self.push(format!("{name}.w"), w);
        let b = self.push(format!("{name}.b"), init::zeros(vec![cout]));
        ConvIdx { w, b }
    }

    fn norm(&mut self, name: &str, dim: usize) -> NormIdx {
        let gain = self.push(format!("{name}.gain"), init::full(vec![dim], 1.0));
        let bias = self.push(format!("{name}.bias"), init::zeros(vec![dim]));
        NormIdx { gain, bias }
    }

    fn head(&mut self, fan_in: usize, hyper: &NeuralHyper, num_classes: usize) -> HeadIdx {
        let fc1 = self.linear("head.fc1", fan_in, hyper.head.0);
        let fc2 = self.linear("head.fc2", hyper.head.0, hyper.head.1);
        let fc3 = self.linear("head.fc3", hyper.head.1, num_classes);
        HeadIdx { fc1, fc2, fc3 }
    }
}

impl NeuralNet {
    /// Builds one of the seven architectures with seeded initialization.
    pub fn build(
        kind: ModelKind,
        shapes: FeatureShapes,
        hyper: NeuralHyper,
        num_classes: usize,
        seed: u64,
    ) -> NeuralNet {
        assert!(kind.is_neural(), "{kind} is not a neural kind");
        let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, &format!("init-{kind}")));
        let mut bank = ParamBank {
            rng: &mut rng,
            tensors: Vec::new(),
            names: Vec::new(),
        };
        let c = shapes.channels;
        let h = hyper.lstm_hidden;
        let arch = match kind {
            ModelKind::Lstm => {
                let cell = bank.lstm("lstm", c, h);
                let head = bank.head(h, &hyper, num_classes);
                Arch::Lstm { cell, head }
            }
            ModelKind::Bilstm => {
                let l1f = bank.lstm("l1.fwd", c, h);
                let l1b = bank.lstm("l1.bwd", c, h);
                let l2f = bank.lstm("l2.fwd", 2 * h, h);
                let l2b = bank.lstm("l2.bwd", 2 * h, h);
                let head = bank.head(2 * h, &hyper, num_classes);
                Arch::BiLstm {
                    l1f,
                    l1b,
                    l2f,
                    l2b,
                    head,
                }
            }
            ModelKind::LstmAttention => {
                let l1 = bank.lstm("l1", c, h);
                let l2 = bank.lstm("l2", h, h);
                let attn_w = bank.linear("attn.w", h, hyper.attention_dim);
                let v = init::uniform(bank.rng, vec![hyper.attention_dim, 1], hyper.attention_dim);
                let attn_v = bank.push("attn.v".into(), v);
                let head = bank.head(h, &hyper, num_classes);
                Arch::LstmAttention {
                    l1,
                    l2,
                    attn_w,
                    attn_v,
                    head,
                }
            }
            ModelKind::Cnn1d => {
                let (f1, f2) = hyper.cnn_filters;
                let conv1 = bank.conv1d("conv1", c, f1, hyper.kernel_size);
                let conv2 = bank.conv1d("conv2", f1, f2, hyper.kernel_size);
                let head = bank.head(f2 * shapes.steps, &hyper, num_classes);
                Arch::Cnn1d { conv1, conv2, head }
            }
            ModelKind::Transformer => {
                let d = hyper.d_model;
                assert_eq!(
                    d % hyper.transformer_heads,
                    0,
                    "d_model {d} not divisible by {} heads",
                    hyper.transformer_heads
                );
                let proj = bank.linear("proj", c, d);
                let pos = init::uniform(bank.rng, vec![shapes.steps, d], d);
                let pos = bank.push("pos".into(), pos);
                let layers = (0..hyper.transformer_layers)
                    .map(|l| TransformerLayerIdx {
                        wq: bank.linear(&format!("t{l}.wq"), d, d),
                        wk: bank.linear(&format!("t{l}.wk"), d, d),
                        wv: bank.linear(&format!("t{l}.wv"), d, d),
                        wo: bank.linear(&format!("t{l}.wo"), d, d),
                        ln1: bank.norm(&format!("t{l}.ln1"), d),
                        ff1: bank.linear(&format!("t{l}.ff1"), d, hyper.ff_width),
                        ff2: bank.linear(&format!("t{l}.ff2"), hyper.ff_width, d),
                        ln2: bank.norm(&format!("t{l}.ln2"), d),
                    })
                    .collect();
                let head = bank.head(d, &hyper, num_classes);
                Arch::Transformer {
                    proj,
                    pos,
                    layers,
                    head,
                }
            }
            ModelKind::Resnet => {
                let mut cin = c;
                let blocks = hyper
                    .resnet_channels
                    .iter()
                    .enumerate()
                    .map(|(i, &cout)| {
                        let block = ResBlockIdx {
                            conv1: bank.conv2d(&format!("b{i}.conv1"), cin, cout, 3),
                            conv2: bank.conv2d(&format!("b{i}.conv2"), cout, cout, 3),
                            shortcut: bank.conv2d(&format!("b{i}.shortcut"), cin, cout, 1),
                        };
                        cin = cout;
                        block
                    })
                    .collect();
                let head = bank.head(cin, &hyper, num_classes);
                Arch::ResNet { blocks, head }
            }
            ModelKind::Mrnet => {
                let lstm = bank.lstm("temporal.lstm", c, h);
                let stat = bank.linear("statistical.fc", 4 * c, 64.min(hyper.head.1));
                let (f1, f2) = hyper.mrnet_conv;
                let conv1 = bank.conv2d("spectral.conv1", c, f1, 3);
                let conv2 = bank.conv2d("spectral.conv2", f1, f2, 3);
                let stat_out = 64.min(hyper.head.1);
                let head = bank.head(h + stat_out + f2, &hyper, num_classes);
                Arch::MrNet {
                    lstm,
                    stat,
                    conv1,
                    conv2,
                    head,
                }
            }
            other => unreachable!("{other} is classical"),
        };
        NeuralNet {
            kind,
            shapes,
            hyper,
            num_classes,
            params: bank.tensors,
            names: bank.names,
            arch,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Registers every parameter; trainable leaves when `trainable`, frozen
    /// constants otherwise (evaluation passes).
    pub fn register(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| {
                if trainable {
                    g.leaf(p.clone())
                } else {
                    g.constant(p.clone())
                }
            })
            .collect()
    }

    /// Builds the forward graph for a batch, returning logits and the
    /// penultimate embedding.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], batch: &Batch) -> Result<NetOutput> {
        let temporal = || {
            batch.temporal.clone().ok_or_else(|| {
                Error::MissingRepresentation(format!("temporal (needed by {})", self.kind))
            })
        };
        let statistical = || {
            batch.statistical.clone().ok_or_else(|| {
                Error::MissingRepresentation(format!("statistical (needed by {})", self.kind))
            })
        };
        let spectral = || {
            batch.spectral.clone().ok_or_else(|| {
                Error::MissingRepresentation(format!("spectral (needed by {})", self.kind))
            })
        };
        let lv = |idx: &LstmIdx| LstmVars {
            w: vars[idx.w],
            u: vars[idx.u],
            b: vars[idx.b],
            hidden: idx.hidden,
        };

        let (feature, head) = match &self.arch {
            Arch::Lstm { cell, head } => {
                let x = g.constant(temporal()?);
                let (_, final_h) = lstm_sequence(g, x, &lv(cell), false);
                (final_h, head)
            }
            Arch::BiLstm {
                l1f,
                l1b,
                l2f,
                l2b,
                head,
            } => {
                let x = g.constant(temporal()?);
                let (out1, _) = bilstm_sequence(g, x, &lv(l1f), &lv(l1b));
                let (_, finals) = bilstm_sequence(g, out1, &lv(l2f), &lv(l2b));
                (finals, head)
            }
            Arch::LstmAttention {
                l1,
                l2,
                attn_w,
                attn_v,
                head,
            } => {
                let x = g.constant(temporal()?);
                let (out1, _) = lstm_sequence(g, x, &lv(l1), false);
                let (out2, _) = lstm_sequence(g, out1, &lv(l2), false);
                let shape = g.value(out2).shape().to_vec();
                let (b, s, h) = (shape[0], shape[1], shape[2]);
                // additive attention: softmax over vᵀ·tanh(W·h_t)
                let flat = g.reshape(out2, vec![b * s, h]);
                let pre = g.linear(flat, vars[attn_w.w], vars[attn_w.b]);
                let act = g.tanh(pre);
                let scores = g.matmul(act, vars[*attn_v]);
                let scores = g.reshape(scores, vec![b, s]);
                let weights = g.softmax_last(scores);
                let weights = g.reshape(weights, vec![b, 1, s]);
                let ctx = g.bmm(weights, out2);
                let ctx = g.reshape(ctx, vec![b, h]);
                (ctx, head)
            }
            Arch::Cnn1d { conv1, conv2, head } => {
                let x = g.constant(temporal()?);
                let shape = g.value(x).shape().to_vec();
                let (b, s, c) = (shape[0], shape[1], shape[2]);
                let x = g.permute(x, &[0, 2, 1]); // [B,C,S]
                let y1 = g.conv1d_same(x, vars[conv1.w], vars[conv1.b]);
                let a1 = g.relu(y1);
                let y2 = g.conv1d_same(a1, vars[conv2.w], vars[conv2.b]);
                let a2 = g.relu(y2);
                let _ = c;
                let f2 = self.hyper.cnn_filters.1;
                let flat = g.reshape(a2, vec![b, f2 * s]);
                (flat, head)
            }
            Arch::Transformer {
                proj,
                pos,
                layers,
                head,
            } => {
                let x = g.constant(temporal()?);
                let shape = g.value(x).shape().to_vec();
                let (b, s, c) = (shape[0], shape[1], shape[2]);
                let d = self.hyper.d_model;
                let heads = self.hyper.transformer_heads;
                let dh = d / heads;
                let flat = g.reshape(x, vec![b * s, c]);
                let projected = g.linear(flat, vars[proj.w], vars[proj.b]);
                let seq = g.reshape(projected, vec![b, s, d]);
                let seq = g.add_bcast0(seq, vars[*pos]);
                let mut x = g.reshape(seq, vec![b * s, d]);
                for layer in layers {
                    let split = |g: &mut Graph, v: Var| {
                        let r = g.reshape(v, vec![b, s, heads, dh]);
                        let p = g.permute(r, &[0, 2, 1, 3]);
                        g.reshape(p, vec![b * heads, s, dh])
                    };
                    let q0 = g.linear(x, vars[layer.wq.w], vars[layer.wq.b]);
                    let k0 = g.linear(x, vars[layer.wk.w], vars[layer.wk.b]);
                    let v0 = g.linear(x, vars[layer.wv.w], vars[layer.wv.b]);
                    let q = split(g, q0);
                    let k = split(g, k0);
                    let v = split(g, v0);
                    let scores = g.bmm_nt(q, k);
                    let scores = g.scale(scores, 1.0 / (dh as f64).sqrt());
                    let attn = g.softmax_last(scores);
                    let ctx = g.bmm(attn, v);
                    let ctx = g.reshape(ctx, vec![b, heads, s, dh]);
                    let ctx = g.permute(ctx, &[0, 2, 1, 3]);
                    let ctx = g.reshape(ctx, vec![b * s, d]);
                    let attn_out = g.linear(ctx, vars[layer.wo.w], vars[layer.wo.b]);
                    let res1 = g.add(x, attn_out);
                    let n1 = g.layer_norm(res1, vars[layer.ln1.gain], vars[layer.ln1.bias]);
                    let f1 = g.linear(n1, vars[layer.ff1.w], vars[layer.ff1.b]);
                    let f1 = g.relu(f1);
                    let f2 = g.linear(f1, vars[layer.ff2.w], vars[layer.ff2.b]);
                    let res2 = g.add(n1, f2);
                    x = g.layer_norm(res2, vars[layer.ln2.gain], vars[layer.ln2.bias]);
                }
                let seq = g.reshape(x, vec![b, s, d]);
                let pooled = g.mean_axis1(seq);
                (pooled, head)
            }
            Arch::ResNet { blocks, head } => {
                let mut x = g.constant(spectral()?);
                for block in blocks {
                    let y = g.conv2d(x, vars[block.conv1.w], vars[block.conv1.b], 2, 1);
                    let y = g.relu(y);
                    let y = g.conv2d(y, vars[block.conv2.w], vars[block.conv2.b], 1, 1);
                    let sc = g.conv2d(x, vars[block.shortcut.w], vars[block.shortcut.b], 2, 0);
                    let sum = g.add(y, sc);
                    x = g.relu(sum);
                }
                let pooled = g.global_avg_pool2d(x);
                (pooled, head)
            }
            Arch::MrNet {
                lstm,
                stat,
                conv1,
                conv2,
                head,
            } => {
                let xt = g.constant(temporal()?);
                let (_, t_feat) = lstm_sequence(g, xt, &lv(lstm), false);
                let xs = g.constant(statistical()?);
                let s_pre = g.linear(xs, vars[stat.w], vars[stat.b]);
                let s_feat = g.relu(s_pre);
                let xp = g.constant(spectral()?);
                let y1 = g.conv2d(xp, vars[conv1.w], vars[conv1.b], 1, 1);
                let a1 = g.relu(y1);
                let p1 = g.max_pool2d(a1, 2);
                let y2 = g.conv2d(p1, vars[conv2.w], vars[conv2.b], 1, 1);
                let a2 = g.relu(y2);
                let p_feat = g.global_avg_pool2d(a2);
                let feat = g.concat_last(&[t_feat, s_feat, p_feat]);
                (feat, head)
            }
        };

        let h1 = g.linear(feature, vars[head.fc1.w], vars[head.fc1.b]);
        let a1 = g.relu(h1);
        let h2 = g.linear(a1, vars[head.fc2.w], vars[head.fc2.b]);
        let embedding = g.relu(h2);
        let logits = g.linear(embedding, vars[head.fc3.w], vars[head.fc3.b]);
        Ok(NetOutput { logits, embedding })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ActivityLabel;
    use crate::mat::Mat;

    fn shapes() -> FeatureShapes {
        FeatureShapes {
            steps: 12,
            channels: 3,
            scales: 6,
        }
    }

    fn segments(n: usize) -> Vec<Segment> {
        (0..n)
            .map(|i| {
                let s = shapes();
                let mut data = Vec::new();
                for t in 0..s.steps {
                    for c in 0..s.channels {
                        data.push(((t + c + i) as f64 * 0.37).sin() * 0.4 + 0.5);
                    }
                }
                Segment {
                    id: i as u64,
                    data: Mat::from_vec(s.steps, s.channels, data),
                    label: ActivityLabel {
                        class_index: i % 6,
                        class_name: format!("class_{}", i % 6),
                    },
                    user_id: 0,
                    source_recording: 0,
                    start_index: 0,
                }
            })
            .collect()
    }

    fn fconfig() -> FeatureConfig {
        FeatureConfig {
            cwt_scales: shapes().scales,
            ..FeatureConfig::default()
        }
    }

    fn neural_kinds() -> Vec<ModelKind> {
        ModelKind::ALL.iter().copied().filter(|k| k.is_neural()).collect()
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        for kind in neural_kinds() {
            let a = NeuralNet::build(kind, shapes(), NeuralHyper::toy(), 6, 33);
            let b = NeuralNet::build(kind, shapes(), NeuralHyper::toy(), 6, 33);
            assert_eq!(a.params.len(), b.params.len());
            for (x, y) in a.params.iter().zip(&b.params) {
                assert_eq!(x.data(), y.data(), "{kind} init differs across builds");
            }
            let c = NeuralNet::build(kind, shapes(), NeuralHyper::toy(), 6, 34);
            assert!(
                a.params.iter().zip(&c.params).any(|(x, y)| x.data() != y.data()),
                "{kind} ignored the seed"
            );
        }
    }

    #[test]
    fn lstm_parameter_count_matches_closed_form() {
        let net = NeuralNet::build(ModelKind::Lstm, shapes(), NeuralHyper::default(), 6, 0);
        let (input, hidden) = (3usize, 64usize);
        let cell = 4 * (input + hidden + 1) * hidden;
        let head = (hidden * 256 + 256) + (256 * 128 + 128) + (128 * 6 + 6);
        assert_eq!(net.param_count(), cell + head);
    }

    #[test]
    fn every_arch_produces_valid_probabilities() {
        let segs = segments(5);
        let refs: Vec<&Segment> = segs.iter().collect();
        for kind in neural_kinds() {
            let net = NeuralNet::build(kind, shapes(), NeuralHyper::toy(), 6, 1);
            let spec = super::super::spec::ModelSpec {
                kind,
                num_classes: 6,
                classical: Default::default(),
                neural: NeuralHyper::toy(),
            };
            let batch = Batch::from_segments(&refs, spec.input_features(), &fconfig()).unwrap();
            let mut g = Graph::new();
            let vars = net.register(&mut g, false);
            let out = net.forward(&mut g, &vars, &batch).unwrap();
            let logits = g.value(out.logits);
            assert_eq!(logits.shape(), &[5, 6], "{kind} logit shape");
            let emb = g.value(out.embedding);
            assert_eq!(emb.shape()[1], NeuralHyper::toy().head.1, "{kind} embedding dim");
            for row in logits.data().chunks(6) {
                let mut p = row.to_vec();
                crate::autodiff::graph::softmax_slice(&mut p);
                let sum: f64 = p.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "{kind} probabilities sum {sum}");
            }
        }
    }

    #[test]
    fn missing_representation_is_a_named_error() {
        let segs = segments(2);
        let refs: Vec<&Segment> = segs.iter().collect();
        let net = NeuralNet::build(ModelKind::Resnet, shapes(), NeuralHyper::toy(), 6, 1);
        // temporal-only batch cannot feed the spectral ResNet
        let batch = Batch::from_segments(&refs, FeatureSet::TEMPORAL, &fconfig()).unwrap();
        let mut g = Graph::new();
        let vars = net.register(&mut g, false);
        match net.forward(&mut g, &vars, &batch) {
            Err(Error::MissingRepresentation(what)) => assert!(what.contains("spectral")),
            other => panic!("expected MissingRepresentation, got {other:?}"),
        }
    }

    #[test]
    fn batch_size_does_not_change_outputs() {
        let segs = segments(8);
        let refs: Vec<&Segment> = segs.iter().collect();
        for kind in neural_kinds() {
            let net = NeuralNet::build(kind, shapes(), NeuralHyper::toy(), 6, 5);
            let spec = super::super::spec::ModelSpec {
                kind,
                num_classes: 6,
                classical: Default::default(),
                neural: NeuralHyper::toy(),
            };
            let needs = spec.input_features();
            let full = Batch::from_segments(&refs, needs, &fconfig()).unwrap();
            let mut g = Graph::new();
            let vars = net.register(&mut g, false);
            let out = net.forward(&mut g, &vars, &full).unwrap();
            let full_logits = g.value(out.logits).data().to_vec();

            let solo = Batch::from_segments(&refs[3..4], needs, &fconfig()).unwrap();
            let mut g1 = Graph::new();
            let vars1 = net.register(&mut g1, false);
            let out1 = net.forward(&mut g1, &vars1, &solo).unwrap();
            let solo_logits = g1.value(out1.logits).data().to_vec();
            for (a, b) in full_logits[3 * 6..4 * 6].iter().zip(&solo_logits) {
                assert!((a - b).abs() < 1e-10, "{kind}: batch {a} vs solo {b}");
            }
        }
    }

    #[test]
    fn mrnet_head_sees_concatenated_subnetwork_outputs() {
        // Sub-networks recomputed in isolation must concatenate to the
        // feature the head consumed.
        let segs = segments(3);
        let refs: Vec<&Segment> = segs.iter().collect();
        let hyper = NeuralHyper::toy();
        let net = NeuralNet::build(ModelKind::Mrnet, shapes(), hyper.clone(), 6, 2);
        let batch = Batch::from_segments(&refs, FeatureSet::ALL, &fconfig()).unwrap();

        let (lstm, stat, conv1, conv2) = match &net.arch {
            Arch::MrNet {
                lstm,
                stat,
                conv1,
                conv2,
                ..
            } => (*lstm, *stat, *conv1, *conv2),
            _ => unreachable!(),
        };

        // isolated temporal branch
        let mut g = Graph::new();
        let vars = net.register(&mut g, false);
        let xt = g.constant(batch.temporal.clone().unwrap());
        let (_, t_feat) = lstm_sequence(
            &mut g,
            xt,
            &LstmVars {
                w: vars[lstm.w],
                u: vars[lstm.u],
                b: vars[lstm.b],
                hidden: lstm.hidden,
            },
            false,
        );
        let t_data = g.value(t_feat).data().to_vec();
        // isolated statistical branch
        let xs = g.constant(batch.statistical.clone().unwrap());
        let sp = g.linear(xs, vars[stat.w], vars[stat.b]);
        let s_feat = g.relu(sp);
        let s_data = g.value(s_feat).data().to_vec();
        // isolated spectral branch
        let xp = g.constant(batch.spectral.clone().unwrap());
        let y1 = g.conv2d(xp, vars[conv1.w], vars[conv1.b], 1, 1);
        let a1 = g.relu(y1);
        let p1 = g.max_pool2d(a1, 2);
        let y2 = g.conv2d(p1, vars[conv2.w], vars[conv2.b], 1, 1);
        let a2 = g.relu(y2);
        let p_feat = g.global_avg_pool2d(a2);
        let p_data = g.value(p_feat).data().to_vec();

        // full forward, then recompute the head on the isolated concat
        let mut g2 = Graph::new();
        let vars2 = net.register(&mut g2, false);
        let out = net.forward(&mut g2, &vars2, &batch).unwrap();
        let logits_full = g2.value(out.logits).data().to_vec();

        let (th, sh, ph) = (lstm.hidden, s_data.len() / 3, p_data.len() / 3);
        let mut concat = Vec::new();
        for b in 0..3 {
            concat.extend_from_slice(&t_data[b * th..(b + 1) * th]);
            concat.extend_from_slice(&s_data[b * sh..(b + 1) * sh]);
            concat.extend_from_slice(&p_data[b * ph..(b + 1) * ph]);
        }
        let mut g3 = Graph::new();
        let vars3 = net.register(&mut g3, false);
        let feat = g3.constant(Tensor::new(vec![3, th + sh + ph], concat));
        let head = match &net.arch {
            Arch::MrNet { head, .. } => *head,
            _ => unreachable!(),
        };
        let h1 = g3.linear(feat, vars3[head.fc1.w], vars3[head.fc1.b]);
        let a1 = g3.relu(h1);
        let h2 = g3.linear(a1, vars3[head.fc2.w], vars3[head.fc2.b]);
        let emb = g3.relu(h2);
        let logits_iso = g3.linear(emb, vars3[head.fc3.w], vars3[head.fc3.b]);
        let logits_iso = g3.value(logits_iso).data().to_vec();
        for (a, b) in logits_full.iter().zip(&logits_iso) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
