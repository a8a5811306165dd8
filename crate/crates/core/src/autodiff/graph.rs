//! Tape-based computation graph with reverse-mode gradients.
//!
//! Operations execute eagerly and append a record to the tape; the tape is
//! topologically ordered by construction, so [`Graph::backward`] is a single
//! reverse sweep. Shape mismatches are programming errors and panic with
//! both shapes; runtime misuse (non-scalar loss, double backward) returns
//! [`Error`].

use super::kernels;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::parallel::for_each_chunk_mut;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Add(usize, usize),
    /// rhs is broadcast across axis 0 of lhs.
    AddBcast0(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Matmul(usize, usize),
    BmmNN(usize, usize),
    BmmNT(usize, usize),
    Linear { x: usize, w: usize, b: usize },
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    SoftmaxLast(usize),
    LayerNorm { x: usize, gain: usize, bias: usize },
    ConcatLast(Vec<usize>),
    StackAxis1(Vec<usize>),
    SliceCols { x: usize, start: usize, len: usize },
    SliceAxis1 { x: usize, t: usize },
    Reshape(usize),
    Permute { x: usize, perm: Vec<usize> },
    SumAll(usize),
    MeanAll(usize),
    MeanAxis1(usize),
    GlobalAvgPool2d(usize),
    Conv1dSame { x: usize, w: usize, b: usize },
    Conv2d { x: usize, w: usize, b: usize, stride: usize, pad: usize },
    MaxPool2d { x: usize, argmax: Vec<usize> },
    L2NormRows(usize),
    Dropout { x: usize, mask: Vec<f64> },
    /// Scalar node with adjoints fixed at forward time (fused losses).
    ScalarFused { inputs: Vec<(usize, Vec<f64>)> },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `v`, shaped like its value. `None` if the node did not
    /// require gradients or was unreachable from the loss.
    pub fn get(&self, v: Var) -> Option<Tensor> {
        self.grads[v.0]
            .as_ref()
            .map(|g| Tensor::new(self.shapes[v.0].clone(), g.clone()))
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        let shape = self.shapes[v.0].clone();
        self.grads[v.0].take().map(|g| Tensor::new(shape, g))
    }
}

/// Eager tape of tensor operations.
pub struct Graph {
    nodes: Vec<Node>,
    backward_done: bool,
    parallel: bool,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

const LN_EPS: f64 = 1e-5;
const L2_EPS: f64 = 1e-12;

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            backward_done: false,
            parallel: crate::parallel::default_mode(),
        }
    }

    /// Forces the kernel dispatch mode regardless of the crate feature.
    pub fn with_mode(parallel: bool) -> Self {
        Graph {
            nodes: Vec::new(),
            backward_done: false,
            parallel,
        }
    }

    /// Registers a tensor; it tracks gradients iff `t.requires_grad`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let needs = t.requires_grad;
        self.push(t, Op::Leaf, needs)
    }

    /// Registers a constant input.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    // ---- elementwise -----------------------------------------------------

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(
            self.shape(a),
            self.shape(b),
            "add: shape mismatch {:?} vs {:?}",
            self.shape(a),
            self.shape(b)
        );
        let data = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| x + y)
            .collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a) || self.needs(b);
        self.push(t, Op::Add(a.0, b.0), needs)
    }

    /// `a + b` where `b`'s shape equals `a`'s shape without the leading axis.
    pub fn add_bcast0(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(
            &self.shape(a)[1..],
            self.shape(b),
            "add_bcast0: shape mismatch {:?} vs {:?}",
            self.shape(a),
            self.shape(b)
        );
        let inner = self.data(b).len();
        let data: Vec<f64> = self
            .data(a)
            .iter()
            .enumerate()
            .map(|(i, x)| x + self.data(b)[i % inner])
            .collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a) || self.needs(b);
        self.push(t, Op::AddBcast0(a.0, b.0), needs)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(
            self.shape(a),
            self.shape(b),
            "mul: shape mismatch {:?} vs {:?}",
            self.shape(a),
            self.shape(b)
        );
        let data = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| x * y)
            .collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a) || self.needs(b);
        self.push(t, Op::Mul(a.0, b.0), needs)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let data = self.data(a).iter().map(|x| x * c).collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::Scale(a.0, c), needs)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let data = self.data(a).iter().map(|x| x.max(0.0)).collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::Relu(a.0), needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let data = self.data(a).iter().map(|x| sigmoid(*x)).collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::Sigmoid(a.0), needs)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let data = self.data(a).iter().map(|x| x.tanh()).collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::Tanh(a.0), needs)
    }

    /// Row-stable softmax over the last axis.
    pub fn softmax_last(&mut self, a: Var) -> Var {
        let last = *self.shape(a).last().expect("softmax on 0-d tensor");
        assert!(last > 0, "softmax over empty axis");
        let mut data = self.data(a).to_vec();
        for row in data.chunks_mut(last) {
            softmax_slice(row);
        }
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::SoftmaxLast(a.0), needs)
    }

    /// Layer normalization over the last axis with learned gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let last = *self.shape(x).last().expect("layer_norm on 0-d tensor");
        assert_eq!(
            self.shape(gain),
            &[last],
            "layer_norm: gain shape {:?} vs feature {:?}",
            self.shape(gain),
            [last]
        );
        assert_eq!(
            self.shape(bias),
            &[last],
            "layer_norm: bias shape {:?} vs feature {:?}",
            self.shape(bias),
            [last]
        );
        let gains = self.data(gain).to_vec();
        let biases = self.data(bias).to_vec();
        let mut data = self.data(x).to_vec();
        for row in data.chunks_mut(last) {
            let mean = row.iter().sum::<f64>() / last as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / last as f64;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for (i, v) in row.iter_mut().enumerate() {
                *v = (*v - mean) * inv * gains[i] + biases[i];
            }
        }
        let t = Tensor::new(self.shape(x).to_vec(), data);
        let needs = self.needs(x) || self.needs(gain) || self.needs(bias);
        self.push(
            t,
            Op::LayerNorm {
                x: x.0,
                gain: gain.0,
                bias: bias.0,
            },
            needs,
        )
    }

    /// Rows scaled to unit Euclidean norm (rows of the last axis).
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let last = *self.shape(a).last().expect("l2_normalize on 0-d tensor");
        let mut data = self.data(a).to_vec();
        for row in data.chunks_mut(last) {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(L2_EPS);
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::L2NormRows(a.0), needs)
    }

    /// Inverted dropout with an explicit RNG; `p = 0` is the identity.
    pub fn dropout(&mut self, a: Var, p: f64, rng: &mut impl rand::Rng) -> Var {
        assert!((0.0..1.0).contains(&p), "dropout p must be in [0,1)");
        if p == 0.0 {
            return a;
        }
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..self.data(a).len())
            .map(|_| {
                if rng.gen::<f64>() < p {
                    0.0
                } else {
                    1.0 / keep
                }
            })
            .collect();
        let data = self
            .data(a)
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        let t = Tensor::new(self.shape(a).to_vec(), data);
        let needs = self.needs(a);
        self.push(t, Op::Dropout { x: a.0, mask }, needs)
    }

    // ---- linear algebra ---------------------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert!(
            sa.len() == 2 && sb.len() == 2 && sa[1] == sb[0],
            "matmul: shape mismatch {:?} vs {:?}",
            sa,
            sb
        );
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let data = kernels::matmul(self.data(a), m, k, self.data(b), n, self.parallel);
        let needs = self.needs(a) || self.needs(b);
        self.push(Tensor::new(vec![m, n], data), Op::Matmul(a.0, b.0), needs)
    }

    /// Batched matmul: `[g,m,k] · [g,k,n] -> [g,m,n]`.
    pub fn bmm(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        assert!(
            sa.len() == 3 && sb.len() == 3 && sa[0] == sb[0] && sa[2] == sb[1],
            "bmm: shape mismatch {:?} vs {:?}",
            sa,
            sb
        );
        let (g, m, k, n) = (sa[0], sa[1], sa[2], sb[2]);
        let data = kernels::bmm(self.data(a), g, m, k, self.data(b), n, self.parallel);
        let needs = self.needs(a) || self.needs(b);
        self.push(Tensor::new(vec![g, m, n], data), Op::BmmNN(a.0, b.0), needs)
    }

    /// Batched matmul with transposed rhs: `[g,m,k] · [g,n,k]ᵀ -> [g,m,n]`.
    pub fn bmm_nt(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        assert!(
            sa.len() == 3 && sb.len() == 3 && sa[0] == sb[0] && sa[2] == sb[2],
            "bmm_nt: shape mismatch {:?} vs {:?}",
            sa,
            sb
        );
        let (g, m, k, n) = (sa[0], sa[1], sa[2], sb[1]);
        let data = kernels::bmm_nt(self.data(a), g, m, k, self.data(b), n, self.parallel);
        let needs = self.needs(a) || self.needs(b);
        self.push(Tensor::new(vec![g, m, n], data), Op::BmmNT(a.0, b.0), needs)
    }

    /// Fully connected layer: `x·w + b` with `x: [B,in]`, `w: [in,out]`, `b: [out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (sx, sw, sb) = (self.shape(x), self.shape(w), self.shape(b));
        assert!(
            sx.len() == 2 && sw.len() == 2 && sx[1] == sw[0] && sb == [sw[1]],
            "linear: shape mismatch x{:?} w{:?} b{:?}",
            sx,
            sw,
            sb
        );
        let (m, k, n) = (sx[0], sx[1], sw[1]);
        let mut data = kernels::matmul(self.data(x), m, k, self.data(w), n, self.parallel);
        let bias = self.data(b);
        for row in data.chunks_mut(n) {
            for (j, v) in row.iter_mut().enumerate() {
                *v += bias[j];
            }
        }
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.push(
            Tensor::new(vec![m, n], data),
            Op::Linear {
                x: x.0,
                w: w.0,
                b: b.0,
            },
            needs,
        )
    }

    // ---- shape ------------------------------------------------------------

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Var {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.data(a).len(),
            "reshape: {:?} incompatible with {:?}",
            self.shape(a),
            shape
        );
        let t = Tensor::new(shape, self.data(a).to_vec());
        let needs = self.needs(a);
        self.push(t, Op::Reshape(a.0), needs)
    }

    pub fn permute(&mut self, a: Var, perm: &[usize]) -> Var {
        let shape = self.shape(a).to_vec();
        assert_eq!(perm.len(), shape.len(), "permute rank mismatch");
        let (data, out_shape) = permute_data(self.data(a), &shape, perm);
        let needs = self.needs(a);
        self.push(
            Tensor::new(out_shape, data),
            Op::Permute {
                x: a.0,
                perm: perm.to_vec(),
            },
            needs,
        )
    }

    /// Concatenation along the last axis; all leading axes must agree.
    pub fn concat_last(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "concat of nothing");
        let lead = self.shape(vars[0])[..self.shape(vars[0]).len() - 1].to_vec();
        let mut lasts = Vec::with_capacity(vars.len());
        for v in vars {
            let s = self.shape(*v);
            assert_eq!(
                &s[..s.len() - 1],
                &lead[..],
                "concat_last: leading shape mismatch {:?} vs {:?}",
                s,
                lead
            );
            lasts.push(*s.last().unwrap());
        }
        let rows: usize = lead.iter().product();
        let total: usize = lasts.iter().sum();
        let mut data = vec![0.0; rows * total];
        for r in 0..rows {
            let mut off = 0;
            for (v, &l) in vars.iter().zip(&lasts) {
                let src = &self.data(*v)[r * l..(r + 1) * l];
                data[r * total + off..r * total + off + l].copy_from_slice(src);
                off += l;
            }
        }
        let mut shape = lead;
        shape.push(total);
        let needs = vars.iter().any(|v| self.needs(*v));
        self.push(
            Tensor::new(shape, data),
            Op::ConcatLast(vars.iter().map(|v| v.0).collect()),
            needs,
        )
    }

    /// Stacks `S` tensors of shape `[B,C]` into `[B,S,C]`.
    pub fn stack_axis1(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "stack of nothing");
        let s0 = self.shape(vars[0]).to_vec();
        assert_eq!(s0.len(), 2, "stack_axis1 expects [B,C] inputs");
        for v in vars {
            assert_eq!(self.shape(*v), &s0[..], "stack_axis1: ragged inputs");
        }
        let (b, c) = (s0[0], s0[1]);
        let s = vars.len();
        let mut data = vec![0.0; b * s * c];
        for (si, v) in vars.iter().enumerate() {
            let src = self.data(*v);
            for bi in 0..b {
                data[(bi * s + si) * c..(bi * s + si) * c + c]
                    .copy_from_slice(&src[bi * c..(bi + 1) * c]);
            }
        }
        let needs = vars.iter().any(|v| self.needs(*v));
        self.push(
            Tensor::new(vec![b, s, c], data),
            Op::StackAxis1(vars.iter().map(|v| v.0).collect()),
            needs,
        )
    }

    /// Column slice of a 2-d tensor.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let s = self.shape(a).to_vec();
        assert!(
            s.len() == 2 && start + len <= s[1],
            "slice_cols: {:?} out of range for {:?}",
            (start, len),
            s
        );
        let (rows, cols) = (s[0], s[1]);
        let mut data = vec![0.0; rows * len];
        for r in 0..rows {
            data[r * len..(r + 1) * len]
                .copy_from_slice(&self.data(a)[r * cols + start..r * cols + start + len]);
        }
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![rows, len], data),
            Op::SliceCols {
                x: a.0,
                start,
                len,
            },
            needs,
        )
    }

    /// Time-step slice: `[B,S,C]` at step `t` gives `[B,C]`.
    pub fn slice_axis1(&mut self, a: Var, t: usize) -> Var {
        let s = self.shape(a).to_vec();
        assert!(
            s.len() == 3 && t < s[1],
            "slice_axis1: step {} out of range for {:?}",
            t,
            s
        );
        let (b, steps, c) = (s[0], s[1], s[2]);
        let mut data = vec![0.0; b * c];
        for bi in 0..b {
            data[bi * c..(bi + 1) * c]
                .copy_from_slice(&self.data(a)[(bi * steps + t) * c..(bi * steps + t) * c + c]);
        }
        let needs = self.needs(a);
        self.push(
            Tensor::new(vec![b, c], data),
            Op::SliceAxis1 { x: a.0, t },
            needs,
        )
    }

    // ---- reductions ---------------------------------------------------------

    pub fn sum_all(&mut self, a: Var) -> Var {
        let v = self.data(a).iter().sum();
        let needs = self.needs(a);
        self.push(Tensor::scalar(v), Op::SumAll(a.0), needs)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.data(a).len().max(1);
        let v = self.data(a).iter().sum::<f64>() / n as f64;
        let needs = self.needs(a);
        self.push(Tensor::scalar(v), Op::MeanAll(a.0), needs)
    }

    /// Mean over axis 1: `[B,S,D] -> [B,D]`.
    pub fn mean_axis1(&mut self, a: Var) -> Var {
        let s = self.shape(a).to_vec();
        assert_eq!(s.len(), 3, "mean_axis1 expects [B,S,D], got {:?}", s);
        let (b, steps, d) = (s[0], s[1], s[2]);
        let mut data = vec![0.0; b * d];
        for bi in 0..b {
            for si in 0..steps {
                for di in 0..d {
                    data[bi * d + di] += self.data(a)[(bi * steps + si) * d + di];
                }
            }
        }
        for v in data.iter_mut() {
            *v /= steps as f64;
        }
        let needs = self.needs(a);
        self.push(Tensor::new(vec![b, d], data), Op::MeanAxis1(a.0), needs)
    }

    /// Global average pool: `[B,C,H,W] -> [B,C]`.
    pub fn global_avg_pool2d(&mut self, a: Var) -> Var {
        let s = self.shape(a).to_vec();
        assert_eq!(s.len(), 4, "global_avg_pool2d expects [B,C,H,W], got {:?}", s);
        let (b, c, h, w) = (s[0], s[1], s[2], s[3]);
        let plane = h * w;
        let mut data = vec![0.0; b * c];
        for bi in 0..b {
            for ci in 0..c {
                let base = (bi * c + ci) * plane;
                data[bi * c + ci] =
                    self.data(a)[base..base + plane].iter().sum::<f64>() / plane as f64;
            }
        }
        let needs = self.needs(a);
        self.push(Tensor::new(vec![b, c], data), Op::GlobalAvgPool2d(a.0), needs)
    }

    // ---- convolutions -------------------------------------------------------

    /// Stride-1 same-padded conv: `x: [B,Cin,S]`, `w: [Cout,Cin,kw]`, `b: [Cout]`.
    pub fn conv1d_same(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (sx, sw, sb) = (
            self.shape(x).to_vec(),
            self.shape(w).to_vec(),
            self.shape(b).to_vec(),
        );
        assert!(
            sx.len() == 3 && sw.len() == 3 && sx[1] == sw[1] && sb == [sw[0]],
            "conv1d: shape mismatch x{:?} w{:?} b{:?}",
            sx,
            sw,
            sb
        );
        let (bsz, cin, s) = (sx[0], sx[1], sx[2]);
        let (cout, kw) = (sw[0], sw[2]);
        let data = kernels::conv1d_same(
            self.data(x),
            bsz,
            cin,
            s,
            self.data(w),
            cout,
            kw,
            self.data(b),
            self.parallel,
        );
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.push(
            Tensor::new(vec![bsz, cout, s], data),
            Op::Conv1dSame {
                x: x.0,
                w: w.0,
                b: b.0,
            },
            needs,
        )
    }

    /// 2-d conv: `x: [B,Cin,H,W]`, `w: [Cout,Cin,kh,kw]`, `b: [Cout]`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Var {
        let (sx, sw, sb) = (
            self.shape(x).to_vec(),
            self.shape(w).to_vec(),
            self.shape(b).to_vec(),
        );
        assert!(
            sx.len() == 4 && sw.len() == 4 && sx[1] == sw[1] && sb == [sw[0]] && stride >= 1,
            "conv2d: shape mismatch x{:?} w{:?} b{:?}",
            sx,
            sw,
            sb
        );
        let (bsz, cin, h, wd) = (sx[0], sx[1], sx[2], sx[3]);
        let (cout, kh, kw) = (sw[0], sw[2], sw[3]);
        assert!(
            h + 2 * pad >= kh && wd + 2 * pad >= kw,
            "conv2d: kernel {:?} larger than padded input {:?}",
            (kh, kw),
            (h + 2 * pad, wd + 2 * pad)
        );
        let oh = (h + 2 * pad - kh) / stride + 1;
        let ow = (wd + 2 * pad - kw) / stride + 1;
        let data = kernels::conv2d(
            self.data(x),
            bsz,
            cin,
            h,
            wd,
            self.data(w),
            cout,
            kh,
            kw,
            self.data(b),
            stride,
            pad,
            self.parallel,
        );
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.push(
            Tensor::new(vec![bsz, cout, oh, ow], data),
            Op::Conv2d {
                x: x.0,
                w: w.0,
                b: b.0,
                stride,
                pad,
            },
            needs,
        )
    }

    /// Non-overlapping max pool with window `k` (stride `k`). Ties resolve to
    /// the first element in row-major scan order.
    pub fn max_pool2d(&mut self, x: Var, k: usize) -> Var {
        let s = self.shape(x).to_vec();
        assert!(
            s.len() == 4 && k >= 1 && s[2] >= k && s[3] >= k,
            "max_pool2d: window {} on {:?}",
            k,
            s
        );
        let (bsz, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (oh, ow) = (h / k, w / k);
        let mut data = vec![0.0; bsz * c * oh * ow];
        let mut argmax = vec![0usize; bsz * c * oh * ow];
        let src = self.data(x);
        for bi in 0..bsz {
            for ci in 0..c {
                let plane = (bi * c + ci) * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0;
                        for ky in 0..k {
                            for kx in 0..k {
                                let idx = plane + (oy * k + ky) * w + (ox * k + kx);
                                if src[idx] > best {
                                    best = src[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        let o = ((bi * c + ci) * oh + oy) * ow + ox;
                        data[o] = best;
                        argmax[o] = best_idx;
                    }
                }
            }
        }
        let needs = self.needs(x);
        self.push(
            Tensor::new(vec![bsz, c, oh, ow], data),
            Op::MaxPool2d { x: x.0, argmax },
            needs,
        )
    }

    // ---- fused scalar nodes ---------------------------------------------------

    /// Mean cross-entropy from logits via a stable log-sum-exp, fused with
    /// its backward rule `(softmax - onehot)/B`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Var {
        let shape = self.shape(logits).to_vec();
        assert_eq!(shape.len(), 2, "cross entropy expects [B,Z] logits, got {shape:?}");
        let (b, z) = (shape[0], shape[1]);
        assert_eq!(labels.len(), b, "label count {} vs batch {}", labels.len(), b);
        for &l in labels {
            assert!(l < z, "label {l} out of range for {z} classes");
        }
        let data = self.data(logits);
        let mut loss = 0.0;
        let mut adjoint = vec![0.0; b * z];
        for (i, row) in data.chunks(z).enumerate() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let lse = max + sum.ln();
            loss += lse - row[labels[i]];
            for j in 0..z {
                let p = (row[j] - max).exp() / sum;
                adjoint[i * z + j] = (p - if j == labels[i] { 1.0 } else { 0.0 }) / b as f64;
            }
        }
        self.scalar_fused(loss / b as f64, vec![(logits, adjoint)])
    }

    /// Registers a scalar whose input adjoints were computed at forward time.
    /// Each adjoint must match its input's element count.
    pub fn scalar_fused(&mut self, value: f64, adjoints: Vec<(Var, Vec<f64>)>) -> Var {
        for (v, adj) in &adjoints {
            assert_eq!(
                adj.len(),
                self.data(*v).len(),
                "scalar_fused: adjoint length {} vs input {:?}",
                adj.len(),
                self.shape(*v)
            );
        }
        let needs = adjoints.iter().any(|(v, _)| self.needs(*v));
        let inputs = adjoints.into_iter().map(|(v, adj)| (v.0, adj)).collect();
        self.push(Tensor::scalar(value), Op::ScalarFused { inputs }, needs)
    }

    // ---- backward ---------------------------------------------------------

    /// Reverse sweep from a scalar `loss`. Each graph may run backward once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        let lshape = self.shape(loss);
        if !(lshape.is_empty() || lshape == [1]) {
            return Err(Error::NonScalarLoss(lshape.to_vec()));
        }
        self.backward_done = true;

        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].needs_grad {
                grads[i] = None;
                continue;
            }
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            self.backprop_node(i, &g, &mut grads);
            // Leaf gradients are the product of the sweep; keep them.
            if matches!(self.nodes[i].op, Op::Leaf) {
                grads[i] = Some(g);
            }
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], target: usize, delta: &[f64]) {
        if !self.nodes[target].needs_grad {
            return;
        }
        match &mut grads[target] {
            Some(existing) => {
                for (e, d) in existing.iter_mut().zip(delta) {
                    *e += d;
                }
            }
            None => grads[target] = Some(delta.to_vec()),
        }
    }

    #[allow(clippy::too_many_lines)]
    fn backprop_node(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let parallel = self.parallel;
        let val = |idx: usize| self.nodes[idx].value.data();
        let shp = |idx: usize| self.nodes[idx].value.shape();
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g);
                self.accumulate(grads, *b, g);
            }
            Op::AddBcast0(a, b) => {
                self.accumulate(grads, *a, g);
                if self.nodes[*b].needs_grad {
                    let inner = val(*b).len();
                    let mut db = vec![0.0; inner];
                    for (idx, gv) in g.iter().enumerate() {
                        db[idx % inner] += gv;
                    }
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::Mul(a, b) => {
                if self.nodes[*a].needs_grad {
                    let da: Vec<f64> = g.iter().zip(val(*b)).map(|(gv, bv)| gv * bv).collect();
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].needs_grad {
                    let db: Vec<f64> = g.iter().zip(val(*a)).map(|(gv, av)| gv * av).collect();
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::Scale(a, c) => {
                let da: Vec<f64> = g.iter().map(|gv| gv * c).collect();
                self.accumulate(grads, *a, &da);
            }
            Op::Matmul(a, b) => {
                let (m, k) = (shp(*a)[0], shp(*a)[1]);
                let n = shp(*b)[1];
                if self.nodes[*a].needs_grad {
                    let da = kernels::matmul_nt(g, m, n, val(*b), k, parallel);
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].needs_grad {
                    let db = kernels::matmul_tn(val(*a), m, k, g, n, parallel);
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::BmmNN(a, b) => {
                let (gq, m, k) = (shp(*a)[0], shp(*a)[1], shp(*a)[2]);
                let n = shp(*b)[2];
                if self.nodes[*a].needs_grad {
                    let da = kernels::bmm_nt(g, gq, m, n, val(*b), k, parallel);
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].needs_grad {
                    let db = kernels::bmm_tn(val(*a), gq, m, k, g, n, parallel);
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::BmmNT(a, b) => {
                // c = a·bᵀ: da = g·b, db = gᵀ·a
                let (gq, m, k) = (shp(*a)[0], shp(*a)[1], shp(*a)[2]);
                let n = shp(*b)[1];
                if self.nodes[*a].needs_grad {
                    let da = kernels::bmm(g, gq, m, n, val(*b), k, parallel);
                    self.accumulate(grads, *a, &da);
                }
                if self.nodes[*b].needs_grad {
                    let db = kernels::bmm_tn(g, gq, m, n, val(*a), k, parallel);
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::Linear { x, w, b } => {
                let (m, k) = (shp(*x)[0], shp(*x)[1]);
                let n = shp(*w)[1];
                if self.nodes[*x].needs_grad {
                    let dx = kernels::matmul_nt(g, m, n, val(*w), k, parallel);
                    self.accumulate(grads, *x, &dx);
                }
                if self.nodes[*w].needs_grad {
                    let dw = kernels::matmul_tn(val(*x), m, k, g, n, parallel);
                    self.accumulate(grads, *w, &dw);
                }
                if self.nodes[*b].needs_grad {
                    let mut db = vec![0.0; n];
                    for row in g.chunks(n) {
                        for (j, v) in row.iter().enumerate() {
                            db[j] += v;
                        }
                    }
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::Relu(a) => {
                let da: Vec<f64> = g
                    .iter()
                    .zip(val(*a))
                    .map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.accumulate(grads, *a, &da);
            }
            Op::Sigmoid(a) => {
                let y = self.nodes[i].value.data();
                let da: Vec<f64> = g
                    .iter()
                    .zip(y)
                    .map(|(gv, yv)| gv * yv * (1.0 - yv))
                    .collect();
                self.accumulate(grads, *a, &da);
            }
            Op::Tanh(a) => {
                let y = self.nodes[i].value.data();
                let da: Vec<f64> = g.iter().zip(y).map(|(gv, yv)| gv * (1.0 - yv * yv)).collect();
                self.accumulate(grads, *a, &da);
            }
            Op::SoftmaxLast(a) => {
                let last = *shp(*a).last().unwrap();
                let p = self.nodes[i].value.data();
                let mut da = vec![0.0; g.len()];
                for (r, _) in g.chunks(last).enumerate() {
                    let gr = &g[r * last..(r + 1) * last];
                    let pr = &p[r * last..(r + 1) * last];
                    let dot: f64 = gr.iter().zip(pr).map(|(a, b)| a * b).sum();
                    for j in 0..last {
                        da[r * last + j] = pr[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(grads, *a, &da);
            }
            Op::LayerNorm { x, gain, bias } => {
                let last = *shp(*x).last().unwrap();
                let xs = val(*x);
                let gains = val(*gain);
                let rows = xs.len() / last;
                let mut dx = vec![0.0; xs.len()];
                let mut dgain = vec![0.0; last];
                let mut dbias = vec![0.0; last];
                for r in 0..rows {
                    let xr = &xs[r * last..(r + 1) * last];
                    let gr = &g[r * last..(r + 1) * last];
                    let mean = xr.iter().sum::<f64>() / last as f64;
                    let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / last as f64;
                    let inv = 1.0 / (var + LN_EPS).sqrt();
                    let xhat: Vec<f64> = xr.iter().map(|v| (v - mean) * inv).collect();
                    let gy: Vec<f64> = gr.iter().zip(gains).map(|(a, b)| a * b).collect();
                    let m1 = gy.iter().sum::<f64>() / last as f64;
                    let m2 = gy.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / last as f64;
                    for j in 0..last {
                        dx[r * last + j] = inv * (gy[j] - m1 - xhat[j] * m2);
                        dgain[j] += gr[j] * xhat[j];
                        dbias[j] += gr[j];
                    }
                }
                self.accumulate(grads, *x, &dx);
                self.accumulate(grads, *gain, &dgain);
                self.accumulate(grads, *bias, &dbias);
            }
            Op::ConcatLast(parts) => {
                let lasts: Vec<usize> = parts.iter().map(|p| *shp(*p).last().unwrap()).collect();
                let total: usize = lasts.iter().sum();
                let rows = g.len() / total;
                let mut off = 0;
                for (p, &l) in parts.iter().zip(&lasts) {
                    if self.nodes[*p].needs_grad {
                        let mut dp = vec![0.0; rows * l];
                        for r in 0..rows {
                            dp[r * l..(r + 1) * l]
                                .copy_from_slice(&g[r * total + off..r * total + off + l]);
                        }
                        self.accumulate(grads, *p, &dp);
                    }
                    off += l;
                }
            }
            Op::StackAxis1(parts) => {
                let s = parts.len();
                let (b, c) = (shp(parts[0])[0], shp(parts[0])[1]);
                for (si, p) in parts.iter().enumerate() {
                    if self.nodes[*p].needs_grad {
                        let mut dp = vec![0.0; b * c];
                        for bi in 0..b {
                            dp[bi * c..(bi + 1) * c]
                                .copy_from_slice(&g[(bi * s + si) * c..(bi * s + si) * c + c]);
                        }
                        self.accumulate(grads, *p, &dp);
                    }
                }
            }
            Op::SliceCols { x, start, len } => {
                let (rows, cols) = (shp(*x)[0], shp(*x)[1]);
                let mut dx = vec![0.0; rows * cols];
                for r in 0..rows {
                    dx[r * cols + start..r * cols + start + len]
                        .copy_from_slice(&g[r * len..(r + 1) * len]);
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::SliceAxis1 { x, t } => {
                let (b, steps, c) = (shp(*x)[0], shp(*x)[1], shp(*x)[2]);
                let mut dx = vec![0.0; b * steps * c];
                for bi in 0..b {
                    dx[(bi * steps + t) * c..(bi * steps + t) * c + c]
                        .copy_from_slice(&g[bi * c..(bi + 1) * c]);
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::Reshape(a) => {
                self.accumulate(grads, *a, g);
            }
            Op::Permute { x, perm } => {
                let inv = invert_perm(perm);
                let (dx, _) = permute_data(g, self.nodes[i].value.shape(), &inv);
                self.accumulate(grads, *x, &dx);
            }
            Op::SumAll(a) => {
                let da = vec![g[0]; val(*a).len()];
                self.accumulate(grads, *a, &da);
            }
            Op::MeanAll(a) => {
                let n = val(*a).len().max(1);
                let da = vec![g[0] / n as f64; val(*a).len()];
                self.accumulate(grads, *a, &da);
            }
            Op::MeanAxis1(a) => {
                let (b, steps, d) = (shp(*a)[0], shp(*a)[1], shp(*a)[2]);
                let mut da = vec![0.0; b * steps * d];
                for bi in 0..b {
                    for si in 0..steps {
                        for di in 0..d {
                            da[(bi * steps + si) * d + di] = g[bi * d + di] / steps as f64;
                        }
                    }
                }
                self.accumulate(grads, *a, &da);
            }
            Op::GlobalAvgPool2d(a) => {
                let (b, c, h, w) = (shp(*a)[0], shp(*a)[1], shp(*a)[2], shp(*a)[3]);
                let plane = h * w;
                let mut da = vec![0.0; b * c * plane];
                for bi in 0..b {
                    for ci in 0..c {
                        let gv = g[bi * c + ci] / plane as f64;
                        let base = (bi * c + ci) * plane;
                        for v in da[base..base + plane].iter_mut() {
                            *v = gv;
                        }
                    }
                }
                self.accumulate(grads, *a, &da);
            }
            Op::Conv1dSame { x, w, b } => {
                let (bsz, cin, s) = (shp(*x)[0], shp(*x)[1], shp(*x)[2]);
                let (cout, kw) = (shp(*w)[0], shp(*w)[2]);
                let pad = (kw - 1) / 2;
                if self.nodes[*x].needs_grad {
                    let mut dx = vec![0.0; bsz * cin * s];
                    let wv = val(*w);
                    for_each_chunk_mut(&mut dx, cin * s, parallel, |bi, dxb| {
                        let gb = &g[bi * cout * s..(bi + 1) * cout * s];
                        for co in 0..cout {
                            let grow = &gb[co * s..(co + 1) * s];
                            for ci in 0..cin {
                                let wrow = &wv[(co * cin + ci) * kw..(co * cin + ci + 1) * kw];
                                let drow = &mut dxb[ci * s..(ci + 1) * s];
                                for (kk, &wvk) in wrow.iter().enumerate() {
                                    if wvk == 0.0 {
                                        continue;
                                    }
                                    let lo = pad.saturating_sub(kk);
                                    let hi = (s + pad).saturating_sub(kk).min(s);
                                    for t in lo..hi {
                                        drow[t + kk - pad] += wvk * grow[t];
                                    }
                                }
                            }
                        }
                    });
                    self.accumulate(grads, *x, &dx);
                }
                if self.nodes[*w].needs_grad {
                    let mut dw = vec![0.0; cout * cin * kw];
                    let xv = val(*x);
                    for_each_chunk_mut(&mut dw, cin * kw, parallel, |co, dwc| {
                        for bi in 0..bsz {
                            let grow = &g[(bi * cout + co) * s..(bi * cout + co + 1) * s];
                            for ci in 0..cin {
                                let xrow = &xv[(bi * cin + ci) * s..(bi * cin + ci + 1) * s];
                                for kk in 0..kw {
                                    let lo = pad.saturating_sub(kk);
                                    let hi = (s + pad).saturating_sub(kk).min(s);
                                    let mut acc = 0.0;
                                    for t in lo..hi {
                                        acc += grow[t] * xrow[t + kk - pad];
                                    }
                                    dwc[ci * kw + kk] += acc;
                                }
                            }
                        }
                    });
                    self.accumulate(grads, *w, &dw);
                }
                if self.nodes[*b].needs_grad {
                    let mut db = vec![0.0; cout];
                    for bi in 0..bsz {
                        for co in 0..cout {
                            db[co] += g[(bi * cout + co) * s..(bi * cout + co + 1) * s]
                                .iter()
                                .sum::<f64>();
                        }
                    }
                    self.accumulate(grads, *b, &db);
                }
            }
            Op::Conv2d {
                x,
                w,
                b,
                stride,
                pad,
            } => {
                self.conv2d_backward(i, *x, *w, *b, *stride, *pad, g, grads);
            }
            Op::MaxPool2d { x, argmax } => {
                let mut dx = vec![0.0; val(*x).len()];
                for (o, &src) in argmax.iter().enumerate() {
                    dx[src] += g[o];
                }
                self.accumulate(grads, *x, &dx);
            }
            Op::L2NormRows(a) => {
                let last = *shp(*a).last().unwrap();
                let xs = val(*a);
                let mut da = vec![0.0; xs.len()];
                for (r, xr) in xs.chunks(last).enumerate() {
                    let gr = &g[r * last..(r + 1) * last];
                    let norm = xr.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let denom = norm.max(L2_EPS);
                    if norm > L2_EPS {
                        let yr: Vec<f64> = xr.iter().map(|v| v / denom).collect();
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..last {
                            da[r * last + j] = (gr[j] - yr[j] * dot) / denom;
                        }
                    } else {
                        for j in 0..last {
                            da[r * last + j] = gr[j] / denom;
                        }
                    }
                }
                self.accumulate(grads, *a, &da);
            }
            Op::Dropout { x, mask } => {
                let da: Vec<f64> = g.iter().zip(mask).map(|(gv, m)| gv * m).collect();
                self.accumulate(grads, *x, &da);
            }
            Op::ScalarFused { inputs } => {
                let gv = g[0];
                for (target, adj) in inputs {
                    if self.nodes[*target].needs_grad {
                        let d: Vec<f64> = adj.iter().map(|a| a * gv).collect();
                        self.accumulate(grads, *target, &d);
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn conv2d_backward(
        &self,
        node: usize,
        x: usize,
        w: usize,
        b: usize,
        stride: usize,
        pad: usize,
        g: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) {
        let sx = self.nodes[x].value.shape();
        let sw = self.nodes[w].value.shape();
        let so = self.nodes[node].value.shape();
        let (bsz, cin, h, wd) = (sx[0], sx[1], sx[2], sx[3]);
        let (cout, kh, kw) = (sw[0], sw[2], sw[3]);
        let (oh, ow) = (so[2], so[3]);
        let parallel = self.parallel;

        if self.nodes[x].needs_grad {
            let wv = self.nodes[w].value.data();
            let mut dx = vec![0.0; bsz * cin * h * wd];
            for_each_chunk_mut(&mut dx, cin * h * wd, parallel, |bi, dxb| {
                for co in 0..cout {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let gv = g[((bi * cout + co) * oh + oy) * ow + ox];
                            if gv == 0.0 {
                                continue;
                            }
                            let iy0 = (oy * stride) as isize - pad as isize;
                            let ix0 = (ox * stride) as isize - pad as isize;
                            for ci in 0..cin {
                                for ky in 0..kh {
                                    let iy = iy0 + ky as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    for kx in 0..kw {
                                        let ix = ix0 + kx as isize;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        dxb[(ci * h + iy as usize) * wd + ix as usize] +=
                                            gv * wv[((co * cin + ci) * kh + ky) * kw + kx];
                                    }
                                }
                            }
                        }
                    }
                }
            });
            self.accumulate(grads, x, &dx);
        }
        if self.nodes[w].needs_grad {
            let xv = self.nodes[x].value.data();
            let mut dw = vec![0.0; cout * cin * kh * kw];
            for_each_chunk_mut(&mut dw, cin * kh * kw, parallel, |co, dwc| {
                for bi in 0..bsz {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let gv = g[((bi * cout + co) * oh + oy) * ow + ox];
                            if gv == 0.0 {
                                continue;
                            }
                            let iy0 = (oy * stride) as isize - pad as isize;
                            let ix0 = (ox * stride) as isize - pad as isize;
                            for ci in 0..cin {
                                for ky in 0..kh {
                                    let iy = iy0 + ky as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    for kx in 0..kw {
                                        let ix = ix0 + kx as isize;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        dwc[(ci * kh + ky) * kw + kx] += gv
                                            * xv[((bi * cin + ci) * h + iy as usize) * wd
                                                + ix as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            });
            self.accumulate(grads, w, &dw);
        }
        if self.nodes[b].needs_grad {
            let mut db = vec![0.0; cout];
            for bi in 0..bsz {
                for co in 0..cout {
                    let base = ((bi * cout + co) * oh) * ow;
                    db[co] += g[base..base + oh * ow].iter().sum::<f64>();
                }
            }
            self.accumulate(grads, b, &db);
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Stable softmax of one row, in place.
pub fn softmax_slice(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn invert_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn permute_data(data: &[f64], shape: &[usize], perm: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let rank = shape.len();
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let mut out = vec![0.0; data.len()];
    let mut coords = vec![0usize; rank];
    for (o, slot) in out.iter_mut().enumerate() {
        let mut rem = o;
        for d in (0..rank).rev() {
            coords[d] = rem % out_shape[d];
            rem /= out_shape[d];
        }
        let mut src = 0;
        for d in 0..rank {
            src += coords[d] * in_strides[perm[d]];
        }
        *slot = data[src];
    }
    (out, out_shape)
}
