//! LSTM cell and unrolled (bi)directional sequences on top of the graph ops.
//!
//! Gate order in the fused `[·,4H]` parameter matrices is
//! (input, forget, cell, output):
//!
//! ```text
//! z = x·W + h·U + b
//! i = σ(z₁)  f = σ(z₂)  g = tanh(z₃)  o = σ(z₄)
//! c' = f ⊙ c + i ⊙ g
//! h' = o ⊙ tanh(c')
//! ```

use super::graph::{Graph, Var};
use super::tensor::Tensor;

/// Graph handles for one LSTM cell's parameters.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    /// `[input, 4·hidden]`
    pub w: Var,
    /// `[hidden, 4·hidden]`
    pub u: Var,
    /// `[4·hidden]`
    pub b: Var,
    pub hidden: usize,
}

/// One step: `x [B,in]`, states `[B,H]``; returns `(h', c')`.
pub fn lstm_cell(g: &mut Graph, x: Var, h: Var, c: Var, p: &LstmVars) -> (Var, Var) {
    let hx = p.hidden;
    let zx = g.matmul(x, p.w);
    let zh = g.matmul(h, p.u);
    let zs = g.add(zx, zh);
    let z = g.add_bcast0(zs, p.b);
    let zi = g.slice_cols(z, 0, hx);
    let zf = g.slice_cols(z, hx, hx);
    let zg = g.slice_cols(z, 2 * hx, hx);
    let zo = g.slice_cols(z, 3 * hx, hx);
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let gg = g.tanh(zg);
    let o = g.sigmoid(zo);
    let fc = g.mul(f, c);
    let ig = g.mul(i, gg);
    let c2 = g.add(fc, ig);
    let tc = g.tanh(c2);
    let h2 = g.mul(o, tc);
    (h2, c2)
}

/// Unrolls over `xs [B,S,in]`. Outputs are stacked in original time order
/// regardless of direction; the second value is the final hidden state
/// (state after the last processed step).
pub fn lstm_sequence(g: &mut Graph, xs: Var, p: &LstmVars, reverse: bool) -> (Var, Var) {
    let shape = g.value(xs).shape().to_vec();
    assert_eq!(shape.len(), 3, "lstm_sequence expects [B,S,in], got {:?}", shape);
    let (b, s) = (shape[0], shape[1]);
    let mut h = g.constant(Tensor::zeros(vec![b, p.hidden]));
    let mut c = g.constant(Tensor::zeros(vec![b, p.hidden]));
    let mut outputs: Vec<Var> = vec![h; s];
    let steps: Vec<usize> = if reverse {
        (0..s).rev().collect()
    } else {
        (0..s).collect()
    };
    for t in steps {
        let xt = g.slice_axis1(xs, t);
        let (h2, c2) = lstm_cell(g, xt, h, c, p);
        h = h2;
        c = c2;
        outputs[t] = h;
    }
    let stacked = g.stack_axis1(&outputs);
    (stacked, h)
}

/// Bidirectional layer: per-step concat of forward and backward outputs
/// (`[B,S,2H]`) plus the concat of the two final hidden states (`[B,2H]`).
pub fn bilstm_sequence(
    g: &mut Graph,
    xs: Var,
    fwd: &LstmVars,
    bwd: &LstmVars,
) -> (Var, Var) {
    let (fwd_out, fwd_h) = lstm_sequence(g, xs, fwd, false);
    let (bwd_out, bwd_h) = lstm_sequence(g, xs, bwd, true);
    let shape = g.value(fwd_out).shape().to_vec();
    let (b, s, hx) = (shape[0], shape[1], shape[2]);
    // Per-step concat via slicing keeps original time order for both halves.
    let mut steps = Vec::with_capacity(s);
    for t in 0..s {
        let f = g.slice_axis1(fwd_out, t);
        let w = g.slice_axis1(bwd_out, t);
        steps.push(g.concat_last(&[f, w]));
    }
    let outputs = g.stack_axis1(&steps);
    debug_assert_eq!(g.value(outputs).shape(), &[b, s, 2 * hx]);
    let finals = g.concat_last(&[fwd_h, bwd_h]);
    (outputs, finals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn register(g: &mut Graph, w: Tensor, u: Tensor, b: Tensor, hidden: usize) -> LstmVars {
        LstmVars {
            w: g.leaf(w),
            u: g.leaf(u),
            b: g.leaf(b),
            hidden,
        }
    }

    #[test]
    fn zero_weights_zero_bias_keep_state_zero() {
        let mut g = Graph::new();
        let p = register(
            &mut g,
            Tensor::zeros(vec![2, 8]),
            Tensor::zeros(vec![2, 8]),
            Tensor::zeros(vec![8]),
            2,
        );
        let x = g.constant(Tensor::from_rows(&[vec![0.3, -0.7]]));
        let h = g.constant(Tensor::zeros(vec![1, 2]));
        let c = g.constant(Tensor::zeros(vec![1, 2]));
        let (h2, c2) = lstm_cell(&mut g, x, h, c, &p);
        assert_eq!(g.value(h2).data(), &[0.0, 0.0]);
        assert_eq!(g.value(c2).data(), &[0.0, 0.0]);
    }

    #[test]
    fn single_step_matches_hand_computation() {
        // hidden = 1, input = 1: all gates driven by scalars.
        let mut g = Graph::new();
        let w = Tensor::new(vec![1, 4], vec![0.5, -0.25, 1.0, 0.75]);
        let u = Tensor::new(vec![1, 4], vec![0.1, 0.2, -0.3, 0.4]);
        let b = Tensor::new(vec![4], vec![0.05, 1.0, -0.1, 0.2]);
        let p = register(&mut g, w, u, b, 1);
        let x = g.constant(Tensor::from_rows(&[vec![0.8]]));
        let h = g.constant(Tensor::from_rows(&[vec![-0.5]]));
        let c = g.constant(Tensor::from_rows(&[vec![0.3]]));
        let (h2, c2) = lstm_cell(&mut g, x, h, c, &p);

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let zi = 0.8 * 0.5 + (-0.5) * 0.1 + 0.05;
        let zf = 0.8 * (-0.25) + (-0.5) * 0.2 + 1.0;
        let zg: f64 = 0.8 * 1.0 + (-0.5) * (-0.3) + (-0.1);
        let zo = 0.8 * 0.75 + (-0.5) * 0.4 + 0.2;
        let c_exp = sig(zf) * 0.3 + sig(zi) * zg.tanh();
        let h_exp = sig(zo) * c_exp.tanh();
        assert!((g.value(c2).data()[0] - c_exp).abs() < 1e-15);
        assert!((g.value(h2).data()[0] - h_exp).abs() < 1e-15);
    }

    #[test]
    fn shared_weights_bilstm_swaps_halves_on_reversal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (w, u, b) = init::lstm(&mut rng, 3, 4);
        let xs: Vec<f64> = (0..2 * 5 * 3).map(|i| ((i * 7 % 11) as f64 - 5.0) / 6.0).collect();
        let reversed: Vec<f64> = {
            let mut r = vec![0.0; xs.len()];
            for bi in 0..2 {
                for t in 0..5 {
                    for c in 0..3 {
                        r[(bi * 5 + t) * 3 + c] = xs[(bi * 5 + (4 - t)) * 3 + c];
                    }
                }
            }
            r
        };
        let run = |data: Vec<f64>| {
            let mut g = Graph::new();
            let p = register(&mut g, w.clone(), u.clone(), b.clone(), 4);
            let x = g.constant(Tensor::new(vec![2, 5, 3], data));
            let (_, finals) = bilstm_sequence(&mut g, x, &p, &p);
            g.value(finals).data().to_vec()
        };
        let orig = run(xs);
        let rev = run(reversed);
        // forward half of x == backward half of reverse(x) when directions share weights
        for bi in 0..2 {
            assert_eq!(orig[bi * 8..bi * 8 + 4], rev[bi * 8 + 4..bi * 8 + 8]);
            assert_eq!(orig[bi * 8 + 4..bi * 8 + 8], rev[bi * 8..bi * 8 + 4]);
        }
    }
}
