//! Seeded parameter initialization.
//!
//! Linear, convolutional and recurrent weights draw from
//! `U(-sqrt(1/fan_in), +sqrt(1/fan_in))`; biases start at zero except the
//! LSTM forget gate, which starts at one.

use super::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform weight tensor with the given fan-in.
pub fn uniform(rng: &mut ChaCha8Rng, shape: Vec<usize>, fan_in: usize) -> Tensor {
    let bound = (1.0 / fan_in.max(1) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(shape, data).with_grad()
}

/// Zero-initialized bias.
pub fn zeros(shape: Vec<usize>) -> Tensor {
    let mut t = Tensor::zeros(shape);
    t.requires_grad = true;
    t
}

/// Constant-initialized tensor.
pub fn full(shape: Vec<usize>, v: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape, vec![v; n]).with_grad()
}

/// LSTM parameter triple `(w [in,4H], u [H,4H], b [4H])` with gate order
/// (input, forget, cell, output) and forget bias one.
pub fn lstm(rng: &mut ChaCha8Rng, input: usize, hidden: usize) -> (Tensor, Tensor, Tensor) {
    let w = uniform(rng, vec![input, 4 * hidden], input);
    let u = uniform(rng, vec![hidden, 4 * hidden], hidden);
    let mut b = zeros(vec![4 * hidden]);
    for v in &mut b.data_mut()[hidden..2 * hidden] {
        *v = 1.0;
    }
    b.requires_grad = true;
    (w, u, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn deterministic_for_seed() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(
            uniform(&mut r1, vec![4, 3], 4).data(),
            uniform(&mut r2, vec![4, 3], 4).data()
        );
    }

    #[test]
    fn forget_gate_bias_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, _, b) = lstm(&mut rng, 3, 5);
        assert_eq!(&b.data()[5..10], &[1.0; 5]);
        assert_eq!(&b.data()[0..5], &[0.0; 5]);
    }
}
