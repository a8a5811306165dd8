//! Adam optimizer with bias correction.

use super::tensor::Tensor;

/// Per-parameter first/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Fresh state shaped like `params`, with the paper's training settings
    /// (β1 = 0.9, β2 = 0.999, ε = 1e-8).
    pub fn new(params: &[Tensor], learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. `grads[i] = None` leaves parameter `i` and its moments
    /// untouched (parameters outside the current loss path).
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Option<Tensor>]) {
        assert_eq!(params.len(), self.m.len(), "adam: parameter count changed");
        assert_eq!(params.len(), grads.len(), "adam: gradient count mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let g = match &grads[i] {
                Some(g) => g,
                None => continue,
            };
            assert_eq!(
                g.shape(),
                p.shape(),
                "adam: gradient shape {:?} vs parameter {:?}",
                g.shape(),
                p.shape()
            );
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for ((pv, gv), (mv, vv)) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *pv -= self.learning_rate * mhat / (vhat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = vec![Tensor::new(vec![2], vec![1.5, -2.5])];
        let mut adam = AdamState::new(&params, 0.001);
        adam.step(&mut params, &[Some(Tensor::zeros(vec![2]))]);
        assert_eq!(params[0].data(), &[1.5, -2.5]);
    }

    #[test]
    fn constant_gradient_approaches_signed_lr_steps() {
        // With a constant gradient the bias-corrected update tends to lr·sign(g).
        let mut params = vec![Tensor::new(vec![2], vec![0.0, 0.0])];
        let lr = 0.001;
        let mut adam = AdamState::new(&params, lr);
        let g = Tensor::new(vec![2], vec![0.3, -7.0]);
        let mut prev = [0.0, 0.0];
        let mut last_step = [0.0, 0.0];
        for _ in 0..500 {
            adam.step(&mut params, &[Some(g.clone())]);
            last_step = [params[0].data()[0] - prev[0], params[0].data()[1] - prev[1]];
            prev = [params[0].data()[0], params[0].data()[1]];
        }
        assert!((last_step[0] + lr).abs() < 1e-6, "step {:?}", last_step);
        assert!((last_step[1] - lr).abs() < 1e-6, "step {:?}", last_step);
    }

    #[test]
    fn none_gradient_skips_parameter() {
        let mut params = vec![
            Tensor::new(vec![1], vec![1.0]),
            Tensor::new(vec![1], vec![2.0]),
        ];
        let mut adam = AdamState::new(&params, 0.1);
        adam.step(
            &mut params,
            &[Some(Tensor::new(vec![1], vec![1.0])), None],
        );
        assert!(params[0].data()[0] < 1.0);
        assert_eq!(params[1].data()[0], 2.0);
    }
}
