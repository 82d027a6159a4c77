use super::params::ParamGroup;

/// Adam with the usual default moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, num_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn for_group<P: ParamGroup>(lr: f64, group: &P) -> Self {
        Adam::new(lr, group.num_params())
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One step against the gradient.
    pub fn descend<P: ParamGroup>(&mut self, params: &mut P, grad: &P) {
        self.update(params, grad, 1.0);
    }

    /// One step along the gradient.
    pub fn ascend<P: ParamGroup>(&mut self, params: &mut P, grad: &P) {
        self.update(params, grad, -1.0);
    }

    fn update<P: ParamGroup>(&mut self, params: &mut P, grad: &P, sign: f64) {
        assert_eq!(
            params.num_params(),
            self.m.len(),
            "optimizer state does not match the parameter group"
        );
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let mut k = 0;
        let grads = grad.tensors();
        for (p_tensor, g_tensor) in params.tensors_mut().into_iter().zip(grads) {
            for (p, &g) in p_tensor.iter_mut().zip(g_tensor) {
                let g = sign * g;
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[k] / bc1;
                let v_hat = self.v[k] / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
    }
}
