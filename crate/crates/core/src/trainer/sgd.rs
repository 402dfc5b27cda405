/// SGD with heavy-ball momentum and L2 weight decay folded into the
/// gradient. Nesterov is not supported.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub velocity: Vec<f64>,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl SgdState {
    pub fn new(params: usize, momentum: f64, weight_decay: f64) -> Self {
        Self {
            velocity: vec![0.0; params],
            momentum,
            weight_decay,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        sgd_step(
            params,
            &mut self.velocity,
            grad,
            lr,
            self.momentum,
            self.weight_decay,
        );
    }
}

/// `v ← momentum·v + g + wd·θ`, then `θ ← θ − lr·v`.
pub fn sgd_step(
    params: &mut [f64],
    velocity: &mut [f64],
    grad: &[f64],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    assert_eq!(params.len(), velocity.len(), "velocity shape");
    assert_eq!(params.len(), grad.len(), "gradient shape");
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = momentum * *v + g + weight_decay * *p;
        *p -= lr * *v;
    }
}
