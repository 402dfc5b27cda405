#![allow(dead_code)]

use nalgebra::DMatrix;

use volsched::rng::Gaussian;
use volsched::trainer::{Mlp, OwnedBatch};

/// Uniform integer in `lo..=hi`.
pub fn pick(g: &mut Gaussian, lo: usize, hi: usize) -> usize {
    lo + (g.uniform(0.0, (hi - lo + 1) as f64) as usize).min(hi - lo)
}

/// Largest elementwise relative error between the analytic gradient and
/// central differences with step 1e-5, over elements with `|g| > 1e-8`.
pub fn gradient_error(model: &Mlp, params: &[f64], batch: &OwnedBatch) -> f64 {
    let analytic = model.loss_grad_accuracy(params, &batch.view()).unwrap().grad;
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut p = params.to_vec();
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = model.loss_accuracy(&p, &batch.view()).unwrap().0;
        p[i] = orig - h;
        let down = model.loss_accuracy(&p, &batch.view()).unwrap().0;
        p[i] = orig;
        let fd = (up - down) / (2.0 * h);
        if analytic[i].abs() > 1e-8 {
            worst = worst.max((analytic[i] - fd).abs() / analytic[i].abs());
        }
    }
    worst
}

/// Random small network, parameters and batch.
pub fn random_instance(seed: u64) -> (Mlp, Vec<f64>, OwnedBatch) {
    let mut g = Gaussian::new(seed);
    let features = pick(&mut g, 1, 4);
    let classes = pick(&mut g, 2, 4);
    let mut layers = vec![features];
    for _ in 0..pick(&mut g, 1, 2) {
        layers.push(pick(&mut g, 2, 6));
    }
    layers.push(classes);
    let model = Mlp::new(layers).unwrap();
    let params: Vec<f64> = (0..model.param_count()).map(|_| 0.7 * g.standard_normal()).collect();
    let n = pick(&mut g, 1, 8);
    let batch = OwnedBatch {
        inputs: (0..n * features).map(|_| g.standard_normal()).collect(),
        labels: (0..n).map(|_| pick(&mut g, 0, classes - 1)).collect(),
        features,
    };
    (model, params, batch)
}

/// `Q Λ Qᵀ` for a random orthogonal `Q`; returned row-major.
pub fn symmetric_with_spectrum(eigenvalues: &[f64], g: &mut Gaussian) -> Vec<f64> {
    let n = eigenvalues.len();
    let m = DMatrix::from_fn(n, n, |_, _| g.standard_normal());
    let q = m.qr().q();
    let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(eigenvalues)) * q.transpose();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // symmetrize away rounding
            out.push(0.5 * (a[(i, j)] + a[(j, i)]));
        }
    }
    out
}

/// Eigenvalue of largest magnitude from a dense symmetric solver.
pub fn dense_dominant_eigenvalue(n: usize, a: &[f64]) -> f64 {
    let m = DMatrix::from_row_slice(n, n, a);
    let eig = m.symmetric_eigen().eigenvalues;
    eig.iter().copied().fold(0.0, |best: f64, x| if x.abs() > best.abs() { x } else { best })
}

/// Dense Hessian of `loss` from four-point second differences of the loss
/// alone, row-major.
pub fn dense_hessian(loss: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let n = theta.len();
    let mut hess = vec![0.0; n * n];
    let mut p = theta.to_vec();
    let f0 = loss(&p);
    for i in 0..n {
        for j in i..n {
            let value = if i == j {
                let orig = p[i];
                p[i] = orig + h;
                let up = loss(&p);
                p[i] = orig - h;
                let down = loss(&p);
                p[i] = orig;
                (up - 2.0 * f0 + down) / (h * h)
            } else {
                let (oi, oj) = (p[i], p[j]);
                let mut eval = |si: f64, sj: f64| {
                    p[i] = oi + si * h;
                    p[j] = oj + sj * h;
                    let v = loss(&p);
                    p[i] = oi;
                    p[j] = oj;
                    v
                };
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h)
            };
            hess[i * n + j] = value;
            hess[j * n + i] = value;
        }
    }
    hess
}

pub fn matvec(n: usize, a: &[f64], v: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn random_unit(n: usize, g: &mut Gaussian) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| g.standard_normal()).collect();
    let s = norm(&v);
    v.into_iter().map(|x| x / s).collect()
}
