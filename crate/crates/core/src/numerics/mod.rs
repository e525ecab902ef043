//! Dense-tensor numerics: a small reverse-mode differentiation graph plus the
//! softened-softmax / cross-entropy / KL primitives used by the training code.
//!
//! Everything is 64-bit; nets here are desk-scale and reproducibility matters
//! more than speed. The probability clamp [`EPS`] is the only nonlinearity
//! guard applied inside logarithms.

mod graph;
mod serialize;
mod tensor;

pub use graph::{Gradients, Graph, NodeId};
pub use serialize::{deserialize_tensors, serialize_tensors};
pub use tensor::Tensor;

use rand::Rng;

use crate::error::{Error, Result};

/// Probability clamp applied inside logarithms.
pub const EPS: f64 = 1e-12;

/// Row-wise softened softmax of `z / tau`, stabilized by max-subtraction.
pub(crate) fn softmax_kernel(z: &Tensor, tau: f64) -> Tensor {
    let (n, m) = z.dims2();
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &z.data()[i * m..(i + 1) * m];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for j in 0..m {
            let e = ((row[j] - max) / tau).exp();
            out[i * m + j] = e;
            sum += e;
        }
        for j in 0..m {
            out[i * m + j] /= sum;
        }
    }
    Tensor::new(z.shape().to_vec(), out).expect("same shape")
}

pub(crate) fn kl_kernel(teacher: &Tensor, student: &Tensor) -> Result<f64> {
    if teacher.shape() != student.shape() {
        return Err(Error::ShapeMismatch("KL divergence operands".into()));
    }
    let (n, _) = teacher.dims2();
    let mut total = 0.0;
    for (t, s) in teacher.data().iter().zip(student.data()) {
        if *t > 0.0 {
            total += t * (t.max(EPS) / s.max(EPS)).ln();
        }
    }
    Ok(total / n as f64)
}

/// Softened softmax q_c = exp(z_c/tau) / sum_k exp(z_k/tau).
pub fn softened_softmax(logits: &Tensor, tau: f64) -> Result<Tensor> {
    if tau <= 0.0 {
        return Err(Error::invalid("temperature must be positive"));
    }
    if logits.is_empty() {
        return Err(Error::invalid("logits must be nonempty"));
    }
    Ok(softmax_kernel(logits, tau))
}

/// Cross entropy -sum_c y_c log p_c of a single probability row (or the mean
/// over rows for a batch), with one-hot targets.
pub fn cross_entropy(probs: &Tensor, targets: &Tensor) -> Result<f64> {
    if probs.shape() != targets.shape() {
        return Err(Error::ShapeMismatch("cross entropy operands".into()));
    }
    let (n, _) = probs.dims2();
    let mut total = 0.0;
    for (p, y) in probs.data().iter().zip(targets.data()) {
        if *y != 0.0 {
            total -= y * p.max(EPS).ln();
        }
    }
    Ok(total / n as f64)
}

/// KL divergence sum_c q_t log(q_t / q_s) (mean over rows for batches).
pub fn kl_divergence(teacher: &Tensor, student: &Tensor) -> Result<f64> {
    kl_kernel(teacher, student)
}

/// Seeded uniform initialization in [-s, s] with s = sqrt(6/(fan_in+fan_out)).
pub fn glorot_uniform(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-s..=s)).collect();
    Tensor::matrix(fan_in, fan_out, data).expect("sized data")
}

/// Maximum relative error between analytic gradients and central finite
/// differences of `loss_fn` at the given parameters.
///
/// `loss_fn` receives the full parameter list and returns the scalar loss;
/// `analytic` must hold one gradient tensor per parameter.
pub fn finite_difference_error(
    loss_fn: &dyn Fn(&[Tensor]) -> f64,
    params: &[Tensor],
    analytic: &[Tensor],
    step: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, grad) in analytic.iter().enumerate() {
        for j in 0..params[pi].len() {
            let orig = params[pi].data()[j];
            work[pi].data_mut()[j] = orig + step;
            let up = loss_fn(&work);
            work[pi].data_mut()[j] = orig - step;
            let down = loss_fn(&work);
            work[pi].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = grad.data()[j];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let q = softened_softmax(&Tensor::vector(vec![2.5; 4]), 1.7).unwrap();
        for &v in q.data() {
            assert_relative_eq!(v, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_tau_one_is_standard() {
        let z = Tensor::vector(vec![1.0, 2.0, 3.0]);
        let q = softened_softmax(&z, 1.0).unwrap();
        let denom: f64 = z.data().iter().map(|v| v.exp()).sum();
        for (qi, zi) in q.data().iter().zip(z.data()) {
            assert_relative_eq!(*qi, zi.exp() / denom, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_high_temperature_flattens() {
        let q = softened_softmax(&Tensor::vector(vec![5.0, -3.0, 0.7]), 1e6).unwrap();
        for &v in q.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_rejects_bad_temperature() {
        assert!(softened_softmax(&Tensor::vector(vec![1.0]), 0.0).is_err());
        assert!(softened_softmax(&Tensor::vector(vec![1.0]), -2.0).is_err());
    }

    #[test]
    fn softmax_shift_invariance() {
        let z = Tensor::vector(vec![0.3, -1.2, 2.2, 0.0]);
        let shifted = z.map(|v| v + 123.456);
        let a = softened_softmax(&z, 2.0).unwrap();
        let b = softened_softmax(&shifted, 2.0).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        let sum: f64 = a.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_reference_values() {
        let point_mass = Tensor::vector(vec![0.0, 1.0, 0.0]);
        assert_relative_eq!(cross_entropy(&point_mass, &point_mass).unwrap(), 0.0, epsilon = 1e-9);

        let uniform = Tensor::vector(vec![0.25; 4]);
        let y = Tensor::vector(vec![0.0, 0.0, 1.0, 0.0]);
        assert_relative_eq!(cross_entropy(&uniform, &y).unwrap(), 4f64.ln(), epsilon = 1e-12);

        // -log 0.7 = 0.35667...
        let p = Tensor::vector(vec![0.7, 0.3]);
        let y0 = Tensor::vector(vec![1.0, 0.0]);
        assert_relative_eq!(cross_entropy(&p, &y0).unwrap(), 0.356675, epsilon = 1e-6);
    }

    #[test]
    fn kl_reference_values() {
        let p = Tensor::vector(vec![0.4, 0.6]);
        assert_relative_eq!(kl_divergence(&p, &p).unwrap(), 0.0, epsilon = 1e-12);

        let t = Tensor::vector(vec![1.0, 0.0]);
        let s = Tensor::vector(vec![0.5, 0.5]);
        assert_relative_eq!(kl_divergence(&t, &s).unwrap(), 2f64.ln(), epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn kl_nonnegative_on_random_pairs(a in prop::collection::vec(0.01f64..1.0, 5), b in prop::collection::vec(0.01f64..1.0, 5)) {
            let norm = |v: &[f64]| {
                let s: f64 = v.iter().sum();
                Tensor::vector(v.iter().map(|x| x / s).collect())
            };
            let kl = kl_divergence(&norm(&a), &norm(&b)).unwrap();
            prop_assert!(kl >= -1e-12);
        }
    }

    #[test]
    fn backward_constant_loss_gives_zero_gradients() {
        let mut g = Graph::new();
        let w = g.param(Tensor::vector(vec![1.0, -2.0])).unwrap();
        let c = g.input(Tensor::scalar(3.0)).unwrap();
        // Loss ignores w entirely.
        let loss = g.scale(c, 2.0).unwrap();
        let grads = g.backward(loss).unwrap();
        let gw = grads.of(w, g.value(w));
        assert_eq!(gw.data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_quadratic_gradient_is_parameter() {
        // loss = 1/2 ||w||^2 via 0.5 * (w w^T), gradient = w.
        let mut g = Graph::new();
        let w = g.param(Tensor::matrix(1, 3, vec![0.5, -1.5, 2.0]).unwrap()).unwrap();
        let sq = g.matmul_bt(w, w).unwrap();
        let loss = g.scale(sq, 0.5).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.of(w, g.value(w)).data(), &[0.5, -1.5, 2.0]);
    }

    #[test]
    fn backward_rejects_nonscalar_loss() {
        let mut g = Graph::new();
        let w = g.param(Tensor::vector(vec![1.0, 2.0])).unwrap();
        assert!(g.backward(w).is_err());
    }

    fn two_layer_loss(params: &[Tensor]) -> f64 {
        // 4-sample batch, 3 -> 4 -> 3 net, composite CE + scaled KL loss.
        let x = Tensor::matrix(4, 3, (0..12).map(|v| ((v * 7 % 11) as f64) / 5.0 - 1.0).collect())
            .unwrap();
        let y = Tensor::matrix(
            4,
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let teacher = Tensor::matrix(
            4,
            3,
            vec![0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.2, 0.7, 0.3, 0.4, 0.3],
        )
        .unwrap();
        let mut g = Graph::new();
        let xin = g.input(x).unwrap();
        let yin = g.input(y).unwrap();
        let tin = g.input(teacher).unwrap();
        let w1 = g.param(params[0].clone()).unwrap();
        let b1 = g.param(params[1].clone()).unwrap();
        let w2 = g.param(params[2].clone()).unwrap();
        let b2 = g.param(params[3].clone()).unwrap();
        let h = g.matmul(xin, w1).unwrap();
        let h = g.add_bias(h, b1).unwrap();
        let h = g.tanh(h).unwrap();
        let z = g.matmul(h, w2).unwrap();
        let z = g.add_bias(z, b2).unwrap();
        let p = g.softmax_rows(z, 1.0).unwrap();
        let ce = g.cross_entropy_mean(p, yin).unwrap();
        let q = g.softmax_rows(z, 2.5).unwrap();
        let kl = g.kl_div_mean(tin, q).unwrap();
        let kl = g.scale(kl, 2.5 * 2.5).unwrap();
        let loss = g.add_scalars(ce, kl).unwrap();
        g.value(loss).item().unwrap()
    }

    #[test]
    fn backward_matches_finite_differences_on_composite_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = vec![
            glorot_uniform(&mut rng, 3, 4),
            Tensor::vector(vec![0.05, -0.1, 0.2, 0.0]),
            glorot_uniform(&mut rng, 4, 3),
            Tensor::vector(vec![0.1, 0.0, -0.2]),
        ];

        // Analytic gradients from a replayed graph.
        let x = Tensor::matrix(4, 3, (0..12).map(|v| ((v * 7 % 11) as f64) / 5.0 - 1.0).collect())
            .unwrap();
        let y = Tensor::matrix(
            4,
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let teacher = Tensor::matrix(
            4,
            3,
            vec![0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.2, 0.7, 0.3, 0.4, 0.3],
        )
        .unwrap();
        let mut g = Graph::new();
        let xin = g.input(x).unwrap();
        let yin = g.input(y).unwrap();
        let tin = g.input(teacher).unwrap();
        let ids: Vec<NodeId> = params.iter().map(|p| g.param(p.clone()).unwrap()).collect();
        let h = g.matmul(xin, ids[0]).unwrap();
        let h = g.add_bias(h, ids[1]).unwrap();
        let h = g.tanh(h).unwrap();
        let z = g.matmul(h, ids[2]).unwrap();
        let z = g.add_bias(z, ids[3]).unwrap();
        let p = g.softmax_rows(z, 1.0).unwrap();
        let ce = g.cross_entropy_mean(p, yin).unwrap();
        let q = g.softmax_rows(z, 2.5).unwrap();
        let kl = g.kl_div_mean(tin, q).unwrap();
        let kl = g.scale(kl, 2.5 * 2.5).unwrap();
        let loss = g.add_scalars(ce, kl).unwrap();
        let grads = g.backward(loss).unwrap();
        let analytic: Vec<Tensor> =
            ids.iter().zip(&params).map(|(id, p)| grads.of(*id, p)).collect();

        let err = finite_difference_error(&two_layer_loss, &params, &analytic, 1e-5);
        assert!(err <= 1e-4, "finite-difference mismatch: {err}");
    }

    #[test]
    fn relu_backward_matches_finite_differences() {
        let loss_fn = |params: &[Tensor]| {
            let mut g = Graph::new();
            let w = g.param(params[0].clone()).unwrap();
            let r = g.relu(w).unwrap();
            let s = g.matmul_bt(r, r).unwrap();
            let loss = g.scale(s, 0.5).unwrap();
            g.value(loss).item().unwrap()
        };
        let params = vec![Tensor::matrix(1, 4, vec![0.5, -0.7, 1.2, 0.3]).unwrap()];
        let mut g = Graph::new();
        let w = g.param(params[0].clone()).unwrap();
        let r = g.relu(w).unwrap();
        let s = g.matmul_bt(r, r).unwrap();
        let loss = g.scale(s, 0.5).unwrap();
        let grads = g.backward(loss).unwrap();
        let analytic = vec![grads.of(w, &params[0])];
        assert!(finite_difference_error(&loss_fn, &params, &analytic, 1e-5) <= 1e-4);
    }

    #[test]
    fn nonfinite_values_are_rejected() {
        let mut g = Graph::new();
        let a = g.param(Tensor::scalar(1e308)).unwrap();
        let b = g.param(Tensor::scalar(1e308)).unwrap();
        // 2e308 overflows to infinity, which trips the per-op finiteness check.
        assert!(g.add(a, b).is_err());
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = glorot_uniform(&mut rng, 8, 8);
        let s = (6.0 / 16.0f64).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= s));
        let mut rng2 = ChaCha8Rng::seed_from_u64(11);
        let t2 = glorot_uniform(&mut rng2, 8, 8);
        assert_eq!(t.data(), t2.data());
    }
}
