use crate::scalar::Scalar;
use crate::tensor::gcn::{GcnGrads, GcnParams};
use crate::tensor::DenseMatrix;

/// Adaptive-moment optimiser state for the two GCN weight matrices.
///
/// Weight decay acts as an L2 penalty `wd/2·‖Θ₁‖²` on the first layer only:
/// `wd·Θ₁` is added to that layer's gradient before the moment updates.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    pub lr: T,
    pub weight_decay: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    m: GcnParams<T>,
    v: GcnParams<T>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &GcnParams<T>, lr: f64, weight_decay: f64) -> Self {
        let zeros = |m: &DenseMatrix<T>| DenseMatrix::zeros(m.rows(), m.cols());
        let z = GcnParams {
            theta1: zeros(&params.theta1),
            theta2: zeros(&params.theta2),
        };
        OptimizerState {
            lr: T::lit(lr),
            weight_decay: T::lit(weight_decay),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            m: z.clone(),
            v: z,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

pub fn adam_step<T: Scalar>(params: &mut GcnParams<T>, grads: &GcnGrads<T>, state: &mut OptimizerState<T>) {
    state.step += 1;
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let bc1 = T::one() - state.beta1.powi(t);
    let bc2 = T::one() - state.beta2.powi(t);
    let layers = [
        (&mut params.theta1, &grads.theta1, &mut state.m.theta1, &mut state.v.theta1, true),
        (&mut params.theta2, &grads.theta2, &mut state.m.theta2, &mut state.v.theta2, false),
    ];
    for (p, g, m, v, decay) in layers {
        assert_eq!(p.shape(), g.shape(), "gradient shape must match parameter");
        let iter = p
            .as_mut_slice()
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice().iter_mut().zip(v.as_mut_slice().iter_mut()));
        for ((w, &gr), (mi, vi)) in iter {
            let gr = if decay { gr + state.weight_decay * *w } else { gr };
            *mi = state.beta1 * *mi + (T::one() - state.beta1) * gr;
            *vi = state.beta2 * *vi + (T::one() - state.beta2) * gr * gr;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *w -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
}
