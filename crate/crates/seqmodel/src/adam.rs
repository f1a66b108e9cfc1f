//! Adam with bias correction over the flattened parameter tensors, plus the
//! gradient clip applied beforehand.

use crate::lstm::{LstmGrads, LstmParams};
use cdrkit_core::config::ClipMode;

/// Clamp each component (value mode) or rescale the whole gradient so its
/// L2 norm is at most the threshold (norm mode).
pub fn clip_grads(grads: &mut LstmGrads, mode: ClipMode, threshold: f64) {
    match mode {
        ClipMode::Value => {
            for t in grads.tensors_mut() {
                for g in t.iter_mut() {
                    *g = g.clamp(-threshold, threshold);
                }
            }
        }
        ClipMode::Norm => {
            let norm2: f64 = grads.tensors().iter().map(|t| t.iter().map(|g| g * g).sum::<f64>()).sum();
            let norm = norm2.sqrt();
            if norm > threshold {
                let scale = threshold / norm;
                for t in grads.tensors_mut() {
                    for g in t.iter_mut() {
                        *g *= scale;
                    }
                }
            }
        }
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut LstmParams, grads: &LstmGrads) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut off = 0;
        let gts = grads.tensors();
        for (pi, pt) in params.tensors_mut().into_iter().enumerate() {
            let gt = gts[pi];
            for (i, pv) in pt.iter_mut().enumerate() {
                let g = gt[i];
                let m = &mut self.m[off + i];
                let v = &mut self.v[off + i];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *pv -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            off += pt.len();
        }
    }
}
