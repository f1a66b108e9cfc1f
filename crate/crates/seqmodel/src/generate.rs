//! Stateful single-sequence inference for autoregressive sampling. The
//! arithmetic mirrors the batched forward pass exactly (same accumulation
//! order, no dropout), so a step-by-step walk reproduces its outputs bit for
//! bit at batch size one.

use crate::lstm::LstmParams;

pub struct LstmState {
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    gates: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmState {
    pub fn new(p: &LstmParams) -> LstmState {
        LstmState {
            h: vec![vec![0.0; p.hidden]; p.layers.len()],
            c: vec![vec![0.0; p.hidden]; p.layers.len()],
            gates: vec![0.0; 4 * p.hidden],
        }
    }

    pub fn reset(&mut self) {
        for h in &mut self.h {
            h.fill(0.0);
        }
        for c in &mut self.c {
            c.fill(0.0);
        }
    }
}

/// Advance the recurrent state by one input and return the head output.
pub fn step_state(p: &LstmParams, st: &mut LstmState, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), p.input_dim);
    let hd = p.hidden;
    let mut input: Vec<f64> = x.to_vec();
    for (l, layer) in p.layers.iter().enumerate() {
        for r in 0..4 * hd {
            let mut acc = layer.b[r];
            let wr = &layer.w[r * layer.in_dim..(r + 1) * layer.in_dim];
            for (d, &xv) in input.iter().enumerate() {
                acc += wr[d] * xv;
            }
            let ur = &layer.u[r * hd..(r + 1) * hd];
            for (d, &hv) in st.h[l].iter().enumerate() {
                acc += ur[d] * hv;
            }
            st.gates[r] = acc;
        }
        for k in 0..hd {
            let i = sigmoid(st.gates[k]);
            let f = sigmoid(st.gates[hd + k]);
            let g = st.gates[2 * hd + k].tanh();
            let o = sigmoid(st.gates[3 * hd + k]);
            let c = f * st.c[l][k] + i * g;
            st.c[l][k] = c;
            st.h[l][k] = o * c.tanh();
        }
        input.clear();
        input.extend_from_slice(&st.h[l]);
    }
    let top = &st.h[p.layers.len() - 1];
    let mut y = Vec::with_capacity(p.output_dim);
    for r in 0..p.output_dim {
        let mut acc = p.head_b[r];
        let wr = &p.head_w[r * hd..(r + 1) * hd];
        for (d, &hv) in top.iter().enumerate() {
            acc += wr[d] * hv;
        }
        y.push(acc);
    }
    y
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
