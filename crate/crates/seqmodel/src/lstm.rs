//! LSTM stack with batched forward and full backpropagation through time,
//! written directly against contiguous f64 buffers.
//!
//! Batch activations are step-major [dim x batch] blocks (row d holds the
//! batch values of component d back to back), so every inner loop runs over
//! the batch with unit stride and vectorizes. Layers are processed
//! layer-major (a full sequence per layer) to keep each weight matrix hot.
//!
//! Gate rows inside a [4H x *] block are ordered input, forget, cell, output.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Negative log-likelihood of a softmax over output_dim classes.
    Nll,
    /// Mean absolute error of a single regression output.
    Mae,
}

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("non-finite activation at layer {layer}, step {step}")]
    NonFinite { layer: usize, step: usize },
}

#[derive(Debug, Clone)]
pub struct Layer {
    /// [4H x in_dim]
    pub w: Vec<f64>,
    /// [4H x H]
    pub u: Vec<f64>,
    /// [4H]
    pub b: Vec<f64>,
    pub in_dim: usize,
}

#[derive(Debug, Clone)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub output_dim: usize,
    pub loss: LossKind,
    pub dropout: f64,
    pub layers: Vec<Layer>,
    /// [output_dim x H]
    pub head_w: Vec<f64>,
    /// [output_dim]
    pub head_b: Vec<f64>,
}

impl LstmParams {
    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases except the forget
    /// gate at +1.
    pub fn init<R: Rng>(
        input_dim: usize,
        hidden: usize,
        n_layers: usize,
        output_dim: usize,
        loss: LossKind,
        dropout: f64,
        rng: &mut R,
    ) -> LstmParams {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let in_dim = if l == 0 { input_dim } else { hidden };
            let w = draw(4 * hidden * in_dim);
            let u = draw(4 * hidden * hidden);
            let mut b = vec![0.0; 4 * hidden];
            b[hidden..2 * hidden].fill(1.0);
            layers.push(Layer { w, u, b, in_dim });
        }
        let head_w = draw(output_dim * hidden);
        let head_b = vec![0.0; output_dim];
        LstmParams { input_dim, hidden, output_dim, loss, dropout, layers, head_w, head_b }
    }

    /// Parameter tensors in the fixed (layer w,u,b)* head_w head_b order the
    /// optimizer and checkpoints rely on.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(self.layers.len() * 3 + 2);
        for l in &self.layers {
            out.push(&l.w);
            out.push(&l.u);
            out.push(&l.b);
        }
        out.push(&self.head_w);
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(self.layers.len() * 3 + 2);
        for l in &mut self.layers {
            out.push(&mut l.w);
            out.push(&mut l.u);
            out.push(&mut l.b);
        }
        out.push(&mut self.head_w);
        out.push(&mut self.head_b);
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Gradients, same shapes and tensor order as the parameters.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub layers: Vec<Layer>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl LstmGrads {
    pub fn zeros_like(p: &LstmParams) -> LstmGrads {
        LstmGrads {
            layers: p
                .layers
                .iter()
                .map(|l| Layer {
                    w: vec![0.0; l.w.len()],
                    u: vec![0.0; l.u.len()],
                    b: vec![0.0; l.b.len()],
                    in_dim: l.in_dim,
                })
                .collect(),
            head_w: vec![0.0; p.head_w.len()],
            head_b: vec![0.0; p.head_b.len()],
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(self.layers.len() * 3 + 2);
        for l in &self.layers {
            out.push(&l.w);
            out.push(&l.u);
            out.push(&l.b);
        }
        out.push(&self.head_w);
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(self.layers.len() * 3 + 2);
        for l in &mut self.layers {
            out.push(&mut l.w);
            out.push(&mut l.u);
            out.push(&mut l.b);
        }
        out.push(&mut self.head_w);
        out.push(&mut self.head_b);
        out
    }
}

/// One minibatch in step-major layout. Padded columns past a sequence's
/// length carry zero input and are excluded from loss and gradients, so
/// extending the padding never changes an update.
pub struct Batch {
    pub nb: usize,
    /// Longest valid length in the batch; step blocks run to here only.
    pub steps: usize,
    /// steps blocks of [input_dim x nb].
    pub xs: Vec<Vec<f64>>,
    /// steps blocks of [nb]; class index or regression target.
    pub targets: Vec<Vec<f64>>,
    /// Valid lengths per batch item.
    pub lens: Vec<usize>,
    /// Total valid steps across the batch.
    pub n_valid: usize,
}

pub struct StepCache {
    /// [4H x nb] post-activation gates (i, f, g, o).
    gates: Vec<f64>,
    /// [H x nb]
    c: Vec<f64>,
    /// [H x nb]
    h: Vec<f64>,
    /// Scaled dropout mask, present between layers in train mode.
    mask: Option<Vec<f64>>,
    /// h * mask, the block actually fed to the layer above.
    dropped: Option<Vec<f64>>,
}

pub struct Cache {
    /// [layer][step]
    layers: Vec<Vec<StepCache>>,
    /// [step] blocks of [output_dim x nb].
    pub ys: Vec<Vec<f64>>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// a[r*nb+j] += sum_d w[r*inner+d] * x[d*nb+j]
fn gemm_acc(a: &mut [f64], w: &[f64], x: &[f64], rows: usize, inner: usize, nb: usize) {
    for r in 0..rows {
        let wrow = &w[r * inner..(r + 1) * inner];
        let arow = &mut a[r * nb..(r + 1) * nb];
        for d in 0..inner {
            let wv = wrow[d];
            let xrow = &x[d * nb..(d + 1) * nb];
            for j in 0..nb {
                arow[j] += wv * xrow[j];
            }
        }
    }
}

/// dx[d*nb+j] += sum_r w[r*inner+d] * da[r*nb+j]
fn gemm_t_acc(dx: &mut [f64], w: &[f64], da: &[f64], rows: usize, inner: usize, nb: usize) {
    for r in 0..rows {
        let wrow = &w[r * inner..(r + 1) * inner];
        let darow = &da[r * nb..(r + 1) * nb];
        for d in 0..inner {
            let wv = wrow[d];
            let dxrow = &mut dx[d * nb..(d + 1) * nb];
            for j in 0..nb {
                dxrow[j] += wv * darow[j];
            }
        }
    }
}

/// dw[r*inner+d] += sum_j da[r*nb+j] * x[d*nb+j]
fn gemm_outer_acc(dw: &mut [f64], da: &[f64], x: &[f64], rows: usize, inner: usize, nb: usize) {
    for r in 0..rows {
        let darow = &da[r * nb..(r + 1) * nb];
        let dwrow = &mut dw[r * inner..(r + 1) * inner];
        for d in 0..inner {
            let xrow = &x[d * nb..(d + 1) * nb];
            let mut s = 0.0;
            for j in 0..nb {
                s += darow[j] * xrow[j];
            }
            dwrow[d] += s;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn step_forward(
    layer: &Layer,
    hd: usize,
    nb: usize,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    h: &mut [f64],
) {
    for r in 0..4 * hd {
        gates[r * nb..(r + 1) * nb].fill(layer.b[r]);
    }
    gemm_acc(gates, &layer.w, x, 4 * hd, layer.in_dim, nb);
    gemm_acc(gates, &layer.u, h_prev, 4 * hd, hd, nb);
    for k in 0..hd {
        for j in 0..nb {
            let i_v = sigmoid(gates[k * nb + j]);
            let f_v = sigmoid(gates[(hd + k) * nb + j]);
            let g_v = gates[(2 * hd + k) * nb + j].tanh();
            let o_v = sigmoid(gates[(3 * hd + k) * nb + j]);
            let c_v = f_v * c_prev[k * nb + j] + i_v * g_v;
            gates[k * nb + j] = i_v;
            gates[(hd + k) * nb + j] = f_v;
            gates[(2 * hd + k) * nb + j] = g_v;
            gates[(3 * hd + k) * nb + j] = o_v;
            c[k * nb + j] = c_v;
            h[k * nb + j] = o_v * c_v.tanh();
        }
    }
}

/// Run the stack over a batch. Dropout masks are drawn between layers in
/// train mode only (inverted scaling, so evaluation needs no rescale).
pub fn forward<R: Rng>(
    p: &LstmParams,
    batch: &Batch,
    train: bool,
    rng: &mut R,
) -> Result<Cache, LstmError> {
    let hd = p.hidden;
    let nb = batch.nb;
    let n_layers = p.layers.len();
    let zeros = vec![0.0; hd * nb];
    let keep = 1.0 - p.dropout;

    let mut layers_cache: Vec<Vec<StepCache>> = Vec::with_capacity(n_layers);
    for (l, layer) in p.layers.iter().enumerate() {
        let mut steps: Vec<StepCache> = Vec::with_capacity(batch.steps);
        for t in 0..batch.steps {
            let x: &[f64] = if l == 0 {
                &batch.xs[t]
            } else {
                let below = &layers_cache[l - 1][t];
                below.dropped.as_deref().unwrap_or(&below.h)
            };
            let mut gates = vec![0.0; 4 * hd * nb];
            let mut c = vec![0.0; hd * nb];
            let mut h = vec![0.0; hd * nb];
            {
                let (h_prev, c_prev): (&[f64], &[f64]) = match t {
                    0 => (&zeros, &zeros),
                    _ => (&steps[t - 1].h, &steps[t - 1].c),
                };
                step_forward(layer, hd, nb, x, h_prev, c_prev, &mut gates, &mut c, &mut h);
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(LstmError::NonFinite { layer: l, step: t });
            }
            let (mask, dropped) = if l + 1 < n_layers && train && p.dropout > 0.0 {
                let mut m = vec![0.0; hd * nb];
                for v in m.iter_mut() {
                    *v = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
                }
                let d = h.iter().zip(&m).map(|(hv, mv)| hv * mv).collect();
                (Some(m), Some(d))
            } else {
                (None, None)
            };
            steps.push(StepCache { gates, c, h, mask, dropped });
        }
        layers_cache.push(steps);
    }

    let mut ys = Vec::with_capacity(batch.steps);
    let top = n_layers - 1;
    for t in 0..batch.steps {
        let mut y = vec![0.0; p.output_dim * nb];
        for r in 0..p.output_dim {
            y[r * nb..(r + 1) * nb].fill(p.head_b[r]);
        }
        gemm_acc(&mut y, &p.head_w, &layers_cache[top][t].h, p.output_dim, hd, nb);
        ys.push(y);
    }
    Ok(Cache { layers: layers_cache, ys })
}

fn softmax_col(y: &[f64], k: usize, nb: usize, j: usize, out: &mut [f64]) {
    let mut mx = f64::NEG_INFINITY;
    for r in 0..k {
        mx = mx.max(y[r * nb + j]);
    }
    let mut sum = 0.0;
    for r in 0..k {
        let e = (y[r * nb + j] - mx).exp();
        out[r] = e;
        sum += e;
    }
    for v in out[..k].iter_mut() {
        *v /= sum;
    }
}

/// Mean loss over the batch's valid steps.
pub fn mean_loss(p: &LstmParams, batch: &Batch, cache: &Cache) -> f64 {
    let (loss_sum, _, n) = accumulate_scores(p, batch, cache);
    if n == 0 {
        0.0
    } else {
        loss_sum / n as f64
    }
}

/// (loss sum, score sum, n valid steps). The score is argmax hits for
/// classification and absolute error for regression.
pub fn accumulate_scores(p: &LstmParams, batch: &Batch, cache: &Cache) -> (f64, f64, usize) {
    let nb = batch.nb;
    let k = p.output_dim;
    let mut probs = vec![0.0; k];
    let mut loss_sum = 0.0;
    let mut score_sum = 0.0;
    let mut n = 0usize;
    for t in 0..batch.steps {
        let y = &cache.ys[t];
        for j in 0..nb {
            if t >= batch.lens[j] {
                continue;
            }
            n += 1;
            match p.loss {
                LossKind::Nll => {
                    softmax_col(y, k, nb, j, &mut probs);
                    let target = batch.targets[t][j] as usize;
                    loss_sum += -(probs[target].max(1e-300)).ln();
                    let argmax = (0..k)
                        .max_by(|&a, &b| probs[a].partial_cmp(&probs[b]).unwrap())
                        .unwrap();
                    if argmax == target {
                        score_sum += 1.0;
                    }
                }
                LossKind::Mae => {
                    let err = (y[j] - batch.targets[t][j]).abs();
                    loss_sum += err;
                    score_sum += err;
                }
            }
        }
    }
    (loss_sum, score_sum, n)
}

/// Full BPTT over a cached forward pass. Gradients are means over the
/// batch's valid steps.
pub fn backward(p: &LstmParams, batch: &Batch, cache: &Cache) -> LstmGrads {
    let hd = p.hidden;
    let nb = batch.nb;
    let k = p.output_dim;
    let n_layers = p.layers.len();
    let top = n_layers - 1;
    let inv_n = 1.0 / batch.n_valid.max(1) as f64;
    let zeros = vec![0.0; hd * nb];

    let mut grads = LstmGrads::zeros_like(p);
    let mut dh_rec = vec![vec![0.0; hd * nb]; n_layers];
    let mut dc_rec = vec![vec![0.0; hd * nb]; n_layers];
    let mut dy = vec![0.0; k * nb];
    let mut probs = vec![0.0; k];
    let mut da = vec![0.0; 4 * hd * nb];
    let mut dh_now = vec![0.0; hd * nb];
    let mut dc_now = vec![0.0; hd * nb];
    let max_in = p.layers.iter().map(|l| l.in_dim).max().unwrap();
    let mut dx = vec![0.0; max_in * nb];
    let mut dh_above = vec![0.0; hd * nb];

    for t in (0..batch.steps).rev() {
        // Head gradient; padded columns stay zero so nothing flows there.
        let y = &cache.ys[t];
        dy.fill(0.0);
        for j in 0..nb {
            if t >= batch.lens[j] {
                continue;
            }
            match p.loss {
                LossKind::Nll => {
                    softmax_col(y, k, nb, j, &mut probs);
                    let target = batch.targets[t][j] as usize;
                    for r in 0..k {
                        let ind = if r == target { 1.0 } else { 0.0 };
                        dy[r * nb + j] = (probs[r] - ind) * inv_n;
                    }
                }
                LossKind::Mae => {
                    let diff = y[j] - batch.targets[t][j];
                    dy[j] = diff.signum() * inv_n;
                }
            }
        }
        let h_top = &cache.layers[top][t].h;
        gemm_outer_acc(&mut grads.head_w, &dy, h_top, k, hd, nb);
        for r in 0..k {
            grads.head_b[r] += dy[r * nb..(r + 1) * nb].iter().sum::<f64>();
        }

        for l in (0..n_layers).rev() {
            dh_now.copy_from_slice(&dh_rec[l]);
            if l == top {
                gemm_t_acc(&mut dh_now, &p.head_w, &dy, k, hd, nb);
            } else {
                for (dv, av) in dh_now.iter_mut().zip(&dh_above) {
                    *dv += *av;
                }
            }
            dc_now.copy_from_slice(&dc_rec[l]);

            let sc = &cache.layers[l][t];
            let (h_prev, c_prev): (&[f64], &[f64]) = match t {
                0 => (&zeros, &zeros),
                _ => (&cache.layers[l][t - 1].h, &cache.layers[l][t - 1].c),
            };
            let x: &[f64] = if l == 0 {
                &batch.xs[t]
            } else {
                let below = &cache.layers[l - 1][t];
                below.dropped.as_deref().unwrap_or(&below.h)
            };

            // Gate-local backward; writes da and the recurrent grads in place.
            let gates = &sc.gates;
            let dh_prev_out = &mut dh_rec[l];
            let dc_prev_out = &mut dc_rec[l];
            for kk in 0..hd {
                for j in 0..nb {
                    let idx = kk * nb + j;
                    let i_v = gates[idx];
                    let f_v = gates[(hd + kk) * nb + j];
                    let g_v = gates[(2 * hd + kk) * nb + j];
                    let o_v = gates[(3 * hd + kk) * nb + j];
                    let tc = sc.c[idx].tanh();
                    let dh_v = dh_now[idx];
                    let dc_v = dc_now[idx] + dh_v * o_v * (1.0 - tc * tc);
                    let di = dc_v * g_v;
                    let df = dc_v * c_prev[idx];
                    let dg = dc_v * i_v;
                    let do_v = dh_v * tc;
                    da[idx] = di * i_v * (1.0 - i_v);
                    da[(hd + kk) * nb + j] = df * f_v * (1.0 - f_v);
                    da[(2 * hd + kk) * nb + j] = dg * (1.0 - g_v * g_v);
                    da[(3 * hd + kk) * nb + j] = do_v * o_v * (1.0 - o_v);
                    dc_prev_out[idx] = dc_v * f_v;
                }
            }
            let gl = &mut grads.layers[l];
            gemm_outer_acc(&mut gl.w, &da, x, 4 * hd, p.layers[l].in_dim, nb);
            gemm_outer_acc(&mut gl.u, &da, h_prev, 4 * hd, hd, nb);
            for r in 0..4 * hd {
                gl.b[r] += da[r * nb..(r + 1) * nb].iter().sum::<f64>();
            }
            dh_prev_out.fill(0.0);
            gemm_t_acc(dh_prev_out, &p.layers[l].u, &da, 4 * hd, hd, nb);
            if l > 0 {
                let in_dim = p.layers[l].in_dim;
                dx[..in_dim * nb].fill(0.0);
                gemm_t_acc(&mut dx, &p.layers[l].w, &da, 4 * hd, in_dim, nb);
                match &cache.layers[l - 1][t].mask {
                    Some(m) => {
                        for i in 0..hd * nb {
                            dh_above[i] = dx[i] * m[i];
                        }
                    }
                    None => dh_above.copy_from_slice(&dx[..hd * nb]),
                }
            }
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::RngFactory;

    fn tiny_batch(input_dim: usize, lens: &[usize], seed: u64) -> Batch {
        let mut rng = RngFactory::new(seed).stream("seqmodel/test-batch");
        let nb = lens.len();
        let steps = *lens.iter().max().unwrap();
        let mut xs = Vec::new();
        let mut targets = Vec::new();
        for t in 0..steps {
            let mut block = vec![0.0; input_dim * nb];
            let mut tgt = vec![0.0; nb];
            for j in 0..nb {
                if t < lens[j] {
                    for d in 0..input_dim {
                        block[d * nb + j] = rng.gen_range(-1.0..1.0);
                    }
                    tgt[j] = rng.gen_range(0..4) as f64;
                }
            }
            xs.push(block);
            targets.push(tgt);
        }
        Batch { nb, steps, xs, targets, lens: lens.to_vec(), n_valid: lens.iter().sum() }
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let mut rng = RngFactory::new(1).stream("seqmodel/zero");
        let mut p = LstmParams::init(6, 5, 2, 4, LossKind::Nll, 0.0, &mut rng);
        for t in p.tensors_mut() {
            t.fill(0.0);
        }
        let batch = tiny_batch(6, &[3], 2);
        let cache = forward(&p, &batch, false, &mut rng).unwrap();
        let y = &cache.ys[0];
        let mut probs = vec![0.0; 4];
        softmax_col(y, 4, 1, 0, &mut probs);
        for v in probs {
            assert!((v - 0.25).abs() < 1e-12);
        }
        // NLL of the true class is exactly -ln 0.25.
        let loss = mean_loss(&p, &batch, &cache);
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = RngFactory::new(3).stream("seqmodel/det");
        let p = LstmParams::init(6, 5, 2, 4, LossKind::Nll, 0.0, &mut rng);
        let batch = tiny_batch(6, &[4, 2], 5);
        let a = forward(&p, &batch, false, &mut rng).unwrap();
        let b = forward(&p, &batch, false, &mut rng).unwrap();
        for (ya, yb) in a.ys.iter().zip(&b.ys) {
            assert_eq!(ya, yb);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = RngFactory::new(4).stream("seqmodel/sum1");
        let p = LstmParams::init(6, 7, 2, 4, LossKind::Nll, 0.0, &mut rng);
        let batch = tiny_batch(6, &[5, 3, 5], 6);
        let cache = forward(&p, &batch, false, &mut rng).unwrap();
        let mut probs = vec![0.0; 4];
        for t in 0..batch.steps {
            for j in 0..batch.nb {
                softmax_col(&cache.ys[t], 4, batch.nb, j, &mut probs);
                let s: f64 = probs.iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn padding_changes_neither_loss_nor_gradients() {
        let mut rng = RngFactory::new(9).stream("seqmodel/pad");
        let p = LstmParams::init(6, 5, 2, 4, LossKind::Nll, 0.0, &mut rng);
        let base = tiny_batch(6, &[3, 2], 11);

        // Same data, two extra all-padded steps appended.
        let mut padded = tiny_batch(6, &[3, 2], 11);
        padded.steps += 2;
        padded.xs.push(vec![0.0; 6 * 2]);
        padded.xs.push(vec![0.0; 6 * 2]);
        padded.targets.push(vec![0.0; 2]);
        padded.targets.push(vec![0.0; 2]);

        let ca = forward(&p, &base, false, &mut rng).unwrap();
        let cb = forward(&p, &padded, false, &mut rng).unwrap();
        assert_eq!(mean_loss(&p, &base, &ca).to_bits(), mean_loss(&p, &padded, &cb).to_bits());
        let ga = backward(&p, &base, &ca);
        let gb = backward(&p, &padded, &cb);
        for (ta, tb) in ga.tensors().iter().zip(gb.tensors().iter()) {
            for (a, b) in ta.iter().zip(tb.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn fully_masked_batch_contributes_nothing() {
        let mut rng = RngFactory::new(12).stream("seqmodel/masked");
        let p = LstmParams::init(6, 5, 2, 4, LossKind::Nll, 0.0, &mut rng);
        let mut batch = tiny_batch(6, &[2], 13);
        batch.lens = vec![0];
        batch.n_valid = 0;
        let cache = forward(&p, &batch, false, &mut rng).unwrap();
        assert_eq!(mean_loss(&p, &batch, &cache), 0.0);
        let g = backward(&p, &batch, &cache);
        for t in g.tensors() {
            assert!(t.iter().all(|v| *v == 0.0));
        }
    }
}
