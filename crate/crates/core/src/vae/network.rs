use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::arch::NetworkArchitecture;
use crate::sampling::SampleBatch;
use crate::{Error, Result};

/// Negative-side slope of the hidden activations.
pub const LEAK: f64 = 0.2;
/// `log σ²` is clamped to `[-LOGVAR_CLAMP, LOGVAR_CLAMP]`.
pub const LOGVAR_CLAMP: f64 = 10.0;
/// Decoder probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the log-likelihood.
pub const PROB_CLAMP: f64 = 1e-7;

const GRAD_CHUNK: usize = 32;

#[inline]
pub fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        LEAK * x
    }
}

#[inline]
fn leaky_relu_slope(pre: f64) -> f64 {
    if pre >= 0.0 {
        1.0
    } else {
        LEAK
    }
}

#[inline]
fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    EncoderHidden(usize),
    MuHead,
    LogvarHead,
    DecoderHidden(usize),
    DecoderOutput,
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerKind::EncoderHidden(i) => write!(f, "encoder.hidden[{i}]"),
            LayerKind::MuHead => write!(f, "encoder.mu"),
            LayerKind::LogvarHead => write!(f, "encoder.logvar"),
            LayerKind::DecoderHidden(i) => write!(f, "decoder.hidden[{i}]"),
            LayerKind::DecoderOutput => write!(f, "decoder.output"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub kind: LayerKind,
    pub inputs: usize,
    pub outputs: usize,
    /// Start of the row-major `outputs × inputs` weights; biases follow.
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    pub fn len(&self) -> usize {
        self.weight_len() + self.outputs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All trainable values in one flat buffer. Layer order: encoder hidden,
/// μ head, log σ² head, decoder hidden, decoder output. A gradient is a
/// `Parameters` with the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    arch: NetworkArchitecture,
    layers: Vec<LayerShape>,
    data: Vec<f64>,
}

impl Parameters {
    pub fn zeros(arch: &NetworkArchitecture) -> Self {
        let n = arch.n();
        let latent = arch.latent_dim();
        let enc = arch.encoder_hidden();
        let dec = arch.decoder_hidden();
        let mut dims: Vec<(LayerKind, usize, usize)> = Vec::new();
        let mut prev = n;
        for (i, &w) in enc.iter().enumerate() {
            dims.push((LayerKind::EncoderHidden(i), prev, w));
            prev = w;
        }
        dims.push((LayerKind::MuHead, prev, latent));
        dims.push((LayerKind::LogvarHead, prev, latent));
        prev = latent;
        for (i, &w) in dec.iter().enumerate() {
            dims.push((LayerKind::DecoderHidden(i), prev, w));
            prev = w;
        }
        dims.push((LayerKind::DecoderOutput, prev, n));

        let mut offset = 0;
        let layers: Vec<LayerShape> = dims
            .into_iter()
            .map(|(kind, inputs, outputs)| {
                let l = LayerShape {
                    kind,
                    inputs,
                    outputs,
                    offset,
                };
                offset += l.len();
                l
            })
            .collect();
        Self {
            arch: arch.clone(),
            layers,
            data: vec![0.0; offset],
        }
    }

    /// He-scaled normals (`std = √(2 / fan_in)`) for leaky-ReLU layers,
    /// `√(1 / fan_in)` for the affine/sigmoid outputs, 0.01 for the
    /// log-variance head so training starts near the prior. Biases start at 0.
    pub fn init<R: Rng>(arch: &NetworkArchitecture, rng: &mut R) -> Self {
        let mut p = Self::zeros(arch);
        for l in p.layers.clone() {
            let std = match l.kind {
                LayerKind::EncoderHidden(_) | LayerKind::DecoderHidden(_) => (2.0 / l.inputs as f64).sqrt(),
                LayerKind::MuHead | LayerKind::DecoderOutput => (1.0 / l.inputs as f64).sqrt(),
                LayerKind::LogvarHead => 0.01,
            };
            for w in &mut p.data[l.offset..l.offset + l.weight_len()] {
                *w = std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        p
    }

    pub fn from_flat(arch: &NetworkArchitecture, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(arch);
        if data.len() != p.data.len() {
            return Err(Error::invalid(format!(
                "architecture needs {} parameters, got {}",
                p.data.len(),
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(p.path_of(i)));
        }
        p.data = data;
        Ok(p)
    }

    pub fn architecture(&self) -> &NetworkArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn layer(&self, kind: LayerKind) -> &LayerShape {
        self.layers.iter().find(|l| l.kind == kind).expect("layer exists")
    }

    pub fn weights(&self, kind: LayerKind) -> &[f64] {
        let l = self.layer(kind);
        &self.data[l.offset..l.offset + l.weight_len()]
    }

    pub fn bias(&self, kind: LayerKind) -> &[f64] {
        let l = self.layer(kind);
        &self.data[l.offset + l.weight_len()..l.offset + l.len()]
    }

    pub fn weights_mut(&mut self, kind: LayerKind) -> &mut [f64] {
        let l = *self.layer(kind);
        &mut self.data[l.offset..l.offset + l.weight_len()]
    }

    pub fn bias_mut(&mut self, kind: LayerKind) -> &mut [f64] {
        let l = *self.layer(kind);
        &mut self.data[l.offset + l.weight_len()..l.offset + l.len()]
    }

    /// Human-readable location of a flat coordinate, e.g. `decoder.output.bias[2]`.
    pub fn path_of(&self, index: usize) -> String {
        for l in &self.layers {
            if index < l.offset + l.len() && index >= l.offset {
                let local = index - l.offset;
                return if local < l.weight_len() {
                    format!("{}.weight[{}][{}]", l.kind, local / l.inputs, local % l.inputs)
                } else {
                    format!("{}.bias[{}]", l.kind, local - l.weight_len())
                };
            }
        }
        format!("parameter[{index}]")
    }

    fn encoder_hidden_count(&self) -> usize {
        self.arch.depth()
    }

    fn decoder_layers(&self) -> &[LayerShape] {
        &self.layers[self.encoder_hidden_count() + 2..]
    }

    fn encoder_layers(&self) -> &[LayerShape] {
        &self.layers[..self.encoder_hidden_count()]
    }
}

/// `out = W x + b` for one layer.
#[inline]
fn affine(data: &[f64], l: &LayerShape, x: &[f64], out: &mut [f64]) {
    let w = &data[l.offset..l.offset + l.weight_len()];
    let b = &data[l.offset + l.weight_len()..l.offset + l.len()];
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(l.inputs).zip(b)) {
        *o = row.iter().zip(x).fold(*bias, |acc, (wi, xi)| acc + wi * xi);
    }
}

/// Accumulates `dW += δ xᵀ`, `db += δ` and, when requested, writes `dx = Wᵀ δ`.
#[inline]
fn affine_backward(data: &[f64], grad: &mut [f64], l: &LayerShape, x: &[f64], delta: &[f64], dx: Option<&mut [f64]>) {
    let wl = l.weight_len();
    {
        let (gw, gb) = grad[l.offset..l.offset + l.len()].split_at_mut(wl);
        for ((grow, d), gbi) in gw.chunks_exact_mut(l.inputs).zip(delta).zip(gb.iter_mut()) {
            *gbi += d;
            for (g, xi) in grow.iter_mut().zip(x) {
                *g += d * xi;
            }
        }
    }
    if let Some(dx) = dx {
        dx.iter_mut().for_each(|v| *v = 0.0);
        let w = &data[l.offset..l.offset + wl];
        for (row, d) in w.chunks_exact(l.inputs).zip(delta) {
            for (dxi, wi) in dx.iter_mut().zip(row) {
                *dxi += wi * d;
            }
        }
    }
}

fn check_finite(values: &[f64], kind: LayerKind) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(format!("{kind} activations")))
    }
}

/// Forward activations kept for the backward pass.
#[derive(Debug, Clone)]
struct Trace {
    enc_pre: Vec<Vec<f64>>,
    enc_act: Vec<Vec<f64>>,
    mu: Vec<f64>,
    logvar_raw: Vec<f64>,
    logvar: Vec<f64>,
    z: Vec<f64>,
    dec_pre: Vec<Vec<f64>>,
    dec_act: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl Trace {
    fn new(p: &Parameters) -> Self {
        let enc = p.encoder_layers();
        let dec = p.decoder_layers();
        let hidden = |ls: &[LayerShape]| ls.iter().map(|l| vec![0.0; l.outputs]).collect::<Vec<_>>();
        let latent = p.arch.latent_dim();
        Self {
            enc_pre: hidden(enc),
            enc_act: hidden(enc),
            mu: vec![0.0; latent],
            logvar_raw: vec![0.0; latent],
            logvar: vec![0.0; latent],
            z: vec![0.0; latent],
            dec_pre: hidden(&dec[..dec.len() - 1]),
            dec_act: hidden(&dec[..dec.len() - 1]),
            probs: vec![0.0; p.arch.n()],
        }
    }
}

fn run_encoder(p: &Parameters, x: &[f64], t: &mut Trace) -> Result<()> {
    let enc = p.encoder_layers();
    for (i, l) in enc.iter().enumerate() {
        let (done, rest) = t.enc_act.split_at_mut(i);
        let input = if i == 0 { x } else { &done[i - 1] };
        let (pre, act) = (&mut t.enc_pre[i], &mut rest[0]);
        affine(&p.data, l, input, pre);
        for (a, z) in act.iter_mut().zip(pre.iter()) {
            *a = leaky_relu(*z);
        }
        check_finite(act, l.kind)?;
    }
    let h = t.enc_act.last().map_or(x, |v| v.as_slice());
    let mu_l = p.layers[enc.len()];
    let lv_l = p.layers[enc.len() + 1];
    affine(&p.data, &mu_l, h, &mut t.mu);
    check_finite(&t.mu, LayerKind::MuHead)?;
    affine(&p.data, &lv_l, h, &mut t.logvar_raw);
    check_finite(&t.logvar_raw, LayerKind::LogvarHead)?;
    for (lv, raw) in t.logvar.iter_mut().zip(&t.logvar_raw) {
        *lv = raw.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP);
    }
    Ok(())
}

fn run_decoder(p: &Parameters, t: &mut Trace) -> Result<()> {
    let dec = p.decoder_layers();
    let last = dec.len() - 1;
    for (i, l) in dec[..last].iter().enumerate() {
        let (done, rest) = t.dec_act.split_at_mut(i);
        let input = if i == 0 { &t.z } else { &done[i - 1] };
        let (pre, act) = (&mut t.dec_pre[i], &mut rest[0]);
        affine(&p.data, l, input, pre);
        for (a, z) in act.iter_mut().zip(pre.iter()) {
            *a = leaky_relu(*z);
        }
        check_finite(act, l.kind)?;
    }
    let out_l = dec[last];
    let h = t.dec_act.last().expect("decoder has a hidden layer");
    affine(&p.data, &out_l, h, &mut t.probs);
    check_finite(&t.probs, LayerKind::DecoderOutput)?;
    for v in t.probs.iter_mut() {
        // strictly inside (0, 1) even where the sigmoid rounds to an endpoint
        *v = sigmoid(*v).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    }
    Ok(())
}

fn check_lengths(p: &Parameters, x: Option<&[f64]>, latent: &[&[f64]]) -> Result<()> {
    if let Some(x) = x {
        if x.len() != p.arch.n() {
            return Err(Error::invalid(format!("input has length {}, network expects {}", x.len(), p.arch.n())));
        }
    }
    for v in latent {
        if v.len() != p.arch.latent_dim() {
            return Err(Error::invalid(format!(
                "latent vector has length {}, network expects {}",
                v.len(),
                p.arch.latent_dim()
            )));
        }
    }
    Ok(())
}

/// Returns `(μ, log σ²)` with the log-variance clamped.
pub fn encoder_forward(params: &Parameters, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lengths(params, Some(x), &[])?;
    let mut t = Trace::new(params);
    run_encoder(params, x, &mut t)?;
    Ok((t.mu, t.logvar))
}

pub fn reparameterize(mu: &[f64], logvar: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    if mu.len() != logvar.len() || mu.len() != eps.len() {
        return Err(Error::invalid("μ, log σ² and ε must have equal length"));
    }
    Ok(mu
        .iter()
        .zip(logvar)
        .zip(eps)
        .map(|((m, lv), e)| m + (lv / 2.0).exp() * e)
        .collect())
}

/// Per-bit output probabilities for a latent vector.
pub fn decoder_forward(params: &Parameters, z: &[f64]) -> Result<Vec<f64>> {
    check_lengths(params, None, &[z])?;
    let mut t = Trace::new(params);
    t.z.copy_from_slice(z);
    run_decoder(params, &mut t)?;
    Ok(t.probs)
}

/// `½ Σ (μ² + e^{log σ²} − 1 − log σ²)`, the divergence from the standard normal prior.
pub fn kl_divergence(mu: &[f64], logvar: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(logvar)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// `−Σ_b [x_b log p_b + (1 − x_b) log(1 − p_b)]` with `p` clamped away from 0 and 1.
pub fn bernoulli_nll(x: &[f64], probs: &[f64]) -> f64 {
    x.iter()
        .zip(probs)
        .map(|(xb, p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(xb * p.ln() + (1.0 - xb) * (1.0 - p).ln())
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub z: Vec<f64>,
    pub probs: Vec<f64>,
}

fn forward_trace(params: &Parameters, x: &[f64], eps: &[f64], t: &mut Trace) -> Result<(f64, f64)> {
    run_encoder(params, x, t)?;
    for ((z, m), (lv, e)) in t.z.iter_mut().zip(&t.mu).zip(t.logvar.iter().zip(eps)) {
        *z = m + (lv / 2.0).exp() * e;
    }
    run_decoder(params, t)?;
    Ok((bernoulli_nll(x, &t.probs), kl_divergence(&t.mu, &t.logvar)))
}

/// Single-sample estimate of the objective for one input and noise draw.
pub fn loss(params: &Parameters, x: &[f64], eps: &[f64], beta: f64) -> Result<LossEval> {
    check_lengths(params, Some(x), &[eps])?;
    let mut t = Trace::new(params);
    let (reconstruction, kl) = forward_trace(params, x, eps, &mut t)?;
    let loss = reconstruction + beta * kl;
    if !loss.is_finite() {
        return Err(Error::numeric("loss"));
    }
    Ok(LossEval {
        loss,
        reconstruction,
        kl,
        mu: t.mu,
        logvar: t.logvar,
        z: t.z,
        probs: t.probs,
    })
}

/// Backward pass for one sample; gradients are added into `grad`.
fn backward(p: &Parameters, x: &[f64], eps: &[f64], beta: f64, t: &Trace, grad: &mut [f64], scratch: &mut Scratch) {
    let dec = p.decoder_layers();
    let last = dec.len() - 1;

    // d/d logit of the clamped Bernoulli NLL
    scratch.delta.clear();
    scratch.delta.extend(t.probs.iter().zip(x).map(|(pb, xb)| {
        if *pb > PROB_CLAMP && *pb < 1.0 - PROB_CLAMP {
            pb - xb
        } else {
            0.0
        }
    }));

    for i in (0..=last).rev() {
        let l = &dec[i];
        let input: &[f64] = if i == 0 { &t.z } else { &t.dec_act[i - 1] };
        scratch.dx.resize(l.inputs, 0.0);
        affine_backward(&p.data, grad, l, input, &scratch.delta, Some(&mut scratch.dx));
        if i > 0 {
            let pre = &t.dec_pre[i - 1];
            scratch.delta.clear();
            scratch
                .delta
                .extend(scratch.dx.iter().zip(pre).map(|(d, z)| d * leaky_relu_slope(*z)));
        }
    }
    // scratch.dx now holds dL/dz
    let n_enc = p.encoder_hidden_count();
    let mu_l = p.layers[n_enc];
    let lv_l = p.layers[n_enc + 1];
    scratch.dmu.clear();
    scratch.dlv.clear();
    for (k, e) in eps.iter().enumerate() {
        let dz = scratch.dx[k];
        scratch.dmu.push(dz + beta * t.mu[k]);
        let clamped = t.logvar_raw[k] < -LOGVAR_CLAMP || t.logvar_raw[k] > LOGVAR_CLAMP;
        let dlv = if clamped {
            0.0
        } else {
            dz * e * 0.5 * (t.logvar[k] / 2.0).exp() + beta * 0.5 * (t.logvar[k].exp() - 1.0)
        };
        scratch.dlv.push(dlv);
    }

    let enc = p.encoder_layers();
    let h: &[f64] = t.enc_act.last().map_or(x, |v| v.as_slice());
    scratch.dh.resize(h.len(), 0.0);
    scratch.dx.resize(h.len(), 0.0);
    affine_backward(&p.data, grad, &mu_l, h, &scratch.dmu, Some(&mut scratch.dh));
    affine_backward(&p.data, grad, &lv_l, h, &scratch.dlv, Some(&mut scratch.dx));
    scratch.delta.clear();
    if let Some(pre) = t.enc_pre.last() {
        scratch.delta.extend(
            scratch
                .dh
                .iter()
                .zip(&scratch.dx)
                .zip(pre)
                .map(|((a, b), z)| (a + b) * leaky_relu_slope(*z)),
        );
    }
    for i in (0..enc.len()).rev() {
        let l = &enc[i];
        let input: &[f64] = if i == 0 { x } else { &t.enc_act[i - 1] };
        if i == 0 {
            affine_backward(&p.data, grad, l, input, &scratch.delta, None);
        } else {
            scratch.dx.resize(l.inputs, 0.0);
            affine_backward(&p.data, grad, l, input, &scratch.delta, Some(&mut scratch.dx));
            let pre = &t.enc_pre[i - 1];
            scratch.delta.clear();
            scratch
                .delta
                .extend(scratch.dx.iter().zip(pre).map(|(d, z)| d * leaky_relu_slope(*z)));
        }
    }
}

#[derive(Debug, Default)]
struct Scratch {
    delta: Vec<f64>,
    dx: Vec<f64>,
    dh: Vec<f64>,
    dmu: Vec<f64>,
    dlv: Vec<f64>,
}

/// Mean objective and its gradient over a batch, with one noise vector per sample.
///
/// `noise` is row-major, `batch.len() × latent_dim`. Per-sample gradients
/// are summed in fixed chunks which are then combined in chunk order, so the
/// result is identical for any thread count.
pub fn gradient(params: &Parameters, batch: &SampleBatch, noise: &[f64], beta: f64) -> Result<(Parameters, f64)> {
    let n = params.arch.n();
    let latent = params.arch.latent_dim();
    if batch.is_empty() {
        return Err(Error::invalid("gradient needs a non-empty batch"));
    }
    if batch.n_qubits() != n {
        return Err(Error::invalid("batch width does not match the network"));
    }
    if noise.len() != batch.len() * latent {
        return Err(Error::invalid("noise must provide one latent vector per sample"));
    }

    let chunk = |(c, idx): (usize, &[usize])| -> Result<(Vec<f64>, f64)> {
        let mut grad = vec![0.0; params.data.len()];
        let mut trace = Trace::new(params);
        let mut scratch = Scratch::default();
        let mut x = vec![0.0; n];
        let mut total = 0.0;
        for (k, &sample) in idx.iter().enumerate() {
            for (q, xq) in x.iter_mut().enumerate() {
                *xq = ((sample >> (n - 1 - q)) & 1) as f64;
            }
            let row = c * GRAD_CHUNK + k;
            let eps = &noise[row * latent..(row + 1) * latent];
            let (rec, kl) = forward_trace(params, &x, eps, &mut trace)?;
            total += rec + beta * kl;
            backward(params, &x, eps, beta, &trace, &mut grad, &mut scratch);
        }
        Ok((grad, total))
    };

    let parts: Vec<Result<(Vec<f64>, f64)>> = if batch.len() >= 2 * GRAD_CHUNK {
        batch.indices().par_chunks(GRAD_CHUNK).enumerate().map(chunk).collect()
    } else {
        batch.indices().chunks(GRAD_CHUNK).enumerate().map(chunk).collect()
    };

    let mut grad = vec![0.0; params.data.len()];
    let mut total = 0.0;
    for part in parts {
        let (g, l) = part?;
        total += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    let mean_loss = total * scale;
    if !mean_loss.is_finite() {
        return Err(Error::numeric("batch loss"));
    }
    let out = Parameters {
        arch: params.arch.clone(),
        layers: params.layers.clone(),
        data: grad,
    };
    if let Some(i) = out.data.iter().position(|g| !g.is_finite()) {
        return Err(Error::numeric(format!("gradient of {}", out.path_of(i))));
    }
    Ok((out, mean_loss))
}
