use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_lengths, FrameProbs, GoldTags, TaggerConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{gemv_t_acc, mul_ab, mul_abt, mul_atb_acc, transpose};
use crate::tags::Tier;

/// A named row-major parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Gradients in the same order and shapes as [`TaggerModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub groups: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &TaggerModel) -> Self {
        Gradients {
            groups: model.params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.groups.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct TaggerModel {
    config: TaggerConfig,
    params: Vec<Param>,
}

const DIR_NAMES: [&str; 2] = ["fwd", "bwd"];

/// Names and shapes of every parameter, in storage order.
pub(crate) fn layout(config: &TaggerConfig) -> Vec<(String, Vec<usize>)> {
    let (f, h, dirs) = (config.input_dim, config.hidden_dim, config.directions());
    let d = config.encoder_dim();
    let mut out = vec![
        ("proj.weight".to_string(), vec![h, f]),
        ("proj.bias".to_string(), vec![h]),
    ];
    for l in 0..config.layers {
        let in_dim = if l == 0 { h } else { d };
        for dir in DIR_NAMES.iter().take(dirs) {
            out.push((format!("lstm.{l}.{dir}.w_ih"), vec![4 * h, in_dim]));
            out.push((format!("lstm.{l}.{dir}.w_hh"), vec![4 * h, h]));
            out.push((format!("lstm.{l}.{dir}.bias"), vec![4 * h]));
        }
    }
    for tier in Tier::ALL {
        out.push((format!("head.{tier}.weight"), vec![3, d]));
        out.push((format!("head.{tier}.bias"), vec![3]));
    }
    out
}

fn lstm_index(config: &TaggerConfig, layer: usize, dir: usize) -> usize {
    2 + 3 * (layer * config.directions() + dir)
}

fn head_index(config: &TaggerConfig, tier: Tier) -> usize {
    2 + 3 * config.layers * config.directions() + 2 * tier.index()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct DirCache {
    /// Activated gates per frame: i, f, g, o blocks of `H`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

struct LayerCache {
    in_dim: usize,
    input: Vec<f64>,
    mask: Option<Vec<f64>>,
    dirs: Vec<DirCache>,
}

/// Activations kept from a forward pass for backpropagation.
pub struct ForwardCache {
    num_frames: usize,
    input: Vec<f64>,
    layers: Vec<LayerCache>,
    output: Vec<f64>,
    logits: [Vec<f64>; 2],
}

impl TaggerModel {
    /// Uniform `±1/√H` initialization drawn at f32 precision; forget-gate
    /// biases start at 1.
    pub fn init(config: &TaggerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = 1.0 / (config.hidden_dim as f32).sqrt();
        let h = config.hidden_dim;
        let params = layout(config)
            .into_iter()
            .map(|(name, shape)| {
                let n = shape.iter().product();
                let mut data: Vec<f64> =
                    (0..n).map(|_| rng.random_range(-k..=k) as f64).collect();
                if name.starts_with("lstm.") && name.ends_with(".bias") {
                    data[h..2 * h].fill(1.0);
                }
                Param { name, shape, data }
            })
            .collect();
        Ok(TaggerModel {
            config: config.clone(),
            params,
        })
    }

    /// Assembles a model from stored parameters, checking names and shapes.
    pub fn from_params(config: TaggerConfig, params: Vec<Param>) -> Result<Self> {
        config.validate()?;
        let expected = layout(&config);
        if expected.len() != params.len() {
            return Err(Error::Dimension(format!(
                "config implies {} parameter tensors, got {}",
                expected.len(),
                params.len()
            )));
        }
        for ((name, shape), p) in expected.iter().zip(&params) {
            if *name != p.name || *shape != p.shape || p.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Dimension(format!(
                    "parameter {} {:?} does not match expected {name} {shape:?}",
                    p.name, p.shape
                )));
            }
            if p.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameter {} has non-finite values", p.name)));
            }
        }
        Ok(TaggerModel { config, params })
    }

    pub fn config(&self) -> &TaggerConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<FrameProbs> {
        self.forward(features).map(|(p, _)| p)
    }

    pub fn forward(&self, features: &FeatureMatrix) -> Result<(FrameProbs, ForwardCache)> {
        self.forward_impl(features, None)
    }

    pub(crate) fn forward_impl(
        &self,
        features: &FeatureMatrix,
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<(FrameProbs, ForwardCache)> {
        let c = &self.config;
        if features.width != c.input_dim {
            return Err(Error::Dimension(format!(
                "model expects {} features per frame, got {}",
                c.input_dim, features.width
            )));
        }
        let t = features.num_frames;
        let (h, d) = (c.hidden_dim, c.encoder_dim());

        let mut x = vec![0.0; t * h];
        for row in x.chunks_mut(h) {
            row.copy_from_slice(&self.params[1].data);
        }
        mul_abt(&features.values, t, c.input_dim, &self.params[0].data, h, &mut x, 1.0);

        let mut layers = Vec::with_capacity(c.layers);
        let mut in_dim = h;
        for l in 0..c.layers {
            let mask = match dropout.as_deref_mut() {
                Some(rng) if c.dropout > 0.0 => {
                    let keep = 1.0 / (1.0 - c.dropout);
                    let m: Vec<f64> = (0..x.len())
                        .map(|_| if rng.random::<f64>() < c.dropout { 0.0 } else { keep })
                        .collect();
                    x.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                    Some(m)
                }
                _ => None,
            };
            let mut out = vec![0.0; t * d];
            let mut dirs = Vec::with_capacity(c.directions());
            for dir in 0..c.directions() {
                let base = lstm_index(c, l, dir);
                let cache = run_direction(
                    &self.params[base].data,
                    &self.params[base + 1].data,
                    &self.params[base + 2].data,
                    &x,
                    t,
                    in_dim,
                    h,
                    dir == 1,
                );
                for f in 0..t {
                    out[f * d + dir * h..f * d + (dir + 1) * h]
                        .copy_from_slice(&cache.h[f * h..(f + 1) * h]);
                }
                dirs.push(cache);
            }
            layers.push(LayerCache {
                in_dim,
                input: std::mem::replace(&mut x, out),
                mask,
                dirs,
            });
            in_dim = d;
        }
        let output = x;

        let mut logits = [vec![0.0; t * 3], vec![0.0; t * 3]];
        let mut rows: [Vec<[f64; 3]>; 2] = [Vec::with_capacity(t), Vec::with_capacity(t)];
        for tier in Tier::ALL {
            let hi = head_index(c, tier);
            let z = &mut logits[tier.index()];
            for row in z.chunks_mut(3) {
                row.copy_from_slice(&self.params[hi + 1].data);
            }
            mul_abt(&output, t, d, &self.params[hi].data, 3, z, 1.0);
            rows[tier.index()] = z.chunks(3).map(softmax).collect();
        }
        let [sign, phrase] = rows;
        Ok((
            FrameProbs { sign, phrase },
            ForwardCache {
                num_frames: t,
                input: features.values.clone(),
                layers,
                output,
                logits,
            },
        ))
    }

    /// Weighted cross-entropy of the cached pass and its gradient with
    /// respect to every parameter.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        gold: &GoldTags,
        weights: &[[f64; 3]; 2],
    ) -> Result<(f64, Gradients)> {
        let c = &self.config;
        let t = cache.num_frames;
        check_lengths(t, gold)?;
        let mut grads = Gradients::zeros_like(self);
        if t == 0 {
            return Ok((0.0, grads));
        }
        let (h, d) = (c.hidden_dim, c.encoder_dim());
        let mut loss = 0.0;
        let mut d_out = vec![0.0; t * d];
        for tier in Tier::ALL {
            let w = &weights[tier.index()];
            let z = &cache.logits[tier.index()];
            let mut dz = vec![0.0; t * 3];
            let mut sum = 0.0;
            for (f, g) in gold.tier(tier).iter().enumerate() {
                let y = g.index();
                let lp = log_softmax(&z[3 * f..3 * f + 3]);
                sum += -w[y] * lp[y];
                for k in 0..3 {
                    let p = lp[k].exp();
                    dz[3 * f + k] = w[y] * (p - if k == y { 1.0 } else { 0.0 }) / t as f64;
                }
            }
            loss += sum / t as f64;
            let hi = head_index(c, tier);
            mul_atb_acc(&dz, t, 3, &cache.output, d, &mut grads.groups[hi]);
            for row in dz.chunks(3) {
                for k in 0..3 {
                    grads.groups[hi + 1][k] += row[k];
                }
            }
            mul_ab(&dz, t, 3, &self.params[hi].data, d, &mut d_out, 1.0);
        }

        for l in (0..c.layers).rev() {
            let lc = &cache.layers[l];
            let mut d_in = vec![0.0; t * lc.in_dim];
            for (dir, dc) in lc.dirs.iter().enumerate() {
                let base = lstm_index(c, l, dir);
                let w_ih = &self.params[base].data;
                let w_hh = &self.params[base + 1].data;
                let delta = direction_deltas(dc, w_hh, &d_out, t, h, d, dir);

                mul_atb_acc(&delta, t, 4 * h, &lc.input, lc.in_dim, &mut grads.groups[base]);
                let mut h_prev = vec![0.0; t * h];
                for step in 1..t {
                    let (cur, prev) = (order(step, t, dir), order(step - 1, t, dir));
                    h_prev[cur * h..(cur + 1) * h].copy_from_slice(&dc.h[prev * h..(prev + 1) * h]);
                }
                mul_atb_acc(&delta, t, 4 * h, &h_prev, h, &mut grads.groups[base + 1]);
                let gb = &mut grads.groups[base + 2];
                for row in delta.chunks(4 * h) {
                    gb.iter_mut().zip(row).for_each(|(g, v)| *g += v);
                }
                mul_ab(&delta, t, 4 * h, w_ih, lc.in_dim, &mut d_in, 1.0);
            }
            if let Some(mask) = &lc.mask {
                d_in.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
            }
            d_out = d_in;
        }

        mul_atb_acc(&d_out, t, h, &cache.input, c.input_dim, &mut grads.groups[0]);
        for row in d_out.chunks(h) {
            grads.groups[1].iter_mut().zip(row).for_each(|(g, v)| *g += v);
        }
        Ok((loss, grads))
    }

    /// Loss of a dropout-free forward pass.
    pub fn loss_on(&self, features: &FeatureMatrix, gold: &GoldTags) -> Result<f64> {
        let (_, cache) = self.forward(features)?;
        let t = cache.num_frames;
        check_lengths(t, gold)?;
        if t == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for tier in Tier::ALL {
            let w = &self.config.class_weights[tier.index()];
            let z = &cache.logits[tier.index()];
            let sum: f64 = gold
                .tier(tier)
                .iter()
                .enumerate()
                .map(|(f, g)| -w[g.index()] * log_softmax(&z[3 * f..3 * f + 3])[g.index()])
                .sum();
            total += sum / t as f64;
        }
        Ok(total)
    }
}

fn order(step: usize, t: usize, dir: usize) -> usize {
    if dir == 1 {
        t - 1 - step
    } else {
        step
    }
}

fn log_softmax(z: &[f64]) -> [f64; 3] {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    [z[0] - lse, z[1] - lse, z[2] - lse]
}

fn softmax(z: &[f64]) -> [f64; 3] {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = [(z[0] - m).exp(), (z[1] - m).exp(), (z[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    e.map(|v| v / s)
}

#[allow(clippy::too_many_arguments)]
fn run_direction(
    w_ih: &[f64],
    w_hh: &[f64],
    bias: &[f64],
    input: &[f64],
    t: usize,
    in_dim: usize,
    h: usize,
    reverse: bool,
) -> DirCache {
    let g4 = 4 * h;
    let mut gates = vec![0.0; t * g4];
    for row in gates.chunks_mut(g4) {
        row.copy_from_slice(bias);
    }
    mul_abt(input, t, in_dim, w_ih, g4, &mut gates, 1.0);
    let w_hh_t = transpose(w_hh, g4, h);
    let mut c = vec![0.0; t * h];
    let mut tanh_c = vec![0.0; t * h];
    let mut hs = vec![0.0; t * h];
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    for step in 0..t {
        let f = if reverse { t - 1 - step } else { step };
        let g = &mut gates[f * g4..(f + 1) * g4];
        if step > 0 {
            gemv_t_acc(&w_hh_t, h, g4, &h_prev, g);
        }
        for j in 0..h {
            let ig = sigmoid(g[j]);
            let fg = sigmoid(g[h + j]);
            let cg = g[2 * h + j].tanh();
            let og = sigmoid(g[3 * h + j]);
            g[j] = ig;
            g[h + j] = fg;
            g[2 * h + j] = cg;
            g[3 * h + j] = og;
            let cell = fg * c_prev[j] + ig * cg;
            let tc = cell.tanh();
            c[f * h + j] = cell;
            tanh_c[f * h + j] = tc;
            hs[f * h + j] = og * tc;
        }
        h_prev.copy_from_slice(&hs[f * h..(f + 1) * h]);
        c_prev.copy_from_slice(&c[f * h..(f + 1) * h]);
    }
    DirCache {
        gates,
        c,
        tanh_c,
        h: hs,
    }
}

/// Gate pre-activation gradients for one direction, `T × 4H`.
fn direction_deltas(
    dc: &DirCache,
    w_hh: &[f64],
    d_out: &[f64],
    t: usize,
    h: usize,
    d: usize,
    dir: usize,
) -> Vec<f64> {
    let g4 = 4 * h;
    let mut delta = vec![0.0; t * g4];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    for step in (0..t).rev() {
        let f = order(step, t, dir);
        let prev = (step > 0).then(|| order(step - 1, t, dir));
        let gates = &dc.gates[f * g4..(f + 1) * g4];
        let row = &mut delta[f * g4..(f + 1) * g4];
        for j in 0..h {
            let dh = d_out[f * d + dir * h + j] + dh_next[j];
            let (ig, fg, cg, og) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = dc.tanh_c[f * h + j];
            let dcell = dc_next[j] + dh * og * (1.0 - tc * tc);
            let c_prev = prev.map_or(0.0, |p| dc.c[p * h + j]);
            row[j] = dcell * cg * ig * (1.0 - ig);
            row[h + j] = dcell * c_prev * fg * (1.0 - fg);
            row[2 * h + j] = dcell * ig * (1.0 - cg * cg);
            row[3 * h + j] = dh * tc * og * (1.0 - og);
            dc_next[j] = dcell * fg;
        }
        dh_next.fill(0.0);
        if step > 0 {
            gemv_t_acc(w_hh, g4, h, row, &mut dh_next);
        }
    }
    delta
}
