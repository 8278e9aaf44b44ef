use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelParams, RecurrentLayer, Side};
use crate::corpus::Channel;
use crate::error::{Error, Result};
use crate::sdp::SdpSample;
use crate::tensor::{argmax, max_pool, relu_in_place, softmax, Matrix, PoolResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Dropout active.
    Train,
    Eval,
}

/// Activations of one channel over one sub-path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub channel: Channel,
    pub side: Side,
    pub ids: Vec<usize>,
    /// Embedding-layer outputs after dropout.
    pub inputs: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers for `inputs`, train mode only.
    pub input_masks: Option<Vec<Vec<f64>>>,
    /// `hidden[layer][t]` for layers `1..=depth`.
    pub hidden: Vec<Vec<Vec<f64>>>,
    /// Embedding pool first, then one pool per recurrent layer.
    pub pools: Vec<PoolResult>,
}

impl ChainTrace {
    /// Output sequence of layer `l`, where 0 is the embedding layer.
    pub fn layer_output(&self, l: usize) -> &[Vec<f64>] {
        if l == 0 {
            &self.inputs
        } else {
            &self.hidden[l - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    pub depth: usize,
    /// Ordered channel × side.
    pub chains: Vec<ChainTrace>,
    pub concat: Vec<f64>,
    /// Hidden layer activation after ReLU, before dropout.
    pub penultimate: Vec<f64>,
    pub penultimate_mask: Option<Vec<f64>>,
    /// Input to the output layer.
    pub penultimate_out: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardTrace {
    pub fn pool_count(&self) -> usize {
        self.chains.iter().map(|c| c.pools.len()).sum()
    }

    pub fn chain(&self, channel: Channel, side: Side) -> &ChainTrace {
        &self.chains[channel.index() * 2 + side as usize]
    }

    pub fn predicted_id(&self) -> usize {
        argmax(&self.probs)
    }

    /// Fingerprint of the piecewise-linear region: every ReLU's on/off state
    /// and every pooling argmax.
    pub fn regime(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for c in &self.chains {
            for layer in &c.hidden {
                for step in layer {
                    for v in step {
                        (*v > 0.0).hash(&mut h);
                    }
                }
            }
            for p in &c.pools {
                p.argmax.hash(&mut h);
            }
        }
        for v in &self.penultimate {
            (*v > 0.0).hash(&mut h);
        }
        h.finish()
    }
}

fn shape_check(m: &Matrix, input: usize, name: &str) -> Result<()> {
    if m.cols() != input {
        return Err(Error::Shape(format!(
            "{name} is {}x{}, input has {input} entries",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn check_layer(x_len: usize, h_len: usize, layer: &RecurrentLayer) -> Result<()> {
    shape_check(&layer.w_in, x_len, "W_in")?;
    shape_check(&layer.w_rec, h_len, "W_rec")?;
    if layer.bias.len() != layer.w_in.rows() || layer.w_rec.rows() != layer.w_in.rows() {
        return Err(Error::Shape("bias/W_rec rows differ from W_in rows".into()));
    }
    Ok(())
}

/// First recurrent layer: `relu(W_in x_t + W_rec h_{t-1} + b)`.
pub fn rnn_layer1_step(x_t: &[f64], h_prev: &[f64], layer: &RecurrentLayer) -> Result<Vec<f64>> {
    check_layer(x_t.len(), h_prev.len(), layer)?;
    let mut out = layer.bias.clone();
    layer.w_in.mul_vec_acc(x_t, &mut out);
    layer.w_rec.mul_vec_acc(h_prev, &mut out);
    relu_in_place(&mut out);
    Ok(out)
}

/// Layer `i >= 2`: adds the cross connection from the lower layer's previous state.
pub fn rnn_layer_step(
    h_lower_t: &[f64],
    h_self_prev: &[f64],
    h_lower_prev: &[f64],
    layer: &RecurrentLayer,
) -> Result<Vec<f64>> {
    check_layer(h_lower_t.len(), h_self_prev.len(), layer)?;
    let cross = layer
        .w_cross
        .as_ref()
        .ok_or_else(|| Error::Shape("layer has no cross-connection matrix".into()))?;
    shape_check(cross, h_lower_prev.len(), "W_cross")?;
    if cross.rows() != layer.w_in.rows() {
        return Err(Error::Shape("W_cross rows differ from W_in rows".into()));
    }
    let mut out = layer.bias.clone();
    layer.w_in.mul_vec_acc(h_lower_t, &mut out);
    layer.w_rec.mul_vec_acc(h_self_prev, &mut out);
    cross.mul_vec_acc(h_lower_prev, &mut out);
    relu_in_place(&mut out);
    Ok(out)
}

/// Runs one recurrent layer over a whole input sequence with zero initial states.
pub(crate) fn run_layer(layer: &RecurrentLayer, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = layer.bias.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
    for t in 0..inputs.len() {
        let mut a = layer.bias.clone();
        layer.w_in.mul_vec_acc(&inputs[t], &mut a);
        if t > 0 {
            layer.w_rec.mul_vec_acc(&out[t - 1], &mut a);
            if let Some(cross) = &layer.w_cross {
                cross.mul_vec_acc(&inputs[t - 1], &mut a);
            }
        }
        debug_assert_eq!(a.len(), d);
        relu_in_place(&mut a);
        out.push(a);
    }
    out
}

fn dropout_mask(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
        .collect()
}

/// Full forward pass. `seed` drives the dropout masks in train mode and is
/// ignored in eval mode.
pub fn forward(
    sample: &SdpSample,
    params: &ModelParams,
    config: &ModelConfig,
    mode: Mode,
    seed: u64,
) -> Result<ForwardTrace> {
    let dropout = mode == Mode::Train && config.dropout_rate > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chains = Vec::with_capacity(8);
    let mut concat = Vec::with_capacity(config.concat_len());

    for c in Channel::ALL {
        let table = &params.embeddings[c.index()];
        let dim = config.channel_dim(c);
        for side in Side::BOTH {
            let path = match side {
                Side::Left => &sample.left,
                Side::Right => &sample.right,
            };
            let ids = path.channel(c).to_vec();
            if let Some(&bad) = ids.iter().find(|&&id| id >= table.rows()) {
                return Err(Error::Data(format!(
                    "sample {}: {} id {bad} outside vocabulary of {}",
                    sample.id,
                    c.name(),
                    table.rows()
                )));
            }
            let mut inputs: Vec<Vec<f64>> = ids.iter().map(|&id| table.row(id).to_vec()).collect();
            let input_masks = dropout.then(|| {
                inputs
                    .iter_mut()
                    .map(|x| {
                        let m = dropout_mask(dim, config.dropout_rate, &mut rng);
                        for (v, k) in x.iter_mut().zip(&m) {
                            *v *= k;
                        }
                        m
                    })
                    .collect()
            });

            let mut hidden: Vec<Vec<Vec<f64>>> = Vec::with_capacity(config.depth);
            for layer in 0..config.depth {
                let weights = &params.weights.recurrent[config.layer_index(c, side, layer)];
                let below = if layer == 0 { &inputs } else { &hidden[layer - 1] };
                let out = run_layer(weights, below);
                hidden.push(out);
            }

            let mut pools = Vec::with_capacity(config.depth + 1);
            pools.push(max_pool(&inputs, dim));
            for h in &hidden {
                pools.push(max_pool(h, dim));
            }
            for p in &pools {
                concat.extend_from_slice(&p.values);
            }
            chains.push(ChainTrace {
                channel: c,
                side,
                ids,
                inputs,
                input_masks,
                hidden,
                pools,
            });
        }
    }

    let w = &params.weights;
    let mut penultimate = w.hidden.bias.clone();
    w.hidden.weight.mul_vec_acc(&concat, &mut penultimate);
    relu_in_place(&mut penultimate);
    let penultimate_mask = dropout.then(|| dropout_mask(penultimate.len(), config.dropout_rate, &mut rng));
    let penultimate_out = match &penultimate_mask {
        Some(m) => penultimate.iter().zip(m).map(|(v, k)| v * k).collect(),
        None => penultimate.clone(),
    };
    let mut logits = w.output.bias.clone();
    w.output.weight.mul_vec_acc(&penultimate_out, &mut logits);
    let probs = softmax(&logits);

    Ok(ForwardTrace {
        depth: config.depth,
        chains,
        concat,
        penultimate,
        penultimate_mask,
        penultimate_out,
        logits,
        probs,
    })
}
