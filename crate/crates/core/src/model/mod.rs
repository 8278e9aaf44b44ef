//! The deep recurrent network over the two sub-paths of an SDP.
//!
//! Each of the four channels has its own stack of recurrent layers per
//! sub-path. Layer 1 follows `h_t = relu(W_in x_t + W_rec h_{t-1} + b)`;
//! layers `i >= 2` also read the lower layer's previous state through a
//! cross connection, `relu(W_in h_t^(i-1) + W_rec h_{t-1}^(i) + W_cross h_{t-1}^(i-1) + b)`.
//! The embedding layer and every recurrent layer are max-pooled over time,
//! all pools are concatenated in the order channel × sub-path × layer, and a
//! ReLU hidden layer feeds the softmax output.

mod backward;
pub mod checkpoint;
mod forward;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Channel, Vocabulary, WordVectors};
use crate::error::{Error, Result};
use crate::label::NUM_LABELS;
use crate::tensor::{FlatParams, Matrix};

pub use backward::backward;
pub use forward::{forward, rnn_layer1_step, rnn_layer_step, ChainTrace, ForwardTrace, Mode};

/// Sub-path side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Human-readable description of the pool concatenation order, stored in
/// checkpoint headers.
pub const CONCAT_ORDER: &str =
    "channel[word,pos,gr,hypernym] > side[left,right] > layer[embedding,h1..hdepth]";

pub const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub depth: usize,
    pub word_dim: usize,
    /// Dimension of the POS, GR and hypernym channels.
    pub aux_dim: usize,
    pub penultimate_dim: usize,
    pub n_labels: usize,
    pub dropout_rate: f64,
    pub l2_lambda: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            depth: 4,
            word_dim: 200,
            aux_dim: 50,
            penultimate_dim: 100,
            n_labels: NUM_LABELS,
            dropout_rate: 0.0,
            l2_lambda: 1e-5,
        }
    }
}

/// True when `rate` is a multiple of 0.05 in `[0, 0.95]`.
pub fn is_valid_dropout(rate: f64) -> bool {
    let steps = rate * 20.0;
    (0.0..=0.95 + 1e-12).contains(&rate) && (steps - steps.round()).abs() < 1e-9
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return Err(Error::Config(format!(
                "depth must be in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        if !is_valid_dropout(self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate must be a multiple of 0.05 in [0, 0.95], got {}",
                self.dropout_rate
            )));
        }
        if self.word_dim == 0 || self.aux_dim == 0 || self.penultimate_dim == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        if self.n_labels != NUM_LABELS {
            return Err(Error::Config(format!("n_labels must be {NUM_LABELS}")));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(Error::Config("l2_lambda must be non-negative".into()));
        }
        Ok(())
    }

    pub fn channel_dim(&self, c: Channel) -> usize {
        match c {
            Channel::Word => self.word_dim,
            _ => self.aux_dim,
        }
    }

    /// Number of max pools: 4 channels × 2 sides × (embedding + depth layers).
    pub fn pool_count(&self) -> usize {
        8 * (self.depth + 1)
    }

    /// Length of the concatenated pool vector.
    pub fn concat_len(&self) -> usize {
        let per_layer: usize = Channel::ALL.iter().map(|&c| self.channel_dim(c)).sum();
        2 * (self.depth + 1) * per_layer
    }

    pub(crate) fn chain_index(&self, c: Channel, side: Side) -> usize {
        c.index() * 2 + side as usize
    }

    pub(crate) fn layer_index(&self, c: Channel, side: Side, layer: usize) -> usize {
        self.chain_index(c, side) * self.depth + layer
    }
}

/// Weights of one recurrent layer. `w_cross` exists for layers above the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentLayer {
    pub w_in: Matrix,
    pub w_rec: Matrix,
    pub w_cross: Option<Matrix>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Every parameter except the embedding tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Indexed by `(channel * 2 + side) * depth + layer`.
    pub recurrent: Vec<RecurrentLayer>,
    pub hidden: Dense,
    pub output: Dense,
}

impl Weights {
    fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let mut recurrent = Vec::with_capacity(8 * config.depth);
        for c in Channel::ALL {
            let d = config.channel_dim(c);
            for _side in Side::BOTH {
                for layer in 0..config.depth {
                    recurrent.push(RecurrentLayer {
                        w_in: Matrix::glorot(d, d, rng),
                        w_rec: Matrix::glorot(d, d, rng),
                        w_cross: (layer > 0).then(|| Matrix::glorot(d, d, rng)),
                        bias: vec![0.0; d],
                    });
                }
            }
        }
        let hidden = Dense {
            weight: Matrix::glorot(config.penultimate_dim, config.concat_len(), rng),
            bias: vec![0.0; config.penultimate_dim],
        };
        let output = Dense {
            weight: Matrix::glorot(config.n_labels, config.penultimate_dim, rng),
            bias: vec![0.0; config.n_labels],
        };
        Weights {
            recurrent,
            hidden,
            output,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Weights {
            recurrent: self
                .recurrent
                .iter()
                .map(|l| RecurrentLayer {
                    w_in: z(&l.w_in),
                    w_rec: z(&l.w_rec),
                    w_cross: l.w_cross.as_ref().map(z),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            hidden: Dense {
                weight: z(&self.hidden.weight),
                bias: vec![0.0; self.hidden.bias.len()],
            },
            output: Dense {
                weight: z(&self.output.weight),
                bias: vec![0.0; self.output.bias.len()],
            },
        }
    }

    /// All tensors in declaration order, paired with names.
    pub fn named_slices(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (k, l) in self.recurrent.iter().enumerate() {
            out.push((format!("rnn{k}.w_in"), l.w_in.as_slice()));
            out.push((format!("rnn{k}.w_rec"), l.w_rec.as_slice()));
            if let Some(w) = &l.w_cross {
                out.push((format!("rnn{k}.w_cross"), w.as_slice()));
            }
            out.push((format!("rnn{k}.bias"), l.bias.as_slice()));
        }
        out.push(("hidden.weight".into(), self.hidden.weight.as_slice()));
        out.push(("hidden.bias".into(), self.hidden.bias.as_slice()));
        out.push(("output.weight".into(), self.output.weight.as_slice()));
        out.push(("output.bias".into(), self.output.bias.as_slice()));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.recurrent {
            out.push(l.w_in.as_mut_slice());
            out.push(l.w_rec.as_mut_slice());
            if let Some(w) = &mut l.w_cross {
                out.push(w.as_mut_slice());
            }
            out.push(l.bias.as_mut_slice());
        }
        out.push(self.hidden.weight.as_mut_slice());
        out.push(self.hidden.bias.as_mut_slice());
        out.push(self.output.weight.as_mut_slice());
        out.push(self.output.bias.as_mut_slice());
        out
    }

    /// The weight matrices covered by the Frobenius penalty (no biases).
    pub fn matrices(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.recurrent {
            out.push(&l.w_in);
            out.push(&l.w_rec);
            if let Some(w) = &l.w_cross {
                out.push(w);
            }
        }
        out.push(&self.hidden.weight);
        out.push(&self.output.weight);
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in &mut self.recurrent {
            out.push(&mut l.w_in);
            out.push(&mut l.w_rec);
            if let Some(w) = &mut l.w_cross {
                out.push(w);
            }
        }
        out.push(&mut self.hidden.weight);
        out.push(&mut self.output.weight);
        out
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &Weights) {
        let src = other.named_slices();
        for (dst, (_, src)) in self.slices_mut().into_iter().zip(src) {
            crate::tensor::axpy(alpha, src, dst);
        }
    }

    pub fn count(&self) -> usize {
        self.named_slices().iter().map(|(_, s)| s.len()).sum()
    }
}

/// All trainable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// One table per channel, rows indexed by vocabulary id.
    pub embeddings: Vec<Matrix>,
    pub weights: Weights,
}

/// Range for non-pretrained embedding rows.
pub const EMBEDDING_INIT_RANGE: f64 = 0.1;

impl ModelParams {
    /// Random initialization: embeddings uniform in ±0.1, weights Glorot
    /// uniform, biases zero.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, vocab_sizes: [usize; 4], rng: &mut R) -> Result<Self> {
        config.validate()?;
        let embeddings = Channel::ALL
            .iter()
            .map(|&c| {
                Matrix::uniform(
                    vocab_sizes[c.index()],
                    config.channel_dim(c),
                    EMBEDDING_INIT_RANGE,
                    rng,
                )
            })
            .collect();
        let weights = Weights::init(config, rng);
        Ok(ModelParams {
            embeddings,
            weights,
        })
    }

    /// Copy pretrained vectors into the word table; rows without a vector
    /// (including `<unk>`) keep their random initialization.
    /// [`ModelParams::init`] driven by a ChaCha8 generator seeded with `seed`.
    pub fn init_seeded(config: &ModelConfig, vocab_sizes: [usize; 4], seed: u64) -> Result<Self> {
        Self::init(config, vocab_sizes, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn load_word_vectors(&mut self, vocab: &Vocabulary, vectors: &WordVectors) -> Result<usize> {
        let table = &mut self.embeddings[Channel::Word.index()];
        if vectors.dim != table.cols() {
            return Err(Error::Config(format!(
                "word vectors are {}-dimensional, model expects {}",
                vectors.dim,
                table.cols()
            )));
        }
        let mut copied = 0;
        for id in 1..vocab.words.len() {
            let key = vocab.words.token(id).expect("id in range");
            if let Some(v) = vectors.vector(key) {
                table.row_mut(id).copy_from_slice(v);
                copied += 1;
            }
        }
        Ok(copied)
    }

    /// Checks tensor shapes against a configuration and vocabulary sizes.
    pub fn check_shapes(&self, config: &ModelConfig, vocab_sizes: [usize; 4]) -> Result<()> {
        if self.embeddings.len() != 4 {
            return Err(Error::Shape("expected four embedding tables".into()));
        }
        for c in Channel::ALL {
            let e = &self.embeddings[c.index()];
            if e.shape() != (vocab_sizes[c.index()], config.channel_dim(c)) {
                return Err(Error::Shape(format!(
                    "{} embeddings are {:?}",
                    c.name(),
                    e.shape()
                )));
            }
        }
        if self.weights.recurrent.len() != 8 * config.depth {
            return Err(Error::Shape(format!(
                "{} recurrent layers for depth {}",
                self.weights.recurrent.len(),
                config.depth
            )));
        }
        for c in Channel::ALL {
            let d = config.channel_dim(c);
            for side in Side::BOTH {
                for layer in 0..config.depth {
                    let l = &self.weights.recurrent[config.layer_index(c, side, layer)];
                    let ok = l.w_in.shape() == (d, d)
                        && l.w_rec.shape() == (d, d)
                        && l.bias.len() == d
                        && match &l.w_cross {
                            Some(w) => layer > 0 && w.shape() == (d, d),
                            None => layer == 0,
                        };
                    if !ok {
                        return Err(Error::Shape(format!(
                            "{}/{} layer {} has wrong shapes",
                            c.name(),
                            side.name(),
                            layer + 1
                        )));
                    }
                }
            }
        }
        if self.weights.hidden.weight.shape() != (config.penultimate_dim, config.concat_len())
            || self.weights.output.weight.shape() != (config.n_labels, config.penultimate_dim)
        {
            return Err(Error::Shape("hidden/output layer shapes".into()));
        }
        Ok(())
    }

    pub fn all_slices(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Channel::ALL
            .iter()
            .map(|c| (format!("embedding.{}", c.name()), self.embeddings[c.index()].as_slice()))
            .collect();
        out.extend(self.weights.named_slices());
        out
    }

    fn all_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .embeddings
            .iter_mut()
            .map(|m| m.as_mut_slice())
            .collect();
        out.extend(self.weights.slices_mut());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.all_slices()
            .iter()
            .all(|(_, s)| s.iter().all(|v| v.is_finite()))
    }

    /// Sum of Frobenius norms of all weight matrices.
    pub fn frobenius_sum(&self) -> f64 {
        self.weights.matrices().iter().map(|m| m.frobenius_norm()).sum()
    }

    /// Dense flat gradient aligned with [`FlatParams`] indexing.
    pub fn flatten_gradients(&self, grads: &Gradients) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.flat_len());
        for (c, table) in self.embeddings.iter().enumerate() {
            let mut dense = vec![0.0; table.as_slice().len()];
            for (&row, g) in &grads.embeddings[c] {
                dense[row * table.cols()..(row + 1) * table.cols()].copy_from_slice(g);
            }
            flat.extend(dense);
        }
        for (_, s) in grads.weights.named_slices() {
            flat.extend_from_slice(s);
        }
        flat
    }
}

fn locate(lens: impl Iterator<Item = usize>, mut i: usize) -> (usize, usize) {
    for (k, len) in lens.enumerate() {
        if i < len {
            return (k, i);
        }
        i -= len;
    }
    panic!("flat index out of range");
}

impl FlatParams for ModelParams {
    fn flat_len(&self) -> usize {
        self.all_slices().iter().map(|(_, s)| s.len()).sum()
    }

    fn flat_get(&self, i: usize) -> f64 {
        let slices = self.all_slices();
        let (k, j) = locate(slices.iter().map(|(_, s)| s.len()), i);
        slices[k].1[j]
    }

    fn flat_set(&mut self, i: usize, v: f64) {
        let mut slices = self.all_slices_mut();
        let lens: Vec<usize> = slices.iter().map(|s| s.len()).collect();
        let (k, j) = locate(lens.into_iter(), i);
        slices[k][j] = v;
    }

    fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.all_slices()
            .iter()
            .map(|(_, s)| {
                let r = start..start + s.len();
                start = r.end;
                r
            })
            .collect()
    }
}

/// Gradients with sparse embedding rows: only rows touched by the samples
/// appear.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: Vec<BTreeMap<usize, Vec<f64>>>,
    pub weights: Weights,
}

impl Gradients {
    pub fn zeros(params: &ModelParams) -> Self {
        Gradients {
            embeddings: vec![BTreeMap::new(); params.embeddings.len()],
            weights: params.weights.zeros_like(),
        }
    }

    pub fn add_embedding_row(&mut self, channel: usize, row: usize, grad: &[f64]) {
        let entry = self.embeddings[channel]
            .entry(row)
            .or_insert_with(|| vec![0.0; grad.len()]);
        crate::tensor::axpy(1.0, grad, entry);
    }

    /// `self += other`, rows merged in key order.
    pub fn accumulate(&mut self, other: &Gradients) {
        self.weights.add_scaled(1.0, &other.weights);
        for (mine, theirs) in self.embeddings.iter_mut().zip(&other.embeddings) {
            for (&row, g) in theirs {
                match mine.get_mut(&row) {
                    Some(m) => crate::tensor::axpy(1.0, g, m),
                    None => {
                        mine.insert(row, g.clone());
                    }
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .named_slices()
            .iter()
            .all(|(_, s)| s.iter().all(|v| v.is_finite()))
            && self
                .embeddings
                .iter()
                .all(|m| m.values().all(|r| r.iter().all(|v| v.is_finite())))
    }
}

/// Plain SGD step `θ ← θ − lr · g`.
pub fn sgd_update(params: &mut ModelParams, grads: &Gradients, lr: f64) {
    params.weights.add_scaled(-lr, &grads.weights);
    for (table, rows) in params.embeddings.iter_mut().zip(&grads.embeddings) {
        for (&row, g) in rows {
            crate::tensor::axpy(-lr, g, table.row_mut(row));
        }
    }
}
