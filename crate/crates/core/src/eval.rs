//! Scoring and pooling traceback.
//!
//! [`score`] follows the official SemEval-2010 Task 8 measure: each of the
//! nine relation types pools the counts of its two directions, a prediction
//! is correct only with the right direction, and `Other` takes part only
//! through the false positives and false negatives of the other types.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, Channel, Vocabulary};
use crate::error::{Error, Result};
use crate::label::{RelationLabel, RelationType, NUM_LABELS, NUM_TYPES};
use crate::model::{forward, Mode, ModelConfig, ModelParams, Side};
use crate::sdp::{sdp_nodes, SdpSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub relation: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Percentages.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_type: Vec<TypeScore>,
    /// Mean of the nine per-type F1 values, in percent.
    pub macro_f1: f64,
    /// Exact-label accuracy over all 19 labels, in percent.
    pub accuracy: f64,
    /// Rows are gold label ids, columns predicted label ids.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn score(gold: &[RelationLabel], pred: &[RelationLabel]) -> Result<ScoreReport> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut confusion = vec![vec![0usize; NUM_LABELS]; NUM_LABELS];
    for (g, p) in gold.iter().zip(pred) {
        confusion[g.id()][p.id()] += 1;
    }
    let mut per_type = Vec::with_capacity(NUM_TYPES);
    for ty in RelationType::ALL {
        let ids: Vec<usize> = RelationLabel::all()
            .filter(|l| l.relation_type() == Some(ty))
            .map(RelationLabel::id)
            .collect();
        let tp: usize = ids.iter().map(|&i| confusion[i][i]).sum();
        let predicted: usize = ids.iter().map(|&j| (0..NUM_LABELS).map(|i| confusion[i][j]).sum::<usize>()).sum();
        let actual: usize = ids.iter().map(|&i| confusion[i].iter().sum::<usize>()).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_type.push(TypeScore {
            relation: ty.name().to_string(),
            tp,
            fp: predicted - tp,
            fn_: actual - tp,
            precision,
            recall,
            f1,
        });
    }
    let macro_f1 = per_type.iter().map(|t| t.f1).sum::<f64>() / NUM_TYPES as f64;
    let correct: usize = (0..NUM_LABELS).map(|i| confusion[i][i]).sum();
    Ok(ScoreReport {
        per_type,
        macro_f1,
        accuracy: ratio(correct, gold.len()),
        confusion,
        total: gold.len(),
    })
}

impl ScoreReport {
    /// Plain-text summary with two-decimal figures.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>5} {:>5} {:>5} {:>8} {:>8} {:>8}", "relation", "tp", "fp", "fn", "P", "R", "F1");
        for t in &self.per_type {
            let _ = writeln!(
                out,
                "{:<20} {:>5} {:>5} {:>5} {:>8.2} {:>8.2} {:>8.2}",
                t.relation, t.tp, t.fp, t.fn_, t.precision, t.recall, t.f1
            );
        }
        let _ = writeln!(out, "accuracy: {:.2}% ({} examples)", self.accuracy, self.total);
        let _ = writeln!(out, "macro-averaged F1 (9 types, direction-aware, Other excluded): {:.2}", self.macro_f1);
        out
    }
}

/// Parse `id<TAB>label` lines (the predictions/answer-key format).
pub fn parse_predictions(content: &str, origin: &str) -> Result<Vec<(u64, RelationLabel)>> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |m: String| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                message: m,
            };
            let (id, label) = l
                .split_once('\t')
                .ok_or_else(|| bad("expected `id<TAB>label`".into()))?;
            let id = id.trim().parse().map_err(|_| bad(format!("bad id `{id}`")))?;
            let label = label.trim().parse().map_err(|e: Error| bad(e.to_string()))?;
            Ok((id, label))
        })
        .collect()
}

pub fn write_predictions(rows: &[(u64, RelationLabel)]) -> String {
    let mut out = String::new();
    for (id, label) in rows {
        let _ = writeln!(out, "{id}\t{label}");
    }
    out
}

/// The label that is most frequent in `labels` (smallest id on ties).
pub fn majority_label(labels: &[RelationLabel]) -> RelationLabel {
    let mut counts = [0usize; NUM_LABELS];
    for l in labels {
        counts[l.id()] += 1;
    }
    let best = (0..NUM_LABELS).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
    RelationLabel::from_id(best).expect("label id")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProportions {
    /// `embedding`, `h1`, `h2`, …
    pub layer: String,
    /// Fraction of the pool's dimensions whose maximum came from each step.
    pub proportions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainProportions {
    pub channel: Channel,
    pub side: Side,
    /// One label per time step: tokens, tags, or edge relations for the GR channel.
    pub steps: Vec<String>,
    pub layers: Vec<LayerProportions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingTrace {
    pub id: u64,
    pub gold: RelationLabel,
    pub predicted: RelationLabel,
    pub left_tokens: Vec<String>,
    pub right_tokens: Vec<String>,
    pub chains: Vec<ChainProportions>,
}

/// Surface forms along both sub-paths of a sentence.
pub fn surface_tokens(sentence: &AnnotatedSentence) -> (Vec<String>, Vec<String>) {
    let nodes = sdp_nodes(&sentence.parse, sentence.e1, sentence.e2);
    let forms = |ix: &[usize]| {
        ix.iter()
            .map(|&i| sentence.parse.tokens[i].form.clone())
            .collect::<Vec<_>>()
    };
    (forms(&nodes.left), forms(&nodes.right))
}

/// Eval-mode forward pass, then for every requested channel, side and
/// layer the share of pooled dimensions contributed by each time step.
pub fn pooling_trace(
    sample: &SdpSample,
    params: &ModelParams,
    config: &ModelConfig,
    vocab: &Vocabulary,
    channels: &[Channel],
) -> Result<PoolingTrace> {
    let trace = forward(sample, params, config, Mode::Eval, 0)?;
    let mut chains = Vec::new();
    for &channel in channels {
        for side in Side::BOTH {
            let chain = trace.chain(channel, side);
            let dim = config.channel_dim(channel);
            let lex = vocab.channel(channel);
            let steps = chain
                .ids
                .iter()
                .map(|&id| lex.token(id).unwrap_or("?").to_string())
                .collect();
            let layers = chain
                .pools
                .iter()
                .enumerate()
                .map(|(l, pool)| {
                    let mut hits = vec![0usize; chain.ids.len()];
                    for &t in &pool.argmax {
                        hits[t] += 1;
                    }
                    LayerProportions {
                        layer: if l == 0 { "embedding".to_string() } else { format!("h{l}") },
                        proportions: hits.iter().map(|&h| h as f64 / dim as f64).collect(),
                    }
                })
                .collect();
            chains.push(ChainProportions {
                channel,
                side,
                steps,
                layers,
            });
        }
    }
    let word = |p: &[usize]| {
        p.iter()
            .map(|&id| vocab.words.token(id).unwrap_or("?").to_string())
            .collect()
    };
    Ok(PoolingTrace {
        id: sample.id,
        gold: sample.label,
        predicted: RelationLabel::from_id(trace.predicted_id()).expect("label id"),
        left_tokens: word(&sample.left.words),
        right_tokens: word(&sample.right.words),
        chains,
    })
}
