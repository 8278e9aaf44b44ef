//! Shortest dependency paths and direction-based augmentation.
//!
//! The path between the two entities is split at their lowest common
//! ancestor: the left sub-path runs from `e1` up to the ancestor, the right
//! sub-path from the ancestor down to `e2`. Each edge contributes the
//! grammatical relation stored on its child node.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, Channel, DependencyParse, Vocabulary};
use crate::error::{Error, Result};
use crate::label::RelationLabel;

/// Deepest node that is an inclusive ancestor of both `a` and `b`.
pub fn lowest_common_ancestor(parse: &DependencyParse, a: usize, b: usize) -> usize {
    let path_a = parse.root_path(a);
    let path_b = parse.root_path(b);
    // Walk both root paths from the root end until they diverge.
    let mut lca = *path_a.last().expect("root path is non-empty");
    for (x, y) in path_a.iter().rev().zip(path_b.iter().rev()) {
        if x != y {
            break;
        }
        lca = *x;
    }
    lca
}

/// Token indices of the two sub-paths; both contain the common ancestor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdpNodes {
    /// `e1` first, ancestor last.
    pub left: Vec<usize>,
    /// Ancestor first, `e2` last.
    pub right: Vec<usize>,
}

impl SdpNodes {
    /// Full path `e1 … ancestor … e2`.
    pub fn full_path(&self) -> Vec<usize> {
        self.left
            .iter()
            .chain(self.right.iter().skip(1))
            .copied()
            .collect()
    }
}

pub fn sdp_nodes(parse: &DependencyParse, e1: usize, e2: usize) -> SdpNodes {
    let lca = lowest_common_ancestor(parse, e1, e2);
    let up = |from: usize| {
        let mut path = vec![from];
        let mut cur = from;
        while cur != lca {
            cur = parse.heads[cur].expect("ancestor lies on the root path");
            path.push(cur);
        }
        path
    };
    let left = up(e1);
    let mut right = up(e2);
    right.reverse();
    SdpNodes { left, right }
}

/// Per-channel id sequences along one sub-path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubPath {
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub hypernyms: Vec<usize>,
    /// One entry per edge, `words.len() - 1` in total.
    pub grs: Vec<usize>,
}

impl SubPath {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn channel(&self, c: Channel) -> &[usize] {
        match c {
            Channel::Word => &self.words,
            Channel::Pos => &self.pos,
            Channel::Gr => &self.grs,
            Channel::Hypernym => &self.hypernyms,
        }
    }

    pub fn is_aligned(&self) -> bool {
        let n = self.words.len();
        n >= 1 && self.pos.len() == n && self.hypernyms.len() == n && self.grs.len() == n - 1
    }

    pub fn reversed(&self) -> SubPath {
        let rev = |v: &[usize]| v.iter().rev().copied().collect::<Vec<_>>();
        SubPath {
            words: rev(&self.words),
            pos: rev(&self.pos),
            hypernyms: rev(&self.hypernyms),
            grs: rev(&self.grs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SdpSample {
    pub id: u64,
    pub left: SubPath,
    pub right: SubPath,
    pub label: RelationLabel,
    pub augmented: bool,
}

impl SdpSample {
    /// Swap the sub-paths and re-root each at the other entity, without
    /// touching the label.
    pub fn inverted_paths(&self) -> (SubPath, SubPath) {
        (self.right.reversed(), self.left.reversed())
    }

    /// The inverse-direction view used at decode time: paths inverted and
    /// label inverted (`Other` stays `Other`).
    pub fn inverse(&self) -> SdpSample {
        let (left, right) = self.inverted_paths();
        SdpSample {
            id: self.id,
            left,
            right,
            label: self.label.inverse(),
            augmented: !self.augmented,
        }
    }
}

fn sub_path(sentence: &AnnotatedSentence, vocab: &Vocabulary, nodes: &[usize], upward: bool) -> SubPath {
    let parse = &sentence.parse;
    let words = nodes
        .iter()
        .map(|&i| vocab.words.id(&parse.tokens[i].form))
        .collect();
    let pos = nodes.iter().map(|&i| vocab.pos.id(&parse.tokens[i].pos)).collect();
    let hypernyms = nodes
        .iter()
        .map(|&i| vocab.hypernyms.id(&sentence.hypernyms[i]))
        .collect();
    // Going up, the child of each edge is the earlier node; going down, the later one.
    let grs = nodes
        .windows(2)
        .map(|w| {
            let child = if upward { w[0] } else { w[1] };
            vocab.grs.id(&parse.deprels[child])
        })
        .collect();
    SubPath {
        words,
        pos,
        hypernyms,
        grs,
    }
}

pub fn extract_sdp(sentence: &AnnotatedSentence, vocab: &Vocabulary) -> SdpSample {
    let nodes = sdp_nodes(&sentence.parse, sentence.e1, sentence.e2);
    SdpSample {
        id: sentence.id,
        left: sub_path(sentence, vocab, &nodes.left, true),
        right: sub_path(sentence, vocab, &nodes.right, false),
        label: sentence.label,
        augmented: sentence.augmented,
    }
}

/// The inverse-relation sample of a directed sample; `None` for `Other` or
/// an already augmented sample.
pub fn augment(sample: &SdpSample) -> Option<SdpSample> {
    if sample.augmented || !sample.label.is_directed() {
        return None;
    }
    Some(sample.inverse())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    None,
    All,
    OtherOnly,
    DirectedOnly,
}

impl AugmentMode {
    pub fn name(self) -> &'static str {
        match self {
            AugmentMode::None => "none",
            AugmentMode::All => "all",
            AugmentMode::OtherOnly => "other_only",
            AugmentMode::DirectedOnly => "directed_only",
        }
    }

    fn selects(self, label: RelationLabel) -> bool {
        match self {
            AugmentMode::None => false,
            AugmentMode::All => true,
            AugmentMode::OtherOnly => !label.is_directed(),
            AugmentMode::DirectedOnly => label.is_directed(),
        }
    }
}

impl FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AugmentMode::None),
            "all" => Ok(AugmentMode::All),
            "other_only" => Ok(AugmentMode::OtherOnly),
            "directed_only" => Ok(AugmentMode::DirectedOnly),
            _ => Err(Error::Config(format!(
                "unknown augmentation mode `{s}` (expected none, all, other_only or directed_only)"
            ))),
        }
    }
}

/// Originals followed by the augmented copies selected by `mode`.
pub fn augment_dataset(samples: &[SdpSample], mode: AugmentMode) -> Result<Vec<SdpSample>> {
    if let Some(s) = samples.iter().find(|s| s.augmented) {
        return Err(Error::Data(format!("sample {} is already augmented", s.id)));
    }
    let mut out = samples.to_vec();
    out.extend(
        samples
            .iter()
            .filter(|s| mode.selects(s.label))
            .map(SdpSample::inverse),
    );
    Ok(out)
}

/// Sentence-level counterpart of [`augment_dataset`]: augmented copies swap
/// the entities within the same tree.
pub fn augment_sentences(
    sentences: &[AnnotatedSentence],
    mode: AugmentMode,
) -> Result<Vec<AnnotatedSentence>> {
    if let Some(s) = sentences.iter().find(|s| s.augmented) {
        return Err(Error::Data(format!("sentence {} is already augmented", s.id)));
    }
    let mut out = sentences.to_vec();
    out.extend(
        sentences
            .iter()
            .filter(|s| mode.selects(s.label))
            .map(AnnotatedSentence::swapped),
    );
    Ok(out)
}
