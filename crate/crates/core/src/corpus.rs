//! Corpus ingestion: SemEval-2010 Task 8 sentences, dependency parses in a
//! CoNLL-like TSV, hypernym lexicons and word2vec text embeddings, merged into
//! [`AnnotatedSentence`]s and indexed by a [`Vocabulary`].

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::label::{RelationLabel, NUM_LABELS};

pub const UNK: &str = "<unk>";

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// One block of the SemEval distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawExample {
    pub id: u64,
    /// Sentence text including the `<e1>`/`<e2>` markers.
    pub text: String,
    pub label: RelationLabel,
    pub comment: Option<String>,
}

/// Sentence text with markers removed and the byte spans of both entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedText {
    pub text: String,
    pub e1: Range<usize>,
    pub e2: Range<usize>,
}

impl RawExample {
    pub fn marked_text(&self) -> Result<MarkedText> {
        strip_markers(&self.text).map_err(|message| Error::Alignment {
            id: self.id,
            message,
        })
    }
}

fn strip_markers(text: &str) -> std::result::Result<MarkedText, String> {
    let mut clean = String::with_capacity(text.len());
    let mut e1 = None;
    let mut e2 = None;
    let mut open: Option<(u8, usize)> = None;
    let mut rest = text;
    while !rest.is_empty() {
        let tag = ["<e1>", "</e1>", "<e2>", "</e2>"]
            .into_iter()
            .find(|t| rest.starts_with(t));
        match tag {
            Some(t) => {
                let which = t.as_bytes()[t.len() - 2] - b'0';
                if t.starts_with("</") {
                    match open.take() {
                        Some((w, start)) if w == which => {
                            let slot = if which == 1 { &mut e1 } else { &mut e2 };
                            if slot.is_some() {
                                return Err(format!("duplicate <e{which}> span"));
                            }
                            *slot = Some(start..clean.len());
                        }
                        _ => return Err(format!("unbalanced </e{which}> marker")),
                    }
                } else {
                    if open.is_some() {
                        return Err("nested or overlapping entity markers".into());
                    }
                    open = Some((which, clean.len()));
                }
                rest = &rest[t.len()..];
            }
            None => {
                let c = rest.chars().next().expect("non-empty");
                clean.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    if open.is_some() {
        return Err("unterminated entity marker".into());
    }
    match (e1, e2) {
        (Some(e1), Some(e2)) => Ok(MarkedText {
            text: clean,
            e1,
            e2,
        }),
        _ => Err("sentence must contain exactly one <e1> and one <e2> span".into()),
    }
}

/// Parse SemEval-formatted text. `origin` names the source in errors.
pub fn parse_semeval(content: &str, origin: &str) -> Result<Vec<RawExample>> {
    let mut out = Vec::new();
    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    while let Some((lineno, line)) = lines.next() {
        let (id, quoted) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(origin, lineno, "expected `<id>\\t\"<sentence>\"`"))?;
        let id: u64 = id
            .trim()
            .parse()
            .map_err(|_| parse_err(origin, lineno, format!("bad sentence id `{id}`")))?;
        let quoted = quoted.trim();
        let text = quoted
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| parse_err(origin, lineno, "sentence must be double-quoted"))?;
        strip_markers(text).map_err(|m| parse_err(origin, lineno, m))?;

        let (rel_line, rel) = lines
            .next()
            .ok_or_else(|| parse_err(origin, lineno, "missing relation line"))?;
        let label: RelationLabel = rel
            .trim()
            .parse()
            .map_err(|e: Error| parse_err(origin, rel_line, e.to_string()))?;

        let comment = match lines.peek() {
            Some((_, l)) if l.trim_start().starts_with("Comment:") => {
                let (_, l) = lines.next().expect("peeked");
                let c = l.trim_start()["Comment:".len()..].trim();
                (!c.is_empty()).then(|| c.to_string())
            }
            _ => None,
        };
        out.push(RawExample {
            id,
            text: text.to_string(),
            label,
            comment,
        });
    }
    Ok(out)
}

pub fn load_semeval(path: &Path) -> Result<Vec<RawExample>> {
    parse_semeval(&read_file(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub pos: String,
}

/// A validated dependency tree. Indices are 0-based; the root has no head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyParse {
    pub tokens: Vec<Token>,
    pub heads: Vec<Option<usize>>,
    pub deprels: Vec<String>,
}

impl DependencyParse {
    pub fn new(
        tokens: Vec<Token>,
        heads: Vec<Option<usize>>,
        deprels: Vec<String>,
    ) -> std::result::Result<Self, String> {
        let parse = DependencyParse {
            tokens,
            heads,
            deprels,
        };
        parse.validate()?;
        Ok(parse)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> usize {
        self.heads
            .iter()
            .position(Option::is_none)
            .expect("validated tree has a root")
    }

    /// Checks equal lengths, a single root, in-range heads and acyclicity.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("empty parse".into());
        }
        if self.heads.len() != n || self.deprels.len() != n {
            return Err(format!(
                "length mismatch: {} tokens, {} heads, {} deprels",
                n,
                self.heads.len(),
                self.deprels.len()
            ));
        }
        let roots = self.heads.iter().filter(|h| h.is_none()).count();
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        for (i, h) in self.heads.iter().enumerate() {
            if let Some(h) = *h {
                if h >= n {
                    return Err(format!("token {} has out-of-range head {}", i + 1, h + 1));
                }
            }
        }
        // 0 = unvisited, 1 = on current walk, 2 = reaches root
        let mut state = vec![0u8; n];
        for start in 0..n {
            let mut walk = Vec::new();
            let mut cur = start;
            loop {
                match state[cur] {
                    2 => break,
                    1 => return Err(format!("cycle through token {}", cur + 1)),
                    _ => {}
                }
                state[cur] = 1;
                walk.push(cur);
                match self.heads[cur] {
                    Some(h) => cur = h,
                    None => break,
                }
            }
            for w in walk {
                state[w] = 2;
            }
        }
        Ok(())
    }

    /// Path from `node` up to the root, `node` first.
    pub fn root_path(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(h) = self.heads[cur] {
            path.push(h);
            cur = h;
        }
        path
    }
}

/// Parse dependency TSV: one `index form pos head deprel` line per token,
/// 1-based indices, head 0 for the root, blank lines between sentences.
pub fn parse_parses(content: &str, origin: &str) -> Result<Vec<DependencyParse>> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut lines = content.lines().enumerate().peekable();
    loop {
        let next = lines.next();
        let at_break = match next {
            None => true,
            Some((_, l)) => l.trim().is_empty(),
        };
        if at_break {
            if !block.is_empty() {
                out.push(parse_block(&block, out.len() + 1, origin)?);
                block.clear();
            }
            if next.is_none() {
                break;
            }
            continue;
        }
        let (i, line) = next.expect("not at end");
        if line.starts_with('#') {
            continue;
        }
        block.push((i + 1, line.split('\t').map(str::trim).collect()));
    }
    Ok(out)
}

fn parse_block(lines: &[(usize, Vec<&str>)], block: usize, origin: &str) -> Result<DependencyParse> {
    let mut tokens = Vec::with_capacity(lines.len());
    let mut heads = Vec::with_capacity(lines.len());
    let mut deprels = Vec::with_capacity(lines.len());
    for (k, (lineno, fields)) in lines.iter().enumerate() {
        if fields.len() != 5 {
            return Err(parse_err(
                origin,
                *lineno,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(origin, *lineno, format!("bad token index `{}`", fields[0])))?;
        if index != k + 1 {
            return Err(parse_err(
                origin,
                *lineno,
                format!("token index {index} out of sequence (expected {})", k + 1),
            ));
        }
        let head: usize = fields[3]
            .parse()
            .map_err(|_| parse_err(origin, *lineno, format!("bad head `{}`", fields[3])))?;
        tokens.push(Token {
            form: fields[1].to_string(),
            pos: fields[2].to_string(),
        });
        heads.push(head.checked_sub(1));
        deprels.push(fields[4].to_string());
    }
    DependencyParse::new(tokens, heads, deprels).map_err(|message| Error::Tree { block, message })
}

pub fn load_parses(path: &Path) -> Result<Vec<DependencyParse>> {
    parse_parses(&read_file(path)?, &path.display().to_string())
}

/// `word<TAB>tag` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypernymLexicon {
    entries: HashMap<String, String>,
}

impl HypernymLexicon {
    pub fn parse(content: &str, origin: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(origin, i + 1, "expected `word<TAB>tag`"))?;
            entries.insert(word.trim().to_string(), tag.trim().to_string());
        }
        Ok(HypernymLexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    pub fn insert(&mut self, word: impl Into<String>, tag: impl Into<String>) {
        self.entries.insert(word.into(), tag.into());
    }

    /// Exact form first, then lowercase; `<unk>` when absent.
    pub fn tag(&self, form: &str) -> String {
        self.entries
            .get(form)
            .or_else(|| self.entries.get(&form.to_lowercase()))
            .cloned()
            .unwrap_or_else(|| UNK.to_string())
    }
}

/// A parsed sentence with all four channel annotations and entity heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: u64,
    pub parse: DependencyParse,
    pub hypernyms: Vec<String>,
    pub e1: usize,
    pub e2: usize,
    pub label: RelationLabel,
    /// Set on sentences produced by entity swapping.
    #[serde(default)]
    pub augmented: bool,
}

impl AnnotatedSentence {
    pub fn validate(&self) -> std::result::Result<(), String> {
        self.parse.validate()?;
        let n = self.parse.len();
        if self.hypernyms.len() != n {
            return Err(format!("{} hypernym tags for {n} tokens", self.hypernyms.len()));
        }
        if self.e1 >= n || self.e2 >= n {
            return Err("entity index out of range".into());
        }
        if self.e1 == self.e2 {
            return Err("e1 and e2 resolve to the same token".into());
        }
        Ok(())
    }

    /// The same tree with the entities swapped and the label inverted.
    pub fn swapped(&self) -> AnnotatedSentence {
        AnnotatedSentence {
            e1: self.e2,
            e2: self.e1,
            label: self.label.inverse(),
            augmented: true,
            ..self.clone()
        }
    }
}

fn normalize_ptb(form: &str) -> &str {
    match form {
        "-LRB-" | "-lrb-" => "(",
        "-RRB-" | "-rrb-" => ")",
        "-LSB-" | "-lsb-" => "[",
        "-RSB-" | "-rsb-" => "]",
        "-LCB-" | "-lcb-" => "{",
        "-RCB-" | "-rcb-" => "}",
        "``" | "''" => "\"",
        other => other,
    }
}

/// Byte span of each parse token within `text`, found by a left-to-right
/// scan. Tokens that cannot be located get `None`.
fn token_spans(text: &str, tokens: &[Token]) -> Vec<Option<Range<usize>>> {
    let mut cursor = 0;
    tokens
        .iter()
        .map(|tok| {
            for form in [tok.form.as_str(), normalize_ptb(&tok.form)] {
                if form.is_empty() {
                    continue;
                }
                if let Some(off) = text[cursor..].find(form) {
                    let start = cursor + off;
                    cursor = start + form.len();
                    return Some(start..cursor);
                }
            }
            None
        })
        .collect()
}

/// Head word of an entity span: the span token whose head lies outside the
/// span; if several or none qualify, the rightmost candidate.
pub fn span_head(parse: &DependencyParse, span_tokens: &[usize]) -> Option<usize> {
    let inside: HashSet<usize> = span_tokens.iter().copied().collect();
    let external: Vec<usize> = span_tokens
        .iter()
        .copied()
        .filter(|&t| parse.heads[t].is_none_or(|h| !inside.contains(&h)))
        .collect();
    match external.as_slice() {
        [only] => Some(*only),
        [] => span_tokens.iter().copied().max(),
        several => several.iter().copied().max(),
    }
}

fn overlapping(spans: &[Option<Range<usize>>], entity: &Range<usize>) -> Vec<usize> {
    spans
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.as_ref()
                .filter(|s| s.start < entity.end && entity.start < s.end)
                .map(|_| i)
        })
        .collect()
}

/// Merge position-aligned examples and parses, tagging every token with its
/// hypernym and resolving both entity markers to head tokens.
pub fn annotate(
    examples: &[RawExample],
    parses: &[DependencyParse],
    lexicon: &HypernymLexicon,
) -> Result<Vec<AnnotatedSentence>> {
    if examples.len() != parses.len() {
        return Err(Error::Data(format!(
            "{} examples but {} parses; files must be aligned one-to-one",
            examples.len(),
            parses.len()
        )));
    }
    examples
        .iter()
        .zip(parses)
        .map(|(ex, parse)| {
            let marked = ex.marked_text()?;
            let spans = token_spans(&marked.text, &parse.tokens);
            let resolve = |name: &str, range: &Range<usize>| {
                let toks = overlapping(&spans, range);
                span_head(parse, &toks).ok_or_else(|| Error::Alignment {
                    id: ex.id,
                    message: format!(
                        "{name} span `{}` matches no parse token",
                        &marked.text[range.clone()]
                    ),
                })
            };
            let e1 = resolve("e1", &marked.e1)?;
            let e2 = resolve("e2", &marked.e2)?;
            if e1 == e2 {
                return Err(Error::Alignment {
                    id: ex.id,
                    message: "both entities resolve to the same token".into(),
                });
            }
            Ok(AnnotatedSentence {
                id: ex.id,
                hypernyms: parse.tokens.iter().map(|t| lexicon.tag(&t.form)).collect(),
                parse: parse.clone(),
                e1,
                e2,
                label: ex.label,
                augmented: false,
            })
        })
        .collect()
}

/// Word vectors in word2vec text format.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn parse(content: &str, origin: &str, expected_dim: usize) -> Result<Self> {
        let mut lines = content.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(origin, 1, "empty embedding file"))?;
        let mut hdr = header.split_whitespace();
        let (count, dim) = match (hdr.next(), hdr.next(), hdr.next()) {
            (Some(v), Some(d), None) => (
                v.parse::<usize>()
                    .map_err(|_| parse_err(origin, 1, "bad vocabulary size in header"))?,
                d.parse::<usize>()
                    .map_err(|_| parse_err(origin, 1, "bad dimension in header"))?,
            ),
            _ => return Err(parse_err(origin, 1, "header must be `<count> <dim>`")),
        };
        if dim != expected_dim {
            return Err(Error::Config(format!(
                "{origin}: embedding dimension {dim} does not match configured word dimension {expected_dim}"
            )));
        }
        let mut out = WordVectors {
            dim,
            index: HashMap::with_capacity(count),
            words: Vec::with_capacity(count),
            data: Vec::with_capacity(count * dim),
        };
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let start = out.data.len();
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_err(origin, i + 1, format!("bad value `{f}`")))?;
                out.data.push(v);
            }
            if out.data.len() - start != dim {
                return Err(parse_err(
                    origin,
                    i + 1,
                    format!("expected {dim} values, found {}", out.data.len() - start),
                ));
            }
            if out.index.contains_key(word) {
                out.data.truncate(start);
                continue;
            }
            out.index.insert(word.to_string(), out.words.len());
            out.words.push(word.to_string());
        }
        if out.words.len() != count {
            return Err(parse_err(
                origin,
                1,
                format!("header declares {count} vectors, file has {}", out.words.len()),
            ));
        }
        Ok(out)
    }

    pub fn load(path: &Path, expected_dim: usize) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string(), expected_dim)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Exact form first, then lowercase.
    pub fn lookup_key<'a>(&'a self, form: &str) -> Option<&'a str> {
        if let Some(&i) = self.index.get(form) {
            return Some(&self.words[i]);
        }
        self.index
            .get(&form.to_lowercase())
            .map(|&i| self.words[i].as_str())
    }

    pub fn vector(&self, key: &str) -> Option<&[f64]> {
        self.index
            .get(key)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Dense token ↔ id map with `<unk>` at id 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    /// Whether lookups fall back to the lowercase form.
    #[serde(default)]
    fold_case: bool,
}

impl Lexicon {
    pub fn new(fold_case: bool) -> Self {
        let mut lex = Lexicon {
            tokens: Vec::new(),
            index: HashMap::new(),
            fold_case,
        };
        lex.insert(UNK);
        lex
    }

    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn id(&self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        if self.fold_case {
            if let Some(&id) = self.index.get(&token.to_lowercase()) {
                return id;
            }
        }
        0
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// The four input channels, in concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Word,
    Pos,
    Gr,
    Hypernym,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Word, Channel::Pos, Channel::Gr, Channel::Hypernym];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Word => "word",
            Channel::Pos => "pos",
            Channel::Gr => "gr",
            Channel::Hypernym => "hypernym",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub words: Lexicon,
    pub pos: Lexicon,
    pub grs: Lexicon,
    pub hypernyms: Lexicon,
}

impl Vocabulary {
    pub fn channel(&self, c: Channel) -> &Lexicon {
        match c {
            Channel::Word => &self.words,
            Channel::Pos => &self.pos,
            Channel::Gr => &self.grs,
            Channel::Hypernym => &self.hypernyms,
        }
    }

    pub fn sizes(&self) -> [usize; 4] {
        Channel::ALL.map(|c| self.channel(c).len())
    }

    pub fn label_count(&self) -> usize {
        NUM_LABELS
    }

    pub fn label_id(&self, label: RelationLabel) -> usize {
        label.id()
    }

    pub fn label(&self, id: usize) -> Option<RelationLabel> {
        RelationLabel::from_id(id)
    }

    /// Hex SHA-256 over the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("vocabulary serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut v: Vocabulary = serde_json::from_str(s)?;
        for lex in [&mut v.words, &mut v.pos, &mut v.grs, &mut v.hypernyms] {
            lex.reindex();
        }
        Ok(v)
    }
}

/// Build vocabularies. Word entries come from every sentence in
/// `training` and `extra_words` that has a vector in `embeddings`, or from
/// every such word when no embedding file is used. POS, GR and hypernym
/// entries come from `training` only.
pub fn build_vocab(
    training: &[AnnotatedSentence],
    extra_words: &[AnnotatedSentence],
    embeddings: Option<&WordVectors>,
) -> Result<Vocabulary> {
    if training.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let mut words = Lexicon::new(true);
    for s in training.iter().chain(extra_words) {
        for tok in &s.parse.tokens {
            match embeddings {
                Some(emb) => {
                    if let Some(key) = emb.lookup_key(&tok.form) {
                        words.insert(key);
                    }
                }
                None => {
                    words.insert(&tok.form);
                }
            }
        }
    }
    let mut pos = Lexicon::new(false);
    let mut grs = Lexicon::new(false);
    let mut hypernyms = Lexicon::new(false);
    for s in training {
        for (tok, (gr, hyp)) in s
            .parse
            .tokens
            .iter()
            .zip(s.parse.deprels.iter().zip(&s.hypernyms))
        {
            pos.insert(&tok.pos);
            grs.insert(gr);
            hypernyms.insert(hyp);
        }
    }
    Ok(Vocabulary {
        words,
        pos,
        grs,
        hypernyms,
    })
}

/// Train/validation partition. With `validation_ids`, those ids form the
/// validation set; otherwise the last `validation_size` sentences do.
pub fn split_validation(
    sentences: Vec<AnnotatedSentence>,
    validation_size: usize,
    validation_ids: Option<&HashSet<u64>>,
) -> Result<(Vec<AnnotatedSentence>, Vec<AnnotatedSentence>)> {
    let (train, val): (Vec<_>, Vec<_>) = match validation_ids {
        Some(ids) => sentences.into_iter().partition(|s| !ids.contains(&s.id)),
        None => {
            if validation_size >= sentences.len() {
                return Err(Error::Data(format!(
                    "validation size {validation_size} leaves no training data out of {}",
                    sentences.len()
                )));
            }
            let mut train = sentences;
            let val = train.split_off(train.len() - validation_size);
            (train, val)
        }
    };
    if train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    Ok((train, val))
}

/// Serialize sentences to the interchange TSV: a header
/// `# id=<n> e1=<i> e2=<j> label=<label>` followed by one
/// `index form pos gr hypernym head` line per token (1-based, head 0 = root).
pub fn write_interchange(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = write!(out, "# id={} e1={} e2={} label={}", s.id, s.e1 + 1, s.e2 + 1, s.label);
        if s.augmented {
            out.push_str(" augmented=1");
        }
        out.push('\n');
        for (i, tok) in s.parse.tokens.iter().enumerate() {
            let head = s.parse.heads[i].map_or(0, |h| h + 1);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                tok.form,
                tok.pos,
                s.parse.deprels[i],
                s.hypernyms[i],
                head
            );
        }
        out.push('\n');
    }
    out
}

pub fn read_interchange(content: &str, origin: &str) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    let mut lines = content.lines().enumerate().peekable();
    while let Some((i, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let header = line
            .strip_prefix('#')
            .ok_or_else(|| parse_err(origin, lineno, "expected sentence header `# id=...`"))?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| parse_err(origin, lineno, format!("bad header field `{kv}`")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| parse_err(origin, lineno, format!("header lacks `{k}`")))
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| parse_err(origin, lineno, format!("bad `{k}` value")))
        };
        let id = num("id")?;
        let e1 = num("e1")? as usize;
        let e2 = num("e2")? as usize;
        let label: RelationLabel = get("label")?
            .parse()
            .map_err(|e: Error| parse_err(origin, lineno, e.to_string()))?;
        let augmented = fields.get("augmented").is_some_and(|v| *v == "1");

        let mut tokens = Vec::new();
        let mut heads = Vec::new();
        let mut deprels = Vec::new();
        let mut hypernyms = Vec::new();
        while let Some((j, tl)) = lines.peek().copied() {
            if tl.trim().is_empty() || tl.starts_with('#') {
                break;
            }
            lines.next();
            let f: Vec<&str> = tl.split('\t').collect();
            if f.len() != 6 {
                return Err(parse_err(origin, j + 1, "expected 6 tab-separated fields"));
            }
            let head: usize = f[5]
                .parse()
                .map_err(|_| parse_err(origin, j + 1, "bad head"))?;
            tokens.push(Token {
                form: f[1].to_string(),
                pos: f[2].to_string(),
            });
            deprels.push(f[3].to_string());
            hypernyms.push(f[4].to_string());
            heads.push(head.checked_sub(1));
        }
        if e1 == 0 || e2 == 0 {
            return Err(parse_err(origin, lineno, "entity indices are 1-based"));
        }
        let s = AnnotatedSentence {
            id,
            parse: DependencyParse {
                tokens,
                heads,
                deprels,
            },
            hypernyms,
            e1: e1 - 1,
            e2: e2 - 1,
            label,
            augmented,
        };
        s.validate().map_err(|m| parse_err(origin, lineno, m))?;
        out.push(s);
    }
    Ok(out)
}

pub fn load_interchange(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    read_interchange(&read_file(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{Direction, RelationType};
    use proptest::prelude::*;

    const BLOCKS: &str = "1\t\"The <e1>valuables</e1> were locked in a <e2>safe</e2>.\"\n\
Content-Container(e1,e2)\n\
Comment: example\n\
\n\
2\t\"A <e1>cat</e1> and a <e2>dog</e2> slept.\"\n\
Other\n\
Comment:\n\
\n";

    fn toks(forms: &[&str]) -> Vec<Token> {
        forms
            .iter()
            .map(|f| Token {
                form: f.to_string(),
                pos: "X".into(),
            })
            .collect()
    }

    #[test]
    fn semeval_blocks() {
        let ex = parse_semeval(BLOCKS, "mem").unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(
            ex[0].label,
            RelationLabel::Directed(RelationType::ContentContainer, Direction::Forward)
        );
        assert_eq!(ex[0].comment.as_deref(), Some("example"));
        assert_eq!(ex[1].label, RelationLabel::Other);
        assert_eq!(ex[1].comment, None);
        let m = ex[0].marked_text().unwrap();
        assert_eq!(&m.text[m.e1.clone()], "valuables");
        assert_eq!(&m.text[m.e2.clone()], "safe");
    }

    #[test]
    fn semeval_errors_name_the_line() {
        let bad = "1\t\"No markers here.\"\nOther\n";
        match parse_semeval(bad, "f.txt").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("{e}"),
        }
        let bad = "1\t\"<e1>a</e1> <e2>b</e2>\"\nFoo-Bar(e1,e2)\n";
        match parse_semeval(bad, "f.txt").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn markers_must_not_overlap() {
        assert!(strip_markers("<e1>a <e2>b</e1></e2>").is_err());
        assert!(strip_markers("<e1>a</e1> <e1>b</e1> <e2>c</e2>").is_err());
    }

    #[test]
    fn minimal_chain_parse() {
        let p = parse_parses("1\tA\tX\t2\tamod\n2\tB\tX\t0\troot\n3\tC\tX\t2\tdobj\n", "m").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].root(), 1);
        assert_eq!(p[0].heads, vec![Some(1), None, Some(1)]);
    }

    #[test]
    fn self_loop_is_a_cycle_error() {
        let err = parse_parses("1\tA\tX\t1\tdep\n2\tB\tX\t0\troot\n", "m").unwrap_err();
        assert!(matches!(err, Error::Tree { block: 1, .. }), "{err}");
    }

    #[test]
    fn multiple_roots_rejected() {
        let text = "1\tA\tX\t0\troot\n\n1\tA\tX\t0\troot\n2\tB\tX\t0\troot\n";
        let err = parse_parses(text, "m").unwrap_err();
        assert!(matches!(err, Error::Tree { block: 2, .. }), "{err}");
    }

    #[test]
    fn annotate_resolves_entities_and_unknown_hypernyms() {
        let ex = parse_semeval(BLOCKS, "mem").unwrap();
        let p1 = DependencyParse::new(
            toks(&["The", "valuables", "were", "locked", "in", "a", "safe", "."]),
            vec![Some(1), Some(3), Some(3), None, Some(3), Some(6), Some(4), Some(3)],
            ["det", "nsubjpass", "auxpass", "root", "prep", "det", "pobj", "punct"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap();
        let p2 = DependencyParse::new(
            toks(&["A", "cat", "and", "a", "dog", "slept", "."]),
            vec![Some(1), Some(5), Some(1), Some(4), Some(1), None, Some(5)],
            ["det", "nsubj", "cc", "det", "conj", "root", "punct"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap();
        let mut lex = HypernymLexicon::default();
        lex.insert("safe", "noun.artifact");
        let out = annotate(&ex, &[p1, p2], &lex).unwrap();
        assert_eq!(out[0].e1, 1);
        assert_eq!(out[0].e2, 6);
        assert_eq!(out[0].hypernyms[6], "noun.artifact");
        assert_eq!(out[0].hypernyms[1], UNK);
        assert_eq!((out[1].e1, out[1].e2), (1, 4));
    }

    #[test]
    fn multi_token_entity_takes_span_head() {
        let ex = RawExample {
            id: 7,
            text: "Most of the <e1>verses</e1> of the <e2>plantation songs</e2> had rhymes".into(),
            label: RelationLabel::Other,
            comment: None,
        };
        // songs heads plantation; the span's external attachment is songs -> of
        let parse = DependencyParse::new(
            toks(&["Most", "of", "the", "verses", "of", "the", "plantation", "songs", "had", "rhymes"]),
            vec![Some(8), Some(0), Some(3), Some(1), Some(3), Some(7), Some(7), Some(4), None, Some(8)],
            vec!["x".to_string(); 10],
        )
        .unwrap();
        let out = annotate(&[ex], &[parse], &HypernymLexicon::default()).unwrap();
        assert_eq!(out[0].e2, 7);
        assert_eq!(out[0].parse.tokens[7].form, "songs");
    }

    #[test]
    fn span_head_tie_goes_rightmost() {
        let parse = DependencyParse::new(
            toks(&["a", "b", "c"]),
            vec![Some(2), Some(2), None],
            vec!["x".to_string(); 3],
        )
        .unwrap();
        assert_eq!(span_head(&parse, &[0, 1]), Some(1));
    }

    #[test]
    fn unmatched_entity_is_an_alignment_error() {
        let ex = RawExample {
            id: 42,
            text: "<e1>foo</e1> and <e2>bar</e2>".into(),
            label: RelationLabel::Other,
            comment: None,
        };
        let parse = DependencyParse::new(
            toks(&["baz", "and", "bar"]),
            vec![Some(1), None, Some(1)],
            vec!["x".to_string(); 3],
        )
        .unwrap();
        let err = annotate(&[ex], &[parse], &HypernymLexicon::default()).unwrap_err();
        assert!(matches!(err, Error::Alignment { id: 42, .. }), "{err}");
    }

    fn sentence(forms: &[&str], gr: &[&str]) -> AnnotatedSentence {
        let n = forms.len();
        let mut heads: Vec<Option<usize>> = (0..n).map(|i| Some((i + 1) % n)).collect();
        heads[n - 1] = None;
        AnnotatedSentence {
            id: 1,
            parse: DependencyParse::new(toks(forms), heads, gr.iter().map(|s| s.to_string()).collect())
                .unwrap(),
            hypernyms: vec![UNK.to_string(); n],
            e1: 0,
            e2: n - 1,
            label: RelationLabel::Other,
            augmented: false,
        }
    }

    #[test]
    fn vocab_counts_embedded_words_plus_unk() {
        let s = sentence(&["alpha", "beta", "gamma", "delta"], &["a", "b", "nsubj", "root"]);
        let mut emb = String::from("3 200\n");
        for w in ["alpha", "beta", "gamma"] {
            emb.push_str(w);
            for _ in 0..200 {
                emb.push_str(" 0.5");
            }
            emb.push('\n');
        }
        let vectors = WordVectors::parse(&emb, "emb", 200).unwrap();
        let vocab = build_vocab(std::slice::from_ref(&s), &[], Some(&vectors)).unwrap();
        assert_eq!(vocab.words.len(), 4);
        assert_eq!(vocab.words.id("delta"), 0);
        assert_eq!(vocab.grs.id("nsubj"), vocab.grs.id("nsubj"));
        assert_eq!(vocab.grs.id("never-seen"), 0);
        assert_eq!(vocab.label_count(), 19);
    }

    #[test]
    fn vocab_rejects_bad_dimension_and_empty_training() {
        assert!(matches!(
            WordVectors::parse("1 50\nx 0.1\n", "emb", 200),
            Err(Error::Config(_))
        ));
        assert!(build_vocab(&[], &[], None).is_err());
    }

    #[test]
    fn vocab_json_round_trip_preserves_hash_and_lookup() {
        let s = sentence(&["a", "b", "c"], &["x", "y", "root"]);
        let vocab = build_vocab(&[s], &[], None).unwrap();
        let back = Vocabulary::from_json(&vocab.to_json().unwrap()).unwrap();
        assert_eq!(back.hash(), vocab.hash());
        assert_eq!(back.words.id("b"), vocab.words.id("b"));
    }

    #[test]
    fn validation_split_takes_tail() {
        let all: Vec<_> = (0..10)
            .map(|i| {
                let mut s = sentence(&["a", "b"], &["x", "root"]);
                s.id = i;
                s
            })
            .collect();
        let (train, val) = split_validation(all.clone(), 3, None).unwrap();
        assert_eq!(train.len(), 7);
        assert_eq!(val.iter().map(|s| s.id).collect::<Vec<_>>(), vec![7, 8, 9]);
        let ids: HashSet<u64> = [0, 5].into_iter().collect();
        let (train, val) = split_validation(all, 0, Some(&ids)).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(val.len(), 2);
    }

    fn arb_sentence() -> impl Strategy<Value = AnnotatedSentence> {
        (2usize..12)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec(any::<prop::sample::Index>(), n),
                    proptest::collection::vec("[a-z]{1,6}", n),
                    0..n,
                    0..n,
                    0usize..19,
                    any::<bool>(),
                )
            })
            .prop_filter("distinct entities", |(_, _, _, a, b, _, _)| a != b)
            .prop_map(|(n, parents, forms, e1, e2, label, augmented)| {
                // node i > 0 attaches to an earlier node: always a tree
                let heads = (0..n)
                    .map(|i| (i > 0).then(|| parents[i].index(i)))
                    .collect();
                AnnotatedSentence {
                    id: n as u64 * 31,
                    parse: DependencyParse {
                        tokens: forms
                            .iter()
                            .map(|f| Token {
                                form: f.clone(),
                                pos: f.to_uppercase(),
                            })
                            .collect(),
                        heads,
                        deprels: forms.iter().map(|f| format!("gr_{f}")).collect(),
                    },
                    hypernyms: forms.iter().map(|f| format!("noun.{f}")).collect(),
                    e1,
                    e2,
                    label: RelationLabel::from_id(label).unwrap(),
                    augmented,
                }
            })
    }

    proptest! {
        #[test]
        fn interchange_round_trip(sentences in proptest::collection::vec(arb_sentence(), 1..5)) {
            let text = write_interchange(&sentences);
            let back = read_interchange(&text, "mem").unwrap();
            prop_assert_eq!(back, sentences);
        }

        #[test]
        fn random_functional_graphs_with_cycles_are_rejected(
            parents in proptest::collection::vec(0usize..8, 2..8)
        ) {
            // Every node has an in-range head; with no root the graph is
            // a functional graph and necessarily contains a cycle.
            let n = parents.len();
            let heads: Vec<Option<usize>> = parents.iter().map(|&p| Some(p % n)).collect();
            let parse = DependencyParse {
                tokens: toks(&vec!["w"; n]),
                heads: heads.clone(),
                deprels: vec!["x".into(); n],
            };
            prop_assert!(parse.validate().is_err());

            // Rooting one node keeps a cycle whenever the root is not
            // reachable from every node; compare against brute force.
            let mut rooted = heads;
            rooted[0] = None;
            let reaches_root = (0..n).all(|start| {
                let mut cur = start;
                for _ in 0..=n {
                    match rooted[cur] {
                        None => return true,
                        Some(h) => cur = h,
                    }
                }
                false
            });
            let parse = DependencyParse { heads: rooted, ..parse };
            prop_assert_eq!(parse.validate().is_ok(), reaches_root);
        }
    }
}
