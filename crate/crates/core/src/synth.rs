//! Deterministic synthetic corpus in the SemEval layout.
//!
//! Every relation type owns two noun pools (one per argument role) and a set
//! of predicate phrasings per direction. Sentences follow three parse shapes
//! (subject-verb-object, subject-verb-preposition-object and a nominal
//! `X of Y` frame), sometimes with a compound modifier on an entity. `Other`
//! draws nouns from a neutral pool, with some hard negatives built from
//! relation nouns. Label frequencies approximate the benchmark training split.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{annotate, AnnotatedSentence, DependencyParse, HypernymLexicon, RawExample, Token};
use crate::error::Result;
use crate::label::{Direction, RelationLabel, RelationType, NUM_LABELS};

/// Label frequencies per 8000 sentences, in label-id order.
pub const LABEL_FREQUENCIES: [usize; NUM_LABELS] = [
    344, 659, // Cause-Effect
    471, 470, // Component-Whole
    374, 166, // Content-Container
    844, 1, // Entity-Destination
    568, 148, // Entity-Origin
    97, 407, // Instrument-Agency
    78, 612, // Member-Collection
    490, 144, // Message-Topic
    323, 394, // Product-Producer
    1410, // Other
];

struct TypeLexicon {
    first: [&'static str; 6],
    second: [&'static str; 6],
    first_tag: &'static str,
    second_tag: &'static str,
    forward: [(&'static str, Option<&'static str>); 3],
    backward: [(&'static str, Option<&'static str>); 3],
}

fn lexicon(ty: RelationType) -> TypeLexicon {
    use RelationType::*;
    match ty {
        CauseEffect => TypeLexicon {
            first: ["heat", "virus", "storm", "fire", "stress", "smoke"],
            second: ["damage", "fever", "flood", "panic", "fatigue", "cough"],
            first_tag: "noun.phenomenon",
            second_tag: "noun.state",
            forward: [("caused", None), ("triggered", None), ("led", Some("to"))],
            backward: [("resulted", Some("from")), ("came", Some("from")), ("followed", None)],
        },
        ComponentWhole => TypeLexicon {
            first: ["wheel", "handle", "engine", "keyboard", "roof", "blade"],
            second: ["car", "door", "truck", "laptop", "house", "knife"],
            first_tag: "noun.part",
            second_tag: "noun.artifact",
            forward: [("belongs", Some("to")), ("fits", Some("on")), ("attached", Some("to"))],
            backward: [("has", None), ("contains", None), ("includes", None)],
        },
        ContentContainer => TypeLexicon {
            first: ["water", "coins", "letters", "wine", "cookies", "tea"],
            second: ["bottle", "jar", "box", "barrel", "tin", "cup"],
            first_tag: "noun.substance",
            second_tag: "noun.container",
            forward: [("sat", Some("in")), ("stored", Some("in")), ("kept", Some("inside"))],
            backward: [("held", None), ("enclosed", None), ("carried", None)],
        },
        EntityDestination => TypeLexicon {
            first: ["ship", "marble", "parcel", "pig", "spoon", "coin"],
            second: ["harbor", "basket", "mailbox", "pen", "drawer", "vault"],
            first_tag: "noun.object",
            second_tag: "noun.location",
            forward: [("went", Some("into")), ("moved", Some("into")), ("sent", Some("to"))],
            backward: [("received", None), ("got", None), ("welcomed", None)],
        },
        EntityOrigin => TypeLexicon {
            first: ["juice", "wool", "silk", "oil", "flour", "sugar"],
            second: ["orange", "sheep", "worm", "olive", "wheat", "cane"],
            first_tag: "noun.food",
            second_tag: "noun.plant",
            forward: [("comes", Some("from")), ("made", Some("from")), ("derived", Some("from"))],
            backward: [("yields", None), ("gives", None), ("provides", None)],
        },
        InstrumentAgency => TypeLexicon {
            first: ["hammer", "pencil", "scalpel", "brush", "saw", "rifle"],
            second: ["carpenter", "writer", "surgeon", "painter", "logger", "hunter"],
            first_tag: "noun.artifact",
            second_tag: "noun.person",
            forward: [("used", Some("by")), ("wielded", Some("by")), ("handled", Some("by"))],
            backward: [("uses", None), ("wields", None), ("grabs", None)],
        },
        MemberCollection => TypeLexicon {
            first: ["tree", "soldier", "singer", "star", "player", "bird"],
            second: ["forest", "army", "choir", "galaxy", "team", "flock"],
            first_tag: "noun.object",
            second_tag: "noun.group",
            forward: [("belongs", Some("in")), ("stands", Some("in")), ("joined", None)],
            backward: [("gathers", None), ("comprises", None), ("counts", None)],
        },
        MessageTopic => TypeLexicon {
            first: ["report", "lecture", "article", "poem", "film", "speech"],
            second: ["economy", "history", "war", "love", "climate", "election"],
            first_tag: "noun.communication",
            second_tag: "noun.cognition",
            forward: [("discusses", None), ("describes", None), ("covers", None)],
            backward: [("featured", Some("in")), ("discussed", Some("in")), ("described", Some("in"))],
        },
        ProductProducer => TypeLexicon {
            first: ["bread", "software", "cheese", "furniture", "steel", "shoes"],
            second: ["baker", "programmer", "dairy", "factory", "mill", "cobbler"],
            first_tag: "noun.artifact",
            second_tag: "noun.group",
            forward: [("made", Some("by")), ("produced", Some("by")), ("created", Some("by"))],
            backward: [("makes", None), ("produces", None), ("creates", None)],
        },
    }
}

const NEUTRAL: [&str; 12] = [
    "man", "woman", "table", "stone", "idea", "city", "river", "night", "road", "window", "book", "child",
];
const OTHER_PREDICATES: [(&str, Option<&str>); 5] = [
    ("saw", None),
    ("was", Some("near")),
    ("met", None),
    ("stood", Some("beside")),
    ("looked", Some("at")),
];
const INTRANSITIVE: [&str; 4] = ["appeared", "remained", "changed", "vanished"];
const MODIFIERS: [&str; 6] = ["kitchen", "garden", "metal", "village", "summer", "plastic"];

/// A generated corpus: examples, position-aligned parses and the hypernym
/// lexicon covering every generated word.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub examples: Vec<RawExample>,
    pub parses: Vec<DependencyParse>,
    pub lexicon_entries: BTreeMap<String, String>,
}

/// Label counts for `n` sentences, proportional to [`LABEL_FREQUENCIES`]
/// with largest-remainder rounding.
pub fn label_counts(n: usize) -> [usize; NUM_LABELS] {
    let total: usize = LABEL_FREQUENCIES.iter().sum();
    let mut counts = [0usize; NUM_LABELS];
    let mut rema: Vec<(usize, usize)> = Vec::with_capacity(NUM_LABELS);
    for (i, &f) in LABEL_FREQUENCIES.iter().enumerate() {
        counts[i] = f * n / total;
        rema.push(((f * n) % total, i));
    }
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = n - counts.iter().sum::<usize>();
    for &(_, i) in rema.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

struct Builder {
    tokens: Vec<Token>,
    heads: Vec<Option<usize>>,
    deprels: Vec<String>,
}

impl Builder {
    fn push(&mut self, form: &str, pos: &str, head: Option<usize>, rel: &str) -> usize {
        self.tokens.push(Token {
            form: form.to_string(),
            pos: pos.to_string(),
        });
        self.heads.push(head);
        self.deprels.push(rel.to_string());
        self.tokens.len() - 1
    }

    fn set_head(&mut self, node: usize, head: usize, rel: &str) {
        self.heads[node] = Some(head);
        self.deprels[node] = rel.to_string();
    }

    /// Determiner, optional modifier and noun; the noun is left unattached.
    /// Returns the noun index and the token range of the entity mention.
    fn noun_phrase(&mut self, det: &str, modifier: Option<&str>, noun: &str) -> (usize, usize, usize) {
        let det_ix = self.push(det, "DT", None, "det");
        let start = self.tokens.len();
        let mod_ix = modifier.map(|m| self.push(m, "NN", None, "nn"));
        let n = self.push(noun, if noun.ends_with('s') { "NNS" } else { "NN" }, None, "");
        self.heads[det_ix] = Some(n);
        if let Some(m) = mod_ix {
            self.heads[m] = Some(n);
        }
        (n, start, n)
    }
}

/// Generate `n` sentences with ids starting at `first_id`.
pub fn generate(n: usize, seed: u64, first_id: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<RelationLabel> = label_counts(n)
        .iter()
        .enumerate()
        .flat_map(|(id, &c)| std::iter::repeat_n(RelationLabel::from_id(id).expect("label id"), c))
        .collect();
    labels.shuffle(&mut rng);

    let mut lexicon_entries = BTreeMap::new();
    for ty in RelationType::ALL {
        let lex = lexicon(ty);
        for w in lex.first {
            lexicon_entries.insert(w.to_string(), lex.first_tag.to_string());
        }
        for w in lex.second {
            lexicon_entries.insert(w.to_string(), lex.second_tag.to_string());
        }
        for (v, _) in lex.forward.iter().chain(&lex.backward) {
            lexicon_entries.insert(v.to_string(), format!("verb.{}", ty.name().to_lowercase()));
        }
    }
    for w in NEUTRAL {
        lexicon_entries.insert(w.to_string(), "noun.entity".to_string());
    }
    for (v, _) in OTHER_PREDICATES {
        lexicon_entries.entry(v.to_string()).or_insert_with(|| "verb.perception".to_string());
    }
    for v in INTRANSITIVE {
        lexicon_entries.insert(v.to_string(), "verb.change".to_string());
    }

    let mut examples = Vec::with_capacity(n);
    let mut parses = Vec::with_capacity(n);
    for (k, label) in labels.into_iter().enumerate() {
        let (e1_noun, e2_noun, predicate) = match label {
            RelationLabel::Directed(ty, dir) => {
                let lex = lexicon(ty);
                let a = *lex.first.choose(&mut rng).expect("pool");
                let b = *lex.second.choose(&mut rng).expect("pool");
                let pred = if rng.gen_bool(0.1) {
                    *OTHER_PREDICATES.choose(&mut rng).expect("pool")
                } else if dir == Direction::Forward {
                    *lex.forward.choose(&mut rng).expect("pool")
                } else {
                    *lex.backward.choose(&mut rng).expect("pool")
                };
                match dir {
                    Direction::Forward => (a, b, pred),
                    Direction::Backward => (b, a, pred),
                }
            }
            RelationLabel::Other => {
                let pick = |rng: &mut ChaCha8Rng| {
                    if rng.gen_bool(0.25) {
                        let lex = lexicon(*RelationType::ALL.choose(rng).expect("types"));
                        *if rng.gen_bool(0.5) { &lex.first } else { &lex.second }.choose(rng).expect("pool")
                    } else {
                        *NEUTRAL.choose(rng).expect("pool")
                    }
                };
                let a = pick(&mut rng);
                let mut b = pick(&mut rng);
                while b == a {
                    b = pick(&mut rng);
                }
                (a, b, *OTHER_PREDICATES.choose(&mut rng).expect("pool"))
            }
        };
        let mod1 = rng.gen_bool(0.15).then(|| *MODIFIERS.choose(&mut rng).expect("pool"));
        let mod2 = rng.gen_bool(0.15).then(|| *MODIFIERS.choose(&mut rng).expect("pool"));
        let nominal = rng.gen_bool(0.15);

        let mut b = Builder {
            tokens: Vec::new(),
            heads: Vec::new(),
            deprels: Vec::new(),
        };
        let (x, x_start, x_end) = b.noun_phrase("The", mod1, e1_noun);
        let (y, y_start, y_end);
        let root;
        if nominal {
            let of = b.push("of", "IN", Some(x), "prep");
            (y, y_start, y_end) = b.noun_phrase("the", mod2, e2_noun);
            b.set_head(y, of, "pobj");
            root = b.push(INTRANSITIVE.choose(&mut rng).expect("pool"), "VBD", None, "root");
            b.set_head(x, root, "nsubj");
        } else {
            let (verb, prep) = predicate;
            root = b.push(verb, "VBD", None, "root");
            b.set_head(x, root, "nsubj");
            match prep {
                Some(p) => {
                    let p = b.push(p, "IN", Some(root), "prep");
                    (y, y_start, y_end) = b.noun_phrase("the", mod2, e2_noun);
                    b.set_head(y, p, "pobj");
                }
                None => {
                    (y, y_start, y_end) = b.noun_phrase("the", mod2, e2_noun);
                    b.set_head(y, root, "dobj");
                }
            }
        }
        b.push(".", ".", Some(root), "punct");

        let mut text = String::new();
        for (i, t) in b.tokens.iter().enumerate() {
            if i > 0 && t.form != "." {
                text.push(' ');
            }
            if i == x_start {
                text.push_str("<e1>");
            }
            if i == y_start {
                text.push_str("<e2>");
            }
            text.push_str(&t.form);
            if i == x_end {
                text.push_str("</e1>");
            }
            if i == y_end {
                text.push_str("</e2>");
            }
        }
        examples.push(RawExample {
            id: first_id + k as u64,
            text,
            label,
            comment: None,
        });
        parses.push(DependencyParse::new(b.tokens, b.heads, b.deprels).expect("generated trees are valid"));
    }
    SynthCorpus {
        examples,
        parses,
        lexicon_entries,
    }
}

impl SynthCorpus {
    pub fn lexicon(&self) -> HypernymLexicon {
        let mut lex = HypernymLexicon::default();
        for (w, t) in &self.lexicon_entries {
            lex.insert(w.clone(), t.clone());
        }
        lex
    }

    pub fn annotate(&self) -> Result<Vec<AnnotatedSentence>> {
        annotate(&self.examples, &self.parses, &self.lexicon())
    }

    pub fn semeval_text(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            let _ = writeln!(out, "{}\t\"{}\"\n{}\nComment:\n", ex.id, ex.text, ex.label);
        }
        out
    }

    pub fn parses_text(&self) -> String {
        let mut out = String::new();
        for p in &self.parses {
            for (i, t) in p.tokens.iter().enumerate() {
                let head = p.heads[i].map_or(0, |h| h + 1);
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", i + 1, t.form, t.pos, head, p.deprels[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn hypernyms_text(&self) -> String {
        self.lexicon_entries
            .iter()
            .map(|(w, t)| format!("{w}\t{t}\n"))
            .collect()
    }
}
