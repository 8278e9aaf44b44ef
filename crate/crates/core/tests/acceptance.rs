//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::VecDeque;
use std::time::Instant;

use drnn::corpus::{build_vocab, AnnotatedSentence, DependencyParse, Token, Vocabulary, UNK};
use drnn::eval::{majority_label, score};
use drnn::label::{Direction, RelationLabel, RelationType};
use drnn::model::{checkpoint, forward, Mode, ModelConfig, ModelParams};
use drnn::sdp::{augment, augment_dataset, extract_sdp, lowest_common_ancestor, sdp_nodes, AugmentMode, SdpSample};
use drnn::synth;
use drnn::tensor::grad_check;
use drnn::train::{objective, objective_evaluation, predict, train, Dataset, DecodeStrategy, TrainConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn samples_of(sentences: &[AnnotatedSentence], vocab: &Vocabulary) -> Vec<SdpSample> {
    sentences.iter().map(|s| extract_sdp(s, vocab)).collect()
}

fn gradient_correctness() -> Outcome {
    let corpus = synth::generate(400, 17, 1).annotate().map_err(|e| e.to_string())?;
    let vocab = build_vocab(&corpus, &[], None).map_err(|e| e.to_string())?;
    let all = samples_of(&corpus, &vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let single = all
        .iter()
        .find(|s| s.left.len() == 1 || s.right.len() == 1)
        .ok_or("no sample with a length-1 sub-path")?
        .clone();
    let mut picked = vec![single];
    picked.extend(all.choose_multiple(&mut rng, 4).cloned());

    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for depth in 1..=4 {
        let config = ModelConfig {
            depth,
            ..ModelConfig::default()
        };
        let mut params = ModelParams::init(&config, vocab.sizes(), &mut rng).map_err(|e| e.to_string())?;
        for sample in &picked {
            let batch = std::slice::from_ref(sample);
            let (_, grads) = objective(batch, &params, &config, Mode::Eval, 0).map_err(|e| e.to_string())?;
            let analytic = params.flatten_gradients(&grads);
            let report = grad_check(
                &mut params,
                &analytic,
                |p| objective_evaluation(batch, p, &config),
                1e-5,
                60,
                &mut rng,
            )
            .map_err(|e| e.to_string())?;
            ensure(report.checked == 60, || format!("depth {depth}: only {} coordinates checked", report.checked))?;
            ensure(report.max_relative_error < 1e-4, || {
                format!(
                    "depth {depth}, sample {}: relative error {:.3e} at {:?}",
                    sample.id, report.max_relative_error, report.worst_index
                )
            })?;
            worst = worst.max(report.max_relative_error);
            checked += report.checked;
        }
    }
    Ok(format!("max relative error {worst:.2e} over {checked} coordinates, depths 1-4"))
}

fn overfit_oracle() -> Outcome {
    let corpus = synth::generate(200, 5, 1).annotate().map_err(|e| e.to_string())?;
    let subset: Vec<_> = corpus[..20].to_vec();
    let vocab = build_vocab(&subset, &[], None).map_err(|e| e.to_string())?;
    let samples = samples_of(&subset, &vocab);
    let config = TrainConfig {
        model: ModelConfig {
            depth: 2,
            ..ModelConfig::default()
        },
        batch_size: 5,
        learning_rate: 0.05,
        epochs: 500,
        seed: 3,
        augment: AugmentMode::None,
        decode: DecodeStrategy::ForwardOnly,
        stop_on_perfect_fit: true,
    };
    let params = ModelParams::init(&config.model, vocab.sizes(), &mut ChaCha8Rng::seed_from_u64(3))
        .map_err(|e| e.to_string())?;
    let dataset = Dataset {
        train: samples.clone(),
        validation: Vec::new(),
    };
    let outcome = train(&dataset, &config, params).map_err(|e| e.to_string())?;
    let last = outcome.report.epochs.last().ok_or("no epochs")?;
    let pred = predict(&samples, &outcome.params, &config.model, DecodeStrategy::ForwardOnly).map_err(|e| e.to_string())?;
    let hits = pred.iter().zip(&samples).filter(|(p, s)| **p == s.label).count();
    ensure(hits == samples.len(), || format!("{hits}/20 correct after {} epochs", last.epoch))?;
    Ok(format!("20/20 training accuracy at epoch {}", last.epoch))
}

fn augmentation_properties() -> Outcome {
    let corpus = synth::generate(8000, 1, 1).annotate().map_err(|e| e.to_string())?;
    let vocab = build_vocab(&corpus, &[], None).map_err(|e| e.to_string())?;
    let samples = samples_of(&corpus, &vocab);
    let d = samples.iter().filter(|s| s.label.is_directed()).count();
    let o = samples.len() - d;
    let out = augment_dataset(&samples, AugmentMode::DirectedOnly).map_err(|e| e.to_string())?;
    ensure(out.len() == 2 * d + o, || format!("{} samples, expected 2*{d}+{o}", out.len()))?;
    ensure(out[..samples.len()] == samples[..], || "originals not preserved".into())?;
    ensure(out.iter().filter(|s| s.augmented).all(|s| s.label.is_directed()), || {
        "an augmented sample carries Other".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let directed: Vec<usize> = (0..corpus.len()).filter(|&i| corpus[i].label.is_directed()).collect();
    for &i in directed.choose_multiple(&mut rng, 1000) {
        let s = &samples[i];
        let a = augment(s).ok_or("directed sample not augmented")?;
        ensure(a.label == s.label.inverse() && a.label != s.label, || format!("label of {} not inverted", s.id))?;
        ensure(a.left == s.right.reversed() && a.right == s.left.reversed(), || {
            format!("paths of {} not inverted", s.id)
        })?;
        ensure(a.inverse() == *s, || format!("inverting {} twice is not the identity", s.id))?;
        ensure(augment(&a).is_none(), || "augmented sample augmented again".into())?;
        ensure(extract_sdp(&corpus[i].swapped(), &vocab) == a, || {
            format!("swapping the entities of {} disagrees with path inversion", s.id)
        })?;
    }
    Ok(format!("{} = 2*{d} + {o}; 1000 involutions hold", out.len()))
}

fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> DependencyParse {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![None; n];
    for k in 1..n {
        heads[order[k]] = Some(order[rng.gen_range(0..k)]);
    }
    let tokens = (0..n)
        .map(|i| Token {
            form: format!("w{i}"),
            pos: "NN".into(),
        })
        .collect();
    DependencyParse::new(tokens, heads, vec!["dep".into(); n]).expect("random tree is valid")
}

fn bfs_path(parse: &DependencyParse, a: usize, b: usize) -> Vec<usize> {
    let n = parse.len();
    let mut adj = vec![Vec::new(); n];
    for (i, h) in parse.heads.iter().enumerate() {
        if let Some(h) = *h {
            adj[i].push(h);
            adj[h].push(i);
        }
    }
    let mut prev = vec![usize::MAX; n];
    prev[a] = a;
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

fn brute_lca(parse: &DependencyParse, a: usize, b: usize) -> usize {
    let ancestors = |mut x: usize| {
        let mut v = vec![x];
        while let Some(h) = parse.heads[x] {
            v.push(h);
            x = h;
        }
        v
    };
    let of_b = ancestors(b);
    ancestors(a).into_iter().find(|x| of_b.contains(x)).expect("shared root")
}

fn sdp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..1000 {
        let n = rng.gen_range(2..=30);
        let parse = random_tree(&mut rng, n);
        let e1 = rng.gen_range(0..n);
        let e2 = (e1 + rng.gen_range(1..n)) % n;
        let expected = bfs_path(&parse, e1, e2);
        let lca = brute_lca(&parse, e1, e2);

        let nodes = sdp_nodes(&parse, e1, e2);
        ensure(nodes.full_path() == expected, || format!("tree {trial}: path mismatch"))?;
        ensure(
            lowest_common_ancestor(&parse, e1, e2) == lca
                && nodes.left.last() == Some(&lca)
                && nodes.right.first() == Some(&lca),
            || format!("tree {trial}: split point is not the lowest common ancestor"),
        )?;

        let sentence = AnnotatedSentence {
            id: trial,
            hypernyms: vec![UNK.into(); n],
            parse,
            e1,
            e2,
            label: RelationLabel::Other,
            augmented: false,
        };
        let vocab = build_vocab(std::slice::from_ref(&sentence), &[], None).map_err(|e| e.to_string())?;
        let sample = extract_sdp(&sentence, &vocab);
        let words = |ids: &[usize]| ids.iter().map(|&i| vocab.words.token(i).unwrap().to_string()).collect::<Vec<_>>();
        let forms = |ix: &[usize]| ix.iter().map(|i| format!("w{i}")).collect::<Vec<_>>();
        ensure(
            words(&sample.left.words) == forms(&nodes.left) && words(&sample.right.words) == forms(&nodes.right),
            || format!("tree {trial}: extracted words disagree with the node path"),
        )?;
    }
    Ok("1000 random trees match BFS paths and brute-force ancestors".into())
}

fn scorer_fixture() -> Outcome {
    use RelationType::*;
    let f = |ty, fwd: bool| RelationLabel::Directed(ty, if fwd { Direction::Forward } else { Direction::Backward });
    let o = RelationLabel::Other;
    let pairs = [
        (f(CauseEffect, true), f(CauseEffect, true)),
        (f(CauseEffect, true), f(CauseEffect, true)),
        (f(CauseEffect, true), f(CauseEffect, false)),
        (f(CauseEffect, false), f(CauseEffect, false)),
        (f(CauseEffect, false), o),
        (f(ComponentWhole, true), f(ComponentWhole, true)),
        (f(ComponentWhole, true), f(ComponentWhole, true)),
        (f(ComponentWhole, false), f(MessageTopic, true)),
        (f(ComponentWhole, false), f(ComponentWhole, false)),
        (f(MessageTopic, true), f(MessageTopic, true)),
        (f(MessageTopic, true), f(MessageTopic, true)),
        (f(MessageTopic, false), f(MessageTopic, false)),
        (f(MessageTopic, false), o),
        (o, o),
        (o, o),
        (o, f(CauseEffect, true)),
        (o, f(ComponentWhole, false)),
        (o, o),
        (f(EntityDestination, true), f(EntityDestination, true)),
        (f(EntityDestination, true), o),
    ];
    let (gold, pred): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
    let r = score(&gold, &pred).map_err(|e| e.to_string())?;
    // (type, tp, fp, fn, P, R, F1), tallied by hand
    let expected = [
        (CauseEffect, 3, 2, 2, "60.00", "60.00", "60.00"),
        (ComponentWhole, 3, 1, 1, "75.00", "75.00", "75.00"),
        (ContentContainer, 0, 0, 0, "0.00", "0.00", "0.00"),
        (EntityDestination, 1, 0, 1, "100.00", "50.00", "66.67"),
        (EntityOrigin, 0, 0, 0, "0.00", "0.00", "0.00"),
        (InstrumentAgency, 0, 0, 0, "0.00", "0.00", "0.00"),
        (MemberCollection, 0, 0, 0, "0.00", "0.00", "0.00"),
        (MessageTopic, 3, 1, 1, "75.00", "75.00", "75.00"),
        (ProductProducer, 0, 0, 0, "0.00", "0.00", "0.00"),
    ];
    for (ty, tp, fp, fn_, p, rc, f1) in expected {
        let t = &r.per_type[ty.index()];
        let got = (t.tp, t.fp, t.fn_, format!("{:.2}", t.precision), format!("{:.2}", t.recall), format!("{:.2}", t.f1));
        let want = (tp, fp, fn_, p.to_string(), rc.to_string(), f1.to_string());
        ensure(got == want, || format!("{}: got {got:?}, expected {want:?}", ty.name()))?;
    }
    ensure(format!("{:.2}", r.macro_f1) == "30.74", || format!("macro-F1 {:.2}, expected 30.74", r.macro_f1))?;
    ensure(format!("{:.2}", r.accuracy) == "65.00", || format!("accuracy {:.2}, expected 65.00", r.accuracy))?;

    let all: Vec<_> = RelationLabel::all().collect();
    let perfect = score(&all, &all).map_err(|e| e.to_string())?;
    ensure(format!("{:.2}", perfect.macro_f1) == "100.00", || "perfect prediction is not 100".into())?;
    let flipped: Vec<_> = all.iter().map(|l| l.inverse()).collect();
    let flip = score(&all, &flipped).map_err(|e| e.to_string())?;
    ensure(flip.per_type.iter().all(|t| t.tp == 0 && t.f1 == 0.0), || "direction flips earn credit".into())?;
    Ok("20-example fixture, perfect and flipped cases reproduce exactly".into())
}

fn pool_counts() -> Outcome {
    let corpus = synth::generate(30, 8, 1).annotate().map_err(|e| e.to_string())?;
    let vocab = build_vocab(&corpus, &[], None).map_err(|e| e.to_string())?;
    let sample = extract_sdp(&corpus[0], &vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for depth in 1..=6 {
        let config = ModelConfig {
            depth,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&config, vocab.sizes(), &mut rng).map_err(|e| e.to_string())?;
        let trace = forward(&sample, &params, &config, Mode::Eval, 0).map_err(|e| e.to_string())?;
        let pools: usize = trace.chains.iter().map(|c| c.pools.len()).sum();
        ensure(pools == 8 * (depth + 1) && trace.pool_count() == pools, || format!("depth {depth}: {pools} pools"))?;
        ensure(trace.concat.len() == 2 * (depth + 1) * 350, || {
            format!("depth {depth}: concatenation has length {}", trace.concat.len())
        })?;
        if depth == 4 {
            ensure(pools == 40, || "depth 4 does not have 40 pools".into())?;
        }
    }
    Ok("8(depth+1) pools and 2(depth+1)*350 features for depths 1-6; 40 pools at depth 4".into())
}

struct SmokeRun {
    checkpoint: Vec<u8>,
    report: drnn::eval::ScoreReport,
    baseline: drnn::eval::ScoreReport,
}

fn smoke_run() -> Result<SmokeRun, String> {
    let corpus = synth::generate(700, 42, 1).annotate().map_err(|e| e.to_string())?;
    let (train_s, val_s) = corpus.split_at(500);
    let vocab = build_vocab(train_s, val_s, None).map_err(|e| e.to_string())?;
    let dataset = Dataset {
        train: samples_of(train_s, &vocab),
        validation: samples_of(val_s, &vocab),
    };
    let config = TrainConfig {
        model: ModelConfig {
            depth: 2,
            word_dim: 50,
            ..ModelConfig::default()
        },
        epochs: 10,
        ..TrainConfig::default()
    };
    let params = ModelParams::init(&config.model, vocab.sizes(), &mut ChaCha8Rng::seed_from_u64(config.seed))
        .map_err(|e| e.to_string())?;
    let outcome = train(&dataset, &config, params).map_err(|e| e.to_string())?;
    let gold: Vec<_> = dataset.validation.iter().map(|s| s.label).collect();
    let pred = predict(&dataset.validation, &outcome.params, &config.model, config.decode).map_err(|e| e.to_string())?;
    let report = score(&gold, &pred).map_err(|e| e.to_string())?;

    let directed: Vec<_> = dataset.train.iter().map(|s| s.label).filter(|l| l.is_directed()).collect();
    let majority = majority_label(&directed);
    let baseline = score(&gold, &vec![majority; gold.len()]).map_err(|e| e.to_string())?;
    let checkpoint = checkpoint::encode(&config.model, &vocab, &outcome.params).map_err(|e| e.to_string())?;
    Ok(SmokeRun {
        checkpoint,
        report,
        baseline,
    })
}

fn smoke_criterion(run: &Result<SmokeRun, String>) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    ensure(run.report.macro_f1 > run.baseline.macro_f1, || {
        format!(
            "validation macro-F1 {:.2} does not exceed the majority baseline {:.2}",
            run.report.macro_f1, run.baseline.macro_f1
        )
    })?;
    Ok(format!(
        "validation macro-F1 {:.2} > majority directed-class baseline {:.2}",
        run.report.macro_f1, run.baseline.macro_f1
    ))
}

fn determinism(a: &Result<SmokeRun, String>, b: &Result<SmokeRun, String>) -> Outcome {
    let a = a.as_ref().map_err(Clone::clone)?;
    let b = b.as_ref().map_err(Clone::clone)?;
    ensure(a.checkpoint == b.checkpoint, || "checkpoints differ".into())?;
    ensure(a.report == b.report, || "score reports differ".into())?;
    Ok(format!("two seeded runs agree bit for bit ({} checkpoint bytes)", a.checkpoint.len()))
}

fn main() {
    let start = Instant::now();
    let timed = |f: fn() -> Outcome| {
        let t = Instant::now();
        let r = f();
        (r, t.elapsed().as_secs_f64())
    };
    let (c1, c2, c3, c4, c5, c6, (smoke_a, smoke_b, t78)) = std::thread::scope(|s| {
        let h1 = s.spawn(|| timed(gradient_correctness));
        let h2 = s.spawn(|| timed(overfit_oracle));
        let h3 = s.spawn(|| timed(augmentation_properties));
        let h4 = s.spawn(|| timed(sdp_oracle));
        let h5 = s.spawn(|| timed(scorer_fixture));
        let h6 = s.spawn(|| timed(pool_counts));
        let h7 = s.spawn(|| {
            let t = Instant::now();
            let a = smoke_run();
            let b = smoke_run();
            (a, b, t.elapsed().as_secs_f64())
        });
        (
            h1.join().unwrap(),
            h2.join().unwrap(),
            h3.join().unwrap(),
            h4.join().unwrap(),
            h5.join().unwrap(),
            h6.join().unwrap(),
            h7.join().unwrap(),
        )
    });
    let results = [
        ("gradient correctness", c1.0, c1.1),
        ("overfit oracle", c2.0, c2.1),
        ("augmentation properties", c3.0, c3.1),
        ("SDP oracle equivalence", c4.0, c4.1),
        ("scorer fixture", c5.0, c5.1),
        ("pool counts and shapes", c6.0, c6.1),
        ("smoke training run", smoke_criterion(&smoke_a), t78),
        ("determinism", determinism(&smoke_a, &smoke_b), t78),
    ];
    let mut failed = 0;
    for (i, (name, result, secs)) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
