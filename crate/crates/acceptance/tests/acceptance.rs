//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use patsig_core::corpus::{build_vocabulary, detect_bigrams, preprocess, tokenize};
use patsig_core::embedding::{
    embed_document, fit_tfidf, sgns_gradients, sgns_loss, train_sgns, vectorize_corpus, Signer,
};
use patsig_core::eval::{
    classification_experiment, relational_report, sample_condition_pairs, Condition, MlpClassifier, MlpConfig,
};
use patsig_core::indicators::{compute_country_flows, compute_indicators, FlowOptions};
use patsig_core::similarity::{build_similarity_graph, cosine_slices, read_edges, SimilarityEdge};
use patsig_core::synth::{labeled_blobs, synthetic_corpus_with_topics, unit_gaussian_store, CorpusSpec};
use patsig_core::{
    brute_force_knn, BigramTable, DocumentVector, EmbeddingMatrix, ForestParams, NormFlag, RpForest, SgnsParams,
    SimilarityGraph, TemporalParams, TfIdfModel, VectorStore, Vocabulary,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn queries(n: usize, dim: usize, seed: u64) -> Vec<DocumentVector> {
    let s = unit_gaussian_store(n, dim, seed);
    (0..n).map(|i| DocumentVector { id: format!("q{i}"), values: s.vector(i).to_vec(), norm: NormFlag::Unit }).collect()
}

fn mean_recall(forest: &RpForest, store: &VectorStore, qs: &[DocumentVector], breadth: Option<usize>) -> f64 {
    let mut total = 0.0;
    for q in qs {
        let exact: HashSet<String> = brute_force_knn(store, q, 10).unwrap().ids().map(str::to_string).collect();
        let approx = forest.query(q, 10, breadth).unwrap();
        total += approx.ids().filter(|id| exact.contains(*id)).count() as f64 / 10.0;
    }
    total / qs.len() as f64
}

struct AnnFixture {
    store: VectorStore,
    forest: RpForest,
    queries: Vec<DocumentVector>,
}

fn ann_fixture() -> AnnFixture {
    let store = unit_gaussian_store(20_000, 64, 101);
    let forest = RpForest::build(&store, &ForestParams::default()).unwrap();
    AnnFixture { store, forest, queries: queries(100, 64, 202) }
}

fn c1_recall(f: &AnnFixture) -> Outcome {
    let base = f.forest.default_breadth(10);
    let r1 = mean_recall(&f.forest, &f.store, &f.queries, None);
    let r4 = mean_recall(&f.forest, &f.store, &f.queries, Some(4 * base));
    // context only: the same index settings on clustered data
    let (blobs, _) = labeled_blobs(20_000, 200, 64, 0.08, 5);
    let mut clustered = VectorStore::new(64);
    for (i, v) in blobs.iter().enumerate() {
        clustered.push_slice(format!("b{i}"), NormFlag::Unit, v).unwrap();
    }
    let cf = RpForest::build(&clustered, &ForestParams::default()).unwrap();
    let cq: Vec<DocumentVector> = (0..100).map(|i| clustered.get(i * 197)).collect();
    let rc = mean_recall(&cf, &clustered, &cq, None);
    println!("note  #1 context (not gating): clustered blobs, same settings, recall@10 {rc:.3}");
    check(
        r1 >= 0.90 && r4 >= 0.98,
        format!(
            "isotropic D=64, 20k items: recall@10 {r1:.3} at breadth {base} (need 0.90), {r4:.3} at x4 (need 0.98)"
        ),
    )
}

fn c2_latency(f: &AnnFixture) -> Outcome {
    for q in f.queries.iter().take(10) {
        f.forest.query(q, 10, None).unwrap();
    }
    let t = Instant::now();
    for q in &f.queries {
        std::hint::black_box(f.forest.query(q, 10, None).unwrap());
    }
    let ann = t.elapsed().as_secs_f64() * 1e3 / f.queries.len() as f64;
    let t = Instant::now();
    for q in &f.queries {
        std::hint::black_box(brute_force_knn(&f.store, q, 10).unwrap());
    }
    let brute = t.elapsed().as_secs_f64() * 1e3 / f.queries.len() as f64;
    check(
        ann < 5.0,
        format!("mean k=10 query {ann:.3} ms (need < 5), exhaustive {brute:.3} ms, speedup x{:.1}", brute / ann),
    )
}

/// Embedding with hand-set rows for the terms of `vocab`.
fn fixed_embedding(vocab: &Vocabulary, rows: &[Vec<f32>]) -> EmbeddingMatrix {
    let mut store = VectorStore::new(rows[0].len());
    for (t, r) in vocab.terms().iter().zip(rows) {
        store.push_slice(t.clone(), NormFlag::Raw, r).unwrap();
    }
    EmbeddingMatrix::from_store(&store, SgnsParams { dim: rows[0].len(), ..SgnsParams::default() }).unwrap()
}

fn c3_document_oracle() -> Outcome {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let docs = vec![s(&["a", "a", "b"]), s(&["a"]), s(&[])];
    let vocab = build_vocabulary(&docs, 1).unwrap();
    let encoded: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(d)).collect();
    let tfidf = fit_tfidf(&encoded, &vocab).unwrap();
    let rows: Vec<Vec<f32>> =
        vocab.terms().iter().map(|t| if t == "a" { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
    let emb = fixed_embedding(&vocab, &rows);
    let v = embed_document("d", &encoded[0], &emb, &tfidf).unwrap();
    let (x, y) = (2.0 * 1.5f64.ln(), 3.0f64.ln());
    let n = (x * x + y * y).sqrt();
    let hand_err = ((v.values[0] as f64 - x / n).abs()).max((v.values[1] as f64 - y / n).abs());
    if hand_err > 1e-6 {
        return Err(format!("hand example off by {hand_err:.2e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst_scale = 0.0f64;
    for case in 0..1000 {
        let terms = rng.random_range(2..9);
        let dim = rng.random_range(2..7);
        let docs: Vec<Vec<String>> = (0..rng.random_range(2..7))
            .map(|_| (0..rng.random_range(1..12)).map(|_| format!("t{}", rng.random_range(0..terms))).collect())
            .collect();
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let encoded: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(d)).collect();
        let tfidf = fit_tfidf(&encoded, &vocab).unwrap();
        let rows: Vec<Vec<f32>> =
            (0..vocab.len()).map(|_| (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect();
        let emb = fixed_embedding(&vocab, &rows);
        let c = rng.random_range(0.01..100.0);
        let scaled_weights: Vec<f64> = (0..vocab.len() as u32).map(|i| tfidf.idf(i).unwrap() * c).collect();
        let scaled = tfidf.with_weights(scaled_weights).unwrap();
        for (d, doc) in encoded.iter().enumerate() {
            let base = embed_document("x", doc, &emb, &tfidf).unwrap();
            let mut shuffled = doc.clone();
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            let perm = embed_document("x", &shuffled, &emb, &tfidf).unwrap();
            if perm.values != base.values {
                return Err(format!("case {case} doc {d}: token order changed the signature"));
            }
            let sv = embed_document("x", doc, &emb, &scaled).unwrap();
            if sv.is_sentinel() != base.is_sentinel() {
                return Err(format!("case {case} doc {d}: idf scaling changed sentinel status"));
            }
            for (a, b) in sv.values.iter().zip(&base.values) {
                worst_scale = worst_scale.max((a - b).abs() as f64);
            }
            if sv.values.iter().any(|x| !x.is_finite()) {
                return Err(format!("case {case} doc {d}: non-finite output"));
            }
        }
    }
    check(
        worst_scale <= 1e-6,
        format!("hand example error {hand_err:.1e}; 1000 corpora: order-invariant, idf x c changes output by <= {worst_scale:.1e}"),
    )
}

fn edge(src: &str, dst: &str, score: f64) -> SimilarityEdge {
    SimilarityEdge { src: src.into(), dst: dst.into(), score }
}

fn c4_indicators() -> Outcome {
    let params = TemporalParams::default();
    let years: HashMap<String, f64> =
        [("i", 2000.0), ("j1", 2003.0), ("j2", 1998.0), ("j3", 2002.0)].map(|(k, v)| (k.to_string(), v)).into();
    let g =
        SimilarityGraph::from_edges(vec![edge("i", "j1", 0.8), edge("i", "j2", 0.7), edge("i", "j3", 0.9)], 100, 0.65)
            .unwrap();
    let r = &compute_indicators(&g, &years, &params).unwrap()[0];
    let err = (r.sim_total - 0.8).abs().max((r.sim_past - 0.7 / 3.0).abs()).max((r.sim_future - 1.7 / 3.0).abs());
    if r.m != 3 || err > 1e-12 {
        return Err(format!("worked example: m {} error {err:.2e}", r.m));
    }
    // one neighbor at each boundary offset
    let mut bounds = Vec::new();
    for (dt, past, future) in [(1.0, 0.0, 0.0), (5.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (-5.0, 1.0, 0.0), (6.0, 0.0, 0.0)] {
        let years: HashMap<String, f64> = [("i".to_string(), 2000.0), ("j".to_string(), 2000.0 + dt)].into();
        let g = SimilarityGraph::from_edges(vec![edge("i", "j", 1.0)], 100, 0.65).unwrap();
        let r = &compute_indicators(&g, &years, &params).unwrap()[0];
        if r.sim_past != past || r.sim_future != future {
            return Err(format!("dt {dt}: past {} future {}", r.sim_past, r.sim_future));
        }
        bounds.push(format!("{dt:+}"));
    }
    Ok(format!("worked example error {err:.1e}; boundaries {} per the strict/inclusive windows", bounds.join(" ")))
}

fn c5_flow_conservation() -> Outcome {
    let countries = ["CN", "DE", "FR", "JP", "KR", "US"];
    let params = TemporalParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0f64;
    let mut qualifying = 0usize;
    for _ in 0..1000 {
        let n = rng.random_range(2..30);
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let mut years = HashMap::new();
        let mut shares = HashMap::new();
        for id in &ids {
            years.insert(id.clone(), rng.random_range(1990..2011) as f64);
            let k = rng.random_range(1..4);
            let mut map = BTreeMap::new();
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            for r in raw {
                *map.entry(countries[rng.random_range(0..countries.len())].to_string()).or_insert(0.0) += r / sum;
            }
            shares.insert(id.clone(), map);
        }
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        for _ in 0..rng.random_range(0..4 * n) {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b && seen.insert((a, b)) {
                edges.push(edge(&ids[a], &ids[b], rng.random_range(0.65..=1.0)));
            }
        }
        let oracle: f64 = edges
            .iter()
            .filter(|e| params.is_future(years[&e.dst] - years[&e.src]))
            .map(|e| e.score * shares[&e.src].values().sum::<f64>() * shares[&e.dst].values().sum::<f64>())
            .sum();
        let g = SimilarityGraph::from_edges(edges, 100, 0.65).unwrap();
        let report = compute_country_flows(&g, &years, &shares, &params, &FlowOptions::default()).unwrap();
        qualifying += report.qualifying_edges;
        worst = worst.max((report.matrix.total() - oracle).abs());
    }
    check(worst <= 1e-9, format!("1000 random graphs, {qualifying} qualifying edges, max |sum F - sum s| {worst:.1e}"))
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-7)
}

fn slot(m: &mut MlpClassifier, l: usize, p: usize) -> &mut f64 {
    let nw = m.layers[l].weights.len();
    if p < nw {
        &mut m.layers[l].weights[p]
    } else {
        &mut m.layers[l].bias[p - nw]
    }
}

fn c6_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let eps = 1e-6;
    let mut sgns_worst = 0.0f64;
    for _ in 0..20 {
        let d = 8;
        let mut vecs: Vec<Vec<f64>> = (0..7).map(|_| (0..d).map(|_| rng.random_range(-0.8..0.8)).collect()).collect();
        let loss = |v: &[Vec<f64>]| {
            let negs: Vec<&[f64]> = v[2..].iter().map(Vec::as_slice).collect();
            sgns_loss(&v[0], &v[1], &negs)
        };
        let negs: Vec<&[f64]> = vecs[2..].iter().map(Vec::as_slice).collect();
        let (gc, gx, gn) = sgns_gradients(&vecs[0], &vecs[1], &negs);
        let mut analytic = vec![gc, gx];
        analytic.extend(gn);
        for v in 0..vecs.len() {
            for i in 0..d {
                let orig = vecs[v][i];
                vecs[v][i] = orig + eps;
                let up = loss(&vecs);
                vecs[v][i] = orig - eps;
                let down = loss(&vecs);
                vecs[v][i] = orig;
                sgns_worst = sgns_worst.max(rel_err(analytic[v][i], (up - down) / (2.0 * eps)));
            }
        }
    }

    let config = MlpConfig { hidden: vec![9, 7, 5], seed: 6, ..MlpConfig::default() };
    let mut model = MlpClassifier::new(6, 4, &config).unwrap();
    for l in &mut model.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
    }
    let x: Vec<f64> = (0..8 * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<usize> = (0..8).map(|i| i % 4).collect();
    let (_, grads) = model.loss_and_gradients(&x, &y);
    let mut mlp_worst = 0.0f64;
    for (l, grad) in grads.iter().enumerate() {
        let nw = grad.weights.len();
        for p in 0..nw + grad.bias.len() {
            let orig = *slot(&mut model, l, p);
            *slot(&mut model, l, p) = orig + eps;
            let up = model.loss_and_gradients(&x, &y).0;
            *slot(&mut model, l, p) = orig - eps;
            let down = model.loss_and_gradients(&x, &y).0;
            *slot(&mut model, l, p) = orig;
            let a = if p < nw { grad.weights[p] } else { grad.bias[p - nw] };
            mlp_worst = mlp_worst.max(rel_err(a, (up - down) / (2.0 * eps)));
        }
    }
    check(
        sgns_worst < 1e-4 && mlp_worst < 1e-4,
        format!("max relative error: sgns {sgns_worst:.1e}, mlp {mlp_worst:.1e} (need < 1e-4)"),
    )
}

fn c7_classification() -> Outcome {
    let (data, labels) = labeled_blobs(5000, 10, 32, 0.1, 77);
    let refs: Vec<&[f32]> = data.iter().map(Vec::as_slice).collect();
    let config = MlpConfig::default();
    let real = classification_experiment(&refs, &labels, 10, 0.1, false, &config).map_err(|e| e.to_string())?;
    let fake = classification_experiment(&refs, &labels, 10, 0.1, true, &config).map_err(|e| e.to_string())?;
    let (r, p) = (real.metrics.weighted_f1, fake.metrics.weighted_f1);
    check(
        r >= 0.90 && p <= 0.05,
        format!(
            "5000 vectors, 10 classes, {} held out: weighted F1 {r:.3} true labels, {p:.3} placebo",
            real.test_size
        ),
    )
}

struct Trained {
    records: Vec<patsig_core::PatentRecord>,
    bigrams: BigramTable,
    vocab: Vocabulary,
    embedding: EmbeddingMatrix,
    tfidf: TfIdfModel,
    store: VectorStore,
}

fn train_synthetic() -> Trained {
    let (records, _) = synthetic_corpus_with_topics(&CorpusSpec { records: 2000, seed: 88, ..CorpusSpec::default() });
    let raw: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.abstract_text)).collect();
    let bigrams = detect_bigrams(&raw, 500);
    let docs = preprocess(&records, &bigrams);
    let vocab = build_vocabulary(&docs, 5).unwrap();
    let encoded: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(d)).collect();
    let params = SgnsParams { dim: 48, epochs: 3, ..SgnsParams::default() };
    let embedding = train_sgns(&encoded, &vocab, &params).unwrap();
    let tfidf = fit_tfidf(&encoded, &vocab).unwrap();
    let signer = Signer { bigrams: &bigrams, vocab: &vocab, embedding: &embedding, tfidf: &tfidf };
    let store = vectorize_corpus(&records, &signer).unwrap();
    Trained { records, bigrams, vocab, embedding, tfidf, store }
}

fn c8_relational(t: &Trained) -> Outcome {
    let mut samples = Vec::new();
    for c in Condition::ALL {
        samples.push(sample_condition_pairs(&t.records, &t.store, c, 2000, 8).map_err(|e| format!("{c}: {e}"))?);
    }
    let rows = relational_report(&samples).map_err(|e| e.to_string())?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.reversed || r.p >= 0.01)
        .map(|r| format!("{} ({:.3} vs {:.3}, p {:.1e})", r.condition, r.shared, r.not_shared, r.p))
        .collect();
    let weakest = rows.iter().map(|r| r.p).fold(0.0, f64::max);
    let gap = rows.iter().map(|r| r.shared - r.not_shared).fold(f64::INFINITY, f64::min);
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} conditions, all shared > random, smallest gap {gap:.3}, largest p {weakest:.1e}", rows.len())
        } else {
            format!("failing rows: {}", bad.join(", "))
        },
    )
}

fn verify_edges(edges: &[SimilarityEdge], store: &VectorStore, threshold: f64) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for e in edges {
        if e.score < threshold {
            return Err(format!("edge {} -> {} scores {} below {threshold}", e.src, e.dst, e.score));
        }
        let (a, b) = (store.position(&e.src), store.position(&e.dst));
        let (Some(a), Some(b)) = (a, b) else {
            return Err(format!("edge {} -> {} names an unknown patent", e.src, e.dst));
        };
        worst = worst.max((cosine_slices(store.vector(a), store.vector(b)) - e.score).abs());
    }
    if worst > 1e-6 {
        return Err(format!("stored score differs from recomputed cosine by {worst:.1e}"));
    }
    Ok(worst)
}

fn c9_threshold(t: &Trained, pipeline_dir: &Path) -> Outcome {
    let forest = RpForest::build(&t.store, &ForestParams::default()).unwrap();
    let graph = build_similarity_graph(&forest, &t.store, 100, 0.65, None).unwrap();
    let mut buf = Vec::new();
    graph.write_tsv(&mut buf).unwrap();
    let lib_edges = read_edges(&buf[..]).unwrap();
    let w1 = verify_edges(&lib_edges, &t.store, 0.65)?;
    let file = std::fs::File::open(pipeline_dir.join("edges.tsv")).map_err(|e| e.to_string())?;
    let cli_edges = read_edges(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
    let store = VectorStore::load(&pipeline_dir.join("vectors.psv")).map_err(|e| e.to_string())?;
    let w2 = verify_edges(&cli_edges, &store, 0.65)?;
    Ok(format!(
        "{} + {} edges scanned, none below 0.65, max re-verification error {:.1e}",
        lib_edges.len(),
        cli_edges.len(),
        w1.max(w2)
    ))
}

fn c10_persistence(t: &Trained) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |n: &str| dir.path().join(n);
    t.store.save(&p("v.psv")).unwrap();
    let store = VectorStore::load(&p("v.psv")).unwrap();
    if store.to_bytes() != t.store.to_bytes() {
        return Err("vector store changed across save/load".into());
    }
    let forest = RpForest::build(&store, &ForestParams::default()).unwrap();
    forest.save(&p("a.rpf")).unwrap();
    forest.save(&p("b.rpf")).unwrap();
    if std::fs::read(p("a.rpf")).unwrap() != std::fs::read(p("b.rpf")).unwrap() {
        return Err("repeated index saves differ".into());
    }
    let loaded = RpForest::load(&p("a.rpf")).unwrap();
    if loaded.to_bytes() != forest.to_bytes() {
        return Err("index bytes changed across save/load".into());
    }

    std::fs::write(p("vocab.tsv"), {
        let mut b = Vec::new();
        t.vocab.write_tsv(&mut b).unwrap();
        b
    })
    .unwrap();
    let mut tf = Vec::new();
    t.tfidf.write_tsv(&mut tf).unwrap();
    let mut bg = Vec::new();
    t.bigrams.write_tsv(&mut bg).unwrap();
    t.embedding.to_store().save(&p("emb.psv")).unwrap();
    let vocab = Vocabulary::read_tsv(std::io::BufReader::new(std::fs::File::open(p("vocab.tsv")).unwrap())).unwrap();
    let tfidf = TfIdfModel::read_tsv(&tf[..]).unwrap();
    let bigrams = BigramTable::read_tsv(&bg[..], 500).unwrap();
    let embedding =
        EmbeddingMatrix::from_store(&VectorStore::load(&p("emb.psv")).unwrap(), t.embedding.params().clone()).unwrap();
    let before = Signer { bigrams: &t.bigrams, vocab: &t.vocab, embedding: &t.embedding, tfidf: &t.tfidf };
    let after = Signer { bigrams: &bigrams, vocab: &vocab, embedding: &embedding, tfidf: &tfidf };
    let mut compared = 0;
    for r in t.records.iter().step_by(20) {
        let a = before.sign(&r.id, &r.abstract_text).unwrap();
        let b = after.sign(&r.id, &r.abstract_text).unwrap();
        if a != b {
            return Err(format!("signature of {} changed after reloading models", r.id));
        }
        let qa = forest.query(&a, 10, None).unwrap();
        let qb = loaded.query(&b, 10, None).unwrap();
        if qa.neighbors != qb.neighbors {
            return Err(format!("query for {} differs on the reloaded index", r.id));
        }
        compared += 1;
    }
    Ok(format!("store, index and model files reload byte-equal; {compared} queries identical; index saves stable"))
}

/// Builds the `patsig` binary (a no-op when it is current) and returns its path.
fn cli_binary() -> Result<PathBuf, String> {
    let mut cmd = Command::new(env!("CARGO"));
    cmd.args(["build", "-p", "patsig-cli", "--bin", "patsig", "--message-format=json-render-diagnostics"]);
    if !cfg!(debug_assertions) {
        cmd.arg("--release");
    }
    let out = cmd.output().map_err(|e| format!("cargo build: {e}"))?;
    if !out.status.success() {
        return Err(format!("cargo build failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .filter(|m| m["reason"] == "compiler-artifact" && m["target"]["name"] == "patsig")
        .find_map(|m| m["executable"].as_str().map(PathBuf::from))
        .ok_or_else(|| "cargo build reported no patsig executable".to_string())
}
const STAGES: [&str; 10] = [
    "ingest",
    "train",
    "vectorize",
    "index",
    "edges",
    "indicators",
    "flows",
    "eval-classify",
    "eval-relational",
    "eval-classify",
];

fn run_pipeline(bin: &Path, dir: &Path) -> Result<(), String> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures/corpus_1000.jsonl");
    for (i, stage) in STAGES.iter().enumerate() {
        let mut cmd = Command::new(bin);
        cmd.arg("--deterministic").arg("--dir").arg(dir).arg(stage);
        if *stage == "ingest" {
            cmd.arg("--input").arg(&fixture);
        }
        if i == STAGES.len() - 1 {
            cmd.arg("--placebo");
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{stage}: {}", String::from_utf8_lossy(&out.stderr).trim()));
        }
    }
    Ok(())
}

fn c11_determinism(a: &Path, b: &Path) -> Outcome {
    let bin = cli_binary()?;
    run_pipeline(&bin, a)?;
    run_pipeline(&bin, b)?;
    let mut names: Vec<PathBuf> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    let mut differing = Vec::new();
    for p in &names {
        let name = p.file_name().unwrap();
        if std::fs::read(p).ok() != std::fs::read(b.join(name)).ok() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across two default-config runs", names.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag}  #{id} {name}: {detail} [{secs:.1}s]");
        results.push((id, name, outcome, secs));
    };

    let ann = ann_fixture();
    run(1, "ann recall vs exhaustive", &mut || c1_recall(&ann));
    run(2, "query latency", &mut || c2_latency(&ann));
    drop(ann);
    run(3, "document embedding oracle", &mut c3_document_oracle);
    run(4, "temporal indicators oracle", &mut c4_indicators);
    run(5, "flow conservation", &mut c5_flow_conservation);
    run(6, "gradient checks", &mut c6_gradients);
    run(7, "classification and placebo", &mut c7_classification);
    let trained = train_synthetic();
    run(8, "relational directionality", &mut || c8_relational(&trained));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(11, "end-to-end determinism", &mut || c11_determinism(a.path(), b.path()));
    run(9, "threshold guarantee", &mut || c9_threshold(&trained, a.path()));
    run(10, "persistence round trips", &mut || c10_persistence(&trained));

    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("acceptance: failing {failed:?}");
        std::process::exit(1);
    }
}
