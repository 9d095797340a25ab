//! One function per subcommand. Each reads its inputs from the workspace,
//! writes its outputs atomically and finishes with a sidecar.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{Context, Result};
use patsig_core::ann::build_forest;
use patsig_core::corpus::{
    build_vocabulary, detect_bigrams, filter_corpus, parse_patents, preprocess, tokenize, write_patents,
};
use patsig_core::embedding::{fit_tfidf, train_sgns, vectorize_corpus, Signer};
use patsig_core::eval::{
    classification_experiment, relational_report, sample_condition_pairs, subclass_labels, write_relational,
};
use patsig_core::indicators::{
    add_isolated, aggregate_time_series, compute_country_flows, compute_indicators, write_indicators, write_series,
    GroupBy, ShareMap, Timeline,
};
use patsig_core::similarity::{build_similarity_graph, read_edges, semantic_search, GraphMeta, SearchStatus};
use patsig_core::synth::{synthetic_corpus, CorpusSpec};
use patsig_core::{
    BigramTable, EmbeddingMatrix, Error, PatentRecord, PipelineConfig, RpForest, SimilarityGraph, TfIdfModel,
    VectorStore, Vocabulary,
};
use rayon::prelude::*;
use serde_json::json;

use crate::artifacts::*;

fn info(msg: impl AsRef<str>) {
    eprintln!("info: {}", msg.as_ref());
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn read_corpus(ws: &Workspace) -> Result<Vec<PatentRecord>> {
    parse_patents(ws.open(CORPUS)?).context(CORPUS)
}

fn read_store(ws: &Workspace, name: &str) -> Result<VectorStore> {
    VectorStore::load(&ws.path(name)).context(name.to_string())
}

fn read_index(ws: &Workspace) -> Result<RpForest> {
    RpForest::load(&ws.path(INDEX)).context(INDEX)
}

pub fn ingest(ws: &Workspace, cfg: &PipelineConfig, input: &Path) -> Result<()> {
    let file = std::fs::File::open(input).map_err(|_| CliError::MissingInput(input.to_path_buf()))?;
    let all = parse_patents(std::io::BufReader::new(file)).with_context(|| input.display().to_string())?;
    let total = all.len();
    let records = filter_corpus(all, &cfg.corpus.filter);
    if records.is_empty() {
        return Err(Error::Empty("corpus after filtering").into());
    }
    let raw: Vec<Vec<String>> = records.par_iter().map(|r| tokenize(&r.abstract_text)).collect();
    let bigrams = detect_bigrams(&raw, cfg.corpus.bigram_threshold);
    let docs = preprocess(&records, &bigrams);
    info(format!("ingest: kept {} of {total} records, {} bigrams", records.len(), bigrams.len()));

    ws.write(CORPUS, |w| write_patents(w, &records))?;
    ws.write(BIGRAMS, |w| bigrams.write_tsv(w))?;
    ws.write(TOKENS, |w| {
        for (r, d) in records.iter().zip(&docs) {
            writeln!(w, "{}\t{}", r.id, d.join(" "))?;
        }
        Ok(())
    })?;
    let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let inputs = BTreeMap::from([(format!("external:{name}"), crc_hex(input)?)]);
    ws.finish(
        "ingest",
        cfg,
        inputs,
        &[CORPUS, BIGRAMS, TOKENS],
        json!({ "records_read": total, "records_kept": records.len(), "bigrams": bigrams.len() }),
    )
}

fn read_tokens(ws: &Workspace) -> Result<Vec<Vec<String>>> {
    let mut docs = Vec::new();
    for (i, line) in ws.open(TOKENS)?.lines().enumerate() {
        let line = line?;
        let (_, toks) = line
            .split_once('\t')
            .ok_or_else(|| Error::Format { offset: i as u64 + 1, message: format!("{TOKENS}: missing tab") })?;
        docs.push(toks.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect());
    }
    Ok(docs)
}

pub fn train(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let inputs = ws.check_inputs(&[TOKENS])?;
    let docs = read_tokens(ws)?;
    let vocab = build_vocabulary(&docs, cfg.corpus.min_count)?;
    let encoded: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(d)).collect();
    let tokens: usize = encoded.iter().map(Vec::len).sum();
    info(format!("train: {} terms, {tokens} tokens, dim {}", vocab.len(), cfg.embedding.dim));
    let embedding = train_sgns(&encoded, &vocab, &cfg.embedding)?;
    let tfidf = fit_tfidf(&encoded, &vocab)?;

    ws.write(VOCAB, |w| vocab.write_tsv(w))?;
    ws.write(EMBEDDING, |w| embedding.to_store().write_to(w))?;
    ws.write(TFIDF, |w| tfidf.write_tsv(w))?;
    ws.finish(
        "train",
        cfg,
        inputs,
        &[VOCAB, EMBEDDING, TFIDF],
        json!({ "terms": vocab.len(), "tokens": tokens, "vocab_fingerprint": format!("{:08x}", vocab.fingerprint()) }),
    )
}

struct Models {
    bigrams: BigramTable,
    vocab: Vocabulary,
    embedding: EmbeddingMatrix,
    tfidf: TfIdfModel,
}

impl Models {
    /// Loads the trained models. Settings that shaped them (bigram threshold,
    /// SGNS parameters) come from the producing stages' recorded configs, so
    /// later stages need not repeat the flags; `cfg` is updated to match.
    fn load(ws: &Workspace, cfg: &mut PipelineConfig) -> Result<Self> {
        if let Some(ingest) = producer_config(ws, "ingest")? {
            cfg.corpus.bigram_threshold = ingest.corpus.bigram_threshold;
        }
        let store = read_store(ws, EMBEDDING)?;
        match producer_config(ws, "train")? {
            Some(train) => cfg.embedding = train.embedding,
            None => cfg.embedding.dim = store.dim(),
        }
        let bigrams = BigramTable::read_tsv(ws.open(BIGRAMS)?, cfg.corpus.bigram_threshold).context(BIGRAMS)?;
        let vocab = Vocabulary::read_tsv(ws.open(VOCAB)?).context(VOCAB)?;
        let embedding = EmbeddingMatrix::from_store(&store, cfg.embedding.clone())?;
        let tfidf = TfIdfModel::read_tsv(ws.open(TFIDF)?).context(TFIDF)?;
        if embedding.vocab_fingerprint() != vocab.fingerprint() {
            return Err(CliError::Stale(format!("{EMBEDDING} and {VOCAB} come from different training runs")).into());
        }
        Ok(Models { bigrams, vocab, embedding, tfidf })
    }

    fn signer(&self) -> Signer<'_> {
        Signer { bigrams: &self.bigrams, vocab: &self.vocab, embedding: &self.embedding, tfidf: &self.tfidf }
    }
}

/// The resolved config a stage recorded, if its sidecar is present.
fn producer_config(ws: &Workspace, stage: &str) -> Result<Option<PipelineConfig>> {
    let Ok(car) = ws.sidecar(stage) else { return Ok(None) };
    let path = ws.path(&car.config);
    if !path.is_file() {
        return Ok(None);
    }
    let cfg = PipelineConfig::load(&path).map_err(|e| CliError::Stale(format!("{}: {e}", path.display())))?;
    Ok(Some(cfg))
}

const MODEL_FILES: [&str; 4] = [BIGRAMS, VOCAB, EMBEDDING, TFIDF];

pub fn vectorize(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let mut names = vec![CORPUS];
    names.extend(MODEL_FILES);
    let inputs = ws.check_inputs(&names)?;
    let mut cfg = cfg.clone();
    let models = Models::load(ws, &mut cfg)?;
    let records = read_corpus(ws)?;
    let store = vectorize_corpus(&records, &models.signer())?;
    let sentinels = (0..store.len()).filter(|&i| store.is_sentinel(i)).count();
    if sentinels > 0 {
        warn(format!("vectorize: {sentinels} patents have no in-vocabulary terms and get a zero signature"));
    }
    ws.write(VECTORS, |w| store.write_to(w))?;
    ws.finish("vectorize", &cfg, inputs, &[VECTORS], json!({ "vectors": store.len(), "zero_signatures": sentinels }))
}

pub fn index(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let inputs = ws.check_inputs(&[VECTORS])?;
    let store = read_store(ws, VECTORS)?;
    let forest = build_forest(&store, &cfg.index)?;
    info(format!("index: {} items, {} trees", forest.len(), forest.trees().len()));
    let bytes = forest.to_bytes();
    ws.write(INDEX, |w| Ok(w.write_all(&bytes)?))?;
    ws.finish(
        "index",
        cfg,
        inputs,
        &[INDEX],
        json!({ "items": forest.len(), "trees": forest.trees().len(), "checksum": format!("{:08x}", forest.checksum()) }),
    )
}

pub fn query(ws: &Workspace, cfg: &PipelineConfig, text: &str, k: usize) -> Result<()> {
    let mut names = vec![INDEX];
    names.extend(MODEL_FILES);
    ws.check_inputs(&names)?;
    let mut cfg = cfg.clone();
    let models = Models::load(ws, &mut cfg)?;
    let forest = read_index(ws)?;
    let result = semantic_search(text, &models.signer(), &forest, k)?;
    if result.status != SearchStatus::Ok {
        warn(format!("query: {}", result.status.message()));
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "rank\tid\tscore")?;
    for (i, n) in result.neighbors.neighbors.iter().enumerate() {
        writeln!(out, "{}\t{}\t{:.6}", i + 1, n.id, n.score)?;
    }
    Ok(())
}

pub fn edges(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let inputs = ws.check_inputs(&[INDEX, VECTORS])?;
    let forest = read_index(ws)?;
    let store = read_store(ws, VECTORS)?;
    let s = &cfg.similarity;
    let graph = build_similarity_graph(&forest, &store, s.k, s.threshold, s.search_breadth)?;
    info(format!("edges: {} edges from {} sources", graph.edge_count(), graph.nodes.len()));
    ws.write(EDGES, |w| graph.write_tsv(w))?;
    let meta = graph.meta(forest.checksum(), s.search_breadth);
    ws.finish("edges", cfg, inputs, &[EDGES], serde_json::to_value(meta)?)
}

fn read_graph(ws: &Workspace) -> Result<SimilarityGraph> {
    let meta: GraphMeta = serde_json::from_value(ws.sidecar("edges")?.details).context("edges.meta.json")?;
    let edges = read_edges(ws.open(EDGES)?).context(EDGES)?;
    Ok(SimilarityGraph::from_edges(edges, meta.k, meta.threshold)?)
}

fn timeline(records: &[PatentRecord]) -> (Timeline, ShareMap) {
    let years = records.iter().map(|r| (r.id.clone(), r.year as f64)).collect();
    let shares: HashMap<_, _> = records
        .iter()
        .filter(|r| !r.country_shares.is_empty())
        .map(|r| (r.id.clone(), r.country_shares.clone()))
        .collect();
    (years, shares)
}

pub fn indicators(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let inputs = ws.check_inputs(&[EDGES, CORPUS, VECTORS])?;
    let graph = read_graph(ws)?;
    let records = read_corpus(ws)?;
    let store = read_store(ws, VECTORS)?;
    let (years, shares) = timeline(&records);
    let mut rows = compute_indicators(&graph, &years, &cfg.indicators)?;
    let signed = (0..store.len()).filter(|&i| !store.is_sentinel(i)).map(|i| store.id(i));
    add_isolated(&mut rows, signed, &years)?;
    let mut series = aggregate_time_series(&rows, GroupBy::Global, &shares);
    series.extend(aggregate_time_series(&rows, GroupBy::Country, &shares));
    ws.write(INDICATORS, |w| write_indicators(w, &rows))?;
    ws.write(SERIES, |w| write_series(w, &series))?;
    ws.finish("indicators", cfg, inputs, &[INDICATORS, SERIES], json!({ "patents": rows.len() }))
}

pub fn flows(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let inputs = ws.check_inputs(&[EDGES, CORPUS])?;
    let graph = read_graph(ws)?;
    let records = read_corpus(ws)?;
    let (years, shares) = timeline(&records);
    let report = compute_country_flows(&graph, &years, &shares, &cfg.indicators, &cfg.flows)?;
    if report.missing_shares > 0 {
        warn(format!("flows: {} qualifying edges skipped for missing country shares", report.missing_shares));
    }
    ws.write(FLOWS, |w| report.matrix.write_tsv(w))?;
    ws.write(STRENGTHS, |w| report.matrix.write_strengths(w))?;
    ws.finish(
        "flows",
        cfg,
        inputs,
        &[FLOWS, STRENGTHS],
        json!({
            "period": report.matrix.period_label(),
            "qualifying_edges": report.qualifying_edges,
            "missing_shares": report.missing_shares,
            "total_flow": report.matrix.total(),
        }),
    )
}

pub fn eval_classify(ws: &Workspace, cfg: &PipelineConfig, placebo: bool) -> Result<()> {
    let inputs = ws.check_inputs(&[VECTORS, CORPUS])?;
    let store = read_store(ws, VECTORS)?;
    let records = read_corpus(ws)?;
    let labeled = subclass_labels(&records, &store);
    let vectors: Vec<&[f32]> = labeled.rows.iter().map(|&r| store.vector(r)).collect();
    let outcome = classification_experiment(
        &vectors,
        &labeled.labels,
        labeled.classes.len(),
        cfg.eval.holdout,
        placebo,
        &cfg.eval.mlp,
    )?;
    for w in &outcome.warnings {
        warn(format!("eval-classify: {w}"));
    }
    let m = &outcome.metrics;
    info(format!(
        "eval-classify{}: weighted precision {:.4} recall {:.4} f1 {:.4} on {} held-out patents",
        if placebo { " (placebo)" } else { "" },
        m.weighted_precision,
        m.weighted_recall,
        m.weighted_f1,
        outcome.test_size
    ));
    let (stage, out) = if placebo { ("eval-classify-placebo", METRICS_PLACEBO) } else { ("eval-classify", METRICS) };
    ws.write(out, |w| m.write_tsv(&labeled.classes, w))?;
    ws.finish(
        stage,
        cfg,
        inputs,
        &[out],
        json!({
            "classes": labeled.classes.len(),
            "train": outcome.train_size,
            "test": outcome.test_size,
            "weighted_f1": m.weighted_f1,
        }),
    )
}

pub fn eval_relational(ws: &Workspace, cfg: &PipelineConfig) -> Result<()> {
    let inputs = ws.check_inputs(&[VECTORS, CORPUS])?;
    let store = read_store(ws, VECTORS)?;
    let records = read_corpus(ws)?;
    let mut samples = Vec::new();
    for condition in cfg.eval.parsed_conditions()? {
        match sample_condition_pairs(&records, &store, condition, cfg.eval.pairs, cfg.eval.seed) {
            Ok(s) if s.positives.len() >= 2 => {
                s.warnings.iter().for_each(|w| warn(format!("eval-relational: {w}")));
                samples.push(s);
            }
            Ok(s) => warn(format!("eval-relational: {condition} skipped, {} positive pairs", s.positives.len())),
            Err(Error::InvalidSample(m)) => warn(format!("eval-relational: {condition} skipped, {m}")),
            Err(e) => return Err(e.into()),
        }
    }
    let rows = relational_report(&samples)?;
    for r in rows.iter().filter(|r| r.reversed) {
        warn(format!("eval-relational: {} shared pairs are not more similar than random pairs", r.condition));
    }
    ws.write(RELATIONAL, |w| write_relational(&rows, w))?;
    ws.finish("eval-relational", cfg, inputs, &[RELATIONAL], json!({ "conditions": rows.len() }))
}

pub fn synth(spec: &CorpusSpec, output: &Path) -> Result<()> {
    let records = synthetic_corpus(spec);
    patsig_core::io::atomic_write(output, |w| write_patents(w, &records))
        .with_context(|| format!("writing {}", output.display()))?;
    info(format!("synth: wrote {} records to {}", records.len(), output.display()));
    Ok(())
}
