use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use gecmf_core::evaluation::{evaluate_corpus, render_tables, EvalConfig, EvalReport};
use gecmf_core::expansion::{read_instances, write_instances};
use gecmf_core::fillmask::{GoldMock, LexiconMock, RemoteClient, RemoteConfig};
use gecmf_core::m2::read_m2;
use gecmf_core::{
    expand_corpus, extract_edits, mask_instance, serialize_m2, AnnotatedSentence, FillModel, MaskStrategy, Scheme,
    SingleEditInstance, TokenSeq,
};
use serde::Serialize;

use crate::config::{ModelKind, RunConfig};

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    model_id: Option<String>,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

fn write_manifest(
    config: &RunConfig,
    command: &'static str,
    model_id: Option<String>,
    outputs: &[PathBuf],
) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        model_id,
        config,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = config.out.join(format!("manifest.{command}.json"));
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file).lines().collect::<std::io::Result<_>>().with_context(|| format!("reading {}", path.display()))
}

pub fn extract(source: &Path, target: &Path, out: Option<&Path>) -> Result<()> {
    let sources = read_lines(source)?;
    let targets = read_lines(target)?;
    if sources.len() != targets.len() {
        bail!("{} has {} sentences but {} has {}", source.display(), sources.len(), target.display(), targets.len());
    }
    let sentences: Vec<AnnotatedSentence> = sources
        .iter()
        .zip(&targets)
        .map(|(s, t)| {
            let (s, t) = (TokenSeq::from_whitespace(s), TokenSeq::from_whitespace(t));
            let edits = extract_edits(&s, &t);
            AnnotatedSentence::new(s, edits, 0).expect("extracted edits fit their source")
        })
        .collect();
    let text = serialize_m2(&sentences);
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_corpus(config: &RunConfig) -> Result<Vec<AnnotatedSentence>> {
    let path = config.corpus.as_ref().ok_or_else(|| anyhow!("--corpus is required"))?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_m2(file).with_context(|| format!("parsing {}", path.display()))
}

fn load_instances(path: &Path) -> Result<Vec<SingleEditInstance>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_instances(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn schemes(config: &RunConfig) -> Vec<Scheme> {
    config.scheme.map_or_else(|| Scheme::ALL.to_vec(), |s| vec![s])
}

fn create_out(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn expand(config: &RunConfig) -> Result<()> {
    let corpus = load_corpus(config)?;
    create_out(config)?;
    let mut outputs = Vec::new();
    for scheme in schemes(config) {
        let instances = expand_corpus(&corpus, scheme);
        let path = config.out.join(format!("instances.{scheme}.jsonl"));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_instances(&mut w, &instances)?;
        w.flush()?;
        println!("{scheme}: {}", instances.len());
        outputs.push(path);
    }
    write_manifest(config, "expand", None, &outputs)
}

fn build_model(config: &RunConfig) -> Result<Box<dyn FillModel>> {
    Ok(match config.model {
        ModelKind::GoldMock => Box::new(GoldMock::with_rank(config.gold_rank)?),
        ModelKind::LexiconMock => Box::new(LexiconMock::bundled()),
        ModelKind::Remote => {
            let endpoint = config.endpoint.clone().expect("validated");
            let mut remote = RemoteConfig::new(endpoint);
            remote.timeout = Duration::from_secs(config.timeout_secs);
            remote.retries = config.retries;
            remote.max_in_flight = config.max_in_flight;
            Box::new(RemoteClient::new(remote)?)
        }
    })
}

/// Instance sets to run: the `--instances` file, or the corpus expanded
/// under each selected scheme.
fn instance_sets(config: &RunConfig) -> Result<Vec<(Option<Scheme>, Vec<SingleEditInstance>)>> {
    if let Some(path) = &config.instances {
        let instances = load_instances(path)?;
        let scheme = instances.first().map(|i| i.scheme).or(config.scheme);
        return Ok(vec![(scheme, instances)]);
    }
    let corpus = load_corpus(config).context("evaluate needs --instances or --corpus")?;
    Ok(schemes(config).into_iter().map(|s| (Some(s), expand_corpus(&corpus, s))).collect())
}

pub fn mask(config: &RunConfig) -> Result<()> {
    let strategy = config.strategy.ok_or_else(|| anyhow!("mask needs --strategy"))?;
    let model = build_model(config)?;
    create_out(config)?;
    let mut outputs = Vec::new();
    for (scheme, instances) in instance_sets(config)? {
        let mut masked = Vec::with_capacity(instances.len());
        let mut deletions = 0;
        for inst in &instances {
            if inst.is_deletion() {
                deletions += 1;
                continue;
            }
            masked.push(mask_instance(inst, strategy, Some(model.as_ref()))?);
        }
        let scheme_tag = scheme.map_or("instances", Scheme::as_str);
        let path = config.out.join(format!("masked.{scheme_tag}.{strategy}.jsonl"));
        write_jsonl(&path, &masked)?;
        println!("{scheme_tag} {strategy}: {} masked, {deletions} deletions skipped", masked.len());
        outputs.push(path);
    }
    let model_id = (strategy == MaskStrategy::TargetLength).then(|| model.model_id());
    write_manifest(config, "mask", model_id, &outputs)
}

#[derive(Serialize)]
struct HypothesisRecord<'a> {
    scheme: Option<Scheme>,
    strategy: MaskStrategy,
    #[serde(flatten)]
    result: &'a gecmf_core::evaluation::InstanceResult,
}

pub fn evaluate(config: &RunConfig) -> Result<()> {
    let model = build_model(config)?;
    let sets = instance_sets(config)?;
    let strategies = config.strategy.map_or_else(|| MaskStrategy::ALL.to_vec(), |s| vec![s]);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.worker_count()).build()?;
    create_out(config)?;

    let mut reports: Vec<EvalReport> = Vec::new();
    let mut outputs = Vec::new();
    for (scheme, instances) in &sets {
        for &strategy in &strategies {
            let eval = EvalConfig {
                strategy,
                k: config.top_k,
                mode: config.mode,
                include_deletions: config.include_deletions,
                beta: gecmf_core::evaluation::DEFAULT_BETA,
                rerank: config.rerank,
            };
            let (mut report, results) = pool
                .install(|| evaluate_corpus(instances, &eval, model.as_ref()))
                .with_context(|| format!("evaluating {strategy}"))?;
            report.scheme = *scheme;
            let scheme_tag = scheme.map_or("instances", Scheme::as_str);
            let path = config.out.join(format!("hypotheses.{scheme_tag}.{strategy}.jsonl"));
            write_jsonl(&path, results.iter().map(|result| HypothesisRecord { scheme: *scheme, strategy, result }))?;
            outputs.push(path);
            reports.push(report);
        }
    }

    let table = render_tables(&reports);
    let json_path = config.out.join("report.json");
    let txt_path = config.out.join("report.txt");
    let mut json = serde_json::to_string_pretty(&reports)?;
    json.push('\n');
    fs::write(&json_path, json).with_context(|| format!("writing {}", json_path.display()))?;
    fs::write(&txt_path, &table).with_context(|| format!("writing {}", txt_path.display()))?;
    print!("{table}");
    outputs.extend([json_path, txt_path]);
    write_manifest(config, "evaluate", Some(model.model_id()), &outputs)
}
