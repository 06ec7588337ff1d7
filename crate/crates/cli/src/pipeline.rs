//! Command implementations and the campaign directory layout:
//!
//! ```text
//! <output_dir>/
//!   spec.json                     spec snapshot for provenance
//!   samples/run<r>/manifest.jsonl one record per sample
//!   samples/run<r>/samples/<bucket>/<index>.<ext>
//!   results/run<r>.jsonl          one record per compile
//!   results/cache.jsonl           verdict cache (sha256 + config hash)
//!   results/meta.json             language, params, run ids
//!   report/cq_summary.csv, lcq_curve.csv, lcq_curve.svg
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use cq_core::config::ConfigFile;
use cq_core::enumerator::Enumeration;
use cq_core::grammar::{load_grammar, validate, Grammar};
use cq_core::harness::{
    run_campaign_cached, CacheRecord, CampaignRecord, CampaignResult, VerdictCache,
};
use cq_core::metrics::{aggregate_runs, MetricParams};
use cq_core::report::emit_report;
use cq_core::sampler::{bucketed_sample, SampleParams, SampleSet};
use cq_core::treegrammar::{compile_to_rtg, RegularTreeGrammar};

pub enum CliError {
    Usage(String),
    Config(String),
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Validation(m) | CliError::Io(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn io_err(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{context}: {err}"))
}

/// Campaign spec file consumed by `measure`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub name: String,
    pub grammar: PathBuf,
    pub config: PathBuf,
    /// Half-open byte range [a, b).
    pub range: [u64; 2],
    pub buckets: usize,
    pub per_bucket_target: u64,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default)]
    pub seed: u64,
    /// 0 means one worker per logical CPU.
    #[serde(default)]
    pub workers: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub metrics: Option<MetricParams>,
}

fn default_runs() -> u32 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct CampaignMeta {
    language: String,
    metric_params: MetricParams,
    runs: Vec<RunRef>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRef {
    run_id: String,
    file: String,
}

fn read_grammar(path: &Path) -> Result<Grammar, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_err(&format!("cannot read grammar {}", path.display()), e))?;
    load_grammar(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_err(&format!("cannot read config {}", path.display()), e))?;
    ConfigFile::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_check(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_err(&format!("cannot read grammar {}", path.display()), e))?;
    let sugared = cq_core::grammar::parse_grammar(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let rule_count = sugared.rules.len();
    let grammar = cq_core::grammar::desugar(&sugared);
    let report = validate(&grammar);

    println!("grammar: {}", path.display());
    println!("start: {}", grammar.nonterminal_name(grammar.start()));
    println!(
        "nonterminals: {} ({} in source, {} from desugaring)",
        grammar.nonterminals().len(),
        rule_count,
        grammar.nonterminals().len() - rule_count
    );
    println!("terminals: {}", grammar.terminals().len());
    println!("productions: {}", grammar.productions().len());
    if !report.unreachable.is_empty() {
        println!("warning: unreachable: {}", report.unreachable.join(" "));
    }
    if !report.unproductive.is_empty() {
        println!("unproductive: {}", report.unproductive.join(" "));
    }
    if report.empty_language {
        return Err(CliError::Validation(
            "language is empty: the start symbol derives no terminal string".to_string(),
        ));
    }
    let rtg = compile_to_rtg(&grammar).map_err(|e| CliError::Validation(e.to_string()))?;
    println!("constructors: {}", rtg.rules().len());
    Ok(())
}

fn build_enumeration(grammar: &Grammar) -> Result<(Arc<RegularTreeGrammar>, Enumeration), CliError> {
    let rtg = Arc::new(compile_to_rtg(grammar).map_err(|e| CliError::Validation(e.to_string()))?);
    Ok((rtg.clone(), Enumeration::new(rtg)))
}

fn parse_range(range: &str) -> Result<(u64, u64), CliError> {
    let parts: Vec<&str> = range.split(':').collect();
    let err = || CliError::Usage(format!("range must be `A:B` with A < B, got `{range}`"));
    if parts.len() != 2 {
        return Err(err());
    }
    let a: u64 = parts[0].parse().map_err(|_| err())?;
    let b: u64 = parts[1].parse().map_err(|_| err())?;
    if a >= b {
        return Err(err());
    }
    Ok((a, b))
}

/// Writes a sample set under `dir`: `manifest.jsonl` plus one program file
/// per sample at the manifest's relative path. Returns the manifest path.
fn write_sample_set(
    dir: &Path,
    set: &SampleSet,
    extension: &str,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err("cannot create sample dir", e))?;
    let manifest_path = dir.join("manifest.jsonl");
    let mut manifest = Vec::new();
    for sample in &set.samples {
        let record = sample.to_record(extension);
        let file = dir.join(&record.path);
        if let Some(parent) = file.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err("cannot create bucket dir", e))?;
        }
        fs::write(&file, format!("{}\n", sample.text))
            .map_err(|e| io_err(&format!("cannot write {}", file.display()), e))?;
        let line = serde_json::to_string(&record)
            .map_err(|e| io_err("cannot encode manifest record", e))?;
        manifest.push(line);
    }
    let mut text = manifest.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(&manifest_path, text)
        .map_err(|e| io_err(&format!("cannot write {}", manifest_path.display()), e))?;
    Ok(manifest_path)
}

fn report_shortfall(set: &SampleSet, width: u64, a: u64) {
    for (bucket, missing) in set.shortfall.iter().enumerate() {
        if *missing > 0 {
            let lo = a + bucket as u64 * width;
            eprintln!(
                "warning: bucket {bucket} [{lo},{}) short by {missing} sample{}",
                lo + width,
                if *missing == 1 { "" } else { "s" }
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_sample(
    grammar_path: &Path,
    config_path: &Path,
    range: &str,
    buckets: usize,
    target: u64,
    seed: u64,
    out: &Path,
    alpha: u64,
    max_tries: u32,
) -> Result<(), CliError> {
    let grammar = read_grammar(grammar_path)?;
    let config = read_config(config_path)?;
    let (a, b) = parse_range(range)?;
    let (_rtg, enumeration) = build_enumeration(&grammar)?;

    let mut params = SampleParams::new(target.max(1), a, b, seed);
    params.alpha = alpha;
    params.max_tries = max_tries;
    if target == 0 {
        // An empty manifest is still a valid (trivial) sample set.
        let set = SampleSet {
            samples: vec![],
            params,
            shortfall: vec![0; buckets],
        };
        let manifest = write_sample_set(out, &set, &config.language.extension)?;
        println!("wrote 0 samples; manifest at {}", manifest.display());
        return Ok(());
    }
    let set = bucketed_sample(&enumeration, &config.render, buckets, target, &params)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    report_shortfall(&set, (b - a) / buckets as u64, a);
    let manifest = write_sample_set(out, &set, &config.language.extension)?;
    println!(
        "wrote {} samples ({} short of target); manifest at {}",
        set.samples.len(),
        set.total_shortfall(),
        manifest.display()
    );
    Ok(())
}

fn load_cache(path: &Path) -> Result<VerdictCache, CliError> {
    let mut cache = VerdictCache::default();
    match fs::read_to_string(path) {
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(cache),
        Err(err) => Err(io_err(&format!("cannot read {}", path.display()), err)),
        Ok(text) => {
            for line in text.lines().filter(|l| !l.is_empty()) {
                let record: CacheRecord = serde_json::from_str(line)
                    .map_err(|e| io_err("malformed cache record", e))?;
                cache.insert(record);
            }
            Ok(cache)
        }
    }
}

fn save_cache(path: &Path, cache: &VerdictCache) -> Result<(), CliError> {
    let mut out = String::new();
    for record in cache.records() {
        out.push_str(&serde_json::to_string(record).map_err(|e| io_err("encode cache", e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(&format!("cannot write {}", path.display()), e))
}

fn write_results_jsonl(path: &Path, campaign: &CampaignResult) -> Result<(), CliError> {
    let mut out = String::new();
    for record in campaign.records() {
        out.push_str(&serde_json::to_string(&record).map_err(|e| io_err("encode result", e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(&format!("cannot write {}", path.display()), e))
}

pub fn cmd_measure(
    spec_path: &Path,
    workers_override: Option<usize>,
    runs_override: Option<u32>,
) -> Result<(), CliError> {
    let spec_text = fs::read_to_string(spec_path)
        .map_err(|e| io_err(&format!("cannot read spec {}", spec_path.display()), e))?;
    let mut spec: CampaignSpec = serde_json::from_str(&spec_text)
        .map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    if let Some(w) = workers_override {
        spec.workers = w;
    }
    if let Some(r) = runs_override {
        spec.runs = r;
    }
    if spec.runs == 0 || spec.buckets == 0 {
        return Err(CliError::Usage("runs and buckets must be at least 1".into()));
    }
    let [a, b] = spec.range;
    if a >= b || (b - a) % spec.buckets as u64 != 0 {
        return Err(CliError::Usage(format!(
            "range [{a},{b}) must be nonempty and divisible into {} buckets",
            spec.buckets
        )));
    }

    // Resolve grammar/config relative to the spec file's directory.
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let grammar_path = base.join(&spec.grammar);
    let config_path = base.join(&spec.config);
    let grammar = read_grammar(&grammar_path)?;
    let config = read_config(&config_path)?;
    let language_config = config.language_config();
    let workers = if spec.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        spec.workers
    };
    let metric_params = spec.metrics.clone().unwrap_or(MetricParams {
        size_bound: b,
        ..MetricParams::default()
    });
    metric_params
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let out = base.join(&spec.output_dir);
    fs::create_dir_all(out.join("results")).map_err(|e| io_err("cannot create output dir", e))?;
    let snapshot = serde_json::to_string_pretty(&spec).map_err(|e| io_err("encode spec", e))?;
    fs::write(out.join("spec.json"), snapshot).map_err(|e| io_err("write spec snapshot", e))?;

    let (_rtg, enumeration) = build_enumeration(&grammar)?;
    let cache_path = out.join("results").join("cache.jsonl");
    let mut cache = load_cache(&cache_path)?;

    let mut campaigns = Vec::with_capacity(spec.runs as usize);
    for run in 0..spec.runs {
        let seed = spec.seed + run as u64;
        let params = SampleParams::new(spec.per_bucket_target, a, b, seed);
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let set = bucketed_sample(
            &enumeration,
            &config.render,
            spec.buckets,
            spec.per_bucket_target,
            &params,
        )
        .map_err(|e| CliError::Validation(e.to_string()))?;
        report_shortfall(&set, (b - a) / spec.buckets as u64, a);
        write_sample_set(
            &out.join("samples").join(format!("run{run}")),
            &set,
            &config.language.extension,
        )?;

        let campaign = run_campaign_cached(&set, &language_config, workers, &mut cache)
            .map_err(|e| CliError::Config(e.to_string()))?;
        save_cache(&cache_path, &cache)?;
        write_results_jsonl(&out.join("results").join(format!("run{run}.jsonl")), &campaign)?;
        println!(
            "run {run}: {} samples, accepted {}, rejected {}, timeout {}, crashed {}",
            campaign.counts.total(),
            campaign.counts.accepted,
            campaign.counts.rejected,
            campaign.counts.timeout,
            campaign.counts.crashed
        );
        campaigns.push(campaign);
    }

    let meta = CampaignMeta {
        language: language_config.name.clone(),
        metric_params: metric_params.clone(),
        runs: campaigns
            .iter()
            .enumerate()
            .map(|(run, c)| RunRef {
                run_id: c.run_id.clone(),
                file: format!("run{run}.jsonl"),
            })
            .collect(),
    };
    fs::write(
        out.join("results").join("meta.json"),
        serde_json::to_string_pretty(&meta).map_err(|e| io_err("encode meta", e))?,
    )
    .map_err(|e| io_err("write meta", e))?;

    let report = aggregate_runs(&campaigns, &metric_params)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let files = emit_report(&report, &out.join("report"))
        .map_err(|e| io_err("write report", e))?;
    print_report_summary(&report, &files.cq_summary);
    Ok(())
}

fn print_report_summary(report: &cq_core::metrics::CQReport, summary_path: &Path) {
    match report.relative_std_dev {
        Some(rsd) => println!(
            "CQ({}) = {:.4} over {} runs (relative std dev {:.2}%)",
            report.language,
            report.cq,
            report.per_run.len(),
            rsd
        ),
        None => println!("CQ({}) = {:.4}", report.language, report.cq),
    }
    println!("report: {}", summary_path.display());
    let _ = std::io::stdout().flush();
}

pub fn cmd_report(campaign_dir: &Path) -> Result<(), CliError> {
    let meta_path = campaign_dir.join("results").join("meta.json");
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|e| io_err(&format!("cannot read {}", meta_path.display()), e))?;
    let meta: CampaignMeta =
        serde_json::from_str(&meta_text).map_err(|e| CliError::Config(e.to_string()))?;

    let mut campaigns = Vec::new();
    for run in &meta.runs {
        let path = campaign_dir.join("results").join(&run.file);
        let text = fs::read_to_string(&path)
            .map_err(|e| io_err(&format!("cannot read {}", path.display()), e))?;
        let mut records = Vec::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let record: CampaignRecord =
                serde_json::from_str(line).map_err(|e| io_err("malformed result record", e))?;
            records.push(record);
        }
        let campaign = CampaignResult::from_records(&meta.language, &run.run_id, records)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        campaigns.push(campaign);
    }
    let report = aggregate_runs(&campaigns, &meta.metric_params)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let files = emit_report(&report, &campaign_dir.join("report"))
        .map_err(|e| io_err("write report", e))?;
    print_report_summary(&report, &files.cq_summary);
    Ok(())
}
