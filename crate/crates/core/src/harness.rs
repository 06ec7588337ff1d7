//! Compile harness: writes sampled programs to disk, runs the configured
//! compiler on each with a timeout, and classifies the outcome.
//!
//! Every compile gets a fresh temporary directory, so concurrent workers
//! never share paths, and all artifacts vanish when the compile finishes.
//! Verdicts depend only on the program and the configuration, never on
//! scheduling, so a campaign's outcome is identical for any worker count.

use std::collections::HashMap;
use std::io::Read;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sampler::SampleSet;

const STDERR_HEAD_BYTES: usize = 4096;
const POLL_INTERVAL: Duration = Duration::from_millis(5);

/// How to invoke one language's compiler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageConfig {
    pub name: String,
    pub file_extension: String,
    /// argv template; `{file}` is replaced by the program path.
    pub compile_command: Vec<String>,
    /// Text put around each rendered program before it is written, e.g. a
    /// main-function skeleton, so the grammar itself stays language-neutral.
    pub entry_wrapper: Option<(String, String)>,
    pub timeout: Duration,
    pub expected_success_exit: i32,
}

impl LanguageConfig {
    /// Stable digest of everything that can change a verdict; used to key
    /// the verdict cache.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.name.as_bytes());
        hasher.update([0]);
        hasher.update(self.file_extension.as_bytes());
        hasher.update([0]);
        for arg in &self.compile_command {
            hasher.update(arg.as_bytes());
            hasher.update([0]);
        }
        if let Some((prefix, suffix)) = &self.entry_wrapper {
            hasher.update(prefix.as_bytes());
            hasher.update([0]);
            hasher.update(suffix.as_bytes());
        }
        hasher.update([0]);
        hasher.update(self.expected_success_exit.to_le_bytes());
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
    Timeout,
    Crashed,
}

/// Outcome of one compile, joined with the sample's identity and size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileResult {
    pub index: BigUint,
    pub bucket: usize,
    pub size: u64,
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    pub duration_ms: u64,
    pub stderr_head: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub accepted: u64,
    pub rejected: u64,
    pub timeout: u64,
    pub crashed: u64,
}

impl VerdictCounts {
    pub fn total(&self) -> u64 {
        self.accepted + self.rejected + self.timeout + self.crashed
    }

    pub fn add(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Accepted => self.accepted += 1,
            Verdict::Rejected => self.rejected += 1,
            Verdict::Timeout => self.timeout += 1,
            Verdict::Crashed => self.crashed += 1,
        }
    }

    pub fn merge(&mut self, other: &VerdictCounts) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.timeout += other.timeout;
        self.crashed += other.crashed;
    }
}

/// All verdicts of one campaign run, order-normalized by (bucket, index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignResult {
    pub language: String,
    pub run_id: String,
    pub results: Vec<CompileResult>,
    pub counts: VerdictCounts,
}

/// JSON-lines record for one compile result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub index: String,
    pub bucket: usize,
    pub size: u64,
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    pub duration_ms: u64,
}

impl CampaignResult {
    pub fn records(&self) -> impl Iterator<Item = CampaignRecord> + '_ {
        self.results.iter().map(|r| CampaignRecord {
            index: r.index.to_string(),
            bucket: r.bucket,
            size: r.size,
            verdict: r.verdict,
            exit_code: r.exit_code,
            duration_ms: r.duration_ms,
        })
    }

    /// Rebuilds a campaign from JSONL records, e.g. for re-reporting.
    pub fn from_records(
        language: &str,
        run_id: &str,
        records: Vec<CampaignRecord>,
    ) -> Result<CampaignResult, HarnessError> {
        let mut results = Vec::with_capacity(records.len());
        let mut counts = VerdictCounts::default();
        for record in records {
            let index = record
                .index
                .parse::<BigUint>()
                .map_err(|_| HarnessError::BadRecord {
                    field: "index".into(),
                })?;
            counts.add(record.verdict);
            results.push(CompileResult {
                index,
                bucket: record.bucket,
                size: record.size,
                verdict: record.verdict,
                exit_code: record.exit_code,
                duration_ms: record.duration_ms,
                stderr_head: String::new(),
            });
        }
        results.sort_by(|x, y| (x.bucket, &x.index).cmp(&(y.bucket, &y.index)));
        Ok(CampaignResult {
            language: language.to_string(),
            run_id: run_id.to_string(),
            results,
            counts,
        })
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("compiler executable `{program}` not found")]
    CompilerNotFound { program: String },
    #[error("failed to run compile job: {0}")]
    Io(#[from] std::io::Error),
    #[error("compile command must contain `{{file}}` exactly once")]
    BadCommandTemplate,
    #[error("malformed campaign record field `{field}`")]
    BadRecord { field: String },
}

/// Verdict cache keyed by (sha256 of program text, config hash). Keeps a
/// rerun over an existing sample directory from recompiling anything already
/// recorded.
#[derive(Debug, Default)]
pub struct VerdictCache {
    entries: HashMap<(String, String), CacheRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub sha256: String,
    pub config: String,
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    pub duration_ms: u64,
}

impl VerdictCache {
    pub fn insert(&mut self, record: CacheRecord) {
        self.entries
            .insert((record.sha256.clone(), record.config.clone()), record);
    }

    pub fn get(&self, sha256: &str, config: &str) -> Option<&CacheRecord> {
        self.entries
            .get(&(sha256.to_string(), config.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &CacheRecord> {
        let mut sorted: Vec<&CacheRecord> = self.entries.values().collect();
        sorted.sort_by(|a, b| (&a.sha256, &a.config).cmp(&(&b.sha256, &b.config)));
        sorted.into_iter()
    }
}

/// Raw compile outcome before it is joined with a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compilation {
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    pub duration_ms: u64,
    pub stderr_head: String,
}

/// Writes `text` (wrapped if configured) to a fresh file and runs the
/// compiler on it. A missing compiler executable is a configuration error,
/// distinct from any verdict.
pub fn compile_one(text: &str, cfg: &LanguageConfig) -> Result<Compilation, HarnessError> {
    let placeholders: usize = cfg
        .compile_command
        .iter()
        .map(|arg| arg.matches("{file}").count())
        .sum();
    if cfg.compile_command.is_empty() || placeholders != 1 {
        return Err(HarnessError::BadCommandTemplate);
    }

    let dir = tempfile::TempDir::new()?;
    let path = dir.path().join(format!("program.{}", cfg.file_extension));
    let contents = match &cfg.entry_wrapper {
        Some((prefix, suffix)) => format!("{prefix}{text}{suffix}\n"),
        None => format!("{text}\n"),
    };
    std::fs::write(&path, contents)?;

    let path_str = path.to_string_lossy();
    let mut argv: Vec<String> = cfg
        .compile_command
        .iter()
        .map(|arg| arg.replace("{file}", &path_str))
        .collect();
    // Each compile runs in its own temp dir, so a relative command path like
    // `target/debug/minilang-check` must be anchored to the invoker's
    // working directory first. Bare names still resolve via PATH.
    let program = std::path::Path::new(&argv[0]);
    if program.components().count() > 1 && program.is_relative() {
        if let Ok(cwd) = std::env::current_dir() {
            argv[0] = cwd.join(program).to_string_lossy().into_owned();
        }
    }

    let started = Instant::now();
    let mut child = match Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(child) => child,
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
            return Err(HarnessError::CompilerNotFound {
                program: argv[0].clone(),
            });
        }
        Err(err) => return Err(err.into()),
    };

    // Drain stderr on a side thread so a chatty compiler can't block on a
    // full pipe while we wait for it.
    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let drain = std::thread::spawn(move || {
        let mut head = Vec::with_capacity(STDERR_HEAD_BYTES);
        let mut buf = [0u8; 4096];
        loop {
            match stderr_pipe.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = STDERR_HEAD_BYTES.saturating_sub(head.len());
                    head.extend_from_slice(&buf[..n.min(room)]);
                }
            }
        }
        head
    });

    let deadline = started + cfg.timeout;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if Instant::now() >= deadline {
            break None;
        }
        std::thread::sleep(POLL_INTERVAL);
    };

    let (verdict, exit_code) = match status {
        None => {
            let _ = child.kill();
            let _ = child.wait();
            (Verdict::Timeout, None)
        }
        Some(status) => match status.code() {
            Some(code) if code == cfg.expected_success_exit => (Verdict::Accepted, Some(code)),
            Some(code) => (Verdict::Rejected, Some(code)),
            None => (Verdict::Crashed, None),
        },
    };
    let duration_ms = started.elapsed().as_millis() as u64;
    let stderr_head = String::from_utf8_lossy(&drain.join().unwrap_or_default()).into_owned();
    Ok(Compilation {
        verdict,
        exit_code,
        duration_ms,
        stderr_head,
    })
}

/// Compiles every sample exactly once on a pool of `workers` threads.
/// Results come back ordered by (bucket, index) and are identical for any
/// worker count; durations are informational only.
pub fn run_campaign(
    samples: &SampleSet,
    cfg: &LanguageConfig,
    workers: usize,
) -> Result<CampaignResult, HarnessError> {
    run_campaign_cached(samples, cfg, workers, &mut VerdictCache::default())
}

/// [`run_campaign`] with a verdict cache: samples whose (text hash, config
/// hash) pair is already recorded are not recompiled; fresh verdicts are
/// added to the cache.
pub fn run_campaign_cached(
    samples: &SampleSet,
    cfg: &LanguageConfig,
    workers: usize,
    cache: &mut VerdictCache,
) -> Result<CampaignResult, HarnessError> {
    let config_hash = cfg.config_hash();
    let mut jobs: Vec<&crate::sampler::Sample> = samples.samples.iter().collect();
    jobs.sort_by(|x, y| (x.bucket, &x.index).cmp(&(y.bucket, &y.index)));

    let shas: Vec<String> = jobs.iter().map(|s| s.sha256()).collect();
    let mut slots: Vec<Option<Result<Compilation, HarnessError>>> = Vec::new();
    slots.resize_with(jobs.len(), || None);
    let mut fresh = vec![false; jobs.len()];
    let mut pending: Vec<usize> = Vec::new();
    for pos in 0..jobs.len() {
        match cache.get(&shas[pos], &config_hash) {
            Some(hit) => {
                slots[pos] = Some(Ok(Compilation {
                    verdict: hit.verdict,
                    exit_code: hit.exit_code,
                    duration_ms: hit.duration_ms,
                    stderr_head: String::new(),
                }));
            }
            None => {
                fresh[pos] = true;
                pending.push(pos);
            }
        }
    }

    let slots = Mutex::new(slots);
    let cursor = AtomicUsize::new(0);
    let worker_count = workers.max(1).min(pending.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let next = cursor.fetch_add(1, Ordering::Relaxed);
                if next >= pending.len() {
                    break;
                }
                let pos = pending[next];
                let outcome = compile_one(&jobs[pos].text, cfg);
                slots.lock().unwrap()[pos] = Some(outcome);
            });
        }
    });

    let slots = slots.into_inner().unwrap();
    let mut results = Vec::with_capacity(jobs.len());
    let mut counts = VerdictCounts::default();
    for (pos, (sample, slot)) in jobs.iter().zip(slots).enumerate() {
        let compilation = slot.expect("every job ran")?;
        counts.add(compilation.verdict);
        if fresh[pos] {
            cache.insert(CacheRecord {
                sha256: shas[pos].clone(),
                config: config_hash.clone(),
                verdict: compilation.verdict,
                exit_code: compilation.exit_code,
                duration_ms: compilation.duration_ms,
            });
        }
        results.push(CompileResult {
            index: sample.index.clone(),
            bucket: sample.bucket,
            size: sample.size,
            verdict: compilation.verdict,
            exit_code: compilation.exit_code,
            duration_ms: compilation.duration_ms,
            stderr_head: compilation.stderr_head,
        });
    }

    let run_id = format!(
        "seed{}-{}",
        samples.params.seed,
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    );
    Ok(CampaignResult {
        language: cfg.name.clone(),
        run_id,
        results,
        counts,
    })
}
