//! Size-stratified sampling from the enumeration.
//!
//! Byte size is not monotone in the enumeration index, so the first index of
//! a given size cannot be located exactly without a full scan. `estimate_index`
//! instead walks the index space with exponentially growing steps, reverses
//! once it overshoots, and returns a slight overapproximation of the first
//! index whose program reaches the target size. `sample_program_interval`
//! then probes evenly spaced indices between two such bounds, filters by
//! rendered size, and oversamples/widens on shortfall. To avoid biasing a
//! campaign toward longer programs, `bucketed_sample` partitions the byte
//! range into equal buckets sampled independently, with initially consecutive
//! index bounds.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::enumerator::Enumeration;
use crate::treegrammar::{render, rendered_size, RenderRules};

/// Knobs of the sampling algorithms. `alpha` is the oversampling factor for
/// the evenly spaced probe grid, `beta` the index-range widening factor on
/// retry, and `step_increase_threshold` the number of probes between step
/// growths in `estimate_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleParams {
    pub n: u64,
    pub a: u64,
    pub b: u64,
    pub alpha: u64,
    pub beta: u64,
    pub max_tries: u32,
    pub step_increase_threshold: u32,
    pub seed: u64,
    /// Abort bound for the forward index walk, guarding finite languages
    /// whose largest program is smaller than the target size.
    pub search_ceiling: BigUint,
}

impl SampleParams {
    pub fn new(n: u64, a: u64, b: u64, seed: u64) -> SampleParams {
        SampleParams {
            n,
            a,
            b,
            alpha: 8,
            beta: 2,
            max_tries: 16,
            step_increase_threshold: 10,
            seed,
            search_ceiling: BigUint::from(10u32).pow(60),
        }
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if self.a >= self.b {
            return Err(SampleError::InvalidParams("need a < b".into()));
        }
        if self.n < 1 {
            return Err(SampleError::InvalidParams("need n >= 1".into()));
        }
        if self.alpha < 1 {
            return Err(SampleError::InvalidParams("need alpha >= 1".into()));
        }
        if self.beta < 2 {
            return Err(SampleError::InvalidParams("need beta >= 2".into()));
        }
        if self.max_tries < 1 {
            return Err(SampleError::InvalidParams("need max_tries >= 1".into()));
        }
        Ok(())
    }
}

/// Approximate index bounds of a byte-size interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexBounds {
    pub lo: BigUint,
    pub hi: BigUint,
}

/// One sampled program with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub index: BigUint,
    pub text: String,
    pub size: u64,
    pub bucket: usize,
}

impl Sample {
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    pub fn to_record(&self, extension: &str) -> SampleRecord {
        SampleRecord {
            index: self.index.to_string(),
            size: self.size,
            bucket: self.bucket,
            sha256: self.sha256(),
            path: format!("samples/{}/{}.{}", self.bucket, self.index, extension),
        }
    }
}

/// JSON-lines manifest record for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: String,
    pub size: u64,
    pub bucket: usize,
    pub sha256: String,
    pub path: String,
}

/// Result of a sampling call: samples ordered by (bucket, index), the
/// parameters that produced them, and per-bucket counts of missing samples
/// where targets were not met.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub params: SampleParams,
    pub shortfall: Vec<u64>,
}

impl SampleSet {
    pub fn total_shortfall(&self) -> u64 {
        self.shortfall.iter().sum()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("invalid sample parameters: {0}")]
    InvalidParams(String),
    #[error("byte range of width {span} is not divisible into {buckets} equal buckets")]
    BucketDivisibility { span: u64, buckets: u64 },
    #[error("no program of size at least {x} bytes exists in this language")]
    SizeUnreachable { x: u64 },
    #[error("index walk for size {x} exceeded the search ceiling of 10^{ceiling_exp}")]
    SearchCeiling { x: u64, ceiling_exp: u32 },
}

fn ten_pow(step: u32) -> BigUint {
    BigUint::from(10u32).pow(step)
}

/// Size probe outcome: the exact rendered size, or the certainty that the
/// size exceeds the probe's cap (the tree was not materialized).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Probe {
    Size(u64),
    Above,
}

impl Probe {
    fn at_least(self, x: u64) -> bool {
        match self {
            Probe::Above => true,
            Probe::Size(s) => s >= x,
        }
    }
}

/// Sizes `f(index)` without building arbitrarily large trees: unranking
/// aborts once the tree's token bytes alone exceed `cap`, which bounds its
/// rendered size from below. `None` means the index is out of range.
fn probe_size(e: &Enumeration, rules: &RenderRules, index: &BigUint, cap: u64) -> Option<Probe> {
    match e.index_to_tree_bounded(index, cap) {
        Err(_) => None,
        Ok(None) => Some(Probe::Above),
        Ok(Some(tree)) => Some(Probe::Size(rendered_size(&tree, e.rtg(), rules))),
    }
}

/// Estimates the first index of a program of at least `x` bytes: exponential
/// forward walk, exact-size early return, reversed refinement, then one step
/// back up. The result always satisfies `size(f(result)) >= x`; when the
/// stepped return point happens to dip below `x` (sizes are not monotone),
/// the smallest probed index that met the target is returned instead.
pub fn estimate_index(
    e: &Enumeration,
    rules: &RenderRules,
    x: u64,
    params: &SampleParams,
) -> Result<BigUint, SampleError> {
    let ceiling_exp = 60u32;
    let mut index = BigUint::zero();
    let mut steps_taken = 0u32;
    let mut step = 0u32;
    let mut moved = false;
    let mut clamped = false;

    let mut size = probe_size(e, rules, &index, x).ok_or(SampleError::SizeUnreachable { x })?;
    while !size.at_least(x) {
        if clamped {
            // Already at the last index of a finite language.
            return Err(SampleError::SizeUnreachable { x });
        }
        if index > params.search_ceiling {
            return Err(SampleError::SearchCeiling { x, ceiling_exp });
        }
        if steps_taken == params.step_increase_threshold {
            step += 1;
            steps_taken = 0;
        }
        index += ten_pow(step);
        steps_taken += 1;
        moved = true;
        size = match probe_size(e, rules, &index, x) {
            Some(s) => s,
            None => {
                clamped = true;
                let total = e.total_trees().expect("out-of-range index implies finite");
                index = &total - 1u32;
                probe_size(e, rules, &index, x).expect("last index is valid")
            }
        };
    }
    if !moved {
        // The very first program already meets the target; index 0 is the
        // true first index.
        return Ok(BigUint::zero());
    }
    if size == Probe::Size(x) {
        return Ok(index);
    }

    let mut best_sound = index.clone();
    steps_taken = 0;
    step = 0;
    // Probe::Above means the size certainly exceeds x, so the loop condition
    // `size > x` holds.
    while size != Probe::Size(x) && size.at_least(x) {
        if steps_taken == params.step_increase_threshold {
            step += 1;
            steps_taken = 0;
        }
        let delta = ten_pow(step);
        if delta >= index {
            index = BigUint::zero();
        } else {
            index -= &delta;
        }
        steps_taken += 1;
        size = probe_size(e, rules, &index, x).expect("walk only revisits valid indices");
        if size.at_least(x) && index < best_sound {
            best_sound = index.clone();
        }
    }
    let candidate = &index + ten_pow(step);
    match probe_size(e, rules, &candidate, x) {
        Some(s) if s.at_least(x) => Ok(candidate),
        _ => Ok(best_sound),
    }
}

/// Index bounds for the byte interval `[a, b)`, built from two
/// `estimate_index` runs. On finite languages a target beyond the largest
/// program clamps to the end of the enumeration so that callers see an
/// empty-or-short interval rather than an error.
pub fn interval_bounds(
    e: &Enumeration,
    rules: &RenderRules,
    a: u64,
    b: u64,
    params: &SampleParams,
) -> Result<IndexBounds, SampleError> {
    let bound_for = |x: u64| -> Result<BigUint, SampleError> {
        match estimate_index(e, rules, x, params) {
            Ok(i) => Ok(i),
            Err(SampleError::SizeUnreachable { .. }) => {
                Ok(e.total_trees().expect("unreachable size implies finite"))
            }
            Err(other) => Err(other),
        }
    };
    let lo = bound_for(a)?;
    let hi = bound_for(b)?;
    let hi = hi.max(lo.clone());
    Ok(IndexBounds { lo, hi })
}

fn bucket_rng(seed: u64, bucket: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(bucket as u64).to_le_bytes());
    bytes[16..26].copy_from_slice(b"cq-sampler");
    ChaCha8Rng::from_seed(bytes)
}

fn downsample(samples: &mut Vec<Sample>, n: u64, rng: &mut ChaCha8Rng) {
    let len = samples.len();
    let n = n as usize;
    for i in 0..n {
        let j = rng.gen_range(i..len);
        samples.swap(i, j);
    }
    samples.truncate(n);
    samples.sort_by(|x, y| x.index.cmp(&y.index));
}

/// One interval-sampling job: probe, filter to `[byte_lo, byte_hi)`,
/// downsample or widen, keep the larger candidate set (ties favor the newer).
fn sample_interval(
    e: &Enumeration,
    rules: &RenderRules,
    params: &SampleParams,
    bounds: &IndexBounds,
    byte_lo: u64,
    byte_hi: u64,
    bucket: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Sample>, u64) {
    let total = e.total_trees();
    let clamp = |v: BigUint| match &total {
        Some(t) => v.min(t.clone()),
        None => v,
    };
    let mut best: Vec<Sample> = Vec::new();
    let mut step = 0u32;
    let mut start = bounds.lo.clone();
    let mut end = clamp(bounds.hi.clone());
    while (best.len() as u64) < params.n && step < params.max_tries {
        let grid_n = params.alpha * params.n * (step as u64 + 1);
        let mut curr: Vec<Sample> = Vec::new();
        if start < end {
            let span = &end - &start;
            let mut stride = span / grid_n;
            if stride.is_zero() {
                stride = BigUint::one();
            }
            let mut index = start.clone();
            while index < end {
                // Trees whose token bytes alone exceed the window are never
                // materialized.
                let tree = e
                    .index_to_tree_bounded(&index, byte_hi - 1)
                    .expect("index below clamped end");
                if let Some(tree) = tree {
                    let size = rendered_size(&tree, e.rtg(), rules);
                    if size >= byte_lo && size < byte_hi {
                        curr.push(Sample {
                            index: index.clone(),
                            text: render(&tree, e.rtg(), rules),
                            size,
                            bucket,
                        });
                    }
                }
                index += &stride;
            }
        }
        if (curr.len() as u64) > params.n {
            downsample(&mut curr, params.n, rng);
        }
        if curr.len() >= best.len() {
            best = curr;
        }
        step += 1;
        start /= params.beta;
        end = clamp(end * params.beta);
    }
    let shortfall = params.n - best.len() as u64;
    (best, shortfall)
}

/// Samples up to `params.n` programs with sizes in `[params.a, params.b)`
/// between the given index bounds. Shortfall is reported in the result, not
/// raised.
pub fn sample_program_interval(
    e: &Enumeration,
    rules: &RenderRules,
    params: &SampleParams,
    bounds: &IndexBounds,
) -> Result<SampleSet, SampleError> {
    params.validate()?;
    let mut rng = bucket_rng(params.seed, 0);
    let (samples, shortfall) =
        sample_interval(e, rules, params, bounds, params.a, params.b, 0, &mut rng);
    Ok(SampleSet {
        samples,
        params: params.clone(),
        shortfall: vec![shortfall],
    })
}

/// Bucketed campaign sampler: partitions `[params.a, params.b)` into
/// `num_buckets` equal byte sub-ranges and samples `per_bucket_n` programs in
/// each. Initial index bounds are consecutive (one bucket's upper bound is
/// the next one's lower); retries may overlap index ranges, but the byte
/// filters keep buckets disjoint, so no program appears twice.
pub fn bucketed_sample(
    e: &Enumeration,
    rules: &RenderRules,
    num_buckets: usize,
    per_bucket_n: u64,
    params: &SampleParams,
) -> Result<SampleSet, SampleError> {
    let mut params = params.clone();
    params.n = per_bucket_n;
    params.validate()?;
    let span = params.b - params.a;
    if num_buckets == 0 || span % num_buckets as u64 != 0 {
        return Err(SampleError::BucketDivisibility {
            span,
            buckets: num_buckets as u64,
        });
    }
    let width = span / num_buckets as u64;

    let mut boundaries = Vec::with_capacity(num_buckets + 1);
    for t in 0..=num_buckets {
        let x = params.a + t as u64 * width;
        let bound = match estimate_index(e, rules, x, &params) {
            Ok(i) => i,
            Err(SampleError::SizeUnreachable { .. }) => {
                e.total_trees().expect("unreachable size implies finite")
            }
            Err(other) => return Err(other),
        };
        boundaries.push(bound);
    }
    for t in 1..boundaries.len() {
        if boundaries[t] < boundaries[t - 1] {
            boundaries[t] = boundaries[t - 1].clone();
        }
    }

    let jobs: Vec<(usize, IndexBounds, u64, u64)> = (0..num_buckets)
        .map(|t| {
            let bounds = IndexBounds {
                lo: boundaries[t].clone(),
                hi: boundaries[t + 1].clone(),
            };
            let lo_byte = params.a + t as u64 * width;
            (t, bounds, lo_byte, lo_byte + width)
        })
        .collect();

    // Buckets run as independent jobs; each owns an RNG stream derived from
    // (seed, bucket ordinal), so the outcome is schedule-independent.
    let results: Vec<(Vec<Sample>, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(t, bounds, lo, hi)| {
                let params = &params;
                scope.spawn(move || {
                    let mut rng = bucket_rng(params.seed, *t);
                    sample_interval(e, rules, params, bounds, *lo, *hi, *t, &mut rng)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut samples = Vec::new();
    let mut shortfall = Vec::with_capacity(num_buckets);
    for (bucket_samples, missing) in results {
        samples.extend(bucket_samples);
        shortfall.push(missing);
    }
    Ok(SampleSet {
        samples,
        params,
        shortfall,
    })
}
