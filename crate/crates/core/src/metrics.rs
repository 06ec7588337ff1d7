//! CQ and LCQ computation over campaign results, plus multi-run aggregation.
//!
//! CQ is the percentage of accepted programs over all sampled programs below
//! the size bound. LCQ restricts that ratio to programs whose size lies in
//! the closed window `[x - epsilon, x + epsilon]`; an empty window makes LCQ
//! undefined at that point, which is distinct from an LCQ of zero (a gap in
//! the sampled sizes, not a region of rejections). Timeouts and crashes count
//! against the numerator but stay in the denominator, so the denominator
//! remains the full sample. Both quantities are estimators computed over the
//! sampled set, not the full language.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{CampaignResult, Verdict, VerdictCounts};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricParams {
    /// Size bound S: programs measured are those below S bytes.
    pub size_bound: u64,
    /// LCQ window radius.
    pub epsilon: u64,
    /// x-axis stride of LCQ curves.
    pub lcq_step: u64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            size_bound: 256,
            epsilon: 5,
            lcq_step: 1,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.size_bound == 0 {
            return Err(MetricsError::InvalidParams("size_bound must be > 0".into()));
        }
        if self.lcq_step == 0 {
            return Err(MetricsError::InvalidParams("lcq_step must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("CQ is undefined over an empty campaign")]
    EmptyCampaign,
    #[error("aggregation needs at least one run")]
    NoRuns,
    #[error("runs mix languages: `{a}` vs `{b}`")]
    MixedLanguages { a: String, b: String },
    #[error("invalid metric parameters: {0}")]
    InvalidParams(String),
}

/// One point of an LCQ curve. `lcq` is `None` where the window holds no
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: u64,
    pub lcq: Option<f64>,
    pub window_population: u64,
}

/// Summary of a single campaign run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub cq: f64,
    pub counts: VerdictCounts,
}

/// Aggregated report over one or more runs of the same language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CQReport {
    pub language: String,
    /// Mean CQ over runs.
    pub cq: f64,
    pub per_run: Vec<RunSummary>,
    /// 100 * sample standard deviation / mean, `None` for a single run.
    pub relative_std_dev: Option<f64>,
    /// Pointwise mean over runs with a defined value at each x.
    pub lcq_curve: Vec<CurvePoint>,
    pub verdict_breakdown: VerdictCounts,
    pub params: MetricParams,
}

impl CQReport {
    pub fn per_run_cq(&self) -> Vec<f64> {
        self.per_run.iter().map(|r| r.cq).collect()
    }
}

/// Percentage of accepted programs over the whole sample.
pub fn compute_cq(campaign: &CampaignResult) -> Result<f64, MetricsError> {
    let total = campaign.results.len() as u64;
    if total == 0 {
        return Err(MetricsError::EmptyCampaign);
    }
    let accepted = campaign
        .results
        .iter()
        .filter(|r| r.verdict == Verdict::Accepted)
        .count() as u64;
    Ok(100.0 * accepted as f64 / total as f64)
}

/// LCQ at size `x`: acceptance percentage over samples with
/// `x - epsilon <= size <= x + epsilon`, or `None` when that window is empty.
pub fn compute_lcq(campaign: &CampaignResult, x: u64, params: &MetricParams) -> Option<f64> {
    let lo = x.saturating_sub(params.epsilon);
    let hi = x + params.epsilon;
    let mut total = 0u64;
    let mut accepted = 0u64;
    for r in &campaign.results {
        if r.size >= lo && r.size <= hi {
            total += 1;
            if r.verdict == Verdict::Accepted {
                accepted += 1;
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(100.0 * accepted as f64 / total as f64)
    }
}

/// LCQ curve of one run at x = 0, step, 2*step, ... up to the size bound.
/// Undefined points are carried as gaps.
pub fn lcq_curve(campaign: &CampaignResult, params: &MetricParams) -> Vec<CurvePoint> {
    let mut points = Vec::new();
    let mut x = 0u64;
    while x <= params.size_bound {
        let lo = x.saturating_sub(params.epsilon);
        let hi = x + params.epsilon;
        let population = campaign
            .results
            .iter()
            .filter(|r| r.size >= lo && r.size <= hi)
            .count() as u64;
        points.push(CurvePoint {
            x,
            lcq: compute_lcq(campaign, x, params),
            window_population: population,
        });
        x += params.lcq_step;
    }
    points
}

/// Multi-run aggregation: per-run CQ, mean, relative standard deviation
/// (sample form, n-1), summed verdict breakdown, and the pointwise-mean LCQ
/// curve over runs with defined values.
pub fn aggregate_runs(
    runs: &[CampaignResult],
    params: &MetricParams,
) -> Result<CQReport, MetricsError> {
    params.validate()?;
    if runs.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    let language = runs[0].language.clone();
    for run in runs {
        if run.language != language {
            return Err(MetricsError::MixedLanguages {
                a: language,
                b: run.language.clone(),
            });
        }
    }

    let mut per_run = Vec::with_capacity(runs.len());
    let mut breakdown = VerdictCounts::default();
    for run in runs {
        per_run.push(RunSummary {
            run_id: run.run_id.clone(),
            cq: compute_cq(run)?,
            counts: run.counts,
        });
        breakdown.merge(&run.counts);
    }
    let cqs: Vec<f64> = per_run.iter().map(|r| r.cq).collect();
    let mean = cqs.iter().sum::<f64>() / cqs.len() as f64;
    let relative_std_dev = if cqs.len() < 2 {
        None
    } else {
        let variance =
            cqs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (cqs.len() - 1) as f64;
        Some(100.0 * variance.sqrt() / mean)
    };

    let curves: Vec<Vec<CurvePoint>> = runs.iter().map(|r| lcq_curve(r, params)).collect();
    let mut lcq_points = Vec::with_capacity(curves[0].len());
    for i in 0..curves[0].len() {
        let x = curves[0][i].x;
        let defined: Vec<f64> = curves.iter().filter_map(|c| c[i].lcq).collect();
        let population = curves.iter().map(|c| c[i].window_population).sum();
        lcq_points.push(CurvePoint {
            x,
            lcq: if defined.is_empty() {
                None
            } else {
                Some(defined.iter().sum::<f64>() / defined.len() as f64)
            },
            window_population: population,
        });
    }

    Ok(CQReport {
        language,
        cq: mean,
        per_run,
        relative_std_dev,
        lcq_curve: lcq_points,
        verdict_breakdown: breakdown,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::CompileResult;
    use num_bigint::BigUint;

    fn campaign(entries: &[(u64, Verdict)]) -> CampaignResult {
        let mut counts = VerdictCounts::default();
        let results = entries
            .iter()
            .enumerate()
            .map(|(i, (size, verdict))| {
                counts.add(*verdict);
                CompileResult {
                    index: BigUint::from(i as u64),
                    bucket: 0,
                    size: *size,
                    verdict: *verdict,
                    exit_code: Some(0),
                    duration_ms: 1,
                    stderr_head: String::new(),
                }
            })
            .collect();
        CampaignResult {
            language: "toy".to_string(),
            run_id: "seed0-0".to_string(),
            results,
            counts,
        }
    }

    fn acc(n: usize) -> Vec<(u64, Verdict)> {
        (0..n).map(|i| (i as u64 % 40, Verdict::Accepted)).collect()
    }

    #[test]
    fn cq_is_acceptance_percentage() {
        let mut entries = acc(48);
        entries.extend((0..52).map(|i| (i as u64 % 40, Verdict::Rejected)));
        assert_eq!(compute_cq(&campaign(&entries)).unwrap(), 48.0);
    }

    #[test]
    fn cq_zero_when_nothing_accepted() {
        let entries: Vec<_> = (0..17).map(|i| (i as u64, Verdict::Rejected)).collect();
        assert_eq!(compute_cq(&campaign(&entries)).unwrap(), 0.0);
    }

    #[test]
    fn cq_undefined_on_empty_campaign() {
        assert_eq!(compute_cq(&campaign(&[])), Err(MetricsError::EmptyCampaign));
    }

    #[test]
    fn timeouts_and_crashes_stay_in_denominator() {
        let entries = vec![
            (10, Verdict::Accepted),
            (11, Verdict::Timeout),
            (12, Verdict::Crashed),
            (13, Verdict::Rejected),
        ];
        assert_eq!(compute_cq(&campaign(&entries)).unwrap(), 25.0);
    }

    #[test]
    fn lcq_window_examples() {
        let c = campaign(&[
            (10, Verdict::Accepted),
            (12, Verdict::Rejected),
            (30, Verdict::Accepted),
        ]);
        let m = MetricParams {
            epsilon: 5,
            ..MetricParams::default()
        };
        assert_eq!(compute_lcq(&c, 11, &m), Some(50.0));
        let m0 = MetricParams {
            epsilon: 0,
            ..MetricParams::default()
        };
        assert_eq!(compute_lcq(&c, 30, &m0), Some(100.0));
        let m1 = MetricParams {
            epsilon: 1,
            ..MetricParams::default()
        };
        assert_eq!(compute_lcq(&c, 20, &m1), None);
    }

    #[test]
    fn lcq_window_is_closed_on_both_ends() {
        let c = campaign(&[(5, Verdict::Accepted), (15, Verdict::Rejected)]);
        let m = MetricParams {
            epsilon: 5,
            ..MetricParams::default()
        };
        // Window [5, 15] includes both samples.
        assert_eq!(compute_lcq(&c, 10, &m), Some(50.0));
        // Window [6, 16] excludes the first.
        assert_eq!(compute_lcq(&c, 11, &m), Some(0.0));
    }

    #[test]
    fn curve_of_all_accepted_is_constant_where_defined() {
        let c = campaign(&acc(30));
        let m = MetricParams {
            size_bound: 64,
            ..MetricParams::default()
        };
        for point in lcq_curve(&c, &m) {
            if let Some(v) = point.lcq {
                assert_eq!(v, 100.0);
                assert!(point.window_population > 0);
            } else {
                assert_eq!(point.window_population, 0);
            }
        }
    }

    #[test]
    fn aggregate_means_and_rsd() {
        // CQs 40, 50, 60 -> mean 50, sample stddev 10, rsd 20%.
        let runs: Vec<CampaignResult> = [4, 5, 6]
            .iter()
            .map(|&k| {
                let mut entries = acc(k);
                entries.extend((0..(10 - k)).map(|i| (i as u64, Verdict::Rejected)));
                campaign(&entries)
            })
            .collect();
        let report = aggregate_runs(&runs, &MetricParams::default()).unwrap();
        assert_eq!(report.per_run_cq(), vec![40.0, 50.0, 60.0]);
        assert_eq!(report.cq, 50.0);
        assert!((report.relative_std_dev.unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(report.verdict_breakdown.total(), 30);
    }

    #[test]
    fn identical_runs_have_zero_rsd() {
        let runs = vec![campaign(&acc(10)), campaign(&acc(10)), campaign(&acc(10))];
        let report = aggregate_runs(&runs, &MetricParams::default()).unwrap();
        assert_eq!(report.relative_std_dev, Some(0.0));
    }

    #[test]
    fn single_run_rsd_not_applicable() {
        let report = aggregate_runs(&[campaign(&acc(5))], &MetricParams::default()).unwrap();
        assert_eq!(report.relative_std_dev, None);
        assert_eq!(report.cq, 100.0);
    }

    #[test]
    fn curve_means_average_defined_runs() {
        // Run 1: LCQ 40 around size 10; run 2: LCQ 60 there. Run 2 also has a
        // region run 1 lacks entirely.
        let run1 = campaign(&[
            (10, Verdict::Accepted),
            (10, Verdict::Accepted),
            (10, Verdict::Rejected),
            (10, Verdict::Rejected),
            (10, Verdict::Rejected),
        ]);
        let run2 = campaign(&[
            (10, Verdict::Accepted),
            (10, Verdict::Accepted),
            (10, Verdict::Accepted),
            (10, Verdict::Rejected),
            (10, Verdict::Rejected),
            (40, Verdict::Accepted),
        ]);
        let m = MetricParams {
            size_bound: 64,
            epsilon: 2,
            lcq_step: 1,
        };
        let report = aggregate_runs(&[run1, run2], &m).unwrap();
        let at = |x: u64| report.lcq_curve.iter().find(|p| p.x == x).unwrap().clone();
        assert_eq!(at(10).lcq, Some(50.0));
        // Only run 2 defines x = 40; the mean is over defined runs.
        assert_eq!(at(40).lcq, Some(100.0));
        assert_eq!(at(25).lcq, None);
        assert_eq!(at(25).window_population, 0);
    }

    #[test]
    fn mixed_languages_rejected() {
        let mut other = campaign(&acc(3));
        other.language = "other".to_string();
        assert!(matches!(
            aggregate_runs(&[campaign(&acc(3)), other], &MetricParams::default()),
            Err(MetricsError::MixedLanguages { .. })
        ));
    }
}
