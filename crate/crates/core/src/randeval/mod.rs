//! Randomness assessment of extracted secrets.
//!
//! A subset of NIST SP 800-22 (the eight tests below, each passing when all
//! of its p-values exceed the significance level) plus a plug-in byte entropy
//! estimate. The plug-in estimator is not the SP 800-90B min-entropy battery
//! and reads higher than it on short, structured inputs.

mod entropy;
pub mod nist;

use std::fmt::Write as _;

use rayon::prelude::*;

pub use entropy::{byte_entropy, estimate_byte_entropy};
pub use nist::Outcome;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Frequency,
    CumulativeSums,
    Runs,
    LinearComplexity,
    BlockFrequency,
    LongestRun,
    Spectral,
    Serial,
}

impl TestKind {
    pub const ALL: [TestKind; 8] = [
        TestKind::Frequency,
        TestKind::CumulativeSums,
        TestKind::Runs,
        TestKind::LinearComplexity,
        TestKind::BlockFrequency,
        TestKind::LongestRun,
        TestKind::Spectral,
        TestKind::Serial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Frequency => "Frequency",
            TestKind::CumulativeSums => "Cumulative sum",
            TestKind::Runs => "Runs",
            TestKind::LinearComplexity => "Linear complexity",
            TestKind::BlockFrequency => "Block frequency",
            TestKind::LongestRun => "Longest run",
            TestKind::Spectral => "FFT",
            TestKind::Serial => "Serial",
        }
    }

    fn key(self) -> &'static str {
        match self {
            TestKind::Frequency => "frequency",
            TestKind::CumulativeSums => "cumulative_sums",
            TestKind::Runs => "runs",
            TestKind::LinearComplexity => "linear_complexity",
            TestKind::BlockFrequency => "block_frequency",
            TestKind::LongestRun => "longest_run",
            TestKind::Spectral => "fft",
            TestKind::Serial => "serial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub block_frequency_m: usize,
    pub serial_m: usize,
    pub linear_complexity_m: usize,
    /// A test passes when every p-value exceeds this.
    pub alpha: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            block_frequency_m: 128,
            serial_m: 2,
            linear_complexity_m: 500,
            alpha: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub kind: TestKind,
    pub outcome: Outcome,
}

impl TestResult {
    pub fn p_values(&self) -> Option<&[f64]> {
        match &self.outcome {
            Outcome::PValues(p) => Some(p),
            Outcome::NotApplicable(_) => None,
        }
    }

    /// `None` when the test did not apply to this input.
    pub fn passed(&self, alpha: f64) -> Option<bool> {
        self.p_values().map(|ps| ps.iter().all(|&p| p > alpha))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub n_bits: usize,
    pub alpha: f64,
    pub results: Vec<TestResult>,
}

impl TestReport {
    pub fn get(&self, kind: TestKind) -> &TestResult {
        self.results
            .iter()
            .find(|r| r.kind == kind)
            .expect("every kind is run")
    }

    pub fn passed(&self, kind: TestKind) -> Option<bool> {
        self.get(kind).passed(self.alpha)
    }
}

/// Runs all eight tests on one sequence.
pub fn run_randomness_suite(bits: &[bool], params: &SuiteParams) -> Result<TestReport> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let results = TestKind::ALL
        .iter()
        .map(|&kind| {
            let outcome = match kind {
                TestKind::Frequency => nist::frequency(bits),
                TestKind::CumulativeSums => nist::cumulative_sums(bits),
                TestKind::Runs => nist::runs(bits),
                TestKind::LinearComplexity => {
                    nist::linear_complexity(bits, params.linear_complexity_m)
                }
                TestKind::BlockFrequency => nist::block_frequency(bits, params.block_frequency_m),
                TestKind::LongestRun => nist::longest_run(bits),
                TestKind::Spectral => nist::spectral(bits),
                TestKind::Serial => nist::serial(bits, params.serial_m),
            };
            TestResult { kind, outcome }
        })
        .collect();
    Ok(TestReport {
        n_bits: bits.len(),
        alpha: params.alpha,
        results,
    })
}

/// One row of a batch summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub kind: TestKind,
    /// Median over every p-value the test produced across the batch.
    pub median_p: Option<f64>,
    /// Passing sequences over sequences the test applied to.
    pub pass_fraction: Option<f64>,
    pub applicable: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub sequences: usize,
    pub alpha: f64,
    pub rows: Vec<SummaryRow>,
    /// Byte entropy of all sequences concatenated, when there is a full byte.
    pub byte_entropy: Option<f64>,
}

impl BatchSummary {
    pub fn row(&self, kind: TestKind) -> &SummaryRow {
        self.rows
            .iter()
            .find(|r| r.kind == kind)
            .expect("every kind is summarized")
    }

    /// Human-readable table: test, median p-value, % passing.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>10} {:>10} {:>8}",
            "Test", "median p", "% passing", "applied"
        );
        for row in &self.rows {
            let median = row.median_p.map_or("n/a".into(), |p| format!("{p:.4}"));
            let pass = row
                .pass_fraction
                .map_or("n/a".into(), |f| format!("{:.2}", 100.0 * f));
            let _ = writeln!(
                out,
                "{:<18} {:>10} {:>10} {:>8}",
                row.kind.name(),
                median,
                pass,
                row.applicable
            );
        }
        let _ = writeln!(out, "sequences: {}, alpha: {}", self.sequences, self.alpha);
        if let Some(h) = self.byte_entropy {
            let _ = writeln!(out, "byte entropy (plug-in): {h:.4} bits/byte");
        }
        out
    }

    /// Flat `key = value` form of the same table.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sequences={}", self.sequences);
        let _ = writeln!(out, "alpha={}", self.alpha);
        for row in &self.rows {
            let key = row.kind.key();
            let fmt = |v: Option<f64>| v.map_or("na".to_string(), |x| format!("{x:.6}"));
            let _ = writeln!(out, "{key}.median_p_value={}", fmt(row.median_p));
            let _ = writeln!(
                out,
                "{key}.percent_passing={}",
                fmt(row.pass_fraction.map(|f| 100.0 * f))
            );
            let _ = writeln!(out, "{key}.applicable={}", row.applicable);
        }
        if let Some(h) = self.byte_entropy {
            let _ = writeln!(out, "byte_entropy_bits_per_byte={h:.6}");
        }
        out
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("p-values are finite"));
    let mid = xs.len() / 2;
    Some(if xs.len().is_multiple_of(2) {
        (xs[mid - 1] + xs[mid]) / 2.0
    } else {
        xs[mid]
    })
}

/// Aggregates per-sequence reports.
pub fn summarize(reports: &[TestReport], alpha: f64) -> BatchSummary {
    let rows = TestKind::ALL
        .iter()
        .map(|&kind| {
            let results: Vec<&TestResult> = reports.iter().map(|r| r.get(kind)).collect();
            let p_values: Vec<f64> = results
                .iter()
                .filter_map(|r| r.p_values())
                .flatten()
                .copied()
                .collect();
            let verdicts: Vec<bool> = results.iter().filter_map(|r| r.passed(alpha)).collect();
            let applicable = verdicts.len();
            let pass_fraction = (applicable > 0)
                .then(|| verdicts.iter().filter(|&&v| v).count() as f64 / applicable as f64);
            SummaryRow {
                kind,
                median_p: median(p_values),
                pass_fraction,
                applicable,
            }
        })
        .collect();
    BatchSummary {
        sequences: reports.len(),
        alpha,
        rows,
        byte_entropy: None,
    }
}

/// Runs the suite on every sequence in parallel and summarizes.
pub fn evaluate_batch(sequences: &[Vec<bool>], params: &SuiteParams) -> Result<BatchSummary> {
    let reports = sequences
        .par_iter()
        .map(|bits| run_randomness_suite(bits, params))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = summarize(&reports, params.alpha);
    let all: Vec<bool> = sequences.iter().flatten().copied().collect();
    summary.byte_entropy = estimate_byte_entropy(&all).ok();
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::bits::parse_bit_string;

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(
            run_randomness_suite(&[], &SuiteParams::default()),
            Err(Error::EmptyInput)
        );
    }

    #[test]
    fn short_inputs_mark_tests_not_applicable() {
        let report = run_randomness_suite(
            &parse_bit_string("1011010101").unwrap(),
            &SuiteParams::default(),
        )
        .unwrap();
        assert_eq!(report.passed(TestKind::Frequency), Some(true));
        assert_eq!(report.passed(TestKind::LongestRun), None);
        assert_eq!(report.passed(TestKind::LinearComplexity), None);
        assert_eq!(report.passed(TestKind::BlockFrequency), None);
    }

    #[test]
    fn biased_input_fails_frequency() {
        let report = run_randomness_suite(&[true; 100], &SuiteParams::default()).unwrap();
        assert_eq!(report.passed(TestKind::Frequency), Some(false));
    }

    #[test]
    fn random_batch_summary() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let seqs: Vec<Vec<bool>> = (0..20)
            .map(|_| (0..4096).map(|_| rng.gen()).collect())
            .collect();
        let summary = evaluate_batch(&seqs, &SuiteParams::default()).unwrap();
        assert_eq!(summary.sequences, 20);
        for row in &summary.rows {
            assert_eq!(row.applicable, 20, "{:?}", row.kind);
            let p = row.median_p.unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(summary.byte_entropy.unwrap() > 7.0);
        let kv = summary.to_kv();
        assert!(kv.contains("frequency.percent_passing="));
        assert!(summary.to_table().contains("Linear complexity"));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }
}
