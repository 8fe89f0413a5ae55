//! Seeded error injection and Monte-Carlo correction statistics.
//!
//! Every trial draws from its own `ChaCha8Rng`, seeded with the run seed and
//! switched to stream `trial_index`, so serial and parallel runs agree bit
//! for bit.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::codec::{encode, is_minimal, Codeword, Message, Profile};
use crate::correction::{CorrectionReport, Corrector, Diagnosis, Entry, ErrorMatrix, Failure, ReceivedMatrix};
use crate::fib::{fib_unchecked, Mat2};

/// Attempts per position before giving up on a nonnegative corrupted entry.
const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("error count {0} exceeds 4")]
    Count(usize),
    #[error("{given} positions given for {count} errors")]
    PositionCount { count: usize, given: usize },
    #[error("duplicate error position {0}")]
    DuplicatePosition(Entry),
    #[error("magnitude bound must be at least 1")]
    Bound,
    #[error("order {0} is not an odd order with a nonempty message space")]
    Order(u32),
    #[error("cannot keep {entry} nonnegative with errors of magnitude at most {bound}")]
    Nonnegative { entry: Entry, bound: u64 },
    #[error("order {0} is too large for the message sampler")]
    SamplerRange(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignPolicy {
    #[default]
    Both,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Positions {
    #[default]
    Random,
    Fixed(Vec<Entry>),
}

/// How errors are drawn: `count` distinct positions, magnitudes uniform in
/// `[1, bound]`, signs per `sign`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorSpec {
    pub count: usize,
    pub positions: Positions,
    /// `None` means `F_{n-1}`.
    pub bound: Option<u64>,
    pub sign: SignPolicy,
    pub seed: u64,
    /// Redraw an error whenever it would make its entry negative.
    pub require_nonnegative: bool,
}

impl ErrorSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        ErrorSpec { count, positions: Positions::Random, bound: None, sign: SignPolicy::Both, seed, require_nonnegative: false }
    }

    pub fn with_bound(mut self, bound: u64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_positions(mut self, positions: Vec<Entry>) -> Self {
        self.positions = Positions::Fixed(positions);
        self
    }

    pub fn with_sign(mut self, sign: SignPolicy) -> Self {
        self.sign = sign;
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.require_nonnegative = true;
        self
    }

    fn validate(&self) -> Result<(), ChannelError> {
        if self.count > 4 {
            return Err(ChannelError::Count(self.count));
        }
        if self.bound == Some(0) {
            return Err(ChannelError::Bound);
        }
        if let Positions::Fixed(p) = &self.positions {
            if p.len() != self.count {
                return Err(ChannelError::PositionCount { count: self.count, given: p.len() });
            }
            for (i, e) in p.iter().enumerate() {
                if p[..i].contains(e) {
                    return Err(ChannelError::DuplicatePosition(*e));
                }
            }
        }
        Ok(())
    }

    fn bound_for(&self, order: u32) -> u64 {
        self.bound.unwrap_or_else(|| fib_unchecked(order.saturating_sub(1)).to_u64().unwrap_or(u64::MAX).max(1))
    }
}

/// `C̄ = C + E`; the check value travels unchanged.
pub fn apply_error(c: &Codeword, e: &ErrorMatrix) -> ReceivedMatrix {
    ReceivedMatrix {
        entries: std::array::from_fn(|i| &c.entries[i] + &e.entries[i]),
        order: c.order,
        check: c.check.clone(),
    }
}

/// The generator for one trial (or for stream 0 of a single injection).
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_positions(spec: &ErrorSpec, rng: &mut ChaCha8Rng) -> Vec<Entry> {
    match &spec.positions {
        Positions::Fixed(p) => p.clone(),
        Positions::Random => {
            let mut all = Entry::ALL.to_vec();
            // partial Fisher–Yates
            for i in 0..spec.count {
                let j = rng.random_range(i..4);
                all.swap(i, j);
            }
            all.truncate(spec.count);
            all.sort();
            all
        }
    }
}

fn draw_error(sign: SignPolicy, bound: u64, rng: &mut ChaCha8Rng) -> BigInt {
    let mag = BigInt::from(rng.random_range(1..=bound));
    let negative = match sign {
        SignPolicy::Positive => false,
        SignPolicy::Negative => true,
        SignPolicy::Both => rng.random_bool(0.5),
    };
    if negative {
        -mag
    } else {
        mag
    }
}

/// Injects errors using a caller-supplied generator.
pub fn inject_with(c: &Codeword, spec: &ErrorSpec, rng: &mut ChaCha8Rng) -> Result<(ReceivedMatrix, ErrorMatrix), ChannelError> {
    spec.validate()?;
    let bound = spec.bound_for(c.order);
    let mut err = ErrorMatrix::zero();
    for entry in draw_positions(spec, rng) {
        let current = &c.entries[entry.index()];
        let mut attempts = 0;
        let e = loop {
            let e = draw_error(spec.sign, bound, rng);
            if !spec.require_nonnegative || !(current + &e).is_negative() {
                break e;
            }
            attempts += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(ChannelError::Nonnegative { entry, bound });
            }
        };
        err.entries[entry.index()] = e;
    }
    Ok((apply_error(c, &err), err))
}

/// Injects errors drawn from stream 0 of `spec.seed`.
pub fn inject(c: &Codeword, spec: &ErrorSpec) -> Result<(ReceivedMatrix, ErrorMatrix), ChannelError> {
    inject_with(c, spec, &mut trial_rng(spec.seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSampler {
    /// Uniform over every valid message of the profile.
    #[default]
    Uniform,
    /// Uniform over valid messages with `det M != 0`.
    UniformNonSingular,
}

/// Draws a valid message by rejection from `[1, F_{n-1})^4`.
pub fn sample_message(order: u32, profile: Profile, sampler: MessageSampler, rng: &mut ChaCha8Rng) -> Result<Message, ChannelError> {
    let bound = fib_unchecked(order.saturating_sub(1)).to_u64().ok_or(ChannelError::SamplerRange(order))?;
    if bound < 2 || (bound < 3 && sampler == MessageSampler::UniformNonSingular) {
        return Err(ChannelError::Order(order));
    }
    loop {
        let m = Mat2 { entries: std::array::from_fn(|_| BigInt::from(rng.random_range(1..bound))) };
        if profile == Profile::Minimal && !is_minimal(&m) {
            continue;
        }
        if sampler == MessageSampler::UniformNonSingular && m.det().is_zero() {
            continue;
        }
        return Ok(Message::new(m, order, profile).expect("sampled within bounds"));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    CorrectedExact,
    /// A verified repair that differs from the transmitted codeword.
    CorrectedWrong,
    Uncorrectable,
    Ambiguous,
}

impl Outcome {
    pub fn of(report: &CorrectionReport, truth: &Codeword) -> Outcome {
        match (&report.diagnosis, &report.recovered) {
            (Diagnosis::Uncorrectable(Failure::Ambiguous { .. }), _) => Outcome::Ambiguous,
            (Diagnosis::Uncorrectable(_), _) | (_, None) => Outcome::Uncorrectable,
            (_, Some(c)) if c.entries == truth.entries => Outcome::CorrectedExact,
            _ => Outcome::CorrectedWrong,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub order: u32,
    pub profile: Profile,
    pub sampler: MessageSampler,
    pub spec: ErrorSpec,
    pub trials: u64,
}

/// Everything about one trial, for callers that want more than counts.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub index: u64,
    pub message: Message,
    pub codeword: Codeword,
    pub received: ReceivedMatrix,
    pub error: ErrorMatrix,
    pub detected: bool,
    pub report: CorrectionReport,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TrialStats {
    pub trials: u64,
    /// Trials with injected errors that failed the determinant check.
    pub detected: u64,
    pub corrected_exact: u64,
    pub corrected_wrong: u64,
    pub uncorrectable: u64,
    pub ambiguous: u64,
    /// Trials with injected errors that still passed the determinant check.
    pub false_clean: u64,
    /// Corrected-exact trials by the stage that repaired them.
    pub stages: BTreeMap<String, u64>,
}

impl TrialStats {
    fn record(&mut self, r: &TrialRecord) {
        self.trials += 1;
        if r.error.weight() > 0 {
            if r.detected {
                self.detected += 1;
            } else {
                self.false_clean += 1;
            }
        }
        match r.outcome {
            Outcome::CorrectedExact => {
                self.corrected_exact += 1;
                let stage = r.report.stage.expect("successful repairs carry a stage");
                *self.stages.entry(stage.name().to_string()).or_default() += 1;
            }
            Outcome::CorrectedWrong => self.corrected_wrong += 1,
            Outcome::Uncorrectable => self.uncorrectable += 1,
            Outcome::Ambiguous => self.ambiguous += 1,
        }
    }

    fn merge(mut self, other: TrialStats) -> TrialStats {
        self.trials += other.trials;
        self.detected += other.detected;
        self.corrected_exact += other.corrected_exact;
        self.corrected_wrong += other.corrected_wrong;
        self.uncorrectable += other.uncorrectable;
        self.ambiguous += other.ambiguous;
        self.false_clean += other.false_clean;
        for (k, v) in other.stages {
            *self.stages.entry(k).or_default() += v;
        }
        self
    }

    /// Fraction of trials recovered exactly.
    pub fn exact_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.corrected_exact as f64 / self.trials as f64
        }
    }
}

/// A validated trial runner.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    config: TrialConfig,
    corrector: Corrector,
}

impl TrialRunner {
    pub fn new(config: TrialConfig) -> Result<Self, ChannelError> {
        config.spec.validate()?;
        let corrector = Corrector::new(config.order, config.profile).map_err(|_| ChannelError::Order(config.order))?;
        // fail early on an empty or unsampleable message space
        sample_message(config.order, config.profile, config.sampler, &mut trial_rng(0, 0))?;
        Ok(TrialRunner { config, corrector })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn run_one(&self, index: u64) -> Result<TrialRecord, ChannelError> {
        let cfg = &self.config;
        let mut rng = trial_rng(cfg.spec.seed, index);
        let message = sample_message(cfg.order, cfg.profile, cfg.sampler, &mut rng)?;
        let codeword = encode(&message);
        let (received, error) = inject_with(&codeword, &cfg.spec, &mut rng)?;
        let detected = !self.corrector.detect(&received);
        let report = self.corrector.correct(&received);
        let outcome = Outcome::of(&report, &codeword);
        Ok(TrialRecord { index, message, codeword, received, error, detected, report, outcome })
    }

    pub fn run(&self) -> Result<TrialStats, ChannelError> {
        (0..self.config.trials)
            .into_par_iter()
            .map(|i| {
                let rec = self.run_one(i)?;
                let mut s = TrialStats::default();
                s.record(&rec);
                Ok(s)
            })
            .try_reduce(TrialStats::default, |a, b| Ok(a.merge(b)))
    }
}

pub fn run_trials(config: TrialConfig) -> Result<TrialStats, ChannelError> {
    TrialRunner::new(config)?.run()
}
