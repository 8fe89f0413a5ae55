use std::fs;
use std::path::Path;

use fibcode::channel::{inject, ErrorSpec, MessageSampler, TrialConfig, TrialRunner};
use fibcode::codec::{bits_from_hex, bits_to_hex, is_minimal, pack_message, unpack_message, CodecError};
use fibcode::correction::{detect, Corrector, Entry};
use fibcode::fib::Mat2;
use fibcode::redundancy::redundancy as redundancy_figures;
use fibcode::wire::{deserialize, serialize, WireCodeword};
use fibcode::{decode as plain_decode, encode as encode_message, Message, Profile, ReceivedMatrix};
use num_bigint::BigInt;

use crate::report::{sign_policy, StatsConfig, StatsOptions, StatsReport};
use crate::{CliError, FormatArg, SamplerArg, SignArg};

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn load(path: &Path) -> Result<WireCodeword, CliError> {
    let bytes = fs::read(path).map_err(|e| failure(format!("cannot read {}: {e}", path.display())))?;
    deserialize(&bytes).map_err(|e| failure(format!("cannot load {}: {e}", path.display())))
}

fn store(path: &Path, w: &WireCodeword) -> Result<(), CliError> {
    let bytes = serialize(w).map_err(failure)?;
    fs::write(path, bytes).map_err(|e| failure(format!("cannot write {}: {e}", path.display())))
}

fn join(entries: &[BigInt; 4]) -> String {
    entries.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn encode(n: u32, profile: Profile, bits: Option<&str>, matrix: Option<&[String]>, out: &Path) -> Result<(), CliError> {
    let (msg, k) = match (bits, matrix) {
        (Some(hex), None) => {
            let bits = bits_from_hex(hex).map_err(usage)?;
            let msg = pack_message(&bits, n).map_err(|e| match e {
                CodecError::Parameters { .. } | CodecError::BitLength(_) => usage(e),
                other => failure(other),
            })?;
            if profile == Profile::Minimal && !is_minimal(msg.matrix()) {
                return Err(failure(format!(
                    "packed message {} is not minimal; encode it with --profile unrestricted",
                    msg.matrix()
                )));
            }
            let k = u32::try_from(bits.len()).map_err(|_| usage("bitstream too long"))?;
            (msg, k)
        }
        (None, Some(m)) => {
            let parsed: Vec<BigInt> = m
                .iter()
                .map(|s| s.trim().parse::<BigInt>().map_err(|_| usage(format!("not an integer: {s:?}"))))
                .collect::<Result<_, _>>()?;
            let entries: [BigInt; 4] = parsed.try_into().map_err(|_| usage("--matrix takes four entries"))?;
            (Message::new(Mat2 { entries }, n, profile).map_err(failure)?, 0)
        }
        _ => return Err(usage("exactly one of --bits and --matrix is required")),
    };
    if n % 2 == 0 {
        eprintln!("warning: even order {n}; encoding works but correction needs an odd order");
    }
    let codeword = encode_message(&msg);
    println!("codeword: {}", join(&codeword.entries));
    println!("check: {}", codeword.check);
    store(out, &WireCodeword { codeword, k })
}

pub fn decode(input: &Path, no_correct: bool, profile: Profile) -> Result<(), CliError> {
    let w = load(input)?;
    let r = ReceivedMatrix::from(&w.codeword);
    if no_correct {
        let decoded = plain_decode(&w.codeword);
        return match (detect(&r), decoded) {
            (true, Ok(msg)) => {
                print_message(&msg, w.k)?;
                println!("diagnosis: NO_ERROR");
                println!("stage: detect");
                println!("error: [[0,0],[0,0]]");
                Ok(())
            }
            (clean, decoded) => {
                println!("diagnosis: ERROR_DETECTED");
                let why = match decoded {
                    Err(e) if clean => e.to_string(),
                    _ => "determinant check failed".to_string(),
                };
                Err(failure(why))
            }
        };
    }
    let corrector = Corrector::new(w.codeword.order, profile).map_err(failure)?;
    let report = corrector.correct(&r);
    if let Some(msg) = &report.message {
        print_message(msg, w.k)?;
    }
    println!("diagnosis: {}", report.diagnosis);
    match report.stage {
        Some(s) => println!("stage: {s}"),
        None => println!("stage: none"),
    }
    if let Some(e) = &report.error {
        println!("error: {e}");
    }
    if let Some(note) = &report.note {
        println!("note: {note}");
    }
    if report.is_success() {
        Ok(())
    } else {
        Err(failure(format!("cannot correct: {}", report.diagnosis)))
    }
}

fn print_message(msg: &Message, k: u32) -> Result<(), CliError> {
    println!("message: {}", join(&msg.matrix().entries));
    if k > 0 {
        let bits = unpack_message(msg, k / 4).map_err(failure)?;
        println!("bits: {}", bits_to_hex(&bits));
    }
    Ok(())
}

pub struct CorruptOptions {
    pub errors: usize,
    pub bound: Option<u64>,
    pub seed: u64,
    pub positions: Option<Vec<String>>,
    pub sign: SignArg,
    pub nonnegative: bool,
}

fn parse_entry(s: &str) -> Result<Entry, CliError> {
    let t = s.trim().trim_start_matches(['c', 'C']);
    t.parse::<usize>()
        .ok()
        .and_then(|i| i.checked_sub(1))
        .and_then(Entry::from_index)
        .ok_or_else(|| usage(format!("bad position {s:?}; use c1..c4 or 1..4")))
}

fn error_spec(count: usize, seed: u64, bound: Option<u64>, sign: SignArg, nonnegative: bool) -> ErrorSpec {
    let mut spec = ErrorSpec::new(count, seed).with_sign(sign_policy(sign));
    spec.bound = bound;
    spec.require_nonnegative = nonnegative;
    spec
}

pub fn corrupt(input: &Path, opts: &CorruptOptions, out: &Path) -> Result<(), CliError> {
    let w = load(input)?;
    let mut spec = error_spec(opts.errors, opts.seed, opts.bound, opts.sign, opts.nonnegative);
    if let Some(p) = &opts.positions {
        spec = spec.with_positions(p.iter().map(|s| parse_entry(s)).collect::<Result<_, _>>()?);
    }
    let (received, error) = inject(&w.codeword, &spec).map_err(usage)?;
    println!("error: {error}");
    println!("received: {}", join(&received.entries));
    let codeword = fibcode::Codeword { entries: received.entries, order: received.order, check: received.check };
    store(out, &WireCodeword { codeword, k: w.k })
}

pub fn stats(opts: &StatsOptions, format: FormatArg, out: Option<&Path>) -> Result<(), CliError> {
    let sampler = match opts.sampler {
        SamplerArg::Uniform => MessageSampler::Uniform,
        SamplerArg::Nonsingular => MessageSampler::UniformNonSingular,
    };
    let spec = error_spec(opts.errors, opts.seed, opts.bound, opts.sign, opts.nonnegative);
    let config = TrialConfig { order: opts.n, profile: opts.profile, sampler, spec, trials: opts.trials };
    let runner = TrialRunner::new(config).map_err(usage)?;
    let stats = runner.run().map_err(failure)?;
    let default_bound = || {
        let f = fibcode::fib(opts.n.saturating_sub(1)).map_err(usage)?;
        Ok::<_, CliError>(u64::try_from(&f).unwrap_or(u64::MAX).max(1))
    };
    let bound = match opts.bound {
        Some(b) => b,
        None => default_bound()?,
    };
    let config = StatsConfig {
        n: opts.n,
        errors: opts.errors,
        trials: opts.trials,
        seed: opts.seed,
        bound,
        profile: opts.profile,
        sampler: match opts.sampler {
            SamplerArg::Uniform => "uniform",
            SamplerArg::Nonsingular => "nonsingular",
        },
        sign: sign_policy(opts.sign),
        nonnegative: opts.nonnegative,
        rng: "chacha8",
    };
    let report = StatsReport::new(config, stats);
    let text = match format {
        FormatArg::Json => report.to_json().map_err(failure)?,
        FormatArg::Csv => report.to_csv().map_err(failure)?,
    };
    match out {
        Some(path) => fs::write(path, text).map_err(|e| failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn redundancy(n: u32, k: u64) -> Result<(), CliError> {
    let r = redundancy_figures(n, k).map_err(usage)?;
    println!("n: {}", r.n);
    println!("k: {}", r.k);
    println!("admissible: {}", r.admissible);
    println!("l: {}", r.l_formula);
    println!("l_exact: {}", r.l_exact);
    println!("redundancy: {}", r.redundancy_formula);
    println!("redundancy_approx: {:.1}", r.redundancy_approx);
    println!("l_approx: {:.1}", r.l_approx);
    if !r.admissible {
        eprintln!("warning: 2^{} is not below F({}), so not every {}-bit block is a valid entry", k / 4, n - 1, k / 4);
    }
    Ok(())
}

pub fn fib(n: u32) -> Result<(), CliError> {
    println!("{}", fibcode::fib(n).map_err(usage)?);
    Ok(())
}
