//! Error detection and correction of up to three corrupted entries.
//!
//! The pipeline in [`Corrector::correct`] works in order of increasing error
//! count: no error, one error (quotients `x_i`), two errors (closed-form
//! interval repairs for different rows, Diophantine family for the same row)
//! and three errors (four guesses of the intact entry). Every candidate is
//! re-derived into a message, checked against the profile and re-encoded
//! before it is accepted, and a repair is only reported when it is the
//! unique candidate at its error count. Because each level enumerates every
//! admissible codeword at that distance, the output agrees with a
//! brute-force minimum-distance decoder up to three errors.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::codec::{Codeword, Message, Profile};
use crate::diophantine::solve_linear;
use crate::fib::{approx_interval, ApproxInterval, FibError, FibWindow, Mat2, RatioPosition};
use crate::int::Int;

/// Upper bound on candidates collected per hypothesis before giving up on
/// uniqueness. Anything above one is already an ambiguity.
const MAX_CANDIDATES: usize = 8;

/// A matrix entry `c1 .. c4`, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Entry {
    C1,
    C2,
    C3,
    C4,
}

impl Entry {
    pub const ALL: [Entry; 4] = [Entry::C1, Entry::C2, Entry::C3, Entry::C4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Entry> {
        Entry::ALL.get(i).copied()
    }

    pub fn row(self) -> Row {
        if self.index() < 2 {
            Row::First
        } else {
            Row::Second
        }
    }

    /// The other entry in the same row.
    pub fn partner(self) -> Entry {
        Entry::ALL[self.index() ^ 1]
    }

    fn side(self) -> Side {
        if self.index() % 2 == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Row {
    First,
    Second,
}

impl Row {
    pub fn other(self) -> Row {
        match self {
            Row::First => Row::Second,
            Row::Second => Row::First,
        }
    }

    fn left(self) -> usize {
        match self {
            Row::First => 0,
            Row::Second => 2,
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Row::First => "row 1",
            Row::Second => "row 2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// The untrusted matrix as it arrives, with the checking element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReceivedMatrix {
    pub entries: [BigInt; 4],
    pub order: u32,
    pub check: BigInt,
}

impl ReceivedMatrix {
    pub fn from_i64(entries: [i64; 4], order: u32, check: i64) -> Self {
        ReceivedMatrix { entries: entries.map(BigInt::from), order, check: BigInt::from(check) }
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2 { entries: self.entries.clone() }
    }
}

impl From<Codeword> for ReceivedMatrix {
    fn from(c: Codeword) -> Self {
        ReceivedMatrix { entries: c.entries, order: c.order, check: c.check }
    }
}

impl From<&Codeword> for ReceivedMatrix {
    fn from(c: &Codeword) -> Self {
        c.clone().into()
    }
}

/// `E` in `C̄ = C + E`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ErrorMatrix {
    pub entries: [BigInt; 4],
}

impl ErrorMatrix {
    pub fn zero() -> Self {
        ErrorMatrix { entries: std::array::from_fn(|_| BigInt::zero()) }
    }

    pub fn between(received: &[BigInt; 4], codeword: &[BigInt; 4]) -> Self {
        ErrorMatrix { entries: std::array::from_fn(|i| &received[i] - &codeword[i]) }
    }

    /// Number of nonzero entries.
    pub fn weight(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_zero()).count()
    }
}

impl fmt::Display for ErrorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]]")
    }
}

/// The pipeline stage that produced a repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Detect,
    Single,
    DoubleCross,
    DoubleSameRow,
    Triple,
}

impl Stage {
    pub const ALL: [Stage; 5] =
        [Stage::Detect, Stage::Single, Stage::DoubleCross, Stage::DoubleSameRow, Stage::Triple];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Detect => "detect",
            Stage::Single => "single",
            Stage::DoubleCross => "double_cross",
            Stage::DoubleSameRow => "double_same_row",
            Stage::Triple => "triple",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why no repair was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Correction needs an odd order `>= 3`.
    UnsupportedOrder(u32),
    OrderMismatch { expected: u32, found: u32 },
    /// A stage that requires a failed detection was handed a matrix whose
    /// determinant already matches.
    CleanInput,
    /// More than one admissible codeword at the same error count.
    Ambiguous { errors: usize, candidates: Vec<[BigInt; 4]> },
    /// No admissible codeword within three errors (or within the stage's
    /// hypothesis when a single stage is run on its own).
    NoCandidate,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::UnsupportedOrder(n) => write!(f, "order {n} is not an odd order >= 3"),
            Failure::OrderMismatch { expected, found } => {
                write!(f, "matrix has order {found}, corrector expects {expected}")
            }
            Failure::CleanInput => f.write_str("determinant check passes; nothing to correct"),
            Failure::Ambiguous { errors, candidates } => write!(
                f,
                "{} admissible codewords at {errors} error(s); refusing to choose",
                candidates.len()
            ),
            Failure::NoCandidate => f.write_str("no admissible codeword within reach"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnosis {
    NoError,
    Single(Entry),
    DoubleCross(Entry, Entry),
    DoubleSameRow(Row),
    /// Three errors; `intact` is the one entry that arrived unchanged.
    Triple { intact: Entry },
    Uncorrectable(Failure),
}

impl Diagnosis {
    pub fn is_success(&self) -> bool {
        !matches!(self, Diagnosis::Uncorrectable(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Diagnosis::NoError => "NO_ERROR",
            Diagnosis::Single(_) => "SINGLE",
            Diagnosis::DoubleCross(..) => "DOUBLE_CROSS",
            Diagnosis::DoubleSameRow(_) => "DOUBLE_SAME_ROW",
            Diagnosis::Triple { .. } => "TRIPLE",
            Diagnosis::Uncorrectable(Failure::Ambiguous { .. }) => "AMBIGUOUS",
            Diagnosis::Uncorrectable(_) => "UNCORRECTABLE",
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnosis::NoError => f.write_str("NO_ERROR"),
            Diagnosis::Single(e) => write!(f, "SINGLE({e})"),
            Diagnosis::DoubleCross(a, b) => write!(f, "DOUBLE_CROSS({a},{b})"),
            Diagnosis::DoubleSameRow(r) => write!(f, "DOUBLE_SAME_ROW({r})"),
            Diagnosis::Triple { intact } => write!(f, "TRIPLE(intact {intact})"),
            Diagnosis::Uncorrectable(why) => write!(f, "{}: {why}", self.label()),
        }
    }
}

/// How one guess of the triple-error procedure ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuessOutcome {
    /// The repaired row of the intact entry fell outside `[a, b]`.
    RejectedByInterval,
    /// The Diophantine equation for the other row has no integer solution.
    NoDiophantineSolution,
    /// Passed the interval check but no solution survived final verification.
    RejectedByFinalCheck,
    Survived(Vec<[BigInt; 4]>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessTrace {
    pub intact: Entry,
    pub outcome: GuessOutcome,
}

/// Instrumentation collected while correcting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub diophantine_solves: usize,
    pub integral_quotients: usize,
    pub triple_guesses: Vec<GuessTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionReport {
    pub diagnosis: Diagnosis,
    pub stage: Option<Stage>,
    pub recovered: Option<Codeword>,
    pub message: Option<Message>,
    pub error: Option<ErrorMatrix>,
    pub note: Option<String>,
    pub trace: Trace,
}

impl CorrectionReport {
    fn failure(why: Failure, trace: Trace) -> Self {
        let note = match &why {
            Failure::Ambiguous { candidates, .. } => Some(
                candidates
                    .iter()
                    .map(|c| Mat2 { entries: c.clone() }.to_string())
                    .collect::<Vec<_>>()
                    .join(" | "),
            ),
            _ => None,
        };
        CorrectionReport {
            diagnosis: Diagnosis::Uncorrectable(why),
            stage: None,
            recovered: None,
            message: None,
            error: None,
            note,
            trace,
        }
    }

    pub fn is_success(&self) -> bool {
        self.diagnosis.is_success()
    }
}

/// The row-ratio classification of a received matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub first: RatioPosition,
    pub second: RatioPosition,
}

impl Classification {
    /// The row that must contain the errors when exactly one row ratio is
    /// outside `[a, b]`; `None` when both are out or both are in.
    pub fn suspect_row(&self) -> Option<Row> {
        match (self.first == RatioPosition::Inside, self.second == RatioPosition::Inside) {
            (true, false) => Some(Row::Second),
            (false, true) => Some(Row::First),
            _ => None,
        }
    }

    pub fn row_inside(&self, row: Row) -> bool {
        match row {
            Row::First => self.first == RatioPosition::Inside,
            Row::Second => self.second == RatioPosition::Inside,
        }
    }
}

/// `x_i` as an exact fraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub numerator: BigInt,
    pub denominator: BigInt,
}

impl Quotient {
    /// The integer value, if the denominator is nonzero and divides.
    pub fn integral(&self) -> Option<BigInt> {
        if self.denominator.is_zero() {
            return None;
        }
        let (q, r) = self.numerator.div_rem(&self.denominator);
        r.is_zero().then_some(q)
    }
}

/// Entries and Fibonacci numbers below `2^SMALL_BITS` (and a check below
/// `2^(2·SMALL_BITS)`) keep every intermediate of the engine below `2^123`,
/// so such inputs run on `i128`.
const SMALL_BITS: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Pipeline,
    Single,
    Cross,
    SameRow(Row),
    Triple,
}

/// A candidate that passed verification.
#[derive(Debug, Clone)]
struct Candidate<T> {
    entries: [T; 4],
    message: [T; 4],
    diagnosis: Diagnosis,
    stage: Stage,
}

enum Settled<T> {
    Repaired(Candidate<T>),
    Ambiguous(usize, Vec<[T; 4]>),
    NoCandidate,
    CleanInput,
}

/// Result of scanning a Diophantine solution family for one row.
struct RowScan<T> {
    solvable: bool,
    rows: Vec<(T, T)>,
}

impl<T> Default for RowScan<T> {
    fn default() -> Self {
        RowScan { solvable: false, rows: Vec::new() }
    }
}

/// The correction pipeline over one integer backend.
#[derive(Debug, Clone)]
struct Engine<T> {
    prev: T,
    cur: T,
    next: T,
    profile: Profile,
}

impl<T: Int> Engine<T> {
    fn new(w: &FibWindow, profile: Profile) -> Option<Self> {
        Some(Engine {
            prev: T::from_bigint(&w.prev)?,
            cur: T::from_bigint(&w.cur)?,
            next: T::from_bigint(&w.next)?,
            profile,
        })
    }

    fn det(c: &[T; 4]) -> T {
        c[0].mul_ref(&c[3]).sub_ref(&c[1].mul_ref(&c[2]))
    }

    /// Same contract as [`ApproxInterval::locate`].
    fn locate(&self, num: &T, den: &T) -> RatioPosition {
        if den.is_zero() {
            return if num.is_negative() { RatioPosition::Below } else { RatioPosition::Above };
        }
        let (num, den) = if den.is_negative() { (-num.clone(), -den.clone()) } else { (num.clone(), den.clone()) };
        if num.mul_ref(&self.cur) < den.mul_ref(&self.next) {
            RatioPosition::Below
        } else if num.mul_ref(&self.prev) > den.mul_ref(&self.cur) {
            RatioPosition::Above
        } else {
            RatioPosition::Inside
        }
    }

    fn positions(&self, c: &[T; 4]) -> Classification {
        Classification { first: self.locate(&c[0], &c[1]), second: self.locate(&c[2], &c[3]) }
    }

    /// Closed-form error of the suspect entry of a row whose other entry is
    /// trusted. Zero when the ratio is already inside `[a, b]`.
    ///
    /// The repaired value is the unique integer that puts the ratio strictly
    /// inside the interval, which is the true entry whenever the row encodes
    /// an in-bounds message.
    fn closed_form_error(&self, left: &T, right: &T, suspect: Side) -> T {
        let one = T::one();
        match (suspect, self.locate(left, right)) {
            (_, RatioPosition::Inside) => T::zero(),
            // smallest integer greater than left − right·b
            (Side::Left, RatioPosition::Above) => {
                left.mul_ref(&self.prev).sub_ref(&right.mul_ref(&self.cur)).div_floor(&self.prev).add_ref(&one)
            }
            // largest integer smaller than left − right·a
            (Side::Left, RatioPosition::Below) => {
                left.mul_ref(&self.cur).sub_ref(&right.mul_ref(&self.next)).div_ceil(&self.cur).sub_ref(&one)
            }
            // largest integer smaller than right − left/b
            (Side::Right, RatioPosition::Above) => {
                right.mul_ref(&self.cur).sub_ref(&left.mul_ref(&self.prev)).div_ceil(&self.cur).sub_ref(&one)
            }
            // smallest integer greater than right − left/a
            (Side::Right, RatioPosition::Below) => {
                right.mul_ref(&self.next).sub_ref(&left.mul_ref(&self.cur)).div_floor(&self.next).add_ref(&one)
            }
        }
    }

    fn closed_form_repair(&self, c: &[T; 4], suspect: Entry) -> T {
        let base = suspect.row().left();
        self.closed_form_error(&c[base], &c[base + 1], suspect.side())
    }

    /// One row of `C·Q^{-n}` for odd `n`.
    fn decode_row(&self, left: &T, right: &T) -> (T, T) {
        (
            self.cur.mul_ref(right).sub_ref(&self.prev.mul_ref(left)),
            self.cur.mul_ref(left).sub_ref(&self.next.mul_ref(right)),
        )
    }

    fn encode_row(&self, m: &(T, T)) -> (T, T) {
        (
            self.next.mul_ref(&m.0).add_ref(&self.cur.mul_ref(&m.1)),
            self.cur.mul_ref(&m.0).add_ref(&self.prev.mul_ref(&m.1)),
        )
    }

    fn row_valid(&self, m: &(T, T)) -> bool {
        let ok = |v: &T| v.is_positive() && v < &self.prev;
        ok(&m.0) && ok(&m.1)
    }

    /// Full acceptance test for a candidate codeword: determinant, both
    /// interval memberships, message bounds, profile, and a bit-exact
    /// re-encoding. Returns the message.
    fn verify(&self, c: &[T; 4], s: &T) -> Option<[T; 4]> {
        if &Self::det(c) != s {
            return None;
        }
        let pos = self.positions(c);
        if pos.first != RatioPosition::Inside || pos.second != RatioPosition::Inside {
            return None;
        }
        let r1 = self.decode_row(&c[0], &c[1]);
        let r2 = self.decode_row(&c[2], &c[3]);
        if !self.row_valid(&r1) || !self.row_valid(&r2) {
            return None;
        }
        if self.profile == Profile::Minimal && !minimal_rows(&r1, &r2) {
            return None;
        }
        let e1 = self.encode_row(&r1);
        let e2 = self.encode_row(&r2);
        if e1.0 != c[0] || e1.1 != c[1] || e2.0 != c[2] || e2.1 != c[3] {
            return None;
        }
        Some([r1.0, r1.1, r2.0, r2.1])
    }

    /// `x_1 .. x_4` as (numerator, denominator).
    fn quotients(c: &[T; 4], s: &T) -> [(T, T); 4] {
        let cross = c[1].mul_ref(&c[2]).add_ref(s);
        let diag = c[0].mul_ref(&c[3]).sub_ref(s);
        [
            (cross.clone(), c[3].clone()),
            (diag.clone(), c[2].clone()),
            (diag, c[1].clone()),
            (cross, c[0].clone()),
        ]
    }

    fn candidate(&self, c: [T; 4], s: &T, diagnosis: Diagnosis, stage: Stage) -> Option<Candidate<T>> {
        let message = self.verify(&c, s)?;
        Some(Candidate { entries: c, message, diagnosis, stage })
    }

    fn single_candidates(&self, c: &[T; 4], s: &T, trace: &mut Trace) -> Vec<Candidate<T>> {
        let mut out = Vec::new();
        for (entry, (num, den)) in Entry::ALL.into_iter().zip(Self::quotients(c, s)) {
            let i = entry.index();
            let value = if den.is_zero() {
                // the determinant does not depend on this entry; only the
                // interval can pin it down
                c[i].sub_ref(&self.closed_form_repair(c, entry))
            } else {
                let (q, rem) = num.div_rem(&den);
                if !rem.is_zero() {
                    continue;
                }
                trace.integral_quotients += 1;
                q
            };
            if value == c[i] {
                continue;
            }
            let mut cand = c.clone();
            cand[i] = value;
            out.extend(self.candidate(cand, s, Diagnosis::Single(entry), Stage::Single));
        }
        out
    }

    fn cross_candidates(&self, c: &[T; 4], s: &T, cls: &Classification) -> Vec<Candidate<T>> {
        // a single corrupted entry always pushes an in-bounds row strictly
        // outside [a, b]
        if cls.first == RatioPosition::Inside || cls.second == RatioPosition::Inside {
            return Vec::new();
        }
        let fix = |e: Entry| c[e.index()].sub_ref(&self.closed_form_repair(c, e));
        let firsts = [(Entry::C1, fix(Entry::C1)), (Entry::C2, fix(Entry::C2))];
        let seconds = [(Entry::C3, fix(Entry::C3)), (Entry::C4, fix(Entry::C4))];
        let mut out = Vec::new();
        for (e1, v1) in &firsts {
            for (e2, v2) in &seconds {
                let mut cand = c.clone();
                cand[e1.index()] = v1.clone();
                cand[e2.index()] = v2.clone();
                out.extend(self.candidate(cand, s, Diagnosis::DoubleCross(*e1, *e2), Stage::DoubleCross));
            }
        }
        out
    }

    /// All replacements `(left, right)` of `row` that satisfy the determinant
    /// equation with the other row `trusted`, decode within the message
    /// bounds and (under [`Profile::Minimal`]) keep the matrix minimal.
    ///
    /// Along the solution family the decoded row moves linearly in the
    /// parameter, so the admissible parameters form at most two intervals
    /// that are computed exactly and walked upwards, smallest first.
    fn scan_row(&self, trusted: (&T, &T), row: Row, s: &T, trace: &mut Trace) -> RowScan<T> {
        let (tl, tr) = trusted;
        let tm = self.decode_row(tl, tr);
        if !self.row_valid(&tm) {
            return RowScan::default();
        }
        trace.diophantine_solves += 1;
        // row 1 unknown: x·c4 − y·c3 = s      (x, y) = (c1, c2)
        // row 2 unknown: c1·y − c2·x = s      (x, y) = (c3, c4)
        let family = match row {
            Row::First => solve_linear(tr, tl, s),
            Row::Second => solve_linear(tl, tr, s),
        };
        let Ok(Some(family)) = family else {
            return RowScan::default();
        };
        let (x0, y0, sx, sy) = match row {
            Row::First => (family.x0, family.y0, family.step_x, family.step_y),
            Row::Second => (family.y0, family.x0, family.step_y, family.step_x),
        };
        // the step is the trusted row divided by its gcd, so the decoded row
        // advances by the trusted message row divided by the same gcd
        let m0 = self.decode_row(&x0, &y0);
        let g = tl.gcd(tr);
        let (u, v) = (tm.0.div_floor(&g), tm.1.div_floor(&g));

        let one = T::one();
        let top = self.prev.sub_ref(&one);
        let bounds = intersect(range_for(&m0.0, &u, &one, &top), range_for(&m0.1, &v, &one, &top));
        let mut ranges = Vec::new();
        if let Some(b) = bounds {
            if self.profile == Profile::Minimal {
                ranges.extend(intersect(Some(b.clone()), clause(&m0, &u, &v, &tm, true)));
                ranges.extend(intersect(Some(b), clause(&m0, &u, &v, &tm, false)));
                ranges.sort();
            } else {
                ranges.push(b);
            }
        }
        let mut rows = Vec::new();
        let mut last: Option<T> = None;
        'walk: for (lo, hi) in ranges {
            let mut t = match &last {
                Some(l) if l >= &lo => l.add_ref(&one),
                _ => lo,
            };
            while t <= hi {
                rows.push((x0.add_ref(&t.mul_ref(&sx)), y0.add_ref(&t.mul_ref(&sy))));
                if rows.len() >= MAX_CANDIDATES {
                    break 'walk;
                }
                last = Some(t.clone());
                t = t.add_ref(&one);
            }
        }
        RowScan { solvable: true, rows }
    }

    fn same_row_candidates(&self, c: &[T; 4], row: Row, s: &T, trace: &mut Trace) -> Vec<Candidate<T>> {
        let tb = row.other().left();
        let scan = self.scan_row((&c[tb], &c[tb + 1]), row, s, trace);
        let base = row.left();
        scan.rows
            .into_iter()
            .filter_map(|(x, y)| {
                let mut cand = c.clone();
                cand[base] = x;
                cand[base + 1] = y;
                self.candidate(cand, s, Diagnosis::DoubleSameRow(row), Stage::DoubleSameRow)
            })
            .collect()
    }

    fn triple_guess(&self, c: &[T; 4], intact: Entry, s: &T, trace: &mut Trace) -> (GuessOutcome, Vec<Candidate<T>>) {
        let partner = intact.partner();
        let mut fixed = c.clone();
        fixed[partner.index()] = c[partner.index()].sub_ref(&self.closed_form_repair(c, partner));

        let row = intact.row();
        let base = row.left();
        if self.locate(&fixed[base], &fixed[base + 1]) != RatioPosition::Inside {
            return (GuessOutcome::RejectedByInterval, Vec::new());
        }
        let other = row.other();
        let scan = self.scan_row((&fixed[base], &fixed[base + 1]), other, s, trace);
        let ob = other.left();
        let cands: Vec<Candidate<T>> = scan
            .rows
            .into_iter()
            .filter_map(|(x, y)| {
                let mut cand = fixed.clone();
                cand[ob] = x;
                cand[ob + 1] = y;
                self.candidate(cand, s, Diagnosis::Triple { intact }, Stage::Triple)
            })
            .collect();
        let trusted_valid = self.row_valid(&self.decode_row(&fixed[base], &fixed[base + 1]));
        let outcome = if !cands.is_empty() {
            GuessOutcome::Survived(cands.iter().map(|k| k.entries.clone().map(|v| v.to_bigint())).collect())
        } else if trusted_valid && !scan.solvable {
            GuessOutcome::NoDiophantineSolution
        } else {
            GuessOutcome::RejectedByFinalCheck
        };
        (outcome, cands)
    }

    fn triple_candidates(&self, c: &[T; 4], s: &T, trace: &mut Trace) -> Vec<Candidate<T>> {
        let mut all = Vec::new();
        for intact in Entry::ALL {
            let (outcome, cands) = self.triple_guess(c, intact, s, trace);
            trace.triple_guesses.push(GuessTrace { intact, outcome });
            all.extend(cands);
        }
        all
    }

    fn run(&self, op: Op, c: &[T; 4], s: &T, trace: &mut Trace) -> Settled<T> {
        let clean = &Self::det(c) == s;
        match op {
            Op::SameRow(row) => settle(self.same_row_candidates(c, row, s, trace), 2),
            _ if clean && op != Op::Pipeline => Settled::CleanInput,
            Op::Single => settle(self.single_candidates(c, s, trace), 1),
            Op::Cross => settle(self.cross_candidates(c, s, &self.positions(c)), 2),
            Op::Triple => settle(self.triple_candidates(c, s, trace), 3),
            Op::Pipeline => {
                if clean {
                    if let Some(message) = self.verify(c, s) {
                        let cand = Candidate { entries: c.clone(), message, diagnosis: Diagnosis::NoError, stage: Stage::Detect };
                        return Settled::Repaired(cand);
                    }
                    // determinant matches but the matrix is not an
                    // admissible codeword: keep going
                }
                let single = self.single_candidates(c, s, trace);
                if !single.is_empty() {
                    return settle(single, 1);
                }
                let cls = self.positions(c);
                let mut double = self.cross_candidates(c, s, &cls);
                if double.is_empty() {
                    for row in [Row::First, Row::Second] {
                        if cls.row_inside(row.other()) {
                            double.extend(self.same_row_candidates(c, row, s, trace));
                        }
                    }
                }
                if !double.is_empty() {
                    return settle(double, 2);
                }
                settle(self.triple_candidates(c, s, trace), 3)
            }
        }
    }
}

fn minimal_rows<T: Int>(r1: &(T, T), r2: &(T, T)) -> bool {
    (r1.0 >= r2.0 && r1.1 <= r2.1) || (r1.0 <= r2.0 && r1.1 >= r2.1)
}

/// Unique ⇒ repair, several ⇒ ambiguity, none ⇒ no candidate.
fn settle<T: Int>(mut cands: Vec<Candidate<T>>, errors: usize) -> Settled<T> {
    let mut seen = std::collections::HashSet::new();
    cands.retain(|c| seen.insert(c.entries.clone()));
    match cands.len() {
        0 => Settled::NoCandidate,
        1 => Settled::Repaired(cands.pop().unwrap()),
        _ => Settled::Ambiguous(errors, cands.into_iter().map(|c| c.entries).collect()),
    }
}

/// Integer `t` with `lo <= base + t·step <= hi`, for `step > 0`.
fn range_for<T: Int>(base: &T, step: &T, lo: &T, hi: &T) -> Option<(T, T)> {
    debug_assert!(step.is_positive());
    let t_lo = lo.sub_ref(base).div_ceil(step);
    let t_hi = hi.sub_ref(base).div_floor(step);
    (t_lo <= t_hi).then_some((t_lo, t_hi))
}

fn intersect<T: Int>(a: Option<(T, T)>, b: Option<(T, T)>) -> Option<(T, T)> {
    let (a, b) = (a?, b?);
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi).then_some((lo, hi))
}

/// Parameter range where the unknown row `(p, q) = m0 + t·(u, v)` satisfies
/// `p >= P and q <= Q` (`first`) or `p <= P and q >= Q`.
fn clause<T: Int>(m0: &(T, T), u: &T, v: &T, trusted: &(T, T), first: bool) -> Option<(T, T)> {
    let dp = trusted.0.sub_ref(&m0.0);
    let dq = trusted.1.sub_ref(&m0.1);
    let (lo, hi) = if first { (dp.div_ceil(u), dq.div_floor(v)) } else { (dq.div_ceil(v), dp.div_floor(u)) };
    (lo <= hi).then_some((lo, hi))
}

/// Detection and correction for one code order and message profile.
#[derive(Debug, Clone)]
pub struct Corrector {
    order: u32,
    profile: Profile,
    interval: ApproxInterval,
    big: Engine<BigInt>,
    small: Option<Engine<i128>>,
}

impl Corrector {
    /// Correction is defined for odd orders `n >= 3` only.
    pub fn new(order: u32, profile: Profile) -> Result<Self, FibError> {
        let interval = approx_interval(order)?;
        let w = interval.window();
        let big = Engine::new(w, profile).expect("BigInt holds every window");
        let small = if w.next.bits() < SMALL_BITS { Engine::new(w, profile) } else { None };
        Ok(Corrector { order, profile, interval, big, small })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn interval(&self) -> &ApproxInterval {
        &self.interval
    }

    /// True when `det C̄ = (-1)^n det M`. Errors of the form `U·C` with
    /// `det U = 1` pass this test.
    pub fn detect(&self, r: &ReceivedMatrix) -> bool {
        r.matrix().det() == -&r.check
    }

    /// Places both row ratios against `[a, b]`. Fails on a clean input.
    pub fn classify(&self, r: &ReceivedMatrix) -> Result<Classification, Failure> {
        self.check_order(r)?;
        if self.detect(r) {
            return Err(Failure::CleanInput);
        }
        Ok(self.big.positions(&r.entries))
    }

    /// The four quotients `x_1 .. x_4`, each the value its entry must take
    /// for the determinant check to hold with the other three unchanged.
    pub fn quotients(&self, r: &ReceivedMatrix) -> [Quotient; 4] {
        Engine::<BigInt>::quotients(&r.entries, &-&r.check)
            .map(|(numerator, denominator)| Quotient { numerator, denominator })
    }

    /// Error of `suspect` assuming its partner in the row is correct.
    pub fn closed_form_repair(&self, entries: &[BigInt; 4], suspect: Entry) -> BigInt {
        self.big.closed_form_repair(entries, suspect)
    }

    /// Repairs one entry in each row under a forced hypothesis, using only
    /// the interval (never the checking element). Returns the error matrix.
    pub fn repair_cross(&self, entries: &[BigInt; 4], first: Entry, second: Entry) -> ErrorMatrix {
        assert!(first.row() != second.row(), "cross repair needs one entry per row");
        let mut err = ErrorMatrix::zero();
        for e in [first, second] {
            err.entries[e.index()] = self.closed_form_repair(entries, e);
        }
        err
    }

    fn check_order(&self, r: &ReceivedMatrix) -> Result<(), Failure> {
        if r.order != self.order {
            return Err(Failure::OrderMismatch { expected: self.order, found: r.order });
        }
        Ok(())
    }

    fn dispatch(&self, r: &ReceivedMatrix, op: Op) -> CorrectionReport {
        let mut trace = Trace::default();
        if let Err(f) = self.check_order(r) {
            return CorrectionReport::failure(f, trace);
        }
        if let Some(small) = &self.small {
            let fits = r.entries.iter().all(|v| v.bits() < SMALL_BITS) && r.check.bits() < 2 * SMALL_BITS;
            if fits {
                let c = r.entries.clone().map(|v| i128::from_bigint(&v).expect("checked above"));
                let s = -i128::from_bigint(&r.check).expect("checked above");
                let settled = small.run(op, &c, &s, &mut trace);
                return self.report(r, settled, trace);
            }
        }
        let settled = self.big.run(op, &r.entries, &-&r.check, &mut trace);
        self.report(r, settled, trace)
    }

    fn report<T: Int>(&self, r: &ReceivedMatrix, settled: Settled<T>, trace: Trace) -> CorrectionReport {
        let big = |a: [T; 4]| a.map(|v| v.to_bigint());
        match settled {
            Settled::Repaired(cand) => {
                let entries = big(cand.entries);
                let message = Message::new_unchecked(Mat2 { entries: big(cand.message) }, self.order);
                CorrectionReport {
                    diagnosis: cand.diagnosis,
                    stage: Some(cand.stage),
                    error: Some(ErrorMatrix::between(&r.entries, &entries)),
                    recovered: Some(Codeword { entries, order: self.order, check: r.check.clone() }),
                    message: Some(message),
                    note: None,
                    trace,
                }
            }
            Settled::Ambiguous(errors, cands) => CorrectionReport::failure(
                Failure::Ambiguous { errors, candidates: cands.into_iter().map(big).collect() },
                trace,
            ),
            Settled::NoCandidate => CorrectionReport::failure(Failure::NoCandidate, trace),
            Settled::CleanInput => CorrectionReport::failure(Failure::CleanInput, trace),
        }
    }

    /// One-error stage on its own: repairs when exactly one quotient yields
    /// an admissible codeword.
    pub fn correct_single(&self, r: &ReceivedMatrix) -> CorrectionReport {
        self.dispatch(r, Op::Single)
    }

    /// Two errors in different rows. Each row is repaired independently by
    /// the closed-form rule; the checking element decides between the
    /// possible positions.
    pub fn correct_double_cross(&self, r: &ReceivedMatrix) -> CorrectionReport {
        self.dispatch(r, Op::Cross)
    }

    /// Both entries of `row` replaced by the admissible solution of the
    /// determinant equation, the other row taken as correct. Works on a clean
    /// matrix too (the forced hypothesis then returns the current row).
    pub fn correct_double_same_row(&self, r: &ReceivedMatrix, row: Row) -> CorrectionReport {
        self.dispatch(r, Op::SameRow(row))
    }

    /// Trial-and-error correction of three errors: each entry in turn is
    /// assumed to be the only correct one.
    pub fn correct_triple(&self, r: &ReceivedMatrix) -> CorrectionReport {
        self.dispatch(r, Op::Triple)
    }

    /// detect → single → classify → cross double → same-row double → triple,
    /// stopping at the first error count with an admissible candidate.
    pub fn correct(&self, r: &ReceivedMatrix) -> CorrectionReport {
        self.dispatch(r, Op::Pipeline)
    }

    /// Runs the pipeline on arbitrary-precision integers regardless of size.
    /// Exposed so the two backends can be compared.
    pub fn correct_wide(&self, r: &ReceivedMatrix) -> CorrectionReport {
        let mut trace = Trace::default();
        if let Err(f) = self.check_order(r) {
            return CorrectionReport::failure(f, trace);
        }
        let settled = self.big.run(Op::Pipeline, &r.entries, &-&r.check, &mut trace);
        self.report(r, settled, trace)
    }
}

/// Builds a corrector for the received matrix's own order and runs the full
/// pipeline.
pub fn correct(r: &ReceivedMatrix, profile: Profile) -> CorrectionReport {
    match Corrector::new(r.order, profile) {
        Ok(c) => c.correct(r),
        Err(_) => CorrectionReport::failure(Failure::UnsupportedOrder(r.order), Trace::default()),
    }
}

/// Determinant check for any order `n >= 1`.
pub fn detect(r: &ReceivedMatrix) -> bool {
    let sign = if r.order % 2 == 1 { -&r.check } else { r.check.clone() };
    r.matrix().det() == sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode, message_from_i64};

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn n5() -> Corrector {
        Corrector::new(5, Profile::Minimal).unwrap()
    }

    fn rx(e: [i64; 4]) -> ReceivedMatrix {
        ReceivedMatrix::from_i64(e, 5, -3)
    }

    #[test]
    fn rejects_even_orders() {
        assert!(Corrector::new(6, Profile::Minimal).is_err());
        let r = ReceivedMatrix::from_i64([1, 1, 1, 1], 6, 0);
        assert_eq!(correct(&r, Profile::Minimal).diagnosis, Diagnosis::Uncorrectable(Failure::UnsupportedOrder(6)));
    }

    #[test]
    fn detection_examples() {
        let c = n5();
        assert!(c.detect(&rx([18, 11, 21, 13])));
        assert!(!c.detect(&rx([20, 11, 21, 13])));
        assert!(c.detect(&ReceivedMatrix::from_i64([0, 0, 0, 0], 5, 0)));
        assert!(detect(&rx([18, 11, 21, 13])));
    }

    #[test]
    fn zero_matrix_passes_detection_but_not_correction() {
        let r = ReceivedMatrix::from_i64([0, 0, 0, 0], 5, 0);
        let rep = n5().correct(&r);
        assert_ne!(rep.diagnosis, Diagnosis::NoError);
    }

    #[test]
    fn classify_examples() {
        let c = n5();
        let cls = c.classify(&rx([18, 11, 25, 17])).unwrap();
        assert_eq!(cls.first, RatioPosition::Inside);
        assert_eq!(cls.second, RatioPosition::Below);
        assert_eq!(cls.suspect_row(), Some(Row::Second));

        let cls = c.classify(&rx([25, 11, 25, 13])).unwrap();
        assert_eq!((cls.first, cls.second), (RatioPosition::Above, RatioPosition::Above));
        assert_eq!(cls.suspect_row(), None);

        assert_eq!(c.classify(&rx([18, 11, 21, 13])), Err(Failure::CleanInput));
    }

    #[test]
    fn quotients_single_error() {
        let q = n5().quotients(&rx([20, 11, 21, 13]));
        assert_eq!(q[0].integral(), Some(big(18)));
        assert_eq!((q[0].numerator.clone(), q[0].denominator.clone()), (big(234), big(13)));
        assert_eq!((q[1].numerator.clone(), q[1].denominator.clone()), (big(257), big(21)));
        assert_eq!((q[2].numerator.clone(), q[2].denominator.clone()), (big(257), big(11)));
        assert_eq!((q[3].numerator.clone(), q[3].denominator.clone()), (big(234), big(20)));
        assert!(q[1..].iter().all(|x| x.integral().is_none()));
    }

    #[test]
    fn quotients_on_clean_codeword_equal_entries() {
        let r = rx([18, 11, 21, 13]);
        let q = n5().quotients(&r);
        for i in 0..4 {
            assert_eq!(q[i].integral().as_ref(), Some(&r.entries[i]));
        }
    }

    #[test]
    fn single_repair() {
        let rep = n5().correct_single(&rx([20, 11, 21, 13]));
        assert_eq!(rep.diagnosis, Diagnosis::Single(Entry::C1));
        assert_eq!(rep.recovered.unwrap().matrix(), Mat2::from_i64([18, 11, 21, 13]));
        assert_eq!(rep.error.unwrap().entries, [big(2), big(0), big(0), big(0)]);

        // a double error leaves no integral quotient
        let rep = n5().correct_single(&rx([25, 11, 25, 13]));
        assert_eq!(rep.diagnosis, Diagnosis::Uncorrectable(Failure::NoCandidate));
        assert_eq!(rep.trace.integral_quotients, 0);
    }

    #[test]
    fn cross_repairs() {
        let c = n5();
        let rep = c.correct_double_cross(&rx([25, 11, 25, 13]));
        assert_eq!(rep.diagnosis, Diagnosis::DoubleCross(Entry::C1, Entry::C3));
        assert_eq!(rep.error.unwrap().entries, [big(7), big(0), big(4), big(0)]);
        assert_eq!(rep.trace.diophantine_solves, 0);

        let rep = c.correct_double_cross(&rx([18, 15, 21, 18]));
        assert_eq!(rep.diagnosis, Diagnosis::DoubleCross(Entry::C2, Entry::C4));
        assert_eq!(rep.error.unwrap().entries, [big(0), big(4), big(0), big(5)]);
    }

    #[test]
    fn forced_cross_hypothesis_on_clean_rows_is_zero() {
        let c = n5();
        let clean = rx([18, 11, 21, 13]).entries;
        for first in [Entry::C1, Entry::C2] {
            for second in [Entry::C3, Entry::C4] {
                assert_eq!(c.repair_cross(&clean, first, second), ErrorMatrix::zero());
            }
        }
    }

    #[test]
    fn same_row_worked_example() {
        let c = n5();
        let rep = c.correct_double_same_row(&rx([30, 7, 21, 13]), Row::First);
        assert_eq!(rep.diagnosis, Diagnosis::DoubleSameRow(Row::First));
        assert_eq!(rep.recovered.unwrap().matrix(), Mat2::from_i64([18, 11, 21, 13]));
        assert_eq!(rep.trace.diophantine_solves, 1);
    }

    #[test]
    fn same_row_forced_on_clean_row_returns_current_entries() {
        let c = n5();
        let rep = c.correct_double_same_row(&rx([18, 11, 21, 13]), Row::First);
        assert_eq!(rep.recovered.unwrap().matrix(), Mat2::from_i64([18, 11, 21, 13]));
        assert_eq!(rep.error.unwrap(), ErrorMatrix::zero());
    }

    #[test]
    fn same_row_ambiguity_without_minimality() {
        // [[1,2],[2,1]] and [[3,3],[2,1]] share row 2 and det −3 at n = 7
        let c = Corrector::new(7, Profile::Unrestricted).unwrap();
        let m = encode(&message_from_i64([1, 2, 2, 1], 7, Profile::Minimal).unwrap());
        let mut e = m.entries.clone();
        e[0] += 5;
        e[1] += 9;
        let r = ReceivedMatrix { entries: e, order: 7, check: m.check.clone() };
        let rep = c.correct_double_same_row(&r, Row::First);
        assert!(matches!(rep.diagnosis, Diagnosis::Uncorrectable(Failure::Ambiguous { .. })));

        let c = Corrector::new(7, Profile::Minimal).unwrap();
        let rep = c.correct_double_same_row(&r, Row::First);
        assert_eq!(rep.recovered.unwrap().entries, m.entries);
    }

    #[test]
    fn triple_worked_example() {
        let c = n5();
        let rep = c.correct_triple(&rx([18, 16, 27, 17]));
        assert_eq!(rep.diagnosis, Diagnosis::Triple { intact: Entry::C1 });
        assert_eq!(rep.recovered.unwrap().matrix(), Mat2::from_i64([18, 11, 21, 13]));
        assert_eq!(rep.trace.triple_guesses.len(), 4);
        assert_eq!(c.correct_triple(&rx([18, 11, 21, 13])).diagnosis, Diagnosis::Uncorrectable(Failure::CleanInput));
    }

    #[test]
    fn pipeline_stages() {
        let c = n5();
        let rep = c.correct(&rx([18, 11, 21, 13]));
        assert_eq!((rep.diagnosis, rep.stage), (Diagnosis::NoError, Some(Stage::Detect)));
        assert_eq!(rep.message.unwrap().matrix(), &Mat2::from_i64([1, 2, 2, 1]));

        let rep = c.correct(&rx([20, 11, 21, 13]));
        assert_eq!((rep.diagnosis, rep.stage), (Diagnosis::Single(Entry::C1), Some(Stage::Single)));

        let rep = c.correct(&rx([25, 11, 25, 13]));
        assert_eq!(rep.stage, Some(Stage::DoubleCross));

        let rep = c.correct(&rx([30, 7, 21, 13]));
        assert_eq!(rep.stage, Some(Stage::DoubleSameRow));

        let rep = c.correct(&rx([18, 16, 27, 17]));
        assert_eq!(rep.stage, Some(Stage::Triple));
        assert_eq!(rep.recovered.unwrap().matrix(), Mat2::from_i64([18, 11, 21, 13]));
    }

    #[test]
    fn order_mismatch() {
        let r = ReceivedMatrix::from_i64([18, 11, 21, 13], 7, -3);
        assert!(matches!(n5().correct(&r).diagnosis, Diagnosis::Uncorrectable(Failure::OrderMismatch { .. })));
    }

    #[test]
    fn zero_denominators_do_not_panic() {
        let c = n5();
        for e in [[0, 11, 21, 13], [18, 0, 21, 13], [18, 11, 0, 13], [18, 11, 21, 0], [0, 0, 0, 1], [-5, 3, 0, -2]] {
            let rep = c.correct(&rx(e));
            if let Some(rec) = rep.recovered {
                assert_eq!(rec.det(), big(3));
            }
        }
    }

    #[test]
    fn wrong_guess_rejected_by_interval() {
        // A guess that trusts a corrupted entry often leaves no integer
        // partner inside [a, b]; that guess must stop before any solve.
        let c = n5();
        let m = encode(&message_from_i64([1, 2, 2, 1], 5, Profile::Minimal).unwrap());
        let mut seen = 0;
        for e3 in -3i64..=3 {
            for e4 in -3i64..=3 {
                if e3 == 0 || e4 == 0 {
                    continue;
                }
                let mut e = m.entries.clone();
                e[1] += 5;
                e[2] += e3;
                e[3] += e4;
                let r = ReceivedMatrix { entries: e, order: 5, check: m.check.clone() };
                let mut trace = Trace::default();
                let s = big(3); // det C = −det M for odd n
                let (outcome, _) = c.big.triple_guess(&r.entries, Entry::C3, &s, &mut trace);
                if outcome == GuessOutcome::RejectedByInterval {
                    assert_eq!(trace.diophantine_solves, 0);
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }

    proptest::proptest! {
        #[test]
        fn i128_engine_matches_bigint(
            n in proptest::sample::select(vec![5u32, 7, 9, 11]),
            m in proptest::array::uniform4(1i64..=34),
            e in proptest::array::uniform4(-40i64..=40),
        ) {
            let bound = crate::fib::fib_unchecked(n - 1);
            let m = m.map(|v| BigInt::from(v).mod_floor(&(&bound - 1)) + 1);
            let msg = Message::new_unchecked(Mat2 { entries: m }, n);
            let cw = encode(&msg);
            let r = ReceivedMatrix {
                entries: std::array::from_fn(|i| &cw.entries[i] + e[i]),
                order: n,
                check: cw.check.clone(),
            };
            for profile in [Profile::Minimal, Profile::Unrestricted] {
                let c = Corrector::new(n, profile).unwrap();
                proptest::prop_assert_eq!(c.correct(&r), c.correct_wide(&r));
            }
        }
    }
}
