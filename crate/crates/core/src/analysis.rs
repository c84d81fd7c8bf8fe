//! Information loss, entropy brackets, loss thresholds and surjectivity
//! verdicts, built on the exact counts.
//!
//! Loss is measured in q-its: `Λ(x) = ∏x - log_q Out_f(x)`. Its per-volume
//! complement `log_q Out_f(x) / ∏x` is coordinate-wise subadditive after
//! multiplying through by the volume, so its limit `λ_f` is the infimum of
//! the ratios, and `λ_f = 1` exactly for surjective automata.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::automaton::CellularAutomaton;
use crate::counting::{
    self, decide_surjectivity_1d, find_orphan, input_cost, out_size_bruteforce, CountError,
    Decision1d, OrphanCertificate, OutRecord, SubsetDfa, DEFAULT_BUDGET, DEFAULT_MAX_SUBSETS,
};
use crate::index::{maximal_elements, maximum, IndexError, MultiIndex};
use crate::subadditive::{
    check_subadditivity, fekete_limit_estimate, CheckOptions, EvalError, FeketeError,
    LimitBracket, SubadditiveFn, SubadditivityReport, TableFn,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Fekete(#[from] FeketeError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("{0}")]
    NotApplicable(String),
    #[error("no orphan found within the search box; pass the nonsurjectivity override to proceed")]
    NotKnownNonsurjective,
    #[error("delta {delta} must lie strictly between the λ upper estimate {lambda_upper} and 1")]
    DeltaOutOfRange { delta: f64, lambda_upper: f64 },
    #[error("no box of the schedule could be counted")]
    NothingComputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMethod {
    /// Transfer in dimension 1 when the subset construction fits, brute
    /// force otherwise.
    #[default]
    Auto,
    Brute,
    Transfer,
}

impl FromStr for CountMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(CountMethod::Auto),
            "brute" => Ok(CountMethod::Brute),
            "transfer" => Ok(CountMethod::Transfer),
            other => Err(format!("unknown method `{other}` (auto, brute, transfer)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximum number of brute-force inputs per support.
    pub budget: u64,
    pub max_subsets: usize,
    pub method: CountMethod,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            budget: DEFAULT_BUDGET,
            max_subsets: DEFAULT_MAX_SUBSETS,
            method: CountMethod::Auto,
        }
    }
}

/// Memoized `Out_f` source for one automaton.
pub struct Counter<'a> {
    ca: &'a CellularAutomaton,
    limits: Limits,
    dfa: RefCell<Option<Result<SubsetDfa, CountError>>>,
    transfer_counts: RefCell<Vec<BigUint>>,
    cache: RefCell<HashMap<MultiIndex, Result<OutRecord, CountError>>>,
}

impl<'a> Counter<'a> {
    pub fn new(ca: &'a CellularAutomaton, limits: Limits) -> Self {
        Counter {
            ca,
            limits,
            dfa: RefCell::new(None),
            transfer_counts: RefCell::new(Vec::new()),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn automaton(&self) -> &CellularAutomaton {
        self.ca
    }

    fn uses_transfer(&self) -> bool {
        match self.limits.method {
            CountMethod::Brute => false,
            CountMethod::Transfer => true,
            CountMethod::Auto => self.ca.dim() == 1 && self.transfer_dfa().is_ok(),
        }
    }

    fn transfer_dfa(&self) -> Result<(), CountError> {
        let mut slot = self.dfa.borrow_mut();
        let dfa = slot.get_or_insert_with(|| {
            counting::ImageAutomaton::new(self.ca)
                .and_then(|aut| SubsetDfa::explore(&aut, self.limits.max_subsets))
        });
        dfa.as_ref().map(|_| ()).map_err(Clone::clone)
    }

    /// Makes `Out_f(1..=n)` available in dimension 1 without recounting.
    pub fn prefetch(&self, n: u64) -> Result<(), CountError> {
        if !self.uses_transfer() {
            return Ok(());
        }
        self.transfer_dfa()?;
        let mut counts = self.transfer_counts.borrow_mut();
        if (counts.len() as u64) < n {
            let dfa = self.dfa.borrow();
            let dfa = dfa.as_ref().expect("built").as_ref().expect("ok");
            *counts = dfa.count_words(n);
        }
        Ok(())
    }

    pub fn out(&self, sides: &MultiIndex) -> Result<OutRecord, CountError> {
        if let Some(hit) = self.cache.borrow().get(sides) {
            return hit.clone();
        }
        let record = self.compute(sides);
        self.cache.borrow_mut().insert(sides.clone(), record.clone());
        record
    }

    fn compute(&self, sides: &MultiIndex) -> Result<OutRecord, CountError> {
        if sides.dim() != self.ca.dim() {
            return Err(crate::automaton::CaError::DimensionMismatch {
                expected: self.ca.dim(),
                found: sides.dim(),
            }
            .into());
        }
        if !self.uses_transfer() {
            return out_size_bruteforce(self.ca, sides, self.limits.budget);
        }
        if self.ca.dim() != 1 {
            return Err(CountError::NotOneDimensional(self.ca.dim()));
        }
        let n = sides.get(0);
        self.prefetch(n)?;
        let out_size = self.transfer_counts.borrow()[n as usize - 1].clone();
        Ok(OutRecord {
            sides: sides.clone(),
            states: self.ca.states(),
            out_size,
            full_size: counting::full_size(self.ca.states(), sides),
            method: counting::Method::Transfer1d,
            store: None,
        })
    }

    /// `log_q Out_f` at every successfully counted box.
    pub fn log_table(&self) -> TableFn {
        let mut table = TableFn::new(self.ca.dim());
        for (sides, record) in self.cache.borrow().iter() {
            if let Ok(record) = record {
                table
                    .insert(sides.clone(), log_q(&record.out_size, self.ca.states()))
                    .expect("dimension checked");
            }
        }
        let counts = self.transfer_counts.borrow();
        for (i, c) in counts.iter().enumerate() {
            let sides = MultiIndex::new(vec![i as u64 + 1]).expect("positive");
            table
                .insert(sides, log_q(c, self.ca.states()))
                .expect("dimension 1");
        }
        table
    }
}

/// `log_q Out_f` as a function for the Fekete engine.
pub struct LogOut<'c, 'a> {
    counter: &'c Counter<'a>,
}

impl<'c, 'a> LogOut<'c, 'a> {
    pub fn new(counter: &'c Counter<'a>) -> Self {
        LogOut { counter }
    }
}

impl SubadditiveFn for LogOut<'_, '_> {
    fn dim(&self) -> usize {
        self.counter.ca.dim()
    }
    fn eval(&self, x: &MultiIndex) -> Result<f64, EvalError> {
        self.counter
            .out(x)
            .map(|r| log_q(&r.out_size, r.states))
            .map_err(|e| EvalError::Unavailable {
                at: x.clone(),
                reason: e.to_string(),
            })
    }
}

fn ln_big(value: &BigUint) -> f64 {
    let bits = value.bits();
    if bits <= 1000 {
        return value.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    (value >> shift).to_f64().expect("64 bits").ln() + shift as f64 * std::f64::consts::LN_2
}

/// `log_q value`, exact when `value` is a power of `q`.
pub fn log_q(value: &BigUint, q: u32) -> f64 {
    if let Some(k) = counting::is_power_of(value, q) {
        return k as f64;
    }
    ln_big(value) / (q as f64).ln()
}

/// Loss of information at one support size.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub sides: MultiIndex,
    pub out_size: BigUint,
    /// `log_q Out_f`.
    pub log_out: f64,
    /// `∏x - log_q Out_f`, in q-its.
    pub lambda_loss: f64,
    /// `log_q Out_f / ∏x`.
    pub ratio: f64,
    /// The loss in bits: q-its times `log2 q`.
    pub lambda_bits: f64,
}

pub fn loss(record: &OutRecord) -> LossRecord {
    let volume = record.sides.volume_f64();
    let log_out = log_q(&record.out_size, record.states).min(volume);
    let lambda_loss = volume - log_out;
    LossRecord {
        sides: record.sides.clone(),
        out_size: record.out_size.clone(),
        log_out,
        lambda_loss,
        ratio: log_out / volume,
        lambda_bits: lambda_loss * (record.states as f64).log2(),
    }
}

// ---------------------------------------------------------------------------
// λ_f

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    /// Bracket around `λ_f`, clipped into `[0, 1]`.
    pub bracket: LimitBracket,
    /// Coordinate-wise check of `log_q Out_f` on every counted box.
    pub subadditivity: SubadditivityReport,
    pub records: Vec<LossRecord>,
    /// Schedule boxes that could not be counted, with the reason.
    pub refused: Vec<(MultiIndex, String)>,
}

impl LambdaEstimate {
    pub fn is_partial(&self) -> bool {
        !self.refused.is_empty()
    }
}

pub fn lambda_estimate(
    ca: &CellularAutomaton,
    schedule: &[MultiIndex],
    limits: Limits,
    check: &CheckOptions,
) -> Result<LambdaEstimate, AnalysisError> {
    if schedule.is_empty() {
        return Err(FeketeError::EmptySchedule.into());
    }
    let counter = Counter::new(ca, limits);
    if ca.dim() == 1 {
        let n_max = schedule.iter().map(|x| x.get(0)).max().expect("nonempty");
        // transfer failures fall back to per-box counting below
        let _ = counter.prefetch(n_max);
    }
    let mut computed = Vec::new();
    let mut records = Vec::new();
    let mut refused = Vec::new();
    for x in schedule {
        if x.dim() != ca.dim() {
            return Err(IndexError::DimensionMismatch {
                expected: ca.dim(),
                found: x.dim(),
            }
            .into());
        }
        match counter.out(x) {
            Ok(record) => {
                records.push(loss(&record));
                computed.push(x.clone());
            }
            Err(e) => refused.push((x.clone(), e.to_string())),
        }
    }
    if computed.is_empty() {
        return Err(AnalysisError::NothingComputed);
    }
    let base = maximum(&computed)
        .cloned()
        .unwrap_or_else(|| computed.iter().max().expect("nonempty").clone());
    let f = LogOut::new(&counter);
    let mut bracket = fekete_limit_estimate(&f, &base, &computed)?;
    bracket.upper = bracket.upper.min(1.0);
    bracket.lower = bracket.lower.clamp(0.0, bracket.upper);

    let table = counter.log_table();
    let check_box = table
        .keys()
        .skip(1)
        .try_fold(table.keys().next().expect("nonempty").clone(), |acc, k| acc.join(k))?;
    let subadditivity = check_subadditivity(&table, &check_box, check)?;
    Ok(LambdaEstimate {
        bracket,
        subadditivity,
        records,
        refused,
    })
}

// ---------------------------------------------------------------------------
// Loss thresholds

#[derive(Debug, Clone)]
pub struct ThresholdQuery {
    pub k: f64,
    /// Boundary sides; zero allowed.
    pub r: Vec<u64>,
    /// Defaults to the midpoint between the λ upper estimate and 1.
    pub delta: Option<f64>,
    pub search_box: MultiIndex,
    pub limits: Limits,
    /// Skip the nonsurjectivity precondition.
    pub assume_nonsurjective: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCheck {
    pub x: MultiIndex,
    pub loss: f64,
    /// `∏(x+r) - ∏x + K`.
    pub required: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub k: f64,
    pub r: Vec<u64>,
    pub delta: f64,
    pub search_box: MultiIndex,
    /// Least ratio over the search box; an upper estimate of `λ_f`.
    pub lambda_upper: f64,
    /// Lexicographically least (hence ≤π-minimal) `t` such that
    /// `Λ(x) ≥ ∏(x+r) - ∏x + K` at every `x` with `t ≤π x ≤π search_box`.
    pub threshold: Option<MultiIndex>,
    /// Least `t` beyond which both `log_q Out/∏x ≤ δ` and
    /// `(∏(x+r) - ∏x + K)/∏x ≤ 1 - δ` hold inside the box; together they
    /// imply the loss inequality.
    pub proof_threshold: Option<MultiIndex>,
    /// Every `x ≥π threshold` inside the box, with the inequality re-checked.
    pub checked_region: Vec<ThresholdCheck>,
}

/// Absorbs rounding in `1 - δ` for decimal `δ`.
const THRESHOLD_SLACK: f64 = 1e-12;

fn boundary_excess(x: &MultiIndex, r: &[u64], k: f64) -> f64 {
    let inner: u128 = x.coords().iter().map(|&c| c as u128).product();
    let outer: u128 = x
        .coords()
        .iter()
        .zip(r)
        .map(|(&c, &ri)| (c + ri) as u128)
        .product();
    (outer - inner) as f64 + k
}

/// Lexicographically least `t` in `boxes` with no failing box above it.
fn least_threshold(boxes: &[MultiIndex], ok: &[bool]) -> Option<MultiIndex> {
    let failing: Vec<&MultiIndex> = boxes.iter().zip(ok).filter(|(_, &o)| !o).map(|(b, _)| b).collect();
    boxes
        .iter()
        .filter(|t| !failing.iter().any(|b| t.leq_pi(b).unwrap_or(false)))
        .min()
        .cloned()
}

pub fn loss_threshold(
    ca: &CellularAutomaton,
    query: &ThresholdQuery,
) -> Result<ThresholdReport, AnalysisError> {
    let d = ca.dim();
    if query.search_box.dim() != d || query.r.len() != d {
        return Err(IndexError::DimensionMismatch {
            expected: d,
            found: if query.r.len() != d { query.r.len() } else { query.search_box.dim() },
        }
        .into());
    }
    if !query.assume_nonsurjective {
        let decided = (d == 1)
            .then(|| decide_surjectivity_1d(ca, query.limits.max_subsets).ok())
            .flatten();
        match decided {
            Some(Decision1d::Surjective { .. }) => {
                return Err(AnalysisError::NotApplicable(
                    "the automaton is surjective; its loss is identically zero".into(),
                ))
            }
            Some(Decision1d::Nonsurjective { .. }) => {}
            None => {
                if find_orphan(ca, &query.search_box, query.limits.budget)
                    .ok()
                    .flatten()
                    .is_none()
                {
                    return Err(AnalysisError::NotKnownNonsurjective);
                }
            }
        }
    }

    let counter = Counter::new(ca, query.limits);
    if d == 1 {
        counter.prefetch(query.search_box.get(0))?;
    }
    let boxes = query.search_box.boxes_below();
    let losses = boxes
        .iter()
        .map(|x| counter.out(x).map(|r| loss(&r)))
        .collect::<Result<Vec<_>, _>>()?;
    let lambda_upper = losses.iter().map(|l| l.ratio).fold(f64::INFINITY, f64::min);
    let delta = query.delta.unwrap_or((lambda_upper + 1.0) / 2.0);
    if !(delta > lambda_upper && delta < 1.0) {
        return Err(AnalysisError::DeltaOutOfRange {
            delta,
            lambda_upper,
        });
    }

    let required: Vec<f64> = boxes.iter().map(|x| boundary_excess(x, &query.r, query.k)).collect();
    let inequality: Vec<bool> = losses
        .iter()
        .zip(&required)
        .map(|(l, &req)| l.lambda_loss >= req)
        .collect();
    let proof_conditions: Vec<bool> = losses
        .iter()
        .zip(&required)
        .map(|(l, &req)| {
            l.ratio <= delta + THRESHOLD_SLACK
                && req / l.sides.volume_f64() <= 1.0 - delta + THRESHOLD_SLACK
        })
        .collect();

    let threshold = least_threshold(&boxes, &inequality);
    let proof_threshold = least_threshold(&boxes, &proof_conditions);
    let checked_region = match &threshold {
        None => Vec::new(),
        Some(t) => boxes
            .iter()
            .zip(&losses)
            .zip(&required)
            .filter(|((x, _), _)| t.leq_pi(x).unwrap_or(false))
            .map(|((x, l), &req)| ThresholdCheck {
                x: x.clone(),
                loss: l.lambda_loss,
                required: req,
                holds: l.lambda_loss >= req,
            })
            .collect(),
    };
    Ok(ThresholdReport {
        k: query.k,
        r: query.r.clone(),
        delta,
        search_box: query.search_box.clone(),
        lambda_upper,
        threshold,
        proof_threshold,
        checked_region,
    })
}

// ---------------------------------------------------------------------------
// Verdicts

#[derive(Debug, Clone, PartialEq)]
pub enum SurjectivityVerdict {
    /// Decided in dimension 1 by the subset construction.
    ProvedSurjective { subsets: usize },
    Nonsurjective { certificate: OrphanCertificate },
    /// No orphan on any box whose enumeration fits the budget. `cleared` is
    /// the ≤π-maximal boxes checked; every box below them is orphan-free.
    Unknown {
        cleared: Vec<MultiIndex>,
        budget: u64,
        reason: String,
    },
}

impl SurjectivityVerdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            SurjectivityVerdict::ProvedSurjective { .. } => 0,
            SurjectivityVerdict::Nonsurjective { .. } => 10,
            SurjectivityVerdict::Unknown { .. } => 20,
        }
    }
}

impl fmt::Display for SurjectivityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurjectivityVerdict::ProvedSurjective { .. } => "PROVED_SURJECTIVE",
            SurjectivityVerdict::Nonsurjective { .. } => "NONSURJECTIVE",
            SurjectivityVerdict::Unknown { .. } => "UNKNOWN",
        })
    }
}

/// Boxes whose brute-force input count fits `budget`, in (volume, lex) order.
pub fn affordable_boxes(ca: &CellularAutomaton, budget: u64) -> Vec<MultiIndex> {
    let budget = BigUint::from(budget);
    let mut seen = HashSet::new();
    let mut stack = vec![MultiIndex::ones(ca.dim())];
    let mut out = Vec::new();
    while let Some(b) = stack.pop() {
        if !seen.insert(b.clone()) || input_cost(ca, &b) > budget {
            continue;
        }
        for axis in 0..b.dim() {
            stack.push(b.with_coord(axis, b.get(axis) + 1));
        }
        out.push(b);
    }
    out.sort_by(|a, b| a.volume().cmp(&b.volume()).then_with(|| a.cmp(b)));
    out
}

fn bounded_orphan_search(ca: &CellularAutomaton, budget: u64, reason: String) -> SurjectivityVerdict {
    let boxes = affordable_boxes(ca, budget);
    for b in &boxes {
        if let Ok(Some(certificate)) = find_orphan(ca, b, budget) {
            return SurjectivityVerdict::Nonsurjective { certificate };
        }
    }
    SurjectivityVerdict::Unknown {
        cleared: maximal_elements(&boxes),
        budget,
        reason,
    }
}

/// Decides in dimension 1; in higher dimension searches for an orphan on
/// every affordable box and otherwise answers `Unknown`, never surjective.
pub fn surjectivity_report(ca: &CellularAutomaton, limits: Limits) -> SurjectivityVerdict {
    if ca.dim() == 1 {
        match decide_surjectivity_1d(ca, limits.max_subsets) {
            Ok(Decision1d::Surjective { subsets }) => {
                return SurjectivityVerdict::ProvedSurjective { subsets }
            }
            Ok(Decision1d::Nonsurjective { orphan, .. }) => {
                return SurjectivityVerdict::Nonsurjective {
                    certificate: orphan,
                }
            }
            Err(e) => return bounded_orphan_search(ca, limits.budget, e.to_string()),
        }
    }
    bounded_orphan_search(
        ca,
        limits.budget,
        format!("no orphan within budget; surjectivity in dimension {} is not decided", ca.dim()),
    )
}
