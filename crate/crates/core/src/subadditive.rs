//! Multivariate Fekete lemma toolkit.
//!
//! For `f: Z_+^d → [0, ∞)` that is subadditive in each coordinate separately,
//!
//! ```text
//! f(…, x_j + y_j, …) ≤ f(…, x_j, …) + f(…, y_j, …)
//! ```
//!
//! the ratio `f(x) / (x_1⋯x_d)` converges along the product-ordered directed
//! set, and its limit is the infimum of the ratio over all boxes. This module
//! checks the hypothesis on a finite box, tracks running infima over a
//! caller-chosen schedule, evaluates the division-decomposition upper bound
//! used to prove convergence, and brackets the limit.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::index::{maximum, IndexError, MultiIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no value for index {0}")]
    Missing(MultiIndex),
    #[error("value at {at} unavailable: {reason}")]
    Unavailable { at: MultiIndex, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeketeError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("f({at}) = {value} is negative")]
    NegativeValue { at: MultiIndex, value: f64 },
}

/// A function on positive integer d-tuples with nonnegative values.
///
/// Subadditivity is checked with [`check_subadditivity`], never assumed.
pub trait SubadditiveFn {
    fn dim(&self) -> usize;
    fn eval(&self, x: &MultiIndex) -> Result<f64, EvalError>;
}

impl<T: SubadditiveFn + ?Sized> SubadditiveFn for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &MultiIndex) -> Result<f64, EvalError> {
        (**self).eval(x)
    }
}

/// Closure-backed function.
pub struct ClosureFn<F> {
    dim: usize,
    f: F,
}

pub fn from_fn<F: Fn(&[u64]) -> f64>(dim: usize, f: F) -> ClosureFn<F> {
    ClosureFn { dim, f }
}

impl<F: Fn(&[u64]) -> f64> SubadditiveFn for ClosureFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &MultiIndex) -> Result<f64, EvalError> {
        Ok((self.f)(x.coords()))
    }
}

/// Table-backed function; evaluating outside the table is an error.
#[derive(Debug, Clone, Default)]
pub struct TableFn {
    dim: usize,
    values: BTreeMap<MultiIndex, f64>,
}

impl TableFn {
    pub fn new(dim: usize) -> Self {
        TableFn {
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, x: MultiIndex, value: f64) -> Result<(), FeketeError> {
        if x.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            }
            .into());
        }
        self.values.insert(x, value);
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &MultiIndex> {
        self.values.keys()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl SubadditiveFn for TableFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &MultiIndex) -> Result<f64, EvalError> {
        self.values
            .get(x)
            .copied()
            .ok_or_else(|| EvalError::Missing(x.clone()))
    }
}

/// Memoizing wrapper. One is created per estimate call so that boxes
/// revisited by the running infimum and the decomposition bound are
/// evaluated once.
pub struct Memo<'a, F: ?Sized> {
    f: &'a F,
    cache: RefCell<HashMap<MultiIndex, Result<f64, EvalError>>>,
}

impl<'a, F: SubadditiveFn + ?Sized> Memo<'a, F> {
    pub fn new(f: &'a F) -> Self {
        Memo {
            f,
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// Every successfully evaluated point so far.
    pub fn evaluated(&self) -> TableFn {
        let mut table = TableFn::new(self.f.dim());
        for (k, v) in self.cache.borrow().iter() {
            if let Ok(v) = v {
                table.values.insert(k.clone(), *v);
            }
        }
        table
    }
}

impl<F: SubadditiveFn + ?Sized> SubadditiveFn for Memo<'_, F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn eval(&self, x: &MultiIndex) -> Result<f64, EvalError> {
        if let Some(hit) = self.cache.borrow().get(x) {
            return hit.clone();
        }
        let value = self.f.eval(x);
        self.cache.borrow_mut().insert(x.clone(), value.clone());
        value
    }
}

fn check_dim<F: SubadditiveFn + ?Sized>(f: &F, x: &MultiIndex) -> Result<(), FeketeError> {
    if x.dim() != f.dim() {
        return Err(IndexError::DimensionMismatch {
            expected: f.dim(),
            found: x.dim(),
        }
        .into());
    }
    Ok(())
}

fn ratio_at<F: SubadditiveFn + ?Sized>(f: &F, x: &MultiIndex) -> Result<f64, FeketeError> {
    let value = f.eval(x)?;
    if value < 0.0 {
        return Err(FeketeError::NegativeValue {
            at: x.clone(),
            value,
        });
    }
    Ok(value / x.volume_f64())
}

// ---------------------------------------------------------------------------
// Subadditivity check

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `f(x with x_axis + y) > f(x) + f(x with x_axis = y)`.
    Inequality {
        axis: usize,
        x: MultiIndex,
        y: u64,
        lhs: f64,
        rhs: f64,
    },
    /// The nonnegativity hypothesis fails.
    Negative { at: MultiIndex, value: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    /// Exhaustive when the number of `(axis, x, y)` triples is at most this,
    /// otherwise this many seeded samples.
    pub exhaustive_limit: u64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            exhaustive_limit: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityReport {
    pub violations: Vec<Violation>,
    pub total_triples: u128,
    pub tested: u64,
    /// Triples not tested because a value was unavailable.
    pub skipped: u64,
    pub exhaustive: bool,
    pub seed: u64,
}

impl SubadditivityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const REL_TOL: f64 = 1e-9;

/// Number of `(axis, x, y)` triples with `x` and `x + y·e_axis` inside `bx`.
pub fn triple_count(bx: &MultiIndex) -> u128 {
    let sides = bx.coords();
    (0..sides.len())
        .map(|j| {
            let others: u128 = sides
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &s)| s as u128)
                .product();
            let b = sides[j] as u128;
            others * (b * (b.saturating_sub(1)) / 2)
        })
        .sum()
}

struct TripleTester<'a, F: ?Sized> {
    f: &'a F,
    negatives_seen: HashSet<MultiIndex>,
    report: SubadditivityReport,
}

impl<F: SubadditiveFn + ?Sized> TripleTester<'_, F> {
    fn value(&mut self, x: &MultiIndex) -> Option<f64> {
        let v = self.f.eval(x).ok()?;
        if v < 0.0 && self.negatives_seen.insert(x.clone()) {
            self.report.violations.push(Violation::Negative {
                at: x.clone(),
                value: v,
            });
        }
        Some(v)
    }

    fn test(&mut self, axis: usize, x: &MultiIndex, y: u64) {
        let joined = x.with_coord(axis, x.get(axis) + y);
        let other = x.with_coord(axis, y);
        let (Some(lhs), Some(a), Some(b)) =
            (self.value(&joined), self.value(x), self.value(&other))
        else {
            self.report.skipped += 1;
            return;
        };
        self.report.tested += 1;
        let rhs = a + b;
        let tol = REL_TOL * lhs.abs().max(rhs.abs()).max(1.0);
        if lhs > rhs + tol {
            self.report.violations.push(Violation::Inequality {
                axis,
                x: x.clone(),
                y,
                lhs,
                rhs,
            });
        }
    }
}

/// Tests coordinate-wise subadditivity on every triple inside `bx`, or on a
/// seeded sample of `exhaustive_limit` triples when there are more.
///
/// Triples whose values are unavailable are counted in `skipped`.
pub fn check_subadditivity<F: SubadditiveFn + ?Sized>(
    f: &F,
    bx: &MultiIndex,
    opts: &CheckOptions,
) -> Result<SubadditivityReport, FeketeError> {
    check_dim(f, bx)?;
    let total = triple_count(bx);
    let exhaustive = total <= opts.exhaustive_limit as u128;
    let mut tester = TripleTester {
        f,
        negatives_seen: HashSet::new(),
        report: SubadditivityReport {
            violations: Vec::new(),
            total_triples: total,
            tested: 0,
            skipped: 0,
            exhaustive,
            seed: opts.seed,
        },
    };

    if exhaustive {
        for x in bx.boxes_below() {
            for axis in 0..bx.dim() {
                for y in 1..=bx.get(axis).saturating_sub(x.get(axis)) {
                    tester.test(axis, &x, y);
                }
            }
        }
    } else {
        let sides = bx.coords();
        let weights: Vec<f64> = (0..sides.len())
            .map(|j| {
                let b = sides[j] as f64;
                let others: f64 = sides
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &s)| s as f64)
                    .product();
                others * b * (b - 1.0) / 2.0
            })
            .collect();
        let weight_sum: f64 = weights.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.exhaustive_limit {
            let mut pick = rng.gen::<f64>() * weight_sum;
            let mut axis = weights.len() - 1;
            for (j, &w) in weights.iter().enumerate() {
                if w > 0.0 && pick < w {
                    axis = j;
                    break;
                }
                pick -= w;
            }
            let b = sides[axis];
            let mut coords: Vec<u64> = sides.iter().map(|&s| rng.gen_range(1..=s)).collect();
            // uniform over pairs with x_axis + y ≤ b
            let (xj, y) = loop {
                let xj = rng.gen_range(1..b);
                let y = rng.gen_range(1..b);
                if xj + y <= b {
                    break (xj, y);
                }
            };
            coords[axis] = xj;
            let x = MultiIndex::new(coords)?;
            tester.test(axis, &x, y);
        }
    }
    Ok(tester.report)
}

// ---------------------------------------------------------------------------
// Running infimum and limit bracket

#[derive(Debug, Clone, PartialEq)]
pub struct FeketeEstimate {
    /// Minimum of `f(x)/∏x` over the schedule.
    pub running_inf: f64,
    pub argmin: MultiIndex,
    /// Ratio at `last_box`.
    pub last_ratio: f64,
    /// The ≤π-maximum of the schedule, or its lexicographically last box
    /// when no maximum exists (then `last_is_maximum` is false).
    pub last_box: MultiIndex,
    pub last_is_maximum: bool,
    /// `last_ratio - running_inf`.
    pub bracket_width: f64,
    /// `(box, ratio)` in schedule order.
    pub ratios: Vec<(MultiIndex, f64)>,
}

impl FeketeEstimate {
    pub fn evaluated_boxes(&self) -> impl Iterator<Item = &MultiIndex> {
        self.ratios.iter().map(|(x, _)| x)
    }

    /// Running infimum after each schedule step.
    pub fn trace(&self) -> Vec<f64> {
        let mut inf = f64::INFINITY;
        self.ratios
            .iter()
            .map(|(_, r)| {
                inf = inf.min(*r);
                inf
            })
            .collect()
    }
}

pub fn running_infimum<F: SubadditiveFn + ?Sized>(
    f: &F,
    schedule: &[MultiIndex],
) -> Result<FeketeEstimate, FeketeError> {
    if schedule.is_empty() {
        return Err(FeketeError::EmptySchedule);
    }
    let mut ratios = Vec::with_capacity(schedule.len());
    for x in schedule {
        check_dim(f, x)?;
        ratios.push((x.clone(), ratio_at(f, x)?));
    }
    let (argmin, running_inf) = ratios
        .iter()
        .fold(None::<(&MultiIndex, f64)>, |best, (x, r)| match best {
            Some((_, b)) if b <= *r => best,
            _ => Some((x, *r)),
        })
        .map(|(x, r)| (x.clone(), r))
        .expect("schedule is nonempty");

    let (last_box, last_is_maximum) = match maximum(schedule) {
        Some(m) => (m.clone(), true),
        None => (schedule.iter().max().expect("nonempty").clone(), false),
    };
    let last_ratio = ratios
        .iter()
        .find(|(x, _)| *x == last_box)
        .map(|(_, r)| *r)
        .expect("last box is scheduled");

    Ok(FeketeEstimate {
        running_inf,
        argmin,
        last_ratio,
        last_box,
        last_is_maximum,
        bracket_width: last_ratio - running_inf,
        ratios,
    })
}

/// Writes `x = q·t + r` with `1 ≤ r ≤ t`, so `r = t` (not 0) when `t | x`.
pub fn split_coordinate(x: u64, t: u64) -> (u64, u64) {
    assert!(x >= 1 && t >= 1);
    let q = (x - 1) / t;
    (q, x - q * t)
}

/// Right-hand side of the division decomposition of `f(x)` against the
/// block sides `t`:
///
/// ```text
/// Σ_{S ⊆ axes} (∏_{j∉S} q_j) · f(t_j for j∉S, r_j for j∈S)
/// ```
///
/// where `x_j = q_j t_j + r_j`, `1 ≤ r_j ≤ t_j`. For coordinate-wise
/// subadditive `f` this bounds `f(x)` from above.
pub fn decomposition_bound<F: SubadditiveFn + ?Sized>(
    f: &F,
    t: &MultiIndex,
    x: &MultiIndex,
) -> Result<f64, FeketeError> {
    check_dim(f, t)?;
    check_dim(f, x)?;
    let d = x.dim();
    let splits: Vec<(u64, u64)> = (0..d).map(|j| split_coordinate(x.get(j), t.get(j))).collect();
    let mut bound = 0.0;
    for subset in 0u64..(1u64 << d) {
        let in_s = |j: usize| subset & (1 << j) != 0;
        let coeff: f64 = (0..d)
            .filter(|&j| !in_s(j))
            .map(|j| splits[j].0 as f64)
            .product();
        if coeff == 0.0 {
            continue;
        }
        let args: Vec<u64> = (0..d)
            .map(|j| if in_s(j) { splits[j].1 } else { t.get(j) })
            .collect();
        bound += coeff * f.eval(&MultiIndex::new(args)?)?;
    }
    Ok(bound)
}

/// `∏t · f(1, …, 1)`, which bounds every tail term of the decomposition.
pub fn tail_constant<F: SubadditiveFn + ?Sized>(
    f: &F,
    t: &MultiIndex,
) -> Result<f64, FeketeError> {
    check_dim(f, t)?;
    Ok(t.volume_f64() * f.eval(&MultiIndex::ones(f.dim()))?)
}

/// Mixed doubling difference at `x`:
///
/// ```text
/// Σ_{T ⊆ axes} (-1)^{d-|T|} f(y_T) / ∏h,   h = ⌊x/2⌋,  y_T,j = 2h_j if j∈T else h_j
/// ```
///
/// Every term of `f` that is a polynomial in fewer than all coordinates
/// cancels, so this recovers the coefficient of `∏x` exactly for
/// multilinear `f` and converges fast for counts of the form
/// `C·ρ^{∏x}·(1 + o(1))`. Returns `None` when some `x_j < 2` or a value is
/// unavailable.
pub fn doubling_estimate<F: SubadditiveFn + ?Sized>(f: &F, x: &MultiIndex) -> Option<f64> {
    let d = x.dim();
    if x.coords().iter().any(|&c| c < 2) || d >= 64 {
        return None;
    }
    let half: Vec<u64> = x.coords().iter().map(|&c| c / 2).collect();
    let mut total = 0.0;
    for subset in 0u64..(1u64 << d) {
        let args: Vec<u64> = (0..d)
            .map(|j| if subset & (1 << j) != 0 { 2 * half[j] } else { half[j] })
            .collect();
        let value = f.eval(&MultiIndex::new(args).ok()?).ok()?;
        let sign = if (d as u32 - subset.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * value;
    }
    Some(total / half.iter().map(|&h| h as f64).product::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowerEnd {
    /// From [`doubling_estimate`] at the given schedule maximum; an
    /// extrapolation, not a proof.
    Extrapolated(f64),
    /// `0`, from nonnegativity.
    Trivial,
    /// The extrapolation exceeded the certified upper end, so it was
    /// discarded and the lower end is `0`.
    Discarded(f64),
}

/// Bracket around the limit of `f(x)/∏x`.
///
/// `upper` is certified: the limit equals the infimum of the ratio, so it is
/// at most every evaluated ratio. `lower` is the doubling extrapolation
/// clipped into `[0, upper]`, or `0` when that is unavailable.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitBracket {
    pub estimate: FeketeEstimate,
    pub base: MultiIndex,
    pub base_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_end: LowerEnd,
}

impl LimitBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Rounding allowed when an exact extrapolation meets the upper end.
const UPPER_SLACK: f64 = 1e-9;

/// Running infimum over `growth_schedule`, combined with the certified upper
/// bound `f(base)/∏base`. Subadditivity is the caller's responsibility.
pub fn fekete_limit_estimate<F: SubadditiveFn + ?Sized>(
    f: &F,
    base: &MultiIndex,
    growth_schedule: &[MultiIndex],
) -> Result<LimitBracket, FeketeError> {
    let memo = Memo::new(f);
    check_dim(&memo, base)?;
    let estimate = running_infimum(&memo, growth_schedule)?;
    let base_ratio = ratio_at(&memo, base)?;
    let upper = estimate.running_inf.min(base_ratio);
    let (lower, lower_end) = match doubling_estimate(&memo, &estimate.last_box) {
        Some(v) if v > upper + UPPER_SLACK * upper.abs().max(1.0) => (0.0, LowerEnd::Discarded(v)),
        Some(v) => (v.clamp(0.0, upper), LowerEnd::Extrapolated(v)),
        None => (0.0, LowerEnd::Trivial),
    };
    Ok(LimitBracket {
        estimate,
        base: base.clone(),
        base_ratio,
        lower,
        upper,
        lower_end,
    })
}
