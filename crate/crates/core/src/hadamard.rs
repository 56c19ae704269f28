//! Partial Hadamard census, greedy rank partitions and the solution-count
//! pipeline checks.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bounds::{halasz_atom_bound, BoundValue};
use crate::error::{Error, Result};
use crate::exact::{self, ExactMatrix, SignMatrix};
use crate::numeric::{self, binomial, pow2};
use crate::oracle;
use crate::par;

/// Largest `n` the census accepts.
pub const MAX_CENSUS_COLS: usize = 24;
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusOptions {
    /// Fix the first row to all ones and multiply the count by `2^n`.
    pub normalize_first_row: bool,
    /// Limit on expanded partial matrices (those with fewer than `k` rows).
    pub budget: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            normalize_first_row: false,
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusResult {
    pub k: usize,
    pub n: usize,
    pub count: BigUint,
    pub nodes: u64,
    pub normalized: bool,
}

impl CensusResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "n": self.n,
            "count": self.count.to_string(),
            "nodes": self.nodes,
            "normalized": self.normalized,
        })
    }
}

fn check_shape(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::invalid("census needs k >= 1 and n >= 1"));
    }
    if n > MAX_CENSUS_COLS {
        return Err(Error::CapExceeded {
            what: "census columns",
            value: n as u64,
            cap: MAX_CENSUS_COLS as u64,
        });
    }
    Ok(())
}

fn balanced_masks(n: usize) -> Vec<u64> {
    if n % 2 == 1 {
        return Vec::new();
    }
    (0u64..1 << n)
        .filter(|m| m.count_ones() as usize == n / 2)
        .collect()
}

struct Walk<'a, A, L> {
    k: usize,
    half: u32,
    nodes: &'a AtomicU64,
    stop: &'a AtomicBool,
    budget: u64,
    leaf: Option<&'a L>,
    _acc: std::marker::PhantomData<fn(&mut A)>,
}

impl<A, L: Fn(&mut A, &[u64])> Walk<'_, A, L> {
    fn enter(&self) -> bool {
        if self.stop.load(Ordering::Relaxed) {
            return false;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            self.stop.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    // `rows` holds at least two rows; `cands` are exactly the masks
    // orthogonal to all of them.
    fn extend(&self, rows: &mut Vec<u64>, cands: &[u64], acc: &mut A) -> u128 {
        if rows.len() + 1 == self.k {
            if let Some(leaf) = self.leaf {
                for &c in cands {
                    rows.push(c);
                    leaf(acc, rows);
                    rows.pop();
                }
            }
            return cands.len() as u128;
        }
        let mut total = 0;
        for &c in cands {
            if !self.enter() {
                return total;
            }
            if self.leaf.is_none() && rows.len() + 2 == self.k {
                total += cands.iter().filter(|&&x| (x ^ c).count_ones() == self.half).count() as u128;
                continue;
            }
            let next: Vec<u64> = cands
                .iter()
                .copied()
                .filter(|&x| (x ^ c).count_ones() == self.half)
                .collect();
            rows.push(c);
            total += self.extend(rows, &next, acc);
            rows.pop();
        }
        total
    }
}

fn census_core<A, I, L>(
    k: usize,
    n: usize,
    opts: &CensusOptions,
    init: I,
    leaf: Option<&L>,
) -> Result<(CensusResult, Vec<A>)>
where
    A: Send,
    I: Fn() -> A + Sync,
    L: Fn(&mut A, &[u64]) + Sync,
{
    check_shape(k, n)?;
    let first_rows: u64 = if opts.normalize_first_row { 1 } else { 1 << n };
    let scale = if opts.normalize_first_row { pow2(n as u64) } else { BigUint::one() };
    let finish = |count: BigUint, nodes: u64, accs: Vec<A>| {
        Ok((
            CensusResult {
                k,
                n,
                count: count * &scale,
                nodes,
                normalized: opts.normalize_first_row,
            },
            accs,
        ))
    };

    if k == 1 {
        let mut acc = init();
        if let Some(leaf) = leaf {
            for r in 0..first_rows {
                leaf(&mut acc, &[r]);
            }
        }
        return finish(BigUint::from(first_rows), 0, vec![acc]);
    }

    let bal = balanced_masks(n);
    let width = bal.len() as u64;
    let tasks = first_rows * width;
    if k == 2 && leaf.is_none() {
        return finish(BigUint::from(tasks), 0, vec![init()]);
    }
    if 1 + first_rows > opts.budget && k > 2 {
        return Err(Error::BudgetExceeded {
            what: "census node",
            limit: opts.budget,
        });
    }

    let nodes = AtomicU64::new(1 + first_rows);
    let stop = AtomicBool::new(false);
    let walk = Walk {
        k,
        half: (n / 2) as u32,
        nodes: &nodes,
        stop: &stop,
        budget: opts.budget,
        leaf,
        _acc: std::marker::PhantomData,
    };
    let chunks = par::chunk_bounds(tasks, 64);
    let results = par::map_slice(&chunks, |&(lo, hi)| {
        let mut acc = init();
        let mut count: u128 = 0;
        let mut rows = Vec::with_capacity(k);
        for t in lo..hi {
            let r1 = t / width;
            let r2 = r1 ^ bal[(t % width) as usize];
            if k == 2 {
                count += 1;
                if let Some(leaf) = leaf {
                    leaf(&mut acc, &[r1, r2]);
                }
                continue;
            }
            if !walk.enter() {
                break;
            }
            let c = r1 ^ r2;
            if k == 3 && leaf.is_none() {
                count += bal.iter().filter(|&&b| (b ^ c).count_ones() == walk.half).count() as u128;
                continue;
            }
            let cands: Vec<u64> = bal
                .iter()
                .filter(|&&b| (b ^ c).count_ones() == walk.half)
                .map(|&b| r1 ^ b)
                .collect();
            rows.clear();
            rows.push(r1);
            rows.push(r2);
            count += walk.extend(&mut rows, &cands, &mut acc);
        }
        (count, acc)
    });
    if stop.load(Ordering::Relaxed) {
        return Err(Error::BudgetExceeded {
            what: "census node",
            limit: opts.budget,
        });
    }
    let mut total = BigUint::zero();
    let mut accs = Vec::with_capacity(results.len());
    for (c, a) in results {
        total += BigUint::from(c);
        accs.push(a);
    }
    finish(total, nodes.load(Ordering::Relaxed).min(opts.budget), accs)
}

type NoLeaf = fn(&mut (), &[u64]);

/// Number of `k x n` sign matrices with pairwise orthogonal rows.
pub fn enumerate_partial_hadamard(k: usize, n: usize, opts: &CensusOptions) -> Result<CensusResult> {
    census_core::<(), _, NoLeaf>(k, n, opts, || (), None).map(|(r, _)| r)
}

/// Runs `leaf` on every enumerated matrix (every representative when the
/// first row is normalized) as a list of row masks, folding per-chunk
/// accumulators; accumulators come back in enumeration order.
pub fn fold_partial_hadamard<A, I, L>(
    k: usize,
    n: usize,
    opts: &CensusOptions,
    init: I,
    leaf: L,
) -> Result<(CensusResult, Vec<A>)>
where
    A: Send,
    I: Fn() -> A + Sync,
    L: Fn(&mut A, &[u64]) + Sync,
{
    census_core(k, n, opts, init, Some(&leaf))
}

/// Enumerated matrices in order, stopping with an error past `limit`.
pub fn collect_partial_hadamard(
    k: usize,
    n: usize,
    opts: &CensusOptions,
    limit: usize,
) -> Result<Vec<SignMatrix>> {
    let (_, chunks) = fold_partial_hadamard(k, n, opts, Vec::new, |acc: &mut Vec<Vec<u64>>, rows| {
        if acc.len() <= limit {
            acc.push(rows.to_vec());
        }
    })?;
    let all: Vec<Vec<u64>> = chunks.into_iter().flatten().collect();
    if all.len() > limit {
        return Err(Error::CapExceeded {
            what: "collected matrices",
            value: all.len() as u64,
            cap: limit as u64,
        });
    }
    all.iter()
        .map(|rows| SignMatrix::from_row_masks(n, rows))
        .collect()
}

/// Sylvester's `2^m x 2^m` Hadamard matrix.
pub fn sylvester(m: u32) -> SignMatrix {
    let size = 1usize << m;
    let mut h = SignMatrix::ones(size, size);
    for i in 0..size {
        for j in 0..size {
            if (i & j).count_ones() % 2 == 1 {
                h.set(i, j, -1);
            }
        }
    }
    h
}

/// `ell` disjoint column sets, each spanning rank at least `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankPartition {
    pub r: usize,
    pub ell: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl RankPartition {
    /// Disjointness and the rank of every block, rechecked exactly.
    pub fn verify(&self, m: &ExactMatrix) -> bool {
        let mut seen = vec![false; m.cols()];
        for b in &self.blocks {
            for &j in b {
                if j >= seen.len() || seen[j] {
                    return false;
                }
                seen[j] = true;
            }
        }
        self.blocks.len() == self.ell
            && self
                .blocks
                .iter()
                .all(|b| exact::rank(&m.select_cols(b)) >= self.r)
    }

    /// The blocks with every unused column appended to the last block.
    pub fn covering(&self, n: usize) -> Vec<Vec<usize>> {
        let mut used = vec![false; n];
        for b in &self.blocks {
            for &j in b {
                used[j] = true;
            }
        }
        let mut blocks = self.blocks.clone();
        if let Some(last) = blocks.last_mut() {
            last.extend((0..n).filter(|&j| !used[j]));
        }
        blocks
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"r": self.r, "ell": self.ell, "blocks": self.blocks})
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionOutcome {
    Found(RankPartition),
    /// Round `round` (0-based) stopped at rank `reached < r`.
    Failed { round: usize, reached: usize },
}

impl PartitionOutcome {
    pub fn found(&self) -> Option<&RankPartition> {
        match self {
            PartitionOutcome::Found(p) => Some(p),
            PartitionOutcome::Failed { .. } => None,
        }
    }
}

// Column-major i64 copy, so growing a block is a slice append.
struct Columns {
    rows: usize,
    cols: Vec<Vec<i64>>,
}

impl Columns {
    fn new(m: &ExactMatrix) -> Option<Self> {
        let data = m.to_i64()?;
        let (rows, n) = (m.rows(), m.cols());
        let cols = (0..n).map(|j| (0..rows).map(|i| data[i * n + j]).collect()).collect();
        Some(Columns { rows, cols })
    }

    fn rank(&self, idx: &[usize]) -> usize {
        // Transposed: the block's columns become rows.
        let data: Vec<i64> = idx.iter().flat_map(|&j| self.cols[j].iter().copied()).collect();
        exact::rank_of(idx.len(), self.rows, &data)
    }
}

// Greedy rounds for a fixed `r`, stopping after `max_blocks` blocks or at
// the first round that cannot reach rank `r`.
fn greedy_rounds(
    rank: &dyn Fn(&[usize]) -> usize,
    n: usize,
    r: usize,
    max_blocks: usize,
) -> (Vec<Vec<usize>>, Option<(usize, usize)>) {
    let mut used = vec![false; n];
    let mut blocks = Vec::new();
    while blocks.len() < max_blocks {
        let mut block: Vec<usize> = Vec::with_capacity(r);
        for j in 0..n {
            if block.len() == r {
                break;
            }
            if used[j] {
                continue;
            }
            block.push(j);
            if rank(&block) < block.len() {
                block.pop();
            }
        }
        if block.len() < r {
            return (blocks.clone(), Some((blocks.len(), block.len())));
        }
        for &j in &block {
            used[j] = true;
        }
        blocks.push(block);
    }
    (blocks, None)
}

fn rank_closure(m: &ExactMatrix) -> Box<dyn Fn(&[usize]) -> usize + '_> {
    match Columns::new(m) {
        Some(c) => Box::new(move |idx: &[usize]| c.rank(idx)),
        None => Box::new(move |idx: &[usize]| exact::rank(&m.select_cols(idx))),
    }
}

/// Greedy blocks of rank `r`, as many as possible up to `max_blocks`.
pub fn greedy_rounds_for(m: &ExactMatrix, r: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    let rank = rank_closure(m);
    greedy_rounds(&*rank, m.cols(), r, max_blocks).0
}

/// Builds `ell` blocks one at a time, each a set of `r` independent columns
/// taken greedily among the columns not used so far.
pub fn greedy_rank_partition(m: &ExactMatrix, r: usize, ell: usize) -> Result<PartitionOutcome> {
    if r == 0 || ell == 0 {
        return Err(Error::invalid("rank partition needs r >= 1 and ell >= 1"));
    }
    let rank = rank_closure(m);
    let (blocks, failure) = greedy_rounds(&*rank, m.cols(), r, ell);
    if let Some((round, reached)) = failure {
        return Ok(PartitionOutcome::Failed { round, reached });
    }
    let p = RankPartition { r, ell, blocks };
    if !p.verify(m) {
        return Err(Error::Nonconvergence("greedy partition failed its rank certificate".into()));
    }
    Ok(PartitionOutcome::Found(p))
}

/// `(e^2 ell)^k < (n/r)^(k-r)` with `e^2` replaced by an upper enclosure.
pub fn feasibility_condition(k: u64, n: u64, r: u64, ell: u64) -> Result<bool> {
    if ell < 2 || r == 0 || r > k || k > n {
        return Err(Error::invalid(format!(
            "need 2 <= ell and 1 <= r <= k <= n, got k={k} n={n} r={r} ell={ell}"
        )));
    }
    let lhs = num_traits::pow(numeric::e_squared_upper() * BigRational::from_integer(ell.into()), k as usize);
    let rhs = num_traits::pow(numeric::rational(n, r), (k - r) as usize);
    Ok(lhs < rhs)
}

/// `r = floor(k/2)` and the largest `ell` with `ell^2 k e^4 <= n`, using an
/// upper enclosure of `e^4`.
pub fn operating_point(k: u64, n: u64) -> (u64, u64) {
    let e4 = numeric::e_fourth_upper();
    let n = BigRational::from_integer(n.into());
    let mut ell = 0u64;
    while BigRational::from_integer(((ell + 1) * (ell + 1) * k).into()) * &e4 <= n {
        ell += 1;
    }
    (k / 2, ell)
}

/// `binom(n+1, 2) - C (c2^2 - c1^2) n^2 / 2`.
pub fn hadamard_upper_bound_exponent(n: u64, c1: f64, c2: f64, c: f64) -> Result<f64> {
    if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
        return Err(Error::invalid(format!("need 0 < c1 < c2 < 1, got c1={c1} c2={c2}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("C must be finite and >= 0, got {c}")));
    }
    let nf = n as f64;
    Ok((n * (n + 1) / 2) as f64 - c * (c2 * c2 - c1 * c1) * nf * nf / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub budget: u64,
    /// Check one matrix per column-negation class (first row all ones).
    pub representatives: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            budget: DEFAULT_NODE_BUDGET,
            representatives: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub k: usize,
    pub n: usize,
    pub census: CensusResult,
    pub matrices_checked: u64,
    /// Matrices each checked one stands for.
    pub weight: BigUint,
    pub gram_ok: bool,
    pub odlyzko_count: BigUint,
    pub odlyzko_ok: bool,
    pub solutions_min: u64,
    pub solutions_max: u64,
    /// Pairs `(r, ell)` with `ell` even that pass the feasibility test.
    pub feasible_pairs: Vec<(usize, usize)>,
    /// Every matrix admitted a greedy partition at every feasible pair.
    pub feasible_partitions_ok: bool,
    /// Matrices with a greedy partition at some even `ell`.
    pub with_partition: u64,
    pub halasz_ok: bool,
    pub halasz_checks: u64,
    /// Extremes of solutions / (2^n times the best Halász atom bound).
    pub halasz_ratio_min: f64,
    pub halasz_ratio_max: f64,
    /// Extremes of solutions / 2^(n-k).
    pub odlyzko_ratio_min: f64,
    pub odlyzko_ratio_max: f64,
}

impl PipelineReport {
    pub fn passed(&self) -> bool {
        self.gram_ok && self.odlyzko_ok && self.halasz_ok && self.feasible_partitions_ok
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "n": self.n,
            "census": self.census.to_json(),
            "matrices_checked": self.matrices_checked,
            "weight": self.weight.to_string(),
            "gram_ok": self.gram_ok,
            "odlyzko_count": self.odlyzko_count.to_string(),
            "odlyzko_ok": self.odlyzko_ok,
            "solutions_min": self.solutions_min,
            "solutions_max": self.solutions_max,
            "feasible_pairs": self.feasible_pairs,
            "feasible_partitions_ok": self.feasible_partitions_ok,
            "with_partition": self.with_partition,
            "halasz_ok": self.halasz_ok,
            "halasz_checks": self.halasz_checks,
            "halasz_ratio_min": self.halasz_ratio_min,
            "halasz_ratio_max": self.halasz_ratio_max,
            "odlyzko_ratio_min": self.odlyzko_ratio_min,
            "odlyzko_ratio_max": self.odlyzko_ratio_max,
            "passed": self.passed(),
        })
    }
}

#[derive(Clone, Debug)]
struct PipelineAcc {
    checked: u64,
    gram_ok: bool,
    odlyzko_ok: bool,
    sol_min: u64,
    sol_max: u64,
    feasible_ok: bool,
    with_partition: u64,
    halasz_ok: bool,
    halasz_checks: u64,
    hr: (f64, f64),
    or: (f64, f64),
    error: Option<Error>,
}

impl PipelineAcc {
    fn new() -> Self {
        PipelineAcc {
            checked: 0,
            gram_ok: true,
            odlyzko_ok: true,
            sol_min: u64::MAX,
            sol_max: 0,
            feasible_ok: true,
            with_partition: 0,
            halasz_ok: true,
            halasz_checks: 0,
            hr: (f64::INFINITY, 0.0),
            or: (f64::INFINITY, 0.0),
            error: None,
        }
    }

    fn merge(&mut self, o: PipelineAcc) {
        self.checked += o.checked;
        self.gram_ok &= o.gram_ok;
        self.odlyzko_ok &= o.odlyzko_ok;
        self.sol_min = self.sol_min.min(o.sol_min);
        self.sol_max = self.sol_max.max(o.sol_max);
        self.feasible_ok &= o.feasible_ok;
        self.with_partition += o.with_partition;
        self.halasz_ok &= o.halasz_ok;
        self.halasz_checks += o.halasz_checks;
        self.hr = (self.hr.0.min(o.hr.0), self.hr.1.max(o.hr.1));
        self.or = (self.or.0.min(o.or.0), self.or.1.max(o.or.1));
        if self.error.is_none() {
            self.error = o.error;
        }
    }
}

struct PipelineCtx {
    k: usize,
    n: usize,
    gram_target: num_bigint::BigInt,
    odlyzko: u64,
    feasible: Vec<(usize, usize)>,
    // thresholds[ell][sum of ranks] = (floor(2^n * bound), 2^n * bound as f64)
    thresholds: Vec<Vec<(u64, f64)>>,
}

fn halasz_thresholds(k: usize, n: usize) -> Result<Vec<Vec<(u64, f64)>>> {
    let full = BigRational::from_integer(pow2(n as u64).into());
    let mut table = vec![Vec::new(); n + 1];
    for ell in (2..=n).step_by(2) {
        let mut row = Vec::with_capacity(ell * k + 1);
        for total in 0..=ell * k {
            let mut ranks = vec![total / ell; ell];
            for r in ranks.iter_mut().take(total % ell) {
                *r += 1;
            }
            let bound = halasz_atom_bound(&ranks, ell)?;
            let scaled = match &bound {
                BoundValue::Exact(b) => b * &full,
                BoundValue::Upper(u) => numeric::exact_f64(*u) * &full,
            };
            let floor = numeric::floor_rational(&scaled);
            let floor = u64::try_from(floor).unwrap_or(u64::MAX);
            row.push((floor, bound.upper_f64() * full_f64(n)));
        }
        table[ell] = row;
    }
    Ok(table)
}

fn check_one(ctx: &PipelineCtx, acc: &mut PipelineAcc, rows: &[u64]) -> Result<()> {
    let (k, n) = (ctx.k, ctx.n);
    let h = SignMatrix::from_row_masks(n, rows)?.to_exact();
    acc.checked += 1;
    if exact::gram_det(&h)? != ctx.gram_target {
        acc.gram_ok = false;
    }
    let sols = oracle::count_sign_solutions(&h, &vec![0; k], oracle::DEFAULT_SOLUTION_CAP)?;
    acc.sol_min = acc.sol_min.min(sols);
    acc.sol_max = acc.sol_max.max(sols);
    if sols > ctx.odlyzko {
        acc.odlyzko_ok = false;
    }
    let orr = sols as f64 / ctx.odlyzko as f64;
    acc.or = (acc.or.0.min(orr), acc.or.1.max(orr));

    let rank = rank_closure(&h);
    let mut best: Option<f64> = None;
    for r in 1..=k {
        let (blocks, _) = greedy_rounds(&*rank, n, r, n / r);
        for &(fr, fl) in &ctx.feasible {
            if fr == r && blocks.len() < fl {
                acc.feasible_ok = false;
            }
        }
        for ell in (2..=blocks.len()).step_by(2) {
            let p = RankPartition {
                r,
                ell,
                blocks: blocks[..ell].to_vec(),
            };
            // The bound depends on the ranks only through their sum; the
            // first ell - 1 blocks have rank exactly r.
            let cover = p.covering(n);
            let total = r * (ell - 1) + rank(&cover[ell - 1]);
            let (floor, count) = ctx.thresholds[ell][total];
            acc.halasz_checks += 1;
            if sols > floor {
                acc.halasz_ok = false;
            }
            best = Some(best.map_or(count, |b: f64| b.min(count)));
        }
    }
    if let Some(b) = best {
        acc.with_partition += 1;
        let ratio = sols as f64 / b;
        acc.hr = (acc.hr.0.min(ratio), acc.hr.1.max(ratio));
    }
    Ok(())
}

fn full_f64(n: usize) -> f64 {
    2f64.powi(n as i32)
}

/// Runs the solution-count checks over every enumerated `H_{k,n}`: Gram
/// determinant `n^k`, solutions of `Hx = 0` against `2^(n-k)`, greedy rank
/// partitions at every feasible `(r, ell)`, and the Halász count
/// `2^n * bound` for every even `ell` the greedy construction reaches.
///
/// All quantities are invariant under negating columns, so by default only
/// matrices whose first row is all ones are visited.
pub fn pipeline_bound_check(k: usize, n: usize, opts: &PipelineOptions) -> Result<PipelineReport> {
    check_shape(k, n)?;
    let mut feasible = Vec::new();
    if k <= n {
        for r in 1..=k {
            for ell in (2..=n).step_by(2) {
                if feasibility_condition(k as u64, n as u64, r as u64, ell as u64)? {
                    feasible.push((r, ell));
                }
            }
        }
    }
    let ctx = PipelineCtx {
        k,
        n,
        gram_target: num_traits::pow(num_bigint::BigInt::from(n), k),
        odlyzko: 1u64 << n.saturating_sub(k),
        feasible: feasible.clone(),
        thresholds: halasz_thresholds(k, n)?,
    };
    let copts = CensusOptions {
        normalize_first_row: opts.representatives,
        budget: opts.budget,
    };
    let (census, accs) = fold_partial_hadamard(k, n, &copts, PipelineAcc::new, |acc, rows| {
        if acc.error.is_none() {
            if let Err(e) = check_one(&ctx, acc, rows) {
                acc.error = Some(e);
            }
        }
    })?;
    let mut total = PipelineAcc::new();
    for a in accs {
        total.merge(a);
    }
    if let Some(e) = total.error {
        return Err(e);
    }
    let empty = total.checked == 0;
    Ok(PipelineReport {
        k,
        n,
        census,
        matrices_checked: total.checked,
        weight: if opts.representatives { pow2(n as u64) } else { BigUint::one() },
        gram_ok: total.gram_ok,
        odlyzko_count: BigUint::from(ctx.odlyzko),
        odlyzko_ok: total.odlyzko_ok,
        solutions_min: if empty { 0 } else { total.sol_min },
        solutions_max: total.sol_max,
        feasible_pairs: feasible,
        feasible_partitions_ok: total.feasible_ok,
        with_partition: total.with_partition,
        halasz_ok: total.halasz_ok,
        halasz_checks: total.halasz_checks,
        halasz_ratio_min: if total.with_partition == 0 { 0.0 } else { total.hr.0 },
        halasz_ratio_max: total.hr.1,
        odlyzko_ratio_min: if empty { 0.0 } else { total.or.0 },
        odlyzko_ratio_max: total.or.1,
    })
}

/// `binom(n, n/2)`, the number of rows orthogonal to a fixed row.
pub fn orthogonal_row_count(n: u64) -> BigUint {
    if n % 2 == 1 {
        BigUint::zero()
    } else {
        binomial(n, n / 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent count: every k-tuple of rows, pairwise orthogonality by
    // explicit +-1 dot products.
    fn brute_count(k: usize, n: usize) -> u64 {
        let total = 1u64 << (n * k);
        let mut count = 0;
        for code in 0..total {
            let rows: Vec<Vec<i64>> = (0..k)
                .map(|i| {
                    (0..n)
                        .map(|j| if code >> (i * n + j) & 1 == 1 { -1 } else { 1 })
                        .collect()
                })
                .collect();
            let ok = (0..k).all(|a| {
                (a + 1..k).all(|b| rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum::<i64>() == 0)
            });
            if ok {
                count += 1;
            }
        }
        count
    }

    fn count(k: usize, n: usize, normalize: bool) -> BigUint {
        let opts = CensusOptions {
            normalize_first_row: normalize,
            ..Default::default()
        };
        enumerate_partial_hadamard(k, n, &opts).unwrap().count
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(1, 1, false), BigUint::from(2u32));
        assert_eq!(count(2, 2, false), BigUint::from(8u32));
        for (k, n) in [(2, 4), (3, 4), (4, 4), (3, 3), (2, 5), (3, 2), (2, 6)] {
            assert_eq!(count(k, n, false), BigUint::from(brute_count(k, n)), "k={k} n={n}");
            assert_eq!(count(k, n, true), count(k, n, false), "k={k} n={n}");
        }
        assert_eq!(count(4, 4, false), BigUint::from(768u32));
    }

    #[test]
    fn collected_matrices_are_orthogonal() {
        let ms = collect_partial_hadamard(3, 4, &CensusOptions::default(), 10_000).unwrap();
        assert_eq!(ms.len() as u64, brute_count(3, 4));
        for m in &ms {
            assert_eq!(exact::gram_det(&m.to_exact()).unwrap(), num_bigint::BigInt::from(64));
        }
        assert!(collect_partial_hadamard(3, 4, &CensusOptions::default(), 10).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let opts = CensusOptions {
            normalize_first_row: false,
            budget: 1000,
        };
        let err = enumerate_partial_hadamard(4, 8, &opts).unwrap_err();
        assert!(err.is_resource_error());
        assert!(enumerate_partial_hadamard(2, 30, &CensusOptions::default()).is_err());
    }

    #[test]
    fn sylvester_is_hadamard() {
        for m in 0..4 {
            let h = sylvester(m);
            let n = h.rows();
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(h.row_dot(a, b), if a == b { n as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn greedy_partition_examples() {
        let d = 3;
        let mut rows = vec![vec![0i64; 2 * d]; d];
        for i in 0..d {
            rows[i][i] = 1;
            rows[i][d + i] = 1;
        }
        let m = ExactMatrix::from_rows(&rows).unwrap();
        let p = greedy_rank_partition(&m, d, 2).unwrap();
        assert_eq!(p.found().unwrap().blocks, vec![vec![0, 1, 2], vec![3, 4, 5]]);

        let rank1 = ExactMatrix::from_rows(&[vec![1, 2, 3], vec![2, 4, 6]]).unwrap();
        assert!(matches!(
            greedy_rank_partition(&rank1, 2, 1).unwrap(),
            PartitionOutcome::Failed { round: 0, reached: 1 }
        ));
        assert!(greedy_rank_partition(&rank1, 0, 1).is_err());

        let h = sylvester(3).to_exact();
        let p = greedy_rank_partition(&h.select_rows(&[0, 1, 2]), 3, 2).unwrap();
        let p = p.found().unwrap();
        assert!(p.verify(&h.select_rows(&[0, 1, 2])));
        assert_eq!(p.covering(8).iter().map(Vec::len).sum::<usize>(), 8);
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasibility_condition(2, 1000, 1, 2).unwrap());
        assert!(!feasibility_condition(2, 200, 1, 2).unwrap());
        for k in 1..6 {
            assert!(!feasibility_condition(k, 100, k, 2).unwrap());
        }
        assert!(feasibility_condition(3, 2, 1, 2).is_err());
        for k in [2u64, 4, 6, 10, 20] {
            let n = 15_000 * k;
            let (r, ell) = operating_point(k, n);
            assert!(ell >= 2);
            assert!(feasibility_condition(k, n, r, ell).unwrap(), "k={k}");
        }
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(hadamard_upper_bound_exponent(10, 0.1, 0.2, 0.0).unwrap(), 55.0);
        let e = hadamard_upper_bound_exponent(100, 0.1, 0.2, 0.1).unwrap();
        assert!((e - 5035.0).abs() < 1e-9);
        assert!(hadamard_upper_bound_exponent(100, 0.3, 0.2, 0.1).is_err());
    }

    #[test]
    fn pipeline_small() {
        let rep = pipeline_bound_check(2, 4, &PipelineOptions::default()).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.solutions_max, 4);
        assert_eq!(rep.odlyzko_count, BigUint::from(4u32));
        let full = pipeline_bound_check(
            2,
            4,
            &PipelineOptions {
                representatives: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(full.matrices_checked as u64, brute_count(2, 4));
        assert_eq!(full.solutions_min, rep.solutions_min);
        assert_eq!(full.solutions_max, rep.solutions_max);
        let rep = pipeline_bound_check(3, 8, &PipelineOptions::default()).unwrap();
        assert!(rep.passed());
        assert!(rep.halasz_checks > 0);
    }

    proptest! {
        #[test]
        fn census_count_symmetries(k in 1usize..=3, n in 1usize..=8) {
            let c = count(k, n, false);
            prop_assert!((&c % pow2(k as u64)).is_zero());
            prop_assert!((&c % 2u32).is_zero());
            prop_assert_eq!(c, count(k, n, true));
        }

        #[test]
        fn greedy_partitions_verify(rows in 1usize..4, cols in 1usize..10, seed in any::<u64>(), r in 1usize..4, ell in 1usize..4) {
            let mut state = seed;
            let data: Vec<i64> = (0..rows * cols).map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 5) as i64 - 2
            }).collect();
            let m = ExactMatrix::from_i64(rows, cols, data).unwrap();
            if let PartitionOutcome::Found(p) = greedy_rank_partition(&m, r, ell).unwrap() {
                prop_assert!(p.verify(&m));
                prop_assert_eq!(p.blocks.len(), ell);
            } else {
                prop_assert!(r * ell > cols || r > exact::rank(&m) || ell > 1);
            }
        }
    }
}
