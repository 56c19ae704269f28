//! Closed-form anti-concentration bounds, reciprocal tuples and stable rank.

use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, ExactMatrix};
use crate::numeric::{self, binomial, pow2, pow_frac_up};
use crate::par;

/// Vectors `a_1..a_n` in `Z^d` with a partition into blocks.
///
/// Block indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorSystem {
    pub d: usize,
    pub vectors: Vec<Vec<i64>>,
    pub partition: Vec<Vec<usize>>,
}

impl VectorSystem {
    pub fn new(d: usize, vectors: Vec<Vec<i64>>, partition: Vec<Vec<usize>>) -> Result<Self> {
        let sys = VectorSystem {
            d,
            vectors,
            partition,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// One block holding every vector.
    pub fn single_block(d: usize, vectors: Vec<Vec<i64>>) -> Result<Self> {
        let n = vectors.len();
        Self::new(d, vectors, vec![(0..n).collect()])
    }

    pub fn validate(&self) -> Result<()> {
        if self.vectors.is_empty() {
            return Err(Error::invalid("vector system is empty"));
        }
        for v in &self.vectors {
            if v.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: v.len(),
                });
            }
        }
        if self.partition.is_empty() {
            return Err(Error::invalid("partition has no blocks"));
        }
        let mut seen = vec![false; self.vectors.len()];
        for block in &self.partition {
            if block.is_empty() {
                return Err(Error::invalid("partition block is empty"));
            }
            for &i in block {
                if i >= seen.len() {
                    return Err(Error::invalid(format!("partition index {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::invalid(format!("index {i} in two blocks")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("partition does not cover every vector"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn ell(&self) -> usize {
        self.partition.len()
    }

    pub fn with_partition(&self, partition: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(self.d, self.vectors.clone(), partition)
    }

    /// The `d x n` matrix whose columns are the vectors.
    pub fn matrix(&self) -> ExactMatrix {
        self.columns_matrix(&(0..self.n()).collect::<Vec<_>>())
    }

    /// The `d x |A_i|` matrix of block `i`.
    pub fn block_matrix(&self, i: usize) -> ExactMatrix {
        self.columns_matrix(&self.partition[i])
    }

    fn columns_matrix(&self, idx: &[usize]) -> ExactMatrix {
        let mut data = Vec::with_capacity(self.d * idx.len());
        for r in 0..self.d {
            for &j in idx {
                data.push(self.vectors[j][r]);
            }
        }
        ExactMatrix::from_i64(self.d, idx.len(), data).expect("shape")
    }

    /// `r_i = dim span(A_i)` for every block.
    pub fn block_ranks(&self) -> Vec<usize> {
        (0..self.ell())
            .map(|i| exact::rank(&self.block_matrix(i)))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            d: usize,
            vectors: Vec<Vec<i64>>,
            #[serde(default)]
            partition: Option<Vec<Vec<usize>>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match raw.partition {
            Some(p) => Self::new(raw.d, raw.vectors, p),
            None => Self::single_block(raw.d, raw.vectors),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"d": self.d, "vectors": self.vectors, "partition": self.partition})
    }
}

/// The tightness family `a_i = e_{i mod d}`, `n = ell * d`, with blocks of
/// consecutive basis vectors.
pub fn tightness_system(d: usize, ell: usize) -> VectorSystem {
    let n = d * ell;
    let vectors = (0..n)
        .map(|i| {
            let mut v = vec![0; d];
            v[i % d] = 1;
            v
        })
        .collect();
    let partition = (0..ell).map(|b| (b * d..(b + 1) * d).collect()).collect();
    VectorSystem::new(d, vectors, partition).expect("valid by construction")
}

/// A bound that is either an exact rational or a certified float upper bound.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundValue {
    Exact(BigRational),
    Upper(f64),
}

impl BoundValue {
    /// A float that is at least the bound.
    pub fn upper_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => numeric::to_f64_up(r),
            BoundValue::Upper(x) => *x,
        }
    }

    /// True if the exact rational `x` is at most this bound.
    pub fn dominates(&self, x: &BigRational) -> bool {
        match self {
            BoundValue::Exact(r) => x <= r,
            BoundValue::Upper(u) => *x <= numeric::exact_f64(*u),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            BoundValue::Exact(r) => serde_json::json!({
                "exact": numeric::ratio_string(r),
                "value": numeric::to_f64_up(r),
            }),
            BoundValue::Upper(x) => serde_json::json!({"upper": x, "value": x}),
        }
    }
}

/// Free parameters of the small-ball bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    #[serde(rename = "M")]
    pub m: f64,
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            m: 1.0,
            eps: 0.5,
            delta: 0.0,
            lambda: 1.0,
            c: 1.0,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0) {
            return Err(Error::invalid(format!("M must be >= 1, got {}", self.m)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(format!("eps must be in (0,1), got {}", self.eps)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::invalid(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid(format!(
                "lambda must be in (0,1], got {}",
                self.lambda
            )));
        }
        check_c(self.c)
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("C must be positive, got {c}")))
    }
}

pub fn odlyzko_bound(d: u64) -> BigUint {
    pow2(d)
}

/// `binom(n, floor(n/2))` and `2^n`, unreduced.
pub fn erdos_lo_parts(n: u64) -> Result<(BigUint, BigUint)> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    Ok((binomial(n, n / 2), pow2(n)))
}

pub fn erdos_lo_bound(n: u64) -> Result<BigRational> {
    let (num, den) = erdos_lo_parts(n)?;
    Ok(BigRational::new(num.into(), den.into()))
}

/// `2^-ell * binom(ell, ell/2)`.
pub fn halasz_base(ell: u64) -> BigRational {
    BigRational::new(binomial(ell, ell / 2).into(), pow2(ell).into())
}

/// `(2^-ell binom(ell, ell/2))^((r_1+...+r_ell)/ell)`.
pub fn halasz_atom_bound(ranks: &[usize], ell: usize) -> Result<BoundValue> {
    if ell < 2 || ell % 2 == 1 {
        return Err(Error::invalid(format!("ell must be even and >= 2, got {ell}")));
    }
    if ranks.len() != ell {
        return Err(Error::DimensionMismatch {
            expected: ell,
            found: ranks.len(),
        });
    }
    let total: u64 = ranks.iter().map(|&r| r as u64).sum();
    let base = halasz_base(ell as u64);
    if total % ell as u64 == 0 {
        let p = (total / ell as u64) as usize;
        Ok(BoundValue::Exact(num_traits::pow(base, p)))
    } else {
        Ok(BoundValue::Upper(pow_frac_up(&base, total, ell as u64)))
    }
}

/// `(2^-ell binom(ell, floor(ell/2)))^r`, the tensorized Erdős bound.
pub fn elo_large_rank_bound(ell: u64, r: u64) -> Result<BigRational> {
    if ell == 0 {
        return Err(Error::invalid("ell must be >= 1"));
    }
    Ok(num_traits::pow(halasz_base(ell), r as usize))
}

/// `(C/ell)^(r/2) * max_{|I|=r} prod_{i in I} (1 - L(X_i,0))^(-1/2)`, given
/// the complements `1 - L(X_i, 0)`.
pub fn rogozin_large_rank_bound(c: f64, ell: u64, r: usize, complements: &[f64]) -> Result<f64> {
    check_c(c)?;
    if ell == 0 {
        return Err(Error::invalid("ell must be >= 1"));
    }
    if r > complements.len() {
        return Err(Error::invalid("rank exceeds the number of coordinates"));
    }
    check_unit_interval(complements)?;
    let mut sorted = complements.to_vec();
    sorted.sort_by(f64::total_cmp);
    // The product is maximised by the r smallest complements.
    let worst: f64 = sorted[..r].iter().map(|x| 1.0 / x.sqrt()).product();
    Ok((c / ell as f64).powf(r as f64 / 2.0) * worst)
}

fn check_unit_interval(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
        Some(x) => Err(Error::invalid(format!("entry {x} outside [0,1]"))),
        None => Ok(()),
    }
}

/// `C / sqrt(sum of (1 - L(X_i, delta)))`.
pub fn rogozin_bound(levy_complements: &[f64], c: f64) -> Result<f64> {
    check_c(c)?;
    check_unit_interval(levy_complements)?;
    let sum: f64 = levy_complements.iter().sum();
    if sum <= 0.0 {
        return Err(Error::invalid("sum of Lévy complements is zero"));
    }
    Ok(c / sum.sqrt())
}

/// `(C M rho / sqrt(eps))^ceil((1-eps) r_s)`.
pub fn rudelson_vershynin_bound(rho: f64, m: f64, eps: f64, c: f64, stable_rank: u64) -> Result<f64> {
    check_c(c)?;
    if !(m >= 1.0) || !(eps > 0.0 && eps < 1.0) || !(rho >= 0.0) {
        return Err(Error::invalid("need M >= 1, eps in (0,1), rho >= 0"));
    }
    let exp = numeric::ceil_nonneg((1.0 - eps) * stable_rank as f64);
    Ok((c / eps.sqrt() * m * rho).powf(exp as f64))
}

/// `(pi^(3/2) d / sqrt 2)^d * m^(-d/2)`.
pub fn howard_oskolkov_bound(d: u64, m: u64) -> Result<f64> {
    if d == 0 || m == 0 {
        return Err(Error::invalid("need d >= 1 and m >= 1"));
    }
    let base = PI.powf(1.5) * d as f64 / (2.0 * m as f64).sqrt();
    Ok(base.powi(d as i32))
}

/// `(2d/3)^(d/2) * m^(-d/2)`.
pub fn improved_constant_bound(d: u64, m: u64) -> Result<f64> {
    if d == 0 || m < d {
        return Err(Error::invalid("need 1 <= d <= m"));
    }
    Ok((2.0 * d as f64 / (3.0 * m as f64)).powf(d as f64 / 2.0))
}

/// Dimension above which stable rank is not certified.
pub const STABLE_RANK_DIM_CAP: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableRankReport {
    /// `||A||_HS^2`, an integer for integer matrices.
    pub hs_norm_sq: BigInt,
    /// Certified enclosure of `||A||^2`.
    pub op_norm_sq_lo: f64,
    pub op_norm_sq_hi: f64,
    /// Power-iteration estimate of `||A||^2`.
    pub op_norm_sq_estimate: f64,
    pub stable_rank: usize,
}

/// `floor(||A||_HS^2 / ||A||^2)`, certified exactly.
///
/// Power iteration gives a candidate `q`; it is then confirmed by checking
/// that `hs I - q G` is positive semidefinite and `hs I - (q+1) G` is not,
/// where `G` is the smaller Gram matrix.
pub fn stable_rank(m: &ExactMatrix) -> Result<StableRankReport> {
    if m.is_zero() {
        return Err(Error::invalid("stable rank of the zero matrix"));
    }
    let g = if m.rows() <= m.cols() {
        m.mul(&m.transpose())?
    } else {
        m.transpose().mul(m)?
    };
    let dim = g.rows();
    if dim > STABLE_RANK_DIM_CAP {
        return Err(Error::Nonconvergence(format!(
            "stable rank certification limited to dimension {STABLE_RANK_DIM_CAP}, got {dim}"
        )));
    }
    let hs = m.frobenius_sq();
    let (estimate, vector) = power_iteration(&g);
    let rayleigh = rayleigh_quotient(&g, &vector);

    let rank = exact::rank(m);
    let hs_f = hs.to_f64().unwrap_or(f64::MAX);
    let mut q = if estimate > 0.0 {
        ((hs_f / estimate).floor() as usize).clamp(1, rank)
    } else {
        1
    };
    let psd_at = |q: usize| is_psd(&shifted(&g, &hs, q));
    if psd_at(q) {
        while psd_at(q + 1) {
            q += 1;
        }
    } else {
        // hs I - G is always PSD, so this stops at q = 1 at the latest.
        while !psd_at(q) {
            q -= 1;
        }
    }
    let hs_r = BigRational::from_integer(hs.clone());
    let upper = &hs_r / BigInt::from(q);
    let lower = &hs_r / BigInt::from(q + 1);
    let lo = if rayleigh > lower { rayleigh } else { lower };
    let gersh = BigRational::from_integer(gershgorin(&g));
    let hi = if gersh < upper { gersh } else { upper };
    Ok(StableRankReport {
        hs_norm_sq: hs,
        op_norm_sq_lo: numeric::to_f64_down(&lo),
        op_norm_sq_hi: numeric::to_f64_up(&hi),
        op_norm_sq_estimate: estimate,
        stable_rank: q,
    })
}

fn shifted(g: &ExactMatrix, hs: &BigInt, q: usize) -> ExactMatrix {
    let n = g.rows();
    let mut out = ExactMatrix::zeros(n, n);
    let q = BigInt::from(q);
    for i in 0..n {
        for j in 0..n {
            let mut v = -(&q * g.get(i, j));
            if i == j {
                v += hs;
            }
            out.set(i, j, v);
        }
    }
    out
}

fn gershgorin(g: &ExactMatrix) -> BigInt {
    (0..g.rows())
        .map(|i| g.row(i).iter().map(|x| x.abs()).sum::<BigInt>())
        .max()
        .unwrap_or_default()
}

fn power_iteration(g: &ExactMatrix) -> (f64, Vec<f64>) {
    let n = g.rows();
    let a: Vec<f64> = g.entries().iter().map(|x| x.to_f64().unwrap_or(f64::MAX)).collect();
    // Mild asymmetry in the start vector keeps it off invariant subspaces.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0) / (n as f64 + 7.0)).collect();
    let mut est = 0.0;
    for _ in 0..5000 {
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = (0..n).map(|j| a[i * n + j] * x[j]).sum();
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let rq = x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
            / x.iter().map(|v| v * v).sum::<f64>();
        x = y.into_iter().map(|v| v / norm).collect();
        if (rq - est).abs() <= 1e-15 * rq.abs() {
            est = rq;
            break;
        }
        est = rq;
    }
    (est, x)
}

fn rayleigh_quotient(g: &ExactMatrix, x: &[f64]) -> BigRational {
    let xr: Vec<BigRational> = x.iter().map(|&v| numeric::exact_f64(v)).collect();
    let n = g.rows();
    let mut num = BigRational::zero();
    for i in 0..n {
        for j in 0..n {
            num += &xr[i] * &xr[j] * BigRational::from_integer(g.get(i, j).clone());
        }
    }
    let den: BigRational = xr.iter().map(|v| v * v).sum();
    if den.is_zero() {
        BigRational::zero()
    } else {
        num / den
    }
}

/// Exact positive-semidefiniteness test for a symmetric integer matrix, by
/// symmetric elimination with diagonal pivoting.
pub fn is_psd(m: &ExactMatrix) -> bool {
    let n = m.rows();
    let mut a: Vec<BigRational> = m
        .entries()
        .iter()
        .map(|x| BigRational::from_integer(x.clone()))
        .collect();
    let mut active = vec![true; n];
    loop {
        let live: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        if live.is_empty() {
            return true;
        }
        if live.iter().any(|&i| a[i * n + i].is_negative()) {
            return false;
        }
        let p = *live
            .iter()
            .max_by(|&&i, &&j| a[i * n + i].cmp(&a[j * n + j]))
            .unwrap();
        if a[p * n + p].is_zero() {
            // A PSD matrix with zero diagonal is zero.
            return live
                .iter()
                .all(|&i| live.iter().all(|&j| a[i * n + j].is_zero()));
        }
        active[p] = false;
        let piv = a[p * n + p].clone();
        for &i in &live {
            if i == p || a[i * n + p].is_zero() {
                continue;
            }
            let f = &a[i * n + p] / &piv;
            for &j in &live {
                if j != p {
                    let delta = &f * &a[p * n + j];
                    a[i * n + j] -= delta;
                }
            }
        }
    }
}

/// Per-block data used by the small-ball bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockStats {
    pub rank: usize,
    pub hs_norm: f64,
    pub stable_rank: usize,
}

pub fn block_stats(system: &VectorSystem) -> Result<Vec<BlockStats>> {
    (0..system.ell())
        .map(|i| {
            let a = system.block_matrix(i);
            let sr = stable_rank(&a)?;
            Ok(BlockStats {
                rank: exact::rank(&a),
                hs_norm: sr.hs_norm_sq.to_f64().unwrap_or(f64::MAX).sqrt(),
                stable_rank: sr.stable_rank,
            })
        })
        .collect()
}

fn big_f64(b: &BigUint) -> f64 {
    b.to_f64().unwrap_or(f64::MAX)
}

// One factor of the small-ball product, in log form.
fn sbp_log_factor(st: &BlockStats, b: f64, p: &BoundParams) -> f64 {
    let exp = numeric::ceil_nonneg((1.0 - p.eps) * st.stable_rank as f64) as f64 / b;
    if exp == 0.0 {
        return 0.0;
    }
    let base = p.c * p.m / ((p.eps * b * p.lambda).sqrt() * st.hs_norm);
    exp * base.ln()
}

/// `2^d prod_i (C M / (sqrt(eps l) ||A_i||_HS))^(ceil((1-eps) r_s(A_i))/l)`.
pub fn halasz_sbp_bound(system: &VectorSystem, params: &BoundParams) -> Result<f64> {
    params.validate()?;
    let ell = system.ell();
    if ell % 2 == 1 {
        return Err(Error::invalid(format!("ell must be even, got {ell}")));
    }
    // lambda does not enter this bound.
    let p = BoundParams {
        lambda: 1.0,
        ..*params
    };
    let blocks = block_stats(system)?;
    let log: f64 = blocks
        .iter()
        .map(|st| sbp_log_factor(st, ell as f64, &p))
        .sum();
    Ok((system.d as f64 * std::f64::consts::LN_2 + log).exp())
}

/// A tuple `(b_1..b_l)` with `sum 1/b_i = 1`, stored non-decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReciprocalTuple {
    pub b: Vec<BigUint>,
}

impl ReciprocalTuple {
    pub fn from_u64(b: &[u64]) -> Self {
        let mut b: Vec<BigUint> = b.iter().map(|&x| BigUint::from(x)).collect();
        b.sort();
        ReciprocalTuple { b }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn reciprocal_sum(&self) -> BigRational {
        self.b
            .iter()
            .map(|b| BigRational::new(BigInt::one(), BigInt::from(b.clone())))
            .sum()
    }

    /// Every entry divisible by `divisor` and the reciprocals sum to 1.
    pub fn is_valid(&self, divisor: u64) -> bool {
        !self.b.is_empty()
            && self
                .b
                .iter()
                .all(|b| !b.is_zero() && (b % divisor).is_zero())
            && self.reciprocal_sum().is_one()
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.b
            .iter()
            .map(|b| match b.to_u64() {
                Some(v) => serde_json::Value::from(v),
                None => serde_json::Value::from(b.to_string()),
            })
            .collect()
    }
}

/// Default cap on the number of tuples returned.
pub const DEFAULT_TUPLE_CAP: usize = 100_000;

/// All tuples of length `ell` with entries in `divisor * N` and reciprocal
/// sum 1, up to reordering.
pub fn enumerate_reciprocal_tuples(
    ell: usize,
    divisor: u64,
    cap: usize,
) -> Result<Vec<ReciprocalTuple>> {
    if divisor != 2 && divisor != 4 {
        return Err(Error::invalid(format!("divisor must be 2 or 4, got {divisor}")));
    }
    let mut search = TupleSearch {
        ell,
        divisor: BigUint::from(divisor),
        cap,
        nodes: 0,
        node_cap: (cap as u64).saturating_mul(1000).max(1_000_000),
        cur: Vec::with_capacity(ell),
        out: Vec::new(),
    };
    if ell >= 1 {
        search.walk(BigUint::from(divisor), BigRational::one())?;
    }
    Ok(search.out)
}

struct TupleSearch {
    ell: usize,
    divisor: BigUint,
    cap: usize,
    nodes: u64,
    node_cap: u64,
    cur: Vec<BigUint>,
    out: Vec<ReciprocalTuple>,
}

impl TupleSearch {
    fn walk(&mut self, prev: BigUint, rest: BigRational) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::BudgetExceeded {
                what: "reciprocal tuple search node",
                limit: self.node_cap,
            });
        }
        let left = self.ell - self.cur.len();
        if left == 1 {
            if rest.numer().is_one() {
                let b = rest.denom().magnitude().clone();
                if b >= prev && (&b % &self.divisor).is_zero() {
                    let mut t = self.cur.clone();
                    t.push(b);
                    self.out.push(ReciprocalTuple { b: t });
                    if self.out.len() > self.cap {
                        return Err(Error::BudgetExceeded {
                            what: "reciprocal tuple",
                            limit: self.cap as u64,
                        });
                    }
                }
            }
            return Ok(());
        }
        // 1/b <= rest, and the `left` remaining terms, each at most 1/b,
        // must still reach `rest`.
        let inv = rest.recip().ceil().to_integer();
        let mut lo = inv.magnitude().clone().max(prev);
        let rem = &lo % &self.divisor;
        if !rem.is_zero() {
            lo += &self.divisor - rem;
        }
        let hi = (BigRational::from_integer(BigInt::from(left)) / &rest)
            .floor()
            .to_integer();
        let hi = hi.magnitude().clone();
        let mut b = lo;
        while b <= hi {
            let next = &rest - BigRational::new(BigInt::one(), BigInt::from(b.clone()));
            if next.is_positive() {
                self.cur.push(b.clone());
                self.walk(b.clone(), next)?;
                self.cur.pop();
            }
            b += &self.divisor;
        }
        Ok(())
    }
}

/// Rearranges `v` into the next lexicographic permutation; false at the end.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Largest `l` for which every block-to-position matching is tried.
pub const FULL_MATCHING_MAX_ELL: usize = 8;

/// Minimum of a general bound over tuples and block matchings.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralBoundReport {
    pub value: f64,
    pub log2_value: f64,
    pub tuple: ReciprocalTuple,
    /// `assignment[i]` is the block placed at tuple position `i`.
    pub assignment: Vec<usize>,
    pub tuples_considered: usize,
}

impl GeneralBoundReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "log2_value": self.log2_value,
            "tuple": self.tuple.to_json(),
            "assignment": self.assignment,
            "tuples_considered": self.tuples_considered,
        })
    }
}

// Minimises sum_i term(b_i, block at i) over tuples and matchings. Ties keep
// the earliest tuple and matching, so the result is schedule independent.
fn best_matching<F>(
    tuples: &[ReciprocalTuple],
    greedy_order: &[usize],
    term: F,
) -> (f64, usize, Vec<usize>)
where
    F: Fn(f64, usize) -> f64 + Sync + Send,
{
    let per_tuple = par::map_slice(tuples, |t| {
        let bs: Vec<f64> = t.b.iter().map(big_f64).collect();
        let ell = bs.len();
        let eval = |assign: &[usize]| -> f64 {
            bs.iter().zip(assign).map(|(&b, &blk)| term(b, blk)).sum()
        };
        if ell <= FULL_MATCHING_MAX_ELL {
            let mut perm: Vec<usize> = (0..ell).collect();
            let mut best = (eval(&perm), perm.clone());
            while next_permutation(&mut perm) {
                let v = eval(&perm);
                if v < best.0 {
                    best = (v, perm.clone());
                }
            }
            best
        } else {
            (eval(greedy_order), greedy_order.to_vec())
        }
    });
    let mut best_idx = 0;
    for (i, cand) in per_tuple.iter().enumerate() {
        if cand.0 < per_tuple[best_idx].0 {
            best_idx = i;
        }
    }
    let (v, assign) = per_tuple[best_idx].clone();
    (v, best_idx, assign)
}

fn report(
    log: f64,
    tuples: Vec<ReciprocalTuple>,
    idx: usize,
    assignment: Vec<usize>,
) -> GeneralBoundReport {
    GeneralBoundReport {
        value: log.exp(),
        log2_value: log / std::f64::consts::LN_2,
        tuple: tuples[idx].clone(),
        assignment,
        tuples_considered: tuples.len(),
    }
}

// Blocks sorted by decreasing weight: the greedy matching gives the
// heaviest block the smallest b.
fn greedy_order(weights: &[(usize, usize)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| weights[j].cmp(&weights[i]).then(i.cmp(&j)));
    order
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AtomGeneralOptions {
    pub divisor: u64,
    pub cap: usize,
    /// Use `C/(b_i lambda)` per block instead of `C/(l lambda)`.
    pub per_block_denominator: bool,
}

impl Default for AtomGeneralOptions {
    fn default() -> Self {
        AtomGeneralOptions {
            divisor: 4,
            cap: DEFAULT_TUPLE_CAP,
            per_block_denominator: false,
        }
    }
}

fn tuples_for(ell: usize, divisor: u64, cap: usize) -> Result<Vec<ReciprocalTuple>> {
    let tuples = enumerate_reciprocal_tuples(ell, divisor, cap)?;
    if tuples.is_empty() {
        return Err(Error::EmptyTupleSet { ell, divisor });
    }
    Ok(tuples)
}

/// `2^d inf_B (C/(l lambda))^(sum_i r_i/(2 b_i))`.
pub fn atom_general_bound(
    system: &VectorSystem,
    lambda: f64,
    c: f64,
    opts: &AtomGeneralOptions,
) -> Result<GeneralBoundReport> {
    check_c(c)?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid(format!("lambda must be in (0,1], got {lambda}")));
    }
    let ell = system.ell();
    let tuples = tuples_for(ell, opts.divisor, opts.cap)?;
    let ranks = system.block_ranks();
    let weights: Vec<(usize, usize)> = ranks.iter().map(|&r| (r, 0)).collect();
    let term = |b: f64, blk: usize| {
        let den = if opts.per_block_denominator { b } else { ell as f64 };
        ranks[blk] as f64 / (2.0 * b) * (c / (den * lambda)).ln()
    };
    let (log, idx, assign) = best_matching(&tuples, &greedy_order(&weights), term);
    let log = log + system.d as f64 * std::f64::consts::LN_2;
    Ok(report(log, tuples, idx, assign))
}

/// The same bound at one tuple, with block `i` at position `i`.
pub fn atom_general_at(
    system: &VectorSystem,
    tuple: &ReciprocalTuple,
    lambda: f64,
    c: f64,
    per_block_denominator: bool,
) -> Result<f64> {
    if tuple.len() != system.ell() {
        return Err(Error::DimensionMismatch {
            expected: system.ell(),
            found: tuple.len(),
        });
    }
    let ell = system.ell() as f64;
    let log: f64 = system
        .block_ranks()
        .iter()
        .zip(&tuple.b)
        .map(|(&r, b)| {
            let b = big_f64(b);
            let den = if per_block_denominator { b } else { ell };
            r as f64 / (2.0 * b) * (c / (den * lambda)).ln()
        })
        .sum();
    Ok((log + system.d as f64 * std::f64::consts::LN_2).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SbpGeneralOptions {
    pub divisor: u64,
    pub cap: usize,
    pub include_2d_prefactor: bool,
}

impl Default for SbpGeneralOptions {
    fn default() -> Self {
        SbpGeneralOptions {
            divisor: 4,
            cap: DEFAULT_TUPLE_CAP,
            include_2d_prefactor: false,
        }
    }
}

/// `inf_B prod_i (C M / (sqrt(eps b_i lambda) ||A_i||_HS))^(ceil((1-eps) r_s(A_i))/b_i)`.
pub fn sbp_general_bound(
    system: &VectorSystem,
    params: &BoundParams,
    opts: &SbpGeneralOptions,
) -> Result<GeneralBoundReport> {
    params.validate()?;
    let tuples = tuples_for(system.ell(), opts.divisor, opts.cap)?;
    let blocks = block_stats(system)?;
    let weights: Vec<(usize, usize)> = blocks.iter().map(|s| (s.rank, s.stable_rank)).collect();
    let term = |b: f64, blk: usize| sbp_log_factor(&blocks[blk], b, params);
    let (mut log, idx, assign) = best_matching(&tuples, &greedy_order(&weights), term);
    if opts.include_2d_prefactor {
        log += system.d as f64 * std::f64::consts::LN_2;
    }
    Ok(report(log, tuples, idx, assign))
}

/// The same bound at one tuple, with block `i` at position `i`.
pub fn sbp_general_at(
    system: &VectorSystem,
    tuple: &ReciprocalTuple,
    params: &BoundParams,
    include_2d_prefactor: bool,
) -> Result<f64> {
    params.validate()?;
    if tuple.len() != system.ell() {
        return Err(Error::DimensionMismatch {
            expected: system.ell(),
            found: tuple.len(),
        });
    }
    let blocks = block_stats(system)?;
    let mut log: f64 = blocks
        .iter()
        .zip(&tuple.b)
        .map(|(st, b)| sbp_log_factor(st, big_f64(b), params))
        .sum();
    if include_2d_prefactor {
        log += system.d as f64 * std::f64::consts::LN_2;
    }
    Ok(log.exp())
}
