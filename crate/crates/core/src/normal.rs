//! N-normal sign matrices: partial matrices, the step systems `T_k x_k = N'_k`,
//! rank profiles, and the case analysis of the exponent constants.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{self, ExactMatrix, SignMatrix};
use crate::numeric;
use crate::oracle;
use crate::par;

/// Largest `n` handled by [`partial_census`].
pub const MAX_CENSUS_N: usize = 5;
pub const DEFAULT_CENSUS_BUDGET: u64 = 1 << 25;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalCheck {
    /// `M M^T - M^T M == N`.
    pub matrix_form: bool,
    /// `r_i r_j^T - c_i^T c_j == N_ij` for all `i, j`.
    pub entrywise_form: bool,
}

fn check_square(m: &SignMatrix, target: &ExactMatrix) -> Result<usize> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    if target.rows() != n || target.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if target.rows() != n { target.rows() } else { target.cols() },
        });
    }
    Ok(n)
}

/// Both forms of the defining identity, evaluated independently.
pub fn normal_check(m: &SignMatrix, target: &ExactMatrix) -> Result<NormalCheck> {
    let n = check_square(m, target)?;
    let e = m.to_exact();
    let et = e.transpose();
    let diff = e.mul(&et)?.sub(&et.mul(&e)?)?;
    let matrix_form = &diff == target;
    let mt = m.transpose();
    let entrywise_form = (0..n).all(|i| {
        (0..n).all(|j| BigInt::from(m.row_dot(i, j) - mt.row_dot(i, j)) == *target.get(i, j))
    });
    Ok(NormalCheck {
        matrix_form,
        entrywise_form,
    })
}

/// `M M^T - M^T M == N`, asserting that the entrywise form agrees.
pub fn is_n_normal(m: &SignMatrix, target: &ExactMatrix) -> Result<bool> {
    let c = normal_check(m, target)?;
    assert_eq!(c.matrix_form, c.entrywise_form, "normality forms disagree");
    Ok(c.matrix_form)
}

/// The structure after step `k`: rows and columns `0..k` and the diagonal
/// are known, the rest of the lower-right block is not.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialMatrix {
    n: usize,
    k: usize,
    entries: Vec<Option<i8>>,
}

impl PartialMatrix {
    pub fn is_determined(n: usize, k: usize, i: usize, j: usize) -> bool {
        let _ = n;
        i < k || j < k || i == j
    }

    /// Restriction of a full matrix.
    pub fn restrict(m: &SignMatrix, k: usize) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.cols(),
            });
        }
        if k > n {
            return Err(Error::invalid(format!("step {k} exceeds n = {n}")));
        }
        let entries = (0..n * n)
            .map(|p| {
                let (i, j) = (p / n, p % n);
                Self::is_determined(n, k, i, j).then(|| m.get(i, j))
            })
            .collect();
        Ok(PartialMatrix { n, k, entries })
    }

    /// Row-major entries with `None` for undetermined cells; the known region
    /// must be exactly the step-`k` shape.
    pub fn from_entries(n: usize, k: usize, entries: Vec<Option<i8>>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        if k > n {
            return Err(Error::invalid(format!("step {k} exceeds n = {n}")));
        }
        for (p, e) in entries.iter().enumerate() {
            let known = Self::is_determined(n, k, p / n, p % n);
            match e {
                Some(v) if known && (*v == 1 || *v == -1) => {}
                None if !known => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "entry ({}, {}) does not fit the step-{k} shape",
                        p / n,
                        p % n
                    )))
                }
            }
        }
        Ok(PartialMatrix { n, k, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> Option<i8> {
        self.entries[i * self.n + j]
    }

    fn at(&self, i: usize, j: usize) -> Result<i64> {
        self.get(i, j)
            .map(i64::from)
            .ok_or_else(|| Error::invalid(format!("entry ({i}, {j}) is not determined")))
    }
}

/// `T_k = [U V]` and `N'_k` for the step after `k` (`1 <= k <= n - 1`).
///
/// With 0-based indices and `m = n - k - 1` unknowns on each side, row `i`
/// of `U` is `M[i][k+1..n]`, row `i` of `V` is `M[k+1..n][i]`, and
/// `N'_k[i] = N[k][i] - (A_{k+1} row dot - A_{k+1} column dot)`.
pub fn build_t_system(p: &PartialMatrix, target: &ExactMatrix) -> Result<(ExactMatrix, Vec<BigInt>)> {
    let (n, k) = (p.n, p.k);
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("T system needs 1 <= k <= n - 1, got k={k}, n={n}")));
    }
    if target.rows() != n || target.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target.rows(),
        });
    }
    let m = n - k - 1;
    let mut data = Vec::with_capacity(k * 2 * m);
    for i in 0..k {
        for j in k + 1..n {
            data.push(p.at(i, j)?);
        }
        for j in k + 1..n {
            data.push(p.at(j, i)?);
        }
    }
    let t = ExactMatrix::from_i64(k, 2 * m, data)?;
    let mut rhs = Vec::with_capacity(k);
    for i in 0..k {
        let mut row_dot = 0;
        let mut col_dot = 0;
        for j in 0..=k {
            row_dot += p.at(k, j)? * p.at(i, j)?;
            col_dot += p.at(j, k)? * p.at(j, i)?;
        }
        rhs.push(target.get(k, i) - BigInt::from(row_dot - col_dot));
    }
    Ok((t, rhs))
}

/// `x_k = [M[k][k+1..n]; -M[k+1..n][k]]` read off a full matrix.
pub fn solution_vector(m: &SignMatrix, k: usize) -> Vec<i64> {
    let n = m.rows();
    let mut x: Vec<i64> = (k + 1..n).map(|j| m.get(k, j) as i64).collect();
    x.extend((k + 1..n).map(|j| -(m.get(j, k) as i64)));
    x
}

/// `T x`.
pub fn apply(t: &ExactMatrix, x: &[i64]) -> Vec<BigInt> {
    (0..t.rows())
        .map(|i| t.row(i).iter().zip(x).map(|(a, &b)| a * b).sum())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankProfile {
    pub n: i64,
    pub s: i64,
    pub t: i64,
}

impl RankProfile {
    pub fn new(n: i64, s: i64, t: i64) -> Result<Self> {
        if !(1 <= s && s <= t && t <= n) {
            return Err(Error::invalid(format!("need 1 <= s <= t <= n, got s={s} t={t} n={n}")));
        }
        Ok(RankProfile { n, s, t })
    }

    /// Whether `(s, t)` satisfies `s <= 2n/3` and `s/2 < n - t < s`.
    pub fn is_feasible(&self) -> bool {
        let (n, s, t) = (self.n, self.s, self.t);
        3 * s <= 2 * n && s < 2 * (n - t) && n - t < s
    }
}

/// `i` on `(0, s]`, `s` on `(s, t]`, `s + t - i` on `(t, 2n - s - t]`,
/// `2n - 2i` beyond.
pub fn rank_profile_value(p: &RankProfile, i: i64) -> Result<i64> {
    let (n, s, t) = (p.n, p.s, p.t);
    if !(1 <= i && i <= n) {
        return Err(Error::invalid(format!("index {i} outside 1..={n}")));
    }
    Ok(if i <= s {
        i
    } else if i <= t {
        s
    } else if i <= 2 * n - s - t {
        s + t - i
    } else {
        2 * n - 2 * i
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankExperiment {
    pub m: usize,
    pub gamma: f64,
    pub trials: u64,
    pub hits: u64,
    pub empirical: f64,
    /// `2^(-(1-gamma)^2 m^2)`, the bound without its lower-order term.
    pub bound: f64,
}

/// Frequency of `rank(M) <= gamma m` over uniform `m x m` sign matrices.
pub fn random_rank_experiment(m: usize, gamma: f64, trials: u64, seed: u64) -> Result<RankExperiment> {
    if m == 0 || m > 24 {
        return Err(Error::invalid(format!("need 1 <= m <= 24, got {m}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let threshold = gamma * m as f64;
    // Chunks own disjoint seeded streams, so the result does not depend on
    // the number of workers.
    let chunks = par::chunk_bounds(trials, 256);
    let hits: u64 = par::map_slice(&chunks, |&(lo, hi)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(lo);
        let mut hits = 0;
        let mut data = vec![0i64; m * m];
        for _ in lo..hi {
            for x in data.iter_mut() {
                *x = if rng.gen::<bool>() { 1 } else { -1 };
            }
            if (exact::rank_of(m, m, &data) as f64) <= threshold {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    let e = (1.0 - gamma) * m as f64;
    Ok(RankExperiment {
        m,
        gamma,
        trials,
        hits,
        empirical: hits as f64 / trials as f64,
        bound: (-(e * e)).exp2(),
    })
}

/// Exact `Pr[rank(M) <= gamma m]` over all `2^(m^2)` sign matrices (`m <= 4`).
pub fn exhaustive_rank_probability(m: usize, gamma: f64) -> Result<num_rational::BigRational> {
    if m == 0 || m > 4 {
        return Err(Error::invalid(format!("need 1 <= m <= 4, got {m}")));
    }
    let threshold = gamma * m as f64;
    let total = 1u64 << (m * m);
    let mut hits = 0u64;
    let mut data = vec![0i64; m * m];
    for code in 0..total {
        for (p, x) in data.iter_mut().enumerate() {
            *x = if code >> p & 1 == 1 { -1 } else { 1 };
        }
        if (exact::rank_of(m, m, &data) as f64) <= threshold {
            hits += 1;
        }
    }
    Ok(numeric::rational(hits, total))
}

/// `(f, g1, g2)` at unit scale.
pub fn case_functions(s: f64, t: f64, alpha: f64) -> (f64, f64, f64) {
    let f = (1.0 - alpha) * t * t - s * s / 2.0 - 1.0 + s;
    let g1 = t * t - 3.0 * s * s + 2.0 * s + s * t - 2.0 * t;
    let g2 = 1.0 + s * s + t * t + s * t - 2.0 * s - 2.0 * t;
    (f, g1, g2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// `alpha = beta - eps`.
    pub eps: f64,
    /// Grid points per refinement pass over `s`.
    pub grid: usize,
    /// Refinement passes after the first grid.
    pub passes: usize,
    /// Step of the coarse scan over `beta`.
    pub beta_step: f64,
    /// Final bisection tolerance for `beta`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps: 1e-6,
            grid: 2000,
            passes: 4,
            beta_step: 1e-4,
            tol: 1e-13,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Curve {
    /// `t = 1 - s`.
    OneMinusS,
    /// `t = 1 - s/2`.
    OneMinusHalfS,
    /// `t = s`.
    Diagonal,
    /// `f = g - shift` inside the feasible band.
    Crossing,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Branch {
    G1,
    G2,
}

#[derive(Clone, Copy, Debug)]
struct Case {
    curve: Curve,
    branch: Branch,
    s_lo: f64,
    s_hi: f64,
    /// Subtracted from `g` (the `beta^2/2` improvement).
    shift: f64,
}

impl Case {
    fn g(&self, s: f64, t: f64) -> f64 {
        let (_, g1, g2) = case_functions(s, t, 0.0);
        match self.branch {
            Branch::G1 => g1,
            Branch::G2 => g2,
        }
    }

    // Decay rate -log2(bound)/n^2 at s, or +inf when the case has no point there.
    fn rate(&self, s: f64, alpha: f64) -> f64 {
        let t = match self.curve {
            Curve::OneMinusS => 1.0 - s,
            Curve::OneMinusHalfS => 1.0 - s / 2.0,
            Curve::Diagonal => s,
            Curve::Crossing => return self.crossing_rate(s, alpha),
        };
        let (f, _, _) = case_functions(s, t, alpha);
        let g = self.g(s, t) - self.shift;
        (-g).max(-f)
    }

    fn crossing_rate(&self, s: f64, alpha: f64) -> f64 {
        // f - g + shift = -alpha t^2 + (2 - s) t + c(s)
        let c = match self.branch {
            Branch::G1 => 2.5 * s * s - s - 1.0,
            Branch::G2 => -1.5 * s * s + 3.0 * s - 2.0,
        } + self.shift;
        let (a, b) = (-alpha, 2.0 - s);
        let lo = (1.0 - s).max(s) - 1e-12;
        let hi = 1.0 - s / 2.0 + 1e-12;
        let roots: Vec<f64> = if a.abs() < 1e-300 {
            vec![-c / b]
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return f64::INFINITY;
            }
            let d = disc.sqrt();
            vec![(-b + d) / (2.0 * a), (-b - d) / (2.0 * a)]
        };
        roots
            .into_iter()
            .filter(|t| (lo..=hi).contains(t))
            .map(|t| -(self.g(s, t) - self.shift))
            .fold(f64::INFINITY, f64::min)
    }

    // Minimum over s by a grid followed by zoomed grids around the best point.
    fn worst(&self, alpha: f64, opts: &SolverOptions) -> (f64, f64) {
        let (mut lo, mut hi) = (self.s_lo, self.s_hi);
        let mut best = (f64::INFINITY, lo);
        for _ in 0..=opts.passes {
            let step = (hi - lo) / opts.grid as f64;
            let mut idx = 0;
            for i in 0..=opts.grid {
                let s = lo + step * i as f64;
                let v = self.rate(s, alpha);
                if v < best.0 {
                    best = (v, s);
                    idx = i;
                }
            }
            if !best.0.is_finite() {
                break;
            }
            let center = lo + step * idx as f64;
            lo = (center - step).max(self.s_lo);
            hi = (center + step).min(self.s_hi);
        }
        best
    }

    // First beta where beta <= F(beta) stops holding, F(beta) being the
    // worst rate at alpha = beta - eps.
    fn restriction(&self, opts: &SolverOptions) -> Result<(f64, f64)> {
        let gap = |beta: f64| self.worst(beta - opts.eps, opts).0 - beta;
        let steps = (1.0 / opts.beta_step).round() as usize;
        let mut bracket = None;
        let mut prev = (opts.beta_step, gap(opts.beta_step));
        for i in 2..steps {
            let b = opts.beta_step * i as f64;
            let g = gap(b);
            if prev.1 >= 0.0 && g < 0.0 {
                bracket = Some((prev.0, b));
                break;
            }
            prev = (b, g);
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| {
            Error::Nonconvergence("no sign change of F(beta) - beta in (0, 1)".into())
        })?;
        while hi - lo > opts.tol {
            let mid = 0.5 * (lo + hi);
            if gap(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let beta = 0.5 * (lo + hi);
        Ok((beta, self.worst(beta - opts.eps, opts).1))
    }
}

const SIX_CASES: [(&str, Curve, Branch, f64, f64); 6] = [
    ("1", Curve::OneMinusS, Branch::G1, 0.0, 0.5),
    ("2", Curve::OneMinusHalfS, Branch::G1, 0.0, 0.5),
    ("3", Curve::OneMinusHalfS, Branch::G2, 0.5, 2.0 / 3.0),
    ("4", Curve::Diagonal, Branch::G2, 0.5, 2.0 / 3.0),
    ("5", Curve::Crossing, Branch::G2, 0.5, 2.0 / 3.0),
    ("6", Curve::Crossing, Branch::G1, 0.0, 0.5),
];

#[derive(Clone, Debug, PartialEq)]
pub struct CaseRestriction {
    pub id: String,
    /// The case forces `beta <= this`.
    pub beta: f64,
    /// `beta - eps` at the restriction.
    pub alpha: f64,
    /// Normalized `s` where the worst rate is attained.
    pub s: f64,
}

impl CaseRestriction {
    pub fn to_json(&self) -> serde_json::Value {
        let id = match self.id.parse::<u64>() {
            Ok(n) => serde_json::json!(n),
            Err(_) => serde_json::json!(self.id),
        };
        serde_json::json!({"id": id, "beta": self.beta, "alpha": self.alpha, "s": self.s})
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseSolution {
    pub eps: f64,
    pub cases: Vec<CaseRestriction>,
    /// Smallest restriction over the cases.
    pub worst_beta: f64,
    /// `1 - worst_beta`.
    pub c_dv: f64,
}

fn solve(id: &str, case: Case, opts: &SolverOptions) -> Result<CaseRestriction> {
    let (beta, s) = case
        .restriction(opts)
        .map_err(|e| Error::Nonconvergence(format!("case {id}: {e}")))?;
    Ok(CaseRestriction {
        id: id.to_string(),
        beta,
        alpha: beta - opts.eps,
        s,
    })
}

fn check_solver(opts: &SolverOptions) -> Result<()> {
    if !(opts.eps > 0.0 && opts.eps < 0.01) {
        return Err(Error::invalid(format!("eps must lie in (0, 0.01), got {}", opts.eps)));
    }
    if opts.grid < 10 || !(opts.beta_step > 0.0 && opts.beta_step < 0.1) || !(opts.tol > 0.0) {
        return Err(Error::invalid("solver grid, step or tolerance out of range"));
    }
    Ok(())
}

/// Restriction on `beta` from each of the six extremal cases.
pub fn solve_case_constants(opts: &SolverOptions) -> Result<CaseSolution> {
    check_solver(opts)?;
    let cases = SIX_CASES
        .iter()
        .map(|&(id, curve, branch, s_lo, s_hi)| {
            let case = Case {
                curve,
                branch,
                s_lo,
                s_hi,
                shift: 0.0,
            };
            solve(id, case, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_beta = cases.iter().map(|c| c.beta).fold(f64::INFINITY, f64::min);
    Ok(CaseSolution {
        eps: opts.eps,
        cases,
        worst_beta,
        c_dv: 1.0 - worst_beta,
    })
}

impl CaseSolution {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "eps": self.eps,
            "cases": self.cases.iter().map(CaseRestriction::to_json).collect::<Vec<_>>(),
            "worst_beta": self.worst_beta,
            "c_dv": self.c_dv,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImprovedConstants {
    pub beta_small: f64,
    /// `beta_small^2 / 2`, subtracted from `g1` on `[1/10, 1/2]`.
    pub slice_gain: f64,
    pub case_6_1: CaseRestriction,
    pub case_6_2: CaseRestriction,
    pub new_worst_beta: f64,
    /// Decrease of the exponent constant.
    pub delta: f64,
    pub new_c_dv: f64,
}

impl ImprovedConstants {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta_small": self.beta_small,
            "slice_gain": self.slice_gain,
            "cases": [self.case_6_1.to_json(), self.case_6_2.to_json()],
            "new_worst_beta": self.new_worst_beta,
            "delta": self.delta,
            "new_c_dv": self.new_c_dv,
        })
    }
}

/// Case 6 split at `s = 1/10`, with `g1 - beta_small^2/2` on the upper part.
pub fn improved_case_constants(
    beta_small: f64,
    base: &CaseSolution,
    opts: &SolverOptions,
) -> Result<ImprovedConstants> {
    check_solver(opts)?;
    if !(0.0..=2f64.powi(-10)).contains(&beta_small) {
        return Err(Error::invalid(format!("beta_small must lie in [0, 2^-10], got {beta_small}")));
    }
    let gain = beta_small * beta_small / 2.0;
    let lower = Case {
        curve: Curve::Crossing,
        branch: Branch::G1,
        s_lo: 0.0,
        s_hi: 0.1,
        shift: 0.0,
    };
    let upper = Case {
        s_lo: 0.1,
        s_hi: 0.5,
        shift: gain,
        ..lower
    };
    let case_6_1 = solve("6.1", lower, opts)?;
    let case_6_2 = solve("6.2", upper, opts)?;
    let new_worst_beta = base
        .cases
        .iter()
        .filter(|c| c.id != "6")
        .map(|c| c.beta)
        .chain([case_6_1.beta, case_6_2.beta])
        .fold(f64::INFINITY, f64::min);
    Ok(ImprovedConstants {
        beta_small,
        slice_gain: gain,
        case_6_1,
        case_6_2,
        new_worst_beta,
        delta: new_worst_beta - base.worst_beta,
        new_c_dv: 1.0 - new_worst_beta,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialCensus {
    pub n: usize,
    pub matrices: u64,
    /// `|S_k(N)|` for `k = 1..=n`; the last entry is `|N(N)|`.
    pub partial_counts: Vec<u64>,
    pub normal_count: u64,
    /// Every `x_k` read off a normal matrix solves its `T_k` system.
    pub round_trip_ok: bool,
    /// Extensions from step `k` never exceed the sign-solution count of `T_k`.
    pub extensions_ok: bool,
    /// ... nor `2^max(2(n-k-1) - rank T_k, 0)`.
    pub odlyzko_ok: bool,
    pub normal: Vec<SignMatrix>,
}

impl PartialCensus {
    pub fn passed(&self) -> bool {
        self.round_trip_ok && self.extensions_ok && self.odlyzko_ok
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "matrices": self.matrices,
            "partial_counts": self.partial_counts,
            "normal_count": self.normal_count,
            "round_trip_ok": self.round_trip_ok,
            "extensions_ok": self.extensions_ok,
            "odlyzko_ok": self.odlyzko_ok,
            "passed": self.passed(),
        })
    }
}

fn decode(n: usize, code: u64) -> SignMatrix {
    let masks: Vec<u64> = (0..n).map(|i| code >> (i * n) & ((1 << n) - 1)).collect();
    SignMatrix::from_row_masks(n, &masks).expect("n <= 64")
}

// Mask of the cells known after step k, in the row-major code layout.
fn known_mask(n: usize, k: usize) -> u64 {
    let mut m = 0;
    for i in 0..n {
        for j in 0..n {
            if PartialMatrix::is_determined(n, k, i, j) {
                m |= 1 << (i * n + j);
            }
        }
    }
    m
}

/// Exhaustive count of N-normal `n x n` sign matrices and of their step-`k`
/// restrictions, with the step-system checks on every restriction.
pub fn partial_census(n: usize, target: &ExactMatrix, budget: u64) -> Result<PartialCensus> {
    if n == 0 || n > MAX_CENSUS_N {
        return Err(Error::CapExceeded {
            what: "normal census size",
            value: n as u64,
            cap: MAX_CENSUS_N as u64,
        });
    }
    if target.rows() != n || target.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target.rows(),
        });
    }
    let total = 1u64 << (n * n);
    if total > budget {
        return Err(Error::BudgetExceeded {
            what: "normal census matrix",
            limit: budget,
        });
    }
    // N_ij = 2 (popcount(c_i ^ c_j) - popcount(r_i ^ r_j)); any other entry
    // shape has no solutions, but the scan below still runs.
    let want: Vec<Option<i64>> = target
        .entries()
        .iter()
        .map(|x| i64::try_from(x).ok())
        .collect();
    let row_mask = (1u64 << n) - 1;
    let chunks = par::chunk_bounds(total, 1 << 12);
    let found: Vec<u64> = par::map_slice(&chunks, |&(lo, hi)| {
        let mut out = Vec::new();
        let mut rows = [0u64; MAX_CENSUS_N];
        let mut cols = [0u64; MAX_CENSUS_N];
        for code in lo..hi {
            for (i, r) in rows.iter_mut().enumerate().take(n) {
                *r = code >> (i * n) & row_mask;
            }
            for (j, c) in cols.iter_mut().enumerate().take(n) {
                *c = (0..n).fold(0, |acc, i| acc | (rows[i] >> j & 1) << i);
            }
            let ok = (0..n).all(|i| {
                (0..n).all(|j| {
                    let v = 2 * ((cols[i] ^ cols[j]).count_ones() as i64
                        - (rows[i] ^ rows[j]).count_ones() as i64);
                    want[i * n + j] == Some(v)
                })
            });
            if ok {
                out.push(code);
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();

    let normal: Vec<SignMatrix> = found.iter().map(|&c| decode(n, c)).collect();
    let mut partial_counts = Vec::with_capacity(n);
    let mut round_trip_ok = true;
    let mut extensions_ok = true;
    let mut odlyzko_ok = true;
    for k in 1..=n {
        let mask = known_mask(n, k);
        let restricted: HashSet<u64> = found.iter().map(|c| c & mask).collect();
        partial_counts.push(restricted.len() as u64);
        if k == n {
            continue;
        }
        // Distinct step-(k+1) restrictions grouped by their step-k parent.
        let next = known_mask(n, k + 1);
        let mut children: HashMap<u64, HashSet<u64>> = HashMap::new();
        let mut witness: HashMap<u64, u64> = HashMap::new();
        for &c in &found {
            children.entry(c & mask).or_default().insert(c & next);
            witness.entry(c & mask).or_insert(c);
        }
        let parents: Vec<(u64, usize, u64)> = children
            .iter()
            .map(|(&p, ch)| (p, ch.len(), witness[&p]))
            .collect();
        let checks = par::map_slice(&parents, |&(_, ext, w)| -> Result<(bool, bool)> {
            let m = decode(n, w);
            let p = PartialMatrix::restrict(&m, k)?;
            let (t, rhs) = build_t_system(&p, target)?;
            let rhs: Vec<i64> = rhs.iter().map(|x| i64::try_from(x).unwrap_or(i64::MAX)).collect();
            let sols = if t.cols() == 0 {
                u64::from(rhs.iter().all(|&x| x == 0))
            } else {
                oracle::count_sign_solutions(&t, &rhs, oracle::DEFAULT_SOLUTION_CAP)?
            };
            let free = (t.cols() as i64 - exact::rank(&t) as i64).max(0) as u32;
            Ok((ext as u64 <= sols, ext as u64 <= 1u64 << free))
        });
        for c in checks {
            let (e, o) = c?;
            extensions_ok &= e;
            odlyzko_ok &= o;
        }
        for m in &normal {
            let p = PartialMatrix::restrict(m, k)?;
            let (t, rhs) = build_t_system(&p, target)?;
            let lhs = apply(&t, &solution_vector(m, k));
            round_trip_ok &= lhs == rhs;
        }
    }
    Ok(PartialCensus {
        n,
        matrices: total,
        normal_count: found.len() as u64,
        partial_counts,
        round_trip_ok,
        extensions_ok,
        odlyzko_ok,
        normal,
    })
}

/// Every symmetric `n x n` sign matrix, `2^(n(n+1)/2)` of them.
pub fn symmetric_sign_matrices(n: usize) -> Vec<SignMatrix> {
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    (0u64..1 << cells.len())
        .map(|code| {
            let mut m = SignMatrix::ones(n, n);
            for (b, &(i, j)) in cells.iter().enumerate() {
                if code >> b & 1 == 1 {
                    m.set(i, j, -1);
                    m.set(j, i, -1);
                }
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero(n: usize) -> ExactMatrix {
        ExactMatrix::zeros(n, n)
    }

    fn sign(rows: &[Vec<i8>]) -> SignMatrix {
        let n = rows.len();
        SignMatrix::from_entries(n, rows[0].len(), &rows.concat()).unwrap()
    }

    #[test]
    fn normality_examples() {
        let m = sign(&[vec![1, 1], vec![-1, 1]]);
        assert!(is_n_normal(&m, &zero(2)).unwrap());
        let h = sign(&[vec![1, 1], vec![1, -1]]);
        assert!(is_n_normal(&h, &zero(2)).unwrap());
        let wrong = ExactMatrix::from_rows(&[vec![0, 2], vec![2, 0]]).unwrap();
        assert!(!is_n_normal(&h, &wrong).unwrap());
        for s in symmetric_sign_matrices(3) {
            assert!(is_n_normal(&s, &zero(3)).unwrap());
        }
        assert!(is_n_normal(&m, &zero(3)).is_err());
    }

    #[test]
    fn t_system_examples() {
        let m = SignMatrix::ones(3, 3);
        let p = PartialMatrix::restrict(&m, 1).unwrap();
        let (t, rhs) = build_t_system(&p, &zero(3)).unwrap();
        assert_eq!(t, ExactMatrix::from_rows(&[vec![1, 1]]).unwrap());
        assert_eq!(rhs, vec![BigInt::from(0)]);

        let p = PartialMatrix::restrict(&m, 2).unwrap();
        let (t, rhs) = build_t_system(&p, &zero(3)).unwrap();
        assert_eq!((t.rows(), t.cols()), (2, 0));
        assert_eq!(apply(&t, &[]), rhs);

        assert!(build_t_system(&PartialMatrix::restrict(&m, 0).unwrap(), &zero(3)).is_err());
        assert!(build_t_system(&PartialMatrix::restrict(&m, 3).unwrap(), &zero(3)).is_err());
    }

    #[test]
    fn partial_matrix_shape() {
        let m = SignMatrix::ones(4, 4);
        let p = PartialMatrix::restrict(&m, 2).unwrap();
        assert_eq!(p.get(3, 2), None);
        assert_eq!(p.get(3, 3), Some(1));
        assert_eq!(p.get(3, 1), Some(1));
        let mut entries: Vec<Option<i8>> = (0..16).map(|x| p.get(x / 4, x % 4)).collect();
        assert_eq!(PartialMatrix::from_entries(4, 2, entries.clone()).unwrap(), p);
        entries[2 * 4 + 3] = Some(1);
        assert!(PartialMatrix::from_entries(4, 2, entries).is_err());
    }

    #[test]
    fn rank_profile_examples() {
        let p = RankProfile::new(9, 4, 7).unwrap();
        assert_eq!(rank_profile_value(&p, 4).unwrap(), 4);
        assert_eq!(rank_profile_value(&p, 7).unwrap(), 4);
        assert_eq!(rank_profile_value(&p, 9).unwrap(), 0);
        assert!(rank_profile_value(&p, 0).is_err());
        assert!(RankProfile::new(10, 5, 4).is_err());
        assert!(RankProfile::new(9, 4, 6).unwrap().is_feasible());
        assert!(!RankProfile::new(9, 4, 7).unwrap().is_feasible());
        assert!(!RankProfile::new(9, 7, 7).unwrap().is_feasible());
    }

    #[test]
    fn rank_experiment_examples() {
        assert_eq!(exhaustive_rank_probability(2, 0.5).unwrap(), numeric::rational(1, 2));
        let e = random_rank_experiment(5, 0.0, 200, 1).unwrap();
        assert_eq!(e.hits, 0);
        let e = random_rank_experiment(2, 0.5, 20_000, 7).unwrap();
        assert!((e.empirical - 0.5).abs() < 0.02);
        assert_eq!(e, random_rank_experiment(2, 0.5, 20_000, 7).unwrap());
        assert!(random_rank_experiment(25, 0.5, 1, 0).is_err());
    }

    #[test]
    fn case_function_examples() {
        assert_eq!(case_functions(0.0, 0.0, 0.0), (-1.0, 0.0, 1.0));
        let h = 1e-6;
        for i in 1..50 {
            let s = 0.01 * i as f64;
            let (lo, hi) = ((1.0 - s).max(s), 1.0 - s / 2.0);
            if lo >= hi {
                continue;
            }
            for t in [0.1, 0.5, 0.9].map(|x| lo + x * (hi - lo)) {
                let (f0, a0, b0) = case_functions(s, t, 0.3);
                let (f1, a1, b1) = case_functions(s, t + h, 0.3);
                assert!(f1 > f0 && a1 < a0 && b1 < b0, "s={s} t={t}");
            }
        }
    }

    #[test]
    fn census_n2() {
        let c = partial_census(2, &zero(2), DEFAULT_CENSUS_BUDGET).unwrap();
        assert!(c.passed());
        for s in symmetric_sign_matrices(2) {
            assert!(c.normal.contains(&s));
        }
        // All 16 matrices, checked one by one.
        let brute = (0u64..16)
            .filter(|&code| is_n_normal(&decode(2, code), &zero(2)).unwrap())
            .count() as u64;
        assert_eq!(c.normal_count, brute);
        let odd = ExactMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(partial_census(2, &odd, DEFAULT_CENSUS_BUDGET).unwrap().normal_count, 0);
    }

    #[test]
    fn census_n3() {
        let c = partial_census(3, &zero(3), DEFAULT_CENSUS_BUDGET).unwrap();
        assert!(c.passed());
        let brute = (0u64..512)
            .filter(|&code| is_n_normal(&decode(3, code), &zero(3)).unwrap())
            .count() as u64;
        assert_eq!(c.normal_count, brute);
        assert_eq!(*c.partial_counts.last().unwrap(), c.normal_count);
        assert!(c.normal_count >= 64);
    }

    #[test]
    fn case_constants() {
        let sol = solve_case_constants(&SolverOptions::default()).unwrap();
        let betas: Vec<f64> = sol.cases.iter().map(|c| c.beta).collect();
        for (b, want) in betas[1..].iter().zip([0.307, 0.3125, 0.323, 0.307, 0.302]) {
            assert!((b - want).abs() <= 0.001, "{b} vs {want}");
        }
        assert!(sol.c_dv < 0.698);
        let imp = improved_case_constants(2f64.powi(-10), &sol, &SolverOptions::default()).unwrap();
        assert!(imp.delta > 0.0);
        assert!(imp.new_worst_beta > sol.worst_beta);
        let same = improved_case_constants(0.0, &sol, &SolverOptions::default()).unwrap();
        assert!((same.new_worst_beta - sol.worst_beta).abs() < 1e-9);
        assert!(improved_case_constants(0.01, &sol, &SolverOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn normal_forms_agree(n in 1usize..6, code in any::<u64>(), sym in any::<bool>()) {
            let mut m = decode(n, code & ((1u64 << (n * n)) - 1));
            if sym {
                for i in 0..n {
                    for j in 0..i {
                        m.set(i, j, m.get(j, i));
                    }
                }
            }
            let c = normal_check(&m, &zero(n)).unwrap();
            prop_assert_eq!(c.matrix_form, c.entrywise_form);
            if sym {
                prop_assert!(c.matrix_form);
            }
        }

        #[test]
        fn rank_profile_is_continuous(n in 2i64..40, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let s = 1 + (a * (n - 1) as f64) as i64;
            let t = s + (b * (n - s) as f64) as i64;
            let p = RankProfile::new(n, s, t).unwrap();
            // Each piece extended to its boundary agrees with the neighbour.
            for i in [s, t, 2 * n - s - t] {
                if (1..=n).contains(&i) {
                    let v = rank_profile_value(&p, i).unwrap();
                    let pieces = [i, s, s + t - i, 2 * n - 2 * i];
                    let boundary = if i == s { [0, 1] } else if i == t { [1, 2] } else { [2, 3] };
                    prop_assert_eq!(pieces[boundary[0]], pieces[boundary[1]]);
                    prop_assert!(pieces.contains(&v));
                }
            }
        }
    }
}
