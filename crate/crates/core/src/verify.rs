//! Seeded verification sweeps shared by the command line and the acceptance
//! suite. Instance `i` draws from its own ChaCha stream, so results do not
//! depend on scheduling.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    enumerate_reciprocal_tuples, erdos_lo_bound, halasz_atom_bound, tightness_system, BoundValue,
    ReciprocalTuple, VectorSystem,
};
use crate::distributions::{
    self, convolve_all, replication_atom_check, LatticeDistribution, Replication,
};
use crate::error::{Error, Result};
use crate::exact::{self, ExactMatrix};
use crate::hadamard::{greedy_rounds_for, RankPartition};
use crate::numeric;
use crate::oracle;
use crate::par;

pub(crate) fn instance_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

fn ratio_f64(a: &BigRational, b: &BoundValue) -> f64 {
    numeric::to_f64_down(a) / b.upper_f64()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub instances: u64,
    pub max_d: usize,
    pub max_n: usize,
    /// Entries are drawn from `[-entry, entry]`.
    pub entry: i64,
    pub seed: u64,
}

impl SweepConfig {
    pub fn halasz_default() -> Self {
        SweepConfig {
            instances: 500,
            max_d: 4,
            max_n: 20,
            entry: 2,
            seed: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_d == 0 || self.max_n < 2 || self.entry < 1 {
            return Err(Error::invalid("sweep needs max_d >= 1, max_n >= 2, entry >= 1"));
        }
        if self.max_n > oracle::DEFAULT_ATOM_CAP {
            return Err(Error::CapExceeded {
                what: "sweep n",
                value: self.max_n as u64,
                cap: oracle::DEFAULT_ATOM_CAP as u64,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instances": self.instances,
            "max_d": self.max_d,
            "max_n": self.max_n,
            "entry": self.entry,
            "seed": self.seed,
        })
    }
}

/// A random vector in `[-entry, entry]^d`, redrawn until nonzero.
pub fn random_nonzero_vector<R: Rng>(rng: &mut R, d: usize, entry: i64) -> Vec<i64> {
    loop {
        let v: Vec<i64> = (0..d).map(|_| rng.gen_range(-entry..=entry)).collect();
        if v.iter().any(|&x| x != 0) {
            return v;
        }
    }
}

/// The even-`ell` greedy partition with the smallest Halász bound, blocks
/// padded with the unused vectors.
pub fn best_halasz_partition(system: &VectorSystem) -> Result<Option<(VectorSystem, BoundValue)>> {
    let m = system.matrix();
    let n = system.n();
    let rank = exact::rank(&m);
    let mut best: Option<(VectorSystem, BoundValue)> = None;
    for r in 1..=rank {
        let blocks = greedy_rounds_for(&m, r, n / r);
        for ell in (2..=blocks.len()).step_by(2) {
            let p = RankPartition {
                r,
                ell,
                blocks: blocks[..ell].to_vec(),
            };
            let candidate = system.with_partition(p.covering(n))?;
            let bound = halasz_atom_bound(&candidate.block_ranks(), ell)?;
            let better = best
                .as_ref()
                .is_none_or(|(_, b)| bound.upper_f64() < b.upper_f64());
            if better {
                best = Some((candidate, bound));
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalaszSweepReport {
    pub config: SweepConfig,
    pub checked: u64,
    pub violations: Vec<u64>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `(d, ell, atom / bound)` on the tightness family.
    pub tightness: Vec<(usize, usize, String)>,
    pub tight: bool,
}

impl HalaszSweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.tight
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config.to_json(),
            "checked": self.checked,
            "violations": self.violations,
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "tightness": self.tightness.iter().map(|(d, l, r)| serde_json::json!({"d": d, "ell": l, "ratio": r})).collect::<Vec<_>>(),
            "passed": self.passed(),
        })
    }
}

/// Random systems against the Halász atom bound at their best greedy
/// partition, plus the tightness family.
pub fn halasz_sweep(config: &SweepConfig) -> Result<HalaszSweepReport> {
    config.validate()?;
    let outcomes = par::map_range(config.instances as usize, |i| -> Result<(bool, f64)> {
        let mut rng = instance_rng(config.seed, i as u64);
        let d = rng.gen_range(1..=config.max_d);
        let n = rng.gen_range(2..=config.max_n);
        let vectors = (0..n).map(|_| random_nonzero_vector(&mut rng, d, config.entry)).collect();
        let system = VectorSystem::single_block(d, vectors)?;
        let (system, bound) = best_halasz_partition(&system)?
            .ok_or_else(|| Error::invalid("no even greedy partition"))?;
        let atom = oracle::atom_max(&system)?;
        Ok((bound.dominates(&atom), ratio_f64(&atom, &bound)))
    });
    let mut violations = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    for (i, o) in outcomes.into_iter().enumerate() {
        let (ok, ratio) = o?;
        if !ok {
            violations.push(i as u64);
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let mut tightness = Vec::new();
    let mut tight = true;
    for d in 1..=config.max_d.min(3) {
        for ell in [2, 4, 6] {
            if d * ell > config.max_n.max(2) {
                continue;
            }
            let system = tightness_system(d, ell);
            let atom = oracle::atom_max(&system)?;
            let ratio = match halasz_atom_bound(&system.block_ranks(), ell)? {
                BoundValue::Exact(b) => atom / b,
                BoundValue::Upper(_) => BigRational::zero(),
            };
            tight &= ratio == BigRational::from_integer(1.into());
            tightness.push((d, ell, numeric::ratio_string(&ratio)));
        }
    }
    Ok(HalaszSweepReport {
        config: config.clone(),
        checked: config.instances,
        violations,
        ratio_min: lo,
        ratio_max: hi,
        tightness,
        tight,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErdosSweepReport {
    pub instances: u64,
    pub seed: u64,
    pub violations: Vec<u64>,
    /// Equal weights reach the bound for every `n` up to the maximum.
    pub equality: bool,
}

impl ErdosSweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.equality
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instances": self.instances,
            "seed": self.seed,
            "violations": self.violations,
            "equality": self.equality,
            "passed": self.passed(),
        })
    }
}

/// One-dimensional nonzero weights against `binom(n, n/2) / 2^n`.
pub fn erdos_sweep(instances: u64, max_n: usize, seed: u64) -> Result<ErdosSweepReport> {
    if max_n == 0 || max_n > oracle::DEFAULT_ATOM_CAP {
        return Err(Error::invalid(format!("max_n must lie in 1..={}", oracle::DEFAULT_ATOM_CAP)));
    }
    let outcomes = par::map_range(instances as usize, |i| -> Result<bool> {
        let mut rng = instance_rng(seed, i as u64);
        let n = rng.gen_range(1..=max_n);
        let spread = *[1i64, 3, 10, 1000].choose(&mut rng).expect("nonempty");
        let vectors = (0..n).map(|_| random_nonzero_vector(&mut rng, 1, spread)).collect();
        let atom = oracle::atom_max(&VectorSystem::single_block(1, vectors)?)?;
        Ok(atom <= erdos_lo_bound(n as u64)?)
    });
    let mut violations = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        if !o? {
            violations.push(i as u64);
        }
    }
    let mut equality = true;
    for n in 1..=max_n {
        let system = VectorSystem::single_block(1, vec![vec![1]; n])?;
        equality &= oracle::atom_max(&system)? == erdos_lo_bound(n as u64)?;
    }
    Ok(ErdosSweepReport {
        instances,
        seed,
        violations,
        equality,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdlyzkoSweepReport {
    pub instances: u64,
    pub seed: u64,
    pub violations: Vec<u64>,
    /// Instances where the count equals `2^rank`.
    pub equalities: u64,
}

impl OdlyzkoSweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instances": self.instances,
            "seed": self.seed,
            "violations": self.violations,
            "equalities": self.equalities,
            "passed": self.passed(),
        })
    }
}

/// Random subspaces spanned by sign vectors: half uniformly random, half
/// constant on the parts of a random partition of the coordinates.
pub fn odlyzko_sweep(instances: u64, max_n: usize, max_rank: usize, seed: u64) -> Result<OdlyzkoSweepReport> {
    if max_n < 2 || max_n > 62 || max_rank == 0 {
        return Err(Error::invalid("need 2 <= max_n <= 62 and max_rank >= 1"));
    }
    let outcomes = par::map_range(instances as usize, |i| -> Result<(bool, bool)> {
        let mut rng = instance_rng(seed, i as u64);
        let n = rng.gen_range(2..=max_n);
        let rows = rng.gen_range(1..=max_rank.min(n));
        let data: Vec<i64> = if i % 2 == 0 {
            (0..rows * n).map(|_| if rng.gen() { 1 } else { -1 }).collect()
        } else {
            let parts = rng.gen_range(1..=rows);
            let label: Vec<usize> = (0..n).map(|_| rng.gen_range(0..parts)).collect();
            (0..rows)
                .flat_map(|_| {
                    let signs: Vec<i64> = (0..parts).map(|_| if rng.gen() { 1 } else { -1 }).collect();
                    label.iter().map(move |&l| signs[l]).collect::<Vec<_>>()
                })
                .collect()
        };
        let m = ExactMatrix::from_i64(rows, n, data)?;
        let c = oracle::combinatorial_dimension(&m, oracle::DEFAULT_COMBDIM_CAP)?;
        let bound = numeric::pow2(c.rank as u64);
        Ok((c.count <= bound, c.count == bound))
    });
    let mut violations = Vec::new();
    let mut equalities = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        let (ok, eq) = o?;
        if !ok {
            violations.push(i as u64);
        }
        equalities += eq as u64;
    }
    Ok(OdlyzkoSweepReport {
        instances,
        seed,
        violations,
        equalities,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSweepReport {
    pub instances: u64,
    pub seed: u64,
    pub symmetrized_violations: Vec<u64>,
    pub origin_symmetric_violations: Vec<u64>,
    /// Instances decided by exact comparison rather than outward rounding.
    pub exact_decisions: u64,
    pub equality_case: bool,
}

impl ReplicationSweepReport {
    pub fn passed(&self) -> bool {
        self.symmetrized_violations.is_empty()
            && self.origin_symmetric_violations.is_empty()
            && self.equality_case
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instances": self.instances,
            "seed": self.seed,
            "symmetrized_violations": self.symmetrized_violations,
            "origin_symmetric_violations": self.origin_symmetric_violations,
            "exact_decisions": self.exact_decisions,
            "equality_case": self.equality_case,
            "passed": self.passed(),
        })
    }
}

// Either the mode of the sum (the hardest point) or a random support point.
fn pick_point<R: Rng>(rng: &mut R, dists: &[LatticeDistribution]) -> Result<Vec<i64>> {
    let sum = convolve_all(dists)?;
    let atoms = sum.atoms();
    if rng.gen_bool(0.5) {
        let best = atoms.iter().max_by(|a, b| a.1.cmp(&b.1)).expect("nonempty");
        Ok(best.0.clone())
    } else {
        Ok(atoms[rng.gen_range(0..atoms.len())].0.clone())
    }
}

fn tuples_for(divisor: u64, ells: &[usize]) -> Result<Vec<ReciprocalTuple>> {
    let mut all = Vec::new();
    for &ell in ells {
        all.extend(enumerate_reciprocal_tuples(ell, divisor, 1000)?);
    }
    // Very large entries make the self-convolutions expensive.
    all.retain(|t| t.b.iter().all(|b| b.to_u64().is_some_and(|v| v <= 24)));
    Ok(all)
}

/// Exact-convolution checks of both replication inequalities, plus the
/// two-Rademacher equality case.
pub fn replication_sweep(instances: u64, seed: u64) -> Result<ReplicationSweepReport> {
    let sym_tuples = tuples_for(4, &[4, 5])?;
    let origin_tuples = tuples_for(2, &[2, 3, 4])?;
    let run = |variant: Replication, tuples: &[ReciprocalTuple], offset: u64| {
        par::map_range(instances as usize, |i| -> Result<(bool, bool)> {
            let mut rng = instance_rng(seed, offset + i as u64);
            let t = &tuples[rng.gen_range(0..tuples.len())];
            let d = rng.gen_range(1..=2);
            let dists: Vec<LatticeDistribution> = (0..t.len())
                .map(|_| match variant {
                    Replication::Symmetrized => {
                        let support = rng.gen_range(1..=3);
                        distributions::random_distribution(&mut rng, d, support, 2, 4)
                    }
                    Replication::OriginSymmetric => {
                        let pairs = rng.gen_range(1..=2);
                        distributions::random_symmetric(&mut rng, d, pairs, 2, 4)
                    }
                })
                .collect();
            let v = pick_point(&mut rng, &dists)?;
            let rep = replication_atom_check(&dists, t, &v, variant)?;
            Ok((rep.holds, rep.exact))
        })
    };
    let mut exact_decisions = 0;
    let mut collect = |results: Vec<Result<(bool, bool)>>| -> Result<Vec<u64>> {
        let mut bad = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            let (holds, exact) = r?;
            exact_decisions += exact as u64;
            if !holds {
                bad.push(i as u64);
            }
        }
        Ok(bad)
    };
    let symmetrized_violations = collect(run(Replication::Symmetrized, &sym_tuples, 0))?;
    let origin_symmetric_violations =
        collect(run(Replication::OriginSymmetric, &origin_tuples, 1 << 32))?;
    let pair = vec![LatticeDistribution::rademacher(); 2];
    let rep = replication_atom_check(
        &pair,
        &ReciprocalTuple::from_u64(&[2, 2]),
        &[0],
        Replication::OriginSymmetric,
    )?;
    let half = numeric::rational(1, 2);
    let equality_case = rep.lhs == half && rep.equality == Some(true) && rep.holds;
    Ok(ReplicationSweepReport {
        instances,
        seed,
        symmetrized_violations,
        origin_symmetric_violations,
        exact_decisions,
        equality_case,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyBinetSweepReport {
    pub instances: u64,
    pub seed: u64,
    pub mismatches: Vec<u64>,
}

impl CauchyBinetSweepReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// `det(A A^T)` against the sum of squared maximal minors.
pub fn cauchy_binet_sweep(instances: u64, max_rows: usize, max_cols: usize, seed: u64) -> Result<CauchyBinetSweepReport> {
    if max_rows == 0 || max_cols < max_rows {
        return Err(Error::invalid("need 1 <= max_rows <= max_cols"));
    }
    let outcomes = par::map_range(instances as usize, |i| -> Result<bool> {
        let mut rng = instance_rng(seed, i as u64);
        let rows = rng.gen_range(1..=max_rows);
        let cols = rng.gen_range(rows.min(max_cols)..=max_cols);
        let data = (0..rows * cols).map(|_| rng.gen_range(-5..=5)).collect();
        let m = ExactMatrix::from_i64(rows, cols, data)?;
        let cb = exact::cauchy_binet_check(&m, exact::DEFAULT_MINOR_BUDGET)?;
        Ok(cb.equal && cb.lhs == cb.rhs)
    });
    let mut mismatches = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        if !o? {
            mismatches.push(i as u64);
        }
    }
    Ok(CauchyBinetSweepReport {
        instances,
        seed,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweeps_pass() {
        let cfg = SweepConfig {
            instances: 40,
            max_d: 3,
            max_n: 10,
            entry: 2,
            seed: 3,
        };
        let r = halasz_sweep(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.ratio_max <= 1.0);
        assert_eq!(r, halasz_sweep(&cfg).unwrap());
        assert!(erdos_sweep(50, 12, 4).unwrap().passed());
        assert!(odlyzko_sweep(30, 10, 6, 5).unwrap().passed());
        assert!(replication_sweep(30, 6).unwrap().passed());
        assert!(cauchy_binet_sweep(30, 4, 8, 7).unwrap().passed());
    }

    #[test]
    fn generated_vectors_are_nonzero() {
        let mut rng = instance_rng(0, 0);
        for _ in 0..1000 {
            assert!(random_nonzero_vector(&mut rng, 2, 1).iter().any(|&x| x != 0));
        }
    }

    #[test]
    fn partition_search_prefers_more_blocks() {
        let s = tightness_system(2, 4);
        let s = VectorSystem::single_block(2, s.vectors).unwrap();
        let (p, b) = best_halasz_partition(&s).unwrap().unwrap();
        assert_eq!(p.ell(), 4);
        assert_eq!(b, halasz_atom_bound(&[2, 2, 2, 2], 4).unwrap());
    }
}
