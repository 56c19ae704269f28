//! Finitely supported distributions on `Z^d` with exact rational masses, and
//! the replication inequalities checked by direct convolution.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::bounds::ReciprocalTuple;
use crate::error::{Error, Result};
use crate::numeric::{self, pow2, pow_frac_up};
use crate::par;

/// Masses are integer weights over one shared denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeDistribution {
    d: usize,
    weights: BTreeMap<Vec<i64>, BigUint>,
    denom: BigUint,
}

impl LatticeDistribution {
    /// Point mass at `point`.
    pub fn delta(point: Vec<i64>) -> Self {
        let d = point.len();
        let mut weights = BTreeMap::new();
        weights.insert(point, BigUint::one());
        LatticeDistribution {
            d,
            weights,
            denom: BigUint::one(),
        }
    }

    /// Uniform on `{-1, +1}` in one dimension.
    pub fn rademacher() -> Self {
        Self::from_weights(1, vec![(vec![-1], 1u32.into()), (vec![1], 1u32.into())]).unwrap()
    }

    /// Uniform on `{-v, +v}`.
    pub fn signed(v: Vec<i64>) -> Self {
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        Self::from_weights(v.len(), vec![(v, 1u32.into()), (neg, 1u32.into())]).unwrap()
    }

    /// Masses proportional to the given non-negative weights.
    pub fn from_weights(d: usize, items: Vec<(Vec<i64>, BigUint)>) -> Result<Self> {
        let mut weights: BTreeMap<Vec<i64>, BigUint> = BTreeMap::new();
        for (p, w) in items {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            if !w.is_zero() {
                *weights.entry(p).or_default() += w;
            }
        }
        let denom: BigUint = weights.values().sum();
        if denom.is_zero() {
            return Err(Error::invalid("distribution has no mass"));
        }
        Ok(LatticeDistribution { d, weights, denom }.reduced())
    }

    /// Exact masses; they must sum to 1.
    pub fn from_masses(d: usize, items: Vec<(Vec<i64>, BigRational)>) -> Result<Self> {
        let mut lcm = BigInt::one();
        let mut total = BigRational::zero();
        for (_, m) in &items {
            if m < &BigRational::zero() {
                return Err(Error::invalid("negative mass"));
            }
            lcm = lcm.lcm(m.denom());
            total += m;
        }
        if !total.is_one() {
            return Err(Error::invalid(format!(
                "masses sum to {}, not 1",
                numeric::ratio_string(&total)
            )));
        }
        let scaled = items
            .into_iter()
            .map(|(p, m)| {
                let w = (m * BigRational::from_integer(lcm.clone())).to_integer();
                (p, w.to_biguint().expect("non-negative"))
            })
            .collect();
        Self::from_weights(d, scaled)
    }

    fn reduced(mut self) -> Self {
        let g = self
            .weights
            .values()
            .fold(self.denom.clone(), |acc, w| acc.gcd(w));
        if !g.is_one() {
            for w in self.weights.values_mut() {
                *w /= &g;
            }
            self.denom /= &g;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn points(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.weights.keys()
    }

    pub fn mass(&self, point: &[i64]) -> BigRational {
        match self.weights.get(point) {
            Some(w) => BigRational::new(w.clone().into(), self.denom.clone().into()),
            None => BigRational::zero(),
        }
    }

    pub fn atoms(&self) -> Vec<(Vec<i64>, BigRational)> {
        self.weights
            .iter()
            .map(|(p, w)| {
                (
                    p.clone(),
                    BigRational::new(w.clone().into(), self.denom.clone().into()),
                )
            })
            .collect()
    }

    pub fn total_mass(&self) -> BigRational {
        let s: BigUint = self.weights.values().sum();
        BigRational::new(s.into(), self.denom.clone().into())
    }

    pub fn max_atom(&self) -> BigRational {
        let w = self.weights.values().max().cloned().unwrap_or_default();
        BigRational::new(w.into(), self.denom.clone().into())
    }

    pub fn is_origin_symmetric(&self) -> bool {
        self.weights.iter().all(|(p, w)| {
            let neg: Vec<i64> = p.iter().map(|x| -x).collect();
            self.weights.get(&neg) == Some(w)
        })
    }

    /// Distribution of `-X`.
    pub fn reflect(&self) -> Self {
        LatticeDistribution {
            d: self.d,
            weights: self
                .weights
                .iter()
                .map(|(p, w)| (p.iter().map(|x| -x).collect(), w.clone()))
                .collect(),
            denom: self.denom.clone(),
        }
    }

    /// Mass of the closed Euclidean ball of `radius` around `center`.
    pub fn ball_mass(&self, center: &[i64], radius: f64) -> BigRational {
        let limit = numeric::floor_square(radius);
        let mut w = BigUint::zero();
        for (p, pw) in &self.weights {
            let dist: BigInt = p
                .iter()
                .zip(center)
                .map(|(&x, &c)| {
                    let t = BigInt::from(x) - c;
                    &t * &t
                })
                .sum();
            if dist <= limit {
                w += pw;
            }
        }
        BigRational::new(w.into(), self.denom.clone().into())
    }

    /// Largest ball mass over centers placed at atoms; a lower bound on the
    /// Lévy concentration function at `radius`.
    pub fn best_ball_mass(&self, radius: f64) -> BigRational {
        let centers: Vec<&Vec<i64>> = self.weights.keys().collect();
        par::map_slice(&centers, |c| self.ball_mass(c, radius))
            .into_iter()
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let atoms: Vec<serde_json::Value> = self
            .atoms()
            .into_iter()
            .map(|(p, m)| serde_json::json!({"point": p, "mass": numeric::ratio_string(&m)}))
            .collect();
        serde_json::json!({"d": self.d, "atoms": atoms})
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let d = v["d"]
            .as_u64()
            .ok_or_else(|| Error::Parse("missing \"d\"".into()))? as usize;
        let atoms = v["atoms"]
            .as_array()
            .ok_or_else(|| Error::Parse("missing \"atoms\"".into()))?;
        let mut items = Vec::with_capacity(atoms.len());
        for a in atoms {
            let point: Vec<i64> = serde_json::from_value(a["point"].clone())
                .map_err(|e| Error::Parse(e.to_string()))?;
            let mass = match &a["mass"] {
                serde_json::Value::String(s) => numeric::parse_ratio(s)?,
                serde_json::Value::Number(n) if n.as_u64() == Some(1) => BigRational::one(),
                other => return Err(Error::Parse(format!("mass must be a \"p/q\" string, got {other}"))),
            };
            items.push((point, mass));
        }
        Self::from_masses(d, items)
    }
}

/// Distribution of `X + Y` for independent `X ~ p`, `Y ~ q`.
pub fn convolve(p: &LatticeDistribution, q: &LatticeDistribution) -> Result<LatticeDistribution> {
    if p.d != q.d {
        return Err(Error::DimensionMismatch {
            expected: p.d,
            found: q.d,
        });
    }
    let left: Vec<(&Vec<i64>, &BigUint)> = p.weights.iter().collect();
    let chunk = left.len().div_ceil(par::workers() * 4).max(16);
    let chunks: Vec<&[(&Vec<i64>, &BigUint)]> = left.chunks(chunk).collect();
    let partial = par::map_slice(&chunks, |c| {
        let mut out: BTreeMap<Vec<i64>, BigUint> = BTreeMap::new();
        for (x, wx) in c.iter() {
            for (y, wy) in &q.weights {
                let s: Vec<i64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                *out.entry(s).or_default() += *wx * wy;
            }
        }
        out
    });
    let mut weights: BTreeMap<Vec<i64>, BigUint> = BTreeMap::new();
    for part in partial {
        for (k, w) in part {
            *weights.entry(k).or_default() += w;
        }
    }
    Ok(LatticeDistribution {
        d: p.d,
        weights,
        denom: &p.denom * &q.denom,
    }
    .reduced())
}

/// Distribution of `X - X'` with `X'` an independent copy.
pub fn symmetrize(p: &LatticeDistribution) -> LatticeDistribution {
    convolve(p, &p.reflect()).expect("same dimension")
}

/// `m`-fold convolution power by repeated squaring.
pub fn self_convolve(p: &LatticeDistribution, m: u64) -> Result<LatticeDistribution> {
    if m == 0 {
        return Err(Error::invalid("convolution power must be >= 1"));
    }
    let mut result: Option<LatticeDistribution> = None;
    let mut base = p.clone();
    let mut k = m;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => convolve(&r, &base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = convolve(&base, &base)?;
    }
    Ok(result.expect("m >= 1"))
}

/// Convolution of a list of distributions.
pub fn convolve_all(dists: &[LatticeDistribution]) -> Result<LatticeDistribution> {
    let (first, rest) = dists
        .split_first()
        .ok_or_else(|| Error::invalid("no distributions"))?;
    rest.iter().try_fold(first.clone(), |acc, q| convolve(&acc, q))
}

/// Which replication inequality to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Replication {
    /// Tuples in `4N`; factors use `X - X'` summed `a_i/2` times.
    #[default]
    Symmetrized,
    /// Origin-symmetric inputs, tuples in `2N`; factors use `a_i` copies of `X`.
    OriginSymmetric,
}

impl Replication {
    pub fn divisor(self) -> u64 {
        match self {
            Replication::Symmetrized => 4,
            Replication::OriginSymmetric => 2,
        }
    }
}

/// Largest tuple entry accepted by the replication checks.
pub const MAX_TUPLE_ENTRY: u64 = 256;
/// Largest common exponent for which the comparison is done exactly.
pub const EXACT_POWER_CAP: u64 = 720;

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationReport {
    pub lhs: BigRational,
    /// Upward-rounded value of the right-hand side.
    pub rhs: f64,
    /// Exact base masses, one per factor.
    pub factors: Vec<BigRational>,
    pub holds: bool,
    /// Whether `holds` (and `equality`) came from exact arithmetic.
    pub exact: bool,
    /// Exact equality, when decided exactly.
    pub equality: Option<bool>,
}

impl ReplicationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lhs": numeric::ratio_string(&self.lhs),
            "rhs": self.rhs,
            "factors": self.factors.iter().map(numeric::ratio_string).collect::<Vec<_>>(),
            "holds": self.holds,
            "exact": self.exact,
            "equality": self.equality,
        })
    }
}

fn check_inputs(
    dists: &[LatticeDistribution],
    tuple: &ReciprocalTuple,
    variant: Replication,
) -> Result<Vec<u64>> {
    if dists.is_empty() {
        return Err(Error::invalid("no distributions"));
    }
    if tuple.len() != dists.len() {
        return Err(Error::DimensionMismatch {
            expected: dists.len(),
            found: tuple.len(),
        });
    }
    if !tuple.is_valid(variant.divisor()) {
        return Err(Error::invalid(format!(
            "tuple must lie in {}N with reciprocal sum 1",
            variant.divisor()
        )));
    }
    let d = dists[0].d;
    if let Some(q) = dists.iter().find(|q| q.d != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: q.d,
        });
    }
    if variant == Replication::OriginSymmetric && !dists.iter().all(|q| q.is_origin_symmetric()) {
        return Err(Error::invalid("variant needs origin-symmetric distributions"));
    }
    tuple
        .b
        .iter()
        .map(|b| match b.to_u64() {
            Some(v) if v <= MAX_TUPLE_ENTRY => Ok(v),
            _ => Err(Error::CapExceeded {
                what: "replication tuple entry",
                value: b.to_u64().unwrap_or(u64::MAX),
                cap: MAX_TUPLE_ENTRY,
            }),
        })
        .collect()
}

// The distribution whose mass near 0 forms factor i.
fn factor_distribution(x: &LatticeDistribution, a: u64, variant: Replication) -> Result<LatticeDistribution> {
    match variant {
        Replication::Symmetrized => self_convolve(&symmetrize(x), a / 2),
        Replication::OriginSymmetric => self_convolve(x, a),
    }
}

// Decides lhs <= scale * prod factors_i^(1/a_i), exactly when the common
// exponent is small and by outward rounding otherwise.
fn compare(lhs: BigRational, scale: &BigUint, factors: Vec<BigRational>, a: &[u64]) -> ReplicationReport {
    let mut rhs = numeric::to_f64_up(&BigRational::from_integer(scale.clone().into()));
    for (f, &ai) in factors.iter().zip(a) {
        rhs = numeric::mul_up(rhs, pow_frac_up(f, 1, ai));
    }
    let l = a.iter().fold(1u64, |acc, &x| acc.lcm(&x));
    if l <= EXACT_POWER_CAP {
        let left = num_traits::pow(lhs.clone(), l as usize);
        let mut right = num_traits::pow(BigRational::from_integer(scale.clone().into()), l as usize);
        for (f, &ai) in factors.iter().zip(a) {
            right *= num_traits::pow(f.clone(), (l / ai) as usize);
        }
        return ReplicationReport {
            holds: left <= right,
            equality: Some(left == right),
            exact: true,
            lhs,
            rhs,
            factors,
        };
    }
    ReplicationReport {
        holds: lhs <= numeric::exact_f64(rhs),
        equality: None,
        exact: false,
        lhs,
        rhs,
        factors,
    }
}

/// `Pr[S = v] <= prod_i Pr[S~_{i, a_i/2} = 0]^(1/a_i)`, or the
/// origin-symmetric form with `S_{i, a_i}`.
pub fn replication_atom_check(
    dists: &[LatticeDistribution],
    tuple: &ReciprocalTuple,
    v: &[i64],
    variant: Replication,
) -> Result<ReplicationReport> {
    let a = check_inputs(dists, tuple, variant)?;
    let d = dists[0].d;
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    // Tuples are sorted; the pairing with distributions is positional.
    let lhs = convolve_all(dists)?.mass(v);
    let zero = vec![0i64; d];
    let factors = dists
        .iter()
        .zip(&a)
        .map(|(x, &ai)| Ok(factor_distribution(x, ai, variant)?.mass(&zero)))
        .collect::<Result<Vec<_>>>()?;
    Ok(compare(lhs, &BigUint::one(), factors, &a))
}

/// `Pr[|S - center| <= delta] <= 2^d prod_i L(S~_{i, a_i/2}, 4 delta)^(1/a_i)`,
/// with each `L` evaluated at its best atom-centered ball.
pub fn replication_sbp_check(
    dists: &[LatticeDistribution],
    tuple: &ReciprocalTuple,
    delta: f64,
    center: &[i64],
    variant: Replication,
) -> Result<ReplicationReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    let a = check_inputs(dists, tuple, variant)?;
    let d = dists[0].d;
    if center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: center.len(),
        });
    }
    let lhs = convolve_all(dists)?.ball_mass(center, delta);
    let factors = dists
        .iter()
        .zip(&a)
        .map(|(x, &ai)| Ok(factor_distribution(x, ai, variant)?.best_ball_mass(4.0 * delta)))
        .collect::<Result<Vec<_>>>()?;
    Ok(compare(lhs, &pow2(d as u64), factors, &a))
}

/// A random distribution on `[-range, range]^d` with `support` atoms (fewer
/// if points collide) and weights in `1..=max_weight`.
pub fn random_distribution<R: Rng>(
    rng: &mut R,
    d: usize,
    support: usize,
    range: i64,
    max_weight: u32,
) -> LatticeDistribution {
    let items = (0..support.max(1))
        .map(|_| {
            let p = (0..d).map(|_| rng.gen_range(-range..=range)).collect();
            (p, BigUint::from(rng.gen_range(1..=max_weight.max(1))))
        })
        .collect();
    LatticeDistribution::from_weights(d, items).expect("positive weights")
}

/// A random origin-symmetric distribution: pairs `{x, -x}` with equal
/// weights, plus possibly the origin.
pub fn random_symmetric<R: Rng>(
    rng: &mut R,
    d: usize,
    pairs: usize,
    range: i64,
    max_weight: u32,
) -> LatticeDistribution {
    let mut items = Vec::new();
    for _ in 0..pairs.max(1) {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-range..=range)).collect();
        let w = BigUint::from(rng.gen_range(1..=max_weight.max(1)));
        let neg = p.iter().map(|x| -x).collect();
        items.push((p, w.clone()));
        items.push((neg, w));
    }
    if rng.gen_bool(0.5) {
        items.push((vec![0; d], BigUint::from(rng.gen_range(1..=max_weight.max(1)))));
    }
    LatticeDistribution::from_weights(d, items).expect("positive weights")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::enumerate_reciprocal_tuples;
    use crate::numeric::rational;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_point() -> LatticeDistribution {
        LatticeDistribution::from_masses(
            1,
            vec![(vec![-2], rational(1, 4)), (vec![0], rational(1, 2)), (vec![2], rational(1, 4))],
        )
        .unwrap()
    }

    #[test]
    fn convolution_examples() {
        let r = LatticeDistribution::rademacher();
        assert_eq!(convolve(&r, &r).unwrap(), two_point());
        let p = random_distribution(&mut ChaCha8Rng::seed_from_u64(1), 2, 5, 3, 7);
        assert_eq!(convolve(&LatticeDistribution::delta(vec![0, 0]), &p).unwrap(), p);
        assert!(convolve(&r, &p).is_err());
        let q = random_distribution(&mut ChaCha8Rng::seed_from_u64(2), 2, 4, 3, 7);
        assert!(convolve(&p, &q).unwrap().support_size() <= p.support_size() * q.support_size());
    }

    #[test]
    fn symmetrize_examples() {
        assert_eq!(symmetrize(&LatticeDistribution::delta(vec![3, -1])), LatticeDistribution::delta(vec![0, 0]));
        assert_eq!(symmetrize(&LatticeDistribution::rademacher()), two_point());
        let p = random_distribution(&mut ChaCha8Rng::seed_from_u64(3), 2, 4, 3, 5);
        assert!(symmetrize(&p).is_origin_symmetric());
    }

    #[test]
    fn self_convolve_examples() {
        let r = LatticeDistribution::rademacher();
        assert_eq!(self_convolve(&r, 1).unwrap(), r);
        assert_eq!(self_convolve(&r, 2).unwrap(), two_point());
        let five = self_convolve(&r, 5).unwrap();
        assert_eq!(five.mass(&[1]), rational(10, 32));
        assert!(self_convolve(&r, 0).is_err());
    }

    #[test]
    fn even_powers_of_symmetric_peak_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = symmetrize(&random_distribution(&mut rng, 1, 3, 4, 5));
            for m in [2u64, 4] {
                let s = self_convolve(&p, m).unwrap();
                assert_eq!(s.mass(&[0]), s.max_atom());
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let p = random_distribution(&mut ChaCha8Rng::seed_from_u64(5), 2, 4, 3, 9);
        assert_eq!(LatticeDistribution::from_json(&p.to_json().to_string()).unwrap(), p);
        let bad = r#"{"d":1,"atoms":[{"point":[0],"mass":"1/3"}]}"#;
        assert!(LatticeDistribution::from_json(bad).is_err());
    }

    #[test]
    fn replication_atom_examples() {
        let r = LatticeDistribution::rademacher();
        let four = vec![r.clone(); 4];
        let t = ReciprocalTuple::from_u64(&[4, 4, 4, 4]);
        let rep = replication_atom_check(&four, &t, &[0], Replication::Symmetrized).unwrap();
        assert!(rep.holds && rep.exact);
        assert_eq!(rep.lhs, rational(6, 16));

        let pair = vec![r.clone(), r.clone()];
        let t2 = ReciprocalTuple::from_u64(&[2, 2]);
        let rep = replication_atom_check(&pair, &t2, &[0], Replication::OriginSymmetric).unwrap();
        assert_eq!(rep.lhs, rational(1, 2));
        assert_eq!(rep.equality, Some(true));
        assert!(rep.holds);
        assert!(rep.rhs >= 0.5);

        let rep = replication_atom_check(&four, &t, &[7], Replication::Symmetrized).unwrap();
        assert_eq!(rep.lhs, rational(0, 1));
        assert!(rep.holds);

        assert!(replication_atom_check(&pair, &t2, &[0], Replication::Symmetrized).is_err());
        assert!(replication_atom_check(&pair, &t, &[0], Replication::Symmetrized).is_err());
        let skew = vec![LatticeDistribution::delta(vec![1]), r];
        assert!(replication_atom_check(&skew, &t2, &[0], Replication::OriginSymmetric).is_err());
    }

    #[test]
    fn replication_sbp_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = ReciprocalTuple::from_u64(&[4, 4, 4, 4]);
        for _ in 0..20 {
            let ds: Vec<_> = (0..4).map(|_| random_distribution(&mut rng, 1, 3, 3, 4)).collect();
            let atom = replication_atom_check(&ds, &t, &[0], Replication::Symmetrized).unwrap();
            let ball = replication_sbp_check(&ds, &t, 0.0, &[0], Replication::Symmetrized).unwrap();
            assert_eq!(atom.lhs, ball.lhs);
            assert!(ball.holds);
            let huge = replication_sbp_check(&ds, &t, 1e6, &[0], Replication::Symmetrized).unwrap();
            assert_eq!(huge.lhs, rational(1, 1));
            assert!(huge.holds && huge.rhs >= 2.0);
        }
    }

    proptest! {
        #[test]
        fn convolution_is_commutative_and_associative(s1 in 0u64..1000, s2 in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(s1 * 1000 + s2);
            let p = random_distribution(&mut rng, 2, 3, 2, 5);
            let q = random_distribution(&mut rng, 2, 4, 2, 5);
            let r = random_distribution(&mut rng, 2, 2, 2, 5);
            prop_assert_eq!(convolve(&p, &q).unwrap(), convolve(&q, &p).unwrap());
            prop_assert_eq!(
                convolve(&convolve(&p, &q).unwrap(), &r).unwrap(),
                convolve(&p, &convolve(&q, &r).unwrap()).unwrap()
            );
            prop_assert_eq!(convolve(&p, &q).unwrap().total_mass(), rational(1, 1));
        }

        #[test]
        fn replication_holds_on_random_instances(seed in 0u64..10_000, ell in 4usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tuples = enumerate_reciprocal_tuples(ell, 4, 1000).unwrap();
            let t = &tuples[rng.gen_range(0..tuples.len())];
            let ds: Vec<_> = (0..ell).map(|_| random_distribution(&mut rng, 1, 3, 2, 4)).collect();
            let rep = replication_atom_check(&ds, t, &[rng.gen_range(-3..=3)], Replication::Symmetrized).unwrap();
            prop_assert!(rep.holds);
        }
    }
}
