//! Brute-force ground truth: exact atom distributions of Rademacher sums,
//! solution counts over the hypercube and combinatorial dimension.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::bounds::VectorSystem;
use crate::error::{Error, Result};
use crate::exact::{self, ExactMatrix};
use crate::numeric::{self, pow2};
use crate::par;

/// Default cap on `n` for sign enumeration over Rademacher sums.
pub const DEFAULT_ATOM_CAP: usize = 26;
/// Default cap on the column count for solution counting.
pub const DEFAULT_SOLUTION_CAP: usize = 40;
/// Default cap on the rank in combinatorial dimension.
pub const DEFAULT_COMBDIM_CAP: usize = 30;

/// Exact distribution of `sum eps_i a_i`, stored as counts out of `2^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomTable {
    pub n: usize,
    pub d: usize,
    pub counts: BTreeMap<Vec<i64>, u64>,
}

impl AtomTable {
    pub fn denominator(&self) -> BigUint {
        pow2(self.n as u64)
    }

    pub fn probability(&self, point: &[i64]) -> BigRational {
        let c = self.counts.get(point).copied().unwrap_or(0);
        BigRational::new(c.into(), self.denominator().into())
    }

    pub fn max_count(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn max_atom(&self) -> BigRational {
        BigRational::new(self.max_count().into(), self.denominator().into())
    }

    pub fn total_mass(&self) -> BigRational {
        let total: u128 = self.counts.values().map(|&c| c as u128).sum();
        BigRational::new(BigInt::from(total), self.denominator().into())
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Meet-in-the-middle for larger `n`, plain enumeration otherwise.
    #[default]
    Auto,
    Naive,
    MeetInMiddle,
}

// Every partial sum must fit comfortably in an i64.
fn check_magnitudes(vectors: &[Vec<i64>]) -> Result<()> {
    let mut total: i128 = 0;
    for v in vectors {
        let m = v.iter().map(|x| (*x as i128).abs()).max().unwrap_or(0);
        total += m;
    }
    if total > (i64::MAX / 4) as i128 {
        return Err(Error::invalid("vector entries too large for exact enumeration"));
    }
    Ok(())
}

/// Counts of every signed sum `sum eps_i v_i`, enumerated in Gray-code order
/// inside each chunk of fixed high bits.
pub fn signed_sum_counts(vectors: &[Vec<i64>], d: usize) -> HashMap<Vec<i64>, u64> {
    let n = vectors.len();
    let high = n.min(8).min(n.saturating_sub(6));
    let low = n - high;
    let tables = par::map_range(1usize << high, |prefix| {
        let mut sum = vec![0i64; d];
        // Bit set means eps = -1; low bits start at +1.
        for (i, v) in vectors.iter().enumerate() {
            let neg = i >= low && (prefix >> (i - low)) & 1 == 1;
            for k in 0..d {
                sum[k] += if neg { -v[k] } else { v[k] };
            }
        }
        let mut table: HashMap<Vec<i64>, u64> = HashMap::new();
        *table.entry(sum.clone()).or_insert(0) += 1;
        let mut state: u64 = 0;
        for step in 1u64..(1u64 << low) {
            let j = step.trailing_zeros() as usize;
            state ^= 1 << j;
            let sign = if state >> j & 1 == 1 { -2 } else { 2 };
            for k in 0..d {
                sum[k] += sign * vectors[j][k];
            }
            match table.get_mut(sum.as_slice()) {
                Some(c) => *c += 1,
                None => {
                    table.insert(sum.clone(), 1);
                }
            }
        }
        table
    });
    let mut merged: HashMap<Vec<i64>, u64> = HashMap::new();
    for t in tables {
        for (k, c) in t {
            *merged.entry(k).or_insert(0) += c;
        }
    }
    merged
}

fn check_system(system: &VectorSystem, cap: usize) -> Result<()> {
    system.validate()?;
    if system.n() > cap {
        return Err(Error::CapExceeded {
            what: "sign enumeration n",
            value: system.n() as u64,
            cap: cap as u64,
        });
    }
    check_magnitudes(&system.vectors)
}

pub fn atom_distribution(system: &VectorSystem, cap: usize, method: Method) -> Result<AtomTable> {
    check_system(system, cap)?;
    let n = system.n();
    let d = system.d;
    let use_mitm = match method {
        Method::Auto => n >= 14,
        Method::Naive => false,
        Method::MeetInMiddle => true,
    };
    let counts: BTreeMap<Vec<i64>, u64> = if use_mitm {
        let split = n.div_ceil(2);
        let left = signed_sum_counts(&system.vectors[..split], d);
        let right = signed_sum_counts(&system.vectors[split..], d);
        let right: Vec<(Vec<i64>, u64)> = right.into_iter().collect();
        let left: Vec<(Vec<i64>, u64)> = {
            let mut l: Vec<_> = left.into_iter().collect();
            l.sort();
            l
        };
        let chunks: Vec<&[(Vec<i64>, u64)]> = left.chunks(left.len().div_ceil(64).max(1)).collect();
        let partial = par::map_slice(&chunks, |chunk| {
            let mut t: HashMap<Vec<i64>, u64> = HashMap::new();
            let mut key = vec![0i64; d];
            for (p, cp) in chunk.iter() {
                for (q, cq) in &right {
                    for k in 0..d {
                        key[k] = p[k] + q[k];
                    }
                    match t.get_mut(key.as_slice()) {
                        Some(c) => *c += cp * cq,
                        None => {
                            t.insert(key.clone(), cp * cq);
                        }
                    }
                }
            }
            t
        });
        let mut out = BTreeMap::new();
        for t in partial {
            for (k, c) in t {
                *out.entry(k).or_insert(0) += c;
            }
        }
        out
    } else {
        signed_sum_counts(&system.vectors, d).into_iter().collect()
    };
    Ok(AtomTable { n, d, counts })
}

/// `max_u Pr[sum eps_i a_i = u]`.
pub fn atom_max(system: &VectorSystem) -> Result<BigRational> {
    Ok(atom_distribution(system, DEFAULT_ATOM_CAP, Method::Auto)?.max_atom())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CenterPolicy {
    /// Centers at atoms of the distribution.
    #[default]
    Atoms,
    /// Atoms plus midpoints of every pair of atoms.
    AtomsAndMidpoints,
}

/// Cap on candidate centers tried by [`levy_lower_bound`].
pub const LEVY_CENTER_CAP: usize = 1_000_000;

/// A certified lower bound on the Lévy concentration function
/// `sup_u Pr[|X - u| <= radius]`, from a finite set of centers.
pub fn levy_lower_bound(
    system: &VectorSystem,
    radius: f64,
    policy: CenterPolicy,
) -> Result<BigRational> {
    let table = atom_distribution(system, DEFAULT_ATOM_CAP, Method::Auto)?;
    levy_from_table(&table, radius, policy)
}

pub fn levy_from_table(table: &AtomTable, radius: f64, policy: CenterPolicy) -> Result<BigRational> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be finite and >= 0, got {radius}")));
    }
    let atoms: Vec<(&Vec<i64>, u64)> = table.counts.iter().map(|(k, &c)| (k, c)).collect();
    // Centers are kept in doubled coordinates so midpoints stay integral;
    // squared distances are then integers and compare exactly to floor(4r^2).
    let limit = big_to_i128(&numeric::floor_square(2.0 * radius));
    let mass_around = |center2: &[i64], limit: i128| -> u64 {
        atoms
            .iter()
            .filter(|(p, _)| {
                let dist: i128 = p
                    .iter()
                    .zip(center2)
                    .map(|(&x, &c)| {
                        let t = 2 * x as i128 - c as i128;
                        t * t
                    })
                    .sum();
                dist <= limit
            })
            .map(|(_, c)| *c)
            .sum()
    };
    let mut centers: Vec<Vec<i64>> = atoms.iter().map(|(p, _)| p.iter().map(|x| 2 * x).collect()).collect();
    if policy == CenterPolicy::AtomsAndMidpoints {
        let k = atoms.len();
        if k.saturating_mul(k) / 2 > LEVY_CENTER_CAP {
            return Err(Error::BudgetExceeded {
                what: "Lévy center",
                limit: LEVY_CENTER_CAP as u64,
            });
        }
        for i in 0..k {
            for j in i + 1..k {
                centers.push(atoms[i].0.iter().zip(atoms[j].0).map(|(a, b)| a + b).collect());
            }
        }
    }
    // All centers are in doubled coordinates: |2x - c|^2 <= floor(4 r^2).
    let best = par::map_slice(&centers, |c| mass_around(c, limit))
        .into_iter()
        .max()
        .unwrap_or(0);
    Ok(BigRational::new(best.into(), table.denominator().into()))
}

fn big_to_i128(x: &BigInt) -> i128 {
    x.to_i128().unwrap_or(i128::MAX / 8)
}

/// `|{x in {-1,1}^n : A x = b}|` by meet in the middle over the columns.
pub fn count_sign_solutions(a: &ExactMatrix, b: &[i64], cap: usize) -> Result<u64> {
    let n = a.cols();
    if n > cap.min(62) {
        return Err(Error::CapExceeded {
            what: "solution count columns",
            value: n as u64,
            cap: cap.min(62) as u64,
        });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    if a.rows() == 0 {
        return Ok(1u64 << n);
    }
    let entries = a
        .to_i64()
        .ok_or_else(|| Error::invalid("matrix entries too large for solution counting"))?;
    let m = a.rows();
    let columns: Vec<Vec<i64>> = (0..n)
        .map(|j| (0..m).map(|i| entries[i * n + j]).collect())
        .collect();
    check_magnitudes(&columns)?;
    let split = n / 2;
    let left = signed_sum_counts(&columns[..split], m);
    let right = signed_sum_counts(&columns[split..], m);
    let right: Vec<(Vec<i64>, u64)> = right.into_iter().collect();
    let counts = par::map_slice(&right, |(q, cq)| {
        let need: Vec<i64> = b.iter().zip(q).map(|(bi, qi)| bi - qi).collect();
        left.get(&need).map_or(0, |cp| cp * cq)
    });
    Ok(counts.into_iter().sum())
}

/// Plain `2^n` scan; reference for [`count_sign_solutions`].
pub fn count_sign_solutions_naive(a: &ExactMatrix, b: &[i64]) -> Result<u64> {
    let n = a.cols();
    if n > 24 {
        return Err(Error::CapExceeded {
            what: "naive solution count columns",
            value: n as u64,
            cap: 24,
        });
    }
    let entries = a
        .to_i64()
        .ok_or_else(|| Error::invalid("matrix entries too large"))?;
    let mut count = 0;
    for mask in 0u64..(1 << n) {
        let ok = (0..a.rows()).all(|i| {
            let s: i64 = (0..n)
                .map(|j| {
                    let x = entries[i * n + j];
                    if mask >> j & 1 == 1 {
                        -x
                    } else {
                        x
                    }
                })
                .sum();
            s == b[i]
        });
        count += ok as u64;
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinatorialDimension {
    /// `|W ∩ {-1,1}^n|`.
    pub count: BigUint,
    /// `log2(count)`, absent when the count is zero.
    pub d_pm: Option<f64>,
    pub rank: usize,
}

/// Counts hypercube points in the row space: each point is determined by
/// its values on the pivot columns of the echelon basis.
pub fn combinatorial_dimension(spanning: &ExactMatrix, cap: usize) -> Result<CombinatorialDimension> {
    let (basis, pivots) = exact::rref(spanning);
    let r = pivots.len();
    if r > cap {
        return Err(Error::CapExceeded {
            what: "combinatorial dimension rank",
            value: r as u64,
            cap: cap as u64,
        });
    }
    let n = spanning.cols();
    // Scale the basis to integers with one common denominator D; a point w
    // lies in the hypercube iff every entry of D w is +-D.
    let mut den = BigInt::from(1);
    for row in &basis {
        for x in row {
            den = num_integer::Integer::lcm(&den, x.denom());
        }
    }
    let int_rows: Vec<Vec<BigInt>> = basis
        .iter()
        .map(|row| row.iter().map(|x| (x * &den).to_integer()).collect())
        .collect();
    let small: Option<(i64, Vec<Vec<i64>>)> = (|| {
        let d = den.to_i64()?;
        let rows = int_rows
            .iter()
            .map(|row| row.iter().map(|x| x.to_i64()).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()?;
        let bound: i128 = rows
            .iter()
            .map(|row: &Vec<i64>| row.iter().map(|x| (*x as i128).abs()).max().unwrap_or(0))
            .sum();
        (bound < (i64::MAX / 4) as i128).then_some((d, rows))
    })();
    let Some((d, rows)) = small else {
        return Err(Error::invalid("echelon basis too large for exact enumeration"));
    };
    let columns: Vec<Vec<i64>> = rows;
    let counts = signed_sum_counts(&columns, n);
    let hits: u64 = counts
        .iter()
        .filter(|(w, _)| w.iter().all(|&x| x == d || x == -d))
        .map(|(_, c)| *c)
        .sum();
    let count = BigUint::from(hits);
    let d_pm = if hits == 0 {
        None
    } else {
        Some((hits as f64).log2())
    };
    Ok(CombinatorialDimension { count, d_pm, rank: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{erdos_lo_bound, halasz_atom_bound, tightness_system, BoundValue};
    use crate::numeric::rational;
    use proptest::prelude::*;

    fn sys(d: usize, vectors: Vec<Vec<i64>>) -> VectorSystem {
        VectorSystem::single_block(d, vectors).unwrap()
    }

    #[test]
    fn two_coins() {
        let t = atom_distribution(&sys(1, vec![vec![1], vec![1]]), 26, Method::Naive).unwrap();
        assert_eq!(t.probability(&[-2]), rational(1, 4));
        assert_eq!(t.probability(&[0]), rational(1, 2));
        assert_eq!(t.probability(&[2]), rational(1, 4));
        assert_eq!(t.support_size(), 3);
        assert_eq!(t.total_mass(), rational(1, 1));
    }

    #[test]
    fn single_vector_has_two_atoms() {
        for a in [vec![3, -1], vec![0, 5], vec![7, 7]] {
            let t = atom_distribution(&sys(2, vec![a]), 26, Method::Auto).unwrap();
            assert_eq!(t.support_size(), 2);
            assert!(t.counts.values().all(|&c| c == 1));
        }
    }

    #[test]
    fn tightness_family_is_tight() {
        let s = tightness_system(2, 2);
        let max = atom_max(&s).unwrap();
        assert_eq!(max, rational(1, 4));
        assert_eq!(
            halasz_atom_bound(&s.block_ranks(), 2).unwrap(),
            BoundValue::Exact(rational(1, 4))
        );
    }

    #[test]
    fn equal_weights_attain_erdos() {
        let s = sys(1, vec![vec![5]; 10]);
        assert_eq!(atom_max(&s).unwrap(), rational(252, 1024));
        assert_eq!(atom_max(&s).unwrap(), erdos_lo_bound(10).unwrap());
    }

    #[test]
    fn dyadic_weights_are_all_distinct() {
        let n = 12;
        let s = sys(1, (0..n).map(|i| vec![1i64 << i]).collect());
        let t = atom_distribution(&s, 26, Method::MeetInMiddle).unwrap();
        assert_eq!(t.support_size(), 1 << n);
        assert_eq!(t.max_atom(), rational(1, 1 << n));
    }

    #[test]
    fn empty_and_capped_systems_fail() {
        let empty = VectorSystem { d: 1, vectors: vec![], partition: vec![] };
        assert!(atom_max(&empty).is_err());
        let big = sys(1, vec![vec![1]; 30]);
        assert!(matches!(atom_max(&big), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn levy_examples() {
        let s = sys(1, vec![vec![1], vec![1]]);
        assert_eq!(levy_lower_bound(&s, 0.0, CenterPolicy::Atoms).unwrap(), atom_max(&s).unwrap());
        assert_eq!(levy_lower_bound(&s, 2.0, CenterPolicy::Atoms).unwrap(), rational(1, 1));
        assert_eq!(levy_lower_bound(&s, 1.9, CenterPolicy::Atoms).unwrap(), rational(1, 2));
        let one = sys(1, vec![vec![1]]);
        assert_eq!(levy_lower_bound(&one, 1.0, CenterPolicy::Atoms).unwrap(), rational(1, 2));
        assert_eq!(
            levy_lower_bound(&one, 1.0, CenterPolicy::AtomsAndMidpoints).unwrap(),
            rational(1, 1)
        );
        let wide = sys(2, vec![vec![3, 1], vec![-2, 5], vec![1, 1]]);
        assert_eq!(levy_lower_bound(&wide, 1e6, CenterPolicy::Atoms).unwrap(), rational(1, 1));
        assert!(levy_lower_bound(&wide, -1.0, CenterPolicy::Atoms).is_err());
    }

    #[test]
    fn solution_count_examples() {
        let h = ExactMatrix::from_rows(&[vec![1, 1, 1, 1], vec![1, 1, -1, -1]]).unwrap();
        assert_eq!(count_sign_solutions(&h, &[0, 0], 40).unwrap(), 4);
        let ones = ExactMatrix::from_rows(&[vec![1; 7]]).unwrap();
        assert_eq!(count_sign_solutions(&ones, &[0], 40).unwrap(), 0);
        assert_eq!(count_sign_solutions(&ones, &[1], 40).unwrap(), 35);
        let none = ExactMatrix::zeros(0, 9);
        assert_eq!(count_sign_solutions(&none, &[], 40).unwrap(), 512);
        let wide = ExactMatrix::zeros(1, 41);
        assert!(matches!(count_sign_solutions(&wide, &[0], 40), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn combinatorial_dimension_examples() {
        let ones = ExactMatrix::from_rows(&[vec![1; 5]]).unwrap();
        let c = combinatorial_dimension(&ones, 30).unwrap();
        assert_eq!(c.count, BigUint::from(2u32));
        assert_eq!(c.d_pm, Some(1.0));
        let id = ExactMatrix::identity(6);
        assert_eq!(combinatorial_dimension(&id, 30).unwrap().count, BigUint::from(64u32));
        let skew = ExactMatrix::from_rows(&[vec![1, 2, 0]]).unwrap();
        let c = combinatorial_dimension(&skew, 30).unwrap();
        assert_eq!(c.count, BigUint::from(0u32));
        assert_eq!(c.d_pm, None);
        let half = ExactMatrix::from_rows(&[vec![2, 2, 0, 0], vec![0, 0, 3, -3]]).unwrap();
        assert_eq!(combinatorial_dimension(&half, 30).unwrap().count, BigUint::from(4u32));
    }

    // Brute force: x is in the row space iff appending it keeps the rank.
    fn combdim_brute(s: &ExactMatrix) -> u64 {
        let n = s.cols();
        let r = exact::rank(s);
        let mut count = 0;
        for mask in 0u32..(1 << n) {
            let mut rows: Vec<Vec<i64>> = (0..s.rows())
                .map(|i| s.row(i).iter().map(|x| x.to_i64().unwrap()).collect())
                .collect();
            rows.push((0..n).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect());
            if exact::rank(&ExactMatrix::from_rows(&rows).unwrap()) == r {
                count += 1;
            }
        }
        count
    }

    fn small_system() -> impl Strategy<Value = VectorSystem> {
        (1usize..=3, 1usize..=12).prop_flat_map(|(d, n)| {
            prop::collection::vec(prop::collection::vec(-3i64..=3, d), n)
                .prop_map(move |v| VectorSystem::single_block(d, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn naive_and_mitm_agree(s in small_system()) {
            let a = atom_distribution(&s, 26, Method::Naive).unwrap();
            let b = atom_distribution(&s, 26, Method::MeetInMiddle).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.total_mass(), rational(1, 1));
        }

        #[test]
        fn levy_at_zero_is_atom_max(s in small_system()) {
            prop_assume!(s.n() <= 8);
            let t = atom_distribution(&s, 26, Method::Auto).unwrap();
            prop_assert_eq!(levy_from_table(&t, 0.0, CenterPolicy::AtomsAndMidpoints).unwrap(), t.max_atom());
        }

        #[test]
        fn solution_counts_match_naive(
            rows in 0usize..=3, cols in 1usize..=10,
            seed in prop::collection::vec(-2i64..=2, 30),
            rhs in prop::collection::vec(-3i64..=3, 3),
        ) {
            let a = ExactMatrix::from_i64(rows, cols, seed[..rows * cols].to_vec()).unwrap();
            let b = &rhs[..rows];
            let fast = count_sign_solutions(&a, b, 40).unwrap();
            prop_assert_eq!(fast, count_sign_solutions_naive(&a, b).unwrap());
            let zero = vec![0; rows];
            let homog = count_sign_solutions(&a, &zero, 40).unwrap();
            prop_assert!(homog <= 1u64 << (cols - exact::rank(&a)));
        }

        #[test]
        fn combdim_matches_brute_force(
            rows in 1usize..=3, cols in 1usize..=7,
            seed in prop::collection::vec(-1i64..=1, 21),
        ) {
            let s = ExactMatrix::from_i64(rows, cols, seed[..rows * cols].to_vec()).unwrap();
            let c = combinatorial_dimension(&s, 30).unwrap();
            prop_assert_eq!(c.count.to_u64().unwrap(), combdim_brute(&s));
            prop_assert!(c.count <= pow2(c.rank as u64));
        }
    }
}
