//! Exact-rational helpers and outward-rounded conversions to `f64`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn pow2(e: u64) -> BigUint {
    BigUint::one() << e
}

pub fn rational(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Exact value of a finite float.
pub fn exact_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Natural log of a positive big integer, to about double precision.
fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
}

/// Nearest float to `x`, then nudged so the result is `>= x`.
pub fn to_f64_up(x: &BigRational) -> f64 {
    let mut y = approx(x);
    while exact_cmp(y, x) == std::cmp::Ordering::Less {
        y = y.next_up();
    }
    y
}

/// Nearest float to `x`, then nudged so the result is `<= x`.
pub fn to_f64_down(x: &BigRational) -> f64 {
    let mut y = approx(x);
    while exact_cmp(y, x) == std::cmp::Ordering::Greater {
        y = y.next_down();
    }
    y
}

fn approx(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    let v = ln_rational(&x.abs()).exp() * sign;
    if v.is_finite() {
        // ln/exp loses a few ulps; refine with a direct ratio when it fits.
        match (x.numer().to_f64(), x.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => {
                let direct = n / d;
                if direct.is_finite() && direct != 0.0 {
                    return direct;
                }
                v
            }
            _ => v,
        }
    } else if v.is_nan() {
        0.0
    } else {
        f64::MAX * sign
    }
}

fn exact_cmp(y: f64, x: &BigRational) -> std::cmp::Ordering {
    if y.is_infinite() {
        return if y > 0.0 {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        };
    }
    exact_f64(y).cmp(x)
}

/// Certified upper bound on `base^(p/q)` for `base >= 0`.
pub fn pow_frac_up(base: &BigRational, p: u64, q: u64) -> f64 {
    assert!(q > 0);
    assert!(!base.is_negative());
    if p == 0 {
        return 1.0;
    }
    if base.is_zero() {
        return 0.0;
    }
    let g = p.gcd(&q);
    let (p, q) = (p / g, q / g);
    let target = num_traits::pow(base.clone(), p as usize);
    if q == 1 {
        return to_f64_up(&target);
    }
    let mut y = (ln_rational(&target) / q as f64).exp();
    if y == 0.0 {
        y = f64::from_bits(1);
    }
    if !y.is_finite() {
        return f64::INFINITY;
    }
    // The estimate is within a few ulps; step down once so the climb below
    // returns the smallest float that certifies.
    for _ in 0..4 {
        let down = y.next_down();
        if down > 0.0 && num_traits::pow(exact_f64(down), q as usize) >= target {
            y = down;
        } else {
            break;
        }
    }
    while num_traits::pow(exact_f64(y), q as usize) < target {
        y = y.next_up();
    }
    y
}

/// `a * b` rounded so the result is at least the exact product (both >= 0).
pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if p == 0.0 || !p.is_finite() {
        return p;
    }
    if exact_f64(p) < exact_f64(a) * exact_f64(b) {
        p.next_up()
    } else {
        p
    }
}

/// Serializes as `"p/q"`, always with an explicit denominator.
pub fn ratio_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad rational '{s}'")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in '{s}'")));
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

pub fn biguint_to_bigint(x: BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x)
}

/// `ceil(x)` for a float, as a non-negative integer.
pub fn ceil_nonneg(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        x.ceil() as u64
    }
}

/// Largest integer `m` with `m <= r` for a non-negative rational.
pub fn floor_rational(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

/// `floor(r^2)` where `r` is a non-negative float, exactly.
pub fn floor_square(r: f64) -> BigInt {
    let e = exact_f64(r);
    floor_rational(&(&e * &e))
}

/// Rational upper enclosure of e^2 (e^2 = 7.389056098...).
pub fn e_squared_upper() -> BigRational {
    rational(73_890_561, 10_000_000)
}

/// Rational upper enclosure of e^4 (e^4 = 54.598150033...).
pub fn e_fourth_upper() -> BigRational {
    rational(5_459_815_004i64, 100_000_000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 5), BigUint::from(252u32));
        assert_eq!(binomial(4, 0), BigUint::one());
        assert_eq!(binomial(3, 4), BigUint::zero());
    }

    #[test]
    fn upward_roots_are_certified() {
        let half = rational(1, 2);
        let r = pow_frac_up(&half, 1, 2);
        assert!(exact_f64(r) * exact_f64(r) >= half);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-15);
        let third = rational(1, 3);
        let c = pow_frac_up(&third, 2, 3);
        let c_exact = exact_f64(c);
        assert!(&c_exact * &c_exact * &c_exact >= &third * &third);
        assert_eq!(pow_frac_up(&third, 3, 1), to_f64_up(&rational(1, 27)));
    }

    #[test]
    fn directed_conversions_bracket() {
        let x = rational(1, 3);
        assert!(exact_f64(to_f64_down(&x)) <= x);
        assert!(exact_f64(to_f64_up(&x)) >= x);
        assert!(to_f64_up(&x) - to_f64_down(&x) <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn enclosures_bound_the_constants() {
        let e2 = std::f64::consts::E.powi(2);
        assert!(exact_f64(e2) < e_squared_upper());
        assert!(exact_f64(e2 * e2) < e_fourth_upper());
        assert!(e_squared_upper() - exact_f64(e2) < rational(1, 1_000_000));
    }

    #[test]
    fn ratio_round_trip() {
        let x = rational(-6, 8);
        assert_eq!(ratio_string(&x), "-3/4");
        assert_eq!(parse_ratio("-3/4").unwrap(), x);
        assert_eq!(parse_ratio("5").unwrap(), rational(5, 1));
        assert!(parse_ratio("1/0").is_err());
    }
}
