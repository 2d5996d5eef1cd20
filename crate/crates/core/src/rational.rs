//! Exact rational arithmetic used by every solver-facing path.
//!
//! All prices, spendings and bang-per-buck ratios are [`Rational`]s backed by
//! arbitrary-precision integers; floating point only ever appears in
//! human-readable report fields.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational number. Always kept in canonical form (reduced,
/// positive denominator) by the underlying representation.
pub type Rational = num_rational::BigRational;

/// Builds a rational from small integers.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds a rational from an integer.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Serialized form of a rational: decimal strings so that values of any
/// magnitude survive JSON round trips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRepr {
    pub num: String,
    pub den: String,
}

impl RationalRepr {
    pub fn of(value: &Rational) -> Self {
        RationalRepr {
            num: value.numer().to_string(),
            den: value.denom().to_string(),
        }
    }

    pub fn parse(&self) -> Result<Rational, String> {
        let num: BigInt = self
            .num
            .parse()
            .map_err(|_| format!("invalid numerator {:?}", self.num))?;
        let den: BigInt = self
            .den
            .parse()
            .map_err(|_| format!("invalid denominator {:?}", self.den))?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(Rational::new(num, den))
    }
}

/// Lossy decimal rendering for report fields.
pub fn to_f64(value: &Rational) -> f64 {
    let num = big_to_f64(value.numer());
    let den = big_to_f64(value.denom());
    num / den
}

fn big_to_f64(value: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(value).unwrap_or_else(|| {
        let sign = if value.is_negative() { -1.0 } else { 1.0 };
        sign * f64::INFINITY
    })
}

/// Memoized table of the powers of a fixed base `1 + eps`, computed by
/// repeated exact multiplication. No logarithms anywhere.
///
/// The base is canonical, so numerator and denominator powers stay coprime;
/// entries are assembled with `new_raw` to skip the per-step reduction,
/// which matters for the tiny theorem-mode epsilons.
#[derive(Debug, Clone)]
pub struct PowerTable {
    base: Rational,
    powers: Vec<(BigInt, BigInt)>,
}

impl PowerTable {
    /// `base` must be > 1.
    pub fn new(base: Rational) -> Self {
        assert!(base > Rational::one(), "power table base must exceed 1");
        PowerTable {
            base,
            powers: vec![(BigInt::from(1), BigInt::from(1))],
        }
    }

    pub fn base(&self) -> &Rational {
        &self.base
    }

    fn extend_to(&mut self, a: u32) {
        while self.powers.len() <= a as usize {
            let (num, den) = self.powers.last().unwrap();
            let next = (num * self.base.numer(), den * self.base.denom());
            self.powers.push(next);
        }
    }

    /// `base^a`, extending the table as needed.
    pub fn pow(&mut self, a: u32) -> Rational {
        self.extend_to(a);
        let (num, den) = &self.powers[a as usize];
        Rational::new_raw(num.clone(), den.clone())
    }

    /// The minimal exponent `a >= 0` with `base^a >= value`. `value` must be
    /// at least 1.
    pub fn min_exponent_at_least(&mut self, value: &Rational) -> u32 {
        assert!(*value >= Rational::one());
        let mut a = 0u32;
        loop {
            self.extend_to(a);
            let (num, den) = &self.powers[a as usize];
            // base^a >= value  <=>  num * v_den >= v_num * den
            if num * value.denom() >= value.numer() * den {
                return a;
            }
            a += 1;
        }
    }
}

/// Whether `value` equals `base^k` for some integer `k >= 0`.
pub fn is_nonneg_power_of(value: &Rational, base: &Rational) -> bool {
    debug_assert!(*base > Rational::one());
    let (mut num, mut den) = (BigInt::from(1), BigInt::from(1));
    loop {
        let lhs = &num * value.denom();
        let rhs = value.numer() * &den;
        if lhs == rhs {
            return true;
        }
        if lhs > rhs {
            return false;
        }
        num *= base.numer();
        den *= base.denom();
    }
}
