//! Power-of-(1+ε) rounding of instances.
//!
//! Every positive valuation is rounded up to the least power `(1+ε)^a >= v`,
//! found by exact rational comparison against a memoized power table.

use crate::instance::Instance;
use crate::rational::{int, PowerTable, Rational};
use num_traits::{One, Zero};

/// The rounding parameter. Must lie strictly between 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Epsilon {
    value: Rational,
}

impl Epsilon {
    pub fn new(value: Rational) -> Result<Self, String> {
        if value <= Rational::zero() || value >= Rational::one() {
            return Err(format!("epsilon must lie in (0,1), got {value}"));
        }
        Ok(Epsilon { value })
    }

    /// `1/k` for `k >= 2`, the shape used by the adaptive schedule.
    pub fn unit_fraction(k: i64) -> Result<Self, String> {
        if k < 2 {
            return Err(format!("epsilon denominator must be at least 2, got {k}"));
        }
        Epsilon::new(Rational::new(1.into(), k.into()))
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    pub fn one_plus(&self) -> Rational {
        Rational::one() + &self.value
    }

    /// The slack factor `3ε` used by the solver's termination checks.
    pub fn three_times(&self) -> Rational {
        int(3) * &self.value
    }
}

/// One entry of the rounded matrix: zero stays zero, a positive value
/// becomes the exponent of its rounded power.
pub type Exponent = Option<u32>;

/// An instance whose valuations are all zero or integral powers of `(1+ε)`,
/// produced by rounding an integral [`Instance`] up.
#[derive(Debug, Clone)]
pub struct RoundedInstance {
    epsilon: Epsilon,
    exponents: Vec<Vec<Exponent>>,
    values: Vec<Vec<Rational>>,
    v_max: Rational,
}

impl RoundedInstance {
    pub fn agents(&self) -> usize {
        self.exponents.len()
    }

    pub fn goods(&self) -> usize {
        self.exponents.first().map_or(0, Vec::len)
    }

    pub fn epsilon(&self) -> &Epsilon {
        &self.epsilon
    }

    pub fn exponent(&self, agent: usize, good: usize) -> Exponent {
        self.exponents[agent][good]
    }

    pub fn exponents(&self) -> &Vec<Vec<Exponent>> {
        &self.exponents
    }

    /// The rounded valuation `v'_{i,j}` as an exact rational.
    pub fn value(&self, agent: usize, good: usize) -> &Rational {
        &self.values[agent][good]
    }

    /// Largest rounded valuation.
    pub fn v_max(&self) -> &Rational {
        &self.v_max
    }
}

/// Rounds a single non-negative value: zero maps to zero, a positive `v`
/// maps to the minimal exponent `a` with `(1+ε)^a >= v`.
pub fn round_up_value(v: i64, eps: &Epsilon) -> Exponent {
    assert!(v >= 0, "valuations are non-negative");
    if v == 0 {
        return None;
    }
    let mut table = PowerTable::new(eps.one_plus());
    Some(table.min_exponent_at_least(&int(v)))
}

/// Entry-wise rounding of a validated instance.
pub fn round_instance(inst: &Instance, eps: &Epsilon) -> RoundedInstance {
    let mut table = PowerTable::new(eps.one_plus());
    let mut exponents = Vec::with_capacity(inst.agents());
    let mut values = Vec::with_capacity(inst.agents());
    let mut v_max = Rational::zero();
    for row in &inst.valuations {
        let mut erow = Vec::with_capacity(row.len());
        let mut vrow = Vec::with_capacity(row.len());
        for &v in row {
            if v == 0 {
                erow.push(None);
                vrow.push(Rational::zero());
            } else {
                let a = table.min_exponent_at_least(&int(v));
                let rounded = table.pow(a);
                if rounded > v_max {
                    v_max = rounded.clone();
                }
                erow.push(Some(a));
                vrow.push(rounded);
            }
        }
        exponents.push(erow);
        values.push(vrow);
    }
    RoundedInstance {
        epsilon: eps.clone(),
        exponents,
        values,
        v_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn quarter() -> Epsilon {
        Epsilon::unit_fraction(4).unwrap()
    }

    #[test]
    fn epsilon_bounds() {
        assert!(Epsilon::new(ratio(1, 2)).is_ok());
        assert!(Epsilon::new(ratio(0, 1)).is_err());
        assert!(Epsilon::new(ratio(1, 1)).is_err());
        assert!(Epsilon::new(ratio(3, 2)).is_err());
        assert!(Epsilon::unit_fraction(1).is_err());
    }

    #[test]
    fn round_zero_and_one() {
        assert_eq!(round_up_value(0, &quarter()), None);
        assert_eq!(round_up_value(1, &quarter()), Some(0));
    }

    #[test]
    fn round_five_at_quarter() {
        // (5/4)^7 = 78125/16384 < 5 <= (5/4)^8 = 390625/65536
        assert_eq!(round_up_value(5, &quarter()), Some(8));
        let rounded = round_instance(&Instance::new(vec![vec![5]]), &quarter());
        assert_eq!(*rounded.value(0, 0), ratio(390_625, 65_536));
    }

    #[test]
    fn round_diagonal_example() {
        let inst = Instance::new(vec![vec![2, 1], vec![1, 2]]);
        let rounded = round_instance(&inst, &quarter());
        assert_eq!(rounded.exponents()[0], vec![Some(4), Some(0)]);
        assert_eq!(rounded.exponents()[1], vec![Some(0), Some(4)]);
        assert_eq!(*rounded.value(0, 0), ratio(625, 256));
        assert_eq!(*rounded.v_max(), ratio(625, 256));
    }

    #[test]
    fn all_ones_round_to_exponent_zero() {
        let inst = Instance::new(vec![vec![1, 1, 1], vec![1, 1, 1]]);
        let rounded = round_instance(&inst, &quarter());
        for row in rounded.exponents() {
            assert!(row.iter().all(|e| *e == Some(0)));
        }
    }

    #[test]
    fn sandwich_bounds_hold() {
        let eps = Epsilon::unit_fraction(3).unwrap();
        let inst = Instance::new(vec![vec![1, 7, 13, 100, 9999]]);
        let rounded = round_instance(&inst, &eps);
        for j in 0..inst.goods() {
            let v = int(inst.value(0, j));
            let v_rounded = rounded.value(0, j);
            assert!(v <= *v_rounded);
            assert!(*v_rounded <= eps.one_plus() * &v);
        }
    }
}
