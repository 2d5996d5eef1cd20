//! Deterministic instance generators and the built-in fixture instances
//! used by the regression suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{Allocation, Instance};

/// What to generate. Random families are pure functions of `(family, seed)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// Uniform valuations in `0..=v_max`, patched so every good is valued.
    Random { n: usize, m: usize, v_max: i64 },
    /// One uniform row in `1..=v_max` duplicated across all agents.
    Identical { n: usize, m: usize, v_max: i64 },
    Fixture(Fixture),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// High-value/signature-good instance where Nash-optimal beats every
    /// fractionally efficient allocation by a factor above 1.44.
    /// Integer-scaled: c = 10^4, delta = 1/3000, all values scaled by 3000.
    C3,
    /// Identity matrix; the cyclic-shift allocation wastes all value.
    C4 { n: usize },
    /// 5 agents, 7 goods; every rounding of its fractional equilibrium
    /// breaks the one-good envy bound. Table values scaled by 60.
    C5,
    /// 2n goods where a 2-approximate Nash allocation is neither
    /// envy-bounded nor efficient.
    C6 { n: usize },
}

impl Fixture {
    pub fn parse(name: &str, n: Option<usize>) -> Result<Fixture, String> {
        match name {
            "c3" => Ok(Fixture::C3),
            "c4" => Ok(Fixture::C4 { n: n.unwrap_or(3) }),
            "c5" => Ok(Fixture::C5),
            "c6" => Ok(Fixture::C6 { n: n.unwrap_or(2) }),
            other => Err(format!("unknown fixture {other:?}")),
        }
    }
}

pub fn generate(family: &Family, seed: u64) -> Result<Instance, String> {
    match family {
        Family::Random { n, m, v_max } => {
            check_dims(*n, *m, *v_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut valuations: Vec<Vec<i64>> = (0..*n)
                .map(|_| (0..*m).map(|_| rng.gen_range(0..=*v_max)).collect())
                .collect();
            // Every good needs an interested agent.
            for j in 0..*m {
                if (0..*n).all(|i| valuations[i][j] == 0) {
                    let agent = rng.gen_range(0..*n);
                    valuations[agent][j] = rng.gen_range(1..=*v_max);
                }
            }
            Ok(Instance::with_name(
                format!("random-n{n}-m{m}-v{v_max}-s{seed}"),
                valuations,
            ))
        }
        Family::Identical { n, m, v_max } => {
            check_dims(*n, *m, *v_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let row: Vec<i64> = (0..*m).map(|_| rng.gen_range(1..=*v_max)).collect();
            Ok(Instance::with_name(
                format!("identical-n{n}-m{m}-v{v_max}-s{seed}"),
                vec![row; *n],
            ))
        }
        Family::Fixture(fixture) => fixture_instance(*fixture),
    }
}

fn check_dims(n: usize, m: usize, v_max: i64) -> Result<(), String> {
    if n < 1 || m < 1 || v_max < 1 {
        return Err(format!(
            "generator needs n, m, vmax >= 1 (got n={n}, m={m}, vmax={v_max})"
        ));
    }
    Ok(())
}

pub fn fixture_instance(fixture: Fixture) -> Result<Instance, String> {
    match fixture {
        Fixture::C3 => {
            // Goods: two high goods then three signature goods. Scaling by
            // 3000 turns c = 10^4 into 3*10^7 and the signature values 1/3
            // and 1/3 - 1/3000 into 1000 and 999.
            let high = 30_000_000;
            let rows = (0..3)
                .map(|i| {
                    let mut row = vec![high, high];
                    for s in 0..3 {
                        row.push(if s == i { 1000 } else { 999 });
                    }
                    row
                })
                .collect();
            Ok(Instance::with_name("c3", rows))
        }
        Fixture::C4 { n } => {
            if n < 1 {
                return Err("c4 needs n >= 1".into());
            }
            let rows = (0..n)
                .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
                .collect();
            Ok(Instance::with_name("c4", rows))
        }
        Fixture::C5 => {
            // 3/4, 0.7 and 2/3 scaled by 60.
            let rows = vec![
                vec![45, 0, 0, 45, 0, 0, 0],
                vec![0, 45, 0, 45, 0, 0, 0],
                vec![0, 0, 45, 45, 0, 0, 0],
                vec![42, 42, 42, 42, 40, 0, 40],
                vec![42, 42, 42, 42, 0, 40, 40],
            ];
            Ok(Instance::with_name("c5", rows))
        }
        Fixture::C6 { n } => {
            if !(2..=30).contains(&n) {
                return Err(format!("c6 needs 2 <= n <= 30, got {n}"));
            }
            let m = 2 * n;
            let common = 1i64 << (n - 1);
            let mut rows: Vec<Vec<i64>> = (0..n)
                .map(|_| {
                    let mut row = vec![common; m - 2];
                    row.extend_from_slice(&[0, 0]);
                    row
                })
                .collect();
            rows[n - 1][m - 2] = 1;
            rows[n - 1][m - 1] = (1i64 << n) - 1;
            Ok(Instance::with_name("c6", rows))
        }
    }
}

/// The two allocations discussed alongside the c3 instance: `x` keeps a
/// signature good with each high good, `y` hands all signature goods to the
/// last agent.
pub fn c3_allocations() -> (Allocation, Allocation) {
    let x = Allocation::from_bundles(vec![vec![0, 2], vec![1, 3], vec![4]]);
    let y = Allocation::from_bundles(vec![vec![0], vec![1], vec![2, 3, 4]]);
    (x, y)
}

/// The cyclic shift for c4: agent `i` gets the good valued only by `i+1`.
pub fn c4_shifted_allocation(n: usize) -> Allocation {
    let bundles = (0..n).map(|i| vec![(i + 1) % n]).collect();
    Allocation::from_bundles(bundles)
}

/// All six integral roundings of the c5 fractional equilibrium: good 4 goes
/// to one of the first three agents, good 7 to one of the last two.
pub fn c5_roundings() -> Vec<Allocation> {
    let mut out = Vec::new();
    for i in 0..3 {
        for k in 3..5 {
            let mut bundles: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![2], vec![4], vec![5]];
            bundles[i].push(3);
            bundles[k].push(6);
            out.push(Allocation::from_bundles(bundles));
        }
    }
    out
}

/// The Nash-optimal pairing `x` and the 2-approximate allocation `y` for
/// the c6 instance.
pub fn c6_allocations(n: usize) -> (Allocation, Allocation) {
    let x = Allocation::from_bundles((0..n).map(|i| vec![2 * i, 2 * i + 1]).collect());
    let mut y_bundles: Vec<Vec<usize>> = (0..n).map(|i| vec![2 * i, 2 * i + 1]).collect();
    y_bundles[0].push(2 * n - 1);
    y_bundles[n - 1] = vec![2 * n - 2];
    let y = Allocation::from_bundles(y_bundles);
    (x, y)
}
