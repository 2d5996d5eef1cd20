//! Fisher-market machinery over a rounded instance: spendings, maximum
//! bang-per-buck sets, the hierarchy of agents reachable from the least
//! spender, alternating paths, and the price-envy predicates.
//!
//! Everything here is a pure query over an immutable snapshot; only the
//! solver mutates outcomes.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::instance::Allocation;
use crate::rational::Rational;
use crate::rounding::{Epsilon, RoundedInstance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarketError {
    #[error("agent {0} is the hierarchy root; no alternating path leads to it")]
    PathToRoot(usize),
    #[error("agent {0} is not reachable in the hierarchy")]
    NotInHierarchy(usize),
}

/// Exact per-good prices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceVector {
    pub prices: Vec<Rational>,
}

impl PriceVector {
    pub fn new(prices: Vec<Rational>) -> Self {
        PriceVector { prices }
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn get(&self, good: usize) -> &Rational {
        &self.prices[good]
    }
}

/// Exact total price of a bundle; the empty bundle spends zero.
pub fn spending(prices: &PriceVector, bundle: &BTreeSet<usize>) -> Rational {
    bundle
        .iter()
        .fold(Rational::zero(), |acc, &j| acc + prices.get(j))
}

/// An agent's maximum bang-per-buck ratio and the goods attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MbbInfo {
    pub alpha: Rational,
    pub mbb_set: BTreeSet<usize>,
}

/// Computes the maximum bang-per-buck data for one agent. Ratios are
/// compared by cross-multiplication; goods valued at zero never enter the
/// set, so an agent valuing nothing gets `alpha = 0` and an empty set.
pub fn mbb(rounded: &RoundedInstance, prices: &PriceVector, agent: usize) -> MbbInfo {
    debug_assert!(prices.prices.iter().all(|p| *p > Rational::zero()));
    let mut best: Option<(Rational, Rational)> = None; // (value, price) of the current max
    let mut set = BTreeSet::new();
    for good in 0..rounded.goods() {
        let value = rounded.value(agent, good);
        if value.is_zero() {
            continue;
        }
        let price = prices.get(good);
        match &best {
            None => {
                best = Some((value.clone(), price.clone()));
                set.insert(good);
            }
            Some((bv, bp)) => {
                // value/price vs bv/bp  <=>  value*bp vs bv*price
                let lhs = value * bp;
                let rhs = bv * price;
                if lhs > rhs {
                    best = Some((value.clone(), price.clone()));
                    set.clear();
                    set.insert(good);
                } else if lhs == rhs {
                    set.insert(good);
                }
            }
        }
    }
    match best {
        None => MbbInfo {
            alpha: Rational::zero(),
            mbb_set: set,
        },
        Some((value, price)) => MbbInfo {
            alpha: value / price,
            mbb_set: set,
        },
    }
}

/// A market state: a rounded instance, an integral allocation and prices.
#[derive(Debug, Clone)]
pub struct MarketOutcome<'a> {
    pub rounded: &'a RoundedInstance,
    pub allocation: Allocation,
    pub prices: PriceVector,
}

impl<'a> MarketOutcome<'a> {
    pub fn agents(&self) -> usize {
        self.rounded.agents()
    }

    pub fn goods(&self) -> usize {
        self.rounded.goods()
    }

    pub fn spending_of(&self, agent: usize) -> Rational {
        spending(&self.prices, &self.allocation.bundles[agent])
    }

    pub fn spendings(&self) -> Vec<Rational> {
        (0..self.agents()).map(|i| self.spending_of(i)).collect()
    }

    /// Smallest spending left after removing one good, or `None` for an
    /// empty bundle.
    pub fn min_removal_spending(&self, agent: usize) -> Option<Rational> {
        let bundle = &self.allocation.bundles[agent];
        let max_price = bundle.iter().map(|&j| self.prices.get(j)).max()?;
        Some(self.spending_of(agent) - max_price)
    }

    pub fn mbb_of(&self, agent: usize) -> MbbInfo {
        mbb(self.rounded, &self.prices, agent)
    }
}

/// The agent with minimal spending; ties go to the smallest index.
pub fn least_spender(outcome: &MarketOutcome) -> usize {
    let mut best = 0;
    let mut best_spending = outcome.spending_of(0);
    for agent in 1..outcome.agents() {
        let s = outcome.spending_of(agent);
        if s < best_spending {
            best = agent;
            best_spending = s;
        }
    }
    best
}

/// Level structure of the agents reachable from a root via alternating
/// bang-per-buck and allocation edges, with one back-pointer per placed
/// agent recording how it was first reached.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub root: usize,
    /// `levels[0] == [root]`; members of each level ascend.
    pub levels: Vec<Vec<usize>>,
    back: Vec<Option<(usize, usize)>>,
    level_of: Vec<Option<usize>>,
}

impl Hierarchy {
    pub fn level_of(&self, agent: usize) -> Option<usize> {
        self.level_of[agent]
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.level_of[agent].is_some()
    }

    /// `(predecessor, connecting good)` recorded when `agent` was placed.
    pub fn back_pointer(&self, agent: usize) -> Option<(usize, usize)> {
        self.back[agent]
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.iter().flatten().copied()
    }

    pub fn member_set(&self) -> BTreeSet<usize> {
        self.members().collect()
    }

    /// Goods owned by hierarchy members.
    pub fn owned_goods(&self, allocation: &Allocation) -> BTreeSet<usize> {
        self.members()
            .flat_map(|agent| allocation.bundles[agent].iter().copied())
            .collect()
    }
}

/// Builds the hierarchy level by level: level `l+1` holds the owners of the
/// bang-per-buck goods of level-`l` agents that are not already placed.
/// Each new member's back-pointer is the lexicographically smallest
/// `(predecessor, good)` witness.
pub fn build_hierarchy(root: usize, outcome: &MarketOutcome) -> Hierarchy {
    let n = outcome.agents();
    let owner = outcome.allocation.owner_map(outcome.goods());
    let mut level_of = vec![None; n];
    let mut back = vec![None; n];
    level_of[root] = Some(0);
    let mut levels = vec![vec![root]];
    loop {
        let frontier = levels.last().unwrap().clone();
        let mut next: Vec<usize> = Vec::new();
        for &h in &frontier {
            let info = outcome.mbb_of(h);
            for &good in &info.mbb_set {
                if let Some(k) = owner[good] {
                    if level_of[k].is_none() {
                        level_of[k] = Some(levels.len());
                        back[k] = Some((h, good));
                        next.push(k);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        levels.push(next);
    }
    Hierarchy {
        root,
        levels,
        back,
        level_of,
    }
}

/// A series of alternating bang-per-buck and allocation edges from the
/// hierarchy root down to some agent: `agents[0], goods[0], agents[1], ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternatingPath {
    pub agents: Vec<usize>,
    pub goods: Vec<usize>,
}

impl AlternatingPath {
    /// Number of edges (twice the number of goods on the path).
    pub fn len(&self) -> usize {
        2 * self.goods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goods.is_empty()
    }

    pub fn last_agent(&self) -> usize {
        *self.agents.last().unwrap()
    }

    /// The good whose removal the path-violator test probes.
    pub fn last_good(&self) -> usize {
        *self.goods.last().unwrap()
    }

    /// The agent that receives the last good if the endpoint violates.
    pub fn predecessor(&self) -> usize {
        self.agents[self.agents.len() - 2]
    }

    /// Checks alternation, ownership, strictly increasing levels and
    /// non-repetition against a concrete outcome and hierarchy.
    pub fn check_invariants(&self, outcome: &MarketOutcome, hier: &Hierarchy) -> Result<(), String> {
        if self.agents.len() != self.goods.len() + 1 {
            return Err("path must alternate agents and goods".into());
        }
        let mut seen_agents = BTreeSet::new();
        let mut seen_goods = BTreeSet::new();
        for (idx, window) in self.agents.windows(2).enumerate() {
            let (from, to) = (window[0], window[1]);
            let good = self.goods[idx];
            if !outcome.mbb_of(from).mbb_set.contains(&good) {
                return Err(format!("good {good} is not a bang-per-buck good of {from}"));
            }
            if !outcome.allocation.bundles[to].contains(&good) {
                return Err(format!("good {good} is not owned by {to}"));
            }
            let (lf, lt) = (hier.level_of(from), hier.level_of(to));
            match (lf, lt) {
                (Some(a), Some(b)) if a < b => {}
                _ => return Err(format!("levels do not increase from {from} to {to}")),
            }
            if !seen_agents.insert(from) || !seen_goods.insert(good) {
                return Err("repeated agent or good on path".into());
            }
        }
        if !seen_agents.insert(self.last_agent()) {
            return Err("repeated agent or good on path".into());
        }
        Ok(())
    }
}

/// Rebuilds the canonical alternating path from the root to `agent` by
/// following back-pointers. The result has length `2 * level(agent)`.
pub fn reconstruct_path(agent: usize, hier: &Hierarchy) -> Result<AlternatingPath, MarketError> {
    match hier.level_of(agent) {
        None => return Err(MarketError::NotInHierarchy(agent)),
        Some(0) => return Err(MarketError::PathToRoot(agent)),
        Some(_) => {}
    }
    let mut agents = vec![agent];
    let mut goods = Vec::new();
    let mut cursor = agent;
    while let Some((pred, good)) = hier.back_pointer(cursor) {
        goods.push(good);
        agents.push(pred);
        cursor = pred;
    }
    debug_assert_eq!(cursor, hier.root);
    agents.reverse();
    goods.reverse();
    Ok(AlternatingPath { agents, goods })
}

/// The price-envy-free-up-to-one-good test with multiplicative slack
/// `1 + eps_factor`, together with the set of violating agents (agents whose
/// spending stays above the bound no matter which single good is removed).
/// Agents with empty bundles never violate.
pub fn is_eps_pef1(outcome: &MarketOutcome, eps_factor: &Rational) -> (bool, BTreeSet<usize>) {
    debug_assert!(*eps_factor >= Rational::zero());
    let ls = least_spender(outcome);
    let bound = (Rational::one() + eps_factor) * outcome.spending_of(ls);
    let mut violators = BTreeSet::new();
    for agent in 0..outcome.agents() {
        if let Some(left) = outcome.min_removal_spending(agent) {
            if left > bound {
                violators.insert(agent);
            }
        }
    }
    (violators.is_empty(), violators)
}

/// Scans one hierarchy level in increasing agent order for the first agent
/// whose canonical path witnesses an ε-path violation: removing the path's
/// last good still leaves it spending more than `(1+ε)` times the root.
pub fn find_eps_path_violator(
    hier: &Hierarchy,
    level: usize,
    outcome: &MarketOutcome,
    eps: &Epsilon,
) -> Option<(usize, AlternatingPath)> {
    debug_assert!(level >= 1);
    let members = hier.levels.get(level)?;
    let bound = eps.one_plus() * outcome.spending_of(hier.root);
    for &agent in members {
        let path = reconstruct_path(agent, hier).expect("level members have back-pointers");
        let left = outcome.spending_of(agent) - outcome.prices.get(path.last_good());
        if left > bound {
            return Some((agent, path));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::rational::{int, ratio};
    use crate::rounding::{round_instance, Epsilon};

    fn quarter() -> Epsilon {
        Epsilon::unit_fraction(4).unwrap()
    }

    fn rounded_ones(n: usize, m: usize) -> RoundedInstance {
        round_instance(&Instance::new(vec![vec![1; m]; n]), &quarter())
    }

    fn outcome<'a>(
        rounded: &'a RoundedInstance,
        bundles: Vec<Vec<usize>>,
        prices: Vec<Rational>,
    ) -> MarketOutcome<'a> {
        MarketOutcome {
            rounded,
            allocation: Allocation::from_bundles(bundles),
            prices: PriceVector::new(prices),
        }
    }

    #[test]
    fn spending_sums_exactly() {
        let prices = PriceVector::new(vec![ratio(3, 2), ratio(5, 4)]);
        assert_eq!(spending(&prices, &BTreeSet::new()), int(0));
        let both: BTreeSet<usize> = [0, 1].into_iter().collect();
        assert_eq!(spending(&prices, &both), ratio(11, 4));
        let single: BTreeSet<usize> = [1].into_iter().collect();
        assert_eq!(spending(&prices, &single), ratio(5, 4));
    }

    #[test]
    fn mbb_ties_and_strict_maxima() {
        // Rounded values (625/256, 1). Pricing the first good at its value
        // ties both ratios at 1.
        let inst = Instance::new(vec![vec![2, 1]]);
        let rounded = round_instance(&inst, &quarter());
        let v0 = rounded.value(0, 0).clone();
        assert_eq!(v0, ratio(625, 256));
        let info = mbb(&rounded, &PriceVector::new(vec![v0.clone(), int(1)]), 0);
        assert_eq!(info.alpha, int(1));
        assert_eq!(info.mbb_set, [0, 1].into_iter().collect::<BTreeSet<_>>());

        // Equal prices make the second ratio strictly smaller.
        let info = mbb(&rounded, &PriceVector::new(vec![v0.clone(), v0]), 0);
        assert_eq!(info.alpha, int(1));
        assert_eq!(info.mbb_set, [0].into_iter().collect::<BTreeSet<_>>());

        let zero_good = Instance::new(vec![vec![0, 1]]);
        let rounded = round_instance(&zero_good, &quarter());
        let info = mbb(&rounded, &PriceVector::new(vec![int(1), int(1)]), 0);
        assert_eq!(info.alpha, int(1));
        assert_eq!(info.mbb_set, [1].into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn mbb_empty_for_zero_row() {
        let inst = Instance::new(vec![vec![0, 0], vec![1, 1]]);
        let rounded = round_instance(&inst, &quarter());
        let info = mbb(&rounded, &PriceVector::new(vec![int(1), int(1)]), 0);
        assert_eq!(info.alpha, int(0));
        assert!(info.mbb_set.is_empty());
    }

    #[test]
    fn least_spender_breaks_ties_low() {
        let rounded = rounded_ones(3, 3);
        let equal = outcome(
            &rounded,
            vec![vec![0], vec![1], vec![2]],
            vec![int(1), int(1), int(1)],
        );
        assert_eq!(least_spender(&equal), 0);

        let staggered = outcome(
            &rounded,
            vec![vec![0], vec![1], vec![2]],
            vec![ratio(5, 4), int(1), int(2)],
        );
        assert_eq!(least_spender(&staggered), 1);

        let tied = outcome(
            &rounded,
            vec![vec![0], vec![1], vec![2]],
            vec![int(1), int(1), int(2)],
        );
        assert_eq!(least_spender(&tied), 0);
    }

    #[test]
    fn hierarchy_stops_at_root_goods() {
        let rounded = rounded_ones(1, 2);
        let solo = outcome(&rounded, vec![vec![0, 1]], vec![int(1), int(1)]);
        let hier = build_hierarchy(0, &solo);
        assert_eq!(hier.levels, vec![vec![0]]);
        assert!(reconstruct_path(0, &hier) == Err(MarketError::PathToRoot(0)));
    }

    #[test]
    fn hierarchy_one_step_reachability() {
        let rounded = rounded_ones(2, 1);
        let out = outcome(&rounded, vec![vec![], vec![0]], vec![int(1)]);
        let hier = build_hierarchy(0, &out);
        assert_eq!(hier.levels, vec![vec![0], vec![1]]);
        assert_eq!(hier.back_pointer(1), Some((0, 0)));
        let path = reconstruct_path(1, &hier).unwrap();
        assert_eq!(path.agents, vec![0, 1]);
        assert_eq!(path.goods, vec![0]);
        assert_eq!(path.len(), 2);
        assert!(path.check_invariants(&out, &hier).is_ok());
    }

    #[test]
    fn two_hop_path_reconstruction() {
        // Agent 0 only values good 0 (owned by 1); agent 1 also values good 1
        // (owned by 2): levels 0 -> 1 -> 2.
        let inst = Instance::new(vec![vec![1, 0], vec![1, 1], vec![0, 1]]);
        let rounded = round_instance(&inst, &quarter());
        let out = outcome(&rounded, vec![vec![], vec![0], vec![1]], vec![int(1), int(1)]);
        let hier = build_hierarchy(0, &out);
        assert_eq!(hier.levels, vec![vec![0], vec![1], vec![2]]);
        let path = reconstruct_path(2, &hier).unwrap();
        assert_eq!(path.agents, vec![0, 1, 2]);
        assert_eq!(path.goods, vec![0, 1]);
        assert_eq!(path.len(), 4);
        assert!(path.check_invariants(&out, &hier).is_ok());
        assert!(reconstruct_path(0, &hier).is_err());
    }

    #[test]
    fn pef1_examples() {
        let rounded = rounded_ones(2, 3);
        let equal = outcome(&rounded, vec![vec![0], vec![1]], vec![int(1), int(1), int(1)]);
        let (ok, viol) = is_eps_pef1(&equal, &int(0));
        assert!(ok && viol.is_empty());

        let solo_rounded = rounded_ones(1, 1);
        let solo = outcome(&solo_rounded, vec![vec![0]], vec![int(1)]);
        assert!(is_eps_pef1(&solo, &int(0)).0);

        // Agent 1 spends 4 across two goods priced 2 each; removing either
        // leaves 2 > 1.
        let skewed = outcome(&rounded, vec![vec![0], vec![1, 2]], vec![int(1), int(2), int(2)]);
        let (ok, viol) = is_eps_pef1(&skewed, &int(0));
        assert!(!ok);
        assert_eq!(viol, [1].into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn pef1_empty_bundles_never_violate() {
        let rounded = rounded_ones(2, 1);
        let out = outcome(&rounded, vec![vec![], vec![0]], vec![int(1)]);
        let (ok, viol) = is_eps_pef1(&out, &int(0));
        assert!(ok && viol.is_empty());
    }

    #[test]
    fn path_violator_needs_strict_inequality() {
        // Root spends 4/5; the path good's removal leaves agent 1 with
        // exactly (1+1/4)*(4/5) = 1: boundary, no hit.
        let rounded = rounded_ones(2, 3);
        let out = outcome(
            &rounded,
            vec![vec![0], vec![1, 2]],
            vec![ratio(4, 5), ratio(4, 5), int(1)],
        );
        let hier = build_hierarchy(0, &out);
        assert_eq!(hier.levels.len(), 2);
        assert_eq!(hier.back_pointer(1), Some((0, 1)));
        assert!(find_eps_path_violator(&hier, 1, &out, &quarter()).is_none());
    }

    #[test]
    fn path_violator_found_on_skewed_outcome() {
        // Goods 1 and 2 are agent 0's bang-per-buck goods; removing the path
        // good still leaves agent 1 above (1+1/4) times the root's spending.
        let inst = Instance::new(vec![vec![1, 4, 4], vec![1, 1, 1]]);
        let rounded = round_instance(&inst, &quarter());
        let out = outcome(
            &rounded,
            vec![vec![0], vec![1, 2]],
            vec![int(1), int(2), int(2)],
        );
        let hier = build_hierarchy(0, &out);
        let (agent, path) = find_eps_path_violator(&hier, 1, &out, &quarter()).unwrap();
        assert_eq!(agent, 1);
        assert_eq!(path.agents, vec![0, 1]);
        assert_eq!(path.goods, vec![1]);
    }

    #[test]
    fn path_violator_empty_level_is_none() {
        let rounded = rounded_ones(1, 1);
        let out = outcome(&rounded, vec![vec![0]], vec![int(1)]);
        let hier = build_hierarchy(0, &out);
        assert!(find_eps_path_violator(&hier, 1, &out, &quarter()).is_none());
    }
}
