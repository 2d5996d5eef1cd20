//! Maximum bipartite matching between agents and positively valued goods.
//!
//! Used as a preprocessing step: an instance satisfies Hall's condition
//! exactly when every agent is matched, and unmatched agents can safely be
//! excluded (they receive empty bundles) before running the market solver.

use crate::instance::Instance;

/// Result of the matching preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallDecomposition {
    /// Agents covered by a maximum matching, ascending.
    pub matched_agents: Vec<usize>,
    /// `matching[i]` is the good matched to agent `i`, if any.
    pub matching: Vec<Option<usize>>,
}

impl HallDecomposition {
    /// Hall's condition holds iff every agent got matched.
    pub fn hall_holds(&self, n: usize) -> bool {
        self.matched_agents.len() == n
    }
}

/// Computes a maximum matching on the bipartite graph with an edge `(i,j)`
/// whenever `v_{i,j} > 0`, by augmenting paths in lexicographic scan order
/// (agents ascending, each trying goods ascending).
pub fn hall_decomposition(inst: &Instance) -> HallDecomposition {
    let n = inst.agents();
    let m = inst.goods();
    let mut good_owner: Vec<Option<usize>> = vec![None; m];

    fn try_augment(
        inst: &Instance,
        agent: usize,
        visited: &mut [bool],
        good_owner: &mut [Option<usize>],
    ) -> bool {
        for good in 0..inst.goods() {
            if inst.value(agent, good) > 0 && !visited[good] {
                visited[good] = true;
                let free = match good_owner[good] {
                    None => true,
                    Some(other) => try_augment(inst, other, visited, good_owner),
                };
                if free {
                    good_owner[good] = Some(agent);
                    return true;
                }
            }
        }
        false
    }

    for agent in 0..n {
        let mut visited = vec![false; m];
        try_augment(inst, agent, &mut visited, &mut good_owner);
    }

    let mut matching = vec![None; n];
    for (good, owner) in good_owner.iter().enumerate() {
        if let Some(agent) = owner {
            matching[*agent] = Some(good);
        }
    }
    let matched_agents = (0..n).filter(|&i| matching[i].is_some()).collect();
    HallDecomposition {
        matched_agents,
        matching,
    }
}
