//! The fair-division data model: instances, allocations, validation and the
//! byte-stable JSON interchange format.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A fair division problem: `n` agents, `m` goods, and an integral valuation
/// matrix (row `i` holds agent `i`'s value for each good).
///
/// Valuations are stored as signed integers so that files with negative
/// entries can be loaded and then rejected by [`validate_instance`] with a
/// precise report instead of a parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: Option<String>,
    pub valuations: Vec<Vec<i64>>,
}

impl Instance {
    pub fn new(valuations: Vec<Vec<i64>>) -> Self {
        Instance {
            name: None,
            valuations,
        }
    }

    pub fn with_name(name: impl Into<String>, valuations: Vec<Vec<i64>>) -> Self {
        Instance {
            name: Some(name.into()),
            valuations,
        }
    }

    /// Agent count.
    pub fn agents(&self) -> usize {
        self.valuations.len()
    }

    /// Good count.
    pub fn goods(&self) -> usize {
        self.valuations.first().map_or(0, Vec::len)
    }

    pub fn value(&self, agent: usize, good: usize) -> i64 {
        self.valuations[agent][good]
    }

    /// Agent `agent`'s total value for a bundle of goods.
    pub fn bundle_value(&self, agent: usize, bundle: &BTreeSet<usize>) -> i64 {
        bundle.iter().map(|&j| self.valuations[agent][j]).sum()
    }

    /// Largest valuation entry.
    pub fn v_max(&self) -> i64 {
        self.valuations
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// The sub-instance induced by the given agents (goods are kept as is).
    /// Row order follows `keep`.
    pub fn restrict_agents(&self, keep: &[usize]) -> Instance {
        Instance {
            name: self.name.clone(),
            valuations: keep.iter().map(|&i| self.valuations[i].clone()).collect(),
        }
    }
}

/// A single problem with an instance invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyAgents,
    EmptyGoods,
    RaggedRow { agent: usize, width: usize },
    NegativeValue { agent: usize, good: usize },
    UnvaluedGood { good: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 1-based indices in human-facing output
        match self {
            Violation::EmptyAgents => write!(f, "instance has no agents"),
            Violation::EmptyGoods => write!(f, "instance has no goods"),
            Violation::RaggedRow { agent, width } => {
                write!(f, "agent {} row has {} entries", agent + 1, width)
            }
            Violation::NegativeValue { agent, good } => {
                write!(f, "negative valuation at ({},{})", agent + 1, good + 1)
            }
            Violation::UnvaluedGood { good } => {
                write!(f, "good {} valued by no agent", good + 1)
            }
        }
    }
}

/// Outcome of [`validate_instance`]. Errors are data, not panics.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every instance invariant: non-empty dimensions, rectangular
/// non-negative matrix, and each good positively valued by at least one
/// agent. Agents that value nothing are fine (they are handled by the
/// matching preprocessing); goods that nobody values are not.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    if inst.valuations.is_empty() {
        report.violations.push(Violation::EmptyAgents);
        return report;
    }
    let m = inst.valuations[0].len();
    if m == 0 {
        report.violations.push(Violation::EmptyGoods);
    }
    for (i, row) in inst.valuations.iter().enumerate() {
        if row.len() != m {
            report.violations.push(Violation::RaggedRow {
                agent: i,
                width: row.len(),
            });
        }
    }
    if !report.is_ok() {
        return report;
    }
    for (i, row) in inst.valuations.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0 {
                report
                    .violations
                    .push(Violation::NegativeValue { agent: i, good: j });
            }
        }
    }
    for j in 0..m {
        if inst.valuations.iter().all(|row| row[j] <= 0) {
            report.violations.push(Violation::UnvaluedGood { good: j });
        }
    }
    report
}

/// Bundles of goods, one per agent. Goods are 0-based indices internally;
/// all file formats use 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub bundles: Vec<BTreeSet<usize>>,
}

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_bundles(bundles: Vec<Vec<usize>>) -> Self {
        Allocation {
            bundles: bundles
                .into_iter()
                .map(|b| b.into_iter().collect())
                .collect(),
        }
    }

    pub fn agents(&self) -> usize {
        self.bundles.len()
    }

    /// Owner of each good, or `None` for unallocated goods.
    pub fn owner_map(&self, m: usize) -> Vec<Option<usize>> {
        let mut owners = vec![None; m];
        for (i, bundle) in self.bundles.iter().enumerate() {
            for &j in bundle {
                owners[j] = Some(i);
            }
        }
        owners
    }

    /// Bundles must be pairwise disjoint and reference goods below `m`;
    /// partial allocations (unassigned goods) are allowed for checker input.
    pub fn check_shape(&self, n: usize, m: usize) -> Result<(), String> {
        if self.bundles.len() != n {
            return Err(format!(
                "allocation has {} bundles for {} agents",
                self.bundles.len(),
                n
            ));
        }
        let mut seen = vec![false; m];
        for (i, bundle) in self.bundles.iter().enumerate() {
            for &j in bundle {
                if j >= m {
                    return Err(format!("agent {} holds unknown good {}", i + 1, j + 1));
                }
                if seen[j] {
                    return Err(format!("good {} allocated more than once", j + 1));
                }
                seen[j] = true;
            }
        }
        Ok(())
    }

    /// Whether every good in `0..m` is assigned to someone.
    pub fn is_complete(&self, m: usize) -> bool {
        let assigned: usize = self.bundles.iter().map(BTreeSet::len).sum();
        assigned == m && self.check_shape(self.bundles.len(), m).is_ok()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    agents: usize,
    goods: usize,
    valuations: Vec<Vec<i64>>,
}

/// Parses the documented JSON instance format. The declared dimensions must
/// match the matrix shape.
pub fn parse_instance(text: &str) -> Result<Instance, String> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|err| format!("invalid instance json: {err}"))?;
    if file.valuations.len() != file.agents {
        return Err(format!(
            "declared {} agents but matrix has {} rows",
            file.agents,
            file.valuations.len()
        ));
    }
    for (i, row) in file.valuations.iter().enumerate() {
        if row.len() != file.goods {
            return Err(format!(
                "declared {} goods but agent {} row has {} columns",
                file.goods,
                i + 1,
                row.len()
            ));
        }
    }
    Ok(Instance {
        name: file.name,
        valuations: file.valuations,
    })
}

/// Serializes to the documented JSON format: fixed key order, compact
/// arrays, trailing newline. Byte-stable for byte-stable inputs.
pub fn serialize_instance(inst: &Instance) -> String {
    let file = InstanceFile {
        name: inst.name.clone(),
        agents: inst.agents(),
        goods: inst.goods(),
        valuations: inst.valuations.clone(),
    };
    let mut text = serde_json::to_string(&file).expect("instance serialization cannot fail");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_well_formed() {
        let inst = Instance::new(vec![vec![2, 1], vec![1, 2]]);
        assert!(validate_instance(&inst).is_ok());
    }

    #[test]
    fn validate_flags_unvalued_good() {
        let inst = Instance::new(vec![vec![1, 0], vec![1, 0]]);
        let report = validate_instance(&inst);
        assert_eq!(report.violations, vec![Violation::UnvaluedGood { good: 1 }]);
        assert_eq!(
            report.violations[0].to_string(),
            "good 2 valued by no agent"
        );
    }

    #[test]
    fn validate_flags_negative_entry() {
        let inst = Instance::new(vec![vec![-1, 2], vec![1, 1]]);
        let report = validate_instance(&inst);
        assert_eq!(
            report.violations,
            vec![Violation::NegativeValue { agent: 0, good: 0 }]
        );
        assert_eq!(
            report.violations[0].to_string(),
            "negative valuation at (1,1)"
        );
    }

    #[test]
    fn validate_accepts_agent_valuing_nothing() {
        let inst = Instance::new(vec![vec![1, 1], vec![0, 0]]);
        assert!(validate_instance(&inst).is_ok());
    }

    #[test]
    fn parse_rejects_dimension_mismatch() {
        let text = r#"{"agents":1,"goods":2,"valuations":[[1,2,3]]}"#;
        assert!(parse_instance(text).is_err());
    }

    #[test]
    fn parse_rejects_fractional_values() {
        let text = r#"{"agents":1,"goods":1,"valuations":[[1.5]]}"#;
        assert!(parse_instance(text).is_err());
    }

    #[test]
    fn serialize_parse_round_trip() {
        let inst = Instance::with_name("demo", vec![vec![1, 0, 2], vec![0, 3, 1]]);
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert_eq!(
            text,
            "{\"name\":\"demo\",\"agents\":2,\"goods\":3,\"valuations\":[[1,0,2],[0,3,1]]}\n"
        );
    }

    #[test]
    fn allocation_shape_checks() {
        let alloc = Allocation::from_bundles(vec![vec![0, 2], vec![1]]);
        assert!(alloc.check_shape(2, 3).is_ok());
        assert!(alloc.is_complete(3));
        let overlapping = Allocation::from_bundles(vec![vec![0], vec![0]]);
        assert!(overlapping.check_shape(2, 3).is_err());
        let partial = Allocation::from_bundles(vec![vec![0], vec![]]);
        assert!(partial.check_shape(2, 3).is_ok());
        assert!(!partial.is_complete(3));
    }
}
