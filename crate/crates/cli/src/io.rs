//! File formats: solution JSON, trace JSONL, allocation and prices files.
//!
//! All human-facing indices are 1-based; serialization uses fixed key order
//! and compact arrays so identical inputs give byte-identical outputs.

use fairdiv_core::{
    Allocation, Epsilon, Event, EventKind, PoBruteForce, PriceVector, Rational, RationalRepr,
    Solution, TerminateReason, Trace,
};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Serialize, Deserialize)]
struct EpsilonRepr {
    num: u64,
    den: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CertificatesRepr {
    ef1_exact: bool,
    eps_ef1_rounded: RationalRepr,
    fpo_certificate_rounded: bool,
    po_brute_force: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct NswRepr {
    product: String,
    approx: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionRepr {
    epsilon: EpsilonRepr,
    matched_agents: Vec<usize>,
    allocation: Vec<Vec<usize>>,
    prices: Vec<RationalRepr>,
    certificates: CertificatesRepr,
    nsw: NswRepr,
    events: usize,
}

fn epsilon_repr(eps: &Epsilon) -> Result<EpsilonRepr, String> {
    let to_u64 = |v: &BigInt| {
        v.to_u64()
            .ok_or_else(|| format!("epsilon component {v} does not fit the solution format"))
    };
    Ok(EpsilonRepr {
        num: to_u64(eps.value().numer())?,
        den: to_u64(eps.value().denom())?,
    })
}

fn po_to_str(po: PoBruteForce) -> &'static str {
    match po {
        PoBruteForce::Confirmed => "confirmed",
        PoBruteForce::SkippedBudget => "skipped-budget",
        PoBruteForce::Refuted => "refuted",
    }
}

/// Solution JSON with the documented key order, compact separators and a
/// trailing newline.
pub fn serialize_solution(solution: &Solution) -> Result<String, String> {
    let repr = SolutionRepr {
        epsilon: epsilon_repr(&solution.epsilon_used)?,
        matched_agents: solution.matched_agents.iter().map(|a| a + 1).collect(),
        allocation: solution
            .allocation
            .bundles
            .iter()
            .map(|bundle| bundle.iter().map(|g| g + 1).collect())
            .collect(),
        prices: solution
            .prices
            .prices
            .iter()
            .map(RationalRepr::of)
            .collect(),
        certificates: CertificatesRepr {
            ef1_exact: solution.certificates.ef1_exact,
            eps_ef1_rounded: RationalRepr::of(&solution.certificates.eps_ef1_rounded),
            fpo_certificate_rounded: solution.certificates.fpo_certificate_rounded,
            po_brute_force: po_to_str(solution.certificates.po_brute_force).to_string(),
        },
        nsw: NswRepr {
            product: solution.nsw.product.to_string(),
            approx: solution.nsw.approx_root(),
        },
        events: solution.event_count,
    };
    let mut text = serde_json::to_string(&repr).map_err(|e| e.to_string())?;
    text.push('\n');
    Ok(text)
}

fn rational_json(value: &Rational) -> Value {
    let repr = RationalRepr::of(value);
    serde_json::json!({"num": repr.num, "den": repr.den})
}

fn event_json(event: &Event) -> Value {
    let spending = rational_json(&event.least_spender_spending_after);
    match &event.kind {
        EventKind::Swap {
            from,
            to,
            good,
            level,
        } => serde_json::json!({
            "event": "swap",
            "from": from + 1,
            "to": to + 1,
            "good": good + 1,
            "level": level,
            "least_spender_spending_after": spending,
        }),
        EventKind::IdentityChange { old, new } => serde_json::json!({
            "event": "identity_change",
            "old": old + 1,
            "new": new + 1,
            "least_spender_spending_after": spending,
        }),
        EventKind::PriceRise {
            alpha,
            rule,
            affected_goods,
        } => serde_json::json!({
            "event": "price_rise",
            "alpha": rational_json(alpha),
            "rule": match rule {
                fairdiv_core::AlphaRule::Alpha1 => "alpha1",
                fairdiv_core::AlphaRule::Alpha2 => "alpha2",
                fairdiv_core::AlphaRule::Alpha3 => "alpha3",
            },
            "affected_goods": affected_goods.iter().map(|g| g + 1).collect::<Vec<_>>(),
            "least_spender_spending_after": spending,
        }),
        EventKind::Terminate { reason } => serde_json::json!({
            "event": "terminate",
            "reason": match reason {
                TerminateReason::Pef1AtInit => "pef1-at-init",
                TerminateReason::Pef1AfterSwaps => "pef1-after-swaps",
                TerminateReason::Pef1PriceRise => "pef1-price-rise",
            },
            "least_spender_spending_after": spending,
        }),
    }
}

/// One JSON object per line, one line per event.
pub fn serialize_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for event in &trace.events {
        out.push_str(&event_json(event).to_string());
        out.push('\n');
    }
    out
}

/// Reads an allocation file: either a bare JSON array of 1-based good-index
/// arrays, or any object with an `allocation` field of that shape (so a
/// solution file works directly).
pub fn parse_allocation(text: &str, agents: usize, goods: usize) -> Result<Allocation, String> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("invalid allocation json: {e}"))?;
    let rows = match &value {
        Value::Array(_) => &value,
        Value::Object(map) => map
            .get("allocation")
            .ok_or_else(|| "object has no \"allocation\" field".to_string())?,
        _ => return Err("allocation must be an array of arrays".into()),
    };
    let raw: Vec<Vec<u64>> =
        serde_json::from_value(rows.clone()).map_err(|e| format!("invalid allocation: {e}"))?;
    if raw.len() != agents {
        return Err(format!(
            "allocation has {} bundles for {} agents",
            raw.len(),
            agents
        ));
    }
    let mut bundles = Vec::with_capacity(raw.len());
    for row in raw {
        let mut bundle = Vec::with_capacity(row.len());
        for good in row {
            if good == 0 || good as usize > goods {
                return Err(format!("good index {good} out of range 1..={goods}"));
            }
            bundle.push(good as usize - 1);
        }
        bundles.push(bundle);
    }
    let alloc = Allocation::from_bundles(bundles);
    alloc.check_shape(agents, goods)?;
    Ok(alloc)
}

/// Reads a price vector: a bare JSON array of `{"num","den"}` objects or an
/// object with a `prices` field (so a solution file works directly).
/// Prices must be non-negative and match the good count.
pub fn parse_prices(text: &str, goods: usize) -> Result<PriceVector, String> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("invalid prices json: {e}"))?;
    let rows = match &value {
        Value::Array(_) => &value,
        Value::Object(map) => map
            .get("prices")
            .ok_or_else(|| "object has no \"prices\" field".to_string())?,
        _ => return Err("prices must be an array".into()),
    };
    let raw: Vec<RationalRepr> =
        serde_json::from_value(rows.clone()).map_err(|e| format!("invalid prices: {e}"))?;
    if raw.len() != goods {
        return Err(format!(
            "price vector has {} entries for {} goods",
            raw.len(),
            goods
        ));
    }
    let mut prices = Vec::with_capacity(raw.len());
    for repr in &raw {
        let price = repr.parse()?;
        if price.is_negative() {
            return Err(format!("negative price {}/{}", repr.num, repr.den));
        }
        prices.push(price);
    }
    Ok(PriceVector::new(prices))
}

/// `1/k` with `k >= 2`; the only epsilon shape the command line accepts.
pub fn parse_epsilon_flag(text: &str) -> Result<Epsilon, String> {
    let (num, den) = text
        .split_once('/')
        .ok_or_else(|| format!("epsilon must look like 1/k, got {text:?}"))?;
    if num != "1" {
        return Err(format!("epsilon numerator must be 1, got {text:?}"));
    }
    let k: i64 = den
        .parse()
        .map_err(|_| format!("invalid epsilon denominator in {text:?}"))?;
    Epsilon::unit_fraction(k)
}

/// Short display form for unit-fraction epsilons, exact form otherwise.
pub fn epsilon_display(eps: &Epsilon) -> String {
    let value = eps.value();
    if value.numer() == &BigInt::from(1) {
        format!("1/{}", value.denom())
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering of an exact product ratio for human output.
pub fn ratio_display(num: &BigInt, den: &BigInt) -> String {
    if den.is_zero() {
        return "undefined".into();
    }
    let num_f = num.to_f64().unwrap_or(f64::INFINITY);
    let den_f = den.to_f64().unwrap_or(f64::INFINITY);
    format!("{:.6}", num_f / den_f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_flag_accepts_unit_fractions_only() {
        assert!(parse_epsilon_flag("1/4").is_ok());
        assert!(parse_epsilon_flag("2/4").is_err());
        assert!(parse_epsilon_flag("1/1").is_err());
        assert!(parse_epsilon_flag("0.25").is_err());
        assert_eq!(epsilon_display(&parse_epsilon_flag("1/8").unwrap()), "1/8");
    }

    #[test]
    fn allocation_files_round_indices() {
        let alloc = parse_allocation("[[1,3],[2]]", 2, 3).unwrap();
        assert!(alloc.bundles[0].contains(&0));
        assert!(alloc.bundles[0].contains(&2));
        assert!(alloc.bundles[1].contains(&1));
        assert!(parse_allocation("[[1],[1]]", 2, 3).is_err());
        assert!(parse_allocation("[[4],[2]]", 2, 3).is_err());
        assert!(parse_allocation("[[1]]", 2, 3).is_err());
    }

    #[test]
    fn prices_files_check_length_and_sign() {
        let text = r#"[{"num":"3","den":"2"},{"num":"1","den":"1"}]"#;
        assert!(parse_prices(text, 2).is_ok());
        assert!(parse_prices(text, 3).is_err());
        let negative = r#"[{"num":"-3","den":"2"}]"#;
        assert!(parse_prices(negative, 1).is_err());
    }
}
