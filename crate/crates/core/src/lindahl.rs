//! Lindahl-style extension: the institutional state as a public good with
//! personalized prices.
//!
//! A Lindahl block embeds each state at a scalar position on a public
//! dimension, prices that dimension at `p_s`, and splits the price into
//! personalized shares, one per welfare-bearing entity, that must sum to
//! `p_s`. An entity's extended budget then ranges over (bundle, state)
//! pairs: the bundle at market prices plus the entity's share of the
//! state's position must stay within the wealth of the candidate pair.
//!
//! With every share zero and a single state the extension collapses: the
//! extended budget equals the plain budget and the verifier reproduces the
//! plain four-clause report exactly. With several states the extension has
//! real content, visible through the cross-state improvement scan, which
//! asks whether moving the institutional state itself, alongside a
//! feasible reallocation, could dominate the candidate.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::economy::{Bundle, Economy, EntityId, StateId};
use crate::equilibrium::{
    check_accountability, check_market, check_tools, pinned_bundles, Candidate,
    CheaperEquivalent, EquilibriumReport, OptimalityClause, OptimalityFailure,
};
use crate::feasibility::{for_each_feasible, is_feasible, Allocation};
use crate::{Error, Result, TOL};

/// Personalized state prices and state embeddings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LindahlBlock {
    /// Price of the public state dimension.
    pub p_s: f64,
    /// Personalized share per welfare-bearing entity; must sum to `p_s`.
    pub lambdas: BTreeMap<EntityId, f64>,
    /// Scalar position of each state on the public dimension.
    pub embeddings: BTreeMap<StateId, f64>,
}

impl LindahlBlock {
    /// The degenerate block: everything zero. Useful as the bridge back to
    /// the plain verifier.
    pub fn zero(e: &Economy) -> Self {
        LindahlBlock {
            p_s: 0.0,
            lambdas: e
                .welfare_bearing()
                .into_iter()
                .map(|id| (id, 0.0))
                .collect(),
            embeddings: e.states.iter().map(|s| (s.id.clone(), 0.0)).collect(),
        }
    }
}

/// Structural checks: shares cover exactly the bearing entities,
/// embeddings cover exactly the states, and the shares sum to `p_s`.
pub fn check_block(e: &Economy, block: &LindahlBlock) -> Result<()> {
    let bearing = e.welfare_bearing();
    if block.lambdas.len() != bearing.len()
        || !bearing.iter().all(|id| block.lambdas.contains_key(id))
    {
        return Err(Error::Arity {
            context: "personalized state prices".into(),
            expected: bearing.len(),
            found: block.lambdas.len(),
        });
    }
    if block.embeddings.len() != e.states.len()
        || !e.states.iter().all(|s| block.embeddings.contains_key(&s.id))
    {
        return Err(Error::Arity {
            context: "state embeddings".into(),
            expected: e.states.len(),
            found: block.embeddings.len(),
        });
    }
    let sum: f64 = block.lambdas.values().sum();
    if (sum - block.p_s).abs() > TOL {
        return Err(Error::LindahlSum {
            coord: 0,
            sum,
            expected: block.p_s,
        });
    }
    Ok(())
}

/// A (bundle, state) pair an entity can afford that beats its candidate
/// pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossPairFailure {
    pub entity: EntityId,
    pub bundle: Bundle,
    pub state: StateId,
    pub cost: f64,
    pub wealth: f64,
    pub value: f64,
    pub base_value: f64,
}

/// Verdict of the Lindahl verifier: the four clauses with optimality read
/// over the extended budget, plus the full cross-pair detail behind any
/// optimality failures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LindahlReport {
    pub equilibrium: EquilibriumReport,
    pub cross_failures: Vec<CrossPairFailure>,
}

impl LindahlReport {
    pub fn holds(&self) -> bool {
        self.equilibrium.holds()
    }
}

/// Verify the candidate against the extended budgets induced by the block.
///
/// Market, tool, and accountability clauses are the plain ones; only
/// optimality changes, ranging over (bundle, state) pairs priced by market
/// prices plus personalized state shares. With a zero block and a single
/// state the result coincides exactly with the plain verifier's report.
pub fn verify_lindahl(
    e: &Economy,
    cand: &Candidate,
    block: &LindahlBlock,
) -> Result<LindahlReport> {
    if e.state(&cand.state).is_none() {
        return Err(Error::UnknownState(cand.state.clone()));
    }
    if cand.prices.len() != e.dim() {
        return Err(Error::Arity {
            context: "price vector".into(),
            expected: e.dim(),
            found: cand.prices.len(),
        });
    }
    check_block(e, block)?;
    let market = check_market(e, cand)?;
    let tools = check_tools(e, cand);
    let accountability = check_accountability(e, &cand.prices, cand)?;

    let bearing = e.welfare_bearing();
    let base_emb = block.embeddings[&cand.state];
    let mut failures = Vec::new();
    let mut cheaper = Vec::new();
    let mut cross_failures = Vec::new();
    for (i, ent) in e.entities.iter().enumerate() {
        if !bearing.contains(&ent.id) {
            continue;
        }
        let at = &cand.allocation.0[i];
        if !e.grids[i].contains(at) {
            return Err(Error::OffGrid {
                entity: ent.id.clone(),
                bundle: at.clone(),
            });
        }
        let base_value = e.eval_welfare(&ent.id, at, &cand.state)?;
        let lambda = block.lambdas[&ent.id];
        let wealth = at.dot(&cand.prices) + lambda * base_emb;
        // Mirror the plain optimality pass with (bundle, state) pairs in
        // place of bundles: bundles in canonical order, states in declared
        // order inside each bundle, both halves of the clause.
        let mut best: Option<(Bundle, StateId, f64, f64)> = None;
        let mut cheapest: Option<CheaperEquivalent> = None;
        for b in pinned_bundles(e, i, at) {
            for s in &e.states {
                let cost = b.dot(&cand.prices) + lambda * block.embeddings[&s.id];
                let value = e.eval_welfare(&ent.id, &b, &s.id)?;
                if cost <= wealth + TOL {
                    match &best {
                        Some((_, _, bv, _)) if value <= bv + TOL => {}
                        _ => best = Some((b.clone(), s.id.clone(), value, cost)),
                    }
                }
                if cheapest.is_none() && value >= base_value - TOL && cost < wealth - TOL {
                    cheapest = Some(CheaperEquivalent {
                        entity: ent.id.clone(),
                        bundle: b.clone(),
                        cost,
                        wealth,
                    });
                }
            }
        }
        if let Some((bundle, state, value, cost)) = best {
            if value > base_value + TOL {
                failures.push(OptimalityFailure {
                    entity: ent.id.clone(),
                    current_value: base_value,
                    best: bundle.clone(),
                    best_value: value,
                });
                cross_failures.push(CrossPairFailure {
                    entity: ent.id.clone(),
                    bundle,
                    state,
                    cost,
                    wealth,
                    value,
                    base_value,
                });
            }
        }
        if let Some(c) = cheapest {
            cheaper.push(c);
        }
    }
    let holds = failures.is_empty() && cheaper.is_empty();
    let optimality = OptimalityClause {
        failures,
        cheaper,
        holds,
    };
    Ok(LindahlReport {
        equilibrium: EquilibriumReport {
            market,
            optimality,
            tools,
            accountability,
        },
        cross_failures,
    })
}

/// A state change plus reallocation that dominates the candidate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossStateImprover {
    pub state: StateId,
    pub allocation: Allocation,
    pub gains: BTreeMap<EntityId, f64>,
    pub strict: Vec<EntityId>,
}

/// Scan every institutional state and every feasible allocation for
/// welfare dominance over the candidate at its base state. States are
/// scanned in declared order, allocations lexicographically; the first
/// witness is returned. The base state itself participates, so the scan
/// subsumes the fixed-state welfare-only search.
pub fn cross_state_improver(
    e: &Economy,
    candidate: &Allocation,
    base_state: &StateId,
    cap: u64,
) -> Result<Option<CrossStateImprover>> {
    if e.state(base_state).is_none() {
        return Err(Error::UnknownState(base_state.clone()));
    }
    if !is_feasible(e, candidate)? {
        return Err(Error::Infeasible(
            "candidate allocation is not feasible".into(),
        ));
    }
    let bearing = e.welfare_bearing();
    let mut base = Vec::with_capacity(e.entities.len());
    for (i, ent) in e.entities.iter().enumerate() {
        if bearing.contains(&ent.id) {
            base.push(Some(e.eval_welfare(&ent.id, &candidate.0[i], base_state)?));
        } else {
            base.push(None);
        }
    }
    for s in &e.states {
        let mut found: Option<CrossStateImprover> = None;
        let mut scan_error: Option<Error> = None;
        for_each_feasible(e, cap, |bundles| {
            let mut gains = BTreeMap::new();
            let mut strict = Vec::new();
            for (i, ent) in e.entities.iter().enumerate() {
                let Some(cur) = base[i] else { continue };
                let v = match e.eval_welfare(&ent.id, &bundles[i], &s.id) {
                    Ok(v) => v,
                    Err(err) => {
                        scan_error = Some(err);
                        return ControlFlow::Break(());
                    }
                };
                if v < cur - TOL {
                    return ControlFlow::Continue(());
                }
                if v > cur + TOL {
                    strict.push(ent.id.clone());
                }
                gains.insert(ent.id.clone(), v - cur);
            }
            if strict.is_empty() {
                return ControlFlow::Continue(());
            }
            found = Some(CrossStateImprover {
                state: s.id.clone(),
                allocation: Allocation(bundles.to_vec()),
                gains,
                strict,
            });
            ControlFlow::Break(())
        })?;
        if let Some(err) = scan_error {
            return Err(err);
        }
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{
        Economy, Entity, FeasibilitySpec, Grid, InstitutionalState, Status, StatusAssignment,
    };
    use crate::equilibrium::verify_equilibrium;
    use crate::pareto::{find_improver, ImproverPolicy};
    use crate::welfare::WelfareFunction;

    fn pair_economy(states: &[&str], h2_offset_state: Option<(&str, f64)>) -> Economy {
        let entities = vec![Entity::human("h1"), Entity::human("h2")];
        let sigma =
            StatusAssignment::from_pairs([("h1", Status::Agent), ("h2", Status::Agent)]);
        let mut w2 = WelfareFunction::linear(vec![1.0, 1.0]);
        if let Some((s, delta)) = h2_offset_state {
            w2 = w2.with_offset(s, delta);
        }
        let welfare: BTreeMap<EntityId, WelfareFunction> = [
            (EntityId::new("h1"), WelfareFunction::linear(vec![1.0, 1.0])),
            (EntityId::new("h2"), w2),
        ]
        .into_iter()
        .collect();
        Economy {
            lx: 2,
            lr: 0,
            entities,
            sigma,
            grids: vec![Grid::cube(2, 5), Grid::cube(2, 5)],
            rights_class: vec![vec![], vec![]],
            states: states.iter().map(|s| InstitutionalState::bare(*s)).collect(),
            welfare,
            delegates: vec![],
            channels: vec![],
            feasibility: FeasibilitySpec::exchange(vec![4.0, 4.0]),
            attributes: vec![],
        }
    }

    fn equal_split(state: &str) -> Candidate {
        Candidate {
            prices: vec![1.0, 1.0],
            allocation: Allocation(vec![
                Bundle::new(vec![2.0, 2.0]),
                Bundle::new(vec![2.0, 2.0]),
            ]),
            state: StateId::new(state),
        }
    }

    #[test]
    fn zero_block_single_state_matches_plain_verifier() {
        let e = pair_economy(&["s0"], None);
        let cand = equal_split("s0");
        let plain = verify_equilibrium(&e, &cand).unwrap();
        let lindahl = verify_lindahl(&e, &cand, &LindahlBlock::zero(&e)).unwrap();
        assert_eq!(lindahl.equilibrium, plain);
        assert!(lindahl.cross_failures.is_empty());
    }

    #[test]
    fn zero_block_matches_plain_even_when_failing() {
        let mut e = pair_economy(&["s0"], None);
        e.welfare
            .insert(EntityId::new("h2"), WelfareFunction::linear(vec![2.0, 1.0]));
        let cand = equal_split("s0");
        let plain = verify_equilibrium(&e, &cand).unwrap();
        let lindahl = verify_lindahl(&e, &cand, &LindahlBlock::zero(&e)).unwrap();
        assert!(!plain.holds());
        assert_eq!(lindahl.equilibrium, plain);
    }

    #[test]
    fn share_sum_must_match_state_price() {
        let e = pair_economy(&["s0"], None);
        let mut block = LindahlBlock::zero(&e);
        block.lambdas.insert(EntityId::new("h1"), 1.0);
        let err = verify_lindahl(&e, &equal_split("s0"), &block).unwrap_err();
        assert!(matches!(
            err,
            Error::LindahlSum {
                coord: 0,
                ..
            }
        ));
    }

    #[test]
    fn shares_must_cover_bearing_entities() {
        let e = pair_economy(&["s0"], None);
        let mut block = LindahlBlock::zero(&e);
        block.lambdas.remove(&EntityId::new("h2"));
        let err = verify_lindahl(&e, &equal_split("s0"), &block).unwrap_err();
        assert!(matches!(err, Error::Arity { .. }));
    }

    #[test]
    fn free_state_move_shows_up_as_extended_failure() {
        let e = pair_economy(&["s1", "s2"], Some(("s2", 1.0)));
        let cand = equal_split("s1");
        let report = verify_lindahl(&e, &cand, &LindahlBlock::zero(&e)).unwrap();
        assert!(!report.holds());
        assert_eq!(report.cross_failures.len(), 1);
        let f = &report.cross_failures[0];
        assert_eq!(f.entity, EntityId::new("h2"));
        assert_eq!(f.state, StateId::new("s2"));
        assert!((f.value - f.base_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn personalized_price_can_close_the_state_move() {
        let e = pair_economy(&["s1", "s2"], Some(("s2", 1.0)));
        let cand = equal_split("s1");
        let block = LindahlBlock {
            p_s: 2.0,
            lambdas: [(EntityId::new("h1"), 0.0), (EntityId::new("h2"), 2.0)]
                .into_iter()
                .collect(),
            embeddings: [(StateId::new("s1"), 0.0), (StateId::new("s2"), 1.0)]
                .into_iter()
                .collect(),
        };
        let report = verify_lindahl(&e, &cand, &block).unwrap();
        assert!(report.holds(), "{:?}", report.equilibrium.failure_lines());
    }

    #[test]
    fn cross_state_improver_appears_only_in_the_extended_scan() {
        let e = pair_economy(&["s1", "s2"], Some(("s2", 1.0)));
        let cand = equal_split("s1");
        let plain = find_improver(
            &e,
            &cand.allocation,
            &StateId::new("s1"),
            ImproverPolicy::Faithful,
            100_000,
        )
        .unwrap();
        assert_eq!(plain, None);
        let cross = cross_state_improver(&e, &cand.allocation, &StateId::new("s1"), 100_000)
            .unwrap()
            .expect("state move should dominate");
        assert_eq!(cross.state, StateId::new("s2"));
        assert_eq!(cross.strict, vec![EntityId::new("h2")]);
    }
}
