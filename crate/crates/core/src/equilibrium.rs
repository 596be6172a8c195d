//! Verification of candidate equilibria and the quoted-price gap bound.
//!
//! A candidate is a price vector, a feasible allocation, and an
//! institutional state. The verifier checks four clauses:
//!
//! 1. market: the allocation is feasible and its aggregate value attains
//!    the best achievable net-supply value at the prices;
//! 2. optimality: every welfare-bearing entity's bundle maximizes its
//!    welfare over its budget set, and nothing it weakly prefers costs
//!    strictly less than its wealth;
//! 3. tools: every tool sits at its single admissible point;
//! 4. accountability: every delegate's own bundle is fixed at a single
//!    admissible point, every delegate either optimizes exactly its
//!    principal's welfare on the principal's budget set or is internalized
//!    with a declared agency cost, and every protected rights coordinate is
//!    backed by a protection flag in the state.
//!
//! The second half of the optimality clause matters on finite grids: with
//! a continuum of bundles it would follow from the first half plus local
//! nonsatiation, but a grid has no points arbitrarily close to a cheaper
//! equivalent, so exhaustion of the budget has to be checked directly. It
//! is exactly what the efficiency argument consumes: a weakly preferred
//! reallocation can never release value.
//!
//! Budget sets price every consumption coordinate and every priced rights
//! coordinate; all other rights coordinates are held at the candidate's
//! values, since they are not for sale.
//!
//! The gap bound treats the quoted prices as an approximation: if the four
//! clauses hold after perturbing prices by at most epsilon per coordinate,
//! the welfare left on the table by the candidate is bounded by epsilon
//! times the sum over bearing entities of Lipschitz constant times bundle
//! norm. The measured gap comes from an exhaustive scan over dominating
//! allocations, so the inequality is checked, not assumed.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::economy::{Bundle, Economy, EntityId, RightsTag, StateId, Status};
use crate::feasibility::{
    aggregate_support_check, for_each_feasible, is_feasible, Allocation, SupportCheck,
};
use crate::welfare::lipschitz_bound;
use crate::{Error, Result, TOL};

/// A candidate equilibrium: prices, allocation, and the state under
/// analysis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub prices: Vec<f64>,
    pub allocation: Allocation,
    pub state: StateId,
}

/// Grid bundles of one entity with every unpriced rights coordinate held
/// at `at`'s values, in canonical order. The raw material of budget sets
/// and of the expenditure check, which ranges over this pool without an
/// affordability cut.
pub(crate) fn pinned_bundles(e: &Economy, idx: usize, at: &Bundle) -> Vec<Bundle> {
    let pinned: Vec<usize> = e.rights_class[idx]
        .iter()
        .enumerate()
        .filter(|(_, tag)| !matches!(tag, RightsTag::Priced))
        .map(|(r, _)| e.lx + r)
        .collect();
    e.grids[idx]
        .iter()
        .filter(|b| pinned.iter().all(|&k| (b.0[k] - at.0[k]).abs() <= TOL))
        .collect()
}

/// The budget set of one entity at given prices: every grid bundle whose
/// value does not exceed the value of `at`, with all unpriced rights
/// coordinates held at `at`'s values. Returned in canonical order; always
/// contains `at` itself.
pub fn budget_set(
    e: &Economy,
    id: &EntityId,
    prices: &[f64],
    at: &Bundle,
) -> Result<Vec<Bundle>> {
    let dim = e.dim();
    if prices.len() != dim {
        return Err(Error::Arity {
            context: "price vector".into(),
            expected: dim,
            found: prices.len(),
        });
    }
    let idx = e
        .index_of(id)
        .ok_or_else(|| Error::UnknownEntity(id.clone()))?;
    if !e.grids[idx].contains(at) {
        return Err(Error::OffGrid {
            entity: id.clone(),
            bundle: at.clone(),
        });
    }
    let wealth = at.dot(prices);
    Ok(pinned_bundles(e, idx, at)
        .into_iter()
        .filter(|b| b.dot(prices) <= wealth + TOL)
        .collect())
}

/// Market clause outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarketClause {
    pub feasible: bool,
    pub support: Option<SupportCheck>,
    pub holds: bool,
}

/// A bearing entity with a strictly better affordable bundle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalityFailure {
    pub entity: EntityId,
    pub current_value: f64,
    pub best: Bundle,
    pub best_value: f64,
}

/// A bundle an entity likes at least as much as its candidate bundle yet
/// which costs strictly less than its wealth. Such a bundle means the
/// candidate does not exhaust the budget over the weakly-preferred set, so
/// value can be released without any welfare loss; on a finite grid this
/// must be checked directly, as it does not follow from the best-affordable
/// check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheaperEquivalent {
    pub entity: EntityId,
    pub bundle: Bundle,
    pub cost: f64,
    pub wealth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalityClause {
    pub failures: Vec<OptimalityFailure>,
    pub cheaper: Vec<CheaperEquivalent>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolClause {
    pub failures: Vec<EntityId>,
    pub holds: bool,
}

/// A delegate failing the accounting clause.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelegateFailure {
    pub delegate: EntityId,
    pub reason: String,
    /// Bundle on the principal's budget set where objective and welfare
    /// part ways, when that is the reason.
    pub witness: Option<Bundle>,
}

/// A protected rights coordinate with no backing flag in the state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RightsBackingFailure {
    pub entity: EntityId,
    /// Index within the rights block.
    pub coord: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccountabilityClause {
    pub delegate_failures: Vec<DelegateFailure>,
    pub rights_failures: Vec<RightsBackingFailure>,
    pub holds: bool,
}

/// Full verification outcome, clause by clause.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub market: MarketClause,
    pub optimality: OptimalityClause,
    pub tools: ToolClause,
    pub accountability: AccountabilityClause,
}

impl EquilibriumReport {
    pub fn holds(&self) -> bool {
        self.market.holds
            && self.optimality.holds
            && self.tools.holds
            && self.accountability.holds
    }

    /// One line per failing clause, for human-readable reports.
    pub fn failure_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.market.holds {
            if !self.market.feasible {
                out.push("market: allocation is not feasible".into());
            } else if let Some(s) = &self.market.support {
                out.push(format!(
                    "market: aggregate value {} falls short of best net-supply value {}",
                    s.value, s.best
                ));
            }
        }
        for f in &self.optimality.failures {
            out.push(format!(
                "optimality: {} can afford {} worth {} instead of {}",
                f.entity, f.best, f.best_value, f.current_value
            ));
        }
        for c in &self.optimality.cheaper {
            out.push(format!(
                "optimality: {} weakly prefers {} costing {} below its wealth {}",
                c.entity, c.bundle, c.cost, c.wealth
            ));
        }
        for t in &self.tools.failures {
            out.push(format!("tools: {t} is not fixed at its admissible point"));
        }
        for d in &self.accountability.delegate_failures {
            out.push(format!("accountability: delegate {}: {}", d.delegate, d.reason));
        }
        for r in &self.accountability.rights_failures {
            out.push(format!(
                "accountability: protected rights coordinate {} of {} has no backing flag",
                r.coord, r.entity
            ));
        }
        out
    }
}

pub(crate) fn check_market(e: &Economy, cand: &Candidate) -> Result<MarketClause> {
    let feasible = is_feasible(e, &cand.allocation)?;
    if !feasible {
        return Ok(MarketClause {
            feasible,
            support: None,
            holds: false,
        });
    }
    let support = aggregate_support_check(e, &cand.prices, &cand.allocation)?;
    let holds = support.holds;
    Ok(MarketClause {
        feasible,
        support: Some(support),
        holds,
    })
}

pub(crate) fn check_optimality(e: &Economy, prices: &[f64], cand: &Candidate) -> Result<OptimalityClause> {
    let bearing = e.welfare_bearing();
    let mut failures = Vec::new();
    let mut cheaper = Vec::new();
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
        let current_value = e.eval_welfare(&ent.id, at, &cand.state)?;
        let wealth = at.dot(prices);
        let mut best: Option<(Bundle, f64)> = None;
        let mut cheapest: Option<CheaperEquivalent> = None;
        for b in pinned_bundles(e, i, at) {
            let cost = b.dot(prices);
            let value = e.eval_welfare(&ent.id, &b, &cand.state)?;
            if cost <= wealth + TOL {
                match &best {
                    Some((_, bv)) if value <= bv + TOL => {}
                    _ => best = Some((b.clone(), value)),
                }
            }
            if cheapest.is_none() && value >= current_value - TOL && cost < wealth - TOL {
                cheapest = Some(CheaperEquivalent {
                    entity: ent.id.clone(),
                    bundle: b,
                    cost,
                    wealth,
                });
            }
        }
        if let Some((best_bundle, best_value)) = best {
            if best_value > current_value + TOL {
                failures.push(OptimalityFailure {
                    entity: ent.id.clone(),
                    current_value,
                    best: best_bundle,
                    best_value,
                });
            }
        }
        if let Some(c) = cheapest {
            cheaper.push(c);
        }
    }
    let holds = failures.is_empty() && cheaper.is_empty();
    Ok(OptimalityClause {
        failures,
        cheaper,
        holds,
    })
}

pub(crate) fn check_tools(e: &Economy, cand: &Candidate) -> ToolClause {
    let mut failures = Vec::new();
    for (i, ent) in e.entities.iter().enumerate() {
        if e.sigma.get(&ent.id) != Some(Status::Tool) {
            continue;
        }
        let grid = &e.grids[i];
        let fixed = grid.is_singleton()
            && grid.point(0).approx_eq(&cand.allocation.0[i], TOL);
        if !fixed {
            failures.push(ent.id.clone());
        }
    }
    let holds = failures.is_empty();
    ToolClause { failures, holds }
}

pub(crate) fn check_accountability(
    e: &Economy,
    prices: &[f64],
    cand: &Candidate,
) -> Result<AccountabilityClause> {
    let state = e
        .state(&cand.state)
        .ok_or_else(|| Error::UnknownState(cand.state.clone()))?;
    let mut delegate_failures = Vec::new();
    for spec in &e.delegates {
        match e.index_of(&spec.delegate) {
            Some(di) => {
                let grid = &e.grids[di];
                let fixed = grid.is_singleton()
                    && grid.point(0).approx_eq(&cand.allocation.0[di], TOL);
                if !fixed {
                    delegate_failures.push(DelegateFailure {
                        delegate: spec.delegate.clone(),
                        reason: "delegate holds a free bundle of its own; a delegate's bundle must be fixed at a single admissible point".into(),
                        witness: None,
                    });
                    continue;
                }
            }
            None => {
                delegate_failures.push(DelegateFailure {
                    delegate: spec.delegate.clone(),
                    reason: "delegate is not in the economy".into(),
                    witness: None,
                });
                continue;
            }
        }
        if state.internalized_delegates.contains(&spec.delegate) {
            if spec.agency_cost.is_none() {
                delegate_failures.push(DelegateFailure {
                    delegate: spec.delegate.clone(),
                    reason: "internalized but no agency cost is declared".into(),
                    witness: None,
                });
            }
            continue;
        }
        let Some(pi) = e.index_of(&spec.principal) else {
            delegate_failures.push(DelegateFailure {
                delegate: spec.delegate.clone(),
                reason: format!("principal {} is not in the economy", spec.principal),
                witness: None,
            });
            continue;
        };
        let Some(welfare) = e.welfare_of(&spec.principal) else {
            delegate_failures.push(DelegateFailure {
                delegate: spec.delegate.clone(),
                reason: format!("principal {} has no welfare function", spec.principal),
                witness: None,
            });
            continue;
        };
        let budget = budget_set(e, &spec.principal, prices, &cand.allocation.0[pi])?;
        let mut divergence: Option<(Bundle, f64)> = None;
        for b in &budget {
            let u = spec.objective.eval(b, &cand.state).map_err(|err| {
                Error::EvalFailed {
                    entity: spec.delegate.clone(),
                    detail: err.to_string(),
                }
            })?;
            let w = welfare.eval(b, &cand.state).map_err(|err| Error::EvalFailed {
                entity: spec.principal.clone(),
                detail: err.to_string(),
            })?;
            if (u - w).abs() > TOL {
                divergence = Some((b.clone(), u - w));
                break;
            }
        }
        if let Some((witness, delta)) = divergence {
            delegate_failures.push(DelegateFailure {
                delegate: spec.delegate.clone(),
                reason: format!(
                    "objective departs from the principal's welfare by {delta} on the budget set and the delegate is not internalized"
                ),
                witness: Some(witness),
            });
        }
    }
    let mut rights_failures = Vec::new();
    for (i, ent) in e.entities.iter().enumerate() {
        for (r, tag) in e.rights_class[i].iter().enumerate() {
            if matches!(tag, RightsTag::Protected)
                && !state.protected_rights.contains(&(ent.id.clone(), r))
            {
                rights_failures.push(RightsBackingFailure {
                    entity: ent.id.clone(),
                    coord: r,
                });
            }
        }
    }
    let holds = delegate_failures.is_empty() && rights_failures.is_empty();
    Ok(AccountabilityClause {
        delegate_failures,
        rights_failures,
        holds,
    })
}

/// Verify all four clauses of the candidate.
pub fn verify_equilibrium(e: &Economy, cand: &Candidate) -> Result<EquilibriumReport> {
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
    let market = check_market(e, cand)?;
    let optimality = check_optimality(e, &cand.prices, cand)?;
    let tools = check_tools(e, cand);
    let accountability = check_accountability(e, &cand.prices, cand)?;
    Ok(EquilibriumReport {
        market,
        optimality,
        tools,
        accountability,
    })
}

/// Scan every feasible allocation and collect those that verify as
/// equilibria at the given prices and state, in lexicographic order.
pub fn search_equilibria(
    e: &Economy,
    prices: &[f64],
    state: &StateId,
    cap: u64,
) -> Result<Vec<Allocation>> {
    if e.state(state).is_none() {
        return Err(Error::UnknownState(state.clone()));
    }
    let mut out = Vec::new();
    let mut scan_error: Option<Error> = None;
    for_each_feasible(e, cap, |bundles| {
        let cand = Candidate {
            prices: prices.to_vec(),
            allocation: Allocation(bundles.to_vec()),
            state: state.clone(),
        };
        match verify_equilibrium(e, &cand) {
            Ok(report) if report.holds() => {
                out.push(cand.allocation);
                ControlFlow::Continue(())
            }
            Ok(_) => ControlFlow::Continue(()),
            Err(err) => {
                scan_error = Some(err);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(err) = scan_error {
        return Err(err);
    }
    Ok(out)
}

/// One bearing entity's contribution to the gap bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonTerm {
    pub entity: EntityId,
    pub lipschitz: f64,
    pub bundle_norm: f64,
}

/// Outcome of the quoted-price gap analysis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub epsilon: f64,
    pub delta_inf_norm: f64,
    /// Largest total welfare gain any dominating feasible allocation
    /// offers the bearing entities; zero when none dominates.
    pub measured_gap: f64,
    pub gap_witness: Option<Allocation>,
    /// `epsilon` times the sum of Lipschitz constant times bundle norm
    /// over bearing entities.
    pub bound: f64,
    pub terms: Vec<EpsilonTerm>,
    pub holds: bool,
}

/// Measure the welfare gap of a candidate whose quoted prices are off by
/// `delta`, and check it against the epsilon bound.
///
/// Preconditions: `delta` must stay within `epsilon` per coordinate (so a
/// zero epsilon forces a zero delta), and the optimality, tool, and
/// accountability clauses must hold at the corrected prices
/// `prices + delta`. Violating either is an error, since the bound says
/// nothing about such candidates. The market support clause is exempt: at
/// the corrected prices it may fail, and that slack is exactly what the
/// gap measures.
pub fn epsilon_gap_bound(
    e: &Economy,
    cand: &Candidate,
    epsilon: f64,
    delta: &[f64],
    cap: u64,
) -> Result<EpsilonReport> {
    if epsilon < 0.0 {
        return Err(Error::PerturbationDomain(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    if delta.len() != e.dim() {
        return Err(Error::Arity {
            context: "price perturbation".into(),
            expected: e.dim(),
            found: delta.len(),
        });
    }
    let delta_inf_norm = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if delta_inf_norm > epsilon + TOL {
        return Err(Error::PerturbationDomain(format!(
            "perturbation reaches {delta_inf_norm} but epsilon is {epsilon}"
        )));
    }
    if !is_feasible(e, &cand.allocation)? {
        return Err(Error::Infeasible(
            "candidate allocation is not feasible".into(),
        ));
    }
    let corrected: Vec<f64> = cand
        .prices
        .iter()
        .zip(delta)
        .map(|(p, d)| p + d)
        .collect();
    let optimality = check_optimality(e, &corrected, cand)?;
    if let Some(f) = optimality.failures.first() {
        return Err(Error::PerturbedClause(format!(
            "optimality fails at the corrected prices: {} can afford {} worth {}",
            f.entity, f.best, f.best_value
        )));
    }
    let tools = check_tools(e, cand);
    if let Some(t) = tools.failures.first() {
        return Err(Error::PerturbedClause(format!(
            "tool {t} is not fixed at its admissible point"
        )));
    }
    let accountability = check_accountability(e, &corrected, cand)?;
    if !accountability.holds {
        let reason = accountability
            .delegate_failures
            .first()
            .map(|d| format!("delegate {}: {}", d.delegate, d.reason))
            .or_else(|| {
                accountability.rights_failures.first().map(|r| {
                    format!(
                        "protected rights coordinate {} of {} has no backing flag",
                        r.coord, r.entity
                    )
                })
            })
            .unwrap_or_else(|| "accountability fails".into());
        return Err(Error::PerturbedClause(format!(
            "accountability fails at the corrected prices: {reason}"
        )));
    }

    let bearing = e.welfare_bearing();
    let mut base = Vec::with_capacity(e.entities.len());
    for (i, ent) in e.entities.iter().enumerate() {
        if bearing.contains(&ent.id) {
            base.push(Some(e.eval_welfare(
                &ent.id,
                &cand.allocation.0[i],
                &cand.state,
            )?));
        } else {
            base.push(None);
        }
    }
    let pinned: Vec<Vec<usize>> = e
        .rights_class
        .iter()
        .map(|tags| {
            tags.iter()
                .enumerate()
                .filter(|(_, tag)| {
                    matches!(
                        tag,
                        RightsTag::Protected | RightsTag::Assigned { reassignable: false }
                    )
                })
                .map(|(r, _)| e.lx + r)
                .collect()
        })
        .collect();
    let mut measured_gap = 0.0f64;
    let mut gap_witness: Option<Allocation> = None;
    let mut scan_error: Option<Error> = None;
    for_each_feasible(e, cap, |bundles| {
        for (i, b) in bundles.iter().enumerate() {
            for &k in &pinned[i] {
                if (b.0[k] - cand.allocation.0[i].0[k]).abs() > TOL {
                    return ControlFlow::Continue(());
                }
            }
        }
        let mut total = 0.0;
        let mut strict = false;
        for (i, ent) in e.entities.iter().enumerate() {
            let Some(cur) = base[i] else { continue };
            let v = match e.eval_welfare(&ent.id, &bundles[i], &cand.state) {
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
                strict = true;
            }
            total += v - cur;
        }
        if strict && total > measured_gap + TOL {
            measured_gap = total;
            gap_witness = Some(Allocation(bundles.to_vec()));
        }
        ControlFlow::Continue(())
    })?;
    if let Some(err) = scan_error {
        return Err(err);
    }

    let mut terms = Vec::new();
    let mut bound = 0.0;
    for (i, ent) in e.entities.iter().enumerate() {
        if !bearing.contains(&ent.id) {
            continue;
        }
        let w = e.welfare_of(&ent.id).expect("bearing entity has welfare");
        let lipschitz =
            lipschitz_bound(w, &e.grids[i], &cand.state).map_err(|err| Error::EvalFailed {
                entity: ent.id.clone(),
                detail: err.to_string(),
            })?;
        let bundle_norm = cand.allocation.0[i].norm2();
        bound += lipschitz * bundle_norm;
        terms.push(EpsilonTerm {
            entity: ent.id.clone(),
            lipschitz,
            bundle_norm,
        });
    }
    bound *= epsilon;
    Ok(EpsilonReport {
        epsilon,
        delta_inf_norm,
        measured_gap,
        gap_witness,
        bound,
        terms,
        holds: measured_gap <= bound + TOL,
    })
}

/// Outcome of the plain textbook check on a classical instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalReport {
    pub market: bool,
    pub optimality: bool,
    pub holds: bool,
}

/// Restrict to classical pure-exchange instances: no rights coordinates,
/// no channels, no delegates, a single institutional state, and every
/// entity either welfare-bearing or a fixed tool. Anything else is out of
/// scope for the textbook notion and reported as a domain error.
pub fn classical_domain_check(e: &Economy) -> Result<()> {
    if e.lr != 0 {
        return Err(Error::ClassicalDomain(
            "rights coordinates are present".into(),
        ));
    }
    if !e.channels.is_empty() {
        return Err(Error::ClassicalDomain("action channels are present".into()));
    }
    if !e.delegates.is_empty() {
        return Err(Error::ClassicalDomain(
            "delegation records are present".into(),
        ));
    }
    if e.states.len() != 1 {
        return Err(Error::ClassicalDomain(format!(
            "expected exactly one institutional state, found {}",
            e.states.len()
        )));
    }
    let bearing = e.welfare_bearing();
    for ent in &e.entities {
        if !bearing.contains(&ent.id) && e.sigma.get(&ent.id) != Some(Status::Tool) {
            return Err(Error::ClassicalDomain(format!(
                "entity {} neither bears welfare nor is a fixed tool",
                ent.id
            )));
        }
    }
    Ok(())
}

/// Plain competitive-equilibrium check, written directly from the textbook
/// definition with naive loops: market clearing with value support, welfare
/// maximization on the budget, expenditure minimization over the
/// weakly-preferred set, and fixed tools at their single point. Kept
/// independent of the clause verifier so the two can cross-check each
/// other on classical instances.
pub fn classical_verify(e: &Economy, cand: &Candidate) -> Result<ClassicalReport> {
    classical_domain_check(e)?;
    if cand.prices.len() != e.dim() {
        return Err(Error::Arity {
            context: "price vector".into(),
            expected: e.dim(),
            found: cand.prices.len(),
        });
    }
    let market = is_feasible(e, &cand.allocation)?
        && aggregate_support_check(e, &cand.prices, &cand.allocation)?.holds;
    let mut optimality = true;
    'outer: for (i, ent) in e.entities.iter().enumerate() {
        let at = &cand.allocation.0[i];
        if !e.grids[i].contains(at) {
            optimality = false;
            break;
        }
        if e.sigma.get(&ent.id) == Some(Status::Tool) {
            if !(e.grids[i].is_singleton() && e.grids[i].point(0).approx_eq(at, TOL)) {
                optimality = false;
                break;
            }
            continue;
        }
        let wealth = at.dot(&cand.prices);
        let current = e.eval_welfare(&ent.id, at, &cand.state)?;
        for b in e.grids[i].iter() {
            let cost = b.dot(&cand.prices);
            let v = e.eval_welfare(&ent.id, &b, &cand.state)?;
            if cost <= wealth + TOL && v > current + TOL {
                optimality = false;
                break 'outer;
            }
            if v >= current - TOL && cost < wealth - TOL {
                optimality = false;
                break 'outer;
            }
        }
    }
    let holds = market && optimality;
    Ok(ClassicalReport {
        market,
        optimality,
        holds,
    })
}
