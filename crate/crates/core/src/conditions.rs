//! The seven institutional conditions and the diagnostic pipeline that
//! checks them.
//!
//! Each condition is named for what must hold. In order:
//!
//! 1. ontological clarity: every entity has an unambiguous status, humans
//!    hold only welfare-bearing statuses, and every entity recorded as
//!    welfare-bearing has a welfare function to bear it with;
//! 2. rights completeness: every rights coordinate some bearing entity's
//!    welfare depends on is fully handled for every holder, by pricing, by
//!    plain assignment, or by protection backed in the state; a
//!    reassignable assignment on such a coordinate is incomplete, since
//!    neither market nor protection governs its movement;
//! 3. delegation fidelity: every delegation chain either composes to zero
//!    objective divergence or ends in a delegate internalized with a
//!    declared agency cost;
//! 4. externality internalization: every channel action with a welfare
//!    effect at the state is governed, compensated, and offset exactly;
//! 5. verification adequacy: no two distinct attribute values share a
//!    price coordinate, and unpriced values occur only for attributes the
//!    state verifies;
//! 6. price taking: no entity is modeled as able to move quoted prices;
//! 7. regularity: every recorded welfare function of a bearing entity is
//!    locally nonsatiated on its grid at every state.
//!
//! Reports carry human-readable findings and, where the condition has a
//! natural magnitude (divergence totals, uninternalized effects), a
//! numeric margin. A diagnosis never hides one failure behind another:
//! all seven conditions are always evaluated.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::delegation::{chain_divergence, ChainRule};
use crate::economy::{Economy, EntityId, RightsTag, StateId, Status};
use crate::externality::detect_autonomy_externalities;
use crate::pareto::lns_scan;
use crate::welfare::depends_on_coordinate;
use crate::{Result, TOL};

/// Identifier of one of the seven conditions, in their fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionId {
    OntologicalClarity,
    RightsCompleteness,
    DelegationFidelity,
    ExternalityInternalization,
    VerificationAdequacy,
    PriceTaking,
    Regularity,
}

impl ConditionId {
    pub const ALL: [ConditionId; 7] = [
        ConditionId::OntologicalClarity,
        ConditionId::RightsCompleteness,
        ConditionId::DelegationFidelity,
        ConditionId::ExternalityInternalization,
        ConditionId::VerificationAdequacy,
        ConditionId::PriceTaking,
        ConditionId::Regularity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::OntologicalClarity => "ontological-clarity",
            ConditionId::RightsCompleteness => "rights-completeness",
            ConditionId::DelegationFidelity => "delegation-fidelity",
            ConditionId::ExternalityInternalization => "externality-internalization",
            ConditionId::VerificationAdequacy => "verification-adequacy",
            ConditionId::PriceTaking => "price-taking",
            ConditionId::Regularity => "regularity",
        }
    }

    pub fn parse(s: &str) -> Option<ConditionId> {
        ConditionId::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// One-based position in the fixed order.
    pub fn ordinal(self) -> usize {
        ConditionId::ALL
            .iter()
            .position(|c| *c == self)
            .expect("every id is listed")
            + 1
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one condition check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub holds: bool,
    /// Violation magnitude for conditions with a natural numeric scale:
    /// the largest composed divergence for delegation fidelity, the
    /// largest uninternalized effect for externality internalization.
    /// Zero when such a condition holds; absent for the discrete ones.
    pub margin: Option<f64>,
    pub findings: Vec<String>,
}

/// Options for the diagnostic pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnoseOptions {
    /// How delegation chains compose their divergence.
    pub chain_rule: ChainRule,
    /// Radius for the nonsatiation scans; `None` uses each grid's default.
    pub lns_radius: Option<f64>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            chain_rule: ChainRule::Incremental,
            lns_radius: None,
        }
    }
}

/// Verdicts for all seven conditions at one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnosis {
    pub state: StateId,
    pub conditions: Vec<ConditionReport>,
}

impl Diagnosis {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn failing(&self) -> Vec<ConditionId> {
        self.conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.id)
            .collect()
    }

    pub fn report(&self, id: ConditionId) -> &ConditionReport {
        self.conditions
            .iter()
            .find(|c| c.id == id)
            .expect("diagnosis carries all seven conditions")
    }
}

fn check_ontological_clarity(e: &Economy) -> ConditionReport {
    let mut findings = Vec::new();
    for ent in &e.entities {
        match e.sigma.get(&ent.id) {
            None => findings.push(format!("entity {} has no recorded status", ent.id)),
            Some(st) => {
                if ent.human && matches!(st, Status::Tool | Status::Delegate) {
                    findings.push(format!(
                        "human {} is recorded with non-welfare-bearing status {st}",
                        ent.id
                    ));
                }
                if !ent.human
                    && matches!(st, Status::Agent | Status::Ws)
                    && e.welfare_of(&ent.id).is_none()
                {
                    findings.push(format!(
                        "entity {} is recorded as welfare-bearing but has no welfare function",
                        ent.id
                    ));
                }
            }
        }
    }
    for (id, _) in e.sigma.iter() {
        if e.entity(id).is_none() {
            findings.push(format!("status is recorded for unknown entity {id}"));
        }
    }
    ConditionReport {
        id: ConditionId::OntologicalClarity,
        holds: findings.is_empty(),
        margin: None,
        findings,
    }
}

fn check_rights_completeness(e: &Economy, state: &StateId) -> Result<ConditionReport> {
    let st = e
        .state(state)
        .ok_or_else(|| crate::Error::UnknownState(state.clone()))?;
    let bearing = e.welfare_bearing();
    let mut findings = Vec::new();
    for r in 0..e.lr {
        let coord = e.lx + r;
        let mut relevant = false;
        for (i, ent) in e.entities.iter().enumerate() {
            if !bearing.contains(&ent.id) {
                continue;
            }
            let Some(w) = e.welfare_of(&ent.id) else {
                continue;
            };
            let depends = depends_on_coordinate(w, &e.grids[i], state, coord).map_err(|err| {
                crate::Error::EvalFailed {
                    entity: ent.id.clone(),
                    detail: err.to_string(),
                }
            })?;
            if depends {
                relevant = true;
                break;
            }
        }
        if !relevant {
            continue;
        }
        for (i, ent) in e.entities.iter().enumerate() {
            match e.rights_class.get(i).and_then(|tags| tags.get(r)) {
                None => findings.push(format!(
                    "rights coordinate {r} of {} has no classification",
                    ent.id
                )),
                Some(RightsTag::Priced) => {}
                Some(RightsTag::Assigned {
                    reassignable: false,
                }) => {}
                Some(RightsTag::Assigned { reassignable: true }) => findings.push(format!(
                    "welfare-relevant rights coordinate {r} of {} is reassignable without a market or protection governing the move",
                    ent.id
                )),
                Some(RightsTag::Protected) => {
                    if !st.protected_rights.contains(&(ent.id.clone(), r)) {
                        findings.push(format!(
                            "protected rights coordinate {r} of {} has no backing flag in the state",
                            ent.id
                        ));
                    }
                }
            }
        }
    }
    Ok(ConditionReport {
        id: ConditionId::RightsCompleteness,
        holds: findings.is_empty(),
        margin: None,
        findings,
    })
}

fn check_delegation_fidelity(
    e: &Economy,
    state: &StateId,
    rule: ChainRule,
) -> Result<ConditionReport> {
    let st = e
        .state(state)
        .ok_or_else(|| crate::Error::UnknownState(state.clone()))?;
    let mut findings = Vec::new();
    let mut margin = 0.0f64;
    for ent in &e.entities {
        if e.sigma.get(&ent.id) == Some(Status::Delegate) && e.delegate_spec(&ent.id).is_none() {
            findings.push(format!(
                "entity {} holds status delegate but records no objective",
                ent.id
            ));
        }
    }
    for spec in &e.delegates {
        if st.internalized_delegates.contains(&spec.delegate) {
            if spec.agency_cost.is_none() {
                findings.push(format!(
                    "delegate {} is internalized but declares no agency cost",
                    spec.delegate
                ));
            }
            continue;
        }
        match chain_divergence(e, &spec.delegate, state, rule) {
            Err(err) => findings.push(format!(
                "delegation chain of {} cannot be assessed: {err}",
                spec.delegate
            )),
            Ok(chain) => {
                if chain.total > TOL {
                    margin = margin.max(chain.total);
                    findings.push(format!(
                        "delegate {} diverges from {} by {} composed over its chain and is not internalized",
                        spec.delegate, chain.principal, chain.total
                    ));
                }
            }
        }
    }
    Ok(ConditionReport {
        id: ConditionId::DelegationFidelity,
        holds: findings.is_empty(),
        margin: Some(margin),
        findings,
    })
}

fn check_externality_internalization(e: &Economy, state: &StateId) -> Result<ConditionReport> {
    let found = detect_autonomy_externalities(e, state)?;
    let margin = found
        .iter()
        .fold(0.0f64, |m, f| m.max(f.effect.abs()));
    let findings = found
        .iter()
        .map(|f| {
            let status = if !f.governed {
                "the channel is not governed in the state"
            } else if !f.compensated {
                "the channel is not compensated"
            } else {
                "the recorded transfer does not offset it"
            };
            format!(
                "action {} on channel {} shifts {} welfare by {} and {status}",
                f.action,
                f.channel,
                e.channel(&f.channel)
                    .map(|c| c.target.to_string())
                    .unwrap_or_else(|| "target".into()),
                f.effect
            )
        })
        .collect::<Vec<_>>();
    Ok(ConditionReport {
        id: ConditionId::ExternalityInternalization,
        holds: findings.is_empty(),
        margin: Some(margin),
        findings,
    })
}

fn check_verification_adequacy(e: &Economy, state: &StateId) -> Result<ConditionReport> {
    let st = e
        .state(state)
        .ok_or_else(|| crate::Error::UnknownState(state.clone()))?;
    let mut findings = Vec::new();
    for decl in &e.attributes {
        let verified = st.verified_attributes.contains(&decl.kind);
        let mut seen: Vec<(usize, &String)> = Vec::new();
        for value in &decl.values {
            match decl.price_coords.get(value) {
                Some(coord) => {
                    if let Some((_, other)) = seen.iter().find(|(c, _)| c == coord) {
                        findings.push(format!(
                            "attribute {}: values {other:?} and {value:?} share price coordinate {coord}, so the market cannot tell them apart",
                            decl.kind
                        ));
                    }
                    seen.push((*coord, value));
                }
                None => {
                    if !verified {
                        findings.push(format!(
                            "attribute {}: value {value:?} has no price coordinate and the state does not verify the attribute",
                            decl.kind
                        ));
                    }
                }
            }
        }
    }
    Ok(ConditionReport {
        id: ConditionId::VerificationAdequacy,
        holds: findings.is_empty(),
        margin: None,
        findings,
    })
}

fn check_price_taking(e: &Economy) -> ConditionReport {
    let findings: Vec<String> = e
        .entities
        .iter()
        .filter(|ent| ent.price_setter)
        .map(|ent| format!("entity {} is modeled as able to move quoted prices", ent.id))
        .collect();
    ConditionReport {
        id: ConditionId::PriceTaking,
        holds: findings.is_empty(),
        margin: None,
        findings,
    }
}

fn check_regularity(e: &Economy, radius: Option<f64>) -> Result<ConditionReport> {
    let bearing = e.welfare_bearing();
    let mut findings = Vec::new();
    for (i, ent) in e.entities.iter().enumerate() {
        if !bearing.contains(&ent.id) {
            continue;
        }
        // A bearing entity without a welfare function is an ontological
        // finding; regularity assesses the functions that exist.
        let Some(w) = e.welfare_of(&ent.id) else {
            continue;
        };
        let Some(grid) = e.grids.get(i) else {
            continue;
        };
        for s in &e.states {
            let report = lns_scan(w, grid, &s.id, radius)?;
            for p in report.failures() {
                findings.push(format!(
                    "welfare of {} is satiated at interior point {} in state {}",
                    ent.id, p.point, s.id
                ));
            }
        }
    }
    Ok(ConditionReport {
        id: ConditionId::Regularity,
        holds: findings.is_empty(),
        margin: None,
        findings,
    })
}

/// Evaluate all seven conditions at `state`.
pub fn diagnose(e: &Economy, state: &StateId, opts: &DiagnoseOptions) -> Result<Diagnosis> {
    if e.state(state).is_none() {
        return Err(crate::Error::UnknownState(state.clone()));
    }
    let conditions = vec![
        check_ontological_clarity(e),
        check_rights_completeness(e, state)?,
        check_delegation_fidelity(e, state, opts.chain_rule)?,
        check_externality_internalization(e, state)?,
        check_verification_adequacy(e, state)?,
        check_price_taking(e),
        check_regularity(e, opts.lns_radius)?,
    ];
    Ok(Diagnosis {
        state: state.clone(),
        conditions,
    })
}

/// The set of entities whose welfare counts under a hypothetical status
/// assignment, without committing the economy to it.
pub fn bearing_under(
    e: &Economy,
    sigma: &crate::economy::StatusAssignment,
) -> BTreeSet<EntityId> {
    crate::economy::welfare_bearing_set(&e.entities, sigma)
}
