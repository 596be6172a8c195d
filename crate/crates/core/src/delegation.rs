//! Divergence between a delegate's objective and its principal's welfare,
//! and the welfare loss this can cause.
//!
//! The central quantity is the pointwise gap `U(z) - W(z)` between what the
//! delegate optimizes and what the principal actually values, taken over a
//! finite choice domain. Its sup norm bounds the principal's loss from
//! letting the delegate choose: picking the objective's maximizer instead
//! of the welfare maximizer costs at most twice the sup of the gap. The
//! report carries both maximizers, the realized loss, and the bound, so the
//! inequality is checkable instance by instance.
//!
//! Delegation chains compose. A chain's divergence is the sum of per-link
//! sups, read either incrementally (each delegate against its immediate
//! predecessor, telescoping to the principal) or plainly (each delegate
//! against the ultimate principal directly).

use serde::Serialize;

use crate::economy::{Bundle, Economy, EntityId, StateId};
use crate::welfare::{argmax_on, WelfareFunction};
use crate::{Error, Result, TOL};

/// Divergence analysis of one objective against one welfare function on a
/// finite domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    /// Sup of `|U - W|` over the domain.
    pub sup_abs: f64,
    /// Earliest domain point attaining the sup.
    pub sup_witness: Bundle,
    /// Earliest maximizer of the objective.
    pub u_argmax: Bundle,
    /// Earliest maximizer of the principal's welfare.
    pub w_argmax: Bundle,
    /// Principal's welfare at the objective's maximizer.
    pub w_at_u: f64,
    /// Principal's welfare at its own maximizer.
    pub w_at_w: f64,
    /// Realized welfare loss `w_at_w - w_at_u`.
    pub loss: f64,
    /// Loss bound `2 * sup_abs`.
    pub bound: f64,
    /// Whether `loss <= bound` within tolerance.
    pub holds: bool,
    /// Set when either function is tabulated, so the bound rests on listed
    /// values rather than a closed form.
    pub qualitative: bool,
}

/// Compare `objective` against `welfare` pointwise on `points`.
///
/// Points are scanned in the order given and ties break toward the
/// earliest, so passing a canonically ordered domain makes every witness
/// deterministic.
pub fn divergence_on(
    points: &[Bundle],
    objective: &WelfareFunction,
    welfare: &WelfareFunction,
    state: &StateId,
) -> Result<DivergenceReport> {
    if points.is_empty() {
        return Err(Error::EvalFailed {
            entity: EntityId::new("<divergence>"),
            detail: "empty domain".into(),
        });
    }
    let eval = |w: &WelfareFunction, b: &Bundle| {
        w.eval(b, state).map_err(|err| Error::EvalFailed {
            entity: EntityId::new("<divergence>"),
            detail: err.to_string(),
        })
    };
    let mut sup_abs = 0.0f64;
    let mut sup_witness = points[0].clone();
    for b in points {
        let gap = (eval(objective, b)? - eval(welfare, b)?).abs();
        if gap > sup_abs + TOL {
            sup_abs = gap;
            sup_witness = b.clone();
        }
    }
    let map_eval_err = |err: crate::welfare::EvalError| Error::EvalFailed {
        entity: EntityId::new("<divergence>"),
        detail: err.to_string(),
    };
    let (ui, _) = argmax_on(points, objective, state).map_err(map_eval_err)?;
    let (wi, w_at_w) = argmax_on(points, welfare, state).map_err(map_eval_err)?;
    let w_at_u = eval(welfare, &points[ui])?;
    let loss = w_at_w - w_at_u;
    let bound = 2.0 * sup_abs;
    let qualitative = matches!(
        objective.form,
        crate::welfare::WelfareForm::Tabulated { .. }
    ) || matches!(welfare.form, crate::welfare::WelfareForm::Tabulated { .. });
    Ok(DivergenceReport {
        sup_abs,
        sup_witness,
        u_argmax: points[ui].clone(),
        w_argmax: points[wi].clone(),
        w_at_u,
        w_at_w,
        loss,
        bound,
        holds: loss <= bound + TOL,
        qualitative,
    })
}

/// Divergence of a recorded delegate against its principal's welfare.
/// The domain defaults to the principal's full grid in canonical order.
pub fn divergence(
    e: &Economy,
    delegate: &EntityId,
    state: &StateId,
    domain: Option<&[Bundle]>,
) -> Result<DivergenceReport> {
    let spec = e
        .delegate_spec(delegate)
        .ok_or_else(|| Error::NotADelegate(delegate.clone()))?;
    if e.state(state).is_none() {
        return Err(Error::UnknownState(state.clone()));
    }
    let welfare = e
        .welfare_of(&spec.principal)
        .ok_or_else(|| Error::EvalFailed {
            entity: spec.principal.clone(),
            detail: "principal has no welfare function".into(),
        })?;
    let grid_points: Vec<Bundle>;
    let points: &[Bundle] = match domain {
        Some(d) => d,
        None => {
            let grid = e
                .grid_of(&spec.principal)
                .ok_or_else(|| Error::UnknownEntity(spec.principal.clone()))?;
            grid_points = grid.iter().collect();
            &grid_points
        }
    };
    divergence_on(points, &spec.objective, welfare, state)
}

/// How a chain's divergence is composed from its links.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainRule {
    /// Each delegate is compared against the ultimate principal's welfare
    /// and the sups are summed.
    PlainSum,
    /// Each delegate is compared against its immediate predecessor's
    /// objective, the innermost against the principal's welfare. The sum
    /// telescopes into a bound on the end-to-end gap.
    Incremental,
}

impl ChainRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainRule::PlainSum => "plain-sum",
            ChainRule::Incremental => "incremental",
        }
    }

    pub fn parse(s: &str) -> Option<ChainRule> {
        match s {
            "plain-sum" => Some(ChainRule::PlainSum),
            "incremental" => Some(ChainRule::Incremental),
            _ => None,
        }
    }
}

/// One link of a composed chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainLink {
    pub delegate: EntityId,
    /// What the delegate's objective was compared against.
    pub against: String,
    pub sup_abs: f64,
}

/// Composed divergence of a delegation chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainDivergence {
    /// Delegates from the one under analysis up toward the principal.
    pub path: Vec<EntityId>,
    pub principal: EntityId,
    pub rule: ChainRule,
    pub links: Vec<ChainLink>,
    /// Sum of per-link sups.
    pub total: f64,
}

/// Compose the divergence of the chain ending at `delegate`, on the
/// ultimate principal's grid.
pub fn chain_divergence(
    e: &Economy,
    delegate: &EntityId,
    state: &StateId,
    rule: ChainRule,
) -> Result<ChainDivergence> {
    if e.delegate_spec(delegate).is_none() {
        return Err(Error::NotADelegate(delegate.clone()));
    }
    if e.state(state).is_none() {
        return Err(Error::UnknownState(state.clone()));
    }
    let principal = crate::economy::resolve_chain(e, delegate).map_err(|detail| {
        Error::EvalFailed {
            entity: delegate.clone(),
            detail: format!("delegation chain does not resolve: {detail}"),
        }
    })?;
    let welfare = e
        .welfare_of(&principal)
        .ok_or_else(|| Error::EvalFailed {
            entity: principal.clone(),
            detail: "principal has no welfare function".into(),
        })?;
    let grid = e
        .grid_of(&principal)
        .ok_or_else(|| Error::UnknownEntity(principal.clone()))?;
    let points: Vec<Bundle> = grid.iter().collect();

    let mut path = Vec::new();
    let mut cur = delegate.clone();
    while let Some(spec) = e.delegate_spec(&cur) {
        path.push(cur.clone());
        match &spec.predecessor {
            Some(p) if e.delegate_spec(p).is_some() => cur = p.clone(),
            _ => break,
        }
    }

    let sup_between = |a: &WelfareFunction, b: &WelfareFunction| -> Result<f64> {
        let mut sup = 0.0f64;
        for p in &points {
            let va = a.eval(p, state).map_err(|err| Error::EvalFailed {
                entity: delegate.clone(),
                detail: err.to_string(),
            })?;
            let vb = b.eval(p, state).map_err(|err| Error::EvalFailed {
                entity: delegate.clone(),
                detail: err.to_string(),
            })?;
            sup = sup.max((va - vb).abs());
        }
        Ok(sup)
    };

    let mut links = Vec::new();
    match rule {
        ChainRule::PlainSum => {
            for d in &path {
                let spec = e.delegate_spec(d).expect("path members have specs");
                links.push(ChainLink {
                    delegate: d.clone(),
                    against: format!("welfare of {principal}"),
                    sup_abs: sup_between(&spec.objective, welfare)?,
                });
            }
        }
        ChainRule::Incremental => {
            for (i, d) in path.iter().enumerate() {
                let spec = e.delegate_spec(d).expect("path members have specs");
                let (against, sup_abs) = match path.get(i + 1) {
                    Some(pred) => {
                        let pred_spec =
                            e.delegate_spec(pred).expect("path members have specs");
                        (
                            format!("objective of {pred}"),
                            sup_between(&spec.objective, &pred_spec.objective)?,
                        )
                    }
                    None => (
                        format!("welfare of {principal}"),
                        sup_between(&spec.objective, welfare)?,
                    ),
                };
                links.push(ChainLink {
                    delegate: d.clone(),
                    against,
                    sup_abs,
                });
            }
        }
    }
    let total = links.iter().map(|l| l.sup_abs).sum();
    Ok(ChainDivergence {
        path,
        principal,
        rule,
        links,
        total,
    })
}
