//! Re-verification under exact rational arithmetic.
//!
//! Every number in an economy file is a decimal, so each stored `f64`
//! stands for the shortest decimal that round-trips through it. This
//! module reads those decimals back as rationals and re-runs the
//! numerically sensitive verdicts, the equilibrium clauses and the
//! improver search, with exact comparisons and no tolerance. Log-linear
//! welfare is rejected: its values are not rational.

use std::collections::BTreeSet;

use num_rational::Ratio;
use num_traits::Zero;
use serde::Serialize;

use paretolab_core::economy::{Bundle, Economy, EntityId, FeasibilityMode, RightsTag, Status};
use paretolab_core::equilibrium::Candidate;
use paretolab_core::pareto::ImproverPolicy;
use paretolab_core::welfare::{WelfareForm, WelfareFunction};
use paretolab_core::{Error, Result};

/// Exact rational scalar.
pub type Q = Ratio<i128>;

fn parse_decimal(s: &str) -> Option<Q> {
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1i128, r),
        None => (1i128, s),
    };
    let (int, frac) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut num: i128 = 0;
    for b in int.bytes().chain(frac.bytes()) {
        num = num.checked_mul(10)?.checked_add((b - b'0') as i128)?;
    }
    let den = 10i128.checked_pow(u32::try_from(frac.len()).ok()?)?;
    Some(Q::new(sign * num, den))
}

/// The rational the number's shortest round-trip decimal denotes.
pub fn rational_of(x: f64) -> Result<Q> {
    if !x.is_finite() {
        return Err(Error::Unsupported(format!(
            "{x} has no decimal reading for exact arithmetic"
        )));
    }
    parse_decimal(&format!("{x}")).ok_or_else(|| {
        Error::Unsupported(format!(
            "{x} does not fit exact decimal arithmetic at this precision"
        ))
    })
}

fn rational_bundle(b: &Bundle) -> Result<Vec<Q>> {
    b.0.iter().map(|v| rational_of(*v)).collect()
}

fn dot(p: &[Q], b: &[Q]) -> Q {
    p.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact welfare at the candidate state: linear weights or a resolved
/// value table, plus the constant state offset.
enum ExactWelfare {
    Linear { weights: Vec<Q>, offset: Q },
    Table { entries: Vec<(Vec<Q>, Q)>, offset: Q },
}

impl ExactWelfare {
    fn build(w: &WelfareFunction, state: &paretolab_core::economy::StateId) -> Result<Self> {
        let offset = w
            .state_offsets
            .get(state)
            .map(|v| rational_of(*v))
            .transpose()?
            .unwrap_or_else(Q::zero);
        match &w.form {
            WelfareForm::Linear { weights } => Ok(ExactWelfare::Linear {
                weights: weights.iter().map(|v| rational_of(*v)).collect::<Result<_>>()?,
                offset,
            }),
            WelfareForm::Tabulated { default, by_state } => {
                let table = by_state.get(state).unwrap_or(default);
                let entries = table
                    .entries
                    .iter()
                    .map(|(b, v)| Ok((rational_bundle(b)?, rational_of(*v)?)))
                    .collect::<Result<Vec<(Vec<Q>, Q)>>>()?;
                Ok(ExactWelfare::Table { entries, offset })
            }
            WelfareForm::LogLinear { .. } => Err(Error::Unsupported(
                "log-linear welfare takes irrational values; exact arithmetic cannot verify it"
                    .into(),
            )),
        }
    }

    fn eval(&self, b: &[Q], who: &EntityId) -> Result<Q> {
        match self {
            ExactWelfare::Linear { weights, offset } => {
                if weights.len() != b.len() {
                    return Err(Error::EvalFailed {
                        entity: who.clone(),
                        detail: format!(
                            "weight dimension {} does not match bundle dimension {}",
                            weights.len(),
                            b.len()
                        ),
                    });
                }
                Ok(dot(weights, b) + offset)
            }
            ExactWelfare::Table { entries, offset } => entries
                .iter()
                .find(|(p, _)| p == b)
                .map(|(_, v)| v + offset)
                .ok_or_else(|| Error::EvalFailed {
                    entity: who.clone(),
                    detail: "bundle has no tabulated value".into(),
                }),
        }
    }
}

/// A feasible allocation exactly dominating the candidate.
#[derive(Clone, Debug, Serialize)]
pub struct ExactImprover {
    pub allocation: Vec<Bundle>,
    /// Exact welfare gain per strictly improved entity, as rationals.
    pub gains: Vec<(EntityId, String)>,
    pub strict: Vec<EntityId>,
}

/// Clause verdicts under exact arithmetic, with descriptive failures.
#[derive(Clone, Debug, Serialize)]
pub struct ExactVerify {
    pub market: bool,
    pub optimality: bool,
    pub tools: bool,
    pub accountability: bool,
    pub failures: Vec<String>,
}

impl ExactVerify {
    pub fn holds(&self) -> bool {
        self.market && self.optimality && self.tools && self.accountability
    }
}

/// An economy and candidate lifted to rational coordinates.
pub struct ExactInstance {
    entities: Vec<EntityId>,
    bearing: Vec<bool>,
    tools: Vec<bool>,
    /// Grid points per entity: original bundles and rational coordinates.
    points_f: Vec<Vec<Bundle>>,
    points_q: Vec<Vec<Vec<Q>>>,
    welfare: Vec<Option<ExactWelfare>>,
    /// Coordinates each policy pins, resolved per entity.
    pinned: Vec<Vec<usize>>,
    candidate: Vec<Vec<Q>>,
    candidate_idx: Vec<usize>,
    prices: Vec<Q>,
    targets: Vec<Vec<Q>>,
    mode: FeasibilityMode,
    delegates: Vec<ExactDelegate>,
    rights_unbacked: Vec<(EntityId, usize)>,
}

struct ExactDelegate {
    delegate: EntityId,
    index: usize,
    principal_index: Option<usize>,
    internalized: bool,
    has_agency_cost: bool,
    objective: Option<ExactWelfare>,
}

impl ExactInstance {
    pub fn build(e: &Economy, cand: &Candidate, policy: ImproverPolicy) -> Result<Self> {
        if e.state(&cand.state).is_none() {
            return Err(Error::UnknownState(cand.state.clone()));
        }
        let bearing_set = e.welfare_bearing();
        let mut points_f = Vec::new();
        let mut points_q = Vec::new();
        for g in &e.grids {
            let pf: Vec<Bundle> = g.iter().collect();
            let pq = pf
                .iter()
                .map(rational_bundle)
                .collect::<Result<Vec<Vec<Q>>>>()?;
            points_f.push(pf);
            points_q.push(pq);
        }
        let mut welfare = Vec::new();
        let mut bearing = Vec::new();
        let mut tools = Vec::new();
        for ent in &e.entities {
            let bears = bearing_set.contains(&ent.id);
            bearing.push(bears);
            tools.push(e.sigma.get(&ent.id) == Some(Status::Tool));
            welfare.push(match e.welfare_of(&ent.id) {
                Some(w) if bears => Some(ExactWelfare::build(w, &cand.state)?),
                _ => None,
            });
        }
        let pinned = e
            .rights_class
            .iter()
            .map(|tags| {
                tags.iter()
                    .enumerate()
                    .filter(|(_, tag)| match policy {
                        ImproverPolicy::Faithful => matches!(
                            tag,
                            RightsTag::Protected | RightsTag::Assigned { reassignable: false }
                        ),
                        ImproverPolicy::BudgetAligned => !matches!(tag, RightsTag::Priced),
                    })
                    .map(|(r, _)| e.lx + r)
                    .collect()
            })
            .collect();
        if cand.allocation.0.len() != e.entities.len() {
            return Err(Error::Arity {
                context: "allocation".into(),
                expected: e.entities.len(),
                found: cand.allocation.0.len(),
            });
        }
        let candidate = cand
            .allocation
            .0
            .iter()
            .map(rational_bundle)
            .collect::<Result<Vec<Vec<Q>>>>()?;
        let candidate_idx = candidate
            .iter()
            .enumerate()
            .map(|(i, b)| {
                points_q[i].iter().position(|p| p == b).ok_or_else(|| {
                    Error::OffGrid {
                        entity: e.entities[i].id.clone(),
                        bundle: cand.allocation.0[i].clone(),
                    }
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        if cand.prices.len() != e.dim() {
            return Err(Error::Arity {
                context: "price vector".into(),
                expected: e.dim(),
                found: cand.prices.len(),
            });
        }
        let prices = cand
            .prices
            .iter()
            .map(|v| rational_of(*v))
            .collect::<Result<Vec<Q>>>()?;
        if e.feasibility.mode == FeasibilityMode::FreeDisposal {
            for (k, p) in prices.iter().enumerate() {
                if *p < Q::zero() {
                    return Err(Error::NegativePrice {
                        coord: k,
                        value: cand.prices[k],
                    });
                }
            }
        }
        let omega = e
            .feasibility
            .omega
            .iter()
            .map(|v| rational_of(*v))
            .collect::<Result<Vec<Q>>>()?;
        let mut target_set: BTreeSet<Vec<Q>> = BTreeSet::new();
        for y in &e.feasibility.production {
            let yq = rational_bundle(y)?;
            if yq.len() != omega.len() {
                return Err(Error::Arity {
                    context: "production vector".into(),
                    expected: omega.len(),
                    found: yq.len(),
                });
            }
            target_set.insert(omega.iter().zip(&yq).map(|(o, y)| o - y).collect());
        }
        let state = e.state(&cand.state).expect("checked above");
        let delegates = e
            .delegates
            .iter()
            .map(|spec| {
                let index = e.index_of(&spec.delegate).ok_or_else(|| {
                    Error::UnknownEntity(spec.delegate.clone())
                })?;
                let internalized = state.internalized_delegates.contains(&spec.delegate);
                let principal_index = e.index_of(&spec.principal);
                let objective = if internalized {
                    None
                } else {
                    Some(ExactWelfare::build(&spec.objective, &cand.state)?)
                };
                Ok(ExactDelegate {
                    delegate: spec.delegate.clone(),
                    index,
                    principal_index,
                    internalized,
                    has_agency_cost: spec.agency_cost.is_some(),
                    objective,
                })
            })
            .collect::<Result<Vec<ExactDelegate>>>()?;
        let mut rights_unbacked = Vec::new();
        for (i, ent) in e.entities.iter().enumerate() {
            for (r, tag) in e.rights_class[i].iter().enumerate() {
                if matches!(tag, RightsTag::Protected)
                    && !state.protected_rights.contains(&(ent.id.clone(), r))
                {
                    rights_unbacked.push((ent.id.clone(), r));
                }
            }
        }
        Ok(ExactInstance {
            entities: e.entities.iter().map(|ent| ent.id.clone()).collect(),
            bearing,
            tools,
            points_f,
            points_q,
            welfare,
            pinned,
            candidate,
            candidate_idx,
            prices,
            targets: target_set.into_iter().collect(),
            mode: e.feasibility.mode,
            delegates,
            rights_unbacked,
        })
    }

    fn eval(&self, i: usize, b: &[Q]) -> Result<Q> {
        self.welfare[i]
            .as_ref()
            .expect("eval only on bearing entities")
            .eval(b, &self.entities[i])
    }

    fn feasible_total(&self, total: &[Q]) -> bool {
        self.targets.iter().any(|t| match self.mode {
            FeasibilityMode::ExactBalance => total == t.as_slice(),
            FeasibilityMode::FreeDisposal => total.iter().zip(t).all(|(have, cap)| have <= cap),
        })
    }

    fn enumeration_size(&self) -> u128 {
        self.points_q.iter().map(|p| p.len() as u128).product()
    }

    /// Grid points of entity `i` whose pinned coordinates sit exactly at
    /// the candidate's values.
    fn pinned_points(&self, i: usize) -> Vec<usize> {
        (0..self.points_q[i].len())
            .filter(|&j| {
                self.pinned[i]
                    .iter()
                    .all(|&k| self.points_q[i][j][k] == self.candidate[i][k])
            })
            .collect()
    }

    /// Exhaustive exact improver search in lexicographic product order.
    pub fn find_improver(&self, cap: u64) -> Result<Option<ExactImprover>> {
        let product = self.enumeration_size();
        if product > u128::from(cap) {
            return Err(Error::CapExceeded { product, cap });
        }
        let n = self.entities.len();
        let mut base = vec![None; n];
        for i in 0..n {
            if self.bearing[i] {
                base[i] = Some(self.eval(i, &self.candidate[i])?);
            }
        }
        let dim = self.prices.len();
        let mut odometer = vec![0usize; n];
        'outer: loop {
            'skip: {
                let mut total = vec![Q::zero(); dim];
                for (i, &j) in odometer.iter().enumerate() {
                    for (k, v) in self.points_q[i][j].iter().enumerate() {
                        total[k] += v;
                    }
                }
                if !self.feasible_total(&total) {
                    break 'skip;
                }
                for (i, &j) in odometer.iter().enumerate() {
                    for &k in &self.pinned[i] {
                        if self.points_q[i][j][k] != self.candidate[i][k] {
                            break 'skip;
                        }
                    }
                }
                let mut strict = Vec::new();
                let mut gains = Vec::new();
                for (i, &j) in odometer.iter().enumerate() {
                    let Some(cur) = &base[i] else { continue };
                    let v = self.eval(i, &self.points_q[i][j])?;
                    if v < *cur {
                        break 'skip;
                    }
                    if v > *cur {
                        strict.push(self.entities[i].clone());
                        gains.push((self.entities[i].clone(), format!("{}", v - cur)));
                    }
                }
                if !strict.is_empty() {
                    return Ok(Some(ExactImprover {
                        allocation: odometer
                            .iter()
                            .enumerate()
                            .map(|(i, &j)| self.points_f[i][j].clone())
                            .collect(),
                        gains,
                        strict,
                    }));
                }
            }
            for i in (0..n).rev() {
                odometer[i] += 1;
                if odometer[i] < self.points_q[i].len() {
                    continue 'outer;
                }
                odometer[i] = 0;
            }
            return Ok(None);
        }
    }

    /// The four equilibrium clauses under exact comparison.
    pub fn verify(&self) -> Result<ExactVerify> {
        let mut failures = Vec::new();
        let dim = self.prices.len();

        let mut total = vec![Q::zero(); dim];
        for b in &self.candidate {
            for (k, v) in b.iter().enumerate() {
                total[k] += v;
            }
        }
        let mut market = true;
        if !self.feasible_total(&total) {
            market = false;
            failures.push("market: allocation total balances against no net supply".into());
        } else {
            let value = dot(&self.prices, &total);
            let best = self
                .targets
                .iter()
                .map(|t| dot(&self.prices, t))
                .max()
                .unwrap_or_else(Q::zero);
            if value < best {
                market = false;
                failures.push(format!(
                    "market: aggregate value {value} falls short of best net-supply value {best}"
                ));
            }
        }

        let mut optimality = true;
        for i in 0..self.entities.len() {
            if !self.bearing[i] {
                continue;
            }
            let current = self.eval(i, &self.candidate[i])?;
            let wealth = dot(&self.prices, &self.candidate[i]);
            for j in self.pinned_points(i) {
                let b = &self.points_q[i][j];
                let cost = dot(&self.prices, b);
                let value = self.eval(i, b)?;
                if cost <= wealth && value > current {
                    optimality = false;
                    failures.push(format!(
                        "optimality: {} can afford {} worth {value} instead of {current}",
                        self.entities[i], self.points_f[i][j]
                    ));
                }
                if value >= current && cost < wealth {
                    optimality = false;
                    failures.push(format!(
                        "optimality: {} weakly prefers {} costing {cost} below its wealth {wealth}",
                        self.entities[i], self.points_f[i][j]
                    ));
                }
            }
        }

        let mut tools = true;
        for i in 0..self.entities.len() {
            if !self.tools[i] {
                continue;
            }
            let fixed = self.points_q[i].len() == 1 && self.candidate_idx[i] == 0;
            if !fixed {
                tools = false;
                failures.push(format!(
                    "tools: {} is not fixed at its admissible point",
                    self.entities[i]
                ));
            }
        }

        let mut accountability = self.rights_unbacked.is_empty();
        for (ent, coord) in &self.rights_unbacked {
            failures.push(format!(
                "accountability: protected rights coordinate {coord} of {ent} has no backing flag"
            ));
        }
        for d in &self.delegates {
            let fixed = self.points_q[d.index].len() == 1 && self.candidate_idx[d.index] == 0;
            if !fixed {
                accountability = false;
                failures.push(format!(
                    "accountability: delegate {} holds a free bundle of its own",
                    d.delegate
                ));
                continue;
            }
            if d.internalized {
                if !d.has_agency_cost {
                    accountability = false;
                    failures.push(format!(
                        "accountability: delegate {} is internalized but declares no agency cost",
                        d.delegate
                    ));
                }
                continue;
            }
            let Some(pi) = d.principal_index else {
                accountability = false;
                failures.push(format!(
                    "accountability: delegate {} names a principal outside the economy",
                    d.delegate
                ));
                continue;
            };
            let objective = d.objective.as_ref().expect("set unless internalized");
            let wealth = dot(&self.prices, &self.candidate[pi]);
            for j in self.pinned_points(pi) {
                let b = &self.points_q[pi][j];
                if dot(&self.prices, b) > wealth {
                    continue;
                }
                let u = objective.eval(b, &d.delegate)?;
                let w = self.eval(pi, b)?;
                if u != w {
                    accountability = false;
                    failures.push(format!(
                        "accountability: delegate {}: objective departs from the principal's welfare by {} at {}",
                        d.delegate,
                        u - w,
                        self.points_f[pi][j]
                    ));
                    break;
                }
            }
        }

        Ok(ExactVerify {
            market,
            optimality,
            tools,
            accountability,
            failures,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use paretolab_core::pareto::find_improver;
    use paretolab_core::scenarios::{scenario, SCENARIO_NAMES};
    use paretolab_core::DEFAULT_CAP;

    #[test]
    fn decimals_read_back_as_the_expected_rationals() {
        assert_eq!(rational_of(0.1).unwrap(), Q::new(1, 10));
        assert_eq!(rational_of(2.0).unwrap(), Q::new(2, 1));
        assert_eq!(rational_of(-0.25).unwrap(), Q::new(-1, 4));
        assert_eq!(rational_of(1.5e3).unwrap(), Q::new(1500, 1));
        assert!(rational_of(f64::NAN).is_err());
        assert!(rational_of(f64::INFINITY).is_err());
    }

    #[test]
    fn exact_improver_search_agrees_with_the_float_oracle_on_scenarios() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            let inst =
                ExactInstance::build(&s.economy, &s.candidate, ImproverPolicy::Faithful).unwrap();
            let exact = inst.find_improver(DEFAULT_CAP).unwrap();
            let float = find_improver(
                &s.economy,
                &s.candidate.allocation,
                &s.candidate.state,
                ImproverPolicy::Faithful,
                DEFAULT_CAP,
            )
            .unwrap();
            match (&exact, &float) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert_eq!(a.allocation.len(), b.allocation.0.len(), "{name}");
                    for (x, y) in a.allocation.iter().zip(&b.allocation.0) {
                        assert_eq!(x, y, "{name}: improvers diverge");
                    }
                    assert_eq!(a.strict, b.strict, "{name}");
                }
                other => panic!("{name}: exact and float verdicts diverge: {other:?}"),
            }
        }
    }

    #[test]
    fn exact_verification_agrees_with_the_float_verifier_on_scenarios() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            let inst =
                ExactInstance::build(&s.economy, &s.candidate, ImproverPolicy::Faithful).unwrap();
            let exact = inst.verify().unwrap();
            let float =
                paretolab_core::equilibrium::verify_equilibrium(&s.economy, &s.candidate).unwrap();
            assert_eq!(exact.holds(), float.holds(), "{name}: {:?}", exact.failures);
            assert_eq!(exact.market, float.market.holds, "{name}");
            assert_eq!(exact.optimality, float.optimality.holds, "{name}");
            assert_eq!(exact.tools, float.tools.holds, "{name}");
            assert_eq!(
                exact.accountability, float.accountability.holds,
                "{name}"
            );
        }
    }

    #[test]
    fn log_linear_welfare_is_rejected() {
        let mut s = scenario("classical_e0").unwrap();
        s.economy.welfare.insert(
            EntityId::new("h1"),
            WelfareFunction::log_linear(vec![1.0, 1.0], 1.0),
        );
        let err = match ExactInstance::build(&s.economy, &s.candidate, ImproverPolicy::Faithful) {
            Err(e) => e,
            Ok(_) => panic!("expected log-linear welfare to be rejected"),
        };
        assert!(err.to_string().contains("log-linear"), "{err}");
    }
}
