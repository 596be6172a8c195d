//! Exhaustive Pareto-improvement search and local-nonsatiation scans.
//!
//! The improvement oracle asks, for a feasible candidate allocation and a
//! fixed institutional state, whether any other feasible allocation makes
//! every welfare-bearing entity at least as well off and at least one
//! strictly better off. The scan is exhaustive over the finite allocation
//! space and reports the lexicographically first improver it finds, so a
//! verdict is both sound and reproducible.
//!
//! Rights coordinates constrain the search: protected holdings and plain
//! assignments are not transferable, so improvers must hold them at the
//! candidate's values. How reassignable assignments are treated is a policy
//! choice exposed to the caller.
//!
//! The local-nonsatiation scan classifies each grid point of a welfare
//! function as `pass` (a strictly better point lies within the radius),
//! `frontier` (no such point, but the radius ball leaves the grid's
//! bounding box, so the grid may simply end too soon), or `fail` (interior
//! satiation the grid cannot excuse).

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::economy::{Bundle, Economy, EntityId, Grid, RightsTag, StateId};
use crate::feasibility::{for_each_feasible, is_feasible, Allocation};
use crate::welfare::WelfareFunction;
use crate::{Error, Result, TOL};

/// Which rights coordinates an improving allocation may move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImproverPolicy {
    /// Priced and reassignable-assigned coordinates may move; protected and
    /// plainly assigned ones stay pinned at the candidate's values.
    Faithful,
    /// Only priced coordinates may move. This mirrors exactly what a budget
    /// set at fixed prices lets an entity change.
    BudgetAligned,
}

impl ImproverPolicy {
    fn pins(self, tag: RightsTag) -> bool {
        match self {
            ImproverPolicy::Faithful => matches!(
                tag,
                RightsTag::Protected | RightsTag::Assigned { reassignable: false }
            ),
            ImproverPolicy::BudgetAligned => !matches!(tag, RightsTag::Priced),
        }
    }
}

/// A feasible allocation that dominates the candidate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Improver {
    pub allocation: Allocation,
    /// Welfare delta per welfare-bearing entity.
    pub gains: BTreeMap<EntityId, f64>,
    /// The bearing entities made strictly better off.
    pub strict: Vec<EntityId>,
}

/// Search every feasible allocation for a Pareto improvement over
/// `candidate` at `state`, honoring the rights policy. Returns the
/// lexicographically first improver, or `None` when the candidate is
/// efficient. The candidate itself must be feasible.
pub fn find_improver(
    e: &Economy,
    candidate: &Allocation,
    state: &StateId,
    policy: ImproverPolicy,
    cap: u64,
) -> Result<Option<Improver>> {
    if e.state(state).is_none() {
        return Err(Error::UnknownState(state.clone()));
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
            base.push(Some(e.eval_welfare(&ent.id, &candidate.0[i], state)?));
        } else {
            base.push(None);
        }
    }
    // Rights coordinates each entity must keep at the candidate's value.
    let pinned: Vec<Vec<usize>> = e
        .rights_class
        .iter()
        .map(|tags| {
            tags.iter()
                .enumerate()
                .filter(|(_, tag)| policy.pins(**tag))
                .map(|(r, _)| e.lx + r)
                .collect()
        })
        .collect();

    let mut found: Option<Improver> = None;
    for_each_feasible(e, cap, |bundles| {
        for (i, b) in bundles.iter().enumerate() {
            for &k in &pinned[i] {
                if (b.0[k] - candidate.0[i].0[k]).abs() > TOL {
                    return ControlFlow::Continue(());
                }
            }
        }
        let mut gains = BTreeMap::new();
        let mut strict = Vec::new();
        for (i, ent) in e.entities.iter().enumerate() {
            let Some(cur) = base[i] else { continue };
            let v = match e.eval_welfare(&ent.id, &bundles[i], state) {
                Ok(v) => v,
                Err(_) => return ControlFlow::Continue(()),
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
        found = Some(Improver {
            allocation: Allocation(bundles.to_vec()),
            gains,
            strict,
        });
        ControlFlow::Break(())
    })?;
    Ok(found)
}

/// Convenience wrapper: `true` when no improver exists.
pub fn is_efficient(
    e: &Economy,
    candidate: &Allocation,
    state: &StateId,
    policy: ImproverPolicy,
    cap: u64,
) -> Result<bool> {
    Ok(find_improver(e, candidate, state, policy, cap)?.is_none())
}

/// The efficiency verdicts of one allocation under two readings of who
/// bears welfare.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaComparison {
    pub bearing_a: Vec<EntityId>,
    pub bearing_b: Vec<EntityId>,
    pub improver_a: Option<Improver>,
    pub improver_b: Option<Improver>,
    /// Whether the two readings reach the same efficiency verdict.
    pub agree: bool,
}

/// Run the improvement oracle on the same allocation under two economies
/// that differ in their status assignments, and report whether the
/// efficiency verdict survives the change of reading. The two economies
/// must declare the same entities in the same order; everything else,
/// including the records a status requires, may differ.
pub fn compare_status_assignments(
    a: &Economy,
    b: &Economy,
    allocation: &Allocation,
    state: &StateId,
    policy: ImproverPolicy,
    cap: u64,
) -> Result<SigmaComparison> {
    if a.entities.len() != b.entities.len()
        || a.entities
            .iter()
            .zip(&b.entities)
            .any(|(x, y)| x.id != y.id)
    {
        return Err(Error::Unsupported(
            "status comparison requires the same entity roster in both economies".into(),
        ));
    }
    let improver_a = find_improver(a, allocation, state, policy, cap)?;
    let improver_b = find_improver(b, allocation, state, policy, cap)?;
    let agree = improver_a.is_none() == improver_b.is_none();
    Ok(SigmaComparison {
        bearing_a: a.welfare_bearing().into_iter().collect(),
        bearing_b: b.welfare_bearing().into_iter().collect(),
        improver_a,
        improver_b,
        agree,
    })
}

/// Verdict of the local-nonsatiation scan at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LnsVerdict {
    /// A strictly better grid point lies within the radius.
    Pass,
    /// No improver, but the radius ball leaves the grid's bounding box, so
    /// the finite grid cannot rule out a better point just outside.
    Frontier,
    /// No improver and the ball stays inside the box: interior satiation.
    Fail,
}

/// One scanned grid point with its verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LnsPoint {
    pub point: Bundle,
    pub verdict: LnsVerdict,
    /// The lexicographically first improving point, when the verdict passes.
    pub improver: Option<Bundle>,
}

/// Full scan result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LnsReport {
    pub radius: f64,
    pub points: Vec<LnsPoint>,
}

impl LnsReport {
    /// Local nonsatiation holds when no point fails outright.
    pub fn holds(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.verdict != LnsVerdict::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LnsPoint> {
        self.points
            .iter()
            .filter(|p| p.verdict == LnsVerdict::Fail)
    }

    pub fn count(&self, verdict: LnsVerdict) -> usize {
        self.points.iter().filter(|p| p.verdict == verdict).count()
    }
}

/// Scan every grid point for local nonsatiation of `w` at `state`.
///
/// The default radius is one maximal grid step times the square root of the
/// dimension, enough to reach every neighbor across a grid diagonal. An
/// explicit radius smaller than the maximal step is rejected: such a ball
/// can contain no neighbor, so every interior point would fail vacuously.
/// A singleton grid is all boundary and its point is classed `frontier`.
pub fn lns_scan(
    w: &WelfareFunction,
    grid: &Grid,
    state: &StateId,
    radius: Option<f64>,
) -> Result<LnsReport> {
    let step = grid.max_step();
    let radius = radius.unwrap_or_else(|| step * (grid.dim() as f64).sqrt());
    if radius + TOL < step {
        return Err(Error::RadiusTooSmall { radius, step });
    }
    let points: Vec<Bundle> = grid.iter().collect();
    let values: Vec<f64> = points
        .iter()
        .map(|p| w.eval(p, state))
        .collect::<std::result::Result<_, _>>()
        .map_err(|err| Error::EvalFailed {
            entity: EntityId::new("<scan>"),
            detail: err.to_string(),
        })?;
    let (lo, hi) = grid.bounding_box();
    let mut out = Vec::with_capacity(points.len());
    for (i, z) in points.iter().enumerate() {
        let improver = points
            .iter()
            .enumerate()
            .find(|(j, p)| {
                *j != i && z.distance(p) <= radius + TOL && values[*j] > values[i] + TOL
            })
            .map(|(_, p)| p.clone());
        let verdict = if improver.is_some() {
            LnsVerdict::Pass
        } else if points.len() == 1 || ball_exits_box(z, radius, &lo, &hi) {
            LnsVerdict::Frontier
        } else {
            LnsVerdict::Fail
        };
        out.push(LnsPoint {
            point: z.clone(),
            verdict,
            improver,
        });
    }
    Ok(LnsReport {
        radius,
        points: out,
    })
}

fn ball_exits_box(z: &Bundle, radius: f64, lo: &[f64], hi: &[f64]) -> bool {
    z.0.iter()
        .enumerate()
        .any(|(k, v)| v - radius < lo[k] - TOL || v + radius > hi[k] + TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{
        Economy, Entity, FeasibilitySpec, InstitutionalState, Status, StatusAssignment,
    };

    fn two_agent_economy(w1: Vec<f64>, w2: Vec<f64>) -> Economy {
        let entities = vec![Entity::human("h1"), Entity::human("h2")];
        let sigma =
            StatusAssignment::from_pairs([("h1", Status::Agent), ("h2", Status::Agent)]);
        let welfare: BTreeMap<EntityId, WelfareFunction> = [
            (EntityId::new("h1"), WelfareFunction::linear(w1)),
            (EntityId::new("h2"), WelfareFunction::linear(w2)),
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
            states: vec![InstitutionalState::bare("s0")],
            welfare,
            delegates: vec![],
            channels: vec![],
            feasibility: FeasibilitySpec::exchange(vec![4.0, 4.0]),
            attributes: vec![],
        }
    }

    fn s0() -> StateId {
        StateId::new("s0")
    }

    #[test]
    fn equal_split_under_common_weights_is_efficient() {
        let e = two_agent_economy(vec![1.0, 1.0], vec![1.0, 1.0]);
        let candidate = Allocation(vec![
            Bundle::new(vec![2.0, 2.0]),
            Bundle::new(vec![2.0, 2.0]),
        ]);
        let improver =
            find_improver(&e, &candidate, &s0(), ImproverPolicy::Faithful, 100_000).unwrap();
        assert_eq!(improver, None);
    }

    #[test]
    fn crossed_tastes_yield_the_lex_first_improver() {
        let e = two_agent_economy(vec![2.0, 1.0], vec![1.0, 2.0]);
        let candidate = Allocation(vec![
            Bundle::new(vec![0.0, 4.0]),
            Bundle::new(vec![4.0, 0.0]),
        ]);
        let improver = find_improver(&e, &candidate, &s0(), ImproverPolicy::Faithful, 100_000)
            .unwrap()
            .expect("crossed allocation should be dominated");
        assert_eq!(improver.allocation.0[0], Bundle::new(vec![1.0, 2.0]));
        assert_eq!(improver.allocation.0[1], Bundle::new(vec![3.0, 2.0]));
        assert_eq!(improver.strict, vec![EntityId::new("h2")]);
        assert_eq!(improver.gains[&EntityId::new("h1")], 0.0);
        assert!((improver.gains[&EntityId::new("h2")] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_candidate_is_an_error() {
        let e = two_agent_economy(vec![1.0, 1.0], vec![1.0, 1.0]);
        let candidate = Allocation(vec![
            Bundle::new(vec![4.0, 4.0]),
            Bundle::new(vec![4.0, 4.0]),
        ]);
        let err =
            find_improver(&e, &candidate, &s0(), ImproverPolicy::Faithful, 100_000).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    fn rights_economy(tag: RightsTag) -> (Economy, Allocation) {
        let entities = vec![Entity::human("h1"), Entity::human("h2")];
        let sigma =
            StatusAssignment::from_pairs([("h1", Status::Agent), ("h2", Status::Agent)]);
        let axes = vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]];
        let welfare: BTreeMap<EntityId, WelfareFunction> = [
            (EntityId::new("h1"), WelfareFunction::linear(vec![1.0, 0.0])),
            (EntityId::new("h2"), WelfareFunction::linear(vec![1.0, 2.0])),
        ]
        .into_iter()
        .collect();
        let e = Economy {
            lx: 1,
            lr: 1,
            entities,
            sigma,
            grids: vec![Grid::lattice(axes.clone()), Grid::lattice(axes)],
            rights_class: vec![vec![tag], vec![tag]],
            states: vec![InstitutionalState::bare("s0")],
            welfare,
            delegates: vec![],
            channels: vec![],
            feasibility: FeasibilitySpec::exchange(vec![2.0, 1.0]),
            attributes: vec![],
        };
        let candidate = Allocation(vec![
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 0.0]),
        ]);
        (e, candidate)
    }

    #[test]
    fn plain_assignment_pins_the_rights_coordinate() {
        let (e, candidate) = rights_economy(RightsTag::Assigned {
            reassignable: false,
        });
        let improver =
            find_improver(&e, &candidate, &s0(), ImproverPolicy::Faithful, 100_000).unwrap();
        assert_eq!(improver, None, "pinned right must block the transfer");
    }

    #[test]
    fn reassignable_assignment_moves_only_under_faithful_policy() {
        let (e, candidate) = rights_economy(RightsTag::Assigned { reassignable: true });
        let faithful =
            find_improver(&e, &candidate, &s0(), ImproverPolicy::Faithful, 100_000).unwrap();
        let improver = faithful.expect("reassignable right should move to h2");
        assert_eq!(improver.allocation.0[1], Bundle::new(vec![1.0, 1.0]));
        assert_eq!(improver.strict, vec![EntityId::new("h2")]);
        let aligned =
            find_improver(&e, &candidate, &s0(), ImproverPolicy::BudgetAligned, 100_000).unwrap();
        assert_eq!(aligned, None);
    }

    #[test]
    fn priced_right_moves_under_both_policies() {
        let (e, candidate) = rights_economy(RightsTag::Priced);
        for policy in [ImproverPolicy::Faithful, ImproverPolicy::BudgetAligned] {
            let improver = find_improver(&e, &candidate, &s0(), policy, 100_000).unwrap();
            assert!(improver.is_some(), "policy {policy:?}");
        }
    }

    #[test]
    fn contested_status_flips_the_verdict() {
        use crate::economy::DelegateSpec;
        let entities = vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("a1"),
        ];
        let welfare: BTreeMap<EntityId, WelfareFunction> = ["h1", "h2", "a1"]
            .into_iter()
            .map(|id| (EntityId::new(id), WelfareFunction::linear(vec![1.0, 1.0])))
            .collect();
        let base = Economy {
            lx: 2,
            lr: 0,
            entities,
            sigma: StatusAssignment::from_pairs([
                ("h1", Status::Agent),
                ("h2", Status::Agent),
                ("a1", Status::Agent),
            ]),
            grids: vec![Grid::cube(2, 4), Grid::cube(2, 4), Grid::cube(2, 4)],
            rights_class: vec![vec![], vec![], vec![]],
            states: vec![InstitutionalState::bare("s0")],
            welfare,
            delegates: vec![],
            channels: vec![],
            feasibility: FeasibilitySpec::exchange(vec![3.0, 3.0]),
            attributes: vec![],
        };
        let mut twin = base.clone();
        twin.sigma.set(EntityId::new("a1"), Status::Delegate);
        twin.delegates.push(DelegateSpec {
            delegate: EntityId::new("a1"),
            principal: EntityId::new("h1"),
            predecessor: None,
            objective: WelfareFunction::linear(vec![1.0, 1.0]),
            agency_cost: None,
        });
        let allocation = Allocation(vec![
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 1.0]),
        ]);
        let cmp = compare_status_assignments(
            &base,
            &twin,
            &allocation,
            &s0(),
            ImproverPolicy::Faithful,
            100_000,
        )
        .unwrap();
        assert_eq!(cmp.improver_a, None);
        let taken = cmp.improver_b.expect("unrecognized welfare frees a1's goods");
        assert!(!taken.strict.is_empty());
        assert!(!cmp.agree);
        assert_eq!(cmp.bearing_a.len(), 3);
        assert_eq!(cmp.bearing_b.len(), 2);
    }

    #[test]
    fn lns_holds_for_monotone_linear_welfare() {
        let w = WelfareFunction::linear(vec![1.0, 1.0]);
        let grid = Grid::cube(2, 5);
        let report = lns_scan(&w, &grid, &s0(), None).unwrap();
        assert!(report.holds());
        assert_eq!(report.count(LnsVerdict::Fail), 0);
        assert!(report.count(LnsVerdict::Pass) > 0);
        let top = report
            .points
            .iter()
            .find(|p| p.point == Bundle::new(vec![4.0, 4.0]))
            .unwrap();
        assert_eq!(top.verdict, LnsVerdict::Frontier);
    }

    #[test]
    fn interior_satiation_fails_the_scan() {
        let grid = Grid::cube(2, 5);
        let entries: Vec<(Bundle, f64)> = grid
            .iter()
            .map(|b| {
                let d = (b.0[0] - 2.0).powi(2) + (b.0[1] - 2.0).powi(2);
                (b, -d)
            })
            .collect();
        let w = WelfareFunction::tabulated(entries);
        let report = lns_scan(&w, &grid, &s0(), None).unwrap();
        assert!(!report.holds());
        let fails: Vec<&LnsPoint> = report.failures().collect();
        assert_eq!(fails.len(), 1);
        assert_eq!(fails[0].point, Bundle::new(vec![2.0, 2.0]));
    }

    #[test]
    fn undersized_radius_is_rejected() {
        let w = WelfareFunction::linear(vec![1.0, 1.0]);
        let grid = Grid::cube(2, 5);
        let err = lns_scan(&w, &grid, &s0(), Some(0.5)).unwrap_err();
        assert!(matches!(err, Error::RadiusTooSmall { .. }));
    }

    #[test]
    fn singleton_grid_is_all_frontier() {
        let w = WelfareFunction::linear(vec![1.0]);
        let grid = Grid::singleton(Bundle::new(vec![1.0]));
        let report = lns_scan(&w, &grid, &s0(), None).unwrap();
        assert!(report.holds());
        assert_eq!(report.points[0].verdict, LnsVerdict::Frontier);
    }
}
