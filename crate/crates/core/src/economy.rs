//! Entities, statuses, grids, rights, institutional states, and the economy
//! record itself.
//!
//! An economy couples a finite entity roster with finite per-entity bundle
//! grids over a shared coordinate space of `lx` consumption coordinates
//! followed by `lr` rights coordinates. Institutional facts (protections,
//! verified attributes, governed channels, internalized delegates, liability)
//! live in explicitly declared states; nothing is implicit.
//!
//! [`validate_economy`] checks every structural invariant and returns the
//! full list of violations as data. Analysis operations elsewhere in the
//! crate assume a validated economy and treat residual structural problems as
//! errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::welfare::WelfareFunction;
use crate::{MIN_GRID_GAP, TOL};

/// Opaque entity identifier. Ordering is lexicographic on the underlying id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Institutional state identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(id: impl Into<String>) -> Self {
        StateId(id.into())
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Action-channel identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ChannelId(pub String);

impl ChannelId {
    pub fn new(id: impl Into<String>) -> Self {
        ChannelId(id.into())
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Label of one action available on a channel.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ActionLabel(pub String);

impl ActionLabel {
    pub fn new(id: impl Into<String>) -> Self {
        ActionLabel(id.into())
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Entity status. Tools are fixed technology, delegates act on behalf of a
/// principal, agents and welfare-subjects bear welfare in their own right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Tool,
    Delegate,
    Agent,
    Ws,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Tool => "tool",
            Status::Delegate => "delegate",
            Status::Agent => "agent",
            Status::Ws => "ws",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "tool" => Some(Status::Tool),
            "delegate" => Some(Status::Delegate),
            "agent" => Some(Status::Agent),
            "ws" => Some(Status::Ws),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One participant in the economy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entity {
    pub id: EntityId,
    pub human: bool,
    /// Set when the entity is modeled as able to move quoted prices.
    /// Any flagged entity defeats the price-taking condition.
    pub price_setter: bool,
}

impl Entity {
    pub fn human(id: impl Into<String>) -> Self {
        Entity {
            id: EntityId::new(id),
            human: true,
            price_setter: false,
        }
    }

    pub fn artificial(id: impl Into<String>) -> Self {
        Entity {
            id: EntityId::new(id),
            human: false,
            price_setter: false,
        }
    }
}

/// Total-in-intent map from entities to statuses. Kept as a map so that a
/// partial assignment is representable and reportable.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StatusAssignment {
    map: BTreeMap<EntityId, Status>,
}

impl StatusAssignment {
    pub fn new() -> Self {
        StatusAssignment::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Status)>,
        S: Into<String>,
    {
        StatusAssignment {
            map: pairs
                .into_iter()
                .map(|(id, st)| (EntityId::new(id), st))
                .collect(),
        }
    }

    pub fn set(&mut self, id: EntityId, status: Status) {
        self.map.insert(id, status);
    }

    pub fn get(&self, id: &EntityId) -> Option<Status> {
        self.map.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, Status)> {
        self.map.iter().map(|(id, st)| (id, *st))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// The welfare-bearing set: every human plus every artificial entity whose
/// status is agent or welfare-subject. Humans bear welfare regardless of any
/// status the assignment may record for them.
pub fn welfare_bearing_set(entities: &[Entity], sigma: &StatusAssignment) -> BTreeSet<EntityId> {
    entities
        .iter()
        .filter(|ent| {
            ent.human
                || matches!(
                    sigma.get(&ent.id),
                    Some(Status::Agent) | Some(Status::Ws)
                )
        })
        .map(|ent| ent.id.clone())
        .collect()
}

/// A point in the shared coordinate space: `lx` consumption coordinates
/// followed by `lr` rights coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Bundle(pub Vec<f64>);

impl Bundle {
    pub fn new(coords: Vec<f64>) -> Self {
        Bundle(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Bundle(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Bundle) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &Bundle) -> Bundle {
        Bundle(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Bundle) -> Bundle {
        Bundle(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn midpoint(&self, other: &Bundle) -> Bundle {
        Bundle(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a + b) / 2.0)
                .collect(),
        )
    }

    pub fn approx_eq(&self, other: &Bundle, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Total lexicographic order treating coordinates within `TOL` as equal.
    pub fn lex_cmp(&self, other: &Bundle) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            if (a - b).abs() <= TOL {
                continue;
            }
            return a.total_cmp(b);
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Finite set of admissible bundles for one entity, in canonical order.
///
/// Both representations are normalized on construction: lattice axes are
/// sorted ascending with near-duplicates removed, explicit point lists are
/// sorted lexicographically and deduplicated. Canonical order is
/// lexicographic by coordinate, which for a lattice coincides with row-major
/// order with the first coordinate most significant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Grid {
    Lattice { axes: Vec<Vec<f64>> },
    Points { points: Vec<Bundle> },
}

impl Grid {
    pub fn lattice(axes: Vec<Vec<f64>>) -> Self {
        let axes = axes
            .into_iter()
            .map(|mut axis| {
                axis.sort_by(f64::total_cmp);
                axis.dedup_by(|a, b| (*a - *b).abs() <= TOL);
                axis
            })
            .collect();
        Grid::Lattice { axes }
    }

    /// Uniform integer-step lattice `{0, 1, ..., side - 1}` in every
    /// coordinate.
    pub fn cube(dim: usize, side: usize) -> Self {
        let axis: Vec<f64> = (0..side).map(|v| v as f64).collect();
        Grid::lattice(vec![axis; dim])
    }

    pub fn points(points: Vec<Bundle>) -> Self {
        let mut points = points;
        points.sort_by(|a, b| a.lex_cmp(b));
        points.dedup_by(|a, b| a.approx_eq(b, TOL));
        Grid::Points { points }
    }

    pub fn singleton(point: Bundle) -> Self {
        Grid::Points {
            points: vec![point],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::Lattice { axes } => axes.len(),
            Grid::Points { points } => points.first().map_or(0, Bundle::dim),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Lattice { axes } => axes.iter().map(Vec::len).product(),
            Grid::Points { points } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_singleton(&self) -> bool {
        self.len() == 1
    }

    /// Point at canonical index. Panics if out of range.
    pub fn point(&self, idx: usize) -> Bundle {
        match self {
            Grid::Lattice { axes } => {
                let mut rem = idx;
                let mut coords = vec![0.0; axes.len()];
                for k in (0..axes.len()).rev() {
                    let n = axes[k].len();
                    coords[k] = axes[k][rem % n];
                    rem /= n;
                }
                debug_assert_eq!(rem, 0, "lattice index out of range");
                Bundle(coords)
            }
            Grid::Points { points } => points[idx].clone(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Bundle> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Canonical index of a bundle, using tolerance `TOL` per coordinate.
    pub fn find(&self, b: &Bundle) -> Option<usize> {
        if b.dim() != self.dim() {
            return None;
        }
        match self {
            Grid::Lattice { axes } => {
                let mut idx = 0usize;
                for (k, axis) in axes.iter().enumerate() {
                    let pos = axis
                        .binary_search_by(|v| {
                            if (v - b.0[k]).abs() <= TOL {
                                std::cmp::Ordering::Equal
                            } else {
                                v.total_cmp(&b.0[k])
                            }
                        })
                        .ok()?;
                    idx = idx * axis.len() + pos;
                }
                Some(idx)
            }
            Grid::Points { points } => points
                .binary_search_by(|p| {
                    let ord = p.lex_cmp(b);
                    if p.approx_eq(b, TOL) {
                        std::cmp::Ordering::Equal
                    } else {
                        ord
                    }
                })
                .ok(),
        }
    }

    pub fn contains(&self, b: &Bundle) -> bool {
        self.find(b).is_some()
    }

    /// Componentwise bounding box `(mins, maxs)` of the grid.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Grid::Lattice { axes } => (
                axes.iter().map(|a| *a.first().unwrap_or(&0.0)).collect(),
                axes.iter().map(|a| *a.last().unwrap_or(&0.0)).collect(),
            ),
            Grid::Points { points } => {
                let dim = self.dim();
                let mut mins = vec![f64::INFINITY; dim];
                let mut maxs = vec![f64::NEG_INFINITY; dim];
                for p in points {
                    for k in 0..dim {
                        mins[k] = mins[k].min(p.0[k]);
                        maxs[k] = maxs[k].max(p.0[k]);
                    }
                }
                (mins, maxs)
            }
        }
    }

    /// Largest gap between consecutive distinct values in any coordinate;
    /// zero for singletons. Used as the notion of "one grid step".
    pub fn max_step(&self) -> f64 {
        let dim = self.dim();
        let mut step = 0.0f64;
        for k in 0..dim {
            let mut values: Vec<f64> = match self {
                Grid::Lattice { axes } => axes[k].clone(),
                Grid::Points { points } => points.iter().map(|p| p.0[k]).collect(),
            };
            values.sort_by(f64::total_cmp);
            values.dedup_by(|a, b| (*a - *b).abs() <= TOL);
            for w in values.windows(2) {
                step = step.max(w[1] - w[0]);
            }
        }
        step
    }

    /// Smallest gap between distinct values in any coordinate; infinity when
    /// no coordinate takes two values. Grid soundness requires this to stay
    /// above [`MIN_GRID_GAP`].
    pub fn min_gap(&self) -> f64 {
        let dim = self.dim();
        let mut gap = f64::INFINITY;
        for k in 0..dim {
            let mut values: Vec<f64> = match self {
                Grid::Lattice { axes } => axes[k].clone(),
                Grid::Points { points } => points.iter().map(|p| p.0[k]).collect(),
            };
            values.sort_by(f64::total_cmp);
            values.dedup_by(|a, b| (*a - *b).abs() <= TOL);
            for w in values.windows(2) {
                gap = gap.min(w[1] - w[0]);
            }
        }
        gap
    }
}

/// Classification of one rights coordinate for one entity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RightsTag {
    /// Traded against the price system like any consumption coordinate.
    Priced,
    /// Held at an assigned level; a reassignable assignment may be moved by
    /// the feasibility oracle, a plain one may not.
    Assigned { reassignable: bool },
    /// Held fixed and backed by a protection flag in the institutional state.
    Protected,
}

impl RightsTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RightsTag::Priced => "priced",
            RightsTag::Assigned { reassignable: false } => "assigned",
            RightsTag::Assigned { reassignable: true } => "assigned-reassignable",
            RightsTag::Protected => "protected",
        }
    }

    pub fn parse(s: &str) -> Option<RightsTag> {
        match s {
            "priced" => Some(RightsTag::Priced),
            "assigned" => Some(RightsTag::Assigned { reassignable: false }),
            "assigned-reassignable" => Some(RightsTag::Assigned { reassignable: true }),
            "protected" => Some(RightsTag::Protected),
            _ => None,
        }
    }
}

impl fmt::Display for RightsTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exchange-relevant attribute dimensions that may require their own price
/// coordinates or institutional verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeKind {
    Provenance,
    Liability,
    Quality,
    Alignment,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Provenance => "provenance",
            AttributeKind::Liability => "liability",
            AttributeKind::Quality => "quality",
            AttributeKind::Alignment => "alignment",
        }
    }

    pub fn parse(s: &str) -> Option<AttributeKind> {
        match s {
            "provenance" => Some(AttributeKind::Provenance),
            "liability" => Some(AttributeKind::Liability),
            "quality" => Some(AttributeKind::Quality),
            "alignment" => Some(AttributeKind::Alignment),
            _ => None,
        }
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declaration of an exchange attribute: its distinct values and, per value,
/// the price coordinate that carries it (if any).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeDecl {
    pub kind: AttributeKind,
    pub values: Vec<String>,
    /// Value name to price-coordinate index. Values missing here own no
    /// price coordinate; two values sharing one index are pooled.
    pub price_coords: BTreeMap<String, usize>,
}

/// One institutional state: a complete record of the governance facts the
/// analysis may rely on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstitutionalState {
    pub id: StateId,
    pub governed_channels: BTreeSet<ChannelId>,
    pub verified_attributes: BTreeSet<AttributeKind>,
    /// Action label to liable entity. When nonempty it must cover every
    /// declared action label.
    pub liability: BTreeMap<ActionLabel, EntityId>,
    pub internalized_delegates: BTreeSet<EntityId>,
    /// Protection flags backing `protected` rights tags, keyed by entity and
    /// rights-coordinate index.
    pub protected_rights: BTreeSet<(EntityId, usize)>,
}

impl InstitutionalState {
    pub fn bare(id: impl Into<String>) -> Self {
        InstitutionalState {
            id: StateId::new(id),
            governed_channels: BTreeSet::new(),
            verified_attributes: BTreeSet::new(),
            liability: BTreeMap::new(),
            internalized_delegates: BTreeSet::new(),
            protected_rights: BTreeSet::new(),
        }
    }
}

/// Delegation record: who acts, for whom, with what objective, and at what
/// declared agency cost when internalized.
#[derive(Clone, Debug, PartialEq)]
pub struct DelegateSpec {
    pub delegate: EntityId,
    /// Ultimate principal; must be welfare-bearing.
    pub principal: EntityId,
    /// Immediate delegator when this delegate sits in a chain. `None` means
    /// the principal delegated directly.
    pub predecessor: Option<EntityId>,
    /// The objective the delegate actually optimizes, defined over the
    /// principal's bundle domain.
    pub objective: WelfareFunction,
    /// Nonnegative cost schedule over the principal's bundle domain,
    /// required whenever the delegate is internalized.
    pub agency_cost: Option<WelfareFunction>,
}

/// One influence channel: an actor whose actions shift a target's welfare
/// directly, without passing through the target's bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionChannel {
    pub id: ChannelId,
    pub actor: EntityId,
    pub target: EntityId,
    /// Declared action set, including the null action.
    pub actions: Vec<ActionLabel>,
    /// The action with no effect anywhere; switching a channel "off".
    pub null_action: ActionLabel,
    /// The action taken in the situation under analysis.
    pub realized: ActionLabel,
    /// Welfare delta on the target per (action, state); absent means zero.
    pub effects: BTreeMap<(ActionLabel, StateId), f64>,
    /// Whether the channel's effects are compensated by recorded transfers.
    pub compensated: bool,
    /// Transfer schedule credited to the target (and debited from a
    /// welfare-bearing actor) per action. Required when compensated.
    pub tau: Option<BTreeMap<ActionLabel, f64>>,
}

impl ActionChannel {
    pub fn effect(&self, action: &ActionLabel, state: &StateId) -> f64 {
        self.effects
            .get(&(action.clone(), state.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn transfer(&self, action: &ActionLabel) -> f64 {
        self.tau
            .as_ref()
            .and_then(|t| t.get(action))
            .copied()
            .unwrap_or(0.0)
    }
}

/// How aggregate resource balance is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityMode {
    /// The allocation total must exactly match an achievable net supply.
    ExactBalance,
    /// The allocation total may fall componentwise below an achievable net
    /// supply.
    FreeDisposal,
}

impl FeasibilityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeasibilityMode::ExactBalance => "exact-balance",
            FeasibilityMode::FreeDisposal => "free-disposal",
        }
    }

    pub fn parse(s: &str) -> Option<FeasibilityMode> {
        match s {
            "exact-balance" => Some(FeasibilityMode::ExactBalance),
            "free-disposal" => Some(FeasibilityMode::FreeDisposal),
            _ => None,
        }
    }
}

/// Endowment, finite production set, and balance mode.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilitySpec {
    pub omega: Vec<f64>,
    /// Finite explicit production set; must contain the zero vector. A
    /// vector `y` makes net supply `omega - y` achievable.
    pub production: Vec<Bundle>,
    pub mode: FeasibilityMode,
}

impl FeasibilitySpec {
    pub fn exchange(omega: Vec<f64>) -> Self {
        let dim = omega.len();
        FeasibilitySpec {
            omega,
            production: vec![Bundle::zeros(dim)],
            mode: FeasibilityMode::ExactBalance,
        }
    }

    /// Achievable net supplies `omega - y`, deduplicated, in lexicographic
    /// order.
    pub fn net_supplies(&self) -> Vec<Bundle> {
        let omega = Bundle(self.omega.clone());
        let mut out: Vec<Bundle> = self.production.iter().map(|y| omega.sub(y)).collect();
        out.sort_by(|a, b| a.lex_cmp(b));
        out.dedup_by(|a, b| a.approx_eq(b, TOL));
        out
    }
}

/// The complete economy record.
#[derive(Clone, Debug, PartialEq)]
pub struct Economy {
    /// Number of consumption coordinates.
    pub lx: usize,
    /// Number of rights coordinates.
    pub lr: usize,
    pub entities: Vec<Entity>,
    pub sigma: StatusAssignment,
    /// Per-entity admissible grid, aligned with `entities`.
    pub grids: Vec<Grid>,
    /// Per-entity rights classification, aligned with `entities`; each inner
    /// vector has length `lr`.
    pub rights_class: Vec<Vec<RightsTag>>,
    pub states: Vec<InstitutionalState>,
    /// Welfare functions keyed by entity. Required for welfare-bearing
    /// entities; permitted for others (used when a different status
    /// assignment makes them bearing).
    pub welfare: BTreeMap<EntityId, WelfareFunction>,
    pub delegates: Vec<DelegateSpec>,
    pub channels: Vec<ActionChannel>,
    pub feasibility: FeasibilitySpec,
    pub attributes: Vec<AttributeDecl>,
}

impl Economy {
    pub fn dim(&self) -> usize {
        self.lx + self.lr
    }

    pub fn index_of(&self, id: &EntityId) -> Option<usize> {
        self.entities.iter().position(|ent| &ent.id == id)
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.iter().find(|ent| &ent.id == id)
    }

    pub fn grid_of(&self, id: &EntityId) -> Option<&Grid> {
        self.index_of(id).map(|i| &self.grids[i])
    }

    pub fn rights_of(&self, id: &EntityId) -> Option<&[RightsTag]> {
        self.index_of(id).map(|i| self.rights_class[i].as_slice())
    }

    pub fn status_of(&self, id: &EntityId) -> Option<Status> {
        self.sigma.get(id)
    }

    pub fn state(&self, id: &StateId) -> Option<&InstitutionalState> {
        self.states.iter().find(|s| &s.id == id)
    }

    pub fn channel(&self, id: &ChannelId) -> Option<&ActionChannel> {
        self.channels.iter().find(|c| &c.id == id)
    }

    pub fn delegate_spec(&self, id: &EntityId) -> Option<&DelegateSpec> {
        self.delegates.iter().find(|d| &d.delegate == id)
    }

    pub fn welfare_of(&self, id: &EntityId) -> Option<&WelfareFunction> {
        self.welfare.get(id)
    }

    pub fn welfare_bearing(&self) -> BTreeSet<EntityId> {
        welfare_bearing_set(&self.entities, &self.sigma)
    }

    pub fn is_welfare_bearing(&self, id: &EntityId) -> bool {
        self.entity(id).map_or(false, |ent| {
            ent.human
                || matches!(
                    self.sigma.get(id),
                    Some(Status::Agent) | Some(Status::Ws)
                )
        })
    }

    /// Welfare of `id` at `(bundle, state)`, insisting that the bundle lie on
    /// the entity's own grid.
    pub fn eval_welfare(
        &self,
        id: &EntityId,
        bundle: &Bundle,
        state: &StateId,
    ) -> crate::Result<f64> {
        let grid = self
            .grid_of(id)
            .ok_or_else(|| crate::Error::UnknownEntity(id.clone()))?;
        if !grid.contains(bundle) {
            return Err(crate::Error::OffGrid {
                entity: id.clone(),
                bundle: bundle.clone(),
            });
        }
        let w = self
            .welfare_of(id)
            .ok_or_else(|| crate::Error::EvalFailed {
                entity: id.clone(),
                detail: "no welfare function recorded".into(),
            })?;
        w.eval(bundle, state).map_err(|e| crate::Error::EvalFailed {
            entity: id.clone(),
            detail: e.to_string(),
        })
    }

    /// All declared action labels across channels, deduplicated.
    pub fn action_labels(&self) -> BTreeSet<ActionLabel> {
        self.channels
            .iter()
            .flat_map(|c| c.actions.iter().cloned())
            .collect()
    }
}

/// One structural violation found by [`validate_economy`].
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("economy must contain at least one human entity")]
    NoHuman,
    #[error("economy must contain at least one artificial entity")]
    NoArtificial,
    #[error("duplicate entity id {0}")]
    DuplicateEntity(EntityId),
    #[error("status assignment is missing entity {0}")]
    StatusMissing(EntityId),
    #[error("status assignment names unknown entity {0}")]
    StatusUnknown(EntityId),
    #[error("human entity {0} may not hold status {1}")]
    HumanStatus(EntityId, Status),
    #[error("{context} for entity {entity}: expected dimension {expected}, found {found}")]
    Dimension {
        entity: EntityId,
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("entity {0} has an empty admissible grid")]
    GridEmpty(EntityId),
    #[error("entity {0}: grid coordinate values closer than the resolution floor")]
    GridResolution(EntityId),
    #[error("tool {0} must have a singleton grid fixing its bundle")]
    ToolGrid(EntityId),
    #[error("welfare-bearing entity {0} has no welfare function")]
    WelfareMissing(EntityId),
    #[error("entity {entity}: welfare not evaluable at state {state}: {detail}")]
    WelfareEval {
        entity: EntityId,
        state: StateId,
        detail: String,
    },
    #[error("entity {0}: declared monotone but carries a non-positive weight")]
    MonotoneWeights(EntityId),
    #[error("economy declares no institutional states")]
    NoStates,
    #[error("duplicate state id {0}")]
    DuplicateState(StateId),
    #[error("state {state} references unknown {context} {id}")]
    StateReference {
        state: StateId,
        context: &'static str,
        id: String,
    },
    #[error("state {state}: liability map present but missing action label {action}")]
    LiabilityGap { state: StateId, action: ActionLabel },
    #[error("entity {0} has status delegate but no delegation record")]
    DelegateSpecMissing(EntityId),
    #[error("delegation record for {0} requires status delegate")]
    DelegateStatus(EntityId),
    #[error("duplicate delegation record for {0}")]
    DelegateDuplicate(EntityId),
    #[error("delegate {delegate}: principal {principal} is not welfare-bearing")]
    DelegatePrincipal {
        delegate: EntityId,
        principal: EntityId,
    },
    #[error("delegate {delegate}: predecessor chain does not resolve: {detail}")]
    DelegateChain { delegate: EntityId, detail: String },
    #[error(
        "delegate {delegate}: declared principal {declared} differs from resolved principal {resolved}"
    )]
    DelegateResolution {
        delegate: EntityId,
        declared: EntityId,
        resolved: EntityId,
    },
    #[error("delegate {delegate}: objective not evaluable on the principal grid: {detail}")]
    DelegateObjective { delegate: EntityId, detail: String },
    #[error("delegate {delegate}: agency cost must be nonnegative on the principal grid")]
    AgencyCostNegative { delegate: EntityId },
    #[error("duplicate channel id {0}")]
    ChannelDuplicate(ChannelId),
    #[error("channel {channel} references unknown {context} {id}")]
    ChannelReference {
        channel: ChannelId,
        context: &'static str,
        id: String,
    },
    #[error("channel {0}: actor and target must differ")]
    ChannelSelfLoop(ChannelId),
    #[error("channel {channel}: target {target} is not welfare-bearing")]
    ChannelTarget {
        channel: ChannelId,
        target: EntityId,
    },
    #[error("channel {channel}: null action must have zero effect at state {state}")]
    ChannelNullEffect { channel: ChannelId, state: StateId },
    #[error("channel {channel}: compensated but no transfer entry for action {action}")]
    ChannelTransferGap {
        channel: ChannelId,
        action: ActionLabel,
    },
    #[error("production set must contain the zero vector")]
    ProductionZero,
    #[error("attribute {kind}: {detail}")]
    Attribute { kind: AttributeKind, detail: String },
}

/// Outcome of structural validation: the complete violation list, in a
/// deterministic order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Walk the predecessor chain of `d` to the first non-delegate entity.
/// Returns the resolved ultimate principal, or a description of why the
/// chain does not resolve.
pub fn resolve_chain(e: &Economy, d: &EntityId) -> std::result::Result<EntityId, String> {
    let mut seen = BTreeSet::new();
    let mut current = d.clone();
    loop {
        if !seen.insert(current.clone()) {
            return Err(format!("cycle through {current}"));
        }
        let spec = match e.delegate_spec(&current) {
            Some(s) => s,
            None => return Ok(current),
        };
        let next = match &spec.predecessor {
            Some(p) => p.clone(),
            None => spec.principal.clone(),
        };
        if e.entity(&next).is_none() {
            return Err(format!("unknown predecessor {next}"));
        }
        if e.delegate_spec(&next).is_none() {
            return Ok(next);
        }
        current = next;
    }
}

/// Check every structural invariant of the economy and report all
/// violations. Pure and idempotent: the same economy always yields the same
/// report.
pub fn validate_economy(e: &Economy) -> ValidationReport {
    let mut v = Vec::new();
    let dim = e.dim();

    // Roster.
    if !e.entities.iter().any(|ent| ent.human) {
        v.push(Violation::NoHuman);
    }
    if !e.entities.iter().any(|ent| !ent.human) {
        v.push(Violation::NoArtificial);
    }
    let mut seen_ids = BTreeSet::new();
    for ent in &e.entities {
        if !seen_ids.insert(ent.id.clone()) {
            v.push(Violation::DuplicateEntity(ent.id.clone()));
        }
    }

    // Status assignment: total over the roster, nothing extraneous, humans
    // restricted to welfare-bearing statuses.
    for ent in &e.entities {
        match e.sigma.get(&ent.id) {
            None => v.push(Violation::StatusMissing(ent.id.clone())),
            Some(st) => {
                if ent.human && matches!(st, Status::Tool | Status::Delegate) {
                    v.push(Violation::HumanStatus(ent.id.clone(), st));
                }
            }
        }
    }
    for (id, _) in e.sigma.iter() {
        if e.entity(id).is_none() {
            v.push(Violation::StatusUnknown(id.clone()));
        }
    }

    // Grids and rights classifications, aligned with the roster.
    if e.grids.len() != e.entities.len() {
        v.push(Violation::Dimension {
            entity: EntityId::new("<roster>"),
            context: "grid list",
            expected: e.entities.len(),
            found: e.grids.len(),
        });
    }
    if e.rights_class.len() != e.entities.len() {
        v.push(Violation::Dimension {
            entity: EntityId::new("<roster>"),
            context: "rights classification list",
            expected: e.entities.len(),
            found: e.rights_class.len(),
        });
    }
    for (i, ent) in e.entities.iter().enumerate() {
        if let Some(grid) = e.grids.get(i) {
            if grid.is_empty() {
                v.push(Violation::GridEmpty(ent.id.clone()));
            } else {
                if grid.dim() != dim {
                    v.push(Violation::Dimension {
                        entity: ent.id.clone(),
                        context: "grid",
                        expected: dim,
                        found: grid.dim(),
                    });
                }
                if grid.min_gap() < MIN_GRID_GAP {
                    v.push(Violation::GridResolution(ent.id.clone()));
                }
                if e.sigma.get(&ent.id) == Some(Status::Tool) && !grid.is_singleton() {
                    v.push(Violation::ToolGrid(ent.id.clone()));
                }
            }
        }
        if let Some(tags) = e.rights_class.get(i) {
            if tags.len() != e.lr {
                v.push(Violation::Dimension {
                    entity: ent.id.clone(),
                    context: "rights classification",
                    expected: e.lr,
                    found: tags.len(),
                });
            }
        }
    }

    // States.
    if e.states.is_empty() {
        v.push(Violation::NoStates);
    }
    let mut seen_states = BTreeSet::new();
    let action_labels = e.action_labels();
    for s in &e.states {
        if !seen_states.insert(s.id.clone()) {
            v.push(Violation::DuplicateState(s.id.clone()));
        }
        for c in &s.governed_channels {
            if e.channel(c).is_none() {
                v.push(Violation::StateReference {
                    state: s.id.clone(),
                    context: "channel",
                    id: c.to_string(),
                });
            }
        }
        for d in &s.internalized_delegates {
            if e.delegate_spec(d).is_none() {
                v.push(Violation::StateReference {
                    state: s.id.clone(),
                    context: "delegate",
                    id: d.to_string(),
                });
            }
        }
        for (ent, coord) in &s.protected_rights {
            if e.entity(ent).is_none() {
                v.push(Violation::StateReference {
                    state: s.id.clone(),
                    context: "entity",
                    id: ent.to_string(),
                });
            } else if *coord >= e.lr {
                v.push(Violation::StateReference {
                    state: s.id.clone(),
                    context: "rights coordinate",
                    id: format!("{ent}#{coord}"),
                });
            }
        }
        if !s.liability.is_empty() {
            for label in &action_labels {
                if !s.liability.contains_key(label) {
                    v.push(Violation::LiabilityGap {
                        state: s.id.clone(),
                        action: label.clone(),
                    });
                }
            }
            for (label, bearer) in &s.liability {
                if !action_labels.contains(label) {
                    v.push(Violation::StateReference {
                        state: s.id.clone(),
                        context: "action label",
                        id: label.to_string(),
                    });
                }
                if e.entity(bearer).is_none() {
                    v.push(Violation::StateReference {
                        state: s.id.clone(),
                        context: "liable entity",
                        id: bearer.to_string(),
                    });
                }
            }
        }
    }

    // Welfare functions: present for every welfare-bearing entity and
    // evaluable over the owner's whole grid at every state.
    let bearing = e.welfare_bearing();
    for id in &bearing {
        if !e.welfare.contains_key(id) {
            v.push(Violation::WelfareMissing(id.clone()));
        }
    }
    for (id, w) in &e.welfare {
        let Some(idx) = e.index_of(id) else {
            v.push(Violation::StatusUnknown(id.clone()));
            continue;
        };
        if let Some(n) = w.arity() {
            if n != dim {
                v.push(Violation::Dimension {
                    entity: id.clone(),
                    context: "welfare weights",
                    expected: dim,
                    found: n,
                });
                continue;
            }
        }
        if w.declared_monotone && !w.weights_strictly_positive() {
            v.push(Violation::MonotoneWeights(id.clone()));
        }
        let Some(grid) = e.grids.get(idx) else {
            continue;
        };
        'states: for s in &e.states {
            for b in grid.iter() {
                if let Err(err) = w.eval(&b, &s.id) {
                    v.push(Violation::WelfareEval {
                        entity: id.clone(),
                        state: s.id.clone(),
                        detail: err.to_string(),
                    });
                    continue 'states;
                }
            }
        }
    }

    // Delegation records.
    let mut seen_delegates = BTreeSet::new();
    for ent in &e.entities {
        if e.sigma.get(&ent.id) == Some(Status::Delegate) && e.delegate_spec(&ent.id).is_none() {
            v.push(Violation::DelegateSpecMissing(ent.id.clone()));
        }
    }
    for spec in &e.delegates {
        if !seen_delegates.insert(spec.delegate.clone()) {
            v.push(Violation::DelegateDuplicate(spec.delegate.clone()));
            continue;
        }
        if e.entity(&spec.delegate).is_none() {
            v.push(Violation::StatusUnknown(spec.delegate.clone()));
            continue;
        }
        if e.sigma.get(&spec.delegate) != Some(Status::Delegate) {
            v.push(Violation::DelegateStatus(spec.delegate.clone()));
        }
        if e.entity(&spec.principal).is_none() {
            v.push(Violation::ChannelReference {
                channel: ChannelId::new("<delegation>"),
                context: "principal",
                id: spec.principal.to_string(),
            });
            continue;
        }
        if !bearing.contains(&spec.principal) {
            v.push(Violation::DelegatePrincipal {
                delegate: spec.delegate.clone(),
                principal: spec.principal.clone(),
            });
        }
        match resolve_chain(e, &spec.delegate) {
            Err(detail) => v.push(Violation::DelegateChain {
                delegate: spec.delegate.clone(),
                detail,
            }),
            Ok(resolved) => {
                if resolved != spec.principal {
                    v.push(Violation::DelegateResolution {
                        delegate: spec.delegate.clone(),
                        declared: spec.principal.clone(),
                        resolved,
                    });
                }
            }
        }
        if let Some(grid) = e.grid_of(&spec.principal) {
            let mut objective_ok = true;
            'obj: for s in &e.states {
                for b in grid.iter() {
                    if let Err(err) = spec.objective.eval(&b, &s.id) {
                        v.push(Violation::DelegateObjective {
                            delegate: spec.delegate.clone(),
                            detail: err.to_string(),
                        });
                        objective_ok = false;
                        break 'obj;
                    }
                }
            }
            let _ = objective_ok;
            if let Some(cost) = &spec.agency_cost {
                'cost: for s in &e.states {
                    for b in grid.iter() {
                        match cost.eval(&b, &s.id) {
                            Err(err) => {
                                v.push(Violation::DelegateObjective {
                                    delegate: spec.delegate.clone(),
                                    detail: format!("agency cost: {err}"),
                                });
                                break 'cost;
                            }
                            Ok(c) if c < -TOL => {
                                v.push(Violation::AgencyCostNegative {
                                    delegate: spec.delegate.clone(),
                                });
                                break 'cost;
                            }
                            Ok(_) => {}
                        }
                    }
                }
            }
        }
    }

    // Channels.
    let mut seen_channels = BTreeSet::new();
    for c in &e.channels {
        if !seen_channels.insert(c.id.clone()) {
            v.push(Violation::ChannelDuplicate(c.id.clone()));
            continue;
        }
        if e.entity(&c.actor).is_none() {
            v.push(Violation::ChannelReference {
                channel: c.id.clone(),
                context: "actor",
                id: c.actor.to_string(),
            });
        }
        if e.entity(&c.target).is_none() {
            v.push(Violation::ChannelReference {
                channel: c.id.clone(),
                context: "target",
                id: c.target.to_string(),
            });
            continue;
        }
        if c.actor == c.target {
            v.push(Violation::ChannelSelfLoop(c.id.clone()));
        }
        if !bearing.contains(&c.target) {
            v.push(Violation::ChannelTarget {
                channel: c.id.clone(),
                target: c.target.clone(),
            });
        }
        if !c.actions.contains(&c.null_action) {
            v.push(Violation::ChannelReference {
                channel: c.id.clone(),
                context: "null action",
                id: c.null_action.to_string(),
            });
        }
        if !c.actions.contains(&c.realized) {
            v.push(Violation::ChannelReference {
                channel: c.id.clone(),
                context: "realized action",
                id: c.realized.to_string(),
            });
        }
        for s in &e.states {
            if c.effect(&c.null_action, &s.id).abs() > TOL {
                v.push(Violation::ChannelNullEffect {
                    channel: c.id.clone(),
                    state: s.id.clone(),
                });
            }
        }
        for ((action, state), _) in &c.effects {
            if !c.actions.contains(action) {
                v.push(Violation::ChannelReference {
                    channel: c.id.clone(),
                    context: "effect action",
                    id: action.to_string(),
                });
            }
            if e.state(state).is_none() {
                v.push(Violation::ChannelReference {
                    channel: c.id.clone(),
                    context: "effect state",
                    id: state.to_string(),
                });
            }
        }
        if c.compensated {
            for action in &c.actions {
                let covered = c
                    .tau
                    .as_ref()
                    .map_or(false, |t| t.contains_key(action));
                if !covered {
                    v.push(Violation::ChannelTransferGap {
                        channel: c.id.clone(),
                        action: action.clone(),
                    });
                }
            }
        }
    }

    // Feasibility data.
    if e.feasibility.omega.len() != dim {
        v.push(Violation::Dimension {
            entity: EntityId::new("<feasibility>"),
            context: "endowment",
            expected: dim,
            found: e.feasibility.omega.len(),
        });
    }
    for y in &e.feasibility.production {
        if y.dim() != dim {
            v.push(Violation::Dimension {
                entity: EntityId::new("<feasibility>"),
                context: "production vector",
                expected: dim,
                found: y.dim(),
            });
        }
    }
    if !e
        .feasibility
        .production
        .iter()
        .any(|y| y.approx_eq(&Bundle::zeros(y.dim()), TOL))
    {
        v.push(Violation::ProductionZero);
    }

    // Attribute registry.
    for decl in &e.attributes {
        let mut seen_values = BTreeSet::new();
        for value in &decl.values {
            if !seen_values.insert(value.clone()) {
                v.push(Violation::Attribute {
                    kind: decl.kind,
                    detail: format!("duplicate value {value:?}"),
                });
            }
        }
        for (value, coord) in &decl.price_coords {
            if !decl.values.contains(value) {
                v.push(Violation::Attribute {
                    kind: decl.kind,
                    detail: format!("price coordinate for undeclared value {value:?}"),
                });
            }
            if *coord >= dim {
                v.push(Violation::Attribute {
                    kind: decl.kind,
                    detail: format!("price coordinate {coord} out of range for value {value:?}"),
                });
            }
        }
    }

    ValidationReport { violations: v }
}
