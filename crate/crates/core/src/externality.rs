//! Action channels: direct welfare effects outside the price system, their
//! detection, and their correction by compensating transfers.
//!
//! A channel lets an actor's action shift a target's welfare without
//! touching the target's bundle. Realized welfare therefore depends on an
//! action profile as well as an allocation. The with-effects improvement
//! oracle scans both: a situation is efficient only if no feasible
//! allocation together with any profile of channel actions dominates the
//! candidate under its realized profile.
//!
//! Detection flags every (channel, action) pair whose effect at the state
//! is not internalized: the channel must be governed there, compensated,
//! and carry a transfer that exactly offsets the effect. The Pigouvian
//! schedule supplies such transfers, and [`apply_correction`] installs it.
//!
//! Transfers are credited to the target; the debit falls on the actor only
//! when the actor bears welfare. A tool's debit is absorbed by the
//! institution that operates it.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::economy::{ActionLabel, Bundle, ChannelId, Economy, EntityId, StateId};
use crate::feasibility::{for_each_feasible, is_feasible, Allocation};
use crate::pareto::ImproverPolicy;
use crate::{Error, Result, TOL};

/// One action per channel.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ActionProfile(pub BTreeMap<ChannelId, ActionLabel>);

impl ActionProfile {
    /// The profile recorded in the economy: each channel's realized action.
    pub fn realized(e: &Economy) -> ActionProfile {
        ActionProfile(
            e.channels
                .iter()
                .map(|c| (c.id.clone(), c.realized.clone()))
                .collect(),
        )
    }

    pub fn get(&self, c: &ChannelId) -> Option<&ActionLabel> {
        self.0.get(c)
    }
}

/// Validate a profile against the economy: every channel covered, every
/// action declared on its channel.
pub fn check_profile(e: &Economy, profile: &ActionProfile) -> Result<()> {
    for c in &e.channels {
        match profile.get(&c.id) {
            None => {
                return Err(Error::Profile(format!(
                    "profile has no action for channel {}",
                    c.id
                )))
            }
            Some(a) if !c.actions.contains(a) => {
                return Err(Error::Profile(format!(
                    "action {a} is not declared on channel {}",
                    c.id
                )))
            }
            Some(_) => {}
        }
    }
    for c in profile.0.keys() {
        if e.channel(c).is_none() {
            return Err(Error::UnknownChannel(c.clone()));
        }
    }
    Ok(())
}

/// Channel-induced welfare delta for `id` under `profile` at `state`:
/// effects and credited transfers on channels targeting it, minus debits on
/// compensated channels it acts on while bearing welfare.
pub fn channel_adjustment(
    e: &Economy,
    id: &EntityId,
    profile: &ActionProfile,
    state: &StateId,
) -> Result<f64> {
    check_profile(e, profile)?;
    let mut delta = 0.0;
    for c in &e.channels {
        let action = profile.get(&c.id).expect("checked profile covers channels");
        if &c.target == id {
            delta += c.effect(action, state);
            if c.compensated {
                delta += c.transfer(action);
            }
        }
        if &c.actor == id && c.compensated && e.is_welfare_bearing(id) {
            delta -= c.transfer(action);
        }
    }
    Ok(delta)
}

/// Welfare of `id` at `(bundle, state)` including channel effects under
/// `profile`.
pub fn realized_welfare(
    e: &Economy,
    id: &EntityId,
    bundle: &Bundle,
    state: &StateId,
    profile: &ActionProfile,
) -> Result<f64> {
    Ok(e.eval_welfare(id, bundle, state)? + channel_adjustment(e, id, profile, state)?)
}

/// An improver found by the with-effects oracle: an allocation together
/// with an action profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectImprover {
    pub allocation: Allocation,
    pub profile: ActionProfile,
    pub gains: BTreeMap<EntityId, f64>,
    pub strict: Vec<EntityId>,
}

fn profiles(e: &Economy) -> Vec<ActionProfile> {
    let mut out = vec![ActionProfile::default()];
    for c in &e.channels {
        let mut next = Vec::with_capacity(out.len() * c.actions.len());
        for p in &out {
            for a in &c.actions {
                let mut q = p.clone();
                q.0.insert(c.id.clone(), a.clone());
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Search allocations and action profiles for a dominance witness over the
/// candidate allocation under its realized profile. Allocations are scanned
/// lexicographically; for each, profiles follow the channels' declared
/// action order. The first witness found is returned.
pub fn find_improver_with_effects(
    e: &Economy,
    candidate: &Allocation,
    state: &StateId,
    policy: ImproverPolicy,
    cap: u64,
) -> Result<Option<EffectImprover>> {
    if e.state(state).is_none() {
        return Err(Error::UnknownState(state.clone()));
    }
    if !is_feasible(e, candidate)? {
        return Err(Error::Infeasible(
            "candidate allocation is not feasible".into(),
        ));
    }
    let realized = ActionProfile::realized(e);
    let bearing = e.welfare_bearing();
    let mut base = Vec::with_capacity(e.entities.len());
    for (i, ent) in e.entities.iter().enumerate() {
        if bearing.contains(&ent.id) {
            base.push(Some(realized_welfare(
                e,
                &ent.id,
                &candidate.0[i],
                state,
                &realized,
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
                .filter(|(_, tag)| match policy {
                    ImproverPolicy::Faithful => matches!(
                        tag,
                        crate::economy::RightsTag::Protected
                            | crate::economy::RightsTag::Assigned {
                                reassignable: false
                            }
                    ),
                    ImproverPolicy::BudgetAligned => {
                        !matches!(tag, crate::economy::RightsTag::Priced)
                    }
                })
                .map(|(r, _)| e.lx + r)
                .collect()
        })
        .collect();
    let all_profiles = profiles(e);
    // Channel adjustments depend only on the profile, so compute them per
    // profile per bearing entity once.
    let mut adjustments: Vec<BTreeMap<EntityId, f64>> = Vec::with_capacity(all_profiles.len());
    for p in &all_profiles {
        let mut m = BTreeMap::new();
        for id in &bearing {
            m.insert(id.clone(), channel_adjustment(e, id, p, state)?);
        }
        adjustments.push(m);
    }

    let mut found: Option<EffectImprover> = None;
    let mut eval_error: Option<Error> = None;
    for_each_feasible(e, cap, |bundles| {
        for (i, b) in bundles.iter().enumerate() {
            for &k in &pinned[i] {
                if (b.0[k] - candidate.0[i].0[k]).abs() > TOL {
                    return ControlFlow::Continue(());
                }
            }
        }
        let mut bare = Vec::with_capacity(e.entities.len());
        for (i, ent) in e.entities.iter().enumerate() {
            if base[i].is_none() {
                bare.push(None);
                continue;
            }
            match e.eval_welfare(&ent.id, &bundles[i], state) {
                Ok(v) => bare.push(Some(v)),
                Err(err) => {
                    eval_error = Some(err);
                    return ControlFlow::Break(());
                }
            }
        }
        for (pi, profile) in all_profiles.iter().enumerate() {
            let mut gains = BTreeMap::new();
            let mut strict = Vec::new();
            let mut dominated = true;
            for (i, ent) in e.entities.iter().enumerate() {
                let Some(cur) = base[i] else { continue };
                let v = bare[i].expect("bearing entities have bare welfare")
                    + adjustments[pi][&ent.id];
                if v < cur - TOL {
                    dominated = false;
                    break;
                }
                if v > cur + TOL {
                    strict.push(ent.id.clone());
                }
                gains.insert(ent.id.clone(), v - cur);
            }
            if dominated && !strict.is_empty() {
                found = Some(EffectImprover {
                    allocation: Allocation(bundles.to_vec()),
                    profile: profile.clone(),
                    gains,
                    strict,
                });
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(err) = eval_error {
        return Err(err);
    }
    Ok(found)
}

/// `true` when the with-effects oracle finds no witness.
pub fn is_efficient_with_effects(
    e: &Economy,
    candidate: &Allocation,
    state: &StateId,
    policy: ImproverPolicy,
    cap: u64,
) -> Result<bool> {
    Ok(find_improver_with_effects(e, candidate, state, policy, cap)?.is_none())
}

/// One uninternalized (channel, action) pair at a state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExternalityFinding {
    pub channel: ChannelId,
    pub action: ActionLabel,
    pub effect: f64,
    pub governed: bool,
    pub compensated: bool,
    pub transfer: Option<f64>,
}

/// Scan every channel action for effects at `state` that are not fully
/// internalized: the channel must be governed there, compensated, and the
/// recorded transfer must offset the effect exactly. Returns all findings
/// in channel order, then declared action order.
pub fn detect_autonomy_externalities(
    e: &Economy,
    state: &StateId,
) -> Result<Vec<ExternalityFinding>> {
    let st = e
        .state(state)
        .ok_or_else(|| Error::UnknownState(state.clone()))?;
    let mut out = Vec::new();
    for c in &e.channels {
        let governed = st.governed_channels.contains(&c.id);
        for a in &c.actions {
            let effect = c.effect(a, state);
            if effect.abs() <= TOL {
                continue;
            }
            let transfer = c.tau.as_ref().and_then(|t| t.get(a)).copied();
            let internalized = governed
                && c.compensated
                && transfer.map_or(false, |t| (t + effect).abs() <= TOL);
            if !internalized {
                out.push(ExternalityFinding {
                    channel: c.id.clone(),
                    action: a.clone(),
                    effect,
                    governed,
                    compensated: c.compensated,
                    transfer,
                });
            }
        }
    }
    Ok(out)
}

/// Transfer schedule that internalizes a channel's effects at `state`:
/// each action's transfer offsets its effect, and the null action carries
/// zero. The `step` is a probe granularity for action spaces that need
/// discretizing; it must be positive, and on an already finite channel the
/// schedule is exact regardless of its value.
pub fn pigouvian_tau(
    e: &Economy,
    channel: &ChannelId,
    state: &StateId,
    step: f64,
) -> Result<BTreeMap<ActionLabel, f64>> {
    if !(step > 0.0) {
        return Err(Error::Unsupported(format!(
            "pigouvian step must be strictly positive, got {step}"
        )));
    }
    let c = e
        .channel(channel)
        .ok_or_else(|| Error::UnknownChannel(channel.clone()))?;
    if e.state(state).is_none() {
        return Err(Error::UnknownState(state.clone()));
    }
    Ok(c.actions
        .iter()
        .map(|a| (a.clone(), -c.effect(a, state)))
        .collect())
}

/// Return a copy of the economy with the channel corrected: governed in
/// every institutional state, compensated, and carrying the Pigouvian
/// schedule computed at `state`.
pub fn apply_correction(
    e: &Economy,
    channel: &ChannelId,
    state: &StateId,
    step: f64,
) -> Result<Economy> {
    let tau = pigouvian_tau(e, channel, state, step)?;
    let mut fixed = e.clone();
    for s in &mut fixed.states {
        s.governed_channels.insert(channel.clone());
    }
    for c in &mut fixed.channels {
        if &c.id == channel {
            c.compensated = true;
            c.tau = Some(tau.clone());
        }
    }
    Ok(fixed)
}
