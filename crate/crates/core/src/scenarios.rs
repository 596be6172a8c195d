//! Prebuilt worked instances and the seeded random-economy generator.
//!
//! The named scenarios are small economies that each isolate one failure
//! mode, plus a clean classical baseline:
//!
//! - `example1`: a delegate trades on an objective diverging from its
//!   principal's welfare (delegation divergence);
//! - `example2`: an automated actor shifts a bystander's welfare through
//!   an ungoverned channel (autonomy externality);
//! - `example3`: two attribute values share one price coordinate, so the
//!   market cannot tell them apart (verification bottleneck);
//! - `d1_chain`: a two-link delegation chain whose divergence composes;
//! - `d2_hetero`: two channels with the same physical effect, one
//!   internalized and one not;
//! - `d3_contested`: one physical economy under two status readings with
//!   opposite efficiency verdicts (ontological ambiguity);
//! - `classical_e0`: a plain two-consumer exchange economy where every
//!   check passes.
//!
//! Each scenario carries the verdicts it is expected to produce, and the
//! golden tests re-derive those verdicts from the live pipeline.
//!
//! The generator builds conforming instances by construction: every
//! bearing entity gets strictly monotone linear welfare sharing one weight
//! direction, quoted prices equal that direction, tools and delegates sit
//! on singleton grids at their candidate bundles, and there are no
//! channels or pooled attributes. For such instances every diagnostic and
//! every equilibrium clause passes, and no feasible reallocation can raise
//! one bearing entity's welfare without lowering another's. Ablations then
//! break exactly one condition by a minimal local edit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::ConditionId;
use crate::economy::{
    ActionChannel, ActionLabel, AttributeDecl, AttributeKind, Bundle, ChannelId, DelegateSpec,
    Economy, Entity, EntityId, FeasibilityMode, FeasibilitySpec, Grid, InstitutionalState,
    RightsTag, StateId, Status, StatusAssignment,
};
use crate::equilibrium::Candidate;
use crate::feasibility::Allocation;
use crate::lindahl::LindahlBlock;
use crate::welfare::WelfareFunction;
use crate::{Error, Result};

/// What running the diagnostics on a scenario is expected to show.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedDiagnosis {
    /// First failing condition in the fixed order, `None` for a clean
    /// bill.
    pub first_fail: Option<ConditionId>,
    /// Expected exhaustive-search verdict at the candidate, where the
    /// scenario pins one down.
    pub efficient: Option<bool>,
    /// Whether the scenario ships a twin economy under a contested status
    /// reading.
    pub contested: bool,
}

/// A named worked instance: an economy, a candidate, and the verdicts the
/// pipeline is expected to reach on them.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub economy: Economy,
    pub candidate: Candidate,
    pub expected: ExpectedDiagnosis,
    /// For contested scenarios, the same physical instance under the
    /// other status reading.
    pub contested_twin: Option<Economy>,
}

/// The recognized scenario names, in presentation order.
pub const SCENARIO_NAMES: [&str; 7] = [
    "example1",
    "example2",
    "example3",
    "d1_chain",
    "d2_hetero",
    "d3_contested",
    "classical_e0",
];

/// Build the named scenario.
pub fn scenario(name: &str) -> Result<Scenario> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "example3" => Ok(example3()),
        "d1_chain" => Ok(d1_chain()),
        "d2_hetero" => Ok(d2_hetero()),
        "d3_contested" => Ok(d3_contested()),
        "classical_e0" => Ok(classical_e0()),
        _ => Err(Error::UnknownScenario {
            name: name.to_string(),
            valid: SCENARIO_NAMES.join(", "),
        }),
    }
}

fn state(id: &str) -> StateId {
    StateId::new(id)
}

fn welfare_map<const N: usize>(entries: [(&str, WelfareFunction); N]) -> BTreeMap<EntityId, WelfareFunction> {
    entries
        .into_iter()
        .map(|(id, w)| (EntityId::new(id), w))
        .collect()
}

fn example1() -> Scenario {
    let economy = Economy {
        lx: 1,
        lr: 1,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("d1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("d1", Status::Delegate),
        ]),
        grids: vec![
            Grid::cube(2, 4),
            Grid::cube(2, 5),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![
            vec![RightsTag::Priced],
            vec![RightsTag::Priced],
            vec![RightsTag::Priced],
        ],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![2.0, 1.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0])),
        ]),
        delegates: vec![DelegateSpec {
            delegate: EntityId::new("d1"),
            principal: EntityId::new("h1"),
            predecessor: None,
            objective: WelfareFunction::linear(vec![1.0, 2.0]),
            agency_cost: None,
        }],
        channels: vec![],
        feasibility: FeasibilitySpec::exchange(vec![4.0, 4.0]),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![1.0, 3.0]),
            Bundle::new(vec![3.0, 1.0]),
            Bundle::zeros(2),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "example1",
        description: "a delegate whose traded objective diverges from its principal's welfare",
        economy,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: Some(ConditionId::DelegationFidelity),
            efficient: Some(false),
            contested: false,
        },
        contested_twin: None,
    }
}

fn example2() -> Scenario {
    let economy = Economy {
        lx: 1,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("m1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("m1", Status::Tool),
        ]),
        grids: vec![
            Grid::cube(1, 3),
            Grid::cube(1, 3),
            Grid::singleton(Bundle::zeros(1)),
        ],
        rights_class: vec![vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![1.0])),
            ("h2", WelfareFunction::linear(vec![1.0])),
        ]),
        delegates: vec![],
        channels: vec![ActionChannel {
            id: ChannelId::new("attention"),
            actor: EntityId::new("m1"),
            target: EntityId::new("h2"),
            actions: vec![ActionLabel::new("idle"), ActionLabel::new("manipulate")],
            null_action: ActionLabel::new("idle"),
            realized: ActionLabel::new("manipulate"),
            effects: [((ActionLabel::new("manipulate"), state("s0")), -2.0)]
                .into_iter()
                .collect(),
            compensated: false,
            tau: None,
        }],
        feasibility: FeasibilitySpec::exchange(vec![2.0]),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![1.0]),
            Bundle::new(vec![1.0]),
            Bundle::zeros(1),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "example2",
        description: "an automated actor moves a bystander's welfare through an ungoverned channel",
        economy,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: Some(ConditionId::ExternalityInternalization),
            efficient: Some(true),
            contested: false,
        },
        contested_twin: None,
    }
}

fn example3() -> Scenario {
    let economy = Economy {
        lx: 2,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("m1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("m1", Status::Tool),
        ]),
        grids: vec![
            Grid::cube(2, 3),
            Grid::cube(2, 3),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![3.0, 1.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0])),
        ]),
        delegates: vec![],
        channels: vec![],
        feasibility: FeasibilitySpec::exchange(vec![2.0, 2.0]),
        attributes: vec![AttributeDecl {
            kind: AttributeKind::Provenance,
            values: vec!["authentic".into(), "counterfeit".into()],
            price_coords: [
                ("authentic".to_string(), 0usize),
                ("counterfeit".to_string(), 0usize),
            ]
            .into_iter()
            .collect(),
        }],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![0.0, 2.0]),
            Bundle::new(vec![2.0, 0.0]),
            Bundle::zeros(2),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "example3",
        description: "two attribute values pooled on one price coordinate leave gains untraded",
        economy,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: Some(ConditionId::VerificationAdequacy),
            efficient: Some(false),
            contested: false,
        },
        contested_twin: None,
    }
}

fn d1_chain() -> Scenario {
    let economy = Economy {
        lx: 2,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("d1"),
            Entity::artificial("d2"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("d1", Status::Delegate),
            ("d2", Status::Delegate),
        ]),
        grids: vec![
            Grid::cube(2, 3),
            Grid::cube(2, 3),
            Grid::singleton(Bundle::zeros(2)),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![vec![], vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![1.0, 0.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0])),
        ]),
        delegates: vec![
            DelegateSpec {
                delegate: EntityId::new("d1"),
                principal: EntityId::new("h1"),
                predecessor: None,
                objective: WelfareFunction::linear(vec![1.0, 1.0]),
                agency_cost: None,
            },
            DelegateSpec {
                delegate: EntityId::new("d2"),
                principal: EntityId::new("h1"),
                predecessor: Some(EntityId::new("d1")),
                objective: WelfareFunction::linear(vec![1.0, 2.0]),
                agency_cost: None,
            },
        ],
        channels: vec![],
        feasibility: FeasibilitySpec::exchange(vec![2.0, 2.0]),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![0.0, 2.0]),
            Bundle::new(vec![2.0, 0.0]),
            Bundle::zeros(2),
            Bundle::zeros(2),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "d1_chain",
        description: "a two-link delegation chain whose objective drift composes link by link",
        economy,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: Some(ConditionId::DelegationFidelity),
            efficient: Some(false),
            contested: false,
        },
        contested_twin: None,
    }
}

fn d2_hetero() -> Scenario {
    let mut s0 = InstitutionalState::bare("s0");
    s0.governed_channels.insert(ChannelId::new("push-h3"));
    s0.protected_rights.insert((EntityId::new("h3"), 0));
    let channel = |id: &str, target: &str, compensated: bool, tau: Option<f64>| ActionChannel {
        id: ChannelId::new(id),
        actor: EntityId::new("m1"),
        target: EntityId::new(target),
        actions: vec![ActionLabel::new("hold"), ActionLabel::new("push")],
        null_action: ActionLabel::new("hold"),
        realized: ActionLabel::new("push"),
        effects: [((ActionLabel::new("push"), state("s0")), -2.0)]
            .into_iter()
            .collect(),
        compensated,
        tau: tau.map(|t| {
            [(ActionLabel::new("hold"), 0.0), (ActionLabel::new("push"), t)]
                .into_iter()
                .collect()
        }),
    };
    let economy = Economy {
        lx: 1,
        lr: 1,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::human("h3"),
            Entity::artificial("m1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("h3", Status::Agent),
            ("m1", Status::Tool),
        ]),
        grids: vec![
            Grid::cube(2, 3),
            Grid::cube(2, 3),
            Grid::cube(2, 3),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![
            vec![RightsTag::Priced],
            vec![RightsTag::Priced],
            vec![RightsTag::Protected],
            vec![RightsTag::Priced],
        ],
        states: vec![s0],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![1.0, 1.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0])),
            ("h3", WelfareFunction::linear(vec![1.0, 1.0])),
        ]),
        delegates: vec![],
        channels: vec![
            channel("push-h2", "h2", false, None),
            channel("push-h3", "h3", true, Some(2.0)),
        ],
        feasibility: FeasibilitySpec::exchange(vec![3.0, 3.0]),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 1.0]),
            Bundle::zeros(2),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "d2_hetero",
        description: "two physically identical channels, one internalized and one left ungoverned",
        economy,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: Some(ConditionId::ExternalityInternalization),
            efficient: Some(true),
            contested: false,
        },
        contested_twin: None,
    }
}

fn d3_contested() -> Scenario {
    let base = Economy {
        lx: 2,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("a1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("a1", Status::Ws),
        ]),
        grids: vec![Grid::cube(2, 4), Grid::cube(2, 4), Grid::cube(2, 4)],
        rights_class: vec![vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![1.0, 1.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0])),
            ("a1", WelfareFunction::linear(vec![1.0, 1.0])),
        ]),
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
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 1.0]),
            Bundle::new(vec![1.0, 1.0]),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "d3_contested",
        description: "one physical economy whose efficiency verdict flips with the status reading",
        economy: base,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: None,
            efficient: Some(true),
            contested: true,
        },
        contested_twin: Some(twin),
    }
}

fn classical_e0() -> Scenario {
    let economy = Economy {
        lx: 2,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("t1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("t1", Status::Tool),
        ]),
        grids: vec![
            Grid::cube(2, 5),
            Grid::cube(2, 5),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![1.0, 1.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0])),
        ]),
        delegates: vec![],
        channels: vec![],
        feasibility: FeasibilitySpec::exchange(vec![4.0, 4.0]),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![2.0, 2.0]),
            Bundle::new(vec![2.0, 2.0]),
            Bundle::zeros(2),
        ]),
        state: state("s0"),
    };
    Scenario {
        name: "classical_e0",
        description: "a plain two-consumer exchange economy with a fixed tool and a clean bill",
        economy,
        candidate,
        expected: ExpectedDiagnosis {
            first_fail: None,
            efficient: Some(true),
            contested: false,
        },
        contested_twin: None,
    }
}

/// Size caps for the random generator.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorProfile {
    /// Most entities an instance may carry; between 2 and 4.
    pub max_entities: usize,
    /// Most bundle coordinates, exchange plus rights; between 1 and 3.
    pub max_coords: usize,
    /// Most points per grid axis; between 2 and 6.
    pub max_side: usize,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        GeneratorProfile {
            max_entities: 4,
            max_coords: 3,
            max_side: 6,
        }
    }
}

impl GeneratorProfile {
    fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.max_entities) {
            return Err(Error::Profile(format!(
                "entity cap must be between 2 and 4, got {}",
                self.max_entities
            )));
        }
        if !(1..=3).contains(&self.max_coords) {
            return Err(Error::Profile(format!(
                "coordinate cap must be between 1 and 3, got {}",
                self.max_coords
            )));
        }
        if !(2..=6).contains(&self.max_side) {
            return Err(Error::Profile(format!(
                "grid side cap must be between 2 and 6, got {}",
                self.max_side
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Human,
    BearingAi,
    FixedTool,
    Delegate,
}

impl Role {
    fn bearing(self) -> bool {
        matches!(self, Role::Human | Role::BearingAi)
    }
}

/// Keep the exhaustive allocation scan of one generated instance well
/// under the default cap.
const GENERATED_SCAN_BUDGET: u128 = 100_000;

fn largest_side(max_side: usize, dims: usize, bearing: usize) -> usize {
    let mut best = 2;
    for side in 2..=max_side {
        let product = (side as u128).pow((dims * bearing) as u32);
        if product <= GENERATED_SCAN_BUDGET {
            best = side;
        }
    }
    best
}

/// Build a deterministic random economy and candidate for `seed`.
///
/// With `ablate` unset the instance conforms by construction: all seven
/// conditions, every equilibrium clause, and exhaustive efficiency hold.
/// With an ablation tag, exactly that condition is broken by a minimal
/// edit; the supported tags are rights completeness, delegation fidelity,
/// externality internalization, and verification adequacy. The other
/// conditions have no local edit that leaves the rest of the instance
/// untouched, so asking for them is an error.
pub fn generate_random_economy(
    seed: u64,
    profile: &GeneratorProfile,
    ablate: Option<ConditionId>,
) -> Result<(Economy, Candidate)> {
    profile.validate()?;
    match ablate {
        None
        | Some(ConditionId::RightsCompleteness)
        | Some(ConditionId::DelegationFidelity)
        | Some(ConditionId::ExternalityInternalization)
        | Some(ConditionId::VerificationAdequacy) => {}
        Some(other) => {
            return Err(Error::Unsupported(format!(
                "no ablation is defined for condition {other}"
            )))
        }
    }
    if ablate == Some(ConditionId::RightsCompleteness) && profile.max_coords < 2 {
        return Err(Error::Profile(
            "the rights ablation needs at least two coordinates".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=profile.max_entities);
    let mut roles = vec![Role::Human];
    for k in 1..n {
        let role = if k == 1 {
            // The roster must contain at least one artificial entity.
            match rng.gen_range(0..3) {
                0 => Role::BearingAi,
                1 => Role::FixedTool,
                _ => Role::Delegate,
            }
        } else {
            match rng.gen_range(0..4) {
                0 => Role::Human,
                1 => Role::BearingAi,
                2 => Role::FixedTool,
                _ => Role::Delegate,
            }
        };
        roles.push(role);
    }

    let mut lx = rng.gen_range(1..=profile.max_coords.min(2));
    let mut lr = 0;
    if ablate == Some(ConditionId::RightsCompleteness) {
        lx = lx.min(profile.max_coords - 1);
        lr = 1;
    } else if profile.max_coords > lx {
        lr = rng.gen_range(0..=1);
    }
    let dims = lx + lr;

    let bearing = roles.iter().filter(|r| r.bearing()).count();
    let side = rng.gen_range(2..=largest_side(profile.max_side, dims, bearing));
    let n_states = rng.gen_range(1..=2usize);

    let direction: Vec<f64> = (0..dims).map(|_| rng.gen_range(1..=3) as f64).collect();

    let mut entities = Vec::with_capacity(n);
    let mut sigma = StatusAssignment::new();
    let mut grids = Vec::with_capacity(n);
    let mut welfare = BTreeMap::new();
    let mut delegates = Vec::new();
    let mut bundles = Vec::with_capacity(n);
    let mut counters = BTreeMap::from([("h", 0usize), ("g", 0usize), ("t", 0usize), ("d", 0usize)]);
    let mut principal_welfare: Option<WelfareFunction> = None;
    for role in &roles {
        let prefix = match role {
            Role::Human => "h",
            Role::BearingAi => "g",
            Role::FixedTool => "t",
            Role::Delegate => "d",
        };
        let slot = counters.get_mut(prefix).expect("all prefixes preset");
        *slot += 1;
        let id = EntityId::new(format!("{prefix}{slot}"));
        let (entity, status) = match role {
            Role::Human => (Entity::human(id.to_string()), Status::Agent),
            Role::BearingAi => (Entity::artificial(id.to_string()), Status::Ws),
            Role::FixedTool => (Entity::artificial(id.to_string()), Status::Tool),
            Role::Delegate => (Entity::artificial(id.to_string()), Status::Delegate),
        };
        sigma.set(id.clone(), status);
        if role.bearing() {
            let scale = rng.gen_range(1..=3) as f64;
            let weights: Vec<f64> = direction.iter().map(|w| w * scale).collect();
            let mut wf = WelfareFunction::linear_monotone(weights);
            if n_states == 2 {
                wf = wf.with_offset("s1", rng.gen_range(-2..=2) as f64);
            }
            if principal_welfare.is_none() {
                principal_welfare = Some(wf.clone());
            }
            welfare.insert(id.clone(), wf);
            grids.push(Grid::cube(dims, side));
            bundles.push(Bundle::new(
                (0..dims).map(|_| rng.gen_range(0..side) as f64).collect(),
            ));
        } else {
            grids.push(Grid::singleton(Bundle::zeros(dims)));
            bundles.push(Bundle::zeros(dims));
        }
        if *role == Role::Delegate {
            delegates.push(DelegateSpec {
                delegate: id.clone(),
                principal: EntityId::new("h1"),
                predecessor: None,
                objective: principal_welfare
                    .clone()
                    .expect("entity 0 is human and bearing"),
                agency_cost: None,
            });
        }
        entities.push(entity);
    }

    let omega: Vec<f64> = (0..dims)
        .map(|k| bundles.iter().map(|b| b.0[k]).sum())
        .collect();
    let mode = if rng.gen_bool(0.5) {
        FeasibilityMode::ExactBalance
    } else {
        FeasibilityMode::FreeDisposal
    };
    let mut states = vec![InstitutionalState::bare("s0")];
    if n_states == 2 {
        states.push(InstitutionalState::bare("s1"));
    }

    let mut economy = Economy {
        lx,
        lr,
        entities,
        sigma,
        grids,
        rights_class: (0..n).map(|_| vec![RightsTag::Priced; lr]).collect(),
        states,
        welfare,
        delegates,
        channels: vec![],
        feasibility: FeasibilitySpec {
            omega,
            production: vec![Bundle::zeros(dims)],
            mode,
        },
        attributes: vec![],
    };
    let mut allocation = bundles;

    match ablate {
        None => {}
        Some(ConditionId::RightsCompleteness) => {
            economy.rights_class[0][0] = RightsTag::Assigned { reassignable: true };
        }
        Some(ConditionId::DelegationFidelity) => {
            let mut weights = match &principal_welfare {
                Some(w) => w.linear_weights().expect("generator welfare is linear"),
                None => unreachable!("entity 0 is bearing"),
            };
            weights[0] += 1.0;
            economy.entities.push(Entity::artificial("dx"));
            economy.sigma.set(EntityId::new("dx"), Status::Delegate);
            economy.grids.push(Grid::singleton(Bundle::zeros(dims)));
            economy.rights_class.push(vec![RightsTag::Priced; lr]);
            economy.delegates.push(DelegateSpec {
                delegate: EntityId::new("dx"),
                principal: EntityId::new("h1"),
                predecessor: None,
                objective: WelfareFunction::linear(weights),
                agency_cost: None,
            });
            allocation.push(Bundle::zeros(dims));
        }
        Some(ConditionId::ExternalityInternalization) => {
            economy.entities.push(Entity::artificial("tx"));
            economy.sigma.set(EntityId::new("tx"), Status::Tool);
            economy.grids.push(Grid::singleton(Bundle::zeros(dims)));
            economy.rights_class.push(vec![RightsTag::Priced; lr]);
            economy.channels.push(ActionChannel {
                id: ChannelId::new("cx"),
                actor: EntityId::new("tx"),
                target: EntityId::new("h1"),
                actions: vec![ActionLabel::new("idle"), ActionLabel::new("act")],
                null_action: ActionLabel::new("idle"),
                realized: ActionLabel::new("act"),
                effects: [((ActionLabel::new("act"), state("s0")), -2.0)]
                    .into_iter()
                    .collect(),
                compensated: false,
                tau: None,
            });
            allocation.push(Bundle::zeros(dims));
        }
        Some(ConditionId::VerificationAdequacy) => {
            economy.attributes.push(AttributeDecl {
                kind: AttributeKind::Quality,
                values: vec!["standard".into(), "premium".into()],
                price_coords: [("standard".to_string(), 0usize), ("premium".to_string(), 0usize)]
                    .into_iter()
                    .collect(),
            });
        }
        Some(_) => unreachable!("rejected above"),
    }

    let candidate = Candidate {
        prices: direction,
        allocation: Allocation(allocation),
        state: state("s0"),
    };
    Ok((economy, candidate))
}

/// A conforming pair economy whose quoted prices are off by a recorded
/// perturbation, for gap-bound experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedInstance {
    pub economy: Economy,
    pub candidate: Candidate,
    pub epsilon: f64,
    /// Per-coordinate quoted-price error, at most `epsilon` in magnitude.
    pub delta: Vec<f64>,
}

/// Build a two-consumer instance whose second consumer's welfare gradient
/// is rotated away from the quoted prices by at most `epsilon`. The
/// corrected prices still support the candidate, so the welfare any
/// feasible reallocation can add is controlled by the gap bound; the
/// returned `delta` is the price correction to hand to that analysis.
pub fn perturbed_instance(seed: u64, epsilon: f64) -> Result<PerturbedInstance> {
    if !(0.0..=0.1).contains(&epsilon) {
        return Err(Error::PerturbationDomain(format!(
            "perturbation scale must lie in [0, 0.1], got {epsilon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = epsilon * rng.gen_range(0.5..1.0);
    let c1 = rng.gen_range(1..=3) as f64;
    let c2 = rng.gen_range(1..=3) as f64;
    let first = [
        Bundle::new(vec![0.0, 4.0]),
        Bundle::new(vec![1.0, 3.0]),
        Bundle::new(vec![2.0, 2.0]),
    ][rng.gen_range(0..3usize)]
    .clone();
    let second = Bundle::new(vec![2.0, 2.0]);
    let omega = vec![first.0[0] + second.0[0], first.0[1] + second.0[1]];
    let economy = Economy {
        lx: 2,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("t1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("t1", Status::Tool),
        ]),
        grids: vec![
            Grid::cube(2, 5),
            Grid::cube(2, 5),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s0")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![c1, c1])),
            ("h2", WelfareFunction::linear(vec![c2 * (1.0 + gamma), c2 * (1.0 - gamma)])),
        ]),
        delegates: vec![],
        channels: vec![],
        feasibility: FeasibilitySpec::exchange(omega),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![first, second, Bundle::zeros(2)]),
        state: state("s0"),
    };
    Ok(PerturbedInstance {
        economy,
        candidate,
        epsilon,
        delta: vec![gamma, -gamma],
    })
}

/// A two-state instance where a collective move of the institutional
/// state is the only improvement. The block prices that move so no single
/// entity would pay for it alone, which is exactly why the cross-state
/// scan, not the budget check, has to surface it.
pub fn lindahl_two_state() -> (Economy, Candidate, LindahlBlock) {
    let economy = Economy {
        lx: 2,
        lr: 0,
        entities: vec![
            Entity::human("h1"),
            Entity::human("h2"),
            Entity::artificial("t1"),
        ],
        sigma: StatusAssignment::from_pairs([
            ("h1", Status::Agent),
            ("h2", Status::Agent),
            ("t1", Status::Tool),
        ]),
        grids: vec![
            Grid::cube(2, 5),
            Grid::cube(2, 5),
            Grid::singleton(Bundle::zeros(2)),
        ],
        rights_class: vec![vec![], vec![], vec![]],
        states: vec![InstitutionalState::bare("s1"), InstitutionalState::bare("s2")],
        welfare: welfare_map([
            ("h1", WelfareFunction::linear(vec![1.0, 1.0])),
            ("h2", WelfareFunction::linear(vec![1.0, 1.0]).with_offset("s2", 1.0)),
        ]),
        delegates: vec![],
        channels: vec![],
        feasibility: FeasibilitySpec::exchange(vec![4.0, 4.0]),
        attributes: vec![],
    };
    let candidate = Candidate {
        prices: vec![1.0, 1.0],
        allocation: Allocation(vec![
            Bundle::new(vec![2.0, 2.0]),
            Bundle::new(vec![2.0, 2.0]),
            Bundle::zeros(2),
        ]),
        state: state("s1"),
    };
    let block = LindahlBlock {
        p_s: 2.0,
        lambdas: [(EntityId::new("h1"), 0.0), (EntityId::new("h2"), 2.0)]
            .into_iter()
            .collect(),
        embeddings: [(state("s1"), 0.0), (state("s2"), 1.0)]
            .into_iter()
            .collect(),
    };
    (economy, candidate, block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{diagnose, DiagnoseOptions};
    use crate::economy::validate_economy;
    use crate::equilibrium::{classical_verify, verify_equilibrium};
    use crate::externality::{detect_autonomy_externalities, find_improver_with_effects, apply_correction};
    use crate::feasibility::is_feasible;
    use crate::lindahl::{cross_state_improver, verify_lindahl};
    use crate::pareto::{compare_status_assignments, find_improver, is_efficient, ImproverPolicy};
    use crate::DEFAULT_CAP;

    fn opts() -> DiagnoseOptions {
        DiagnoseOptions::default()
    }

    #[test]
    fn scenario_names_resolve_and_unknown_names_are_rejected() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            assert_eq!(s.name, name);
        }
        let err = scenario("no-such-scenario").unwrap_err();
        match err {
            Error::UnknownScenario { name, valid } => {
                assert_eq!(name, "no-such-scenario");
                assert!(valid.contains("example1") && valid.contains("classical_e0"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn every_scenario_validates_and_its_candidate_is_feasible() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            let report = validate_economy(&s.economy);
            assert!(report.is_ok(), "{name}: {report}");
            assert!(is_feasible(&s.economy, &s.candidate.allocation).unwrap(), "{name}");
            assert_eq!(s.contested_twin.is_some(), s.expected.contested, "{name}");
            if let Some(twin) = &s.contested_twin {
                let report = validate_economy(twin);
                assert!(report.is_ok(), "{name} twin: {report}");
            }
        }
    }

    #[test]
    fn scenario_diagnoses_match_their_expected_first_failures() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            let d = diagnose(&s.economy, &s.candidate.state, &opts()).unwrap();
            assert_eq!(
                d.failing().first().copied(),
                s.expected.first_fail,
                "{name}: failing {:?}",
                d.failing()
            );
        }
    }

    #[test]
    fn scenario_efficiency_verdicts_match_their_expectations() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            let Some(expected) = s.expected.efficient else {
                continue;
            };
            let verdict = is_efficient(
                &s.economy,
                &s.candidate.allocation,
                &s.candidate.state,
                ImproverPolicy::Faithful,
                DEFAULT_CAP,
            )
            .unwrap();
            assert_eq!(verdict, expected, "{name}");
        }
    }

    #[test]
    fn example1_divergence_margin_and_improver_are_pinned() {
        let s = scenario("example1").unwrap();
        let d = diagnose(&s.economy, &s.candidate.state, &opts()).unwrap();
        let report = d.report(ConditionId::DelegationFidelity);
        assert_eq!(report.margin, Some(3.0));
        let improver = find_improver(
            &s.economy,
            &s.candidate.allocation,
            &s.candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap()
        .expect("the crossed allocation leaves gains on the table");
        assert_eq!(
            improver.allocation,
            Allocation(vec![
                Bundle::new(vec![2.0, 1.0]),
                Bundle::new(vec![2.0, 3.0]),
                Bundle::zeros(2),
            ])
        );
        assert_eq!(improver.strict, vec![EntityId::new("h2")]);
    }

    #[test]
    fn example2_improver_lives_in_the_action_profile_not_the_allocation() {
        let s = scenario("example2").unwrap();
        let plain = find_improver(
            &s.economy,
            &s.candidate.allocation,
            &s.candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap();
        assert!(plain.is_none());
        let with_effects = find_improver_with_effects(
            &s.economy,
            &s.candidate.allocation,
            &s.candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap()
        .expect("idling the channel is a free gain for its target");
        assert_eq!(with_effects.strict, vec![EntityId::new("h2")]);
        assert_eq!(
            with_effects.profile.get(&ChannelId::new("attention")),
            Some(&ActionLabel::new("idle"))
        );

        let corrected =
            apply_correction(&s.economy, &ChannelId::new("attention"), &s.candidate.state, 1.0)
                .unwrap();
        let d = diagnose(&corrected, &s.candidate.state, &opts()).unwrap();
        assert!(d.all_hold(), "failing: {:?}", d.failing());
        let after = find_improver_with_effects(
            &corrected,
            &s.candidate.allocation,
            &s.candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap();
        assert!(after.is_none());
    }

    #[test]
    fn example3_improver_uncrosses_the_allocation() {
        let s = scenario("example3").unwrap();
        let improver = find_improver(
            &s.economy,
            &s.candidate.allocation,
            &s.candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap()
        .expect("holders value the goods oppositely to what they hold");
        assert_eq!(
            improver.allocation,
            Allocation(vec![
                Bundle::new(vec![1.0, 0.0]),
                Bundle::new(vec![1.0, 2.0]),
                Bundle::zeros(2),
            ])
        );
        assert_eq!(
            improver.strict,
            vec![EntityId::new("h1"), EntityId::new("h2")]
        );
    }

    #[test]
    fn d1_chain_margin_composes_over_both_links() {
        let s = scenario("d1_chain").unwrap();
        let d = diagnose(&s.economy, &s.candidate.state, &opts()).unwrap();
        let report = d.report(ConditionId::DelegationFidelity);
        assert_eq!(report.margin, Some(4.0));
        assert_eq!(report.findings.len(), 2);
    }

    #[test]
    fn d2_hetero_flags_only_the_uncompensated_channel() {
        let s = scenario("d2_hetero").unwrap();
        let found = detect_autonomy_externalities(&s.economy, &s.candidate.state).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].channel, ChannelId::new("push-h2"));
        let d = diagnose(&s.economy, &s.candidate.state, &opts()).unwrap();
        assert_eq!(
            d.report(ConditionId::ExternalityInternalization).margin,
            Some(2.0)
        );
        // The budget certificate itself is clean; the failure is purely
        // an ungoverned channel, not a mispriced trade.
        let report = verify_equilibrium(&s.economy, &s.candidate).unwrap();
        assert!(report.holds());
    }

    #[test]
    fn d3_contested_readings_disagree_about_the_same_allocation() {
        let s = scenario("d3_contested").unwrap();
        let twin = s.contested_twin.as_ref().unwrap();
        let compared = compare_status_assignments(
            &s.economy,
            twin,
            &s.candidate.allocation,
            &s.candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap();
        assert!(!compared.agree);
        assert!(compared.improver_a.is_none());
        let improver = compared.improver_b.as_ref().unwrap();
        assert!(!improver.strict.is_empty());
        assert_eq!(compared.bearing_a.len(), 3);
        assert_eq!(compared.bearing_b.len(), 2);

        assert!(verify_equilibrium(&s.economy, &s.candidate).unwrap().holds());
        let twin_report = verify_equilibrium(twin, &s.candidate).unwrap();
        assert!(!twin_report.accountability.holds);
    }

    #[test]
    fn classical_baseline_is_clean_end_to_end() {
        let s = scenario("classical_e0").unwrap();
        let d = diagnose(&s.economy, &s.candidate.state, &opts()).unwrap();
        assert!(d.all_hold(), "failing: {:?}", d.failing());
        let report = verify_equilibrium(&s.economy, &s.candidate).unwrap();
        assert!(report.holds());
        let classical = classical_verify(&s.economy, &s.candidate).unwrap();
        assert!(classical.holds);
    }

    #[test]
    fn generator_is_deterministic_per_seed() {
        let profile = GeneratorProfile::default();
        for seed in [0u64, 1, 17, 99] {
            let a = generate_random_economy(seed, &profile, None).unwrap();
            let b = generate_random_economy(seed, &profile, None).unwrap();
            assert_eq!(a, b);
        }
        let a = generate_random_economy(3, &profile, Some(ConditionId::VerificationAdequacy));
        let b = generate_random_economy(3, &profile, Some(ConditionId::VerificationAdequacy));
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn conforming_generated_instances_pass_every_check() {
        let profile = GeneratorProfile::default();
        for seed in 0..25u64 {
            let (economy, candidate) = generate_random_economy(seed, &profile, None).unwrap();
            let report = validate_economy(&economy);
            assert!(report.is_ok(), "seed {seed}: {report}");
            let d = diagnose(&economy, &candidate.state, &opts()).unwrap();
            assert!(d.all_hold(), "seed {seed}: failing {:?}", d.failing());
            let eq = verify_equilibrium(&economy, &candidate).unwrap();
            assert!(eq.holds(), "seed {seed}: {:?}", eq);
            let efficient = is_efficient(
                &economy,
                &candidate.allocation,
                &candidate.state,
                ImproverPolicy::Faithful,
                DEFAULT_CAP,
            )
            .unwrap();
            assert!(efficient, "seed {seed}");
        }
    }

    #[test]
    fn ablations_break_exactly_the_tagged_condition() {
        let profile = GeneratorProfile::default();
        let tags = [
            ConditionId::RightsCompleteness,
            ConditionId::DelegationFidelity,
            ConditionId::ExternalityInternalization,
            ConditionId::VerificationAdequacy,
        ];
        for tag in tags {
            for seed in 0..10u64 {
                let (economy, candidate) =
                    generate_random_economy(seed, &profile, Some(tag)).unwrap();
                let report = validate_economy(&economy);
                assert!(report.is_ok(), "{tag} seed {seed}: {report}");
                let d = diagnose(&economy, &candidate.state, &opts()).unwrap();
                assert_eq!(d.failing(), vec![tag], "{tag} seed {seed}");
            }
        }
    }

    #[test]
    fn unsupported_ablations_are_rejected() {
        let profile = GeneratorProfile::default();
        for tag in [
            ConditionId::OntologicalClarity,
            ConditionId::PriceTaking,
            ConditionId::Regularity,
        ] {
            let err = generate_random_economy(0, &profile, Some(tag)).unwrap_err();
            assert!(matches!(err, Error::Unsupported(_)), "{tag}");
        }
    }

    #[test]
    fn profile_caps_are_enforced() {
        let cases = [
            GeneratorProfile { max_entities: 5, ..GeneratorProfile::default() },
            GeneratorProfile { max_entities: 1, ..GeneratorProfile::default() },
            GeneratorProfile { max_coords: 0, ..GeneratorProfile::default() },
            GeneratorProfile { max_coords: 4, ..GeneratorProfile::default() },
            GeneratorProfile { max_side: 1, ..GeneratorProfile::default() },
            GeneratorProfile { max_side: 7, ..GeneratorProfile::default() },
        ];
        for profile in cases {
            let err = generate_random_economy(0, &profile, None).unwrap_err();
            assert!(matches!(err, Error::Profile(_)), "{profile:?}");
        }
        let narrow = GeneratorProfile { max_coords: 1, ..GeneratorProfile::default() };
        let err = generate_random_economy(0, &narrow, Some(ConditionId::RightsCompleteness))
            .unwrap_err();
        assert!(matches!(err, Error::Profile(_)));
    }

    #[test]
    fn perturbed_instances_stay_within_the_gap_bound() {
        use crate::equilibrium::epsilon_gap_bound;
        for seed in 0..10u64 {
            for epsilon in [0.0, 0.01, 0.05, 0.1] {
                let inst = perturbed_instance(seed, epsilon).unwrap();
                assert!(validate_economy(&inst.economy).is_ok());
                let report = epsilon_gap_bound(
                    &inst.economy,
                    &inst.candidate,
                    inst.epsilon,
                    &inst.delta,
                    DEFAULT_CAP,
                )
                .unwrap();
                assert!(report.holds, "seed {seed} eps {epsilon}: {report:?}");
                if epsilon == 0.0 {
                    assert_eq!(report.measured_gap, 0.0);
                    assert_eq!(report.gap_witness, None);
                }
            }
        }
        assert!(matches!(
            perturbed_instance(0, 0.2).unwrap_err(),
            Error::PerturbationDomain(_)
        ));
    }

    #[test]
    fn lindahl_pair_hides_the_state_move_from_the_budget_check() {
        let (economy, candidate, block) = lindahl_two_state();
        assert!(validate_economy(&economy).is_ok());
        let report = verify_lindahl(&economy, &candidate, &block).unwrap();
        assert!(report.holds(), "{report:?}");
        let plain = find_improver(
            &economy,
            &candidate.allocation,
            &candidate.state,
            ImproverPolicy::Faithful,
            DEFAULT_CAP,
        )
        .unwrap();
        assert!(plain.is_none());
        let cross =
            cross_state_improver(&economy, &candidate.allocation, &candidate.state, DEFAULT_CAP)
            .unwrap()
            .expect("the second state is a free collective gain");
        assert_eq!(cross.state, state("s2"));
        assert_eq!(cross.strict, vec![EntityId::new("h2")]);
    }
}
