//! One function per subcommand: load the input, run the library, and
//! shape both the human text and the machine report.
//!
//! Every function returns an [`Outcome`] carrying the rendered text and
//! the structured [`Report`]; the binary decides which of the two to
//! print. Errors short-circuit as [`CliError`] and map onto the input or
//! resource exit codes.

use std::fmt;
use std::fs;
use std::path::Path;

use serde_json::json;

use paretolab_core::conditions::{diagnose, ConditionId, DiagnoseOptions, Diagnosis};
use paretolab_core::delegation::ChainRule;
use paretolab_core::economy::{
    validate_economy, ChannelId, Economy, EntityId, StateId,
};
use paretolab_core::equilibrium::{epsilon_gap_bound, verify_equilibrium, Candidate};
use paretolab_core::externality::{apply_correction, pigouvian_tau};
use paretolab_core::lindahl::{cross_state_improver, verify_lindahl, LindahlBlock};
use paretolab_core::pareto::{compare_status_assignments, find_improver, Improver, ImproverPolicy};
use paretolab_core::scenarios::{generate_random_economy, scenario, GeneratorProfile, SCENARIO_NAMES};

use crate::exact::ExactInstance;
use crate::exit;
use crate::format::{self, FileError, ParsedFile};
use crate::report::{self, failure_mode, Report, Table};

/// A command's rendered result: human text plus the machine report.
pub struct Outcome {
    pub text: String,
    pub report: Report,
}

impl Outcome {
    fn new(text: String, report: Report) -> Self {
        Outcome { text, report }
    }
}

/// Errors that abort a command before it reaches a verdict.
#[derive(Debug)]
pub enum CliError {
    File(FileError),
    Core(paretolab_core::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::File(_) | CliError::Usage(_) => exit::INPUT,
            CliError::Core(e) => crate::exit_code_for(e),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::File(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::File(e)
    }
}

impl From<paretolab_core::Error> for CliError {
    fn from(e: paretolab_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CResult<T> = Result<T, CliError>;

/// A resolved input: the economy, its optional candidate, and where it
/// came from for messages.
pub struct Loaded {
    pub economy: Economy,
    pub candidate: Option<Candidate>,
    pub origin: String,
}

/// Read an input argument as a file when a file of that name exists,
/// otherwise as a built-in scenario name. Syntax is checked; semantic
/// validation is left to the caller so `validate` can report it.
fn resolve_raw(input: &str) -> CResult<(ParsedFile, String)> {
    let path = Path::new(input);
    if path.is_file() {
        let text = fs::read_to_string(path)
            .map_err(|e| FileError::Io(format!("{input}: {e}")))?;
        let parsed = format::parse_str(&text)?;
        return Ok((parsed, input.to_string()));
    }
    match scenario(input) {
        Ok(s) => Ok((
            ParsedFile {
                economy: s.economy,
                candidate: Some(s.candidate),
            },
            format!("scenario {input}"),
        )),
        Err(_) => Err(CliError::Usage(format!(
            "{input} is neither a readable file nor a built-in scenario; built-ins: {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

/// Resolve an input and insist the economy is well-formed.
pub fn resolve(input: &str) -> CResult<Loaded> {
    let (parsed, origin) = resolve_raw(input)?;
    let v = validate_economy(&parsed.economy);
    if !v.is_ok() {
        return Err(FileError::Semantic(v).into());
    }
    Ok(Loaded {
        economy: parsed.economy,
        candidate: parsed.candidate,
        origin,
    })
}

fn require_candidate(loaded: &Loaded) -> CResult<&Candidate> {
    loaded.candidate.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "{} declares no candidate section; this command needs prices, a state, and an allocation",
            loaded.origin
        ))
    })
}

/// The institutional state a stateless command should analyze: an explicit
/// override, else the candidate's state, else the first declared state.
fn pick_state(loaded: &Loaded, over: Option<&str>) -> CResult<StateId> {
    if let Some(s) = over {
        let id = StateId::new(s);
        if loaded.economy.state(&id).is_none() {
            return Err(paretolab_core::Error::UnknownState(id).into());
        }
        return Ok(id);
    }
    if let Some(c) = &loaded.candidate {
        return Ok(c.state.clone());
    }
    loaded
        .economy
        .states
        .first()
        .map(|s| s.id.clone())
        .ok_or_else(|| CliError::Usage("the economy declares no institutional state".into()))
}

pub fn parse_policy(s: &str) -> CResult<ImproverPolicy> {
    match s {
        "faithful" => Ok(ImproverPolicy::Faithful),
        "budget-aligned" => Ok(ImproverPolicy::BudgetAligned),
        other => Err(CliError::Usage(format!(
            "unknown rights policy {other}; expected faithful or budget-aligned"
        ))),
    }
}

pub fn parse_chain_rule(s: &str) -> CResult<ChainRule> {
    ChainRule::parse(s).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown chain rule {s}; expected plain-sum or incremental"
        ))
    })
}

fn policy_name(p: ImproverPolicy) -> &'static str {
    match p {
        ImproverPolicy::Faithful => "faithful",
        ImproverPolicy::BudgetAligned => "budget-aligned",
    }
}

fn fnum(x: f64) -> String {
    format!("{x}")
}

fn pass(holds: bool) -> &'static str {
    if holds {
        "pass"
    } else {
        "FAIL"
    }
}

/// `validate INPUT [--emit]`
pub fn validate(input: &str, emit: bool) -> CResult<Outcome> {
    let (parsed, origin) = resolve_raw(input)?;
    let v = validate_economy(&parsed.economy);
    if !v.is_ok() {
        let mut text = format!(
            "{origin}: economy is not well-formed ({} violation{})\n",
            v.violations.len(),
            if v.violations.len() == 1 { "" } else { "s" }
        );
        for viol in &v.violations {
            text.push_str(&format!("  - {viol}\n"));
        }
        let body = json!({
            "origin": origin,
            "violations": v.violations.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        });
        return Ok(Outcome::new(
            text,
            Report::new("validate", "invalid", exit::INPUT, body),
        ));
    }
    let e = &parsed.economy;
    if emit {
        let text = format::emit(e, parsed.candidate.as_ref());
        let body = json!({
            "origin": origin,
            "entities": e.entities.len(),
            "canonical": text,
        });
        return Ok(Outcome::new(
            text,
            Report::new("validate", "well-formed", exit::PASS, body),
        ));
    }
    let text = format!(
        "{origin}: well-formed economy: {} entities, {} exchange + {} rights coordinates, {} state{}; candidate {}\n",
        e.entities.len(),
        e.lx,
        e.lr,
        e.states.len(),
        if e.states.len() == 1 { "" } else { "s" },
        if parsed.candidate.is_some() { "present" } else { "absent" },
    );
    let body = json!({
        "origin": origin,
        "entities": e.entities.len(),
        "exchange_coords": e.lx,
        "rights_coords": e.lr,
        "states": e.states.len(),
        "candidate": parsed.candidate.is_some(),
    });
    Ok(Outcome::new(
        text,
        Report::new("validate", "well-formed", exit::PASS, body),
    ))
}

/// `check-eq INPUT [--exact]`
pub fn check_eq(input: &str, exact: bool) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let cand = require_candidate(&loaded)?;
    if exact {
        let inst = ExactInstance::build(&loaded.economy, cand, ImproverPolicy::Faithful)?;
        let rep = inst.verify()?;
        let holds = rep.holds();
        let mut text = format!(
            "equilibrium check at state {} (exact rational arithmetic)\n",
            cand.state
        );
        text.push_str(&clause_lines(rep.market, rep.optimality, rep.tools, rep.accountability));
        for f in &rep.failures {
            text.push_str(&format!("  - {f}\n"));
        }
        text.push_str(&format!(
            "verdict: {}\n",
            if holds { "supported equilibrium" } else { "not a supported equilibrium" }
        ));
        let code = if holds { exit::PASS } else { exit::CONDITION_FAILURE };
        let verdict = if holds { "equilibrium" } else { "not-equilibrium" };
        return Ok(Outcome::new(
            text,
            Report::new("check-eq", verdict, code, report::body(&rep)),
        ));
    }
    let rep = verify_equilibrium(&loaded.economy, cand)?;
    let holds = rep.holds();
    let mut text = format!("equilibrium check at state {}\n", cand.state);
    text.push_str(&clause_lines(
        rep.market.holds,
        rep.optimality.holds,
        rep.tools.holds,
        rep.accountability.holds,
    ));
    for f in rep.failure_lines() {
        text.push_str(&format!("  - {f}\n"));
    }
    text.push_str(&format!(
        "verdict: {}\n",
        if holds { "supported equilibrium" } else { "not a supported equilibrium" }
    ));
    let code = if holds { exit::PASS } else { exit::CONDITION_FAILURE };
    let verdict = if holds { "equilibrium" } else { "not-equilibrium" };
    Ok(Outcome::new(
        text,
        Report::new("check-eq", verdict, code, report::body(&rep)),
    ))
}

fn clause_lines(market: bool, optimality: bool, tools: bool, accountability: bool) -> String {
    let mut t = Table::new(["clause", "verdict"]);
    t.row(["market".into(), pass(market).into()]);
    t.row(["optimality".into(), pass(optimality).into()]);
    t.row(["tools".into(), pass(tools).into()]);
    t.row(["accountability".into(), pass(accountability).into()]);
    t.render()
}

/// `diagnose INPUT [--state S] [--chain-rule R]`
pub fn diagnose_cmd(input: &str, state: Option<&str>, chain_rule: ChainRule) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let st = pick_state(&loaded, state)?;
    let opts = DiagnoseOptions {
        chain_rule,
        lns_radius: None,
    };
    let d = diagnose(&loaded.economy, &st, &opts)?;
    let holds = d.all_hold();
    let code = if holds { exit::PASS } else { exit::CONDITION_FAILURE };
    let verdict = if holds { "all-conditions-hold" } else { "condition-failure" };
    Ok(Outcome::new(
        report::diagnosis_text(&d),
        Report::new("diagnose", verdict, code, report::diagnosis_body(&d)),
    ))
}

fn improver_text(e: &Economy, imp: &Improver) -> String {
    let mut t = Table::new(["entity", "bundle", "welfare gain"]);
    for (i, ent) in e.entities.iter().enumerate() {
        let gain = imp
            .gains
            .get(&ent.id)
            .map(|g| fnum(*g))
            .unwrap_or_else(|| "-".into());
        t.row([ent.id.to_string(), imp.allocation.0[i].to_string(), gain]);
    }
    let mut text = String::from("dominating allocation found:\n");
    text.push_str(&t.render());
    text.push_str(&format!(
        "strictly improved: {}\n",
        imp.strict
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    ));
    text
}

/// `pareto INPUT [--policy P] [--exact]`
pub fn pareto(input: &str, policy: ImproverPolicy, exact: bool, cap: u64) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let cand = require_candidate(&loaded)?;
    if exact {
        let inst = ExactInstance::build(&loaded.economy, cand, policy)?;
        let found = inst.find_improver(cap)?;
        return Ok(match found {
            None => Outcome::new(
                format!(
                    "no feasible allocation dominates the candidate at state {} (policy: {}, exact rational arithmetic)\nverdict: efficient\n",
                    cand.state,
                    policy_name(policy)
                ),
                Report::new("pareto", "efficient", exit::PASS, json!({"improver": null})),
            ),
            Some(imp) => {
                let mut t = Table::new(["entity", "bundle", "welfare gain"]);
                for (i, ent) in loaded.economy.entities.iter().enumerate() {
                    let gain = imp
                        .gains
                        .iter()
                        .find(|(id, _)| id == &ent.id)
                        .map(|(_, g)| g.clone())
                        .unwrap_or_else(|| "-".into());
                    t.row([ent.id.to_string(), imp.allocation[i].to_string(), gain]);
                }
                let mut text = String::from("dominating allocation found (exact rational arithmetic):\n");
                text.push_str(&t.render());
                text.push_str(&format!(
                    "strictly improved: {}\nverdict: improvable\n",
                    imp.strict
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                Outcome::new(
                    text,
                    Report::new("pareto", "improvable", exit::INEFFICIENT, report::body(&imp)),
                )
            }
        });
    }
    let found = find_improver(&loaded.economy, &cand.allocation, &cand.state, policy, cap)?;
    Ok(match found {
        None => Outcome::new(
            format!(
                "no feasible allocation dominates the candidate at state {} (policy: {})\nverdict: efficient\n",
                cand.state,
                policy_name(policy)
            ),
            Report::new("pareto", "efficient", exit::PASS, json!({"improver": null})),
        ),
        Some(imp) => {
            let mut text = improver_text(&loaded.economy, &imp);
            text.push_str("verdict: improvable\n");
            Outcome::new(
                text,
                Report::new("pareto", "improvable", exit::INEFFICIENT, report::body(&imp)),
            )
        }
    })
}

/// `scenario NAME`
pub fn scenario_cmd(name: &str, cap: u64) -> CResult<Outcome> {
    let s = scenario(name)?;
    let cand = &s.candidate;
    let d = diagnose(&s.economy, &cand.state, &DiagnoseOptions::default())?;
    let eq = verify_equilibrium(&s.economy, cand)?;
    let improver = find_improver(
        &s.economy,
        &cand.allocation,
        &cand.state,
        ImproverPolicy::Faithful,
        cap,
    )?;
    let twin_agree = match &s.contested_twin {
        Some(twin) => Some(
            compare_status_assignments(
                &s.economy,
                twin,
                &cand.allocation,
                &cand.state,
                ImproverPolicy::Faithful,
                cap,
            )?
            .agree,
        ),
        None => None,
    };

    let mut text = format!("scenario {}: {}\n\n", s.name, s.description);
    text.push_str(&report::diagnosis_text(&d));
    text.push_str(&format!(
        "\nequilibrium clauses: {}\n",
        pass(eq.holds())
    ));
    match &improver {
        None => text.push_str("improver search: none; the candidate is efficient\n"),
        Some(imp) => {
            text.push('\n');
            text.push_str(&improver_text(&s.economy, imp));
        }
    }
    if let Some(agree) = twin_agree {
        text.push_str(&format!(
            "contested status reading: efficiency verdicts {} across the two assignments\n",
            if agree { "agree" } else { "diverge" }
        ));
    }
    let (verdict, code) = if !d.all_hold() {
        ("condition-failure", exit::CONDITION_FAILURE)
    } else if improver.is_some() {
        ("improvable", exit::INEFFICIENT)
    } else {
        ("efficient", exit::PASS)
    };
    text.push_str(&format!("verdict: {verdict}\n"));
    let body = json!({
        "name": s.name,
        "description": s.description,
        "diagnosis": report::diagnosis_body(&d),
        "equilibrium": report::body(&eq),
        "improver": report::body(&improver),
        "contested_verdicts_agree": twin_agree,
    });
    Ok(Outcome::new(text, Report::new("scenario", verdict, code, body)))
}

/// `fuzz --seed S --count N [--ablate COND]`
pub fn fuzz(seed: u64, count: u64, ablate: Option<ConditionId>, cap: u64) -> CResult<Outcome> {
    let profile = GeneratorProfile::default();
    let mut mismatches: Vec<(u64, String)> = Vec::new();
    let mut inefficiency = false;
    for i in 0..count {
        let s = seed.wrapping_add(i);
        let (e, cand) = generate_random_economy(s, &profile, ablate)?;
        let d = diagnose(&e, &cand.state, &DiagnoseOptions::default())?;
        match ablate {
            None => {
                if !d.all_hold() {
                    let names = failing_names(&d);
                    mismatches.push((s, format!("conditions failed on a conforming instance: {names}")));
                    continue;
                }
                let eq = verify_equilibrium(&e, &cand)?;
                if !eq.holds() {
                    mismatches.push((s, "equilibrium clauses failed on a conforming instance".into()));
                    continue;
                }
                if let Some(imp) =
                    find_improver(&e, &cand.allocation, &cand.state, ImproverPolicy::Faithful, cap)?
                {
                    inefficiency = true;
                    mismatches.push((
                        s,
                        format!(
                            "dominating allocation found on a conforming instance (strict: {})",
                            imp.strict
                                .iter()
                                .map(|x| x.to_string())
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    ));
                }
            }
            Some(c) => {
                let failing = d.failing();
                if failing != vec![c] {
                    mismatches.push((
                        s,
                        format!(
                            "expected exactly {} to fail, observed: {}",
                            c.as_str(),
                            failing_names(&d)
                        ),
                    ));
                }
            }
        }
    }
    let matched = count - mismatches.len() as u64;
    let expectation = match ablate {
        None => "efficient".to_string(),
        Some(c) => format!("failing exactly {}", c.as_str()),
    };
    let mut text = format!(
        "fuzz: {count} instance{} from seed {seed}, expecting each {expectation}\n",
        if count == 1 { "" } else { "s" }
    );
    for (s, detail) in mismatches.iter().take(10) {
        text.push_str(&format!("  seed {s}: {detail}\n"));
    }
    if mismatches.len() > 10 {
        text.push_str(&format!("  ... and {} more\n", mismatches.len() - 10));
    }
    text.push_str(&format!("{matched}/{count} {expectation}\n"));
    let (verdict, code) = if mismatches.is_empty() {
        ("as-expected", exit::PASS)
    } else if inefficiency {
        ("inefficiency-found", exit::INEFFICIENT)
    } else {
        ("expectation-mismatch", exit::CONDITION_FAILURE)
    };
    let body = json!({
        "seed": seed,
        "count": count,
        "ablate": ablate.map(|c| c.as_str()),
        "matched": matched,
        "mismatches": mismatches
            .iter()
            .map(|(s, d)| json!({"seed": s, "detail": d}))
            .collect::<Vec<_>>(),
    });
    Ok(Outcome::new(text, Report::new("fuzz", verdict, code, body)))
}

fn failing_names(d: &Diagnosis) -> String {
    let names: Vec<&str> = d.failing().iter().map(|c| c.as_str()).collect();
    if names.is_empty() {
        "none".into()
    } else {
        names.join(", ")
    }
}

/// `delegation-bound DELEGATE INPUT [--state S] [--chain-rule R]`
pub fn delegation_bound(
    delegate: &str,
    input: &str,
    state: Option<&str>,
    rule: ChainRule,
) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let st = pick_state(&loaded, state)?;
    let id = EntityId::new(delegate);
    let div = paretolab_core::delegation::chain_divergence(&loaded.economy, &id, &st, rule)?;
    let bound = 2.0 * div.total;
    let mut text = format!(
        "delegation chain for {}: {} -> principal {} (rule: {}, state: {st})\n",
        id,
        div.path
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" -> "),
        div.principal,
        div.rule.as_str(),
    );
    let mut t = Table::new(["delegate", "compared against", "sup |divergence|"]);
    for link in &div.links {
        t.row([link.delegate.to_string(), link.against.clone(), fnum(link.sup_abs)]);
    }
    text.push_str(&t.render());
    text.push_str(&format!(
        "composed divergence: {}\nwelfare loss bound: {}\n",
        fnum(div.total),
        fnum(bound)
    ));
    let body = json!({
        "divergence": report::body(&div),
        "loss_bound": bound,
    });
    Ok(Outcome::new(
        text,
        Report::new("delegation-bound", "bounded", exit::PASS, body),
    ))
}

/// `pigouvian CHANNEL INPUT [--state S] [--step F] [--emit]`
pub fn pigouvian(
    channel: &str,
    input: &str,
    state: Option<&str>,
    step: f64,
    emit: bool,
) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let st = pick_state(&loaded, state)?;
    let cid = ChannelId::new(channel);
    let tau = pigouvian_tau(&loaded.economy, &cid, &st, step)?;
    let corrected = apply_correction(&loaded.economy, &cid, &st, step)?;
    let before = diagnose(&loaded.economy, &st, &DiagnoseOptions::default())?;
    let after = diagnose(&corrected, &st, &DiagnoseOptions::default())?;
    let cond = ConditionId::ExternalityInternalization;
    let before_holds = before.report(cond).holds;
    let after_holds = after.report(cond).holds;
    let restored = after_holds;
    let canonical = format::emit(&corrected, loaded.candidate.as_ref());

    let text = if emit {
        canonical.clone()
    } else {
        let mut text = format!(
            "corrective schedule for channel {cid} at state {st} (step {})\n",
            fnum(step)
        );
        let mut t = Table::new(["action", "tau"]);
        for (a, v) in &tau {
            t.row([a.to_string(), fnum(*v)]);
        }
        text.push_str(&t.render());
        text.push_str(&format!(
            "{}: before {}, after {}\n",
            failure_mode(cond),
            pass(before_holds),
            pass(after_holds)
        ));
        text.push_str(&format!(
            "verdict: {}\n",
            if restored {
                "correction internalizes the channel"
            } else {
                "correction leaves the channel uninternalized"
            }
        ));
        text
    };
    let code = if restored { exit::PASS } else { exit::CONDITION_FAILURE };
    let verdict = if restored { "internalized" } else { "still-uninternalized" };
    let body = json!({
        "channel": cid.to_string(),
        "state": st.to_string(),
        "step": step,
        "tau": tau.iter().map(|(a, v)| json!({"action": a.to_string(), "tau": v})).collect::<Vec<_>>(),
        "before_holds": before_holds,
        "after_holds": after_holds,
        "corrected": canonical,
    });
    Ok(Outcome::new(text, Report::new("pigouvian", verdict, code, body)))
}

/// `epsilon INPUT --eps E [--delta v,v,...]`
pub fn epsilon(input: &str, eps: f64, delta: Option<&str>, cap: u64) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let cand = require_candidate(&loaded)?;
    let delta: Vec<f64> = match delta {
        None => vec![0.0; loaded.economy.dim()],
        Some(s) => s
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("delta component {p} is not a number"))
                })
            })
            .collect::<CResult<_>>()?,
    };
    let rep = epsilon_gap_bound(&loaded.economy, cand, eps, &delta, cap)?;
    let mut text = format!(
        "price perturbation analysis: eps = {}, delta inf-norm = {}\n",
        fnum(rep.epsilon),
        fnum(rep.delta_inf_norm)
    );
    let mut t = Table::new(["entity", "lipschitz", "bundle norm"]);
    for term in &rep.terms {
        t.row([term.entity.to_string(), fnum(term.lipschitz), fnum(term.bundle_norm)]);
    }
    text.push_str(&t.render());
    text.push_str(&format!(
        "measured welfare gap: {}\ngap bound: {}\nverdict: {}\n",
        fnum(rep.measured_gap),
        fnum(rep.bound),
        if rep.holds { "gap within bound" } else { "gap exceeds bound" }
    ));
    let code = if rep.holds { exit::PASS } else { exit::CONDITION_FAILURE };
    let verdict = if rep.holds { "within-bound" } else { "bound-exceeded" };
    Ok(Outcome::new(
        text,
        Report::new("epsilon", verdict, code, report::body(&rep)),
    ))
}

fn parse_pairs(s: &str, what: &str) -> CResult<Vec<(String, f64)>> {
    s.split(',')
        .map(|part| {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{what} entry {part} is not of the form key=value"))
            })?;
            let x = v.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("{what} value {v} is not a number"))
            })?;
            Ok((k.trim().to_string(), x))
        })
        .collect()
}

/// `lindahl INPUT [--p-s V] [--lambda id=v,...] [--embed state=v,...]`
pub fn lindahl(
    input: &str,
    p_s: Option<f64>,
    lambda: Option<&str>,
    embed: Option<&str>,
    cap: u64,
) -> CResult<Outcome> {
    let loaded = resolve(input)?;
    let cand = require_candidate(&loaded)?;
    let mut block = LindahlBlock::zero(&loaded.economy);
    if let Some(p) = p_s {
        block.p_s = p;
    }
    if let Some(s) = lambda {
        for (k, v) in parse_pairs(s, "lambda")? {
            block.lambdas.insert(EntityId::new(k), v);
        }
    }
    if let Some(s) = embed {
        for (k, v) in parse_pairs(s, "embedding")? {
            block.embeddings.insert(StateId::new(k), v);
        }
    }
    let rep = verify_lindahl(&loaded.economy, cand, &block)?;
    let mut text = format!(
        "extended verification with a priced state dimension (p_s = {}, {} share{}, {} embedded state{})\n",
        fnum(block.p_s),
        block.lambdas.len(),
        if block.lambdas.len() == 1 { "" } else { "s" },
        block.embeddings.len(),
        if block.embeddings.len() == 1 { "" } else { "s" },
    );
    text.push_str(&clause_lines(
        rep.equilibrium.market.holds,
        rep.equilibrium.optimality.holds,
        rep.equilibrium.tools.holds,
        rep.equilibrium.accountability.holds,
    ));
    for f in rep.equilibrium.failure_lines() {
        text.push_str(&format!("  - {f}\n"));
    }
    for f in &rep.cross_failures {
        text.push_str(&format!(
            "  - cross-state: {} prefers {} at state {} (value {} over {}, cost {} within wealth {})\n",
            f.entity,
            f.bundle,
            f.state,
            fnum(f.value),
            fnum(f.base_value),
            fnum(f.cost),
            fnum(f.wealth)
        ));
    }
    if !rep.holds() {
        text.push_str("verdict: not supported under the extended budgets\n");
        let body = json!({"report": report::body(&rep), "cross_improver": null});
        return Ok(Outcome::new(
            text,
            Report::new("lindahl", "not-equilibrium", exit::CONDITION_FAILURE, body),
        ));
    }
    let cross = cross_state_improver(&loaded.economy, &cand.allocation, &cand.state, cap)?;
    match &cross {
        Some(imp) => {
            text.push_str(&format!(
                "cross-state improver at state {}: strictly improved {}\n",
                imp.state,
                imp.strict
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            text.push_str("verdict: a different institutional state dominates\n");
        }
        None => {
            text.push_str("cross-state improver: none\nverdict: supported across states\n");
        }
    }
    let code = if cross.is_some() { exit::INEFFICIENT } else { exit::PASS };
    let verdict = if cross.is_some() { "cross-state-improvable" } else { "supported" };
    let body = json!({"report": report::body(&rep), "cross_improver": report::body(&cross)});
    Ok(Outcome::new(text, Report::new("lindahl", verdict, code, body)))
}

/// `compare-sigma INPUT OTHER [--policy P]`
pub fn compare_sigma(input: &str, other: &str, policy: ImproverPolicy, cap: u64) -> CResult<Outcome> {
    let base = resolve(input)?;
    let cand = require_candidate(&base)?;
    let alt = resolve(other)?;
    let cmp = compare_status_assignments(
        &base.economy,
        &alt.economy,
        &cand.allocation,
        &cand.state,
        policy,
        cap,
    )?;
    let list = |ids: &[EntityId]| {
        if ids.is_empty() {
            "(empty)".to_string()
        } else {
            ids.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
    };
    let side = |imp: &Option<Improver>| match imp {
        None => "efficient".to_string(),
        Some(i) => format!(
            "improvable (strict: {})",
            i.strict.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut text = format!(
        "welfare-bearing set under {}: {}\nwelfare-bearing set under {}: {}\n",
        base.origin,
        list(&cmp.bearing_a),
        alt.origin,
        list(&cmp.bearing_b)
    );
    text.push_str(&format!(
        "{}: {}\n{}: {}\n",
        base.origin,
        side(&cmp.improver_a),
        alt.origin,
        side(&cmp.improver_b)
    ));
    text.push_str(&format!(
        "verdict: efficiency verdicts {}\n",
        if cmp.agree { "agree across the readings" } else { "diverge across the readings" }
    ));
    let improvable = cmp.improver_a.is_some() || cmp.improver_b.is_some();
    let code = if improvable { exit::INEFFICIENT } else { exit::PASS };
    let verdict = if cmp.agree { "verdicts-agree" } else { "verdicts-diverge" };
    Ok(Outcome::new(
        text,
        Report::new("compare-sigma", verdict, code, report::body(&cmp)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_resolve_and_files_round_trip_through_resolve() {
        let loaded = resolve("example2").unwrap();
        assert!(loaded.candidate.is_some());
        assert_eq!(loaded.origin, "scenario example2");
        let err = match resolve("no_such_input") {
            Err(e) => e,
            Ok(_) => panic!("expected an error"),
        };
        assert!(matches!(err, CliError::Usage(_)));
        assert!(err.to_string().contains("built-ins"));
    }

    #[test]
    fn diagnose_exit_codes_follow_the_verdict() {
        let clean = diagnose_cmd("classical_e0", None, ChainRule::Incremental).unwrap();
        assert_eq!(clean.report.exit_code, exit::PASS);
        let failing = diagnose_cmd("example2", None, ChainRule::Incremental).unwrap();
        assert_eq!(failing.report.exit_code, exit::CONDITION_FAILURE);
        assert!(failing.text.contains("autonomy externality"), "{}", failing.text);
    }

    #[test]
    fn pareto_flags_inefficiency_with_exit_three() {
        let eff = pareto("classical_e0", ImproverPolicy::Faithful, false, paretolab_core::DEFAULT_CAP)
            .unwrap();
        assert_eq!(eff.report.exit_code, exit::PASS);
        let exact = pareto("classical_e0", ImproverPolicy::Faithful, true, paretolab_core::DEFAULT_CAP)
            .unwrap();
        assert_eq!(exact.report.exit_code, exit::PASS);
        let imp = pareto("example1", ImproverPolicy::Faithful, false, paretolab_core::DEFAULT_CAP)
            .unwrap();
        assert_eq!(imp.report.exit_code, exit::INEFFICIENT);
        assert!(imp.text.contains("strictly improved"), "{}", imp.text);
    }

    #[test]
    fn fuzz_matches_expectations_on_both_modes() {
        let clean = fuzz(7, 20, None, paretolab_core::DEFAULT_CAP).unwrap();
        assert_eq!(clean.report.exit_code, exit::PASS, "{}", clean.text);
        assert!(clean.text.contains("20/20"), "{}", clean.text);
        let ablated = fuzz(
            11,
            10,
            Some(ConditionId::RightsCompleteness),
            paretolab_core::DEFAULT_CAP,
        )
        .unwrap();
        assert_eq!(ablated.report.exit_code, exit::PASS, "{}", ablated.text);
    }

    #[test]
    fn pigouvian_restores_internalization_on_the_externality_scenario() {
        let out = pigouvian("attention", "example2", None, 1.0, false);
        let out = match out {
            Ok(o) => o,
            Err(e) => panic!("pigouvian failed: {e}"),
        };
        assert_eq!(out.report.exit_code, exit::PASS, "{}", out.text);
        assert!(out.text.contains("before FAIL, after pass"), "{}", out.text);
    }
}
