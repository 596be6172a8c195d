//! Binary entry point: argument parsing and dispatch.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use paretolab_cli::commands::{self, CliError, Outcome};
use paretolab_cli::exit;
use paretolab_core::conditions::ConditionId;
use paretolab_core::DEFAULT_CAP;

/// Verification laboratory for welfare analysis of finite economies with
/// autonomous entities: diagnostics, equilibrium checking, and exhaustive
/// efficiency search over discretized allocations.
#[derive(Parser)]
#[command(name = "paretolab", version, max_term_width = 100)]
struct Cli {
    /// Print the machine-readable report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Redo numeric comparisons in exact rational arithmetic
    /// (check-eq and pareto only).
    #[arg(long, global = true)]
    exact: bool,
    /// Largest grid product an exhaustive search may walk.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

/// An input argument names either an economy file on disk or, when no
/// such file exists, a built-in scenario.
#[derive(Args)]
struct Input {
    /// Economy file or built-in scenario name.
    input: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an economy and report whether it is well-formed.
    Validate {
        #[command(flatten)]
        src: Input,
        /// Print the canonical form of the input instead of a summary.
        #[arg(long)]
        emit: bool,
    },
    /// Check the four supported-equilibrium clauses at the candidate.
    CheckEq {
        #[command(flatten)]
        src: Input,
    },
    /// Run the seven-condition diagnostic battery.
    Diagnose {
        #[command(flatten)]
        src: Input,
        /// Institutional state to diagnose; defaults to the candidate's.
        #[arg(long)]
        state: Option<String>,
        /// How delegation chains compose: plain-sum or incremental.
        #[arg(long, default_value = "incremental")]
        chain_rule: String,
    },
    /// Exhaustively search for a feasible allocation dominating the candidate.
    Pareto {
        #[command(flatten)]
        src: Input,
        /// Rights handling: faithful or budget-aligned.
        #[arg(long, default_value = "faithful")]
        policy: String,
    },
    /// Run a built-in scenario through the whole pipeline.
    Scenario {
        /// Scenario name.
        name: String,
    },
    /// Generate random instances and check them against expectations.
    Fuzz {
        /// Base seed; instance i uses seed + i.
        #[arg(long)]
        seed: u64,
        /// Number of instances.
        #[arg(long)]
        count: u64,
        /// Break exactly this condition in every instance.
        #[arg(long)]
        ablate: Option<String>,
    },
    /// Compose divergence along a delegation chain and bound the welfare loss.
    DelegationBound {
        /// Delegate whose chain to analyze.
        delegate: String,
        #[command(flatten)]
        src: Input,
        /// Institutional state to evaluate at.
        #[arg(long)]
        state: Option<String>,
        /// How delegation chains compose: plain-sum or incremental.
        #[arg(long, default_value = "incremental")]
        chain_rule: String,
    },
    /// Compute a corrective transfer schedule for a channel and re-diagnose.
    Pigouvian {
        /// Channel to correct.
        channel: String,
        #[command(flatten)]
        src: Input,
        /// Institutional state to evaluate effects at.
        #[arg(long)]
        state: Option<String>,
        /// Scaling of the correction.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Print the corrected economy in canonical form.
        #[arg(long)]
        emit: bool,
    },
    /// Bound the welfare gap of approximately supporting prices.
    Epsilon {
        #[command(flatten)]
        src: Input,
        /// Size of the admissible price perturbation.
        #[arg(long)]
        eps: f64,
        /// Actual per-coordinate price error, comma-separated; defaults to zero.
        #[arg(long)]
        delta: Option<String>,
    },
    /// Verify with personalized state prices and scan across states.
    Lindahl {
        #[command(flatten)]
        src: Input,
        /// Price of the public state dimension.
        #[arg(long)]
        p_s: Option<f64>,
        /// Personalized shares, id=value comma-separated; must sum to p_s.
        #[arg(long)]
        lambda: Option<String>,
        /// Scalar state embeddings, state=value comma-separated.
        #[arg(long)]
        embed: Option<String>,
    },
    /// Compare efficiency verdicts under two status assignments.
    CompareSigma {
        #[command(flatten)]
        src: Input,
        /// Second economy carrying the alternative assignment.
        other: String,
        /// Rights handling: faithful or budget-aligned.
        #[arg(long, default_value = "faithful")]
        policy: String,
    },
}

fn parse_ablate(s: Option<&str>) -> Result<Option<ConditionId>, CliError> {
    match s {
        None => Ok(None),
        Some(name) => ConditionId::parse(name).map(Some).ok_or_else(|| {
            CliError::Usage(format!("unknown condition {name}; expected a condition name like rights-completeness"))
        }),
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if cli.exact && !matches!(cli.cmd, Cmd::CheckEq { .. } | Cmd::Pareto { .. }) {
        return Err(CliError::Usage(
            "exact rational arithmetic applies to check-eq and pareto only".into(),
        ));
    }
    match &cli.cmd {
        Cmd::Validate { src, emit } => commands::validate(&src.input, *emit),
        Cmd::CheckEq { src } => commands::check_eq(&src.input, cli.exact),
        Cmd::Diagnose { src, state, chain_rule } => commands::diagnose_cmd(
            &src.input,
            state.as_deref(),
            commands::parse_chain_rule(chain_rule)?,
        ),
        Cmd::Pareto { src, policy } => commands::pareto(
            &src.input,
            commands::parse_policy(policy)?,
            cli.exact,
            cli.cap,
        ),
        Cmd::Scenario { name } => commands::scenario_cmd(name, cli.cap),
        Cmd::Fuzz { seed, count, ablate } => {
            commands::fuzz(*seed, *count, parse_ablate(ablate.as_deref())?, cli.cap)
        }
        Cmd::DelegationBound { delegate, src, state, chain_rule } => commands::delegation_bound(
            delegate,
            &src.input,
            state.as_deref(),
            commands::parse_chain_rule(chain_rule)?,
        ),
        Cmd::Pigouvian { channel, src, state, step, emit } => {
            commands::pigouvian(channel, &src.input, state.as_deref(), *step, *emit)
        }
        Cmd::Epsilon { src, eps, delta } => {
            commands::epsilon(&src.input, *eps, delta.as_deref(), cli.cap)
        }
        Cmd::Lindahl { src, p_s, lambda, embed } => commands::lindahl(
            &src.input,
            *p_s,
            lambda.as_deref(),
            embed.as_deref(),
            cli.cap,
        ),
        Cmd::CompareSigma { src, other, policy } => commands::compare_sigma(
            &src.input,
            other,
            commands::parse_policy(policy)?,
            cli.cap,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::PASS,
                _ => exit::INPUT,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                print!("{}", out.report.machine());
            } else {
                print!("{}", out.text);
            }
            ExitCode::from(out.report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
