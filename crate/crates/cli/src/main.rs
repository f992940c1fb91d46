//! `lhvkit` command-line tool. Every output is CSV or JSON.
//!
//! Exit codes: 0 success, 1 computation-level failure (infeasible model,
//! empty denominators, solver breakdown), 2 usage or input errors.

mod reproduce;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lhvkit::analysis::{
    christensen_ratios, consistency_flags, estimate_etas, expected_counts, gamma_bounds, sampled_counts,
    synth_experiment_record, unfair_sampling_table, ExperimentRecord,
};
use lhvkit::inequalities::{
    ch_genuine, ch_nongenuine, ch_nongenuine_subsample, ch_normalized, ch_operational, ch_operational_probs,
    ch_two_channel, ch_two_channel_probs, chsh, coincidence_correction, coincidence_correlations, eberhard,
    eberhard_counts_report, eberhard_qm, BetaReport, Convention, CountTable, Dressed, Statistics,
};
use lhvkit::io::{read_ensemble, write_ensemble, write_predictions, WeightMode};
use lhvkit::lhv::{
    build_app_d_model, build_crosstalk_m3, build_m, build_m_double_prime, eta_crit_chsh, extend_to_m_prime,
    m_double_prime_signed, m_prime_signed, AppDModel, ContextualEnsemble, Ensemble, StateSpace,
};
use lhvkit::quantum::AngleConvention;
use lhvkit::scenario::{AngleSpec, Permutation, Preset, Scenario, StateSpec};
use lhvkit::solver::{find_eta_crit, sweep, ConditionKind, EtaSearch, SweepConfig};
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Bad flags or unreadable input: exit code 2.
#[derive(Debug)]
struct Usage(String);

/// The requested model does not exist for this input: exit code 1.
#[derive(Debug)]
struct Infeasible(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}
impl std::error::Error for Infeasible {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "lhvkit", version, about = "LHV models, Bell inequalities and critical detection rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum joint and marginal probabilities for a scenario.
    Predict {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Directory for predictions.csv (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one inequality and print its report as JSON.
    Eval(EvalArgs),
    /// Write an ensemble CSV for a named construction.
    BuildModel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        eta: Option<f64>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Directory for model.csv (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical detection rate for one scenario.
    EtaCrit {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Directory for result.json and model.csv (JSON on stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical rates over a θ grid; CSV rows theta,eta,mu,feasible,etaCrit.
    Sweep {
        /// Sweep JSON {state, thetaGrid, kind, space, tol, step}.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "psi1")]
        state: StateSpec,
        /// Comma-separated θ values.
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagnostics on experiment records and count tables.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Expected (or, with --seed, sampled) counts for a model or scenario.
    SynthCounts(SynthArgs),
    /// Regenerate the data behind a figure or table.
    Reproduce(reproduce::ReproduceArgs),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario JSON file; replaces the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// psi1, psi2, giustina:R or larsson:XI.
    #[arg(long, default_value = "psi1")]
    state: StateSpec,
    /// Observables A1 = 0, A2 = 2θ, B1 = θ, B2 = 3θ.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Use the Giustina polarizer angles instead of --theta.
    #[arg(long, conflicts_with = "theta")]
    giustina_angles: bool,
    #[arg(long, value_enum, default_value_t = AngleConv::Bloch)]
    angle_convention: AngleConv,
    /// none, labels (o↔e), directions (H↔V) or both.
    #[arg(long, default_value = "none")]
    permute: Permutation,
}

#[derive(Clone, Copy, ValueEnum)]
enum AngleConv {
    Bloch,
    Polarizer,
}

impl ScenarioArgs {
    fn given(&self) -> bool {
        self.config.is_some() || self.theta.is_some() || self.giustina_angles
    }

    fn scenario(&self) -> anyhow::Result<Scenario> {
        if let Some(path) = &self.config {
            return Ok(Scenario::from_json(&read_text(path)?)?);
        }
        let angles = if self.giustina_angles {
            AngleSpec::Preset {
                preset: Preset::Giustina,
            }
        } else {
            let theta = self
                .theta
                .ok_or_else(|| usage("a scenario needs --theta, --giustina-angles or --config"))?;
            AngleSpec::Theta { theta }
        };
        let convention = match (self.angle_convention, self.giustina_angles) {
            // The preset angles are polarizer angles whatever the flag says.
            (_, true) | (AngleConv::Polarizer, _) => AngleConvention::Polarizer,
            (AngleConv::Bloch, false) => AngleConvention::Bloch,
        };
        Ok(Scenario {
            state: self.state.clone(),
            angles,
            convention,
            permutations: self.permute,
        })
    }
}

#[derive(Args, Clone, Copy)]
struct SearchArgs {
    #[arg(long, default_value = "both")]
    kind: ConditionKind,
    #[arg(long, default_value = "reduced")]
    space: StateSpace,
    #[arg(long, default_value_t = 5e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Keep descending to this η after the critical rate is found.
    #[arg(long)]
    trace_floor: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// The CHSH model M (--beta).
    M,
    /// M plus no-polarizer responses (--beta, or --eta for the signed family).
    MPrime,
    /// M with half-probability no-polarizer responses (--beta, or --eta).
    MDoublePrime,
    /// Context-dependent cross-talk model.
    Crosstalk,
    /// Closed-form model for η ≤ ½ (needs --eta and a scenario).
    AppD,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// CHSH value the model reproduces.
    #[arg(long)]
    beta: Option<f64>,
    /// Ensemble CSV (instrA1,instrA2,instrB1,instrB2,pA,pB,weight).
    #[arg(long, conflicts_with = "model")]
    ensemble: Option<PathBuf>,
    /// Rescale ensemble weights to unit total instead of rejecting them.
    #[arg(long)]
    normalize: bool,
}

enum Model {
    Plain(Ensemble),
    Contextual(ContextualEnsemble),
}

impl ModelArgs {
    fn load(&self, eta: Option<f64>, scenario: &ScenarioArgs) -> anyhow::Result<Option<Model>> {
        if let Some(path) = &self.ensemble {
            let mode = if self.normalize { WeightMode::Normalize } else { WeightMode::Strict };
            let ens = read_ensemble(open(path)?, mode).with_context(|| format!("reading {}", path.display()))?;
            return Ok(Some(Model::Plain(ens)));
        }
        let Some(kind) = self.model else { return Ok(None) };
        let ens = match (kind, self.beta, eta) {
            (ModelKind::Crosstalk, _, _) => return Ok(Some(Model::Contextual(build_crosstalk_m3()))),
            (ModelKind::M, Some(b), _) => build_m(b)?,
            (ModelKind::MPrime, Some(b), _) => extend_to_m_prime(&build_m(b)?)?,
            (ModelKind::MDoublePrime, Some(b), _) => build_m_double_prime(b)?,
            (ModelKind::MPrime, None, Some(e)) => m_prime_signed(e)?,
            (ModelKind::MDoublePrime, None, Some(e)) => m_double_prime_signed(e)?,
            (ModelKind::AppD, _, Some(e)) => {
                let pred = scenario.scenario()?.prediction_set()?;
                match build_app_d_model(&pred, e)? {
                    AppDModel::Feasible { ensemble, .. } => ensemble,
                    AppDModel::Infeasible { negative, rho0 } => {
                        return Err(Infeasible(format!(
                            "closed-form model infeasible at eta = {e}: {} negative weights, rho0 = {rho0}",
                            negative.len()
                        ))
                        .into())
                    }
                }
            }
            (ModelKind::M, None, _) => bail!(usage("model m needs --beta")),
            (ModelKind::AppD, _, None) => bail!(usage("model app-d needs --eta and a scenario")),
            _ => bail!(usage("this model needs --beta or --eta")),
        };
        Ok(Some(Model::Plain(ens)))
    }

    /// η implied by --beta when --eta is absent.
    fn implied_eta(&self, eta: Option<f64>) -> anyhow::Result<Option<f64>> {
        Ok(match (eta, self.beta) {
            (Some(e), _) => Some(e),
            (None, Some(b)) if self.model.is_some() => Some(eta_crit_chsh(b)?),
            _ => None,
        })
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    inequality: Inequality,
    #[arg(long, default_value = "paper")]
    convention: Convention,
    /// Detection rate: dresses quantum predictions, parametrizes the
    /// non-genuine forms and selects a member of the signed model families.
    #[arg(long)]
    eta: Option<f64>,
    /// Emitted pairs for eberhard-eta.
    #[arg(long, default_value_t = 4)]
    pairs: u64,
    #[command(flatten)]
    model: ModelArgs,
    /// Count table CSV (context,i,j,outcomeA,outcomeB,count).
    #[arg(long, conflicts_with_all = ["model", "ensemble"])]
    counts: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Inequality {
    Chsh,
    ChGen,
    ChNg,
    ChNgSub,
    ChNorm,
    ChOp,
    Ch2ch,
    Eberhard,
    EberhardEta,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Detection-rate estimates and Γ windows for an experiment record.
    Gamma {
        /// Experiment CSV (kind,i,j,a,b,count).
        #[arg(long)]
        record: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// η window as lo,hi.
        #[arg(long, value_delimiter = ',', required = true)]
        eta_window: Vec<f64>,
        /// Subtracted from the lower end of the window for accidentals.
        #[arg(long, default_value_t = 0.0)]
        background: f64,
    },
    /// Detection rate of one side conditioned on the other side's outcome.
    Unfair {
        #[arg(long)]
        counts: PathBuf,
    },
    /// Local-coincidence corrections Δ and M.
    Coincidence {
        #[arg(long)]
        counts: PathBuf,
    },
    /// p1 = s2b / cAB and p2 = s2b / cA'B.
    Christensen {
        #[arg(long)]
        s2b: u64,
        #[arg(long)]
        cab: u64,
        #[arg(long)]
        capb: u64,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Trials per context, or emitted pairs with --record.
    #[arg(long)]
    trials: u64,
    /// Draw a multinomial sample with this seed instead of rounding
    /// expectations.
    #[arg(long)]
    seed: Option<u64>,
    /// Detection rate applied to quantum predictions.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Write a single-channel experiment record instead of a count table.
    #[arg(long)]
    record: bool,
    #[arg(long)]
    eta_a: Option<f64>,
    #[arg(long)]
    eta_b: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn open(path: &Path) -> anyhow::Result<File> {
    File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))
}

fn read_counts(path: &Path) -> anyhow::Result<CountTable> {
    CountTable::read_csv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Writes to `dir/name`, or to stdout when no directory is given.
fn with_output(
    dir: Option<&Path>,
    name: &str,
    f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match dir {
        Some(d) => {
            let path = d.join(name);
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = std::io::stdout().lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(v: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    with_output(None, "", |w| Ok(writeln!(w, "{text}")?))
}

fn need_eta(eta: Option<f64>) -> anyhow::Result<f64> {
    eta.ok_or_else(|| usage("this inequality needs --eta"))
}

fn eval_statistics(s: &impl Statistics, ineq: Inequality, conv: Convention, eta: Option<f64>) -> anyhow::Result<BetaReport> {
    Ok(match ineq {
        Inequality::Chsh => chsh(&coincidence_correlations(s)?, conv),
        Inequality::ChGen => ch_genuine(s, conv),
        Inequality::ChNg => ch_nongenuine(s, need_eta(eta)?)?,
        Inequality::ChNgSub => ch_nongenuine_subsample(s, need_eta(eta)?)?,
        Inequality::ChNorm => ch_normalized(s, need_eta(eta)?)?,
        Inequality::ChOp => ch_operational_probs(s)?,
        Inequality::Ch2ch => ch_two_channel_probs(s)?,
        Inequality::Eberhard => eberhard(s),
        Inequality::EberhardEta => bail!(usage("eberhard-eta needs a quantum scenario")),
    })
}

fn run_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let report = if let Some(path) = &a.counts {
        let t = read_counts(path)?;
        match a.inequality {
            // Exact rational estimators straight from the counts.
            Inequality::ChOp => ch_operational(&t)?,
            Inequality::Ch2ch => ch_two_channel(&t)?,
            Inequality::Eberhard => eberhard_counts_report(&t),
            other => eval_statistics(&t, other, a.convention, a.eta)?,
        }
    } else if let Some(model) = a.model.load(a.eta, &a.scenario)? {
        match model {
            Model::Plain(ens) => eval_statistics(&ens, a.inequality, a.convention, a.model.implied_eta(a.eta)?)?,
            Model::Contextual(c) => match a.inequality {
                Inequality::Chsh => chsh(&coincidence_correlations(&c)?, a.convention),
                Inequality::Eberhard => eberhard(&c),
                _ => bail!(usage("the cross-talk model only supports chsh and eberhard")),
            },
        }
    } else if a.scenario.given() {
        let pred = a.scenario.scenario()?.prediction_set()?;
        let eta = a.eta.unwrap_or(1.0);
        match a.inequality {
            Inequality::EberhardEta => eberhard_qm(&pred, eta, a.pairs)?,
            other => eval_statistics(&Dressed::new(&pred, eta), other, a.convention, Some(eta))?,
        }
    } else {
        bail!(usage("eval needs --counts, --model, --ensemble or a scenario"));
    };
    print_json(&report)
}

fn run_eta_crit(scenario: &ScenarioArgs, search: SearchArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let pred = scenario.scenario()?.prediction_set()?;
    let opts = EtaSearch {
        tol: search.tol,
        step: search.step,
        trace_floor: search.trace_floor,
    };
    let r = find_eta_crit(&pred, search.kind, search.space, opts)?;
    let summary = serde_json::json!({
        "etaCrit": r.eta_crit,
        "fallback": r.fallback,
        "kind": search.kind,
        "space": search.space,
        "step": search.step,
        "tol": search.tol,
        "trace": r.trace,
    });
    match out {
        None => print_json(&summary),
        Some(dir) => {
            with_output(Some(dir), "result.json", |w| {
                writeln!(w, "{}", serde_json::to_string_pretty(&summary)?)?;
                Ok(())
            })?;
            with_output(Some(dir), "model.csv", |w| Ok(write_ensemble(&r.model, w)?))
        }
    }
}

fn run_analyze(a: AnalyzeCommand) -> anyhow::Result<()> {
    match a {
        AnalyzeCommand::Gamma {
            record,
            scenario,
            eta_window,
            background,
        } => {
            let [lo, hi] = eta_window[..] else {
                bail!(usage("--eta-window takes two values lo,hi"));
            };
            let rec =
                ExperimentRecord::read_csv(open(&record)?).with_context(|| format!("reading {}", record.display()))?;
            let pred = scenario.scenario()?.prediction_set()?;
            let (eta_a, eta_b) = estimate_etas(&rec, &pred)?;
            let report = gamma_bounds(&rec, &pred, (lo, hi), background)?;
            let flags = consistency_flags(&report);
            print_json(&serde_json::json!({
                "etaA": eta_a,
                "etaB": eta_b,
                "gamma": report,
                "inconsistent": flags,
            }))
        }
        AnalyzeCommand::Unfair { counts } => print_json(&unfair_sampling_table(&read_counts(&counts)?)),
        AnalyzeCommand::Coincidence { counts } => print_json(&coincidence_correction(&read_counts(&counts)?)?),
        AnalyzeCommand::Christensen { s2b, cab, capb } => {
            let (p1, p2) = christensen_ratios(s2b, cab, capb)?;
            print_json(&serde_json::json!({ "p1": p1, "p2": p2 }))
        }
    }
}

fn run_synth(a: &SynthArgs) -> anyhow::Result<()> {
    if a.record {
        let pred = a.scenario.scenario()?.prediction_set()?;
        let rec = synth_experiment_record(&pred, a.eta_a.unwrap_or(a.eta), a.eta_b.unwrap_or(a.eta), a.trials)?;
        return with_output(a.out.as_deref(), "record.csv", |w| Ok(rec.write_csv(w)?));
    }
    let table = match a.model.load(Some(a.eta), &a.scenario)? {
        Some(Model::Plain(ens)) => {
            if ens.is_signed() {
                bail!(usage("counts need an ensemble with nonnegative weights"));
            }
            match a.seed {
                Some(s) => sampled_counts(&ens, a.trials, s)?,
                None => expected_counts(&ens, a.trials)?,
            }
        }
        Some(Model::Contextual(_)) => bail!(usage("the cross-talk model has no polarizer-free statistics")),
        None => {
            let pred = a.scenario.scenario()?.prediction_set()?;
            let d = Dressed::new(&pred, a.eta);
            match a.seed {
                Some(s) => sampled_counts(&d, a.trials, s)?,
                None => expected_counts(&d, a.trials)?,
            }
        }
    };
    with_output(a.out.as_deref(), "counts.csv", |w| Ok(table.write_csv(w)?))
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Predict { scenario, out } => {
            let p = scenario.scenario()?.prediction_set()?;
            with_output(out.as_deref(), "predictions.csv", |w| Ok(write_predictions(&p, w)?))
        }
        Command::Eval(a) => run_eval(&a),
        Command::BuildModel {
            model,
            eta,
            scenario,
            out,
        } => match model.load(eta, &scenario)? {
            Some(Model::Plain(ens)) => with_output(out.as_deref(), "model.csv", |w| Ok(write_ensemble(&ens, w)?)),
            Some(Model::Contextual(_)) => {
                bail!(usage("the cross-talk model is context dependent and has no single ensemble"))
            }
            None => bail!(usage("build-model needs --model or --ensemble")),
        },
        Command::EtaCrit { scenario, search, out } => run_eta_crit(&scenario, search, out.as_deref()),
        Command::Sweep {
            config,
            state,
            thetas,
            search,
            out,
        } => {
            let cfg = match config {
                Some(path) => SweepConfig::from_json(&read_text(&path)?)?,
                None if thetas.is_empty() => bail!(usage("sweep needs --config or --thetas")),
                None => SweepConfig {
                    state,
                    theta_grid: thetas,
                    kind: search.kind,
                    space: search.space,
                    tol: search.tol,
                    step: search.step,
                },
            };
            let points = sweep(&cfg, search.trace_floor)?;
            with_output(out.as_deref(), "sweep.csv", |w| reproduce::write_sweep(&points, w))
        }
        Command::Analyze(a) => run_analyze(a),
        Command::SynthCounts(a) => run_synth(&a),
        Command::Reproduce(a) => reproduce::run(&a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    if e.downcast_ref::<Infeasible>().is_some() {
        return 1;
    }
    match e.downcast_ref::<lhvkit::Error>() {
        Some(
            lhvkit::Error::ZeroProbability | lhvkit::Error::ZeroDenominator(_) | lhvkit::Error::IterationLimit { .. },
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`| head`) is not a failure.
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
