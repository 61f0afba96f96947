//! `bdsfs`: simulate sampled birth-death genealogies and check the limit
//! laws of their site frequency spectrum.
//!
//! Exit status: 0 when every reported check passes, 2 when a statistical
//! check fails, 1 on usage or runtime errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bdsfs::approx::{r_ge2_terms, r_k_terms, sample_approx};
use bdsfs::coalescent::{place_mutations, sample_tree};
use bdsfs::contour::{contour_population_at_t, simulate_contour};
use bdsfs::forward::{conditioned_forward, sfs_from_genealogy, ForwardConfig};
use bdsfs::harness::{self, ExperimentConfig, Mode, TRule, TestReport};
use bdsfs::sfsstats::sfs_from_marked_tree;
use bdsfs::streams::{domain, replicate_rng};
use bdsfs::{RateParams, SamplingFrame};

#[derive(Parser)]
#[command(name = "bdsfs", version, about = "Sampled birth-death genealogies and their site frequency spectrum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward Gillespie simulation conditioned on at least n survivors.
    Forward(GenArgs),
    /// Contour-process simulation of the population at T.
    Contour(ContourArgs),
    /// Backward construction of the sampled tree with mutational events.
    Coalescent(GenArgs),
    /// Large-n approximation of the event counts.
    Approx(GenArgs),
    /// Law of large numbers for R^k / n.
    Lln(ExpArgs),
    /// Central limit theorem for R^{>=2} (and M^{>=2} when nu > 0).
    Clt(ExpArgs),
    /// Forward vs backward joint law of (R^{>=2}, M^{>=2}).
    Oracle(ExpArgs),
    /// Quadrature check of the limit moment constants.
    Moments(MomentArgs),
    /// Quadrature check of the integral identity for x^m / (1+x)^n.
    Identity(IdentityArgs),
}

#[derive(Args, Clone)]
struct RateArgs {
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
}

impl RateArgs {
    fn params(&self) -> bdsfs::Result<RateParams> {
        RateParams::new(self.lambda, self.mu, self.nu)
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Tree topology (coalescent only).
    Newick,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Sampling time.
    #[arg(long = "T", default_value_t = 5.0)]
    horizon: f64,
    /// Frequency class reported by `approx` (R^{>=2} when omitted).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ContourArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Compare the population at T with forward simulation instead of
    /// printing paths.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExpArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Explicit sampling time; overrides --t-rule.
    #[arg(long = "T", conflicts_with = "t_rule")]
    horizon: Option<f64>,
    /// `clt` for (2 ln n + ln ln n + 5)/r, or a number c for c ln n / r.
    #[arg(long)]
    t_rule: Option<String>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "coalescent")]
    mode: String,
    #[command(flatten)]
    out: OutArgs,
}

impl ExpArgs {
    fn config(&self, default_rule: TRule) -> bdsfs::Result<ExperimentConfig> {
        let t_rule = match (&self.horizon, self.t_rule.as_deref()) {
            (Some(t), _) => TRule::Explicit(*t),
            (None, Some("clt")) => TRule::CltDefault,
            (None, Some(c)) => TRule::LogScaled(
                c.parse()
                    .map_err(|_| bdsfs::Error::InvalidParameter(format!("bad --t-rule `{c}`")))?,
            ),
            (None, None) => default_rule,
        };
        Ok(ExperimentConfig {
            params: self.rates.params()?,
            n: self.n,
            t_rule,
            reps: self.reps,
            seed: self.seed,
            mode: self.mode.parse::<Mode>()?,
            k: self.k,
        })
    }
}

#[derive(Args)]
struct MomentArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct IdentityArgs {
    /// Exponent of x; all 0 <= m <= n-2 when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[command(flatten)]
    out: OutArgs,
}

enum Outcome {
    Data,
    Checks(bool),
}

fn emit(out: &OutArgs, text: &str) -> bdsfs::Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_reports(out: &OutArgs, reports: &[TestReport]) -> bdsfs::Result<Outcome> {
    let text = match out.format {
        Format::Json => harness::reports_to_json(reports)? + "\n",
        _ => harness::reports_to_csv(reports),
    };
    emit(out, &text)?;
    for r in reports {
        eprintln!("{}", r.line());
    }
    Ok(Outcome::Checks(harness::all_passed(reports)))
}

fn join_json(docs: Vec<String>) -> String {
    if docs.len() == 1 {
        docs.into_iter().next().unwrap_or_default() + "\n"
    } else {
        format!("[{}]\n", docs.join(",\n"))
    }
}

fn run(cli: Cli) -> bdsfs::Result<Outcome> {
    match cli.command {
        Command::Forward(a) => {
            let params = a.rates.params()?;
            let frame = SamplingFrame::new(a.n, a.horizon)?;
            let mut docs = Vec::new();
            for i in 0..a.reps as u64 {
                let mut rng = replicate_rng(a.seed, domain::FORWARD, i);
                let cs = conditioned_forward(&params, &frame, &ForwardConfig::default(), &mut rng)?;
                docs.push(match a.out.format {
                    Format::Json => cs.genealogy.to_json()?,
                    _ => sfs_from_genealogy(&cs.genealogy, &cs.sample).to_csv(),
                });
            }
            let text = match a.out.format {
                Format::Json => join_json(docs),
                _ => docs.concat(),
            };
            emit(&a.out, &text)?;
            Ok(Outcome::Data)
        }
        Command::Coalescent(a) => {
            let params = a.rates.params()?;
            let frame = SamplingFrame::new(a.n, a.horizon)?;
            let mut docs = Vec::new();
            for i in 0..a.reps as u64 {
                let mut rng = replicate_rng(a.seed, domain::COALESCENT, i);
                let tree = sample_tree(&params, &frame, &mut rng)?;
                let marked = place_mutations(&tree, &params, &mut rng);
                docs.push(match a.out.format {
                    Format::Json => marked.to_json()?,
                    Format::Newick => marked.to_newick() + "\n",
                    Format::Csv => sfs_from_marked_tree(&marked).to_csv(),
                });
            }
            let text = match a.out.format {
                Format::Json => join_json(docs),
                _ => docs.concat(),
            };
            emit(&a.out, &text)?;
            Ok(Outcome::Data)
        }
        Command::Approx(a) => {
            let params = a.rates.params()?;
            let frame = SamplingFrame::new(a.n, a.horizon)?;
            let mut rows = Vec::new();
            for i in 0..a.reps as u64 {
                let mut rng = replicate_rng(a.seed, domain::APPROX, i);
                let draw = sample_approx(&params, &frame, &mut rng)?;
                let count: u64 = match a.k {
                    Some(k) => r_k_terms(&params, &draw, k, &mut rng)?.iter().sum(),
                    None => r_ge2_terms(&params, &draw, &mut rng).iter().sum(),
                };
                rows.push((i, draw.w, draw.y, draw.y_clamped(), count));
            }
            let stat = a.k.map_or_else(|| "R_ge2".to_string(), |k| format!("R{k}"));
            let text = match a.out.format {
                Format::Json => {
                    let v: Vec<_> = rows
                        .iter()
                        .map(|&(i, w, y, clamped, count)| {
                            serde_json::json!({"rep": i, "W": w, "Y": y, "y_clamped": clamped, stat.as_str(): count})
                        })
                        .collect();
                    serde_json::to_string_pretty(&v)? + "\n"
                }
                _ => {
                    let mut s = format!("rep,W,Y,y_clamped,{stat}\n");
                    for (i, w, y, clamped, count) in rows {
                        s.push_str(&format!("{i},{w},{y},{clamped},{count}\n"));
                    }
                    s
                }
            };
            emit(&a.out, &text)?;
            Ok(Outcome::Data)
        }
        Command::Contour(a) => {
            let params = a.rates.params()?;
            if a.check {
                let reports = harness::run_contour_check(&params, a.horizon, a.reps, a.seed)?;
                return emit_reports(&a.out, &reports);
            }
            let cap = ForwardConfig::default().event_cap;
            let mut csv = String::new();
            let mut docs = Vec::new();
            for i in 0..a.reps as u64 {
                let path = simulate_contour(&params, a.horizon, cap, &mut replicate_rng(a.seed, domain::CONTOUR, i))?;
                match a.out.format {
                    Format::Json => docs.push(serde_json::to_string_pretty(&serde_json::json!({
                        "population_at_T": contour_population_at_t(&path),
                        "path": path,
                    }))?),
                    _ => {
                        if a.reps > 1 {
                            csv.push_str(&format!("# rep {i}, population at T = {}\n", contour_population_at_t(&path)));
                        }
                        csv.push_str(&path.to_csv());
                    }
                }
            }
            let text = match a.out.format {
                Format::Json => join_json(docs),
                _ => csv,
            };
            emit(&a.out, &text)?;
            Ok(Outcome::Data)
        }
        Command::Lln(a) => {
            let config = a.config(TRule::LogScaled(2.0))?;
            let report = harness::run_lln(&config)?;
            emit_reports(&a.out, &[report])
        }
        Command::Clt(a) => {
            let config = a.config(TRule::CltDefault)?;
            let reports = harness::run_clt(&config)?;
            emit_reports(&a.out, &reports)
        }
        Command::Oracle(a) => {
            let config = a.config(TRule::Explicit(1.5))?;
            let report = harness::run_oracle_compare(&config)?;
            emit_reports(&a.out, &[report])
        }
        Command::Moments(a) => {
            let reports = harness::verify_moments(&a.rates.params()?)?;
            emit_reports(&a.out, &reports)
        }
        Command::Identity(a) => {
            let reports = match a.m {
                Some(m) => vec![harness::verify_calculus_identity(m, a.n)?],
                None => (0..=a.n.saturating_sub(2))
                    .map(|m| harness::verify_calculus_identity(m, a.n))
                    .collect::<bdsfs::Result<_>>()?,
            };
            emit_reports(&a.out, &reports)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Data) | Ok(Outcome::Checks(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Checks(false)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
