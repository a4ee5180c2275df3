//! Command-line front end: argument parsing, input loading, dispatch and
//! report rendering (aligned tables or JSON).
//!
//! Exit codes: 0 on success or a passed certificate, 1 when a violation is
//! found, 2 on usage or input errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::core_diagram::{export_dot, validate_window, DiagramWindow};
use crate::error::{BsurfError, Result};
use crate::fixtures;
use crate::iet_zip::{keane_check, PermutationPair, TripleData};
use crate::induction::{density_identity_check, rauzy_graph, rh_step, rv_step, InductionStep};
use crate::ktheory::{k0_classify, k0_stage, state_pairing, theta_sequence, InductiveSystem, ThetaData};
use crate::path_space::{descriptor_from_json, descriptor_label, sigma_scan, standing_hypotheses_check, CertStatus, CertificateReport, PathDescriptorJson, SigmaReport};
use crate::rat::{approx, fmt_q, fmt_q_list};
use crate::states_charts::{chart_transition, phi_minus, phi_plus, validate_state, ChartDatum, ChartDatumJson, State};
use crate::surface_diagram::{build, verify_flatness, verify_standard, SurfaceDiagram};

/// Environment variable overriding the default depth of every command.
pub const DEPTH_ENV: &str = "BSURF_DEPTH_DEFAULT";
/// Depth used when neither `--depth` nor the environment sets one.
pub const FALLBACK_DEPTH: i64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Table,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "bsurf", version, about = "Ordered bi-infinite Bratteli diagrams and translation surfaces")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub emit: Emit,
    #[command(subcommand)]
    pub command: Command,
}

/// Shipped example objects usable in place of `--in`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Chamanara,
    Decimal,
    Constant,
    Hyper,
    Second,
}

#[derive(clap::Args, Debug, Clone)]
pub struct TripleArgs {
    /// Permutation, e.g. "A B C D / D C B A".
    #[arg(long)]
    pub pi: String,
    /// Comma-separated rationals.
    #[arg(long)]
    pub lambda: String,
    /// Comma-separated rationals.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: String,
    /// Accept alphabets with fewer than 4 symbols.
    #[arg(long)]
    pub allow_small: bool,
}

#[derive(clap::Args, Debug, Clone)]
pub struct InputArgs {
    /// Diagram window JSON.
    #[arg(long = "in", conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Shipped example instead of a file.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// Window bounds for a fixture (default: ±(depth + 2)).
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["M", "N"])]
    pub window: Option<Vec<i64>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rauzy–Veech (rv) or RH (rh) induction steps.
    Induct {
        #[arg(value_enum)]
        direction: InductDirection,
        #[command(flatten)]
        triple: TripleArgs,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Build, check or draw diagram windows.
    Diagram {
        #[command(subcommand)]
        action: DiagramCmd,
    },
    /// Path-space reports.
    Paths {
        #[command(subcommand)]
        action: PathsCmd,
    },
    /// φ_s(x_(n,∞)) and φ_r(x_(−∞,n]) of a path.
    Phi {
        #[command(flatten)]
        input: InputArgs,
        /// State JSON (fixtures carry their own state).
        #[arg(long)]
        state: Option<PathBuf>,
        /// Path descriptor JSON.
        #[arg(long)]
        path: PathBuf,
        /// Level n (default: start of the core).
        #[arg(long, allow_negative_numbers = true)]
        at: Option<i64>,
    },
    /// Chart computations.
    Charts {
        #[command(subcommand)]
        action: ChartsCmd,
    },
    /// Depth-bounded Keane certificate of an interval exchange.
    Keane {
        #[arg(long)]
        pi: String,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        allow_small: bool,
    },
    /// Exact check of the invariant-density identity at random points.
    DensityCheck {
        #[arg(long)]
        pi: String,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Points at which the Jacobian is also brute-forced.
        #[arg(long, default_value_t = 20)]
        jacobian: usize,
    },
    /// Rauzy class of a permutation.
    RauzyGraph {
        #[arg(long)]
        pi: String,
        /// Write Graphviz text here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// K₀ stages (`k0 --from m --to n`) or classification (`k0 classify`).
    K0 {
        /// `classify` for the limit classification.
        #[arg(value_parser = ["classify"])]
        action: Option<String>,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<i64>,
    },
    /// θ/σ sequence for an index pairing.
    Theta {
        #[arg(long = "I")]
        i: usize,
        #[arg(long = "J")]
        j: usize,
        /// Pairs "i:j,…" with 1 ≤ i ≤ I < j ≤ I+J.
        #[arg(long)]
        star: String,
    },
    /// Worked example on the 2-adic one-vertex diagram.
    Chamanara {
        #[arg(long)]
        demo: bool,
        #[arg(long)]
        depth: Option<i64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InductDirection {
    Rv,
    Rh,
}

#[derive(Subcommand, Debug)]
pub enum DiagramCmd {
    /// Diagram of a zippered-rectangle triple on a window.
    Build {
        #[command(flatten)]
        triple: TripleArgs,
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["M", "N"], required = true)]
        window: Vec<i64>,
        /// Output file (default: JSON on stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural validation plus standing-hypothesis certificates.
    Check {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        depth: Option<i64>,
    },
    /// Graphviz rendering of a window.
    Dot {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum PathsCmd {
    /// Singular-set scan.
    Sigma {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        depth: Option<i64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ChartsCmd {
    /// Constant-offset check of ψ^q − ψ^p on sampled overlap points.
    Transition {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        state: Option<PathBuf>,
        /// Chart datum JSON of the smaller chart.
        #[arg(long)]
        p: PathBuf,
        /// Chart datum JSON of the larger chart.
        #[arg(long)]
        q: PathBuf,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
}

/// Exit code plus rendered output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn verdict(pass: bool, stdout: String) -> Self {
        Outcome {
            code: if pass { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome::ok(text)
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            }
        }
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok(o) => o,
        Err(e) => Outcome {
            code: error_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// Hypothesis failures found while computing count as violations (1);
/// everything else is a usage or input problem (2).
fn error_code(e: &BsurfError) -> i32 {
    match e {
        BsurfError::KeaneHypothesis(_) | BsurfError::RhHypothesis(_) => 1,
        _ => 2,
    }
}

/// `--depth`, else the environment default, else [`FALLBACK_DEPTH`].
pub fn resolve_depth(explicit: Option<i64>) -> Result<i64> {
    if let Some(d) = explicit {
        return check_depth(d);
    }
    match std::env::var(DEPTH_ENV) {
        Ok(s) => {
            let d = s
                .trim()
                .parse::<i64>()
                .map_err(|_| BsurfError::Parse(format!("{DEPTH_ENV}={s:?} is not an integer")))?;
            check_depth(d)
        }
        Err(_) => Ok(FALLBACK_DEPTH),
    }
}

fn check_depth(d: i64) -> Result<i64> {
    if d < 0 {
        Err(BsurfError::Invalid(format!("depth must be non-negative, got {d}")))
    } else {
        Ok(d)
    }
}

fn read_file(p: &PathBuf) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| BsurfError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

fn write_file(p: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(p, text).map_err(|e| BsurfError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

fn parse_json<T: serde::de::DeserializeOwned>(p: &PathBuf) -> Result<T> {
    serde_json::from_str(&read_file(p)?).map_err(|e| BsurfError::Parse(format!("{}: {e}", p.display())))
}

/// A loaded window with the state that comes with it (fixtures only).
struct Loaded {
    window: DiagramWindow,
    state: Option<State>,
    surface: Option<SurfaceDiagram>,
}

fn load(input: &InputArgs, depth: i64) -> Result<Loaded> {
    let (m, n) = match &input.window {
        Some(v) => (v[0], v[1]),
        None => (-(depth + 2), depth + 2),
    };
    if let Some(p) = &input.input {
        return Ok(Loaded {
            window: DiagramWindow::from_json_str(&read_file(p)?)?,
            state: None,
            surface: None,
        });
    }
    let fx = input
        .fixture
        .ok_or_else(|| BsurfError::Invalid("one of --in or --fixture is required".into()))?;
    if m > n {
        return Err(BsurfError::Invalid(format!("empty window [{m}, {n}]")));
    }
    Ok(match fx {
        Fixture::Chamanara => Loaded {
            window: fixtures::chamanara_window(m, n)?,
            state: Some(fixtures::chamanara_state(m, n)?),
            surface: None,
        },
        Fixture::Decimal => Loaded {
            window: fixtures::decimal_window(m, n)?,
            state: Some(fixtures::decimal_state(m, n)?),
            surface: None,
        },
        Fixture::Constant => Loaded {
            window: fixtures::constant_window(m, n)?,
            state: None,
            surface: None,
        },
        Fixture::Hyper | Fixture::Second => {
            let t = if fx == Fixture::Hyper {
                fixtures::hyper_triple()?
            } else {
                fixtures::second_triple()?
            };
            let sd = build(&t, m, n)?;
            Loaded {
                window: sd.window.clone(),
                state: Some(sd.state.clone()),
                surface: Some(sd),
            }
        }
    })
}

fn state_for(loaded: &Loaded, state: &Option<PathBuf>) -> Result<State> {
    match state {
        Some(p) => State::from_json_str(&read_file(p)?),
        None => loaded
            .state
            .clone()
            .ok_or_else(|| BsurfError::Invalid("--state is required for this input".into())),
    }
}

fn parse_triple(t: &TripleArgs) -> Result<TripleData> {
    TripleData::parse(&t.pi, &t.lambda, &t.tau, t.allow_small)
}

/// Left-aligned text table with a header rule.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c}{}", " ".repeat(widths[i] - c.chars().count())))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(headers.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    s += &(rule.join("  ") + "\n");
    for r in rows {
        s += &line(r.iter().map(|c| c.as_str()).collect());
    }
    s
}

fn json_out(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON value") + "\n"
}

fn status_str(s: CertStatus) -> &'static str {
    match s {
        CertStatus::Certified => "certified",
        CertStatus::Violated => "VIOLATED",
        CertStatus::Inconclusive => "inconclusive",
    }
}

fn cert_rows(r: &CertificateReport) -> Vec<Vec<String>> {
    r.items
        .iter()
        .map(|i| vec![i.name.clone(), status_str(i.status).into(), i.detail.clone()])
        .collect()
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let emit = cli.emit;
    match &cli.command {
        Command::Induct {
            direction,
            triple,
            steps,
        } => cmd_induct(emit, *direction, triple, *steps),
        Command::Diagram { action } => match action {
            DiagramCmd::Build { triple, window, out } => cmd_diagram_build(emit, triple, window, out),
            DiagramCmd::Check { input, depth } => cmd_diagram_check(emit, input, *depth),
            DiagramCmd::Dot { input, out } => {
                let l = load(input, resolve_depth(None)?)?;
                let dot = export_dot(&l.window);
                match out {
                    Some(p) => {
                        write_file(p, &dot)?;
                        Ok(Outcome::ok(format!("wrote {}\n", p.display())))
                    }
                    None => Ok(Outcome::ok(dot)),
                }
            }
        },
        Command::Paths {
            action: PathsCmd::Sigma { input, depth },
        } => cmd_sigma(emit, input, *depth),
        Command::Phi {
            input,
            state,
            path,
            at,
        } => cmd_phi(emit, input, state, path, *at),
        Command::Charts {
            action:
                ChartsCmd::Transition {
                    input,
                    state,
                    p,
                    q,
                    samples,
                    seed,
                },
        } => cmd_transition(emit, input, state, p, q, *samples, *seed),
        Command::Keane {
            pi,
            lambda,
            depth,
            allow_small,
        } => {
            let perm = PermutationPair::parse(pi, *allow_small)?;
            let lam = crate::rat::parse_q_list(lambda)?;
            let depth = match depth {
                Some(d) => *d,
                None => resolve_depth(None)? as usize,
            };
            let rep = keane_check(&perm, &lam, depth)?;
            let text = match emit {
                Emit::Json => json_out(&serde_json::to_value(&rep).expect("report")),
                Emit::Table => match &rep.violation {
                    None => format!("Keane certificate: no endpoint collision up to depth {depth}\n"),
                    Some(v) => format!(
                        "Keane VIOLATED: orbit of u_{} hits u_{} after {} steps\n",
                        v.alpha, v.gamma, v.m
                    ),
                },
            };
            Ok(Outcome::verdict(rep.certified, text))
        }
        Command::DensityCheck {
            pi,
            samples,
            seed,
            jacobian,
        } => {
            let perm = PermutationPair::parse(pi, false)?;
            let rep = density_identity_check(&perm, *samples, *jacobian, *seed)?;
            let text = match emit {
                Emit::Json => json_out(&serde_json::to_value(&rep).expect("report")),
                Emit::Table => {
                    let mut s = format!("identity holds at {}/{} samples\n", rep.holds, rep.samples);
                    let _ = writeln!(s, "preimages normalized at {}/{} samples", rep.normalized, rep.samples);
                    let _ = writeln!(
                        s,
                        "closed-form Jacobian matches determinant at {}/{} points",
                        rep.jacobian_matches, rep.jacobian_checked
                    );
                    if let Some(f) = &rep.first_failure {
                        let _ = writeln!(s, "first failure: {f}");
                    }
                    s
                }
            };
            Ok(Outcome::verdict(rep.all_hold(), text))
        }
        Command::RauzyGraph { pi, out } => {
            let perm = PermutationPair::parse(pi, true)?;
            let g = rauzy_graph(&perm)?;
            if let Some(p) = out {
                write_file(p, &g.to_dot())?;
            }
            let text = match emit {
                Emit::Json => json_out(&serde_json::to_value(&g).expect("graph")),
                Emit::Table => {
                    let rows: Vec<Vec<String>> = g
                        .nodes
                        .iter()
                        .enumerate()
                        .map(|(i, p)| {
                            let succ: Vec<String> = g
                                .edges
                                .iter()
                                .filter(|e| e.0 == i)
                                .map(|e| format!("{}→{}", e.2, e.1))
                                .collect();
                            vec![i.to_string(), p.to_string(), succ.join(" ")]
                        })
                        .collect();
                    let mut s = format!("{} nodes, {} edges\n", g.nodes.len(), g.edges.len());
                    s += &render_table(&["node", "permutation", "type→node"], &rows);
                    if let Some(p) = out {
                        let _ = writeln!(s, "wrote {}", p.display());
                    }
                    s
                }
            };
            Ok(Outcome::ok(text))
        }
        Command::K0 {
            action,
            input,
            from,
            to,
        } => cmd_k0(emit, action.is_some(), input, *from, *to),
        Command::Theta { i, j, star } => {
            let td = ThetaData::new(*i, *j, ThetaData::parse_star(star)?)?;
            let rep = theta_sequence(&td)?;
            let text = match emit {
                Emit::Json => json_out(&serde_json::to_value(&rep).expect("report")),
                Emit::Table => {
                    let mut s = String::new();
                    let _ = writeln!(s, "theta = {}", rep.theta);
                    let _ = writeln!(s, "sigma = {}", rep.sigma);
                    let _ = writeln!(s, "sigma∘theta = 0: {}", rep.sigma_theta_zero);
                    let _ = writeln!(s, "ker theta: rank {}", rep.kernel_rank);
                    for v in &rep.kernel_basis {
                        let _ = writeln!(s, "  {}", ints(v));
                    }
                    let _ = writeln!(
                        s,
                        "coker theta: free rank {}, torsion [{}]",
                        rep.coker_free_rank,
                        ints(&rep.coker_torsion)
                    );
                    let _ = writeln!(s, "projections onto: {}", rep.projections_onto);
                    let _ = writeln!(s, "i_* iso (I = 1 or J = 1): {}", rep.i_star_iso);
                    s
                }
            };
            Ok(Outcome::verdict(rep.sigma_theta_zero, text))
        }
        Command::Chamanara { demo, depth } => {
            if !demo {
                return Err(BsurfError::Invalid("chamanara requires --demo".into()));
            }
            cmd_chamanara(emit, resolve_depth(*depth)?)
        }
    }
}

fn ints(v: &[BigInt]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn step_row(s: &InductionStep, k: usize) -> Vec<String> {
    vec![
        k.to_string(),
        s.ty.to_string(),
        s.winner_symbol().to_string(),
        s.loser_symbol().to_string(),
        s.after.perm.to_string(),
        fmt_q_list(&s.after.lambda),
        s.matrix.to_string(),
    ]
}

fn cmd_induct(emit: Emit, dir: InductDirection, t: &TripleArgs, steps: usize) -> Result<Outcome> {
    let mut cur = parse_triple(t)?;
    let mut out = Vec::with_capacity(steps);
    let mut failure = None;
    for k in 0..steps {
        let r = match dir {
            InductDirection::Rv => rv_step(&cur),
            InductDirection::Rh => rh_step(&cur),
        };
        match r {
            Ok(s) => {
                cur = s.after.clone();
                out.push(s);
            }
            Err(e) => {
                failure = Some((k + 1, e));
                break;
            }
        }
    }
    let text = match emit {
        Emit::Json => json_out(&json!({
            "steps": out,
            "final": cur,
            "failure": failure.as_ref().map(|(k, e)| json!({"step": k, "error": e.to_string()})),
        })),
        Emit::Table => {
            let rows: Vec<Vec<String>> = out.iter().enumerate().map(|(k, s)| step_row(s, k + 1)).collect();
            let head = if dir == InductDirection::Rv { "Θ" } else { "Ψ" };
            let mut s = render_table(&["step", "type", "winner", "loser", "permutation", "lambda", head], &rows);
            let _ = writeln!(s, "area λ·h = {}", fmt_q(&cur.area()));
            if let Some((k, e)) = &failure {
                let _ = writeln!(s, "halted at step {k}: {e}");
            }
            s
        }
    };
    let code = match &failure {
        None => 0,
        Some((_, e)) => error_code(e),
    };
    Ok(Outcome {
        code,
        stdout: text,
        stderr: String::new(),
    })
}

fn cmd_diagram_build(emit: Emit, t: &TripleArgs, window: &[i64], out: &Option<PathBuf>) -> Result<Outcome> {
    let triple = parse_triple(t)?;
    let (m, n) = (window[0], window[1]);
    let sd = build(&triple, m, n)?;
    let text = sd.window.to_json_string();
    let Some(p) = out else {
        return Ok(Outcome::ok(text + "\n"));
    };
    write_file(p, &text)?;
    let report = match emit {
        Emit::Json => json_out(&json!({
            "out": p.display().to_string(),
            "window": [m, n],
            "levels": sd.log,
            "A0": sd.a0,
            "A1": sd.a1,
        })),
        Emit::Table => {
            let rows: Vec<Vec<String>> = sd
                .log
                .iter()
                .map(|r| vec![r.level.to_string(), r.rule.into(), r.ty.to_string(), r.winner.clone(), r.source.clone()])
                .collect();
            let mut s = render_table(&["level", "rule", "type", "winner", "loser"], &rows);
            let _ = writeln!(s, "A0 = {}, A1 = {}", sd.a0, sd.a1);
            let _ = writeln!(s, "wrote {}", p.display());
            s
        }
    };
    Ok(Outcome::ok(report))
}

fn cmd_diagram_check(emit: Emit, input: &InputArgs, depth: Option<i64>) -> Result<Outcome> {
    let depth = resolve_depth(depth)?;
    let l = load(input, depth)?;
    let structure = validate_window(&l.window);
    let certs = match &l.surface {
        Some(sd) => verify_standard(sd, depth)?,
        None => standing_hypotheses_check(&l.window, depth),
    };
    let flat = match &l.surface {
        Some(sd) => Some(verify_flatness(sd, depth)?),
        None => None,
    };
    let state = match &l.state {
        Some(st) => Some(validate_state(&l.window, st)?),
        None => None,
    };
    let pass = structure.valid
        && !certs.any_violated()
        && state.as_ref().is_none_or(|s| s.valid)
        && flat.as_ref().is_none_or(|f| f.sigma.singular.is_empty());
    let text = match emit {
        Emit::Json => json_out(&json!({
            "structure": structure,
            "certificates": certs,
            "state": state,
            "flatness": flat.as_ref().map(|f| json!({
                "sigma_empty": f.sigma.singular.is_empty(),
                "y_chain": f.y_chain,
                "z_chain": f.z_chain,
            })),
            "pass": pass,
        })),
        Emit::Table => {
            let (m, n) = l.window.bounds();
            let mut s = format!(
                "window [{m}, {n}]: structure {}\n",
                if structure.valid { "valid" } else { "INVALID" }
            );
            for v in &structure.violations {
                let _ = writeln!(s, "  level {}: {} — {}", v.level, v.kind, v.detail);
            }
            s += &render_table(&["certificate", "status", "detail"], &cert_rows(&certs));
            if let Some(f) = &flat {
                let _ = writeln!(s, "sigma at depth {depth}: {} singular paths", f.sigma.singular.len());
                let _ = writeln!(s, "{}: {}", f.y_chain.name, status_str(f.y_chain.status));
                let _ = writeln!(s, "{}: {}", f.z_chain.name, status_str(f.z_chain.status));
            }
            if let Some(st) = &state {
                let inv = st.invariant.as_ref().map(fmt_q).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "state: valid {}, invariant {inv}", st.valid);
            }
            s
        }
    };
    Ok(Outcome::verdict(pass, text))
}

fn sigma_rows(w: &DiagramWindow, rep: &SigmaReport) -> Vec<Vec<String>> {
    rep.certificates
        .iter()
        .map(|c| {
            vec![
                descriptor_label(w, &c.path),
                c.n.to_string(),
                c.m.to_string(),
                format!("{:?}", c.status),
                c.note.clone(),
            ]
        })
        .collect()
}

fn cmd_sigma(emit: Emit, input: &InputArgs, depth: Option<i64>) -> Result<Outcome> {
    let depth = resolve_depth(depth)?;
    let l = load(input, depth)?;
    let rep = sigma_scan(&l.window, depth)?;
    let text = match emit {
        Emit::Json => json_out(&sigma_json(&l.window, &rep)),
        Emit::Table => {
            let mut s = format!(
                "depth {depth}: {} singular, {} extremal, {} undefined, {} excluded by m < n\n",
                rep.singular.len(),
                rep.extremal.len(),
                rep.undefined(),
                rep.excluded_by_shortcut
            );
            s += &render_table(&["path", "n", "m", "status", "note"], &sigma_rows(&l.window, &rep));
            s
        }
    };
    Ok(Outcome::ok(text))
}

fn sigma_json(w: &DiagramWindow, rep: &SigmaReport) -> Value {
    let labels = |v: &[crate::path_space::PathDescriptor]| -> Vec<String> { v.iter().map(|x| descriptor_label(w, x)).collect() };
    json!({
        "depth": rep.depth,
        "singular": labels(&rep.singular),
        "extremal": labels(&rep.extremal),
        "certificates": rep.certificates.iter().map(|c| json!({
            "path": descriptor_label(w, &c.path),
            "n": c.n,
            "m": c.m,
            "status": c.status,
            "note": c.note,
        })).collect::<Vec<_>>(),
        "excluded_by_shortcut": rep.excluded_by_shortcut,
        "max_pivot_fiber": rep.max_pivot_fiber,
    })
}

fn cmd_phi(emit: Emit, input: &InputArgs, state: &Option<PathBuf>, path: &PathBuf, at: Option<i64>) -> Result<Outcome> {
    let l = load(input, resolve_depth(None)?)?;
    let st = state_for(&l, state)?;
    let pj: PathDescriptorJson = parse_json(path)?;
    let x = descriptor_from_json(&l.window, &pj)?;
    let n = at.unwrap_or(x.core.start);
    let plus = phi_plus(&l.window, &st, &x, n)?;
    let minus = phi_minus(&l.window, &st, &x, n)?;
    let text = match emit {
        Emit::Json => json_out(&json!({
            "path": descriptor_label(&l.window, &x),
            "n": n,
            "phi_s_plus": fmt_q(&plus),
            "phi_r_minus": fmt_q(&minus),
        })),
        Emit::Table => render_table(
            &["quantity", "value", "≈"],
            &[
                vec![format!("φ_s(x_({n},∞))"), fmt_q(&plus), format!("{:.6}", approx(&plus))],
                vec![format!("φ_r(x_(−∞,{n}])"), fmt_q(&minus), format!("{:.6}", approx(&minus))],
            ],
        ),
    };
    Ok(Outcome::ok(text))
}

fn cmd_transition(
    emit: Emit,
    input: &InputArgs,
    state: &Option<PathBuf>,
    p: &PathBuf,
    q: &PathBuf,
    samples: usize,
    seed: u64,
) -> Result<Outcome> {
    let l = load(input, resolve_depth(None)?)?;
    let st = state_for(&l, state)?;
    let pj: ChartDatumJson = parse_json(p)?;
    let qj: ChartDatumJson = parse_json(q)?;
    let pd = ChartDatum::from_json(&l.window, &pj)?;
    let qd = ChartDatum::from_json(&l.window, &qj)?;
    let rep = chart_transition(&l.window, &st, &pd, &qd, samples, seed)?;
    let text = match emit {
        Emit::Json => json_out(&json!({
            "constant": rep.constant.as_ref().map(|c| c.iter().map(fmt_q).collect::<Vec<_>>()),
            "samples": rep.samples,
            "hypothesis_met": rep.hypothesis_met,
            "violation": rep.violation.as_ref().map(|v| json!({
                "x": descriptor_label(&l.window, &v.x),
                "expected": v.expected.iter().map(fmt_q).collect::<Vec<_>>(),
                "found": v.found.iter().map(fmt_q).collect::<Vec<_>>(),
            })),
        })),
        Emit::Table => {
            let mut s = format!("{} overlap samples\n", rep.samples);
            match (&rep.constant, &rep.violation) {
                (Some(c), None) => {
                    let _ = writeln!(s, "constant offset ψ^q − ψ^p = ({})", fmt_q_list(c));
                }
                (_, Some(v)) => {
                    let _ = writeln!(
                        s,
                        "NOT constant at {}: expected ({}), found ({})",
                        descriptor_label(&l.window, &v.x),
                        fmt_q_list(&v.expected),
                        fmt_q_list(&v.found)
                    );
                }
                (None, None) => s += "no overlap points sampled\n",
            }
            let _ = writeln!(s, "overlap hypothesis met: {}", rep.hypothesis_met);
            s
        }
    };
    Ok(Outcome::verdict(rep.violation.is_none(), text))
}

fn cmd_k0(emit: Emit, classify: bool, input: &InputArgs, from: Option<i64>, to: Option<i64>) -> Result<Outcome> {
    let depth = resolve_depth(None)?;
    let l = load(input, depth)?;
    let (wm, wn) = l.window.bounds();
    let (m, n) = (from.unwrap_or(wm), to.unwrap_or(wn));
    let sys = InductiveSystem::from_window(&l.window, m, n)?;
    if classify {
        let c = k0_classify(&sys)?;
        let text = match emit {
            Emit::Json => json_out(&serde_json::to_value(&c).expect("classification")),
            Emit::Table => {
                let mut s = format!("K0 = {}\n", c.classification);
                let _ = writeln!(s, "rank over Q of the prefix [{m}, {n}]: {}", c.rational_rank);
                let fg = match c.finitely_generated {
                    Some(true) => "yes",
                    Some(false) => "no",
                    None => "unknown",
                };
                let _ = writeln!(s, "finitely generated: {fg}");
                s
            }
        };
        return Ok(Outcome::ok(text));
    }
    let st = k0_stage(&sys, m, n)?;
    let text = match emit {
        Emit::Json => json_out(&serde_json::to_value(&st).expect("stage")),
        Emit::Table => {
            let mut s = format!("composite [{m} → {n}] = {}\n", st.composite);
            let _ = writeln!(s, "Smith diagonal: {}", ints(&st.snf.diagonal));
            let _ = writeln!(s, "rank {}, unimodular {}", st.rank, st.unimodular);
            let _ = writeln!(s, "cokernel: free rank {}, torsion [{}]", st.coker_free_rank, ints(&st.torsion));
            s
        }
    };
    Ok(Outcome::ok(text))
}

fn cmd_chamanara(emit: Emit, depth: i64) -> Result<Outcome> {
    let (m, n) = (-(depth + 1), depth + 1);
    let w = fixtures::chamanara_window(m, n)?;
    let st = fixtures::chamanara_state(m, n)?;
    let sigma = sigma_scan(&w, depth)?;
    let state = validate_state(&w, &st)?;
    let sys = InductiveSystem::from_window(&w, -depth, depth)?;
    let k0 = k0_classify(&sys)?;
    let pairings: Vec<(i64, String)> = (-depth..=depth)
        .map(|k| Ok((k, fmt_q(&state_pairing(&st, k, &[BigInt::from(1)])?))))
        .collect::<Result<_>>()?;
    let text = match emit {
        Emit::Json => json_out(&json!({
            "sigma": sigma_json(&w, &sigma),
            "state": state,
            "k0": k0,
            "pairing": pairings.iter().map(|(k, v)| json!({"level": k, "value": v})).collect::<Vec<_>>(),
        })),
        Emit::Table => {
            let rows: Vec<Vec<String>> = sigma
                .certificates
                .iter()
                .filter(|c| sigma.singular.contains(&c.path))
                .map(|c| vec![descriptor_label(&w, &c.path), c.n.to_string(), c.m.to_string()])
                .collect();
            let mut s = format!("singular paths at depth {depth}: {}\n", sigma.singular.len());
            s += &render_table(&["path", "n", "m"], &rows);
            let inv = state.invariant.as_ref().map(fmt_q).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "state (2^n, 2^-n): valid {}, invariant {inv}", state.valid);
            let _ = writeln!(s, "K0 = {}", k0.classification);
            s += &render_table(
                &["level n", "⟨ν_s, [a_pp]⟩"],
                &pairings.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect::<Vec<_>>(),
            );
            s
        }
    };
    Ok(Outcome::ok(text))
}
