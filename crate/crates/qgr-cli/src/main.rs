//! `qgr`: command-line front end for compatible pairs, quivers, mutation
//! scripts, quantum T-systems, (q,t)-characters, substitution formulas and the
//! acceptance suites.
//!
//! Every command is deterministic: identical arguments give identical bytes.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qgr::klalg::{self, fm_qcharacter, kl_lt_thin, thin_ft, CharResult};
use qgr::qcluster::{build_pair, build_quiver, parse_script, run_script, CompatiblePair};
use qgr::qdatum::QDatum;
use qgr::qgroth::{t_system_check, TsysMode};
use qgr::qtorus::{TorusElement, YTorus};
use qgr::rootdata::CartanData;
use qgr::subst::{
    parse_monomial, periodic_extension, SubstOptions, Substitution, DEFAULT_SCRIPT_BUDGET,
};
use qgr::verify::{run_all, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Debug, Parser)]
#[command(name = "qgr", version, about = "Quantum Grothendieck rings via quantum cluster algebras")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Number of source periods covered by substitution tables.
    #[arg(long, global = true, default_value_t = 1)]
    window: usize,
    /// Work budget for closures, triangularizations and script searches.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Write the output to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `--budget` (intended for CI).
    #[arg(long, env = "QGR_BUDGET_OVERRIDE", hide = true)]
    budget_override: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Full,
    Truncated,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the compatible pair (B̃, Λ) of a sequence and check compatibility.
    Pair {
        #[arg(long = "type", default_value = "A2")]
        kind: String,
        /// Comma-separated letters, repeated cyclically up to `--n`.
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// The quiver Γ of a sequence on a window, labelled by (i,p) when a Q-datum is known.
    Quiver {
        #[arg(long = "type", default_value = "A3")]
        kind: String,
        /// Height function of the Q-datum (defaults for A1, A2, A3, B2, …).
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Explicit letters, repeated cyclically; default: the adapted sequence.
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value_t = 18)]
        n: usize,
        /// Shorthand for `--format dot`.
        #[arg(long)]
        dot: bool,
    },
    /// Run a mutation script (JSON list of {op, k}) on the pair of a sequence.
    Mutate {
        #[arg(long = "type", default_value = "A2")]
        kind: String,
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Inline JSON, or `@path` to read it from a file.
        #[arg(long)]
        script: String,
    },
    /// Check the quantum T-system for the KR triple on row `vertex`, interval [p, s].
    Tsys {
        #[arg(long = "type", default_value = "A2")]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        #[arg(long, default_value_t = 1)]
        vertex: usize,
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long, allow_hyphen_values = true)]
        s: i64,
        #[arg(long, value_enum, default_value = "full")]
        mode: Mode,
        /// Length of the adapted sequence.
        #[arg(long, default_value_t = 60)]
        n: usize,
    },
    /// The Frenkel–Mukhin q-character χ_q(L(m)).
    Qchar {
        #[arg(long = "type")]
        kind: String,
        /// A dominant monomial such as `Y(1,0)Y(1,2)`.
        #[arg(long, allow_hyphen_values = true)]
        monomial: String,
    },
    /// The thin F_t(m).
    Ft {
        #[arg(long = "type")]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        monomial: String,
    },
    /// The (q,t)-character L_t(m) by Kazhdan–Lusztig triangularization.
    Lt {
        #[arg(long = "type")]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        monomial: String,
    },
    /// The substitution table Ψ̃ from the source Q-datum to the target Q-datum.
    Subst {
        #[arg(long, default_value = "B2")]
        src: String,
        #[arg(long, default_value = "A3")]
        tgt: String,
        #[arg(long, allow_hyphen_values = true)]
        src_xi: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        tgt_xi: Option<String>,
        #[arg(long)]
        src_word: Option<String>,
        #[arg(long)]
        tgt_word: Option<String>,
        /// Transport χ_q(L(m)) of this source monomial instead of printing the table.
        #[arg(long = "char", allow_hyphen_values = true)]
        character: Option<String>,
    },
    /// Run the acceptance suites and write a scoreboard.
    Verify {
        /// `all` or a comma-separated list of criterion numbers.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

/// Exit codes: 1 verification failure, 3 invalid input, 4 budget exhausted,
/// 5 failed computation, 6 I/O.
fn exit_code(err: &anyhow::Error) -> u8 {
    use qgr::Error as E;
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 6;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::UnknownCartanType(_)
            | E::VertexOutOfRange { .. }
            | E::InvalidQDatum(_)
            | E::InvalidSequence(_)
            | E::OutsideWindow { .. }
            | E::PointOutsideLattice { .. }
            | E::NotExchangeable { .. }
            | E::MoveNotApplicable { .. }
            | E::Parse(_)
            | E::NoScript(_),
        ) => 3,
        Some(E::BudgetExhausted { .. }) => 4,
        Some(_) => 5,
        None => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Output {
    body: String,
    ok: bool,
}

fn run(cli: &Cli) -> Result<bool> {
    let out = match &cli.command {
        Command::Pair { kind, seq, n } => cmd_pair(cli, kind, seq.as_deref(), *n)?,
        Command::Quiver {
            kind,
            xi,
            seq,
            n,
            dot,
        } => cmd_quiver(cli, kind, xi.as_deref(), seq.as_deref(), *n, *dot)?,
        Command::Mutate { kind, seq, n, script } => cmd_mutate(cli, kind, seq.as_deref(), *n, script)?,
        Command::Tsys {
            kind,
            xi,
            vertex,
            p,
            s,
            mode,
            n,
        } => cmd_tsys(cli, kind, xi.as_deref(), *vertex, *p, *s, *mode, *n)?,
        Command::Qchar { kind, monomial } => cmd_char(cli, kind, monomial, CharKind::Fm)?,
        Command::Ft { kind, monomial } => cmd_char(cli, kind, monomial, CharKind::Thin)?,
        Command::Lt { kind, monomial } => cmd_lt(cli, kind, monomial)?,
        Command::Subst {
            src,
            tgt,
            src_xi,
            tgt_xi,
            src_word,
            tgt_word,
            character,
        } => {
            let args = SubstArgs {
                src,
                tgt,
                src_xi: src_xi.as_deref(),
                tgt_xi: tgt_xi.as_deref(),
                src_word: src_word.as_deref(),
                tgt_word: tgt_word.as_deref(),
                character: character.as_deref(),
            };
            cmd_subst(cli, &args)?
        }
        Command::Verify { suite, seed } => cmd_verify(cli, suite, *seed)?,
    };
    emit(cli, &out.body)?;
    Ok(out.ok)
}

fn emit(cli: &Cli, body: &str) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn budget(cli: &Cli, default: usize) -> usize {
    cli.budget_override.or(cli.budget).unwrap_or(default)
}

fn json_body(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("cannot parse {what} entry {x:?}"))
        })
        .collect()
}

/// Cycles an explicit list of letters up to length `n`.
fn cyclic(letters: &[usize], n: usize) -> Result<Vec<usize>> {
    if letters.is_empty() {
        bail!("empty sequence");
    }
    Ok(letters.iter().copied().cycle().take(n).collect())
}

/// Height functions and adapted words used when none are given.
fn default_xi(kind: &str, role: Role) -> Option<Vec<i64>> {
    Some(match (kind, role) {
        ("A1", _) => vec![0],
        ("A2", Role::Source) => vec![0, -1],
        ("A2", _) => vec![0, 1],
        ("A3", _) => vec![-1, 0, -1],
        ("B2", _) => vec![-3, 0, -1],
        ("B3", _) => vec![0, -2, -3, -4, -6],
        ("C3", _) => vec![0, -1, -2, -4],
        ("C4", _) => vec![-3, -4, -5, -4, -6],
        ("D4", _) => vec![0, -1, 0, 0],
        ("G2", _) => vec![-2, -1, -4, 0],
        _ => return None,
    })
}

fn default_word(kind: &str, xi: &[i64]) -> Option<Vec<usize>> {
    match (kind, xi) {
        ("A2", [0, -1]) => Some(vec![1, 2, 1]),
        ("A2", [0, 1]) => Some(vec![2, 1, 2]),
        ("A3", [-1, 0, -1]) => Some(vec![2, 3, 1, 2, 1, 3]),
        ("B2", [-3, 0, -1]) => Some(vec![2, 3, 2, 1, 2, 3]),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Source,
    Target,
}

fn qdatum(kind: &str, xi: Option<&str>, role: Role) -> Result<QDatum> {
    let xi = match xi {
        Some(s) => parse_list::<i64>(s, "height")?,
        None => default_xi(kind, role)
            .ok_or_else(|| anyhow!("no default height function for {kind}; pass --xi"))?,
    };
    Ok(QDatum::from_name(kind, xi)?)
}

fn matrix(n: usize, f: impl Fn(usize, usize) -> i64) -> Value {
    Value::from(
        (1..=n)
            .map(|u| Value::from((1..=n).map(|v| f(u, v)).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
    )
}

fn pair_json(pair: &CompatiblePair) -> Value {
    json!({
        "n": pair.n,
        "exchangeable": pair.exchangeable_indices(),
        "btilde": matrix(pair.n, |u, v| pair.b(u, v)),
        "lambda": matrix(pair.n, |u, v| pair.lambda_uv(u, v)),
    })
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

// ---------------------------------------------------------------------------
// Commands.

fn cmd_pair(cli: &Cli, kind: &str, seq: Option<&str>, n: usize) -> Result<Output> {
    let cartan = CartanData::from_name(kind)?;
    let letters = match seq {
        Some(s) => parse_list::<usize>(s, "letter")?,
        None => cartan.longest_word().to_vec(),
    };
    let seq = cyclic(&letters, n)?;
    let pair = build_pair(&cartan, &seq, n)?;
    let verdict = pair.verify();
    let checked = pair.exchangeable_indices().len() * n;
    let ok = verdict.is_ok();
    let body = match cli.format {
        Format::Json => {
            let mut v = pair_json(&pair);
            v["type"] = json!(kind);
            v["seq"] = json!(seq);
            v["compatible"] = json!(ok);
            v["error"] = json!(verdict.as_ref().err().map(|e| e.to_string()));
            json_body(&v)?
        }
        _ => format!(
            "type {kind}, n = {n}, sequence {}\nexchangeable: {}\ncompatibility: {} ({checked} entries checked){}\n",
            join(&seq),
            join(&pair.exchangeable_indices()),
            if ok { "PASS" } else { "FAIL" },
            verdict.err().map(|e| format!("\n  {e}")).unwrap_or_default()
        ),
    };
    Ok(Output { body, ok })
}

fn cmd_quiver(cli: &Cli, kind: &str, xi: Option<&str>, seq: Option<&str>, n: usize, dot: bool) -> Result<Output> {
    let q = qdatum(kind, xi, Role::Target)?;
    let delta = q.delta().clone();
    let seq = match seq {
        Some(s) => cyclic(&parse_list::<usize>(s, "letter")?, n + 2 * q.ell())?,
        None => {
            let word = match default_word(kind, q.xi()) {
                Some(w) => w,
                None => q.adapted_reduced_word()?,
            };
            periodic_extension(&delta, &word, n + 2 * q.ell())
        }
    };
    let adapted = q.adapted_check(&seq[..n]).adapted;
    let mut quiver = build_quiver(&delta, &seq, n)?;
    if adapted {
        let labels = (1..=n)
            .map(|u| q.rho_bar(&seq, u).map(|(i, p)| format!("({i},{p})")))
            .collect::<qgr::Result<Vec<_>>>()?;
        quiver = quiver.with_labels(labels);
    }
    let body = match (cli.format, dot) {
        (Format::Dot, _) | (_, true) => quiver.to_dot(),
        (Format::Json, _) => {
            let arrows: Vec<Value> = quiver
                .arrows
                .iter()
                .map(|(&(u, v), &m)| json!({"from": u, "to": v, "count": m}))
                .collect();
            json_body(&json!({
                "n": quiver.n,
                "labels": quiver.labels,
                "frozen": quiver.frozen,
                "arrows": arrows,
            }))?
        }
        (Format::Text, _) => {
            let mut s = format!("quiver of {} on [1,{n}], sequence {}\n", delta.kind(), join(&seq[..n]));
            for (&(u, v), &m) in &quiver.arrows {
                let lu = &quiver.labels[u - 1];
                let lv = &quiver.labels[v - 1];
                s.push_str(&format!("{lu} -> {lv}{}\n", if m > 1 { format!(" x{m}") } else { String::new() }));
            }
            s
        }
    };
    Ok(Output { body, ok: true })
}

fn cmd_mutate(cli: &Cli, kind: &str, seq: Option<&str>, n: usize, script: &str) -> Result<Output> {
    let cartan = CartanData::from_name(kind)?;
    let letters = match seq {
        Some(s) => parse_list::<usize>(s, "letter")?,
        None => cartan.longest_word().to_vec(),
    };
    let seq = cyclic(&letters, n + 2 * cartan.longest_length())?;
    let text = match script.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => script.to_string(),
    };
    let steps = parse_script(&text)?;
    let run = run_script(&cartan, &seq, n, &steps, true)?;
    run.pair.verify()?;
    let seed = run.seed.as_ref().ok_or_else(|| anyhow!("seed was not tracked"))?;
    let body = match cli.format {
        Format::Json => {
            let mut v = json!({
                "type": kind,
                "seq": run.seq,
                "pair": pair_json(&run.pair),
                "vars": seed.vars().iter().map(|x| serde_json::to_value(x.to_json())).collect::<std::result::Result<Vec<_>, _>>()?,
            });
            v["steps"] = serde_json::to_value(&steps)?;
            json_body(&v)?
        }
        _ => {
            let mut s = format!(
                "type {kind}, {} steps, sequence {}\n",
                steps.len(),
                run.seq.as_ref().map(|q| join(q)).unwrap_or_else(|| "(none)".into())
            );
            for (u, x) in seed.vars().iter().enumerate() {
                s.push_str(&format!("X'({}) = {}\n", u + 1, x.render()));
            }
            s
        }
    };
    Ok(Output { body, ok: true })
}

#[allow(clippy::too_many_arguments)]
fn cmd_tsys(cli: &Cli, kind: &str, xi: Option<&str>, vertex: usize, p: i64, s: i64, mode: Mode, n: usize) -> Result<Output> {
    let q = qdatum(kind, xi, Role::Target)?;
    let word = match default_word(kind, q.xi()) {
        Some(w) => w,
        None => q.adapted_reduced_word()?,
    };
    let seq = periodic_extension(q.delta(), &word, n);
    let mode = match mode {
        Mode::Full => TsysMode::Full,
        Mode::Truncated => TsysMode::Truncated,
    };
    let r = t_system_check(&q, &seq, vertex, p, s, mode)?;
    let ok = r.exact();
    let body = match cli.format {
        Format::Json => json_body(&serde_json::to_value(r.to_json())?)?,
        _ => {
            let half = |h: Option<i64>| h.map(|h| h.to_string()).unwrap_or_else(|| "-".into());
            format!(
                "T-system {kind} vertex {vertex} [{p},{s}] {mode:?}: {}\nlhs = {}\nterm1 = {}\nterm2 = {}\na_half = {}, b_half = {}\nresidual = {}\n",
                if ok { "exact" } else { "NOT exact" },
                r.lhs.render(),
                r.rhs_terms[0].render(),
                r.rhs_terms[1].render(),
                half(r.a_half),
                half(r.b_half),
                r.residual.render()
            )
        }
    };
    Ok(Output { body, ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharKind {
    Fm,
    Thin,
}

fn char_text(label: &str, r: &CharResult) -> String {
    format!(
        "{label}({}) = {}\nterms: {}, thin: {}\n",
        r.dominant.render(),
        r.element.render(),
        r.term_count,
        r.thin
    )
}

fn cmd_char(cli: &Cli, kind: &str, monomial: &str, which: CharKind) -> Result<Output> {
    let cartan = CartanData::from_name(kind)?;
    let m = parse_monomial(monomial)?;
    let b = budget(cli, klalg::DEFAULT_BUDGET);
    let (label, r) = match which {
        CharKind::Fm => ("chi_q", fm_qcharacter(&cartan, &m, b)?),
        CharKind::Thin => ("F_t", thin_ft(&cartan, &m, b)?),
    };
    let body = match cli.format {
        Format::Json => json_body(&serde_json::to_value(r.to_json())?)?,
        _ => char_text(label, &r),
    };
    Ok(Output { body, ok: true })
}

fn cmd_lt(cli: &Cli, kind: &str, monomial: &str) -> Result<Output> {
    let cartan = CartanData::from_name(kind)?;
    let m = parse_monomial(monomial)?;
    let yt = YTorus::for_monomial(cartan, &m)?;
    let r = kl_lt_thin(&yt, &m, budget(cli, klalg::DEFAULT_BUDGET))?;
    let body = match cli.format {
        Format::Json => {
            let corrections: Vec<Value> = r
                .corrections
                .iter()
                .map(|(m2, c)| {
                    json!({
                        "monomial": m2.render(),
                        "coeff": c.iter().map(|(h, k)| json!({"t_half": h, "coeff": k})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json_body(&json!({
                "lt": serde_json::to_value(r.lt.to_json())?,
                "et": serde_json::to_value(r.et.to_json())?,
                "corrections": corrections,
                "positive": r.positive,
            }))?
        }
        _ => {
            let mut s = char_text("L_t", &r.lt);
            s.push_str(&format!("E_t = {}\n", r.et.render()));
            for (m2, c) in &r.corrections {
                s.push_str(&format!("E_t - L_t contains ({c}) * L_t({})\n", m2.render()));
            }
            s.push_str(&format!("positive: {}\n", r.positive));
            s
        }
    };
    Ok(Output { body, ok: true })
}

struct SubstArgs<'a> {
    src: &'a str,
    tgt: &'a str,
    src_xi: Option<&'a str>,
    tgt_xi: Option<&'a str>,
    src_word: Option<&'a str>,
    tgt_word: Option<&'a str>,
    character: Option<&'a str>,
}

fn cmd_subst(cli: &Cli, a: &SubstArgs<'_>) -> Result<Output> {
    let src = qdatum(a.src, a.src_xi, Role::Source)?;
    let tgt = qdatum(a.tgt, a.tgt_xi, Role::Target)?;
    let word = |s: Option<&str>, q: &QDatum, kind: &str| -> Result<Option<Vec<usize>>> {
        Ok(match s {
            Some(s) => Some(parse_list::<usize>(s, "letter")?),
            None => default_word(kind, q.xi()),
        })
    };
    let opts = SubstOptions {
        src_word: word(a.src_word, &src, a.src)?,
        tgt_word: word(a.tgt_word, &tgt, a.tgt)?,
        window: cli.window,
        budget: Some(budget(cli, DEFAULT_SCRIPT_BUDGET)),
    };
    let subst = Substitution::new(&src, &tgt, &opts)?;
    let table = subst.table()?;
    if let Some(m) = a.character {
        let m = parse_monomial(m)?;
        let chi = fm_qcharacter(src.folded(), &m, budget(cli, klalg::DEFAULT_BUDGET))?;
        let image: TorusElement<_> = table.transport_character(&chi.element)?;
        let body = match cli.format {
            Format::Json => json_body(&json!({
                "source": serde_json::to_value(chi.to_json())?,
                "image": serde_json::to_value(image.to_json())?,
            }))?,
            _ => format!(
                "chi_q({}) = {}\nPsi(chi_q) = {}\n",
                m.render(),
                chi.element.render(),
                image.render()
            ),
        };
        return Ok(Output { body, ok: true });
    }
    let body = match cli.format {
        Format::Json => json_body(&serde_json::to_value(table.to_json())?)?,
        Format::Dot => bail!("the substitution table has no DOT rendering"),
        Format::Text => table.to_latexish(),
    };
    Ok(Output { body, ok: true })
}

fn cmd_verify(cli: &Cli, suite: &str, seed: u64) -> Result<Output> {
    let ids: Vec<usize> = if suite == "all" {
        Vec::new()
    } else {
        parse_list::<usize>(suite, "criterion")?
    };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > qgr::verify::CRITERIA) {
        bail!("no acceptance criterion {bad}");
    }
    let board = run_all(&ids, seed);
    let body = match cli.format {
        Format::Json => json_body(&serde_json::to_value(&board)?)?,
        _ => {
            let mut s: String = board.criteria.iter().map(|c| c.line() + "\n").collect();
            s.push_str(&format!("{} passed, {} failed\n", board.passed, board.failed));
            s
        }
    };
    Ok(Output {
        body,
        ok: board.all_passed(),
    })
}
