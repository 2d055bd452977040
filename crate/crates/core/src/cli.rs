//! `arrw`: normalize expressions, run single verifications or the whole
//! matrix. Exit codes: 0 verified, 1 falsified, 2 usage or parse error.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::arr::{
    emit_trace, knudsen_mumford_expansion, verify_base_change, verify_theorem_4_1, ProofTrace, TraceFormat,
};
use crate::chow::{mumford_exponent, verify_deligne_identity};
use crate::kexpr::{is_prime, lex, parse, split_declarations, KexprError, SymbolTable, Tok, VirtualExpr};
use crate::picdet::{laurent_to_u, normalize, parse_graded, PicError};
use crate::split::{binomial_identity_check, eval_in, tau_class, tau_equals_theta, SplitContext};
use crate::suite::{self, Fault};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "arrw", version, about = "Adams-Riemann-Roch workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Relative dimension (for `verify mumford`: the power k; for `verify tau`: the rank).
    #[arg(long, global = true, default_value_t = 1)]
    pub n: u32,
    /// Characteristic.
    #[arg(long, global = true, default_value_t = 2)]
    pub p: u32,
    /// Print classes as polynomials in u = x - 1 up to this degree.
    #[arg(long, global = true)]
    pub trunc: Option<u32>,
    /// Write the proof trace as JSON to this path.
    #[arg(long = "trace-json", global = true)]
    pub trace_json: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Declarations file: `line L;`, `bundle E rank 2;`, `morphism f dim 1;`.
    #[arg(long, global = true)]
    pub decls: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normal form of a K-class or of a graded line.
    Normalize {
        /// Expression text or a file containing it; stdin when absent.
        input: Option<String>,
    },
    /// Runs one verification; exit 1 when it fails.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Runs the full verification matrix.
    Suite {
        #[arg(long = "inject-fault", hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Replays the Adams-Riemann-Roch chain for `det Rf_* E` (default E = L).
    Arr { expr: Option<String> },
    /// Checks the base-change square.
    BaseChange { expr: Option<String> },
    /// Knudsen-Mumford expansion for a line (default L).
    Km { line: Option<String> },
    /// tau(V) = theta^p(V) for a bundle of rank --n.
    Tau,
    /// Mumford exponent for k = --n.
    Mumford,
    /// The 18/6/-6 identity in the Chow ring of a relative curve.
    Deligne,
    /// The binomial kernel identity for (--n, --p).
    Binomial,
}

struct Usage(String);

impl From<KexprError> for Usage {
    fn from(e: KexprError) -> Self {
        Usage(e.to_string())
    }
}

impl From<PicError> for Usage {
    fn from(e: PicError) -> Self {
        Usage(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e);
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e);
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {}", msg);
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Usage> {
    if cli.trunc == Some(0) {
        return Err(Usage("--trunc must be at least 1".into()));
    }
    match &cli.command {
        Command::Normalize { input } => cmd_normalize(cli, input.as_deref(), out),
        Command::Verify { what } => cmd_verify(cli, what, out),
        Command::Suite { inject_fault } => cmd_suite(cli, inject_fault.as_deref(), out),
    }
}

fn read_input(input: Option<&str>) -> Result<String, Usage> {
    match input {
        Some(s) if std::path::Path::new(s).is_file() => {
            std::fs::read_to_string(s).map_err(|e| Usage(format!("{s}: {e}")))
        }
        Some(s) => Ok(s.to_string()),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Usage(e.to_string()))?;
            Ok(s)
        }
    }
}

fn load_decls(cli: &Cli) -> Result<Option<SymbolTable>, Usage> {
    match &cli.decls {
        None => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
            Ok(Some(SymbolTable::parse_declarations(&text)?))
        }
    }
}

const KEYWORDS: &[&str] = &["det_rf", "DetRf", "pairing", "Pull", "Adams", "psi", "theta", "tau", "dual", "det", "pull", "O"];

/// Without a declarations file, every name used as an expression symbol
/// is taken to be a line.
fn auto_declare(body: &str, table: &mut SymbolTable) -> Result<(), Usage> {
    let toks = lex(body)?;
    for (i, t) in toks.iter().enumerate() {
        let Tok::Name(name) = &t.tok else { continue };
        if KEYWORDS.contains(&name.as_str()) || table.get(name).is_some() {
            continue;
        }
        let prev = i.checked_sub(1).map(|j| &toks[j].tok);
        let call = i.checked_sub(2).map(|j| &toks[j].tok);
        let morphism_slot = matches!(prev, Some(Tok::LBracket))
            || (matches!(prev, Some(Tok::LParen))
                && matches!(call, Some(Tok::Name(c)) if c == "det_rf" || c == "pairing" || c == "pull"));
        if !morphism_slot {
            table.declare_line(name)?;
        }
    }
    Ok(())
}

fn is_graded(text: &str) -> bool {
    ["det_rf(", "DetRf[", "pairing(", "Pull[", "Adams["].iter().any(|k| text.contains(k))
}

fn shift(e: PicError, offset: usize) -> Usage {
    match e {
        PicError::Kexpr(k) => Usage(k.shifted(offset).to_string()),
        other => Usage(other.to_string()),
    }
}

fn cmd_normalize(cli: &Cli, input: Option<&str>, out: &mut dyn Write) -> Result<i32, Usage> {
    let text = read_input(input)?;
    let declared = load_decls(cli)?;
    let strict = declared.is_some();
    let (mut table, body) = split_declarations(&text, &declared.unwrap_or_default())?;
    let offset = text.len() - body.len();
    if !strict {
        auto_declare(&body, &mut table).map_err(|Usage(m)| Usage(m))?;
    }
    if table.morphism("f").is_none() {
        table.declare_morphism("f", cli.n)?;
    }
    let (kind, rendered) = if is_graded(&body) {
        let g = parse_graded(&body, &table).map_err(|e| shift(e, offset))?;
        let nf = normalize(&g, &table);
        let r = if nf.is_trivial() { "1 (trivial)".to_string() } else { nf.render() };
        ("line", r)
    } else {
        let e = parse(&body, &table).map_err(|e| Usage(e.shifted(offset).to_string()))?;
        let class = eval_in(&e, &table).map_err(|e| Usage(e.to_string()))?;
        let r = match cli.trunc {
            Some(d) => {
                let names = class_names(&e, &table)?;
                laurent_to_u(&class.poly, d as i64).render(&|v| format!("u_{}", names[v as usize]))
            }
            None => class.render(),
        };
        ("class", r)
    };
    match cli.format {
        Format::Text => {
            let _ = writeln!(out, "{}", rendered);
        }
        Format::Json => {
            let _ = writeln!(out, "{}", json!({ "input": body.trim(), "kind": kind, "normal_form": rendered }));
        }
    }
    Ok(EXIT_OK)
}

fn class_names(e: &VirtualExpr, table: &SymbolTable) -> Result<Vec<String>, Usage> {
    let ctx = SplitContext::with_exprs(table, &[e]).map_err(|x| Usage(x.to_string()))?;
    Ok((0..ctx.root_count() as u32).map(|v| ctx.name(v).to_string()).collect())
}

fn verify_table(cli: &Cli) -> Result<SymbolTable, Usage> {
    match load_decls(cli)? {
        Some(t) => Ok(t),
        None => Ok(SymbolTable::parse_declarations("line L; bundle E rank 2;")?),
    }
}

fn require_prime(p: u32) -> Result<(), Usage> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Usage(format!("--p {p} is not prime")))
    }
}

fn report_trace(cli: &Cli, trace: &ProofTrace, out: &mut dyn Write) -> Result<i32, Usage> {
    if let Some(path) = &cli.trace_json {
        std::fs::write(path, trace.to_json()).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    }
    let format = match cli.format {
        Format::Text => TraceFormat::Text,
        Format::Json => TraceFormat::Json,
    };
    let _ = writeln!(out, "{}", emit_trace(trace, format).trim_end());
    Ok(if trace.is_verified() { EXIT_OK } else { EXIT_FALSIFIED })
}

fn summary(cli: &Cli, out: &mut dyn Write, command: &str, verified: bool, text: &str, extra: serde_json::Value) -> i32 {
    match cli.format {
        Format::Text => {
            let _ = writeln!(out, "{}", text);
        }
        Format::Json => {
            let mut v = json!({ "command": command, "verified": verified });
            if let (Some(obj), Some(more)) = (v.as_object_mut(), extra.as_object()) {
                obj.extend(more.clone());
            }
            let _ = writeln!(out, "{}", v);
        }
    }
    if verified {
        EXIT_OK
    } else {
        EXIT_FALSIFIED
    }
}

fn expr_arg(text: Option<&str>, default: &str, table: &SymbolTable) -> Result<VirtualExpr, Usage> {
    Ok(parse(text.unwrap_or(default), table)?)
}

fn cmd_verify(cli: &Cli, what: &Verify, out: &mut dyn Write) -> Result<i32, Usage> {
    let (n, p) = (cli.n, cli.p);
    match what {
        Verify::Arr { expr } => {
            require_prime(p)?;
            let t = verify_table(cli)?;
            let e = expr_arg(expr.as_deref(), "L", &t)?;
            let trace = verify_theorem_4_1(n, p, &e, &t).map_err(|x| Usage(x.to_string()))?;
            report_trace(cli, &trace, out)
        }
        Verify::BaseChange { expr } => {
            require_prime(p)?;
            let t = verify_table(cli)?;
            let e = expr_arg(expr.as_deref(), "L", &t)?;
            let trace = verify_base_change(n, p, &e, &t).map_err(|x| Usage(x.to_string()))?;
            report_trace(cli, &trace, out)
        }
        Verify::Km { line } => {
            require_prime(p)?;
            let t = verify_table(cli)?;
            let km = knudsen_mumford_expansion(n, p, line.as_deref().unwrap_or("L"), &t)
                .map_err(|x| Usage(x.to_string()))?;
            if let Some(path) = &cli.trace_json {
                std::fs::write(path, km.trace.to_json()).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
            }
            let exps: Vec<String> = km.exponents.iter().map(|e| e.to_string()).collect();
            let mut text = format!("left exponent: {}\n", km.left_exponent);
            for (i, (e, l)) in km.exponents.iter().zip(&km.lambdas).enumerate() {
                text.push_str(&format!("lambda_{i} = DetRf[f]({l})  exponent {e}\n"));
            }
            text.push_str(if km.trace.is_verified() { "status: verified" } else { "status: failed" });
            let extra = json!({
                "left_exponent": km.left_exponent.to_string(),
                "exponents": exps,
                "trace": serde_json::to_value(&km.trace).unwrap_or_default(),
            });
            Ok(summary(cli, out, "km", km.trace.is_verified(), &text, extra))
        }
        Verify::Tau => {
            require_prime(p)?;
            if n == 0 {
                return Err(Usage("--n must be a rank >= 1".into()));
            }
            let t = SymbolTable::parse_declarations(&format!("bundle V rank {n};"))?;
            let ctx = SplitContext::new(&t).map_err(|e| Usage(e.to_string()))?;
            let v = tau_equals_theta("V", p, &ctx).map_err(|e| Usage(e.to_string()))?;
            let aug = tau_class("V", p, &ctx).map_err(|e| Usage(e.to_string()))?.augmentation();
            let want = num_rational::BigRational::from_integer(num_traits::pow(num_bigint::BigInt::from(p), n as usize));
            let ok = v.equal && aug == want;
            let text = format!(
                "tau({p}, V) - theta({p}, V) = {}\naugmentation(tau) = {aug} (expected {want})",
                v.difference.render()
            );
            let extra = json!({ "difference": v.difference.render(), "augmentation": aug.to_string() });
            Ok(summary(cli, out, "tau", ok, &text, extra))
        }
        Verify::Mumford => {
            let got = mumford_exponent(n).map_err(|e| Usage(e.to_string()))?;
            let k = n as i64;
            let want = num_rational::BigRational::from_integer((6 * k * k - 6 * k + 1).into());
            let ok = got == want;
            Ok(summary(cli, out, "mumford", ok, &got.to_string(), json!({ "k": n, "exponent": got.to_string() })))
        }
        Verify::Deligne => {
            let v = verify_deligne_identity().map_err(|e| Usage(e.to_string()))?;
            let text = format!("lhs: {}\nrhs: {}\nresidual: {}", v.lhs.render(), v.rhs.render(), v.residual.render());
            let extra = json!({ "residual": v.residual.render(), "lhs": v.lhs.render(), "rhs": v.rhs.render() });
            Ok(summary(cli, out, "deligne", v.holds, &text, extra))
        }
        Verify::Binomial => {
            require_prime(p)?;
            let v = binomial_identity_check(n, p);
            let text = format!(
                "y*tilde({n},{p},y) - {p}^{} = {}\nquotient by (y - {p}^{n})^{}: {}\nremainder: {}",
                n * (n + 2),
                v.lhs,
                n + 2,
                v.quotient,
                v.remainder
            );
            let extra = json!({ "quotient": v.quotient.to_string(), "remainder": v.remainder.to_string() });
            Ok(summary(cli, out, "binomial", v.holds, &text, extra))
        }
    }
}

fn cmd_suite(cli: &Cli, fault: Option<&str>, out: &mut dyn Write) -> Result<i32, Usage> {
    let fault = fault.map(Fault::parse);
    let cells = suite::run(cli.seed, fault.as_ref());
    let all = cells.iter().all(|c| c.passed);
    match cli.format {
        Format::Text => {
            let _ = write!(out, "{}", suite::render_table(&cells));
            if let (false, Some(f)) = (all, &fault) {
                let _ = writeln!(out, "injected fault: {}", f.rule());
            }
        }
        Format::Json => {
            let v = json!({
                "seed": cli.seed,
                "passed": all,
                "fault": fault.as_ref().map(|f| f.rule()),
                "cells": cells,
            });
            let _ = writeln!(out, "{}", v);
        }
    }
    Ok(if all { EXIT_OK } else { EXIT_FALSIFIED })
}
