//! The `ecs` command line. Payload goes to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::catalog::{diff, format_compact, format_json, golden, parse_json, Catalog};
use crate::enumerate::{
    density_string, residue_witness, run_search, SearchConfig, WitnessOutcome, DEFAULT_LCM_CAP,
};
use crate::error::Error;
use crate::systems::{
    double_system, parse_multiset, trivial_power_system, verify, CoveringSystem,
};

/// Process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExitStatus(pub i32);

impl ExitStatus {
    /// Success, a valid system, or an empty diff.
    pub const OK: Self = Self(0);
    /// Invalid system, infeasible multiset, or nonempty diff.
    pub const NEGATIVE: Self = Self(1);
    pub const USAGE: Self = Self(2);
    /// Overflow or lcm cap exceeded.
    pub const RESOURCE: Self = Self(3);

    fn of_error(e: &Error) -> Self {
        match e {
            Error::Overflow
            | Error::CapExceeded { .. }
            | Error::SearchCapExceeded(_) => Self::RESOURCE,
            _ => Self::USAGE,
        }
    }
}

pub const LCM_CAP_ENV: &str = "ECS_LCM_CAP";

#[derive(Debug, Parser)]
#[command(name = "ecs", version, about = "Exact covering systems with one repeated modulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Compact,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate all systems in a range of repeat counts up to a modulus bound.
    Search(SearchArgs),
    /// Check whether a system such as "0 mod 2, 1 mod 2" is an exact cover.
    Verify { system: String },
    /// Find residues for a moduli multiset such as "3 6^4".
    Witness { multiset: String },
    /// Print the power-of-two system whose top modulus 2^r appears twice.
    Trivial { r: u32 },
    /// Apply the add-2 map to an exact covering system.
    Double { system: String },
    /// Inspect or diff against the reference catalog.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
}

#[derive(Debug, clap::Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    r_min: u32,
    #[arg(long, default_value_t = 32)]
    r_max: u32,
    /// Largest modulus searched (600 reproduces the certified bound).
    #[arg(long, default_value_t = 450)]
    max_modulus: u64,
    #[arg(long, default_value_t = 3)]
    min_modulus: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Compact)]
    format: Format,
    /// Skip cells whose top modulus has smallest prime factor above r.
    #[arg(long)]
    nz_prune: bool,
    /// Allow base moduli that do not divide the top modulus (slow; for cross-checks).
    #[arg(long)]
    no_divisor_prune: bool,
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    Show {
        #[arg(long)]
        r: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Compact)]
        format: Format,
    },
    /// Compare a JSON catalog produced by `search --format json`.
    Diff { run: PathBuf },
}

fn lcm_cap() -> Result<u64, String> {
    match std::env::var(LCM_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| format!("{LCM_CAP_ENV} must be a positive integer, got {v:?}")),
        Err(_) => Ok(DEFAULT_LCM_CAP),
    }
}

fn render(c: &Catalog, format: Format) -> String {
    match format {
        Format::Compact => format_compact(c),
        Format::Json => format_json(c) + "\n",
    }
}

/// Runs the CLI with the given arguments (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::USAGE } else { ExitStatus::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::of_error(&e)
        }
    }
}

type CmdResult = Result<ExitStatus, Error>;

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Search(args) => cmd_search(args, out, err),
        Command::Verify { system } => cmd_verify(&system, out),
        Command::Witness { multiset } => cmd_witness(&multiset, out, err),
        Command::Trivial { r } => {
            let s = trivial_power_system(r)?;
            emit_verified(&s, out)
        }
        Command::Double { system } => {
            let s: CoveringSystem = system.parse()?;
            match double_system(&s) {
                Ok(d) => emit_verified(&d, out),
                Err(Error::Precondition(msg)) => {
                    writeln!(err, "{msg}")?;
                    Ok(ExitStatus::NEGATIVE)
                }
                Err(e) => Err(e),
            }
        }
        Command::Catalog { command } => cmd_catalog(command, out),
    }
}

fn emit_verified(s: &CoveringSystem, out: &mut dyn Write) -> CmdResult {
    if !verify(s)?.valid {
        return Err(Error::Precondition(format!("constructed system failed verification: {s}")));
    }
    writeln!(out, "{s}")?;
    Ok(ExitStatus::OK)
}

fn cmd_search(args: SearchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cap = lcm_cap().map_err(Error::Domain)?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cfg = SearchConfig {
        r_min: args.r_min,
        r_max: args.r_max,
        max_modulus: args.max_modulus,
        min_modulus: args.min_modulus,
        lcm_cap: cap,
        enable_nz_prune: args.nz_prune,
        divisor_prune: !args.no_divisor_prune,
        jobs,
        checkpoint_path: args.checkpoint,
    };
    let outcome = run_search(&cfg)?;
    let cat = &outcome.catalog;
    out.write_all(render(cat, args.format).as_bytes())?;
    let counts: Vec<String> = cat.counts().iter().map(|(r, n)| format!("{r}:{n}")).collect();
    writeln!(
        err,
        "r {}..{}, max modulus {}: {} systems [{}]",
        cfg.r_min,
        cfg.r_max,
        cfg.max_modulus,
        cat.total(),
        counts.join(" ")
    )?;
    if !cat.undecided.is_empty() {
        writeln!(err, "{} profile(s) undecided under lcm cap {cap}", cat.undecided.len())?;
        return Ok(ExitStatus::RESOURCE);
    }
    Ok(ExitStatus::OK)
}

fn cmd_verify(system: &str, out: &mut dyn Write) -> CmdResult {
    let s: CoveringSystem = system.parse()?;
    let report = verify(&s)?;
    writeln!(out, "{}", if report.valid { "VALID" } else { "INVALID" })?;
    writeln!(out, "density: {}", report.density)?;
    if let Some((i, j)) = report.first_conflict {
        let cs = s.classes();
        write!(out, "conflict: {}, {}", cs[i], cs[j])?;
        if let Some(x) = report.conflict_at {
            write!(out, " at {x}")?;
        }
        writeln!(out)?;
    }
    Ok(if report.valid { ExitStatus::OK } else { ExitStatus::NEGATIVE })
}

fn cmd_witness(multiset: &str, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let moduli = parse_multiset(multiset)?;
    let density = density_string(&moduli);
    if density != "1/1" {
        writeln!(err, "density {density} != 1")?;
        return Ok(ExitStatus::USAGE);
    }
    let cap = lcm_cap().map_err(Error::Domain)?;
    Ok(match residue_witness(&moduli, cap)? {
        WitnessOutcome::Found(w) => {
            writeln!(out, "{w}")?;
            ExitStatus::OK
        }
        WitnessOutcome::Infeasible => {
            writeln!(out, "INFEASIBLE")?;
            ExitStatus::NEGATIVE
        }
        WitnessOutcome::Undecided => {
            writeln!(out, "UNDECIDED")?;
            ExitStatus::RESOURCE
        }
    })
}

fn cmd_catalog(cmd: CatalogCommand, out: &mut dyn Write) -> CmdResult {
    match cmd {
        CatalogCommand::Show { r, format } => {
            let g = golden();
            let shown = match r {
                Some(r) if !g.results.contains_key(&r) => {
                    return Err(Error::Domain(format!("no reference data for r = {r}")))
                }
                Some(r) => g.restrict(&[r]),
                None => g.clone(),
            };
            out.write_all(render(&shown, format).as_bytes())?;
            Ok(ExitStatus::OK)
        }
        CatalogCommand::Diff { run } => {
            let text = std::fs::read_to_string(&run)?;
            let cat = parse_json(&text)?;
            let report = diff(&cat, golden());
            write!(out, "{report}")?;
            Ok(if report.is_empty() { ExitStatus::OK } else { ExitStatus::NEGATIVE })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (ExitStatus, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("ecs").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&[]).0, ExitStatus::USAGE);
        assert_eq!(call(&["search", "--bogus"]).0, ExitStatus::USAGE);
        assert_eq!(call(&["search", "--r-min", "5", "--r-max", "4"]).0, ExitStatus::USAGE);
        assert_eq!(call(&["trivial", "0"]).0, ExitStatus::USAGE);
        assert_eq!(call(&["--help"]).0, ExitStatus::OK);
    }

    #[test]
    fn trivial_overflow_exits_three() {
        assert_eq!(call(&["trivial", "64"]).0, ExitStatus::RESOURCE);
    }

    #[test]
    fn show_unknown_r() {
        assert_eq!(call(&["catalog", "show", "--r", "40"]).0, ExitStatus::USAGE);
    }
}
