use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use adsnull::pipeline::config::*;
use adsnull::pipeline::run;
use adsnull::{Error, Result};

/// Null curves in AdS₃, T-transforms and KdV solitons.
#[derive(Parser)]
#[command(name = "adsnull", version)]
struct Cli {
    /// TOML file with one section per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a bending profile into a null curve.
    Frenet(FrenetArgs),
    /// T-transform a curve with a Riccati solution or the constant-bending family.
    Ttransform(TTransformArgs),
    /// Compare the two double transforms of the permutability theorem.
    Permute(PermuteArgs),
    /// Build the two-step soliton chain over a constant solution.
    Soliton(SolitonArgs),
    /// Realize a KdV solution as a LIEN flow of null curves.
    Lien(LienArgs),
    /// Check stored curve and frame files against the null-curve invariants.
    Verify(VerifyArgs),
    /// Convert a frames CSV into torus coordinates.
    ExportTorus(ExportTorusArgs),
}

macro_rules! overlay {
    ($cfg:expr, $args:expr, [$($field:ident),* $(,)?]) => {
        $( if let Some(v) = $args.$field.clone() { $cfg.$field = v; } )*
    };
}

macro_rules! overlay_opt {
    ($cfg:expr, $args:expr, [$($field:ident),* $(,)?]) => {
        $( if let Some(v) = $args.$field.clone() { $cfg.$field = Some(v); } )*
    };
}

#[derive(Args)]
struct FrenetArgs {
    /// `mn:M,N`, `constant:K` or `sine`.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    closure_tol: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TTransformArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    riccati_s0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<i8>,
    #[arg(long)]
    segmented: Option<bool>,
    #[arg(long)]
    guard: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    c_plus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_minus: Option<f64>,
    #[arg(long)]
    det_tol: Option<f64>,
    #[arg(long)]
    chi_tol: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PermuteArgs {
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    g_tol: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SolitonArgs {
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_tilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    hs: Option<f64>,
    #[arg(long)]
    ht: Option<f64>,
    #[arg(long)]
    decay_bound1: Option<f64>,
    #[arg(long)]
    decay_bound2: Option<f64>,
    #[arg(long)]
    decay_far: Option<f64>,
    #[arg(long)]
    decay_scan: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct LienArgs {
    /// `constant`, `soliton1` or `soliton2`.
    #[arg(long)]
    solution: Option<String>,
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_tilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    hs: Option<f64>,
    #[arg(long)]
    ht: Option<f64>,
    #[arg(long)]
    bending_tol: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    det_tol: Option<f64>,
    #[arg(long)]
    null_tol: Option<f64>,
    #[arg(long)]
    proper_time_tol: Option<f64>,
    #[arg(long)]
    bending_tol: Option<f64>,
}

#[derive(Args)]
struct ExportTorusArgs {
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<run::RunOutput> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Frenet(a) => {
            let c = &mut cfg.frenet;
            overlay!(c, a, [profile, s0, h, closure_tol, out_dir]);
            overlay_opt!(c, a, [length]);
            run::run_frenet(c)
        }
        Command::Ttransform(a) => {
            let c = &mut cfg.ttransform;
            overlay!(c, a, [profile, s0, h, xi, c, sign, segmented, guard, det_tol, chi_tol, out_dir]);
            overlay_opt!(c, a, [length, riccati_s0, c_plus, c_minus]);
            run::run_ttransform(c)
        }
        Command::Permute(a) => {
            let c = &mut cfg.permute;
            overlay!(c, a, [profile, s0, length, h, xi1, xi2, c1, c2, tol, g_tol, out_dir]);
            run::run_permute(c)
        }
        Command::Soliton(a) => {
            let c = &mut cfg.soliton;
            overlay!(c, a, [
                m, n, p, r, c, c_tilde, s_min, s_max, t_min, t_max, hs, ht,
                decay_bound1, decay_bound2, decay_far, decay_scan, out_dir,
            ]);
            run::run_soliton(c)
        }
        Command::Lien(a) => {
            let c = &mut cfg.lien;
            overlay!(c, a, [solution, m, n, p, r, c, c_tilde, s_min, s_max, t_min, t_max, hs, ht, bending_tol, out_dir]);
            run::run_lien(c)
        }
        Command::Verify(a) => {
            let c = &mut cfg.verify;
            overlay!(c, a, [det_tol, null_tol, proper_time_tol, bending_tol]);
            overlay_opt!(c, a, [curve, frames]);
            run::run_verify(c)
        }
        Command::ExportTorus(a) => {
            let c = &mut cfg.export_torus;
            overlay_opt!(c, a, [frames, out]);
            run::run_export_torus(c)
        }
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::Invariant { name, .. } = e {
        v["invariant"] = json!(name);
    }
    v
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out).expect("run output serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
