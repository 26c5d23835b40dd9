//! Batch front end: `wavestab <subcommand> --config <path.json> --out <path>`.
//!
//! Exit codes: 0 on success, 1 on configuration/schema errors, 2 when the
//! portrait classifier returns a diagnostic instead of a valid portrait.
//! All CSV output uses a fixed column order and 17-significant-digit
//! formatting, so identical configurations produce byte-identical files.

mod config;
mod fmt;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use config::*;
use fmt::g17;
use wavestab_core::asymlib::{g_expansion, g_numeric, h_numeric, root_coeffs, CFunc3, FnWithDerivs};
use wavestab_core::asymptotics::{compare_hessian, frame_vectors, root_expansion_check, Limit};
use wavestab_core::constant_states::{
    constant_state_report, coperiodic_threshold, dispersion_relation, sigma_star_min_eig,
};
use wavestab_core::model::{Params, Poly, SystemSpec};
use wavestab_core::portrait::{classify_portrait, orbit_roots, PhasePortrait};
use wavestab_core::quadrature::{
    boussinesq_momentum, theta_and_grad, theta_and_grad_soliton_regime,
};
use wavestab_core::stability::{stability_verdict, Verdict};
use wavestab_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "wavestab", version, about = "Periodic traveling-wave stability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the phase portrait at fixed (c, lambda) and report it as JSON
    Portrait(Io),
    /// Stability verdicts at requested parameter points (CSV)
    Stability(Io),
    /// Convergence tables for the limit expansions (CSV, plot-ready columns)
    Asympt(Io),
    /// Verdict map over a (mu, c) grid (CSV, resumable, parallel)
    Sweep(Io),
    /// Constant-state spectra and the co-periodic threshold (JSON)
    Constants(Io),
    /// Elementary-asymptotics series against their numeric oracles (CSV)
    AsymlibCheck(Io),
}

#[derive(Args)]
struct Io {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output file
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let io = match &cli.command {
        Command::Portrait(io)
        | Command::Stability(io)
        | Command::Asympt(io)
        | Command::Sweep(io)
        | Command::Constants(io)
        | Command::AsymlibCheck(io) => io,
    };
    let cfg = match load_config(&io.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("wavestab: configuration error: {err:#}");
            return ExitCode::from(1);
        }
    };
    if let Ok(threads) = std::env::var("WAVESTAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .is_err()
            {
                eprintln!("wavestab: thread pool already initialized");
            }
        }
    }
    let result = match &cli.command {
        Command::Portrait(_) => return cmd_portrait(&cfg, &io.out),
        Command::Stability(_) => cmd_stability(&cfg, &io.out),
        Command::Asympt(_) => cmd_asympt(&cfg, &io.out),
        Command::Sweep(_) => cmd_sweep(&cfg, &io.out),
        Command::Constants(_) => cmd_constants(&cfg, &io.out),
        Command::AsymlibCheck(_) => cmd_asymlib(&cfg, &io.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("wavestab: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text).context("config schema")?;
    cfg.system.validate().context("system")?;
    Ok(cfg)
}

/// Short machine-readable code for the error column.
fn err_code(err: &CoreError) -> &'static str {
    match err {
        CoreError::InvalidSystem(_) => "InvalidSystem",
        CoreError::Domain { .. } => "DomainError",
        CoreError::SingularSlaving { .. } => "SingularSlaving",
        CoreError::Usage { .. } => "UsageError",
        CoreError::NoSaddle => "NoSaddle",
        CoreError::NoCenter => "NoCenter",
        CoreError::NoConjugate => "NoConjugate",
        CoreError::PatternViolation(_) => "PatternViolation",
        CoreError::MuOutOfRange { .. } => "MuOutOfRange",
        CoreError::RootBracketFailure { .. } => "RootBracketFailure",
        CoreError::AssumptionViolation(_) => "AssumptionViolation",
        CoreError::PerturbationLeavesWindow => "PerturbationLeavesWindow",
        CoreError::DegenerateAlpha0(_) => "DegenerateAlpha0",
        CoreError::DegenerateSlaving(_) => "DegenerateSlaving",
        CoreError::SingularBasis(_) => "SingularBasis",
        CoreError::NonpositiveAlpha(_) => "NonpositiveAlpha",
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::CoPeriodicOrbitallyStable => "CoPeriodicOrbitallyStable",
        Verdict::SpectrallyUnstable => "SpectrallyUnstable",
        Verdict::Inconclusive => "Inconclusive",
        Verdict::Degenerate => "Degenerate",
    }
}

// ---------------------------------------------------------------------------
// portrait
// ---------------------------------------------------------------------------

fn cmd_portrait(cfg: &RunConfig, out: &Path) -> ExitCode {
    let Some(pc) = &cfg.portrait else {
        eprintln!("wavestab: config has no \"portrait\" block");
        return ExitCode::from(1);
    };
    if pc.lambda.len() != cfg.system.n as usize {
        eprintln!("wavestab: lambda length does not match N");
        return ExitCode::from(1);
    }
    match classify_portrait(&cfg.system, pc.c, &pc.lambda) {
        Ok(portrait) => {
            let json = serde_json::to_string_pretty(&portrait).expect("serializable");
            if let Err(err) = fs::write(out, json + "\n") {
                eprintln!("wavestab: cannot write {}: {err}", out.display());
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let body = serde_json::json!({
                "error": err_code(&err),
                "detail": err.to_string(),
            });
            let _ = fs::write(out, body.to_string() + "\n");
            eprintln!("wavestab: portrait diagnostic: {err}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

fn stability_header(n: u8) -> String {
    if n == 1 {
        "mu,lambda1,c,theta,period,d2mu,det,signature,verdict,error".to_string()
    } else {
        "mu,lambda1,lambda2,c,theta,period,d2mu,det,signature,verdict,error".to_string()
    }
}

fn stability_row(sys: &SystemSpec, point: &PointCfg) -> String {
    let mut cells: Vec<String> = Vec::new();
    cells.push(g17(point.mu));
    for l in &point.lambda {
        cells.push(g17(*l));
    }
    cells.push(g17(point.c));
    let params = Params::new(point.mu, point.lambda.clone(), point.c);
    match stability_verdict(sys, &params) {
        Ok(rep) => {
            cells.push(g17(rep.theta));
            cells.push(g17(rep.period));
            cells.push(g17(rep.d2mu));
            cells.push(g17(rep.det));
            cells.push(rep.signature.to_string());
            cells.push(verdict_str(rep.verdict).to_string());
            cells.push(String::new());
        }
        Err(err) => {
            for _ in 0..6 {
                cells.push(String::new());
            }
            cells.push(err_code(&err).to_string());
        }
    }
    cells.join(",")
}

fn cmd_stability(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let sc = cfg
        .stability
        .as_ref()
        .ok_or_else(|| anyhow!("config has no \"stability\" block"))?;
    for p in &sc.points {
        if p.lambda.len() != cfg.system.n as usize {
            return Err(anyhow!("lambda length does not match N"));
        }
    }
    let mut text = stability_header(cfg.system.n) + "\n";
    for point in &sc.points {
        text.push_str(&stability_row(&cfg.system, point));
        text.push('\n');
    }
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// asympt
// ---------------------------------------------------------------------------

/// Maps a ladder value of the configured quantity to a level `mu`.
fn mu_for_ladder(
    sys: &SystemSpec,
    portrait: &PhasePortrait,
    c: f64,
    lambda: &[f64],
    quantity: LadderQuantity,
    value: f64,
    side: Limit,
) -> Option<f64> {
    let window = portrait.mu_s - portrait.mu_0;
    match quantity {
        LadderQuantity::Mu => {
            if value <= 0.0 || value >= window {
                return None;
            }
            Some(match side {
                Limit::Harmonic => portrait.mu_0 + value,
                Limit::Soliton => portrait.mu_s - value,
            })
        }
        LadderQuantity::Rho | LadderQuantity::Delta => {
            let (mut lo, mut hi) = (portrait.mu_0, portrait.mu_s);
            for _ in 0..200 {
                let mu = 0.5 * (lo + hi);
                let params = Params::new(mu, lambda.to_vec(), c);
                let orbit = orbit_roots(sys, &params, portrait).ok()?;
                let above = match quantity {
                    LadderQuantity::Rho => orbit.rho.map(|r| r > value).unwrap_or(false),
                    _ => orbit.delta > value,
                };
                // rho decreases with mu, delta increases with mu
                match (quantity, above) {
                    (LadderQuantity::Rho, true) => lo = mu,
                    (LadderQuantity::Rho, false) => hi = mu,
                    (_, true) => hi = mu,
                    (_, false) => lo = mu,
                }
            }
            Some(0.5 * (lo + hi))
        }
    }
}

struct AsymptRow {
    label: &'static str,
    small: f64,
    numeric: f64,
    predicted: f64,
    residual: f64,
}

fn cmd_asympt(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let ac = cfg
        .asympt
        .as_ref()
        .ok_or_else(|| anyhow!("config has no \"asympt\" block"))?;
    if ac.ladder.values().len() < 2 {
        return Err(anyhow!("empty or single-point ladder"));
    }
    let sys = &cfg.system;
    let portrait = classify_portrait(sys, ac.c, &ac.lambda).map_err(|e| anyhow!("{e}"))?;
    let side = match ac.check {
        AsymptCheck::HarmonicHessian
        | AsymptCheck::HarmonicPeriod
        | AsymptCheck::RootExpansionHarmonic => Limit::Harmonic,
        _ => Limit::Soliton,
    };

    let mut rows: Vec<AsymptRow> = Vec::new();
    for value in ac.ladder.values() {
        let Some(mu) =
            mu_for_ladder(sys, &portrait, ac.c, &ac.lambda, ac.ladder.quantity, value, side)
        else {
            continue;
        };
        let params = Params::new(mu, ac.lambda.clone(), ac.c);
        match ac.check {
            AsymptCheck::HarmonicPeriod => {
                let orbit = orbit_roots(sys, &params, &portrait).map_err(|e| anyhow!("{e}"))?;
                let xi = theta_and_grad(sys, &params, &orbit)
                    .map_err(|e| anyhow!("{e}"))?
                    .period();
                let frame = frame_vectors(sys, ac.c, &ac.lambda, &portrait, Limit::Harmonic)
                    .map_err(|e| anyhow!("{e}"))?;
                let xi0 = frame.xi0.expect("harmonic frame has Xi0");
                rows.push(AsymptRow {
                    label: "period",
                    small: mu - portrait.mu_0,
                    numeric: xi,
                    predicted: xi0,
                    residual: (xi - xi0).abs(),
                });
            }
            AsymptCheck::SolitonAction => {
                let orbit = orbit_roots(sys, &params, &portrait).map_err(|e| anyhow!("{e}"))?;
                let theta = theta_and_grad_soliton_regime(sys, &params, &orbit)
                    .map_err(|e| anyhow!("{e}"))?
                    .theta;
                let m = boussinesq_momentum(sys, ac.c, &ac.lambda, &portrait)
                    .map_err(|e| anyhow!("{e}"))?;
                let frame = frame_vectors(sys, ac.c, &ac.lambda, &portrait, Limit::Soliton)
                    .map_err(|e| anyhow!("{e}"))?;
                let w = portrait.mu_s - mu;
                let kappa_s = sys.kappa.eval(portrait.v_s);
                let corrected = theta - frame.coeffs.a * (kappa_s / 2.0).sqrt() * w * w.ln();
                rows.push(AsymptRow {
                    label: "action",
                    small: w,
                    numeric: corrected,
                    predicted: m,
                    residual: (corrected - m).abs(),
                });
            }
            AsymptCheck::HarmonicHessian => {
                let cmp =
                    compare_hessian(sys, &params, Limit::Harmonic).map_err(|e| anyhow!("{e}"))?;
                rows.push(AsymptRow {
                    label: "hessian_rel_residual",
                    small: cmp.small,
                    numeric: cmp.residual,
                    predicted: 0.0,
                    residual: cmp.residual,
                });
            }
            AsymptCheck::SolitonHessian => {
                let cmp =
                    compare_hessian(sys, &params, Limit::Soliton).map_err(|e| anyhow!("{e}"))?;
                rows.push(AsymptRow {
                    label: "s_dot_hs",
                    small: cmp.small,
                    numeric: cmp.s_h_s.unwrap_or(f64::NAN),
                    predicted: cmp.m2.unwrap_or(f64::NAN),
                    residual: cmp.scalar_check.unwrap_or(f64::NAN),
                });
            }
            AsymptCheck::RootExpansionHarmonic | AsymptCheck::RootExpansionSoliton => {
                let rep = root_expansion_check(sys, &params, &portrait, side)
                    .map_err(|e| anyhow!("{e}"))?;
                for item in rep.items {
                    rows.push(AsymptRow {
                        label: item.label,
                        small: rep.small,
                        numeric: item.residual,
                        predicted: rep.small.powf(item.order),
                        residual: item.residual,
                    });
                }
            }
        }
    }

    let mut text = String::from(
        "check,label,small,numeric,predicted,residual,ratio,log10_small,log10_residual\n",
    );
    let check_name = format!("{:?}", ac.check);
    // ratio column: successive residual quotient within each label
    let mut prev: std::collections::BTreeMap<&str, f64> = Default::default();
    for row in &rows {
        let ratio = prev
            .insert(row.label, row.residual)
            .map(|p| row.residual / p)
            .unwrap_or(f64::NAN);
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            check_name,
            row.label,
            g17(row.small),
            g17(row.numeric),
            g17(row.predicted),
            g17(row.residual),
            g17(ratio),
            g17(row.small.log10()),
            g17(row.residual.max(f64::MIN_POSITIVE).log10()),
        ));
    }
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let sc = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| anyhow!("config has no \"sweep\" block"))?;
    if sc.lambda.len() != cfg.system.n as usize {
        return Err(anyhow!("lambda length does not match N"));
    }
    let header = stability_header(cfg.system.n);
    let key_cells = cfg.system.n as usize + 2;

    // resume: collect keys already present in the output
    let mut existing: std::collections::HashSet<String> = Default::default();
    let mut have_header = false;
    if let Ok(text) = fs::read_to_string(out) {
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line != header {
                    return Err(anyhow!("existing output has a different header"));
                }
                have_header = true;
                continue;
            }
            let key: Vec<&str> = line.split(',').take(key_cells).collect();
            existing.insert(key.join(","));
        }
    }

    let points: Vec<PointCfg> = sc
        .mu
        .values()
        .iter()
        .flat_map(|&mu| {
            sc.c.values()
                .iter()
                .map(move |&c| PointCfg {
                    mu,
                    lambda: sc.lambda.clone(),
                    c,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let todo: Vec<&PointCfg> = points
        .iter()
        .filter(|p| {
            let mut key: Vec<String> = vec![g17(p.mu)];
            key.extend(p.lambda.iter().map(|l| g17(*l)));
            key.push(g17(p.c));
            !existing.contains(&key.join(","))
        })
        .collect();

    // embarrassingly parallel evaluation, single serialized writer
    let rows: Vec<String> = todo
        .par_iter()
        .map(|p| stability_row(&cfg.system, p))
        .collect();

    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .with_context(|| format!("opening {}", out.display()))?;
    if !have_header {
        writeln!(file, "{header}")?;
    }
    for row in rows {
        writeln!(file, "{row}")?;
        file.flush()?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

fn cmd_constants(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let cc = cfg
        .constants
        .as_ref()
        .ok_or_else(|| anyhow!("config has no \"constants\" block"))?;
    let sys = &cfg.system;
    let state = (cc.v_star, cc.u_star);
    let report = constant_state_report(sys, state, cc.c, &cc.lambda).map_err(|e| anyhow!("{e}"))?;
    let dispersion: Vec<_> = cc
        .xi
        .iter()
        .map(|&xi| dispersion_relation(sys, state, cc.c, xi).map_err(|e| anyhow!("{e}")))
        .collect::<anyhow::Result<_>>()?;
    let threshold = coperiodic_threshold(sys, cc.v_star, cc.c, &cc.lambda).ok();
    let coperiodic = match &threshold {
        Some(t) => {
            let checks: Vec<_> = cc
                .periods
                .iter()
                .map(|&period| {
                    let min_eig = (1..=64)
                        .map(|l| {
                            let xi = 2.0 * std::f64::consts::PI * l as f64 / period;
                            sigma_star_min_eig(sys, state, cc.c, &cc.lambda, xi)
                                .unwrap_or(f64::NAN)
                        })
                        .fold(f64::INFINITY, f64::min);
                    serde_json::json!({
                        "period": period,
                        "stable": t.stable(period),
                        "min_eig_l_1_to_64": min_eig,
                        "kernel_dim": t.kernel_dim(period),
                    })
                })
                .collect();
            serde_json::json!({ "xi_star": t.xi_star, "checks": checks })
        }
        None => serde_json::json!(null),
    };
    let body = serde_json::json!({
        "state": report,
        "dispersion": dispersion,
        "coperiodic": coperiodic,
    });
    fs::write(out, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// asymlib-check
// ---------------------------------------------------------------------------

fn cmd_asymlib(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let ac = cfg
        .asymlib_check
        .as_ref()
        .ok_or_else(|| anyhow!("config has no \"asymlib_check\" block"))?;
    let mut text = String::from("family,quantity,value,numeric,series,residual\n");

    let families: Vec<(&str, Box<dyn CFunc3>)> = vec![
        ("g=1", Box::new(Poly::new(vec![1.0]))),
        ("g=x", Box::new(Poly::new(vec![0.0, 1.0]))),
        ("g=x^2", Box::new(Poly::new(vec![0.0, 0.0, 1.0]))),
        (
            "g=1/sqrt(1-x)",
            Box::new(FnWithDerivs {
                f: |x: f64| (1.0 - x).powf(-0.5),
                df: |x: f64| 0.5 * (1.0 - x).powf(-1.5),
                d2f: |x: f64| 0.75 * (1.0 - x).powf(-2.5),
                d3f: |x: f64| 1.875 * (1.0 - x).powf(-3.5),
                inv_sqrt_endpoint: true,
            }),
        ),
    ];
    for (name, g) in &families {
        let series = g_expansion(g.as_ref());
        for &rho in &ac.rhos {
            let numeric = g_numeric(g.as_ref(), rho);
            let s = series.eval(rho);
            text.push_str(&format!(
                "{name},rho,{},{},{},{}\n",
                g17(rho),
                g17(numeric),
                g17(s),
                g17((numeric - s).abs())
            ));
        }
    }
    // H kernel against its closed form
    let one = Poly::new(vec![1.0]);
    for &rho in &ac.rhos {
        let numeric = h_numeric(&one, rho);
        let exact = 2.0 / rho - 2.0 / (1.0 + rho + (1.0 + rho).sqrt());
        text.push_str(&format!(
            "h=1,rho,{},{},{},{}\n",
            g17(rho),
            g17(numeric),
            g17(exact),
            g17((numeric - exact).abs())
        ));
    }
    // root expansion of W = z^2/2 + z^3/6 against bisection roots
    let w = Poly::new(vec![0.0, 0.0, 0.5, 1.0 / 6.0]);
    let r = root_coeffs(&w).map_err(|e| anyhow!("{e}"))?;
    for &eps in &ac.eps {
        let target = |z: f64| w.eval(z) - eps;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (target(mid) > 0.0) == (target(hi) > 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let series = r.z_plus(eps);
        text.push_str(&format!(
            "root_z_plus,eps,{},{},{},{}\n",
            g17(eps),
            g17(root),
            g17(series),
            g17((root - series).abs())
        ));
    }
    fs::write(out, text)?;
    Ok(())
}
