//! `cartan`: checks Cartan geometries and Pfaffian groupoids described by JSON specs.
//!
//! Exit status: 0 when every check passes, 1 when any check fails, 2 on
//! invalid input.

mod expr;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cartan_core::cartan::{self, BundlePoint, CartanBundle};
use cartan_core::catalog;
use cartan_core::groupoid::{self, GroupoidRep, MultForm};
use cartan_core::klein::reductive_split;
use cartan_core::numkit::{Tolerances, Vector};
use cartan_core::verify::{run_suite, CheckReport, Sampler, SuiteTarget, Tracker};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cartan", version, about = "Checks Cartan geometries and Pfaffian groupoids")]
struct Cli {
    /// Seed for all sampled checks.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Tolerance for exact residuals.
    #[arg(long, global = true)]
    tol_exact: Option<f64>,
    /// Tolerance for finite-difference residuals.
    #[arg(long, global = true)]
    tol_fd: Option<f64>,
    /// Write the check reports as JSON to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite.
    Check {
        #[command(subcommand)]
        what: CheckKind,
    },
    /// Move between bundle, groupoid and frame-bundle descriptions.
    Correspond {
        spec: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
    },
    /// Bundle to Pfaffian groupoid and back; compares the forms.
    Roundtrip { spec: PathBuf },
    /// Curvature on coordinate vectors at a point of the section.
    Curvature {
        spec: PathBuf,
        /// Comma-separated chart coordinates.
        #[arg(long)]
        at: String,
        /// Print the torsion component as well.
        #[arg(long)]
        torsion: bool,
    },
    /// Inspect the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CheckKind {
    /// Cartan bundle axioms, plus Cartan geometry axioms when a model is given.
    Cartan { spec: PathBuf },
    /// Pfaffian groupoid checks on the induced multiplicative form.
    Pfaffian { spec: PathBuf },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// List entry names.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    ToGroupoid,
    ToBundle,
    Gstructure,
}

struct Ctx {
    sampler: Sampler,
    tol: Tolerances,
    quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

/// Input problems, reported with exit status 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<Vec<CheckReport>, InputError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol_exact {
        tol.exact_tol = t;
    }
    if let Some(t) = cli.tol_fd {
        tol.fd_tol = t;
    }
    if let Err(e) = tol.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let ctx = Ctx {
        sampler: Sampler::new(cli.seed),
        tol,
        quiet: cli.quiet,
    };
    let outcome = match &cli.command {
        Command::Check { what: CheckKind::Cartan { spec } } => check_cartan(&ctx, spec),
        Command::Check { what: CheckKind::Pfaffian { spec } } => check_pfaffian(&ctx, spec),
        Command::Correspond { spec, direction } => correspond(&ctx, spec, *direction),
        Command::Roundtrip { spec } => roundtrip(&ctx, spec),
        Command::Curvature { spec, at, torsion } => curvature(&ctx, spec, at, *torsion),
        Command::Catalog { action: CatalogAction::List } => {
            for name in catalog::NAMES {
                println!("{name}");
            }
            Ok(Vec::new())
        }
    };
    let reports = match outcome {
        Ok(r) => r,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    for r in &reports {
        let mark = if r.passed() { "PASS" } else { "FAIL" };
        ctx.say(format!(
            "{mark}  {:<40} residual {:.3e}  tol {:.1e}  samples {}",
            r.check, r.max_residual, r.tolerance, r.samples
        ));
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.check.as_str()).collect();
    if !failed.is_empty() {
        ctx.say(format!("failed: {}", failed.join(", ")));
    }
    if let Some(path) = &cli.report {
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        if let Err(e) = std::fs::write(path, text + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn load(path: &Path) -> Result<CartanBundle, InputError> {
    spec::load(path).map_err(InputError)
}

fn check_cartan(ctx: &Ctx, path: &Path) -> Outcome {
    let cb = load(path)?;
    let mut checks = vec!["cartan_bundle"];
    if cb.model.is_some() {
        checks.push("cartan_geometry");
    }
    Ok(run_suite(SuiteTarget::Bundle(&cb), &checks, &ctx.sampler, &ctx.tol)?)
}

fn check_pfaffian(ctx: &Ctx, path: &Path) -> Outcome {
    let cb = load(path)?;
    let (w, rep) = induced(&cb);
    Ok(run_suite(SuiteTarget::Form(&w, &rep), &["pfaffian"], &ctx.sampler, &ctx.tol)?)
}

fn induced(cb: &CartanBundle) -> (MultForm, GroupoidRep) {
    (groupoid::omega_from_theta(cb), GroupoidRep::from_coefficients(&cb.coeffs))
}

fn correspond(ctx: &Ctx, path: &Path, direction: Direction) -> Outcome {
    let cb = load(path)?;
    let x0 = cb.chart.center();
    match direction {
        Direction::ToGroupoid => {
            let (w, rep) = induced(&cb);
            let unit = w.groupoid.unit(&x0);
            let kernel = w.kernel(&unit, &ctx.tol)?;
            let symbol = groupoid::symbol_space(&w, &x0, &ctx.tol)?;
            ctx.say(format!(
                "gauge groupoid: dim {}, form values in R^{}, ker at unit dim {}, symbol dim {}",
                w.groupoid.dim(),
                w.dim,
                kernel.dim(),
                symbol.dim()
            ));
            Ok(run_suite(
                SuiteTarget::Form(&w, &rep),
                &["multiplicative", "equivariance_lemma", "transversality"],
                &ctx.sampler,
                &ctx.tol,
            )?)
        }
        Direction::ToBundle => {
            let (w, rep) = induced(&cb);
            match groupoid::pfaffian_to_cartan(&w, &rep, &x0, &ctx.sampler, &ctx.tol) {
                Ok(rebuilt) => {
                    ctx.say(format!("rebuilt A at the chart center:\n{}", rebuilt.a(&x0)?));
                    ctx.say(format!("rebuilt lambda:\n{}", rebuilt.gauge.lambda));
                    Ok(vec![theta_agreement("roundtrip", &cb, &rebuilt, ctx)])
                }
                Err(cartan_core::Error::RefusedConstruction(msg)) => {
                    ctx.say(format!("refused: {msg}"));
                    Ok(run_suite(SuiteTarget::Form(&w, &rep), &["pfaffian"], &ctx.sampler, &ctx.tol)?)
                }
                Err(e) => Err(e.into()),
            }
        }
        Direction::Gstructure => {
            let (gs, gamma) = cartan::cartan_to_gstructure(&cb, &ctx.tol)?;
            ctx.say(format!("coframe at the chart center:\n{}", gs.coframe_at(&x0)?));
            ctx.say(format!("connection coefficients at the chart center:\n{}", (gamma.gamma)(&x0)?));
            let back = cartan::gstructure_to_cartan(&gs, &gamma, &cb.name)?;
            Ok(vec![theta_agreement("gstructure_roundtrip", &cb, &back, ctx)])
        }
    }
}

/// Largest entrywise difference of the two Cartan forms over sampled points.
fn theta_agreement(check: &str, a: &CartanBundle, b: &CartanBundle, ctx: &Ctx) -> CheckReport {
    let mut t = Tracker::new(check, "theta", ctx.tol.exact_tol);
    let mut s = ctx.sampler.stream(check);
    for _ in 0..ctx.sampler.points {
        match a.sample_point(&mut s, &ctx.tol) {
            Ok(p) => {
                let residual = a
                    .theta_matrix(&p)
                    .and_then(|ta| Ok((ta - b.theta_matrix(&p)?).amax()));
                t.record_result(residual, || p.to_json());
            }
            Err(e) => t.record_error(&e, || json!({})),
        }
    }
    t.finish()
}

fn roundtrip(ctx: &Ctx, path: &Path) -> Outcome {
    let cb = load(path)?;
    let (w, rep) = induced(&cb);
    let x0 = cb.chart.center();
    match groupoid::pfaffian_to_cartan(&w, &rep, &x0, &ctx.sampler, &ctx.tol) {
        Ok(rebuilt) => {
            let r = theta_agreement("roundtrip", &cb, &rebuilt, ctx);
            ctx.say(format!("max theta residual {:.3e}", r.max_residual));
            Ok(vec![r])
        }
        Err(cartan_core::Error::RefusedConstruction(msg)) => {
            ctx.say(format!("refused: {msg}"));
            Ok(run_suite(SuiteTarget::Form(&w, &rep), &["pfaffian"], &ctx.sampler, &ctx.tol)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_point(at: &str, m: usize) -> Result<Vector, InputError> {
    let coords: Vec<f64> = at
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| InputError(format!("--at: {e}")))?;
    if coords.len() != m {
        return Err(InputError(format!("--at: expected {m} coordinates, found {}", coords.len())));
    }
    Ok(Vector::from_vec(coords))
}

fn curvature(ctx: &Ctx, path: &Path, at: &str, with_torsion: bool) -> Outcome {
    let cb = load(path)?;
    let model = cb
        .model
        .clone()
        .ok_or_else(|| InputError("curvature needs a model geometry".into()))?;
    let x = parse_point(at, cb.m())?;
    if !cb.chart.contains(&x) {
        return Err(InputError("--at: point outside the chart".into()));
    }
    let split = if with_torsion {
        Some(reductive_split(&model, None, &ctx.sampler, &ctx.tol)?)
    } else {
        None
    };
    let p = BundlePoint::new(x.clone(), cb.group.identity());
    let n = cb.tangent_dim();
    let mut antisym = Tracker::new("curvature_antisymmetry", "curvature", ctx.tol.fd_tol);
    for i in 0..cb.m() {
        for j in (i + 1)..cb.m() {
            let omega = cartan::coordinate_curvature(&cb, &x, i, j, &ctx.tol)?;
            let reverse = cartan::coordinate_curvature(&cb, &x, j, i, &ctx.tol)?;
            antisym.record((&omega + &reverse).amax(), || json!({ "x": x.as_slice(), "i": i, "j": j }));
            ctx.say(format!("Omega(d{i}, d{j}) = {:?}", omega.as_slice()));
            if let Some(split) = &split {
                let (mut u, mut v) = (Vector::zeros(n), Vector::zeros(n));
                u[i] = 1.0;
                v[j] = 1.0;
                let tors = cartan::torsion(&cb, split, &p, &u, &v, &ctx.tol)?;
                ctx.say(format!("T(d{i}, d{j}) = {:?}", (&split.l_coord_map * tors).as_slice()));
            }
        }
    }
    Ok(vec![antisym.finish()])
}
