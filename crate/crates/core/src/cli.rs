//! Command-line front end.
//!
//! Every subcommand loads a model configuration, evaluates one operation and
//! writes a JSON record to stdout (or `--out`). Exit codes: 0 success, 1 usage
//! or input error, 2 the graph left the chart or time domain, 3 a verification
//! check failed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{load_model, ModelConfig};
use crate::error::{Error, Result};
use crate::fieldspec::{parse_field, parse_metric};
use crate::geodesic::{euler_lagrange_residual, geodesic_bvp, geodesic_ivp, multistart, BvpOptions};
use crate::geometry::{
    curvature_fd_oracle, curvature_r31, koszul_residual, metric_derivative_dg, metric_g, riemann_4, sectional_curvature,
    ChartPoint, DEGENERATE_PLANE_TOLERANCE,
};
use crate::grid::{l2_product, DerivativeScheme, Grid, ScalarField};
use crate::report::{field_csv, path_csv, trajectory_csv, Record};
use crate::spacetime::{induced_metric, spacelike_margin, SpacetimeModel};
use crate::splitting::{
    distance_lower_bound, reparametrize_bounded_lapse, verify_lapse_bound, ReparametrizeOptions, LAPSE_TOLERANCE,
};
use crate::trials::{band_limited, random_slice, random_time};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cauchy-space", version, about = "L² geometry of spacelike Cauchy graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model configuration file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Grid size, overriding the configuration.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Spatial derivative scheme: central4 or spectral.
    #[arg(long)]
    pub scheme: Option<DerivativeScheme>,
    /// Smallest accepted spacelike margin min E_f.
    #[arg(long)]
    pub margin_floor: Option<f64>,
    /// Fail instead of differencing when time derivatives are not analytic.
    #[arg(long)]
    pub no_derivative_fallback: bool,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chart metric G_f(u, v).
    Metric {
        #[command(flatten)]
        common: ModelArgs,
        /// Graph function f (field spec or a number for a constant slice).
        #[arg(long, default_value = "0")]
        slice: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Connection form Γ_f(u, v).
    Connection {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value = "0")]
        slice: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        /// Write the Γ field as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Curvature R(u, v)w on the induced metric, optionally paired with z and checked by finite differences.
    Curvature {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value = "0")]
        slice: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        w: String,
        #[arg(long)]
        z: Option<String>,
        /// Compare with DΓ + Γ∧Γ by central differences (constant slices only).
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sectional curvature of span{u, v}.
    Sectional {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value = "0")]
        slice: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Integrate the geodesic equation from (f0, u0).
    GeodesicIvp {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long)]
        f0: String,
        #[arg(long)]
        u0: String,
        #[arg(long, default_value_t = 1.0)]
        s_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        ds: f64,
        /// Write the trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve the two-point geodesic problem by energy minimisation.
    GeodesicBvp {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long)]
        f0: String,
        #[arg(long)]
        f1: String,
        /// Number of path segments.
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        /// Extra solves from randomly perturbed seeds.
        #[arg(long, default_value_t = 0)]
        multistart: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reference metric for the distance lower bound.
        #[arg(long, default_value = "g0")]
        h: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// L²(dvol_h) distance lower bound, with the lapse-bound check that makes it valid.
    DistanceBound {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long)]
        f0: String,
        #[arg(long)]
        f1: String,
        #[arg(long, default_value = "g0")]
        h: String,
    },
    /// Reparametrize time so that the lapse bound holds against h.
    Reparametrize {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value = "g0")]
        h: String,
        /// Window of the original time; defaults to the model domain, or (-2, 2) if unbounded.
        #[arg(long, allow_hyphen_values = true)]
        t_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_max: Option<f64>,
        /// Required range of the new time.
        #[arg(long, allow_hyphen_values = true)]
        tau_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        tau_max: Option<f64>,
        /// Write the new splitting as a tabulated model configuration.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long, default_value_t = 201)]
        export_t_points: usize,
    },
    /// Run the randomized property checks on a model.
    Verify {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

struct Context {
    model: SpacetimeModel,
    grid: Grid,
    out: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self, default_scheme: Option<DerivativeScheme>) -> Result<Context> {
        let loaded = load_model(&self.model)?;
        let mut model = loaded.model;
        if let Some(floor) = self.margin_floor {
            if !(0.0..1.0).contains(&floor) {
                return Err(Error::InvalidArgument(format!("margin floor must lie in [0, 1), got {floor}")));
            }
            model = model.with_margin_floor(floor);
        }
        if self.no_derivative_fallback {
            model = model.with_derivative_fallback(false);
        }
        let scheme = self.scheme.or(default_scheme).unwrap_or(loaded.scheme);
        let grid = Grid::with_scheme(self.grid_n.unwrap_or(loaded.grid_n), scheme)?;
        Ok(Context {
            model,
            grid,
            out: self.out.clone(),
        })
    }
}

impl Context {
    fn field(&self, spec: &str) -> Result<ScalarField> {
        parse_field(spec, &self.grid)
    }

    fn record(&self, operation: &str) -> Record {
        Record::new(operation, self.model.name(), &self.grid)
            .value("fallback_derivatives", self.model.uses_fallback_derivatives())
            .tolerance("margin_floor", self.model.margin_floor())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// What a subcommand produced.
struct Outcome {
    record: Record,
    out: Option<PathBuf>,
    verification_failed: bool,
}

impl Outcome {
    fn ok(ctx: &Context, record: Record) -> Self {
        Outcome {
            record,
            out: ctx.out.clone(),
            verification_failed: false,
        }
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    worst: f64,
    tolerance: f64,
    trials: usize,
}

fn check(name: &'static str, values: &[f64], tolerance: f64, good: impl Fn(f64) -> bool, worst_is_max: bool) -> Check {
    let worst = if worst_is_max {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Check {
        name,
        passed: values.iter().all(|&v| good(v)),
        worst,
        tolerance,
        trials: values.len(),
    }
}

fn verify_suite(model: &SpacetimeModel, grid: &Grid, seed: u64, trials: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut positive, mut symmetry, mut koszul, mut dg_fd) = (vec![], vec![], vec![], vec![]);
    let (mut sectional, mut basis, mut pairing) = (vec![], vec![], vec![]);
    for _ in 0..trials {
        let f = random_slice(model, grid, 0.3, 0.1, &mut rng);
        let u = band_limited(grid, 3, &mut rng);
        let v = band_limited(grid, 3, &mut rng);
        let w = band_limited(grid, 3, &mut rng);
        let point = ChartPoint::new(model, &f)?;
        positive.push(point.metric(&u, &u) / l2_product(&u, &u, &crate::grid::MetricField::flat(grid)));
        let (g_uv, g_vu) = (point.gamma(&u, &v), point.gamma(&v, &u));
        symmetry.push((&g_uv - &g_vu).max_abs() / (g_uv.max_abs() + 1e-300));
        koszul.push(koszul_residual(model, &f, &u, &v, &w, 1e-3)?.relative);

        let exact = metric_derivative_dg(model, &f, &u, &v, &w)?;
        let eps = 1e-4;
        let fd = (metric_g(model, &f.axpy(eps, &w), &u, &v)? - metric_g(model, &f.axpy(-eps, &w), &u, &v)?) / (2.0 * eps);
        dg_fd.push((exact - fd).abs() / exact.abs().max(1.0));

        let t0 = ScalarField::constant(grid, random_time(model, &mut rng));
        let slice = if sectional.len() % 2 == 0 { f.clone() } else { t0 };
        match sectional_curvature(model, &slice, &u, &v) {
            Ok(k) => {
                sectional.push(k);
                let (a, b, c, d) = (0.7, -1.3, 0.4, 2.1);
                let k2 = sectional_curvature(model, &slice, &(&(&u * a) + &(&v * b)), &(&(&u * c) + &(&v * d)))?;
                basis.push((k2 - k).abs() / k.abs().max(1e-300));
                let s = induced_metric(model, &slice)?;
                let gram = l2_product(&u, &u, &s) * l2_product(&v, &v, &s) - l2_product(&u, &v, &s).powi(2);
                let r = riemann_4(model, &slice, &u, &v, &v, &u)?;
                pairing.push((r / gram - k).abs() / k.abs().max(1e-300));
            }
            Err(Error::DegeneratePlane(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(vec![
        check("metric_positive", &positive, 0.0, |v| v > 0.0, false),
        check("connection_symmetric", &symmetry, 1e-12, |v| v <= 1e-12, true),
        check("koszul_relative", &koszul, 1e-8, |v| v <= 1e-8, true),
        check("metric_derivative_fd", &dg_fd, 1e-6, |v| v <= 1e-6, true),
        check("sectional_nonpositive", &sectional, 1e-10, |v| v <= 1e-10, true),
        check("sectional_basis_invariance", &basis, 1e-8, |v| v <= 1e-8, true),
        check("riemann_sectional_consistency", &pairing, 1e-8, |v| v <= 1e-8, true),
    ])
}

fn execute(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Metric { common, slice, u, v } => {
            let ctx = common.load(None)?;
            let (f, u_f, v_f) = (ctx.field(&slice)?, ctx.field(&u)?, ctx.field(&v)?);
            let g = metric_g(&ctx.model, &f, &u_f, &v_f)?;
            let record = ctx
                .record("metric")
                .param("slice", &slice)
                .param("u", &u)
                .param("v", &v)
                .value("G", g)
                .value("margin", spacelike_margin(&ctx.model, &f)?);
            Ok(Outcome::ok(&ctx, record))
        }
        Command::Connection { common, slice, u, v, csv } => {
            let ctx = common.load(None)?;
            let f = ctx.field(&slice)?;
            let point = ChartPoint::new(&ctx.model, &f)?;
            let gamma = point.gamma(&ctx.field(&u)?, &ctx.field(&v)?);
            if let Some(path) = &csv {
                write_file(path, &field_csv(&gamma))?;
            }
            let form = point.connection_form();
            let record = ctx
                .record("connection")
                .param("slice", &slice)
                .param("u", &u)
                .param("v", &v)
                .value("gamma", gamma.values())
                .value("gamma_max_abs", gamma.max_abs())
                .value("phi_max_abs", form.phi.max_abs())
                .value("psi_max_abs", form.psi.max_abs())
                .value("margin", point.slice().margin.min());
            Ok(Outcome::ok(&ctx, record))
        }
        Command::Curvature { common, slice, u, v, w, z, oracle, step, csv } => {
            let ctx = common.load(None)?;
            let f = ctx.field(&slice)?;
            let (uf, vf, wf) = (ctx.field(&u)?, ctx.field(&v)?, ctx.field(&w)?);
            let s_metric = induced_metric(&ctx.model, &f)?;
            let r = curvature_r31(&s_metric, &uf, &vf, &wf);
            if let Some(path) = &csv {
                write_file(path, &field_csv(&r))?;
            }
            let mut record = ctx
                .record("curvature")
                .param("slice", &slice)
                .param("u", &u)
                .param("v", &v)
                .param("w", &w)
                .value("R", r.values())
                .value("R_max_abs", r.max_abs());
            if let Some(z) = &z {
                record = record.param("z", z).value("riemann_4", riemann_4(&ctx.model, &f, &uf, &vf, &wf, &ctx.field(z)?)?);
            }
            if oracle {
                let a = curvature_fd_oracle(&ctx.model, &f, &uf, &vf, &wf, step)?;
                let b = curvature_fd_oracle(&ctx.model, &f, &uf, &vf, &wf, 0.5 * step)?;
                record = record.param("step", step).value(
                    "oracle",
                    json!({
                        "max_discrepancy": a.max_discrepancy(),
                        "max_discrepancy_half_step": b.max_discrepancy(),
                        "ratio": a.max_discrepancy() / b.max_discrepancy(),
                        "wedge_max_abs": a.wedge.max_abs(),
                    }),
                );
            }
            Ok(Outcome::ok(&ctx, record))
        }
        Command::Sectional { common, slice, u, v } => {
            let ctx = common.load(None)?;
            let k = sectional_curvature(&ctx.model, &ctx.field(&slice)?, &ctx.field(&u)?, &ctx.field(&v)?)?;
            let record = ctx
                .record("sectional")
                .param("slice", &slice)
                .param("u", &u)
                .param("v", &v)
                .value("K", k)
                .tolerance("degenerate_plane", DEGENERATE_PLANE_TOLERANCE);
            Ok(Outcome::ok(&ctx, record))
        }
        Command::GeodesicIvp { common, f0, u0, s_end, ds, csv } => {
            let ctx = common.load(None)?;
            let traj = geodesic_ivp(&ctx.model, &ctx.field(&f0)?, &ctx.field(&u0)?, s_end, ds)?;
            if let Some(path) = &csv {
                write_file(path, &trajectory_csv(&traj.states))?;
            }
            let last = traj.last();
            let record = ctx
                .record("geodesic-ivp")
                .param("f0", &f0)
                .param("u0", &u0)
                .param("s_end", s_end)
                .param("ds", traj.ds)
                .value("completed", traj.completed())
                .value("termination", traj.termination.as_ref().map(|e| e.to_string()))
                .value("steps", traj.states.len() - 1)
                .value("final_s", last.s)
                .value("speed_initial", traj.states[0].speed)
                .value("speed_drift", traj.speed_drift())
                .value("min_margin", traj.states.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min))
                .value("final_mean", last.f.values().iter().sum::<f64>() / last.f.len() as f64);
            Ok(Outcome::ok(&ctx, record))
        }
        Command::GeodesicBvp { common, f0, f1, k, tol, max_iter, multistart: starts, seed, h, csv } => {
            let ctx = common.load(None)?;
            let (a, b) = (ctx.field(&f0)?, ctx.field(&f1)?);
            let options = BvpOptions {
                tol,
                max_iter,
                ..Default::default()
            };
            let result = geodesic_bvp(&ctx.model, &a, &b, k, &options)?;
            if let Some(path) = &csv {
                write_file(path, &path_csv(&result.path))?;
            }
            let h_metric = parse_metric(&h, &ctx.grid, &ctx.model)?;
            let lapse = verify_lapse_bound(&ctx.model, &h_metric);
            let mut record = ctx
                .record("geodesic-bvp")
                .param("f0", &f0)
                .param("f1", &f1)
                .param("K", k)
                .param("max_iter", max_iter)
                .param("h", &h)
                .tolerance("grad_norm", tol)
                .tolerance("armijo", options.armijo)
                .value("converged", result.converged)
                .value("iterations", result.iterations)
                .value("energy", result.energy)
                .value("length", result.length)
                .value("grad_norm_final", result.grad_norm_final)
                .value("euler_lagrange_residual", euler_lagrange_residual(&ctx.model, &result.path)?)
                .value("max_spatial_variation", result.path.max_spatial_variation())
                .value("distance_lower_bound", distance_lower_bound(&a, &b, &h_metric))
                .value("lapse_bound", &lapse);
            if starts > 0 {
                let report = multistart(&ctx.model, &a, &b, k, starts, seed, &options)?;
                record = record.param("seed", seed).value(
                    "multistart",
                    json!({
                        "seeds": starts,
                        "all_converged": report.all_converged,
                        "max_pairwise_distance": report.max_pairwise_distance,
                        "max_spatial_variation": report.max_spatial_variation,
                        "lengths": report.results.iter().map(|r| r.length).collect::<Vec<_>>(),
                    }),
                );
            }
            Ok(Outcome::ok(&ctx, record))
        }
        Command::DistanceBound { common, f0, f1, h } => {
            let ctx = common.load(None)?;
            let h_metric = parse_metric(&h, &ctx.grid, &ctx.model)?;
            let bound = distance_lower_bound(&ctx.field(&f0)?, &ctx.field(&f1)?, &h_metric);
            let lapse = verify_lapse_bound(&ctx.model, &h_metric);
            let record = ctx
                .record("distance-bound")
                .param("f0", &f0)
                .param("f1", &f1)
                .param("h", &h)
                .value("bound", bound)
                .value("valid_lower_bound", lapse.passed)
                .value("lapse_bound", &lapse)
                .tolerance("lapse_bound", LAPSE_TOLERANCE);
            Ok(Outcome::ok(&ctx, record))
        }
        Command::Reparametrize { common, h, t_min, t_max, tau_min, tau_max, export, export_t_points } => {
            let ctx = common.load(None)?;
            let h_metric = parse_metric(&h, &ctx.grid, &ctx.model)?;
            let d = ctx.model.t_domain();
            let window = (
                t_min.unwrap_or(if d.min.is_finite() { d.min } else { -2.0 }),
                t_max.unwrap_or(if d.max.is_finite() { d.max } else { 2.0 }),
            );
            let tau_range = match (tau_min, tau_max) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(0.0), b.unwrap_or(0.0))),
            };
            let options = ReparametrizeOptions {
                tau_range,
                ..Default::default()
            };
            let input = verify_lapse_bound(&ctx.model, &h_metric);
            let rep = reparametrize_bounded_lapse(&ctx.model, &h_metric, window, &options)?;
            if let Some(path) = &export {
                if export_t_points < 2 {
                    return Err(Error::InvalidArgument("export needs at least 2 time points".into()));
                }
                let table = rep.to_tabulated(ctx.grid.n(), export_t_points)?;
                write_file(path, &(ModelConfig::from_tabulated(&table, ctx.grid.n())?.to_json_pretty()? + "\n"))?;
            }
            let tau = rep.model.t_domain();
            let record = ctx
                .record("reparametrize")
                .param("h", &h)
                .param("t_window", [window.0, window.1])
                .param("lattice_step", options.lattice_step)
                .param("ode_step", options.ode_step)
                .param("pad", options.pad)
                .tolerance("lapse_bound", LAPSE_TOLERANCE)
                .value("input_lapse_bound", &input)
                .value("output_lapse_bound", &rep.certificate)
                .value("tau_domain", [tau.min, tau.max])
                .value("min_speed", rep.min_speed)
                .value("m_min", rep.m_samples.iter().map(|p| p.1).fold(f64::INFINITY, f64::min))
                .value("m_note", "m(t) is a grid minimum; the pad and the output certificate stand in for an exact bound")
                .value("exported", export.as_ref().map(|p| p.display().to_string()));
            Ok(Outcome::ok(&ctx, record))
        }
        Command::Verify { common, seed, trials } => {
            let ctx = common.load(Some(DerivativeScheme::Spectral))?;
            let checks = verify_suite(&ctx.model, &ctx.grid, seed, trials)?;
            let all = checks.iter().all(|c| c.passed);
            let lapse = verify_lapse_bound(&ctx.model, &ctx.model.slice_metric(&ctx.grid, 0.0)?);
            let record = ctx
                .record("verify")
                .param("seed", seed)
                .param("trials", trials)
                .value("checks", &checks)
                .value("all_passed", all)
                .value("lapse_bound_g0", &lapse);
            Ok(Outcome {
                record,
                out: ctx.out.clone(),
                verification_failed: !all,
            })
        }
    }
}

fn exit_code_for(error: &Error) -> i32 {
    if matches!(error, Error::LapseCertificate { .. }) {
        EXIT_VERIFICATION
    } else if error.is_domain_error() {
        EXIT_DOMAIN
    } else {
        EXIT_USAGE
    }
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run_with_io<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli) {
        Ok(outcome) => {
            let text = outcome.record.to_json();
            let written = match &outcome.out {
                Some(path) => write_file(path, &text),
                None => stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                }),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_USAGE;
            }
            if outcome.verification_failed {
                EXIT_VERIFICATION
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with_io(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
