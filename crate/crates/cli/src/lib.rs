//! Command-line front end: argument parsing, function resolution and
//! orchestration of the toolkit; every run writes one JSON record.

pub mod gridfile;
pub mod record;
pub mod reproduce;

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use weylap::ap_certifier::{self, ClassSpec, Outcome, Phi, SearchConfig, Variant, Weight, WeightSpec};
use weylap::function_model::{self, Domain, FunctionHandle, ProbeGrid};
use weylap::harmonic;
use weylap::pde_apps::{self, Kernel, WaveSolution};
use weylap::quadrature::{Cube, QuadratureConfig};
use weylap::vexp_lebesgue::{self, ExponentField, NORM_TOL};
use weylap::weyl_metrics::{self, LSchedule};

use record::{PlotSource, Record};

/// Exit status for a run that finished but did not certify.
pub const EXIT_NOT_CERTIFIED: i32 = 2;

#[derive(Parser, Serialize, Deserialize, Clone, Debug)]
#[command(name = "weylap", version, about = "Weyl almost periodicity toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Result record path; the record goes to stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Two-column plot-data file.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub plot: Option<PathBuf>,
    /// Seed for randomized tables.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct QuadArgs {
    /// Initial midpoint nodes per axis.
    #[arg(long, global = true, default_value_t = 16)]
    pub quad_points: usize,
    /// Relative change that stops grid doubling.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub refine_tol: f64,
    #[arg(long, global = true, default_value_t = 10)]
    pub max_refinements: u32,
}

impl QuadArgs {
    pub fn config(&self) -> anyhow::Result<QuadratureConfig> {
        Ok(QuadratureConfig::new(self.quad_points, self.refine_tol, self.max_refinements)?)
    }
}

/// Function reference: a gallery id, a builtin (`sin`, `cos`, `zero`) or a grid file.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
pub struct FnRef {
    #[arg(long)]
    pub gallery: Option<String>,
    #[arg(long, conflicts_with = "gallery")]
    pub grid: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
pub struct FnRefB {
    /// Second function; zero when neither flag is given.
    #[arg(long)]
    pub gallery_b: Option<String>,
    #[arg(long, conflicts_with = "gallery_b")]
    pub grid_b: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct DomainArgs {
    /// Lower corner (every axis) of the probe grid standing in for sup over t.
    #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
    pub grid_lo: f64,
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    pub grid_hi: f64,
    /// Grid step; 1 in one dimension and 5 otherwise.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Probe point `a,b,...`; a single number `v` means `v·e₁`. Repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Vec<String>,
}

pub const DEFAULT_PROBES: [f64; 6] = [10.0, 20.0, 40.0, -10.0, -20.0, -40.0];

impl DomainArgs {
    pub fn domain(&self, n: usize) -> anyhow::Result<Domain> {
        let step = self.grid_step.unwrap_or(if n == 1 { 1.0 } else { 5.0 });
        let probes = if self.probe.is_empty() {
            DEFAULT_PROBES.iter().map(|v| axis_point(n, *v)).collect()
        } else {
            self.probe.iter().map(|s| parse_point(s, n)).collect::<anyhow::Result<Vec<_>>>()?
        };
        Ok(Domain::euclidean(n, probes, self.grid_lo, self.grid_hi, step)?)
    }
}

fn axis_point(n: usize, v: f64) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[0] = v;
    p
}

pub fn parse_point(s: &str, n: usize) -> anyhow::Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("cannot parse coordinate `{t}` in `{s}`")))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    match v.len() {
        1 => Ok(axis_point(n, v[0])),
        k if k == n => Ok(v),
        k => bail!("point `{s}` has {k} coordinates, expected {n}"),
    }
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct ScheduleArgs {
    /// First scale of the geometric l schedule.
    #[arg(long, default_value_t = 1.0)]
    pub l0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Samples forming the limsup tail.
    #[arg(long, default_value_t = 3)]
    pub tail: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

impl ScheduleArgs {
    pub fn schedule(&self) -> anyhow::Result<LSchedule> {
        Ok(LSchedule::geometric(self.l0, self.ratio, self.steps, self.tail, self.tol)?)
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Heat,
    Box,
}

#[derive(Subcommand, Serialize, Deserialize, Clone, Debug)]
pub enum Command {
    /// Luxemburg norm of a function on a cube.
    Norm {
        #[command(flatten)]
        f: FnRef,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Lower corner; one value is broadcast to every axis.
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        lo: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        #[arg(long, default_value_t = 0)]
        component: usize,
    },
    /// Stepanov distances along a schedule and the Weyl estimate.
    Distance {
        #[command(flatten)]
        f: FnRef,
        #[command(flatten)]
        g: FnRefB,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Search for ε-almost periods in a weighted Weyl class.
    Certify {
        #[command(flatten)]
        f: FnRef,
        #[arg(long, default_value = "paren")]
        variant: String,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Weight 𝔽(l) = l^{−σ} for the paren and bracket variants.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Use φ(x) = x^α instead of the identity.
        #[arg(long)]
        phi_power: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Equi class: one scale for every probe.
        #[arg(long)]
        equi: bool,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        l_schedule: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        big_l: Vec<f64>,
        /// Translation lattice step; 0.25 in one dimension and 0.5 otherwise.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 200_000)]
        max_evals: usize,
        /// Limsup schedule for non-equi classes.
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        domain: DomainArgs,
        /// Re-verify a certificate record instead of searching.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Bohr–Fourier coefficients or a spectrum scan.
    Fourier {
        #[command(flatten)]
        f: FnRef,
        /// Frequency `a,b,...`; omit to scan.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Vec<f64>,
        /// Average over s+[−T,T]ⁿ instead of s+[0,T]ⁿ.
        #[arg(long)]
        symmetric: bool,
        #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
        t_schedule: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        tail: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        scan_lo: f64,
        #[arg(long, default_value_t = 5.0)]
        scan_hi: f64,
        #[arg(long, default_value_t = 0.5)]
        scan_step: f64,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        component: usize,
    },
    /// Kernel convolution evaluated at points.
    Convolve {
        #[command(flatten)]
        f: FnRef,
        #[arg(long, value_enum, default_value_t = KernelKind::Heat)]
        kernel: KernelKind,
        /// Heat time.
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        /// Box half width.
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long)]
        radius: Option<f64>,
        /// Evaluation point; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// d'Alembert solution table and finite-difference residual.
    Wave {
        /// Initial displacement (gallery id or builtin).
        #[arg(long, default_value = "sin")]
        f0: String,
        /// Initial velocity.
        #[arg(long, default_value = "zero")]
        g0: String,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2", allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,1", allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// List gallery entries and their truth claims.
    Gallery {
        #[arg(long)]
        id: Option<String>,
    },
    /// Regenerate a worked example: `heaviside`, `chi-half` or `weyl-null`.
    Reproduce {
        target: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

/// Resolved function and a note when grid samples were extended by 0.
pub struct Resolved {
    pub handle: FunctionHandle,
    pub ingested: Option<gridfile::Ingested>,
}

impl Resolved {
    fn warnings(&self) -> Vec<String> {
        match &self.ingested {
            Some(i) if i.outside_hits() > 0 => {
                vec![format!("{} evaluations fell outside the grid-file box and were extended by 0", i.outside_hits())]
            }
            _ => vec![],
        }
    }
}

pub fn builtin(name: &str) -> anyhow::Result<FunctionHandle> {
    Ok(match name {
        "sin" => function_model::sine(),
        "cos" => FunctionHandle::real(1, "cos", |t| t[0].cos()).with_sup_bound(1.0).with_bandwidth(1.0),
        "zero" => FunctionHandle::zero(1, 1),
        id => function_model::gallery_entry(id)?.handle,
    })
}

fn resolve(gallery: &Option<String>, grid: &Option<PathBuf>) -> anyhow::Result<Option<Resolved>> {
    match (gallery, grid) {
        (Some(id), None) => Ok(Some(Resolved { handle: builtin(id)?, ingested: None })),
        (None, Some(path)) => {
            let ing = gridfile::ingest_grid(path)?;
            Ok(Some(Resolved { handle: ing.handle.clone(), ingested: Some(ing) }))
        }
        (None, None) => Ok(None),
        _ => bail!("give either a gallery id or a grid file, not both"),
    }
}

fn resolve_a(f: &FnRef) -> anyhow::Result<Resolved> {
    resolve(&f.gallery, &f.grid)?.ok_or_else(|| anyhow!("a function is required: --gallery <id> or --grid <path>"))
}

/// Builds the class specification for the certify flags.
pub fn class_spec(
    variant: &str,
    p: f64,
    sigma: f64,
    phi_power: Option<f64>,
    equi: bool,
    domain: Domain,
) -> anyhow::Result<ClassSpec> {
    let v = Variant::parse(variant)?;
    let n = domain.n;
    let exponent = ExponentField::constant(p)?;
    let phi = match phi_power {
        Some(a) => Phi::power(a)?,
        None => Phi::identity(),
    };
    let spec = match v {
        Variant::ConstantP => ClassSpec::constant_p(p, equi, domain)?,
        Variant::TripleLambda => ClassSpec::triple_lambda(p, equi, domain)?,
        _ => {
            let ws = WeightSpec::new(phi, Weight::Power { sigma });
            let ws = if v.is_bracket() { ws.bracket_equivalent(n, p) } else { ws };
            ClassSpec::new(v, exponent, ws, equi, domain)?
        }
    };
    Ok(spec)
}

pub struct CertifyRun {
    pub spec: ClassSpec,
    pub search: SearchConfig,
}

#[allow(clippy::too_many_arguments)]
pub fn certify_setup(cli: &Cli, f: &FunctionHandle) -> anyhow::Result<CertifyRun> {
    let Command::Certify { variant, p, sigma, phi_power, equi, l_schedule, big_l, step, max_evals, schedule, domain, .. } =
        &cli.command
    else {
        bail!("not a certify command");
    };
    let n = f.dim();
    let spec = class_spec(variant, *p, *sigma, *phi_power, *equi, domain.domain(n)?)?;
    let mut search = SearchConfig::new(l_schedule.clone(), big_l.clone(), step.unwrap_or(if n == 1 { 0.25 } else { 0.5 }))?;
    search.limsup = schedule.schedule()?;
    search.max_evaluations = *max_evals;
    search.quad = cli.quad.config()?;
    Ok(CertifyRun { spec, search })
}

/// Outcome of one command: the JSON text and the exit status.
pub struct RunOutput {
    pub json: String,
    pub status: i32,
}

pub(crate) fn emit<V: Serialize, R: Serialize>(
    cli: &Cli,
    command: &str,
    value: V,
    report: R,
    grid_fingerprint: String,
    warnings: Vec<String>,
    status: i32,
) -> anyhow::Result<RunOutput> {
    let rec = Record { command, config: cli, value, report, grid_fingerprint, version: weylap::VERSION, warnings };
    Ok(RunOutput { json: record::to_json(&rec)?, status })
}

pub(crate) fn plot(cli: &Cli, src: PlotSource<'_>, fp: &str, cols: (&str, &str)) -> anyhow::Result<()> {
    if let Some(path) = &cli.plot {
        record::emit_plot_data(src, fp, cols, path)?;
    }
    Ok(())
}

/// Executes the command, writes the record and plot files, and returns the
/// exit status.
pub fn run(cli: &Cli) -> anyhow::Result<i32> {
    let out = execute(cli)?;
    match &cli.out {
        Some(path) => record::write_atomic(path, &out.json)?,
        None => print!("{}", out.json),
    }
    Ok(out.status)
}

pub fn execute(cli: &Cli) -> anyhow::Result<RunOutput> {
    let q = cli.quad.config()?;
    match &cli.command {
        Command::Norm { f, p, lo, side, component } => {
            let r = resolve_a(f)?;
            let n = r.handle.dim();
            let lo = match lo.len() {
                1 => vec![lo[0]; n],
                k if k == n => lo.clone(),
                k => bail!("--lo has {k} values, expected 1 or {n}"),
            };
            let cube = Cube::new(lo, vec![*side; n])?;
            let v = vexp_lebesgue::luxemburg_norm(&r.handle, *component, &ExponentField::constant(*p)?, &cube, &q, NORM_TOL)?;
            let w = r.warnings();
            emit(cli, "norm", v.value, &v, cube.label(), w, 0)
        }
        Command::Distance { f, g, p, schedule, domain } => {
            let a = resolve_a(f)?;
            let n = a.handle.dim();
            let b = match resolve(&g.gallery_b, &g.grid_b)? {
                Some(b) => b,
                None => Resolved { handle: FunctionHandle::zero(n, a.handle.arity()), ingested: None },
            };
            let s = schedule.schedule()?;
            let d = domain.domain(n)?;
            let w = weyl_metrics::weyl_distance(&a.handle, &b.handle, *p, &s, &d, &a.handle.param_indices(), &q)?;
            let fp = format!("{};{}", w.grid, s.fingerprint());
            plot(cli, PlotSource::Convergence(&w.report), &fp, ("l", "D_S_l"))?;
            let mut warn = a.warnings();
            warn.extend(b.warnings());
            emit(cli, "distance", w.value, &w, fp, warn, 0)
        }
        Command::Certify { f, replay, .. } => {
            match replay {
                Some(path) => replay_record(cli, path),
                None => {
                    let r = resolve_a(f)?;
                    let setup = certify_setup(cli, &r.handle)?;
                    let eps = match &cli.command {
                        Command::Certify { eps, .. } => *eps,
                        _ => unreachable!(),
                    };
                    let outcome = ap_certifier::certify(&r.handle, &setup.spec, eps, &setup.search)?;
                    let (fp, status) = match &outcome {
                        Outcome::Certified(c) => (c.grid_fingerprint.clone(), 0),
                        Outcome::NotCertified(t) => (t.resolution.clone(), EXIT_NOT_CERTIFIED),
                    };
                    if let Outcome::Certified(c) = &outcome {
                        plot(cli, PlotSource::Certificate(c), &fp, ("probe", "measured"))?;
                    }
                    let report = match &outcome {
                        Outcome::Certified(_) => "certified".to_string(),
                        Outcome::NotCertified(t) => format!("not certified at resolution {}", t.resolution),
                    };
                    emit(cli, "certify", &outcome, report, fp, r.warnings(), status)
                }
            }
        }
        Command::Fourier { f, lambda, symmetric, t_schedule, tail, tol, scan_lo, scan_hi, scan_step, threshold, component } => {
            let r = resolve_a(f)?;
            let n = r.handle.dim();
            let s = LSchedule::from_scales(t_schedule.clone(), *tail, *tol)?;
            let origin = vec![0.0; n];
            if lambda.is_empty() {
                if !(*scan_step > 0.0) || !(scan_lo <= scan_hi) {
                    bail!("scan needs scan_lo <= scan_hi and a positive step");
                }
                let grid = ProbeGrid::new(vec![*scan_lo; n], vec![*scan_hi; n], *scan_step)?.points(1.0);
                let spec = harmonic::spectrum_scan(&r.handle, &grid, *threshold, &s, *component, &q)?;
                let rows: Vec<(f64, f64)> = spec.entries.iter().map(|e| (e.lambda[0], e.modulus)).collect();
                plot(cli, PlotSource::Rows(&rows), &s.fingerprint(), ("lambda", "modulus"))?;
                emit(cli, "fourier", &spec.entries, &spec, s.fingerprint(), r.warnings(), 0)
            } else {
                if lambda.len() != n {
                    bail!("--lambda has {} coordinates, expected {n}", lambda.len());
                }
                let e = if *symmetric {
                    harmonic::symmetric_cube_coefficient(&r.handle, lambda, &s, &origin, *component, &q)?
                } else {
                    harmonic::bohr_fourier_coefficient(&r.handle, lambda, &s, &origin, *component, &q)?
                };
                let rows: Vec<(f64, f64)> = e.samples.iter().map(|(t, v)| (*t, function_model::euclid(v))).collect();
                plot(cli, PlotSource::Rows(&rows), &s.fingerprint(), ("T", "modulus"))?;
                emit(cli, "fourier", &e.value, &e, s.fingerprint(), r.warnings(), 0)
            }
        }
        Command::Convolve { f, kernel, t0, a, radius, at } => {
            let r = resolve_a(f)?;
            let n = r.handle.dim();
            let h = match kernel {
                KernelKind::Heat => Kernel::heat(n, *t0)?,
                KernelKind::Box => Kernel::boxed(n, *a)?,
            };
            let c = pde_apps::convolve(&h, &r.handle, *radius, &q)?;
            let pts = if at.is_empty() { vec![vec![0.0; n]] } else { at.iter().map(|s| parse_point(s, n)).collect::<anyhow::Result<_>>()? };
            let values: Vec<(Vec<f64>, Vec<Complex64>)> =
                pts.into_iter().map(|p| (p.clone(), c.handle.eval(&p, 0).to_vec())).collect();
            if values.iter().any(|(_, v)| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
                bail!("convolution quadrature failed at one of the points");
            }
            #[derive(Serialize)]
            struct ConvReport<'a> {
                kernel: &'a str,
                truncation_radius: f64,
                est_truncation_error: f64,
            }
            let rep = ConvReport { kernel: h.label(), truncation_radius: c.truncation_radius, est_truncation_error: c.est_truncation_error };
            emit(cli, "convolve", &values, &rep, q.fingerprint(), r.warnings(), 0)
        }
        Command::Wave { f0, g0, speed, x, t, fd_step } => {
            let f = builtin(f0)?;
            let g = builtin(g0)?;
            let reach = x.iter().chain(t.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            let span = reach * (1.0 + speed) + 2.0;
            let sol = WaveSolution::new(&f, &g, *speed, -span, span)?;
            let mut table = Vec::new();
            for &tt in t {
                for &xx in x {
                    let u = sol.eval(xx, tt);
                    table.push((xx, tt, u.re, u.im));
                }
            }
            let pts: Vec<(f64, f64)> = table.iter().map(|r| (r.0, r.1)).collect();
            let residual = fd_step.map(|h| pde_apps::wave_fd_residual(&sol, &pts, h));
            #[derive(Serialize)]
            struct WaveReport {
                fd_step: Option<f64>,
                fd_residual: Option<f64>,
            }
            let rows: Vec<(f64, f64)> = table.iter().filter(|r| r.1 == t[0]).map(|r| (r.0, r.2)).collect();
            plot(cli, PlotSource::Rows(&rows), &format!("wave a={speed} t={}", t[0]), ("x", "u"))?;
            emit(cli, "wave", &table, WaveReport { fd_step: *fd_step, fd_residual: residual }, String::new(), vec![], 0)
        }
        Command::Gallery { id } => {
            #[derive(Serialize)]
            struct Entry {
                id: String,
                label: String,
                dim: usize,
                weyl_bounded: bool,
                truth: Vec<function_model::TruthClaim>,
                coefficients: Option<Vec<(Vec<f64>, Complex64)>>,
            }
            let entries = match id {
                Some(id) => vec![function_model::gallery_entry(id)?],
                None => function_model::gallery(),
            };
            let list: Vec<Entry> = entries
                .into_iter()
                .map(|e| Entry {
                    label: e.handle.label().to_string(),
                    dim: e.handle.dim(),
                    id: e.id,
                    weyl_bounded: e.weyl_bounded,
                    truth: e.truth,
                    coefficients: e.coefficients,
                })
                .collect();
            emit(cli, "gallery", &list, (), String::new(), vec![], 0)
        }
        Command::Reproduce { target, samples } => reproduce::run(cli, target, *samples, &q),
    }
}

#[derive(Deserialize)]
struct StoredRecord {
    command: String,
    config: Cli,
    value: Outcome,
}

/// Re-verifies a stored certificate with the function, class and quadrature
/// of the stored config.
fn replay_record(cli: &Cli, path: &PathBuf) -> anyhow::Result<RunOutput> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stored: StoredRecord = serde_json::from_str(&text).with_context(|| format!("parsing certificate record {}", path.display()))?;
    if stored.command != "certify" {
        bail!("{} is a `{}` record, not a certificate", path.display(), stored.command);
    }
    let Outcome::Certified(cert) = &stored.value else {
        bail!("{} holds a failure trace; only certificates replay", path.display());
    };
    let Command::Certify { f, .. } = &stored.config.command else {
        bail!("stored config is not a certify command");
    };
    let r = &resolve_a(f)?;
    let setup = certify_setup(&stored.config, &r.handle)?;
    let q = stored.config.quad.config()?;
    let rep = ap_certifier::replay(&r.handle, &setup.spec, cert, &setup.search.limsup, &q)?;
    let status = if rep.identical && rep.all_below_epsilon { 0 } else { EXIT_NOT_CERTIFIED };
    emit(cli, "certify-replay", &stored.value, &rep, cert.grid_fingerprint.clone(), r.warnings(), status)
}
