//! Subcommand execution.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use moment_sos::christoffel::{CdKernel, RIDGE_FACTOR};
use moment_sos::christrep::{christoffel_representation, equilibrium_experiment, pell_check, LogdetOptions};
use moment_sos::disintegration::disintegrate_cf_with;
use moment_sos::hierarchy::{
    lower_bound, min_order, upper_bound, upper_bound_pushforward, LowerBoundOptions, UpperBoundMode, DEFAULT_SEED,
    EXTRACTION_TOLERANCE, RANK_TOLERANCE,
};
use moment_sos::moments::{catalog_moments, PSD_TOLERANCE};
use moment_sos::sdp::SdpOptions;
use moment_sos::{MeasureDescriptor, MomentSequence, SemialgebraicSet};

use crate::schema::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Lowerbound,
    Upperbound,
    Cf,
    ChristoffelRep,
    PellCheck,
    Equilibrium,
    Disintegrate,
    SupportScore,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lowerbound => "lowerbound",
            Command::Upperbound => "upperbound",
            Command::Cf => "cf",
            Command::ChristoffelRep => "christoffel-rep",
            Command::PellCheck => "pell-check",
            Command::Equilibrium => "equilibrium",
            Command::Disintegrate => "disintegrate",
            Command::SupportScore => "support-score",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub t: Option<usize>,
    pub t_max: Option<usize>,
    pub tol_gap: Option<f64>,
    pub seed: Option<u64>,
    /// Points per axis; the last entry repeats for further axes.
    pub grid: Vec<usize>,
    pub threads: Option<usize>,
}

/// A finished result, ready to be written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Artifact {
    Json(String),
    Csv(String),
}

impl Artifact {
    pub fn text(&self) -> &str {
        match self {
            Artifact::Json(s) | Artifact::Csv(s) => s,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn validation(error: anyhow::Error) -> Self {
        Self { kind: ErrorKind::Validation, error }
    }

    /// Library numerical failures map to `Numerical`; everything else
    /// (parsing, I/O, argument checks) is a validation error.
    pub fn classify(error: anyhow::Error) -> Self {
        let kind = match error.downcast_ref::<moment_sos::Error>() {
            Some(e) if !e.is_validation() => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        };
        Self { kind, error }
    }

    pub fn report(&self, command: Option<Command>) -> ErrorReport {
        ErrorReport {
            schema_version: SCHEMA_VERSION,
            command: command.map(|c| c.name().to_string()),
            error: ErrorBody { kind: self.kind, message: format!("{:#}", self.error) },
        }
    }
}

struct Session {
    cfg: RunConfig,
    sdp: SdpOptions,
    logdet: LogdetOptions,
    seed: u64,
}

impl Session {
    fn meta(&self) -> Meta {
        Meta {
            schema_version: SCHEMA_VERSION,
            command: self.cfg.command.name().to_string(),
            versions: Versions { cli: env!("CARGO_PKG_VERSION").to_string(), core: moment_sos::VERSION.to_string() },
            seed: self.seed,
            tolerances: Tolerances {
                sdp_gap: self.sdp.gap_tol,
                sdp_feasibility: self.sdp.feas_tol,
                sdp_max_iter: self.sdp.max_iter,
                rank: RANK_TOLERANCE,
                extraction: EXTRACTION_TOLERANCE,
                psd: PSD_TOLERANCE,
                logdet_decrement: self.logdet.decrement_tol,
                logdet_stall: self.logdet.stall_tol,
                ridge_factor: RIDGE_FACTOR,
            },
        }
    }

    fn json<T: Serialize>(&self, result: T) -> anyhow::Result<Artifact> {
        let report = Report { meta: self.meta(), result };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        Ok(Artifact::Json(text))
    }

    /// `--t`, else `t_min..=--t-max`, else the input range, else the fallback.
    fn orders(&self, t_range: Option<[usize; 2]>, t_min: usize, fallback: usize) -> anyhow::Result<Vec<usize>> {
        let (lo, hi) = if let Some(t) = self.cfg.t {
            (t, t)
        } else if let Some(hi) = self.cfg.t_max {
            (t_min, hi)
        } else if let Some([lo, hi]) = t_range {
            (lo, hi)
        } else {
            (fallback, fallback)
        };
        if lo > hi {
            bail!("empty order range {lo}..={hi}");
        }
        if lo < t_min {
            bail!("order {lo} is below the minimal order {t_min}");
        }
        Ok((lo..=hi).collect())
    }

    fn single_order(&self, from_input: Option<usize>) -> anyhow::Result<usize> {
        self.cfg.t.or(from_input).ok_or_else(|| anyhow!("an order is required (--t or \"t\" in the input)"))
    }
}

fn read_input<T: DeserializeOwned>(path: &PathBuf) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(v) = value.get("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION as u64) {
            bail!("unsupported schema_version {v}; expected {SCHEMA_VERSION}");
        }
    }
    serde_json::from_value(value).with_context(|| format!("validating {}", path.display()))
}

fn measure_dimension(src: &MeasureSource) -> usize {
    match src {
        MeasureSource::Catalog(d) => d.dimension(),
        MeasureSource::Moments(m) => m.n(),
    }
}

fn load_moments(src: &MeasureSource, degree: usize) -> anyhow::Result<MomentSequence> {
    Ok(match src {
        MeasureSource::Catalog(d) => catalog_moments(d, degree)?,
        MeasureSource::Moments(m) => m.truncate(degree)?,
    })
}

/// Support box of a catalog measure, widened by a quarter of its width on each side.
fn default_bounds(desc: &MeasureDescriptor) -> Option<Vec<[f64; 2]>> {
    let raw: Vec<[f64; 2]> = match desc {
        MeasureDescriptor::Chebyshev1 { a, b }
        | MeasureDescriptor::Chebyshev2 { a, b }
        | MeasureDescriptor::UniformInterval { a, b } => vec![[*a, *b]],
        MeasureDescriptor::UniformBox { bounds } => bounds.clone(),
        MeasureDescriptor::UniformBall2d { radius } => vec![[-radius, *radius]; 2],
        MeasureDescriptor::UniformSimplex2d { scale } => vec![[0.0, *scale]; 2],
        MeasureDescriptor::Gaussian { dim, variance } => {
            let r = 3.0 * variance.sqrt();
            vec![[-r, r]; *dim]
        }
        MeasureDescriptor::Empirical { points } => {
            let n = points.first()?.len();
            (0..n)
                .map(|i| {
                    let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
                    let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
                    [lo, hi]
                })
                .collect()
        }
        MeasureDescriptor::Product { factors } => {
            let mut all = Vec::new();
            for f in factors {
                all.extend(default_bounds(f)?);
            }
            return Some(all);
        }
    };
    Some(
        raw.into_iter()
            .map(|[lo, hi]| {
                let pad = 0.25 * (hi - lo).max(1e-3);
                [lo - pad, hi + pad]
            })
            .collect(),
    )
}

fn axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

/// Tensor grid, the first coordinate varying slowest.
fn grid_points(bounds: &[[f64; 2]], counts: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> =
        bounds.iter().enumerate().map(|(i, [lo, hi])| axis(*lo, *hi, counts[i.min(counts.len() - 1)])).collect();
    let mut points = vec![Vec::new()];
    for ax in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

fn evaluate_points(kernel: &CdKernel, points: &[Vec<f64>], threshold: f64) -> anyhow::Result<Vec<CfPoint>> {
    let dim = kernel.dim() as f64;
    points
        .par_iter()
        .map(|x| {
            let lambda = kernel.cf(x)?;
            let scaled_lambda = dim * lambda;
            Ok(CfPoint { x: x.clone(), lambda, scaled_lambda, inside: scaled_lambda >= threshold })
        })
        .collect()
}

fn csv_grid(ctx: &Session, n: usize, rows: &[CfPoint]) -> anyhow::Result<Artifact> {
    let mut buf = format!("# {}\n", serde_json::to_string(&ctx.meta())?).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.extend(["lambda", "scaled_lambda", "inside_flag"].map(String::from));
        w.write_record(&header)?;
        for r in rows {
            let mut rec: Vec<String> = r.x.iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{:?}", r.lambda));
            rec.push(format!("{:?}", r.scaled_lambda));
            rec.push(u8::from(r.inside).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(Artifact::Csv(String::from_utf8(buf)?))
}

fn lowerbound(ctx: &Session) -> anyhow::Result<Artifact> {
    let input: LowerBoundInput = read_input(&ctx.cfg.input)?;
    let set = SemialgebraicSet::new(input.f.n(), input.constraints)?;
    let t0 = min_order(&input.f, &set);
    let orders = ctx.orders(input.t_range, t0, t0)?;
    let opts = LowerBoundOptions { sdp: ctx.sdp, seed: ctx.seed, extract: true };
    let results: Vec<_> =
        orders.par_iter().map(|&t| lower_bound(&input.f, &set, t, &opts)).collect::<Result<_, _>>()?;
    ctx.json(results)
}

fn upperbound(ctx: &Session) -> anyhow::Result<Artifact> {
    let input: UpperBoundInput = read_input(&ctx.cfg.input)?;
    let orders = ctx.orders(input.t_range, 0, 1)?;
    let t_top = *orders.last().expect("non-empty");
    let deg = input.f.degree();
    let needed = match input.mode {
        UpperBoundMode::Multivariate => 2 * t_top + deg,
        UpperBoundMode::Pushforward => deg * (2 * t_top + 1),
    };
    let mu = load_moments(&input.measure, needed)?;
    let results: Vec<_> = orders
        .par_iter()
        .map(|&t| match input.mode {
            UpperBoundMode::Multivariate => upper_bound(&input.f, &mu, t),
            UpperBoundMode::Pushforward => upper_bound_pushforward(&input.f, &mu, t),
        })
        .collect::<Result<_, _>>()?;
    ctx.json(results)
}

fn cf_common(ctx: &Session, grid_only: bool) -> anyhow::Result<Artifact> {
    let input: CfInput = read_input(&ctx.cfg.input)?;
    let t = ctx.single_order(input.t)?;
    let n = measure_dimension(&input.measure);
    let mu = load_moments(&input.measure, 2 * t)?;
    let kernel = CdKernel::new_regularized(&mu, t)?;
    let use_grid = grid_only || !ctx.cfg.grid.is_empty() || input.points.is_none();
    if use_grid {
        let bounds = match (&input.bounds, &input.measure) {
            (Some(b), _) => b.clone(),
            (None, MeasureSource::Catalog(d)) => {
                default_bounds(d).ok_or_else(|| anyhow!("cannot infer grid bounds"))?
            }
            (None, MeasureSource::Moments(_)) => bail!("grid output from raw moments needs \"bounds\""),
        };
        if bounds.len() != n {
            bail!("bounds have {} coordinates, the measure has {n}", bounds.len());
        }
        let counts = if ctx.cfg.grid.is_empty() { vec![64] } else { ctx.cfg.grid.clone() };
        if counts.contains(&0) {
            bail!("grid counts must be positive");
        }
        let rows = evaluate_points(&kernel, &grid_points(&bounds, &counts), input.threshold)?;
        return csv_grid(ctx, n, &rows);
    }
    let points = input.points.expect("checked");
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        bail!("point {p:?} has {} coordinates, the measure has {n}", p.len());
    }
    let rows = evaluate_points(&kernel, &points, input.threshold)?;
    ctx.json(CfResult {
        t,
        regularized: kernel.is_regularized(),
        ridge: kernel.ridge(),
        threshold: input.threshold,
        points: rows,
    })
}

fn christoffel_rep(ctx: &Session) -> anyhow::Result<Artifact> {
    let input: ChristoffelRepInput = read_input(&ctx.cfg.input)?;
    let set = SemialgebraicSet::new(input.p.n(), input.constraints)?;
    let t = ctx.cfg.t.or(input.t).unwrap_or_else(|| min_order(&input.p, &set));
    ctx.json(christoffel_representation(&input.p, &set, t, &ctx.logdet)?)
}

fn pell(ctx: &Session) -> anyhow::Result<Artifact> {
    let input: PellCheckInput = read_input(&ctx.cfg.input)?;
    let n = input.n.or(input.constraints.first().map(|g| g.n())).unwrap_or(measure_dimension(&input.measure));
    let set = SemialgebraicSet::new(n, input.constraints)?;
    let t_min = set.max_half_degree();
    let orders = ctx.orders(input.t_range, t_min, t_min.max(1))?;
    let mu = load_moments(&input.measure, 2 * orders.last().expect("non-empty"))?;
    let results: Vec<_> = orders.par_iter().map(|&t| pell_check(&set, &mu, t)).collect::<Result<_, _>>()?;
    ctx.json(results)
}

fn equilibrium(ctx: &Session) -> anyhow::Result<Artifact> {
    let input: EquilibriumInput = read_input(&ctx.cfg.input)?;
    let t_max = ctx.cfg.t_max.or(ctx.cfg.t).or(input.t_max).unwrap_or(3);
    ctx.json(equilibrium_experiment(input.set, t_max, &ctx.logdet)?)
}

fn disintegrate(ctx: &Session) -> anyhow::Result<Artifact> {
    let input: DisintegrateInput = read_input(&ctx.cfg.input)?;
    let t = ctx.single_order(input.t)?;
    let mu = load_moments(&input.measure, 2 * t)?;
    let results: Vec<_> =
        input.x.par_iter().map(|x| disintegrate_cf_with(&mu, x, t, &ctx.logdet)).collect::<Result<_, _>>()?;
    ctx.json(results)
}

fn dispatch(ctx: &Session) -> anyhow::Result<Artifact> {
    match ctx.cfg.command {
        Command::Lowerbound => lowerbound(ctx),
        Command::Upperbound => upperbound(ctx),
        Command::Cf => cf_common(ctx, false),
        Command::SupportScore => cf_common(ctx, true),
        Command::ChristoffelRep => christoffel_rep(ctx),
        Command::PellCheck => pell(ctx),
        Command::Equilibrium => equilibrium(ctx),
        Command::Disintegrate => disintegrate(ctx),
    }
}

/// Runs one command and returns its artifact without writing it.
pub fn run(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let mut sdp = SdpOptions::default();
    if let Some(g) = cfg.tol_gap {
        if !(g.is_finite() && g > 0.0) {
            return Err(CliError::validation(anyhow!("--tol-gap must be positive, got {g}")));
        }
        sdp.gap_tol = g;
    }
    let ctx =
        Session { cfg: cfg.clone(), sdp, logdet: LogdetOptions::default(), seed: cfg.seed.unwrap_or(DEFAULT_SEED) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::validation(e.into()))?;
    pool.install(|| dispatch(&ctx)).map_err(CliError::classify)
}

/// Runs the command and writes the artifact to `--output` or stdout.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let artifact = run(cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, artifact.text())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::validation),
        None => {
            print!("{}", artifact.text());
            Ok(())
        }
    }
}
