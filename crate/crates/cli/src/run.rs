use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use steinbounds::bounds::*;
use steinbounds::dist_core::{mixed_poisson_pmf, GriddedLaw, MixingLaw, TruncatedPmf, MAX_PMF_INDEX};
use steinbounds::distances::*;
use steinbounds::experiments::*;
use steinbounds::{Error, Metric};

use crate::args::{CommonArgs, OutputFormat, Params, Sweep, SweepParam, Target, TestFunction};
use crate::output::{rows_to_json, to_csv, to_json, Cell, Row};

/// Failures of a run, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Some precondition of the bound failed; the report is still available.
    Inapplicable(Box<BoundReport>),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Inapplicable(_) => 2,
            CliError::Core(_) => 3,
        }
    }

    /// Machine-readable payload for stderr.
    pub fn to_json(&self) -> Value {
        match self {
            CliError::Inapplicable(r) => {
                let failed: Vec<&String> = r.preconditions.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k).collect();
                json!({ "error": "inapplicable", "theorem_id": r.theorem_id.as_str(), "failed_preconditions": failed })
            }
            CliError::Core(e) => json!({ "error": e.kind(), "message": e.to_string() }),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthMode {
    Auto,
    Exact,
    MonteCarlo,
}

/// Everything one bound or verification needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub target: Target,
    pub params: Params,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub metric: Option<Metric>,
    pub truth_mode: TruthMode,
    pub output: OutputFormat,
}

impl RunConfig {
    pub fn from_args(a: &CommonArgs) -> Self {
        let truth_mode = match (a.exact, a.mc) {
            (true, _) => TruthMode::Exact,
            (_, true) => TruthMode::MonteCarlo,
            _ => TruthMode::Auto,
        };
        Self {
            target: a.target,
            params: a.params.clone(),
            seed: a.seed,
            samples: a.samples,
            tol: a.tol,
            metric: a.metric,
            truth_mode,
            output: a.output.unwrap_or_default(),
        }
    }

    /// The metric in use, checked against what the target supports.
    pub fn metric(&self) -> CliResult<Metric> {
        let allowed: &[Metric] = match self.target {
            Target::Mp | Target::MpOrdered => &[Metric::TotalVariation, Metric::Kolmogorov, Metric::Wasserstein],
            Target::Dickman => &[Metric::TotalVariation, Metric::Kolmogorov],
            Target::Harmonic | Target::CltNa | Target::CltA | Target::Srs | Target::Urn | Target::GaussGeneric => {
                &[Metric::Wasserstein]
            }
            Target::ThirdMoment | Target::T => {
                return match self.metric {
                    None => Ok(Metric::Wasserstein),
                    Some(_) => Err(Error::Unsupported(format!(
                        "{} bounds |E h(W) - E h(Z)| for smooth h; drop --metric",
                        self.target.name()
                    ))
                    .into()),
                }
            }
        };
        let m = self.metric.unwrap_or(allowed[0]);
        if !allowed.contains(&m) {
            return Err(Error::Unsupported(format!("{} does not support metric {m}", self.target.name())).into());
        }
        Ok(m)
    }

    /// Checks that every parameter the target needs is present and the tolerances are sane.
    pub fn validate(&self) -> CliResult<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Domain(format!("--tol must lie in (0, 1), got {}", self.tol)).into());
        }
        self.metric()?;
        let p = &self.params;
        let need = |flag: &str, ok: bool| -> CliResult<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain(format!("{} needs --{flag}", self.target.name())).into())
            }
        };
        match self.target {
            Target::Mp | Target::MpOrdered => {
                need("w", p.w.is_some())?;
                need("z", p.z.is_some())
            }
            Target::Dickman => {
                need("n", p.n.is_some())?;
                need("c", p.c.is_some())
            }
            Target::Harmonic => need("n", p.n.is_some()),
            Target::CltNa | Target::CltA | Target::GaussGeneric => {
                need("moments", p.moments.as_ref().is_some_and(|v| v.len() == 5))
            }
            Target::Srs => {
                need("values", p.values.is_some())?;
                need("n", p.n.is_some())
            }
            Target::Urn => {
                need("m", p.m.is_some())?;
                need("n", p.n.is_some())?;
                need("k", p.k.is_some())
            }
            Target::ThirdMoment => need("m4", p.m4.is_some()),
            Target::T => need("dof", p.dof.is_some()),
        }
    }

    fn mixing(&self, s: &Option<String>) -> CliResult<MixingLaw> {
        Ok(s.as_deref().unwrap_or_default().parse::<MixingLaw>()?)
    }

    fn urn_p(&self) -> f64 {
        self.params.p.unwrap_or(1.0 / self.params.m.unwrap_or(1) as f64)
    }

    fn set(&mut self, param: SweepParam, x: f64) {
        let p = &mut self.params;
        match param {
            SweepParam::N => p.n = Some(x as u64),
            SweepParam::M => p.m = Some(x as u64),
            SweepParam::K => p.k = Some(x as u64),
            SweepParam::C => p.c = Some(x),
            SweepParam::Dof => p.dof = Some(x),
            SweepParam::P => p.p = Some(x),
        }
    }
}

/// The bound report, whether or not its preconditions hold.
pub fn compute_bound(cfg: &RunConfig) -> CliResult<BoundReport> {
    cfg.validate()?;
    let p = &cfg.params;
    let metric = cfg.metric()?;
    let moments = || p.moments.clone().unwrap_or_default();
    let report = match cfg.target {
        Target::Mp => mp_distance_bound(&cfg.mixing(&p.w)?, &cfg.mixing(&p.z)?, metric, cfg.tol)?,
        Target::MpOrdered => mp_ordered_bound(&cfg.mixing(&p.w)?, &cfg.mixing(&p.z)?, metric, cfg.tol)?,
        Target::Dickman => dickman_bound(p.n.unwrap_or_default(), p.c.unwrap_or_default(), metric)?,
        Target::Harmonic => harmonic_bound(p.n.unwrap_or_default())?,
        Target::CltNa | Target::CltA => {
            let m = moments();
            let s = MomentSummary::new(m[0], m[1], m[2], m[3], m[4])?;
            if cfg.target == Target::CltNa {
                clt_neg_assoc_bound(&s)?
            } else {
                clt_assoc_bound(&s)?
            }
        }
        Target::Srs => srs_bound(p.values.as_deref().unwrap_or_default(), p.n.unwrap_or_default() as usize)?,
        Target::Urn => urn_overflow_bound(
            p.m.unwrap_or_default(),
            p.n.unwrap_or_default(),
            p.k.unwrap_or_default(),
            cfg.urn_p(),
            p.count_mode,
        )?,
        Target::GaussGeneric => {
            let m = moments();
            gauss_generic_bound(m[0], m[1], m[2], m[3], m[4])?
        }
        Target::ThirdMoment => third_moment_bound(p.m4.unwrap_or_default(), p.h2)?,
        Target::T => student_t_bound(p.dof.unwrap_or_default())?,
    };
    Ok(report)
}

/// The bound report; an inapplicable bound is an error carrying the report.
pub fn run_bound(cfg: &RunConfig) -> CliResult<BoundReport> {
    let r = compute_bound(cfg)?;
    if r.is_applicable() {
        Ok(r)
    } else {
        Err(CliError::Inapplicable(Box::new(r)))
    }
}

/// A bound next to the distance it controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub target: String,
    pub bound: f64,
    pub truth: f64,
    pub truth_error_bar: f64,
    pub truth_method: String,
    /// `truth <= bound + truth_error_bar`.
    pub satisfied: bool,
    pub slack: f64,
    pub report: BoundReport,
}

/// Distance estimate with its error bar and how it was obtained.
#[derive(Debug, Clone)]
pub struct Truth {
    pub value: f64,
    pub error_bar: f64,
    pub method: String,
}

impl From<DistanceResult> for Truth {
    fn from(d: DistanceResult) -> Self {
        let method = match d.method {
            DistanceMethod::ExactPmf | DistanceMethod::ExactGrid => "exact",
            DistanceMethod::Empirical => "monte_carlo",
        };
        Truth { value: d.value, error_bar: d.error_bar, method: method.into() }
    }
}

impl VerificationReport {
    /// 0 when the bound holds, 1 when the truth exceeds it beyond the error bar.
    pub fn exit_code(&self) -> i32 {
        if self.satisfied {
            0
        } else {
            1
        }
    }
}

pub fn run_verify(cfg: &RunConfig) -> CliResult<VerificationReport> {
    let report = run_bound(cfg)?;
    let bound = report.value.expect("applicable report has a value");
    let truth = ground_truth(cfg)?;
    Ok(VerificationReport {
        target: cfg.target.name().into(),
        bound,
        truth: truth.value,
        truth_error_bar: truth.error_bar,
        truth_method: truth.method,
        satisfied: truth.value <= bound + truth.error_bar,
        slack: bound - truth.value,
        report,
    })
}

fn integer_distance(metric: Metric, a: &TruncatedPmf, b: &TruncatedPmf) -> DistanceResult {
    match metric {
        Metric::TotalVariation => tv_discrete(a, b),
        Metric::Kolmogorov => kolmogorov_discrete(a, b),
        Metric::Wasserstein => wasserstein_discrete(a, b),
    }
}

/// Empirical distance of integer samples to an exact pmf.
fn integer_empirical(metric: Metric, samples: &[u64], exact: &TruncatedPmf, seed: u64) -> CliResult<Truth> {
    match metric {
        Metric::TotalVariation => Ok(empirical_tv(samples, exact, seed)?.into()),
        Metric::Kolmogorov => {
            let emp = empirical_pmf(samples)?;
            let n = samples.len() as f64;
            // the DKW band holds for any law, lattice ones included
            let dkw = ((2.0f64 / 0.05).ln() / (2.0 * n)).sqrt();
            let d = kolmogorov_discrete(&emp, exact);
            Ok(Truth { value: d.value, error_bar: dkw + d.error_bar, method: "monte_carlo".into() })
        }
        Metric::Wasserstein => {
            Err(Error::Unsupported("Monte Carlo Wasserstein on integer laws has no error bar; use --exact".into()).into())
        }
    }
}

fn standardized(law: &GriddedLaw, theta: f64, sigma2: f64) -> CliResult<GriddedLaw> {
    let (pts, ps) = law.atoms().ok_or_else(|| Error::Unsupported("expected an atom law".into()))?;
    let s = sigma2.sqrt();
    let pts: Vec<f64> = pts.iter().map(|x| (x - theta) / s).collect();
    Ok(GriddedLaw::from_atoms(&pts, &ps)?)
}

fn gaussian_truth(cfg: &RunConfig, exact: impl Fn() -> steinbounds::Result<(GriddedLaw, MomentSummary)>, draws: impl Fn() -> steinbounds::Result<(Vec<u64>, MomentSummary)>) -> CliResult<Truth> {
    let target = GaussianTarget::standard();
    let try_exact = match cfg.truth_mode {
        TruthMode::MonteCarlo => None,
        _ => Some(exact()),
    };
    match try_exact {
        Some(Ok((law, m))) => Ok(wasserstein_to_target(&standardized(&law, m.theta, m.sigma2)?, &target)?.into()),
        Some(Err(e)) if cfg.truth_mode == TruthMode::Exact || !matches!(e, Error::TooLarge(_)) => Err(e.into()),
        _ => {
            let (xs, m) = draws()?;
            let s = m.sigma2.sqrt();
            let z: Vec<f64> = xs.iter().map(|&x| (x as f64 - m.theta) / s).collect();
            Ok(empirical_wasserstein(&z, &target, cfg.seed)?.into())
        }
    }
}

/// The true distance the target's bound controls.
pub fn ground_truth(cfg: &RunConfig) -> CliResult<Truth> {
    cfg.validate()?;
    let p = &cfg.params;
    let metric = cfg.metric()?;
    let no_mc = |what: &str| -> CliResult<()> {
        if cfg.truth_mode == TruthMode::MonteCarlo {
            Err(Error::Unsupported(format!("{what} is computed exactly only; drop --mc")).into())
        } else {
            Ok(())
        }
    };
    match cfg.target {
        Target::Mp | Target::MpOrdered => {
            let (w, z) = (cfg.mixing(&p.w)?, cfg.mixing(&p.z)?);
            let pz = mixed_poisson_pmf(&z, MAX_PMF_INDEX, cfg.tol)?;
            if cfg.truth_mode == TruthMode::MonteCarlo {
                let mut rng = steinbounds::rng::stream(cfg.seed, 0, 0x3c9);
                let xs: Vec<u64> = (0..cfg.samples)
                    .map(|_| {
                        let mu = w.sample(&mut rng);
                        if mu > 0.0 {
                            Poisson::new(mu).expect("positive mean").sample(&mut rng) as u64
                        } else {
                            0
                        }
                    })
                    .collect();
                return integer_empirical(metric, &xs, &pz, cfg.seed);
            }
            let pw = mixed_poisson_pmf(&w, MAX_PMF_INDEX, cfg.tol)?;
            Ok(integer_distance(metric, &pw, &pz).into())
        }
        Target::Dickman => {
            let (n, c) = (p.n.unwrap_or_default(), p.c.unwrap_or_default());
            let pz = mixed_poisson_pmf(&MixingLaw::dickman(c)?, MAX_PMF_INDEX, cfg.tol)?;
            let exact = match cfg.truth_mode {
                TruthMode::Exact => true,
                TruthMode::Auto => n <= BPS_EXACT_MAX_N,
                TruthMode::MonteCarlo => false,
            };
            if exact {
                let pw = bps_exact_pmf(n, c, cfg.tol)?;
                Ok(integer_distance(metric, &pw, &pz).into())
            } else {
                integer_empirical(metric, &bps_samples(n, c, cfg.seed, cfg.samples)?, &pz, cfg.seed)
            }
        }
        Target::Harmonic => {
            no_mc("the harmonic distance")?;
            Ok(Truth { value: overflow_harmonic_dw(p.n.unwrap_or_default())?, error_bar: 0.0, method: "exact".into() })
        }
        Target::Srs => {
            let values = p.values.clone().unwrap_or_default();
            let n = p.n.unwrap_or_default() as usize;
            gaussian_truth(
                cfg,
                || srs_exact_law(&values, n),
                || Ok((srs_samples(&values, n, cfg.seed, cfg.samples)?, srs_moment_summary(&values, n)?)),
            )
        }
        Target::Urn => {
            let (m, n, k, mode) = (p.m.unwrap_or_default(), p.n.unwrap_or_default(), p.k.unwrap_or_default(), p.count_mode);
            gaussian_truth(
                cfg,
                || Ok((urn_exact_law(m, n, k, mode)?, urn_moment_summary(m, n, k, mode)?)),
                || Ok((urn_samples(m, n, k, mode, cfg.seed, cfg.samples)?, urn_moment_summary(m, n, k, mode)?)),
            )
        }
        Target::T => {
            let dof = p.dof.unwrap_or_default();
            let TestFunction::Cos = p.h;
            let gauss = (-0.5f64).exp();
            if cfg.truth_mode == TruthMode::MonteCarlo {
                let xs = student_t_samples(dof, cfg.seed, cfg.samples)?;
                let n = xs.len() as f64;
                let ys: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
                let mean = ys.iter().sum::<f64>() / n;
                let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
                Ok(Truth { value: (mean - gauss).abs(), error_bar: 1.96 * (var / n).sqrt(), method: "monte_carlo".into() })
            } else {
                let e = student_t_expectation(dof, f64::cos, cfg.tol)?;
                Ok(Truth { value: (e - gauss).abs(), error_bar: cfg.tol, method: "quadrature".into() })
            }
        }
        Target::CltNa | Target::CltA | Target::GaussGeneric | Target::ThirdMoment => Err(Error::Unsupported(format!(
            "{} is given by moments alone, which do not determine a law; verify srs, urn or t instead",
            cfg.target.name()
        ))
        .into()),
    }
}

fn param_cells(cfg: &RunConfig) -> Row {
    let p = &cfg.params;
    let mut row: Row = vec![("target".into(), Cell::Text(cfg.target.name().into()))];
    let ints = [("n", p.n), ("m", p.m), ("k", p.k)];
    for (name, v) in ints {
        if let Some(v) = v {
            row.push((name.into(), Cell::Int(v)));
        }
    }
    let reals = [("c", p.c), ("dof", p.dof), ("p", p.p)];
    for (name, v) in reals {
        if let Some(v) = v {
            row.push((name.into(), Cell::Real(v)));
        }
    }
    if cfg.target == Target::Urn && p.p.is_none() {
        row.push(("p".into(), Cell::Real(cfg.urn_p())));
    }
    row
}

fn report_cells(row: &mut Row, r: &BoundReport) {
    row.push(("status".into(), Cell::Text(if r.is_applicable() { "ok" } else { "inapplicable" }.into())));
    row.push(("bound".into(), r.value.map(Cell::Real).unwrap_or(Cell::Empty)));
    for (k, v) in &r.components {
        row.push((k.clone(), Cell::Real(*v)));
    }
}

fn truth_cells(row: &mut Row, bound: Option<f64>, t: &Truth) {
    row.push(("truth".into(), Cell::Real(t.value)));
    row.push(("truth_error_bar".into(), Cell::Real(t.error_bar)));
    if let Some(b) = bound {
        row.push(("slack".into(), Cell::Real(b - t.value)));
        row.push(("satisfied".into(), Cell::Bool(t.value <= b + t.error_bar)));
    }
}

/// One row per sweep point. Points where the computation fails keep their
/// parameters and carry the error text.
pub fn run_table(cfg: &RunConfig, sweep: &Sweep, with_truth: bool) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    for x in sweep.points() {
        let mut point = cfg.clone();
        point.set(sweep.param, x);
        let mut row = param_cells(&point);
        match compute_bound(&point) {
            Ok(r) => {
                report_cells(&mut row, &r);
                if with_truth {
                    match ground_truth(&point) {
                        Ok(t) => truth_cells(&mut row, r.value, &t),
                        Err(e) => row.push(("error".into(), Cell::Text(error_text(&e)))),
                    }
                }
            }
            Err(e) => {
                row.push(("status".into(), Cell::Text("error".into())));
                row.push(("error".into(), Cell::Text(error_text(&e))));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn error_text(e: &CliError) -> String {
    match e {
        CliError::Inapplicable(r) => format!("{} inapplicable", r.theorem_id),
        CliError::Core(e) => e.to_string(),
    }
}

/// Text for stdout.
pub fn render_bound(cfg: &RunConfig, r: &BoundReport) -> String {
    match cfg.output {
        OutputFormat::Json => to_json(&serde_json::to_value(r).expect("report serializes")),
        OutputFormat::Csv => {
            let mut row = param_cells(cfg);
            report_cells(&mut row, r);
            to_csv(&[row])
        }
    }
}

pub fn render_verify(cfg: &RunConfig, v: &VerificationReport) -> String {
    match cfg.output {
        OutputFormat::Json => to_json(&serde_json::to_value(v).expect("report serializes")),
        OutputFormat::Csv => {
            let mut row = param_cells(cfg);
            report_cells(&mut row, &v.report);
            let t = Truth { value: v.truth, error_bar: v.truth_error_bar, method: v.truth_method.clone() };
            truth_cells(&mut row, Some(v.bound), &t);
            to_csv(&[row])
        }
    }
}

/// Tables default to CSV.
pub fn render_table(rows: &[Row], format: Option<OutputFormat>) -> String {
    match format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(&rows_to_json(rows)),
    }
}
