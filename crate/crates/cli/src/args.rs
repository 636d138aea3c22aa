use clap::{Args, Parser, Subcommand, ValueEnum};
use steinbounds::experiments::CountMode;
use steinbounds::Metric;

#[derive(Debug, Parser)]
#[command(name = "steinbounds", version, about = "Compute, verify and tabulate explicit approximation bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the bound report for one parameter point.
    Bound(CommonArgs),
    /// Compute the bound and the true distance, and check the inequality.
    Verify(CommonArgs),
    /// Sweep one parameter and emit one row per point.
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Mp,
    MpOrdered,
    Dickman,
    Harmonic,
    CltNa,
    CltA,
    Srs,
    Urn,
    GaussGeneric,
    ThirdMoment,
    T,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Mp => "mp",
            Target::MpOrdered => "mp-ordered",
            Target::Dickman => "dickman",
            Target::Harmonic => "harmonic",
            Target::CltNa => "clt-na",
            Target::CltA => "clt-a",
            Target::Srs => "srs",
            Target::Urn => "urn",
            Target::GaussGeneric => "gauss-generic",
            Target::ThirdMoment => "third-moment",
            Target::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestFunction {
    Cos,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(value_enum)]
    pub target: Target,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample size.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Tail and quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    /// Force exact ground truth.
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Force Monte Carlo ground truth.
    #[arg(long)]
    pub mc: bool,
    /// Use quadrature for the t expectation (the default for t).
    #[arg(long, conflicts_with = "mc")]
    pub quadrature: bool,
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `<param>=<start>:<stop>:<step>` with param one of n, m, k, c, dof, p.
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Sweep,
    /// Add the true distance to every row.
    #[arg(long)]
    pub truth: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Params {
    /// Population values for srs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<u64>>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub dof: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Urn statistic: urns over capacity, or total excess.
    #[arg(long, value_parser = parse_count_mode, default_value = "excess")]
    pub count_mode: CountMode,
    /// Mixing law of W for mp targets, e.g. `gamma:2,1.5`, `poisson:1`, `dickman:1`, `point:2`.
    #[arg(long)]
    pub w: Option<String>,
    /// Mixing law of Z for mp targets.
    #[arg(long)]
    pub z: Option<String>,
    /// Moment sums: `sum EY, sum EY^2, sum EY^3, sum (EY)^2, cross covariance` for clt-na and
    /// clt-a; `E|xi|^3, E xi^2, lambda, sigma^2, residual` for gauss-generic.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub moments: Option<Vec<f64>>,
    /// Fourth moment for third-moment.
    #[arg(long)]
    pub m4: Option<f64>,
    /// Sup norm of h'' for third-moment.
    #[arg(long, default_value_t = 1.0)]
    pub h2: f64,
    /// Test function for t verification.
    #[arg(long, value_enum, default_value_t = TestFunction::Cos)]
    pub h: TestFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    N,
    M,
    K,
    C,
    Dof,
    P,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::M => "m",
            SweepParam::K => "k",
            SweepParam::C => "c",
            SweepParam::Dof => "dof",
            SweepParam::P => "p",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::N | SweepParam::M | SweepParam::K)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    /// Points `start, start + step, ...` up to `stop` inclusive.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

pub fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: steinbounds::Error| e.to_string())
}

fn parse_count_mode(s: &str) -> Result<CountMode, String> {
    s.parse().map_err(|e: steinbounds::Error| e.to_string())
}

pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (name, range) = s.split_once('=').ok_or("expected <param>=<start>:<stop>:<step>")?;
    let param = match name.trim() {
        "n" => SweepParam::N,
        "m" => SweepParam::M,
        "k" => SweepParam::K,
        "c" => SweepParam::C,
        "dof" => SweepParam::Dof,
        "p" => SweepParam::P,
        other => return Err(format!("cannot sweep '{other}' (expected n, m, k, c, dof or p)")),
    };
    let parts: Vec<f64> = range
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad number '{x}': {e}")))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err("expected three fields start:stop:step".into());
    };
    if !(step > 0.0 && start.is_finite() && stop.is_finite()) || stop < start {
        return Err("need a positive step and start <= stop".into());
    }
    if param.is_integer() && [start, stop, step].iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
        return Err(format!("{} takes non-negative integer values", param.name()));
    }
    Ok(Sweep { param, start, stop, step })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points() {
        let s = parse_sweep("n=4:64:4").unwrap();
        assert_eq!(s.points().len(), 16);
        assert_eq!(*s.points().last().unwrap(), 64.0);
        let c = parse_sweep("c=0.1:0.3:0.1").unwrap();
        assert_eq!(c.points().len(), 3);
        assert!(parse_sweep("n=1.5:3:1").is_err());
        assert!(parse_sweep("q=1:2:1").is_err());
    }
}
