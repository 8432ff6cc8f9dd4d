use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mvseq::diagnostics::{
    cube_region, ellipsoid_region, ess, min_univariate_ess_from, Region, RegionKind,
};
use mvseq::experiments::{emit_tables, run_replications, TableFormat};
use mvseq::samplers::{rng::seeded, Model, ModelKind};
use mvseq::{Chain, ChainFormat, Estimator, ExperimentConfig, Method, MkStart, MvEstimate};

#[derive(Parser)]
#[command(
    name = "mvseq",
    version,
    about = "Initial sequence estimators for MCMC output"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ellipsoid,
    Cube,
    Bonf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MkStartArg {
    Zero,
    One,
}

#[derive(clap::Args)]
struct Input {
    /// Chain file (csv with header c1..cp, or f64le binary).
    #[arg(long)]
    input: PathBuf,
    /// csv or bin; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<ChainFormat>,
}

impl Input {
    fn load(&self) -> Result<Chain> {
        let format = self
            .format
            .unwrap_or_else(|| ChainFormat::from_path(&self.input));
        Chain::load(&self.input, format)
            .with_context(|| format!("loading {}", self.input.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the asymptotic covariance of the sample mean.
    Estimate {
        #[arg(long)]
        method: Method,
        #[command(flatten)]
        input: Input,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// First lag pair checked by mK.
        #[arg(long, value_enum, default_value = "zero")]
        mk_start: MkStartArg,
    },
    /// Multivariate effective sample size (minimum univariate ESS for uis).
    Ess {
        #[arg(long, default_value = "mis")]
        method: Method,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Confidence region for the mean. Boxes always use the uIS estimates.
    Region {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.9)]
        level: f64,
        #[arg(long, value_enum, default_value = "ellipsoid")]
        kind: KindArg,
        /// Estimator behind an ellipsoid.
        #[arg(long, default_value = "mis")]
        method: Method,
        /// Comma-separated point to test for membership.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate one of the bundled test processes.
    Simulate {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON parameter block for the model.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        format: Option<ChainFormat>,
    },
    /// Run a replication experiment and write its table.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Report path; `.json` writes the full report, anything else csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<TableFormat>,
    },
}

fn write_json(value: &Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn mv_json(e: &MvEstimate) -> Value {
    json!({
        "method": e.method,
        "n": e.n,
        "p": e.p(),
        "sigma": e.sigma.to_row_major(),
        "s_n": e.s_n,
        "t_n": e.t_n_signed(),
        "logdet": e.logdet,
        "pd": e.pd,
    })
}

fn mv_estimate(est: &mut Estimator, method: Method, start: MkStart) -> Result<MvEstimate> {
    Ok(match method {
        Method::Mk => est.mk(start)?,
        Method::Mis => est.mis()?,
        Method::Misadj => est.misadj()?,
        Method::Uis => bail!("uis is not a multivariate estimator"),
    })
}

fn estimate(method: Method, input: &Input, output: Option<&Path>, start: MkStart) -> Result<()> {
    let chain = input.load()?;
    let mut est = Estimator::new(&chain)?;
    let value = if method == Method::Uis {
        let uis = est.uis_all()?;
        json!({
            "method": "uis",
            "n": chain.n(),
            "p": chain.p(),
            "components": uis.iter().enumerate().map(|(j, u)| json!({
                "component": j,
                "sigma2": u.sigma2,
                "t_n": u.t_n.map_or(-1, |t| t as i64),
                "gamma0": u.gamma0,
            })).collect::<Vec<_>>(),
        })
    } else {
        mv_json(&mv_estimate(&mut est, method, start)?)
    };
    write_json(&value, output)
}

fn ess_command(method: Method, input: &Input, output: Option<&Path>) -> Result<()> {
    let chain = input.load()?;
    let mut est = Estimator::new(&chain)?;
    let value = if method == Method::Uis {
        let m = min_univariate_ess_from(chain.n(), &est.uis_all()?)?;
        json!({
            "method": "uis",
            "n": chain.n(),
            "p": chain.p(),
            "ess": m.ess,
            "component": m.component,
            "excluded": m.excluded,
        })
    } else {
        let lambda = est.sequence().gamma0().clone();
        let e = mv_estimate(&mut est, method, MkStart::Zero)?;
        json!({
            "method": method,
            "n": chain.n(),
            "p": chain.p(),
            "ess": ess(chain.n(), &lambda, &e.sigma)?,
            "logdet_lambda": lambda.logdet_pd()?,
            "logdet_sigma": e.logdet,
        })
    };
    write_json(&value, output)
}

fn region_json(r: &Region, point: Option<&[f64]>) -> Result<Value> {
    let mut v = json!({
        "kind": r.kind(),
        "level": r.level(),
        "p": r.p(),
        "center": r.center(),
        "volume": r.volume(),
        "log_volume": r.log_volume(),
        "volume_root": r.volume_root(),
    });
    let obj = v.as_object_mut().expect("object literal");
    if let Some(c) = r.cutoff() {
        obj.insert("cutoff".into(), json!(c));
        obj.insert("sigma".into(), json!(r.sigma().map(|s| s.to_row_major())));
    }
    if let Some(z) = r.z() {
        obj.insert("z".into(), json!(z));
        obj.insert("half_widths".into(), json!(r.half_widths()));
    }
    if let Some(x) = point {
        obj.insert("point".into(), json!(x));
        obj.insert("statistic".into(), json!(r.statistic(x)?));
        obj.insert("contains".into(), json!(r.contains(x)?));
    }
    Ok(v)
}

fn region_command(
    input: &Input,
    level: f64,
    kind: KindArg,
    method: Method,
    point: Option<&[f64]>,
    output: Option<&Path>,
) -> Result<()> {
    let chain = input.load()?;
    let mut est = Estimator::new(&chain)?;
    let mu_n = chain.mean();
    let alpha = 1.0 - level;
    let region = match kind {
        KindArg::Ellipsoid => {
            let e = mv_estimate(&mut est, method, MkStart::Zero)?;
            ellipsoid_region(&mu_n, &e.sigma, chain.n(), alpha)?
        }
        KindArg::Cube | KindArg::Bonf => {
            let sd: Vec<f64> = est
                .uis_all()?
                .iter()
                .map(|u| u.sigma2.max(0.0).sqrt())
                .collect();
            cube_region(&mu_n, &sd, chain.n(), alpha, matches!(kind, KindArg::Bonf))?
        }
    };
    let mut v = region_json(&region, point)?;
    v["n"] = json!(chain.n());
    if region.kind() == RegionKind::Ellipsoid {
        v["method"] = json!(method);
    } else {
        v["method"] = json!("uis");
    }
    write_json(&v, output)
}

fn simulate(
    model: ModelKind,
    n: usize,
    seed: u64,
    out: &Path,
    params: Option<&Path>,
    format: Option<ChainFormat>,
) -> Result<()> {
    let params: Value = match params {
        Some(path) => serde_json::from_str(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )
        .with_context(|| format!("parsing {}", path.display()))?,
        None => Value::Null,
    };
    let model = Model::from_params(model, &params)?;
    let chain = model.simulate(n, &mut seeded(seed))?;
    let format = format.unwrap_or_else(|| ChainFormat::from_path(out));
    chain.save(out, format)?;
    eprintln!(
        "wrote {} x {} chain to {}",
        chain.n(),
        chain.p(),
        out.display()
    );
    Ok(())
}

fn experiment(config: &Path, out: &Path, format: Option<TableFormat>) -> Result<()> {
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let config = ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing {}", config.display()))?;
    let report = run_replications(&config)?;
    emit_tables(
        &report,
        out,
        format.unwrap_or_else(|| TableFormat::from_path(out)),
    )?;
    for row in &report.rows {
        eprintln!(
            "{:<15} ess {:>12}  coverage {:>6}  failed {}",
            row.method,
            row.ess_mean.map_or("-".into(), |v| format!("{v:.1}")),
            row.coverage.map_or("-".into(), |v| format!("{v:.3}")),
            row.fail_count
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Estimate {
            method,
            input,
            output,
            mk_start,
        } => {
            let start = match mk_start {
                MkStartArg::Zero => MkStart::Zero,
                MkStartArg::One => MkStart::One,
            };
            estimate(method, &input, output.as_deref(), start)
        }
        Command::Ess {
            method,
            input,
            output,
        } => ess_command(method, &input, output.as_deref()),
        Command::Region {
            input,
            level,
            kind,
            method,
            point,
            output,
        } => region_command(
            &input,
            level,
            kind,
            method,
            point.as_deref(),
            output.as_deref(),
        ),
        Command::Simulate {
            model,
            n,
            seed,
            out,
            params,
            format,
        } => simulate(model, n, seed, &out, params.as_deref(), format),
        Command::Experiment {
            config,
            out,
            format,
        } => experiment(&config, &out, format),
    }
}
