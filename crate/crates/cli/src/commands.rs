use std::fs;
use std::io::Write;
use std::path::Path;

use sieve_roc::bootstrap::{self, Acceleration, BootstrapOptions};
use sieve_roc::data::{self, CsvOptions};
use sieve_roc::estimators;
use sieve_roc::experiment::{self, Scenario, ScenarioSummary};
use sieve_roc::pipeline::{self, SieveSettings};
use sieve_roc::simcopula::{self, SimConfig};
use sieve_roc::{BcaResult, Dataset, Error, FitOptions, Result, SieveFit, StopReason};

use crate::args::*;
use crate::svg;

fn usage(message: impl Into<String>) -> Error {
    Error::InvalidArgument(message.into())
}

/// Writes `content` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, content: &[u8]) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn model_config(args: &ModelArgs) -> Result<SimConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = read_text(path)?;
            toml::from_str::<SimConfig>(&text)
                .map_err(|e| usage(format!("config {}: {}", path.display(), e.message())))?
        }
        None => SimConfig::default(),
    };
    let overrides = [
        (&mut config.tau, args.tau),
        (&mut config.rho, args.rho),
        (&mut config.lambda, args.lambda),
        (&mut config.alpha, args.alpha),
        (&mut config.beta, args.beta),
        (&mut config.scale, args.scale),
        (&mut config.gap, args.gap),
    ];
    for (slot, value) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    Ok(config)
}

fn settings(args: &SieveArgs) -> Result<SieveSettings> {
    let settings = SieveSettings {
        order: args.order,
        time_knots: args.time_knots,
        marker_knots: args.marker_knots,
        fit: FitOptions {
            max_iter: args.max_iter,
            loglik_tol: args.loglik_tol,
            pg_tol: args.pg_tol,
            adaptive_step: args.adaptive_step,
            ..FitOptions::default()
        },
        grid: args.grid,
    };
    settings.fit.validate()?;
    if settings.grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    if settings.time_knots == Some(0) || settings.marker_knots == Some(0) {
        return Err(usage("knot counts must be at least 1"));
    }
    Ok(settings)
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let file = fs::File::open(&args.data)
        .map_err(|e| Error::Data(format!("{}: {e}", args.data.display())))?;
    let load = data::read_csv_from(
        std::io::BufReader::new(file),
        &CsvOptions {
            tau_t: args.tau_t,
            tau_m: args.tau_m,
        },
    )?;
    if load.missing_marker_rows > 0 {
        warn(&format!(
            "dropped {} rows with a missing marker",
            load.missing_marker_rows
        ));
    }
    Ok(load.dataset)
}

fn load_model(path: &Path) -> Result<SieveFit<f64>> {
    SieveFit::from_json(&read_text(path)?)
}

fn acceleration(arg: AccelArg) -> Acceleration {
    match arg {
        AccelArg::Jackknife => Acceleration::Jackknife,
        AccelArg::None => Acceleration::None,
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut config = model_config(&args.model)?;
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (dataset, latent) = simcopula::gen_with_latent(&config)?;
    let mut buf = Vec::new();
    data::write_csv(&dataset, &mut buf)?;
    emit(args.out.as_deref(), &buf)?;
    if let Some(path) = &args.latent {
        let mut buf = Vec::new();
        simcopula::write_latent_csv(&latent, &mut buf)?;
        fs::write(path, buf)?;
    }
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let dataset = load_data(&args.data)?;
    let settings = settings(&args.sieve)?;
    let fit = pipeline::fit_dataset(&dataset, &settings, None)?;
    if fit.stop_reason == StopReason::MaxIterations {
        warn(&format!(
            "iteration cap of {} reached before convergence",
            settings.fit.max_iter
        ));
    }
    let mut json = fit.to_json()?;
    json.push('\n');
    emit(args.out.as_deref(), json.as_bytes())
}

pub fn roc(args: &RocArgs) -> Result<()> {
    let fit = load_model(&args.model)?;
    let curve = estimators::roc_curve(&fit, args.t, args.grid)?;
    if curve.is_truncated() {
        warn(&format!(
            "fitted marker mass is below one; ROC is extended flat below p = {}",
            curve.fp_floor
        ));
    }
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    emit(args.out.as_deref(), &buf)?;
    if let Some(path) = &args.svg {
        fs::write(path, svg::roc_svg(&curve))?;
    }
    Ok(())
}

pub fn auc(args: &AucArgs) -> Result<()> {
    let fit = load_model(&args.model)?;
    let mut out = String::from("t,auc\n");
    for &t in &args.t {
        out.push_str(&format!("{t},{}\n", estimators::auc(&fit, t, args.grid)?));
    }
    emit(None, out.as_bytes())
}

pub fn ci(args: &CiArgs) -> Result<()> {
    let dataset = load_data(&args.data)?;
    let settings = settings(&args.sieve)?;
    let options = BootstrapOptions {
        replicates: args.bootstrap.replicates,
        level: args.bootstrap.level,
        seed: args.seed,
        acceleration: acceleration(args.bootstrap.accel),
        warm_start: true,
    };
    let results = bootstrap::bca_auc_multi(&dataset, &args.t, &settings, &options)?;
    let mut out = format!("{}\n", BcaResult::CSV_HEADER);
    for r in &results {
        if r.degenerate {
            warn(&format!(
                "all bootstrap AUCs at t = {} are equal; interval collapsed",
                r.t
            ));
        }
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    emit(args.out.as_deref(), out.as_bytes())
}

pub fn oracle(args: &OracleArgs) -> Result<()> {
    let config = model_config(&args.model)?;
    let mut out = String::new();
    for &t in &args.t {
        out.push_str(&format!("{}\n", simcopula::true_auc(t, &config)?));
    }
    emit(None, out.as_bytes())
}

pub fn replicate_table(args: &TableArgs) -> Result<()> {
    let settings = settings(&args.sieve)?;
    let bootstrap = args
        .replicates
        .map(|replicates| BootstrapOptions {
            replicates,
            level: args.level,
            seed: args.seed,
            acceleration: acceleration(args.accel),
            warm_start: true,
        })
        .map(|o| o.validate().map(|_| o))
        .transpose()?;
    let mut rows: Vec<ScenarioSummary> = Vec::new();
    for &tau in &args.tau {
        for &rho in &args.rho {
            for &n in &args.n {
                let scenario = Scenario {
                    model: SimConfig {
                        tau,
                        rho,
                        n,
                        seed: args.seed,
                        ..SimConfig::default()
                    },
                    horizons: args.t.clone(),
                    reps: args.reps,
                    settings,
                    bootstrap,
                };
                rows.extend(experiment::run_scenario(&scenario)?);
            }
        }
    }
    // Table layout: by tau, then horizon, then censoring rate, then size.
    let position =
        |values: &[f64], x: f64| values.iter().position(|&v| v == x).unwrap_or(usize::MAX);
    let size_position = |x: usize| args.n.iter().position(|&v| v == x).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| {
        (
            position(&args.tau, r.tau),
            position(&args.t, r.t),
            position(&args.rho, r.rho),
            size_position(r.n),
        )
    });
    let mut buf = Vec::new();
    experiment::write_summary_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}

pub fn histogram(args: &HistogramArgs) -> Result<()> {
    let dataset = load_data(&args.data)?;
    let bins = simcopula::current_status_histogram(&dataset, args.bins)?;
    let mut buf = Vec::new();
    simcopula::write_histogram_csv(&bins, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}
