//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypothesis::{build_null_calibration, InterNEventTest, TestOutcome};
use crate::io::{
    catalog_to_csv, emit_results, grid_rows, histogram_rows, ingest_catalog, metadata_comment,
    OutputFormat, RunArgs, RunMetadata,
};
use crate::power::{
    quantile_rate_study, run_power_study, sweep_grid, test_catalog, with_workers, NullRatePolicy,
    TestConfig,
};
use crate::process::{rate_statistics, EventCatalog};
use crate::seed::{self, Domain};
use crate::stats::quantile;

#[derive(Debug, Parser)]
#[command(
    name = "clusterpower",
    version,
    about = "Power of Poisson-null tests on clustered event catalogs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one catalog
    Simulate(RunArgs),
    /// Test one catalog (simulated, or read with --catalog)
    Test(RunArgs),
    /// Power of a test over an ensemble of simulated catalogs
    Power(RunArgs),
    /// Power over a grid of cluster and in-cluster event rates
    Sweep(RunArgs),
    /// Monte Carlo null distribution of a test statistic
    Calibrate(RunArgs),
    /// Distribution of per-catalog mean rates
    Ratestats(RunArgs),
    /// Read a catalog file and test it
    Ingest(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Test(_) => "test",
            Command::Power(_) => "power",
            Command::Sweep(_) => "sweep",
            Command::Calibrate(_) => "calibrate",
            Command::Ratestats(_) => "ratestats",
            Command::Ingest(_) => "ingest",
        }
    }
}

/// Everything that determines a run's results; hashed into result files.
#[derive(Serialize)]
struct Provenance<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    inner: T,
}

fn metadata<T: Serialize>(command: &str, seed: u64, inner: T) -> Result<RunMetadata> {
    RunMetadata::new(command, seed, &Provenance { command, inner })
}

fn write_rows<R: Serialize>(
    args: &RunArgs,
    default_name: &str,
    rows: &[R],
    meta: &RunMetadata,
    out: &mut dyn Write,
) -> Result<()> {
    if let Some((path, format)) = args.output_target(default_name)? {
        emit_results(rows, meta, format, &path)?;
        say(out, format_args!("wrote {}", path.display()));
    }
    Ok(())
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) {
    let _ = writeln!(out, "{line}");
}

fn null_rate_value(args: &RunArgs) -> Result<Option<f64>> {
    match args.null_rate_policy()? {
        NullRatePolicy::Fixed(r) => Ok(Some(r)),
        NullRatePolicy::LongTermMean if args.null_rate.is_none() => Ok(None),
        _ => Err(Error::Config(
            "a single catalog needs a numeric --null-rate".into(),
        )),
    }
}

fn outcome_line(o: &TestOutcome) -> String {
    let mut line = format!(
        "test={} statistic={:.6} p_value={:.6} n_events={} null_rate={:.6} calibration={}",
        o.test.as_str(),
        o.statistic,
        o.p_value,
        o.n_events,
        o.null_rate.value(),
        serde_json::to_value(o.calibration)
            .unwrap_or_default()
            .as_str()
            .unwrap_or(""),
    );
    if let Some(dof) = o.dof {
        line.push_str(&format!(" dof={dof}"));
    }
    line
}

fn run_test(
    args: &RunArgs,
    catalog: &EventCatalog,
    command: &str,
    out: &mut dyn Write,
) -> Result<()> {
    let test = args.test_config()?;
    let settings = args.calibration_settings()?;
    let null_rate = null_rate_value(args)?;
    let outcome = test_catalog(catalog, &test, null_rate, &settings, args.seed())?;
    say(out, format_args!("{}", outcome_line(&outcome)));
    #[derive(Serialize)]
    struct Inputs<'a> {
        test: TestConfig,
        null_rate: Option<f64>,
        calibration: crate::power::CalibrationSettings,
        times: &'a [f64],
        window_years: f64,
    }
    let meta = metadata(
        command,
        args.seed(),
        Inputs {
            test,
            null_rate,
            calibration: settings,
            times: catalog.times(),
            window_years: catalog.window().length_years(),
        },
    )?;
    write_rows(args, "outcome", &[outcome], &meta, out)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    let name = command.name();
    match command {
        Command::Simulate(args) => {
            let args = args.resolve_file()?;
            let process = args.process()?;
            let catalog = process.sample(args.seed());
            #[derive(Serialize)]
            struct Row {
                time: f64,
            }
            let meta = metadata(name, args.seed(), process)?;
            match args.output_target("catalog")? {
                Some((path, OutputFormat::Csv)) => {
                    let text = metadata_comment(&meta) + &catalog_to_csv(&catalog, 0.0);
                    std::fs::write(&path, text).map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                    say(
                        out,
                        format_args!("events={} wrote {}", catalog.len(), path.display()),
                    );
                }
                Some((path, format)) => {
                    let rows: Vec<Row> = catalog.times().iter().map(|&time| Row { time }).collect();
                    emit_results(&rows, &meta, format, &path)?;
                    say(
                        out,
                        format_args!("events={} wrote {}", catalog.len(), path.display()),
                    );
                }
                None => {
                    let _ = out.write_all(catalog_to_csv(&catalog, 0.0).as_bytes());
                }
            }
            Ok(())
        }
        Command::Test(args) => {
            let args = args.resolve_file()?;
            args.check_input()?;
            let catalog = match &args.catalog {
                Some(path) => ingest_catalog(path, &args.ingest_options())?.catalog,
                None => args.process()?.sample(args.seed()),
            };
            run_test(&args, &catalog, name, out)
        }
        Command::Ingest(args) => {
            let args = args.resolve_file()?;
            let path = args
                .catalog
                .clone()
                .ok_or_else(|| Error::Config("ingest needs --catalog".into()))?;
            args.check_input()?;
            let ingested = ingest_catalog(&path, &args.ingest_options())?;
            let s = &ingested.source;
            say(
                out,
                format_args!(
                    "events={} rows_read={} below_cutoff={} duplicates_removed={} window_start={} window_years={}",
                    ingested.catalog.len(),
                    s.rows_read,
                    s.below_cutoff,
                    s.duplicates_removed,
                    s.window_start,
                    ingested.catalog.window().length_years()
                ),
            );
            run_test(&args, &ingested.catalog, name, out)
        }
        Command::Power(args) => {
            let args = args.resolve_file()?;
            let config = args.power_config()?;
            let study = run_power_study(&config)?;
            let e = &study.estimate;
            let d = &study.distribution;
            let mut line = format!(
                "test={} power={:.4} std_error={:.4} alpha={} n_effective={} n_untestable={} p_above_0.20={:.4} mean_rate={:.4}",
                config.test.id().as_str(),
                e.power,
                e.std_error,
                e.alpha,
                e.n_effective,
                d.n_untestable,
                d.fraction_above(0.2),
                study.ensemble_mean_rate,
            );
            if let Some(r) = study.null_rate {
                line.push_str(&format!(" null_rate={r:.4}"));
            }
            say(out, format_args!("{line}"));
            let meta = metadata(name, config.master_seed, &config)?;
            write_rows(
                &args,
                "histogram",
                &histogram_rows(&d.histogram),
                &meta,
                out,
            )
        }
        Command::Sweep(args) => {
            let args = args.resolve_file()?;
            let config = args.power_config()?;
            let clusters = args.axis(true)?;
            let events = args.axis(false)?;
            let grid = sweep_grid(&config, &clusters, &events)?;
            for cell in grid.iter() {
                match (&cell.estimate, &cell.error) {
                    (Some(e), _) => say(
                        out,
                        format_args!(
                            "clusters={} events_per_decade={} power={:.4} std_error={:.4} n_effective={}",
                            cell.clusters_per_century, cell.events_per_decade, e.power, e.std_error, e.n_effective
                        ),
                    ),
                    (None, err) => say(
                        out,
                        format_args!(
                            "clusters={} events_per_decade={} error={}",
                            cell.clusters_per_century,
                            cell.events_per_decade,
                            serde_json::to_string(err).unwrap_or_default()
                        ),
                    ),
                }
            }
            #[derive(Serialize)]
            struct Inputs<'a> {
                base: &'a crate::power::PowerConfig,
                clusters_axis: &'a [f64],
                events_axis: &'a [f64],
            }
            let meta = metadata(
                name,
                config.master_seed,
                Inputs {
                    base: &config,
                    clusters_axis: &clusters,
                    events_axis: &events,
                },
            )?;
            write_rows(&args, "grid", &grid_rows(&grid), &meta, out)
        }
        Command::Calibrate(args) => {
            let args = args.resolve_file()?;
            let test = args.test_config()?;
            let settings = args.calibration_settings()?;
            let rate = null_rate_value(&args)?
                .ok_or_else(|| Error::Config("calibrate needs a numeric --null-rate".into()))?;
            let window = args.window()?;
            let seed = args.seed();
            let cal_seed = seed::derive(seed, Domain::Calibration, 0);
            let cal = with_workers(args.workers, || match test {
                TestConfig::Ks(t) => {
                    build_null_calibration(&t, rate, window, settings.n_trials, cal_seed)
                }
                TestConfig::Chi2Counts(t) => {
                    build_null_calibration(&t, rate, window, settings.n_trials, cal_seed)
                }
                TestConfig::Chi2InterNEvent {
                    config,
                    reference,
                    reference_catalogs,
                } => {
                    let t = match reference {
                        crate::power::ReferenceKind::Erlang => {
                            InterNEventTest::erlang(config, rate)?
                        }
                        crate::power::ReferenceKind::Simulated => InterNEventTest::simulated(
                            config,
                            rate,
                            window,
                            reference_catalogs,
                            seed::derive(seed, Domain::Reference, 0),
                        )?,
                    };
                    build_null_calibration(&t, rate, window, settings.n_trials, cal_seed)
                }
            })??;
            let values = cal.table(0)?.values();
            #[derive(Serialize)]
            struct Row {
                level: f64,
                statistic: f64,
            }
            let rows: Vec<Row> = (1..100)
                .map(|i| {
                    let level = i as f64 / 100.0;
                    quantile(values, level).map(|statistic| Row { level, statistic })
                })
                .collect::<Result<_>>()?;
            say(
                out,
                format_args!(
                    "test={} null_rate={} trials={} critical_0.90={:.6} critical_0.95={:.6} critical_0.99={:.6}",
                    test.id().as_str(),
                    rate,
                    values.len(),
                    rows[89].statistic,
                    rows[94].statistic,
                    rows[98].statistic
                ),
            );
            #[derive(Serialize)]
            struct Inputs {
                test: TestConfig,
                null_rate: f64,
                window_years: f64,
                trials: usize,
            }
            let meta = metadata(
                name,
                seed,
                Inputs {
                    test,
                    null_rate: rate,
                    window_years: window.length_years(),
                    trials: settings.n_trials,
                },
            )?;
            write_rows(&args, "calibration", &rows, &meta, out)
        }
        Command::Ratestats(args) => {
            let args = args.resolve_file()?;
            let levels = args.levels()?;
            #[derive(Serialize)]
            struct Row {
                label: String,
                null_rate: f64,
                power: Option<f64>,
                std_error: Option<f64>,
                n_effective: Option<usize>,
            }
            let mut rows = Vec::new();
            let label = |level: Option<f64>| match level {
                Some(l) => format!("q{l}"),
                None => "mean".to_string(),
            };
            let meta;
            if args.study {
                let mut a = args.clone();
                if a.test.is_none() {
                    a.test = Some("chi2-inter-n-event".into());
                }
                let config = a.power_config()?;
                let (stats, studies) = quantile_rate_study(&config, &levels)?;
                say(
                    out,
                    format_args!(
                        "mean_rate={:.4} std_rate={:.4}",
                        stats.mean_rate, stats.std_rate
                    ),
                );
                for s in studies {
                    let e = s.study.estimate;
                    say(
                        out,
                        format_args!(
                            "{} null_rate={:.4} power={:.4} std_error={:.4} n_effective={}",
                            label(s.level),
                            s.rate,
                            e.power,
                            e.std_error,
                            e.n_effective
                        ),
                    );
                    rows.push(Row {
                        label: label(s.level),
                        null_rate: s.rate,
                        power: Some(e.power),
                        std_error: Some(e.std_error),
                        n_effective: Some(e.n_effective),
                    });
                }
                meta = metadata(
                    name,
                    config.master_seed,
                    serde_json::json!({ "base": &config, "levels": &levels }),
                )?;
            } else {
                let process = args.process()?;
                let n = args.trials.unwrap_or(10_000);
                let stats = with_workers(args.workers, || {
                    rate_statistics(&process, n, &levels, args.seed())
                })??;
                say(
                    out,
                    format_args!(
                        "mean_rate={:.4} std_rate={:.4} {}",
                        stats.mean_rate,
                        stats.std_rate,
                        stats
                            .quantiles
                            .iter()
                            .map(|(l, r)| format!("q{l}={r:.4}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    ),
                );
                rows.push(Row {
                    label: "mean".into(),
                    null_rate: stats.mean_rate,
                    power: None,
                    std_error: None,
                    n_effective: None,
                });
                for &(l, r) in &stats.quantiles {
                    rows.push(Row {
                        label: label(Some(l)),
                        null_rate: r,
                        power: None,
                        std_error: None,
                        n_effective: None,
                    });
                }
                meta = metadata(
                    name,
                    args.seed(),
                    serde_json::json!({ "process": process, "samples": n, "levels": &levels }),
                )?;
            }
            write_rows(&args, "rates", &rows, &meta, out)
        }
    }
}

/// One-line JSON error report.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

/// Parses `argv` and runs the command. Returns the process exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    let line =
                        serde_json::json!({ "error": "usage", "message": e.kind().to_string() });
                    let _ = writeln!(err, "{line}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", error_line(&e));
            1
        }
    }
}
