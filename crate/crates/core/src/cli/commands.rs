use std::collections::BTreeMap;
use std::path::Path;

use super::problem::ProblemFile;
use super::report::*;
use super::{to_csv, to_json, Cli, CliError, Command, Format, ListArgs, What};
use crate::channel::{CapacityOptions, ChannelAnalysis, CORRECTION_NOTE};
use crate::jscc::{lossless_rho_with, JsccAnalysis, JsccOptions, Units};
use crate::prob::{entropy, q_inverse, Distribution, EmpiricalType};
use crate::separation::{preset_eps_grid, separation_curve, PRESET_LAMBDAS};
use crate::sim::{
    calibrate_gamma, dball_sweep, excess_event_probability, first_order_jscc_samples,
    first_order_mi_samples, mi_continuity_sweep, uep_simulate, xi_n_violation_rate, SimConfig,
    SimResult, UepConfig,
};
use crate::source::{d_max, lossless_source_dispersion, rdf, source_dispersion, RdfOptions};

const DEFAULT_N_LIST: [u64; 3] = [100, 1000, 10_000];
const DEFAULT_EPS: f64 = 0.1;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_TRIALS: u64 = 10_000;

pub(super) fn dispatch(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Channel { file, list, eps } => cmd_channel(cli, file, list, *eps),
        Command::Source { file, list, d, eps } => cmd_source(cli, file, list, *d, *eps),
        Command::Jscc {
            file,
            list,
            lossless,
        } => cmd_jscc(cli, file, list, *lossless),
        Command::Separation {
            eps_grid,
            lambda_list,
            preset,
            grid_tol,
        } => cmd_separation(cli, eps_grid.as_deref(), lambda_list.as_deref(), *preset, *grid_tol),
        Command::Simulate {
            file,
            what,
            trials,
            workers,
            list,
        } => cmd_simulate(cli, file, *what, *trials, *workers, list),
    }
}

fn units(cli: &Cli, file: &ProblemFile) -> Units {
    cli.units.map(Units::from).or(file.units).unwrap_or_default()
}

fn n_list(list: &ListArgs, file: &ProblemFile) -> Result<Vec<u64>, CliError> {
    let ns = list
        .n_list
        .clone()
        .or_else(|| file.sim.as_ref().and_then(|s| s.n_list.clone()))
        .unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::parse("--n-list must hold positive block lengths"));
    }
    Ok(ns)
}

fn eps_or_default(flag: Option<f64>, file: &ProblemFile) -> Result<f64, CliError> {
    let eps = flag.or(file.eps).unwrap_or(DEFAULT_EPS);
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::parse(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(eps)
}

fn render<T: serde::Serialize, R: serde::Serialize>(cli: &Cli, default: Format, report: &T, rows: &[R]) -> Result<String, CliError> {
    match cli.out.unwrap_or(default) {
        Format::Json => to_json(report),
        Format::Csv => to_csv(rows),
    }
}

fn cmd_channel(cli: &Cli, path: &Path, list: &ListArgs, eps: Option<f64>) -> Result<String, CliError> {
    let file = ProblemFile::load(path)?;
    let w = file.channel()?;
    let eps = eps_or_default(eps, &file)?;
    let ns = n_list(list, &file)?;
    let u = units(cli, &file);
    let a = ChannelAnalysis::new(w, CapacityOptions::with_tol(cli.tol))?;
    let rates = ns
        .iter()
        .map(|&n| {
            let r = a.rate_at(n, eps)?;
            Ok(RateRow {
                n,
                rate: u.rate(r.rate),
                rate_v_min: u.rate(r.rate_v_min),
                rate_v_max: u.rate(r.rate_v_max),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = ChannelReport {
        units: u,
        capacity: u.rate(a.capacity.capacity),
        capacity_lower_bound: u.rate(a.capacity.lower_bound),
        capacity_upper_bound: u.rate(a.capacity.upper_bound),
        input_distribution: a.capacity.input_distribution.probs().to_vec(),
        capacity_set_is_singleton: a.dispersion.capacity_set_is_singleton,
        v_min: u.variance(a.dispersion.v_min),
        v_max: u.variance(a.dispersion.v_max),
        v_min_positive: a.dispersion.v_min_positive,
        eps,
        rates: rates.clone(),
        correction_note: CORRECTION_NOTE.to_string(),
    };
    render(cli, Format::Json, &report, &rates)
}

fn cmd_source(cli: &Cli, path: &Path, list: &ListArgs, d: Option<f64>, eps: Option<f64>) -> Result<String, CliError> {
    let file = ProblemFile::load(path)?;
    let src = file.source()?;
    let d = d
        .or(file.d)
        .ok_or_else(|| CliError::parse("distortion level missing: pass --d or set `d`"))?;
    if !(d >= 0.0) {
        return Err(CliError::parse(format!("distortion must be nonnegative, got {d}")));
    }
    let eps = eps_or_default(eps, &file)?;
    let ns = n_list(list, &file)?;
    let u = units(cli, &file);
    let opts = RdfOptions::default();
    let r = rdf(src, d, &opts)?.rate;
    let v = source_dispersion(src, d, &opts)?;
    let z = q_inverse(eps)?;
    let rates: Vec<SourceRateRow> = ns
        .iter()
        .map(|&n| SourceRateRow {
            n,
            rate: u.rate(r + (v / n as f64).sqrt() * z),
        })
        .collect();
    let report = SourceReport {
        units: u,
        d,
        d_max: d_max(src),
        rate_distortion: u.rate(r),
        dispersion: u.variance(v),
        entropy: u.rate(entropy(src.distribution())),
        lossless_dispersion: u.variance(lossless_source_dispersion(src.distribution())),
        eps,
        rates: rates.clone(),
        correction_note: CORRECTION_NOTE.to_string(),
    };
    render(cli, Format::Json, &report, &rates)
}

fn cmd_jscc(cli: &Cli, path: &Path, list: &ListArgs, lossless: bool) -> Result<String, CliError> {
    let file = ProblemFile::load(path)?;
    let ns = n_list(list, &file)?;
    let u = units(cli, &file);
    let opts = JsccOptions::with_tol(cli.tol);
    if lossless {
        let p = file.source()?.distribution();
        let eps = file.eps()?;
        let a = ChannelAnalysis::new(file.channel()?, opts.capacity)?;
        let rows = ns
            .iter()
            .map(|&n| Ok(lossless_in_units(&lossless_rho_with(p, &a, n, eps, cli.tol)?, u)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let report = LosslessReport {
            units: u,
            rows: rows.clone(),
        };
        return render(cli, Format::Json, &report, &rows);
    }
    let problem = file.problem()?;
    let a = JsccAnalysis::new(&problem, &opts)?;
    let rep = a.report()?;
    let thresholds = ns
        .iter()
        .map(|&n| Ok(threshold_in_units(&a.threshold(&rep, n)?, u)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = JsccReport {
        dispersion: rep.in_units(u),
        thresholds: thresholds.clone(),
    };
    render(cli, Format::Json, &report, &thresholds)
}

fn cmd_separation(
    cli: &Cli,
    eps_grid: Option<&[f64]>,
    lambda_list: Option<&[f64]>,
    preset: bool,
    grid_tol: f64,
) -> Result<String, CliError> {
    if preset && (eps_grid.is_some() || lambda_list.is_some()) {
        return Err(CliError::parse("--paper-fig3 fixes both grids"));
    }
    let eps = eps_grid.map(<[f64]>::to_vec).unwrap_or_else(preset_eps_grid);
    let lambdas = lambda_list.map(<[f64]>::to_vec).unwrap_or_else(|| PRESET_LAMBDAS.to_vec());
    if eps.is_empty() || lambdas.is_empty() {
        return Err(CliError::parse("empty grid"));
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(CliError::parse(format!("--eps-grid: {bad} is outside (0, 1)")));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(CliError::parse(format!("--lambda-list: {bad} is not positive")));
    }
    if !(grid_tol > 0.0) {
        return Err(CliError::parse("--grid-tol must be positive"));
    }
    let rows = separation_curve(&eps, &lambdas, grid_tol)?;
    render(cli, Format::Csv, &SeparationReport { rows: rows.clone() }, &rows)
}

fn entry(n: u64, label: &str, r: &SimResult, extra: &[(&str, f64)]) -> SimEntry {
    let mut values: BTreeMap<String, f64> = r.diagnostics.clone();
    values.extend(extra.iter().map(|(k, v)| (k.to_string(), *v)));
    SimEntry {
        n,
        label: label.to_string(),
        estimate: Some(r.estimate),
        std_error: Some(r.std_error),
        trials: r.trials,
        values,
    }
}

fn values_entry(n: u64, label: &str, trials: u64, values: &[(&str, f64)]) -> SimEntry {
    SimEntry {
        n,
        label: label.to_string(),
        estimate: None,
        std_error: None,
        trials,
        values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn cmd_simulate(
    cli: &Cli,
    path: &Path,
    what: What,
    trials: Option<u64>,
    workers: Option<usize>,
    list: &ListArgs,
) -> Result<String, CliError> {
    let file = ProblemFile::load(path)?;
    let sim = file.sim();
    let seed = cli.seed.or(sim.seed).unwrap_or(DEFAULT_SEED);
    let trials = trials.or(sim.trials).unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::parse("--trials must be positive"));
    }
    if workers == Some(0) {
        return Err(CliError::parse("--workers must be positive"));
    }
    let ns = n_list(list, &file)?;
    let opts = JsccOptions::with_tol(cli.tol);
    let config = |n: u64, rho: f64| -> Result<SimConfig, CliError> {
        let cfg = SimConfig::new(seed, trials, n, rho).map_err(|e| CliError::parse(e.to_string()))?;
        Ok(match workers {
            Some(k) => cfg.with_workers(k),
            None => cfg,
        })
    };
    let pool = |f: &(dyn Fn() -> Result<Vec<SimEntry>, CliError> + Sync)| -> Result<Vec<SimEntry>, CliError> {
        match workers {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::parse(e.to_string()))?
                .install(f),
            None => f(),
        }
    };
    let capacity_input = |w| -> Result<Distribution, CliError> {
        Ok(crate::channel::capacity(w, opts.capacity)?.input_distribution)
    };

    let entries: Vec<SimEntry> = match what {
        What::Excess => {
            let problem = file.problem()?;
            let a = JsccAnalysis::new(&problem, &opts)?;
            let rep = a.report()?;
            let phi = a.channel.capacity.input_distribution.clone();
            ns.iter()
                .map(|&n| {
                    let cfg = config(n, problem.rho)?;
                    let row = a.threshold(&rep, n)?;
                    let d = sim.d.unwrap_or(row.d_n_low);
                    let phi_m = EmpiricalType::nearest(&phi, cfg.m())?;
                    let r = excess_event_probability(&problem.source, &problem.channel, &phi_m, d, &cfg, &opts.rdf)?;
                    Ok(entry(n, "excess", &r, &[("eps", problem.eps), ("d_n_high", row.d_n_high), ("d_n_low", row.d_n_low)]))
                })
                .collect::<Result<_, CliError>>()?
        }
        What::CltMi => {
            let w = file.channel()?;
            let phi = capacity_input(w)?;
            pool(&|| {
                ns.iter()
                    .map(|&n| {
                        let t = EmpiricalType::nearest(&phi, n)?;
                        let s = first_order_mi_samples(&t, w, trials, seed)?;
                        Ok(values_entry(n, "clt-mi", trials, &[
                            ("ks_statistic", s.ks_statistic),
                            ("mean", s.mean),
                            ("standardizing_variance", s.standardizing_variance),
                            ("variance", s.variance),
                        ]))
                    })
                    .collect()
            })?
        }
        What::CltJscc => {
            let problem = file.problem()?;
            let a = JsccAnalysis::new(&problem, &opts)?;
            let d = sim.d.unwrap_or(a.d_star);
            let phi = a.channel.capacity.input_distribution.clone();
            ns.iter()
                .map(|&n| {
                    let cfg = config(n, problem.rho)?;
                    let t = EmpiricalType::nearest(&phi, cfg.m())?;
                    let (s, lemma) = first_order_jscc_samples(&problem.source, d, &problem.channel, &t, &cfg, &opts.rdf)?;
                    Ok(values_entry(n, "clt-jscc", trials, &[
                        ("d", d),
                        ("ks_statistic", s.ks_statistic),
                        ("predicted_variance", lemma),
                        ("mean", s.mean),
                        ("standardizing_variance", s.standardizing_variance),
                        ("variance", s.variance),
                    ]))
                })
                .collect::<Result<_, CliError>>()?
        }
        What::Xi => {
            let w = file.channel()?;
            let phi = capacity_input(w)?;
            pool(&|| {
                ns.iter()
                    .map(|&n| {
                        let t = EmpiricalType::nearest(&phi, n)?;
                        Ok(entry(n, "xi", &xi_n_violation_rate(&t, w, trials, seed)?, &[]))
                    })
                    .collect()
            })?
        }
        What::Uep => {
            let w = file.channel()?;
            let block = sim
                .uep
                .clone()
                .ok_or_else(|| CliError::parse("problem file: missing field `sim.uep`"))?;
            let types = block
                .types
                .iter()
                .map(|c| EmpiricalType::new(c.clone()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::parse(format!("field `sim.uep.types`: {e}")))?;
            if types.is_empty() || types.len() != block.eps.len() {
                return Err(CliError::parse("field `sim.uep`: need one eps per class"));
            }
            let gamma = match block.gamma {
                Some(g) => g,
                None => calibrate_gamma(w, &types, &block.eps, block.target_e2)?,
            };
            let mut cfg = UepConfig::from_targets(w, &types, &block.eps, gamma)?;
            cfg.mode = block.mode;
            let m = types[0].n();
            let r = uep_simulate(&cfg, w, &config(m, 1.0)?)?;
            r.classes
                .iter()
                .map(|c| {
                    Ok(entry(m, &format!("class-{}", c.class), &c.overall, &[
                        ("codewords", c.codewords),
                        ("e1", c.e1.estimate),
                        ("e1_std_error", c.e1.std_error),
                        ("e2", c.e2.estimate),
                        ("e2_std_error", c.e2.std_error),
                        ("eta_n", r.eta_n),
                        ("gamma", r.gamma),
                        ("rate", c.rate),
                        ("target_eps", block.eps[c.class]),
                    ]))
                })
                .collect::<Result<_, CliError>>()?
        }
        What::Dball => {
            let src = file.source()?;
            let block = sim.dball.clone().unwrap_or_default();
            let rows = pool(&|| {
                Ok(dball_sweep(&src.distortion_rows(), block.n_max, &block.d_grid, &opts.rdf)?
                    .into_iter()
                    .map(|r| {
                        values_entry(r.n, "dball", r.checks, &[
                            ("checks", r.checks as f64),
                            ("max_log_slack", r.max_log_slack),
                            ("violations", r.violations as f64),
                        ])
                    })
                    .collect())
            })?;
            rows
        }
        What::MiCont => {
            let w = file.channel()?;
            let s = mi_continuity_sweep(w, trials, seed)?;
            vec![values_entry(0, "mi-cont", trials, &[
                ("max_ratio", s.max_ratio),
                ("violations", s.violations as f64),
            ])]
        }
    };

    let report = SimulateReport {
        what: what.name().to_string(),
        seed,
        entries,
    };
    let rows: Vec<SimCsvRow> = report
        .entries
        .iter()
        .map(|e| SimCsvRow {
            what: report.what.clone(),
            n: e.n,
            label: e.label.clone(),
            estimate: e.estimate,
            std_error: e.std_error,
            trials: e.trials,
            values: e
                .values
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect();
    render(cli, Format::Json, &report, &rows)
}

