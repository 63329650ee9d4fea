use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use distreg::bounds::{kernel_bound, knn_bound, minimax_rate, ClassParams};
use distreg::experiments::{bound_vs_risk, decreasing_with_one_inversion, rate_study, BoundRow, ExperimentPlan, RateReport};
use distreg::functionals::{conditional_functional, FunctionalSpec};
use distreg::measures::DiscreteDistribution;
use distreg::ot::{max_sliced_wp, sliced_wp, w1_cdf, wp_exact, wp_quantile, SlicedConfig};
use distreg::regressor::fit;
use distreg::synth::PRESET_NAMES;
use distreg::weights::{stone_diagnostics, KernelScheme, KnnScheme, SchemeRule, WeightScheme};
use serde::Serialize;

use crate::config::{default_seed, parse_kernel, parse_model, parse_n_grid, parse_number, parse_rule, parse_schedule, KeyValues, RateConfig};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_VERDICT};
use crate::io::{csv_err, distribution_header, fmt_exact, fmt_sig, output, read_dataset, read_distribution, read_queries};
use crate::{usage, BoundsArgs, CertifyArgs, Command, DistanceArgs, Method, PredictArgs, RatesArgs, SchemeName, StoneArgs};

/// Largest m·n that `--method auto` hands to the exact solver.
pub const AUTO_EXACT_CELLS: usize = 40_000;

const DISTANCE_DIGITS: usize = 12;

pub fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Distance(a) => distance(&a),
        Command::Predict(a) => predict(&a),
        Command::Rates(a) => rates(&a),
        Command::Bounds(a) => bounds(&a),
        Command::StoneCheck(a) => stone_check(&a),
        Command::Certify(a) => certify(&a),
    }
}

fn verdict(pass: bool) -> i32 {
    if pass {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

fn write_rows(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(output(path)?);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e))
}

fn resolve_method(method: Method, a: &DiscreteDistribution, b: &DiscreteDistribution) -> Method {
    match method {
        Method::Auto if a.dim() == 1 => Method::Quantile,
        Method::Auto if a.len().saturating_mul(b.len()) <= AUTO_EXACT_CELLS => Method::Exact,
        Method::Auto => Method::Sliced,
        m => m,
    }
}

fn distance(args: &DistanceArgs) -> CliResult<i32> {
    if !(args.p >= 1.0 && args.p.is_finite()) {
        return usage(format!("order p must be ≥ 1, got {}", args.p));
    }
    if args.directions == 0 {
        return usage("--directions must be positive");
    }
    let seed = match args.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let a = read_distribution(&args.a)?;
    let b = read_distribution(&args.b)?;
    if a.dim() != b.dim() {
        return Err(CliError::input(
            &args.b,
            format!("dimension {} does not match {} in {}", b.dim(), a.dim(), args.a.display()),
        ));
    }
    let method = resolve_method(args.method, &a, &b);
    let cfg = SlicedConfig { tolerance: args.tolerance, ..SlicedConfig::new(args.p, args.directions, seed) };
    match method {
        Method::Quantile | Method::Cdf if a.dim() != 1 => {
            return usage(format!("method {method:?} needs one-dimensional responses, files have d = {}", a.dim()))
        }
        Method::Cdf if args.p != 1.0 => return usage("method cdf computes W1 only; use p = 1"),
        Method::Quantile => println!("{}", fmt_sig(wp_quantile(&a, &b, args.p)?, DISTANCE_DIGITS)),
        Method::Cdf => println!("{}", fmt_sig(w1_cdf(&a, &b)?, DISTANCE_DIGITS)),
        Method::Exact => println!("{}", fmt_sig(wp_exact(&a, &b, args.p)?.0, DISTANCE_DIGITS)),
        Method::Sliced => {
            let est = sliced_wp(&a, &b, &cfg)?;
            println!("{}", fmt_sig(est.distance, DISTANCE_DIGITS));
            println!("stderr {}", fmt_sig(est.stderr, DISTANCE_DIGITS));
        }
        Method::MaxSliced => {
            let est = max_sliced_wp(&a, &b, &cfg)?;
            println!("{}", fmt_sig(est.distance, DISTANCE_DIGITS));
            let dir: Vec<String> = est.direction.iter().map(|v| fmt_sig(*v, DISTANCE_DIGITS)).collect();
            println!("direction {}", dir.join(","));
        }
        Method::Auto => unreachable!("auto is resolved above"),
    }
    Ok(EXIT_OK)
}

fn predict(args: &PredictArgs) -> CliResult<i32> {
    let scheme = match (args.bandwidth, args.kappa) {
        (Some(h), None) => WeightScheme::Kernel(KernelScheme { bandwidth: h, kernel: parse_kernel(&args.kernel).map_err(CliError::Usage)? }),
        (None, Some(kappa)) => WeightScheme::Knn(KnnScheme { kappa }),
        _ => return usage("give exactly one of --bandwidth and --kappa"),
    };
    let spec = args
        .functional
        .as_deref()
        .map(|s| {
            let f = FunctionalSpec::from_str(s).map_err(|e| CliError::usage(format!("--functional: {e}")))?;
            f.validate()?;
            Ok::<_, CliError>(f)
        })
        .transpose()?;
    let data = read_dataset(&args.train)?;
    let queries = read_queries(&args.queries, data.k())?;
    if let Some(f) = &spec {
        if f.response_dim() != data.d() {
            return usage(format!("functional {f} needs d = {}, training responses have d = {}", f.response_dim(), data.d()));
        }
    }
    scheme.validate_for(data.n())?;
    let model = fit(&data, scheme)?;
    let mut rows = Vec::new();
    match &spec {
        Some(f) => {
            for (id, x) in queries.rows().enumerate() {
                rows.push(vec![id.to_string(), fmt_exact(conditional_functional(&model, f, x)?)]);
            }
            write_rows(args.output.as_deref(), &["query_id", "value"], &rows)?;
        }
        None => {
            for (id, x) in queries.rows().enumerate() {
                let dist = model.predict_distribution(x)?;
                for (atom, &w) in dist.atoms().rows().zip(dist.weights()) {
                    let mut row = vec![id.to_string()];
                    row.extend(atom.iter().chain(std::iter::once(&w)).map(|v| fmt_exact(*v)));
                    rows.push(row);
                }
            }
            let mut header = vec!["query_id".to_owned()];
            header.extend(distribution_header(data.d()));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_rows(args.output.as_deref(), &header, &rows)?;
        }
    }
    Ok(EXIT_OK)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn describe_rule(rule: &SchemeRule) -> String {
    match rule {
        SchemeRule::Kernel { kernel, bandwidth } => {
            format!("kernel {kernel:?}, h(n) = {} n^{}", bandwidth.scale, bandwidth.exponent)
        }
        SchemeRule::Knn { neighbors } => {
            format!("knn, kappa(n) = ceil({} n^{})", neighbors.scale, neighbors.exponent)
        }
    }
}

fn print_plan(cfg: &RateConfig, prefix: &Path) -> CliResult<()> {
    let plan = &cfg.plan;
    let p = plan.model.params;
    println!("model        {} (H = {}, L = {}, M = {}, k = {})", plan.model.name, p.h, p.l, p.m, p.k);
    println!("scheme       {}", describe_rule(&plan.scheme));
    println!("replications {}", plan.replications);
    println!("test points  {}", plan.test_points);
    println!("seed         {}", plan.seed);
    println!("order        {}", plan.order);
    match plan.expected_exponent()? {
        Some(e) => println!("expected     slope {} ± {}", fmt_sig(e, 6), plan.slope_tolerance),
        None => println!("expected     none for this order"),
    }
    println!("outputs      {} {}", with_suffix(prefix, ".csv").display(), with_suffix(prefix, ".json").display());
    if cfg.with_bounds {
        println!("             {}", with_suffix(prefix, "-bounds.csv").display());
    }
    println!("n,parameter");
    for &n in &plan.n_grid {
        println!("{n},{}", fmt_sig(plan.scheme.parameter(n), 12));
    }
    Ok(())
}

#[derive(Serialize)]
struct RateSummary<'a> {
    plan: &'a ExperimentPlan,
    report: &'a RateReport,
    bounds_violated: Option<bool>,
}

fn rates(args: &RatesArgs) -> CliResult<i32> {
    let (mut kv, default_name) = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let stem = path.file_stem().map_or("rates".into(), |s| s.to_string_lossy().into_owned());
            (KeyValues::read(path)?, stem)
        }
        (None, Some(name)) => (KeyValues::preset(name)?, name.clone()),
        _ => return usage("give exactly one of --config and --preset"),
    };
    for o in &args.overrides {
        kv.set(o)?;
    }
    if let Some(seed) = args.seed {
        kv.set(&format!("seed={seed}"))?;
    }
    let cfg = RateConfig::from_keys(&kv, &default_name, default_seed()?)?;
    let prefix = args.output.clone().unwrap_or_else(|| PathBuf::from(&cfg.output));
    if args.dry_run {
        print_plan(&cfg, &prefix)?;
        return Ok(EXIT_OK);
    }

    let report = rate_study(&cfg.plan)?;
    let bound_rows: Option<Vec<BoundRow>> = if cfg.with_bounds { Some(bound_vs_risk(&cfg.plan)?) } else { None };

    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt_exact(r.parameter), fmt_exact(r.mean), fmt_exact(r.stderr)])
        .collect();
    let csv_path = with_suffix(&prefix, ".csv");
    write_rows(Some(&csv_path), &["n", "parameter", "mean_risk", "stderr"], &rows)?;
    let violated = bound_rows.as_ref().map(|b| b.iter().any(|r| r.violated));
    if let Some(b) = &bound_rows {
        let rows: Vec<Vec<String>> = b
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_exact(r.parameter),
                    fmt_exact(r.risk_mean),
                    fmt_exact(r.risk_stderr),
                    fmt_exact(r.proposition_bound),
                    fmt_exact(r.bound_approximation),
                    fmt_exact(r.bound_estimation),
                    fmt_exact(r.bound),
                    fmt_exact(r.bound_to_risk),
                    r.violated.to_string(),
                ]
            })
            .collect();
        let header = [
            "n",
            "parameter",
            "risk_mean",
            "risk_stderr",
            "empirical_bound",
            "bound_approximation",
            "bound_estimation",
            "bound",
            "bound_to_risk",
            "violated",
        ];
        write_rows(Some(&with_suffix(&prefix, "-bounds.csv")), &header, &rows)?;
    }
    let json_path = with_suffix(&prefix, ".json");
    let summary = RateSummary { plan: &cfg.plan, report: &report, bounds_violated: violated };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::usage(e.to_string()))?;
    std::fs::write(&json_path, json + "\n").map_err(|e| CliError::io(&json_path, e))?;

    let status = match report.passed {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "NO VERDICT",
    };
    match report.expected {
        Some(e) => println!(
            "slope {} ± {} (expected {} ± {}): {status}",
            fmt_sig(report.slope, 6),
            fmt_sig(report.slope_stderr, 3),
            fmt_sig(e, 6),
            report.tolerance
        ),
        None => println!("slope {} ± {}: {status}", fmt_sig(report.slope, 6), fmt_sig(report.slope_stderr, 3)),
    }
    if violated == Some(true) {
        println!("bound violated beyond 3 standard errors");
    }
    Ok(verdict(report.passed == Some(true) && violated != Some(true)))
}

fn class_params(args: &BoundsArgs) -> CliResult<ClassParams> {
    if let Some(name) = &args.model {
        if args.h.is_some() || args.l.is_some() || args.m.is_some() || args.k.is_some() {
            return usage("--model conflicts with explicit class parameters");
        }
        return Ok(parse_model(name).map_err(CliError::Usage)?.params);
    }
    match (args.h, args.l, args.m, args.k) {
        (Some(h), Some(l), Some(m), Some(k)) => Ok(ClassParams::new(h, l, m, k)?),
        _ => usage("give --model or all of -H, -L, -M and -k"),
    }
}

fn bounds(args: &BoundsArgs) -> CliResult<i32> {
    let params = class_params(args)?;
    let knn = args.scheme == SchemeName::Knn;
    if knn && params.k >= 2 && args.tilde_ck.is_none() {
        return usage("--tilde-ck is required for knn bounds with k ≥ 2");
    }
    let grid = parse_n_grid(&args.n_grid).map_err(|e| CliError::usage(format!("--n-grid: {e}")))?;
    let values: Option<Vec<f64>> = args
        .values
        .as_deref()
        .map(|s| s.split(',').map(parse_number).collect::<Result<_, _>>())
        .transpose()
        .map_err(|e| CliError::usage(format!("--values: {e}")))?;
    let pairs: Vec<(usize, f64)> = match &values {
        Some(v) => grid.iter().flat_map(|&n| v.iter().map(move |&x| (n, x))).collect(),
        None => {
            let sched = parse_schedule(args.schedule.as_deref().unwrap_or("optimal"), knn, &params).map_err(CliError::Usage)?;
            grid.iter().map(|&n| (n, if knn { sched.count(n) as f64 } else { sched.value(n) })).collect()
        }
    };
    let mut rows = Vec::new();
    for (n, v) in pairs {
        let (report, constant) = if knn {
            if v.fract() != 0.0 || v < 1.0 {
                return usage(format!("neighbor count {v} is not a positive integer"));
            }
            let c = if params.k == 1 { 8.0 } else { args.tilde_ck.unwrap_or_default() };
            (knn_bound(&params, n, v as usize, args.tilde_ck)?, c)
        } else {
            let c = args.c_k.unwrap_or_else(|| params.covering_constant());
            (kernel_bound(&params, n, v, args.c_k)?, c)
        };
        rows.push(vec![
            n.to_string(),
            fmt_exact(v),
            fmt_exact(constant),
            fmt_exact(report.approximation),
            fmt_exact(report.estimation),
            fmt_exact(report.total),
        ]);
    }
    let header = if knn {
        ["n", "kappa", "tilde_c_k", "approximation", "estimation", "total"]
    } else {
        ["n", "h", "c_k", "approximation", "estimation", "total"]
    };
    write_rows(args.output.as_deref(), &header, &rows)?;
    let rate = minimax_rate(&params)?;
    eprintln!("minimax exponent {}", fmt_sig(rate.exponent, 6));
    Ok(EXIT_OK)
}

/// Trend verdict for a diagnostic column: nonincreasing up to one rise within
/// the pooled standard error, ending below its start unless it ends at zero.
fn vanishes(means: &[f64], stderrs: &[f64]) -> bool {
    let (first, last) = (means[0], means[means.len() - 1]);
    decreasing_with_one_inversion(means, stderrs) && (last < first || last == 0.0)
}

fn stone_check(args: &StoneArgs) -> CliResult<i32> {
    let model = parse_model(&args.model).map_err(CliError::Usage)?;
    let scheme = match args.scheme {
        SchemeName::Kernel => "kernel",
        SchemeName::Knn => "knn",
    };
    let rule = parse_rule(scheme, &args.kernel, &args.schedule, &model).map_err(CliError::Usage)?;
    let grid = parse_n_grid(&args.n_grid).map_err(|e| CliError::usage(format!("--n-grid: {e}")))?;
    for &n in &grid {
        rule.at(n)?;
    }
    let seed = match args.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let rows = stone_diagnostics(&rule, &model, &grid, args.eps, args.replications, args.test_points, seed)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_exact(rule.parameter(r.n)),
                fmt_exact(r.max_weight),
                fmt_exact(r.max_weight_se),
                fmt_exact(r.far_mass),
                fmt_exact(r.far_mass_se),
            ]
        })
        .collect();
    write_rows(
        args.output.as_deref(),
        &["n", "parameter", "max_weight", "max_weight_se", "far_mass", "far_mass_se"],
        &table,
    )?;
    let col = |f: fn(&distreg::weights::StoneRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let max_ok = vanishes(&col(|r| r.max_weight), &col(|r| r.max_weight_se));
    let far_ok = vanishes(&col(|r| r.far_mass), &col(|r| r.far_mass_se));
    eprintln!(
        "max weight {}, far mass {}",
        if max_ok { "decreasing" } else { "NOT decreasing" },
        if far_ok { "decreasing" } else { "NOT decreasing" }
    );
    Ok(verdict(max_ok && far_ok))
}

fn certify(args: &CertifyArgs) -> CliResult<i32> {
    let names: Vec<String> =
        if args.model.is_empty() { PRESET_NAMES.iter().map(|s| s.to_string()).collect() } else { args.model.clone() };
    let mut rows = Vec::new();
    let mut all = true;
    for name in &names {
        let model = parse_model(name).map_err(CliError::Usage)?;
        let r = model.certify_class(args.resolution)?;
        all &= r.passed;
        rows.push(vec![
            r.model.clone(),
            r.resolution.to_string(),
            fmt_sig(r.declared.h, 12),
            fmt_sig(r.declared.l, 12),
            fmt_sig(r.declared.m, 12),
            r.declared.k.to_string(),
            fmt_exact(r.max_ratio),
            r.max_dispersion.map(fmt_exact).unwrap_or_default(),
            fmt_exact(r.margin),
            r.passed.to_string(),
        ]);
    }
    write_rows(
        args.output.as_deref(),
        &["model", "resolution", "H", "L", "M", "k", "max_ratio", "max_dispersion", "margin", "passed"],
        &rows,
    )?;
    Ok(verdict(all))
}
