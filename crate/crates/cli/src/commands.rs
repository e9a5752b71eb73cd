use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use missmass::estimators::{estimate as run_estimator, gt_bias_bound, EstimatorKind};
use missmass::risk_lab::{
    dirichlet_asymptotic, dirichlet_prior_variance, dirichlet_prior_variance_mc, mc_risk, mc_tail,
    worst_case_risk, DistributionPlan, RiskReport, TailReport,
};
use missmass::tail_bounds::{curve, figure_one, BoundFamily, VarianceSource};
use missmass::ustar::{u_star, u_star_floored};
use missmass::{GFunction, SampleProfile};
use serde_json::{json, Map, Value};

use crate::formats::{
    fmt_num, parse_distribution, parse_eps_grid, parse_list, profile_from_counts, profile_from_phi,
    profile_from_tokens, read_file,
};
use crate::{BoundsArgs, CliError, EstimateArgs, Fig1Args, InputFormat, OutFormat, SimulateArgs, Task, UstarArgs};

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(io_err(path)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn parse_g(spec: &str) -> Result<GFunction> {
    Ok(spec.parse::<GFunction>()?)
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let text = read_file(&args.input)?;
    let profile: SampleProfile = match args.format {
        InputFormat::Tokens => {
            if args.n.is_some() {
                return Err(CliError::Parse("--n applies to phi files only".into()));
            }
            profile_from_tokens(&text)
        }
        InputFormat::Counts => {
            if args.n.is_some() {
                return Err(CliError::Parse("--n applies to phi files only".into()));
            }
            profile_from_counts(&text)?
        }
        InputFormat::Phi => profile_from_phi(&text, args.n)?,
    };
    let n = profile.n();
    let kind = EstimatorKind::for_order(args.alpha)?;
    let alpha = kind.order().expect("Good-Turing variant");
    let finish = |v: f64| if args.clamp { v.clamp(0.0, 1.0) } else { v };
    let value = finish(run_estimator(kind, &profile)?);
    let goodturing = finish(run_estimator(EstimatorKind::GoodTuring, &profile)?);

    let mut report = Map::new();
    report.insert("n".into(), json!(n));
    report.insert("distinct".into(), json!(profile.distinct()));
    let phi: Map<String, Value> = profile.phi_map().iter().map(|(l, v)| (l.to_string(), json!(v))).collect();
    report.insert("phi".into(), Value::Object(phi));
    report.insert("estimator".into(), json!(kind.to_string()));
    report.insert("value".into(), json!(value));
    report.insert("goodturing".into(), json!(goodturing));
    if alpha != 1 {
        report.insert("generalized".into(), json!({ "alpha": alpha, "value": value }));
    }
    report.insert("clamped".into(), json!(args.clamp));
    match gt_bias_bound(n, alpha) {
        Ok(b) => report.insert("bias_bound".into(), json!(b)),
        Err(e) => report.insert("bias_bound".into(), json!({ "unavailable": e.to_string() })),
    };
    if let Some(spec) = &args.eps {
        let grid = parse_eps_grid(spec)?;
        let g = GFunction::power(alpha as f64)?;
        report.insert("deviation".into(), Value::Array(deviation_bounds(n, &g, &grid)));
    }
    emit(&json_text(&Value::Object(report))?, None)
}

fn deviation_bounds(n: u64, g: &GFunction, grid: &[f64]) -> Vec<Value> {
    let right = [
        BoundFamily::SubGaussian,
        BoundFamily::StronglySubGamma,
        BoundFamily::PolyFiltered(2),
        BoundFamily::CorollaryRight,
    ];
    let left = [BoundFamily::LeftTail(VarianceSource::Exact), BoundFamily::CorollaryLeft];
    let tabulate = |families: &[BoundFamily]| -> (Vec<Map<String, Value>>, Map<String, Value>) {
        let mut per_eps = vec![Map::new(); grid.len()];
        let mut skipped = Map::new();
        for &family in families {
            match curve(family, n, g, grid) {
                Ok(c) => {
                    for (slot, p) in per_eps.iter_mut().zip(&c.points) {
                        slot.insert(family.to_string(), json!(p.bound));
                    }
                }
                Err(e) => {
                    skipped.insert(family.to_string(), json!(e.to_string()));
                }
            }
        }
        (per_eps, skipped)
    };
    let (r, r_skipped) = tabulate(&right);
    let (l, l_skipped) = tabulate(&left);
    let mut out: Vec<Value> = grid
        .iter()
        .zip(r.into_iter().zip(l))
        .map(|(eps, (r, l))| json!({ "eps": eps, "right": r, "left": l }))
        .collect();
    let mut skipped = r_skipped;
    skipped.extend(l_skipped);
    if !skipped.is_empty() {
        out.push(json!({ "unavailable": skipped }));
    }
    out
}

pub fn bounds(args: &BoundsArgs) -> Result<()> {
    let family: BoundFamily = args.family.parse()?;
    let g = parse_g(&args.g)?;
    let grid = parse_eps_grid(&args.eps_grid)?;
    let c = curve(family, args.n, &g, &grid)?;
    let text = match args.out {
        OutFormat::Json => json_text(&c)?,
        OutFormat::Csv => csv_text(
            &["eps", "bound", "exponent"],
            c.points.iter().map(|p| vec![fmt_num(p.eps), fmt_num(p.bound), fmt_num(p.exponent)]),
        )?,
    };
    emit(&text, args.output.as_deref())
}

pub fn ustar(args: &UstarArgs) -> Result<()> {
    let g = parse_g(&args.g)?;
    let res = if args.floored {
        u_star_floored(args.n, &g, args.r, args.tol)?
    } else {
        u_star(args.n, &g, args.r, args.tol)?
    };
    emit(&json_text(&res)?, args.output.as_deref())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Parse("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Parse(e.to_string()))?;
    }
    let n_list: Vec<u64> = parse_list(&args.n_list, "sample size")?;
    if n_list.is_empty() {
        return Err(CliError::Parse("--n-list is empty".into()));
    }
    let text = match args.task {
        Task::Risk => simulate_risk(args, &n_list)?,
        Task::Tail => simulate_tail(args, &n_list)?,
        Task::Dirichlet => simulate_dirichlet(args, &n_list)?,
    };
    emit(&text, args.output.as_deref())
}

fn simulate_risk(args: &SimulateArgs, n_list: &[u64]) -> Result<String> {
    let g = parse_g(&args.g)?;
    let kind = match &args.estimator {
        Some(s) => s.parse::<EstimatorKind>()?,
        None => match g.integer_power() {
            Some(a) => EstimatorKind::for_order(a as f64)?,
            None => {
                return Err(missmass::Error::Unsupported(format!(
                    "no Good-Turing type estimator for g = {g}; pass --estimator plugin"
                ))
                .into())
            }
        },
    };
    let plans: Vec<DistributionPlan> = args.dist.iter().map(|d| parse_distribution(d)).collect::<Result<_>>()?;
    let trials = args.trials.unwrap_or(1000);
    let report: RiskReport = if plans.len() == 1 {
        mc_risk(&plans[0], kind, &g, n_list, trials, args.seed)?
    } else {
        worst_case_risk(&plans, kind, &g, n_list, trials, args.seed)?
    };
    match args.out {
        OutFormat::Json => json_text(&report),
        OutFormat::Csv => csv_text(
            &["n", "trials", "distribution", "mse", "se", "bias", "bias_se"],
            report.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    r.trials.to_string(),
                    r.distribution.clone(),
                    fmt_num(r.mse),
                    fmt_num(r.se),
                    fmt_num(r.bias),
                    fmt_num(r.bias_se),
                ]
            }),
        ),
    }
}

fn simulate_tail(args: &SimulateArgs, n_list: &[u64]) -> Result<String> {
    let g = parse_g(&args.g)?;
    if args.dist.len() != 1 {
        return Err(CliError::Parse("tail task takes exactly one --dist".into()));
    }
    let plan = parse_distribution(&args.dist[0])?;
    let grid = parse_eps_grid(&args.eps_grid)?;
    let trials = args.trials.unwrap_or(10_000);
    let reports: Vec<TailReport> = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let dist = plan.at(n)?;
            Ok(mc_tail(&dist, &g, n, trials, &grid, args.seed.wrapping_add(i as u64))?)
        })
        .collect::<Result<_>>()?;
    if args.out == OutFormat::Json {
        return json_text(&reports);
    }
    let mut rows = Vec::new();
    for rep in &reports {
        for row in &rep.rows {
            let sides = [
                ("right", row.right_freq, row.right_se, &row.right_bounds),
                ("left", row.left_freq, row.left_se, &row.left_bounds),
            ];
            for (side, freq, se, bounds) in sides {
                let base = |name: &str, value: String| {
                    vec![
                        rep.n.to_string(),
                        fmt_num(row.eps),
                        side.to_string(),
                        fmt_num(freq),
                        fmt_num(se),
                        name.to_string(),
                        value,
                    ]
                };
                if bounds.is_empty() {
                    rows.push(base("", String::new()));
                }
                for (name, value) in bounds {
                    rows.push(base(name, fmt_num(*value)));
                }
            }
        }
    }
    csv_text(&["n", "eps", "side", "freq", "se", "bound", "value"], rows)
}

fn simulate_dirichlet(args: &SimulateArgs, n_list: &[u64]) -> Result<String> {
    let trials = args.trials.unwrap_or(10_000);
    let mut records = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let value = dirichlet_prior_variance(n, args.c, args.alpha)?;
        let asymptotic = dirichlet_asymptotic(n, args.c, args.alpha);
        let mc = if args.mc {
            Some(dirichlet_prior_variance_mc(n, args.c, args.alpha, trials, args.seed.wrapping_add(i as u64))?)
        } else {
            None
        };
        records.push((n, value, asymptotic, mc));
    }
    match args.out {
        OutFormat::Json => {
            let rows: Vec<Value> = records
                .iter()
                .map(|(n, v, a, mc)| {
                    let mut m = json!({ "n": n, "alpha": args.alpha, "c": args.c, "value": v, "asymptotic": a });
                    if let Some((mean, se)) = mc {
                        m["mc"] = json!(mean);
                        m["mc_se"] = json!(se);
                    }
                    m
                })
                .collect();
            json_text(&rows)
        }
        OutFormat::Csv => {
            let mut header = vec!["n", "value", "asymptotic"];
            if args.mc {
                header.extend(["mc", "mc_se"]);
            }
            csv_text(
                &header,
                records.iter().map(|(n, v, a, mc)| {
                    let mut row = vec![n.to_string(), fmt_num(*v), fmt_num(*a)];
                    if let Some((mean, se)) = mc {
                        row.extend([fmt_num(*mean), fmt_num(*se)]);
                    }
                    row
                }),
            )
        }
    }
}

pub fn fig1(args: &Fig1Args) -> Result<()> {
    let dir: PathBuf = match &args.outdir {
        Some(d) => d.clone(),
        None => std::env::var_os("MISSMASS_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| ".".into()),
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = String::new();
    for n in [20u64, 100, 1000] {
        let rows = figure_one(n)?;
        let text = csv_text(
            &["eps", "subgauss", "r2", "r5"],
            rows.iter().map(|r| vec![fmt_num(r.eps), fmt_num(r.subgauss), fmt_num(r.r2), fmt_num(r.r5)]),
        )?;
        let path = dir.join(format!("fig1_n{n}.csv"));
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push_str(&format!("{}\n", path.display()));
    }
    emit(&written, None)
}
