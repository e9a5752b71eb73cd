//! Input parsing and numeric output formatting.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use missmass::distributions::Family;
use missmass::empirical::SampleProfile;
use missmass::risk_lab::DistributionPlan;

use crate::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Maps external tokens to dense symbol indices in order of first appearance.
#[derive(Debug, Default)]
pub struct Interner {
    index: HashMap<String, usize>,
}

impl Interner {
    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.index.len();
        self.index.insert(token.to_string(), i);
        i
    }
}

/// Whitespace-separated tokens (typically one per line).
pub fn profile_from_tokens(text: &str) -> SampleProfile {
    let mut interner = Interner::default();
    let symbols: Vec<usize> = text.split_whitespace().map(|t| interner.intern(t)).collect();
    SampleProfile::from_symbols(&symbols)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn parse_u64(field: &str, what: &str, line: usize) -> Result<u64, CliError> {
    field
        .parse()
        .map_err(|_| CliError::Parse(format!("line {line}: {what} `{field}` is not a nonnegative integer")))
}

/// `token,count` rows; a non-numeric first row is taken as a header.
pub fn profile_from_counts(text: &str) -> Result<SampleProfile, CliError> {
    let mut interner = Interner::default();
    let mut counts = BTreeMap::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::Parse(format!("line {}: expected `token,count`", i + 1)));
        }
        if i == 0 && rec[1].parse::<u64>().is_err() {
            continue;
        }
        let c = parse_u64(&rec[1], "count", i + 1)?;
        let x = interner.intern(&rec[0]);
        *counts.entry(x).or_insert(0u64) += c;
    }
    Ok(SampleProfile::from_count_map(counts))
}

/// `l,phi_l` rows plus either an `n,<value>` row or an explicit `n`.
pub fn profile_from_phi(text: &str, n_flag: Option<u64>) -> Result<SampleProfile, CliError> {
    let mut phi = BTreeMap::new();
    let mut n_row = None;
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::Parse(format!("line {}: expected `l,phi`", i + 1)));
        }
        if rec[0].eq_ignore_ascii_case("n") {
            n_row = Some(parse_u64(&rec[1], "n", i + 1)?);
            continue;
        }
        if i == 0 && rec[0].parse::<u64>().is_err() {
            continue;
        }
        let l = parse_u64(&rec[0], "l", i + 1)?;
        let v = parse_u64(&rec[1], "phi", i + 1)?;
        *phi.entry(l).or_insert(0u64) += v;
    }
    let n = match (n_flag, n_row) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Parse(format!("--n {a} disagrees with n = {b} in the file")))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => phi.iter().map(|(l, v)| l * v).sum(),
    };
    Ok(SampleProfile::from_phi(n, phi)?)
}

/// `a:b:step` (inclusive), a comma list, or `@file` with one value per line
/// (first CSV column; a non-numeric first row is a header).
pub fn parse_eps_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    let values = if let Some(path) = spec.strip_prefix('@') {
        let text = read_file(Path::new(path))?;
        let mut out = Vec::new();
        for (i, rec) in csv_reader(&text).records().enumerate() {
            let rec = rec?;
            let field = rec.get(0).unwrap_or("");
            if field.is_empty() {
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => return Err(CliError::Parse(format!("{path}:{}: bad eps `{field}`", i + 1))),
            }
        }
        out
    } else if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Parse(format!("eps range must be a:b:step, got `{spec}`")));
        }
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| CliError::Parse(format!("bad eps range `{spec}`")))?;
        let (a, b, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || b < a {
            return Err(CliError::Parse(format!("eps range needs step > 0 and b >= a, got `{spec}`")));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| fmt_num(a + i as f64 * step).parse().expect("formatted number parses"))
            .collect()
    } else {
        parse_list(spec, "eps")?
    };
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(CliError::Parse(format!("eps values must be >= 0, got {bad}")));
    }
    Ok(values)
}

pub fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>, CliError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| CliError::Parse(format!("bad {what} `{s}`"))))
        .collect()
}

/// `uniform:K`, `uniform:n`, `zipf:K:s`, `geometric:K:q`, `csv:path`, `json:path`.
pub fn parse_distribution(spec: &str) -> Result<DistributionPlan, CliError> {
    let bad = || CliError::Parse(format!("bad distribution `{spec}`"));
    let (head, rest) = spec.split_once(':').ok_or_else(bad)?;
    let plan = match head {
        "uniform" if rest == "n" => DistributionPlan::ScaledUniform { factor: 1.0 },
        "uniform" => DistributionPlan::Fixed(Family::Uniform { k: rest.parse().map_err(|_| bad())? }),
        "zipf" | "geometric" => {
            let (k, x) = rest.split_once(':').ok_or_else(bad)?;
            let k: usize = k.parse().map_err(|_| bad())?;
            let x: f64 = x.parse().map_err(|_| bad())?;
            DistributionPlan::Fixed(if head == "zipf" {
                Family::Zipf { k, s: x }
            } else {
                Family::Geometric { k, q: x }
            })
        }
        "csv" | "json" => {
            let text = read_file(Path::new(rest))?;
            let d = if head == "csv" {
                missmass::DiscreteDistribution::from_csv_str(&text)?
            } else {
                missmass::DiscreteDistribution::from_json_str(&text)?
            };
            DistributionPlan::Fixed(Family::Explicit(d.probs().to_vec()))
        }
        _ => return Err(bad()),
    };
    Ok(plan)
}

/// Shortest `%g`-style rendering with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
