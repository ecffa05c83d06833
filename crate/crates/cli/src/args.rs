//! Scale-list syntax and the flat config file.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};

/// `2^-3`, `0.125`, `1e-2`.
fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = base.trim().parse().with_context(|| format!("bad base in {s:?}"))?;
        let e: f64 = exp.trim().parse().with_context(|| format!("bad exponent in {s:?}"))?;
        return Ok(b.powf(e));
    }
    s.parse().with_context(|| format!("bad number {s:?}"))
}

/// A comma list of values, or a geometric range `a..b` stepping by factors
/// of two, or `a..b:n` with `n` geometric points.
pub fn parse_scales(s: &str) -> Result<Vec<f64>> {
    let out = if let Some((a, rest)) = s.split_once("..") {
        let (b, count) = match rest.split_once(':') {
            Some((b, n)) => (b, Some(n.trim().parse::<usize>().context("bad point count")?)),
            None => (rest, None),
        };
        let (a, b) = (parse_value(a)?, parse_value(b)?);
        if !(a > 0.0 && b > 0.0) {
            bail!("geometric range {s:?} needs positive endpoints");
        }
        let n = match count {
            Some(n) if n >= 2 => n,
            Some(_) => bail!("range {s:?} needs at least two points"),
            None => {
                let steps = (b / a).log2().abs();
                if (steps - steps.round()).abs() > 1e-9 || steps.round() == 0.0 {
                    bail!("endpoints of {s:?} are not a power of two apart; add ':count'");
                }
                steps.round() as usize + 1
            }
        };
        let ratio = (b / a).powf(1.0 / (n - 1) as f64);
        (0..n).map(|i| if i == n - 1 { b } else { a * ratio.powi(i as i32) }).collect()
    } else {
        s.split(',').map(parse_value).collect::<Result<Vec<_>>>()?
    };
    if out.is_empty() {
        bail!("empty scale list");
    }
    Ok(out)
}

/// A comma list of integers, or an inclusive range `a..b`.
pub fn parse_ints(s: &str) -> Result<Vec<i32>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: i32 = a.trim().parse().context("bad range start")?;
        let b: i32 = b.trim().parse().context("bad range end")?;
        if b < a {
            bail!("integer range {s:?} is empty");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().with_context(|| format!("bad integer {v:?}")))
        .collect()
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() || k.contains(char::is_whitespace) {
            bail!("config line {}: bad key {k:?}", i + 1);
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key {k:?}", i + 1);
        }
    }
    Ok(out)
}

/// Command line with config entries spliced in after the subcommand for
/// every key not already given as a flag.
pub fn merge_config(
    args: &[String],
    config: &BTreeMap<String, String>,
    subcommands: &[&str],
) -> Result<Vec<String>> {
    let sub = args
        .iter()
        .skip(1)
        .position(|a| subcommands.contains(&a.as_str()))
        .map(|i| i + 1);
    let given = |key: &str| {
        let flag = format!("--{key}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (k, v) in config {
        if k == "experiment" {
            let named = sub.map(|i| args[i].as_str());
            if named.is_some_and(|n| n != v) {
                bail!("config is for experiment {v:?}, not {:?}", named.unwrap_or(""));
            }
            continue;
        }
        if !given(k) {
            extra.push(format!("--{k}={v}"));
        }
    }
    let mut out = args.to_vec();
    match sub {
        Some(i) => {
            out.splice(i + 1..i + 1, extra);
        }
        None => match config.get("experiment") {
            Some(e) => {
                out.insert(1, e.clone());
                out.splice(2..2, extra);
            }
            None => bail!("no experiment named on the command line or in the config"),
        },
    }
    Ok(out)
}
