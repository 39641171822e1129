//! Textual names for systems, potentials and grids.
//!
//! ```text
//! gauss | lueroth | glueroth | powerlaw:a=0.5,p=2 | logpower:a=0.05
//! finite:ratios=0.3,0.3[:offsets=0,0.7]      any of these + :trunc=N
//! negid | neg2log | const:c=-1 | geometric | list:values=1,2,3
//! grids: a:b:step or v1,v2,...
//! ```

use mfs_core::{Alphabet, Depth1Law, Family, PotentialSpec, SystemSpec};

fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("{what}: `{s}` is not a number"))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| parse_f64(v, what)).collect()
}

/// `key=value` pairs separated by commas, e.g. `a=0.5,p=2`.
fn key_values<'a>(segment: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>, String> {
    segment
        .split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            if !allowed.contains(&k) {
                return Err(format!("unknown parameter `{k}`"));
            }
            Ok((k, v))
        })
        .collect()
}

fn param(pairs: &[(&str, &str)], key: &str, name: &str) -> Result<f64, String> {
    let v = pairs.iter().find(|(k, _)| *k == key).ok_or_else(|| format!("{name} needs `{key}=`"))?;
    parse_f64(v.1, key)
}

pub fn parse_system(text: &str) -> Result<SystemSpec, String> {
    let mut parts = text.split(':');
    let name = parts.next().unwrap_or_default();
    let mut trunc = None;
    let mut ratios = None;
    let mut offsets = None;
    let mut params = Vec::new();
    for seg in parts {
        if let Some(v) = seg.strip_prefix("trunc=") {
            trunc = Some(v.parse::<u64>().map_err(|_| format!("trunc: `{v}` is not a count"))?);
        } else if let Some(v) = seg.strip_prefix("ratios=") {
            ratios = Some(parse_list(v, "ratios")?);
        } else if let Some(v) = seg.strip_prefix("offsets=") {
            offsets = Some(parse_list(v, "offsets")?);
        } else {
            params.extend(key_values(seg, &["a", "p"])?);
        }
    }
    let no_extras = |ok: bool| if ok { Ok(()) } else { Err(format!("unexpected parameters for `{name}`")) };
    let family = match name {
        "gauss" | "lueroth" | "glueroth" => {
            no_extras(params.is_empty() && ratios.is_none() && offsets.is_none())?;
            match name {
                "gauss" => Family::Gauss,
                "lueroth" => Family::Lueroth,
                _ => Family::GeneralizedLueroth,
            }
        }
        "powerlaw" => {
            no_extras(ratios.is_none() && offsets.is_none())?;
            Family::PowerLaw { a: param(&params, "a", name)?, p: param(&params, "p", name)? }
        }
        "logpower" => {
            no_extras(ratios.is_none() && offsets.is_none() && params.iter().all(|(k, _)| *k == "a"))?;
            Family::LogPower { a: param(&params, "a", name)? }
        }
        "finite" => {
            no_extras(params.is_empty())?;
            Family::FiniteSelfSimilar { ratios: ratios.ok_or("finite needs `ratios=`")?, offsets }
        }
        _ => return Err(format!("unknown system `{name}`")),
    };
    let sys = SystemSpec::new(family, Alphabet::Full).map_err(|e| e.to_string())?;
    match trunc {
        Some(n) => sys.truncate(n).map_err(|e| e.to_string()),
        None => Ok(sys),
    }
}

pub fn parse_potential(text: &str) -> Result<PotentialSpec, String> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let law = match (name, rest) {
        ("negid", "") => Depth1Law::NegIdentity,
        ("neg2log", "") => Depth1Law::NegTwoLog,
        ("geometric", "") => return Ok(PotentialSpec::Geometric),
        ("const", r) => {
            let c = r.strip_prefix("c=").ok_or("const needs `c=`")?;
            Depth1Law::Constant { c: parse_f64(c, "c")? }
        }
        ("list", r) => {
            let v = r.strip_prefix("values=").ok_or("list needs `values=`")?;
            Depth1Law::ExplicitList { values: parse_list(v, "values")? }
        }
        _ => return Err(format!("unknown potential `{text}`")),
    };
    Ok(PotentialSpec::Depth1(law))
}

/// `a:b:step` (both ends included) or a comma list; must be strictly increasing.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("grid `{text}` must be a:b:step"));
        };
        let (a, b, step) = (parse_f64(a, "grid")?, parse_f64(b, "grid")?, parse_f64(step, "grid")?);
        if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
            return Err(format!("grid `{text}` needs a <= b and step > 0"));
        }
        let count = ((b - a) / step).round();
        if ((count * step) - (b - a)).abs() > 1e-9 * (b - a).abs().max(1.0) {
            return Err(format!("grid `{text}`: step does not divide the range"));
        }
        if count > 1e7 {
            return Err(format!("grid `{text}` has too many points"));
        }
        (0..=count as usize).map(|i| if i == count as usize { b } else { a + i as f64 * step }).collect()
    } else {
        parse_list(text, "grid")?
    };
    check_increasing(&grid)?;
    Ok(grid)
}

pub fn check_increasing(grid: &[f64]) -> Result<(), String> {
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err("grids must be nonempty, finite and strictly increasing".into());
    }
    Ok(())
}

pub fn parse_n_list(text: &str) -> Result<Vec<u64>, String> {
    let list = text
        .split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|_| format!("n list: `{v}` is not a count")))
        .collect::<Result<Vec<_>, _>>()?;
    check_n_list(&list)?;
    Ok(list)
}

pub fn check_n_list(list: &[u64]) -> Result<(), String> {
    if list.is_empty() || list[0] == 0 || list.windows(2).any(|w| w[0] >= w[1]) {
        return Err("n list must be positive and strictly increasing".into());
    }
    Ok(())
}
