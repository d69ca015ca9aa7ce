//! Experiment configuration: `key=value` files, `--key value` overrides and
//! the map grammar `family{param=value,...}`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::g_example::{self, AnnulusSchedule};
use crate::map_catalog::{Branch, MapSpec};
use crate::point::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    ShellBounds,
    Holder,
    Monotonicity,
    Orbit,
    Basin,
    RateCompare,
    ModulusGrowth,
    MinModulus,
    Escape,
    GExample,
    InfSpace,
}

impl Kind {
    pub const ALL: [Kind; 11] = [
        Kind::ShellBounds,
        Kind::Holder,
        Kind::Monotonicity,
        Kind::Orbit,
        Kind::Basin,
        Kind::RateCompare,
        Kind::ModulusGrowth,
        Kind::MinModulus,
        Kind::Escape,
        Kind::GExample,
        Kind::InfSpace,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::ShellBounds => "shell-bounds",
            Kind::Holder => "holder",
            Kind::Monotonicity => "monotonicity",
            Kind::Orbit => "orbit",
            Kind::Basin => "basin",
            Kind::RateCompare => "rate-compare",
            Kind::ModulusGrowth => "modulus-growth",
            Kind::MinModulus => "min-modulus",
            Kind::Escape => "escape",
            Kind::GExample => "g-example",
            Kind::InfSpace => "inf-space",
        }
    }

    /// Parameter keys accepted besides `kind`, `map`, `seed`, `out` and `tol`.
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Kind::ShellBounds => &["x0", "j_max", "t_grid"],
            Kind::Holder => &["x0", "samples", "unit_envelope"],
            Kind::Monotonicity => &["x0", "points"],
            Kind::Orbit => &["x", "x0", "k_max", "eps", "r_esc"],
            Kind::Basin => &["target", "window", "res", "k_max", "eps", "r_esc", "override"],
            Kind::RateCompare => &["points", "x0", "k_max", "target"],
            Kind::ModulusGrowth => &["S", "r_min", "decades", "per_decade"],
            Kind::MinModulus => &["S", "r", "k_max"],
            Kind::Escape => &["R", "window", "res", "k_max", "max_L"],
            Kind::GExample => &["K", "c", "m", "u0", "counts", "schedule", "k_max"],
            Kind::InfSpace => &["x0", "j_max", "moduli"],
        }
    }

    pub fn needs_map(&self) -> bool {
        !matches!(self, Kind::GExample)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind '{s}'")))
    }
}

const COMMON_KEYS: [&str; 5] = ["kind", "map", "seed", "out", "tol"];

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub map: Option<MapSpec>,
    pub map_text: Option<String>,
    pub params: BTreeMap<String, String>,
    pub out: PathBuf,
    pub seed: u64,
    /// Directory relative paths in the config are resolved against.
    pub base_dir: PathBuf,
}

/// `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{}'", n + 1, raw.trim())))?;
        let v = v.trim().trim_matches('"');
        out.insert(k.trim().to_string(), v.to_string());
    }
    Ok(out)
}

/// `--key value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --key, got '{a}'")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.insert(k.to_string(), v.to_string());
            continue;
        }
        let v = it.next().ok_or_else(|| Error::Config(format!("--{key} needs a value")))?;
        out.insert(key.to_string(), v.clone());
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Validates keys and parses the map before any computation starts.
    pub fn from_params(kind: Option<Kind>, mut params: BTreeMap<String, String>, base_dir: &Path) -> Result<Self> {
        let kind = match (kind, params.remove("kind")) {
            (Some(k), Some(s)) if s != k.as_str() => {
                return Err(Error::Config(format!("config kind '{s}' does not match subcommand '{k}'")));
            }
            (Some(k), _) => k,
            (None, Some(s)) => s.parse()?,
            (None, None) => return Err(Error::Config("no experiment kind given".into())),
        };
        if let Some(bad) = params.keys().find(|k| !COMMON_KEYS.contains(&k.as_str()) && !kind.keys().contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key '{bad}' for {kind}")));
        }
        let map_text = params.remove("map");
        let map = match &map_text {
            Some(s) => Some(parse_map(s, base_dir)?),
            None if kind.needs_map() => return Err(Error::Config(format!("{kind} needs a map"))),
            None => None,
        };
        let seed = match params.remove("seed") {
            Some(s) => s.parse().map_err(|_| Error::Config(format!("seed '{s}' is not an integer")))?,
            None => 0,
        };
        let out = PathBuf::from(params.remove("out").unwrap_or_else(|| "out".into()));
        Ok(ExperimentConfig { kind, map, map_text, params, out, seed, base_dir: base_dir.to_path_buf() })
    }

    pub fn from_file(kind: Option<Kind>, path: &Path, overrides: BTreeMap<String, String>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut params = parse_key_values(&text)?;
        params.extend(overrides);
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_params(kind, params, base)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |s| parse_f64(key, s))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key).map_or(Ok(default), |s| {
            s.parse().map_err(|_| Error::Config(format!("{key}: '{s}' is not a nonnegative integer")))
        })
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        self.get(key).map_or(Ok(default), |s| match s {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::Config(format!("{key}: '{s}' is not a boolean"))),
        })
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|s| parse_f64_list(key, s)).transpose()
    }

    pub fn point(&self, key: &str) -> Result<Option<Point>> {
        self.get(key).map(parse_point).transpose()
    }

    pub fn points(&self, key: &str) -> Result<Option<Vec<Point>>> {
        self.get(key).map(|s| s.split(';').map(parse_point).collect()).transpose()
    }

    pub fn map(&self) -> Result<&MapSpec> {
        self.map.as_ref().ok_or_else(|| Error::Config(format!("{} needs a map", self.kind)))
    }

    /// Every effective setting, for the run summary.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = self.params.clone();
        m.insert("kind".into(), self.kind.to_string());
        if let Some(s) = &self.map_text {
            m.insert("map".into(), s.clone());
        }
        m.insert("seed".into(), self.seed.to_string());
        m
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v = match s.trim() {
        "log2" | "ln2" => std::f64::consts::LN_2,
        t => t.parse().map_err(|_| Error::Config(format!("{key}: '{s}' is not a number")))?,
    };
    Ok(v)
}

pub fn parse_f64_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| parse_f64(key, t)).collect()
}

/// `x,y` or `x,y,z`; also `origin`.
pub fn parse_point(s: &str) -> Result<Point> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    if s == "origin" || s == "0" {
        return Ok(Point::origin(2));
    }
    let xs = parse_f64_list("point", s)?;
    Point::from_slice(&xs).ok_or_else(|| Error::Config(format!("point '{s}' needs 2 or 3 coordinates")))
}

/// `name{a=1,b=2}` into the name and its parameters.
fn split_family(s: &str) -> Result<(String, BTreeMap<String, String>)> {
    let s = s.trim();
    let Some(open) = s.find('{') else {
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Config(format!("malformed map '{s}'")));
        }
        return Ok((s.to_string(), BTreeMap::new()));
    };
    if !s.ends_with('}') {
        return Err(Error::Config(format!("malformed map '{s}': missing '}}'")));
    }
    let name = s[..open].trim().to_string();
    let body = &s[open + 1..s.len() - 1];
    let mut params = BTreeMap::new();
    for item in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("malformed parameter '{item}' in '{s}'")))?;
        if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("repeated parameter '{}' in '{s}'", k.trim())));
        }
    }
    Ok((name, params))
}

/// Counts given as `linear{c=40,m=8}` or `N1:P1;N2:P2;...`.
pub fn parse_counts(s: &str) -> Result<Vec<(usize, usize)>> {
    if s.trim_start().starts_with("linear") {
        let (_, p) = split_family(s)?;
        let get = |k: &str| -> Result<usize> {
            p.get(k)
                .ok_or_else(|| Error::Config(format!("linear counts need '{k}'")))?
                .parse()
                .map_err(|_| Error::Config(format!("linear counts: '{k}' is not an integer")))
        };
        return Ok(g_example::linear_counts(get("c")?, get("m")?));
    }
    s.split(';')
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("count pair '{pair}' should be N:P")))?;
            let n = a.trim().parse().map_err(|_| Error::Config(format!("bad count '{a}'")))?;
            let p = b.trim().parse().map_err(|_| Error::Config(format!("bad count '{b}'")))?;
            Ok((n, p))
        })
        .collect()
}

/// Schedule from `K`, counts (`c`, `m` or `counts`) and `u0`, or from a JSON file.
pub fn schedule_from(params: &BTreeMap<String, String>, base_dir: &Path) -> Result<AnnulusSchedule> {
    if let Some(path) = params.get("schedule") {
        let p = base_dir.join(path);
        let text = fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        return AnnulusSchedule::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())));
    }
    let num = |k: &str, d: f64| params.get(k).map_or(Ok(d), |s| parse_f64(k, s));
    let k = num("K", 1.5)?;
    let u0 = num("u0", std::f64::consts::LN_2)?;
    let counts = match params.get("counts") {
        Some(s) => parse_counts(s)?,
        None => {
            let int = |key: &str, d: usize| {
                params.get(key).map_or(Ok(d), |s| s.parse().map_err(|_| Error::Config(format!("{key}: '{s}' is not an integer"))))
            };
            g_example::linear_counts(int("c", 40)?, int("m", 8)?)
        }
    };
    g_example::build_schedule(k, &counts, u0).map_err(|e| match e {
        Error::Invalid(m) => Error::Config(m),
        other => other,
    })
}

fn check_keys(name: &str, p: &BTreeMap<String, String>, allowed: &[&str]) -> Result<()> {
    if let Some(bad) = p.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("{name} has no parameter '{bad}'")));
    }
    Ok(())
}

fn required<'a>(name: &str, p: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    p.get(key).map(String::as_str).ok_or_else(|| Error::Config(format!("{name} needs '{key}'")))
}

/// Parses the map grammar into a catalog map.
pub fn parse_map(s: &str, base_dir: &Path) -> Result<MapSpec> {
    let (name, p) = split_family(s)?;
    let num = |key: &str| -> Result<f64> { parse_f64(key, required(&name, &p, key)?) };
    let int = |key: &str| -> Result<u32> {
        let v = required(&name, &p, key)?;
        v.parse().map_err(|_| Error::Config(format!("{name}: '{key}' must be a positive integer, got '{v}'")))
    };
    let to_config = |e: Error| match e {
        Error::Invalid(m) => Error::Config(m),
        other => other,
    };
    let map = match name.as_str() {
        "winding" => {
            check_keys(&name, &p, &["K"])?;
            MapSpec::winding(int("K")?)
        }
        "power" => {
            check_keys(&name, &p, &["d"])?;
            MapSpec::power(int("d")?)
        }
        "radial_stretch" => {
            check_keys(&name, &p, &["alpha", "n"])?;
            let n = p.get("n").map_or(Ok(2), |v| v.parse().map_err(|_| Error::Config(format!("radial_stretch: bad n '{v}'"))))?;
            MapSpec::radial_stretch(num("alpha")?, n)
        }
        "stretch_square" => {
            check_keys(&name, &p, &["lambda"])?;
            MapSpec::stretch_square(num("lambda")?)
        }
        "pure_annulus_power" => {
            check_keys(&name, &p, &["K", "branch"])?;
            let branch = match p.get("branch").map(String::as_str).unwrap_or("fast") {
                "fast" => Branch::Fast,
                "slow" => Branch::Slow,
                b => return Err(Error::Config(format!("pure_annulus_power: branch must be fast or slow, got '{b}'"))),
            };
            MapSpec::pure_annulus_power(num("K")?, branch)
        }
        "g_example" => {
            check_keys(&name, &p, &["K", "c", "m", "u0", "counts", "schedule"])?;
            Ok(MapSpec::g_example(Arc::new(schedule_from(&p, base_dir)?)))
        }
        "conformal_exp" => {
            check_keys(&name, &p, &[])?;
            Ok(MapSpec::conformal_exp())
        }
        _ => return Err(Error::Config(format!("unknown map family '{name}'"))),
    };
    map.map_err(to_config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_grammar() {
        let here = Path::new(".");
        assert_eq!(parse_map("power{d=3}", here).unwrap().name(), "power{d=3}");
        assert_eq!(parse_map(" stretch_square{ lambda = 1.5 } ", here).unwrap().name(), "stretch_square{lambda=1.5}");
        assert_eq!(parse_map("conformal_exp", here).unwrap().name(), "conformal_exp");
        let g = parse_map("g_example{K=1.5,c=2,m=2,u0=log2}", here).unwrap();
        assert_eq!(g.dimension(), 2);
        for bad in ["power{d=2", "power{x=2}", "power{d=-1}", "nosuch{a=1}", "power{d=2,d=3}", "", "winding{K=0}"] {
            assert!(matches!(parse_map(bad, here), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn key_value_files_and_overrides() {
        let mut p = parse_key_values("# demo\nkind = basin\nmap=power{d=2}\n\nres=64 # small\n").unwrap();
        p.extend(parse_overrides(&["--res".into(), "32".into(), "--k_max=7".into()]).unwrap());
        let c = ExperimentConfig::from_params(None, p, Path::new(".")).unwrap();
        assert_eq!(c.kind, Kind::Basin);
        assert_eq!(c.usize_or("res", 0).unwrap(), 32);
        assert_eq!(c.usize_or("k_max", 0).unwrap(), 7);
        assert!(parse_key_values("novalue\n").is_err());
        assert!(parse_overrides(&["res".into()]).is_err());
    }

    #[test]
    fn unknown_kind_key_or_missing_map_is_rejected() {
        let p = |s: &str| parse_key_values(s).unwrap();
        let here = Path::new(".");
        assert!(ExperimentConfig::from_params(None, p("kind=fractal\nmap=power{d=2}"), here).is_err());
        assert!(ExperimentConfig::from_params(None, p("kind=orbit\nmap=power{d=2}\nres=3"), here).is_err());
        assert!(ExperimentConfig::from_params(None, p("kind=orbit"), here).is_err());
        assert!(ExperimentConfig::from_params(Some(Kind::Orbit), p("kind=basin\nmap=power{d=2}"), here).is_err());
        assert!(ExperimentConfig::from_params(None, p("kind=g-example"), here).is_ok());
    }

    #[test]
    fn counts_and_points() {
        assert_eq!(parse_counts("linear{c=40,m=3}").unwrap(), vec![(40, 40), (80, 80), (120, 120)]);
        assert_eq!(parse_counts("2:3;4:5").unwrap(), vec![(2, 3), (4, 5)]);
        assert_eq!(parse_point("(0.5, -1)").unwrap(), Point::new2(0.5, -1.0));
        assert_eq!(parse_point("1,2,3").unwrap().dim(), 3);
        assert!(parse_point("1").is_err());
    }
}
