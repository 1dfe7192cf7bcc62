//! `key=value` config files and per-key resolution:
//! defaults < `CDIFF_SEED` (seed only) < config file < command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "CDIFF_SEED";

/// Parses `key=value` lines. Blank lines, `#` comments and lines without
/// `=` are skipped, so a run manifest can be passed back as a config file.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else { continue };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Config(format!("config line with empty key: {line}")));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("config key '{key}' given twice")));
        }
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Resolves settings for one subcommand and records the resolved values
/// for the run manifest.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: Vec<(String, String)>,
    env_seed: Option<String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>, env_seed: Option<String>) -> Self {
        Self {
            file,
            env_seed,
            ..Default::default()
        }
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some(raw) = self.file.get(key) else { return Ok(None) };
        self.used.insert(key.to_string());
        raw.parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("config value for '{key}' is invalid: '{raw}'")))
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let from_file = self.from_file(key)?;
        let value = flag.or(from_file).unwrap_or(default);
        self.record(key, value.to_string());
        Ok(value)
    }

    /// Like [`Resolver::get`] without a default; unset stays `None` and is
    /// left out of the manifest.
    pub fn get_opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let from_file = self.from_file(key)?;
        let value = flag.or(from_file);
        if let Some(v) = &value {
            self.record(key, v.to_string());
        }
        Ok(value)
    }

    /// Boolean switch: the flag wins when set, then the file, then `default`.
    pub fn switch(&mut self, key: &str, flag: bool, default: bool) -> Result<bool> {
        let from_file: Option<Switch> = self.from_file(key)?;
        let value = if flag { true } else { from_file.map_or(default, |s| s.0) };
        self.record(key, Switch(value).to_string());
        Ok(value)
    }

    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let env = match &self.env_seed {
            Some(raw) => Some(
                raw.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("{SEED_ENV} is not an unsigned integer: '{raw}'")))?,
            ),
            None => None,
        };
        let from_file = self.from_file("seed")?;
        let value = flag.or(from_file).or(env).unwrap_or(0);
        self.record("seed", value.to_string());
        Ok(value)
    }

    /// Rejects config keys no setting asked for.
    pub fn finish(self) -> Result<Vec<(String, String)>> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(Error::Config(format!("unknown config keys: {}", names.join(", "))));
        }
        Ok(self.resolved)
    }
}

/// `on`/`off` flag value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switch(pub bool);

impl FromStr for Switch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "on" | "true" | "yes" | "1" => Ok(Switch(true)),
            "off" | "false" | "no" | "0" => Ok(Switch(false)),
            other => Err(format!("expected on or off, got '{other}'")),
        }
    }
}

impl Display for Switch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.0 { "on" } else { "off" })
    }
}

/// Inclusive start range `A..B` for ablation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StartRange {
    pub first: usize,
    pub last: usize,
}

impl StartRange {
    pub fn starts(&self, step: usize, max: usize) -> Vec<usize> {
        (self.first..=self.last)
            .step_by(step.max(1))
            .filter(|&s| s >= 1 && s <= max)
            .collect()
    }
}

impl FromStr for StartRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got '{s}'"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("'{v}' is not a step index"));
        let (first, last) = (parse(a)?, parse(b)?);
        if first > last {
            return Err(format!("empty range {s}"));
        }
        Ok(Self { first, last })
    }
}

impl Display for StartRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// Comma-separated list value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let items = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<T>().map_err(|_| format!("invalid list item '{p}'")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if items.is_empty() {
            return Err("empty list".into());
        }
        Ok(List(items))
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file = parse_config("# comment\nsize = 32\ngrad_steps=5\nslice_0000.cim\n").unwrap();
        let mut r = Resolver::new(file, Some("9".into()));
        assert_eq!(r.get("size", None, 64usize).unwrap(), 32);
        assert_eq!(r.get("grad-steps", Some(7usize), 2000).unwrap(), 7);
        assert_eq!(r.get("count", None, 200usize).unwrap(), 200);
        assert_eq!(r.seed(None).unwrap(), 9);
        let resolved = r.finish().unwrap();
        assert!(resolved.contains(&("seed".into(), "9".into())));
    }

    #[test]
    fn seed_order() {
        let mut r = Resolver::new(parse_config("seed=4").unwrap(), Some("9".into()));
        assert_eq!(r.seed(None).unwrap(), 4);
        let mut r = Resolver::new(parse_config("seed=4").unwrap(), Some("9".into()));
        assert_eq!(r.seed(Some(1)).unwrap(), 1);
        let mut r = Resolver::new(BTreeMap::new(), None);
        assert_eq!(r.seed(None).unwrap(), 0);
        let mut r = Resolver::new(BTreeMap::new(), Some("x".into()));
        assert!(r.seed(None).is_err());
    }

    #[test]
    fn unknown_and_invalid_keys() {
        let r = Resolver::new(parse_config("sise=3").unwrap(), None);
        assert!(matches!(r.finish(), Err(Error::Config(_))));
        let mut r = Resolver::new(parse_config("size=big").unwrap(), None);
        assert!(r.get("size", None, 1usize).is_err());
        assert!(parse_config("a=1\na=2").is_err());
    }

    #[test]
    fn value_types() {
        assert_eq!("off".parse::<Switch>().unwrap(), Switch(false));
        assert!("maybe".parse::<Switch>().is_err());
        let r: StartRange = "36..56".parse().unwrap();
        assert_eq!(r.starts(5, 100), vec![36, 41, 46, 51, 56]);
        assert_eq!("0..3".parse::<StartRange>().unwrap().starts(1, 2), vec![1, 2]);
        assert!("5..1".parse::<StartRange>().is_err());
        assert_eq!("8, 16".parse::<List<f64>>().unwrap().0, vec![8.0, 16.0]);
        assert_eq!(List(vec![1, 2]).to_string(), "1,2");
    }
}
