//! Typed parameter values, config-file merging and run manifests.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{what} `{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what} must be finite"))
    }
}

/// `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn linspace(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }

    /// Geometric spacing; both ends must be positive.
    pub fn geomspace(&self) -> Result<Vec<f64>, String> {
        if !(self.start > 0.0 && self.stop > 0.0) {
            return Err("geometric range needs positive ends".into());
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let r = self.stop / self.start;
        Ok((0..self.count)
            .map(|i| self.start * r.powf(i as f64 / (self.count - 1) as f64))
            .collect())
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let count: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("count `{n}` is not a positive integer"))?;
        if count == 0 {
            return Err("count must be at least 1".into());
        }
        Ok(RangeSpec {
            start: parse_f64(a, "start")?,
            stop: parse_f64(b, "stop")?,
            count,
        })
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

string_serde!(RangeSpec);

/// `lo:hi` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
        let (lo, hi) = (parse_f64(a, "lower end")?, parse_f64(b, "upper end")?);
        if lo >= hi {
            return Err(format!("empty interval `{s}`"));
        }
        Ok(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

string_serde!(Interval);

/// `NQxNP` grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nq: usize,
    pub np: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected NxM, got `{s}`"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("grid size `{t}` is not an integer"))
        };
        let (nq, np) = (parse(a)?, parse(b)?);
        if nq < 2 || np < 2 {
            return Err("grid needs at least 2 cells per axis".into());
        }
        Ok(GridSpec { nq, np })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nq, self.np)
    }
}

string_serde!(GridSpec);

/// Reads a JSON config file. A manifest written by an earlier run is
/// accepted too; its config echo is used, provided the subcommand matches.
pub fn load_config(path: &Path, subcommand: &str) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::config(
            "config",
            "config file must hold a JSON object",
        ));
    };
    if let (Some(Value::String(sub)), Some(config)) = (map.get("subcommand"), map.get("config")) {
        if sub != subcommand {
            return Err(CliError::config(
                "config",
                format!("manifest is for `{sub}`, not `{subcommand}`"),
            ));
        }
        return Ok(config.clone());
    }
    Ok(Value::Object(map))
}

/// Overlays the flags that were given (non-null fields of `flags`) on the
/// config file and decodes the result.
pub fn merge<T: Serialize + DeserializeOwned>(file: Option<Value>, flags: &T) -> CliResult<T> {
    let mut base = match file {
        Some(Value::Object(m)) => m,
        Some(_) => {
            return Err(CliError::config(
                "config",
                "config file must hold a JSON object",
            ))
        }
        None => Map::new(),
    };
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base))
        .map_err(|e| CliError::config("config", e.to_string()))
}

/// Fails with a field-level message when a required parameter is absent.
pub fn required<T: Clone>(value: &Option<T>, field: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| {
        CliError::config(
            field,
            "required but not given on the command line or in the config file",
        )
    })
}

/// Config echo, code version and seed of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Manifest {
    pub fn new<T: Serialize>(subcommand: &str, seed: Option<u64>, config: &T) -> CliResult<Self> {
        Ok(Manifest {
            tool: "tempus".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            seed,
            config: serde_json::to_value(config)?,
        })
    }

    /// SHA-256 of the compact JSON form. Object keys are sorted, so the
    /// hash depends only on the content.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self)
            .map(|v| v.to_string())
            .unwrap_or_default();
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse_and_space() {
        let r: RangeSpec = "0.01:0.16:5".parse().unwrap();
        assert_eq!(r.count, 5);
        let g = r.geomspace().unwrap();
        assert!((g[2] - 0.04).abs() < 1e-12);
        assert_eq!(r.linspace().len(), 5);
        assert!("1:2".parse::<RangeSpec>().is_err());
        assert!("1:2:0".parse::<RangeSpec>().is_err());
        assert!("-1:2:3".parse::<RangeSpec>().unwrap().geomspace().is_err());
        assert_eq!(r.to_string().parse::<RangeSpec>().unwrap(), r);
    }

    #[test]
    fn grids_and_intervals() {
        assert_eq!(
            "512x256".parse::<GridSpec>().unwrap(),
            GridSpec { nq: 512, np: 256 }
        );
        assert!("512".parse::<GridSpec>().is_err());
        assert!("2:1".parse::<Interval>().is_err());
        assert_eq!(
            "-1.5:2".parse::<Interval>().unwrap(),
            Interval { lo: -1.5, hi: 2.0 }
        );
    }

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Demo {
        a: Option<f64>,
        b: Option<u64>,
    }

    #[test]
    fn flags_override_file() {
        let file = serde_json::json!({"a": 1.0, "b": 7});
        let flags = Demo {
            a: Some(2.0),
            b: None,
        };
        assert_eq!(
            merge(Some(file), &flags).unwrap(),
            Demo {
                a: Some(2.0),
                b: Some(7)
            }
        );
        let bad = serde_json::json!({"c": 1});
        assert!(matches!(
            merge(Some(bad), &Demo::default()),
            Err(CliError::ConfigInvalid { .. })
        ));
    }

    #[test]
    fn manifest_hash_ignores_key_order() {
        let a = Manifest::new("x", Some(1), &serde_json::json!({"p": 1, "q": 2})).unwrap();
        let b = Manifest::new("x", Some(1), &serde_json::json!({"q": 2, "p": 1})).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Manifest::new("x", Some(2), &serde_json::json!({"q": 2, "p": 1})).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
