//! Flat key-value configuration shared by the command-line tools.
//!
//! Files use TOML syntax restricted to scalar values; nested tables are
//! flattened into dotted keys, so `kernel.tau = 0.5` and a `[kernel]` table
//! with `tau = 0.5` are the same setting. Keys mirror long flag names.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "PERMCLASS_THREADS";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, String>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        let value = match v {
            toml::Value::Table(t) => {
                flatten(&key, t, out)?;
                continue;
            }
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            toml::Value::Array(a) => a
                .iter()
                .map(|x| match x {
                    toml::Value::String(s) => Ok(s.clone()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(f) => Ok(f.to_string()),
                    _ => Err(Error::InvalidParameter(format!("config key {key}: unsupported list item"))),
                })
                .collect::<Result<Vec<_>>>()?
                .join(","),
            toml::Value::Datetime(_) => {
                return Err(Error::InvalidParameter(format!("config key {key}: dates are not supported")))
            }
        };
        out.insert(key, value);
    }
    Ok(())
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidParameter(format!("config: {}", e.message())))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries)?;
        Ok(FlatConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Parsed value of `key`, if present.
    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| Error::InvalidParameter(format!("config key {key} = {s:?}: {e}")))
            })
            .transpose()
    }

    /// A flag value if given, else the file value, else `default`; the result
    /// is recorded so the resolved configuration can be echoed into outputs.
    pub fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.value(key)?.unwrap_or(default),
        };
        self.set(key, v.to_string());
        Ok(v)
    }

    /// Like [`resolve`](Self::resolve) without a default.
    pub fn resolve_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.value(key)?,
        };
        if let Some(v) = &v {
            self.set(key, v.to_string());
        }
        Ok(v)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// `key=value` pairs in key order, space separated.
    pub fn summary(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Kernel from the `kernel.family`, `kernel.tau` and `kernel.c` settings.
pub fn kernel_from_parts(family: &str, tau: Option<f64>, c: Option<f64>) -> Result<Kernel> {
    let need_tau = || {
        tau.ok_or_else(|| Error::InvalidParameter(format!("kernel family {family} needs a tau")))
    };
    let k = match family {
        "exponential" | "k1" => Kernel::exponential(need_tau()?),
        "gaussian" | "k2" => Kernel::gaussian(need_tau()?),
        "constant" => Kernel::constant(c.unwrap_or(1.0)),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown kernel family {other:?} (expected exponential, gaussian or constant)"
            )))
        }
    };
    k.validate()?;
    Ok(k)
}

/// Worker count from the environment, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidParameter(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
    }
}
