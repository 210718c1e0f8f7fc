//! Flag value types: π-literals, `a:b:n` ranges and float-style counts.
//! Each accepts a number or a string in JSON config files.

use serde::{Deserialize, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum NumOrStr {
    Num(f64),
    Str(String),
}

/// Parses `1.5`, `pi`, `-pi`, `0.5pi`, `0.5*pi`, `pi/2`, `1e-3`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let bad = || format!("invalid number `{s}`");
    let Some(idx) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad()).and_then(finite(s));
    };
    let (coef, rest) = t.split_at(idx);
    let rest = &rest[2..];
    let coef = coef.trim_end_matches('*');
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let div = match rest {
        "" => 1.0,
        r => r
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(bad)?,
    };
    finite(s)(c * PI / div)
}

fn finite(s: &str) -> impl Fn(f64) -> Result<f64, String> + '_ {
    move |v| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{s}` is not finite"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl FromStr for Real {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_real(s).map(Real)
    }
}

impl TryFrom<NumOrStr> for Real {
    type Error = String;
    fn try_from(v: NumOrStr) -> Result<Self, String> {
        match v {
            NumOrStr::Num(x) => Ok(Real(x)),
            NumOrStr::Str(s) => s.parse(),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Real::try_from(NumOrStr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// Inclusive grid `start:end:count`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn linear(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.end } else { self.start + step * i as f64 })
            .collect()
    }

    pub fn geometric(&self) -> Result<Vec<f64>, String> {
        if !(self.start > 0.0 && self.end > 0.0) {
            return Err(format!("log range `{self}` needs positive endpoints"));
        }
        let (a, b) = (self.start.log10(), self.end.log10());
        Ok(RangeSpec { start: a, end: b, count: self.count }
            .linear()
            .into_iter()
            .enumerate()
            .map(|(i, x)| match i {
                0 => self.start,
                i if i + 1 == self.count => self.end,
                _ => 10f64.powf(x),
            })
            .collect())
    }

    pub fn values(&self, log: bool) -> Result<Vec<f64>, String> {
        if log {
            self.geometric()
        } else {
            Ok(self.linear())
        }
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.start, self.end, self.count)
    }
}

impl FromStr for RangeSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("range `{s}` must look like start:end:count"));
        };
        let count: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("range `{s}`: count `{n}` is not a positive integer"))?;
        if count == 0 {
            return Err(format!("range `{s}`: count must be at least 1"));
        }
        let (start, end) = (parse_real(a)?, parse_real(b)?);
        if end < start {
            return Err(format!("range `{s}`: end is below start"));
        }
        Ok(Self { start, end, count })
    }
}

impl<'de> Deserialize<'de> for RangeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for RangeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
