//! Flat `key = value` experiment files and the small site grammar shared by
//! the command line (`7`, `L`, `3L`, `2.5L`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Configuration, Schedule, WalkParams, DEFAULT_MARGIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: f64,
    pub n_walks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.big_a.is_some() && cfg.margin.is_some() {
            return Err(Error::Config("give big_a or margin, not both".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serialises")
    }

    pub fn params(&self) -> Result<WalkParams> {
        WalkParams::new(self.p)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let params = self.params()?;
        match self.big_a {
            Some(a) => Schedule::with_big_a(&params, self.n_walks, a),
            None => Schedule::minimal(&params, self.n_walks, self.margin.unwrap_or(DEFAULT_MARGIN)),
        }
    }
}

/// A site given as an integer or as a multiple of `L`, rounded up.
pub fn parse_site(token: &str, l_threshold: f64) -> Result<i64> {
    let tok = token.trim();
    let site = match tok.strip_suffix('L') {
        Some(k) => {
            let k: f64 = if k.is_empty() {
                1.0
            } else {
                k.parse().map_err(|_| Error::invalid(format!("bad site '{tok}'")))?
            };
            (k * l_threshold).ceil() as i64
        }
        None => tok.parse().map_err(|_| Error::invalid(format!("bad site '{tok}'")))?,
    };
    if site < 1 {
        return Err(Error::invalid(format!("site must be >= 1, got {tok}")));
    }
    Ok(site)
}

/// Initial configuration from `all-at:SITE` or `file:PATH`, where the file
/// lists sites separated by whitespace or commas.
pub fn parse_init(spec: &str, n_walks: usize, l_threshold: f64) -> Result<Configuration> {
    if let Some(site) = spec.strip_prefix("all-at:") {
        return Configuration::all_at(n_walks, parse_site(site, l_threshold)?);
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    let text = std::fs::read_to_string(path)?;
    let positions = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| parse_site(t, l_threshold))
        .collect::<Result<Vec<_>>>()?;
    if positions.len() != n_walks {
        return Err(Error::invalid(format!(
            "{path} lists {} sites, expected {n_walks}",
            positions.len()
        )));
    }
    Configuration::new(positions)
}

/// Comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(spec: &str) -> Result<Vec<T>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad list entry '{}'", t.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "p = 0.3\nn_walks = 10\nmargin = 0.02\nseed = 7\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.n_walks, 10);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert!(cfg.schedule().unwrap().kappa > 0.02);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ExperimentConfig::parse("p = 0.3\nn_walks = 10\nbig_a = 90\nmargin = 0.01\nseed = 1").is_err());
        assert!(ExperimentConfig::parse("p = 0.3\nn_walks = 10\nseed = 1\nfoo = 2").is_err());
        assert!(ExperimentConfig::parse("p = 0.3\nseed = 1").is_err());
        let cfg = ExperimentConfig::parse("p = 0.5\nn_walks = 10\nseed = 1").unwrap();
        assert!(cfg.params().is_err());
    }

    #[test]
    fn sites() {
        assert_eq!(parse_site("7", 3.2).unwrap(), 7);
        assert_eq!(parse_site("L", 3.2).unwrap(), 4);
        assert_eq!(parse_site(" 3L ", 3.2).unwrap(), 10);
        assert_eq!(parse_site("0.5L", 3.2).unwrap(), 2);
        assert!(parse_site("-1", 3.2).is_err());
        assert!(parse_site("abc", 3.2).is_err());
    }

    #[test]
    fn init_specs() {
        let c = parse_init("all-at:3L", 4, 10.0).unwrap();
        assert_eq!(c.positions(), &[30, 30, 30, 30]);
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("init.txt");
        std::fs::write(&f, "1, 2\n3 L").unwrap();
        let c = parse_init(&format!("file:{}", f.display()), 4, 10.0).unwrap();
        assert_eq!(c.positions(), &[1, 2, 3, 10]);
        assert!(parse_init(f.to_str().unwrap(), 3, 10.0).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("10, 50,200").unwrap(), vec![10, 50, 200]);
        assert!(parse_list::<f64>("1,x").is_err());
    }
}
