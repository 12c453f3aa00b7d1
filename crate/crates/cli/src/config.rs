//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use nn2logic::fixedpoint::FixedPointFormat;
use nn2logic::netlist::RescaleShift;
use nn2logic::pipeline::{LgnParams, PipelineKind, PipelineSettings, RfParams};

const KEYS: &[&str] = &[
    "data",
    "weights",
    "split",
    "seed",
    "split_seed",
    "test_fraction",
    "bits",
    "frac",
    "pipeline",
    "out",
    "shift",
    "hidden",
    "epochs",
    "learning_rate",
    "batch_size",
    "rf.estimators",
    "rf.depth",
    "rf.bootstrap",
    "rf.feature_subsample",
    "lgn.depth",
    "lgn.width",
    "lgn.lut",
    "lgn.fallback",
    "sweep.pipelines",
    "sweep.rf.depths",
    "sweep.rf.estimators",
    "sweep.lgn.depths",
    "sweep.lgn.widths",
    "sweep.lgn.luts",
];

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key = value", k + 1))?;
            cfg.set(key.trim(), value.trim()).with_context(|| format!("config line {}", k + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown config key '{key}'");
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| anyhow!("invalid value '{v}' for {key}")))
            .transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.get(key)
            .map(PathBuf::from)
            .ok_or_else(|| anyhow!("missing '{key}' (set it in the config file or on the command line)"))
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out").unwrap_or("."))
    }

    pub fn seed(&self) -> Result<u64> {
        self.or("seed", 0)
    }

    pub fn format(&self) -> Result<FixedPointFormat> {
        Ok(FixedPointFormat::new(self.or("bits", 8)?, self.or("frac", 6)?)?)
    }

    /// Format only when given explicitly.
    pub fn explicit_format(&self) -> Result<Option<FixedPointFormat>> {
        match (self.parsed::<u32>("bits")?, self.parsed::<u32>("frac")?) {
            (None, None) => Ok(None),
            (Some(m), Some(i)) => Ok(Some(FixedPointFormat::new(m, i)?)),
            _ => bail!("--bits and --frac must be given together"),
        }
    }

    pub fn shift(&self) -> Result<RescaleShift> {
        match self.get("shift").unwrap_or("2i") {
            "2i" => Ok(RescaleShift::TwiceFractional),
            "i" => Ok(RescaleShift::Fractional),
            other => bail!("invalid shift '{other}' (2i or i)"),
        }
    }

    pub fn pipeline(&self) -> Result<PipelineKind> {
        Ok(self.get("pipeline").unwrap_or("direct").parse()?)
    }

    pub fn settings(&self) -> Result<PipelineSettings> {
        self.settings_for(self.pipeline()?)
    }

    pub fn settings_for(&self, kind: PipelineKind) -> Result<PipelineSettings> {
        Ok(match kind {
            PipelineKind::Direct => PipelineSettings::Direct { shift: self.shift()? },
            PipelineKind::RandomForest => {
                let d = RfParams::default();
                PipelineSettings::RandomForest(RfParams {
                    n_estimators: self.or("rf.estimators", d.n_estimators)?,
                    max_depth: self.or("rf.depth", d.max_depth)?,
                    bootstrap: self.or("rf.bootstrap", d.bootstrap)?,
                    feature_subsample: self.or("rf.feature_subsample", d.feature_subsample)?,
                })
            }
            PipelineKind::LogicNet => {
                let d = LgnParams::default();
                PipelineSettings::LogicNet(LgnParams {
                    depth: self.or("lgn.depth", d.depth)?,
                    width: self.or("lgn.width", d.width)?,
                    lut_size: self.or("lgn.lut", d.lut_size)?,
                    fallback: self.or("lgn.fallback", d.fallback)?,
                })
            }
        })
    }

    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<T>().map_err(|_| anyhow!("invalid entry '{p}' in {key}")))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let cfg = Config::parse("# grid\nbits = 4\nfrac=2\npipeline = rf # forests\nrf.depth = 10\n").unwrap();
        assert_eq!(cfg.format().unwrap(), FixedPointFormat::new(4, 2).unwrap());
        match cfg.settings().unwrap() {
            PipelineSettings::RandomForest(p) => assert_eq!((p.max_depth, p.n_estimators), (10, 3)),
            other => panic!("{other:?}"),
        }
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("bits 4").is_err());
        assert!(Config::parse("bits = four").unwrap().format().is_err());
        assert!(Config::parse("bits = 4").unwrap().explicit_format().is_err());
        assert_eq!(Config::parse("sweep.rf.depths = 5, 10").unwrap().list::<usize>("sweep.rf.depths", &[]).unwrap(), [5, 10]);
    }
}
