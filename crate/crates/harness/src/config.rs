//! Run configuration: plain-text key-value files (JSON accepted as an
//! alternative), typed validation, environment overrides and a stable
//! content hash for provenance.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Scalar,
    Parametric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSpec {
    Flat,
    Perturbation { seed: u64, amplitude: f64, kmax: i64 },
    TravelingWave { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub n: usize,
    pub codim: usize,
    pub t_end: f64,
    pub dt: f64,
    pub mode: Mode,
    pub data: DataSpec,
    pub store_every: usize,
    pub seed: u64,
    pub tol: f64,
    /// Sobolev exponent for the norm toolbox
    pub sobolev_s: f64,
    pub flow_time: f64,
    pub flow_steps: usize,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            n: 32,
            codim: 1,
            t_end: 0.5,
            dt: 0.05,
            mode: Mode::Parametric,
            data: DataSpec::Flat,
            store_every: 1,
            seed: 7,
            tol: 1e-10,
            sobolev_s: 3.0,
            flow_time: 3.2,
            flow_steps: 32,
            out_dir: "out".to_string(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            bail!("dim must be 1, 2 or 3 (got {})", self.dim);
        }
        if self.n < 8 || self.n % 2 != 0 {
            bail!("n must be an even integer ≥ 8 (got {})", self.n);
        }
        if !(1..=3).contains(&self.codim) {
            bail!("codim must be 1, 2 or 3 (got {})", self.codim);
        }
        if self.t_end <= 0.0 || self.dt <= 0.0 {
            bail!("t_end and dt must be positive");
        }
        if self.store_every == 0 {
            bail!("store_every must be ≥ 1");
        }
        if self.tol <= 0.0 || self.tol > 1e-2 {
            bail!("tol must lie in (0, 1e-2]");
        }
        if self.sobolev_s <= 2.5 + 1.0 / 6.0 {
            bail!("sobolev_s must exceed 5/2 + 1/6");
        }
        if let DataSpec::Perturbation { amplitude, kmax, .. } = &self.data {
            if *amplitude < 0.0 || *amplitude > 0.1 {
                bail!("perturbation amplitude must lie in [0, 0.1]");
            }
            if *kmax < 1 || *kmax > (self.n / 3) as i64 {
                bail!("perturbation kmax must lie in [1, n/3]");
            }
        }
        Ok(())
    }

    /// Serialize as the plain-text key-value format.
    pub fn to_kv(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("dim".to_string(), self.dim.to_string());
        map.insert("n".to_string(), self.n.to_string());
        map.insert("codim".to_string(), self.codim.to_string());
        map.insert("t_end".to_string(), format!("{:?}", self.t_end));
        map.insert("dt".to_string(), format!("{:?}", self.dt));
        map.insert(
            "mode".to_string(),
            match self.mode {
                Mode::Scalar => "scalar".into(),
                Mode::Parametric => "parametric".into(),
            },
        );
        match &self.data {
            DataSpec::Flat => {
                map.insert("data.kind".to_string(), "flat".into());
            }
            DataSpec::Perturbation { seed, amplitude, kmax } => {
                map.insert("data.kind".to_string(), "perturbation".into());
                map.insert("data.seed".to_string(), seed.to_string());
                map.insert("data.amplitude".to_string(), format!("{amplitude:?}"));
                map.insert("data.kmax".to_string(), kmax.to_string());
            }
            DataSpec::TravelingWave { amplitude } => {
                map.insert("data.kind".to_string(), "traveling_wave".into());
                map.insert("data.amplitude".to_string(), format!("{amplitude:?}"));
            }
        }
        map.insert("store_every".to_string(), self.store_every.to_string());
        map.insert("seed".to_string(), self.seed.to_string());
        map.insert("tol".to_string(), format!("{:?}", self.tol));
        map.insert("sobolev_s".to_string(), format!("{:?}", self.sobolev_s));
        map.insert("flow_time".to_string(), format!("{:?}", self.flow_time));
        map.insert("flow_steps".to_string(), self.flow_steps.to_string());
        map.insert("out_dir".to_string(), self.out_dir.clone());
        let mut s = String::from("# minsurf run configuration\n");
        for (k, v) in map {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Parse the plain-text key-value format.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected `key = value`", lineno + 1))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let get = |map: &BTreeMap<String, String>, k: &str| map.get(k).cloned();
        macro_rules! set {
            ($field:expr, $key:expr, $ty:ty) => {
                if let Some(v) = get(&map, $key) {
                    $field = v
                        .parse::<$ty>()
                        .with_context(|| format!("invalid value for {}: {v}", $key))?;
                }
            };
        }
        set!(cfg.dim, "dim", usize);
        set!(cfg.n, "n", usize);
        set!(cfg.codim, "codim", usize);
        set!(cfg.t_end, "t_end", f64);
        set!(cfg.dt, "dt", f64);
        set!(cfg.store_every, "store_every", usize);
        set!(cfg.seed, "seed", u64);
        set!(cfg.tol, "tol", f64);
        set!(cfg.sobolev_s, "sobolev_s", f64);
        set!(cfg.flow_time, "flow_time", f64);
        set!(cfg.flow_steps, "flow_steps", usize);
        if let Some(v) = get(&map, "out_dir") {
            cfg.out_dir = v;
        }
        if let Some(v) = get(&map, "mode") {
            cfg.mode = match v.as_str() {
                "scalar" => Mode::Scalar,
                "parametric" => Mode::Parametric,
                other => bail!("unknown mode {other}"),
            };
        }
        if let Some(kind) = get(&map, "data.kind") {
            cfg.data = match kind.as_str() {
                "flat" => DataSpec::Flat,
                "perturbation" => {
                    let seed = get(&map, "data.seed").unwrap_or("7".into()).parse()?;
                    let amplitude =
                        get(&map, "data.amplitude").unwrap_or("1e-3".into()).parse()?;
                    let kmax = get(&map, "data.kmax").unwrap_or("2".into()).parse()?;
                    DataSpec::Perturbation { seed, amplitude, kmax }
                }
                "traveling_wave" => {
                    let amplitude =
                        get(&map, "data.amplitude").unwrap_or("0.1".into()).parse()?;
                    DataSpec::TravelingWave { amplitude }
                }
                other => bail!("unknown data.kind {other}"),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from a path: `.json` files parse as JSON, everything else as
    /// the key-value format. Environment variables with the `MINSURF_`
    /// prefix override individual keys (dots become double underscores,
    /// e.g. `MINSURF_DATA__AMPLITUDE=1e-2`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg = if path.extension().map(|e| e == "json").unwrap_or(false) {
            let c: RunConfig = serde_json::from_str(&text).context("parsing JSON config")?;
            c.validate()?;
            c
        } else {
            Self::from_kv(&text)?
        };
        cfg.with_env_overrides()
    }

    pub fn with_env_overrides(&self) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        // serialize current state to kv, then apply overrides on top
        for line in self.to_kv().lines() {
            if let Some((k, v)) = line.split_once('=') {
                if !k.trim().starts_with('#') {
                    map.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        }
        for (key, value) in std::env::vars() {
            if let Some(rest) = key.strip_prefix("MINSURF_") {
                let k = rest.to_lowercase().replace("__", ".");
                map.insert(k, value);
            }
        }
        Self::from_map(map)
    }

    /// FNV-1a hash of the canonical serialization, for provenance rows.
    pub fn hash(&self) -> String {
        let text = self.to_kv();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip_identity() {
        let cfg = RunConfig {
            dim: 2,
            n: 32,
            codim: 2,
            data: DataSpec::Perturbation { seed: 11, amplitude: 1e-3, kmax: 2 },
            ..Default::default()
        };
        let text = cfg.to_kv();
        let back = RunConfig::from_kv(&text).unwrap();
        assert_eq!(cfg, back);
        // parse → serialize → parse is the identity on the serialized form
        assert_eq!(text, back.to_kv());
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig { data: DataSpec::TravelingWave { amplitude: 0.08 }, ..Default::default() };
        let js = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&js).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut cfg = RunConfig::default();
        cfg.dim = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.n = 13;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.data = DataSpec::Perturbation { seed: 1, amplitude: 0.5, kmax: 2 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
