//! Run configuration: a flat `key = value` file with `[section]` prefixes,
//! overridable key by key from the command line, echoed verbatim into the
//! run manifest so a run can be replayed exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Which boundary velocity law drives the diffusive restarts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryRegime {
    Light { radius: f64 },
    Heavy { beta: f64, kappa: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    UnitBall,
    Ellipsoid(Vec<f64>),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dimension: usize,
    pub domain: DomainSpec,
    pub alpha: f64,
    pub regime: BoundaryRegime,
    pub kappa_f: Option<f64>,
    pub eps: f64,
    /// Approximation level for the finite-measure family.
    pub level_n: Option<f64>,
    pub horizon: f64,
    pub grid_points: usize,
    pub replicas: usize,
    pub seed: u64,
    pub out_dir: String,
    pub threads: Option<usize>,
    pub event_cap: usize,
    pub smoke: bool,
    /// Start position; defaults to the origin.
    pub start: Vec<f64>,
    /// Raw key/value pairs, echoed into the manifest.
    pub raw: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dimension: 2,
            domain: DomainSpec::UnitBall,
            alpha: 1.5,
            regime: BoundaryRegime::Light { radius: 1.0 },
            kappa_f: None,
            eps: 1e-3,
            level_n: None,
            horizon: 1.0,
            grid_points: 100,
            replicas: 100,
            seed: 20260808,
            out_dir: "out".into(),
            threads: None,
            event_cap: 100_000_000,
            smoke: false,
            start: vec![0.0, 0.0],
            raw: BTreeMap::new(),
        }
    }
}

/// Parse a flat `key = value` file with `[section]` headers; section names
/// become key prefixes (`[domain]` + `kind = ball` gives `domain.kind`).
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected `key = value`, got `{raw_line}`", lineno + 1));
        };
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn get_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(s) => match s.parse::<f64>() {
            Ok(v) => Ok(Some(v)),
            Err(_) => err(format!("key `{key}`: expected a number, got `{s}`")),
        },
    }
}

fn get_usize(map: &BTreeMap<String, String>, key: &str) -> Result<Option<usize>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(v) => Ok(Some(v)),
            Err(_) => err(format!("key `{key}`: expected an integer, got `{s}`")),
        },
    }
}

impl RunConfig {
    /// Build from an optional config file, `--set key=value` overrides, and
    /// the environment (`REFSTABLE_SEED`, `REFSTABLE_THREADS`).
    pub fn load(
        path: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                parse_kv(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        if let Ok(seed) = std::env::var("REFSTABLE_SEED") {
            map.entry("seed".into()).or_insert(seed);
        }
        if let Ok(threads) = std::env::var("REFSTABLE_THREADS") {
            map.entry("threads".into()).or_insert(threads);
        }
        Self::from_map(map)
    }

    pub fn from_map(map: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let known_prefixes = [
            "dimension", "domain.kind", "domain.semi_axes", "alpha", "kappa_f",
            "g.mode", "g.beta", "g.kappa", "g.radius", "eps", "level_n", "horizon",
            "grid_points", "replicas", "seed", "out_dir", "threads", "event_cap",
            "smoke", "start",
        ];
        for key in map.keys() {
            if !known_prefixes.contains(&key.as_str()) {
                return err(format!("unknown config key `{key}`"));
            }
        }
        if let Some(d) = get_usize(&map, "dimension")? {
            if d != 2 && d != 3 {
                return err(format!("dimension must be 2 or 3, got {d}"));
            }
            cfg.dimension = d;
            cfg.start = vec![0.0; d];
        }
        match map.get("domain.kind").map(String::as_str) {
            None | Some("ball") | Some("unit-ball") => cfg.domain = DomainSpec::UnitBall,
            Some("ellipsoid") => {
                let axes_txt = map
                    .get("domain.semi_axes")
                    .ok_or(ConfigError("ellipsoid domain needs domain.semi_axes".into()))?;
                let axes: Result<Vec<f64>, _> =
                    axes_txt.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let axes =
                    axes.map_err(|_| ConfigError(format!("bad semi_axes `{axes_txt}`")))?;
                if axes.len() != cfg.dimension {
                    return err(format!(
                        "semi_axes has {} entries for dimension {}",
                        axes.len(),
                        cfg.dimension
                    ));
                }
                if axes.iter().any(|a| *a <= 0.0) {
                    return err("semi_axes must be strictly positive");
                }
                cfg.domain = DomainSpec::Ellipsoid(axes);
            }
            Some(k) => return err(format!("unknown domain.kind `{k}`")),
        }
        if let Some(a) = get_f64(&map, "alpha")? {
            cfg.alpha = a;
        }
        if !(cfg.alpha > 0.0 && cfg.alpha < 2.0) {
            return err(format!("alpha = {} not in (0, 2)", cfg.alpha));
        }
        match map.get("g.mode").map(String::as_str) {
            None | Some("light") => {
                let radius = get_f64(&map, "g.radius")?.unwrap_or(1.0);
                if radius <= 0.0 {
                    return err("g.radius must be positive");
                }
                cfg.regime = BoundaryRegime::Light { radius };
            }
            Some("heavy") => {
                let beta = get_f64(&map, "g.beta")?
                    .ok_or(ConfigError("heavy regime needs g.beta".into()))?;
                if !(beta > 0.0 && beta < cfg.alpha / 2.0) {
                    return err(format!(
                        "g.beta = {beta} outside the admissible range (0, alpha/2) = (0, {})",
                        cfg.alpha / 2.0
                    ));
                }
                cfg.regime = BoundaryRegime::Heavy { beta, kappa: get_f64(&map, "g.kappa")? };
            }
            Some(m) => return err(format!("unknown g.mode `{m}`")),
        }
        cfg.kappa_f = get_f64(&map, "kappa_f")?;
        if let Some(e) = get_f64(&map, "eps")? {
            if !(e > 0.0 && e <= 1.0) {
                return err(format!("eps = {e} not in (0, 1]"));
            }
            cfg.eps = e;
        }
        cfg.level_n = get_f64(&map, "level_n")?;
        if let Some(t) = get_f64(&map, "horizon")? {
            if t <= 0.0 {
                return err("horizon must be positive");
            }
            cfg.horizon = t;
        }
        if let Some(g) = get_usize(&map, "grid_points")? {
            cfg.grid_points = g.max(1);
        }
        if let Some(r) = get_usize(&map, "replicas")? {
            if r == 0 {
                return err("replicas must be at least 1");
            }
            cfg.replicas = r;
        }
        if let Some(s) = map.get("seed") {
            cfg.seed = s
                .parse::<u64>()
                .map_err(|_| ConfigError(format!("bad seed `{s}`")))?;
        }
        if let Some(o) = map.get("out_dir") {
            cfg.out_dir = o.clone();
        }
        cfg.threads = get_usize(&map, "threads")?;
        if let Some(c) = get_usize(&map, "event_cap")? {
            cfg.event_cap = c;
        }
        if let Some(s) = map.get("smoke") {
            cfg.smoke = s == "true" || s == "1";
        }
        if let Some(s) = map.get("start") {
            let coords: Result<Vec<f64>, _> =
                s.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let coords = coords.map_err(|_| ConfigError(format!("bad start `{s}`")))?;
            if coords.len() != cfg.dimension {
                return err(format!(
                    "start has {} coordinates for dimension {}",
                    coords.len(),
                    cfg.dimension
                ));
            }
            cfg.start = coords;
        }
        cfg.raw = map;
        Ok(cfg)
    }

    pub fn beta(&self) -> Option<f64> {
        match self.regime {
            BoundaryRegime::Heavy { beta, .. } => Some(beta),
            BoundaryRegime::Light { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_overrides() {
        let text = "
# comment
alpha = 1.2
[domain]
kind = ellipsoid
semi_axes = 2, 1
[g]
mode = heavy
beta = 0.4
";
        let map = parse_kv(text).unwrap();
        assert_eq!(map["alpha"], "1.2");
        assert_eq!(map["domain.kind"], "ellipsoid");
        let cfg = RunConfig::from_map(map).unwrap();
        assert_eq!(cfg.domain, DomainSpec::Ellipsoid(vec![2.0, 1.0]));
        assert_eq!(cfg.beta(), Some(0.4));
    }

    #[test]
    fn rejects_inadmissible_beta() {
        let text = "alpha = 1.5\n[g]\nmode = heavy\nbeta = 0.9\n";
        let map = parse_kv(text).unwrap();
        let e = RunConfig::from_map(map).unwrap_err();
        assert!(e.to_string().contains("admissible range"), "{e}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let map = parse_kv("alhpa = 1.5\n").unwrap();
        assert!(RunConfig::from_map(map).is_err());
    }
}
