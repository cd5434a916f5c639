//! Flat key = value configuration with a resolved-value record.
//!
//! A config file is one `key = value` per line with `#` comments. A previous
//! run's summary JSON is also accepted: its embedded `config` object is the
//! same flat map, which is what makes summaries re-feedable. Every key a
//! scenario reads is written back in canonical form, so the summary always
//! contains the complete resolved configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use kgstab_core::Error as CoreError;

/// CLI-level failure, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unparseable or out-of-domain configuration (exit 2).
    Config(String),
    /// Filesystem failure around an artifact (exit 3).
    Io { path: PathBuf, source: std::io::Error },
    /// Failure surfaced from the numerical modules (exit 3).
    Core(CoreError),
    /// Other numerical-failure class outcomes, e.g. failing checks (exit 3).
    Runtime { code: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Core(_) | CliError::Runtime { .. } => 3,
        }
    }

    /// Stable module-qualified code for error reporting.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "cli/config",
            CliError::Io { .. } => "cli/io",
            CliError::Core(e) => e.code(),
            CliError::Runtime { code, .. } => code,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Runtime { message, .. } => write!(f, "{message}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Canonical float form: 17 significant digits survive a parse round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default, Clone)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Config {
        Config::default()
    }

    /// Loads a flat key = value file, or the `config` object of a summary
    /// JSON when the file starts with `{`.
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        if text.trim_start().starts_with('{') {
            Config::from_summary_json(&text, path)
        } else {
            Config::parse_flat(&text, path)
        }
    }

    fn parse_flat(text: &str, path: &Path) -> Result<Config> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { map })
    }

    fn from_summary_json(text: &str, path: &Path) -> Result<Config> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{}: invalid JSON: {e}", path.display()))
        })?;
        let Some(obj) = value.get("config").and_then(|c| c.as_object()) else {
            return Err(CliError::Config(format!(
                "{}: summary JSON has no `config` object",
                path.display()
            )));
        };
        let mut map = BTreeMap::new();
        for (k, v) in obj {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            map.insert(k.clone(), s);
        }
        Ok(Config { map })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.map.insert(key.to_string(), value.into());
    }

    /// Applies a `key=value` override from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(CliError::Config(format!("--set expects KEY=VALUE, got `{pair}`")));
        };
        self.set(key.trim(), value.trim());
        Ok(())
    }

    /// Reads a float key, inserting the default in canonical form when
    /// absent; the value read is always re-canonicalized so the resolved
    /// config round-trips bit-identically.
    pub fn resolve_f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.map.get(key) {
            Some(s) => s.parse::<f64>().map_err(|_| {
                CliError::Config(format!("{key} = `{s}` is not a number"))
            })?,
            None => default,
        };
        if !v.is_finite() {
            return Err(CliError::Config(format!("{key} = {v} must be finite")));
        }
        self.map.insert(key.to_string(), fmt_f64(v));
        Ok(v)
    }

    pub fn resolve_usize(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = match self.map.get(key) {
            Some(s) => s.parse::<usize>().map_err(|_| {
                CliError::Config(format!("{key} = `{s}` is not a non-negative integer"))
            })?,
            None => default,
        };
        self.map.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn resolve_bool(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = match self.map.get(key).map(|s| s.as_str()) {
            Some("true") => true,
            Some("false") => false,
            Some(other) => {
                return Err(CliError::Config(format!("{key} = `{other}` must be true or false")))
            }
            None => default,
        };
        self.map.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Reads a string key constrained to an allowed set.
    pub fn resolve_choice(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String> {
        let v = self.map.get(key).cloned().unwrap_or_else(|| default.to_string());
        if !allowed.contains(&v.as_str()) {
            return Err(CliError::Config(format!(
                "{key} = `{v}` must be one of {}",
                allowed.join(", ")
            )));
        }
        self.map.insert(key.to_string(), v.clone());
        Ok(v)
    }

    pub fn resolve_str(&mut self, key: &str, default: &str) -> String {
        let v = self.map.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.map.insert(key.to_string(), v.clone());
        v
    }

    /// The resolved map as a JSON object of strings.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for (k, v) in &self.map {
            obj.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        serde_json::Value::Object(obj)
    }

    /// A copy without the listed keys, for forwarding into sweep sub-runs.
    pub fn without(&self, keys: &[&str]) -> Config {
        let mut map = self.map.clone();
        for k in keys {
            map.remove(*k);
        }
        Config { map }
    }
}

/// Shared geometry resolution: 0 < a < 1 and L > 0, with a warning near the
/// degenerate lengths L = tan L where the characteristic problem collapses.
pub fn resolve_geometry(cfg: &mut Config) -> Result<(f64, f64)> {
    let l = cfg.resolve_f64("l", 1.0)?;
    let a = cfg.resolve_f64("a", 0.5)?;
    if !(l > 0.0) {
        return Err(CliError::Config(format!("l = {l} must be positive")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(CliError::Config(format!("a = {a} must lie strictly inside (0, 1)")));
    }
    if (l - l.tan()).abs() < 1e-4 {
        eprintln!(
            "warning: L = {l} is near a root of L = tan L; the characteristic problem degenerates there"
        );
    }
    Ok((l, a))
}

/// Validates a decay-line key against the admissible interval below the
/// asymptotic pole line.
pub fn check_beta(key: &str, beta: f64, l: f64, a: f64) -> Result<()> {
    let line = kgstab_core::spectral::asymptotic_line(l, a);
    let top = 0.98 * line;
    if !(beta > 0.0 && beta < top) {
        return Err(CliError::Config(format!(
            "{key} = {beta} outside the admissible interval (0, {top:.6}) below the asymptotic line {line:.6}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw<'c>(cfg: &'c Config, key: &str) -> Option<&'c str> {
        cfg.map.get(key).map(|s| s.as_str())
    }

    #[test]
    fn flat_file_parses_comments_and_whitespace() {
        let text = "# header\n l = 2.0  # trailing\n\n a=0.25\n";
        let cfg = Config::parse_flat(text, Path::new("test.cfg")).unwrap();
        assert_eq!(raw(&cfg, "l"), Some("2.0"));
        assert_eq!(raw(&cfg, "a"), Some("0.25"));
    }

    #[test]
    fn malformed_line_is_a_config_error() {
        let err = Config::parse_flat("just words\n", Path::new("x")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn summary_json_yields_the_embedded_config() {
        let text = r#"{"scenario":"poles","config":{"l":"2e0","n":"801"},"results":{}}"#;
        let cfg = Config::from_summary_json(text, Path::new("s.json")).unwrap();
        assert_eq!(raw(&cfg, "l"), Some("2e0"));
        assert_eq!(raw(&cfg, "n"), Some("801"));
    }

    #[test]
    fn resolve_canonicalizes_and_records() {
        let mut cfg = Config::new();
        cfg.set("l", "2");
        let l = cfg.resolve_f64("l", 1.0).unwrap();
        assert_eq!(l, 2.0);
        let beta = cfg.resolve_f64("beta", 0.25).unwrap();
        assert_eq!(beta, 0.25);
        // canonical 17-digit forms reparse to the same bits
        assert_eq!(raw(&cfg, "l").unwrap().parse::<f64>().unwrap(), 2.0);
        assert_eq!(raw(&cfg, "beta").unwrap(), &fmt_f64(0.25));
    }

    #[test]
    fn canonical_float_form_round_trips() {
        for v in [1.0 / 3.0, 0.95 * 0.549306144334055, 1e-300, 6.02e23] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn geometry_domain_is_enforced() {
        let mut cfg = Config::new();
        cfg.set("a", "1.5");
        assert_eq!(resolve_geometry(&mut cfg).unwrap_err().exit_code(), 2);
        let mut cfg = Config::new();
        cfg.set("l", "-1");
        assert_eq!(resolve_geometry(&mut cfg).unwrap_err().exit_code(), 2);
    }
}
