//! Flat key-value config files and angle/time literal parsing.
//!
//! Precedence for every parameter: CLI flag (or its `MECHSIM_*` environment
//! variable, handled by clap) > config file > built-in default. Times and
//! angles accept `pi` literals: `pi`, `1.5pi`, `3pi/2`, or a plain float.

use std::path::Path;

use crate::error::CliError;

/// Parses `pi`-aware numeric literals.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => {
            let den: f64 = d
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {s:?}"))?;
            (n.trim(), den)
        }
        None => (s, 1.0),
    };
    let value = if let Some(coeff) = num.strip_suffix("pi") {
        let c = coeff.trim();
        let c: f64 = if c.is_empty() {
            1.0
        } else {
            c.parse().map_err(|_| format!("bad pi coefficient in {s:?}"))?
        };
        c * std::f64::consts::PI
    } else {
        num.parse().map_err(|_| format!("{s:?} is not a number"))?
    };
    if den == 0.0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(value / den)
}

/// Flat `key = value` config file; later duplicates win. Comments start
/// with `#`.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    entries: Vec<(String, String)>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("config line {}: expected key = value, got {raw:?}", idx + 1))
            })?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(FileConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Flag value if present, else the config-file value, else the default.
    pub fn resolve_f64(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => parse_angle(raw)
                .map_err(|e| CliError::Validation(format!("config key {key}: {e}"))),
            None => Ok(default),
        }
    }

    /// As [`resolve_f64`](Self::resolve_f64) but without a default.
    pub fn resolve_opt_f64(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            Some(raw) => parse_angle(raw)
                .map(Some)
                .map_err(|e| CliError::Validation(format!("config key {key}: {e}"))),
            None => Ok(None),
        }
    }

    pub fn resolve_usize(
        &self,
        flag: Option<usize>,
        key: &str,
        default: usize,
    ) -> Result<usize, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Validation(format!("config key {key}: {raw:?} is not an integer"))),
            None => Ok(default),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_literals() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("1.5pi").unwrap(), 1.5 * PI);
        assert_eq!(parse_angle("3pi/2").unwrap(), 1.5 * PI);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("1e-3").unwrap(), 1e-3);
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn file_parsing_and_precedence() {
        let cfg = FileConfig::parse("# comment\nlambda = 0.1\nt = pi\nlambda = 0.2\n").unwrap();
        assert_eq!(cfg.get("lambda"), Some("0.2"));
        assert_eq!(cfg.resolve_f64(None, "t", 0.0).unwrap(), PI);
        assert_eq!(cfg.resolve_f64(Some(0.3), "lambda", 0.0).unwrap(), 0.3);
        assert_eq!(cfg.resolve_f64(None, "gamma", 0.05).unwrap(), 0.05);
    }

    #[test]
    fn malformed_file_names_line() {
        let err = FileConfig::parse("lambda 0.1").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }
}
