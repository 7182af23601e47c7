//! `key = value` config files and the flag/file/default precedence used by
//! the CLI.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment, blank lines are fine.
pub fn parse_kv(text: &str) -> std::result::Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// A value source honoring flag > config file > built-in default.
pub struct Resolver {
    file: BTreeMap<String, String>,
    /// The resolved values, recorded for the config echo.
    pub resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config_path: Option<&Path>) -> Result<Self> {
        let file = match config_path {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_kv(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        Ok(Resolver { file, resolved: BTreeMap::new() })
    }

    /// Resolves one key; `flag` wins, then the config file, then `default`.
    pub fn get<T: std::str::FromStr + std::fmt::Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T> {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|_| Error::Config(format!("config key `{key}`: cannot parse `{raw}`")))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), format!("{value}"));
        Ok(value)
    }

    /// Boolean keys: flags are presence-only, so `true` from the flag wins,
    /// otherwise the file value, otherwise false.
    pub fn get_flag(&mut self, key: &str, flag: bool) -> Result<bool> {
        let value = if flag {
            true
        } else {
            match self.file.get(key) {
                Some(raw) => raw
                    .parse::<bool>()
                    .map_err(|_| Error::Config(format!("config key `{key}`: cannot parse `{raw}`")))?,
                None => false,
            }
        };
        self.resolved.insert(key.to_string(), format!("{value}"));
        Ok(value)
    }

    /// The resolved configuration as deterministic `key = value` text.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.resolved {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let kv = parse_kv("a = 1\n\n# note\nb = two # inline\n").unwrap();
        assert_eq!(kv.get("a").unwrap(), "1");
        assert_eq!(kv.get("b").unwrap(), "two");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_kv("just words\n").is_err());
    }

    #[test]
    fn precedence_flag_over_file_over_default() {
        let dir = std::env::temp_dir().join("sct-config-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.txt");
        std::fs::write(&path, "ratio = 8\nseed = 5\n").unwrap();
        let mut r = Resolver::new(Some(&path)).unwrap();
        assert_eq!(r.get("ratio", Some(16usize), 4).unwrap(), 16); // flag wins
        assert_eq!(r.get("seed", None::<u64>, 0).unwrap(), 5); // file wins
        assert_eq!(r.get("epochs", None::<usize>, 4).unwrap(), 4); // default
        let echo = r.echo();
        assert!(echo.contains("ratio = 16"));
        assert!(echo.contains("seed = 5"));
        assert!(echo.contains("epochs = 4"));
    }
}
