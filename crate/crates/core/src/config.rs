//! Structured text configuration: `[section]` headers and `key = value`
//! lines, `#` comments. Values are parsed on lookup so the CLI can give
//! line-numbered messages for the exact offending entry.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    // section -> key -> (raw value, line number)
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("malformed section header `{raw}`"),
                    });
                }
                section = line[1..line.len() - 1].trim().to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `key = value`, got `{raw}`"),
                });
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "empty key".to_string(),
                });
            }
            let dup = cfg
                .sections
                .entry(section.clone())
                .or_default()
                .insert(key.to_string(), (value.to_string(), line_no));
            if let Some((_, first)) = dup {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}` (first at line {first})"),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(|s| s.as_str())
    }

    pub fn get_raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.sections
            .get(section)
            .and_then(|m| m.get(key))
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get_raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| Error::Parse {
                line,
                msg: format!(
                    "cannot parse `{v}` for key `{key}` as {}",
                    std::any::type_name::<T>()
                ),
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.parsed(section, key)
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.parsed(section, key)
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.parsed(section, key)
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.get_raw(section, key).map(|(v, _)| v)
    }

    /// Comma-separated list of floats.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get_raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("cannot parse list item `{}` in `{key}`", s.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let text = "\
# experiment setup
[model]
d = 3
alpha = 0.25
r = 1.0

[sim]
step_h = 0.001
ladder = 4, 8, 16
";
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.get_usize("model", "d").unwrap(), Some(3));
        assert_eq!(cfg.get_f64("model", "alpha").unwrap(), Some(0.25));
        assert_eq!(
            cfg.get_f64_list("sim", "ladder").unwrap(),
            Some(vec![4.0, 8.0, 16.0])
        );
        assert_eq!(cfg.get_f64("sim", "absent").unwrap(), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ConfigFile::parse("[model]\nd == 3dge\nbroken").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
        // values are parsed on lookup, carrying the defining line
        let cfg = ConfigFile::parse("[model]\nd = 3x").unwrap();
        let err = cfg.get_usize("model", "d").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = ConfigFile::parse("[m]\na = 1\na = 2").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
