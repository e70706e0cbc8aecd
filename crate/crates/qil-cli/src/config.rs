//! Plain-text key=value configuration files with command-line overrides
//! (flags win). Keys mirror the long flag names with underscores.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn from_file(path: &Path) -> Result<KeyValues, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected key=value, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KeyValues { values })
    }

    /// Flag overrides: a `Some` flag value replaces the file entry.
    pub fn set_override(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.parse(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }
}

/// Inclusive grid specification: either `start:end:count` or an explicit
/// comma-separated list. Must be strictly increasing with at least two
/// points.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>, CliError> {
    let grid: Vec<f64> = if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "grid `{raw}`: expected start:end:count"
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| CliError::Config(format!("grid start `{}`", parts[0])))?;
        let end: f64 = parts[1]
            .parse()
            .map_err(|_| CliError::Config(format!("grid end `{}`", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| CliError::Config(format!("grid count `{}`", parts[2])))?;
        if count < 2 {
            return Err(CliError::Config("grid needs at least two points".into()));
        }
        (0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("grid value `{s}`")))
            })
            .collect::<Result<Vec<f64>, CliError>>()?
    };
    if grid.len() < 2 {
        return Err(CliError::Config("grid needs at least two points".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Config("grid must be strictly increasing".into()));
    }
    Ok(grid)
}

/// Qubit amplitudes from `re0,im0,re1,im1` (or the `re0,re1` shorthand).
pub fn parse_chi(raw: &str) -> Result<qil_core::QubitAmplitudes, CliError> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("qubit amplitude `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    let (c0, c1) = match parts.as_slice() {
        [a, b] => (
            num_complex::Complex64::new(*a, 0.0),
            num_complex::Complex64::new(*b, 0.0),
        ),
        [a, b, c, d] => (
            num_complex::Complex64::new(*a, *b),
            num_complex::Complex64::new(*c, *d),
        ),
        _ => {
            return Err(CliError::Config(format!(
                "qubit state `{raw}`: expected 2 or 4 comma-separated reals"
            )))
        }
    };
    qil_core::QubitAmplitudes::normalized(c0, c1)
        .map_err(|e| CliError::Config(format!("qubit state `{raw}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        let g = parse_grid("0.0:1.0:5").unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = parse_grid("0.1, 0.2, 0.9").unwrap();
        assert_eq!(g.len(), 3);
        assert!(parse_grid("1.0:0.0:5").is_err());
        assert!(parse_grid("0.5").is_err());
        assert!(parse_grid("0:1:1").is_err());
    }

    #[test]
    fn chi_forms() {
        let chi = parse_chi("1,0").unwrap();
        assert!((chi.chi0.re - 1.0).abs() < 1e-12);
        let chi = parse_chi("1,0,0,1").unwrap();
        assert!((chi.chi1.im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(parse_chi("1,2,3").is_err());
        assert!(parse_chi("0,0").is_err());
    }
}
