//! Parameter resolution: built-in per-command defaults, then the config file, then
//! command-line flags. The resolved table is what the CSV metadata echoes, so
//! it must hold everything that influences the output.

use std::fs;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Dist,
    BlerVsU,
    BlerVsSnr,
    BlerVsN,
    BlerVsW,
    OpVsSnr,
    OpVsU,
    QuadCheck,
}

const ALL: [Kind; 8] = [
    Kind::Dist,
    Kind::BlerVsU,
    Kind::BlerVsSnr,
    Kind::BlerVsN,
    Kind::BlerVsW,
    Kind::OpVsSnr,
    Kind::OpVsU,
    Kind::QuadCheck,
];

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Dist => "dist",
            Kind::BlerVsU => "bler-vs-u",
            Kind::BlerVsSnr => "bler-vs-snr",
            Kind::BlerVsN => "bler-vs-n",
            Kind::BlerVsW => "bler-vs-w",
            Kind::OpVsSnr => "op-vs-snr",
            Kind::OpVsU => "op-vs-u",
            Kind::QuadCheck => "quad-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Kind> {
        ALL.into_iter().find(|k| k.name() == name)
    }

    /// Accepted keys, in echo order, with their defaults.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Kind::Dist => &[
                ("ports", "10"),
                ("width", "0.5"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("t_max", "12"),
                ("points", "120"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::BlerVsU => &[
                ("users", "1:1:20"),
                ("ports", "5,50"),
                ("width", "1"),
                ("blocklength", "5"),
                ("snr_db", "20"),
                ("mrc", "1,2"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::BlerVsSnr => &[
                ("snr_db", "0:2:30"),
                ("ports", "5,50,1000"),
                ("width", "0.5"),
                ("users", "10"),
                ("blocklength", "5"),
                ("mrc", "1,2"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::BlerVsN => &[
                ("ports", "5,10,20,50,100,200,500,1000,2000,5000"),
                ("width", "1"),
                ("users", "10"),
                ("blocklength", "5"),
                ("snr_db", "12"),
                ("mrc", "1,2"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::BlerVsW => &[
                ("width", "0.25:0.25:5"),
                ("ports", "5000"),
                ("users", "10"),
                ("blocklength", "5"),
                ("snr_db", "12"),
                ("mrc", "1,2"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::OpVsSnr => &[
                ("snr_db", "-40:2:0"),
                ("ports", "5,50,500"),
                ("width", "0.5"),
                ("users", "20"),
                ("blocklength", "5"),
                ("gamma_th", "1e-3"),
                ("mrc", "1,3,5"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::OpVsU => &[
                ("users", "1:1:40"),
                ("ports", "5,50,500,1000"),
                ("width", "0.5"),
                ("blocklength", "5"),
                ("snr_db", "-35"),
                ("gamma_th", "1e-4"),
                ("mrc", "1,3,5"),
                ("sigma2", "2"),
                ("mu2", "0.97"),
                ("quad_order", "32"),
                ("samples", "100000"),
                ("seed", "1"),
            ],
            Kind::QuadCheck => &[
                ("mu", "0.1,0.3,0.5,0.7,0.9,0.97"),
                ("lb", "3"),
                ("sigma2", "2"),
                ("quad_order", "32"),
                ("t_max", "10"),
                ("points", "50"),
            ],
        }
    }
}

/// Resolved parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub kind: Kind,
    values: Vec<(&'static str, String)>,
}

impl Settings {
    /// Defaults, overlaid by `config` entries, overlaid by `overrides`.
    pub fn resolve(
        kind: Kind,
        config: &[(String, String)],
        overrides: &[(&'static str, String)],
    ) -> Result<Self, CliError> {
        let mut values: Vec<(&'static str, String)> = kind
            .defaults()
            .iter()
            .map(|&(k, v)| (k, v.to_string()))
            .collect();
        let layers = config
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str(), "config file"))
            .chain(overrides.iter().map(|(k, v)| (*k, v.as_str(), "command line")));
        for (key, value, source) in layers {
            let (key, value) = translate(kind, key, value)?;
            let slot = values
                .iter_mut()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| CliError::usage(format!("`{key}` ({source}) does not apply to {}", kind.name())))?;
            slot.1 = value.trim().to_string();
        }
        Ok(Self { kind, values })
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("{key} is not a parameter of {}", self.kind.name()))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        parse_f64(key, self.raw(key))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        parse_usize(key, self.raw(key))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::usage(format!("`{key}` must be a non-negative integer, got `{}`", self.raw(key))))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_list(key, self.raw(key), |s| parse_f64(key, s), |lo, step, hi| float_range(key, lo, step, hi))
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        parse_list(key, self.raw(key), |s| parse_usize(key, s), |lo, step, hi| usize_range(key, lo, step, hi))
    }

    /// Metadata lines `# key = value` in table order, preceded by the command.
    pub fn to_metadata(&self) -> String {
        let mut out = format!("# fblfas {}\n", self.kind.name());
        for (k, v) in &self.values {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    /// Recovers the settings from the metadata block of a CSV written by
    /// [`Settings::to_metadata`]. Other comment lines are ignored.
    pub fn from_metadata(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines().take_while(|l| l.starts_with('#'));
        let command = lines
            .next()
            .and_then(|l| l.strip_prefix("# fblfas "))
            .ok_or_else(|| CliError::usage("CSV has no `# fblfas <command>` metadata line"))?;
        let kind = Kind::from_name(command.trim())
            .ok_or_else(|| CliError::usage(format!("unknown command `{command}` in metadata")))?;
        let entries: Vec<(String, String)> = lines
            .filter_map(|l| l.strip_prefix("# "))
            .filter(|l| !l.starts_with("note:"))
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self::resolve(kind, &entries, &[])
    }
}

/// Reads a flat `key = value` file. `#` starts a comment line; dashes in
/// keys are accepted as underscores.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut entries = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("{}:{}: expected `key = value`", path.display(), number + 1))
        })?;
        entries.push((key.trim().replace('-', "_"), value.trim().to_string()));
    }
    Ok(entries)
}

/// quad-check is parameterised by `mu`; a `mu2` setting is accepted as its
/// square so that every command honours `--mu2`.
fn translate<'a>(kind: Kind, key: &'a str, value: &'a str) -> Result<(&'a str, String), CliError> {
    if kind == Kind::QuadCheck && key == "mu2" {
        let mu2 = parse_f64("mu2", value)?;
        if !(mu2 > 0.0 && mu2 < 1.0) {
            return Err(CliError::usage(format!("`mu2` must lie in (0, 1), got {mu2}")));
        }
        return Ok(("mu", format!("{}", mu2.sqrt())));
    }
    Ok((key, value.to_string()))
}

fn parse_f64(key: &str, text: &str) -> Result<f64, CliError> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::usage(format!("`{key}` must be a finite number, got `{text}`"))),
    }
}

fn parse_usize(key: &str, text: &str) -> Result<usize, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("`{key}` must be a non-negative integer, got `{text}`")))
}

fn parse_list<T>(
    key: &str,
    text: &str,
    item: impl Fn(&str) -> Result<T, CliError>,
    range: impl Fn(T, T, T) -> Result<Vec<T>, CliError>,
) -> Result<Vec<T>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [lo, step, hi] => range(item(lo)?, item(step)?, item(hi)?)?,
        [_] => text.split(',').map(&item).collect::<Result<Vec<T>, _>>()?,
        _ => return Err(CliError::usage(format!("`{key}` must be `a,b,...` or `start:step:stop`, got `{text}`"))),
    };
    if values.is_empty() {
        return Err(CliError::usage(format!("`{key}` is empty")));
    }
    Ok(values)
}

/// `start, start + step, ...` up to `stop` inclusive, each value computed
/// from its index so no rounding accumulates.
fn float_range(key: &str, lo: f64, step: f64, hi: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || hi < lo {
        return Err(CliError::usage(format!("`{key}` range needs step > 0 and stop >= start")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(CliError::usage(format!("`{key}` range has too many points")));
    }
    Ok((0..=count).map(|k| lo + k as f64 * step).collect())
}

fn usize_range(key: &str, lo: usize, step: usize, hi: usize) -> Result<Vec<usize>, CliError> {
    if step == 0 || hi < lo {
        return Err(CliError::usage(format!("`{key}` range needs step > 0 and stop >= start")));
    }
    Ok((lo..=hi).step_by(step).collect())
}
