//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers, `#` comments, comma lists and inclusive `start:stop:step` ranges.
//!
//! ```text
//! [scenario]
//! K_R_db = 0, 5
//! c0 = 0.1
//! [layout]
//! n_p = 32
//! delta = 0.02, 0.1, 0.5
//! [budget]
//! snr_db = 0:40:2
//! [run]
//! num_trials = 1000
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hstlink::channel::PilotLayout;
use hstlink::metrics::LogBase;
use hstlink::montecarlo::DetectorCsi;
use hstlink::numerics::{DEFAULT_CLOSED_NODES, DEFAULT_SEMI_INFINITE_NODES};
use hstlink::tradeoff::DEFAULT_L_MAX;
use hstlink::{AnalysisSettings, ScenarioParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analyze,
    Mc,
    Tradeoff,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Analyze => "analyze",
            Mode::Mc => "mc",
            Mode::Tradeoff => "tradeoff",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "analyze" => Some(Mode::Analyze),
            "mc" => Some(Mode::Mc),
            "tradeoff" => Some(Mode::Tradeoff),
            _ => None,
        }
    }
}

/// Fully resolved experiment. Decibel values are kept as given; conversion to
/// linear happens in the accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k_r_db: Vec<f64>,
    pub c0: f64,
    pub antenna_spacing: f64,
    pub speed: f64,
    pub wavelength: f64,
    pub aoa_width: f64,
    pub aoa_mean: f64,
    pub heading: f64,
    pub n_p: usize,
    pub deltas: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub mode: Option<Mode>,
    pub num_trials: usize,
    pub base_seed: u64,
    pub detector: DetectorCsi,
    pub output: Option<PathBuf>,
    pub closed_nodes: usize,
    pub semi_infinite_nodes: usize,
    pub log_base: LogBase,
    pub l_max: usize,
    /// Keys taken from defaults rather than the file.
    pub defaulted: BTreeSet<&'static str>,
}

/// Keys whose defaults are not fixed by the modeled system and are flagged
/// in the echo.
const NONPAPER: &[&str] = &["D", "v", "wavelength", "kappa", "mu", "heading", "snr_db"];

const KEYS: &[(&str, &str)] = &[
    ("scenario", "K_R_db"),
    ("scenario", "c0"),
    ("scenario", "D"),
    ("scenario", "v"),
    ("scenario", "wavelength"),
    ("scenario", "kappa"),
    ("scenario", "mu"),
    ("scenario", "heading"),
    ("layout", "n_p"),
    ("layout", "delta"),
    ("layout", "L"),
    ("budget", "snr_db"),
    ("run", "mode"),
    ("run", "num_trials"),
    ("run", "base_seed"),
    ("run", "detector"),
    ("run", "output"),
    ("run", "closed_nodes"),
    ("run", "semi_infinite_nodes"),
    ("run", "log_base"),
    ("run", "l_max"),
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_r_db: vec![0.0, 5.0],
            c0: 0.1,
            antenna_spacing: 0.5,
            speed: 100.0,
            wavelength: 0.1,
            aoa_width: 0.0,
            aoa_mean: 0.0,
            heading: 0.0,
            n_p: 32,
            deltas: vec![0.02, 0.1, 0.5],
            snr_db: (0..=20).map(|i| 2.0 * i as f64).collect(),
            mode: None,
            num_trials: 1000,
            base_seed: 1,
            detector: DetectorCsi::Estimated,
            output: None,
            closed_nodes: DEFAULT_CLOSED_NODES,
            semi_infinite_nodes: DEFAULT_SEMI_INFINITE_NODES,
            log_base: LogBase::Bits,
            l_max: DEFAULT_L_MAX,
            defaulted: BTreeSet::new(),
        }
    }
}

fn cfg_err(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| cfg_err(key, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(cfg_err(key, "must be finite"));
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| cfg_err(key, format!("`{s}` is not a non-negative integer")))
}

/// Comma list whose items are numbers or inclusive `start:stop:step` ranges.
pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(cfg_err(key, "empty list item"));
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_f64(key, v)?),
            [a, b, step] => {
                let (a, b, step) = (parse_f64(key, a)?, parse_f64(key, b)?, parse_f64(key, step)?);
                if step <= 0.0 || b < a {
                    return Err(cfg_err(key, format!("range `{item}` needs start <= stop and step > 0")));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(cfg_err(key, "range has too many points"));
                }
                out.extend((0..=n).map(|i| a + i as f64 * step));
            }
            _ => return Err(cfg_err(key, format!("`{item}` is neither a number nor start:stop:step"))),
        }
    }
    Ok(out)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: BTreeSet<&'static str> = BTreeSet::new();
        let mut section: Option<String> = None;
        let mut l_list: Option<Vec<f64>> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(cfg_err(name, format!("unknown section on line {}", lineno + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(line, format!("line {} is not `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| cfg_err(key, "key appears before any [section]"))?;
            let &(_, key) = KEYS
                .iter()
                .find(|(s, k)| *s == sec && *k == key)
                .ok_or_else(|| cfg_err(key, format!("unknown key in [{sec}]")))?;
            if !seen.insert(key) {
                return Err(cfg_err(key, "given more than once"));
            }
            match key {
                "K_R_db" => cfg.k_r_db = parse_list(key, value)?,
                "c0" => cfg.c0 = parse_f64(key, value)?,
                "D" => cfg.antenna_spacing = parse_f64(key, value)?,
                "v" => cfg.speed = parse_f64(key, value)?,
                "wavelength" => cfg.wavelength = parse_f64(key, value)?,
                "kappa" => cfg.aoa_width = parse_f64(key, value)?,
                "mu" => cfg.aoa_mean = parse_f64(key, value)?,
                "heading" => cfg.heading = parse_f64(key, value)?,
                "n_p" => cfg.n_p = parse_int(key, value)?,
                "delta" => cfg.deltas = parse_list(key, value)?,
                "L" => l_list = Some(parse_list(key, value)?),
                "snr_db" => cfg.snr_db = parse_list(key, value)?,
                "mode" => {
                    cfg.mode = Some(Mode::parse(value).ok_or_else(|| {
                        cfg_err(key, format!("expected analyze, mc or tradeoff, got `{value}`"))
                    })?)
                }
                "num_trials" => cfg.num_trials = parse_int(key, value)?,
                "base_seed" => cfg.base_seed = parse_int(key, value)?,
                "detector" => cfg.detector = value.parse().map_err(|e: hstlink::Error| cfg_err(key, e.to_string()))?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                "closed_nodes" => cfg.closed_nodes = parse_int(key, value)?,
                "semi_infinite_nodes" => cfg.semi_infinite_nodes = parse_int(key, value)?,
                "log_base" => cfg.log_base = value.parse().map_err(|e: hstlink::Error| cfg_err(key, e.to_string()))?,
                "l_max" => cfg.l_max = parse_int(key, value)?,
                _ => unreachable!("key table and match arms agree"),
            }
        }

        if let Some(ls) = l_list {
            if seen.contains("delta") {
                return Err(cfg_err("L", "give either delta or L, not both"));
            }
            cfg.deltas = ls
                .iter()
                .map(|&l| {
                    if l < 1.0 || l.fract() != 0.0 {
                        Err(cfg_err("L", format!("{l} is not a positive integer")))
                    } else {
                        Ok(1.0 / (l + 1.0))
                    }
                })
                .collect::<Result<_, _>>()?;
            seen.insert("delta");
        }
        cfg.defaulted = KEYS
            .iter()
            .map(|&(_, k)| k)
            .filter(|k| *k != "L" && !seen.contains(k))
            .collect();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every value the core modules would reject, so that such
    /// problems surface as configuration errors.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k_r_db.is_empty() {
            return Err(cfg_err("K_R_db", "list is empty"));
        }
        for &k in &self.k_r_db {
            self.scenario(k).validate().map_err(|e| core_to_cfg(&e))?;
        }
        if self.n_p == 0 {
            return Err(cfg_err("n_p", "must be at least 1"));
        }
        if self.deltas.is_empty() {
            return Err(cfg_err("delta", "list is empty"));
        }
        for &d in &self.deltas {
            PilotLayout::l_for_delta(d).map_err(|e| cfg_err("delta", e.to_string()))?;
        }
        if self.snr_db.is_empty() {
            return Err(cfg_err("snr_db", "list is empty"));
        }
        if self.num_trials == 0 {
            return Err(cfg_err("num_trials", "must be at least 1"));
        }
        if self.closed_nodes == 0 {
            return Err(cfg_err("closed_nodes", "must be at least 1"));
        }
        if self.semi_infinite_nodes == 0 {
            return Err(cfg_err("semi_infinite_nodes", "must be at least 1"));
        }
        if self.l_max == 0 {
            return Err(cfg_err("l_max", "must be at least 1"));
        }
        Ok(())
    }

    /// Scenario in linear units for one Rician factor given in dB.
    pub fn scenario(&self, k_r_db: f64) -> ScenarioParams {
        ScenarioParams {
            rician_factor: db_to_linear(k_r_db),
            scatter_decay: self.c0,
            antenna_spacing: self.antenna_spacing,
            speed: self.speed,
            wavelength: self.wavelength,
            aoa_width: self.aoa_width,
            aoa_mean: self.aoa_mean,
            heading: self.heading,
            num_antennas: 1,
        }
    }

    pub fn snr_linear(snr_db: f64) -> f64 {
        db_to_linear(snr_db)
    }

    pub fn settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            closed_nodes: self.closed_nodes,
            semi_infinite_nodes: self.semi_infinite_nodes,
            log_base: self.log_base,
        }
    }

    /// Resolved configuration as a parseable file. Defaulted keys carry a
    /// `# default` comment, and `NONPAPER` when the value is a free choice
    /// rather than part of the modeled system.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for &(sec, key) in KEYS {
            let value = match key {
                "K_R_db" => join(&self.k_r_db),
                "c0" => self.c0.to_string(),
                "D" => self.antenna_spacing.to_string(),
                "v" => self.speed.to_string(),
                "wavelength" => self.wavelength.to_string(),
                "kappa" => self.aoa_width.to_string(),
                "mu" => self.aoa_mean.to_string(),
                "heading" => self.heading.to_string(),
                "n_p" => self.n_p.to_string(),
                "delta" => join(&self.deltas),
                "snr_db" => join(&self.snr_db),
                "mode" => match self.mode {
                    Some(m) => m.as_str().to_string(),
                    None => continue,
                },
                "num_trials" => self.num_trials.to_string(),
                "base_seed" => self.base_seed.to_string(),
                "detector" => self.detector.as_str().to_string(),
                "output" => match &self.output {
                    Some(p) => p.display().to_string(),
                    None => continue,
                },
                "closed_nodes" => self.closed_nodes.to_string(),
                "semi_infinite_nodes" => self.semi_infinite_nodes.to_string(),
                "log_base" => self.log_base.as_str().to_string(),
                "l_max" => self.l_max.to_string(),
                _ => continue,
            };
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                section = sec;
            }
            let _ = write!(out, "{key} = {value}");
            if self.defaulted.contains(key) {
                out.push_str("  # default");
                if NONPAPER.contains(&key) {
                    out.push_str(" NONPAPER");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn core_to_cfg(e: &hstlink::Error) -> CliError {
    let key = match e {
        hstlink::Error::InvalidParameter { name, .. } => match *name {
            "rician_factor" => "K_R_db",
            "scatter_decay" => "c0",
            "antenna_spacing" => "D",
            "speed" => "v",
            "aoa_width" => "kappa",
            "aoa_mean" => "mu",
            other => other,
        },
        _ => "scenario",
    };
    cfg_err(key, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_list("x", "0:4:2").unwrap(), vec![0.0, 2.0, 4.0]);
        assert_eq!(parse_list("x", "1, 3:4:0.5").unwrap(), vec![1.0, 3.0, 3.5, 4.0]);
        assert_eq!(parse_list("x", "0:0.3:0.1").unwrap().len(), 4);
        assert!(parse_list("x", "1,,2").is_err());
        assert!(parse_list("x", "4:0:1").is_err());
        assert!(parse_list("x", "a").is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::parse("[scenario]\nK_R_db = 3 # comment\n[run]\nmode = mc\n").unwrap();
        assert_eq!(c.k_r_db, vec![3.0]);
        assert_eq!(c.mode, Some(Mode::Mc));
        assert!(c.defaulted.contains("c0") && !c.defaulted.contains("K_R_db"));
        assert_eq!(c.snr_db.len(), 21);
        assert_eq!(c.snr_db[20], 40.0);
    }

    #[test]
    fn errors_name_the_key() {
        let key = |text: &str| match ExperimentConfig::parse(text) {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(key("[scenario]\nfoo = 1\n"), "foo");
        assert_eq!(key("[run]\nnum_trials = 0\n"), "num_trials");
        assert_eq!(key("[layout]\ndelta = 0.3\n"), "delta");
        assert_eq!(key("[layout]\ndelta = 0.5\nL = 1\n"), "L");
        assert_eq!(key("[scenario]\nD = -1\n"), "D");
        assert_eq!(key("[bogus]\n"), "bogus");
        assert_eq!(key("c0 = 1\n"), "c0");
        assert_eq!(key("[run]\nmode = plot\n"), "mode");
        assert_eq!(key("[run]\nl_max = 1\nl_max = 2\n"), "l_max");
    }

    #[test]
    fn l_list_maps_to_delta() {
        let c = ExperimentConfig::parse("[layout]\nL = 1, 9\n").unwrap();
        assert_eq!(c.deltas, vec![0.5, 0.1]);
    }

    #[test]
    fn echo_round_trips() {
        let text = "[scenario]\nK_R_db = 0\nmu = 0.3\n[layout]\nL = 4, 7\n[budget]\nsnr_db = 0:10:2.5\n[run]\nmode = mc\noutput = out.csv\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let echo = c.echo();
        assert!(echo.contains("D = 0.5  # default NONPAPER"));
        assert!(echo.contains("n_p = 32  # default\n"));
        let back = ExperimentConfig::parse(&echo).unwrap();
        let mut a = c.clone();
        let mut b = back;
        a.defaulted.clear();
        b.defaulted.clear();
        assert_eq!(a, b);
    }
}
