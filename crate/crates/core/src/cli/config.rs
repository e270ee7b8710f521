//! Run configuration: a flat `key = value` file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::fisher::DerivativeMethod;
use crate::global_metric::QuadratureOptions;
use crate::probe_optimizer::Bracket;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    SweepG1d,
    Scaling,
    Optimize2d,
    Efficiency,
    QfiPoint,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepG1d => "sweep-g1d",
            Command::Scaling => "scaling",
            Command::Optimize2d => "optimize-2d",
            Command::Efficiency => "efficiency",
            Command::QfiPoint => "qfi-point",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "sweep-g1d" => Command::SweepG1d,
            "scaling" => Command::Scaling,
            "optimize-2d" => Command::Optimize2d,
            "efficiency" => Command::Efficiency,
            "qfi-point" => Command::QfiPoint,
            _ => return err(format!("unknown command '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    FreeFermion,
    ExactDiag,
    Mock,
}

impl EngineKind {
    fn name(&self) -> &'static str {
        match self {
            EngineKind::FreeFermion => "free_fermion",
            EngineKind::ExactDiag => "ed",
            EngineKind::Mock => "mock",
        }
    }
}

impl FromStr for EngineKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "free_fermion" | "ff" => EngineKind::FreeFermion,
            "ed" => EngineKind::ExactDiag,
            "mock" => EngineKind::Mock,
            _ => return err(format!("unknown engine '{s}' (expected free_fermion, ed or mock)")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeChoice {
    Auto,
    Perturbation,
    LinearResponse,
    FiniteDifference,
}

impl DerivativeChoice {
    fn name(&self) -> &'static str {
        match self {
            DerivativeChoice::Auto => "auto",
            DerivativeChoice::Perturbation => "pt",
            DerivativeChoice::LinearResponse => "lr",
            DerivativeChoice::FiniteDifference => "fd",
        }
    }

    pub fn method(&self, length: usize, fd_step: f64) -> DerivativeMethod {
        match self {
            DerivativeChoice::Auto => DerivativeMethod::auto(length),
            DerivativeChoice::Perturbation => DerivativeMethod::Perturbation,
            DerivativeChoice::LinearResponse => DerivativeMethod::LinearResponse,
            DerivativeChoice::FiniteDifference => DerivativeMethod::FiniteDifference { step: fd_step },
        }
    }
}

impl FromStr for DerivativeChoice {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "auto" => DerivativeChoice::Auto,
            "pt" => DerivativeChoice::Perturbation,
            "lr" => DerivativeChoice::LinearResponse,
            "fd" => DerivativeChoice::FiniteDifference,
            _ => return err(format!("unknown derivative method '{s}' (expected auto, pt, lr or fd)")),
        })
    }
}

/// Recognized keys. Energies are in units of J.
pub const KEYS: &[&str] = &[
    "command",
    "engine",
    "length",
    "lengths",
    "coupling",
    "derivative",
    "fd_step",
    "fidelity_step",
    "mock_qfi",
    "center_x",
    "center_z",
    "width_x",
    "width_z",
    "control_x",
    "control_z",
    "bx_min",
    "bx_max",
    "bx_step",
    "bz_min",
    "bz_max",
    "bz_step",
    "fold_mirror",
    "polish",
    "quad_nodes",
    "quad_max_nodes",
    "quad_tol",
    "grid_points",
    "cfi_step",
    "compare_x",
    "compare_z",
    "hz_min",
    "hz_max",
    "hz_step",
    "compare_ed",
    "threads",
];

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub engine: EngineKind,
    pub length: usize,
    /// Sizes for `scaling`.
    pub lengths: Vec<usize>,
    pub coupling: f64,
    pub derivative: DerivativeChoice,
    pub fd_step: f64,
    pub fidelity_step: f64,
    /// Constant QFI returned by the mock engine.
    pub mock_qfi: f64,
    /// Region centers `(h_x, h_z)`.
    pub center: [f64; 2],
    pub width: [f64; 2],
    /// Fixed control field `(B_x, B_z)` where one is needed.
    pub control: [f64; 2],
    pub bx: Bracket,
    pub bz: Bracket,
    pub fold_mirror: bool,
    pub polish: bool,
    pub quadrature: QuadratureOptions,
    pub grid_points: usize,
    pub cfi_step: f64,
    /// Control field of the comparison probe in `efficiency`.
    pub compare: [f64; 2],
    pub hz: Bracket,
    pub compare_ed: bool,
    pub threads: Option<usize>,
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected 'key = value', got '{}'", i + 1, raw.trim()));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return err(format!("line {}: empty key or value", i + 1));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return err(format!("line {}: duplicate key '{k}'", i + 1));
        }
    }
    Ok(map)
}

struct Reader<'a> {
    pairs: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.pairs.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError(format!("key '{key}': cannot parse '{v}'"))),
        }
    }

    fn parsed<T: FromStr<Err = ConfigError>>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.pairs.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: ConfigError| ConfigError(format!("key '{key}': {e}"))),
        }
    }

    fn finite(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.get(key, default)?;
        if !v.is_finite() {
            return err(format!("key '{key}' must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.finite(key, default)?;
        if v <= 0.0 {
            return err(format!("key '{key}' must be positive"));
        }
        Ok(v)
    }

    fn bracket(&self, prefix: &str, default: (f64, f64, f64)) -> Result<Bracket, ConfigError> {
        let lo = self.finite(&format!("{prefix}_min"), default.0)?;
        let hi = self.finite(&format!("{prefix}_max"), default.1)?;
        let step = self.positive(&format!("{prefix}_step"), default.2)?;
        if lo > hi {
            return err(format!("{prefix}_min must not exceed {prefix}_max"));
        }
        Ok(Bracket { lo, hi, resolution: step })
    }
}

impl RunConfig {
    /// Resolve a key/value map, filling command-specific defaults.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        if let Some(k) = pairs.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return err(format!("unknown key '{k}'"));
        }
        let r = Reader { pairs };
        let Some(command) = pairs.get("command") else {
            return err("no command given");
        };
        let command: Command = command.parse()?;
        let two_param = matches!(command, Command::Optimize2d | Command::Efficiency);
        let default_engine = if two_param { EngineKind::ExactDiag } else { EngineKind::FreeFermion };
        let engine = r.parsed("engine", default_engine)?;
        let default_length = match engine {
            EngineKind::ExactDiag => 10,
            _ => 1000,
        };
        let length: usize = r.get("length", default_length)?;
        let lengths = match pairs.get("lengths") {
            None => vec![64, 128, 256, 512, 1024],
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| ConfigError(format!("key 'lengths': cannot parse '{v}'")))?,
        };
        let bz_default = if two_param { (-2.0, 2.0, 0.05) } else { (-3.0, 3.0, 0.02) };
        let quad_default = QuadratureOptions::default();
        let threads = match pairs.get("threads") {
            None => None,
            Some(v) => Some(v.parse::<usize>().map_err(|_| ConfigError(format!("key 'threads': cannot parse '{v}'")))?),
        };
        let config = RunConfig {
            command,
            engine,
            length,
            lengths,
            coupling: r.positive("coupling", 1.0)?,
            derivative: r.parsed("derivative", DerivativeChoice::Auto)?,
            fd_step: r.positive("fd_step", crate::fisher::DEFAULT_STEP)?,
            fidelity_step: r.positive("fidelity_step", crate::free_fermion::DEFAULT_STEP)?,
            mock_qfi: r.positive("mock_qfi", 1.0)?,
            center: [r.finite("center_x", 0.0)?, r.finite("center_z", 0.0)?],
            width: [r.finite("width_x", 0.0)?, r.finite("width_z", 0.1)?],
            control: [r.finite("control_x", 0.0)?, r.finite("control_z", 0.0)?],
            bx: r.bracket("bx", (0.0, 3.0, 0.05))?,
            bz: r.bracket("bz", bz_default)?,
            fold_mirror: r.get("fold_mirror", true)?,
            polish: r.get("polish", true)?,
            quadrature: QuadratureOptions {
                initial_nodes: r.get("quad_nodes", quad_default.initial_nodes)?,
                max_nodes: r.get("quad_max_nodes", quad_default.max_nodes)?,
                rel_tol: r.positive("quad_tol", quad_default.rel_tol)?,
            },
            grid_points: r.get("grid_points", 11)?,
            cfi_step: r.positive("cfi_step", crate::fisher::DEFAULT_STEP)?,
            compare: [r.finite("compare_x", 0.0)?, r.finite("compare_z", 0.0)?],
            hz: r.bracket("hz", (0.0, 2.0, 0.05))?,
            compare_ed: r.get("compare_ed", false)?,
            threads,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.width.iter().any(|w| *w < 0.0) {
            return err("region widths must be non-negative");
        }
        let check_length = |l: usize| -> Result<(), ConfigError> {
            match self.engine {
                EngineKind::FreeFermion if l < 2 || l % 2 != 0 => {
                    err(format!("free-fermion engine needs an even length >= 2, got {l}"))
                }
                EngineKind::ExactDiag if !(2..=20).contains(&l) => {
                    err(format!("exact diagonalization supports 2 <= L <= 20, got {l}"))
                }
                _ if l < 2 => err(format!("length must be at least 2, got {l}")),
                _ => Ok(()),
            }
        };
        check_length(self.length)?;
        if self.command == Command::Scaling {
            if self.lengths.len() < 4 {
                return err("scaling needs at least 4 lengths");
            }
            let mut sorted = self.lengths.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.lengths.len() {
                return err("scaling lengths must be distinct");
            }
            for &l in &self.lengths {
                check_length(l)?;
            }
        }
        if self.quadrature.initial_nodes == 0 || self.quadrature.max_nodes < self.quadrature.initial_nodes {
            return err("quadrature needs 1 <= quad_nodes <= quad_max_nodes");
        }
        if self.grid_points == 0 {
            return err("grid_points must be at least 1");
        }
        if self.threads == Some(0) {
            return err("threads must be at least 1");
        }
        let two_param = matches!(self.command, Command::Optimize2d | Command::Efficiency);
        if two_param
            && self.engine != EngineKind::ExactDiag
            && !(self.command == Command::Optimize2d && self.engine == EngineKind::Mock)
        {
            return err(format!("{} needs the ed engine", self.command.name()));
        }
        if !two_param
            && self.engine == EngineKind::FreeFermion
            && (self.width[0] != 0.0 || self.center[0] != 0.0 || self.control[0] != 0.0)
        {
            return err("free-fermion engine needs center_x = width_x = control_x = 0");
        }
        if self.compare_ed && self.engine != EngineKind::FreeFermion {
            return err("compare_ed needs the free_fermion engine");
        }
        if self.compare_ed && self.length > 20 {
            return err("compare_ed needs length <= 20");
        }
        Ok(())
    }

    /// Canonical key/value echo; parsing it back gives an equal config.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("command", self.command.name().into());
        put("engine", self.engine.name().into());
        put("length", self.length.to_string());
        put("lengths", self.lengths.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
        put("coupling", self.coupling.to_string());
        put("derivative", self.derivative.name().into());
        put("fd_step", self.fd_step.to_string());
        put("fidelity_step", self.fidelity_step.to_string());
        put("mock_qfi", self.mock_qfi.to_string());
        put("center_x", self.center[0].to_string());
        put("center_z", self.center[1].to_string());
        put("width_x", self.width[0].to_string());
        put("width_z", self.width[1].to_string());
        put("control_x", self.control[0].to_string());
        put("control_z", self.control[1].to_string());
        put("bx_min", self.bx.lo.to_string());
        put("bx_max", self.bx.hi.to_string());
        put("bx_step", self.bx.resolution.to_string());
        put("bz_min", self.bz.lo.to_string());
        put("bz_max", self.bz.hi.to_string());
        put("bz_step", self.bz.resolution.to_string());
        put("fold_mirror", self.fold_mirror.to_string());
        put("polish", self.polish.to_string());
        put("quad_nodes", self.quadrature.initial_nodes.to_string());
        put("quad_max_nodes", self.quadrature.max_nodes.to_string());
        put("quad_tol", self.quadrature.rel_tol.to_string());
        put("grid_points", self.grid_points.to_string());
        put("cfi_step", self.cfi_step.to_string());
        put("compare_x", self.compare[0].to_string());
        put("compare_z", self.compare[1].to_string());
        put("hz_min", self.hz.lo.to_string());
        put("hz_max", self.hz.hi.to_string());
        put("hz_step", self.hz.resolution.to_string());
        put("compare_ed", self.compare_ed.to_string());
        if let Some(t) = self.threads {
            put("threads", t.to_string());
        }
        m
    }

    /// Echo as config-file text.
    pub fn to_text(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> BTreeMap<String, String> {
        parse_pairs(text).unwrap()
    }

    #[test]
    fn parses_comments_and_blank_lines() {
        let p = pairs("# probe\ncommand = sweep-g1d\n\nlength = 100  # sites\n");
        assert_eq!(p.len(), 2);
        assert_eq!(p["length"], "100");
        assert!(parse_pairs("length 100").is_err());
        assert!(parse_pairs("a = 1\na = 2").is_err());
    }

    #[test]
    fn defaults_depend_on_command() {
        let c = RunConfig::from_pairs(&pairs("command = sweep-g1d")).unwrap();
        assert_eq!((c.engine, c.length, c.bz.resolution), (EngineKind::FreeFermion, 1000, 0.02));
        let c = RunConfig::from_pairs(&pairs("command = optimize-2d")).unwrap();
        assert_eq!((c.engine, c.length, c.bz.resolution), (EngineKind::ExactDiag, 10, 0.05));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "command = sweep-g1d\nwidth_z = -0.1",
            "command = sweep-g1d\nlength = 7",
            "command = sweep-g1d\nlenght = 8",
            "command = sweep-g1d\ncenter_z = nan",
            "command = scaling\nlengths = 8,16,32",
            "command = efficiency\nengine = free_fermion",
            "command = fly",
            "length = 8",
        ] {
            assert!(RunConfig::from_pairs(&pairs(text)).is_err(), "{text}");
        }
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_pairs(&pairs("command = scaling\nlengths = 8, 16,32,64\nwidth_z = 0.07\nthreads = 2"))
            .unwrap();
        let again = RunConfig::from_pairs(&parse_pairs(&c.to_text()).unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
