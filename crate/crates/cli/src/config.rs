//! Flat `key=value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown keys and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;

use modcool_core::analytics::select_modulation_amplitude;
use modcool_core::dynamics::{IntegrationConfig, DEFAULT_WINDOW_FRACTION};
use modcool_core::oracle::FockConfig;
use modcool_core::{Complex64, Modulation, SystemParams};

use crate::error::{CliError, Result};

pub const MAX_GRID_COUNT: usize = 10_000;
const ORACLE_DEFAULT_T_END: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RunMode {
    Simulate,
    Steady,
    Limits,
    Sidebands,
    Sweep,
    Table1,
    OracleCheck,
    Floquet,
    Async,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Simulate => "simulate",
            RunMode::Steady => "steady",
            RunMode::Limits => "limits",
            RunMode::Sidebands => "sidebands",
            RunMode::Sweep => "sweep",
            RunMode::Table1 => "table1",
            RunMode::OracleCheck => "oracle-check",
            RunMode::Floquet => "floquet",
            RunMode::Async => "async",
        }
    }

    /// Fixed-parameter reproductions that take no system parameters.
    pub fn is_fixed(self) -> bool {
        matches!(self, RunMode::Table1 | RunMode::Async)
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    G,
    Kappa,
    Xi,
    Nu,
    Theta,
    Xi2,
    Nu2,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::G => "G",
            Axis::Kappa => "kappa",
            Axis::Xi => "xi",
            Axis::Nu => "nu",
            Axis::Theta => "theta",
            Axis::Xi2 => "xi2",
            Axis::Nu2 => "nu2",
        }
    }

    fn parse(s: &str) -> Option<Axis> {
        [Axis::G, Axis::Kappa, Axis::Xi, Axis::Nu, Axis::Theta, Axis::Xi2, Axis::Nu2]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if i == 0 {
                    self.start
                } else if i == n - 1 {
                    self.stop
                } else if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// One or two axes; the first varies slowest in the output.
    pub axes: Vec<SweepAxis>,
}

/// Integration settings given explicitly; the rest come from
/// [`IntegrationConfig::default_for`] at each parameter point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationOverrides {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
    pub t_end: Option<f64>,
    pub sample_stride: Option<f64>,
}

impl IntegrationOverrides {
    pub fn resolve(&self, p: &SystemParams, m: &Modulation) -> Result<IntegrationConfig> {
        let mut cfg = IntegrationConfig::default_for(p, m);
        if let Some(v) = self.rtol {
            cfg.rtol = v;
        }
        if let Some(v) = self.atol {
            cfg.atol = v;
        }
        if let Some(v) = self.max_step {
            cfg.max_step = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.sample_stride {
            cfg.sample_stride = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    /// Absent only for the fixed-parameter modes.
    pub params: Option<SystemParams>,
    /// Amplitudes already resolved when `auto_xi` is set.
    pub modulation: Modulation,
    /// `xi=auto`: re-resolve the amplitude whenever ν changes.
    pub auto_xi: bool,
    pub integration: IntegrationOverrides,
    pub window_fraction: f64,
    pub sweep: Option<SweepSpec>,
    pub fock: FockConfig,
    pub k_range: u32,
    pub output_path: Option<String>,
}

impl RunConfig {
    pub fn params(&self) -> Result<&SystemParams> {
        self.params
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("mode {} needs system parameters", self.mode)))
    }

    pub fn integration_for(&self, p: &SystemParams, m: &Modulation) -> Result<IntegrationConfig> {
        let mut ov = self.integration;
        if self.mode == RunMode::OracleCheck && ov.t_end.is_none() {
            ov.t_end = Some(ORACLE_DEFAULT_T_END);
        }
        ov.resolve(p, m)
    }
}

const KEYS: &[&str] = &[
    "mode", "G", "G_im", "kappa", "gamma", "n_th", "delta", "xi", "nu", "xi1", "nu1", "xi2", "nu2",
    "theta", "rtol", "atol", "max_step", "t_end", "sample_stride", "window", "k_range", "output",
    "fock.dim_a", "fock.dim_b", "fock.leak_tol", "sweep.axis", "sweep.start", "sweep.stop",
    "sweep.count", "sweep.scale", "sweep2.axis", "sweep2.start", "sweep2.stop", "sweep2.count",
    "sweep2.scale",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    last_line: usize,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(CliError::Parse {
                    line,
                    msg: format!("`{key}` expects a finite number, got `{v}`"),
                }),
            },
        }
    }

    fn int(&self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<usize>().map(Some).map_err(|_| CliError::Parse {
                line,
                msg: format!("`{key}` expects a non-negative integer, got `{v}`"),
            }),
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| CliError::Parse {
            line: self.last_line,
            msg: format!("missing required key `{key}`"),
        })
    }

    /// Error attributed to the line of `key`, or to the end of input.
    fn err(&self, key: &str, msg: impl Into<String>) -> CliError {
        CliError::Parse {
            line: self.raw(key).map_or(self.last_line, |(l, _)| l),
            msg: msg.into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| CliError::Parse {
            line,
            msg: format!("expected `key=value`, got `{content}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::Parse {
                line,
                msg: format!("unknown key `{k}`"),
            });
        }
        if v.is_empty() {
            return Err(CliError::Parse {
                line,
                msg: format!("`{k}` has no value"),
            });
        }
        if map.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(CliError::Parse {
                line,
                msg: format!("`{k}` given twice"),
            });
        }
    }
    Ok(Entries { map, last_line })
}

/// Parses a configuration whose `mode` key is mandatory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_for(text, None)
}

/// Parses a configuration; `mode` may come from the command line instead, in
/// which case a `mode` key in the text must agree with it.
pub fn parse_config_for(text: &str, cli_mode: Option<RunMode>) -> Result<RunConfig> {
    let e = tokenize(text)?;
    let file_mode = match e.raw("mode") {
        None => None,
        Some((line, v)) => Some(<RunMode as clap::ValueEnum>::from_str(v, false).map_err(|_| CliError::Parse {
            line,
            msg: format!("unknown mode `{v}`"),
        })?),
    };
    let mode = match (file_mode, cli_mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(e.err("mode", format!("config says mode `{a}` but `{b}` was requested")));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(e.err("mode", "missing required key `mode`")),
    };

    let params = if mode.is_fixed() {
        None
    } else {
        let g = Complex64::new(e.required("G")?, e.num("G_im")?.unwrap_or(0.0));
        let p = SystemParams::new(
            e.num("delta")?.unwrap_or(1.0),
            g,
            e.required("kappa")?,
            e.required("gamma")?,
            e.required("n_th")?,
        )
        .map_err(|err| e.err("G", err.to_string()))?;
        Some(p)
    };

    let (modulation, auto_xi) = parse_modulation(&e)?;

    let integration = IntegrationOverrides {
        rtol: e.num("rtol")?,
        atol: e.num("atol")?,
        max_step: e.num("max_step")?,
        t_end: e.num("t_end")?,
        sample_stride: e.num("sample_stride")?,
    };
    for (key, v) in [
        ("rtol", integration.rtol),
        ("atol", integration.atol),
        ("max_step", integration.max_step),
        ("t_end", integration.t_end),
        ("sample_stride", integration.sample_stride),
    ] {
        if matches!(v, Some(x) if x <= 0.0) {
            return Err(e.err(key, format!("`{key}` must be positive")));
        }
    }

    let window_fraction = e.num("window")?.unwrap_or(DEFAULT_WINDOW_FRACTION);
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(e.err("window", "`window` must lie in (0, 1]"));
    }

    let fock = FockConfig::new(
        e.int("fock.dim_a")?.unwrap_or(8),
        e.int("fock.dim_b")?.unwrap_or(16),
        e.num("fock.leak_tol")?.unwrap_or(1e-4),
    )
    .map_err(|err| e.err("fock.dim_a", err.to_string()))?;

    let k_range = e.int("k_range")?.unwrap_or(5);
    if !(1..=200).contains(&k_range) {
        return Err(e.err("k_range", "`k_range` must lie in [1, 200]"));
    }

    let sweep = parse_sweep(&e)?;
    match (mode == RunMode::Sweep, sweep.is_some()) {
        (true, false) => return Err(e.err("sweep.axis", "mode `sweep` needs `sweep.axis`")),
        (false, true) => return Err(e.err("sweep.axis", "sweep keys are only valid with mode `sweep`")),
        _ => {}
    }

    Ok(RunConfig {
        mode,
        params,
        modulation,
        auto_xi,
        integration,
        window_fraction,
        sweep,
        fock,
        k_range: k_range as u32,
        output_path: e.raw("output").map(|(_, v)| v.to_string()),
    })
}

fn parse_modulation(e: &Entries) -> Result<(Modulation, bool)> {
    let synchronous = e.has("xi") || e.has("nu");
    let explicit = ["xi1", "nu1", "xi2", "nu2"].iter().any(|k| e.has(k));
    if synchronous && explicit {
        let key = if e.has("xi") { "xi" } else { "nu" };
        return Err(e.err(key, "use either `xi`/`nu` or `xi1`/`nu1`/`xi2`/`nu2`, not both"));
    }
    let theta = e.num("theta")?.unwrap_or(0.0);
    let build = |xi1, nu1, xi2, nu2, key: &str| {
        Modulation::new(xi1, nu1, xi2, nu2, theta).map_err(|err| e.err(key, err.to_string()))
    };
    if synchronous {
        let nu = e.required("nu")?;
        let auto = matches!(e.raw("xi"), Some((_, "auto")));
        let xi = if auto {
            select_modulation_amplitude(nu).map_err(|err| e.err("xi", err.to_string()))?.1
        } else {
            e.num("xi")?.ok_or_else(|| e.err("nu", "`nu` given without `xi`"))?
        };
        Ok((build(xi, nu, xi, nu, "xi")?, auto))
    } else if explicit {
        let m = build(
            e.required("xi1")?,
            e.required("nu1")?,
            e.required("xi2")?,
            e.required("nu2")?,
            "xi1",
        )?;
        Ok((m, false))
    } else {
        let mut m = Modulation::none();
        m.theta = theta;
        Ok((m, false))
    }
}

fn parse_axis(e: &Entries, prefix: &str) -> Result<Option<SweepAxis>> {
    let key = |s: &str| format!("{prefix}.{s}");
    let Some((line, name)) = e.raw(&key("axis")) else {
        if let Some(k) = ["start", "stop", "count", "scale"].iter().map(|s| key(s)).find(|k| e.has(k)) {
            return Err(e.err(&k, format!("`{k}` given without `{}`", key("axis"))));
        }
        return Ok(None);
    };
    let axis = Axis::parse(name).ok_or_else(|| CliError::Parse {
        line,
        msg: format!("cannot sweep `{name}`; axes are G, kappa, xi, nu, theta, xi2, nu2"),
    })?;
    let start = e.required(&key("start"))?;
    let stop = e.required(&key("stop"))?;
    let count = e
        .int(&key("count"))?
        .ok_or_else(|| e.err(&key("axis"), format!("missing required key `{}`", key("count"))))?;
    if !(2..=MAX_GRID_COUNT).contains(&count) {
        return Err(e.err(&key("count"), format!("grid count must lie in [2, {MAX_GRID_COUNT}]")));
    }
    let log = match e.raw(&key("scale")) {
        None | Some((_, "linear")) => false,
        Some((_, "log")) => true,
        Some((line, other)) => {
            return Err(CliError::Parse {
                line,
                msg: format!("scale must be `log` or `linear`, got `{other}`"),
            })
        }
    };
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(e.err(&key("scale"), "log grids need positive bounds"));
    }
    Ok(Some(SweepAxis {
        axis,
        start,
        stop,
        count,
        log,
    }))
}

fn parse_sweep(e: &Entries) -> Result<Option<SweepSpec>> {
    let first = parse_axis(e, "sweep")?;
    let second = parse_axis(e, "sweep2")?;
    match (first, second) {
        (None, None) => Ok(None),
        (None, Some(_)) => Err(e.err("sweep2.axis", "`sweep2.axis` needs `sweep.axis`")),
        (Some(a), None) => Ok(Some(SweepSpec { axes: vec![a] })),
        (Some(a), Some(b)) => {
            if a.axis == b.axis {
                return Err(e.err("sweep2.axis", "the two sweep axes must differ"));
            }
            if a.count * b.count > MAX_GRID_COUNT {
                return Err(e.err("sweep2.count", format!("grid exceeds {MAX_GRID_COUNT} points")));
            }
            Ok(Some(SweepSpec { axes: vec![a, b] }))
        }
    }
}
