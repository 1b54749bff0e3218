//! Plain-text `key = value` run configuration.
//!
//! The format is deliberately flat — five sections, scalar values, no
//! nesting — so files diff cleanly and the parser stays dependency-free:
//!
//! ```text
//! [grid]
//! length  = 1.0
//! n_cells = 256
//! bc      = periodic          # or: mixed
//!
//! [params]
//! nu      = 0.1
//! eps     = 0.05
//! theta   = 0.9
//! rho_ref = 0.1
//!
//! [step]                      # optional; defaults documented below
//! dt          = 2.5e-4        # derived from cfl when omitted
//! cfl         = 0.5
//! picard_tol  = 1e-10
//! picard_max  = 50
//! t_end       = 1.0
//! coordinates = euler         # or: lagrange
//!
//! [scenario]
//! kind = sine                 # uniform | sine | tanh | random
//! rho_mean   = 1.0            # sine/random
//! amplitude  = 0.1            # sine/random
//! wavenumber = 1              # sine
//! chi        = 0.5            # uniform/sine
//! # uniform: rho, u, chi ; tanh: rho_left, rho_right, width ; random: seed
//!
//! [output]                    # optional
//! dir             = out
//! ledger_interval = 0         # 0 = every step
//! snapshot_times  = 0.0, 0.5, 1.0
//! plot            = false
//! ```
//!
//! Every parse or validation failure names the offending key and line.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::eos::{critical_points, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{make_initial, BcMode, Grid, Scenario};
use crate::solver_euler::{StepControl, DEFAULT_CFL, DEFAULT_PICARD_MAX, DEFAULT_PICARD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    Euler,
    Lagrange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Ledger cadence in time units; 0 emits a row every step.
    pub ledger_interval: f64,
    pub snapshot_times: Vec<f64>,
    /// Also emit a gnuplot script next to the CSVs.
    pub plot: bool,
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub params: PhysParams,
    pub ctl: StepControl,
    pub scenario: Scenario,
    pub output: OutputConfig,
    pub coords: Coordinates,
}

struct RawEntry {
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct RawSection {
    name: String,
    line: usize,
    entries: Vec<(String, RawEntry)>,
}

struct RawConfig {
    sections: Vec<RawSection>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<RawSection> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Config {
                        line: line_no,
                        key: line.to_string(),
                        msg: "unterminated section header".into(),
                    });
                }
                let name = line[1..line.len() - 1].trim().to_string();
                if sections.iter().any(|s| s.name == name) {
                    return Err(Error::Config {
                        line: line_no,
                        key: name,
                        msg: "duplicate section".into(),
                    });
                }
                sections.push(RawSection {
                    name,
                    line: line_no,
                    entries: Vec::new(),
                });
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::Config {
                    line: line_no,
                    key: line.to_string(),
                    msg: "expected `key = value`".into(),
                });
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            let Some(section) = sections.last_mut() else {
                return Err(Error::Config {
                    line: line_no,
                    key,
                    msg: "key appears before any [section] header".into(),
                });
            };
            if section.entries.iter().any(|(k, _)| *k == key) {
                return Err(Error::Config {
                    line: line_no,
                    key,
                    msg: "duplicate key in section".into(),
                });
            }
            section.entries.push((
                key,
                RawEntry {
                    value,
                    line: line_no,
                    used: std::cell::Cell::new(false),
                },
            ));
        }
        Ok(Self { sections })
    }

    fn section(&self, name: &str) -> Option<&RawSection> {
        self.sections.iter().find(|s| s.name == name)
    }

    fn get(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.section(section).and_then(|s| {
            s.entries.iter().find(|(k, _)| k == key).map(|(_, e)| {
                e.used.set(true);
                (e.value.as_str(), e.line)
            })
        })
    }

    fn require(&self, section: &str, key: &str) -> Result<(&str, usize)> {
        self.get(section, key).ok_or_else(|| {
            let line = self.section(section).map(|s| s.line).unwrap_or(0);
            Error::Config {
                line,
                key: format!("{section}.{key}"),
                msg: "missing mandatory key".into(),
            }
        })
    }

    fn check_consumed(&self, known_sections: &[&str]) -> Result<()> {
        for s in &self.sections {
            if !known_sections.contains(&s.name.as_str()) {
                return Err(Error::Config {
                    line: s.line,
                    key: s.name.clone(),
                    msg: "unknown section".into(),
                });
            }
            for (k, e) in &s.entries {
                if !e.used.get() {
                    return Err(Error::Config {
                        line: e.line,
                        key: format!("{}.{k}", s.name),
                        msg: "unknown key".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn parse_f64(value: &str, key: &str, line: usize) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::Config {
        line,
        key: key.to_string(),
        msg: format!("expected a number, got `{value}`"),
    })
}

fn parse_usize(value: &str, key: &str, line: usize) -> Result<usize> {
    value.parse::<usize>().map_err(|_| Error::Config {
        line,
        key: key.to_string(),
        msg: format!("expected a nonnegative integer, got `{value}`"),
    })
}

fn parse_u64(value: &str, key: &str, line: usize) -> Result<u64> {
    value.parse::<u64>().map_err(|_| Error::Config {
        line,
        key: key.to_string(),
        msg: format!("expected a nonnegative integer, got `{value}`"),
    })
}

fn parse_bool(value: &str, key: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config {
            line,
            key: key.to_string(),
            msg: format!("expected true/false, got `{value}`"),
        }),
    }
}

fn bad(key: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        msg: msg.into(),
    }
}

/// Parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parse and validate configuration text.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    build(&RawConfig::parse(text)?)
}

/// Parse configuration text with one key overridden, e.g. `("theta", "0.8")`
/// or the qualified form `("params.theta", "0.8")`. Used by parameter sweeps.
pub fn parse_config_with_override(text: &str, key: &str, value: &str) -> Result<SimConfig> {
    let raw = RawConfig::parse(text)?;
    let (section_name, bare_key) = match key.split_once('.') {
        Some((s, k)) => (Some(s.to_string()), k.to_string()),
        None => (None, key.to_string()),
    };
    let mut raw = raw;
    let mut hit = false;
    for s in &mut raw.sections {
        if let Some(ref want) = section_name {
            if s.name != *want {
                continue;
            }
        }
        if let Some((_, e)) = s.entries.iter_mut().find(|(k, _)| *k == bare_key) {
            e.value = value.to_string();
            hit = true;
            break;
        }
    }
    if !hit {
        // key absent from the file: append to the matching section if present
        let target = section_name.as_deref().unwrap_or(match bare_key.as_str() {
            "nu" | "eps" | "theta" | "rho_ref" => "params",
            "dt" | "cfl" | "picard_tol" | "picard_max" | "t_end" | "coordinates" => "step",
            "length" | "n_cells" | "bc" => "grid",
            "dir" | "ledger_interval" | "snapshot_times" | "plot" => "output",
            _ => "scenario",
        });
        if !raw.sections.iter().any(|s| s.name == target) {
            raw.sections.push(RawSection {
                name: target.to_string(),
                line: 0,
                entries: Vec::new(),
            });
        }
        let section = raw
            .sections
            .iter_mut()
            .find(|s| s.name == target)
            .expect("section just ensured");
        section.entries.push((
            bare_key,
            RawEntry {
                value: value.to_string(),
                line: 0,
                used: std::cell::Cell::new(false),
            },
        ));
    }
    build(&raw)
}

fn build(raw: &RawConfig) -> Result<SimConfig> {
    // [grid]
    let (v, l) = raw.require("grid", "length")?;
    let length = parse_f64(v, "length", l)?;
    if !(length.is_finite() && length > 0.0) {
        return Err(bad("length", l, "domain length must be positive"));
    }
    let (v, l) = raw.require("grid", "n_cells")?;
    let n_cells = parse_usize(v, "n_cells", l)?;
    if n_cells < 8 {
        return Err(bad("n_cells", l, "need at least 8 cells"));
    }
    let bc = match raw.get("grid", "bc") {
        None => BcMode::Periodic,
        Some(("periodic", _)) => BcMode::Periodic,
        Some(("mixed", _)) => BcMode::Mixed,
        Some((other, line)) => {
            return Err(bad(
                "bc",
                line,
                format!("expected periodic|mixed, got `{other}`"),
            ))
        }
    };
    let grid = Grid::new(length, n_cells, bc).expect("already validated");

    // [params]
    let (v, l_nu) = raw.require("params", "nu")?;
    let nu = parse_f64(v, "nu", l_nu)?;
    if !(nu.is_finite() && nu > 0.0) {
        return Err(bad("nu", l_nu, "viscosity nu must be positive"));
    }
    let (v, l_eps) = raw.require("params", "eps")?;
    let eps = parse_f64(v, "eps", l_eps)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(bad(
            "eps",
            l_eps,
            "interface thickness eps must be positive",
        ));
    }
    let (v, l_theta) = raw.require("params", "theta")?;
    let theta = parse_f64(v, "theta", l_theta)?;
    if !(theta.is_finite() && theta > 0.0) {
        return Err(bad(
            "theta",
            l_theta,
            "reduced temperature theta must be positive",
        ));
    }
    let (v, l_ref) = raw.require("params", "rho_ref")?;
    let rho_ref = parse_f64(v, "rho_ref", l_ref)?;
    if !(rho_ref > 0.0 && rho_ref < 3.0) {
        return Err(bad("rho_ref", l_ref, "rho_ref must lie in (0, 3)"));
    }
    if theta < 1.0 {
        match critical_points(theta)?.gamma {
            Some(gamma) if rho_ref < gamma => {}
            Some(gamma) => {
                return Err(bad(
                    "rho_ref",
                    l_ref,
                    format!("rho_ref = {rho_ref} must lie below gamma({theta}) = {gamma:.4}"),
                ))
            }
            None => {
                return Err(bad(
                    "theta",
                    l_theta,
                    format!("theta = {theta} admits no matched density (p(beta) <= 0)"),
                ))
            }
        }
    }
    let params = PhysParams::new(nu, eps, theta, rho_ref).expect("already validated");

    // [scenario]
    let (kind, l_kind) = raw.require("scenario", "kind")?;
    let scenario = match kind {
        "uniform" => {
            let (v, l) = raw.require("scenario", "rho")?;
            let rho = parse_f64(v, "rho", l)?;
            let u = match raw.get("scenario", "u") {
                Some((v, l)) => parse_f64(v, "u", l)?,
                None => 0.0,
            };
            let chi = match raw.get("scenario", "chi") {
                Some((v, l)) => parse_f64(v, "chi", l)?,
                None => 1.0,
            };
            Scenario::Uniform { rho, u, chi }
        }
        "sine" => {
            let (v, l) = raw.require("scenario", "rho_mean")?;
            let rho_mean = parse_f64(v, "rho_mean", l)?;
            let (v, l) = raw.require("scenario", "amplitude")?;
            let amplitude = parse_f64(v, "amplitude", l)?;
            let wavenumber = match raw.get("scenario", "wavenumber") {
                Some((v, l)) => parse_usize(v, "wavenumber", l)? as u32,
                None => 1,
            };
            let chi = match raw.get("scenario", "chi") {
                Some((v, l)) => parse_f64(v, "chi", l)?,
                None => 0.0,
            };
            Scenario::SinePerturb {
                rho_mean,
                amplitude,
                wavenumber,
                chi,
            }
        }
        "tanh" => {
            let (v, l) = raw.require("scenario", "rho_left")?;
            let rho_left = parse_f64(v, "rho_left", l)?;
            let (v, l) = raw.require("scenario", "rho_right")?;
            let rho_right = parse_f64(v, "rho_right", l)?;
            let (v, l) = raw.require("scenario", "width")?;
            let width = parse_f64(v, "width", l)?;
            Scenario::TanhInterface {
                rho_left,
                rho_right,
                width,
            }
        }
        "random" => {
            let (v, l) = raw.require("scenario", "rho_mean")?;
            let rho_mean = parse_f64(v, "rho_mean", l)?;
            let (v, l) = raw.require("scenario", "amplitude")?;
            let amplitude = parse_f64(v, "amplitude", l)?;
            let (v, l) = raw.require("scenario", "seed")?;
            let seed = parse_u64(v, "seed", l)?;
            Scenario::SeededRandom {
                rho_mean,
                amplitude,
                seed,
            }
        }
        other => {
            return Err(bad(
                "kind",
                l_kind,
                format!("expected uniform|sine|tanh|random, got `{other}`"),
            ))
        }
    };
    // dry-run the initial data so scenario problems surface at parse time
    let state0 = make_initial(&scenario, &grid, &params)
        .map_err(|e| bad("kind", l_kind, format!("scenario rejected: {e}")))?;

    // [step]
    let cfl = match raw.get("step", "cfl") {
        Some((v, l)) => {
            let cfl = parse_f64(v, "cfl", l)?;
            if !(cfl > 0.0 && cfl <= 0.9) {
                return Err(bad("cfl", l, "cfl must lie in (0, 0.9]"));
            }
            cfl
        }
        None => DEFAULT_CFL,
    };
    let t_end = match raw.get("step", "t_end") {
        Some((v, l)) => {
            let t = parse_f64(v, "t_end", l)?;
            if !(t.is_finite() && t >= 0.0) {
                return Err(bad("t_end", l, "t_end must be nonnegative"));
            }
            t
        }
        None => 1.0,
    };
    let dt = match raw.get("step", "dt") {
        Some((v, l)) => {
            let dt = parse_f64(v, "dt", l)?;
            if !(dt.is_finite() && dt > 0.0) {
                return Err(bad("dt", l, "dt must be positive"));
            }
            dt
        }
        // derived from the CFL target and the initial velocity scale
        None => {
            let u_scale = state0.max_abs_u().max(1.0);
            cfl * grid.dx / u_scale
        }
    };
    let picard_tol = match raw.get("step", "picard_tol") {
        Some((v, l)) => {
            let t = parse_f64(v, "picard_tol", l)?;
            if !(t.is_finite() && t > 0.0) {
                return Err(bad("picard_tol", l, "picard_tol must be positive"));
            }
            t
        }
        None => DEFAULT_PICARD_TOL,
    };
    let picard_max = match raw.get("step", "picard_max") {
        Some((v, l)) => {
            let m = parse_usize(v, "picard_max", l)?;
            if m < 1 {
                return Err(bad("picard_max", l, "picard_max must be at least 1"));
            }
            m
        }
        None => DEFAULT_PICARD_MAX,
    };
    let coords = match raw.get("step", "coordinates") {
        None => Coordinates::Euler,
        Some(("euler", _)) => Coordinates::Euler,
        Some(("lagrange", l)) => {
            if bc == BcMode::Mixed {
                return Err(bad(
                    "coordinates",
                    l,
                    "mass-coordinate runs require periodic boundaries",
                ));
            }
            Coordinates::Lagrange
        }
        Some((other, l)) => {
            return Err(bad(
                "coordinates",
                l,
                format!("expected euler|lagrange, got `{other}`"),
            ))
        }
    };
    let ctl = StepControl {
        dt,
        cfl,
        picard_tol,
        picard_max,
        t_end,
    };

    // [output]
    let dir = match raw.get("output", "dir") {
        Some((v, _)) => PathBuf::from(v),
        None => PathBuf::from("out"),
    };
    let ledger_interval = match raw.get("output", "ledger_interval") {
        Some((v, l)) => {
            let i = parse_f64(v, "ledger_interval", l)?;
            if i < 0.0 {
                return Err(bad("ledger_interval", l, "ledger_interval must be >= 0"));
            }
            i
        }
        None => 0.0,
    };
    let snapshot_times = match raw.get("output", "snapshot_times") {
        Some((v, l)) => {
            let mut times = Vec::new();
            for part in v.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let t = parse_f64(part, "snapshot_times", l)?;
                if t < 0.0 {
                    return Err(bad("snapshot_times", l, "snapshot times must be >= 0"));
                }
                times.push(t);
            }
            let mut seen = HashSet::new();
            times.retain(|t| seen.insert(t.to_bits()));
            times
        }
        None => Vec::new(),
    };
    let plot = match raw.get("output", "plot") {
        Some((v, l)) => parse_bool(v, "plot", l)?,
        None => false,
    };

    raw.check_consumed(&["grid", "params", "step", "scenario", "output"])?;

    Ok(SimConfig {
        grid,
        params,
        ctl,
        scenario,
        output: OutputConfig {
            dir,
            ledger_interval,
            snapshot_times,
            plot,
        },
        coords,
    })
}

impl SimConfig {
    #[cfg(test)]
    pub(crate) fn builder_for_tests(t_end: f64) -> SimConfig {
        SimConfig {
            grid: Grid::new(1.0, 32, BcMode::Periodic).unwrap(),
            params: PhysParams::new(0.1, 0.05, 0.9, 0.1).unwrap(),
            ctl: StepControl::with_dt(1e-3, t_end),
            scenario: Scenario::SinePerturb {
                rho_mean: 1.0,
                amplitude: 0.1,
                wavenumber: 1,
                chi: 0.5,
            },
            output: OutputConfig {
                dir: std::env::temp_dir().join("nsac_test_out"),
                ledger_interval: 0.0,
                snapshot_times: Vec::new(),
                plot: false,
            },
            coords: Coordinates::Euler,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[grid]
length = 1.0
n_cells = 64

[params]
nu = 0.1
eps = 0.05
theta = 0.9
rho_ref = 0.1

[scenario]
kind = sine
rho_mean = 1.0
amplitude = 0.1
";

    #[test]
    fn minimal_file_gets_documented_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.grid.bc, BcMode::Periodic);
        assert_eq!(cfg.ctl.cfl, DEFAULT_CFL);
        assert_eq!(cfg.ctl.picard_tol, DEFAULT_PICARD_TOL);
        assert_eq!(cfg.ctl.picard_max, DEFAULT_PICARD_MAX);
        assert_eq!(cfg.ctl.t_end, 1.0);
        // dt derived from cfl * dx / max(|u0|, 1)
        assert!((cfg.ctl.dt - 0.5 / 64.0).abs() < 1e-15);
        assert_eq!(cfg.coords, Coordinates::Euler);
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        assert!(!cfg.output.plot);
    }

    #[test]
    fn negative_theta_is_rejected_by_name_and_line() {
        let text = MINIMAL.replace("theta = 0.9", "theta = -1");
        match parse_config_str(&text) {
            Err(Error::Config { key, line, msg }) => {
                assert_eq!(key, "theta");
                assert_eq!(line, 8);
                assert!(msg.contains("positive"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn rho_ref_above_gamma_is_rejected() {
        let text = MINIMAL.replace("rho_ref = 0.1", "rho_ref = 0.5");
        match parse_config_str(&text) {
            Err(Error::Config { key, msg, .. }) => {
                assert_eq!(key, "rho_ref");
                // gamma(0.9) ~ 0.2168
                assert!(msg.contains("0.2168"), "message: {msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_mandatory_key_and_type_mismatch() {
        let text = MINIMAL.replace("eps = 0.05\n", "");
        match parse_config_str(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "params.eps"),
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("n_cells = 64", "n_cells = sixty");
        match parse_config_str(&text) {
            Err(Error::Config { key, line, .. }) => {
                assert_eq!(key, "n_cells");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_flagged() {
        let text = format!("{MINIMAL}\ntypo_key = 3\n");
        match parse_config_str(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "scenario.typo_key"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scenario_violating_admissibility_is_rejected() {
        let text = MINIMAL.replace("amplitude = 0.1", "amplitude = 2.5");
        match parse_config_str(&text) {
            Err(Error::Config { key, msg, .. }) => {
                assert_eq!(key, "kind");
                assert!(msg.contains("scenario rejected"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn override_replaces_and_appends() {
        let cfg = parse_config_with_override(MINIMAL, "theta", "0.95").unwrap();
        assert_eq!(cfg.params.theta, 0.95);
        let cfg = parse_config_with_override(MINIMAL, "step.t_end", "0.25").unwrap();
        assert_eq!(cfg.ctl.t_end, 0.25);
        let cfg = parse_config_with_override(MINIMAL, "params.theta", "1.1").unwrap();
        assert_eq!(cfg.params.theta, 1.1);
    }

    #[test]
    fn lagrange_coordinates_require_periodic_bc() {
        let text = format!(
            "{}\n[step]\ncoordinates = lagrange\n",
            MINIMAL.replace("n_cells = 64", "n_cells = 64\nbc = mixed")
        );
        match parse_config_str(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "coordinates"),
            other => panic!("{other:?}"),
        }
    }
}
