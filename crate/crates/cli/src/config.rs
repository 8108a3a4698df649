use std::fmt;
use std::path::{Path, PathBuf};

use ionreg_core::bench::cb::{CbConfig, DEFAULT_BOOTSTRAP_RESAMPLES};
use ionreg_core::bench::crosstalk::{CrosstalkConfig, CrosstalkMode};
use ionreg_core::bench::zeeman::{GridAxis, ShiftModel};
use ionreg_core::noise::NoiseConfig;
use ionreg_core::quantum::Ion;
use ionreg_core::transpile::DEFAULT_RABI_RATES;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rabi,
    Crosstalk,
    ParityScan,
    CycleBench,
    ZeemanSweep,
    Transpile,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Rabi,
        Experiment::Crosstalk,
        Experiment::ParityScan,
        Experiment::CycleBench,
        Experiment::ZeemanSweep,
        Experiment::Transpile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rabi => "rabi",
            Experiment::Crosstalk => "crosstalk",
            Experiment::ParityScan => "parity-scan",
            Experiment::CycleBench => "cycle-bench",
            Experiment::ZeemanSweep => "zeeman-sweep",
            Experiment::Transpile => "transpile",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiSection {
    pub ion: Ion,
    pub rabi_rate_rad_per_s: f64,
    pub t_stop_s: f64,
    pub points: usize,
}

impl Default for RabiSection {
    fn default() -> Self {
        RabiSection {
            ion: Ion::One,
            rabi_rate_rad_per_s: DEFAULT_RABI_RATES[0],
            t_stop_s: 400e-6,
            points: 81,
        }
    }
}

impl RabiSection {
    /// `points` durations from 0 to `t_stop_s` inclusive.
    pub fn t_grid(&self) -> Vec<f64> {
        GridAxis {
            min: 0.0,
            max: self.t_stop_s,
            points: self.points,
        }
        .values()
    }
}

pub fn default_crosstalk() -> CrosstalkConfig {
    CrosstalkConfig {
        n_values: (0..=600).step_by(50).collect(),
        sequences_per_n: 20,
        addressed: Ion::One,
        mode: CrosstalkMode::TwoIon,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParitySection {
    pub points: usize,
    pub bootstrap_resamples: usize,
}

impl Default for ParitySection {
    fn default() -> Self {
        ParitySection {
            points: 36,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleSection {
    pub m1: usize,
    pub m2: usize,
    pub l: usize,
    pub bootstrap_resamples: usize,
}

impl Default for CycleSection {
    fn default() -> Self {
        let cb = CbConfig::default();
        CycleSection {
            m1: cb.m1,
            m2: cb.m2,
            l: cb.l,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeemanSection {
    pub dx: GridAxis,
    pub dy: GridAxis,
    pub model: ShiftModel,
    pub level: f64,
}

impl Default for ZeemanSection {
    fn default() -> Self {
        let axis = GridAxis {
            min: -1.0,
            max: 1.0,
            points: 11,
        };
        ZeemanSection {
            dx: axis,
            dy: axis,
            model: ShiftModel::zero(),
            level: 0.966,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranspileSection {
    /// Circuit text file; `--in` takes precedence. Relative to the config file.
    pub circuit: Option<PathBuf>,
}

/// One run. The master `seed` replaces `noise.seed` and the benchmarking seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Signed so that a negative value is reported rather than rejected by the parser.
    pub shots: i64,
    pub exact: bool,
    pub out_dir: PathBuf,
    pub noise: NoiseConfig,
    pub rabi_rates_rad_per_s: [f64; 2],
    pub rabi: RabiSection,
    #[serde(default = "default_crosstalk")]
    pub crosstalk: CrosstalkConfig,
    pub parity_scan: ParitySection,
    pub cycle_bench: CycleSection,
    pub zeeman_sweep: ZeemanSection,
    pub transpile: TranspileSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            shots: 1000,
            exact: false,
            out_dir: PathBuf::from("out"),
            noise: NoiseConfig::default(),
            rabi_rates_rad_per_s: DEFAULT_RABI_RATES,
            rabi: RabiSection::default(),
            crosstalk: default_crosstalk(),
            parity_scan: ParitySection::default(),
            cycle_bench: CycleSection::default(),
            zeeman_sweep: ZeemanSection::default(),
            transpile: TranspileSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Command-line values that replace config fields before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<i64>,
    pub exact: bool,
    pub out_dir: Option<PathBuf>,
}

fn prefixed(prefix: &str, items: Vec<(String, String)>) -> impl Iterator<Item = Violation> + '_ {
    items.into_iter().map(move |(field, message)| Violation {
        field: format!("{prefix}.{field}"),
        message,
    })
}

fn positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: None,
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config = Self::from_json(&text).map_err(|e| match e {
            CliError::Parse {
                line, column, message, ..
            } => CliError::Parse {
                path: Some(path.to_path_buf()),
                line,
                column,
                message,
            },
            other => other,
        })?;
        if let Some(circuit) = &config.transpile.circuit {
            if circuit.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                config.transpile.circuit = Some(base.join(circuit));
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(shots) = overrides.shots {
            self.shots = shots;
        }
        if overrides.exact {
            self.exact = true;
        }
        if let Some(dir) = &overrides.out_dir {
            self.out_dir = dir.clone();
        }
        self.noise.seed = self.seed;
    }

    pub fn cb_config(&self) -> CbConfig {
        CbConfig {
            m1: self.cycle_bench.m1,
            m2: self.cycle_bench.m2,
            l: self.cycle_bench.l,
            seed: self.seed,
        }
    }

    /// Every schema violation, with dotted field paths. Sections that a run
    /// does not use are still checked.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, message: String| {
            out.push(Violation {
                field: field.to_string(),
                message,
            })
        };
        if self.shots < 1 {
            push("shots", format!("must be a positive shot count, got {}", self.shots));
        }
        for (i, r) in self.rabi_rates_rad_per_s.iter().enumerate() {
            if !positive_finite(*r) {
                push(&format!("rabi_rates_rad_per_s[{i}]"), format!("must be positive and finite, got {r}"));
            }
        }
        if !positive_finite(self.rabi.rabi_rate_rad_per_s) {
            push(
                "rabi.rabi_rate_rad_per_s",
                format!("must be positive and finite, got {}", self.rabi.rabi_rate_rad_per_s),
            );
        }
        if !positive_finite(self.rabi.t_stop_s) {
            push("rabi.t_stop_s", format!("must be positive and finite, got {}", self.rabi.t_stop_s));
        }
        if self.rabi.points < 8 {
            push("rabi.points", format!("a sine fit needs at least 8 points, got {}", self.rabi.points));
        }
        if self.parity_scan.points < 4 {
            push(
                "parity_scan.points",
                format!("the crossing fit needs at least 4 points, got {}", self.parity_scan.points),
            );
        }
        let level = self.zeeman_sweep.level;
        if !(level > 0.0 && level < 1.0) {
            push("zeeman_sweep.level", format!("must lie in (0, 1), got {level}"));
        }
        out.extend(prefixed("noise", self.noise.violations()));
        out.extend(prefixed("crosstalk", self.crosstalk.violations()));
        out.extend(prefixed("cycle_bench", self.cb_config().violations()));
        out.extend(prefixed("zeeman_sweep", self.zeeman_sweep.dx.violations("dx")));
        out.extend(prefixed("zeeman_sweep", self.zeeman_sweep.dy.violations("dy")));
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(v))
        }
    }
}
