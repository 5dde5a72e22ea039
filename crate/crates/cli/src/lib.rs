//! Scenario files and shipped presets for the `chronos` binary.

use std::fs;
use std::path::Path;

use chronos_core::optimizer::{solve, ExactOptions, OptimizationProblem, OptimizationResult};
use chronos_core::sim::{AfterLimit, Horizon, SchedulerConfig, SweepConfig};
use chronos_core::{generate_task_set, CostWeights, Error, GenerationSpec, Mapping, Result, StrategyKind, Task, TaskSet};
use serde::{Deserialize, Serialize};

/// Names of the presets under `presets/`, one per workload configuration.
pub const PRESET_NAMES: [&str; 5] = ["low", "high", "harmonic-single", "harmonic-low", "harmonic-high"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "low" => include_str!("../presets/low.json"),
        "high" => include_str!("../presets/high.json"),
        "harmonic-single" => include_str!("../presets/harmonic-single.json"),
        "harmonic-low" => include_str!("../presets/harmonic-low.json"),
        "harmonic-high" => include_str!("../presets/harmonic-high.json"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<Scenario> {
    let text = preset_text(name).ok_or_else(|| {
        Error::Usage(format!("unknown preset '{name}' (known: {})", PRESET_NAMES.join(", ")))
    })?;
    Scenario::from_json(text)
}

/// Everything needed to reproduce a sweep: task source, timer budget,
/// strategies, cost model and factor range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<Task>>,
    #[serde(default = "default_timers")]
    pub timers: usize,
    /// One timer at this period instead of an optimised mapping; not scaled
    /// by the period factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timer_period: Option<u64>,
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
    #[serde(default = "one")]
    pub capacity_per_unit: u64,
    #[serde(default = "one")]
    pub work_per_cost_unit: u64,
    #[serde(default)]
    pub overhead_as_time: bool,
    #[serde(default)]
    pub after_limit: AfterLimit,
    #[serde(default = "until_retired")]
    pub horizon: Horizon,
    #[serde(default = "default_factors")]
    pub factors: Vec<u64>,
    #[serde(default)]
    pub scale_workload: bool,
    #[serde(default, skip_serializing_if = "Outputs::is_empty")]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub sweep_csv: Option<String>,
    pub summary: Option<String>,
}

impl Outputs {
    fn is_empty(&self) -> bool {
        self.sweep_csv.is_none() && self.summary.is_none()
    }
}

fn default_timers() -> usize {
    4
}

fn one() -> u64 {
    1
}

fn until_retired() -> Horizon {
    Horizon::UntilRetired
}

fn default_factors() -> Vec<u64> {
    vec![1]
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Usage(format!("scenario json: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Scenario::from_json(&read_file(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.generation, &self.tasks) {
            (Some(_), Some(_)) => return Err(Error::Usage("scenario has both generation and tasks".into())),
            (None, None) => return Err(Error::Usage("scenario needs generation or tasks".into())),
            _ => {}
        }
        if self.strategies.is_empty() {
            return Err(Error::Usage("scenario lists no strategies".into()));
        }
        if self.timers == 0 {
            return Err(Error::Usage("timers must be >= 1".into()));
        }
        Ok(())
    }

    /// The task set, with the generator seed replaced when `seed` is given.
    pub fn task_set(&self, seed: Option<u64>) -> Result<TaskSet> {
        match (&self.generation, &self.tasks) {
            (Some(spec), _) => {
                let mut spec = spec.clone();
                if let Some(seed) = seed {
                    spec.seed = seed;
                }
                generate_task_set(&spec)
            }
            (None, Some(tasks)) => TaskSet::new(tasks.clone()),
            (None, None) => Err(Error::Usage("scenario needs generation or tasks".into())),
        }
    }

    /// The fixed single-timer mapping, or the optimiser's mapping for the
    /// timer budget together with the solve result.
    pub fn mapping(&self, tasks: &TaskSet) -> Result<(Mapping, Option<OptimizationResult>)> {
        if let Some(period) = self.timer_period {
            return Ok((Mapping::single(tasks, period)?, None));
        }
        let problem = OptimizationProblem::from_task_set(tasks, self.timers)?;
        let result = solve(&problem, &ExactOptions::default());
        Ok((result.mapping.clone(), Some(result)))
    }

    pub fn sweep_config(&self, tasks: TaskSet, mapping: Mapping) -> SweepConfig {
        SweepConfig {
            task_set: tasks,
            mapping,
            strategies: self.strategies.clone(),
            weights: self.weights,
            scheduler: self.scheduler,
            horizon: self.horizon,
            capacity_per_unit: self.capacity_per_unit,
            work_per_cost_unit: self.work_per_cost_unit,
            overhead_as_time: self.overhead_as_time,
            after_limit: self.after_limit,
            scale_timers: self.timer_period.is_none(),
            scale_workload: self.scale_workload,
        }
    }
}

/// `fs::read_to_string` with the path in the error message.
pub fn read_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| with_path(e, path))
}

pub fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Parses `"4"`, `"1-15"` or `"1,2,8"` into factors.
pub fn parse_factors(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("bad period factor list '{text}'"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once('-') {
            let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

/// Process exit code for an error: 2 input, 3 configuration, 4 internal.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        Error::Config(_) | Error::BoundExceeded { .. } => 3,
        Error::Invariant(_) => 4,
    }
}
