use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Task, TaskSet, Time, DEFAULT_RELEASES};
use crate::error::{Error, Result};

/// Parameters of the synthetic task-set generator.
///
/// Each task gets `T_i = b · r · p` where the base `b` and the factor `r`
/// are drawn uniformly from `base_periods` and `factors`, and `p` is the
/// period factor. Draws come from `ChaCha8Rng::seed_from_u64(seed)`, base
/// first and factor second per task, so the output depends only on the spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSpec {
    pub base_periods: Vec<Time>,
    pub factors: Vec<u64>,
    pub n_tasks: usize,
    #[serde(default = "one")]
    pub period_factor: u64,
    #[serde(default)]
    pub seed: u64,
    /// Work per job, in the simulator's work units.
    #[serde(default)]
    pub wcet: u64,
    #[serde(default)]
    pub harmonic: bool,
    #[serde(default = "default_releases")]
    pub releases: u32,
}

fn one() -> u64 {
    1
}

fn default_releases() -> u32 {
    DEFAULT_RELEASES
}

impl GenerationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_periods.is_empty() {
            return Err(Error::usage("base_periods is empty"));
        }
        if self.factors.is_empty() {
            return Err(Error::usage("factor range is empty"));
        }
        if self.n_tasks == 0 {
            return Err(Error::usage("n_tasks must be >= 1"));
        }
        if self.period_factor == 0 {
            return Err(Error::usage("period_factor must be >= 1"));
        }
        if self.base_periods.contains(&0) || self.factors.contains(&0) {
            return Err(Error::usage("base periods and factors must be >= 1"));
        }
        if self.harmonic && !self.factors.iter().all(|f| f.is_power_of_two()) {
            return Err(Error::usage("harmonic generation needs power-of-two factors"));
        }
        if self.releases == 0 {
            return Err(Error::usage("releases must be >= 1"));
        }
        Ok(())
    }
}

pub fn generate_task_set(spec: &GenerationSpec) -> Result<TaskSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tasks = Vec::with_capacity(spec.n_tasks);
    for i in 0..spec.n_tasks {
        let base = spec.base_periods[rng.gen_range(0..spec.base_periods.len())];
        let factor = spec.factors[rng.gen_range(0..spec.factors.len())];
        let period = base
            .checked_mul(factor)
            .and_then(|p| p.checked_mul(spec.period_factor))
            .ok_or_else(|| Error::usage("generated period overflows"))?;
        tasks.push(Task::new(i as u32 + 1, period, spec.wcet).with_releases(spec.releases));
    }
    TaskSet::new(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_harmonic_chain;

    fn paper_like(seed: u64) -> GenerationSpec {
        GenerationSpec {
            base_periods: vec![3, 5, 7, 11],
            factors: (1..=10).collect(),
            n_tasks: 100,
            period_factor: 1,
            seed,
            wcet: 1,
            harmonic: false,
            releases: DEFAULT_RELEASES,
        }
    }

    #[test]
    fn hundred_tasks_built_from_one_base_each() {
        let ts = generate_task_set(&paper_like(7)).unwrap();
        assert_eq!(ts.len(), 100);
        for t in ts.tasks() {
            let ok = [3u64, 5, 7, 11].iter().any(|b| t.period % b == 0 && (1..=10).contains(&(t.period / b)));
            assert!(ok, "period {} not b*r", t.period);
            assert_eq!(t.deadline, t.period);
            assert_eq!(t.releases_limit, 5);
        }
    }

    #[test]
    fn harmonic_single_base_is_a_chain() {
        let spec = GenerationSpec {
            base_periods: vec![3],
            factors: vec![1, 2, 4, 8, 16],
            harmonic: true,
            ..paper_like(11)
        };
        let ts = generate_task_set(&spec).unwrap();
        let periods = ts.periods();
        assert!(periods.iter().all(|p| [3, 6, 12, 24, 48].contains(p)));
        for a in &periods {
            for b in &periods {
                assert!(a % b == 0 || b % a == 0);
            }
        }
        assert!(is_harmonic_chain(&periods));
    }

    #[test]
    fn period_factor_scales_uniformly() {
        let one = generate_task_set(&paper_like(3)).unwrap();
        let two = generate_task_set(&GenerationSpec { period_factor: 2, ..paper_like(3) }).unwrap();
        for (a, b) in one.tasks().iter().zip(two.tasks()) {
            assert_eq!(b.period, 2 * a.period);
        }
    }

    #[test]
    fn deterministic_for_equal_specs() {
        let a = generate_task_set(&paper_like(42)).unwrap().to_json().unwrap();
        let b = generate_task_set(&paper_like(42)).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_task_set(&paper_like(43)).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_task_set(&GenerationSpec { base_periods: vec![], ..paper_like(1) }).is_err());
        assert!(generate_task_set(&GenerationSpec { factors: vec![], ..paper_like(1) }).is_err());
        assert!(generate_task_set(&GenerationSpec { n_tasks: 0, ..paper_like(1) }).is_err());
        assert!(generate_task_set(&GenerationSpec { harmonic: true, ..paper_like(1) }).is_err());
    }
}
