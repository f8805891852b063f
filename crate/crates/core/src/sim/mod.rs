//! Seeded Monte Carlo studies of empirical size and power under
//! contamination, and of the data-driven choice of β.

pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{select_beta_with, Sample};
use crate::family::{FamilySpec, ParametricFamily};
use crate::robustness::Which;
use crate::wald::{one_sided_test, partial_homogeneity_test, simple_test, Difference};
use rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimTest {
    #[default]
    Simple,
    /// First coordinate compared, the rest nuisance.
    PartialHomogeneity,
    /// One-sided comparison of the first coordinate.
    OneSided,
}

/// Which sample the one-sided alternative says is larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    FirstLarger,
    #[default]
    SecondLarger,
}

impl Direction {
    pub fn hypothesis(self, p: usize) -> Difference {
        let d = Difference::coords(p, vec![0]);
        match self {
            Direction::FirstLarger => d,
            Direction::SecondLarger => d.reversed(),
        }
    }
}

/// Replace a fraction ε of a sample by draws from f_{θ_c}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contamination {
    pub epsilon: f64,
    #[serde(default)]
    pub theta_c: Vec<f64>,
    #[serde(default = "default_sample")]
    pub sample: Which,
}

fn default_sample() -> Which {
    Which::Second
}

impl Contamination {
    pub fn none() -> Self {
        Self {
            epsilon: 0.0,
            theta_c: vec![],
            sample: Which::Second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub grid: Vec<f64>,
    #[serde(default = "default_pilot")]
    pub pilot_beta: f64,
}

fn default_pilot() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub test: SimTest,
    #[serde(default)]
    pub direction: Direction,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    /// Scenarios; an empty list means pure data only.
    #[serde(default)]
    pub contamination: Vec<Contamination>,
    #[serde(default)]
    pub tuning: Option<TuningConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub beta: f64,
    pub epsilon: f64,
    pub theta_c: Vec<f64>,
    pub sample: Which,
    /// Observations replaced per contaminated sample.
    pub replaced: usize,
    pub replicates: usize,
    pub failures: usize,
    pub rejections: usize,
    pub rate: f64,
    pub mc_se: f64,
    /// Failures reached 1% of the replicates.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningHistogram {
    pub epsilon: f64,
    pub theta_c: Vec<f64>,
    pub sample: Which,
    pub grid: Vec<f64>,
    pub counts: Vec<usize>,
    pub mode: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub stream_scheme: String,
    pub cells: Vec<Cell>,
    pub tuning: Vec<TuningHistogram>,
}

/// Overwrites round(ε·len) positions, chosen by a partial Fisher-Yates
/// shuffle, with draws from f_{θ_c}. Returns the number replaced.
pub fn contaminate(
    sample: &mut [f64],
    epsilon: f64,
    family: &(impl ParametricFamily + ?Sized),
    theta_c: &[f64],
    stream: &mut Stream,
) -> Result<usize> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("ε = {epsilon} outside [0, 1)")));
    }
    let k = (epsilon * sample.len() as f64).round() as usize;
    if k == 0 {
        return Ok(0);
    }
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    for i in 0..k {
        let j = i + stream.below(sample.len() - i);
        idx.swap(i, j);
    }
    for &i in &idx[..k] {
        sample[i] = stream.draw(family, theta_c)?;
    }
    Ok(k)
}

fn scenarios(config: &SimulationConfig) -> Vec<Contamination> {
    if config.contamination.is_empty() {
        vec![Contamination::none()]
    } else {
        config.contamination.clone()
    }
}

fn validate(config: &SimulationConfig, family: &dyn ParametricFamily) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidInput(m));
    if config.replicates == 0 {
        return bad("replicates must be at least 1".into());
    }
    if config.n < 2 || config.m < 2 {
        return bad("sample sizes must be at least 2".into());
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return bad(format!("level {} outside (0, 1)", config.alpha));
    }
    for t in [&config.theta1, &config.theta2] {
        crate::family::check_theta(family, t)?;
    }
    if let Some(b) = config.betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return bad(format!("tuning parameter {b} must be >= 0"));
    }
    if config.test == SimTest::PartialHomogeneity && family.dim() < 2 {
        return bad(format!("partial homogeneity needs a nuisance parameter; {} has none", family.name()));
    }
    let sc = scenarios(config);
    if sc.len() as u64 + 2 > rng::MAX_PURPOSE {
        return bad("too many contamination scenarios".into());
    }
    for c in &sc {
        if !(0.0..1.0).contains(&c.epsilon) {
            return bad(format!("ε = {} outside [0, 1)", c.epsilon));
        }
        if c.epsilon > 0.0 {
            crate::family::check_theta(family, &c.theta_c)?;
        }
    }
    if config.betas.is_empty() && config.tuning.is_none() {
        return bad("nothing to simulate: give betas or a tuning grid".into());
    }
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("RTS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// The replicate's two samples after contamination scenario `j`.
fn replicate_samples(
    config: &SimulationConfig,
    family: &dyn ParametricFamily,
    k: u64,
    j: usize,
    scenario: &Contamination,
) -> Result<(Sample, Sample)> {
    let mut x = Stream::new(config.seed, k, rng::SAMPLE1).sample(family, &config.theta1, config.n)?;
    let mut y = Stream::new(config.seed, k, rng::SAMPLE2).sample(family, &config.theta2, config.m)?;
    let mut s = Stream::new(config.seed, k, 2 + j as u64);
    if matches!(scenario.sample, Which::First | Which::Both) {
        contaminate(&mut x, scenario.epsilon, family, &scenario.theta_c, &mut s)?;
    }
    if matches!(scenario.sample, Which::Second | Which::Both) {
        contaminate(&mut y, scenario.epsilon, family, &scenario.theta_c, &mut s)?;
    }
    Ok((Sample::new(x)?, Sample::new(y)?))
}

fn run_test(
    config: &SimulationConfig,
    family: &dyn ParametricFamily,
    x: &Sample,
    y: &Sample,
    beta: f64,
) -> Result<bool> {
    let r = match config.test {
        SimTest::Simple => simple_test(family, x, y, beta, config.alpha)?,
        SimTest::PartialHomogeneity => partial_homogeneity_test(family, x, y, 1, beta, config.alpha)?,
        SimTest::OneSided => {
            let h = config.direction.hypothesis(family.dim());
            one_sided_test(family, x, y, &h, beta, config.alpha)?
        }
    };
    Ok(r.reject)
}

fn replaced(config: &SimulationConfig, c: &Contamination) -> usize {
    let len = match c.sample {
        Which::First => config.n,
        _ => config.m,
    };
    (c.epsilon * len as f64).round() as usize
}

/// Empirical rejection rates for every (scenario, β) cell.
pub fn run_study(config: &SimulationConfig) -> Result<Vec<Cell>> {
    let family = config.family.build()?;
    let family = family.as_ref();
    validate(config, family)?;
    let sc = scenarios(config);
    // outcome[k][j][b]: Some(reject) or None on failure
    let outcomes: Vec<Vec<Vec<Option<bool>>>> = thread_pool()?.install(|| {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|k| {
                sc.iter()
                    .enumerate()
                    .map(|(j, c)| match replicate_samples(config, family, k, j, c) {
                        Ok((x, y)) => config
                            .betas
                            .iter()
                            .map(|&b| run_test(config, family, &x, &y, b).ok())
                            .collect(),
                        Err(_) => vec![None; config.betas.len()],
                    })
                    .collect()
            })
            .collect()
    });
    let mut cells = Vec::new();
    for (j, c) in sc.iter().enumerate() {
        for (b, &beta) in config.betas.iter().enumerate() {
            let (mut rej, mut fail) = (0, 0);
            for rep in &outcomes {
                match rep[j][b] {
                    Some(true) => rej += 1,
                    Some(false) => {}
                    None => fail += 1,
                }
            }
            let used = config.replicates - fail;
            let rate = if used > 0 { rej as f64 / used as f64 } else { f64::NAN };
            let mc_se = if used > 0 { (rate * (1.0 - rate) / used as f64).sqrt() } else { f64::NAN };
            cells.push(Cell {
                beta,
                epsilon: c.epsilon,
                theta_c: c.theta_c.clone(),
                sample: c.sample,
                replaced: replaced(config, c),
                replicates: config.replicates,
                failures: fail,
                rejections: rej,
                rate,
                mc_se,
                flagged: fail as f64 >= 0.01 * config.replicates as f64,
            });
        }
    }
    Ok(cells)
}

/// Histogram of the β chosen by the summed estimated-MSE criterion.
pub fn run_tuning_study(config: &SimulationConfig) -> Result<Vec<TuningHistogram>> {
    let family = config.family.build()?;
    let family = family.as_ref();
    validate(config, family)?;
    let tuning = config
        .tuning
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("no tuning grid configured".into()))?;
    if tuning.grid.is_empty() {
        return Err(Error::InvalidInput("empty tuning grid".into()));
    }
    let sc = scenarios(config);
    let chosen: Vec<Vec<Option<f64>>> = thread_pool()?.install(|| {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|k| {
                sc.iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let (x, y) = replicate_samples(config, family, k, j, c).ok()?;
                        select_beta_with(family, &x, &y, &tuning.grid, tuning.pilot_beta)
                            .ok()
                            .map(|s| s.beta)
                    })
                    .collect()
            })
            .collect()
    });
    Ok(sc
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut counts = vec![0usize; tuning.grid.len()];
            let mut failures = 0;
            for rep in &chosen {
                match rep[j] {
                    Some(b) => {
                        if let Some(i) = tuning.grid.iter().position(|g| *g == b) {
                            counts[i] += 1;
                        }
                    }
                    None => failures += 1,
                }
            }
            // ties in the histogram go to the smaller β
            let mut mode = 0;
            for i in 1..counts.len() {
                if counts[i] > counts[mode] {
                    mode = i;
                }
            }
            TuningHistogram {
                epsilon: c.epsilon,
                theta_c: c.theta_c.clone(),
                sample: c.sample,
                grid: tuning.grid.clone(),
                counts,
                mode: tuning.grid[mode],
                failures,
            }
        })
        .collect())
}

/// Runs whatever the configuration asks for: size/power cells when β values
/// are given, the tuning histogram when a grid is given.
pub fn run(config: &SimulationConfig) -> Result<SimulationReport> {
    let cells = if config.betas.is_empty() {
        vec![]
    } else {
        run_study(config)?
    };
    let tuning = if config.tuning.is_some() {
        run_tuning_study(config)?
    } else {
        vec![]
    };
    Ok(SimulationReport {
        config: config.clone(),
        stream_scheme: "chacha8(seed), stream = replicate << 16 | purpose; purpose 0/1 samples, 2+j scenario j".into(),
        cells,
        tuning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SimulationConfig {
        SimulationConfig {
            family: FamilySpec::NormalKnownSigma { sigma: 1.0 },
            test: SimTest::Simple,
            direction: Direction::SecondLarger,
            theta1: vec![0.0],
            theta2: vec![0.0],
            n: 20,
            m: 20,
            replicates: 40,
            betas: vec![0.0, 0.5],
            alpha: 0.05,
            seed: 11,
            contamination: vec![],
            tuning: None,
        }
    }

    #[test]
    fn contaminate_counts() {
        let f = crate::family::NormalKnownVar::new(1.0).unwrap();
        let mut s = Stream::new(1, 0, 2);
        let mut x = vec![0.0; 50];
        assert_eq!(contaminate(&mut x, 0.0, &f, &[100.0], &mut s).unwrap(), 0);
        assert!(x.iter().all(|v| *v == 0.0));
        assert_eq!(contaminate(&mut x, 0.2, &f, &[100.0], &mut s).unwrap(), 10);
        assert_eq!(x.iter().filter(|v| **v > 50.0).count(), 10);
        let mut y = vec![0.0; 50];
        contaminate(&mut y, 0.2, &f, &[100.0], &mut Stream::new(1, 0, 2)).unwrap();
        let mut z = vec![0.0; 50];
        contaminate(&mut z, 0.2, &f, &[100.0], &mut Stream::new(1, 0, 2)).unwrap();
        assert_eq!(y, z);
        assert!(contaminate(&mut z, 1.0, &f, &[100.0], &mut s).is_err());
    }

    #[test]
    fn cells_are_consistent() {
        let cells = run_study(&config()).unwrap();
        assert_eq!(cells.len(), 2);
        for c in &cells {
            assert_eq!(c.failures, 0);
            assert!(c.rate >= 0.0 && c.rate <= 1.0);
            assert_eq!(c.rate, c.rejections as f64 / 40.0);
            assert!((c.mc_se - (c.rate * (1.0 - c.rate) / 40.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_replicate_histogram_is_point_mass() {
        let mut c = config();
        c.replicates = 1;
        c.betas.clear();
        c.tuning = Some(TuningConfig { grid: vec![0.0, 0.5, 1.0], pilot_beta: 1.0 });
        let h = run_tuning_study(&c).unwrap();
        assert_eq!(h[0].counts.iter().sum::<usize>(), 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = config();
        c.replicates = 0;
        assert!(run(&c).is_err());
        let mut c = config();
        c.test = SimTest::PartialHomogeneity;
        assert!(run(&c).is_err());
        let mut c = config();
        c.contamination = vec![Contamination { epsilon: 0.1, theta_c: vec![], sample: Which::Second }];
        assert!(run(&c).is_err());
    }
}
