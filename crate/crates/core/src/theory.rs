//! Query-success-rate calculators and their Monte Carlo validators.
//!
//! Closed forms count an oracle-guided selection as a success only when the
//! oracle approved the returned query; the fallback to the top-ranked query
//! is a separate term exposed by the `*_with_fallback` variants. The
//! simulator reports both measures.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Top,
    Oaqs,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Top, Strategy::Oaqs];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Fraction of the query population the human can answer.
    pub aqsr: f64,
    /// Oracle specificity: P(judged unanswerable | unanswerable).
    pub y0: f64,
    /// Oracle sensitivity: P(judged answerable | answerable).
    pub y1: f64,
    pub k: usize,
    /// Size of the candidate list.
    pub n_queries: usize,
}

impl TheoryParams {
    pub fn new(aqsr: f64, y0: f64, y1: f64, k: usize, n_queries: usize) -> Result<Self> {
        let p = Self { aqsr, y0, y1, k, n_queries };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("aqsr", self.aqsr), ("y0", self.y0), ("y1", self.y1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.k == 0 || self.n_queries == 0 {
            return Err(Error::Domain("k and n_queries must be positive".into()));
        }
        Ok(())
    }

    /// Per-query probability that the oracle rejects a random query.
    pub fn rejection_rate(&self) -> f64 {
        self.aqsr * (1.0 - self.y0 - self.y1) + self.y0
    }
}

/// `Σ_{i<K} r^i`, using the `K` limit at `r = 1`.
fn geometric_sum(r: f64, k: usize) -> f64 {
    if (1.0 - r).abs() < 1e-12 {
        k as f64
    } else {
        (1.0 - r.powi(k as i32)) / (1.0 - r)
    }
}

/// Probability that the strategy returns an answerable query.
pub fn qsr_closed_form(strategy: Strategy, p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let v = match strategy {
        Strategy::Random | Strategy::Top => p.aqsr,
        Strategy::Oaqs => p.aqsr * p.y1 * geometric_sum(p.rejection_rate(), p.k),
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Probability that the strategy returns the best-ranked answerable query.
pub fn oqsr_closed_form(strategy: Strategy, p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let v = match strategy {
        Strategy::Random => 1.0 / p.n_queries as f64,
        Strategy::Top => p.aqsr,
        Strategy::Oaqs => p.aqsr * p.y1 * geometric_sum((1.0 - p.aqsr) * p.y0, p.k),
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Oracle-guided QSR including the unapproved fallback to the top query.
pub fn oaqs_qsr_with_fallback(p: &TheoryParams) -> Result<f64> {
    let r = p.rejection_rate();
    Ok((qsr_closed_form(Strategy::Oaqs, p)? + p.aqsr * (1.0 - p.y1) * r.powi(p.k as i32 - 1)).clamp(0.0, 1.0))
}

/// Oracle-guided OQSR including the unapproved fallback to the top query.
pub fn oaqs_oqsr_with_fallback(p: &TheoryParams) -> Result<f64> {
    let r = p.rejection_rate();
    Ok((oqsr_closed_form(Strategy::Oaqs, p)? + p.aqsr * (1.0 - p.y1) * r.powi(p.k as i32 - 1)).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorollaryGap {
    pub oaqs_beats_top_qsr: bool,
    pub oaqs_beats_top_oqsr: bool,
    pub oaqs_beats_random_oqsr: bool,
}

/// The large-`K` dominance conditions.
pub fn corollary_gap(p: &TheoryParams) -> Result<CorollaryGap> {
    p.validate()?;
    let miss = (1.0 - p.aqsr) * p.y0;
    Ok(CorollaryGap {
        oaqs_beats_top_qsr: p.y0 + p.y1 > 1.0,
        oaqs_beats_top_oqsr: miss + p.y1 > 1.0,
        oaqs_beats_random_oqsr: p.aqsr * p.y1 > (1.0 - miss) / p.n_queries as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub successes: u64,
    pub trials: u64,
}

impl Estimate {
    fn from_counts(successes: u64, trials: u64) -> Self {
        let value = successes as f64 / trials as f64;
        let std_error = (value * (1.0 - value) / trials as f64).sqrt();
        Self { value, std_error, successes, trials }
    }

    /// Distance to `target` in standard errors; a zero-SE estimate is either
    /// exact (0) or infinitely far.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    /// Answerable and (for OAQS) oracle-approved.
    pub qsr: Estimate,
    /// Best answerable query and (for OAQS) oracle-approved.
    pub oqsr: Estimate,
    pub qsr_with_fallback: Estimate,
    pub oqsr_with_fallback: Estimate,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    qsr: u64,
    oqsr: u64,
    qsr_fb: u64,
    oqsr_fb: u64,
}

impl Counts {
    fn merge(self, o: Counts) -> Counts {
        Counts {
            qsr: self.qsr + o.qsr,
            oqsr: self.oqsr + o.oqsr,
            qsr_fb: self.qsr_fb + o.qsr_fb,
            oqsr_fb: self.oqsr_fb + o.oqsr_fb,
        }
    }
}

/// A freshly drawn ranked population whose answerability is revealed lazily.
struct Population<'a> {
    rng: &'a mut ChaCha8Rng,
    aqsr: f64,
    revealed: Vec<bool>,
}

impl Population<'_> {
    fn answerable(&mut self, i: usize) -> bool {
        while self.revealed.len() <= i {
            let a = self.rng.random::<f64>() < self.aqsr;
            self.revealed.push(a);
        }
        self.revealed[i]
    }

    /// Whether `i` is the first answerable position.
    fn is_best(&mut self, i: usize) -> bool {
        if !self.answerable(i) {
            return false;
        }
        (0..i).all(|j| !self.answerable(j))
    }
}

fn run_trial(strategy: Strategy, p: &TheoryParams, rng: &mut ChaCha8Rng, c: &mut Counts) {
    let mut pop = Population { rng, aqsr: p.aqsr, revealed: Vec::with_capacity(p.k.min(64)) };
    let (returned, approved) = match strategy {
        Strategy::Top => (0, true),
        Strategy::Random => {
            let i = pop.rng.random_range(0..p.n_queries);
            (i, true)
        }
        Strategy::Oaqs => {
            let mut pick = None;
            for i in 0..p.k.min(p.n_queries) {
                let a = pop.answerable(i);
                let u: f64 = pop.rng.random();
                let says_yes = if a { u < p.y1 } else { u >= p.y0 };
                if says_yes {
                    pick = Some(i);
                    break;
                }
            }
            match pick {
                Some(i) => (i, true),
                None => (0, false),
            }
        }
    };
    let answerable = pop.answerable(returned);
    let best = pop.is_best(returned);
    c.qsr_fb += u64::from(answerable);
    c.oqsr_fb += u64::from(best);
    c.qsr += u64::from(approved && answerable);
    c.oqsr += u64::from(approved && best);
}

const SHARD_TRIALS: u64 = 8192;

/// Simulates `trials` independent selections, each over a fresh population
/// in which every query is answerable with probability `aqsr`.
pub fn monte_carlo_qsr(strategy: Strategy, p: &TheoryParams, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    p.validate()?;
    if trials == 0 {
        return Err(contract("monte carlo needs at least one trial"));
    }
    let shards = trials.div_ceil(SHARD_TRIALS);
    let counts = (0..shards)
        .into_par_iter()
        .map(|s| {
            let n = SHARD_TRIALS.min(trials - s * SHARD_TRIALS);
            let mut rng = seed::stream(seed, "theory-mc", s);
            let mut c = Counts::default();
            for _ in 0..n {
                run_trial(strategy, p, &mut rng, &mut c);
            }
            c
        })
        .reduce(Counts::default, Counts::merge);
    Ok(MonteCarloEstimate {
        qsr: Estimate::from_counts(counts.qsr, trials),
        oqsr: Estimate::from_counts(counts.oqsr, trials),
        qsr_with_fallback: Estimate::from_counts(counts.qsr_fb, trials),
        oqsr_with_fallback: Estimate::from_counts(counts.oqsr_fb, trials),
    })
}

/// Whether the acquisition-ranked top query was answerable, per iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqsrRecord {
    pub iteration: usize,
    pub answerable: bool,
}

/// Fraction of top-ranked queries that were answerable in a real run.
pub fn empirical_eqsr(log: &[EqsrRecord]) -> Result<f64> {
    if log.is_empty() {
        return Err(contract("empty selection log"));
    }
    Ok(log.iter().filter(|r| r.answerable).count() as f64 / log.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Qsr,
    Oqsr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub aqsr: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub k: Vec<usize>,
    pub n_queries: usize,
    pub strategies: Vec<Strategy>,
    pub measures: Vec<Measure>,
}

impl GridSpec {
    /// 5×5×5 over (AQSR, Y0, Y1), K ∈ {1, 3, 10}, every strategy and measure.
    pub fn default_grid() -> Self {
        let levels = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        Self {
            aqsr: levels.clone(),
            y0: levels.clone(),
            y1: levels,
            k: vec![1, 3, 10],
            n_queries: 200,
            strategies: Strategy::ALL.to_vec(),
            measures: vec![Measure::Qsr, Measure::Oqsr],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationCell {
    pub params: TheoryParams,
    pub strategy: Strategy,
    pub measure: Measure,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid: GridSpec,
    pub trials: u64,
    pub seed: u64,
    pub cells: Vec<ValidationCell>,
    pub max_z: f64,
    pub within_3se: f64,
    pub all_within_4se: bool,
}

impl ValidationReport {
    /// Every cell within 4 SE and at least 99% within 3 SE.
    pub fn passed(&self) -> bool {
        self.all_within_4se && self.within_3se >= 0.99
    }
}

/// Runs the simulator over every grid cell and compares with the closed forms.
pub fn validate_grid(grid: &GridSpec, trials: u64, seed: u64) -> Result<ValidationReport> {
    let mut jobs = Vec::new();
    for &aqsr in &grid.aqsr {
        for &y0 in &grid.y0 {
            for &y1 in &grid.y1 {
                for &k in &grid.k {
                    let params = TheoryParams::new(aqsr, y0, y1, k, grid.n_queries)?;
                    for &strategy in &grid.strategies {
                        jobs.push((params, strategy));
                    }
                }
            }
        }
    }
    let per_job = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, (params, strategy))| {
            let mc = monte_carlo_qsr(*strategy, params, trials, seed::derive_seed(seed, "grid-cell", idx as u64))?;
            grid.measures
                .iter()
                .map(|&measure| {
                    let (closed_form, est) = match measure {
                        Measure::Qsr => (qsr_closed_form(*strategy, params)?, mc.qsr),
                        Measure::Oqsr => (oqsr_closed_form(*strategy, params)?, mc.oqsr),
                    };
                    let z = est.z_score(closed_form);
                    Ok(ValidationCell {
                        params: *params,
                        strategy: *strategy,
                        measure,
                        closed_form,
                        estimate: est.value,
                        std_error: est.std_error,
                        z,
                        pass: z <= 4.0,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<ValidationCell> = per_job.into_iter().flatten().collect();
    let max_z = cells.iter().map(|c| c.z).fold(0.0, f64::max);
    let within_3se = cells.iter().filter(|c| c.z <= 3.0).count() as f64 / cells.len().max(1) as f64;
    let all_within_4se = cells.iter().all(|c| c.pass);
    Ok(ValidationReport { grid: grid.clone(), trials, seed, cells, max_z, within_3se, all_within_4se })
}
