//! Simulated annealing over rule trees with local moves.
//!
//! Each start builds a random depth-one rule and runs `num_iterations`
//! Metropolis steps under a geometric temperature schedule. Starts are
//! independent (each has its own seed derived from the master seed) and
//! run in parallel when the `parallel` feature is enabled.

mod moves;

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::metrics::{objective, Confusion, MetricKind};
use crate::rng::{self, Rng};

pub use moves::{
    apply_move, generate_initial_rule, propose_local_move, LocalMoveProposer, Move, MoveKind,
    UNBOUNDED_INITIAL_LITERALS,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub num_starts: usize,
    pub num_iterations: usize,
    pub t_high: f64,
    pub t_low: f64,
    pub max_complexity: Option<usize>,
    pub lambda: f64,
    pub metric: MetricKind,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            num_starts: 20,
            num_iterations: 2000,
            t_high: 0.2,
            t_low: 1e-6,
            max_complexity: None,
            lambda: 0.0,
            metric: MetricKind::BalancedAccuracy,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_starts == 0 {
            return Err(Error::config("num_starts must be at least 1"));
        }
        if self.num_iterations < 2 {
            return Err(Error::config("num_iterations must be at least 2"));
        }
        if !(self.t_low > 0.0 && self.t_high > self.t_low && self.t_high.is_finite()) {
            return Err(Error::config(format!(
                "temperatures must satisfy t_high > t_low > 0 (got {} and {})",
                self.t_high, self.t_low
            )));
        }
        if let Some(c) = self.max_complexity {
            if c < 3 {
                return Err(Error::config(format!("max_complexity {c} is below the minimum of 3")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be a finite non-negative number (got {})", self.lambda)));
        }
        Ok(())
    }
}

/// Geometric schedule from `t_high` at iteration 0 to `t_low` at the last.
pub fn temperature(i: usize, config: &SolverConfig) -> f64 {
    let frac = i as f64 / (config.num_iterations - 1) as f64;
    config.t_high * (config.t_low / config.t_high).powf(frac)
}

/// Metropolis rule for maximization: always accept `dE >= 0`, otherwise
/// accept with probability `exp(dE / T)`.
pub fn metropolis_accept(de: f64, t: f64, rng: &mut Rng) -> bool {
    de >= 0.0 || rng.gen::<f64>() < (de / t).exp()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    #[default]
    Local,
    NonLocal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub start: usize,
    pub iteration: usize,
    pub temperature: f64,
    /// Objective of the current rule after the accept/reject decision.
    pub objective: f64,
    /// Best objective seen so far in this start.
    pub best: f64,
    pub accepted: bool,
    pub proposal: ProposalKind,
    /// Rows in the non-local subproblem, when one was built.
    pub subproblem_rows: Option<usize>,
    /// Wall-clock seconds spent solving the non-local subproblem.
    pub solve_seconds: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Best objective of each start.
    pub start_best: Vec<f64>,
}

impl Trace {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "start,iteration,temperature,objective,best,accepted,proposal,subproblem_rows,solve_seconds"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:e},{},{},{},{},{},{}",
                r.start,
                r.iteration,
                r.temperature,
                r.objective,
                r.best,
                r.accepted as u8,
                match r.proposal {
                    ProposalKind::Local => "local",
                    ProposalKind::NonLocal => "nonlocal",
                },
                r.subproblem_rows.map_or(String::new(), |n| n.to_string()),
                r.solve_seconds.map_or(String::new(), |s| format!("{s:.6}")),
            )?;
        }
        Ok(())
    }

    /// Records of one start, in iteration order.
    pub fn start(&self, start: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.start == start)
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub formula: Formula,
    pub objective: f64,
    pub score: f64,
    pub trace: Trace,
}

/// Shared read-only state of one solve.
pub(crate) struct Problem<'a> {
    pub x: &'a BitMatrix,
    pub y: &'a BitVector,
    pub config: &'a SolverConfig,
}

impl Problem<'_> {
    pub fn score(&self, rule: &Formula) -> f64 {
        Confusion::new(&rule.root().evaluate(self.x), self.y).metric(self.config.metric)
    }

    pub fn objective(&self, rule: &Formula) -> (f64, f64) {
        let s = self.score(rule);
        (s, objective(s, rule.complexity(), self.config.lambda))
    }
}

/// Result of asking for a non-local proposal at one iteration.
pub(crate) enum NonLocalOutcome {
    /// Gating conditions not met; no work was done.
    Skipped,
    /// A subproblem was attempted; `mv` is `None` if it produced nothing.
    Attempted {
        mv: Option<Move>,
        rows: usize,
        seconds: f64,
    },
}

/// Inputs to the non-local hook: current rule, iteration, iterations since
/// the last improvement of the start's best objective.
pub(crate) type NonLocalHook<'a> =
    dyn Fn(&Formula, usize, usize, &mut Rng) -> NonLocalOutcome + Sync + 'a;

pub(crate) fn check_data(x: &BitMatrix, y: &BitVector) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let pos = y.count_ones();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    if x.cols() < 2 {
        return Err(Error::data("at least two features are needed"));
    }
    Ok(())
}

struct StartResult {
    best: Formula,
    best_score: f64,
    best_objective: f64,
    records: Vec<TraceRecord>,
}

fn run_start(problem: &Problem<'_>, start: usize, hook: &NonLocalHook<'_>) -> Result<StartResult> {
    let config = problem.config;
    let mut rng = rng::seeded(rng::derive_seed(config.seed, start as u64));
    let mut proposer = LocalMoveProposer::new(problem.x.cols(), config.max_complexity);

    let mut current = generate_initial_rule(problem.x.cols(), config.max_complexity, &mut rng)?;
    let (mut current_score, mut current_obj) = problem.objective(&current);
    let mut best = current.clone();
    let (mut best_score, mut best_obj) = (current_score, current_obj);
    let mut since_improvement = 0;
    let mut records = Vec::with_capacity(config.num_iterations);

    for iteration in 0..config.num_iterations {
        let t = temperature(iteration, config);
        let (mut proposal, mut rows, mut seconds, mut mv) = (ProposalKind::Local, None, None, None);
        if let NonLocalOutcome::Attempted { mv: m, rows: n, seconds: s } =
            hook(&current, iteration, since_improvement, &mut rng)
        {
            rows = Some(n);
            seconds = Some(s);
            if m.is_some() {
                proposal = ProposalKind::NonLocal;
            }
            mv = m;
        }
        let mv = match mv {
            Some(m) => m,
            None => proposer.propose(&current, &mut rng)?,
        };
        let candidate = apply_move(&current, &mv)?;
        debug_assert!(candidate.validate(Some(problem.x.cols()), config.max_complexity).is_ok());
        let (cand_score, cand_obj) = problem.objective(&candidate);
        let accepted = metropolis_accept(cand_obj - current_obj, t, &mut rng);
        if accepted {
            current = candidate;
            current_score = cand_score;
            current_obj = cand_obj;
        }
        if current_obj > best_obj {
            best = current.clone();
            best_score = current_score;
            best_obj = current_obj;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        records.push(TraceRecord {
            start,
            iteration,
            temperature: t,
            objective: current_obj,
            best: best_obj,
            accepted,
            proposal,
            subproblem_rows: rows,
            solve_seconds: seconds,
        });
    }
    Ok(StartResult {
        best,
        best_score,
        best_objective: best_obj,
        records,
    })
}

pub(crate) fn solve_with_hook(
    x: &BitMatrix,
    y: &BitVector,
    config: &SolverConfig,
    hook: &NonLocalHook<'_>,
) -> Result<SolveResult> {
    config.validate()?;
    check_data(x, y)?;
    let problem = Problem { x, y, config };
    let run = |s: usize| run_start(&problem, s, hook);

    #[cfg(feature = "parallel")]
    let results: Vec<Result<StartResult>> = {
        use rayon::prelude::*;
        (0..config.num_starts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<StartResult>> = (0..config.num_starts).map(run).collect();

    let mut trace = Trace::default();
    let mut winner: Option<StartResult> = None;
    for r in results {
        let r = r?;
        trace.start_best.push(r.best_objective);
        trace.records.extend(r.records.iter().cloned());
        // Strict comparison keeps the first-found best on ties.
        if winner.as_ref().is_none_or(|w| r.best_objective > w.best_objective) {
            winner = Some(r);
        }
    }
    let w = winner.expect("at least one start");
    Ok(SolveResult {
        formula: w.best,
        objective: w.best_objective,
        score: w.best_score,
        trace,
    })
}

/// Multi-start simulated annealing with local moves only.
pub fn solve(x: &BitMatrix, y: &BitVector, config: &SolverConfig) -> Result<SolveResult> {
    solve_with_hook(x, y, config, &|_, _, _, _| NonLocalOutcome::Skipped)
}
