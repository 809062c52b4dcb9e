//! Deterministic master/worker execution.
//!
//! The master thread prepares every job of a phase up front, drawing one seed
//! per job from its own generator in job-id order. Workers (the master
//! included) pull jobs from a single shared queue, reseed a private generator
//! from the job seed, and push `(job id, result)` pairs. Once every worker has
//! returned, results are sorted by job id before the master consumes them.
//! Since a job's result depends only on its payload and seed, the merged
//! outcome of a phase does not depend on the number of workers or on the
//! order in which jobs were picked up.

mod rng;

use std::any::Any;
use std::collections::VecDeque;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Mutex;
use std::thread;

use thiserror::Error;

pub use rng::Rng;

use crate::environments::LearningEnvironment;
use crate::evolution::{mutate_program, Archive, EvolutionParams};
use crate::graph::{EdgeId, GraphError, TeamId, TpgGraph};
use crate::data::Snapshot;
use crate::program::{Executor, Program, ProgramError};

/// Unit of parallel work.
#[derive(Clone, Debug, PartialEq)]
pub struct Job<P> {
    pub id: usize,
    pub seed: u64,
    pub payload: P,
}

/// Shared FIFO of pending jobs.
#[derive(Debug)]
pub struct JobQueue<P> {
    jobs: Mutex<VecDeque<Job<P>>>,
}

impl<P> JobQueue<P> {
    pub fn new(jobs: impl IntoIterator<Item = Job<P>>) -> Self {
        Self {
            jobs: Mutex::new(jobs.into_iter().collect()),
        }
    }

    pub fn next_job(&self) -> Option<Job<P>> {
        self.jobs.lock().expect("job queue poisoned").pop_front()
    }

    pub fn len(&self) -> usize {
        self.jobs.lock().expect("job queue poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Completed results, in completion order until [`ResultQueue::into_sorted`].
#[derive(Debug)]
pub struct ResultQueue<R> {
    results: Mutex<Vec<(usize, R)>>,
}

impl<R> Default for ResultQueue<R> {
    fn default() -> Self {
        Self {
            results: Mutex::new(Vec::new()),
        }
    }
}

impl<R> ResultQueue<R> {
    pub fn push(&self, job_id: usize, result: R) {
        self.results.lock().expect("result queue poisoned").push((job_id, result));
    }

    /// Results in ascending job id order.
    pub fn into_sorted(self) -> Vec<(usize, R)> {
        let mut results = self.results.into_inner().expect("result queue poisoned");
        results.sort_by_key(|(id, _)| *id);
        results
    }
}

#[derive(Debug, Error)]
pub enum ParallelError {
    #[error("worker {worker} panicked: {message}")]
    WorkerPanicked { worker: usize, message: String },
    #[error("job {job} failed: {source}")]
    Graph { job: usize, source: GraphError },
    #[error("job {job} failed: {source}")]
    Program { job: usize, source: ProgramError },
    #[error("phase lost results: {expected} jobs, {received} results")]
    MissingResults { expected: usize, received: usize },
}

/// Builds one job per payload, drawing seeds from `master` in payload order.
pub fn prepare_jobs<P>(payloads: impl IntoIterator<Item = P>, master: &mut Rng) -> Vec<Job<P>> {
    payloads
        .into_iter()
        .enumerate()
        .map(|(id, payload)| Job {
            id,
            seed: derive_seed(master),
            payload,
        })
        .collect()
}

/// Next job seed from the master generator.
pub fn derive_seed(master: &mut Rng) -> u64 {
    master.next_u64()
}

/// Drains `queue` with one worker: for every job, reseed `rng` and run `work`.
pub fn worker_loop<P, R, W>(
    queue: &JobQueue<P>,
    results: &ResultQueue<R>,
    state: &mut W,
    work: &(impl Fn(&mut W, &mut Rng, P) -> R + Sync),
) {
    let mut rng = Rng::new(0);
    while let Some(job) = queue.next_job() {
        rng.reset(job.seed);
        let result = work(state, &mut rng, job.payload);
        results.push(job.id, result);
    }
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string())
}

/// Runs `jobs` on `states.len()` workers: one per state, the calling thread
/// being worker 0. Returns results sorted by job id.
pub fn run_jobs<P, R, W>(
    jobs: Vec<Job<P>>,
    mut states: Vec<W>,
    work: impl Fn(&mut W, &mut Rng, P) -> R + Sync,
) -> Result<Vec<(usize, R)>, ParallelError>
where
    P: Send,
    R: Send,
    W: Send,
{
    assert!(!states.is_empty(), "at least one worker state is required");
    let expected = jobs.len();
    let queue = JobQueue::new(jobs);
    let results = ResultQueue::default();
    let mut master_state = states.remove(0);
    let outcome: Result<(), ParallelError> = thread::scope(|scope| {
        let handles: Vec<_> = states
            .into_iter()
            .map(|mut state| {
                let (queue, results, work) = (&queue, &results, &work);
                scope.spawn(move || worker_loop(queue, results, &mut state, work))
            })
            .collect();
        let master = panic::catch_unwind(AssertUnwindSafe(|| {
            worker_loop(&queue, &results, &mut master_state, &work)
        }));
        let mut failure = master.err().map(|p| ParallelError::WorkerPanicked {
            worker: 0,
            message: panic_message(p),
        });
        for (i, handle) in handles.into_iter().enumerate() {
            if let Err(p) = handle.join() {
                failure.get_or_insert(ParallelError::WorkerPanicked {
                    worker: i + 1,
                    message: panic_message(p),
                });
            }
        }
        failure.map_or(Ok(()), Err)
    });
    outcome?;
    let sorted = results.into_sorted();
    if sorted.len() != expected {
        return Err(ParallelError::MissingResults {
            expected,
            received: sorted.len(),
        });
    }
    Ok(sorted)
}

/// Per-job outcome of a policy evaluation.
#[derive(Clone, Debug, Default)]
pub struct EvalTrace {
    /// Final score of every episode.
    pub scores: Vec<f64>,
    /// States selected for the archive, in recording order.
    pub snapshots: Vec<Snapshot>,
    /// Environment faults, one message per failed episode.
    pub faults: Vec<String>,
}

/// Result of evaluating every root of a graph.
#[derive(Clone, Debug, Default)]
pub struct PolicyEvaluation {
    /// `(root, fitness)` in ascending root id order.
    pub fitness: Vec<(TeamId, f64)>,
    /// Traces in job order (same order as `fitness`).
    pub traces: Vec<EvalTrace>,
}

/// Plays the episodes of one policy evaluation job.
pub fn evaluate_policy(
    graph: &TpgGraph,
    root: TeamId,
    env: &mut dyn LearningEnvironment,
    executor: &mut Executor,
    params: &EvolutionParams,
    rng: &mut Rng,
) -> Result<EvalTrace, GraphError> {
    let max_steps = params
        .max_steps_per_evaluation
        .map_or(env.horizon(), |m| m.min(env.horizon()));
    let mut trace = EvalTrace::default();
    for _ in 0..params.nb_iterations_per_policy_evaluation {
        env.reset(rng.next_u64());
        let mut steps = 0;
        let mut failed = false;
        while !env.is_terminal() && steps < max_steps {
            let inference = graph.infer(root, env.data_sources(), executor)?;
            if rng.chance(params.archiving_probability) {
                trace.snapshots.push(env.snapshot());
            }
            if let Err(e) = env.step(inference.action) {
                trace.faults.push(format!("root {root}: {e}"));
                failed = true;
                break;
            }
            steps += 1;
        }
        trace.scores.push(if failed { env.min_score() } else { env.score() });
    }
    Ok(trace)
}

/// Evaluates every root of `graph` on clones of `env`, then merges the
/// recorded states into `archive` in job order.
pub fn evaluate_all_policies(
    graph: &TpgGraph,
    env: &dyn LearningEnvironment,
    params: &EvolutionParams,
    master: &mut Rng,
    archive: &mut Archive,
    threads: usize,
) -> Result<PolicyEvaluation, ParallelError> {
    let roots = graph.roots();
    let jobs = prepare_jobs(roots.iter().copied(), master);
    let workers = threads.max(1).min(jobs.len().max(1));
    let states: Vec<_> = (0..workers)
        .map(|_| (env.clone_env(), Executor::for_context(graph.context())))
        .collect();
    let results = run_jobs(jobs, states, |(env, executor), rng, root| {
        evaluate_policy(graph, root, env.as_mut(), executor, params, rng)
    })?;
    let mut evaluation = PolicyEvaluation::default();
    for ((job, result), root) in results.into_iter().zip(roots) {
        let trace = result.map_err(|source| ParallelError::Graph { job, source })?;
        evaluation
            .fitness
            .push((root, params.fitness_aggregation.aggregate(&trace.scores)));
        evaluation.traces.push(trace);
    }
    for trace in &evaluation.traces {
        for snapshot in &trace.snapshots {
            archive.record(snapshot.clone());
        }
    }
    Ok(evaluation)
}

/// Mutates the programs of `edges` in parallel, one job per program in edge
/// id order. The archive signatures must be current.
pub fn parallel_mutate_programs(
    graph: &mut TpgGraph,
    edges: &[EdgeId],
    params: &EvolutionParams,
    archive: &Archive,
    master: &mut Rng,
    threads: usize,
) -> Result<(), ParallelError> {
    let mut ordered: Vec<EdgeId> = edges.to_vec();
    ordered.sort_unstable();
    ordered.dedup();
    if ordered.is_empty() {
        return Ok(());
    }
    let programs: Vec<Program> = ordered
        .iter()
        .map(|e| std::mem::take(&mut graph.edge_mut(*e).expect("edge to mutate exists").program))
        .collect();
    let jobs = prepare_jobs(programs, master);
    let ctx = graph.context().clone();
    let workers = threads.max(1).min(jobs.len());
    let states: Vec<_> = (0..workers).map(|_| Executor::for_context(&ctx)).collect();
    let results = run_jobs(jobs, states, |executor, rng, mut program: Program| {
        mutate_program(&mut program, params, &ctx, archive, rng, executor).map(|_| program)
    })?;
    for ((job, result), edge) in results.into_iter().zip(ordered) {
        let program = result.map_err(|source| ParallelError::Program { job, source })?;
        graph.edge_mut(edge).expect("edge to mutate exists").program = program;
    }
    Ok(())
}
