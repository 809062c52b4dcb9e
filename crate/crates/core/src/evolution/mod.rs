//! Generational training loop: evaluate, decimate, duplicate and mutate.

mod archive;
mod mutation;
mod params;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use archive::Archive;
pub use mutation::{mutate_line, mutate_program, mutate_team, random_address, random_line, random_program};
pub use params::{EvolutionParams, FitnessAggregation, ParamError};

use crate::data::SourceLayout;
use crate::environments::LearningEnvironment;
use crate::graph::{EdgeId, GraphError, TeamId, TpgGraph, Vertex};
use crate::instructions::InstructionSet;
use crate::parallel::{evaluate_all_policies, parallel_mutate_programs, ParallelError, Rng};
use crate::program::{ProgramContext, ProgramError};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("environment exposes {0} actions, at least 2 are needed")]
    TooFewActions(usize),
    #[error("no fitness for root {0}")]
    MissingFitness(TeamId),
    #[error("no surviving root to duplicate")]
    NoSurvivors,
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Parallel(#[from] ParallelError),
}

/// Builds the initial population: `nbRoots` root teams whose edges all lead
/// to actions.
///
/// Draw order, per root: edge count `k` in `[2, maxInitOutgoingEdges]`, then
/// for each edge its action followed by its program (length, then lines). The
/// second edge's action is drawn among the actions other than the first one.
pub fn init_population(
    params: &EvolutionParams,
    ctx: Arc<ProgramContext>,
    action_count: usize,
    rng: &mut Rng,
) -> Result<TpgGraph, EvolutionError> {
    if action_count < 2 {
        return Err(EvolutionError::TooFewActions(action_count));
    }
    params.validate()?;
    let mut graph = TpgGraph::new(ctx.clone(), action_count);
    for _ in 0..params.nb_roots {
        let team = graph.add_team();
        let edges = rng.range_inclusive(2, params.max_init_outgoing_edges);
        let mut first = 0;
        for i in 0..edges {
            let action = match i {
                0 => {
                    first = rng.below(action_count);
                    first
                }
                1 => {
                    let a = rng.below(action_count - 1);
                    if a >= first {
                        a + 1
                    } else {
                        a
                    }
                }
                _ => rng.below(action_count),
            };
            let program = random_program(&ctx, params.max_program_size, rng);
            graph.add_edge(team, Vertex::Action(action), program)?;
        }
    }
    Ok(graph)
}

/// Removes the `floor(ratioDeletedRoots × nbRoots)` roots with the lowest
/// fitness, the newest first among equals. Returns the removed roots.
///
/// Teams exposed as roots by a removal are kept and are not candidates for
/// removal in this call.
pub fn decimate(
    graph: &mut TpgGraph,
    fitness: &BTreeMap<TeamId, f64>,
    params: &EvolutionParams,
) -> Result<Vec<TeamId>, EvolutionError> {
    let mut ranked = Vec::new();
    for root in graph.roots() {
        let f = *fitness.get(&root).ok_or(EvolutionError::MissingFitness(root))?;
        ranked.push((root, f));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
    let removed: Vec<TeamId> = ranked
        .into_iter()
        .take(params.deleted_roots())
        .map(|(t, _)| t)
        .collect();
    for root in &removed {
        graph.remove_root(*root)?;
    }
    Ok(removed)
}

/// Outcome of [`populate`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Offspring {
    pub new_roots: Vec<TeamId>,
    /// Edges whose programs still have to go through [`mutate_program`].
    pub edges_to_mutate: Vec<EdgeId>,
}

/// Clones uniformly drawn `parents` and mutates the clones' topology until the
/// graph holds `nbRoots` roots. New edges may only point at teams that
/// existed before this call.
pub fn populate(
    graph: &mut TpgGraph,
    parents: &[TeamId],
    params: &EvolutionParams,
    rng: &mut Rng,
) -> Result<Offspring, EvolutionError> {
    if parents.is_empty() {
        return Err(EvolutionError::NoSurvivors);
    }
    let candidates = graph.team_ids();
    let mut offspring = Offspring::default();
    while graph.roots().len() < params.nb_roots {
        let parent = *rng.pick(parents).expect("non-empty");
        let clone = graph.clone_team(parent)?;
        let marked = mutate_team(graph, clone, &candidates, params, rng)?;
        offspring.new_roots.push(clone);
        offspring.edges_to_mutate.extend(marked);
    }
    offspring.edges_to_mutate.sort_unstable();
    Ok(offspring)
}

/// Summary of one generation.
#[derive(Clone, Debug)]
pub struct GenerationReport {
    pub generation: usize,
    /// `(root, fitness)` for every evaluated root, ascending id.
    pub fitness: Vec<(TeamId, f64)>,
    pub champion: TeamId,
    pub champion_fitness: f64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub worst_fitness: f64,
    /// Graph statistics at evaluation time.
    pub team_count: usize,
    pub edge_count: usize,
    pub mean_program_length: f64,
    pub evaluation_time: Duration,
    pub mutation_time: Duration,
    pub removed_roots: Vec<TeamId>,
    /// Evaluated roots that survived decimation.
    pub survivors: Vec<TeamId>,
    pub new_roots: Vec<TeamId>,
    /// Edges whose programs were mutated in the parallel phase.
    pub mutated_programs: usize,
    pub roots_after: usize,
    pub faults: Vec<String>,
}

/// Owns the whole training state. Every random decision is derived from the
/// master generator seeded at construction.
pub struct Trainer {
    graph: TpgGraph,
    env: Box<dyn LearningEnvironment>,
    params: EvolutionParams,
    archive: Archive,
    master: Rng,
    threads: usize,
    generation: usize,
    champion: Option<(f64, TpgGraph)>,
}

impl Trainer {
    pub fn new(
        params: EvolutionParams,
        instructions: Arc<InstructionSet>,
        env: Box<dyn LearningEnvironment>,
        seed: u64,
        threads: usize,
    ) -> Result<Self, EvolutionError> {
        params.validate()?;
        let layout = SourceLayout::of(params.nb_registers, env.data_sources());
        let ctx = Arc::new(ProgramContext::new(instructions, layout)?);
        let mut master = Rng::new(seed);
        let graph = init_population(&params, ctx, env.action_count(), &mut master)?;
        Ok(Self {
            graph,
            env,
            archive: Archive::new(params.archive_size),
            params,
            master,
            threads: threads.max(1),
            generation: 0,
            champion: None,
        })
    }

    pub fn graph(&self) -> &TpgGraph {
        &self.graph
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn environment(&self) -> &dyn LearningEnvironment {
        self.env.as_ref()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Number of master generator draws so far.
    pub fn master_draws(&self) -> u64 {
        self.master.draw_count()
    }

    pub fn set_threads(&mut self, threads: usize) {
        self.threads = threads.max(1);
    }

    /// Policy of the best root of the latest evaluation, with its fitness.
    pub fn champion(&self) -> Option<(f64, &TpgGraph)> {
        self.champion.as_ref().map(|(f, g)| (*f, g))
    }

    pub fn run_generation(&mut self) -> Result<GenerationReport, EvolutionError> {
        let team_count = self.graph.team_count();
        let edge_count = self.graph.edge_count();
        let mean_program_length = self
            .graph
            .edges()
            .map(|e| e.program.len() as f64)
            .sum::<f64>()
            / edge_count.max(1) as f64;

        let started = Instant::now();
        let evaluation = evaluate_all_policies(
            &self.graph,
            self.env.as_ref(),
            &self.params,
            &mut self.master,
            &mut self.archive,
            self.threads,
        )?;
        let evaluation_time = started.elapsed();

        let fitness = evaluation.fitness;
        let (champion, champion_fitness) = *fitness
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("population is never empty");
        let worst_fitness = fitness.iter().map(|f| f.1).min_by(f64::total_cmp).expect("non-empty");
        let mean_fitness = fitness.iter().map(|f| f.1).sum::<f64>() / fitness.len() as f64;
        self.champion = Some((champion_fitness, self.graph.extract_champion(champion)?));
        let faults = evaluation.traces.into_iter().flat_map(|t| t.faults).collect();

        let started = Instant::now();
        let evaluated: BTreeMap<TeamId, f64> = fitness.iter().copied().collect();
        let removed_roots = decimate(&mut self.graph, &evaluated, &self.params)?;
        let removed: BTreeSet<TeamId> = removed_roots.iter().copied().collect();
        let survivors: Vec<TeamId> = fitness
            .iter()
            .map(|f| f.0)
            .filter(|t| !removed.contains(t))
            .collect();
        let offspring = populate(&mut self.graph, &survivors, &self.params, &mut self.master)?;
        self.archive.refresh_signatures(&self.graph)?;
        parallel_mutate_programs(
            &mut self.graph,
            &offspring.edges_to_mutate,
            &self.params,
            &self.archive,
            &mut self.master,
            self.threads,
        )?;
        let mutation_time = started.elapsed();

        let report = GenerationReport {
            generation: self.generation,
            fitness,
            champion,
            champion_fitness,
            best_fitness: champion_fitness,
            mean_fitness,
            worst_fitness,
            team_count,
            edge_count,
            mean_program_length,
            evaluation_time,
            mutation_time,
            removed_roots,
            survivors,
            new_roots: offspring.new_roots,
            mutated_programs: offspring.edges_to_mutate.len(),
            roots_after: self.graph.roots().len(),
            faults,
        };
        self.generation += 1;
        Ok(report)
    }
}
