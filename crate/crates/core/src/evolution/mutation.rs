//! Program and team mutation operators.
//!
//! Random draws happen in a fixed order so that a mutation is a pure function
//! of its inputs and of the generator state.

use crate::data::{Address, OperandType};
use crate::graph::{EdgeId, GraphError, TeamId, TpgGraph, Vertex};
use crate::parallel::Rng;
use crate::program::{Executor, Line, Program, ProgramContext, ProgramError};

use super::{Archive, EvolutionParams};

/// Uniform source among those serving `ty`, then a uniform location in it.
pub fn random_address(ctx: &ProgramContext, ty: &OperandType, rng: &mut Rng) -> Address {
    let layout = ctx.layout();
    let sources: Vec<usize> = (0..layout.source_count())
        .filter(|s| layout.addressable_count(*s, ty) > 0)
        .collect();
    let source = *rng
        .pick(&sources)
        .expect("context only allows instructions whose operands can be served");
    Address::new(source, rng.below(layout.addressable_count(source, ty)))
}

/// Instruction, destination register, then one address per operand.
pub fn random_line(ctx: &ProgramContext, rng: &mut Rng) -> Line {
    let instruction = *rng.pick(ctx.usable_instructions()).expect("non-empty");
    let destination = rng.below(ctx.register_count());
    let operands = ctx
        .instructions()
        .get(instruction)
        .expect("usable index")
        .signature()
        .iter()
        .map(|ty| random_address(ctx, ty, rng))
        .collect();
    Line::new(instruction, destination, operands)
}

/// Program with a length drawn uniformly in `1..=max_size`.
pub fn random_program(ctx: &ProgramContext, max_size: usize, rng: &mut Rng) -> Program {
    let length = rng.range_inclusive(1, max_size.max(1));
    Program::new((0..length).map(|_| random_line(ctx, rng)).collect())
}

/// Re-draws one of: the instruction, the destination, or one operand address.
pub fn mutate_line(line: &mut Line, ctx: &ProgramContext, rng: &mut Rng) {
    match rng.below(3) {
        0 => {
            let instruction = *rng.pick(ctx.usable_instructions()).expect("non-empty");
            if instruction != line.instruction {
                line.instruction = instruction;
                let signature = ctx.instructions().get(instruction).expect("usable").signature();
                line.operands.truncate(signature.len());
                // keep addresses still valid for the new operand types
                for (i, ty) in signature.iter().enumerate() {
                    match line.operands.get(i) {
                        Some(a) if ctx.layout().is_valid(a, ty) => {}
                        Some(_) => line.operands[i] = random_address(ctx, ty, rng),
                        None => line.operands.push(random_address(ctx, ty, rng)),
                    }
                }
            }
        }
        1 => line.destination = rng.below(ctx.register_count()),
        _ => {
            let signature = ctx
                .instructions()
                .get(line.instruction)
                .expect("valid line")
                .signature();
            let operand = rng.below(signature.len());
            line.operands[operand] = random_address(ctx, &signature[operand], rng);
        }
    }
}

/// One round of line-level mutations. Returns true when anything was applied.
fn mutation_round(
    program: &mut Program,
    params: &EvolutionParams,
    ctx: &ProgramContext,
    rng: &mut Rng,
) -> bool {
    let mut applied = false;
    let lines = program.lines_mut();
    if lines.len() > 1 && rng.chance(params.p_line_delete) {
        let index = rng.below(lines.len());
        lines.remove(index);
        applied = true;
    }
    if lines.len() < params.max_program_size && rng.chance(params.p_line_add) {
        let position = rng.below(lines.len() + 1);
        let line = random_line(ctx, rng);
        lines.insert(position, line);
        applied = true;
    }
    if lines.len() >= 2 && rng.chance(params.p_line_swap) {
        let first = rng.below(lines.len());
        let second = (first + 1 + rng.below(lines.len() - 1)) % lines.len();
        lines.swap(first, second);
        applied = true;
    }
    if rng.chance(params.p_line_mutate) {
        let index = rng.below(lines.len());
        mutate_line(&mut lines[index], ctx, rng);
        applied = true;
    }
    applied
}

/// Applies mutation rounds until the program is behaviorally original with
/// respect to `archive`, or the round cap is reached. Returns the round count.
pub fn mutate_program(
    program: &mut Program,
    params: &EvolutionParams,
    ctx: &ProgramContext,
    archive: &Archive,
    rng: &mut Rng,
    executor: &mut Executor,
) -> Result<usize, ProgramError> {
    let mut rounds = 0;
    loop {
        mutation_round(program, params, ctx, rng);
        rounds += 1;
        if rounds >= params.max_mutation_rounds || archive.is_original(program, ctx, executor)? {
            return Ok(rounds);
        }
    }
}

/// Picks a destination for an edge of `team`: an action with probability
/// `pEdgeDestinationIsAction`, otherwise a team from `candidates` other than
/// `team`. Falls back to an action when `allow_team` is false or no team fits.
fn draw_destination(
    graph: &TpgGraph,
    team: TeamId,
    candidates: &[TeamId],
    allow_team: bool,
    params: &EvolutionParams,
    rng: &mut Rng,
) -> Vertex {
    let wants_action = rng.chance(params.p_edge_destination_is_action);
    if !wants_action && allow_team {
        let teams: Vec<TeamId> = candidates
            .iter()
            .copied()
            .filter(|t| *t != team && graph.team(*t).is_some())
            .collect();
        if let Some(t) = rng.pick(&teams) {
            return Vertex::Team(*t);
        }
    }
    Vertex::Action(rng.below(graph.action_count()))
}

/// Topology mutations of a freshly cloned team, in order: edge deletions, edge
/// additions, destination changes, program-mutation marks. Program mutations
/// are not applied here: the returned edges are the ones whose programs must
/// be mutated afterwards. When no change happened at all, one uniformly drawn
/// edge is marked so that the clone always differs from its parent.
pub fn mutate_team(
    graph: &mut TpgGraph,
    team: TeamId,
    candidates: &[TeamId],
    params: &EvolutionParams,
    rng: &mut Rng,
) -> Result<Vec<EdgeId>, GraphError> {
    let mut changed = false;
    let mut marked: Vec<EdgeId> = Vec::new();
    let edges_of = |g: &TpgGraph| g.team(team).map(|t| t.outgoing().to_vec()).unwrap_or_default();

    // (1) deletions
    loop {
        let edges = edges_of(graph);
        if edges.len() <= 2 || !rng.chance(params.p_edge_delete) {
            break;
        }
        let action_edges = graph.action_edge_count(team);
        let removable: Vec<EdgeId> = edges
            .into_iter()
            .filter(|e| action_edges > 1 || !graph.edge(*e).expect("listed").destination().is_action())
            .collect();
        let Some(edge) = rng.pick(&removable).copied() else {
            break;
        };
        graph.remove_edge(edge)?;
        changed = true;
    }

    // (2) additions
    loop {
        if edges_of(graph).len() >= params.max_outgoing_edges || !rng.chance(params.p_edge_add) {
            break;
        }
        let all_edges: Vec<EdgeId> = graph.edges().map(|e| e.id()).collect();
        let source = *rng.pick(&all_edges).expect("graph has edges");
        let program = graph.edge(source).expect("listed").program.clone();
        let destination = draw_destination(graph, team, candidates, true, params, rng);
        let edge = graph.add_edge(team, destination, program)?;
        marked.push(edge);
        changed = true;
    }

    // (3) destination changes
    for edge in edges_of(graph) {
        if !rng.chance(params.p_edge_destination_change) {
            continue;
        }
        let current = graph.edge(edge).expect("listed").destination();
        let last_action_edge = current.is_action() && graph.action_edge_count(team) == 1;
        let destination = draw_destination(graph, team, candidates, !last_action_edge, params, rng);
        if destination != current {
            graph.retarget_edge(edge, destination)?;
            changed = true;
        }
    }

    // (4) program mutations
    for edge in edges_of(graph) {
        if rng.chance(params.p_program_mutate) && !marked.contains(&edge) {
            marked.push(edge);
        }
    }

    if !changed && marked.is_empty() {
        let edges = edges_of(graph);
        marked.push(*rng.pick(&edges).expect("team has edges"));
    }
    marked.sort_unstable();
    Ok(marked)
}
