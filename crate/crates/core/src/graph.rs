//! Tangled program graph: teams, actions, and program-labeled edges.
//!
//! Teams are internal vertices, actions are leaves. Every edge leaves a team
//! and carries a [`Program`] whose bid decides whether inference follows it.
//! Structural rules kept by every mutating operation of this module and of the
//! evolution engine:
//!
//! * no edge goes from a team to itself;
//! * a team has at least two outgoing edges, one of which reaches an action.
//!
//! With the taken-edge exclusion of [`TpgGraph::infer`] the second rule makes
//! inference terminate: an action edge ends the traversal as soon as it is
//! taken, so every visited team always keeps one admissible edge.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::data::StateSource;
use crate::program::{Executor, Program, ProgramContext, ProgramError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TeamId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u64);

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}", self.0)
    }
}

/// Destination of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Team(TeamId),
    Action(usize),
}

impl Vertex {
    pub fn is_action(&self) -> bool {
        matches!(self, Vertex::Action(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Team {
    id: TeamId,
    outgoing: Vec<EdgeId>,
    incoming: usize,
}

impl Team {
    pub fn id(&self) -> TeamId {
        self.id
    }

    /// Outgoing edges in creation order.
    pub fn outgoing(&self) -> &[EdgeId] {
        &self.outgoing
    }

    pub fn incoming_count(&self) -> usize {
        self.incoming
    }

    pub fn is_root(&self) -> bool {
        self.incoming == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    id: EdgeId,
    source: TeamId,
    destination: Vertex,
    pub program: Program,
}

impl Edge {
    pub fn id(&self) -> EdgeId {
        self.id
    }

    pub fn source(&self) -> TeamId {
        self.source
    }

    pub fn destination(&self) -> Vertex {
        self.destination
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("team {0} does not exist")]
    UnknownTeam(TeamId),
    #[error("edge {0} does not exist")]
    UnknownEdge(EdgeId),
    #[error("action {action} out of range (graph has {count} actions)")]
    UnknownAction { action: usize, count: usize },
    #[error("self-loop forbidden on team {0}")]
    SelfLoop(TeamId),
    #[error("team {0} is not a root")]
    NotRoot(TeamId),
    #[error("team {0} would lose its last action edge")]
    LastActionEdge(TeamId),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Result of one inference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inference {
    pub action: usize,
    /// Edges taken, in order.
    pub trace: Vec<EdgeId>,
}

/// Ranking of bids: finite before non-finite, larger value first, then older
/// edge first. `Ordering::Less` means `a` wins over `b`.
pub fn bid_order(a: (f64, EdgeId), b: (f64, EdgeId)) -> Ordering {
    let (a_bid, a_id) = a;
    let (b_bid, b_id) = b;
    match (a_bid.is_finite(), b_bid.is_finite()) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => b_bid
            .partial_cmp(&a_bid)
            .expect("finite bids are comparable")
            .then(a_id.cmp(&b_id)),
        (false, false) => a_id.cmp(&b_id),
    }
}

#[derive(Clone, Debug)]
pub struct TpgGraph {
    ctx: Arc<ProgramContext>,
    action_count: usize,
    teams: BTreeMap<TeamId, Team>,
    edges: BTreeMap<EdgeId, Edge>,
    next_team: u64,
    next_edge: u64,
}

impl TpgGraph {
    pub fn new(ctx: Arc<ProgramContext>, action_count: usize) -> Self {
        Self {
            ctx,
            action_count,
            teams: BTreeMap::new(),
            edges: BTreeMap::new(),
            next_team: 0,
            next_edge: 0,
        }
    }

    pub fn context(&self) -> &Arc<ProgramContext> {
        &self.ctx
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn team(&self, id: TeamId) -> Option<&Team> {
        self.teams.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn edge_mut(&mut self, id: EdgeId) -> Option<&mut Edge> {
        self.edges.get_mut(&id)
    }

    /// Teams in ascending id order.
    pub fn teams(&self) -> impl Iterator<Item = &Team> {
        self.teams.values()
    }

    /// Edges in creation order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn team_ids(&self) -> Vec<TeamId> {
        self.teams.keys().copied().collect()
    }

    /// Actions referenced by at least one edge, ascending.
    pub fn actions(&self) -> Vec<usize> {
        let mut actions: Vec<usize> = self
            .edges
            .values()
            .filter_map(|e| match e.destination {
                Vertex::Action(a) => Some(a),
                Vertex::Team(_) => None,
            })
            .collect();
        actions.sort_unstable();
        actions.dedup();
        actions
    }

    /// Teams without incoming edges, ascending id order.
    pub fn roots(&self) -> Vec<TeamId> {
        self.teams
            .values()
            .filter(|t| t.is_root())
            .map(|t| t.id)
            .collect()
    }

    pub fn add_team(&mut self) -> TeamId {
        let id = TeamId(self.next_team);
        self.next_team += 1;
        self.insert_team(id);
        id
    }

    /// Inserts a team with a chosen id (import path). Later ids continue after it.
    pub fn insert_team(&mut self, id: TeamId) -> bool {
        self.next_team = self.next_team.max(id.0 + 1);
        if self.teams.contains_key(&id) {
            return false;
        }
        self.teams.insert(
            id,
            Team {
                id,
                outgoing: Vec::new(),
                incoming: 0,
            },
        );
        true
    }

    fn check_destination(&self, source: TeamId, destination: Vertex) -> Result<(), GraphError> {
        match destination {
            Vertex::Team(t) if t == source => Err(GraphError::SelfLoop(source)),
            Vertex::Team(t) if !self.teams.contains_key(&t) => Err(GraphError::UnknownTeam(t)),
            Vertex::Action(a) if a >= self.action_count => Err(GraphError::UnknownAction {
                action: a,
                count: self.action_count,
            }),
            _ => Ok(()),
        }
    }

    pub fn add_edge(
        &mut self,
        source: TeamId,
        destination: Vertex,
        program: Program,
    ) -> Result<EdgeId, GraphError> {
        if !self.teams.contains_key(&source) {
            return Err(GraphError::UnknownTeam(source));
        }
        self.check_destination(source, destination)?;
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        if let Vertex::Team(t) = destination {
            self.teams.get_mut(&t).expect("checked").incoming += 1;
        }
        self.teams.get_mut(&source).expect("checked").outgoing.push(id);
        self.edges.insert(
            id,
            Edge {
                id,
                source,
                destination,
                program,
            },
        );
        Ok(id)
    }

    /// Removes an edge without checking team-level rules.
    pub fn remove_edge(&mut self, id: EdgeId) -> Result<Edge, GraphError> {
        let edge = self.edges.remove(&id).ok_or(GraphError::UnknownEdge(id))?;
        if let Some(team) = self.teams.get_mut(&edge.source) {
            team.outgoing.retain(|e| *e != id);
        }
        if let Vertex::Team(t) = edge.destination {
            if let Some(team) = self.teams.get_mut(&t) {
                team.incoming -= 1;
            }
        }
        Ok(edge)
    }

    /// Points an existing edge somewhere else.
    pub fn retarget_edge(&mut self, id: EdgeId, destination: Vertex) -> Result<(), GraphError> {
        let source = self.edges.get(&id).ok_or(GraphError::UnknownEdge(id))?.source;
        self.check_destination(source, destination)?;
        let edge = self.edges.get_mut(&id).expect("checked");
        let previous = std::mem::replace(&mut edge.destination, destination);
        if let Vertex::Team(t) = previous {
            self.teams.get_mut(&t).expect("edge destination exists").incoming -= 1;
        }
        if let Vertex::Team(t) = destination {
            self.teams.get_mut(&t).expect("checked").incoming += 1;
        }
        Ok(())
    }

    /// Number of outgoing edges of `team` that lead to an action.
    pub fn action_edge_count(&self, team: TeamId) -> usize {
        self.teams.get(&team).map_or(0, |t| {
            t.outgoing
                .iter()
                .filter(|e| self.edges[*e].destination.is_action())
                .count()
        })
    }

    /// Follows the best bid from `root` until an action is reached.
    ///
    /// Edges already taken during this inference are skipped when a team is
    /// visited again.
    pub fn infer(
        &self,
        root: TeamId,
        environment: &[StateSource],
        executor: &mut Executor,
    ) -> Result<Inference, GraphError> {
        let mut trace: Vec<EdgeId> = Vec::new();
        let mut current = root;
        loop {
            let team = self.teams.get(&current).ok_or(GraphError::UnknownTeam(current))?;
            let mut best: Option<(f64, EdgeId)> = None;
            for edge_id in &team.outgoing {
                if trace.contains(edge_id) {
                    continue;
                }
                let edge = &self.edges[edge_id];
                let bid = executor.execute(&self.ctx, &edge.program, environment)?;
                let candidate = (bid, *edge_id);
                if best.is_none_or(|b| bid_order(candidate, b) == Ordering::Less) {
                    best = Some(candidate);
                }
            }
            let Some((_, chosen)) = best else {
                // Unreachable on graphs that keep an action edge per team.
                return Err(GraphError::LastActionEdge(current));
            };
            trace.push(chosen);
            match self.edges[&chosen].destination {
                Vertex::Action(action) => return Ok(Inference { action, trace }),
                Vertex::Team(next) => current = next,
            }
        }
    }

    /// Duplicates `team` with deep copies of its outgoing edges. The copy is a root.
    pub fn clone_team(&mut self, team: TeamId) -> Result<TeamId, GraphError> {
        let outgoing = self
            .teams
            .get(&team)
            .ok_or(GraphError::UnknownTeam(team))?
            .outgoing
            .clone();
        let copy = self.add_team();
        for edge_id in outgoing {
            let edge = &self.edges[&edge_id];
            let (destination, program) = (edge.destination, edge.program.clone());
            self.add_edge(copy, destination, program)?;
        }
        Ok(copy)
    }

    /// Deletes a root team and its outgoing edges. Teams that lose their last
    /// incoming edge become roots; nothing cascades.
    pub fn remove_root(&mut self, team: TeamId) -> Result<(), GraphError> {
        let t = self.teams.get(&team).ok_or(GraphError::UnknownTeam(team))?;
        if !t.is_root() {
            return Err(GraphError::NotRoot(team));
        }
        for edge_id in t.outgoing.clone() {
            self.remove_edge(edge_id)?;
        }
        self.teams.remove(&team);
        Ok(())
    }

    /// Teams reachable from `root`, breadth-first, following edge creation order.
    pub fn reachable_teams(&self, root: TeamId) -> Vec<TeamId> {
        let mut order = Vec::new();
        if !self.teams.contains_key(&root) {
            return order;
        }
        let mut queue = VecDeque::from([root]);
        order.push(root);
        while let Some(current) = queue.pop_front() {
            for edge_id in &self.teams[&current].outgoing {
                if let Vertex::Team(next) = self.edges[edge_id].destination {
                    if !order.contains(&next) {
                        order.push(next);
                        queue.push_back(next);
                    }
                }
            }
        }
        order
    }

    /// The policy rooted at `root` as a standalone graph with canonical ids:
    /// teams numbered in breadth-first order, edges in visiting order.
    pub fn extract_champion(&self, root: TeamId) -> Result<TpgGraph, GraphError> {
        if !self.teams.contains_key(&root) {
            return Err(GraphError::UnknownTeam(root));
        }
        let order = self.reachable_teams(root);
        let renumber: BTreeMap<TeamId, TeamId> = order
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, TeamId(i as u64)))
            .collect();
        let mut out = TpgGraph::new(self.ctx.clone(), self.action_count);
        for _ in &order {
            out.add_team();
        }
        for old in &order {
            for edge_id in &self.teams[old].outgoing {
                let edge = &self.edges[edge_id];
                let destination = match edge.destination {
                    Vertex::Team(t) => Vertex::Team(renumber[&t]),
                    action => action,
                };
                out.add_edge(renumber[old], destination, edge.program.clone())?;
            }
        }
        Ok(out)
    }

    /// Lists every broken structural invariant; empty means the graph is sound.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut incoming: BTreeMap<TeamId, usize> = self.teams.keys().map(|t| (*t, 0)).collect();
        for edge in self.edges.values() {
            match self.teams.get(&edge.source) {
                None => problems.push(format!("{} leaves missing team {}", edge.id, edge.source)),
                Some(t) if !t.outgoing.contains(&edge.id) => {
                    problems.push(format!("{} not listed by its source {}", edge.id, edge.source))
                }
                _ => {}
            }
            match edge.destination {
                Vertex::Team(t) if t == edge.source => {
                    problems.push(format!("self-loop {} on {}", edge.id, t))
                }
                Vertex::Team(t) => match incoming.get_mut(&t) {
                    Some(count) => *count += 1,
                    None => problems.push(format!("{} points at missing team {}", edge.id, t)),
                },
                Vertex::Action(a) if a >= self.action_count => {
                    problems.push(format!("{} points at unknown action {}", edge.id, a))
                }
                Vertex::Action(_) => {}
            }
        }
        for team in self.teams.values() {
            if team.outgoing.len() < 2 {
                problems.push(format!("{} has {} outgoing edges", team.id, team.outgoing.len()));
            }
            if team.outgoing.iter().any(|e| !self.edges.contains_key(e)) {
                problems.push(format!("{} lists a missing edge", team.id));
            } else if self.action_edge_count(team.id) == 0 {
                problems.push(format!("{} has no action edge", team.id));
            }
            if incoming[&team.id] != team.incoming {
                problems.push(format!("{} incoming count is stale", team.id));
            }
        }
        if !self.teams.is_empty() && self.roots().is_empty() {
            problems.push("graph has no root team".to_string());
        }
        problems
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Address, NativeData, NativeShape, SourceLayout};
    use crate::instructions::build_iset_simple;
    use crate::program::Line;

    fn env(values: &[f64]) -> Vec<StateSource> {
        vec![StateSource::new(NativeShape::Flat(values.len()), NativeData::F64(values.to_vec())).unwrap()]
    }

    fn ctx() -> Arc<ProgramContext> {
        let layout = SourceLayout::of(8, &env(&[0.0; 4]));
        Arc::new(ProgramContext::new(Arc::new(build_iset_simple()), layout).unwrap())
    }

    /// Program whose bid is environment value `i`.
    fn reads(i: usize) -> Program {
        Program::new(vec![Line::new(0, 0, vec![Address::new(1, i), Address::new(0, 1)])])
    }

    #[test]
    fn picks_the_largest_bid() {
        let mut g = TpgGraph::new(ctx(), 3);
        let t = g.add_team();
        g.add_edge(t, Vertex::Action(0), reads(0)).unwrap();
        g.add_edge(t, Vertex::Action(1), reads(1)).unwrap();
        let mut exec = Executor::for_context(g.context());
        let out = g.infer(t, &env(&[0.5, 0.7, 0.0, 0.0]), &mut exec).unwrap();
        assert_eq!(out.action, 1);
        assert_eq!(out.trace, vec![EdgeId(1)]);
    }

    #[test]
    fn revisited_team_skips_taken_edges() {
        // A: a0 (bid e0) -> action 0, a1 (bid e1) -> B
        // B: b0 (bid e2) -> A,        b1 (bid e3) -> action 1
        // With e1 > e0 and e2 > e3: A -> B -> A, then A's taken edge is
        // excluded and the action edge a0 is forced.
        let mut g = TpgGraph::new(ctx(), 2);
        let a = g.add_team();
        let b = g.add_team();
        g.add_edge(a, Vertex::Action(0), reads(0)).unwrap();
        g.add_edge(a, Vertex::Team(b), reads(1)).unwrap();
        g.add_edge(b, Vertex::Team(a), reads(2)).unwrap();
        g.add_edge(b, Vertex::Action(1), reads(3)).unwrap();
        let mut exec = Executor::for_context(g.context());
        let out = g.infer(a, &env(&[0.1, 0.9, 0.8, 0.2]), &mut exec).unwrap();
        assert_eq!(out.action, 0);
        assert_eq!(out.trace, vec![EdgeId(1), EdgeId(2), EdgeId(0)]);
        assert!(g.check_invariants().iter().any(|p| p.contains("no root")));
    }

    #[test]
    fn nan_bids_fall_back_to_creation_order() {
        let mut g = TpgGraph::new(ctx(), 2);
        let t = g.add_team();
        // 0/0 = NaN on both edges
        let nan = Program::new(vec![Line::new(3, 0, vec![Address::new(0, 1), Address::new(0, 1)])]);
        g.add_edge(t, Vertex::Action(1), nan.clone()).unwrap();
        g.add_edge(t, Vertex::Action(0), nan).unwrap();
        let mut exec = Executor::for_context(g.context());
        assert_eq!(g.infer(t, &env(&[0.0; 4]), &mut exec).unwrap().action, 1);
    }

    #[test]
    fn bid_order_ranks_finite_first() {
        let e = EdgeId;
        assert_eq!(bid_order((1.0, e(5)), (f64::INFINITY, e(0))), Ordering::Less);
        assert_eq!(bid_order((f64::NAN, e(0)), (-1e300, e(9))), Ordering::Greater);
        assert_eq!(bid_order((2.0, e(1)), (2.0, e(0))), Ordering::Greater);
        assert_eq!(bid_order((f64::NAN, e(1)), (f64::NAN, e(2))), Ordering::Less);
        assert_eq!(bid_order((0.0, e(3)), (-0.0, e(4))), Ordering::Less);
    }

    #[test]
    fn self_loops_are_rejected() {
        let mut g = TpgGraph::new(ctx(), 2);
        let t = g.add_team();
        assert_eq!(
            g.add_edge(t, Vertex::Team(t), reads(0)),
            Err(GraphError::SelfLoop(t))
        );
        let e = g.add_edge(t, Vertex::Action(0), reads(0)).unwrap();
        assert_eq!(g.retarget_edge(e, Vertex::Team(t)), Err(GraphError::SelfLoop(t)));
        assert!(matches!(
            g.add_edge(t, Vertex::Action(2), reads(0)),
            Err(GraphError::UnknownAction { .. })
        ));
    }

    fn two_action_team(g: &mut TpgGraph) -> TeamId {
        let t = g.add_team();
        g.add_edge(t, Vertex::Action(0), reads(0)).unwrap();
        g.add_edge(t, Vertex::Action(1), reads(1)).unwrap();
        t
    }

    #[test]
    fn roots_follow_incoming_edges() {
        let mut g = TpgGraph::new(ctx(), 2);
        let a = two_action_team(&mut g);
        let b = two_action_team(&mut g);
        assert_eq!(g.roots(), vec![a, b]);
        let e = g.add_edge(a, Vertex::Team(b), reads(2)).unwrap();
        assert_eq!(g.roots(), vec![a]);
        g.retarget_edge(e, Vertex::Action(1)).unwrap();
        assert_eq!(g.roots(), vec![a, b]);
    }

    #[test]
    fn clone_is_a_deep_copy() {
        let mut g = TpgGraph::new(ctx(), 2);
        let a = two_action_team(&mut g);
        let b = two_action_team(&mut g);
        g.add_edge(a, Vertex::Team(b), reads(2)).unwrap();
        let c = g.clone_team(a).unwrap();
        assert!(g.team(c).unwrap().is_root());
        let copied: Vec<Vertex> = g.team(c).unwrap().outgoing().iter().map(|e| g.edge(*e).unwrap().destination()).collect();
        assert_eq!(copied, vec![Vertex::Action(0), Vertex::Action(1), Vertex::Team(b)]);
        assert_eq!(g.team(c).unwrap().outgoing(), &[EdgeId(5), EdgeId(6), EdgeId(7)]);
        g.edge_mut(EdgeId(5)).unwrap().program = reads(3);
        assert_eq!(g.edge(EdgeId(0)).unwrap().program, reads(0));
        assert_eq!(g.team(b).unwrap().incoming_count(), 2);
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn removing_a_root_exposes_children() {
        let mut g = TpgGraph::new(ctx(), 2);
        let a = two_action_team(&mut g);
        let b = two_action_team(&mut g);
        g.add_edge(a, Vertex::Team(b), reads(2)).unwrap();
        assert_eq!(g.remove_root(b), Err(GraphError::NotRoot(b)));
        g.remove_root(a).unwrap();
        assert_eq!(g.roots(), vec![b]);
        assert_eq!(g.edge_count(), 2);
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn champion_extraction_is_canonical() {
        let mut g = TpgGraph::new(ctx(), 2);
        let unrelated = two_action_team(&mut g);
        let child = two_action_team(&mut g);
        let root = two_action_team(&mut g);
        g.add_edge(root, Vertex::Team(child), reads(2)).unwrap();
        let champion = g.extract_champion(root).unwrap();
        assert_eq!(champion.team_count(), 2);
        assert_eq!(champion.edge_count(), 5);
        assert_eq!(champion.roots(), vec![TeamId(0)]);
        assert!(champion.check_invariants().is_empty());
        let again = champion.extract_champion(TeamId(0)).unwrap();
        assert_eq!(format!("{:?}", again.edges().collect::<Vec<_>>()), format!("{:?}", champion.edges().collect::<Vec<_>>()));
        let _ = unrelated;
    }
}
