use std::collections::{HashSet, VecDeque};

use crate::data::Snapshot;
use crate::graph::TpgGraph;
use crate::parallel::Rng;
use crate::program::{Executor, Program, ProgramContext, ProgramError};

/// Bit pattern of a bid for behavioral comparison; every NaN maps to one value.
fn bid_bits(bid: f64) -> u64 {
    if bid.is_nan() {
        f64::NAN.to_bits()
    } else {
        bid.to_bits()
    }
}

/// Bounded store of recorded environment states plus the behavioral
/// signatures (bid vectors over those states) of the graph's programs.
#[derive(Clone, Debug)]
pub struct Archive {
    capacity: usize,
    snapshots: VecDeque<Snapshot>,
    signatures: HashSet<Vec<u64>>,
    stale: bool,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            snapshots: VecDeque::with_capacity(capacity),
            signatures: HashSet::new(),
            stale: false,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Recorded states, oldest first.
    pub fn snapshots(&self) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter()
    }

    /// Stores `snapshot`, evicting the oldest entry when full.
    pub fn record(&mut self, snapshot: Snapshot) {
        if self.capacity == 0 {
            return;
        }
        if self.snapshots.len() == self.capacity {
            self.snapshots.pop_front();
        }
        self.snapshots.push_back(snapshot);
        self.stale = true;
    }

    /// Stores `snapshot` with probability `probability`, using exactly one draw.
    pub fn maybe_record(&mut self, snapshot: Snapshot, probability: f64, rng: &mut Rng) -> bool {
        let keep = rng.chance(probability);
        if keep {
            self.record(snapshot);
        }
        keep
    }

    /// True when snapshots changed since the last [`refresh_signatures`](Self::refresh_signatures).
    pub fn signatures_stale(&self) -> bool {
        self.stale
    }

    pub fn signature_count(&self) -> usize {
        self.signatures.len()
    }

    /// Bid vector of `program` over the recorded states.
    pub fn signature(
        &self,
        program: &Program,
        ctx: &ProgramContext,
        executor: &mut Executor,
    ) -> Result<Vec<u64>, ProgramError> {
        self.snapshots
            .iter()
            .map(|s| executor.execute(ctx, program, s).map(bid_bits))
            .collect()
    }

    /// Recomputes the signatures of every program currently in `graph`.
    pub fn refresh_signatures(&mut self, graph: &TpgGraph) -> Result<(), ProgramError> {
        let ctx = graph.context();
        let mut executor = Executor::for_context(ctx);
        let mut signatures = HashSet::new();
        if !self.snapshots.is_empty() {
            for edge in graph.edges() {
                signatures.insert(self.signature(&edge.program, ctx, &mut executor)?);
            }
        }
        self.signatures = signatures;
        self.stale = false;
        Ok(())
    }

    /// Adds one program's signature to the cache.
    pub fn insert_signature(
        &mut self,
        program: &Program,
        ctx: &ProgramContext,
        executor: &mut Executor,
    ) -> Result<(), ProgramError> {
        let signature = self.signature(program, ctx, executor)?;
        self.signatures.insert(signature);
        Ok(())
    }

    /// True when the archive is empty or `program` bids differently from every
    /// cached signature on at least one recorded state.
    pub fn is_original(
        &self,
        program: &Program,
        ctx: &ProgramContext,
        executor: &mut Executor,
    ) -> Result<bool, ProgramError> {
        if self.snapshots.is_empty() {
            return Ok(true);
        }
        debug_assert!(!self.stale, "archive signatures are out of date");
        Ok(!self.signatures.contains(&self.signature(program, ctx, executor)?))
    }
}
