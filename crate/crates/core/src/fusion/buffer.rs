use std::collections::{BTreeMap, VecDeque};

use crate::comm::Pose;
use crate::error::{contract, Result};
use crate::extractor::SemDb;
use crate::AgentId;

/// SemDBs one agent produced at one timestamp, in that agent's own grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SenderFrame {
    pub agent: AgentId,
    pub timestamp_ms: u64,
    /// Sender pose when the data was captured.
    pub pose: Pose,
    pub semdbs: Vec<SemDb>,
}

/// Last `p + 1` frames per agent, newest first.
#[derive(Clone, Debug)]
pub struct TemporalBuffer {
    capacity: usize,
    frames: BTreeMap<AgentId, VecDeque<SenderFrame>>,
}

impl TemporalBuffer {
    pub fn new(history: usize) -> Self {
        Self {
            capacity: history + 1,
            frames: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Adds a frame; it must be strictly newer than the agent's newest.
    pub fn push(&mut self, frame: SenderFrame) -> Result<()> {
        let q = self.frames.entry(frame.agent).or_default();
        if let Some(newest) = q.front() {
            if frame.timestamp_ms <= newest.timestamp_ms {
                return Err(contract(format!(
                    "{} frame at {} ms is not newer than {} ms",
                    frame.agent, frame.timestamp_ms, newest.timestamp_ms
                )));
            }
        }
        q.push_front(frame);
        q.truncate(self.capacity);
        Ok(())
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.frames.keys().copied()
    }

    /// Newest first.
    pub fn history(&self, agent: AgentId) -> impl Iterator<Item = &SenderFrame> + '_ {
        self.frames.get(&agent).into_iter().flatten()
    }

    /// Every buffered frame, agents ascending, newest first within an agent.
    /// With `newest_only` just the head of each agent's history.
    pub fn frames(&self, newest_only: bool) -> Vec<&SenderFrame> {
        let per_agent = if newest_only { 1 } else { self.capacity };
        self.frames.values().flat_map(|q| q.iter().take(per_agent)).collect()
    }
}
