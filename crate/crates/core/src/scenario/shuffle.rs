use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentKind, Scenario};
use crate::error::{contract, Result};
use crate::AgentId;

/// Chance that a non-ego agent's data is kept in a training draw.
pub const INCLUSION_PROB: f64 = 0.75;

/// Ego choice and participating agents for one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EgoDraw {
    pub frame: usize,
    pub ego: AgentId,
    /// Ascending; always contains `ego`.
    pub included: Vec<AgentId>,
}

/// Per-frame ego and agent subset.
///
/// In training mode the ego is drawn uniformly from the vehicles and every
/// other agent is kept independently with probability `inclusion`. In
/// evaluation mode every frame uses the scenario's test ego and all agents.
pub fn shuffle_ego_iter(scenario: &Scenario, seed: u64, train_mode: bool, inclusion: f64) -> Result<Vec<EgoDraw>> {
    if !(0.0..=1.0).contains(&inclusion) {
        return Err(contract(format!("inclusion probability {inclusion} outside [0,1]")));
    }
    let mut all: Vec<AgentId> = scenario.agents().iter().map(|a| a.id).collect();
    all.sort();
    let mut vehicles: Vec<AgentId> = scenario
        .agents()
        .iter()
        .filter(|a| a.kind == AgentKind::Vehicle)
        .map(|a| a.id)
        .collect();
    vehicles.sort();
    if vehicles.is_empty() {
        return Err(contract("shuffle-ego needs at least one vehicle"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..scenario.frames.len())
        .map(|frame| {
            if !train_mode {
                return EgoDraw {
                    frame,
                    ego: scenario.test_ego(),
                    included: all.clone(),
                };
            }
            let ego = vehicles[rng.gen_range(0..vehicles.len())];
            let included = all
                .iter()
                .copied()
                .filter(|&a| {
                    let keep = rng.gen_bool(inclusion);
                    a == ego || keep
                })
                .collect();
            EgoDraw { frame, ego, included }
        })
        .collect())
}
