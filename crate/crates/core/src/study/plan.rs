use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which visual channels a participant sees. Never affects what is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub xai_visible: bool,
    pub lidar_visible: bool,
}

impl Condition {
    pub const NONE: Condition = Condition { xai_visible: false, lidar_visible: false };
    pub const LIDAR: Condition = Condition { xai_visible: false, lidar_visible: true };
    pub const XAI: Condition = Condition { xai_visible: true, lidar_visible: false };
    pub const XAI_LIDAR: Condition = Condition { xai_visible: true, lidar_visible: true };

    pub const ALL: [Condition; 4] = [Self::NONE, Self::LIDAR, Self::XAI, Self::XAI_LIDAR];

    pub fn label(&self) -> &'static str {
        match (self.xai_visible, self.lidar_visible) {
            (false, false) => "none",
            (false, true) => "lidar",
            (true, false) => "xai",
            (true, true) => "xai+lidar",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// All 24 orders of the four conditions, lexicographic in [`Condition::ALL`] order.
pub fn block_orders() -> Vec<[Condition; 4]> {
    let mut out = Vec::with_capacity(24);
    let mut idx = [0usize, 1, 2, 3];
    loop {
        out.push(idx.map(|i| Condition::ALL[i]));
        // next lexicographic permutation
        let Some(i) = (0..3).rev().find(|&i| idx[i] < idx[i + 1]) else {
            break;
        };
        let j = (i + 1..4).rev().find(|&j| idx[j] > idx[i]).expect("exists");
        idx.swap(i, j);
        idx[i + 1..].reverse();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub condition: Condition,
    /// Scenario ids in presentation order.
    pub scenarios: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub participant: u32,
    pub blocks: Vec<Block>,
}

impl StudyPlan {
    /// Participant `p` gets block order `p mod 24`; scenarios are shuffled per
    /// participant and dealt `trials_per_block` at a time.
    pub fn for_participant(participant: u32, scenario_ids: &[u32], trials_per_block: usize, seed: u64) -> Self {
        let orders = block_orders();
        let order = orders[participant as usize % orders.len()];
        let mut ids = scenario_ids.to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(participant) << 32));
        ids.shuffle(&mut rng);
        let blocks = order
            .iter()
            .enumerate()
            .map(|(b, &condition)| Block {
                condition,
                scenarios: ids
                    .iter()
                    .cycle()
                    .skip(b * trials_per_block)
                    .take(trials_per_block)
                    .copied()
                    .collect(),
            })
            .collect();
        Self { participant, blocks }
    }

    pub fn trial_count(&self) -> usize {
        self.blocks.iter().map(|b| b.scenarios.len()).sum()
    }

    /// `(block index, trial index within block)` of the flat trial `k`.
    pub fn locate(&self, k: usize) -> Option<(usize, usize)> {
        let mut rest = k;
        for (b, block) in self.blocks.iter().enumerate() {
            if rest < block.scenarios.len() {
                return Some((b, rest));
            }
            rest -= block.scenarios.len();
        }
        None
    }
}
