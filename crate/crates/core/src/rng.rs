//! Counter-keyed random streams.
//!
//! Every random quantity of a run is drawn from a stream identified by
//! `(seed, domain, agent, t)`. The key is hashed with SHA-256 and seeds a
//! ChaCha8 generator, so a draw never depends on the order in which other
//! draws were made.

use std::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Demand,
    WeibullScale,
    WeibullShape,
    Attack,
    /// Sampling of agent cost parameters from configured ranges.
    AgentParams,
}

impl Domain {
    pub fn tag(self) -> &'static str {
        match self {
            Domain::Demand => "demand",
            Domain::WeibullScale => "weibull_scale",
            Domain::WeibullShape => "weibull_shape",
            Domain::Attack => "attack",
            Domain::AgentParams => "agent_params",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

pub fn rng_stream(seed: u64, domain: Domain, agent: u64, t: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"byzalloc-stream-v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((domain.tag().len() as u64).to_le_bytes());
    hasher.update(domain.tag().as_bytes());
    hasher.update(agent.to_le_bytes());
    hasher.update(t.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
