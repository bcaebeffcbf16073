//! Named, seed-derived random substreams.
//!
//! Every stochastic consumer asks for its own stream by label (and an
//! optional index, e.g. a Monte Carlo repeat or a tree number). Streams are
//! ChaCha8 generators keyed by the root seed mixed with the index, with the
//! ChaCha stream id set from the label hash. Adding a new consumer never
//! shifts the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TIME_POINTS: &str = "time-points";
pub const NOISE: &str = "noise";
pub const DEMAND: &str = "demand";
pub const CORRECTOR_INIT: &str = "corrector-init";
pub const FOLD_SPLIT: &str = "fold-split";
pub const BOOTSTRAP: &str = "bootstrap";
pub const REPEAT: &str = "repeat";
pub const SCENARIO: &str = "scenario";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, label: &str) -> ChaCha8Rng {
        self.indexed(label, 0)
    }

    pub fn indexed(&self, label: &str, index: u64) -> ChaCha8Rng {
        let key = splitmix64(self.root ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(fnv1a64(label.as_bytes()));
        rng
    }

    /// Child tree for a labelled sub-experiment; its streams are disjoint
    /// from the parent's.
    pub fn child(&self, label: &str, index: u64) -> SeedTree {
        SeedTree {
            root: splitmix64(self.root ^ fnv1a64(label.as_bytes()) ^ splitmix64(index)),
        }
    }

    /// A plain integer seed for components that take `u64` seeds.
    pub fn derive_seed(&self, label: &str, index: u64) -> u64 {
        splitmix64(self.child(label, index).root ^ 0x2545_F491_4F6C_DD1D)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
