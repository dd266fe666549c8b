//! Seeded on/off detection records.
//!
//! Every channel of an experiment gets its own ChaCha20 stream: the key is
//! expanded from the design seed and the stream id is the channel index, so
//! channels can be generated in any order (or in parallel) with identical
//! results.

use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::states::{Efficiency, PhotonDistribution};

/// Name of the generator and sampling scheme, recorded in reports.
pub const RNG_ALGORITHM: &str =
    "ChaCha20Rng (rand_chacha 0.9, seed_from_u64, stream = channel index); Binomial (rand_distr 0.5)";

/// Outcome of repeated on/off detection at one efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OnOffRecord {
    eta: EfficiencyBits,
    shots: u64,
    off_count: u64,
}

// `Efficiency` is a float; records compare bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EfficiencyBits(u64);

impl OnOffRecord {
    pub fn new(eta: Efficiency, shots: u64, off_count: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidDesign("shots must be at least 1"));
        }
        if off_count > shots {
            return Err(Error::InvalidDesign("off count exceeds shots"));
        }
        Ok(Self {
            eta: EfficiencyBits(eta.value().to_bits()),
            shots,
            off_count,
        })
    }

    pub fn efficiency(&self) -> Efficiency {
        Efficiency::new(f64::from_bits(self.eta.0)).expect("validated at construction")
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn off_count(&self) -> u64 {
        self.off_count
    }

    /// Off-event frequency `off_count / shots`.
    pub fn frequency(&self) -> f64 {
        self.off_count as f64 / self.shots as f64
    }
}

/// Efficiencies, shots per channel and the master seed of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDesign {
    efficiencies: Vec<Efficiency>,
    shots_per_channel: u64,
    seed: u64,
}

impl ExperimentDesign {
    pub fn new(efficiencies: Vec<Efficiency>, shots_per_channel: u64, seed: u64) -> Result<Self> {
        if efficiencies.is_empty() {
            return Err(Error::InvalidDesign("no efficiencies"));
        }
        if efficiencies.windows(2).any(|w| w[0].value() >= w[1].value()) {
            return Err(Error::InvalidDesign(
                "efficiencies must be strictly increasing",
            ));
        }
        if shots_per_channel == 0 {
            return Err(Error::InvalidDesign("shots per channel must be at least 1"));
        }
        Ok(Self {
            efficiencies,
            shots_per_channel,
            seed,
        })
    }

    /// `count` efficiencies evenly spaced over `[lo, hi]`.
    pub fn evenly_spaced(lo: f64, hi: f64, count: usize, shots: u64, seed: u64) -> Result<Self> {
        let effs = match count {
            0 => Vec::new(),
            1 => alloc::vec![Efficiency::new(lo)?],
            _ => (0..count)
                .map(|i| Efficiency::new(lo + (hi - lo) * i as f64 / (count - 1) as f64))
                .collect::<Result<Vec<_>>>()?,
        };
        Self::new(effs, shots, seed)
    }

    pub fn efficiencies(&self) -> &[Efficiency] {
        &self.efficiencies
    }

    pub fn shots_per_channel(&self) -> u64 {
        self.shots_per_channel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Random stream for channel `index` of an experiment seeded with `seed`.
pub fn channel_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draw the off count of `shots` detections as a single binomial variate.
pub fn simulate_channel<R: RngCore + ?Sized>(
    dist: &PhotonDistribution,
    eff: Efficiency,
    shots: u64,
    rng: &mut R,
) -> Result<OnOffRecord> {
    let p = dist.off_probability(eff).clamp(0.0, 1.0);
    let binomial = Binomial::new(shots, p).map_err(|_| Error::Domain {
        what: "off probability",
        value: p,
    })?;
    let off_count = binomial.sample(rng);
    OnOffRecord::new(eff, shots, off_count)
}

/// One record per design efficiency, in design order.
pub fn simulate_experiment(
    dist: &PhotonDistribution,
    design: &ExperimentDesign,
) -> Result<Vec<OnOffRecord>> {
    design
        .efficiencies
        .iter()
        .enumerate()
        .map(|(i, &eff)| {
            let mut rng = channel_rng(design.seed, i);
            simulate_channel(dist, eff, design.shots_per_channel, &mut rng)
        })
        .collect()
}
