use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::lattice::{Neighbor, SiteSet, Topology};
use crate::rng;

use super::config::{Configuration, Odometer};
use super::field::InstructionField;
use super::state::Arw;
use super::ToppleMode;

pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// Chooses which unstable site to topple next. The driver pushes every site
/// of the region that becomes unstable (once per stretch of instability)
/// and pops until empty.
pub trait Scheduler {
    fn push(&mut self, x: usize);
    fn pop(&mut self) -> Option<usize>;
}

#[derive(Default)]
pub struct Fifo(VecDeque<usize>);

impl Scheduler for Fifo {
    fn push(&mut self, x: usize) {
        self.0.push_back(x);
    }

    fn pop(&mut self) -> Option<usize> {
        self.0.pop_front()
    }
}

#[derive(Default)]
pub struct LowestIndex(BinaryHeap<Reverse<usize>>);

impl Scheduler for LowestIndex {
    fn push(&mut self, x: usize) {
        self.0.push(Reverse(x));
    }

    fn pop(&mut self) -> Option<usize> {
        self.0.pop().map(|Reverse(x)| x)
    }
}

/// Picks uniformly among the pending sites, from its own seeded stream.
pub struct UniformRandom {
    pending: Vec<usize>,
    rng: ChaCha8Rng,
}

impl UniformRandom {
    pub fn new(seed: u64) -> Self {
        UniformRandom {
            pending: Vec::new(),
            rng: rng::stream(seed, 0x5C4E_D01E),
        }
    }
}

impl Scheduler for UniformRandom {
    fn push(&mut self, x: usize) {
        self.pending.push(x);
    }

    fn pop(&mut self) -> Option<usize> {
        if self.pending.is_empty() {
            return None;
        }
        let i = self.rng.random_range(0..self.pending.len());
        Some(self.pending.swap_remove(i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Policy {
    Fifo,
    LowestIndex,
    UniformRandom { seed: u64 },
}

impl Policy {
    pub fn scheduler(self) -> Box<dyn Scheduler> {
        match self {
            Policy::Fifo => Box::new(Fifo::default()),
            Policy::LowestIndex => Box::new(LowestIndex::default()),
            Policy::UniformRandom { seed } => Box::new(UniformRandom::new(seed)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Stabilized,
    CapExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizeOutcome {
    pub config: Configuration,
    pub odometer: Odometer,
    pub topplings: u64,
    pub killed: u64,
    pub status: Status,
}

impl StabilizeOutcome {
    pub fn stabilized(&self) -> bool {
        self.status == Status::Stabilized
    }
}

impl Arw<'_> {
    /// Legal topplings inside `region` until it is stable or `cap`
    /// topplings have been made. Returns the number of topplings made.
    pub fn stabilize_region(
        &mut self,
        region: &SiteSet,
        scheduler: &mut dyn Scheduler,
        cap: u64,
    ) -> Result<(u64, Status)> {
        let topo = self.topology();
        if region.volume() != topo.volume() {
            return Err(ArwError::param("region belongs to a different lattice"));
        }
        let mut queued = vec![false; topo.volume()];
        for x in region.iter() {
            if self.is_active(x) {
                queued[x] = true;
                scheduler.push(x);
            }
        }
        let mut topplings = 0u64;
        while let Some(x) = scheduler.pop() {
            if topplings >= cap {
                return Ok((topplings, Status::CapExceeded));
            }
            queued[x] = false;
            let done = self.topple(x, ToppleMode::Legal)?;
            topplings += 1;
            if self.is_active(x) {
                queued[x] = true;
                scheduler.push(x);
            }
            if let Some(Neighbor::Site(y)) = done.target {
                if !queued[y] && region.contains(y) && self.is_active(y) {
                    queued[y] = true;
                    scheduler.push(y);
                }
            }
        }
        Ok((topplings, Status::Stabilized))
    }
}

/// Stabilizes `config` in `region` with legal topplings chosen by `policy`.
pub fn stabilize(
    topo: &Topology,
    field: &InstructionField,
    config: Configuration,
    region: &SiteSet,
    policy: Policy,
    cap: u64,
) -> Result<StabilizeOutcome> {
    stabilize_with(topo, field, config, region, policy.scheduler().as_mut(), cap)
}

/// [`stabilize`] with a caller-supplied scheduler.
pub fn stabilize_with(
    topo: &Topology,
    field: &InstructionField,
    config: Configuration,
    region: &SiteSet,
    scheduler: &mut dyn Scheduler,
    cap: u64,
) -> Result<StabilizeOutcome> {
    let mut arw = Arw::new(topo, field, config)?;
    let (topplings, status) = arw.stabilize_region(region, scheduler, cap)?;
    let (config, odometer, killed) = arw.into_parts();
    Ok(StabilizeOutcome {
        config,
        odometer,
        topplings,
        killed,
        status,
    })
}
