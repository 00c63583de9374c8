use crate::error::{ArwError, Result};
use crate::lattice::{Neighbor, SiteSet, Topology};

use super::config::{Configuration, Odometer};
use super::field::{Instruction, InstructionField};
use super::ToppleMode;

/// What a single toppling did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Toppled {
    pub instruction: Instruction,
    /// Where the moved particle landed; `None` for a sleep instruction.
    pub target: Option<Neighbor>,
}

/// The mutable state `(η, h)` of one ARW run over a fixed field.
///
/// Ranks (see [`SiteState::rank`](super::SiteState::rank)) are manipulated
/// directly: `0` empty, `1` sleeping, `k + 1` for `k` active particles.
/// With that encoding `s + 1 = 2` is rank `1 → 3` and `s - 1 = 0` is rank
/// `1 → 0`.
#[derive(Clone, Debug)]
pub struct Arw<'a> {
    topo: &'a Topology,
    field: &'a InstructionField,
    config: Configuration,
    odometer: Odometer,
    killed: u64,
    instant_sleep: bool,
}

impl<'a> Arw<'a> {
    /// Starts from `config` with a zero odometer. Under the jump-only law
    /// lone active particles fall asleep immediately.
    pub fn new(topo: &'a Topology, field: &'a InstructionField, config: Configuration) -> Result<Self> {
        Self::with_odometer(topo, field, config, Odometer::zeros(topo.volume()))
    }

    pub fn with_odometer(
        topo: &'a Topology,
        field: &'a InstructionField,
        config: Configuration,
        odometer: Odometer,
    ) -> Result<Self> {
        if config.volume() != topo.volume() || odometer.as_slice().len() != topo.volume() {
            return Err(ArwError::param(format!(
                "configuration has {} sites, odometer {}, lattice {}",
                config.volume(),
                odometer.as_slice().len(),
                topo.volume()
            )));
        }
        if field.degree() != topo.degree() {
            return Err(ArwError::param(format!(
                "field degree {} does not match lattice degree {}",
                field.degree(),
                topo.degree()
            )));
        }
        let mut arw = Arw {
            topo,
            field,
            config,
            odometer,
            killed: 0,
            instant_sleep: field.is_jump_only(),
        };
        if arw.instant_sleep {
            for x in 0..topo.volume() {
                arw.settle(x);
            }
        }
        Ok(arw)
    }

    /// Turns the lone-particle instant-sleep rule on or off (it defaults to
    /// on exactly for the jump-only law).
    pub fn set_instant_sleep(&mut self, on: bool) {
        self.instant_sleep = on;
        if on {
            for x in 0..self.topo.volume() {
                self.settle(x);
            }
        }
    }

    pub fn instant_sleep(&self) -> bool {
        self.instant_sleep
    }

    #[inline]
    fn settle(&mut self, x: usize) {
        let r = self.config.rank_mut(x);
        if *r == 2 {
            *r = 1;
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.topo
    }

    pub fn field(&self) -> &'a InstructionField {
        self.field
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn odometer(&self) -> &Odometer {
        &self.odometer
    }

    /// Particles absorbed by the exterior of a box.
    pub fn killed(&self) -> u64 {
        self.killed
    }

    pub fn into_parts(self) -> (Configuration, Odometer, u64) {
        (self.config, self.odometer, self.killed)
    }

    #[inline]
    pub fn is_active(&self, x: usize) -> bool {
        self.config.is_active(x)
    }

    /// Applies the next instruction `τ^{x, h(x)}` at `x`.
    ///
    /// Legal topplings need an active particle at `x`; acceptable ones also
    /// allow a sleeping particle. A sleep instruction turns a lone active
    /// particle into a sleeping one and does nothing otherwise, but is
    /// still counted by the odometer.
    pub fn topple(&mut self, x: usize, mode: ToppleMode) -> Result<Toppled> {
        self.topo.check(x)?;
        let rank = self.config.rank(x);
        let allowed = match mode {
            ToppleMode::Legal => rank >= 2,
            ToppleMode::Acceptable => rank >= 1,
        };
        if !allowed {
            return Err(ArwError::IllegalToppling {
                site: x,
                mode,
                state: self.config.get(x).to_string(),
            });
        }
        let j = self.odometer.get(x);
        let instruction = self.field.sample_instruction(x, j)?;
        self.odometer.bump(x);
        Ok(self.apply(x, rank, instruction))
    }

    #[inline]
    fn apply(&mut self, x: usize, rank: u32, instruction: Instruction) -> Toppled {
        match instruction {
            Instruction::Sleep => {
                if rank == 2 {
                    *self.config.rank_mut(x) = 1;
                }
                Toppled {
                    instruction,
                    target: None,
                }
            }
            Instruction::Jump(dir) => {
                // Ranks 1 (s) and 2 (one active) both leave an empty site.
                *self.config.rank_mut(x) = if rank <= 2 { 0 } else { rank - 1 };
                let target = self.topo.step(x, dir as usize);
                match target {
                    Neighbor::Site(y) => {
                        // s + 1 = 2: the sleeper wakes.
                        let r = self.config.rank_mut(y);
                        *r = match *r {
                            0 => 2,
                            1 => 3,
                            r => r + 1,
                        };
                        if self.instant_sleep {
                            self.settle(y);
                        }
                    }
                    Neighbor::Exterior => self.killed += 1,
                }
                if self.instant_sleep {
                    self.settle(x);
                }
                Toppled {
                    instruction,
                    target: Some(target),
                }
            }
        }
    }

    pub fn is_stable(&self, region: &SiteSet) -> bool {
        self.config.is_stable(region)
    }
}
