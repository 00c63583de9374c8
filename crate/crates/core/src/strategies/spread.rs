use std::collections::VecDeque;

use crate::engine::{Arw, Configuration, Instruction, InstructionField, Law, Odometer, SiteState, Status, ToppleMode};
use crate::error::{ArwError, Result};
use crate::lattice::{Neighbor, SiteSet, Topology};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpreadOutcome {
    pub config: Configuration,
    /// The odometer `β` of the spreading phase.
    pub odometer: Odometer,
    pub topplings: u64,
    pub status: Status,
}

/// Topples, FIFO, any active site outside `A` and any site of `A` holding
/// two or more particles, until exactly one active particle sits on each
/// site of `A`.
///
/// Requires `|η| = |A|`, no sleeping particles, and a field that never
/// sleeps outside `A`; under those conditions no particle falls asleep.
pub fn spread_to_singles(
    topo: &Topology,
    field: &InstructionField,
    config: Configuration,
    set: &SiteSet,
    cap: u64,
) -> Result<SpreadOutcome> {
    match field.law() {
        Law::SleepFreeOutside { inside, .. } if inside == set => {}
        Law::SleepFreeOutside { .. } => {
            return Err(ArwError::param("field's sleep-free region is not the complement of A"))
        }
        Law::Scripted(stacks)
            if stacks
                .iter()
                .all(|(&x, s)| set.contains(x) || !s.contains(&Instruction::Sleep)) => {}
        _ => return Err(ArwError::param("spreading needs a field without sleeps outside A")),
    }
    if config.volume() != topo.volume() || set.volume() != topo.volume() {
        return Err(ArwError::param("configuration or set belongs to a different lattice"));
    }
    if config.states().any(|s| s == SiteState::Sleeping) {
        return Err(ArwError::param("spreading starts from active particles only"));
    }
    if config.total_particles() != set.len() as u64 {
        return Err(ArwError::param(format!(
            "{} particles cannot fill {} sites one-to-one",
            config.total_particles(),
            set.len()
        )));
    }

    let needs_toppling =
        |arw: &Arw, x: usize| arw.config().occupation(x) >= if set.contains(x) { 2 } else { 1 };
    let mut arw = Arw::new(topo, field, config)?;
    let mut queued = vec![false; topo.volume()];
    let mut queue = VecDeque::new();
    for x in 0..topo.volume() {
        if needs_toppling(&arw, x) {
            queued[x] = true;
            queue.push_back(x);
        }
    }
    let mut topplings = 0u64;
    let mut status = Status::Stabilized;
    while let Some(x) = queue.pop_front() {
        if topplings >= cap {
            status = Status::CapExceeded;
            break;
        }
        queued[x] = false;
        let done = arw.topple(x, ToppleMode::Legal)?;
        topplings += 1;
        for y in [Some(x), done.target.and_then(site)].into_iter().flatten() {
            if !queued[y] && needs_toppling(&arw, y) {
                queued[y] = true;
                queue.push_back(y);
            }
        }
    }
    let (config, odometer, _) = arw.into_parts();
    Ok(SpreadOutcome {
        config,
        odometer,
        topplings,
        status,
    })
}

fn site(n: Neighbor) -> Option<usize> {
    match n {
        Neighbor::Site(y) => Some(y),
        Neighbor::Exterior => None,
    }
}
