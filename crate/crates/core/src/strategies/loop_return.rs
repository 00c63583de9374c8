use serde::{Deserialize, Serialize};

use crate::engine::{Arw, Configuration, Instruction, InstructionField, Law, Status, ToppleMode};
use crate::error::{ArwError, Result};
use crate::lattice::{Neighbor, SiteSet, Topology};

use super::OrderedSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRun {
    /// Number of steps `T` until `J` reached `k + 1`.
    pub steps: u64,
    /// `‖m‖_A`.
    pub topplings_on_a: u64,
    pub topplings: u64,
    /// `J(0), J(1), ..., J(T)`, with `J(0) = 1`.
    pub trajectory: Vec<u32>,
    pub status: Status,
}

/// Starting from one active particle on each `x_j`, topples `x_{J}` each
/// step: a sleep instruction puts the particle to sleep and advances `J`;
/// a jump sends the particle on a loop, toppled site after site, until it
/// returns to `x_J`. If the loop visited `x_{J-1}` the counter goes back
/// to `J - 1`, otherwise it stays. Ends when `J = k + 1`.
///
/// Every site the walker passes through is toppled until it yields a jump;
/// inside `A` that may consume sleep instructions, which leave the doubly
/// occupied site unchanged.
pub fn loop_return_procedure(
    topo: &Topology,
    ordered: &OrderedSet,
    field: &InstructionField,
    cap: u64,
) -> Result<LoopRun> {
    if ordered.is_empty() {
        return Err(ArwError::param("ordered set is empty"));
    }
    let set = SiteSet::from_sites(topo.volume(), ordered.sites.iter().copied());
    if set.len() != ordered.len() {
        return Err(ArwError::param("ordered set has repeated sites"));
    }
    match field.law() {
        Law::SleepFreeOutside { inside, .. } if *inside == set => {}
        _ => return Err(ArwError::param("loop procedure needs a sleep-free-outside field on A")),
    }
    let mut arw = Arw::new(topo, field, Configuration::ones_on(&set))?;
    let k = ordered.len() as u32;
    let mut j = 1u32;
    let mut trajectory = vec![j];
    let mut topplings = 0u64;
    let mut on_a = 0u64;
    let mut status = Status::Stabilized;

    let mut topple = |arw: &mut Arw, x: usize| -> Result<Option<Instruction>> {
        if topplings >= cap {
            return Ok(None);
        }
        topplings += 1;
        if set.contains(x) {
            on_a += 1;
        }
        Ok(Some(arw.topple(x, ToppleMode::Legal)?.instruction))
    };

    'steps: while j <= k {
        let start = ordered.sites[j as usize - 1];
        let previous = (j >= 2).then(|| ordered.sites[j as usize - 2]);
        let Some(first) = topple(&mut arw, start)? else {
            status = Status::CapExceeded;
            break;
        };
        let Instruction::Jump(dir) = first else {
            j += 1;
            trajectory.push(j);
            continue;
        };
        let mut visited_previous = false;
        let mut at = match topo.step(start, dir as usize) {
            Neighbor::Site(y) => y,
            Neighbor::Exterior => return Err(ArwError::param("loop procedure runs on a torus")),
        };
        while at != start {
            visited_previous |= Some(at) == previous;
            let dir = loop {
                match topple(&mut arw, at)? {
                    None => {
                        status = Status::CapExceeded;
                        break 'steps;
                    }
                    Some(Instruction::Jump(dir)) => break dir,
                    Some(Instruction::Sleep) => {}
                }
            };
            at = match topo.step(at, dir as usize) {
                Neighbor::Site(y) => y,
                Neighbor::Exterior => return Err(ArwError::param("loop procedure runs on a torus")),
            };
        }
        if visited_previous {
            j -= 1;
        }
        trajectory.push(j);
    }

    Ok(LoopRun {
        steps: trajectory.len() as u64 - 1,
        topplings_on_a: on_a,
        topplings,
        trajectory,
        status,
    })
}
