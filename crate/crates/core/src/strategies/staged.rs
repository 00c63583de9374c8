use serde::{Deserialize, Serialize};

use crate::engine::{Arw, Configuration, Fifo, Instruction, InstructionField, Odometer, Status, ToppleMode};
use crate::error::{ArwError, Result};
use crate::lattice::{BoxFamily, Neighbor, SiteSet, Topology};

/// Outcome of one step of the staged procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u8,
    pub success: bool,
    pub topplings: u64,
}

/// Per-step results; a failed step is the last one recorded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub steps: Vec<StepRecord>,
    /// Particles standing outside the small box after step 1.
    pub escaped: u64,
    /// Largest number of escapees tolerated, `⌊εn^d⌋`.
    pub escape_limit: u64,
    /// Whether the odometer vanished on `∂^i B_0` when the procedure
    /// stopped.
    pub boundary_untouched: bool,
    /// The failure came from the toppling cap rather than the step's own
    /// criterion.
    pub cap_exceeded: bool,
    pub success: bool,
}

impl StageReport {
    pub fn total_topplings(&self) -> u64 {
        self.steps.iter().map(|s| s.topplings).sum()
    }
}

#[derive(Clone, Debug)]
pub struct StagedRun {
    pub report: StageReport,
    pub config: Configuration,
    /// Odometer of the (acceptable) toppling sequence performed.
    pub odometer: Odometer,
}

struct Driver<'a, 'b> {
    arw: Arw<'a>,
    boxes: &'b BoxFamily,
    steps: Vec<StepRecord>,
    used: u64,
    cap: u64,
}

enum Halt {
    Failed,
    Cap,
}

impl Driver<'_, '_> {
    fn topple(&mut self, x: usize, mode: ToppleMode) -> Result<std::result::Result<(Instruction, usize), Halt>> {
        if self.used >= self.cap {
            return Ok(Err(Halt::Cap));
        }
        self.used += 1;
        let done = self.arw.topple(x, mode)?;
        let landed = match done.target {
            Some(Neighbor::Site(y)) => y,
            Some(Neighbor::Exterior) => unreachable!("staged procedure runs on a torus"),
            None => x,
        };
        Ok(Ok((done.instruction, landed)))
    }

    fn record(&mut self, step: u8, success: bool, before: u64) {
        self.steps.push(StepRecord {
            step,
            success,
            topplings: self.used - before,
        });
    }

    /// Step 2: walk the particles standing outside the small box out of the
    /// medium box, lowest site first.
    fn walk_out(&mut self) -> Result<std::result::Result<(), Halt>> {
        let boxes = self.boxes;
        let (start_sites, target, tiny) = (&boxes.outer[2], &boxes.outer[1], &boxes.boxes[3]);
        loop {
            let Some(mut at) = start_sites
                .iter()
                .find(|&x| self.arw.config().occupation(x) > 0 && !target.contains(x))
            else {
                return Ok(Ok(()));
            };
            loop {
                let landed = loop {
                    match self.topple(at, ToppleMode::Acceptable)? {
                        Err(h) => return Ok(Err(h)),
                        Ok((Instruction::Sleep, _)) => continue,
                        Ok((Instruction::Jump(_), y)) => break y,
                    }
                };
                at = landed;
                if tiny.contains(at) {
                    return Ok(Err(Halt::Failed));
                }
                if target.contains(at) {
                    break;
                }
            }
        }
    }

    /// Step 3: topple multiply occupied sites until none is left; a
    /// particle on `∂^i B_0 ∪ ∂^e B_2` fails the step.
    fn spread(&mut self) -> Result<std::result::Result<(), Halt>> {
        let boxes = self.boxes;
        let forbidden = boxes.inner[0].union(&boxes.outer[2]);
        let volume = self.arw.config().volume();
        let small = &boxes.boxes[2];
        if (0..volume).any(|x| !small.contains(x) && forbidden.contains(x) && self.arw.config().occupation(x) > 0) {
            return Ok(Err(Halt::Failed));
        }
        let mut queue: std::collections::VecDeque<usize> =
            (0..volume).filter(|&x| self.arw.config().occupation(x) >= 2).collect();
        while let Some(x) = queue.pop_front() {
            if self.arw.config().occupation(x) < 2 {
                continue;
            }
            let (_, y) = match self.topple(x, ToppleMode::Legal)? {
                Err(h) => return Ok(Err(h)),
                Ok(r) => r,
            };
            if forbidden.contains(y) {
                return Ok(Err(Halt::Failed));
            }
            for z in [x, y] {
                if self.arw.config().occupation(z) >= 2 {
                    queue.push_back(z);
                }
            }
        }
        Ok(Ok(()))
    }

    /// Step 4: topple each unstable site once; every instruction must be a
    /// sleep.
    fn settle(&mut self) -> Result<std::result::Result<(), Halt>> {
        let unstable: Vec<usize> = self.arw.config().active_sites().collect();
        for x in unstable {
            match self.topple(x, ToppleMode::Legal)? {
                Err(h) => return Ok(Err(h)),
                Ok((Instruction::Sleep, _)) => {}
                Ok((Instruction::Jump(_), _)) => return Ok(Err(Halt::Failed)),
            }
        }
        Ok(Ok(()))
    }
}

/// Runs steps 0–4 of the staged stabilization of the torus `B_0`.
///
/// 0. succeeds iff `η_0` vanishes outside the small box `B_2`;
/// 1. stabilizes `B_2` (FIFO, legal), particles stopping where they leave
///    it; succeeds iff at most `εn^d` of them did;
/// 2. picks the lowest non-empty site of `∂^e B_2` and topples it, through
///    sleep instructions (acceptable topplings), until a jump; then the
///    site it jumped to, and so on until the particle stands on `∂^e B_1`;
///    repeats until `∂^e B_2` is empty. Fails if a walker enters the tiny
///    box `B_3`;
/// 3. topples multiply occupied sites; fails if a particle stands on
///    `∂^i B_0 ∪ ∂^e B_2`;
/// 4. topples each unstable site once; succeeds iff all are sleeps.
///
/// `cap` bounds the total number of topplings; hitting it fails the
/// current step.
pub fn staged_torus_procedure(
    topo: &Topology,
    eta0: Configuration,
    field: &InstructionField,
    boxes: &BoxFamily,
    epsilon: f64,
    cap: u64,
) -> Result<StagedRun> {
    if !topo.is_torus() || topo.n() != boxes.n || topo.d() != boxes.d {
        return Err(ArwError::param("box family does not belong to this torus"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ArwError::param(format!("ε={epsilon} must be finite and > 0")));
    }
    let escape_limit = (epsilon * topo.volume() as f64).floor() as u64;
    let small = boxes.small().clone();
    let outside_small = topo.all_sites().difference(&small);

    let mut driver = Driver {
        arw: Arw::new(topo, field, eta0)?,
        boxes,
        steps: Vec::new(),
        used: 0,
        cap,
    };
    let mut escaped = 0;
    let mut cap_exceeded = false;

    let ok0 = driver.arw.config().particle_count(&outside_small) == 0;
    driver.record(0, ok0, 0);

    let mut success = false;
    if ok0 {
        let before = driver.used;
        let room = cap.saturating_sub(driver.used);
        let (n, status) = driver.arw.stabilize_region(&small, &mut Fifo::default(), room)?;
        driver.used += n;
        escaped = driver.arw.config().particle_count(&outside_small);
        let ok1 = status == Status::Stabilized && escaped <= escape_limit;
        driver.record(1, ok1, before);

        cap_exceeded = status == Status::CapExceeded;
        if ok1 {
            success = true;
            for step in 2..=4u8 {
                let before = driver.used;
                let outcome = match step {
                    2 => driver.walk_out()?,
                    3 => driver.spread()?,
                    _ => driver.settle()?,
                };
                driver.record(step, outcome.is_ok(), before);
                if let Err(halt) = outcome {
                    cap_exceeded = matches!(halt, Halt::Cap);
                    success = false;
                    break;
                }
            }
        }
    }

    let boundary_untouched = driver.arw.odometer().vanishes_on(&boxes.inner[0]);
    let (config, odometer, _) = driver.arw.into_parts();
    Ok(StagedRun {
        report: StageReport {
            steps: driver.steps,
            escaped,
            escape_limit,
            boundary_untouched,
            cap_exceeded,
            success,
        },
        config,
        odometer,
    })
}

/// `B_0 \ ∂^i B_0`, the region whose stabilization a successful staged run
/// reproduces.
pub fn interior_region(boxes: &BoxFamily) -> SiteSet {
    boxes.whole().difference(&boxes.inner[0])
}
