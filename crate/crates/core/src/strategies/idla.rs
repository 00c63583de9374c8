use crate::engine::{Arw, Configuration, Fifo, InstructionField, StabilizeOutcome};
use crate::error::{ArwError, Result};
use crate::lattice::Topology;

/// Stabilizes the `λ = ∞` model: particles jump until alone, then fall
/// asleep at once.
pub fn idla_stabilize(config: Configuration, topo: &Topology, seed: u64, cap: u64) -> Result<StabilizeOutcome> {
    let field = InstructionField::jump_only(seed, topo.degree())?;
    idla_stabilize_with(config, topo, &field, cap)
}

/// [`idla_stabilize`] over an explicit field (jump-only or scripted).
pub fn idla_stabilize_with(
    config: Configuration,
    topo: &Topology,
    field: &InstructionField,
    cap: u64,
) -> Result<StabilizeOutcome> {
    if field.lambda().is_some_and(|l| l.is_finite()) {
        return Err(ArwError::param("IDLA needs a jump-only or scripted field"));
    }
    let mut arw = Arw::new(topo, field, config)?;
    arw.set_instant_sleep(true);
    let (topplings, status) = arw.stabilize_region(&topo.all_sites(), &mut Fifo::default(), cap)?;
    let (config, odometer, killed) = arw.into_parts();
    Ok(StabilizeOutcome {
        config,
        odometer,
        topplings,
        killed,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Instruction, SiteState, Stacks};

    #[test]
    fn lone_particle_sleeps_in_place() {
        let t = Topology::torus(5, 1).unwrap();
        let out = idla_stabilize(Configuration::from_counts([0, 0, 1, 0, 0]), &t, 3, 100).unwrap();
        assert_eq!(out.topplings, 0);
        assert_eq!(out.config.get(2), SiteState::Sleeping);
    }

    #[test]
    fn pair_needs_one_jump() {
        let t = Topology::torus(3, 1).unwrap();
        let f = InstructionField::scripted(2, Stacks::from([(0, vec![Instruction::Jump(1)])])).unwrap();
        let out = idla_stabilize_with(Configuration::from_counts([2, 0, 0]), &t, &f, 100).unwrap();
        assert_eq!(out.topplings, 1);
        assert_eq!(
            out.config,
            Configuration::from_states([SiteState::Sleeping, SiteState::Empty, SiteState::Sleeping])
        );
    }
}
