use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use arw::engine::{
    couple_insert_sleeps, stabilize, Arw, Configuration, Instruction, InstructionField, Policy, SiteState, Stacks,
    ToppleMode,
};
use arw::lattice::{SiteSet, Topology};

const CAP: u64 = 10_000_000;

fn scripted(entries: &[(usize, &[Instruction])]) -> InstructionField {
    let stacks: Stacks = entries.iter().map(|(x, s)| (*x, s.to_vec())).collect();
    InstructionField::scripted(2, stacks).unwrap()
}

#[test]
fn sleep_frequency_at_lambda_one() {
    let f = InstructionField::standard(2024, 2, 1.0).unwrap();
    let sleeps = (0..1_000_000u64)
        .filter(|&j| f.instruction((j % 97) as usize, j / 97) == Some(Instruction::Sleep))
        .count();
    let freq = sleeps as f64 / 1e6;
    assert!((freq - 0.5).abs() < 0.002, "{freq}");
}

#[test]
fn jump_only_directions_are_uniform() {
    let degree = 4;
    let f = InstructionField::jump_only(5, degree).unwrap();
    let draws = 200_000u64;
    let mut counts = vec![0u64; degree];
    for j in 0..draws {
        match f.instruction(3, j) {
            Some(Instruction::Jump(d)) => counts[d as usize] += 1,
            other => panic!("{other:?}"),
        }
    }
    let p = 1.0 / degree as f64;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{c}");
    }
}

#[test]
fn inserted_runs_are_geometric() {
    let lambda = 1.5;
    let p = lambda / (1.0 + lambda);
    let base = InstructionField::sleep_free_outside(99, 2, lambda, SiteSet::from_sites(4, [0])).unwrap();
    let coupled = couple_insert_sleeps(&base, lambda).unwrap();
    let runs: Vec<u64> = (0..100_000u64).map(|i| coupled.inserted_run(2, i)).collect();

    // Cells g = 0..9 and a tail g ≥ 10.
    let cells = 11;
    let mut observed = vec![0f64; cells];
    for &g in &runs {
        observed[(g as usize).min(cells - 1)] += 1.0;
    }
    let n = runs.len() as f64;
    let chi2: f64 = (0..cells)
        .map(|g| {
            let prob = if g == cells - 1 {
                p.powi(g as i32)
            } else {
                p.powi(g as i32) * (1.0 - p)
            };
            let e = n * prob;
            (observed[g] - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "χ² = {chi2} ≥ {critical}");

    let mean = runs.iter().sum::<u64>() as f64 / n;
    assert!((mean - lambda).abs() < 0.05, "{mean}");
}

#[test]
fn large_lambda_runs_average_lambda() {
    let lambda = 40.0;
    let base = InstructionField::sleep_free_outside(3, 2, lambda, SiteSet::from_sites(4, [1])).unwrap();
    let coupled = couple_insert_sleeps(&base, lambda).unwrap();
    let mean = (0..50_000u64).map(|i| coupled.inserted_run(0, i)).sum::<u64>() as f64 / 50_000.0;
    assert!((mean / lambda - 1.0).abs() < 0.03, "{mean}");
}

#[test]
fn sleep_on_a_pair_is_consumed_without_effect() {
    let t = Topology::torus(3, 1).unwrap();
    let f = scripted(&[(0, &[Instruction::Sleep])]);
    let eta = Configuration::from_states([SiteState::Active(2), SiteState::Empty, SiteState::Empty]);
    let mut arw = Arw::new(&t, &f, eta.clone()).unwrap();
    arw.topple(0, ToppleMode::Legal).unwrap();
    assert_eq!(arw.config(), &eta);
    assert_eq!(arw.odometer().get(0), 1);
}

#[test]
fn lone_sleep_and_illegal_topple() {
    let t = Topology::torus(3, 1).unwrap();
    let f = scripted(&[(0, &[Instruction::Sleep, Instruction::Jump(0)])]);
    let eta = Configuration::from_states([SiteState::Active(1), SiteState::Empty, SiteState::Empty]);
    let mut arw = Arw::new(&t, &f, eta).unwrap();
    arw.topple(0, ToppleMode::Legal).unwrap();
    assert_eq!(arw.config().get(0), SiteState::Sleeping);
    assert!(arw.topple(0, ToppleMode::Legal).is_err());
    // A sleeping particle may still be toppled acceptably.
    arw.topple(0, ToppleMode::Acceptable).unwrap();
    assert_eq!(arw.config().get(0), SiteState::Empty);
    assert_eq!(arw.config().total_particles(), 1);
}

#[test]
fn hand_traced_scripted_run() {
    let t = Topology::torus(3, 1).unwrap();
    let plus = (0..2)
        .map(|d| Instruction::Jump(d as u8))
        .find(|i| matches!(i, Instruction::Jump(d) if t.step(0, *d as usize) == arw::lattice::Neighbor::Site(1)))
        .unwrap();
    let f = scripted(&[(0, &[plus, Instruction::Sleep]), (1, &[Instruction::Sleep])]);
    let eta = Configuration::from_counts([2, 0, 0]);
    let out = stabilize(&t, &f, eta, &t.all_sites(), Policy::Fifo, CAP).unwrap();
    assert_eq!(out.topplings, 3);
    assert_eq!(
        out.config,
        Configuration::from_states([SiteState::Sleeping, SiteState::Sleeping, SiteState::Empty])
    );
}

#[test]
fn exhausted_stack_is_an_error() {
    let t = Topology::torus(3, 1).unwrap();
    let f = scripted(&[]);
    let eta = Configuration::from_counts([1, 0, 0]);
    assert!(stabilize(&t, &f, eta, &t.all_sites(), Policy::Fifo, CAP).is_err());
}

#[test]
fn stabilizing_outside_the_region_leaves_it_alone() {
    let t = Topology::torus(4, 1).unwrap();
    let f = InstructionField::standard(8, 2, 1.0).unwrap();
    let eta = Configuration::from_counts([0, 3, 0, 0]);
    let region = SiteSet::from_sites(4, [0, 2]);
    let out = stabilize(&t, &f, eta.clone(), &region, Policy::Fifo, CAP).unwrap();
    assert_eq!(out.topplings, 0);
    assert_eq!(out.config, eta);
}

/// `(d, n, particle positions, λ, seed)`: a torus with at most eight
/// particles and at least one empty site.
fn instance() -> impl Strategy<Value = (usize, usize, Vec<usize>, f64, u64)> {
    (1usize..=2, 2usize..=5, prop::sample::select(vec![0.5, 1.0]), any::<u64>()).prop_flat_map(|(d, n, lambda, seed)| {
        let volume = n.pow(d as u32);
        let max = 8.min(volume - 1);
        (
            Just(d),
            Just(n),
            prop::collection::vec(0..volume, 0..=max),
            Just(lambda),
            Just(seed),
        )
    })
}

fn counts(volume: usize, positions: &[usize]) -> Configuration {
    let mut c = vec![0u32; volume];
    for &x in positions {
        c[x] += 1;
    }
    Configuration::from_counts(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policies_agree((d, n, positions, lambda, seed) in instance()) {
        let t = Topology::torus(n, d).unwrap();
        let f = InstructionField::standard(seed, t.degree(), lambda).unwrap();
        let eta = counts(t.volume(), &positions);
        let run = |p| stabilize(&t, &f, eta.clone(), &t.all_sites(), p, CAP).unwrap();
        let a = run(Policy::Fifo);
        prop_assert!(a.stabilized());
        let b = run(Policy::LowestIndex);
        let c = run(Policy::UniformRandom { seed });
        prop_assert_eq!(&a.config, &b.config);
        prop_assert_eq!(&a.odometer, &b.odometer);
        prop_assert_eq!(&a.config, &c.config);
        prop_assert_eq!(&a.odometer, &c.odometer);
        // Conservation on the torus.
        prop_assert_eq!(a.config.total_particles(), eta.total_particles());
        prop_assert!(a.config.is_stable_everywhere());
    }

    #[test]
    fn box_runs_conserve_or_kill(n in 1usize..=6, d in 1usize..=2, seed in any::<u64>(), c in prop::collection::vec(0u32..=3, 36)) {
        let t = Topology::open_box(n, d).unwrap();
        let f = InstructionField::standard(seed, t.degree(), 1.0).unwrap();
        let eta = Configuration::from_counts(c.into_iter().take(t.volume()));
        let out = stabilize(&t, &f, eta.clone(), &t.all_sites(), Policy::Fifo, CAP).unwrap();
        prop_assert!(out.stabilized());
        prop_assert!(out.killed <= eta.total_particles());
        prop_assert_eq!(out.killed + out.config.total_particles(), eta.total_particles());
    }

    #[test]
    fn more_particles_more_topplings((d, n, positions, lambda, seed) in instance(), cut in 0usize..=8) {
        let t = Topology::torus(n, d).unwrap();
        let f = InstructionField::standard(seed, t.degree(), lambda).unwrap();
        let small = counts(t.volume(), &positions[..cut.min(positions.len())]);
        let big = counts(t.volume(), &positions);
        let m = stabilize(&t, &f, small, &t.all_sites(), Policy::Fifo, CAP).unwrap();
        let m_big = stabilize(&t, &f, big, &t.all_sites(), Policy::Fifo, CAP).unwrap();
        prop_assert!(m.stabilized() && m_big.stabilized());
        prop_assert!(m.odometer.is_dominated_by(&m_big.odometer));
    }
}
