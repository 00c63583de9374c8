//! Instruction fields `τ = (τ^{x,j})`.
//!
//! A field is never stored: the instruction at `(x, j)` is recomputed from
//! `(seed, x, j)` on every query, so two drivers that read the same field
//! in different orders see the same stacks.
//!
//! Mixing scheme: `w = derive(derive(seed, x), j)` (see [`crate::rng`]).
//! Under a law with sleep probability `p`, the instruction is `Sleep` iff
//! `w < ⌊p · 2^64⌋`; otherwise the jump direction is
//! `reduce(mix64(w), 2d)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::lattice::SiteSet;
use crate::rng::{derive, mix64, reduce, threshold, unit_f64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Sleep,
    /// Jump along direction `dir` of the lattice neighbour order.
    Jump(u8),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Sleep => write!(f, "S"),
            Instruction::Jump(dir) => write!(f, "J{dir}"),
        }
    }
}

impl std::str::FromStr for Instruction {
    type Err = ArwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(Instruction::Sleep),
            _ => s
                .strip_prefix('J')
                .and_then(|d| d.parse::<u8>().ok())
                .map(Instruction::Jump)
                .ok_or_else(|| ArwError::Parse(format!("bad instruction {s:?}"))),
        }
    }
}

impl Serialize for Instruction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Instruction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Explicit finite stacks, keyed by site index.
pub type Stacks = BTreeMap<usize, Vec<Instruction>>;

#[derive(Clone, Debug)]
pub enum Law {
    /// `P^λ`: sleep with probability `λ/(1+λ)`, each direction `1/((1+λ)2d)`.
    Standard { lambda: f64 },
    /// `P^{λ,A}`: `P^λ` on `A`, pure jumps outside.
    SleepFreeOutside { lambda: f64, inside: SiteSet },
    /// The `λ = ∞` convention: jumps only; the engine puts lone particles to
    /// sleep instantly.
    JumpOnly,
    Scripted(Stacks),
    /// A `P^{λ,A}` field with geometric runs of sleep instructions inserted
    /// before each jump outside `A`; marginally `P^λ`.
    InsertedSleeps {
        base: InstructionField,
        lambda: f64,
    },
}

const INSERT_STREAM: u64 = 0x05EE_D0F5_1EE9_u64;

#[derive(Clone, Debug)]
pub struct InstructionField {
    seed: u64,
    degree: u64,
    sleep_threshold: u64,
    law: Arc<Law>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(ArwError::param(format!("sleep rate λ={lambda} must be finite and > 0")))
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || degree > u8::MAX as usize || !degree.is_multiple_of(2) {
        Err(ArwError::param(format!("degree {degree} is not 2d for a supported d")))
    } else {
        Ok(())
    }
}

impl InstructionField {
    fn build(seed: u64, degree: usize, law: Law, sleep_probability: f64) -> Result<Self> {
        check_degree(degree)?;
        Ok(InstructionField {
            seed,
            degree: degree as u64,
            sleep_threshold: threshold(sleep_probability),
            law: Arc::new(law),
        })
    }

    pub fn standard(seed: u64, degree: usize, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Self::build(seed, degree, Law::Standard { lambda }, lambda / (1.0 + lambda))
    }

    pub fn sleep_free_outside(seed: u64, degree: usize, lambda: f64, inside: SiteSet) -> Result<Self> {
        check_lambda(lambda)?;
        Self::build(
            seed,
            degree,
            Law::SleepFreeOutside { lambda, inside },
            lambda / (1.0 + lambda),
        )
    }

    pub fn jump_only(seed: u64, degree: usize) -> Result<Self> {
        Self::build(seed, degree, Law::JumpOnly, 0.0)
    }

    pub fn scripted(degree: usize, stacks: Stacks) -> Result<Self> {
        for (&x, stack) in &stacks {
            if let Some(bad) = stack.iter().find(|i| matches!(i, Instruction::Jump(d) if *d as usize >= degree)) {
                return Err(ArwError::param(format!("instruction {bad} at site {x} exceeds degree {degree}")));
            }
        }
        Self::build(0, degree, Law::Scripted(stacks), 0.0)
    }

    /// Scripted field from the JSON wire form `{"<site>": ["S", "J0", ...]}`.
    pub fn scripted_from_json(degree: usize, text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<Instruction>> = serde_json::from_str(text)?;
        let mut stacks = Stacks::new();
        for (key, stack) in raw {
            let x = key
                .parse::<usize>()
                .map_err(|_| ArwError::Parse(format!("bad site key {key:?}")))?;
            stacks.insert(x, stack);
        }
        Self::scripted(degree, stacks)
    }

    pub fn scripted_to_json(&self) -> Option<String> {
        match self.law.as_ref() {
            Law::Scripted(stacks) => {
                let raw: BTreeMap<String, &Vec<Instruction>> =
                    stacks.iter().map(|(x, s)| (x.to_string(), s)).collect();
                serde_json::to_string(&raw).ok()
            }
            _ => None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn is_jump_only(&self) -> bool {
        matches!(self.law.as_ref(), Law::JumpOnly)
    }

    /// The sleep rate of the law, `∞` for `JumpOnly`, `None` for scripted.
    pub fn lambda(&self) -> Option<f64> {
        match self.law.as_ref() {
            Law::Standard { lambda }
            | Law::SleepFreeOutside { lambda, .. }
            | Law::InsertedSleeps { lambda, .. } => Some(*lambda),
            Law::JumpOnly => Some(f64::INFINITY),
            Law::Scripted(_) => None,
        }
    }

    #[inline]
    fn word(&self, x: usize, j: u64) -> u64 {
        derive(derive(self.seed, x as u64), j)
    }

    #[inline]
    fn direction(&self, w: u64) -> Instruction {
        Instruction::Jump(reduce(mix64(w), self.degree) as u8)
    }

    #[inline]
    fn sleep_or_jump(&self, w: u64) -> Instruction {
        if w < self.sleep_threshold {
            Instruction::Sleep
        } else {
            self.direction(w)
        }
    }

    /// `τ^{x,j}`; `None` only when a scripted stack is exhausted.
    #[inline]
    pub fn instruction(&self, x: usize, j: u64) -> Option<Instruction> {
        match self.law.as_ref() {
            Law::Standard { .. } => Some(self.sleep_or_jump(self.word(x, j))),
            Law::SleepFreeOutside { inside, .. } => {
                let w = self.word(x, j);
                Some(if inside.contains(x) {
                    self.sleep_or_jump(w)
                } else {
                    self.direction(w)
                })
            }
            Law::JumpOnly => Some(self.direction(self.word(x, j))),
            Law::Scripted(stacks) => stacks.get(&x).and_then(|s| s.get(j as usize)).copied(),
            Law::InsertedSleeps { base, .. } => self.inserted(base, x, j),
        }
    }

    /// Like [`instruction`](Self::instruction), with exhaustion as an error.
    pub fn sample_instruction(&self, x: usize, j: u64) -> Result<Instruction> {
        self.instruction(x, j)
            .ok_or(ArwError::ExhaustedStack { site: x, index: j })
    }

    /// Length of the `i`-th inserted sleep run at `x`: `P(G = g) = p^g (1-p)`
    /// with `p = λ/(1+λ)`.
    pub fn inserted_run(&self, x: usize, i: u64) -> u64 {
        let Law::InsertedSleeps { lambda, .. } = self.law.as_ref() else {
            return 0;
        };
        let p = lambda / (1.0 + lambda);
        let u = 1.0 - unit_f64(derive(derive(derive(self.seed, INSERT_STREAM), x as u64), i));
        (u.ln() / p.ln()).floor() as u64
    }

    fn inserted(&self, base: &InstructionField, x: usize, j: u64) -> Option<Instruction> {
        if let Law::SleepFreeOutside { inside, .. } = base.law() {
            if inside.contains(x) {
                return base.instruction(x, j);
            }
        }
        // Outside A: run_0 sleeps, base jump 0, run_1 sleeps, base jump 1, ...
        let mut start = 0u64;
        let mut i = 0u64;
        loop {
            let jump_at = start + self.inserted_run(x, i);
            if j < jump_at {
                return Some(Instruction::Sleep);
            }
            if j == jump_at {
                return base.instruction(x, i);
            }
            start = jump_at + 1;
            i += 1;
        }
    }
}

/// The coupling of `P^{λ,A}` with `P^λ`: a field distributed as `P^λ` that
/// coincides with `field` on `A` and reduces to it outside `A` once its
/// sleep instructions are deleted.
///
/// Random access outside `A` costs `O(j)`; intended for small test
/// instances.
pub fn couple_insert_sleeps(field: &InstructionField, lambda: f64) -> Result<InstructionField> {
    match field.law() {
        Law::SleepFreeOutside { lambda: own, .. } if *own == lambda => InstructionField::build(
            field.seed,
            field.degree(),
            Law::InsertedSleeps {
                base: field.clone(),
                lambda,
            },
            lambda / (1.0 + lambda),
        ),
        Law::SleepFreeOutside { lambda: own, .. } => Err(ArwError::param(format!(
            "coupling rate λ={lambda} differs from the field's λ={own}"
        ))),
        _ => Err(ArwError::param("sleep insertion needs a sleep-free-outside field")),
    }
}
