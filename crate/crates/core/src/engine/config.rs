use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::lattice::SiteSet;

/// Occupation of a single site: empty, one sleeping particle, or `k >= 1`
/// active particles. Ordered `0 < s < 1 < 2 < ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiteState {
    Empty,
    Sleeping,
    Active(u32),
}

impl SiteState {
    /// Position in the order `0 < s < 1 < 2 < ...`; this is also the
    /// internal storage encoding.
    #[inline]
    pub fn rank(self) -> u32 {
        match self {
            SiteState::Empty => 0,
            SiteState::Sleeping => 1,
            SiteState::Active(k) => k + 1,
        }
    }

    #[inline]
    pub fn from_rank(r: u32) -> Self {
        match r {
            0 => SiteState::Empty,
            1 => SiteState::Sleeping,
            r => SiteState::Active(r - 1),
        }
    }

    /// `|η(x)|`, with `|s| = 1`.
    #[inline]
    pub fn particles(self) -> u64 {
        match self {
            SiteState::Empty => 0,
            SiteState::Sleeping => 1,
            SiteState::Active(k) => k as u64,
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, SiteState::Empty | SiteState::Sleeping)
    }
}

impl PartialOrd for SiteState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SiteState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for SiteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteState::Empty => write!(f, "0"),
            SiteState::Sleeping => write!(f, "s"),
            SiteState::Active(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for SiteState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SiteState::Sleeping => s.serialize_str("s"),
            other => s.serialize_u64(other.particles()),
        }
    }
}

impl<'de> Deserialize<'de> for SiteState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct StateVisitor;

        impl Visitor<'_> for StateVisitor {
            type Value = SiteState;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative particle count or \"s\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<SiteState, E> {
                match v {
                    0 => Ok(SiteState::Empty),
                    k if k < u32::MAX as u64 - 1 => Ok(SiteState::Active(k as u32)),
                    _ => Err(E::custom("particle count too large")),
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<SiteState, E> {
                if v < 0 {
                    Err(E::custom("negative particle count"))
                } else {
                    self.visit_u64(v as u64)
                }
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<SiteState, E> {
                if v == "s" {
                    Ok(SiteState::Sleeping)
                } else {
                    Err(E::custom(format!("unknown site state {v:?}")))
                }
            }
        }

        d.deserialize_any(StateVisitor)
    }
}

/// A configuration `η` on a finite lattice, serialized as a JSON array of
/// `0`, `"s"` or `k`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    ranks: Vec<u32>,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.states().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

impl Configuration {
    pub fn empty(volume: usize) -> Self {
        Configuration {
            ranks: vec![0; volume],
        }
    }

    pub fn from_states(states: impl IntoIterator<Item = SiteState>) -> Self {
        Configuration {
            ranks: states.into_iter().map(SiteState::rank).collect(),
        }
    }

    /// Active particle counts per site.
    pub fn from_counts(counts: impl IntoIterator<Item = u32>) -> Self {
        Self::from_states(counts.into_iter().map(|k| {
            if k == 0 {
                SiteState::Empty
            } else {
                SiteState::Active(k)
            }
        }))
    }

    /// `1_A`: one active particle on each site of `A`.
    pub fn ones_on(set: &SiteSet) -> Self {
        Configuration {
            ranks: set.mask().iter().map(|&m| if m { 2 } else { 0 }).collect(),
        }
    }

    pub fn volume(&self) -> usize {
        self.ranks.len()
    }

    #[inline]
    pub fn get(&self, x: usize) -> SiteState {
        SiteState::from_rank(self.ranks[x])
    }

    pub fn set(&mut self, x: usize, state: SiteState) {
        self.ranks[x] = state.rank();
    }

    #[inline]
    pub(crate) fn rank(&self, x: usize) -> u32 {
        self.ranks[x]
    }

    #[inline]
    pub(crate) fn rank_mut(&mut self, x: usize) -> &mut u32 {
        &mut self.ranks[x]
    }

    #[inline]
    pub fn is_active(&self, x: usize) -> bool {
        self.ranks[x] >= 2
    }

    pub fn states(&self) -> impl Iterator<Item = SiteState> + '_ {
        self.ranks.iter().map(|&r| SiteState::from_rank(r))
    }

    /// `|η|_A`.
    pub fn particle_count(&self, set: &SiteSet) -> u64 {
        set.iter().map(|x| self.get(x).particles()).sum()
    }

    /// `|η|`.
    pub fn total_particles(&self) -> u64 {
        self.states().map(SiteState::particles).sum()
    }

    /// Number of particles per site, regardless of state.
    pub fn occupation(&self, x: usize) -> u64 {
        self.get(x).particles()
    }

    pub fn is_stable(&self, region: &SiteSet) -> bool {
        region.iter().all(|x| !self.is_active(x))
    }

    pub fn is_stable_everywhere(&self) -> bool {
        self.ranks.iter().all(|&r| r < 2)
    }

    pub fn active_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranks
            .iter()
            .enumerate()
            .filter_map(|(x, &r)| (r >= 2).then_some(x))
    }

    /// Pointwise `self <= other` in the order `0 < s < 1 < ...`.
    pub fn is_dominated_by(&self, other: &Configuration) -> bool {
        self.ranks.len() == other.ranks.len()
            && self.ranks.iter().zip(&other.ranks).all(|(a, b)| a <= b)
    }

    /// Sites that hold at least one particle.
    pub fn support(&self) -> SiteSet {
        SiteSet::from_mask(self.ranks.iter().map(|&r| r > 0).collect())
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.states())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let states = Vec::<SiteState>::deserialize(d)?;
        Ok(Configuration::from_states(states))
    }
}

/// Per-site toppling counter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Odometer(Vec<u64>);

impl Odometer {
    pub fn zeros(volume: usize) -> Self {
        Odometer(vec![0; volume])
    }

    #[inline]
    pub fn get(&self, x: usize) -> u64 {
        self.0[x]
    }

    #[inline]
    pub(crate) fn bump(&mut self, x: usize) -> u64 {
        let h = self.0[x];
        self.0[x] = h + 1;
        h
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    /// `‖m‖`, the total number of topplings.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// `‖m‖_A`.
    pub fn on(&self, set: &SiteSet) -> u64 {
        set.iter().map(|x| self.0[x]).sum()
    }

    pub fn is_dominated_by(&self, other: &Odometer) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn vanishes_on(&self, set: &SiteSet) -> bool {
        set.iter().all(|x| self.0[x] == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_zero_s_one_two() {
        use SiteState::*;
        assert!(Empty < Sleeping);
        assert!(Sleeping < Active(1));
        assert!(Active(1) < Active(2));
    }

    #[test]
    fn particle_count_examples() {
        let eta = Configuration::from_states([SiteState::Sleeping, SiteState::Active(2), SiteState::Empty]);
        assert_eq!(eta.particle_count(&SiteSet::full(3)), 3);
        assert_eq!(eta.particle_count(&SiteSet::empty(3)), 0);
        let a = SiteSet::from_sites(6, [0, 2, 5]);
        assert_eq!(Configuration::ones_on(&a).particle_count(&a), 3);
    }

    #[test]
    fn stability_examples() {
        let all = SiteSet::full(3);
        let sleeping = Configuration::from_states([SiteState::Sleeping; 3]);
        assert!(sleeping.is_stable(&all));
        let one = Configuration::from_states([SiteState::Empty, SiteState::Active(1), SiteState::Empty]);
        assert!(!one.is_stable(&all));
        assert!(one.is_stable(&SiteSet::from_sites(3, [0, 2])));
    }

    #[test]
    fn json_wire_format() {
        let eta = Configuration::from_states([SiteState::Sleeping, SiteState::Active(2), SiteState::Empty]);
        let text = serde_json::to_string(&eta).unwrap();
        assert_eq!(text, r#"["s",2,0]"#);
        let back: Configuration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, eta);
        assert!(serde_json::from_str::<Configuration>(r#"["x"]"#).is_err());
        assert!(serde_json::from_str::<Configuration>("[-1]").is_err());
    }
}
