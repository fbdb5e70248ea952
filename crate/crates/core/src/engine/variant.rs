use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EngineError, Site};

/// Largest exponent accepted for the exponential-edge lattice.
pub const MAX_EXPONENT: u32 = 30;

/// Which line graph the chips live on.
///
/// Every variant is a decoration of the integer line: each pair of adjacent
/// sites is joined by an edge bundle, and each site may carry self-loops.
/// A site fires by taking `left + loop + right` chips; the smallest `left`
/// move one step left, the largest `right` move one step right and the
/// middle `loop` chips stay put.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// One edge between neighbours, no loops.
    Base,
    /// `r` parallel edges between neighbours.
    MultiEdge { r: u32 },
    /// Base lattice plus `s` self-loops at the origin only.
    OriginLoops { s: u32 },
    /// Base lattice plus one self-loop at every site.
    LoopsEverywhere,
    /// `r` parallel edges and `r` self-loops everywhere.
    LoopsAndEdges { r: u32 },
    /// Bundle between `k` and `k+1` (and between `-k` and `-k-1`) has
    /// `2^(t-k)` edges for `0 <= k <= t`, single edges further out.
    Exponential { t: u32 },
}

impl Variant {
    pub fn validate(&self) -> Result<(), EngineError> {
        match *self {
            Variant::MultiEdge { r: 0 } | Variant::LoopsAndEdges { r: 0 } => {
                Err(EngineError::InvalidVariant(format!(
                    "{self}: edge multiplicity r must be positive"
                )))
            }
            Variant::Exponential { t } if t > MAX_EXPONENT => Err(EngineError::InvalidVariant(
                format!("{self}: t must be at most {MAX_EXPONENT}"),
            )),
            _ => Ok(()),
        }
    }

    /// Multiplicity of the edge bundle joining `k` and `k + 1`.
    pub fn bundle(&self, k: Site) -> u64 {
        match *self {
            Variant::Base | Variant::OriginLoops { .. } | Variant::LoopsEverywhere => 1,
            Variant::MultiEdge { r } | Variant::LoopsAndEdges { r } => u64::from(r),
            Variant::Exponential { t } => {
                // The bundle (k, k+1) with k < 0 mirrors the bundle (-k-1, -k).
                let dist = if k >= 0 { k } else { -k - 1 };
                if dist <= i64::from(t) {
                    1u64 << (i64::from(t) - dist)
                } else {
                    1
                }
            }
        }
    }

    pub fn left_mult(&self, site: Site) -> u64 {
        self.bundle(site - 1)
    }

    pub fn right_mult(&self, site: Site) -> u64 {
        self.bundle(site)
    }

    pub fn loop_mult(&self, site: Site) -> u64 {
        match *self {
            Variant::OriginLoops { s } if site == 0 => u64::from(s),
            Variant::LoopsEverywhere => 1,
            Variant::LoopsAndEdges { r } => u64::from(r),
            _ => 0,
        }
    }

    /// Number of chips a site needs, and consumes, to fire.
    pub fn threshold(&self, site: Site) -> u64 {
        self.left_mult(site) + self.loop_mult(site) + self.right_mult(site)
    }

    /// `true` when every site has as many left edges as right edges, so the
    /// weighted position sum is conserved exactly.
    pub fn is_balanced(&self) -> bool {
        !matches!(self, Variant::Exponential { .. })
    }

    /// Short kebab-case name as used on the command line.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::MultiEdge { .. } => "multi-edge",
            Variant::OriginLoops { .. } => "origin-loops",
            Variant::LoopsEverywhere => "loops",
            Variant::LoopsAndEdges { .. } => "loops-edges",
            Variant::Exponential { .. } => "exponential",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Base | Variant::LoopsEverywhere => write!(f, "{}", self.kind_name()),
            Variant::MultiEdge { r } | Variant::LoopsAndEdges { r } => {
                write!(f, "{}(r={r})", self.kind_name())
            }
            Variant::OriginLoops { s } => write!(f, "{}(s={s})", self.kind_name()),
            Variant::Exponential { t } => write!(f, "{}(t={t})", self.kind_name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Edge multiplicity straight from the construction: for each k in
    /// 0..=t place 2^(t-k) edges on (k, k+1) and on (-k-1, -k).
    fn exponential_edges_brute(t: u32) -> std::collections::BTreeMap<(Site, Site), u64> {
        let mut edges = std::collections::BTreeMap::new();
        for k in 0..=i64::from(t) {
            let mult = 2u64.pow(t - k as u32);
            edges.insert((k, k + 1), mult);
            edges.insert((-k - 1, -k), mult);
        }
        edges
    }

    #[test]
    fn base_threshold_is_two() {
        for site in -5..=5 {
            assert_eq!(Variant::Base.threshold(site), 2);
        }
    }

    #[test]
    fn loops_everywhere_threshold_is_three() {
        assert_eq!(Variant::LoopsEverywhere.threshold(0), 3);
        assert_eq!(Variant::LoopsEverywhere.threshold(-4), 3);
    }

    #[test]
    fn origin_loops_only_at_origin() {
        let v = Variant::OriginLoops { s: 2 };
        assert_eq!(v.threshold(0), 4);
        assert_eq!(v.threshold(1), 2);
        assert_eq!(v.loop_mult(-1), 0);
    }

    #[test]
    fn multi_and_loop_edges_scale() {
        assert_eq!(Variant::MultiEdge { r: 3 }.threshold(7), 6);
        assert_eq!(Variant::LoopsAndEdges { r: 2 }.threshold(-1), 6);
    }

    #[test]
    fn exponential_matches_edge_enumeration() {
        for t in 0..4u32 {
            let edges = exponential_edges_brute(t);
            let v = Variant::Exponential { t };
            for site in -8i64..=8 {
                let left = edges.get(&(site - 1, site)).copied().unwrap_or(1);
                let right = edges.get(&(site, site + 1)).copied().unwrap_or(1);
                assert_eq!(v.left_mult(site), left, "t={t} site={site}");
                assert_eq!(v.right_mult(site), right, "t={t} site={site}");
                assert_eq!(v.threshold(site), left + right);
            }
        }
    }

    #[test]
    fn exponential_t1_thresholds() {
        let v = Variant::Exponential { t: 1 };
        assert_eq!(v.threshold(0), 4);
        assert_eq!(v.threshold(1), 3);
        assert_eq!(v.threshold(-1), 3);
        assert_eq!(v.threshold(2), 2);
    }

    #[test]
    fn zero_multiplicity_rejected() {
        assert!(Variant::MultiEdge { r: 0 }.validate().is_err());
        assert!(Variant::LoopsAndEdges { r: 0 }.validate().is_err());
        assert!(Variant::OriginLoops { s: 0 }.validate().is_ok());
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&Variant::MultiEdge { r: 2 }).unwrap();
        assert_eq!(json, r#"{"kind":"multi_edge","r":2}"#);
        let back: Variant = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Variant::MultiEdge { r: 2 });
    }
}
