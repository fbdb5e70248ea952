//! Closed-form firing counts, terminal configurations and canonical labels.
//!
//! Every supported `(variant, n)` pair is first classified into a [`Regime`]
//! carrying the derived integer parameters (`m`, `r`, `s`, `t`). Anything
//! that does not divide out exactly is rejected as unsupported.
//!
//! [`fires_from_terminal`] and [`flow_balance_residuals`] give a second,
//! formula-free route to the same numbers: on the line the net flow across
//! the bundle between `k` and `k+1` equals the change in the number of chips
//! right of `k`, which pins down every site's fire count from the start and
//! end configurations alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{LabeledConfiguration, Preset, Site, Value, Variant};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{variant} with {n} chips is not a supported combination: {reason}")]
    Unsupported {
        variant: Variant,
        n: usize,
        reason: String,
    },
    #[error("no sorting result applies to {variant} with n={n} ({preset:?} preset)")]
    NoSortingGuarantee {
        variant: Variant,
        n: usize,
        preset: Preset,
    },
    #[error("flow accounting failed: {0}")]
    Inconsistent(String),
}

/// Parameters derived from a supported `(variant, n)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `n = 2m`.
    BaseEven { m: u64 },
    /// `n = 2m + 1`.
    BaseOdd { m: u64 },
    /// `n = 2rm`.
    MultiEdge { r: u64, m: u64 },
    /// `n = s + 2m`.
    OriginLoops { s: u64, m: u64 },
    /// Self-loop everywhere, `n = 4m - 1`, `m >= 1`.
    LoopsThreeMod4 { m: u64 },
    /// Self-loop everywhere, `n = 4m + 1`.
    LoopsOneMod4 { m: u64 },
    /// `n = r(4m - 1)`, `m >= 1`.
    LoopsAndEdges { r: u64, m: u64 },
    /// `n = 2^(t+2)`.
    Exponential { t: u64 },
}

impl Regime {
    /// Side length of the square of last moves at the bottom of the firing
    /// poset, where the regime has one.
    pub fn diamond_size(&self) -> Option<u64> {
        match *self {
            Regime::BaseEven { m }
            | Regime::BaseOdd { m }
            | Regime::MultiEdge { m, .. }
            | Regime::OriginLoops { m, .. }
            | Regime::LoopsThreeMod4 { m }
            | Regime::LoopsOneMod4 { m }
            | Regime::LoopsAndEdges { m, .. } => Some(m),
            Regime::Exponential { .. } => None,
        }
    }
}

/// Classifies `(variant, n)` for the origin preset.
pub fn regime(variant: &Variant, n: usize) -> Result<Regime, OracleError> {
    let unsupported = |reason: &str| OracleError::Unsupported {
        variant: *variant,
        n,
        reason: reason.to_string(),
    };
    let n64 = n as u64;
    match *variant {
        Variant::Base if n.is_multiple_of(2) => Ok(Regime::BaseEven { m: n64 / 2 }),
        Variant::Base => Ok(Regime::BaseOdd { m: n64 / 2 }),
        Variant::MultiEdge { r } => {
            let r = u64::from(r);
            if r == 0 || !n64.is_multiple_of(2 * r) {
                return Err(unsupported("n must be a multiple of 2r"));
            }
            Ok(Regime::MultiEdge {
                r,
                m: n64 / (2 * r),
            })
        }
        Variant::OriginLoops { s } => {
            let s = u64::from(s);
            if n64 < s || !(n64 - s).is_multiple_of(2) {
                return Err(unsupported("n must be at least s with n - s even"));
            }
            Ok(Regime::OriginLoops {
                s,
                m: (n64 - s) / 2,
            })
        }
        Variant::LoopsEverywhere => match n64 % 4 {
            3 => Ok(Regime::LoopsThreeMod4 { m: (n64 + 1) / 4 }),
            1 => Ok(Regime::LoopsOneMod4 { m: (n64 - 1) / 4 }),
            _ => Err(unsupported("n must be odd (3 or 1 mod 4)")),
        },
        Variant::LoopsAndEdges { r } => {
            let r = u64::from(r);
            if r == 0 || !n64.is_multiple_of(r) || (n64 / r) % 4 != 3 {
                return Err(unsupported("n must be r(4m - 1)"));
            }
            Ok(Regime::LoopsAndEdges {
                r,
                m: (n64 / r + 1) / 4,
            })
        }
        Variant::Exponential { t } => {
            let t = u64::from(t);
            if t > 60 || n64 != 1u64 << (t + 2) {
                return Err(unsupported("n must be 2^(t+2)"));
            }
            Ok(Regime::Exponential { t })
        }
    }
}

/// Per-site total fire counts. Sites that never fire are omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiringCountTable(pub BTreeMap<Site, u64>);

impl FiringCountTable {
    pub fn get(&self, site: Site) -> u64 {
        self.0.get(&site).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    /// Smallest and largest site that fires at least once.
    pub fn window(&self) -> Option<(Site, Site)> {
        Some((*self.0.keys().next()?, *self.0.keys().next_back()?))
    }

    fn from_fn(radius: u64, f: impl Fn(u64) -> u64) -> Self {
        let radius = radius as i64;
        Self(
            (-radius..=radius)
                .map(|k| (k, f(k.unsigned_abs())))
                .filter(|&(_, c)| c > 0)
                .collect(),
        )
    }
}

/// Terminal configuration: chip counts, and the labeled placement when a
/// sorting result fixes it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalSpec {
    pub unlabeled: BTreeMap<Site, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labeled: Option<BTreeMap<Site, Vec<Value>>>,
}

impl TerminalSpec {
    pub fn total(&self) -> usize {
        self.unlabeled.values().sum()
    }
}

fn symmetric_counts(radius: u64, at: impl Fn(u64) -> u64) -> BTreeMap<Site, usize> {
    let radius = radius as i64;
    (-radius..=radius)
        .map(|k| (k, at(k.unsigned_abs()) as usize))
        .filter(|&(_, c)| c > 0)
        .collect()
}

fn repeat(values: impl IntoIterator<Item = Value>, times: u64) -> Vec<Value> {
    values
        .into_iter()
        .flat_map(|v| std::iter::repeat_n(v, times as usize))
        .collect()
}

fn self_loop_labels(m: u64) -> Vec<Value> {
    let m = m as Value;
    let mut out = vec![-m];
    out.extend(repeat(1 - m..=-1, 2));
    out.push(0);
    out.extend(repeat(1..=m - 1, 2));
    out.push(m);
    out
}

/// Canonical chip values for `n` chips at the origin, sorted ascending.
///
/// Read left to right they match the slots of the sorted terminal. For the
/// `4m + 1` self-loop case the values `-m..=-1` and `1..=m` appear twice and
/// `0` once.
pub fn canonical_labels(variant: &Variant, n: usize) -> Result<Vec<Value>, OracleError> {
    let plus_minus = |m: u64| -> Vec<Value> {
        let m = m as Value;
        (-m..=-1).chain(1..=m).collect()
    };
    let mut labels = match regime(variant, n)? {
        Regime::BaseEven { m } => plus_minus(m),
        Regime::BaseOdd { m } => (-(m as Value)..=m as Value).collect(),
        Regime::MultiEdge { r, m } => repeat(plus_minus(m), r),
        Regime::OriginLoops { s, m } => {
            let mut v = plus_minus(m);
            v.extend(std::iter::repeat_n(0, s as usize));
            v
        }
        Regime::LoopsThreeMod4 { m } => self_loop_labels(m),
        Regime::LoopsOneMod4 { m } => {
            let mut v = repeat(plus_minus(m), 2);
            v.push(0);
            v
        }
        Regime::LoopsAndEdges { r, m } => repeat(self_loop_labels(m), r),
        Regime::Exponential { t } => plus_minus(1 << (t + 1)),
    };
    labels.sort_unstable();
    Ok(labels)
}

fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Total fires at every site for `n` chips started at the origin.
pub fn fire_table(variant: &Variant, n: usize) -> Result<FiringCountTable, OracleError> {
    Ok(match regime(variant, n)? {
        Regime::BaseEven { m }
        | Regime::BaseOdd { m }
        | Regime::MultiEdge { m, .. }
        | Regime::OriginLoops { m, .. } => {
            FiringCountTable::from_fn(m, |k| if k <= m { choose2(m - k + 1) } else { 0 })
        }
        Regime::LoopsThreeMod4 { m } | Regime::LoopsAndEdges { m, .. } => {
            FiringCountTable::from_fn(m, |k| (m - k.min(m)).pow(2))
        }
        Regime::LoopsOneMod4 { .. } => {
            // No tabulated formula; solved from the terminal by flow balance.
            let initial = BTreeMap::from([(0, n)]);
            let terminal = terminal_unlabeled(variant, n)?.unlabeled;
            fires_from_terminal(variant, &initial, &terminal)?
        }
        Regime::Exponential { t } => {
            FiringCountTable::from_fn(t + 1, |k| if k <= t + 1 { 2 * (t + 1 - k) + 1 } else { 0 })
        }
    })
}

/// Total fires at one site.
pub fn total_fires(variant: &Variant, n: usize, site: Site) -> Result<u64, OracleError> {
    Ok(fire_table(variant, n)?.get(site))
}

/// Chip counts of the terminal configuration for `n` chips at the origin.
pub fn terminal_unlabeled(variant: &Variant, n: usize) -> Result<TerminalSpec, OracleError> {
    let unlabeled = match regime(variant, n)? {
        Regime::BaseEven { m } => symmetric_counts(m, |k| u64::from(k >= 1)),
        Regime::BaseOdd { m } => symmetric_counts(m, |_| 1),
        Regime::MultiEdge { r, m } => symmetric_counts(m, |k| if k >= 1 { r } else { 0 }),
        Regime::OriginLoops { s, m } => symmetric_counts(m, |k| if k == 0 { s } else { 1 }),
        Regime::LoopsThreeMod4 { m } => {
            symmetric_counts(m, |k| if k == 0 || k == m { 1 } else { 2 })
        }
        Regime::LoopsOneMod4 { m } => symmetric_counts(m, |k| if k == 0 { 1 } else { 2 }),
        Regime::LoopsAndEdges { r, m } => {
            symmetric_counts(m, |k| if k == 0 || k == m { r } else { 2 * r })
        }
        Regime::Exponential { t } => symmetric_counts(t + 2, |k| match k {
            0 => 0,
            k if k <= t + 1 => 1 << (t + 1 - k),
            _ => 1,
        }),
    };
    Ok(TerminalSpec {
        unlabeled,
        labeled: None,
    })
}

/// Fills sorted `labels` into the slots of `unlabeled`, left to right.
fn fill_sorted(unlabeled: &BTreeMap<Site, usize>, labels: &[Value]) -> BTreeMap<Site, Vec<Value>> {
    let mut rest = labels;
    unlabeled
        .iter()
        .map(|(&site, &count)| {
            let (here, tail) = rest.split_at(count);
            rest = tail;
            (site, here.to_vec())
        })
        .collect()
}

/// The weakly sorted terminal that a sorting result guarantees.
///
/// For the staircase preset `n` is the staircase parameter and the chip
/// valued `k` ends at site `k - 1`, leaving site -1 empty. (Firing conserves
/// `sum(site * chips)`, which is `-n` at the start.)
pub fn expected_sorted_terminal(
    variant: &Variant,
    n: usize,
    preset: Preset,
) -> Result<TerminalSpec, OracleError> {
    let no_guarantee = || OracleError::NoSortingGuarantee {
        variant: *variant,
        n,
        preset,
    };
    match preset {
        Preset::Origin => {
            match regime(variant, n)? {
                Regime::BaseOdd { m } | Regime::LoopsOneMod4 { m } if m > 0 => {
                    return Err(no_guarantee())
                }
                _ => {}
            }
            let mut spec = terminal_unlabeled(variant, n)?;
            let labels = canonical_labels(variant, n)?;
            spec.labeled = Some(fill_sorted(&spec.unlabeled, &labels));
            Ok(spec)
        }
        Preset::Staircase if *variant == Variant::Base => {
            let k = n as Value;
            let labeled: BTreeMap<Site, Vec<Value>> = (-k..=-1)
                .chain(1..=k + 1)
                .map(|v| (v - 1, vec![v]))
                .collect();
            Ok(TerminalSpec {
                unlabeled: labeled.iter().map(|(&s, v)| (s, v.len())).collect(),
                labeled: Some(labeled),
            })
        }
        _ => Err(no_guarantee()),
    }
}

/// Chips right of `k` in a count map.
fn right_of(counts: &BTreeMap<Site, usize>, k: Site) -> i64 {
    counts.range(k + 1..).map(|(_, &c)| c as i64).sum()
}

/// Solves for per-site fire counts given the start and end chip counts.
///
/// Across the bundle between `k` and `k+1` the net rightward flow is
/// `bundle(k) * (f(k) - f(k+1))`, which must equal the change in the number
/// of chips right of `k`. Fire counts vanish beyond the occupied range, so
/// the recurrence is solved inward from the right and checked for
/// consistency on the left.
pub fn fires_from_terminal(
    variant: &Variant,
    initial: &BTreeMap<Site, usize>,
    terminal: &BTreeMap<Site, usize>,
) -> Result<FiringCountTable, OracleError> {
    let sites = initial.keys().chain(terminal.keys());
    let (Some(&lo), Some(&hi)) = (sites.clone().min(), sites.max()) else {
        return Ok(FiringCountTable::default());
    };
    let total_in: usize = initial.values().sum();
    let total_out: usize = terminal.values().sum();
    if total_in != total_out {
        return Err(OracleError::Inconsistent(format!(
            "chip totals differ: {total_in} initially, {total_out} at the end"
        )));
    }
    let mut fires = BTreeMap::new();
    let mut next: i64 = 0; // f(k + 1)
    for k in (lo - 1..hi).rev() {
        let delta = right_of(terminal, k) - right_of(initial, k);
        let bundle = variant.bundle(k) as i64;
        if delta % bundle != 0 {
            return Err(OracleError::Inconsistent(format!(
                "flow {delta} across ({k}, {}) is not a multiple of the bundle size {bundle}",
                k + 1
            )));
        }
        let f = next + delta / bundle;
        if f < 0 {
            return Err(OracleError::Inconsistent(format!(
                "site {k} would fire a negative number of times"
            )));
        }
        if f > 0 {
            fires.insert(k, f as u64);
        }
        next = f;
    }
    if next != 0 {
        return Err(OracleError::Inconsistent(format!(
            "fires do not vanish left of site {lo}"
        )));
    }
    Ok(FiringCountTable(fires))
}

/// Sites where `initial + inflow - outflow != terminal`, with both sides.
pub fn flow_balance_residuals(
    variant: &Variant,
    initial: &BTreeMap<Site, usize>,
    fires: &FiringCountTable,
    terminal: &BTreeMap<Site, usize>,
) -> Vec<(Site, i64, i64)> {
    let keys = initial
        .keys()
        .chain(terminal.keys())
        .chain(fires.0.keys())
        .copied();
    let (Some(lo), Some(hi)) = (keys.clone().min(), keys.max()) else {
        return Vec::new();
    };
    let f = |s: Site| fires.get(s) as i64;
    (lo - 1..=hi + 1)
        .filter_map(|i| {
            let lhs = initial.get(&i).copied().unwrap_or(0) as i64
                + variant.right_mult(i - 1) as i64 * f(i - 1)
                + variant.left_mult(i + 1) as i64 * f(i + 1)
                - (variant.left_mult(i) + variant.right_mult(i)) as i64 * f(i);
            let rhs = terminal.get(&i).copied().unwrap_or(0) as i64;
            (lhs != rhs).then_some((i, lhs, rhs))
        })
        .collect()
}

/// Total number of moves any complete run from `initial` performs, when a
/// closed form or a sorted-terminal prediction is available.
pub fn expected_total_moves(variant: &Variant, initial: &LabeledConfiguration) -> Option<u64> {
    match Preset::infer(initial) {
        Preset::Origin => fire_table(variant, initial.total()).ok().map(|t| t.total()),
        Preset::Staircase => {
            let n = (initial.total() - 1) / 2;
            let end = expected_sorted_terminal(variant, n, Preset::Staircase).ok()?;
            fires_from_terminal(variant, &initial.unlabeled(), &end.unlabeled)
                .ok()
                .map(|t| t.total())
        }
        Preset::Custom => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin(n: usize) -> BTreeMap<Site, usize> {
        BTreeMap::from([(0, n)])
    }

    #[test]
    fn label_examples() {
        assert_eq!(
            canonical_labels(&Variant::Base, 4).unwrap(),
            vec![-2, -1, 1, 2]
        );
        assert_eq!(
            canonical_labels(&Variant::LoopsEverywhere, 7).unwrap(),
            vec![-2, -1, -1, 0, 1, 1, 2]
        );
        assert_eq!(
            canonical_labels(&Variant::MultiEdge { r: 2 }, 8).unwrap(),
            vec![-2, -2, -1, -1, 1, 1, 2, 2]
        );
        assert_eq!(
            canonical_labels(&Variant::Base, 5).unwrap(),
            vec![-2, -1, 0, 1, 2]
        );
        assert_eq!(
            canonical_labels(&Variant::OriginLoops { s: 2 }, 6).unwrap(),
            vec![-2, -1, 0, 0, 1, 2]
        );
        assert_eq!(
            canonical_labels(&Variant::LoopsEverywhere, 9).unwrap(),
            vec![-2, -2, -1, -1, 0, 1, 1, 2, 2]
        );
        assert_eq!(
            canonical_labels(&Variant::Exponential { t: 1 }, 8).unwrap(),
            vec![-4, -3, -2, -1, 1, 2, 3, 4]
        );
    }

    #[test]
    fn unsupported_pairs() {
        assert!(canonical_labels(&Variant::MultiEdge { r: 2 }, 6).is_err());
        assert!(canonical_labels(&Variant::LoopsEverywhere, 8).is_err());
        assert!(canonical_labels(&Variant::Exponential { t: 1 }, 6).is_err());
        assert!(canonical_labels(&Variant::OriginLoops { s: 3 }, 6).is_err());
        assert!(canonical_labels(&Variant::LoopsAndEdges { r: 2 }, 12).is_err());
        assert!(canonical_labels(&Variant::LoopsAndEdges { r: 2 }, 14).is_ok());
    }

    #[test]
    fn fire_count_examples() {
        assert_eq!(total_fires(&Variant::Base, 10, 0).unwrap(), 15);
        assert_eq!(total_fires(&Variant::LoopsEverywhere, 11, 1).unwrap(), 4);
        assert_eq!(total_fires(&Variant::LoopsEverywhere, 11, -1).unwrap(), 4);
        let exp = Variant::Exponential { t: 1 };
        let got: Vec<u64> = (-3..=3).map(|k| total_fires(&exp, 8, k).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 3, 5, 3, 1, 0]);
        assert_eq!(fire_table(&Variant::Base, 10).unwrap().total(), 55);
    }

    #[test]
    fn odd_base_counts_match_even() {
        for m in 0..8 {
            assert_eq!(
                fire_table(&Variant::Base, 2 * m).unwrap(),
                fire_table(&Variant::Base, 2 * m + 1).unwrap()
            );
        }
    }

    #[test]
    fn one_mod_four_counts() {
        // Solved by flow balance; agrees with (m-|k|)(m-|k|+1).
        for m in 0..6u64 {
            let n = (4 * m + 1) as usize;
            let table = fire_table(&Variant::LoopsEverywhere, n).unwrap();
            for k in -(m as i64) - 1..=m as i64 + 1 {
                let d = m.saturating_sub(k.unsigned_abs());
                assert_eq!(table.get(k), d * (d + 1), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn terminal_examples() {
        let base = terminal_unlabeled(&Variant::Base, 10).unwrap();
        let expect: BTreeMap<Site, usize> = (-5..=5).filter(|&k| k != 0).map(|k| (k, 1)).collect();
        assert_eq!(base.unlabeled, expect);

        let loops = terminal_unlabeled(&Variant::LoopsEverywhere, 11).unwrap();
        assert_eq!(
            loops.unlabeled,
            BTreeMap::from([(-3, 1), (-2, 2), (-1, 2), (0, 1), (1, 2), (2, 2), (3, 1)])
        );

        let exp = terminal_unlabeled(&Variant::Exponential { t: 1 }, 8).unwrap();
        assert_eq!(
            exp.unlabeled,
            BTreeMap::from([(-3, 1), (-2, 1), (-1, 2), (1, 2), (2, 1), (3, 1)])
        );

        let odd = terminal_unlabeled(&Variant::Base, 11).unwrap();
        assert_eq!(odd.unlabeled.get(&0), Some(&1));
        assert_eq!(odd.total(), 11);
    }

    #[test]
    fn sorted_terminal_examples() {
        let base = expected_sorted_terminal(&Variant::Base, 4, Preset::Origin).unwrap();
        assert_eq!(
            base.labeled.unwrap(),
            BTreeMap::from([(-2, vec![-2]), (-1, vec![-1]), (1, vec![1]), (2, vec![2])])
        );

        let stair = expected_sorted_terminal(&Variant::Base, 3, Preset::Staircase).unwrap();
        let expect: BTreeMap<Site, Vec<Value>> = [-3, -2, -1, 1, 2, 3, 4]
            .into_iter()
            .map(|k| (k - 1, vec![k]))
            .collect();
        assert_eq!(stair.labeled.unwrap(), expect);

        let loops = expected_sorted_terminal(&Variant::LoopsEverywhere, 7, Preset::Origin).unwrap();
        assert_eq!(
            loops.labeled.unwrap(),
            BTreeMap::from([
                (-2, vec![-2]),
                (-1, vec![-1, -1]),
                (0, vec![0]),
                (1, vec![1, 1]),
                (2, vec![2])
            ])
        );

        let exp =
            expected_sorted_terminal(&Variant::Exponential { t: 1 }, 8, Preset::Origin).unwrap();
        assert_eq!(
            exp.labeled.unwrap(),
            BTreeMap::from([
                (-3, vec![-4]),
                (-2, vec![-3]),
                (-1, vec![-2, -1]),
                (1, vec![1, 2]),
                (2, vec![3]),
                (3, vec![4])
            ])
        );
    }

    #[test]
    fn no_sorting_guarantee_cases() {
        assert!(matches!(
            expected_sorted_terminal(&Variant::Base, 11, Preset::Origin),
            Err(OracleError::NoSortingGuarantee { .. })
        ));
        assert!(matches!(
            expected_sorted_terminal(&Variant::LoopsEverywhere, 5, Preset::Origin),
            Err(OracleError::NoSortingGuarantee { .. })
        ));
        assert!(expected_sorted_terminal(&Variant::Base, 1, Preset::Origin).is_ok());
        assert!(expected_sorted_terminal(&Variant::LoopsEverywhere, 1, Preset::Origin).is_ok());
        assert!(expected_sorted_terminal(&Variant::LoopsEverywhere, 3, Preset::Staircase).is_err());
    }

    #[test]
    fn exponential_recurrence() {
        for t in 0..5u32 {
            let n = 1usize << (t + 2);
            let table = fire_table(&Variant::Exponential { t }, n).unwrap();
            for k in 0..=t as i64 {
                assert_eq!(table.get(k), table.get(k + 1) + 2);
                assert_eq!(table.get(-k), table.get(-k - 1) + 2);
            }
            assert_eq!(table.get(t as i64 + 1), 1);
        }
    }

    #[test]
    fn self_loop_recurrences() {
        for m in 1..8i64 {
            let n = (4 * m - 1) as usize;
            let table = fire_table(&Variant::LoopsEverywhere, n).unwrap();
            let f = |k: i64| table.get(k) as i64;
            for k in 1..m {
                assert_eq!(f(k), f(k + 1) + 2 * (m - k) - 1);
            }
            assert_eq!(2 * f(0), f(1) + f(-1) + 4 * m - 2);
        }
    }

    #[test]
    fn flow_route_matches_closed_forms() {
        let cases: Vec<(Variant, usize)> = vec![
            (Variant::Base, 10),
            (Variant::Base, 11),
            (Variant::MultiEdge { r: 2 }, 12),
            (Variant::OriginLoops { s: 2 }, 8),
            (Variant::LoopsEverywhere, 11),
            (Variant::LoopsAndEdges { r: 2 }, 14),
            (Variant::Exponential { t: 2 }, 16),
        ];
        for (variant, n) in cases {
            let terminal = terminal_unlabeled(&variant, n).unwrap().unlabeled;
            let table = fire_table(&variant, n).unwrap();
            let solved = fires_from_terminal(&variant, &origin(n), &terminal).unwrap();
            assert_eq!(solved, table, "{variant} n={n}");
            assert!(flow_balance_residuals(&variant, &origin(n), &table, &terminal).is_empty());
        }
    }

    #[test]
    fn flow_route_rejects_impossible_terminals() {
        let bad = BTreeMap::from([(-1, 1), (2, 1)]);
        assert!(fires_from_terminal(&Variant::Base, &origin(2), &bad).is_err());
        let wrong_total = BTreeMap::from([(-1, 1)]);
        assert!(fires_from_terminal(&Variant::Base, &origin(2), &wrong_total).is_err());
    }

    #[test]
    fn residuals_flag_a_bad_table() {
        let mut table = fire_table(&Variant::Base, 6).unwrap();
        table.0.insert(0, 7);
        let terminal = terminal_unlabeled(&Variant::Base, 6).unwrap().unlabeled;
        assert!(!flow_balance_residuals(&Variant::Base, &origin(6), &table, &terminal).is_empty());
    }

    #[test]
    fn staircase_total_moves_known() {
        let start = crate::engine::standard_initial(&Variant::Base, 3, Preset::Staircase).unwrap();
        let moves = expected_total_moves(&Variant::Base, &start).unwrap();
        let run = crate::engine::Runner::new(Variant::Base, &crate::engine::Strategy::Random)
            .seed(3)
            .run(&start)
            .unwrap();
        assert_eq!(run.len() as u64, moves);
        let end = expected_sorted_terminal(&Variant::Base, 3, Preset::Staircase).unwrap();
        assert_eq!(run.terminal().values(), end.labeled.unwrap());
    }
}
