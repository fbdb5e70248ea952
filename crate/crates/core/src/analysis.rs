//! Per-step checks of chip positions along recorded runs.
//!
//! Every checker takes a complete [`Trace`] started from the origin preset
//! and returns every violation it finds. Step `i` in a violation refers to
//! the configuration after `i` moves, so step 0 is the starting
//! configuration. Applying a checker to a variant or chip count it does not
//! cover is an error.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::closedform::{self, FiringCountTable, OracleError, Regime};
use crate::engine::{
    enabled_sites, ChipId, EngineError, LabeledConfiguration, Preset, Site, Trace, Value, Variant,
};
use crate::poset::{in_diamond, DiamondCoord, MoveInstance};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{check} does not apply to {variant} with n={n}: {reason}")]
    Unsupported {
        check: &'static str,
        variant: Variant,
        n: usize,
        reason: &'static str,
    },
    #[error("trace stops while a site is still enabled")]
    Incomplete,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which bound a violation breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// A negative chip went further right than its label allows.
    ChipUpper,
    /// A positive chip went further left than its label allows.
    ChipLower,
    /// A negative chip was too far right just before a move on the square
    /// of final moves.
    TrackUpper,
    /// A positive chip was too far left just before a move on the square.
    TrackLower,
    LoopLower,
    LoopUpper,
    /// Two chips with one label sat on the lower bound together.
    LoopLowerTie,
    /// Two chips with one label sat on the upper bound together.
    LoopUpperTie,
    /// Too few small chips had settled left of a square move's site.
    ProgressLeft,
    /// Too few large chips had settled right of a square move's site.
    ProgressRight,
    /// Too many small chips first met the square right of a site.
    EntryRight,
    /// Too many large chips first met the square left of a site.
    EntryLeft,
}

/// One broken bound. Count bounds leave `chip_id` empty and use
/// `chip_value` for the label threshold of the count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundViolation {
    pub step: Option<usize>,
    pub chip_id: Option<u32>,
    pub chip_value: Value,
    pub site: Site,
    pub kind: BoundKind,
    pub bound: i64,
    pub observed: i64,
}

/// True iff every chip with a smaller value sits at or left of every chip
/// with a larger one.
pub fn is_weakly_sorted(config: &LabeledConfiguration) -> bool {
    values_weakly_sorted(&config.values())
}

/// [`is_weakly_sorted`] on a site-to-sorted-values map.
pub fn values_weakly_sorted(sites: &BTreeMap<Site, Vec<Value>>) -> bool {
    let mut max_left: Option<Value> = None;
    for values in sites.values() {
        let (Some(&lo), Some(&hi)) = (values.first(), values.last()) else {
            continue;
        };
        if max_left.is_some_and(|m| m > lo) {
            return false;
        }
        max_left = Some(max_left.map_or(hi, |m| m.max(hi)));
    }
    true
}

fn scope(trace: &Trace, check: &'static str) -> Result<(Regime, usize), AnalysisError> {
    let n = trace.initial.total();
    let unsupported = |reason| AnalysisError::Unsupported {
        check,
        variant: trace.variant,
        n,
        reason,
    };
    if trace.preset != Preset::Origin {
        return Err(unsupported("needs every chip to start at the origin"));
    }
    let regime =
        closedform::regime(&trace.variant, n).map_err(|_| unsupported("unsupported chip count"))?;
    Ok((regime, n))
}

fn unsupported(check: &'static str, trace: &Trace, reason: &'static str) -> AnalysisError {
    AnalysisError::Unsupported {
        check,
        variant: trace.variant,
        n: trace.initial.total(),
        reason,
    }
}

/// Move instances of a trace. A move past the predicted total for its site
/// has no index from the last move and maps to `None`.
fn instances(trace: &Trace, totals: &FiringCountTable) -> Vec<Option<MoveInstance>> {
    trace
        .moves
        .iter()
        .map(|mv| MoveInstance::from_start(mv.site, mv.fire_index_at_site, totals.get(mv.site)))
        .collect()
}

/// Negative chips never pass `value + m`, positive chips never drop below
/// `value - m`. Covers the plain line of either parity and multiple edges,
/// where the `r` chips sharing a label share the bound.
pub fn check_chip_bounds(trace: &Trace) -> Result<Vec<BoundViolation>, AnalysisError> {
    const CHECK: &str = "chip bounds";
    let (regime, _) = scope(trace, CHECK)?;
    let m = match regime {
        Regime::BaseEven { m } | Regime::BaseOdd { m } | Regime::MultiEdge { m, .. } => m as i64,
        _ => {
            return Err(unsupported(
                CHECK,
                trace,
                "plain line or multiple edges only",
            ))
        }
    };
    let mut out = Vec::new();
    for (step, config) in trace.states()?.iter().enumerate() {
        for (site, chip) in config.iter() {
            let v = chip.value;
            let violation = |kind, bound| BoundViolation {
                step: Some(step),
                chip_id: Some(chip.id.0),
                chip_value: v,
                site,
                kind,
                bound,
                observed: site,
            };
            if v < 0 && site > v + m {
                out.push(violation(BoundKind::ChipUpper, v + m));
            }
            if v > 0 && site < v - m {
                out.push(violation(BoundKind::ChipLower, v - m));
            }
        }
    }
    Ok(out)
}

/// Tracks chips across the square of final moves on the plain line with an
/// even chip count. Just before move `(x, y)`, chip `-y-1` is at or left of
/// `x - y`, and chip `x+1` is at or right of `x - y`.
pub fn check_diamond_tracking(trace: &Trace) -> Result<Vec<BoundViolation>, AnalysisError> {
    const CHECK: &str = "square tracking";
    let (regime, n) = scope(trace, CHECK)?;
    let Regime::BaseEven { m } = regime else {
        return Err(unsupported(
            CHECK,
            trace,
            "plain line with an even chip count only",
        ));
    };
    let totals = closedform::fire_table(&trace.variant, n)?;
    let states = trace.states()?;
    let mut out = Vec::new();
    for (step, mv) in instances(trace, &totals).iter().enumerate() {
        let Some(mv) = mv.filter(|mv| in_diamond(mv, m)) else {
            continue;
        };
        let DiamondCoord { x, y } = DiamondCoord::from_move(&mv);
        let (x, y) = (x as i64, y as i64);
        let before = &states[step];
        for (site, chip) in before.iter() {
            let k = chip.value;
            let violation = |kind, bound| BoundViolation {
                step: Some(step),
                chip_id: Some(chip.id.0),
                chip_value: k,
                site: mv.site,
                kind,
                bound,
                observed: site,
            };
            if k == -y - 1 && site > x + k + 1 {
                out.push(violation(BoundKind::TrackUpper, x + k + 1));
            }
            if k == x + 1 && site < k - 1 - y {
                out.push(violation(BoundKind::TrackLower, k - 1 - y));
            }
        }
    }
    Ok(out)
}

fn floor_half(a: i64) -> i64 {
    a.div_euclid(2)
}

fn ceil_half(a: i64) -> i64 {
    -(-a).div_euclid(2)
}

/// Inclusive position range of a chip labeled `k` with a self-loop at every
/// site and `4m - 1` chips.
pub fn loop_bounds(k: Value, m: i64) -> (i64, i64) {
    match k.signum() {
        1 => (floor_half(k - m), floor_half(k + m)),
        -1 => (ceil_half(k - m), ceil_half(k + m)),
        _ => (ceil_half(-m), floor_half(m)),
    }
}

/// Position ranges for the self-loop line with `4m - 1` chips, plus the
/// rule that when `k + m` (lower) or `m - k` (upper) is even at most one
/// chip labeled `k` sits on that bound at a time.
pub fn check_loop_bounds(trace: &Trace) -> Result<Vec<BoundViolation>, AnalysisError> {
    const CHECK: &str = "loop bounds";
    let (regime, _) = scope(trace, CHECK)?;
    let Regime::LoopsThreeMod4 { m } = regime else {
        return Err(unsupported(
            CHECK,
            trace,
            "self-loop line with 4m - 1 chips only",
        ));
    };
    let m = m as i64;
    let mut out = Vec::new();
    for (step, config) in trace.states()?.iter().enumerate() {
        let mut at_lower: BTreeMap<Value, Vec<(ChipId, Site)>> = BTreeMap::new();
        let mut at_upper: BTreeMap<Value, Vec<(ChipId, Site)>> = BTreeMap::new();
        for (site, chip) in config.iter() {
            let k = chip.value;
            let (lo, hi) = loop_bounds(k, m);
            let violation = |kind, bound| BoundViolation {
                step: Some(step),
                chip_id: Some(chip.id.0),
                chip_value: k,
                site,
                kind,
                bound,
                observed: site,
            };
            if site < lo {
                out.push(violation(BoundKind::LoopLower, lo));
            }
            if site > hi {
                out.push(violation(BoundKind::LoopUpper, hi));
            }
            if site == lo && (k + m) % 2 == 0 {
                at_lower.entry(k).or_default().push((chip.id, site));
            }
            if site == hi && (m - k) % 2 == 0 {
                at_upper.entry(k).or_default().push((chip.id, site));
            }
        }
        for (ties, kind) in [
            (at_lower, BoundKind::LoopLowerTie),
            (at_upper, BoundKind::LoopUpperTie),
        ] {
            for (k, chips) in ties {
                if chips.len() > 1 {
                    out.extend(chips.iter().map(|&(id, site)| BoundViolation {
                        step: Some(step),
                        chip_id: Some(id.0),
                        chip_value: k,
                        site,
                        kind,
                        bound: 1,
                        observed: chips.len() as i64,
                    }));
                }
            }
        }
    }
    Ok(out)
}

/// Progress across the square on the self-loop line with `4m - 1` chips.
/// After the `j`-th square move at site `k <= 0`, at least `j + k + m - 1`
/// chips valued below `k` sit left of `k`; mirrored for `k >= 0`.
pub fn check_diamond_progress(trace: &Trace) -> Result<Vec<BoundViolation>, AnalysisError> {
    const CHECK: &str = "square progress";
    let (regime, n) = scope(trace, CHECK)?;
    let Regime::LoopsThreeMod4 { m } = regime else {
        return Err(unsupported(
            CHECK,
            trace,
            "self-loop line with 4m - 1 chips only",
        ));
    };
    let totals = closedform::fire_table(&trace.variant, n)?;
    let states = trace.states()?;
    let m = m as i64;
    let mut out = Vec::new();
    for (step, mv) in instances(trace, &totals).iter().enumerate() {
        let Some(mv) = mv.filter(|mv| in_diamond(mv, m as u64)) else {
            continue;
        };
        let k = mv.site;
        let square_moves = (m - k.abs()) as u64;
        let j = (mv.occ_from_start - (totals.get(k) - square_moves)) as i64;
        let after = &states[step + 1];
        let mut check = |count: i64, bound: i64, kind| {
            if count < bound {
                out.push(BoundViolation {
                    step: Some(step + 1),
                    chip_id: None,
                    chip_value: k,
                    site: k,
                    kind,
                    bound,
                    observed: count,
                });
            }
        };
        if k <= 0 {
            let count = after.iter().filter(|(s, c)| c.value < k && *s < k).count() as i64;
            check(count, j + k + m - 1, BoundKind::ProgressLeft);
        }
        if k >= 0 {
            let count = after.iter().filter(|(s, c)| c.value > k && *s > k).count() as i64;
            check(count, j - k + m - 1, BoundKind::ProgressRight);
        }
    }
    Ok(out)
}

/// Where one chip first meets the square of final moves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiamondEntry {
    pub value: Value,
    pub first_move: MoveInstance,
    pub site: Site,
}

/// Every chip mapped to the site of the first square move it is present
/// for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiamondConfigurationView {
    pub variant: Variant,
    pub n: usize,
    pub m: u64,
    pub entries: BTreeMap<ChipId, DiamondEntry>,
}

impl DiamondConfigurationView {
    /// Chips placed at their entry sites.
    pub fn configuration(&self) -> LabeledConfiguration {
        LabeledConfiguration::from_chips(
            self.entries
                .iter()
                .map(|(&id, e)| (e.site, crate::engine::Chip { id, value: e.value })),
        )
        .expect("ids are map keys")
    }

    pub fn unlabeled(&self) -> BTreeMap<Site, usize> {
        let mut out = BTreeMap::new();
        for e in self.entries.values() {
            *out.entry(e.site).or_insert(0) += 1;
        }
        out
    }
}

/// Builds the entry configuration of a complete trace.
pub fn diamond_configuration(trace: &Trace) -> Result<DiamondConfigurationView, AnalysisError> {
    const CHECK: &str = "square entry configuration";
    let (regime, n) = scope(trace, CHECK)?;
    let m = regime
        .diamond_size()
        .ok_or_else(|| unsupported(CHECK, trace, "variant has no square of final moves"))?;
    if !enabled_sites(trace.terminal(), &trace.variant).is_empty() {
        return Err(AnalysisError::Incomplete);
    }
    let totals = closedform::fire_table(&trace.variant, n)?;
    let states = trace.states()?;
    let mut entries = BTreeMap::new();
    for (step, mv) in instances(trace, &totals).iter().enumerate() {
        let Some(mv) = mv.filter(|mv| in_diamond(mv, m)) else {
            continue;
        };
        for chip in states[step].chips_at(mv.site) {
            entries.entry(chip.id).or_insert(DiamondEntry {
                value: chip.value,
                first_move: mv,
                site: mv.site,
            });
        }
    }
    if entries.len() != trace.initial.total() {
        return Err(AnalysisError::Incomplete);
    }
    Ok(DiamondConfigurationView {
        variant: trace.variant,
        n,
        m,
        entries,
    })
}

/// Count bound on the entry configuration for the self-loop line with
/// `4m - 1` chips: for `-m-1 <= k <= 0` and `0 <= l <= k+m-1`, at most
/// `k + m - l - 1` chips valued below `k` enter right of `l`. Mirrored for
/// chips valued above `k` entering left of `-l`.
pub fn check_diamond_entry(
    view: &DiamondConfigurationView,
) -> Result<Vec<BoundViolation>, AnalysisError> {
    let Ok(Regime::LoopsThreeMod4 { m }) = closedform::regime(&view.variant, view.n) else {
        return Err(AnalysisError::Unsupported {
            check: "square entry bound",
            variant: view.variant,
            n: view.n,
            reason: "self-loop line with 4m - 1 chips only",
        });
    };
    let m = m as i64;
    let mut out = Vec::new();
    for k in -m - 1..=0 {
        for l in 0..=k + m - 1 {
            let count = view
                .entries
                .values()
                .filter(|e| e.value < k && e.site > l)
                .count() as i64;
            let bound = k + m - l - 1;
            if count > bound {
                out.push(BoundViolation {
                    step: None,
                    chip_id: None,
                    chip_value: k,
                    site: l,
                    kind: BoundKind::EntryRight,
                    bound,
                    observed: count,
                });
            }
            let count = view
                .entries
                .values()
                .filter(|e| e.value > -k && e.site < -l)
                .count() as i64;
            if count > bound {
                out.push(BoundViolation {
                    step: None,
                    chip_id: None,
                    chip_value: -k,
                    site: -l,
                    kind: BoundKind::EntryLeft,
                    bound,
                    observed: count,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{standard_initial, Runner, Strategy};

    fn run(variant: Variant, n: usize, seed: u64) -> Trace {
        let start = standard_initial(&variant, n, Preset::Origin).unwrap();
        Runner::new(variant, &Strategy::Random)
            .seed(seed)
            .run(&start)
            .unwrap()
    }

    #[test]
    fn sortedness_examples() {
        let sorted = LabeledConfiguration::from_values([
            (-2, vec![-2]),
            (-1, vec![-1]),
            (1, vec![1]),
            (2, vec![2]),
        ]);
        assert!(is_weakly_sorted(&sorted));
        let unsorted =
            LabeledConfiguration::from_values([(-1, vec![1]), (0, vec![3]), (1, vec![2])]);
        assert!(!is_weakly_sorted(&unsorted));
        assert!(is_weakly_sorted(&LabeledConfiguration::new()));
        let ties = LabeledConfiguration::from_values([(-1, vec![-1, 0]), (0, vec![0, 1])]);
        assert!(is_weakly_sorted(&ties));
    }

    #[test]
    fn loop_bound_values() {
        assert_eq!(loop_bounds(1, 3), (-1, 2));
        assert_eq!(loop_bounds(0, 1), (0, 0));
        assert_eq!(loop_bounds(-1, 1), (-1, 0));
        assert_eq!(loop_bounds(-3, 3), (-3, 0));
    }

    #[test]
    fn checkers_clean_on_random_runs() {
        for seed in 0..20 {
            assert!(check_chip_bounds(&run(Variant::Base, 10, seed))
                .unwrap()
                .is_empty());
            assert!(check_diamond_tracking(&run(Variant::Base, 10, seed))
                .unwrap()
                .is_empty());
            let loops = run(Variant::LoopsEverywhere, 11, seed);
            assert!(check_loop_bounds(&loops).unwrap().is_empty());
            assert!(check_diamond_progress(&loops).unwrap().is_empty());
            let view = diamond_configuration(&loops).unwrap();
            assert!(check_diamond_entry(&view).unwrap().is_empty());
        }
    }

    #[test]
    fn chip_bounds_hold_for_odd_counts() {
        for seed in 0..20 {
            assert!(check_chip_bounds(&run(Variant::Base, 9, seed))
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn out_of_scope_is_an_error() {
        let loops = run(Variant::LoopsEverywhere, 7, 1);
        assert!(check_chip_bounds(&loops).is_err());
        assert!(check_diamond_tracking(&run(Variant::Base, 9, 1)).is_err());
        assert!(check_loop_bounds(&run(Variant::Base, 8, 1)).is_err());
        assert!(check_diamond_progress(&run(Variant::LoopsEverywhere, 9, 1)).is_err());
        let exp = run(Variant::Exponential { t: 1 }, 8, 1);
        assert!(diamond_configuration(&exp).is_err());
        let view = diamond_configuration(&run(Variant::Base, 8, 1)).unwrap();
        assert!(check_diamond_entry(&view).is_err());
    }

    #[test]
    fn entry_configuration_shapes() {
        let two = diamond_configuration(&run(Variant::Base, 2, 0)).unwrap();
        assert_eq!(two.unlabeled(), BTreeMap::from([(0, 2)]));
        for seed in 0..5 {
            let seven = diamond_configuration(&run(Variant::LoopsEverywhere, 7, seed)).unwrap();
            assert_eq!(seven.unlabeled(), BTreeMap::from([(-1, 2), (0, 3), (1, 2)]));
            let eleven = diamond_configuration(&run(Variant::LoopsEverywhere, 11, seed)).unwrap();
            assert_eq!(
                eleven.unlabeled(),
                BTreeMap::from([(-2, 2), (-1, 2), (0, 3), (1, 2), (2, 2)])
            );
        }
    }

    #[test]
    fn planted_violation_is_reported() {
        // Chip -2 placed one site right of the furthest it may reach.
        let start = LabeledConfiguration::from_values([(1, vec![-2]), (0, vec![-1, 1, 2])]);
        let trace =
            Trace::from_moves(Variant::Base, Preset::Origin, "scripted", 0, start, &[]).unwrap();
        let found = check_chip_bounds(&trace).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, BoundKind::ChipUpper);
        assert_eq!((found[0].bound, found[0].observed), (0, 1));
    }
}
