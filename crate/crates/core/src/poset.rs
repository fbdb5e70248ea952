//! Reachable fire-count vectors and the order in which moves must happen.
//!
//! Enabling depends only on chip counts, and chip counts are a linear
//! function of how often each site has fired. So the unlabeled process is
//! captured exactly by the set of fire-count vectors reachable from the
//! start, and "move `a` must happen before move `b`" means that no reachable
//! vector has `b` done while `a` is still pending.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::closedform::{self, FiringCountTable, OracleError};
use crate::engine::{Site, Variant};

/// Upper bound on stored states unless the caller picks another.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

#[derive(Debug, Error)]
pub enum PosetError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("state cap {cap} exceeded while expanding grade {grade} ({states} states stored)")]
    CapExceeded {
        cap: usize,
        grade: usize,
        states: usize,
    },
    #[error("site {site} fires {fires} times, more than the state encoding allows")]
    TooManyFires { site: Site, fires: u64 },
    #[error("fire counts left the predicted range: {0}")]
    OracleMismatch(String),
    #[error("{0} has no square of final moves to check")]
    NoDiamond(Variant),
    #[error("the exponential check needs an exponential variant, got {0}")]
    NotExponential(Variant),
}

/// One firing of a site, indexed both from the first and from the last
/// firing there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MoveInstance {
    pub site: Site,
    pub occ_from_start: u64,
    pub occ_from_last: u64,
}

impl MoveInstance {
    /// The `occ_from_start`-th firing of `site` when it fires `total` times.
    pub fn from_start(site: Site, occ_from_start: u64, total: u64) -> Option<Self> {
        (1..=total).contains(&occ_from_start).then_some(Self {
            site,
            occ_from_start,
            occ_from_last: total - occ_from_start + 1,
        })
    }

    /// The `occ_from_last`-th from last firing of `site`.
    pub fn from_last(site: Site, occ_from_last: u64, total: u64) -> Option<Self> {
        (1..=total).contains(&occ_from_last).then(|| Self {
            site,
            occ_from_start: total - occ_from_last + 1,
            occ_from_last,
        })
    }

    /// Node name used in DOT output and reports.
    pub fn label(&self) -> String {
        format!("s{}_j{}", self.site, self.occ_from_last)
    }
}

/// Coordinates on the square of final moves: `(0, 0)` is the very last
/// firing at the origin, `x` grows towards the right-hand sites and `y`
/// towards the left-hand ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DiamondCoord {
    pub x: u64,
    pub y: u64,
}

impl DiamondCoord {
    pub fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }

    pub fn site(&self) -> Site {
        self.x as Site - self.y as Site
    }

    pub fn occ_from_last(&self) -> u64 {
        self.x.min(self.y) + 1
    }

    /// The move at these coordinates, if that site fires often enough.
    pub fn to_move(&self, fires: &FiringCountTable) -> Option<MoveInstance> {
        MoveInstance::from_last(self.site(), self.occ_from_last(), fires.get(self.site()))
    }

    /// Inverse of [`DiamondCoord::to_move`].
    pub fn from_move(mv: &MoveInstance) -> Self {
        let j = mv.occ_from_last - 1;
        if mv.site >= 0 {
            Self::new(mv.site as u64 + j, j)
        } else {
            Self::new(j, j + mv.site.unsigned_abs())
        }
    }

    /// Whether these coordinates lie on the `m` by `m` square.
    pub fn in_diamond(&self, m: u64) -> bool {
        self.x < m && self.y < m
    }
}

/// Whether a move belongs to the square of final moves of side `m`.
pub fn in_diamond(mv: &MoveInstance, m: u64) -> bool {
    mv.occ_from_last + mv.site.unsigned_abs() <= m
}

/// Fires performed so far at each site of a window.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FireCountState {
    /// Site of `counts[0]`.
    pub lo: Site,
    pub counts: Vec<u64>,
}

impl FireCountState {
    pub fn get(&self, site: Site) -> u64 {
        usize::try_from(site - self.lo)
            .ok()
            .and_then(|i| self.counts.get(i))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Chips at `site` once every site has fired as often as `state` says.
pub fn chips_at(
    state: &FireCountState,
    site: Site,
    variant: &Variant,
    initial: &BTreeMap<Site, usize>,
) -> i64 {
    let c = |s: Site| state.get(s) as i64;
    initial.get(&site).copied().unwrap_or(0) as i64
        + variant.right_mult(site - 1) as i64 * c(site - 1)
        + variant.left_mult(site + 1) as i64 * c(site + 1)
        - (variant.left_mult(site) + variant.right_mult(site)) as i64 * c(site)
}

/// Every fire-count vector reachable from `n` chips at the origin.
///
/// States are stored back to back in one byte buffer, ordered by total fires.
pub struct ReachableSet {
    variant: Variant,
    n: usize,
    lo: Site,
    totals: FiringCountTable,
    width: usize,
    data: Vec<u8>,
    grade_starts: Vec<usize>,
}

impl ReachableSet {
    /// Breadth-first expansion by total fires. Only the next grade is
    /// deduplicated, since every successor has exactly one more fire.
    pub fn build(variant: Variant, n: usize, state_cap: usize) -> Result<Self, PosetError> {
        let totals = closedform::fire_table(&variant, n)?;
        for (&site, &fires) in &totals.0 {
            if fires > u64::from(u8::MAX) {
                return Err(PosetError::TooManyFires { site, fires });
            }
        }
        let (lo, hi) = totals.window().unwrap_or((0, -1));
        let width = (hi - lo + 1).max(0) as usize;
        let thresholds: Vec<i64> = (0..width)
            .map(|i| variant.threshold(lo + i as Site) as i64)
            .collect();
        let left: Vec<i64> = (lo - 1..=hi + 1)
            .map(|s| variant.left_mult(s) as i64)
            .collect();
        let right: Vec<i64> = (lo - 1..=hi + 1)
            .map(|s| variant.right_mult(s) as i64)
            .collect();
        let start: Vec<i64> = (lo..=hi)
            .map(|s| if s == 0 { n as i64 } else { 0 })
            .collect();
        // Chips at window index i; neighbours outside the window never fire.
        let chips = |c: &[u8], i: usize| -> i64 {
            let at = |j: isize| -> i64 {
                if j < 0 || j as usize >= width {
                    0
                } else {
                    i64::from(c[j as usize])
                }
            };
            let i_ = i as isize;
            // left/right arrays are shifted by one (index 0 is site lo-1).
            start[i] + right[i] * at(i_ - 1) + left[i + 2] * at(i_ + 1)
                - (left[i + 1] + right[i + 1]) * at(i_)
        };

        let mut data = vec![0u8; width];
        let mut grade_starts = vec![0];
        let mut frontier_start = 0;
        let mut grade = 0;
        loop {
            let frontier_end = data.len();
            let mut next: HashSet<Vec<u8>> = HashSet::new();
            let mut order: Vec<Vec<u8>> = Vec::new();
            for off in (frontier_start..frontier_end).step_by(width.max(1)) {
                if width == 0 {
                    break;
                }
                let c = &data[off..off + width];
                for (edge, site) in [(0usize, lo - 1), (width - 1, hi + 1)] {
                    // Chips pushed just outside the window by its edge site.
                    let outside = if site < lo {
                        variant.left_mult(lo) as i64 * i64::from(c[edge])
                    } else {
                        variant.right_mult(hi) as i64 * i64::from(c[edge])
                    };
                    if outside >= variant.threshold(site) as i64 {
                        return Err(PosetError::OracleMismatch(format!(
                            "site {site} becomes enabled but is predicted never to fire"
                        )));
                    }
                }
                for i in 0..width {
                    if chips(c, i) >= thresholds[i] {
                        let mut s = c.to_vec();
                        if u64::from(s[i]) >= totals.get(lo + i as Site) {
                            return Err(PosetError::OracleMismatch(format!(
                                "site {} can fire more than {} times",
                                lo + i as Site,
                                s[i]
                            )));
                        }
                        s[i] += 1;
                        if !next.contains(&s) {
                            next.insert(s.clone());
                            order.push(s);
                        }
                    }
                }
                let stored = data.len() / width.max(1) + order.len();
                if stored > state_cap {
                    return Err(PosetError::CapExceeded {
                        cap: state_cap,
                        grade: grade + 1,
                        states: stored,
                    });
                }
            }
            if order.is_empty() {
                break;
            }
            order.sort_unstable();
            grade_starts.push(data.len());
            for s in order {
                data.extend_from_slice(&s);
            }
            frontier_start = frontier_end;
            grade += 1;
        }
        grade_starts.push(data.len());
        Ok(Self {
            variant,
            n,
            lo,
            totals,
            width,
            data,
            grade_starts,
        })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn totals(&self) -> &FiringCountTable {
        &self.totals
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of distinct total-fire levels, the empty one included.
    pub fn grades(&self) -> usize {
        self.grade_starts.len() - 1
    }

    fn raw(&self, i: usize) -> &[u8] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn raw_states(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.len()).map(move |i| self.raw(i))
    }

    pub fn state(&self, i: usize) -> FireCountState {
        FireCountState {
            lo: self.lo,
            counts: self.raw(i).iter().map(|&c| u64::from(c)).collect(),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = FireCountState> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    pub fn contains(&self, state: &FireCountState) -> bool {
        let mut want = vec![0u8; self.width];
        for (k, &c) in state.counts.iter().enumerate() {
            let site = state.lo + k as Site;
            match self.index(site) {
                Some(i) => match u8::try_from(c) {
                    Ok(c) => want[i] = c,
                    Err(_) => return false,
                },
                None if c != 0 => return false,
                None => {}
            }
        }
        let grade: u64 = state.total();
        let Some(range) = self.grade_range(grade as usize) else {
            return false;
        };
        range.map(|i| self.raw(i)).any(|s| s == want.as_slice())
    }

    fn grade_range(&self, grade: usize) -> Option<std::ops::Range<usize>> {
        let w = self.width.max(1);
        let (&a, &b) = (
            self.grade_starts.get(grade)?,
            self.grade_starts.get(grade + 1)?,
        );
        if self.width == 0 {
            return (grade == 0).then_some(0..1);
        }
        Some(a / w..b / w)
    }

    fn index(&self, site: Site) -> Option<usize> {
        let i = usize::try_from(site - self.lo).ok()?;
        (i < self.width).then_some(i)
    }

    fn count(&self, state: &[u8], site: Site) -> u64 {
        self.index(site).map_or(0, |i| u64::from(state[i]))
    }

    fn initial(&self) -> BTreeMap<Site, usize> {
        BTreeMap::from([(0, self.n)])
    }

    /// Chips at `site` in stored state `i`.
    pub fn chips_in(&self, i: usize, site: Site) -> i64 {
        chips_at(&self.state(i), site, &self.variant, &self.initial())
    }

    /// States with no enabled site.
    pub fn terminal_states(&self) -> Vec<FireCountState> {
        let initial = self.initial();
        self.states()
            .filter(|s| {
                let (lo, hi) = (self.lo - 1, self.lo + self.width as Site);
                (lo..=hi).all(|site| {
                    chips_at(s, site, &self.variant, &initial) < self.variant.threshold(site) as i64
                })
            })
            .collect()
    }

    /// `a` must precede `b`: no state has `b` done and `a` pending.
    /// Direct scan over every stored state.
    pub fn must_precede_naive(&self, a: &MoveInstance, b: &MoveInstance) -> bool {
        !self.raw_states().any(|s| {
            self.count(s, b.site) >= b.occ_from_start && self.count(s, a.site) < a.occ_from_start
        })
    }

    /// Lookup table answering [`ReachableSet::must_precede_naive`] in constant
    /// time.
    pub fn precedence_table(&self) -> PrecedenceTable {
        let w = self.width;
        let depth: Vec<usize> = (0..w)
            .map(|i| self.totals.get(self.lo + i as Site) as usize + 1)
            .collect();
        // min_count[sb][v][sa]: least c[sa] over states with c[sb] >= v.
        let mut min_count: Vec<Vec<Vec<u8>>> =
            depth.iter().map(|&d| vec![vec![u8::MAX; w]; d]).collect();
        for s in self.raw_states() {
            for sb in 0..w {
                let row = &mut min_count[sb][s[sb] as usize];
                for sa in 0..w {
                    row[sa] = row[sa].min(s[sa]);
                }
            }
        }
        for per_site in &mut min_count {
            for v in (0..per_site.len().saturating_sub(1)).rev() {
                let (head, tail) = per_site.split_at_mut(v + 1);
                for (a, b) in head[v].iter_mut().zip(&tail[0]) {
                    *a = (*a).min(*b);
                }
            }
        }
        PrecedenceTable {
            lo: self.lo,
            min_count,
        }
    }
}

/// Precomputed answers to "must `a` precede `b`".
pub struct PrecedenceTable {
    lo: Site,
    min_count: Vec<Vec<Vec<u8>>>,
}

impl PrecedenceTable {
    pub fn must_precede(&self, a: &MoveInstance, b: &MoveInstance) -> bool {
        let idx = |s: Site| {
            usize::try_from(s - self.lo)
                .ok()
                .filter(|&i| i < self.min_count.len())
        };
        let (Some(ia), Some(ib)) = (idx(a.site), idx(b.site)) else {
            // A site outside the window never fires, so no such move exists.
            return false;
        };
        let Some(row) = self.min_count[ib].get(b.occ_from_start as usize) else {
            return false;
        };
        u64::from(row[ia]) >= a.occ_from_start
    }
}

/// Every move instance with the full "must happen before" relation and its
/// covering pairs.
#[derive(Clone, Debug)]
pub struct FiringPoset {
    pub variant: Variant,
    pub n: usize,
    pub nodes: Vec<MoveInstance>,
    /// `relation[a][b]`: node `a` must happen before node `b`.
    relation: Vec<Vec<bool>>,
    /// Covering pairs `(earlier, later)`.
    pub covers: Vec<(usize, usize)>,
    /// Side of the square of final moves, where the variant has one.
    pub diamond_size: Option<u64>,
}

impl FiringPoset {
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.relation[a][b]
    }

    pub fn index_of(&self, site: Site, occ_from_start: u64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|m| m.site == site && m.occ_from_start == occ_from_start)
    }

    pub fn index_of_move(&self, mv: &MoveInstance) -> Option<usize> {
        self.index_of(mv.site, mv.occ_from_start)
    }

    /// All ordered pairs of the relation.
    pub fn relation_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.nodes.len();
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.relation[a][b])
            .collect()
    }

    pub fn is_diamond_node(&self, i: usize) -> bool {
        self.diamond_size
            .is_some_and(|m| in_diamond(&self.nodes[i], m))
    }

    /// Transitive closure of the covering pairs.
    pub fn closure_of_covers(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for &(a, b) in &self.covers {
            reach[a][b] = true;
        }
        for k in 0..n {
            let via = reach[k].clone();
            for row in reach.iter_mut() {
                if row[k] {
                    for (cell, &step) in row.iter_mut().zip(&via) {
                        *cell |= step;
                    }
                }
            }
        }
        reach
    }

    pub fn relation_matrix(&self) -> &[Vec<bool>] {
        &self.relation
    }
}

/// Builds the poset of every move in the run from its reachable set.
pub fn build_poset(reach: &ReachableSet) -> FiringPoset {
    let nodes: Vec<MoveInstance> = reach
        .totals()
        .0
        .iter()
        .flat_map(|(&site, &total)| {
            (1..=total).filter_map(move |j| MoveInstance::from_start(site, j, total))
        })
        .collect();
    let table = reach.precedence_table();
    let n = nodes.len();
    let relation: Vec<Vec<bool>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| a != b && table.must_precede(&nodes[a], &nodes[b]))
                .collect()
        })
        .collect();
    let covers = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| relation[a][b] && !(0..n).any(|c| relation[a][c] && relation[c][b]))
        .collect();
    let diamond_size = closedform::regime(reach.variant(), reach.n())
        .ok()
        .and_then(|r| r.diamond_size());
    FiringPoset {
        variant: *reach.variant(),
        n: reach.n(),
        nodes,
        relation,
        covers,
        diamond_size,
    }
}

/// A failed structural check at one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeViolation {
    pub node: String,
    pub clause: String,
    pub detail: String,
    /// Largest chip count seen at the node's site when it was about to fire,
    /// for chip-count clauses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub present: Option<i64>,
}

/// Result of a structural check over the poset and its reachable set.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub violations: Vec<NodeViolation>,
    pub states_explored: usize,
    /// Reading of move indices the order relations were verified under.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indexing: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holds_from_start: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holds_from_last: Option<bool>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `mv` fires with exactly the threshold number of chips in
/// every reachable state where it is the next move at its site.
fn exact_threshold_violation(reach: &ReachableSet, mv: &MoveInstance) -> Option<NodeViolation> {
    let need = reach.variant().threshold(mv.site) as i64;
    let mut worst: Option<(i64, usize)> = None;
    let mut offending = 0usize;
    for i in 0..reach.len() {
        if reach.count(reach.raw(i), mv.site) + 1 != mv.occ_from_start {
            continue;
        }
        let present = reach.chips_in(i, mv.site);
        if present > need {
            offending += 1;
            if worst.is_none_or(|(p, _)| present > p) {
                worst = Some((present, i));
            }
        }
    }
    worst.map(|(present, i)| NodeViolation {
        node: mv.label(),
        clause: "exact_threshold".into(),
        detail: format!(
            "fires with {present} chips present (threshold {need}) in {offending} reachable states, e.g. fire counts {:?}",
            reach.state(i).counts
        ),
        present: Some(present),
    })
}

fn precedence_violation(
    table: &PrecedenceTable,
    before: &MoveInstance,
    after: &MoveInstance,
) -> Option<NodeViolation> {
    (!table.must_precede(before, after)).then(|| NodeViolation {
        node: after.label(),
        clause: "precedence".into(),
        detail: format!(
            "{} is not forced to happen before {}",
            before.label(),
            after.label()
        ),
        present: None,
    })
}

/// Checks the square of final moves: every move `(x, y)` on it happens after
/// `(x+1, y)` and `(x, y+1)` whenever those moves exist, and fires with
/// exactly the threshold number of chips present.
pub fn check_grid_structure(
    poset: &FiringPoset,
    reach: &ReachableSet,
) -> Result<CheckReport, PosetError> {
    let m = poset
        .diamond_size
        .ok_or(PosetError::NoDiamond(poset.variant))?;
    let table = reach.precedence_table();
    let totals = reach.totals();
    let mut violations = Vec::new();
    for x in 0..m {
        for y in 0..m {
            let here = DiamondCoord::new(x, y)
                .to_move(totals)
                .expect("every square coordinate is a move");
            for next in [DiamondCoord::new(x + 1, y), DiamondCoord::new(x, y + 1)] {
                if let Some(before) = next.to_move(totals) {
                    violations.extend(precedence_violation(&table, &before, &here));
                }
            }
            violations.extend(exact_threshold_violation(reach, &here));
        }
    }
    Ok(CheckReport {
        check: "grid".into(),
        violations,
        states_explored: reach.len(),
        indexing: None,
        holds_from_start: None,
        holds_from_last: None,
    })
}

/// Checks the interleaving of neighbouring sites under exponential edge
/// bundles: the `j`-th move at `k` falls between moves `j+1` and `j+2` at the
/// neighbour nearer the origin. Move indices are tried both from the start
/// and from the last move; the report states which reading holds. Every move
/// except the first at each site in `[-t, t]` must also fire with exactly the
/// threshold number of chips.
pub fn check_exponential_grid(
    poset: &FiringPoset,
    reach: &ReachableSet,
) -> Result<CheckReport, PosetError> {
    let Variant::Exponential { t } = poset.variant else {
        return Err(PosetError::NotExponential(poset.variant));
    };
    let t = i64::from(t);
    let table = reach.precedence_table();
    let totals = reach.totals();

    let sandwich = |from_last: bool| -> Vec<NodeViolation> {
        let mut out = Vec::new();
        for k in (-t - 1..=t + 1).filter(|&k| k != 0) {
            let inner = k - k.signum();
            let (fk, fi) = (totals.get(k), totals.get(inner));
            for j in 1..=fk {
                let mv = |site: Site, idx: u64, total: u64| {
                    if from_last {
                        MoveInstance::from_last(site, idx, total)
                    } else {
                        MoveInstance::from_start(site, idx, total)
                    }
                };
                let (Some(here), Some(a), Some(b)) =
                    (mv(k, j, fk), mv(inner, j + 1, fi), mv(inner, j + 2, fi))
                else {
                    out.push(NodeViolation {
                        node: format!("s{k}_j{j}"),
                        clause: "sandwich".into(),
                        detail: "neighbouring moves missing".into(),
                        present: None,
                    });
                    continue;
                };
                // From the last move, index j+2 comes before index j+1.
                let (first, last) = if from_last { (b, a) } else { (a, b) };
                out.extend(precedence_violation(&table, &first, &here));
                out.extend(precedence_violation(&table, &here, &last));
            }
        }
        out
    };
    let from_start = sandwich(false);
    let from_last = sandwich(true);
    let (indexing, mut violations) = match (from_start.is_empty(), from_last.is_empty()) {
        (true, _) => ("from_start", from_start.clone()),
        (false, true) => ("from_last", from_last.clone()),
        (false, false) => ("neither", from_start.clone()),
    };

    for (&site, &total) in &totals.0 {
        let first = if site.abs() <= t { 2 } else { 1 };
        for j in first..=total {
            let mv = MoveInstance::from_start(site, j, total).expect("index within total");
            violations.extend(exact_threshold_violation(reach, &mv));
        }
    }
    Ok(CheckReport {
        check: "expgrid".into(),
        violations,
        states_explored: reach.len(),
        indexing: Some(indexing.into()),
        holds_from_start: Some(from_start.is_empty()),
        holds_from_last: Some(from_last.is_empty()),
    })
}

/// Graphviz rendering of the covering pairs, earlier move to later move.
pub fn export_dot(poset: &FiringPoset) -> String {
    let mut out = String::from("digraph firing_poset {\n  rankdir=BT;\n");
    for (i, node) in poset.nodes.iter().enumerate() {
        let group = if poset.is_diamond_node(i) {
            ", group=\"diamond\""
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}_{}\"{group}];",
            node.label(),
            node.site,
            node.occ_from_last
        );
    }
    for &(a, b) in &poset.covers {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\";",
            poset.nodes[a].label(),
            poset.nodes[b].label()
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reach(variant: Variant, n: usize) -> ReachableSet {
        ReachableSet::build(variant, n, DEFAULT_STATE_CAP).unwrap()
    }

    #[test]
    fn small_reachable_sets() {
        assert_eq!(reach(Variant::Base, 2).len(), 2);
        // 0, 00, then -1 and 1 in either order, then the last origin fire.
        assert_eq!(reach(Variant::Base, 4).len(), 7);
        assert_eq!(reach(Variant::Base, 0).len(), 1);
    }

    #[test]
    fn chips_at_examples() {
        let initial = BTreeMap::from([(0, 10)]);
        let zero = FireCountState {
            lo: -4,
            counts: vec![0; 9],
        };
        assert_eq!(chips_at(&zero, 0, &Variant::Base, &initial), 10);
        assert_eq!(chips_at(&zero, 1, &Variant::Base, &initial), 0);
        let mut one = zero.clone();
        one.counts[4] = 1;
        assert_eq!(chips_at(&one, 0, &Variant::Base, &initial), 8);
        assert_eq!(chips_at(&one, -1, &Variant::Base, &initial), 1);
        assert_eq!(chips_at(&one, 1, &Variant::Base, &initial), 1);
    }

    #[test]
    fn single_terminal_is_full_counts() {
        for (variant, n) in [
            (Variant::Base, 8),
            (Variant::LoopsEverywhere, 7),
            (Variant::Exponential { t: 1 }, 8),
        ] {
            let r = reach(variant, n);
            let terminals = r.terminal_states();
            assert_eq!(terminals.len(), 1);
            let full = closedform::fire_table(&variant, n).unwrap();
            for (&site, &f) in &full.0 {
                assert_eq!(terminals[0].get(site), f);
            }
        }
    }

    #[test]
    fn table_matches_naive_scan() {
        let r = reach(Variant::Base, 8);
        let poset = build_poset(&r);
        let table = r.precedence_table();
        for a in &poset.nodes {
            for b in &poset.nodes {
                if a != b {
                    assert_eq!(
                        table.must_precede(a, b),
                        r.must_precede_naive(a, b),
                        "{a:?} {b:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn precedence_examples() {
        let r = reach(Variant::Base, 10);
        let t = r.totals().clone();
        let table = r.precedence_table();
        let last = |s: Site| MoveInstance::from_last(s, 1, t.get(s)).unwrap();
        let first = |s: Site| MoveInstance::from_start(s, 1, t.get(s)).unwrap();
        assert!(table.must_precede(&last(1), &last(0)));
        assert!(table.must_precede(
            &first(0),
            &MoveInstance::from_start(0, 2, t.get(0)).unwrap()
        ));
        assert!(!table.must_precede(&first(4), &first(-4)));
        assert!(!table.must_precede(&first(-4), &first(4)));
    }

    #[test]
    fn poset_sizes() {
        let p2 = build_poset(&reach(Variant::Base, 2));
        assert_eq!(p2.nodes.len(), 1);
        assert!(p2.relation_pairs().is_empty());
        let p4 = build_poset(&reach(Variant::Base, 4));
        assert_eq!(p4.nodes.len(), 5);
    }

    #[test]
    fn relation_is_transitive_and_covers_regenerate_it() {
        let p = build_poset(&reach(Variant::Base, 8));
        let rel = p.relation_matrix();
        let n = p.nodes.len();
        for a in 0..n {
            assert!(!rel[a][a]);
            for b in 0..n {
                for c in 0..n {
                    if rel[a][b] && rel[b][c] {
                        assert!(rel[a][c]);
                    }
                }
            }
        }
        assert_eq!(p.closure_of_covers(), rel.to_vec());
    }

    #[test]
    fn diamond_coordinates_round_trip() {
        let t = closedform::fire_table(&Variant::Base, 10).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for x in 0..5 {
            for y in 0..5 {
                let c = DiamondCoord::new(x, y);
                let mv = c.to_move(&t).unwrap();
                assert!(in_diamond(&mv, 5));
                assert_eq!(DiamondCoord::from_move(&mv), c);
                seen.insert((mv.site, mv.occ_from_last));
            }
        }
        assert_eq!(seen.len(), 25);
        assert_eq!(
            DiamondCoord::new(4, 4).to_move(&t).unwrap().label(),
            "s0_j5"
        );
    }

    #[test]
    fn grid_passes_for_even_base() {
        for n in [4, 6, 8] {
            let r = reach(Variant::Base, n);
            let report = check_grid_structure(&build_poset(&r), &r).unwrap();
            assert!(report.passed(), "n={n}: {:?}", report.violations);
        }
    }

    #[test]
    fn grid_rejects_exponential() {
        let r = reach(Variant::Exponential { t: 1 }, 8);
        assert!(check_grid_structure(&build_poset(&r), &r).is_err());
    }

    #[test]
    fn exponential_t0_is_base_four() {
        let r = reach(Variant::Exponential { t: 0 }, 4);
        let report = check_exponential_grid(&build_poset(&r), &r).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert_eq!(r.len(), reach(Variant::Base, 4).len());
    }

    #[test]
    fn dot_for_small_posets() {
        let dot = export_dot(&build_poset(&reach(Variant::Base, 2)));
        assert!(dot.contains("\"s0_j1\""));
        assert!(!dot.contains("->"));
        let p4 = build_poset(&reach(Variant::Base, 4));
        let dot4 = export_dot(&p4);
        assert_eq!(dot4.matches("->").count(), 5);
        assert_eq!(dot4.matches("group=\"diamond\"").count(), 4);
        let square_edges = p4
            .covers
            .iter()
            .filter(|&&(a, b)| p4.is_diamond_node(a) && p4.is_diamond_node(b))
            .count();
        assert_eq!(square_edges, 4);
    }

    #[test]
    fn cap_is_reported() {
        match ReachableSet::build(Variant::Base, 10, 50) {
            Err(PosetError::CapExceeded { grade, .. }) => assert!(grade > 0),
            other => panic!("expected cap error, got {:?}", other.map(|r| r.len())),
        }
    }
}
