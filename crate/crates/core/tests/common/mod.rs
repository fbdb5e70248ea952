//! Reference computations for the integration tests, written independently
//! of the library's own formulas and search code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chipfire::engine::{apply_move, Move};
use chipfire::{ChipId, LabeledConfiguration, Site, Trace, Value, Variant};
use itertools::Itertools;

/// `(left, loop, right)` edge counts at `site`, straight from the variant
/// definitions.
pub fn mults(variant: &Variant, site: Site) -> (i64, i64, i64) {
    match *variant {
        Variant::Base => (1, 0, 1),
        Variant::MultiEdge { r } => (r as i64, 0, r as i64),
        Variant::OriginLoops { s } => (1, if site == 0 { s as i64 } else { 0 }, 1),
        Variant::LoopsEverywhere => (1, 1, 1),
        Variant::LoopsAndEdges { r } => (r as i64, r as i64, r as i64),
        Variant::Exponential { t } => {
            let t = t as i64;
            // Edge between k and k+1 for k >= 0 carries 2^(t-k) when k <= t;
            // mirrored edge between -k and -k-1.
            let edge = |a: Site, b: Site| -> i64 {
                let k = a.min(b);
                let k = if k >= 0 { k } else { -(k + 1) };
                if k <= t {
                    1 << (t - k)
                } else {
                    1
                }
            };
            (edge(site - 1, site), 0, edge(site, site + 1))
        }
    }
}

pub fn threshold(variant: &Variant, site: Site) -> i64 {
    let (l, o, r) = mults(variant, site);
    l + o + r
}

fn choose2(x: i64) -> u64 {
    (x * (x - 1) / 2).max(0) as u64
}

/// Fires per site on the plain line with `2m` (or `2m+1`) chips.
pub fn plain_fires(m: i64, k: Site) -> u64 {
    if k.abs() <= m {
        choose2(m - k.abs() + 1)
    } else {
        0
    }
}

/// Fires per site with a self-loop everywhere and `4m - 1` chips.
pub fn loop_fires(m: i64, k: Site) -> u64 {
    let d = (m - k.abs()).max(0);
    (d * d) as u64
}

/// Fires per site under exponential bundles with `2^(t+2)` chips.
pub fn exp_fires(t: i64, k: Site) -> u64 {
    if k.abs() <= t + 1 {
        (2 * (t - k.abs()) + 3) as u64
    } else {
        0
    }
}

/// Runs the unlabeled process by always firing the leftmost enabled site,
/// returning fires per site and the final chip counts.
pub fn unlabeled_run(
    variant: &Variant,
    initial: &BTreeMap<Site, i64>,
) -> (BTreeMap<Site, u64>, BTreeMap<Site, i64>) {
    let mut chips = initial.clone();
    let mut fires: BTreeMap<Site, u64> = BTreeMap::new();
    while let Some(site) = chips
        .iter()
        .find(|(&s, &c)| c >= threshold(variant, s))
        .map(|(&s, _)| s)
    {
        let (l, _, r) = mults(variant, site);
        *chips.get_mut(&site).unwrap() -= l + r;
        *chips.entry(site - 1).or_insert(0) += l;
        *chips.entry(site + 1).or_insert(0) += r;
        *fires.entry(site).or_insert(0) += 1;
    }
    chips.retain(|_, c| *c != 0);
    (fires, chips)
}

pub fn origin(n: usize) -> BTreeMap<Site, i64> {
    BTreeMap::from([(0, n as i64)])
}

/// Chips per site given fire counts, by the in/out flow at each site.
pub fn chips_from_fires(
    variant: &Variant,
    initial: &BTreeMap<Site, i64>,
    fires: &BTreeMap<Site, u64>,
    site: Site,
) -> i64 {
    let f = |s: Site| fires.get(&s).copied().unwrap_or(0) as i64;
    let (l, _, r) = mults(variant, site);
    initial.get(&site).copied().unwrap_or(0)
        + mults(variant, site - 1).2 * f(site - 1)
        + mults(variant, site + 1).0 * f(site + 1)
        - (l + r) * f(site)
}

/// Every reachable fire-count vector, by depth-first search.
pub fn reachable_fire_vectors(variant: &Variant, n: usize) -> BTreeSet<BTreeMap<Site, u64>> {
    let initial = origin(n);
    let mut seen = BTreeSet::new();
    let mut stack = vec![BTreeMap::new()];
    while let Some(fires) = stack.pop() {
        if !seen.insert(fires.clone()) {
            continue;
        }
        let lo = fires.keys().next().copied().unwrap_or(0) - 1;
        let hi = fires.keys().next_back().copied().unwrap_or(0) + 1;
        for site in lo..=hi {
            if chips_from_fires(variant, &initial, &fires, site) >= threshold(variant, site) {
                let mut next = fires.clone();
                *next.entry(site).or_insert(0) += 1;
                stack.push(next);
            }
        }
    }
    seen
}

/// Pairwise definition of weak sortedness.
pub fn weakly_sorted(config: &LabeledConfiguration) -> bool {
    let chips: Vec<(Site, Value)> = config.iter().map(|(s, c)| (s, c.value)).collect();
    chips
        .iter()
        .all(|&(sa, va)| chips.iter().all(|&(sb, vb)| va >= vb || sa <= sb))
}

/// Every maximal labeled run from `initial`, over every chip choice.
pub fn all_labeled_runs(
    initial: &LabeledConfiguration,
    variant: &Variant,
) -> Vec<Vec<(Site, Vec<ChipId>)>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn walk(
        config: &LabeledConfiguration,
        variant: &Variant,
        path: &mut Vec<(Site, Vec<ChipId>)>,
        out: &mut Vec<Vec<(Site, Vec<ChipId>)>>,
    ) {
        let mut any = false;
        for site in config.occupied_sites().collect::<Vec<_>>() {
            let k = threshold(variant, site) as usize;
            let ids: Vec<ChipId> = config.chips_at(site).iter().map(|c| c.id).collect();
            if ids.len() < k {
                continue;
            }
            for chosen in ids.into_iter().combinations(k) {
                any = true;
                let mv = Move {
                    site,
                    chosen: chosen.clone(),
                    step_index: path.len(),
                };
                let next = apply_move(config, variant, &mv).expect("legal by construction");
                path.push((site, chosen));
                walk(&next, variant, path, out);
                path.pop();
            }
        }
        if !any {
            out.push(path.clone());
        }
    }
    walk(initial, variant, &mut path, &mut out);
    out
}

/// Checks chip count and the drift-corrected weighted position sum after
/// every step of a trace.
pub fn conservation_errors(trace: &Trace) -> Vec<String> {
    let variant = trace.variant;
    let mut errors = Vec::new();
    let states = trace.states().expect("trace replays");
    let weighted = |c: &LabeledConfiguration| c.iter().map(|(s, _)| s).sum::<i64>();
    let n0 = trace.initial.total();
    let w0 = weighted(&trace.initial);
    let mut drift = 0i64;
    for (i, state) in states.iter().enumerate() {
        if i > 0 {
            let site = trace.moves[i - 1].site;
            let (l, _, r) = mults(&variant, site);
            drift += r - l;
        }
        if state.total() != n0 {
            errors.push(format!(
                "step {i}: {} chips, started with {n0}",
                state.total()
            ));
        }
        if weighted(state) != w0 + drift {
            errors.push(format!(
                "step {i}: weighted sum {} but expected {}",
                weighted(state),
                w0 + drift
            ));
        }
        let mut ids: Vec<ChipId> = state.iter().map(|(_, c)| c.id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != n0 {
            errors.push(format!("step {i}: chip ids not unique"));
        }
    }
    errors
}
