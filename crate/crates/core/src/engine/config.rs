use std::collections::{BTreeMap, BTreeSet};

use super::{Chip, ChipId, EngineError, IllegalMove, Site, Value, Variant};

/// Chips on the infinite line, stored sparsely by site.
///
/// Each site's chips are kept sorted by `(value, id)`, so two
/// configurations compare equal exactly when they hold the same chips at the
/// same sites.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LabeledConfiguration {
    sites: BTreeMap<Site, Vec<Chip>>,
}

impl LabeledConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a configuration from explicit chips, rejecting duplicate ids.
    pub fn from_chips<I>(chips: I) -> Result<Self, EngineError>
    where
        I: IntoIterator<Item = (Site, Chip)>,
    {
        let mut seen = BTreeSet::new();
        let mut config = Self::new();
        for (site, chip) in chips {
            if !seen.insert(chip.id) {
                return Err(EngineError::DuplicateChipId(chip.id));
            }
            config.push(site, chip);
        }
        Ok(config)
    }

    /// Builds a configuration from values only. Ids are handed out in
    /// `(site, value)` order starting at 0, which is the convention trace
    /// files rely on.
    pub fn from_values<I, V>(sites: I) -> Self
    where
        I: IntoIterator<Item = (Site, V)>,
        V: IntoIterator<Item = Value>,
    {
        let mut by_site: BTreeMap<Site, Vec<Value>> = BTreeMap::new();
        for (site, values) in sites {
            by_site.entry(site).or_default().extend(values);
        }
        let mut next = 0u32;
        let mut config = Self::new();
        for (site, mut values) in by_site {
            values.sort_unstable();
            for value in values {
                config.push(site, Chip::new(next, value));
                next += 1;
            }
        }
        config
    }

    pub(crate) fn push(&mut self, site: Site, chip: Chip) {
        let slot = self.sites.entry(site).or_default();
        let at = slot.partition_point(|c| c.key() < chip.key());
        slot.insert(at, chip);
    }

    pub fn chips_at(&self, site: Site) -> &[Chip] {
        self.sites.get(&site).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count_at(&self, site: Site) -> usize {
        self.sites.get(&site).map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.sites.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Occupied sites in ascending order.
    pub fn occupied_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.sites.keys().copied()
    }

    /// Every chip with its site, left to right.
    pub fn iter(&self) -> impl Iterator<Item = (Site, &Chip)> + '_ {
        self.sites
            .iter()
            .flat_map(|(&site, chips)| chips.iter().map(move |c| (site, c)))
    }

    pub fn position_of(&self, id: ChipId) -> Option<Site> {
        self.iter().find(|(_, c)| c.id == id).map(|(s, _)| s)
    }

    pub fn positions(&self) -> BTreeMap<ChipId, (Site, Value)> {
        self.iter().map(|(s, c)| (c.id, (s, c.value))).collect()
    }

    /// Chip counts per occupied site.
    pub fn unlabeled(&self) -> BTreeMap<Site, usize> {
        self.sites.iter().map(|(&s, c)| (s, c.len())).collect()
    }

    /// Values per occupied site, each list sorted ascending.
    pub fn values(&self) -> BTreeMap<Site, Vec<Value>> {
        self.sites
            .iter()
            .map(|(&s, chips)| (s, chips.iter().map(|c| c.value).collect()))
            .collect()
    }

    /// `sum(site * chips(site))`.
    pub fn weighted_sum(&self) -> i64 {
        self.sites
            .iter()
            .map(|(&s, chips)| s * chips.len() as i64)
            .sum()
    }

    pub fn is_enabled(&self, variant: &Variant, site: Site) -> bool {
        self.count_at(site) as u64 >= variant.threshold(site)
    }

    /// Fires `site` with the chips `chosen`, in place.
    pub(crate) fn fire(
        &mut self,
        variant: &Variant,
        site: Site,
        chosen: &[ChipId],
    ) -> Result<(), IllegalMove> {
        let threshold = variant.threshold(site);
        let present = self.count_at(site);
        if (present as u64) < threshold {
            return Err(IllegalMove::SiteNotEnabled {
                site,
                present,
                threshold,
            });
        }
        if chosen.len() as u64 != threshold {
            return Err(IllegalMove::WrongCardinality {
                expected: threshold,
                got: chosen.len(),
            });
        }
        let slot = self.sites.get_mut(&site).expect("enabled site is occupied");
        let mut picked = Vec::with_capacity(chosen.len());
        for &id in chosen {
            if picked.iter().any(|c: &Chip| c.id == id) {
                return Err(IllegalMove::DuplicateChoice { id });
            }
            match slot.iter().find(|c| c.id == id) {
                Some(&chip) => picked.push(chip),
                None => return Err(IllegalMove::ChipAbsent { site, id }),
            }
        }
        slot.retain(|c| !chosen.contains(&c.id));
        if slot.is_empty() {
            self.sites.remove(&site);
        }
        picked.sort_unstable_by_key(Chip::key);
        let left = variant.left_mult(site) as usize;
        let right = variant.right_mult(site) as usize;
        let stay_end = picked.len() - right;
        for (i, chip) in picked.into_iter().enumerate() {
            let dest = if i < left {
                site - 1
            } else if i < stay_end {
                site
            } else {
                site + 1
            };
            self.push(dest, chip);
        }
        Ok(())
    }
}
