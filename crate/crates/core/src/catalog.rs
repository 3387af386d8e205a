//! Catalogs of profiles: the embedded reference data, the compact and JSON
//! serialisations, and set-based diffing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::ModuliProfile;

/// Profiles per repeat count, with the bounds they were searched under.
///
/// Within each `r` profiles are sorted by number of distinct moduli, then
/// lexicographically by the moduli sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    /// Largest top modulus searched; completeness holds only up to here.
    pub bound: u64,
    pub min_modulus: u64,
    pub results: BTreeMap<u32, Vec<ModuliProfile>>,
    /// Profiles whose feasibility could not be decided under the lcm cap.
    pub undecided: Vec<ModuliProfile>,
}

impl Catalog {
    pub fn empty(bound: u64, min_modulus: u64, repeats: RangeInclusive<u32>) -> Self {
        Self {
            bound,
            min_modulus,
            results: repeats.map(|r| (r, Vec::new())).collect(),
            undecided: Vec::new(),
        }
    }

    pub fn insert(&mut self, p: ModuliProfile) {
        self.results.entry(p.repeats()).or_default().push(p);
    }

    /// Restores canonical order and drops duplicates.
    pub fn normalize(&mut self) {
        for list in self.results.values_mut() {
            list.sort();
            list.dedup();
        }
        self.undecided.sort_by(|a, b| a.repeats().cmp(&b.repeats()).then_with(|| a.cmp(b)));
        self.undecided.dedup();
    }

    pub fn counts(&self) -> BTreeMap<u32, usize> {
        self.results.iter().map(|(&r, l)| (r, l.len())).collect()
    }

    pub fn total(&self) -> usize {
        self.results.values().map(Vec::len).sum()
    }

    pub fn profiles(&self) -> impl Iterator<Item = &ModuliProfile> {
        self.results.values().flatten()
    }

    /// Copy keeping only the given repeat counts.
    pub fn restrict(&self, repeats: &[u32]) -> Self {
        Self {
            results: self
                .results
                .iter()
                .filter(|(r, _)| repeats.contains(r))
                .map(|(&r, l)| (r, l.clone()))
                .collect(),
            undecided: self
                .undecided
                .iter()
                .filter(|p| repeats.contains(&p.repeats()))
                .cloned()
                .collect(),
            ..self.clone()
        }
    }

    fn check_keys(&self) -> Result<()> {
        for (&r, list) in &self.results {
            if let Some(p) = list.iter().find(|p| p.repeats() != r) {
                return Err(Error::Parse(format!("profile {p} listed under r = {r}")));
            }
        }
        Ok(())
    }
}

/// One line per `r`: `r(count): d1,...,dj,M; ...`, the repeated modulus last.
pub fn format_compact(c: &Catalog) -> String {
    let mut out = String::new();
    for (r, list) in &c.results {
        out.push_str(&format!("{r}({}):", list.len()));
        let groups: Vec<String> = list
            .iter()
            .map(|p| {
                p.base()
                    .iter()
                    .chain(std::iter::once(&p.top()))
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        if !groups.is_empty() {
            out.push(' ');
            out.push_str(&groups.join("; "));
        }
        out.push('\n');
    }
    out
}

/// Parses the compact format. `#` lines and blank lines are ignored; spaces
/// around commas are accepted.
pub fn parse_compact(text: &str, bound: u64, min_modulus: u64) -> Result<Catalog> {
    let mut cat = Catalog {
        bound,
        min_modulus,
        results: BTreeMap::new(),
        undecided: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |why: &str| Error::Parse(format!("line {}: {why}: {line:?}", lineno + 1));
        let (head, body) = line.split_once(':').ok_or_else(|| err("missing ':'"))?;
        let (r, count) = head
            .trim()
            .strip_suffix(')')
            .and_then(|h| h.split_once('('))
            .ok_or_else(|| err("expected `r(count)`"))?;
        let r: u32 = r.trim().parse().map_err(|_| err("bad r"))?;
        let count: usize = count.trim().parse().map_err(|_| err("bad count"))?;
        let mut list = Vec::new();
        for group in body.split(';').map(str::trim).filter(|g| !g.is_empty()) {
            let mut moduli = group
                .split(',')
                .map(|t| t.trim().parse::<u64>().map_err(|_| err("bad modulus")))
                .collect::<Result<Vec<_>>>()?;
            let top = moduli.pop().ok_or_else(|| err("empty group"))?;
            list.push(ModuliProfile::new(moduli, top, r).map_err(|e| err(&e.to_string()))?);
        }
        if list.len() != count {
            return Err(err(&format!("count says {count}, found {}", list.len())));
        }
        if cat.results.insert(r, list).is_some() {
            return Err(err("repeated r"));
        }
    }
    cat.normalize();
    Ok(cat)
}

/// Deterministic single-line JSON; keys sorted, integers only.
pub fn format_json(c: &Catalog) -> String {
    serde_json::to_string(c).expect("catalog is serialisable")
}

pub fn parse_json(text: &str) -> Result<Catalog> {
    let mut c: Catalog = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    c.check_keys()?;
    c.normalize();
    Ok(c)
}

const GOLDEN_TEXT: &str = include_str!("../assets/golden.txt");

/// Systems per repeat count `r = 2..=32`, as stated alongside each table.
pub const GOLDEN_COUNTS: [(u32, usize); 31] = [
    (2, 0), (3, 0), (4, 1), (5, 0), (6, 3), (7, 2), (8, 2), (9, 4), (10, 5), (11, 2),
    (12, 7), (13, 7), (14, 6), (15, 10), (16, 9), (17, 4), (18, 16), (19, 13), (20, 12),
    (21, 18), (22, 19), (23, 12), (24, 24), (25, 23), (26, 19), (27, 27), (28, 26),
    (29, 21), (30, 39), (31, 35), (32, 29),
];

/// Bound up to which the reference lists are known complete.
pub const GOLDEN_BOUND: u64 = 600;

fn load_golden() -> Result<Catalog> {
    let cat = parse_compact(GOLDEN_TEXT, GOLDEN_BOUND, 3)?;
    let counts: Vec<(u32, usize)> = cat.counts().into_iter().collect();
    if counts != GOLDEN_COUNTS {
        return Err(Error::Parse(format!("golden counts {counts:?} disagree with the table")));
    }
    if let Some(p) = cat.profiles().find(|p| p.smallest() < 3) {
        return Err(Error::Parse(format!("golden entry {p} has a modulus below 3")));
    }
    Ok(cat)
}

/// The reference catalog for `r = 2..=32`, validated on first use.
pub fn golden() -> &'static Catalog {
    static GOLDEN: OnceLock<Catalog> = OnceLock::new();
    GOLDEN.get_or_init(|| load_golden().expect("embedded golden catalog is consistent"))
}

/// Set differences between a run and a reference, per repeat count.
///
/// Only repeat counts present in the run are compared, and reference entries
/// whose top modulus exceeds the run's bound are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffReport {
    pub missing: Vec<ModuliProfile>,
    pub extra: Vec<ModuliProfile>,
    /// run count minus reference count, nonzero entries only
    pub count_deltas: BTreeMap<u32, i64>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "no differences");
        }
        for p in &self.missing {
            writeln!(f, "- {p}")?;
        }
        for p in &self.extra {
            writeln!(f, "+ {p}")?;
        }
        for (r, d) in &self.count_deltas {
            writeln!(f, "r={r}: {d:+}")?;
        }
        Ok(())
    }
}

pub fn diff(run: &Catalog, gold: &Catalog) -> DiffReport {
    let mut report = DiffReport::default();
    for (r, list) in &run.results {
        let mine: BTreeSet<&ModuliProfile> = list.iter().collect();
        let theirs: BTreeSet<&ModuliProfile> = gold
            .results
            .get(r)
            .into_iter()
            .flatten()
            .filter(|p| p.top() <= run.bound)
            .collect();
        report.missing.extend(theirs.difference(&mine).map(|&p| p.clone()));
        report.extra.extend(mine.difference(&theirs).map(|&p| p.clone()));
        let delta = mine.len() as i64 - theirs.len() as i64;
        if delta != 0 {
            report.count_deltas.insert(*r, delta);
        }
    }
    report
}
