//! The search pipeline.
//!
//! For each work cell `(r, M)` the moduli phase lists every set of distinct base
//! moduli `d_1 < ... < d_j < M` with `sum 1/d_i = 1 - r/M`; the residue phase then
//! decides which of those multisets admit an exact cover. Cells are independent,
//! so they are dealt out to worker threads and merged by a single aggregator.
//!
//! With `divisor_prune` (on by default) base moduli are restricted to divisors of
//! `M`. This is sound: if some modulus did not divide `M`, pick a prime `p` with
//! `v_p(d) > v_p(M)` and let `e` be the largest `p`-valuation among all moduli.
//! The classes whose modulus has valuation `e` have a union that is periodic with
//! period `L/p` (every Fourier coefficient of the cover at a frequency of exact
//! order divisible by `p^e` must vanish, and only those classes contribute there).
//! The largest of those moduli is a base modulus, occurs once, and is the only
//! modulus divisible by itself, so its single coefficient would have to vanish,
//! which is impossible.

mod checkpoint;
mod witness;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

pub use checkpoint::{CellRecord, Checkpoint};
pub use witness::{
    density_string, residue_witness, witness_bruteforce, witness_bruteforce_with_budget,
    WitnessOutcome, BRUTEFORCE_NODE_CAP,
};

use crate::arith::{frac_sub_unit, smallest_prime_factor};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::systems::{CoveringSystem, ModuliProfile};
use crate::Ratio;

pub const DEFAULT_LCM_CAP: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub r_min: u32,
    pub r_max: u32,
    /// Bound `B` on the repeated (largest) modulus.
    pub max_modulus: u64,
    pub min_modulus: u64,
    pub lcm_cap: u64,
    /// Skip cells whose top modulus has smallest prime factor above `r`.
    pub enable_nz_prune: bool,
    /// Restrict base moduli to divisors of the top modulus.
    pub divisor_prune: bool,
    pub jobs: usize,
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            r_min: 2,
            r_max: 32,
            max_modulus: 450,
            min_modulus: 3,
            lcm_cap: DEFAULT_LCM_CAP,
            enable_nz_prune: false,
            divisor_prune: true,
            jobs: 1,
            checkpoint_path: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.r_min < 2 || self.r_min > self.r_max {
            return bad(format!("need 2 <= r_min <= r_max, got {}..{}", self.r_min, self.r_max));
        }
        if self.min_modulus < 2 || self.max_modulus < self.min_modulus {
            return bad(format!(
                "need 2 <= min_modulus <= max_modulus, got {} and {}",
                self.min_modulus, self.max_modulus
            ));
        }
        if self.jobs == 0 || self.lcm_cap == 0 {
            return bad("jobs and lcm_cap must be positive".into());
        }
        Ok(())
    }

    pub fn cell_is_valid(&self, cell: &WorkCell) -> bool {
        (self.r_min..=self.r_max).contains(&cell.r)
            && (self.min_modulus..=self.max_modulus).contains(&cell.top)
            && u64::from(cell.r) < cell.top
    }

    /// Every valid `(r, M)` cell, ordered by `r` then `M`.
    pub fn cells(&self) -> Vec<WorkCell> {
        (self.r_min..=self.r_max)
            .flat_map(|r| {
                let lo = self.min_modulus.max(u64::from(r) + 1);
                (lo..=self.max_modulus).map(move |top| WorkCell { r, top })
            })
            .collect()
    }

    /// Admissible base moduli for a cell, ascending.
    pub fn candidates(&self, top: u64) -> Vec<u64> {
        let lo = self.min_modulus;
        if self.divisor_prune {
            (lo..top).filter(|d| top.is_multiple_of(*d)).collect()
        } else {
            (lo..top).collect()
        }
    }
}

/// One unit of work: profiles with top modulus `top` repeated `r` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorkCell {
    pub r: u32,
    pub top: u64,
}

struct Decomposer<'a> {
    candidates: &'a [u64],
    tail: Vec<f64>,
    /// `lcm(candidates[i..])`: any sum of unit fractions drawn from there has a
    /// denominator dividing it.
    suffix_lcm: Vec<BigUint>,
    smallest_unit: Ratio,
    chosen: Vec<u64>,
    found: Vec<Vec<u64>>,
}

impl Decomposer<'_> {
    fn run(&mut self, start: usize, deficit: &Ratio) -> Result<()> {
        let approx = deficit.approx();
        let den = BigUint::from(*deficit.denom());
        for i in start..self.candidates.len() {
            // harmonic tail: the rest cannot reach the deficit
            if approx > self.tail[i] * (1.0 + 1e-9) {
                break;
            }
            // the suffix lcms form a divisor chain, so this stays false further on
            if !(&self.suffix_lcm[i] % &den).is_zero() {
                break;
            }
            let t = self.candidates[i];
            let rest = match frac_sub_unit(deficit, t) {
                Ok(rest) => rest,
                Err(Error::Underflow) => continue,
                Err(e) => return Err(e),
            };
            self.chosen.push(t);
            if rest.is_zero() {
                self.found.push(self.chosen.clone());
            } else if rest >= self.smallest_unit {
                self.run(i + 1, &rest)?;
            }
            self.chosen.pop();
        }
        Ok(())
    }
}

/// All base-moduli sets completing `r` copies of `M` to density one.
pub fn enumerate_profiles(cell: WorkCell, cfg: &SearchConfig) -> Result<Vec<ModuliProfile>> {
    if !cfg.cell_is_valid(&cell) {
        return Err(Error::Precondition(format!("cell {cell:?} is not valid under the config")));
    }
    if cfg.enable_nz_prune && smallest_prime_factor(cell.top)? > u64::from(cell.r) {
        return Ok(Vec::new());
    }
    let target = Ratio::one().checked_sub(&Ratio::from_ratio(u64::from(cell.r), cell.top)?)?;
    let candidates = cfg.candidates(cell.top);
    let Some(&largest) = candidates.last() else {
        return Ok(Vec::new());
    };
    let mut tail = vec![0.0; candidates.len() + 1];
    for i in (0..candidates.len()).rev() {
        tail[i] = tail[i + 1] + 1.0 / candidates[i] as f64;
    }
    let mut suffix_lcm = vec![BigUint::one(); candidates.len() + 1];
    for i in (0..candidates.len()).rev() {
        suffix_lcm[i] = suffix_lcm[i + 1].lcm(&BigUint::from(candidates[i]));
    }
    let mut dec = Decomposer {
        candidates: &candidates,
        tail,
        suffix_lcm,
        smallest_unit: Ratio::unit(largest)?,
        chosen: Vec::new(),
        found: Vec::new(),
    };
    if target >= dec.smallest_unit {
        dec.run(0, &target)?;
    }
    let mut out = dec
        .found
        .into_iter()
        .map(|base| ModuliProfile::new(base, cell.top, cell.r))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

/// Crude work estimate: number of admissible base moduli.
fn cell_cost(cell: &WorkCell, cfg: &SearchConfig) -> usize {
    cfg.candidates(cell.top).len()
}

/// Deals all cells round-robin into `n` lists, most expensive first.
pub fn partition_cells(cfg: &SearchConfig, n: usize) -> Vec<Vec<WorkCell>> {
    let n = n.max(1);
    let mut cells: Vec<(usize, WorkCell)> = cfg
        .cells()
        .into_iter()
        .map(|c| (cell_cost(&c, cfg), c))
        .collect();
    cells.sort_by(|(ca, a), (cb, b)| {
        cb.cmp(ca)
            .then_with(|| b.top.cmp(&a.top))
            .then_with(|| a.r.cmp(&b.r))
    });
    let mut lists = vec![Vec::new(); n];
    for (i, (_, cell)) in cells.into_iter().enumerate() {
        lists[i % n].push(cell);
    }
    lists
}

/// Per-cell result: feasible profiles with witnesses, and undecided ones.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: WorkCell,
    pub found: Vec<(ModuliProfile, CoveringSystem)>,
    pub undecided: Vec<ModuliProfile>,
}

impl CellResult {
    fn record(&self) -> CellRecord {
        CellRecord {
            r: self.cell.r,
            top: self.cell.top,
            profiles: self.found.iter().map(|(p, _)| p.base().to_vec()).collect(),
            undecided: self.undecided.iter().map(|p| p.base().to_vec()).collect(),
        }
    }

    /// Rebuilds a result from a checkpoint record, recomputing witnesses.
    fn from_record(rec: &CellRecord, cfg: &SearchConfig) -> Result<Self> {
        let corrupt = |why: String| Error::Checkpoint {
            path: cfg.checkpoint_path.clone().unwrap_or_default(),
            reason: why,
        };
        let mut found = Vec::new();
        for base in &rec.profiles {
            let p = ModuliProfile::new(base.clone(), rec.top, rec.r)
                .map_err(|e| corrupt(e.to_string()))?;
            match residue_witness(&p.multiset(), cfg.lcm_cap)? {
                WitnessOutcome::Found(w) => found.push((p, w)),
                _ => return Err(corrupt(format!("recorded profile {p} has no witness"))),
            }
        }
        let undecided = rec
            .undecided
            .iter()
            .map(|b| ModuliProfile::new(b.clone(), rec.top, rec.r))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| corrupt(e.to_string()))?;
        Ok(Self {
            cell: rec.cell(),
            found,
            undecided,
        })
    }
}

/// Moduli phase followed by residue phase for one cell.
pub fn process_cell(cell: WorkCell, cfg: &SearchConfig) -> Result<CellResult> {
    let mut found = Vec::new();
    let mut undecided = Vec::new();
    for p in enumerate_profiles(cell, cfg)? {
        match residue_witness(&p.multiset(), cfg.lcm_cap)? {
            WitnessOutcome::Found(w) => found.push((p, w)),
            WitnessOutcome::Infeasible => {}
            WitnessOutcome::Undecided => undecided.push(p),
        }
    }
    Ok(CellResult {
        cell,
        found,
        undecided,
    })
}

/// Catalog plus the witness found for each profile.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub catalog: Catalog,
    pub witnesses: BTreeMap<ModuliProfile, CoveringSystem>,
}

/// Runs every cell of `cfg`. The result depends only on the search parameters,
/// not on `jobs` or on how often the run was interrupted and resumed.
pub fn run_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    Ok(run_search_with_limit(cfg, None)?.expect("unlimited run completes"))
}

/// As [`run_search`], but stops after `limit` newly processed cells (for
/// exercising checkpoint resume). Returns `Ok(None)` when stopped early.
pub fn run_search_with_limit(
    cfg: &SearchConfig,
    limit: Option<usize>,
) -> Result<Option<SearchOutcome>> {
    cfg.validate()?;
    let mut results: Vec<CellResult> = Vec::new();
    let mut checkpoint = None;
    let mut done = BTreeSet::new();
    if let Some(path) = &cfg.checkpoint_path {
        let (ck, records) = Checkpoint::open(path, cfg)?;
        for rec in records.values() {
            results.push(CellResult::from_record(rec, cfg)?);
            done.insert(rec.cell());
        }
        checkpoint = Some(ck);
    }
    let lists: Vec<Vec<WorkCell>> = partition_cells(cfg, cfg.jobs)
        .into_iter()
        .map(|l| l.into_iter().filter(|c| !done.contains(c)).collect())
        .collect();
    let pending: usize = lists.iter().map(Vec::len).sum();
    let budget = limit.unwrap_or(usize::MAX);

    let stop = AtomicBool::new(false);
    let mut first_err = None;
    let mut processed = 0usize;
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Result<CellResult>>();
        for list in &lists {
            let tx = tx.clone();
            let stop = &stop;
            scope.spawn(move || {
                for &cell in list {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    if tx.send(process_cell(cell, cfg)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        for msg in rx {
            if first_err.is_some() || processed >= budget {
                continue;
            }
            let step = msg.and_then(|res| {
                if let Some(ck) = checkpoint.as_mut() {
                    ck.append(&res.record())?;
                }
                Ok(res)
            });
            match step {
                Ok(res) => {
                    results.push(res);
                    processed += 1;
                    if processed >= budget {
                        stop.store(true, Ordering::Relaxed);
                    }
                }
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    first_err = Some(e);
                }
            }
        }
    });
    if let Some(e) = first_err {
        return Err(e);
    }
    if processed < pending {
        return Ok(None);
    }
    Ok(Some(assemble(cfg, results)))
}

fn assemble(cfg: &SearchConfig, results: Vec<CellResult>) -> SearchOutcome {
    let mut catalog = Catalog::empty(cfg.max_modulus, cfg.min_modulus, cfg.r_min..=cfg.r_max);
    let mut witnesses = BTreeMap::new();
    for res in results {
        for (p, w) in res.found {
            catalog.insert(p.clone());
            witnesses.insert(p, w);
        }
        catalog.undecided.extend(res.undecided);
    }
    catalog.normalize();
    SearchOutcome { catalog, witnesses }
}
