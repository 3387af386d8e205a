//! Residue feasibility: given a moduli multiset of density one, find residues
//! making it an exact cover, or prove none exist.

use num_integer::Integer;

use crate::arith::lcm_checked;
use crate::error::{Error, Result};
use crate::systems::{classes_disjoint, density_of, CongruenceClass, CoveringSystem};
use crate::{BigRatio, Ratio};

/// Result of a residue search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessOutcome {
    Found(CoveringSystem),
    Infeasible,
    /// Some branch needed a gap scan beyond the lcm cap and no witness was found elsewhere.
    Undecided,
}

impl WitnessOutcome {
    pub fn witness(&self) -> Option<&CoveringSystem> {
        match self {
            Self::Found(s) => Some(s),
            _ => None,
        }
    }
}

fn check_density_one(moduli: &[u64]) -> Result<()> {
    if moduli.is_empty() || moduli.contains(&0) {
        return Err(Error::Domain("moduli must be positive and nonempty".into()));
    }
    let is_one = match density_of::<u128>(moduli) {
        Ok(d) => d.is_one(),
        Err(Error::Overflow) => density_of::<num_bigint::BigUint>(moduli)?.is_one(),
        Err(e) => return Err(e),
    };
    if !is_one {
        let shown = match density_of::<u128>(moduli) {
            Ok(d) => d.to_string(),
            Err(_) => density_of::<num_bigint::BigUint>(moduli)
                .map(|d: BigRatio| d.to_string())
                .unwrap_or_default(),
        };
        return Err(Error::Domain(format!("density is {shown}, not 1")));
    }
    Ok(())
}

/// Exact density of a multiset, rendered for messages.
pub fn density_string(moduli: &[u64]) -> String {
    match density_of::<u128>(moduli) {
        Ok(d) => d.to_string(),
        Err(_) => density_of::<num_bigint::BigUint>(moduli)
            .map(|d: BigRatio| d.to_string())
            .unwrap_or_else(|e| e.to_string()),
    }
}

/// Residues still open for one modulus value.
struct Group {
    modulus: u64,
    count: usize,
    open: Vec<bool>,
    size: usize,
    /// Every modulus in play divides this one, so each copy is a single point
    /// of `Z/L` and the copies can be placed last on whatever is left.
    filler: bool,
}

/// Exact completability test: can the remaining moduli be given residues that are
/// pairwise disjoint and disjoint from `fixed`? With total density one that is the
/// same as completing an exact cover.
struct Completion {
    groups: Vec<Group>,
    trail: Vec<(usize, u64)>,
}

impl Completion {
    fn new(fixed: &[CongruenceClass], values: &[u64], remaining: &[usize]) -> Self {
        let all = fixed
            .iter()
            .map(|c| c.modulus())
            .chain(values.iter().zip(remaining).filter(|(_, &n)| n > 0).map(|(&m, _)| m))
            .collect::<Vec<_>>();
        let groups = values
            .iter()
            .zip(remaining)
            .filter(|(_, &n)| n > 0)
            .map(|(&m, &count)| {
                let mut open = vec![true; m as usize];
                let mut size = m as usize;
                for c in fixed {
                    let g = m.gcd(&c.modulus());
                    for a in ((c.residue() % g) as usize..m as usize).step_by(g as usize) {
                        if open[a] {
                            open[a] = false;
                            size -= 1;
                        }
                    }
                }
                Group {
                    modulus: m,
                    count,
                    open,
                    size,
                    filler: all.iter().all(|&d| m % d == 0),
                }
            })
            .collect();
        Self {
            groups,
            trail: Vec::new(),
        }
    }

    fn close(&mut self, g: usize, a: u64) {
        let grp = &mut self.groups[g];
        if grp.open[a as usize] {
            grp.open[a as usize] = false;
            grp.size -= 1;
            self.trail.push((g, a));
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (g, a) = self.trail.pop().expect("nonempty trail");
            self.groups[g].open[a as usize] = true;
            self.groups[g].size += 1;
        }
    }

    /// Places residue `a` for group `g`: later copies of `g` take larger residues.
    fn place(&mut self, g: usize, a: u64) {
        let m = self.groups[g].modulus;
        for b in 0..=a {
            self.close(g, b);
        }
        for h in 0..self.groups.len() {
            if h == g || self.groups[h].count == 0 {
                continue;
            }
            let mh = self.groups[h].modulus;
            let step = m.gcd(&mh);
            for b in ((a % step)..mh).step_by(step as usize) {
                self.close(h, b);
            }
        }
        self.groups[g].count -= 1;
    }

    fn solve(&mut self, translation_free: bool) -> bool {
        if self.groups.iter().any(|g| g.size < g.count) {
            return false;
        }
        let pick = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.count > 0 && !g.filler)
            .min_by_key(|(_, g)| (g.size / g.count, g.modulus))
            .map(|(i, _)| i);
        let Some(g) = pick else {
            // only point-sized copies remain and there is room for all of them
            return true;
        };
        let choices: Vec<u64> = if translation_free {
            // any solution can be shifted so that this group's least residue is 0
            vec![0]
        } else {
            (0..self.groups[g].modulus)
                .filter(|&a| self.groups[g].open[a as usize])
                .collect()
        };
        for a in choices {
            let mark = self.trail.len();
            self.place(g, a);
            if self.solve(false) {
                self.undo(mark);
                self.groups[g].count += 1;
                return true;
            }
            self.undo(mark);
            self.groups[g].count += 1;
        }
        false
    }
}

/// True iff the remaining moduli admit residues completing `fixed` to an exact cover.
fn completable(fixed: &[CongruenceClass], values: &[u64], remaining: &[usize]) -> bool {
    let mut c = Completion::new(fixed, values, remaining);
    c.solve(fixed.is_empty())
}

struct Backtrack {
    values: Vec<u64>,
    remaining: Vec<usize>,
    assigned: Vec<CongruenceClass>,
    left: usize,
    cap: u64,
    lookahead: bool,
    undecided: bool,
}

impl Backtrack {
    /// Smallest integer `>= from` outside every assigned class, or `None` past the cap.
    fn first_gap(&self, from: u64) -> Option<u64> {
        let mut x = from;
        while self.assigned.iter().any(|c| c.contains(x)) {
            x += 1;
            if x >= self.cap {
                return None;
            }
        }
        (x < self.cap).then_some(x)
    }

    fn run(&mut self, from: u64) -> bool {
        if self.left == 0 {
            return true;
        }
        // Density below one leaves a gap below the lcm of the assigned moduli, and the
        // smallest gap only moves right along a branch.
        let Some(x) = self.first_gap(from) else {
            self.undecided = true;
            return false;
        };
        for v in 0..self.values.len() {
            if self.remaining[v] == 0 {
                continue;
            }
            let m = self.values[v];
            let class = CongruenceClass::new((x % m) as i128, m).expect("positive modulus");
            if !self.assigned.iter().all(|c| classes_disjoint(c, &class)) {
                continue;
            }
            self.assigned.push(class);
            self.remaining[v] -= 1;
            self.left -= 1;
            // Only subtrees without any solution are cut, so the first witness is
            // the same as for the plain search.
            let open = !self.lookahead || completable(&self.assigned, &self.values, &self.remaining);
            if open && self.run(x + 1) {
                return true;
            }
            self.left += 1;
            self.remaining[v] += 1;
            self.assigned.pop();
        }
        false
    }
}

/// Backtracking on the smallest uncovered integer.
///
/// Every exact cover places some class on the smallest integer not yet covered, so
/// branching over the unused modulus values at that point is complete. Values are
/// tried in ascending order, which fixes the first witness returned. Each branch is
/// first checked for completability (pairwise-disjoint placement of what is left),
/// so infeasible multisets are rejected without walking the whole tree.
pub fn residue_witness(moduli: &[u64], lcm_cap: u64) -> Result<WitnessOutcome> {
    search_witness(moduli, lcm_cap, true)
}

/// Moduli above this skip the completability check, whose tables hold one flag per residue.
const LOOKAHEAD_LIMIT: u64 = 1 << 20;

fn search_witness(moduli: &[u64], lcm_cap: u64, lookahead: bool) -> Result<WitnessOutcome> {
    check_density_one(moduli)?;
    let mut sorted = moduli.to_vec();
    sorted.sort_unstable();
    let mut values = Vec::new();
    let mut remaining = Vec::new();
    for chunk in sorted.chunk_by(|a, b| a == b) {
        values.push(chunk[0]);
        remaining.push(chunk.len());
    }
    let lookahead = lookahead && values.iter().all(|&m| m <= LOOKAHEAD_LIMIT);
    if lookahead && !completable(&[], &values, &remaining) {
        return Ok(WitnessOutcome::Infeasible);
    }
    let mut search = Backtrack {
        values,
        remaining,
        assigned: Vec::with_capacity(sorted.len()),
        left: sorted.len(),
        cap: lcm_cap,
        lookahead,
        undecided: false,
    };
    if search.run(0) {
        return Ok(WitnessOutcome::Found(CoveringSystem::new(search.assigned)?));
    }
    Ok(if search.undecided {
        WitnessOutcome::Undecided
    } else {
        WitnessOutcome::Infeasible
    })
}

/// Default node budget for [`witness_bruteforce`].
pub const BRUTEFORCE_NODE_CAP: u64 = 200_000_000;

struct Exhaustive<'a> {
    moduli: &'a [u64],
    hits: Vec<bool>,
    residues: Vec<u64>,
    nodes: u64,
    node_cap: u64,
}

impl Exhaustive<'_> {
    fn fits(&self, a: u64, m: u64) -> bool {
        (a as usize..self.hits.len())
            .step_by(m as usize)
            .all(|x| !self.hits[x])
    }

    fn mark(&mut self, a: u64, m: u64, on: bool) {
        let len = self.hits.len();
        for x in (a as usize..len).step_by(m as usize) {
            self.hits[x] = on;
        }
    }

    fn run(&mut self, i: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::SearchCapExceeded(self.node_cap));
        }
        if i == self.moduli.len() {
            return Ok(self.hits.iter().all(|&h| h));
        }
        let m = self.moduli[i];
        // identical moduli take strictly increasing residues
        let start = if i > 0 && self.moduli[i - 1] == m {
            self.residues[i - 1] + 1
        } else {
            0
        };
        for a in start..m {
            if !self.fits(a, m) {
                continue;
            }
            self.mark(a, m, true);
            self.residues.push(a);
            if self.run(i + 1)? {
                return Ok(true);
            }
            self.residues.pop();
            self.mark(a, m, false);
        }
        Ok(false)
    }
}

/// Exhaustive residue enumeration with a hit table over `Z/L`. `Ok(None)` means infeasible.
///
/// Independent of [`residue_witness`]: it walks residue tuples modulus by modulus
/// and never consults the disjointness test.
pub fn witness_bruteforce(moduli: &[u64], lcm_cap: u64) -> Result<Option<CoveringSystem>> {
    witness_bruteforce_with_budget(moduli, lcm_cap, BRUTEFORCE_NODE_CAP)
}

pub fn witness_bruteforce_with_budget(
    moduli: &[u64],
    lcm_cap: u64,
    node_cap: u64,
) -> Result<Option<CoveringSystem>> {
    if moduli.is_empty() || moduli.contains(&0) {
        return Err(Error::Domain("moduli must be positive and nonempty".into()));
    }
    let mut sorted = moduli.to_vec();
    sorted.sort_unstable();
    let lcm = sorted
        .iter()
        .try_fold(1u128, |acc, &m| lcm_checked(acc, m as u128))
        .unwrap_or(u128::MAX);
    if lcm > lcm_cap as u128 {
        return Err(Error::CapExceeded { lcm, cap: lcm_cap });
    }
    // density above one can never be disjoint; below one can never cover
    let d: Result<Ratio> = density_of(&sorted);
    if d.as_ref().is_ok_and(|d| !d.is_one()) {
        return Ok(None);
    }
    let mut search = Exhaustive {
        moduli: &sorted,
        hits: vec![false; lcm as usize],
        residues: Vec::with_capacity(sorted.len()),
        nodes: 0,
        node_cap,
    };
    if !search.run(0)? {
        return Ok(None);
    }
    let classes = search
        .residues
        .iter()
        .zip(&sorted)
        .map(|(&a, &m)| CongruenceClass::new(a as i128, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(CoveringSystem::new(classes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{parse_multiset, verify, verify_bruteforce};

    fn ms(s: &str) -> Vec<u64> {
        parse_multiset(s).unwrap()
    }

    #[test]
    fn first_witness_for_three_six() {
        let out = residue_witness(&ms("3 6^4"), 10_000_000).unwrap();
        let expected: CoveringSystem = "0 mod 3, 1 mod 6, 2 mod 6, 4 mod 6, 5 mod 6".parse().unwrap();
        assert_eq!(out, WitnessOutcome::Found(expected.clone()));
        assert!(verify_bruteforce(&expected, 1000).unwrap().valid);
    }

    #[test]
    fn two_three_six_is_infeasible() {
        assert_eq!(residue_witness(&ms("2 3 6"), 10_000_000).unwrap(), WitnessOutcome::Infeasible);
        assert_eq!(witness_bruteforce(&ms("2 3 6"), 10_000_000).unwrap(), None);
    }

    #[test]
    fn four_six_twelve() {
        let out = residue_witness(&ms("4 6 12^7"), 10_000_000).unwrap();
        let w = out.witness().unwrap();
        assert!(verify(w).unwrap().valid);
        assert_eq!(w.moduli(), ms("4 6 12^7"));
    }

    /// Density-one multisets of divisors of `l` with at most `k` parts.
    fn multisets(l: u64, k: usize) -> Vec<Vec<u64>> {
        let divs: Vec<u64> = (2..=l).filter(|d| l.is_multiple_of(*d)).collect();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn go(divs: &[u64], l: u64, left: u64, k: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            if cur.len() == k {
                return;
            }
            for (i, &d) in divs.iter().enumerate() {
                if l / d <= left {
                    cur.push(d);
                    go(&divs[i..], l, left - l / d, k, cur, out);
                    cur.pop();
                }
            }
        }
        go(&divs, l, l, k, &mut cur, &mut out);
        out
    }

    #[test]
    fn lookahead_keeps_outcome_and_first_witness() {
        for l in [12, 18, 24, 30, 36] {
            for m in multisets(l, 9) {
                let fast = residue_witness(&m, 1_000_000).unwrap();
                let plain = search_witness(&m, 1_000_000, false).unwrap();
                assert_eq!(fast, plain, "{m:?}");
                let oracle = witness_bruteforce(&m, 1_000_000).unwrap();
                assert_eq!(fast.witness().is_some(), oracle.is_some(), "{m:?}");
            }
        }
    }

    #[test]
    fn huge_moduli_skip_lookahead() {
        let m = ms("2 4 8 16 32 64 128 256 512 1024 2048 4096 8192 16384 32768 65536 131072 262144 524288 1048576 2097152^2");
        let out = residue_witness(&m, 10_000_000).unwrap();
        assert!(verify(out.witness().unwrap()).unwrap().valid);
    }

    #[test]
    fn bruteforce_small_cases() {
        let w = witness_bruteforce(&ms("3 6^4"), 1000).unwrap().unwrap();
        assert!(verify(&w).unwrap().valid);
        let w = witness_bruteforce(&ms("2 2"), 1000).unwrap().unwrap();
        assert_eq!(w, "0 mod 2, 1 mod 2".parse().unwrap());
        assert!(matches!(
            witness_bruteforce(&ms("128 78125"), 1_000_000),
            Err(Error::CapExceeded { .. })
        ));
        assert!(matches!(
            witness_bruteforce_with_budget(&ms("3 6 9 18 36^12"), 10_000, 10),
            Err(Error::SearchCapExceeded(10))
        ));
    }

    #[test]
    fn density_precondition() {
        assert!(matches!(residue_witness(&ms("3 4"), 100), Err(Error::Domain(_))));
        assert_eq!(density_string(&ms("3 4")), "7/12");
        assert!(residue_witness(&[], 100).is_err());
    }

    #[test]
    fn undecided_when_gap_scan_hits_cap() {
        // density 1, feasible, but the second gap sits at 1 >= cap
        assert_eq!(residue_witness(&ms("2 2"), 1).unwrap(), WitnessOutcome::Undecided);
        assert!(matches!(residue_witness(&ms("2 2"), 2).unwrap(), WitnessOutcome::Found(_)));
    }
}
