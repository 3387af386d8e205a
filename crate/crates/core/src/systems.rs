//! Congruence classes, finite systems of them, exact-cover verification and the
//! two classical constructions (the power-of-two family and the add-2 map).
//!
//! Systems cover all of `Z`; since every check is modular this is the same as
//! covering the positive integers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{lcm_checked, Fraction, Natural};
use crate::error::{Error, Result};
use crate::Ratio;

/// The arithmetic progression `residue (mod modulus)`, with `0 <= residue < modulus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CongruenceClass {
    // field order gives the canonical (modulus, residue) ordering
    modulus: u64,
    residue: u64,
}

impl CongruenceClass {
    /// Builds `a (mod m)`, reducing `a` into `[0, m)`.
    pub fn new(residue: i128, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Domain("modulus must be positive".into()));
        }
        Ok(Self {
            modulus,
            residue: residue.rem_euclid(modulus as i128) as u64,
        })
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn contains(&self, x: u64) -> bool {
        x % self.modulus == self.residue
    }

    /// Smallest nonnegative integer in both classes, if any.
    pub fn first_common_point(&self, other: &Self) -> Option<u64> {
        if classes_disjoint(self, other) {
            return None;
        }
        let step = other.modulus / self.modulus.gcd(&other.modulus);
        (0..step)
            .map(|k| self.residue + k * self.modulus)
            .find(|&x| other.contains(x))
    }
}

impl fmt::Display for CongruenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

impl FromStr for CongruenceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let (Some(a), Some("mod"), Some(m), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::Parse(format!("expected `A mod M`, got {s:?}")));
        };
        let a: i128 = a
            .parse()
            .map_err(|_| Error::Parse(format!("bad residue {a:?}")))?;
        let m: u64 = m
            .parse()
            .map_err(|_| Error::Parse(format!("bad modulus {m:?}")))?;
        if m == 0 {
            return Err(Error::Parse("modulus must be positive".into()));
        }
        Self::new(a, m)
    }
}

/// True iff the two progressions share no integer.
pub fn classes_disjoint(c1: &CongruenceClass, c2: &CongruenceClass) -> bool {
    let g = c1.modulus.gcd(&c2.modulus);
    c1.residue % g != c2.residue % g
}

/// A finite set of congruence classes, kept sorted by (modulus, residue).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoveringSystem {
    classes: Vec<CongruenceClass>,
}

impl CoveringSystem {
    pub fn new(mut classes: Vec<CongruenceClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Precondition("a system needs at least one class".into()));
        }
        classes.sort_unstable();
        if let Some(w) = classes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Precondition(format!("duplicate class {}", w[0])));
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[CongruenceClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Moduli in ascending order, with multiplicity.
    pub fn moduli(&self) -> Vec<u64> {
        self.classes.iter().map(|c| c.modulus).collect()
    }

    pub fn lcm(&self) -> Result<u128> {
        self.classes
            .iter()
            .try_fold(1u128, |acc, c| lcm_checked(acc, c.modulus as u128))
    }
}

impl fmt::Display for CoveringSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.classes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for CoveringSystem {
    type Err = Error;

    /// Parses `0 mod 3, 1 mod 6, ...`.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Err(Error::Parse("empty system".into()));
        }
        let classes = s
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<CongruenceClass>>>()?;
        Self::new(classes).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Parses a moduli multiset such as `3 6^4` (an entry `m^k` repeats `m` k times).
pub fn parse_multiset(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        let (m, k) = match tok.split_once('^') {
            Some((m, k)) => (m, k),
            None => (tok, "1"),
        };
        let m: u64 = m
            .parse()
            .map_err(|_| Error::Parse(format!("bad modulus {tok:?}")))?;
        let k: usize = k
            .parse()
            .map_err(|_| Error::Parse(format!("bad repetition {tok:?}")))?;
        if m == 0 || k == 0 {
            return Err(Error::Parse(format!("entries must be positive: {tok:?}")));
        }
        out.extend(std::iter::repeat_n(m, k));
    }
    if out.is_empty() {
        return Err(Error::Parse("empty multiset".into()));
    }
    out.sort_unstable();
    Ok(out)
}

/// Formats a sorted multiset, collapsing runs as `m^k`.
pub fn format_multiset(moduli: &[u64]) -> String {
    let mut sorted = moduli.to_vec();
    sorted.sort_unstable();
    let mut parts = Vec::new();
    for chunk in sorted.chunk_by(|a, b| a == b) {
        match chunk.len() {
            1 => parts.push(chunk[0].to_string()),
            k => parts.push(format!("{}^{k}", chunk[0])),
        }
    }
    parts.join(" ")
}

/// Exact sum of `1/m` over a multiset, on any backing.
pub fn density_of<T: Natural>(moduli: &[u64]) -> Result<Fraction<T>> {
    moduli
        .iter()
        .try_fold(Fraction::<T>::zero(), |acc, &m| acc.add_unit(m))
}

/// Exact density `sum 1/m_i` of a system.
pub fn density(s: &CoveringSystem) -> Result<Ratio> {
    density_of(&s.moduli())
}

/// The moduli fingerprint of a system in which only the largest modulus repeats.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct ModuliProfile {
    // serialised field order is alphabetical
    base: Vec<u64>,
    repeats: u32,
    top: u64,
}

#[derive(Deserialize)]
struct RawProfile {
    base: Vec<u64>,
    repeats: u32,
    top: u64,
}

impl TryFrom<RawProfile> for ModuliProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        Self::new(raw.base, raw.top, raw.repeats)
    }
}

impl ModuliProfile {
    /// Validates: base strictly increasing, every entry below `top`, `repeats >= 2`,
    /// and `sum 1/base + repeats/top = 1`.
    pub fn new(base: Vec<u64>, top: u64, repeats: u32) -> Result<Self> {
        let p = Self::unchecked(base, top, repeats)?;
        let d: Ratio = density_of(&p.multiset())?;
        if !d.is_one() {
            return Err(Error::Precondition(format!(
                "profile {p} has density {d}, not 1"
            )));
        }
        Ok(p)
    }

    /// Structural checks only; the density may differ from 1.
    pub(crate) fn unchecked(base: Vec<u64>, top: u64, repeats: u32) -> Result<Self> {
        if repeats < 2 {
            return Err(Error::NotSingleRepeated(format!(
                "top modulus {top} appears {repeats} time(s)"
            )));
        }
        if base.first() == Some(&0) || top == 0 {
            return Err(Error::Domain("moduli must be positive".into()));
        }
        if base.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NotSingleRepeated(format!(
                "base {base:?} is not strictly increasing"
            )));
        }
        if base.last().is_some_and(|&d| d >= top) {
            return Err(Error::NotSingleRepeated(format!(
                "base {base:?} reaches the top modulus {top}"
            )));
        }
        Ok(Self { base, repeats, top })
    }

    /// Splits a multiset into (distinct base, top repeated r >= 2 times).
    pub fn from_moduli(moduli: &[u64]) -> Result<Self> {
        let mut sorted = moduli.to_vec();
        sorted.sort_unstable();
        let Some(&top) = sorted.last() else {
            return Err(Error::NotSingleRepeated("empty multiset".into()));
        };
        let repeats = sorted.iter().filter(|&&m| m == top).count();
        let base: Vec<u64> = sorted[..sorted.len() - repeats].to_vec();
        if let Some(w) = base.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::NotSingleRepeated(format!(
                "non-maximal modulus {} repeats",
                w[0]
            )));
        }
        Self::new(base, top, repeats as u32)
    }

    pub fn base(&self) -> &[u64] {
        &self.base
    }

    pub fn top(&self) -> u64 {
        self.top
    }

    pub fn repeats(&self) -> u32 {
        self.repeats
    }

    /// Number of distinct moduli (base plus top).
    pub fn distinct(&self) -> usize {
        self.base.len() + 1
    }

    pub fn smallest(&self) -> u64 {
        self.base.first().copied().unwrap_or(self.top)
    }

    /// Full sorted multiset of moduli.
    pub fn multiset(&self) -> Vec<u64> {
        let mut v = self.base.clone();
        v.extend(std::iter::repeat_n(self.top, self.repeats as usize));
        v
    }
}

impl Ord for ModuliProfile {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distinct()
            .cmp(&other.distinct())
            .then_with(|| self.base.cmp(&other.base))
            .then_with(|| self.top.cmp(&other.top))
            .then_with(|| self.repeats.cmp(&other.repeats))
    }
}

impl PartialOrd for ModuliProfile {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModuliProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.base {
            write!(f, "{d} ")?;
        }
        write!(f, "{}^{}", self.top, self.repeats)
    }
}

/// Extracts the profile of a system, failing unless exactly the largest modulus repeats.
pub fn profile_of(s: &CoveringSystem) -> Result<ModuliProfile> {
    ModuliProfile::from_moduli(&s.moduli())
}

/// Outcome of checking a system for exact coverage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub valid: bool,
    pub density: Ratio,
    /// Least-index pair of overlapping classes.
    pub first_conflict: Option<(usize, usize)>,
    /// Smallest nonnegative integer lying in both conflicting classes.
    pub conflict_at: Option<u64>,
    /// Smallest uncovered residue; only the brute-force check fills this in.
    pub first_gap: Option<u64>,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.valid { "VALID" } else { "INVALID" })?;
        write!(f, "density: {}", self.density)?;
        if let Some((i, j)) = self.first_conflict {
            write!(f, "\nconflict: classes {i} and {j}")?;
            if let Some(x) = self.conflict_at {
                write!(f, " at {x}")?;
            }
        }
        if let Some(g) = self.first_gap {
            write!(f, "\ngap: {g}")?;
        }
        Ok(())
    }
}

/// Exact-cover test by pairwise disjointness plus density one.
///
/// Pairwise disjoint classes of total density 1 leave an uncovered set that is a
/// union of classes mod the lcm with density 0, so the cover is exact.
pub fn verify(s: &CoveringSystem) -> Result<VerifyReport> {
    let density = density(s)?;
    let cs = s.classes();
    let first_conflict = (0..cs.len())
        .flat_map(|i| (i + 1..cs.len()).map(move |j| (i, j)))
        .find(|&(i, j)| !classes_disjoint(&cs[i], &cs[j]));
    let conflict_at = first_conflict.and_then(|(i, j)| cs[i].first_common_point(&cs[j]));
    Ok(VerifyReport {
        valid: first_conflict.is_none() && density.is_one(),
        density,
        first_conflict,
        conflict_at,
        first_gap: None,
    })
}

/// Hit-count check over `Z/L`, `L` the lcm of all moduli. Independent of [`verify`].
pub fn verify_bruteforce(s: &CoveringSystem, lcm_cap: u64) -> Result<VerifyReport> {
    let lcm = match s.lcm() {
        Ok(l) => l,
        Err(Error::Overflow) => u128::MAX,
        Err(e) => return Err(e),
    };
    if lcm > lcm_cap as u128 {
        return Err(Error::CapExceeded { lcm, cap: lcm_cap });
    }
    let lcm = lcm as usize;
    let mut hits = vec![0u8; lcm];
    for c in s.classes() {
        for x in (c.residue as usize..lcm).step_by(c.modulus as usize) {
            hits[x] = hits[x].saturating_add(1);
        }
    }
    let conflict_at = hits.iter().position(|&h| h > 1);
    let first_gap = hits.iter().position(|&h| h == 0).map(|x| x as u64);
    let first_conflict = conflict_at.map(|x| {
        let mut owners = s
            .classes()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(x as u64))
            .map(|(i, _)| i);
        (owners.next().unwrap(), owners.next().unwrap())
    });
    Ok(VerifyReport {
        valid: conflict_at.is_none() && first_gap.is_none(),
        density: density(s)?,
        first_conflict,
        conflict_at: conflict_at.map(|x| x as u64),
        first_gap,
    })
}

/// `0 (2), 1 (4), 3 (8), ..., 2^(r-1)-1 (2^r), 2^r-1 (2^r)`; for `r = 1` this is `{0 (2), 1 (2)}`.
pub fn trivial_power_system(r: u32) -> Result<CoveringSystem> {
    if r == 0 {
        return Err(Error::Domain("r must be at least 1".into()));
    }
    if r > 63 {
        return Err(Error::Overflow);
    }
    let mut classes = (1..=r)
        .map(|k| CongruenceClass::new((1i128 << (k - 1)) - 1, 1u64 << k))
        .collect::<Result<Vec<_>>>()?;
    classes.push(CongruenceClass::new((1i128 << r) - 1, 1u64 << r)?);
    CoveringSystem::new(classes)
}

/// The add-2 map: `{0 (2)}` together with `2a+1 (2m)` for every class `a (m)`.
pub fn double_system(s: &CoveringSystem) -> Result<CoveringSystem> {
    if !verify(s)?.valid {
        return Err(Error::Precondition(format!(
            "not an exact covering system: {s}"
        )));
    }
    let mut classes = vec![CongruenceClass::new(0, 2)?];
    for c in s.classes() {
        let m = c.modulus.checked_mul(2).ok_or(Error::Overflow)?;
        classes.push(CongruenceClass::new(2 * c.residue as i128 + 1, m)?);
    }
    CoveringSystem::new(classes)
}
