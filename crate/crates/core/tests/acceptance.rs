//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p ecs-core --test acceptance`; the process exits nonzero if any
//! criterion fails.

use std::collections::BTreeMap;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ecs_core::enumerate::density_string;
use ecs_core::systems::parse_multiset;
use ecs_core::{
    diff, double_system, format_compact, format_json, golden, profile_of, residue_witness,
    run_search, trivial_power_system, verify, verify_bruteforce, witness_bruteforce, Catalog,
    CongruenceClass, CoveringSystem, ModuliProfile, SearchConfig, WitnessOutcome,
};

/// Criterion 1 must finish within this wall time with one worker.
const SMALL_R_BUDGET: Duration = Duration::from_secs(60);
/// Random single-residue mutations of golden witnesses checked in criterion 4.
const MUTATIONS: usize = 500;
const MUTATION_SEED: u64 = 0x05ee_dec5;
/// Brute-force table size for criteria 4 and 5.
const BRUTE_LCM_CAP: u64 = 720;
const SMALL_R_COUNTS: [usize; 12] = [0, 0, 1, 0, 3, 2, 2, 4, 5, 2, 7, 7];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cfg(r_min: u32, r_max: u32, b: u64) -> SearchConfig {
    SearchConfig {
        r_min,
        r_max,
        max_modulus: b,
        ..SearchConfig::default()
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).max(4)
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn exact_match(run: &Catalog, rs: &[u32]) -> Result<(), String> {
    let d = diff(run, golden());
    ensure(d.is_empty(), || format!("diff against reference:\n{d}"))?;
    let want = golden().restrict(rs);
    ensure(run.results == want.results, || "profile lists differ".into())?;
    ensure(run.undecided.is_empty(), || format!("{} undecided", run.undecided.len()))
}

fn small_r() -> Outcome {
    let start = Instant::now();
    let out = run_search(&cfg(2, 13, 150)).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let counts: Vec<usize> = out.catalog.results.values().map(Vec::len).collect();
    ensure(counts == SMALL_R_COUNTS, || format!("counts {counts:?}"))?;
    exact_match(&out.catalog, &(2..=13).collect::<Vec<_>>())?;
    let largest = out.catalog.profiles().map(|p| p.top()).max();
    ensure(largest == Some(72), || format!("largest modulus {largest:?}"))?;
    ensure(took <= SMALL_R_BUDGET, || format!("took {took:.1?}"))?;
    Ok(format!("counts {counts:?}, {took:.1?} with 1 job"))
}

fn full_catalog(bound: u64) -> Result<(Catalog, Duration), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c = SearchConfig {
        jobs: workers(),
        checkpoint_path: Some(dir.path().join("full.jsonl")),
        ..cfg(2, 32, bound)
    };
    let start = Instant::now();
    let out = run_search(&c).map_err(|e| e.to_string())?;
    Ok((out.catalog, start.elapsed()))
}

fn full_reproduction() -> Outcome {
    let (cat, took) = full_catalog(450)?;
    exact_match(&cat, &(2..=32).collect::<Vec<_>>())?;
    let tail: Vec<usize> = (30..=32).map(|r| cat.results[&r].len()).collect();
    ensure(tail == [39, 35, 29], || format!("r 30..32 counts {tail:?}"))?;
    let biggest = ModuliProfile::new(vec![3, 6, 9, 12, 18, 24, 27, 36, 48, 54, 72, 108, 144, 216], 432, 30)
        .map_err(|e| e.to_string())?;
    ensure(cat.results[&30].contains(&biggest), || format!("{biggest} missing"))?;
    Ok(format!("{} profiles, all 31 counts equal, {took:.1?}", cat.total()))
}

fn bound_extension() -> Outcome {
    let (cat, took) = full_catalog(600)?;
    let extra = cat.total() as i64 - golden().total() as i64;
    exact_match(&cat, &(2..=32).collect::<Vec<_>>())?;
    Ok(format!("{extra} additional profiles up to 600, {took:.1?}"))
}

/// One witness per reference profile.
fn golden_witnesses() -> Result<Vec<CoveringSystem>, String> {
    golden()
        .profiles()
        .map(|p| match residue_witness(&p.multiset(), 10_000_000) {
            Ok(WitnessOutcome::Found(w)) => Ok(w),
            other => Err(format!("{p}: {other:?}")),
        })
        .collect()
}

fn mutate(s: &CoveringSystem, rng: &mut StdRng) -> Option<CoveringSystem> {
    let mut classes = s.classes().to_vec();
    let i = rng.gen_range(0..classes.len());
    let m = classes[i].modulus();
    let shift = rng.gen_range(1..m);
    classes[i] = CongruenceClass::new(i128::from((classes[i].residue() + shift) % m), m).ok()?;
    // a mutation may collide with an identical class; such inputs are not systems
    CoveringSystem::new(classes).ok()
}

fn verify_oracle() -> Outcome {
    let witnesses = golden_witnesses()?;
    let mut rng = StdRng::seed_from_u64(MUTATION_SEED);
    let mut mutants = Vec::new();
    while mutants.len() < MUTATIONS {
        let w = &witnesses[rng.gen_range(0..witnesses.len())];
        if let Some(m) = mutate(w, &mut rng) {
            mutants.push(m);
        }
    }
    for s in witnesses.iter().chain(&mutants) {
        let fast = verify(s).map_err(|e| e.to_string())?;
        let slow = verify_bruteforce(s, BRUTE_LCM_CAP).map_err(|e| e.to_string())?;
        ensure(fast.valid == slow.valid && fast.density == slow.density, || {
            format!("{s}: verify {} vs brute force {}", fast.valid, slow.valid)
        })?;
    }
    ensure(witnesses.iter().all(|w| verify(w).is_ok_and(|r| r.valid)), || "golden witness rejected".into())?;
    let still_valid = mutants.iter().filter(|m| verify(m).is_ok_and(|r| r.valid)).count();
    Ok(format!(
        "{} witnesses + {} mutations agree ({still_valid} mutations still valid)",
        witnesses.len(),
        mutants.len()
    ))
}

fn feasibility_oracle() -> Outcome {
    let mut sets: Vec<Vec<u64>> = golden()
        .profiles()
        .filter(|p| p.top() <= 72)
        .map(ModuliProfile::multiset)
        .collect();
    let from_golden = sets.len();
    // infeasible or irregular inputs
    for text in [
        "2 3 6",
        "2 3 12^2",
        "2 3 9 18",
        "2 3 10 15",
        "3 4 6 12^3",
        "3 6^4",
        "3 4 5 60^13",
        "3 9 12 36^17",
        "3 4 8 24^7",
        "5 6 10 15 30^14",
        "4 6 9 36^17",
        "2 9 12 36^11",
    ] {
        let m = parse_multiset(text).map_err(|e| e.to_string())?;
        ensure(density_string(&m) == "1/1", || format!("{text} has density {}", density_string(&m)))?;
        sets.push(m);
    }
    let mut infeasible = 0;
    for m in &sets {
        let fast = residue_witness(m, 10_000_000).map_err(|e| e.to_string())?;
        let slow = witness_bruteforce(m, BRUTE_LCM_CAP).map_err(|e| e.to_string())?;
        ensure(fast.witness().is_some() == slow.is_some(), || format!("{m:?}: {fast:?} vs {slow:?}"))?;
        ensure(fast != WitnessOutcome::Undecided, || format!("{m:?} undecided"))?;
        infeasible += usize::from(slow.is_none());
    }
    let two_three_six = residue_witness(&[2, 3, 6], 10_000_000).map_err(|e| e.to_string())?;
    ensure(two_three_six == WitnessOutcome::Infeasible, || "{2,3,6} not infeasible".into())?;
    Ok(format!(
        "{} multisets ({from_golden} reference, {infeasible} infeasible) agree",
        sets.len()
    ))
}

fn constructions() -> Outcome {
    for r in 1..=20 {
        let s = trivial_power_system(r).map_err(|e| e.to_string())?;
        let top = 1u64 << r;
        let top_count = s.moduli().iter().filter(|&&m| m == top).count();
        let max = s.moduli().into_iter().max();
        ensure(verify(&s).is_ok_and(|v| v.valid) && top_count == 2 && max == Some(top), || {
            format!("trivial {r}: {s}")
        })?;
    }
    let witnesses = golden_witnesses()?;
    for w in &witnesses {
        let d = double_system(w).map_err(|e| e.to_string())?;
        let p = profile_of(w).map_err(|e| e.to_string())?;
        let q = profile_of(&d).map_err(|e| e.to_string())?;
        ensure(verify(&d).is_ok_and(|v| v.valid), || format!("double of {w} invalid"))?;
        ensure(q.repeats() == p.repeats() && q.smallest() == 2, || format!("double of {w}: {q}"))?;
    }
    Ok(format!("trivial r=1..20 and {} doubled witnesses", witnesses.len()))
}

fn search_stdout(extra: &[&str]) -> Result<Vec<u8>, String> {
    let mut args = vec!["search", "--r-min", "2", "--r-max", "13", "--max-modulus", "150"];
    args.extend_from_slice(extra);
    let o = Command::new(env!("CARGO_BIN_EXE_ecs"))
        .args(&args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("{args:?} exited {:?}", o.status))?;
    Ok(o.stdout)
}

fn determinism() -> Outcome {
    let mut seen: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for jobs in ["1", "2", "8"] {
        for format in ["compact", "json"] {
            let out = search_stdout(&["--jobs", jobs, "--format", format])?;
            let first = seen.entry(format).or_insert_with(|| out.clone());
            ensure(*first == out, || format!("{format} output differs at --jobs {jobs}"))?;
        }
    }
    let lib = run_search(&cfg(2, 13, 150)).map_err(|e| e.to_string())?.catalog;
    ensure(seen["compact"] == format_compact(&lib).into_bytes(), || "library compact differs".into())?;
    ensure(seen["json"] == (format_json(&lib) + "\n").into_bytes(), || "library json differs".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ck = dir.path().join("ck.jsonl");
    let ck_arg = ck.to_str().ok_or("non-UTF-8 temp path")?;
    let mut child = Command::new(env!("CARGO_BIN_EXE_ecs"))
        .args(["search", "--r-min", "2", "--r-max", "13", "--max-modulus", "150"])
        .args(["--jobs", "2", "--checkpoint", ck_arg])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let killed_after = loop {
        let cells = std::fs::read_to_string(&ck).map_or(0, |t| t.lines().count().saturating_sub(1));
        if cells >= 20 || child.try_wait().map_err(|e| e.to_string())?.is_some() {
            break cells;
        }
        std::thread::sleep(Duration::from_millis(1));
    };
    let _ = child.kill();
    let _ = child.wait();
    let resumed = search_stdout(&["--jobs", "2", "--checkpoint", ck_arg])?;
    ensure(resumed == seen["compact"], || "resumed output differs".into())?;
    Ok(format!("jobs 1/2/8 identical; resume after kill at {killed_after} cells identical"))
}

fn prune_safety() -> Outcome {
    let mut compared = 0;
    for b in [60, 150] {
        let off = run_search(&cfg(2, 32, b)).map_err(|e| e.to_string())?.catalog;
        let on = run_search(&SearchConfig {
            enable_nz_prune: true,
            ..cfg(2, 32, b)
        })
        .map_err(|e| e.to_string())?
        .catalog;
        ensure(off == on, || format!("catalogs differ at max modulus {b}"))?;
        compared += off.total();
    }
    Ok(format!("nz prune on/off identical at max modulus 60 and 150 ({compared} profiles)"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("small-r reproduction, r 2..13, max modulus 150", small_r),
        ("full catalog, r 2..32, max modulus 450", full_reproduction),
        ("no new systems up to max modulus 600", bound_extension),
        ("verify agrees with brute force", verify_oracle),
        ("residue search agrees with exhaustive search", feasibility_oracle),
        ("trivial and doubling constructions", constructions),
        ("determinism across jobs and kill/resume", determinism),
        ("Newman-Znam prune safety", prune_safety),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
