//! End-to-end acceptance run. Prints one line per criterion and exits non-zero
//! if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use flexserve::oracle::{bf_adequate, bf_exactly_adequate, SmallInstanceBounds};
use flexserve::verify::{enumerate_instances, purchase_suite, rounding_suite, SmallInstance};
use flexserve::{
    decompose_portfolio, decompose_service, demand_duration, diag_f, energy_gap, is_adequate,
    is_exactly_adequate, llf_allocate, llf_allocate_step, majorizes, merge_allocation,
    price_service, profit_with, replay_transfers, revenue_from_demand, rh_transfer_sequence,
    run_gstar, sort_nonincreasing, split_allocation, subgradient_with, weakly_majorizes,
    DecisionPoint, EnergyVector, Execution, LaxityState, MarketModel, Portfolio, ScenarioSet,
    Service,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    failures: Vec<String>,
    detail: String,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn ev(v: &[u64]) -> EnergyVector {
    EnergyVector::new(v.to_vec()).unwrap()
}

fn grid(len: usize, max: u64) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u64>| {
                (0..=max).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

fn wide_bounds() -> SmallInstanceBounds {
    SmallInstanceBounds {
        t_max: 8,
        n_max: 8,
        duration_max: 8,
        supply_max: 8,
        budget: u64::MAX,
    }
}

/// Random instances with `5 ≤ T ≤ 8`. Half of them take their supply from the
/// column sums of a random allocation so that exact adequacy is exercised.
fn random_large_instances(rng: &mut ChaCha8Rng, count: usize) -> Vec<SmallInstance> {
    (0..count)
        .map(|i| {
            let horizon = rng.gen_range(5..=8);
            let rows = rng.gen_range(0..=6);
            let durations: Vec<u64> = (0..rows)
                .map(|_| rng.gen_range(1..=horizon as u64))
                .collect();
            let p = if i % 2 == 0 {
                let mut cols = vec![0u64; horizon];
                for &e in &durations {
                    let mut slots: Vec<usize> = (0..horizon).collect();
                    for k in 0..e as usize {
                        let j = rng.gen_range(k..horizon);
                        slots.swap(k, j);
                        cols[slots[k]] += 1;
                    }
                }
                if i % 4 == 0 {
                    let t = rng.gen_range(0..horizon);
                    cols[t] += 1;
                }
                cols
            } else {
                (0..horizon).map(|_| rng.gen_range(0..=4)).collect()
            };
            SmallInstance { durations, p }
        })
        .collect()
}

fn adequacy_equivalence(exhaustive: &[SmallInstance], random: &[SmallInstance]) -> Verdict {
    let mut v = Verdict::new();
    let default = SmallInstanceBounds::default();
    let wide = wide_bounds();
    let mut exact_hits = 0;
    for (inst, bounds) in exhaustive
        .iter()
        .map(|i| (i, &default))
        .chain(random.iter().map(|i| (i, &wide)))
    {
        let d = inst.demand();
        let truth = bf_adequate(&inst.durations, &inst.p, bounds).unwrap();
        let exact = bf_exactly_adequate(&inst.durations, &inst.p, bounds).unwrap();
        exact_hits += exact as usize;
        v.check(truth == is_adequate(&d, &inst.p).unwrap(), || {
            format!("adequate {inst:?}")
        });
        v.check(exact == is_exactly_adequate(&d, &inst.p).unwrap(), || {
            format!("exact {inst:?}")
        });
    }
    v.detail = format!(
        "{} exhaustive + {} random instances, {exact_hits} exactly adequate",
        exhaustive.len(),
        random.len()
    );
    v
}

fn llf_columns(durations: &[u64], p: &[u64]) -> Vec<Vec<u8>> {
    let mut state = LaxityState::new(durations.len());
    let mut cols = Vec::with_capacity(p.len());
    for &p_t in p {
        let (next, col) = llf_allocate_step(&state, durations, p.len(), p_t);
        cols.push(col);
        state = next;
    }
    cols
}

fn llf_soundness(
    exhaustive: &[SmallInstance],
    random: &[SmallInstance],
    rng: &mut ChaCha8Rng,
) -> Verdict {
    let mut v = Verdict::new();
    let mut adequate = 0;
    for inst in exhaustive.iter().chain(random) {
        if !is_adequate(&inst.demand(), &inst.p).unwrap() {
            continue;
        }
        adequate += 1;
        match llf_allocate(&inst.durations, &inst.p) {
            Ok(m) => v.check(m.is_complete() && m.is_feasible_for(&inst.p), || {
                format!("infeasible {inst:?}")
            }),
            Err(e) => v.check(false, || format!("{e} on {inst:?}")),
        }
    }
    for _ in 0..1000 {
        let horizon = rng.gen_range(2..=8);
        let durations: Vec<u64> = (0..rng.gen_range(1..=6))
            .map(|_| rng.gen_range(1..=horizon as u64))
            .collect();
        let p: Vec<u64> = (0..horizon).map(|_| rng.gen_range(0..=4)).collect();
        let cut = rng.gen_range(0..horizon);
        let mut p2 = p.clone();
        for x in &mut p2[cut + 1..] {
            *x = rng.gen_range(0..=4);
        }
        let a = llf_columns(&durations, &p);
        let b = llf_columns(&durations, &p2);
        v.check(a[..=cut] == b[..=cut], || {
            format!("prefix changed: {durations:?} {p:?} {p2:?}")
        });
    }
    v.detail = format!("{adequate} adequate instances allocated, 1000 causality checks");
    v
}

fn unit_rate_round_trip() -> Verdict {
    let mut v = Verdict::new();
    let mut services = 0;
    for horizon in 1..=4usize {
        for rate in 1..=3u64 {
            for energy in 0..=rate * horizon as u64 {
                services += 1;
                let s = Service::new(energy, rate);
                let direct: BTreeSet<Vec<u64>> = grid(horizon, rate)
                    .into_iter()
                    .filter(|u| u.iter().sum::<u64>() == energy)
                    .collect();
                let mut sums = BTreeSet::from([vec![0u64; horizon]]);
                for k in decompose_service(&s) {
                    let rows: Vec<Vec<u64>> = grid(horizon, 1)
                        .into_iter()
                        .filter(|r| r.iter().sum::<u64>() == k)
                        .collect();
                    sums = sums
                        .iter()
                        .flat_map(|acc| {
                            rows.iter()
                                .map(move |r| acc.iter().zip(r).map(|(a, b)| a + b).collect())
                        })
                        .collect();
                }
                v.check(direct == sums, || {
                    format!("allocation sets differ for {s:?}, T={horizon}")
                });
                for u in &direct {
                    let ok = split_allocation(&s, u)
                        .map(|rows| merge_allocation(&rows, horizon) == *u)
                        .unwrap_or(false);
                    v.check(ok, || format!("round trip failed for {s:?}, u={u:?}"));
                }
            }
        }
    }
    v.detail = format!("{services} services");
    v
}

fn purchase_policy(rng: &mut ChaCha8Rng) -> Verdict {
    let mut v = Verdict::new();
    for _ in 0..10_000 {
        let horizon = rng.gen_range(1..=8);
        let mut d: Vec<u64> = (0..horizon).map(|_| rng.gen_range(0..=6)).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        let y: Vec<u64> = (0..horizon).map(|_| rng.gen_range(0..=3)).collect();
        let r: Vec<u64> = (0..horizon).map(|_| rng.gen_range(0..=3)).collect();
        let profile = run_gstar(&d, &ev(&y), &ev(&r)).unwrap();
        let base: Vec<u64> = y.iter().zip(&r).map(|(a, b)| a + b).collect();
        let gap = energy_gap(&d, &base).unwrap();
        v.check(profile.total_purchase() == gap, || {
            format!("purchase != gap for d={d:?} y={y:?} r={r:?}")
        });
        let mut p = base.clone();
        let mut f = diag_f(&d, &p).unwrap();
        for t in 0..horizon {
            v.check(
                weakly_majorizes(&d[horizon - t - 1..], &profile.q[..=t]).unwrap(),
                || format!("prefix {t} not covered for d={d:?} q={:?}", profile.q),
            );
            p[t] += profile.a[t];
            let next = diag_f(&d, &p).unwrap();
            v.check(next + profile.a[t] == f, || {
                format!("telescoping broke at {t} for d={d:?}")
            });
            f = next;
        }
    }
    let oracle = purchase_suite(&SmallInstanceBounds::default(), Execution::default()).unwrap();
    if let Some(c) = &oracle.counterexample {
        v.failures.push(c.clone());
    }
    v.detail = format!("10000 random runs, {} oracle instances", oracle.cases);
    v
}

fn transfer_sequences() -> Verdict {
    let mut v = Verdict::new();
    let mut pairs = 0;
    for len in 1..=4 {
        let vectors = grid(len, 3);
        for a in &vectors {
            for b in &vectors {
                if !majorizes(a, b).unwrap() {
                    continue;
                }
                pairs += 1;
                let start = sort_nonincreasing(&ev(a));
                let states = rh_transfer_sequence(&start, &ev(b))
                    .and_then(|seq| replay_transfers(&start, &seq));
                let Ok(states) = states else {
                    v.check(false, || format!("no sequence for {a:?} -> {b:?}"));
                    continue;
                };
                let target = sort_nonincreasing(&ev(b));
                v.check(states.last() == Some(&target), || {
                    format!("replay misses {b:?} from {a:?}")
                });
                for s in &states {
                    let sandwiched = majorizes(a, s).unwrap() && majorizes(s, b).unwrap();
                    v.check(sandwiched, || format!("{s:?} escapes [{a:?}, {b:?}]"));
                }
            }
        }
    }
    v.detail = format!("{pairs} majorizing pairs");
    v
}

fn random_market(rng: &mut ChaCha8Rng, horizon: usize) -> (MarketModel, ScenarioSet) {
    let mm = MarketModel::new(
        horizon,
        (0..horizon).map(|_| rng.gen_range(0.0..30.0)).collect(),
        rng.gen_range(0.0..10.0),
        rng.gen_range(0.0..20.0),
    )
    .unwrap();
    let rows = (0..rng.gen_range(1..=4))
        .map(|_| {
            ev(&(0..horizon)
                .map(|_| rng.gen_range(0..=3))
                .collect::<Vec<_>>())
        })
        .collect();
    (mm, ScenarioSet::uniform(horizon, rows).unwrap())
}

fn random_point(rng: &mut ChaCha8Rng, horizon: usize) -> DecisionPoint {
    let mut d: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.0..4.0)).collect();
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let y = (0..horizon).map(|_| rng.gen_range(0.0..4.0)).collect();
    DecisionPoint::new(d, y).unwrap()
}

fn concavity(rng: &mut ChaCha8Rng) -> Verdict {
    let mut v = Verdict::new();
    let seq = Execution::Sequential;
    for _ in 0..1000 {
        let horizon = rng.gen_range(1..=4);
        let (mm, s) = random_market(rng, horizon);
        let a = random_point(rng, horizon);
        let b = random_point(rng, horizon);
        let mid = DecisionPoint::new(
            a.d.iter().zip(&b.d).map(|(x, y)| 0.5 * (x + y)).collect(),
            a.y.iter().zip(&b.y).map(|(x, y)| 0.5 * (x + y)).collect(),
        )
        .unwrap();
        let ja = profit_with(&mm, &a, &s, seq).unwrap();
        let jb = profit_with(&mm, &b, &s, seq).unwrap();
        let jm = profit_with(&mm, &mid, &s, seq).unwrap();
        v.check(jm >= 0.5 * (ja + jb) - 1e-9, || {
            format!("midpoint below chord: {mm:?}")
        });
        let g = subgradient_with(&mm, &a, &s, seq).unwrap();
        v.check(jb <= ja + g.dot_diff(&a, &b) + 1e-9, || {
            format!("supergradient bound fails: {mm:?}")
        });
    }

    let h = 1e-5;
    let mut tested = 0;
    let mut drawn = 0;
    while tested < 100 {
        drawn += 1;
        let horizon = rng.gen_range(1..=4);
        let (mm, s) = random_market(rng, horizon);
        let x = random_point(rng, horizon);
        if x.d.windows(2).any(|w| w[0] - w[1] < 1e-3) || x.d.iter().chain(&x.y).any(|&c| c < 1e-3) {
            continue;
        }
        let g = subgradient_with(&mm, &x, &s, seq).unwrap();
        let shifted = |c: usize, delta: f64| {
            let mut z = x.clone();
            if c < horizon {
                z.d[c] += delta;
            } else {
                z.y[c - horizon] += delta;
            }
            z
        };
        let kink_free = (0..2 * horizon).all(|c| {
            [-2.0 * h, 2.0 * h]
                .iter()
                .all(|&delta| subgradient_with(&mm, &shifted(c, delta), &s, seq).unwrap() == g)
        });
        if !kink_free {
            continue;
        }
        tested += 1;
        for c in 0..2 * horizon {
            let fd = (profit_with(&mm, &shifted(c, h), &s, seq).unwrap()
                - profit_with(&mm, &shifted(c, -h), &s, seq).unwrap())
                / (2.0 * h);
            let exact = if c < horizon {
                g.d[c]
            } else {
                g.y[c - horizon]
            };
            v.check((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), || {
                format!("coordinate {c}: difference {fd}, supergradient {exact}")
            });
        }
    }
    v.detail = format!("1000 pairs, {tested} kink-free points of {drawn} drawn");
    v
}

fn rounding_gap() -> Verdict {
    let mut v = Verdict::new();
    let outcome = rounding_suite(50, 2, 20_240_601, Execution::default()).unwrap();
    if let Some(c) = outcome.counterexample {
        v.failures.push(c);
    }
    v.detail = format!("{} markets", outcome.cases);
    v
}

fn consistency(rng: &mut ChaCha8Rng) -> Verdict {
    let mut v = Verdict::new();
    for _ in 0..10_000 {
        let horizon = rng.gen_range(1..=10);
        let mut d: Vec<u64> = (0..horizon).map(|_| rng.gen_range(0..=8)).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        let x: Vec<u64> = (0..horizon).map(|_| rng.gen_range(0..=8)).collect();
        v.check(
            diag_f(&d, &x).unwrap() == energy_gap(&d, &x).unwrap(),
            || format!("d={d:?} x={x:?}"),
        );
    }
    for _ in 0..1000 {
        let horizon = rng.gen_range(1..=6);
        let mm = MarketModel::new(
            horizon,
            (0..horizon)
                .map(|_| rng.gen_range(0..=100) as f64)
                .collect(),
            1.0,
            1.0,
        )
        .unwrap();
        let services = (0..rng.gen_range(0..=6))
            .map(|_| {
                let m = rng.gen_range(1..=4);
                Service::new(rng.gen_range(0..=m * horizon as u64), m)
            })
            .collect();
        let c = Portfolio::new(horizon, services).unwrap();
        let direct: f64 = c.services.iter().map(|s| price_service(&mm, s)).sum();
        let via_d = revenue_from_demand(&mm, &demand_duration(&decompose_portfolio(&c))).unwrap();
        v.check(direct == via_d, || format!("{direct} vs {via_d} for {c:?}"));
    }
    v.detail = "10000 gap pairs, 1000 portfolios".into();
    v
}

fn determinism(dir: &Path) -> Verdict {
    let mut v = Verdict::new();
    let bin = env!("CARGO_BIN_EXE_flexserve");
    let market = dir.join("market.json");
    let portfolio = dir.join("portfolio.json");
    let scenarios = dir.join("scenarios.csv");
    std::fs::write(
        &market,
        r#"{"horizon": 4, "pi_unit": [3.5, 7, 9.25, 12], "c_da": 1.5, "c_rt": 4, "d_max": 4, "y_max": 4}"#,
    )
    .unwrap();
    std::fs::write(
        &portfolio,
        r#"{"horizon": 4, "services": [{"E": 6, "m": 2}, {"E": 3, "m": 1}, {"E": 5, "m": 3}]}"#,
    )
    .unwrap();
    std::fs::write(
        &scenarios,
        "weight:0.5,1,2,0,3\nweight:0.25,2,2,2,2\nweight:0.25,0,0,4,1\n",
    )
    .unwrap();

    let runs: [Vec<&str>; 4] = [
        vec![
            "simulate",
            "--market",
            market.to_str().unwrap(),
            "--portfolio",
            portfolio.to_str().unwrap(),
            "--generate",
            "25",
            "--seed",
            "17",
            "--y",
            "1,1,0,2",
        ],
        vec![
            "simulate",
            "--market",
            market.to_str().unwrap(),
            "--portfolio",
            portfolio.to_str().unwrap(),
            "--scenarios",
            scenarios.to_str().unwrap(),
        ],
        vec![
            "optimize",
            "--market",
            market.to_str().unwrap(),
            "--generate",
            "25",
            "--seed",
            "17",
        ],
        vec![
            "optimize",
            "--market",
            market.to_str().unwrap(),
            "--scenarios",
            scenarios.to_str().unwrap(),
        ],
    ];
    for args in &runs {
        let outputs: Vec<Vec<u8>> = (0..3)
            .map(|_| {
                let out = Command::new(bin).args(args).output().unwrap();
                assert!(
                    out.status.success(),
                    "{}",
                    String::from_utf8_lossy(&out.stderr)
                );
                out.stdout
            })
            .collect();
        v.check(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("output differs for {args:?}")
        });
    }
    v.detail = format!("{} commands, 3 runs each", runs.len());
    v
}

type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Verdict + 'a>);

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let exhaustive = enumerate_instances(&SmallInstanceBounds::default()).unwrap();
    let random = random_large_instances(&mut rng, 10_000);
    let dir = tempfile::TempDir::new().unwrap();

    let criteria: Vec<Criterion> = vec![
        (
            "adequacy predicates agree with brute force",
            Box::new(|| adequacy_equivalence(&exhaustive, &random)),
        ),
        (
            "least-laxity allocation is complete and causal",
            Box::new(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(2);
                llf_soundness(&exhaustive, &random, &mut rng)
            }),
        ),
        (
            "unit-rate split and merge are inverse",
            Box::new(unit_rate_round_trip),
        ),
        (
            "online purchases equal the energy gap",
            Box::new(|| purchase_policy(&mut ChaCha8Rng::seed_from_u64(4))),
        ),
        (
            "transfer sequences reach the target",
            Box::new(transfer_sequences),
        ),
        (
            "objective is concave with a valid supergradient",
            Box::new(|| concavity(&mut ChaCha8Rng::seed_from_u64(6))),
        ),
        (
            "rounding stays within the certificate",
            Box::new(rounding_gap),
        ),
        (
            "gap and revenue identities hold",
            Box::new(|| consistency(&mut ChaCha8Rng::seed_from_u64(8))),
        ),
        (
            "command output is deterministic",
            Box::new(|| determinism(dir.path())),
        ),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        let status = if verdict.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {}: {status}  {name} ({}, {secs:.1}s)",
            i + 1,
            verdict.detail
        );
        if let Some(first) = verdict.failures.first() {
            failed += 1;
            println!("    {} failures, first: {first}", verdict.failures.len());
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
