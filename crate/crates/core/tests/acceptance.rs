//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use dynkin::dynkin::{check_assumptions, evaluate_j, verify_equilibrium, EquilibriumResult};
use dynkin::gcc::{claim_payoff_expectation, price_claim, GameClaim, UtilityFunction};
use dynkin::generate::{generate_game, random_claim, random_tree, random_zero_sum_game, rng};
use dynkin::oracle::{
    brute_force_neps, claim_saddle_value, enumerate_stopping_times, zero_sum_value,
};
use dynkin::snell::{expected_stopped_value, snell_envelope};
use dynkin::tree::{AdaptedProcess, FiltrationTree, NodeId};
use dynkin::{iterate_equilibrium, BigRational, DynkinGame, TieConvention};
use rand::Rng;

type Game = DynkinGame<BigRational>;
type Outcome = Result<String, String>;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tie_for(i: u64) -> TieConvention {
    if i.is_multiple_of(2) {
        TieConvention::P1Priority
    } else {
        TieConvention::P2Priority
    }
}

struct Run {
    label: String,
    game: Game,
    result: EquilibriumResult<BigRational>,
}

/// Criterion-1 suite: 500 generated games, depths 1 to 10, both ties.
fn soundness_suite() -> Result<Vec<Run>, String> {
    (0..500u64)
        .map(|i| {
            let depth = 1 + (i % 10) as usize;
            let (game, _) =
                generate_game(depth, 1000 + i, tie_for(i / 10)).map_err(|e| e.to_string())?;
            let result =
                iterate_equilibrium(&game).map_err(|e| format!("seed {}: {e}", 1000 + i))?;
            Ok(Run {
                label: format!("depth {depth} seed {}", 1000 + i),
                game,
                result,
            })
        })
        .collect()
}

/// Criterion-2 suite: 100 generated games on depth-3 binary trees.
fn oracle_suite() -> Result<Vec<Run>, String> {
    (0..100u64)
        .map(|i| {
            let (game, _) = generate_game(3, 5000 + i, tie_for(i)).map_err(|e| e.to_string())?;
            let result =
                iterate_equilibrium(&game).map_err(|e| format!("seed {}: {e}", 5000 + i))?;
            Ok(Run {
                label: format!("depth 3 seed {}", 5000 + i),
                game,
                result,
            })
        })
        .collect()
}

fn criterion_1(runs: &[Run]) -> Outcome {
    let mut max_rounds = 0;
    for r in runs {
        let tree = r.game.tree();
        let bound = 2 * (tree.horizon() + 1) * tree.leaves().len() + 4;
        ensure(r.result.iterations <= bound, || {
            format!(
                "{}: {} rounds > bound {bound}",
                r.label, r.result.iterations
            )
        })?;
        max_rounds = max_rounds.max(r.result.iterations);
        let report = verify_equilibrium(&r.game, &r.result).map_err(|e| e.to_string())?;
        ensure(report.is_empty(), || {
            format!("{}: {:?}", r.label, report.issues)
        })?;
        ensure(
            report.best_response1 == r.result.j1_star && report.best_response2 == r.result.j2_star,
            || format!("{}: best responses differ from J*", r.label),
        )?;
    }
    Ok(format!(
        "{} games verified exactly, at most {max_rounds} rounds",
        runs.len()
    ))
}

fn criterion_2(runs: &[Run]) -> Outcome {
    let mut pairs = 0;
    for r in runs {
        let times = enumerate_stopping_times(r.game.tree()).map_err(|e| e.to_string())?;
        ensure(times.len() == 26, || {
            format!("{}: {} stopping times", r.label, times.len())
        })?;
        let (t1, t2) = (&r.result.tau1_star, &r.result.tau2_star);
        for t in &times {
            let (d1, _) = evaluate_j(&r.game, t, t2).map_err(|e| e.to_string())?;
            let (_, d2) = evaluate_j(&r.game, t1, t).map_err(|e| e.to_string())?;
            ensure(d1 <= r.result.j1_star, || {
                format!("{}: player 1 deviation {t} earns {d1}", r.label)
            })?;
            ensure(d2 <= r.result.j2_star, || {
                format!("{}: player 2 deviation {t} earns {d2}", r.label)
            })?;
        }
        let list = brute_force_neps(&r.game).map_err(|e| e.to_string())?;
        pairs += list.pairs_scanned;
        ensure(list.contains_pair(t1, t2), || {
            format!("{}: pair missing from brute-force list", r.label)
        })?;
    }
    Ok(format!("{} games, {pairs} pairs scanned", runs.len()))
}

fn criterion_3(runs: &[&Run]) -> Outcome {
    let mut steps = 0;
    for r in runs {
        let tree = r.game.tree();
        let entries = &r.result.trace.entries;
        for w in entries.windows(3) {
            let ok = w[2]
                .tau
                .pointwise_leq(&w[0].tau, tree)
                .map_err(|e| e.to_string())?;
            ensure(ok, || {
                format!("{}: τ_{} ≰ τ_{}", r.label, w[2].index, w[0].index)
            })?;
            steps += 1;
        }
    }
    Ok(format!("{steps} trace steps over {} runs", runs.len()))
}

/// On every path where `τ_n` and `τ_{n−1}` stop at the same depth, all
/// `τ_m` with `m ≤ n` stop at the horizon.
fn criterion_4(runs: &[&Run]) -> Outcome {
    let mut events = 0;
    for r in runs {
        let tree = r.game.tree();
        let depths: Vec<Vec<usize>> = r
            .result
            .trace
            .entries
            .iter()
            .map(|e| e.tau.leaf_depths(tree))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let h = tree.horizon();
        for n in 1..depths.len() {
            for (leaf, (now, before)) in depths[n].iter().zip(&depths[n - 1]).enumerate() {
                if now == before {
                    events += 1;
                    ensure((0..=n).all(|m| depths[m][leaf] == h), || {
                        format!(
                            "{}: τ_{} = τ_{} on leaf path {leaf} before the horizon",
                            r.label,
                            n + 1,
                            n
                        )
                    })?;
                }
            }
        }
    }
    Ok(format!("{events} equal-stop events, all at the horizon"))
}

/// Each odd iterate is a best response to the preceding even one, and each
/// even iterate to the preceding odd one, over every enumerated deviation.
fn criterion_5(runs: &[Run]) -> Outcome {
    let mut checks = 0usize;
    for r in runs {
        let work = if r.result.players_swapped {
            r.game.swap_players()
        } else {
            r.game.clone()
        };
        let times = enumerate_stopping_times(work.tree()).map_err(|e| e.to_string())?;
        let entries = &r.result.trace.entries;
        let mut k = 1;
        while k + 2 < entries.len() {
            let (even, odd, next_even) =
                (&entries[k].tau, &entries[k + 1].tau, &entries[k + 2].tau);
            let (best1, _) = evaluate_j(&work, odd, even).map_err(|e| e.to_string())?;
            let (_, best2) = evaluate_j(&work, odd, next_even).map_err(|e| e.to_string())?;
            for t in &times {
                let (d1, _) = evaluate_j(&work, t, even).map_err(|e| e.to_string())?;
                let (_, d2) = evaluate_j(&work, odd, t).map_err(|e| e.to_string())?;
                ensure(d1 <= best1, || {
                    format!("{}: step {} beaten by {t}", r.label, entries[k + 1].index)
                })?;
                ensure(d2 <= best2, || {
                    format!("{}: step {} beaten by {t}", r.label, entries[k + 2].index)
                })?;
                checks += 2;
            }
            k += 2;
        }
    }
    Ok(format!("{checks} deviation checks"))
}

fn random_process(r: &mut impl Rng, tree: &FiltrationTree) -> AdaptedProcess<BigRational> {
    AdaptedProcess::from_fn(tree, |_| {
        q(r.gen_range(-32..=32), [1, 2, 4][r.gen_range(0..3)])
    })
}

fn criterion_6() -> Outcome {
    let mut r = rng(606);
    let mut enumerated = 0;
    for i in 0..200 {
        let depth = 1 + i % 6;
        let tree = if i % 2 == 0 {
            random_tree(&mut r, depth).map_err(|e| e.to_string())?
        } else {
            FiltrationTree::binomial(depth, &q(r.gen_range(1..=3), 4)).map_err(|e| e.to_string())?
        };
        let u = random_process(&mut r, &tree);
        let s = snell_envelope(&tree, &u).map_err(|e| e.to_string())?;
        let w = &s.envelope;
        let stops = s.first_hit.stop_map(&tree).map_err(|e| e.to_string())?;
        for v in tree.nodes() {
            ensure(w[v] >= u[v], || format!("instance {i}: W < U at node {v}"))?;
            if tree.is_leaf(v) {
                continue;
            }
            let cont: BigRational = tree
                .children(v)
                .iter()
                .map(|&c| tree.edge_prob(c) * &w[c])
                .sum();
            ensure(w[v] >= cont, || {
                format!("instance {i}: not a supermartingale at node {v}")
            })?;
            if stops[v.index()].is_none() {
                ensure(w[v] == cont, || {
                    format!("instance {i}: not a martingale before τ* at node {v}")
                })?;
            }
        }
        let earned = expected_stopped_value(&tree, &u, &s.first_hit).map_err(|e| e.to_string())?;
        ensure(earned == s.value_at_root, || {
            format!("instance {i}: E[U_τ*] ≠ W(root)")
        })?;
        if depth <= 3 {
            let best = enumerate_stopping_times(&tree)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|t| expected_stopped_value(&tree, &u, t).unwrap())
                .max()
                .unwrap();
            ensure(best == s.value_at_root, || {
                format!("instance {i}: enumerated max {best} ≠ W(root)")
            })?;
            enumerated += 1;
        }
    }
    Ok(format!(
        "200 processes, {enumerated} checked by enumeration"
    ))
}

fn criterion_7() -> Outcome {
    let mut r = rng(707);
    let mut saddles = 0;
    for i in 0..200 {
        let depth = 1 + i % 8;
        let tree = if i % 2 == 0 && depth <= 6 {
            random_tree(&mut r, depth).map_err(|e| e.to_string())?
        } else {
            FiltrationTree::binomial(depth, &q(r.gen_range(1..=3), 4)).map_err(|e| e.to_string())?
        };
        let game = random_zero_sum_game(&mut r, Arc::new(tree)).map_err(|e| e.to_string())?;
        let result = iterate_equilibrium(&game).map_err(|e| format!("instance {i}: {e}"))?;
        let value = zero_sum_value(&game).map_err(|e| e.to_string())?;
        ensure(result.j1_star == value, || {
            format!("instance {i}: J1* = {} but value {value}", result.j1_star)
        })?;
        if depth <= 3 {
            let (t1, t2) = (&result.tau1_star, &result.tau2_star);
            for t in enumerate_stopping_times(game.tree()).map_err(|e| e.to_string())? {
                let (against_2, _) = evaluate_j(&game, &t, t2).map_err(|e| e.to_string())?;
                let (against_1, _) = evaluate_j(&game, t1, &t).map_err(|e| e.to_string())?;
                ensure(against_2 <= value && value <= against_1, || {
                    format!("instance {i}: not a saddle at {t}")
                })?;
            }
            saddles += 1;
        }
    }
    Ok(format!(
        "200 zero-sum games match the minimax value, {saddles} saddle checks"
    ))
}

/// Saddle value of `E[Γ]` by enumeration: the buyer maximizes over `σ`
/// the seller's minimum over `τ`.
fn enumerated_claim_value(claim: &GameClaim) -> Result<BigRational, String> {
    let times = enumerate_stopping_times(claim.tree()).map_err(|e| e.to_string())?;
    let mut best: Option<BigRational> = None;
    for sigma in &times {
        let mut worst: Option<BigRational> = None;
        for tau in &times {
            let v = claim_payoff_expectation(claim, tau, sigma).map_err(|e| e.to_string())?;
            worst = Some(worst.map_or(v.clone(), |w| w.min(v)));
        }
        let w = worst.unwrap();
        best = Some(best.map_or(w.clone(), |b| b.max(w)));
    }
    Ok(best.unwrap())
}

fn c1() -> GameClaim {
    let t = Arc::new(FiltrationTree::binomial(1, &q(1, 2)).unwrap());
    let p = |v: [i64; 3]| AdaptedProcess::new(&t, v.iter().map(|&x| q(x, 1)).collect()).unwrap();
    let xi = [(NodeId(1), q(2, 1)), (NodeId(2), q(0, 1))]
        .into_iter()
        .collect();
    let id = UtilityFunction::identity();
    GameClaim::new(
        Arc::clone(&t),
        p([1, 2, 0]),
        p([3, 2, 0]),
        xi,
        id.clone(),
        id,
    )
    .unwrap()
}

fn criterion_8() -> Outcome {
    let quote = price_claim::<BigRational>(&c1(), 0.0).map_err(|e| e.to_string())?;
    ensure(
        quote.seller_price == q(1, 1) && quote.buyer_price == q(1, 1),
        || format!("C1 prices {} / {}", quote.seller_price, quote.buyer_price),
    )?;
    let mut r = rng(808);
    let mut enumerated = 0;
    for i in 0..100 {
        let depth = 1 + i % 6;
        let tree = if i % 2 == 0 {
            random_tree(&mut r, depth).map_err(|e| e.to_string())?
        } else {
            FiltrationTree::binomial(depth, &q(r.gen_range(1..=3), 4)).map_err(|e| e.to_string())?
        };
        let id = UtilityFunction::identity();
        let claim =
            random_claim(&mut r, Arc::new(tree), id.clone(), id).map_err(|e| e.to_string())?;
        let quote =
            price_claim::<BigRational>(&claim, 0.0).map_err(|e| format!("claim {i}: {e}"))?;
        let value = claim_saddle_value(&claim);
        ensure(quote.seller_price == quote.buyer_price, || {
            format!(
                "claim {i}: seller {} ≠ buyer {}",
                quote.seller_price, quote.buyer_price
            )
        })?;
        ensure(quote.buyer_price == value, || {
            format!(
                "claim {i}: price {} ≠ saddle value {value}",
                quote.buyer_price
            )
        })?;
        if depth <= 2 {
            let brute = enumerated_claim_value(&claim)?;
            ensure(brute == value, || {
                format!("claim {i}: enumerated value {brute} ≠ {value}")
            })?;
            enumerated += 1;
        }
    }
    Ok(format!(
        "C1 prices at 1; 100 claims priced at the saddle value, {enumerated} enumerated"
    ))
}

/// Frozen output of `gen --depth 1 --seed 7`.
const GEN_D1_S7: &str = include_str!("data/gen_d1_s7.json");

const G1: &str = r#"{
  "horizon": 1,
  "tree": {"kind": "binomial", "depth": 1, "p_up": "1/2"},
  "processes": {
    "X1": {"0": "2", "1": "3", "2": "0"},
    "Y1": {"0": "3", "1": "3", "2": "0"},
    "X2": {"0": "0", "1": "2", "2": "2"},
    "Y2": {"0": "1", "1": "2", "2": "2"}
  },
  "tie": "p1"
}"#;

fn binary(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dynkin"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn in_process(args: &[&str]) -> (i32, Vec<u8>) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = dynkin::cli::run(
        std::iter::once("dynkin").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, out)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (depth, seed) in [(1, 7), (2, 7), (5, 11), (8, 3), (12, 99)] {
        let args = [
            "gen",
            "--depth",
            &depth.to_string(),
            "--seed",
            &seed.to_string(),
        ]
        .map(String::from);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = binary(&args)?;
        let b = binary(&args)?;
        let c = in_process(&args);
        ensure(a.0 == 0 && a == b && a == c, || {
            format!("gen depth {depth} seed {seed} differs between runs")
        })?;
        if (depth, seed) == (1, 7) {
            ensure(a.1 == GEN_D1_S7.as_bytes(), || {
                "gen --depth 1 --seed 7 differs from the frozen file".into()
            })?;
        }
        let path = dir.path().join(format!("g{depth}_{seed}.json"));
        std::fs::write(&path, &a.1).map_err(|e| e.to_string())?;
        let p = path.to_str().unwrap();
        let s1 = binary(&["solve", p])?;
        let s2 = binary(&["solve", p])?;
        let s3 = in_process(&["solve", p]);
        ensure(s1.0 == 0 && s1 == s2 && s1 == s3, || {
            format!("solve of {p} differs between runs")
        })?;
        files += 1;
    }
    let g1 = dir.path().join("g1.json");
    std::fs::write(&g1, G1).map_err(|e| e.to_string())?;
    let (code, out) = binary(&["solve", g1.to_str().unwrap()])?;
    let report: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    ensure(
        code == 0 && report["tau1_star"] == serde_json::json!([0]),
        || "G1 report changed".into(),
    )?;
    ensure(report["J1_star"] == "2" && report["J2_star"] == "1", || {
        "G1 values changed".into()
    })?;
    Ok(format!(
        "{files} generated files and their solve reports are byte-identical across runs"
    ))
}

fn criterion_10(runs: &[Run]) -> Outcome {
    let mut worst = 0.0f64;
    for r in runs {
        let fgame = r.game.to_float();
        let f = iterate_equilibrium(&fgame).map_err(|e| format!("{}: {e}", r.label))?;
        ensure(
            f.tau1_star == r.result.tau1_star && f.tau2_star == r.result.tau2_star,
            || format!("{}: float regions differ", r.label),
        )?;
        let d1 = (f.j1_star - dynkin::Scalar::to_f64(&r.result.j1_star)).abs();
        let d2 = (f.j2_star - dynkin::Scalar::to_f64(&r.result.j2_star)).abs();
        worst = worst.max(d1).max(d2);
        ensure(d1 <= 1e-9 && d2 <= 1e-9, || {
            format!("{}: |ΔJ| = {}", r.label, d1.max(d2))
        })?;
    }
    Ok(format!(
        "{} games, regions identical, max |ΔJ| = {worst:e}",
        runs.len()
    ))
}

fn report(n: usize, name: &str, start: Instant, outcome: Outcome, failed: &mut bool) {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => println!("criterion {n:>2} {name}: PASS ({detail}; {secs:.1}s)"),
        Err(why) => {
            *failed = true;
            println!("criterion {n:>2} {name}: FAIL ({why}; {secs:.1}s)");
        }
    }
}

fn main() -> ExitCode {
    let mut failed = false;

    let start = Instant::now();
    let suite = soundness_suite();
    let sound = suite
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|runs| criterion_1(runs));
    report(1, "equilibrium soundness", start, sound, &mut failed);

    let start = Instant::now();
    let small = oracle_suite();
    let agree = small
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|runs| criterion_2(runs));
    report(2, "brute-force agreement", start, agree, &mut failed);

    let all: Vec<&Run> = match (&suite, &small) {
        (Ok(a), Ok(b)) => a.iter().chain(b.iter()).collect(),
        _ => Vec::new(),
    };
    let missing = || Err::<String, _>("suites of criteria 1-2 did not run".to_string());
    let start = Instant::now();
    let mono = if all.is_empty() {
        missing()
    } else {
        criterion_3(&all)
    };
    report(3, "monotone iterates", start, mono, &mut failed);

    let start = Instant::now();
    let collapse = if all.is_empty() {
        missing()
    } else {
        criterion_4(&all)
    };
    report(4, "collapse to the horizon", start, collapse, &mut failed);

    let start = Instant::now();
    let local = small
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|runs| criterion_5(runs));
    report(5, "iterates are best responses", start, local, &mut failed);

    let start = Instant::now();
    report(6, "snell envelope", start, criterion_6(), &mut failed);

    let start = Instant::now();
    report(7, "zero-sum reduction", start, criterion_7(), &mut failed);

    let start = Instant::now();
    report(
        8,
        "risk-neutral claim prices",
        start,
        criterion_8(),
        &mut failed,
    );

    let start = Instant::now();
    report(9, "reproducibility", start, criterion_9(), &mut failed);

    let start = Instant::now();
    let fidelity = suite
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|runs| criterion_10(runs));
    report(10, "float-mode fidelity", start, fidelity, &mut failed);

    for r in suite.iter().flatten().chain(small.iter().flatten()) {
        assert!(check_assumptions(&r.game).is_empty());
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
