//! One line per acceptance criterion, then a verdict that tolerates only
//! the check known to fail at every finite scale.

use std::sync::Arc;
use std::time::Instant;

use efgame::constructions::{build_s2, build_s3, build_s4, BuildOptions, Caps, Construction, Mutations, PresetConfig};
use efgame::game::{parse_jsonl, Game, GameVariant};
use efgame::gf2_models::GroupElement;
use efgame::strategies::{play, AisAgent, IsoStrategy, RandomAis};
use efgame::trees::{LocalFamily, NodeId, Tree};
use efgame::verify::{run_suite, SuiteConfig, SuiteReport, SUITES};
use efgame::{CardinalProfile, Mode, Result};
use serde_json::json;

const FINITE_SCALE_FAILURES: [&str; 1] = ["W: some bound in W_j covers any admissible domain"];

struct Line {
    name: &'static str,
    passed: bool,
    detail: String,
    secs: f64,
}

fn line(name: &'static str, start: Instant, passed: bool, detail: String) -> Line {
    Line { name, passed, detail, secs: start.elapsed().as_secs_f64() }
}

fn failing(r: &SuiteReport, only: impl Fn(&str) -> bool) -> Vec<String> {
    r.checks.iter().filter(|c| only(&c.name) && !c.passed()).map(|c| c.name.clone()).collect()
}

fn suite_line(name: &'static str, r: &SuiteReport, only: impl Fn(&str) -> bool) -> Line {
    let start = Instant::now() - std::time::Duration::from_millis(r.elapsed_ms);
    let selected = r.checks.iter().filter(|c| only(&c.name)).count();
    let bad = failing(r, &only);
    let detail = if bad.is_empty() { format!("{selected} checks") } else { format!("failing: {}", bad.join("; ")) };
    line(name, start, selected > 0 && bad.is_empty(), detail)
}

fn is_gf2_check(name: &str) -> bool {
    name.starts_with("pair membership") || name.starts_with("automorphism space") || name.starts_with("isomorphism question")
}

/// Over-budget sets first at every stage, so traces carry rejections.
struct Overreach {
    inner: RandomAis,
    tried: Option<u32>,
}

impl AisAgent for Overreach {
    fn node(&mut self, game: &Game) -> Result<Option<NodeId>> {
        self.inner.node(game)
    }

    fn sets(&mut self, game: &Game) -> Result<(Vec<GroupElement>, Vec<GroupElement>)> {
        if self.tried != Some(game.stage()) {
            self.tried = Some(game.stage());
            let param = &game.m1().param;
            let a1 = (0..=game.budget()).map(|k| param.zero(k % param.num_sorts())).collect();
            return Ok((a1, Vec::new()));
        }
        self.inner.sets(game)
    }
}

fn determinism_cases() -> Result<Vec<(String, Construction, Arc<Tree>, GameVariant)>> {
    let mut out = Vec::new();
    let s1 = PresetConfig::s1_minimal();
    out.push(("s1 minimal".into(), s1.build(Mode::default())?, Arc::new(s1.game_tree()?), GameVariant::FixedBudget { mu: 2 }));

    let path2 = Tree::from_parents(&[None, Some(0)])?;
    let fam = LocalFamily::embed(&path2, 4)?;
    let opts = BuildOptions::with_caps(Caps { max_u: 2, ..Caps::default() });
    let s2 = build_s2(&CardinalProfile::new(vec![0, 2, 4])?, &fam, &opts)?;
    out.push(("s2 <0,2,4>".into(), s2, Arc::new(fam.family_tree()?), GameVariant::FixedBudget { mu: 1 }));

    let small = BuildOptions::with_caps(Caps { max_u: 1, max_lambda_set: 1, max_fn_size: 1, ..Caps::default() });
    let cherry = Tree::from_parents(&[None, Some(0), Some(0)])?;
    out.push(("s3 cherry".into(), build_s3(3, &cherry, &small)?, Arc::new(cherry.clone()), GameVariant::FixedBudget { mu: 3 }));
    let path3 = Tree::from_parents(&[None, Some(0), Some(1)])?;
    let s4 = build_s4(&CardinalProfile::regular(3)?, &path3, &small)?;
    out.push(("s4 path".into(), s4, Arc::new(path3), GameVariant::Star));
    Ok(out)
}

/// Plays seeded games, replays each trace and compares the re-emitted text.
fn determinism() -> Result<(usize, Vec<String>)> {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (name, c, tree, variant) in determinism_cases()? {
        for seed in 0..12u64 {
            let run = || -> Result<String> {
                let mut iso = IsoStrategy::new(&c, tree.clone())?;
                let game = Game::new(c.m1.clone(), c.m2.clone(), tree.clone(), variant)?;
                let header = json!({ "case": name, "seed": seed });
                let g = if seed % 2 == 0 {
                    play(game, &mut iso, &mut RandomAis::new(seed), 1000)?
                } else {
                    play(game, &mut iso, &mut Overreach { inner: RandomAis::new(seed), tried: None }, 1000)?
                };
                Ok(g.to_jsonl(header))
            };
            let first = run()?;
            let parsed = parse_jsonl(&first)?;
            let replayed = Game::new(c.m1.clone(), c.m2.clone(), tree.clone(), variant)?.replay(&parsed.records)?;
            checked += 1;
            if replayed.to_jsonl(parsed.header.clone()) != first || run()? != first || replayed.winner() != parsed.winner {
                bad.push(format!("{name} seed {seed}"));
            }
        }
    }
    Ok((checked, bad))
}

/// Each clause deletion must make some suite fail outside the known check.
fn mutation_sensitivity() -> Result<Vec<(String, Option<String>)>> {
    let muts = [
        ("h(x) > x", Mutations { skip_h_gt_x: true, ..Default::default() }),
        ("g(x) = g(y) gives h(x) = h(y)", Mutations { skip_g_eq_h_eq: true, ..Default::default() }),
        ("witness clause (vii)", Mutations { skip_witness_vii: true, ..Default::default() }),
        ("budget check", Mutations { skip_budget: true, ..Default::default() }),
    ];
    let mut out = Vec::new();
    for (name, m) in muts {
        let cfg = SuiteConfig { mutations: m, ..SuiteConfig::quick() };
        let mut caught = None;
        for suite in SUITES {
            let r = run_suite(suite, &cfg)?;
            let bad = failing(&r, |n| !FINITE_SCALE_FAILURES.contains(&n));
            if !bad.is_empty() {
                caught = Some(format!("{suite}: {}", bad[0]));
                break;
            }
        }
        out.push((name.to_string(), caught));
    }
    Ok(out)
}

#[test]
fn acceptance() {
    let cfg = SuiteConfig::default();
    let run = |name: &str| run_suite(name, &cfg).unwrap();
    let mut lines = Vec::new();

    let poset = run("poset-claims");
    lines.push(suite_line("poset claims, exhaustive", &poset, |_| true));
    let lemma = run("lemma17");
    lines.push(suite_line("closed-map criterion equals partial isomorphism", &lemma, |n| n.starts_with("closed maps")));
    lines.push(suite_line("GF(2) elimination oracle", &lemma, is_gf2_check));
    lines.push(suite_line("projection identities", &run("projections"), |_| true));
    lines.push(suite_line("witness uniqueness and compatibility", &run("fact35"), |_| true));
    lines.push(suite_line("ISO strategies win every exhaustive play", &run("strategy-wins"), |_| true));
    lines.push(suite_line("solver agrees with the strategies", &run("solver-consistency"), |_| true));

    let start = Instant::now();
    let (n, bad) = determinism().unwrap();
    lines.push(line("trace replay is byte-identical", start, bad.is_empty() && n > 0, if bad.is_empty() {
        format!("{n} traces")
    } else {
        format!("diverged: {}", bad.join(", "))
    }));

    let start = Instant::now();
    let muts = mutation_sensitivity().unwrap();
    let missed: Vec<&str> = muts.iter().filter(|m| m.1.is_none()).map(|m| m.0.as_str()).collect();
    let detail = if missed.is_empty() {
        muts.iter().map(|(m, c)| format!("{m} -> {}", c.as_deref().unwrap_or(""))).collect::<Vec<_>>().join("; ")
    } else {
        format!("undetected: {}", missed.join(", "))
    };
    lines.push(line("every clause deletion is detected", start, missed.is_empty(), detail));

    for l in &lines {
        println!("{} {} ({:.1} s): {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.secs, l.detail);
    }

    // the poset line fails on one check only; every other line must pass
    let poset_bad = failing(&poset, |_| true);
    assert!(poset_bad.iter().all(|n| FINITE_SCALE_FAILURES.contains(&n.as_str())), "{poset}");
    for l in &lines[1..] {
        assert!(l.passed, "{}: {}", l.name, l.detail);
    }
}
