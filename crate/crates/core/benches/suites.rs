//! Sequential against parallel execution on the heavier workloads.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use efgame::constructions::{build_s3, BuildOptions, Caps};
use efgame::game::GameVariant;
use efgame::strategies::explore;
use efgame::trees::Tree;
use efgame::verify::{run_suite, SuiteConfig};
use efgame::Mode;

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn suites(c: &mut Criterion) {
    let mut group = c.benchmark_group("quick suites");
    group.sample_size(10);
    for suite in ["lemma17", "fact35"] {
        for (name, mode) in MODES {
            let cfg = SuiteConfig { mode, ..SuiteConfig::quick() };
            group.bench_function(format!("{suite}/{name}"), |b| b.iter(|| black_box(run_suite(suite, &cfg).unwrap())));
        }
    }
    group.finish();
}

fn exploration(c: &mut Criterion) {
    let tree = Tree::from_parents(&[None, Some(0), Some(0), Some(1), Some(1), Some(2)]).unwrap();
    let opts = BuildOptions::with_caps(Caps { max_u: 1, max_lambda_set: 1, max_fn_size: 1, ..Caps::default() });
    let construction = build_s3(3, &tree, &opts).unwrap();
    let tree = Arc::new(tree);
    let mut group = c.benchmark_group("explore s3");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(explore(&construction, tree.clone(), GameVariant::FixedBudget { mu: 3 }, mode).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, suites, exploration);
criterion_main!(benches);
