//! Property tests over random inputs for the invariants the suites cover
//! exhaustively on small ranges.

use std::collections::BTreeMap;
use std::sync::Arc;

use efgame::constructions::{build_s3, BuildOptions, Caps};
use efgame::game::{parse_jsonl, Game, GameVariant};
use efgame::gf2_models::{is_partial_auto, map_extends, q_member, GroupElement, Model};
use efgame::posets::{all_gfuns, all_wfuns, extend_g, h_of, in_w_j, leq_g, leq_w, union_w, GFun};
use efgame::strategies::{play, IsoStrategy, RandomAis};
use efgame::trees::{rooted_trees_up_to, Tree};
use efgame::verify::{auto_space, iso_exists, oracle};
use efgame::{CardinalProfile, PartialFn};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn param(seed: u64, sorts: usize, total: usize) -> efgame::gf2_models::StructureParameter {
    oracle::random_parameter(&mut ChaCha8Rng::seed_from_u64(seed), sorts, total, 0.4)
}

fn element(p: &efgame::gf2_models::StructureParameter, s: usize, bits: u64) -> GroupElement {
    p.element(s, (0..p.gen_count(s)).filter(|k| bits >> k & 1 == 1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_is_above_and_monotone(vals in proptest::collection::vec(0u32..6, 0..6)) {
        let mut vals = vals;
        vals.sort();
        let g = PartialFn::from_values(&vals);
        let h = h_of(&g);
        prop_assert!(h.is_weakly_increasing());
        for (x, y) in h.iter() {
            prop_assert!(y > x);
        }
        for (x, y) in g.iter() {
            for (x2, y2) in g.iter() {
                if y == y2 {
                    prop_assert_eq!(h.get(x), h.get(x2));
                }
            }
        }
    }

    #[test]
    fn g_extension_is_an_upper_bound(idx in any::<prop::sample::Index>(), up in 0u32..3) {
        let all = all_gfuns(5);
        let g = &all[idx.index(all.len())];
        let tight = GFun::tight(g.g.clone()).unwrap();
        let gamma = (tight.gamma() + up).min(5);
        if let Ok(next) = extend_g(&tight, gamma, 5) {
            prop_assert!(leq_g(&tight, &next));
            prop_assert!(next.g.domain().all(|x| x < gamma));
        }
    }

    #[test]
    fn w_chain_bound_stays_in_class(idx in proptest::collection::vec(any::<prop::sample::Index>(), 1..3)) {
        let p = CardinalProfile::new(vec![0, 2, 4]).unwrap();
        let all = all_wfuns(&p);
        let chain: Vec<_> = idx.iter().map(|i| all[i.index(all.len())].clone()).collect();
        let increasing = chain.windows(2).all(|w| leq_w(&p, &w[0], &w[1]));
        let j = chain.iter().map(|g| g.j(&p)).max().unwrap_or(0);
        if increasing && chain.iter().all(|g| in_w_j(&p, g, j)) {
            if let Ok(u) = union_w(&p, &chain, j) {
                prop_assert!(chain.iter().all(|g| leq_w(&p, g, &u)));
            }
        }
    }

    #[test]
    fn pair_subgroups_are_closed_under_sums(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), d in any::<u64>()) {
        let p = param(seed, 2, 8);
        for s1 in 0..p.num_sorts() {
            for s2 in 0..p.num_sorts() {
                if !p.in_s(s1, s2) {
                    continue;
                }
                let (x1, y1, x2, y2) = (element(&p, s1, a), element(&p, s2, b), element(&p, s1, c), element(&p, s2, d));
                let m1 = q_member(&p, s1, s2, &x1, &y1).unwrap();
                let m2 = q_member(&p, s1, s2, &x2, &y2).unwrap();
                let sum = q_member(&p, s1, s2, &x1.add(&x2).unwrap(), &y1.add(&y2).unwrap()).unwrap();
                if m1 && m2 {
                    prop_assert!(sum);
                }
                prop_assert_eq!(m1, oracle::q_member_enum(&p, s1, s2, &x1, &y1));
            }
        }
    }

    #[test]
    fn automorphism_basis_passes_the_closed_map_test(seed in any::<u64>()) {
        let p = param(seed, 3, 9);
        let space = auto_space(&p, 64).unwrap();
        for b in &space.basis {
            prop_assert!(is_partial_auto(&p, b));
        }
        prop_assert!(is_partial_auto(&p, &BTreeMap::new()));
    }

    #[test]
    fn isomorphism_is_symmetric(seed in any::<u64>(), s in 0usize..2, bits in any::<u64>()) {
        let p = Arc::new(param(seed, 2, 8));
        let a = Model::new(p.clone(), Some(p.zero(s)));
        let b = Model::new(p.clone(), Some(element(&p, s, bits)));
        prop_assert_eq!(iso_exists(&a, &b, 64).unwrap(), iso_exists(&b, &a, 64).unwrap());
        prop_assert_eq!(iso_exists(&a, &b, 64).unwrap(), oracle::iso_exists_enum(&a, &b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_plays_are_iso_wins_with_growing_maps(shape in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let shapes = rooted_trees_up_to(5);
        let tree = Tree::from_parents(&shapes[shape.index(shapes.len())]).unwrap();
        let opts = BuildOptions::with_caps(Caps { max_u: 1, max_lambda_set: 1, max_fn_size: 1, ..Caps::default() });
        let c = build_s3(3, &tree, &opts).unwrap();
        let tree = Arc::new(tree);
        let v = GameVariant::FixedBudget { mu: 3 };
        let mut iso = IsoStrategy::new(&c, tree.clone()).unwrap();
        let g = play(Game::new(c.m1.clone(), c.m2.clone(), tree.clone(), v).unwrap(), &mut iso, &mut RandomAis::new(seed), 1000).unwrap();
        prop_assert_eq!(g.winner(), Some(efgame::game::Player::Iso));
        for w in g.maps().windows(2) {
            prop_assert!(map_extends(&c.param, &w[1], &w[0], 1 << 16).unwrap());
        }
        let text = g.to_jsonl(serde_json::json!({ "seed": seed }));
        let parsed = parse_jsonl(&text).unwrap();
        let again = Game::new(c.m1.clone(), c.m2.clone(), tree, v).unwrap().replay(&parsed.records).unwrap();
        prop_assert_eq!(again.to_jsonl(parsed.header), text);
    }
}
