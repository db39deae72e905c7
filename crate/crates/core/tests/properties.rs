mod common;

use common::*;
use knockout::generators::{
    compose_big_win, gen_bigsmall, gen_hard, gen_unbalanced, hard_path_probability,
    bigsmall_even_probability, uniform_perturbation,
};
use knockout::robustness::{relevant_pairs, sensitivity};
use knockout::solvers::HeuristicConfig;
use knockout::{
    count_draws, crucial_matches, crucial_matches_oracle, enumerate_draws, exact_worst_drop_oracle,
    solve, win_probabilities, winner, worst_perturbation_witness, wp_by_outcome_enumeration, Answer,
    ComparisonMatrix, Draw, Matrix, MatrixFile, Problem, SearchMode, SolveRequest,
};
use proptest::prelude::*;
use rand::Rng;

fn rounds_strategy(max: u32) -> impl Strategy<Value = u32> {
    1..=max
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_an_isomorphic_fixed_point(rounds in rounds_strategy(5), seed in any::<u64>()) {
        let d = random_permutation(1 << rounds, seed);
        let c = d.canonicalize();
        prop_assert!(c.is_canonical());
        prop_assert_eq!(c.canonicalize(), c.clone());
        prop_assert_eq!(shape(&d.to_vec()), shape(&c.to_vec()));
        prop_assert!(d.equivalent(&c));
    }

    #[test]
    fn non_isomorphic_draws_stay_apart(seed_a in any::<u64>(), seed_b in any::<u64>()) {
        let a = random_permutation(8, seed_a);
        let b = random_permutation(8, seed_b);
        prop_assert_eq!(a.equivalent(&b), shape(&a.to_vec()) == shape(&b.to_vec()));
    }

    #[test]
    fn matrix_file_round_trip(rounds in rounds_strategy(4), seed in any::<u64>(), det in any::<bool>()) {
        let m = if det { random_deterministic(rounds, seed) } else { random_matrix(rounds, 0.0, 1.0, seed) };
        let text = serde_json::to_string(&m).unwrap();
        let back: Matrix = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &m);
        let file: MatrixFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(Matrix::from_file(&file).unwrap(), m);
    }

    #[test]
    fn win_probabilities_sum_to_one(rounds in rounds_strategy(6), seed in any::<u64>()) {
        let m = random_matrix(rounds, 0.0, 1.0, seed);
        let d = random_permutation(1 << rounds, seed ^ 0x5eed);
        let total: f64 = win_probabilities(&m, &d).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn isomorphic_draws_give_identical_probabilities(rounds in rounds_strategy(5), seed in any::<u64>()) {
        let m = random_matrix(rounds, 0.0, 1.0, seed);
        let d = random_permutation(1 << rounds, seed.rotate_left(7));
        prop_assert_eq!(win_probabilities(&m, &d).unwrap(), win_probabilities(&m, &d.canonicalize()).unwrap());
    }

    #[test]
    fn wp_is_affine_in_one_pair(rounds in rounds_strategy(4), seed in any::<u64>()) {
        let size = 1usize << rounds;
        let m = random_matrix(rounds, 0.0, 1.0, seed);
        let d = random_permutation(size, seed ^ 1);
        let mut r = rng(seed ^ 2);
        let (a, b) = loop {
            let a = r.gen_range(1..=size);
            let b = r.gen_range(1..=size);
            if a != b { break (a, b) }
        };
        let player = r.gen_range(1..=size);
        let at = |p: f64| {
            let m2 = m.with_pair(pid(a), pid(b), p).unwrap();
            win_probabilities(&m2, &d).unwrap()[player - 1]
        };
        prop_assert!((at(0.5) - 0.5 * (at(0.0) + at(1.0))).abs() <= 1e-9);
    }

    #[test]
    fn reach_table_matches_outcome_enumeration(rounds in rounds_strategy(3), seed in any::<u64>()) {
        let m = random_matrix(rounds, 0.0, 1.0, seed);
        let d = random_permutation(1 << rounds, seed ^ 3);
        let wp = win_probabilities(&m, &d).unwrap();
        for (k, &w) in wp.iter().enumerate() {
            let oracle = wp_by_outcome_enumeration(&m, &d, pid(k + 1)).unwrap();
            prop_assert!((w - oracle).abs() <= 1e-9);
        }
    }

    #[test]
    fn sensitivity_intercept_and_slope_agree_with_evaluation(rounds in rounds_strategy(3), seed in any::<u64>()) {
        let m = random_matrix(rounds, 0.0, 1.0, seed);
        let d = random_permutation(1 << rounds, seed ^ 4);
        let report = sensitivity(&m, &d, pid(1)).unwrap();
        let mut total = 0.0;
        for s in &report.alphas {
            let mid = m.with_pair(s.i, s.j, 0.3).unwrap();
            let direct = win_probabilities(&mid, &d).unwrap()[0];
            prop_assert!((s.beta + 0.3 * s.alpha - direct).abs() <= 1e-9);
            prop_assert!((s.beta + s.p * s.alpha - report.wp).abs() <= 1e-9);
            total += s.contribution;
        }
        prop_assert!((total - report.drop_coefficient).abs() <= 1e-12);
    }

    #[test]
    fn witness_is_sound(rounds in rounds_strategy(3), seed in any::<u64>(), frac in 0.01f64..1.0) {
        let m = random_matrix(rounds, 0.02, 0.98, seed);
        let d = random_permutation(1 << rounds, seed ^ 5);
        let eps = frac * m.xi();
        let report = sensitivity(&m, &d, pid(1)).unwrap();
        let w = worst_perturbation_witness(&report, &m, eps).unwrap();
        let size = m.size();
        for a in 1..=size {
            for b in 1..=size {
                if a != b {
                    prop_assert!((w.matrix.prob(pid(a), pid(b)) - m.prob(pid(a), pid(b))).abs() <= eps + 1e-12);
                }
            }
        }
        prop_assert!(win_probabilities(&w.matrix, &d).unwrap()[0] <= report.wp + 1e-12);
    }

    #[test]
    fn exact_drop_dominates_witness_drop(seed in any::<u64>(), eps in 0.001f64..0.05) {
        let m = random_matrix(2, 0.05, 0.95, seed);
        let d = random_permutation(4, seed ^ 6);
        let report = sensitivity(&m, &d, pid(1)).unwrap();
        let w = worst_perturbation_witness(&report, &m, eps).unwrap();
        let exact = exact_worst_drop_oracle(&m, &d, pid(1), eps, false).unwrap();
        prop_assert!(exact.worst_wp <= win_probabilities(&w.matrix, &d).unwrap()[0] + 1e-12);
        prop_assert!((win_probabilities(&exact.witness, &d).unwrap()[0] - exact.worst_wp).abs() <= 1e-12);
        prop_assert!(exact.drop >= -1e-12);
    }

    #[test]
    fn irrelevant_pairs_have_zero_slope(rounds in rounds_strategy(3), seed in any::<u64>()) {
        let m = random_matrix(rounds, 0.0, 1.0, seed);
        let d = random_permutation(1 << rounds, seed ^ 7);
        let report = sensitivity(&m, &d, pid(1)).unwrap();
        let relevant = relevant_pairs(&d, pid(1)).unwrap();
        for s in &report.alphas {
            if !relevant.contains(&(s.i, s.j)) {
                prop_assert_eq!(s.alpha, 0.0);
            }
        }
    }

    #[test]
    fn reorder_lemma(seed in any::<u64>(), p in 0.5001f64..0.9999) {
        let mut r = rng(seed);
        let mut v: Vec<f64> = (0..4).map(|_| r.gen_range(0.0..=1.0)).collect();
        v.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
        prop_assume!(b > c || (a > b && c > d));
        let crossed = compose_big_win(compose_big_win(a, d, p), compose_big_win(b, c, p), p);
        let paired = compose_big_win(compose_big_win(a, b, p), compose_big_win(c, d, p), p);
        prop_assert!((1.0 - p) * (a - c) * (b - d) > 0.0);
        prop_assert!(crossed > paired || (crossed - paired).abs() < 1e-15);
    }
}

#[test]
fn reorder_lemma_thousand_seeded_tuples() {
    let mut r = rng(2024);
    let mut checked = 0;
    while checked < 1000 {
        let mut v: Vec<f64> = (0..4).map(|_| r.gen_range(0.0..=1.0)).collect();
        v.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
        if !(b > c || (a > b && c > d)) {
            continue;
        }
        let p = r.gen_range(0.5..1.0);
        if p == 0.5 {
            continue;
        }
        let crossed = compose_big_win(compose_big_win(a, d, p), compose_big_win(b, c, p), p);
        let paired = compose_big_win(compose_big_win(a, b, p), compose_big_win(c, d, p), p);
        let sign = (1.0 - p) * (a - c) * (b - d);
        assert!(sign > 0.0);
        assert!(crossed > paired, "{a} {b} {c} {d} {p}");
        checked += 1;
    }
}

#[test]
fn enumeration_yields_distinct_canonical_fixed_points() {
    for rounds in 1..=3 {
        let draws: Vec<Draw> = enumerate_draws(rounds, false).unwrap().collect();
        assert_eq!(draws.len() as u128, count_draws(rounds).unwrap());
        let mut shapes: Vec<String> = draws.iter().map(|d| shape(&d.to_vec())).collect();
        shapes.sort();
        shapes.dedup();
        assert_eq!(shapes.len(), draws.len());
        for d in &draws {
            assert_eq!(&d.canonicalize(), d);
        }
        assert!(draws.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn count_matches_factorial_formula() {
    for rounds in 1..=5u32 {
        let n = 1u128 << rounds;
        assert_eq!(count_draws(rounds).unwrap(), factorial(n) / (1u128 << (n - 1)));
    }
    assert_eq!(count_draws(6).unwrap_err().kind(), "OverflowError");
}

#[test]
fn oracle_equivalence_all_draws_small_fields() {
    for rounds in [2u32, 3] {
        for seed in 0..10 {
            let m = random_matrix(rounds, 0.0, 1.0, 1000 + seed);
            for d in enumerate_draws(rounds, false).unwrap() {
                let wp = win_probabilities(&m, &d).unwrap();
                for (k, &w) in wp.iter().enumerate() {
                    let oracle = wp_by_outcome_enumeration(&m, &d, pid(k + 1)).unwrap();
                    assert!((w - oracle).abs() <= 1e-9);
                }
            }
        }
    }
}

fn crucial_agrees(m: &Matrix, d: &Draw, player: usize) {
    let fast = crucial_matches(m, d, pid(player)).unwrap();
    let slow = crucial_matches_oracle(m, d, pid(player)).unwrap();
    assert_eq!(fast, slow, "draw {d}");
    let s = sensitivity(m, d, pid(player)).unwrap().drop_coefficient;
    assert_eq!(s, fast.count as f64, "draw {d}");
}

#[test]
fn crucial_count_equals_oracle_and_drop_coefficient_on_families() {
    for n in 1..=6 {
        crucial_agrees(&gen_hard(n).unwrap(), &Draw::identity(n), 1);
    }
    for n in 2..=6 {
        let u: Matrix = gen_unbalanced(n).unwrap();
        crucial_agrees(&u, &Draw::identity(n), 1);
        let size = 1usize << n;
        let mut alt: Vec<usize> = (1..=size).collect();
        alt.swap(0, size - 1);
        crucial_agrees(&u, &Draw::new(alt).unwrap(), 1);
    }
}

#[test]
fn crucial_count_equals_oracle_on_random_deterministic_fields() {
    let draws: Vec<Draw> = enumerate_draws(3, false).unwrap().collect();
    for seed in 0..100 {
        let m = random_deterministic(3, 7000 + seed);
        for d in &draws {
            let w = winner(&m, d).unwrap();
            crucial_agrees(&m, d, w.index());
        }
    }
}

#[test]
fn hard_path_probability_matches_tournament() {
    for n in 1..=6 {
        let h: Matrix = gen_hard(n).unwrap();
        for eps in [0.01, 0.05, 0.1] {
            let p = uniform_perturbation(&h, eps).unwrap();
            let wp = win_probabilities(&p, &Draw::identity(n)).unwrap()[0];
            assert!((wp - hard_path_probability(n, eps).unwrap()).abs() <= 1e-9);
        }
    }
}

#[test]
fn hard_tournament_has_a_unique_winning_draw() {
    for n in 1..=3 {
        let h: Matrix = gen_hard(n).unwrap();
        let wins: Vec<Draw> = enumerate_draws(n, false)
            .unwrap()
            .filter(|d| winner(&h, d).unwrap() == pid(1))
            .collect();
        assert_eq!(wins, vec![Draw::identity(n)]);
    }
}

#[test]
fn mixed_draws_maximize_big_win_probability() {
    for n in [2u32, 3] {
        for p in [0.55, 0.6, 0.9] {
            let inst = gen_bigsmall(n, p).unwrap();
            let rated: Vec<(Draw, f64)> = enumerate_draws(n, false)
                .unwrap()
                .map(|d| {
                    let b = inst.big_win_probability(&d).unwrap();
                    (d, b)
                })
                .collect();
            let best = rated.iter().map(|r| r.1).fold(f64::MIN, f64::max);
            for (d, b) in &rated {
                let optimal = (best - b).abs() <= 1e-12;
                assert_eq!(optimal, inst.is_mixed(d), "n={n} p={p} {d}");
                if optimal {
                    let half = d.size() / 2;
                    let left = d.leaves()[..half].iter().filter(|&&x| inst.is_big(x)).count();
                    let right = d.leaves()[half..].iter().filter(|&&x| inst.is_big(x)).count();
                    assert!(left.abs_diff(right) <= 1);
                }
            }
        }
    }
}

#[test]
fn mixed_draw_slope() {
    for n in 1..=5u32 {
        let eps = 1e-6;
        let slope = (bigsmall_even_probability(n, eps).unwrap() - 0.5) / eps;
        assert!((slope - 0.5 * (n + 1) as f64).abs() <= 1e-4, "n={n} slope={slope}");
    }
    for n in [2u32, 3] {
        let eps = 1e-6;
        let inst = gen_bigsmall(n, 0.5 + eps).unwrap();
        let mixed = enumerate_draws(n, false).unwrap().find(|d| inst.is_mixed(d)).unwrap();
        let slope = (inst.big_win_probability(&mixed).unwrap() - 0.5) / eps;
        assert!((slope - 0.5 * (n + 1) as f64).abs() <= 1e-4);
    }
}

#[test]
fn rtfp_with_loose_bound_is_tfp() {
    for seed in 0..40 {
        let m = random_deterministic(3, 9000 + seed);
        let player = pid(1 + (seed as usize % 8));
        let tfp = solve(&SolveRequest::new(Problem::Tfp, &m, player)).unwrap();
        let mut req = SolveRequest::new(Problem::Rtfp, &m, player);
        req.c = Some(9);
        let rtfp = solve(&req).unwrap();
        assert_eq!(tfp.answer, rtfp.answer);
        assert_eq!(tfp.witness, rtfp.witness);
    }
}

#[test]
fn negative_exact_answers_scan_everything() {
    for seed in 0..20 {
        let m = random_deterministic(3, 11_000 + seed);
        for player in 1..=8 {
            let res = solve(&SolveRequest::new(Problem::Tfp, &m, pid(player))).unwrap();
            if res.answer == Answer::No {
                assert_eq!(res.draws_examined as u128, count_draws(3).unwrap());
                assert!(res.witness.is_none());
            }
        }
    }
}

#[test]
fn parallel_scan_agrees_with_sequential() {
    for seed in 0..10 {
        let m = random_matrix(3, 0.0, 1.0, 12_000 + seed);
        let mut req = SolveRequest::new(Problem::Ptfp, &m, pid(1));
        req.q = Some(0.3);
        let seq = solve(&req).unwrap();
        req.jobs = 4;
        let par = solve(&req).unwrap();
        assert_eq!(seq.answer, par.answer);
        assert_eq!(seq.witness, par.witness);
    }
}

#[test]
fn heuristic_witnesses_pass_exact_verification() {
    let cfg = HeuristicConfig {
        restarts: 5,
        seed: 3,
        max_steps: 200,
    };
    for seed in 0..20 {
        let m = random_deterministic(3, 13_000 + seed);
        for player in [1usize, 5] {
            let mut req = SolveRequest::new(Problem::Tfp, &m, pid(player));
            req.mode = SearchMode::Heuristic(cfg);
            let heur = solve(&req).unwrap();
            let exact = solve(&SolveRequest::new(Problem::Tfp, &m, pid(player))).unwrap();
            assert!(!heur.exact);
            if heur.answer.is_positive() {
                let w = heur.witness.as_ref().unwrap();
                assert_eq!(winner(&m, w).unwrap(), pid(player));
                assert!(exact.answer.is_positive());
            }
        }
        let q = random_matrix(3, 0.0, 1.0, 14_000 + seed);
        let mut req = SolveRequest::new(Problem::Rptfp, &q, pid(2));
        req.q = Some(0.2);
        req.s = Some(2.0);
        req.mode = SearchMode::Heuristic(cfg);
        let heur = solve(&req).unwrap();
        if heur.answer.is_positive() {
            let w = heur.witness.as_ref().unwrap();
            assert!(win_probabilities(&q, w).unwrap()[1] >= 0.2 - 1e-9);
            assert!(sensitivity(&q, w, pid(2)).unwrap().drop_coefficient <= 2.0 + 1e-9);
        }
    }
}

#[test]
fn first_order_error_decays_quadratically() {
    for seed in 0..10 {
        let m = random_matrix(2, 0.05, 0.95, 15_000 + seed);
        for d in enumerate_draws(2, false).unwrap() {
            let s = sensitivity(&m, &d, pid(1)).unwrap().drop_coefficient;
            let err = |eps: f64| (exact_worst_drop_oracle(&m, &d, pid(1), eps, false).unwrap().drop - s * eps).abs();
            let (big, small) = (err(1e-2), err(1e-3));
            if big > 1e-12 {
                assert!(small <= 0.05 * big, "seed {seed} {d}: {small} vs {big}");
            }
        }
    }
}

#[test]
fn generic_core_runs_in_single_precision() {
    let m: ComparisonMatrix<f32> = random_matrix(3, 0.0, 1.0, 99).cast();
    let d = Draw::identity(3);
    let wp32 = win_probabilities(&m, &d).unwrap();
    let wp64 = win_probabilities(&m.cast::<f64>(), &d).unwrap();
    for (a, b) in wp32.iter().zip(&wp64) {
        assert!((*a as f64 - b).abs() < 1e-5);
    }
    let s = sensitivity(&m, &d, pid(1)).unwrap();
    assert!(s.drop_coefficient >= 0.0);
}
