use gr1_core::game::{Game, Move, StateKind, StreettPair};
use gr1_core::oracle::{
    brute_force_region, check_strategy_sound, random_game, RandomGameParams, Verdict,
};
use gr1_core::sim::{simulate, EnvScript};
use gr1_core::solver::{main_streett, winning_region};
use gr1_core::stateset::StateSet;
use gr1_core::strategy::{extract_strategy, strategy_to_mealy, SynthesisError};
use proptest::prelude::*;

fn rebuild(g: &Game, keep: impl Fn(usize, u64, &Move) -> bool, pairs: Vec<StreettPair>) -> Game {
    let mut moves = Vec::new();
    for s in 0..g.num_states() {
        for i in 0..g.num_inputs() as u64 {
            let all: Vec<Move> = g.moves(s, i).collect();
            let kept: Vec<Move> = all.iter().copied().filter(|m| keep(s, i, m)).collect();
            moves.push(if kept.is_empty() { vec![all[0]] } else { kept });
        }
    }
    Game::from_parts(
        g.inputs().to_vec(),
        g.outputs().to_vec(),
        vec![StateKind::Abstract; g.num_states()],
        g.initial(),
        moves,
        pairs,
    )
    .unwrap()
}

#[test]
fn solver_agrees_with_brute_force_and_strategies_are_sound() {
    let mut nonempty = 0;
    for seed in 0..300 {
        let g = random_game(seed, RandomGameParams::default());
        let rec = main_streett(&g);
        rec.check().unwrap();
        assert_eq!(rec.winning, brute_force_region(&g).unwrap(), "seed {seed}");
        if rec.winning.is_empty() {
            continue;
        }
        nonempty += 1;
        let st = extract_strategy(&g, &rec).unwrap();
        // every winning state works as a starting point
        for s in rec.winning.iter() {
            let moved = g.with_initial(s as u32);
            let rec2 = main_streett(&moved);
            let st2 = extract_strategy(&moved, &rec2).unwrap();
            let m = strategy_to_mealy(&moved, &st2).unwrap();
            assert_eq!(
                check_strategy_sound(&moved, &m).unwrap(),
                Verdict::Sound,
                "seed {seed} from {s}"
            );
        }
        match strategy_to_mealy(&g, &st) {
            Ok(m) => assert!(check_strategy_sound(&g, &m).unwrap().is_sound()),
            Err(SynthesisError::Unrealizable { .. }) => assert!(!rec.winning.contains(0)),
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(
        nonempty > 50,
        "only {nonempty} games with a nonempty region"
    );
}

#[test]
fn pair_order_does_not_change_the_region() {
    for seed in 500..700 {
        let g = random_game(seed, RandomGameParams::default());
        let mut swapped = g.pairs().to_vec();
        swapped.reverse();
        assert_eq!(
            winning_region(&g),
            winning_region(&g.with_pairs(swapped)),
            "seed {seed}"
        );
    }
}

#[test]
fn memory_flips_only_on_rows_three_and_four() {
    for seed in 0..200 {
        let g = random_game(seed, RandomGameParams::default());
        let rec = main_streett(&g);
        if !rec.winning.contains(g.initial() as usize) {
            continue;
        }
        let st = extract_strategy(&g, &rec).unwrap();
        let m = strategy_to_mealy(&g, &st).unwrap();
        for (k, t) in m.transitions().iter().enumerate() {
            let from = m.states()[k / m.num_inputs()].memory;
            let to = m.states()[t.next as usize].memory;
            if from != to {
                assert!(matches!(t.row, Some(3 | 4)), "seed {seed}");
            }
        }
        // along a run, rows 1-4 under constant memory strictly lower the rank
        let trace = simulate(&m, &g, &EnvScript::legal(seed), 200).unwrap();
        for w in trace.steps.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mem = m.states()[b.from as usize].memory;
            if matches!(b.row, Some(1 | 2)) {
                let before = st.top_rank(mem as usize, a.game_state as usize).unwrap();
                let after = st.top_rank(mem as usize, b.game_state as usize).unwrap();
                assert!(after < before, "seed {seed}");
            }
        }
    }
}

fn game_strategy() -> impl Strategy<Value = (u64, Vec<bool>)> {
    (any::<u64>(), proptest::collection::vec(any::<bool>(), 12))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pr_is_monotone((seed, bits) in game_strategy()) {
        let g = random_game(seed, RandomGameParams::default());
        let n = g.num_states();
        let x = StateSet::from_fn(n, |s| bits[s]);
        let y = &x | &StateSet::from_fn(n, |s| bits[(s + 5) % 12]);
        prop_assert!(g.pr(&x).is_subset(&g.pr(&y)));
    }

    #[test]
    fn more_choices_never_shrink_the_region((seed, bits) in game_strategy()) {
        let g = random_game(seed, RandomGameParams::default());
        let fewer = rebuild(&g, |s, i, m| bits[(s + i as usize + m.choice.output as usize) % 12], g.pairs().to_vec());
        let small = brute_force_region(&fewer).unwrap();
        let big = brute_force_region(&g).unwrap();
        prop_assert!(small.is_subset(&big));
        prop_assert_eq!(&small, &winning_region(&fewer));
    }
}
