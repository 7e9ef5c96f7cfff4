use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saag_core::{BoardState, CandidateBoard, EngineError, GameConfig, GameRecord, GameState, GridPos, Rotation, Slot, TileCatalog, TileKind};
use saag_situation::*;

fn catalog() -> Arc<TileCatalog> {
    Arc::new(TileCatalog::base())
}

/// Plays random legal moves; `visit` sees every pre-move state.
fn random_game(size: usize, seed: u64, mut visit: impl FnMut(&GameState)) -> GameRecord {
    let cfg = GameConfig { board_size: size, players: 2, ..GameConfig::default() };
    let mut state = GameState::new(catalog(), cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
    loop {
        match state.draw() {
            Ok(_) => {}
            Err(EngineError::DeckEmpty) => break,
            Err(e) => panic!("{e}"),
        }
        visit(&state);
        let legal: Vec<usize> = state.legal_actions().unwrap().iter_ones().collect();
        state.apply(legal[rng.gen_range(0..legal.len())]).unwrap();
    }
    state.finalize().unwrap();
    state.record()
}

/// Every (pos, rotation) that matches all occupied neighbours by side class.
fn brute_force(board: &BoardState, kind: TileKind) -> Vec<(GridPos, Rotation)> {
    let n = board.size();
    let spec = board.catalog().spec(kind);
    let mut out = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let pos = GridPos::new(x, y);
            if board.get(pos).is_some() {
                continue;
            }
            for r in 0..4u8 {
                let mut touching = false;
                let mut ok = true;
                for (side, dx, dy) in [(Slot::N, 0i64, -1i64), (Slot::E, 1, 0), (Slot::S, 0, 1), (Slot::W, -1, 0)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 {
                        continue;
                    }
                    let Some(other) = board.get(GridPos::new(nx as usize, ny as usize)) else { continue };
                    touching = true;
                    let i = side.index();
                    let ro = other.rotation.quarter_turns() as usize;
                    let theirs = board.catalog().spec(other.kind).sides[((i + 2) % 4 + 4 - ro) % 4];
                    ok &= spec.sides[(i + 4 - r as usize) % 4] == theirs;
                }
                if touching && ok {
                    out.push((pos, Rotation::new(r).unwrap()));
                }
            }
        }
    }
    out
}

#[test]
fn candidate_count_matches_brute_force() {
    let mut checked = 0;
    for seed in 0..50 {
        random_game(15, seed, |s| {
            let tile = s.drawn_tile().unwrap();
            let cb = CandidateBoard::from_state(s, tile).unwrap();
            let mut got: Vec<(GridPos, Rotation)> = cb.candidates.iter().map(|c| (c.pos, c.rotation)).collect();
            let mut want = brute_force(s.board(), tile);
            got.sort();
            want.sort();
            assert_eq!(got, want, "game {seed} turn {}", s.turn_index());
            checked += 1;
        });
    }
    assert!(checked > 50 * 60);
}

#[test]
fn probabilities_sum_to_one() {
    let params = GcnParams::init(GcnArch::default(), 11);
    for seed in 0..10 {
        random_game(15, 100 + seed, |s| {
            let cb = CandidateBoard::from_state(s, s.drawn_tile().unwrap()).unwrap();
            let p = candidate_probabilities(&params, &cb).unwrap();
            assert_eq!(p.len(), cb.candidates.len());
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|v| *v > 0.0));
            let top = predict_board(&params, &cb, 15, usize::MAX).unwrap();
            assert_eq!(top.len(), p.len());
            assert!(top.windows(2).all(|w| w[0].probability > w[1].probability
                || (w[0].probability == w[1].probability && w[0].action < w[1].action)));
        });
    }
}

#[test]
fn labels_are_the_played_legal_placements() {
    let records: Vec<GameRecord> = (0..5).map(|s| random_game(15, 200 + s, |_| {})).collect();
    let examples = generate_dataset(&records, catalog()).unwrap();
    let mut by_game = vec![0; records.len()];
    for ex in &examples {
        ex.validate().unwrap();
        let turn = &records[ex.game].turns[ex.turn];
        let g = &ex.groups[ex.label];
        assert_eq!((g.x, g.y, g.rotation), (turn.x, turn.y, turn.rotation));
        assert_eq!(ex.tile, turn.tile);
        by_game[ex.game] += 1;
    }
    for (r, n) in records.iter().zip(by_game) {
        assert_eq!(n, r.turns.len());
    }
}

fn permuted(ex: &GraphExample, seed: u64) -> GraphExample {
    let n = ex.node_count();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut features = vec![[0.0; 7]; n];
    for (old, new) in perm.iter().enumerate() {
        features[*new as usize] = ex.features[old];
    }
    let mut edges: Vec<(u32, u32)> = ex
        .edges
        .iter()
        .map(|(a, b)| {
            let (a, b) = (perm[*a as usize], perm[*b as usize]);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    let groups = ex
        .groups
        .iter()
        .map(|g| Group { vertices: g.vertices.iter().map(|v| perm[*v as usize]).collect(), ..g.clone() })
        .collect();
    GraphExample { features, edges, groups, ..ex.clone() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vertex_permutation_invariance(game in 0u64..1000, turn_frac in 0.0f64..1.0, perm_seed: u64, init in 0u64..100) {
        let record = random_game(11, game, |_| {});
        let turn = ((record.turns.len() as f64 * turn_frac) as usize).min(record.turns.len() - 1);
        let examples = generate_dataset(std::slice::from_ref(&record), catalog()).unwrap();
        let ex = &examples[turn];
        let params = GcnParams::init(GcnArch::default(), init);
        let a = forward(&params, &PreparedGraph::new(ex), None).unwrap().probs;
        let b = forward(&params, &PreparedGraph::new(&permuted(ex, perm_seed)), None).unwrap().probs;
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
    }
}
