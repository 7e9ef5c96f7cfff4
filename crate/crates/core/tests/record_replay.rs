mod common;

use std::path::PathBuf;

use saag_core::{replay, replay_states, GameRecord, RecordError};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/game_w40_seed7.ndjson")
}

fn reference_game() -> GameRecord {
    common::random_game(common::config(40, 2), 7, |_, _| {}).record()
}

#[test]
fn golden_record_is_stable() {
    let text = reference_game().to_text();
    if std::env::var_os("SAAG_BLESS").is_some() {
        std::fs::write(golden_path(), &text).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).expect("golden file present");
    assert_eq!(text, golden);
    assert_eq!(GameRecord::parse(&golden).unwrap().to_text(), golden);
}

#[test]
fn replay_reconstructs_final_state() {
    let rec = reference_game();
    let parsed = GameRecord::parse(&rec.to_text()).unwrap();
    let state = replay(&parsed, common::catalog()).unwrap();
    assert_eq!(state.scores(), rec.final_record.as_ref().unwrap().scores);
    let states = replay_states(&parsed, common::catalog()).unwrap();
    let discarded: usize =
        rec.turns.iter().map(|t| t.discarded.len()).sum::<usize>() + rec.final_record.as_ref().unwrap().discarded.len();
    assert_eq!(states.len() + discarded, 71);
    assert!(states.iter().all(|s| s.drawn_tile().is_some()));
}

#[test]
fn tampered_record_diverges() {
    let mut rec = reference_game();
    rec.turns[5].deltas[0] += 1;
    assert!(matches!(replay(&rec, common::catalog()), Err(RecordError::Divergence { turn: 5, .. })));

    let mut rec = reference_game();
    rec.turns[3].tile = "C".into();
    assert!(matches!(replay(&rec, common::catalog()), Err(RecordError::Divergence { turn: 3, .. })));

    let mut rec = reference_game();
    rec.header.catalog_hash = "0000".into();
    assert!(matches!(replay(&rec, common::catalog()), Err(RecordError::CatalogMismatch { .. })));

    let mut rec = reference_game();
    rec.final_record.as_mut().unwrap().scores[1] += 2;
    assert!(matches!(replay(&rec, common::catalog()), Err(RecordError::Divergence { .. })));
}

#[test]
fn same_seed_same_bytes() {
    assert_eq!(reference_game().to_text(), reference_game().to_text());
    let other = common::random_game(common::config(40, 2), 8, |_, _| {}).record();
    assert_ne!(other.to_text(), reference_game().to_text());
}
