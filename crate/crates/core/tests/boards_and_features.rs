use gohr_core::board::{load_boards, parse_boards, save_boards, Piece};
use gohr_core::boardgen::{generate, GenParams};
use gohr_core::features::{encode, encode_current_board, BOARD_LEN};
use gohr_core::geometry::{cell_of, NUM_ACTIONS, NUM_CELLS};
use gohr_core::{builtin_rule, Board, Engine, Episode, FeatureMap, FeatureSpec, HistoryWindow, Move, Palette, SplitMix64};

#[test]
fn cell_occupancy_is_uniform() {
    let pal = Palette::default();
    let params = GenParams::fixed(9, &pal);
    let mut rng = SplitMix64::new(2024);
    let draws = 10_000;
    let mut counts = [0u32; NUM_CELLS];
    for _ in 0..draws {
        let b = generate(&params, &pal, &mut rng).unwrap();
        for (cell, _) in b.pieces() {
            counts[cell as usize - 1] += 1;
        }
    }
    let p = 9.0 / 36.0;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        assert!((c as f64 - mean).abs() < 5.0 * sd, "cell {} count {c}", i + 1);
    }
}

#[test]
fn saved_boards_load_back() {
    let pal = Palette::default();
    let mut rng = SplitMix64::new(3);
    let boards: Vec<Board> = (0..20)
        .map(|_| generate(&GenParams::human_default(&pal, false), &pal, &mut rng).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("boards.json");
    save_boards(&path, &boards, &pal).unwrap();
    assert_eq!(load_boards(&path, &pal).unwrap(), boards);
}

#[test]
fn board_file_records() {
    let pal = Palette::default();
    let boards = parse_boards(r#"[[{"cell": 1, "shape": "star", "color": "red"}]]"#, &pal).unwrap();
    assert_eq!(boards.len(), 1);
    assert_eq!(boards[0].get(1), Some(Piece { shape: 0, color: 0 }));
    assert_eq!(boards[0].len(), 1);
    let dup = r#"[[], [{"cell": 4, "shape": "star", "color": "red"}, {"cell": 4, "shape": "circle", "color": "blue"}]]"#;
    let err = parse_boards(dup, &pal).unwrap_err();
    assert!(err.to_string().contains("board 1"), "{err}");
}

/// Rebuilds successive boards from the initial board and the history slots
/// of a BD-AD encoding alone.
fn reconstruct(spec: &FeatureSpec, initial: &Board, v: &[bool], filled: usize) -> Vec<Board> {
    let mut boards = vec![*initial];
    let mut board = *initial;
    let slot = spec.slot_len();
    for k in (spec.memory - filled)..spec.memory {
        let s = &v[BOARD_LEN + k * slot..BOARD_LEN + (k + 1) * slot];
        let one = |range: std::ops::Range<usize>| -> u8 {
            let hits: Vec<usize> = range.clone().filter(|&i| s[i]).collect();
            assert_eq!(hits.len(), 1);
            (hits[0] - range.start) as u8
        };
        let shape = one(0..4);
        let color = one(4..8);
        let row = one(8..14) + 1;
        let col = one(14..20) + 1;
        let _bucket = one(20..24);
        let cell = cell_of(row, col).unwrap();
        assert_eq!(board.remove(cell), Some(Piece { shape, color }));
        boards.push(board);
    }
    boards
}

#[test]
fn dense_history_reconstructs_boards() {
    let pal = Palette::default();
    let eng = Engine::new(builtin_rule("CW").unwrap());
    let mut rng = SplitMix64::new(8);
    for memory in [2, 4, 6, 8] {
        let spec = FeatureSpec::new(FeatureMap::BdAd, memory).unwrap();
        for _ in 0..50 {
            let initial = generate(&GenParams::rl_default(&pal), &pal, &mut rng).unwrap();
            let mut ep = Episode::new(&eng, initial, None);
            let mut window = HistoryWindow::new(memory);
            let mut actual = vec![initial];
            while !ep.status().is_terminal() && actual.len() <= memory {
                let before = *ep.board();
                let mv = Move::from_action_index(rng.index(NUM_ACTIONS)).unwrap();
                if ep.step(mv).accepted {
                    window.push(before, mv);
                    actual.push(*ep.board());
                }
            }
            let v = encode(&spec, ep.board(), &window, &pal).unwrap().to_bools();
            let rebuilt = reconstruct(&spec, &initial, &v, window.len());
            assert_eq!(rebuilt, actual);
            let current = encode_current_board(rebuilt.last().unwrap(), &pal).unwrap().to_bools();
            assert_eq!(&v[..BOARD_LEN], &current[..]);
        }
    }
}

#[test]
fn failed_moves_leave_encoding_unchanged() {
    let pal = Palette::default();
    let eng = Engine::new(builtin_rule("BLTR").unwrap());
    let mut rng = SplitMix64::new(12);
    for spec in FeatureSpec::all() {
        let mut ep = Episode::new(&eng, generate(&GenParams::rl_default(&pal), &pal, &mut rng).unwrap(), None);
        let mut window = HistoryWindow::new(spec.memory);
        for _ in 0..40 {
            if ep.status().is_terminal() {
                break;
            }
            let before_vec = encode(&spec, ep.board(), &window, &pal).unwrap();
            let before = *ep.board();
            let mv = Move::from_action_index(rng.index(NUM_ACTIONS)).unwrap();
            if ep.step(mv).accepted {
                window.push(before, mv);
            } else {
                assert_eq!(encode(&spec, ep.board(), &window, &pal).unwrap(), before_vec);
            }
        }
    }
}
