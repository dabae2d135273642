use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cbt_core::array_model::{kron, ula_response, upa_response, AngleGrid, ArrayGeometry};
use cbt_core::block_code::{build_plain_code, build_reduced_code, BitString, BlockCode, DecodeMode};
use cbt_core::channel::{normalize_channel, rebuild_on_grid, SnrSpec};
use cbt_core::codebook::gs::{relaxed_gs, GsConfig, SamplingMatrix};
use cbt_core::codebook::{beam_pattern_matrix, classification_margin, Side};
use cbt_core::experiments::round_sig;
use cbt_core::training_sim::{decode_coded, default_codes, run_coded, CodedBeams};
use cbt_core::C64;

fn code_strategy() -> impl Strategy<Value = BlockCode> {
    prop_oneof![
        (1usize..=8).prop_map(|k| build_plain_code(k).unwrap()),
        (3usize..=5, 3usize..=5).prop_map(|(k1, k2)| build_reduced_code(k1, k2).unwrap()),
    ]
}

fn geometry_strategy() -> impl Strategy<Value = ArrayGeometry> {
    (1u32..=4, 3u32..=4, 3u32..=4).prop_map(|(t, a, b)| ArrayGeometry::new(1 << t, 1 << a, 1 << b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_pattern_row_covers_half_the_grid(code in code_strategy()) {
        let n_points = 1usize << code.k;
        let v = beam_pattern_matrix(&code, n_points, Side::Bs).unwrap();
        for layer in 0..v.n_layers() {
            let ones = v.mask(layer).iter().filter(|&&m| m).count();
            prop_assert_eq!(ones, n_points / 2);
        }
    }

    #[test]
    fn pattern_columns_are_codewords(code in code_strategy(), j in 0usize..256) {
        let n_points = 1usize << code.k;
        let j = j % n_points;
        let v = beam_pattern_matrix(&code, n_points, Side::Ris).unwrap();
        let expected = code.encode(&BitString::from_index(j, code.k)).unwrap();
        prop_assert_eq!(v.column(j), expected);
    }

    #[test]
    fn encoding_is_systematic_and_linear(code in code_strategy(), a in 0usize..1024, b in 0usize..1024) {
        let (a, b) = (a % (1 << code.k), b % (1 << code.k));
        let ua = BitString::from_index(a, code.k);
        let ub = BitString::from_index(b, code.k);
        let xa = code.encode(&ua).unwrap();
        let xb = code.encode(&ub).unwrap();
        prop_assert_eq!(xa.slice(0..code.k), ua.clone());
        prop_assert_eq!(code.encode(&ua.xor(&ub)).unwrap(), xa.xor(&xb));
        prop_assert!(code.syndrome(&xa).unwrap().is_zero());
    }

    #[test]
    fn single_errors_have_distinct_nonzero_syndromes(code in code_strategy()) {
        let zero = BitString::zeros(code.n);
        let syndromes: Vec<BitString> = (0..code.n).map(|p| code.syndrome(&zero.flipped(&[p])).unwrap()).collect();
        for (i, s) in syndromes.iter().enumerate() {
            prop_assert!(!s.is_zero());
            for t in &syndromes[..i] {
                prop_assert_ne!(s, t);
            }
        }
    }

    #[test]
    fn reduced_syndromes_decouple(k1 in 3usize..=5, k2 in 3usize..=5, pick in any::<u64>()) {
        let code = build_reduced_code(k1, k2).unwrap();
        let s = code.split.unwrap();
        let zero = BitString::zeros(code.n);
        let ones = s.type_one_positions();
        let twos = s.type_two_positions();
        let e1: Vec<usize> = ones.iter().enumerate().filter(|(i, _)| pick >> i & 1 == 1).map(|(_, &p)| p).collect();
        let e2: Vec<usize> = twos.iter().enumerate().filter(|(i, _)| pick >> (i + 16) & 1 == 1).map(|(_, &p)| p).collect();
        let syn1 = code.syndrome(&zero.flipped(&e1)).unwrap();
        let syn2 = code.syndrome(&zero.flipped(&e2)).unwrap();
        prop_assert!(syn1.slice(s.m1..s.m1 + s.m2).is_zero());
        prop_assert!(syn2.slice(0..s.m1).is_zero());
    }

    #[test]
    fn gs_codewords_have_constant_modulus(
        n in 4usize..=24,
        bits in any::<u32>(),
        seed in any::<u64>(),
    ) {
        let mut mask: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        if !mask.iter().any(|&m| m) {
            mask[0] = true;
        }
        if mask.iter().all(|&m| m) {
            mask[n - 1] = false;
        }
        let columns: Vec<DVector<C64>> = (0..n)
            .map(|k| ula_response(n, -1.0 + (2 * k + 1) as f64 / n as f64, 0.5))
            .collect();
        let a = SamplingMatrix::from_columns(&columns).unwrap();
        let cfg = GsConfig { k_iter: 20, seed, ..GsConfig::default() };
        let run = relaxed_gs(&a, &mask, &cfg, &mut ChaCha8Rng::seed_from_u64(seed), false, false).unwrap();
        let expected = 1.0 / (n as f64).sqrt();
        for z in run.codeword.iter() {
            prop_assert!((z.norm() - expected).abs() < 1e-12);
        }
        prop_assert!(run.trace.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn margin_ignores_global_phase(geometry in geometry_strategy(), seed in any::<u64>(), phase in 0.0f64..std::f64::consts::TAU) {
        use rand::Rng;
        let grid = AngleGrid::new(&geometry).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = geometry.n_ris();
        let v = DVector::from_fn(n, |_, _| C64::from_polar(1.0 / (n as f64).sqrt(), rng.random_range(0.0..std::f64::consts::TAU)));
        let mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        prop_assume!(mask.iter().any(|&m| m) && mask.iter().any(|&m| !m));
        let rotated = &v * C64::from_polar(1.0, phase);
        let (a, b) = classification_margin(&v, &mask, &grid, &geometry, Side::Ris).unwrap();
        let (c, d) = classification_margin(&rotated, &mask, &grid, &geometry, Side::Ris).unwrap();
        prop_assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
    }

    #[test]
    fn steering_is_unit_norm_and_factorizes(n1 in 1usize..=8, n2 in 1usize..=8, u in -1.0f64..1.0, w in -1.0f64..1.0) {
        let a = upa_response(n1, n2, u, w, 0.5);
        prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        let b = kron(&upa_response(n1, 1, u, 0.0, 0.5), &upa_response(1, n2, 0.0, w, 0.5));
        prop_assert!((a - b).camax() < 1e-12);
    }

    #[test]
    fn coded_budget_accounting(geometry in geometry_strategy(), budget in 4usize..80, trial in 0usize..4096) {
        let grid = AngleGrid::new(&geometry).unwrap();
        let (code_t, code_r) = default_codes(&geometry).unwrap();
        let beams = CodedBeams::ideal(
            &beam_pattern_matrix(&code_t, grid.n_bs(), Side::Bs).unwrap(),
            &beam_pattern_matrix(&code_r, grid.n_ris(), Side::Ris).unwrap(),
        );
        let ch = rebuild_on_grid(&geometry, &grid, trial % grid.n_bs(), trial % grid.n_ris());
        let snr = SnrSpec::from_db(0.0).unwrap();
        let out = run_coded(&ch, &beams, &code_t, &code_r, DecodeMode::OneBit, &snr, Some(budget), &mut ChaCha8Rng::seed_from_u64(trial as u64)).unwrap();
        let full = 4 * code_t.n.max(code_r.n);
        prop_assert!(out.pilots_used <= budget);
        prop_assert_eq!(out.pilots_used % 4, 0);
        prop_assert_eq!(out.pilots_used, full.min(budget / 4 * 4));
        prop_assert_eq!(out.truncated, budget < full);
        prop_assert!(out.est_bs_index < grid.n_bs() && out.est_ris_index < grid.n_ris());
    }

    #[test]
    fn coded_runs_are_deterministic(seed in any::<u64>(), trial in 0usize..1024) {
        let geometry = ArrayGeometry::new(8, 8, 8).unwrap();
        let grid = AngleGrid::new(&geometry).unwrap();
        let (code_t, code_r) = default_codes(&geometry).unwrap();
        let beams = CodedBeams::ideal(
            &beam_pattern_matrix(&code_t, grid.n_bs(), Side::Bs).unwrap(),
            &beam_pattern_matrix(&code_r, grid.n_ris(), Side::Ris).unwrap(),
        );
        let ch = rebuild_on_grid(&geometry, &grid, trial % 8, trial % 64);
        let snr = SnrSpec::from_db(-5.0).unwrap();
        let run = || run_coded(&ch, &beams, &code_t, &code_r, DecodeMode::DecoupledTwoBit, &snr, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(run(), run());
    }

    // Each trial carries at most one RIS bit error, so one-bit correction can
    // only turn failures into successes.
    #[test]
    fn correction_never_loses_to_no_correction(errors in proptest::collection::vec((0usize..64, proptest::option::of(0usize..12)), 1..40)) {
        let (code_t, code_r) = default_codes(&ArrayGeometry::new(8, 8, 8).unwrap()).unwrap();
        let mut wins_none = 0;
        let mut wins_one = 0;
        for (j, flip) in errors {
            let clean = code_r.encode(&BitString::from_index(j, code_r.k)).unwrap();
            let raw = match flip {
                Some(p) => clean.flipped(&[p]),
                None => clean,
            };
            let raw_bs = code_t.encode(&BitString::from_index(3, code_t.k)).unwrap();
            for (mode, wins) in [(DecodeMode::None, &mut wins_none), (DecodeMode::OneBit, &mut wins_one)] {
                let (bs, ris, _, _) = decode_coded(&code_t, &code_r, &raw_bs, &raw, mode, 8, 64).unwrap();
                *wins += usize::from(bs == 3 && ris == j);
            }
        }
        prop_assert!(wins_one >= wins_none);
    }

    #[test]
    fn normalization_is_idempotent(geometry in geometry_strategy(), i in 0usize..64, j in 0usize..256) {
        let grid = AngleGrid::new(&geometry).unwrap();
        let ch = rebuild_on_grid(&geometry, &grid, i % grid.n_bs(), j % grid.n_ris()).with_path_gains(0.3, 2.5);
        let once = normalize_channel(&ch).unwrap();
        let twice = normalize_channel(&once).unwrap();
        prop_assert!((&once.h_r - &twice.h_r).camax() < 1e-12);
        prop_assert!((&once.g_mat - &twice.g_mat).camax() < 1e-12);
    }

    #[test]
    fn rounding_is_idempotent(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        let r = round_sig(x);
        prop_assert_eq!(round_sig(r).to_bits(), r.to_bits());
    }
}
