//! Property-based invariants over randomized inputs.

use proptest::prelude::*;

use llrq_core::compress::{build_huffman, decode, encode, word_length, SubstitutionLossTable};
use llrq_core::constellation::build_qam;
use llrq_core::design::{bgmi, PerBitQuantizer};
use llrq_core::sim::{row_column_deinterleave, row_column_interleave};
use llrq_core::stats::{pmf_awgn, LlrPmfTable, PmfPair};

/// A random strictly positive PMF pair over 2^w cells.
fn pmf_pair_strategy(levels: usize) -> impl Strategy<Value = PmfPair> {
    let side = prop::collection::vec(1e-6..1.0f64, levels);
    (side.clone(), side).prop_map(|(a, b)| {
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        PmfPair {
            cond: [norm(a), norm(b)],
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantizer_is_total_and_ordered(
        w in 1u32..8,
        q in 1e-3..32.0f64,
        lambda in -1e6..1e6f64,
    ) {
        let quant = if w == 1 {
            PerBitQuantizer::hard(0)
        } else {
            PerBitQuantizer::uniform(0, w, q)
        };
        let v = quant.quantize(lambda);
        prop_assert!(v < quant.levels());
        // Index is nondecreasing in lambda.
        let v2 = quant.quantize(lambda + 1.0);
        prop_assert!(v2 >= v);
        // Boundaries delimit the cells they claim to.
        let bounds = quant.boundaries();
        if v > 0 {
            prop_assert!(lambda >= bounds[v - 1]);
        }
        if v < quant.levels() - 1 {
            prop_assert!(lambda < bounds[v]);
        }
    }

    #[test]
    fn huffman_code_is_kraft_complete_and_round_trips(
        pair in pmf_pair_strategy(8),
        indices in prop::collection::vec(0usize..8, 6),
    ) {
        let table = LlrPmfTable { per_bit: vec![pair; 6] };
        let cb = build_huffman(&table);
        for pc in &cb.positions {
            let kraft: f64 = pc.lengths.iter().map(|&m| 2f64.powi(-(m as i32))).sum();
            prop_assert!((kraft - 1.0).abs() < 1e-9);
        }
        let n = word_length(&indices, &cb);
        let word = encode(&indices, &cb, n + 5).unwrap();
        prop_assert_eq!(decode(&word, &cb).unwrap(), indices);
    }

    #[test]
    fn substitution_losses_are_nonnegative_and_budget_is_met(
        pair in pmf_pair_strategy(8),
        indices in prop::collection::vec(0usize..8, 4),
        slack in 0usize..12,
    ) {
        let table = LlrPmfTable { per_bit: vec![pair; 4] };
        let cb = build_huffman(&table);
        let losses = SubstitutionLossTable::build(&table, &cb);
        for k in 0..4 {
            for a in 0..8 {
                prop_assert_eq!(losses.delta[k][a][a], 0.0);
                for c in 0..8 {
                    prop_assert!(losses.delta[k][a][c] >= 0.0);
                }
            }
        }
        let budget = cb.min_word_length() + slack;
        let out = llrq_core::compress::compress_word(&indices, &cb, &losses, budget).unwrap();
        prop_assert!(word_length(&out, &cb) <= budget);
        // Untouched positions keep their original index.
        for k in 0..4 {
            let same_len = cb.positions[k].lengths[out[k]] == cb.positions[k].lengths[indices[k]];
            if out[k] != indices[k] {
                prop_assert!(!same_len, "substitution must strictly shorten a codeword");
            }
        }
    }

    #[test]
    fn interleaver_inverse_composes_to_identity(
        rows in 1usize..17,
        cols in 1usize..40,
        seed in any::<u64>(),
    ) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<u32> = (0..rows * cols).map(|_| rng.gen()).collect();
        let fwd = row_column_interleave(&words, rows, cols).unwrap();
        let back = row_column_deinterleave(&fwd, rows, cols).unwrap();
        prop_assert_eq!(back, words);
    }

    #[test]
    fn pmf_masses_stay_normalized_over_random_quantizers(
        pos in 0usize..3,
        w in 2u32..7,
        q in 0.01..8.0f64,
        cn in 6.0..16.0f64,
    ) {
        let c = build_qam(64).unwrap();
        let pll = c.llr_piecewise(2 * pos);
        let quant = PerBitQuantizer::uniform(2 * pos, w, q);
        let pmf = pmf_awgn(&quant, &pll, c.pam_axis(), 1.0, 10f64.powf(-cn / 10.0));
        for b in 0..2 {
            let s: f64 = pmf.cond[b].iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(pmf.cond[b].iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
        let i = bgmi(&pmf);
        prop_assert!((0.0..=1.0).contains(&i));
    }
}

/// Doubling the trial count roughly halves the batch-mean standard error.
#[test]
fn plugin_mi_se_shrinks_with_trials() {
    use llrq_core::design::{bank_from_alloc, build_mi_table, StepObjective};
    use llrq_core::sim::{run_sim, SimConfig, SimSystem};
    use llrq_core::stats::ChannelModel;

    let c = build_qam(16).unwrap();
    let ch = ChannelModel::awgn(10.0);
    let table = build_mi_table(&c, &ch, 3, StepObjective::UniformReconGmi).unwrap();
    let (bank, _) = bank_from_alloc(&c, &ch, &table, &[3, 3, 3, 3]).unwrap();
    let system = SimSystem {
        constellation: &c,
        bank: &bank,
        codebook: None,
        losses: None,
    };
    let se_at = |trials: usize| {
        let rep = run_sim(
            &system,
            &SimConfig {
                channel: ch,
                budget: None,
                trials,
                seed: 31,
                interleaver: None,
            },
        )
        .unwrap();
        rep.per_bit_se.iter().sum::<f64>()
    };
    let se1 = se_at(262_144);
    let se2 = se_at(4 * 262_144);
    let ratio = se2 / se1;
    assert!(
        (0.3..0.75).contains(&ratio),
        "quadrupling trials should halve the SE envelope: {se1:.2e} -> {se2:.2e}"
    );
}
