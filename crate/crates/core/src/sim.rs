//! End-to-end Monte Carlo of the proposed receiver chain: map, channel,
//! per-axis LLR, per-bit quantization, Huffman + greedy compression,
//! fixed-size encoding, optional row-column interleaver round trip,
//! decoding and plug-in GMI estimation.
//!
//! Trials run in independently seeded batches reduced by integer-count
//! summation, so reports are bit-identical for a given seed regardless of
//! the parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{
    compress_word, decode, encode, plugin_mi, word_length, BitIndexCounts, HuffmanCodebook,
    SubstitutionLossTable,
};
use crate::constellation::Constellation;
use crate::design::{bgmi, QuantizerBank};
use crate::error::Error;
use crate::stats::{pmf_awgn, pmf_fading_fixed, ChannelKind, ChannelModel};
use crate::Result;

/// Words per parallel batch.
const BATCH: usize = 1 << 14;

/// Longest tracked pre-compression word length in the CCDF histogram.
const MAX_TRACKED_LEN: usize = 512;

/// Run parameters of one simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub channel: ChannelModel,
    /// Fixed word budget in bits; `None` disables compression and encoding.
    pub budget: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Optional row-column interleaver geometry (rows, cols); full blocks
    /// of rows*cols words are routed through the permutation and back.
    pub interleaver: Option<(usize, usize)>,
}

/// The static design under test: quantizer bank plus (optionally) the
/// compression tables built at the design point.
pub struct SimSystem<'a> {
    pub constellation: &'a Constellation,
    pub bank: &'a QuantizerBank,
    pub codebook: Option<&'a HuffmanCodebook>,
    pub losses: Option<&'a SubstitutionLossTable>,
}

/// Aggregated simulation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Per-bit plug-in mutual information on the (bit, final index) counts.
    pub per_bit_gmi: Vec<f64>,
    /// Batch-mean standard error of each per-bit estimate.
    pub per_bit_se: Vec<f64>,
    /// Sum of the per-bit estimates.
    pub total_gmi: f64,
    /// Pre-compression GMI sum (equals `total_gmi` when compression is off).
    pub total_gmi_uncompressed: f64,
    /// hist[n] = number of words whose pre-compression length is n.
    pub length_hist: Vec<u64>,
    /// hist[s] = number of words with s substituted positions.
    pub substitution_hist: Vec<u64>,
    /// Average per-word GMI loss predicted by the loss table for the
    /// realized substitutions.
    pub predicted_loss: f64,
    pub words: u64,
    pub substitutions: u64,
}

impl SimReport {
    /// Mean GMI loss attributable to compression.
    pub fn compression_loss(&self) -> f64 {
        self.total_gmi_uncompressed - self.total_gmi
    }

    /// P(N <= n) for the pre-compression encoded length.
    pub fn length_cdf(&self, n: usize) -> f64 {
        let total: u64 = self.length_hist.iter().sum();
        let le: u64 = self.length_hist.iter().take(n + 1).sum();
        le as f64 / total as f64
    }

    /// Two-column CCDF rows (n, P(N > n)) up to the largest observed length.
    pub fn length_ccdf(&self) -> Vec<(usize, f64)> {
        let total: u64 = self.length_hist.iter().sum();
        let mut rows = Vec::new();
        let mut above: u64 = total;
        for (n, &c) in self.length_hist.iter().enumerate() {
            above -= c;
            rows.push((n, above as f64 / total as f64));
            if above == 0 {
                break;
            }
        }
        rows
    }

    /// CSV with one row per bit plus a totals row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bit,gmi,se\n");
        for (k, (g, e)) in self.per_bit_gmi.iter().zip(&self.per_bit_se).enumerate() {
            s.push_str(&format!("{k},{g:.6},{e:.2e}\n"));
        }
        s.push_str(&format!(
            "total,{:.6},{:.6}\n",
            self.total_gmi,
            self.compression_loss()
        ));
        s
    }

    /// Two-column CCDF CSV of the pre-compression word length.
    pub fn ccdf_csv(&self) -> String {
        let mut s = String::from("n,p_length_gt_n\n");
        for (n, p) in self.length_ccdf() {
            s.push_str(&format!("{n},{p:.6e}\n"));
        }
        s
    }
}

struct BatchOut {
    counts_raw: BitIndexCounts,
    counts_final: BitIndexCounts,
    length_hist: Vec<u64>,
    substitution_hist: Vec<u64>,
    /// delta_sums[k][a] = sum over substitution events from original index
    /// a at position k of the table loss delta[k][a][c].
    delta_sums: Vec<Vec<f64>>,
    per_bit_gmi: Vec<f64>,
    substitutions: u64,
    words: u64,
}

/// Run the Monte Carlo chain.
pub fn run_sim(system: &SimSystem, config: &SimConfig) -> Result<SimReport> {
    assert!(config.trials >= 10_000, "reported statistics need >= 1e4 trials");
    let m = system.constellation.bits_per_symbol();
    if config.budget.is_some() {
        assert!(
            system.codebook.is_some() && system.losses.is_some(),
            "compression requires a codebook and a loss table"
        );
    }
    if let Some((rows, cols)) = config.interleaver {
        assert!(rows > 0 && cols > 0);
    }

    let n_batches = config.trials.div_ceil(BATCH);
    let batches: Vec<(usize, Result<BatchOut>)> = (0..n_batches)
        .into_par_iter()
        .map(|i| {
            let n = BATCH.min(config.trials - i * BATCH);
            (i, run_batch(system, config, i as u64, n))
        })
        .collect();

    let mut ordered: Vec<(usize, Result<BatchOut>)> = batches;
    ordered.sort_by_key(|&(i, _)| i);

    let mut counts_raw: BitIndexCounts = system
        .bank
        .quantizers
        .iter()
        .map(|q| [vec![0u64; q.levels()], vec![0u64; q.levels()]])
        .collect();
    let mut counts_final = counts_raw.clone();
    let mut length_hist = vec![0u64; MAX_TRACKED_LEN + 1];
    let mut substitution_hist = vec![0u64; m + 1];
    let mut delta_sums: Vec<Vec<f64>> = system
        .bank
        .quantizers
        .iter()
        .map(|q| vec![0.0; q.levels()])
        .collect();
    let mut substitutions = 0u64;
    let mut words = 0u64;
    let mut per_batch_gmi: Vec<Vec<f64>> = Vec::with_capacity(n_batches);
    for (_, r) in ordered {
        let b = r?;
        for k in 0..m {
            for s in 0..2 {
                for v in 0..counts_raw[k][s].len() {
                    counts_raw[k][s][v] += b.counts_raw[k][s][v];
                    counts_final[k][s][v] += b.counts_final[k][s][v];
                }
            }
            for a in 0..delta_sums[k].len() {
                delta_sums[k][a] += b.delta_sums[k][a];
            }
        }
        for (h, bh) in length_hist.iter_mut().zip(&b.length_hist) {
            *h += bh;
        }
        for (h, bh) in substitution_hist.iter_mut().zip(&b.substitution_hist) {
            *h += bh;
        }
        substitutions += b.substitutions;
        words += b.words;
        per_batch_gmi.push(b.per_bit_gmi);
    }
    // Table-predicted loss: the per-substitution deltas are full-merge
    // losses, so weight each source cell by its realized substitution
    // frequency conditional on the cell.
    let mut predicted_loss = 0.0;
    for k in 0..m {
        for a in 0..delta_sums[k].len() {
            let count_a = counts_raw[k][0][a] + counts_raw[k][1][a];
            if count_a > 0 {
                predicted_loss += delta_sums[k][a] / count_a as f64;
            }
        }
    }

    let per_bit_gmi: Vec<f64> = counts_final.iter().map(plugin_mi).collect();
    let per_bit_se: Vec<f64> = (0..m)
        .map(|k| {
            let vals: Vec<f64> = per_batch_gmi.iter().map(|b| b[k]).collect();
            batch_se(&vals)
        })
        .collect();
    let total_gmi: f64 = per_bit_gmi.iter().sum();
    let total_gmi_uncompressed: f64 = counts_raw.iter().map(plugin_mi).sum();
    Ok(SimReport {
        per_bit_gmi,
        per_bit_se,
        total_gmi,
        total_gmi_uncompressed,
        length_hist,
        substitution_hist,
        predicted_loss,
        words,
        substitutions,
    })
}

/// Standard error of the mean from per-batch means.
fn batch_se(vals: &[f64]) -> f64 {
    if vals.len() < 2 {
        return f64::INFINITY;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn run_batch(system: &SimSystem, config: &SimConfig, batch: u64, n: usize) -> Result<BatchOut> {
    let c = system.constellation;
    let m = c.bits_per_symbol();
    let axis = c.pam_axis();
    let n_axis = axis.len();
    let plls: Vec<_> = (0..m).map(|k| c.llr_piecewise(k)).collect();
    let sigma2 = config.channel.sigma2();
    let noise_std = (0.5 * sigma2).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(batch);

    let mut counts_raw: BitIndexCounts = system
        .bank
        .quantizers
        .iter()
        .map(|q| [vec![0u64; q.levels()], vec![0u64; q.levels()]])
        .collect();
    let mut counts_final = counts_raw.clone();
    let mut length_hist = vec![0u64; MAX_TRACKED_LEN + 1];
    let mut substitution_hist = vec![0u64; m + 1];
    let mut delta_sums: Vec<Vec<f64>> = system
        .bank
        .quantizers
        .iter()
        .map(|q| vec![0.0; q.levels()])
        .collect();
    let mut substitutions = 0u64;

    // Pending (bits, word) pairs awaiting a full interleaver block.
    let block_len = config.interleaver.map(|(r, c)| r * c);
    let mut pending_bits: Vec<Vec<u8>> = Vec::new();
    let mut pending_words: Vec<crate::compress::CompressedWord> = Vec::new();

    let mut indices = vec![0usize; m];
    let mut bits = vec![0u8; m];
    for _ in 0..n {
        let h = match config.channel.kind {
            ChannelKind::Awgn => 1.0,
            ChannelKind::RayleighBlock => {
                let u: f64 = rng.gen_range(0.0..1.0f64);
                (-(1.0 - u).ln()).sqrt()
            }
        };
        for axis_id in 0..2 {
            let li = rng.gen_range(0..n_axis);
            let y = h * axis.levels()[li] + noise_std * rng.sample::<f64, _>(StandardNormal);
            for pos in 0..m / 2 {
                let k = 2 * pos + axis_id;
                let lam = plls[k].eval(y, h, sigma2);
                indices[k] = system.bank.quantizers[k].quantize(lam);
                bits[k] = axis.bit(li, pos);
            }
        }
        for k in 0..m {
            counts_raw[k][bits[k] as usize][indices[k]] += 1;
        }
        if let Some(codebook) = system.codebook {
            let len = word_length(&indices, codebook);
            length_hist[len.min(MAX_TRACKED_LEN)] += 1;
            if let Some(budget) = config.budget {
                let losses = system.losses.unwrap();
                let compressed = compress_word(&indices, codebook, losses, budget)?;
                let subs = compressed
                    .iter()
                    .zip(&indices)
                    .filter(|(a, b)| a != b)
                    .count();
                substitution_hist[subs] += 1;
                substitutions += subs as u64;
                for (k, (&vc, &v0)) in compressed.iter().zip(&indices).enumerate() {
                    if vc != v0 {
                        delta_sums[k][v0] += losses.delta[k][v0][vc];
                    }
                }
                let word = encode(&compressed, codebook, budget)?;
                pending_bits.push(bits.clone());
                pending_words.push(word);
                let flush = match block_len {
                    Some(b) => pending_words.len() == b,
                    None => true,
                };
                if flush {
                    drain_block(
                        system,
                        config,
                        &mut pending_bits,
                        &mut pending_words,
                        &mut counts_final,
                    )?;
                }
            } else {
                for k in 0..m {
                    counts_final[k][bits[k] as usize][indices[k]] += 1;
                }
            }
        } else {
            for k in 0..m {
                counts_final[k][bits[k] as usize][indices[k]] += 1;
            }
        }
    }
    // Tail words that never filled a block skip the permutation but still
    // take the decode path.
    if !pending_words.is_empty() {
        drain_block(
            system,
            config,
            &mut pending_bits,
            &mut pending_words,
            &mut counts_final,
        )?;
    }

    let per_bit_gmi: Vec<f64> = counts_final.iter().map(plugin_mi).collect();
    Ok(BatchOut {
        counts_raw,
        counts_final,
        length_hist,
        substitution_hist,
        delta_sums,
        per_bit_gmi,
        substitutions,
        words: n as u64,
    })
}

fn drain_block(
    system: &SimSystem,
    config: &SimConfig,
    pending_bits: &mut Vec<Vec<u8>>,
    pending_words: &mut Vec<crate::compress::CompressedWord>,
    counts_final: &mut BitIndexCounts,
) -> Result<()> {
    let words = std::mem::take(pending_words);
    let bits_list = std::mem::take(pending_bits);
    let routed = match config.interleaver {
        Some((rows, cols)) if words.len() == rows * cols => {
            let perm = row_column_interleave(&words, rows, cols)?;
            let back = row_column_deinterleave(&perm, rows, cols)?;
            assert_eq!(back, words, "interleaver round trip must be lossless");
            back
        }
        _ => words,
    };
    for (word, wb) in routed.iter().zip(&bits_list) {
        let decoded = decode(word, system.codebook.unwrap())?;
        for (k, &v) in decoded.iter().enumerate() {
            counts_final[k][wb[k] as usize][v] += 1;
        }
    }
    Ok(())
}

/// Row-column block interleaver: write row-wise, read column-wise.
pub fn row_column_interleave<T: Clone>(words: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    if rows * cols != words.len() {
        return Err(Error::ShapeMismatch {
            rows,
            cols,
            words: words.len(),
        });
    }
    let mut out = Vec::with_capacity(words.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(words[r * cols + c].clone());
        }
    }
    Ok(out)
}

/// Inverse of [`row_column_interleave`].
pub fn row_column_deinterleave<T: Clone>(words: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    row_column_interleave(words, cols, rows)
}

/// Analytic GMI of a bank at a channel point using the fast fixed-order
/// fading quadrature (exact closed form on AWGN). Intended for C/N sweeps.
pub fn bank_gmi_fast(
    constellation: &Constellation,
    bank: &QuantizerBank,
    channel: &ChannelModel,
    fading_order: usize,
) -> f64 {
    let axis = constellation.pam_axis();
    bank.quantizers
        .par_iter()
        .map(|quant| {
            let pll = constellation.llr_piecewise(quant.bit_index());
            let pmf = match channel.kind {
                ChannelKind::Awgn => pmf_awgn(quant, &pll, axis, 1.0, channel.sigma2()),
                ChannelKind::RayleighBlock => {
                    pmf_fading_fixed(quant, &pll, axis, channel.sigma2(), fading_order)
                }
            };
            bgmi(&pmf)
        })
        .sum()
}

/// GMI of a bank whose decoder is fed uniform midpoint reconstructions
/// through one shared metric scale, at a channel point (fast fixed-order
/// fading path). Models the shared-quantizer baseline receiver.
pub fn uniform_recon_bank_gmi_fast(
    constellation: &Constellation,
    bank: &QuantizerBank,
    channel: &ChannelModel,
    fading_order: usize,
) -> f64 {
    let axis = constellation.pam_axis();
    let pmfs: Vec<crate::stats::PmfPair> = bank
        .quantizers
        .par_iter()
        .map(|quant| {
            let pll = constellation.llr_piecewise(quant.bit_index());
            match channel.kind {
                ChannelKind::Awgn => pmf_awgn(quant, &pll, axis, 1.0, channel.sigma2()),
                ChannelKind::RayleighBlock => {
                    pmf_fading_fixed(quant, &pll, axis, channel.sigma2(), fading_order)
                }
            }
        })
        .collect();
    let steps: Vec<f64> = bank
        .quantizers
        .iter()
        .map(|q| q.step().unwrap_or(1.0))
        .collect();
    crate::design::uniform_recon_bank_gmi(&pmfs, &steps)
}

/// C/N grid spacing for gap extraction.
pub const GAP_GRID_DB: f64 = 0.1;

/// Smallest C/N at which a monotone GMI curve reaches `target`, walking a
/// 0.1 dB grid upward from `cn_start` and interpolating linearly inside
/// the bracketing cell. Returns the gap relative to `cn_start`.
pub fn snr_gap(
    mut gmi_at: impl FnMut(f64) -> Result<f64>,
    target: f64,
    cn_start: f64,
    cn_max: f64,
) -> Result<f64> {
    let mut prev = gmi_at(cn_start)?;
    if prev >= target {
        return Ok(0.0);
    }
    let mut steps = 1usize;
    loop {
        let cn = cn_start + steps as f64 * GAP_GRID_DB;
        if cn > cn_max + 1e-9 {
            return Err(Error::TargetUnreachable {
                target,
                max_reached: prev,
            });
        }
        let cur = gmi_at(cn)?;
        if cur >= target {
            let frac = (target - prev) / (cur - prev);
            return Ok((steps - 1) as f64 * GAP_GRID_DB + frac * GAP_GRID_DB);
        }
        prev = cur;
        steps += 1;
    }
}

/// One evaluated point of the joint (W, budget) sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointPoint {
    pub budget: usize,
    pub total_bits: usize,
    pub gap_db: f64,
}

/// Sweep compressed designs over (budget, W) pairs and report the full
/// matrix plus the best W per budget.
pub struct JointSweep {
    pub points: Vec<JointPoint>,
    /// (budget, best W, best gap) per budget.
    pub best: Vec<(usize, usize, f64)>,
}

impl JointSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("budget,total_bits,gap_db\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{:.4}\n", p.budget, p.total_bits, p.gap_db));
        }
        s
    }
}
