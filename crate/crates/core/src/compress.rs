//! Lossy fixed-budget compression of quantizer-index words: per-position
//! Huffman codes over the unconditional index PMFs, a substitution loss
//! table, the greedy budget-meeting substitution loop, and bit-exact
//! encode/decode of the fixed-size words.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::design::{bgmi, QuantizerBank};
use crate::error::Error;
use crate::stats::{ChannelKind, ChannelModel, LlrPmfTable, PmfPair};
use crate::Result;

/// Weight assigned to zero-probability levels before Huffman construction
/// so every index stays encodable.
const ZERO_LEVEL_WEIGHT: f64 = 1e-12;

/// Canonical per-position Huffman code over quantizer indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionCode {
    /// Codeword bit-length per index.
    pub lengths: Vec<u8>,
    /// Canonical codewords (MSB-first in the low `lengths[v]` bits).
    pub codes: Vec<u32>,
}

/// Huffman codebook for all bit positions of a symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuffmanCodebook {
    pub positions: Vec<PositionCode>,
}

impl HuffmanCodebook {
    /// Shortest possible word length, sum over positions of the minimum
    /// codeword length.
    pub fn min_word_length(&self) -> usize {
        self.positions
            .iter()
            .map(|p| *p.lengths.iter().min().unwrap() as usize)
            .sum()
    }

    /// Expected codeword length of one position under a PMF.
    pub fn expected_length(&self, k: usize, pmf: &[f64]) -> f64 {
        self.positions[k]
            .lengths
            .iter()
            .zip(pmf)
            .map(|(&m, &p)| m as f64 * p)
            .sum()
    }
}

/// Huffman code lengths for one distribution, deterministic tie-breaking:
/// merge the two lowest-weight nodes, ties resolved by the smallest
/// original index contained in the subtree.
fn huffman_lengths(weights: &[f64]) -> Vec<u8> {
    let n = weights.len();
    assert!(n >= 2);
    // (weight, tie key = smallest source index, node id)
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(ordered::F64, usize, usize)>> =
        std::collections::BinaryHeap::new();
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    for (i, &w) in weights.iter().enumerate() {
        heap.push(std::cmp::Reverse((ordered::F64(w), i, i)));
    }
    while heap.len() > 1 {
        let std::cmp::Reverse((w1, t1, n1)) = heap.pop().unwrap();
        let std::cmp::Reverse((w2, t2, n2)) = heap.pop().unwrap();
        let id = parent.len();
        parent.push(usize::MAX);
        parent[n1] = id;
        parent[n2] = id;
        heap.push(std::cmp::Reverse((
            ordered::F64(w1.0 + w2.0),
            t1.min(t2),
            id,
        )));
    }
    (0..n)
        .map(|i| {
            let mut d = 0u8;
            let mut node = i;
            while parent[node] != usize::MAX {
                node = parent[node];
                d += 1;
            }
            d
        })
        .collect()
}

/// Assign canonical codewords for a set of Kraft-complete lengths:
/// indices sorted by (length, index), codes counted upward.
fn canonical_codes(lengths: &[u8]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&v| (lengths[v], v));
    let mut codes = vec![0u32; lengths.len()];
    let mut code = 0u32;
    let mut prev_len = lengths[order[0]];
    for (i, &v) in order.iter().enumerate() {
        if i > 0 {
            code += 1;
            code <<= lengths[v] - prev_len;
            prev_len = lengths[v];
        }
        codes[v] = code;
    }
    codes
}

/// Build the per-position Huffman codebook from the unconditional index
/// PMFs of a design.
pub fn build_huffman(pmfs: &LlrPmfTable) -> HuffmanCodebook {
    let positions = pmfs
        .per_bit
        .iter()
        .map(|pair| {
            let weights: Vec<f64> = pair
                .marginal()
                .iter()
                .map(|&p| p.max(ZERO_LEVEL_WEIGHT))
                .collect();
            let lengths = huffman_lengths(&weights);
            let codes = canonical_codes(&lengths);
            PositionCode { lengths, codes }
        })
        .collect();
    HuffmanCodebook { positions }
}

/// Encoded length of one index word.
pub fn word_length(indices: &[usize], codebook: &HuffmanCodebook) -> usize {
    indices
        .iter()
        .enumerate()
        .map(|(k, &v)| codebook.positions[k].lengths[v] as usize)
        .sum()
}

/// Average GMI loss of replacing index `a` by `c` at one position: the
/// difference of I(B;V) before and after merging cell a into cell c.
pub fn delta_loss(pmf: &PmfPair, a: usize, c: usize) -> f64 {
    if a == c {
        return 0.0;
    }
    let mut merged = pmf.clone();
    for b in 0..2 {
        merged.cond[b][c] += merged.cond[b][a];
        merged.cond[b][a] = 0.0;
    }
    bgmi(pmf) - bgmi(&merged)
}

/// Precomputed substitution losses and, per (position, original index,
/// current-length threshold), the cheapest shorter-codeword candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubstitutionLossTable {
    /// delta[k][a][c], the average GMI loss of a -> c at position k.
    pub delta: Vec<Vec<Vec<f64>>>,
    /// best[k][a][t] = candidate index c minimizing (delta, c) among
    /// codewords with length < t, or usize::MAX if none exists.
    best: Vec<Vec<Vec<usize>>>,
    max_len: usize,
}

impl SubstitutionLossTable {
    pub fn build(pmfs: &LlrPmfTable, codebook: &HuffmanCodebook) -> Self {
        let mut delta = Vec::with_capacity(pmfs.per_bit.len());
        let mut best = Vec::with_capacity(pmfs.per_bit.len());
        let max_len = codebook
            .positions
            .iter()
            .flat_map(|p| p.lengths.iter().copied())
            .max()
            .unwrap() as usize;
        for (k, pair) in pmfs.per_bit.iter().enumerate() {
            let l = pair.levels();
            let mut dk = vec![vec![0.0; l]; l];
            let base = bgmi(pair);
            for a in 0..l {
                for c in 0..l {
                    if a != c {
                        let mut merged = pair.clone();
                        for b in 0..2 {
                            merged.cond[b][c] += merged.cond[b][a];
                            merged.cond[b][a] = 0.0;
                        }
                        // Clamp the tiny negatives float cancellation leaves.
                        dk[a][c] = (base - bgmi(&merged)).max(0.0);
                    }
                }
            }
            // For every current-length threshold t, the cheapest candidate
            // with a strictly shorter codeword; ties by smallest index.
            let lengths = &codebook.positions[k].lengths;
            let mut bk = vec![vec![usize::MAX; max_len + 2]; l];
            for a in 0..l {
                for t in 0..=(max_len + 1) {
                    let mut best_c = usize::MAX;
                    let mut best_d = f64::INFINITY;
                    for c in 0..l {
                        if (lengths[c] as usize) < t && dk[a][c] < best_d {
                            best_d = dk[a][c];
                            best_c = c;
                        }
                    }
                    bk[a][t] = best_c;
                }
            }
            delta.push(dk);
            best.push(bk);
            let _ = k;
        }
        SubstitutionLossTable {
            delta,
            best,
            max_len,
        }
    }

    #[inline]
    fn best_candidate(&self, k: usize, a: usize, current_len: usize) -> Option<(usize, f64)> {
        let c = self.best[k][a][current_len.min(self.max_len + 1)];
        (c != usize::MAX).then(|| (c, self.delta[k][a][c]))
    }
}

/// Greedy budget-meeting substitution: while the encoded word exceeds the
/// budget, apply the single substitution with the smallest average GMI
/// loss among candidates with strictly shorter codewords (ties by smallest
/// position, then smallest index). Losses are always measured against the
/// original index of the position.
pub fn compress_word(
    indices: &[usize],
    codebook: &HuffmanCodebook,
    losses: &SubstitutionLossTable,
    budget: usize,
) -> Result<Vec<usize>> {
    let needed = codebook.min_word_length();
    if needed > budget {
        return Err(Error::InfeasibleBudget { needed, budget });
    }
    let mut out = indices.to_vec();
    let mut n = word_length(indices, codebook);
    let initial = n;
    // One bit of progress per iteration bounds the loop by the initial
    // excess; the candidate-exhaustion bound sum(L_k) is added as a guard.
    let cap = initial.saturating_sub(budget)
        + codebook
            .positions
            .iter()
            .map(|p| p.lengths.len())
            .sum::<usize>();
    let mut iterations = 0usize;
    while n > budget {
        let mut pick: Option<(f64, usize, usize)> = None;
        for (k, &orig) in indices.iter().enumerate() {
            let cur_len = codebook.positions[k].lengths[out[k]] as usize;
            if let Some((c, d)) = losses.best_candidate(k, orig, cur_len) {
                let better = match pick {
                    None => true,
                    Some((pd, pk, pc)) => d < pd || (d == pd && (k, c) < (pk, pc)),
                };
                if better {
                    pick = Some((d, k, c));
                }
            }
        }
        let (_, k, c) = pick.expect("a feasible budget always leaves a candidate");
        n -= codebook.positions[k].lengths[out[k]] as usize;
        out[k] = c;
        n += codebook.positions[k].lengths[c] as usize;
        iterations += 1;
        assert!(iterations <= cap, "substitution loop exceeded its bound");
    }
    Ok(out)
}

/// A fixed-size compressed word: the concatenated codewords, zero-padded
/// to exactly `budget` bits, packed LSB-first within bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedWord {
    pub bits: usize,
    pub payload: Vec<u8>,
}

/// Pack the codewords of an index word into a fixed-size payload.
pub fn encode(indices: &[usize], codebook: &HuffmanCodebook, budget: usize) -> Result<CompressedWord> {
    let needed = word_length(indices, codebook);
    if needed > budget {
        return Err(Error::InfeasibleBudget { needed, budget });
    }
    let mut payload = vec![0u8; budget.div_ceil(8)];
    let mut pos = 0usize;
    for (k, &v) in indices.iter().enumerate() {
        let len = codebook.positions[k].lengths[v] as usize;
        let code = codebook.positions[k].codes[v];
        // MSB of the codeword goes first in the stream.
        for i in (0..len).rev() {
            if (code >> i) & 1 == 1 {
                payload[pos / 8] |= 1 << (pos % 8);
            }
            pos += 1;
        }
    }
    Ok(CompressedWord {
        bits: budget,
        payload,
    })
}

/// Decode a fixed-size payload back into one index per position via
/// canonical (first-code per length) decoding.
pub fn decode(word: &CompressedWord, codebook: &HuffmanCodebook) -> Result<Vec<usize>> {
    let mut pos = 0usize;
    let mut out = Vec::with_capacity(codebook.positions.len());
    for pc in &codebook.positions {
        let max_len = *pc.lengths.iter().max().unwrap() as usize;
        let mut code = 0u32;
        let mut len = 0usize;
        let v = loop {
            if len >= max_len {
                return Err(Error::MalformedWord(pos));
            }
            if pos >= word.bits {
                return Err(Error::MalformedWord(pos));
            }
            let bit = (word.payload[pos / 8] >> (pos % 8)) & 1;
            pos += 1;
            code = (code << 1) | bit as u32;
            len += 1;
            // Linear scan is fine here: position alphabets are small.
            if let Some(v) = (0..pc.lengths.len())
                .find(|&v| pc.lengths[v] as usize == len && pc.codes[v] == code)
            {
                break v;
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// Monte Carlo estimate of the post-compression GMI sum_k I(B_k; V'_k) of
/// a design at a channel point, by the plug-in estimator on empirical
/// (bit, substituted index) counts.
#[allow(clippy::too_many_arguments)]
pub fn expected_compressed_gmi(
    constellation: &Constellation,
    bank: &QuantizerBank,
    codebook: &HuffmanCodebook,
    losses: &SubstitutionLossTable,
    budget: usize,
    channel: &ChannelModel,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let counts = simulate_compressed_counts(
        constellation,
        bank,
        codebook,
        losses,
        budget,
        channel,
        trials,
        seed,
    )?;
    Ok(counts.iter().map(plugin_mi).sum())
}

/// Per-bit joint counts of (bit value, index).
pub type BitIndexCounts = Vec<[Vec<u64>; 2]>;

/// Plug-in mutual information (bits) from joint counts.
pub fn plugin_mi(counts: &[Vec<u64>; 2]) -> f64 {
    let n: u64 = counts[0].iter().sum::<u64>() + counts[1].iter().sum::<u64>();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let p_b = [
        counts[0].iter().sum::<u64>() as f64 / nf,
        counts[1].iter().sum::<u64>() as f64 / nf,
    ];
    let levels = counts[0].len();
    let mut mi = 0.0;
    for v in 0..levels {
        let p_v = (counts[0][v] + counts[1][v]) as f64 / nf;
        if p_v <= 0.0 {
            continue;
        }
        for b in 0..2 {
            let p_bv = counts[b][v] as f64 / nf;
            if p_bv > 0.0 {
                mi += p_bv * (p_bv / (p_b[b] * p_v)).log2();
            }
        }
    }
    mi.max(0.0)
}

#[allow(clippy::too_many_arguments)]
fn simulate_compressed_counts(
    constellation: &Constellation,
    bank: &QuantizerBank,
    codebook: &HuffmanCodebook,
    losses: &SubstitutionLossTable,
    budget: usize,
    channel: &ChannelModel,
    trials: usize,
    seed: u64,
) -> Result<BitIndexCounts> {
    use rand::SeedableRng;
    let m = constellation.bits_per_symbol();
    let axis = constellation.pam_axis();
    let n_axis = axis.len();
    let plls: Vec<_> = (0..m).map(|k| constellation.llr_piecewise(k)).collect();
    let sigma2 = channel.sigma2();
    let noise_std = (0.5 * sigma2).sqrt();
    let mut counts: BitIndexCounts = bank
        .quantizers
        .iter()
        .map(|q| [vec![0u64; q.levels()], vec![0u64; q.levels()]])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = vec![0usize; m];
    let mut bits = vec![0u8; m];
    for _ in 0..trials {
        let h = match channel.kind {
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
                indices[k] = bank.quantizers[k].quantize(lam);
                bits[k] = axis.bit(li, pos);
            }
        }
        let compressed = compress_word(&indices, codebook, losses, budget)?;
        for k in 0..m {
            counts[k][bits[k] as usize][compressed[k]] += 1;
        }
    }
    Ok(counts)
}

/// Minimal ordered-f64 wrapper for the Huffman heap.
mod ordered {
    #[derive(PartialEq, PartialOrd)]
    pub struct F64(pub f64);
    impl Eq for F64 {}
    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Ord for F64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.partial_cmp(other).unwrap()
        }
    }
}
