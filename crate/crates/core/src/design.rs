//! GMI-maximizing quantizer design: per-bit uniform quantizers, BGMI
//! evaluation, optimal step search and greedy bit allocation with an
//! exhaustive-search oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::Error;
use crate::numerics::log2_1p_exp;
use crate::stats::{pmf_at, pmf_awgn, pmf_fading_fixed, ChannelKind, ChannelModel, LlrPmfTable, PmfPair};
use crate::Result;

/// Probabilities below this are treated as zero in MI sums (0 log 0 = 0).
const P_FLOOR: f64 = 1e-300;

/// Reconstruction clamp for cells with a vanishing conditional probability.
pub const RECON_CLAMP: f64 = 27.631021115928547; // ln(1e12)

/// Uniform per-bit LLR quantizer: 2^w cells with step q, boundaries
/// symmetric about zero, unbounded end cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerBitQuantizer {
    bit_index: usize,
    w: u32,
    /// Step size; `None` for the 1-bit hard decision, whose single boundary
    /// at zero does not depend on any step.
    q: Option<f64>,
    /// Eq.-(15)-style reconstruction values, one per cell; empty until a
    /// PMF is attached.
    recon: Vec<f64>,
}

impl PerBitQuantizer {
    /// w-bit uniform quantizer with step q (w >= 2).
    pub fn uniform(bit_index: usize, w: u32, q: f64) -> Self {
        assert!(w >= 2, "use `hard` for the 1-bit quantizer");
        assert!(q > 0.0);
        PerBitQuantizer {
            bit_index,
            w,
            q: Some(q),
            recon: Vec::new(),
        }
    }

    /// 1-bit hard decision on the LLR sign.
    pub fn hard(bit_index: usize) -> Self {
        PerBitQuantizer {
            bit_index,
            w: 1,
            q: None,
            recon: Vec::new(),
        }
    }

    pub fn bit_index(&self) -> usize {
        self.bit_index
    }

    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn step(&self) -> Option<f64> {
        self.q
    }

    /// Number of cells, 2^w.
    pub fn levels(&self) -> usize {
        1usize << self.w
    }

    /// Interior cell boundaries, ascending: (l - L/2) q for l = 1..L-1.
    pub fn boundaries(&self) -> Vec<f64> {
        let l = self.levels();
        let q = self.q.unwrap_or(1.0);
        (1..l)
            .map(|j| (j as f64 - l as f64 / 2.0) * q)
            .collect()
    }

    /// Map an LLR to its 0-based cell index; total on all reals.
    #[inline]
    pub fn quantize(&self, lambda: f64) -> usize {
        let l = self.levels();
        if self.w == 1 {
            return usize::from(lambda >= 0.0);
        }
        let q = self.q.unwrap();
        let idx = (lambda / q).floor() + l as f64 / 2.0;
        if idx < 0.0 {
            0
        } else if idx >= (l - 1) as f64 {
            l - 1
        } else {
            idx as usize
        }
    }

    /// Reconstruction values (empty until attached).
    pub fn recon(&self) -> &[f64] {
        &self.recon
    }

    /// Attach reconstruction values computed from a PMF via
    /// [`reconstruction_levels`] with x = 1.
    pub fn with_reconstruction(mut self, pmf: &PmfPair) -> Self {
        self.recon = reconstruction_levels(pmf, 1.0);
        self
    }
}

/// GMI-optimal reconstruction values (1/x) ln(p(v|1)/p(v|0)), clamped to
/// +-ln(1e12); cells with no mass take the clamp of their side of zero.
pub fn reconstruction_levels(pmf: &PmfPair, x: f64) -> Vec<f64> {
    assert!(x > 0.0);
    let l = pmf.levels();
    (0..l)
        .map(|v| {
            let p0 = pmf.cond[0][v];
            let p1 = pmf.cond[1][v];
            let r = if p0 > P_FLOOR && p1 > P_FLOOR {
                (p1 / p0).ln().clamp(-RECON_CLAMP, RECON_CLAMP)
            } else if p1 > P_FLOOR {
                RECON_CLAMP
            } else if p0 > P_FLOOR {
                -RECON_CLAMP
            } else if v < l / 2 {
                -RECON_CLAMP
            } else {
                RECON_CLAMP
            };
            r / x
        })
        .collect()
}

/// Mutual information I(B; V) in bits from a conditional PMF pair
/// (equiprobable bits).
pub fn bgmi(pmf: &PmfPair) -> f64 {
    let marg = pmf.marginal();
    let mut acc = 0.0;
    for b in 0..2 {
        for v in 0..pmf.levels() {
            let p = pmf.cond[b][v];
            if p > P_FLOOR {
                acc += 0.5 * p * (p / marg[v]).log2();
            }
        }
    }
    acc.max(0.0)
}

/// Generalized BGMI for arbitrary reconstruction values and metric scale x:
/// 1 - sum_v 1/2 [ p(v|0) log2(1 + e^{r_v x}) + p(v|1) log2(1 + e^{-r_v x}) ].
pub fn bgmi_generalized(pmf: &PmfPair, recon: &[f64], x: f64) -> f64 {
    assert!(x > 0.0);
    assert_eq!(recon.len(), pmf.levels());
    let mut loss = 0.0;
    for v in 0..pmf.levels() {
        let z = recon[v] * x;
        loss += 0.5 * (pmf.cond[0][v] * log2_1p_exp(z) + pmf.cond[1][v] * log2_1p_exp(-z));
    }
    1.0 - loss
}

/// Objective used to select the quantization step.
///
/// `MutualInformation` maximizes I(B;V) directly (the reconstruction-free
/// channel quantity). `UniformReconGmi` models a decoder fed uniformly
/// spaced reconstruction values (the cell midpoints) with an optimized
/// metric scale, and maximizes the resulting generalized BGMI; this is the
/// objective that reproduces the reference step tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepObjective {
    MutualInformation,
    UniformReconGmi,
}

/// Generalized BGMI of a uniform quantizer whose reconstruction values are
/// the cell midpoints, maximized over the decoder metric scale x.
pub fn uniform_recon_gmi(pmf: &PmfPair, step: f64) -> f64 {
    let l = pmf.levels();
    let recon: Vec<f64> = (0..l)
        .map(|v| (v as f64 - l as f64 / 2.0 + 0.5) * step)
        .collect();
    max_bgmi_over_scale(pmf, &recon)
}

/// Maximize [`bgmi_generalized`] over the metric scale by golden-section
/// search on ln x.
pub fn max_bgmi_over_scale(pmf: &PmfPair, recon: &[f64]) -> f64 {
    let f = |lx: f64| bgmi_generalized(pmf, recon, lx.exp());
    let (mut a, mut b) = ((0.02f64).ln(), (8f64).ln());
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - gr * (b - a), a + gr * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

fn step_metric(pmf: &PmfPair, step: f64, objective: StepObjective) -> f64 {
    match objective {
        StepObjective::MutualInformation => bgmi(pmf),
        StepObjective::UniformReconGmi => uniform_recon_gmi(pmf, step),
    }
}

/// System GMI of a bank whose decoder is fed uniformly spaced (cell
/// midpoint) reconstruction values with one shared metric scale: the
/// maximum over x of the summed generalized BGMIs.
///
/// This models a receiver without per-bit reconstruction tables (the
/// shared-quantizer baseline); a bank with matched Eq.-(15)-style
/// reconstructions is measured by [`bgmi`] instead.
pub fn uniform_recon_bank_gmi(pmfs: &[PmfPair], steps: &[f64]) -> f64 {
    assert_eq!(pmfs.len(), steps.len());
    let recons: Vec<Vec<f64>> = pmfs
        .iter()
        .zip(steps)
        .map(|(pmf, &q)| {
            let l = pmf.levels();
            (0..l)
                .map(|v| (v as f64 - l as f64 / 2.0 + 0.5) * q)
                .collect()
        })
        .collect();
    let f = |lx: f64| -> f64 {
        let x = lx.exp();
        pmfs.iter()
            .zip(&recons)
            .map(|(pmf, recon)| bgmi_generalized(pmf, recon, x))
            .sum()
    };
    let (mut a, mut b) = ((0.02f64).ln(), (8f64).ln());
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - gr * (b - a), a + gr * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Search grid: 200 log-spaced coarse points over [1e-3, 64], then 10x
/// zoom rounds around the incumbent (21-point linear grids) until the
/// resolution is at or below 0.005, with at least two rounds.
const COARSE_POINTS: usize = 200;
const COARSE_LO: f64 = 1e-3;
const COARSE_HI: f64 = 64.0;
const ZOOM_POINTS: usize = 21;
const FINAL_RESOLUTION: f64 = 0.005;

/// Identifier of the step-search grid; bump when the schedule changes so
/// cached artifacts are invalidated.
pub const GRID_VERSION: u32 = 1;

fn grid_search_max(mut eval: impl FnMut(f64) -> f64) -> (f64, f64) {
    let ratio = (COARSE_HI / COARSE_LO).powf(1.0 / (COARSE_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| COARSE_LO * ratio.powi(i as i32))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&q| eval(q)).collect();
    let mut best_i = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[best_i] {
            best_i = i;
        }
    }
    let mut best_q = grid[best_i];
    let mut best_v = vals[best_i];
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(COARSE_POINTS - 1)];

    let mut rounds = 0;
    loop {
        let step = (hi - lo) / (ZOOM_POINTS - 1) as f64;
        for i in 0..ZOOM_POINTS {
            let q = lo + i as f64 * step;
            if q <= 0.0 {
                continue;
            }
            let v = eval(q);
            if v > best_v {
                best_v = v;
                best_q = q;
            }
        }
        rounds += 1;
        if rounds >= 2 && step <= FINAL_RESOLUTION {
            break;
        }
        lo = (best_q - step).max(COARSE_LO / 10.0);
        hi = best_q + step;
    }
    (best_q, best_v)
}

/// Quadrature orders used inside the step search (the returned optimum is
/// re-evaluated with the converged fading PMF).
const SEARCH_ORDER_COARSE: usize = 24;
const SEARCH_ORDER_REFINE: usize = 48;

/// Find the step maximizing the selection objective for one bit and width.
///
/// Returns `(step, mi, metric)`: the selected step (`None` for w = 1,
/// where no step exists), the mutual information I(B;V) of the resulting
/// quantizer, and the objective value itself.
pub fn optimize_step(
    constellation: &Constellation,
    bit_index: usize,
    w: u32,
    channel: &ChannelModel,
    objective: StepObjective,
) -> Result<(Option<f64>, f64, f64)> {
    assert!(w >= 1);
    let axis = constellation.pam_axis();
    let pll = constellation.llr_piecewise(bit_index);
    if w == 1 {
        let quant = PerBitQuantizer::hard(bit_index);
        let pmf = pmf_at(&quant, &pll, axis, channel)?;
        // Any symmetric reconstruction pair is scale-equivalent for the
        // 1-bit quantizer.
        let metric = match objective {
            StepObjective::MutualInformation => bgmi(&pmf),
            StepObjective::UniformReconGmi => max_bgmi_over_scale(&pmf, &[-0.5, 0.5]),
        };
        return Ok((None, bgmi(&pmf), metric));
    }
    let sigma2 = channel.sigma2();
    let (q_star, _) = match channel.kind {
        ChannelKind::Awgn => grid_search_max(|q| {
            let quant = PerBitQuantizer::uniform(bit_index, w, q);
            step_metric(&pmf_awgn(&quant, &pll, axis, 1.0, sigma2), q, objective)
        }),
        ChannelKind::RayleighBlock => {
            // Coarse pass at a light quadrature order just to bracket the
            // optimum, then a second full search at the refine order.
            let mut order = SEARCH_ORDER_COARSE;
            let mut pass = 0;
            grid_search_max(|q| {
                pass += 1;
                if pass == COARSE_POINTS + 1 {
                    order = SEARCH_ORDER_REFINE;
                }
                let quant = PerBitQuantizer::uniform(bit_index, w, q);
                step_metric(
                    &pmf_fading_fixed(&quant, &pll, axis, sigma2, order),
                    q,
                    objective,
                )
            })
        }
    };
    let quant = PerBitQuantizer::uniform(bit_index, w, q_star);
    let pmf = pmf_at(&quant, &pll, axis, channel)?;
    Ok((
        Some(q_star),
        bgmi(&pmf),
        step_metric(&pmf, q_star, objective),
    ))
}

/// Per-pair optimal steps, MI values and selection-metric values for all
/// candidate widths.
///
/// Gray symmetry makes the two bits of an axis pair identical, so entries
/// are stored per axis position (bit_index / 2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiTable {
    /// I(B;V) at the selected step; mi[pos][w] for w = 0..=w_max, mi[pos][0] = 0.
    pub mi: Vec<Vec<f64>>,
    /// Selection-objective value at the selected step (equals `mi` when the
    /// objective is `MutualInformation`). Bit allocation runs on these.
    pub metric: Vec<Vec<f64>>,
    /// step[pos][w]; None for w <= 1.
    pub step: Vec<Vec<Option<f64>>>,
    pub w_max: u32,
    pub objective: StepObjective,
}

impl MiTable {
    pub fn pairs(&self) -> usize {
        self.mi.len()
    }

    pub fn mi_for_bit(&self, bit_index: usize, w: u32) -> f64 {
        self.mi[bit_index / 2][w as usize]
    }

    pub fn metric_for_bit(&self, bit_index: usize, w: u32) -> f64 {
        self.metric[bit_index / 2][w as usize]
    }

    pub fn step_for_bit(&self, bit_index: usize, w: u32) -> Option<f64> {
        self.step[bit_index / 2][w as usize]
    }

    /// Whether metric[pos][w] has nonincreasing increments in w for every
    /// pos (the condition under which greedy allocation is provably optimal).
    pub fn is_upper_convex(&self, tol: f64) -> bool {
        self.metric.iter().all(|row| {
            row.windows(3)
                .all(|t| (t[1] - t[0]) + tol >= (t[2] - t[1]))
        })
    }

    /// A copy restricted to widths up to `w_max` (for designs that must
    /// stay within a smaller per-bit cap).
    pub fn capped(&self, w_max: u32) -> MiTable {
        assert!(w_max <= self.w_max);
        let take = w_max as usize + 1;
        MiTable {
            mi: self.mi.iter().map(|r| r[..take].to_vec()).collect(),
            metric: self.metric.iter().map(|r| r[..take].to_vec()).collect(),
            step: self.step.iter().map(|r| r[..take].to_vec()).collect(),
            w_max,
            objective: self.objective,
        }
    }
}

/// Fill the per-(pair, width) table, in parallel over tuples.
pub fn build_mi_table(
    constellation: &Constellation,
    channel: &ChannelModel,
    w_max: u32,
    objective: StepObjective,
) -> Result<MiTable> {
    let pairs = constellation.bits_per_axis();
    let tuples: Vec<(usize, u32)> = (0..pairs)
        .flat_map(|pos| (1..=w_max).map(move |w| (pos, w)))
        .collect();
    type StepResult = Result<(Option<f64>, f64, f64)>;
    let results: Vec<((usize, u32), StepResult)> = tuples
        .par_iter()
        .map(|&(pos, w)| {
            (
                (pos, w),
                optimize_step(constellation, 2 * pos, w, channel, objective),
            )
        })
        .collect();

    let mut mi = vec![vec![0.0; w_max as usize + 1]; pairs];
    let mut metric = vec![vec![0.0; w_max as usize + 1]; pairs];
    let mut step = vec![vec![None; w_max as usize + 1]; pairs];
    for ((pos, w), r) in results {
        let (q, i, m) = r?;
        mi[pos][w as usize] = i;
        metric[pos][w as usize] = m;
        step[pos][w as usize] = q;
    }
    Ok(MiTable {
        mi,
        metric,
        step,
        w_max,
        objective,
    })
}

/// Greedy bit allocation: assign one bit at a time to the position with the
/// largest MI gain; ties go to the smallest bit index.
pub fn allocate_bits(table: &MiTable, total_bits: usize, bits_per_symbol: usize) -> Result<Vec<u32>> {
    let capacity = bits_per_symbol * table.w_max as usize;
    if total_bits > capacity {
        return Err(Error::InfeasibleBudget {
            needed: total_bits,
            budget: capacity,
        });
    }
    let mut w = vec![0u32; bits_per_symbol];
    for _ in 0..total_bits {
        let mut best_k = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for k in 0..bits_per_symbol {
            if w[k] >= table.w_max {
                continue;
            }
            let gain = table.metric_for_bit(k, w[k] + 1) - table.metric_for_bit(k, w[k]);
            if gain > best_gain {
                best_gain = gain;
                best_k = k;
            }
        }
        w[best_k] += 1;
    }
    Ok(w)
}

/// Globally optimal allocation by enumeration of all width vectors summing
/// to the budget. Oracle for the greedy procedure on small instances.
pub fn allocate_bits_exhaustive(
    table: &MiTable,
    total_bits: usize,
    bits_per_symbol: usize,
) -> Result<Vec<u32>> {
    if bits_per_symbol > 8 || total_bits > 24 {
        return Err(Error::TooLarge(format!(
            "{bits_per_symbol} positions, budget {total_bits}"
        )));
    }
    if total_bits > bits_per_symbol * table.w_max as usize {
        return Err(Error::InfeasibleBudget {
            needed: total_bits,
            budget: bits_per_symbol * table.w_max as usize,
        });
    }
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut current = vec![0u32; bits_per_symbol];
    fn recurse(
        table: &MiTable,
        current: &mut Vec<u32>,
        k: usize,
        remaining: usize,
        acc: f64,
        best: &mut Option<(f64, Vec<u32>)>,
    ) {
        let m = current.len();
        if k == m {
            if remaining == 0 && best.as_ref().map_or(true, |(b, _)| acc > *b) {
                *best = Some((acc, current.clone()));
            }
            return;
        }
        // Prune: remaining bits must fit in the remaining positions.
        let cap = (m - k) * table.w_max as usize;
        if remaining > cap {
            return;
        }
        for w in 0..=table.w_max.min(remaining as u32) {
            current[k] = w;
            recurse(
                table,
                current,
                k + 1,
                remaining - w as usize,
                acc + table.metric_for_bit(k, w),
                best,
            );
        }
        current[k] = 0;
    }
    recurse(table, &mut current, 0, total_bits, 0.0, &mut best);
    Ok(best.expect("feasible budget always yields a vector").1)
}

/// Sum of the tabulated per-bit MI for an allocation (Eq.-16 values).
pub fn allocation_mi(table: &MiTable, alloc: &[u32]) -> f64 {
    alloc
        .iter()
        .enumerate()
        .map(|(k, &w)| table.mi_for_bit(k, w))
        .sum()
}

/// Sum of the selection-metric values for an allocation (the quantity the
/// greedy and exhaustive searches maximize).
pub fn allocation_metric(table: &MiTable, alloc: &[u32]) -> f64 {
    alloc
        .iter()
        .enumerate()
        .map(|(k, &w)| table.metric_for_bit(k, w))
        .sum()
}

/// A full bank of per-bit quantizers with attached reconstructions, plus
/// the design-point PMF tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizerBank {
    pub quantizers: Vec<PerBitQuantizer>,
}

impl QuantizerBank {
    pub fn total_bits(&self) -> usize {
        self.quantizers.iter().map(|q| q.width() as usize).sum()
    }
}

/// Build the quantizer bank for an allocation, with reconstructions from
/// the design-point PMFs. Returns the bank and its PMF table.
pub fn bank_from_alloc(
    constellation: &Constellation,
    channel: &ChannelModel,
    table: &MiTable,
    alloc: &[u32],
) -> Result<(QuantizerBank, LlrPmfTable)> {
    assert_eq!(alloc.len(), constellation.bits_per_symbol());
    let axis = constellation.pam_axis();
    let per_bit: Vec<Result<(PerBitQuantizer, PmfPair)>> = (0..alloc.len())
        .into_par_iter()
        .map(|k| {
            let w = alloc[k];
            assert!(w >= 1, "zero-width quantizers cannot be instantiated");
            let quant = match table.step_for_bit(k, w) {
                Some(q) => PerBitQuantizer::uniform(k, w, q),
                None => PerBitQuantizer::hard(k),
            };
            let pll = constellation.llr_piecewise(k);
            let pmf = pmf_at(&quant, &pll, axis, channel)?;
            Ok((quant.with_reconstruction(&pmf), pmf))
        })
        .collect();
    let mut quantizers = Vec::with_capacity(alloc.len());
    let mut pmfs = Vec::with_capacity(alloc.len());
    for r in per_bit {
        let (q, p) = r?;
        quantizers.push(q);
        pmfs.push(p);
    }
    Ok((QuantizerBank { quantizers }, LlrPmfTable { per_bit: pmfs }))
}

/// Design a bank for a total bit budget: fill the MI table, allocate
/// greedily, and instantiate the quantizers.
pub fn design_bank(
    constellation: &Constellation,
    channel: &ChannelModel,
    total_bits: usize,
    w_max: u32,
    objective: StepObjective,
) -> Result<(QuantizerBank, LlrPmfTable)> {
    let table = build_mi_table(constellation, channel, w_max, objective)?;
    let alloc = allocate_bits(&table, total_bits, constellation.bits_per_symbol())?;
    bank_from_alloc(constellation, channel, &table, &alloc)
}

/// Baseline bank: one shared width and one shared step for every bit, the
/// step chosen to maximize the average BGMI across positions.
pub fn unopt_bank(
    constellation: &Constellation,
    channel: &ChannelModel,
    w: u32,
    objective: StepObjective,
) -> Result<(QuantizerBank, LlrPmfTable)> {
    assert!(w >= 2, "a shared hard-decision baseline has no step to tune");
    let axis = constellation.pam_axis();
    let sigma2 = channel.sigma2();
    let pairs = constellation.bits_per_axis();
    let plls: Vec<_> = (0..pairs).map(|p| constellation.llr_piecewise(2 * p)).collect();

    let sum_bgmi = |q: f64, order: Option<usize>| -> f64 {
        let pmfs: Vec<PmfPair> = plls
            .iter()
            .enumerate()
            .map(|(p, pll)| {
                let quant = PerBitQuantizer::uniform(2 * p, w, q);
                match order {
                    None => pmf_awgn(&quant, pll, axis, 1.0, sigma2),
                    Some(n) => pmf_fading_fixed(&quant, pll, axis, sigma2, n),
                }
            })
            .collect();
        match objective {
            StepObjective::MutualInformation => pmfs.iter().map(bgmi).sum(),
            // The baseline decoder sees midpoint values through one shared
            // scale, so its selection measure is the joint-x GMI.
            StepObjective::UniformReconGmi => {
                uniform_recon_bank_gmi(&pmfs, &vec![q; pmfs.len()])
            }
        }
    };
    let (q_star, _) = match channel.kind {
        ChannelKind::Awgn => grid_search_max(|q| sum_bgmi(q, None)),
        ChannelKind::RayleighBlock => {
            let mut pass = 0;
            grid_search_max(|q| {
                pass += 1;
                let order = if pass <= COARSE_POINTS {
                    SEARCH_ORDER_COARSE
                } else {
                    SEARCH_ORDER_REFINE
                };
                sum_bgmi(q, Some(order))
            })
        }
    };

    let alloc = vec![w; constellation.bits_per_symbol()];
    let axis = constellation.pam_axis();
    let mut quantizers = Vec::new();
    let mut pmfs = Vec::new();
    for k in 0..alloc.len() {
        let quant = PerBitQuantizer::uniform(k, w, q_star);
        let pll = constellation.llr_piecewise(k);
        let pmf = pmf_at(&quant, &pll, axis, channel)?;
        quantizers.push(quant.with_reconstruction(&pmf));
        pmfs.push(pmf);
    }
    Ok((QuantizerBank { quantizers }, LlrPmfTable { per_bit: pmfs }))
}

/// Total GMI of a bank at an arbitrary channel point: the sum over bits of
/// I(B_k; V_k) under the bank's (fixed) quantizers.
pub fn bank_gmi(
    constellation: &Constellation,
    bank: &QuantizerBank,
    channel: &ChannelModel,
) -> Result<f64> {
    let axis = constellation.pam_axis();
    let per_bit: Vec<Result<f64>> = bank
        .quantizers
        .par_iter()
        .map(|quant| {
            let pll = constellation.llr_piecewise(quant.bit_index());
            Ok(bgmi(&pmf_at(quant, &pll, axis, channel)?))
        })
        .collect();
    let mut acc = 0.0;
    for r in per_bit {
        acc += r?;
    }
    Ok(acc)
}

/// Fine-quantizer proxy for the unquantized per-bit BGMI sum: 4096 cells
/// of width 0.02 cover LLRs to +-41, beyond which the end cells carry
/// saturated likelihood ratios.
///
/// The fading average runs at a fixed high quadrature order: at 4096 cells
/// the per-cell doubling contract is out of reach, but the GMI functional
/// itself is stable to ~1e-5 between orders 96 and 192.
pub fn unquantized_gmi(constellation: &Constellation, channel: &ChannelModel) -> Result<f64> {
    let bank = fine_reference_bank(constellation, 12, 0.02);
    match channel.kind {
        ChannelKind::Awgn => bank_gmi(constellation, &bank, channel),
        ChannelKind::RayleighBlock => {
            let axis = constellation.pam_axis();
            let per_bit: Vec<f64> = bank
                .quantizers
                .par_iter()
                .map(|quant| {
                    let pll = constellation.llr_piecewise(quant.bit_index());
                    bgmi(&pmf_fading_fixed(
                        quant,
                        &pll,
                        axis,
                        channel.sigma2(),
                        192,
                    ))
                })
                .collect();
            Ok(per_bit.iter().sum())
        }
    }
}

/// Reference bank with `w`-bit cells of step `q` on every bit.
pub fn fine_reference_bank(constellation: &Constellation, w: u32, q: f64) -> QuantizerBank {
    QuantizerBank {
        quantizers: (0..constellation.bits_per_symbol())
            .map(|k| PerBitQuantizer::uniform(k, w, q))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::build_qam;

    #[test]
    fn quantize_boundaries_and_totality() {
        let q = PerBitQuantizer::uniform(0, 2, 1.0);
        // Interior boundaries -1, 0, 1; cells are 0-based.
        assert_eq!(q.boundaries(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(q.quantize(-1e9), 0);
        assert_eq!(q.quantize(1e300), 3);
        // lambda = 0 lies in the cell [0, 1), the third cell.
        assert_eq!(q.quantize(0.0), 2);
        assert_eq!(q.quantize(-0.0001), 1);
        assert_eq!(q.quantize(1.0), 3);
        assert_eq!(q.quantize(f64::NEG_INFINITY), 0);
        assert_eq!(q.quantize(f64::INFINITY), 3);

        let h = PerBitQuantizer::hard(5);
        assert_eq!(h.boundaries(), vec![0.0]);
        assert_eq!(h.quantize(-0.1), 0);
        assert_eq!(h.quantize(0.0), 1);
    }

    #[test]
    fn quantize_gaussian_frequencies_match_cdf() {
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        let quant = PerBitQuantizer::uniform(0, 3, 0.6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000usize;
        let mut counts = vec![0u64; quant.levels()];
        for _ in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            counts[quant.quantize(1.3 * x - 0.2)] += 1;
        }
        // Analytic masses of N(-0.2, 1.3^2) over the cells.
        let bounds = quant.boundaries();
        for v in 0..quant.levels() {
            let hi = if v == quant.levels() - 1 {
                1.0
            } else {
                crate::numerics::normal_cdf((bounds[v] + 0.2) / 1.3)
            };
            let lo = if v == 0 {
                0.0
            } else {
                crate::numerics::normal_cdf((bounds[v - 1] + 0.2) / 1.3)
            };
            let p = hi - lo;
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
            let est = counts[v] as f64 / n as f64;
            assert!((est - p).abs() < 4.0 * se, "v={v}: {est} vs {p}");
        }
    }

    #[test]
    fn bgmi_degenerate_cases() {
        // Identical conditionals carry no information.
        let pmf = PmfPair {
            cond: [vec![0.3, 0.7], vec![0.3, 0.7]],
        };
        assert!(bgmi(&pmf).abs() < 1e-15);
        // A perfectly separating pair carries one bit.
        let pmf = PmfPair {
            cond: [vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        assert!((bgmi(&pmf) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bgmi_generalized_matches_mi_with_optimal_recon() {
        let c = build_qam(64).unwrap();
        let axis = c.pam_axis();
        let pll = c.llr_piecewise(2);
        let quant = PerBitQuantizer::uniform(2, 3, 0.8);
        let pmf = pmf_awgn(&quant, &pll, axis, 1.0, 0.1);
        let i = bgmi(&pmf);
        for &x in &[0.25, 1.0, 4.0] {
            let recon = reconstruction_levels(&pmf, x);
            let g = bgmi_generalized(&pmf, &recon, x);
            assert!((g - i).abs() < 1e-9, "x={x}: {g} vs {i}");
        }
        // Scaling recon by 2 and halving x leaves the value unchanged.
        let recon = reconstruction_levels(&pmf, 1.0);
        let scaled: Vec<f64> = recon.iter().map(|r| 2.0 * r).collect();
        let a = bgmi_generalized(&pmf, &recon, 1.0);
        let b = bgmi_generalized(&pmf, &scaled, 0.5);
        assert!((a - b).abs() < 1e-12);
        // Any perturbation of the optimal recon can only lose GMI.
        let perturbed: Vec<f64> = recon.iter().map(|r| r + 0.1).collect();
        assert!(bgmi_generalized(&pmf, &perturbed, 1.0) <= i);
    }

    #[test]
    fn recon_is_increasing_for_designed_quantizer() {
        let c = build_qam(64).unwrap();
        let axis = c.pam_axis();
        let pll = c.llr_piecewise(4);
        let ch = ChannelModel::awgn(10.0);
        let (q, _, _) = optimize_step(&c, 4, 4, &ch, StepObjective::MutualInformation).unwrap();
        let quant = PerBitQuantizer::uniform(4, 4, q.unwrap());
        let pmf = pmf_awgn(&quant, &pll, axis, 1.0, ch.sigma2());
        let recon = reconstruction_levels(&pmf, 1.0);
        // Strict increase holds over cells that carry mass; outer cells can
        // be empty (the LLR range is bounded above for non-sign bits) and
        // then tie at the clamp.
        let marg = pmf.marginal();
        let mut prev: Option<f64> = None;
        for v in 0..pmf.levels() {
            if marg[v] > 0.0 {
                if let Some(p) = prev {
                    assert!(recon[v] > p, "reconstructions must increase: {recon:?}");
                }
                prev = Some(recon[v]);
            }
        }
        // Matches the log-ratio wherever both conditionals are positive.
        for v in 0..pmf.levels() {
            if pmf.cond[0][v] > 0.0 && pmf.cond[1][v] > 0.0 {
                let expect = (pmf.cond[1][v] / pmf.cond[0][v]).ln();
                if expect.abs() < RECON_CLAMP {
                    assert!((recon[v] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hard_decision_mi_is_binary_entropy_complement() {
        // For 2-PAM the hard-decision MI is 1 - H2(Q(1/sigma)).
        use crate::constellation::{PamAxis, PiecewiseLinearLlr};
        let axis = PamAxis::new(vec![-1.0, 1.0], vec![1, 0], 1);
        let pll = PiecewiseLinearLlr::from_axis(&axis, 0, 0);
        let sigma = 0.9f64;
        let quant = PerBitQuantizer::hard(0);
        let pmf =
            crate::stats::pmf_awgn_axis(&quant, &pll, &axis, 1.0, sigma * sigma, sigma * sigma);
        let eps = crate::numerics::q_func(1.0 / sigma);
        let h2 = -eps * eps.log2() - (1.0 - eps) * (1.0 - eps).log2();
        assert!((bgmi(&pmf) - (1.0 - h2)).abs() < 1e-12);
    }

    #[test]
    fn greedy_allocation_basics() {
        // Synthetic upper-convex table: two positions, distinct gains.
        let table = MiTable {
            mi: vec![vec![0.0, 0.8, 0.9, 0.95], vec![0.0, 0.5, 0.7, 0.8]],
            metric: vec![vec![0.0, 0.8, 0.9, 0.95], vec![0.0, 0.5, 0.7, 0.8]],
            step: vec![vec![None; 4]; 2],
            w_max: 3,
            objective: StepObjective::MutualInformation,
        };
        // bits_per_symbol = 4 (two pairs).
        let w = allocate_bits(&table, 0, 4).unwrap();
        assert_eq!(w, vec![0, 0, 0, 0]);
        let w = allocate_bits(&table, 12, 4).unwrap();
        assert_eq!(w, vec![3, 3, 3, 3]);
        assert!(matches!(
            allocate_bits(&table, 13, 4),
            Err(Error::InfeasibleBudget { .. })
        ));
        // First four bits go to the higher-gain positions, ties to smaller k.
        let w = allocate_bits(&table, 2, 4).unwrap();
        assert_eq!(w, vec![1, 1, 0, 0]);
        // Exhaustive agrees on every feasible budget for a convex table.
        assert!(table.is_upper_convex(0.0));
        for total in 0..=12 {
            let g = allocate_bits(&table, total, 4).unwrap();
            let e = allocate_bits_exhaustive(&table, total, 4).unwrap();
            let gv = allocation_metric(&table, &g);
            let ev = allocation_metric(&table, &e);
            assert!(
                (gv - ev).abs() < 1e-12,
                "W={total}: greedy {gv} vs exhaustive {ev}"
            );
        }
    }

    #[test]
    fn exhaustive_rejects_large_instances() {
        let table = MiTable {
            mi: vec![vec![0.0; 9]; 6],
            metric: vec![vec![0.0; 9]; 6],
            step: vec![vec![None; 9]; 6],
            w_max: 8,
            objective: StepObjective::MutualInformation,
        };
        assert!(matches!(
            allocate_bits_exhaustive(&table, 25, 12),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn optimize_step_hard_decision_ignores_step() {
        let c = build_qam(16).unwrap();
        let ch = ChannelModel::awgn(12.0);
        let (q, mi, metric) = optimize_step(&c, 0, 1, &ch, StepObjective::MutualInformation).unwrap();
        assert!(q.is_none());
        assert!(mi > 0.8 && mi < 1.0);
        assert_eq!(mi, metric);
    }

    #[test]
    fn mi_table_16qam_monotone_and_symmetric() {
        let c = build_qam(16).unwrap();
        let ch = ChannelModel::awgn(12.0);
        let table = build_mi_table(&c, &ch, 5, StepObjective::MutualInformation).unwrap();
        assert_eq!(table.pairs(), 2);
        for pos in 0..2 {
            for w in 0..5 {
                assert!(
                    table.mi[pos][w + 1] + 1e-6 >= table.mi[pos][w],
                    "pos={pos} w={w}: refinement with optimized steps lost information"
                );
            }
        }
        // The two bits of a pair share the table entry by construction.
        assert_eq!(table.mi_for_bit(0, 3), table.mi_for_bit(1, 3));
    }

    #[test]
    fn nested_quantizer_data_processing() {
        // Doubling the cell count at half the step refines the partition
        // exactly, so MI cannot decrease.
        let c = build_qam(64).unwrap();
        let axis = c.pam_axis();
        let pll = c.llr_piecewise(0);
        let sigma2 = 0.1;
        let mut prev = 0.0;
        for (w, q) in [(2u32, 3.2), (3, 1.6), (4, 0.8), (5, 0.4), (10, 0.0125)] {
            let quant = PerBitQuantizer::uniform(0, w, q);
            let i = bgmi(&pmf_awgn(&quant, &pll, axis, 1.0, sigma2));
            assert!(i + 1e-12 >= prev, "w={w}: {i} < {prev}");
            prev = i;
        }
    }
}
