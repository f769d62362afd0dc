//! Exact conditional and unconditional PMFs of quantized LLR indices.
//!
//! The AWGN case is closed form: the received-axis line is partitioned into
//! intervals on which the quantizer index is constant (linear-segment
//! breakpoints plus the preimages of the quantizer boundaries), and each
//! interval's mass is a difference of Gaussian CDFs under every transmitted
//! PAM level. The fading case averages the AWGN PMF over the channel gain
//! with Gauss-Legendre quadrature and a doubling convergence test.

use serde::{Deserialize, Serialize};

use crate::constellation::{PamAxis, PiecewiseLinearLlr};
use crate::design::PerBitQuantizer;
use crate::error::Error;
use crate::numerics::{gauss_legendre_on, normal_cdf};
use crate::Result;

/// Channel family of a working point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    RayleighBlock,
}

/// Channel model: kind plus carrier-to-noise ratio in dB.
///
/// With unit average symbol energy and E[h^2] = 1, the complex noise power
/// is sigma2 = 10^(-cn_db / 10).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub cn_db: f64,
}

impl ChannelModel {
    pub fn awgn(cn_db: f64) -> Self {
        ChannelModel {
            kind: ChannelKind::Awgn,
            cn_db,
        }
    }

    pub fn rayleigh(cn_db: f64) -> Self {
        ChannelModel {
            kind: ChannelKind::RayleighBlock,
            cn_db,
        }
    }

    /// Complex noise power.
    pub fn sigma2(&self) -> f64 {
        10f64.powf(-self.cn_db / 10.0)
    }
}

/// Conditional PMF of a quantizer index given the bit value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfPair {
    /// cond[b][v] = p(index v | bit = b), v 0-based.
    pub cond: [Vec<f64>; 2],
}

impl PmfPair {
    pub fn levels(&self) -> usize {
        self.cond[0].len()
    }

    /// Unconditional PMF under equiprobable bits.
    pub fn marginal(&self) -> Vec<f64> {
        self.cond[0]
            .iter()
            .zip(&self.cond[1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// Per-bit PMF tables for a whole quantizer bank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlrPmfTable {
    /// Indexed by bit index.
    pub per_bit: Vec<PmfPair>,
}

/// Half-width of the Gaussian window, in noise standard deviations, outside
/// of which CDF values are treated as exactly 0 or 1 (tail < 2e-33).
const GAUSS_WINDOW: f64 = 12.0;

/// Upper integration limit for the Rayleigh gain density 2h exp(-h^2)
/// (truncated tail mass ~ 7e-14).
const RAYLEIGH_H_MAX: f64 = 5.5;

/// Per-piece quadrature orders tried by the doubling test, in sequence.
const QUAD_ORDERS: [usize; 4] = [24, 48, 96, 192];

/// Cell tolerance for the quadrature doubling test.
const QUAD_TOL: f64 = 1e-8;

/// Partition of the normalized received axis into intervals of constant
/// quantizer index.
struct CellPartition {
    /// Interval endpoints in t = y/h units, ascending and symmetric about 0.
    pts: Vec<f64>,
    /// cells[j] is the 0-based quantizer cell of interval j, which spans
    /// (pts[j-1], pts[j]) with virtual endpoints at +-infinity.
    cells: Vec<u32>,
}

/// Build the constant-index partition for one quantizer/piecewise pair.
///
/// `bounds_t` are the interior quantizer boundaries divided by the LLR scale
/// h^2/sigma2, i.e. expressed in the units of slope * t + intercept.
fn build_partition(pll: &PiecewiseLinearLlr, bounds_t: &[f64]) -> CellPartition {
    let segs = pll.segments();
    let mut pts: Vec<f64> = Vec::with_capacity(segs.len() * 4);
    let mut cells: Vec<u32> = Vec::with_capacity(segs.len() * 4 + 1);

    for (u, seg) in segs.iter().enumerate() {
        if u > 0 {
            pts.push(seg.t_lo);
        }
        debug_assert!(seg.slope != 0.0, "degenerate zero-slope LLR segment");
        let lam_lo = if seg.t_lo.is_finite() {
            seg.slope * seg.t_lo + seg.intercept
        } else {
            f64::NEG_INFINITY * seg.slope.signum()
        };
        let lam_hi = if seg.t_hi.is_finite() {
            seg.slope * seg.t_hi + seg.intercept
        } else {
            f64::INFINITY * seg.slope.signum()
        };
        let (lo_val, hi_val) = if lam_lo <= lam_hi {
            (lam_lo, lam_hi)
        } else {
            (lam_hi, lam_lo)
        };
        // Boundaries strictly inside the open value range of this segment.
        let jl = bounds_t.partition_point(|&b| b <= lo_val);
        let jr = bounds_t.partition_point(|&b| b < hi_val);
        if seg.slope > 0.0 {
            cells.push(jl as u32);
            for j in jl..jr {
                pts.push((bounds_t[j] - seg.intercept) / seg.slope);
                cells.push(j as u32 + 1);
            }
        } else {
            cells.push(jr as u32);
            for j in (jl..jr).rev() {
                pts.push((bounds_t[j] - seg.intercept) / seg.slope);
                cells.push(j as u32);
            }
        }
    }
    debug_assert_eq!(cells.len(), pts.len() + 1);
    debug_assert!(pts.windows(2).all(|w| w[0] <= w[1]));
    // The mirror reuse below relies on an exactly antisymmetric point list.
    debug_assert!({
        let p = pts.len();
        (0..p).all(|i| pts[i] == -pts[p - 1 - i])
    });
    CellPartition { pts, cells }
}

/// Accumulate the conditional PMF for every transmitted level of the axis.
///
/// CDF values are computed once per nonnegative level and reused for the
/// mirrored level through the antisymmetry of the partition.
fn pmf_from_partition(
    part: &CellPartition,
    axis: &PamAxis,
    pos: usize,
    std_t: f64,
    l_cells: usize,
    weight: f64,
    out: &mut PmfPair,
) {
    let n = axis.len();
    assert!(n % 2 == 0, "PAM axis must have an even number of levels");
    assert!(
        (0..n).all(|i| axis.levels()[i] == -axis.levels()[n - 1 - i]),
        "PAM levels must be symmetric about zero"
    );
    let p = part.pts.len();
    let count = [
        (0..n).filter(|&i| axis.bit(i, pos) == 0).count() as f64,
        (0..n).filter(|&i| axis.bit(i, pos) == 1).count() as f64,
    ];
    let mut phi = vec![0.0f64; p];

    for li in n / 2..n {
        let a = axis.levels()[li];
        let w_lo = a - GAUSS_WINDOW * std_t;
        let w_hi = a + GAUSS_WINDOW * std_t;
        let i0 = part.pts.partition_point(|&t| t < w_lo);
        let i1 = part.pts.partition_point(|&t| t <= w_hi);
        for i in i0..i1 {
            phi[i] = normal_cdf((part.pts[i] - a) / std_t);
        }
        let phi_at = |i: isize| -> f64 {
            if i < i0 as isize {
                0.0
            } else if i >= i1 as isize {
                1.0
            } else {
                phi[i as usize]
            }
        };

        // Direct level: intervals j in [i0, i1] can carry mass.
        let b = axis.bit(li, pos) as usize;
        let scale = weight / count[b];
        let dst = &mut out.cond[b];
        for j in i0..=i1 {
            let mass = phi_at(j as isize) - phi_at(j as isize - 1);
            if mass > 0.0 {
                dst[part.cells[j] as usize] += mass * scale;
            }
        }

        // Mirrored level -a: its CDF at interval endpoint i is
        // 1 - phi(p - 1 - i), so interval j has mass phi(p-j) - phi(p-1-j).
        let mi = n - 1 - li;
        let bm = axis.bit(mi, pos) as usize;
        let scale_m = weight / count[bm];
        let dst = &mut out.cond[bm];
        let j_lo = p.saturating_sub(i1);
        let j_hi = p - i0;
        // Descending so each mirrored cell sees the same addition order as
        // its direct counterpart; for the sign bit this makes the mirror
        // symmetry p(v|0) = p(L-1-v|1) hold bitwise.
        for j in (j_lo..=j_hi).rev() {
            let mass =
                phi_at(p as isize - j as isize) - phi_at(p as isize - 1 - j as isize);
            if mass > 0.0 {
                dst[part.cells[j] as usize] += mass * scale_m;
            }
        }
        let _ = l_cells;
    }
}

/// Closed-form conditional PMF on an AWGN channel, parametrized directly by
/// the Eq.-style LLR noise scale and the per-axis noise variance.
///
/// `llr_sigma2` is the sigma^2 appearing in the LLR definition;
/// `axis_noise_var` is the variance of the additive noise on the axis
/// coordinate. For complex-noise QAM the latter is sigma2 / 2; for a plain
/// real channel the two coincide.
pub fn pmf_awgn_axis(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    h: f64,
    llr_sigma2: f64,
    axis_noise_var: f64,
) -> PmfPair {
    assert!(h > 0.0 && llr_sigma2 > 0.0 && axis_noise_var > 0.0);
    let l = quantizer.levels();
    let scale = h * h / llr_sigma2;
    let bounds_t: Vec<f64> = quantizer.boundaries().iter().map(|d| d / scale).collect();
    let part = build_partition(pll, &bounds_t);
    let pos = pll.bit_index() / 2;
    let std_t = axis_noise_var.sqrt() / h;
    let mut out = PmfPair {
        cond: [vec![0.0; l], vec![0.0; l]],
    };
    pmf_from_partition(&part, axis, pos, std_t, l, 1.0, &mut out);
    out
}

/// Conditional PMF of the quantizer index on an AWGN channel with complex
/// noise power `sigma2` and channel gain `h`.
pub fn pmf_awgn(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    h: f64,
    sigma2: f64,
) -> PmfPair {
    pmf_awgn_axis(quantizer, pll, axis, h, sigma2, 0.5 * sigma2)
}

/// Average of the AWGN PMF over an explicit discrete gain distribution.
pub fn pmf_gain_average(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    sigma2: f64,
    gains: &[(f64, f64)],
) -> PmfPair {
    let l = quantizer.levels();
    let pos = pll.bit_index() / 2;
    let mut out = PmfPair {
        cond: [vec![0.0; l], vec![0.0; l]],
    };
    let scale0 = 1.0 / sigma2;
    for &(h, w) in gains {
        let scale = h * h * scale0;
        let bounds_t: Vec<f64> = quantizer.boundaries().iter().map(|d| d / scale).collect();
        let part = build_partition(pll, &bounds_t);
        let std_t = (0.5 * sigma2).sqrt() / h;
        pmf_from_partition(&part, axis, pos, std_t, l, w, &mut out);
    }
    out
}

/// Gauss-Legendre nodes and Rayleigh-density weights on [0, RAYLEIGH_H_MAX].
pub fn rayleigh_gain_nodes(order: usize) -> Vec<(f64, f64)> {
    let (h, w) = gauss_legendre_on(order, 0.0, RAYLEIGH_H_MAX);
    h.iter()
        .zip(&w)
        .map(|(&hi, &wi)| (hi, wi * 2.0 * hi * (-hi * hi).exp()))
        .collect()
}

/// Fading PMF at a fixed quadrature order (no convergence test). Intended
/// for inner optimization loops; final reported values should go through
/// [`pmf_fading`].
pub fn pmf_fading_fixed(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    sigma2: f64,
    order: usize,
) -> PmfPair {
    pmf_gain_average(quantizer, pll, axis, sigma2, &rayleigh_gain_nodes(order))
}

/// Fading-averaged PMF on the block Rayleigh channel with E[h^2] = 1.
///
/// The gain average of a cell mass is only piecewise smooth in h: where a
/// quantizer boundary's preimage crosses a linear-segment edge, the
/// clipping produces a kink. Plain quadrature stalls on those kinks, so
/// each (segment, boundary) term is integrated over its own smooth
/// h-pieces, split exactly at the crossing gains. The per-piece order is
/// doubled until no cell moves by more than 1e-8; fails with
/// [`Error::QuadratureNotConverged`] at the configured max order.
pub fn pmf_fading(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    channel: &ChannelModel,
) -> Result<PmfPair> {
    assert_eq!(channel.kind, ChannelKind::RayleighBlock);
    let sigma2 = channel.sigma2();
    let mut prev = pmf_fading_split(quantizer, pll, axis, sigma2, QUAD_ORDERS[0]);
    let mut worst = f64::INFINITY;
    for &order in &QUAD_ORDERS[1..] {
        let cur = pmf_fading_split(quantizer, pll, axis, sigma2, order);
        worst = max_cell_delta(&prev, &cur);
        if worst < QUAD_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged {
        max_order: *QUAD_ORDERS.last().unwrap(),
        worst_delta: worst,
    })
}

/// One smooth h-piece of a boundary-preimage trajectory.
#[derive(Debug, Clone, Copy)]
enum PieceKind {
    /// The preimage is inside the segment: t(h) = (d sigma2/h^2 - c0)/c1.
    Inside,
    /// Clipped to a finite segment end t_e.
    ClippedAt(f64),
    /// Clipped to an unbounded end: the CDF argument is -inf (0) or +inf (1).
    Saturated(f64),
}

/// Fading PMF with kink-split, per-level windowed Gauss-Legendre of a
/// given order.
///
/// For one boundary, one segment and one level, the integrand
/// f_H(h) Phi(x(h)) is smooth between the (exactly computable) gains where
/// the boundary preimage crosses the segment ends, and Phi saturates
/// outside the window |x| <= GAUSS_WINDOW. Inside the window the function
/// is integrated with the given Gauss-Legendre order; the saturated flanks
/// integrate f_H in closed form. Doubling the order therefore converges
/// spectrally.
fn pmf_fading_split(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    sigma2: f64,
    order: usize,
) -> PmfPair {
    let l = quantizer.levels();
    let bounds = quantizer.boundaries();
    let n = axis.len();
    let pos = pll.bit_index() / 2;
    let count = [
        (0..n).filter(|&i| axis.bit(i, pos) == 0).count() as f64,
        (0..n).filter(|&i| axis.bit(i, pos) == 1).count() as f64,
    ];
    let (gl_x, gl_w) = crate::numerics::gauss_legendre(order);
    let sigma = sigma2.sqrt();
    let inv_sig = std::f64::consts::SQRT_2 / sigma;

    let mut out = PmfPair {
        cond: [vec![0.0; l], vec![0.0; l]],
    };

    // Exact integral of the gain density 2h exp(-h^2) over [p, q].
    let f_h_mass = |p: f64, q: f64| -> f64 { (-p * p).exp() - (-q * q).exp() };

    let mut g_edge = vec![0.0f64; n];
    let mut g_cur = vec![0.0f64; n];
    let mut g_prev = vec![0.0f64; n];

    for seg in pll.segments() {
        let lam_at = |t: f64, sign: f64| -> f64 {
            if t.is_finite() {
                seg.slope * t + seg.intercept
            } else {
                sign * f64::INFINITY * seg.slope.signum()
            }
        };
        let lam_lo_end = lam_at(seg.t_lo, -1.0);
        let lam_hi_end = lam_at(seg.t_hi, 1.0);
        let (min_val, min_end, max_val, max_end) = if lam_lo_end <= lam_hi_end {
            (lam_lo_end, seg.t_lo, lam_hi_end, seg.t_hi)
        } else {
            (lam_hi_end, seg.t_hi, lam_lo_end, seg.t_lo)
        };

        // Pieces of the clipped trajectory of one scaled boundary value.
        let pieces_for = |d: f64| -> Vec<(f64, f64, PieceKind)> {
            let clip_min = || {
                if min_end.is_finite() {
                    PieceKind::ClippedAt(min_end)
                } else {
                    PieceKind::Saturated(if min_end < 0.0 { 0.0 } else { 1.0 })
                }
            };
            let clip_max = || {
                if max_end.is_finite() {
                    PieceKind::ClippedAt(max_end)
                } else {
                    PieceKind::Saturated(if max_end < 0.0 { 0.0 } else { 1.0 })
                }
            };
            if d == 0.0 {
                let kind = if min_val < 0.0 && max_val > 0.0 {
                    PieceKind::Inside
                } else if max_val <= 0.0 {
                    clip_max()
                } else {
                    clip_min()
                };
                return vec![(0.0, RAYLEIGH_H_MAX, kind)];
            }
            let (h_in, h_out, first, last) = if d > 0.0 {
                if max_val <= 0.0 {
                    return vec![(0.0, RAYLEIGH_H_MAX, clip_max())];
                }
                let h_in = if max_val.is_finite() {
                    (d * sigma2 / max_val).sqrt()
                } else {
                    0.0
                };
                let h_out = if min_val > 0.0 {
                    (d * sigma2 / min_val).sqrt()
                } else {
                    f64::INFINITY
                };
                (h_in, h_out, clip_max(), clip_min())
            } else {
                if min_val >= 0.0 {
                    return vec![(0.0, RAYLEIGH_H_MAX, clip_min())];
                }
                let h_in = if min_val.is_finite() {
                    (d * sigma2 / min_val).sqrt()
                } else {
                    0.0
                };
                let h_out = if max_val < 0.0 {
                    (d * sigma2 / max_val).sqrt()
                } else {
                    f64::INFINITY
                };
                (h_in, h_out, clip_min(), clip_max())
            };
            let mut pieces = Vec::with_capacity(3);
            let a = h_in.min(RAYLEIGH_H_MAX);
            let b = h_out.min(RAYLEIGH_H_MAX);
            if a > 0.0 {
                pieces.push((0.0, a, first));
            }
            if b > a {
                pieces.push((a, b, PieceKind::Inside));
            }
            if RAYLEIGH_H_MAX > b {
                pieces.push((b, RAYLEIGH_H_MAX, last));
            }
            pieces
        };

        // Integrate f_H(h) Phi(x(h)) over [h0, h1] for one level, where
        // x(h) = amp / h - slp * h (amp = 0 reduces to the clipped case).
        // Splits at the |x| = GAUSS_WINDOW crossings, integrates the inner
        // window by Gauss-Legendre and the saturated flanks exactly.
        let integrate_level = |amp: f64, slp: f64, h0: f64, h1: f64, acc: &mut f64| {
            let x_at = |h: f64| amp / h - slp * h;
            // Crossing gains of x = +-GAUSS_WINDOW inside (h0, h1).
            let mut cuts = [0.0f64; 4];
            let mut n_cuts = 0;
            for y in [GAUSS_WINDOW, -GAUSS_WINDOW] {
                if slp == 0.0 {
                    if amp != 0.0 {
                        let r = amp / y;
                        if r > h0 && r < h1 {
                            cuts[n_cuts] = r;
                            n_cuts += 1;
                        }
                    }
                    continue;
                }
                // slp h^2 + y h - amp = 0
                let disc = y * y + 4.0 * slp * amp;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    for r in [(-y + s) / (2.0 * slp), (-y - s) / (2.0 * slp)] {
                        if r > h0 && r < h1 {
                            cuts[n_cuts] = r;
                            n_cuts += 1;
                        }
                    }
                }
            }
            cuts[..n_cuts].sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut lo = h0;
            for i in 0..=n_cuts {
                let hi = if i == n_cuts { h1 } else { cuts[i] };
                if hi <= lo {
                    continue;
                }
                let xm = x_at(0.5 * (lo + hi));
                if xm > GAUSS_WINDOW {
                    *acc += f_h_mass(lo, hi);
                } else if xm >= -GAUSS_WINDOW {
                    let half = 0.5 * (hi - lo);
                    let mid = 0.5 * (lo + hi);
                    for (&xg, &wg) in gl_x.iter().zip(&gl_w) {
                        let h = mid + half * xg;
                        let fw = wg * half * 2.0 * h * (-h * h).exp();
                        *acc += fw * normal_cdf(x_at(h));
                    }
                }
                lo = hi;
            }
        };

        // G value of one clipped-boundary trajectory for every level.
        let fill_g = |d: f64, dst: &mut [f64]| {
            dst.iter_mut().for_each(|x| *x = 0.0);
            for (h0, h1, kind) in pieces_for(d) {
                match kind {
                    PieceKind::Saturated(v) => {
                        if v != 0.0 {
                            let mass = v * f_h_mass(h0, h1);
                            for ga in dst.iter_mut() {
                                *ga += mass;
                            }
                        }
                    }
                    PieceKind::ClippedAt(te) => {
                        for (li, ga) in dst.iter_mut().enumerate() {
                            let slp = (axis.levels()[li] - te) * inv_sig;
                            integrate_level(0.0, slp, h0, h1, ga);
                        }
                    }
                    PieceKind::Inside => {
                        // x(h) = sqrt2 d sigma/(c1 h) - (c0/c1 + a) sqrt2 h / sigma
                        let amp = std::f64::consts::SQRT_2 * d * sigma / seg.slope;
                        let w0 = seg.intercept / seg.slope;
                        for (li, ga) in dst.iter_mut().enumerate() {
                            let slp = (w0 + axis.levels()[li]) * inv_sig;
                            integrate_level(amp, slp, h0, h1, ga);
                        }
                    }
                }
            }
        };

        // Segment-end CDF integrals shared by the outer cells.
        let fill_end = |t_end: f64, sign_inf: f64, dst: &mut [f64]| {
            dst.iter_mut().for_each(|x| *x = 0.0);
            if !t_end.is_finite() {
                if sign_inf > 0.0 {
                    let total = f_h_mass(0.0, RAYLEIGH_H_MAX);
                    dst.iter_mut().for_each(|x| *x = total);
                }
                return;
            }
            for (li, ga) in dst.iter_mut().enumerate() {
                let slp = (axis.levels()[li] - t_end) * inv_sig;
                integrate_level(0.0, slp, 0.0, RAYLEIGH_H_MAX, ga);
            }
        };

        // Walk the boundaries in lambda order and push cell masses.
        if seg.slope > 0.0 {
            fill_end(seg.t_lo, -1.0, &mut g_prev);
        } else {
            fill_end(seg.t_hi, 1.0, &mut g_prev);
        }
        for c in 0..l {
            let dst: &mut [f64] = if c < l - 1 {
                fill_g(bounds[c], &mut g_cur);
                &mut g_cur
            } else {
                if seg.slope > 0.0 {
                    fill_end(seg.t_hi, 1.0, &mut g_edge);
                } else {
                    fill_end(seg.t_lo, -1.0, &mut g_edge);
                }
                &mut g_edge
            };
            for li in 0..n {
                let b = axis.bit(li, pos) as usize;
                let mass = if seg.slope > 0.0 {
                    dst[li] - g_prev[li]
                } else {
                    g_prev[li] - dst[li]
                };
                if mass != 0.0 {
                    out.cond[b][c] += mass / count[b];
                }
            }
            std::mem::swap(&mut g_prev, if c < l - 1 { &mut g_cur } else { &mut g_edge });
        }
    }
    for side in out.cond.iter_mut() {
        for p in side.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
    }
    out
}

fn max_cell_delta(a: &PmfPair, b: &PmfPair) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..2 {
        for (x, y) in a.cond[s].iter().zip(&b.cond[s]) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// PMF of a quantizer at a channel working point (dispatches on the kind).
pub fn pmf_at(
    quantizer: &PerBitQuantizer,
    pll: &PiecewiseLinearLlr,
    axis: &PamAxis,
    channel: &ChannelModel,
) -> Result<PmfPair> {
    match channel.kind {
        ChannelKind::Awgn => Ok(pmf_awgn(quantizer, pll, axis, 1.0, channel.sigma2())),
        ChannelKind::RayleighBlock => pmf_fading(quantizer, pll, axis, channel),
    }
}
