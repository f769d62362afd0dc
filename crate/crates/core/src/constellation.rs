//! Gray-mapped square QAM constellations and the min-distance LLR as an
//! exact piecewise-linear function of the per-axis received coordinate.
//!
//! Bits alternate between the two axes: even bit indices (0-based) modulate
//! the imaginary axis, odd indices the real axis. Within an axis the labels
//! follow the binary-reflected Gray code, MSB first, so axis position 0 is
//! the sign bit of that axis.

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// Which complex axis a bit modulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Re,
    Im,
}

/// One-dimensional PAM sub-constellation with Gray labels.
#[derive(Debug, Clone)]
pub struct PamAxis {
    /// Amplitudes in ascending order, already scaled to the unit-energy grid.
    levels: Vec<f64>,
    /// Binary-reflected Gray label of each level (MSB = sign bit).
    labels: Vec<u16>,
    /// Label width in bits.
    bits: usize,
}

impl PamAxis {
    /// Build an n-level PAM axis from explicit levels and labels.
    ///
    /// Exposed so that small hand-built axes (e.g. plain 2-PAM) can reuse
    /// the LLR machinery in tests and tools.
    pub fn new(levels: Vec<f64>, labels: Vec<u16>, bits: usize) -> Self {
        assert_eq!(levels.len(), labels.len());
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
        PamAxis {
            levels,
            labels,
            bits,
        }
    }

    fn gray(n_levels: usize, scale: f64, bits: usize) -> Self {
        let levels: Vec<f64> = (0..n_levels)
            .map(|i| (2.0 * i as f64 - (n_levels - 1) as f64) * scale)
            .collect();
        let labels: Vec<u16> = (0..n_levels as u16).map(|i| i ^ (i >> 1)).collect();
        PamAxis {
            levels,
            labels,
            bits,
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn label_bits(&self) -> usize {
        self.bits
    }

    /// Value of label bit `pos` (0 = MSB) for the level at `idx`.
    #[inline]
    pub fn bit(&self, idx: usize, pos: usize) -> u8 {
        ((self.labels[idx] >> (self.bits - 1 - pos)) & 1) as u8
    }

    /// Levels whose label bit `pos` equals `value`.
    pub fn levels_with_bit(&self, pos: usize, value: u8) -> Vec<f64> {
        (0..self.len())
            .filter(|&i| self.bit(i, pos) == value)
            .map(|i| self.levels[i])
            .collect()
    }
}

/// Gray-mapped square M-QAM with unit average symbol energy.
#[derive(Debug, Clone)]
pub struct Constellation {
    m: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
    /// Symbol label; bit index b (0-based) is stored at integer bit b.
    labels: Vec<u16>,
    axis: PamAxis,
}

/// Supported constellation sizes.
pub const SUPPORTED_SIZES: [usize; 5] = [16, 64, 256, 1024, 4096];

/// Build a Gray-mapped square M-QAM constellation.
pub fn build_qam(m: usize) -> Result<Constellation> {
    if !SUPPORTED_SIZES.contains(&m) {
        return Err(Error::UnsupportedSize(m));
    }
    let bits_per_symbol = m.trailing_zeros() as usize;
    let bits_per_axis = bits_per_symbol / 2;
    let n = 1usize << bits_per_axis;
    // Unit average symbol energy: each axis carries (n^2 - 1) / 3 per unit
    // grid step squared, two axes in total.
    let scale = (3.0 / (2.0 * (n * n - 1) as f64)).sqrt();
    let axis = PamAxis::gray(n, scale, bits_per_axis);

    let mut points = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i_im in 0..n {
        for i_re in 0..n {
            points.push(Complex64::new(axis.levels[i_re], axis.levels[i_im]));
            let mut label = 0u16;
            for pos in 0..bits_per_axis {
                // Even bit indices ride the imaginary axis, odd the real.
                label |= (axis.bit(i_im, pos) as u16) << (2 * pos);
                label |= (axis.bit(i_re, pos) as u16) << (2 * pos + 1);
            }
            labels.push(label);
        }
    }
    Ok(Constellation {
        m,
        bits_per_symbol,
        points,
        labels,
        axis,
    })
}

impl Constellation {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_symbol / 2
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Value of bit `bit_index` in the label of point `point_idx`.
    #[inline]
    pub fn bit(&self, point_idx: usize, bit_index: usize) -> u8 {
        ((self.labels[point_idx] >> bit_index) & 1) as u8
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Axis and within-axis label position carrying `bit_index`.
    pub fn axis_of(&self, bit_index: usize) -> (Axis, usize) {
        let axis = if bit_index % 2 == 0 { Axis::Im } else { Axis::Re };
        (axis, bit_index / 2)
    }

    /// The shared per-axis PAM sub-constellation (identical on both axes).
    pub fn pam_axis(&self) -> &PamAxis {
        &self.axis
    }

    /// Point index of a symbol drawn from per-axis level indices.
    pub fn point_index(&self, i_re: usize, i_im: usize) -> usize {
        i_im * self.axis.len() + i_re
    }

    /// Min-distance LLR of `bit_index`, evaluated by brute force over all
    /// M constellation points:
    /// lambda = -(1/sigma2) * (min over bit=1 points of |r - h s|^2
    ///                         - min over bit=0 points of |r - h s|^2).
    /// Positive values favor bit = 1.
    pub fn min_distance_llr(&self, r: Complex64, h: f64, sigma2: f64, bit_index: usize) -> f64 {
        assert!(bit_index < self.bits_per_symbol, "bit index out of range");
        assert!(h > 0.0 && sigma2 > 0.0);
        let mut d0 = f64::INFINITY;
        let mut d1 = f64::INFINITY;
        for (idx, s) in self.points.iter().enumerate() {
            let d = (r - h * s).norm_sqr();
            if self.bit(idx, bit_index) == 1 {
                d1 = d1.min(d);
            } else {
                d0 = d0.min(d);
            }
        }
        -(d1 - d0) / sigma2
    }

    /// Piecewise-linear representation of the per-axis min-distance LLR of
    /// `bit_index`.
    pub fn llr_piecewise(&self, bit_index: usize) -> PiecewiseLinearLlr {
        let (_, pos) = self.axis_of(bit_index);
        PiecewiseLinearLlr::from_axis(&self.axis, pos, bit_index)
    }
}

/// One linear segment of the per-axis LLR: for t = y / h in
/// [t_lo, t_hi), lambda = (h^2 / sigma2) * (slope * t + intercept).
#[derive(Debug, Clone, Copy)]
pub struct LlrSegment {
    pub t_lo: f64,
    pub t_hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Piecewise-linear min-distance LLR of one bit as a function of the
/// normalized received coordinate t = y / h on the axis carrying the bit.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearLlr {
    bit_index: usize,
    /// Interior breakpoints in t, ascending. Segment i spans
    /// (breaks[i-1], breaks[i]) with unbounded first and last segments.
    breaks: Vec<f64>,
    segments: Vec<LlrSegment>,
}

impl PiecewiseLinearLlr {
    /// Build from explicit segments (interior breakpoints ascending and
    /// segments spanning them, unbounded at both ends).
    pub fn from_segments(bit_index: usize, breaks: Vec<f64>, segments: Vec<LlrSegment>) -> Self {
        assert_eq!(segments.len(), breaks.len() + 1);
        PiecewiseLinearLlr {
            bit_index,
            breaks,
            segments,
        }
    }

    /// Build from an explicit PAM axis and label bit position.
    pub fn from_axis(axis: &PamAxis, pos: usize, bit_index: usize) -> Self {
        let a0 = axis.levels_with_bit(pos, 0);
        let a1 = axis.levels_with_bit(pos, 1);
        assert!(!a0.is_empty() && !a1.is_empty());

        // The nearest element of a sorted set switches at midpoints of
        // consecutive elements; collect those from both sets.
        let mut breaks: Vec<f64> = a0
            .windows(2)
            .chain(a1.windows(2))
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();

        let nearest = |set: &[f64], t: f64| -> f64 {
            let mut best = set[0];
            let mut bd = (t - set[0]).abs();
            for &a in &set[1..] {
                let d = (t - a).abs();
                if d < bd {
                    bd = d;
                    best = a;
                }
            }
            best
        };

        let n_seg = breaks.len() + 1;
        let mut segments = Vec::with_capacity(n_seg);
        let span = axis.levels[axis.len() - 1] - axis.levels[0] + 1.0;
        for i in 0..n_seg {
            let t_lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                breaks[i - 1]
            };
            let t_hi = if i == n_seg - 1 {
                f64::INFINITY
            } else {
                breaks[i]
            };
            let mid = match (i == 0, i == n_seg - 1) {
                (true, true) => 0.0,
                (true, false) => t_hi - span,
                (false, true) => t_lo + span,
                (false, false) => 0.5 * (t_lo + t_hi),
            };
            let na0 = nearest(&a0, mid);
            let na1 = nearest(&a1, mid);
            // -(1/s2)[(y - h a1)^2 - (y - h a0)^2]
            //   = (h^2/s2) [2 (a1 - a0) t - (a1^2 - a0^2)]
            segments.push(LlrSegment {
                t_lo,
                t_hi,
                slope: 2.0 * (na1 - na0),
                intercept: -(na1 * na1 - na0 * na0),
            });
        }
        PiecewiseLinearLlr {
            bit_index,
            breaks,
            segments,
        }
    }

    pub fn bit_index(&self) -> usize {
        self.bit_index
    }

    pub fn segments(&self) -> &[LlrSegment] {
        &self.segments
    }

    /// Segment index containing t.
    #[inline]
    pub fn segment_of(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t)
    }

    /// Evaluate the LLR at received axis coordinate y with channel gain h
    /// and noise power sigma2 (the scale of the squared distances).
    #[inline]
    pub fn eval(&self, y: f64, h: f64, sigma2: f64) -> f64 {
        let t = y / h;
        let seg = &self.segments[self.segment_of(t)];
        (h * h) * (seg.slope * t + seg.intercept) / sigma2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rejects_unsupported_sizes() {
        for m in [4usize, 8, 32, 128, 512, 2048, 8192] {
            assert!(matches!(build_qam(m), Err(Error::UnsupportedSize(_))));
        }
    }

    #[test]
    fn qam16_axis_levels() {
        // Uniform 4-PAM {+-1, +-3} carries energy 5 per axis, 10 total, so
        // the normalized levels are {+-1, +-3} / sqrt(10).
        let c = build_qam(16).unwrap();
        let s = 1.0 / 10f64.sqrt();
        let expect = [-3.0 * s, -s, s, 3.0 * s];
        for (a, b) in c.pam_axis().levels().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn qam4096_shape() {
        let c = build_qam(4096).unwrap();
        assert_eq!(c.bits_per_symbol(), 12);
        assert_eq!(c.bits_per_axis(), 6);
        assert_eq!(c.pam_axis().len(), 64);
        assert_eq!(c.points().len(), 4096);
    }

    #[test]
    fn unit_energy_and_label_bijection() {
        for m in SUPPORTED_SIZES {
            let c = build_qam(m).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - 1.0).abs() < 1e-12, "m={m} energy {e}");
            let mut seen = vec![false; m];
            for &l in c.labels() {
                assert!(!seen[l as usize], "duplicate label");
                seen[l as usize] = true;
            }
        }
    }

    #[test]
    fn per_axis_labels_are_gray() {
        for m in SUPPORTED_SIZES {
            let c = build_qam(m).unwrap();
            let axis = c.pam_axis();
            for i in 1..axis.len() {
                let diff: u32 = ((0..axis.label_bits())
                    .map(|p| (axis.bit(i, p) ^ axis.bit(i - 1, p)) as u32)
                    .sum::<u32>()) as u32;
                assert_eq!(diff, 1, "adjacent PAM levels must differ in one bit");
            }
        }
    }

    #[test]
    fn bits_alternate_axes() {
        let c = build_qam(64).unwrap();
        // Even bit indices modulate Im, odd modulate Re.
        for b in 0..6 {
            let (axis, pos) = c.axis_of(b);
            assert_eq!(axis, if b % 2 == 0 { Axis::Im } else { Axis::Re });
            assert_eq!(pos, b / 2);
        }
    }

    #[test]
    fn two_pam_llr_example() {
        // 2-PAM at +-1 with bit 1 on the negative level: lambda(y) = -4hy/s2
        // and the quoted point: r = 0.5, h = 1, s2 = 1 -> lambda = -2.
        let axis = PamAxis::new(vec![-1.0, 1.0], vec![1, 0], 1);
        let pll = PiecewiseLinearLlr::from_axis(&axis, 0, 0);
        assert_eq!(pll.segments().len(), 1);
        assert!((pll.eval(0.5, 1.0, 1.0) + 2.0).abs() < 1e-15);
        for y in [-3.0, -0.2, 0.0, 1.7] {
            assert!((pll.eval(y, 1.0, 1.0) + 4.0 * y).abs() < 1e-12);
        }
        // h and sigma2 scaling.
        assert!((pll.eval(0.5, 2.0, 4.0) + 2.0 * 4.0 * 0.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn equidistant_sample_gives_zero_llr() {
        let c = build_qam(16).unwrap();
        // On the Im axis MSB, y = 0 is equidistant from the nearest 0- and
        // 1-labeled points.
        let l = c.min_distance_llr(num_complex::Complex64::new(0.3, 0.0), 1.0, 0.5, 0);
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn four_pam_msb_has_three_segments_detected_by_slope_scan() {
        // Independent construction: evaluate the brute-force LLR on a dense
        // grid and count slope changes.
        let c = build_qam(16).unwrap();
        let (h, s2) = (1.0, 0.37);
        let n = 4001;
        let ts: Vec<f64> = (0..n).map(|i| -1.4 + 2.8 * i as f64 / (n - 1) as f64).collect();
        let lam: Vec<f64> = ts
            .iter()
            .map(|&t| c.min_distance_llr(num_complex::Complex64::new(0.0, t), h, s2, 0))
            .collect();
        let slopes: Vec<f64> = lam.windows(2).map(|w| w[1] - w[0]).collect();
        // Run-length encode the slope sequence; a grid step straddling a
        // breakpoint yields a one-sample transition run, which is dropped.
        let mut runs: Vec<(f64, usize)> = Vec::new();
        for &s in &slopes {
            match runs.last_mut() {
                Some((v, c)) if (*v - s).abs() < 1e-6 => *c += 1,
                _ => runs.push((s, 1)),
            }
        }
        let segs = runs.iter().filter(|&&(_, c)| c > 1).count();
        assert_eq!(segs, 3, "4-PAM MSB should have U = 3 segments");
        assert_eq!(c.llr_piecewise(0).segments().len(), 3);
    }

    #[test]
    fn piecewise_matches_brute_force_16qam_scan() {
        let c = build_qam(16).unwrap();
        let pll = c.llr_piecewise(0);
        let (h, s2) = (0.9, 0.21);
        for i in 0..41 {
            let y = -1.5 + 3.0 * i as f64 / 40.0;
            let r = num_complex::Complex64::new(0.123, y);
            let brute = c.min_distance_llr(r, h, s2, 0);
            assert!(
                (pll.eval(y, h, s2) - brute).abs() < 1e-12,
                "y={y}: {} vs {brute}",
                pll.eval(y, h, s2)
            );
        }
    }

    #[test]
    fn piecewise_matches_brute_force_64qam_random() {
        let c = build_qam(64).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let plls: Vec<_> = (0..6).map(|k| c.llr_piecewise(k)).collect();
        let (h, s2) = (1.1, 0.09);
        for _ in 0..10_000 {
            let r = num_complex::Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            for (k, pll) in plls.iter().enumerate() {
                let y = if k % 2 == 0 { r.im } else { r.re };
                let brute = c.min_distance_llr(r, h, s2, k);
                assert!(
                    (pll.eval(y, h, s2) - brute).abs() < 1e-10,
                    "k={k} r={r}: {} vs {brute}",
                    pll.eval(y, h, s2)
                );
            }
        }
    }

    #[test]
    fn piecewise_is_continuous() {
        let c = build_qam(256).unwrap();
        for k in 0..8 {
            let pll = c.llr_piecewise(k);
            let segs = pll.segments();
            for w in segs.windows(2) {
                let t = w[0].t_hi;
                let left = w[0].slope * t + w[0].intercept;
                let right = w[1].slope * t + w[1].intercept;
                assert!((left - right).abs() < 1e-12, "k={k} discontinuity at t={t}");
            }
        }
    }
}
