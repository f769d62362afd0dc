//! Closed-form de-interleaver memory accounting for the conventional and
//! proposed receiver schemes.

use serde::{Deserialize, Serialize};

/// Receiver memory scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Store received samples and channel gains, demap after de-interleaving.
    Conv,
    /// Demap first, store quantized LLR indices.
    Quant,
    /// Demap first, store compressed fixed-size LLR words.
    QuantComp,
}

/// Exact bit counts of the two de-interleaver memories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub scheme: Scheme,
    /// Symbol de-interleaver memory, bits.
    pub symbol_bits: u64,
    /// Bit de-interleaver memory, bits.
    pub bit_bits: u64,
}

impl MemoryReport {
    pub fn total_bits(&self) -> u64 {
        self.symbol_bits + self.bit_bits
    }

    /// Fraction of memory saved relative to a reference report.
    pub fn savings_vs(&self, reference: &MemoryReport) -> f64 {
        1.0 - self.total_bits() as f64 / reference.total_bits() as f64
    }
}

/// Display convention: Mbit = 10^6 bits, truncated (not rounded) to two
/// decimals.
pub fn mbit_truncated(bits: u64) -> f64 {
    ((bits as f64 / 1e6) * 100.0).floor() / 100.0
}

/// Savings percentage truncated to one decimal.
pub fn savings_pct_truncated(report: &MemoryReport, reference: &MemoryReport) -> f64 {
    (report.savings_vs(reference) * 1000.0).floor() / 10.0
}

/// Conventional receiver: the symbol de-interleaver stores each received
/// sample (two axes of `b_sample` bits) plus the channel magnitude
/// (`b_gain` bits); the bit de-interleaver stores one `W/log2(M)`-bit LLR
/// per coded bit.
pub fn conv_memory(
    n_symbols: u64,
    b_sample: u64,
    b_gain: u64,
    n_bits: u64,
    total_bits: u64,
    m: u64,
) -> MemoryReport {
    let log_m = m.trailing_zeros() as u64;
    MemoryReport {
        scheme: Scheme::Conv,
        symbol_bits: n_symbols * (2 * b_sample + b_gain),
        bit_bits: n_bits * total_bits / log_m,
    }
}

/// Proposed receiver: the symbol de-interleaver stores one fixed
/// `budget`-bit word per symbol; the bit de-interleaver stores uncompressed
/// per-bit indices, `W/log2(M)` bits each on average.
pub fn proposed_memory(
    n_symbols: u64,
    budget: u64,
    n_bits: u64,
    total_bits: u64,
    m: u64,
    compressed: bool,
) -> MemoryReport {
    if !compressed {
        assert_eq!(
            budget, total_bits,
            "without compression the word budget equals the quantizer bits"
        );
    }
    let log_m = m.trailing_zeros() as u64;
    MemoryReport {
        scheme: if compressed {
            Scheme::QuantComp
        } else {
            Scheme::Quant
        },
        symbol_bits: n_symbols * budget,
        bit_bits: n_bits * total_bits / log_m,
    }
}

/// Worst-case interleaver depths of the studied cable system.
pub const PRESET_N_SYMBOLS: u64 = 51_776;
pub const PRESET_N_BITS: u64 = 64_800;

/// The six preset rows of the memory comparison: two loss targets, three
/// schemes each. Returns (label, report) pairs.
pub fn preset_rows() -> Vec<(&'static str, MemoryReport)> {
    vec![
        (
            "0.1dB conv",
            conv_memory(PRESET_N_SYMBOLS, 15, 14, PRESET_N_BITS, 60, 4096),
        ),
        (
            "0.1dB quant",
            proposed_memory(PRESET_N_SYMBOLS, 38, PRESET_N_BITS, 38, 4096, false),
        ),
        (
            "0.1dB quant+comp",
            proposed_memory(PRESET_N_SYMBOLS, 32, PRESET_N_BITS, 42, 4096, true),
        ),
        (
            "0.2dB conv",
            conv_memory(PRESET_N_SYMBOLS, 14, 13, PRESET_N_BITS, 60, 4096),
        ),
        (
            "0.2dB quant",
            proposed_memory(PRESET_N_SYMBOLS, 32, PRESET_N_BITS, 32, 4096, false),
        ),
        (
            "0.2dB quant+comp",
            proposed_memory(PRESET_N_SYMBOLS, 29, PRESET_N_BITS, 36, 4096, true),
        ),
    ]
}

/// CSV of the preset comparison with exact bits, truncated Mbit displays
/// and savings against the matching conventional row.
pub fn preset_csv() -> String {
    let rows = preset_rows();
    let mut s = String::from(
        "row,symbol_bits,bit_bits,total_bits,symbol_mbit,bit_mbit,total_mbit,saved_pct\n",
    );
    for (i, (label, r)) in rows.iter().enumerate() {
        let reference = &rows[if i < 3 { 0 } else { 3 }].1;
        let saved = if r.scheme == Scheme::Conv {
            String::new()
        } else {
            format!("{:.1}", savings_pct_truncated(r, reference))
        };
        s.push_str(&format!(
            "{label},{},{},{},{:.2},{:.2},{:.2},{saved}\n",
            r.symbol_bits,
            r.bit_bits,
            r.total_bits(),
            mbit_truncated(r.symbol_bits),
            mbit_truncated(r.bit_bits),
            mbit_truncated(r.total_bits()),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_memory_examples() {
        let r = conv_memory(51_776, 15, 14, 64_800, 60, 4096);
        assert_eq!(r.symbol_bits, 2_278_144);
        assert_eq!(r.bit_bits, 324_000);
        assert_eq!(r.total_bits(), 2_602_144);
        assert_eq!(mbit_truncated(r.symbol_bits), 2.27);
        assert_eq!(mbit_truncated(r.total_bits()), 2.60);

        let r2 = conv_memory(51_776, 14, 13, 64_800, 60, 4096);
        assert_eq!(r2.total_bits(), 2_446_816);
        assert_eq!(mbit_truncated(r2.total_bits()), 2.44);

        let z = conv_memory(0, 0, 0, 0, 0, 4096);
        assert_eq!(z.total_bits(), 0);
    }

    #[test]
    fn proposed_memory_examples() {
        let conv = conv_memory(51_776, 15, 14, 64_800, 60, 4096);
        let quant = proposed_memory(51_776, 38, 64_800, 38, 4096, false);
        assert_eq!(quant.symbol_bits, 1_967_488);
        assert_eq!(quant.bit_bits, 205_200);
        assert_eq!(quant.total_bits(), 2_172_688);
        assert_eq!(savings_pct_truncated(&quant, &conv), 16.5);

        let comp = proposed_memory(51_776, 32, 64_800, 42, 4096, true);
        assert_eq!(comp.total_bits(), 1_883_632);
        assert_eq!(mbit_truncated(comp.total_bits()), 1.88);
        assert_eq!(savings_pct_truncated(&comp, &conv), 27.6);

        let conv2 = conv_memory(51_776, 14, 13, 64_800, 60, 4096);
        let comp2 = proposed_memory(51_776, 29, 64_800, 36, 4096, true);
        assert_eq!(comp2.total_bits(), 1_695_904);
        assert_eq!(mbit_truncated(comp2.total_bits()), 1.69);
        assert_eq!(savings_pct_truncated(&comp2, &conv2), 30.6);
    }

    #[test]
    fn totals_are_exact_sums() {
        for (_, r) in preset_rows() {
            assert_eq!(r.total_bits(), r.symbol_bits + r.bit_bits);
        }
    }
}
