//! rANS over a static order-0 model.
//!
//! The coding function is `C(s, x) = floor(x / f_s) * m + B_s + (x mod f_s)`
//! with `m = 2^scale_bits`. Renormalization is the threshold form of the
//! generic streaming loop: since `L` is a multiple of `m`, the precursor set of
//! `s` is `[f_s*L/m, b*f_s*L/m)` and the encoder only has to compare against
//! its upper end.

use std::fmt;

use crate::ans::CoderSpec;
use crate::error::{Error, Result};

pub const MAX_SCALE_BITS: u32 = 16;
pub const DEFAULT_SCALE_BITS: u32 = 14;
pub const MAX_ALPHABET: usize = 256;

/// Quantized frequencies with cumulative offsets and a dense slot lookup.
#[derive(Clone, PartialEq, Eq)]
pub struct SymbolTable {
    scale_bits: u32,
    freq: Vec<u32>,
    cum: Vec<u32>,
    slots: Vec<Slot>,
}

/// Everything `D` needs for one slot, so decoding costs a single lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    freq: u32,
    /// Slot index minus the symbol's cumulative frequency.
    bias: u16,
    symbol: u8,
}

impl fmt::Debug for SymbolTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolTable")
            .field("scale_bits", &self.scale_bits)
            .field("freq", &self.freq)
            .finish_non_exhaustive()
    }
}

fn check_scale_bits(scale_bits: u32) -> Result<()> {
    if (1..=MAX_SCALE_BITS).contains(&scale_bits) {
        Ok(())
    } else {
        Err(Error::InvalidScaleBits(scale_bits))
    }
}

/// Apportions `2^scale_bits` slots to symbols proportionally to `counts`.
///
/// Every symbol with a nonzero count gets at least one slot and symbols with
/// a zero count get none. Starting from the floor of each ideal share (raised
/// to 1 where needed), slots are added one at a time to the symbol whose
/// ideal share exceeds its allocation the most, or removed from the symbol
/// (with more than one slot) whose allocation exceeds its share the most.
/// Ties go to the lowest symbol index.
pub fn quantize(counts: &[u64], scale_bits: u32) -> Result<Vec<u32>> {
    check_scale_bits(scale_bits)?;
    let m = 1u64 << scale_bits;
    let total: u128 = counts.iter().map(|&c| u128::from(c)).sum();
    let used = counts.iter().filter(|&&c| c > 0).count();
    if used == 0 {
        return Err(Error::EmptyModel);
    }
    if used as u64 > m {
        return Err(Error::AlphabetTooLarge {
            symbols: used,
            slots: m as u32,
        });
    }

    let mut freq: Vec<u64> = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0
            } else {
                ((u128::from(c) * u128::from(m) / total) as u64).max(1)
            }
        })
        .collect();

    // (ideal - f) * total, exact in integers.
    let deficit = |s: usize, f: u64| -> i128 {
        (u128::from(counts[s]) * u128::from(m)) as i128 - (u128::from(f) * total) as i128
    };

    let mut assigned: u64 = freq.iter().sum();
    while assigned < m {
        let best = (0..freq.len())
            .filter(|&s| counts[s] > 0)
            .max_by(|&a, &b| deficit(a, freq[a]).cmp(&deficit(b, freq[b])).then(b.cmp(&a)))
            .expect("at least one used symbol");
        freq[best] += 1;
        assigned += 1;
    }
    while assigned > m {
        let best = (0..freq.len())
            .filter(|&s| freq[s] > 1)
            .max_by(|&a, &b| deficit(b, freq[b]).cmp(&deficit(a, freq[a])).then(b.cmp(&a)))
            .expect("excess implies a symbol with more than one slot");
        freq[best] -= 1;
        assigned -= 1;
    }
    Ok(freq.into_iter().map(|f| f as u32).collect())
}

impl SymbolTable {
    /// Builds a table from frequencies that already sum to `2^scale_bits`.
    pub fn new(freq: Vec<u32>, scale_bits: u32) -> Result<Self> {
        check_scale_bits(scale_bits)?;
        if freq.is_empty() {
            return Err(Error::EmptyModel);
        }
        if freq.len() > MAX_ALPHABET {
            return Err(Error::InvalidTable(format!(
                "alphabet of {} symbols exceeds {MAX_ALPHABET}",
                freq.len()
            )));
        }
        let m = 1u64 << scale_bits;
        let sum: u64 = freq.iter().map(|&f| u64::from(f)).sum();
        if sum != m {
            return Err(Error::InvalidTable(format!(
                "frequencies sum to {sum}, expected {m}"
            )));
        }
        let mut cum = Vec::with_capacity(freq.len() + 1);
        let mut slots = Vec::with_capacity(m as usize);
        let mut acc = 0u32;
        for (s, &f) in freq.iter().enumerate() {
            cum.push(acc);
            slots.extend((0..f).map(|bias| Slot {
                freq: f,
                bias: bias as u16,
                symbol: s as u8,
            }));
            acc += f;
        }
        cum.push(acc);
        Ok(Self {
            scale_bits,
            freq,
            cum,
            slots,
        })
    }

    /// Counts byte frequencies of `data` and quantizes them. The alphabet is
    /// trimmed to the largest byte present.
    pub fn from_bytes(data: &[u8], scale_bits: u32) -> Result<Self> {
        let mut counts = [0u64; MAX_ALPHABET];
        for &b in data {
            counts[b as usize] += 1;
        }
        let n = counts.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
        Self::from_counts(&counts[..n], scale_bits)
    }

    pub fn from_counts(counts: &[u64], scale_bits: u32) -> Result<Self> {
        Self::new(quantize(counts, scale_bits)?, scale_bits)
    }

    /// Two-symbol table with `f = {1, 3}` over `m = 4`. Its coding function
    /// coincides with [`crate::ans::ToyCoder`].
    pub fn toy() -> Self {
        Self::new(vec![1, 3], 2).expect("valid toy table")
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    /// Probability denominator `m`.
    pub fn total(&self) -> u32 {
        1 << self.scale_bits
    }

    pub fn alphabet_size(&self) -> usize {
        self.freq.len()
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freq
    }

    #[inline]
    pub fn freq(&self, s: usize) -> u32 {
        self.freq[s]
    }

    #[inline]
    pub fn cum(&self, s: usize) -> u32 {
        self.cum[s]
    }

    #[inline]
    pub fn symbol_at(&self, slot: u32) -> u8 {
        self.slots[slot as usize].symbol
    }

    /// `C(s, x)`. Callers must ensure `f_s >= 1`.
    #[inline]
    pub fn code(&self, s: usize, x: u64) -> u64 {
        let f = u64::from(self.freq[s]);
        ((x / f) << self.scale_bits) + u64::from(self.cum[s]) + x % f
    }

    /// `D(x)`: the symbol owning slot `x mod m` and the reduced state.
    #[inline]
    pub fn decode_state(&self, x: u32) -> (u8, u32) {
        let mask = (1u32 << self.scale_bits) - 1;
        let slot = x & mask;
        let e = self.slots[slot as usize];
        (e.symbol, e.freq * (x >> self.scale_bits) + u32::from(e.bias))
    }

    /// Ideal code length of `msg` under this table, `sum(-log2(f_s / m))`.
    pub fn ideal_bits(&self, msg: &[u8]) -> f64 {
        let mut counts = [0u64; MAX_ALPHABET];
        for &s in msg {
            counts[s as usize] += 1;
        }
        let m = f64::from(self.total());
        counts
            .iter()
            .zip(&self.freq)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &f)| c as f64 * (m / f64::from(f)).log2())
            .sum()
    }

    /// Appends `scale_bits` (u8), `n` (u16) and `n` frequencies (u16), little-endian.
    pub fn write_to(&self, out: &mut Vec<u8>) -> Result<()> {
        out.push(self.scale_bits as u8);
        out.extend_from_slice(&(self.freq.len() as u16).to_le_bytes());
        for &f in &self.freq {
            let f = u16::try_from(f).map_err(|_| {
                Error::InvalidTable(format!("frequency {f} does not fit a 16-bit field"))
            })?;
            out.extend_from_slice(&f.to_le_bytes());
        }
        Ok(())
    }

    /// Parses a table written by [`SymbolTable::write_to`]; returns it with
    /// the number of bytes consumed.
    pub fn read_from(bytes: &[u8]) -> Result<(Self, usize)> {
        let short = || Error::Malformed("frequency table truncated".into());
        let scale_bits = u32::from(*bytes.first().ok_or_else(short)?);
        let n = u16::from_le_bytes(bytes.get(1..3).ok_or_else(short)?.try_into().unwrap()) as usize;
        let end = 3 + 2 * n;
        let body = bytes.get(3..end).ok_or_else(short)?;
        let freq = body
            .chunks_exact(2)
            .map(|c| u32::from(u16::from_le_bytes([c[0], c[1]])))
            .collect();
        Ok((Self::new(freq, scale_bits)?, end))
    }
}

/// Wire tag of the two standard renormalization variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum VariantTag {
    Byte8 = 0,
    Word16 = 1,
}

impl VariantTag {
    pub fn from_u8(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Self::Byte8),
            1 => Ok(Self::Word16),
            other => Err(Error::UnknownVariant(other)),
        }
    }

    pub fn params(self) -> RenormVariant {
        match self {
            Self::Byte8 => RenormVariant::BYTE8,
            Self::Word16 => RenormVariant::WORD16,
        }
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Byte8 => "byte8",
            Self::Word16 => "word16",
        })
    }
}

impl std::str::FromStr for VariantTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "byte8" => Ok(Self::Byte8),
            "word16" => Ok(Self::Word16),
            other => Err(format!("unknown variant `{other}` (expected byte8 or word16)")),
        }
    }
}

/// Renormalization parameters: radix `b = 2^digit_bits` and interval lower
/// bound `L`, with `b*L <= 2^32` so states fit 32 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RenormVariant {
    digit_bits: u32,
    lower: u32,
}

impl RenormVariant {
    /// Byte-wise I/O: `b = 2^8`, `L = 2^23`.
    pub const BYTE8: Self = Self {
        digit_bits: 8,
        lower: 1 << 23,
    };
    /// Word-wise I/O: `b = 2^16`, `L = 2^16`.
    pub const WORD16: Self = Self {
        digit_bits: 16,
        lower: 1 << 16,
    };

    pub fn custom(digit_bits: u32, lower: u32) -> Result<Self> {
        if !(1..=16).contains(&digit_bits) {
            return Err(Error::InvalidRenorm(format!("digit_bits {digit_bits} outside 1..=16")));
        }
        if lower == 0 || (u64::from(lower) << digit_bits) > 1u64 << 32 {
            return Err(Error::InvalidRenorm(format!(
                "L = {lower} with b = 2^{digit_bits} does not keep states within 32 bits"
            )));
        }
        Ok(Self { digit_bits, lower })
    }

    /// `L = 16`, `b = 2`, matching the toy coder's interval.
    pub fn toy() -> Self {
        Self::custom(1, 16).expect("valid toy parameters")
    }

    pub fn tag(&self) -> Option<VariantTag> {
        if *self == Self::BYTE8 {
            Some(VariantTag::Byte8)
        } else if *self == Self::WORD16 {
            Some(VariantTag::Word16)
        } else {
            None
        }
    }

    #[inline]
    pub fn digit_bits(&self) -> u32 {
        self.digit_bits
    }

    #[inline]
    pub fn radix(&self) -> u32 {
        1 << self.digit_bits
    }

    #[inline]
    pub fn lower_bound(&self) -> u32 {
        self.lower
    }

    pub fn upper_bound(&self) -> u64 {
        u64::from(self.lower) << self.digit_bits
    }

    pub fn contains(&self, x: u32) -> bool {
        x >= self.lower && u64::from(x) < self.upper_bound()
    }

    /// `L` must be a positive multiple of `m` for the precursor intervals to
    /// be b-unique.
    pub fn check_table(&self, table: &SymbolTable) -> Result<()> {
        if !self.lower.is_multiple_of(table.total()) {
            return Err(Error::InvalidRenorm(format!(
                "L = {} is not a multiple of m = {}",
                self.lower,
                table.total()
            )));
        }
        Ok(())
    }

    /// True when `b >= m`, so every symbol needs at most one renormalization
    /// digit in either direction.
    pub fn single_renorm(&self, table: &SymbolTable) -> bool {
        self.radix() >= table.total()
    }

    /// Upper end (exclusive) of the precursor interval of a symbol with frequency `f`.
    #[inline]
    pub fn encode_threshold(&self, table: &SymbolTable, f: u32) -> u64 {
        (u64::from(self.lower >> table.scale_bits) << self.digit_bits) * u64::from(f)
    }
}

/// Source of digits in read order.
pub trait DigitRead {
    fn read_digit(&mut self) -> Result<u16>;
}

/// Forward cursor over a digit stream in read order.
#[derive(Debug, Clone)]
pub struct DigitCursor<'a> {
    digits: &'a [u16],
    pos: usize,
}

impl<'a> DigitCursor<'a> {
    pub fn new(digits: &'a [u16]) -> Self {
        Self { digits, pos: 0 }
    }

    pub fn at(digits: &'a [u16], pos: usize) -> Self {
        Self { digits, pos }
    }

    #[inline]
    pub fn read(&mut self) -> Result<u16> {
        let d = *self.digits.get(self.pos).ok_or(Error::Truncated)?;
        self.pos += 1;
        Ok(d)
    }

    #[inline]
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.digits.len() - self.pos
    }

    pub fn digits(&self) -> &'a [u16] {
        self.digits
    }
}

impl DigitRead for DigitCursor<'_> {
    #[inline]
    fn read_digit(&mut self) -> Result<u16> {
        self.read()
    }
}

/// Emits digits while `x` is above the precursor interval of `s`, then codes `s`.
/// Digits are pushed onto `sink` in emission order.
#[inline]
pub fn encode_symbol_renorm(
    x: u32,
    s: usize,
    table: &SymbolTable,
    variant: RenormVariant,
    sink: &mut Vec<u16>,
) -> Result<u32> {
    let f = match table.freq.get(s) {
        Some(&f) if f > 0 => f,
        _ => return Err(Error::UnencodableSymbol(s)),
    };
    let threshold = variant.encode_threshold(table, f);
    let mask = variant.radix() - 1;
    let mut x = x;
    while u64::from(x) >= threshold {
        sink.push((x & mask) as u16);
        x >>= variant.digit_bits;
    }
    Ok(table.code(s, u64::from(x)) as u32)
}

/// Decodes one symbol and reads digits until the state is back in `[L, b*L)`.
#[inline]
pub fn decode_symbol_renorm<R: DigitRead + ?Sized>(
    x: u32,
    table: &SymbolTable,
    variant: RenormVariant,
    source: &mut R,
) -> Result<(u8, u32)> {
    let (s, mut x) = table.decode_state(x);
    while x < variant.lower {
        x = (x << variant.digit_bits) | u32::from(source.read_digit()?);
    }
    Ok((s, x))
}

/// A [`SymbolTable`] under a [`RenormVariant`], viewed as a generic coder.
#[derive(Debug, Clone, Copy)]
pub struct RansSpec<'a> {
    pub table: &'a SymbolTable,
    pub variant: RenormVariant,
}

impl CoderSpec for RansSpec<'_> {
    fn alphabet_size(&self) -> usize {
        self.table.alphabet_size()
    }

    fn lower_bound(&self) -> u32 {
        self.variant.lower_bound()
    }

    fn radix(&self) -> u32 {
        self.variant.radix()
    }

    fn code(&self, symbol: usize, x: u64) -> u64 {
        // A zero-frequency symbol maps nowhere inside the interval.
        if self.table.freq(symbol) == 0 {
            return u64::MAX;
        }
        self.table.code(symbol, x)
    }

    fn decode(&self, x: u32) -> (usize, u32) {
        let (s, x) = self.table.decode_state(x);
        (s as usize, x)
    }
}

/// Order-0 entropy of `data` in bits per symbol, from its histogram.
pub fn order0_entropy(data: &[u8]) -> f64 {
    let mut counts = [0u64; MAX_ALPHABET];
    for &b in data {
        counts[b as usize] += 1;
    }
    let n = data.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}
