//! N-way interleaving of independent rANS coders in one digit stream.
//!
//! Message position `i` is coded on lane `i mod N`. The encoder runs positions
//! from last to first and every lane pushes its renormalization digits onto one
//! shared emission stack; the decoder runs positions forward, all lanes reading
//! from one shared cursor. The schedule alone tells each side which lane owns
//! which digit, so the payload carries no interleaving metadata.
//!
//! Raw ("bypass") bits ride in the same stream: the encoder emits them just
//! before coding their governing symbol and the decoder reads them just after
//! decoding it.

use crate::error::{Error, Result};
use crate::rans::{
    decode_symbol_renorm, encode_symbol_renorm, DigitCursor, DigitRead, RenormVariant, SymbolTable,
    VariantTag,
};

pub const MAGIC: [u8; 4] = *b"IEC1";
pub const VERSION: u8 = 1;
pub const MAX_LANES: usize = u16::MAX as usize;

/// Lane that codes message position `i`.
#[inline]
pub fn lane_of(position: usize, lanes: usize) -> usize {
    position % lanes
}

/// An interleaved rANS stream: model, per-lane final encoder states and the
/// shared payload in decoder read order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamContainer {
    pub variant: RenormVariant,
    pub table: SymbolTable,
    pub message_length: u64,
    /// Final encoder state of each lane, i.e. the decoder's starting states.
    pub states: Vec<u32>,
    pub payload: Vec<u16>,
}

impl StreamContainer {
    pub fn lanes(&self) -> usize {
        self.states.len()
    }

    /// Size of the header in bytes (everything except the payload).
    pub fn header_len(&self) -> usize {
        4 + 1 + 1 + 2 + 8 + 3 + 2 * self.table.alphabet_size() + 4 * self.states.len()
    }

    pub fn payload_len_bytes(&self) -> usize {
        match self.variant.tag() {
            Some(VariantTag::Byte8) => self.payload.len(),
            _ => 2 * self.payload.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.states.is_empty() || self.states.len() > MAX_LANES {
            return Err(Error::InvalidLaneCount(self.states.len()));
        }
        self.variant.check_table(&self.table)?;
        if let Some(&bad) = self.states.iter().find(|&&x| !self.variant.contains(x)) {
            return Err(Error::Malformed(format!("lane state {bad} outside normalized interval")));
        }
        Ok(())
    }

    /// Serializes to the little-endian wire format. Only the standard
    /// variants have a wire tag.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let tag = self
            .variant
            .tag()
            .ok_or_else(|| Error::InvalidRenorm("custom variants have no wire encoding".into()))?;
        self.validate()?;
        let mut out = Vec::with_capacity(self.header_len() + self.payload_len_bytes());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(tag as u8);
        out.extend_from_slice(&(self.states.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.message_length.to_le_bytes());
        self.table.write_to(&mut out)?;
        for &x in &self.states {
            out.extend_from_slice(&x.to_le_bytes());
        }
        match tag {
            VariantTag::Byte8 => out.extend(self.payload.iter().map(|&d| d as u8)),
            VariantTag::Word16 => {
                for &d in &self.payload {
                    out.extend_from_slice(&d.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    /// Parses the wire format. The magic and version are checked before
    /// anything else is read.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let tag = VariantTag::from_u8(r.u8()?)?;
        let lanes = r.u16()? as usize;
        let message_length = r.u64()?;
        let (table, used) = SymbolTable::read_from(&bytes[r.pos..])?;
        r.pos += used;
        let states = (0..lanes).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let rest = &bytes[r.pos..];
        let payload = match tag {
            VariantTag::Byte8 => rest.iter().map(|&b| u16::from(b)).collect(),
            VariantTag::Word16 => {
                if !rest.len().is_multiple_of(2) {
                    return Err(Error::Malformed("odd-length word16 payload".into()));
                }
                rest.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()
            }
        };
        let container = Self {
            variant: tag.params(),
            table,
            message_length,
            states,
            payload,
        };
        container.validate()?;
        Ok(container)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let chunk = self
            .bytes
            .get(self.pos..self.pos + K)
            .ok_or_else(|| Error::Malformed("header truncated".into()))?;
        self.pos += K;
        Ok(chunk.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
}

fn check_lanes(lanes: usize) -> Result<()> {
    if lanes == 0 || lanes > MAX_LANES {
        Err(Error::InvalidLaneCount(lanes))
    } else {
        Ok(())
    }
}

/// Number of digits a raw value of `width` bits occupies.
pub fn raw_digits(width: u32, variant: RenormVariant) -> u32 {
    width.div_ceil(variant.digit_bits())
}

/// Pushes the low `width` bits of `value` onto the emission stack, least
/// significant digit first, so the decoder reads them most significant first.
pub fn encode_raw_bits(value: u32, width: u32, variant: RenormVariant, stack: &mut Vec<u16>) -> Result<()> {
    if width > 32 {
        return Err(Error::InvalidRawWidth(width));
    }
    let mut v = if width == 32 { value } else { value & ((1u32 << width) - 1) };
    let mask = variant.radix() - 1;
    for _ in 0..raw_digits(width, variant) {
        stack.push((v & mask) as u16);
        v = v.checked_shr(variant.digit_bits()).unwrap_or(0);
    }
    Ok(())
}

pub fn decode_raw_bits<R: DigitRead + ?Sized>(width: u32, variant: RenormVariant, source: &mut R) -> Result<u32> {
    if width > 32 {
        return Err(Error::InvalidRawWidth(width));
    }
    let mut v = 0u64;
    for _ in 0..raw_digits(width, variant) {
        v = (v << variant.digit_bits()) | u64::from(source.read_digit()?);
    }
    Ok(v as u32)
}

fn prepare(table: &SymbolTable, lanes: usize, variant: RenormVariant) -> Result<Vec<u32>> {
    check_lanes(lanes)?;
    variant.check_table(table)?;
    Ok(vec![variant.lower_bound(); lanes])
}

/// Encodes `msg` on `lanes` interleaved coders sharing one emission stack.
pub fn encode_interleaved(
    msg: &[u8],
    table: &SymbolTable,
    lanes: usize,
    variant: RenormVariant,
) -> Result<StreamContainer> {
    let mut states = prepare(table, lanes, variant)?;
    let mut stack = Vec::with_capacity(msg.len() / 2);
    for (i, &s) in msg.iter().enumerate().rev() {
        let lane = lane_of(i, lanes);
        states[lane] = encode_symbol_renorm(states[lane], s as usize, table, variant, &mut stack)?;
    }
    stack.reverse();
    Ok(StreamContainer {
        variant,
        table: table.clone(),
        message_length: msg.len() as u64,
        states,
        payload: stack,
    })
}

/// Encodes symbols plus bypass values. After position `i`'s symbol the decoder
/// reads `raw_width(msg[i])` raw bits holding `raw[i]`.
pub fn encode_mixed(
    msg: &[u8],
    raw: &[u32],
    raw_width: impl Fn(u8) -> u32,
    table: &SymbolTable,
    lanes: usize,
    variant: RenormVariant,
) -> Result<StreamContainer> {
    if raw.len() != msg.len() {
        return Err(Error::Malformed("one raw value per symbol required".into()));
    }
    let mut states = prepare(table, lanes, variant)?;
    let mut stack = Vec::with_capacity(msg.len() / 2);
    for (i, &s) in msg.iter().enumerate().rev() {
        encode_raw_bits(raw[i], raw_width(s), variant, &mut stack)?;
        let lane = lane_of(i, lanes);
        states[lane] = encode_symbol_renorm(states[lane], s as usize, table, variant, &mut stack)?;
    }
    stack.reverse();
    Ok(StreamContainer {
        variant,
        table: table.clone(),
        message_length: msg.len() as u64,
        states,
        payload: stack,
    })
}

/// Stepwise serial decoder over a container: one symbol per call, lanes in
/// schedule order. Exposes states and read position for lockstep comparison.
#[derive(Debug, Clone)]
pub struct InterleavedDecoder<'a> {
    container: &'a StreamContainer,
    states: Vec<u32>,
    cursor: DigitCursor<'a>,
    decoded: u64,
}

impl<'a> InterleavedDecoder<'a> {
    pub fn new(container: &'a StreamContainer) -> Result<Self> {
        container.validate()?;
        Ok(Self {
            container,
            states: container.states.clone(),
            cursor: DigitCursor::new(&container.payload),
            decoded: 0,
        })
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn position(&self) -> usize {
        self.cursor.position()
    }

    pub fn decoded(&self) -> u64 {
        self.decoded
    }

    pub fn is_done(&self) -> bool {
        self.decoded == self.container.message_length
    }

    pub fn next_symbol(&mut self) -> Result<u8> {
        let c = self.container;
        let lane = (self.decoded % self.states.len() as u64) as usize;
        let (s, x) = decode_symbol_renorm(self.states[lane], &c.table, c.variant, &mut self.cursor)?;
        self.states[lane] = x;
        self.decoded += 1;
        Ok(s)
    }

    pub fn read_raw(&mut self, width: u32) -> Result<u32> {
        decode_raw_bits(width, self.container.variant, &mut self.cursor)
    }

    /// Checks that every lane returned to `L` and reports leftover digits.
    pub fn finish(self) -> Result<usize> {
        finish_check(self.container, &self.states, self.cursor.remaining())
    }
}

fn finish_check(c: &StreamContainer, states: &[u32], trailing: usize) -> Result<usize> {
    if states.iter().any(|&x| x != c.variant.lower_bound()) {
        return Err(Error::Malformed("decoder did not return to the initial lane states".into()));
    }
    if trailing > 0 {
        log::warn!("trailing garbage: {trailing} digits after the last symbol");
    }
    Ok(trailing)
}

fn decode_fixed<const N: usize>(c: &StreamContainer, out: &mut [u8]) -> Result<()> {
    let mut x = [0u32; N];
    x.copy_from_slice(&c.states);
    let (table, variant) = (&c.table, c.variant);
    let mut cur = DigitCursor::new(&c.payload);
    let mut rounds = out.chunks_exact_mut(N);
    for round in &mut rounds {
        for lane in 0..N {
            let (s, next) = decode_symbol_renorm(x[lane], table, variant, &mut cur)?;
            round[lane] = s;
            x[lane] = next;
        }
    }
    for (lane, slot) in rounds.into_remainder().iter_mut().enumerate() {
        let (s, next) = decode_symbol_renorm(x[lane], table, variant, &mut cur)?;
        *slot = s;
        x[lane] = next;
    }
    finish_check(c, &x, cur.remaining())?;
    Ok(())
}

/// Decodes a container with the serial interleaved decoder.
pub fn decode_interleaved(c: &StreamContainer) -> Result<Vec<u8>> {
    c.validate()?;
    let len = usize::try_from(c.message_length)
        .map_err(|_| Error::Malformed("message length exceeds address space".into()))?;
    // Unless one symbol owns every slot, each symbol costs at least
    // log2(m/(m-1)) > 1/m bits, which bounds the length the stream can carry.
    let carried_bits = (c.payload.len() as u64)
        .saturating_mul(u64::from(c.variant.digit_bits()))
        .saturating_add(32 * c.states.len() as u64);
    let max_symbols = carried_bits.saturating_mul(u64::from(c.table.total()));
    if c.message_length > max_symbols && c.table.freqs().iter().all(|&f| f < c.table.total()) {
        return Err(Error::Truncated);
    }
    let mut out = vec![0u8; len];
    match c.lanes() {
        1 => decode_fixed::<1>(c, &mut out)?,
        2 => decode_fixed::<2>(c, &mut out)?,
        4 => decode_fixed::<4>(c, &mut out)?,
        8 => decode_fixed::<8>(c, &mut out)?,
        16 => decode_fixed::<16>(c, &mut out)?,
        32 => decode_fixed::<32>(c, &mut out)?,
        _ => {
            let mut dec = InterleavedDecoder::new(c)?;
            for slot in out.iter_mut() {
                *slot = dec.next_symbol()?;
            }
            dec.finish()?;
        }
    }
    Ok(out)
}

/// Inverse of [`encode_mixed`].
pub fn decode_mixed(c: &StreamContainer, raw_width: impl Fn(u8) -> u32) -> Result<(Vec<u8>, Vec<u32>)> {
    let mut dec = InterleavedDecoder::new(c)?;
    let mut symbols = Vec::with_capacity(c.message_length as usize);
    let mut raw = Vec::with_capacity(c.message_length as usize);
    while !dec.is_done() {
        let s = dec.next_symbol()?;
        raw.push(dec.read_raw(raw_width(s))?);
        symbols.push(s);
    }
    dec.finish()?;
    Ok((symbols, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_msg(text: &str) -> Vec<u8> {
        text.bytes().map(|c| u8::from(c == b'b')).collect()
    }

    #[test]
    fn single_lane_matches_toy_trace() {
        let c = encode_interleaved(&toy_msg("babba"), &SymbolTable::toy(), 1, RenormVariant::toy()).unwrap();
        assert_eq!(c.payload, vec![0, 1, 0, 0, 0]);
        assert_eq!(c.states, vec![19]);
        assert_eq!(decode_interleaved(&c).unwrap(), toy_msg("babba"));
    }

    #[test]
    fn empty_message() {
        let t = SymbolTable::from_counts(&[1, 2, 3], 14).unwrap();
        let c = encode_interleaved(&[], &t, 2, RenormVariant::WORD16).unwrap();
        assert!(c.payload.is_empty());
        assert_eq!(c.states, vec![1 << 16; 2]);
        assert!(decode_interleaved(&c).unwrap().is_empty());
        let back = StreamContainer::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn tail_lanes_code_one_fewer_symbol() {
        let msg: Vec<u8> = (0..23u32).map(|i| (i * 7 % 5) as u8).collect();
        let t = SymbolTable::from_bytes(&msg, 10).unwrap();
        for lanes in [1, 2, 3, 4, 5, 8, 16, 23, 40] {
            for variant in [RenormVariant::BYTE8, RenormVariant::WORD16] {
                let c = encode_interleaved(&msg, &t, lanes, variant).unwrap();
                assert_eq!(decode_interleaved(&c).unwrap(), msg, "lanes={lanes}");
                let bytes = c.to_bytes().unwrap();
                assert_eq!(bytes.len(), c.header_len() + c.payload_len_bytes());
                assert_eq!(StreamContainer::from_bytes(&bytes).unwrap(), c);
            }
        }
    }

    #[test]
    fn format_gate() {
        let t = SymbolTable::from_counts(&[1, 2], 8).unwrap();
        let c = encode_interleaved(&[0, 1, 1], &t, 2, RenormVariant::WORD16).unwrap();
        let mut bytes = c.to_bytes().unwrap();
        bytes[0] = b'X';
        assert_eq!(StreamContainer::from_bytes(&bytes), Err(Error::BadMagic));
        bytes[0] = b'I';
        bytes[4] = 9;
        assert_eq!(StreamContainer::from_bytes(&bytes), Err(Error::UnsupportedVersion(9)));
        bytes[4] = VERSION;
        bytes[5] = 7;
        assert_eq!(StreamContainer::from_bytes(&bytes), Err(Error::UnknownVariant(7)));
        assert_eq!(StreamContainer::from_bytes(b"IEC"), Err(Error::BadMagic));
        bytes[5] = 1;
        assert!(StreamContainer::from_bytes(&bytes[..12]).is_err());
    }

    #[test]
    fn header_layout_is_fixed() {
        let t = SymbolTable::new(vec![1, 3], 2).unwrap();
        let c = encode_interleaved(&[1, 0], &t, 1, RenormVariant::WORD16).unwrap();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"IEC1");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 1);
        assert_eq!(&bytes[6..8], &[1, 0]);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..23], &[2, 2, 0, 1, 0, 3, 0]);
        assert_eq!(&bytes[23..27], &c.states[0].to_le_bytes());
        assert_eq!(bytes.len(), 27 + 2 * c.payload.len());
    }

    #[test]
    fn truncated_payload() {
        let msg: Vec<u8> = (0..2000u32).map(|i| (i % 7) as u8).collect();
        let t = SymbolTable::from_bytes(&msg, 12).unwrap();
        let mut c = encode_interleaved(&msg, &t, 4, RenormVariant::WORD16).unwrap();
        c.payload.truncate(c.payload.len() / 2);
        assert_eq!(decode_interleaved(&c), Err(Error::Truncated));
    }

    #[test]
    fn absurd_length_is_rejected_without_allocating() {
        let t = SymbolTable::from_counts(&[1, 1], 8).unwrap();
        let mut c = encode_interleaved(&[0, 1], &t, 1, RenormVariant::WORD16).unwrap();
        c.message_length = u64::MAX / 2;
        assert!(decode_interleaved(&c).is_err());
    }

    #[test]
    fn raw_bits_roundtrip() {
        for variant in [RenormVariant::toy(), RenormVariant::BYTE8, RenormVariant::WORD16] {
            for width in [0, 1, 2, 7, 8, 13, 16, 17, 31, 32] {
                let value = 0xdead_beefu32 & if width == 32 { u32::MAX } else { (1 << width) - 1 };
                let mut stack = Vec::new();
                encode_raw_bits(value, width, variant, &mut stack).unwrap();
                assert_eq!(stack.len() as u32, raw_digits(width, variant));
                stack.reverse();
                let mut cur = DigitCursor::new(&stack);
                assert_eq!(decode_raw_bits(width, variant, &mut cur).unwrap(), value);
                assert_eq!(cur.remaining(), 0);
            }
        }
        let mut stack = Vec::new();
        encode_raw_bits(3, 0, RenormVariant::WORD16, &mut stack).unwrap();
        assert!(stack.is_empty());
        assert!(encode_raw_bits(0, 33, RenormVariant::WORD16, &mut stack).is_err());
    }

    #[test]
    fn toy_subtype_after_a() {
        // Two raw bits follow every `a`; the first `a` carries subtype 2.
        let msg = toy_msg("babba");
        let raw = [0, 2, 0, 0, 1];
        let width = |s: u8| if s == 0 { 2 } else { 0 };
        let c = encode_mixed(&msg, &raw, width, &SymbolTable::toy(), 1, RenormVariant::toy()).unwrap();
        // Subtype bits 1,0 sit right where the decoder reaches state 30.
        assert_eq!(c.states, vec![19]);
        assert_eq!(c.payload, vec![0, 1, 0, 1, 0, 0, 0, 0, 1]);
        assert_eq!(decode_mixed(&c, width).unwrap(), (msg, raw.to_vec()));
    }

    #[test]
    fn custom_variant_has_no_wire_form() {
        let c = encode_interleaved(&[0], &SymbolTable::toy(), 1, RenormVariant::toy()).unwrap();
        assert!(c.to_bytes().is_err());
    }

    #[test]
    fn invalid_lane_counts() {
        let t = SymbolTable::from_counts(&[1, 1], 8).unwrap();
        assert_eq!(
            encode_interleaved(&[0], &t, 0, RenormVariant::WORD16),
            Err(Error::InvalidLaneCount(0))
        );
    }
}
