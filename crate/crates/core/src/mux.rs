//! Metadata-free multiplexing of independently coded streams.
//!
//! Each stream is encoded into its own buffer by any [`PluggableCoder`]. To
//! merge them, the encoder replays the receiver: it runs every stream's
//! decoder in schedule order against that stream's buffer and copies each
//! digit the decoder reads into the output. The result holds the digits of all
//! streams in exactly the order the receiver, reading one shared stream,
//! will ask for them.
//!
//! Replaying a stream can only proceed once its encoder has produced the digits
//! the decoder needs. For block coders like rANS that is at flush time, so a
//! stream that flushes late stalls the replay and forces everything behind it
//! to be buffered. [`mux_with_flush`] forces all block coders to flush at every
//! `F` schedule positions, bounding that buffering at some cost in rate.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::interleave::{decode_raw_bits, encode_raw_bits, raw_digits};
use crate::rans::{
    decode_symbol_renorm, encode_symbol_renorm, DigitCursor, DigitRead, RenormVariant, SymbolTable,
};

pub const MAGIC: [u8; 4] = *b"IEM1";
pub const VERSION: u8 = 1;

/// Per-block decoding state of a [`PluggableCoder`].
pub trait BlockDecoder {
    /// Starts a block. `header` is the out-of-band blob for a stream's first
    /// block; later blocks carry their start-up state inline in `src`.
    fn start(&mut self, header: Option<&[u8]>, src: &mut dyn DigitRead) -> Result<()>;

    fn decode(&mut self, src: &mut dyn DigitRead) -> Result<u32>;
}

/// An entropy coder that encodes a run of symbols into its own digit buffer
/// and can decode it back from any digit source.
pub trait PluggableCoder {
    /// Encodes `symbols` from a fresh state. Returns the digits in read order
    /// and a header blob; with `inline_state` the header is empty and any
    /// start-up state is placed at the front of the digits instead.
    fn encode_block(&self, symbols: &[u32], inline_state: bool) -> Result<EncodedStream>;

    fn decoder(&self) -> Box<dyn BlockDecoder + '_>;

    /// True if every symbol's digits are final as soon as it is encoded, and
    /// a block's digits are the concatenation of its symbols' digits.
    fn is_streaming(&self) -> bool;

    /// Upper bound on the digits one symbol can produce.
    fn max_digits_per_symbol(&self) -> usize;

    /// Digits of start-up state carried inline by every block after the first.
    fn inline_state_digits(&self) -> usize;
}

/// One stream's encoder output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodedStream {
    pub header: Vec<u8>,
    pub digits: Vec<u16>,
}

/// Single-lane rANS over a static table.
#[derive(Debug, Clone)]
pub struct RansStreamCoder {
    pub table: SymbolTable,
    pub variant: RenormVariant,
}

impl RansStreamCoder {
    pub fn new(table: SymbolTable, variant: RenormVariant) -> Result<Self> {
        variant.check_table(&table)?;
        Ok(Self { table, variant })
    }

    fn symbol(&self, s: u32) -> Result<usize> {
        let s = s as usize;
        if s < self.table.alphabet_size() && self.table.freq(s) > 0 {
            Ok(s)
        } else {
            Err(Error::UnencodableSymbol(s))
        }
    }
}

impl PluggableCoder for RansStreamCoder {
    fn encode_block(&self, symbols: &[u32], inline_state: bool) -> Result<EncodedStream> {
        let mut x = self.variant.lower_bound();
        let mut stack = Vec::new();
        for &s in symbols.iter().rev() {
            x = encode_symbol_renorm(x, self.symbol(s)?, &self.table, self.variant, &mut stack)?;
        }
        let header = if inline_state {
            encode_raw_bits(x, 32, self.variant, &mut stack)?;
            Vec::new()
        } else {
            x.to_le_bytes().to_vec()
        };
        stack.reverse();
        Ok(EncodedStream { header, digits: stack })
    }

    fn decoder(&self) -> Box<dyn BlockDecoder + '_> {
        Box::new(RansBlockDecoder { coder: self, x: 0 })
    }

    fn is_streaming(&self) -> bool {
        false
    }

    fn max_digits_per_symbol(&self) -> usize {
        self.table.scale_bits().div_ceil(self.variant.digit_bits()) as usize
    }

    fn inline_state_digits(&self) -> usize {
        raw_digits(32, self.variant) as usize
    }
}

struct RansBlockDecoder<'a> {
    coder: &'a RansStreamCoder,
    x: u32,
}

impl BlockDecoder for RansBlockDecoder<'_> {
    fn start(&mut self, header: Option<&[u8]>, src: &mut dyn DigitRead) -> Result<()> {
        let x = match header {
            Some(h) => u32::from_le_bytes(
                h.try_into()
                    .map_err(|_| Error::Malformed("rANS stream header must be 4 bytes".into()))?,
            ),
            None => decode_raw_bits(32, self.coder.variant, src)?,
        };
        if !self.coder.variant.contains(x) {
            return Err(Error::Malformed(format!("rANS stream state {x} outside normalized interval")));
        }
        self.x = x;
        Ok(())
    }

    fn decode(&mut self, src: &mut dyn DigitRead) -> Result<u32> {
        let (s, x) = decode_symbol_renorm(self.x, &self.coder.table, self.coder.variant, src)?;
        self.x = x;
        Ok(u32::from(s))
    }
}

/// Fixed-width raw values, most significant digit first. Needs no state and
/// never has to flush.
#[derive(Debug, Clone, Copy)]
pub struct RawBitsCoder {
    pub width: u32,
    pub variant: RenormVariant,
}

impl RawBitsCoder {
    pub fn new(width: u32) -> Result<Self> {
        if width > 32 {
            return Err(Error::InvalidRawWidth(width));
        }
        Ok(Self {
            width,
            variant: RenormVariant::WORD16,
        })
    }
}

impl PluggableCoder for RawBitsCoder {
    fn encode_block(&self, symbols: &[u32], _inline_state: bool) -> Result<EncodedStream> {
        let mut digits = Vec::with_capacity(symbols.len() * self.max_digits_per_symbol());
        let mut scratch = Vec::new();
        for &v in symbols {
            scratch.clear();
            encode_raw_bits(v, self.width, self.variant, &mut scratch)?;
            digits.extend(scratch.iter().rev());
        }
        Ok(EncodedStream {
            header: Vec::new(),
            digits,
        })
    }

    fn decoder(&self) -> Box<dyn BlockDecoder + '_> {
        Box::new(*self)
    }

    fn is_streaming(&self) -> bool {
        true
    }

    fn max_digits_per_symbol(&self) -> usize {
        raw_digits(self.width, self.variant) as usize
    }

    fn inline_state_digits(&self) -> usize {
        0
    }
}

impl BlockDecoder for RawBitsCoder {
    fn start(&mut self, _header: Option<&[u8]>, _src: &mut dyn DigitRead) -> Result<()> {
        Ok(())
    }

    fn decode(&mut self, src: &mut dyn DigitRead) -> Result<u32> {
        decode_raw_bits(self.width, self.variant, src)
    }
}

/// Stream ID per decode step, shared by both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuxSchedule(Vec<u16>);

impl MuxSchedule {
    pub fn new(ids: Vec<u16>) -> Self {
        Self(ids)
    }

    /// Cycles over the streams, skipping streams that have run out.
    pub fn round_robin(lengths: &[usize]) -> Self {
        let total = lengths.iter().sum();
        let mut left = lengths.to_vec();
        let mut ids = Vec::with_capacity(total);
        while ids.len() < total {
            for (s, n) in left.iter_mut().enumerate() {
                if *n > 0 {
                    *n -= 1;
                    ids.push(s as u16);
                }
            }
        }
        Self(ids)
    }

    pub fn ids(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Symbols scheduled on each of `streams` streams.
    pub fn counts(&self, streams: usize) -> Result<Vec<usize>> {
        let mut counts = vec![0; streams];
        for &id in &self.0 {
            *counts
                .get_mut(id as usize)
                .ok_or_else(|| Error::ScheduleMismatch(format!("schedule names stream {id} of {streams}")))? += 1;
        }
        Ok(counts)
    }

    /// Merges per-stream messages into the global symbol order.
    pub fn interleave(&self, messages: &[Vec<u32>]) -> Result<Vec<(usize, u32)>> {
        let counts = self.counts(messages.len())?;
        if counts.iter().zip(messages).any(|(&c, m)| c != m.len()) {
            return Err(Error::ScheduleMismatch("schedule does not cover the messages exactly".into()));
        }
        let mut next = vec![0usize; messages.len()];
        Ok(self
            .0
            .iter()
            .map(|&id| {
                let s = id as usize;
                let sym = messages[s][next[s]];
                next[s] += 1;
                (s, sym)
            })
            .collect())
    }
}

/// Encodes each stream independently into its own buffer.
pub fn encode_multistream(messages: &[Vec<u32>], coders: &[&dyn PluggableCoder]) -> Result<Vec<EncodedStream>> {
    if messages.len() != coders.len() {
        return Err(Error::ScheduleMismatch("one coder per stream required".into()));
    }
    messages
        .iter()
        .zip(coders)
        .map(|(m, c)| c.encode_block(m, false))
        .collect()
}

/// Reads from a stream's own buffer and copies every digit into the mux output.
struct Tee<'a, 'b> {
    inner: &'a mut VecDeque<u16>,
    out: &'b mut Vec<u16>,
}

impl DigitRead for Tee<'_, '_> {
    fn read_digit(&mut self) -> Result<u16> {
        let d = self.inner.pop_front().ok_or(Error::Truncated)?;
        self.out.push(d);
        Ok(d)
    }
}

fn exhausted(stream: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Truncated => Error::ScheduleMismatch(format!("stream {stream} exhausted early")),
        other => other,
    }
}

/// Interleaves already encoded stream buffers by replaying their decoders.
/// The output length is exactly the sum of the buffer lengths.
pub fn mux(buffers: &[EncodedStream], coders: &[&dyn PluggableCoder], schedule: &MuxSchedule) -> Result<Vec<u16>> {
    if buffers.len() != coders.len() {
        return Err(Error::ScheduleMismatch("one coder per stream required".into()));
    }
    schedule.counts(buffers.len())?;
    let mut queues: Vec<VecDeque<u16>> = buffers.iter().map(|b| b.digits.iter().copied().collect()).collect();
    let mut out = Vec::with_capacity(queues.iter().map(VecDeque::len).sum());
    let mut decoders = Vec::with_capacity(coders.len());
    for (s, (coder, buf)) in coders.iter().zip(buffers).enumerate() {
        let mut dec = coder.decoder();
        let mut tee = Tee {
            inner: &mut queues[s],
            out: &mut out,
        };
        dec.start(Some(&buf.header), &mut tee).map_err(exhausted(s))?;
        decoders.push(dec);
    }
    for &id in schedule.ids() {
        let s = id as usize;
        let mut tee = Tee {
            inner: &mut queues[s],
            out: &mut out,
        };
        decoders[s].decode(&mut tee).map_err(exhausted(s))?;
    }
    if let Some(s) = queues.iter().position(|q| !q.is_empty()) {
        return Err(Error::ScheduleMismatch(format!("stream {s} has unread digits")));
    }
    Ok(out)
}

/// Per-stream headers followed by the muxed payload.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MuxContainer {
    /// Block length `F` in schedule positions; `None` means one block per stream.
    pub flush_interval: Option<u64>,
    pub headers: Vec<Vec<u8>>,
    pub payload: Vec<u16>,
}

impl MuxContainer {
    /// `"IEM1"`, version (u8), flush interval (u64, 0 = none), stream count
    /// (u16), per stream a u32 length and header blob, then the payload as
    /// u16 digits. All little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.flush_interval.unwrap_or(0).to_le_bytes());
        out.extend_from_slice(&(self.headers.len() as u16).to_le_bytes());
        for h in &self.headers {
            out.extend_from_slice(&(h.len() as u32).to_le_bytes());
            out.extend_from_slice(h);
        }
        for &d in &self.payload {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        let mut pos = 4;
        let mut take = |n: usize| -> Result<&[u8]> {
            let chunk = bytes
                .get(pos..pos + n)
                .ok_or_else(|| Error::Malformed("mux preamble truncated".into()))?;
            pos += n;
            Ok(chunk)
        };
        let version = take(1)?[0];
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let flush = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let streams = u16::from_le_bytes(take(2)?.try_into().unwrap());
        let mut headers = Vec::with_capacity(streams as usize);
        for _ in 0..streams {
            let n = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
            headers.push(take(n)?.to_vec());
        }
        let rest = &bytes[pos..];
        if !rest.len().is_multiple_of(2) {
            return Err(Error::Malformed("odd-length mux payload".into()));
        }
        Ok(Self {
            flush_interval: (flush != 0).then_some(flush),
            headers,
            payload: rest.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
        })
    }
}

fn window(position: usize, flush_interval: Option<u64>) -> u64 {
    flush_interval.map_or(0, |f| position as u64 / f)
}

/// Decodes every stream from the single muxed stream, each decoder reading
/// from the shared cursor exactly when the schedule names it. A wrong
/// schedule is not detectable in general; it shows up as wrong output.
pub fn demux_decode(
    container: &MuxContainer,
    coders: &[&dyn PluggableCoder],
    schedule: &MuxSchedule,
) -> Result<Vec<Vec<u32>>> {
    if container.headers.len() != coders.len() {
        return Err(Error::ScheduleMismatch("one coder per stream required".into()));
    }
    let counts = schedule.counts(coders.len())?;
    let mut out: Vec<Vec<u32>> = counts.iter().map(|&n| Vec::with_capacity(n)).collect();
    let mut cursor = DigitCursor::new(&container.payload);
    let mut decoders: Vec<_> = coders.iter().map(|c| c.decoder()).collect();
    let mut current: Vec<Option<u64>> = vec![None; coders.len()];
    for (p, &id) in schedule.ids().iter().enumerate() {
        let s = id as usize;
        let w = window(p, container.flush_interval);
        match current[s] {
            None => decoders[s].start(Some(&container.headers[s]), &mut cursor)?,
            Some(prev) if prev != w => decoders[s].start(None, &mut cursor)?,
            Some(_) => {}
        }
        current[s] = Some(w);
        out[s].push(decoders[s].decode(&mut cursor)?);
    }
    if cursor.remaining() > 0 {
        log::warn!("trailing garbage: {} digits after the last symbol", cursor.remaining());
    }
    Ok(out)
}

/// Buffering report of an incremental mux.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MuxBudget {
    /// Flush interval used; `None` means every stream flushed once, at the end.
    pub flush_interval: Option<u64>,
    /// High-water mark of encoded bytes waiting for the replay.
    pub max_buffered: usize,
    /// High-water mark of input symbols waiting for a block flush.
    pub max_pending_symbols: usize,
    /// Blocks beyond each stream's first; each carries inline state.
    pub extra_blocks: usize,
    /// Bytes per buffered symbol per stream (c1 in `c1*F*streams + c2`).
    pub bytes_per_symbol: usize,
    /// Fixed bytes of inline state that may be buffered (c2).
    pub fixed_bytes: usize,
}

impl MuxBudget {
    /// `c1*F*streams + c2`; `None` without a flush interval.
    pub fn bound(&self, streams: usize) -> Option<usize> {
        self.flush_interval
            .map(|f| self.bytes_per_symbol * f as usize * streams + self.fixed_bytes)
    }
}

/// Muxes incrementally: symbols arrive in schedule order, block coders flush
/// all pending symbols at every multiple of `flush_interval` positions (and
/// at the end), and the replay drains whatever has become decodable. Blocks
/// after a stream's first carry their start-up state inline.
///
/// With `flush_interval = None`, or at least the total length, the output
/// equals [`mux`] over [`encode_multistream`].
pub fn mux_with_flush(
    messages: &[Vec<u32>],
    coders: &[&dyn PluggableCoder],
    schedule: &MuxSchedule,
    flush_interval: Option<u64>,
) -> Result<(MuxContainer, MuxBudget)> {
    if messages.len() != coders.len() {
        return Err(Error::ScheduleMismatch("one coder per stream required".into()));
    }
    if flush_interval == Some(0) {
        return Err(Error::ScheduleMismatch("flush interval must be at least 1".into()));
    }
    let order = schedule.interleave(messages)?;
    let streams = coders.len();
    let total = order.len();

    let mut headers: Vec<Option<Vec<u8>>> = vec![None; streams];
    let mut pending: Vec<Vec<u32>> = vec![Vec::new(); streams];
    let mut queues: Vec<VecDeque<u16>> = vec![VecDeque::new(); streams];
    let mut decoders: Vec<_> = coders.iter().map(|c| c.decoder()).collect();
    let mut current: Vec<Option<u64>> = vec![None; streams];
    let mut out = Vec::new();
    let mut budget = MuxBudget {
        flush_interval,
        bytes_per_symbol: 2 * coders.iter().map(|c| c.max_digits_per_symbol()).max().unwrap_or(0),
        fixed_bytes: 2 * coders.iter().map(|c| c.inline_state_digits()).sum::<usize>(),
        ..MuxBudget::default()
    };

    // Positions below `flushed` have all their digits available.
    let mut flushed = 0usize;
    let mut replayed = 0usize;
    let buffered = |queues: &[VecDeque<u16>]| 2 * queues.iter().map(VecDeque::len).sum::<usize>();

    for (p, &(s, sym)) in order.iter().enumerate() {
        let coder = coders[s];
        if coder.is_streaming() {
            let block = coder.encode_block(&[sym], false)?;
            headers[s].get_or_insert(block.header);
            queues[s].extend(block.digits);
        } else {
            pending[s].push(sym);
            budget.max_pending_symbols = budget.max_pending_symbols.max(pending.iter().map(Vec::len).sum());
        }
        let boundary = p + 1 == total || window(p + 1, flush_interval) != window(p, flush_interval);
        if boundary {
            for (s, syms) in pending.iter_mut().enumerate() {
                if syms.is_empty() {
                    continue;
                }
                let first = headers[s].is_none();
                let block = coders[s].encode_block(syms, !first)?;
                if first {
                    headers[s] = Some(block.header);
                } else {
                    budget.extra_blocks += 1;
                }
                queues[s].extend(block.digits);
                syms.clear();
            }
            flushed = p + 1;
        }
        budget.max_buffered = budget.max_buffered.max(buffered(&queues));

        // Drain: replay every position whose digits are known.
        while replayed <= p {
            let (s, _) = order[replayed];
            if !(replayed < flushed || coders[s].is_streaming()) {
                break;
            }
            let w = window(replayed, flush_interval);
            let mut tee = Tee {
                inner: &mut queues[s],
                out: &mut out,
            };
            match current[s] {
                None => decoders[s].start(headers[s].as_deref(), &mut tee),
                Some(prev) if prev != w => decoders[s].start(None, &mut tee),
                Some(_) => Ok(()),
            }
            .map_err(exhausted(s))?;
            current[s] = Some(w);
            decoders[s].decode(&mut tee).map_err(exhausted(s))?;
            replayed += 1;
        }
    }
    debug_assert!(queues.iter().all(VecDeque::is_empty));

    // Streams with no symbols still get a header, as in `encode_multistream`.
    let headers = headers
        .into_iter()
        .zip(coders)
        .map(|(h, c)| match h {
            Some(h) => Ok(h),
            None => c.encode_block(&[], false).map(|b| b.header),
        })
        .collect::<Result<Vec<_>>>()?;
    let flush_interval = flush_interval.filter(|&f| f < total as u64);
    Ok((
        MuxContainer {
            flush_interval,
            headers,
            payload: out,
        },
        budget,
    ))
}
