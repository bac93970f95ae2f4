//! Lane-parallel rANS decoding and encoding.
//!
//! All lanes of a [`LaneSet`] take one step together: apply `D` (or `C`) on
//! every lane, form a bit mask of the lanes that need a renormalization digit,
//! and serve them from consecutive stream positions. A lane's position within
//! the group is the number of mask bits below it.
//!
//! This is only equivalent to the serial interleaved coder when no lane ever
//! needs more than one digit per symbol, so the lane coder is restricted to the
//! word16 variant (`b = 2^16 >= m`). Under that restriction the streams are
//! identical for every lane count.

use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{Error, Result};
use crate::interleave::StreamContainer;
use crate::rans::{RenormVariant, SymbolTable};

pub const MAX_LANES: usize = 32;

const VARIANT: RenormVariant = RenormVariant::WORD16;
const DIGIT_BITS: u32 = 16;

/// One bit per lane; bit `i` set iff lane `i` renormalizes this step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RenormMask(pub u32);

impl RenormMask {
    #[inline]
    pub fn is_set(self, lane: usize) -> bool {
        self.0 >> lane & 1 != 0
    }

    /// Digits consumed or produced by the whole group.
    #[inline]
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Number of set bits strictly below `lane`.
    #[inline]
    pub fn offset(self, lane: usize) -> u32 {
        lane_offset(self, lane)
    }
}

#[inline]
pub fn lane_offset(mask: RenormMask, lane: usize) -> u32 {
    let below = (1u64 << lane) - 1;
    (u64::from(mask.0) & below).count_ones()
}

fn lanes_bits(lanes: usize) -> u32 {
    ((1u64 << lanes) - 1) as u32
}

/// Evaluates `pred` on every lane and packs the results into a mask.
#[inline]
pub fn ballot(states: &[u32], pred: impl Fn(usize, u32) -> bool) -> RenormMask {
    debug_assert!(states.len() <= MAX_LANES);
    let mut mask = 0u32;
    for (lane, &x) in states.iter().enumerate() {
        mask |= u32::from(pred(lane, x)) << lane;
    }
    RenormMask(mask)
}

/// Builds the mask the way a group without a ballot instruction does: each
/// lane sets or clears its own bit in a shared word. The word's prior
/// contents do not matter for lane bits; bits above the group are cleared.
pub fn ballot_shared(states: &[u32], pred: impl Fn(usize, u32) -> bool, shared: &AtomicU32) -> RenormMask {
    for (lane, &x) in states.iter().enumerate() {
        ballot_shared_lane(lane, x, &pred, shared);
    }
    RenormMask(shared.load(Ordering::Acquire) & lanes_bits(states.len()))
}

/// The per-lane half of [`ballot_shared`], callable from concurrent threads.
pub fn ballot_shared_lane(lane: usize, x: u32, pred: impl Fn(usize, u32) -> bool, shared: &AtomicU32) {
    let bit = 1u32 << lane;
    if pred(lane, x) {
        shared.fetch_or(bit, Ordering::AcqRel);
    } else {
        shared.fetch_and(!bit, Ordering::AcqRel);
    }
}

/// Packed load through an accessor: masked lane `i` receives
/// `load(mask.offset(i))`, unmasked lanes receive zero. `load` is called
/// exactly `mask.count()` times, in increasing offset order.
#[inline]
pub fn packed_load_with(mask: RenormMask, out: &mut [u16], mut load: impl FnMut(usize) -> u16) {
    let mut next = 0usize;
    for (lane, slot) in out.iter_mut().enumerate() {
        *slot = if mask.is_set(lane) {
            let v = load(next);
            next += 1;
            v
        } else {
            0
        };
    }
}

/// Loads `mask.count()` consecutive digits starting at `pos` into the masked lanes.
pub fn packed_load(source: &[u16], pos: usize, mask: RenormMask, out: &mut [u16]) -> Result<()> {
    let n = mask.count() as usize;
    if n == 0 {
        out.fill(0);
        return Ok(());
    }
    let window = source.get(pos..pos + n).ok_or(Error::Truncated)?;
    packed_load_with(mask, out, |k| window[k]);
    Ok(())
}

/// Appends the masked lanes' values so that, once the stack is reversed into
/// read order, they appear in increasing lane order.
pub fn packed_store(values: &[u16], mask: RenormMask, stack: &mut Vec<u16>) {
    let n = mask.count() as usize;
    let base = stack.len();
    stack.resize(base + n, 0);
    for (lane, &v) in values.iter().enumerate() {
        if mask.is_set(lane) {
            stack[base + n - 1 - mask.offset(lane) as usize] = v;
        }
    }
}

/// Up to 32 lane states sharing one stream position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneSet {
    states: [u32; MAX_LANES],
    lanes: usize,
    pos: usize,
}

impl LaneSet {
    /// Lanes starting at `L`, as the encoder does.
    pub fn new(lanes: usize) -> Result<Self> {
        Self::with_states(&vec![VARIANT.lower_bound(); lanes], 0)
    }

    pub fn with_states(states: &[u32], pos: usize) -> Result<Self> {
        if states.is_empty() || states.len() > MAX_LANES {
            return Err(Error::InvalidLaneCount(states.len()));
        }
        let mut all = [0u32; MAX_LANES];
        all[..states.len()].copy_from_slice(states);
        Ok(Self {
            states: all,
            lanes: states.len(),
            pos,
        })
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn states(&self) -> &[u32] {
        &self.states[..self.lanes]
    }

    /// Shared read position (decoder) or digits written so far (encoder).
    pub fn position(&self) -> usize {
        self.pos
    }

    /// Decodes one symbol on each of the first `out.len()` lanes.
    pub fn decode_step(&mut self, table: &SymbolTable, source: &[u16], out: &mut [u8]) -> Result<RenormMask> {
        let active = out.len();
        debug_assert!(active <= self.lanes);
        let x = &mut self.states[..active];
        for (xi, s) in x.iter_mut().zip(out.iter_mut()) {
            let (sym, next) = table.decode_state(*xi);
            *s = sym;
            *xi = next;
        }
        let lower = VARIANT.lower_bound();
        let mask = ballot(x, |_, xi| xi < lower);
        let mut words = [0u16; MAX_LANES];
        packed_load(source, self.pos, mask, &mut words[..active])?;
        for (lane, xi) in x.iter_mut().enumerate() {
            if mask.is_set(lane) {
                *xi = (*xi << DIGIT_BITS) | u32::from(words[lane]);
            }
        }
        self.pos += mask.count() as usize;
        Ok(mask)
    }

    /// Encodes `symbols[i]` on lane `i` for the first `symbols.len()` lanes;
    /// the exact inverse of [`LaneSet::decode_step`].
    pub fn encode_step(&mut self, table: &SymbolTable, symbols: &[u8], stack: &mut Vec<u16>) -> Result<RenormMask> {
        let active = symbols.len();
        debug_assert!(active <= self.lanes);
        let mut freqs = [0u32; MAX_LANES];
        for (f, &s) in freqs.iter_mut().zip(symbols) {
            *f = match table.freqs().get(s as usize) {
                Some(&f) if f > 0 => f,
                _ => return Err(Error::UnencodableSymbol(s as usize)),
            };
        }
        let x = &mut self.states[..active];
        let mask = ballot(x, |lane, xi| u64::from(xi) >= VARIANT.encode_threshold(table, freqs[lane]));
        let mut words = [0u16; MAX_LANES];
        for (lane, xi) in x.iter_mut().enumerate() {
            if mask.is_set(lane) {
                words[lane] = *xi as u16;
                *xi >>= DIGIT_BITS;
            }
        }
        packed_store(&words[..active], mask, stack);
        for (xi, &s) in x.iter_mut().zip(symbols) {
            *xi = table.code(s as usize, u64::from(*xi)) as u32;
        }
        self.pos += mask.count() as usize;
        Ok(mask)
    }
}

fn check_container(c: &StreamContainer) -> Result<()> {
    if c.variant != VARIANT || !c.variant.single_renorm(&c.table) {
        return Err(Error::LaneVariantUnsupported);
    }
    if c.lanes() == 0 || c.lanes() > MAX_LANES {
        return Err(Error::InvalidLaneCount(c.lanes()));
    }
    Ok(())
}

/// Encodes `msg` with the lane encoder. Produces the same container as
/// [`crate::interleave::encode_interleaved`] with the word16 variant.
pub fn encode_lanes_full(msg: &[u8], table: &SymbolTable, lanes: usize) -> Result<StreamContainer> {
    if lanes == 0 || lanes > MAX_LANES {
        return Err(Error::InvalidLaneCount(lanes));
    }
    VARIANT.check_table(table)?;
    let mut set = LaneSet::new(lanes)?;
    let mut stack = Vec::with_capacity(msg.len() / 2);
    let full = msg.len() / lanes * lanes;
    if full < msg.len() {
        set.encode_step(table, &msg[full..], &mut stack)?;
    }
    for round in msg[..full].rchunks_exact(lanes) {
        set.encode_step(table, round, &mut stack)?;
    }
    stack.reverse();
    Ok(StreamContainer {
        variant: VARIANT,
        table: table.clone(),
        message_length: msg.len() as u64,
        states: set.states().to_vec(),
        payload: stack,
    })
}

/// Stepwise lane decoder over a container, one group step per call.
#[derive(Debug, Clone)]
pub struct LaneDecoder<'a> {
    container: &'a StreamContainer,
    set: LaneSet,
    decoded: usize,
}

impl<'a> LaneDecoder<'a> {
    pub fn new(container: &'a StreamContainer) -> Result<Self> {
        check_container(container)?;
        if let Some(&bad) = container.states.iter().find(|&&x| !VARIANT.contains(x)) {
            return Err(Error::Malformed(format!("lane state {bad} outside normalized interval")));
        }
        Ok(Self {
            container,
            set: LaneSet::with_states(&container.states, 0)?,
            decoded: 0,
        })
    }

    pub fn lane_set(&self) -> &LaneSet {
        &self.set
    }

    pub fn decoded(&self) -> usize {
        self.decoded
    }

    /// Decodes the next group (a full round, or the partial tail) into `out`,
    /// returning how many symbols were written.
    pub fn step(&mut self, out: &mut [u8]) -> Result<usize> {
        let remaining = self.container.message_length as usize - self.decoded;
        let active = remaining.min(self.set.lanes());
        self.set
            .decode_step(&self.container.table, &self.container.payload, &mut out[..active])?;
        self.decoded += active;
        Ok(active)
    }

    pub fn is_done(&self) -> bool {
        self.decoded as u64 == self.container.message_length
    }

    pub fn finish(self) -> Result<usize> {
        if self.set.states().iter().any(|&x| x != VARIANT.lower_bound()) {
            return Err(Error::Malformed("decoder did not return to the initial lane states".into()));
        }
        let trailing = self.container.payload.len() - self.set.position();
        if trailing > 0 {
            log::warn!("trailing garbage: {trailing} digits after the last symbol");
        }
        Ok(trailing)
    }
}

/// Decodes a word16 container with the lane decoder.
pub fn decode_lanes_full(c: &StreamContainer) -> Result<Vec<u8>> {
    check_container(c)?;
    let len = usize::try_from(c.message_length)
        .map_err(|_| Error::Malformed("message length exceeds address space".into()))?;
    let mut dec = LaneDecoder::new(c)?;
    // Each group step of a non-degenerate table consumes state information;
    // bound the allocation the same way the serial decoder does.
    let carried_bits = (c.payload.len() as u64 * 16).saturating_add(32 * c.lanes() as u64);
    if c.message_length > carried_bits.saturating_mul(u64::from(c.table.total()))
        && c.table.freqs().iter().all(|&f| f < c.table.total())
    {
        return Err(Error::Truncated);
    }
    let mut out = vec![0u8; len];
    let lanes = c.lanes();
    for group in out.chunks_mut(lanes) {
        dec.step(group)?;
    }
    dec.finish()?;
    Ok(out)
}
