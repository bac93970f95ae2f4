//! Generic streaming ANS.
//!
//! A coder is a pair of mutually inverse functions `C(s, x)` / `D(x)` plus a
//! normalized interval `I = [L, b*L)`. The encoder walks the message back to
//! front and writes digits back to front; the decoder runs forward. Both keep
//! the state inside `I` at every symbol boundary, so encoder and decoder pass
//! through the same states and perform digit I/O at the same points.
//!
//! Everything here works for any [`CoderSpec`]; the concrete rANS coder lives
//! in [`crate::rans`], and [`ToyCoder`] is a two-symbol reference coder small
//! enough to trace by hand.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// A pluggable coding-function pair together with its interval parameters.
///
/// `code` must be strictly increasing in `x` for a fixed symbol, and
/// `decode(code(s, x)) == (s, x)` must hold for all states of interest.
pub trait CoderSpec {
    fn alphabet_size(&self) -> usize;

    /// Lower bound `L` of the normalized interval.
    fn lower_bound(&self) -> u32;

    /// Digit radix `b`.
    fn radix(&self) -> u32;

    /// `C(s, x)`. Evaluated in 64 bits because the encoder probes it on states
    /// that have not been reduced yet.
    fn code(&self, symbol: usize, x: u64) -> u64;

    /// `D(x)`.
    fn decode(&self, x: u32) -> (usize, u32);

    /// One past the top of the normalized interval, `b*L`.
    fn upper_bound(&self) -> u64 {
        u64::from(self.radix()) * u64::from(self.lower_bound())
    }

    fn in_interval(&self, x: u64) -> bool {
        x >= u64::from(self.lower_bound()) && x < self.upper_bound()
    }
}

/// Maximum number of digits a single encode step may emit: `ceil(log_b(b*L))`.
pub fn max_digits_per_symbol<S: CoderSpec + ?Sized>(spec: &S) -> u32 {
    let b = u64::from(spec.radix());
    let top = spec.upper_bound();
    let mut digits = 0;
    let mut reach = 1u64;
    while reach < top {
        reach = reach.saturating_mul(b);
        digits += 1;
    }
    digits
}

/// Encoder-side digit buffer. Digits are appended in emission order, which is
/// the reverse of the order the decoder reads them in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DigitSink {
    emitted: Vec<u32>,
}

impl DigitSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn emit(&mut self, digit: u32) {
        self.emitted.push(digit);
    }

    pub fn len(&self) -> usize {
        self.emitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitted.is_empty()
    }

    /// Digits in emission order.
    pub fn emitted(&self) -> &[u32] {
        &self.emitted
    }

    /// Reverses the emission stack into decoder read order.
    pub fn into_read_order(mut self) -> Vec<u32> {
        self.emitted.reverse();
        self.emitted
    }
}

/// Decoder-side forward cursor over digits in read order.
#[derive(Debug, Clone)]
pub struct DigitSource<'a> {
    digits: &'a [u32],
    pos: usize,
}

impl<'a> DigitSource<'a> {
    pub fn new(digits: &'a [u32]) -> Self {
        Self { digits, pos: 0 }
    }

    pub fn read(&mut self) -> Result<u32> {
        let d = *self.digits.get(self.pos).ok_or(Error::Truncated)?;
        self.pos += 1;
        Ok(d)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.digits.len() - self.pos
    }
}

fn check_state<S: CoderSpec + ?Sized>(spec: &S, x: u32) -> Result<()> {
    if spec.in_interval(u64::from(x)) {
        Ok(())
    } else {
        Err(Error::StateOutOfRange {
            state: u64::from(x),
            lower: u64::from(spec.lower_bound()),
            upper: spec.upper_bound(),
        })
    }
}

/// Encodes one symbol: emits `x mod b` and divides until `C(s, x)` lands in
/// the normalized interval, then applies `C`.
pub fn encode_symbol<S: CoderSpec + ?Sized>(
    spec: &S,
    symbol: usize,
    x: u32,
    sink: &mut DigitSink,
) -> Result<u32> {
    check_state(spec, x)?;
    if symbol >= spec.alphabet_size() {
        return Err(Error::SymbolOutOfRange {
            symbol,
            alphabet_size: spec.alphabet_size(),
        });
    }
    let b = spec.radix();
    let mut x = x;
    for _ in 0..=max_digits_per_symbol(spec) {
        let next = spec.code(symbol, u64::from(x));
        if spec.in_interval(next) {
            return Ok(next as u32);
        }
        sink.emit(x % b);
        x /= b;
    }
    Err(Error::NonBUnique {
        symbol,
        state: u64::from(x),
    })
}

/// Decodes one symbol: applies `D`, then shifts digits in until the state is
/// back in the normalized interval.
pub fn decode_symbol<S: CoderSpec + ?Sized>(
    spec: &S,
    x: u32,
    source: &mut DigitSource<'_>,
) -> Result<(usize, u32)> {
    check_state(spec, x)?;
    let (symbol, mut x) = spec.decode(x);
    let lower = u64::from(spec.lower_bound());
    let b = u64::from(spec.radix());
    let mut wide = u64::from(x);
    while wide < lower {
        wide = wide * b + u64::from(source.read()?);
    }
    x = wide as u32;
    Ok((symbol, x))
}

/// Encodes `msg` back to front starting from `x0`. Returns the final encoder
/// state (which the decoder starts from) and the digits in read order.
pub fn encode_message<S: CoderSpec + ?Sized>(
    spec: &S,
    msg: &[usize],
    x0: u32,
) -> Result<(u32, Vec<u32>)> {
    check_state(spec, x0)?;
    let mut sink = DigitSink::new();
    let mut x = x0;
    for &s in msg.iter().rev() {
        x = encode_symbol(spec, s, x, &mut sink)?;
    }
    Ok((x, sink.into_read_order()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub symbols: Vec<usize>,
    /// Final decoder state, equal to the encoder's initial state on success.
    pub state: u32,
    /// Digits left unread after `len` symbols. Nonzero means padding or garbage.
    pub trailing_digits: usize,
}

/// Decodes exactly `len` symbols starting from `final_state`.
pub fn decode_message<S: CoderSpec + ?Sized>(
    spec: &S,
    final_state: u32,
    stream: &[u32],
    len: usize,
) -> Result<Decoded> {
    let mut source = DigitSource::new(stream);
    let mut x = final_state;
    let mut symbols = Vec::with_capacity(len);
    for _ in 0..len {
        let (s, next) = decode_symbol(spec, x, &mut source)?;
        symbols.push(s);
        x = next;
    }
    let trailing_digits = source.remaining();
    if trailing_digits > 0 {
        log::warn!("trailing garbage: {trailing_digits} digits left after decoding {len} symbols");
    }
    Ok(Decoded {
        symbols,
        state: x,
        trailing_digits,
    })
}

// First x in [lo, hi) with pred(x) true, for a predicate monotone false -> true.
fn partition_point(mut lo: u64, mut hi: u64, pred: impl Fn(u64) -> bool) -> u64 {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// The precursor set `I_s = { x : C(s, x) in I }`, searched over `[0, b*L)`.
///
/// Relies on `C` being strictly increasing in `x`, which makes the set an
/// interval whose ends can be found by bisection.
pub fn precursor_set<S: CoderSpec + ?Sized>(spec: &S, symbol: usize) -> Result<RangeInclusive<u32>> {
    let top = spec.upper_bound();
    let lower = u64::from(spec.lower_bound());
    let first = partition_point(0, top, |x| spec.code(symbol, x) >= lower);
    if first == top || spec.code(symbol, first) >= top {
        return Err(Error::UnencodableSymbol(symbol));
    }
    let past = partition_point(first, top, |x| spec.code(symbol, x) >= top);
    Ok(first as u32..=(past - 1) as u32)
}

/// True iff `set == {k, .., b*k - 1}` for some `k >= 1`.
pub fn check_b_unique(set: &RangeInclusive<u32>, b: u32) -> bool {
    let k = u64::from(*set.start());
    k >= 1 && u64::from(*set.end()) + 1 == u64::from(b) * k
}

/// Checks every symbol's precursor set for b-uniqueness. Returns the first
/// offending symbol as an error.
pub fn verify_b_unique<S: CoderSpec + ?Sized>(spec: &S) -> Result<()> {
    for s in 0..spec.alphabet_size() {
        let set = precursor_set(spec, s)?;
        if !check_b_unique(&set, spec.radix()) {
            return Err(Error::NonBUnique {
                symbol: s,
                state: u64::from(*set.start()),
            });
        }
    }
    Ok(())
}

/// Two-symbol reference coder with `p(a) = 1/4`, `p(b) = 3/4`, `L = 16`, `b = 2`.
///
/// `C(a, x) = 4x`, `C(b, x) = 4*floor(x/3) + (x mod 3) + 1`. Symbol `a` is 0
/// and `b` is 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ToyCoder;

impl ToyCoder {
    pub const A: usize = 0;
    pub const B: usize = 1;

    /// Maps `'a'`/`'b'` to symbol indices.
    pub fn symbols(text: &str) -> Vec<usize> {
        text.bytes()
            .map(|c| if c == b'a' { Self::A } else { Self::B })
            .collect()
    }

    pub fn text(symbols: &[usize]) -> String {
        symbols
            .iter()
            .map(|&s| if s == Self::A { 'a' } else { 'b' })
            .collect()
    }
}

impl CoderSpec for ToyCoder {
    fn alphabet_size(&self) -> usize {
        2
    }

    fn lower_bound(&self) -> u32 {
        16
    }

    fn radix(&self) -> u32 {
        2
    }

    fn code(&self, symbol: usize, x: u64) -> u64 {
        if symbol == Self::A {
            4 * x
        } else {
            4 * (x / 3) + x % 3 + 1
        }
    }

    fn decode(&self, x: u32) -> (usize, u32) {
        if x.is_multiple_of(4) {
            (Self::A, x / 4)
        } else {
            (Self::B, 3 * (x / 4) + x % 4 - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `C(s, x) = x` on a single symbol.
    struct Identity;

    impl CoderSpec for Identity {
        fn alphabet_size(&self) -> usize {
            1
        }
        fn lower_bound(&self) -> u32 {
            8
        }
        fn radix(&self) -> u32 {
            4
        }
        fn code(&self, _: usize, x: u64) -> u64 {
            x
        }
        fn decode(&self, x: u32) -> (usize, u32) {
            (0, x)
        }
    }

    /// Not b-unique: `C(s, x) = 3x` with `b = 2` has precursor set {6..10}.
    struct Tripler;

    impl CoderSpec for Tripler {
        fn alphabet_size(&self) -> usize {
            1
        }
        fn lower_bound(&self) -> u32 {
            16
        }
        fn radix(&self) -> u32 {
            2
        }
        fn code(&self, _: usize, x: u64) -> u64 {
            3 * x
        }
        fn decode(&self, x: u32) -> (usize, u32) {
            (0, x / 3)
        }
    }

    fn encode_one(s: usize, x: u32) -> (u32, Vec<u32>) {
        let mut sink = DigitSink::new();
        let x = encode_symbol(&ToyCoder, s, x, &mut sink).unwrap();
        (x, sink.emitted().to_vec())
    }

    #[test]
    fn toy_encode_steps() {
        assert_eq!(encode_one(ToyCoder::A, 16), (16, vec![0, 0]));
        assert_eq!(encode_one(ToyCoder::B, 16), (22, vec![]));
        assert_eq!(encode_one(ToyCoder::B, 28), (19, vec![0]));
    }

    #[test]
    fn toy_decode_steps() {
        let mut src = DigitSource::new(&[0]);
        assert_eq!(decode_symbol(&ToyCoder, 19, &mut src).unwrap(), (ToyCoder::B, 28));
        assert_eq!(src.position(), 1);

        let mut src = DigitSource::new(&[]);
        assert_eq!(decode_symbol(&ToyCoder, 22, &mut src).unwrap(), (ToyCoder::B, 16));

        let mut src = DigitSource::new(&[1, 0]);
        assert_eq!(decode_symbol(&ToyCoder, 28, &mut src).unwrap(), (ToyCoder::A, 30));
        assert_eq!(src.remaining(), 0);
    }

    #[test]
    fn toy_messages() {
        let msg = ToyCoder::symbols("babba");
        assert_eq!(encode_message(&ToyCoder, &msg, 16).unwrap(), (19, vec![0, 1, 0, 0, 0]));
        assert_eq!(encode_message(&ToyCoder, &[], 16).unwrap(), (16, vec![]));
        assert_eq!(
            encode_message(&ToyCoder, &ToyCoder::symbols("a"), 16).unwrap(),
            (16, vec![0, 0])
        );

        let out = decode_message(&ToyCoder, 19, &[0, 1, 0, 0, 0], 5).unwrap();
        assert_eq!(ToyCoder::text(&out.symbols), "babba");
        assert_eq!(out.state, 16);
        assert_eq!(out.trailing_digits, 0);

        assert!(decode_message(&ToyCoder, 16, &[], 0).unwrap().symbols.is_empty());
        let out = decode_message(&ToyCoder, 16, &[0, 0], 1).unwrap();
        assert_eq!(ToyCoder::text(&out.symbols), "a");
    }

    #[test]
    fn truncated_and_trailing() {
        assert_eq!(
            decode_message(&ToyCoder, 19, &[0, 1, 0], 5),
            Err(Error::Truncated)
        );
        let out = decode_message(&ToyCoder, 19, &[0, 1, 0, 0, 0, 1, 1], 5).unwrap();
        assert_eq!(out.trailing_digits, 2);
        assert_eq!(ToyCoder::text(&out.symbols), "babba");
    }

    #[test]
    fn rejects_out_of_interval_state_and_symbol() {
        let mut sink = DigitSink::new();
        assert!(matches!(
            encode_symbol(&ToyCoder, 0, 32, &mut sink),
            Err(Error::StateOutOfRange { .. })
        ));
        assert!(matches!(
            encode_symbol(&ToyCoder, 2, 16, &mut sink),
            Err(Error::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn precursor_sets() {
        assert_eq!(precursor_set(&ToyCoder, ToyCoder::A).unwrap(), 4..=7);
        assert_eq!(precursor_set(&ToyCoder, ToyCoder::B).unwrap(), 12..=23);
        assert_eq!(precursor_set(&Identity, 0).unwrap(), 8..=31);
        assert!(verify_b_unique(&ToyCoder).is_ok());
        assert!(verify_b_unique(&Identity).is_ok());
    }

    #[test]
    fn b_uniqueness() {
        assert!(check_b_unique(&(4..=7), 2));
        assert!(check_b_unique(&(12..=23), 2));
        assert!(!check_b_unique(&(4..=6), 2));
        assert!(!check_b_unique(&(0..=0), 2));
    }

    #[test]
    fn non_b_unique_coder_is_detected() {
        assert_eq!(precursor_set(&Tripler, 0).unwrap(), 6..=10);
        assert!(verify_b_unique(&Tripler).is_err());
        // From 22, 3*22 = 66 and 3*11 = 33 both overshoot; 3*5 = 15 undershoots.
        let mut sink = DigitSink::new();
        assert!(matches!(
            encode_symbol(&Tripler, 0, 22, &mut sink),
            Err(Error::NonBUnique { .. })
        ));
    }

    #[test]
    fn toy_growth_factors() {
        for x in 16u64..4096 {
            assert_eq!(ToyCoder.code(ToyCoder::A, x), 4 * x);
            let ratio = ToyCoder.code(ToyCoder::B, x) as f64 / x as f64;
            assert!((ratio - 4.0 / 3.0).abs() <= 1.0 / x as f64 + 1e-12, "x={x} ratio={ratio}");
        }
    }

    #[test]
    fn max_digits() {
        assert_eq!(max_digits_per_symbol(&ToyCoder), 5);
        assert_eq!(max_digits_per_symbol(&Identity), 3);
    }
}
