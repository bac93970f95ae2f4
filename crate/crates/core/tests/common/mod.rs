#![allow(dead_code)]

use iec_core::SymbolTable;
use rand::rngs::StdRng;
use rand::Rng;

/// Random counts over an alphabet of `1..=max_alphabet` symbols, some zero,
/// with a scale large enough to give every used symbol a slot.
pub fn random_table(rng: &mut StdRng, max_alphabet: usize, max_scale: u32) -> SymbolTable {
    let n = rng.random_range(1..=max_alphabet);
    let skew = rng.random_range(0..4u32);
    let mut counts: Vec<u64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                0
            } else {
                let c: u64 = rng.random_range(1..1000);
                c.pow(skew + 1)
            }
        })
        .collect();
    if counts.iter().all(|&c| c == 0) {
        counts[rng.random_range(0..n)] = 1;
    }
    let used = counts.iter().filter(|&&c| c > 0).count();
    let min_scale = (usize::BITS - (used - 1).leading_zeros()).max(1);
    let scale_bits = rng.random_range(min_scale..=max_scale.max(min_scale));
    SymbolTable::from_counts(&counts, scale_bits).unwrap()
}

/// I.i.d. symbols drawn from the table's own distribution.
pub fn sample(rng: &mut StdRng, table: &SymbolTable, len: usize) -> Vec<u8> {
    (0..len)
        .map(|_| table.symbol_at(rng.random_range(0..table.total())))
        .collect()
}

/// Word-salad text with a skewed word distribution.
pub fn text_like(rng: &mut StdRng, len: usize) -> Vec<u8> {
    const WORDS: &[&str] = &[
        "the", "of", "and", "to", "a", "in", "that", "it", "was", "he", "for", "on", "with", "as",
        "his", "at", "by", "had", "from", "her", "which", "she", "but", "not", "they", "were",
        "this", "be", "all", "have", "one", "their", "there", "when", "would", "upon", "said",
        "into", "could", "time", "little", "before", "nothing", "farmer", "wessex", "morning",
        "between", "himself", "remembered", "afterwards", "countenance", "Gabriel", "Bathsheba",
    ];
    let mut out = Vec::with_capacity(len + 16);
    let mut col = 0;
    while out.len() < len {
        let r: f64 = rng.random();
        let idx = ((r * r * r) * WORDS.len() as f64) as usize;
        out.extend_from_slice(WORDS[idx].as_bytes());
        col += WORDS[idx].len() + 1;
        if rng.random_bool(0.08) {
            out.extend_from_slice(if rng.random_bool(0.5) { b"," } else { b"." });
        }
        if col > 64 {
            out.push(b'\n');
            col = 0;
        } else {
            out.push(b' ');
        }
    }
    out.truncate(len);
    out
}

/// Literal transcription of the streaming ANS loops for the two-symbol toy
/// coder (`C(a,x) = 4x`, `C(b,x) = 4*floor(x/3) + x%3 + 1`, `L = 16`, `b = 2`),
/// independent of the library. Returns the final state, digits in read order
/// and the encoder's state after each symbol (starting with `x0`).
pub fn toy_encode_oracle(msg: &str, x0: u64) -> (u64, Vec<u64>, Vec<u64>) {
    let c = |s: u8, x: u64| if s == b'a' { 4 * x } else { 4 * (x / 3) + x % 3 + 1 };
    let in_i = |x: u64| (16..32).contains(&x);
    let mut x = x0;
    let mut emitted = Vec::new();
    let mut states = vec![x];
    for s in msg.bytes().rev() {
        while !in_i(c(s, x)) {
            emitted.push(x % 2);
            x /= 2;
        }
        x = c(s, x);
        states.push(x);
    }
    emitted.reverse();
    (x, emitted, states)
}

/// Decoder counterpart of [`toy_encode_oracle`]; returns the text and the
/// decoder's state after each symbol (starting with the initial state).
pub fn toy_decode_oracle(mut x: u64, digits: &[u64], len: usize) -> (String, Vec<u64>) {
    let mut pos = 0;
    let mut text = String::new();
    let mut states = vec![x];
    for _ in 0..len {
        if x.is_multiple_of(4) {
            text.push('a');
            x /= 4;
        } else {
            text.push('b');
            x = 3 * (x / 4) + x % 4 - 1;
        }
        while x < 16 {
            x = 2 * x + digits[pos];
            pos += 1;
        }
        states.push(x);
    }
    (text, states)
}
