//! Inputs for the decoding benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const WORDS: &[&str] = &[
    "the", "of", "and", "to", "a", "in", "that", "it", "was", "he", "for", "on", "with", "as", "his",
    "at", "by", "had", "from", "her", "which", "she", "but", "not", "they", "were", "this", "be",
    "all", "have", "one", "their", "there", "when", "would", "upon", "said", "into", "could",
    "time", "little", "before", "nothing", "shepherd", "valley", "morning", "between", "himself",
    "remembered", "afterwards", "countenance", "Gabriel", "Bathsheba", "Weatherbury",
];

/// Deterministic English-like text: skewed word frequencies, punctuation and
/// line breaks around 65 columns.
pub fn text_like(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len + 16);
    let mut col = 0;
    while out.len() < len {
        let r: f64 = rng.random();
        let word = WORDS[(r * r * r * WORDS.len() as f64) as usize];
        out.extend_from_slice(word.as_bytes());
        col += word.len() + 1;
        if rng.random_bool(0.08) {
            out.push(if rng.random_bool(0.5) { b',' } else { b'.' });
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

/// I.i.d. bytes with a geometric-like distribution over `alphabet` symbols.
pub fn skewed_bytes(len: usize, alphabet: u8, seed: u64) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let r: f64 = rng.random();
            (r * r * f64::from(alphabet)) as u8
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        assert_eq!(text_like(10_000, 1), text_like(10_000, 1));
        assert_eq!(text_like(10_000, 1).len(), 10_000);
        assert!(skewed_bytes(1000, 16, 2).iter().all(|&b| b < 16));
    }
}
