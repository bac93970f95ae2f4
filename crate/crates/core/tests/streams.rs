mod common;

use iec_core::interleave::{encode_mixed, InterleavedDecoder};
use iec_core::lanes::LaneSet;
use iec_core::mux::{demux_decode, mux_with_flush, MuxContainer, MuxSchedule, PluggableCoder, RansStreamCoder};
use iec_core::rans::{encode_symbol_renorm, DigitCursor, decode_symbol_renorm};
use iec_core::{decode_interleaved, decode_lanes_full, encode_interleaved, Error, RenormVariant, StreamContainer, SymbolTable};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn decoder_retraces_encoder_states() {
    let mut rng = StdRng::seed_from_u64(3);
    for v in [RenormVariant::BYTE8, RenormVariant::WORD16, RenormVariant::toy()] {
        let t = if v == RenormVariant::toy() { SymbolTable::toy() } else { common::random_table(&mut rng, 100, 12) };
        let msg = common::sample(&mut rng, &t, 3000);
        let mut x = v.lower_bound();
        let mut stack = Vec::new();
        let mut enc = vec![x];
        for &s in msg.iter().rev() {
            x = encode_symbol_renorm(x, s as usize, &t, v, &mut stack).unwrap();
            enc.push(x);
        }
        stack.reverse();
        let mut cur = DigitCursor::new(&stack);
        let mut dec = vec![x];
        for &s in &msg {
            let (d, nx) = decode_symbol_renorm(x, &t, v, &mut cur).unwrap();
            assert_eq!(d, s);
            x = nx;
            dec.push(x);
        }
        enc.reverse();
        assert_eq!(dec, enc, "{v:?}");
    }
}

#[test]
fn lane_steps_match_serial_on_partial_tail() {
    let t = SymbolTable::from_counts(&[9, 1, 3, 3], 12).unwrap();
    let msg: Vec<u8> = (0..1003u32).map(|i| (i * i % 7 % 4) as u8).collect();
    let c = encode_interleaved(&msg, &t, 8, RenormVariant::WORD16).unwrap();
    let mut set = LaneSet::with_states(&c.states, 0).unwrap();
    let mut serial = InterleavedDecoder::new(&c).unwrap();
    let mut out = Vec::new();
    for group in msg.chunks(8) {
        let mut buf = vec![0u8; group.len()];
        set.decode_step(&t, &c.payload, &mut buf).unwrap();
        for _ in group {
            serial.next_symbol().unwrap();
        }
        assert_eq!(set.states(), serial.states());
        assert_eq!(set.position(), serial.position());
        out.extend(buf);
    }
    assert_eq!(out, msg);
}

#[test]
fn truncated_payloads_are_rejected() {
    let t = SymbolTable::from_counts(&[5, 1, 1, 1], 14).unwrap();
    let msg: Vec<u8> = (0..4000u32).map(|i| (i.wrapping_mul(2654435761) >> 30) as u8).collect();
    for v in [RenormVariant::BYTE8, RenormVariant::WORD16] {
        let c = encode_interleaved(&msg, &t, 4, v).unwrap();
        let bytes = c.to_bytes().unwrap();
        let cut = StreamContainer::from_bytes(&bytes[..bytes.len() - 6]).unwrap();
        assert!(matches!(decode_interleaved(&cut), Err(Error::Truncated)));
        if v == RenormVariant::WORD16 {
            assert!(matches!(decode_lanes_full(&cut), Err(Error::Truncated)));
        }
        assert!(StreamContainer::from_bytes(&bytes[..20]).is_err());
    }
}

#[test]
fn mixed_stream_of_zero_width_raws_is_the_pure_stream() {
    let t = SymbolTable::from_counts(&[1, 2, 3], 10).unwrap();
    let msg = [0u8, 1, 2, 2, 1, 0, 2, 2, 2];
    let mixed = encode_mixed(&msg, &[0; 9], |_| 0, &t, 3, RenormVariant::WORD16).unwrap();
    assert_eq!(mixed, encode_interleaved(&msg, &t, 3, RenormVariant::WORD16).unwrap());
}

fn two_rans_streams(rng: &mut StdRng, n: usize) -> (Vec<RansStreamCoder>, Vec<Vec<u32>>) {
    let tables = [
        SymbolTable::from_counts(&[40, 30, 20, 10], 12).unwrap(),
        common::random_table(rng, 64, 14),
    ];
    let msgs = tables
        .iter()
        .map(|t| common::sample(rng, t, n).into_iter().map(u32::from).collect())
        .collect();
    let coders = tables
        .into_iter()
        .map(|t| RansStreamCoder::new(t, RenormVariant::WORD16).unwrap())
        .collect();
    (coders, msgs)
}

#[test]
fn buffering_shrinks_with_flush_interval() {
    let mut rng = StdRng::seed_from_u64(11);
    let (coders, msgs) = two_rans_streams(&mut rng, 20_000);
    let dyn_coders: Vec<&dyn PluggableCoder> = coders.iter().map(|c| c as &dyn PluggableCoder).collect();
    let schedule = MuxSchedule::round_robin(&[msgs[0].len(), msgs[1].len()]);
    let mut high = Vec::new();
    for f in [64u64, 512, 4096] {
        let (c, b) = mux_with_flush(&msgs, &dyn_coders, &schedule, Some(f)).unwrap();
        assert_eq!(demux_decode(&c, &dyn_coders, &schedule).unwrap(), msgs);
        assert!(b.max_buffered <= b.bound(2).unwrap(), "F={f}");
        high.push(b.max_buffered);
    }
    assert!(high.windows(2).all(|w| w[0] < w[1]), "{high:?}");
}

#[test]
fn flushing_costs_bounded_extra_digits() {
    let mut rng = StdRng::seed_from_u64(12);
    let (coders, msgs) = two_rans_streams(&mut rng, 10_000);
    let dyn_coders: Vec<&dyn PluggableCoder> = coders.iter().map(|c| c as &dyn PluggableCoder).collect();
    let schedule = MuxSchedule::round_robin(&[msgs[0].len(), msgs[1].len()]);
    let (plain, _) = mux_with_flush(&msgs, &dyn_coders, &schedule, None).unwrap();
    for f in [100u64, 1000] {
        let (flushed, b) = mux_with_flush(&msgs, &dyn_coders, &schedule, Some(f)).unwrap();
        let per_flush = dyn_coders.iter().map(|c| c.inline_state_digits()).max().unwrap() + 1;
        assert!(flushed.payload.len() >= plain.payload.len());
        assert!(flushed.payload.len() - plain.payload.len() <= b.extra_blocks * per_flush, "F={f}");
        let back = MuxContainer::from_bytes(&flushed.to_bytes()).unwrap();
        assert_eq!(back, flushed);
    }
}

#[test]
fn random_lane_counts_round_trip_through_bytes() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..50 {
        let t = common::random_table(&mut rng, 256, 16);
        let len = rng.random_range(0..5000);
        let msg = common::sample(&mut rng, &t, len);
        let lanes = rng.random_range(1..=64);
        for v in [RenormVariant::BYTE8, RenormVariant::WORD16] {
            let c = encode_interleaved(&msg, &t, lanes, v).unwrap();
            let back = StreamContainer::from_bytes(&c.to_bytes().unwrap()).unwrap();
            assert_eq!(decode_interleaved(&back).unwrap(), msg);
        }
    }
}
