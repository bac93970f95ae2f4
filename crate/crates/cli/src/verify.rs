use std::path::Path;

use iec_core::interleave::{InterleavedDecoder, MAGIC};
use iec_core::lanes::{LaneDecoder, MAX_LANES};
use iec_core::{RenormVariant, StreamContainer};

use crate::{compress, read, Failure};

const LANE_COUNTS: [usize; 4] = [1, 2, 4, 8];

pub fn run(input: &Path, scale_bits: u32) -> Result<(), Failure> {
    let data = read(input)?;
    if data.starts_with(&MAGIC) {
        let c = StreamContainer::from_bytes(&data)?;
        let out = lockstep(&c)?;
        println!("container ok: {} symbols, {} lanes", out.len(), c.lanes());
        return Ok(());
    }
    for variant in [RenormVariant::WORD16, RenormVariant::BYTE8] {
        for lanes in LANE_COUNTS {
            let c = compress(&data, lanes, variant, scale_bits)?;
            let c = StreamContainer::from_bytes(&c.to_bytes()?)?;
            let out = lockstep(&c)?;
            if out != data {
                return Err(Failure::Verify(format!("{variant:?} N={lanes}: decoded output differs")));
            }
            let modes = if lane_capable(&c) { "serial+lanes" } else { "serial" };
            println!("{:<6} N={lanes}: {modes} ok", tag(variant));
        }
    }
    Ok(())
}

fn tag(v: RenormVariant) -> String {
    v.tag().map_or_else(|| "custom".into(), |t| t.to_string())
}

fn lane_capable(c: &StreamContainer) -> bool {
    c.variant == RenormVariant::WORD16 && c.lanes() <= MAX_LANES
}

fn fail(e: iec_core::Error) -> Failure {
    Failure::Verify(e.to_string())
}

/// Decodes with the serial decoder and, where possible, the lane decoder,
/// comparing states and read positions after every lane group.
fn lockstep(c: &StreamContainer) -> Result<Vec<u8>, Failure> {
    let mut serial = InterleavedDecoder::new(c).map_err(fail)?;
    let mut out = Vec::with_capacity(c.message_length.min(1 << 30) as usize);
    if !lane_capable(c) {
        while !serial.is_done() {
            out.push(serial.next_symbol().map_err(fail)?);
        }
        serial.finish().map_err(fail)?;
        return Ok(out);
    }
    let mut lanes = LaneDecoder::new(c).map_err(fail)?;
    let mut group = [0u8; MAX_LANES];
    while !lanes.is_done() {
        let n = lanes.step(&mut group).map_err(fail)?;
        for &g in &group[..n] {
            let s = serial.next_symbol().map_err(fail)?;
            if s != g {
                return Err(Failure::Verify(format!("decoders disagree at symbol {}", out.len())));
            }
            out.push(s);
        }
        let set = lanes.lane_set();
        if set.states() != serial.states() || set.position() != serial.position() {
            return Err(Failure::Verify(format!("decoder states diverge after {} symbols", out.len())));
        }
    }
    lanes.finish().map_err(fail)?;
    serial.finish().map_err(fail)?;
    Ok(out)
}
