use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use iec_core::{decode_interleaved, decode_lanes_full, RenormVariant, StreamContainer};

use crate::{compress, read, Failure};

struct Row {
    file: String,
    bytes: usize,
    serial: Duration,
    two_way: Duration,
    lanes8: Duration,
}

fn best_of(k: usize, c: &StreamContainer, decode: fn(&StreamContainer) -> iec_core::Result<Vec<u8>>, expect: &[u8]) -> Result<Duration, Failure> {
    // Warm-up run doubles as a correctness check.
    if decode(c)? != expect {
        return Err(Failure::Verify("benchmark decode produced wrong output".into()));
    }
    let mut best = Duration::MAX;
    for _ in 0..k {
        let t = Instant::now();
        let out = decode(c)?;
        best = best.min(t.elapsed());
        std::hint::black_box(out);
    }
    Ok(best)
}

fn mb_per_s(bytes: usize, t: Duration) -> f64 {
    bytes as f64 / (1 << 20) as f64 / t.as_secs_f64().max(1e-9)
}

fn bench_file(path: &Path, k: usize, scale_bits: u32) -> Result<Row, Failure> {
    let data = read(path)?;
    let v = RenormVariant::WORD16;
    let c1 = compress(&data, 1, v, scale_bits)?;
    let c2 = compress(&data, 2, v, scale_bits)?;
    let c8 = compress(&data, 8, v, scale_bits)?;
    Ok(Row {
        file: path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
        bytes: data.len(),
        serial: best_of(k, &c1, decode_interleaved, &data)?,
        two_way: best_of(k, &c2, decode_interleaved, &data)?,
        lanes8: best_of(k, &c8, decode_lanes_full, &data)?,
    })
}

pub fn run(inputs: &[PathBuf], k: usize, scale_bits: u32) -> Result<(), Failure> {
    let rows = inputs
        .iter()
        .map(|p| bench_file(p, k, scale_bits))
        .collect::<Result<Vec<_>, _>>()?;

    println!(
        "{:<24} {:>12} {:>12} {:>12} {:>8} {:>12} {:>8}",
        "file", "bytes", "serial MB/s", "2-way MB/s", "speedup", "8-lane MB/s", "speedup"
    );
    for r in &rows {
        let s = mb_per_s(r.bytes, r.serial);
        let two = mb_per_s(r.bytes, r.two_way);
        let eight = mb_per_s(r.bytes, r.lanes8);
        println!(
            "{:<24} {:>12} {:>12.1} {:>12.1} {:>7.2}x {:>12.1} {:>7.2}x",
            r.file,
            r.bytes,
            s,
            two,
            two / s,
            eight,
            eight / s
        );
    }
    println!();
    println!("tsv\tfile\tmode\tbytes\tbest_seconds\tmb_per_s\tspeedup");
    for r in &rows {
        for (mode, t) in [("serial", r.serial), ("2-way", r.two_way), ("8-lane", r.lanes8)] {
            println!(
                "tsv\t{}\t{mode}\t{}\t{:.6}\t{:.2}\t{:.3}",
                r.file,
                r.bytes,
                t.as_secs_f64(),
                mb_per_s(r.bytes, t),
                r.serial.as_secs_f64() / t.as_secs_f64().max(1e-9)
            );
        }
    }
    Ok(())
}
