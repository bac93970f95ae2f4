use std::path::Path;

use iec_core::StreamContainer;

use crate::{read, Failure};

pub fn run(input: &Path) -> Result<(), Failure> {
    let bytes = read(input)?;
    let c = StreamContainer::from_bytes(&bytes)?;
    let t = &c.table;
    let m = f64::from(t.total());
    let used: Vec<(usize, u32)> = t.freqs().iter().copied().enumerate().filter(|&(_, f)| f > 0).collect();
    let entropy: f64 = used
        .iter()
        .map(|&(_, f)| {
            let p = f64::from(f) / m;
            -p * p.log2()
        })
        .sum();
    let payload_bits = c.payload_len_bytes() as f64 * 8.0;
    let tag = c.variant.tag().map_or_else(|| "custom".into(), |v| v.to_string());

    println!("file_bytes               {}", bytes.len());
    println!("variant                  {tag}");
    println!("lanes                    {}", c.lanes());
    println!("message_length           {}", c.message_length);
    println!("header_bytes             {}", c.header_len());
    println!("payload_bytes            {}", c.payload_len_bytes());
    println!("scale_bits               {}", t.scale_bits());
    println!("alphabet_size            {}", t.alphabet_size());
    println!("used_symbols             {}", used.len());
    if let (Some(min), Some(max)) = (used.iter().map(|u| u.1).min(), used.iter().map(|u| u.1).max()) {
        println!("freq_min                 {min}");
        println!("freq_max                 {max}");
    }
    println!("entropy_bits_per_symbol  {entropy:.6}");
    if c.message_length > 0 {
        println!("payload_bits_per_symbol  {:.6}", payload_bits / c.message_length as f64);
    }
    let states: Vec<String> = c.states.iter().map(u32::to_string).collect();
    println!("states                   {}", states.join(" "));
    Ok(())
}
