use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use iec_core::rans::DEFAULT_SCALE_BITS;
use iec_core::{RenormVariant, StreamContainer, SymbolTable, VariantTag};

mod bench;
mod inspect;
mod verify;

/// Interleaved rANS compressor for order-0 byte streams.
#[derive(Debug, Parser)]
#[command(name = "iec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a file into an IEC1 container.
    Encode {
        input: PathBuf,
        output: PathBuf,
        /// Number of interleaved coders.
        #[arg(long, default_value_t = 8)]
        lanes: usize,
        #[arg(long, default_value_t = VariantTag::Word16)]
        variant: VariantTag,
        /// log2 of the quantized frequency total.
        #[arg(long, default_value_t = DEFAULT_SCALE_BITS)]
        scale_bits: u32,
    },
    /// Decompress an IEC1 container.
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Serial)]
        mode: Mode,
    },
    /// Check a container, or round-trip a plain file at 1, 2, 4 and 8 lanes,
    /// with the serial and lane decoders stepped in lockstep.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SCALE_BITS)]
        scale_bits: u32,
    },
    /// Time serial, 2-way and 8-lane decoding.
    Bench {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Timed repetitions per mode; the best is reported.
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_SCALE_BITS)]
        scale_bits: u32,
    },
    /// Print a container's header, table statistics and entropy estimate.
    Inspect { input: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Serial,
    Lanes,
}

#[derive(Debug)]
pub enum Failure {
    Io { path: PathBuf, source: std::io::Error },
    Format(iec_core::Error),
    Verify(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Format(_) => 2,
            Failure::Io { .. } => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::Format(e) => write!(f, "{e}"),
            Failure::Verify(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl From<iec_core::Error> for Failure {
    fn from(e: iec_core::Error) -> Self {
        Failure::Format(e)
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|source| Failure::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, data: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, data).map_err(|source| Failure::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn compress(data: &[u8], lanes: usize, variant: RenormVariant, scale_bits: u32) -> Result<StreamContainer, Failure> {
    // A lone symbol owning all 2^16 slots cannot be serialized; it codes in
    // zero bits at any scale, so drop one bit.
    let distinct = data.iter().any(|&b| b != data[0]);
    let scale_bits = if distinct { scale_bits } else { scale_bits.min(15) };
    let table = if data.is_empty() {
        SymbolTable::new(vec![1 << scale_bits], scale_bits)?
    } else {
        SymbolTable::from_bytes(data, scale_bits)?
    };
    Ok(iec_core::encode_interleaved(data, &table, lanes, variant)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Encode {
            input,
            output,
            lanes,
            variant,
            scale_bits,
        } => {
            let data = read(&input)?;
            let c = compress(&data, lanes, variant.params(), scale_bits)?;
            let bytes = c.to_bytes()?;
            write(&output, &bytes)?;
            log::info!("{} -> {} bytes", data.len(), bytes.len());
            Ok(())
        }
        Command::Decode { input, output, mode } => {
            let c = StreamContainer::from_bytes(&read(&input)?)?;
            let data = match mode {
                Mode::Serial => iec_core::decode_interleaved(&c)?,
                Mode::Lanes => iec_core::decode_lanes_full(&c)?,
            };
            write(&output, &data)
        }
        Command::Verify { input, scale_bits } => verify::run(&input, scale_bits),
        Command::Bench { inputs, k, scale_bits } => bench::run(&inputs, k.max(1), scale_bits),
        Command::Inspect { input } => inspect::run(&input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
