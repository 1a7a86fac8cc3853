// One binary for every integration suite; see the note in Cargo.toml.

mod arith;
mod cli;
mod coding;
mod construct;
mod dynamics;
mod fourier;
mod nil;
mod oracle;
