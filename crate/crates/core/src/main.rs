use std::process::ExitCode;

use clap::Parser;
use impulse_morse::app::{main_with, Args};

fn main() -> ExitCode {
    main_with(Args::parse())
}
