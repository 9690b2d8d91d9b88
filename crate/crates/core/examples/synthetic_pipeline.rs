//! The whole staged pipeline on a generated corpus, as the CLI runs it.
//!
//!     cargo run --release --example synthetic_pipeline [OUT_DIR]

use migrant_attachment::pipeline::{Command, RunConfig};

fn main() -> migrant_attachment::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("mattach-example"));
    let mut config = RunConfig {
        out,
        replicates: 3,
        ..Default::default()
    };
    config.synth.n_users = 2000;
    config.synth.migrant_fraction = 0.2;

    for cmd in std::iter::once(Command::Synth).chain(Command::CHAIN) {
        for path in cmd.run(&config)? {
            println!("{}", path.display());
        }
    }
    let tests = std::fs::read_to_string(config.artifact("tests.csv"))?;
    println!("\n{tests}");
    Ok(())
}
