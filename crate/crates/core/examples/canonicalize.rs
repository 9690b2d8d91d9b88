//! Hashtag cleaning and reading a posts file.
//!
//!     cargo run --example canonicalize

use migrant_attachment::corpus::{load_posts, write_posts, Canonicalizer};
use migrant_attachment::synth::{generate, PopulationSpec};

fn main() -> migrant_attachment::Result<()> {
    let canon = Canonicalizer::default();
    for raw in ["#Pizza", "#FOOT,ball", "  #Roma/ ", "#x", "#;", "CAFÉ"] {
        match canon.canonicalize(raw) {
            Some(t) => println!("{raw:>12} -> {t}"),
            None => println!("{raw:>12} -> (rejected)"),
        }
    }

    let corpus = generate(&PopulationSpec {
        n_users: 200,
        ..Default::default()
    })?;
    let path = std::env::temp_dir().join("mattach-example-posts.jsonl");
    write_posts(&path, &corpus.posts)?;
    let load = load_posts(&path)?;
    println!("read {} posts from {}: {:?}", load.posts.len(), path.display(), load.stats);
    Ok(())
}
