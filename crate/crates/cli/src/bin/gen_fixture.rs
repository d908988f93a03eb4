//! Regenerates the checked-in synthetic fixture under `fixtures/`.

use std::fs;
use std::path::Path;

use mainstreamlab::fixture::{generate, FIXTURE_SEED};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir)?;
    let fixture = generate(FIXTURE_SEED);
    fs::write(dir.join("users.tsv"), fixture.users_tsv)?;
    fs::write(dir.join("events.tsv"), fixture.events_tsv)?;
    println!("wrote {}", dir.display());
    Ok(())
}
