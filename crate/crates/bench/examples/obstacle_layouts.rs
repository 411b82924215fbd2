//! Regenerates the bundled obstacle-avoidance cases.
//!
//! `cargo run -p alspg-bench --example obstacle_layouts -- crates/bench/fixtures/obstacle_cars`
use std::path::PathBuf;

use alspg_bench::layouts::{case_toml, crossings, layouts};

fn main() -> std::io::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "obstacle_cars".into());
    std::fs::create_dir_all(&dir)?;
    for (i, (seed, rects)) in layouts(5).into_iter().enumerate() {
        let path = dir.join(format!("case{}.toml", i + 1));
        std::fs::write(&path, case_toml(i + 1, seed, &rects))?;
        println!("{}: seed {seed}, {} obstacles on the straight path", path.display(), crossings(&rects));
    }
    Ok(())
}
