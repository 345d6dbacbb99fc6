//! Writes the demonstration corpora under `configs/data/`.
//!
//! `cargo run -p hof-cli --example write_toy_corpus`

fn main() {
    let dir = std::path::Path::new("configs/data");
    std::fs::create_dir_all(dir).expect("create configs/data");
    hof_cli::toy::write_toy_corpus(&dir.join("toy.csv"), 0..64).expect("write toy.csv");
    hof_cli::toy::write_toy_corpus(&dir.join("toy_test.csv"), 64..96).expect("write toy_test.csv");
}
