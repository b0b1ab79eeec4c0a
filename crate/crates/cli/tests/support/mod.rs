//! Fixture treebanks, configs and binary invocation for CLI tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagmark_core::corpus::write_conllu;

#[path = "../../../core/tests/oracles/mod.rs"]
pub mod oracles;

pub fn exe() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_tagmark"))
}

/// Writes a synthetic UD-style treebank directory and returns its path.
pub fn write_treebank(root: &Path, name: &str, seed: u64, sizes: [usize; 3]) -> PathBuf {
    let dir = root.join(format!("UD_{name}"));
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (split, n) in ["train", "dev", "test"].into_iter().zip(sizes) {
        let sentences = oracles::synthetic_corpus(&mut rng, n);
        let mut bytes = Vec::new();
        write_conllu(&mut bytes, &sentences).unwrap();
        std::fs::write(dir.join(format!("xx_fixture-ud-{split}.conllu")), bytes).unwrap();
    }
    dir
}

pub fn toml_path(path: &Path) -> String {
    format!("{:?}", path.display().to_string())
}

/// Config with the given languages (code, treebank dir) and raw tagger tables.
pub fn write_config(
    root: &Path,
    languages: &[(&str, &Path)],
    metrics: &str,
    taggers: &str,
) -> PathBuf {
    let mut text = format!("output = \"out\"\nmetrics = {metrics}\n");
    for (code, path) in languages {
        text += &format!("[languages.{code}]\npath = {}\n", toml_path(path));
    }
    text += taggers;
    let path = root.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub const BUILTINS: &str = "[[taggers]]\nkind = \"unigram\"\n[[taggers]]\nkind = \"hmm\"\n\
                            [[taggers]]\nkind = \"tnt\"\n[[taggers]]\nkind = \"brill\"\n";

pub fn tagmark(args: &[&str]) -> Output {
    Command::new(exe())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn code(output: &Output) -> i32 {
    output.status.code().unwrap_or(-1)
}
