#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Writes `<dir>/<name>/<name>.content` and `.cites`.
pub fn write_dataset(dir: &Path, name: &str, content: &str, cites: &str) {
    let d = dir.join(name);
    fs::create_dir_all(&d).unwrap();
    fs::write(d.join(format!("{name}.content")), content).unwrap();
    fs::write(d.join(format!("{name}.cites")), cites).unwrap();
}

/// Three nodes on a path, two classes.
pub fn toy(dir: &Path) {
    write_dataset(
        dir,
        "toy",
        "a\t1\t0\t1\tx\nb\t0\t1\t1\ty\nc\t1\t1\t0\tx\n",
        "a\tb\nb\tc\n",
    );
}

/// Two 6-node rings joined by one edge; features lean towards the node's
/// class block.
pub fn twin(dir: &Path) {
    let mut content = String::new();
    for i in 0..12 {
        let class = i / 6;
        let mut feats = [0u8; 8];
        feats[class * 4 + i % 4] = 1;
        feats[(class * 4 + i % 4 + 1) % 8] = 1;
        if i % 5 == 0 {
            feats[((1 - class) * 4 + i % 4) % 8] = 1;
        }
        let feats: Vec<String> = feats.iter().map(|v| v.to_string()).collect();
        content += &format!("n{i}\t{}\tc{class}\n", feats.join("\t"));
    }
    let mut cites = String::new();
    for base in [0, 6] {
        for k in 0..6 {
            cites += &format!("n{}\tn{}\n", base + k, base + (k + 1) % 6);
        }
    }
    cites += "n0\tn6\n";
    write_dataset(dir, "twin", &content, &cites);
}

pub const TOY_CONFIG: &str = r#"
repeat_seeds = [0]

[dataset]
name = "toy"

[split]
per_class = 1
n_val = 0
n_test = 1

[semantic]
k = 1

[model]
variant = "gcn"

[train]
max_epochs = 1
"#;

/// `extra` is appended verbatim, so it may add tables.
pub fn twin_config(dir: &Path, variant: &str, extra: &str) -> PathBuf {
    let text = format!(
        r#"
output_dir = "runs"
repeat_seeds = [0, 1]
save_checkpoints = true

[dataset]
name = "twin"

[split]
per_class = 2
n_val = 2
n_test = 6

[semantic]
k = 3

[model]
variant = "{variant}"

[tsgcn]
rank = 3

[train]
hidden_units = 8
max_epochs = 40
patience = 10
{extra}
"#
    );
    let path = dir.join(format!("{variant}.toml").replace(['(', ')'], ""));
    fs::write(&path, text).unwrap();
    path
}

pub fn reglgcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reglgcn")).args(args).output().unwrap()
}

pub fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    out
}
