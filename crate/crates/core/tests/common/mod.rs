#![allow(dead_code)]

use std::path::{Path, PathBuf};

use byzalloc::config::{Experiment, ExperimentConfig};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn bundled_configs() -> Vec<PathBuf> {
    let mut out = Vec::new();
    for case in ["case1", "case2"] {
        let dir = repo_root().join("configs").join(case);
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|x| x == "toml") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// Six thermal agents on a ring with one Byzantine agent (index 3).
pub fn thermal_ring(horizon: usize, attack: &str, algorithm: &str) -> String {
    let agents: String = [
        (0.05, 2.0, 20.0, 100.0),
        (0.08, 1.5, 10.0, 80.0),
        (0.06, 3.0, 15.0, 90.0),
        (0.07, 2.5, 5.0, 70.0),
        (0.04, 1.0, 10.0, 120.0),
        (0.09, 2.2, 0.0, 60.0),
    ]
    .iter()
    .map(|(eta, zeta, lo, hi)| {
        format!("[[agents]]\nkind = \"thermal\"\neta = {eta}\nzeta = {zeta}\nxi = 0.0\nlo = {lo}\nhi = {hi}\n\n")
    })
    .collect();
    format!(
        r#"name = "ring"
seed = 7
horizon = {horizon}

[network]
agents = 6
edges = [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0], [0, 3], [1, 4], [2, 5]]
byzantine = [3]

{agents}[demand]
kind = "gaussian"
mean = 50.0
stddev = 4.0

[attack]
{attack}

[algorithm]
{algorithm}
alpha = 1.0
beta = 2.0
theta = 0.01
"#
    )
}

pub fn experiment(toml: &str) -> Experiment {
    ExperimentConfig::from_toml(toml)
        .unwrap()
        .resolve(Path::new("."))
        .unwrap()
}

/// Splits a CSV file into its header and rows of fields without any CSV
/// library, for cross-checking the writer.
pub fn read_plain_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (header, rows)
}
