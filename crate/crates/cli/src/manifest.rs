use fpl_core::numerics::quad::stats;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct QuadratureStats {
    pub evaluations: u64,
    pub max_depth_hits: u64,
}

/// Provenance of one command run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub quadrature: QuadratureStats,
}

/// Collects the manifest while a command runs.
pub struct Recorder {
    command: String,
    config: BTreeMap<String, String>,
    outputs: Vec<String>,
    start: Instant,
    base: stats::Snapshot,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Recorder {
            command: command.to_string(),
            config: BTreeMap::new(),
            outputs: vec![],
            start: Instant::now(),
            base: stats::snapshot(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(self) -> RunManifest {
        let now = stats::snapshot();
        RunManifest {
            command: self.command,
            config: self.config,
            outputs: self.outputs,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            quadrature: QuadratureStats {
                evaluations: now.evaluations - self.base.evaluations,
                max_depth_hits: now.depth_hits - self.base.depth_hits,
            },
        }
    }
}

/// Where the manifest goes: explicit path, next to the output, or stderr.
pub fn manifest_path(explicit: Option<&Path>, out: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        out.map(|o| {
            let mut name = o.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        })
    })
}

/// Full round-trip formatting of a float list.
pub fn floats(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_the_output() {
        assert_eq!(manifest_path(None, Some(Path::new("run/a.csv"))), Some(PathBuf::from("run/a.csv.manifest.json")));
        assert_eq!(manifest_path(Some(Path::new("m.json")), Some(Path::new("a.csv"))), Some(PathBuf::from("m.json")));
        assert_eq!(manifest_path(None, None), None);
    }

    #[test]
    fn floats_round_trip() {
        let xs = [0.1, 1.0 / 3.0, 40.0];
        let back: Vec<f64> = floats(&xs).split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, xs);
    }

    #[test]
    fn recorder_counts_only_its_own_work() {
        let mut rec = Recorder::new("kernel");
        rec.set("t", 5);
        rec.output(Path::new("x.csv"));
        let m = rec.finish();
        assert_eq!(m.command, "kernel");
        assert_eq!(m.config["t"], "5");
        assert_eq!(m.outputs, vec!["x.csv".to_string()]);
    }
}
