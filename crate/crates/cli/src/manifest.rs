//! The JSON run manifest echoed on stdout after every successful run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub result: Value,
    #[serde(skip)]
    started: Option<Instant>,
}

impl Manifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            seed: None,
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
            result: Value::Null,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self, result: Value) {
        self.result = result;
        self.wall_time_s = self.started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        println!("{}", serde_json::to_string_pretty(&self).expect("manifest serializes"));
    }
}
