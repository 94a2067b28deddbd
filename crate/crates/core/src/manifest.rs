//! Run manifests: flat `key=value` text recording the command, every
//! resolved parameter, and SHA-256 digests of inputs and outputs. A
//! manifest can be fed back through `--config` to replay the run.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use sha2::{Digest, Sha256};

pub const TOOL_NAME: &str = "gaitsvm";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub seed: Option<u64>,
    /// `(flag, value)` in the order they were resolved. Repeated flags
    /// appear once per value.
    pub params: Vec<(String, String)>,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, flag: &str, value: impl ToString) -> &mut Self {
        self.params.push((flag.to_string(), value.to_string()));
        self
    }

    pub fn input(&mut self, path: &Path) -> io::Result<&mut Self> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.display().to_string(), digest));
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> io::Result<&mut Self> {
        let digest = sha256_file(path)?;
        self.outputs.push((path.display().to_string(), digest));
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool={TOOL_NAME}");
        let _ = writeln!(s, "version={TOOL_VERSION}");
        let _ = writeln!(s, "command={}", self.command);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed={seed}");
        }
        for (k, v) in &self.params {
            let _ = writeln!(s, "param.{k}={v}");
        }
        for (p, d) in &self.inputs {
            let _ = writeln!(s, "input.sha256.{p}={d}");
        }
        for (p, d) in &self.outputs {
            let _ = writeln!(s, "output.sha256.{p}={d}");
        }
        s
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_text())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Config entries as `(flag, value)` pairs. Accepts `param.<flag>=value`
/// and bare `<flag>=value`; blank lines, `#` comments and the manifest's
/// bookkeeping keys are skipped, as are exact repeats.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = key.trim();
        let flag = match key.strip_prefix("param.") {
            Some(f) => f,
            None if matches!(key, "tool" | "version" | "command") || key.contains('.') => continue,
            None => key,
        };
        if flag.is_empty() || flag == "config" {
            continue;
        }
        let entry = (flag.to_string(), value.trim().to_string());
        if !out.contains(&entry) {
            out.push(entry);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_text_round_trips_through_config() {
        let mut m = RunManifest::new("synth");
        m.seed = Some(7);
        m.param("cycles", 10).param("seed", 7).param("out-dir", "data");
        m.outputs.push(("data/x.csv".into(), "00".into()));
        let text = m.to_text();
        assert!(text.starts_with("tool=gaitsvm\nversion="));
        assert!(text.contains("command=synth\nseed=7\nparam.cycles=10\n"));
        let cfg = parse_config(&text).unwrap();
        let expected: Vec<(String, String)> = [("seed", "7"), ("cycles", "10"), ("out-dir", "data")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        assert_eq!(cfg, expected);
    }

    #[test]
    fn config_skips_bookkeeping() {
        let cfg = parse_config("# c\n\ncommand=train\nparam.c=2\nk=5\ninput.sha256.a=ff\nconfig=x\n").unwrap();
        assert_eq!(cfg, vec![("c".into(), "2".into()), ("k".into(), "5".into())]);
        assert!(parse_config("novalue").is_err());
    }
}
