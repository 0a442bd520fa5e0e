//! CSV and JSON artifact emission.
//!
//! Every file starts with a comment line carrying the command, the hash of
//! the resolved configuration and the seed, so artifacts are traceable to
//! their exact run. Floats are written with 17 significant digits: fixtures
//! round-trip exactly.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ResolvedConfig;

/// 17-significant-digit scientific form; round-trips any f64 exactly.
pub fn g17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// First 16 hex chars of the SHA-256 of the resolved config JSON.
pub fn config_hash(cfg: &ResolvedConfig) -> String {
    let canon = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canon.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// A CSV document with the standard header comment.
pub struct CsvDoc {
    lines: Vec<String>,
}

impl CsvDoc {
    pub fn new(cfg: &ResolvedConfig, hash: &str, columns: &str) -> Self {
        CsvDoc {
            lines: vec![
                format!(
                    "# rfic {} config_hash={hash} seed={}",
                    cfg.command.name(),
                    cfg.seed
                ),
                columns.to_string(),
            ],
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }

    /// Writes to the path, or to stdout when no path is given.
    pub fn emit(&self, path: Option<&Path>) -> anyhow::Result<()> {
        let text = self.render();
        match path {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// JSON artifact wrapper: config hash, resolved config, and the result.
#[derive(Serialize)]
struct JsonArtifact<'a, T: Serialize> {
    config_hash: &'a str,
    config: &'a ResolvedConfig,
    result: &'a T,
}

pub fn write_json<T: Serialize>(
    path: &Path,
    cfg: &ResolvedConfig,
    hash: &str,
    result: &T,
) -> anyhow::Result<()> {
    let artifact = JsonArtifact {
        config_hash: hash,
        config: cfg,
        result,
    };
    let mut text = serde_json::to_string_pretty(&artifact)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, Command, FileConfig};
    use rfic_core::disorder::DisorderLaw;

    fn cfg() -> ResolvedConfig {
        let file = FileConfig {
            law: Some(DisorderLaw::gaussian(1.0).unwrap()),
            j: Some(2.0),
            n: Some(1e4),
            replicas: Some(2),
            seed: Some(5),
            ..FileConfig::default()
        };
        resolve(Command::Fe, file).unwrap().0
    }

    #[test]
    fn g17_round_trips() {
        for x in [
            1.0,
            -0.1,
            std::f64::consts::PI,
            1.2345678901234567e-300,
            6.02e23,
        ] {
            let s = g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&cfg());
        let b = config_hash(&cfg());
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        let mut other = cfg();
        other.seed = 6;
        assert_ne!(a, config_hash(&other));
    }

    #[test]
    fn csv_header_embeds_hash_and_seed() {
        let cfg = cfg();
        let hash = config_hash(&cfg);
        let mut doc = CsvDoc::new(&cfg, &hash, "a,b");
        doc.row(&[g17(1.0), g17(2.0)]);
        let text = doc.render();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# rfic fe config_hash="));
        assert!(header.contains("seed=5"));
        assert_eq!(lines.next().unwrap(), "a,b");
    }
}
