//! Output files tagged with the hash of the manifest that produced them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Writes CSV and JSON files into one directory. CSV files start with a
/// `# manifest_sha256=<hash>` comment line; JSON files wrap their payload as
/// `{"manifest_sha256": ..., "data": ...}`.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    manifest_sha256: &'a str,
    data: &'a T,
}

impl Artifacts {
    pub fn create(dir: &Path, hash: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), hash: hash.to_string(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Every file written so far, in write order.
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> std::io::Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# manifest_sha256={}", self.hash)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut s = serde_json::to_string_pretty(&Tagged { manifest_sha256: &self.hash, data })?;
        s.push('\n');
        fs::write(&path, s)?;
        self.files.push(path.clone());
        Ok(path)
    }
}

/// Shortest round-trip decimal form, so repeated runs write identical bytes.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_carry_the_hash() {
        let dir = std::env::temp_dir().join(format!("romforge-artifacts-{}", std::process::id()));
        let mut a = Artifacts::create(&dir, "abc123").unwrap();
        let p = a.csv("t.csv", &["x", "y"], vec![vec![num(1.0), num(0.5)]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "# manifest_sha256=abc123\nx,y\n1e0,5e-1\n");
        let j = a.json("t.json", &vec![1, 2]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(j).unwrap()).unwrap();
        assert_eq!(v["manifest_sha256"], "abc123");
        assert_eq!(a.files().len(), 2);
        fs::remove_dir_all(dir).unwrap();
    }
}
