//! Staged report output.
//!
//! Files are collected in a hidden staging directory next to the target and
//! only moved into place once every file has been written, so a failing run
//! leaves the target untouched.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

use crate::{CliError, CliResult};

pub struct OutputTree {
    out: PathBuf,
    staging: TempDir,
    pending: BTreeMap<PathBuf, Vec<u8>>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl OutputTree {
    pub fn new(out: &Path) -> CliResult<Self> {
        if out.exists() && !out.is_dir() {
            return Err(CliError::Usage(format!(
                "{} exists and is not a directory",
                out.display()
            )));
        }
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(io(&parent))?;
        let staging = tempfile::Builder::new()
            .prefix(".tokstat-staging-")
            .tempdir_in(&parent)
            .map_err(io(&parent))?;
        Ok(OutputTree {
            out: out.to_path_buf(),
            staging,
            pending: BTreeMap::new(),
        })
    }

    /// Directory that is moved into place on commit; callers may write into it directly.
    pub fn staging_dir(&self) -> &Path {
        self.staging.path()
    }

    pub fn add(&mut self, rel: impl Into<PathBuf>, contents: Vec<u8>) {
        self.pending.insert(rel.into(), contents);
    }

    /// Writes pending files, then moves everything staged into the target.
    pub fn commit(mut self) -> CliResult<Vec<PathBuf>> {
        for (rel, contents) in std::mem::take(&mut self.pending) {
            let path = self.staging.path().join(&rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(io(dir))?;
            }
            fs::write(&path, contents).map_err(io(&path))?;
        }
        let mut staged = Vec::new();
        collect_files(self.staging.path(), Path::new(""), &mut staged)?;
        staged.sort();
        fs::create_dir_all(&self.out).map_err(io(&self.out))?;
        for rel in &staged {
            let to = self.out.join(rel);
            if let Some(dir) = to.parent() {
                fs::create_dir_all(dir).map_err(io(dir))?;
            }
            let from = self.staging.path().join(rel);
            fs::rename(&from, &to).map_err(io(&to))?;
        }
        Ok(staged)
    }
}

fn collect_files(root: &Path, rel: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let dir = root.join(rel);
    for entry in fs::read_dir(&dir).map_err(io(&dir))? {
        let entry = entry.map_err(io(&dir))?;
        let rel = rel.join(entry.file_name());
        if entry.file_type().map_err(io(&dir))?.is_dir() {
            collect_files(root, &rel, out)?;
        } else {
            out.push(rel);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_written_without_commit() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("report");
        {
            let mut tree = OutputTree::new(&out).unwrap();
            tree.add("a.json", b"{}".to_vec());
        }
        assert!(!out.exists());
        // staging directory cleaned up
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
    }

    #[test]
    fn commit_moves_nested_files() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("report");
        let mut tree = OutputTree::new(&out).unwrap();
        tree.add("x/y/z.csv", b"1\n".to_vec());
        fs::write(tree.staging_dir().join("direct.txt"), "d").unwrap();
        let files = tree.commit().unwrap();
        assert_eq!(
            files,
            vec![PathBuf::from("direct.txt"), PathBuf::from("x/y/z.csv")]
        );
        assert_eq!(fs::read_to_string(out.join("x/y/z.csv")).unwrap(), "1\n");
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    }
}
