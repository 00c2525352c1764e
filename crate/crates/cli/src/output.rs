//! Output files that either appear complete or not at all.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

fn stage_in(dir: &Path, contents: &str) -> io::Result<NamedTempFile> {
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    Ok(tmp)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    stage_in(dir, contents)?
        .persist(path)
        .map_err(|e| e.error)?;
    Ok(())
}

/// A set of files for one directory, published together by [`commit`].
/// Dropping an uncommitted set deletes the staged files, and the directory
/// too if this set created it.
///
/// [`commit`]: OutputSet::commit
pub struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    staged: Vec<(NamedTempFile, PathBuf)>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> io::Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            staged: Vec::new(),
            committed: false,
        })
    }

    pub fn add(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let tmp = stage_in(&self.dir, contents)?;
        self.staged.push((tmp, self.dir.join(name)));
        Ok(())
    }

    /// Renames every staged file into place. If one rename fails, the files
    /// already published by this call are removed again.
    pub fn commit(mut self) -> io::Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (tmp, target) in std::mem::take(&mut self.staged) {
            if let Err(e) = tmp.persist(&target) {
                for path in &done {
                    let _ = fs::remove_file(path);
                }
                return Err(e.error);
            }
            done.push(target);
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        self.staged.clear();
        if !self.committed && self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
