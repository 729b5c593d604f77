//! Atomic file output. Each file is written to a temporary sibling and renamed
//! into place, so a reader never sees a half-written table.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use djtransmon::{Error, Result};

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` through `fill`; on failure leaves `name.failed` with the
    /// reason instead of a partial file.
    pub fn write(&self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        let marker = self.path(&format!("{name}.failed"));
        let attempt = (|| {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            fill(&mut w)?;
            w.flush()?;
            drop(w);
            fs::rename(&tmp, &target)?;
            Ok(())
        })();
        match attempt {
            Ok(()) => {
                let _ = fs::remove_file(&marker);
                Ok(target)
            }
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                let _ = fs::write(&marker, format!("{e}\n"));
                Err(e)
            }
        }
    }

    pub fn write_str(&self, name: &str, text: &str) -> Result<PathBuf> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }
}

/// Records a failed command in its output directory, if that directory exists.
pub fn mark_failed(dir: &Path, command: &str, err: &Error) {
    if dir.is_dir() {
        let _ = fs::write(dir.join(format!("{command}.failed")), format!("{err}\n"));
    }
}

/// Removes a stale marker left by an earlier failed run of `command`.
pub fn clear_failed(dir: &Path, command: &str) {
    let _ = fs::remove_file(dir.join(format!("{command}.failed")));
}
