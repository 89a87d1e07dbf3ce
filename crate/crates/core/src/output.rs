//! Report formatting shared by the library exporters and the CLI.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Decimal with 17 significant digits; round-trips every `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Writes `contents` next to `path` and renames it into place, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// `# key: value` lines that prefix every CSV export.
pub fn csv_preamble(meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str("# ");
        out.push_str(k);
        out.push_str(": ");
        out.push_str(&v.replace('\n', " "));
        out.push('\n');
    }
    out
}
