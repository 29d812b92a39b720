use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Writes every file to a temporary sibling first and renames only once all
/// of them are on disk, so a failed run leaves no finished-looking output.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let pid = std::process::id();
    let mut staged = Vec::with_capacity(files.len());
    for (name, body) in files {
        let tmp = dir.join(format!(".{name}.tmp-{pid}"));
        if let Err(e) = fs::write(&tmp, body) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest)?;
        written.push(dest);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let files = vec![
            ("a.csv".to_string(), "x\n".to_string()),
            ("b.json".to_string(), "{}".to_string()),
        ];
        let written = write_all(&out, &files).unwrap();
        assert_eq!(written.len(), 2);
        let names: Vec<String> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert!(names.iter().all(|n| !n.starts_with('.')));
        assert_eq!(fs::read_to_string(out.join("a.csv")).unwrap(), "x\n");
    }
}
