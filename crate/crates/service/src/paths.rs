use std::io::ErrorKind;
use std::path::{Component, Path, PathBuf};

use crate::error::ApiError;

/// Rejects anything but a plain relative path.
fn relative(raw: &str) -> Result<&Path, ApiError> {
    if raw.is_empty() {
        return Err(ApiError::bad_request("empty path"));
    }
    let p = Path::new(raw);
    for c in p.components() {
        match c {
            Component::Normal(_) | Component::CurDir => {}
            _ => return Err(ApiError::forbidden(format!("`{raw}` must be a relative path inside the notebook root"))),
        }
    }
    Ok(p)
}

fn inside(root: &Path, canonical: &Path, raw: &str) -> Result<(), ApiError> {
    if canonical.starts_with(root) {
        Ok(())
    } else {
        Err(ApiError::forbidden(format!("`{raw}` resolves outside the notebook root")))
    }
}

/// Resolves an existing file under `root` (already canonical).
pub fn resolve_existing(root: &Path, raw: &str) -> Result<PathBuf, ApiError> {
    let rel = relative(raw)?;
    let canonical = match root.join(rel).canonicalize() {
        Ok(c) => c,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(ApiError::not_found("notebook_not_found", format!("no file `{raw}` under the notebook root")))
        }
        Err(e) => return Err(e.into()),
    };
    inside(root, &canonical, raw)?;
    if !canonical.is_file() {
        return Err(ApiError::not_found("notebook_not_found", format!("`{raw}` is not a file")));
    }
    Ok(canonical)
}

/// Resolves a file to be written under `root`. Its parent directory must exist.
pub fn resolve_new(root: &Path, raw: &str) -> Result<PathBuf, ApiError> {
    let rel = relative(raw)?;
    let joined = root.join(rel);
    let name = joined
        .file_name()
        .ok_or_else(|| ApiError::unprocessable("bad_path", format!("`{raw}` does not name a file")))?
        .to_owned();
    let parent = joined.parent().unwrap_or(root);
    let parent = parent
        .canonicalize()
        .map_err(|_| ApiError::unprocessable("bad_path", format!("the directory of `{raw}` does not exist")))?;
    inside(root, &parent, raw)?;
    let target = parent.join(name);
    if let Ok(existing) = target.canonicalize() {
        inside(root, &existing, raw)?;
        if existing.is_dir() {
            return Err(ApiError::unprocessable("bad_path", format!("`{raw}` is a directory")));
        }
    }
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traversal_is_forbidden() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().canonicalize().unwrap();
        std::fs::write(root.join("a.ipynb"), "{}").unwrap();
        assert!(resolve_existing(&root, "a.ipynb").is_ok());
        assert!(resolve_existing(&root, "./a.ipynb").is_ok());
        for bad in ["../a.ipynb", "x/../../a.ipynb", "/etc/passwd"] {
            assert_eq!(resolve_existing(&root, bad).unwrap_err().status, 403, "{bad}");
            assert_eq!(resolve_new(&root, bad).unwrap_err().status, 403, "{bad}");
        }
        assert_eq!(resolve_existing(&root, "missing.ipynb").unwrap_err().status, 404);
        assert_eq!(resolve_new(&root, "nodir/card.md").unwrap_err().status, 422);
        assert!(resolve_new(&root, "card.md").is_ok());
    }

    #[cfg(unix)]
    #[test]
    fn symlink_escape_is_forbidden() {
        let outside = tempfile::tempdir().unwrap();
        std::fs::write(outside.path().join("secret.ipynb"), "{}").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().canonicalize().unwrap();
        std::os::unix::fs::symlink(outside.path().join("secret.ipynb"), root.join("link.ipynb")).unwrap();
        std::os::unix::fs::symlink(outside.path(), root.join("out")).unwrap();
        assert_eq!(resolve_existing(&root, "link.ipynb").unwrap_err().status, 403);
        assert_eq!(resolve_new(&root, "out/card.md").unwrap_err().status, 403);
        assert_eq!(resolve_new(&root, "link.ipynb").unwrap_err().status, 403);
    }
}
