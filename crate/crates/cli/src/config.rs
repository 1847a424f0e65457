//! Flat JSON config files. Keys are the long flag names; a flag given on
//! the command line wins over the same key in the file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

fn object(v: Value, what: &str) -> Result<Map<String, Value>> {
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::usage(format!("{what} must be a JSON object"))),
    }
}

/// Overlays the explicitly given `flags` on the contents of `file`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, file: Option<&Path>) -> Result<T> {
    let Some(path) = file else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed: Value = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut base = object(parsed, "config file")?;
    // Reject unknown keys and ill-typed values before overlaying.
    serde_json::from_value::<T>(Value::Object(base.clone())).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let given = object(serde_json::to_value(&flags).map_err(|e| CliError::usage(e.to_string()))?, "flags")?;
    for (k, v) in given {
        if !(v.is_null() || v == Value::Bool(false)) {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use std::io::Write;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
    struct Args {
        seed: Option<u64>,
        grid_sizes: Option<Vec<f64>>,
        list: bool,
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flags_override_file() {
        let f = file(r#"{"seed": 3, "grid-sizes": [5, 10], "list": true}"#);
        let merged = merge(Args { seed: Some(9), ..Default::default() }, Some(f.path())).unwrap();
        assert_eq!(merged, Args { seed: Some(9), grid_sizes: Some(vec![5.0, 10.0]), list: true });
    }

    #[test]
    fn no_file_keeps_flags() {
        let a = Args { seed: Some(1), ..Default::default() };
        assert_eq!(merge(Args { seed: Some(1), ..Default::default() }, None).unwrap(), a);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(matches!(merge(Args::default(), Some(file(r#"{"sed": 3}"#).path())), Err(CliError::Usage(_))));
        assert!(matches!(merge(Args::default(), Some(file("[1]").path())), Err(CliError::Usage(_))));
        assert!(matches!(merge(Args::default(), Some(Path::new("/nonexistent/cfg.json"))), Err(CliError::Io(_))));
    }
}
