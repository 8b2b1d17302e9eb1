//! Experiment config files: one JSON object per run with a top-level
//! `"command"` field, an optional `"seed"` and `"out"`, and the parameters of
//! that command.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug)]
pub struct Loaded<P> {
    pub command: String,
    pub seed: u64,
    pub out: PathBuf,
    pub params: P,
    /// Effective config after flag overrides and defaults, minus `out`.
    pub effective: Value,
    pub config_hash: String,
    /// Directory relative input paths are resolved against.
    pub base_dir: PathBuf,
}

impl<P> Loaded<P> {
    pub fn input(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Reads `path`, checks that it is a config for `command`, applies the
/// overrides and parses the parameters.
pub fn load<P>(path: &Path, command: &str, overrides: Overrides) -> Result<Loaded<P>, CliError>
where
    P: DeserializeOwned + Serialize,
{
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::validation(format!(
            "{}: config must be a JSON object",
            path.display()
        )));
    };

    let found = match obj.remove("command") {
        Some(Value::String(c)) => c,
        Some(_) => return Err(field_error(path, "command", "must be a string")),
        None => return Err(field_error(path, "command", "is missing")),
    };
    if found != command {
        return Err(field_error(
            path,
            "command",
            &format!("is {found:?} but the subcommand is {command:?}"),
        ));
    }
    let seed = match obj.remove("seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| field_error(path, "seed", "must be a non-negative integer"))?,
    };
    let seed = overrides.seed.unwrap_or(seed);
    let out = match obj.remove("out") {
        None => PathBuf::from(DEFAULT_OUT),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(_) => return Err(field_error(path, "out", "must be a string")),
    };
    let out = overrides.out.unwrap_or(out);

    let params: P = serde_json::from_value(Value::Object(obj))
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;

    let mut effective = Map::new();
    effective.insert("command".into(), Value::String(found.clone()));
    effective.insert("seed".into(), Value::from(seed));
    effective.insert(
        "params".into(),
        serde_json::to_value(&params).map_err(|e| CliError::runtime(e.to_string()))?,
    );
    let effective = Value::Object(effective);
    let config_hash = config_hash(&effective);

    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded {
        command: found,
        seed,
        out,
        params,
        effective,
        config_hash,
        base_dir,
    })
}

fn field_error(path: &Path, field: &str, what: &str) -> CliError {
    CliError::validation(format!("{}: field `{field}` {what}", path.display()))
}

/// SHA-256 of the compact JSON text with object keys in sorted order.
pub fn config_hash(effective: &Value) -> String {
    let text = serde_json::to_string(effective).expect("JSON values always serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Params {
        n: usize,
        #[serde(default)]
        r: usize,
    }

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("c.json");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn none() -> Overrides {
        Overrides {
            seed: None,
            out: None,
        }
    }

    #[test]
    fn hash_ignores_key_order_and_out() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(
            dir.path(),
            r#"{"command":"x","seed":3,"n":2,"r":1,"out":"a"}"#,
        );
        let a: Loaded<Params> = load(&a, "x", none()).unwrap();
        let b = write(
            dir.path(),
            r#"{"r":1,"n":2,"command":"x","seed":3,"out":"b"}"#,
        );
        let b: Loaded<Params> = load(&b, "x", none()).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn defaults_and_overrides_enter_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"command":"x","n":2}"#);
        let a: Loaded<Params> = load(&p, "x", none()).unwrap();
        assert_eq!(a.seed, 0);
        assert_eq!(a.out, PathBuf::from(DEFAULT_OUT));
        let b: Loaded<Params> = load(
            &p,
            "x",
            Overrides {
                seed: Some(9),
                out: Some("elsewhere".into()),
            },
        )
        .unwrap();
        assert_eq!(b.seed, 9);
        assert_eq!(b.out, PathBuf::from("elsewhere"));
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.effective["params"]["r"], 0);
    }

    #[test]
    fn errors_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        for (text, needle) in [
            (r#"{"n":2}"#, "command"),
            (r#"{"command":"y","n":2}"#, "command"),
            (r#"{"command":"x","seed":-1,"n":2}"#, "seed"),
            (r#"{"command":"x","n":2,"bogus":1}"#, "bogus"),
            (r#"{"command":"x"}"#, "n"),
            (r#"[1]"#, "object"),
        ] {
            let p = write(dir.path(), text);
            let err = load::<Params>(&p, "x", none()).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(needle), "{err} lacks {needle}");
        }
        let err = load::<Params>(&dir.path().join("missing.json"), "x", none()).unwrap_err();
        assert!(err.to_string().contains("missing.json"));
    }
}
