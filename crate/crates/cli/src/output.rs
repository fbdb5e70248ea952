//! File output and human-readable summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chipfire::{Site, Trace, Value};

/// `println!` that ignores a closed stdout, so piping into `head` is quiet.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Writes `bytes` to a sibling temporary file, then renames it into place so
/// readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_report(path: Option<&Path>, report: &serde_json::Value) -> std::io::Result<()> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

pub fn write_trace(path: Option<&Path>, trace: &Trace) -> std::io::Result<()> {
    if let Some(path) = path {
        write_atomic(path, trace.to_jsonl().as_bytes())?;
    }
    Ok(())
}

/// Site-keyed maps become JSON objects with string keys.
pub fn site_map<V: serde::Serialize>(map: &BTreeMap<Site, V>) -> serde_json::Value {
    serde_json::Value::Object(
        map.iter()
            .map(|(k, v)| {
                (
                    k.to_string(),
                    serde_json::to_value(v).expect("serializable"),
                )
            })
            .collect(),
    )
}

pub fn print_values(title: &str, values: &BTreeMap<Site, Vec<Value>>) {
    say!("{title}:");
    for (site, vals) in values {
        let list: Vec<String> = vals.iter().map(Value::to_string).collect();
        say!("  {site:>4}: {}", list.join(" "));
    }
}

pub fn print_counts(title: &str, counts: &BTreeMap<Site, u64>) {
    let line: Vec<String> = counts.iter().map(|(s, c)| format!("{s}:{c}")).collect();
    say!("{title}: {}", line.join(" "));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_keys_become_strings() {
        let map = BTreeMap::from([(-1, 2u64), (3, 0)]);
        assert_eq!(site_map(&map), serde_json::json!({"-1": 2, "3": 0}));
    }

    #[test]
    fn atomic_write_leaves_no_partial_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
