//! Argument resolution (algebras, element specs, parameter documents,
//! `--config` expansion) and deterministic output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use conekit::affine_params::{AffineParameterSet, ParamsDocument};
use conekit::jordan::{make_algebra, Algebra, AlgebraKind, Element, ElementRepr};
use conekit::simulate::Record;
use serde::Serialize;

/// Failure classes, mapped to exit codes 2 and 1.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input or configuration.
    Usage(String),
    /// The operation ran and failed.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<conekit::Error> for CliError {
    fn from(e: conekit::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `kind:size` with kind one of sym, herm, spin.
pub fn parse_algebra(spec: &str) -> CliResult<Algebra> {
    let (kind, size) = spec.split_once(':').ok_or_else(|| usage(format!("algebra `{spec}` is not kind:size")))?;
    let kind = match kind {
        "sym" => AlgebraKind::SymMatrix,
        "herm" => AlgebraKind::HermComplex,
        "spin" => AlgebraKind::SpinFactor,
        other => return Err(usage(format!("unknown algebra kind `{other}` (expected sym, herm or spin)"))),
    };
    let size = size.parse().map_err(|_| usage(format!("algebra size `{size}` is not an integer")))?;
    make_algebra(kind, size).map_err(|e| usage(e.to_string()))
}

/// Parses `identity | zero | file:<path> | coords:[...]`.
///
/// A file holds either a JSON coordinate array or an `{algebra, coords}` record.
pub fn parse_element(spec: &str, a: Algebra) -> CliResult<Element> {
    let from_coords = |v: Vec<f64>| Element::from_slice(a, &v).map_err(|e| usage(format!("`{spec}`: {e}")));
    if spec == "identity" {
        Ok(Element::identity(a))
    } else if spec == "zero" {
        Ok(Element::zero(a))
    } else if let Some(list) = spec.strip_prefix("coords:") {
        let v: Vec<f64> = serde_json::from_str(list).map_err(|e| usage(format!("`{spec}`: {e}")))?;
        from_coords(v)
    } else if let Some(path) = spec.strip_prefix("file:") {
        let text = read(Path::new(path))?;
        if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
            return from_coords(v);
        }
        let r: ElementRepr = parse_json(&text, path)?;
        if r.algebra != a {
            return Err(usage(format!("{path}: element lives in {} but {a} is required", r.algebra)));
        }
        from_coords(r.coords)
    } else {
        Err(usage(format!("element `{spec}` is not identity, zero, file:<path> or coords:[...]")))
    }
}

pub fn parse_record(spec: &str) -> CliResult<Record> {
    match spec {
        "all" => Ok(Record::All),
        "final" => Ok(Record::Final),
        s => match s.strip_prefix("stride:").and_then(|k| k.parse::<usize>().ok()) {
            Some(k) if k > 0 => Ok(Record::Stride(k)),
            _ => Err(usage(format!("record `{spec}` is not all, final or stride:<k>"))),
        },
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// JSON parsing with the failing field path and line/column in the message.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        usage(format!(
            "{origin}: line {}, column {}, field `{}`: {inner}",
            inner.line(),
            inner.column(),
            e.path()
        ))
    })
}

pub fn load_params(path: &Path) -> CliResult<(ParamsDocument, AffineParameterSet)> {
    let origin = path.display().to_string();
    let doc: ParamsDocument = parse_json(&read(path)?, &origin)?;
    let p = doc.to_params().map_err(|e| usage(format!("{origin}: {e}")))?;
    Ok((doc, p))
}

/// Expands `--config <path>`: the document's fields become flags placed
/// before the command-line flags, so that the latter win.
pub fn expand_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    let prog = it.next().unwrap_or_else(|| "conekit".into());
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(PathBuf::from(it.next().ok_or_else(|| usage("--config needs a path"))?));
        } else if let Some(p) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        let mut out = vec![prog];
        out.extend(rest);
        return Ok(out);
    };
    let origin = path.display().to_string();
    let doc: serde_json::Map<String, serde_json::Value> = parse_json(&read(&path)?, &origin)?;

    let has_command = rest.first().is_some_and(|a| !a.to_string_lossy().starts_with('-'));
    let command = if has_command {
        rest.remove(0).to_string_lossy().into_owned()
    } else {
        match doc.get("command") {
            Some(serde_json::Value::String(c)) => c.clone(),
            _ => return Err(usage(format!("{origin}: no command given on the command line or in field `command`"))),
        }
    };
    let mut out: Vec<OsString> = vec![prog, command.into()];
    let positional_given = rest.first().is_some_and(|a| !a.to_string_lossy().starts_with('-'));
    if let Some(kind) = doc.get("kind").and_then(|k| k.as_str()) {
        if !positional_given {
            out.push(kind.into());
        }
    }
    for (key, value) in &doc {
        if key == "command" || key == "kind" {
            continue;
        }
        let text = match value {
            serde_json::Value::Null | serde_json::Value::Bool(false) => continue,
            serde_json::Value::Bool(true) => {
                out.push(format!("--{key}").into());
                continue;
            }
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                if parts.is_empty() {
                    continue;
                }
                parts.join(",")
            }
            serde_json::Value::Object(_) => {
                return Err(usage(format!("{origin}: field `{key}` must be a scalar or an array")));
            }
        };
        // `--key=value` keeps values such as `-0.5,1` from reading as flags.
        out.push(format!("--{key}={text}").into());
    }
    out.extend(rest);
    Ok(out)
}

/// Shortest round-trip formatting; exponent form for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn push_row(buf: &mut String, fields: impl IntoIterator<Item = String>) {
    let fields: Vec<String> = fields.into_iter().collect();
    let _ = writeln!(buf, "{}", fields.join(","));
}

pub fn coord_header(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Run manifest: resolved configuration, versions and a summary.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub summary: serde_json::Value,
}

fn write_file(path: &Path, data: &str) -> CliResult<()> {
    std::fs::write(path, data).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the data to `out` (or stdout) and the manifest next to it (or to stderr).
pub fn emit(out: Option<&Path>, data: &str, manifest: &Manifest) -> CliResult<()> {
    let m = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    match out {
        Some(path) => {
            write_file(path, data)?;
            write_file(&manifest_path(path), &(m + "\n"))
        }
        None => {
            print!("{data}");
            eprintln!("{m}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_specs() {
        assert_eq!(parse_algebra("sym:3").unwrap().dim(), 6);
        assert_eq!(parse_algebra("spin:4").unwrap().rank(), 2);
        assert!(matches!(parse_algebra("sym3"), Err(CliError::Usage(_))));
        assert!(matches!(parse_algebra("quux:2"), Err(CliError::Usage(_))));
        assert!(matches!(parse_algebra("sym:0"), Err(CliError::Usage(_))));
    }

    #[test]
    fn element_specs() {
        let a = parse_algebra("sym:2").unwrap();
        assert_eq!(parse_element("identity", a).unwrap(), Element::identity(a));
        assert_eq!(parse_element("zero", a).unwrap(), Element::zero(a));
        assert_eq!(parse_element("coords:[1, 2, 0.5]", a).unwrap().coords().as_slice(), &[1.0, 2.0, 0.5]);
        assert!(matches!(parse_element("coords:[1, 2]", a), Err(CliError::Usage(_))));
        assert!(matches!(parse_element("eye", a), Err(CliError::Usage(_))));
    }

    #[test]
    fn record_specs() {
        assert_eq!(parse_record("stride:5").unwrap(), Record::Stride(5));
        assert!(parse_record("stride:0").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 0.5, -3.25, 1e-12, 123456.789, 1e20, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1e-12), "1e-12");
    }

    #[test]
    fn config_expansion_puts_file_flags_first() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        std::fs::write(&cfg, r#"{"command":"laplace","delta":2,"t":0.5,"u":"identity","out":null}"#).unwrap();
        let argv: Vec<OsString> =
            ["conekit", "--config", cfg.to_str().unwrap(), "--t", "1"].iter().map(OsString::from).collect();
        let got: Vec<String> =
            expand_config(argv).unwrap().into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(got, ["conekit", "laplace", "--delta=2", "--t=0.5", "--u=identity", "--t", "1"]);
    }
}
