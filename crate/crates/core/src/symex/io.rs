//! Seed and generated-test text formats.

use crate::exec::Valuation;

use super::{GeneratedTest, Site, SymexError};

fn bad(line: usize, message: impl Into<String>) -> SymexError {
    SymexError::Format { line, message: message.into() }
}

/// Parses `name=value,name=value`.
pub fn parse_valuation(text: &str, line: usize) -> Result<Valuation, SymexError> {
    let mut out = Valuation::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = pair.split_once('=').ok_or_else(|| bad(line, format!("expected name=value, found `{pair}`")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(bad(line, "empty input name"));
        }
        let value: i64 = value.trim().parse().map_err(|_| bad(line, format!("`{}` is not an integer", value.trim())))?;
        if out.insert(name.to_string(), value).is_some() {
            return Err(bad(line, format!("input `{name}` set twice")));
        }
    }
    Ok(out)
}

pub fn format_valuation(v: &Valuation) -> String {
    v.iter().map(|(k, x)| format!("{k}={x}")).collect::<Vec<_>>().join(",")
}

/// One seed per non-blank line; `#` starts a comment line.
pub fn parse_seeds(text: &str) -> Result<Vec<Valuation>, SymexError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_valuation(line, i + 1)?);
    }
    Ok(out)
}

pub fn format_seeds(seeds: &[Valuation]) -> String {
    seeds.iter().map(|s| format_valuation(s) + "\n").collect()
}

pub fn format_tests(tests: &[GeneratedTest]) -> String {
    let mut out = String::new();
    for t in tests {
        out.push_str(&format!("# mutant={} site={} k={}\n{}\n", t.target, t.site, t.k, format_valuation(&t.input)));
    }
    out
}

/// Reads a generated-test file. Original paths are not stored in the file
/// and come back empty.
pub fn parse_tests(text: &str) -> Result<Vec<GeneratedTest>, SymexError> {
    let mut out = Vec::new();
    let mut header: Option<(u32, Site, usize)> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut target = None;
            let mut site = None;
            let mut k = None;
            for field in rest.split_whitespace() {
                match field.split_once('=') {
                    Some(("mutant", v)) => target = v.parse().ok(),
                    Some(("site", "checkpoint")) => site = Some(Site::Checkpoint),
                    Some(("site", "terminal")) => site = Some(Site::Terminal),
                    Some(("k", v)) => k = v.parse().ok(),
                    _ => {}
                }
            }
            header = match (target, site, k) {
                (Some(t), Some(s), Some(k)) => Some((t, s, k)),
                _ => None,
            };
            continue;
        }
        let (target, site, k) = header.take().ok_or_else(|| bad(n, "test line without a `# mutant=.. site=.. k=..` header"))?;
        out.push(GeneratedTest { input: parse_valuation(line, n)?, target, site, k, original_path: Vec::new() });
    }
    Ok(out)
}
