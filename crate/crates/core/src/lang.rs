//! Extension-based language detection and file-type buckets.

use std::path::Path;

use serde::{Deserialize, Serialize};

/// Coarse bucket used by graph statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileCategory {
    Source,
    Documentation,
    Other,
}

const SOURCE: &[(&str, &str)] = &[
    ("py", "Python"),
    ("pyi", "Python"),
    ("rs", "Rust"),
    ("js", "JavaScript"),
    ("mjs", "JavaScript"),
    ("cjs", "JavaScript"),
    ("jsx", "JavaScript"),
    ("ts", "TypeScript"),
    ("tsx", "TypeScript"),
    ("java", "Java"),
    ("kt", "Kotlin"),
    ("kts", "Kotlin"),
    ("go", "Go"),
    ("c", "C"),
    ("h", "C"),
    ("cc", "C++"),
    ("cpp", "C++"),
    ("cxx", "C++"),
    ("hpp", "C++"),
    ("cs", "C#"),
    ("rb", "Ruby"),
    ("php", "PHP"),
    ("swift", "Swift"),
    ("scala", "Scala"),
    ("sh", "Shell"),
    ("bash", "Shell"),
    ("sql", "SQL"),
];

const DOCUMENTATION: &[(&str, &str)] = &[
    ("md", "Markdown"),
    ("markdown", "Markdown"),
    ("rst", "reStructuredText"),
    ("txt", "Text"),
    ("adoc", "AsciiDoc"),
    ("html", "HTML"),
    ("htm", "HTML"),
];

const OTHER: &[(&str, &str)] = &[
    ("toml", "TOML"),
    ("yaml", "YAML"),
    ("yml", "YAML"),
    ("json", "JSON"),
    ("ini", "INI"),
    ("cfg", "INI"),
    ("xml", "XML"),
    ("css", "CSS"),
    ("env", "Env"),
];

fn extension(path: &str) -> Option<String> {
    Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

fn lookup(table: &[(&str, &'static str)], ext: &str) -> Option<&'static str> {
    table.iter().find(|(e, _)| *e == ext).map(|(_, l)| *l)
}

/// Language name for a repository path, by extension. Unknown extensions map
/// to `"Other"` so every File node carries a language.
pub fn language_for_path(path: &str) -> &'static str {
    let file_name = path.rsplit('/').next().unwrap_or(path);
    if file_name.eq_ignore_ascii_case("readme") || file_name.eq_ignore_ascii_case("license") {
        return "Text";
    }
    let Some(ext) = extension(path) else {
        return "Other";
    };
    lookup(SOURCE, &ext)
        .or_else(|| lookup(DOCUMENTATION, &ext))
        .or_else(|| lookup(OTHER, &ext))
        .unwrap_or("Other")
}

pub fn category_for_path(path: &str) -> FileCategory {
    let file_name = path.rsplit('/').next().unwrap_or(path);
    if file_name.eq_ignore_ascii_case("readme") || file_name.eq_ignore_ascii_case("license") {
        return FileCategory::Documentation;
    }
    match extension(path) {
        Some(ext) if lookup(SOURCE, &ext).is_some() => FileCategory::Source,
        Some(ext) if lookup(DOCUMENTATION, &ext).is_some() => FileCategory::Documentation,
        _ => FileCategory::Other,
    }
}

pub fn is_source_path(path: &str) -> bool {
    category_for_path(path) == FileCategory::Source
}
