//! Python adapter backed by tree-sitter.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use tree_sitter::{Node as TsNode, Parser};

use super::adapter::{ModuleIndex, ParsedEntity, ParsedFile, ParserAdapter};
use super::skeleton::parent_dir;
use crate::graph::{EdgeKind, ImportBinding, LineSpan, NodeKind, RawRelation};
use crate::{Error, Result};

thread_local! {
    static PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PythonAdapter;

impl ParserAdapter for PythonAdapter {
    fn language(&self) -> &str {
        "Python"
    }

    fn parse(&self, content: &str, path: &str) -> Result<ParsedFile> {
        let tree = PARSER.with(|cell| {
            let mut slot = cell.borrow_mut();
            if slot.is_none() {
                let mut p = Parser::new();
                p.set_language(&tree_sitter_python::LANGUAGE.into())
                    .map_err(|e| Error::Schema(format!("python grammar: {e}")))?;
                *slot = Some(p);
            }
            slot.as_mut()
                .expect("parser initialized")
                .parse(content, None)
                .ok_or_else(|| Error::Schema(format!("{path}: parser returned no tree")))
        })?;
        let mut walker = Walker {
            src: content.as_bytes(),
            out: ParsedFile {
                path: path.to_string(),
                language: "Python".into(),
                ..ParsedFile::default()
            },
            used: HashMap::new(),
            seen_relations: HashSet::new(),
        };
        let root = tree.root_node();
        walker.out.docstring = walker.block_docstring(root);
        walker.visit(root, &Scope::Module);
        Ok(walker.out)
    }

    fn resolve_module(&self, from_path: &str, module: &str, level: u32, index: &dyn ModuleIndex) -> Option<String> {
        let rel = module.replace('.', "/");
        if level > 0 {
            let mut base = parent_dir(from_path).unwrap_or("");
            for _ in 1..level {
                if base.is_empty() {
                    return None;
                }
                base = parent_dir(base).unwrap_or("");
            }
            let join = |tail: &str| {
                if base.is_empty() {
                    tail.to_string()
                } else {
                    format!("{base}/{tail}")
                }
            };
            let candidates = if rel.is_empty() {
                vec![join("__init__.py")]
            } else {
                vec![join(&format!("{rel}.py")), join(&format!("{rel}/__init__.py"))]
            };
            return candidates.into_iter().find(|c| index.has_file(c));
        }
        if rel.is_empty() {
            return None;
        }
        for cand in [format!("{rel}.py"), format!("{rel}/__init__.py"), format!("{rel}.pyi")] {
            // A match counts only if the directory above the module path is a
            // source root, i.e. not itself inside a package.
            let best = index
                .files_with_suffix(&cand)
                .into_iter()
                .filter(|p| {
                    let prefix = p[..p.len() - cand.len()].trim_end_matches('/');
                    prefix.is_empty() || !index.has_file(&format!("{prefix}/__init__.py"))
                })
                .min_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
            if let Some(p) = best {
                return Some(p.to_string());
            }
        }
        None
    }
}

enum Scope {
    Module,
    Class(String),
    Function(String),
}

impl Scope {
    fn qualified(&self) -> Option<&str> {
        match self {
            Scope::Module => None,
            Scope::Class(q) | Scope::Function(q) => Some(q),
        }
    }
}

struct Walker<'a> {
    src: &'a [u8],
    out: ParsedFile,
    used: HashMap<String, usize>,
    seen_relations: HashSet<RawRelation>,
}

impl<'a> Walker<'a> {
    fn text(&self, node: TsNode) -> &'a str {
        node.utf8_text(self.src).unwrap_or("")
    }

    fn visit(&mut self, node: TsNode, scope: &Scope) {
        let mut cursor = node.walk();
        let children: Vec<TsNode> = node.named_children(&mut cursor).collect();
        for child in children {
            match child.kind() {
                "class_definition" => self.class(child, child, scope),
                "function_definition" => self.function(child, child, scope),
                "decorated_definition" => {
                    let mut c = child.walk();
                    let decorators: Vec<TsNode> = child
                        .named_children(&mut c)
                        .filter(|n| n.kind() == "decorator")
                        .collect();
                    for d in decorators {
                        self.visit_expr(d, scope);
                    }
                    if let Some(def) = child.child_by_field_name("definition") {
                        match def.kind() {
                            "class_definition" => self.class(def, child, scope),
                            "function_definition" => self.function(def, child, scope),
                            _ => {}
                        }
                    }
                }
                "import_statement" => self.import(child),
                "import_from_statement" => self.import_from(child),
                _ => self.visit_expr(child, scope),
            }
        }
    }

    /// Visits a non-definition subtree, recording calls.
    fn visit_expr(&mut self, node: TsNode, scope: &Scope) {
        if node.kind() == "call" {
            if let (Scope::Function(source), Some(func)) = (scope, node.child_by_field_name("function")) {
                if let Some(target) = self.dotted(func) {
                    self.relation(EdgeKind::Calls, source.clone(), target);
                }
            }
        }
        self.visit(node, scope);
    }

    fn dotted(&self, node: TsNode) -> Option<String> {
        match node.kind() {
            "identifier" => Some(self.text(node).to_string()),
            "attribute" => {
                let obj = self.dotted(node.child_by_field_name("object")?)?;
                let attr = node.child_by_field_name("attribute")?;
                Some(format!("{obj}.{}", self.text(attr)))
            }
            _ => None,
        }
    }

    fn relation(&mut self, kind: EdgeKind, source: String, target: String) {
        let rel = RawRelation { kind, source, target };
        if self.seen_relations.insert(rel.clone()) {
            self.out.relations.push(rel);
        }
    }

    fn unique_name(&mut self, qn: String) -> String {
        let n = self.used.entry(qn.clone()).or_insert(0);
        *n += 1;
        if *n == 1 {
            qn
        } else {
            format!("{qn}#{n}")
        }
    }

    fn span(node: TsNode) -> LineSpan {
        LineSpan::new(node.start_position().row as u32 + 1, node.end_position().row as u32 + 1)
    }

    fn entity(&mut self, kind: NodeKind, def: TsNode, outer: TsNode, scope: &Scope, signature: Option<String>) -> Option<String> {
        let name = self.text(def.child_by_field_name("name")?).to_string();
        let parent = scope.qualified().map(str::to_string);
        let base = match &parent {
            Some(p) => format!("{p}.{name}"),
            None => name.clone(),
        };
        let qualified_name = self.unique_name(base);
        let docstring = def
            .child_by_field_name("body")
            .and_then(|b| self.block_docstring(b))
            .or_else(|| self.leading_comments(outer));
        self.out.entities.push(ParsedEntity {
            kind,
            name,
            qualified_name: qualified_name.clone(),
            signature,
            docstring,
            raw_content: self.text(outer).to_string(),
            line_span: Self::span(outer),
            parent,
        });
        Some(qualified_name)
    }

    fn class(&mut self, def: TsNode, outer: TsNode, scope: &Scope) {
        let Some(qn) = self.entity(NodeKind::Class, def, outer, scope, None) else {
            return;
        };
        if let Some(args) = def.child_by_field_name("superclasses") {
            let mut c = args.walk();
            let bases: Vec<String> = args.named_children(&mut c).filter_map(|n| self.dotted(n)).collect();
            for base in bases {
                self.relation(EdgeKind::Inherits, qn.clone(), base);
            }
        }
        if let Some(body) = def.child_by_field_name("body") {
            self.visit(body, &Scope::Class(qn));
        }
    }

    fn function(&mut self, def: TsNode, outer: TsNode, scope: &Scope) {
        let kind = match scope {
            Scope::Class(_) => NodeKind::MemberFunction,
            _ => NodeKind::Function,
        };
        let Some(body) = def.child_by_field_name("body") else {
            return;
        };
        let header = &self.src[def.start_byte()..body.start_byte()];
        let header = String::from_utf8_lossy(header);
        let signature = header
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .trim_end_matches(':')
            .trim_end()
            .to_string();
        let Some(qn) = self.entity(kind, def, outer, scope, Some(signature)) else {
            return;
        };
        self.visit(body, &Scope::Function(qn));
    }

    fn block_docstring(&self, block: TsNode) -> Option<String> {
        let mut c = block.walk();
        let first = block.named_children(&mut c).find(|n| n.kind() != "comment")?;
        if first.kind() != "expression_statement" {
            return None;
        }
        let s = first.named_child(0)?;
        if s.kind() != "string" {
            return None;
        }
        clean_docstring(self.text(s))
    }

    fn leading_comments(&self, outer: TsNode) -> Option<String> {
        let mut lines = Vec::new();
        let mut expected_row = outer.start_position().row;
        let mut prev = outer.prev_sibling();
        while let Some(p) = prev {
            if p.kind() != "comment" || p.end_position().row + 1 != expected_row {
                break;
            }
            lines.push(self.text(p).trim_start_matches('#').trim().to_string());
            expected_row = p.start_position().row;
            prev = p.prev_sibling();
        }
        if lines.is_empty() {
            return None;
        }
        lines.reverse();
        let joined = lines.join("\n").trim().to_string();
        (!joined.is_empty()).then_some(joined)
    }

    fn import(&mut self, node: TsNode) {
        let line = node.start_position().row as u32 + 1;
        let mut c = node.walk();
        let names: Vec<TsNode> = node.children_by_field_name("name", &mut c).collect();
        for n in names {
            let binding = match n.kind() {
                "dotted_name" => {
                    let m = self.text(n).to_string();
                    ImportBinding {
                        alias: m.clone(),
                        module: m,
                        symbol: None,
                        level: 0,
                        line,
                    }
                }
                "aliased_import" => {
                    let (Some(name), Some(alias)) = (n.child_by_field_name("name"), n.child_by_field_name("alias")) else {
                        continue;
                    };
                    ImportBinding {
                        alias: self.text(alias).to_string(),
                        module: self.text(name).to_string(),
                        symbol: None,
                        level: 0,
                        line,
                    }
                }
                _ => continue,
            };
            self.out.imports.push(binding);
        }
    }

    fn import_from(&mut self, node: TsNode) {
        let line = node.start_position().row as u32 + 1;
        let Some(module_node) = node.child_by_field_name("module_name") else {
            return;
        };
        let (module, level) = if module_node.kind() == "relative_import" {
            let mut level = 0;
            let mut module = String::new();
            let mut c = module_node.walk();
            for ch in module_node.named_children(&mut c) {
                match ch.kind() {
                    "import_prefix" => level = self.text(ch).matches('.').count() as u32,
                    "dotted_name" => module = self.text(ch).to_string(),
                    _ => {}
                }
            }
            (module, level)
        } else {
            (self.text(module_node).to_string(), 0)
        };
        let mut c = node.walk();
        let names: Vec<TsNode> = node.children_by_field_name("name", &mut c).collect();
        for n in names {
            let (symbol, alias) = match n.kind() {
                "dotted_name" => (self.text(n).to_string(), self.text(n).to_string()),
                "aliased_import" => {
                    let (Some(name), Some(alias)) = (n.child_by_field_name("name"), n.child_by_field_name("alias")) else {
                        continue;
                    };
                    (self.text(name).to_string(), self.text(alias).to_string())
                }
                _ => continue,
            };
            self.out.imports.push(ImportBinding {
                alias,
                module: module.clone(),
                symbol: Some(symbol),
                level,
                line,
            });
        }
        let mut c = node.walk();
        let wildcard = node.named_children(&mut c).any(|n| n.kind() == "wildcard_import");
        if wildcard {
            self.out.imports.push(ImportBinding {
                alias: "*".into(),
                module,
                symbol: Some("*".into()),
                level,
                line,
            });
        }
    }
}

/// Strips quotes and prefixes from a string literal and dedents it like
/// `inspect.cleandoc`.
pub fn clean_docstring(literal: &str) -> Option<String> {
    let body = literal.trim_start_matches(|c: char| "rRbBuUfF".contains(c));
    let body = ["\"\"\"", "'''", "\"", "'"]
        .iter()
        .find_map(|q| body.strip_prefix(q).and_then(|b| b.strip_suffix(q)))?;
    let lines: Vec<&str> = body.lines().collect();
    let indent = lines
        .iter()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut cleaned: Vec<String> = Vec::with_capacity(lines.len());
    for (i, l) in lines.iter().enumerate() {
        if i == 0 {
            cleaned.push(l.trim().to_string());
        } else {
            cleaned.push(l.get(indent..).unwrap_or(l.trim_start()).trim_end().to_string());
        }
    }
    while cleaned.first().is_some_and(|l| l.is_empty()) {
        cleaned.remove(0);
    }
    while cleaned.last().is_some_and(|l| l.is_empty()) {
        cleaned.pop();
    }
    let out = cleaned.join("\n");
    (!out.is_empty()).then_some(out)
}
