//! Turns stored raw relations and imports into Calls, Inherits and Refers
//! edges.
//!
//! Resolution runs over every file record at once, so the resulting edge set
//! depends only on the current files and not on the order they were parsed.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, VecDeque};

use super::adapter::{AdapterRegistry, ModuleIndex, ParserAdapter};
use crate::graph::{EdgeKind, FileRecord, ImportBinding, KnowledgeGraph, NodeId, NodeKind};
use crate::Result;

pub(crate) struct RepoFiles {
    by_name: HashMap<String, Vec<String>>,
    all: std::collections::HashSet<String>,
}

impl RepoFiles {
    pub(crate) fn new<'a>(paths: impl Iterator<Item = &'a str>) -> Self {
        let mut by_name: HashMap<String, Vec<String>> = HashMap::new();
        let mut all = std::collections::HashSet::new();
        for p in paths {
            let name = p.rsplit('/').next().unwrap_or(p);
            by_name.entry(name.to_string()).or_default().push(p.to_string());
            all.insert(p.to_string());
        }
        for v in by_name.values_mut() {
            v.sort();
        }
        Self { by_name, all }
    }
}

impl ModuleIndex for RepoFiles {
    fn has_file(&self, path: &str) -> bool {
        self.all.contains(path)
    }

    fn files_with_suffix(&self, suffix: &str) -> Vec<&str> {
        let name = suffix.rsplit('/').next().unwrap_or(suffix);
        let tail = format!("/{suffix}");
        self.by_name
            .get(name)
            .map(|v| {
                v.iter()
                    .filter(|p| *p == suffix || p.ends_with(&tail))
                    .map(String::as_str)
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Want {
    Callable,
    Class,
}

struct Resolver<'g> {
    graph: &'g KnowledgeGraph,
    files: RepoFiles,
    symbols: HashMap<(&'g str, &'g str), (NodeId, NodeKind)>,
    module_cache: RefCell<HashMap<(String, String, u32), Option<String>>>,
}

impl<'g> Resolver<'g> {
    fn new(graph: &'g KnowledgeGraph) -> Self {
        let symbols = graph
            .nodes()
            .filter(|n| n.kind.is_entity())
            .map(|n| ((n.path.as_str(), n.qualified_name.as_str()), (n.id, n.kind)))
            .collect();
        Self {
            graph,
            files: RepoFiles::new(graph.file_paths()),
            symbols,
            module_cache: RefCell::new(HashMap::new()),
        }
    }

    fn module_file(&self, adapter: &dyn ParserAdapter, from: &str, module: &str, level: u32) -> Option<String> {
        let key = (
            if level > 0 { from.to_string() } else { String::new() },
            module.to_string(),
            level,
        );
        if let Some(hit) = self.module_cache.borrow().get(&key) {
            return hit.clone();
        }
        let found = adapter.resolve_module(from, module, level, &self.files);
        self.module_cache.borrow_mut().insert(key, found.clone());
        found
    }

    fn entity(&self, path: &str, qn: &str, want: Want) -> Option<NodeId> {
        let &(id, kind) = self.symbols.get(&(path, qn))?;
        match (want, kind) {
            (Want::Class, NodeKind::Class) => Some(id),
            (Want::Callable, NodeKind::Function | NodeKind::MemberFunction) => Some(id),
            (Want::Callable, NodeKind::Class) => {
                let ctor = format!("{qn}.__init__");
                self.symbols.get(&(path, ctor.as_str())).map(|&(id, _)| id)
            }
            _ => None,
        }
    }

    /// Entity `rest` inside module `module`, descending into submodules when
    /// the leading components of `rest` name a module.
    fn in_module(
        &self,
        adapter: &dyn ParserAdapter,
        from: &str,
        module: &str,
        level: u32,
        rest: &[&str],
        want: Want,
    ) -> Option<NodeId> {
        if rest.is_empty() {
            return None;
        }
        if let Some(file) = self.module_file(adapter, from, module, level) {
            if let Some(id) = self.entity(&file, &rest.join("."), want) {
                return Some(id);
            }
        }
        let sub = if module.is_empty() {
            rest[0].to_string()
        } else {
            format!("{module}.{}", rest[0])
        };
        self.in_module(adapter, from, &sub, level, &rest[1..], want)
    }

    fn via_binding(
        &self,
        adapter: &dyn ParserAdapter,
        from: &str,
        b: &ImportBinding,
        rest: &[&str],
        want: Want,
    ) -> Option<NodeId> {
        match &b.symbol {
            None => self.in_module(adapter, from, &b.module, b.level, rest, want),
            Some(s) if s == "*" => self.in_module(adapter, from, &b.module, b.level, rest, want),
            Some(s) => {
                let mut path: Vec<&str> = vec![s.as_str()];
                path.extend_from_slice(rest);
                self.in_module(adapter, from, &b.module, b.level, &path, want)
            }
        }
    }

    fn enclosing_class(&self, path: &str, source: &str) -> Option<NodeId> {
        let mut cur = source;
        while let Some(i) = cur.rfind('.') {
            cur = &cur[..i];
            if let Some(id) = self.entity(path, cur, Want::Class) {
                return Some(id);
            }
        }
        None
    }

    /// Method lookup through the class and its resolved bases.
    fn method(&self, class: NodeId, name: &str) -> Option<NodeId> {
        let mut queue = VecDeque::from([class]);
        let mut seen = vec![class];
        while let Some(c) = queue.pop_front() {
            let node = self.graph.node(c)?;
            if let Some(id) = self.entity(&node.path, &format!("{}.{name}", node.qualified_name), Want::Callable) {
                return Some(id);
            }
            for (k, base) in self.graph.outgoing(c) {
                if k == EdgeKind::Inherits && !seen.contains(&base) {
                    seen.push(base);
                    queue.push_back(base);
                }
            }
        }
        None
    }

    fn resolve(
        &self,
        adapter: &dyn ParserAdapter,
        path: &str,
        record: &FileRecord,
        source: &str,
        target: &str,
        want: Want,
    ) -> Option<NodeId> {
        let parts: Vec<&str> = target.split('.').collect();
        if parts.len() == 2 && matches!(parts[0], "self" | "cls") {
            let class = self.enclosing_class(path, source)?;
            return match want {
                Want::Callable => self.method(class, parts[1]),
                Want::Class => None,
            };
        }
        // Innermost enclosing scope first, then module level.
        let mut scope = source;
        loop {
            if let Some(id) = self.entity(path, &format!("{scope}.{target}"), want) {
                return Some(id);
            }
            match scope.rfind('.') {
                Some(i) => scope = &scope[..i],
                None => break,
            }
        }
        if let Some(id) = self.entity(path, target, want) {
            return Some(id);
        }
        for split in (1..=parts.len()).rev() {
            let head = parts[..split].join(".");
            let rest = &parts[split..];
            for b in record.imports.iter().rev().filter(|b| b.alias == head) {
                if let Some(id) = self.via_binding(adapter, path, b, rest, want) {
                    return Some(id);
                }
            }
        }
        for b in record.imports.iter().filter(|b| b.alias == "*") {
            if let Some(id) = self.in_module(adapter, path, &b.module, b.level, &parts, want) {
                return Some(id);
            }
        }
        None
    }

    fn import_target(&self, adapter: &dyn ParserAdapter, path: &str, b: &ImportBinding) -> Option<String> {
        if let Some(sym) = b.symbol.as_deref().filter(|s| *s != "*") {
            let sub = if b.module.is_empty() {
                sym.to_string()
            } else {
                format!("{}.{sym}", b.module)
            };
            if let Some(f) = self.module_file(adapter, path, &sub, b.level) {
                return Some(f);
            }
        }
        if b.module.is_empty() && b.level == 0 {
            return None;
        }
        self.module_file(adapter, path, &b.module, b.level)
    }
}

/// Recomputes Calls, Inherits and Refers edges from the file records.
/// Returns the number of unresolved relations by kind.
pub fn resolve_relations(graph: &mut KnowledgeGraph, registry: &AdapterRegistry) -> Result<BTreeMap<EdgeKind, usize>> {
    graph.clear_edges_of_kind(&[EdgeKind::Calls, EdgeKind::Inherits, EdgeKind::Refers]);
    let mut unresolved: BTreeMap<EdgeKind, usize> = BTreeMap::new();
    let records: Vec<(String, FileRecord)> = graph
        .file_records()
        .map(|(p, r)| (p.to_string(), r.clone()))
        .collect();

    // Inherits first: method lookup through `self` follows base classes.
    for pass in [EdgeKind::Inherits, EdgeKind::Calls] {
        let mut edges = Vec::new();
        {
            let resolver = Resolver::new(graph);
            for (path, record) in &records {
                let (adapter, _) = registry.for_language(&record.language);
                if pass == EdgeKind::Inherits {
                    for b in &record.imports {
                        let target = resolver.import_target(adapter, path, b);
                        let src = graph.node_by_path(path).map(|n| n.id);
                        match (src, target.as_deref().and_then(|t| graph.node_by_path(t))) {
                            (Some(s), Some(t)) if t.path != *path => edges.push((s, t.id, EdgeKind::Refers)),
                            (_, Some(_)) => {}
                            _ => *unresolved.entry(EdgeKind::Refers).or_default() += 1,
                        }
                    }
                }
                for rel in record.relations.iter().filter(|r| r.kind == pass) {
                    let want = if pass == EdgeKind::Inherits { Want::Class } else { Want::Callable };
                    let src = resolver.entity(path, &rel.source, want);
                    let dst = resolver.resolve(adapter, path, record, &rel.source, &rel.target, want);
                    match (src, dst) {
                        (Some(s), Some(d)) if !(pass == EdgeKind::Inherits && s == d) => edges.push((s, d, pass)),
                        _ => *unresolved.entry(pass).or_default() += 1,
                    }
                }
            }
        }
        for (s, d, k) in edges {
            graph.add_edge(s, d, k)?;
        }
    }
    Ok(unresolved)
}
