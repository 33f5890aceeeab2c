//! Per-cell definitions, uses, imports and call sites.
//!
//! Definitions are module-scope binding sites: assignment targets (the base
//! name of a subscript or attribute target counts, since the object is
//! rebound for later readers), loop and `with` targets, `except ... as`,
//! walrus targets, function and class names, and import aliases. A use is a
//! name read before the cell itself defines it. Names read inside function
//! and class bodies count as uses of the cell unless the body binds them.

use std::collections::HashSet;

use super::lexer::{is_keyword, lex, LexError, LogicalLine, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportBinding {
    pub local: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowEvent {
    Import(ImportBinding),
    /// Dotted call chain such as `["pd", "read_csv"]`.
    Call(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellFacts {
    pub defs: Vec<String>,
    pub uses: Vec<String>,
    /// Module-scope imports and all call sites, in source order.
    pub events: Vec<FlowEvent>,
}

impl CellFacts {
    pub fn imports(&self) -> impl Iterator<Item = &ImportBinding> {
        self.events.iter().filter_map(|e| match e {
            FlowEvent::Import(b) => Some(b),
            FlowEvent::Call(_) => None,
        })
    }

    pub fn calls(&self) -> impl Iterator<Item = &[String]> {
        self.events.iter().filter_map(|e| match e {
            FlowEvent::Call(c) => Some(c.as_slice()),
            FlowEvent::Import(_) => None,
        })
    }
}

/// Receives binding information while a statement is walked.
trait Sink {
    fn use_name(&mut self, name: &str);
    fn def_name(&mut self, name: &str);
}

#[derive(Default)]
struct ModuleSink {
    defined: HashSet<String>,
    defs: Vec<String>,
    uses: Vec<String>,
    used: HashSet<String>,
}

impl Sink for ModuleSink {
    fn use_name(&mut self, name: &str) {
        if !self.defined.contains(name) && self.used.insert(name.to_owned()) {
            self.uses.push(name.to_owned());
        }
    }

    fn def_name(&mut self, name: &str) {
        if self.defined.insert(name.to_owned()) {
            self.defs.push(name.to_owned());
        }
    }
}

struct ScopeSink {
    indent: usize,
    locals: HashSet<String>,
    reads: Vec<String>,
}

impl Sink for ScopeSink {
    fn use_name(&mut self, name: &str) {
        if !self.reads.iter().any(|r| r == name) {
            self.reads.push(name.to_owned());
        }
    }

    fn def_name(&mut self, name: &str) {
        self.locals.insert(name.to_owned());
    }
}

impl ScopeSink {
    fn free_names(self) -> Vec<String> {
        let locals = self.locals;
        self.reads.into_iter().filter(|r| !locals.contains(r)).collect()
    }
}

pub fn analyze_source(source: &str) -> Result<CellFacts, LexError> {
    let lines = lex(source)?;
    Ok(analyze_lines(&lines))
}

fn analyze_lines(lines: &[LogicalLine]) -> CellFacts {
    let mut module = ModuleSink::default();
    let mut scopes: Vec<ScopeSink> = Vec::new();
    let mut events = Vec::new();

    for line in lines {
        while scopes.last().is_some_and(|s| line.indent <= s.indent) {
            close_scope(&mut scopes, &mut module);
        }
        collect_calls(&line.tokens, &mut events);
        let toks = strip_async(&line.tokens);
        let opens_scope = matches!(toks.first(), Some(t) if t.is_name("def") || t.is_name("class"));
        let params = if opens_scope && toks[0].is_name("def") { def_params(toks) } else { Vec::new() };

        match scopes.last_mut() {
            Some(scope) => statement(toks, scope, None),
            None => statement(toks, &mut module, Some(&mut events)),
        }
        if opens_scope {
            let mut locals: HashSet<String> = params.into_iter().collect();
            if toks[0].is_name("def") {
                locals.insert("self".to_owned());
            }
            scopes.push(ScopeSink { indent: line.indent, locals, reads: Vec::new() });
        }
    }
    while !scopes.is_empty() {
        close_scope(&mut scopes, &mut module);
    }
    CellFacts { defs: module.defs, uses: module.uses, events }
}

fn close_scope(scopes: &mut Vec<ScopeSink>, module: &mut ModuleSink) {
    let scope = scopes.pop().expect("scope to close");
    let free = scope.free_names();
    match scopes.last_mut() {
        Some(parent) => free.iter().for_each(|n| parent.use_name(n)),
        None => free.iter().for_each(|n| module.use_name(n)),
    }
}

fn strip_async(toks: &[Tok]) -> &[Tok] {
    match toks {
        [first, rest @ ..] if first.is_name("async") && !rest.is_empty() => rest,
        _ => toks,
    }
}

const AUGMENTED: [&str; 13] = ["+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="];

fn statement(toks: &[Tok], sink: &mut impl Sink, events: Option<&mut Vec<FlowEvent>>) {
    let Some(first) = toks.first() else { return };
    match first.name() {
        Some("import") | Some("from") => {
            let bindings = parse_import(toks);
            for binding in &bindings {
                sink.def_name(&binding.local);
            }
            if let Some(ev) = events {
                ev.extend(bindings.into_iter().map(FlowEvent::Import));
            }
        }
        Some("def") => {
            let params = def_params(toks);
            let mut param_set: HashSet<String> = params.into_iter().collect();
            if let Some(name) = toks.get(1).and_then(Tok::name) {
                param_set.insert(name.to_owned());
            }
            // Defaults and annotations are evaluated in the enclosing scope.
            expr_uses(&toks[2.min(toks.len())..], sink, &param_set);
            if let Some(name) = toks.get(1).and_then(Tok::name) {
                sink.def_name(name);
            }
        }
        Some("class") => {
            let name = toks.get(1).and_then(Tok::name).map(str::to_owned);
            let mut skip = HashSet::new();
            if let Some(n) = &name {
                skip.insert(n.clone());
            }
            expr_uses(&toks[2.min(toks.len())..], sink, &skip);
            if let Some(n) = name {
                sink.def_name(&n);
            }
        }
        Some("for") => {
            let in_idx = find_depth0(toks, 1, |t| t.is_name("in")).unwrap_or(toks.len());
            expr_uses(&toks[(in_idx + 1).min(toks.len())..], sink, &HashSet::new());
            bind_targets(&toks[1..in_idx], sink);
        }
        Some("with") => {
            for item in split_depth0(&toks[1..], |t| t.is_op(",")) {
                let item = trim_colon(item);
                match find_depth0(item, 0, |t| t.is_name("as")) {
                    Some(as_idx) => {
                        expr_uses(&item[..as_idx], sink, &HashSet::new());
                        bind_targets(&item[as_idx + 1..], sink);
                    }
                    None => expr_uses(item, sink, &HashSet::new()),
                }
            }
        }
        Some("except") => match find_depth0(toks, 1, |t| t.is_name("as")) {
            Some(as_idx) => {
                expr_uses(&toks[1..as_idx], sink, &HashSet::new());
                if let Some(n) = toks.get(as_idx + 1).and_then(Tok::name) {
                    sink.def_name(n);
                }
            }
            None => expr_uses(&toks[1..], sink, &HashSet::new()),
        },
        Some("global") | Some("nonlocal") | Some("pass") | Some("break") | Some("continue") => {}
        Some("del") => expr_uses(&toks[1..], sink, &HashSet::new()),
        _ if first.is_op("@") => expr_uses(&toks[1..], sink, &HashSet::new()),
        _ => assignment_or_expr(toks, sink),
    }
}

fn assignment_or_expr(toks: &[Tok], sink: &mut impl Sink) {
    let empty = HashSet::new();
    if let Some(idx) = find_depth0(toks, 0, |t| AUGMENTED.iter().any(|op| t.is_op(op))) {
        expr_uses(&toks[idx + 1..], sink, &empty);
        expr_uses(&toks[..idx], sink, &empty);
        bind_targets(&toks[..idx], sink);
        return;
    }
    let segments = split_depth0(toks, |t| t.is_op("="));
    if segments.len() == 1 {
        // Bare annotation `x: int` binds nothing.
        if let Some(colon) = find_depth0(toks, 0, |t| t.is_op(":")) {
            if toks.first().and_then(Tok::name).is_some_and(|n| !is_keyword(n)) {
                expr_uses(&toks[colon + 1..], sink, &empty);
                return;
            }
        }
        expr_uses(toks, sink, &empty);
        return;
    }
    let (value, targets) = segments.split_last().expect("at least two segments");
    expr_uses(value, sink, &empty);
    for target in targets {
        let target = match find_depth0(target, 0, |t| t.is_op(":")) {
            Some(colon) => {
                expr_uses(&target[colon + 1..], sink, &empty);
                &target[..colon]
            }
            None => target,
        };
        expr_uses_in_target(target, sink);
        bind_targets(target, sink);
    }
}

/// Names read by a target expression: subscript contents and the base of
/// subscript/attribute targets.
fn expr_uses_in_target(target: &[Tok], sink: &mut impl Sink) {
    for part in split_depth0(strip_brackets(target), |t| t.is_op(",")) {
        let part = strip_star(part);
        if part.len() > 1 && part[0].name().is_some() && (part[1].is_op(".") || part[1].is_op("[")) {
            expr_uses(part, sink, &HashSet::new());
        } else if part.len() > 1 && (part[0].is_op("(") || part[0].is_op("[")) {
            expr_uses_in_target(part, sink);
        }
    }
}

fn bind_targets(target: &[Tok], sink: &mut impl Sink) {
    for part in split_depth0(strip_brackets(target), |t| t.is_op(",")) {
        let part = strip_star(part);
        match part {
            [Tok::Name(n)] if !is_keyword(n) => sink.def_name(n),
            [Tok::Name(n), next, ..] if !is_keyword(n) && (next.is_op(".") || next.is_op("[")) => sink.def_name(n),
            [open, ..] if open.is_op("(") || open.is_op("[") => bind_targets(part, sink),
            _ => {}
        }
    }
}

fn strip_star(part: &[Tok]) -> &[Tok] {
    match part {
        [star, rest @ ..] if star.is_op("*") => rest,
        _ => part,
    }
}

/// Removes one pair of enclosing brackets when they wrap the whole slice.
fn strip_brackets(toks: &[Tok]) -> &[Tok] {
    if toks.len() >= 2 {
        let (open, close) = (&toks[0], &toks[toks.len() - 1]);
        let pair = (open.is_op("(") && close.is_op(")")) || (open.is_op("[") && close.is_op("]"));
        if pair && matching_close(toks, 0) == Some(toks.len() - 1) {
            return &toks[1..toks.len() - 1];
        }
    }
    toks
}

fn matching_close(toks: &[Tok], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().skip(open) {
        depth += bracket_delta(t);
        if depth == 0 {
            return Some(i);
        }
    }
    None
}

fn bracket_delta(t: &Tok) -> i32 {
    match t {
        Tok::Op(o) if o == "(" || o == "[" || o == "{" => 1,
        Tok::Op(o) if o == ")" || o == "]" || o == "}" => -1,
        _ => 0,
    }
}

fn trim_colon(toks: &[Tok]) -> &[Tok] {
    match toks.split_last() {
        Some((last, rest)) if last.is_op(":") => rest,
        _ => toks,
    }
}

fn find_depth0(toks: &[Tok], start: usize, pred: impl Fn(&Tok) -> bool) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        if i >= start && depth == 0 && pred(t) {
            return Some(i);
        }
        depth += bracket_delta(t);
    }
    None
}

fn split_depth0(toks: &[Tok], pred: impl Fn(&Tok) -> bool) -> Vec<&[Tok]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        if depth == 0 && pred(t) {
            parts.push(&toks[start..i]);
            start = i + 1;
        }
        depth += bracket_delta(t);
    }
    parts.push(&toks[start..]);
    parts
}

/// Parameter names of a `def` line.
fn def_params(toks: &[Tok]) -> Vec<String> {
    let Some(open) = toks.iter().position(|t| t.is_op("(")) else { return Vec::new() };
    let Some(close) = matching_close(toks, open) else { return Vec::new() };
    let mut params = Vec::new();
    for part in split_depth0(&toks[open + 1..close], |t| t.is_op(",")) {
        let part = match part {
            [star, rest @ ..] if star.is_op("*") || star.is_op("**") => rest,
            _ => part,
        };
        if let Some(Tok::Name(n)) = part.first() {
            params.push(n.clone());
        }
    }
    params
}

/// Names bound locally inside an expression by lambdas and comprehensions.
fn expression_locals(toks: &[Tok]) -> HashSet<String> {
    let mut locals = HashSet::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].is_name("lambda") {
            let mut j = i + 1;
            while j < toks.len() && !toks[j].is_op(":") {
                if let Tok::Name(n) = &toks[j] {
                    if j == i + 1 || toks[j - 1].is_op(",") || toks[j - 1].is_op("*") || toks[j - 1].is_op("**") {
                        locals.insert(n.clone());
                    }
                }
                j += 1;
            }
            i = j;
        } else if toks[i].is_name("for") {
            let mut j = i + 1;
            while j < toks.len() && !toks[j].is_name("in") {
                if let Tok::Name(n) = &toks[j] {
                    locals.insert(n.clone());
                }
                j += 1;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    locals
}

/// Records every name read by an expression. Attribute names, keyword
/// argument names, keywords and `skip` are ignored; walrus targets are defined
/// after the reads.
fn expr_uses(toks: &[Tok], sink: &mut impl Sink, skip: &HashSet<String>) {
    let locals = expression_locals(toks);
    let mut walrus = Vec::new();
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        match t {
            Tok::Name(n) => {
                let prev_dot = i > 0 && toks[i - 1].is_op(".");
                let next = toks.get(i + 1);
                let kwarg = depth > 0 && next.is_some_and(|nx| nx.is_op("="));
                if prev_dot || kwarg || is_keyword(n) || locals.contains(n) || skip.contains(n) {
                    continue;
                }
                if next.is_some_and(|nx| nx.is_op(":=")) {
                    walrus.push(n.clone());
                    continue;
                }
                sink.use_name(n);
            }
            Tok::Str(inner) if !inner.is_empty() => expr_uses(inner, sink, skip),
            _ => depth += bracket_delta(t),
        }
    }
    for n in walrus {
        sink.def_name(&n);
    }
}

/// Module paths bound by an `import` or `from ... import` statement.
pub fn parse_import(toks: &[Tok]) -> Vec<ImportBinding> {
    let mut out = Vec::new();
    match toks.first().and_then(Tok::name) {
        Some("import") => {
            for part in split_depth0(&toks[1..], |t| t.is_op(",")) {
                let (path, alias) = dotted_with_alias(part);
                if path.is_empty() {
                    continue;
                }
                match alias {
                    Some(a) => out.push(ImportBinding { local: a, target: path }),
                    None => {
                        let head = path.split('.').next().unwrap_or("").to_owned();
                        out.push(ImportBinding { local: head.clone(), target: head });
                    }
                }
            }
        }
        Some("from") => {
            let Some(imp) = toks.iter().position(|t| t.is_name("import")) else { return out };
            let mut module = String::new();
            for t in &toks[1..imp] {
                match t {
                    Tok::Op(o) if o == "." || o == "..." => module.push_str(o),
                    Tok::Name(n) => module.push_str(n),
                    _ => return out,
                }
            }
            if module.is_empty() || module == "__future__" {
                return out;
            }
            let names = strip_brackets(&toks[imp + 1..]);
            for part in split_depth0(names, |t| t.is_op(",")) {
                let (name, alias) = dotted_with_alias(part);
                if name.is_empty() || name.contains('.') {
                    continue;
                }
                let sep = if module.ends_with('.') { "" } else { "." };
                let target = format!("{module}{sep}{name}");
                out.push(ImportBinding { local: alias.unwrap_or(name), target });
            }
        }
        _ => {}
    }
    out
}

fn dotted_with_alias(part: &[Tok]) -> (String, Option<String>) {
    let mut path = String::new();
    let mut i = 0;
    while i < part.len() {
        match &part[i] {
            Tok::Name(n) if n != "as" => {
                path.push_str(n);
                i += 1;
                if part.get(i).is_some_and(|t| t.is_op(".")) {
                    path.push('.');
                    i += 1;
                } else {
                    break;
                }
            }
            _ => break,
        }
    }
    let alias = match (part.get(i), part.get(i + 1)) {
        (Some(as_kw), Some(Tok::Name(a))) if as_kw.is_name("as") => Some(a.clone()),
        (None, _) => None,
        _ => return (String::new(), None),
    };
    if part.len() > i + 2 || path.ends_with('.') {
        return (String::new(), None);
    }
    (path, alias)
}

/// Call sites of the forms `name(...)` and `a.b.c(...)`, including those in
/// f-string fields.
fn collect_calls(toks: &[Tok], events: &mut Vec<FlowEvent>) {
    let mut i = 0;
    while i < toks.len() {
        if let Tok::Str(inner) = &toks[i] {
            collect_calls(inner, events);
            i += 1;
            continue;
        }
        let Tok::Name(head) = &toks[i] else {
            i += 1;
            continue;
        };
        let chain_start = i == 0
            || !(toks[i - 1].is_op(".")
                || toks[i - 1].is_name("def")
                || toks[i - 1].is_name("class")
                || toks[i - 1].is_op(")")
                || toks[i - 1].is_op("]"));
        // `df["a"].fillna(...)`: the receiver is an expression, recorded as "".
        let on_expr = i >= 2
            && toks[i - 1].is_op(".")
            && (toks[i - 2].is_op(")") || toks[i - 2].is_op("]") || matches!(toks[i - 2], Tok::Str(_)));
        if (!chain_start && !on_expr) || is_keyword(head) {
            i += 1;
            continue;
        }
        let mut chain = if on_expr { vec![String::new(), head.clone()] } else { vec![head.clone()] };
        let mut j = i + 1;
        while j + 1 < toks.len() && toks[j].is_op(".") {
            match &toks[j + 1] {
                Tok::Name(n) => {
                    chain.push(n.clone());
                    j += 2;
                }
                _ => break,
            }
        }
        if toks.get(j).is_some_and(|t| t.is_op("(")) {
            events.push(FlowEvent::Call(chain));
        }
        i = j.max(i + 1);
    }
}
