//! The command-line driver as a library, so the commands can be exercised
//! directly from tests. Each command takes parsed options and returns the
//! text it would print; `main` only does argument handling and exit codes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lces_core::analysis::{
    check_local_confluence, check_simulation_preorder, preorder_bounded, preorder_leq,
    well_behaved_probe,
};
use lces_core::lambda_c::{check_simulation, translate, LCProgram};
use lces_core::reduction::{
    enumerate_normal_forms, reduction_graph, run, Mode, ReductionGraph, Strategy, TraceStatus,
};
use lces_core::surface::{
    parse, parse_ref_subst, pretty_sum, print_effect, print_sum, print_term, print_type, Dialect,
    ParseError, SourceBody, SourceFile,
};
use lces_core::syntax::{RefSubst, Sum, Term, Value};
use lces_core::typing::{
    check_progress, check_stratification, check_subject_reduction, infer_sum, subtype, Effect,
    RefContext, TypeExpr, VarContext,
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// A failure with everything needed for both the one-line rendering
/// `file:line:col: rule: message` and the machine-readable form.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub rule: String,
    pub message: String,
}

impl Diagnostic {
    pub fn render(&self, json: bool) -> String {
        if json {
            serde_json::json!({
                "file": self.file,
                "line": self.line,
                "col": self.col,
                "rule": self.rule,
                "message": self.message,
            })
            .to_string()
        } else {
            format!(
                "{}:{}:{}: {}: {}",
                self.file, self.line, self.col, self.rule, self.message
            )
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Diagnostic(Diagnostic),
    Usage(String),
    Io(String),
    /// A meta suite ran and found violations; the report is still printed.
    SuiteFailed(String),
}

impl CliError {
    fn parse(file: &str, e: ParseError) -> CliError {
        CliError::Diagnostic(Diagnostic {
            file: file.to_string(),
            line: e.line,
            col: e.col,
            rule: "parse".to_string(),
            message: e.message,
        })
    }

    fn typing(file: &str, rule: &str, message: String) -> CliError {
        CliError::Diagnostic(Diagnostic {
            file: file.to_string(),
            line: 1,
            col: 1,
            rule: rule.to_string(),
            message,
        })
    }

    pub fn render(&self, json: bool) -> String {
        match self {
            CliError::Diagnostic(d) => d.render(json),
            CliError::Usage(m) => format!("usage error: {m}"),
            CliError::Io(m) => format!("io error: {m}"),
            CliError::SuiteFailed(report) => report.clone(),
        }
    }
}

pub type CliResult = Result<String, CliError>;

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 20_000,
            max_depth: 10_000,
        }
    }
}

pub fn dialect_of(path: &str) -> Dialect {
    if Path::new(path).extension().and_then(|e| e.to_str()) == Some("lc") {
        Dialect::Lc
    } else {
        Dialect::Lces
    }
}

pub fn load(path: &str) -> Result<SourceFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    parse(&text, dialect_of(path)).map_err(|e| CliError::parse(path, e))
}

fn body_sum(path: &str, sf: &SourceFile) -> Result<Sum, CliError> {
    match &sf.body {
        SourceBody::Lces(s) => Ok(s.clone()),
        SourceBody::Lc(p) => {
            // Source-calculus programs participate through their translation.
            let _ = path;
            Ok(Sum::singleton(translate(p)))
        }
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

pub fn cmd_check(path: &str) -> CliResult {
    let sf = load(path)?;
    check_stratification(&sf.refs)
        .map_err(|e| CliError::typing(path, "stratification", e.to_string()))?;
    let sum = body_sum(path, &sf)?;
    let (ty, eff) = infer_sum(&sf.refs, &VarContext::new(), &sum)
        .map_err(|e| CliError::typing(path, e.rule(), e.to_string()))?;
    if let Some((want_ty, want_eff)) = &sf.expect {
        if !subtype(&sf.refs, (&ty, &eff), (want_ty, want_eff)) {
            return Err(CliError::typing(
                path,
                "expect",
                format!(
                    "inferred ({}, {}) is not below the expected ({}, {})",
                    print_type(&ty),
                    print_effect(&eff),
                    print_type(want_ty),
                    print_effect(want_eff)
                ),
            ));
        }
    }
    Ok(format!("({}, {})\n", print_type(&ty), print_effect(&eff)))
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub mode: Mode,
    pub strategy: Strategy,
    pub max_steps: usize,
    pub trace_out: Option<String>,
    pub pretty: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: Mode::Full,
            strategy: Strategy::Leftmost,
            max_steps: 1_000,
            trace_out: None,
            pretty: false,
        }
    }
}

pub fn cmd_run(path: &str, opts: &RunOptions) -> CliResult {
    let sf = load(path)?;
    let sum = body_sum(path, &sf)?;
    let trace = run(&sum, opts.mode, opts.strategy, opts.max_steps)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let show = |s: &Sum| {
        if opts.pretty {
            pretty_sum(s)
        } else {
            print_sum(s)
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "0: {}", show(&trace.initial));
    for (i, step) in trace.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}: {} @ {} -> {}",
            i + 1,
            step.site.tag,
            step.site.path_string(),
            show(&step.result)
        );
    }
    let _ = writeln!(out, "status: {}", trace.status);
    if let Some(trace_path) = &opts.trace_out {
        let mut jsonl = String::new();
        for (i, step) in trace.steps.iter().enumerate() {
            let line = serde_json::json!({
                "step": i + 1,
                "rule": step.site.tag.name(),
                "site_path": step.site.path_string(),
                "term": print_sum(&step.result),
            });
            jsonl.push_str(&line.to_string());
            jsonl.push('\n');
        }
        fs::write(trace_path, jsonl).map_err(|e| CliError::Io(format!("{trace_path}: {e}")))?;
    }
    Ok(out)
}

pub fn trace_status(path: &str, opts: &RunOptions) -> Result<TraceStatus, CliError> {
    let sf = load(path)?;
    let sum = body_sum(path, &sf)?;
    let trace = run(&sum, opts.mode, opts.strategy, opts.max_steps)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(trace.status)
}

// ---------------------------------------------------------------------------
// enumerate
// ---------------------------------------------------------------------------

pub fn cmd_enumerate(path: &str, mode: Mode, limits: &Limits, pretty: bool) -> CliResult {
    let sf = load(path)?;
    let sum = body_sum(path, &sf)?;
    if mode == Mode::Nd && sum.len() > 1 {
        return Err(CliError::Usage(
            "the nd reduction works on simple terms; the input is a non-singleton sum".into(),
        ));
    }
    let (nfs, complete) = enumerate_normal_forms(&sum, mode, limits.max_states, limits.max_depth);
    let mut out = String::new();
    for nf in &nfs {
        let text = if pretty { pretty_sum(nf) } else { print_sum(nf) };
        let _ = writeln!(out, "normal form: {text}");
    }
    let _ = writeln!(out, "count: {}", nfs.len());
    let _ = writeln!(out, "complete: {complete}");
    Ok(out)
}

// ---------------------------------------------------------------------------
// graph
// ---------------------------------------------------------------------------

pub fn render_dot(graph: &ReductionGraph, label_width: usize) -> String {
    let mut out = String::from("digraph reduction {\n");
    let _ = writeln!(out, "  node [shape=box, fontname=\"monospace\"];");
    for (i, node) in graph.nodes.iter().enumerate() {
        let mut label: String = print_sum(&node.state);
        if label.chars().count() > label_width {
            label = label.chars().take(label_width.saturating_sub(1)).collect();
            label.push('\u{2026}');
        }
        let label = label.replace('\\', "\\\\").replace('"', "\\\"");
        let style = match node.status {
            lces_core::reduction::NodeStatus::Normal => ", peripheries=2",
            _ => "",
        };
        let _ = writeln!(out, "  n{i} [label=\"{label}\"{style}];");
    }
    for edge in &graph.edges {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"];",
            edge.from,
            edge.to,
            edge.tag.name()
        );
    }
    out.push_str("}\n");
    out
}

pub fn cmd_graph(
    path: &str,
    dot_out: &str,
    mode: Mode,
    limits: &Limits,
    label_width: usize,
) -> CliResult {
    let sf = load(path)?;
    let sum = body_sum(path, &sf)?;
    if mode == Mode::Nd && sum.len() > 1 {
        return Err(CliError::Usage(
            "the nd reduction works on simple terms; the input is a non-singleton sum".into(),
        ));
    }
    let graph = reduction_graph(&sum, mode, limits.max_states, limits.max_depth);
    fs::write(dot_out, render_dot(&graph, label_width))
        .map_err(|e| CliError::Io(format!("{dot_out}: {e}")))?;
    Ok(format!(
        "wrote {} nodes, {} edges to {} (complete: {})\n",
        graph.nodes.len(),
        graph.edges.len(),
        dot_out,
        graph.complete
    ))
}

// ---------------------------------------------------------------------------
// translate
// ---------------------------------------------------------------------------

pub fn cmd_translate(path: &str, out_path: Option<&str>) -> CliResult {
    let sf = load(path)?;
    let program = match &sf.body {
        SourceBody::Lc(p) => p.clone(),
        SourceBody::Lces(_) => {
            return Err(CliError::Usage(format!(
                "{path}: translate expects an .lc source-calculus file"
            )))
        }
    };
    let translated = translate(&program);
    let mut text = String::new();
    if !sf.refs.is_empty() {
        text.push_str("refs ");
        for (i, (r, ty)) in sf.refs.entries().enumerate() {
            if i > 0 {
                text.push_str("; ");
            }
            let _ = write!(text, "{} : {}", r, print_type(ty));
        }
        text.push_str(".\n");
    }
    let _ = writeln!(text, "term {}", print_term(&translated));
    match out_path {
        Some(p) => {
            fs::write(p, &text).map_err(|e| CliError::Io(format!("{p}: {e}")))?;
            Ok(format!("wrote {p}\n"))
        }
        None => Ok(text),
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn single_term(path: &str, sf: &SourceFile) -> Result<Term, CliError> {
    let sum = body_sum(path, sf)?;
    sum.as_single().cloned().ok_or_else(|| {
        CliError::Usage(format!("{path}: the preorders compare simple terms, not sums"))
    })
}

pub fn cmd_compare(path_a: &str, path_b: &str, bound: Option<&str>) -> CliResult {
    let a = load(path_a)?;
    let b = load(path_b)?;
    let ta = single_term(path_a, &a)?;
    let tb = single_term(path_b, &b)?;
    let mut out = String::new();
    let _ = writeln!(out, "A <= B: {}", preorder_leq(&ta, &tb));
    let _ = writeln!(out, "B <= A: {}", preorder_leq(&tb, &ta));
    if let Some(lit) = bound {
        let sub: RefSubst =
            parse_ref_subst(lit).map_err(|e| CliError::Usage(format!("--bound: {e}")))?;
        let _ = writeln!(
            out,
            "A bounded-by B within {}: {}",
            lit,
            preorder_bounded(&ta, &tb, &sub)
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// meta suites
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    SubjectReduction,
    Progress,
    Confluence,
    Simulation,
    WellBehaved,
}

#[derive(Clone, Debug)]
pub struct MetaOptions {
    pub limits: Limits,
    pub join_budget: usize,
    pub sim_budget: usize,
    pub wb_samples: usize,
    pub wb_steps: usize,
    pub seed: u64,
    /// Emit the report as one JSON object instead of text.
    pub json: bool,
}

impl Default for MetaOptions {
    fn default() -> Self {
        MetaOptions {
            limits: Limits::default(),
            join_budget: 32,
            sim_budget: 64,
            wb_samples: 64,
            wb_steps: 256,
            seed: 0,
            json: false,
        }
    }
}

/// A canonical inhabitant of each declared reference type, used as the
/// default injection set for the well-behavedness probe.
fn default_injections(refs: &RefContext) -> Vec<RefSubst> {
    refs.entries()
        .map(|(r, ty)| RefSubst::singleton(r.clone(), lces_core::corpus::inhabitant(ty)))
        .collect()
}

/// Render a suite outcome as text or one JSON object; a failed suite still
/// prints its report but exits nonzero.
fn finish_report(
    json: bool,
    suite: &str,
    ok: bool,
    fields: serde_json::Value,
    failures: Vec<String>,
    text: String,
) -> CliResult {
    if json {
        let mut v = serde_json::json!({ "suite": suite, "ok": ok, "failures": failures });
        if let (serde_json::Value::Object(a), serde_json::Value::Object(b)) = (&mut v, fields) {
            for (k, val) in b {
                a.insert(k, val);
            }
        }
        let mut s = v.to_string();
        s.push('\n');
        if ok {
            Ok(s)
        } else {
            Err(CliError::SuiteFailed(s))
        }
    } else if ok {
        Ok(text)
    } else {
        Err(CliError::SuiteFailed(text))
    }
}

pub fn cmd_meta(path: &str, suite: Suite, opts: &MetaOptions) -> CliResult {
    let sf = load(path)?;
    check_stratification(&sf.refs)
        .map_err(|e| CliError::typing(path, "stratification", e.to_string()))?;
    match suite {
        Suite::SubjectReduction => {
            let sum = body_sum(path, &sf)?;
            let report = check_subject_reduction(
                &sf.refs,
                &sum,
                Mode::Full,
                opts.limits.max_states,
                opts.limits.max_depth,
            )
            .map_err(|e| CliError::typing(path, e.rule(), e.to_string()))?;
            let mut out = String::new();
            let (ty, eff) = report.root_type.clone().unwrap();
            let _ = writeln!(
                out,
                "subject reduction: {} states checked against ({}, {}) (complete: {})",
                report.nodes_checked,
                print_type(&ty),
                print_effect(&eff),
                report.complete
            );
            for v in &report.violations {
                let _ = writeln!(out, "violation: {} -- {}", print_sum(&v.term), v.problem);
            }
            if report.ok() {
                let _ = writeln!(out, "ok");
            }
            let failures: Vec<String> = report
                .violations
                .iter()
                .map(|v| format!("{}: {}", print_sum(&v.term), v.problem))
                .collect();
            finish_report(
                opts.json,
                "sr",
                report.ok(),
                serde_json::json!({
                    "states": report.nodes_checked,
                    "complete": report.complete,
                }),
                failures,
                out,
            )
        }
        Suite::Progress => {
            let sum = body_sum(path, &sf)?;
            infer_sum(&sf.refs, &VarContext::new(), &sum)
                .map_err(|e| CliError::typing(path, e.rule(), e.to_string()))?;
            let (nfs, complete) =
                enumerate_normal_forms(&sum, Mode::Full, opts.limits.max_states, opts.limits.max_depth);
            let mut out = String::new();
            let mut bad = 0usize;
            for nf in &nfs {
                let report = check_progress(nf);
                if !report.conforming {
                    bad += 1;
                    for t in &report.offending {
                        let _ = writeln!(out, "stuck leaf outside the normal grammar: {}", print_term(t));
                    }
                }
            }
            let _ = writeln!(
                out,
                "progress: {} normal forms checked (complete: {complete}); note: {}",
                nfs.len(),
                check_progress(&sum).header
            );
            if bad == 0 {
                let _ = writeln!(out, "ok");
            }
            finish_report(
                opts.json,
                "progress",
                bad == 0,
                serde_json::json!({
                    "normal_forms": nfs.len(),
                    "complete": complete,
                    "nonconforming": bad,
                }),
                Vec::new(),
                out,
            )
        }
        Suite::Confluence => {
            let sum = body_sum(path, &sf)?;
            let report = check_local_confluence(&sum, opts.join_budget);
            let mut out = String::new();
            let _ = writeln!(
                out,
                "local confluence: {} divergence pairs, {} unjoined",
                report.pairs.len(),
                report.unjoined()
            );
            for p in report.pairs.iter().filter(|p| !p.joined) {
                let _ = writeln!(
                    out,
                    "unjoined ({:?}, {} vs {}):\n  left:  {}\n  right: {}",
                    p.contexts,
                    p.left_tag,
                    p.right_tag,
                    print_sum(&p.left),
                    print_sum(&p.right)
                );
            }
            if report.ok() {
                let _ = writeln!(out, "ok");
            }
            let failures: Vec<String> = report
                .pairs
                .iter()
                .filter(|p| !p.joined)
                .map(|p| format!("{} vs {}", print_sum(&p.left), print_sum(&p.right)))
                .collect();
            finish_report(
                opts.json,
                "confluence",
                report.ok(),
                serde_json::json!({
                    "pairs": report.pairs.len(),
                    "unjoined": report.unjoined(),
                }),
                failures,
                out,
            )
        }
        Suite::Simulation => {
            let program: LCProgram = match &sf.body {
                SourceBody::Lc(p) => p.clone(),
                SourceBody::Lces(_) => {
                    return Err(CliError::Usage(format!(
                        "{path}: the simulation suite expects an .lc file"
                    )))
                }
            };
            let report = check_simulation(&program, opts.sim_budget);
            let mut out = String::new();
            let _ = writeln!(out, "{report}");
            for f in &report.failures {
                let _ = writeln!(
                    out,
                    "unsimulated edge: target translation {}",
                    print_term(&f.translated_target)
                );
            }
            if report.ok() {
                let _ = writeln!(out, "ok");
            }
            let failures: Vec<String> = report
                .failures
                .iter()
                .map(|f| print_term(&f.translated_target))
                .collect();
            finish_report(
                opts.json,
                "simulation",
                report.ok(),
                serde_json::json!({
                    "edges": report.edges_checked,
                    "complete": report.complete,
                }),
                failures,
                out,
            )
        }
        Suite::WellBehaved => {
            let term = single_term(path, &sf)?;
            let injections = default_injections(&sf.refs);
            let report = well_behaved_probe(
                &term,
                &injections,
                opts.wb_steps,
                opts.wb_samples,
                opts.seed,
            );
            let mut out = String::new();
            let _ = writeln!(
                out,
                "well-behaved probe: {} schedules, max upward emissions {}{}",
                report.samples,
                report.max_upward_emissions,
                if report.truncated { " (some schedules truncated)" } else { "" }
            );
            let values: BTreeSet<String> = report
                .emitted_values
                .iter()
                .map(|v: &Value| print_term(&Term::Val(v.clone())))
                .collect();
            for v in values {
                let _ = writeln!(out, "emitted value: {v}");
            }
            // every emitted value must still type, pure; the probe records
            // them for exactly this check
            let mut failures: Vec<String> = Vec::new();
            for v in &report.emitted_values {
                if let Err(e) = lces_core::typing::infer(
                    &sf.refs,
                    &VarContext::new(),
                    &Term::Val(v.clone()),
                ) {
                    let _ = writeln!(out, "emitted value no longer types: {e}");
                    failures.push(format!("{}: {e}", print_term(&Term::Val(v.clone()))));
                }
            }
            let ok = failures.is_empty();
            if ok {
                let _ = writeln!(out, "ok");
            }
            finish_report(
                opts.json,
                "wb",
                ok,
                serde_json::json!({
                    "samples": report.samples,
                    "max_upward_emissions": report.max_upward_emissions,
                    "truncated": report.truncated,
                }),
                failures,
                out,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// shared helpers for generated corpora (used by the acceptance suite)
// ---------------------------------------------------------------------------

/// Well-typed closed corpus terms paired with their contexts.
pub fn typed_corpus(seed: u64, count: usize, depth: usize) -> Vec<(RefContext, Term)> {
    let mut rng = lces_core::Rng::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let ctx = lces_core::corpus::gen_ref_context(&mut rng, 3);
        let term = lces_core::corpus::gen_typed_term(&mut rng, &ctx, depth);
        out.push((ctx, term));
    }
    out
}

/// The effect of a judgment, exposed for reports.
pub fn judgment_of(
    refs: &RefContext,
    sum: &Sum,
) -> Result<(TypeExpr, Effect), lces_core::typing::TypeError> {
    infer_sum(refs, &VarContext::new(), sum)
}

/// Compare one-step nd successor sets against the summand decomposition of
/// the full get rule; used by the acceptance suite at scale.
pub fn nd_matches_full(t: &Term) -> bool {
    use lces_core::reduction::{apply, decompose, RuleTag};
    let s = Sum::singleton(t.clone());
    let full_sites = decompose(&s, Mode::Full);
    let nd_sites = decompose(&s, Mode::Nd);
    for site in &full_sites {
        if site.tag != RuleTag::RDownGet {
            continue;
        }
        let full_out = apply(&s, site).expect("fresh site");
        let mut nd_out: BTreeSet<Term> = BTreeSet::new();
        for nd_site in &nd_sites {
            if nd_site.path == site.path && nd_site.summand == site.summand {
                let out = apply(&s, nd_site).expect("fresh site");
                nd_out.insert(out.as_single().expect("nd keeps terms simple").clone());
            }
        }
        let full_set: BTreeSet<Term> = full_out.summands().cloned().collect();
        if full_set != nd_out {
            return false;
        }
    }
    true
}

/// One-step simulation matching for the preorder acceptance criterion.
pub fn simulation_matches(m: &Term, n: &Term, budget: usize) -> bool {
    check_simulation_preorder(m, n, budget).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_render_both_ways() {
        let d = Diagnostic {
            file: "f.lces".into(),
            line: 3,
            col: 7,
            rule: "parse".into(),
            message: "boom".into(),
        };
        assert_eq!(d.render(false), "f.lces:3:7: parse: boom");
        let v: serde_json::Value = serde_json::from_str(&d.render(true)).unwrap();
        assert_eq!(v["line"], 3);
        assert_eq!(v["rule"], "parse");
    }

    #[test]
    fn dot_rendering_truncates_labels() {
        let sum = Sum::singleton(Term::unit());
        let g = reduction_graph(&sum, Mode::Full, 10, 10);
        let dot = render_dot(&g, 5);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("n0"));
    }
}
