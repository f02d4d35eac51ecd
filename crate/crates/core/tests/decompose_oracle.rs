//! An independently written reduction oracle.
//!
//! The engine enumerates redexes over canonical terms, where `||` spines are
//! flattened multisets and rule instances over them are generated by subset
//! and partition bookkeeping. This oracle takes the opposite, naive route:
//! it expands a canonical sum into all of its binary representatives under
//! the structural rules, applies the literal binary reduction rules at every
//! legal context of every representative, and canonicalizes the results.
//! The two successor sets must coincide.

use lces_core::corpus::{each_term, EnumOptions};
use lces_core::reduction::successors_full;
use lces_core::surface::parse_sum;
use lces_core::syntax::{
    canonicalize, compose_var_substs, juxtapose_ref_substs, meta_apply_ref_subst, Lambda,
    RefName, RefSubst, Sum, Term, Value, VarSubst,
};
use std::collections::BTreeSet;

/// Terms with binary parallel composition.
#[derive(Clone, PartialEq, Eq, Debug)]
enum BTerm {
    Val(Value),
    VarSub(VarSubst, Box<BTerm>),
    App(RefSubst, Box<BTerm>, Box<BTerm>),
    Get(RefName),
    Down(RefSubst, Box<BTerm>),
    Up(RefSubst, Box<BTerm>),
    Par(Box<BTerm>, Box<BTerm>),
}

/// Sums with binary plus.
#[derive(Clone, PartialEq, Eq, Debug)]
enum BSum {
    Zero,
    Term(BTerm),
    Plus(Box<BSum>, Box<BSum>),
}

fn to_term(b: &BTerm) -> Term {
    match b {
        BTerm::Val(v) => Term::Val(v.clone()),
        BTerm::VarSub(s, t) => Term::var_sub(s.clone(), to_term(t)),
        BTerm::App(s, f, a) => Term::app_sub(s.clone(), to_term(f), to_term(a)),
        BTerm::Get(r) => Term::Get(r.clone()),
        BTerm::Down(s, t) => Term::down(s.clone(), to_term(t)),
        BTerm::Up(s, t) => Term::up(s.clone(), to_term(t)),
        BTerm::Par(l, r) => Term::par(vec![to_term(l), to_term(r)]),
    }
}

fn to_sum(b: &BSum) -> Sum {
    let mut out = Vec::new();
    fn collect(b: &BSum, out: &mut Vec<Term>) {
        match b {
            BSum::Zero => {}
            BSum::Term(t) => out.push(to_term(t)),
            BSum::Plus(l, r) => {
                collect(l, out);
                collect(r, out);
            }
        }
    }
    collect(b, &mut out);
    canonicalize(&Sum::from_terms(out))
}

/// All binary representatives of a term: every ordered bracketing of every
/// `||` multiset.
fn term_views(t: &Term) -> Vec<BTerm> {
    match t {
        Term::Val(v) => vec![BTerm::Val(v.clone())],
        Term::Get(r) => vec![BTerm::Get(r.clone())],
        Term::VarSub(s, body) => term_views(body)
            .into_iter()
            .map(|b| BTerm::VarSub(s.clone(), Box::new(b)))
            .collect(),
        Term::Down(s, body) => term_views(body)
            .into_iter()
            .map(|b| BTerm::Down(s.clone(), Box::new(b)))
            .collect(),
        Term::Up(s, body) => term_views(body)
            .into_iter()
            .map(|b| BTerm::Up(s.clone(), Box::new(b)))
            .collect(),
        Term::App(s, f, a) => {
            let mut out = Vec::new();
            for fv in term_views(f) {
                for av in term_views(a) {
                    out.push(BTerm::App(s.clone(), Box::new(fv.clone()), Box::new(av)));
                }
            }
            out
        }
        Term::Par(cs) => group_views(cs),
    }
}

/// All binary trees over a non-empty group of parallel children, with both
/// orders of every split (commutativity).
fn group_views(children: &[Term]) -> Vec<BTerm> {
    if children.len() == 1 {
        return term_views(&children[0]);
    }
    let mut out = Vec::new();
    let n = children.len();
    // every ordered bipartition: left = non-empty proper subset by bitmask
    for mask in 1u32..((1u32 << n) - 1) {
        let left: Vec<Term> = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| children[i].clone())
            .collect();
        let right: Vec<Term> = (0..n)
            .filter(|&i| mask & (1 << i) == 0)
            .map(|i| children[i].clone())
            .collect();
        for lv in group_views(&left) {
            for rv in group_views(&right) {
                out.push(BTerm::Par(Box::new(lv.clone()), Box::new(rv)));
            }
        }
    }
    out
}

/// All binary representatives of a sum (no summand duplication).
fn sum_views(s: &Sum) -> Vec<BSum> {
    let terms: Vec<Term> = s.summands().cloned().collect();
    fn go(terms: &[Term]) -> Vec<BSum> {
        match terms.len() {
            0 => vec![BSum::Zero],
            1 => term_views(&terms[0])
                .into_iter()
                .map(BSum::Term)
                .collect(),
            n => {
                let mut out = Vec::new();
                for mask in 1u32..((1u32 << n) - 1) {
                    let left: Vec<Term> = (0..n)
                        .filter(|&i| mask & (1 << i) != 0)
                        .map(|i| terms[i].clone())
                        .collect();
                    let right: Vec<Term> = (0..n)
                        .filter(|&i| mask & (1 << i) == 0)
                        .map(|i| terms[i].clone())
                        .collect();
                    for lv in go(&left) {
                        for rv in go(&right) {
                            out.push(BSum::Plus(Box::new(lv.clone()), Box::new(rv)));
                        }
                    }
                }
                out
            }
        }
    }
    go(&terms)
}

/// One rewrite outcome of the literal binary rules at the root of `t`.
/// Besides the in-place replacement, the get rule also returns the values it
/// releases into fresh summands.
fn root_rewrites(t: &BTerm) -> Vec<(BTerm, Vec<Value>)> {
    let mut out = Vec::new();
    match t {
        BTerm::App(usub, f, a) => {
            if let (BTerm::Val(Value::Lambda(l)), BTerm::Val(arg)) = (&**f, &**a) {
                let body_views = term_views(&l.body);
                // one view is enough: the body is carried verbatim
                let body = body_views.into_iter().next().unwrap();
                out.push((
                    BTerm::Down(
                        usub.clone(),
                        Box::new(BTerm::VarSub(
                            VarSubst::singleton(l.binder.clone(), arg.clone()),
                            Box::new(body),
                        )),
                    ),
                    vec![],
                ));
            }
            if let BTerm::Up(vsub, inner) = &**f {
                out.push((
                    BTerm::Up(
                        vsub.clone(),
                        Box::new(BTerm::App(
                            juxtapose_ref_substs(usub, vsub),
                            inner.clone(),
                            Box::new(BTerm::Down(vsub.clone(), a.clone())),
                        )),
                    ),
                    vec![],
                ));
            }
            if let BTerm::Up(vsub, inner) = &**a {
                out.push((
                    BTerm::Up(
                        vsub.clone(),
                        Box::new(BTerm::App(
                            juxtapose_ref_substs(usub, vsub),
                            Box::new(BTerm::Down(vsub.clone(), f.clone())),
                            inner.clone(),
                        )),
                    ),
                    vec![],
                ));
            }
        }
        BTerm::VarSub(sub, body) => match &**body {
            BTerm::Val(Value::Var(x)) => out.push((
                BTerm::Val(sub.get(x).cloned().unwrap_or(Value::Var(x.clone()))),
                vec![],
            )),
            BTerm::Val(Value::Unit) => out.push((BTerm::Val(Value::Unit), vec![])),
            BTerm::Val(Value::Lambda(l)) => out.push((
                BTerm::Val(Value::Lambda(Lambda {
                    binder: l.binder.clone(),
                    ann: l.ann.clone(),
                    body: Box::new(Term::var_sub(sub.clone(), (*l.body).clone())),
                })),
                vec![],
            )),
            BTerm::App(vs, f, a) => out.push((
                BTerm::App(
                    meta_apply_ref_subst(sub, vs),
                    Box::new(BTerm::VarSub(sub.clone(), f.clone())),
                    Box::new(BTerm::VarSub(sub.clone(), a.clone())),
                ),
                vec![],
            )),
            BTerm::Get(r) => out.push((BTerm::Get(r.clone()), vec![])),
            BTerm::Par(l, r) => out.push((
                BTerm::Par(
                    Box::new(BTerm::VarSub(sub.clone(), l.clone())),
                    Box::new(BTerm::VarSub(sub.clone(), r.clone())),
                ),
                vec![],
            )),
            BTerm::Down(vs, inner) => out.push((
                BTerm::Down(
                    meta_apply_ref_subst(sub, vs),
                    Box::new(BTerm::VarSub(sub.clone(), inner.clone())),
                ),
                vec![],
            )),
            BTerm::Up(vs, inner) => out.push((
                BTerm::Up(
                    meta_apply_ref_subst(sub, vs),
                    Box::new(BTerm::VarSub(sub.clone(), inner.clone())),
                ),
                vec![],
            )),
            BTerm::VarSub(inner_sub, inner) => out.push((
                BTerm::VarSub(compose_var_substs(inner_sub, sub), inner.clone()),
                vec![],
            )),
        },
        BTerm::Down(vsub, body) => match &**body {
            BTerm::Val(v) => out.push((BTerm::Val(v.clone()), vec![])),
            BTerm::Par(l, r) => out.push((
                BTerm::Par(
                    Box::new(BTerm::Down(vsub.clone(), l.clone())),
                    Box::new(BTerm::Down(vsub.clone(), r.clone())),
                ),
                vec![],
            )),
            BTerm::Up(usub, inner) => out.push((
                BTerm::Up(
                    usub.clone(),
                    Box::new(BTerm::Down(vsub.clone(), inner.clone())),
                ),
                vec![],
            )),
            BTerm::Down(usub, inner) => out.push((
                BTerm::Down(juxtapose_ref_substs(usub, vsub), inner.clone()),
                vec![],
            )),
            BTerm::App(usub, f, a) => out.push((
                BTerm::App(
                    juxtapose_ref_substs(usub, vsub),
                    Box::new(BTerm::Down(vsub.clone(), f.clone())),
                    Box::new(BTerm::Down(vsub.clone(), a.clone())),
                ),
                vec![],
            )),
            BTerm::Get(r) => {
                let released: Vec<Value> = vsub
                    .get(r)
                    .map(|vs| vs.iter().cloned().collect())
                    .unwrap_or_default();
                out.push((BTerm::Get(r.clone()), released));
            }
            BTerm::VarSub(..) => {}
        },
        BTerm::Par(l, r) => {
            if let BTerm::Up(vsub, inner) = &**l {
                out.push((
                    BTerm::Up(
                        vsub.clone(),
                        Box::new(BTerm::Par(
                            inner.clone(),
                            Box::new(BTerm::Down(vsub.clone(), r.clone())),
                        )),
                    ),
                    vec![],
                ));
            }
        }
        BTerm::Val(_) | BTerm::Get(_) | BTerm::Up(..) => {}
    }
    out
}

/// Rewrites of a summand through the thread and applicative contexts:
/// `(reduct, released values, rebuild-with)` where released values must be
/// wrapped in the same context.
fn summand_rewrites(t: &BTerm, in_thread_context: bool) -> Vec<(BTerm, Vec<BTerm>)> {
    let mut out = Vec::new();
    // rewrite here
    for (new, released) in root_rewrites(t) {
        let released = released.into_iter().map(BTerm::Val).collect();
        out.push((new, released));
    }
    // descend
    match t {
        BTerm::Par(l, r) if in_thread_context => {
            for (new, rel) in summand_rewrites(l, true) {
                out.push((
                    BTerm::Par(Box::new(new), r.clone()),
                    rel.into_iter()
                        .map(|v| BTerm::Par(Box::new(v), r.clone()))
                        .collect(),
                ));
            }
            for (new, rel) in summand_rewrites(r, true) {
                out.push((
                    BTerm::Par(l.clone(), Box::new(new)),
                    rel.into_iter()
                        .map(|v| BTerm::Par(l.clone(), Box::new(v)))
                        .collect(),
                ));
            }
        }
        BTerm::App(s, f, a) => {
            for (new, rel) in summand_rewrites(f, false) {
                out.push((
                    BTerm::App(s.clone(), Box::new(new), a.clone()),
                    rel.into_iter()
                        .map(|v| BTerm::App(s.clone(), Box::new(v), a.clone()))
                        .collect(),
                ));
            }
            for (new, rel) in summand_rewrites(a, false) {
                out.push((
                    BTerm::App(s.clone(), f.clone(), Box::new(new)),
                    rel.into_iter()
                        .map(|v| BTerm::App(s.clone(), f.clone(), Box::new(v)))
                        .collect(),
                ));
            }
        }
        BTerm::Down(s, b) => {
            for (new, rel) in summand_rewrites(b, false) {
                out.push((
                    BTerm::Down(s.clone(), Box::new(new)),
                    rel.into_iter()
                        .map(|v| BTerm::Down(s.clone(), Box::new(v)))
                        .collect(),
                ));
            }
        }
        BTerm::Up(s, b) => {
            for (new, rel) in summand_rewrites(b, false) {
                out.push((
                    BTerm::Up(s.clone(), Box::new(new)),
                    rel.into_iter()
                        .map(|v| BTerm::Up(s.clone(), Box::new(v)))
                        .collect(),
                ));
            }
        }
        _ => {}
    }
    out
}

/// All one-step successors of a sum per the naive semantics.
fn oracle_successors(s: &Sum) -> BTreeSet<Sum> {
    let s = canonicalize(s);
    let mut out = BTreeSet::new();
    for view in sum_views(&s) {
        collect_sum_rewrites(&view, &view, &mut Vec::new(), &mut out);
    }
    out
}

/// Walk the sum tree; at each leaf, rewrite the summand and rebuild the
/// whole sum, appending any released summands at top level. A leaf that is
/// an upward substitution may also drop it (the top rule).
fn collect_sum_rewrites(root: &BSum, cur: &BSum, path: &mut Vec<bool>, out: &mut BTreeSet<Sum>) {
    match cur {
        BSum::Zero => {}
        BSum::Plus(l, r) => {
            path.push(false);
            collect_sum_rewrites(root, l, path, out);
            path.pop();
            path.push(true);
            collect_sum_rewrites(root, r, path, out);
            path.pop();
        }
        BSum::Term(t) => {
            if let BTerm::Up(_, inner) = t {
                let rebuilt = rebuild(root, path, 0, BSum::Term((**inner).clone()));
                out.insert(to_sum(&rebuilt));
            }
            for (new, released) in summand_rewrites(t, true) {
                let mut rebuilt = rebuild(root, path, 0, BSum::Term(new));
                for extra in released {
                    rebuilt = BSum::Plus(Box::new(rebuilt), Box::new(BSum::Term(extra)));
                }
                out.insert(to_sum(&rebuilt));
            }
        }
    }
}

fn rebuild(cur: &BSum, path: &[bool], i: usize, new: BSum) -> BSum {
    if i == path.len() {
        return new;
    }
    match cur {
        BSum::Plus(l, r) => {
            if path[i] {
                BSum::Plus(l.clone(), Box::new(rebuild(r, path, i + 1, new)))
            } else {
                BSum::Plus(Box::new(rebuild(l, path, i + 1, new)), r.clone())
            }
        }
        _ => unreachable!("rebuild path mismatch"),
    }
}

// ---------------------------------------------------------------------------

/// Representative counts grow as n! times the Catalan numbers in the width
/// of a parallel multiset, so the oracle only handles narrow terms. Narrow
/// terms already cover every context shape the engine distinguishes.
fn narrow(s: &Sum) -> bool {
    fn term_ok(t: &Term, nodes: &mut usize) -> bool {
        *nodes += 1;
        if *nodes > 40 {
            return false;
        }
        match t {
            Term::Val(_) | Term::Get(_) => true,
            Term::VarSub(_, b) | Term::Down(_, b) | Term::Up(_, b) => term_ok(b, nodes),
            Term::App(_, f, a) => term_ok(f, nodes) && term_ok(a, nodes),
            Term::Par(cs) => cs.len() <= 4 && cs.iter().all(|c| term_ok(c, nodes)),
        }
    }
    let mut nodes = 0;
    s.len() <= 3 && s.summands().all(|t| term_ok(t, &mut nodes))
}

fn check(s: &Sum) {
    let engine = successors_full(s);
    let naive = oracle_successors(s);
    assert_eq!(
        engine,
        naive,
        "successor sets disagree on {}:\n  engine-only: {:?}\n  oracle-only: {:?}",
        lces_core::surface::print_sum(s),
        engine.difference(&naive).collect::<Vec<_>>(),
        naive.difference(&engine).collect::<Vec<_>>()
    );
}

fn check_src(src: &str) {
    check(&parse_sum(src).unwrap());
}

#[test]
fn oracle_agrees_on_handpicked_terms() {
    for src in [
        "((\\x:Unit. x) *)",
        "[r -> {*}]v get r",
        "[r -> {\\x:Unit. *}]v [r -> {\\x:Unit. x}]v get r",
        "([r -> {*}]^ *) || get r",
        "([r -> {*}]^ *) || get r || *",
        "([r -> {*}]^ *) || ([s -> {*}]^ *)",
        "{x := *}s (get r || x)",
        "[r -> {*}]v (get r || get r || *)",
        "{y := \\x:Unit. x}s {x := *}s (y x)",
        "[r -> {*}]v ([s -> {*}]^ ((\\x:Unit. get s) *))",
        "[r -> {*}]^ get r",
        "get r + [r -> {*}]v get r",
        "((\\x:Unit. x) *) + ([r -> {*}]^ *) + (get r || [s -> {*}]v get s)",
        "(([r -> {*}]^ *) get r)",
        "(get r ([r -> {*}]^ *))[s -> {*}]L",
        "[r -> {*}]v (([s -> {*, \\x:Unit. x}]^ *) || get s || get r)",
    ] {
        check_src(src);
    }
}

#[test]
fn oracle_agrees_on_enumerated_terms() {
    // Exhaustive over the standard two-value menu at depth 2; junction and
    // partition bookkeeping differs genuinely from the binary expansion, so
    // this sweep is the real completeness check for decompose.
    let mut n = 0usize;
    each_term(&EnumOptions::standard(), 2, |t| {
        let s = Sum::singleton(t.clone());
        if narrow(&s) {
            n += 1;
            check(&s);
        }
    });
    assert!(n > 500, "expected a substantial sweep, got {n} terms");
}

#[test]
fn oracle_agrees_on_random_sums() {
    let mut rng = lces_core::Rng::new(0xc0ffee);
    let mut n = 0usize;
    while n < 200 {
        let s = canonicalize(&lces_core::corpus::gen_raw_sum(&mut rng, 2));
        if narrow(&s) && !s.is_empty() {
            n += 1;
            check(&s);
        }
    }
}
