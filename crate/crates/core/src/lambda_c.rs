//! The source calculus: a weak call-by-value lambda calculus with threads,
//! global cumulative stores, `set` and `get`, together with its translation
//! into the explicit-substitution calculus and the simulation checker.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::reduction::{self};
use crate::syntax::{canonical_term, BoundVar, Multiset, RefName, RefSubst, Term, Value, VarName};
use crate::typing::TypeExpr;

/// Source-calculus values: `x | * | \x:A. M`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum LCValue {
    Var(VarName),
    Unit,
    Lambda(VarName, TypeExpr, Box<LCTerm>),
}

/// Source-calculus terms. Stores are not terms; they live in [`LCProgram`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum LCTerm {
    Val(LCValue),
    App(Box<LCTerm>, Box<LCTerm>),
    Set(RefName, LCValue),
    Get(RefName),
    Par(Vec<LCTerm>),
}

impl LCTerm {
    pub fn unit() -> LCTerm {
        LCTerm::Val(LCValue::Unit)
    }

    pub fn app(f: LCTerm, a: LCTerm) -> LCTerm {
        LCTerm::App(Box::new(f), Box::new(a))
    }

    pub fn is_value(&self) -> bool {
        matches!(self, LCTerm::Val(_))
    }
}

/// A program: a multiset of threads plus the store, canonical under the
/// associativity and commutativity of `||`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct LCProgram {
    pub threads: Vec<LCTerm>,
    pub stores: Vec<(RefName, LCValue)>,
}

impl LCProgram {
    pub fn new(threads: Vec<LCTerm>, stores: Vec<(RefName, LCValue)>) -> LCProgram {
        LCProgram { threads, stores }.canonical()
    }

    /// Flatten thread-level `||`, alpha-canonicalize every thread, sort.
    pub fn canonical(&self) -> LCProgram {
        let mut threads = Vec::new();
        for t in &self.threads {
            flatten_thread(t, &mut threads);
        }
        let mut threads: Vec<LCTerm> = threads.iter().map(|t| lc_canonical(t)).collect();
        threads.sort();
        let mut stores: Vec<(RefName, LCValue)> = self
            .stores
            .iter()
            .map(|(r, v)| (r.clone(), lc_canonical_value(v)))
            .collect();
        stores.sort();
        LCProgram { threads, stores }
    }
}

fn flatten_thread(t: &LCTerm, out: &mut Vec<LCTerm>) {
    match t {
        LCTerm::Par(cs) => {
            for c in cs {
                flatten_thread(c, out);
            }
        }
        other => out.push(other.clone()),
    }
}

// ---------------------------------------------------------------------------
// Alpha-canonicalization (mirrors the core scheme: binder id = lambda depth)
// ---------------------------------------------------------------------------

fn lc_canonical(t: &LCTerm) -> LCTerm {
    lc_canon_term(t, &mut Vec::new(), 0)
}

fn lc_canonical_value(v: &LCValue) -> LCValue {
    lc_canon_value(v, &mut Vec::new(), 0)
}

fn lc_canon_value(v: &LCValue, env: &mut Vec<(VarName, BoundVar)>, depth: u32) -> LCValue {
    match v {
        LCValue::Var(x) => {
            for (old, new) in env.iter().rev() {
                if old == x {
                    return LCValue::Var(VarName::Bound(new.clone()));
                }
            }
            LCValue::Var(x.clone())
        }
        LCValue::Unit => LCValue::Unit,
        LCValue::Lambda(binder, ann, body) => {
            let new = BoundVar::new(depth, binder.hint().clone());
            env.push((binder.clone(), new.clone()));
            let body = lc_canon_term(body, env, depth + 1);
            env.pop();
            LCValue::Lambda(VarName::Bound(new), ann.clone(), Box::new(body))
        }
    }
}

fn lc_canon_term(t: &LCTerm, env: &mut Vec<(VarName, BoundVar)>, depth: u32) -> LCTerm {
    match t {
        LCTerm::Val(v) => LCTerm::Val(lc_canon_value(v, env, depth)),
        LCTerm::App(f, a) => LCTerm::App(
            Box::new(lc_canon_term(f, env, depth)),
            Box::new(lc_canon_term(a, env, depth)),
        ),
        LCTerm::Set(r, v) => LCTerm::Set(r.clone(), lc_canon_value(v, env, depth)),
        LCTerm::Get(r) => LCTerm::Get(r.clone()),
        LCTerm::Par(cs) => {
            let mut flat = Vec::new();
            for c in cs {
                match lc_canon_term(c, env, depth) {
                    LCTerm::Par(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            flat.sort();
            match flat.len() {
                0 => panic!("empty Par"),
                1 => flat.pop().unwrap(),
                _ => LCTerm::Par(flat),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

fn max_bound_id_lc(t: &LCTerm, acc: &mut u32) {
    match t {
        LCTerm::Val(v) => max_bound_id_lc_value(v, acc),
        LCTerm::App(f, a) => {
            max_bound_id_lc(f, acc);
            max_bound_id_lc(a, acc);
        }
        LCTerm::Set(_, v) => max_bound_id_lc_value(v, acc),
        LCTerm::Get(_) => {}
        LCTerm::Par(cs) => {
            for c in cs {
                max_bound_id_lc(c, acc);
            }
        }
    }
}

fn max_bound_id_lc_value(v: &LCValue, acc: &mut u32) {
    match v {
        LCValue::Var(VarName::Bound(b)) => *acc = (*acc).max(b.id + 1),
        LCValue::Var(_) | LCValue::Unit => {}
        LCValue::Lambda(binder, _, body) => {
            if let VarName::Bound(b) = binder {
                *acc = (*acc).max(b.id + 1);
            }
            max_bound_id_lc(body, acc);
        }
    }
}

fn lc_value_frees(v: &LCValue, bound: &mut Vec<VarName>, out: &mut BTreeSet<VarName>) {
    match v {
        LCValue::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        LCValue::Unit => {}
        LCValue::Lambda(binder, _, body) => {
            bound.push(binder.clone());
            lc_term_frees(body, bound, out);
            bound.pop();
        }
    }
}

fn lc_term_frees(t: &LCTerm, bound: &mut Vec<VarName>, out: &mut BTreeSet<VarName>) {
    match t {
        LCTerm::Val(v) => lc_value_frees(v, bound, out),
        LCTerm::App(f, a) => {
            lc_term_frees(f, bound, out);
            lc_term_frees(a, bound, out);
        }
        LCTerm::Set(_, v) => lc_value_frees(v, bound, out),
        LCTerm::Get(_) => {}
        LCTerm::Par(cs) => {
            for c in cs {
                lc_term_frees(c, bound, out);
            }
        }
    }
}

/// Capture-avoiding meta-substitution, the ordinary beta of the source
/// calculus.
fn lc_subst(t: &LCTerm, x: &VarName, v: &LCValue) -> LCTerm {
    match t {
        LCTerm::Val(w) => LCTerm::Val(lc_subst_value(w, x, v)),
        LCTerm::App(f, a) => LCTerm::App(
            Box::new(lc_subst(f, x, v)),
            Box::new(lc_subst(a, x, v)),
        ),
        LCTerm::Set(r, w) => LCTerm::Set(r.clone(), lc_subst_value(w, x, v)),
        LCTerm::Get(r) => LCTerm::Get(r.clone()),
        LCTerm::Par(cs) => LCTerm::Par(cs.iter().map(|c| lc_subst(c, x, v)).collect()),
    }
}

fn lc_subst_value(w: &LCValue, x: &VarName, v: &LCValue) -> LCValue {
    match w {
        LCValue::Var(y) if y == x => v.clone(),
        LCValue::Var(_) | LCValue::Unit => w.clone(),
        LCValue::Lambda(binder, ann, body) => {
            if binder == x {
                return w.clone();
            }
            let mut frees = BTreeSet::new();
            lc_value_frees(v, &mut Vec::new(), &mut frees);
            if frees.contains(binder) {
                let mut next = 0;
                max_bound_id_lc(body, &mut next);
                max_bound_id_lc_value(v, &mut next);
                if let VarName::Bound(b) = binder {
                    next = next.max(b.id + 1);
                }
                let fresh = VarName::Bound(BoundVar::new(next, binder.hint().clone()));
                let renamed = lc_subst(body, binder, &LCValue::Var(fresh.clone()));
                LCValue::Lambda(fresh, ann.clone(), Box::new(lc_subst(&renamed, x, v)))
            } else {
                LCValue::Lambda(binder.clone(), ann.clone(), Box::new(lc_subst(body, x, v)))
            }
        }
    }
}

enum LcRedex {
    Beta,
    SetFire,
    GetRead,
}

/// Weak call-by-value positions: both sides of an application, never under a
/// lambda or inside an embedded parallel composition.
fn lc_sites(t: &LCTerm, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, LcRedex)>) {
    match t {
        LCTerm::Val(_) | LCTerm::Par(_) => {}
        LCTerm::Get(_) => out.push((path.clone(), LcRedex::GetRead)),
        LCTerm::Set(_, _) => out.push((path.clone(), LcRedex::SetFire)),
        LCTerm::App(f, a) => {
            if matches!(&**f, LCTerm::Val(LCValue::Lambda(..))) && a.is_value() {
                out.push((path.clone(), LcRedex::Beta));
            }
            path.push(0);
            lc_sites(f, path, out);
            path.pop();
            path.push(1);
            lc_sites(a, path, out);
            path.pop();
        }
    }
}

fn lc_subterm<'a>(t: &'a LCTerm, path: &[usize]) -> &'a LCTerm {
    let mut cur = t;
    for &i in path {
        cur = match cur {
            LCTerm::App(f, a) => {
                if i == 0 {
                    f
                } else {
                    a
                }
            }
            _ => unreachable!("bad lc path"),
        };
    }
    cur
}

fn lc_replace(t: &LCTerm, path: &[usize], new: LCTerm) -> LCTerm {
    match path.split_first() {
        None => new,
        Some((&i, rest)) => match t {
            LCTerm::App(f, a) => {
                if i == 0 {
                    LCTerm::App(Box::new(lc_replace(f, rest, new)), a.clone())
                } else {
                    LCTerm::App(f.clone(), Box::new(lc_replace(a, rest, new)))
                }
            }
            _ => unreachable!("bad lc path"),
        },
    }
}

/// All one-step reducts: beta in any thread at any weak call-by-value
/// position; `set(r,V)` turns to `*` and adds a store; `get(r)` picks any
/// stored value, leaving the store in place.
pub fn lc_successors(p: &LCProgram) -> BTreeSet<LCProgram> {
    let p = p.canonical();
    let mut out = BTreeSet::new();
    for (i, thread) in p.threads.iter().enumerate() {
        let mut sites = Vec::new();
        lc_sites(thread, &mut Vec::new(), &mut sites);
        for (path, redex) in sites {
            let node = lc_subterm(thread, &path);
            match redex {
                LcRedex::Beta => {
                    let (binder, body, arg) = match node {
                        LCTerm::App(f, a) => match (&**f, &**a) {
                            (LCTerm::Val(LCValue::Lambda(b, _, body)), LCTerm::Val(v)) => {
                                (b.clone(), (**body).clone(), v.clone())
                            }
                            _ => unreachable!(),
                        },
                        _ => unreachable!(),
                    };
                    let reduct = lc_subst(&body, &binder, &arg);
                    let mut threads = p.threads.clone();
                    threads[i] = lc_replace(thread, &path, reduct);
                    out.insert(LCProgram::new(threads, p.stores.clone()));
                }
                LcRedex::SetFire => {
                    let (r, v) = match node {
                        LCTerm::Set(r, v) => (r.clone(), v.clone()),
                        _ => unreachable!(),
                    };
                    let mut threads = p.threads.clone();
                    threads[i] = lc_replace(thread, &path, LCTerm::unit());
                    let mut stores = p.stores.clone();
                    stores.push((r, v));
                    out.insert(LCProgram::new(threads, stores));
                }
                LcRedex::GetRead => {
                    let r = match node {
                        LCTerm::Get(r) => r.clone(),
                        _ => unreachable!(),
                    };
                    for (sr, sv) in &p.stores {
                        if sr == &r {
                            let mut threads = p.threads.clone();
                            threads[i] =
                                lc_replace(thread, &path, LCTerm::Val(sv.clone()));
                            out.insert(LCProgram::new(threads, p.stores.clone()));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Bounded breadth-first exploration of the source-calculus reduction.
pub fn lc_reduction_graph(
    p: &LCProgram,
    max_states: usize,
    max_depth: usize,
) -> (Vec<LCProgram>, Vec<(usize, usize)>, bool) {
    use alloc::collections::BTreeMap;
    use alloc::collections::VecDeque;
    let start = p.canonical();
    let mut nodes = alloc::vec![start.clone()];
    let mut depths = alloc::vec![0usize];
    let mut edges = Vec::new();
    let mut index: BTreeMap<LCProgram, usize> = BTreeMap::new();
    index.insert(start, 0);
    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);
    let mut complete = true;
    while let Some(i) = queue.pop_front() {
        if depths[i] >= max_depth {
            complete = false;
            continue;
        }
        let succs = lc_successors(&nodes[i].clone());
        for q in succs {
            let j = match index.get(&q) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= max_states {
                        complete = false;
                        continue;
                    }
                    let j = nodes.len();
                    nodes.push(q.clone());
                    depths.push(depths[i] + 1);
                    index.insert(q, j);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((i, j));
        }
    }
    (nodes, edges, complete)
}

// ---------------------------------------------------------------------------
// Translation
// ---------------------------------------------------------------------------

/// Translate a program: the store becomes a reference substitution fed to
/// every application and read at top level; `set(r,V)` has no target
/// construct and is encoded as `((\x:Unit. [r -> {V}]^ *) *)`.
pub fn translate(p: &LCProgram) -> Term {
    let p = p.canonical();
    let store_subst = RefSubst::from_pairs(
        p.stores
            .iter()
            .map(|(r, v)| (r.clone(), Multiset::singleton(translate_value(v)))),
    );
    let threads: Vec<Term> = p
        .threads
        .iter()
        .map(|t| translate_top(t, &store_subst))
        .collect();
    canonical_term(&Term::par(threads))
}

fn translate_top(t: &LCTerm, store: &RefSubst) -> Term {
    match t {
        LCTerm::Val(v) => Term::Val(translate_value(v)),
        // The encoding is an application, so like any application at top
        // level it carries the store substitution: this is the downward
        // normal form of the store fed to the encoded set.
        LCTerm::Set(r, v) => match encode_set(r, translate_value(v)) {
            Term::App(_, f, a) => Term::App(store.clone(), f, a),
            _ => unreachable!("the set encoding is an application"),
        },
        LCTerm::App(f, a) => Term::app_sub(
            store.clone(),
            translate_top(f, store),
            translate_top(a, store),
        ),
        LCTerm::Get(r) => Term::down(store.clone(), Term::Get(r.clone())),
        LCTerm::Par(cs) => Term::par(cs.iter().map(|c| translate_top(c, store)).collect()),
    }
}

/// Inside values nothing is annotated with the store: the downward
/// structural rules do not cross a lambda.
fn translate_inner(t: &LCTerm) -> Term {
    match t {
        LCTerm::Val(v) => Term::Val(translate_value(v)),
        LCTerm::Set(r, v) => encode_set(r, translate_value(v)),
        LCTerm::App(f, a) => Term::app(translate_inner(f), translate_inner(a)),
        LCTerm::Get(r) => Term::Get(r.clone()),
        LCTerm::Par(cs) => Term::par(cs.iter().map(translate_inner).collect()),
    }
}

fn translate_value(v: &LCValue) -> Value {
    match v {
        LCValue::Var(x) => Value::Var(x.clone()),
        LCValue::Unit => Value::Unit,
        LCValue::Lambda(binder, ann, body) => Value::Lambda(crate::syntax::Lambda {
            binder: binder.clone(),
            ann: ann.clone(),
            body: Box::new(translate_inner(body)),
        }),
    }
}

fn encode_set(r: &RefName, v: Value) -> Term {
    Term::app(
        Term::Val(Value::lambda(
            VarName::free("x"),
            TypeExpr::Unit,
            Term::up(RefSubst::singleton(r.clone(), v), Term::unit()),
        )),
        Term::unit(),
    )
}

// ---------------------------------------------------------------------------
// The substitution relation
// ---------------------------------------------------------------------------

/// Full meta-application of a variable substitution to a term, recursing
/// under binders; this is the reference substitution discharge the relation
/// below uses for pending stacks frozen under lambdas.
fn meta_subst_term(sub: &crate::syntax::VarSubst, t: &Term) -> Term {
    use crate::syntax::{compose_var_substs, meta_apply_ref_subst, meta_apply_value};
    match t {
        Term::Val(v) => match meta_apply_value(sub, v) {
            // meta_apply_value freezes the substitution under a lambda as an
            // explicit node; keep discharging it.
            Value::Lambda(l) => {
                let body = match *l.body {
                    Term::VarSub(inner, core) => meta_subst_term(&inner, &core),
                    other => other,
                };
                Term::Val(Value::Lambda(crate::syntax::Lambda {
                    binder: l.binder,
                    ann: l.ann,
                    body: Box::new(body),
                }))
            }
            other => Term::Val(other),
        },
        Term::VarSub(inner, body) => {
            meta_subst_term(&compose_var_substs(inner, sub), body)
        }
        Term::App(vs, f, a) => Term::app_sub(
            meta_apply_ref_subst(sub, vs),
            meta_subst_term(sub, f),
            meta_subst_term(sub, a),
        ),
        Term::Get(r) => Term::Get(r.clone()),
        Term::Down(vs, b) => Term::down(meta_apply_ref_subst(sub, vs), meta_subst_term(sub, b)),
        Term::Up(vs, b) => Term::up(meta_apply_ref_subst(sub, vs), meta_subst_term(sub, b)),
        Term::Par(cs) => Term::par(cs.iter().map(|c| meta_subst_term(sub, c)).collect()),
    }
}

/// Binder correspondence between the two sides; the left term's extra
/// substitution layers shift its canonical indices, so occurrences are
/// compared through this map rather than by raw index.
type AlphaEnv = Vec<(VarName, VarName)>;

fn related_vars(env: &AlphaEnv, x: &VarName, y: &VarName) -> bool {
    for (a, b) in env.iter().rev() {
        if a == x || b == y {
            return a == x && b == y;
        }
    }
    x == y
}

/// The relation identifying terms up to pending variable substitutions
/// frozen under lambdas: base cases are syntactic, compound cases are
/// component-wise, and a lambda body may first strip a head stack of
/// explicit substitutions and discharge it by meta-application.
pub fn subst_related(m: &Term, n: &Term) -> bool {
    related_terms(&canonical_term(m), &canonical_term(n), &mut Vec::new())
}

fn related_terms(m: &Term, n: &Term, env: &mut AlphaEnv) -> bool {
    match (m, n) {
        (Term::Val(a), Term::Val(b)) => related_values(a, b, env),
        (Term::Get(r), Term::Get(s)) => r == s,
        (Term::VarSub(s1, b1), Term::VarSub(s2, b2)) => {
            if s1.len() != s2.len() {
                return false;
            }
            // Domains bind; pair the entries by rank, relate the values in
            // the outer scope, then the bodies under the pairing.
            let e1: Vec<_> = s1.iter().collect();
            let e2: Vec<_> = s2.iter().collect();
            for ((_, v1), (_, v2)) in e1.iter().zip(e2.iter()) {
                if !related_values(v1, v2, env) {
                    return false;
                }
            }
            for ((x1, _), (x2, _)) in e1.iter().zip(e2.iter()) {
                env.push(((*x1).clone(), (*x2).clone()));
            }
            let out = related_terms(b1, b2, env);
            for _ in 0..e1.len() {
                env.pop();
            }
            out
        }
        (Term::App(v1, f1, a1), Term::App(v2, f2, a2)) => {
            related_ref_substs(v1, v2, env)
                && related_terms(f1, f2, env)
                && related_terms(a1, a2, env)
        }
        (Term::Down(v1, b1), Term::Down(v2, b2)) | (Term::Up(v1, b1), Term::Up(v2, b2)) => {
            related_ref_substs(v1, v2, env) && related_terms(b1, b2, env)
        }
        (Term::Par(cs1), Term::Par(cs2)) => {
            cs1.len() == cs2.len() && match_multiset_env(cs1, cs2, env, &related_terms)
        }
        _ => false,
    }
}

fn related_values(a: &Value, b: &Value, env: &mut AlphaEnv) -> bool {
    match (a, b) {
        (Value::Var(x), Value::Var(y)) => related_vars(env, x, y),
        (Value::Unit, Value::Unit) => true,
        (Value::Lambda(l1), Value::Lambda(l2)) => {
            if l1.ann != l2.ann {
                return false;
            }
            env.push((l1.binder.clone(), l2.binder.clone()));
            // Strip some head stack of explicit substitutions from the left
            // body, discharge it innermost-first, and relate the residue.
            let mut stack = Vec::new();
            let mut core: &Term = &l1.body;
            let out = loop {
                if related_after_discharge(&stack, core, &l2.body, env) {
                    break true;
                }
                match core {
                    Term::VarSub(s, inner) => {
                        stack.push(s.clone());
                        core = inner;
                    }
                    _ => break false,
                }
            };
            env.pop();
            out
        }
        _ => false,
    }
}

fn related_after_discharge(
    stack: &[crate::syntax::VarSubst],
    core: &Term,
    target: &Term,
    env: &mut AlphaEnv,
) -> bool {
    let mut t = core.clone();
    for sub in stack.iter().rev() {
        t = meta_subst_term(sub, &t);
    }
    // Only re-sort parallel spines: a full canonicalization would rename the
    // enclosing binders' occurrences, which are dangling from the body's
    // standalone point of view.
    related_terms(&sort_pars(&t), target, env)
}

fn sort_pars(t: &Term) -> Term {
    match t {
        Term::Val(Value::Lambda(l)) => Term::Val(Value::Lambda(crate::syntax::Lambda {
            binder: l.binder.clone(),
            ann: l.ann.clone(),
            body: Box::new(sort_pars(&l.body)),
        })),
        Term::Val(_) | Term::Get(_) => t.clone(),
        Term::VarSub(s, b) => Term::var_sub(s.clone(), sort_pars(b)),
        Term::App(s, f, a) => Term::app_sub(s.clone(), sort_pars(f), sort_pars(a)),
        Term::Down(s, b) => Term::down(s.clone(), sort_pars(b)),
        Term::Up(s, b) => Term::up(s.clone(), sort_pars(b)),
        Term::Par(cs) => {
            let mut sorted: Vec<Term> = cs.iter().map(sort_pars).collect();
            sorted.sort();
            Term::par(sorted)
        }
    }
}

fn related_ref_substs(a: &RefSubst, b: &RefSubst, env: &mut AlphaEnv) -> bool {
    let da: Vec<_> = a.iter().collect();
    let db: Vec<_> = b.iter().collect();
    if da.len() != db.len() {
        return false;
    }
    da.iter().zip(db.iter()).all(|((r1, vs1), (r2, vs2))| {
        r1 == r2 && {
            let xs: Vec<Term> = vs1.iter().map(|v| Term::Val(v.clone())).collect();
            let ys: Vec<Term> = vs2.iter().map(|v| Term::Val(v.clone())).collect();
            xs.len() == ys.len() && match_multiset_env(&xs, &ys, env, &related_terms)
        }
    })
}

/// Perfect matching by backtracking; multisets here are tiny.
fn match_multiset_env(
    xs: &[Term],
    ys: &[Term],
    env: &mut AlphaEnv,
    related: &dyn Fn(&Term, &Term, &mut AlphaEnv) -> bool,
) -> bool {
    fn go(
        xs: &[Term],
        used: &mut [bool],
        ys: &[Term],
        env: &mut AlphaEnv,
        related: &dyn Fn(&Term, &Term, &mut AlphaEnv) -> bool,
        i: usize,
    ) -> bool {
        if i == xs.len() {
            return true;
        }
        for j in 0..ys.len() {
            if !used[j] && related(&xs[i], &ys[j], env) {
                used[j] = true;
                if go(xs, used, ys, env, related, i + 1) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    let mut used = alloc::vec![false; ys.len()];
    go(xs, &mut used, ys, env, related, 0)
}

// ---------------------------------------------------------------------------
// The simulation checker
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimulationFailure {
    pub source: LCProgram,
    pub target: LCProgram,
    pub translated_target: Term,
}

#[derive(Clone, Debug)]
pub struct SimulationReport {
    pub edges_checked: usize,
    pub failures: Vec<SimulationFailure>,
    /// False when the source-calculus exploration hit its limits.
    pub complete: bool,
}

impl SimulationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "simulation: {} edges checked, {} failures{}",
            self.edges_checked,
            self.failures.len(),
            if self.complete { "" } else { " (exploration truncated)" }
        )
    }
}

/// For every source edge `P -> Q` reachable within the budget, search the
/// translated side for an `M` with `translate(P) ->nd* M` related to
/// `translate(Q)`.
pub fn check_simulation(p: &LCProgram, step_budget: usize) -> SimulationReport {
    let (nodes, edges, complete) = lc_reduction_graph(p, 512, step_budget);
    let mut report = SimulationReport {
        edges_checked: 0,
        failures: Vec::new(),
        complete,
    };
    // Group edges by source so one breadth-first search covers all its
    // targets.
    for (i, source) in nodes.iter().enumerate() {
        let targets: Vec<usize> = edges
            .iter()
            .filter(|(from, _)| *from == i)
            .map(|(_, to)| *to)
            .collect();
        if targets.is_empty() {
            continue;
        }
        let translated_source = translate(source);
        let mut wanted: Vec<(usize, Term)> = targets
            .iter()
            .map(|&j| (j, translate(&nodes[j])))
            .collect();
        report.edges_checked += wanted.len();

        let mut frontier = alloc::vec![canonical_term(&translated_source)];
        let mut seen: BTreeSet<Term> = frontier.iter().cloned().collect();
        wanted.retain(|(_, q)| !frontier.iter().any(|m| subst_related(m, q)));
        let mut depth = 0;
        while !wanted.is_empty() && depth < step_budget && !frontier.is_empty() {
            let mut next = Vec::new();
            for m in &frontier {
                for succ in reduction::successors_nd(m) {
                    if seen.insert(succ.clone()) {
                        wanted.retain(|(_, q)| !subst_related(&succ, q));
                        next.push(succ);
                    }
                }
                if seen.len() > 50_000 {
                    break;
                }
            }
            frontier = next;
            depth += 1;
        }
        for (j, q) in wanted {
            report.failures.push(SimulationFailure {
                source: source.clone(),
                target: nodes[j].clone(),
                translated_target: q,
            });
        }
    }
    report
}
