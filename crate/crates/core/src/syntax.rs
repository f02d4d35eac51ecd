//! Abstract syntax: values, terms and sums, with explicit substitutions for
//! variables and for references, plus canonical forms and the substitution
//! meta-operations.
//!
//! Terms are considered modulo alpha-equivalence and the structural rules
//! (associativity/commutativity of `||`, and idempotent associative
//! commutative `+` with unit `0`). [`canonical_term`] and [`canonicalize`]
//! pick a unique representative of each class, so plain `==` on canonical
//! trees decides equivalence.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::typing::TypeExpr;

/// An interned-ish identifier; cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

/// A canonically named bound variable. The index is assigned by
/// canonicalization from the binder's position (its lambda depth); the
/// surface name is kept only as a printing hint and is ignored by equality
/// and ordering.
#[derive(Clone)]
pub struct BoundVar {
    pub id: u32,
    pub hint: Name,
}

impl BoundVar {
    pub fn new(id: u32, hint: Name) -> BoundVar {
        BoundVar { id, hint }
    }
}

impl PartialEq for BoundVar {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for BoundVar {}
impl PartialOrd for BoundVar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for BoundVar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}
impl fmt::Debug for BoundVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.hint, self.id)
    }
}

/// A term variable: either free (surface-named) or bound by a lambda.
///
/// Explicit substitution domains never bind; after canonicalization they
/// refer to free names only.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum VarName {
    Free(Name),
    Bound(BoundVar),
}

impl VarName {
    pub fn free(s: &str) -> VarName {
        VarName::Free(Name::new(s))
    }

    pub fn hint(&self) -> &Name {
        match self {
            VarName::Free(n) => n,
            VarName::Bound(b) => &b.hint,
        }
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarName::Free(n) => write!(f, "{n}"),
            VarName::Bound(b) => write!(f, "{}#{}", b.hint, b.id),
        }
    }
}

/// A reference name. References are free; there are no reference binders.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RefName(pub Name);

impl RefName {
    pub fn new(s: &str) -> RefName {
        RefName(Name::new(s))
    }
}

impl fmt::Display for RefName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Values: `x | * | \x:A. M`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Value {
    Var(VarName),
    Unit,
    Lambda(Lambda),
}

/// A lambda abstraction. The type annotation on the binder is what makes
/// inference syntax-directed; it never affects reduction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Lambda {
    pub binder: VarName,
    pub ann: TypeExpr,
    pub body: Box<Term>,
}

impl Value {
    pub fn lambda(binder: VarName, ann: TypeExpr, body: Term) -> Value {
        Value::Lambda(Lambda {
            binder,
            ann,
            body: Box::new(body),
        })
    }
}

/// A finite multiset of values, kept as a sorted list.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Multiset(Vec<Value>);

impl Multiset {
    pub fn new(mut values: Vec<Value>) -> Multiset {
        values.sort();
        Multiset(values)
    }

    pub fn singleton(v: Value) -> Multiset {
        Multiset(alloc::vec![v])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Value> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Multiset::new(v)
    }

    /// Multiplicity-respecting inclusion.
    pub fn subset_of(&self, other: &Multiset) -> bool {
        let mut counts: BTreeMap<&Value, isize> = BTreeMap::new();
        for v in &other.0 {
            *counts.entry(v).or_insert(0) += 1;
        }
        for v in &self.0 {
            let c = counts.entry(v).or_insert(0);
            *c -= 1;
            if *c < 0 {
                return false;
            }
        }
        true
    }
}

/// A variable substitution: a finite partial map from variables to values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct VarSubst(BTreeMap<VarName, Value>);

impl VarSubst {
    pub fn new() -> VarSubst {
        VarSubst(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarName, Value)>) -> VarSubst {
        VarSubst(pairs.into_iter().collect())
    }

    pub fn singleton(x: VarName, v: Value) -> VarSubst {
        let mut m = BTreeMap::new();
        m.insert(x, v);
        VarSubst(m)
    }

    pub fn get(&self, x: &VarName) -> Option<&Value> {
        self.0.get(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, &Value)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn insert(&mut self, x: VarName, v: Value) {
        self.0.insert(x, v);
    }
}

/// A reference substitution: a finite partial map from references to
/// multisets of values. Entries with empty multisets are dropped, so
/// "defined with nothing" and "undefined" coincide.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct RefSubst(BTreeMap<RefName, Multiset>);

impl RefSubst {
    pub fn new() -> RefSubst {
        RefSubst(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (RefName, Multiset)>) -> RefSubst {
        let mut m: BTreeMap<RefName, Multiset> = BTreeMap::new();
        for (r, vs) in pairs {
            if !vs.is_empty() {
                match m.remove(&r) {
                    None => {
                        m.insert(r, vs);
                    }
                    Some(prev) => {
                        m.insert(r, prev.union(&vs));
                    }
                }
            }
        }
        RefSubst(m)
    }

    pub fn singleton(r: RefName, v: Value) -> RefSubst {
        RefSubst::from_pairs([(r, Multiset::singleton(v))])
    }

    pub fn get(&self, r: &RefName) -> Option<&Multiset> {
        self.0.get(r)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RefName, &Multiset)> {
        self.0.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &RefName> {
        self.0.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pointwise multiplicity-respecting inclusion.
    pub fn subset_of(&self, other: &RefSubst) -> bool {
        self.0.iter().all(|(r, vs)| match other.get(r) {
            Some(ws) => vs.subset_of(ws),
            None => false,
        })
    }
}

/// Terms. A bare application `(M N)` is `App` with the empty reference
/// substitution. Canonical `Par` is a flattened, sorted multiset with at
/// least two children, none of which is itself a `Par`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Term {
    Val(Value),
    /// `{sigma}s M` — explicit variable substitution.
    VarSub(VarSubst, Box<Term>),
    /// `(M N)[V]L` — application carrying its lambda-substitution.
    App(RefSubst, Box<Term>, Box<Term>),
    /// `get r`.
    Get(RefName),
    /// `[V]v M` — downward reference substitution.
    Down(RefSubst, Box<Term>),
    /// `[V]^ M` — upward reference substitution.
    Up(RefSubst, Box<Term>),
    /// `M || N || ...` — parallel composition.
    Par(Vec<Term>),
}

impl Term {
    pub fn unit() -> Term {
        Term::Val(Value::Unit)
    }

    pub fn var(name: &str) -> Term {
        Term::Val(Value::Var(VarName::free(name)))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(RefSubst::new(), Box::new(f), Box::new(a))
    }

    pub fn app_sub(sub: RefSubst, f: Term, a: Term) -> Term {
        Term::App(sub, Box::new(f), Box::new(a))
    }

    pub fn get(r: &str) -> Term {
        Term::Get(RefName::new(r))
    }

    pub fn down(sub: RefSubst, body: Term) -> Term {
        Term::Down(sub, Box::new(body))
    }

    pub fn up(sub: RefSubst, body: Term) -> Term {
        Term::Up(sub, Box::new(body))
    }

    pub fn var_sub(sub: VarSubst, body: Term) -> Term {
        Term::VarSub(sub, Box::new(body))
    }

    /// A parallel composition of the given children; a single child is
    /// returned as itself.
    pub fn par(children: Vec<Term>) -> Term {
        let mut flat = Vec::new();
        for c in children {
            match c {
                Term::Par(cs) => flat.extend(cs),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => panic!("Term::par of zero children"),
            1 => flat.pop().unwrap(),
            _ => Term::Par(flat),
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Val(_))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Term::Val(v) => Some(v),
            _ => None,
        }
    }
}

/// A sum of terms. The set realizes idempotence, associativity and
/// commutativity of `+`; the empty set is `0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Sum(BTreeSet<Term>);

impl Sum {
    pub fn zero() -> Sum {
        Sum(BTreeSet::new())
    }

    pub fn singleton(t: Term) -> Sum {
        let mut s = BTreeSet::new();
        s.insert(t);
        Sum(s)
    }

    pub fn from_terms(ts: impl IntoIterator<Item = Term>) -> Sum {
        Sum(ts.into_iter().collect())
    }

    pub fn summands(&self) -> impl Iterator<Item = &Term> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, t: Term) {
        self.0.insert(t);
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.0.contains(t)
    }

    /// The summand at the given position in canonical order.
    pub fn nth(&self, k: usize) -> Option<&Term> {
        self.0.iter().nth(k)
    }

    /// If the sum has exactly one summand, that term.
    pub fn as_single(&self) -> Option<&Term> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Free names
// ---------------------------------------------------------------------------

/// Free variables and all references of a term or sum.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeNames {
    pub vars: BTreeSet<VarName>,
    pub refs: BTreeSet<RefName>,
}

/// Free variables (lambda binds; explicit substitution domains do not) and
/// all references occurring anywhere, including in substitution domains.
pub fn free_names(t: &Term) -> FreeNames {
    let mut out = FreeNames::default();
    let mut bound = Vec::new();
    collect_term(t, &mut bound, &mut out);
    out
}

pub fn free_names_sum(s: &Sum) -> FreeNames {
    let mut out = FreeNames::default();
    for t in s.summands() {
        let f = free_names(t);
        out.vars.extend(f.vars);
        out.refs.extend(f.refs);
    }
    out
}

fn collect_value(v: &Value, bound: &mut Vec<VarName>, out: &mut FreeNames) {
    match v {
        Value::Var(x) => {
            if !bound.iter().rev().any(|b| b == x) {
                out.vars.insert(x.clone());
            }
        }
        Value::Unit => {}
        Value::Lambda(l) => {
            bound.push(l.binder.clone());
            collect_term(&l.body, bound, out);
            bound.pop();
        }
    }
}

fn collect_ref_subst(sub: &RefSubst, bound: &mut Vec<VarName>, out: &mut FreeNames) {
    for (r, vs) in sub.iter() {
        out.refs.insert(r.clone());
        for v in vs.iter() {
            collect_value(v, bound, out);
        }
    }
}

fn collect_term(t: &Term, bound: &mut Vec<VarName>, out: &mut FreeNames) {
    match t {
        Term::Val(v) => collect_value(v, bound, out),
        Term::VarSub(sub, body) => {
            for (x, v) in sub.iter() {
                if !bound.iter().rev().any(|b| b == x) {
                    out.vars.insert(x.clone());
                }
                collect_value(v, bound, out);
            }
            collect_term(body, bound, out);
        }
        Term::App(sub, f, a) => {
            collect_ref_subst(sub, bound, out);
            collect_term(f, bound, out);
            collect_term(a, bound, out);
        }
        Term::Get(r) => {
            out.refs.insert(r.clone());
        }
        Term::Down(sub, body) | Term::Up(sub, body) => {
            collect_ref_subst(sub, bound, out);
            collect_term(body, bound, out);
        }
        Term::Par(cs) => {
            for c in cs {
                collect_term(c, bound, out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

// Canonical form:
//  - every binding site gets Bound { id, hint } where the id is the number
//    of binding layers above it: a lambda is one layer, an explicit
//    substitution is one layer per domain entry. Substitution domains bind
//    their body (substitutions are taken modulo alpha), which keeps
//    reduction confluent at the representation level: the name of a spent
//    domain entry can never distinguish two reducts.
//  - Domain entries of one substitution are numbered by trying every
//    assignment and keeping the least resulting tree, which is
//    alpha-invariant by construction; domains are tiny, so the factorial is
//    immaterial.
//  - Bound occurrences with no matching binder in scope (possible only in
//    hand-built trees) are rewritten to fresh free names derived from their
//    hints.
//  - Par spines are flattened and sorted under the derived term order;
//    multisets are sorted. Layer-based indices are independent of sibling
//    order, so sorting after renaming is stable and alpha-equivalent inputs
//    map to identical trees.

struct Canon {
    // unbound bound id -> replacement free name
    dangling: BTreeMap<u32, Name>,
}

fn fresh_free_name(hint: &Name, used: &BTreeSet<Name>) -> Name {
    let mut candidate = hint.as_str().to_owned();
    loop {
        let name = Name::new(&candidate);
        if !used.contains(&name) {
            return name;
        }
        candidate.push('\'');
    }
}

// Bound occurrences with no enclosing lambda binder or substitution domain
// entry of the same name.
fn collect_unbound(t: &Term, scope: &mut Vec<VarName>, out: &mut BTreeMap<u32, Name>) {
    fn value(v: &Value, scope: &mut Vec<VarName>, out: &mut BTreeMap<u32, Name>) {
        match v {
            Value::Var(VarName::Bound(b)) => {
                if !scope.iter().any(|s| s == &VarName::Bound(b.clone())) {
                    out.entry(b.id).or_insert_with(|| b.hint.clone());
                }
            }
            Value::Var(VarName::Free(_)) | Value::Unit => {}
            Value::Lambda(l) => {
                scope.push(l.binder.clone());
                collect_unbound(&l.body, scope, out);
                scope.pop();
            }
        }
    }
    fn ref_subst(sub: &RefSubst, scope: &mut Vec<VarName>, out: &mut BTreeMap<u32, Name>) {
        for (_, vs) in sub.iter() {
            for v in vs.iter() {
                value(v, scope, out);
            }
        }
    }
    match t {
        Term::Val(v) => value(v, scope, out),
        Term::VarSub(sub, body) => {
            for (x, v) in sub.iter() {
                if let VarName::Bound(b) = x {
                    if !scope.iter().any(|s| s == x) {
                        // the domain name itself refers to nothing above; it
                        // only needs a stable rendering if it stays unbound
                        out.entry(b.id).or_insert_with(|| b.hint.clone());
                    }
                }
                value(v, scope, out);
            }
            let n = sub.len();
            for (x, _) in sub.iter() {
                scope.push(x.clone());
            }
            collect_unbound(body, scope, out);
            for _ in 0..n {
                scope.pop();
            }
        }
        Term::App(sub, f, a) => {
            ref_subst(sub, scope, out);
            collect_unbound(f, scope, out);
            collect_unbound(a, scope, out);
        }
        Term::Get(_) => {}
        Term::Down(sub, body) | Term::Up(sub, body) => {
            ref_subst(sub, scope, out);
            collect_unbound(body, scope, out);
        }
        Term::Par(cs) => {
            for c in cs {
                collect_unbound(c, scope, out);
            }
        }
    }
}

/// Canonicalize a single term: alpha-rename binding sites (lambdas and
/// substitution domains) to position indices, rewrite unbound bound names
/// to stable free names, flatten and sort `||` spines.
pub fn canonical_term(t: &Term) -> Term {
    let mut unbound = BTreeMap::new();
    collect_unbound(t, &mut Vec::new(), &mut unbound);
    let mut used: BTreeSet<Name> = BTreeSet::new();
    {
        let frees = free_names(t);
        for v in &frees.vars {
            if let VarName::Free(n) = v {
                used.insert(n.clone());
            }
        }
    }
    let mut canon = Canon {
        dangling: BTreeMap::new(),
    };
    for (id, hint) in unbound {
        let name = fresh_free_name(&hint, &used);
        used.insert(name.clone());
        canon.dangling.insert(id, name);
    }
    canon.term(t, &mut Vec::new(), 0)
}

impl Canon {
    fn lookup(&self, env: &[(VarName, BoundVar)], x: &VarName) -> Option<VarName> {
        for (old, new) in env.iter().rev() {
            if old == x {
                return Some(VarName::Bound(new.clone()));
            }
        }
        match x {
            VarName::Bound(b) => {
                // An unbound bound occurrence; rewrite to its free name.
                let name = self
                    .dangling
                    .get(&b.id)
                    .expect("unbound bound id missing from pre-pass");
                Some(VarName::Free(name.clone()))
            }
            VarName::Free(_) => None,
        }
    }

    fn var(&self, env: &[(VarName, BoundVar)], x: &VarName) -> VarName {
        self.lookup(env, x).unwrap_or_else(|| x.clone())
    }

    fn value(&self, v: &Value, env: &mut Vec<(VarName, BoundVar)>, layers: u32) -> Value {
        match v {
            Value::Var(x) => Value::Var(self.var(env, x)),
            Value::Unit => Value::Unit,
            Value::Lambda(l) => {
                let new = BoundVar::new(layers, l.binder.hint().clone());
                env.push((l.binder.clone(), new.clone()));
                let body = self.term(&l.body, env, layers + 1);
                env.pop();
                Value::Lambda(Lambda {
                    binder: VarName::Bound(new),
                    ann: l.ann.clone(),
                    body: Box::new(body),
                })
            }
        }
    }

    fn ref_subst(&self, sub: &RefSubst, env: &mut Vec<(VarName, BoundVar)>, layers: u32) -> RefSubst {
        RefSubst::from_pairs(sub.iter().map(|(r, vs)| {
            (
                r.clone(),
                Multiset::new(vs.iter().map(|v| self.value(v, env, layers)).collect()),
            )
        }))
    }

    fn term(&self, t: &Term, env: &mut Vec<(VarName, BoundVar)>, layers: u32) -> Term {
        match t {
            Term::Val(v) => Term::Val(self.value(v, env, layers)),
            Term::VarSub(sub, body) => {
                // Values first: the domain scopes over the body only.
                let entries: Vec<(VarName, Value)> = sub
                    .iter()
                    .map(|(x, v)| (x.clone(), self.value(v, env, layers)))
                    .collect();
                let k = entries.len() as u32;
                // Try every id assignment for the domain entries and keep
                // the least tree; this is what makes the numbering
                // alpha-invariant without fixing an order on the old names.
                let mut best: Option<Term> = None;
                let mut perm: Vec<u32> = (0..k).collect();
                loop {
                    let mut renamed = VarSubst::new();
                    for (i, (x, v)) in entries.iter().enumerate() {
                        let id = layers + perm[i as usize];
                        renamed.insert(
                            VarName::Bound(BoundVar::new(id, x.hint().clone())),
                            v.clone(),
                        );
                        env.push((x.clone(), BoundVar::new(id, x.hint().clone())));
                    }
                    let body = self.term(body, env, layers + k);
                    for _ in 0..k {
                        env.pop();
                    }
                    let candidate = Term::VarSub(renamed, Box::new(body));
                    best = Some(match best.take() {
                        None => candidate,
                        Some(prev) => prev.min(candidate),
                    });
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
                best.expect("at least the identity assignment")
            }
            Term::App(sub, f, a) => Term::App(
                self.ref_subst(sub, env, layers),
                Box::new(self.term(f, env, layers)),
                Box::new(self.term(a, env, layers)),
            ),
            Term::Get(r) => Term::Get(r.clone()),
            Term::Down(sub, body) => Term::Down(
                self.ref_subst(sub, env, layers),
                Box::new(self.term(body, env, layers)),
            ),
            Term::Up(sub, body) => Term::Up(
                self.ref_subst(sub, env, layers),
                Box::new(self.term(body, env, layers)),
            ),
            Term::Par(cs) => {
                let mut flat = Vec::new();
                for c in cs {
                    match self.term(c, env, layers) {
                        Term::Par(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                match flat.len() {
                    0 => panic!("empty Par"),
                    1 => flat.pop().unwrap(),
                    _ => Term::Par(flat),
                }
            }
        }
    }
}

/// Next lexicographic permutation in place; false when wrapped around.
fn next_permutation(p: &mut [u32]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        p.sort();
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Alpha-canonicalization: bound names become position-determined, free
/// variables and references are untouched. Alpha-equivalent inputs yield
/// structurally identical outputs.
pub fn alpha_canonicalize(t: &Term) -> Term {
    canonical_term(t)
}

/// Canonicalize a sum: flatten into a set (idempotence of `+`), with every
/// summand canonical. Idempotent.
pub fn canonicalize(s: &Sum) -> Sum {
    Sum::from_terms(s.summands().map(canonical_term))
}

/// Canonicalize each stored value of a reference substitution standalone.
/// Substitutions in scope of a read or application always sit outside any
/// lambda, so this matches how the same values appear inside canonical
/// terms.
pub fn canonical_ref_subst(sub: &RefSubst) -> RefSubst {
    RefSubst::from_pairs(sub.iter().map(|(r, vs)| {
        (
            r.clone(),
            Multiset::new(
                vs.iter()
                    .map(|v| match canonical_term(&Term::Val(v.clone())) {
                        Term::Val(cv) => cv,
                        _ => unreachable!("values canonicalize to values"),
                    })
                    .collect(),
            ),
        )
    }))
}

/// Equality modulo alpha and the structural rules.
pub fn term_equal(a: &Term, b: &Term) -> bool {
    canonical_term(a) == canonical_term(b)
}

/// Equality of sums modulo alpha and the structural rules.
pub fn sum_equal(a: &Sum, b: &Sum) -> bool {
    canonicalize(a) == canonicalize(b)
}

// ---------------------------------------------------------------------------
// Meta-operations on substitutions
// ---------------------------------------------------------------------------

fn max_bound_id_value(v: &Value, acc: &mut u32) {
    match v {
        Value::Var(VarName::Bound(b)) => *acc = (*acc).max(b.id + 1),
        Value::Var(_) | Value::Unit => {}
        Value::Lambda(l) => {
            if let VarName::Bound(b) = &l.binder {
                *acc = (*acc).max(b.id + 1);
            }
            max_bound_id_term(&l.body, acc);
        }
    }
}

fn max_bound_id_term(t: &Term, acc: &mut u32) {
    match t {
        Term::Val(v) => max_bound_id_value(v, acc),
        Term::VarSub(sub, body) => {
            for (x, v) in sub.iter() {
                if let VarName::Bound(b) = x {
                    *acc = (*acc).max(b.id + 1);
                }
                max_bound_id_value(v, acc);
            }
            max_bound_id_term(body, acc);
        }
        Term::App(sub, f, a) => {
            for (_, vs) in sub.iter() {
                for v in vs.iter() {
                    max_bound_id_value(v, acc);
                }
            }
            max_bound_id_term(f, acc);
            max_bound_id_term(a, acc);
        }
        Term::Get(_) => {}
        Term::Down(sub, body) | Term::Up(sub, body) => {
            for (_, vs) in sub.iter() {
                for v in vs.iter() {
                    max_bound_id_value(v, acc);
                }
            }
            max_bound_id_term(body, acc);
        }
        Term::Par(cs) => {
            for c in cs {
                max_bound_id_term(c, acc);
            }
        }
    }
}

/// Rename every occurrence of binder `from` (scope-aware) to `to` in a term.
fn rename_binder_term(t: &Term, from: &VarName, to: &VarName) -> Term {
    match t {
        Term::Val(v) => Term::Val(rename_binder_value(v, from, to)),
        Term::VarSub(sub, body) => Term::VarSub(
            VarSubst::from_pairs(
                sub.iter()
                    .map(|(x, v)| (x.clone(), rename_binder_value(v, from, to))),
            ),
            Box::new(rename_binder_term(body, from, to)),
        ),
        Term::App(sub, f, a) => Term::App(
            rename_binder_ref_subst(sub, from, to),
            Box::new(rename_binder_term(f, from, to)),
            Box::new(rename_binder_term(a, from, to)),
        ),
        Term::Get(r) => Term::Get(r.clone()),
        Term::Down(sub, body) => Term::Down(
            rename_binder_ref_subst(sub, from, to),
            Box::new(rename_binder_term(body, from, to)),
        ),
        Term::Up(sub, body) => Term::Up(
            rename_binder_ref_subst(sub, from, to),
            Box::new(rename_binder_term(body, from, to)),
        ),
        Term::Par(cs) => Term::Par(cs.iter().map(|c| rename_binder_term(c, from, to)).collect()),
    }
}

fn rename_binder_ref_subst(sub: &RefSubst, from: &VarName, to: &VarName) -> RefSubst {
    RefSubst::from_pairs(sub.iter().map(|(r, vs)| {
        (
            r.clone(),
            Multiset::new(vs.iter().map(|v| rename_binder_value(v, from, to)).collect()),
        )
    }))
}

fn rename_binder_value(v: &Value, from: &VarName, to: &VarName) -> Value {
    match v {
        Value::Var(x) if x == from => Value::Var(to.clone()),
        Value::Var(_) | Value::Unit => v.clone(),
        Value::Lambda(l) => {
            if &l.binder == from {
                // Shadowed; stop.
                v.clone()
            } else {
                Value::Lambda(Lambda {
                    binder: l.binder.clone(),
                    ann: l.ann.clone(),
                    body: Box::new(rename_binder_term(&l.body, from, to)),
                })
            }
        }
    }
}

/// The meta-application of a variable substitution to a value:
/// `sigma(lambda x. M) = lambda x. ({sigma}s M)` (capture-avoiding),
/// `sigma(x) = sigma(x)` if defined and `x` otherwise, `sigma(*) = *`.
pub fn meta_apply_value(sub: &VarSubst, v: &Value) -> Value {
    if sub.is_empty() {
        return v.clone();
    }
    match v {
        Value::Var(x) => sub.get(x).cloned().unwrap_or_else(|| v.clone()),
        Value::Unit => Value::Unit,
        Value::Lambda(l) => {
            // Renaming is needed when the binder collides with a free name of
            // the substitution range, or with a domain entry: the pushed
            // substitution must not touch occurrences bound here.
            let mut collides = sub.get(&l.binder).is_some();
            if !collides {
                for (_, w) in sub.iter() {
                    let mut bound = Vec::new();
                    let mut fr = FreeNames::default();
                    collect_value(w, &mut bound, &mut fr);
                    if fr.vars.contains(&l.binder) {
                        collides = true;
                        break;
                    }
                }
            }
            let (binder, body) = if collides {
                let mut next = 0u32;
                if let VarName::Bound(b) = &l.binder {
                    next = next.max(b.id + 1);
                }
                max_bound_id_term(&l.body, &mut next);
                for (x, w) in sub.iter() {
                    if let VarName::Bound(b) = x {
                        next = next.max(b.id + 1);
                    }
                    max_bound_id_value(w, &mut next);
                }
                let fresh = VarName::Bound(BoundVar::new(next, l.binder.hint().clone()));
                (
                    fresh.clone(),
                    rename_binder_term(&l.body, &l.binder, &fresh),
                )
            } else {
                (l.binder.clone(), (*l.body).clone())
            };
            Value::Lambda(Lambda {
                binder,
                ann: l.ann.clone(),
                body: Box::new(Term::VarSub(sub.clone(), Box::new(body))),
            })
        }
    }
}

/// Composition of variable substitutions: the composite first applies
/// `first`, then `second` — `(first, second)(x) = second(first(x))` where
/// `first` is defined, `second(x)` elsewhere. Support is the union of the
/// domains.
pub fn compose_var_substs(first: &VarSubst, second: &VarSubst) -> VarSubst {
    let mut out = BTreeMap::new();
    for (x, v) in first.iter() {
        out.insert(x.clone(), meta_apply_value(second, v));
    }
    for (x, v) in second.iter() {
        out.entry(x.clone()).or_insert_with(|| v.clone());
    }
    VarSubst(out)
}

/// Juxtaposition of reference substitutions: pointwise multiset union.
/// Commutative and associative up to the canonical multiset order.
pub fn juxtapose_ref_substs(a: &RefSubst, b: &RefSubst) -> RefSubst {
    let mut out: BTreeMap<RefName, Multiset> = a.0.clone();
    for (r, vs) in b.iter() {
        match out.remove(r) {
            None => {
                out.insert(r.clone(), vs.clone());
            }
            Some(prev) => {
                out.insert(r.clone(), prev.union(vs));
            }
        }
    }
    RefSubst(out)
}

/// Element-wise meta-application of a variable substitution over a reference
/// substitution, preserving domains and multiplicities.
pub fn meta_apply_ref_subst(sub: &VarSubst, refs: &RefSubst) -> RefSubst {
    RefSubst::from_pairs(refs.iter().map(|(r, vs)| {
        (
            r.clone(),
            Multiset::new(vs.iter().map(|v| meta_apply_value(sub, v)).collect()),
        )
    }))
}
