//! The stratified type-and-effect system: reference contexts, subtyping,
//! syntax-directed inference, and the subject-reduction and progress oracles.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::reduction::{self, Mode};
use crate::syntax::{RefName, Sum, Term, Value, VarName};

/// Types. `Behavior` is the opaque type of parallel compositions; it can
/// never be the domain of a function. Arrow types carry the effect the
/// function body may produce.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum TypeExpr {
    Unit,
    Behavior,
    Arrow(Box<TypeExpr>, Effect, Box<TypeExpr>),
    Ref(RefName, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn arrow(dom: TypeExpr, eff: Effect, cod: TypeExpr) -> TypeExpr {
        TypeExpr::Arrow(Box::new(dom), eff, Box::new(cod))
    }

    /// A-types are everything but `Behavior`.
    pub fn is_value_type(&self) -> bool {
        !matches!(self, TypeExpr::Behavior)
    }
}

/// An effect: the set of references a term may read or write.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Effect(BTreeSet<RefName>);

impl Effect {
    pub fn empty() -> Effect {
        Effect(BTreeSet::new())
    }

    pub fn from_refs(rs: impl IntoIterator<Item = RefName>) -> Effect {
        Effect(rs.into_iter().collect())
    }

    pub fn singleton(r: RefName) -> Effect {
        Effect::from_refs([r])
    }

    pub fn union(&self, other: &Effect) -> Effect {
        Effect(self.0.union(&other.0).cloned().collect())
    }

    pub fn insert(&mut self, r: RefName) {
        self.0.insert(r);
    }

    pub fn contains(&self, r: &RefName) -> bool {
        self.0.contains(r)
    }

    pub fn subset_of(&self, other: &Effect) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RefName> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An ordered reference context. The order is the stratification order: each
/// entry's type may mention only earlier references.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct RefContext(Vec<(RefName, TypeExpr)>);

impl RefContext {
    pub fn new() -> RefContext {
        RefContext(Vec::new())
    }

    pub fn from_entries(entries: Vec<(RefName, TypeExpr)>) -> RefContext {
        RefContext(entries)
    }

    pub fn push(&mut self, r: RefName, ty: TypeExpr) {
        self.0.push((r, ty));
    }

    pub fn lookup(&self, r: &RefName) -> Option<&TypeExpr> {
        self.0.iter().find(|(n, _)| n == r).map(|(_, t)| t)
    }

    pub fn contains(&self, r: &RefName) -> bool {
        self.lookup(r).is_some()
    }

    pub fn entries(&self) -> impl Iterator<Item = &(RefName, TypeExpr)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn prefix(&self, n: usize) -> RefContext {
        RefContext(self.0[..n].to_vec())
    }
}

/// A variable context; order is irrelevant, all types are A-types.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VarContext(BTreeMap<VarName, TypeExpr>);

impl VarContext {
    pub fn new() -> VarContext {
        VarContext(BTreeMap::new())
    }

    pub fn lookup(&self, x: &VarName) -> Option<&TypeExpr> {
        self.0.get(x)
    }

    pub fn extended(&self, x: VarName, ty: TypeExpr) -> VarContext {
        let mut m = self.0.clone();
        m.insert(x, ty);
        VarContext(m)
    }
}

/// A typing judgment `R; Gamma |- M : (alpha, e)`.
#[derive(Clone, Debug)]
pub struct Judgment {
    pub refs: RefContext,
    pub vars: VarContext,
    pub ty: TypeExpr,
    pub effect: Effect,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StratificationError {
    pub offending: RefName,
    pub missing: RefName,
}

impl fmt::Display for StratificationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "the type of reference '{}' mentions '{}', which is not declared earlier",
            self.offending, self.missing
        )
    }
}

impl core::error::Error for StratificationError {}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TypeError {
    UnboundVariable(VarName),
    UnboundReference(RefName),
    BehaviorInDomain,
    NotAFunction(TypeExpr),
    ArgumentMismatch { expected: TypeExpr, found: TypeExpr },
    StoredValueMismatch { reference: RefName, expected: TypeExpr, found: TypeExpr },
    EffectfulValue(Effect),
    SumShapeMismatch(TypeExpr, TypeExpr),
    EmptySum,
    IllFormedType(TypeExpr),
}

impl TypeError {
    /// The name of the typing rule whose premise failed.
    pub fn rule(&self) -> &'static str {
        match self {
            TypeError::UnboundVariable(_) => "var",
            TypeError::UnboundReference(_) => "get",
            TypeError::BehaviorInDomain => "lam",
            TypeError::NotAFunction(_) => "app",
            TypeError::ArgumentMismatch { .. } => "app",
            TypeError::StoredValueMismatch { .. } => "subst-r",
            TypeError::EffectfulValue(_) => "subst",
            TypeError::SumShapeMismatch(..) => "sum",
            TypeError::EmptySum => "sum",
            TypeError::IllFormedType(_) => "lam",
        }
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeError::UnboundVariable(x) => write!(f, "unbound variable '{x}'"),
            TypeError::UnboundReference(r) => write!(f, "unbound reference '{r}'"),
            TypeError::BehaviorInDomain => {
                write!(f, "the behavior type B cannot be in the domain of a function")
            }
            TypeError::NotAFunction(t) => write!(f, "expected a function, found {t}"),
            TypeError::ArgumentMismatch { expected, found } => {
                write!(f, "argument has type {found}, expected a subtype of {expected}")
            }
            TypeError::StoredValueMismatch { reference, expected, found } => write!(
                f,
                "value stored for '{reference}' has type {found}, expected a subtype of {expected}"
            ),
            TypeError::EffectfulValue(e) => {
                write!(f, "substituted value must be pure, found effect {e}")
            }
            TypeError::SumShapeMismatch(a, b) => {
                write!(f, "sum branches have incompatible types {a} and {b}")
            }
            TypeError::EmptySum => write!(f, "the empty sum 0 has no type"),
            TypeError::IllFormedType(t) => write!(f, "ill-formed type {t}"),
        }
    }
}

impl core::error::Error for TypeError {}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::print_type(self))
    }
}

// ---------------------------------------------------------------------------
// Stratification and well-formedness
// ---------------------------------------------------------------------------

fn refs_of_type(ty: &TypeExpr, out: &mut BTreeSet<RefName>) {
    match ty {
        TypeExpr::Unit | TypeExpr::Behavior => {}
        TypeExpr::Arrow(dom, eff, cod) => {
            refs_of_type(dom, out);
            for r in eff.iter() {
                out.insert(r.clone());
            }
            refs_of_type(cod, out);
        }
        TypeExpr::Ref(r, content) => {
            out.insert(r.clone());
            refs_of_type(content, out);
        }
    }
}

/// Check the stratification of a reference context: every prefix
/// `R', (r : A)` must have `A` well formed under `R'` alone.
pub fn check_stratification(refs: &RefContext) -> Result<(), StratificationError> {
    for (i, (r, ty)) in refs.entries().enumerate() {
        let prefix = refs.prefix(i);
        let mut mentioned = BTreeSet::new();
        refs_of_type(ty, &mut mentioned);
        for m in mentioned {
            if !prefix.contains(&m) {
                return Err(StratificationError {
                    offending: r.clone(),
                    missing: m,
                });
            }
        }
        // Duplicate declarations violate r not in dom(R').
        if prefix.contains(r) {
            return Err(StratificationError {
                offending: r.clone(),
                missing: r.clone(),
            });
        }
    }
    Ok(())
}

/// `R |- (alpha, e)`: all references appearing in the effect and the type are
/// declared, arrow domains are A-types, and `Ref_r A` entries agree with `R`.
pub fn well_formed(refs: &RefContext, ty: &TypeExpr, eff: &Effect) -> bool {
    eff.iter().all(|r| refs.contains(r)) && type_well_formed(refs, ty)
}

fn type_well_formed(refs: &RefContext, ty: &TypeExpr) -> bool {
    match ty {
        TypeExpr::Unit | TypeExpr::Behavior => true,
        TypeExpr::Arrow(dom, eff, cod) => {
            dom.is_value_type()
                && type_well_formed(refs, dom)
                && eff.iter().all(|r| refs.contains(r))
                && type_well_formed(refs, cod)
        }
        TypeExpr::Ref(r, content) => {
            content.is_value_type()
                && refs.lookup(r).is_some_and(|declared| declared == &**content)
                && type_well_formed(refs, content)
        }
    }
}

// ---------------------------------------------------------------------------
// Subtyping
// ---------------------------------------------------------------------------

/// `R |- alpha <= alpha'` on bare types: reflexivity, plus the arrow rule
/// with contravariant domain and covariant codomain-with-effect.
pub fn subtype_type(refs: &RefContext, a: &TypeExpr, b: &TypeExpr) -> bool {
    if a == b {
        return true;
    }
    match (a, b) {
        (TypeExpr::Arrow(d1, e1, c1), TypeExpr::Arrow(d2, e2, c2)) => {
            subtype_type(refs, d2, d1) && subtype(refs, (c1, e1), (c2, e2))
        }
        _ => false,
    }
}

/// `R |- (alpha, e) <= (alpha', e')`: effect containment (within the context
/// domain) together with the type-level relation. The inclusion is read
/// non-strictly, making the relation reflexive.
pub fn subtype(refs: &RefContext, lhs: (&TypeExpr, &Effect), rhs: (&TypeExpr, &Effect)) -> bool {
    let (a, e) = lhs;
    let (b, e2) = rhs;
    e.subset_of(e2) && e2.iter().all(|r| refs.contains(r)) && subtype_type(refs, a, b)
}

/// The least common supertype of two types of the same shape: effects join
/// pointwise with polarity (union in covariant positions, intersection in
/// contravariant ones). Shape mismatch is an error.
fn join_types(a: &TypeExpr, b: &TypeExpr) -> Result<TypeExpr, TypeError> {
    fn go(a: &TypeExpr, b: &TypeExpr, covariant: bool) -> Result<TypeExpr, TypeError> {
        match (a, b) {
            (TypeExpr::Unit, TypeExpr::Unit) => Ok(TypeExpr::Unit),
            (TypeExpr::Behavior, TypeExpr::Behavior) => Ok(TypeExpr::Behavior),
            (TypeExpr::Ref(r1, c1), TypeExpr::Ref(r2, c2)) if r1 == r2 && c1 == c2 => {
                Ok(a.clone())
            }
            (TypeExpr::Arrow(d1, e1, c1), TypeExpr::Arrow(d2, e2, c2)) => {
                let dom = go(d1, d2, !covariant)?;
                let eff = if covariant {
                    e1.union(e2)
                } else {
                    Effect(e1.0.intersection(&e2.0).cloned().collect())
                };
                let cod = go(c1, c2, covariant)?;
                Ok(TypeExpr::arrow(dom, eff, cod))
            }
            _ => Err(TypeError::SumShapeMismatch(a.clone(), b.clone())),
        }
    }
    go(a, b, true)
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

/// Infer the minimal type and effect of a term. Subsumption is applied only
/// at application arguments, to widen effects past substitution domains, and
/// to join sum branches, which keeps the algorithm syntax-directed.
pub fn infer(refs: &RefContext, vars: &VarContext, t: &Term) -> Result<(TypeExpr, Effect), TypeError> {
    match t {
        Term::Val(v) => infer_value(refs, vars, v),
        Term::VarSub(sub, body) => {
            let mut extended = vars.clone();
            for (x, v) in sub.iter() {
                let (ty, eff) = infer_value(refs, vars, v)?;
                if !eff.is_empty() {
                    return Err(TypeError::EffectfulValue(eff));
                }
                extended = extended.extended(x.clone(), ty);
            }
            infer(refs, &extended, body)
        }
        Term::App(sub, f, a) => {
            check_ref_subst(refs, vars, sub)?;
            let (fty, e2) = infer(refs, vars, f)?;
            let (dom, e1, cod) = match fty {
                TypeExpr::Arrow(d, e, c) => (*d, e, *c),
                other => return Err(TypeError::NotAFunction(other)),
            };
            let (aty, e3) = infer(refs, vars, a)?;
            if !subtype_type(refs, &aty, &dom) {
                return Err(TypeError::ArgumentMismatch {
                    expected: dom,
                    found: aty,
                });
            }
            let mut eff = e1.union(&e2).union(&e3);
            for r in sub.domain() {
                eff.insert(r.clone());
            }
            Ok((cod, eff))
        }
        Term::Get(r) => match refs.lookup(r) {
            Some(ty) => Ok((ty.clone(), Effect::singleton(r.clone()))),
            None => Err(TypeError::UnboundReference(r.clone())),
        },
        Term::Down(sub, body) | Term::Up(sub, body) => {
            check_ref_subst(refs, vars, sub)?;
            let (ty, mut eff) = infer(refs, vars, body)?;
            for r in sub.domain() {
                eff.insert(r.clone());
            }
            Ok((ty, eff))
        }
        Term::Par(cs) => {
            let mut eff = Effect::empty();
            for c in cs {
                let (_, e) = infer(refs, vars, c)?;
                eff = eff.union(&e);
            }
            Ok((TypeExpr::Behavior, eff))
        }
    }
}

fn infer_value(refs: &RefContext, vars: &VarContext, v: &Value) -> Result<(TypeExpr, Effect), TypeError> {
    match v {
        Value::Var(x) => match vars.lookup(x) {
            Some(ty) => Ok((ty.clone(), Effect::empty())),
            None => Err(TypeError::UnboundVariable(x.clone())),
        },
        Value::Unit => Ok((TypeExpr::Unit, Effect::empty())),
        Value::Lambda(l) => {
            if !l.ann.is_value_type() {
                return Err(TypeError::BehaviorInDomain);
            }
            if !type_well_formed(refs, &l.ann) {
                return Err(TypeError::IllFormedType(l.ann.clone()));
            }
            let inner = vars.extended(l.binder.clone(), l.ann.clone());
            let (ty, eff) = infer(refs, &inner, &l.body)?;
            Ok((TypeExpr::arrow(l.ann.clone(), eff, ty), Effect::empty()))
        }
    }
}

/// Every stored value must check, pure, against the declared content type of
/// its reference.
fn check_ref_subst(
    refs: &RefContext,
    vars: &VarContext,
    sub: &crate::syntax::RefSubst,
) -> Result<(), TypeError> {
    for (r, values) in sub.iter() {
        let expected = refs
            .lookup(r)
            .ok_or_else(|| TypeError::UnboundReference(r.clone()))?
            .clone();
        for v in values.iter() {
            let (ty, eff) = infer_value(refs, vars, v)?;
            if !eff.is_empty() {
                return Err(TypeError::EffectfulValue(eff));
            }
            if !subtype_type(refs, &ty, &expected) {
                return Err(TypeError::StoredValueMismatch {
                    reference: r.clone(),
                    expected,
                    found: ty,
                });
            }
        }
    }
    Ok(())
}

/// Infer the type of a sum: all summands must infer types of a common shape;
/// the result joins them and unions the effects.
pub fn infer_sum(refs: &RefContext, vars: &VarContext, s: &Sum) -> Result<(TypeExpr, Effect), TypeError> {
    let mut acc: Option<(TypeExpr, Effect)> = None;
    for t in s.summands() {
        let (ty, eff) = infer(refs, vars, t)?;
        acc = Some(match acc {
            None => (ty, eff),
            Some((t0, e0)) => (join_types(&t0, &ty)?, e0.union(&eff)),
        });
    }
    acc.ok_or(TypeError::EmptySum)
}

// ---------------------------------------------------------------------------
// Subject reduction and progress oracles
// ---------------------------------------------------------------------------

/// One violation found while replaying reduction under the type checker.
#[derive(Clone, Debug)]
pub struct SubjectReductionViolation {
    pub term: Sum,
    pub problem: String,
}

#[derive(Clone, Debug, Default)]
pub struct SubjectReductionReport {
    pub root_type: Option<(TypeExpr, Effect)>,
    pub nodes_checked: usize,
    pub complete: bool,
    pub violations: Vec<SubjectReductionViolation>,
}

impl SubjectReductionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Explore the reduction graph of a typed term within the given limits and
/// assert that every reachable node infers a type-and-effect below the
/// root's under subtyping.
pub fn check_subject_reduction(
    refs: &RefContext,
    start: &Sum,
    mode: Mode,
    max_states: usize,
    max_depth: usize,
) -> Result<SubjectReductionReport, TypeError> {
    let vars = VarContext::new();
    let (ty, eff) = infer_sum(refs, &vars, start)?;
    let graph = reduction::reduction_graph(start, mode, max_states, max_depth);
    let mut report = SubjectReductionReport {
        root_type: Some((ty.clone(), eff.clone())),
        nodes_checked: 0,
        complete: graph.complete,
        violations: Vec::new(),
    };
    for node in &graph.nodes {
        report.nodes_checked += 1;
        match infer_sum(refs, &vars, &node.state) {
            Ok((t2, e2)) => {
                if !subtype(refs, (&t2, &e2), (&ty, &eff)) {
                    report.violations.push(SubjectReductionViolation {
                        term: node.state.clone(),
                        problem: format!("({t2}, {e2}) is not a subtype of ({ty}, {eff})"),
                    });
                }
            }
            Err(err) => report.violations.push(SubjectReductionViolation {
                term: node.state.clone(),
                problem: format!("reduct no longer types: {err}"),
            }),
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ProgressReport {
    /// Progress is stated for A-typed programs; parallel compositions have
    /// type B. The checker accepts both and says so here.
    pub header: &'static str,
    pub conforming: bool,
    pub offending: Vec<Term>,
}

/// Check that a normal form matches the shape guaranteed by progress: every
/// parallel leaf of every summand is a value or a stuck-read application
/// spine.
pub fn check_progress(s: &Sum) -> ProgressReport {
    let mut offending = Vec::new();
    for t in s.summands() {
        let leaves: Vec<&Term> = match t {
            Term::Par(cs) => cs.iter().collect(),
            other => alloc::vec![other],
        };
        for leaf in leaves {
            if !leaf.is_value() && !is_norm_shape(leaf) {
                offending.push(leaf.clone());
            }
        }
    }
    ProgressReport {
        header: "progress is stated for A-typed programs; B-typed parallel compositions are accepted as well",
        conforming: offending.is_empty(),
        offending,
    }
}

/// The grammar of stuck normal terms:
/// `M ::= get r | (M V)[U]L | (V M)[U]L | (M M)[U]L`.
fn is_norm_shape(t: &Term) -> bool {
    match t {
        Term::Get(_) => true,
        Term::App(_, f, a) => {
            let f_ok = f.is_value() || is_norm_shape(f);
            let a_ok = a.is_value() || is_norm_shape(a);
            // At least one side must be a stuck read; two values would be a redex.
            f_ok && a_ok && (is_norm_shape(f) || is_norm_shape(a))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{RefSubst, VarSubst};

    fn r(name: &str) -> RefName {
        RefName::new(name)
    }

    fn unit_ctx() -> RefContext {
        RefContext::from_entries(alloc::vec![(r("r"), TypeExpr::Unit)])
    }

    #[test]
    fn stratification_accepts_layered_context() {
        let ctx = RefContext::from_entries(alloc::vec![
            (r("r"), TypeExpr::Unit),
            (
                r("s"),
                TypeExpr::arrow(TypeExpr::Unit, Effect::singleton(r("r")), TypeExpr::Unit)
            ),
        ]);
        assert!(check_stratification(&ctx).is_ok());
        assert!(check_stratification(&RefContext::new()).is_ok());
    }

    #[test]
    fn stratification_rejects_landin_context() {
        // r : Unit -{r}> Unit is the context of Landin's fixpoint.
        let ctx = RefContext::from_entries(alloc::vec![(
            r("r"),
            TypeExpr::arrow(TypeExpr::Unit, Effect::singleton(r("r")), TypeExpr::Unit),
        )]);
        let err = check_stratification(&ctx).unwrap_err();
        assert_eq!(err.offending, r("r"));
        assert_eq!(err.missing, r("r"));
    }

    #[test]
    fn stratification_rejects_forward_references() {
        // r's type mentions s, declared later
        let ctx = RefContext::from_entries(alloc::vec![
            (
                r("r"),
                TypeExpr::arrow(TypeExpr::Unit, Effect::singleton(r("s")), TypeExpr::Unit)
            ),
            (r("s"), TypeExpr::Unit),
        ]);
        let err = check_stratification(&ctx).unwrap_err();
        assert_eq!(err.offending, r("r"));
        assert_eq!(err.missing, r("s"));
    }

    #[test]
    fn well_formed_checks_effects_and_refs() {
        let ctx = unit_ctx();
        assert!(well_formed(&ctx, &TypeExpr::Unit, &Effect::singleton(r("r"))));
        assert!(!well_formed(
            &ctx,
            &TypeExpr::arrow(TypeExpr::Unit, Effect::singleton(r("s")), TypeExpr::Unit),
            &Effect::empty()
        ));
        assert!(well_formed(&RefContext::new(), &TypeExpr::Behavior, &Effect::empty()));
    }

    #[test]
    fn subtype_examples() {
        let ctx = unit_ctx();
        // effect widening
        assert!(subtype(
            &ctx,
            (&TypeExpr::Unit, &Effect::empty()),
            (&TypeExpr::Unit, &Effect::singleton(r("r")))
        ));
        assert!(!subtype(
            &ctx,
            (&TypeExpr::Unit, &Effect::singleton(r("r"))),
            (&TypeExpr::Unit, &Effect::empty())
        ));
        // a function not obliged to use r
        let pure = TypeExpr::arrow(TypeExpr::Unit, Effect::empty(), TypeExpr::Unit);
        let rful = TypeExpr::arrow(TypeExpr::Unit, Effect::singleton(r("r")), TypeExpr::Unit);
        assert!(subtype_type(&ctx, &pure, &rful));
        assert!(!subtype_type(&ctx, &rful, &pure));
    }

    #[test]
    fn infer_basic_judgments() {
        let ctx = unit_ctx();
        let vars = VarContext::new();
        // get r : (Unit, {r})
        let (ty, eff) = infer(&ctx, &vars, &Term::get("r")).unwrap();
        assert_eq!(ty, TypeExpr::Unit);
        assert_eq!(eff, Effect::singleton(r("r")));
        // * : (Unit, {})
        let (ty, eff) = infer(&ctx, &vars, &Term::unit()).unwrap();
        assert_eq!(ty, TypeExpr::Unit);
        assert!(eff.is_empty());
        // [r -> {*}]v get r : (Unit, {r})
        let t = Term::down(RefSubst::singleton(r("r"), Value::Unit), Term::get("r"));
        let (ty, eff) = infer(&ctx, &vars, &t).unwrap();
        assert_eq!(ty, TypeExpr::Unit);
        assert_eq!(eff, Effect::singleton(r("r")));
    }

    #[test]
    fn infer_rejects_behavior_domain_and_unbound() {
        let ctx = unit_ctx();
        let vars = VarContext::new();
        let bad = Term::Val(Value::lambda(
            VarName::free("x"),
            TypeExpr::Behavior,
            Term::unit(),
        ));
        assert!(matches!(
            infer(&ctx, &vars, &bad),
            Err(TypeError::BehaviorInDomain)
        ));
        assert!(matches!(
            infer(&ctx, &vars, &Term::get("nope")),
            Err(TypeError::UnboundReference(_))
        ));
    }

    #[test]
    fn infer_var_subst_extends_context() {
        let ctx = unit_ctx();
        let vars = VarContext::new();
        let t = Term::var_sub(
            VarSubst::singleton(VarName::free("x"), Value::Unit),
            Term::var("x"),
        );
        let (ty, eff) = infer(&ctx, &vars, &t).unwrap();
        assert_eq!(ty, TypeExpr::Unit);
        assert!(eff.is_empty());
    }

    #[test]
    fn progress_grammar() {
        assert!(check_progress(&Sum::singleton(Term::get("r"))).conforming);
        assert!(check_progress(&Sum::singleton(Term::unit())).conforming);
        // (get r get s)[]L conforms via the third production
        let t = Term::app(Term::get("r"), Term::get("s"));
        assert!(check_progress(&Sum::singleton(t)).conforming);
        // a beta redex does not conform
        let redex = Term::app(
            Term::Val(Value::lambda(VarName::free("x"), TypeExpr::Unit, Term::var("x"))),
            Term::unit(),
        );
        assert!(!check_progress(&Sum::singleton(redex)).conforming);
    }
}
