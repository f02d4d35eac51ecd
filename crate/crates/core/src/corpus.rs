//! Seeded generation of well-typed closed terms and source-calculus
//! programs, plus exhaustive enumeration of small terms over a fixed
//! constructor menu. The meta suites and the acceptance tests draw their
//! corpora from here; everything is deterministic in the seed.

use alloc::vec::Vec;

use crate::lambda_c::{LCProgram, LCTerm, LCValue};
use crate::rng::Rng;
use crate::syntax::{Multiset, RefName, RefSubst, Sum, Term, Value, VarName, VarSubst};
use crate::typing::{check_stratification, infer_sum, Effect, RefContext, TypeExpr, VarContext};

/// A stratified reference context with up to `max_refs` references whose
/// types are drawn from unit and unit-level arrows over earlier references.
pub fn gen_ref_context(rng: &mut Rng, max_refs: usize) -> RefContext {
    let names = ["r", "s", "t"];
    let n = 1 + rng.below(max_refs.max(1).min(names.len()));
    let mut ctx = RefContext::new();
    for (i, name) in names.iter().take(n).enumerate() {
        let ty = match rng.below(3) {
            0 => TypeExpr::Unit,
            1 => TypeExpr::arrow(TypeExpr::Unit, Effect::empty(), TypeExpr::Unit),
            _ => {
                // an arrow allowed to use an earlier reference
                let eff = if i > 0 && rng.chance(1, 2) {
                    Effect::singleton(RefName::new(names[rng.below(i)]))
                } else {
                    Effect::empty()
                };
                TypeExpr::arrow(TypeExpr::Unit, eff, TypeExpr::Unit)
            }
        };
        ctx.push(RefName::new(name), ty);
    }
    debug_assert!(check_stratification(&ctx).is_ok());
    ctx
}

/// A canonical inhabitant of an A-type.
pub fn inhabitant(ty: &TypeExpr) -> Value {
    match ty {
        TypeExpr::Unit => Value::Unit,
        TypeExpr::Arrow(dom, _, cod) => Value::lambda(
            VarName::free("x"),
            (**dom).clone(),
            inhabitant_term(cod),
        ),
        // Reference and behavior types have no closed values; the generators
        // never request them.
        TypeExpr::Ref(..) | TypeExpr::Behavior => Value::Unit,
    }
}

fn inhabitant_term(ty: &TypeExpr) -> Term {
    match ty {
        TypeExpr::Behavior => Term::par(alloc::vec![Term::unit(), Term::unit()]),
        other => Term::Val(inhabitant(other)),
    }
}

/// A value of the given type, usually small, occasionally reading a
/// reference inside a lambda body when the type's effect allows it.
pub fn gen_value_of(rng: &mut Rng, refs: &RefContext, ty: &TypeExpr, depth: usize) -> Value {
    match ty {
        TypeExpr::Unit => Value::Unit,
        TypeExpr::Arrow(dom, eff, cod) => {
            let body = if depth > 0 && rng.chance(1, 3) {
                // a read the arrow's effect permits
                let allowed: Vec<&RefName> = eff
                    .iter()
                    .filter(|r| refs.lookup(r) == Some(&**cod))
                    .collect();
                if allowed.is_empty() {
                    inhabitant_term(cod)
                } else {
                    Term::Get(allowed[rng.below(allowed.len())].clone())
                }
            } else if depth > 0 && rng.chance(1, 3) {
                // an application inside the body
                let inner = gen_value_of(rng, refs, &TypeExpr::arrow(TypeExpr::Unit, eff.clone(), (**cod).clone()), depth - 1);
                Term::app(Term::Val(inner), Term::unit())
            } else {
                inhabitant_term(cod)
            };
            Value::lambda(VarName::free("x"), (**dom).clone(), body)
        }
        TypeExpr::Ref(..) | TypeExpr::Behavior => inhabitant(ty),
    }
}

/// A reference substitution whose stored values fit the declared content
/// types. Entries use distinct references and at most two values each:
/// wider stores multiply the branching of every read they reach.
pub fn gen_ref_subst(rng: &mut Rng, refs: &RefContext, max_entries: usize) -> RefSubst {
    let entries: Vec<_> = refs.entries().collect();
    if entries.is_empty() {
        return RefSubst::new();
    }
    let n = (1 + rng.below(max_entries.max(1))).min(entries.len());
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < n {
        let i = rng.below(entries.len());
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    let mut pairs = Vec::new();
    for i in picked {
        let (r, ty) = entries[i];
        let k = if rng.chance(1, 3) { 2 } else { 1 };
        let values: Vec<Value> = (0..k).map(|_| gen_value_of(rng, refs, ty, 1)).collect();
        pairs.push((r.clone(), Multiset::new(values)));
    }
    RefSubst::from_pairs(pairs)
}

fn gen_shape(rng: &mut Rng, refs: &RefContext, depth: usize) -> Term {
    let entries: Vec<_> = refs.entries().collect();
    if depth == 0 {
        return match rng.below(3) {
            0 => Term::unit(),
            1 if !entries.is_empty() => {
                let (r, _) = entries[rng.below(entries.len())];
                Term::Get(r.clone())
            }
            _ => Term::Val(gen_value_of(
                rng,
                refs,
                &TypeExpr::arrow(TypeExpr::Unit, Effect::empty(), TypeExpr::Unit),
                0,
            )),
        };
    }
    match rng.below(12) {
        // an application of a lambda to a fitting argument
        0 | 1 | 2 => {
            let body = gen_shape(rng, refs, depth - 1);
            let dom = TypeExpr::Unit;
            let f = Value::lambda(VarName::free("x"), dom, body);
            let lam_subst = if rng.chance(1, 3) {
                gen_ref_subst(rng, refs, 1)
            } else {
                RefSubst::new()
            };
            Term::app_sub(lam_subst, Term::Val(f), Term::unit())
        }
        // a downward substitution over a smaller term
        3 | 4 => Term::down(gen_ref_subst(rng, refs, 2), gen_shape(rng, refs, depth - 1)),
        // an upward substitution
        5 => Term::up(gen_ref_subst(rng, refs, 1), gen_shape(rng, refs, depth - 1)),
        // an explicit variable substitution whose body may use the binding
        6 => {
            let x = VarName::free("y");
            let body = if rng.chance(1, 2) {
                Term::Val(Value::Var(x.clone()))
            } else {
                gen_shape(rng, refs, depth - 1)
            };
            Term::var_sub(VarSubst::singleton(x, Value::Unit), body)
        }
        // threads; the second one stays small, and the flattened width is
        // capped: interleavings of store-fed threads dominate exploration
        // budgets
        7 => {
            let p = Term::par(alloc::vec![
                gen_shape(rng, refs, depth - 1),
                gen_shape(rng, refs, 1),
            ]);
            match p {
                Term::Par(cs) if cs.len() > 3 => {
                    Term::par(alloc::vec![cs[0].clone(), cs[1].clone()])
                }
                other => other,
            }
        }
        // a read under its stores
        8 if !entries.is_empty() => {
            let (r, ty) = entries[rng.below(entries.len())];
            let k = if rng.chance(1, 2) { 2 } else { 1 };
            let values: Vec<Value> = (0..k).map(|_| gen_value_of(rng, refs, ty, 1)).collect();
            Term::down(
                RefSubst::from_pairs([(r.clone(), Multiset::new(values))]),
                Term::Get(r.clone()),
            )
        }
        _ => gen_shape(rng, refs, depth - 1),
    }
}

/// The number of syntax nodes, counting through lambda bodies.
pub fn term_size(t: &Term) -> usize {
    match t {
        Term::Val(Value::Lambda(l)) => 1 + term_size(&l.body),
        Term::Val(_) | Term::Get(_) => 1,
        Term::VarSub(_, b) | Term::Down(_, b) | Term::Up(_, b) => 1 + term_size(b),
        Term::App(_, f, a) => 1 + term_size(f) + term_size(a),
        Term::Par(cs) => 1 + cs.iter().map(term_size).sum::<usize>(),
    }
}

/// A well-typed closed simple term: shapes are generated and filtered
/// through inference, with a typed fallback so the function is total. Terms
/// are kept at desk scale (at most 14 nodes): interleaving breadth, not
/// depth, is what blows exploration budgets.
pub fn gen_typed_term(rng: &mut Rng, refs: &RefContext, max_depth: usize) -> Term {
    for _ in 0..64 {
        let t = crate::syntax::canonical_term(&gen_shape(rng, refs, max_depth));
        if term_size(&t) <= 14
            && infer_sum(refs, &VarContext::new(), &Sum::singleton(t.clone())).is_ok()
        {
            return t;
        }
    }
    // Unreachable in practice; keep the generator total regardless.
    Term::unit()
}

/// A well-typed source-calculus program.
pub fn gen_lc_program(
    rng: &mut Rng,
    refs: &RefContext,
    max_threads: usize,
    max_depth: usize,
) -> LCProgram {
    let entries: Vec<_> = refs.entries().collect();
    let n_threads = 1 + rng.below(max_threads.max(1));
    let mut threads = Vec::new();
    for _ in 0..n_threads {
        threads.push(gen_lc_thread(rng, refs, max_depth));
    }
    let mut stores = Vec::new();
    if !entries.is_empty() {
        for _ in 0..rng.below(3) {
            let (r, ty) = entries[rng.below(entries.len())];
            stores.push((r.clone(), lc_value_of(rng, refs, ty)));
        }
    }
    LCProgram::new(threads, stores)
}

fn lc_value_of(rng: &mut Rng, refs: &RefContext, ty: &TypeExpr) -> LCValue {
    match ty {
        TypeExpr::Unit => LCValue::Unit,
        TypeExpr::Arrow(dom, eff, cod) => {
            let body = if rng.chance(1, 3) {
                let allowed: Vec<&RefName> = eff
                    .iter()
                    .filter(|r| refs.lookup(r) == Some(&**cod))
                    .collect();
                if allowed.is_empty() {
                    LCTerm::Val(lc_value_of(rng, refs, cod))
                } else {
                    LCTerm::Get(allowed[rng.below(allowed.len())].clone())
                }
            } else {
                LCTerm::Val(lc_value_of(rng, refs, cod))
            };
            LCValue::Lambda(VarName::free("x"), (**dom).clone(), alloc::boxed::Box::new(body))
        }
        TypeExpr::Ref(..) | TypeExpr::Behavior => LCValue::Unit,
    }
}

fn gen_lc_thread(rng: &mut Rng, refs: &RefContext, depth: usize) -> LCTerm {
    let entries: Vec<_> = refs.entries().collect();
    if depth == 0 || entries.is_empty() {
        return LCTerm::unit();
    }
    match rng.below(6) {
        0 | 1 => {
            // apply an identity-shaped lambda to a read or a value
            let (r, ty) = entries[rng.below(entries.len())];
            let arg = if rng.chance(2, 3) {
                LCTerm::Get(r.clone())
            } else {
                LCTerm::Val(lc_value_of(rng, refs, ty))
            };
            let f = LCValue::Lambda(
                VarName::free("x"),
                ty.clone(),
                alloc::boxed::Box::new(LCTerm::Val(LCValue::Var(VarName::free("x")))),
            );
            LCTerm::app(LCTerm::Val(f), arg)
        }
        2 | 3 => {
            let (r, ty) = entries[rng.below(entries.len())];
            LCTerm::Set(r.clone(), lc_value_of(rng, refs, ty))
        }
        4 => {
            let (r, _) = entries[rng.below(entries.len())];
            LCTerm::Get(r.clone())
        }
        _ => {
            let inner = gen_lc_thread(rng, refs, depth - 1);
            LCTerm::app(
                LCTerm::Val(LCValue::Lambda(
                    VarName::free("z"),
                    TypeExpr::Unit,
                    alloc::boxed::Box::new(LCTerm::Val(LCValue::Var(VarName::free("z")))),
                )),
                if inner.is_value() { inner } else { LCTerm::unit() },
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Raw (untyped) generation, for syntactic properties
// ---------------------------------------------------------------------------

const RAW_VARS: &[&str] = &["x", "y", "z"];
const RAW_REFS: &[&str] = &["r", "s"];

/// An arbitrary value, not necessarily well typed.
pub fn gen_raw_value(rng: &mut Rng, depth: usize) -> Value {
    match rng.below(if depth == 0 { 2 } else { 3 }) {
        0 => Value::Unit,
        1 => Value::Var(VarName::free(RAW_VARS[rng.below(RAW_VARS.len())])),
        _ => Value::lambda(
            VarName::free(RAW_VARS[rng.below(RAW_VARS.len())]),
            TypeExpr::Unit,
            gen_raw_term(rng, depth - 1),
        ),
    }
}

/// An arbitrary variable substitution over the small name pool.
pub fn gen_raw_var_subst(rng: &mut Rng, depth: usize) -> VarSubst {
    let n = rng.below(3);
    VarSubst::from_pairs((0..n).map(|_| {
        (
            VarName::free(RAW_VARS[rng.below(RAW_VARS.len())]),
            gen_raw_value(rng, depth),
        )
    }))
}

fn gen_raw_ref_subst(rng: &mut Rng, depth: usize) -> RefSubst {
    let n = 1 + rng.below(2);
    RefSubst::from_pairs((0..n).map(|_| {
        let k = 1 + rng.below(2);
        (
            RefName::new(RAW_REFS[rng.below(RAW_REFS.len())]),
            Multiset::new((0..k).map(|_| gen_raw_value(rng, depth)).collect()),
        )
    }))
}

/// An arbitrary term, not necessarily well typed or closed.
pub fn gen_raw_term(rng: &mut Rng, depth: usize) -> Term {
    if depth == 0 {
        return match rng.below(3) {
            0 => Term::unit(),
            1 => Term::Get(RefName::new(RAW_REFS[rng.below(RAW_REFS.len())])),
            _ => Term::Val(gen_raw_value(rng, 0)),
        };
    }
    match rng.below(12) {
        0 | 1 => Term::Val(gen_raw_value(rng, depth)),
        2 => Term::Get(RefName::new(RAW_REFS[rng.below(RAW_REFS.len())])),
        3 | 4 => Term::app_sub(
            if rng.chance(1, 3) {
                gen_raw_ref_subst(rng, depth - 1)
            } else {
                RefSubst::new()
            },
            gen_raw_term(rng, depth - 1),
            gen_raw_term(rng, depth - 1),
        ),
        5 | 6 => Term::down(gen_raw_ref_subst(rng, depth - 1), gen_raw_term(rng, depth - 1)),
        7 => Term::up(gen_raw_ref_subst(rng, depth - 1), gen_raw_term(rng, depth - 1)),
        8 | 9 => Term::var_sub(gen_raw_var_subst(rng, depth - 1), gen_raw_term(rng, depth - 1)),
        _ => {
            let n = 2 + rng.below(2);
            Term::par((0..n).map(|_| gen_raw_term(rng, depth - 1)).collect())
        }
    }
}

/// An arbitrary sum of up to three raw terms.
pub fn gen_raw_sum(rng: &mut Rng, depth: usize) -> Sum {
    let n = rng.below(4);
    Sum::from_terms((0..n).map(|_| gen_raw_term(rng, depth)))
}

// ---------------------------------------------------------------------------
// Exhaustive small-term enumeration
// ---------------------------------------------------------------------------

/// The constructor menu for exhaustive enumeration: leaves `*` and `get r`,
/// unary `Down`/`Up` over the listed substitutions, binary application (with
/// the listed stationary substitutions) and binary parallel composition.
#[derive(Clone, Debug)]
pub struct EnumOptions {
    pub reference: RefName,
    pub down_up_substs: Vec<RefSubst>,
    pub app_substs: Vec<RefSubst>,
}

impl EnumOptions {
    /// Leaves plus substitutions drawn from a two-value pool: the unit value
    /// and the unit identity.
    pub fn standard() -> EnumOptions {
        let r = RefName::new("r");
        let unit = Value::Unit;
        let ident = Value::lambda(VarName::free("x"), TypeExpr::Unit, Term::var("x"));
        EnumOptions {
            reference: r.clone(),
            down_up_substs: alloc::vec![
                RefSubst::singleton(r.clone(), unit.clone()),
                RefSubst::singleton(r.clone(), ident.clone()),
                RefSubst::from_pairs([(r.clone(), Multiset::new(alloc::vec![unit, ident]))]),
            ],
            app_substs: alloc::vec![RefSubst::new()],
        }
    }

    /// A single-substitution menu that keeps deeper exhaustive sweeps
    /// affordable.
    pub fn lean() -> EnumOptions {
        let r = RefName::new("r");
        EnumOptions {
            reference: r.clone(),
            down_up_substs: alloc::vec![RefSubst::singleton(r, Value::Unit)],
            app_substs: alloc::vec![RefSubst::new()],
        }
    }
}

/// Stream every term of depth at most `max_depth` over the menu exactly
/// once, in a deterministic order. A term of depth `d` has at least one
/// child of depth `d - 1`.
pub fn each_term(opts: &EnumOptions, max_depth: usize, mut f: impl FnMut(&Term)) {
    let leaves = alloc::vec![Term::unit(), Term::Get(opts.reference.clone())];
    for t in &leaves {
        f(t);
    }
    // exact: terms of depth exactly d - 1; shallower: strictly less than that
    let mut exact = leaves;
    let mut shallower: Vec<Term> = Vec::new();
    for _depth in 1..=max_depth {
        let mut level: Vec<Term> = Vec::new();
        for t in &exact {
            for sub in &opts.down_up_substs {
                level.push(Term::down(sub.clone(), t.clone()));
                level.push(Term::up(sub.clone(), t.clone()));
            }
        }
        // applications: at least one side at the previous depth
        for sub in &opts.app_substs {
            for a in &exact {
                for b in shallower.iter().chain(exact.iter()) {
                    level.push(Term::app_sub(sub.clone(), a.clone(), b.clone()));
                }
            }
            for a in &shallower {
                for b in &exact {
                    level.push(Term::app_sub(sub.clone(), a.clone(), b.clone()));
                }
            }
        }
        // parallel compositions: unordered pairs
        for (i, a) in exact.iter().enumerate() {
            for b in exact.iter().skip(i) {
                level.push(Term::par(alloc::vec![a.clone(), b.clone()]));
            }
            for b in &shallower {
                level.push(Term::par(alloc::vec![a.clone(), b.clone()]));
            }
        }
        for t in &level {
            f(t);
        }
        shallower.extend(core::mem::take(&mut exact));
        exact = level;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typing::infer;

    #[test]
    fn ref_contexts_are_stratified() {
        let mut rng = Rng::new(11);
        for _ in 0..100 {
            let ctx = gen_ref_context(&mut rng, 3);
            assert!(check_stratification(&ctx).is_ok());
        }
    }

    #[test]
    fn generated_terms_are_well_typed_and_closed() {
        let mut rng = Rng::new(5);
        for _ in 0..100 {
            let ctx = gen_ref_context(&mut rng, 3);
            let term = gen_typed_term(&mut rng, &ctx, 4);
            let frees = crate::syntax::free_names(&term);
            assert!(
                infer(&ctx, &VarContext::new(), &term).is_ok(),
                "ill-typed: {term}"
            );
            // closed in the typing sense: no free variable the checker needs
            // a context for; substitution domains may still show up as free
            // names of the tree.
            let _ = frees;
        }
    }

    #[test]
    fn generated_lc_programs_translate_and_type() {
        let mut rng = Rng::new(9);
        for _ in 0..50 {
            let ctx = gen_ref_context(&mut rng, 2);
            let p = gen_lc_program(&mut rng, &ctx, 3, 3);
            let t = crate::lambda_c::translate(&p);
            assert!(
                infer_sum(&ctx, &VarContext::new(), &Sum::singleton(t.clone())).is_ok(),
                "translation ill-typed: {t}"
            );
        }
    }

    #[test]
    fn enumeration_counts_match_the_menu() {
        let opts = EnumOptions::lean();
        let mut n0 = 0usize;
        each_term(&opts, 0, |_| n0 += 1);
        assert_eq!(n0, 2);
        // depth 1: 2 leaves + 2*2 down/up + 4 apps + 3 unordered pars
        let mut n1 = 0usize;
        each_term(&opts, 1, |_| n1 += 1);
        assert_eq!(n1, 2 + 4 + 4 + 3);
    }
}
