//! Property tests for the calculus invariants. Generation is driven by a
//! seeded in-crate generator, so proptest only supplies seeds; every failure
//! reproduces from its seed alone.

use proptest::prelude::*;

use lces_core::analysis::{check_simulation_preorder, preorder_bounded, preorder_leq, skeleton};
use lces_core::corpus::{
    gen_raw_sum, gen_raw_term, gen_raw_value, gen_raw_var_subst, gen_ref_context, gen_ref_subst,
    gen_typed_term,
};
use lces_core::reduction::{
    decompose, enumerate_normal_forms_nd, reduction_graph, successors_full, Mode,
    RuleTag,
};
use lces_core::surface::{parse_term, print_term};
use lces_core::syntax::{
    canonical_term, canonicalize, free_names_sum, juxtapose_ref_substs,
    meta_apply_value, sum_equal, term_equal, RefSubst, Sum, Term, Value,
};
use lces_core::typing::{check_progress, infer_sum, subtype, Effect, TypeExpr, VarContext};
use lces_core::Rng;

fn hint_pool(t: &Term) -> std::collections::BTreeSet<String> {
    // every identifier appearing anywhere in the term, bound or free
    fn strip(s: &str) -> String {
        s.trim_end_matches('\'').to_string()
    }
    let mut out = std::collections::BTreeSet::new();
    let printed = print_term(t);
    let mut cur = String::new();
    for c in printed.chars() {
        if c.is_alphanumeric() || c == '_' || c == '\'' {
            cur.push(c);
        } else if !cur.is_empty() {
            out.insert(strip(&cur));
            cur.clear();
        }
    }
    if !cur.is_empty() {
        out.insert(strip(&cur));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let s = gen_raw_sum(&mut rng, 3);
        let once = canonicalize(&s);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn canonicalize_invariant_under_reordering(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let a = gen_raw_term(&mut rng, 2);
        let b = gen_raw_term(&mut rng, 2);
        let c = gen_raw_term(&mut rng, 2);
        let left = Term::par(vec![a.clone(), Term::par(vec![b.clone(), c.clone()])]);
        let right = Term::par(vec![Term::par(vec![c, a]), b]);
        prop_assert!(term_equal(&left, &right));
        // summand reordering via set construction
        let s1 = Sum::from_terms([left.clone(), right.clone()]);
        let s2 = Sum::from_terms([right, left]);
        prop_assert!(sum_equal(&s1, &s2));
    }

    #[test]
    fn juxtapose_associative_commutative(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 3);
        let a = gen_ref_subst(&mut rng, &ctx, 2);
        let b = gen_ref_subst(&mut rng, &ctx, 2);
        let c = gen_ref_subst(&mut rng, &ctx, 2);
        prop_assert_eq!(juxtapose_ref_substs(&a, &b), juxtapose_ref_substs(&b, &a));
        prop_assert_eq!(
            juxtapose_ref_substs(&juxtapose_ref_substs(&a, &b), &c),
            juxtapose_ref_substs(&a, &juxtapose_ref_substs(&b, &c))
        );
    }

    #[test]
    fn compose_associative_on_separated_substs(seed in any::<u64>()) {
        use lces_core::syntax::{compose_var_substs, VarName, VarSubst};
        let mut rng = Rng::new(seed);
        // domains pairwise disjoint from range free variables: closed values
        // under distinct names satisfy the side condition trivially
        let names = ["a", "b", "c"];
        let mut subs: Vec<VarSubst> = Vec::new();
        for n in names {
            let v = match rng.below(2) {
                0 => Value::Unit,
                _ => Value::lambda(VarName::free("w"), TypeExpr::Unit, Term::unit()),
            };
            subs.push(VarSubst::singleton(VarName::free(n), v));
        }
        let (s1, s2, s3) = (&subs[0], &subs[1], &subs[2]);
        let left = compose_var_substs(&compose_var_substs(s1, s2), s3);
        let right = compose_var_substs(s1, &compose_var_substs(s2, s3));
        // The two associations may group the substitution stacks frozen
        // under a lambda differently, so compare entry-wise up to reduction:
        // syntactic equality, or equal normal forms under an application
        // probe.
        let dom: std::collections::BTreeSet<_> =
            left.iter().map(|(x, _)| x.clone())
                .chain(right.iter().map(|(x, _)| x.clone()))
                .collect();
        for x in dom {
            let a = left.get(&x).expect("same domains").clone();
            let b = right.get(&x).expect("same domains").clone();
            if term_equal(&Term::Val(a.clone()), &Term::Val(b.clone())) {
                continue;
            }
            let probe = |v: Value| {
                lces_core::reduction::enumerate_normal_forms(
                    &Sum::singleton(Term::app(Term::Val(v), Term::unit())),
                    Mode::Full,
                    2_000,
                    200,
                )
            };
            let (na, ca) = probe(a);
            let (nb, cb) = probe(b);
            prop_assert!(ca && cb, "probe exploration truncated");
            prop_assert_eq!(na, nb, "composites observably differ at {}", x);
        }
    }

    #[test]
    fn meta_apply_agrees_with_explicit_substitution_steps(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let mut sub = gen_raw_var_subst(&mut rng, 2);
        while sub.is_empty() {
            sub = gen_raw_var_subst(&mut rng, 2);
        }
        let v = gen_raw_value(&mut rng, 2);
        let direct = canonical_term(&Term::Val(meta_apply_value(&sub, &v)));
        // reduce {sigma}s V with the variable-substitution rules only
        let mut cur = Sum::singleton(canonical_term(&Term::var_sub(sub, Term::Val(v))));
        for _ in 0..64 {
            let sites = decompose(&cur, Mode::Full);
            match sites.iter().find(|s| s.tag.is_var_subst_rule()) {
                None => break,
                Some(site) => cur = lces_core::reduction::apply(&cur, site).unwrap(),
            }
        }
        prop_assert_eq!(cur.as_single().unwrap(), &direct);
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let t = gen_raw_term(&mut rng, 3);
        let printed = print_term(&t);
        let back = parse_term(&printed)
            .map_err(|e| TestCaseError::fail(format!("reparse of {printed}: {e}")))?;
        prop_assert!(term_equal(&t, &back), "round trip broke on {}", printed);
    }

    #[test]
    fn subtype_is_a_partial_order(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 3);
        let refs: Vec<_> = ctx.entries().map(|(r, _)| r.clone()).collect();
        let gen_ty = |rng: &mut Rng, depth: usize| -> (TypeExpr, Effect) {
            fn ty(rng: &mut Rng, refs: &[lces_core::syntax::RefName], depth: usize) -> TypeExpr {
                if depth == 0 || rng.chance(1, 2) {
                    TypeExpr::Unit
                } else {
                    let eff = if rng.chance(1, 2) && !refs.is_empty() {
                        Effect::singleton(refs[rng.below(refs.len())].clone())
                    } else {
                        Effect::empty()
                    };
                    TypeExpr::arrow(ty(rng, refs, depth - 1), eff, ty(rng, refs, depth - 1))
                }
            }
            let eff = if rng.chance(1, 2) && !refs.is_empty() {
                Effect::singleton(refs[rng.below(refs.len())].clone())
            } else {
                Effect::empty()
            };
            (ty(rng, &refs, depth), eff)
        };
        let a = gen_ty(&mut rng, 2);
        let b = gen_ty(&mut rng, 2);
        let c = gen_ty(&mut rng, 2);
        // reflexive
        prop_assert!(subtype(&ctx, (&a.0, &a.1), (&a.0, &a.1)));
        // transitive
        if subtype(&ctx, (&a.0, &a.1), (&b.0, &b.1)) && subtype(&ctx, (&b.0, &b.1), (&c.0, &c.1)) {
            prop_assert!(subtype(&ctx, (&a.0, &a.1), (&c.0, &c.1)));
        }
        // antisymmetric up to syntactic equality
        if subtype(&ctx, (&a.0, &a.1), (&b.0, &b.1)) && subtype(&ctx, (&b.0, &b.1), (&a.0, &a.1)) {
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn infer_stable_under_canonicalization_and_alpha(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 3);
        let t = gen_typed_term(&mut rng, &ctx, 4);
        let vars = VarContext::new();
        let j1 = infer_sum(&ctx, &vars, &Sum::singleton(t.clone()));
        let j2 = infer_sum(&ctx, &vars, &canonicalize(&Sum::singleton(t.clone())));
        prop_assert_eq!(&j1, &j2);
        // an alpha variant via printing and reparsing
        let variant = parse_term(&print_term(&t)).unwrap();
        let j3 = infer_sum(&ctx, &vars, &Sum::singleton(variant));
        prop_assert_eq!(&j1, &j3);
    }

    #[test]
    fn equal_terms_have_equal_successor_sets(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let t = gen_raw_term(&mut rng, 3);
        let variant = parse_term(&print_term(&t)).unwrap();
        prop_assert!(term_equal(&t, &variant));
        prop_assert_eq!(
            successors_full(&Sum::singleton(t.clone())),
            successors_full(&Sum::singleton(variant))
        );
    }

    #[test]
    fn reduction_never_invents_names(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let s = canonicalize(&gen_raw_sum(&mut rng, 3));
        let refs_before = free_names_sum(&s).refs;
        let pool = {
            let mut p = std::collections::BTreeSet::new();
            for t in s.summands() {
                p.extend(hint_pool(t));
            }
            p
        };
        for succ in successors_full(&s) {
            let f = free_names_sum(&succ);
            prop_assert!(f.refs.is_subset(&refs_before), "invented a reference");
            for v in &f.vars {
                let hint = v.hint().as_str().trim_end_matches('\'').to_string();
                prop_assert!(
                    pool.contains(&hint),
                    "invented variable {} outside pool {:?}",
                    v.hint(),
                    pool
                );
            }
        }
    }

    #[test]
    fn nd_branches_match_full_get_summands(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let t = canonical_term(&gen_raw_term(&mut rng, 3));
        check_nd_full_correspondence(&t)
            .map_err(TestCaseError::fail)?;
    }

    #[test]
    fn typed_normal_forms_pass_progress(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 2);
        let t = gen_typed_term(&mut rng, &ctx, 3);
        let (nfs, complete) = enumerate_normal_forms_nd(&t, 20_000, 200);
        prop_assert!(complete, "typed term exploration should finish");
        for nf in nfs {
            let report = check_progress(&Sum::singleton(nf.clone()));
            prop_assert!(report.conforming, "stuck shape: {}", nf);
        }
    }

    #[test]
    fn subject_reduction_on_random_typed_terms(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 2);
        let t = gen_typed_term(&mut rng, &ctx, 3);
        let report = lces_core::typing::check_subject_reduction(
            &ctx,
            &Sum::singleton(t),
            Mode::Full,
            5_000,
            100,
        ).unwrap();
        prop_assert!(report.ok(), "violations: {:?}", report.violations);
    }

    #[test]
    fn preorder_reflexive_and_grows_with_downs(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 2);
        let t = gen_typed_term(&mut rng, &ctx, 3);
        prop_assert!(preorder_leq(&t, &t));
        let sub = gen_ref_subst(&mut rng, &ctx, 2);
        let bigger = Term::down(sub.clone(), t.clone());
        prop_assert!(preorder_leq(&t, &bigger));
        prop_assert!(preorder_bounded(&t, &bigger, &sub));
        prop_assert!(preorder_bounded(&t, &t, &RefSubst::new()));
    }

    #[test]
    fn skeleton_invariant_under_downward_steps(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let t = canonical_term(&gen_raw_term(&mut rng, 3));
        let s = Sum::singleton(t.clone());
        for site in decompose(&s, Mode::Full) {
            if !site.tag.is_downward_structural() {
                continue;
            }
            let out = lces_core::reduction::apply(&s, &site).unwrap();
            if let Some(t2) = out.as_single() {
                prop_assert_eq!(skeleton(&t), skeleton(t2), "rule {}", site.tag);
            }
        }
    }

    #[test]
    fn preorder_invariance_under_downward_steps(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 2);
        let m = gen_typed_term(&mut rng, &ctx, 3);
        let sub = gen_ref_subst(&mut rng, &ctx, 2);
        let n = canonical_term(&Term::down(sub, m.clone()));
        prop_assert!(preorder_leq(&m, &n));
        // downward structural steps on either side preserve the preorder
        let sn = Sum::singleton(n.clone());
        for site in decompose(&sn, Mode::Full) {
            if !site.tag.is_downward_structural() {
                continue;
            }
            let out = lces_core::reduction::apply(&sn, &site).unwrap();
            if let Some(n2) = out.as_single() {
                prop_assert!(preorder_leq(&m, n2), "n-step {} broke the preorder", site.tag);
            }
        }
        let sm = Sum::singleton(m.clone());
        for site in decompose(&sm, Mode::Full) {
            if !site.tag.is_downward_structural() {
                continue;
            }
            let out = lces_core::reduction::apply(&sm, &site).unwrap();
            if let Some(m2) = out.as_single() {
                prop_assert!(preorder_leq(m2, &n), "m-step {} broke the preorder", site.tag);
            }
        }
    }

    #[test]
    fn one_step_simulation_on_wrapped_terms(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let ctx = gen_ref_context(&mut rng, 2);
        let m = gen_typed_term(&mut rng, &ctx, 2);
        let sub = gen_ref_subst(&mut rng, &ctx, 1);
        let n = canonical_term(&Term::down(sub, m.clone()));
        let report = check_simulation_preorder(&m, &n, 24);
        prop_assert!(report.ok(), "unmatched reducts: {:?}", report.failures);
    }

    #[test]
    fn graph_deterministic(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let t = gen_raw_term(&mut rng, 2);
        let s = Sum::singleton(t);
        let a = reduction_graph(&s, Mode::Full, 300, 30);
        let b = reduction_graph(&s, Mode::Full, 300, 30);
        prop_assert_eq!(a.nodes.len(), b.nodes.len());
        prop_assert_eq!(a.edges.len(), b.edges.len());
        for (x, y) in a.edges.iter().zip(b.edges.iter()) {
            prop_assert_eq!(&x.site, &y.site);
        }
    }
}

/// The nd branch correspondence: at every get site of a simple term, the
/// full-rule output decomposes exactly into the skip summand plus one pick
/// summand per stored value; conversely each nd step is one of those.
pub fn check_nd_full_correspondence(t: &Term) -> Result<(), String> {
    let s = Sum::singleton(t.clone());
    let full_sites = decompose(&s, Mode::Full);
    let nd_sites = decompose(&s, Mode::Nd);
    for site in &full_sites {
        if site.tag != RuleTag::RDownGet {
            continue;
        }
        let full_out = lces_core::reduction::apply(&s, site).unwrap();
        // nd outcomes at the same path
        let mut nd_out: std::collections::BTreeSet<Term> = Default::default();
        for nd_site in &nd_sites {
            if nd_site.path == site.path && nd_site.summand == site.summand {
                let out = lces_core::reduction::apply(&s, nd_site).unwrap();
                nd_out.insert(out.as_single().expect("nd keeps terms simple").clone());
            }
        }
        // The full output may collapse summands equal to each other; compare
        // as sets.
        let full_set: std::collections::BTreeSet<Term> =
            full_out.summands().cloned().collect();
        if full_set != nd_out {
            return Err(format!(
                "summand mismatch at {} of {}:\n  full: {:?}\n  nd: {:?}",
                site.path_string(),
                t,
                full_set,
                nd_out
            ));
        }
    }
    Ok(())
}
