//! Small-step reduction: the full rule set closed under the structural
//! rules, exhaustive redex decomposition, the non-deterministic variant
//! where a read picks a single stored value, strategies, traces, and
//! reduction-graph construction.
//!
//! Redex positions follow the evaluation contexts: a sum context picks a
//! summand, a thread context picks a `||` leaf, and the applicative context
//! descends through application sides and reference substitutions but never
//! under a lambda or an explicit variable substitution. Because canonical
//! parallel compositions are flattened multisets, rules whose left-hand side
//! mentions `||` are enumerated over the binary regroupings the structural
//! rules allow: bipartitions for the splitting rules, and sibling subsets
//! for the upward-par rule when the junction sits at thread level.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::Rng;
use crate::syntax::{
    canonical_term, canonicalize, juxtapose_ref_substs, meta_apply_ref_subst, Sum, Term, Value,
    VarSubst,
};

/// Which get rule is in force: the full sum-producing one, or the
/// non-deterministic pick/skip pair.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Full,
    Nd,
}

/// One tag per reduction rule.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum RuleTag {
    BetaV,
    SubstVar,
    SubstUnit,
    SubstApp,
    SubstLam,
    SubstGet,
    SubstPar,
    SubstSubstR,
    SubstSubstRUp,
    SubstMerge,
    RDownVal,
    RDownPar,
    RDownSwapUp,
    RDownMerge,
    RDownApp,
    RDownGet,
    RUpPar,
    RUpLApp,
    RUpRApp,
    RUpTop,
    NdGetPick,
    NdGetSkip,
}

impl RuleTag {
    pub fn name(self) -> &'static str {
        use RuleTag::*;
        match self {
            BetaV => "BetaV",
            SubstVar => "Subst_Var",
            SubstUnit => "Subst_Unit",
            SubstApp => "Subst_App",
            SubstLam => "Subst_Lam",
            SubstGet => "Subst_Get",
            SubstPar => "Subst_Par",
            SubstSubstR => "Subst_SubstR",
            SubstSubstRUp => "Subst_SubstRUp",
            SubstMerge => "Subst_Merge",
            RDownVal => "RDown_Val",
            RDownPar => "RDown_Par",
            RDownSwapUp => "RDown_SwapUp",
            RDownMerge => "RDown_Merge",
            RDownApp => "RDown_App",
            RDownGet => "RDown_Get",
            RUpPar => "RUp_Par",
            RUpLApp => "RUp_LApp",
            RUpRApp => "RUp_RApp",
            RUpTop => "RUp_Top",
            NdGetPick => "ND_GetPick",
            NdGetSkip => "ND_GetSkip",
        }
    }

    /// The downward structural rules: the downward group without the get
    /// rule.
    pub fn is_downward_structural(self) -> bool {
        matches!(
            self,
            RuleTag::RDownVal
                | RuleTag::RDownPar
                | RuleTag::RDownSwapUp
                | RuleTag::RDownMerge
                | RuleTag::RDownApp
        )
    }

    /// The variable-substitution group, get rule included.
    pub fn is_var_subst_rule(self) -> bool {
        matches!(
            self,
            RuleTag::SubstVar
                | RuleTag::SubstUnit
                | RuleTag::SubstApp
                | RuleTag::SubstLam
                | RuleTag::SubstGet
                | RuleTag::SubstPar
                | RuleTag::SubstSubstR
                | RuleTag::SubstSubstRUp
                | RuleTag::SubstMerge
        )
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One step on the path from a summand root to a redex.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Step {
    ParChild(usize),
    Fun,
    Arg,
    DownBody,
    UpBody,
}

/// Extra instance data for rules that regroup a parallel multiset.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SiteData {
    Plain,
    /// Which stored value a non-deterministic read picks.
    Pick(usize),
    /// The left block of the binary split used by a par-splitting rule.
    Split(Vec<usize>),
    /// The upward-par rule: the up-rooted child and the siblings that
    /// receive the downward copy.
    Junction { up: usize, group: Vec<usize> },
}

/// A redex position: which summand, the path through thread and applicative
/// contexts, the rule, and a snapshot of the redex for staleness detection.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RedexSite {
    pub summand: usize,
    pub path: Vec<Step>,
    pub tag: RuleTag,
    pub data: SiteData,
    pub redex: Term,
}

impl RedexSite {
    /// A compact, deterministic rendering of the position, used in traces
    /// and graph exports.
    pub fn path_string(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = write!(s, "s{}", self.summand);
        for step in &self.path {
            match step {
                Step::ParChild(i) => {
                    let _ = write!(s, "/par{i}");
                }
                Step::Fun => s.push_str("/fun"),
                Step::Arg => s.push_str("/arg"),
                Step::DownBody => s.push_str("/down"),
                Step::UpBody => s.push_str("/up"),
            }
        }
        match &self.data {
            SiteData::Plain => {}
            SiteData::Pick(i) => {
                let _ = write!(s, "[pick={i}]");
            }
            SiteData::Split(left) => {
                let _ = write!(s, "[split={left:?}]");
            }
            SiteData::Junction { up, group } => {
                let _ = write!(s, "[up={up},group={group:?}]");
            }
        }
        s
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ApplyError {
    /// The sum changed since the site was produced.
    StaleSite,
    /// The site's path does not exist in the sum.
    BadPath,
}

impl fmt::Display for ApplyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApplyError::StaleSite => write!(f, "stale redex site: the sum changed since decompose"),
            ApplyError::BadPath => write!(f, "redex site path does not address a subterm"),
        }
    }
}

impl core::error::Error for ApplyError {}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum UsageError {
    /// The non-deterministic reduction is defined on simple terms only.
    NdOnSum,
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsageError::NdOnSum =>

                write!(f, "the nd reduction works on simple terms; the input is a non-singleton sum"),
        }
    }
}

impl core::error::Error for UsageError {}

// ---------------------------------------------------------------------------
// Decompose
// ---------------------------------------------------------------------------

/// Every redex site of a canonical sum, in a fixed deterministic order:
/// summands in canonical order, then pre-order within each summand with rule
/// tags tie-broken by their enumeration order. A term with an empty result
/// is a normal form.
pub fn decompose(s: &Sum, mode: Mode) -> Vec<RedexSite> {
    let mut sites = Vec::new();
    for (k, t) in s.summands().enumerate() {
        if matches!(t, Term::Up(_, _)) {
            sites.push(RedexSite {
                summand: k,
                path: Vec::new(),
                tag: RuleTag::RUpTop,
                data: SiteData::Plain,
                redex: t.clone(),
            });
        }
        match t {
            Term::Par(cs) => {
                // The summand root is thread level: the upward-par rule may
                // pair the up child against any non-empty subset of its
                // siblings.
                junction_sites(k, &[], t, cs, true, &mut sites);
                for (i, c) in cs.iter().enumerate() {
                    let mut path = Vec::new();
                    path.push(Step::ParChild(i));
                    walk_applicative(k, &mut path, c, mode, &mut sites);
                }
            }
            _ => {
                let mut path = Vec::new();
                walk_applicative(k, &mut path, t, mode, &mut sites);
            }
        }
    }
    sites
}

fn push_site(
    sites: &mut Vec<RedexSite>,
    summand: usize,
    path: &[Step],
    tag: RuleTag,
    data: SiteData,
    redex: &Term,
) {
    sites.push(RedexSite {
        summand,
        path: path.to_vec(),
        tag,
        data,
        redex: redex.clone(),
    });
}

fn junction_sites(
    summand: usize,
    path: &[Step],
    par: &Term,
    children: &[Term],
    thread_level: bool,
    sites: &mut Vec<RedexSite>,
) {
    for (i, c) in children.iter().enumerate() {
        if !matches!(c, Term::Up(_, _)) {
            continue;
        }
        let others: Vec<usize> = (0..children.len()).filter(|&j| j != i).collect();
        if thread_level {
            // All non-empty subsets of the siblings, smallest mask first.
            let n = others.len();
            for mask in 1u32..(1u32 << n) {
                let group: Vec<usize> = others
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &j)| j)
                    .collect();
                push_site(
                    sites,
                    summand,
                    path,
                    RuleTag::RUpPar,
                    SiteData::Junction { up: i, group },
                    par,
                );
            }
        } else {
            // Reached through the applicative context: the par fills the
            // hole whole, so the up child can only pair against all of its
            // siblings at once.
            push_site(
                sites,
                summand,
                path,
                RuleTag::RUpPar,
                SiteData::Junction { up: i, group: others },
                par,
            );
        }
    }
}

fn split_sites(
    summand: usize,
    path: &[Step],
    redex: &Term,
    tag: RuleTag,
    n_children: usize,
    sites: &mut Vec<RedexSite>,
) {
    // Bipartitions of the children; fixing child 0 on the left avoids
    // counting each partition twice.
    let full: u32 = (1 << n_children) - 1;
    let mut mask = 1u32;
    while mask < full {
        if mask & 1 == 1 {
            let left: Vec<usize> = (0..n_children).filter(|&j| mask & (1 << j) != 0).collect();
            push_site(sites, summand, path, tag, SiteData::Split(left), redex);
        }
        mask += 2;
    }
}

fn walk_applicative(
    summand: usize,
    path: &mut Vec<Step>,
    t: &Term,
    mode: Mode,
    sites: &mut Vec<RedexSite>,
) {
    match t {
        Term::Val(_) | Term::Get(_) => {}
        Term::App(_, f, a) => {
            if matches!(&**f, Term::Val(Value::Lambda(_))) && a.is_value() {
                push_site(sites, summand, path, RuleTag::BetaV, SiteData::Plain, t);
            }
            if matches!(&**f, Term::Up(_, _)) {
                push_site(sites, summand, path, RuleTag::RUpLApp, SiteData::Plain, t);
            }
            if matches!(&**a, Term::Up(_, _)) {
                push_site(sites, summand, path, RuleTag::RUpRApp, SiteData::Plain, t);
            }
            path.push(Step::Fun);
            walk_applicative(summand, path, f, mode, sites);
            path.pop();
            path.push(Step::Arg);
            walk_applicative(summand, path, a, mode, sites);
            path.pop();
        }
        Term::VarSub(_, body) => {
            let tag = match &**body {
                Term::Val(Value::Var(_)) => Some(RuleTag::SubstVar),
                Term::Val(Value::Unit) => Some(RuleTag::SubstUnit),
                Term::Val(Value::Lambda(_)) => Some(RuleTag::SubstLam),
                Term::App(..) => Some(RuleTag::SubstApp),
                Term::Get(_) => Some(RuleTag::SubstGet),
                Term::Down(..) => Some(RuleTag::SubstSubstR),
                Term::Up(..) => Some(RuleTag::SubstSubstRUp),
                Term::VarSub(..) => Some(RuleTag::SubstMerge),
                Term::Par(_) => None,
            };
            if let Some(tag) = tag {
                push_site(sites, summand, path, tag, SiteData::Plain, t);
            } else if let Term::Par(cs) = &**body {
                split_sites(summand, path, t, RuleTag::SubstPar, cs.len(), sites);
            }
            // The applicative context does not descend under {sigma}s.
        }
        Term::Down(sub, body) => {
            match &**body {
                Term::Val(_) => {
                    push_site(sites, summand, path, RuleTag::RDownVal, SiteData::Plain, t)
                }
                Term::Par(cs) => split_sites(summand, path, t, RuleTag::RDownPar, cs.len(), sites),
                Term::Up(..) => {
                    push_site(sites, summand, path, RuleTag::RDownSwapUp, SiteData::Plain, t)
                }
                Term::Down(..) => {
                    push_site(sites, summand, path, RuleTag::RDownMerge, SiteData::Plain, t)
                }
                Term::App(..) => {
                    push_site(sites, summand, path, RuleTag::RDownApp, SiteData::Plain, t)
                }
                Term::Get(r) => match mode {
                    Mode::Full => {
                        push_site(sites, summand, path, RuleTag::RDownGet, SiteData::Plain, t)
                    }
                    Mode::Nd => {
                        if let Some(vs) = sub.get(r) {
                            for i in 0..vs.len() {
                                push_site(
                                    sites,
                                    summand,
                                    path,
                                    RuleTag::NdGetPick,
                                    SiteData::Pick(i),
                                    t,
                                );
                            }
                        }
                        push_site(sites, summand, path, RuleTag::NdGetSkip, SiteData::Plain, t);
                    }
                },
                Term::VarSub(..) => {}
            }
            path.push(Step::DownBody);
            walk_applicative(summand, path, body, mode, sites);
            path.pop();
        }
        Term::Up(_, body) => {
            path.push(Step::UpBody);
            walk_applicative(summand, path, body, mode, sites);
            path.pop();
        }
        Term::Par(cs) => {
            junction_sites(summand, path, t, cs, false, sites);
            // No descent: the thread context cannot resume inside the
            // applicative one.
        }
    }
}

// ---------------------------------------------------------------------------
// Apply
// ---------------------------------------------------------------------------

fn subterm_at<'a>(t: &'a Term, path: &[Step]) -> Option<&'a Term> {
    let mut cur = t;
    for step in path {
        cur = match (step, cur) {
            (Step::ParChild(i), Term::Par(cs)) => cs.get(*i)?,
            (Step::Fun, Term::App(_, f, _)) => f,
            (Step::Arg, Term::App(_, _, a)) => a,
            (Step::DownBody, Term::Down(_, b)) => b,
            (Step::UpBody, Term::Up(_, b)) => b,
            _ => return None,
        };
    }
    Some(cur)
}

fn replace_at(t: &Term, path: &[Step], new: Term) -> Term {
    match path.split_first() {
        None => new,
        Some((step, rest)) => match (step, t) {
            (Step::ParChild(i), Term::Par(cs)) => {
                let mut cs = cs.clone();
                cs[*i] = replace_at(&cs[*i], rest, new);
                Term::Par(cs)
            }
            (Step::Fun, Term::App(sub, f, a)) => Term::App(
                sub.clone(),
                alloc::boxed::Box::new(replace_at(f, rest, new)),
                a.clone(),
            ),
            (Step::Arg, Term::App(sub, f, a)) => Term::App(
                sub.clone(),
                f.clone(),
                alloc::boxed::Box::new(replace_at(a, rest, new)),
            ),
            (Step::DownBody, Term::Down(sub, b)) => {
                Term::Down(sub.clone(), alloc::boxed::Box::new(replace_at(b, rest, new)))
            }
            (Step::UpBody, Term::Up(sub, b)) => {
                Term::Up(sub.clone(), alloc::boxed::Box::new(replace_at(b, rest, new)))
            }
            _ => unreachable!("replace_at path verified by subterm_at"),
        },
    }
}

fn par_block(children: &[Term], indices: &[usize]) -> Term {
    let picked: Vec<Term> = indices.iter().map(|&i| children[i].clone()).collect();
    Term::par(picked)
}

/// The in-place rewrite of a redex for every rule that neither emits new
/// summands nor acts at the summand root.
fn rewrite(redex: &Term, tag: RuleTag, data: &SiteData) -> Term {
    use RuleTag::*;
    match (tag, redex) {
        (BetaV, Term::App(usub, f, a)) => {
            let (l, arg) = match (&**f, &**a) {
                (Term::Val(Value::Lambda(l)), Term::Val(v)) => (l, v.clone()),
                _ => unreachable!("beta redex shape"),
            };
            Term::down(
                usub.clone(),
                Term::var_sub(VarSubst::singleton(l.binder.clone(), arg), (*l.body).clone()),
            )
        }
        (SubstVar, Term::VarSub(sub, body)) => match &**body {
            Term::Val(Value::Var(x)) => {
                Term::Val(sub.get(x).cloned().unwrap_or(Value::Var(x.clone())))
            }
            _ => unreachable!(),
        },
        (SubstUnit, Term::VarSub(_, _)) => Term::unit(),
        (SubstLam, Term::VarSub(sub, body)) => match &**body {
            Term::Val(Value::Lambda(l)) => Term::Val(Value::Lambda(crate::syntax::Lambda {
                binder: l.binder.clone(),
                ann: l.ann.clone(),
                body: alloc::boxed::Box::new(Term::var_sub(sub.clone(), (*l.body).clone())),
            })),
            _ => unreachable!(),
        },
        (SubstApp, Term::VarSub(sub, body)) => match &**body {
            Term::App(vsub, f, a) => Term::app_sub(
                meta_apply_ref_subst(sub, vsub),
                Term::var_sub(sub.clone(), (**f).clone()),
                Term::var_sub(sub.clone(), (**a).clone()),
            ),
            _ => unreachable!(),
        },
        (SubstGet, Term::VarSub(_, body)) => (**body).clone(),
        (SubstPar, Term::VarSub(sub, body)) => match (&**body, data) {
            (Term::Par(cs), SiteData::Split(left)) => {
                let right: Vec<usize> = (0..cs.len()).filter(|j| !left.contains(j)).collect();
                Term::par(alloc::vec![
                    Term::var_sub(sub.clone(), par_block(cs, left)),
                    Term::var_sub(sub.clone(), par_block(cs, &right)),
                ])
            }
            _ => unreachable!(),
        },
        (SubstSubstR, Term::VarSub(sub, body)) => match &**body {
            Term::Down(vsub, inner) => Term::down(
                meta_apply_ref_subst(sub, vsub),
                Term::var_sub(sub.clone(), (**inner).clone()),
            ),
            _ => unreachable!(),
        },
        (SubstSubstRUp, Term::VarSub(sub, body)) => match &**body {
            Term::Up(vsub, inner) => Term::up(
                meta_apply_ref_subst(sub, vsub),
                Term::var_sub(sub.clone(), (**inner).clone()),
            ),
            _ => unreachable!(),
        },
        (SubstMerge, Term::VarSub(tau, body)) => match &**body {
            Term::VarSub(sigma, inner) => Term::var_sub(
                crate::syntax::compose_var_substs(sigma, tau),
                (**inner).clone(),
            ),
            _ => unreachable!(),
        },
        (RDownVal, Term::Down(_, body)) => (**body).clone(),
        (RDownPar, Term::Down(sub, body)) => match (&**body, data) {
            (Term::Par(cs), SiteData::Split(left)) => {
                let right: Vec<usize> = (0..cs.len()).filter(|j| !left.contains(j)).collect();
                Term::par(alloc::vec![
                    Term::down(sub.clone(), par_block(cs, left)),
                    Term::down(sub.clone(), par_block(cs, &right)),
                ])
            }
            _ => unreachable!(),
        },
        (RDownSwapUp, Term::Down(vsub, body)) => match &**body {
            Term::Up(usub, inner) => {
                Term::up(usub.clone(), Term::down(vsub.clone(), (**inner).clone()))
            }
            _ => unreachable!(),
        },
        (RDownMerge, Term::Down(vsub, body)) => match &**body {
            Term::Down(usub, inner) => {
                Term::down(juxtapose_ref_substs(usub, vsub), (**inner).clone())
            }
            _ => unreachable!(),
        },
        (RDownApp, Term::Down(vsub, body)) => match &**body {
            Term::App(usub, f, a) => Term::app_sub(
                juxtapose_ref_substs(usub, vsub),
                Term::down(vsub.clone(), (**f).clone()),
                Term::down(vsub.clone(), (**a).clone()),
            ),
            _ => unreachable!(),
        },
        (NdGetPick, Term::Down(sub, body)) => match (&**body, data) {
            (Term::Get(r), SiteData::Pick(i)) => {
                let v = sub
                    .get(r)
                    .and_then(|vs| vs.iter().nth(*i))
                    .expect("pick index in range");
                Term::Val(v.clone())
            }
            _ => unreachable!(),
        },
        (NdGetSkip, Term::Down(_, body)) => (**body).clone(),
        (RUpPar, Term::Par(cs)) => match data {
            SiteData::Junction { up, group } => {
                let (vsub, up_body) = match &cs[*up] {
                    Term::Up(v, b) => (v.clone(), (**b).clone()),
                    _ => unreachable!("junction up child"),
                };
                let receiver = Term::down(vsub.clone(), par_block(cs, group));
                let new_up = Term::up(vsub, Term::par(alloc::vec![up_body, receiver]));
                let mut rest: Vec<Term> = (0..cs.len())
                    .filter(|j| j != up && !group.contains(j))
                    .map(|j| cs[j].clone())
                    .collect();
                rest.push(new_up);
                Term::par(rest)
            }
            _ => unreachable!(),
        },
        (RUpLApp, Term::App(usub, f, a)) => match &**f {
            Term::Up(vsub, inner) => Term::up(
                vsub.clone(),
                Term::app_sub(
                    juxtapose_ref_substs(usub, vsub),
                    (**inner).clone(),
                    Term::down(vsub.clone(), (**a).clone()),
                ),
            ),
            _ => unreachable!(),
        },
        (RUpRApp, Term::App(usub, f, a)) => match &**a {
            Term::Up(vsub, inner) => Term::up(
                vsub.clone(),
                Term::app_sub(
                    juxtapose_ref_substs(usub, vsub),
                    Term::down(vsub.clone(), (**f).clone()),
                    (**inner).clone(),
                ),
            ),
            _ => unreachable!(),
        },
        _ => unreachable!("rewrite called with mismatched rule and redex"),
    }
}

/// Apply a site produced by [`decompose`] on the same sum. The result is
/// canonicalized.
pub fn apply(s: &Sum, site: &RedexSite) -> Result<Sum, ApplyError> {
    let summand = s.nth(site.summand).ok_or(ApplyError::BadPath)?;
    let redex = subterm_at(summand, &site.path).ok_or(ApplyError::BadPath)?;
    if redex != &site.redex {
        return Err(ApplyError::StaleSite);
    }
    let mut out = Sum::zero();
    for (k, t) in s.summands().enumerate() {
        if k != site.summand {
            out.insert(t.clone());
        }
    }
    match site.tag {
        RuleTag::RUpTop => {
            let body = match redex {
                Term::Up(_, b) => (**b).clone(),
                _ => return Err(ApplyError::StaleSite),
            };
            debug_assert!(site.path.is_empty());
            out.insert(body);
        }
        RuleTag::RDownGet => {
            let (sub, r) = match redex {
                Term::Down(sub, body) => match &**body {
                    Term::Get(r) => (sub, r),
                    _ => return Err(ApplyError::StaleSite),
                },
                _ => return Err(ApplyError::StaleSite),
            };
            // Remainder: the substitution is discarded but the read stays.
            out.insert(replace_at(summand, &site.path, Term::Get(r.clone())));
            // One summand per stored value, in the same thread context; an
            // undefined entry contributes the neutral element, nothing.
            if let Some(vs) = sub.get(r) {
                for v in vs.iter() {
                    out.insert(replace_at(summand, &site.path, Term::Val(v.clone())));
                }
            }
        }
        tag => {
            let new = rewrite(redex, tag, &site.data);
            out.insert(replace_at(summand, &site.path, new));
        }
    }
    Ok(canonicalize(&out))
}

// ---------------------------------------------------------------------------
// Successor sets
// ---------------------------------------------------------------------------

/// All one-step reducts under the full reduction.
pub fn successors_full(s: &Sum) -> BTreeSet<Sum> {
    let s = canonicalize(s);
    decompose(&s, Mode::Full)
        .iter()
        .map(|site| apply(&s, site).expect("fresh site"))
        .collect()
}

/// All one-step reducts of a simple term under the non-deterministic
/// reduction; results are simple terms.
pub fn successors_nd(t: &Term) -> BTreeSet<Term> {
    let s = Sum::singleton(canonical_term(t));
    decompose(&s, Mode::Nd)
        .iter()
        .map(|site| {
            let out = apply(&s, site).expect("fresh site");
            out.as_single()
                .expect("nd steps preserve simple terms")
                .clone()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Strategies and traces
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// The first site in the deterministic decompose order.
    Leftmost,
    /// Uniform over sites, reproducible for a fixed seed.
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStatus {
    NormalForm,
    Budget,
    Cycle,
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStatus::NormalForm => write!(f, "NormalForm"),
            TraceStatus::Budget => write!(f, "Budget"),
            TraceStatus::Cycle => write!(f, "Cycle"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub site: RedexSite,
    pub result: Sum,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub initial: Sum,
    pub steps: Vec<TraceStep>,
    pub status: TraceStatus,
}

/// Repeatedly pick one site per the strategy until no site remains, the
/// budget runs out, or a canonical state repeats.
pub fn run(start: &Sum, mode: Mode, strategy: Strategy, max_steps: usize) -> Result<Trace, UsageError> {
    let initial = canonicalize(start);
    if mode == Mode::Nd && initial.len() > 1 {
        return Err(UsageError::NdOnSum);
    }
    let mut rng = match strategy {
        Strategy::Random(seed) => Some(Rng::new(seed)),
        Strategy::Leftmost => None,
    };
    let mut seen: BTreeSet<Sum> = BTreeSet::new();
    seen.insert(initial.clone());
    let mut cur = initial.clone();
    let mut steps = Vec::new();
    let status = loop {
        let sites = decompose(&cur, mode);
        if sites.is_empty() {
            break TraceStatus::NormalForm;
        }
        if steps.len() >= max_steps {
            break TraceStatus::Budget;
        }
        let site = match &mut rng {
            None => sites.into_iter().next().unwrap(),
            Some(rng) => {
                let i = rng.below(sites.len());
                sites.into_iter().nth(i).unwrap()
            }
        };
        let next = apply(&cur, &site).expect("fresh site");
        steps.push(TraceStep {
            site,
            result: next.clone(),
        });
        if !seen.insert(next.clone()) {
            break TraceStatus::Cycle;
        }
        cur = next;
    };
    Ok(Trace {
        initial,
        steps,
        status,
    })
}

// ---------------------------------------------------------------------------
// Graphs and normal-form enumeration
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Expanded,
    Normal,
    Truncated,
}

#[derive(Clone, Debug)]
pub struct GraphNode {
    pub state: Sum,
    pub status: NodeStatus,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct GraphEdge {
    pub from: usize,
    pub tag: RuleTag,
    pub site: String,
    pub to: usize,
}

#[derive(Clone, Debug)]
pub struct ReductionGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// True when every reachable state was expanded within the limits.
    pub complete: bool,
}

impl ReductionGraph {
    pub fn normal_forms(&self) -> impl Iterator<Item = &Sum> {
        self.nodes
            .iter()
            .filter(|n| n.status == NodeStatus::Normal)
            .map(|n| &n.state)
    }
}

/// Breadth-first closure of the successor relation with memoization on
/// canonical forms.
pub fn reduction_graph(start: &Sum, mode: Mode, max_states: usize, max_depth: usize) -> ReductionGraph {
    use alloc::collections::BTreeMap;
    use alloc::collections::VecDeque;

    let initial = canonicalize(start);
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut edges: Vec<GraphEdge> = Vec::new();
    let mut index: BTreeMap<Sum, usize> = BTreeMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut complete = true;

    nodes.push(GraphNode {
        state: initial.clone(),
        status: NodeStatus::Truncated,
        depth: 0,
    });
    index.insert(initial, 0);
    queue.push_back(0);

    while let Some(i) = queue.pop_front() {
        let state = nodes[i].state.clone();
        let depth = nodes[i].depth;
        if depth >= max_depth {
            complete = false;
            continue; // stays Truncated
        }
        let sites = decompose(&state, mode);
        if sites.is_empty() {
            nodes[i].status = NodeStatus::Normal;
            continue;
        }
        let mut expanded_fully = true;
        for site in &sites {
            let next = apply(&state, site).expect("fresh site");
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= max_states {
                        complete = false;
                        expanded_fully = false;
                        continue;
                    }
                    let j = nodes.len();
                    nodes.push(GraphNode {
                        state: next.clone(),
                        status: NodeStatus::Truncated,
                        depth: depth + 1,
                    });
                    index.insert(next, j);
                    queue.push_back(j);
                    j
                }
            };
            edges.push(GraphEdge {
                from: i,
                tag: site.tag,
                site: site.path_string(),
                to: j,
            });
        }
        if expanded_fully {
            nodes[i].status = NodeStatus::Expanded;
        }
    }
    ReductionGraph {
        nodes,
        edges,
        complete,
    }
}

/// All reachable normal forms plus a flag saying whether the exploration was
/// exhaustive within the limits.
pub fn enumerate_normal_forms(
    start: &Sum,
    mode: Mode,
    max_states: usize,
    max_depth: usize,
) -> (BTreeSet<Sum>, bool) {
    let g = reduction_graph(start, mode, max_states, max_depth);
    (g.normal_forms().cloned().collect(), g.complete)
}

/// Non-deterministic-mode enumeration over simple terms.
pub fn enumerate_normal_forms_nd(
    start: &Term,
    max_states: usize,
    max_depth: usize,
) -> (BTreeSet<Term>, bool) {
    let (sums, complete) = enumerate_normal_forms(
        &Sum::singleton(start.clone()),
        Mode::Nd,
        max_states,
        max_depth,
    );
    (
        sums.iter()
            .map(|s| s.as_single().expect("nd states are simple").clone())
            .collect(),
        complete,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{RefName, RefSubst, VarName};
    use crate::typing::TypeExpr;
    use alloc::vec;

    fn lam(x: &str, body: Term) -> Term {
        Term::Val(Value::lambda(VarName::free(x), TypeExpr::Unit, body))
    }

    fn id_unit() -> Term {
        lam("x", Term::var("x"))
    }

    fn v1() -> Value {
        Value::lambda(VarName::free("x"), TypeExpr::Unit, Term::var("x"))
    }

    fn v2() -> Value {
        Value::lambda(VarName::free("x"), TypeExpr::Unit, Term::unit())
    }

    fn down1(r: &str, v: Value, body: Term) -> Term {
        Term::down(RefSubst::singleton(RefName::new(r), v), body)
    }

    #[test]
    fn decompose_single_beta() {
        let t = Term::app(id_unit(), Term::unit());
        let sites = decompose(&Sum::singleton(canonical_term(&t)), Mode::Full);
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].tag, RuleTag::BetaV);
    }

    #[test]
    fn decompose_down_get_full() {
        let t = down1("r", v1(), Term::get("r"));
        let sites = decompose(&Sum::singleton(canonical_term(&t)), Mode::Full);
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].tag, RuleTag::RDownGet);
    }

    #[test]
    fn decompose_up_par_junction_not_top() {
        // ([r -> {*}]^ *) || get r: the up par rule fires at the junction,
        // and the top rule is not offered because the up node is not a
        // summand root.
        let t = Term::par(vec![
            Term::up(RefSubst::singleton(RefName::new("r"), Value::Unit), Term::unit()),
            Term::get("r"),
        ]);
        let sites = decompose(&Sum::singleton(canonical_term(&t)), Mode::Full);
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].tag, RuleTag::RUpPar);
        assert!(!sites.iter().any(|s| s.tag == RuleTag::RUpTop));
    }

    #[test]
    fn apply_inner_get_leaves_remainder() {
        // [r -> {V2}]v [r -> {V1}]v get r at the inner get:
        // -> [r -> {V2}]v get r + [r -> {V2}]v V1
        let t = down1("r", v2(), down1("r", v1(), Term::get("r")));
        let s = Sum::singleton(canonical_term(&t));
        let sites = decompose(&s, Mode::Full);
        let get_site = sites.iter().find(|s| s.tag == RuleTag::RDownGet).unwrap();
        let out = apply(&s, get_site).unwrap();
        let expected = canonicalize(&Sum::from_terms([
            down1("r", v2(), Term::get("r")),
            down1("r", v2(), Term::Val(v1())),
        ]));
        assert_eq!(out, expected);
    }

    #[test]
    fn apply_up_par_rule() {
        let up = Term::up(RefSubst::singleton(RefName::new("r"), Value::Unit), Term::unit());
        let t = Term::par(vec![up, Term::get("r")]);
        let s = Sum::singleton(canonical_term(&t));
        let sites = decompose(&s, Mode::Full);
        let out = apply(&s, &sites[0]).unwrap();
        let vsub = RefSubst::singleton(RefName::new("r"), Value::Unit);
        let expected = canonicalize(&Sum::singleton(Term::up(
            vsub.clone(),
            Term::par(vec![Term::unit(), Term::down(vsub, Term::get("r"))]),
        )));
        assert_eq!(out, expected);
    }

    #[test]
    fn apply_subst_unit() {
        let t = Term::var_sub(
            VarSubst::singleton(VarName::free("x"), Value::Unit),
            Term::unit(),
        );
        let s = Sum::singleton(canonical_term(&t));
        let sites = decompose(&s, Mode::Full);
        assert_eq!(sites[0].tag, RuleTag::SubstUnit);
        let out = apply(&s, &sites[0]).unwrap();
        assert_eq!(out, Sum::singleton(Term::unit()));
    }

    #[test]
    fn apply_stale_site_detected() {
        let t = Term::app(id_unit(), Term::unit());
        let s = Sum::singleton(canonical_term(&t));
        let sites = decompose(&s, Mode::Full);
        let other = Sum::singleton(Term::unit());
        assert!(matches!(
            apply(&other, &sites[0]),
            Err(ApplyError::StaleSite) | Err(ApplyError::BadPath)
        ));
    }

    #[test]
    fn successors_of_normal_forms_empty() {
        assert!(successors_full(&Sum::singleton(Term::unit())).is_empty());
        assert!(successors_nd(&Term::unit()).is_empty());
    }

    #[test]
    fn full_get_emits_whole_sum_at_once() {
        let sub = RefSubst::from_pairs([(
            RefName::new("r"),
            crate::syntax::Multiset::new(vec![v1(), v2()]),
        )]);
        let t = Term::down(sub, Term::get("r"));
        let succs = successors_full(&Sum::singleton(t));
        assert_eq!(succs.len(), 1);
        let only = succs.iter().next().unwrap();
        let expected = canonicalize(&Sum::from_terms([
            Term::get("r"),
            Term::Val(v1()),
            Term::Val(v2()),
        ]));
        assert_eq!(only, &expected);
    }

    #[test]
    fn critical_pair_two_downs_both_offered() {
        let t = down1("r", v2(), down1("r", v1(), Term::get("r")));
        let succs = successors_full(&Sum::singleton(t));
        assert_eq!(succs.len(), 2);
    }

    #[test]
    fn nd_pick_and_skip() {
        let sub = RefSubst::from_pairs([(
            RefName::new("r"),
            crate::syntax::Multiset::new(vec![v1(), v2()]),
        )]);
        let t = Term::down(sub, Term::get("r"));
        let succs = successors_nd(&t);
        let expected: BTreeSet<Term> = [
            canonical_term(&Term::Val(v1())),
            canonical_term(&Term::Val(v2())),
            Term::get("r"),
        ]
        .into_iter()
        .collect();
        assert_eq!(succs, expected);
    }

    #[test]
    fn nd_unbound_reference_skips_only() {
        let t = Term::down(RefSubst::new(), Term::get("r"));
        let succs = successors_nd(&t);
        assert_eq!(succs.len(), 1);
        assert!(succs.contains(&Term::get("r")));
    }

    #[test]
    fn run_beta_to_normal_form() {
        let t = Term::app(id_unit(), Term::unit());
        let trace = run(&Sum::singleton(t), Mode::Full, Strategy::Leftmost, 10).unwrap();
        assert_eq!(trace.status, TraceStatus::NormalForm);
        let tags: Vec<RuleTag> = trace.steps.iter().map(|s| s.site.tag).collect();
        assert_eq!(tags, vec![RuleTag::BetaV, RuleTag::SubstVar, RuleTag::RDownVal]);
        assert_eq!(
            trace.steps.last().unwrap().result,
            Sum::singleton(Term::unit())
        );
    }

    #[test]
    fn run_zero_budget_on_normal_form() {
        let trace = run(
            &Sum::singleton(Term::unit()),
            Mode::Full,
            Strategy::Leftmost,
            0,
        )
        .unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.status, TraceStatus::NormalForm);
    }

    #[test]
    fn run_reproducible_for_fixed_seed() {
        let sub = RefSubst::from_pairs([(
            RefName::new("r"),
            crate::syntax::Multiset::new(vec![v1(), v2()]),
        )]);
        let t = Term::down(sub, Term::get("r"));
        let a = run(&Sum::singleton(t.clone()), Mode::Nd, Strategy::Random(7), 50).unwrap();
        let b = run(&Sum::singleton(t), Mode::Nd, Strategy::Random(7), 50).unwrap();
        assert_eq!(a.status, b.status);
        let ta: Vec<_> = a.steps.iter().map(|s| s.site.path_string()).collect();
        let tb: Vec<_> = b.steps.iter().map(|s| s.site.path_string()).collect();
        assert_eq!(ta, tb);
    }

    #[test]
    fn enumerate_worked_critical_pair() {
        let t = down1("r", v2(), down1("r", v1(), Term::get("r")));
        let (nfs, complete) = enumerate_normal_forms(&Sum::singleton(t), Mode::Full, 1000, 100);
        assert!(complete);
        assert_eq!(nfs.len(), 1);
        let expected = canonicalize(&Sum::from_terms([
            Term::get("r"),
            Term::Val(v1()),
            Term::Val(v2()),
        ]));
        assert!(nfs.contains(&expected));
    }

    #[test]
    fn enumerate_nd_beta() {
        let t = Term::app(id_unit(), Term::unit());
        let (nfs, complete) = enumerate_normal_forms_nd(&t, 1000, 100);
        assert!(complete);
        assert_eq!(nfs.len(), 1);
        assert!(nfs.contains(&Term::unit()));
    }

    #[test]
    fn graph_shapes() {
        // A value: one node, no edges.
        let g = reduction_graph(&Sum::singleton(Term::unit()), Mode::Full, 100, 100);
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
        assert!(g.complete);

        // [r -> {V1}]v get r in nd mode: initial, V1, get r; two edges.
        let t = down1("r", v1(), Term::get("r"));
        let g = reduction_graph(&Sum::singleton(t), Mode::Nd, 100, 100);
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        assert!(g.complete);

        // A beta redex in nd mode reaches * through a finite dag.
        let t = Term::app(id_unit(), Term::unit());
        let g = reduction_graph(&Sum::singleton(t), Mode::Nd, 100, 100);
        assert!(g.complete);
        assert!(g
            .normal_forms()
            .any(|s| s.as_single() == Some(&Term::unit())));
    }

    #[test]
    fn nd_usage_error_on_sums() {
        let s = Sum::from_terms([Term::unit(), Term::get("r")]);
        assert!(matches!(
            run(&s, Mode::Nd, Strategy::Leftmost, 10),
            Err(UsageError::NdOnSum)
        ));
    }
}
