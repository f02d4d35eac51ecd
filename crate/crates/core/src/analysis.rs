//! Metatheory machinery: term skeletons, the reachability of reads and
//! applications, the simulation preorders, a bounded local-confluence
//! checker, the environment-reduction game, and a sampling probe for the
//! well-behavedness condition.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::reduction::{self, Mode, RedexSite, RuleTag};
use crate::rng::Rng;
use crate::syntax::{
    canonical_term, canonicalize, juxtapose_ref_substs, meta_apply_ref_subst, RefName, RefSubst,
    Sum, Term, Value,
};

// ---------------------------------------------------------------------------
// Occurrences, skeletons, reachability
// ---------------------------------------------------------------------------

/// A read or application occurrence not under an abstraction, addressed by
/// child indices from the root (application: function 0, argument 1;
/// substitution bodies: 0; parallel children by position).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Occurrence {
    pub path: Vec<usize>,
    pub kind: OccKind,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OccKind {
    Get(RefName),
    App,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OccurrenceError(pub String);

impl fmt::Display for OccurrenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid occurrence: {}", self.0)
    }
}

impl core::error::Error for OccurrenceError {}

/// The skeleton: every downward reference substitution not under an
/// abstraction is elided, and the stationary substitutions on applications
/// are blanked (downward steps merge into them, and the preorders compare
/// them separately). The result is canonical; the operation is idempotent.
pub fn skeleton(t: &Term) -> Term {
    canonical_term(&skel(t))
}

fn skel(t: &Term) -> Term {
    match t {
        Term::Val(_) | Term::Get(_) => t.clone(),
        Term::VarSub(sub, body) => Term::var_sub(sub.clone(), skel(body)),
        Term::App(_, f, a) => Term::app(skel(f), skel(a)),
        Term::Down(_, body) => skel(body),
        Term::Up(sub, body) => Term::up(sub.clone(), skel(body)),
        Term::Par(cs) => Term::par(cs.iter().map(skel).collect()),
    }
}

/// The merged reference substitution in scope of the addressed occurrence:
/// downward layers juxtapose, explicit variable substitutions meta-apply to
/// everything below them, upward and stationary layers are transparent.
pub fn reach(t: &Term, occ: &Occurrence) -> Result<RefSubst, OccurrenceError> {
    fn go(t: &Term, path: &[usize], kind: &OccKind) -> Result<RefSubst, OccurrenceError> {
        match path.split_first() {
            None => match (t, kind) {
                (Term::Get(r), OccKind::Get(want)) if r == want => Ok(RefSubst::new()),
                (Term::App(..), OccKind::App) => Ok(RefSubst::new()),
                _ => Err(OccurrenceError(format!(
                    "occurrence kind does not match the addressed node"
                ))),
            },
            Some((&i, rest)) => match t {
                Term::Down(sub, body) if i == 0 => {
                    Ok(juxtapose_ref_substs(sub, &go(body, rest, kind)?))
                }
                Term::VarSub(sub, body) if i == 0 => {
                    Ok(meta_apply_ref_subst(sub, &go(body, rest, kind)?))
                }
                Term::Up(_, body) if i == 0 => go(body, rest, kind),
                Term::App(_, f, _) if i == 0 => go(f, rest, kind),
                Term::App(_, _, a) if i == 1 => go(a, rest, kind),
                Term::Par(cs) if i < cs.len() => go(&cs[i], rest, kind),
                _ => Err(OccurrenceError(format!("no child {i} at this node"))),
            },
        }
    }
    go(t, &occ.path, &occ.kind)
}

/// All occurrences of reads and applications not under an abstraction,
/// paired with their reach; applications also carry their stationary
/// substitution. Parallel children are visited in skeleton order so that
/// equal-skeleton terms enumerate corresponding occurrences at the same
/// positions.
#[derive(Clone, Debug)]
pub struct OccInfo {
    pub occurrence: Occurrence,
    pub reach: RefSubst,
    pub lam_subst: Option<RefSubst>,
}

pub fn occurrences(t: &Term) -> Vec<OccInfo> {
    fn go(t: &Term, path: &mut Vec<usize>, out: &mut Vec<OccInfo>) {
        match t {
            Term::Val(_) => {}
            Term::Get(r) => out.push(OccInfo {
                occurrence: Occurrence {
                    path: path.clone(),
                    kind: OccKind::Get(r.clone()),
                },
                reach: RefSubst::new(),
                lam_subst: None,
            }),
            Term::VarSub(sub, body) => {
                let start = out.len();
                path.push(0);
                go(body, path, out);
                path.pop();
                for info in &mut out[start..] {
                    info.reach = meta_apply_ref_subst(sub, &info.reach);
                }
            }
            Term::Down(sub, body) => {
                let start = out.len();
                path.push(0);
                go(body, path, out);
                path.pop();
                for info in &mut out[start..] {
                    info.reach = juxtapose_ref_substs(sub, &info.reach);
                }
            }
            Term::Up(_, body) => {
                path.push(0);
                go(body, path, out);
                path.pop();
            }
            Term::App(sub, f, a) => {
                out.push(OccInfo {
                    occurrence: Occurrence {
                        path: path.clone(),
                        kind: OccKind::App,
                    },
                    reach: RefSubst::new(),
                    lam_subst: Some(sub.clone()),
                });
                path.push(0);
                go(f, path, out);
                path.pop();
                path.push(1);
                go(a, path, out);
                path.pop();
            }
            Term::Par(cs) => {
                // Skeleton order: two terms with equal skeletons must list
                // corresponding children at the same rank even though their
                // own canonical orders may differ.
                let mut order: Vec<usize> = (0..cs.len()).collect();
                order.sort_by(|&i, &j| {
                    (skeleton(&cs[i]), &cs[i]).cmp(&(skeleton(&cs[j]), &cs[j]))
                });
                for &i in &order {
                    path.push(i);
                    go(&cs[i], path, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// The preorders
// ---------------------------------------------------------------------------

/// Push downward substitutions past parallels and upward nodes to a
/// fixpoint (split at parallels, merge adjacent pairs, swap past upward
/// nodes, vanish on values). These moves change neither the skeleton nor
/// any occurrence reach, and afterwards no downward node separates two
/// parallel layers, so the occurrence walks of equal-skeleton terms align
/// positionally. Downs are deliberately not merged into application
/// substitutions: the bounded preorder's application clause distinguishes
/// reach from the stationary substitution as written.
fn push_downs(t: &Term) -> Term {
    match t {
        Term::Val(_) | Term::Get(_) => t.clone(),
        Term::VarSub(sub, b) => Term::var_sub(sub.clone(), push_downs(b)),
        Term::App(sub, f, a) => Term::app_sub(sub.clone(), push_downs(f), push_downs(a)),
        Term::Up(sub, b) => Term::up(sub.clone(), push_downs(b)),
        Term::Par(cs) => Term::par(cs.iter().map(push_downs).collect()),
        Term::Down(sub, b) => match push_downs(b) {
            Term::Par(cs) => Term::par(
                cs.into_iter()
                    .map(|c| push_downs(&Term::down(sub.clone(), c)))
                    .collect(),
            ),
            Term::Down(inner, body) => {
                push_downs(&Term::down(juxtapose_ref_substs(&inner, sub), *body))
            }
            Term::Up(inner, body) => {
                Term::up(inner, push_downs(&Term::down(sub.clone(), *body)))
            }
            Term::Val(v) => Term::Val(v),
            stuck => Term::down(sub.clone(), stuck),
        },
    }
}

enum CmpMode<'a> {
    Leq,
    /// The bounded variant, with the application clause crossed between the
    /// sides as printed in the definition.
    Bounded(&'a RefSubst),
}

/// A downward layer found under explicit variable substitutions contributes
/// with those substitutions meta-applied, innermost first.
fn apply_pending(stack: &[crate::syntax::VarSubst], s: &RefSubst) -> RefSubst {
    let mut out = s.clone();
    for sub in stack.iter().rev() {
        out = meta_apply_ref_subst(sub, &out);
    }
    out
}

/// Walk the two terms in lockstep, accumulating each side's in-scope
/// substitutions (downward layers juxtapose, layers under explicit variable
/// substitutions — required equal by skeleton equality — contribute
/// meta-applied, upward and stationary layers are transparent), and check
/// the occurrence clauses at reads and applications. Equal-skeleton parallel
/// siblings are paired by searching for a bijection that satisfies the
/// clauses, which is the correspondence skeleton equality promises.
fn rel(
    m: &Term,
    n: &Term,
    rm: &RefSubst,
    rn: &RefSubst,
    pending: &mut Vec<crate::syntax::VarSubst>,
    mode: &CmpMode,
) -> bool {
    match (m, n) {
        // downward layers are invisible to the skeleton
        (Term::Down(s, b), _) => {
            let rm = juxtapose_ref_substs(rm, &apply_pending(pending, s));
            rel(b, n, &rm, rn, pending, mode)
        }
        (_, Term::Down(s, b)) => {
            let rn = juxtapose_ref_substs(rn, &apply_pending(pending, s));
            rel(m, b, rm, &rn, pending, mode)
        }
        (Term::Val(a), Term::Val(b)) => a == b,
        (Term::Get(r1), Term::Get(r2)) => {
            r1 == r2
                && rm.subset_of(rn)
                && match mode {
                    CmpMode::Leq => true,
                    CmpMode::Bounded(v) => rn.subset_of(&juxtapose_ref_substs(rm, v)),
                }
        }
        (Term::App(v1, f1, a1), Term::App(v2, f2, a2)) => {
            let clause = match mode {
                CmpMode::Leq => {
                    let left = juxtapose_ref_substs(rm, v1);
                    let right = juxtapose_ref_substs(rn, v2);
                    left.subset_of(&right)
                }
                CmpMode::Bounded(v) => {
                    let left = juxtapose_ref_substs(rm, v2);
                    let right = juxtapose_ref_substs(rn, v1);
                    left.subset_of(&right)
                        && right.subset_of(&juxtapose_ref_substs(&left, v))
                }
            };
            clause
                && rel(f1, f2, rm, rn, pending, mode)
                && rel(a1, a2, rm, rn, pending, mode)
        }
        (Term::VarSub(s1, b1), Term::VarSub(s2, b2)) => {
            if s1 != s2 {
                return false;
            }
            pending.push(s1.clone());
            let out = rel(b1, b2, rm, rn, pending, mode);
            pending.pop();
            out
        }
        (Term::Up(s1, b1), Term::Up(s2, b2)) => {
            s1 == s2 && rel(b1, b2, rm, rn, pending, mode)
        }
        (Term::Par(cs1), Term::Par(cs2)) => {
            if cs1.len() != cs2.len() {
                return false;
            }
            fn assign(
                cs1: &[Term],
                cs2: &[Term],
                used: &mut Vec<bool>,
                i: usize,
                rm: &RefSubst,
                rn: &RefSubst,
                pending: &mut Vec<crate::syntax::VarSubst>,
                mode: &CmpMode,
            ) -> bool {
                if i == cs1.len() {
                    return true;
                }
                for j in 0..cs2.len() {
                    if !used[j] && rel(&cs1[i], &cs2[j], rm, rn, pending, mode) {
                        used[j] = true;
                        if assign(cs1, cs2, used, i + 1, rm, rn, pending, mode) {
                            return true;
                        }
                        used[j] = false;
                    }
                }
                false
            }
            let mut used = alloc::vec![false; cs2.len()];
            assign(cs1, cs2, &mut used, 0, rm, rn, pending, mode)
        }
        _ => false,
    }
}

fn preorder_rel(m: &Term, n: &Term, mode: &CmpMode) -> bool {
    let m = canonical_term(&push_downs(&canonical_term(m)));
    let n = canonical_term(&push_downs(&canonical_term(n)));
    rel(&m, &n, &RefSubst::new(), &RefSubst::new(), &mut Vec::new(), mode)
}

/// `m` is below `n` when their skeletons coincide and, occurrence-wise, the
/// substitutions in scope on the left are included in those on the right
/// (applications contribute their own stationary substitution to each side).
pub fn preorder_leq(m: &Term, n: &Term) -> bool {
    preorder_rel(m, n, &CmpMode::Leq)
}

/// The bounded variant: the difference between the two sides is capped by
/// `bound`. The application clause follows the definition as printed, with
/// the stationary substitutions crossed between the sides.
pub fn preorder_bounded(m: &Term, n: &Term, bound: &RefSubst) -> bool {
    let bound = crate::syntax::canonical_ref_subst(bound);
    preorder_rel(m, n, &CmpMode::Bounded(&bound))
}

// ---------------------------------------------------------------------------
// One-step simulation oracle
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimulationPreorderReport {
    pub reducts_checked: usize,
    /// Reducts of the smaller term that no bounded reduct of the larger one
    /// covers.
    pub failures: Vec<Term>,
}

impl SimulationPreorderReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For every one-step nd reduct `m'` of `m`, search breadth-first for an
/// `n'` with `n ->* n'` (at most `budget` steps) and `m'` below `n'`.
pub fn check_simulation_preorder(m: &Term, n: &Term, budget: usize) -> SimulationPreorderReport {
    let n = canonical_term(n);
    let mut report = SimulationPreorderReport {
        reducts_checked: 0,
        failures: Vec::new(),
    };
    for m_next in reduction::successors_nd(m) {
        report.reducts_checked += 1;
        let mut frontier = alloc::vec![n.clone()];
        let mut seen: BTreeSet<Term> = frontier.iter().cloned().collect();
        let mut found = preorder_leq(&m_next, &n);
        let mut depth = 0;
        while !found && depth < budget && !frontier.is_empty() {
            let mut next = Vec::new();
            'grow: for cur in &frontier {
                for succ in reduction::successors_nd(cur) {
                    if seen.insert(succ.clone()) {
                        if preorder_leq(&m_next, &succ) {
                            found = true;
                            break 'grow;
                        }
                        next.push(succ);
                    }
                    if seen.len() > 20_000 {
                        break 'grow;
                    }
                }
            }
            frontier = next;
            depth += 1;
        }
        if !found {
            report.failures.push(m_next);
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Local confluence
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PairContexts {
    Disjoint,
    Overlapping,
}

#[derive(Clone, Debug)]
pub struct DivergencePair {
    pub left: Sum,
    pub right: Sum,
    pub left_tag: RuleTag,
    pub right_tag: RuleTag,
    pub contexts: PairContexts,
    pub joined: bool,
    pub join_steps: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ConfluenceReport {
    pub pairs: Vec<DivergencePair>,
}

impl ConfluenceReport {
    pub fn ok(&self) -> bool {
        self.pairs.iter().all(|p| p.joined)
    }

    pub fn unjoined(&self) -> usize {
        self.pairs.iter().filter(|p| !p.joined).count()
    }
}

fn sites_overlap(a: &RedexSite, b: &RedexSite) -> PairContexts {
    if a.summand != b.summand {
        return PairContexts::Disjoint;
    }
    let shorter = a.path.len().min(b.path.len());
    if a.path[..shorter] == b.path[..shorter] {
        PairContexts::Overlapping
    } else {
        PairContexts::Disjoint
    }
}

/// Check that every pair of distinct one-step successors of `s` rejoins
/// within the budget (breadth-first on each side, intersecting by canonical
/// form level by level).
pub fn check_local_confluence(s: &Sum, join_budget: usize) -> ConfluenceReport {
    let s = canonicalize(s);
    let sites = reduction::decompose(&s, Mode::Full);
    let mut outcomes: Vec<(RedexSite, Sum)> = Vec::new();
    for site in sites {
        let out = reduction::apply(&s, &site).expect("fresh site");
        if outcomes.iter().all(|(_, seen)| seen != &out) {
            outcomes.push((site, out));
        }
    }
    let mut report = ConfluenceReport::default();
    for i in 0..outcomes.len() {
        for j in (i + 1)..outcomes.len() {
            let (site_a, a) = &outcomes[i];
            let (site_b, b) = &outcomes[j];
            let (joined, join_steps) = joinable(a, b, join_budget);
            report.pairs.push(DivergencePair {
                left: a.clone(),
                right: b.clone(),
                left_tag: site_a.tag,
                right_tag: site_b.tag,
                contexts: sites_overlap(site_a, site_b),
                joined,
                join_steps,
            });
        }
    }
    report
}

fn joinable(a: &Sum, b: &Sum, budget: usize) -> (bool, usize) {
    let mut ra: BTreeSet<Sum> = [a.clone()].into_iter().collect();
    let mut rb: BTreeSet<Sum> = [b.clone()].into_iter().collect();
    if !ra.is_disjoint(&rb) {
        return (true, 0);
    }
    let mut fa = ra.clone();
    let mut fb = rb.clone();
    for depth in 1..=budget {
        let mut grew = false;
        for (reached, frontier) in [(&mut ra, &mut fa), (&mut rb, &mut fb)] {
            let mut next = BTreeSet::new();
            for cur in frontier.iter() {
                for succ in reduction::successors_full(cur) {
                    if reached.insert(succ.clone()) {
                        next.insert(succ);
                    }
                }
            }
            grew |= !next.is_empty();
            *frontier = next;
            if reached.len() > 50_000 {
                return (false, depth);
            }
        }
        if !ra.is_disjoint(&rb) {
            return (true, depth);
        }
        if !grew {
            return (false, depth);
        }
    }
    (false, budget)
}

// ---------------------------------------------------------------------------
// Environment reduction
// ---------------------------------------------------------------------------

/// A move in the interaction game against the environment.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnvDirective {
    /// Take the nd site with the given index in decompose order.
    Internal(usize),
    /// Strip a root upward substitution and record its content as emitted.
    Absorb,
    /// Wrap the state in the next scheduled downward substitution.
    Inject,
}

/// A finite prefix of the environment's substitution sequence together with
/// an interleaving.
#[derive(Clone, Debug, Default)]
pub struct EnvSchedule {
    pub injections: Vec<RefSubst>,
    pub directives: Vec<EnvDirective>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ScheduleError {
    AbsorbOnNonUp(usize),
    NoSuchSite { step: usize, site: usize, available: usize },
    InjectionsExhausted(usize),
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::AbsorbOnNonUp(i) => {
                write!(f, "step {i}: absorb requested on a state without a root upward substitution")
            }
            ScheduleError::NoSuchSite { step, site, available } => write!(
                f,
                "step {step}: internal site {site} requested, only {available} available"
            ),
            ScheduleError::InjectionsExhausted(i) => {
                write!(f, "step {i}: no scheduled substitution left to inject")
            }
        }
    }
}

impl core::error::Error for ScheduleError {}

#[derive(Clone, Debug)]
pub struct EnvStep {
    pub directive: EnvDirective,
    pub state: Term,
}

#[derive(Clone, Debug)]
pub struct EnvTrace {
    pub initial: Term,
    pub steps: Vec<EnvStep>,
    /// The upward substitutions emitted by absorb moves, in order.
    pub emitted: Vec<RefSubst>,
}

/// Execute the interleaving: internal moves are nd steps, absorb strips a
/// root upward substitution, inject wraps the state in the next scheduled
/// downward substitution.
pub fn env_reduce(m: &Term, sched: &EnvSchedule) -> Result<EnvTrace, ScheduleError> {
    let initial = canonical_term(m);
    let mut cur = initial.clone();
    let mut steps = Vec::new();
    let mut emitted = Vec::new();
    let mut next_injection = 0usize;
    for (i, &d) in sched.directives.iter().enumerate() {
        match d {
            EnvDirective::Internal(site_idx) => {
                let s = Sum::singleton(cur.clone());
                let sites = reduction::decompose(&s, Mode::Nd);
                if site_idx >= sites.len() {
                    return Err(ScheduleError::NoSuchSite {
                        step: i,
                        site: site_idx,
                        available: sites.len(),
                    });
                }
                let out = reduction::apply(&s, &sites[site_idx]).expect("fresh site");
                cur = out.as_single().expect("nd step").clone();
            }
            EnvDirective::Absorb => match &cur {
                Term::Up(sub, body) => {
                    emitted.push(sub.clone());
                    cur = canonical_term(body);
                }
                _ => return Err(ScheduleError::AbsorbOnNonUp(i)),
            },
            EnvDirective::Inject => {
                if next_injection >= sched.injections.len() {
                    return Err(ScheduleError::InjectionsExhausted(i));
                }
                cur = canonical_term(&Term::down(
                    sched.injections[next_injection].clone(),
                    cur.clone(),
                ));
                next_injection += 1;
            }
        }
        steps.push(EnvStep {
            directive: d,
            state: cur.clone(),
        });
    }
    Ok(EnvTrace {
        initial,
        steps,
        emitted,
    })
}

// ---------------------------------------------------------------------------
// Well-behavedness probe
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct WbReport {
    pub samples: usize,
    pub max_upward_emissions: usize,
    pub emitted_values: BTreeSet<Value>,
    /// True when some sampled schedule ran out of budget while moves were
    /// still available.
    pub truncated: bool,
}

/// Sample random schedules and report the largest number of absorb moves
/// seen and every emitted value. This is an evidence generator, not a
/// decision procedure.
pub fn well_behaved_probe(
    m: &Term,
    injections: &[RefSubst],
    step_budget: usize,
    schedule_samples: usize,
    seed: u64,
) -> WbReport {
    let start = canonical_term(m);
    let mut rng = Rng::new(seed);
    let mut report = WbReport {
        samples: schedule_samples,
        max_upward_emissions: 0,
        emitted_values: BTreeSet::new(),
        truncated: false,
    };
    for _ in 0..schedule_samples {
        let mut cur = start.clone();
        let mut absorbs = 0usize;
        let mut next_injection = 0usize;
        let mut steps = 0usize;
        loop {
            if steps >= step_budget {
                report.truncated = true;
                break;
            }
            let s = Sum::singleton(cur.clone());
            let sites = reduction::decompose(&s, Mode::Nd);
            // moves: each internal site, plus absorb, plus inject
            let can_absorb = matches!(cur, Term::Up(_, _));
            let can_inject = next_injection < injections.len();
            let n_moves = sites.len() + usize::from(can_absorb) + usize::from(can_inject);
            if n_moves == 0 {
                break;
            }
            let pick = rng.below(n_moves);
            if pick < sites.len() {
                let out = reduction::apply(&s, &sites[pick]).expect("fresh site");
                cur = out.as_single().expect("nd step").clone();
            } else if can_absorb && pick == sites.len() {
                match &cur {
                    Term::Up(sub, body) => {
                        absorbs += 1;
                        for (_, vs) in sub.iter() {
                            for v in vs.iter() {
                                report.emitted_values.insert(v.clone());
                            }
                        }
                        cur = canonical_term(body);
                    }
                    _ => unreachable!(),
                }
            } else {
                cur = canonical_term(&Term::down(injections[next_injection].clone(), cur));
                next_injection += 1;
            }
            steps += 1;
        }
        report.max_upward_emissions = report.max_upward_emissions.max(absorbs);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_term;

    fn t(src: &str) -> Term {
        parse_term(src).unwrap()
    }

    #[test]
    fn skeleton_elides_downs_outside_lambdas() {
        assert_eq!(skeleton(&t("[r -> {*}]v get r")), t("get r"));
        let frozen = t("\\x:Unit. [r -> {*}]v get r");
        assert_eq!(skeleton(&frozen), frozen);
        assert_eq!(skeleton(&t("get r")), t("get r"));
        // idempotent
        let big = t("[r -> {*}]v (((\\x:Unit. x) get r) || [s -> {*}]^ *)");
        assert_eq!(skeleton(&skeleton(&big)), skeleton(&big));
    }

    #[test]
    fn reach_clauses() {
        // two downward layers juxtapose
        let term = t("[r -> {\\x:Unit. *}]v [r -> {\\x:Unit. x}]v get r");
        let occs = occurrences(&term);
        assert_eq!(occs.len(), 1);
        assert_eq!(occs[0].reach.get(&RefName::new("r")).unwrap().len(), 2);
        // base case: nowhere defined
        let occs = occurrences(&t("get r"));
        assert!(occs[0].reach.is_empty());
        // a variable substitution meta-applies
        let term = t("{x := *}s [r -> {x}]v get r");
        let occs = occurrences(&term);
        let vs = occs[0].reach.get(&RefName::new("r")).unwrap();
        assert_eq!(vs.iter().collect::<Vec<_>>(), alloc::vec![&Value::Unit]);
        // the explicit reach accessor agrees
        let got = reach(&term, &occs[0].occurrence).unwrap();
        assert_eq!(got, occs[0].reach);
    }

    #[test]
    fn preorder_examples() {
        let small = t("get r");
        let big = t("[r -> {*}]v get r");
        assert!(preorder_leq(&small, &big));
        assert!(preorder_leq(&small, &small));
        assert!(!preorder_leq(&big, &small));
    }

    #[test]
    fn preorder_bounded_examples() {
        let small = t("get r");
        let big = t("[r -> {*}]v get r");
        let bound = crate::surface::parse_ref_subst("[r -> {*}]").unwrap();
        assert!(preorder_bounded(&small, &big, &bound));
        assert!(!preorder_bounded(&small, &big, &RefSubst::new()));
        assert!(preorder_bounded(&small, &small, &RefSubst::new()));
    }

    #[test]
    fn simulation_preorder_bounded_search() {
        // no nd reduct of `get r`: vacuous pass
        let report = check_simulation_preorder(&t("get r"), &t("[r -> {*}]v get r"), 8);
        assert_eq!(report.reducts_checked, 0);
        assert!(report.ok());
        // picks are matched
        let m = t("[r -> {\\x:Unit. x}]v get r");
        let n = t("[r -> {\\x:Unit. x, \\x:Unit. *}]v get r");
        let report = check_simulation_preorder(&m, &n, 8);
        assert!(report.ok(), "failures: {:?}", report.failures);
        // beta reducts correspond step for step
        let m = t("((\\x:Unit. x) *)");
        let n = t("[r -> {*}]v ((\\x:Unit. x) *)");
        assert!(preorder_leq(&m, &n));
        let report = check_simulation_preorder(&m, &n, 8);
        assert!(report.ok(), "failures: {:?}", report.failures);
    }

    #[test]
    fn local_confluence_worked_pair() {
        let term = t("[r -> {\\x:Unit. *}]v [r -> {\\x:Unit. x}]v get r");
        let report = check_local_confluence(&Sum::singleton(term), 32);
        assert!(!report.pairs.is_empty());
        assert!(report.ok(), "unjoined: {}", report.unjoined());
    }

    #[test]
    fn local_confluence_single_redex_vacuous() {
        let report = check_local_confluence(&Sum::singleton(t("((\\x:Unit. x) *)")), 8);
        assert!(report.pairs.is_empty());
    }

    #[test]
    fn local_confluence_two_ups() {
        let term = t("([r -> {*}]^ *) || ([s -> {*}]^ *)");
        let report = check_local_confluence(&Sum::singleton(term), 32);
        assert!(report.ok(), "unjoined: {}", report.unjoined());
    }

    #[test]
    fn env_reduce_absorb_and_inject() {
        // absorb emits and unwraps
        let trace = env_reduce(
            &t("[r -> {*}]^ *"),
            &EnvSchedule {
                injections: alloc::vec![],
                directives: alloc::vec![EnvDirective::Absorb],
            },
        )
        .unwrap();
        assert_eq!(trace.emitted.len(), 1);
        assert_eq!(trace.steps.last().unwrap().state, Term::unit());

        // inject then pick
        let inj = crate::surface::parse_ref_subst("[r -> {*}]").unwrap();
        let trace = env_reduce(
            &t("get r"),
            &EnvSchedule {
                injections: alloc::vec![inj],
                directives: alloc::vec![EnvDirective::Inject, EnvDirective::Internal(0)],
            },
        )
        .unwrap();
        assert_eq!(trace.steps.last().unwrap().state, Term::unit());

        // empty schedule: empty trace
        let trace = env_reduce(&t("*"), &EnvSchedule::default()).unwrap();
        assert!(trace.steps.is_empty());

        // absorb on a non-up state is a schedule error
        let err = env_reduce(
            &t("*"),
            &EnvSchedule {
                injections: alloc::vec![],
                directives: alloc::vec![EnvDirective::Absorb],
            },
        )
        .unwrap_err();
        assert!(matches!(err, ScheduleError::AbsorbOnNonUp(0)));
    }

    #[test]
    fn wb_probe_counts_emissions() {
        let report = well_behaved_probe(&t("*"), &[], 32, 16, 1);
        assert_eq!(report.max_upward_emissions, 0);

        let report = well_behaved_probe(&t("[r -> {*}]^ *"), &[], 32, 16, 1);
        assert_eq!(report.max_upward_emissions, 1);
        assert!(report.emitted_values.contains(&Value::Unit));

        let report = well_behaved_probe(&t("get r || [r -> {*}]^ *"), &[], 64, 64, 7);
        assert!(report.max_upward_emissions <= 1);
    }
}
