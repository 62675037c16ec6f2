//! Higher-order rewriting: rules, the leftmost-outermost strategy,
//! normalization, conversion checking, and rule-level lints.
//!
//! Redex discovery is purely syntactic Miller-pattern matching: a rule
//! `scope |- lhs --> rhs` fires at a subterm when the lhs matches it
//! without any intervening reduction; non-linear variables compare up to
//! alpha. Rules are tried at the root first, in declaration order, then
//! in the spine left to right.

use std::collections::{HashMap, HashSet};

use crate::error::{KResult, KernelError};
use crate::pattern;
use crate::subst::subst_term;
use crate::syntax::*;

pub const DEFAULT_FUEL: u64 = 10_000_000;

/// Step budget shared across a normalization/conversion task. Each applied
/// rewrite burns one unit.
#[derive(Debug, Clone)]
pub struct Fuel {
    left: u64,
}

impl Fuel {
    pub fn new(n: u64) -> Self {
        Fuel { left: n }
    }
    pub fn default_budget() -> Self {
        Fuel::new(DEFAULT_FUEL)
    }
    pub fn burn(&mut self) -> KResult<()> {
        if self.left == 0 {
            return Err(KernelError::FuelExhausted);
        }
        self.left -= 1;
        Ok(())
    }
    pub fn remaining(&self) -> u64 {
        self.left
    }
}

/// A rewrite rule `scope |- lhs --> rhs :: sort`. The lhs is a Miller
/// pattern over the rule scope (flexible) with empty rigid base.
#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub scope: Scope,
    pub sort: Sort,
    pub lhs: Term,
    pub rhs: Term,
}

#[derive(Clone, Debug, Default)]
pub struct RewriteSystem {
    rules: Vec<RewriteRule>,
    by_head: HashMap<Name, Vec<usize>>,
}

impl RewriteSystem {
    pub fn push(&mut self, rule: RewriteRule) {
        let idx = self.rules.len();
        if let Head::Const(c) = rule.lhs.head() {
            self.by_head.entry(c.clone()).or_default().push(idx);
        }
        self.rules.push(rule);
    }
    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }
    pub fn is_rule_head(&self, c: &str) -> bool {
        self.by_head.contains_key(c)
    }
    /// The subsystem whose rules only mention constants present in `pre`;
    /// used for the prefix theories of signature validation.
    pub fn restricted_to(&self, pre: &PreSignature) -> RewriteSystem {
        let mut out = RewriteSystem::default();
        for r in &self.rules {
            let mut consts = HashSet::new();
            constants_of_term(&r.lhs, &mut consts);
            constants_of_term(&r.rhs, &mut consts);
            if consts.iter().all(|c| pre.lookup(c).is_some()) {
                out.push(r.clone());
            }
        }
        out
    }
}

/// Validate a rule against a pre-signature: both sides scope-check at the
/// rule sort, the lhs is a constant-headed Miller pattern, and every rule
/// variable occurs in the lhs (which subsumes the usual "rhs variables
/// are bound by the lhs" condition).
pub fn validate_rule(pre: &PreSignature, rule: &RewriteRule) -> KResult<()> {
    let mut env: ScopeEnv = rule.scope.0.clone();
    scope_check_term(pre, &mut env, &rule.lhs, &rule.sort)?;
    scope_check_term(pre, &mut env, &rule.rhs, &rule.sort)?;
    if !matches!(rule.lhs.head(), Head::Const(_)) {
        return Err(KernelError::PatternViolation(
            "rule left-hand side must be headed by a constant".into(),
        ));
    }
    pattern::is_pattern(&rule.scope, &Scope::default(), &rule.lhs)?;
    let used = flex_usage(&rule.lhs, &rule.scope, 0);
    for (slot, n) in used.iter().enumerate() {
        if *n == 0 {
            return Err(KernelError::UnusedRuleVar(
                rule.scope.0[slot].name.to_string(),
            ));
        }
    }
    Ok(())
}

/// Occurrence counts of the flexible variables of `flex` in `t`, indexed
/// in declaration order (outermost first).
pub fn flex_usage(t: &Term, flex: &Scope, depth: usize) -> Vec<usize> {
    let mut counts = vec![0usize; flex.len()];
    fn go(t: &Term, depth: usize, flex_len: usize, counts: &mut Vec<usize>) {
        if let Head::Var(i) = t.head() {
            if *i >= depth && *i < depth + flex_len {
                counts[flex_len - 1 - (i - depth)] += 1;
            }
        }
        for it in &t.args().0 {
            go(&it.body, depth + it.binder.len(), flex_len, counts);
        }
    }
    go(t, depth, flex.len(), &mut counts);
    counts
}

// ---------------------------------------------------------------------
// Syntactic matching and single steps
// ---------------------------------------------------------------------

fn match_syntactic(
    pat: &Term,
    subj: &Term,
    depth: usize,
    flex_len: usize,
    stack: &mut Vec<ScopeEntry>,
    out: &mut [Option<SpineItem>],
) -> bool {
    match pat.head() {
        Head::Var(i) if *i >= depth => {
            // Flexible head, applied to the identity spine by pattern
            // validity: bind the whole subject under the traversed binders.
            let slot = flex_len - 1 - (i - depth);
            let item = SpineItem {
                binder: Scope(stack.clone()),
                body: subj.clone(),
            };
            match &out[slot] {
                Some(prev) => alpha_eq(prev, &item),
                None => {
                    out[slot] = Some(item);
                    true
                }
            }
        }
        Head::Var(_) => false, // rigid variable heads are not patterns
        Head::Const(c) => {
            if subj.head() != &Head::Const(c.clone()) {
                return false;
            }
            let (ps, ss) = (pat.args(), subj.args());
            if ps.len() != ss.len() {
                return false;
            }
            for (p, s) in ps.0.iter().zip(&ss.0) {
                if p.binder != s.binder {
                    return false;
                }
                let k = s.binder.len();
                stack.extend(s.binder.0.iter().cloned());
                let ok = match_syntactic(&p.body, &s.body, depth + k, flex_len, stack, out);
                stack.truncate(stack.len() - k);
                if !ok {
                    return false;
                }
            }
            true
        }
    }
}

impl RewriteSystem {
    /// One rewrite at the root, first matching rule in declaration order.
    pub fn root_step(&self, t: &Term) -> Option<Term> {
        let c = match t.head() {
            Head::Const(c) => c,
            Head::Var(_) => return None,
        };
        for &idx in self.by_head.get(c)? {
            let rule = &self.rules[idx];
            let mut out = vec![None; rule.scope.len()];
            let mut stack = Vec::new();
            if match_syntactic(&rule.lhs, t, 0, rule.scope.len(), &mut stack, &mut out) {
                let assignment = Spine(out.into_iter().map(|o| o.expect("validated rules use every variable")).collect());
                return Some(subst_term(&rule.rhs, &assignment, 0));
            }
        }
        None
    }

    /// One leftmost-outermost step anywhere in the term.
    pub fn strategy_step(&self, t: &Term) -> Option<Term> {
        if let Some(t2) = self.root_step(t) {
            return Some(t2);
        }
        self.strategy_step_spine(t.args())
            .map(|args| Term::new(t.head().clone(), args))
    }

    pub fn strategy_step_spine(&self, s: &Spine) -> Option<Spine> {
        for (i, it) in s.0.iter().enumerate() {
            if let Some(b2) = self.strategy_step(&it.body) {
                let mut items = s.0.clone();
                items[i] = SpineItem {
                    binder: it.binder.clone(),
                    body: b2,
                };
                return Some(Spine(items));
            }
        }
        None
    }

    pub fn strategy_step_type(&self, ty: &TypeExpr) -> Option<TypeExpr> {
        self.strategy_step_spine(&ty.args).map(|args| TypeExpr {
            head: ty.head.clone(),
            args,
        })
    }

    /// Reduce at the root until the head is stable: a variable, a constant
    /// heading no rule, or a rule-head constant whose spine admits no
    /// further step that could expose a root redex.
    pub fn head_normalize(&self, t: &Term, fuel: &mut Fuel) -> KResult<Term> {
        let mut t = t.clone();
        loop {
            let c = match t.head() {
                Head::Const(c) => c.clone(),
                Head::Var(_) => return Ok(t),
            };
            if let Some(t2) = self.root_step(&t) {
                fuel.burn()?;
                t = t2;
                continue;
            }
            if !self.is_rule_head(&c) {
                return Ok(t);
            }
            // A rule for this head might apply after reducing the spine
            // (e.g. a redex nested in the first argument).
            match self.strategy_step_spine(t.args()) {
                Some(args) => {
                    fuel.burn()?;
                    t = Term::new(Head::Const(c), args);
                }
                None => return Ok(t),
            }
        }
    }

    /// Full normal form. Equivalent to iterating `strategy_step` to a
    /// fixpoint, but organized recursively (root steps, then children,
    /// then retry the root) so large first-order computations run in time
    /// linear in the rewrite count.
    pub fn normalize(&self, t: &Term, fuel: &mut Fuel) -> KResult<Term> {
        let mut t = t.clone();
        loop {
            while let Some(t2) = self.root_step(&t) {
                fuel.burn()?;
                t = t2;
            }
            let reduced = Term::new(t.head().clone(), self.normalize_spine(t.args(), fuel)?);
            match self.root_step(&reduced) {
                Some(t3) => {
                    fuel.burn()?;
                    t = t3;
                }
                None => return Ok(reduced),
            }
        }
    }

    pub fn normalize_spine(&self, s: &Spine, fuel: &mut Fuel) -> KResult<Spine> {
        Ok(Spine(
            s.0.iter()
                .map(|it| {
                    Ok(SpineItem {
                        binder: it.binder.clone(),
                        body: self.normalize(&it.body, fuel)?,
                    })
                })
                .collect::<KResult<_>>()?,
        ))
    }

    pub fn normalize_type(&self, ty: &TypeExpr, fuel: &mut Fuel) -> KResult<TypeExpr> {
        Ok(TypeExpr {
            head: ty.head.clone(),
            args: self.normalize_spine(&ty.args, fuel)?,
        })
    }

    /// Conversion: definitional equality by normalize-and-compare. This is
    /// a semi-decision procedure in general; for terminating confluent
    /// systems it is complete.
    pub fn convertible_term(&self, a: &Term, b: &Term, fuel: &mut Fuel) -> KResult<bool> {
        if alpha_eq(a, b) {
            return Ok(true);
        }
        Ok(alpha_eq(&self.normalize(a, fuel)?, &self.normalize(b, fuel)?))
    }

    pub fn convertible_type(&self, a: &TypeExpr, b: &TypeExpr, fuel: &mut Fuel) -> KResult<bool> {
        if a.head != b.head {
            return Ok(false);
        }
        if alpha_eq(a, b) {
            return Ok(true);
        }
        Ok(alpha_eq(
            &self.normalize_type(a, fuel)?,
            &self.normalize_type(b, fuel)?,
        ))
    }
}

// ---------------------------------------------------------------------
// Lints
// ---------------------------------------------------------------------

/// Variables occurring more than once in a rule's lhs (empty = left-linear).
pub fn lint_left_linear(rule: &RewriteRule) -> Vec<Name> {
    flex_usage(&rule.lhs, &rule.scope, 0)
        .into_iter()
        .enumerate()
        .filter(|(_, n)| *n > 1)
        .map(|(i, _)| rule.scope.0[i].name.clone())
        .collect()
}

#[derive(Debug, Clone)]
pub struct OverlapFinding {
    /// Rule whose lhs (or a rigid subterm of it) hosts the overlap.
    pub outer: usize,
    /// Rule whose lhs unifies there.
    pub inner: usize,
    /// Human-readable position, e.g. `root` or `El.1`.
    pub position: String,
}

/// Unify two pattern skeletons, treating flexible applications as
/// wildcards. `da`/`db` are the rigid depths separating bound variables
/// from each side's flexible scope.
fn skel_unify(a: &Term, da: usize, b: &Term, db: usize) -> bool {
    let a_flex = matches!(a.head(), Head::Var(i) if *i >= da);
    let b_flex = matches!(b.head(), Head::Var(i) if *i >= db);
    if a_flex || b_flex {
        return true;
    }
    match (a.head(), b.head()) {
        (Head::Const(ca), Head::Const(cb)) if ca == cb => {}
        (Head::Var(ia), Head::Var(ib)) if ia == ib => {}
        _ => return false,
    }
    if a.args().len() != b.args().len() {
        return false;
    }
    a.args().0.iter().zip(&b.args().0).all(|(x, y)| {
        x.binder.len() == y.binder.len()
            && skel_unify(&x.body, da + x.binder.len(), &y.body, db + y.binder.len())
    })
}

/// Conservative orthogonality check: reports every unifiable pair of lhs
/// skeletons, at the root (distinct rules) and at proper constant-headed
/// subterm positions (any rule, including self-overlap). No finding
/// implies orthogonality for left-linear systems; findings may be
/// spurious.
pub fn lint_orthogonal(rs: &RewriteSystem) -> Vec<OverlapFinding> {
    let rules = rs.rules();
    let mut findings = Vec::new();
    for i in 0..rules.len() {
        for j in (i + 1)..rules.len() {
            if skel_unify(&rules[i].lhs, 0, &rules[j].lhs, 0) {
                findings.push(OverlapFinding {
                    outer: i,
                    inner: j,
                    position: "root".into(),
                });
            }
        }
    }
    for (i, ri) in rules.iter().enumerate() {
        let mut subs: Vec<(String, &Term, usize)> = Vec::new();
        collect_rigid_subterms(&ri.lhs, 0, ri.scope.len(), "", &mut subs);
        for (pos, sub, depth) in subs {
            for (j, rj) in rules.iter().enumerate() {
                if skel_unify(sub, depth, &rj.lhs, 0) {
                    findings.push(OverlapFinding {
                        outer: i,
                        inner: j,
                        position: pos.clone(),
                    });
                }
            }
        }
    }
    findings
}

/// Proper constant-headed subterm positions of a pattern (the places a
/// nested redex could sit), with their rigid depths.
fn collect_rigid_subterms<'a>(
    t: &'a Term,
    depth: usize,
    _flex_len: usize,
    path: &str,
    out: &mut Vec<(String, &'a Term, usize)>,
) {
    let head_name = match t.head() {
        Head::Const(c) => c.to_string(),
        Head::Var(_) => return,
    };
    for (k, it) in t.args().0.iter().enumerate() {
        let body = &it.body;
        let d = depth + it.binder.len();
        let pos = if path.is_empty() {
            format!("{head_name}.{k}")
        } else {
            format!("{path}.{head_name}.{k}")
        };
        if matches!(body.head(), Head::Const(_)) {
            out.push((pos.clone(), body, d));
        }
        collect_rigid_subterms(body, d, _flex_len, &pos, out);
    }
}
