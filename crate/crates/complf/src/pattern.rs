//! Miller patterns and matching modulo reduction.
//!
//! A pattern lives over two scopes: a flexible one (the variables the
//! match solves for) and a rigid one (bound variables it may mention).
//! Every flexible occurrence must be applied to the identity spine of the
//! entire rigid scope at that point, so matching is deterministic and
//! substitution inverts it.
//!
//! Matching here is *modulo* the rewrite strategy: subjects are
//! head-normalized at rigid nodes and non-linear occurrences are compared
//! on normal forms. (Rewriting itself uses the purely syntactic matcher in
//! [`crate::rewrite`].)

use crate::error::{KResult, KernelError};
use crate::rewrite::{Fuel, RewriteSystem};
use crate::subst::identity_spine;
use crate::syntax::*;

// ---------------------------------------------------------------------
// Pattern recognition
// ---------------------------------------------------------------------

/// Check that `t` is a pattern over `flex` with rigid base `rigid`.
pub fn is_pattern(flex: &Scope, rigid: &Scope, t: &Term) -> KResult<()> {
    let mut stack: Vec<ScopeEntry> = rigid.0.clone();
    pattern_term(flex, &mut stack, t)
}

/// Check that a type is a pattern (its arguments are term patterns).
pub fn is_type_pattern(flex: &Scope, rigid: &Scope, ty: &TypeExpr) -> KResult<()> {
    let mut stack: Vec<ScopeEntry> = rigid.0.clone();
    pattern_spine(flex, &mut stack, &ty.args)
}

fn pattern_term(flex: &Scope, stack: &mut Vec<ScopeEntry>, t: &Term) -> KResult<()> {
    let r = stack.len();
    match t.head() {
        Head::Var(i) if *i >= r => {
            let slot = i - r;
            if slot >= flex.len() {
                return Err(KernelError::VarOutOfScope {
                    index: *i,
                    len: r + flex.len(),
                });
            }
            let entry = &flex.0[flex.len() - 1 - slot];
            let here = Scope(stack.clone());
            if entry.binder != here {
                return Err(KernelError::PatternViolation(format!(
                    "flexible variable `{}` must abstract exactly the rigid scope at its occurrence ({} variables, declared {})",
                    entry.name,
                    here.len(),
                    entry.binder.len()
                )));
            }
            if t.args() != &identity_spine(&here) {
                return Err(KernelError::PatternViolation(format!(
                    "flexible variable `{}` must be applied to the identity spine of the rigid scope",
                    entry.name
                )));
            }
            Ok(())
        }
        Head::Var(_) => Err(KernelError::PatternViolation(
            "rigid variables cannot head a pattern subterm".into(),
        )),
        Head::Const(_) => pattern_spine(flex, stack, t.args()),
    }
}

fn pattern_spine(flex: &Scope, stack: &mut Vec<ScopeEntry>, s: &Spine) -> KResult<()> {
    for it in &s.0 {
        let k = it.binder.len();
        stack.extend(it.binder.0.iter().cloned());
        let res = pattern_term(flex, stack, &it.body);
        stack.truncate(stack.len() - k);
        res?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Rigidity
// ---------------------------------------------------------------------

/// Reasons a pattern fails to be rigid. Rigidity is what makes matching
/// complete (a constant that rewrites, or whose surface form hides erased
/// arguments, can defeat recovery); it is reported, not enforced.
#[derive(Debug, Clone)]
pub struct RigidViolation {
    pub constant: Name,
    pub reason: RigidReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RigidReason {
    HeadsRule,
    HasErasedArgs,
}

impl std::fmt::Display for RigidViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.reason {
            RigidReason::HeadsRule => {
                write!(f, "constant `{}` heads a rewrite rule", self.constant)
            }
            RigidReason::HasErasedArgs => {
                write!(f, "constant `{}` has erased arguments", self.constant)
            }
        }
    }
}

/// Collect rigidity violations of a pattern spine: every constant occurring
/// in it must head no rewrite rule and have no erased premises.
pub fn rigidity_violations(
    sig: &Signature,
    rules: &RewriteSystem,
    args: &Spine,
) -> Vec<RigidViolation> {
    let mut consts = std::collections::HashSet::new();
    for it in &args.0 {
        constants_of_term(&it.body, &mut consts);
    }
    let mut out = Vec::new();
    let mut sorted: Vec<_> = consts.into_iter().collect();
    sorted.sort();
    for c in sorted {
        if rules.is_rule_head(&c) {
            out.push(RigidViolation {
                constant: c.clone(),
                reason: RigidReason::HeadsRule,
            });
        }
        if let Some(e) = sig.lookup(&c) {
            if e.nu.contains(&Mark::Erased) {
                out.push(RigidViolation {
                    constant: c,
                    reason: RigidReason::HasErasedArgs,
                });
            }
        }
    }
    out
}

pub fn is_rigid(sig: &Signature, rules: &RewriteSystem, ty: &TypeExpr) -> bool {
    rigidity_violations(sig, rules, &ty.args).is_empty()
}

// ---------------------------------------------------------------------
// Matching modulo reduction
// ---------------------------------------------------------------------

struct Matcher<'a> {
    rs: &'a RewriteSystem,
    flex: &'a Scope,
    stack: Vec<ScopeEntry>,
    out: Vec<Option<SpineItem>>,
}

impl<'a> Matcher<'a> {
    fn match_term(&mut self, pat: &Term, subj: &Term, fuel: &mut Fuel) -> KResult<()> {
        let r = self.stack.len();
        match pat.head() {
            Head::Var(i) if *i >= r => {
                let slot_rev = i - r;
                if slot_rev >= self.flex.len() {
                    return Err(KernelError::MatchFail(format!(
                        "pattern variable index {i} out of scope"
                    )));
                }
                let slot = self.flex.len() - 1 - slot_rev;
                let item = SpineItem {
                    binder: Scope(self.stack.clone()),
                    body: subj.clone(),
                };
                match self.out[slot].take() {
                    None => {
                        self.out[slot] = Some(item);
                        Ok(())
                    }
                    Some(prev) => {
                        // Non-linear occurrence: compare normal forms and
                        // keep the normal form as the solution.
                        let a = self.rs.normalize(&prev.body, fuel)?;
                        let b = self.rs.normalize(&item.body, fuel)?;
                        if !alpha_eq(&a, &b) {
                            return Err(KernelError::MatchFail(format!(
                                "non-linear variable `{}` matched distinct terms",
                                self.flex.0[slot].name
                            )));
                        }
                        self.out[slot] = Some(SpineItem {
                            binder: prev.binder,
                            body: a,
                        });
                        Ok(())
                    }
                }
            }
            Head::Var(_) => Err(KernelError::MatchFail(
                "rigid variable head in pattern".into(),
            )),
            Head::Const(c) => {
                let subj = self.rs.head_normalize(subj, fuel)?;
                match subj.head() {
                    Head::Const(c2) if c2 == c => {}
                    h => {
                        return Err(KernelError::MatchFail(format!(
                            "expected head `{c}`, found `{}`",
                            match h {
                                Head::Const(c2) => c2.to_string(),
                                Head::Var(i) => format!("variable #{i}"),
                            }
                        )))
                    }
                }
                self.match_spine(pat.args(), subj.args(), fuel)
            }
        }
    }

    fn match_spine(&mut self, pats: &Spine, subjs: &Spine, fuel: &mut Fuel) -> KResult<()> {
        if pats.len() != subjs.len() {
            return Err(KernelError::MatchFail(format!(
                "spine length mismatch: {} vs {}",
                pats.len(),
                subjs.len()
            )));
        }
        for (p, s) in pats.0.iter().zip(&subjs.0) {
            if p.binder != s.binder {
                return Err(KernelError::MatchFail(
                    "binder shape mismatch in spine".into(),
                ));
            }
            let k = s.binder.len();
            self.stack.extend(s.binder.0.iter().cloned());
            let res = self.match_term(&p.body, &s.body, fuel);
            self.stack.truncate(self.stack.len() - k);
            res?;
        }
        Ok(())
    }

    fn finish(self) -> KResult<Spine> {
        let mut items = Vec::with_capacity(self.out.len());
        for (i, o) in self.out.into_iter().enumerate() {
            match o {
                Some(it) => items.push(it),
                None => {
                    return Err(KernelError::MatchFail(format!(
                        "pattern does not determine variable `{}`",
                        self.flex.0[i].name
                    )))
                }
            }
        }
        Ok(Spine(items))
    }
}

/// Match a type pattern against a subject type. On success returns the
/// assignment spine for `flex` (one item per flexible variable, in order),
/// with bodies over the subject's ambient telescope extended by `rigid`.
pub fn match_type(
    rs: &RewriteSystem,
    flex: &Scope,
    rigid: &Scope,
    pat: &TypeExpr,
    subj: &TypeExpr,
    fuel: &mut Fuel,
) -> KResult<Spine> {
    if pat.head != subj.head {
        return Err(KernelError::MatchFail(format!(
            "expected a type headed by `{}`, found `{}`",
            pat.head, subj.head
        )));
    }
    let mut m = Matcher {
        rs,
        flex,
        stack: rigid.0.clone(),
        out: vec![None; flex.len()],
    };
    m.match_spine(&pat.args, &subj.args, fuel)?;
    m.finish()
}

/// Match a term pattern against a subject term (same contract as
/// [`match_type`]).
pub fn match_term(
    rs: &RewriteSystem,
    flex: &Scope,
    rigid: &Scope,
    pat: &Term,
    subj: &Term,
    fuel: &mut Fuel,
) -> KResult<Spine> {
    let mut m = Matcher {
        rs,
        flex,
        stack: rigid.0.clone(),
        out: vec![None; flex.len()],
    };
    m.match_term(pat, subj, fuel)?;
    m.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidir::validate_theory;
    use crate::surface::parse_theory;

    fn item(binder: Vec<ScopeEntry>, body: Term) -> SpineItem {
        SpineItem {
            binder: Scope(binder),
            body,
        }
    }

    fn arith_rules() -> RewriteSystem {
        let f = parse_theory(include_str!("../../../theories/arith.clf")).unwrap();
        let mut fuel = Fuel::default_budget();
        validate_theory(f.entries, f.rules, &mut fuel)
            .unwrap()
            .theory
            .rules
    }

    fn nat() -> Sort {
        Sort(name("N"))
    }

    #[test]
    fn lambda_result_is_a_pattern_and_recovers_its_erased_arguments() {
        // flex = (A :: Ty, B :: (x :: Tm) -> Ty); pattern Tm(Pi(A, x. B(x))).
        let flex = Scope(vec![
            ScopeEntry::order0("A", Sort(name("Ty"))),
            ScopeEntry {
                name: name("B"),
                binder: Scope(vec![ScopeEntry::order0("x", Sort(name("Tm")))]),
                sort: Sort(name("Ty")),
            },
        ]);
        let pat = TypeExpr::new(
            "Tm",
            Spine(vec![item(
                vec![],
                Term::con(
                    "Pi",
                    Spine(vec![
                        item(vec![], Term::var(1, Spine(vec![]))),
                        item(
                            vec![ScopeEntry::order0("x", Sort(name("Tm")))],
                            Term::var(1, Spine(vec![item(vec![], Term::var(0, Spine(vec![])))])),
                        ),
                    ]),
                ),
            )]),
        );
        is_type_pattern(&flex, &Scope::default(), &pat).expect("is a pattern");

        // Subject: Tm(Pi(iota, x. iota)) in a theory with a base type.
        let src = "
symbol Ty : Type
symbol Tm (A : Ty) : Type
symbol iota + : Ty
symbol Pi + (A : Ty) (B : (x : Tm(A)) -> Ty) : Ty
";
        let f = parse_theory(src).unwrap();
        let mut fuel = Fuel::default_budget();
        let m = validate_theory(f.entries, f.rules, &mut fuel).unwrap();
        let iota = Term::con("iota", Spine(vec![]));
        let subj = TypeExpr::new(
            "Tm",
            Spine(vec![item(
                vec![],
                Term::con(
                    "Pi",
                    Spine(vec![
                        item(vec![], iota.clone()),
                        item(
                            vec![ScopeEntry::order0("x", Sort(name("Tm")))],
                            crate::subst::shift_term(&iota, 0, 1),
                        ),
                    ]),
                ),
            )]),
        );
        let assignment =
            match_type(m.rules(), &flex, &Scope::default(), &pat, &subj, &mut fuel).unwrap();
        assert_eq!(assignment.len(), 2);
        assert_eq!(assignment.0[0].body, iota);
        assert_eq!(assignment.0[1].binder.len(), 1);
        assert_eq!(
            assignment.0[1].body,
            crate::subst::shift_term(&iota, 0, 1)
        );
    }

    #[test]
    fn flexible_variable_applied_to_a_constant_is_not_a_pattern() {
        let flex = Scope(vec![ScopeEntry {
            name: name("B"),
            binder: Scope(vec![ScopeEntry::order0("x", Sort(name("Tm")))]),
            sort: Sort(name("Ty")),
        }]);
        // B(iota): argument is not the bound-variable spine.
        let bad = Term::var(
            0,
            Spine(vec![item(vec![], Term::con("iota", Spine(vec![])))]),
        );
        assert!(matches!(
            is_pattern(&flex, &Scope::default(), &bad),
            Err(KernelError::PatternViolation(_))
        ));
    }

    #[test]
    fn non_linear_match_reduces_and_compares() {
        let rules = arith_rules();
        let mut fuel = Fuel::default_budget();
        let flex = Scope(vec![ScopeEntry::order0("n", nat())]);
        let rigid = Scope(vec![ScopeEntry::order0("x", nat())]);
        let x = || Term::var(0, Spine(vec![]));
        let zero = || Term::con("zero", Spine(vec![]));
        let stuck = || {
            Term::con(
                "times",
                Spine(vec![item(vec![], x()), item(vec![], zero())]),
            )
        };
        let n = Term::var(1, Spine(vec![])); // flex slot above the rigid var
        let pat = Term::con(
            "plus",
            Spine(vec![item(vec![], n.clone()), item(vec![], n)]),
        );
        // plus(plus(zero, times(x, zero)), times(x, zero)): the occurrences
        // differ syntactically but share the normal form times(x, zero).
        let first = Term::con(
            "plus",
            Spine(vec![item(vec![], zero()), item(vec![], stuck())]),
        );
        let subj = Term::con(
            "plus",
            Spine(vec![item(vec![], first), item(vec![], stuck())]),
        );
        let got = match_term(&rules, &flex, &rigid, &pat, &subj, &mut fuel).unwrap();
        assert_eq!(got.0[0].body, stuck());

        // Non-joinable occurrences must fail.
        let subj_bad = Term::con(
            "plus",
            Spine(vec![item(vec![], stuck()), item(vec![], zero())]),
        );
        assert!(matches!(
            match_term(&rules, &flex, &rigid, &pat, &subj_bad, &mut fuel),
            Err(KernelError::MatchFail(_))
        ));
    }

    #[test]
    fn unconstrained_flexible_variable_is_rejected() {
        let rules = arith_rules();
        let mut fuel = Fuel::default_budget();
        let flex = Scope(vec![ScopeEntry::order0("n", nat())]);
        let zero = Term::con("zero", Spine(vec![]));
        assert!(match_term(
            &rules,
            &flex,
            &Scope::default(),
            &zero,
            &zero,
            &mut fuel
        )
        .is_err());
    }
}
