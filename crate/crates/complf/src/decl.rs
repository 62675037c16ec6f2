//! The declarative typing oracle.
//!
//! Declarative typing judges surface terms, but its derivations carry the
//! full argument spines — including the erased ones the surface term
//! drops. An [`ElabTerm`] is exactly such a derivation skeleton: every
//! constant node records its complete premise spine. The oracle never
//! guesses erased arguments; it deterministically validates elaborated
//! terms, rule by rule, and is the independent cross-check for the
//! bidirectional algorithm.

use std::fmt;
use std::rc::Rc;

use crate::error::{KResult, KernelError};
use crate::rewrite::{Fuel, RewriteSystem};
use crate::subst::{shift_context, shift_type, subst_context, subst_type};
use crate::syntax::*;

/// A signature together with its rewrite rules; the pre-signature is the
/// cached scope-level erasure.
#[derive(Clone, Debug, Default)]
pub struct Theory {
    pub sig: Signature,
    pub rules: RewriteSystem,
    pub pre: PreSignature,
}

impl Theory {
    pub fn new(sig: Signature, rules: RewriteSystem) -> Self {
        let pre = erase_signature(&sig);
        Theory { sig, rules, pre }
    }

    /// The theory of everything declared strictly before entry `n`, with
    /// the rules restricted to constants available there.
    pub fn prefix(&self, n: usize) -> Theory {
        let sig = self.sig.prefix(n);
        let pre = erase_signature(&sig);
        let rules = self.rules.restricted_to(&pre);
        Theory { sig, rules, pre }
    }
}

// ---------------------------------------------------------------------
// Telescopes (typing contexts, flattened)
// ---------------------------------------------------------------------

/// A flattened typing context. Each entry is scoped over the entries
/// before it; `lookup` shifts into the current telescope.
#[derive(Clone, Debug, Default)]
pub struct Telescope {
    entries: Vec<CtxEntry>,
}

impl Telescope {
    pub fn new() -> Self {
        Telescope::default()
    }
    pub fn from_context(ctx: &Context) -> Self {
        Telescope {
            entries: ctx.0.clone(),
        }
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    /// Extend with a context scoped over the current telescope; entries of
    /// a context are already relatively scoped, so they append unchanged.
    pub fn push_context(&mut self, ctx: &Context) {
        self.entries.extend(ctx.0.iter().cloned());
    }
    pub fn push_entry(&mut self, e: CtxEntry) {
        self.entries.push(e);
    }
    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }
    /// Binder context and type of variable `i`, shifted to the current
    /// telescope. The type is additionally scoped over the binder.
    pub fn lookup(&self, i: usize) -> KResult<(Context, TypeExpr)> {
        if i >= self.entries.len() {
            return Err(KernelError::VarOutOfScope {
                index: i,
                len: self.entries.len(),
            });
        }
        let e = &self.entries[self.entries.len() - 1 - i];
        Ok((
            shift_context(&e.binder, 0, i + 1),
            shift_type(&e.ty, e.binder.len(), i + 1),
        ))
    }
    pub fn scope_env(&self) -> ScopeEnv {
        self.entries.iter().map(erase_ctx_entry).collect()
    }
    pub fn entries(&self) -> &[CtxEntry] {
        &self.entries
    }
}

// ---------------------------------------------------------------------
// Elaborated terms
// ---------------------------------------------------------------------

/// A term whose constant nodes carry their full premise spines (erased
/// arguments present). Variables never have erased arguments.
#[derive(Clone, PartialEq, Eq)]
pub struct ElabTerm(pub Rc<ElabNode>);

#[derive(Debug, PartialEq, Eq)]
pub struct ElabNode {
    pub head: Head,
    pub args: Vec<ElabItem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElabItem {
    pub binder: Scope,
    pub body: ElabTerm,
}

impl ElabTerm {
    pub fn new(head: Head, args: Vec<ElabItem>) -> Self {
        ElabTerm(Rc::new(ElabNode { head, args }))
    }
    pub fn head(&self) -> &Head {
        &self.0.head
    }
    pub fn args(&self) -> &[ElabItem] {
        &self.0.args
    }
    pub fn size(&self) -> usize {
        1 + self.0.args.iter().map(|it| it.body.size()).sum::<usize>()
    }
}

impl fmt::Debug for ElabTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.head() {
            Head::Const(c) => write!(f, "{c}")?,
            Head::Var(i) => write!(f, "#{i}")?,
        }
        if !self.0.args.is_empty() {
            write!(f, "(")?;
            for (i, it) in self.0.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                for e in &it.binder.0 {
                    write!(f, "{} ", e.name)?;
                }
                if !it.binder.is_empty() {
                    write!(f, ". ")?;
                }
                write!(f, "{:?}", it.body)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Forget the erased arguments, recursively, giving the surface term.
pub fn erase_elaborated(sig: &Signature, e: &ElabTerm) -> KResult<Term> {
    let items: Vec<SpineItem> = e
        .args()
        .iter()
        .map(|it| {
            Ok(SpineItem {
                binder: it.binder.clone(),
                body: erase_elaborated(sig, &it.body)?,
            })
        })
        .collect::<KResult<_>>()?;
    let spine = Spine(items);
    match e.head() {
        Head::Var(i) => Ok(Term::var(*i, spine)),
        Head::Const(c) => {
            let entry = sig
                .lookup(c)
                .ok_or_else(|| KernelError::UnknownConst(c.to_string()))?;
            if entry.nu.len() != spine.len() {
                return Err(KernelError::ArityMismatch {
                    name: c.to_string(),
                    expected: entry.nu.len(),
                    found: spine.len(),
                });
            }
            Ok(Term::new(Head::Const(c.clone()), nu_action(&entry.nu, &spine)))
        }
    }
}

// ---------------------------------------------------------------------
// The oracle
// ---------------------------------------------------------------------

/// Validate a full spine against a context (scoped over the current
/// telescope), returning the accumulated *surface* spine used to
/// instantiate types further right.
pub fn check_spine_elaborated(
    thy: &Theory,
    env: &mut Telescope,
    items: &[ElabItem],
    ctx: &Context,
    fuel: &mut Fuel,
) -> KResult<Spine> {
    if items.len() != ctx.len() {
        return Err(KernelError::ArityMismatch {
            name: "<spine>".into(),
            expected: ctx.len(),
            found: items.len(),
        });
    }
    let mut acc = Spine(Vec::with_capacity(items.len()));
    for (item, entry) in items.iter().zip(&ctx.0) {
        let binder = subst_context(&entry.binder, &acc, 0);
        let ty = subst_type(&entry.ty, &acc, entry.binder.len());
        if item.binder != erase_context(&binder) {
            return Err(KernelError::BinderMismatch {
                head: entry.name.to_string(),
                expected: format!("{} binders", binder.len()),
                found: format!("{} binders", item.binder.len()),
            });
        }
        let mark = env.len();
        env.push_context(&binder);
        let res = check_elaborated(thy, env, &item.body, &ty, fuel);
        let surface = erase_elaborated(&thy.sig, &item.body);
        env.truncate(mark);
        res?;
        acc.0.push(SpineItem {
            binder: item.binder.clone(),
            body: surface?,
        });
    }
    Ok(acc)
}

/// Infer the type of an elaborated term.
pub fn synth_elaborated(
    thy: &Theory,
    env: &mut Telescope,
    e: &ElabTerm,
    fuel: &mut Fuel,
) -> KResult<TypeExpr> {
    match e.head() {
        Head::Var(i) => {
            let (binder, ty) = env.lookup(*i)?;
            let acc = check_spine_elaborated(thy, env, e.args(), &binder, fuel)?;
            Ok(subst_type(&ty, &acc, 0))
        }
        Head::Const(c) => {
            let entry = thy
                .sig
                .lookup(c)
                .ok_or_else(|| KernelError::UnknownConst(c.to_string()))?;
            let result = match &entry.result {
                SigResult::Type(t) => t.clone(),
                SigResult::TypeKind => {
                    return Err(KernelError::TypeLevelInTerm(c.to_string()))
                }
            };
            let premises = entry.premises.clone();
            let acc = check_spine_elaborated(thy, env, e.args(), &premises, fuel)?;
            Ok(subst_type(&result, &acc, 0))
        }
    }
}

/// Check an elaborated term against a type, up to conversion.
pub fn check_elaborated(
    thy: &Theory,
    env: &mut Telescope,
    e: &ElabTerm,
    expected: &TypeExpr,
    fuel: &mut Fuel,
) -> KResult<()> {
    let found = synth_elaborated(thy, env, e, fuel)?;
    if thy.rules.convertible_type(&found, expected, fuel)? {
        Ok(())
    } else {
        Err(KernelError::TypeMismatch {
            expected: crate::surface::print_closed(expected),
            found: crate::surface::print_closed(&found),
        })
    }
}

// ---------------------------------------------------------------------
// Surface types, contexts, and whole signatures
// ---------------------------------------------------------------------

/// Produces elaborations of surface terms for the oracle's context and
/// signature checks. Surface types contain surface terms, whose erased
/// arguments somebody must reconstruct; the bidirectional checker is the
/// usual provider, and [`PlainElaborator`] suffices when no constant in
/// sight has erased premises.
pub trait SurfaceElaborator {
    fn elaborate(
        &self,
        env: &mut Telescope,
        t: &Term,
        expected: &TypeExpr,
        fuel: &mut Fuel,
    ) -> KResult<ElabTerm>;
}

/// Elaboration by reinterpretation: succeeds exactly when every constant
/// in the term has no erased premises (the full spine *is* the surface
/// spine).
pub struct PlainElaborator<'a>(pub &'a Theory);

fn plain_elab(thy: &Theory, t: &Term) -> KResult<ElabTerm> {
    if let Head::Const(c) = t.head() {
        let entry = thy
            .sig
            .lookup(c)
            .ok_or_else(|| KernelError::UnknownConst(c.to_string()))?;
        if entry.nu.contains(&Mark::Erased) {
            return Err(KernelError::NeedsElaboration {
                head: c.to_string(),
                reason: "constant has erased premises".into(),
            });
        }
    }
    let args = t
        .args()
        .0
        .iter()
        .map(|it| {
            Ok(ElabItem {
                binder: it.binder.clone(),
                body: plain_elab(thy, &it.body)?,
            })
        })
        .collect::<KResult<_>>()?;
    Ok(ElabTerm::new(t.head().clone(), args))
}

impl SurfaceElaborator for PlainElaborator<'_> {
    fn elaborate(
        &self,
        _env: &mut Telescope,
        t: &Term,
        _expected: &TypeExpr,
        _fuel: &mut Fuel,
    ) -> KResult<ElabTerm> {
        plain_elab(self.0, t)
    }
}

/// Well-formedness of a surface type: the head is type-level with no
/// erased premises, and each argument elaborates and oracle-checks at its
/// instantiated premise type.
pub fn check_type_wf_decl(
    thy: &Theory,
    env: &mut Telescope,
    ty: &TypeExpr,
    elab: &dyn SurfaceElaborator,
    fuel: &mut Fuel,
) -> KResult<()> {
    let entry = thy
        .sig
        .lookup(&ty.head)
        .ok_or_else(|| KernelError::UnknownConst(ty.head.to_string()))?;
    if entry.result != SigResult::TypeKind {
        return Err(KernelError::TermLevelInType(ty.head.to_string()));
    }
    if entry.nu.contains(&Mark::Erased) {
        return Err(KernelError::NeedsElaboration {
            head: ty.head.to_string(),
            reason: "type-level constant with erased premises".into(),
        });
    }
    let premises = entry.premises.clone();
    if ty.args.len() != premises.len() {
        return Err(KernelError::ArityMismatch {
            name: ty.head.to_string(),
            expected: premises.len(),
            found: ty.args.len(),
        });
    }
    let mut acc = Spine(Vec::new());
    for (item, premise) in ty.args.0.iter().zip(&premises.0) {
        let binder = subst_context(&premise.binder, &acc, 0);
        let pty = subst_type(&premise.ty, &acc, premise.binder.len());
        if item.binder != erase_context(&binder) {
            return Err(KernelError::BinderMismatch {
                head: ty.head.to_string(),
                expected: format!("{} binders", binder.len()),
                found: format!("{} binders", item.binder.len()),
            });
        }
        let mark = env.len();
        env.push_context(&binder);
        let res = (|| {
            let e = elab.elaborate(env, &item.body, &pty, fuel)?;
            // The elaboration is a hint; the oracle re-derives it and
            // insists it erases back to the given argument.
            check_elaborated(thy, env, &e, &pty, fuel)?;
            if !alpha_eq(&erase_elaborated(&thy.sig, &e)?, &item.body) {
                return Err(KernelError::Other(
                    "elaboration does not erase to the original argument".into(),
                ));
            }
            Ok(())
        })();
        env.truncate(mark);
        res?;
        acc.0.push(item.clone());
    }
    Ok(())
}

/// Well-formedness of a context, entry by entry.
pub fn check_context_wf(
    thy: &Theory,
    env: &mut Telescope,
    ctx: &Context,
    elab: &dyn SurfaceElaborator,
    fuel: &mut Fuel,
) -> KResult<()> {
    for entry in &ctx.0 {
        let mark = env.len();
        let res = check_context_wf(thy, env, &entry.binder, elab, fuel).and_then(|()| {
            // binder entries are now pushed; check the type under them
            check_type_wf_decl(thy, env, &entry.ty, elab, fuel)
        });
        env.truncate(mark);
        res?;
        env.push_entry(entry.clone());
    }
    Ok(())
}

/// Validate a whole theory: each entry's premises and result type are
/// well-formed under the prefix theory (earlier entries only, rules
/// restricted accordingly).
pub fn check_signature(
    thy: &Theory,
    elab: &dyn SurfaceElaborator,
    fuel: &mut Fuel,
) -> KResult<()> {
    for (i, entry) in thy.sig.entries().iter().enumerate() {
        let prefix = thy.prefix(i);
        let mut env = Telescope::new();
        (|| -> KResult<()> {
            check_context_wf(&prefix, &mut env, &entry.premises, elab, fuel)?;
            match &entry.result {
                SigResult::TypeKind => Ok(()),
                SigResult::Type(t) => check_type_wf_decl(&prefix, &mut env, t, elab, fuel),
            }
        })()
        .map_err(|e| {
            KernelError::Other(format!("in declaration of `{}`: {e}", entry.name))
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidir::validate_theory;
    use crate::rewrite::Fuel;
    use crate::surface::parse_theory;

    fn universes() -> (Theory, Fuel) {
        let f = parse_theory(include_str!("../../../theories/universes.clf")).unwrap();
        let mut fuel = Fuel::default_budget();
        let m = validate_theory(f.entries, f.rules, &mut fuel).unwrap();
        (m.theory.clone(), fuel)
    }

    fn e(head: &str, args: Vec<ElabItem>) -> ElabTerm {
        ElabTerm::new(Head::Const(name(head)), args)
    }
    fn it(body: ElabTerm) -> ElabItem {
        ElabItem {
            binder: Scope::default(),
            body,
        }
    }

    #[test]
    fn synthesis_assigns_the_declared_instance() {
        let (thy, mut fuel) = universes();
        let zero = e("zero", vec![]);
        let uu0 = e("uu", vec![it(zero.clone())]);
        let mut env = Telescope::new();
        let ty = synth_elaborated(&thy, &mut env, &uu0, &mut fuel).unwrap();
        // uu(zero) : Tm(U(succ(zero)))
        assert_eq!(crate::surface::print_closed(&ty), "Tm(U(succ(zero)))");
        // The full (elaborated) form of El carries its level explicitly:
        // uu(zero) lives one level up, so El's hidden level is succ(zero).
        let one = e("succ", vec![it(zero)]);
        let el = e("El", vec![it(one), it(uu0)]);
        let ty = synth_elaborated(&thy, &mut env, &el, &mut fuel).unwrap();
        assert_eq!(crate::surface::print_closed(&ty), "Ty");
    }

    #[test]
    fn checking_rejects_a_level_mismatch() {
        let (thy, mut fuel) = universes();
        let uu0 = e("uu", vec![it(e("zero", vec![]))]);
        let wrong = TypeExpr::new(
            "Tm",
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::con(
                    "U",
                    Spine(vec![SpineItem {
                        binder: Scope::default(),
                        body: Term::con("zero", Spine(vec![])),
                    }]),
                ),
            }]),
        );
        let mut env = Telescope::new();
        assert!(matches!(
            check_elaborated(&thy, &mut env, &uu0, &wrong, &mut fuel),
            Err(KernelError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn erasure_of_an_elaboration_drops_exactly_the_erased_premises() {
        let (thy, _) = universes();
        let full = e(
            "El",
            vec![
                it(e("succ", vec![it(e("zero", vec![]))])),
                it(e("uu", vec![it(e("zero", vec![]))])),
            ],
        );
        let surf = erase_elaborated(&thy.sig, &full).unwrap();
        assert_eq!(crate::surface::print_closed(&surf), "El(uu(zero))");
    }

    #[test]
    fn plain_elaboration_needs_no_recovery_for_erased_free_constants() {
        let (thy, mut fuel) = universes();
        let mut env = Telescope::new();
        let succ0 = Term::con(
            "succ",
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::con("zero", Spine(vec![])),
            }]),
        );
        let lvl = TypeExpr::new("Lvl", Spine(vec![]));
        let elab = PlainElaborator(&thy)
            .elaborate(&mut env, &succ0, &lvl, &mut fuel)
            .unwrap();
        assert_eq!(erase_elaborated(&thy.sig, &elab).unwrap(), succ0);

        // But a surface term with a hidden level cannot be reinterpreted.
        let up = Term::con(
            "up",
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::con(
                    "uu",
                    Spine(vec![SpineItem {
                        binder: Scope::default(),
                        body: Term::con("zero", Spine(vec![])),
                    }]),
                ),
            }]),
        );
        let two = Term::con(
            "succ",
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: succ0,
            }]),
        );
        let uty = TypeExpr::new(
            "Tm",
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::con(
                    "U",
                    Spine(vec![SpineItem {
                        binder: Scope::default(),
                        body: two,
                    }]),
                ),
            }]),
        );
        assert!(matches!(
            PlainElaborator(&thy).elaborate(&mut env, &up, &uty, &mut fuel),
            Err(KernelError::NeedsElaboration { .. })
        ));
    }
}
