//! Core syntax: sorts, scopes, pre-signatures, terms, spines, types,
//! contexts, signatures, and the erasure maps between the typed and the
//! scope-level worlds.
//!
//! Terms are intrinsically canonical: every head is fully applied (spines
//! carry one abstracted argument per entry of the head's arity), so there is
//! no beta/eta at the framework level. Bound variables are de Bruijn
//! indices, index 0 being the innermost entry of the ambient telescope;
//! names stored in scopes and contexts are display hints only and are
//! ignored by equality.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::error::{KResult, KernelError};

pub type Name = Rc<str>;

// The Debug impls below defer to the surface printer, which handles name
// environments and freshening; a small macro keeps them in sync.
macro_rules! fmt_via_display {
    () => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{}", crate::surface::print_closed(self))
        }
    };
}

pub fn name(s: &str) -> Name {
    Rc::from(s)
}

/// A sort, i.e. the image of a type constant under the sort injection.
/// Sorts compare by name.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Sort(pub Name);

impl fmt::Debug for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One scope entry `x :: delta -> s`: a variable binding `delta.len()`
/// further variables in its arguments.
#[derive(Clone, Debug)]
pub struct ScopeEntry {
    pub name: Name,
    pub binder: Scope,
    pub sort: Sort,
}

impl ScopeEntry {
    pub fn order0(name_: &str, sort: Sort) -> Self {
        ScopeEntry {
            name: name(name_),
            binder: Scope::default(),
            sort,
        }
    }
}

/// Equality of scope entries ignores the display name.
impl PartialEq for ScopeEntry {
    fn eq(&self, other: &Self) -> bool {
        self.binder == other.binder && self.sort == other.sort
    }
}
impl Eq for ScopeEntry {}

/// A scope `(x1 :: a1) ... (xn :: an)`, outermost entry first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scope(pub Vec<ScopeEntry>);

impl Scope {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    /// Maximal nesting depth of binders: empty scope has order -1
    /// (represented as None), an order-0 scope binds only unapplied
    /// variables, and so on. Hereditary substitution descends on this.
    pub fn order(&self) -> Option<usize> {
        self.0
            .iter()
            .map(|e| e.binder.order().map_or(0, |o| o + 1))
            .max()
    }
}

/// Result of a pre-signature entry: an ordinary sort or the kind of types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreResult {
    Sort(Sort),
    TypeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreEntry {
    pub name: Name,
    pub binder: Scope,
    pub result: PreResult,
}

/// A pre-signature: arities of constants, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct PreSignature {
    entries: Vec<PreEntry>,
    index: HashMap<Name, usize>,
}

impl PreSignature {
    pub fn push(&mut self, entry: PreEntry) -> KResult<()> {
        if self.index.contains_key(&entry.name) {
            return Err(KernelError::Other(format!(
                "duplicate constant `{}`",
                entry.name
            )));
        }
        self.index.insert(entry.name.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }
    pub fn lookup(&self, n: &str) -> Option<&PreEntry> {
        self.index.get(n).map(|&i| &self.entries[i])
    }
    pub fn entries(&self) -> &[PreEntry] {
        &self.entries
    }
}

/// Head of a term: a constant or a telescope variable (de Bruijn index,
/// 0 = innermost).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Head {
    Const(Name),
    Var(usize),
}

/// A term `h(t1, ..., tn)`; heads are always fully applied.
#[derive(Clone, PartialEq, Eq)]
pub struct Term(pub Rc<TermNode>);

#[derive(Debug, PartialEq, Eq)]
pub struct TermNode {
    pub head: Head,
    pub args: Spine,
}

impl Term {
    pub fn new(head: Head, args: Spine) -> Self {
        Term(Rc::new(TermNode { head, args }))
    }
    pub fn var(i: usize, args: Spine) -> Self {
        Term::new(Head::Var(i), args)
    }
    pub fn con(n: &str, args: Spine) -> Self {
        Term::new(Head::Const(name(n)), args)
    }
    pub fn head(&self) -> &Head {
        &self.0.head
    }
    pub fn args(&self) -> &Spine {
        &self.0.args
    }
    /// Number of head occurrences, the size measure used by enumeration
    /// and test budgets.
    pub fn size(&self) -> usize {
        1 + self.0.args.0.iter().map(|it| it.body.size()).sum::<usize>()
    }
}

impl fmt::Debug for Term {
    fmt_via_display!();
}

/// One spine item `x1 ... xk. t`, abstracting the argument's own binder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpineItem {
    pub binder: Scope,
    pub body: Term,
}

/// A spine: one item per entry of the head's arity, leftmost first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Spine(pub Vec<SpineItem>);

impl Spine {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A type `c(u1, ..., un)` for a type-level constant `c`.
#[derive(Clone, PartialEq, Eq)]
pub struct TypeExpr {
    pub head: Name,
    pub args: Spine,
}

impl TypeExpr {
    pub fn new(head: &str, args: Spine) -> Self {
        TypeExpr {
            head: name(head),
            args,
        }
    }
}

impl fmt::Debug for TypeExpr {
    fmt_via_display!();
}

/// One context entry `x : Delta -> T`. Equality ignores the display name.
#[derive(Clone, Debug, Eq)]
pub struct CtxEntry {
    pub name: Name,
    pub binder: Context,
    pub ty: TypeExpr,
}

impl PartialEq for CtxEntry {
    fn eq(&self, other: &Self) -> bool {
        self.binder == other.binder && self.ty == other.ty
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context(pub Vec<CtxEntry>);

impl Context {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Visibility mark for one premise of a signature entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Kept,
    Erased,
}

/// Result of a signature entry: a type, or the kind of types for
/// type-level constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SigResult {
    Type(TypeExpr),
    TypeKind,
}

/// A signature entry `c : Delta_nu -> T` (or `-> TYPE`), with one erasure
/// mark per premise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigEntry {
    pub name: Name,
    pub premises: Context,
    pub nu: Vec<Mark>,
    pub result: SigResult,
}

impl SigEntry {
    /// Surface arity of the constant: the scope erasure of the kept
    /// premises. Dropped premises may be referenced by kept ones, but
    /// scope erasure forgets types, so the result is always well-formed.
    pub fn surface_arity(&self) -> Scope {
        Scope(
            self.premises
                .0
                .iter()
                .zip(&self.nu)
                .filter(|(_, m)| **m == Mark::Kept)
                .map(|(e, _)| ScopeEntry {
                    name: e.name.clone(),
                    binder: erase_context(&e.binder),
                    sort: erase_type(&e.ty),
                })
                .collect(),
        )
    }

    pub fn pre_entry(&self) -> PreEntry {
        PreEntry {
            name: self.name.clone(),
            binder: self.surface_arity(),
            result: match &self.result {
                SigResult::Type(t) => PreResult::Sort(erase_type(t)),
                SigResult::TypeKind => PreResult::TypeKind,
            },
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Signature {
    entries: Vec<SigEntry>,
    index: HashMap<Name, usize>,
}

impl Signature {
    pub fn push(&mut self, entry: SigEntry) -> KResult<()> {
        if self.index.contains_key(&entry.name) {
            return Err(KernelError::Other(format!(
                "duplicate constant `{}`",
                entry.name
            )));
        }
        self.index.insert(entry.name.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }
    pub fn lookup(&self, n: &str) -> Option<&SigEntry> {
        self.index.get(n).map(|&i| &self.entries[i])
    }
    pub fn entries(&self) -> &[SigEntry] {
        &self.entries
    }
    /// The signature containing only the first `n` entries.
    pub fn prefix(&self, n: usize) -> Signature {
        let mut s = Signature::default();
        for e in &self.entries[..n] {
            s.push(e.clone()).expect("prefix of a valid signature");
        }
        s
    }
}

// ---------------------------------------------------------------------
// Erasures
// ---------------------------------------------------------------------

/// Sort of a type: the injection is name-identity, so `|c(us)| = c`.
pub fn erase_type(t: &TypeExpr) -> Sort {
    Sort(t.head.clone())
}

/// Scope erasure of a context entry.
pub fn erase_ctx_entry(e: &CtxEntry) -> ScopeEntry {
    ScopeEntry {
        name: e.name.clone(),
        binder: erase_context(&e.binder),
        sort: erase_type(&e.ty),
    }
}

/// Scope erasure of a context: forget types, keep binder shapes.
pub fn erase_context(ctx: &Context) -> Scope {
    Scope(ctx.0.iter().map(erase_ctx_entry).collect())
}

/// Action of an erasure assignment on a full spine: drop erased positions.
pub fn nu_action(nu: &[Mark], spine: &Spine) -> Spine {
    assert_eq!(nu.len(), spine.len(), "mark/spine length mismatch");
    Spine(
        spine
            .0
            .iter()
            .zip(nu)
            .filter(|(_, m)| **m == Mark::Kept)
            .map(|(it, _)| it.clone())
            .collect(),
    )
}

/// Erase a whole signature to its pre-signature, entrywise.
pub fn erase_signature(sig: &Signature) -> PreSignature {
    let mut pre = PreSignature::default();
    for e in sig.entries() {
        pre.push(e.pre_entry())
            .expect("signature has no duplicate names");
    }
    pre
}

/// Alpha-equivalence. With de Bruijn indices and name-blind equality this
/// is structural equality; kept as a named operation for clarity at call
/// sites.
pub fn alpha_eq<T: PartialEq>(a: &T, b: &T) -> bool {
    a == b
}

// ---------------------------------------------------------------------
// Scope checking
// ---------------------------------------------------------------------

/// A flattened telescope of scope entries used while checking; entry
/// arities are relative shapes (scopes contain no indices), so no
/// shifting is needed on lookup.
pub type ScopeEnv = Vec<ScopeEntry>;

fn env_lookup(env: &ScopeEnv, i: usize) -> KResult<&ScopeEntry> {
    if i < env.len() {
        Ok(&env[env.len() - 1 - i])
    } else {
        Err(KernelError::VarOutOfScope {
            index: i,
            len: env.len(),
        })
    }
}

/// Check that `t` is a well-scoped term of sort `expected` in `env`.
pub fn scope_check_term(
    pre: &PreSignature,
    env: &mut ScopeEnv,
    t: &Term,
    expected: &Sort,
) -> KResult<()> {
    let (binder, sort) = match t.head() {
        Head::Const(c) => {
            let e = pre
                .lookup(c)
                .ok_or_else(|| KernelError::UnknownConst(c.to_string()))?;
            match &e.result {
                PreResult::Sort(s) => (e.binder.clone(), s.clone()),
                PreResult::TypeKind => {
                    return Err(KernelError::TypeLevelInTerm(c.to_string()))
                }
            }
        }
        Head::Var(i) => {
            let e = env_lookup(env, *i)?;
            (e.binder.clone(), e.sort.clone())
        }
    };
    if &sort != expected {
        return Err(KernelError::SortMismatch {
            expected: expected.0.to_string(),
            found: sort.0.to_string(),
        });
    }
    scope_check_spine(pre, env, t.args(), &binder)
}

/// Check a spine against the scope it instantiates.
pub fn scope_check_spine(
    pre: &PreSignature,
    env: &mut ScopeEnv,
    spine: &Spine,
    against: &Scope,
) -> KResult<()> {
    if spine.len() != against.len() {
        return Err(KernelError::ArityMismatch {
            name: "<spine>".into(),
            expected: against.len(),
            found: spine.len(),
        });
    }
    for (item, entry) in spine.0.iter().zip(&against.0) {
        if item.binder != entry.binder {
            return Err(KernelError::BinderMismatch {
                head: entry.name.to_string(),
                expected: format!("{} binders", entry.binder.len()),
                found: format!("{} binders", item.binder.len()),
            });
        }
        let n = item.binder.len();
        env.extend(item.binder.0.iter().cloned());
        let r = scope_check_term(pre, env, &item.body, &entry.sort);
        env.truncate(env.len() - n);
        r?;
    }
    Ok(())
}

/// Check a type `c(us)` for a type-level constant `c`.
pub fn scope_check_type(pre: &PreSignature, env: &mut ScopeEnv, ty: &TypeExpr) -> KResult<()> {
    let e = pre
        .lookup(&ty.head)
        .ok_or_else(|| KernelError::UnknownConst(ty.head.to_string()))?;
    if e.result != PreResult::TypeKind {
        return Err(KernelError::TermLevelInType(ty.head.to_string()));
    }
    scope_check_spine(pre, env, &ty.args, &e.binder)
}

/// Check a context entrywise, extending the telescope as it goes. On
/// success the entries' scope erasures have been pushed onto `env`;
/// callers wanting a pure check should truncate afterwards.
pub fn scope_check_context(pre: &PreSignature, env: &mut ScopeEnv, ctx: &Context) -> KResult<()> {
    for entry in &ctx.0 {
        let before = env.len();
        let r = scope_check_context(pre, env, &entry.binder)
            .and_then(|()| scope_check_type(pre, env, &entry.ty));
        env.truncate(before);
        r?;
        env.push(erase_ctx_entry(entry));
    }
    Ok(())
}

/// Collect the set of constants occurring in a term (heads only; scopes
/// carry sorts, which are tracked separately by callers that need them).
pub fn constants_of_term(t: &Term, out: &mut std::collections::HashSet<Name>) {
    if let Head::Const(c) = t.head() {
        out.insert(c.clone());
    }
    for it in &t.args().0 {
        constants_of_term(&it.body, out);
    }
}
