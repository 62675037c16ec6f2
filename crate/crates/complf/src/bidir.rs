//! The generic bidirectional typing algorithm.
//!
//! A moded signature assigns each constant one of four shapes:
//!
//! * type-level `c : premises -> TYPE`, all premises checked;
//! * inferring `c+ : premises -> T`, all premises checked, no erasure;
//! * checked-only `c- : {erased} checked -> T`, with `T` a pattern over
//!   the erased premises — checking against a type recovers them;
//! * inferring-with-synthesis `c+ : checked {erased} (x)+ checked -> U`,
//!   where inferring the marked premise and matching its declared type
//!   (a pattern) against the result recovers the erased premises.
//!
//! `infer`/`check` return elaborations (full spines) that the declarative
//! oracle can re-validate independently.

use std::collections::HashMap;

use crate::decl::{self, ElabItem, ElabTerm, SurfaceElaborator, Telescope, Theory};
use crate::error::{KResult, KernelError};
use crate::pattern;
use crate::rewrite::{Fuel, RewriteSystem};
use crate::subst::{strengthen_context, strengthen_type, subst_context, subst_type};
use crate::surface::print_closed;
use crate::syntax::*;

/// Mode of one premise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PremiseMode {
    Checked,
    Erased,
    Synth,
}

/// Mode written on the constant itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclaredMode {
    Plus,
    Minus,
    Unmarked,
}

/// One moded signature entry, as written: the full premise telescope in
/// declaration order with one mode per premise.
#[derive(Clone, Debug)]
pub struct ModedEntry {
    pub name: Name,
    pub premises: Context,
    pub modes: Vec<PremiseMode>,
    pub declared: DeclaredMode,
    /// `None` for type-level constants.
    pub result: Option<TypeExpr>,
}

impl ModedEntry {
    pub fn nu(&self) -> Vec<Mark> {
        self.modes
            .iter()
            .map(|m| match m {
                PremiseMode::Erased => Mark::Erased,
                _ => Mark::Kept,
            })
            .collect()
    }
    pub fn sig_entry(&self) -> SigEntry {
        SigEntry {
            name: self.name.clone(),
            premises: self.premises.clone(),
            nu: self.nu(),
            result: match &self.result {
                Some(t) => SigResult::Type(t.clone()),
                None => SigResult::TypeKind,
            },
        }
    }
}

/// Compiled shape of an entry, precomputed by validation.
#[derive(Clone, Debug)]
enum EntryKind {
    TypeLevel,
    InferCheck,
    CheckOnly {
        erased_len: usize,
        /// Result type as a pattern over the erased premises only.
        pat: TypeExpr,
        flex: Scope,
    },
    InferSynth {
        d1: usize,
        erased_len: usize,
        /// Binder of the synthesizing premise, over the first `d1`
        /// premises only.
        gx: Context,
        /// Declared type of the synthesizing premise, a pattern over the
        /// erased premises with rigid base `gx`.
        pat: TypeExpr,
        flex: Scope,
    },
}

#[derive(Clone, Debug)]
pub struct ModedTheory {
    pub entries: Vec<ModedEntry>,
    index: HashMap<Name, usize>,
    pub theory: Theory,
    compiled: Vec<EntryKind>,
    /// Rigidity findings: recovery patterns mentioning constants that
    /// rewrite or hide erased arguments. Completeness hazards, not errors.
    pub rigidity_warnings: Vec<String>,
}

fn invalid(name: &Name, reason: &str) -> KernelError {
    KernelError::InvalidModedEntry {
        name: name.to_string(),
        reason: reason.to_string(),
    }
}

/// Check the shape conditions of every entry and compile the recovery
/// patterns. Scope-level validity only; full type-theoretic validation is
/// [`decl::check_signature`] on `theory`.
pub fn validate_moded_signature(
    entries: Vec<ModedEntry>,
    rules: RewriteSystem,
) -> KResult<ModedTheory> {
    let mut sig = Signature::default();
    for e in &entries {
        sig.push(e.sig_entry())?;
    }
    let theory = Theory::new(sig, rules);

    let mut compiled = Vec::with_capacity(entries.len());
    let mut index = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        index.insert(e.name.clone(), i);
        compiled.push(compile_entry(e)?);
    }

    let mut rigidity_warnings = Vec::new();
    for (e, k) in entries.iter().zip(&compiled) {
        let pat = match k {
            EntryKind::CheckOnly { pat, .. } => pat,
            EntryKind::InferSynth { pat, .. } => pat,
            _ => continue,
        };
        for v in pattern::rigidity_violations(&theory.sig, &theory.rules, &pat.args) {
            rigidity_warnings.push(format!(
                "recovery pattern of `{}` is not rigid: {v}",
                e.name
            ));
        }
    }

    Ok(ModedTheory {
        entries,
        index,
        theory,
        compiled,
        rigidity_warnings,
    })
}

fn compile_entry(e: &ModedEntry) -> KResult<EntryKind> {
    let n = e.premises.len();
    assert_eq!(e.modes.len(), n, "one mode per premise");
    let erased: Vec<usize> = (0..n)
        .filter(|&i| e.modes[i] == PremiseMode::Erased)
        .collect();
    let synths: Vec<usize> = (0..n)
        .filter(|&i| e.modes[i] == PremiseMode::Synth)
        .collect();

    let result = match &e.result {
        None => {
            if e.declared != DeclaredMode::Unmarked {
                return Err(invalid(&e.name, "type-level constants take no mode mark"));
            }
            if !erased.is_empty() || !synths.is_empty() {
                return Err(invalid(
                    &e.name,
                    "type-level constants must have all premises checked",
                ));
            }
            return Ok(EntryKind::TypeLevel);
        }
        Some(t) => t,
    };

    match e.declared {
        DeclaredMode::Minus => {
            if !synths.is_empty() {
                return Err(invalid(&e.name, "checked constants take no + premise"));
            }
            let k = erased.len();
            if erased != (0..k).collect::<Vec<_>>() {
                return Err(invalid(
                    &e.name,
                    "erased premises of a checked constant must come first",
                ));
            }
            let m = n - k;
            // The result may only mention the erased premises (innermost
            // m indices are the checked ones).
            let pat = strengthen_type(result, 0, m).map_err(|_| {
                invalid(
                    &e.name,
                    "result of a checked constant may only mention its erased premises",
                )
            })?;
            let flex = erase_context(&Context(e.premises.0[..k].to_vec()));
            pattern::is_type_pattern(&flex, &Scope::default(), &pat)?;
            require_full_coverage(&e.name, &flex, &pat.args)?;
            Ok(EntryKind::CheckOnly {
                erased_len: k,
                pat,
                flex,
            })
        }
        DeclaredMode::Plus | DeclaredMode::Unmarked => {
            if synths.is_empty() {
                if !erased.is_empty() {
                    return Err(invalid(
                        &e.name,
                        "a constant with erased premises needs a + premise or a - mark",
                    ));
                }
                return Ok(EntryKind::InferCheck);
            }
            if e.declared == DeclaredMode::Unmarked {
                return Err(invalid(
                    &e.name,
                    "a constant with a + premise must itself be marked +",
                ));
            }
            if synths.len() > 1 {
                return Err(invalid(&e.name, "at most one premise may be marked +"));
            }
            let s = synths[0];
            let k = erased.len();
            if s < k || erased != (s - k..s).collect::<Vec<_>>() {
                return Err(invalid(
                    &e.name,
                    "erased premises must immediately precede the + premise",
                ));
            }
            let d1 = s - k;
            let synth = &e.premises.0[s];
            // The + premise's binder may not mention the erased premises...
            let gx = strengthen_context(&synth.binder, 0, k).map_err(|_| {
                invalid(
                    &e.name,
                    "the binder of the + premise may not mention erased premises",
                )
            })?;
            // ...and its type may not mention the earlier checked ones.
            let pat = strengthen_type(&synth.ty, synth.binder.len() + k, d1).map_err(|_| {
                invalid(
                    &e.name,
                    "the type of the + premise may only mention erased premises and its own binder",
                )
            })?;
            let flex = erase_context(&Context(e.premises.0[d1..d1 + k].to_vec()));
            let rigid = erase_context(&gx);
            pattern::is_type_pattern(&flex, &rigid, &pat)?;
            require_full_coverage(&e.name, &flex, &pat.args)?;
            Ok(EntryKind::InferSynth {
                d1,
                erased_len: k,
                gx,
                pat,
                flex,
            })
        }
    }
}

fn require_full_coverage(name: &Name, flex: &Scope, args: &Spine) -> KResult<()> {
    let mut counts = vec![0usize; flex.len()];
    fn go(t: &Term, depth: usize, flex_len: usize, counts: &mut [usize]) {
        if let Head::Var(i) = t.head() {
            if *i >= depth && *i < depth + flex_len {
                counts[flex_len - 1 - (i - depth)] += 1;
            }
        }
        for it in &t.args().0 {
            go(&it.body, depth + it.binder.len(), flex_len, counts);
        }
    }
    for it in &args.0 {
        go(&it.body, it.binder.len(), flex.len(), &mut counts);
    }
    for (i, c) in counts.iter().enumerate() {
        if *c == 0 {
            return Err(invalid(
                name,
                &format!(
                    "erased premise `{}` does not occur in the recovery pattern",
                    flex.0[i].name
                ),
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Inference and checking
// ---------------------------------------------------------------------

/// Syntactic classification of a term under a moded signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeClass {
    /// `infer` has a rule for it (and `check` via the mode switch).
    Inferable,
    /// Headed by a checked-only constant: `check` only.
    CheckableOnly,
    /// Neither judgment applies.
    IllModed,
}

impl ModeClass {
    pub fn is_checkable(self) -> bool {
        self != ModeClass::IllModed
    }
}

impl ModedTheory {
    pub fn lookup(&self, n: &str) -> Option<&ModedEntry> {
        self.index.get(n).map(|&i| &self.entries[i])
    }
    fn kind_of(&self, n: &str) -> KResult<&EntryKind> {
        self.index
            .get(n)
            .map(|&i| &self.compiled[i])
            .ok_or_else(|| KernelError::UnknownConst(n.to_string()))
    }
    pub fn rules(&self) -> &RewriteSystem {
        &self.theory.rules
    }

    /// The compiled recovery patterns, one per constant with erased
    /// premises: (constant, flexible scope, rigid scope, pattern).
    pub fn recovery_patterns(&self) -> Vec<(Name, Scope, Scope, TypeExpr)> {
        self.entries
            .iter()
            .zip(&self.compiled)
            .filter_map(|(e, k)| match k {
                EntryKind::CheckOnly { pat, flex, .. } => {
                    Some((e.name.clone(), flex.clone(), Scope::default(), pat.clone()))
                }
                EntryKind::InferSynth { pat, flex, gx, .. } => {
                    Some((e.name.clone(), flex.clone(), erase_context(gx), pat.clone()))
                }
                _ => None,
            })
            .collect()
    }

    /// Check one argument against one premise (scoped over the telescope
    /// plus the accumulated spine), extending the accumulator and the
    /// elaboration.
    fn check_one_arg(
        &self,
        env: &mut Telescope,
        premise: &CtxEntry,
        item: &SpineItem,
        acc: &mut Spine,
        elabs: &mut Vec<ElabItem>,
        fuel: &mut Fuel,
    ) -> KResult<()> {
        let binder = subst_context(&premise.binder, acc, 0);
        let ty = subst_type(&premise.ty, acc, premise.binder.len());
        if item.binder != erase_context(&binder) {
            return Err(KernelError::BinderMismatch {
                head: premise.name.to_string(),
                expected: format!("{} binders", binder.len()),
                found: format!("{} binders", item.binder.len()),
            });
        }
        let mark = env.len();
        env.push_context(&binder);
        let res = self.check(env, &item.body, &ty, fuel);
        env.truncate(mark);
        let e = res?;
        acc.0.push(item.clone());
        elabs.push(ElabItem {
            binder: item.binder.clone(),
            body: e,
        });
        Ok(())
    }

    fn check_args(
        &self,
        env: &mut Telescope,
        premises: &[CtxEntry],
        items: &[SpineItem],
        head: &str,
        fuel: &mut Fuel,
    ) -> KResult<(Spine, Vec<ElabItem>)> {
        if premises.len() != items.len() {
            return Err(KernelError::ArityMismatch {
                name: head.to_string(),
                expected: premises.len(),
                found: items.len(),
            });
        }
        let mut acc = Spine(Vec::with_capacity(items.len()));
        let mut elabs = Vec::with_capacity(items.len());
        for (premise, item) in premises.iter().zip(items) {
            self.check_one_arg(env, premise, item, &mut acc, &mut elabs, fuel)?;
        }
        Ok((acc, elabs))
    }

    /// Recover and elaborate the erased premises `premises[first..first+k]`
    /// from a matching assignment, extending `acc`/`elabs` in premise
    /// order.
    #[allow(clippy::too_many_arguments)]
    fn admit_recovered(
        &self,
        env: &mut Telescope,
        premises: &[CtxEntry],
        first: usize,
        recovered: &Spine,
        acc: &mut Spine,
        elabs: &mut Vec<ElabItem>,
        fuel: &mut Fuel,
    ) -> KResult<()> {
        for (j, item) in recovered.0.iter().enumerate() {
            let premise = &premises[first + j];
            let binder = subst_context(&premise.binder, acc, 0);
            let ty = subst_type(&premise.ty, acc, premise.binder.len());
            let shape = erase_context(&binder);
            if item.binder != shape {
                return Err(KernelError::MatchFail(format!(
                    "recovered argument for `{}` has the wrong binder shape",
                    premise.name
                )));
            }
            let mark = env.len();
            env.push_context(&binder);
            let res = self.check(env, &item.body, &ty, fuel);
            env.truncate(mark);
            let e = res.map_err(|err| {
                KernelError::Other(format!(
                    "recovered erased argument `{}` := `{}` is not well-typed: {err}",
                    premise.name,
                    print_closed(&item.body)
                ))
            })?;
            acc.0.push(item.clone());
            elabs.push(ElabItem {
                binder: item.binder.clone(),
                body: e,
            });
        }
        Ok(())
    }

    /// Infer a type for `t`, returning it with the elaboration.
    pub fn infer(
        &self,
        env: &mut Telescope,
        t: &Term,
        fuel: &mut Fuel,
    ) -> KResult<(TypeExpr, ElabTerm)> {
        match t.head() {
            Head::Var(i) => {
                let (binder, ty) = env.lookup(*i)?;
                let (acc, elabs) =
                    self.check_args(env, &binder.0, &t.args().0, "<variable>", fuel)?;
                Ok((
                    subst_type(&ty, &acc, 0),
                    ElabTerm::new(Head::Var(*i), elabs),
                ))
            }
            Head::Const(c) => {
                let idx = *self
                    .index
                    .get(c)
                    .ok_or_else(|| KernelError::UnknownConst(c.to_string()))?;
                let entry = &self.entries[idx];
                match &self.compiled[idx] {
                    EntryKind::TypeLevel => Err(KernelError::TypeLevelInTerm(c.to_string())),
                    EntryKind::CheckOnly { .. } => Err(KernelError::NoInferRule(c.to_string())),
                    EntryKind::InferCheck => {
                        let result = entry.result.as_ref().expect("term-level entry");
                        let (acc, elabs) =
                            self.check_args(env, &entry.premises.0, &t.args().0, c, fuel)?;
                        Ok((
                            subst_type(result, &acc, 0),
                            ElabTerm::new(Head::Const(c.clone()), elabs),
                        ))
                    }
                    EntryKind::InferSynth {
                        d1,
                        erased_len,
                        gx,
                        pat,
                        flex,
                    } => {
                        let (d1, k) = (*d1, *erased_len);
                        let premises = &entry.premises.0;
                        let d2 = premises.len() - d1 - k - 1;
                        if t.args().len() != d1 + 1 + d2 {
                            return Err(KernelError::ArityMismatch {
                                name: c.to_string(),
                                expected: d1 + 1 + d2,
                                found: t.args().len(),
                            });
                        }
                        let mut acc = Spine(Vec::new());
                        let mut elabs = Vec::new();
                        for (premise, item) in premises.iter().zip(&t.args().0).take(d1) {
                            self.check_one_arg(env, premise, item, &mut acc, &mut elabs, fuel)?;
                        }
                        // Infer the synthesizing argument under its binder.
                        let gx_inst = subst_context(gx, &acc, 0);
                        let synth_item = &t.args().0[d1];
                        let gx_shape = erase_context(&gx_inst);
                        if synth_item.binder != gx_shape {
                            return Err(KernelError::BinderMismatch {
                                head: c.to_string(),
                                expected: format!("{} binders", gx_shape.len()),
                                found: format!("{} binders", synth_item.binder.len()),
                            });
                        }
                        let mark = env.len();
                        env.push_context(&gx_inst);
                        let res = self.infer(env, &synth_item.body, fuel);
                        env.truncate(mark);
                        let (found, synth_elab) = res?;
                        // Recover the erased arguments by matching the
                        // declared (pattern) type against the found one.
                        let recovered = pattern::match_type(
                            &self.theory.rules,
                            flex,
                            &gx_shape,
                            pat,
                            &found,
                            fuel,
                        )
                        .map_err(|e| {
                            KernelError::MatchFail(format!(
                                "argument of `{c}` has type `{}`, which does not fit `{}`: {e}",
                                print_closed(&found),
                                print_closed(pat),
                            ))
                        })?;
                        self.admit_recovered(
                            env, premises, d1, &recovered, &mut acc, &mut elabs, fuel,
                        )?;
                        acc.0.push(SpineItem {
                            binder: gx_shape.clone(),
                            body: synth_item.body.clone(),
                        });
                        elabs.push(ElabItem {
                            binder: gx_shape,
                            body: synth_elab,
                        });
                        for j in 0..d2 {
                            self.check_one_arg(
                                env,
                                &premises[d1 + k + 1 + j],
                                &t.args().0[d1 + 1 + j],
                                &mut acc,
                                &mut elabs,
                                fuel,
                            )?;
                        }
                        let result = entry.result.as_ref().expect("term-level entry");
                        Ok((
                            subst_type(result, &acc, 0),
                            ElabTerm::new(Head::Const(c.clone()), elabs),
                        ))
                    }
                }
            }
        }
    }

    /// Check `t` against `expected`. Checked-only constants match their
    /// result pattern against `expected` to recover erased arguments;
    /// anything else switches to inference plus conversion.
    pub fn check(
        &self,
        env: &mut Telescope,
        t: &Term,
        expected: &TypeExpr,
        fuel: &mut Fuel,
    ) -> KResult<ElabTerm> {
        if let Head::Const(c) = t.head() {
            if let EntryKind::CheckOnly {
                erased_len,
                pat,
                flex,
            } = self.kind_of(c)?
            {
                let idx = self.index[c];
                let entry = &self.entries[idx];
                let k = *erased_len;
                let m = entry.premises.len() - k;
                if t.args().len() != m {
                    return Err(KernelError::ArityMismatch {
                        name: c.to_string(),
                        expected: m,
                        found: t.args().len(),
                    });
                }
                let recovered = pattern::match_type(
                    &self.theory.rules,
                    flex,
                    &Scope::default(),
                    pat,
                    expected,
                    fuel,
                )
                .map_err(|e| {
                    KernelError::MatchFail(format!(
                        "`{c}` constructs `{}`, which does not fit expected type `{}`: {e}",
                        print_closed(pat),
                        print_closed(expected),
                    ))
                })?;
                let mut acc = Spine(Vec::new());
                let mut elabs = Vec::new();
                self.admit_recovered(
                    env,
                    &entry.premises.0,
                    0,
                    &recovered,
                    &mut acc,
                    &mut elabs,
                    fuel,
                )?;
                for j in 0..m {
                    self.check_one_arg(
                        env,
                        &entry.premises.0[k + j],
                        &t.args().0[j],
                        &mut acc,
                        &mut elabs,
                        fuel,
                    )?;
                }
                return Ok(ElabTerm::new(Head::Const(c.clone()), elabs));
            }
        }
        // Mode switch: infer, then compare up to conversion.
        let (found, e) = self.infer(env, t, fuel)?;
        if self
            .theory
            .rules
            .convertible_type(&found, expected, fuel)?
        {
            Ok(e)
        } else {
            Err(KernelError::TypeMismatch {
                expected: print_closed(expected),
                found: print_closed(&found),
            })
        }
    }

    /// Well-formedness of a surface type under the moded discipline: the
    /// head is type-level and each argument checks at its premise type.
    pub fn check_type_wf(
        &self,
        env: &mut Telescope,
        ty: &TypeExpr,
        fuel: &mut Fuel,
    ) -> KResult<Vec<ElabItem>> {
        let idx = *self
            .index
            .get(&ty.head)
            .ok_or_else(|| KernelError::UnknownConst(ty.head.to_string()))?;
        if !matches!(self.compiled[idx], EntryKind::TypeLevel) {
            return Err(KernelError::TermLevelInType(ty.head.to_string()));
        }
        let entry = &self.entries[idx];
        let (_, elabs) = self.check_args(env, &entry.premises.0, &ty.args.0, &ty.head, fuel)?;
        Ok(elabs)
    }

    /// Classify a term purely syntactically against the moded signature
    /// (no types involved): which judgments can possibly apply to it.
    pub fn classify_modes(&self, t: &Term) -> ModeClass {
        let args_ok = |t: &Term| {
            t.args()
                .0
                .iter()
                .all(|it| self.classify_modes(&it.body).is_checkable())
        };
        match t.head() {
            Head::Var(_) => {
                if args_ok(t) {
                    ModeClass::Inferable
                } else {
                    ModeClass::IllModed
                }
            }
            Head::Const(c) => match self.kind_of(c) {
                Err(_) => ModeClass::IllModed,
                Ok(EntryKind::TypeLevel) => ModeClass::IllModed,
                Ok(EntryKind::InferCheck) => {
                    if args_ok(t) {
                        ModeClass::Inferable
                    } else {
                        ModeClass::IllModed
                    }
                }
                Ok(EntryKind::CheckOnly { .. }) => {
                    if args_ok(t) {
                        ModeClass::CheckableOnly
                    } else {
                        ModeClass::IllModed
                    }
                }
                Ok(EntryKind::InferSynth { d1, .. }) => {
                    let d1 = *d1;
                    if t.args().len() <= d1 {
                        return ModeClass::IllModed;
                    }
                    let synth_ok =
                        self.classify_modes(&t.args().0[d1].body) == ModeClass::Inferable;
                    let rest_ok = t
                        .args()
                        .0
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != d1)
                        .all(|(_, it)| self.classify_modes(&it.body).is_checkable());
                    if synth_ok && rest_ok {
                        ModeClass::Inferable
                    } else {
                        ModeClass::IllModed
                    }
                }
            },
        }
    }
}

impl SurfaceElaborator for ModedTheory {
    fn elaborate(
        &self,
        env: &mut Telescope,
        t: &Term,
        expected: &TypeExpr,
        fuel: &mut Fuel,
    ) -> KResult<ElabTerm> {
        self.check(env, t, expected, fuel)
    }
}

/// Full validation pipeline for a theory: moded shape conditions, rule
/// validity, then declarative well-formedness of the signature with the
/// bidirectional checker supplying elaborations.
pub fn validate_theory(
    entries: Vec<ModedEntry>,
    rules: RewriteSystem,
    fuel: &mut Fuel,
) -> KResult<ModedTheory> {
    let mthy = validate_moded_signature(entries, rules)?;
    for rule in mthy.theory.rules.rules() {
        crate::rewrite::validate_rule(&mthy.theory.pre, rule)?;
    }
    decl::check_signature(&mthy.theory, &mthy, fuel)?;
    Ok(mthy)
}
