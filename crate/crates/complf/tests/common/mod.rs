//! Helpers shared by the integration test suites: theory loading, term
//! builders, size-bounded enumeration, and random generators.
#![allow(dead_code)]

use std::path::PathBuf;

use complf::bidir::{validate_theory, ModedTheory};
use complf::decl::{ElabItem, ElabTerm};
use complf::rewrite::Fuel;
use complf::syntax::*;
use rand::prelude::*;
use rand::rngs::StdRng;

pub fn theories_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../theories")
}

pub fn load_theory(fname: &str) -> ModedTheory {
    let src = std::fs::read_to_string(theories_dir().join(fname))
        .unwrap_or_else(|e| panic!("read {fname}: {e}"));
    let f = complf::surface::parse_theory(&src).unwrap_or_else(|e| panic!("parse {fname}: {e}"));
    let mut fuel = Fuel::default_budget();
    validate_theory(f.entries, f.rules, &mut fuel)
        .unwrap_or_else(|e| panic!("validate {fname}: {e}"))
}

pub fn fuel() -> Fuel {
    Fuel::default_budget()
}

// ---------------------------------------------------------------------
// Term builders
// ---------------------------------------------------------------------

pub fn item(binder: Vec<ScopeEntry>, body: Term) -> SpineItem {
    SpineItem {
        binder: Scope(binder),
        body,
    }
}

pub fn con(n: &str, items: Vec<SpineItem>) -> Term {
    Term::con(n, Spine(items))
}

pub fn var(i: usize) -> Term {
    Term::var(i, Spine(vec![]))
}

pub fn s0(n: &str, sort: &str) -> ScopeEntry {
    ScopeEntry::order0(n, Sort(name(sort)))
}

pub fn ty1(head: &str, arg: Term) -> TypeExpr {
    TypeExpr::new(head, Spine(vec![item(vec![], arg)]))
}

/// Natural-number numeral in the arithmetic theory.
pub fn num(n: u64) -> Term {
    (0..n).fold(con("zero", vec![]), |t, _| con("succ", vec![item(vec![], t)]))
}

/// Structural reinterpretation of a core term as an elaborated term (valid
/// when the spine is already full, e.g. for enumeration over full arities).
pub fn to_elab(t: &Term) -> ElabTerm {
    ElabTerm::new(
        t.head().clone(),
        t.args()
            .0
            .iter()
            .map(|it| ElabItem {
                binder: it.binder.clone(),
                body: to_elab(&it.body),
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------
// Size-bounded enumeration of well-scoped terms
// ---------------------------------------------------------------------

/// All terms of the given sort over `env`, of size (node count) at most
/// `max`, hereditarily well-scoped and arity-correct for `pre`.
pub fn enum_terms(pre: &PreSignature, env: &[ScopeEntry], sort: &Sort, max: usize) -> Vec<Term> {
    if max == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    // Variable heads: index i refers to the entry `len - 1 - i`.
    for (pos, e) in env.iter().enumerate() {
        if &e.sort != sort {
            continue;
        }
        let i = env.len() - 1 - pos;
        for spine in enum_spines(pre, env, &e.binder.0, max - 1) {
            out.push(Term::var(i, spine));
        }
    }
    for e in pre.entries() {
        let s = match &e.result {
            PreResult::Sort(s) => s,
            PreResult::TypeKind => continue,
        };
        if s != sort {
            continue;
        }
        for spine in enum_spines(pre, env, &e.binder.0, max - 1) {
            out.push(Term::con(&e.name, spine));
        }
    }
    out
}

fn enum_spines(
    pre: &PreSignature,
    env: &[ScopeEntry],
    entries: &[ScopeEntry],
    budget: usize,
) -> Vec<Spine> {
    let Some((first, rest)) = entries.split_first() else {
        return vec![Spine(vec![])];
    };
    // Every remaining argument needs at least one node.
    if budget < entries.len() {
        return Vec::new();
    }
    let mut inner = env.to_vec();
    inner.extend(first.binder.0.iter().cloned());
    let mut out = Vec::new();
    for body in enum_terms(pre, &inner, &first.sort, budget - rest.len()) {
        let used = body.size();
        for tail in enum_spines(pre, env, rest, budget - used) {
            let mut items = vec![SpineItem {
                binder: first.binder.clone(),
                body: body.clone(),
            }];
            items.extend(tail.0);
            out.push(Spine(items));
        }
    }
    out
}

/// The all-premises-kept arity of each constant: enumeration over this
/// pre-signature produces full (elaborated-shape) terms.
pub fn full_arities(sig: &Signature) -> PreSignature {
    let mut pre = PreSignature::default();
    for e in sig.entries() {
        let result = match &e.result {
            SigResult::TypeKind => PreResult::TypeKind,
            SigResult::Type(t) => PreResult::Sort(erase_type(t)),
        };
        pre.push(PreEntry {
            name: e.name.clone(),
            binder: erase_context(&e.premises),
            result,
        })
        .unwrap();
    }
    pre
}

/// No beta-redex anywhere: no App whose function argument is a Lam.
pub fn beta_normal(t: &Term) -> bool {
    if let Head::Const(c) = t.head() {
        if &**c == "App" {
            if let Head::Const(f) = t.args().0[0].body.head() {
                if &**f == "Lam" {
                    return false;
                }
            }
        }
    }
    t.args().0.iter().all(|it| beta_normal(&it.body))
}

// ---------------------------------------------------------------------
// Random generation: pure variable scopes (substitution laws)
// ---------------------------------------------------------------------

pub struct Gen {
    pub rng: StdRng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn sort(&mut self) -> Sort {
        if self.rng.gen_bool(0.5) {
            Sort(name("a"))
        } else {
            Sort(name("b"))
        }
    }

    /// A random scope; entries of order up to `order`.
    pub fn scope(&mut self, order: u32, max_entries: usize) -> Scope {
        let n = self.rng.gen_range(0..=max_entries);
        Scope(
            (0..n)
                .map(|i| {
                    let binder = if order > 0 && self.rng.gen_bool(0.5) {
                        self.scope(order - 1, 2)
                    } else {
                        Scope::default()
                    };
                    ScopeEntry {
                        name: name(&format!("v{i}")),
                        binder,
                        sort: self.sort(),
                    }
                })
                .collect(),
        )
    }

    /// A random well-scoped term over `env` of the given sort. `env` must
    /// contain an order-0 entry of every sort used (the fallback leaf).
    pub fn term(&mut self, env: &[ScopeEntry], sort: &Sort, depth: u32) -> Term {
        let candidates: Vec<usize> = env
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                &e.sort == sort && (depth > 0 || e.binder.is_empty())
            })
            .map(|(p, _)| p)
            .collect();
        let pos = candidates[self.rng.gen_range(0..candidates.len())];
        let entry = env[pos].clone();
        let i = env.len() - 1 - pos;
        let items = entry
            .binder
            .0
            .iter()
            .map(|be| {
                let mut inner = env.to_vec();
                inner.extend(be.binder.0.iter().cloned());
                SpineItem {
                    binder: be.binder.clone(),
                    body: self.term(&inner, &be.sort, depth.saturating_sub(1)),
                }
            })
            .collect();
        Term::var(i, Spine(items))
    }

    /// A random payload spine instantiating `scope`, with bodies over `env`.
    pub fn payload(&mut self, env: &[ScopeEntry], scope: &Scope, depth: u32) -> Spine {
        Spine(
            scope
                .0
                .iter()
                .map(|e| {
                    let mut inner = env.to_vec();
                    inner.extend(e.binder.0.iter().cloned());
                    SpineItem {
                        binder: e.binder.clone(),
                        body: self.term(&inner, &e.sort, depth),
                    }
                })
                .collect(),
        )
    }
}

/// The ambient scope used by the substitution-law generators: order-0
/// leaves of both sorts plus one higher-order entry per sort.
pub fn ambient() -> Vec<ScopeEntry> {
    vec![
        s0("p", "a"),
        s0("q", "b"),
        ScopeEntry {
            name: name("h"),
            binder: Scope(vec![s0("x", "a")]),
            sort: Sort(name("b")),
        },
        ScopeEntry {
            name: name("k"),
            binder: Scope(vec![s0("y", "b")]),
            sort: Sort(name("a")),
        },
    ]
}

// ---------------------------------------------------------------------
// Random generation: well-typed terms in the bundled theories
// ---------------------------------------------------------------------

/// Random universe level, `zero`/`succ` only.
pub fn gen_level(g: &mut Gen, depth: u32) -> Term {
    if depth == 0 || g.rng.gen_bool(0.4) {
        num(0)
    } else {
        con("succ", vec![item(vec![], gen_level(g, depth - 1))])
    }
}

/// A random closed code of type `Tm(U(level))`, returning (code, level).
/// Produces `uu`, `up`, and `pi` nodes, including `up(pi(..))` redexes.
pub fn gen_code(g: &mut Gen, depth: u32) -> (Term, Term) {
    let choice = if depth == 0 { 0 } else { g.rng.gen_range(0..4) };
    match choice {
        1 => {
            let (a, l) = gen_code(g, depth - 1);
            (
                con("up", vec![item(vec![], a)]),
                con("succ", vec![item(vec![], l)]),
            )
        }
        2 | 3 => {
            // pi(a, x. b): both codes at the same level. Levels must agree,
            // so lift the smaller side with up as needed.
            let (a, la) = gen_code(g, depth - 1);
            let (b, lb) = gen_code(g, depth - 1);
            let (a, b, l) = equalize_levels(a, la, b, lb);
            let body = complf::subst::shift_term(&b, 0, 1);
            (
                con(
                    "pi",
                    vec![item(vec![], a), item(vec![s0("x", "Tm")], body)],
                ),
                l,
            )
        }
        _ => {
            let l = gen_level(g, depth);
            (
                con("uu", vec![item(vec![], l.clone())]),
                con("succ", vec![item(vec![], l)]),
            )
        }
    }
}

fn level_height(l: &Term) -> u64 {
    match l.head() {
        Head::Const(c) if &**c == "succ" => 1 + level_height(&l.args().0[0].body),
        _ => 0,
    }
}

fn lift(code: Term, by: u64) -> Term {
    (0..by).fold(code, |c, _| con("up", vec![item(vec![], c)]))
}

fn equalize_levels(a: Term, la: Term, b: Term, lb: Term) -> (Term, Term, Term) {
    let (ha, hb) = (level_height(&la), level_height(&lb));
    if ha < hb {
        (lift(a, hb - ha), b, lb)
    } else {
        (a, lift(b, ha - hb), la)
    }
}

/// Random simple object type over the ambient base `A0` (de Bruijn index
/// pointing at an ambient telescope entry of type `Ty`): either the base
/// or a non-dependent Pi. Returned as a term of sort `Ty` over the
/// ambient scope only (closed under the local context).
pub fn gen_obj_ty(g: &mut Gen, base: usize, depth: u32) -> Term {
    if depth == 0 || g.rng.gen_bool(0.5) {
        var(base)
    } else {
        let dom = gen_obj_ty(g, base, depth - 1);
        let cod = gen_obj_ty(g, base, depth - 1);
        con(
            "Pi",
            vec![
                item(vec![], dom),
                item(
                    vec![s0("x", "Tm")],
                    complf::subst::shift_term(&cod, 0, 1),
                ),
            ],
        )
    }
}

fn pi_parts(ty: &Term) -> Option<(Term, Term)> {
    if let Head::Const(c) = ty.head() {
        if &**c == "Pi" {
            let dom = ty.args().0[0].body.clone();
            let cod = ty.args().0[1].body.clone();
            return Some((dom, cod));
        }
    }
    None
}

/// A random well-typed surface term of type `Tm(ty)` in the annotated
/// lambda-Pi theories. `locals` holds the object types of the local
/// binders, innermost last; all types are terms over the ambient scope
/// (vars `>= locals.len() + extra` point into the ambient telescope once
/// shifted). `ground` is the de Bruijn index (at locals depth 0) of an
/// ambient variable of the base object type; `base` that of the base type.
pub struct TypedGen {
    pub base: usize,   // ambient index of A0 : Ty at depth 0
    pub ground: usize, // ambient index of a0 : Tm(A0) at depth 0
}

impl TypedGen {
    /// `ty` is an object type over the ambient scope (depth 0 indices).
    pub fn term(&self, g: &mut Gen, locals: &[Term], ty: &Term, depth: u32) -> Term {
        let d = locals.len();
        let here = |t: &Term| complf::subst::shift_term(t, 0, d);
        // A local variable of exactly this type?
        let mut hits: Vec<usize> = locals
            .iter()
            .enumerate()
            .filter(|(_, lty)| *lty == ty)
            .map(|(pos, _)| d - 1 - pos)
            .collect();
        if ty == &var(self.base) {
            hits.push(self.ground + d);
        }
        if depth == 0 {
            if let Some((dom, _cod)) = pi_parts(ty) {
                // No budget: eta-expand to a lambda and recurse at depth 0
                // (strictly smaller type, so this terminates).
                return self.lam(g, locals, &dom, &pi_cod(ty), 0);
            }
            if let Some(&i) = hits.first() {
                return var(i);
            }
            // Base type with no hit cannot happen: ground is always a hit.
            unreachable!("no inhabitant for a non-Pi, non-base type");
        }
        match g.rng.gen_range(0..4) {
            0 if !hits.is_empty() => var(hits[g.rng.gen_range(0..hits.len())]),
            1 => {
                // A beta-redex at this type: App(Lam(dom, x. body), arg).
                let dom = gen_obj_ty(g, self.base, 1);
                let mut inner = locals.to_vec();
                inner.push(dom.clone());
                let body = self.term(g, &inner, ty, depth - 1);
                let arg = self.term(g, locals, &dom, depth - 1);
                con(
                    "App",
                    vec![
                        item(
                            vec![],
                            con(
                                "Lam",
                                vec![
                                    item(vec![], here(&dom)),
                                    item(vec![s0("x", "Tm")], body),
                                ],
                            ),
                        ),
                        item(vec![], arg),
                    ],
                )
            }
            _ => {
                if let Some((dom, _)) = pi_parts(ty) {
                    self.lam(g, locals, &dom, &pi_cod(ty), depth - 1)
                } else if let Some(&i) = hits.first() {
                    var(i)
                } else {
                    self.term(g, locals, ty, depth - 1)
                }
            }
        }
    }

    fn lam(&self, g: &mut Gen, locals: &[Term], dom: &Term, cod: &Term, depth: u32) -> Term {
        let d = locals.len();
        let mut inner = locals.to_vec();
        inner.push(dom.clone());
        let body = self.term(g, &inner, cod, depth);
        con(
            "Lam",
            vec![
                item(vec![], complf::subst::shift_term(dom, 0, d)),
                item(vec![s0("x", "Tm")], body),
            ],
        )
    }
}

/// Codomain of a non-dependent Pi, strengthened back below the binder.
fn pi_cod(ty: &Term) -> Term {
    let (_, cod) = pi_parts(ty).expect("Pi type");
    complf::subst::strengthen_term(&cod, 0, 1).expect("non-dependent codomain")
}
