//! Hereditary substitution, shifts, strengthening, and identity spines.
//!
//! A substitution step instantiates a contiguous segment of the telescope:
//! the subject lives over `g1.g2.g3`, the payload spine lives over `g1`
//! and is indexed by `g2`, and the result lives over `g1.g3`. `depth`
//! is the current size of `g3` (it grows under binders). Flexible heads
//! (those pointing into `g2`) are replaced hereditarily: the payload body
//! is weakened past `g3` and its own binder is instantiated in turn. This
//! recursion terminates because the binder of a payload entry has strictly
//! smaller order than `g2`.

use crate::error::{KResult, KernelError};
use crate::syntax::*;

// ---------------------------------------------------------------------
// Shifts
// ---------------------------------------------------------------------

/// Weaken `t` by `by`: indices `>= cutoff` are incremented. Cheap no-op
/// when `by == 0` thanks to structural sharing.
pub fn shift_term(t: &Term, cutoff: usize, by: usize) -> Term {
    if by == 0 {
        return t.clone();
    }
    let head = match t.head() {
        Head::Var(i) if *i >= cutoff => Head::Var(i + by),
        h => h.clone(),
    };
    Term::new(head, shift_spine(t.args(), cutoff, by))
}

pub fn shift_spine(s: &Spine, cutoff: usize, by: usize) -> Spine {
    if by == 0 {
        return s.clone();
    }
    Spine(
        s.0.iter()
            .map(|it| SpineItem {
                binder: it.binder.clone(),
                body: shift_term(&it.body, cutoff + it.binder.len(), by),
            })
            .collect(),
    )
}

pub fn shift_type(ty: &TypeExpr, cutoff: usize, by: usize) -> TypeExpr {
    TypeExpr {
        head: ty.head.clone(),
        args: shift_spine(&ty.args, cutoff, by),
    }
}

/// Shift a context; entry `i` additionally sees the `i` earlier entries,
/// so its cutoff grows with its position.
pub fn shift_context(ctx: &Context, cutoff: usize, by: usize) -> Context {
    Context(
        ctx.0
            .iter()
            .enumerate()
            .map(|(i, e)| CtxEntry {
                name: e.name.clone(),
                binder: shift_context(&e.binder, cutoff + i, by),
                ty: shift_type(&e.ty, cutoff + i + e.binder.len(), by),
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------
// Strengthening: remove a telescope segment, failing on occurrence
// ---------------------------------------------------------------------

/// Remove the telescope segment `[lo, lo+len)` (indices counted from the
/// innermost end at the point of use). Fails with `VarEscapes` if the
/// subject mentions a removed variable.
pub fn strengthen_term(t: &Term, lo: usize, len: usize) -> KResult<Term> {
    if len == 0 {
        return Ok(t.clone());
    }
    let head = match t.head() {
        Head::Var(i) if *i >= lo + len => Head::Var(i - len),
        Head::Var(i) if *i >= lo => return Err(KernelError::VarEscapes),
        h => h.clone(),
    };
    Ok(Term::new(head, strengthen_spine(t.args(), lo, len)?))
}

pub fn strengthen_spine(s: &Spine, lo: usize, len: usize) -> KResult<Spine> {
    Ok(Spine(
        s.0.iter()
            .map(|it| {
                Ok(SpineItem {
                    binder: it.binder.clone(),
                    body: strengthen_term(&it.body, lo + it.binder.len(), len)?,
                })
            })
            .collect::<KResult<_>>()?,
    ))
}

pub fn strengthen_type(ty: &TypeExpr, lo: usize, len: usize) -> KResult<TypeExpr> {
    Ok(TypeExpr {
        head: ty.head.clone(),
        args: strengthen_spine(&ty.args, lo, len)?,
    })
}

pub fn strengthen_context(ctx: &Context, lo: usize, len: usize) -> KResult<Context> {
    Ok(Context(
        ctx.0
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Ok(CtxEntry {
                    name: e.name.clone(),
                    binder: strengthen_context(&e.binder, lo + i, len)?,
                    ty: strengthen_type(&e.ty, lo + i + e.binder.len(), len)?,
                })
            })
            .collect::<KResult<_>>()?,
    ))
}

// ---------------------------------------------------------------------
// Hereditary substitution
// ---------------------------------------------------------------------

/// Substitute the segment of `sub.len()` variables starting `depth`
/// positions above the innermost end. Payload item `j` (leftmost first)
/// corresponds to the `j`-th entry of the instantiated segment.
pub fn subst_term(t: &Term, sub: &Spine, depth: usize) -> Term {
    // Substituting an empty segment is the identity; returning the shared
    // term keeps first-order rewriting linear in the number of steps.
    if sub.is_empty() {
        return t.clone();
    }
    let m = sub.len();
    match t.head() {
        Head::Var(i) if *i >= depth && *i < depth + m => {
            // Flexible head: hereditary replacement.
            let j = i - depth; // index into the segment, innermost first
            let item = &sub.0[m - 1 - j];
            let args = subst_spine(t.args(), sub, depth);
            let k = item.binder.len();
            debug_assert_eq!(args.len(), k, "payload binder/argument mismatch");
            let body = shift_term(&item.body, k, depth);
            subst_term(&body, &args, 0)
        }
        Head::Var(i) if *i >= depth + m => {
            Term::new(Head::Var(i - m), subst_spine(t.args(), sub, depth))
        }
        h => Term::new(h.clone(), subst_spine(t.args(), sub, depth)),
    }
}

pub fn subst_spine(s: &Spine, sub: &Spine, depth: usize) -> Spine {
    if sub.is_empty() {
        return s.clone();
    }
    Spine(
        s.0.iter()
            .map(|it| SpineItem {
                binder: it.binder.clone(),
                body: subst_term(&it.body, sub, depth + it.binder.len()),
            })
            .collect(),
    )
}

pub fn subst_type(ty: &TypeExpr, sub: &Spine, depth: usize) -> TypeExpr {
    TypeExpr {
        head: ty.head.clone(),
        args: subst_spine(&ty.args, sub, depth),
    }
}

pub fn subst_context(ctx: &Context, sub: &Spine, depth: usize) -> Context {
    Context(
        ctx.0
            .iter()
            .enumerate()
            .map(|(i, e)| CtxEntry {
                name: e.name.clone(),
                binder: subst_context(&e.binder, sub, depth + i),
                ty: subst_type(&e.ty, sub, depth + i + e.binder.len()),
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------
// Identity spines
// ---------------------------------------------------------------------

/// The identity spine of a scope: entry `x :: delta -> s` becomes the
/// eta-expanded item `ys_delta. x(id_delta)`. Satisfies `e[id] = e` and
/// `id[ts] = ts`.
pub fn identity_spine(scope: &Scope) -> Spine {
    let n = scope.len();
    Spine(
        scope
            .0
            .iter()
            .enumerate()
            .map(|(j, entry)| {
                let k = entry.binder.len();
                SpineItem {
                    binder: entry.binder.clone(),
                    body: Term::var(k + (n - 1 - j), identity_spine(&entry.binder)),
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Sort {
        Sort(name(n))
    }

    // Scope (f :: (x :: a) -> b, y :: a)
    fn sample_scope() -> Scope {
        Scope(vec![
            ScopeEntry {
                name: name("f"),
                binder: Scope(vec![ScopeEntry::order0("x", s("a"))]),
                sort: s("b"),
            },
            ScopeEntry::order0("y", s("a")),
        ])
    }

    #[test]
    fn identity_spine_eta_expands() {
        let sc = sample_scope();
        let id = identity_spine(&sc);
        assert_eq!(id.len(), 2);
        // f-item: x. f(x) with f at index 1 (one binder) + 0... f is the
        // outermost of two entries: from innermost, f has index 1; under
        // one binder its index is 2.
        let f_item = &id.0[0];
        assert_eq!(f_item.binder.len(), 1);
        assert_eq!(f_item.body.head(), &Head::Var(2));
        assert_eq!(f_item.body.args().0[0].body.head(), &Head::Var(0));
        // y-item: y itself.
        let y_item = &id.0[1];
        assert!(y_item.binder.is_empty());
        assert_eq!(y_item.body.head(), &Head::Var(0));
    }

    #[test]
    fn subst_identity_is_identity() {
        let sc = sample_scope();
        let id = identity_spine(&sc);
        // e = f(c(y)) over the sample scope, with c a constant. f's single
        // argument instantiates the order-0 entry x, so the item binds
        // nothing and y is index 0.
        let e = Term::var(
            1,
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::con(
                    "c",
                    Spine(vec![SpineItem {
                        binder: Scope::default(),
                        body: Term::var(0, Spine::default()),
                    }]),
                ),
            }]),
        );
        assert_eq!(subst_term(&e, &id, 0), e);
    }

    #[test]
    fn identity_of_payload_is_payload() {
        let sc = sample_scope();
        let id = identity_spine(&sc);
        // Payload over an ambient scope with one order-0 var z :: a:
        // f := x. g0(x), y := z   (g0 a constant-like var stand-in)
        let payload = Spine(vec![
            SpineItem {
                binder: Scope(vec![ScopeEntry::order0("x", s("a"))]),
                body: Term::con(
                    "g0",
                    Spine(vec![SpineItem {
                        binder: Scope::default(),
                        body: Term::var(0, Spine::default()),
                    }]),
                ),
            },
            SpineItem {
                binder: Scope::default(),
                body: Term::var(0, Spine::default()),
            },
        ]);
        assert_eq!(subst_spine(&id, &payload, 0), payload);
    }

    #[test]
    fn beta_style_hereditary_substitution() {
        // body = f(y) over (f :: (x::a)->b, y :: a); substitute
        // f := x. c(x), y := d()  ==>  c(d())
        let body = Term::var(
            1,
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::var(0, Spine::default()),
            }]),
        );
        let payload = Spine(vec![
            SpineItem {
                binder: Scope(vec![ScopeEntry::order0("x", s("a"))]),
                body: Term::con(
                    "c",
                    Spine(vec![SpineItem {
                        binder: Scope::default(),
                        body: Term::var(0, Spine::default()),
                    }]),
                ),
            },
            SpineItem {
                binder: Scope::default(),
                body: Term::con("d", Spine::default()),
            },
        ]);
        let r = subst_term(&body, &payload, 0);
        let expected = Term::con(
            "c",
            Spine(vec![SpineItem {
                binder: Scope::default(),
                body: Term::con("d", Spine::default()),
            }]),
        );
        assert_eq!(r, expected);
    }

    #[test]
    fn strengthen_detects_escape() {
        let t = Term::var(0, Spine::default());
        assert!(strengthen_term(&t, 0, 1).is_err());
        let t2 = Term::var(2, Spine::default());
        assert_eq!(
            strengthen_term(&t2, 0, 1).unwrap(),
            Term::var(1, Spine::default())
        );
    }
}
