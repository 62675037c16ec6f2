//! Surface syntax: lexing, parsing, lowering to core syntax, and printing.
//!
//! ```text
//! file    ::= decl*
//! decl    ::= "symbol" NAME mode? binder* ":" result
//!           | "rule" "[" varctx? "]" term "-->" term
//!           | "def" NAME (":" type)? ":=" term
//!           | "eval" term
//! mode    ::= "+" | "-"
//! binder  ::= "(" NAME ":" arrtype ")" mode? | "{" NAME ":" arrtype "}"
//! arrtype ::= ("(" NAME ":" arrtype ")")* "->"? type   -- arrow before result
//! result  ::= type | "Type"
//! type    ::= NAME args?
//! term    ::= NAME args?
//! args    ::= "(" absterm ("," absterm)* ")"
//! absterm ::= (NAME+ ".")? term
//! varctx  ::= NAME (":" "(" NAME* ")")? ("," ...)*
//! ```
//!
//! `--` starts a line comment (but `-->` is the rewrite arrow). Braces
//! mark erased premises; a `+` after a parenthesized binder marks the
//! synthesizing premise. Binders may not shadow variables in scope.

use std::fmt;

use crate::bidir::{DeclaredMode, ModedEntry, PremiseMode};
use crate::rewrite::{RewriteRule, RewriteSystem};
use crate::subst::identity_spine;
use crate::syntax::*;

// ---------------------------------------------------------------------
// Positions and diagnostics
// ---------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub struct Diag {
    pub pos: Option<Pos>,
    pub msg: String,
}

impl Diag {
    pub fn at(pos: Pos, msg: impl Into<String>) -> Self {
        Diag {
            pos: Some(pos),
            msg: msg.into(),
        }
    }
    pub fn bare(msg: impl Into<String>) -> Self {
        Diag {
            pos: None,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for Diag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{p}: {}", self.msg),
            None => write!(f, "{}", self.msg),
        }
    }
}

type PResult<T> = Result<T, Diag>;

// ---------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tk {
    Ident,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    ColonEq,
    Comma,
    Dot,
    Plus,
    Minus,
    Arrow,     // ->
    RuleArrow, // -->
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tk,
    text: String,
    pos: Pos,
}

fn lex(src: &str) -> PResult<Vec<Token>> {
    let mut toks = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }
    loop {
        let pos = Pos { line, col };
        let c = match chars.peek().copied() {
            None => break,
            Some(c) => c,
        };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' {
            // '-->' | '->' | '--' comment | '-'
            let rest: String = chars.clone().take(3).collect();
            if rest.starts_with("-->") {
                bump!();
                bump!();
                bump!();
                toks.push(Token {
                    kind: Tk::RuleArrow,
                    text: "-->".into(),
                    pos,
                });
            } else if rest.starts_with("->") {
                bump!();
                bump!();
                toks.push(Token {
                    kind: Tk::Arrow,
                    text: "->".into(),
                    pos,
                });
            } else if rest.starts_with("--") {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    bump!();
                }
            } else {
                bump!();
                toks.push(Token {
                    kind: Tk::Minus,
                    text: "-".into(),
                    pos,
                });
            }
            continue;
        }
        if c == ':' {
            bump!();
            if chars.peek() == Some(&'=') {
                bump!();
                toks.push(Token {
                    kind: Tk::ColonEq,
                    text: ":=".into(),
                    pos,
                });
            } else {
                toks.push(Token {
                    kind: Tk::Colon,
                    text: ":".into(),
                    pos,
                });
            }
            continue;
        }
        let simple = match c {
            '(' => Some(Tk::LParen),
            ')' => Some(Tk::RParen),
            '{' => Some(Tk::LBrace),
            '}' => Some(Tk::RBrace),
            '[' => Some(Tk::LBracket),
            ']' => Some(Tk::RBracket),
            ',' => Some(Tk::Comma),
            '.' => Some(Tk::Dot),
            '+' => Some(Tk::Plus),
            _ => None,
        };
        if let Some(kind) = simple {
            bump!();
            toks.push(Token {
                kind,
                text: c.to_string(),
                pos,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_alphanumeric() || c2 == '_' || c2 == '\'' {
                    text.push(c2);
                    bump!();
                } else {
                    break;
                }
            }
            toks.push(Token {
                kind: Tk::Ident,
                text,
                pos,
            });
            continue;
        }
        return Err(Diag::at(pos, format!("unexpected character `{c}`")));
    }
    toks.push(Token {
        kind: Tk::Eof,
        text: String::new(),
        pos: Pos { line, col },
    });
    Ok(toks)
}

// ---------------------------------------------------------------------
// Raw AST and parser
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RawTerm {
    pub head: String,
    pub args: Vec<RawArg>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct RawArg {
    pub binders: Vec<String>,
    pub body: RawTerm,
}

#[derive(Clone, Debug)]
struct RawArr {
    binders: Vec<(String, RawArr, Pos)>,
    head: String,
    args: Vec<RawArg>,
    pos: Pos,
}

#[derive(Clone, Debug)]
struct RawBinder {
    name: String,
    erased: bool,
    synth: bool,
    ty: RawArr,
    pos: Pos,
}

#[derive(Clone, Debug)]
enum RawResult {
    TypeKind,
    Type(RawArr),
}

#[derive(Clone, Debug)]
enum RawDecl {
    Symbol {
        name: String,
        mode: DeclaredMode,
        binders: Vec<RawBinder>,
        result: RawResult,
        pos: Pos,
    },
    Rule {
        vars: Vec<(String, Option<usize>, Pos)>,
        lhs: RawTerm,
        rhs: RawTerm,
        pos: Pos,
    },
    Def {
        name: String,
        ty: Option<RawArr>,
        body: RawTerm,
        pos: Pos,
    },
    Eval {
        term: RawTerm,
        pos: Pos,
    },
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }
    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }
    fn expect(&mut self, kind: Tk, what: &str) -> PResult<Token> {
        let t = self.next();
        if t.kind != kind {
            return Err(Diag::at(
                t.pos,
                format!("expected {what}, found `{}`", display_tok(&t)),
            ));
        }
        Ok(t)
    }
    fn expect_ident(&mut self, what: &str) -> PResult<Token> {
        self.expect(Tk::Ident, what)
    }

    fn parse_file(&mut self) -> PResult<Vec<RawDecl>> {
        let mut decls = Vec::new();
        while self.peek().kind != Tk::Eof {
            let t = self.next();
            if t.kind != Tk::Ident {
                return Err(Diag::at(
                    t.pos,
                    format!("expected a declaration, found `{}`", display_tok(&t)),
                ));
            }
            match t.text.as_str() {
                "symbol" => decls.push(self.parse_symbol(t.pos)?),
                "rule" => decls.push(self.parse_rule(t.pos)?),
                "def" => decls.push(self.parse_def(t.pos)?),
                "eval" => {
                    let term = self.parse_term()?;
                    decls.push(RawDecl::Eval { term, pos: t.pos });
                }
                other => {
                    return Err(Diag::at(
                        t.pos,
                        format!("expected `symbol`, `rule`, `def`, or `eval`, found `{other}`"),
                    ))
                }
            }
        }
        Ok(decls)
    }

    fn parse_symbol(&mut self, pos: Pos) -> PResult<RawDecl> {
        let name = self.expect_ident("a symbol name")?.text;
        let mode = match self.peek().kind {
            Tk::Plus => {
                self.next();
                DeclaredMode::Plus
            }
            Tk::Minus => {
                self.next();
                DeclaredMode::Minus
            }
            _ => DeclaredMode::Unmarked,
        };
        let mut binders = Vec::new();
        loop {
            match self.peek().kind {
                Tk::LParen => {
                    let bpos = self.next().pos;
                    let bname = self.expect_ident("a premise name")?.text;
                    self.expect(Tk::Colon, "`:`")?;
                    let ty = self.parse_arrtype()?;
                    self.expect(Tk::RParen, "`)`")?;
                    let synth = if self.peek().kind == Tk::Plus {
                        self.next();
                        true
                    } else {
                        if self.peek().kind == Tk::Minus {
                            self.next(); // explicit checked mark
                        }
                        false
                    };
                    binders.push(RawBinder {
                        name: bname,
                        erased: false,
                        synth,
                        ty,
                        pos: bpos,
                    });
                }
                Tk::LBrace => {
                    let bpos = self.next().pos;
                    let bname = self.expect_ident("a premise name")?.text;
                    self.expect(Tk::Colon, "`:`")?;
                    let ty = self.parse_arrtype()?;
                    self.expect(Tk::RBrace, "`}`")?;
                    binders.push(RawBinder {
                        name: bname,
                        erased: true,
                        synth: false,
                        ty,
                        pos: bpos,
                    });
                }
                _ => break,
            }
        }
        self.expect(Tk::Colon, "`:`")?;
        let rpos = self.peek().pos;
        let result = if self.peek().kind == Tk::Ident && self.peek().text == "Type" {
            self.next();
            RawResult::TypeKind
        } else {
            let head = self.expect_ident("a result type")?.text;
            let args = self.parse_opt_args()?;
            RawResult::Type(RawArr {
                binders: Vec::new(),
                head,
                args,
                pos: rpos,
            })
        };
        Ok(RawDecl::Symbol {
            name,
            mode,
            binders,
            result,
            pos,
        })
    }

    /// `("(" NAME ":" arrtype ")" "->")* NAME args?`
    fn parse_arrtype(&mut self) -> PResult<RawArr> {
        let pos = self.peek().pos;
        let mut binders = Vec::new();
        while self.peek().kind == Tk::LParen {
            let bpos = self.next().pos;
            let bname = self.expect_ident("a binder name")?.text;
            self.expect(Tk::Colon, "`:`")?;
            let ty = self.parse_arrtype()?;
            self.expect(Tk::RParen, "`)`")?;
            // The arrow is optional between consecutive binders but
            // required before the result: `(x : T) (y : S) -> R`.
            if self.peek().kind == Tk::Arrow {
                self.next();
            } else if self.peek().kind != Tk::LParen {
                return Err(Diag::at(self.peek().pos, "expected `->` or `(`".to_string()));
            }
            binders.push((bname, ty, bpos));
        }
        let head = self.expect_ident("a type name")?.text;
        let args = self.parse_opt_args()?;
        Ok(RawArr {
            binders,
            head,
            args,
            pos,
        })
    }

    fn parse_rule(&mut self, pos: Pos) -> PResult<RawDecl> {
        self.expect(Tk::LBracket, "`[`")?;
        let mut vars = Vec::new();
        if self.peek().kind != Tk::RBracket {
            loop {
                let v = self.expect_ident("a rule variable")?;
                let count = if self.peek().kind == Tk::Colon {
                    self.next();
                    self.expect(Tk::LParen, "`(`")?;
                    let mut n = 0usize;
                    while self.peek().kind == Tk::Ident {
                        self.next();
                        n += 1;
                    }
                    self.expect(Tk::RParen, "`)`")?;
                    Some(n)
                } else {
                    None
                };
                vars.push((v.text, count, v.pos));
                if self.peek().kind == Tk::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tk::RBracket, "`]`")?;
        let lhs = self.parse_term()?;
        self.expect(Tk::RuleArrow, "`-->`")?;
        let rhs = self.parse_term()?;
        Ok(RawDecl::Rule {
            vars,
            lhs,
            rhs,
            pos,
        })
    }

    fn parse_def(&mut self, pos: Pos) -> PResult<RawDecl> {
        let name = self.expect_ident("a definition name")?.text;
        let ty = if self.peek().kind == Tk::Colon {
            self.next();
            Some(self.parse_arrtype()?)
        } else {
            None
        };
        self.expect(Tk::ColonEq, "`:=`")?;
        let body = self.parse_term()?;
        Ok(RawDecl::Def {
            name,
            ty,
            body,
            pos,
        })
    }

    fn parse_term(&mut self) -> PResult<RawTerm> {
        let head = self.expect_ident("a term")?;
        let args = self.parse_opt_args()?;
        Ok(RawTerm {
            head: head.text,
            args,
            pos: head.pos,
        })
    }

    fn parse_opt_args(&mut self) -> PResult<Vec<RawArg>> {
        if self.peek().kind != Tk::LParen {
            return Ok(Vec::new());
        }
        self.next();
        let mut args = Vec::new();
        loop {
            args.push(self.parse_absterm()?);
            if self.peek().kind == Tk::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tk::RParen, "`)`")?;
        Ok(args)
    }

    /// `(NAME+ ".")? term`
    fn parse_absterm(&mut self) -> PResult<RawArg> {
        let mut names = Vec::new();
        let first = self.expect_ident("a term or binder")?;
        names.push(first.clone());
        while self.peek().kind == Tk::Ident {
            names.push(self.next());
        }
        if self.peek().kind == Tk::Dot {
            self.next();
            let body = self.parse_term()?;
            Ok(RawArg {
                binders: names.into_iter().map(|t| t.text).collect(),
                body,
            })
        } else {
            if names.len() > 1 {
                return Err(Diag::at(
                    names[1].pos,
                    "expected `.` after binder names or `(`/`,`/`)` after a term".to_string(),
                ));
            }
            let args = self.parse_opt_args()?;
            Ok(RawArg {
                binders: Vec::new(),
                body: RawTerm {
                    head: first.text,
                    args,
                    pos: first.pos,
                },
            })
        }
    }
}

fn display_tok(t: &Token) -> String {
    if t.kind == Tk::Eof {
        "<end of file>".into()
    } else {
        t.text.clone()
    }
}

// ---------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DefDecl {
    pub name: String,
    pub ty: Option<TypeExpr>,
    pub body: Term,
    pub pos: Pos,
    pub raw_body: RawTerm,
}

#[derive(Clone, Debug)]
pub struct EvalDecl {
    pub term: Term,
    pub pos: Pos,
    pub raw: RawTerm,
}

#[derive(Debug, Default)]
pub struct LoweredFile {
    pub entries: Vec<ModedEntry>,
    pub entry_pos: Vec<Pos>,
    pub rules: RewriteSystem,
    pub rule_pos: Vec<Pos>,
    pub defs: Vec<DefDecl>,
    pub evals: Vec<EvalDecl>,
}

struct FlexVar {
    name: String,
    declared_count: Option<usize>,
    pos: Pos,
    arity: Option<(Scope, Sort)>,
}

/// Name resolution and lowering context for one term.
struct TermCx<'a> {
    pre: &'a PreSignature,
    env: Vec<ScopeEntry>,
    flex: Vec<FlexVar>,
    /// In a rule lhs, flexible variables acquire their arity at first use
    /// and must be applied to the identity spine.
    assigning: bool,
}

impl<'a> TermCx<'a> {
    fn new(pre: &'a PreSignature) -> Self {
        TermCx {
            pre,
            env: Vec::new(),
            flex: Vec::new(),
            assigning: false,
        }
    }

    fn local(&self, name: &str) -> Option<usize> {
        self.env
            .iter()
            .rposition(|e| &*e.name == name)
            .map(|p| self.env.len() - 1 - p)
    }
    fn flex_slot(&self, name: &str) -> Option<usize> {
        self.flex.iter().position(|v| v.name == name)
    }
    fn in_scope(&self, name: &str) -> bool {
        self.local(name).is_some() || self.flex_slot(name).is_some()
    }

    fn lower_term(&mut self, raw: &RawTerm, expected: Option<&Sort>) -> PResult<Term> {
        if let Some(i) = self.local(&raw.head) {
            let entry = self.env[self.env.len() - 1 - i].clone();
            let spine = self.lower_args(&raw.args, &entry.binder, &raw.head, raw.pos)?;
            return Ok(Term::var(i, spine));
        }
        if let Some(k) = self.flex_slot(&raw.head) {
            return self.lower_flex(k, raw, expected);
        }
        match self.pre.lookup(&raw.head) {
            Some(e) => match &e.result {
                PreResult::Sort(_) => {
                    let binder = e.binder.clone();
                    let spine = self.lower_args(&raw.args, &binder, &raw.head, raw.pos)?;
                    Ok(Term::con(&raw.head, spine))
                }
                PreResult::TypeKind => Err(Diag::at(
                    raw.pos,
                    format!("type-level constant `{}` cannot appear in a term", raw.head),
                )),
            },
            None => Err(Diag::at(raw.pos, format!("unknown name `{}`", raw.head))),
        }
    }

    fn lower_flex(&mut self, k: usize, raw: &RawTerm, expected: Option<&Sort>) -> PResult<Term> {
        if self.flex[k].arity.is_none() {
            if !self.assigning {
                return Err(Diag::at(
                    raw.pos,
                    format!(
                        "rule variable `{}` does not occur in the left-hand side",
                        raw.head
                    ),
                ));
            }
            let sort = expected.ok_or_else(|| {
                Diag::at(
                    raw.pos,
                    format!("cannot determine the sort of rule variable `{}`", raw.head),
                )
            })?;
            if let Some(c) = self.flex[k].declared_count {
                if c != self.env.len() {
                    return Err(Diag::at(
                        raw.pos,
                        format!(
                            "rule variable `{}` is declared with {c} arguments but occurs under {} binders",
                            raw.head,
                            self.env.len()
                        ),
                    ));
                }
            }
            self.flex[k].arity = Some((Scope(self.env.clone()), sort.clone()));
        }
        let (scope, _) = self.flex[k].arity.clone().expect("just assigned");
        let spine = self.lower_args(&raw.args, &scope, &raw.head, raw.pos)?;
        if self.assigning && spine != identity_spine(&scope) {
            return Err(Diag::at(
                raw.pos,
                format!(
                    "in a left-hand side, rule variable `{}` must be applied to exactly the bound variables in scope",
                    raw.head
                ),
            ));
        }
        let index = self.env.len() + (self.flex.len() - 1 - k);
        Ok(Term::var(index, spine))
    }

    fn lower_args(
        &mut self,
        args: &[RawArg],
        binder: &Scope,
        head: &str,
        pos: Pos,
    ) -> PResult<Spine> {
        if args.len() != binder.len() {
            return Err(Diag::at(
                pos,
                format!(
                    "`{head}` expects {} arguments, got {}",
                    binder.len(),
                    args.len()
                ),
            ));
        }
        let mut items = Vec::with_capacity(args.len());
        for (arg, entry) in args.iter().zip(&binder.0) {
            if arg.binders.len() != entry.binder.len() {
                return Err(Diag::at(
                    arg.body.pos,
                    format!(
                        "argument `{}` of `{head}` expects {} binders, got {}",
                        entry.name,
                        entry.binder.len(),
                        arg.binders.len()
                    ),
                ));
            }
            let mut item_scope = Vec::with_capacity(entry.binder.len());
            for (bn, be) in arg.binders.iter().zip(&entry.binder.0) {
                if self.in_scope(bn) {
                    return Err(Diag::at(
                        arg.body.pos,
                        format!("binder `{bn}` shadows a variable in scope"),
                    ));
                }
                item_scope.push(ScopeEntry {
                    name: name(bn),
                    binder: be.binder.clone(),
                    sort: be.sort.clone(),
                });
            }
            let depth = self.env.len();
            self.env.extend(item_scope.iter().cloned());
            let body = self.lower_term(&arg.body, Some(&entry.sort));
            self.env.truncate(depth);
            items.push(SpineItem {
                binder: Scope(item_scope),
                body: body?,
            });
        }
        Ok(Spine(items))
    }

    fn lower_type(&mut self, head: &str, args: &[RawArg], pos: Pos) -> PResult<TypeExpr> {
        match self.pre.lookup(head) {
            Some(e) if e.result == PreResult::TypeKind => {
                let binder = e.binder.clone();
                let spine = self.lower_args(args, &binder, head, pos)?;
                Ok(TypeExpr {
                    head: name(head),
                    args: spine,
                })
            }
            Some(_) => Err(Diag::at(
                pos,
                format!("`{head}` is not a type-level constant"),
            )),
            None => Err(Diag::at(pos, format!("unknown type `{head}`"))),
        }
    }

    /// Lower an arrow type to a (context, result type) pair. Leaves the
    /// environment as it found it.
    fn lower_arr(&mut self, raw: &RawArr) -> PResult<(Context, TypeExpr)> {
        let start = self.env.len();
        let mut entries = Vec::new();
        let res = (|cx: &mut Self| {
            for (bn, bty, bpos) in &raw.binders {
                let (bctx, brty) = cx.lower_arr(bty)?;
                if cx.in_scope(bn) {
                    return Err(Diag::at(*bpos, format!("binder `{bn}` shadows a variable in scope")));
                }
                let entry = CtxEntry {
                    name: name(bn),
                    binder: bctx,
                    ty: brty,
                };
                cx.env.push(erase_ctx_entry(&entry));
                entries.push(entry);
            }
            cx.lower_type(&raw.head, &raw.args, raw.pos)
        })(self);
        self.env.truncate(start);
        Ok((Context(entries), res?))
    }
}

/// Parse and lower a whole theory file.
pub fn parse_theory(src: &str) -> PResult<LoweredFile> {
    let toks = lex(src)?;
    let decls = Parser { toks, at: 0 }.parse_file()?;
    let mut out = LoweredFile::default();
    let mut sig = Signature::default();
    let mut pre = PreSignature::default();
    for decl in decls {
        match decl {
            RawDecl::Symbol {
                name: sname,
                mode,
                binders,
                result,
                pos,
            } => {
                if sname == "Type" {
                    return Err(Diag::at(pos, "`Type` is reserved".to_string()));
                }
                if pre.lookup(&sname).is_some() {
                    return Err(Diag::at(pos, format!("duplicate symbol `{sname}`")));
                }
                let mut cx = TermCx::new(&pre);
                let mut premises = Vec::new();
                let mut modes = Vec::new();
                for b in &binders {
                    let (bctx, bty) = cx.lower_arr(&b.ty)?;
                    if cx.in_scope(&b.name) {
                        return Err(Diag::at(
                            b.pos,
                            format!("premise `{}` shadows a variable in scope", b.name),
                        ));
                    }
                    let entry = CtxEntry {
                        name: name(&b.name),
                        binder: bctx,
                        ty: bty,
                    };
                    cx.env.push(erase_ctx_entry(&entry));
                    premises.push(entry);
                    modes.push(if b.erased {
                        PremiseMode::Erased
                    } else if b.synth {
                        PremiseMode::Synth
                    } else {
                        PremiseMode::Checked
                    });
                }
                let result = match result {
                    RawResult::TypeKind => None,
                    RawResult::Type(r) => {
                        if !r.binders.is_empty() {
                            return Err(Diag::at(r.pos, "result types take no binders".to_string()));
                        }
                        Some(cx.lower_type(&r.head, &r.args, r.pos)?)
                    }
                };
                let entry = ModedEntry {
                    name: name(&sname),
                    premises: Context(premises),
                    modes,
                    declared: mode,
                    result,
                };
                let se = entry.sig_entry();
                pre.push(se.pre_entry())
                    .map_err(|e| Diag::at(pos, e.to_string()))?;
                sig.push(se).map_err(|e| Diag::at(pos, e.to_string()))?;
                out.entries.push(entry);
                out.entry_pos.push(pos);
            }
            RawDecl::Rule { vars, lhs, rhs, pos } => {
                let mut cx = TermCx::new(&pre);
                for (vn, count, vpos) in &vars {
                    if cx.flex_slot(vn).is_some() {
                        return Err(Diag::at(*vpos, format!("duplicate rule variable `{vn}`")));
                    }
                    cx.flex.push(FlexVar {
                        name: vn.clone(),
                        declared_count: *count,
                        pos: *vpos,
                        arity: None,
                    });
                }
                let sort = match pre.lookup(&lhs.head) {
                    Some(e) => match &e.result {
                        PreResult::Sort(s) => s.clone(),
                        PreResult::TypeKind => {
                            return Err(Diag::at(
                                lhs.pos,
                                "rules rewrite terms; the left-hand side head is type-level"
                                    .to_string(),
                            ))
                        }
                    },
                    None => {
                        return Err(Diag::at(
                            lhs.pos,
                            "rule left-hand side must be headed by a constant".to_string(),
                        ))
                    }
                };
                cx.assigning = true;
                let lhs_t = cx.lower_term(&lhs, None)?;
                cx.assigning = false;
                for v in &cx.flex {
                    if v.arity.is_none() {
                        return Err(Diag::at(
                            v.pos,
                            format!(
                                "rule variable `{}` does not occur in the left-hand side",
                                v.name
                            ),
                        ));
                    }
                }
                let rhs_t = cx.lower_term(&rhs, Some(&sort))?;
                let scope = Scope(
                    cx.flex
                        .iter()
                        .map(|v| {
                            let (binder, vsort) = v.arity.clone().expect("checked above");
                            ScopeEntry {
                                name: name(&v.name),
                                binder,
                                sort: vsort,
                            }
                        })
                        .collect(),
                );
                out.rules.push(RewriteRule {
                    scope,
                    sort,
                    lhs: lhs_t,
                    rhs: rhs_t,
                });
                out.rule_pos.push(pos);
            }
            RawDecl::Def {
                name: dname,
                ty,
                body,
                pos,
            } => {
                let mut cx = TermCx::new(&pre);
                let ty = match ty {
                    None => None,
                    Some(r) => {
                        if !r.binders.is_empty() {
                            return Err(Diag::at(
                                r.pos,
                                "definition types take no binders".to_string(),
                            ));
                        }
                        Some(cx.lower_type(&r.head, &r.args, r.pos)?)
                    }
                };
                let body_t = cx.lower_term(&body, None)?;
                out.defs.push(DefDecl {
                    name: dname,
                    ty,
                    body: body_t,
                    pos,
                    raw_body: body,
                });
            }
            RawDecl::Eval { term, pos } => {
                let mut cx = TermCx::new(&pre);
                let t = cx.lower_term(&term, None)?;
                out.evals.push(EvalDecl {
                    term: t,
                    pos,
                    raw: term,
                });
            }
        }
    }
    Ok(out)
}

/// Parse a standalone closed term against a pre-signature.
pub fn parse_term(src: &str, pre: &PreSignature) -> PResult<Term> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0 };
    let raw = p.parse_term()?;
    let t = p.expect(Tk::Eof, "end of input")?;
    let _ = t;
    TermCx::new(pre).lower_term(&raw, None)
}

// ---------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------

fn freshen(base: &str, used: &[String]) -> String {
    let base = if base.is_empty() { "x" } else { base };
    let mut cand = base.to_string();
    while used.iter().any(|u| u == &cand) {
        cand.push('\'');
    }
    cand
}

fn print_spine(s: &Spine, names: &mut Vec<String>, out: &mut String) {
    if s.is_empty() {
        return;
    }
    out.push('(');
    for (i, it) in s.0.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let depth = names.len();
        for (j, e) in it.binder.0.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let n = freshen(&e.name, names);
            out.push_str(&n);
            names.push(n);
        }
        if !it.binder.is_empty() {
            out.push_str(". ");
        }
        print_term_into(&it.body, names, out);
        names.truncate(depth);
    }
    out.push(')');
}

fn print_term_into(t: &Term, names: &mut Vec<String>, out: &mut String) {
    match t.head() {
        Head::Const(c) => out.push_str(c),
        Head::Var(i) => match names.len().checked_sub(i + 1) {
            Some(p) => out.push_str(&names[p].clone()),
            None => out.push_str(&format!("#{i}")),
        },
    }
    print_spine(t.args(), names, out);
}

pub fn print_term(t: &Term, names: &mut Vec<String>) -> String {
    let mut out = String::new();
    print_term_into(t, names, &mut out);
    out
}

pub fn print_type(ty: &TypeExpr, names: &mut Vec<String>) -> String {
    let mut out = String::new();
    out.push_str(&ty.head);
    print_spine(&ty.args, names, &mut out);
    out
}

/// Print with an empty name environment (out-of-scope variables appear as
/// `#i`). This is what `Debug` on core types uses.
pub fn print_closed<T: PrintCore + ?Sized>(x: &T) -> String {
    x.print_core(&mut Vec::new())
}

pub trait PrintCore {
    fn print_core(&self, names: &mut Vec<String>) -> String;
}

impl PrintCore for Term {
    fn print_core(&self, names: &mut Vec<String>) -> String {
        print_term(self, names)
    }
}

impl PrintCore for TypeExpr {
    fn print_core(&self, names: &mut Vec<String>) -> String {
        print_type(self, names)
    }
}

fn print_arity(binder: &Scope, result: &str, out: &mut String) {
    if binder.is_empty() {
        out.push_str(result);
        return;
    }
    for e in &binder.0 {
        out.push('(');
        out.push_str(&e.name);
        out.push_str(" :: ");
        print_arity(&e.binder, &e.sort.0, out);
        out.push_str(") ");
    }
    out.push_str("-> ");
    out.push_str(result);
}

/// Print a pre-signature, one constant per line:
/// `Tm :: (A :: Ty) -> Type`.
pub fn print_pre_signature(pre: &PreSignature) -> String {
    let mut out = String::new();
    for e in pre.entries() {
        out.push_str(&e.name);
        out.push_str(" :: ");
        let result = match &e.result {
            PreResult::Sort(s) => s.0.to_string(),
            PreResult::TypeKind => "Type".to_string(),
        };
        print_arity(&e.binder, &result, &mut out);
        out.push('\n');
    }
    out
}

/// Print a telescope's display names (used when printing open terms in
/// context).
pub fn context_names(entries: &[CtxEntry]) -> Vec<String> {
    let mut names = Vec::new();
    for e in entries {
        let n = freshen(&e.name, &names);
        names.push(n);
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    const MLTT: &str = include_str!("../../../theories/mltt.clf");

    fn pre_of(src: &str) -> PreSignature {
        let f = parse_theory(src).unwrap();
        let mut pre = PreSignature::default();
        for e in &f.entries {
            pre.push(e.sig_entry().pre_entry()).unwrap();
        }
        pre
    }

    #[test]
    fn pre_signature_prints_with_erased_premises_dropped() {
        let pre = pre_of(MLTT);
        let expected = "\
Ty :: Type
Tm :: (A :: Ty) -> Type
Pi :: (A :: Ty) (B :: (x :: Tm) -> Ty) -> Ty
Lam :: (t :: (x :: Tm) -> Tm) -> Tm
App :: (t :: Tm) (u :: Tm) -> Tm
";
        assert_eq!(print_pre_signature(&pre), expected);
    }

    #[test]
    fn printing_and_reparsing_a_term_is_the_identity() {
        let pre = pre_of(MLTT);
        let samples = [
            "Lam(x. x)",
            "Lam(x. Lam(y. App(x, y)))",
            "App(Lam(x. x), Lam(y. y))",
        ];
        for s in samples {
            let t = parse_term(s, &pre).unwrap();
            let printed = print_term(&t, &mut Vec::new());
            assert_eq!(parse_term(&printed, &pre).unwrap(), t, "via `{printed}`");
        }
    }

    #[test]
    fn printer_freshens_shadowed_binder_names() {
        // Two nested binders that both want to be called x.
        let t = Term::con(
            "Lam",
            Spine(vec![SpineItem {
                binder: Scope(vec![ScopeEntry::order0("x", Sort(name("Tm")))]),
                body: Term::con(
                    "Lam",
                    Spine(vec![SpineItem {
                        binder: Scope(vec![ScopeEntry::order0("x", Sort(name("Tm")))]),
                        body: Term::var(1, Spine(vec![])),
                    }]),
                ),
            }]),
        );
        assert_eq!(print_term(&t, &mut Vec::new()), "Lam(x. Lam(x'. x))");
    }

    #[test]
    fn comments_and_arrows_lex_apart() {
        let src = "
symbol N : Type        -- a comment ending in an arrow ->
symbol zero + : N
symbol f + (n : N) : N
rule [n] f(n) --> n    -- trailing comment
";
        let f = parse_theory(src).unwrap();
        assert_eq!(f.entries.len(), 3);
        assert_eq!(f.rules.rules().len(), 1);
    }

    #[test]
    fn rejects_ill_formed_declarations() {
        let base = "symbol N : Type\nsymbol zero + : N\nsymbol f + (n : N) : N\n";
        let cases: &[(&str, &str)] = &[
            ("symbol g + (n : N) (n : N) : N", "shadows"),
            ("def d := g(zero)", "unknown name"),
            ("rule [m, n] f(n) --> n", "does not occur in the left-hand side"),
            ("rule [n] f(zero) --> n", "does not occur in the left-hand side"),
            ("rule [n] zero --> zero", "does not occur"),
            ("symbol Type + : N", "reserved"),
            ("symbol h (x : N) :", "expected"),
            ("def d := f(zero, zero)", "expects 1 arguments"),
            ("rule [n] n --> zero", "headed by a constant"),
        ];
        for (decl, needle) in cases {
            let src = format!("{base}{decl}\n");
            let err = parse_theory(&src).expect_err(decl).to_string();
            assert!(
                err.contains(needle),
                "error for `{decl}` was `{err}`, expected `{needle}`"
            );
        }
    }

    #[test]
    fn declared_rule_variable_arities_are_enforced() {
        let src = "
symbol N : Type
symbol zero + : N
symbol g + (h : (x : N) -> N) : N
rule [h : (x y)] g(x. h(x)) --> zero
";
        let err = parse_theory(src).unwrap_err().to_string();
        assert!(err.contains("declared with 2 arguments"), "{err}");
    }
}
