"""OpenMP directive extraction, clause parsing, and normalization.

Directives are recognized textually as ``#pragma omp …`` lines (including
backslash continuations) and then clause-parsed with a hand-written grammar
covering the common OpenMP 5.x inventory, with an ``unknown`` fallback for
anything else.  Nesting depth is the brace depth of the pragma among code
tokens, which stands in for the depth of the pragma node in a concrete
syntax tree.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass

from .lexer import SourceUnit, Token, parse_source
from .loops import LoopContext, _match_delim, _statement_end, loop_contexts

# Directive keywords and the combinations they may extend.
DIRECTIVE_KINDS = frozenset(
    """
    parallel for sections section single master masked critical barrier
    taskwait taskyield taskgroup task taskloop atomic flush ordered simd
    teams distribute target declare threadprivate cancel cancellation scan
    loop tile unroll workshare
    """.split()
)

_SUCCESSORS: dict[str, frozenset[str]] = {
    "parallel": frozenset({"for", "sections", "master", "masked", "loop", "workshare"}),
    "for": frozenset({"simd"}),
    "master": frozenset({"taskloop"}),
    "masked": frozenset({"taskloop"}),
    "taskloop": frozenset({"simd"}),
    "target": frozenset({"teams", "parallel", "simd", "data", "update", "enter", "exit"}),
    "teams": frozenset({"distribute", "loop"}),
    "distribute": frozenset({"parallel", "simd"}),
    "declare": frozenset({"simd", "target", "reduction", "mapper", "variant"}),
    "cancellation": frozenset({"point"}),
}

# Clauses whose variable lists are unordered sets.
VAR_LIST_CLAUSES = frozenset(
    """
    private shared firstprivate lastprivate copyin copyprivate uniform
    allocate inclusive exclusive nontemporal
    """.split()
)

KNOWN_CLAUSE_KINDS = VAR_LIST_CLAUSES | frozenset(
    """
    reduction schedule collapse num_threads default nowait if final untied
    mergeable depend priority grainsize num_tasks safelen simdlen linear
    aligned map device proc_bind dist_schedule ordered read write update
    capture seq_cst acq_rel acquire release relaxed hint critical-name
    num_teams thread_limit in_reduction task_reduction order bind filter
    """.split()
)

COLLAPSE_NOT_APPLICABLE = "not_applicable"
COLLAPSE_VALID = "collapse_valid"
COLLAPSE_INVALID = "collapse_invalid"

ATTACHED_FOR_LOOP = "for_loop"
ATTACHED_BLOCK = "block"
ATTACHED_STATEMENT = "statement"
ATTACHED_NONE = "none"


@dataclass(frozen=True)
class Clause:
    """One clause instance on a directive."""

    kind: str
    raw_text: str
    args_ordered: tuple[str, ...] = ()
    variables: frozenset[str] = frozenset()
    reduction_op: str | None = None
    collapse_n: int | None = None
    schedule_kind: str | None = None


@dataclass(frozen=True)
class Directive:
    """One parsed `#pragma omp` line with its structural context."""

    kinds: tuple[str, ...]
    clauses: tuple[Clause, ...]
    byte_offset: int
    line: int
    ast_depth: int
    attached_kind: str
    attached_loop: LoopContext | None
    collapse_tag: str
    raw_text: str
    degraded: bool = False

    def clause_of(self, kind: str) -> Clause | None:
        for c in self.clauses:
            if c.kind == kind:
                return c
        return None


@dataclass(frozen=True)
class NormalizedDirective:
    """Canonical form of a directive used by the scoring components."""

    kinds: tuple[str, ...]
    canonical: str
    components: frozenset[str]
    implicit_private: frozenset[str]
    ast_depth: int
    collapse_tag: str
    attached_kind: str
    loop_index: int | None
    directive: Directive

    @property
    def ordering_signature(self) -> str:
        parts = [" ".join(self.kinds)]
        parts.extend(sorted(self.components - self.implicit_private))
        return " ".join(parts)


def _split_top_level(tokens: list[Token], sep: str) -> list[list[Token]]:
    groups: list[list[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.kind == "punctuation":
            if tok.lexeme in "([{":
                depth += 1
            elif tok.lexeme in ")]}":
                depth -= 1
            elif tok.lexeme == sep and depth == 0:
                groups.append([])
                continue
        groups[-1].append(tok)
    return groups


def _text_of(tokens: list[Token]) -> str:
    return " ".join(t.lexeme for t in tokens)


def _idents_of(tokens: list[Token]) -> list[str]:
    """Base identifiers of a variable list, ignoring array sections."""
    names: list[str] = []
    depth = 0
    prev_was_name = False
    for tok in tokens:
        if tok.kind == "punctuation":
            if tok.lexeme in "([{":
                depth += 1
            elif tok.lexeme in ")]}":
                depth -= 1
            prev_was_name = False
            continue
        if depth == 0 and tok.kind in ("identifier", "keyword") and not prev_was_name:
            names.append(tok.lexeme)
            prev_was_name = True
        else:
            prev_was_name = tok.kind in ("identifier", "keyword")
    return names


def _parse_clause(word: str, arg_tokens: list[Token] | None, raw: str) -> tuple[Clause, bool]:
    """Build one clause; returns (clause, degraded)."""
    degraded = False
    kind = word if word in KNOWN_CLAUSE_KINDS else "unknown"
    args: tuple[str, ...] = ()
    variables: frozenset[str] = frozenset()
    reduction_op = None
    collapse_n = None
    schedule_kind = None

    if arg_tokens is not None:
        groups = _split_top_level(arg_tokens, ",")
        args = tuple(_text_of(g) for g in groups if g)

    if word == "reduction" and arg_tokens is not None:
        halves = _split_top_level(arg_tokens, ":")
        if len(halves) >= 2:
            reduction_op = _text_of(halves[0]).replace(" ", "")
            var_tokens = [t for h in halves[1:] for t in h]
            names = _idents_of(var_tokens)
            variables = frozenset(names)
            args = (reduction_op, *names)
        if reduction_op is None or not variables:
            kind = "unknown"
            degraded = True
    elif word == "collapse" and arg_tokens is not None:
        text = _text_of(arg_tokens).strip()
        if text.isdigit() and int(text) >= 1:
            collapse_n = int(text)
            args = (text,)
        else:
            degraded = True
    elif word == "schedule" and arg_tokens is not None:
        if args:
            schedule_kind = args[0].replace(" ", "")
    elif word in VAR_LIST_CLAUSES and arg_tokens is not None:
        variables = frozenset(_idents_of(arg_tokens))
    elif arg_tokens is not None:
        variables = frozenset(_idents_of(arg_tokens))

    return (
        Clause(
            kind=kind,
            raw_text=raw,
            args_ordered=args,
            variables=variables,
            reduction_op=reduction_op,
            collapse_n=collapse_n,
            schedule_kind=schedule_kind,
        ),
        degraded,
    )


def _parse_directive_body(tokens: list[Token]) -> tuple[tuple[str, ...], tuple[Clause, ...], bool]:
    """Parse the tokens after `omp` into directive kinds and clauses."""
    words = tokens
    kinds: list[str] = []
    clauses: list[Clause] = []
    degraded = False
    i = 0

    while i < len(words):
        tok = words[i]
        if tok.kind not in ("identifier", "keyword"):
            break
        word = tok.lexeme
        if not kinds:
            if word in DIRECTIVE_KINDS:
                kinds.append(word)
                i += 1
                continue
            kinds.append(word)
            degraded = True
            i += 1
            break
        nxt = words[i + 1] if i + 1 < len(words) else None
        followed_by_paren = nxt is not None and nxt.lexeme == "("
        if word in _SUCCESSORS.get(kinds[-1], frozenset()) and not followed_by_paren:
            kinds.append(word)
            i += 1
            continue
        break

    # `critical(name)` carries its name as a pseudo-clause
    if kinds == ["critical"] and i < len(words) and words[i].lexeme == "(":
        close = _match_delim(words, i)
        if close is not None:
            inner = words[i + 1 : close]
            name = _text_of(inner).replace(" ", "")
            clauses.append(
                Clause(
                    kind="critical-name",
                    raw_text=f"critical({name})",
                    args_ordered=(name,),
                    variables=frozenset(_idents_of(inner)),
                )
            )
            i = close + 1
        else:
            degraded = True
            i = len(words)

    while i < len(words):
        tok = words[i]
        if tok.kind == "punctuation" and tok.lexeme == ",":
            i += 1
            continue
        if tok.kind not in ("identifier", "keyword"):
            degraded = True
            i += 1
            continue
        word = tok.lexeme
        arg_tokens: list[Token] | None = None
        j = i + 1
        raw_end = tok.end_offset
        if j < len(words) and words[j].lexeme == "(":
            close = _match_delim(words, j)
            if close is None:
                degraded = True
                arg_tokens = [t for t in words[j + 1 :] if t.kind != "whitespace"]
                j = len(words)
            else:
                arg_tokens = [
                    t for t in words[j + 1 : close] if t.kind != "whitespace"
                ]
                j = close + 1
        raw = word if arg_tokens is None else f"{word}({_text_of(arg_tokens)})"
        clause, bad = _parse_clause(word, arg_tokens, raw)
        degraded = degraded or bad
        clauses.append(clause)
        i = j

    return tuple(kinds), tuple(clauses), degraded


def _directive_line_spans(unit: SourceUnit, case_sensitive: bool = True) -> list[tuple[int, int]]:
    """Token index spans [start, end) of each `#pragma omp` logical line."""
    spans: list[tuple[int, int]] = []
    tokens = unit.tokens
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok.kind == "preprocessor" and re.sub(r"[#\s]", "", tok.lexeme) == "pragma":
            j = i + 1
            while j < n and tokens[j].kind in ("whitespace", "comment") and tokens[j].in_directive:
                j += 1
            marker = tokens[j].lexeme if j < n else ""
            if not case_sensitive:
                marker = marker.lower()
            if j < n and tokens[j].in_directive and marker == "omp":
                end = j
                while end < n and tokens[end].in_directive:
                    end += 1
                spans.append((i, end))
                i = end
                continue
        i += 1
    return spans


def _brace_depths(unit: SourceUnit) -> list[int]:
    """Brace nesting depth at each token position (before the token)."""
    depths = []
    depth = 0
    for tok in unit.tokens:
        depths.append(depth)
        if tok.kind == "punctuation" and not tok.in_directive:
            if tok.lexeme == "{":
                depth += 1
            elif tok.lexeme == "}":
                depth = max(0, depth - 1)
    return depths


def collapse_validity(directive: Directive, attached_loop: LoopContext | None) -> str:
    """Classify a directive's collapse clause against the real loop nest."""
    clause = directive.clause_of("collapse")
    if clause is None:
        return COLLAPSE_NOT_APPLICABLE
    if attached_loop is None or directive.attached_kind != ATTACHED_FOR_LOOP:
        return COLLAPSE_INVALID
    if clause.collapse_n is None:
        return COLLAPSE_INVALID
    if clause.collapse_n <= attached_loop.nesting_depth:
        return COLLAPSE_VALID
    return COLLAPSE_INVALID


def extract_directives(unit: SourceUnit, case_sensitive: bool = True) -> list[Directive]:
    """All OpenMP directives of ``unit`` in source order.

    Each directive carries its brace-nesting depth, the construct it is
    attached to, and a collapse validity tag.  Malformed clause syntax is
    parsed best-effort and flagged on the directive rather than raised.
    """
    tokens = unit.tokens
    loops = loop_contexts(unit)
    loops_by_offset = {lp.byte_offset: lp for lp in loops}
    depths = _brace_depths(unit)
    spans = _directive_line_spans(unit, case_sensitive)
    span_starts = {s for s, _ in spans}

    directives: list[Directive] = []
    for start, end in spans:
        pragma_tok = tokens[start]
        body = [
            t
            for t in tokens[start + 1 : end]
            if t.kind not in ("whitespace", "comment")
        ]
        # body[0] is the `omp` marker
        kinds, clauses, degraded = _parse_directive_body(body[1:])
        if not kinds:
            kinds = ("unknown",)
            degraded = True

        # attachment: next code token after this (and any stacked) pragma line
        k = end
        while k < len(tokens):
            tok = tokens[k]
            if tok.kind in ("whitespace", "comment"):
                k += 1
                continue
            if tok.kind == "preprocessor" and k in span_starts:
                while k < len(tokens) and tokens[k].in_directive:
                    k += 1
                continue
            break
        if k >= len(tokens):
            attached_kind = ATTACHED_NONE
            attached_loop = None
        else:
            tok = tokens[k]
            if tok.kind == "keyword" and tok.lexeme == "for":
                attached_kind = ATTACHED_FOR_LOOP
                attached_loop = loops_by_offset.get(tok.byte_offset)
                if attached_loop is None:
                    attached_kind = ATTACHED_STATEMENT
            elif tok.kind == "punctuation" and tok.lexeme == "{":
                attached_kind = ATTACHED_BLOCK
                attached_loop = None
            elif tok.kind == "punctuation" and tok.lexeme == "}":
                attached_kind = ATTACHED_NONE
                attached_loop = None
            else:
                attached_kind = ATTACHED_STATEMENT
                attached_loop = None

        raw_text = unit.text[pragma_tok.byte_offset : tokens[end - 1].end_offset]
        d = Directive(
            kinds=kinds,
            clauses=clauses,
            byte_offset=pragma_tok.byte_offset,
            line=pragma_tok.line,
            ast_depth=depths[start],
            attached_kind=attached_kind,
            attached_loop=attached_loop,
            collapse_tag=COLLAPSE_NOT_APPLICABLE,
            raw_text=raw_text,
            degraded=degraded,
        )
        d = dataclasses.replace(d, collapse_tag=collapse_validity(d, attached_loop))
        directives.append(d)
    return directives


def canonical_clause(clause: Clause) -> str | None:
    """Canonical component string for a clause; None for excluded clauses.

    `num_threads` is hardware-dependent and never enters the component set.
    """
    kind = clause.kind
    if kind == "num_threads":
        return None
    if kind in VAR_LIST_CLAUSES:
        return f"{kind}({','.join(sorted(clause.variables))})"
    if kind == "reduction":
        op = clause.reduction_op or ""
        ordered_vars = clause.args_ordered[1:] if clause.args_ordered else ()
        return f"reduction({op}:{','.join(ordered_vars)})"
    if kind == "schedule":
        return f"schedule({','.join(a.replace(' ', '') for a in clause.args_ordered)})"
    if kind == "collapse":
        return f"collapse({clause.collapse_n if clause.collapse_n else ','.join(clause.args_ordered)})"
    if kind == "critical-name":
        return f"critical-name({clause.args_ordered[0] if clause.args_ordered else ''})"
    if kind == "unknown":
        return re.sub(r"\s+", " ", clause.raw_text.strip())
    if clause.args_ordered:
        return f"{kind}({','.join(a.replace(' ', '') for a in clause.args_ordered)})"
    return kind


def normalize_directive(
    directive: Directive,
    induction_vars: frozenset[str] = frozenset(),
) -> NormalizedDirective:
    """Canonicalize a directive for component-level comparison.

    Variable lists of unordered clauses are sorted, reduction and schedule
    argument order is preserved, and `num_threads` is dropped.  A private
    clause whose variables are all ``induction_vars`` (the counters of the
    attached loop nest) is marked implicitly satisfiable: a worksharing loop
    makes those counters private whether or not the clause is spelled out.
    The mark is applied on both sides of a comparison; only the coverage
    score's forgiveness policy is reference-side specific.
    """
    components: list[str] = []
    implicit: set[str] = set()
    for clause in directive.clauses:
        comp = canonical_clause(clause)
        if comp is None:
            continue
        components.append(comp)
        if (
            clause.kind == "private"
            and clause.variables
            and clause.variables <= induction_vars
        ):
            implicit.add(comp)

    canonical = " ".join([" ".join(directive.kinds)] + sorted(components))
    return NormalizedDirective(
        kinds=directive.kinds,
        canonical=canonical,
        components=frozenset(components),
        implicit_private=frozenset(implicit),
        ast_depth=directive.ast_depth,
        collapse_tag=directive.collapse_tag,
        attached_kind=directive.attached_kind,
        loop_index=directive.attached_loop.loop_index if directive.attached_loop else None,
        directive=directive,
    )


def attached_construct_span(unit: SourceUnit, directive: Directive) -> tuple[int, int] | None:
    """Byte span of the construct a directive governs, if parsable."""
    if directive.attached_kind == ATTACHED_FOR_LOOP and directive.attached_loop is not None:
        return (directive.attached_loop.byte_offset, directive.attached_loop.end_offset)
    if directive.attached_kind not in (ATTACHED_BLOCK, ATTACHED_STATEMENT):
        return None
    tokens = unit.tokens
    idx = next(
        (
            i
            for i, t in enumerate(tokens)
            if t.byte_offset >= directive.byte_offset + len(directive.raw_text)
            and t.kind not in ("whitespace", "comment")
            and not t.in_directive
        ),
        None,
    )
    if idx is None:
        return None
    if tokens[idx].kind == "punctuation" and tokens[idx].lexeme == "{":
        close = _match_delim(tokens, idx)
        if close is None:
            return None
        return (tokens[idx].byte_offset, tokens[close].end_offset)
    end = _statement_end(tokens, idx)
    if end is None:
        return None
    return (tokens[idx].byte_offset, tokens[end].end_offset)


def strip_openmp(unit: SourceUnit) -> SourceUnit:
    """Remove every OpenMP pragma line; all other bytes are unchanged.

    Whole physical lines are removed, including backslash continuations.
    Idempotent: stripping a stripped unit is the identity.
    """
    spans = _directive_line_spans(unit)
    if not spans:
        return unit
    text = unit.text
    cut_ranges: list[tuple[int, int]] = []
    for start, end in spans:
        first = unit.tokens[start]
        last = unit.tokens[end - 1]
        line_start = text.rfind("\n", 0, first.byte_offset) + 1
        line_end = text.find("\n", last.end_offset)
        line_end = len(text) if line_end == -1 else line_end + 1
        cut_ranges.append((line_start, line_end))

    pieces: list[str] = []
    pos = 0
    for lo, hi in cut_ranges:
        pieces.append(text[pos:lo])
        pos = max(pos, hi)
    pieces.append(text[pos:])
    return parse_source("".join(pieces))
