"""For-loop discovery: contexts, ordinals, perfect-nest depth, counters.

Loops are found by scanning the token stream for `for` keywords outside
preprocessor lines, comments, and strings.  Each loop records the ordinal
of its `for` keyword among all loops in the unit (source order, nested
loops included) and the number of perfectly nested loops rooted at it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexer import SourceUnit, Token

_OPEN = {"(": ")", "[": "]", "{": "}"}


@dataclass(frozen=True)
class LoopContext:
    """The immediate extent of one for-loop: header plus body."""

    context_text: str
    loop_index: int
    nesting_depth: int
    byte_offset: int
    end_offset: int
    induction_vars: frozenset[str]
    nest_induction_vars: frozenset[str]


def _match_delim(tokens: tuple[Token, ...] | list[Token], start: int) -> int | None:
    """Index of the token closing the delimiter opened at ``start``."""
    opener = tokens[start].lexeme
    closer = _OPEN[opener]
    depth = 0
    for i in range(start, len(tokens)):
        tok = tokens[i]
        if tok.kind != "punctuation":
            continue
        if tok.lexeme == opener:
            depth += 1
        elif tok.lexeme == closer:
            depth -= 1
            if depth == 0:
                return i
    return None


def _statement_end(tokens: tuple[Token, ...] | list[Token], start: int) -> int | None:
    """Index of the token terminating the single statement at ``start``.

    Returns the index of the closing `;`, or of an unbalanced `}` when the
    statement is cut short by the enclosing block.
    """
    depth = 0
    for i in range(start, len(tokens)):
        tok = tokens[i]
        if tok.kind != "punctuation":
            continue
        if tok.lexeme in "([{":
            depth += 1
        elif tok.lexeme in ")]}":
            if depth == 0:
                return i
            depth -= 1
        elif tok.lexeme == ";" and depth == 0:
            return i
    return None


def _induction_vars(header_tokens: list[Token]) -> frozenset[str]:
    """Counters declared or assigned in a for-loop init clause.

    Handles `int i = 0`, `i = 0`, multi-declarations, and range-for
    (`auto x : v`).  Best effort: unparseable headers yield an empty set.
    """
    init: list[Token] = []
    depth = 0
    saw_semicolon = False
    for tok in header_tokens:
        if tok.kind == "punctuation":
            if tok.lexeme in "([{":
                depth += 1
            elif tok.lexeme in ")]}":
                depth -= 1
            elif tok.lexeme == ";" and depth == 0:
                saw_semicolon = True
                break
        init.append(tok)

    if not saw_semicolon:
        # range-based for: `for (decl : range)` declares one name
        decl: list[Token] = []
        for tok in header_tokens:
            if tok.kind == "punctuation" and tok.lexeme == ":":
                break
            decl.append(tok)
        names = [t.lexeme for t in decl if t.kind == "identifier"]
        return frozenset(names[-1:])

    groups: list[list[Token]] = [[]]
    depth = 0
    for tok in init:
        if tok.kind == "punctuation":
            if tok.lexeme in "([{":
                depth += 1
            elif tok.lexeme in ")]}":
                depth -= 1
            elif tok.lexeme == "," and depth == 0:
                groups.append([])
                continue
        groups[-1].append(tok)

    found: set[str] = set()
    for group in groups:
        target: str | None = None
        for j, tok in enumerate(group):
            if tok.kind == "punctuation" and tok.lexeme == "=":
                for back in range(j - 1, -1, -1):
                    if group[back].kind == "identifier":
                        target = group[back].lexeme
                        break
                break
        if target is None:
            idents = [t.lexeme for t in group if t.kind == "identifier"]
            target = idents[-1] if idents else None
        if target:
            found.add(target)
    return frozenset(found)


def _is_declaration_of(tokens: list[Token], names: frozenset[str]) -> bool:
    """True if ``tokens`` form declaration statements of only ``names``."""
    if not tokens:
        return True
    stmts: list[list[Token]] = [[]]
    for tok in tokens:
        stmts[-1].append(tok)
        if tok.kind == "punctuation" and tok.lexeme == ";":
            stmts.append([])
    if stmts[-1]:
        return False
    for stmt in stmts[:-1]:
        declared = _induction_vars(stmt)
        if not declared or not declared <= names:
            return False
    return True


def loop_contexts(unit: SourceUnit) -> list[LoopContext]:
    """All for-loops in source order, indexed from 0."""
    tokens = unit.tokens
    raw: list[dict] = []

    for idx, tok in enumerate(tokens):
        if tok.kind != "keyword" or tok.lexeme != "for" or tok.in_directive:
            continue
        j = idx + 1
        while j < len(tokens) and tokens[j].kind in ("whitespace", "comment"):
            j += 1
        if j >= len(tokens) or tokens[j].lexeme != "(":
            continue
        close = _match_delim(tokens, j)
        if close is None:
            continue
        header = [
            t for t in tokens[j + 1 : close] if t.kind not in ("whitespace", "comment")
        ]
        k = close + 1
        while k < len(tokens) and (
            tokens[k].kind in ("whitespace", "comment") or tokens[k].in_directive
        ):
            k += 1
        if k >= len(tokens):
            end_tok = close
            body_span = (close + 1, close + 1)
        elif tokens[k].kind == "punctuation" and tokens[k].lexeme == "{":
            end = _match_delim(tokens, k)
            end_tok = end if end is not None else len(tokens) - 1
            body_span = (k + 1, end_tok)
        else:
            end = _statement_end(tokens, k)
            end_tok = end if end is not None else len(tokens) - 1
            body_span = (k, end_tok + 1)
        raw.append(
            {
                "for_index": idx,
                "start": tok.byte_offset,
                "end": tokens[end_tok].end_offset,
                "body_span": body_span,
                "induction": _induction_vars(header),
            }
        )

    # Perfect nesting: the child is the first loop in the body, preceded only
    # by declarations of its own counters and followed by nothing else.
    n = len(raw)
    depth = [1] * n
    nest_vars: list[frozenset[str]] = [info["induction"] for info in raw]
    for i in range(n - 1, -1, -1):
        body_start, body_end = raw[i]["body_span"]
        child = None
        for j in range(i + 1, n):
            if body_start <= raw[j]["for_index"] < body_end:
                child = j
                break
        if child is None:
            continue
        pre = [
            t
            for t in tokens[body_start : raw[child]["for_index"]]
            if t.kind not in ("whitespace", "comment") and not t.in_directive
        ]
        child_end_offset = raw[child]["end"]
        post = [
            t
            for t in tokens[body_start:body_end]
            if t.byte_offset >= child_end_offset
            and t.kind not in ("whitespace", "comment")
            and not t.in_directive
        ]
        if post:
            continue
        if _is_declaration_of(pre, raw[child]["induction"]):
            depth[i] = 1 + depth[child]
            nest_vars[i] = nest_vars[i] | nest_vars[child]

    return [
        LoopContext(
            context_text=unit.text[info["start"] : info["end"]],
            loop_index=i,
            nesting_depth=depth[i],
            byte_offset=info["start"],
            end_offset=info["end"],
            induction_vars=info["induction"],
            nest_induction_vars=nest_vars[i],
        )
        for i, info in enumerate(raw)
    ]
