"""The eight sub-scores and their weighted composite.

Every sub-score lives in [0, 1]; the composite is reported on a 0-100
scale.  All comparisons are anchored on the reference (ground-truth) side:
missing material lowers the clause and coverage scores, surplus material
is penalized by the coverage term only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import zip_longest
from typing import TYPE_CHECKING

from .compile_check import CompileConfig, compile_score
from .similarity import BagOfTokensBackend, SimilarityBackend, lcs_ratio, lev_similarity
from .syntax import (
    ATTACHED_FOR_LOOP,
    Directive,
    NormalizedDirective,
    RegionBlock,
    SourceUnit,
    normalize_directive,
    parse_source,
    strip_openmp,
)
from .syntax.directives import attached_construct_span, extract_directives
from .syntax.regions import parallel_region_blocks

if TYPE_CHECKING:
    from .config import EvalConfig


@dataclass(frozen=True)
class ClauseWeightTable:
    """Per-clause-kind importance weights for the clause score.

    Reduction defaults to 5: omitting it typically races the result,
    so its absence must dominate the clause term.
    """

    weights: dict[str, float] = field(default_factory=lambda: {"reduction": 5.0})
    default_weight: float = 1.0

    def __post_init__(self) -> None:
        for kind, w in self.weights.items():
            if w <= 0:
                raise ValueError(f"clause weight for {kind!r} must be > 0, got {w}")
        if self.default_weight <= 0:
            raise ValueError("default clause weight must be > 0")

    def weight_of(self, component: str) -> float:
        kind = component.split("(", 1)[0].strip()
        return self.weights.get(kind, self.default_weight)


@dataclass(frozen=True)
class MetricWeights:
    """Composite weights; they must sum to exactly 1."""

    wc: float = 0.3
    vu: float = 0.05
    is_: float = 0.10
    or_: float = 0.05
    rc: float = 0.05
    cc: float = 0.05
    pl: float = 0.2
    compile_: float = 0.2
    is_blend_alpha: float = 0.7

    def __post_init__(self) -> None:
        values = self.as_tuple()
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"composite weights must lie in [0,1], got {v}")
        total = math.fsum(values)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(
                f"composite weights must sum to 1, got {total!r}; "
                "weights are never renormalized silently"
            )
        if not 0.0 <= self.is_blend_alpha <= 1.0:
            raise ValueError("is_blend_alpha must lie in [0,1]")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.wc, self.vu, self.is_, self.or_, self.rc, self.cc, self.pl, self.compile_)


@dataclass
class ScoreBreakdown:
    """Sub-scores in [0,1], composite in [0,100], and explanations."""

    wc: float
    vu: float
    is_: float
    or_: float
    rc: float
    cc: float
    pl: float
    compile_: float
    composite: float
    diagnostics: dict[str, list[str]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "wc": self.wc,
            "vu": self.vu,
            "is": self.is_,
            "or": self.or_,
            "rc": self.rc,
            "cc": self.cc,
            "pl": self.pl,
            "compile": self.compile_,
            "composite": self.composite,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class SideAnalysis:
    """Everything the sub-scores need from one side of a pair."""

    unit: SourceUnit
    directives: tuple[Directive, ...]
    normalized: tuple[NormalizedDirective, ...]
    regions: tuple[RegionBlock, ...]
    region_diagnostics: tuple[str, ...]


def analyze(source: str) -> SideAnalysis:
    """Parse one source into the artifacts the sub-scores consume."""
    unit = parse_source(source)
    directives = extract_directives(unit)
    normalized = []
    for d in directives:
        ivs = (
            d.attached_loop.nest_induction_vars
            if d.attached_kind == ATTACHED_FOR_LOOP and d.attached_loop is not None
            else frozenset()
        )
        normalized.append(normalize_directive(d, induction_vars=ivs))
    regions, region_diags = parallel_region_blocks(unit, directives)
    return SideAnalysis(
        unit=unit,
        directives=tuple(directives),
        normalized=tuple(normalized),
        regions=tuple(regions),
        region_diagnostics=tuple(region_diags),
    )


def _all_components(normalized: tuple[NormalizedDirective, ...]) -> frozenset[str]:
    out: set[str] = set()
    for nd in normalized:
        out |= nd.components
    return frozenset(out)


def weighted_clause_score(
    gt: tuple[NormalizedDirective, ...],
    gen: tuple[NormalizedDirective, ...],
    table: ClauseWeightTable,
    diagnostics: list[str] | None = None,
) -> float:
    """Weighted overlap of reference clause components found in the candidate.

    Anchored on the reference: a reference with no clause components scores
    1.0 regardless of the candidate (extras are the coverage score's job).
    """
    gt_comps = _all_components(gt)
    if not gt_comps:
        return 1.0
    gen_comps = _all_components(gen)
    matched = gt_comps & gen_comps
    missing = gt_comps - gen_comps
    if missing and diagnostics is not None:
        diagnostics.append("missing clauses: " + ", ".join(sorted(missing)))
    total = sum(table.weight_of(c) for c in gt_comps)
    hit = sum(table.weight_of(c) for c in matched)
    return hit / total


_NAMED_SHARING_TYPES = ("shared", "private", "reduction", "firstprivate", "lastprivate")


def _variable_sets(directives: tuple[Directive, ...]) -> dict[str, frozenset[str]]:
    """Union of per-clause-type argument sets across all directives."""
    out: dict[str, set[str]] = {}
    for d in directives:
        for clause in d.clauses:
            if clause.kind == "num_threads":
                continue  # hardware-dependent, never compared
            values = clause.variables or frozenset(clause.args_ordered)
            if not values:
                continue
            out.setdefault(clause.kind, set()).update(values)
    return {k: frozenset(v) for k, v in out.items()}


def variable_usage_score(
    gt: tuple[Directive, ...],
    gen: tuple[Directive, ...],
    diagnostics: list[str] | None = None,
) -> float:
    """Mean Jaccard index of per-clause-type variable sets.

    The type universe is the five data-sharing clause types plus every other
    argument-bearing clause type present on either side; two empty sets
    count as a perfect match for their type.
    """
    gt_sets = _variable_sets(gt)
    gen_sets = _variable_sets(gen)
    universe = set(_NAMED_SHARING_TYPES) | set(gt_sets) | set(gen_sets)
    total = 0.0
    for t in sorted(universe):
        a = gt_sets.get(t, frozenset())
        b = gen_sets.get(t, frozenset())
        if not a and not b:
            jaccard = 1.0
        else:
            jaccard = len(a & b) / len(a | b)
            if jaccard < 1.0 and diagnostics is not None:
                diagnostics.append(
                    f"{t}: reference vars {sorted(a)} vs generated {sorted(b)}"
                )
        total += jaccard
    return total / len(universe)


def _directive_strings(normalized: tuple[NormalizedDirective, ...]) -> str:
    return "\n".join(nd.canonical for nd in normalized)


def integrated_semantic_score(
    gt_code: str,
    gen_code: str,
    backend: SimilarityBackend | None = None,
    is_blend_alpha: float = 0.7,
) -> float:
    """Blend of embedding similarity of whole codes and edit similarity of
    their concatenated normalized directive strings."""
    if backend is None:
        backend = BagOfTokensBackend()
    gt_norm = analyze(gt_code).normalized
    gen_norm = analyze(gen_code).normalized
    s_lev = lev_similarity(_directive_strings(gt_norm), _directive_strings(gen_norm))
    s_emb = backend.similarity(gt_code, gen_code)
    return is_blend_alpha * s_emb + (1.0 - is_blend_alpha) * s_lev


def ordering_score(
    gt: tuple[NormalizedDirective, ...],
    gen: tuple[NormalizedDirective, ...],
    diagnostics: list[str] | None = None,
) -> float:
    """Common-subsequence ratio over directive order, depth, and validity.

    Each directive contributes an element of (ordering signature, nesting
    depth, collapse tag, attached construct); implicitly satisfied private
    clauses are invisible to the signature on both sides.
    """

    def elements(side: tuple[NormalizedDirective, ...]) -> list[tuple]:
        return [
            (nd.ordering_signature, nd.ast_depth, nd.collapse_tag, nd.attached_kind)
            for nd in side
        ]

    gt_elems = elements(gt)
    gen_elems = elements(gen)
    score = lcs_ratio(gt_elems, gen_elems)
    if score < 1.0 and diagnostics is not None:
        diagnostics.append(
            f"directive sequences diverge: reference {gt_elems} vs generated {gen_elems}"
        )
    return score


def _forgiven_components(
    gt: tuple[NormalizedDirective, ...],
    gen: tuple[NormalizedDirective, ...],
    gen_components: frozenset[str],
) -> frozenset[str]:
    """Reference private components satisfied implicitly by the candidate.

    A reference `private` over pure loop counters is forgiven only when the
    candidate actually parallelizes a matching loop: a worksharing-loop
    directive attached to a for loop whose counters cover those variables.
    """
    gen_loop_counters: set[str] = set()
    for nd in gen:
        if "for" in nd.kinds and nd.directive.attached_loop is not None:
            gen_loop_counters |= nd.directive.attached_loop.nest_induction_vars
    forgiven: set[str] = set()
    for nd in gt:
        for clause in nd.directive.clauses:
            if clause.kind != "private":
                continue
            comp = f"private({','.join(sorted(clause.variables))})"
            if comp not in nd.implicit_private or comp in gen_components:
                continue
            if clause.variables and clause.variables <= gen_loop_counters:
                forgiven.add(comp)
    return frozenset(forgiven)


def redundancy_coverage_score(
    gt: tuple[NormalizedDirective, ...],
    gen: tuple[NormalizedDirective, ...],
    diagnostics: list[str] | None = None,
) -> float:
    """Coverage of reference components with a surplus penalty."""
    gt_comps = _all_components(gt)
    gen_comps = _all_components(gen)
    if not gt_comps:
        if not gen_comps:
            return 1.0
        if diagnostics is not None:
            diagnostics.append(
                "reference has no clause components but candidate adds: "
                + ", ".join(sorted(gen_comps))
            )
        return 0.0
    forgiven = _forgiven_components(gt, gen, gen_comps)
    matched = len(gt_comps & gen_comps) + len(forgiven)
    if diagnostics is not None and forgiven:
        diagnostics.append(
            "implicitly satisfied: " + ", ".join(sorted(forgiven))
        )
    coverage = matched / len(gt_comps)
    surplus = 1.0 if not gen_comps else min(1.0, len(gt_comps) / len(gen_comps))
    return coverage * surplus


def cyclomatic_ratio(
    gt_regions: tuple[RegionBlock, ...],
    gen_regions: tuple[RegionBlock, ...],
    diagnostics: list[str] | None = None,
) -> float:
    """Ratio of smaller to larger mean parallel-region complexity."""
    if not gt_regions and not gen_regions:
        return 1.0
    if not gt_regions or not gen_regions:
        if diagnostics is not None:
            side = "reference" if not gt_regions else "generated"
            diagnostics.append(f"{side} side has no extractable parallel region")
        return 0.0
    mean_gt = sum(r.complexity for r in gt_regions) / len(gt_regions)
    mean_gen = sum(r.complexity for r in gen_regions) / len(gen_regions)
    return min(mean_gt, mean_gen) / max(mean_gt, mean_gen)


def _is_loop_related(nd: NormalizedDirective) -> bool:
    return "for" in nd.kinds or nd.directive.clause_of("collapse") is not None


def _stripped(text: str) -> str:
    return strip_openmp(parse_source(text)).text


def _construct_text(unit: SourceUnit, nd: NormalizedDirective) -> str | None:
    span = attached_construct_span(unit, nd.directive)
    if span is None:
        return None
    return _stripped(unit.text[span[0] : span[1]])


def pragma_location_score(
    gt: tuple[NormalizedDirective, ...],
    gen: tuple[NormalizedDirective, ...],
    gt_unit: SourceUnit,
    gen_unit: SourceUnit,
    backend: SimilarityBackend | None = None,
    diagnostics: list[str] | None = None,
) -> float:
    """Whether pragmas attach to the right constructs.

    Loop-related pragmas compare pragma-stripped loop contexts with a
    penalty of 50% per position of loop-index drift; others compare the
    immediate construct that follows.  Unpaired pragmas contribute zero.
    """
    if backend is None:
        backend = BagOfTokensBackend()

    gt_loop = [nd for nd in gt if _is_loop_related(nd)]
    gen_loop = [nd for nd in gen if _is_loop_related(nd)]
    gt_other = [nd for nd in gt if not _is_loop_related(nd)]
    gen_other = [nd for nd in gen if not _is_loop_related(nd)]

    def loop_term(a: NormalizedDirective | None, b: NormalizedDirective | None) -> float:
        if a is None or b is None:
            if diagnostics is not None:
                missing = "generated" if b is None else "reference"
                present = a or b
                diagnostics.append(
                    f"loop pragma '{' '.join(present.kinds)}' unmatched on {missing} side"
                )
            return 0.0
        la, lb = a.directive.attached_loop, b.directive.attached_loop
        if la is None or lb is None:
            if diagnostics is not None:
                diagnostics.append(
                    "loop pragma not attached to a for loop on "
                    + ("generated" if lb is None else "reference")
                    + " side"
                )
            return 0.0
        cos = backend.similarity(_stripped(la.context_text), _stripped(lb.context_text))
        penalty = max(0.0, 1.0 - abs(la.loop_index - lb.loop_index) / 2.0)
        if penalty < 1.0 and diagnostics is not None:
            diagnostics.append(
                f"loop index drift {la.loop_index} vs {lb.loop_index} "
                f"(penalty {penalty:.2f})"
            )
        return cos * penalty

    def other_term(a: NormalizedDirective | None, b: NormalizedDirective | None) -> float:
        if a is None or b is None:
            if diagnostics is not None:
                missing = "generated" if b is None else "reference"
                present = a or b
                diagnostics.append(
                    f"pragma '{' '.join(present.kinds)}' unmatched on {missing} side"
                )
            return 0.0
        ctx_a = _construct_text(gt_unit, a)
        ctx_b = _construct_text(gen_unit, b)
        if ctx_a is None and ctx_b is None:
            return 1.0
        if ctx_a is None or ctx_b is None:
            return 0.0
        return backend.similarity(ctx_a, ctx_b)

    loop_terms = [loop_term(a, b) for a, b in zip_longest(gt_loop, gen_loop)]
    other_terms = [other_term(a, b) for a, b in zip_longest(gt_other, gen_other)]

    if not loop_terms and not other_terms:
        return 1.0
    if not loop_terms:
        return sum(other_terms) / len(other_terms)
    ls = sum(loop_terms) / len(loop_terms)
    if not other_terms:
        return ls
    return (ls + sum(other_terms) / len(other_terms)) / 2.0


def compose(scores: tuple[float, ...], weights: MetricWeights) -> float:
    """100 times the weighted sum of the eight sub-scores."""
    ws = weights.as_tuple()
    if len(scores) != len(ws):
        raise ValueError(f"expected {len(ws)} sub-scores, got {len(scores)}")
    for s in scores:
        if not 0.0 <= s <= 1.0 + 1e-12:
            raise ValueError(f"sub-score out of range: {s}")
    return 100.0 * math.fsum(w * s for w, s in zip(ws, scores))


def ompbleu_score(
    gt_source: str,
    gen_source: str,
    config: "EvalConfig | None" = None,
) -> ScoreBreakdown:
    """Score one candidate against its reference across all eight components."""
    from .config import EvalConfig  # deferred to avoid an import cycle

    cfg = config if config is not None else EvalConfig()
    gt = analyze(gt_source)
    gen = analyze(gen_source)
    backend = cfg.make_backend()
    diagnostics: dict[str, list[str]] = {k: [] for k in ("wc", "vu", "or", "rc", "cc", "pl", "compile")}

    wc = weighted_clause_score(gt.normalized, gen.normalized, cfg.clause_weights, diagnostics["wc"])
    vu = variable_usage_score(gt.directives, gen.directives, diagnostics["vu"])
    is_ = integrated_semantic_score(
        gt_source, gen_source, backend, cfg.weights.is_blend_alpha
    )
    or_ = ordering_score(gt.normalized, gen.normalized, diagnostics["or"])
    rc = redundancy_coverage_score(gt.normalized, gen.normalized, diagnostics["rc"])
    cc = cyclomatic_ratio(gt.regions, gen.regions, diagnostics["cc"])
    diagnostics["cc"].extend(gt.region_diagnostics)
    diagnostics["cc"].extend(gen.region_diagnostics)
    pl = pragma_location_score(
        gt.normalized, gen.normalized, gt.unit, gen.unit, backend, diagnostics["pl"]
    )

    if cfg.compile_enabled:
        result = compile_score(gen_source, cfg.compile)
        c = float(result.score)
        if result.diagnostics and result.score == 0:
            diagnostics["compile"].append(result.diagnostics.strip())
    else:
        c = 1.0
        diagnostics["compile"].append("compile check disabled by configuration")

    scores = (wc, vu, is_, or_, rc, cc, pl, c)
    composite = compose(scores, cfg.weights)
    return ScoreBreakdown(
        wc=wc,
        vu=vu,
        is_=is_,
        or_=or_,
        rc=rc,
        cc=cc,
        pl=pl,
        compile_=c,
        composite=composite,
        diagnostics={k: v for k, v in diagnostics.items() if v},
    )
