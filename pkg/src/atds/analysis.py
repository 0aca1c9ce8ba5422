"""Evaluation math: WER/WERR, Pearson correlation, donor ranking, and
token-to-phone correspondence tables."""

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from atds.errors import FormatError, ValidationError

NO_PHONE_LABEL = "∅"  # frames not covered by any phone interval


@dataclass(frozen=True)
class WerResult:
    substitutions: int
    insertions: int
    deletions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_words


@dataclass(frozen=True)
class DonorEntry:
    donor: str
    score: float
    wer: float | None = None
    werr: float | None = None


@dataclass(frozen=True)
class DonorReport:
    entries: tuple[DonorEntry, ...]
    baseline_wer: float | None = None
    pearson_r: float | None = None


@dataclass(frozen=True)
class PhoneInterval:
    phone: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not (0 <= self.start_s < self.end_s):
            raise ValidationError(
                f"bad phone interval [{self.start_s}, {self.end_s})"
            )


@dataclass(frozen=True)
class CorrespondenceTable:
    # token_id -> phone label -> P(phone | token)
    rows: dict[int, dict[str, float]]
    # token_id -> total attributed frames (for frequency ranking)
    frame_totals: dict[int, int]


def wer(reference: list[str], hypothesis: list[str]) -> WerResult:
    """Levenshtein alignment with unit costs. When costs tie, the traceback
    prefers substitution over insertion over deletion."""
    if not reference:
        raise ValidationError("reference must be non-empty")
    n, m = len(reference), len(hypothesis)
    # dist[i][j]: cost of aligning reference[:i] with hypothesis[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (reference[i - 1] != hypothesis[j - 1])
            ins = dist[i][j - 1] + 1
            dele = dist[i - 1][j] + 1
            dist[i][j] = min(sub, ins, dele)
    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and here == dist[i - 1][j - 1] + (
            reference[i - 1] != hypothesis[j - 1]
        ):
            if reference[i - 1] != hypothesis[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif j > 0 and here == dist[i][j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return WerResult(subs, ins, dels, n)


def werr(baseline_wer: float, observed_wer: float) -> float:
    """Relative WER reduction versus the baseline, as a percentage."""
    if not baseline_wer > 0:
        raise ValidationError("baseline WER must be > 0")
    return 100.0 * (baseline_wer - observed_wer) / baseline_wer


def pearson(xs: list[float], ys: list[float]) -> float:
    if len(xs) != len(ys):
        raise ValidationError("series lengths differ")
    n = len(xs)
    if n < 2:
        raise ValidationError("need at least 2 points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ValidationError("zero variance series")
    return min(1.0, max(-1.0, sxy / math.sqrt(sxx * syy)))


def rank_donors(
    entries: list[DonorEntry], baseline_wer: float | None = None
) -> DonorReport:
    """Sort donors by similarity score (descending, ties by donor code),
    fill WERR from the baseline, and correlate score against WERR."""
    for e in entries:
        if not math.isfinite(e.score):
            raise ValidationError(f"{e.donor}: non-finite score")
    filled = []
    for e in entries:
        if e.werr is None and e.wer is not None and baseline_wer is not None:
            e = replace(e, werr=werr(baseline_wer, e.wer))
        filled.append(e)
    filled.sort(key=lambda e: (-e.score, e.donor))
    paired = [(e.score, e.werr) for e in filled if e.werr is not None]
    r = None
    if len(paired) >= 2:
        try:
            r = pearson([p[0] for p in paired], [p[1] for p in paired])
        except ValidationError:
            r = None
    return DonorReport(tuple(filled), baseline_wer, r)


def _validate_intervals(intervals: list[PhoneInterval]) -> None:
    for a, b in zip(intervals, intervals[1:]):
        if b.start_s < a.end_s:
            raise ValidationError(
                f"phone intervals overlap or are unsorted near {b.start_s}"
            )


def phone_token_correspondence(
    utterances: list[tuple[list, list[PhoneInterval]]],
    frame_rate_hz: float = 49.0,
) -> CorrespondenceTable:
    """P(phone | token) from temporal overlap on the frame grid.

    Each frame of every token span is attributed to the phone interval with
    maximal overlap (ties to the earlier interval); frames not covered by
    any interval count toward the no-phone label.
    """
    if not frame_rate_hz > 0:
        raise ValidationError("frame_rate_hz must be > 0")
    counts: dict[int, dict[str, int]] = {}
    for spans, intervals in utterances:
        _validate_intervals(intervals)
        for span in spans:
            f_start = round(span.start_s * frame_rate_hz)
            f_end = round(span.end_s * frame_rate_hz)
            row = counts.setdefault(span.token_id, {})
            for f in range(f_start, f_end):
                lo = f / frame_rate_hz
                hi = (f + 1) / frame_rate_hz
                best_label = NO_PHONE_LABEL
                best_overlap = 0.0
                for iv in intervals:
                    overlap = min(hi, iv.end_s) - max(lo, iv.start_s)
                    if overlap > best_overlap:
                        best_overlap = overlap
                        best_label = iv.phone
                row[best_label] = row.get(best_label, 0) + 1
    rows = {}
    totals = {}
    for tid, row in counts.items():
        total = sum(row.values())
        rows[tid] = {phone: c / total for phone, c in row.items()}
        totals[tid] = total
    return CorrespondenceTable(rows, totals)


def load_phone_intervals(path: str | Path) -> dict[str, list[PhoneInterval]]:
    """TSV columns: utt_id, start_s, end_s, phone."""
    result: dict[str, list[PhoneInterval]] = {}
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise FormatError(f"{path}:{lineno}: expected 4 columns")
        utt_id, start, end, phone = cols
        try:
            interval = PhoneInterval(phone, float(start), float(end))
        except (ValueError, ValidationError) as exc:
            raise FormatError(f"{path}:{lineno}: {exc}")
        result.setdefault(utt_id, []).append(interval)
    for intervals in result.values():
        intervals.sort(key=lambda iv: iv.start_s)
        _validate_intervals(intervals)
    return result


def load_transcripts(path: str | Path) -> dict[str, str]:
    """TSV columns: utt_id, text."""
    result = {}
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t", 1)
        if len(cols) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns")
        result[cols[0]] = cols[1]
    return result


def correspondence_to_json(table: CorrespondenceTable) -> str:
    """Rows ordered by token frequency, so rank 1 is the most frequent
    token (reported as P(phone|t1), P(phone|t2), ...)."""
    order = sorted(table.rows, key=lambda tid: (-table.frame_totals[tid], tid))
    doc = []
    for rank, tid in enumerate(order, 1):
        phones = dict(
            sorted(table.rows[tid].items(), key=lambda kv: (-kv[1], kv[0]))
        )
        doc.append(
            {
                "rank_label": f"t{rank}",
                "token_id": tid,
                "frames": table.frame_totals[tid],
                "p_phone_given_token": phones,
            }
        )
    return json.dumps(doc, ensure_ascii=False, indent=1) + "\n"


def report_to_tsv(report: DonorReport) -> str:
    lines = ["donor\tscore\twer\twerr\trank"]
    for rank, e in enumerate(report.entries, 1):
        wer_s = "" if e.wer is None else f"{e.wer:.1f}"
        werr_s = "" if e.werr is None else f"{e.werr:.1f}"
        lines.append(f"{e.donor}\t{e.score}\t{wer_s}\t{werr_s}\t{rank}")
    if report.pearson_r is not None:
        lines.append(f"# pearson_r(score, werr) = {report.pearson_r}")
    return "\n".join(lines) + "\n"


def report_to_json(report: DonorReport) -> str:
    doc = {
        "baseline_wer": report.baseline_wer,
        "pearson_r": report.pearson_r,
        "entries": [
            {
                "donor": e.donor,
                "score": e.score,
                "wer": e.wer,
                "werr": e.werr,
                "rank": rank,
            }
            for rank, e in enumerate(report.entries, 1)
        ],
    }
    return json.dumps(doc, indent=1) + "\n"
