"""Command-line entry point: ``sumproduct <command> [options]``.

Every command produces a table of flat records written as JSON lines or CSV.
Exit codes: 0 success, 1 usage error, 2 invalid input, 3 failed invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable

from . import regularity as reg
from .errors import ConstantFloorError, InvariantViolation, IterationCapExceeded, ValidationError
from .search import EXHAUSTIVE_LIMIT, SearchRecord, exhaustive_search, structured_search
from .setops import GSet, format_set_literal, parse_set_literal
from .spectral import GridFunction, u2_norm
from .sumprod import (
    ConstructionParams,
    as_fraction,
    construct_extremal,
    f_alpha,
    polya_vinogradov_report,
)
from .verify import SUITES, run_suite

log = logging.getLogger("sumproduct")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    workers: int = 1
    limit: int = EXHAUSTIVE_LIMIT
    fmt: str = "json-lines"
    out: str | None = None
    cache: str | None = None
    regularity: reg.RegularityConfig = field(default_factory=reg.RegularityConfig)

    def __post_init__(self):
        if self.fmt not in ("json-lines", "csv"):
            raise ValidationError(f"unknown format {self.fmt!r}")
        if self.workers < 1:
            raise ValidationError("--workers must be at least 1")
        if self.limit < 3:
            raise ValidationError("--limit must be at least 3")
        for k in ("delta", "eps"):
            v = self.params.get(k)
            if v is not None and not 0 < Fraction(v) < Fraction(1, 2):
                raise ValidationError(f"{k} must lie in (0, 1/2), got {v}")

    def key(self) -> str:
        """Canonical parameter string; worker count and output options are excluded
        because they cannot change the result."""
        p = dict(self.params)
        if self.command == "regularity":
            if p.get("set_text") is not None:
                p.pop("setfile", None)  # content, not location, identifies the input
            c = self.regularity
            p.update(c0=c.c0, c1=c.c1, arc_c=c.arc_c, max_iterations=c.max_iterations)
        if self.command == "search":
            p["limit"] = self.limit
        return json.dumps(p, sort_keys=True, default=str)


# ---------------------------------------------------------------------------
# cache


class ResultCache:
    """Append-only JSON-lines store of result tables keyed by (command, params).

    A hit is re-validated by the command's checker before it is reused; entries
    that fail are ignored and the result is recomputed and appended.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[tuple[str, str], list[dict]] = {}
        if self.path.exists():
            with self.path.open() as fh:
                for n, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        e = json.loads(line)
                        self._entries[(e["command"], e["params"])] = e["records"]
                    except (json.JSONDecodeError, KeyError, TypeError):
                        log.warning("cache %s: skipping malformed line %d", self.path, n)

    def get(self, command: str, params: str, check: Callable[[list[dict]], None]) -> list[dict] | None:
        recs = self._entries.get((command, params))
        if recs is None:
            return None
        try:
            check(recs)
        except (InvariantViolation, ValidationError, KeyError, ValueError) as exc:
            log.warning("cache entry for %s %s failed re-validation (%s); recomputing", command, params, exc)
            return None
        return recs

    def put(self, command: str, params: str, records: list[dict]):
        self._entries[(command, params)] = records
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a") as fh:
            fh.write(json.dumps({"command": command, "params": params, "records": records}, sort_keys=True) + "\n")

    def __len__(self):
        return len(self._entries)


# ---------------------------------------------------------------------------
# output


def _cell(v) -> str:
    return v if isinstance(v, str) else json.dumps(v)


def render(records: list[dict], fmt: str, columns: list[str] | None = None) -> str:
    if fmt == "json-lines":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    cols = list(columns or [])
    for r in records:
        cols.extend(k for k in r if k not in cols)
    if not cols:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_cell(r[c]) if c in r else "" for c in cols])
    return buf.getvalue()


def read_table(text: str, fmt: str) -> list[dict[str, str]]:
    """Inverse of ``render`` at the level of cell strings (used to compare encodings)."""
    if fmt == "json-lines":
        return [{k: _cell(v) for k, v in json.loads(line).items()} for line in text.splitlines() if line.strip()]
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: v for k, v in r.items() if v != ""} for r in rows]


# ---------------------------------------------------------------------------
# commands


FALPHA_COLUMNS = ["alpha", "value", "ell", "branch", "value_float", "asymptote"]


def parse_range(text: str) -> list[Fraction]:
    """START:STOP:STEP, inclusive of STOP, exact rationals."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"range must be START:STOP:STEP, got {text!r}")
    start, stop, step = (as_fraction(x) for x in parts)
    if step <= 0:
        raise ValidationError("range step must be positive")
    if stop < start:
        raise ValidationError("range stop is below start")
    n = math.floor((stop - start) / step)
    return [start + i * step for i in range(n + 1)]


def falpha_rows(alphas: Iterable[Fraction]) -> list[dict]:
    rows = []
    for a in alphas:
        t = f_alpha(a)
        rows.append(
            {
                "alpha": str(t.alpha),
                "value": str(t.value),
                "ell": t.optimal_ell,
                "branch": t.branch,
                "value_float": float(t.value),
                "asymptote": t.asymptote,
            }
        )
    return rows


def cmd_falpha(cfg: RunConfig) -> list[dict]:
    alphas = [as_fraction(a) for a in cfg.params.get("alpha") or []]
    if cfg.params.get("range"):
        alphas += parse_range(cfg.params["range"])
    return falpha_rows(alphas)


def _check_search(recs: list[dict]):
    for r in recs:
        SearchRecord.from_record(r)


def cmd_search(cfg: RunConfig) -> list[dict]:
    p = int(cfg.params["p"])
    mode = cfg.params["mode"]
    if cfg.params.get("min_card") is not None:
        ks = [int(cfg.params["min_card"])]
    else:
        ks = []
        for a in cfg.params["alpha"]:
            a = as_fraction(a)
            if not 0 < a <= 1:
                raise ValidationError(f"alpha must lie in (0, 1], got {a}")
            ks.append(max(1, math.ceil(a * p)))
    out = []
    for k in ks:
        if mode == "exhaustive":
            rec = exhaustive_search(p, k, workers=cfg.workers, limit=cfg.limit)
        else:
            rec = structured_search(p, k, workers=cfg.workers)
        out.append(rec.validate().to_record())
    return out


def cmd_construct(cfg: RunConfig) -> list[dict]:
    p, ell = int(cfg.params["p"]), int(cfg.params["ell"])
    if cfg.params.get("n") is not None:
        params = ConstructionParams(p, ell, int(cfg.params["n"]))
    else:
        params = ConstructionParams.from_alpha(p, ell, cfg.params["alpha"])
    A, rep = construct_extremal(params)
    pv = polya_vinogradov_report(params)
    return [
        {
            "type": "construction",
            "p": p,
            "ell": ell,
            "N": params.N,
            "card": rep.card,
            "sum_size": rep.sum_size,
            "prod_size": rep.prod_size,
            "ratio": str(rep.ratio),
            "ratio_float": float(rep.ratio),
            "density": str(rep.density),
            "envelope": str(rep.envelope),
            "envelope_bound": float(rep.envelope * p),
            "pv_count": pv.count,
            "pv_target": str(pv.N_over_ell),
            "pv_deviation": pv.deviation,
            "pv_bound": pv.bound,
            "pv_within": pv.within,
            "witness": format_set_literal(A),
        }
    ]


def read_set_file(path: str) -> list[GSet]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read set file: {exc}") from None
    sets = []
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            sets.append(parse_set_literal(s))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{n}: {exc}") from None
    return sets


def _check_regularity(recs: list[dict]):
    by_index: dict[int, dict[str, dict]] = {}
    for r in recs:
        by_index.setdefault(r["index"], {})[r["type"]] = r
    for pair in by_index.values():
        d, s = pair["decomposition"], pair["structured_superset"]
        A = parse_set_literal(d["set"])
        dec = reg.DecompositionReport.from_record(d)
        f = GridFunction(A.group, A.indicator())
        u2 = u2_norm(f - reg.project(f, dec.factor))
        if not math.isclose(u2, dec.final_u2, rel_tol=1e-9, abs_tol=1e-12):
            raise InvariantViolation("cached decomposition does not reproduce its U^2 norm")
        if reg.dense_cells(A, dec.factor, as_fraction(s["eps"])) != parse_set_literal(s["superset"]):
            raise InvariantViolation("cached superset does not match its factor")


def cmd_regularity(cfg: RunConfig) -> list[dict]:
    eps = as_fraction(cfg.params["eps"])
    delta = cfg.params.get("delta")
    delta = reg.delta_for_eps(eps) if delta is None else float(as_fraction(delta))
    reg.check_delta_eps(delta, eps)
    out = []
    for i, A in enumerate(read_set_file(cfg.params["setfile"])):
        _, rep = reg.structured_superset(A, eps, delta, cfg.regularity)
        d = rep.decomposition.to_record()
        d.update(index=i, set=format_set_literal(A), cells=rep.decomposition.factor.m)
        s = rep.to_record()
        s.update(index=i, delta=delta, bound_count=str(rep.bound))
        out += [d, s]
    return out


def cmd_verify(cfg: RunConfig) -> list[dict]:
    rows = []
    for r in run_suite(cfg.params["suite"]):
        rows.append({"suite": r.suite, "check": r.name, "ok": r.ok, "seconds": round(r.seconds, 3), "detail": r.detail})
        log.info("%-10s %-32s %s %.2fs", r.suite, r.name, "ok" if r.ok else "FAIL", r.seconds)
    return rows


COMMANDS: dict[str, tuple[Callable[[RunConfig], list[dict]], Callable | None, list[str] | None]] = {
    "falpha": (cmd_falpha, None, FALPHA_COLUMNS),
    "search": (cmd_search, _check_search, None),
    "construct": (cmd_construct, None, None),
    "regularity": (cmd_regularity, _check_regularity, None),
    "verify": (cmd_verify, None, None),
}


def execute(cfg: RunConfig) -> list[dict]:
    fn, check, _ = COMMANDS[cfg.command]
    cache = ResultCache(cfg.cache) if cfg.cache and check else None
    key = cfg.key()
    if cache is not None:
        hit = cache.get(cfg.command, key, check)
        if hit is not None:
            log.info("cache hit for %s %s", cfg.command, key)
            return hit
    records = fn(cfg)
    if cache is not None:
        cache.put(cfg.command, key, records)
    return records


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json-lines", "csv"], default="json-lines")
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="sumproduct", description="Sum-product experiments over finite fields.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("falpha", parents=[common], help="tabulate f(alpha)")
    s.add_argument("--alpha", nargs="*", default=[], help="explicit values, e.g. 1/12 0.05")
    s.add_argument("--range", help="START:STOP:STEP, inclusive")

    s = sub.add_parser("search", parents=[common], help="min max(|A+A|,|A.A|) at fixed p")
    s.add_argument("--p", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", nargs="+")
    g.add_argument("--min-card", type=int)
    s.add_argument("--mode", choices=["exhaustive", "structured"], default="exhaustive")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--limit", type=int, default=EXHAUSTIVE_LIMIT, help="largest p for exhaustive mode")
    s.add_argument("--cache")

    s = sub.add_parser("construct", parents=[common], help="[1,N] cap H construction")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--ell", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha")
    g.add_argument("--n", type=int)

    s = sub.add_parser("regularity", parents=[common], help="decomposition and structured superset")
    s.add_argument("setfile")
    s.add_argument("--eps", required=True)
    s.add_argument("--delta", help="default: (eps^3/4)^2")
    s.add_argument("--c0", type=float, default=reg.RegularityConfig.c0)
    s.add_argument("--c1", type=float, default=reg.RegularityConfig.c1)
    s.add_argument("--arc-c", type=float, default=reg.RegularityConfig.arc_c)
    s.add_argument("--max-iterations", type=int)
    s.add_argument("--cache")

    s = sub.add_parser("verify", parents=[common], help="run invariant suites")
    s.add_argument("suite", choices=[*SUITES, "all"])
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    c = ns.command
    kw: dict[str, Any] = dict(fmt=ns.format, out=ns.out)
    if c == "falpha":
        params = {"alpha": ns.alpha, "range": ns.range}
    elif c == "search":
        params = {"p": ns.p, "mode": ns.mode, "alpha": ns.alpha, "min_card": ns.min_card}
        kw.update(workers=ns.workers, limit=ns.limit, cache=ns.cache)
    elif c == "construct":
        params = {"p": ns.p, "ell": ns.ell, "alpha": ns.alpha, "n": ns.n}
    elif c == "regularity":
        text = None
        try:
            text = Path(ns.setfile).read_text()
        except OSError:
            pass
        params = {"setfile": ns.setfile, "set_text": text, "eps": ns.eps, "delta": ns.delta}
        kw.update(
            cache=ns.cache,
            regularity=reg.RegularityConfig(ns.c0, ns.c1, ns.arc_c, ns.max_iterations),
        )
    else:
        params = {"suite": ns.suite}
    if c in ("regularity",):
        for k in ("eps", "delta"):
            if params[k] is not None:
                params[k] = str(as_fraction(params[k]))
    return RunConfig(c, params, **kw)


def _setup_logging(verbose: bool):
    # a private handler bound to the current stderr, so repeated in-process calls behave
    for h in list(log.handlers):
        log.removeHandler(h)
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(h)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    _setup_logging(ns.verbose or ns.command == "verify")
    try:
        cfg = config_from_args(ns)
        records = execute(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvariantViolation, ConstantFloorError, IterationCapExceeded) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = render(records, cfg.fmt, COMMANDS[cfg.command][2])
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "verify" and not all(r["ok"] for r in records):
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
