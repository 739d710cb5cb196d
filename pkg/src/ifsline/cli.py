"""Command-line front end.

Exit codes: 0 when the analysis completed, 2 when a budget was exhausted (a
partial report is still written), 1 for unreadable or invalid input.
"""

import argparse
from dataclasses import dataclass
import random
import sys

from .dimension import assouad_estimate, bowen_dimension, pressure, similarity_dimension, synthesize_verdict
from .errors import IfsError, PreconditionError, ResourceLimitError, ValidationError
from .io import csv_text, dumps, envelope, load_family, load_ifs, write_text
from .maps import attractor_is_singleton
from .numerics import to_fraction
from .separation import WspStatus, phi_count, separation_report, ssp_check, wsp_verdict
from .symbolic import DEFAULT_WORD_BUDGET, InfiniteWordSpec
from .transversality import ez_values, lemma1_check
from .witness import IndependenceKind, demonstrate_wsp_failure, find_common_fixed_point

COMMANDS = ("dim", "separation", "transversality", "wsp-witness", "classify", "phi-count")


@dataclass
class RunConfig:
    command: str
    ifs: str = None
    family: str = None
    depth: int = None
    budget: int = DEFAULT_WORD_BUDGET
    target: int = 10
    x: str = None
    r: str = None
    N: int = 1
    out: str = None
    format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.budget is not None and self.budget <= 0:
            raise ValidationError("budget must be positive")
        if self.depth is not None and self.depth <= 0:
            raise ValidationError("depth must be positive")
        if self.format not in ("json", "csv"):
            raise ValidationError("format must be json or csv")

    def budgets(self):
        return {"budget": self.budget, "depth": self.depth, "target": self.target, "seed": self.seed}


# -- classification ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorollaryReport:
    """Which branch of the translation-family dichotomy the parameter falls in."""

    case: str
    label: str
    s0: object
    pair_sum_below_one: bool
    pair_sum_max: object
    ssp: object
    wsp: object
    classification: object
    caveats: tuple = ()

    def to_dict(self):
        return {
            "case": self.case,
            "label": self.label,
            "s0": self.s0.to_dict(),
            "pair_sum_below_one": self.pair_sum_below_one,
            "pair_sum_max": self.pair_sum_max,
            "ssp": self.ssp.to_dict(),
            "wsp": self.wsp.to_dict(),
            "classification": self.classification.to_dict(),
            "caveats": list(self.caveats),
        }


GENERIC_NOTE = "holds for all parameters outside a set of first category and zero Lebesgue measure"


def classify(family, max_n=6, budget=DEFAULT_WORD_BUDGET, target=10, fixed_point_len=3):
    """Place the family's current parameter in the dichotomy for translation families.

    ``CASE_1`` (``s0 > 1``) and ``CASE_2B`` without a witness are generic
    expectations only.  ``CASE_2A`` is certified by the SSP and ``CASE_2B`` by
    an explicit WSP-failure witness.
    """
    ifs = family.system() if hasattr(family, "system") else family
    if not ifs.is_affine:
        raise PreconditionError("classification needs an affine translation family")
    rs = [abs(r) for r in ifs.ratios()]
    s0 = similarity_dimension(rs)
    pair_max = max(rs[i] + rs[j] for i in range(len(rs)) for j in range(len(rs)) if i != j)
    pair_ok = pair_max < 1
    ssp = ssp_check(ifs)
    witness = None
    caveats = []
    if not ssp.holds and s0.upper < 1:
        base = find_common_fixed_point(ifs, fixed_point_len, budget)
        if base is not None and base.independence.kind is IndependenceKind.IRRATIONAL_CERTIFIED:
            try:
                witness = demonstrate_wsp_failure(ifs, base, target, budget)
            except ResourceLimitError as exc:
                caveats.append(f"witness search stopped: {exc}")
    wsp = wsp_verdict(ifs, max_n, budget, witness=witness)
    verdict = synthesize_verdict(s0, wsp, singleton=attractor_is_singleton(ifs))
    if s0.lower > 1:
        case, label = "CASE_1", "GENERIC_EXPECTATION"
        caveats.append("positive Lebesgue measure and dim_H = dim_A = 1 " + GENERIC_NOTE)
    elif ssp.holds and s0.upper <= 1:
        case, label = "CASE_2A", "CERTIFIED"
    elif wsp.status is WspStatus.WITNESSED_FAILS:
        case, label = "CASE_2B", "CERTIFIED"
        caveats.append("the witness certifies WSP failure; exact overlaps are excluded only up to the searched length")
    elif wsp.status is WspStatus.CERTIFIED_HOLDS:
        case, label = "EXCEPTIONAL", "CERTIFIED"
        caveats.append("WSP holds without SSP: this parameter lies in the exceptional set of the dichotomy")
    else:
        case, label = "CASE_2B", "GENERIC_EXPECTATION"
        caveats.append("H-measure zero and dim_A = 1 " + GENERIC_NOTE)
    if not pair_ok:
        caveats.append("max |r_i| + |r_j| >= 1: the transversality condition is not available")
    return CorollaryReport(case, label, s0, pair_ok, pair_max, ssp, wsp, verdict, tuple(caveats))


# -- command handlers --------------------------------------------------------------------------


def _need(path, flag):
    if path is None:
        raise ValidationError(f"{flag} is required for this command")
    return path


def _dim(cfg):
    ifs = load_ifs(_need(cfg.ifs, "--ifs"))
    out = {}
    if ifs.is_affine:
        out["similarity"] = similarity_dimension(ifs.ratios())
    out["bowen"] = bowen_dimension(ifs, n=cfg.depth or 8, budget=cfg.budget)
    out["pressure_at_0"] = list(pressure(ifs, 0))
    out["assouad"] = assouad_estimate(ifs, budget=cfg.budget)
    rows = [[k, v.value, v.lower, v.upper, v.certified] for k, v in out.items() if hasattr(v, "value")]
    return out, (["method", "value", "lower", "upper", "certified"], rows)


def _separation(cfg):
    ifs = load_ifs(_need(cfg.ifs, "--ifs"))
    rep = separation_report(ifs, max_n=cfg.depth or 8, budget=cfg.budget)
    return rep, _criterion_table(rep)


def _criterion_table(rep):
    return ["n", "d_n"], [[n, v] for n, v in rep.verdict.d_sequence]


def _transversality(cfg):
    fam = load_family(_need(cfg.family, "--family"))
    cert = lemma1_check(fam)
    rng = random.Random(cfg.seed)
    m = fam.m
    samples = []
    for _ in range(10):
        a = rng.randrange(1, m + 1)
        b = rng.choice([s for s in range(1, m + 1) if s != a])
        i = InfiniteWordSpec((a,) + tuple(rng.randrange(1, m + 1) for _ in range(2)), tuple(rng.randrange(1, m + 1) for _ in range(2)))
        j = InfiniteWordSpec((b,) + tuple(rng.randrange(1, m + 1) for _ in range(2)), tuple(rng.randrange(1, m + 1) for _ in range(2)))
        ez = ez_values(fam, i, j)
        samples.append({"i": i.to_dict(), "j": j.to_dict(), **ez.to_dict()})
    out = {
        "family": fam.to_dict(),
        "certificate": cert.to_dict() if cert is not None else None,
        "pair_sum_below_one": cert is not None,
        "samples": samples,
    }
    rows = [] if cert is None else [[i, j, b] for (i, j), b in sorted(cert.pair_bounds.items())]
    return out, (["i", "j", "bound"], rows)


def _wsp_witness(cfg):
    ifs = load_ifs(_need(cfg.ifs, "--ifs"))
    base = find_common_fixed_point(ifs, cfg.depth or 3, cfg.budget)
    if base is None or base.independence.kind is not IndependenceKind.IRRATIONAL_CERTIFIED:
        out = {"found": False, "candidate": base, "note": "no common fixed point with irrational log-ratio up to the searched length"}
        return out, (["i", "j", "count"], [])
    wit = demonstrate_wsp_failure(ifs, base, cfg.target, cfg.budget)
    out = {"found": True, "witness": wit}
    return out, (["i", "j", "count"], [list(h) for h in wit.history])


def _classify(cfg):
    if cfg.family is not None:
        src = load_family(cfg.family)
    else:
        src = load_ifs(_need(cfg.ifs, "--ifs or --family"))
    rep = classify(src, max_n=cfg.depth or 6, budget=cfg.budget, target=cfg.target)
    return rep, (["case", "label", "s0"], [[rep.case, rep.label, rep.s0.value]])


def _phi(cfg):
    ifs = load_ifs(_need(cfg.ifs, "--ifs"))
    if cfg.x is None or cfg.r is None:
        raise ValidationError("--x and --r are required for phi-count")
    pc = phi_count(ifs, to_fraction(cfg.x), to_fraction(cfg.r), cfg.N, cfg.budget)
    return pc, (["scale", "count"], [[pc.r, pc.count]])


HANDLERS = {
    "dim": _dim,
    "separation": _separation,
    "transversality": _transversality,
    "wsp-witness": _wsp_witness,
    "classify": _classify,
    "phi-count": _phi,
}


def _partial_table(cfg, partial):
    if cfg.command == "separation" and partial is not None:
        return _criterion_table(partial)
    return ["status"], [["partial"]]


def run(cfg, stdout=None, stderr=None):
    """Execute one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        result, table = HANDLERS[cfg.command](cfg)
        status, code = "completed", 0
    except ResourceLimitError as exc:
        result, table = {"partial": exc.partial, "message": str(exc)}, _partial_table(cfg, exc.partial)
        status, code = "resource_limit", 2
        print(f"resource limit: {exc}", file=stderr)
    except (IfsError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    if cfg.format == "json":
        text = dumps(envelope(cfg.command, result, cfg.budgets(), status))
    else:
        text = csv_text(*table)
    write_text(text, cfg.out, stdout)
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="ifsline", description="Dimensions, separation checks and WSP witnesses for IFSs on the line.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--ifs", help="system JSON file")
    p.add_argument("--family", help="translation family JSON file")
    p.add_argument("--depth", type=int, help="depth override (word length, d_n range or pressure level)")
    p.add_argument("--budget", type=int, default=DEFAULT_WORD_BUDGET, help="word/node budget")
    p.add_argument("--target", type=int, default=10, help="Phi_N count target for wsp-witness")
    p.add_argument("--x", help="centre point (rational string)")
    p.add_argument("--r", help="radius (rational or decimal string)")
    p.add_argument("--N", type=int, default=1, help="suffix length N for phi-count")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            args.command, args.ifs, args.family, args.depth, args.budget, args.target,
            args.x, args.r, args.N, args.out, args.format, args.seed,
        )
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
