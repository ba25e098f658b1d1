"""Unified command-line front end.

Subcommands: expand, eval, special, classpoly, verify-bounds, ao-search,
collinear-search, maps-det.  Output is JSON (default), JSON Lines for
streaming searches, or a human-readable table.  A fixed seed and worker
count give byte-identical output across runs; the class-polynomial disk
cache (flag --cache-dir or env CHISTAR_CACHE) never changes results, only
speed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import bounds, heegner, modmaps, qseries, search
from .evaluator import UHPoint, eval_function

CACHE_ENV = "CHISTAR_CACHE"


@dataclass
class RunConfig:
    subcommand: str
    prec_bits: int = 128
    order: Optional[int] = None
    d_max: int = 100
    workers: int = 1
    cache_dir: Optional[str] = None
    out_format: str = "json"
    seed: int = 0
    strict: bool = False
    out_path: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.prec_bits < 64:
            raise ValueError("precision must be >= 64 bits")


class _Output:
    def __init__(self, config: RunConfig):
        self.config = config
        self._fh = open(config.out_path, "w") if config.out_path else sys.stdout

    def emit(self, obj) -> None:
        if self.config.out_format == "jsonl" and isinstance(obj, list):
            for item in obj:
                self._fh.write(json.dumps(item, sort_keys=True) + "\n")
        elif self.config.out_format == "table" and isinstance(obj, list):
            for item in obj:
                self._fh.write(" | ".join(f"{k}={v}" for k, v in item.items()) + "\n")
        else:
            self._fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def close(self) -> None:
        if self.config.out_path:
            self._fh.close()


def _cache(config: RunConfig) -> Optional[heegner.ClassPolyCache]:
    directory = config.cache_dir or os.environ.get(CACHE_ENV)
    return heegner.ClassPolyCache(directory) if directory else None


# -- subcommand handlers -------------------------------------------------------


def _cmd_expand(config: RunConfig, out: _Output) -> int:
    name = config.extra["series"]
    order = config.order if config.order is not None else 8
    if name == "chi-star":
        obj = qseries.chi_star_expansion(order).to_json()
    else:
        fn = {
            "e2": lambda n: qseries.eisenstein(2, n),
            "e4": lambda n: qseries.eisenstein(4, n),
            "e6": lambda n: qseries.eisenstein(6, n),
            "delta": qseries.delta,
            "eta": qseries.eta_product,
            "j": qseries.j_expansion,
            "chi": qseries.chi_expansion,
            "xi": qseries.xi_expansion,
        }.get(name)
        if fn is None:
            raise ValueError(f"unknown series {name!r}")
        obj = fn(order).to_json()
    out.emit({"series": name, **obj})
    return 0


def _cmd_eval(config: RunConfig, out: _Output) -> int:
    tau = UHPoint.from_rational(Fraction(config.extra["tau_re"]),
                                Fraction(config.extra["tau_im"]),
                                prec=config.prec_bits)
    val = eval_function(config.extra["function"], tau, prec=config.prec_bits,
                        order=config.order)
    out.emit(val.to_json())
    return 0


def _discs_for(config: RunConfig) -> list[int]:
    if config.extra.get("disc") is not None:
        d = int(config.extra["disc"])
        if not heegner.valid_discriminant(d):
            raise ValueError(f"{d} is not a valid negative discriminant")
        return [d]
    return search.visited_discriminants(config.d_max)


def _special_one(args) -> list[dict]:
    d, prec = args
    rows = []
    for pt, jv, cv in heegner.special_values(d, prec=prec if prec else None):
        rows.append({
            "D": d,
            "form": [pt.form.a, pt.form.b, pt.form.c],
            "j": jv.to_json(),
            "chi_star": cv.to_json(),
        })
    return rows


def _cmd_special(config: RunConfig, out: _Output) -> int:
    discs = _discs_for(config)
    prec = config.prec_bits if config.extra.get("prec_given") else 0
    jobs = [(d, prec) for d in discs]
    rows: list[dict] = []
    for chunk in _map_jobs(_special_one, jobs, config.workers):
        rows.extend(chunk)
    rows.sort(key=lambda r: (-r["D"], r["form"][0], r["form"][1]))
    out.emit(rows)
    return 0


def _classpoly_one(args) -> dict:
    d, kind, cache_dir = args
    cache = heegner.ClassPolyCache(cache_dir) if cache_dir else None
    poly = heegner.class_polynomial(d, kind, cache=cache)
    return {
        "D": d,
        "kind": kind,
        "degree": poly.degree,
        "coeffs": [[c.numerator, c.denominator] for c in poly.coeffs],
        "denominator_lcm": poly.denominator_lcm,
        "irreducible": heegner.class_polynomial_irreducible(poly),
    }


def _cmd_classpoly(config: RunConfig, out: _Output) -> int:
    discs = _discs_for(config)
    kind = config.extra.get("kind", "chi-star")
    cache_dir = config.cache_dir or os.environ.get(CACHE_ENV)
    jobs = [(d, kind, cache_dir) for d in discs]
    rows = list(_map_jobs(_classpoly_one, jobs, config.workers))
    rows.sort(key=lambda r: -r["D"])
    out.emit(rows)
    return 0


def _cmd_verify_bounds(config: RunConfig, out: _Output) -> int:
    certs, ok = bounds.verify_all()
    robin = bounds.robin_checks(config.extra.get("robin_n", 500))
    payload = {
        "certificates": [c.to_json() for c in certs],
        "robin": {"n_max": robin.n_max, "pass": robin.passed, "failures": robin.failures},
        "all_pass": ok and robin.passed,
    }
    if config.out_format == "table":
        out.emit([c.to_json() for c in certs])
    else:
        out.emit(payload)
    return 0 if payload["all_pass"] else 1


def _cmd_ao_search(config: RunConfig, out: _Output) -> int:
    with open(config.extra["poly_path"]) as fh:
        poly = search.CurvePolynomial.from_json(json.load(fh))
    d_max = config.extra.get("dmax_override") or search.discriminant_bound(poly)
    policy = search.PrecisionPolicy(base_prec=config.prec_bits)
    results = search.ao_search(poly, d_max, policy, cache=_cache(config))
    rows = [r.to_json() for r in results]
    header = {
        "derived_d_max": search.discriminant_bound(poly),
        "searched_d_max": d_max,
        "visited": len(rows),
        "zero_confirmed": sorted({r.discriminant for r in results
                                  if r.verdict == "zero-confirmed"}, reverse=True),
        "undetermined": sum(1 for r in results if r.verdict == "undetermined"),
    }
    if config.out_format == "jsonl":
        out.emit([header] + rows)
    else:
        out.emit({"summary": header, "results": rows})
    if config.strict and header["undetermined"]:
        return 1
    return 0


def _cmd_collinear(config: RunConfig, out: _Output) -> int:
    policy = search.PrecisionPolicy(base_prec=config.prec_bits)
    rep = search.collinear_search(config.d_max, policy, cache=_cache(config))
    payload = {
        "d_max": rep.d_max,
        "points": rep.points,
        "triples_checked": rep.triples_checked,
        "collinear_triples": rep.hits,
        "undetermined": rep.undetermined,
    }
    out.emit(payload)
    if rep.hits or (config.strict and rep.undetermined):
        return 1 if config.strict else 0
    return 0


def _parse_map(obj: dict) -> modmaps.ModularMap:
    kind = obj["kind"]
    if "constant" in obj:
        c = obj["constant"]
        return modmaps.ModularMap.constant_map(kind, int(c["disc"]), int(c.get("class", 0)))
    return modmaps.ModularMap.nonconstant(kind, Fraction(obj["level"]), Fraction(obj["twist"]))


def _cmd_maps_det(config: RunConfig, out: _Output) -> int:
    with open(config.extra["maps_path"]) as fh:
        desc = json.load(fh)
    order = config.order if config.order is not None else 8
    fmaps = [_parse_map(m) for m in desc["f"]]
    gmaps = [_parse_map(m) for m in desc["g"]]
    split = modmaps.split_determinant(fmaps, gmaps, q_order=order)
    out.emit(split.to_json())
    return 0


def _cmd_sample(config: RunConfig, out: _Output) -> int:
    regime = config.extra.get("regime", bounds.REGIME_IM2)
    rep = bounds.sample_empirical(regime, config.extra.get("count", 100),
                                  seed=config.seed, prec=config.prec_bits)
    out.emit({
        "regime": rep.regime, "count": rep.count, "pass": rep.passed,
        "max_chi_hat": rep.max_chi_hat, "max_xi_hat": rep.max_xi_hat,
        "max_j_hat": rep.max_j_hat, "violations": rep.violations,
    })
    return 0 if rep.passed else 1


# -- worker pool -----------------------------------------------------------------


def _map_jobs(fn, jobs, workers: int):
    """Deterministic map: results yielded in submission order regardless of
    completion order."""
    if workers == 1 or len(jobs) <= 1:
        for job in jobs:
            yield fn(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, jobs)


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec-bits", type=int, default=128)
    common.add_argument("--order", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--format", dest="out_format", choices=["json", "jsonl", "table"],
                        default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--strict", action="store_true",
                        help="exit nonzero on any failed certificate or undetermined verdict")
    common.add_argument("--out", dest="out_path", default=None)

    ap = argparse.ArgumentParser(prog="chistar",
                                 description="q-expansions, certified chi* evaluation, "
                                             "class polynomials, bound certificates and "
                                             "special-point searches")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    p = add("expand", "exact q-expansion as JSON")
    p.add_argument("--series", required=True,
                   choices=["e2", "e4", "e6", "delta", "eta", "j", "chi", "xi", "chi-star"])

    p = add("eval", "certified evaluation at a point")
    p.add_argument("--tau-re", required=True)
    p.add_argument("--tau-im", required=True)
    p.add_argument("--function", required=True, choices=["j", "chi", "xi", "chi-star"])

    p = add("special", "special values per discriminant")
    p.add_argument("--disc", type=int, default=None)
    p.add_argument("--max-disc", type=int, default=100)

    p = add("classpoly", "class polynomials")
    p.add_argument("--disc", type=int, default=None)
    p.add_argument("--max-disc", type=int, default=100)
    p.add_argument("--kind", choices=["j", "chi-star"], default="chi-star")

    p = add("verify-bounds", "certificate table for the tail-bound chains")
    p.add_argument("--robin-n", type=int, default=500)

    p = add("ao-search", "exhaustive special-point search on a curve")
    p.add_argument("--poly", dest="poly_path", required=True)
    p.add_argument("--dmax-override", type=int, default=None)

    p = add("collinear-search", "collinear triples of pi-special points")
    p.add_argument("--dmax", type=int, default=20)

    p = add("maps-det", "split determinants for six chi-maps")
    p.add_argument("--maps", dest="maps_path", required=True)

    p = add("sample", "empirical bound sampling")
    p.add_argument("--regime", default=bounds.REGIME_IM2,
                   choices=[bounds.REGIME_FUND, bounds.REGIME_IM2, bounds.REGIME_IM15,
                            bounds.REGIME_LOW])
    p.add_argument("--count", type=int, default=100)
    return ap


_HANDLERS = {
    "expand": _cmd_expand,
    "eval": _cmd_eval,
    "special": _cmd_special,
    "classpoly": _cmd_classpoly,
    "verify-bounds": _cmd_verify_bounds,
    "ao-search": _cmd_ao_search,
    "collinear-search": _cmd_collinear,
    "maps-det": _cmd_maps_det,
    "sample": _cmd_sample,
}


def config_from_args(argv) -> RunConfig:
    ap = build_parser()
    ns = ap.parse_args(argv)
    extra = {}
    for key in ("series", "tau_re", "tau_im", "function", "disc", "kind", "poly_path",
                "dmax_override", "maps_path", "regime", "count", "robin_n"):
        if hasattr(ns, key):
            extra[key] = getattr(ns, key)
    if hasattr(ns, "max_disc"):
        d_max = ns.max_disc
    elif hasattr(ns, "dmax"):
        d_max = ns.dmax
    else:
        d_max = 100
    extra["prec_given"] = any(a.startswith("--prec-bits") for a in argv)
    return RunConfig(
        subcommand=ns.subcommand,
        prec_bits=ns.prec_bits,
        order=ns.order,
        d_max=d_max,
        workers=ns.workers,
        cache_dir=ns.cache_dir,
        out_format=ns.out_format,
        seed=ns.seed,
        strict=ns.strict,
        out_path=ns.out_path,
        extra=extra,
    )


def run(config: RunConfig) -> int:
    out = _Output(config)
    try:
        return _HANDLERS[config.subcommand](config, out)
    finally:
        out.close()


def main(argv=None) -> int:
    config = config_from_args(argv if argv is not None else sys.argv[1:])
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
