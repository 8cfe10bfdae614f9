"""Command-line entry point ``keller-lab``.

Tables go out as CSV, maps and domains as JSON.  Exit codes:
0 success, 2 unparseable input, 3 violated precondition, 4 failed check,
5 too many degenerate fibers.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from . import __version__
from .asymptotics import CanonicalError, CanonicalRational, NotPolynomialError, substitute, validate_canonical
from .domains import CharacteristicDomain, DomainInvariantError, build_domain, load_domain
from .fiber import DegenerateFiberError, geometric_degree, solve_fiber
from .poly import PolyMap, compose, dumps_map, is_keller_normalized, load_map, parse_poly
from .semigroup import (DegreeCapError, bn_sampler, degree_multiplicativity, iterate,
                        left_injectivity_probe, primality_classify, right_injectivity_probe)
from .volume import (DegenerateOverflowError, PreconditionError, combined_sigma, contraction_experiment,
                     isometry_experiment, jacobian_volume, geometric_volume, preimage_count_volume, rho,
                     volume_bounds_check)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_ASSERTION = 4
EXIT_DEGENERATE = 5

SEED_ENV = "KELLER_LAB_SEED"
EXPERIMENTS = ("isometry", "contraction", "bounds", "degree-mult", "metric-axioms", "volume-oracle")


class ParseFailure(Exception):
    pass


class AssertionFailure(Exception):
    pass


@dataclass
class ExperimentConfig:
    name: str
    maps: Dict[str, str] = field(default_factory=dict)
    domain: Optional[str] = None
    samples: int = 100_000
    seed: int = 0
    sigma: float = 3.0
    out: Optional[str] = None
    threads: Optional[int] = None

    def validate(self) -> None:
        for role, path in self.maps.items():
            if not os.path.exists(path):
                raise ParseFailure(f"{role} map file {path!r} does not exist")
        if self.domain is not None and not os.path.exists(self.domain):
            raise ParseFailure(f"domain file {self.domain!r} does not exist")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _read_map(path: str) -> PolyMap:
    try:
        return load_map(path)
    except (OSError, ValueError, TypeError) as exc:
        raise ParseFailure(f"cannot read map {path!r}: {exc}") from exc


def _read_domain(path: Optional[str]) -> CharacteristicDomain:
    if path is None:
        return build_domain(2.0, 1, 5)
    try:
        return load_domain(path)
    except (OSError, ValueError, TypeError, DomainInvariantError) as exc:
        raise ParseFailure(f"cannot read domain {path!r}: {exc}") from exc


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ParseFailure(f"{SEED_ENV}={env!r} is not an integer") from exc


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return f"{v.real!r}{'+' if v.imag >= 0 else '-'}{abs(v.imag)!r}j"
    return str(v)


def _emit_csv(rows: List[Dict[str, object]], out: Optional[str]) -> None:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _fmt(v) for k, v in r.items()})
    _emit_text(buf.getvalue(), out)


def _emit_text(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_target(text: str):
    try:
        parts = [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise ParseFailure(f"bad target {text!r}") from exc
    if len(parts) != 4:
        raise ParseFailure("target needs four numbers: a_re,a_im,b_re,b_im")
    return complex(parts[0], parts[1]), complex(parts[2], parts[3])


def _stats(seed: int, n: int, se: float = 0.0) -> Dict[str, object]:
    return {"seed": seed, "n": n, "std_error": se}


def _check(ok: bool, what: str) -> None:
    if not ok:
        raise AssertionFailure(what)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_fiber(a) -> None:
    f = _read_map(a.map)
    target = _parse_target(a.target)
    res = solve_fiber(f, target)
    pts = ";".join(f"{_fmt(x)} {_fmt(y)}" for x, y in res.points)
    _emit_csv([{"target": f"{_fmt(target[0])} {_fmt(target[1])}", "count": res.count, "points": pts,
                "residual_max": res.residual_max, "status": res.status, "bezout_bound": res.bezout_bound,
                **_stats(a.seed, 1)}], a.out)
    if res.status == "degenerate":
        raise DegenerateFiberError("degenerate fiber")


def cmd_degree(a) -> None:
    f = _read_map(a.map)
    est = geometric_degree(f, a.targets, a.seed)
    hist = " ".join(f"{k}:{v}" for k, v in est.histogram.items())
    _emit_csv([{"d": est.d, "confident": est.confident, "histogram": hist, **_stats(a.seed, est.samples)}], a.out)


def cmd_compose(a) -> None:
    _emit_text(dumps_map(compose(_read_map(a.f), _read_map(a.g))), a.out)


def cmd_check(a) -> None:
    f = _read_map(a.map)
    if not f.exact:
        raise PreconditionError("normalization check needs an exact map")
    rep = is_keller_normalized(f, strict=not a.relaxed)
    out = dict(rep.as_dict())
    out["mode"] = "relaxed" if a.relaxed else "strict"
    _emit_text(json.dumps(out, sort_keys=True) + "\n", a.out)
    _check(rep.passed, "map is not normalized")


def cmd_asym(a) -> None:
    f = _read_map(a.map)
    try:
        phi = parse_poly(a.phi)
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc
    r = CanonicalRational(a.alpha, a.beta, phi)
    try:
        validate_canonical(a.alpha, a.beta, phi)
        validity = "valid"
    except CanonicalError as exc:
        validity = f"invalid ({exc.invariant}: {exc})"
    pair = substitute(f, r)
    lines = [f"canonical: {validity}", f"first: {pair.first}", f"second: {pair.second}",
             f"polynomial: {'true' if pair.is_polynomial() else 'false'}"]
    if pair.is_polynomial():
        lines.append("dual: " + dumps_map(pair.to_map()).strip())
    _emit_text("\n".join(lines) + "\n", a.out)


def cmd_domain(a) -> None:
    d = build_domain(a.radius, a.slices, a.stars, shape=a.shape, seed_geometry=a.angle)
    _emit_text(d.dumps() + "\n", a.out)


def cmd_metric(a) -> None:
    g1, g2 = _read_map(a.g1), _read_map(a.g2)
    d = _read_domain(a.domain)
    est = rho(g1, g2, d, a.samples, a.seed, a.threads)
    _emit_csv([{"value": est.value, "std_error": est.std_error, "n": est.n, "discarded": est.discarded,
                "seed": est.seed, "g1_side": est.g1_side, "g2_side": est.g2_side,
                "resampled": est.resampled}], a.out)


def cmd_probe(a) -> None:
    f = _read_map(a.map)
    fn = left_injectivity_probe if a.side == "left" else right_injectivity_probe
    p = fn(f, a.trials, a.seed)
    _emit_csv([{"side": p.side, "trials": len(p.verdicts), "collisions": p.collisions,
                "coincidences": len(p.coincidences), **_stats(a.seed, len(p.verdicts))}], a.out)
    _check(p.passed, f"{p.collisions} collisions")


def cmd_classify(a) -> None:
    f = _read_map(a.map)
    rep = primality_classify(f, a.targets, a.seed)
    _emit_csv([{"d": rep.d, "classification": rep.classification, **_stats(a.seed, a.targets)}], a.out)


def cmd_iterate(a) -> None:
    _emit_text(dumps_map(iterate(_read_map(a.map), a.n, a.cap)), a.out)


def cmd_bn(a) -> None:
    rep = bn_sampler(_read_map(a.map), a.n, a.grid)
    hist = " ".join(f"{k}:{v}" for k, v in rep.histogram.items())
    _emit_csv([{"d_f": rep.d_f, "histogram": hist, "nested": rep.nested, "dense_fraction": rep.dense_fraction,
                "degenerate": rep.degenerate, **_stats(a.seed, rep.samples)}], a.out)
    _check(rep.nested and rep.dense, "B_n checks failed")


def run(config: ExperimentConfig) -> List[Dict[str, object]]:
    """Run one experiment; returns its CSV rows, raising AssertionFailure on a failed check."""
    config.validate()
    maps = {k: _read_map(v) for k, v in config.maps.items()}
    n, seed, k, thr = config.samples, config.seed, config.sigma, config.threads

    def need(*roles):
        missing = [r for r in roles if r not in maps]
        if missing:
            raise PreconditionError(f"experiment {config.name} needs --{' --'.join(missing)}")
        return [maps[r] for r in roles]

    name = config.name
    if name == "isometry":
        f, g1, g2 = need("f", "g1", "g2")
        if not is_keller_normalized(f, strict=False).passed:
            raise PreconditionError("isometry needs det J_f ≡ 1")
        rep = isometry_experiment(f, g1, g2, _read_domain(config.domain), n, seed, thr)
        holds = abs(rep.difference) <= k * rep.sigma
        row = {"experiment": name, "rho_base": rep.base.value, "rho_composed": rep.composed.value,
               "difference": rep.difference, "ratio": rep.ratio, "holds": holds,
               **_stats(seed, n, rep.sigma)}
        ok = holds
    elif name == "contraction":
        f, g1, g2 = need("f", "g1", "g2")
        rep = contraction_experiment(f, g1, g2, _read_domain(config.domain), n, seed, thr)
        sig = combined_sigma(rep.lhs.std_error, rep.rhs.std_error)
        plain = rep.lhs.value <= rep.rhs.value + k * sig
        weighted = rep.lhs.value <= rep.weighted_rhs.value + k * combined_sigma(
            rep.lhs.std_error, rep.weighted_rhs.std_error)
        row = {"experiment": name, "lhs": rep.lhs.value, "rhs": rep.rhs.value,
               "weighted_rhs": rep.weighted_rhs.value, "ratio": rep.ratio, "d_f": rep.d_f,
               "keller": rep.keller, "holds": plain, "weighted_holds": weighted, **_stats(seed, n, sig)}
        ok = plain if rep.keller else weighted
    elif name == "bounds":
        (f,) = need("f")
        rep = volume_bounds_check(f, _read_domain(config.domain), n, seed, thr)
        upper = rep.image.value <= rep.region_vol + k * rep.image.std_error
        lower = rep.region_vol <= rep.d_f * (rep.image.value + k * rep.image.std_error)
        row = {"experiment": name, "region_vol": rep.region_vol, "image_vol": rep.image.value, "d_f": rep.d_f,
               "upper_ok": upper, "lower_ok": lower, "discarded": rep.image.discarded,
               **_stats(seed, n, rep.image.std_error)}
        ok = upper and lower
    elif name == "degree-mult":
        (f,) = need("f")
        g = maps.get("g", f)
        rep = degree_multiplicativity(f, g, 25, seed)
        if "g" in maps:
            row = {"experiment": name, "d_f": rep.d_f, "d_g": rep.d_g, "d_fg": rep.d_fg}
        else:
            row = {"experiment": name, "d_f": rep.d_f, "d_ff": rep.d_fg}
        row.update(holds=rep.holds, **_stats(seed, 25))
        ok = rep.holds
    elif name == "metric-axioms":
        g1, g2, g3 = need("g1", "g2", "g3")
        d = _read_domain(config.domain)
        r11 = rho(g1, g1, d, n, seed, thr)
        r12 = rho(g1, g2, d, n, seed, thr)
        r21 = rho(g2, g1, d, n, seed, thr)
        r23 = rho(g2, g3, d, n, seed + 1, thr)
        r13 = rho(g1, g3, d, n, seed + 2, thr)
        sig = combined_sigma(r12.std_error, r23.std_error, r13.std_error)
        identity = r11.value == 0.0
        symmetric = r12.value == r21.value
        triangle = r13.value <= r12.value + r23.value + k * sig
        row = {"experiment": name, "rho_11": r11.value, "rho_12": r12.value, "rho_21": r21.value,
               "rho_23": r23.value, "rho_13": r13.value, "identity": identity, "symmetric": symmetric,
               "triangle": triangle, **_stats(seed, n, sig)}
        ok = identity and symmetric and triangle
    elif name == "volume-oracle":
        (g,) = need("f")
        d = _read_domain(config.domain)
        mult = jacobian_volume(g, d, n, seed, thr)
        oracle = preimage_count_volume(g, d, n, seed, thr)
        geo = geometric_volume(g, d, n, seed, thr)
        sig = combined_sigma(mult.std_error, oracle.std_error)
        agree = abs(mult.value - oracle.value) <= k * sig
        row = {"experiment": name, "mult_vol": mult.value, "oracle_vol": oracle.value,
               "geometric_vol": geo.value, "excess": mult.value - geo.value, "agree": agree,
               "discarded": oracle.discarded + geo.discarded, **_stats(seed, n, sig)}
        ok = agree
    else:
        raise ParseFailure(f"unknown experiment {name!r}")
    _emit_csv([row], config.out)
    if not ok:
        raise AssertionFailure(f"{name}: check failed")
    return [row]


def cmd_experiment(a) -> None:
    maps = {role: getattr(a, role) for role in ("f", "g", "g1", "g2", "g3") if getattr(a, role)}
    if a.map and "f" not in maps:
        maps["f"] = a.map
    cfg = ExperimentConfig(name=a.name, maps=maps, domain=a.domain, samples=a.samples, seed=a.seed,
                           sigma=a.sigma, out=a.out, threads=a.threads)
    run(cfg)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--samples", type=int, default=100_000, help="Monte Carlo sample count")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    ap = argparse.ArgumentParser(prog="keller-lab", description="Polynomial étale map laboratory.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fiber", parents=[common], help="solve F(x, y) = target")
    p.add_argument("--map", required=True)
    p.add_argument("--target", required=True, help="a_re,a_im,b_re,b_im")
    p.set_defaults(func=cmd_fiber)

    p = sub.add_parser("degree", parents=[common], help="estimate the geometric degree")
    p.add_argument("--map", required=True)
    p.add_argument("--targets", type=int, default=25)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("compose", parents=[common], help="write f∘g")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("check", parents=[common], help="Keller normalization predicate")
    p.add_argument("--map", required=True)
    p.add_argument("--relaxed", action="store_true", help="require only det J ≡ 1")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("asym", parents=[common], help="substitute a canonical rational map")
    p.add_argument("--map", required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.add_argument("--phi", default="0")
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("domain", parents=[common], help="build a characteristic domain")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--slices", type=int, default=1)
    p.add_argument("--stars", type=int, default=5)
    p.add_argument("--shape", choices=("ball", "polydisk"), default="ball")
    p.add_argument("--angle", type=float, default=0.0, help="angular offset of the star rays")
    p.set_defaults(func=cmd_domain)

    p = sub.add_parser("metric", parents=[common], help="estimate rho_D(g1, g2)")
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--domain", default=None)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("probe", parents=[common], help="injectivity of left/right composition")
    p.add_argument("side", choices=("left", "right"))
    p.add_argument("--map", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("classify", parents=[common], help="primality by geometric degree")
    p.add_argument("--map", required=True)
    p.add_argument("--targets", type=int, default=25)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("iterate", parents=[common], help="n-fold self-composite")
    p.add_argument("--map", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--cap", type=int, default=512, help="maximum allowed deg(f)^n")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("bn", parents=[common], help="fiber-size histogram on a target grid")
    p.add_argument("--map", required=True)
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--grid", type=int, default=10)
    p.set_defaults(func=cmd_bn)

    p = sub.add_parser("experiment", parents=[common], help="run a packaged experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    for role in ("map", "f", "g", "g1", "g2", "g3"):
        p.add_argument(f"--{role}", default=None)
    p.add_argument("--domain", default=None)
    p.add_argument("--sigma", type=float, default=3.0, help="tolerance in standard errors")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_PARSE
    try:
        args.seed = _resolve_seed(args.seed)
        args.func(args)
    except ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PreconditionError, DegreeCapError, NotPolynomialError, CanonicalError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except AssertionFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except (DegenerateOverflowError, DegenerateFiberError) as exc:
        print(f"degenerate fibers: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
