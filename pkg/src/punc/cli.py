"""
``punc`` command-line interface.

Exit codes: 0 success, 1 invalid or unparsable circuit, 2 usage error
(bad flags, wrong arity, oversized state space), 3 conversion infeasible.
The default numerical tolerance can be overridden with ``PUNC_TOL``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Callable, Optional, Sequence

import numpy as np

from punc import api, d_punc, fileio, oracle
from punc.errors import (
    AssignmentError,
    ConversionError,
    InvalidCircuitError,
    ParseError,
    PuncError,
    StateSpaceError,
    StructureError,
)
from punc.families import (
    NoisePunc,
    diagonal_punc_to_pc,
    noisy_punc_conditional,
    pc_to_diagonal_punc,
    psd_to_pure_punc,
)
from punc.generate import FAMILIES, GeneratorConfig, generate
from punc.linalg import DEFAULT_TOL
from punc.partition import MarginalQuery

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_CONVERSION = 0, 1, 2, 3
TOL_ENV = "PUNC_TOL"


class UsageError(Exception):
    pass


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0:
        raise UsageError(f"{TOL_ENV} must be positive")
    return tol


def parse_values(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise UsageError(f"cannot parse assignment {text!r}; expected v0,v1,...") from None


def parse_evidence(text: str) -> dict[int, int]:
    ev: dict[int, int] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        k, sep, v = item.partition("=")
        try:
            if not sep:
                raise ValueError
            ev[int(k)] = int(v)
        except ValueError:
            raise UsageError(f"cannot parse evidence item {item!r}; expected var=value") from None
    return ev


def fmt(p: float) -> str:
    return "%.17g" % p


# Conversions: (source family, target family) -> converter.
CONVERSIONS: dict[tuple[str, str], Callable] = {
    ("prob_circuit_pt", "sd_punc"): pc_to_diagonal_punc,
    ("sd_punc", "prob_circuit_pt"): diagonal_punc_to_pc,
    ("psd_circuit", "sd_punc"): psd_to_pure_punc,
    ("sd_punc", "d_punc"): lambda c, tol: d_punc.embed_sd(c),
    ("d_prob_circuit", "d_punc"): lambda c, tol: d_punc.dprob_to_dpunc(c),
    ("d_punc", "d_prob_circuit"): d_punc.scalar_shadow,
}


def _distribution(c, tol: float) -> oracle.CircuitDistribution:
    return oracle.enumerate(lambda x: api.probability(c, x, tol), api.cardinalities(c))


def cmd_validate(args, tol: float) -> int:
    c = fileio.read_file(args.file, validate=False)
    violations = api.validate(c, tol)
    for v in violations:
        print(v, file=sys.stderr)
    if violations:
        return EXIT_INVALID
    print(f"valid {fileio.family_of(c)}")
    return EXIT_OK


def cmd_prob(args, tol: float) -> int:
    c = fileio.read_file(args.file)
    x = parse_values(args.x)
    if isinstance(c, NoisePunc) and args.conditional:
        print(fmt(noisy_punc_conditional(c, x, tol)))
    else:
        print(fmt(api.probability(c, x, tol)))
    return EXIT_OK


def cmd_marginal(args, tol: float) -> int:
    c = fileio.read_file(args.file)
    cards = api.cardinalities(c)
    q = MarginalQuery.from_evidence(parse_evidence(args.evidence), len(cards))
    print(fmt(api.marginal(c, q, tol)))
    return EXIT_OK


def cmd_enumerate(args, tol: float) -> int:
    c = fileio.read_file(args.file)
    dist = _distribution(c, tol)
    sys.stdout.write(dist.to_text(args.delimiter))
    if args.figure:
        from punc.plots import plot_distribution

        plot_distribution(dist, args.figure, f"{fileio.family_of(c)}: mass {dist.mass:.6f}")
    return EXIT_OK


def cmd_convert(args, tol: float) -> int:
    c = fileio.read_file(args.file)
    source = fileio.family_of(c)
    fn = CONVERSIONS.get((source, args.to))
    if fn is None:
        supported = sorted(t for s, t in CONVERSIONS if s == source)
        print(f"no conversion from {source} to {args.to}; supported: {supported}", file=sys.stderr)
        return EXIT_CONVERSION
    try:
        out = fn(c, tol)
    except (ConversionError, StructureError) as exc:
        print(f"conversion infeasible: {exc}", file=sys.stderr)
        return EXIT_CONVERSION
    _, dev = oracle.distributions_equal(_distribution(c, tol), _distribution(out, tol), 0.0)
    data = fileio.write(out)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
        print(f"max_deviation {dev:.3e}")
    else:
        sys.stdout.write(data.decode())
        print(f"max_deviation {dev:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_random(args, tol: float) -> int:
    try:
        cfg = GeneratorConfig(
            seed=args.seed, num_vars=args.num_vars, cardinality=args.cardinality,
            leaf_dim=args.leaf_dim, max_internal_dim=args.max_internal_dim,
            kraus_count=args.kraus_count, family=args.family,
            structured=not args.unstructured, combine_mode=args.combine_mode,
        )
    except PuncError as exc:
        raise UsageError(str(exc)) from None
    data = fileio.write(generate(cfg))
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def cmd_bench(args, tol: float) -> int:
    c = fileio.read_file(args.file)
    cards = api.cardinalities(c)
    rng = np.random.default_rng(args.seed)
    times = []
    for _ in range(args.queries):
        keep = rng.random(len(cards)) < 0.5
        ev = {v: int(rng.integers(cards[v])) for v in range(len(cards)) if keep[v]}
        q = MarginalQuery.from_evidence(ev, len(cards))
        start = time.perf_counter()
        api.marginal(c, q, tol)
        times.append(time.perf_counter() - start)
    t = np.array(times)
    print("queries\tmean_s\tmedian_s\tmax_s")
    print(f"{len(t)}\t{t.mean():.6e}\t{np.median(t):.6e}\t{t.max():.6e}")
    if args.figure:
        from punc.plots import plot_timings

        plot_timings(times, args.figure)
    return EXIT_OK


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="punc", description="Positive unital circuits: validate, query, convert, generate.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a circuit file against its family's invariants")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("prob", help="probability of a total assignment")
    s.add_argument("file")
    s.add_argument("--x", required=True, help="comma-separated values, one per variable")
    s.add_argument("--conditional", action="store_true", help="for noise_punc files, divide by the normalizer")
    s.set_defaults(func=cmd_prob)

    s = sub.add_parser("marginal", help="probability of partial evidence, other variables summed out")
    s.add_argument("file")
    s.add_argument("--evidence", default="", help="var=value pairs, comma-separated")
    s.set_defaults(func=cmd_marginal)

    s = sub.add_parser("enumerate", help="brute-force probability table")
    s.add_argument("file")
    s.add_argument("--delimiter", default=" ")
    s.add_argument("--figure", help="also save a bar chart to this path")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("convert", help="convert between equivalent families")
    s.add_argument("file")
    s.add_argument("--to", required=True, choices=FAMILIES)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_convert)

    s = sub.add_parser("random", help="emit a seeded random circuit file")
    s.add_argument("--family", required=True, choices=FAMILIES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--num-vars", type=positive_int, default=4)
    s.add_argument("--cardinality", type=positive_int, default=2)
    s.add_argument("--leaf-dim", type=positive_int, default=2)
    s.add_argument("--max-internal-dim", type=positive_int, default=4)
    s.add_argument("--kraus-count", type=positive_int, default=2)
    s.add_argument("--combine-mode", choices=("kronecker", "hadamard"), default="kronecker")
    s.add_argument("--unstructured", action="store_true", help="d_punc/d_prob_circuit: mix different splits")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_random)

    s = sub.add_parser("bench", help="wall time of random marginal queries")
    s.add_argument("file")
    s.add_argument("--queries", type=positive_int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--figure", help="also save a timing histogram to this path")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, default_tol())
    except (UsageError, AssignmentError, StateSpaceError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidCircuitError as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return EXIT_INVALID
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PuncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
