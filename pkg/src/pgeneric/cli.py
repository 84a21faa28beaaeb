"""Command-line front end.

Every report embeds the manifest that produced it (command plus all
parameters); ``pgeneric replay MANIFEST`` re-runs it and emits identical
bytes. Exit codes: 0 success, 2 precondition violation, 3 resource cap,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .constructions import FLAVORS, ZSequence, build_schedule, classify_z, f_bold, f_d2
from .digits import (
    BufferStream,
    DigitStream,
    read_digit_file,
    stream_champernowne,
    stream_constant,
    stream_debruijn,
    stream_extend_debruijn,
    stream_random,
    write_digit_file,
)
from .errors import NoAdmissibleDigit, PreconditionError, ResourceCapError
from .measure import (
    AlgorithmConfig,
    BadSpec,
    bad_k,
    bad_set,
    check_fact1_bound,
    e_set,
    lambda_set,
    run_algorithm,
)
from .stats import (
    PoissonRef,
    as_lambda,
    count_distribution,
    discrepancy,
    normality_deviation,
    per_j_deviation,
    poisson_dict,
    tv_distance,
    tv_poisson,
    weakly_poisson_scan,
    window_count,
    z_deviation,
    z_profile,
)
from .words import parse_word

EXIT_OK, EXIT_PRECONDITION, EXIT_CAP, EXIT_IO = 0, 2, 3, 4


def rational(x) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator, "value": float(x)}


# ---------------------------------------------------------------------------
# sources


def parse_source(spec: str, base: int, seed: int) -> DigitStream:
    """``random[:SEED]``, ``constant:D``, ``champernowne``, ``debruijn:K``,
    ``extdebruijn:K``, ``file:PATH[:ascii|packed]``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "random":
            return stream_random(base, int(rest) if rest else seed)
        if kind == "constant":
            return stream_constant(base, int(rest))
        if kind == "champernowne":
            return stream_champernowne(base)
        if kind == "debruijn":
            return stream_debruijn(base, int(rest))
        if kind == "extdebruijn":
            return stream_extend_debruijn(base, int(rest))
    except ValueError as exc:
        if isinstance(exc, PreconditionError):
            raise
        raise PreconditionError(f"bad source spec {spec!r}: {exc}") from None
    if kind == "file":
        path, fmt = rest, "ascii"
        if rest.endswith((":ascii", ":packed")):
            path, _, fmt = rest.rpartition(":")
        buf = read_digit_file(path, fmt, base if fmt == "ascii" else None)
        return BufferStream(buf, origin=f"{path}:{fmt}")
    raise PreconditionError(f"unknown source kind {kind!r}")


def _materialize(stream: DigitStream, n: int):
    if stream.length is not None and stream.length < n:
        raise PreconditionError(f"source has {stream.length} digits, {n} needed")
    return stream.buffer(n)


# ---------------------------------------------------------------------------
# commands; each returns a report dict


def profile_report(prof) -> dict:
    dev = per_j_deviation(prof)
    ref = PoissonRef.build(prof.lam, prof.j_max)
    sup, l1 = z_deviation(prof, ref)
    return {
        "base": prof.base,
        "k": prof.k,
        "lambda": f"{prof.lam.numerator}/{prof.lam.denominator}",
        "convention": prof.convention,
        "window_count": prof.window_count,
        "z": [rational(z) for z in prof.z],
        "z_above": rational(prof.z_above),
        "pmf": [float(p) for p in ref.pmf],
        "deviation": [float(d) for d in dev],
        "sup_dev": sup,
        "l1_dev": l1,
    }


def cmd_gen(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    buf = _materialize(stream, a.length)
    write_digit_file(a.out, buf, a.file_format)
    return {"source": stream.descriptor(), "length": a.length, "out": str(a.out), "file_format": a.file_format}


def cmd_zstats(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    lam = as_lambda(a.lam)
    need = window_count(stream.base, a.k, lam, a.convention) + a.k - 1
    prof = z_profile(_materialize(stream, need), a.k, lam, a.j_max, a.convention, threads=a.threads)
    return {"source": stream.descriptor(), "profile": profile_report(prof)}


def cmd_scan(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    lams = [as_lambda(v) for v in a.lambdas.split(",")]
    js = [int(v) for v in a.js.split(",")]
    ks = list(range(a.k_min, a.k_max + 1))
    rows, per_k = [], []
    if ks:
        need = max(window_count(stream.base, k, lam, a.convention) + k - 1 for k in ks for lam in lams)
        buf = _materialize(stream, need)
        for lam in lams:
            for k in ks:
                prof = z_profile(buf, k, lam, max(max(js), a.j_max), a.convention, threads=a.threads)
                dev = per_j_deviation(prof)
                sup, l1 = z_deviation(prof)
                per_k.append({"k": k, "lambda": str(lam), "sup_dev": sup, "l1_dev": l1})
                for j in js:
                    rows.append({"k": k, "lambda": str(lam), "j": j, "z": float(prof[j]), "deviation": float(dev[j])})
    return {"source": stream.descriptor(), "convention": a.convention, "rows": rows, "per_k": per_k}


def cmd_construct(a) -> dict:
    z = ZSequence.parse(a.z)
    exps = [int(v) for v in a.exponents.split(",")] if a.exponents else None
    sched = build_schedule(a.flavor, z, a.steps, a.base, k0=a.k0, exponents=exps)
    x = parse_source(a.x, a.base, a.seed)
    stream = (f_d2 if a.flavor.startswith("d2") else f_bold)(z, sched, x)
    length = a.length or a.base ** sched.exponents[-1]
    write_digit_file(a.out, _materialize(stream, length), a.file_format)
    return {
        "schedule": sched.to_dict(),
        "classification": classify_z(z),
        "x": x.descriptor(),
        "length": length,
        "out": str(a.out),
        "file_format": a.file_format,
    }


def _set_report(s) -> dict:
    return {"measure": rational(s.measure()), "level": s.level, "ranges": len(s)}


def cmd_measure(a) -> dict:
    eps = Fraction(a.epsilon) if a.epsilon else None
    if a.what == "bad":
        spec = BadSpec(a.base, as_lambda(a.lam), a.k, a.j, eps)
        return {"lambda": str(spec.lam), "k": a.k, "j": a.j, "epsilon": str(spec.eps), "set": _set_report(bad_set(spec, a.cap))}
    if a.what == "badk":
        return {"k": a.k, "lambdas": [str(l) for l in lambda_set(a.k)], "set": _set_report(bad_k(a.base, a.k, eps, a.cap))}
    if a.what == "eset":
        return {"k_range": [a.k_lo, a.k_hi], "set": _set_report(e_set(a.base, a.k_lo, a.k_hi, eps, a.cap))}
    if a.what == "fact1":
        return {"rows": [check_fact1_bound(a.base, k, a.cap).to_dict() for k in range(a.k_lo, a.k_hi)]}
    if a.what == "algorithm":
        if a.square_schedule:
            cfg = AlgorithmConfig.square(a.base, a.n0, a.steps, a.cap)
        else:
            ranges = tuple(tuple(int(v) for v in r.split("-")) for r in a.k_ranges.split(",")) if a.k_ranges else ()
            thr = "square" if a.threshold == "square" else tuple(Fraction(t) for t in a.threshold.split(","))
            cfg = AlgorithmConfig(a.base, a.n0, a.steps, ranges, thr, eps, a.cap)
        res = run_algorithm(cfg)
        if a.trace:
            lines = (json.dumps(r.to_dict(), sort_keys=True) for r in res.trace)
            Path(a.trace).write_text("".join(line + "\n" for line in lines))
        return {
            "config": cfg.to_dict(),
            "digits": "".join(str(d) for d in res.digits),
            "trace": [r.to_dict() for r in res.trace],
        }
    raise PreconditionError(f"unknown measure subcommand {a.what!r}")


def cmd_tv(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    lo, hi = as_lambda(a.lam), as_lambda(a.lam2)
    if hi < lo:
        lo, hi = hi, lo
    size = stream.base**a.k
    need = (hi.numerator * size) // hi.denominator + a.k - 1
    buf = _materialize(stream, need)
    d_lo = count_distribution(buf, a.k, 0, lo)
    d_hi = count_distribution(buf, a.k, 0, hi)
    return {
        "source": stream.descriptor(),
        "k": a.k,
        "lambda": str(lo),
        "lambda2": str(hi),
        "tv_empirical": tv_distance(d_hi, d_lo),
        "tv_poisson": tv_poisson(lo, hi),
        "tv_empirical_vs_poisson": tv_distance(d_hi, poisson_dict(hi)),
        "interval_bound": float(hi - lo),
    }


def cmd_normality(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    rep = normality_deviation(_materialize(stream, a.n), a.n, a.max_len)
    return {
        "source": stream.descriptor(),
        "n": a.n,
        "per_length": [rational(d) for d in rep.per_length],
        "sup": rational(rep.sup),
    }


def cmd_discrepancy(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    word = parse_word(a.word, stream.base)
    rep = discrepancy(_materialize(stream, a.n), word, a.n)
    return {"source": stream.descriptor(), "word": a.word, "n": a.n, "discrepancy": rational(rep.value)}


def cmd_weakly(a) -> dict:
    stream = parse_source(a.source, a.base, a.seed)
    lam = as_lambda(a.lam)
    ks = range(a.k_min, a.k_max + 1)
    need = max((window_count(stream.base, k, lam, a.convention) + k - 1 for k in ks), default=0)
    hits = weakly_poisson_scan(_materialize(stream, need), lam, a.j, a.epsilon, ks, a.convention)
    return {"source": stream.descriptor(), "lambda": str(lam), "j": a.j, "epsilon": a.epsilon, "witnesses": hits}


COMMANDS = {
    "gen": cmd_gen,
    "zstats": cmd_zstats,
    "scan": cmd_scan,
    "construct": cmd_construct,
    "measure": cmd_measure,
    "tv": cmd_tv,
    "normality": cmd_normality,
    "discrepancy": cmd_discrepancy,
    "weakly": cmd_weakly,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--base", type=int, default=2)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--convention", choices=("A", "B"), default="A")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="pgeneric", description="Poisson genericity statistics of digit streams.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a digit file")
    p.add_argument("source")
    p.add_argument("length", type=int)
    p.add_argument("out")
    p.add_argument("--file-format", choices=("ascii", "packed"), default="ascii")

    p = sub.add_parser("zstats", parents=[common], help="Z-profile for one (k, lambda)")
    p.add_argument("source")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", default="1")
    p.add_argument("--j-max", type=int, default=64)

    p = sub.add_parser("scan", parents=[common], help="deviations over a range of k")
    p.add_argument("source")
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--lambdas", default="1")
    p.add_argument("--js", default="0,1,2")
    p.add_argument("--j-max", type=int, default=64, help="buckets entering sup_dev and l1_dev")

    p = sub.add_parser("construct", parents=[common], help="write a reduction-map stream")
    p.add_argument("flavor", choices=FLAVORS)
    p.add_argument("z", help='z-spec, e.g. "even=const:4,odd=id" or "3,4,5;tail=const:2"')
    p.add_argument("out")
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--k0", type=int)
    p.add_argument("--exponents", help="explicit k_0,...,k_steps")
    p.add_argument("--x", default="random", help="source spec of the underlying stream")
    p.add_argument("--length", type=int)
    p.add_argument("--file-format", choices=("ascii", "packed"), default="ascii")

    p = sub.add_parser("measure", parents=[common], help="exact b-adic measures")
    p.add_argument("what", choices=("bad", "badk", "eset", "fact1", "algorithm"))
    p.add_argument("-k", type=int, default=2)
    p.add_argument("-j", type=int, default=0)
    p.add_argument("--lambda", dest="lam", default="1")
    p.add_argument("--epsilon")
    p.add_argument("--k-lo", type=int, default=2)
    p.add_argument("--k-hi", type=int, default=3)
    p.add_argument("--cap", type=int, default=1 << 24)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--k-ranges", help='per-step ranges "2-3,3-4" (half-open)')
    p.add_argument("--threshold", default="square", help='"square" (b^(-2n)) or comma-separated fractions')
    p.add_argument("--square-schedule", action="store_true", help="use N_n = b^(2n) ranges")
    p.add_argument("--trace", help="also write the per-step trace as JSON lines")

    p = sub.add_parser("tv", parents=[common], help="total variation between count laws")
    p.add_argument("source")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--lambda2", dest="lam2", required=True)

    p = sub.add_parser("normality", parents=[common], help="block-frequency deviations")
    p.add_argument("source")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--max-len", type=int, default=4)

    p = sub.add_parser("discrepancy", parents=[common], help="(w, n)-discrepancy")
    p.add_argument("source")
    p.add_argument("word")
    p.add_argument("-n", type=int, required=True)

    p = sub.add_parser("weakly", parents=[common], help="k with small Z deviation")
    p.add_argument("source")
    p.add_argument("--lambda", dest="lam", default="1")
    p.add_argument("-j", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)

    p = sub.add_parser("replay", help="re-run the manifest stored in a report")
    p.add_argument("manifest")
    p.add_argument("--output", "-o")
    return parser


MANIFEST_SKIP = {"output", "func"}


def manifest_of(args: argparse.Namespace) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in MANIFEST_SKIP}
    return {"tool": "pgeneric", "version": __version__, "command": args.command, "params": params}


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list) and value and not isinstance(value[0], dict):
        out[prefix] = ";".join(str(v) for v in value)
    elif not isinstance(value, list):
        out[prefix] = value


def render_csv(report: dict) -> str:
    """Lossy CSV mirror: one row per j for profiles, one row per entry for tables."""
    body = report["result"]
    rows: list[dict] = []
    if "profile" in body:
        prof = body["profile"]
        for j, (z, pmf, dev) in enumerate(zip(prof["z"], prof["pmf"], prof["deviation"])):
            rows.append({"base": prof["base"], "k": prof["k"], "lambda": prof["lambda"],
                         "convention": prof["convention"], "j": j, "z": z["value"], "pmf": pmf, "deviation": dev})
    else:
        table = next((v for v in body.values() if isinstance(v, list) and v and isinstance(v[0], dict)), None)
        if table is not None:
            for item in table:
                flat: dict = {}
                _flatten("", item, flat)
                rows.append(flat)
        else:
            flat = {}
            _flatten("", body, flat)
            rows.append(flat)
    if not rows:
        return ""
    fields = list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(report)
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def execute(args: argparse.Namespace) -> str:
    result = COMMANDS[args.command](args)
    report = {"manifest": manifest_of(args), "result": result}
    return render(report, args.format)


def args_from_manifest(manifest: dict) -> argparse.Namespace:
    if manifest.get("tool") != "pgeneric":
        raise PreconditionError("not a pgeneric manifest")
    params = dict(manifest["params"])
    if params.get("command") != manifest["command"] or manifest["command"] not in COMMANDS:
        raise PreconditionError("manifest command is inconsistent")
    return argparse.Namespace(**params)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            data = json.loads(Path(args.manifest).read_text())
            out_path = args.output
            args = args_from_manifest(data.get("manifest", data))
            args.output = out_path
        text = execute(args)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NoAdmissibleDigit as exc:
        print(f"no admissible digit: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
