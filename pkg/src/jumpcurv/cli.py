"""Command-line front end.

Exit status: 0 on success, 2 when an audit or claim check fails, 1 on
usage errors, unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from typing import Sequence

from . import families
from .birth_death import chain_metric, poisson_metric, reference_case_solver, w1_decay_certificate
from .certificate import Certificate
from .comparison import dissipative_certificate, zhong_yang_bound
from .curvature import curvature_lower_bound, optimal_coupling_rates
from .glauber import (block_kappa0, dobrushin_coefficients, dobrushin_curvature, dobrushin_matrix,
                      glauber_block_bound, glauber_certificate, queue_curvature, spin_curvature)
from .graph_model import Generator, Metric, discrete_metric, graph_metric
from .io import Bundle, read_file, write_chain, write_claim, write_generator, write_metric
from .lyapunov import (LyapunovData, best_beta, curvature_pseudometric, fit_drift, lyapunov_kappa,
                       minorization_pseudometric, occupation_pseudometric)
from .numeric import Number, format_number, leq, parse_number
from .verifier import contraction_audit, eigen_vs_certificate

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _times(text: str | None) -> list[float] | None:
    if not text:
        return None
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad --tgrid {text!r}") from None
    if not values or any(t < 0 for t in values):
        raise UsageError("--tgrid needs nonnegative times")
    return values


def _load(path: str, args) -> Bundle:
    return read_file(path, args.mode)


def _generator(bundle: Bundle, args) -> Generator:
    gen = bundle.generator(args.trunc)
    return gen.to_float() if args.mode == "float" else gen


def _metric(bundle: Bundle, gen: Generator, args) -> Metric:
    if getattr(args, "metric", None):
        return _load(args.metric, args).metric(gen, args.trunc)
    return bundle.metric(gen, args.trunc)


def _check_claim(kappa: Number, claim: Number | None, what: str) -> int:
    if claim is None:
        return EXIT_OK
    if leq(claim, kappa):
        sys.stderr.write(f"claim kappa={format_number(claim)} confirmed by {what} {format_number(kappa)}\n")
        return EXIT_OK
    sys.stderr.write(f"claim kappa={format_number(claim)} exceeds {what} {format_number(kappa)}\n")
    return EXIT_FAIL


def cmd_curvature(args) -> int:
    bundle = _load(args.input, args)
    gen = _generator(bundle, args)
    d = _metric(bundle, gen, args)
    report = curvature_lower_bound(gen, d, edges_only=True if args.edges_only else None, jobs=args.jobs)
    _emit(report.to_csv(), args.out)
    return _check_claim(report.kappa, bundle.claim_kappa, "global curvature")


def cmd_metric_design(args) -> int:
    method = args.method
    if method == "case":
        if args.a is None or args.b is None:
            raise UsageError("--method case needs --a and --b (and --D unless a > b)")
        a, b = parse_number(args.a, args.mode), parse_number(args.b, args.mode)
        design = reference_case_solver(a, b, args.D)
        lines = [f"case {design.case}", f"kappa {format_number(design.kappa)}"]
        if args.D is not None:
            lines.append("profile " + " ".join(format_number(design.value(n)) for n in range(args.D + 1)))
        lines += [f"note {n}" for n in design.notes]
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    if args.input is None:
        raise UsageError(f"--method {method} needs an input file")
    bundle = _load(args.input, args)
    if method in ("poisson", "decay"):
        chain = bundle.chain(args.trunc)
        if method == "poisson":
            m = chain.mean()
            design = poisson_metric(chain, lambda n: n - m)
            metric = chain_metric(chain, design.h)
            cert = Certificate(design.kappa, metric, 1, "ricci",
                               [f"Poisson metric for g(n) = n - mean, K(g) = {format_number(design.K_g)}",
                                f"k(g) = {format_number(design.k_g)}",
                                f"truncation mass mu(D) = {format_number(design.tail)}"],
                               "poisson metric", list(design.h))
        else:
            alpha = parse_number(args.alpha, args.mode) if args.alpha else None
            dec = w1_decay_certificate(chain, alpha)
            gen = chain.to_generator()
            cert = Certificate(dec.delta, graph_metric(gen.graph), dec.K, "w1",
                               [f"case {dec.case} of the Poisson-metric decay bound"], "graph metric decay")
    elif method == "dissipative":
        gen = _generator(bundle, args)
        ricci, decay, design = dissipative_certificate(gen, args.N)
        cert = decay if args.which == "decay" else ricci
    elif method == "zhong-yang":
        gen = _generator(bundle, args)
        a = parse_number(args.a, args.mode) if args.a else None
        cert = zhong_yang_bound(gen, a)
    else:
        raise UsageError(f"unknown method {method!r}")
    _emit(cert.to_text(include_table=True), args.out)
    return EXIT_OK


def _lyapunov_pseudo(kind: str, gen: Generator, K: set[str]):
    if kind == "minorization":
        return minorization_pseudometric(gen, K)
    if kind == "curvature":
        return curvature_pseudometric(gen, K)
    if kind == "occupation":
        dm = discrete_metric(gen.vertices)
        couplings = {(x, y): optimal_coupling_rates(gen, dm, x, y)
                     for x in gen.vertices for y in gen.vertices if x != y}
        return occupation_pseudometric(couplings, K, gen.vertices)
    raise UsageError(f"unknown pseudo-metric {kind!r}")


def cmd_lyapunov(args) -> int:
    bundle = _load(args.input, args)
    gen = _generator(bundle, args)
    source = _load(args.data, args) if args.data else bundle
    V, r, b, K = source.lyapunov_parts()
    missing = [v for v in gen.vertices if v not in V]
    if missing:
        raise ValueError(f"V has no value at {missing[0]}")
    if r is None or b is None:
        fr, fb = fit_drift(gen, V, K, r)
        r, b = (r if r is not None else fr), (b if b is not None else fb)
    d_pi = _lyapunov_pseudo(args.pseudo, gen, K)
    beta = parse_number(args.beta, args.mode) if args.beta else None
    data = LyapunovData(V, r, b, frozenset(K), d_pi, beta)
    res = best_beta(gen, data) if args.best_beta else lyapunov_kappa(gen, data)
    evidence = res.evidence + [f"r = {format_number(r)}, b = {format_number(b)}, C = {format_number(data.C)}",
                               f"beta = {format_number(res.beta)}", f"pseudo-metric: {d_pi.name}"]
    cert = Certificate(res.kappa, res.metric, 1, "ricci", evidence, "Lyapunov cost")
    _emit(cert.to_text(include_table=True), args.out)
    if args.audit:
        audit = contraction_audit(gen, res.metric, res.kappa, 1, _times(args.tgrid))
        sys.stderr.write(f"audit {'pass' if audit.verdict else 'fail'} max_ratio={audit.max_ratio!r}\n")
        return EXIT_OK if audit.verdict else EXIT_FAIL
    return EXIT_OK


def _matrix_text(C) -> list[str]:
    return ["C " + " ".join(format_number(v) for v in row) for row in C]


def cmd_glauber(args) -> int:
    bundle = _load(args.input, args)
    if not bundle.has_model():
        raise ValueError("input defines no product-space model")
    model = bundle.model(args.trunc)
    lines = [f"model {model.name}", f"states {model.space.size}"]
    if bundle.model_kind == "spin":
        betas = [[float(v) for v in row] for row in bundle.beta_matrix(len(model.space.sites))]
        C = dobrushin_matrix(model)
        lines += _matrix_text(C)
        lines.append(f"dobrushin_kappa {format_number(dobrushin_curvature(C))}")
        kappa = spin_curvature(betas)
        lines.append(f"spin_kappa {format_number(kappa)}")
    elif bundle.model_kind == "queue":
        n = len(model.space.sites)
        betas = [[float(v) for v in row] for row in bundle.beta_matrix(n)]
        C = dobrushin_matrix(model)
        lines += _matrix_text(C)
        kappa = queue_curvature(float(parse_number(bundle.model_params.get("lambda", "1"))), betas)
        lines.append(f"queue_kappa {format_number(kappa)}")
    else:
        coeff = dobrushin_coefficients(model)
        for (k, s), v in sorted(coeff.items()):
            lines.append(f"C_block {k} {s} {format_number(v)}")
        kappa0 = block_kappa0(model)
        kappa = glauber_block_bound(model.space, kappa0, coeff)
        lines.append(f"kappa0 {format_number(kappa0)}")
        lines.append(f"block_kappa {format_number(kappa)}")
    status = EXIT_OK
    if not kappa > 0:
        lines.append("no contraction certified")
    elif args.audit:
        cert = glauber_certificate(model, kappa, model.name)
        gen = _generator(bundle, args)
        lp = curvature_lower_bound(gen, cert.metric).kappa
        ok = leq(kappa, lp)
        lines.append(f"lp_kappa {format_number(lp)} {'confirms' if ok else 'REFUTES'}")
        audit = contraction_audit(gen, cert.metric, kappa, 1, _times(args.tgrid))
        lines.append(f"audit {'pass' if audit.verdict else 'fail'} max_ratio={audit.max_ratio!r}")
        if not (ok and audit.verdict):
            status = EXIT_FAIL
    _emit("\n".join(lines) + "\n", args.out)
    return status


def cmd_audit(args) -> int:
    bundle = _load(args.input, args)
    gen = _generator(bundle, args)
    cert = _load(args.cert, args) if args.cert else None
    if cert is not None and (cert.dists or cert.weights):
        d = cert.metric(gen)
    else:
        d = _metric(bundle, gen, args)
    kappa = K = None
    for src in (cert, bundle):
        if src is not None and kappa is None and src.claim_kappa is not None:
            kappa, K = src.claim_kappa, src.claim_K
    if args.kappa:
        kappa = parse_number(args.kappa, args.mode)
    if args.K:
        K = parse_number(args.K, args.mode)
    if kappa is None:
        raise UsageError("no rate to audit: pass --kappa, --cert or a claim line")
    K = 1 if K is None else K
    audit = contraction_audit(gen, d, kappa, K, _times(args.tgrid), max_pairs=args.max_pairs)
    _emit(audit.to_csv(), args.out)
    if args.emit_plot_data:
        with open(args.emit_plot_data, "w", encoding="utf-8") as fh:
            fh.write(audit.plot_csv())
    status = EXIT_OK if audit.verdict else EXIT_FAIL
    if args.eigen:
        rep = eigen_vs_certificate(gen, [kappa], strict=False)
        sys.stderr.write(rep.to_text())
        if not rep.ok:
            status = EXIT_FAIL
    return status


def _example_text(args) -> str:
    name = args.name
    n = args.n
    if name == "spin":
        size = n or 3
        beta = float(args.beta) if args.beta else -0.2
        lines = [f"spin N={size}"] + [f"beta {i} {j} {beta!r}" for i in range(1, size + 1)
                                      for j in range(i + 1, size + 1)]
        betas = [[0 if i == j else beta for j in range(size)] for i in range(size)]
        return "\n".join(lines) + "\n" + write_claim(spin_curvature(betas))
    if name == "queue":
        size = n or 2
        beta = float(args.beta) if args.beta else math.log(2)
        lam = float(parse_number(args.lam)) if args.lam else 1.0
        trunc = args.trunc or 4
        lines = [f"queue N={size} lambda={lam!r} trunc={trunc}"]
        lines += [f"beta {i} {j} {beta!r}" for i in range(1, size + 1) for j in range(i + 1, size + 1)]
        betas = [[0 if i == j else beta for j in range(size)] for i in range(size)]
        kappa = queue_curvature(lam, betas)
        return "\n".join(lines) + "\n" + (write_claim(kappa) if kappa > 0 else "")
    if name == "lyapunov":
        chain, V, K = families.lyapunov_chain()
        return (write_chain(chain) + "".join(f"V {x} {v}\n" for x, v in V.items())
                + "Kset " + " ".join(sorted(K)) + "\n")
    num = (lambda s, default: parse_number(s) if s else default)
    if name == "complete":
        ex = families.complete(n or 5)
    elif name == "star":
        ex = families.star(n or 4, args.metric or "graph")
    elif name == "cycle":
        ex = families.cycle(n or 6, args.metric or "graph")
    elif name == "path":
        ex = families.path(n or 5, args.metric or "graph")
    elif name == "cube":
        ex = families.cube(n or 3)
    elif name == "bipartite":
        ex = families.bipartite(n or 2, args.n2 or 3)
    elif name == "k-partite":
        ex = families.kpartite(args.k or 3, n or 2)
    elif name == "petersen":
        ex = families.petersen()
    elif name == "random":
        ex = families.random_connected(n or 8, seed=args.seed)
    elif name == "mm-infinity":
        ex = families.mm_infinity(num(args.lam, 1), args.trunc or 20)
    elif name == "binomial":
        ex = families.binomial(n or 6, num(args.p, Fraction(1, 2)))
    elif name == "geometric-1":
        ex = families.geometric_one(num(args.a, 4), num(args.b, 1), args.trunc or 10, args.metric or "sqrt")
    elif name == "geometric-2":
        ex = families.geometric_two(num(args.p, Fraction(1, 2)), args.trunc or 12)
    else:
        raise UsageError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    text = write_chain(ex.chain) if ex.chain is not None else write_generator(ex.generator)
    if ex.metric.kind != "graph":
        text += write_metric(ex.metric)
    if ex.kappa is not None:
        text += write_claim(ex.kappa, ex.K)
    return f"# {ex.name}\n" + text


EXAMPLES = ("complete", "star", "cycle", "path", "cube", "bipartite", "k-partite", "petersen", "random",
            "mm-infinity", "binomial", "geometric-1", "geometric-2", "spin", "queue", "lyapunov")


def cmd_examples(args) -> int:
    _emit(_example_text(args), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--mode", choices=("rational", "float"), default=None,
                        help="number mode; defaults to exact when every input is rational")
    common.add_argument("--trunc", type=int, default=None, help="truncation level for infinite families")
    common.add_argument("--tgrid", default=None, help="comma-separated audit times")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for pair sweeps")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--emit-plot-data", default=None, help="write (t, W1) curves as CSV")

    p = _Parser(prog="jumpcurv", description="Curvature certificates for jump Markov generators.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("curvature", parents=[common], help="pair and global curvature report")
    c.add_argument("input")
    c.add_argument("--metric", default=None, help="file with dist or weight lines")
    c.add_argument("--edges-only", action="store_true")
    c.set_defaults(func=cmd_curvature)

    m = sub.add_parser("metric-design", parents=[common], help="metric constructions and their rates")
    m.add_argument("input", nargs="?")
    m.add_argument("--method", required=True, choices=("poisson", "decay", "case", "dissipative", "zhong-yang"))
    m.add_argument("--alpha", default=None)
    m.add_argument("--a", default=None)
    m.add_argument("--b", default=None)
    m.add_argument("--D", type=int, default=None)
    m.add_argument("--N", type=int, default=None)
    m.add_argument("--which", choices=("ricci", "decay"), default="ricci")
    m.set_defaults(func=cmd_metric_design)

    ly = sub.add_parser("lyapunov", parents=[common], help="Lyapunov-function curvature bound")
    ly.add_argument("input")
    ly.add_argument("--data", default=None, help="file with V, r, b and Kset lines")
    ly.add_argument("--pseudo", choices=("minorization", "curvature", "occupation"), default="minorization")
    ly.add_argument("--beta", default=None)
    ly.add_argument("--best-beta", action="store_true")
    ly.add_argument("--audit", action="store_true")
    ly.set_defaults(func=cmd_lyapunov)

    g = sub.add_parser("glauber", parents=[common], help="Dobrushin-type bounds for product-space models")
    g.add_argument("input")
    g.add_argument("--audit", action="store_true", help="confirm by LP sweep and contraction audit")
    g.set_defaults(func=cmd_glauber)

    a = sub.add_parser("audit", parents=[common], help="check a contraction claim numerically")
    a.add_argument("input")
    a.add_argument("--cert", default=None)
    a.add_argument("--metric", default=None)
    a.add_argument("--kappa", default=None)
    a.add_argument("--K", default=None)
    a.add_argument("--max-pairs", type=int, default=None)
    a.add_argument("--eigen", action="store_true", help="also compare with the spectral gap")
    a.set_defaults(func=cmd_audit)

    e = sub.add_parser("examples", parents=[common], help="write a bundled example input")
    e.add_argument("name", choices=EXAMPLES)
    e.add_argument("--n", type=int, default=None)
    e.add_argument("--n2", type=int, default=None)
    e.add_argument("--k", type=int, default=None)
    e.add_argument("--p", default=None)
    e.add_argument("--lam", default=None)
    e.add_argument("--a", default=None)
    e.add_argument("--b", default=None)
    e.add_argument("--beta", default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--metric", default=None)
    e.set_defaults(func=cmd_examples)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"jumpcurv: {exc}\n")
        return EXIT_USAGE
    except FileNotFoundError as exc:
        sys.stderr.write(f"jumpcurv: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"jumpcurv: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
