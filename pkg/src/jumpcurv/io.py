"""Line-oriented input files.

One file may combine several directive groups; each command reads the
groups it needs. Blank lines and ``#`` comments are ignored, and every
error names its line.

Generator: ``vertex <id>``, ``rate <x> <y> <value>``.
Metric: ``weight <x> <y> <value>`` (length metric) or ``dist <x> <y> <value>``.
Chain: ``bd <D>``, ``a <n> <value>``, ``b <n> <value>``, or one of
``mm-infinity lambda=<v> trunc=<D>`` and ``binomial n=<n> p=<v>``.
Lyapunov: ``V <x> <value>``, ``r <value>``, ``b <value>``, ``Kset <x> ...``.
Models: ``spin N=<n>`` or ``queue N=<n> lambda=<v> trunc=<D>`` with
``beta <i> <j> <value>`` lines; or ``sites <s>:<v1>,<v2> ...``,
``block <s> ...`` and ``conditional <k> <outside values> | <block values>=<p> ...``.
Claim: ``claim kappa=<v> [K=<v>]``.
Certificate blocks written by the tools (``certificate``, ``kind``,
``metric``, ``profile``, ``kappa``, ``K``, ``evidence``) are read as a claim
plus their ``dist`` table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .birth_death import BirthDeathChain
from .graph_model import Generator, Metric, custom_metric, graph_metric, length_metric
from .glauber import GlauberModel, ProductSpace, gibbs_generator, queue_model, spin_model
from .numeric import Number, format_number, parse_number


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str, source: str = ""):
        where = f"{source}:{lineno}" if source else f"line {lineno}"
        super().__init__(f"{where}: {message}")
        self.lineno = lineno


@dataclass
class Bundle:
    source: str = ""
    vertices: list[str] = field(default_factory=list)
    rates: dict[tuple[str, str], Number] = field(default_factory=dict)
    weights: dict[tuple[str, str], Number] = field(default_factory=dict)
    dists: dict[tuple[str, str], Number] = field(default_factory=dict)
    chain_D: int | None = None
    chain_a: dict[int, Number] = field(default_factory=dict)
    chain_b: dict[int, Number] = field(default_factory=dict)
    chain_family: tuple[str, dict[str, str]] | None = None
    V: dict[str, Number] = field(default_factory=dict)
    r: Number | None = None
    b: Number | None = None
    Kset: list[str] | None = None
    model_kind: str | None = None
    model_params: dict[str, str] = field(default_factory=dict)
    betas: dict[tuple[int, int], Number] = field(default_factory=dict)
    sites: dict[str, tuple[str, ...]] = field(default_factory=dict)
    blocks: list[tuple[str, ...]] = field(default_factory=list)
    conditionals: dict[tuple[int, tuple[str, ...]], dict[tuple[str, ...], Number]] = field(default_factory=dict)
    claim_kappa: Number | None = None
    claim_K: Number | None = None
    cert_kind: str | None = None
    mode: str | None = None

    # assembled objects

    def has_generator(self) -> bool:
        return bool(self.rates)

    def has_chain(self) -> bool:
        return self.chain_D is not None or self.chain_family is not None

    def has_model(self) -> bool:
        return self.model_kind is not None or bool(self.sites)

    def chain(self, trunc: int | None = None) -> BirthDeathChain:
        if self.chain_family is not None:
            name, params = self.chain_family
            try:
                if name == "mm-infinity":
                    lam = parse_number(params["lambda"], self.mode)
                    D = trunc if trunc is not None else int(params["trunc"])
                    return BirthDeathChain.mm_infinity(lam, D)
                return BirthDeathChain.binomial(int(params["n"]), parse_number(params["p"], self.mode))
            except KeyError as exc:
                raise ValueError(f"{name} needs the parameter {exc.args[0]}") from None
        if self.chain_D is None:
            gen = self.generator(allow_other=False)
            return chain_from_generator(gen)
        D = self.chain_D
        a = [0] + [self.chain_a.get(n) for n in range(1, D + 1)]
        b = [self.chain_b.get(n) for n in range(D)] + [0]
        missing = [f"a {n}" for n in range(1, D + 1) if a[n] is None] + [f"b {n}" for n in range(D) if b[n] is None]
        if missing:
            raise ValueError("chain is missing rates: " + ", ".join(missing))
        return BirthDeathChain(a, b)

    def generator(self, trunc: int | None = None, allow_other: bool = True) -> Generator:
        if self.rates:
            verts = self.vertices or None
            return Generator(self.rates, verts)
        if allow_other and self.has_chain():
            return self.chain(trunc).to_generator()
        if allow_other and self.has_model():
            return gibbs_generator(self.model(trunc))
        raise ValueError("input defines no generator")

    def metric(self, gen: Generator, trunc: int | None = None) -> Metric:
        if self.dists:
            return custom_metric(gen.vertices, self.dists, name="metric table")
        if self.weights:
            return length_metric(gen.graph, self.weights)
        if not self.rates and self.has_model():
            return self.model(trunc).l1_metric(gen.vertices)
        return graph_metric(gen.graph)

    def beta_matrix(self, n: int) -> list[list[Number]]:
        m = [[0] * n for _ in range(n)]
        for (i, j), v in self.betas.items():
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ValueError(f"beta {i} {j} is outside the {n} sites or on the diagonal")
            m[i - 1][j - 1] = v
            m[j - 1][i - 1] = v
        return m

    def model(self, trunc: int | None = None) -> GlauberModel:
        p = self.model_params
        if self.model_kind == "spin":
            n = int(p.get("N", 0))
            return spin_model([[float(v) for v in row] for row in self.beta_matrix(n)])
        if self.model_kind == "queue":
            n = int(p.get("N", 0))
            D = trunc if trunc is not None else int(p.get("trunc", 0))
            lam = float(parse_number(p.get("lambda", "1")))
            return queue_model(lam, [[float(v) for v in row] for row in self.beta_matrix(n)], D)
        if self.sites:
            names = list(self.sites)
            space = ProductSpace(names, self.sites, blocks=self.blocks or None)
            return GlauberModel.table(space, self.conditionals)
        raise ValueError("input defines no product-space model")

    def lyapunov_parts(self) -> tuple[dict[str, Number], Number | None, Number | None, set[str]]:
        if not self.V or self.Kset is None:
            raise ValueError("Lyapunov input needs V lines and a Kset line")
        return dict(self.V), self.r, self.b, set(self.Kset)


def chain_from_generator(gen: Generator) -> BirthDeathChain:
    """Read a birth-death chain off a generator on vertices 0..D."""
    D = len(gen.vertices) - 1
    if list(gen.vertices) != [str(n) for n in range(D + 1)]:
        raise ValueError("a chain needs vertices named 0..D in order")
    for x in gen.vertices:
        for y in gen.jumps(x):
            if abs(int(x) - int(y)) != 1:
                raise ValueError(f"jump {x} -> {y} is not nearest-neighbor on 0..D")
    a = [0] + [gen.rate(str(n), str(n - 1)) for n in range(1, D + 1)]
    b = [gen.rate(str(n), str(n + 1)) for n in range(D)] + [0]
    return BirthDeathChain(a, b)


def _keyvals(tokens: list[str], lineno: int, source: str) -> dict[str, str]:
    out = {}
    for t in tokens:
        if "=" not in t:
            raise ParseError(lineno, f"expected key=value, got {t!r}", source)
        k, v = t.split("=", 1)
        out[k] = v
    return out


CERT_WORDS = ("certificate", "kind", "metric", "profile", "evidence")


def parse_text(text: str, source: str = "", mode: str | None = None) -> Bundle:
    """Parse every directive group in ``text``; unknown directives are errors."""
    bd = Bundle(source=source, mode=mode)
    seen_vertices: set[str] = set()

    def num(tok: str, lineno: int) -> Number:
        try:
            return parse_number(tok, mode)
        except ValueError:
            raise ParseError(lineno, f"bad number {tok!r}", source) from None

    def need(tokens: list[str], count: int, lineno: int, usage: str) -> None:
        if len(tokens) != count:
            raise ParseError(lineno, f"expected '{usage}'", source)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *args = line.split()
        if word == "vertex":
            need(args, 1, lineno, "vertex <id>")
            if args[0] in seen_vertices:
                raise ParseError(lineno, f"duplicate vertex {args[0]}", source)
            seen_vertices.add(args[0])
            bd.vertices.append(args[0])
        elif word in ("rate", "weight", "dist"):
            need(args, 3, lineno, f"{word} <x> <y> <value>")
            x, y, v = args[0], args[1], num(args[2], lineno)
            if bd.vertices and (x not in seen_vertices or y not in seen_vertices):
                raise ParseError(lineno, f"unknown vertex in {word} {x} {y}", source)
            table = {"rate": bd.rates, "weight": bd.weights, "dist": bd.dists}[word]
            if (x, y) in table:
                raise ParseError(lineno, f"duplicate {word} for ({x},{y})", source)
            table[(x, y)] = v
        elif word == "bd":
            need(args, 1, lineno, "bd <D>")
            try:
                bd.chain_D = int(args[0])
            except ValueError:
                raise ParseError(lineno, "bd needs an integer horizon", source) from None
            if bd.chain_D < 1:
                raise ParseError(lineno, "bd needs D >= 1", source)
        elif word == "a" or (word == "b" and len(args) == 2):
            need(args, 2, lineno, f"{word} <n> <value>")
            try:
                n = int(args[0])
            except ValueError:
                raise ParseError(lineno, f"{word} needs an integer state", source) from None
            (bd.chain_a if word == "a" else bd.chain_b)[n] = num(args[1], lineno)
        elif word in ("mm-infinity", "binomial"):
            bd.chain_family = (word, _keyvals(args, lineno, source))
        elif word == "V":
            need(args, 2, lineno, "V <x> <value>")
            bd.V[args[0]] = num(args[1], lineno)
        elif word in ("r", "b"):
            need(args, 1, lineno, f"{word} <value>")
            setattr(bd, word, num(args[0], lineno))
        elif word == "Kset":
            if not args:
                raise ParseError(lineno, "Kset needs at least one vertex", source)
            bd.Kset = list(args)
        elif word in ("spin", "queue"):
            bd.model_kind = word
            bd.model_params = _keyvals(args, lineno, source)
            if "N" not in bd.model_params:
                raise ParseError(lineno, f"{word} needs N=<n>", source)
        elif word == "beta":
            need(args, 3, lineno, "beta <i> <j> <value>")
            try:
                i, j = int(args[0]), int(args[1])
            except ValueError:
                raise ParseError(lineno, "beta needs integer sites", source) from None
            bd.betas[(i, j)] = num(args[2], lineno)
        elif word == "sites":
            for tok in args:
                if ":" not in tok:
                    raise ParseError(lineno, f"expected <site>:<v1>,<v2>, got {tok!r}", source)
                s, vals = tok.split(":", 1)
                bd.sites[s] = tuple(vals.split(","))
        elif word == "block":
            if not args:
                raise ParseError(lineno, "block needs sites", source)
            bd.blocks.append(tuple(args))
        elif word == "conditional":
            if "|" not in args:
                raise ParseError(lineno, "conditional needs '|' before the block distribution", source)
            cut = args.index("|")
            head, dist = args[:cut], args[cut + 1:]
            if not head:
                raise ParseError(lineno, "conditional needs a block index", source)
            try:
                k = int(head[0])
            except ValueError:
                raise ParseError(lineno, "conditional needs an integer block index", source) from None
            table = {}
            for tok in dist:
                if "=" not in tok:
                    raise ParseError(lineno, f"expected <values>=<p>, got {tok!r}", source)
                vals, p = tok.rsplit("=", 1)
                table[tuple(vals.split(","))] = num(p, lineno)
            bd.conditionals[(k, tuple(head[1:]))] = table
        elif word == "claim":
            kv = _keyvals(args, lineno, source)
            if "kappa" not in kv:
                raise ParseError(lineno, "claim needs kappa=<v>", source)
            bd.claim_kappa = num(kv["kappa"], lineno)
            if "K" in kv:
                bd.claim_K = num(kv["K"], lineno)
        elif word in ("kappa", "K"):
            need(args, 1, lineno, f"{word} <value>")
            if word == "kappa":
                bd.claim_kappa = num(args[0], lineno)
            else:
                bd.claim_K = num(args[0], lineno)
        elif word in CERT_WORDS:
            if word == "kind":
                bd.cert_kind = args[0] if args else None
        else:
            raise ParseError(lineno, f"unknown directive {word!r}", source)
    if bd.rates and bd.vertices:
        for x, y in bd.rates:
            if x not in seen_vertices or y not in seen_vertices:
                raise ValueError(f"{source or 'input'}: rate uses an undeclared vertex")
    return bd


def read_file(path: str | Path, mode: str | None = None) -> Bundle:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {p}")
    return parse_text(p.read_text(encoding="utf-8"), str(p), mode)


def write_generator(gen: Generator) -> str:
    lines = [f"vertex {v}" for v in gen.vertices]
    for x in gen.vertices:
        for y, r in gen.jumps(x).items():
            lines.append(f"rate {x} {y} {format_number(r)}")
    return "\n".join(lines) + "\n"


def write_metric(metric: Metric) -> str:
    return "".join(f"dist {x} {y} {format_number(metric(x, y))}\n" for x, y in metric.pairs())


def write_chain(chain: BirthDeathChain) -> str:
    lines = [f"bd {chain.D}"]
    lines += [f"a {n} {format_number(chain.a[n])}" for n in range(1, chain.D + 1)]
    lines += [f"b {n} {format_number(chain.b[n])}" for n in range(chain.D)]
    return "\n".join(lines) + "\n"


def write_claim(kappa: Number, K: Number = 1) -> str:
    return f"claim kappa={format_number(kappa)} K={format_number(K)}\n"
