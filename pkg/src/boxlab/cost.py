"""Non-locality cost: the smallest weight p of a non-signaling part X in
``P = p X + (1 - p) L`` with L a mixture of local-model vertices.

The program solved is the reduced form

    maximize sum(lambda)  s.t.  V lambda + s = P,  lambda, s >= 0

over the rows where P is nonzero.  Then p = 1 - sum(lambda) and the
unnormalized NS part is Y = P - V lambda = s.  The NS equalities on Y need not
be imposed: they are homogeneous and both P and every vertex satisfy them, so
any Y of this form satisfies them too.  Row sums of Y all equal p for the same
reason.  The slack columns give a feasible starting basis, so no phase one.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .box import (
    BoxError,
    BoxTable,
    SystemLayout,
    all_cuts,
    format_fraction,
    is_fully_nonsignaling,
    to_fraction,
    validate_box,
    _signal_witness,
)
from .catalog import (
    LAYOUT_2X2,
    LAYOUT_ABCD,
    VertexSet,
    local_deterministic_vertices,
    lrns_product_vertices,
)
from .simplex import LPStatus, solve, solve_guided

MODELS = ("det16", "det256", "lrns576")


class CostError(RuntimeError):
    """The cost LP did not reach an optimum; cannot happen for valid NS targets."""


def chsh_gamma(box: BoxTable) -> Fraction:
    """<00> + <01> + <10> - <11> with <ij> = P(a=b|ij) - P(a!=b|ij)."""
    if not box.layout.compatible(LAYOUT_2X2):
        raise BoxError("CHSH value needs a 2x2 bipartite box")
    total = Fraction(0)
    for x, y in itertools.product((0, 1), repeat=2):
        row = box.probs[x, y]
        corr = row[0, 0] + row[1, 1] - row[0, 1] - row[1, 0]
        total += -corr if (x, y) == (1, 1) else corr
    return total


def local_model(tag: str, layout=None) -> VertexSet:
    """Vertex set for a model tag; ``auto`` picks by layout."""
    if tag == "det16":
        return local_deterministic_vertices(LAYOUT_2X2)
    if tag == "det256":
        return local_deterministic_vertices(LAYOUT_ABCD)
    if tag == "lrns576":
        return lrns_product_vertices(LAYOUT_ABCD)
    if tag == "det":
        return local_deterministic_vertices(layout)
    if tag == "lrns":
        return lrns_product_vertices(layout)
    raise BoxError(f"unknown local model {tag!r}; expected one of {MODELS + ('det', 'lrns')}")


def default_model(layout) -> VertexSet:
    layout = SystemLayout.of(layout)
    if layout == LAYOUT_2X2:
        return local_model("det16")
    if layout == LAYOUT_ABCD:
        return local_model("lrns576")
    return lrns_product_vertices(layout)


@dataclass(frozen=True)
class CostProblem:
    target: BoxTable
    local_model: VertexSet

    def __post_init__(self):
        if not self.local_model.layout.compatible(self.target.layout):
            raise BoxError(f"model layout {self.local_model.layout} does not match target {self.target.layout}")


@dataclass
class CostCertificate:
    p: Fraction
    Y: np.ndarray  # unnormalized NS part, same shape as the target table
    weights: dict[int, Fraction] = field(default_factory=dict)  # vertex index -> lambda
    model_kind: str = ""
    pivots: int = 0

    def to_json(self) -> dict:
        n = self.Y.ndim // 2
        table = {}
        for idx in zip(*np.nonzero(self.Y != 0)):
            idx = tuple(int(i) for i in idx)
            key_in = ",".join(map(str, idx[:n]))
            table.setdefault(key_in, {})[",".join(map(str, idx[n:]))] = format_fraction(self.Y[idx])
        return {
            "p": format_fraction(self.p),
            "Y": dict(sorted(table.items())),
            "lambda": {str(k): format_fraction(v) for k, v in sorted(self.weights.items())},
            "model": self.model_kind,
        }

    @classmethod
    def from_json(cls, data: dict, shape: Sequence[int]) -> "CostCertificate":
        Y = np.full(tuple(shape), Fraction(0), dtype=object)
        for key_in, row in data["Y"].items():
            xs = tuple(int(v) for v in key_in.split(","))
            for key_out, val in row.items():
                Y[xs + tuple(int(v) for v in key_out.split(","))] = Fraction(val)
        weights = {int(k): Fraction(v) for k, v in data["lambda"].items()}
        return cls(Fraction(data["p"]), Y, weights, data.get("model", ""))


def nonlocal_cost(problem: CostProblem, bland: bool = False, guided: bool = True) -> CostCertificate:
    """Exact optimum of the cost LP.  ``guided`` lets HiGHS propose the basis,
    which is then certified exactly; ``bland`` forces the plain exact simplex
    with Bland's rule."""
    target = problem.target
    model = problem.local_model
    flat = target.probs.reshape(-1)
    rows = [i for i, v in enumerate(flat) if v != 0]
    zero = np.array([v == 0 for v in flat])
    V = model.matrix()
    # a vertex with mass on a zero entry of P can only get weight 0
    usable = [m for m in range(len(model)) if not np.any((V[:, m] != 0) & zero)]
    n_l, n_s = len(usable), len(rows)
    A = [[V[i, m] for m in usable] + [1 if k == r else 0 for k in range(n_s)] for r, i in enumerate(rows)]
    b = [flat[i] for i in rows]
    c = [-1] * n_l + [0] * n_s
    if guided and not bland:
        result = solve_guided(A, b, c)
    else:
        result = solve(A, b, c, bland=bland)
    if result.status is not LPStatus.OPTIMAL:
        raise CostError(f"cost LP ended {result.status.value}; target is not a valid NS box")
    weights = {usable[j]: result.x[j] for j in range(n_l) if result.x[j] != 0}
    total = sum(weights.values(), Fraction(0))
    Y = target.probs.copy()
    for m, w in weights.items():
        Y = Y - w * model[m].probs
    return CostCertificate(1 - total, Y, weights, model.kind, result.pivots)


def cost_of(box: BoxTable, model: str | VertexSet | None = None) -> Fraction:
    if model is None:
        vs = default_model(box.layout)
    elif isinstance(model, VertexSet):
        vs = model
    else:
        vs = local_model(model, box.layout)
    return nonlocal_cost(CostProblem(box, vs)).p


@dataclass(frozen=True)
class CertificateIssue:
    kind: str
    detail: str


@dataclass(frozen=True)
class CertificateReport:
    issues: tuple[CertificateIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok


def verify_certificate(target: BoxTable, cert: CostCertificate, model: VertexSet) -> CertificateReport:
    """Independent exact re-check of every certificate invariant."""
    issues = []
    Y = cert.Y
    if Y.shape != target.probs.shape:
        return CertificateReport((CertificateIssue("shape", f"Y has shape {Y.shape}, target {target.probs.shape}"),))
    if np.any(Y < 0):
        idx = tuple(int(i) for i in np.argwhere(Y < 0)[0])
        issues.append(CertificateIssue("negative-Y", f"Y{idx} = {Y[idx]}"))
    n = target.n_subsystems
    for k in range(n):
        w = _signal_witness(Y, n, (k,), tuple(j for j in range(n) if j != k))
        if w is not None:
            issues.append(CertificateIssue("signaling-Y", f"subsystem {k} signals: {w}"))
            break
    sums = Y.reshape(math_prod(target.layout.input_shape), -1).sum(axis=1)
    if any(s != cert.p for s in sums):
        issues.append(CertificateIssue("row-sum", f"row sums of Y are not all p = {cert.p}"))
    if any(w < 0 for w in cert.weights.values()):
        issues.append(CertificateIssue("negative-lambda", "some vertex weight is negative"))
    if any(not 0 <= m < len(model) for m in cert.weights):
        issues.append(CertificateIssue("vertex-index", "vertex index outside the model"))
        return CertificateReport(tuple(issues))
    if sum(cert.weights.values(), Fraction(0)) != 1 - cert.p:
        issues.append(CertificateIssue("lambda-sum", "vertex weights do not sum to 1 - p"))
    if not 0 <= cert.p <= 1:
        issues.append(CertificateIssue("p-range", f"p = {cert.p} outside [0, 1]"))
    recon = Y.copy()
    for m, w in cert.weights.items():
        recon = recon + w * model[m].probs
    if np.any(recon != target.probs):
        issues.append(CertificateIssue("reconstruction", "Y + sum lambda V differs from the target"))
    return CertificateReport(tuple(issues))


def math_prod(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out *= v
    return out


def isotropic_cost_closed_form(alpha) -> Fraction:
    """4 alpha - 3 above 3/4, zero on the local side."""
    alpha = to_fraction(alpha)
    if not 0 <= alpha <= 1:
        raise BoxError(f"alpha must lie in [0, 1], got {alpha}")
    return max(Fraction(0), 4 * alpha - 3)


def ns_equalities(layout, exhaustive: bool = False) -> list[dict[int, int]]:
    """NS equalities as sparse rows over the flattened table.

    Each row says: for sender group S and receivers R, the marginal on R at
    sender inputs x_S equals the marginal at x_S = 0.  By default S ranges
    over single subsystems (R = the rest); ``exhaustive`` uses both directions
    of every bipartition.
    """
    layout = SystemLayout.of(layout)
    n = layout.n_subsystems
    if exhaustive:
        pairs = []
        for cut in all_cuts(layout):
            pairs.append((tuple(sorted(cut.right)), tuple(sorted(cut.left))))
            pairs.append((tuple(sorted(cut.left)), tuple(sorted(cut.right))))
    else:
        pairs = [((k,), tuple(j for j in range(n) if j != k)) for k in range(n)] if n > 1 else []
    shape = layout.shape
    strides = np.arange(math_prod(shape)).reshape(shape)
    subs = layout.subsystems
    out = []
    for senders, receivers in pairs:
        sender_inputs = list(itertools.product(*(range(subs[s].inputs) for s in senders)))
        recv_inputs = list(itertools.product(*(range(subs[r].inputs) for r in receivers)))
        recv_outputs = list(itertools.product(*(range(subs[r].outputs) for r in receivers)))
        send_outputs = list(itertools.product(*(range(subs[s].outputs) for s in senders)))

        def coords(xs, xr, ar):
            idx = [0] * (2 * n)
            for s, v in zip(senders, xs):
                idx[s] = v
            for r, v, a in zip(receivers, xr, ar):
                idx[r] = v
                idx[n + r] = a
            for a_s in send_outputs:
                for s, a in zip(senders, a_s):
                    idx[n + s] = a
                yield int(strides[tuple(idx)])

        base = sender_inputs[0]
        for xs in sender_inputs[1:]:
            for xr in recv_inputs:
                for ar in recv_outputs:
                    row: dict[int, int] = {}
                    for i in coords(xs, xr, ar):
                        row[i] = row.get(i, 0) + 1
                    for i in coords(base, xr, ar):
                        row[i] = row.get(i, 0) - 1
                    row = {i: v for i, v in row.items() if v}
                    if row:
                        out.append(row)
    return out


def _solve_one(args):
    box, tag = args
    vs = local_model(tag, box.layout)
    cert = nonlocal_cost(CostProblem(box, vs))
    return cert.p


def worker_count() -> int:
    env = os.environ.get("BOXLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise BoxError(f"BOXLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def batch_costs(boxes: Sequence[BoxTable], tag: str, workers: int | None = None) -> list[Fraction]:
    """Costs in input order; solves run in a process pool when workers > 1."""
    workers = worker_count() if workers is None else workers
    jobs = [(b, tag) for b in boxes]
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_one, jobs))


def check_target(box: BoxTable) -> None:
    if not validate_box(box):
        raise BoxError("target is not a valid box")
    if not is_fully_nonsignaling(box):
        raise BoxError("target is signaling; the cost is defined for NS boxes only")
