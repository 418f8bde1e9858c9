"""Second-order cone programs and the solver backends that consume them.

A :class:`ConicProgram` is stored in a solver-neutral form::

    minimize    c @ x
    subject to  A_eq @ x == b_eq
                lb <= x <= ub
                x[t_k] >= || M_k @ x + q_k ||_2     for every cone k

Inequality rows are expressed with nonnegative slack variables, so the
representation only ever needs equalities, bounds and cones.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_ACCURACY = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True, eq=False)
class ConicProgram:
    n_vars: int
    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    cone_t: np.ndarray  # epigraph variable of each cone
    cone_ptr: np.ndarray  # rows of cone k are cone_ptr[k]:cone_ptr[k+1] of cone_M
    cone_M: sp.csr_matrix
    cone_q: np.ndarray

    def __post_init__(self):
        n = self.n_vars
        if self.c.shape != (n,) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("objective/bounds length must equal the variable count")
        if self.A_eq.shape[1] != n or self.cone_M.shape[1] != n:
            raise ValueError("constraint matrices must have one column per variable")
        if self.A_eq.shape[0] != len(self.b_eq):
            raise ValueError("equality rows and rhs differ in length")
        if len(self.cone_ptr) != len(self.cone_t) + 1 or self.cone_ptr[-1] != self.cone_M.shape[0]:
            raise ValueError("cone row pointers are inconsistent")
        if len(self.cone_q) != self.cone_M.shape[0]:
            raise ValueError("cone offsets and rows differ in length")
        if len(self.cone_t) and (self.cone_t.min() < 0 or self.cone_t.max() >= n):
            raise ValueError("cone epigraph index out of range")
        if np.any(self.lb > self.ub):
            raise ValueError("variable lower bound exceeds upper bound")

    @property
    def n_cones(self) -> int:
        return len(self.cone_t)

    def cone(self, k: int) -> tuple[int, sp.csr_matrix, np.ndarray]:
        lo, hi = self.cone_ptr[k], self.cone_ptr[k + 1]
        return int(self.cone_t[k]), self.cone_M[lo:hi], self.cone_q[lo:hi]

    def residuals(self, x: np.ndarray) -> dict[str, float]:
        """Worst violation of each constraint family at ``x``."""
        eq = float(np.abs(self.A_eq @ x - self.b_eq).max(initial=0.0))
        bound = float(max(np.max(self.lb - x, initial=0.0), np.max(x - self.ub, initial=0.0), 0.0))
        cone = 0.0
        if self.n_cones:
            r = self.cone_M @ x + self.cone_q
            owner = np.repeat(np.arange(self.n_cones), np.diff(self.cone_ptr))
            sq = np.bincount(owner, weights=r * r, minlength=self.n_cones)
            cone = float(np.max(np.sqrt(sq) - x[self.cone_t], initial=0.0))
            cone = max(cone, 0.0)
        return {"equality": eq, "bounds": bound, "cone": cone}


@dataclass
class ConicSolution:
    status: str
    objective: float = float("inf")
    x: np.ndarray | None = None
    seconds: float = 0.0
    detail: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class ProgramBuilder:
    """Incrementally assemble a :class:`ConicProgram`."""

    def __init__(self):
        self.n = 0
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._cost: dict[int, float] = {}
        self._eq_rows: list[int] = []
        self._eq_cols: list[int] = []
        self._eq_vals: list[float] = []
        self._eq_rhs: list[float] = []
        self._cone_t: list[int] = []
        self._cone_ptr: list[int] = [0]
        self._cone_rows: list[int] = []
        self._cone_cols: list[int] = []
        self._cone_vals: list[float] = []
        self._cone_q: list[float] = []

    def var(self, count: int = 1, lb: float = -np.inf, ub: float = np.inf) -> np.ndarray:
        idx = np.arange(self.n, self.n + count)
        self.n += count
        self._lb.extend([lb] * count)
        self._ub.extend([ub] * count)
        return idx

    def cost(self, i: int, coef: float) -> None:
        self._cost[int(i)] = self._cost.get(int(i), 0.0) + float(coef)

    def eq(self, cols: Sequence[int], vals: Sequence[float], rhs: float = 0.0) -> None:
        row = len(self._eq_rhs)
        for j, a in zip(cols, vals):
            if a != 0.0:
                self._eq_rows.append(row)
                self._eq_cols.append(int(j))
                self._eq_vals.append(float(a))
        self._eq_rhs.append(float(rhs))

    def ge(self, cols: Sequence[int], vals: Sequence[float], rhs: float = 0.0) -> int:
        """Add ``sum vals*x[cols] >= rhs`` through a fresh slack; returns the slack index."""
        s = int(self.var(1, lb=0.0)[0])
        self.eq(list(cols) + [s], list(vals) + [-1.0], rhs)
        return s

    def soc(self, t: int, rows: Sequence[tuple[Sequence[int], Sequence[float], float]]) -> None:
        """Add ``x[t] >= ||r||`` where each entry of ``rows`` is ``(cols, vals, offset)``."""
        base = len(self._cone_q)
        for k, (cols, vals, off) in enumerate(rows):
            for j, a in zip(cols, vals):
                if a != 0.0:
                    self._cone_rows.append(base + k)
                    self._cone_cols.append(int(j))
                    self._cone_vals.append(float(a))
            self._cone_q.append(float(off))
        self._cone_t.append(int(t))
        self._cone_ptr.append(len(self._cone_q))

    def build(self) -> ConicProgram:
        n = self.n
        c = np.zeros(n)
        for i, v in self._cost.items():
            c[i] = v
        A = sp.csr_matrix(
            (self._eq_vals, (self._eq_rows, self._eq_cols)), shape=(len(self._eq_rhs), n)
        )
        M = sp.csr_matrix(
            (self._cone_vals, (self._cone_rows, self._cone_cols)), shape=(len(self._cone_q), n)
        )
        return ConicProgram(
            n_vars=n,
            c=c,
            A_eq=A,
            b_eq=np.array(self._eq_rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            cone_t=np.array(self._cone_t, dtype=int),
            cone_ptr=np.array(self._cone_ptr, dtype=int),
            cone_M=M,
            cone_q=np.array(self._cone_q, dtype=float),
        )


@dataclass(frozen=True)
class StandardForm:
    """``min q@x  s.t.  A@x + s == b``, with ``s`` in zero x nonneg x SOC(sizes)."""

    q: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    n_zero: int
    n_nonneg: int
    soc_sizes: tuple[int, ...]


def standard_form(prog: ConicProgram) -> StandardForm:
    n = prog.n_vars
    fixed = np.flatnonzero(np.isfinite(prog.lb) & (prog.lb == prog.ub))
    lower = np.flatnonzero(np.isfinite(prog.lb) & (prog.lb != prog.ub))
    upper = np.flatnonzero(np.isfinite(prog.ub) & (prog.lb != prog.ub))

    eye = sp.identity(n, format="csr")
    blocks = [prog.A_eq, eye[fixed], -eye[lower], eye[upper]]
    rhs = [prog.b_eq, prog.lb[fixed], -prog.lb[lower], prog.ub[upper]]

    # x[t] >= ||M x + q||  <=>  (t, M x + q) in SOC  <=>  -(e_t; M) x + s = (0; q)
    K = prog.n_cones
    if K:
        counts = np.diff(prog.cone_ptr)
        head_rows = prog.cone_ptr[:-1] + np.arange(K)
        M = prog.cone_M.tocoo()
        owner = np.repeat(np.arange(K), counts)
        rows = np.concatenate([head_rows, M.row + owner[M.row] + 1])
        cols = np.concatenate([prog.cone_t, M.col])
        vals = np.concatenate([-np.ones(K), -M.data])
        n_rows = len(prog.cone_q) + K
        blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n)))
        cone_rhs = np.zeros(n_rows)
        cone_rhs[np.arange(len(prog.cone_q)) + owner + 1] = prog.cone_q
        rhs.append(cone_rhs)
        sizes = tuple(int(c) + 1 for c in counts)
    else:
        sizes = ()

    A = sp.vstack(blocks, format="csc")
    return StandardForm(
        q=prog.c.copy(),
        A=A,
        b=np.concatenate(rhs),
        n_zero=prog.A_eq.shape[0] + len(fixed),
        n_nonneg=len(lower) + len(upper),
        soc_sizes=sizes,
    )


class ConicBackend(Protocol):
    def solve(self, program: ConicProgram, accuracy: float = DEFAULT_ACCURACY) -> ConicSolution: ...


def _check(program: ConicProgram, x: np.ndarray, accuracy: float) -> bool:
    res = program.residuals(x)
    scale = 1.0 + float(np.abs(x).max(initial=0.0))
    return max(res.values()) <= 10 * accuracy * scale


class ClarabelBackend:
    """Interior-point backend (Clarabel). Stateless; safe to share across threads."""

    name = "clarabel"

    def __init__(self, max_iter: int = 200):
        self.max_iter = max_iter

    def solve(self, program: ConicProgram, accuracy: float = DEFAULT_ACCURACY) -> ConicSolution:
        import clarabel

        tic = time.perf_counter()
        sf = standard_form(program)
        cones = []
        if sf.n_zero:
            cones.append(clarabel.ZeroConeT(sf.n_zero))
        if sf.n_nonneg:
            cones.append(clarabel.NonnegativeConeT(sf.n_nonneg))
        cones.extend(clarabel.SecondOrderConeT(k) for k in sf.soc_sizes)

        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = self.max_iter
        tol = accuracy / 10
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        settings.tol_feas = tol
        settings.tol_ktratio = min(settings.tol_ktratio, tol)
        P = sp.csc_matrix((program.n_vars, program.n_vars))
        try:
            solver = clarabel.DefaultSolver(P, sf.q, sf.A, sf.b, cones, settings)
            res = solver.solve()
        except Exception as exc:  # noqa: BLE001 - solver internals raise anything
            return ConicSolution(NUMERICAL_FAILURE, seconds=time.perf_counter() - tic, detail=str(exc))
        seconds = time.perf_counter() - tic
        status = str(res.status)
        if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            return ConicSolution(INFEASIBLE, seconds=seconds, detail=status)
        x = np.asarray(res.x, dtype=float)
        if status == "Solved" or (status.startswith("Almost") and _check(program, x, accuracy)):
            return ConicSolution(OPTIMAL, float(program.c @ x), x, seconds, status)
        return ConicSolution(NUMERICAL_FAILURE, seconds=seconds, detail=status)


def _project_soc(v: np.ndarray) -> np.ndarray:
    t, u = v[0], v[1:]
    nu = np.linalg.norm(u)
    if nu <= t:
        return v
    if nu <= -t:
        return np.zeros_like(v)
    a = 0.5 * (t + nu)
    return np.concatenate([[a], (a / nu) * u])


@dataclass
class ADMMBackend:
    """Reference backend: projected first-order (ADMM) splitting.

    Intended for tiny programs in tests; it is slow but has no compiled
    dependencies. Infeasibility is detected only for inconsistent equality
    systems; other failures to converge surface as ``numerical-failure``.
    """

    rho: float = 1.0
    sigma: float = 1e-6
    relax: float = 1.6
    max_iter: int = 200_000
    name: str = field(default="admm", init=False)

    def solve(self, program: ConicProgram, accuracy: float = DEFAULT_ACCURACY) -> ConicSolution:
        tic = time.perf_counter()
        sf = standard_form(program)
        A = sf.A.toarray()
        b, q = sf.b, sf.q
        m, n = A.shape

        Az = A[: sf.n_zero]
        if sf.n_zero:
            x_ls, *_ = np.linalg.lstsq(Az, b[: sf.n_zero], rcond=None)
            if np.abs(Az @ x_ls - b[: sf.n_zero]).max() > 1e-9 * (1 + np.abs(b).max()):
                return ConicSolution(INFEASIBLE, seconds=time.perf_counter() - tic, detail="inconsistent equalities")

        bounds = np.cumsum([sf.n_zero + sf.n_nonneg, *sf.soc_sizes])

        def project(v):
            out = v.copy()
            out[: sf.n_zero] = 0.0
            lo = sf.n_zero
            out[lo : lo + sf.n_nonneg] = np.maximum(out[lo : lo + sf.n_nonneg], 0.0)
            start = sf.n_zero + sf.n_nonneg
            for stop in bounds[1:]:
                out[start:stop] = _project_soc(out[start:stop])
                start = stop
            return out

        rho, sigma, alpha = self.rho, self.sigma, self.relax
        K = sigma * np.eye(n) + rho * A.T @ A
        chol = np.linalg.cholesky(K)

        def kkt(rhs):
            return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

        x = np.zeros(n)
        s = project(b.copy())
        u = np.zeros(m)
        eps = accuracy
        for it in range(self.max_iter):
            x = kkt(sigma * x - q - rho * A.T @ (s - b + u))
            Ax_relaxed = alpha * (A @ x) + (1 - alpha) * (b - s)
            s_old = s
            s = project(b - Ax_relaxed - u)
            u = u + Ax_relaxed + s - b
            if it % 25:
                continue
            r_prim = np.abs(A @ x + s - b).max(initial=0.0)
            r_dual = rho * np.abs(A.T @ (s - s_old)).max(initial=0.0)
            y = rho * u
            pobj = q @ x
            dobj = -b @ y
            gap = abs(pobj - dobj)
            scale = 1 + max(abs(pobj), abs(dobj))
            if r_prim <= eps and r_dual <= eps * scale and gap <= eps * scale:
                if _check(program, x, accuracy):
                    return ConicSolution(OPTIMAL, float(pobj), x, time.perf_counter() - tic, f"iters={it}")
        return ConicSolution(NUMERICAL_FAILURE, seconds=time.perf_counter() - tic, detail="max_iter")


_DEFAULT_BACKEND: ConicBackend = ClarabelBackend()


def default_backend() -> ConicBackend:
    return _DEFAULT_BACKEND


def solve_conic(
    program: ConicProgram, accuracy: float = DEFAULT_ACCURACY, backend: ConicBackend | None = None
) -> ConicSolution:
    return (backend or _DEFAULT_BACKEND).solve(program, accuracy)


def dump_program(program: ConicProgram) -> str:
    """Human-readable text dump of a program, for offline inspection."""

    def term(cols, vals):
        return " ".join(f"{v:+.17g}*x{c}" for c, v in zip(cols, vals)) or "0"

    lines = [f"variables {program.n_vars}"]
    nz = np.flatnonzero(program.c)
    lines.append("minimize " + term(nz, program.c[nz]))
    A = program.A_eq.tocsr()
    for i in range(A.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        lines.append(f"eq {term(A.indices[lo:hi], A.data[lo:hi])} = {program.b_eq[i]:.17g}")
    for j in range(program.n_vars):
        lo, hi = program.lb[j], program.ub[j]
        if np.isfinite(lo) or np.isfinite(hi):
            lines.append(f"bound {lo:.17g} <= x{j} <= {hi:.17g}")
    for k in range(program.n_cones):
        t, M, q = program.cone(k)
        rows = []
        for i in range(M.shape[0]):
            lo, hi = M.indptr[i], M.indptr[i + 1]
            rows.append(f"{term(M.indices[lo:hi], M.data[lo:hi])} {q[i]:+.17g}")
        lines.append(f"soc x{t} >= || " + " ; ".join(rows) + " ||")
    return "\n".join(lines) + "\n"
