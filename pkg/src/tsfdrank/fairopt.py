"""Concave maximization over the Birkhoff polytope with item-fairness constraints.

The user-fairness objective depends on the marginal rank matrix ``Sigma`` only
through the user-group utilities ``U_g = r_g^T Sigma e``; its gradient is the
outer product ``u e^T`` with item scores ``u = sum_g rho_g f'(U_g) r_g``.
Because ``e`` is non-increasing, the linear maximization over permutation
matrices is solved by sorting items by score.  A single disparate-treatment
halfspace (or hyperplane) ``alpha^T Sigma e <= 0`` has the same rank-one form,
so the constrained linear oracle is a parametric sort: the Lagrange
multiplier is located exactly by intersecting the value lines of bracketing
permutations, and the oracle returns the two-permutation mixture that makes
the constraint tight.

The outer loop is pairwise Frank-Wolfe over the atoms returned by the oracle
(each atom feasible), with exact line search.  Iterates stay feasible, the
objective never decreases, and the Frank-Wolfe gap bounds the distance to the
optimum.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from .core import DoublyStochasticMatrix, Ranking, RankingPolicy, RankingProblem, expected_relevance
from .exceptions import DomainError, Infeasible, InstanceTooLarge, NotConvergedWarning
from .functions import ConcaveFn, PiecewiseLinear, ShiftedLog
from .metrics import merits


@dataclass(frozen=True)
class Utility:
    """Maximize overall expected utility."""


@dataclass(frozen=True)
class UserFairness:
    """Maximize ``sum_g rho_g f(U_g)``."""

    f: ConcaveFn


class ItemConstraint(str, enum.Enum):
    NONE = "none"
    ONE_SIDED = "one_sided"
    TWO_SIDED = "two_sided"


@dataclass(frozen=True)
class FairOptConfig:
    objective: Union[Utility, UserFairness] = field(default_factory=Utility)
    item_constraint: ItemConstraint = ItemConstraint.NONE
    max_iterations: int = 2000
    duality_gap_tol: float = 1e-6
    constraint_tol: float = 1e-8
    #: per-group merit replacing average relevance, e.g. equal merits
    merit: Optional[Mapping[str, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "item_constraint", ItemConstraint(self.item_constraint))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.duality_gap_tol > 0 and self.constraint_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class SolveResult:
    sigma: DoublyStochasticMatrix
    objective_value: float
    duality_gap: float
    iterations: int
    constraint_violation: float
    converged: bool = True
    #: objective value after every iteration, starting point first
    history: tuple = ()
    #: (ranking, weight) pairs whose mixture is ``sigma``
    support: tuple = ()

    def policy(self) -> RankingPolicy:
        """The solver's own mixture as a policy (no diversity optimization)."""
        merged: dict = {}
        for r, w in self.support:
            merged[r] = merged.get(r, 0.0) + w
        items = [(r, w) for r, w in merged.items() if w > 0]
        total = math.fsum(w for _, w in items)
        return RankingPolicy(tuple(r for r, _ in items), tuple(w / total for _, w in items))


def sort_permutation(score: np.ndarray) -> np.ndarray:
    """Positions putting items in descending ``score`` order (ties by item index)."""
    order = np.argsort(-np.asarray(score, dtype=float), kind="stable")
    pos = np.empty(len(order), dtype=int)
    pos[order] = np.arange(len(order))
    return pos


def constraint_vector(problem: RankingProblem, kind, merit=None):
    """Return ``(alpha, sense)`` with the constraint ``alpha @ (Sigma @ e) <sense> 0``.

    ``alpha @ x`` equals ``E(hi)/M(hi) - E(lo)/M(lo)`` for item exposures ``x``,
    where ``hi`` has the larger merit.  ``alpha`` is ``None`` when the
    constraint is vacuous (one item group, or one-sided with equal merits).
    """
    kind = ItemConstraint(kind)
    groups = problem.item_group_ids
    if kind is ItemConstraint.NONE or len(groups) < 2:
        return None, None
    if len(groups) > 2:
        raise ValueError("item-fairness constraints support at most two item groups")
    M = merits(problem, merit)
    a, b = groups
    if M[a] == M[b]:
        if kind is ItemConstraint.ONE_SIDED:
            return None, None
        hi, lo = a, b
    else:
        hi, lo = (a, b) if M[a] > M[b] else (b, a)
    mhi, mlo = problem.group_mask(hi), problem.group_mask(lo)
    alpha = mhi / (mhi.sum() * M[hi]) - mlo / (mlo.sum() * M[lo])
    return alpha, ("le" if kind is ItemConstraint.ONE_SIDED else "eq")


@dataclass
class _Atom:
    parts: tuple  # ((positions, coef), ...)
    y: np.ndarray  # user-group utilities
    a: float  # constraint value
    util: float
    key: bytes


class _Model:
    def __init__(self, problem: RankingProblem, config: FairOptConfig):
        self.problem = problem
        self.config = config
        self.e = problem.exposure
        self.R = np.array([problem.relevance @ ug.intent_dist for ug in problem.user_groups])
        self.rho = np.array([ug.proportion for ug in problem.user_groups])
        self.r_pop = expected_relevance(problem)
        self.alpha, self.sense = constraint_vector(problem, config.item_constraint, config.merit)
        self.f = config.objective.f if isinstance(config.objective, UserFairness) else None

    # -- atoms -------------------------------------------------------------

    def atom(self, parts) -> _Atom:
        x = np.zeros(self.problem.n)
        for pos, c in parts:
            x += c * self.e[pos]
        a = float(self.alpha @ x) if self.alpha is not None else 0.0
        key = b"|".join(np.asarray(p, dtype=np.int32).tobytes() + repr(c).encode() for p, c in parts)
        return _Atom(tuple(parts), self.R @ x, a, float(self.r_pop @ x), key)

    def uniform_atom(self) -> _Atom:
        n = self.problem.n
        base = np.arange(n)
        return self.atom(tuple(((base + s) % n, 1.0 / n) for s in range(n)))

    def feasible(self, atom: _Atom) -> bool:
        if self.alpha is None:
            return True
        tol = self.config.constraint_tol
        return atom.a <= tol if self.sense == "le" else abs(atom.a) <= tol

    # -- linear oracle -----------------------------------------------------

    def lmo(self, u: np.ndarray) -> _Atom:
        """Maximize ``u^T Sigma e`` over feasible doubly stochastic ``Sigma``."""
        p0 = sort_permutation(u)
        if self.alpha is None:
            return self.atom(((p0, 1.0),))
        e, alpha = self.e, self.alpha
        a0 = float(alpha @ e[p0])
        if (self.sense == "le" and a0 <= 0) or a0 == 0:
            return self.atom(((p0, 1.0),))
        s = 1.0 if a0 > 0 else -1.0
        # permutation optimal as the multiplier goes to s * infinity
        n = len(u)
        far_order = np.lexsort((np.arange(n), -u, s * alpha))
        far = np.empty(n, dtype=int)
        far[far_order] = np.arange(n)
        a_far = float(alpha @ e[far])
        if s * a_far > self.config.constraint_tol:
            raise Infeasible("item-fairness constraint cannot be satisfied")
        if s * a_far > 0:
            return self.atom(((far, 1.0),))

        def val(p):
            return float(u @ e[p]), float(alpha @ e[p])

        lo, (g_lo, a_lo) = p0, val(p0)
        hi, (g_hi, a_hi) = far, (float(u @ e[far]), a_far)
        for _ in range(200):
            lam = (g_lo - g_hi) / (a_lo - a_hi)
            p = sort_permutation(u - lam * alpha)
            g_p, a_p = val(p)
            line = g_lo - lam * a_lo
            if g_p - lam * a_p <= line + 1e-12 * (1.0 + abs(line)):
                break
            if s * a_p > 0:
                lo, g_lo, a_lo = p, g_p, a_p
            else:
                hi, g_hi, a_hi = p, g_p, a_p
        if a_hi == 0:
            return self.atom(((hi, 1.0),))
        theta = a_hi / (a_hi - a_lo)
        return self.atom(((lo, theta), (hi, 1.0 - theta)))

    # -- objective in image space ------------------------------------------

    def value(self, y: np.ndarray) -> float:
        return float(self.rho @ self.f(y))

    def in_domain(self, y: np.ndarray) -> bool:
        return self.f.in_domain(y)

    def line_search(self, y: np.ndarray, d: np.ndarray, gmax: float) -> float:
        """argmax over [0, gmax] of ``sum rho f(y + t d)``."""
        f, rho = self.f, self.rho
        lower = f.lower
        ub = gmax
        for yg, dg in zip(y, d):
            if dg < 0 and np.isfinite(lower):
                ub = min(ub, (yg - lower) / -dg * (1 - 1e-12))
        if isinstance(f, PiecewiseLinear):
            cands = [0.0, ub]
            for yg, dg in zip(y, d):
                if dg != 0:
                    cands.extend(t for t in ((b - yg) / dg for b in f.breakpoints) if 0 < t < ub)
            vals = [self.value(y + t * d) for t in cands]
            best = max(vals)
            return max(t for t, v in zip(cands, vals) if v >= best - 1e-15 * (1 + abs(best)))
        if isinstance(f, ShiftedLog):
            z = [float(yg) + f.shift for yg in y]
            dd = [float(v) for v in d]
            rr = [float(v) for v in rho]

            def dphi(t):
                return sum(r * dg / (zg + t * dg) for r, zg, dg in zip(rr, z, dd))

            def d2phi(t):
                return -sum(r * dg * dg / (zg + t * dg) ** 2 for r, zg, dg in zip(rr, z, dd))

        else:  # generic concave: bisection on the supergradient

            def dphi(t):
                return float(rho @ (f.derivative(y + t * d) * d))

            d2phi = None
            if hasattr(f, "second_derivative"):

                def d2phi(t):
                    return float(rho @ (f.second_derivative(y + t * d) * d * d))

        if dphi(ub) >= 0:
            return ub
        lo, hi = 0.0, ub
        t = 0.5 * ub
        for _ in range(200):
            p = dphi(t)
            if p > 0:
                lo = t
            else:
                hi = t
            nt = 0.5 * (lo + hi)
            if d2phi is not None:
                q = d2phi(t)
                if q < 0:
                    cand = t - p / q
                    if lo < cand < hi:
                        nt = cand
            if abs(nt - t) <= 1e-16 * (1 + t) or hi - lo <= 1e-17:
                t = nt
                break
            t = nt
        return t


def _sigma_from(atoms, weights, n) -> np.ndarray:
    S = np.zeros((n, n))
    rows = np.arange(n)
    for atom, w in zip(atoms, weights):
        for pos, c in atom.parts:
            S[rows, pos] += w * c
    return S


def _support(atoms, weights) -> tuple:
    out = []
    for atom, w in zip(atoms, weights):
        for pos, c in atom.parts:
            if w * c > 0:
                out.append((Ranking(tuple(pos)), w * c))
    return tuple(out)


def _violation(model: _Model, S: np.ndarray) -> float:
    if model.alpha is None:
        return 0.0
    a = float(model.alpha @ (S @ model.e))
    return max(a, 0.0) if model.sense == "le" else abs(a)


def _finish(model, atoms, weights, value, gap, it, converged, history) -> SolveResult:
    n = model.problem.n
    S = _sigma_from(atoms, weights, n)
    return SolveResult(
        sigma=DoublyStochasticMatrix(S),
        objective_value=value,
        duality_gap=gap,
        iterations=it,
        constraint_violation=_violation(model, S),
        converged=converged,
        history=tuple(history),
        support=_support(atoms, weights),
    )


def _start(model: _Model):
    """Feasible starting atoms inside the domain of ``f``.

    Tried in order: the uniform matrix; the utility-max vertex blended 0.99
    toward uniform; an equal mixture of each user group's own best vertex.
    """
    candidates = []
    uni = model.uniform_atom()
    if model.feasible(uni):
        candidates.append(([uni], [1.0]))
        candidates.append(([uni, model.lmo(model.r_pop)], [0.99, 0.01]))
    per_group = [model.lmo(r) for r in model.R]
    candidates.append((per_group, [1.0 / len(per_group)] * len(per_group)))
    for atoms, weights in candidates:
        y = sum(w * a.y for a, w in zip(atoms, weights))
        if model.in_domain(y):
            return atoms, weights
    raise DomainError(
        f"no feasible starting point inside the domain of {model.f!r}; "
        f"uniform utilities {uni.y.round(6).tolist()}"
    )


class _HuberPL(ConcaveFn):
    """Piecewise-linear ``f`` with every kink rounded over a width ``tau``.

    Writing ``f(x) = k_last (x - t_last) + f(t_last) - sum_j D_j relu(t_j - x)``
    with slope drops ``D_j``, each ``relu`` is replaced by its Huber
    smoothing; the value moves by at most ``tau / 2 * sum_j D_j``.
    """

    lower = -np.inf

    def __init__(self, base: PiecewiseLinear, tau: float):
        self.base = base
        self.tau = float(tau)
        self.k = np.asarray(base.slopes)
        self.t = np.asarray(base.breakpoints)
        self.drop = self.k[:-1] - self.k[1:]
        self.anchor = float(base(self.t[-1]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = self.t - x[..., None]
        h = np.where(v <= 0, 0.0, np.where(v < self.tau, v * v / (2 * self.tau), v - self.tau / 2))
        return self.k[-1] * (x - self.t[-1]) + self.anchor - h @ self.drop

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        v = self.t - x[..., None]
        return self.k[-1] + np.clip(v / self.tau, 0.0, 1.0) @ self.drop

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        v = self.t - x[..., None]
        return -((v > 0) & (v < self.tau)).astype(float) @ self.drop / self.tau


def _compact(atoms, weights):
    keep = [i for i, w in enumerate(weights) if w > 0]
    atoms = [atoms[i] for i in keep]
    total = math.fsum(weights[i] for i in keep)
    weights = [weights[i] / total for i in keep]
    return atoms, weights, sum(w * a.y for a, w in zip(atoms, weights))


def _frank_wolfe(model: _Model, atoms, weights, max_iterations: int, tol: float):
    """Pairwise Frank-Wolfe on ``model.f``; returns the final state and trace."""
    atoms = list(atoms)
    weights = [float(w) for w in weights]
    index = {a.key: i for i, a in enumerate(atoms)}
    y = sum(w * a.y for a, w in zip(atoms, weights))
    history = [model.value(y)]
    gap = math.inf
    it = 0
    converged = False
    for it in range(1, max_iterations + 1):
        c = model.rho * model.f.derivative(y)
        s = model.lmo(c @ model.R)
        gap = float(c @ (s.y - y))
        if gap <= tol:
            converged = True
            it -= 1
            break
        scores = [float(c @ a.y) if w > 0 else math.inf for a, w in zip(atoms, weights)]
        j = int(np.argmin(scores))
        d = s.y - atoms[j].y
        gmax = weights[j]
        step = model.line_search(y, d, gmax)
        if step <= 0:
            # pairwise direction stalls; fall back to a plain Frank-Wolfe step
            d = s.y - y
            step = model.line_search(y, d, 1.0)
            if step <= 0:
                break
            weights = [w * (1 - step) for w in weights]
            j = None
        else:
            weights[j] -= step
            if step >= gmax:
                weights[j] = 0.0
        k = index.get(s.key)
        if k is None:
            atoms.append(s)
            weights.append(step)
            index[s.key] = len(atoms) - 1
        else:
            weights[k] += step
        y = y + step * d
        if it % 25 == 0 or (j is not None and weights[j] == 0.0):
            atoms, weights, y = _compact(atoms, weights)
            index = {a.key: i for i, a in enumerate(atoms)}
        history.append(model.value(y))
    atoms, weights, y = _compact(atoms, weights)
    return atoms, weights, gap, it, converged, history


PL_SNAPS = (0.0, 1e-9, 1e-7, 1e-5, 1e-3)


def _pl_certificate(model: _Model, y: np.ndarray) -> float:
    """Upper bound on ``OPT - F(y)`` for piecewise-linear ``f``.

    For any point ``z`` and supergradient ``c`` of the objective at ``z``,
    concavity gives ``OPT <= F(z) + max_s c (s - z)``.  ``z`` is ``y`` with
    coordinates close to a kink moved onto it; at a kink the slope may be
    anything between the two one-sided slopes, and the bound (convex in the
    slope) is minimized over that interval coordinate by coordinate.
    """
    f = model.f
    k, t = np.asarray(f.slopes), np.asarray(f.breakpoints)
    scale = max(1.0, float(np.abs(t).max()))
    base = model.value(y)
    best = math.inf
    seen = set()
    for snap in PL_SNAPS:
        z = y.copy()
        slopes = np.array([float(f.derivative(v)) for v in y])
        boxes = {}
        near = tuple(int(abs(t[np.argmin(np.abs(t - v))] - v) <= snap * scale) for v in y)
        if near in seen:
            continue
        seen.add(near)
        for gi, yg in enumerate(y):
            j = int(np.argmin(np.abs(t - yg)))
            if abs(t[j] - yg) <= snap * scale:
                z[gi] = t[j]
                boxes[gi] = (k[j + 1], k[j])
                slopes[gi] = k[j]
        fz = model.value(z)

        def bound(sl):
            c = model.rho * sl
            return fz + float(c @ (model.lmo(c @ model.R).y - z)) - base

        cur = bound(slopes)
        for _ in range(3 if len(boxes) > 1 else 1):
            for gi, (lo, hi) in boxes.items():
                a, b = lo, hi
                for _ in range(50):
                    m1, m2 = a + (b - a) * 0.382, a + (b - a) * 0.618
                    s1, s2 = slopes.copy(), slopes.copy()
                    s1[gi], s2[gi] = m1, m2
                    if bound(s1) <= bound(s2):
                        b = m2
                    else:
                        a = m1
                trial = slopes.copy()
                trial[gi] = 0.5 * (a + b)
                val = bound(trial)
                if val < cur:
                    cur, slopes = val, trial
        best = min(best, cur)
    return max(best, 0.0)


def _smoothing_schedule(f: PiecewiseLinear):
    scale = max(1.0, max(abs(v) for v in f.breakpoints))
    tau = 0.1 * scale
    while tau >= 1e-10 * scale:
        yield tau
        tau *= 0.1


def solve_fair(problem: RankingProblem, config: FairOptConfig = FairOptConfig()) -> SolveResult:
    """Maximize utility or user fairness over doubly stochastic matrices.

    Returns the optimal marginal rank matrix together with a certificate
    (Frank-Wolfe duality gap) and the mixture of permutations it was built from.
    A piecewise-linear ``f`` is handled by solving a sequence of smoothed
    problems with shrinking kink width, each warm-started from the last; the
    reported gap is certified on the unsmoothed objective.
    """
    model = _Model(problem, config)
    if model.f is None:
        s = model.lmo(model.r_pop)
        return _finish(model, [s], [1.0], s.util, 0.0, 1, True, [s.util])

    atoms, weights = _start(model)
    if isinstance(model.f, PiecewiseLinear):
        true_f = model.f
        y = sum(w * a.y for a, w in zip(atoms, weights))
        history = [model.value(y)]
        it_total, gap, converged = 0, _pl_certificate(model, y), False
        for tau in _smoothing_schedule(true_f):
            if gap <= config.duality_gap_tol or it_total >= config.max_iterations:
                break
            model.f = _HuberPL(true_f, tau)
            atoms, weights, _, it, _, _ = _frank_wolfe(
                model, atoms, weights, config.max_iterations - it_total, config.duality_gap_tol
            )
            model.f = true_f
            it_total += it
            y = sum(w * a.y for a, w in zip(atoms, weights))
            history.append(model.value(y))
            gap = _pl_certificate(model, y)
        converged = gap <= config.duality_gap_tol
        it = it_total
    else:
        atoms, weights, gap, it, converged, history = _frank_wolfe(
            model, atoms, weights, config.max_iterations, config.duality_gap_tol
        )
        y = sum(w * a.y for a, w in zip(atoms, weights))
    if not converged:
        warnings.warn(
            f"solver stopped after {it} iterations with gap {gap:.3g} "
            f"> {config.duality_gap_tol:.3g}",
            NotConvergedWarning,
            stacklevel=2,
        )
    return _finish(model, atoms, weights, model.value(y), gap, it, converged, history)


def prp_policy(problem: RankingProblem) -> RankingPolicy:
    """Deterministic ranking by population-expected relevance (ties by item order)."""
    return RankingPolicy.deterministic(Ranking(tuple(sort_permutation(expected_relevance(problem)))))


# -- brute-force oracle ----------------------------------------------------------

BRUTE_FORCE_MAX_N = 4
GRID_STEP = 0.02
REFINE_STEPS = (0.01, 0.005, 0.002, 0.001)


def _generators(model: _Model):
    """Image points spanning the feasible set: feasible vertices and edge crossings."""
    n = model.problem.n
    verts = [model.atom(((np.array(p), 1.0),)) for p in itertools.permutations(range(n))]
    if model.alpha is None:
        return verts
    tol = model.config.constraint_tol
    if model.sense == "le":
        gens = [v for v in verts if v.a <= tol]
    else:
        gens = [v for v in verts if abs(v.a) <= tol]
    pos = [v for v in verts if v.a > tol]
    neg = [v for v in verts if v.a < -tol]
    for p in pos:
        for q in neg:
            th = q.a / (q.a - p.a)
            gens.append(model.atom(((p.parts[0][0], th), (q.parts[0][0], 1 - th))))
    return gens


def _prune_dominated(points: np.ndarray) -> np.ndarray:
    keep = []
    for i, p in enumerate(points):
        dom = np.all(points >= p, axis=1) & np.any(points > p, axis=1)
        if not dom.any() and not any(np.array_equal(p, points[k]) for k in keep):
            keep.append(i)
    return np.array(keep, dtype=int)


def _simplex_grid(k: int, steps: int) -> np.ndarray:
    combos = [c for c in itertools.combinations(range(steps + k - 1), k - 1)]
    out = np.empty((len(combos), k))
    for r, c in enumerate(combos):
        bounds = (-1,) + c + (steps + k - 1,)
        out[r] = np.diff(bounds) - 1
    return out / steps


class _GridSearch:
    def __init__(self, problem: RankingProblem, config: FairOptConfig):
        if problem.n > BRUTE_FORCE_MAX_N:
            raise InstanceTooLarge(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
        self.model = _Model(problem, config)
        gens = _generators(self.model)
        if not gens:
            raise Infeasible("no feasible permutation mixture")
        if self.model.f is None:
            coords = np.array([[g.util] for g in gens])
        else:
            coords = np.array([g.y for g in gens])
        keep = _prune_dominated(coords)
        self.gens = [gens[i] for i in keep]
        self.coords = coords[keep]
        self.k = min(len(self.gens), coords.shape[1] + 1)

    def objective(self, Y: np.ndarray) -> np.ndarray:
        if self.model.f is None:
            return Y[..., 0]
        f = self.model.f
        ok = np.all(Y > f.lower, axis=-1)
        out = np.full(Y.shape[:-1], -np.inf)
        Yc = np.where(ok[..., None], Y, f.lower + 1.0)
        vals = np.asarray(f(Yc.reshape(-1, Y.shape[-1]))).reshape(Y.shape) @ self.model.rho
        out[ok] = vals[ok]
        return out

    def grid(self):
        """Yield (subset, weight grid, image points, objective values)."""
        W = _simplex_grid(self.k, round(1 / GRID_STEP))
        for subset in itertools.combinations(range(len(self.gens)), self.k):
            Y = W @ self.coords[list(subset)]
            yield subset, W, Y, self.objective(Y)

    def solve(self):
        cands = []
        for subset, W, _, vals in self.grid():
            top = np.argsort(-vals, kind="stable")[:3]
            cands.extend((float(vals[i]), subset, W[i].copy()) for i in top)
        cands.sort(key=lambda c: -c[0])
        best = (-np.inf, None, None)
        for val, subset, w in cands[:10]:
            C = self.coords[list(subset)]
            for step in REFINE_STEPS:
                improved = True
                while improved:
                    improved = False
                    for a, b in itertools.permutations(range(self.k), 2):
                        if w[a] < step - 1e-15:
                            continue
                        w2 = w.copy()
                        w2[a] -= step
                        w2[b] += step
                        v2 = float(self.objective(w2 @ C))
                        if v2 > val + 1e-15:
                            w, val, improved = w2, v2, True
            if val > best[0]:
                best = (val, subset, w)
        return best


def brute_force_optimum(problem: RankingProblem, config: FairOptConfig = FairOptConfig()) -> SolveResult:
    """Global optimum by enumerating all permutations and grid-searching mixtures.

    Independent of :func:`solve_fair`: the feasible set is spanned by the
    images of all ``n!`` permutation matrices (plus, under a constraint, the
    crossings of their connecting segments with the constraint hyperplane);
    dominated points are discarded and mixtures of ``|UG| + 1`` points are
    searched on a simplex grid of step 0.02, refined down to step 0.001.
    """
    gs = _GridSearch(problem, config)
    val, subset, w = gs.solve()
    if subset is None:
        raise DomainError("no grid point inside the domain of f")
    atoms = [gs.gens[i] for i in subset]
    weights = [float(x) for x in w]
    keep = [i for i, x in enumerate(weights) if x > 0]
    return _finish(
        gs.model,
        [atoms[i] for i in keep],
        [weights[i] for i in keep],
        float(val),
        math.nan,
        0,
        True,
        [float(val)],
    )


def pareto_dominators(
    problem: RankingProblem, config: FairOptConfig, sigma, tol: float = 1e-3
) -> np.ndarray:
    """Grid points whose user-group utilities dominate those of ``sigma``.

    A point dominates when it is at least as good for every group (to 1e-9)
    and better by more than ``tol`` for some group.
    """
    gs = _GridSearch(problem, FairOptConfig(UserFairness(ShiftedLog(1e6)), config.item_constraint,
                                             merit=config.merit))
    S = np.asarray(sigma.entries if isinstance(sigma, DoublyStochasticMatrix) else sigma)
    y0 = gs.model.R @ (S @ gs.model.e)
    hits = []
    for _, _, Y, _ in gs.grid():
        mask = np.all(Y >= y0 - 1e-9, axis=1) & np.any(Y > y0 + tol, axis=1)
        if mask.any():
            hits.append(Y[mask])
    return np.concatenate(hits) if hits else np.empty((0, len(y0)))
