"""Bayesian optimization with a Gaussian-process surrogate and expected improvement.

The optimizer maximizes. Parameters are encoded into the unit cube: reals and
integers are min-max scaled, categoricals become one-hot blocks. The GP uses a
Matern-5/2 kernel with one shared length-scale over the encoded coordinates.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.stats import norm

from .errors import ObjectiveFailure, OutOfBounds, SingularKernel

N_CANDIDATES = 1024
JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


# -- search space ----------------------------------------------------------------


@dataclass(frozen=True)
class Real:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")

    @property
    def width(self):
        return 1

    def sample(self, rng):
        return float(self.lo + (self.hi - self.lo) * rng.random())

    def encode(self, v):
        if not self.lo <= v <= self.hi:
            raise OutOfBounds(f"{self.name}={v!r} outside [{self.lo}, {self.hi}]")
        return [(v - self.lo) / (self.hi - self.lo)]

    def decode(self, u):
        return float(self.lo + min(max(u[0], 0.0), 1.0) * (self.hi - self.lo))


@dataclass(frozen=True)
class Integer:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")

    @property
    def width(self):
        return 1

    def sample(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))

    def encode(self, v):
        if int(v) != v or not self.lo <= v <= self.hi:
            raise OutOfBounds(f"{self.name}={v!r} not an integer in [{self.lo}, {self.hi}]")
        return [(v - self.lo) / (self.hi - self.lo)]

    def decode(self, u):
        u = min(max(u[0], 0.0), 1.0)
        return int(round(self.lo + u * (self.hi - self.lo)))


@dataclass(frozen=True)
class Categorical:
    name: str
    options: tuple

    def __post_init__(self):
        if len(self.options) < 1:
            raise ValueError(f"{self.name}: needs at least one option")

    @property
    def width(self):
        return len(self.options)

    def sample(self, rng):
        return self.options[int(rng.integers(len(self.options)))]

    def encode(self, v):
        if v not in self.options:
            raise OutOfBounds(f"{self.name}={v!r} not one of {list(self.options)}")
        return [1.0 if o == v else 0.0 for o in self.options]

    def decode(self, u):
        # nearest vertex of the simplex; ties go to the first option
        return self.options[int(np.argmax(u))]


class SearchSpace:
    def __init__(self, params):
        self.params = tuple(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.dim = sum(p.width for p in self.params)

    @property
    def names(self):
        return [p.name for p in self.params]

    def sample(self, rng):
        return {p.name: p.sample(rng) for p in self.params}

    def encode(self, assignment):
        out = []
        for p in self.params:
            if p.name not in assignment:
                raise OutOfBounds(f"missing parameter {p.name!r}")
            out.extend(p.encode(assignment[p.name]))
        return np.array(out)

    def decode(self, u):
        u = np.asarray(u, dtype=np.float64)
        out, i = {}, 0
        for p in self.params:
            out[p.name] = p.decode(u[i:i + p.width])
            i += p.width
        return out

    def snap(self, u):
        return self.encode(self.decode(u))

    def continuous_coords(self):
        idx, i = [], 0
        for p in self.params:
            if not isinstance(p, Categorical):
                idx.append(i)
            i += p.width
        return idx

    def categorical_blocks(self):
        out, i = [], 0
        for p in self.params:
            if isinstance(p, Categorical) and p.width > 1:
                out.append((i, p.width))
            i += p.width
        return out


def encode(space, assignment):
    return space.encode(assignment)


def decode(space, u):
    return space.decode(u)


# -- Gaussian process --------------------------------------------------------------


def matern52(A, B, length_scale):
    d = np.sqrt(np.maximum(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1), 0.0)) / length_scale
    s = math.sqrt(5.0) * d
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


class GaussianProcess:
    """Zero-mean GP on standardized targets; unit signal variance, fitted length-scale and noise."""

    LENGTH_BOUNDS = (1e-2, 1e1)

    def __init__(self, noise_floor=1e-6, noise_max=1.0, n_restarts=4):
        self.noise_floor = noise_floor
        self.noise_max = noise_max
        self.n_restarts = n_restarts

    def _factor(self, K):
        n = K.shape[0]
        for j in JITTERS:
            try:
                return cho_factor(K + j * np.eye(n), lower=True), j
            except np.linalg.LinAlgError:
                continue
        raise SingularKernel("kernel matrix not positive definite even with 1e-6 jitter")

    def _nll(self, theta):
        ls, noise = math.exp(theta[0]), math.exp(theta[1])
        K = matern52(self.X, self.X, ls) + noise * np.eye(len(self.X))
        try:
            (c, low), _ = self._factor(K)
        except SingularKernel:
            return 1e25
        alpha = cho_solve((c, low), self.z)
        return 0.5 * self.z @ alpha + np.log(np.diag(c)).sum() + 0.5 * len(self.z) * math.log(2 * math.pi)

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        if len(y) < 2:
            raise ValueError("need at least 2 observations")
        self.X = X
        self.y_mean = float(y.mean())
        self.y_std = float(y.std()) or 1.0
        self.z = (y - self.y_mean) / self.y_std
        bounds = [tuple(np.log(self.LENGTH_BOUNDS)),
                  (math.log(self.noise_floor), math.log(max(self.noise_max, self.noise_floor)))]
        starts = np.column_stack([
            np.linspace(math.log(0.05), math.log(2.0), self.n_restarts),
            np.linspace(bounds[1][0], bounds[1][0] + 0.5 * (bounds[1][1] - bounds[1][0]),
                        self.n_restarts),
        ])
        best = None
        for s in starts:
            res = minimize(self._nll, s, method="L-BFGS-B", bounds=bounds)
            if best is None or res.fun < best.fun:
                best = res
        self.length_scale = math.exp(best.x[0])
        self.noise = math.exp(best.x[1])
        K = matern52(X, X, self.length_scale) + self.noise * np.eye(len(X))
        self._chol, self.jitter = self._factor(K)
        self._alpha = cho_solve(self._chol, self.z)
        return self

    def predict(self, Xq):
        """Posterior mean and standard deviation of the latent function, in objective units."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=np.float64))
        Ks = matern52(Xq, self.X, self.length_scale)
        mu = Ks @ self._alpha
        v = cho_solve(self._chol, Ks.T)
        var = np.maximum(1.0 - np.einsum("ij,ji->i", Ks, v), 0.0)
        return self.y_mean + self.y_std * mu, self.y_std * np.sqrt(var)


def gp_fit(X, y, noise_floor=1e-6):
    return GaussianProcess(noise_floor=noise_floor).fit(X, y)


def expected_improvement(mu, sigma, best):
    """EI for maximization; zero where sigma is zero."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    gain = mu - best
    out = np.zeros(np.broadcast(mu, sigma).shape)
    pos = sigma > 0
    s = np.broadcast_to(sigma, out.shape)[pos]
    g = np.broadcast_to(gain, out.shape)[pos]
    z = g / s
    out[pos] = g * norm.cdf(z) + s * norm.pdf(z)
    return np.maximum(out, 0.0)


# -- optimization loop ---------------------------------------------------------------


@dataclass
class Trial:
    index: int
    assignment: dict
    value: float
    failed: bool = False
    info: object = None


@dataclass
class OptimizationTrace:
    space: SearchSpace
    trials: list = field(default_factory=list)
    seed: int = 0

    @property
    def best_so_far(self):
        out, best = [], -math.inf
        for t in self.trials:
            if not t.failed:
                best = max(best, t.value)
            out.append(best)
        return out

    @property
    def best(self):
        ok = [t for t in self.trials if not t.failed]
        if not ok:
            return None
        return max(ok, key=lambda t: (t.value, -t.index))

    def top(self, n):
        ok = [t for t in self.trials if not t.failed]
        return sorted(ok, key=lambda t: (-t.value, t.index))[:n]

    def to_csv(self, path):
        names = self.space.names
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial"] + names + ["objective", "best_so_far"])
            for t, b in zip(self.trials, self.best_so_far):
                vals = [repr(t.assignment[n]) if isinstance(t.assignment[n], float)
                        else t.assignment[n] for n in names]
                obj = "nan" if t.failed else repr(float(t.value))
                w.writerow([t.index] + vals + [obj, repr(float(b))])


def _evaluate(objective, assignment, index):
    try:
        out = objective(assignment)
    except ObjectiveFailure:
        return Trial(index, assignment, math.nan, failed=True)
    info = None
    if isinstance(out, tuple):
        out, info = out
    value = float(out)
    if not math.isfinite(value):
        return Trial(index, assignment, math.nan, failed=True, info=info)
    return Trial(index, assignment, value, info=info)


def _propose(space, gp, best, rng, n_candidates=N_CANDIDATES, n_refine=5):
    cands = np.array([space.encode(space.sample(rng)) for _ in range(n_candidates)])
    mu, sd = gp.predict(cands)
    ei = expected_improvement(mu, sd, best)
    order = np.lexsort((np.arange(len(ei)), -ei))[:n_refine]
    cont = space.continuous_coords()
    blocks = space.categorical_blocks()
    best_u, best_ei = cands[order[0]], ei[order[0]]
    for start in order:
        u, cur = cands[start].copy(), ei[start]
        step = 0.1
        while step > 1e-3:
            improved = False
            moves = []
            for c in cont:
                for sgn in (1.0, -1.0):
                    v = u.copy()
                    v[c] = min(max(v[c] + sgn * step, 0.0), 1.0)
                    moves.append(v)
            for i, w in blocks:
                for j in range(w):
                    v = u.copy()
                    v[i:i + w] = 0.0
                    v[i + j] = 1.0
                    moves.append(v)
            if not moves:
                break  # nothing to vary: every parameter is fixed
            moves = np.array([space.snap(m) for m in moves])
            m_mu, m_sd = gp.predict(moves)
            m_ei = expected_improvement(m_mu, m_sd, best)
            k = int(np.argmax(m_ei))
            if m_ei[k] > cur:
                u, cur, improved = moves[k], m_ei[k], True
            if not improved:
                step /= 2.0
        if cur > best_ei:
            best_u, best_ei = u, cur
    return space.decode(best_u)


def optimize(objective, space, n_calls, n_initial=10, seed=0, noise_floor=1e-6, callback=None):
    """Maximize ``objective`` over ``space`` with ``n_calls`` evaluations."""
    if not n_calls >= n_initial >= 2:
        raise ValueError("need n_calls >= n_initial >= 2")
    rng = np.random.default_rng(seed)
    trace = OptimizationTrace(space, [], seed)
    for i in range(n_calls):
        ok = [t for t in trace.trials if not t.failed]
        if i < n_initial or len(ok) < 2:
            assignment = space.sample(rng)
        else:
            X = np.array([space.encode(t.assignment) for t in ok])
            y = np.array([t.value for t in ok])
            gp = GaussianProcess(noise_floor=noise_floor).fit(X, y)
            assignment = _propose(space, gp, float(y.max()), rng)
        trial = _evaluate(objective, assignment, i)
        trace.trials.append(trial)
        if callback is not None:
            callback(trial)
    return trace


def random_search(objective, space, n_calls, seed=0):
    rng = np.random.default_rng(seed)
    trace = OptimizationTrace(space, [], seed)
    for i in range(n_calls):
        trace.trials.append(_evaluate(objective, space.sample(rng), i))
    return trace
