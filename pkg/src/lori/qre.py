"""Logit quantal response equilibrium of a finite cost game, traced from alpha = 0.

The principal branch starts at the uniform profile. Each continuation step
predicts along the branch tangent, d pi / d alpha = J^-1 dL/d alpha with
J = I - dL/d pi, then corrects with damped Newton on pi - L(pi, alpha).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ContinuationError(RuntimeError):
    def __init__(self, alpha, profile, msg="step size underflow"):
        super().__init__(f"{msg} at alpha={alpha:.6g}")
        self.alpha = alpha
        self.profile = profile


@dataclass
class NormalFormGame:
    """costs[i][p_1, ..., p_n] is player i's cost under the joint profile."""

    costs: list
    players: tuple = None
    strategies: tuple = None

    def __post_init__(self):
        self.costs = [np.asarray(c, dtype=float) for c in self.costs]
        shapes = {c.shape for c in self.costs}
        if len(shapes) != 1:
            raise ValueError(f"cost tensors disagree in shape: {shapes}")
        if self.costs[0].ndim != len(self.costs):
            raise ValueError("need one cost tensor axis per player")
        if not all(np.all(np.isfinite(c)) for c in self.costs):
            raise ValueError("costs must be finite")
        if self.players is None:
            self.players = tuple(range(len(self.costs)))

    @property
    def shape(self) -> tuple:
        return self.costs[0].shape

    @property
    def n_players(self) -> int:
        return len(self.costs)


@dataclass
class MixedProfile:
    vectors: list

    @classmethod
    def uniform(cls, game: NormalFormGame) -> "MixedProfile":
        return cls([np.full(n, 1.0 / n) for n in game.shape])

    @classmethod
    def from_flat(cls, x: np.ndarray, shape: Sequence[int]) -> "MixedProfile":
        cuts = np.cumsum(shape)[:-1]
        return cls([v.copy() for v in np.split(np.asarray(x, dtype=float), cuts)])

    def flat(self) -> np.ndarray:
        return np.concatenate(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def __len__(self):
        return len(self.vectors)


@dataclass(frozen=True)
class QreParams:
    target_alpha: float = 1.0
    initial_step: float = 0.05
    min_step: float = 1e-6
    max_step: float = 0.5
    tol: float = 1e-10
    max_corrector_iter: int = 30
    max_profile_step: float = 0.25
    logit_sign: float = -1.0  # -1: choice probability falls with cost
    exact_player_limit: int = 6
    mc_samples: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.target_alpha < 0:
            raise ValueError("target_alpha must be >= 0")
        if min(self.initial_step, self.min_step, self.max_step, self.tol) <= 0:
            raise ValueError("step sizes and tolerance must be positive")


@dataclass
class QreResult:
    profile: MixedProfile
    alpha: float
    trace: list = field(default_factory=list)  # (alpha, flat profile) at accepted steps
    residual: float = 0.0


def _softmax(u: np.ndarray, alpha: float, sign: float) -> np.ndarray:
    z = sign * alpha * u
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


class _Contraction:
    """Expected costs and their cross derivatives under a mixed profile."""

    def __init__(self, game: NormalFormGame, params: QreParams):
        self.game = game
        self.shape = game.shape
        self.n = game.n_players
        self.exact = self.n <= params.exact_player_limit
        if not self.exact:
            rng = np.random.default_rng(params.seed)
            self.samples = np.stack([rng.integers(0, k, params.mc_samples) for k in self.shape], axis=1)
            self.vals = []
            for i in range(self.n):
                idx = [self.samples[:, j][:, None] for j in range(self.n)]
                idx[i] = np.arange(self.shape[i])[None, :]
                self.vals.append(game.costs[i][tuple(idx)])  # (N, n_i)

    def _contract(self, tensor, profile, keep):
        out = tensor
        for j in reversed(range(self.n)):
            if j in keep:
                continue
            out = np.tensordot(out, profile[j], axes=([j], [0]))
        return out

    def _weights(self, profile, skip):
        w = np.ones(len(self.samples))
        for j in range(self.n):
            if j not in skip:
                w = w * self.shape[j] * profile[j][self.samples[:, j]]
        return w

    def expected(self, i: int, profile) -> np.ndarray:
        if self.exact:
            return self._contract(self.game.costs[i], profile, (i,))
        return (self.vals[i] * self._weights(profile, (i,))[:, None]).mean(axis=0)

    def cross(self, i: int, j: int, profile) -> np.ndarray:
        """d U_i(p) / d pi_j(q) as an (n_i, n_j) matrix."""
        if self.exact:
            m = self._contract(self.game.costs[i], profile, (i, j))
            return m if i < j else m.T
        w = self._weights(profile, (i, j)) * self.shape[j]
        onehot = np.zeros((len(self.samples), self.shape[j]))
        onehot[np.arange(len(self.samples)), self.samples[:, j]] = 1.0
        return (self.vals[i] * w[:, None]).T @ onehot / len(self.samples)


def expected_costs(game: NormalFormGame, profile: MixedProfile, traveler: int,
                   params: QreParams = QreParams()) -> np.ndarray:
    return _Contraction(game, params).expected(traveler, profile.vectors)


def logit_response(game: NormalFormGame, others: MixedProfile, traveler: int, alpha: float,
                   sign: float = -1.0, params: Optional[QreParams] = None) -> np.ndarray:
    """Logit choice probabilities of one player against the others' mixed strategies."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    params = params or QreParams()
    u = _Contraction(game, params).expected(traveler, others.vectors)
    return _softmax(u, alpha, sign)


class _Branch:
    def __init__(self, game: NormalFormGame, params: QreParams):
        self.game = game
        self.p = params
        self.con = _Contraction(game, params)
        self.shape = game.shape
        self.cuts = np.cumsum(self.shape)[:-1]
        self.offsets = np.concatenate([[0], np.cumsum(self.shape)])
        self.size = int(sum(self.shape))

    def split(self, x):
        return np.split(x, self.cuts)

    def respond(self, x, alpha):
        prof = self.split(x)
        us = [self.con.expected(i, prof) for i in range(len(prof))]
        ls = [_softmax(u, alpha, self.p.logit_sign) for u in us]
        return prof, us, ls

    def residual(self, x, alpha):
        _, _, ls = self.respond(x, alpha)
        return x - np.concatenate(ls)

    def jacobian(self, x, alpha):
        prof, us, ls = self.respond(x, alpha)
        s = self.p.logit_sign
        n = len(prof)
        jac = np.eye(self.size)
        d_alpha = np.empty(self.size)
        for i in range(n):
            li = ls[i]
            cov = np.diag(li) - np.outer(li, li)
            a, b = self.offsets[i], self.offsets[i + 1]
            d_alpha[a:b] = s * cov @ us[i]
            for j in range(n):
                if j == i:
                    continue
                c, d = self.offsets[j], self.offsets[j + 1]
                jac[a:b, c:d] -= s * alpha * cov @ self.con.cross(i, j, prof)
        f = x - np.concatenate(ls)
        return f, jac, d_alpha

    def clean(self, x):
        x = np.clip(x, 0.0, None)
        parts = self.split(x)
        return np.concatenate([v / v.sum() for v in parts])

    def correct(self, x, alpha):
        """Damped Newton at fixed alpha; returns (x, residual) or (None, residual)."""
        f = self.residual(x, alpha)
        r = float(np.max(np.abs(f)))
        for _ in range(self.p.max_corrector_iter):
            if r < self.p.tol:
                return x, r
            f, jac, _ = self.jacobian(x, alpha)
            try:
                dx = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError:
                return None, r
            t = 1.0
            while t > 1e-4:
                xn = self.clean(x + t * dx)
                fn = self.residual(xn, alpha)
                rn = float(np.max(np.abs(fn)))
                if rn < r or rn < self.p.tol:
                    x, r = xn, rn
                    break
                t *= 0.5
            else:
                return None, r
        return (x, r) if r < self.p.tol else (None, r)

    def tangent(self, x, alpha):
        _, jac, d_alpha = self.jacobian(x, alpha)
        return np.linalg.solve(jac, d_alpha)


def solve_qre(game: NormalFormGame, params: QreParams = QreParams(),
              warm_start: Optional[MixedProfile] = None) -> QreResult:
    """Logit QRE at `params.target_alpha` on the principal branch.

    `warm_start` tries Newton at the target directly from a nearby profile
    (for example the solution of a slightly perturbed game) and falls back
    to the full trace when that does not converge close by.
    """
    target = params.target_alpha
    uniform = MixedProfile.uniform(game)
    if target == 0:
        return QreResult(uniform, 0.0, [(0.0, uniform.flat())], 0.0)
    if game.n_players == 1:
        pi = _softmax(game.costs[0], target, params.logit_sign)
        return QreResult(MixedProfile([pi]), target, [(0.0, uniform.flat()), (target, pi)], 0.0)

    br = _Branch(game, params)
    if warm_start is not None:
        x0 = warm_start.flat()
        x, r = br.correct(x0, target)
        if x is not None and np.max(np.abs(x - x0)) <= params.max_profile_step:
            return QreResult(MixedProfile.from_flat(x, game.shape), target, [(target, x)], r)

    x = uniform.flat()
    alpha = 0.0
    h = min(params.initial_step, params.max_step)
    streak = 0
    trace = [(0.0, x.copy())]
    while alpha < target:
        step = min(h, target - alpha)
        try:
            pred = br.clean(x + step * br.tangent(x, alpha))
        except np.linalg.LinAlgError:
            pred = x
        xn, _ = br.correct(pred, alpha + step)
        if xn is not None and np.max(np.abs(xn - x)) <= params.max_profile_step:
            alpha = target if step == target - alpha else alpha + step
            x = xn
            trace.append((alpha, x.copy()))
            streak += 1
            if streak >= 3:
                h = min(2 * h, params.max_step)
                streak = 0
        else:
            streak = 0
            h *= 0.5
            if h < params.min_step:
                raise ContinuationError(alpha, MixedProfile.from_flat(x, game.shape))
    r = float(np.max(np.abs(br.residual(x, alpha))))
    return QreResult(MixedProfile.from_flat(x, game.shape), alpha, trace, r)
