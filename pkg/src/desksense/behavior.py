"""Behavior recognition over gesture sequences with 2-state HMMs.

Hidden states are the true gestures (typing / mouse), observations are the
classifier's outputs, so the emission matrix comes straight from the
classifier's confusion counts.  Each behavior gets its own transition
matrix trained by Baum-Welch with the emissions and initial distribution
held fixed; a sequence is classified by which behavior model gives it the
highest per-symbol forward log-likelihood.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


STOCHASTIC_TOL = 1e-12
DEFAULT_BW_TOL = 1e-6
DEFAULT_BW_MAX_ITER = 200


class Behavior(Enum):
    SURFING = "surfing"
    WORKING = "working"
    GAMING = "gaming"
    STATIC = "static"   # simulator profile only, never classified

    @classmethod
    def classified(cls) -> tuple["Behavior", ...]:
        """Tie-break order for classification."""
        return (cls.SURFING, cls.WORKING, cls.GAMING)


def _check_stochastic(name: str, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise ValueError(f"{name} has negative entries")
    sums = m.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > STOCHASTIC_TOL):
        raise ValueError(f"{name} rows must sum to 1 within {STOCHASTIC_TOL}")
    return m


@dataclass
class BehaviorHmm:
    """pi, A (transitions), B (emissions) for one behavior. 2 hidden states."""

    pi: np.ndarray
    A: np.ndarray
    B: np.ndarray
    behavior: Behavior | None = None

    def __post_init__(self):
        self.pi = _check_stochastic("pi", np.asarray(self.pi, dtype=float).reshape(2))
        self.A = _check_stochastic("A", np.asarray(self.A, dtype=float).reshape(2, 2))
        self.B = _check_stochastic("B", np.asarray(self.B, dtype=float).reshape(2, 2))


@dataclass
class GestureSequence:
    """Observed gesture labels in temporal order, optionally with hidden truth."""

    observations: np.ndarray
    hidden: np.ndarray | None = None

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=int)
        if self.observations.ndim != 1 or len(self.observations) == 0:
            raise ValueError("observations must be a non-empty 1-D sequence")
        if np.any((self.observations < 0) | (self.observations > 1)):
            raise ValueError("observations must be 0 (typing) or 1 (mouse)")
        if self.hidden is not None:
            self.hidden = np.asarray(self.hidden, dtype=int)
            if self.hidden.shape != self.observations.shape:
                raise ValueError("hidden truth must align with observations")

    def __len__(self) -> int:
        return len(self.observations)


def _scaled_forward(hmm: BehaviorHmm, obs: np.ndarray):
    """Forward pass with per-step scaling; returns (alphas, log-likelihood)."""
    alpha = hmm.pi * hmm.B[:, obs[0]]
    scale = alpha.sum()
    if scale == 0.0:
        return None, -np.inf
    alpha = alpha / scale
    log_like = np.log(scale)
    alphas = [alpha]
    for o in obs[1:]:
        alpha = (alpha @ hmm.A) * hmm.B[:, o]
        scale = alpha.sum()
        if scale == 0.0:
            return None, -np.inf
        alpha = alpha / scale
        log_like += np.log(scale)
        alphas.append(alpha)
    return np.array(alphas), float(log_like)


def forward_log_likelihood(hmm: BehaviorHmm, seq: GestureSequence) -> float:
    """log P(observations | model); -inf for impossible sequences."""
    _, log_like = _scaled_forward(hmm, seq.observations)
    return log_like


def _scaled_backward(hmm: BehaviorHmm, obs: np.ndarray) -> np.ndarray:
    """Backward variables normalized per step (sufficient for EM ratios)."""
    n = len(obs)
    betas = np.empty((n, 2))
    betas[-1] = 1.0
    for t in range(n - 2, -1, -1):
        b = hmm.A @ (hmm.B[:, obs[t + 1]] * betas[t + 1])
        s = b.sum()
        betas[t] = b / s if s > 0 else 0.0
    return betas


def baum_welch(
    sequences: list[GestureSequence],
    B: np.ndarray,
    pi: np.ndarray,
    A_init: np.ndarray | None = None,
    max_iter: int = DEFAULT_BW_MAX_ITER,
    tol: float = DEFAULT_BW_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """EM re-estimation of the transition matrix with B and pi held fixed.

    Returns (A, log-likelihood history); the history is non-decreasing up
    to numerical slack.  Rows whose state is never visited keep their
    previous values.
    """
    if not sequences:
        raise ValueError("need at least one training sequence")
    B = _check_stochastic("B", np.asarray(B, dtype=float).reshape(2, 2))
    pi = _check_stochastic("pi", np.asarray(pi, dtype=float).reshape(2))
    if A_init is None:
        A = np.array([[0.6, 0.4], [0.4, 0.6]])
    else:
        A = _check_stochastic("A_init", np.asarray(A_init, dtype=float).reshape(2, 2))
        if np.any(A <= 0):
            raise ValueError("A_init must be strictly positive")

    history = []
    for _ in range(max_iter):
        hmm = BehaviorHmm(pi=pi, A=A, B=B)
        total_ll = 0.0
        xi_num = np.zeros((2, 2))
        gamma_den = np.zeros(2)
        for seq in sequences:
            obs = seq.observations
            alphas, ll = _scaled_forward(hmm, obs)
            if alphas is None:
                total_ll = -np.inf
                continue
            total_ll += ll
            if len(obs) < 2:
                continue
            betas = _scaled_backward(hmm, obs)
            emit_beta = B[:, obs[1:]].T * betas[1:]          # (T-1, 2)
            terms = alphas[:-1, :, None] * A[None, :, :] * emit_beta[:, None, :]
            norms = terms.sum(axis=(1, 2))
            ok = norms > 0
            xi = terms[ok] / norms[ok, None, None]
            xi_num += xi.sum(axis=0)
            gamma_den += xi.sum(axis=(0, 2))
        history.append(total_ll)
        new_A = A.copy()
        for i in range(2):
            if gamma_den[i] > 0:
                new_A[i] = xi_num[i] / gamma_den[i]
        new_A = np.clip(new_A, 0.0, None)
        new_A /= new_A.sum(axis=1, keepdims=True)
        if len(history) >= 2:
            prev, last = history[-2], history[-1]
            # impossible data stays at -inf: nothing further to optimise
            if last == prev == -np.inf or abs(last - prev) < tol:
                A = new_A
                break
        A = new_A
    return A, np.array(history)


def build_emission(confusion: np.ndarray) -> np.ndarray:
    """Row-normalized confusion counts; add-one smoothing if any cell is zero."""
    counts = np.asarray(confusion, dtype=float).reshape(2, 2)
    if np.any(counts < 0):
        raise ValueError("confusion counts must be >= 0")
    if np.any(counts.sum(axis=1) == 0):
        raise ValueError("each true-class row needs at least one count")
    if np.any(counts == 0):
        counts = counts + 1.0
    return counts / counts.sum(axis=1, keepdims=True)


def estimate_initial(sequences: list[GestureSequence]) -> np.ndarray:
    """Initial state distribution from first-gesture frequencies (add-one)."""
    if not sequences:
        raise ValueError("need at least one sequence")
    firsts = np.array([seq.observations[0] for seq in sequences])
    counts = np.bincount(firsts, minlength=2).astype(float) + 1.0
    return counts / counts.sum()


def fit_behavior_models(
    training: dict[Behavior, list[GestureSequence]],
    B: np.ndarray,
    pi: np.ndarray | None = None,
    max_iter: int = DEFAULT_BW_MAX_ITER,
    tol: float = DEFAULT_BW_TOL,
) -> dict[Behavior, BehaviorHmm]:
    """One Baum-Welch-trained model per behavior.

    When pi is not given it is estimated per behavior from first-gesture
    frequencies.
    """
    models = {}
    for behavior, sequences in training.items():
        if not sequences:
            raise ValueError(f"no training sequences for {behavior}")
        pi_b = estimate_initial(sequences) if pi is None else np.asarray(pi, dtype=float)
        A, _ = baum_welch(sequences, B=B, pi=pi_b, max_iter=max_iter, tol=tol)
        models[behavior] = BehaviorHmm(pi=pi_b, A=A, B=B, behavior=behavior)
    return models


@dataclass
class BehaviorClassification:
    behavior: Behavior | None
    scores: dict[Behavior, float]
    method: str
    tie: bool = False
    unclassifiable: bool = False


def classify_behavior(
    models: dict[Behavior, BehaviorHmm],
    seq: GestureSequence,
    method: str = "likelihood",
) -> BehaviorClassification:
    """Assign a sequence to the best-matching behavior model.

    "likelihood" (default): argmax of forward log-likelihood per symbol.
    "model-distance": fit a candidate model on the sequence itself, then
    take the behavior minimizing [log P(O|candidate) - log P(O|model)] / T.
    Ties resolve in the fixed order surfing < working < gaming.
    """
    if len(models) < 2:
        raise ValueError("need at least two behavior models")
    n = len(seq)
    ordered = [b for b in Behavior.classified() if b in models]
    ordered += [b for b in models if b not in ordered]

    if method == "likelihood":
        scores = {b: forward_log_likelihood(models[b], seq) / n for b in ordered}
        better = max
    elif method == "model-distance":
        any_model = next(iter(models.values()))
        pi_c = estimate_initial([seq])
        A_c, _ = baum_welch([seq], B=any_model.B, pi=pi_c)
        candidate = BehaviorHmm(pi=pi_c, A=A_c, B=any_model.B)
        ll_candidate = forward_log_likelihood(candidate, seq)
        scores = {
            b: (ll_candidate - forward_log_likelihood(models[b], seq)) / n
            for b in ordered
        }
        better = min
    else:
        raise ValueError(f"unknown method {method!r}")

    finite = {b: s for b, s in scores.items() if np.isfinite(s)}
    if not finite:
        return BehaviorClassification(
            behavior=None, scores=scores, method=method, unclassifiable=True
        )
    best_score = better(finite.values())
    winners = [b for b in ordered if np.isfinite(scores[b]) and scores[b] == best_score]
    return BehaviorClassification(
        behavior=winners[0], scores=scores, method=method, tie=len(winners) > 1
    )


@dataclass(frozen=True)
class BehaviorProfile:
    """Ground-truth hidden-chain parameters used by the sequence simulator."""

    behavior: Behavior
    pi_true: np.ndarray
    A_true: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "pi_true", _check_stochastic("pi_true", np.asarray(self.pi_true).reshape(2))
        )
        object.__setattr__(
            self, "A_true", _check_stochastic("A_true", np.asarray(self.A_true).reshape(2, 2))
        )

    def stationary(self) -> np.ndarray:
        """Stationary distribution of A_true."""
        vals, vecs = np.linalg.eig(self.A_true.T)
        v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
        v = np.abs(v)
        return v / v.sum()


def _profile(behavior, p_typing, typing_run, mouse_run) -> BehaviorProfile:
    a = 1.0 / typing_run
    b = 1.0 / mouse_run
    return BehaviorProfile(
        behavior=behavior,
        pi_true=np.array([p_typing, 1.0 - p_typing]),
        A_true=np.array([[1.0 - a, a], [b, 1.0 - b]]),
    )


# Quantified keyboard/mouse usage profiles.  Stationary typing fractions
# 0.25 / 0.65 / 0.50, with gaming switching the fastest; run lengths chosen
# so each chain's stationary distribution matches its typing fraction.
PROFILES: dict[Behavior, BehaviorProfile] = {
    Behavior.SURFING: _profile(Behavior.SURFING, 0.25, typing_run=2.0, mouse_run=6.0),
    Behavior.WORKING: _profile(Behavior.WORKING, 0.65, typing_run=6.0, mouse_run=42.0 / 13.0),
    Behavior.GAMING: _profile(Behavior.GAMING, 0.50, typing_run=2.0, mouse_run=2.0),
    Behavior.STATIC: _profile(Behavior.STATIC, 0.50, typing_run=12.0, mouse_run=12.0),
}


def sample_behavior_sequence(
    profile: BehaviorProfile, B: np.ndarray, length: int, seed: int = 0
) -> GestureSequence:
    """Sample a hidden gesture chain and emit observations through B."""
    if length < 1:
        raise ValueError("length must be >= 1")
    B = _check_stochastic("B", np.asarray(B, dtype=float).reshape(2, 2))
    rng = np.random.default_rng(seed)
    hidden = np.empty(length, dtype=int)
    hidden[0] = rng.choice(2, p=profile.pi_true)
    for t in range(1, length):
        hidden[t] = rng.choice(2, p=profile.A_true[hidden[t - 1]])
    observations = np.array([rng.choice(2, p=B[h]) for h in hidden])
    return GestureSequence(observations=observations, hidden=hidden)
