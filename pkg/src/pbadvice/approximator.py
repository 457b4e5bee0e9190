"""Small numpy MLP with hand-written backprop, a Gaussian policy head and Adam."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mdp import ValidationError

LOG_STD_MIN, LOG_STD_MAX = -5.0, 1.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Mlp:
    """Fully connected net, tanh on hidden layers and identity on the output.

    All weights and biases live in one flat vector ``params``; ``weights`` and
    ``biases`` are views into it, so optimizers update a single array.
    """

    def __init__(self, layer_sizes: Sequence[int], rng: np.random.Generator | None = None):
        sizes = [int(n) for n in layer_sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValidationError(f"bad layer sizes {layer_sizes!r}")
        self.layer_sizes = sizes
        n = sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))
        self.params = np.zeros(n)
        self.weights, self.biases = self._views(self.params)
        self.version = 0
        if rng is not None:
            for W in self.weights:
                fan_out, fan_in = W.shape
                lim = math.sqrt(6.0 / (fan_in + fan_out))
                W[...] = rng.uniform(-lim, lim, size=W.shape)

    def _views(self, flat: np.ndarray):
        Ws, bs, k = [], [], 0
        for i, o in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            Ws.append(flat[k:k + o * i].reshape(o, i))
            k += o * i
            bs.append(flat[k:k + o])
            k += o
        return Ws, bs

    @property
    def n_params(self) -> int:
        return self.params.size

    def touch(self) -> None:
        """Mark parameters as changed; older caches become stale."""
        self.version += 1

    def forward(self, x) -> tuple[np.ndarray, "MlpCache"]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.layer_sizes[0],):
            raise ValidationError(f"input shape {x.shape} does not match first layer {self.layer_sizes[0]}")
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = W @ h + b
            if k < last:
                h = np.tanh(h)
            acts.append(h)
        return h, MlpCache(acts, self.version)

    def backward(self, cache: "MlpCache", upstream) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(flat parameter gradient, input gradient)`` of ``upstream . output``."""
        if cache.version != self.version:
            raise ValidationError("stale cache: parameters changed since the forward pass")
        g = np.asarray(upstream, dtype=float).reshape(self.layer_sizes[-1])
        grad = np.empty_like(self.params)
        gW, gb = self._views(grad)
        acts = cache.acts
        for k in range(len(self.weights) - 1, -1, -1):
            if k < len(self.weights) - 1:
                g = g * (1.0 - acts[k + 1] ** 2)
            np.outer(g, acts[k], out=gW[k])
            gb[k][...] = g
            g = self.weights[k].T @ g
        return grad, g


@dataclass
class MlpCache:
    acts: list
    version: int


@dataclass
class Adam:
    """Bias-corrected Adam; ``step`` returns the new parameter vector in place."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)
    t: int = 0

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        if grads.shape != params.shape or self.m.shape != params.shape:
            raise ValidationError("Adam state, parameters and gradients must share a shape")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        self.m *= b1
        self.m += (1.0 - b1) * grads
        self.v *= b2
        self.v += (1.0 - b2) * grads * grads
        lr_t = self.learning_rate * math.sqrt(1.0 - b2 ** self.t) / (1.0 - b1 ** self.t)
        # eps is applied to the bias-corrected second moment
        params -= lr_t * self.m / (np.sqrt(self.v) + self.eps * math.sqrt(1.0 - b2 ** self.t))
        return params


def adam_step(state: Adam, params: np.ndarray, grads: np.ndarray, learning_rate: float | None = None):
    if learning_rate is not None:
        state.learning_rate = learning_rate
    return state.step(params, grads), state


def clamp_log_std(log_std: float) -> float:
    return min(max(float(log_std), LOG_STD_MIN), LOG_STD_MAX)


def gaussian_log_prob(mean, log_std, a):
    """``log N(a; mean, exp(log_std)^2)``."""
    z = (a - mean) * np.exp(-log_std)
    return -0.5 * z * z - log_std - _LOG_SQRT_2PI


def gaussian_log_prob_grads(mean, log_std, a):
    """Partial derivatives of the Gaussian log density w.r.t. ``mean`` and ``log_std``."""
    inv_var = np.exp(-2.0 * log_std)
    diff = a - mean
    return diff * inv_var, diff * diff * inv_var - 1.0


class _ScaledInput:
    def _scale(self, obs) -> np.ndarray:
        return (np.asarray(obs, dtype=float) - self.center) / self.half_width


class GaussianMlpPolicy(_ScaledInput):
    """Normal policy whose mean and log-std are the two outputs of an MLP.

    Observations are affinely mapped from ``[low, high]`` to ``[-1, 1]`` before
    the first layer. The log-std output is clamped to ``[-5, 1]``.
    """

    def __init__(self, hidden: Sequence[int], rng: np.random.Generator, optimizer: Adam,
                 low, high, n_inputs: int | None = None):
        low, high = np.asarray(low, dtype=float), np.asarray(high, dtype=float)
        self.center = 0.5 * (low + high)
        self.half_width = 0.5 * (high - low)
        n_in = n_inputs or low.size
        self.net = Mlp([n_in, *hidden, 2], rng)
        self.opt = optimizer

    def head(self, obs) -> tuple[float, float]:
        out, _ = self.net.forward(self._scale(obs))
        return float(out[0]), clamp_log_std(out[1])

    def mean_action(self, obs) -> float:
        return self.head(obs)[0]

    def sample(self, obs, rng: np.random.Generator) -> float:
        mean, log_std = self.head(obs)
        return mean + math.exp(log_std) * float(rng.standard_normal())

    def log_prob(self, obs, a) -> float:
        mean, log_std = self.head(obs)
        return float(gaussian_log_prob(mean, log_std, a))

    def grad_log_prob(self, obs, a) -> np.ndarray:
        out, cache = self.net.forward(self._scale(obs))
        raw = float(out[1])
        log_std = clamp_log_std(raw)
        d_mean, d_log_std = gaussian_log_prob_grads(float(out[0]), log_std, a)
        if raw != log_std:
            d_log_std = 0.0
        grad, _ = self.net.backward(cache, (d_mean, d_log_std))
        return grad

    def actor_step(self, obs, a, coeff: float) -> None:
        g = self.grad_log_prob(obs, a)
        self.opt.step(self.net.params, -coeff * g)
        self.net.touch()


class MlpCritic(_ScaledInput):
    def __init__(self, hidden: Sequence[int], rng: np.random.Generator, optimizer: Adam,
                 low, high):
        low, high = np.asarray(low, dtype=float), np.asarray(high, dtype=float)
        self.center = 0.5 * (low + high)
        self.half_width = 0.5 * (high - low)
        self.net = Mlp([low.size, *hidden, 1], rng)
        self.opt = optimizer

    def value(self, obs) -> float:
        out, _ = self.net.forward(self._scale(obs))
        return float(out[0])

    def grad_value(self, obs) -> np.ndarray:
        _, cache = self.net.forward(self._scale(obs))
        return self.net.backward(cache, (1.0,))[0]

    def critic_step(self, obs, delta: float) -> None:
        self.opt.step(self.net.params, -delta * self.grad_value(obs))
        self.net.touch()
