"""Reference complexity measures.

Two families: weight-based measures computed from a :class:`TensorArchive`
(parameter counts and log norm products), and the noisy oracle, which is the
true generalization gap plus Gaussian noise and serves as a strong baseline.
The parameter count stands in for a VC-dimension bound; it is a proxy, not
the bound itself.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .archive import Layer, TensorArchive
from .population import MeasureVector, Population
from .rng import model_stream

__all__ = [
    "BaselineError",
    "SpectralNormError",
    "measure_param_count",
    "measure_vc_proxy",
    "measure_log_frobenius_product",
    "spectral_norm",
    "measure_log_spectral_product",
    "measure_noisy_oracle",
    "ARCHIVE_BASELINES",
]


class BaselineError(ValueError):
    pass


class SpectralNormError(BaselineError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def measure_param_count(arch: TensorArchive) -> float:
    return float(sum(layer.size for layer in arch.layers))


def measure_vc_proxy(arch: TensorArchive) -> float:
    """params * depth * log2(params), depth being the number of non-bias layers."""
    params = measure_param_count(arch)
    depth = len(arch.weight_layers())
    if params <= 1 or depth == 0:
        return 0.0
    return params * depth * math.log2(params)


def _require_weights(arch: TensorArchive) -> tuple[Layer, ...]:
    layers = arch.weight_layers()
    if not layers:
        raise BaselineError("archive has no non-bias layer")
    return layers


def measure_log_frobenius_product(arch: TensorArchive) -> float:
    """Sum over non-bias layers of ln ||W||_F."""
    total = []
    for layer in _require_weights(arch):
        norm = float(np.linalg.norm(layer.data.astype(np.float64).ravel()))
        if norm == 0.0:
            raise BaselineError(f"layer {layer.name!r} is all zeros; its log norm is -inf")
        total.append(math.log(norm))
    return math.fsum(total)


def spectral_norm(w: np.ndarray, tol: float = 1e-6, max_iter: int = 1000, seed: int = 0) -> float:
    """Largest singular value of a 2-D matrix by power iteration on W^T W.

    Stops once the relative eigen-residual ||W^T W v - lambda v|| / lambda of
    the unit iterate drops below ``tol``.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"spectral_norm needs a matrix, got shape {w.shape}")
    v = np.random.default_rng(seed).standard_normal(w.shape[1])
    v /= np.linalg.norm(v)
    residual = math.inf
    for _ in range(max_iter):
        wv = w @ v
        wtwv = w.T @ wv
        lam = float(wv @ wv)
        if lam == 0.0:
            if not np.any(w):
                raise BaselineError("matrix is all zeros; its spectral norm is 0")
            v = np.random.default_rng(seed + 1).standard_normal(w.shape[1])
            v /= np.linalg.norm(v)
            continue
        residual = float(np.linalg.norm(wtwv - lam * v)) / lam
        if residual < tol:
            return math.sqrt(lam)
        v = wtwv / np.linalg.norm(wtwv)
    raise SpectralNormError(
        f"power iteration did not reach tol={tol:g} in {max_iter} iterations (residual {residual:.3g})", residual
    )


def measure_log_spectral_product(arch: TensorArchive, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Sum over non-bias layers of ln sigma_max(W); conv kernels flattened to (out, in*kh*kw)."""
    total = []
    for layer in _require_weights(arch):
        if not np.any(layer.data):
            raise BaselineError(f"layer {layer.name!r} is all zeros; its log norm is -inf")
        try:
            sigma = spectral_norm(layer.as_matrix(), tol, max_iter)
        except SpectralNormError as exc:
            raise SpectralNormError(f"layer {layer.name!r}: {exc}", exc.residual) from None
        total.append(math.log(sigma))
    return math.fsum(total)


def measure_noisy_oracle(pop: Population, sigma: float, seed: int) -> MeasureVector:
    """Gap plus N(0, sigma^2) noise, drawn from a stream keyed by each model's (coord, replica)."""
    if not sigma >= 0:
        raise BaselineError(f"sigma must be non-negative, got {sigma}")
    values = np.empty(len(pop), dtype=np.float64)
    for i, rec in enumerate(pop.records):
        eps = model_stream(seed, "noisy_oracle", rec.coord, rec.replica).standard_normal()
        values[i] = pop.gaps[i] + sigma * eps
    return MeasureVector(f"noisy_oracle_{sigma:g}", values)


ARCHIVE_BASELINES: dict[str, Callable[[TensorArchive], float]] = {
    "param_count": measure_param_count,
    "vc_proxy": measure_vc_proxy,
    "log_frobenius_product": measure_log_frobenius_product,
    "log_spectral_product": measure_log_spectral_product,
}
