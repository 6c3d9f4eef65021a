import numpy as np

from .errors import ContractError

SIMPLEX_TOL = 1e-6


def _grouped(a: np.ndarray, groups: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-1] % groups != 0:
        raise ContractError(f"Action of length {a.shape[-1]} cannot be split into {groups} groups.")
    return a.reshape(*a.shape[:-1], groups, a.shape[-1] // groups)


def on_simplex(a: np.ndarray, groups: int = 1, tol: float = SIMPLEX_TOL) -> bool:
    g = _grouped(a, groups)
    if not np.all(np.isfinite(g)):
        return False
    if np.any(g < -tol):
        return False
    return bool(np.all(np.abs(g.sum(axis=-1) - 1.0) <= tol))


def check_simplex(a: np.ndarray, groups: int = 1, tol: float = SIMPLEX_TOL) -> None:
    if not on_simplex(a, groups, tol):
        raise ContractError(f"Partition {np.round(np.asarray(a), 6).tolist()} is not on the probability simplex.")


def renormalize(a: np.ndarray, groups: int = 1) -> np.ndarray:
    """Divide every group by its sum. Groups summing to zero become uniform."""
    g = _grouped(a, groups)
    s = g.sum(axis=-1, keepdims=True)
    n = g.shape[-1]
    out = np.where(s > 0, g / np.where(s > 0, s, 1.0), 1.0 / n)
    return out.reshape(np.shape(a))


def uniform_partition(n: int, groups: int = 1) -> np.ndarray:
    return np.full(n * groups, 1.0 / n)


def sample_dirichlet(rng: np.random.Generator, n: int, groups: int = 1) -> np.ndarray:
    """Uniform draw from the (product of) probability simplexes."""
    return rng.dirichlet(np.ones(n), size=groups).reshape(-1)


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)
