"""FastICA decomposition and correlation-ranked component-selection denoising.

Spatial ICA: channels are variables, time points are observations. The
symmetric (parallel) fixed-point iteration with a log-cosh contrast is used
so component estimation has no order dependence; selection then ranks the
component time courses by their correlation with a cardiac reference wave
and reconstructs the recording from the least-correlated fraction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._util import readonly, round_half_away, substream
from .errors import ConfigError, DimensionError, NumericError

_EIG_RTOL = 1e-12  # rank threshold relative to the largest eigenvalue


@dataclass(frozen=True)
class DenoiseConfig:
    """Settings for decomposition and component selection.

    ``polarity`` chooses between reconstructing from the least-correlated
    components (``"keep_lowest"``, the default) and instead dropping the
    most-correlated ones (``"drop_highest"``); which reading is right is
    genuinely ambiguous, so both are available.
    """

    keep_fraction: float = 0.2
    correlation_mode: str = "absolute"
    max_iterations: int = 500
    tolerance: float = 1e-6
    seed: int = 0
    polarity: str = "keep_lowest"

    def __post_init__(self) -> None:
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ConfigError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if self.correlation_mode not in ("absolute", "signed"):
            raise ConfigError(f"unknown correlation_mode {self.correlation_mode!r}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.polarity not in ("keep_lowest", "drop_highest"):
            raise ConfigError(f"unknown polarity {self.polarity!r}")

    def keep_count(self, n_components: int) -> int:
        return max(1, round_half_away(self.keep_fraction * n_components))


@dataclass(frozen=True)
class IcaModel:
    """Whitening plus unmixing learned from one channels-by-samples matrix."""

    mean_vector: np.ndarray           # (channels,)
    whitening_matrix: np.ndarray      # (components, channels)
    dewhitening_matrix: np.ndarray    # (channels, components)
    unmixing_matrix: np.ndarray       # (components, components), whitened space
    n_components: int
    convergence_iterations: int = 0
    converged: bool = False

    def __post_init__(self) -> None:
        for name in ("mean_vector", "whitening_matrix", "dewhitening_matrix",
                     "unmixing_matrix"):
            object.__setattr__(self, name, readonly(getattr(self, name)))

    def sources(self, X: np.ndarray) -> np.ndarray:
        """Component time courses of a channels-by-samples matrix."""
        centered = np.asarray(X, dtype=np.float64) - self.mean_vector[:, None]
        return self.unmixing_matrix @ (self.whitening_matrix @ centered)


def center_whiten(X: np.ndarray) -> tuple[np.ndarray, IcaModel]:
    """Remove channel means and whiten via covariance eigendecomposition.

    Returns the whitened matrix (identity sample covariance) and a partial
    model whose unmixing matrix is still the identity.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("center_whiten expects a channels-by-samples matrix")
    n_ch, n_samples = X.shape
    if n_samples <= n_ch:
        raise DimensionError(
            f"need more samples than channels, got {n_ch} x {n_samples}"
        )
    if not np.isfinite(X).all():
        raise NumericError("input matrix contains non-finite values")
    mean = X.mean(axis=1)
    centered = X - mean[:, None]
    cov = (centered @ centered.T) / n_samples
    eigvals, eigvecs = np.linalg.eigh(cov)
    threshold = _EIG_RTOL * eigvals[-1]
    if eigvals[0] < threshold:
        raise NumericError(
            f"covariance is rank deficient: eigenvalue {eigvals[0]:.3e} below "
            f"threshold {threshold:.3e} (= 1e-12 x largest)"
        )
    scale = np.sqrt(eigvals)
    whitening = (eigvecs / scale).T          # diag(1/sqrt(d)) @ E^T
    dewhitening = eigvecs * scale            # E @ diag(sqrt(d))
    whitened = whitening @ centered
    model = IcaModel(
        mean_vector=mean,
        whitening_matrix=whitening,
        dewhitening_matrix=dewhitening,
        unmixing_matrix=np.eye(n_ch),
        n_components=n_ch,
    )
    return whitened, model


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    """W <- (W W^T)^(-1/2) W, the symmetric orthonormalization step."""
    vals, vecs = np.linalg.eigh(W @ W.T)
    if vals[0] <= 0:
        raise NumericError("unmixing candidate lost rank during iteration")
    return (vecs / np.sqrt(vals)) @ vecs.T @ W


def fastica(
    whitened: np.ndarray,
    config: DenoiseConfig,
    base: IcaModel | None = None,
) -> IcaModel:
    """Symmetric fixed-point FastICA with the log-cosh contrast.

    Converged when every row of the unmixing matrix stops rotating
    (max |1 - |<w_new, w_old>|| below tolerance); hitting max_iterations
    only clears the ``converged`` flag, it is not an error.
    """
    Z = np.asarray(whitened, dtype=np.float64)
    if Z.ndim != 2:
        raise DimensionError("fastica expects a components-by-samples matrix")
    n_comp, n_samples = Z.shape
    rng = substream(config.seed)
    W = _sym_decorrelate(rng.normal(0.0, 1.0, (n_comp, n_comp)))
    converged = False
    iterations = 0
    G = np.empty_like(Z)
    for iterations in range(1, config.max_iterations + 1):
        np.tanh(W @ Z, out=G)
        # E[g'(u)] per row without the (1 - G^2) temporary
        g_prime_mean = 1.0 - np.einsum("ij,ij->i", G, G) / n_samples
        W_new = (G @ Z.T) / n_samples - g_prime_mean[:, None] * W
        W_new = _sym_decorrelate(W_new)
        if not np.isfinite(W_new).all():
            raise NumericError("FastICA iteration produced non-finite values")
        delta = np.max(np.abs(1.0 - np.abs(np.sum(W_new * W, axis=1))))
        W = W_new
        if delta < config.tolerance:
            converged = True
            break
    if base is None:
        base = IcaModel(
            mean_vector=np.zeros(n_comp),
            whitening_matrix=np.eye(n_comp),
            dewhitening_matrix=np.eye(n_comp),
            unmixing_matrix=np.eye(n_comp),
            n_components=n_comp,
        )
    return replace(
        base,
        unmixing_matrix=W,
        convergence_iterations=iterations,
        converged=converged,
    )


def component_scores(
    model: IcaModel,
    X: np.ndarray,
    reference: np.ndarray,
    correlation_mode: str = "absolute",
) -> list[tuple[int, float]]:
    """Pearson correlation of each component time course with a reference.

    Zero-variance components or a zero-variance reference score 0 by
    convention.
    """
    reference = np.asarray(reference, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if reference.shape[0] != X.shape[1]:
        raise DimensionError(
            f"reference length {reference.shape[0]} != sample count {X.shape[1]}"
        )
    sources = model.sources(X)
    ref_c = reference - reference.mean()
    ref_norm = np.linalg.norm(ref_c)
    scores: list[tuple[int, float]] = []
    for i, row in enumerate(sources):
        row_c = row - row.mean()
        row_norm = np.linalg.norm(row_c)
        if ref_norm < 1e-300 or row_norm < 1e-300:
            r = 0.0
        else:
            r = float(row_c @ ref_c / (row_norm * ref_norm))
        if correlation_mode == "absolute":
            r = abs(r)
        scores.append((i, r))
    return scores


def select_components(
    scores: list[tuple[int, float]], config: DenoiseConfig
) -> list[int]:
    """Indices of components to reconstruct from, per the polarity rule."""
    ordered = sorted(scores, key=lambda item: (item[1], item[0]))
    n = len(ordered)
    n_sel = config.keep_count(n)
    if config.polarity == "keep_lowest":
        chosen = [idx for idx, _ in ordered[:n_sel]]
    else:  # drop the n_sel most-correlated components
        chosen = [idx for idx, _ in ordered[: max(0, n - n_sel)]]
    return sorted(chosen)


def denoise_with_details(
    X: np.ndarray, reference: np.ndarray, config: DenoiseConfig
) -> tuple[np.ndarray, list[tuple[int, float]], list[int], IcaModel]:
    """Denoise and also return the scores, kept indices, and fitted model."""
    whitened, base = center_whiten(X)
    model = fastica(whitened, config, base)
    scores = component_scores(model, X, reference, config.correlation_mode)
    kept = select_components(scores, config)
    sources = model.sources(X)
    masked = np.zeros_like(sources)
    masked[kept] = sources[kept]
    reconstructed = (
        model.dewhitening_matrix @ (model.unmixing_matrix.T @ masked)
        + model.mean_vector[:, None]
    )
    return reconstructed, scores, kept, model


def denoise(
    X: np.ndarray, reference: np.ndarray, config: DenoiseConfig
) -> np.ndarray:
    """Reconstruct the matrix from the selected fraction of components."""
    reconstructed, _, _, _ = denoise_with_details(X, reference, config)
    return reconstructed
