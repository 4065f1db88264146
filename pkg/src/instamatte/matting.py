"""Matting backends: the per-patch contract and the built-in reference solver.

A backend is any object with a ``matte(image, trimap) -> alpha`` method and
a boolean ``reentrant`` attribute. :func:`matte_patch` wraps every backend
call: it validates the request, clamps the result to ``[0, 1]`` and snaps
constrained pixels to exactly 1 (foreground) and 0 (background), so the
contract holds no matter what the backend returns.

The reference backend solves the classical affinity formulation: a sparse
matting Laplacian ``L`` built from local color statistics, constrained by
a quadratic penalty on the trimap's known pixels,

    (L + c D) alpha = c b

with ``D`` the diagonal indicator of constrained pixels and ``b`` the
foreground indicator. The system is symmetric positive definite, so it is
solved by conjugate gradient seeded from the trimap's 0 / 0.5 / 1 values.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sparse

from . import io, kernels
from .core import (
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    require_same_shape,
    trimap_alpha_seed,
    validate_trimap,
)
from .errors import (
    ImageTooSmallError,
    MattingBackendError,
    MatteError,
    SolverConvergenceError,
)


@dataclass(frozen=True)
class SolverParams:
    """Reference-backend tunables.

    ``cg_tolerance`` bounds the absolute 2-norm of the CG residual. The
    matting system has near-null modes at the ``epsilon`` scale, so the
    bound must sit well below ``epsilon`` times the constraint weight for
    the solve to agree with a direct factorization.
    """

    window_radius: int = 1
    epsilon: float = 1e-7
    constraint_weight: float = 100.0
    cg_tolerance: float = 1e-8
    cg_max_iterations: int = 2000

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")
        if not (self.epsilon > 0 and self.constraint_weight > 0 and self.cg_tolerance > 0):
            raise ValueError("epsilon, constraint_weight and cg_tolerance must be positive")


@dataclass(frozen=True)
class MattingRequest:
    """An image patch and its trimap, validated together.

    The trimap must match the image dimensions and contain at least one
    foreground and one background pixel, otherwise the linear system has
    nothing to anchor the matte to.
    """

    image: np.ndarray
    trimap: np.ndarray

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise MatteError(f"expected an (h, w, 3) image, got shape {self.image.shape}")
        t = validate_trimap(self.trimap)
        require_same_shape(self.image, t)
        if not (t == TRIMAP_FG).any() or not (t == TRIMAP_BG).any():
            raise MatteError("trimap needs at least one foreground and one background pixel")


def build_matting_laplacian(image: np.ndarray, params: SolverParams) -> sparse.csr_matrix:
    """Sparse symmetric PSD affinity Laplacian over all pixels of ``image``.

    Pixels are coupled only when they share a (2r+1)^2 window; affinities
    come from each window's color mean and covariance, ridge-regularized by
    ``params.epsilon``. Rows sum to zero. The assembled matrix is
    explicitly symmetrized so ``L == L.T`` holds bit-exactly.
    """
    img = np.asarray(image)
    h, w = img.shape[:2]
    diam = 2 * params.window_radius + 1
    if h < diam or w < diam:
        raise ImageTooSmallError(f"image {w}x{h} smaller than the {diam}x{diam} solver window")
    flat = img.reshape(h * w, 3).astype(np.float64) / 255.0

    win_inds = kernels.window_indices(h, w, params.window_radius)
    vals = kernels.laplacian_values(flat, win_inds, params.epsilon)

    ws = win_inds.shape[1]
    inds32 = win_inds.astype(np.int32)
    rows = np.repeat(inds32, ws, axis=1).ravel()
    cols = np.tile(inds32, (1, ws)).ravel()
    n = h * w
    lap = sparse.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return ((lap + lap.T) * 0.5).tocsr()


def _assert_energy_monotone(energies: np.ndarray) -> None:
    slack = 1e-9 * (1.0 + float(np.abs(energies).max()))
    steps = np.diff(energies)
    if steps.size and float(steps.max()) > slack:
        k = int(np.argmax(steps))
        raise AssertionError(
            f"CG energy increased at iteration {k + 1}: {energies[k]} -> {energies[k + 1]}"
        )


def solve_alpha(
    image: np.ndarray,
    trimap: np.ndarray,
    params: SolverParams = SolverParams(),
    debug: bool = False,
) -> np.ndarray:
    """Reference matting solve; returns an alpha map in ``[0, 1]``.

    ``debug=True`` additionally checks that the CG iterate's quadratic
    energy never increases.
    """
    t = validate_trimap(trimap)
    require_same_shape(image, t)
    fg = (t == TRIMAP_FG).ravel()
    bg = (t == TRIMAP_BG).ravel()
    constrained = fg | bg

    lap = build_matting_laplacian(image, params)
    c = params.constraint_weight
    system = (lap + sparse.diags(c * constrained.astype(np.float64))).tocsr()
    rhs = c * fg.astype(np.float64)
    x0 = trimap_alpha_seed(t).ravel()

    x, _, resid, energies = kernels.cg_solve(
        system, rhs, x0, params.cg_tolerance, params.cg_max_iterations, collect_energy=debug
    )
    if resid > params.cg_tolerance:
        raise SolverConvergenceError(
            f"CG residual {resid:.3e} above {params.cg_tolerance:.1e} "
            f"after {params.cg_max_iterations} iterations"
        )
    if debug and energies is not None:
        _assert_energy_monotone(energies)

    alpha = np.clip(x.reshape(t.shape), 0.0, 1.0)
    alpha[t == TRIMAP_FG] = 1.0
    alpha[t == TRIMAP_BG] = 0.0
    return alpha


class ReferenceBackend:
    """Deterministic affinity-based solver backend."""

    reentrant = True

    def __init__(self, params: SolverParams = SolverParams()):
        self.params = params

    def matte(self, image: np.ndarray, trimap: np.ndarray) -> np.ndarray:
        return solve_alpha(image, trimap, self.params)


class ExternalProcessBackend:
    """Backend that shells out to a matting executable.

    The command is invoked as ``<command...> <rgb.png> <trimap.png> <alpha.png>``
    and must write a single-channel 8-bit alpha PNG to the output path and
    exit 0. Non-zero exit or an unreadable output raises
    :class:`MattingBackendError`.
    """

    def __init__(self, command, reentrant: bool = False):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.reentrant = reentrant

    def matte(self, image: np.ndarray, trimap: np.ndarray) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="instamatte-") as tmp:
            tmp = Path(tmp)
            rgb_path = tmp / "patch.png"
            trimap_path = tmp / "trimap.png"
            alpha_path = tmp / "alpha.png"
            io.write_rgb(rgb_path, image)
            io.write_trimap(trimap_path, trimap)
            proc = subprocess.run(
                [*self.command, str(rgb_path), str(trimap_path), str(alpha_path)],
                capture_output=True,
                text=True,
            )
            if proc.returncode != 0:
                detail = proc.stderr.strip() or proc.stdout.strip() or "no output"
                raise MattingBackendError(
                    f"backend exited with status {proc.returncode}: {detail}"
                )
            if not alpha_path.exists():
                raise MattingBackendError("backend exited 0 but wrote no alpha file")
            alpha = io.read_alpha(alpha_path)
        if alpha.shape != trimap.shape:
            raise MattingBackendError(
                f"backend alpha shape {alpha.shape} does not match patch {trimap.shape}"
            )
        return alpha


def make_backend(spec: str, params: SolverParams):
    """Build a backend from its CLI name: ``reference`` or ``exec:<command>``."""
    if spec == "reference":
        return ReferenceBackend(params)
    if spec.startswith("exec:"):
        command = spec[len("exec:") :]
        if not command.strip():
            raise ValueError("exec backend needs a command, e.g. exec:/path/to/matting")
        return ExternalProcessBackend(command)
    raise ValueError(f"unknown backend {spec!r} (expected 'reference' or 'exec:<command>')")


def matte_patch(backend, request: MattingRequest) -> np.ndarray:
    """Run a backend on one patch, enforcing the output contract.

    Constrained pixels come back exactly 1 (foreground) / 0 (background)
    and every value lies in ``[0, 1]``. A trimap with no unknown pixels is
    already fully decided, so the backend is not invoked.
    """
    t = request.trimap
    if not (t == TRIMAP_UNKNOWN).any():
        return (t == TRIMAP_FG).astype(np.float64)
    alpha = backend.matte(request.image, t)
    if alpha.shape != t.shape:
        raise MattingBackendError(
            f"backend returned shape {alpha.shape}, expected {t.shape}"
        )
    alpha = np.clip(np.asarray(alpha, dtype=np.float64), 0.0, 1.0)
    alpha[t == TRIMAP_FG] = 1.0
    alpha[t == TRIMAP_BG] = 0.0
    return alpha
