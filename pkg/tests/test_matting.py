import sys
import textwrap

import numpy as np
import pytest
import scipy.sparse as sparse

from instamatte.core import TRIMAP_BG, TRIMAP_FG, TRIMAP_UNKNOWN
from instamatte.errors import (
    ImageTooSmallError,
    MatteError,
    MattingBackendError,
    SolverConvergenceError,
)
from instamatte.matting import (
    ExternalProcessBackend,
    MattingRequest,
    ReferenceBackend,
    SolverParams,
    build_matting_laplacian,
    make_backend,
    matte_patch,
    solve_alpha,
)

from conftest import random_trimap, two_tone_image, two_tone_trimap


def dense_constrained_solve(image, trimap, params):
    """Direct factorization oracle for the penalized system."""
    lap = build_matting_laplacian(image, params).toarray()
    fg = (trimap == TRIMAP_FG).ravel()
    bg = (trimap == TRIMAP_BG).ravel()
    system = lap + np.diag(params.constraint_weight * (fg | bg).astype(float))
    x = np.linalg.solve(system, params.constraint_weight * fg.astype(float))
    alpha = np.clip(x.reshape(trimap.shape), 0.0, 1.0)
    alpha[trimap == TRIMAP_FG] = 1.0
    alpha[trimap == TRIMAP_BG] = 0.0
    return alpha


class TestLaplacianStructure:
    def test_constant_image_annihilates_ones(self):
        img = np.full((8, 8, 3), 77, np.uint8)
        lap = build_matting_laplacian(img, SolverParams())
        np.testing.assert_allclose(lap @ np.ones(64), 0.0, atol=1e-12)

    def test_row_sums_symmetry_psd(self, rng):
        for _ in range(3):
            img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
            lap = build_matting_laplacian(img, SolverParams())
            assert np.abs(np.asarray(lap.sum(axis=1))).max() <= 1e-9
            assert (lap != lap.T).nnz == 0
            assert np.linalg.eigvalsh(lap.toarray()).min() >= -1e-9

    def test_quadratic_form_nonnegative(self, rng):
        img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        lap = build_matting_laplacian(img, SolverParams())
        for _ in range(100):
            x = rng.standard_normal(64)
            assert x @ (lap @ x) >= -1e-9

    def test_couples_only_window_mates(self, rng):
        from instamatte.kernels import window_indices

        img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        lap = build_matting_laplacian(img, SolverParams()).tocoo()
        allowed = set()
        for win in window_indices(8, 8, 1):
            for a in win:
                for b in win:
                    allowed.add((int(a), int(b)))
        pairs = {(int(i), int(j)) for i, j, v in zip(lap.row, lap.col, lap.data) if v != 0.0}
        assert pairs <= allowed

    def test_too_small_image(self):
        img = np.zeros((2, 8, 3), np.uint8)
        with pytest.raises(ImageTooSmallError):
            build_matting_laplacian(img, SolverParams())


class TestSolveAlpha:
    def test_matches_dense_oracle_two_tone(self):
        img = two_tone_image(12, 12, 6, band=1)
        t = two_tone_trimap(12, 12, 6, 1)
        got = solve_alpha(img, t)
        want = dense_constrained_solve(img, t, SolverParams())
        assert np.abs(got - want).max() <= 1e-4

    def test_matches_dense_oracle_random(self, rng):
        for _ in range(3):
            img = rng.integers(0, 256, (14, 14, 3)).astype(np.uint8)
            t = random_trimap(rng, (14, 14))
            got = solve_alpha(img, t)
            want = dense_constrained_solve(img, t, SolverParams())
            assert np.abs(got - want).max() <= 1e-4

    def test_all_constrained_exact(self, rng):
        t = np.where(rng.random((8, 8)) < 0.5, TRIMAP_FG, TRIMAP_BG).astype(np.uint8)
        img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        alpha = solve_alpha(img, t)
        np.testing.assert_array_equal(alpha, (t == TRIMAP_FG).astype(float))

    def test_intensity_scaling_leaves_alpha_put(self):
        img = two_tone_image(12, 12, 6, band=1, left=(230, 230, 230), right=(20, 20, 20))
        t = two_tone_trimap(12, 12, 6, 1)
        halved = (img // 2).astype(np.uint8)
        a1 = solve_alpha(img, t)
        a2 = solve_alpha(halved, t)
        assert np.abs(a1 - a2).max() <= 1e-4

    def test_deterministic(self, rng):
        img = rng.integers(0, 256, (10, 10, 3)).astype(np.uint8)
        t = random_trimap(rng, (10, 10))
        assert np.array_equal(solve_alpha(img, t), solve_alpha(img, t))

    def test_energy_monotone_in_debug_mode(self):
        img = two_tone_image(12, 12, 6, band=1)
        t = two_tone_trimap(12, 12, 6, 1)
        solve_alpha(img, t, debug=True)  # raises AssertionError on violation

    def test_nonconvergence_raises(self):
        img = two_tone_image(12, 12, 6, band=1)
        t = two_tone_trimap(12, 12, 6, 1)
        params = SolverParams(cg_tolerance=1e-14, cg_max_iterations=1)
        with pytest.raises(SolverConvergenceError):
            solve_alpha(img, t, params)

    def test_output_range_and_snapping(self, rng):
        img = rng.integers(0, 256, (12, 12, 3)).astype(np.uint8)
        t = random_trimap(rng, (12, 12))
        alpha = solve_alpha(img, t)
        assert alpha.min() >= 0.0 and alpha.max() <= 1.0
        assert (alpha[t == TRIMAP_FG] == 1.0).all()
        assert (alpha[t == TRIMAP_BG] == 0.0).all()


class TestMattingRequest:
    def test_needs_both_constraint_kinds(self):
        img = np.zeros((6, 6, 3), np.uint8)
        t = np.full((6, 6), TRIMAP_UNKNOWN, np.uint8)
        t[0, 0] = TRIMAP_FG
        with pytest.raises(MatteError):
            MattingRequest(img, t)
        t[5, 5] = TRIMAP_BG
        MattingRequest(img, t)

    def test_dimension_mismatch(self):
        with pytest.raises(MatteError):
            MattingRequest(np.zeros((6, 6, 3), np.uint8), np.zeros((5, 6), np.uint8))


class _ExplodingBackend:
    reentrant = True

    def matte(self, image, trimap):
        raise AssertionError("backend must not be invoked")


class TestMattePatch:
    def test_no_unknown_skips_backend(self, rng):
        t = np.where(rng.random((7, 7)) < 0.5, TRIMAP_FG, TRIMAP_BG).astype(np.uint8)
        img = rng.integers(0, 256, (7, 7, 3)).astype(np.uint8)
        alpha = matte_patch(_ExplodingBackend(), MattingRequest(img, t))
        np.testing.assert_array_equal(alpha, (t == TRIMAP_FG).astype(float))

    def test_constraints_snapped(self):
        img = two_tone_image(9, 9, 4, band=1)
        t = two_tone_trimap(9, 9, 4, 1)
        alpha = matte_patch(ReferenceBackend(), MattingRequest(img, t))
        assert (alpha[t == TRIMAP_FG] == 1.0).all()
        assert (alpha[t == TRIMAP_BG] == 0.0).all()
        assert 0.0 <= alpha.min() and alpha.max() <= 1.0

    def test_midpoint_column_near_half(self):
        # white FG left, black BG right, one gray unknown column between
        img = np.zeros((9, 9, 3), np.uint8)
        img[:, :4] = 250
        img[:, 4] = 128
        img[:, 5:] = 10
        t = np.full((9, 9), TRIMAP_UNKNOWN, np.uint8)
        t[:, :4] = TRIMAP_FG
        t[:, 5:] = TRIMAP_BG
        alpha = matte_patch(ReferenceBackend(), MattingRequest(img, t))
        want = dense_constrained_solve(img, t, SolverParams())
        assert np.abs(alpha[:, 4] - 0.5).max() <= 0.05
        assert np.abs(alpha - want).max() <= 1e-4


SCRIPT_OK = """\
import sys
from PIL import Image
Image.open(sys.argv[2]).convert("L").save(sys.argv[3])
"""

SCRIPT_FAIL = """\
import sys
print("matting went sideways", file=sys.stderr)
sys.exit(3)
"""


class TestExternalProcessBackend:
    def trimap_and_image(self):
        img = two_tone_image(8, 8, 4, band=1)
        t = two_tone_trimap(8, 8, 4, 1)
        return img, t

    def test_protocol_round_trip(self, tmp_path):
        script = tmp_path / "copy_trimap.py"
        script.write_text(SCRIPT_OK)
        backend = ExternalProcessBackend([sys.executable, str(script)])
        img, t = self.trimap_and_image()
        alpha = matte_patch(backend, MattingRequest(img, t))
        # the stub writes the trimap bytes back as alpha: unknown = 128/255
        assert (alpha[t == TRIMAP_FG] == 1.0).all()
        assert (alpha[t == TRIMAP_BG] == 0.0).all()
        np.testing.assert_allclose(alpha[t == TRIMAP_UNKNOWN], 128 / 255)

    def test_failure_carries_reason(self, tmp_path):
        script = tmp_path / "fail.py"
        script.write_text(SCRIPT_FAIL)
        backend = ExternalProcessBackend([sys.executable, str(script)])
        img, t = self.trimap_and_image()
        with pytest.raises(MattingBackendError, match="sideways"):
            matte_patch(backend, MattingRequest(img, t))

    def test_missing_output_detected(self, tmp_path):
        script = tmp_path / "noop.py"
        script.write_text("")
        backend = ExternalProcessBackend([sys.executable, str(script)])
        img, t = self.trimap_and_image()
        with pytest.raises(MattingBackendError, match="no alpha"):
            matte_patch(backend, MattingRequest(img, t))


class TestMakeBackend:
    def test_reference(self):
        assert isinstance(make_backend("reference", SolverParams()), ReferenceBackend)

    def test_exec(self):
        backend = make_backend("exec:/usr/bin/matting --fast", SolverParams())
        assert backend.command == ["/usr/bin/matting", "--fast"]

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            make_backend("quantum", SolverParams())
        with pytest.raises(ValueError):
            make_backend("exec:", SolverParams())
