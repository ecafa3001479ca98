import sys
from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parents[1]
MODELS = REPO / "models"
sys.path.insert(0, str(Path(__file__).resolve().parent))

from flexkit.model import load_model  # noqa: E402


@pytest.fixture(scope="session")
def models_dir():
    return MODELS


@pytest.fixture(scope="session")
def simple_models():
    return {beta: load_model(MODELS / f"simple_beta{beta}.json") for beta in (-1, 0, 1)}


@pytest.fixture(scope="session")
def hx_models():
    return {beta: load_model(MODELS / f"hx_beta{beta}.json") for beta in (0, 5)}


@pytest.fixture(scope="session")
def bundled_models(simple_models, hx_models):
    out = {f"simple_beta{b}": m for b, m in simple_models.items()}
    out.update({f"hx_beta{b}": m for b, m in hx_models.items()})
    return out


def assert_qp_kkt(problem, solution, tol=1e-8):
    """Audit the full KKT bundle of an optimal QP solution."""
    x = solution.x
    scale = 1.0 + float(np.max(np.abs(x)))
    grad = 2.0 * problem.w @ x + problem.q
    resid = grad.copy()
    if problem.b_eq.size:
        assert np.max(np.abs(problem.a_eq @ x - problem.b_eq)) <= tol * scale
        resid += problem.a_eq.T @ solution.mult_eq
    if problem.b_ub.size:
        slack = problem.a_ub @ x - problem.b_ub
        assert np.max(slack) <= tol * scale
        assert np.min(solution.mult_ub) >= -tol
        assert np.max(np.abs(solution.mult_ub * slack)) <= tol * scale * 10
        resid += problem.a_ub.T @ solution.mult_ub
    gscale = 1.0 + float(np.max(np.abs(grad)))
    assert np.max(np.abs(resid)) <= tol * gscale
