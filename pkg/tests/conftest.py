import numpy as np
import pytest

from hawkesnet.kernel import GroundParams
from hawkesnet.markmodel import MarkModelSpec
from hawkesnet.process import ModelSpec, TRIVIAL_MARK

CS_THETA = (-6.0, 0.5, 0.3, -0.1)


def ba_spec(T=100.0, mu=10.0, K=0.5, beta=2.0, tau=0.5, **kw):
    return ModelSpec(GroundParams(mu, K, beta), MarkModelSpec("ba", tau=tau, **kw), T)


def cs_spec(T=10.0, mu=10.0, K=0.5, beta=2.0, tau=0.5, theta=CS_THETA, lam=1.0, cutoff=None, **kw):
    mark = MarkModelSpec("cs", tau=tau, theta=theta, lambda_nodes=lam, **kw)
    return ModelSpec(GroundParams(mu, K, beta), mark, T, cutoff)


def sbm_spec(T=5.0, mu=3.0, K=0.5, beta=2.0, tau=0.3, lam=1.0, **kw):
    mark = MarkModelSpec("sbm", tau=tau, lambda_nodes=lam, block_probs=(0.6, 0.4),
                         block_matrix=((0.5, 0.05), (0.05, 0.4)), **kw)
    return ModelSpec(GroundParams(mu, K, beta), mark, T)


def ls_spec(T=5.0, mu=3.0, K=0.5, beta=2.0, tau=0.3, lam=1.0, **kw):
    mark = MarkModelSpec("ls", tau=tau, theta=(-1.5,), lambda_nodes=lam, **kw)
    return ModelSpec(GroundParams(mu, K, beta), mark, T)


def trivial_spec(T=100.0, mu=10.0, K=0.0, beta=1.0):
    return ModelSpec(GroundParams(mu, K, beta), TRIVIAL_MARK, T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
