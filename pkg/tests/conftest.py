import numpy as np
import pytest

from statgeo import builtins as registry


@pytest.fixture(scope="session")
def geost():
    return registry.resolve_structure("geost")


@pytest.fixture(scope="session")
def euclid1():
    return registry.euclidean_structure(1, half_width=1.2)


@pytest.fixture(scope="session")
def euclid2():
    return registry.resolve_structure("euclidean:2")


@pytest.fixture(scope="session")
def real_line():
    return registry.resolve_structure("real_line")


@pytest.fixture(scope="session")
def sphere():
    return registry.resolve_structure("sphere")


@pytest.fixture(scope="session")
def flat_torus1():
    return registry.resolve_structure("flat_torus:1")


@pytest.fixture(scope="session")
def flat_torus2():
    return registry.resolve_structure("flat_torus:2")


@pytest.fixture(scope="session")
def perturbed_torus():
    return registry.resolve_structure("perturbed_torus")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
