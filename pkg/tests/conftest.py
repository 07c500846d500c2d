import pytest

from ifs_model import (
    AffineMap, IfsSystem, build_isolated_point_family, build_paper_family_51,
    build_selfsimilar_family,
)
from linalg2 import Matrix2


@pytest.fixture(scope="session")
def paper51():
    return build_paper_family_51()


@pytest.fixture(scope="session")
def isolated52():
    return build_isolated_point_family()


@pytest.fixture(scope="session")
def half_quarter():
    return build_selfsimilar_family([0.5, 0.25])


@pytest.fixture(scope="session")
def equal_quarters():
    return build_selfsimilar_family([0.25] * 4)


@pytest.fixture(scope="session")
def positive_system():
    mats = [
        Matrix2(0.3, 0.1, 0.1, 0.2),
        Matrix2(0.2, 0.05, 0.1, 0.3),
        Matrix2(0.15, 0.1, 0.05, 0.1),
    ]
    return IfsSystem(
        explicit=tuple((i, AffineMap(m, (0.0, 0.0))) for i, m in enumerate(mats, start=1)),
        name="positive3",
    )
