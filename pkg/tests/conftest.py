import pytest
from hypothesis import settings

from hopflab import mesh

settings.register_profile("hopflab", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("hopflab")


@pytest.fixture(scope="session")
def s2_l2():
    return mesh.gen_sphere(2, 2)


@pytest.fixture(scope="session")
def s2_l4():
    return mesh.gen_sphere(2, 4)


@pytest.fixture(scope="session")
def s3_l1():
    return mesh.gen_sphere(3, 1)


@pytest.fixture(scope="session")
def s3_l2():
    return mesh.gen_sphere(3, 2)


@pytest.fixture(scope="session")
def product_l0():
    return mesh.gen_product_interval(mesh.gen_sphere(3, 0), 2)


@pytest.fixture(scope="session")
def product_l1():
    return mesh.gen_product_interval(mesh.gen_sphere(3, 1), 1)
