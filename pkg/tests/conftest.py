import pytest

from iwacalc import TruncationSpec, load_abelian, load_unitriangular


def heisenberg_generators(p):
    def elementary(i, j, c):
        rows = [[1 if a == b else 0 for b in range(3)] for a in range(3)]
        rows[i][j] = c
        return rows
    return [elementary(0, 1, p), elementary(1, 2, p), elementary(0, 2, p)]


@pytest.fixture(scope="session")
def abelian2():
    return load_abelian(3, 2, 4, ["1", "1"], centre_exponents=[0, 4])


@pytest.fixture(scope="session")
def trunc2(abelian2):
    return TruncationSpec(abelian2, 8)


@pytest.fixture(scope="session")
def heis():
    return load_unitriangular(5, 3, 3, heisenberg_generators(5),
                              ["1", "1", "2"], centre_exponents=[3, 3, 0])


@pytest.fixture(scope="session")
def trunc_heis(heis):
    return TruncationSpec(heis, 6)


@pytest.fixture(scope="session")
def trunc_heis_wide(heis):
    # wide enough for the commutator correction 4*b3^5 (weight 10) to show
    return TruncationSpec(heis, 11)


@pytest.fixture(scope="session")
def abelian3():
    return load_abelian(3, 3, 4, ["1", "1", "1"], centre_exponents=[0, 0, 4])


@pytest.fixture(scope="session")
def trunc3(abelian3):
    return TruncationSpec(abelian3, 8)


@pytest.fixture(scope="session")
def zmodel():
    return load_abelian(3, 1, 6, ["1"])


@pytest.fixture(scope="session")
def tzeta(zmodel):
    return TruncationSpec(zmodel, 60)
