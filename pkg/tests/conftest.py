import pytest

from hardylab import scenarios


@pytest.fixture(scope="session")
def exp_measure():
    return scenarios.corpus_measure("exponential")


@pytest.fixture(scope="session")
def gauss_measure():
    return scenarios.corpus_measure("gaussian")


@pytest.fixture(scope="session")
def mu15_measure():
    return scenarios.corpus_measure("mu15")


@pytest.fixture(scope="session")
def nu2_measure():
    return scenarios.corpus_measure("nu2")


@pytest.fixture(scope="session")
def floor_measure():
    return scenarios.corpus_measure("floor")


@pytest.fixture(scope="session")
def cattiaux_measure():
    return scenarios.corpus_measure("cattiaux")
