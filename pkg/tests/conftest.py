"""Shared fixtures: the built-in models and their stabilized families are
computed once per session since every golden test reads from them."""

import pytest

from kcontact.models import damped_klein_gordon, damped_string, dissipative_maxwell
from kcontact.unified import constraint_algorithm


@pytest.fixture(scope="session")
def string_bundle():
    return damped_string()


@pytest.fixture(scope="session")
def kg_bundle():
    return damped_klein_gordon()


@pytest.fixture(scope="session")
def maxwell_bundle():
    return dissipative_maxwell()


@pytest.fixture(scope="session")
def string_family(string_bundle):
    return constraint_algorithm(string_bundle.system)


@pytest.fixture(scope="session")
def kg_family(kg_bundle):
    return constraint_algorithm(kg_bundle.system)


@pytest.fixture(scope="session")
def maxwell_family(maxwell_bundle):
    return constraint_algorithm(maxwell_bundle.system)
