"""Every registered example check, one pytest item each."""

import warnings

import pytest

from hartree_scattering.selftest import CHECKS


@pytest.mark.parametrize("chk", CHECKS, ids=[c.name for c in CHECKS])
def test_example(chk):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        detail = chk.func()
    assert isinstance(detail, str)


def test_registry_names_unique():
    names = [c.name for c in CHECKS]
    assert len(names) == len(set(names))
