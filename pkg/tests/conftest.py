import pytest

from efgsmooth import build_kuhn, build_leduc, sequence_form


@pytest.fixture(scope="session")
def kuhn_game():
    return build_kuhn()


@pytest.fixture(scope="session")
def kuhn(kuhn_game):
    return sequence_form(kuhn_game)


@pytest.fixture(scope="session")
def leduc3_game():
    return build_leduc(3)


@pytest.fixture(scope="session")
def leduc3(leduc3_game):
    return sequence_form(leduc3_game)


@pytest.fixture(scope="session")
def leduc13_game():
    return build_leduc(13)


@pytest.fixture(scope="session")
def leduc13(leduc13_game):
    return sequence_form(leduc13_game)
