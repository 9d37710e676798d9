import pytest


@pytest.fixture
def tmp_project(tmp_path):
    return tmp_path
