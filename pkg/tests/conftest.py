import pytest

from selbergzeta import geodesics


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path_factory, monkeypatch):
    # one cache directory per session keeps repeated spectra cheap while
    # never touching the user's real cache
    d = tmp_path_factory.getbasetemp() / "cache"
    d.mkdir(exist_ok=True)
    monkeypatch.setenv(geodesics.CACHE_ENV, str(d))
    return d


@pytest.fixture(scope="session")
def spectrum_1000(tmp_path_factory):
    return geodesics.compute_length_spectrum(1000)
