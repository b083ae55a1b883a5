import pytest

from leraBench.api import API_KEY_ENV

PROXY_VARIABLES = ("HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY", "http_proxy", "https_proxy", "all_proxy")


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep user settings and real credentials out of every test."""
    home = tmp_path / "home"
    home.mkdir()
    monkeypatch.setenv("LERA_HOME", str(home))
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    for name in PROXY_VARIABLES:
        monkeypatch.delenv(name, raising=False)
    return home
