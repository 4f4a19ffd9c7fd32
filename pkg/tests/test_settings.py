import pytest

from topo_lidar.errors import TopoLidarError
from topo_lidar.settings import get_settings


def test_defaults(monkeypatch):
    monkeypatch.delenv("TOPO_LIDAR_THREADS", raising=False)
    monkeypatch.delenv("TOPO_LIDAR_LOG_LEVEL", raising=False)
    settings = get_settings()
    assert settings.threads == 1
    assert settings.log_level == "WARNING"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("TOPO_LIDAR_THREADS", "4")
    monkeypatch.setenv("TOPO_LIDAR_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.threads == 4
    assert settings.log_level == "DEBUG"


@pytest.mark.parametrize(
    "name, value",
    [("TOPO_LIDAR_THREADS", "many"), ("TOPO_LIDAR_THREADS", "0"), ("TOPO_LIDAR_LOG_LEVEL", "loud")],
)
def test_invalid_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(TopoLidarError):
        get_settings()
