from __future__ import annotations

import json

import pytest

from annoserve.coco import CategoryDef, serialize_categories
from annoserve.config import ServerConfig, load_config
from annoserve.storage import Store

CATEGORIES = (
    CategoryDef(id=1, name="directed", supercategory="camera", display_color="e6194b", shortcut_key="1"),
    CategoryDef(id=2, name="round", supercategory="camera", display_color="3cb44b", shortcut_key="2"),
)


@pytest.fixture
def categories():
    return CATEGORIES


@pytest.fixture
def categories_file(tmp_path):
    path = tmp_path / "categories.json"
    path.write_bytes(serialize_categories(CATEGORIES))
    return path


@pytest.fixture
def store(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    with Store.open(data_dir) as s:
        yield s


@pytest.fixture
def server_config(tmp_path, categories_file) -> ServerConfig:
    data_dir = tmp_path / "data"
    data_dir.mkdir(exist_ok=True)
    config_path = tmp_path / "server.json"
    config_path.write_text(
        json.dumps({"bind": "127.0.0.1:0", "data_dir": str(data_dir), "categories": str(categories_file)})
    )
    return load_config(config_path)


@pytest.fixture
def client(server_config):
    from starlette.testclient import TestClient

    from annoserve.service import create_app

    app = create_app(server_config)
    with TestClient(app) as c:
        yield c
