"""Server configuration: JSON file with environment overrides.

Recognized keys:

    bind               "host:port" string, default "127.0.0.1:8008"
    data_dir           store directory (required); must exist
    categories         category config file path (required); must exist
    url_rules          optional list of URL parser rules, matched before
                       the built-in ones
    max_payload_bytes  request body cap, default 32 MiB, floor 1 MiB
    token              optional shared secret; when set every endpoint
                       except health requires "Authorization: Bearer <token>"
    allowed_origins    CORS origin list, default ["*"]

Relative paths resolve against the config file's directory. Environment
variables ANNOSERVE_BIND, ANNOSERVE_DATA_DIR, and ANNOSERVE_TOKEN
override the corresponding keys.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .coco import CategoryDef, load_categories
from .errors import ConfigError
from .urlmeta import DEFAULT_RULES, UrlParserRule, UrlRuleRegistry, build_registry

log = logging.getLogger(__name__)

DEFAULT_BIND = "127.0.0.1:8008"
DEFAULT_MAX_PAYLOAD = 32 * 1024 * 1024
MIN_MAX_PAYLOAD = 1024 * 1024

_KNOWN_KEYS = {
    "bind",
    "data_dir",
    "categories",
    "url_rules",
    "max_payload_bytes",
    "token",
    "allowed_origins",
}

ENV_BIND = "ANNOSERVE_BIND"
ENV_DATA_DIR = "ANNOSERVE_DATA_DIR"
ENV_TOKEN = "ANNOSERVE_TOKEN"


@dataclass(frozen=True)
class ServerConfig:
    host: str
    port: int
    data_dir: Path
    categories_path: Path
    categories: tuple[CategoryDef, ...]
    registry: UrlRuleRegistry
    max_payload_bytes: int = DEFAULT_MAX_PAYLOAD
    token: Optional[str] = None
    allowed_origins: tuple[str, ...] = ("*",)


def parse_bind(value: str) -> tuple[str, int]:
    """Split "host:port"; port 0 is allowed (ephemeral)."""
    host, sep, port_text = value.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"bind must look like host:port, got {value!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"bind port is not a number: {port_text!r}") from None
    if not (0 <= port <= 65535):
        raise ConfigError(f"bind port {port} outside 0-65535")
    return host, port


def load_config(path: str | Path, env: Optional[dict] = None) -> ServerConfig:
    """Read and validate a config file; raises ConfigError with the reason."""
    path = Path(path)
    env = os.environ if env is None else env
    try:
        doc = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    for key in sorted(set(doc) - _KNOWN_KEYS):
        log.warning("config %s: unknown key %r ignored", path, key)

    base = path.resolve().parent

    def resolve(key: str) -> Path:
        value = doc.get(key)
        if not isinstance(value, str) or not value:
            raise ConfigError(f"config key {key!r} must be a non-empty path string")
        return (base / value).resolve() if not os.path.isabs(value) else Path(value)

    bind = env.get(ENV_BIND) or doc.get("bind", DEFAULT_BIND)
    if not isinstance(bind, str):
        raise ConfigError("config key 'bind' must be a string")
    host, port = parse_bind(bind)

    data_dir = Path(env[ENV_DATA_DIR]).resolve() if env.get(ENV_DATA_DIR) else resolve("data_dir")
    if not data_dir.is_dir():
        raise ConfigError(f"data_dir does not exist: {data_dir}")

    categories_path = resolve("categories")
    if not categories_path.is_file():
        raise ConfigError(f"categories file does not exist: {categories_path}")
    categories = load_categories(categories_path.read_bytes())

    max_payload = doc.get("max_payload_bytes", DEFAULT_MAX_PAYLOAD)
    if not isinstance(max_payload, int) or isinstance(max_payload, bool):
        raise ConfigError("config key 'max_payload_bytes' must be an integer")
    if max_payload < MIN_MAX_PAYLOAD:
        raise ConfigError(f"max_payload_bytes {max_payload} below the {MIN_MAX_PAYLOAD} floor")

    token = env.get(ENV_TOKEN) or doc.get("token")
    if token is not None and (not isinstance(token, str) or not token):
        raise ConfigError("config key 'token' must be a non-empty string or null")

    origins = doc.get("allowed_origins", ["*"])
    if not isinstance(origins, list) or not all(isinstance(o, str) and o for o in origins):
        raise ConfigError("config key 'allowed_origins' must be a list of origin strings")

    rules_doc = doc.get("url_rules", [])
    if not isinstance(rules_doc, list):
        raise ConfigError("config key 'url_rules' must be a list")
    user_rules = tuple(_load_rule(entry, i) for i, entry in enumerate(rules_doc))
    # User rules come first so they can shadow the built-ins.
    registry = build_registry(user_rules + DEFAULT_RULES)

    return ServerConfig(
        host=host,
        port=port,
        data_dir=data_dir,
        categories_path=categories_path,
        categories=categories,
        registry=registry,
        max_payload_bytes=max_payload,
        token=token,
        allowed_origins=tuple(origins),
    )


def _load_rule(entry, index: int) -> UrlParserRule:
    if not isinstance(entry, dict):
        raise ConfigError(f"url_rules[{index}] must be an object")
    try:
        return UrlParserRule.from_json(entry)
    except ConfigError as exc:
        raise ConfigError(f"url_rules[{index}]: {exc}") from exc
