"""Bundled example contracts and transaction scripts."""
from importlib import resources

NAMES = ("token", "crowdfunding", "amm")


def source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.ds").read_text()


def script(name: str) -> list:
    from ..validation.differential import TxSpec
    import json
    data = json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text())
    return [TxSpec.from_json(d) for d in data]
