"""Keccak-256 (the pre-standard padding used by the EVM)."""
from Crypto.Hash import keccak as _keccak


def keccak256_bytes(data: bytes) -> bytes:
    return _keccak.new(digest_bits=256, data=data).digest()


def keccak256(data: bytes) -> int:
    return int.from_bytes(keccak256_bytes(data), "big")


def selector(signature: str) -> int:
    """First four bytes of the hash of a canonical ABI signature."""
    return int.from_bytes(keccak256_bytes(signature.encode())[:4], "big")
