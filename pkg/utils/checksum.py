"""SHA-256 digests for model files and generated artifacts."""
from pathlib import Path
from typing import Union

from cryptography.hazmat.primitives import hashes

DIGEST_SIZE = 32


def sha256_digest(data: bytes) -> bytes:
    """Raw SHA-256 digest of ``data``."""
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize()


def file_checksum(path: Union[str, Path]) -> str:
    """Hex SHA-256 of a file's contents."""
    return sha256_digest(Path(path).read_bytes()).hex()
