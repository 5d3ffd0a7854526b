import json
from pathlib import Path

from secure_consensus.consensus_exception import ConsensusException


class FileProviderException(ConsensusException):
    exit_code = 2


class JsonFileProviderException(FileProviderException):
    pass


class FileNotFoundException(FileProviderException):
    pass


class InvalidJsonException(JsonFileProviderException):
    def __init__(self, path: str, detail: str):
        super().__init__(f"""{path} is not valid JSON: {detail}.""")


class DuplicateKeysException(JsonFileProviderException):
    def __init__(self, duplicate_keys: str):
        super().__init__(f"""Duplicate keys found in your scenario file: {duplicate_keys}.""")


class JsonFileProvider:
    def load(path: str) -> dict:
        """
        Raises:
            FileNotFoundException: file is not there
            InvalidJsonException: file contains invalid json
            DuplicateKeysException: json contains duplicate keys
        """
        if not Path(path).exists():
            raise FileNotFoundException(f"`{path}` is missing.")

        duplicate_keys = []

        def reject_duplicates(pairs):
            seen = {}
            for key, value in pairs:
                if key in seen:
                    duplicate_keys.append(key)
                seen[key] = value
            return seen

        try:
            content = json.loads(Path(path).read_text(), object_pairs_hook=reject_duplicates)
        except json.JSONDecodeError as err:
            raise InvalidJsonException(path, f"{err.msg} (line {err.lineno}, column {err.colno})")

        if duplicate_keys:
            raise DuplicateKeysException(", ".join(f"'{key}'" for key in duplicate_keys))

        return content if content else {}
