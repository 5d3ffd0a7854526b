from pathlib import Path


class FileProvider:
    """Writes run outputs beneath one directory, creating it on first use."""

    def __init__(self, base_path: str, overwrite: bool = True):
        self.base_path = Path(base_path)
        self.overwrite = overwrite

    def mkfile(self, file_name: str, contents: str) -> str:
        file_path = self.base_path.joinpath(file_name)
        file_exists = file_path.exists()
        if file_exists and not self.overwrite:
            return f"File {file_path} exists; doing nothing"

        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(contents)

        action = "overwritten" if file_exists else "created"
        return f"File {file_path} {action}"

    def write_all(self, files: dict) -> list[str]:
        return [self.mkfile(name, contents) for name, contents in files.items()]
