from schema import SchemaError

from secure_consensus.providers.json_file import FileProviderException
from secure_consensus.providers.json_file import JsonFileProvider
from secure_consensus.providers.scenario_schema import ScenarioSchema


class ScenarioSchemaException(FileProviderException):
    def __init__(self, path: str, detail: str):
        super().__init__(f"Schema error in {path}. {detail}")


class ScenarioProvider:
    def __init__(self, file_provider: JsonFileProvider = None):
        self.file_provider = file_provider or JsonFileProvider

    def load(self, path: str) -> dict:
        """
        Raises:
            FileProviderException: the file is missing or is not valid JSON
            ScenarioSchemaException: the document does not match ScenarioSchema
        """
        config = self.file_provider.load(path)
        try:
            return ScenarioSchema.schema().validate(config)
        except SchemaError as err:
            raise ScenarioSchemaException(path, str(err))
