from schema import And
from schema import Optional
from schema import Or
from schema import Schema
from schema import SchemaError

from secure_consensus.constants import MAX_SEED


class ScenarioSchema:
    @staticmethod
    def schema() -> Schema:
        return Schema(
            {
                Optional("description"): str,
                "graph": ScenarioSchema.__graph_schema(),
                "weights": ScenarioSchema.__weights_schema(),
                "x0": [ScenarioSchema.number()],
                "noise": ScenarioSchema.__noise_schema(),
                Optional("attack"): ScenarioSchema.__attack_schema(),
                Optional("detectors"): [ScenarioSchema.__detector_schema()],
                "horizon": ScenarioSchema.integer(),
                Optional("analysis"): ScenarioSchema.__analysis_schema(),
                Optional("expected"): {
                    Optional("singleton_half_width"): ScenarioSchema.number(),
                    Optional("union_half_width"): ScenarioSchema.number(),
                },
            }
        )

    @staticmethod
    def number():
        return And(
            Or(int, float),
            lambda value: not isinstance(value, bool),
            error="should be a number",
        )

    @staticmethod
    def integer():
        return And(int, lambda value: not isinstance(value, bool), error="should be an integer")

    @staticmethod
    def seed():
        return And(
            ScenarioSchema.integer(),
            lambda value: 0 <= value <= MAX_SEED,
            error="seed should be an integer in 0..2**64 - 1",
        )

    @staticmethod
    def is_edge(value) -> bool:
        if (
            isinstance(value, list)
            and len(value) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
        ):
            return True
        raise SchemaError(f"edge {value} should be a pair of agent indices [i, j]")

    @staticmethod
    def is_square_matrix(rows) -> bool:
        if rows and all(len(row) == len(rows) for row in rows):
            return True
        raise SchemaError(
            f"weights should be a square matrix, got rows of length {[len(row) for row in rows]}"
        )

    @staticmethod
    def __graph_schema() -> dict:
        return {
            "n": And(ScenarioSchema.integer(), lambda n: n >= 1, error="n should be at least 1"),
            "edges": [ScenarioSchema.is_edge],
        }

    @staticmethod
    def __weights_schema():
        return Or(
            "metropolis",
            {
                "random": {
                    "seed": ScenarioSchema.seed(),
                    Optional("scale"): ScenarioSchema.number(),
                }
            },
            And(
                [[ScenarioSchema.number()]],
                ScenarioSchema.is_square_matrix,
            ),
        )

    @staticmethod
    def __noise_schema() -> dict:
        return {
            "phi": ScenarioSchema.number(),
            "seed": ScenarioSchema.seed(),
            Optional("zero_noise"): bool,
            Optional("attackers_add_noise"): bool,
        }

    @staticmethod
    def __attack_schema() -> dict:
        number = ScenarioSchema.number()
        return {
            "agents": [ScenarioSchema.integer()],
            "signals": [
                Or(
                    {"type": "zero"},
                    {"type": "constant", "a": number},
                    {"type": "geometric", "a": number, "gamma": number},
                    {"type": "sequence", "values": [number]},
                )
            ],
        }

    @staticmethod
    def __detector_schema() -> dict:
        return {
            "agent": ScenarioSchema.integer(),
            "c": ScenarioSchema.number(),
            "rho": ScenarioSchema.number(),
        }

    @staticmethod
    def __analysis_schema() -> dict:
        return {
            Optional("beta"): ScenarioSchema.number(),
            Optional("p_max"): ScenarioSchema.integer(),
            Optional("tail_fraction"): ScenarioSchema.number(),
        }
