"""Exception hierarchy. Everything here is a data error from the CLI's point of view."""


class MCBEError(ValueError):
    pass


class LadderError(MCBEError):
    pass


class Y4MError(MCBEError):
    pass


class FeatureError(MCBEError):
    pass


class TrainingDataError(MCBEError):
    pass


class ModelError(MCBEError):
    pass


class MissingModelError(ModelError, KeyError):
    def __init__(self, codec: str, resolution: str):
        self.codec = codec
        self.resolution = resolution
        super().__init__(f"no model for codec {codec!r} at resolution {resolution}")

    def __str__(self):
        return self.args[0]


class BankVersionError(ModelError):
    pass


class BankIntegrityError(ModelError):
    pass


class EnergyError(MCBEError):
    pass
