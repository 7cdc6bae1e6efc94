"""Exception types shared across the toolkit."""


class LexselError(Exception):
    """Base class for domain errors; the CLI maps these to exit code 1."""


class CorpusFormatError(LexselError):
    """A corpus, annotation, or alignment file violates its format contract."""


class MiningError(LexselError):
    """The concept miner was handed a corpus it cannot work with."""


class DatasetError(LexselError):
    """Dataset construction or finalization failed."""


class EndpointError(LexselError):
    """A model endpoint could not be reached or kept failing."""


class GenerationFailedError(LexselError):
    """A model twice failed to return rules in the required format."""

    def __init__(self, message, responses=()):
        super().__init__(message)
        self.responses = tuple(responses)
