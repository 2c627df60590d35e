"""Exception hierarchy shared by every module."""


class GenLayerError(Exception):
    pass


# codec / quality
class PromptTooSmall(GenLayerError):
    pass


class UnsupportedVariant(GenLayerError):
    pass


class VariantMismatch(GenLayerError):
    pass


class ShapeMismatch(GenLayerError):
    pass


class MissingLabel(GenLayerError):
    pass


# rate-quality estimation
class EmptyInput(GenLayerError):
    pass


class NonFiniteQuality(GenLayerError):
    pass


class InsufficientSamples(GenLayerError):
    pass


class BelowGrid(GenLayerError):
    pass


class GridMismatch(GenLayerError):
    pass


# mode selection
class GridNotCovered(GenLayerError):
    pass


class Infeasible(GenLayerError):
    pass


# network
class UnknownNode(GenLayerError):
    pass


class ZeroRateEdge(GenLayerError):
    pass


class IncompleteProfile(GenLayerError):
    pass


# protocol
class Unreachable(GenLayerError):
    pass


class NoCandidates(GenLayerError):
    pass


class UnknownVariant(GenLayerError):
    pass


class MetricIncompatible(GenLayerError):
    pass


class StatefulTaskViolation(MetricIncompatible):
    """A stateful destination task cannot score one data point at several prompt sizes."""


class BudgetExhausted(GenLayerError):
    pass


class CorpusExhausted(GenLayerError):
    pass


# budgets
class ZeroCost(GenLayerError):
    pass


class ZeroLatency(GenLayerError):
    pass


# experiments
class MalformedRow(GenLayerError):
    pass


# cli
class ConfigInvalid(GenLayerError):
    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class ScenarioFailed(GenLayerError):
    pass


class FileUnreadable(GenLayerError):
    pass
