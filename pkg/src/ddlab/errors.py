"""Exception hierarchy shared by all lab modules."""


class DdlabError(Exception):
    """Base class for all lab errors."""


class NumericOverflow(DdlabError):
    pass


class NotInvertible(DdlabError):
    pass


class EndpointNotOnBoundary(DdlabError):
    pass


class CurvesIntersect(DdlabError):
    pass


class EmptySet(DdlabError):
    pass


class NewtonDiverged(DdlabError):
    pass


class InvalidSample(DdlabError):
    pass


class EscapedDomain(DdlabError):
    pass


class NotASaddle(DdlabError):
    pass


class NoContractedDirection(DdlabError):
    pass


class NotConverged(DdlabError):
    pass


class SinkMeasure(DdlabError):
    pass


class StableCurveNotSeparating(DdlabError):
    pass


class InvalidGamma(DdlabError):
    pass


class InvalidAlpha(DdlabError):
    pass


class CurveEscaped(DdlabError):
    pass


class NoValidR(DdlabError):
    pass


class ConeNotInvariant(DdlabError):
    pass


class CannotCertify(DdlabError):
    pass


class ClosingArcCrossesImage(DdlabError):
    pass


class NoAccumulationPoint(DdlabError):
    pass


class ProbeEscapesTree(DdlabError):
    pass


class Unclassified(DdlabError):
    pass
