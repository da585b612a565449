"""Exception types shared across the pipeline."""


class ForgeError(Exception):
    """Base class for all pipeline errors."""


# corpus
class NetworkError(ForgeError):
    """Transient transport failure while talking to a review API."""


class SchemaError(ForgeError):
    """A source record is missing required fields."""


class ParseError(ForgeError):
    """A corpus line could not be decoded."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


# gateway
class RateLimited(ForgeError):
    """Provider returned a retryable rate-limit response."""


class AuthError(ForgeError):
    """Credentials rejected; not retryable."""


class ProviderError(ForgeError):
    """Provider failed after exhausting retries."""


class MissingVariable(ForgeError):
    """A prompt template placeholder was left unbound."""

    def __init__(self, names):
        self.names = sorted(names)
        super().__init__("unbound placeholders: " + ", ".join(self.names))


# segmenter
class SegmentationParseError(ForgeError):
    """LLM segmenter output violated the Point-list format."""


class NonContiguousIndices(SegmentationParseError):
    """Point indices are not 1..K without gaps."""


class EmptyBody(SegmentationParseError):
    """A Point line carried no content."""


# aligner
class MatcherParseError(ForgeError):
    """Semantic matcher reply missing or malformed mapping lines."""


# filters / scoring
class MissingGold(ForgeError):
    """A prediction has no gold annotation to score against."""


class DegenerateMarginals(ForgeError):
    """Kappa undefined: expected agreement is 1 with imperfect observed."""


# labeler
class UnknownCategory(ForgeError):
    """Perspective reply matched no known category."""


class JsonShapeError(ForgeError):
    """Classifier reply was not the expected bare JSON object."""


class UnknownImpact(ForgeError):
    """Impact reply named no known impact code."""


# pair builder
class NotStrictlyOrdered(ForgeError):
    """Impact pair is not strictly ordered by rank."""


class QuotaUnmetWarning(UserWarning):
    """A perspective had fewer eligible items than the requested quota."""


# dpo math
class NonFiniteInput(ForgeError):
    """A log-probability input was NaN or infinite."""


class EmptyBatch(ForgeError):
    """Batch statistic requested over zero items."""


# judge
class JudgeParseError(ForgeError):
    """Judge reply failed validation."""


class TieEmitted(JudgeParseError):
    """Pairwise judge returned neither A nor B."""


class InsufficientData(ForgeError):
    """Too few observations for a rank statistic."""


# annotation service
class UnknownAnnotator(ForgeError):
    """Annotator id is not registered for this session."""


class UnassignedTask(ForgeError):
    """Record submitted for a task not assigned to this annotator."""


class DuplicateSubmission(ForgeError):
    """Conflicting resubmission for an already-answered task."""


# pipeline
class StaleInput(ForgeError):
    """Stage output exists but was produced under a different config."""


class StageFailure(ForgeError):
    """A pipeline stage raised; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
