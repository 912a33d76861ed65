"""Exception hierarchy shared by every docsmell module."""


class DocSmellError(Exception):
    """Base class for all docsmell errors."""


class CorpusError(DocSmellError, ValueError):
    pass


class MalformedLine(CorpusError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        self.reason = reason
        msg = f"line {line_no}: malformed record"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class DuplicateId(CorpusError):
    def __init__(self, unit_id: str):
        self.unit_id = unit_id
        super().__init__(f"duplicate unit id {unit_id!r}")


class MixedLabeling(CorpusError):
    def __init__(self, line_no: int | None = None):
        self.line_no = line_no
        where = f" (first mismatch at line {line_no})" if line_no else ""
        super().__init__("corpus mixes labeled and unlabeled units" + where)


class NoMethodBlocks(CorpusError):
    def __init__(self, source_id: str = ""):
        super().__init__(f"no method-detail blocks found in {source_id or 'document'}")


class MalformedBlock(CorpusError):
    def __init__(self, index: int, source_id: str = ""):
        self.index = index
        super().__init__(f"method block {index} in {source_id or 'document'} has no signature")


class UnlabeledCorpus(CorpusError):
    def __init__(self):
        super().__init__("operation requires a labeled corpus")


class EmptyCorpus(CorpusError):
    def __init__(self):
        super().__init__("corpus is empty")


class EmptyText(DocSmellError, ValueError):
    def __init__(self):
        super().__init__("text contains no words")


class EmptyInput(DocSmellError, ValueError):
    def __init__(self, what: str = "values"):
        super().__init__(f"{what} must be non-empty")


class UnfittedStandardizer(DocSmellError, RuntimeError):
    def __init__(self):
        super().__init__("standardizer has not been fitted")


class DimensionMismatch(DocSmellError, ValueError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"feature dimension mismatch: expected {expected}, got {got}")


class EmptyTrainingSet(DocSmellError, ValueError):
    def __init__(self):
        super().__init__("training set is empty")


class TooFewInstances(DocSmellError, ValueError):
    def __init__(self, have: int, need: int):
        self.have = have
        self.need = need
        super().__init__(f"need at least {need} instances, have {have}")


class LengthMismatch(DocSmellError, ValueError):
    def __init__(self, a: int, b: int):
        super().__init__(f"sequence lengths differ: {a} != {b}")


class BadFeatureIndex(DocSmellError, IndexError):
    def __init__(self, index: int, dim: int):
        super().__init__(f"feature index {index} out of range for dimension {dim}")
