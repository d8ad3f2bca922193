class WorkloadError(Exception):
    """An update sequence that violates a structure's preconditions."""


class DuplicatePoint(WorkloadError):
    pass


class AbsentPoint(WorkloadError):
    pass
