"""Exception taxonomy shared by the engine, authority, and server layers."""


class GameError(Exception):
    """Base class for all rule violations and invalid requests."""


class AllocationError(GameError):
    """Class size cannot be partitioned into groups of 3 and 4."""


class UnknownEnumError(GameError):
    """A location, capacity situation, contract type, or seat outside the cost table."""


class ValidationError(GameError):
    """Malformed input: bad money value, incomplete label map, unparseable CSV."""


class DuplicateBidError(GameError):
    """A seat already holds a bid on this tender."""


class ClosedTenderError(GameError):
    """Bid arrived while the tender was not open for bidding."""


class StalenessError(GameError):
    """An operation requires every tender of a part to be resolved first."""


class PhaseError(GameError):
    """Command not valid in the session's current phase."""

    def __init__(self, message: str, blockers: list[str] | None = None):
        super().__init__(message)
        self.blockers = blockers or []


class NotFoundError(GameError):
    """Unknown session, participant, tender, or artifact."""


class ForbiddenError(GameError):
    """Caller lacks the credentials for a lecturer-only operation."""
