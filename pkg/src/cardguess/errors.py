"""Exception types shared across the package."""


class CardGuessError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(CardGuessError, ValueError):
    """Deck or parameter specification outside the supported domain."""


class EmptyDeckError(CardGuessError, ValueError):
    """An operation needed a card but the deck is empty."""


class CapacityError(CardGuessError):
    """A computation would exceed a configured size cap."""

    def __init__(self, what: str, needed: int, cap: int) -> None:
        super().__init__(f"{what}: needs {needed}, cap is {cap}")
        self.what = what
        self.needed = needed
        self.cap = cap
