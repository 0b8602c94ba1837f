"""Shared fixtures and property-test settings."""

import pytest
from hypothesis import HealthCheck, settings

from gamedriver import drive_session
from tetravale.session import Session

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def played() -> Session:
    """A finished 12-participant game at the debrief. Treat as read-only;
    tests that mutate state must create their own session."""
    return drive_session(Session.create("shared", class_size=12, seed=424242))
