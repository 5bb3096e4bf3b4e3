from .service import BrokerService, SearchOutcome, handle_submit_requirements
from .store import FileStore, SecSlaStore

__all__ = ["BrokerService", "FileStore", "SearchOutcome", "SecSlaStore", "handle_submit_requirements"]
