"""
Base classes for acceptance checks
"""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel

from group_schema import RppError

logger = logging.getLogger(__name__)


class CheckMetadata:
    def __init__(self, item: int, name: str, description: str, category: str):
        self.item = item
        self.name = name
        self.description = description
        self.category = category


class CheckStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"


class CheckResult(BaseModel):
    item: int
    name: str
    category: str
    status: CheckStatus
    measured: Dict[str, Any] = {}
    message: Optional[str] = None


class CheckFailed(Exception):
    def __init__(self, message: str, **measured: Any):
        super().__init__(message)
        self.measured = measured


class BaseCheck(ABC):
    """One acceptance item: `run` returns measured values or raises CheckFailed."""

    @property
    @abstractmethod
    def metadata(self) -> CheckMetadata:
        pass

    @abstractmethod
    def run(self, scale: Any, rng: np.random.Generator) -> Dict[str, Any]:
        pass

    def require(self, condition: bool, message: str, **measured: Any) -> None:
        if not condition:
            raise CheckFailed(message, **measured)

    def execute(self, scale: Any, seed: int) -> CheckResult:
        meta = self.metadata
        rng = np.random.default_rng([seed, meta.item])
        base = {"item": meta.item, "name": meta.name, "category": meta.category}
        try:
            measured = self.run(scale, rng)
        except CheckFailed as e:
            logger.warning(f"item {meta.item} ({meta.name}) failed: {e}")
            return CheckResult(**base, status=CheckStatus.FAILED, measured=e.measured, message=str(e))
        except RppError as e:
            logger.warning(f"item {meta.item} ({meta.name}) raised {e.code}: {e}")
            return CheckResult(**base, status=CheckStatus.ERROR, measured=e.to_json(), message=str(e))
        logger.info(f"item {meta.item} ({meta.name}) passed")
        return CheckResult(**base, status=CheckStatus.PASSED, measured=measured)
