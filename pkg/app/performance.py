"""
Stage Timing Monitor
====================

Tracks wall-clock time of the pipeline stages (load, sensitivities, build,
solve, extract, verify, write) and logs a per-scenario summary.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class StageMetrics:
    """Timing of one pipeline stage"""
    stage: str
    start_time: float
    completion_time: Optional[float] = None
    success: bool = False
    error_message: Optional[str] = None

    @property
    def elapsed(self) -> Optional[float]:
        """Seconds spent in the stage"""
        if self.completion_time:
            return self.completion_time - self.start_time
        return None


@dataclass
class StageTimer:
    """Collects stage timings for one scenario run"""
    scenario: str
    stages: List[StageMetrics] = field(default_factory=list)

    @contextmanager
    def stage(self, name: str) -> Iterator[StageMetrics]:
        """Time the enclosed block as one stage"""
        metrics = StageMetrics(stage=name, start_time=time.perf_counter())
        self.stages.append(metrics)
        try:
            yield metrics
            metrics.success = True
        except Exception as e:
            metrics.error_message = str(e)
            raise
        finally:
            metrics.completion_time = time.perf_counter()
            status = "✅" if metrics.success else "❌"
            logger.info(f"{status} [{self.scenario}] {name}: {(metrics.elapsed or 0) * 1000:.1f}ms")

    def totals(self) -> Dict[str, float]:
        """Seconds per stage name, summed over repeated stages"""
        totals: Dict[str, float] = {}
        for metrics in self.stages:
            totals[metrics.stage] = totals.get(metrics.stage, 0.0) + (metrics.elapsed or 0.0)
        return totals

    def log_summary(self) -> None:
        """Log the per-stage breakdown of a finished run"""
        totals = self.totals()
        overall = sum(totals.values())
        logger.info(f"📊 [{self.scenario}] finished in {overall:.3f}s")
        for name, seconds in totals.items():
            logger.info(f"  {name}: {seconds:.3f}s")
