"""Real-time pose tracking with periodic global corrections.

The output pose is always anchor composed with the product of odometry
increments received since that anchor. A relocalization fix replaces the
anchor at the fix timestamp and replays the increments recorded after it, so
already-emitted poses are never rewritten and odometry keeps streaming at
full rate between fixes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .association import AssociationParams
from .cluster_map import ClusterMap, Frame
from .extraction import ExtractionParams, extract_clusters
from .geometry import PoseSE3
from .registration import build_local_map
from .relocalization import RelocalizationFailure, RelocParams, RelocResult, relocalize

log = logging.getLogger(__name__)

# How many trailing increments stay replayable for late-arriving fixes.
HISTORY_LIMIT = 512
# Rotation blocks are renormalized after this many compositions.
RENORM_PERIOD = 100


class StaleFixError(Exception):
    pass


@dataclass(frozen=True)
class OdometryIncrement:
    timestamp: float
    relative_pose: PoseSE3


@dataclass(frozen=True)
class AnchoredPose:
    """Tracking state: globally anchored pose plus accumulated odometry."""

    anchor: PoseSE3
    accumulated: PoseSE3
    history: tuple[OdometryIncrement, ...] = ()
    last_timestamp: float | None = None
    compose_count: int = 0

    @classmethod
    def start(cls, anchor: PoseSE3) -> "AnchoredPose":
        return cls(anchor=anchor, accumulated=PoseSE3.identity())

    @property
    def output(self) -> PoseSE3:
        return self.anchor @ self.accumulated


def apply_increment(state: AnchoredPose, increment: OdometryIncrement) -> AnchoredPose:
    """Advance the state by one odometry step; timestamps must increase."""
    if state.last_timestamp is not None and increment.timestamp <= state.last_timestamp:
        raise ValueError(
            f"out-of-order increment: {increment.timestamp} after {state.last_timestamp}"
        )
    accumulated = state.accumulated @ increment.relative_pose
    count = state.compose_count + 1
    if count % RENORM_PERIOD == 0:
        accumulated = accumulated.renormalized()
    history = (state.history + (increment,))[-HISTORY_LIMIT:]
    return AnchoredPose(
        anchor=state.anchor,
        accumulated=accumulated,
        history=history,
        last_timestamp=increment.timestamp,
        compose_count=count,
    )


def apply_global_fix(state: AnchoredPose, fix: RelocResult, fix_timestamp: float) -> AnchoredPose:
    """Re-anchor at a corrected absolute pose valid at fix_timestamp.

    fix.pose must be the corrected vehicle pose in the global frame at
    fix_timestamp. Increments recorded after the fix are replayed on top of
    the new anchor; a fix older than the retained increment window raises
    StaleFixError.
    """
    if state.last_timestamp is not None and fix_timestamp > state.last_timestamp:
        raise ValueError("fix_timestamp is ahead of the latest increment")
    tail = [inc for inc in state.history if inc.timestamp > fix_timestamp]
    if (
        len(state.history) == HISTORY_LIMIT
        and state.history
        and fix_timestamp < state.history[0].timestamp
    ):
        raise StaleFixError("stale-fix")
    accumulated = PoseSE3.identity()
    for inc in tail:
        accumulated = accumulated @ inc.relative_pose
    return AnchoredPose(
        anchor=fix.pose,
        accumulated=accumulated,
        history=state.history,
        last_timestamp=state.last_timestamp,
        compose_count=len(tail),
    )


@dataclass(frozen=True)
class PipelineConfig:
    reloc_period: float = 0.5
    reloc_enabled: bool = True
    # Reject fixes that jump farther than this from the current output; None
    # disables the gate.
    max_fix_jump: float | None = None

    def __post_init__(self):
        if self.reloc_period <= 0:
            raise ValueError("reloc_period must be positive")


@dataclass(frozen=True)
class PipelineResult:
    trajectory: tuple[tuple[float, PoseSE3], ...]
    fixes_applied: int = 0
    attempts: int = 0
    failures: tuple[tuple[float, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trajectory", tuple(self.trajectory))
        object.__setattr__(self, "failures", tuple(self.failures))


def run_pipeline(
    frames,
    increments,
    global_map: ClusterMap,
    *,
    initial_pose: PoseSE3 | None = None,
    extraction: ExtractionParams | None = None,
    association: AssociationParams | None = None,
    relocalization: RelocParams | None = None,
    config: PipelineConfig | None = None,
) -> PipelineResult:
    """Track a frame sequence against a global map.

    frames[i] is reached by increments[i-1]; increments must therefore number
    one less than frames. Every reloc_period seconds the current frame's
    clusters are posed at the running estimate and relocalized against the
    global map; failures are logged and skipped.
    """
    frames = list(frames)
    increments = list(increments)
    if len(increments) != max(len(frames) - 1, 0):
        raise ValueError("expected one increment between consecutive frames")
    config = config or PipelineConfig()
    extraction = extraction or ExtractionParams()
    association = association or AssociationParams()
    relocalization = relocalization or RelocParams()

    state = AnchoredPose.start(initial_pose or PoseSE3.identity())
    trajectory: list[tuple[float, PoseSE3]] = []
    failures: list[tuple[float, str]] = []
    fixes = 0
    attempts = 0
    next_attempt = frames[0].timestamp if frames else 0.0

    for i, frame in enumerate(frames):
        if i > 0:
            state = apply_increment(state, increments[i - 1])
        if config.reloc_enabled and frame.timestamp >= next_attempt:
            next_attempt = frame.timestamp + config.reloc_period
            attempts += 1
            state, fixed, reason = _attempt_fix(
                state, frame, global_map, extraction, association, relocalization, config
            )
            if fixed:
                fixes += 1
            elif reason is not None:
                failures.append((frame.timestamp, reason))
        trajectory.append((frame.timestamp, state.output))
    return PipelineResult(
        trajectory=tuple(trajectory),
        fixes_applied=fixes,
        attempts=attempts,
        failures=tuple(failures),
    )


def _attempt_fix(
    state: AnchoredPose,
    frame: Frame,
    global_map: ClusterMap,
    extraction: ExtractionParams,
    association: AssociationParams,
    relocalization: RelocParams,
    config: PipelineConfig,
) -> tuple[AnchoredPose, bool, str | None]:
    clusters = extract_clusters(frame, extraction)
    if not clusters:
        return state, False, "no-clusters"
    estimate = state.output
    local_map = build_local_map(clusters, estimate)
    try:
        result = relocalize(local_map, global_map, association, relocalization)
    except RelocalizationFailure as exc:
        log.info("relocalization failed at t=%.3f: %s", frame.timestamp, exc.reason)
        return state, False, exc.reason
    corrected = result.pose @ estimate
    if config.max_fix_jump is not None:
        jump = float(np.linalg.norm(corrected.translation - estimate.translation))
        if jump > config.max_fix_jump:
            log.info("fix rejected at t=%.3f: jump %.2f m", frame.timestamp, jump)
            return state, False, "fix-gated"
    fix = replace(result, pose=corrected)
    try:
        state = apply_global_fix(state, fix, frame.timestamp)
    except StaleFixError:
        return state, False, "stale-fix"
    return state, True, None