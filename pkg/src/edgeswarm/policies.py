"""Controller-side decisions: leader selection, group formation, sub-task assignment.

All functions are pure and deterministic; ties are broken by node id so
re-running a decision on the same inputs gives an identical result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

from .model import ContainerImage, EdgeNode, ValidationError, VideoChunk, proportional_shares

if TYPE_CHECKING:
    from .swarmproto import ServiceSpec

ALL_AVAILABLE = "all_available"
TOP_K = "top_k"
LEADER_ONLY = "leader_only"

UNICAST = "unicast"
MULTICAST = "multicast"

SPLIT_EQUAL = "equal"
SPLIT_RATE_WEIGHTED = "rate_weighted"


class NoImageHolderError(Exception):
    """No candidate node stores every read-only layer of the required image."""

    def __init__(self, image_id: str):
        super().__init__(f"no node holds all read-only layers of image {image_id!r}")
        self.image_id = image_id


@dataclass(frozen=True)
class GroupFormationPolicy:
    """How many nodes to admit into a cooperative group.

    ``kind`` is ``all_available`` (every node), ``top_k`` (the ``k``
    fastest members including the leader, clamped to the node count) or
    ``leader_only`` (no workers; the single-node baseline).
    """

    kind: str = ALL_AVAILABLE
    k: int | None = None


@dataclass(frozen=True)
class Swarm:
    """A formed cooperative group: one leader plus ordered workers."""

    swarm_id: str
    leader_id: str
    worker_ids: tuple[str, ...]
    join_token: str = ""
    service: "ServiceSpec | None" = None

    @property
    def member_ids(self) -> tuple[str, ...]:
        return (self.leader_id,) + self.worker_ids


@dataclass(frozen=True)
class Assignment:
    """One chunk's delivery mode and the frame sub-ranges each node computes.

    For unicast there is a single entry covering the whole chunk; for
    multicast the sub-ranges partition the chunk's frame range.
    """

    chunk: VideoChunk
    mode: str
    node_frames: tuple[tuple[str, tuple[int, int]], ...]

    def receivers(self) -> tuple[str, ...]:
        return tuple(node_id for node_id, _ in self.node_frames)

    def frames_for(self, node_id: str) -> int:
        return sum(last - first for nid, (first, last) in self.node_frames if nid == node_id)


@dataclass(frozen=True)
class AssignmentPlan:
    """Mapping of every chunk of a task to its computing node(s)."""

    task_id: str
    entries: tuple[Assignment, ...]

    def node_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for entry in self.entries:
            for node_id, _ in entry.node_frames:
                seen.setdefault(node_id)
        return tuple(seen)

    def frames_assigned_to(self, node_id: str) -> int:
        return sum(entry.frames_for(node_id) for entry in self.entries)

    def input_bits_for(self, node_id: str) -> float:
        """Bits of chunk data the node actually processes.

        Unicast chunks count in full for their receiver; multicast chunks
        are attributed in proportion to the node's frame sub-range (or
        equally when the chunk has no frames).
        """
        bits = 0.0
        for entry in self.entries:
            if entry.mode == UNICAST:
                if entry.node_frames[0][0] == node_id:
                    bits += entry.chunk.size_bits
            else:
                if entry.chunk.frame_count > 0:
                    bits += entry.chunk.size_bits * entry.frames_for(node_id) / entry.chunk.frame_count
                elif any(nid == node_id for nid, _ in entry.node_frames):
                    bits += entry.chunk.size_bits / len(entry.node_frames)
        return bits


def _by_rate_then_id(node: EdgeNode) -> tuple[float, str]:
    return (-node.effective_rate_wu_s, node.node_id)


def select_leader(nodes: Sequence[EdgeNode], image: ContainerImage) -> str:
    """Pick the swarm leader: an image holder with the highest effective rate.

    Only nodes storing every read-only layer of ``image`` qualify (the
    leader seeds workers with missing layers). Ties go to the lowest
    node id. Raises :class:`NoImageHolderError` when no node qualifies.
    """
    if not nodes:
        raise ValidationError("nodes", "must be nonempty")
    holders = [node for node in nodes if node.holds_image(image)]
    if not holders:
        raise NoImageHolderError(image.image_id)
    return min(holders, key=_by_rate_then_id).node_id


def form_group(
    nodes: Sequence[EdgeNode],
    policy: GroupFormationPolicy,
    image: ContainerImage,
) -> Swarm:
    """Form a cooperative group around the selected leader.

    Workers are the remaining admitted nodes ordered by descending
    effective rate then id. ``top_k`` counts the leader, and a ``k``
    beyond the node count is clamped rather than rejected.
    """
    ids = [node.node_id for node in nodes]
    if len(set(ids)) != len(ids):
        raise ValidationError("nodes", "node ids must be distinct")
    leader_id = select_leader(nodes, image)
    others = sorted((n for n in nodes if n.node_id != leader_id), key=_by_rate_then_id)

    if policy.kind == LEADER_ONLY:
        admitted = 0
    elif policy.kind == ALL_AVAILABLE:
        admitted = len(others)
    elif policy.kind == TOP_K:
        if policy.k is None or policy.k < 1:
            raise ValidationError("policy.k", f"top_k needs k >= 1, got {policy.k!r}")
        admitted = min(policy.k, len(nodes)) - 1
    else:
        raise ValidationError("policy.kind", f"unknown group policy {policy.kind!r}")

    return Swarm(
        swarm_id=f"swarm-{leader_id}",
        leader_id=leader_id,
        worker_ids=tuple(node.node_id for node in others[:admitted]),
    )


def assign_subtasks(
    chunks: Sequence[VideoChunk],
    swarm: Swarm,
    nodes: Mapping[str, EdgeNode],
    split: str = SPLIT_EQUAL,
    mode: str = UNICAST,
) -> AssignmentPlan:
    """Assign chunks to swarm members.

    Unicast maps chunk ``i`` to member ``i`` (leader first, workers in
    swarm order) and requires one chunk per member; the caller re-splits
    the task otherwise. Multicast delivers every chunk to all members as
    one transmission, and each member computes a frame sub-range split
    equally or in proportion to effective compute rates
    (largest-remainder rounding, ties to the leader-first order).
    """
    if not chunks:
        raise ValidationError("chunks", "must be nonempty")
    members = swarm.member_ids
    if not members:
        raise ValidationError("swarm", "has no members")
    for member in members:
        if member not in nodes:
            raise ValidationError("nodes", f"missing node {member!r}")
    if split not in (SPLIT_EQUAL, SPLIT_RATE_WEIGHTED):
        raise ValidationError("split", f"unknown split {split!r}")

    entries: list[Assignment] = []
    if mode == UNICAST:
        if len(chunks) != len(members):
            raise ValidationError(
                "chunks",
                f"unicast needs chunk count == member count ({len(chunks)} != {len(members)}); re-split the task",
            )
        for chunk, member in zip(chunks, members):
            entries.append(Assignment(chunk, UNICAST, ((member, chunk.frame_range),)))
    elif mode == MULTICAST:
        if split == SPLIT_RATE_WEIGHTED:
            weights = [nodes[m].effective_rate_wu_s for m in members]
        else:
            weights = [1.0] * len(members)
        for chunk in chunks:
            shares = proportional_shares(chunk.frame_count, weights)
            node_frames = []
            first = chunk.frame_range[0]
            for member, share in zip(members, shares):
                node_frames.append((member, (first, first + share)))
                first += share
            entries.append(Assignment(chunk, MULTICAST, tuple(node_frames)))
    else:
        raise ValidationError("mode", f"unknown transmission mode {mode!r}")

    return AssignmentPlan(task_id=chunks[0].task_id, entries=tuple(entries))
