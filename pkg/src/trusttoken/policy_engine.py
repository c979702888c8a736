"""Formal access-control model and decision rules.

A system couples users, their processes, wrapped IP objects, and one
access matrix per user (m processes x k objects of 3-bit r/w/e cells).
``evaluate`` is the single pure decision function: a request is granted
only if the process belongs to the requesting user, the presented
credentials match the provisioned ones, and the matrix cell covers every
requested access bit.  Matrix mutation is restricted to the controller
and, during the design phase, the IP integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntFlag
from typing import Mapping, Optional, Protocol, Sequence

from .errors import ConstructionError, MatrixTamperError, ParameterError


class AccessAttribute(IntFlag):
    """3-bit access attribute a2 a1 a0 with a2=read, a1=write, a0=execute."""

    NONE = 0
    EXECUTE = 1
    WRITE = 2
    READ = 4


def attribute_from_str(text: str) -> AccessAttribute:
    """Parse attribute strings like 'rwe', 'r', 'we'."""
    attr = AccessAttribute.NONE
    for ch in text.lower():
        if ch == "r":
            attr |= AccessAttribute.READ
        elif ch == "w":
            attr |= AccessAttribute.WRITE
        elif ch == "e" or ch == "x":
            attr |= AccessAttribute.EXECUTE
        elif ch in "- ":
            continue
        else:
            raise ParameterError(f"unknown access flag {ch!r} in {text!r}")
    return attr


class IntegrityLevel(Enum):
    HIGH = "HIGH"
    LOW = "LOW"


class Verdict(Enum):
    YES = "yes"
    NO = "no"


class DenialReason(Enum):
    TOKEN_MISMATCH = "token_mismatch"
    ID_MISMATCH = "id_mismatch"
    MATRIX_DENY = "matrix_deny"
    FOREIGN_PROCESS = "foreign_process"
    MALFORMED = "malformed"
    MATRIX_TAMPER = "matrix_tamper"


@dataclass(frozen=True)
class UserId:
    index: int


@dataclass(frozen=True)
class ProcessId:
    owner: UserId
    index: int


@dataclass(frozen=True)
class ObjectId:
    index: int


@dataclass(frozen=True)
class AccessMatrix:
    """Per-user grid of access attributes: rows = that user's processes,
    columns = global objects."""

    owner: UserId
    cells: tuple[tuple[AccessAttribute, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    def cell(self, process_index: int, object_index: int) -> AccessAttribute:
        return self.cells[process_index][object_index]

    def with_cell(self, process_index: int, object_index: int, attr: AccessAttribute) -> "AccessMatrix":
        rows = [list(row) for row in self.cells]
        rows[process_index][object_index] = attr
        return AccessMatrix(self.owner, tuple(tuple(row) for row in rows))


class Actor(Enum):
    """Who attempts a matrix modification."""

    CONTROLLER = "controller"
    INTEGRATOR = "integrator"
    USER = "user"


@dataclass(frozen=True)
class AccessRequest:
    """One access request: the six enumerated members (u, p, o, t, i, a)."""

    user: UserId
    process: ProcessId
    object: ObjectId
    token: object
    ip_id: object
    attribute: AccessAttribute


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    reason: Optional[DenialReason] = None

    def __post_init__(self):
        if self.verdict is Verdict.YES and self.reason is not None:
            raise ParameterError("a yes decision carries no denial reason")

    @property
    def granted(self) -> bool:
        return self.verdict is Verdict.YES


GRANT = Decision(Verdict.YES)


def deny(reason: DenialReason) -> Decision:
    return Decision(Verdict.NO, reason)


class CredentialChecker(Protocol):
    """Read-only credential verification view over a provisioned token table."""

    def __contains__(self, obj: ObjectId) -> bool: ...

    def check_credentials(self, obj: ObjectId, ip_id, token) -> Optional[DenialReason]: ...


class StaticCredentialStore:
    """Plain dict-backed credential view, for tests and standalone policy use."""

    def __init__(self, entries: Mapping[ObjectId, tuple]):
        self._entries = dict(entries)

    def __contains__(self, obj: ObjectId) -> bool:
        return obj in self._entries

    def check_credentials(self, obj, ip_id, token) -> Optional[DenialReason]:
        if obj not in self._entries:
            return DenialReason.MALFORMED
        stored_id, stored_token = self._entries[obj]
        if token != stored_token:
            return DenialReason.TOKEN_MISMATCH
        if ip_id != stored_id:
            return DenialReason.ID_MISMATCH
        return None


@dataclass(frozen=True)
class SystemModel:
    users: tuple[UserId, ...]
    processes: tuple[ProcessId, ...]
    objects: tuple[ObjectId, ...]
    matrices: tuple[tuple[UserId, AccessMatrix], ...]
    design_phase: bool = True

    def matrix_for(self, user: UserId) -> AccessMatrix:
        for owner, matrix in self.matrices:
            if owner == user:
                return matrix
        raise ParameterError(f"no matrix for {user}")

    def processes_of(self, user: UserId) -> tuple[ProcessId, ...]:
        return tuple(p for p in self.processes if p.owner == user)

    def sealed(self) -> "SystemModel":
        """Leave the design phase: integrator modifications are rejected after this."""
        return replace(self, design_phase=False)


def build_system(
    users: Sequence[UserId],
    processes: Sequence[ProcessId],
    objects: Sequence[ObjectId],
    matrices: Sequence[AccessMatrix],
) -> SystemModel:
    """Validate and freeze a system model.

    The user->matrix assignment must be one-to-one and each matrix must be
    shaped (own process count) x (object count).
    """
    users = tuple(users)
    processes = tuple(processes)
    objects = tuple(objects)
    if len(set(users)) != len(users):
        raise ConstructionError("duplicate users")
    if len(set(objects)) != len(objects):
        raise ConstructionError("duplicate objects")
    if len(set(processes)) != len(processes):
        raise ConstructionError("duplicate processes")
    for p in processes:
        if p.owner not in users:
            raise ConstructionError(f"process {p} owned by unknown user")

    by_owner: dict[UserId, AccessMatrix] = {}
    for matrix in matrices:
        if matrix.owner in by_owner:
            raise ConstructionError(f"more than one matrix assigned to {matrix.owner}")
        if matrix.owner not in users:
            raise ConstructionError(f"matrix owner {matrix.owner} is not a user")
        by_owner[matrix.owner] = matrix
    for user in users:
        if user not in by_owner:
            raise ConstructionError(f"user {user} has no matrix")
        matrix = by_owner[user]
        own = sum(1 for p in processes if p.owner == user)
        if matrix.rows != own:
            raise ConstructionError(
                f"matrix of {user} has {matrix.rows} rows, user owns {own} processes"
            )
        if own and matrix.cols != len(objects):
            raise ConstructionError(
                f"matrix of {user} has {matrix.cols} columns, system has {len(objects)} objects"
            )
    return SystemModel(
        users=users,
        processes=processes,
        objects=objects,
        matrices=tuple((u, by_owner[u]) for u in users),
    )


def classify_confidentiality(attribute: AccessAttribute) -> bool:
    """Confidentiality is preserved iff the read bit or the execute bit is set."""
    return bool(attribute & (AccessAttribute.READ | AccessAttribute.EXECUTE))


def classify_integrity(attribute: AccessAttribute) -> bool:
    """Integrity is preserved iff the write bit or the execute bit is set."""
    return bool(attribute & (AccessAttribute.WRITE | AccessAttribute.EXECUTE))


def evaluate(
    model: SystemModel,
    request: AccessRequest,
    credentials: CredentialChecker,
    strict: bool = True,
) -> Decision:
    """Decide one access request.

    Check order is fixed (it is part of the observable reason contract):
    unknown references, foreign process, credential match, empty-attribute
    strict check, matrix coverage.
    """
    if (
        request.user not in model.users
        or request.process not in model.processes
        or request.object not in model.objects
    ):
        return deny(DenialReason.MALFORMED)
    if request.process.owner != request.user:
        return deny(DenialReason.FOREIGN_PROCESS)
    if request.object not in credentials:
        return deny(DenialReason.MALFORMED)
    cred_reason = credentials.check_credentials(request.object, request.ip_id, request.token)
    if cred_reason is not None:
        return deny(cred_reason)
    if strict and not (classify_confidentiality(request.attribute) or classify_integrity(request.attribute)):
        return deny(DenialReason.MALFORMED)
    own_processes = model.processes_of(request.user)
    row = own_processes.index(request.process)
    col = model.objects.index(request.object)
    cell = model.matrix_for(request.user).cell(row, col)
    if request.attribute & cell != request.attribute:
        return deny(DenialReason.MATRIX_DENY)
    return GRANT


def modify_matrix(
    model: SystemModel,
    actor: Actor,
    user: UserId,
    process: ProcessId,
    obj: ObjectId,
    new_attribute: AccessAttribute,
) -> SystemModel:
    """Update one matrix cell; only the controller (always) or the
    integrator (design phase only) may do so."""
    allowed = actor is Actor.CONTROLLER or (actor is Actor.INTEGRATOR and model.design_phase)
    if not allowed:
        raise MatrixTamperError(f"{actor.value} may not modify the access matrix")
    if user not in model.users or process not in model.processes or obj not in model.objects:
        raise ParameterError("unknown user/process/object")
    if process.owner != user:
        raise ParameterError("process is not owned by the given user")
    row = model.processes_of(user).index(process)
    col = model.objects.index(obj)
    new_matrix = model.matrix_for(user).with_cell(row, col, new_attribute)
    new_matrices = tuple(
        (u, new_matrix if u == user else m) for u, m in model.matrices
    )
    return replace(model, matrices=new_matrices)
