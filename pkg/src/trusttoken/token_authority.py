"""Central token controller: provisioning, runtime authorization, and
integrity-level transitions.

Tokens are 256-bit PUF responses bound to one wrapped IP each.  The table
keeps them private: the only outward path is a one-shot boot-stage
credential release per object; afterwards tokens flow inward only, for
comparison.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError, ProvisioningError
from .policy_engine import (
    AccessRequest,
    Decision,
    DenialReason,
    IntegrityLevel,
    ObjectId,
    SystemModel,
    evaluate,
)
from .puf_model import Challenge, ChipFingerprint, PufParams, Response, measure_response

_PROVISION_SALT = 0x50524F


@dataclass(frozen=True)
class Token:
    """256-bit authorization secret (the ar_token sideband value)."""

    bits: str

    def __post_init__(self):
        if len(self.bits) != 256 or set(self.bits) - {"0", "1"}:
            raise ParameterError("token must be exactly 256 bits of 0/1")

    @classmethod
    def from_response(cls, response: Response) -> "Token":
        return cls(response.bits)

    def flipped(self, bit: int) -> "Token":
        """Copy with one bit inverted (attack-construction helper)."""
        chars = list(self.bits)
        chars[bit] = "0" if chars[bit] == "1" else "1"
        return Token("".join(chars))


ZERO_TOKEN = Token("0" * 256)


@dataclass(frozen=True)
class IpId:
    """8-bit per-IP identifier (the ar_id sideband value)."""

    value: int

    def __post_init__(self):
        if not 0 <= self.value <= 0xFF:
            raise ParameterError(f"ip id must fit in 8 bits, got {self.value}")


@dataclass(frozen=True)
class AuthorizationOutcome:
    granted: bool
    cycle_cost: int
    reason: Optional[DenialReason] = None
    serial: Optional[int] = None

    def __post_init__(self):
        if self.cycle_cost not in (1, 2):
            raise ParameterError("cycle_cost must be 1 or 2")


@dataclass
class _Entry:
    ip_id: IpId
    token: Token
    integrity: IntegrityLevel
    challenge: Challenge
    released: bool = False


class TokenTable:
    """Protected credential store built at boot by :func:`provision`.

    There is deliberately no public token accessor: callers can verify
    presented credentials and release each IP's credentials exactly once
    (the boot-stage push to its wrapper).
    """

    def __init__(self, entries: dict[ObjectId, _Entry], epoch: int = 0):
        self._entries = dict(entries)
        self.epoch = epoch

    def __contains__(self, obj: ObjectId) -> bool:
        return obj in self._entries

    def objects(self) -> tuple[ObjectId, ...]:
        return tuple(self._entries)

    def ip_id_of(self, obj: ObjectId) -> IpId:
        return self._require(obj).ip_id

    def check_credentials(self, obj: ObjectId, ip_id, token) -> Optional[DenialReason]:
        if obj not in self._entries:
            return DenialReason.MALFORMED
        entry = self._entries[obj]
        if token != entry.token:
            return DenialReason.TOKEN_MISMATCH
        if ip_id != entry.ip_id:
            return DenialReason.ID_MISMATCH
        return None

    def release_credentials(self, obj: ObjectId) -> tuple[IpId, Token]:
        """One-shot boot handout of (ar_id, ar_token) for a wrapper."""
        entry = self._require(obj)
        if entry.released:
            raise ParameterError(f"credentials for {obj} were already released")
        entry.released = True
        return entry.ip_id, entry.token

    def _require(self, obj: ObjectId) -> _Entry:
        if obj not in self._entries:
            raise ParameterError(f"object {obj} is not provisioned")
        return self._entries[obj]


def provision(
    chip: ChipFingerprint,
    params: PufParams,
    ip_list: Sequence[tuple[ObjectId, IntegrityLevel]],
    master_seed: int,
    epoch: int = 0,
    on_fault=None,
) -> TokenTable:
    """Boot-stage provisioning: draw a distinct challenge per IP in seeded
    random order, derive each token as the noiseless PUF response, and
    assign sequential 8-bit IDs.

    A token collision is a logged fault; the colliding IP is re-keyed with
    the next challenge.
    """
    if not ip_list:
        raise ProvisioningError("ip_list must not be empty")
    objects = [obj for obj, _ in ip_list]
    if len(set(objects)) != len(objects):
        raise ProvisioningError("duplicate ObjectId in ip_list")
    if len(ip_list) > 256:
        raise ProvisioningError("at most 256 IPs per controller (8-bit ar_id)")

    rng = np.random.default_rng([master_seed, epoch, _PROVISION_SALT])
    challenge_order = iter(int(c) for c in rng.permutation(0x10000))
    quiet = dataclasses.replace(params, noise_sigma=0.0)

    entries: dict[ObjectId, _Entry] = {}
    seen_tokens: set[str] = set()
    for index, (obj, level) in enumerate(ip_list):
        while True:
            challenge = Challenge(next(challenge_order))
            token = Token.from_response(measure_response(chip, challenge, 0, quiet))
            if token.bits in seen_tokens:
                if on_fault is not None:
                    on_fault({"event": "token_collision", "object": obj.index})
                continue
            break
        seen_tokens.add(token.bits)
        entries[obj] = _Entry(
            ip_id=IpId(index), token=token, integrity=level, challenge=challenge
        )
    return TokenTable(entries, epoch=epoch)


def authorize(
    table: TokenTable,
    txn,
    policy: SystemModel,
    strict: bool = True,
) -> AuthorizationOutcome:
    """Authorize one wrapped transaction.

    LOW-integrity targets pass through unchecked at cycle cost 1.  HIGH
    targets pay the 2-cycle handshake: credential comparison first, then
    the policy decision; the payload of a denied transaction is never
    delivered (enforced by the wrapper, which requires this outcome).
    """
    target = txn.target
    if target not in table:
        return AuthorizationOutcome(False, 2, DenialReason.MALFORMED, serial=txn.serial)
    if lookup_integrity(table, target) is IntegrityLevel.LOW:
        return AuthorizationOutcome(True, 1, serial=txn.serial)
    cred_reason = table.check_credentials(target, txn.sideband.ar_id, txn.sideband.ar_token)
    if cred_reason is not None:
        return AuthorizationOutcome(False, 2, cred_reason, serial=txn.serial)
    request = AccessRequest(
        user=txn.source.owner,
        process=txn.source,
        object=target,
        token=txn.sideband.ar_token,
        ip_id=txn.sideband.ar_id,
        attribute=txn.kind,
    )
    decision: Decision = evaluate(policy, request, table, strict=strict)
    if not decision.granted:
        return AuthorizationOutcome(False, 2, decision.reason, serial=txn.serial)
    return AuthorizationOutcome(True, 2, serial=txn.serial)


def request_integrity_transition(
    table: TokenTable,
    obj: ObjectId,
    presented_token: Token,
    new_level: IntegrityLevel,
) -> AuthorizationOutcome:
    """Change an IP's integrity level; requires the IP's own token."""
    if obj not in table:
        return AuthorizationOutcome(False, 2, DenialReason.MALFORMED)
    entry = table._require(obj)
    if presented_token != entry.token:
        return AuthorizationOutcome(False, 2, DenialReason.TOKEN_MISMATCH)
    entry.integrity = new_level
    return AuthorizationOutcome(True, 2)


def lookup_integrity(table: TokenTable, obj: ObjectId) -> IntegrityLevel:
    return table._require(obj).integrity
