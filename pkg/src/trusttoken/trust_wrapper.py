"""Security wrapper around an untrusted IP core.

The wrapper holds its provisioned (ar_id, ar_token) privately, stamps
them onto every transaction it issues, and gates the data channel: the
hosted stub runs only on transactions the controller has granted.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import ConfigurationError, ParameterError, SimulationFault
from .policy_engine import AccessAttribute, IntegrityLevel, ObjectId, ProcessId
from .token_authority import AuthorizationOutcome, IpId, Token


@dataclass(frozen=True)
class SidebandSignals:
    """The extra bus signals: 256-bit token, 8-bit id, 1-bit integrity."""

    ar_token: Token
    ar_id: IpId
    ar_integrity: IntegrityLevel

    def encode(self) -> bytes:
        """Wire encoding: 32 token bytes big-endian, 1 id byte, 1 flags
        byte whose LSB is the integrity bit (HIGH = 1)."""
        token_bytes = int(self.ar_token.bits, 2).to_bytes(32, "big")
        flags = 1 if self.ar_integrity is IntegrityLevel.HIGH else 0
        return token_bytes + bytes([self.ar_id.value, flags])


@dataclass(frozen=True)
class WrappedTransaction:
    source: ProcessId
    target: ObjectId
    kind: AccessAttribute
    payload: bytes
    sideband: SidebandSignals
    issue_cycle: int
    serial: int


@dataclass(frozen=True)
class IpCoreStub:
    """Deterministic stand-in for a crypto IP core; transform is pure."""

    name: str
    transform: Callable[[bytes], bytes]


def _aes_stub(payload: bytes) -> bytes:
    # fixed byte substitution: xor + nibble swap
    return bytes(((b ^ 0x5A) >> 4 | ((b ^ 0x5A) & 0x0F) << 4) & 0xFF for b in payload)


def _des_stub(payload: bytes) -> bytes:
    # rotate each byte left by 3
    return bytes(((b << 3) | (b >> 5)) & 0xFF for b in payload)


def _trng_stub(payload: bytes) -> bytes:
    # seeded pseudo-random block of the same length as the request
    if not payload:
        return b""
    stream = b""
    counter = 0
    while len(stream) < len(payload):
        stream += hashlib.sha256(payload + counter.to_bytes(4, "big")).digest()
        counter += 1
    return stream[: len(payload)]


def _rsa_stub(payload: bytes) -> bytes:
    # toy per-byte modular exponent
    return bytes(pow(b, 17, 251) for b in payload)


_STANDARD_STUBS = {
    "AES": _aes_stub,
    "DES": _des_stub,
    "TRNG": _trng_stub,
    "RSA": _rsa_stub,
}


def standard_stub(name: str) -> IpCoreStub:
    try:
        return IpCoreStub(name=name, transform=_STANDARD_STUBS[name.upper()])
    except KeyError:
        raise ConfigurationError(f"no standard stub named {name!r}") from None


class TrustWrapper:
    """One wrapped IP: holds the stub, its object id, and (after
    provisioning) its private credentials."""

    def __init__(self, stub: IpCoreStub, obj: ObjectId, declared_integrity: IntegrityLevel):
        self.stub = stub
        self.object = obj
        self.declared_integrity = declared_integrity
        self._ip_id: Optional[IpId] = None
        self._token: Optional[Token] = None
        self.stub_invocations = 0
        self._issue_counter = 0

    @property
    def provisioned(self) -> bool:
        return self._token is not None

    def install_credentials(self, ip_id: IpId, token: Token) -> None:
        """Controller-side boot push; overwritten on re-provisioning."""
        self._ip_id = ip_id
        self._token = token

    def sideband(self) -> SidebandSignals:
        if not self.provisioned:
            raise ConfigurationError(f"wrapper for {self.object} is not provisioned")
        return SidebandSignals(self._token, self._ip_id, self.declared_integrity)

    def issue(
        self,
        target: ObjectId,
        kind: AccessAttribute,
        payload: bytes,
        *,
        source: ProcessId,
        clock: int,
    ) -> WrappedTransaction:
        """Create a transaction carrying this wrapper's own sideband verbatim."""
        if not self.provisioned:
            raise ConfigurationError(f"wrapper for {self.object} is not provisioned")
        if kind == AccessAttribute.NONE:
            raise ParameterError("transaction kind needs at least one access bit")
        self._issue_counter += 1
        return WrappedTransaction(
            source=source,
            target=target,
            kind=kind,
            payload=bytes(payload),
            sideband=self.sideband(),
            issue_cycle=clock,
            serial=self._issue_counter,
        )

    def deliver(
        self, txn: WrappedTransaction, outcome: AuthorizationOutcome
    ) -> Optional[bytes]:
        """Run the stub on a granted transaction; a denied one never
        reaches the stub and yields no payload."""
        if outcome.serial != txn.serial:
            raise SimulationFault("authorization outcome does not match transaction")
        if not outcome.granted:
            return None
        self.stub_invocations += 1
        return self.stub.transform(txn.payload)


class WrapperRegistry:
    """Tracks wrapped objects; wrapping the same object twice is an error."""

    def __init__(self):
        self._wrappers: dict[ObjectId, TrustWrapper] = {}

    def wrap(
        self, stub: IpCoreStub, obj: ObjectId, declared_integrity: IntegrityLevel
    ) -> TrustWrapper:
        if obj in self._wrappers:
            raise ConfigurationError(f"object {obj} is already wrapped")
        wrapper = TrustWrapper(stub, obj, declared_integrity)
        self._wrappers[obj] = wrapper
        return wrapper

    def __contains__(self, obj: ObjectId) -> bool:
        return obj in self._wrappers

    def __getitem__(self, obj: ObjectId) -> TrustWrapper:
        return self._wrappers[obj]

    def __iter__(self):
        return iter(self._wrappers.values())

    def objects(self) -> tuple[ObjectId, ...]:
        return tuple(self._wrappers)
