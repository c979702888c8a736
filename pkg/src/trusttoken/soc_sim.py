"""Deterministic discrete-event SoC simulation with attack injection.

Wires CPUs/applications, trust wrappers, the token controller, and the
policy engine together, drives a scripted sequence of transactions and
attack injections in cycle order (FIFO within a cycle), and records every
grant, denial, transition, and attack outcome in an append-only event
log.  A "trustzone-baseline" mode replaces token authorization with the
signal-gated isolation that the modeled attacks defeat, for contrast.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

from .errors import ConfigurationError, MatrixTamperError, SimulationFault
from .policy_engine import (
    AccessAttribute,
    AccessMatrix,
    Actor,
    DenialReason,
    IntegrityLevel,
    ObjectId,
    ProcessId,
    SystemModel,
    UserId,
    build_system,
    modify_matrix,
)
from .puf_model import PufParams, new_chip
from .token_authority import (
    ZERO_TOKEN,
    Token,
    authorize,
    provision,
    request_integrity_transition,
)
from .trust_wrapper import (
    SidebandSignals,
    WrappedTransaction,
    WrapperRegistry,
    standard_stub,
)

MODE_TRUSTTOKEN = "trusttoken"
MODE_BASELINE = "trustzone-baseline"
MODES = (MODE_TRUSTTOKEN, MODE_BASELINE)

FULL_ACCESS = AccessAttribute.READ | AccessAttribute.WRITE | AccessAttribute.EXECUTE


# --------------------------------------------------------------------------
# topology


@dataclass(frozen=True)
class CpuSpec:
    name: str
    apps: tuple[str, ...]
    user: Optional[str] = None  # defaults to the cpu name


@dataclass(frozen=True)
class IpSpec:
    stub: str  # AES / DES / TRNG / RSA
    object: str
    integrity: IntegrityLevel = IntegrityLevel.HIGH


@dataclass(frozen=True)
class Topology:
    cpus: tuple[CpuSpec, ...]
    wrapped_ips: tuple[IpSpec, ...]
    app_to_ip: Mapping[str, str]

    def validate(self) -> None:
        if not self.cpus or not self.wrapped_ips:
            raise ConfigurationError("topology needs at least one CPU and one wrapped IP")
        apps = [a for cpu in self.cpus for a in cpu.apps]
        if len(set(apps)) != len(apps):
            raise ConfigurationError("duplicate application names")
        objects = [ip.object for ip in self.wrapped_ips]
        if len(set(objects)) != len(objects):
            raise ConfigurationError("duplicate object names")
        for app, obj in self.app_to_ip.items():
            if app not in apps:
                raise ConfigurationError(f"app_to_ip names unknown app {app!r}")
            if obj not in objects:
                raise ConfigurationError(f"app_to_ip names unknown object {obj!r}")
        for app in apps:
            if app not in self.app_to_ip:
                raise ConfigurationError(f"application {app!r} has no mapped IP")


# --------------------------------------------------------------------------
# script entries


class AttackKind(Enum):
    FORGE_TOKEN = "forge_token"
    CROSS_IP_ACCESS = "cross_ip_access"
    TAMPER_INTERCONNECT_SIGNAL = "tamper_interconnect_signal"
    TAMPER_INTEGRITY_LEVEL = "tamper_integrity_level"
    REPLAY_STALE_TOKEN = "replay_stale_token"


@dataclass(frozen=True)
class TransactionIntent:
    cycle: int
    app: str
    target: str
    attribute: AccessAttribute
    payload: bytes = b""


@dataclass(frozen=True)
class AttackInjection:
    kind: AttackKind
    trigger_cycle: int
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class ReprovisionEvent:
    cycle: int


ScriptEntry = Union[TransactionIntent, AttackInjection, ReprovisionEvent]


def _entry_cycle(entry: ScriptEntry) -> int:
    return entry.trigger_cycle if isinstance(entry, AttackInjection) else entry.cycle


# --------------------------------------------------------------------------
# event log


@dataclass(frozen=True)
class EventRecord:
    cycle: int
    actor: str
    kind: str
    detail: tuple[tuple[str, object], ...]

    def to_line(self) -> str:
        return f"{self.cycle}\t{self.actor}\t{self.kind}\t" + json.dumps(
            dict(self.detail), sort_keys=True
        )


class EventLog:
    """Append-only, cycle-monotonic record of a simulation run."""

    def __init__(self):
        self._records: list[EventRecord] = []

    def append(self, cycle: int, actor: str, kind: str, **detail) -> EventRecord:
        if self._records and cycle < self._records[-1].cycle:
            raise SimulationFault("event log cycles must be non-decreasing")
        record = EventRecord(cycle, actor, kind, tuple(sorted(detail.items())))
        self._records.append(record)
        return record

    @property
    def records(self) -> tuple[EventRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def to_text(self) -> str:
        return "".join(r.to_line() + "\n" for r in self._records)


# --------------------------------------------------------------------------
# simulation


class Simulation:
    """Built SoC instance: PUF chip, provisioned controller, wrappers, and
    the sealed policy model.  Owned and driven serially by :func:`run`."""

    def __init__(self, topology: Topology, master_seed: int, mode: str, params: PufParams):
        self.topology = topology
        self.master_seed = master_seed
        self.mode = mode
        self.params = params
        self.cycle = 0
        self.log = EventLog()
        self.epoch = 0
        self._scheduled: list[AttackInjection] = []
        self._forge_serial = 0

        # name <-> id resolution
        self.users: dict[str, UserId] = {}
        self.apps: dict[str, ProcessId] = {}
        self.objects: dict[str, ObjectId] = {}
        self.object_names: dict[ObjectId, str] = {}

        users = []
        processes = []
        for ui, cpu in enumerate(topology.cpus):
            user = UserId(ui)
            users.append(user)
            self.users[cpu.user or cpu.name] = user
            for pi, app in enumerate(cpu.apps):
                proc = ProcessId(owner=user, index=pi)
                processes.append(proc)
                self.apps[app] = proc
        for oi, ip in enumerate(topology.wrapped_ips):
            obj = ObjectId(oi)
            self.objects[ip.object] = obj
            self.object_names[obj] = ip.object

        self.app_names = {proc: name for name, proc in self.apps.items()}

        # matrices: each app gets full access to its mapped IP, nothing else
        matrices = []
        for ui, cpu in enumerate(topology.cpus):
            rows = []
            for app in cpu.apps:
                mapped = self.objects[topology.app_to_ip[app]]
                rows.append(
                    tuple(
                        FULL_ACCESS if obj == mapped else AccessAttribute.NONE
                        for obj in (self.objects[ip.object] for ip in topology.wrapped_ips)
                    )
                )
            matrices.append(AccessMatrix(UserId(ui), tuple(rows)))
        model = build_system(users, processes, tuple(self.objects.values()), matrices)
        self.model: SystemModel = model.sealed()

        # PUF chip + provisioning
        self.chip = new_chip(master_seed & (2**64 - 1), params)
        self.ip_list = tuple(
            (self.objects[ip.object], ip.integrity) for ip in topology.wrapped_ips
        )
        self.registry = WrapperRegistry()
        for ip in topology.wrapped_ips:
            self.registry.wrap(standard_stub(ip.stub), self.objects[ip.object], ip.integrity)
        self.table = None
        self._attack_surface: dict[str, tuple] = {}
        self._provision(initial=True)

        # baseline-mode state: per-object protection signal plus the
        # interconnect-level check that scenario-2 style tampering disables
        self._baseline_secure = {
            ip.object: ip.integrity is IntegrityLevel.HIGH for ip in topology.wrapped_ips
        }
        self._baseline_check_enabled = True

    # -- construction helpers ---------------------------------------------

    def _provision(self, initial: bool) -> None:
        faults = []
        self.table = provision(
            self.chip,
            self.params,
            self.ip_list,
            self.master_seed,
            epoch=self.epoch,
            on_fault=faults.append,
        )
        for fault in faults:
            self.log.append(self.cycle, "controller", "fault", **fault)
        for obj, _level in self.ip_list:
            ip_id, token = self.table.release_credentials(obj)
            self.registry[obj].install_credentials(ip_id, token)
            if initial:
                # boot-time snapshot used only by the explicit attack APIs
                self._attack_surface[self.object_names[obj]] = (ip_id, token)

    def state_digest(self) -> str:
        """Deterministic hash of the initial state (chip, ids, topology)."""
        h = hashlib.sha256()
        h.update(repr(self.topology).encode())
        h.update(repr(self.chip.base_frequencies).encode())
        for obj, _ in self.ip_list:
            h.update(repr((obj, self.table.ip_id_of(obj).value)).encode())
        h.update(str(self.epoch).encode())
        return h.hexdigest()

    # -- authorization paths ----------------------------------------------

    def _authorize(self, txn: WrappedTransaction):
        if self.mode == MODE_TRUSTTOKEN:
            return authorize(self.table, txn, self.model)
        return self._baseline_authorize(txn)

    def _baseline_authorize(self, txn: WrappedTransaction):
        """Signal-gated isolation only: no tokens, one-cycle check at the
        interconnect, bypassed entirely once its signal state is tampered."""
        from .token_authority import AuthorizationOutcome

        name = self.object_names.get(txn.target)
        if name is None:
            return AuthorizationOutcome(False, 1, DenialReason.MALFORMED, serial=txn.serial)
        if not self._baseline_check_enabled or not self._baseline_secure[name]:
            return AuthorizationOutcome(True, 1, serial=txn.serial)
        user = txn.source.owner
        row = self.model.processes_of(user).index(txn.source)
        col = tuple(self.objects.values()).index(txn.target)
        cell = self.model.matrix_for(user).cell(row, col)
        if txn.kind & cell != txn.kind:
            return AuthorizationOutcome(False, 1, DenialReason.MATRIX_DENY, serial=txn.serial)
        return AuthorizationOutcome(True, 1, serial=txn.serial)

    # -- attack construction (explicit injection surface) ------------------

    def _next_forge_serial(self) -> int:
        self._forge_serial -= 1
        return self._forge_serial

    def forged_transaction(
        self,
        app: str,
        target: str,
        attribute: AccessAttribute,
        token: Token,
        ip_id,
        payload: bytes = b"",
    ) -> WrappedTransaction:
        """Build a transaction with attacker-chosen sideband signals,
        bypassing the wrapper (the only forgery path in the simulator)."""
        sideband = SidebandSignals(token, ip_id, IntegrityLevel.HIGH)
        return WrappedTransaction(
            source=self.apps[app],
            target=self.objects[target],
            kind=attribute,
            payload=payload,
            sideband=sideband,
            issue_cycle=self.cycle,
            serial=self._next_forge_serial(),
        )


def build(topology: Topology, master_seed: int, mode: str = MODE_TRUSTTOKEN,
          params: Optional[PufParams] = None) -> Simulation:
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}, expected one of {MODES}")
    topology.validate()
    return Simulation(topology, master_seed, mode, params or PufParams())


def inject_awprot_style_tamper(
    sim: Simulation, target_signal: str, cycle: int, target: Optional[str] = None
) -> None:
    """Schedule an in-flight protection-signal mutation (the classic CAD
    tool attack on AXI AWPROT/ARPROT).  Under token semantics it becomes
    an unauthenticated integrity-level transition request; in baseline
    mode it rewrites the signal directly."""
    if target_signal.upper() not in ("AWPROT", "ARPROT"):
        raise ConfigurationError(f"unknown interconnect signal {target_signal!r}")
    if target is None:
        target = sim.topology.wrapped_ips[0].object
    if target not in sim.objects:
        raise ConfigurationError(f"unknown target object {target!r}")
    sim._scheduled.append(
        AttackInjection(
            kind=AttackKind.TAMPER_INTEGRITY_LEVEL,
            trigger_cycle=cycle,
            params={
                "target": target,
                "new_level": "LOW",
                "token": "none",
                "signal": target_signal.upper(),
            },
        )
    )


# --------------------------------------------------------------------------
# run loop


def run(sim: Simulation, script: Sequence[ScriptEntry], max_cycles: int) -> EventLog:
    """Drive the simulation: entries in cycle order, FIFO within a cycle.

    Every transaction intent yields exactly one issue and one grant/deny
    record; granted payloads produce a response record cycle_cost cycles
    later.  Entries at or beyond max_cycles have no effect.
    """
    entries = [e for e in list(script) + sim._scheduled if _entry_cycle(e) < max_cycles]
    entries.sort(key=_entry_cycle)  # stable: preserves script order within a cycle
    pending: list[tuple[int, str, dict]] = []  # deferred response records

    def flush(up_to: int) -> None:
        keep = []
        for when, actor, detail in pending:
            if when <= up_to:
                sim.log.append(when, actor, "response", **detail)
            else:
                keep.append((when, actor, detail))
        pending[:] = keep

    for entry in entries:
        cycle = _entry_cycle(entry)
        flush(cycle)
        sim.cycle = cycle
        if isinstance(entry, TransactionIntent):
            _run_intent(sim, entry, pending)
        elif isinstance(entry, ReprovisionEvent):
            sim.epoch += 1
            sim._provision(initial=False)
            sim.log.append(cycle, "controller", "reprovision", epoch=sim.epoch)
        else:
            _run_attack(sim, entry, pending)
    flush(max_cycles)
    return sim.log


def _execute_txn(sim: Simulation, actor: str, txn: WrappedTransaction, pending) -> bool:
    """Authorize, log grant/deny, and deliver on grant.  Returns granted."""
    outcome = sim._authorize(txn)
    target_name = sim.object_names.get(txn.target, "?")
    if outcome.granted:
        sim.log.append(
            sim.cycle, "controller", "grant",
            target=target_name, source=actor, cost=outcome.cycle_cost,
        )
        wrapper = sim.registry[txn.target]
        response = wrapper.deliver(txn, outcome)
        pending.append(
            (
                sim.cycle + outcome.cycle_cost,
                target_name,
                {"to": actor, "bytes": (response or b"").hex()},
            )
        )
        return True
    sim.log.append(
        sim.cycle, "controller", "deny",
        target=target_name, source=actor, reason=outcome.reason.value,
        cost=outcome.cycle_cost,
    )
    return False


def _run_intent(sim: Simulation, intent: TransactionIntent, pending) -> bool:
    sim.log.append(sim.cycle, intent.app, "issue", target=intent.target)
    proc = sim.apps.get(intent.app)
    target = sim.objects.get(intent.target)
    if proc is None or target is None:
        sim.log.append(
            sim.cycle, "controller", "deny",
            target=intent.target, source=intent.app,
            reason=DenialReason.MALFORMED.value, cost=1,
        )
        return False
    wrapper = sim.registry[sim.objects[sim.topology.app_to_ip[intent.app]]]
    txn = wrapper.issue(
        target, intent.attribute, intent.payload, source=proc, clock=sim.cycle
    )
    return _execute_txn(sim, intent.app, txn, pending)


def _run_attack(sim: Simulation, attack: AttackInjection, pending) -> None:
    p = dict(attack.params)
    sim.log.append(
        sim.cycle, "attacker", "attack_fired",
        attack=attack.kind.value, **{k: str(v) for k, v in p.items()},
    )
    blocked = False
    detail: dict = {"attack": attack.kind.value}

    if attack.kind is AttackKind.CROSS_IP_ACCESS:
        intent = TransactionIntent(
            cycle=sim.cycle,
            app=str(p["app"]),
            target=str(p["target"]),
            attribute=p.get("attribute", AccessAttribute.READ),
            payload=bytes(p.get("payload", b"")),
        )
        blocked = not _run_intent(sim, intent, pending)

    elif attack.kind in (AttackKind.FORGE_TOKEN, AttackKind.REPLAY_STALE_TOKEN):
        app = str(p["app"])
        target = str(p["target"])
        ip_id, token = sim._attack_surface[target]
        if attack.kind is AttackKind.FORGE_TOKEN:
            token = token.flipped(int(p.get("flip_bit", 0)))
        sim.log.append(sim.cycle, app, "issue", target=target)
        txn = sim.forged_transaction(
            app, target, p.get("attribute", AccessAttribute.READ), token, ip_id
        )
        blocked = not _execute_txn(sim, app, txn, pending)

    elif attack.kind is AttackKind.TAMPER_INTEGRITY_LEVEL:
        target = str(p["target"])
        new_level = IntegrityLevel(str(p.get("new_level", "LOW")))
        detail["target"] = target
        if sim.mode == MODE_TRUSTTOKEN:
            if p.get("token") == "stolen":
                presented = sim._attack_surface[target][1]
            else:
                presented = ZERO_TOKEN
            outcome = request_integrity_transition(
                sim.table, sim.objects[target], presented, new_level
            )
            sim.log.append(
                sim.cycle, "controller", "transition",
                target=target, to=new_level.value,
                status="granted" if outcome.granted else "denied",
                **({} if outcome.granted else {"reason": outcome.reason.value}),
            )
            blocked = not outcome.granted
        else:
            sim._baseline_secure[target] = new_level is IntegrityLevel.HIGH
            sim.log.append(
                sim.cycle, "interconnect", "transition",
                target=target, to=new_level.value, status="granted",
            )
            blocked = False

    elif attack.kind is AttackKind.TAMPER_INTERCONNECT_SIGNAL:
        if sim.mode == MODE_TRUSTTOKEN:
            # unauthorized actor tries to rewrite the attacker app's matrix row
            app = str(p.get("app", sim.topology.cpus[0].apps[0]))
            target = str(p.get("target", sim.topology.wrapped_ips[0].object))
            proc = sim.apps[app]
            try:
                modify_matrix(
                    sim.model, Actor.USER, proc.owner, proc,
                    sim.objects[target], FULL_ACCESS,
                )
            except MatrixTamperError:
                detail["reason"] = DenialReason.MATRIX_TAMPER.value
                blocked = True
        else:
            sim._baseline_check_enabled = False
            blocked = False

    else:  # pragma: no cover - enum is closed
        raise SimulationFault(f"unhandled attack kind {attack.kind}")

    if blocked:
        sim.log.append(sim.cycle, "controller", "attack_blocked", **detail)


# --------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class SummaryReport:
    grants: int
    denies: int
    denials_by_reason: tuple[tuple[str, int], ...]
    transitions_granted: int
    transitions_denied: int
    attacks_fired: int
    attacks_blocked: int
    verdict: str  # BLOCKED / BREACHED / NONE
    cycle_cost_histogram: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {
            "grants": self.grants,
            "denies": self.denies,
            "denials_by_reason": dict(self.denials_by_reason),
            "transitions": {
                "granted": self.transitions_granted,
                "denied": self.transitions_denied,
            },
            "attacks": {"fired": self.attacks_fired, "blocked": self.attacks_blocked},
            "verdict": self.verdict,
            "cycle_cost_histogram": {str(k): v for k, v in self.cycle_cost_histogram},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def report(log: EventLog) -> SummaryReport:
    """Summarize a run: grant/deny totals, attack verdict, cost histogram."""
    grants = denies = fired = blocked = t_granted = t_denied = 0
    reasons: dict[str, int] = {}
    costs: dict[int, int] = {}
    for rec in log.records:
        detail = dict(rec.detail)
        if rec.kind == "grant":
            grants += 1
            costs[detail["cost"]] = costs.get(detail["cost"], 0) + 1
        elif rec.kind == "deny":
            denies += 1
            reasons[detail["reason"]] = reasons.get(detail["reason"], 0) + 1
            costs[detail["cost"]] = costs.get(detail["cost"], 0) + 1
        elif rec.kind == "transition":
            if detail["status"] == "granted":
                t_granted += 1
            else:
                t_denied += 1
                reason = detail.get("reason", "unknown")
                reasons[reason] = reasons.get(reason, 0) + 1
        elif rec.kind == "attack_fired":
            fired += 1
        elif rec.kind == "attack_blocked":
            blocked += 1
    if fired == 0:
        verdict = "NONE"
    elif blocked == fired:
        verdict = "BLOCKED"
    else:
        verdict = "BREACHED"
    return SummaryReport(
        grants=grants,
        denies=denies,
        denials_by_reason=tuple(sorted(reasons.items())),
        transitions_granted=t_granted,
        transitions_denied=t_denied,
        attacks_fired=fired,
        attacks_blocked=blocked,
        verdict=verdict,
        cycle_cost_histogram=tuple(sorted(costs.items())),
    )
