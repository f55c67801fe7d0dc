"""Scripted end-to-end use cases: supply chain, smart tickets, hospital.

Each script drives a :class:`~tagperm.world.World` through the story and
records one pass/fail line per expectation. With an active adversary the
honest story runs unchanged and is followed by an attack epilogue that
pushes recorded (and optionally bit-flipped) traffic back at every tag.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .crypto.symmetric import KEY_SIZE, mint_permission_token
from .methods import OMEGA, Method
from .reader import ProtocolFailure, TokenGrant
from .transport import R2T, flip_bit
from .world import World

DAY = 86400


@dataclass
class Step:
    label: str
    passed: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    name: str
    seed: int
    group: str
    steps: list[Step] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.steps)

    @property
    def first_failure(self) -> Optional[Step]:
        return next((s for s in self.steps if not s.passed), None)


class Script:
    def __init__(self, report: ScenarioReport):
        self.report = report

    def check(self, label: str, fn: Callable[[], bool]) -> bool:
        try:
            ok, detail = bool(fn()), ""
        except Exception as exc:  # a crash is a failed step, reported with its cause
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        self.report.steps.append(Step(label, ok, detail))
        return ok

    def rejected(self, label: str, fn: Callable[[], object]) -> bool:
        """The action must fail at protocol level."""
        def attempt() -> bool:
            try:
                fn()
            except ProtocolFailure:
                return True
            return False
        return self.check(label, attempt)


def _auth_fails(world: World, domain: str, tag: str) -> Callable[[], object]:
    return lambda: world.reader(domain).close_session(world.authenticate(domain, tag))


def forge_permission(world: World, domain: str, class_id: int, method: int) -> None:
    """Give ``domain`` a well-formed token minted under a key it merely guessed.

    Without it the reader would refuse to send the call at all, and the
    tag's own token check would never be exercised.
    """
    rec = world.backoffice.domain(domain)
    expiry = world.clock.now + DAY
    guess = world.backoffice.rng.randbytes(KEY_SIZE)
    rec.tokens.append(TokenGrant(class_id, int(method), rec.domain_id, expiry,
                                 mint_permission_token(guess, int(method), rec.domain_id, expiry)))


# -- scenario 1 ----------------------------------------------------------------

def supply_chain(world: World, s: Script) -> None:
    world.add_domains("M", "R", "C", "S")
    world.new_tag("tv")
    bo = world.backoffice
    svc = bo.register_class("M", "Service")
    retail = bo.register_class("R", "Retail")
    for d in ("M", "R", "C"):
        world.permit(d, OMEGA, Method.INSTALL_OBJECT, d)
    world.permit("M", svc.class_id, [Method.READ, Method.WRITE], "M")
    world.permit("M", svc.class_id, Method.READ, "S")
    world.permit("R", retail.class_id, [Method.READ, Method.WRITE], "R")
    tag = world.tags["tv"].tag

    def take_m():
        world.take_ownership("M", "tv")
        return tag.owner == world.domain_id("M")
    s.check("M takes ownership of the unowned tag", take_m)
    s.rejected("R cannot take ownership of an owned tag", lambda: world.take_ownership("R", "tv"))

    def install_service():
        world.install_object("M", "tv", svc.class_id, svc.key, {"plant": b"Eindhoven", "run": b"2026-41"})
        return svc.class_id in tag.objects
    s.check("M installs its Service object", install_service)

    def service_data():
        world.write("M", "tv", svc.class_id, "retailer", b"R")
        return world.read("M", "tv", svc.class_id, "retailer") == b"R"
    s.check("M writes and reads back service data", service_data)
    s.rejected("accredited S holds a read permission but cannot reach the tag", _auth_fails(world, "S", "tv"))

    def transfer_to_r():
        world.transfer_ownership("M", "R", "tv")
        return tag.owner == world.domain_id("R")
    s.check("M transfers tag ownership to R", transfer_to_r)
    s.rejected("M can no longer authenticate", _auth_fails(world, "M", "tv"))
    s.check("Service object and its data stay on the tag",
            lambda: tag.objects[svc.class_id].payload.get("retailer") == b"R")
    forge_permission(world, "R", svc.class_id, Method.READ)
    s.rejected("R cannot read the Service object without permission",
               lambda: world.read("R", "tv", svc.class_id, "run"))

    def install_retail():
        world.install_object("R", "tv", retail.class_id, retail.key, {})
        world.write("R", "tv", retail.class_id, "price", b"499.00")
        return world.read("R", "tv", retail.class_id, "price") == b"499.00"
    s.check("R installs and fills its Retail object", install_retail)

    def grant_m():
        world.grant_access("R", "M", "tv")
        return world.read("M", "tv", svc.class_id, "run") == b"2026-41"
    s.check("R grants M access and M reads its Service object", grant_m)

    def revoke_m():
        world.revoke_access("R", "M", "tv")
        _auth_fails(world, "M", "tv")()
    s.rejected("after revocation M cannot authenticate", revoke_m)

    def transfer_to_c():
        world.transfer_ownership("R", "C", "tv")
        if tag.owner != world.domain_id("C"):
            return False
        try:
            _auth_fails(world, "R", "tv")()
        except ProtocolFailure:
            return True
        return False
    s.check("R transfers ownership to customer C and loses access", transfer_to_c)

    def service_visit():
        world.grant_access("C", "S", "tv")
        return world.read("S", "tv", svc.class_id, "plant") == b"Eindhoven"
    s.check("C grants S access and S reads the Service object", service_visit)


# -- scenario 2 ----------------------------------------------------------------

def tickets(world: World, s: Script) -> None:
    world.add_domains("ESC", "Tom", "Soccer", "Gym", "Rogue")
    world.new_tag("wristband")
    bo = world.backoffice
    tag = world.tags["wristband"].tag
    soccer = bo.register_class("Soccer", "SoccerTicket")
    gym = bo.register_class("Gym", "GymSlot")
    world.permit("Soccer", soccer.class_id, [Method.READ, Method.WRITE], "Soccer")
    world.permit("Gym", gym.class_id, [Method.READ, Method.WRITE], "Gym")
    # Rogue can mint tokens under the public default management key only
    world.permit("Rogue", OMEGA, Method.INSTALL_OBJECT, "Rogue")

    def take():
        world.take_ownership("ESC", "wristband")
        return tag.owner == world.domain_id("ESC")
    s.check("ESC takes ownership of the blank wristband tag", take)

    esc_key = bo.rng.randbytes(16)

    def rekey_omega():
        world.permit("ESC", OMEGA, Method.UPDATE_CLASS_KEY, "ESC")
        world.update_class_key("ESC", "wristband", OMEGA, esc_key)
        bo.set_class_key("ESC", OMEGA, esc_key)
        return tag.objects[OMEGA].class_key == esc_key
    s.check("ESC sets the management class key to its own secret", rekey_omega)

    def contracts():
        world.permit("ESC", OMEGA, Method.INSTALL_OBJECT, "Soccer")
        world.permit("ESC", OMEGA, Method.INSTALL_OBJECT, "Gym")
        return all(world.reader(d).token_for(OMEGA, Method.INSTALL_OBJECT) for d in ("Soccer", "Gym"))
    s.check("ESC issues install permissions to contracted organisers", contracts)

    def sell():
        world.transfer_ownership("ESC", "Tom", "wristband")
        return tag.owner == world.domain_id("Tom")
    s.check("ESC transfers the wristband to Tom", sell)
    s.rejected("ESC cannot reach the tag after the sale", _auth_fails(world, "ESC", "wristband"))

    def soccer_ticket():
        world.grant_access("Tom", "Soccer", "wristband")
        world.install_object("Soccer", "wristband", soccer.class_id, soccer.key, {"match": b"PSV-AJA row 12"})
        return soccer.class_id in tag.objects
    s.check("Tom grants the soccer club access and it installs a ticket", soccer_ticket)
    s.check("the gate reads the soccer ticket from the tag",
            lambda: world.read("Soccer", "wristband", soccer.class_id, "match") == b"PSV-AJA row 12")

    def rogue_install():
        world.grant_access("Tom", "Rogue", "wristband")
        world.install_object("Rogue", "wristband", 99, bo.rng.randbytes(16), {"ticket": b"fake"})
    s.rejected("an organiser without an ESC permission cannot install", rogue_install)

    def gym_slot():
        world.grant_access("Tom", "Gym", "wristband")
        world.install_object("Gym", "wristband", gym.class_id, gym.key, {"slot": b"tue 07:00"})
        return world.read("Gym", "wristband", gym.class_id, "slot") == b"tue 07:00"
    s.check("the gym installs and reads its own slot booking", gym_slot)
    forge_permission(world, "Gym", soccer.class_id, Method.READ)
    forge_permission(world, "Tom", soccer.class_id, Method.READ)
    s.rejected("the gym cannot read the soccer ticket",
               lambda: world.read("Gym", "wristband", soccer.class_id, "match"))
    s.rejected("Tom, as tag owner, cannot read ticket contents without permission",
               lambda: world.read("Tom", "wristband", soccer.class_id, "match"))

    def tom_reencrypts():
        before = {d: e.encid for d, e in tag.access.items()}
        applied = world.reencrypt_all("Tom", "wristband")
        changed = all(tag.access[d].encid != before[d] for d in before)
        world.read("Soccer", "wristband", soccer.class_id, "match")
        world.read("Gym", "wristband", gym.class_id, "slot")
        return applied == len(before) and changed
    s.check("Tom re-encrypts every identifier and organisers still get in", tom_reencrypts)


# -- scenario 3 ----------------------------------------------------------------

def hospital(world: World, s: Script) -> None:
    world.add_domains("H", "D", "N")
    bo = world.backoffice
    for name in ("implant", "spare", "ward"):
        world.new_tag(name)
    tmon = bo.register_class("H", "Tmon")
    world.permit("H", OMEGA, Method.INSTALL_OBJECT, "H")
    world.permit("H", tmon.class_id, [Method.READ, Method.WRITE], "H")
    world.permit("H", tmon.class_id, Method.UPDATE_CLASS_KEY, "D")
    implant = world.tags["implant"].tag

    def provision():
        for name in ("implant", "spare", "ward"):
            world.take_ownership("H", name)
            world.install_object("H", name, tmon.class_id, tmon.key, {"bpm": b"72"})
        return world.read("H", "implant", tmon.class_id, "bpm") == b"72"
    s.check("H provisions monitoring tags with Tmon objects", provision)

    def access():
        for name in ("implant", "ward"):
            world.grant_access("H", "D", name)
            world.grant_access("H", "N", name)
        return all(world.domain_id(d) in implant.access for d in ("D", "N"))
    s.check("H grants doctor and nurse access to the tags", access)

    d_key = bo.new_object_key("D", tmon.class_id)

    def to_doctor():
        world.update_class_key("D", "implant", tmon.class_id, d_key)
        world.update_class_key("D", "ward", tmon.class_id, d_key)
        return implant.objects[tmon.class_id].class_key == d_key
    s.check("D takes over the implant's Tmon object", to_doctor)
    s.rejected("H's earlier permission on that object is obsolete",
               lambda: world.read("H", "implant", tmon.class_id, "bpm"))
    s.check("H's permission still works on Tmon objects it owns",
            lambda: world.read("H", "spare", tmon.class_id, "bpm") == b"72")

    nurse_expiry = world.permit("D", tmon.class_id, Method.READ, "N", validity=DAY)
    s.check("D lets nurse N read the monitor",
            lambda: world.read("N", "implant", tmon.class_id, "bpm") == b"72")

    def give_back():
        world.permit("D", tmon.class_id, Method.UPDATE_CLASS_KEY, "H")
        world.update_class_key("H", "implant", tmon.class_id, tmon.key)
        return implant.objects[tmon.class_id].class_key == tmon.key
    s.check("on dismissal the Tmon object returns to H", give_back)
    s.rejected("N's permission is invalidated immediately",
               lambda: world.read("N", "implant", tmon.class_id, "bpm"))
    s.check("N's permission still opens D-owned Tmon objects elsewhere",
            lambda: world.read("N", "ward", tmon.class_id, "bpm") == b"72")

    def expire():
        world.clock.advance(nurse_expiry - world.clock.now + 1)
        world.read("N", "ward", tmon.class_id, "bpm")
    s.rejected("once its validity period is over N's permission is refused", expire)
    s.check("tag ownership never left the hospital", lambda: implant.owner == world.domain_id("H"))


SCENARIOS: dict[str, Callable[[World, Script], None]] = {
    "supply-chain": supply_chain,
    "tickets": tickets,
    "hospital": hospital,
}


def attack_epilogue(world: World, s: Script, mode: str, seed: int) -> None:
    """Push every recorded reader frame back at a copy of each tag."""
    rng = random.Random(seed)
    by_session = {}
    for rec in world.transcript.wire():
        if rec.direction == R2T:
            by_session.setdefault(rec.session, []).append(rec.frame)
    for name, h in sorted(world.tags.items()):
        def probe(h=h) -> bool:
            victim = copy.deepcopy(h.tag)
            executed = len(victim.executions)
            for frames in by_session.values():
                for f in frames:
                    if mode == "tamper":
                        f = flip_bit(f, rng.randrange(24, len(f) * 8))
                    victim.handle(f)
                    if victim.session.domain is not None:
                        return False
            return len(victim.executions) == executed
        s.check(f"{mode} of recorded traffic on {name} executes nothing and opens no session", probe)


def run_scenario(name: str, seed: int = 0, group: str = "toy", adversary: str = "none") -> tuple[ScenarioReport, World]:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}")
    world = World.create(group, seed)
    report = ScenarioReport(name, seed, group)
    script = Script(report)
    SCENARIOS[name](world, script)
    if adversary != "none":
        attack_epilogue(world, script, adversary, seed)
    return report, world
