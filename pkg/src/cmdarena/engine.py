"""Fixed-tick, two-agent arena simulation.

Everything here is deterministic: all durations are integer tick counts,
resolution order within a tick is fixed (timers, movement, attack starts,
projectile spawn, projectile flight, melee resolution, tackle rush,
outcome), and floats only go through arithmetic with a fixed evaluation
order.  Replaying the same seed and intent sequence reproduces the exact
per-tick state hash on any platform.

Combat numbers live in BattleConfig and can be loaded from a flat JSON
file, so balance tweaks never touch code.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

from .vm import ActionTimings, Intent, Move, SensorSnapshot, StartAttack

SIDES = ("A", "B")

ATTACKS = ("thunderbolt", "iron_tail", "tackle")


@dataclass(frozen=True)
class BattleConfig:
    tick_dt: float = 0.05
    arena_half_extent: float = 20.0
    agent_radius: float = 0.5
    spawn_x: float = 8.0
    max_hp: float = 100.0
    move_speed: float = 4.0
    thunderbolt_speed: float = 15.0
    thunderbolt_radius: float = 0.5
    thunderbolt_damage: float = 10.0
    thunderbolt_cooldown_s: float = 2.0
    thunderbolt_cast_s: float = 0.2
    iron_tail_range: float = 2.0
    iron_tail_arc_deg: float = 120.0
    iron_tail_damage: float = 15.0
    iron_tail_windup_s: float = 0.4
    iron_tail_cooldown_s: float = 1.5
    tackle_speed: float = 10.0
    tackle_max_distance: float = 5.0
    tackle_damage: float = 12.0
    tackle_cooldown_s: float = 3.0
    tackle_miss_stun_s: float = 0.5
    battle_time_limit_s: float = 180.0
    # movement-action tuning shared with the VM
    approach_stop_distance: float = 1.5
    retreat_stop_distance: float = 10.0
    move_to_arrival_epsilon: float = 0.25

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"config field {f.name} must be positive")
        if self.spawn_x >= self.arena_half_extent:
            raise ValueError("spawn point outside arena")

    def ticks(self, seconds: float) -> int:
        return max(1, round(seconds / self.tick_dt))

    @property
    def time_limit_ticks(self) -> int:
        return round(self.battle_time_limit_s / self.tick_dt)

    def cooldown_ticks(self, attack: str) -> int:
        return self.ticks(
            {
                "thunderbolt": self.thunderbolt_cooldown_s,
                "iron_tail": self.iron_tail_cooldown_s,
                "tackle": self.tackle_cooldown_s,
            }[attack]
        )

    def timings(self) -> ActionTimings:
        return ActionTimings(
            thunderbolt_busy_s=self.thunderbolt_cast_s,
            iron_tail_busy_s=self.iron_tail_windup_s,
            tackle_busy_s=self.tackle_max_distance / self.tackle_speed,
            approach_stop_distance=self.approach_stop_distance,
            retreat_stop_distance=self.retreat_stop_distance,
            arrival_epsilon=self.move_to_arrival_epsilon,
        )

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BattleConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        config = cls(**{k: float(v) for k, v in data.items()})
        config.validate()
        return config


@dataclass
class AgentState:
    side: str
    x: float
    z: float
    facing_x: float
    facing_z: float
    hp: float
    cooldowns: dict[str, int] = field(
        default_factory=lambda: {a: 0 for a in ATTACKS}
    )
    status: str = "normal"  # normal | attacking | stunned
    attack_kind: str | None = None
    phase_ticks: int = 0
    locked_dir_x: float = 0.0  # iron-tail arc direction, fixed at windup start
    locked_dir_z: float = 0.0
    rush_left: float = 0.0  # remaining tackle distance budget (m)

    @property
    def status_text(self) -> str:
        if self.status == "attacking":
            return f"attacking:{self.attack_kind}"
        return self.status


@dataclass
class Projectile:
    x: float
    z: float
    vx: float
    vz: float
    owner: str


@dataclass(frozen=True)
class Outcome:
    winner: str  # "A" | "B" | "draw"
    reason: str  # "ko" | "timeout" | "forfeit"


@dataclass
class WorldState:
    config: BattleConfig
    seed: int
    tick: int
    agents: dict[str, AgentState]
    projectiles: list[Projectile] = field(default_factory=list)
    paused: bool = False
    outcome: Outcome | None = None


def other_side(side: str) -> str:
    return "B" if side == "A" else "A"


def new_battle(config: BattleConfig, seed: int) -> WorldState:
    config.validate()
    agents = {
        "A": AgentState("A", -config.spawn_x, 0.0, 1.0, 0.0, config.max_hp),
        "B": AgentState("B", config.spawn_x, 0.0, -1.0, 0.0, config.max_hp),
    }
    return WorldState(config=config, seed=seed, tick=0, agents=agents)


def sensors_for(world: WorldState, side: str) -> SensorSnapshot:
    me = world.agents[side]
    opp = world.agents[other_side(side)]
    return SensorSnapshot(
        distance_to_opponent=math.hypot(opp.x - me.x, opp.z - me.z),
        self_hp=me.hp,
        opponent_hp=opp.hp,
        self_x=me.x,
        self_z=me.z,
        opponent_x=opp.x,
        opponent_z=opp.z,
        elapsed_time=world.tick * world.config.tick_dt,
        opponent_is_attacking=opp.status == "attacking",
    )


def set_paused(world: WorldState, flag: bool) -> None:
    world.paused = flag


def tick(world: WorldState, intent_a: Intent, intent_b: Intent) -> list[dict]:
    """Advance one tick; a paused or finished battle is a strict no-op."""
    if world.paused or world.outcome is not None:
        return []
    cfg = world.config
    world.tick += 1
    events: list[dict] = []
    intents = {"A": intent_a, "B": intent_b}
    # attacks whose cast/windup ends this tick: (side, kind, aim direction)
    completed: list[tuple[str, str, float, float]] = []

    # (1) timers and cooldowns
    for side in SIDES:
        agent = world.agents[side]
        for attack in ATTACKS:
            if agent.cooldowns[attack] > 0:
                agent.cooldowns[attack] -= 1
        if agent.status == "attacking" and agent.attack_kind in ("thunderbolt", "iron_tail"):
            agent.phase_ticks -= 1
            if agent.phase_ticks <= 0:
                completed.append(
                    (side, agent.attack_kind, agent.locked_dir_x, agent.locked_dir_z)
                )
                _clear_status(agent)
        elif agent.status == "stunned":
            agent.phase_ticks -= 1
            if agent.phase_ticks <= 0:
                _clear_status(agent)

    # (2) movement intents (only free-standing agents move)
    for side in SIDES:
        agent = world.agents[side]
        intent = intents[side]
        if isinstance(intent, Move) and agent.status == "normal":
            agent.x = _clamp(agent.x + intent.dx * cfg.move_speed * cfg.tick_dt, cfg)
            agent.z = _clamp(agent.z + intent.dz * cfg.move_speed * cfg.tick_dt, cfg)

    # (3) attack starts
    for side in SIDES:
        agent = world.agents[side]
        intent = intents[side]
        if not isinstance(intent, StartAttack):
            continue
        kind = intent.kind
        if kind not in ATTACKS or agent.status != "normal" or agent.cooldowns[kind] > 0:
            continue  # ignored: busy, stunned or cooling down
        agent.cooldowns[kind] = cfg.cooldown_ticks(kind)
        agent.status = "attacking"
        agent.attack_kind = kind
        opp = world.agents[other_side(side)]
        if kind == "thunderbolt":
            agent.phase_ticks = cfg.ticks(cfg.thunderbolt_cast_s)
        elif kind == "iron_tail":
            agent.phase_ticks = cfg.ticks(cfg.iron_tail_windup_s)
            agent.locked_dir_x, agent.locked_dir_z = _unit_or_facing(agent, opp)
        else:  # tackle
            agent.rush_left = cfg.tackle_max_distance
        events.append({"kind": "attack_started", "side": side, "attack": kind})

    # (4) completed thunderbolt casts spawn projectiles
    for side, kind, _, _ in completed:
        if kind != "thunderbolt":
            continue
        agent = world.agents[side]
        opp = world.agents[other_side(side)]
        dx, dz = _unit_or_facing(agent, opp)
        world.projectiles.append(
            Projectile(
                x=agent.x,
                z=agent.z,
                vx=dx * cfg.thunderbolt_speed,
                vz=dz * cfg.thunderbolt_speed,
                owner=side,
            )
        )
        events.append({"kind": "projectile_spawned", "side": side})

    # (5) projectile flight, hits, arena exit
    hit_radius = cfg.thunderbolt_radius + cfg.agent_radius
    survivors: list[Projectile] = []
    for proj in world.projectiles:
        proj.x += proj.vx * cfg.tick_dt
        proj.z += proj.vz * cfg.tick_dt
        target = world.agents[other_side(proj.owner)]
        if math.hypot(target.x - proj.x, target.z - proj.z) <= hit_radius:
            _damage(target, cfg.thunderbolt_damage)
            events.append(
                {
                    "kind": "hit",
                    "attack": "thunderbolt",
                    "side": proj.owner,
                    "target": target.side,
                    "damage": cfg.thunderbolt_damage,
                }
            )
            continue
        if abs(proj.x) > cfg.arena_half_extent or abs(proj.z) > cfg.arena_half_extent:
            events.append({"kind": "projectile_expired", "side": proj.owner})
            continue
        survivors.append(proj)
    world.projectiles = survivors

    # (6) iron tail resolution at windup end
    for side, kind, aim_x, aim_z in completed:
        if kind != "iron_tail":
            continue
        agent = world.agents[side]
        opp = world.agents[other_side(side)]
        dist = math.hypot(opp.x - agent.x, opp.z - agent.z)
        if dist <= cfg.iron_tail_range and _within_arc(agent, opp, dist, aim_x, aim_z, cfg):
            _damage(opp, cfg.iron_tail_damage)
            events.append(
                {
                    "kind": "hit",
                    "attack": "iron_tail",
                    "side": side,
                    "target": opp.side,
                    "damage": cfg.iron_tail_damage,
                }
            )

    # (7) tackle rushes
    contact_radius = 2 * cfg.agent_radius
    for side in SIDES:
        agent = world.agents[side]
        if agent.status != "attacking" or agent.attack_kind != "tackle":
            continue
        opp = world.agents[other_side(side)]
        dist = math.hypot(opp.x - agent.x, opp.z - agent.z)
        if dist > 0.0:
            step = min(cfg.tackle_speed * cfg.tick_dt, agent.rush_left)
            agent.x = _clamp(agent.x + (opp.x - agent.x) / dist * step, cfg)
            agent.z = _clamp(agent.z + (opp.z - agent.z) / dist * step, cfg)
            agent.rush_left -= step
        if math.hypot(opp.x - agent.x, opp.z - agent.z) <= contact_radius:
            _damage(opp, cfg.tackle_damage)
            _clear_status(agent)
            events.append(
                {
                    "kind": "hit",
                    "attack": "tackle",
                    "side": side,
                    "target": opp.side,
                    "damage": cfg.tackle_damage,
                }
            )
        elif agent.rush_left <= 0.0:
            agent.status = "stunned"
            agent.attack_kind = None
            agent.phase_ticks = cfg.ticks(cfg.tackle_miss_stun_s)

    # (8) outcome
    a_dead = world.agents["A"].hp <= 0
    b_dead = world.agents["B"].hp <= 0
    if a_dead and b_dead:
        world.outcome = Outcome("draw", "ko")
    elif a_dead:
        world.outcome = Outcome("B", "ko")
    elif b_dead:
        world.outcome = Outcome("A", "ko")
    elif world.tick >= cfg.time_limit_ticks:
        hp_a, hp_b = world.agents["A"].hp, world.agents["B"].hp
        if hp_a > hp_b:
            world.outcome = Outcome("A", "timeout")
        elif hp_b > hp_a:
            world.outcome = Outcome("B", "timeout")
        else:
            world.outcome = Outcome("draw", "timeout")

    # (9) facing + end event
    for side in SIDES:
        agent = world.agents[side]
        opp = world.agents[other_side(side)]
        dx, dz = opp.x - agent.x, opp.z - agent.z
        norm = math.hypot(dx, dz)
        if norm > 0.0:
            agent.facing_x, agent.facing_z = dx / norm, dz / norm
    if world.outcome is not None:
        events.append(
            {
                "kind": "battle_end",
                "winner": world.outcome.winner,
                "reason": world.outcome.reason,
            }
        )
    return events


def _clear_status(agent: AgentState) -> None:
    agent.status = "normal"
    agent.attack_kind = None
    agent.phase_ticks = 0
    agent.rush_left = 0.0
    agent.locked_dir_x = 0.0
    agent.locked_dir_z = 0.0


def _damage(agent: AgentState, amount: float) -> None:
    agent.hp = max(0.0, agent.hp - amount)


def _clamp(value: float, cfg: BattleConfig) -> float:
    return max(-cfg.arena_half_extent, min(cfg.arena_half_extent, value))


def _unit_or_facing(agent: AgentState, opp: AgentState) -> tuple[float, float]:
    dx, dz = opp.x - agent.x, opp.z - agent.z
    norm = math.hypot(dx, dz)
    if norm == 0.0:
        return agent.facing_x, agent.facing_z
    return dx / norm, dz / norm


def _within_arc(
    agent: AgentState,
    opp: AgentState,
    dist: float,
    aim_x: float,
    aim_z: float,
    cfg: BattleConfig,
) -> bool:
    if dist == 0.0:
        return True
    ux, uz = (opp.x - agent.x) / dist, (opp.z - agent.z) / dist
    cos_angle = ux * aim_x + uz * aim_z
    return cos_angle >= math.cos(math.radians(cfg.iron_tail_arc_deg / 2))


def state_hash(world: WorldState) -> str:
    """Stable hex digest of the full simulation state."""
    payload = {
        "tick": world.tick,
        "seed": world.seed,
        "paused": world.paused,
        "agents": [
            {
                "side": a.side,
                "x": a.x,
                "z": a.z,
                "facing_x": a.facing_x,
                "facing_z": a.facing_z,
                "hp": a.hp,
                "cooldowns": a.cooldowns,
                "status": a.status,
                "attack_kind": a.attack_kind,
                "phase_ticks": a.phase_ticks,
                "locked_dir_x": a.locked_dir_x,
                "locked_dir_z": a.locked_dir_z,
                "rush_left": a.rush_left,
            }
            for a in (world.agents[s] for s in SIDES)
        ],
        "projectiles": [
            {"x": p.x, "z": p.z, "vx": p.vx, "vz": p.vz, "owner": p.owner}
            for p in world.projectiles
        ],
        "outcome": (
            {"winner": world.outcome.winner, "reason": world.outcome.reason}
            if world.outcome
            else None
        ),
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def snapshot(world: WorldState) -> dict:
    """The protocol ``state`` message payload."""
    return {
        "type": "state",
        "tick": world.tick,
        "agents": [
            {
                "side": a.side,
                "x": a.x,
                "z": a.z,
                "hp": a.hp,
                "status": a.status_text,
            }
            for a in (world.agents[s] for s in SIDES)
        ],
        "projectiles": [{"x": p.x, "z": p.z} for p in world.projectiles],
        "paused": world.paused,
    }
