"""Text-commanded two-player arena battles.

Players type free-form commands; a code-generation model (or an offline
keyword mock) turns each command into a small behavior-branch program; a
per-agent VM executes the program one intent per tick inside a
deterministic fixed-tick battle simulation; a websocket session server
keeps two remote players in the same authoritative world and appends
every command and its translation to a JSONL log.
"""

__version__ = "0.1.0"

from .branches import (
    ActionNode,
    BehaviorBranch,
    ConditionNode,
    ControlNode,
    decode_json,
    encode_json,
    validate,
)
from .dsl import StreamParser, StreamStatus, parse, print_canonical
from .engine import BattleConfig, WorldState, new_battle, sensors_for, state_hash
from .translator import mock_translate, translate
from .vm import SensorSnapshot, VmState

__all__ = [
    "ActionNode",
    "BehaviorBranch",
    "BattleConfig",
    "ConditionNode",
    "ControlNode",
    "SensorSnapshot",
    "StreamParser",
    "StreamStatus",
    "VmState",
    "WorldState",
    "decode_json",
    "encode_json",
    "mock_translate",
    "new_battle",
    "parse",
    "print_canonical",
    "sensors_for",
    "state_hash",
    "translate",
    "validate",
]
