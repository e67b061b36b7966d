"""Strategy synthesis for probabilistic business processes under impact bounds."""

from .dsl import ParseError, emit_dot, parse_process, pretty_print
from .game import build_game_board, solve_board, synthesize_strategy
from .oracle import brute_force_expected_impacts, decide_strategy_exists
from .process_model import gateway_partition, unravel_loops, validate_process
from .spin import translate_to_spin, validate_structured_acyclic

__version__ = "0.1.0"

__all__ = [
    "ParseError",
    "brute_force_expected_impacts",
    "build_game_board",
    "decide_strategy_exists",
    "emit_dot",
    "gateway_partition",
    "parse_process",
    "pretty_print",
    "solve_board",
    "synthesize_strategy",
    "translate_to_spin",
    "unravel_loops",
    "validate_process",
    "validate_structured_acyclic",
]
