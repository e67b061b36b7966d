"""Command line front end and the JSON-over-HTTP service behind the web UI.

Exit codes: 0 success (strategy exists where applicable), 1 no strategy,
2 parse or validation error, 3 state-space budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import dsl, game, oracle
from .process_model import ModelError, gateway_partition
from .rationals import Vec, format_rat, rat
from .spin import ProvenanceMap, SpinError, emit_spin_dot, translate_to_spin

EXIT_OK = 0
EXIT_NO_STRATEGY = 1
EXIT_INPUT_ERROR = 2
EXIT_BUDGET = 3

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    text: str
    bound: Vec | None
    engine: str = "game"
    output: str = "json"
    node_cap: int = 10**6
    seed: int = 0


def parse_bound(raw: str | list) -> Vec:
    """Bounds arrive as '155,7.5' or a JSON list; decimals and fractions
    become exact rationals (floats go through their shortest decimal form)."""
    if isinstance(raw, str):
        parts = [p.strip() for p in raw.split(",")]
    else:
        parts = list(raw)
    out = []
    for p in parts:
        if isinstance(p, float):
            p = str(p)
        out.append(rat(p))
    return tuple(out)


def _span_payload(span: dsl.SourceSpan) -> dict:
    return {"line": span.line, "column": span.column, "length": span.length}


def strategy_json(
    bound: Vec,
    strategy: game.StrategyTree | None,
    board: game.GameBoard,
    prov: ProvenanceMap,
) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "exists": strategy is not None,
        "bound": [format_rat(x) for x in bound],
    }
    if strategy is None:
        doc["decisions"] = []
        doc["finals"] = []
        return doc
    doc["expected_impact"] = [format_rat(x) for x in strategy.expected_impact]
    decisions = []
    for circle, square in sorted(strategy.decisions.items()):
        if len(board.children[circle]) < 2:
            continue  # forced move, not a decision point
        label = board.labels[square] or frozenset()
        decisions.append(
            {
                "history_id": circle,
                "state": str(board.states[circle]),
                "chosen_tasks": _chosen_labels(label, prov),
            }
        )
    doc["decisions"] = decisions
    doc["finals"] = [
        {"id": f, "cost": [format_rat(x) for x in board.cost[f]]}
        for f in strategy.reached_finals
    ]
    return doc


def _chosen_labels(label: frozenset[str], prov: ProvenanceMap) -> list[str]:
    names = set()
    for t in label:
        if t in prov.task_entries:
            names.add(prov.task_entries[t])
        elif t in prov.choice_branches:
            gateway, branch = prov.choice_branches[t]
            names.add(f"{gateway}:{branch}")
    return sorted(names)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_process(cfg_text: str):
    process = dsl.parse_process(cfg_text)
    net, prov = translate_to_spin(process)
    return process, net, prov


def cmd_validate(text: str, out) -> int:
    process = dsl.parse_process(text)
    nature, choice = gateway_partition(process)
    d = process.diagram
    out.write(
        dumps(
            {
                "schema": SCHEMA_VERSION,
                "ok": True,
                "nodes": len(d.nodes),
                "tasks": len(d.tasks()),
                "nature_gateways": sorted(nature),
                "choice_gateways": sorted(choice),
                "impact_dimension": process.impact_dim,
            }
        )
    )
    return EXIT_OK


def cmd_dot(text: str, what: str, out) -> int:
    process, net, _ = _load_process(text)
    if what == "process":
        out.write(dsl.emit_dot(process))
    elif what == "spin":
        out.write(emit_spin_dot(net))
    else:
        board = game.build_game_board(net)
        out.write(game.emit_board_dot(board))
    return EXIT_OK


def cmd_synthesize(cfg: RunConfig, out) -> int:
    _, net, prov = _load_process(cfg.text)
    if len(cfg.bound) != net.impact_dim:
        raise dsl.ParseError(
            f"bound has dimension {len(cfg.bound)}, process has {net.impact_dim}",
            dsl.SourceSpan(1, 1, 1),
        )
    strategy, board = game.synthesize_strategy(net, cfg.bound, node_cap=cfg.node_cap)
    doc = strategy_json(cfg.bound, strategy, board, prov)
    if cfg.output == "human":
        out.write(_human_summary(doc))
    else:
        out.write(dumps(doc))
    return EXIT_OK if strategy is not None else EXIT_NO_STRATEGY


def cmd_decide(cfg: RunConfig, out) -> int:
    _, net, _ = _load_process(cfg.text)
    if len(cfg.bound) != net.impact_dim:
        raise dsl.ParseError(
            f"bound has dimension {len(cfg.bound)}, process has {net.impact_dim}",
            dsl.SourceSpan(1, 1, 1),
        )
    exists, residual = oracle.decide_strategy_exists(net, cfg.bound)
    doc = {
        "schema": SCHEMA_VERSION,
        "exists": exists,
        "bound": [format_rat(x) for x in cfg.bound],
    }
    if residual is not None:
        doc["residual"] = [format_rat(x) for x in residual]
    out.write(dumps(doc))
    return EXIT_OK if exists else EXIT_NO_STRATEGY


def _human_summary(doc: dict) -> str:
    if not doc["exists"]:
        return "no strategy fits the bound [" + ", ".join(doc["bound"]) + "]\n"
    lines = [
        "strategy found",
        "  bound:           [" + ", ".join(doc["bound"]) + "]",
        "  expected impact: [" + ", ".join(doc["expected_impact"]) + "]",
    ]
    for d in doc["decisions"]:
        chosen = ", ".join(d["chosen_tasks"]) or "(wait)"
        lines.append(f"  at {d['state']}: fire {chosen}")
    lines.append(f"  finals reached: {len(doc['finals'])}")
    return "\n".join(lines) + "\n"


def cmd_bench(seeds: int, bounds_per_instance: int, out, seed0: int = 0) -> int:
    """Three-way engine agreement sweep; any disagreement is a hard failure."""
    import random as _random

    disagreements = 0
    checked = 0
    t0 = time.perf_counter()
    for seed in range(seed0, seed0 + seeds):
        process = oracle.random_instance(seed)
        net, _ = translate_to_spin(process)
        assignments = oracle.brute_force_expected_impacts(net)
        vectors = [a.expected_impact for a in assignments]
        rng = _random.Random(seed ^ 0x5EED)
        bounds = _bench_bounds(vectors, bounds_per_instance, rng)
        board = game.build_game_board(net)
        for bound in bounds:
            brute = any(
                all(x <= b for x, b in zip(v, bound)) for v in vectors
            )
            strategy, _ = game.solve_board(board, bound)
            via_game = strategy is not None
            via_rec, _ = oracle.decide_strategy_exists(net, bound)
            checked += 1
            if not (brute == via_game == via_rec):
                disagreements += 1
                out.write(
                    f"DISAGREEMENT seed={seed} bound={[format_rat(x) for x in bound]} "
                    f"brute={brute} game={via_game} recursive={via_rec}\n"
                )
    dt = time.perf_counter() - t0
    out.write(
        f"checked {checked} verdicts over {seeds} instances in {dt:.1f}s: "
        f"{disagreements} disagreements\n"
    )
    return EXIT_OK if disagreements == 0 else 1


def _bench_bounds(vectors: list[Vec], count: int, rng) -> list[Vec]:
    dim = len(vectors[0])
    bounds: list[Vec] = []
    for v in vectors:
        bounds.append(v)  # boundary: equality must win
        if len(bounds) >= count:
            break
    lo = [min(v[i] for v in vectors) for i in range(dim)]
    hi = [max(v[i] for v in vectors) for i in range(dim)]
    while len(bounds) < count:
        mode = rng.random()
        if mode < 0.15:
            bounds.append(tuple(Fraction(0) for _ in range(dim)))
        elif mode < 0.3:
            bounds.append(tuple(x + 1 for x in hi))
        elif mode < 0.5:
            v = rng.choice(vectors)
            i = rng.randrange(dim)
            bounds.append(tuple(x - 1 if j == i else x for j, x in enumerate(v)))
        else:
            bounds.append(
                tuple(
                    lo[i] + Fraction(rng.randint(0, 8), 4) * (hi[i] - lo[i] + 1)
                    for i in range(dim)
                )
            )
    return bounds[:count]


# ---------------------------------------------------------------------------
# HTTP service


_board_slots = threading.Semaphore(os.cpu_count() or 2)


class _Handler(BaseHTTPRequestHandler):
    server_version = "spinsynth/0.1"

    def log_message(self, *args):  # tests run servers; keep stderr quiet
        pass

    def _reply(self, status: int, doc: dict):
        body = dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"ok": True, "schema": SCHEMA_VERSION})
        else:
            self._reply(404, {"error": "unknown endpoint"})

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length") or 0)
            payload = json.loads(self.rfile.read(length) or b"{}")
            if not isinstance(payload, dict):
                raise ValueError("payload must be a JSON object")
        except (ValueError, json.JSONDecodeError) as exc:
            self._reply(400, {"error": f"bad request body: {exc}"})
            return
        if self.path == "/parse":
            self._handle_parse(payload)
        elif self.path == "/synthesize":
            self._handle_synthesize(payload)
        else:
            self._reply(404, {"error": "unknown endpoint"})

    def _handle_parse(self, payload: dict):
        text = payload.get("text")
        if not text:
            self._reply(400, {"error": "missing 'text'"})
            return
        try:
            process = dsl.parse_process(text)
        except dsl.ParseError as exc:
            self._reply(400, {"error": exc.message, "span": _span_payload(exc.span)})
            return
        except Exception as exc:
            self._reply(400, {"error": str(exc)})
            return
        nature, choice = gateway_partition(process)
        self._reply(
            200,
            {
                "schema": SCHEMA_VERSION,
                "ok": True,
                "nodes": len(process.diagram.nodes),
                "tasks": sorted(process.diagram.tasks()),
                "nature_gateways": sorted(nature),
                "choice_gateways": sorted(choice),
                "impact_dimension": process.impact_dim,
                "dot": dsl.emit_dot(process),
            },
        )

    def _handle_synthesize(self, payload: dict):
        text = payload.get("text")
        if not text:
            self._reply(400, {"error": "missing 'text'"})
            return
        if "bound" not in payload:
            self._reply(400, {"error": "missing 'bound'"})
            return
        engine = payload.get("engine", "game")
        started = time.perf_counter()
        try:
            bound = parse_bound(payload["bound"])
            process, net, prov = _load_process(text)
            if len(bound) != net.impact_dim:
                raise ValueError(
                    f"bound has dimension {len(bound)}, process has {net.impact_dim}"
                )
            node_cap = int(payload.get("node_cap", 10**6))
            with _board_slots:
                if engine == "recursive":
                    exists, residual = oracle.decide_strategy_exists(net, bound)
                    doc = {
                        "schema": SCHEMA_VERSION,
                        "exists": exists,
                        "bound": [format_rat(x) for x in bound],
                    }
                    if residual is not None:
                        doc["residual"] = [format_rat(x) for x in residual]
                    board = None
                else:
                    strategy, board = game.synthesize_strategy(
                        net, bound, node_cap=node_cap
                    )
                    doc = strategy_json(bound, strategy, board, prov)
        except dsl.ParseError as exc:
            self._reply(400, {"error": exc.message, "span": _span_payload(exc.span)})
            return
        except game.BudgetExceeded as exc:
            self._reply(413, {"error": str(exc), "nodes_built": exc.nodes_built})
            return
        except Exception as exc:
            self._reply(400, {"error": str(exc)})
            return
        doc["wall_ms"] = round((time.perf_counter() - started) * 1000, 3)
        if board is not None:
            doc["board"] = {
                "nodes": len(board),
                "finals": len(board.finals),
                "moves": board.move_count(),
            }
        self._reply(200, doc)


def serve_api(port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind the service; the caller decides whether to block on it."""
    server = ThreadingHTTPServer((host, port), _Handler)
    return server


def _read_input(args) -> str:
    if getattr(args, "text", None):
        return args.text
    path = args.file
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spinsynth",
        description="Strategy synthesis for probabilistic processes under impact bounds",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("file", nargs="?", default="-", help="process file, or - for stdin")
        p.add_argument("--text", help="inline process text instead of a file")

    p = sub.add_parser("validate", help="check structure and annotations")
    add_input(p)

    p = sub.add_parser("dot", help="Graphviz rendering")
    add_input(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--spin", action="store_true", help="render the translated net")
    g.add_argument("--board", action="store_true", help="render the game board")

    p = sub.add_parser("synthesize", help="search for a winning strategy")
    add_input(p)
    p.add_argument("--bound", required=True, help="comma-separated impact bound")
    p.add_argument("--format", choices=("json", "human"), default="json")
    p.add_argument("--node-cap", type=int, default=10**6)

    p = sub.add_parser("decide", help="existence only, via the recursive engine")
    add_input(p)
    p.add_argument("--bound", required=True, help="comma-separated impact bound")

    p = sub.add_parser("bench", help="three-way engine agreement sweep")
    p.add_argument("--seeds", type=int, default=25)
    p.add_argument("--bounds-per-instance", type=int, default=10)
    p.add_argument("--seed0", type=int, default=0)

    p = sub.add_parser("serve", help="run the JSON-over-HTTP service")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    return ap


def run_cli(argv: list[str]) -> int:
    args = build_arg_parser().parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "validate":
            return cmd_validate(_read_input(args), out)
        if args.command == "dot":
            what = "spin" if args.spin else "board" if args.board else "process"
            return cmd_dot(_read_input(args), what, out)
        if args.command == "synthesize":
            cfg = RunConfig(
                text=_read_input(args),
                bound=parse_bound(args.bound),
                output=args.format,
                node_cap=args.node_cap,
            )
            return cmd_synthesize(cfg, out)
        if args.command == "decide":
            cfg = RunConfig(text=_read_input(args), bound=parse_bound(args.bound))
            return cmd_decide(cfg, out)
        if args.command == "bench":
            return cmd_bench(args.seeds, args.bounds_per_instance, out, args.seed0)
        if args.command == "serve":
            server = serve_api(args.port, args.host)
            host, port = server.server_address[:2]
            out.write(f"serving on http://{host}:{port}\n")
            out.flush()
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
            return EXIT_OK
    except dsl.ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    except game.BudgetExceeded as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except (ValueError, OSError, ModelError, SpinError, oracle.AssignmentCapExceeded) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    raise AssertionError("unreachable")


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
