"""Scenario files: a line-oriented format describing one experiment.

A scenario bundles a task set with the policy under test and the
parameters of any attack or defense involved, so experiments can be
stored, diffed, and replayed.  The format is deliberately plain:

    # full-line comments and blank lines are ignored
    name = demo
    seed = 42
    policy = flush
    hyperperiods = 4

    [task]
    id = 1
    C = 1
    T = 4
    priority = 1
    security_level = 2

    [security]
    mode = total_order
    flush_cost = 1

Top-level keys come first, then one [task] section per task and at most
one of each parameter section.  Keys are `key = value`; a few keys repeat
(alert, pair) or take several values (profile).  Errors carry the line
number they were found on.  emit_scenario() writes a file that parses
back to an equal Scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from schedlab.flush import PAIRWISE, TOTAL_ORDER, SecurityPolicy
from schedlab.shuffle import GUARD_BUDGET, GUARD_NONE, MODES, TASK_ONLY
from schedlab.tasks import (
    PERIODIC,
    SPORADIC,
    Task,
    TaskSet,
    rate_monotonic,
    validate,
)

POLICIES = ("vanilla", "nonpreemptive", "shuffle", "flush", "monitor")


class ScenarioError(ValueError):
    """Parse or validation failure; `line` is 1-based, 0 for file-level."""

    def __init__(self, message: str, line: int = 0):
        prefix = f"line {line}: " if line else ""
        super().__init__(prefix + message)
        self.line = line


@dataclass(frozen=True)
class ShuffleConfig:
    mode: str = TASK_ONLY
    guard: str = GUARD_BUDGET


@dataclass(frozen=True)
class RestartConfig:
    period: float
    reboot: float
    compromise_rate: float
    detection_rate: float | None = None
    weight: float = 0.5


@dataclass(frozen=True)
class MonitorConfig:
    scan_task: int
    fine_priority: int = 0
    alerts: tuple = ()
    escalate: bool = True


@dataclass(frozen=True)
class CacheConfig:
    victim: int
    lines: int = 64
    epsilon: float = 0.0
    profiles: tuple = (8, 48)


@dataclass(frozen=True)
class Scenario:
    name: str
    taskset: TaskSet
    seed: int = 0
    policy: str = "vanilla"
    duration: int | None = None
    hyperperiods: int | None = 1
    shuffle: ShuffleConfig | None = None
    security: SecurityPolicy | None = None
    restart: RestartConfig | None = None
    monitor: MonitorConfig | None = None
    cache: CacheConfig | None = None


def _to_int(raw: str, line: int, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"{key} expects an integer, got {raw!r}", line)


def _to_float(raw: str, line: int, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"{key} expects a number, got {raw!r}", line)


def _to_bool(raw: str, line: int, key: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ScenarioError(f"{key} expects true or false, got {raw!r}", line)


_TASK_KEYS = ("id", "C", "T", "D", "phase", "kind", "priority",
              "security_level", "bcet")
_SECTION_KEYS = {
    "task": set(_TASK_KEYS),
    "shuffle": {"mode", "guard"},
    "security": {"mode", "flush_cost", "pair"},
    "restart": {"period", "reboot", "compromise_rate", "detection_rate",
                "weight"},
    "monitor": {"scan_task", "fine_priority", "alert", "escalate"},
    "cache": {"victim", "lines", "epsilon", "profile"},
}
_REPEATABLE = {("security", "pair"), ("monitor", "alert")}
_TOP_KEYS = {"name", "seed", "policy", "duration", "hyperperiods"}


def _scan(text: str):
    """Split into (top_items, sections); keys keep their line numbers."""
    top: dict[str, tuple] = {}
    sections: list[dict] = []
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError("unterminated section header", lineno)
            name = line[1:-1].strip()
            if name not in _SECTION_KEYS:
                raise ScenarioError(f"unknown section [{name}]", lineno)
            current = {"name": name, "line": lineno, "items": {}}
            sections.append(current)
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not val:
            raise ScenarioError(f"empty value for {key!r}", lineno)
        if current is None:
            if key not in _TOP_KEYS:
                raise ScenarioError(f"unknown top-level key {key!r}", lineno)
            if key in top:
                raise ScenarioError(f"duplicate key {key!r}", lineno)
            top[key] = (val, lineno)
        else:
            sec = current["name"]
            if key not in _SECTION_KEYS[sec]:
                raise ScenarioError(f"unknown key {key!r} in [{sec}]", lineno)
            items = current["items"]
            if key in items and (sec, key) not in _REPEATABLE:
                raise ScenarioError(f"duplicate key {key!r} in [{sec}]", lineno)
            items.setdefault(key, []).append((val, lineno))
    return top, sections


def _one(items: dict, key: str):
    return items[key][0] if key in items else (None, 0)


def _build_task(items: dict, header_line: int) -> Task:
    for required in ("id", "C", "T"):
        if required not in items:
            raise ScenarioError(f"[task] missing required key {required!r}",
                                header_line)
    kw = {}
    for key in ("id", "C", "T", "D", "phase", "priority", "security_level",
                "bcet"):
        raw, line = _one(items, key)
        if raw is not None:
            kw[key] = _to_int(raw, line, key)
    raw, line = _one(items, "kind")
    if raw is not None:
        if raw not in (PERIODIC, SPORADIC):
            raise ScenarioError(f"kind must be {PERIODIC} or {SPORADIC}", line)
        kw["kind"] = raw
    return Task(**kw)


def _build_security(items: dict, header_line: int,
                    task_ids: set) -> SecurityPolicy:
    raw, line = _one(items, "mode")
    mode = raw if raw is not None else TOTAL_ORDER
    if mode not in (TOTAL_ORDER, PAIRWISE):
        raise ScenarioError(f"security mode must be {TOTAL_ORDER} or "
                            f"{PAIRWISE}", line)
    raw, line = _one(items, "flush_cost")
    cost = _to_int(raw, line, "flush_cost") if raw is not None else 1
    pairs = []
    for raw, line in items.get("pair", []):
        parts = raw.split()
        if len(parts) != 2:
            raise ScenarioError("pair expects two task ids", line)
        src, dst = (_to_int(p, line, "pair") for p in parts)
        for tid in (src, dst):
            if tid not in task_ids:
                raise ScenarioError(f"pair references unknown task {tid}", line)
        pairs.append((src, dst))
    if pairs and mode != PAIRWISE:
        raise ScenarioError("pair entries require mode = pairwise",
                            header_line)
    try:
        return SecurityPolicy(mode=mode, flush_cost=cost,
                              pairs=frozenset(pairs))
    except ValueError as exc:
        raise ScenarioError(str(exc), header_line) from None


def _build_sections(sections, task_ids):
    built = {}
    for sec in sections:
        name, line, items = sec["name"], sec["line"], sec["items"]
        if name == "task":
            continue
        if name in built:
            raise ScenarioError(f"duplicate section [{name}]", line)
        if name == "shuffle":
            mode_raw, mline = _one(items, "mode")
            mode = mode_raw if mode_raw is not None else TASK_ONLY
            if mode not in MODES:
                raise ScenarioError(f"shuffle mode must be one of {MODES}",
                                    mline)
            guard_raw, gline = _one(items, "guard")
            guard = guard_raw if guard_raw is not None else GUARD_BUDGET
            if guard not in (GUARD_BUDGET, GUARD_NONE):
                raise ScenarioError("guard must be budget or none", gline)
            built[name] = ShuffleConfig(mode=mode, guard=guard)
        elif name == "security":
            built[name] = _build_security(items, line, task_ids)
        elif name == "restart":
            for required in ("period", "reboot", "compromise_rate"):
                if required not in items:
                    raise ScenarioError(
                        f"[restart] missing required key {required!r}", line)
            vals = {}
            for key in ("period", "reboot", "compromise_rate",
                        "detection_rate", "weight"):
                raw, kline = _one(items, key)
                if raw is not None:
                    vals[key] = _to_float(raw, kline, key)
            built[name] = RestartConfig(**vals)
        elif name == "monitor":
            raw, kline = _one(items, "scan_task")
            if raw is None:
                raise ScenarioError("[monitor] missing required key "
                                    "'scan_task'", line)
            scan = _to_int(raw, kline, "scan_task")
            if scan not in task_ids:
                raise ScenarioError(f"scan_task references unknown task "
                                    f"{scan}", kline)
            raw, kline = _one(items, "fine_priority")
            fine = _to_int(raw, kline, "fine_priority") if raw is not None else 0
            alerts = tuple(
                _to_int(raw, aline, "alert")
                for raw, aline in items.get("alert", [])
            )
            raw, kline = _one(items, "escalate")
            esc = _to_bool(raw, kline, "escalate") if raw is not None else True
            built[name] = MonitorConfig(scan_task=scan, fine_priority=fine,
                                        alerts=alerts, escalate=esc)
        elif name == "cache":
            raw, kline = _one(items, "victim")
            if raw is None:
                raise ScenarioError("[cache] missing required key 'victim'",
                                    line)
            victim = _to_int(raw, kline, "victim")
            if victim not in task_ids:
                raise ScenarioError(f"victim references unknown task {victim}",
                                    kline)
            raw, kline = _one(items, "lines")
            lines = _to_int(raw, kline, "lines") if raw is not None else 64
            raw, kline = _one(items, "epsilon")
            eps = _to_float(raw, kline, "epsilon") if raw is not None else 0.0
            raw, kline = _one(items, "profile")
            if raw is not None:
                profiles = tuple(_to_int(p, kline, "profile")
                                 for p in raw.split())
            else:
                profiles = (8, 48)
            built[name] = CacheConfig(victim=victim, lines=lines, epsilon=eps,
                                      profiles=profiles)
    return built


def parse_scenario(text: str) -> Scenario:
    top, sections = _scan(text)

    raw, line = top.get("name", (None, 0))
    name = raw if raw is not None else "scenario"
    raw, line = top.get("seed", (None, 0))
    seed = _to_int(raw, line, "seed") if raw is not None else 0
    raw, line = top.get("policy", (None, 0))
    policy = raw if raw is not None else "vanilla"
    if policy not in POLICIES:
        raise ScenarioError(f"policy must be one of {POLICIES}", line)
    raw, dur_line = top.get("duration", (None, 0))
    duration = _to_int(raw, dur_line, "duration") if raw is not None else None
    raw, hp_line = top.get("hyperperiods", (None, 0))
    hyperperiods = _to_int(raw, hp_line, "hyperperiods") if raw is not None else None
    if duration is not None and hyperperiods is not None:
        raise ScenarioError("give either duration or hyperperiods, not both",
                            hp_line)
    if duration is None and hyperperiods is None:
        hyperperiods = 1
    for label, value, vline in (("duration", duration, dur_line),
                                ("hyperperiods", hyperperiods, hp_line)):
        if value is not None and value < 1:
            raise ScenarioError(f"{label} must be >= 1", vline)

    task_sections = [s for s in sections if s["name"] == "task"]
    if not task_sections:
        raise ScenarioError("a scenario needs at least one [task] section")
    tasks = [_build_task(s["items"], s["line"]) for s in task_sections]
    with_prio = [t for t in tasks if t.priority is not None]
    if with_prio and len(with_prio) != len(tasks):
        raise ScenarioError(
            "either every task carries a priority or none does")
    if not with_prio:
        tasks = rate_monotonic(tasks)
    ts = TaskSet(tasks=tuple(tasks), name=name)
    problems = validate(ts)
    if problems:
        raise ScenarioError("; ".join(problems))

    task_ids = {t.id for t in ts}
    built = _build_sections(sections, task_ids)

    if policy == "flush" and "security" not in built:
        raise ScenarioError("policy flush needs a [security] section")
    if policy == "monitor" and "monitor" not in built:
        raise ScenarioError("policy monitor needs a [monitor] section")
    if policy == "shuffle" and "shuffle" not in built:
        built["shuffle"] = ShuffleConfig()

    return Scenario(
        name=name,
        taskset=ts,
        seed=seed,
        policy=policy,
        duration=duration,
        hyperperiods=hyperperiods,
        shuffle=built.get("shuffle"),
        security=built.get("security"),
        restart=built.get("restart"),
        monitor=built.get("monitor"),
        cache=built.get("cache"),
    )


def parse_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _fmt(value: float) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def emit_scenario(sc: Scenario) -> str:
    """Canonical text form; parse_scenario(emit_scenario(s)) equals s."""
    out = [f"name = {sc.name}", f"seed = {sc.seed}", f"policy = {sc.policy}"]
    if sc.duration is not None:
        out.append(f"duration = {sc.duration}")
    else:
        out.append(f"hyperperiods = {sc.hyperperiods}")
    for t in sorted(sc.taskset, key=lambda t: t.id):
        out += ["", "[task]", f"id = {t.id}", f"C = {t.C}", f"T = {t.T}",
                f"D = {t.D}", f"phase = {t.phase}", f"kind = {t.kind}",
                f"priority = {t.priority}",
                f"security_level = {t.security_level}"]
        if t.bcet is not None:
            out.append(f"bcet = {t.bcet}")
    if sc.shuffle is not None:
        out += ["", "[shuffle]", f"mode = {sc.shuffle.mode}",
                f"guard = {sc.shuffle.guard}"]
    if sc.security is not None:
        out += ["", "[security]", f"mode = {sc.security.mode}",
                f"flush_cost = {sc.security.flush_cost}"]
        for src, dst in sorted(sc.security.pairs):
            out.append(f"pair = {src} {dst}")
    if sc.restart is not None:
        r = sc.restart
        out += ["", "[restart]", f"period = {_fmt(r.period)}",
                f"reboot = {_fmt(r.reboot)}",
                f"compromise_rate = {_fmt(r.compromise_rate)}"]
        if r.detection_rate is not None:
            out.append(f"detection_rate = {_fmt(r.detection_rate)}")
        out.append(f"weight = {_fmt(r.weight)}")
    if sc.monitor is not None:
        m = sc.monitor
        out += ["", "[monitor]", f"scan_task = {m.scan_task}",
                f"fine_priority = {m.fine_priority}"]
        for alert in m.alerts:
            out.append(f"alert = {alert}")
        out.append(f"escalate = {'true' if m.escalate else 'false'}")
    if sc.cache is not None:
        c = sc.cache
        out += ["", "[cache]", f"victim = {c.victim}", f"lines = {c.lines}",
                f"epsilon = {_fmt(c.epsilon)}",
                "profile = " + " ".join(str(p) for p in c.profiles)]
    return "\n".join(out) + "\n"
