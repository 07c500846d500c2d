"""
Command-line front end
Parses system descriptions and subset expressions, runs pressure / dimension /
spectrum / verification commands and writes certified results to disk
"""

import argparse
import json
import logging
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from affinity_config import get_numerics_config, get_output_config, setup_logging
from config import settings
from dimension import affinity_dimension
from errors import (
    AffinityError, ConfigParse, FileIO, SubsetSyntaxError,
)
from ifs_model import (
    GALLERIES, IfsSystem, SubsetSpec, build_gallery, load_system, save_system,
    validate_subset,
)
from langfuse_utils import log_error, log_run_metrics, send_trace_minimal
from pressure import pressure_bound, truncate_with_tail
from spectrum import (
    enumerate_spectrum, isolated_point_demo, non_compact_demo, write_cloud,
)
from verification_battery import VerificationBattery

logger = logging.getLogger(__name__)

COMMANDS = ("pressure", "dim", "spectrum", "verify", "demo")
DEMOS = ("non-compact", "isolated")
DEMO_GALLERIES = {"non-compact": "paper51", "isolated": "isolated52"}
CLOUD_OUTPUTS = (("spectrum", None), ("demo", "isolated"))


@dataclass
class RunConfig:
    command: str
    demo: Optional[str] = None
    gallery: Optional[str] = "paper51"
    params: Dict[str, Any] = field(default_factory=dict)
    system_path: Optional[str] = None
    subset: Optional[str] = None
    s: Optional[float] = None
    tolerance: float = 1e-3
    budget: int = 10_000_000
    n_max: Optional[int] = None
    N: Optional[int] = None
    out: Optional[str] = None
    fmt: str = "json"
    threads: int = 1
    emit_system: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigParse(f"unknown command: {self.command}", {"known": list(COMMANDS)})
        if self.command == "demo" and self.demo not in DEMOS:
            raise ConfigParse(f"unknown demo: {self.demo}", {"known": list(DEMOS)})
        if self.budget < int(get_numerics_config()["min_budget"]):
            raise ConfigParse("budget must be at least 1000 words", {"budget": self.budget})
        if not 0.0 < self.tolerance < 0.5:
            raise ConfigParse("tolerance must lie in (0, 0.5)", {"tolerance": self.tolerance})
        if self.fmt not in get_output_config()["formats"]:
            raise ConfigParse(f"unknown format: {self.fmt}", {"format": self.fmt})
        if self.threads < 1:
            raise ConfigParse("threads must be positive", {"threads": self.threads})
        return self


# ---------------------------------------------------------------------------
# Subset expressions
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<tail>tail\s*\()|(?P<num>\d+)|(?P<range>\.\.)|(?P<punct>[,+)])|(?P<end>$)|(?P<bad>\S))"
)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "bad":
            raise SubsetSyntaxError(f"unexpected character {value!r}", start, {"expr": text})
        if kind == "punct":
            kind = value
        tokens.append((kind, value, start))
        if kind == "end":
            return tokens
        pos = m.end()


class _SubsetParser:
    """expr := term ('+' term)*; term := 'tail(' N ')' | item (',' item)*; item := N ['..' N]"""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self) -> str:
        return self.tokens[self.i][0]

    def _take(self, expected: str, what: str) -> Tuple[str, str, int]:
        token = self.tokens[self.i]
        if token[0] != expected:
            raise SubsetSyntaxError(f"expected {what}", token[2], {"expr": self.text})
        self.i += 1
        return token

    def _number(self) -> int:
        return int(self._take("num", "a natural number")[1])

    def parse(self) -> SubsetSpec:
        base: List[int] = []
        tails: List[int] = []
        while True:
            if self._peek() == "tail":
                self.i += 1
                tails.append(self._number())
                self._take(")", "')'")
            else:
                base.extend(self._items())
            if self._peek() == "end":
                break
            self._take("+", "'+' or end of expression")
        return SubsetSpec(tuple(base), min(tails) if tails else None)

    def _items(self) -> List[int]:
        found: List[int] = []
        while True:
            first = self._number()
            if self._peek() == "range":
                self.i += 1
                start = self.tokens[self.i][2]
                last = self._number()
                if last < first:
                    raise SubsetSyntaxError("range end below its start", start,
                                            {"expr": self.text})
                found.extend(range(first, last + 1))
            else:
                found.append(first)
            if self._peek() != ",":
                return found
            self.i += 1


def parse_subset(expr: str, system: Optional[IfsSystem] = None) -> SubsetSpec:
    """Parse '1,2,5..7', 'tail(5)' and '+' unions into a canonical subset"""
    subset = _SubsetParser(expr).parse()
    if system is not None:
        validate_subset(system, subset)
    return subset


def parse_params(text: Optional[str]) -> Dict[str, Any]:
    """k=v,k=v with ':'-separated lists and 'none'"""
    params: Dict[str, Any] = {}
    if not text:
        return params
    for item in text.split(","):
        if "=" not in item:
            raise ConfigParse(f"parameter without '=': {item}", {"params": text})
        key, value = (part.strip() for part in item.split("=", 1))
        try:
            if value.lower() == "none":
                params[key] = None
            elif ":" in value:
                params[key] = [float(v) for v in value.split(":")]
            else:
                params[key] = float(value)
        except ValueError:
            raise ConfigParse(f"parameter {key} is not numeric: {value}", {"params": text})
    return params


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.{int(get_output_config()['significant_digits'])}g}"


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def load_run_system(config: RunConfig) -> IfsSystem:
    if config.system_path:
        return load_system(config.system_path)
    if config.gallery is None:
        raise ConfigParse("either --system or --gallery is required")
    return build_gallery(config.gallery, config.params)


def _require_subset(config: RunConfig, system: IfsSystem) -> SubsetSpec:
    if not config.subset:
        raise ConfigParse(f"{config.command} needs --subset")
    return parse_subset(config.subset, system)


def _cmd_pressure(config: RunConfig, system: IfsSystem) -> Dict[str, Any]:
    subset = _require_subset(config, system)
    if config.s is None:
        raise ConfigParse("pressure needs --s")
    if subset.is_finite:
        bound = pressure_bound(system, subset, config.s, budget=config.budget,
                               threads=config.threads)
    else:
        start = system.tail.start_index
        N = config.N or max(list(subset.base) + [subset.tail_from, start]) + 7
        bound = truncate_with_tail(system, subset, config.s, N, budget=config.budget,
                                   threads=config.threads)
    print(f"P_{subset.label()}({_fmt(config.s)}) in [{_fmt(bound.lower)}, {_fmt(bound.upper)}] "
          f"{_mark(bound.certified)} method={bound.method} depth={bound.depth}")
    return {"passed": bound.certified, "result": bound.to_dict()}


def _cmd_dim(config: RunConfig, system: IfsSystem) -> Dict[str, Any]:
    subset = _require_subset(config, system)
    interval = affinity_dimension(system, subset, config.tolerance, config.budget,
                                  config.threads, N=config.N)
    print(f"s({subset.label()}) in [{_fmt(interval.lo)}, {_fmt(interval.hi)}] "
          f"width={_fmt(interval.width)} {_mark(interval.certified)} method={interval.method} "
          f"depth={interval.depth_used}")
    return {"passed": interval.certified, "result": interval.to_dict(), "width": interval.width}


def _cmd_spectrum(config: RunConfig, system: IfsSystem) -> Dict[str, Any]:
    cloud = enumerate_spectrum(system, config.n_max, config.tolerance, config.budget,
                               threads=config.threads)
    _print_cloud_summary(cloud)
    if config.out:
        write_cloud(cloud, config.out, config.fmt)
    return {"passed": not cloud.partial, "result": cloud.to_dict()}


def _print_cloud_summary(cloud) -> None:
    print(f"{len(cloud.points)} points over {cloud.ground_set.label()} ({cloud.mode})")
    for a, b in cloud.significant_gaps():
        print(f"  gap ({_fmt(a)}, {_fmt(b)})")
    for candidate in cloud.isolated_candidates:
        lo, hi = candidate["interval"]
        print(f"  isolated candidate [{_fmt(lo)}, {_fmt(hi)}] from {', '.join(candidate['subsets'])}")


def _cmd_verify(config: RunConfig, system: IfsSystem) -> Dict[str, Any]:
    battery = VerificationBattery(system, config.budget, config.tolerance, config.n_max)
    result = battery.run()
    print(battery.get_validation_report(result))
    return {"passed": result["final_result"]["passed"], "result": result}


def _cmd_demo(config: RunConfig, system: IfsSystem) -> Dict[str, Any]:
    if config.demo == "isolated":
        cloud = isolated_point_demo(config.tolerance, config.budget, config.n_max,
                                    config.threads, system)
        _print_cloud_summary(cloud)
        print(f"three-band structure {_mark(cloud.details['bands_hold'])} {cloud.details['bands']}")
        if config.out:
            write_cloud(cloud, config.out, config.fmt)
        return {"passed": bool(cloud.details["bands_hold"]), "result": cloud.to_dict()}
    report = non_compact_demo(budget=config.budget, system=system, n_max=config.n_max)
    print(f"Hausdorff dim of {{1,2,3}} = log 3/log gamma = {_fmt(report.hausdorff_head)}")
    print(f"target log 3/log beta = {_fmt(report.target)}")
    for interval in report.sequence:
        print(f"  s({interval.subset.label()}) - target in "
              f"[{interval.lo - report.target:.6e}, {interval.hi - report.target:.6e}]")
    print(f"strictly above {_mark(report.strictly_above)}  decreasing {_mark(report.decreasing)}  "
          f"shrink factor {_fmt(report.shrink_factor)}")
    if report.hole is not None:
        a, b = report.hole.interval
        print(f"hole ({_fmt(a)}, {_fmt(b)}) {_mark(report.hole.certified)}")
    return {"passed": report.passed, "result": report.to_dict()}


def _write_json(path: str, payload: Dict[str, Any]) -> None:
    try:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, default=str)
    except OSError as e:
        raise FileIO(f"cannot write results: {e}", {"path": path})


def run(config: RunConfig) -> Tuple[int, Dict[str, Any]]:
    """Execute one command; exit status 0 iff every certified check passed"""
    start_time = time.time()
    result: Dict[str, Any] = {"command": config.command, "status": "started"}
    try:
        config.validate()
        system = load_run_system(config)
        if config.emit_system:
            save_system(system, config.emit_system)

        handler = {
            "pressure": _cmd_pressure,
            "dim": _cmd_dim,
            "spectrum": _cmd_spectrum,
            "verify": _cmd_verify,
            "demo": _cmd_demo,
        }[config.command]
        outcome = handler(config, system)
        result.update(outcome)
        result["status"] = "passed" if outcome["passed"] else "failed"
        if config.out and (config.command, config.demo) not in CLOUD_OUTPUTS:
            _write_json(config.out, result)
    except AffinityError as e:
        result["status"] = "error"
        result["error"] = e.to_dict()
        result["passed"] = False
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        log_error(type(e).__name__, str(e), e.to_dict()["context"])

    elapsed = time.time() - start_time
    result["processing_time_seconds"] = elapsed
    send_trace_minimal(
        name=f"affinity_{config.command}",
        input_payload={"command": config.command, "gallery": config.gallery,
                       "subset": config.subset, "s": config.s, "tolerance": config.tolerance,
                       "budget": config.budget},
        output_payload={"status": result["status"], "passed": result.get("passed", False)},
        metadata={"app_name": settings.app_name},
    )
    log_run_metrics(config.command, result["status"], bool(result.get("passed")), elapsed,
                    width=result.get("width"))
    return (0 if result.get("passed") else 1), result


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="affinity",
        description="Certified pressures, affinity dimensions and dimension spectra "
                    "of planar self-affine IFS",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("demo", nargs="?", choices=DEMOS, help="Demo to run with the demo command.")
    p.add_argument("--gallery", choices=sorted(GALLERIES), default=None,
                   help="Built-in system (default: paper51 unless --system is given).")
    p.add_argument("--params", default=None, help="Gallery parameters k=v,... (lists with ':').")
    p.add_argument("--system", dest="system_path", default=None,
                   help="System description file (JSON).")
    p.add_argument("--subset", default=None, help="Subset expression, e.g. '1,2+tail(5)'.")
    p.add_argument("--s", type=float, default=None, help="Exponent for the pressure command.")
    p.add_argument("--tol", type=float, default=settings.default_tolerance, dest="tolerance",
                   help=f"Dimension tolerance (default: {settings.default_tolerance:g}).")
    p.add_argument("--budget", type=int, default=settings.default_budget,
                   help=f"Word budget (default: {settings.default_budget}).")
    p.add_argument("--nmax", type=int, default=None, dest="n_max",
                   help="Largest index of the enumerated ground set.")
    p.add_argument("--N", type=int, default=None, help="Truncation level for cofinite subsets.")
    p.add_argument("--out", default=None, help="Output path.")
    p.add_argument("--format", choices=get_output_config()["formats"], default="json",
                   dest="fmt", help="Output format for spectra (default: json).")
    p.add_argument("--threads", type=int, default=settings.threads,
                   help=f"Worker threads (default: {settings.threads}).")
    p.add_argument("--emit-system", default=None, dest="emit_system",
                   help="Write the system description used by this run.")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    gallery = args.gallery
    if gallery is None and args.system_path is None:
        gallery = DEMO_GALLERIES.get(args.demo, "paper51")
    return RunConfig(
        command=args.command,
        demo=args.demo,
        gallery=gallery,
        params=parse_params(args.params),
        system_path=args.system_path,
        subset=args.subset,
        s=args.s,
        tolerance=args.tolerance,
        budget=args.budget,
        n_max=args.n_max,
        N=args.N,
        out=args.out,
        fmt=args.fmt,
        threads=args.threads,
        emit_system=args.emit_system,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_arg_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ConfigParse as e:
        print(f"✗ {e}", file=sys.stderr)
        return 2
    code, _ = run(config)
    return code


if __name__ == "__main__":
    sys.exit(main())
