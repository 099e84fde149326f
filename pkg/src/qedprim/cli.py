"""Command-line entry point: build circuits, run batteries, emit CSV/JSON tables."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .circuit import Circuit, CircuitError
from .experiments import (
    certify_cnot,
    exact_certification,
    exact_mqc,
    exact_mqc_distributions,
    exact_tomography,
    sampled_mqc,
    sampled_tomography,
)
from .layout import (
    CouplingGraph,
    FlagPlacement,
    LayoutError,
    flagged_chain,
    ghz75_layout,
    place_type0_flags,
    place_type1_flags,
)
from .metrics import ghz_distribution, hellinger_fidelity
from .postprocess import MitigationSpec, pmax_diagnostic
from .protocols import (
    FanoutSpec,
    GhzSpec,
    TeleportSpec,
    bell_from_cnot,
    build_fanout,
    build_fully_unitary_cnot,
    build_ghz,
    build_measurement_based_cnot,
    build_mixed_style_bell,
    build_mixed_style_cnot,
    build_unitary_ed_bell,
    build_unitary_ed_cnot,
    measure_data,
)
from .qasm import export_qasm
from .sim import PRESETS, NoiseModel, OracleLimitError, SimulationLimitError, get_preset, sample_counts

EXIT_OK, EXIT_CONFIG, EXIT_LIMIT = 0, 2, 3

CNOT_VARIANTS = ("ued", "mb", "mb-unmerged", "fud", "mixed")
PROTOCOLS = tuple(f"cnot-{v}" for v in CNOT_VARIANTS) + ("bell-ued", "bell-mixed", "ghz", "fanout")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Resolved settings for one command; mirrors the CLI flags and the --config JSON keys."""

    command: str
    protocol: str = ""
    params: dict = field(default_factory=dict)
    preset: str = "noiseless"
    noise: dict | None = None
    shots: int = 1000
    seed: int = 0
    postselect: bool = True
    feedforward: bool = True
    mitigate: bool = False
    exact: bool = False
    flag_policy: str = "best"

    def __post_init__(self):
        if self.noise is None and self.preset not in PRESETS:
            raise ConfigError(f"unknown noise preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.shots < 1:
            raise ConfigError("shots must be at least 1")
        if self.flag_policy not in ("all", "best"):
            raise ConfigError("flag policy must be 'all' or 'best'")

    def noise_model(self) -> NoiseModel:
        if self.noise is not None:
            try:
                return NoiseModel.from_dict(self.noise)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid inline noise model: {exc}") from exc
        return get_preset(self.preset)

    def provenance(self) -> dict:
        nm = self.noise_model()
        return {"seed": self.seed, "shots": self.shots, "preset": nm.name, "noise_digest": nm.digest(),
                "exact": self.exact, "version": __version__}


# -- circuit construction ---------------------------------------------------------


def _pairs(text: str | None, n: int) -> list[tuple[int, int]]:
    if text is None:
        return [(n - 2, n - 1), (n // 2, n // 2 + 1)] if n >= 5 else []
    if not text.strip():
        return []
    out = []
    for item in text.split(","):
        a, b = item.split("-")
        out.append((int(a), int(b)))
    return out


def ghz_instance(params: dict) -> Circuit:
    """GHZ preparation on a flagged chain or on the 75-qubit heavy-hex layout."""
    kind = params.get("flags", "type0")
    if kind not in ("none", "type0", "type1"):
        raise ConfigError("--flags must be none, type0 or type1")
    if params.get("layout") == "ghz75":
        g, data, root = ghz75_layout()
        flags = [] if kind == "none" else place_type0_flags(g, data)
        return build_ghz(GhzSpec(g, tuple(data), root, tuple(flags)))
    n = int(params.get("chain", 8))
    if n < 2:
        raise ConfigError("--chain must be at least 2")
    pairs = _pairs(params.get("pairs"), n) if kind != "none" else []
    base = flagged_chain(n, pairs)
    flags = [FlagPlacement(n + i, p) for i, p in enumerate(pairs)]
    g = base
    if kind == "type1":
        pendant = base.n_nodes
        g = CouplingGraph.from_edges(list(base.edges) + [(1, pendant)], pendant + 1)
        flags += place_type1_flags(g, range(n), exclude=[f.flag for f in flags])
    root = int(params.get("root", (n - 1) // 2))
    return build_ghz(GhzSpec(g, tuple(range(n)), root, tuple(flags)))


def build_protocol(name: str, params: dict) -> Circuit:
    n = int(params.get("n", 6))
    detect = bool(params.get("detect", False))
    k = int(params.get("k", 1))
    if name == "cnot-ued":
        return build_unitary_ed_cnot(TeleportSpec(n, detect))
    if name == "cnot-mb":
        return build_measurement_based_cnot(TeleportSpec(n, False, "mb"), merged=True)
    if name == "cnot-mb-unmerged":
        return build_measurement_based_cnot(TeleportSpec(n, False, "mb"), merged=False)
    if name == "cnot-fud":
        return build_fully_unitary_cnot(TeleportSpec(n, detect, "fud"))
    if name == "cnot-mixed":
        return build_mixed_style_cnot(TeleportSpec(n, detect, "mixed", k))
    if name == "bell-ued":
        return build_unitary_ed_bell(n, detect)
    if name == "bell-mixed":
        return build_mixed_style_bell(n, k, detect)
    if name == "ghz":
        return measure_data(ghz_instance(params))
    if name == "fanout":
        length = int(params.get("path_len", 10))
        targets = tuple(int(t) for t in str(params.get("targets", "3,5,9")).split(","))
        return build_fanout(FanoutSpec(int(params.get("control", 0)), targets, tuple(range(length))))
    raise ConfigError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOLS)}")


def cnot_variant(variant: str, n: int, detect: bool, k: int = 1) -> Circuit:
    if variant not in CNOT_VARIANTS:
        raise ConfigError(f"unknown CNOT variant {variant!r}; choose from {', '.join(CNOT_VARIANTS)}")
    if variant.startswith("mb") and detect:
        raise ConfigError("the measurement-based variant has no flags")
    return build_protocol(f"cnot-{variant}", {"n": n, "detect": detect, "k": k})


def _stats_line(name: str, c: Circuit) -> str:
    st = c.stats()
    return (f"{name}: qubits={c.n_qubits} depth={st.two_qubit_depth} cnots={st.n_cnot} swaps={st.n_swap} "
            f"measurements={st.n_measure} (optional={st.n_measure_optional}) "
            f"fingerprint={c.fingerprint()}")


# -- output helpers ------------------------------------------------------------------


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


def _fmt(v):
    return f"{v:.10g}" if isinstance(v, float) else v


def _int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        if "-" in part:
            a, b = part.split("-")
            out += list(range(int(a), int(b) + 1))
        elif part.strip():
            out.append(int(part))
    return out


# -- commands --------------------------------------------------------------------------


def cmd_build(cfg: ExperimentConfig, out: Path) -> int:
    c = build_protocol(cfg.protocol, cfg.params)
    _write(out, f"{cfg.protocol}.json", c.to_json() + "\n")
    _write(out, f"{cfg.protocol}.qasm", export_qasm(c))
    print(_stats_line(cfg.protocol, c))
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    c = build_protocol(cfg.protocol, cfg.params)
    counts = sample_counts(c, cfg.noise_model(), cfg.shots, cfg.seed)
    report = {"protocol": cfg.protocol, "params": cfg.params, "provenance": cfg.provenance(),
              "circuit": c.fingerprint(), "counts": counts.to_dict(),
              "pmax": pmax_diagnostic(counts).to_dict()}
    _write(out, "run.json", _json(report))
    print(_stats_line(cfg.protocol, c))
    print(f"shots={counts.n_shots} distinct={len(counts.counts)}")
    return EXIT_OK


def cmd_certify_cnot(cfg: ExperimentConfig, out: Path) -> int:
    variant = cfg.params.get("variant", "ued")
    ns = _int_list(cfg.params.get("n", "4,6,8"))
    detect_mode = cfg.params.get("detect", "both")
    detects = {"on": [True], "off": [False], "both": [False, True]}.get(detect_mode)
    if detects is None:
        raise ConfigError("--detect must be on, off or both")
    if variant.startswith("mb"):
        detects = [False]
    noise = cfg.noise_model()
    rows = []
    for n in ns:
        for det in detects:
            c = cnot_variant(variant, n, det, int(cfg.params.get("k", 1)))
            if cfg.exact:
                res, acc = exact_certification(c, noise, cfg.postselect, cfg.feedforward)
                f, std, disc = res.f_gate, 0.0, 1.0 - acc
            else:
                r = certify_cnot(c, noise, cfg.shots, cfg.seed, cfg.postselect, cfg.feedforward)
                f, std, disc = r["F_gate"], r["std"], r["discard"]
            rows.append({"n": n, "variant": variant, "detect": int(det), "F_gate": f, "std": std,
                         "discard": disc, "circuit": c.fingerprint(), **cfg.provenance()})
            print(f"n={n} variant={variant} detect={int(det)} F_gate={f:.4f} std={std:.4f} discard={disc:.4f}")
    header = ["n", "variant", "detect", "F_gate", "std", "discard"]
    _write(out, "certify_cnot.csv", _csv(header, rows))
    _write(out, "certify_cnot.json", _json({"command": "certify-cnot", "config": asdict(cfg), "rows": rows}))
    return EXIT_OK


def cmd_ghz_mqc(cfg: ExperimentConfig, out: Path) -> int:
    ghz = ghz_instance(cfg.params)
    noise = cfg.noise_model()
    n_flags = len(ghz.metadata["flag_bits"])
    mit = MitigationSpec.from_noise(range(ghz.n_bits + len(ghz.metadata["data_qubits"])), noise) \
        if cfg.mitigate else None
    dists = exact_mqc_distributions(ghz, noise) if cfg.exact else None
    sampled_cache: dict = {}

    def evaluate(subset):
        if subset in sampled_cache:
            return sampled_cache[subset]
        if cfg.exact:
            res, disc = exact_mqc(ghz, noise, subset, dists)
            val = {"result": res, "std": 0.0, "discard": disc}
        else:
            val = sampled_mqc(ghz, noise, cfg.shots, cfg.seed, subset, mit)
        sampled_cache[subset] = val
        return val

    sizes = range(n_flags + 1) if cfg.flag_policy == "best" else [n_flags]
    rows = []
    for size in sizes:
        best = None
        for sub in itertools.combinations(range(n_flags), size):
            v = evaluate(sub)
            if best is None or v["result"].fidelity > best[1]["result"].fidelity:
                best = (sub, v)
        sub, v = best
        r = v["result"]
        rows.append({"flags": size, "subset": " ".join(map(str, sub)), "C": r.coherence, "P": r.population,
                     "F": r.fidelity, "H_F": r.hellinger, "gme": int(r.gme), "std": v["std"],
                     "discard": v["discard"], "circuit": ghz.fingerprint(), **cfg.provenance()})
        print(f"flags={size} subset=[{rows[-1]['subset']}] C={r.coherence:.4f} P={r.population:.4f} "
              f"F={r.fidelity:.4f} H_F={r.hellinger:.4f} discard={v['discard']:.4f}")
    header = ["flags", "subset", "C", "P", "F", "H_F", "gme", "std", "discard"]
    _write(out, "ghz_mqc.csv", _csv(header, rows))
    _write(out, "ghz_mqc.json", _json({"command": "ghz-mqc", "config": asdict(cfg), "rows": rows}))
    return EXIT_OK


def cmd_tomography(cfg: ExperimentConfig, out: Path) -> int:
    variant = cfg.params.get("variant", "ued")
    n = int(cfg.params.get("n", 6))
    c = cnot_variant(variant, n, bool(cfg.params.get("detect", False)), int(cfg.params.get("k", 1)))
    bell = bell_from_cnot(c)
    noise = cfg.noise_model()
    if cfg.exact:
        res, disc = exact_tomography(bell, noise, cfg.postselect, cfg.feedforward)
        std = {"fidelity": 0.0, "purity": 0.0, "concurrence": 0.0}
    else:
        r = sampled_tomography(bell, noise, cfg.shots, cfg.seed, cfg.postselect, cfg.feedforward)
        res, disc, std = r["result"], r["discard"], r["std"]
    report = {"command": "tomography", "config": asdict(cfg), "variant": variant, "n": n,
              "circuit": bell.fingerprint(), "provenance": cfg.provenance(), "discard": disc, "std": std,
              **res.to_dict()}
    _write(out, "tomography.json", _json(report))
    print(f"variant={variant} n={n} fidelity={res.fidelity:.4f} purity={res.purity:.4f} "
          f"concurrence={res.concurrence:.4f} discard={disc:.4f}")
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig, out: Path) -> int:
    files = sorted(p for p in out.glob("*.json") if p.name != "report.json")
    if not files:
        raise ConfigError(f"no result files in {out}")
    summary = {}
    for p in files:
        data = json.loads(p.read_text())
        if "rows" in data:
            summary[p.name] = data["rows"]
        elif "fidelity" in data:
            summary[p.name] = {k: data[k] for k in ("fidelity", "purity", "concurrence", "discard", "std")}
        elif "counts" in data:
            counts = data["counts"]["counts"]
            total = sum(counts.values())
            summary[p.name] = {"shots": total, "distinct": len(counts), "pmax": data.get("pmax")}
        else:
            continue
        print(f"{p.name}: {json.dumps(summary[p.name], sort_keys=True)[:200]}")
    _write(out, "report.json", _json({"version": __version__, "results": summary}))
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "run": cmd_run,
    "certify-cnot": cmd_certify_cnot,
    "ghz-mqc": cmd_ghz_mqc,
    "tomography": cmd_tomography,
    "report": cmd_report,
}

# parameters forwarded to builders; everything else is an ExperimentConfig field
PARAM_KEYS = ("n", "detect", "k", "chain", "flags", "pairs", "root", "layout", "path_len", "control",
              "targets", "variant")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys set option defaults")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--shots", type=int, default=1000)
    common.add_argument("--out", default="qedprim_out", help="output directory")
    common.add_argument("--preset", default="noiseless", help=f"noise preset: {', '.join(sorted(PRESETS))}")

    p = argparse.ArgumentParser(prog="qedprim", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def protocol_args(sp):
        sp.add_argument("protocol", help=", ".join(PROTOCOLS))
        sp.add_argument("--n", type=int, default=6, help="teleportation distance")
        sp.add_argument("--detect", action="store_true", help="add flag measurements")
        sp.add_argument("--k", type=int, default=1, help="mixed-style block count")
        sp.add_argument("--chain", type=int, default=8, help="GHZ chain length")
        sp.add_argument("--flags", default="type0", help="GHZ flags: none, type0, type1")
        sp.add_argument("--pairs", default=None, help="checked pairs, e.g. 8-9,5-6")
        sp.add_argument("--layout", default=None, help="ghz75 for the heavy-hex instance")
        sp.add_argument("--path-len", type=int, default=10)
        sp.add_argument("--control", type=int, default=0)
        sp.add_argument("--targets", default="3,5,9")

    protocol_args(sub.add_parser("build", parents=[common], help="write circuit JSON/QASM, print stats"))
    protocol_args(sub.add_parser("run", parents=[common], help="sample counts for one circuit"))

    stages = argparse.ArgumentParser(add_help=False)
    stages.add_argument("--no-postselect", dest="postselect", action="store_false")
    stages.add_argument("--no-feedforward", dest="feedforward", action="store_false",
                        help="post-select zero-correction shots instead of applying corrections")
    stages.add_argument("--exact", action="store_true", help="use exact oracle distributions")

    sp = sub.add_parser("certify-cnot", parents=[common, stages], help="gate fidelity vs distance")
    sp.add_argument("--variant", default="ued", help=", ".join(CNOT_VARIANTS))
    sp.add_argument("--n", default="4,6,8", help="comma list or a-b range")
    sp.add_argument("--detect", default="both", help="on, off or both")
    sp.add_argument("--k", type=int, default=1)

    sp = sub.add_parser("ghz-mqc", parents=[common, stages], help="MQC fidelity vs flag count")
    sp.add_argument("--chain", type=int, default=8)
    sp.add_argument("--flags", default="type0")
    sp.add_argument("--pairs", default=None)
    sp.add_argument("--layout", default=None)
    sp.add_argument("--flag-policy", default="best", help="best subset per size, or all flags")
    sp.add_argument("--mitigate", action="store_true", help="flag-first readout mitigation")

    sp = sub.add_parser("tomography", parents=[common, stages], help="distant Bell-pair tomography")
    sp.add_argument("--variant", default="ued")
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--detect", action="store_true")
    sp.add_argument("--k", type=int, default=1)

    sub.add_parser("report", parents=[common], help="summarize result JSON files in --out")
    return p


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    defaults = vars(parser.parse_args([args.command] + (["x"] if hasattr(args, "protocol") else [])))
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest == "noise":
            args.noise = value
            continue
        if dest not in vars(args) or dest in ("command", "config"):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, dest) == defaults.get(dest):
            setattr(args, dest, value)


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    ns = vars(args)
    params = {k: ns[k] for k in PARAM_KEYS if k in ns}
    return ExperimentConfig(
        command=args.command, protocol=ns.get("protocol", ""), params=params, preset=args.preset,
        noise=ns.get("noise"), shots=int(args.shots), seed=int(args.seed),
        postselect=ns.get("postselect", True), feedforward=ns.get("feedforward", True),
        mitigate=ns.get("mitigate", False), exact=ns.get("exact", False),
        flag_policy=ns.get("flag_policy", "best"),
    )


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg, Path(args.out))
    except (SimulationLimitError, OracleLimitError) as exc:
        print(f"error: simulation limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (ConfigError, CircuitError, LayoutError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
