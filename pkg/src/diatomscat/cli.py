"""Command line entry point: ``diatomscat <command> config.ini``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .basis import channel_csv
from .driver import (RunConfig, ScanResult, _Setup, distinguishable_decomposition, initial_cms_scan,
                     load_config, rate_constant, run_scan, write_scan_csv)
from .observables import dump_smatrix
from .potential import ConfigurationError
from .units import CM_TO_K

log = logging.getLogger("diatomscat")

COMMANDS = ("scan", "distribution", "decompose", "initial-scan", "dump-channels", "dump-smatrix")


def _fmt(x: float) -> str:
    return f"{x:.10e}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _scan(cfg: RunConfig, out: Path) -> int:
    res = run_scan(cfg)
    _write(out / "scan.csv", write_scan_csv(res))
    return _status(res)


def _distribution(cfg: RunConfig, out: Path) -> int:
    res = run_scan(cfg)
    _write(out / "distribution.csv", write_scan_csv(res, finals="inelastic"))
    return _status(res)


def _status(res: ScanResult) -> int:
    for p in res.points:
        if not p.ok:
            log.error("%s at %g K failed: %s", p.initial, p.energy, p.error)
    for w in res.warnings:
        log.warning("%s", w)
    return 1 if res.failed else 0


def _decompose(cfg: RunConfig, out: Path) -> int:
    lines = ["# distinguishable-molecule pathways; units: E_K kelvin, sigma_A2 angstrom^2, rate_cm3s cm^3 s^-1",
             f"# config_sha256 = {cfg.digest}"]
    rows = []
    status = 0
    for lab in cfg.initial:
        for e in sorted(cfg.energies):
            try:
                d = distinguishable_decomposition(cfg, lab, e)
            except RuntimeError as exc:
                log.error("%s", exc)
                status = 1
                continue
            init = "[{}{};{}{}]".format(*lab)
            for kind in ("rotational", "vibrational"):
                fin, sig = d[kind]
                rows.append([_fmt(e), init, kind, "[{}{};{}{}]".format(*fin), _fmt(sig),
                             _fmt(rate_constant(sig, e, cfg.reduced_mass))])
    _write(out / "decomposition.csv", _csv(lines, ["E_K", "initial_cms", "pathway", "final_cms",
                                                   "sigma_A2", "rate_cm3s"], rows))
    return status


def _initial_scan(cfg: RunConfig, out: Path) -> int:
    lines = ["# total inelastic cross section per initial CMS; units: E_K kelvin, sigma_A2 angstrom^2",
             f"# config_sha256 = {cfg.digest}"]
    rows = []
    status = 0
    for e in sorted(cfg.energies):
        for r in initial_cms_scan(cfg, cfg.initial, e):
            if r["error"]:
                log.error("%s at %g K failed: %s", r["initial"], e, r["error"])
                status = 1
                continue
            rows.append([_fmt(e), "({}{}{}{})".format(*r["initial"]), r["family"],
                         _fmt(r["sigma_inelastic"]),
                         _fmt(rate_constant(r["sigma_inelastic"], e, cfg.reduced_mass))])
    _write(out / "initial_scan.csv", _csv(lines, ["E_K", "initial_cms", "family", "sigma_inelastic_A2",
                                                  "rate_cm3s"], rows))
    return status


def _dump_channels(cfg: RunConfig, out: Path) -> int:
    setup = _Setup(cfg)
    dist = not cfg.symmetry.identical
    parts = [f"# energy zero {setup.energy_zero * CM_TO_K:.10e} K above the monomer minima; "
             "threshold_K relative to the monomer minima\n"]
    header = True
    for J, p in setup.blocks():
        blk = setup.build(J, p)
        text = channel_csv(blk.channels, dist)
        parts.append(text if header else text.split("\n", 1)[1])
        header = False
    _write(out / "channels.csv", "".join(parts))
    return 0


def _dump_smatrix(cfg: RunConfig, out: Path) -> int:
    res = run_scan(cfg, keep_smatrix=True)
    dist = not cfg.symmetry.identical
    for p in res.points:
        for sb in p.s_blocks:
            b = sb.block
            if b is None:           # no open channels in this block
                continue
            name = (f"smatrix_{p.initial.name(dist).strip('()[]').replace(';', '-')}_E{p.energy:.6e}K"
                    f"_J{b.J}{'p' if b.parity > 0 else 'm'}.txt")
            _write(out / "smatrix" / name, dump_smatrix(sb, p.energy))
    return _status(res)


def _csv(comments, columns, rows) -> str:
    import io
    buf = io.StringIO()
    for c in comments:
        buf.write(c + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


HANDLERS = {
    "scan": _scan,
    "distribution": _distribution,
    "decompose": _decompose,
    "initial-scan": _initial_scan,
    "dump-channels": _dump_channels,
    "dump-smatrix": _dump_smatrix,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diatomscat",
                                 description="Coupled-channel diatom-diatom scattering runs.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", help="INI run file")
    ap.add_argument("--output-dir", help="directory for CSV output (overrides [run] output_dir)")
    ap.add_argument("--threads", type=int, help="worker threads (overrides [run] threads)")
    ap.add_argument("--verbose", "-v", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        over = {}
        if args.output_dir:
            over["output_dir"] = args.output_dir
        if args.threads is not None:
            over["threads"] = args.threads
        if over:
            cfg = cfg.replace(**over)
        return HANDLERS[args.command](cfg, Path(cfg.output_dir))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
