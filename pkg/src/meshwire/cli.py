"""Command line front end: route, print, report, serve.

Exit codes: 0 success, 1 routing or validation failure, 2 input error.
`route` and `print` are pure functions of their input files, so re-runs
on unchanged inputs produce byte-identical outputs.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .designfile import load_design, save_design
from .electrical import NAMED_CONDUCTORS, design_report
from .engrave import validate_printable
from .errors import DesignError, MeshError
from .meshio import load_mesh, save_mesh

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2

_path = click.Path(path_type=Path)


def _die(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _load(design_path: Path, mesh_path: Path):
    try:
        mesh = load_mesh(mesh_path)
    except (MeshError, OSError) as e:
        _die(EXIT_INPUT, f"cannot load mesh {mesh_path}: {e}")
    try:
        return load_design(design_path, mesh=mesh)
    except DesignError as e:
        _die(EXIT_INPUT, f"cannot load design {design_path}: {e}")


def _route_missing(doc):
    # designs saved by `route` carry every trace; fill in any the file
    # did not have so print/report always see a fully attempted layout
    for net_name, net in doc.schematic.nets.items():
        for eid in net.edges:
            if (net_name, eid) not in doc.layout.traces:
                doc.reroute_edge(net_name, eid)


@click.group()
def main():
    """Route circuit traces on a curved surface and export printable solids."""


@main.command()
@click.argument("design", type=_path)
@click.argument("mesh", type=_path)
@click.option("-o", "--out", type=_path, default=None,
              help="routed design destination (default: DESIGN, in place)")
def route(design, mesh, out):
    """Route every net edge and write the updated design."""
    doc, mesh_ref = _load(design, mesh)
    doc.route_all()
    save_design(out or design, doc, mesh_ref)
    done = [(k, t) for k, t in doc.traces_sorted() if t.routed]
    failed = [(k, t) for k, t in doc.traces_sorted() if not t.routed]
    total = sum(t.length for _, t in done)
    click.echo(
        f"routed {len(done)}/{len(done) + len(failed)} edges,"
        f" total {total:.2f} mm"
    )
    for (net, eid), t in failed:
        line = f"FAILED {net}#{eid}: {t.failure_reason}"
        if t.endpoints is not None:
            pa, pb = (doc.mesh.embed(sp) for sp in t.endpoints)
            line += (
                f" between ({pa[0]:.2f}, {pa[1]:.2f}, {pa[2]:.2f})"
                f" and ({pb[0]:.2f}, {pb[1]:.2f}, {pb[2]:.2f})"
            )
        click.echo(line)
    sys.exit(EXIT_FAILURE if failed else EXIT_OK)


@main.command("print")
@click.argument("design", type=_path)
@click.argument("mesh", type=_path)
@click.option("-o", "--out", type=_path, required=True,
              help="engraved STL destination")
@click.option("--force", is_flag=True,
              help="export even with failed traces or clearance violations")
def print_cmd(design, mesh, out, force):
    """Carve channels and drill pin holes, validate, export an STL."""
    doc, _ = _load(design, mesh)
    _route_missing(doc)
    failed = [k for k, t in doc.traces_sorted() if not t.routed]
    violations = doc.check_clearance()
    if failed or violations:
        for net, eid in failed:
            reason = doc.layout.traces[(net, eid)].failure_reason
            click.echo(f"failed trace {net}#{eid}: {reason}", err=True)
        for v in violations:
            click.echo(f"clearance violation: {v}", err=True)
        if not force:
            _die(EXIT_FAILURE, "refusing to export; fix the design or pass --force")
        click.echo("--force given: exporting anyway", err=True)

    engraved, holes = doc.build_printable()
    report = validate_printable(engraved)
    out.write_bytes(save_mesh(engraved))
    click.echo(report.format_text())
    bad = [h for h in holes if not h["ok"]]
    for h in bad:
        click.echo(
            f"hole skipped: {h['part']} pin {h['pin']}: {h['error']}", err=True
        )
    click.echo(
        f"wrote {out}: {engraved.n_faces} faces,"
        f" {len(holes) - len(bad)}/{len(holes)} holes drilled"
    )
    sys.exit(EXIT_OK if report.ok and not bad else EXIT_FAILURE)


@main.command()
@click.argument("design", type=_path)
@click.argument("mesh", type=_path)
@click.option("--current", "current_ma", type=float, default=2.0,
              show_default=True, help="per-trace current in mA")
@click.option("--conductor", type=click.Choice(sorted(NAMED_CONDUCTORS)),
              default="copper_tape", show_default=True)
def report(design, mesh, current_ma, conductor):
    """Per-edge length, resistance, and voltage-drop table."""
    doc, _ = _load(design, mesh)
    _route_missing(doc)
    rep = design_report(doc, NAMED_CONDUCTORS[conductor], current_ma / 1000.0)
    click.echo(rep.format_text())
    sys.exit(EXIT_FAILURE if rep.failed_edges else EXIT_OK)


@main.command()
@click.argument("design", type=_path)
@click.argument("mesh", type=_path)
@click.option("--port", type=int, default=8765, show_default=True,
              help="local websocket port (0 picks a free one)")
def serve(design, mesh, port):
    """Host the live editing session on a local websocket."""
    from .session import serve_forever

    doc, mesh_ref = _load(design, mesh)
    try:
        serve_forever(doc, port, mesh_ref=mesh_ref)
    except OSError as e:
        _die(EXIT_INPUT, f"cannot bind port {port}: {e}")


if __name__ == "__main__":
    main()
